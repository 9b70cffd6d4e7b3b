//! Benchmark harness: generation of the random nonconvex quadratic test
//! family, an independent ground-truth minimizer, the repeated-run experiment
//! driver, and CSV/text persistence.

pub mod io;
pub mod oracle;

use rayon::prelude::*;

use crate::domain::{
    BlockPiece, BoxSet, Component, MethodKind, Problem, Schedule, StoppingRule, Trace,
};
use crate::error::{Error, Result};
use crate::linalg::{from_orthonormal_eigen, orthonormalize, SymMatrix};
use crate::methods::{run_permuted, run_stochastic, IndexSampler, PermutationSource, RunConfig};
use crate::rng::SplitMix64;
use crate::scalar::{s, Scalar};

pub use oracle::{oracle_minimize, Oracle};

/// Eigenvalue shift for the four full-dimensional quadratic forms; the
/// leading block's matrix is unshifted.
pub const EIGEN_SHIFT: f64 = 0.3;

/// Specification of one generated instance; `(n, seed)` pins it completely.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InstanceSpec {
    pub n: usize,
    pub seed: u64,
    /// Shift added to the drawn eigenvalues of the four full quadratic forms.
    pub eigen_shift: f64,
}

impl InstanceSpec {
    pub fn new(n: usize, seed: u64) -> Result<Self> {
        if n < 2 {
            return Err(Error::invalid(
                "instance dimension must be at least 2 (one leading coordinate plus a block)",
            ));
        }
        Ok(InstanceSpec {
            n,
            seed,
            eigen_shift: EIGEN_SHIFT,
        })
    }
}

/// Number of components in the generated family.
pub const NUM_COMPONENTS: usize = 5;

/// Feasible box for the family: `0 <= x_1 <= 2` and
/// `0 <= x_i <= 5 + i/(3i - 2)` for `i = 2..n` (1-based coordinates).
pub fn gen_box<S: Scalar>(n: usize) -> Result<BoxSet<S>> {
    if n < 2 {
        return Err(Error::invalid("box dimension must be at least 2"));
    }
    let mut upper = Vec::with_capacity(n);
    upper.push(s::<S>(2.0));
    for i in 2..=n {
        let i_s = s::<S>(i as f64);
        upper.push(s::<S>(5.0) + i_s / (s::<S>(3.0) * i_s - s::<S>(2.0)));
    }
    BoxSet::new(vec![S::zero(); n], upper)
}

/// Random symmetric PSD matrix: draws a standard-normal square matrix
/// (row-major), orthonormalizes it by sign-fixed Householder QR, draws
/// eigenvalues `|N(0,1)| + eigen_shift` and assembles `Q diag(d) Q'`.
/// All eigenvalues are at least `eigen_shift` by construction.
pub fn gen_psd_matrix<S: Scalar>(
    dim: usize,
    eigen_shift: f64,
    rng: &mut SplitMix64,
) -> Result<SymMatrix<S>> {
    if dim == 0 {
        return Err(Error::invalid("matrix dimension must be positive"));
    }
    if eigen_shift < 0.0 {
        return Err(Error::invalid("eigenvalue shift must be nonnegative"));
    }
    let gauss: Vec<S> = (0..dim * dim).map(|_| s(rng.next_normal())).collect();
    let q = orthonormalize(dim, &gauss)?;
    let d: Vec<S> = (0..dim)
        .map(|_| s(rng.next_normal().abs() + eigen_shift))
        .collect();
    Ok(from_orthonormal_eigen(dim, &q, &d))
}

/// Generates a problem of the benchmark family:
///
/// * `f_1(x) = -x_1^2 - x_1 + u' A u` with `u = (x_2, ..., x_n)` and `A`
///   PSD without shift;
/// * `f_2 .. f_5` full-dimensional quadratic forms with matrices `B, C, P, Q`
///   whose eigenvalues are shifted by `eigen_shift`.
///
/// Matrices are drawn in the order `A, B, C, P, Q` from one stream derived
/// from the seed, so the instance is reproducible byte for byte.
pub fn gen_instance<S: Scalar>(spec: &InstanceSpec) -> Result<Problem<S>> {
    let feasible = gen_box::<S>(spec.n)?;
    let mut rng = SplitMix64::derive(spec.seed, 0x696e_7374);
    let a = gen_psd_matrix::<S>(spec.n - 1, 0.0, &mut rng)?;
    let mut matrices = Vec::with_capacity(4);
    for _ in 0..4 {
        matrices.push(gen_psd_matrix::<S>(spec.n, spec.eigen_shift, &mut rng)?);
    }
    build_problem(feasible, a, matrices)
}

/// Assembles the family problem from its matrices (shared by the generator
/// and the instance-file loader).
pub(crate) fn build_problem<S: Scalar>(
    feasible: BoxSet<S>,
    a: SymMatrix<S>,
    shifted: Vec<SymMatrix<S>>,
) -> Result<Problem<S>> {
    let n = feasible.dim();
    if a.dim() != n - 1 {
        return Err(Error::DimensionMismatch {
            expected: n - 1,
            got: a.dim(),
        });
    }
    let mut components = Vec::with_capacity(1 + shifted.len());
    components.push(Component::new(vec![
        BlockPiece::neg_quad(0, &feasible)?,
        BlockPiece::quad_form((1..n).collect(), a, &feasible)?,
    ])?);
    for m in shifted {
        components.push(Component::new(vec![BlockPiece::quad_form(
            (0..n).collect(),
            m,
            &feasible,
        )?])?);
    }
    Problem::new(feasible, components)
}

/// Constant Hessian of the family objective:
/// `2 (A (+) 0) - 2 e_1 e_1' + 2 (B + C + P + Q)`.
pub fn aggregate_hessian<S: Scalar>(p: &Problem<S>) -> Result<SymMatrix<S>> {
    use crate::domain::PieceKind;
    let n = p.dim();
    let mut h = SymMatrix::zeros(n);
    for comp in p.components() {
        for piece in comp.pieces() {
            match piece.kind() {
                PieceKind::NegQuad1D => {
                    let c = piece.coords()[0];
                    h.set(c, c, h.get(c, c) - s::<S>(2.0));
                }
                PieceKind::LinLog1D => {
                    // Curvature is state-dependent and negative; use its most
                    // negative value on the interval as a conservative bound.
                    let c = piece.coords()[0];
                    let (lo, _) = piece.bounds();
                    let t = s::<S>(10.0) * lo[0] + S::one();
                    h.set(c, c, h.get(c, c) - s::<S>(100.0) / (t * t));
                }
                PieceKind::QuadForm(m) => {
                    for (si, &ci) in piece.coords().iter().enumerate() {
                        for (sj, &cj) in piece.coords().iter().enumerate() {
                            h.set(ci, cj, h.get(ci, cj) + s::<S>(2.0) * m.get(si, sj));
                        }
                    }
                }
            }
        }
    }
    Ok(h)
}

/// Smallest eigenvalue of the aggregate Hessian: positive means the full
/// objective is strongly convex on the box even though `f_1` is not.
pub fn strong_convexity_certificate<S: Scalar>(p: &Problem<S>) -> Result<S> {
    Ok(aggregate_hessian(p)?.min_eigenvalue())
}

/// One row of the experiment summary table.
#[derive(Debug, Clone)]
pub struct SummaryRow {
    pub method: MethodKind,
    pub n: usize,
    pub epsilon: f64,
    pub runs: usize,
    /// Mean outer iterations: cycles for permuted/cyclic, prox steps for the
    /// stochastic method (this convention is printed with every table).
    pub avg_iterations: f64,
    pub avg_cpu_ms: f64,
}

/// Experiment plan: cross product of methods and epsilons, `runs`
/// repetitions each on one fixed instance.
#[derive(Debug, Clone)]
pub struct ExperimentPlan<S> {
    pub spec: InstanceSpec,
    pub methods: Vec<MethodKind>,
    pub epsilons: Vec<S>,
    pub runs: usize,
    pub schedule: Schedule<S>,
    pub max_outer: usize,
    /// Base seed; repetition seeds derive from it.
    pub seed: u64,
}

/// Results of one experiment: summary rows plus every trace, ordered by
/// (method, epsilon, repetition). When a run fails, `incomplete` carries the
/// failure and the rows/traces hold whatever completed before it, so callers
/// can flush partial results marked as such.
#[derive(Debug)]
pub struct ExperimentResult<S> {
    pub rows: Vec<SummaryRow>,
    pub traces: Vec<(MethodKind, f64, usize, Trace<S>)>,
    pub incomplete: Option<String>,
}

/// Runs the plan. Repetitions execute in parallel (rayon); aggregation is
/// ordered by repetition index so the output is scheduling-independent.
/// Stochastic repetitions get fresh sampler seeds, permuted repetitions fresh
/// permutation seeds; the instance itself is pinned by `plan.spec`.
pub fn run_experiment<S: Scalar>(plan: &ExperimentPlan<S>) -> Result<ExperimentResult<S>> {
    if plan.runs == 0 {
        return Err(Error::invalid("runs must be at least 1"));
    }
    let problem = gen_instance::<S>(&plan.spec)?;
    let x0 = problem.feasible().midpoint();
    let mut result = ExperimentResult {
        rows: Vec::new(),
        traces: Vec::new(),
        incomplete: None,
    };
    'plan: for &method in &plan.methods {
        for &eps in &plan.epsilons {
            let stop = StoppingRule::new(eps, plan.max_outer)?;
            let reps: Vec<Result<Trace<S>>> = (0..plan.runs)
                .into_par_iter()
                .map(|rep| {
                    let config = RunConfig::new(plan.schedule, stop);
                    let rep_seed = plan.seed.wrapping_add(rep as u64);
                    match method {
                        MethodKind::Cyclic => run_permuted(
                            &problem,
                            &PermutationSource::FixedCyclic,
                            &x0,
                            &config,
                        ),
                        MethodKind::Permuted => run_permuted(
                            &problem,
                            &PermutationSource::FreshRandom { seed: rep_seed },
                            &x0,
                            &config,
                        ),
                        MethodKind::Stochastic => {
                            let mut sampler =
                                IndexSampler::new(rep_seed, problem.num_components())?;
                            run_stochastic(&problem, &mut sampler, &x0, &config)
                        }
                    }
                })
                .collect();
            let mut iter_sum = 0.0;
            let mut cpu_sum = 0.0;
            for (rep, trace) in reps.into_iter().enumerate() {
                match trace {
                    Ok(trace) => {
                        iter_sum += trace.iterations() as f64;
                        cpu_sum += trace.elapsed_ms();
                        result
                            .traces
                            .push((method, eps.to_f64().unwrap(), rep, trace));
                    }
                    Err(e) => {
                        result.incomplete = Some(format!(
                            "run failed (method {method}, eps {eps:e}, repetition {rep}): {e}"
                        ));
                        break 'plan;
                    }
                }
            }
            result.rows.push(SummaryRow {
                method,
                n: plan.spec.n,
                epsilon: eps.to_f64().unwrap(),
                runs: plan.runs,
                avg_iterations: iter_sum / plan.runs as f64,
                avg_cpu_ms: cpu_sum / plan.runs as f64,
            });
        }
    }
    Ok(result)
}
