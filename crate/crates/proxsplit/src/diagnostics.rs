//! Machine-checkable certificates of the descent inequalities the splitting
//! methods rely on, plus finite-sample convergence-trend checks for the
//! stochastic method.
//!
//! Each check reports samples, violations beyond its stated tolerance, and
//! the most negative slack observed. Slack is `rhs - lhs` of the inequality
//! being verified, so nonnegative slack means the inequality holds.

use crate::domain::{MethodKind, Problem, Schedule, Trace};
use crate::error::{Error, Result};
use crate::methods::IndexSampler;
use crate::prox::prox_component;
use crate::rng::SplitMix64;
use crate::scalar::{dist2, dot, s, Scalar};

/// Outcome of one inequality check over a batch of samples.
#[derive(Debug, Clone)]
pub struct InequalityReport {
    pub name: String,
    pub samples: usize,
    pub violations: usize,
    /// Most negative slack observed (0 when no samples).
    pub worst_slack: f64,
    pub tolerance: f64,
}

impl InequalityReport {
    fn collect(name: &str, tolerance: f64, slacks: impl IntoIterator<Item = f64>) -> Self {
        let mut samples = 0;
        let mut violations = 0;
        let mut worst: f64 = f64::INFINITY;
        for slack in slacks {
            samples += 1;
            if slack < -tolerance {
                violations += 1;
            }
            worst = worst.min(slack);
        }
        InequalityReport {
            name: name.to_string(),
            samples,
            violations,
            worst_slack: if samples == 0 { 0.0 } else { worst },
            tolerance,
        }
    }

    pub fn passed(&self) -> bool {
        self.violations == 0
    }

    /// Flat JSON object, floats in shortest round-trip form.
    pub fn to_json(&self) -> String {
        format!(
            "{{\"name\":\"{}\",\"samples\":{},\"violations\":{},\"worst_slack\":{:e},\"tolerance\":{:e}}}",
            self.name, self.samples, self.violations, self.worst_slack, self.tolerance
        )
    }
}

/// Tolerances for the individual checks; slack noise is dominated by the
/// inner solver residual, far below these.
pub const TOL_LEMMA: f64 = 1e-9;
pub const TOL_CYCLE: f64 = 1e-7;
pub const TOL_STEP_BOUND: f64 = 1e-9;
pub const TOL_STOCHASTIC: f64 = 1e-9;
pub const TOL_FIRM_NONEXPANSIVE: f64 = 1e-9;
pub const TOL_PROX_ORACLE: f64 = 1e-6;

/// Log-uniform stepsize in `[floor, 2]`, where `floor` is the sampled
/// object's certified stepsize floor: below it the prox-convex inequality is
/// provably violated by adversarial in-box pairs, so violations there would
/// say nothing about the implementation.
fn sample_beta<S: Scalar>(rng: &mut SplitMix64, certified_floor: S) -> S {
    let lo = certified_floor.max(s::<S>(0.01));
    let hi = s::<S>(2.0);
    let u = s::<S>(rng.next_f64());
    lo * (hi / lo).powf(u)
}

/// Per-prox descent inequality: for `x-bar = prox_{beta f}(K, z)` with
/// `z, x` in the box and `beta` above the certified floor,
///
/// ```text
/// f(x-bar) - f(x) <= (alpha / 2 beta) (||z - x||^2 - ||x-bar - x||^2).
/// ```
pub fn check_lemma_descent<S: Scalar>(
    p: &Problem<S>,
    trials: usize,
    seed: u64,
    inner_tol: S,
) -> Result<InequalityReport> {
    if trials == 0 {
        return Err(Error::invalid("trials must be at least 1"));
    }
    let mut rng = SplitMix64::derive(seed, 0x6c65_6d61);
    let mut slacks = Vec::with_capacity(trials);
    for _ in 0..trials {
        let comp = &p.components()[rng.next_index(p.num_components())];
        let alpha = comp.modulus();
        let beta = sample_beta(&mut rng, comp.certified_beta_floor());
        let z = p.feasible().sample(&mut rng);
        let x = p.feasible().sample(&mut rng);
        let xbar = prox_component(comp, &z, beta, p.feasible(), inner_tol)?;
        let lhs = comp.eval(&xbar)? - comp.eval(&x)?;
        let dz = dist2(&z, &x);
        let dx = dist2(&xbar, &x);
        let rhs = alpha / (s::<S>(2.0) * beta) * (dz * dz - dx * dx);
        slacks.push((rhs - lhs).to_f64().unwrap());
    }
    Ok(InequalityReport::collect("lemma_descent", TOL_LEMMA, slacks))
}

/// Defining prox-convex inequality:
/// `f(x-bar) - f(x) <= (alpha/beta) <x-bar - z, x - x-bar>` over the same
/// sampling scheme as [`check_lemma_descent`].
pub fn check_prox_convex_inequality<S: Scalar>(
    p: &Problem<S>,
    trials: usize,
    seed: u64,
    inner_tol: S,
) -> Result<InequalityReport> {
    if trials == 0 {
        return Err(Error::invalid("trials must be at least 1"));
    }
    let mut rng = SplitMix64::derive(seed, 0x7078_6376);
    let mut slacks = Vec::with_capacity(trials);
    for _ in 0..trials {
        let comp = &p.components()[rng.next_index(p.num_components())];
        let alpha = comp.modulus();
        let beta = sample_beta(&mut rng, comp.certified_beta_floor());
        let z = p.feasible().sample(&mut rng);
        let x = p.feasible().sample(&mut rng);
        let xbar = prox_component(comp, &z, beta, p.feasible(), inner_tol)?;
        let lhs = comp.eval(&xbar)? - comp.eval(&x)?;
        let d1: Vec<S> = xbar.iter().zip(&z).map(|(&a, &b)| a - b).collect();
        let d2: Vec<S> = x.iter().zip(&xbar).map(|(&a, &b)| a - b).collect();
        let rhs = alpha / beta * dot(&d1, &d2);
        slacks.push((rhs - lhs).to_f64().unwrap());
    }
    Ok(InequalityReport::collect(
        "prox_convex_inequality",
        TOL_LEMMA,
        slacks,
    ))
}

/// Firm nonexpansiveness of the constrained prox at `beta = 1/alpha`:
/// `||x1 - x2||^2 <= <x1 - x2, z1 - z2>` for centers in the box.
pub fn check_firm_nonexpansive<S: Scalar>(
    p: &Problem<S>,
    trials: usize,
    seed: u64,
    inner_tol: S,
) -> Result<InequalityReport> {
    if trials == 0 {
        return Err(Error::invalid("trials must be at least 1"));
    }
    let mut rng = SplitMix64::derive(seed, 0x666e_6578);
    let mut slacks = Vec::with_capacity(trials);
    for _ in 0..trials {
        let comp = &p.components()[rng.next_index(p.num_components())];
        let beta = S::one() / comp.modulus();
        let z1 = p.feasible().sample(&mut rng);
        let z2 = p.feasible().sample(&mut rng);
        let x1 = prox_component(comp, &z1, beta, p.feasible(), inner_tol)?;
        let x2 = prox_component(comp, &z2, beta, p.feasible(), inner_tol)?;
        let dx: Vec<S> = x1.iter().zip(&x2).map(|(&a, &b)| a - b).collect();
        let dz: Vec<S> = z1.iter().zip(&z2).map(|(&a, &b)| a - b).collect();
        let slack = dot(&dx, &dz) - dot(&dx, &dx);
        slacks.push(slack.to_f64().unwrap());
    }
    Ok(InequalityReport::collect(
        "firm_nonexpansive",
        TOL_FIRM_NONEXPANSIVE,
        slacks,
    ))
}

/// Agreement of the 1-D proxes with the independent grid oracle.
pub fn check_prox_oracle_agreement<S: Scalar>(
    p: &Problem<S>,
    trials: usize,
    seed: u64,
) -> Result<InequalityReport> {
    use crate::domain::PieceKind;
    use crate::prox::{grid_prox_oracle, prox_linlog_1d, prox_negquad_1d};

    if trials == 0 {
        return Err(Error::invalid("trials must be at least 1"));
    }
    let pieces: Vec<_> = p
        .components()
        .iter()
        .flat_map(|c| c.pieces().iter())
        .filter(|piece| !matches!(piece.kind(), PieceKind::QuadForm(_)))
        .collect();
    if pieces.is_empty() {
        return Ok(InequalityReport::collect("prox_oracle", TOL_PROX_ORACLE, []));
    }
    let mut rng = SplitMix64::derive(seed, 0x6f72_636c);
    let mut slacks = Vec::with_capacity(trials);
    for _ in 0..trials {
        let piece = pieces[rng.next_index(pieces.len())];
        let (lo, hi) = piece.bounds();
        let (lo, hi) = (lo[0], hi[0]);
        let span = hi - lo;
        let z = lo - span + s::<S>(3.0) * span * s::<S>(rng.next_f64());
        // Oracle agreement holds at any positive stepsize; no floor here.
        let beta = sample_beta(&mut rng, S::zero());
        let (got, want) = match piece.kind() {
            PieceKind::NegQuad1D => (
                prox_negquad_1d(z, beta, lo, hi)?,
                grid_prox_oracle(|y: S| -y * y - y, z, beta, lo, hi, s(1e-5))?,
            ),
            PieceKind::LinLog1D => (
                prox_linlog_1d(z, beta, lo, hi, s(1e-12))?,
                grid_prox_oracle(
                    |y: S| s::<S>(5.0) * y + (s::<S>(10.0) * y + S::one()).ln(),
                    z,
                    beta,
                    lo,
                    hi,
                    s(1e-5),
                )?,
            ),
            PieceKind::QuadForm(_) => unreachable!(),
        };
        // Slack -|got - want|: a violation is disagreement beyond tolerance.
        slacks.push(-(got - want).abs().to_f64().unwrap());
    }
    Ok(InequalityReport::collect("prox_oracle", TOL_PROX_ORACLE, slacks))
}

/// Per-cycle inequality for the deterministic method: for every cycle `k`
/// and any probe `x` in the box,
///
/// ```text
/// ||x_{(k+1)N} - x||^2 <= ||x_{kN} - x||^2
///                         - (2 beta_k / alpha) (f(x_{kN}) - f(x))
///                         + 2 L^2 N (N+1) beta_k^2 / alpha.
/// ```
pub fn check_cycle_inequality<S: Scalar>(
    trace: &Trace<S>,
    p: &Problem<S>,
    sched: &Schedule<S>,
    probe: &[S],
) -> Result<InequalityReport> {
    if trace.method == MethodKind::Stochastic {
        return Err(Error::invalid(
            "cycle inequality applies to permuted/cyclic traces",
        ));
    }
    let iterates = trace
        .iterates
        .as_ref()
        .ok_or_else(|| Error::invalid("trace must retain iterates for the cycle check"))?;
    if !p.feasible().contains(probe, s(1e-12)) {
        return Err(Error::invalid("probe point must lie in the box"));
    }
    let n = p.num_components();
    let n_s = s::<S>(n as f64);
    let alpha = p.modulus();
    let l = p.lipschitz();
    let cycles = (iterates.len() - 1) / n;
    let f_probe = p.objective(probe)?;
    let mut slacks = Vec::with_capacity(cycles);
    for k in 0..cycles {
        let beta = sched.beta(k);
        let x_k = &iterates[k * n];
        let x_next = &iterates[(k + 1) * n];
        let d_k = dist2(x_k, probe);
        let d_next = dist2(x_next, probe);
        let f_k = p.objective(x_k)?;
        let rhs = d_k * d_k - s::<S>(2.0) * beta / alpha * (f_k - f_probe)
            + s::<S>(2.0) * l * l * n_s * (n_s + S::one()) * beta * beta / alpha;
        let lhs = d_next * d_next;
        slacks.push((rhs - lhs).to_f64().unwrap());
    }
    Ok(InequalityReport::collect("cycle_inequality", TOL_CYCLE, slacks))
}

/// Per-step bound: every inner prox step satisfies
/// `||x_{kN+j} - x_{kN+j-1}|| <= 2 beta_k L` (and single steps for the
/// stochastic method).
pub fn check_step_bound<S: Scalar>(
    trace: &Trace<S>,
    p: &Problem<S>,
    sched: &Schedule<S>,
) -> Result<InequalityReport> {
    let iterates = trace
        .iterates
        .as_ref()
        .ok_or_else(|| Error::invalid("trace must retain iterates for the step-bound check"))?;
    let l = p.lipschitz();
    let per_outer = match trace.method {
        MethodKind::Stochastic => 1,
        _ => p.num_components(),
    };
    let mut slacks = Vec::with_capacity(iterates.len().saturating_sub(1));
    for (idx, pair) in iterates.windows(2).enumerate() {
        let k = idx / per_outer;
        let beta = sched.beta(k);
        let step = dist2(&pair[1], &pair[0]);
        let bound = s::<S>(2.0) * beta * l;
        slacks.push((bound - step).to_f64().unwrap());
    }
    Ok(InequalityReport::collect("step_bound", TOL_STEP_BOUND, slacks))
}

/// One-step conditional-expectation bound for the stochastic method at state
/// `x` with probe `x'`:
///
/// ```text
/// E[ ||x_{k+1} - x'||^2 | x_k = x ]
///   <= ||x - x'||^2 - (2 beta / (alpha N)) (f(x) - f(x')) + 4 beta^2 L^2 / alpha.
/// ```
///
/// With `N` components the conditional expectation is a finite average, so
/// the left side is computed exactly by enumeration; `samples > 0` adds an
/// optional Monte Carlo estimate to sanity-check the enumerated value.
#[derive(Debug, Clone)]
pub struct StochasticDescentEstimate {
    pub lhs_exact: f64,
    pub rhs_bound: f64,
    pub sampled_lhs: Option<f64>,
    pub sampled_stderr: Option<f64>,
}

pub fn estimate_stochastic_descent<S: Scalar>(
    p: &Problem<S>,
    x: &[S],
    x_probe: &[S],
    beta: S,
    samples: usize,
    seed: u64,
    inner_tol: S,
) -> Result<StochasticDescentEstimate> {
    let n = p.num_components();
    let alpha = p.modulus();
    let l = p.lipschitz();
    let mut dists = Vec::with_capacity(n);
    for comp in p.components() {
        let xn = prox_component(comp, x, beta, p.feasible(), inner_tol)?;
        let d = dist2(&xn, x_probe);
        dists.push((d * d).to_f64().unwrap());
    }
    let lhs_exact = dists.iter().sum::<f64>() / n as f64;
    let dx = dist2(x, x_probe);
    let gap = p.objective(x)? - p.objective(x_probe)?;
    let rhs = dx * dx - s::<S>(2.0) * beta / (alpha * s::<S>(n as f64)) * gap
        + s::<S>(4.0) * beta * beta * l * l / alpha;
    let (sampled_lhs, sampled_stderr) = if samples > 0 {
        let mut sampler = IndexSampler::new(seed, n)?;
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..samples {
            let v = dists[sampler.next_index()];
            sum += v;
            sum_sq += v * v;
        }
        let mean = sum / samples as f64;
        let var = (sum_sq / samples as f64 - mean * mean).max(0.0);
        (Some(mean), Some((var / samples as f64).sqrt()))
    } else {
        (None, None)
    };
    Ok(StochasticDescentEstimate {
        lhs_exact,
        rhs_bound: rhs.to_f64().unwrap(),
        sampled_lhs,
        sampled_stderr,
    })
}

/// Exact-enumeration check of the stochastic descent bound over a batch of
/// random in-box states against a fixed probe.
pub fn check_stochastic_descent<S: Scalar>(
    p: &Problem<S>,
    x_probe: &[S],
    beta: S,
    states: usize,
    seed: u64,
    inner_tol: S,
) -> Result<InequalityReport> {
    if states == 0 {
        return Err(Error::invalid("states must be at least 1"));
    }
    let mut rng = SplitMix64::derive(seed, 0x7374_6f63);
    let mut slacks = Vec::with_capacity(states);
    for _ in 0..states {
        let x = p.feasible().sample(&mut rng);
        let est = estimate_stochastic_descent(p, &x, x_probe, beta, 0, 0, inner_tol)?;
        slacks.push(est.rhs_bound - est.lhs_exact);
    }
    Ok(InequalityReport::collect(
        "stochastic_descent",
        TOL_STOCHASTIC,
        slacks,
    ))
}

/// Verdict of the strict-decrease rule along a deterministic run.
#[derive(Debug, Clone)]
pub struct RemarkReport {
    /// Consecutive record pairs inspected.
    pub cycles: usize,
    /// Cycles where the running stepsize was below the predicted threshold.
    pub triggered: usize,
    /// Triggered cycles where the distance to the minimizer failed to
    /// strictly decrease.
    pub violations: usize,
}

impl RemarkReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

/// Strict-decrease rule: on any cycle `k` of a permuted/cyclic run where
/// `beta_k < (f(x_kN) - f*) / (L^2 N (N+1))`, the distance to the minimizer
/// must strictly decrease over that cycle. The trace must carry stride-1
/// records with distances to the minimizer.
pub fn check_remark_strict_decrease<S: Scalar>(
    trace: &Trace<S>,
    p: &Problem<S>,
    sched: &Schedule<S>,
    f_star: S,
) -> Result<RemarkReport> {
    if trace.method == MethodKind::Stochastic {
        return Err(Error::invalid(
            "strict-decrease rule applies to permuted/cyclic traces",
        ));
    }
    let mut cycles = 0;
    let mut triggered = 0;
    let mut violations = 0;
    for pair in trace.records.windows(2) {
        if pair[1].k != pair[0].k + 1 {
            return Err(Error::invalid(
                "strict-decrease check needs stride-1 records",
            ));
        }
        let d_k = pair[0]
            .dist_to_oracle
            .ok_or_else(|| Error::invalid("trace lacks distance-to-minimizer records"))?;
        let d_next = pair[1]
            .dist_to_oracle
            .ok_or_else(|| Error::invalid("trace lacks distance-to-minimizer records"))?;
        cycles += 1;
        let bound = crate::methods::remark_step_bound(p, pair[0].f_value, f_star);
        let beta = sched.beta(pair[0].k);
        if bound > S::zero() && beta < bound {
            triggered += 1;
            if !(d_next < d_k) {
                violations += 1;
            }
        }
    }
    Ok(RemarkReport {
        cycles,
        triggered,
        violations,
    })
}

/// Finite-sample convergence-trend verdict for a batch of stochastic traces.
#[derive(Debug, Clone)]
pub struct TrendReport {
    pub traces: usize,
    pub passed: usize,
    /// Largest last-quartile oscillation of the distance to the minimizer.
    pub worst_oscillation: f64,
    /// Largest final increment of the weighted gap sum, relative to its total.
    pub worst_tail_ratio: f64,
    pub oscillation_threshold: f64,
    pub tail_ratio_threshold: f64,
}

impl TrendReport {
    pub fn all_passed(&self) -> bool {
        self.passed == self.traces
    }
}

/// Relative plateau threshold for the weighted gap sums.
pub const TREND_TAIL_RATIO: f64 = 1e-6;

/// Checks, per trace, that (a) the distance to the oracle minimizer has
/// stabilized — last-quartile oscillation at most `10 * epsilon_conv` — and
/// (b) the partial sums of `beta_k (f(x_k) - f*)` plateau (final increment
/// below `1e-6` of the total). These are the finite-sample stand-ins for
/// almost-sure convergence; the thresholds are part of this artifact's
/// contract, with `epsilon_conv` naming the resolution at which convergence
/// is asserted.
///
/// Traces must carry per-record distances to the minimizer (run with a
/// reference point) and the objective values recorded by default.
pub fn check_supermartingale_trend<S: Scalar>(
    traces: &[Trace<S>],
    sched: &Schedule<S>,
    f_star: S,
    epsilon_conv: S,
) -> Result<TrendReport> {
    if traces.len() < 30 {
        return Err(Error::invalid(format!(
            "need at least 30 stochastic traces, got {}",
            traces.len()
        )));
    }
    let osc_threshold = s::<S>(10.0) * epsilon_conv;
    let mut passed = 0;
    let mut worst_osc = 0.0f64;
    let mut worst_tail = 0.0f64;
    for trace in traces {
        if trace.method != MethodKind::Stochastic {
            return Err(Error::invalid("trend check expects stochastic traces"));
        }
        let records = &trace.records;
        if records.len() < 8 {
            return Err(Error::invalid("trace too short for a trend verdict"));
        }
        let quartile_start = records.len() - records.len() / 4;
        let mut lo = S::infinity();
        let mut hi = S::neg_infinity();
        for r in &records[quartile_start..] {
            let d = r
                .dist_to_oracle
                .ok_or_else(|| Error::invalid("trace lacks distance-to-minimizer records"))?;
            lo = lo.min(d);
            hi = hi.max(d);
        }
        let osc = hi - lo;
        let mut total = S::zero();
        let mut last_increment = S::zero();
        for r in records {
            let inc = sched.beta(r.k) * (r.f_value - f_star).max(S::zero());
            total += inc;
            last_increment = inc;
        }
        let tail_ratio = if total > S::zero() {
            (last_increment / total).to_f64().unwrap()
        } else {
            0.0
        };
        let ok = osc <= osc_threshold && tail_ratio <= TREND_TAIL_RATIO;
        if ok {
            passed += 1;
        }
        worst_osc = worst_osc.max(osc.to_f64().unwrap());
        worst_tail = worst_tail.max(tail_ratio);
    }
    Ok(TrendReport {
        traces: traces.len(),
        passed,
        worst_oscillation: worst_osc,
        worst_tail_ratio: worst_tail,
        oscillation_threshold: osc_threshold.to_f64().unwrap(),
        tail_ratio_threshold: TREND_TAIL_RATIO,
    })
}
