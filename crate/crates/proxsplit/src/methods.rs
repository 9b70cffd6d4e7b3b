//! The two splitting methods and their run machinery.
//!
//! One outer iteration of the permuted/cyclic method applies all `N`
//! component proxes in sequence with common stepsize `beta_k`; the stochastic
//! method applies a single uniformly sampled component prox per iteration.
//! Stopping is tested on successive outer iterates (`cycle endpoints` for the
//! deterministic variants, single steps for the stochastic one); iteration
//! counts in traces and tables follow that convention.

use std::time::Instant;

use crate::domain::{
    MethodKind, Problem, Schedule, StoppingRule, Termination, Trace, TraceRecord,
};
use crate::error::{Error, Result};
use crate::prox::{prox_component, DEFAULT_INNER_TOL};
use crate::rng::SplitMix64;
use crate::scalar::{dist2, s, Scalar};

/// Per-cycle permutation order for the deterministic method.
#[derive(Debug, Clone)]
pub enum PermutationSource {
    /// Identity permutation every cycle (the cyclic method).
    FixedCyclic,
    /// A fresh uniform permutation each cycle, Fisher-Yates on a seeded
    /// stream; the seed pins the whole permutation sequence.
    FreshRandom { seed: u64 },
}

impl PermutationSource {
    fn stream(&self) -> Option<SplitMix64> {
        match self {
            PermutationSource::FixedCyclic => None,
            PermutationSource::FreshRandom { seed } => Some(SplitMix64::derive(*seed, 0x70_65_72_6d)),
        }
    }

    fn seed(&self) -> u64 {
        match self {
            PermutationSource::FixedCyclic => 0,
            PermutationSource::FreshRandom { seed } => *seed,
        }
    }
}

/// I.i.d. uniform index source for the stochastic method.
#[derive(Debug, Clone)]
pub struct IndexSampler {
    rng: SplitMix64,
    seed: u64,
    n: usize,
}

impl IndexSampler {
    pub fn new(seed: u64, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("sampler needs at least one component"));
        }
        Ok(IndexSampler {
            rng: SplitMix64::derive(seed, 0x73_61_6d_70),
            seed,
            n,
        })
    }

    #[inline]
    pub fn next_index(&mut self) -> usize {
        self.rng.next_index(self.n)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

/// Everything a single run needs beyond the problem and start point.
#[derive(Debug, Clone)]
pub struct RunConfig<S> {
    pub schedule: Schedule<S>,
    pub stop: StoppingRule<S>,
    /// Retain every iterate (inner states for the deterministic method).
    pub retain_iterates: bool,
    /// Keep one record every `record_stride` outer iterations (the final
    /// iteration is always recorded). 1 keeps everything.
    pub record_stride: usize,
    /// Inner-solver tolerance for the quadratic-form prox.
    pub inner_tol: S,
    /// Proceed when the schedule drops below a component's certified
    /// smallest stepsize instead of refusing to start.
    pub force: bool,
    /// Reference point for the per-record distance column (usually the
    /// oracle minimizer).
    pub reference: Option<Vec<S>>,
}

impl<S: Scalar> RunConfig<S> {
    pub fn new(schedule: Schedule<S>, stop: StoppingRule<S>) -> Self {
        RunConfig {
            schedule,
            stop,
            retain_iterates: false,
            record_stride: 1,
            inner_tol: s(DEFAULT_INNER_TOL),
            force: false,
            reference: None,
        }
    }

    pub fn with_retained_iterates(mut self) -> Self {
        self.retain_iterates = true;
        self
    }

    pub fn with_reference(mut self, reference: Vec<S>) -> Self {
        self.reference = Some(reference);
        self
    }

    pub fn with_record_stride(mut self, stride: usize) -> Self {
        self.record_stride = stride.max(1);
        self
    }

    pub fn with_force(mut self) -> Self {
        self.force = true;
        self
    }
}

/// Builds the stepsize schedule `beta_k = c/(k+1)^p`, rejecting exponents
/// outside `(1/2, 1]` (either the square sum would diverge or the sum would
/// converge).
pub fn make_schedule<S: Scalar>(c: S, p: S) -> Result<Schedule<S>> {
    if !(c > S::zero()) {
        return Err(Error::invalid("schedule scale c must be positive"));
    }
    if !(p > s::<S>(0.5) && p <= S::one()) {
        return Err(Error::invalid("schedule exponent p must lie in (1/2, 1]"));
    }
    Ok(Schedule { c, p })
}

/// Stepsize bound from the strict-decrease remark: when the running `beta_k`
/// is below `(f(x_kN) - f(x*)) / (L^2 N (N+1))`, the distance to a minimizer
/// strictly decreases over the next cycle. Returns 0 when the gap is not
/// positive (bound vacuous).
pub fn remark_step_bound<S: Scalar>(p: &Problem<S>, f_current: S, f_star: S) -> S {
    let gap = f_current - f_star;
    if !(gap > S::zero()) {
        return S::zero();
    }
    let n = s::<S>(p.num_components() as f64);
    let l = p.lipschitz();
    gap / (l * l * n * (n + S::one()))
}

/// Validates the schedule against the components' certified smallest
/// stepsizes. Schedules are monotone decreasing, so the binding check is at
/// the last reachable index `max_outer`.
fn validate_beta_floor<S: Scalar>(
    problem: &Problem<S>,
    config: &RunConfig<S>,
    warnings: &mut Vec<String>,
) -> Result<()> {
    let beta_min = problem.beta_min();
    if beta_min <= S::zero() {
        return Ok(());
    }
    let beta_last = config.schedule.beta(config.stop.max_outer);
    if beta_last >= beta_min {
        return Ok(());
    }
    let msg = format!(
        "schedule drops to beta = {beta_last:e} at iteration {}, below the smallest \
         certified stepsize {beta_min:e}; the prox-convex certificate no longer covers \
         those steps",
        config.stop.max_outer
    );
    if config.force {
        warnings.push(msg);
        Ok(())
    } else {
        Err(Error::config(format!(
            "{msg} (raise c, lower max_outer, or pass force)"
        )))
    }
}

struct Recorder<S> {
    records: Vec<TraceRecord<S>>,
    stride: usize,
    reference: Option<Vec<S>>,
    started: Instant,
}

impl<S: Scalar> Recorder<S> {
    fn new(config: &RunConfig<S>) -> Self {
        Recorder {
            records: Vec::new(),
            stride: config.record_stride.max(1),
            reference: config.reference.clone(),
            started: Instant::now(),
        }
    }

    /// Whether iteration `k` gets a record. The final iteration always does,
    /// so the trace closes with the step that triggered termination.
    #[inline]
    fn due(&self, k: usize, last: bool) -> bool {
        last || k.is_multiple_of(self.stride)
    }

    #[inline]
    fn push(&mut self, k: usize, step_norm: S, f_value: S, x_k: &[S]) {
        let dist_to_oracle = self.reference.as_deref().map(|r| dist2(x_k, r));
        self.records.push(TraceRecord {
            k,
            step_norm,
            f_value,
            dist_to_oracle,
            elapsed_ms: self.started.elapsed().as_secs_f64() * 1e3,
        });
    }
}

/// Permuted-order splitting run: cycle `k` applies the proxes of
/// `f_{pi_k(1)}, ..., f_{pi_k(N)}` with stepsize `beta_k`; the stopping rule
/// compares successive cycle endpoints.
pub fn run_permuted<S: Scalar>(
    problem: &Problem<S>,
    perm: &PermutationSource,
    x0: &[S],
    config: &RunConfig<S>,
) -> Result<Trace<S>> {
    let mut warnings = Vec::new();
    validate_beta_floor(problem, config, &mut warnings)?;
    let n = problem.num_components();
    let mut order: Vec<usize> = (0..n).collect();
    let mut perm_stream = perm.stream();
    let method = if perm_stream.is_some() {
        MethodKind::Permuted
    } else {
        MethodKind::Cyclic
    };

    let mut x = problem.feasible().project(x0)?;
    let mut recorder = Recorder::new(config);
    let mut iterates = config.retain_iterates.then(|| vec![x.clone()]);
    let mut terminated = Termination::MaxIterations;

    for k in 0..config.stop.max_outer {
        let beta = config.schedule.beta(k);
        if let Some(rng) = perm_stream.as_mut() {
            for (slot, v) in order.iter_mut().enumerate() {
                *v = slot;
            }
            rng.shuffle(&mut order);
        }
        let x_start = x.clone();
        for &i in &order {
            x = prox_component(&problem.components()[i], &x, beta, problem.feasible(), config.inner_tol)
                .map_err(|e| Error::config(format!("inner solver failed at cycle {k}: {e}")))?;
            if let Some(list) = iterates.as_mut() {
                list.push(x.clone());
            }
        }
        let step = dist2(&x, &x_start);
        let done = step <= config.stop.epsilon || k + 1 == config.stop.max_outer;
        if recorder.due(k, done) {
            let f_k = problem.objective(&x_start)?;
            recorder.push(k, step, f_k, &x_start);
        }
        if step <= config.stop.epsilon {
            terminated = Termination::EpsilonReached;
            break;
        }
    }

    Ok(Trace {
        method,
        seed: perm.seed(),
        records: recorder.records,
        iterates,
        final_point: x,
        terminated,
        warnings,
    })
}

/// Cyclic splitting run: the permuted method with the identity permutation
/// every cycle.
pub fn run_cyclic<S: Scalar>(
    problem: &Problem<S>,
    x0: &[S],
    config: &RunConfig<S>,
) -> Result<Trace<S>> {
    run_permuted(problem, &PermutationSource::FixedCyclic, x0, config)
}

/// Stochastic splitting run: iteration `k` applies the prox of one uniformly
/// sampled component with stepsize `beta_k`; stopping compares successive
/// iterates.
pub fn run_stochastic<S: Scalar>(
    problem: &Problem<S>,
    sampler: &mut IndexSampler,
    x0: &[S],
    config: &RunConfig<S>,
) -> Result<Trace<S>> {
    let mut warnings = Vec::new();
    validate_beta_floor(problem, config, &mut warnings)?;

    let mut x = problem.feasible().project(x0)?;
    let mut recorder = Recorder::new(config);
    let mut iterates = config.retain_iterates.then(|| vec![x.clone()]);
    let mut terminated = Termination::MaxIterations;

    for k in 0..config.stop.max_outer {
        let beta = config.schedule.beta(k);
        let r_k = sampler.next_index();
        let x_next = prox_component(
            &problem.components()[r_k],
            &x,
            beta,
            problem.feasible(),
            config.inner_tol,
        )
        .map_err(|e| Error::config(format!("inner solver failed at iteration {k}: {e}")))?;
        if let Some(list) = iterates.as_mut() {
            list.push(x_next.clone());
        }
        let step = dist2(&x_next, &x);
        let done = step <= config.stop.epsilon || k + 1 == config.stop.max_outer;
        if recorder.due(k, done) {
            let f_k = problem.objective(&x)?;
            recorder.push(k, step, f_k, &x);
        }
        x = x_next;
        if step <= config.stop.epsilon {
            terminated = Termination::EpsilonReached;
            break;
        }
    }

    Ok(Trace {
        method: MethodKind::Stochastic,
        seed: sampler.seed(),
        records: recorder.records,
        iterates,
        final_point: x,
        terminated,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{BlockPiece, BoxSet, Component};
    use crate::linalg::SymMatrix;

    fn single_quad_problem() -> Problem<f64> {
        let b = BoxSet::new(vec![0.0], vec![5.0]).unwrap();
        let c = Component::new(vec![BlockPiece::quad_form(
            vec![0],
            SymMatrix::scalar(1.0),
            &b,
        )
        .unwrap()])
        .unwrap();
        Problem::new(b, vec![c]).unwrap()
    }

    fn zero_problem(dim: usize, n_components: usize) -> Problem<f64> {
        let b = BoxSet::new(vec![0.0; dim], vec![5.0; dim]).unwrap();
        let comps = (0..n_components)
            .map(|_| {
                Component::new(vec![BlockPiece::quad_form(
                    (0..dim).collect(),
                    SymMatrix::zeros(dim),
                    &b,
                )
                .unwrap()])
                .unwrap()
            })
            .collect();
        Problem::new(b, comps).unwrap()
    }

    fn config(eps: f64, max_outer: usize) -> RunConfig<f64> {
        RunConfig::new(
            make_schedule(1.0, 1.0).unwrap(),
            StoppingRule::new(eps, max_outer).unwrap(),
        )
    }

    #[test]
    fn sampler_draws_are_uniform_and_reproducible() {
        let n = 5;
        let draws = 100_000;
        let mut counts = vec![0usize; n];
        let mut sampler = IndexSampler::new(77, n).unwrap();
        for _ in 0..draws {
            counts[sampler.next_index()] += 1;
        }
        let p = 1.0 / n as f64;
        let sigma = (p * (1.0 - p) / draws as f64).sqrt();
        for &c in &counts {
            let freq = c as f64 / draws as f64;
            assert!((freq - p).abs() <= 3.0 * sigma, "frequency {freq}");
        }
        let mut a = IndexSampler::new(9, n).unwrap();
        let mut b = IndexSampler::new(9, n).unwrap();
        for _ in 0..100 {
            assert_eq!(a.next_index(), b.next_index());
        }
        assert!(IndexSampler::new(1, 0).is_err());
    }

    #[test]
    fn make_schedule_validates() {
        assert!(make_schedule(1.0, 0.4).is_err());
        assert!(make_schedule(1.0, 1.1).is_err());
        assert!(make_schedule(-1.0, 1.0).is_err());
        assert!(make_schedule(2.0, 0.75).is_ok());
    }

    #[test]
    fn remark_bound_values() {
        let p = single_quad_problem();
        // L for M=1 on [0,5] is 2*1*5 = 10; override for round numbers.
        let mut p1 = p.clone();
        p1.override_lipschitz(1.0);
        assert_eq!(remark_step_bound(&p1, 3.0, 1.0), 1.0);
        let mut p2 = p.clone();
        p2.override_lipschitz(2.0);
        // gap 3, L = 2, N = 1 -> 3 / (4 * 2) = 0.375; with N = 5 -> 0.025.
        assert_eq!(remark_step_bound(&p2, 4.0, 1.0), 3.0 / 8.0);
        assert_eq!(remark_step_bound(&p, 1.0, 1.0), 0.0);
    }

    #[test]
    fn classical_ppa_first_step() {
        // N = 1 quadratic: the first iterate is prox(4) at beta = 1 = 4/3.
        let p = single_quad_problem();
        let cfg = config(1e-10, 1).with_retained_iterates();
        let trace = run_cyclic(&p, &[4.0], &cfg).unwrap();
        let iterates = trace.iterates.unwrap();
        assert!((iterates[1][0] - 4.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn zero_components_stop_immediately() {
        let p = zero_problem(2, 3);
        let cfg = config(1e-12, 100);
        let trace = run_cyclic(&p, &[7.0, -3.0], &cfg).unwrap();
        // x0 projects to (5, 0); every prox is then the identity.
        assert_eq!(trace.final_point, vec![5.0, 0.0]);
        assert_eq!(trace.terminated, Termination::EpsilonReached);
        assert_eq!(trace.records.len(), 1);
        assert_eq!(trace.records[0].step_norm, 0.0);
    }

    #[test]
    fn cyclic_equals_permuted_with_fixed_order() {
        let p = single_quad_problem();
        let cfg = config(1e-9, 50);
        let a = run_cyclic(&p, &[4.0], &cfg).unwrap();
        let b = run_permuted(&p, &PermutationSource::FixedCyclic, &[4.0], &cfg).unwrap();
        assert_eq!(a.final_point, b.final_point);
        assert_eq!(a.records.len(), b.records.len());
        for (ra, rb) in a.records.iter().zip(&b.records) {
            assert_eq!(ra.step_norm, rb.step_norm);
            assert_eq!(ra.f_value, rb.f_value);
        }
    }

    #[test]
    fn single_cycle_is_manual_prox_composition() {
        let b = BoxSet::new(vec![0.0, 0.0], vec![2.0, 5.0]).unwrap();
        let c1 = Component::new(vec![BlockPiece::neg_quad(0, &b).unwrap()]).unwrap();
        let c2 = Component::new(vec![BlockPiece::quad_form(
            vec![0, 1],
            SymMatrix::identity(2),
            &b,
        )
        .unwrap()])
        .unwrap();
        let p = Problem::new(b.clone(), vec![c1.clone(), c2.clone()]).unwrap();
        let cfg = config(1e-16, 1);
        let x0 = vec![1.0, 3.0];
        let trace = run_cyclic(&p, &x0, &cfg).unwrap();
        let beta = 1.0;
        let mid = crate::prox::prox_component(&c1, &x0, beta, &b, 1e-12).unwrap();
        let manual = crate::prox::prox_component(&c2, &mid, beta, &b, 1e-12).unwrap();
        assert_eq!(trace.final_point, manual);
    }

    #[test]
    fn two_identical_components_track_doubled_single() {
        // N = 2 identical copies: one cycle applies the same prox twice.
        let b = BoxSet::new(vec![0.0], vec![5.0]).unwrap();
        let c = Component::new(vec![BlockPiece::quad_form(
            vec![0],
            SymMatrix::scalar(1.0),
            &b,
        )
        .unwrap()])
        .unwrap();
        let p2 = Problem::new(b.clone(), vec![c.clone(), c.clone()]).unwrap();
        let p1 = Problem::new(b, vec![c]).unwrap();
        let cfg = config(1e-13, 40);
        let t2 = run_cyclic(&p2, &[4.0], &cfg).unwrap();
        // Simulate: one cycle of p2 = two prox applications of p1's component.
        let mut x = vec![4.0];
        for k in 0..t2.records.len() {
            let beta = cfg.schedule.beta(k);
            for _ in 0..2 {
                x = crate::prox::prox_component(&p1.components()[0], &x, beta, p1.feasible(), 1e-12)
                    .unwrap();
            }
        }
        assert!((x[0] - t2.final_point[0]).abs() < 1e-12);
    }

    #[test]
    fn permutation_sequences_reproduce() {
        let p = zero_problem(3, 4);
        let cfg = config(1e-18, 5);
        let src = PermutationSource::FreshRandom { seed: 11 };
        let a = run_permuted(&p, &src, &[1.0, 2.0, 3.0], &cfg).unwrap();
        let b = run_permuted(&p, &src, &[1.0, 2.0, 3.0], &cfg).unwrap();
        assert_eq!(a.final_point, b.final_point);
        assert_eq!(a.method, MethodKind::Permuted);
    }

    #[test]
    fn stochastic_single_component_matches_cyclic() {
        let p = single_quad_problem();
        let cfg = config(1e-9, 60);
        let cyclic = run_cyclic(&p, &[4.0], &cfg).unwrap();
        let mut sampler = IndexSampler::new(3, 1).unwrap();
        let stoch = run_stochastic(&p, &mut sampler, &[4.0], &cfg).unwrap();
        assert_eq!(cyclic.final_point, stoch.final_point);
        assert_eq!(cyclic.records.len(), stoch.records.len());
    }

    #[test]
    fn stochastic_identical_components_seed_invariant() {
        // All components identical: the trajectory cannot depend on the
        // sampled index sequence.
        let b = BoxSet::new(vec![0.0, 0.0], vec![5.0, 5.0]).unwrap();
        let c = Component::new(vec![BlockPiece::quad_form(
            vec![0, 1],
            SymMatrix::identity(2),
            &b,
        )
        .unwrap()])
        .unwrap();
        let p = Problem::new(b, vec![c.clone(), c.clone(), c]).unwrap();
        let cfg = config(1e-10, 80);
        let mut s1 = IndexSampler::new(1, 3).unwrap();
        let mut s2 = IndexSampler::new(999, 3).unwrap();
        let a = run_stochastic(&p, &mut s1, &[4.0, 2.0], &cfg).unwrap();
        let b = run_stochastic(&p, &mut s2, &[4.0, 2.0], &cfg).unwrap();
        assert_eq!(a.final_point, b.final_point);
    }

    #[test]
    fn stochastic_same_seed_bitwise_identical() {
        let b = BoxSet::new(vec![0.0, 0.0], vec![2.0, 5.0]).unwrap();
        let comps = vec![
            Component::new(vec![BlockPiece::neg_quad(0, &b).unwrap()]).unwrap(),
            Component::new(vec![BlockPiece::quad_form(
                vec![0, 1],
                SymMatrix::identity(2),
                &b,
            )
            .unwrap()])
            .unwrap(),
        ];
        let p = Problem::new(b, comps).unwrap();
        let cfg = config(1e-7, 200);
        let mut s1 = IndexSampler::new(42, 2).unwrap();
        let mut s2 = IndexSampler::new(42, 2).unwrap();
        let a = run_stochastic(&p, &mut s1, &[1.0, 1.0], &cfg).unwrap();
        let b = run_stochastic(&p, &mut s2, &[1.0, 1.0], &cfg).unwrap();
        assert_eq!(a.final_point, b.final_point);
        for (ra, rb) in a.records.iter().zip(&b.records) {
            assert_eq!(ra.step_norm, rb.step_norm);
            assert_eq!(ra.f_value, rb.f_value);
        }
    }

    #[test]
    fn beta_floor_validation() {
        // A lin-log component certifies only beta > 1/5; the default schedule
        // drops below that before max_outer = 100, so the run must refuse.
        let b = BoxSet::new(vec![1.0], vec![2.0]).unwrap();
        let c = Component::new(vec![BlockPiece::lin_log(0, &b).unwrap()]).unwrap();
        let p = Problem::new(b, vec![c]).unwrap();
        let cfg = config(1e-10, 100);
        let err = run_cyclic(&p, &[1.5], &cfg).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
        // max_outer small enough keeps beta above the floor: beta(4) = 1/5.
        let cfg_ok = config(1e-10, 3);
        assert!(run_cyclic(&p, &[1.5], &cfg_ok).is_ok());
        // force converts the error into a warning.
        let cfg_forced = config(1e-10, 100).with_force();
        let trace = run_cyclic(&p, &[1.5], &cfg_forced).unwrap();
        assert_eq!(trace.warnings.len(), 1);
    }

    #[test]
    fn epsilon_reached_final_step_below_epsilon() {
        let p = single_quad_problem();
        let cfg = config(1e-9, 100_000);
        let t = run_cyclic(&p, &[4.0], &cfg).unwrap();
        assert_eq!(t.terminated, Termination::EpsilonReached);
        assert!(t.final_step_norm().unwrap() <= 1e-9);
        // Records are consecutively indexed from 0 at stride 1.
        for (i, r) in t.records.iter().enumerate() {
            assert_eq!(r.k, i);
        }
    }

    #[test]
    fn iterates_stay_feasible() {
        let b = BoxSet::new(vec![0.0, 0.0], vec![2.0, 5.5]).unwrap();
        let comps = vec![
            Component::new(vec![BlockPiece::neg_quad(0, &b).unwrap()]).unwrap(),
            Component::new(vec![BlockPiece::quad_form(
                vec![0, 1],
                SymMatrix::identity(2),
                &b,
            )
            .unwrap()])
            .unwrap(),
        ];
        let p = Problem::new(b.clone(), comps).unwrap();
        let cfg = config(1e-8, 300).with_retained_iterates();
        let t = run_cyclic(&p, &[9.0, -2.0], &cfg).unwrap();
        for x in t.iterates.as_ref().unwrap() {
            assert!(b.contains(x, 0.0), "iterate {x:?} left the box");
        }
    }
}
