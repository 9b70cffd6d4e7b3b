//! End-to-end run of the permuted-order method on a generated family
//! instance (the cyclic and stochastic variants are exercised by the
//! acceptance suite).

use proxsplit::bench::{gen_instance, oracle_minimize, InstanceSpec};
use proxsplit::domain::{StoppingRule, Termination};
use proxsplit::methods::{make_schedule, run_permuted, PermutationSource, RunConfig};

#[test]
fn permuted_order_reaches_the_optimum() {
    let p = gen_instance::<f64>(&InstanceSpec::new(20, 0).unwrap()).unwrap();
    let oracle = oracle_minimize(&p, 1e-12).unwrap();
    let sched = make_schedule(1.0, 1.0).unwrap();
    let cfg = RunConfig::new(sched, StoppingRule::new(1e-8, 100_000).unwrap());
    let trace = run_permuted(
        &p,
        &PermutationSource::FreshRandom { seed: 5 },
        &p.feasible().midpoint(),
        &cfg,
    )
    .unwrap();
    assert_eq!(trace.terminated, Termination::EpsilonReached);
    let gap = p.objective(&trace.final_point).unwrap() - oracle.f_star;
    assert!(gap <= 1e-6, "final gap {gap}");

    // Different permutation seeds explore different cycle orders but land at
    // the same optimum.
    let other = run_permuted(
        &p,
        &PermutationSource::FreshRandom { seed: 6 },
        &p.feasible().midpoint(),
        &cfg,
    )
    .unwrap();
    assert_ne!(other.records[0].step_norm, trace.records[0].step_norm);
    let gap = p.objective(&other.final_point).unwrap() - oracle.f_star;
    assert!(gap <= 1e-6, "final gap {gap}");
}
