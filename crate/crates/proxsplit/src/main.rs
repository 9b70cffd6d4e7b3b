//! Command-line interface: instance generation, single runs, repeated-run
//! benchmarks, and the diagnostics suite.
//!
//! Exit codes are a stable contract: 0 success, 1 check violations,
//! 2 non-convergence, 3 configuration/usage error, 4 i/o error.

// Negated comparisons like `!(eps > 0.0)` intentionally reject NaN inputs.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use proxsplit::bench::io::{
    fmt_g17, load_instance, save_instance, summary_to_csv, trace_to_csv, write_text,
};
use proxsplit::bench::{
    gen_instance, oracle_minimize, run_experiment, strong_convexity_certificate, ExperimentPlan,
    InstanceSpec,
};
use proxsplit::diagnostics::{
    check_cycle_inequality, check_firm_nonexpansive, check_lemma_descent,
    check_prox_convex_inequality, check_prox_oracle_agreement, check_step_bound,
    check_stochastic_descent, check_supermartingale_trend, InequalityReport,
};
use proxsplit::domain::{MethodKind, StoppingRule, Termination};
use proxsplit::error::Error;
use proxsplit::methods::{
    make_schedule, run_permuted, run_stochastic, IndexSampler, PermutationSource, RunConfig,
};
use proxsplit::{Problem64, Trace64};

const EXIT_OK: u8 = 0;
const EXIT_VIOLATIONS: u8 = 1;
const EXIT_NO_CONVERGENCE: u8 = 2;
const EXIT_CONFIG: u8 = 3;
const EXIT_IO: u8 = 4;

#[derive(Parser)]
#[command(
    name = "proxsplit",
    about = "Splitting proximal point methods over a box: generate instances, run, benchmark, check",
    disable_help_subcommand = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random benchmark instance and write it to a file.
    Gen(GenArgs),
    /// Execute one run of a method on an instance and write the trace CSV.
    Run(RunArgs),
    /// Repeated-run experiment over methods x epsilons; writes summary CSV.
    Bench(BenchArgs),
    /// Run the inequality/convergence diagnostics suite.
    Check(CheckArgs),
}

#[derive(Args)]
struct GenArgs {
    /// Instance dimension (at least 2).
    #[arg(long)]
    n: usize,
    /// Instance seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    /// Instance file produced by `gen` (alternatively give --n/--seed).
    #[arg(long)]
    instance: Option<PathBuf>,
    /// Generate the instance on the fly with this dimension.
    #[arg(long)]
    n: Option<usize>,
    /// Run seed: permutation stream for `permuted`, index stream for
    /// `stochastic` (and the instance seed when --instance is not given).
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "cyclic")]
    method: String,
    /// Stopping threshold on successive outer iterates.
    #[arg(long, default_value_t = 1e-8)]
    eps: f64,
    /// Stepsize scale c in beta_k = c/(k+1)^p.
    #[arg(long, default_value_t = 1.0)]
    beta0: f64,
    /// Stepsize exponent p in (1/2, 1].
    #[arg(long, default_value_t = 1.0)]
    p: f64,
    #[arg(long, default_value_t = 100_000)]
    max_outer: usize,
    /// Retain all iterates in memory (needed by trace-based checks).
    #[arg(long, default_value_t = false)]
    retain_iterates: bool,
    /// Proceed even when the schedule drops below a certified stepsize floor.
    #[arg(long, default_value_t = false)]
    force: bool,
    /// Keep one trace record every this many iterations.
    #[arg(long, default_value_t = 1)]
    record_stride: usize,
    /// Fill the elapsed_ms column in the trace file (file bytes then vary
    /// run to run; timings always go to the sidecar).
    #[arg(long, default_value_t = false)]
    with_timing: bool,
    /// Skip computing the ground-truth minimizer for the distance column.
    #[arg(long, default_value_t = false)]
    no_oracle: bool,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    instance: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    /// Base seed: instance seed (without --instance) and repetition-seed base.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Comma-separated method list.
    #[arg(long, default_value = "cyclic,stochastic", value_delimiter = ',')]
    methods: Vec<String>,
    /// Comma-separated stopping thresholds.
    #[arg(long = "eps", default_value = "1e-10", value_delimiter = ',')]
    epsilons: Vec<f64>,
    #[arg(long, default_value_t = 30)]
    runs: usize,
    #[arg(long, default_value_t = 1.0)]
    beta0: f64,
    #[arg(long, default_value_t = 1.0)]
    p: f64,
    #[arg(long, default_value_t = 100_000)]
    max_outer: usize,
    #[arg(long, default_value_t = false)]
    with_timing: bool,
    /// Also write one trace CSV per repetition.
    #[arg(long, default_value_t = false)]
    write_traces: bool,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct CheckArgs {
    #[arg(long)]
    instance: Option<PathBuf>,
    #[arg(long, default_value_t = 20)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Comma-separated subset of: lemma, cycle, stepbound, stochastic,
    /// supermartingale, proxoracle, firmnonexp — or `all`.
    #[arg(long, default_value = "all", value_delimiter = ',')]
    suite: Vec<String>,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

fn main() -> ExitCode {
    init_thread_pool();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help/version requests are successful output, not errors.
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_CONFIG,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = match cli.command {
        Command::Gen(args) => cmd_gen(args),
        Command::Run(args) => cmd_run(args),
        Command::Bench(args) => cmd_bench(args),
        Command::Check(args) => cmd_check(args),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

fn exit_code_for(e: &Error) -> u8 {
    match e {
        Error::Io { .. } | Error::Parse { .. } => EXIT_IO,
        Error::ConvergenceFailure { .. } => EXIT_NO_CONVERGENCE,
        _ => EXIT_CONFIG,
    }
}

/// PROXSPLIT_THREADS caps the rayon pool used for parallel repetitions.
fn init_thread_pool() {
    if let Ok(v) = std::env::var("PROXSPLIT_THREADS") {
        if let Ok(threads) = v.parse::<usize>() {
            if threads >= 1 {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(threads)
                    .build_global();
            }
        }
    }
}

fn cmd_gen(args: GenArgs) -> Result<u8, Error> {
    let spec = InstanceSpec::new(args.n, args.seed)?;
    let problem: Problem64 = gen_instance(&spec)?;
    let cert = strong_convexity_certificate(&problem)?;
    let path = args.out.join(format!("instance_n{}_seed{}.txt", args.n, args.seed));
    save_instance(&path, &spec, &problem)?;
    println!("instance written to {}", path.display());
    println!("dimension {}, components {}", problem.dim(), problem.num_components());
    println!("lipschitz bound {}", fmt_g17(problem.lipschitz()));
    println!("strong convexity certificate {}", fmt_g17(cert));
    Ok(EXIT_OK)
}

fn load_or_generate(
    instance: &Option<PathBuf>,
    n: Option<usize>,
    seed: u64,
) -> Result<(InstanceSpec, Problem64), Error> {
    match instance {
        Some(path) => load_instance(path),
        None => {
            let n = n.ok_or_else(|| Error::config("give --instance FILE or --n N"))?;
            let spec = InstanceSpec::new(n, seed)?;
            Ok((spec, gen_instance(&spec)?))
        }
    }
}

fn sidecar(path: &Path, lines: &[String]) -> Result<(), Error> {
    write_text(path, &(lines.join("\n") + "\n"))
}

fn cmd_run(args: RunArgs) -> Result<u8, Error> {
    if !(args.eps > 0.0) {
        return Err(Error::config("--eps must be positive"));
    }
    let (spec, problem) = load_or_generate(&args.instance, args.n, args.seed)?;
    let schedule = make_schedule(args.beta0, args.p)?;
    let stop = StoppingRule::new(args.eps, args.max_outer)?;
    let method: MethodKind = args.method.parse()?;

    let oracle = if args.no_oracle {
        None
    } else {
        oracle_minimize(&problem, 1e-12).ok()
    };

    let mut config = RunConfig::new(schedule, stop).with_record_stride(args.record_stride);
    if args.retain_iterates {
        config = config.with_retained_iterates();
    }
    if args.force {
        config = config.with_force();
    }
    if let Some(o) = &oracle {
        config = config.with_reference(o.x_star.clone());
    }

    let x0 = problem.feasible().midpoint();
    let started = Instant::now();
    let trace: Trace64 = match method {
        MethodKind::Cyclic => run_permuted(&problem, &PermutationSource::FixedCyclic, &x0, &config)?,
        MethodKind::Permuted => run_permuted(
            &problem,
            &PermutationSource::FreshRandom { seed: args.seed },
            &x0,
            &config,
        )?,
        MethodKind::Stochastic => {
            let mut sampler = IndexSampler::new(args.seed, problem.num_components())?;
            run_stochastic(&problem, &mut sampler, &x0, &config)?
        }
    };
    let wall_ms = started.elapsed().as_secs_f64() * 1e3;

    let trace_path = args.out.join(format!(
        "trace_{}_n{}_seed{}.csv",
        method, problem.dim(), args.seed
    ));
    write_text(&trace_path, &trace_to_csv(&trace, args.with_timing))?;

    let final_f = problem.objective(&trace.final_point)?;
    let mut meta = vec![
        format!("command run"),
        format!("method {method}"),
        format!("n {}", problem.dim()),
        format!("instance_seed {}", spec.seed),
        format!("run_seed {}", args.seed),
        format!("eps {}", fmt_g17(args.eps)),
        format!("schedule c {} p {}", fmt_g17(args.beta0), fmt_g17(args.p)),
        format!("iterations {}", trace.iterations()),
        format!(
            "iteration_unit {}",
            if method == MethodKind::Stochastic { "prox_steps" } else { "cycles" }
        ),
        format!("terminated {:?}", trace.terminated),
        format!("final_f {}", fmt_g17(final_f)),
        format!("wall_ms {}", fmt_g17(wall_ms)),
    ];
    if let Some(o) = &oracle {
        meta.push(format!("f_star {}", fmt_g17(o.f_star)));
        meta.push(format!("final_gap {}", fmt_g17(final_f - o.f_star)));
    }
    for w in &trace.warnings {
        meta.push(format!("warning {w}"));
    }
    sidecar(&args.out.join("run_meta.txt"), &meta)?;

    println!(
        "final f = {}, iterations = {} ({}), elapsed = {:.1} ms",
        fmt_g17(final_f),
        trace.iterations(),
        if method == MethodKind::Stochastic { "prox steps" } else { "cycles" },
        wall_ms
    );
    if let Some(o) = &oracle {
        println!("gap to ground truth = {}", fmt_g17(final_f - o.f_star));
    }
    println!("trace written to {}", trace_path.display());

    Ok(match trace.terminated {
        Termination::EpsilonReached => EXIT_OK,
        Termination::MaxIterations => EXIT_NO_CONVERGENCE,
    })
}

fn cmd_bench(args: BenchArgs) -> Result<u8, Error> {
    let (spec, _problem) = load_or_generate(&args.instance, args.n, args.seed)?;
    let methods: Vec<MethodKind> = args
        .methods
        .iter()
        .map(|m| m.parse())
        .collect::<Result<_, _>>()?;
    if methods.is_empty() || args.epsilons.is_empty() {
        return Err(Error::config("need at least one method and one epsilon"));
    }
    for &e in &args.epsilons {
        if !(e > 0.0) {
            return Err(Error::config("epsilons must be positive"));
        }
    }
    let plan = ExperimentPlan {
        spec,
        methods,
        epsilons: args.epsilons.clone(),
        runs: args.runs,
        schedule: make_schedule(args.beta0, args.p)?,
        max_outer: args.max_outer,
        seed: args.seed,
    };
    let started = Instant::now();
    let result = run_experiment(&plan)?;
    let wall_ms = started.elapsed().as_secs_f64() * 1e3;

    let summary_path = args.out.join("summary.csv");
    write_text(&summary_path, &summary_to_csv(&result.rows, args.with_timing))?;
    if let Some(reason) = &result.incomplete {
        // Partial results are on disk; mark them and bail out.
        write_text(&args.out.join("INCOMPLETE"), &format!("{reason}\n"))?;
        eprintln!("experiment incomplete: {reason}");
        eprintln!("partial summary written to {}", summary_path.display());
        return Ok(EXIT_CONFIG);
    }
    if args.write_traces {
        for (method, eps, rep, trace) in &result.traces {
            let p = args
                .out
                .join(format!("trace_{method}_eps{eps:e}_rep{rep}.csv"));
            write_text(&p, &trace_to_csv(trace, args.with_timing))?;
        }
    }
    let meta = vec![
        "command bench".to_string(),
        format!("instance_seed {}", plan.spec.seed),
        format!("n {}", plan.spec.n),
        format!("runs {}", plan.runs),
        format!("max_outer {}", plan.max_outer),
        "iteration_unit cyclic/permuted=cycles stochastic=prox_steps".to_string(),
        format!("wall_ms {}", fmt_g17(wall_ms)),
    ];
    sidecar(&args.out.join("bench_meta.txt"), &meta)?;

    // Table-shaped stdout summary; iteration counting convention disclosed.
    println!("iterations: cycles for cyclic/permuted, prox steps for stochastic");
    println!(
        "{:<12} {:>6} {:>10} {:>6} {:>16} {:>14}",
        "method", "n", "epsilon", "runs", "avg_iterations", "avg_cpu_ms"
    );
    for r in &result.rows {
        println!(
            "{:<12} {:>6} {:>10.1e} {:>6} {:>16.1} {:>14.3}",
            r.method.to_string(),
            r.n,
            r.epsilon,
            r.runs,
            r.avg_iterations,
            r.avg_cpu_ms
        );
    }
    println!("summary written to {}", summary_path.display());
    Ok(EXIT_OK)
}

const ALL_SUITES: [&str; 7] = [
    "lemma",
    "cycle",
    "stepbound",
    "stochastic",
    "supermartingale",
    "proxoracle",
    "firmnonexp",
];

fn cmd_check(args: CheckArgs) -> Result<u8, Error> {
    if args.trials == 0 {
        return Err(Error::config("--trials must be at least 1"));
    }
    let suites: Vec<String> = if args.suite.iter().any(|s| s == "all") {
        ALL_SUITES.iter().map(|s| s.to_string()).collect()
    } else {
        args.suite.clone()
    };
    for s in &suites {
        if !ALL_SUITES.contains(&s.as_str()) {
            return Err(Error::config(format!(
                "unknown suite '{s}' (expected one of {ALL_SUITES:?} or 'all')"
            )));
        }
    }
    let (_, problem) = load_or_generate(&args.instance, Some(args.n), args.seed)?;
    let inner_tol = 1e-11;
    let mut reports: Vec<InequalityReport> = Vec::new();
    let mut extra_lines: Vec<String> = Vec::new();
    let mut all_passed = true;

    let needs_trace = suites.iter().any(|s| s == "cycle" || s == "stepbound");
    let needs_oracle = suites
        .iter()
        .any(|s| matches!(s.as_str(), "cycle" | "stochastic" | "supermartingale"));
    let oracle = if needs_oracle {
        Some(oracle_minimize(&problem, 1e-12)?)
    } else {
        None
    };
    let schedule = make_schedule(1.0, 1.0)?;

    let cyclic_trace = if needs_trace {
        let config = RunConfig::new(schedule, StoppingRule::new(1e-8, 100_000)?)
            .with_retained_iterates();
        let x0 = problem.feasible().midpoint();
        Some(run_permuted(&problem, &PermutationSource::FixedCyclic, &x0, &config)?)
    } else {
        None
    };

    for suite in &suites {
        match suite.as_str() {
            "lemma" => {
                reports.push(check_lemma_descent(&problem, args.trials, args.seed, inner_tol)?);
                reports.push(check_prox_convex_inequality(
                    &problem, args.trials, args.seed, inner_tol,
                )?);
            }
            "cycle" => {
                let trace = cyclic_trace.as_ref().unwrap();
                let probe = &oracle.as_ref().unwrap().x_star;
                reports.push(check_cycle_inequality(trace, &problem, &schedule, probe)?);
            }
            "stepbound" => {
                let trace = cyclic_trace.as_ref().unwrap();
                reports.push(check_step_bound(trace, &problem, &schedule)?);
            }
            "stochastic" => {
                let probe = &oracle.as_ref().unwrap().x_star;
                reports.push(check_stochastic_descent(
                    &problem,
                    probe,
                    0.05,
                    args.trials.min(200),
                    args.seed,
                    inner_tol,
                )?);
            }
            "supermartingale" => {
                use rayon::prelude::*;
                let o = oracle.as_ref().unwrap();
                let sched = make_schedule(1.0, 1.0)?;
                let steps = 4_000_000;
                let traces: Vec<Trace64> = (0..30u64)
                    .into_par_iter()
                    .map(|s| {
                        let config = RunConfig::new(
                            sched,
                            StoppingRule::new(1e-13, steps).unwrap(),
                        )
                        .with_reference(o.x_star.clone())
                        .with_record_stride(steps / 100_000);
                        let mut sampler =
                            IndexSampler::new(args.seed.wrapping_add(s), problem.num_components())?;
                        run_stochastic(&problem, &mut sampler, &problem.feasible().midpoint(), &config)
                    })
                    .collect::<Result<_, _>>()?;
                let report = check_supermartingale_trend(&traces, &sched, o.f_star, 1e-4)?;
                extra_lines.push(format!(
                    "{{\"name\":\"supermartingale_trend\",\"traces\":{},\"passed\":{},\"worst_oscillation\":{:e},\"worst_tail_ratio\":{:e}}}",
                    report.traces, report.passed, report.worst_oscillation, report.worst_tail_ratio
                ));
                println!(
                    "supermartingale_trend: passed {}/{} (worst oscillation {:.3e}, worst tail ratio {:.3e})",
                    report.passed, report.traces, report.worst_oscillation, report.worst_tail_ratio
                );
                if !report.all_passed() {
                    all_passed = false;
                }
            }
            "proxoracle" => {
                reports.push(check_prox_oracle_agreement(&problem, args.trials, args.seed)?);
            }
            "firmnonexp" => {
                reports.push(check_firm_nonexpansive(&problem, args.trials, args.seed, inner_tol)?);
            }
            _ => unreachable!(),
        }
    }

    let mut json_lines: Vec<String> = Vec::new();
    for r in &reports {
        println!(
            "{}: samples {}, violations {}, worst slack {:.3e} (tolerance {:.0e})",
            r.name, r.samples, r.violations, r.worst_slack, r.tolerance
        );
        json_lines.push(r.to_json());
        if !r.passed() {
            all_passed = false;
        }
    }
    json_lines.extend(extra_lines);
    let report_path = args.out.join("check_report.json");
    write_text(&report_path, &format!("[{}]\n", json_lines.join(",\n ")))?;
    println!("report written to {}", report_path.display());

    Ok(if all_passed { EXIT_OK } else { EXIT_VIOLATIONS })
}
