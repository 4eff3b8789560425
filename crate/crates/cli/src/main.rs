//! `cgalab`: runs, sweeps, exact verification and demos for the compact genetic algorithm.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use cga_core::experiments::{
    demo, parallel, sweep, verify, DominationSpec, ExperimentConfig, ExperimentSpec, LowerSpec, NlognSpec,
    ParallelSpec, PotentialSpec, UpperSpec, Variant, VerifySpec, DEFAULT_MASTER_SEED,
};
use cga_core::oracle;
use cga_core::trace::TraceRecorder;
use cga_core::{make_params, BitString, Cga, FitnessSpec, FrequencyVector, MuPolicy, Potential, StopRule};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

#[derive(Parser, Debug)]
#[command(name = "cgalab", version, about = "Compact genetic algorithm lab: sweeps, exact lemma checks and demos")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// JSON experiment config; its `kind` must match the subcommand.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed (overrides the config).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (overrides the config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Reduced grids.
    #[arg(long, global = true)]
    quick: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// A single traced run.
    Run(RunArgs),
    /// Runtime scaling sweeps.
    Sweep {
        #[arg(long, value_enum)]
        kind: SweepKind,
    },
    /// Exact sweeps over every checked bound; exits 1 on any violation.
    Verify {
        /// Cases per randomized sweep.
        #[arg(long)]
        cases: Option<usize>,
        #[arg(long, hide = true)]
        inject_violation: bool,
    },
    /// Budget accounting of the parallel-run strategy.
    Parallel,
    /// Counterexample and potential demos.
    Demo {
        #[arg(long, value_enum)]
        kind: DemoKind,
    },
    /// Ad-hoc exact queries, printed as JSON.
    #[command(subcommand)]
    Oracle(OracleQuery),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum SweepKind {
    Upper,
    Lower,
    Nlogn,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum DemoKind {
    Domination,
    Potential,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum VariantArg {
    Onemax,
    Jump,
    Plateau,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Onemax => Variant::Onemax,
            VariantArg::Jump => Variant::Jump,
            VariantArg::Plateau => Variant::Plateau,
        }
    }
}

#[derive(Args, Debug)]
struct RunArgs {
    #[arg(long, default_value_t = 100)]
    n: usize,
    #[arg(long, default_value_t = 3)]
    k: usize,
    /// Rounded up to the next well-behaved value.
    #[arg(long, default_value_t = 100)]
    mu: u64,
    #[arg(long, value_enum, default_value_t = VariantArg::Jump)]
    variant: VariantArg,
    #[arg(long, default_value_t = 1_000_000)]
    budget: u64,
    #[arg(long, default_value_t = 1)]
    stride: u64,
    /// Attach the potential `exp(c min(k/2 - D, k/4))` to the trace.
    #[arg(long)]
    potential_c: Option<f64>,
    /// Stop once `D_t` is at most this value.
    #[arg(long)]
    target_distance: Option<f64>,
}

#[derive(Subcommand, Debug)]
enum OracleQuery {
    /// Distribution of the number of ones under `f`.
    Pmf {
        #[arg(long, value_delimiter = ',')]
        f: Vec<f64>,
    },
    /// Probability of sampling `x`, with the exp(-distance) upper bound.
    Point {
        #[arg(long, value_delimiter = ',')]
        f: Vec<f64>,
        #[arg(long)]
        x: String,
    },
    /// Exact tail of Bin(n, p_num/p_den) at k against C(n, k) p^k.
    Binomial {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        p_num: u64,
        #[arg(long)]
        p_den: u64,
        #[arg(long)]
        k: u32,
    },
    /// Exact one-step expectation from frequency indices (n <= 12).
    Step {
        #[arg(long)]
        mu: u64,
        #[arg(long, value_delimiter = ',')]
        indices: Vec<u32>,
        #[arg(long, value_enum, default_value_t = VariantArg::Onemax)]
        variant: VariantArg,
        #[arg(long, default_value_t = 1)]
        k: usize,
    },
    /// Exact Pr[|‖x¹‖₁ - ‖x²‖₁| >= sqrt(D)/5] over a grid of D.
    NormGap {
        #[arg(long, default_value_t = 256)]
        n: usize,
        #[arg(long, value_delimiter = ',', default_value = "1,4,16,64")]
        d: Vec<u64>,
        #[arg(long, default_value_t = 3)]
        trials: usize,
    },
    /// Exact gap probability at D = k + c against the constant 0.293.
    GapClaim {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        c: usize,
    },
}

/// Errors that map to exit code 2.
#[derive(Debug)]
struct InvalidConfig(String);

impl std::fmt::Display for InvalidConfig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InvalidConfig {}

fn invalid(msg: impl Into<String>) -> anyhow::Error {
    anyhow!(InvalidConfig(msg.into()))
}

fn core_err(e: cga_core::Error) -> anyhow::Error {
    match e {
        cga_core::Error::Io(_) => anyhow!(e),
        other => invalid(other.to_string()),
    }
}

struct Session {
    seed: u64,
    out: PathBuf,
    quick: bool,
    config: Option<ExperimentSpec>,
}

impl Session {
    fn file(&self, name: &str) -> anyhow::Result<BufWriter<File>> {
        fs::create_dir_all(&self.out).with_context(|| format!("creating {}", self.out.display()))?;
        let path = self.out.join(name);
        let f = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        Ok(BufWriter::new(f))
    }

    fn path(&self, name: &str) -> String {
        self.out.join(name).display().to_string()
    }
}

fn load_config(path: &Path) -> anyhow::Result<ExperimentConfig> {
    let text = fs::read_to_string(path).map_err(|e| invalid(format!("reading {}: {e}", path.display())))?;
    ExperimentConfig::from_json(&text).map_err(core_err)
}

/// The config's spec when it matches `pick`, the quick or default spec otherwise.
fn choose<T>(
    ctx: &Session,
    kind: &str,
    pick: impl Fn(&ExperimentSpec) -> Option<T>,
    quick: impl Fn() -> T,
    default: impl Fn() -> T,
) -> anyhow::Result<T> {
    match &ctx.config {
        Some(spec) => pick(spec).ok_or_else(|| invalid(format!("the config does not describe a {kind} experiment"))),
        None if ctx.quick => Ok(quick()),
        None => Ok(default()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<InvalidConfig>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(3)
            }
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    let g = cli.global;
    let cfg = g.config.as_deref().map(load_config).transpose()?;
    let threads = g.threads.or(cfg.as_ref().and_then(|c| c.threads));
    if let Some(t) = threads {
        if t == 0 {
            bail!(invalid("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global().context("starting the thread pool")?;
    }
    let ctx = Session {
        seed: g.seed.or(cfg.as_ref().map(|c| c.master_seed)).unwrap_or(DEFAULT_MASTER_SEED),
        out: g.out.or(cfg.as_ref().and_then(|c| c.out_dir.clone())).unwrap_or_else(|| PathBuf::from("results")),
        quick: g.quick,
        config: cfg.map(|c| c.spec),
    };
    match cli.command {
        Command::Run(args) => cmd_run(&ctx, &args),
        Command::Sweep { kind } => cmd_sweep(&ctx, kind),
        Command::Verify { cases, inject_violation } => cmd_verify(&ctx, cases, inject_violation),
        Command::Parallel => cmd_parallel(&ctx),
        Command::Demo { kind } => cmd_demo(&ctx, kind),
        Command::Oracle(q) => cmd_oracle(&ctx, q),
    }
}

fn cmd_run(ctx: &Session, a: &RunArgs) -> anyhow::Result<ExitCode> {
    let variant = Variant::from(a.variant);
    let fitness = variant.build(a.n, a.k).map_err(core_err)?;
    let params = make_params(a.n, a.mu, MuPolicy::RoundUp).map_err(core_err)?.with_seed(ctx.seed);
    if params.mu() != a.mu {
        eprintln!("note: mu = {} rounded up to {}", a.mu, params.mu());
    }
    let potential = a.potential_c.map(|c| Potential::new(c, fitness.k())).transpose().map_err(core_err)?;
    let mut stop = StopRule::optimum(a.budget);
    if let Some(d) = a.target_distance {
        stop = stop.with_target_distance(d);
    }
    let mut recorder = TraceRecorder::new(a.stride.max(1), potential);
    let result = Cga::new(&params).run(&fitness, &stop, &mut recorder);
    let trace = recorder.finish();
    let trace_path = ctx.path("run_trace.jsonl");
    trace.write_jsonl(ctx.file("run_trace.jsonl")?).map_err(core_err)?;
    let summary = json!({
        "n": a.n,
        "k": fitness.k(),
        "mu": params.mu(),
        "variant": variant.name(),
        "seed": ctx.seed,
        "hit_optimum": result.hit_optimum,
        "stop_reason": result.stop_reason,
        "iterations_used": result.iterations_used,
        "samples_used": result.samples_used,
        "final_D": result.final_distance,
        "gap_samples": result.gap_samples,
        "trace": trace_path,
    });
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(ExitCode::SUCCESS)
}

fn cmd_sweep(ctx: &Session, kind: SweepKind) -> anyhow::Result<ExitCode> {
    match kind {
        SweepKind::Upper => {
            let spec = choose(
                ctx,
                "upper_scaling",
                |s| match s {
                    ExperimentSpec::UpperScaling(u) => Some(u.clone()),
                    _ => None,
                },
                UpperSpec::quick,
                UpperSpec::default,
            )?;
            for r in sweep::run_upper_scaling(&spec, ctx.seed).map_err(core_err)? {
                for w in r.warnings.iter().take(1) {
                    eprintln!("warning ({}): {w}; running under the override", r.variant.name());
                }
                let name = format!("upper_{}.csv", r.variant.name());
                sweep::write_sweep_csv(&r.rows(), ctx.file(&name)?).map_err(core_err)?;
                println!(
                    "{}: min success rate {:.3}, normalized medians {:?}, spread {:.3} -> {}",
                    r.variant.name(),
                    r.min_success_rate(),
                    r.normalized_medians,
                    r.median_spread(),
                    ctx.path(&name)
                );
            }
        }
        SweepKind::Lower => {
            let spec = choose(
                ctx,
                "lower_exponential",
                |s| match s {
                    ExperimentSpec::LowerExponential(l) => Some(l.clone()),
                    _ => None,
                },
                LowerSpec::quick,
                LowerSpec::default,
            )?;
            let r = sweep::run_lower_exponential(&spec, ctx.seed).map_err(core_err)?;
            sweep::write_sweep_csv(&r.rows(), ctx.file("lower.csv")?).map_err(core_err)?;
            for b in &r.best {
                println!("k = {}: best mu = {}, median = {}", b.k, b.mu, b.median);
            }
            println!(
                "strictly increasing: {}, log-median slope {:.4}, permutation p = {:.5} -> {}",
                r.strictly_increasing,
                r.log_median_slope,
                r.p_value,
                ctx.path("lower.csv")
            );
        }
        SweepKind::Nlogn => {
            let spec = choose(
                ctx,
                "nlogn_floor",
                |s| match s {
                    ExperimentSpec::NlognFloor(l) => Some(l.clone()),
                    _ => None,
                },
                NlognSpec::quick,
                NlognSpec::default,
            )?;
            let r = sweep::run_nlogn_floor(&spec, ctx.seed).map_err(core_err)?;
            sweep::write_sweep_csv(&r.rows(), ctx.file("nlogn.csv")?).map_err(core_err)?;
            println!(
                "median/(n ln n) {:?}, nondecreasing {}, mu-arm median/(mu sqrt n) {:?} -> {}",
                r.ratios,
                r.nondecreasing,
                r.mu_arm_ratios,
                ctx.path("nlogn.csv")
            );
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(ctx: &Session, cases: Option<usize>, inject: bool) -> anyhow::Result<ExitCode> {
    let mut spec = choose(
        ctx,
        "verify_suite",
        |s| match s {
            ExperimentSpec::VerifySuite(v) => Some(v.clone()),
            _ => None,
        },
        VerifySpec::quick,
        VerifySpec::default,
    )?;
    if let Some(c) = cases {
        spec.cases = c;
    }
    spec.inject_violation |= inject;
    let report = verify::run_verify_suite(&spec, ctx.seed).map_err(core_err)?;
    verify::write_verify_csv(&report.rows, ctx.file("verify.csv")?).map_err(core_err)?;
    for (lemma, rows, failed) in report.counts() {
        println!("{lemma:<22} {rows:>6} rows  {failed} violations");
    }
    if report.all_hold() {
        println!("all bounds hold -> {}", ctx.path("verify.csv"));
        Ok(ExitCode::SUCCESS)
    } else {
        for f in &report.failures {
            eprintln!("violation: {}", serde_json::to_string(f)?);
        }
        Ok(ExitCode::from(1))
    }
}

fn cmd_parallel(ctx: &Session) -> anyhow::Result<ExitCode> {
    let spec = choose(
        ctx,
        "parallel_demo",
        |s| match s {
            ExperimentSpec::ParallelDemo(p) => Some(p.clone()),
            _ => None,
        },
        ParallelSpec::quick,
        ParallelSpec::default,
    )?;
    let r = parallel::run_parallel_demo(&spec, ctx.seed).map_err(core_err)?;
    parallel::write_run_log_csv(&r.log, ctx.file("parallel_log.csv")?).map_err(core_err)?;
    parallel::write_tail_csv(&r.tail, ctx.file("parallel_tail.csv")?).map_err(core_err)?;
    let successes = r.runs.iter().filter(|s| s.success).count();
    let checked: u32 = r.runs.iter().map(|s| s.rounds_checked).sum();
    println!("{successes}/{} runs succeeded; {checked} completed rounds checked", r.runs.len());
    for t in &r.tail {
        println!(
            "Pr[extra rounds >= {}] = {:.4} vs {:.4} (3 sigma = {:.4})",
            t.j,
            t.empirical,
            t.expected,
            3.0 * t.sigma
        );
    }
    println!("median synthetic total {} = {:.3} * 2^i0 i0 (i0 = {})", r.median_total, r.median_ratio, r.first_adequate_round);
    if r.identities_hold() && r.synthetic_failures == 0 {
        Ok(ExitCode::SUCCESS)
    } else {
        for s in r.runs.iter().filter(|s| !s.identity_violations.is_empty()) {
            eprintln!("run {}: {:?}", s.run, s.identity_violations);
        }
        Ok(ExitCode::from(1))
    }
}

fn cmd_demo(ctx: &Session, kind: DemoKind) -> anyhow::Result<ExitCode> {
    match kind {
        DemoKind::Domination => {
            let spec = choose(
                ctx,
                "domination_demo",
                |s| match s {
                    ExperimentSpec::DominationDemo(d) => Some(d.clone()),
                    _ => None,
                },
                DominationSpec::quick,
                DominationSpec::default,
            )?;
            let r = demo::run_domination_demo(&spec, ctx.seed).map_err(core_err)?;
            demo::write_domination_csv(&r, ctx.file("domination.csv")?).map_err(core_err)?;
            println!("{}", serde_json::to_string_pretty(&r)?);
        }
        DemoKind::Potential => {
            let spec = choose(
                ctx,
                "potential_demo",
                |s| match s {
                    ExperimentSpec::PotentialDemo(p) => Some(p.clone()),
                    _ => None,
                },
                PotentialSpec::quick,
                PotentialSpec::default,
            )?;
            let r = demo::run_potential_trace(&spec, ctx.seed).map_err(core_err)?;
            demo::write_drift_csv(&r.bins, ctx.file("potential_drift.csv")?).map_err(core_err)?;
            r.trace.write_jsonl(ctx.file("potential_trace.jsonl")?).map_err(core_err)?;
            let worst = r.bins.iter().filter(|b| b.judged).map(|b| b.mean).fold(f64::NEG_INFINITY, f64::max);
            println!(
                "Y_max = {:.6}; {} judged bins, largest mean drift {worst:.3e}, all within 2 + 3 SE: {}",
                r.y_max,
                r.judged_bins(),
                r.holds()
            );
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_oracle(ctx: &Session, q: OracleQuery) -> anyhow::Result<ExitCode> {
    let value = match q {
        OracleQuery::Pmf { f } => {
            let pmf = oracle::poisson_binomial_pmf(&f).map_err(core_err)?;
            json!({"probs": pmf.probs(), "mean": pmf.mean(), "total": pmf.total()})
        }
        OracleQuery::Point { f, x } => {
            let x: BitString = x.parse().map_err(|e| invalid(format!("bad bit string: {e}")))?;
            let c = oracle::check_lopt_ub(&f, &x).map_err(core_err)?;
            json!({"probability": c.lhs, "exp_minus_distance": c.rhs, "holds": c.holds})
        }
        OracleQuery::Binomial { n, p_num, p_den, k } => {
            serde_json::to_value(oracle::check_binomial_tail_bound(n, p_num, p_den, k).map_err(core_err)?)?
        }
        OracleQuery::Step { mu, indices, variant, k } => {
            let n = indices.len();
            let params = make_params(n, mu, MuPolicy::Reject).map_err(core_err)?;
            let f = FrequencyVector::from_indices(&params, indices).map_err(core_err)?;
            let fitness: FitnessSpec = Variant::from(variant).build(n, k).map_err(core_err)?;
            serde_json::to_value(oracle::exact_step_expectation(&f, &fitness).map_err(core_err)?)?
        }
        OracleQuery::NormGap { n, d, trials } => {
            serde_json::to_value(oracle::estimate_norm_gap_constant(&d, n, trials, ctx.seed).map_err(core_err)?)?
        }
        OracleQuery::GapClaim { n, k, c } => {
            serde_json::to_value(oracle::gap_claim_counter_check(n, k, c).map_err(core_err)?)?
        }
    };
    println!("{}", serde_json::to_string_pretty(&value)?);
    Ok(ExitCode::SUCCESS)
}
