use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::Instant;

use cga_core::experiments::{
    demo, parallel, sweep, verify, DominationSpec, LowerSpec, NlognSpec, ParallelSpec, PotentialSpec, UpperSpec,
    VerifySpec, DEFAULT_MASTER_SEED,
};
use cga_core::invariants::InvariantChecker;
use cga_core::oracle::{pmf_brute_force, poisson_binomial_pmf};
use cga_core::trace::TraceRecorder;
use cga_core::{make_params, rng_from_seed, Cga, FitnessSpec, MuPolicy, StopRule};
use rand::Rng;

const SEED: u64 = DEFAULT_MASTER_SEED;

type Outputs = BTreeMap<String, Vec<u8>>;

type Criterion = (&'static str, Box<dyn Fn(&mut Outputs) -> Verdict>);

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn csv_bytes(write: impl FnOnce(&mut Vec<u8>) -> cga_core::Result<()>) -> Vec<u8> {
    let mut buf = Vec::new();
    write(&mut buf).expect("CSV written to memory");
    buf
}

fn exact_lemma_suite(out: &mut Outputs) -> Verdict {
    let r = verify::run_verify_suite(&VerifySpec::default(), SEED).expect("verify suite runs");
    out.insert("verify.csv".into(), csv_bytes(|b| verify::write_verify_csv(&r.rows, b)));
    let counts = r.counts();
    let rows = |name: &str| counts.iter().find(|c| c.0 == name).map_or(0, |c| c.1);
    let coverage = [
        ("binomial_tail", 1),
        ("opt_upper", 1000),
        ("opt_lower", 1000),
        ("distinct_norms", 1000),
        ("sample_tail_upper", 1000),
        ("sample_tail_lower", 1000),
        ("gap_bound", 1000),
        ("onemax_bit_drift", 200),
    ];
    let short: Vec<String> = coverage
        .iter()
        .filter(|(name, min)| rows(name) < *min)
        .map(|(name, _)| name.to_string())
        .collect();
    let grid_ok = (1..=20u32).all(|n| {
        (1..=9u64).all(|m| {
            (0..=n).all(|k| {
                cga_core::oracle::check_binomial_tail_bound(n, m, 10, k).is_ok_and(|c| c.holds)
            })
        })
    });
    verdict(
        r.all_hold() && short.is_empty() && grid_ok,
        format!(
            "{} rows, {} failures, under-covered sweeps {:?}, binomial grid holds {grid_ok}",
            r.rows.len(),
            r.failures.len(),
            short
        ),
    )
}

fn dp_equals_enumeration() -> Verdict {
    let mut rng = rng_from_seed(SEED);
    let mut worst = 0.0f64;
    for n in [4usize, 8, 12, 16] {
        for _ in 0..100 {
            let f: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
            let dp = poisson_binomial_pmf(&f).expect("valid probabilities");
            let brute = pmf_brute_force(&f).expect("n <= 20");
            for (a, b) in dp.probs().iter().zip(brute.probs()) {
                worst = worst.max((a - b).abs());
            }
        }
    }
    verdict(worst <= 1e-10, format!("400 vectors, largest entrywise difference {worst:.3e}"))
}

fn engine_invariants(out: &mut Outputs) -> Verdict {
    let n = 500;
    let requested = (12.0 * (n as f64).sqrt() * (n as f64).ln()).ceil() as u64;
    let params = make_params(n, requested, MuPolicy::RoundUp)
        .expect("valid dimension")
        .with_seed(SEED);
    let fitness = FitnessSpec::jump(n, 4).expect("valid jump");
    let mut checker = InvariantChecker::new();
    let mut recorder = TraceRecorder::new(1000, None);
    let r = Cga::new(&params).run(&fitness, &StopRule::budget_only(100_000), &mut (&mut recorder, &mut checker));
    let mut trace = Vec::new();
    recorder.finish().write_jsonl(&mut trace).expect("trace written to memory");
    out.insert("run_trace.jsonl".into(), trace);
    let first = checker.violations().first().map(|v| format!(", first: {v:?}")).unwrap_or_default();
    verdict(
        checker.violation_count() == 0 && checker.steps_checked() == 100_000,
        format!(
            "mu = {}, {} steps checked, {} violations, final D = {:.2}{first}",
            params.mu(),
            checker.steps_checked(),
            checker.violation_count(),
            r.final_distance
        ),
    )
}

fn upper_scaling(out: &mut Outputs) -> Verdict {
    let results = sweep::run_upper_scaling(&UpperSpec::default(), SEED).expect("upper sweep runs");
    let mut pass = true;
    let mut parts = Vec::new();
    for r in &results {
        out.insert(
            format!("upper_{}.csv", r.variant.name()),
            csv_bytes(|b| sweep::write_sweep_csv(&r.rows(), b)),
        );
        let ok = r.min_success_rate() >= 0.9 && r.median_spread() <= 3.0;
        pass &= ok;
        parts.push(format!(
            "{}: min success {:.2}, spread {:.2}",
            r.variant.name(),
            r.min_success_rate(),
            r.median_spread()
        ));
    }
    verdict(pass && results.len() == 3, parts.join("; "))
}

fn lower_exponential(out: &mut Outputs) -> Verdict {
    let r = sweep::run_lower_exponential(&LowerSpec::default(), SEED).expect("lower sweep runs");
    out.insert("lower.csv".into(), csv_bytes(|b| sweep::write_sweep_csv(&r.rows(), b)));
    let best: Vec<String> = r.best.iter().map(|b| format!("k={} mu={} median={}", b.k, b.mu, b.median)).collect();
    verdict(
        r.strictly_increasing && r.log_median_slope > 0.0 && r.p_value < 0.01,
        format!(
            "best [{}], slope {:.3}, p = {:.1e}",
            best.join(", "),
            r.log_median_slope,
            r.p_value
        ),
    )
}

fn potential_drift(out: &mut Outputs) -> Verdict {
    let r = demo::run_potential_trace(&PotentialSpec::default(), SEED).expect("potential demo runs");
    out.insert("potential_drift.csv".into(), csv_bytes(|b| demo::write_drift_csv(&r.bins, b)));
    let worst = r
        .bins
        .iter()
        .filter(|b| b.judged)
        .map(|b| b.mean)
        .fold(f64::NEG_INFINITY, f64::max);
    verdict(
        r.holds() && r.judged_bins() > 0,
        format!("{} judged bins, largest mean drift {worst:.3e} against 2 + 3 SE", r.judged_bins()),
    )
}

fn parallel_accounting(out: &mut Outputs) -> Verdict {
    let spec = ParallelSpec::default();
    let r = parallel::run_parallel_demo(&spec, SEED).expect("parallel demo runs");
    out.insert("parallel_log.csv".into(), csv_bytes(|b| parallel::write_run_log_csv(&r.log, b)));
    out.insert("parallel_tail.csv".into(), csv_bytes(|b| parallel::write_tail_csv(&r.tail, b)));
    let rounds: u32 = r.runs.iter().map(|s| s.rounds_checked).sum();
    let tail: Vec<String> = r
        .tail
        .iter()
        .map(|t| format!("j={} {:.4} vs {:.4}", t.j, t.empirical, t.expected))
        .collect();
    verdict(
        r.holds() && r.runs.len() == 100 && r.runs.iter().all(|s| s.success),
        format!(
            "{} runs, {rounds} rounds checked, identities hold {}, tail [{}]",
            r.runs.len(),
            r.identities_hold(),
            tail.join(", ")
        ),
    )
}

fn domination(out: &mut Outputs) -> Verdict {
    let r = demo::run_domination_demo(&DominationSpec::default(), SEED).expect("domination demo runs");
    out.insert("domination.csv".into(), csv_bytes(|b| demo::write_domination_csv(&r, b)));
    verdict(
        r.holds() && r.replicates == 100_000 && r.n == 200 && r.mu == 200,
        format!(
            "d(f) CI [{:.4}, {:.4}] vs d(g) CI [{:.4}, {:.4}]; n = {}: {:.4} > {:.4}, bound {:.4}",
            r.f_distance.ci_low,
            r.f_distance.ci_high,
            r.g_distance.ci_low,
            r.g_distance.ci_high,
            r.exact.n,
            r.exact.prob_f,
            r.exact.prob_g,
            r.exact.lower_bound
        ),
    )
}

fn nlogn_floor(out: &mut Outputs) -> Verdict {
    let spec = NlognSpec::default();
    let r = sweep::run_nlogn_floor(&spec, SEED).expect("nlogn sweep runs");
    out.insert("nlogn.csv".into(), csv_bytes(|b| sweep::write_sweep_csv(&r.rows(), b)));
    let arm_floor = spec.mu_arm.as_ref().map_or(0.0, |a| a.floor_constant);
    let floor_ok = r.ratios.iter().all(|&x| x >= spec.floor_constant);
    let arm_ok = r.mu_arm_ratios.iter().all(|&x| x >= arm_floor);
    let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:.2}")).collect::<Vec<_>>().join(", ");
    verdict(
        r.nondecreasing && floor_ok && arm_ok,
        format!(
            "ratios [{}] >= {}, mu-arm ratios [{}] >= {arm_floor}, nondecreasing {}",
            fmt(&r.ratios),
            spec.floor_constant,
            fmt(&r.mu_arm_ratios),
            r.nondecreasing
        ),
    )
}

/// Runs every criterion inside a pool of `threads` workers.
fn run_all(threads: usize, report: bool) -> (Vec<Verdict>, Outputs) {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .expect("thread pool");
    pool.install(|| {
        let mut out = Outputs::new();
        let criteria: Vec<Criterion> = vec![
            ("exact lemma suite", Box::new(exact_lemma_suite)),
            ("DP equals enumeration", Box::new(|_: &mut Outputs| dp_equals_enumeration())),
            ("engine invariants", Box::new(engine_invariants)),
            ("upper scaling", Box::new(upper_scaling)),
            ("lower exponential direction", Box::new(lower_exponential)),
            ("potential drift", Box::new(potential_drift)),
            ("parallel accounting and tail", Box::new(parallel_accounting)),
            ("domination demo", Box::new(domination)),
            ("n log n floor", Box::new(nlogn_floor)),
        ];
        let mut verdicts = Vec::new();
        for (i, (name, run)) in criteria.iter().enumerate() {
            let start = Instant::now();
            let v = run(&mut out);
            if report {
                print_line(i + 1, name, &v, start.elapsed().as_secs_f64());
            }
            verdicts.push(v);
        }
        (verdicts, out)
    })
}

fn print_line(id: usize, name: &str, v: &Verdict, secs: f64) {
    let tag = if v.pass { "PASS" } else { "FAIL" };
    println!("{tag} criterion {id:>2} ({name}, {secs:.1}s): {}", v.detail);
}

fn main() -> ExitCode {
    let first_threads = 1;
    let second_threads = 4;
    let (mut verdicts, first) = run_all(first_threads, true);

    let start = Instant::now();
    let (_, second) = run_all(second_threads, false);
    let differing: Vec<&String> = first
        .keys()
        .filter(|k| second.get(*k) != first.get(*k))
        .chain(second.keys().filter(|k| !first.contains_key(*k)))
        .collect();
    let determinism = verdict(
        differing.is_empty(),
        format!(
            "{} outputs compared between {first_threads} and {second_threads} threads, differing {:?}",
            first.len(),
            differing
        ),
    );
    print_line(10, "determinism across thread counts", &determinism, start.elapsed().as_secs_f64());
    verdicts.push(determinism);

    let failed = verdicts.iter().filter(|v| !v.pass).count();
    println!("{} of {} criteria passed", verdicts.len() - failed, verdicts.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
