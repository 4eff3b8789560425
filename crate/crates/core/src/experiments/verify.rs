//! Randomized exact sweeps over every probability bound the oracle can check.

use std::io::Write;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::bits::BitString;
use crate::error::Result;
use crate::fitness::FitnessSpec;
use crate::frequency::FrequencyVector;
use crate::oracle::{
    check_binomial_tail_bound, check_chernoff_sample_bounds, check_gap_bound, check_lboundary, check_ldiff,
    check_lonemax2, check_lopt, check_lopt_ub, exact_step_expectation, BoundCheck,
};
use crate::params::{make_params, mu_granularity, MuPolicy};
use crate::rng::{derive_replicate_seed, rng_from_seed, CgaRng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VerifySpec {
    /// Cases per randomized sweep; the enumeration sweeps use a fifth of it.
    pub cases: usize,
    /// Appends a deliberately wrong bound, for testing the failure path.
    pub inject_violation: bool,
}

impl Default for VerifySpec {
    fn default() -> Self {
        VerifySpec {
            cases: 1000,
            inject_violation: false,
        }
    }
}

impl VerifySpec {
    pub fn quick() -> Self {
        VerifySpec {
            cases: 10,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyRow {
    pub lemma: String,
    pub case_id: String,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// A failing row together with the full input that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailedCase {
    pub row: VerifyRow,
    pub input: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub rows: Vec<VerifyRow>,
    pub failures: Vec<FailedCase>,
}

impl VerifyReport {
    pub fn all_hold(&self) -> bool {
        self.failures.is_empty()
    }

    /// Rows per lemma, in first-seen order.
    pub fn counts(&self) -> Vec<(String, usize, usize)> {
        let mut out: Vec<(String, usize, usize)> = Vec::new();
        for r in &self.rows {
            match out.iter_mut().find(|(l, _, _)| *l == r.lemma) {
                Some(e) => {
                    e.1 += 1;
                    e.2 += usize::from(!r.holds);
                }
                None => out.push((r.lemma.clone(), 1, usize::from(!r.holds))),
            }
        }
        out
    }
}

type Case = (Vec<VerifyRow>, serde_json::Value);

fn row(lemma: &str, case_id: String, c: BoundCheck) -> VerifyRow {
    VerifyRow {
        lemma: lemma.into(),
        case_id,
        lhs: c.lhs,
        rhs: c.rhs,
        holds: c.holds,
    }
}

/// Evaluates `count` cases in parallel; case `i` gets its own stream.
fn sweep(seed: u64, tag: u64, count: usize, case: impl Fn(usize, &mut CgaRng) -> Result<Case> + Sync) -> Result<Vec<Case>> {
    let base = derive_replicate_seed(seed, tag);
    (0..count)
        .into_par_iter()
        .map(|i| case(i, &mut rng_from_seed(derive_replicate_seed(base, i as u64))))
        .collect()
}

fn binomial_tail_grid() -> Result<Vec<Case>> {
    let mut out = Vec::new();
    for n in 1..=20u32 {
        for m in 1..=9u64 {
            for k in 0..=n {
                let c = check_binomial_tail_bound(n, m, 10, k)?;
                let r = VerifyRow {
                    lemma: "binomial_tail".into(),
                    case_id: format!("n={n};p={m}/10;k={k}"),
                    lhs: c.exact_tail,
                    rhs: c.bound,
                    holds: c.holds,
                };
                out.push((vec![r], json!({"n": n, "p_num": m, "p_den": 10, "k": k})));
            }
        }
    }
    Ok(out)
}

fn uniform_in(rng: &mut CgaRng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(lo..=hi)).collect()
}

fn random_bits(rng: &mut CgaRng, n: usize) -> BitString {
    let bits: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.5)).collect();
    BitString::from_bools(&bits)
}

fn opt_upper(i: usize, rng: &mut CgaRng) -> Result<Case> {
    let n = rng.gen_range(5..=50);
    let lo = 1.0 / n as f64;
    let f = uniform_in(rng, n, lo, 1.0 - lo);
    let x = if i.is_multiple_of(4) { BitString::ones_vec(n) } else { random_bits(rng, n) };
    let c = check_lopt_ub(&f, &x)?;
    Ok((vec![row("opt_upper", format!("{i};n={n}"), c)], json!({"f": f, "x": x.to_string()})))
}

fn opt_lower(i: usize, rng: &mut CgaRng) -> Result<Case> {
    let n = rng.gen_range(1..=50);
    let c = if i.is_multiple_of(2) { 1.0 / 3.0 } else { rng.gen_range(0.05..0.95) };
    // Every fourth case sits on the extreme points {c, 1}, where the bound is tight.
    let f: Vec<f64> = if i % 4 == 1 {
        (0..n).map(|_| if rng.gen_bool(0.5) { c } else { 1.0 }).collect()
    } else {
        uniform_in(rng, n, c, 1.0)
    };
    let check = check_lopt(&f, c)?;
    Ok((vec![row("opt_lower", format!("{i};n={n}"), check)], json!({"f": f, "c": c})))
}

fn distinct_norms(i: usize, rng: &mut CgaRng) -> Result<Case> {
    let n: usize = rng.gen_range(2..=200);
    let m = rng.gen_range(n.div_ceil(2)..=n);
    let lo = 1.0 / n as f64;
    let f: Vec<f64> = match i % 4 {
        // Everything on the upper boundary: the hardest admissible case.
        0 => vec![1.0 - lo; m],
        1 => (0..m).map(|_| if rng.gen_bool(0.5) { lo } else { 1.0 - lo }).collect(),
        _ => uniform_in(rng, m, lo, 1.0 - lo),
    };
    let c = check_ldiff(&f, n)?;
    Ok((vec![row("distinct_norms", format!("{i};n={n};m={m}"), c)], json!({"f": f, "n": n})))
}

fn sample_tails(i: usize, rng: &mut CgaRng) -> Result<Case> {
    let n = rng.gen_range(5..=100);
    let f = uniform_in(rng, n, 0.0, 1.0);
    let delta = rng.gen_range(0.0..3.0);
    let delta_tilde = rng.gen_range(0.0..=1.0);
    let r = check_chernoff_sample_bounds(&f, delta, delta_tilde)?;
    let id = format!("{i};n={n}");
    Ok((
        vec![row("sample_tail_upper", id.clone(), r.upper), row("sample_tail_lower", id, r.lower)],
        json!({"f": f, "delta": delta, "delta_tilde": delta_tilde}),
    ))
}

fn gap_bound(i: usize, rng: &mut CgaRng) -> Result<Case> {
    loop {
        let n: usize = rng.gen_range(10..=200);
        let lo = 1.0 / n as f64;
        let top = rng.gen_range(2.0 * lo..=1.0 - lo);
        let f: Vec<f64> = (0..n).map(|_| 1.0 - rng.gen_range(lo..=top)).collect();
        let d = n as f64 - f.iter().sum::<f64>();
        let kmax = (d / 2.0).floor() as usize;
        if kmax < 1 {
            continue;
        }
        let k = rng.gen_range(1..=kmax.min(n));
        let c = check_gap_bound(&f, k)?;
        return Ok((vec![row("gap_bound", format!("{i};n={n};k={k}"), c)], json!({"f": f, "k": k})));
    }
}

fn onemax_bit_drift(i: usize, rng: &mut CgaRng) -> Result<Case> {
    let n = 8;
    let mu = 8 * rng.gen_range(1..=8u64);
    let p = make_params(n, mu, MuPolicy::Reject)?;
    let idx: Vec<u32> = (0..n).map(|_| rng.gen_range(1..p.n_mu())).collect();
    let f = FrequencyVector::from_indices(&p, idx.clone())?;
    let rows = check_lonemax2(&f)?
        .into_iter()
        .map(|(bit, c)| row("onemax_bit_drift", format!("{i};mu={mu};bit={bit}"), c))
        .collect();
    Ok((rows, json!({"n": n, "mu": mu, "indices": idx})))
}

/// A small-`n` state biased towards the boundaries, and a fitness from the jump family.
fn boundary_state(rng: &mut CgaRng) -> Result<(FrequencyVector, FitnessSpec, serde_json::Value)> {
    let n: usize = rng.gen_range(4..=8);
    let g = mu_granularity(n)?;
    let mu = g * rng.gen_range(1..=(32 / g).max(1));
    let p = make_params(n, mu, MuPolicy::Reject)?;
    let top = p.n_mu();
    let idx: Vec<u32> = (0..n)
        .map(|_| match rng.gen_range(0..10) {
            0..=2 => 0,
            3..=5 => top,
            _ => rng.gen_range(0..=top),
        })
        .collect();
    let k = rng.gen_range(1..=n / 2);
    let fitness = if k == 1 { FitnessSpec::onemax(n)? } else { FitnessSpec::jump(n, k)? };
    let f = FrequencyVector::from_indices(&p, idx.clone())?;
    Ok((f, fitness, json!({"n": n, "mu": mu, "k": k, "indices": idx})))
}

fn boundary_caps(i: usize, rng: &mut CgaRng) -> Result<Case> {
    let (f, fitness, input) = boundary_state(rng)?;
    let r = check_lboundary(&f, &fitness)?;
    let id = |s: &str| format!("{i};{s}");
    Ok((
        vec![
            row("boundary_caps", id("low_vs_bin_ell"), r.low_vs_bin_ell),
            row("boundary_caps", id("low_vs_bin_n"), r.low_vs_bin_n),
            row("boundary_caps", id("high_vs_bin_ell"), r.high_vs_bin_ell),
            row("boundary_caps", id("high_vs_bin_n"), r.high_vs_bin_n),
        ],
        input,
    ))
}

fn drift_decomposition(i: usize, rng: &mut CgaRng) -> Result<Case> {
    let (f, fitness, input) = boundary_state(rng)?;
    let e = exact_step_expectation(&f, &fitness)?;
    let rhs = e.pre_clamp_drift - e.clamp_term;
    let identity = BoundCheck {
        lhs: e.sum_drift,
        rhs,
        holds: (e.sum_drift - rhs).abs() <= 1e-12 * rhs.abs().max(1.0),
    };
    Ok((
        vec![
            row("clamp_term", format!("{i}"), BoundCheck::upper(e.clamp_term, 2.0)),
            row("drift_decomposition", format!("{i}"), identity),
        ],
        input,
    ))
}

/// Runs every sweep; rows come out in a fixed order regardless of thread count.
pub fn run_verify_suite(spec: &VerifySpec, seed: u64) -> Result<VerifyReport> {
    let cases = spec.cases.max(1);
    let small = cases.div_ceil(5);
    let mut all = binomial_tail_grid()?;
    all.extend(sweep(seed, 1, cases, opt_upper)?);
    all.extend(sweep(seed, 2, cases, opt_lower)?);
    all.extend(sweep(seed, 3, cases, distinct_norms)?);
    all.extend(sweep(seed, 4, cases, sample_tails)?);
    all.extend(sweep(seed, 5, cases, gap_bound)?);
    all.extend(sweep(seed, 6, small, onemax_bit_drift)?);
    all.extend(sweep(seed, 7, small, boundary_caps)?);
    all.extend(sweep(seed, 8, small, drift_decomposition)?);
    if spec.inject_violation {
        let f = vec![0.5; 4];
        let p = crate::oracle::prob_distinct_norms(&f)?;
        // The true bound is 1/16; 1 is deliberately wrong.
        all.push((
            vec![row("injected_violation", "0".into(), BoundCheck::lower(p, 1.0))],
            json!({"f": f, "bound": 1.0}),
        ));
    }
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (case_rows, input) in all {
        for r in &case_rows {
            if !r.holds {
                failures.push(FailedCase {
                    row: r.clone(),
                    input: input.clone(),
                });
            }
        }
        rows.extend(case_rows);
    }
    Ok(VerifyReport { rows, failures })
}

pub fn write_verify_csv<W: Write>(rows: &[VerifyRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quick_suite_holds() {
        let r = run_verify_suite(&VerifySpec::quick(), 7).unwrap();
        assert!(r.all_hold(), "{:?}", r.failures.first());
        let lemmas: Vec<String> = r.counts().into_iter().map(|c| c.0).collect();
        assert_eq!(lemmas.len(), 11);
        assert_eq!(r.counts()[0].1, 9 * (2..=21).sum::<usize>());
    }

    #[test]
    fn injected_violation_is_reported() {
        let spec = VerifySpec {
            cases: 1,
            inject_violation: true,
        };
        let r = run_verify_suite(&spec, 0).unwrap();
        assert_eq!(r.failures.len(), 1);
        assert_eq!(r.failures[0].row.lemma, "injected_violation");
        assert_eq!(r.failures[0].input["bound"], 1.0);
    }

    #[test]
    fn csv_columns() {
        let rows = vec![VerifyRow {
            lemma: "gap_bound".into(),
            case_id: "3;n=10;k=2".into(),
            lhs: 0.25,
            rhs: 0.5,
            holds: true,
        }];
        let mut buf = Vec::new();
        write_verify_csv(&rows, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "lemma,case_id,lhs,rhs,holds\ngap_bound,3;n=10;k=2,0.25,0.5,true\n");
    }
}
