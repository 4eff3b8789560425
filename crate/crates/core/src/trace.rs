use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::engine::{StepObserver, StepOutcome};
use crate::frequency::FrequencyVector;

/// `Y = exp(c * min(k/2 - D, k/4))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Potential {
    pub c: f64,
    pub k: usize,
}

impl Potential {
    pub fn new(c: f64, k: usize) -> crate::Result<Self> {
        if !(c > 0.0 && c <= 1.0) {
            return Err(crate::Error::InvalidParameter(format!(
                "potential constant c must lie in (0, 1], got {c}"
            )));
        }
        Ok(Potential { c, k })
    }

    pub fn value(&self, d: f64) -> f64 {
        let k = self.k as f64;
        (self.c * (k / 2.0 - d).min(k / 4.0)).exp()
    }

    pub fn max(&self) -> f64 {
        (self.c * self.k as f64 / 4.0).exp()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub t: u64,
    pub d: f64,
    pub fmin: f64,
    pub gap_hits: u64,
    pub caps_low: u64,
    pub caps_high: u64,
    pub y: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub records: Vec<TraceRecord>,
}

/// Renders a float with 17 significant digits.
pub fn format_sig17(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        "null".to_string()
    }
}

impl RunTrace {
    /// One JSON object per line, keys in the order `t, D, fmin, gap_hits, caps_low, caps_high, Y`.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> crate::Result<()> {
        for r in &self.records {
            let y = r.y.map_or_else(|| "null".to_string(), format_sig17);
            writeln!(
                out,
                "{{\"t\":{},\"D\":{},\"fmin\":{},\"gap_hits\":{},\"caps_low\":{},\"caps_high\":{},\"Y\":{}}}",
                r.t,
                format_sig17(r.d),
                format_sig17(r.fmin),
                r.gap_hits,
                r.caps_low,
                r.caps_high,
                y
            )?;
        }
        Ok(())
    }

    pub fn is_valid(&self, n: usize) -> bool {
        let bound = (n - 2) as f64 + 1e-9;
        self.records.windows(2).all(|w| w[0].t < w[1].t)
            && self.records.iter().all(|r| r.d >= -1e-9 && r.d <= bound)
    }
}

/// Records every `stride`-th iteration (and the initial state at `t = 0`).
#[derive(Debug, Clone)]
pub struct TraceRecorder {
    stride: u64,
    potential: Option<Potential>,
    gap_hits: u64,
    caps_low: u64,
    caps_high: u64,
    trace: RunTrace,
}

impl TraceRecorder {
    pub fn new(stride: u64, potential: Option<Potential>) -> Self {
        TraceRecorder {
            stride: stride.max(1),
            potential,
            gap_hits: 0,
            caps_low: 0,
            caps_high: 0,
            trace: RunTrace::default(),
        }
    }

    fn push(&mut self, t: u64, f: &FrequencyVector) {
        let d = f.distance();
        self.trace.records.push(TraceRecord {
            t,
            d,
            fmin: f.min_value(),
            gap_hits: self.gap_hits,
            caps_low: self.caps_low,
            caps_high: self.caps_high,
            y: self.potential.map(|p| p.value(d)),
        });
    }

    pub fn finish(self) -> RunTrace {
        self.trace
    }
}

impl StepObserver for TraceRecorder {
    fn on_start(&mut self, f: &FrequencyVector) {
        if self.trace.records.is_empty() {
            self.push(0, f);
        }
    }

    fn after_step(&mut self, t: u64, outcome: &StepOutcome, f: &FrequencyVector) {
        self.gap_hits += outcome.gap_samples as u64;
        self.caps_low += outcome.capped_low as u64;
        self.caps_high += outcome.capped_high as u64;
        if t.is_multiple_of(self.stride) {
            self.push(t, f);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{run_cga, StopRule};
    use crate::fitness::FitnessSpec;
    use crate::params::{make_params, MuPolicy};

    #[test]
    fn potential_saturates() {
        let p = Potential::new(0.05, 8).unwrap();
        assert_eq!(p.value(2.0), p.max());
        assert_eq!(p.value(0.5), p.max());
        assert!((p.max() - 0.1f64.exp()).abs() < 1e-15);
        assert!(p.value(4.0) <= 1.0);
        assert!(p.value(30.0) < 1.0);
        assert!(Potential::new(0.0, 8).is_err());
        assert!(Potential::new(1.5, 8).is_err());
    }

    #[test]
    fn traced_run_records_with_stride() {
        let p = make_params(30, 150, MuPolicy::Reject)
            .unwrap()
            .with_seed(4)
            .with_trace(10)
            .unwrap();
        let j = FitnessSpec::jump(30, 3).unwrap();
        let r = run_cga(&p, &j, &StopRule::budget_only(1000));
        let trace = r.trace.unwrap();
        assert_eq!(trace.records.len(), 101);
        assert_eq!(trace.records[0].t, 0);
        assert_eq!(trace.records[0].d, 15.0);
        assert!(trace.is_valid(30));
        assert!(trace.records.windows(2).all(|w| w[0].gap_hits <= w[1].gap_hits));
    }

    #[test]
    fn jsonl_key_order_and_digits() {
        let trace = RunTrace {
            records: vec![TraceRecord {
                t: 3,
                d: 0.1,
                fmin: 0.5,
                gap_hits: 2,
                caps_low: 0,
                caps_high: 1,
                y: None,
            }],
        };
        let mut buf = Vec::new();
        trace.write_jsonl(&mut buf).unwrap();
        let line = String::from_utf8(buf).unwrap();
        assert_eq!(
            line,
            "{\"t\":3,\"D\":1.0000000000000001e-1,\"fmin\":5.0000000000000000e-1,\"gap_hits\":2,\"caps_low\":0,\"caps_high\":1,\"Y\":null}\n"
        );
        let v: serde_json::Value = serde_json::from_str(line.trim()).unwrap();
        assert_eq!(v["D"].as_f64(), Some(0.1));
    }
}
