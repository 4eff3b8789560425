//! OneMax, jump, subjump and superjump landscapes.
//!
//! Level-symmetric functions (value determined by `‖x‖₁`) are evaluated via
//! a precomputed table of `n + 1` values. Functions determined by the
//! Hamming distance to a declared optimum use a distance table; fully
//! explicit tables are accepted for small `n`.

use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::error::{Error, Result};

/// Largest dimension accepted for an explicit per-point table.
pub const EXPLICIT_TABLE_MAX_N: usize = 20;

/// Largest dimension for which [`is_superjump`] enumerates all points.
pub const SUPERJUMP_ENUMERATION_MAX_N: usize = 24;

#[derive(Debug, Clone, PartialEq)]
pub enum Landscape {
    OneMax,
    Jump {
        k: usize,
    },
    /// `‖x‖₁ + offset` outside the gap and on the optimum; `gap_values[j]` on level `n - k + 1 + j`.
    Subjump {
        k: usize,
        offset: i64,
        gap_values: Vec<f64>,
    },
    /// Value determined by the Hamming distance to `optimum`.
    DistanceTable {
        k: usize,
        optimum: BitString,
        by_distance: Vec<f64>,
    },
    /// One value per point, indexed by the bit pattern (bit `i` of the index is `x_i`).
    ExplicitTable {
        k: usize,
        optimum: BitString,
        values: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FitnessJson", into = "FitnessJson")]
pub struct FitnessSpec {
    n: usize,
    landscape: Landscape,
    optimum: BitString,
    level_table: Option<Vec<f64>>,
}

pub fn onemax(x: &BitString) -> usize {
    x.ones()
}

/// `Jump_nk` as a function of the one-count.
pub fn jump_level_value(ones: usize, n: usize, k: usize) -> i64 {
    if level_in_gap(ones, n, k) {
        (n - ones) as i64
    } else {
        (ones + k) as i64
    }
}

pub fn jump_value(x: &BitString, k: usize) -> i64 {
    jump_level_value(x.ones(), x.len(), k)
}

/// `n - k < ones < n`.
pub fn level_in_gap(ones: usize, n: usize, k: usize) -> bool {
    ones + k > n && ones < n
}

pub fn in_gap(x: &BitString, k: usize) -> bool {
    level_in_gap(x.ones(), x.len(), k)
}

fn check_k(n: usize, k: usize) -> Result<()> {
    if k == 0 || k > n {
        return Err(Error::InvalidFitness(format!(
            "jump size k = {k} must lie in [1..{n}]"
        )));
    }
    Ok(())
}

impl FitnessSpec {
    pub fn onemax(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidFitness("n must be positive".into()));
        }
        Ok(Self::level_symmetric(
            n,
            Landscape::OneMax,
            (0..=n).map(|l| l as f64).collect(),
        ))
    }

    pub fn jump(n: usize, k: usize) -> Result<Self> {
        check_k(n, k)?;
        Ok(Self::level_symmetric(
            n,
            Landscape::Jump { k },
            (0..=n).map(|l| jump_level_value(l, n, k) as f64).collect(),
        ))
    }

    fn level_symmetric(n: usize, landscape: Landscape, table: Vec<f64>) -> Self {
        FitnessSpec {
            n,
            landscape,
            optimum: BitString::ones_vec(n),
            level_table: Some(table),
        }
    }

    /// A function of the Hamming distance to `optimum`; no superjump validation.
    pub fn distance_table(k: usize, optimum: BitString, by_distance: Vec<f64>) -> Result<Self> {
        let n = optimum.len();
        check_k(n, k)?;
        if by_distance.len() != n + 1 {
            return Err(Error::DimensionMismatch {
                expected: n + 1,
                actual: by_distance.len(),
            });
        }
        let level_table = if optimum.ones() == n {
            Some((0..=n).map(|l| by_distance[n - l]).collect())
        } else if optimum.ones() == 0 {
            Some(by_distance.clone())
        } else {
            None
        };
        Ok(FitnessSpec {
            n,
            landscape: Landscape::DistanceTable {
                k,
                optimum: optimum.clone(),
                by_distance,
            },
            optimum,
            level_table,
        })
    }

    pub fn explicit_table(k: usize, optimum: BitString, values: Vec<f64>) -> Result<Self> {
        let n = optimum.len();
        check_k(n, k)?;
        if n > EXPLICIT_TABLE_MAX_N {
            return Err(Error::TooLargeForEnumeration {
                n,
                limit: EXPLICIT_TABLE_MAX_N,
            });
        }
        if values.len() != 1 << n {
            return Err(Error::DimensionMismatch {
                expected: 1 << n,
                actual: values.len(),
            });
        }
        Ok(FitnessSpec {
            n,
            landscape: Landscape::ExplicitTable {
                k,
                optimum: optimum.clone(),
                values,
            },
            optimum,
            level_table: None,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Jump size; the gap is the set of points at Hamming distance `1..k` from the optimum.
    pub fn k(&self) -> usize {
        match &self.landscape {
            Landscape::OneMax => 1,
            Landscape::Jump { k }
            | Landscape::Subjump { k, .. }
            | Landscape::DistanceTable { k, .. }
            | Landscape::ExplicitTable { k, .. } => *k,
        }
    }

    pub fn landscape(&self) -> &Landscape {
        &self.landscape
    }

    pub fn unique_optimum(&self) -> &BitString {
        &self.optimum
    }

    /// Values indexed by one-count, when the function depends only on `‖x‖₁`.
    pub fn level_values(&self) -> Option<&[f64]> {
        self.level_table.as_deref()
    }

    pub fn variant_name(&self) -> &'static str {
        match self.landscape {
            Landscape::OneMax => "onemax",
            Landscape::Jump { .. } => "jump",
            Landscape::Subjump { .. } => "subjump",
            Landscape::DistanceTable { .. } => "distance_table",
            Landscape::ExplicitTable { .. } => "explicit_table",
        }
    }

    pub fn value(&self, x: &BitString) -> f64 {
        debug_assert_eq!(x.len(), self.n);
        if let Some(table) = &self.level_table {
            return table[x.ones()];
        }
        match &self.landscape {
            Landscape::DistanceTable {
                optimum,
                by_distance,
                ..
            } => by_distance[x.hamming(optimum)],
            Landscape::ExplicitTable { values, .. } => values[x.to_u64() as usize],
            _ => unreachable!("level-symmetric landscapes always carry a level table"),
        }
    }

    pub fn is_optimum(&self, x: &BitString) -> bool {
        if self.optimum.ones() == self.n {
            x.ones() == self.n
        } else {
            x == &self.optimum
        }
    }

    pub fn distance_to_optimum(&self, x: &BitString) -> usize {
        if self.optimum.ones() == self.n {
            self.n - x.ones()
        } else {
            x.hamming(&self.optimum)
        }
    }

    pub fn in_gap(&self, x: &BitString) -> bool {
        let d = self.distance_to_optimum(x);
        d > 0 && d < self.k()
    }

    /// Co-optima inside the gap and other properties worth a warning but not an error.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if let Landscape::Subjump {
            k,
            offset,
            gap_values,
        } = &self.landscape
        {
            let top = self.n as f64 + *offset as f64;
            for (j, &v) in gap_values.iter().enumerate() {
                if v == top {
                    out.push(format!(
                        "gap level {} ties the optimum value {top}; runs stop only at all-ones",
                        self.n - k + 1 + j
                    ));
                }
            }
        }
        out
    }
}

/// A subjump function: `‖x‖₁ + offset` on `[0..n-k] ∪ {n}`, `gap_value(level)` on
/// `[n-k+1..n-1]`, which must not exceed `n + offset`.
pub fn make_subjump(
    n: usize,
    k: usize,
    offset: i64,
    gap_value: impl Fn(usize) -> f64,
) -> Result<FitnessSpec> {
    check_k(n, k)?;
    let top = n as f64 + offset as f64;
    let gap_values: Vec<f64> = (n - k + 1..n).map(&gap_value).collect();
    for (j, &v) in gap_values.iter().enumerate() {
        if !(v <= top) {
            return Err(Error::InvalidFitness(format!(
                "gap value {v} at level {} exceeds n + K = {top}",
                n - k + 1 + j
            )));
        }
    }
    let table = (0..=n)
        .map(|l| {
            if level_in_gap(l, n, k) {
                gap_values[l - (n - k + 1)]
            } else {
                l as f64 + offset as f64
            }
        })
        .collect();
    Ok(FitnessSpec::level_symmetric(
        n,
        Landscape::Subjump {
            k,
            offset,
            gap_values,
        },
        table,
    ))
}

/// The jump function expressed as a subjump member (`K = k`, gap value `n - ‖x‖₁`).
pub fn jump_as_subjump(n: usize, k: usize) -> Result<FitnessSpec> {
    make_subjump(n, k, k as i64, |level| (n - level) as f64)
}

/// Plateau-style subjump: every gap level takes the value of level `n - k`.
pub fn plateau(n: usize, k: usize, offset: i64) -> Result<FitnessSpec> {
    let flat = (n - k.min(n)) as f64 + offset as f64;
    make_subjump(n, k, offset, |_| flat)
}

/// A validated superjump function determined by the distance to `optimum`.
pub fn make_superjump(k: usize, optimum: BitString, by_distance: Vec<f64>) -> Result<FitnessSpec> {
    let spec = FitnessSpec::distance_table(k, optimum, by_distance)?;
    if !is_superjump(&spec, k) {
        return Err(Error::InvalidFitness(format!(
            "distance table is not a superjump function with jump size {k}"
        )));
    }
    Ok(spec)
}

/// Jump values within distance `k` of the all-ones optimum, `outer(distance)` beyond.
pub fn superjump_trap(n: usize, k: usize, outer: impl Fn(usize) -> f64) -> Result<FitnessSpec> {
    check_k(n, k)?;
    let by_distance = (0..=n)
        .map(|d| {
            if d <= k {
                jump_level_value(n - d, n, k) as f64
            } else {
                outer(d)
            }
        })
        .collect();
    make_superjump(k, BitString::ones_vec(n), by_distance)
}

/// Level-wise check of the subjump clauses for jump size `k`.
pub fn is_subjump(spec: &FitnessSpec, k: usize) -> bool {
    let n = spec.n();
    if k == 0 || k > n || spec.unique_optimum().ones() != n {
        return false;
    }
    let Some(table) = spec.level_values() else {
        return false;
    };
    let offset = table[n] - n as f64;
    if offset < 0.0 || offset.fract() != 0.0 {
        return false;
    }
    (0..=n).all(|l| {
        if level_in_gap(l, n, k) {
            table[l] <= n as f64 + offset
        } else {
            table[l] == l as f64 + offset
        }
    })
}

/// Whether `spec` has a unique global maximum `x*` and is fully deceptive within radius `k`.
///
/// Distance-determined functions are checked per distance class; explicit
/// tables are enumerated.
pub fn is_superjump(spec: &FitnessSpec, k: usize) -> bool {
    let n = spec.n();
    if k == 0 || k > n {
        return false;
    }
    let by_distance: Vec<f64> = match spec.landscape() {
        Landscape::DistanceTable { by_distance, .. } => by_distance.clone(),
        Landscape::ExplicitTable { .. } => return is_superjump_brute_force(spec, k),
        _ => {
            let table = spec.level_values().expect("level-symmetric");
            (0..=n).map(|d| table[n - d]).collect()
        }
    };
    let top = by_distance[0];
    let unique_max = by_distance[1..].iter().all(|&v| v < top);
    let deceptive = (1..k).all(|r| by_distance[r] < by_distance[r + 1]);
    unique_max && deceptive
}

/// Checks the superjump definition by enumerating all `2^n` points.
pub fn is_superjump_brute_force(spec: &FitnessSpec, k: usize) -> bool {
    let n = spec.n();
    assert!(n <= SUPERJUMP_ENUMERATION_MAX_N, "enumeration limited to n <= 24");
    if k == 0 || k > n {
        return false;
    }
    let mut max_by_dist = vec![f64::NEG_INFINITY; n + 1];
    let mut min_by_dist = vec![f64::INFINITY; n + 1];
    let mut best = f64::NEG_INFINITY;
    let mut best_count = 0usize;
    let mut best_point = 0u64;
    for pattern in 0..(1u64 << n) {
        let x = BitString::from_u64(pattern, n);
        let v = spec.value(&x);
        let d = x.hamming(spec.unique_optimum());
        max_by_dist[d] = max_by_dist[d].max(v);
        min_by_dist[d] = min_by_dist[d].min(v);
        if v > best {
            best = v;
            best_count = 1;
            best_point = pattern;
        } else if v == best {
            best_count += 1;
        }
    }
    best_count == 1
        && best_point == spec.unique_optimum().to_u64()
        && (1..k).all(|r| max_by_dist[r] < min_by_dist[r + 1])
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct FitnessJson {
    variant: String,
    n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    k: Option<usize>,
    #[serde(rename = "K", default, skip_serializing_if = "Option::is_none")]
    offset: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    gap_values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    table: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    optimum: Option<String>,
}

impl From<FitnessSpec> for FitnessJson {
    fn from(spec: FitnessSpec) -> Self {
        let mut json = FitnessJson {
            variant: spec.variant_name().to_string(),
            n: spec.n,
            k: Some(spec.k()),
            offset: None,
            gap_values: None,
            table: None,
            optimum: None,
        };
        match spec.landscape {
            Landscape::OneMax => json.k = None,
            Landscape::Jump { .. } => {}
            Landscape::Subjump {
                offset, gap_values, ..
            } => {
                json.offset = Some(offset);
                json.gap_values = Some(gap_values);
            }
            Landscape::DistanceTable {
                optimum,
                by_distance,
                ..
            } => {
                json.optimum = Some(optimum.to_string());
                json.table = Some(by_distance);
            }
            Landscape::ExplicitTable {
                optimum, values, ..
            } => {
                json.optimum = Some(optimum.to_string());
                json.table = Some(values);
            }
        }
        json
    }
}

impl TryFrom<FitnessJson> for FitnessSpec {
    type Error = Error;

    fn try_from(json: FitnessJson) -> Result<Self> {
        let n = json.n;
        let need_k = || {
            json.k
                .ok_or_else(|| Error::InvalidFitness(format!("variant {} needs k", json.variant)))
        };
        let optimum = || -> Result<BitString> {
            match &json.optimum {
                Some(s) => {
                    let x: BitString = s.parse()?;
                    if x.len() != n {
                        return Err(Error::DimensionMismatch {
                            expected: n,
                            actual: x.len(),
                        });
                    }
                    Ok(x)
                }
                None => Ok(BitString::ones_vec(n)),
            }
        };
        let table = || {
            json.table
                .clone()
                .ok_or_else(|| Error::InvalidFitness(format!("variant {} needs table", json.variant)))
        };
        match json.variant.as_str() {
            "onemax" => FitnessSpec::onemax(n),
            "jump" => FitnessSpec::jump(n, need_k()?),
            "subjump" => {
                let k = need_k()?;
                check_k(n, k)?;
                let offset = json.offset.unwrap_or(k as i64);
                match &json.gap_values {
                    Some(values) => {
                        if values.len() != k - 1 {
                            return Err(Error::DimensionMismatch {
                                expected: k - 1,
                                actual: values.len(),
                            });
                        }
                        make_subjump(n, k, offset, |level| values[level - (n - k + 1)])
                    }
                    None => make_subjump(n, k, offset, |level| (n - level) as f64),
                }
            }
            "distance_table" => FitnessSpec::distance_table(need_k()?, optimum()?, table()?),
            "explicit_table" => FitnessSpec::explicit_table(need_k()?, optimum()?, table()?),
            other => Err(Error::InvalidFitness(format!("unknown variant {other:?}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn level(n: usize, ones: usize) -> BitString {
        let bits: Vec<bool> = (0..n).map(|i| i < ones).collect();
        BitString::from_bools(&bits)
    }

    #[test]
    fn onemax_examples() {
        for (s, v) in [("1111", 4), ("0000", 0), ("1010", 2)] {
            assert_eq!(onemax(&s.parse().unwrap()), v);
        }
    }

    #[test]
    fn jump_examples() {
        assert_eq!(jump_value(&level(10, 10), 3), 13);
        assert_eq!(jump_value(&level(10, 7), 3), 10);
        assert_eq!(jump_value(&level(10, 9), 3), 1);
    }

    #[test]
    fn gap_examples() {
        assert!(in_gap(&level(10, 8), 3));
        assert!(!in_gap(&level(10, 10), 3));
        assert!((0..=10).all(|l| !in_gap(&level(10, l), 1)));
    }

    #[test]
    fn jump_k1_is_onemax_plus_one() {
        let j = FitnessSpec::jump(12, 1).unwrap();
        for p in 0..(1u64 << 12) {
            let x = BitString::from_u64(p, 12);
            assert_eq!(j.value(&x), onemax(&x) as f64 + 1.0);
        }
    }

    #[test]
    fn order_equivalence_outside_gap() {
        for n in 4..=14 {
            for k in 1..=n {
                let outside: Vec<usize> = (0..=n).filter(|&l| !level_in_gap(l, n, k)).collect();
                for &a in &outside {
                    for &b in &outside {
                        assert_eq!(
                            jump_level_value(a, n, k) >= jump_level_value(b, n, k),
                            a >= b
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn subjump_classic_matches_jump() {
        for k in 1..=6 {
            let sj = jump_as_subjump(12, k).unwrap();
            let j = FitnessSpec::jump(12, k).unwrap();
            assert_eq!(sj.level_values(), j.level_values());
            assert!(is_subjump(&sj, k));
        }
    }

    #[test]
    fn smaller_jump_is_subjump_of_larger_size() {
        let j = FitnessSpec::jump(20, 2).unwrap();
        for k in 2..=8 {
            assert!(is_subjump(&j, k));
        }
        assert!(!is_subjump(&FitnessSpec::jump(20, 5).unwrap(), 3));
    }

    #[test]
    fn subjump_rejects_excess_gap_value() {
        let (n, k, big_k) = (10, 3, 3i64);
        let err = make_subjump(n, k, big_k, |_| (n as i64 + big_k + 1) as f64);
        assert!(matches!(err, Err(Error::InvalidFitness(_))));
        assert!(make_subjump(n, k, big_k, |_| f64::NAN).is_err());
    }

    #[test]
    fn plateau_is_subjump_and_flat() {
        let p = plateau(10, 4, 4).unwrap();
        assert!(is_subjump(&p, 4));
        let t = p.level_values().unwrap();
        assert_eq!(&t[6..10], &[10.0, 10.0, 10.0, 10.0]);
        assert_eq!(t[10], 14.0);
        assert!(p.warnings().is_empty());
        let tie = make_subjump(10, 3, 3, |_| 13.0).unwrap();
        assert_eq!(tie.warnings().len(), 2);
    }

    #[test]
    fn jump_is_superjump_n12_k5() {
        let j = FitnessSpec::jump(12, 5).unwrap();
        assert!(is_superjump(&j, 5));
        assert!(is_superjump_brute_force(&j, 5));
    }

    #[test]
    fn onemax_superjump_only_for_k1() {
        let om = FitnessSpec::onemax(10).unwrap();
        assert!(is_superjump(&om, 1));
        for k in 2..=10 {
            assert!(!is_superjump(&om, k));
        }
    }

    #[test]
    fn flat_distance_table_is_not_superjump() {
        let n = 8;
        let mut table: Vec<f64> = (0..=n).map(|d| d as f64).collect();
        table[0] = 100.0;
        table[2] = table[1];
        let spec = FitnessSpec::distance_table(4, BitString::ones_vec(n), table).unwrap();
        assert!(!is_superjump(&spec, 4));
        assert!(!is_superjump_brute_force(&spec, 4));
        assert!(is_superjump(&spec, 1));
    }

    #[test]
    fn trap_variant_keeps_deception() {
        let spec = superjump_trap(10, 4, |d| 3.0 + (d as f64).sin()).unwrap();
        assert!(is_superjump(&spec, 4));
        assert!(is_superjump_brute_force(&spec, 4));
        assert!(superjump_trap(10, 4, |_| 1e9).is_err());
    }

    #[test]
    fn non_trivial_optimum_distance_table() {
        let opt: BitString = "10110010".parse().unwrap();
        let table: Vec<f64> = (0..=8).map(|d| if d == 0 { 50.0 } else { d as f64 }).collect();
        let spec = make_superjump(8, opt.clone(), table).unwrap();
        assert!(spec.is_optimum(&opt));
        assert!(!spec.is_optimum(&BitString::ones_vec(8)));
        assert!(is_superjump_brute_force(&spec, 8));
        assert!(spec.level_values().is_none());
    }

    #[test]
    fn explicit_table_enumeration() {
        let n = 6;
        let j = FitnessSpec::jump(n, 3).unwrap();
        let values: Vec<f64> = (0..1u64 << n)
            .map(|p| j.value(&BitString::from_u64(p, n)))
            .collect();
        let mut spec = FitnessSpec::explicit_table(3, BitString::ones_vec(n), values.clone()).unwrap();
        assert!(is_superjump(&spec, 3));
        let mut broken = values;
        broken[0b000111] = 1.5; // a distance-3 point below the distance-2 value 2
        spec = FitnessSpec::explicit_table(3, BitString::ones_vec(n), broken).unwrap();
        assert!(!is_superjump(&spec, 3));
    }

    #[test]
    fn json_roundtrip_and_errors() {
        let specs = vec![
            FitnessSpec::onemax(7).unwrap(),
            FitnessSpec::jump(9, 3).unwrap(),
            plateau(9, 3, 3).unwrap(),
            superjump_trap(9, 3, |d| d as f64 * 0.1).unwrap(),
        ];
        for s in specs {
            let text = serde_json::to_string(&s).unwrap();
            let back: FitnessSpec = serde_json::from_str(&text).unwrap();
            assert_eq!(back, s, "{text}");
        }
        let bad = r#"{"variant":"subjump","n":10,"k":3,"K":3,"gap_values":[1.0,99.0]}"#;
        assert!(serde_json::from_str::<FitnessSpec>(bad).is_err());
        let unknown = r#"{"variant":"leadingones","n":10}"#;
        assert!(serde_json::from_str::<FitnessSpec>(unknown).is_err());
    }
}
