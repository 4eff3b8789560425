use rand::seq::SliceRandom;

use crate::rng::rng_from_seed;

/// Linear-interpolation quantile (type 7) of unsorted data.
pub fn quantile(data: &[f64], q: f64) -> f64 {
    assert!(!data.is_empty(), "quantile of empty data");
    let mut v = data.to_vec();
    v.sort_by(f64::total_cmp);
    let h = (v.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    v[lo] + (h - lo as f64) * (v[hi] - v[lo])
}

pub fn median(data: &[f64]) -> f64 {
    quantile(data, 0.5)
}

pub fn iqr(data: &[f64]) -> f64 {
    quantile(data, 0.75) - quantile(data, 0.25)
}

pub fn mean(data: &[f64]) -> f64 {
    data.iter().sum::<f64>() / data.len() as f64
}

/// Sample standard deviation (`n - 1` denominator).
pub fn std_dev(data: &[f64]) -> f64 {
    if data.len() < 2 {
        return 0.0;
    }
    let m = mean(data);
    (data.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (data.len() - 1) as f64).sqrt()
}

pub fn std_error(data: &[f64]) -> f64 {
    std_dev(data) / (data.len() as f64).sqrt()
}

/// Two-sided normal confidence interval for the mean.
pub fn mean_ci(data: &[f64], z: f64) -> (f64, f64) {
    let m = mean(data);
    let h = z * std_error(data);
    (m - h, m + h)
}

/// z-value of a two-sided 99% interval.
pub const Z_99: f64 = 2.575_829_303_548_901;

/// Ordinary least-squares slope of `y` on `x`.
pub fn ls_slope(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let (mx, my) = (mean(x), mean(y));
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// One-sided permutation p-value for a positive slope: the share of label
/// permutations (plus the observed one) whose slope is at least the observed slope.
pub fn permutation_p_value(x: &[f64], y: &[f64], permutations: usize, seed: u64) -> f64 {
    let observed = ls_slope(x, y);
    let mut rng = rng_from_seed(seed);
    let mut labels = x.to_vec();
    let mut at_least = 0usize;
    for _ in 0..permutations {
        labels.shuffle(&mut rng);
        if ls_slope(&labels, y) >= observed - 1e-12 * observed.abs() {
            at_least += 1;
        }
    }
    (at_least + 1) as f64 / (permutations + 1) as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantiles_match_type7() {
        let d = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(median(&d), 2.5);
        assert_eq!(quantile(&d, 0.25), 1.75);
        assert_eq!(quantile(&d, 0.75), 3.25);
        assert_eq!(iqr(&d), 1.5);
        assert_eq!(median(&[5.0, 1.0, 3.0]), 3.0);
    }

    #[test]
    fn moments() {
        let d = [2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0];
        assert_eq!(mean(&d), 5.0);
        assert!((std_dev(&d) - (32.0f64 / 7.0).sqrt()).abs() < 1e-12);
        let (lo, hi) = mean_ci(&d, 2.0);
        assert!(lo < 5.0 && hi > 5.0);
    }

    #[test]
    fn slope_and_permutation() {
        let x: Vec<f64> = (0..40).map(|i| (i % 4) as f64).collect();
        let y: Vec<f64> = x.iter().enumerate().map(|(i, v)| 2.0 * v + (i % 3) as f64 * 0.1).collect();
        assert!((ls_slope(&x, &y) - 2.0).abs() < 0.05);
        let p = permutation_p_value(&x, &y, 999, 1);
        assert!(p <= 0.002);
        let flat: Vec<f64> = (0..40).map(|i| ((i * 7919) % 13) as f64).collect();
        let p = permutation_p_value(&x, &flat, 999, 1);
        assert!(p > 0.01);
    }
}
