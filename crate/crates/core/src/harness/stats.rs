//! Small statistics toolkit: goodness of fit, two-sample KS and a bootstrap
//! for differences of means.

use rand::Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// Pearson chi-square test of `counts` against equal expected frequencies.
pub fn chi_square_uniform(counts: &[u64]) -> TestResult {
    assert!(counts.len() >= 2, "need at least two categories");
    let total: u64 = counts.iter().sum();
    let expected = total as f64 / counts.len() as f64;
    let statistic: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    let dist = ChiSquared::new((counts.len() - 1) as f64).expect("positive dof");
    TestResult { statistic, p_value: dist.sf(statistic) }
}

/// Survival function of the Kolmogorov distribution.
fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    for j in 1..=100 {
        let term = (-2.0 * (j * j) as f64 * lambda * lambda).exp();
        sum += if j % 2 == 1 { term } else { -term };
        if term < 1e-12 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Two-sample Kolmogorov-Smirnov test with the asymptotic p-value
/// (Stephens' small-sample correction).
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> TestResult {
    assert!(!a.is_empty() && !b.is_empty(), "samples must be non-empty");
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_by(f64::total_cmp);
    ys.sort_by(f64::total_cmp);
    let (n, m) = (xs.len(), ys.len());
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < n && j < m {
        let v = xs[i].min(ys[j]);
        while i < n && xs[i] <= v {
            i += 1;
        }
        while j < m && ys[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let en = ((n * m) as f64 / (n + m) as f64).sqrt();
    TestResult { statistic: d, p_value: kolmogorov_sf((en + 0.12 + 0.11 / en) * d) }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BootstrapResult {
    /// `mean(a) - mean(b)` on the observed samples.
    pub difference: f64,
    /// Fraction of resamples with a difference of at most zero: the
    /// one-sided p-value for `mean(a) > mean(b)`.
    pub p_value: f64,
    pub ci95: (f64, f64),
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Resamples each group independently with replacement.
pub fn bootstrap_mean_difference<R: Rng + ?Sized>(a: &[f64], b: &[f64], resamples: usize, rng: &mut R) -> BootstrapResult {
    assert!(!a.is_empty() && !b.is_empty() && resamples > 0);
    let resample_mean = |xs: &[f64], rng: &mut R| (0..xs.len()).map(|_| xs[rng.random_range(0..xs.len())]).sum::<f64>() / xs.len() as f64;
    let mut diffs: Vec<f64> = (0..resamples).map(|_| resample_mean(a, rng) - resample_mean(b, rng)).collect();
    diffs.sort_by(f64::total_cmp);
    let at = |q: f64| diffs[((q * (resamples - 1) as f64).round() as usize).min(resamples - 1)];
    BootstrapResult {
        difference: mean(a) - mean(b),
        p_value: diffs.iter().filter(|&&d| d <= 0.0).count() as f64 / resamples as f64,
        ci95: (at(0.025), at(0.975)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn chi_square_known_value() {
        let r = chi_square_uniform(&[10, 20, 30]);
        assert!((r.statistic - 10.0).abs() < 1e-12);
        let r = chi_square_uniform(&[20, 20, 20]);
        assert_eq!(r.statistic, 0.0);
        assert!((r.p_value - 1.0).abs() < 1e-12);
        let r = chi_square_uniform(&[9, 11]);
        assert!((r.statistic - 0.2).abs() < 1e-12);
        // with 2 dof the survival function is exp(-x / 2)
        let two = chi_square_uniform(&[0, 2, 4]);
        assert!((two.p_value - (-two.statistic / 2.0f64).exp()).abs() < 1e-9);
    }

    #[test]
    fn ks_separates_shifted_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a: Vec<f64> = (0..2000).map(|_| rng.random()).collect();
        let b: Vec<f64> = (0..2000).map(|_| rng.random()).collect();
        let c: Vec<f64> = (0..2000).map(|_| rng.random::<f64>() + 0.1).collect();
        assert!(ks_two_sample(&a, &b).p_value > 0.01);
        assert!(ks_two_sample(&a, &c).p_value < 1e-6);
        assert_eq!(ks_two_sample(&a, &a).statistic, 0.0);
    }

    #[test]
    fn bootstrap_detects_clear_difference() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let hi = vec![1.0; 50];
        let lo: Vec<f64> = (0..50).map(|i| (i % 2) as f64).collect();
        let r = bootstrap_mean_difference(&hi, &lo, 2000, &mut rng);
        assert!((r.difference - 0.5).abs() < 1e-12);
        assert!(r.p_value < 0.01);
        assert!(r.ci95.0 > 0.0 && r.ci95.1 <= 0.75);
    }
}
