//! Small statistics toolkit: log-sum-exp, sample moments, goodness of fit.

use statrs::distribution::{ChiSquared, ContinuousCDF};

/// `ln Σ exp(v_i)`; `-∞` entries are ignored, an all-`-∞` input gives `-∞`.
pub fn logsumexp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    let s: f64 = values.iter().map(|&v| (v - max).exp()).sum();
    max + s.ln()
}

/// Sample mean and unbiased variance.
pub fn mean_var(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

/// Standard error of the mean.
pub fn std_error(values: &[f64]) -> f64 {
    let (_, v) = mean_var(values);
    (v / values.len() as f64).sqrt()
}

/// Standard error of the unbiased sample variance, estimated from the fourth central moment.
pub fn variance_std_error(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let (mean, var) = mean_var(values);
    let m4 = values.iter().map(|v| (v - mean).powi(4)).sum::<f64>() / n;
    ((m4 - var * var * (n - 3.0) / (n - 1.0)) / n).max(0.0).sqrt()
}

/// One-sample Kolmogorov–Smirnov statistic against a continuous CDF.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter().enumerate().fold(0.0, |d, (i, &x)| {
        let f = cdf(x);
        let lo = f - i as f64 / n;
        let hi = (i + 1) as f64 / n - f;
        d.max(lo).max(hi)
    })
}

/// Asymptotic p-value of a KS statistic `d` from `n` samples (Stephens' small-sample correction).
pub fn ks_pvalue(d: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    let t = (sn + 0.12 + 0.11 / sn) * d;
    if t < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    for j in 1..=200 {
        let j = j as f64;
        let term = 2.0 * (-1f64).powf(j - 1.0) * (-2.0 * j * j * t * t).exp();
        sum += term;
        if term.abs() < 1e-16 {
            break;
        }
    }
    sum.clamp(0.0, 1.0)
}

/// Pearson chi-square p-value of `counts` against the uniform distribution on its cells.
pub fn chi_square_uniform_pvalue(counts: &[f64]) -> f64 {
    let k = counts.len();
    assert!(k >= 2, "need at least two cells");
    let total: f64 = counts.iter().sum();
    let e = total / k as f64;
    let stat: f64 = counts.iter().map(|c| (c - e).powi(2) / e).sum();
    let dist = ChiSquared::new((k - 1) as f64).expect("positive dof");
    1.0 - dist.cdf(stat)
}

/// `|a - b|` in units of the combined standard error.
pub fn z_score(a: f64, se_a: f64, b: f64, se_b: f64) -> f64 {
    let se = (se_a * se_a + se_b * se_b).sqrt();
    if se == 0.0 {
        if a == b {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (a - b).abs() / se
    }
}

/// Number of local maxima of a Gaussian kernel density estimate (Silverman bandwidth)
/// evaluated on a uniform grid spanning the data.
pub fn kde_mode_count(samples: &[f64], grid_points: usize) -> usize {
    if samples.len() < 2 {
        return samples.len();
    }
    let (_, var) = mean_var(samples);
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let q = |f: f64| sorted[((sorted.len() - 1) as f64 * f).round() as usize];
    let iqr = q(0.75) - q(0.25);
    let spread = var.sqrt().min(iqr / 1.34);
    let spread = if spread > 0.0 { spread } else { var.sqrt() };
    if spread == 0.0 {
        return 1;
    }
    let h = 0.9 * spread * (samples.len() as f64).powf(-0.2);
    let lo = sorted[0] - 3.0 * h;
    let hi = sorted[sorted.len() - 1] + 3.0 * h;
    let dens: Vec<f64> = (0..grid_points)
        .map(|i| {
            let x = lo + (hi - lo) * i as f64 / (grid_points - 1) as f64;
            samples
                .iter()
                .map(|s| (-0.5 * ((x - s) / h).powi(2)).exp())
                .sum::<f64>()
        })
        .collect();
    dens.windows(3)
        .filter(|w| w[1] > w[0] && w[1] >= w[2])
        .count()
}
