//! Small-`γ` limiting density of local-minimum energies and the predicted band.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// `(γ, m)` with `0 < γ < 1`, `m ≥ 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CchParams<T = f64> {
    pub gamma: T,
    pub m: T,
}

impl<T: Real> CchParams<T> {
    pub fn new(gamma: T, m: T) -> Result<Self> {
        if !(gamma > T::zero() && gamma < T::one()) {
            return Err(Error::OutsideDomain {
                x: gamma.to_f64_lossy(),
                domain: "0 < gamma < 1".into(),
            });
        }
        if !(m >= T::one()) || !m.is_finite() {
            return Err(Error::InvalidArgument(format!("m must be >= 1, got {m}")));
        }
        Ok(Self { gamma, m })
    }
}

/// `m(−E + (1−γ)ln E + γ ln(1−2E))`, `−∞` outside `(0, ½)`.
pub fn cch_log_density<T: Real>(e: T, params: &CchParams<T>) -> T {
    let half = T::lit(0.5);
    if !(e > T::zero() && e < half) {
        return T::neg_infinity();
    }
    let g = params.gamma;
    params.m * (-e + (T::one() - g) * e.ln() + g * (T::one() - T::lit(2.0) * e).ln())
}

/// Stationarity residual `−1 + (1−γ)/E − 2γ/(1−2E)`; strictly decreasing on `(0, ½)`.
fn stationarity<T: Real>(e: T, gamma: T) -> T {
    -T::one() + (T::one() - gamma) / e - T::lit(2.0) * gamma / (T::one() - T::lit(2.0) * e)
}

/// Maximizer of the log density, by bisection on the stationarity condition.
pub fn cch_mode<T: Real>(params: &CchParams<T>) -> T {
    let mut lo = T::zero();
    let mut hi = T::lit(0.5);
    for _ in 0..200 {
        let mid = (lo + hi) * T::lit(0.5);
        if mid <= lo || mid >= hi {
            break;
        }
        if stationarity(mid, params.gamma) > T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo + hi) * T::lit(0.5)
}

/// Argmax over `points` interior grid nodes, refined by golden-section search on the bracketing cell.
pub fn cch_mode_grid<T: Real>(params: &CchParams<T>, points: usize) -> T {
    let h = T::lit(0.5) / T::from_usize(points + 1).expect("grid size");
    let at = |k: usize| h * T::from_usize(k).expect("index");
    let best = (1..=points)
        .max_by(|&a, &b| {
            cch_log_density(at(a), params)
                .partial_cmp(&cch_log_density(at(b), params))
                .unwrap_or(std::cmp::Ordering::Equal)
        })
        .unwrap_or(1);
    let (mut a, mut b) = (at(best - 1), at(best + 1));
    let phi = (T::lit(5.0).sqrt() - T::one()) * T::lit(0.5);
    for _ in 0..200 {
        let c = b - (b - a) * phi;
        let d = a + (b - a) * phi;
        if cch_log_density(c, params) > cch_log_density(d, params) {
            b = d;
        } else {
            a = c;
        }
        if b - a <= T::epsilon() * T::lit(4.0) {
            break;
        }
    }
    (a + b) * T::lit(0.5)
}

/// Normalized density tabulated by composite Simpson on `(0, ½)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CchDensity<T = f64> {
    pub grid: Vec<T>,
    pub density: Vec<T>,
    weights: Vec<T>,
}

impl<T: Real> CchDensity<T> {
    /// `intervals` is rounded up to even.
    pub fn new(params: &CchParams<T>, intervals: usize) -> Self {
        let n = (intervals.max(2) + 1) / 2 * 2;
        let h = T::lit(0.5) / T::from_usize(n).expect("grid size");
        let grid: Vec<T> = (0..=n).map(|k| h * T::from_usize(k).expect("index")).collect();
        let logs: Vec<T> = grid.iter().map(|&e| cch_log_density(e, params)).collect();
        let top = logs.iter().copied().fold(T::neg_infinity(), T::max);
        let raw: Vec<T> = logs.iter().map(|&l| (l - top).exp()).collect();
        let weights: Vec<T> = (0..=n)
            .map(|k| {
                let c = if k == 0 || k == n {
                    T::one()
                } else if k % 2 == 1 {
                    T::lit(4.0)
                } else {
                    T::lit(2.0)
                };
                c * h / T::lit(3.0)
            })
            .collect();
        let z: T = raw.iter().zip(&weights).map(|(&f, &w)| f * w).sum();
        let density = raw.into_iter().map(|f| f / z).collect();
        Self {
            grid,
            density,
            weights,
        }
    }

    pub fn integrate<F: Fn(T) -> T>(&self, f: F) -> T {
        self.grid
            .iter()
            .zip(&self.density)
            .zip(&self.weights)
            .map(|((&e, &d), &w)| w * d * f(e))
            .sum()
    }

    pub fn mass(&self) -> T {
        self.integrate(|_| T::one())
    }

    pub fn mean(&self) -> T {
        self.integrate(|e| e)
    }

    pub fn std_dev(&self) -> T {
        let mu = self.mean();
        self.integrate(|e| (e - mu) * (e - mu)).sqrt()
    }
}

/// `(max(0, ½−γ−√γ), ½−γ+√γ)` for `0 < γ < 1`, else `None`.
pub fn predicted_band<T: Real>(gamma: T) -> Option<(T, T)> {
    if !(gamma > T::zero() && gamma < T::one()) {
        return None;
    }
    let c = T::lit(0.5) - gamma;
    let s = gamma.sqrt();
    Some(((c - s).max(T::zero()), c + s))
}

/// Exponent `α` in `std ∝ m^{−α}` from the widths at `m` and `2m`.
pub fn width_exponent(gamma: f64, m: f64, intervals: usize) -> Result<f64> {
    let a = CchDensity::new(&CchParams::new(gamma, m)?, intervals).std_dev();
    let b = CchDensity::new(&CchParams::new(gamma, 2.0 * m)?, intervals).std_dev();
    Ok((a / b).log2())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn band_examples() {
        let (lo, hi) = predicted_band(0.25f64).unwrap();
        assert!(lo == 0.0 && (hi - 0.75).abs() < 1e-15);
        let (lo, hi) = predicted_band(0.01f64).unwrap();
        assert!((lo - 0.39).abs() < 1e-12 && (hi - 0.59).abs() < 1e-12);
        assert!(predicted_band(1.0f64).is_none());
        assert!(predicted_band(0.0f64).is_none());
    }

    #[test]
    fn band_shrinks_toward_half() {
        let mut prev = f64::INFINITY;
        for g in [0.2, 0.1, 0.05, 0.01, 0.001] {
            let (lo, hi) = predicted_band(g).unwrap();
            assert!(hi - lo < prev);
            assert!(lo <= 0.5 && hi >= 0.5 - g);
            prev = hi - lo;
        }
    }

    #[test]
    fn outside_is_minus_infinity() {
        let p = CchParams::new(0.1, 10.0).unwrap();
        for e in [-0.1, 0.0, 0.5, 0.7] {
            assert_eq!(cch_log_density(e, &p), f64::NEG_INFINITY);
        }
    }

    #[test]
    fn rejects_bad_params() {
        assert!(CchParams::new(1.0, 10.0).is_err());
        assert!(CchParams::new(0.1, 0.5).is_err());
    }

    #[test]
    fn f32_mode() {
        let p = CchParams::new(0.05f32, 100.0).unwrap();
        let e = cch_mode(&p);
        assert!(stationarity(e, 0.05f32).abs() < 1e-3);
    }
}
