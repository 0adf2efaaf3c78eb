//! Empirical checks of the XHX → WHRF reduction: moment generating functions
//! and the loss distribution at a fixed parameter point.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Gamma};

use crate::error::{Error, Result};
use crate::hamiltonian::{PauliSum, SpectralStats};
use crate::simulator::{energy, CompiledObservable, InitialState};
use crate::stats::{ks_pvalue, ks_statistic, mean_var};
use crate::vqe::build_random_ansatz;

/// Soft gate on the loss-histogram KS p-value.
pub const SOFT_PVALUE: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MgfComparison {
    pub x_grid: Vec<f64>,
    pub mgf_xhx: Vec<f64>,
    pub mgf_whrf: Vec<f64>,
    pub max_relative_deviation: f64,
}

fn scaled(spectrum: &[f64]) -> Result<(Vec<f64>, f64)> {
    if spectrum.len() < 2 {
        return Err(Error::InvalidArgument("need at least two eigenvalues".into()));
    }
    let min = spectrum.iter().copied().fold(f64::INFINITY, f64::min);
    let mean = spectrum.iter().sum::<f64>() / spectrum.len() as f64;
    let nuc: f64 = spectrum.iter().map(|h| h - min).sum();
    if !(nuc > 0.0) {
        return Err(Error::DegenerateSpectrum(min));
    }
    let s: Vec<f64> = spectrum.iter().map(|h| (h - mean) / nuc).collect();
    let top = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok((s, top))
}

/// `ln M_XHX(x) = x − Σ ln(1 − s_i x)` with `s_i = (h_i − λ̄)/‖H − λ₁‖_*`.
pub fn log_mgf_xhx(spectrum: &[f64], x: f64) -> Result<f64> {
    let (s, top) = scaled(spectrum)?;
    if top > 0.0 && x * top >= 1.0 {
        return Err(Error::OutsideDomain {
            x,
            domain: format!("x < {}", 1.0 / top),
        });
    }
    Ok(x - s.iter().map(|si| (-si * x).ln_1p()).sum::<f64>())
}

/// `ln M_WHRF(x) = −m ln(1 − x/m)`.
pub fn log_mgf_whrf(m: f64, x: f64) -> Result<f64> {
    if x >= m {
        return Err(Error::OutsideDomain {
            x,
            domain: format!("x < m = {m}"),
        });
    }
    Ok(-m * (-x / m).ln_1p())
}

pub fn mgf_compare(spectrum: &[f64], m: f64, x_grid: &[f64]) -> Result<MgfComparison> {
    let mut xhx = Vec::with_capacity(x_grid.len());
    let mut whrf = Vec::with_capacity(x_grid.len());
    let mut dev: f64 = 0.0;
    for &x in x_grid {
        let a = log_mgf_xhx(spectrum, x)?.exp();
        let b = log_mgf_whrf(m, x)?.exp();
        if !a.is_finite() || !b.is_finite() {
            return Err(Error::Numerical(format!("MGF overflow at x = {x}")));
        }
        dev = dev.max((a - b).abs() / b);
        xhx.push(a);
        whrf.push(b);
    }
    Ok(MgfComparison {
        x_grid: x_grid.to_vec(),
        mgf_xhx: xhx,
        mgf_whrf: whrf,
        max_relative_deviation: dev,
    })
}

/// `(M'(0), M''(0))` of both MGFs by central differences of step `h`.
pub fn mgf_derivatives_at_zero(spectrum: &[f64], m: f64, h: f64) -> Result<((f64, f64), (f64, f64))> {
    let d = |f: &dyn Fn(f64) -> Result<f64>| -> Result<(f64, f64)> {
        let (fp, f0, fm) = (f(h)?.exp(), f(0.0)?.exp(), f(-h)?.exp());
        Ok(((fp - fm) / (2.0 * h), (fp - 2.0 * f0 + fm) / (h * h)))
    };
    Ok((d(&|x| log_mgf_xhx(spectrum, x))?, d(&|x| log_mgf_whrf(m, x))?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramReport {
    pub draws: usize,
    pub m: f64,
    pub sample_mean: f64,
    pub sample_variance: f64,
    pub ks_statistic: f64,
    pub p_value: f64,
    pub passes_soft_gate: bool,
}

/// Normalized energies at fixed `theta` over fresh random ansatzes (Clifford-prefixed), tested against `Γ(m, 1/m)`.
pub fn loss_histogram_check(
    h: &PauliSum<f64>,
    stats: &SpectralStats,
    r: usize,
    theta: &[f64],
    draws: usize,
    seed: u64,
) -> Result<HistogramReport> {
    if draws < 2 {
        return Err(Error::InvalidArgument("need at least two draws".into()));
    }
    let n = h.num_qubits();
    let obs = CompiledObservable::new(h)?;
    let p = theta.len();
    let samples: Vec<f64> = (0..draws)
        .into_par_iter()
        .map(|d| {
            let a = build_random_ansatz(n, p, r, seed.wrapping_add(2 * d as u64))?
                .with_initial(InitialState::CliffordPrefix(seed.wrapping_add(2 * d as u64 + 1)));
            let s = a.prepare(theta)?;
            Ok(stats.normalize(energy(&s, &obs)?))
        })
        .collect::<Result<_>>()?;
    let law = Gamma::new(stats.m, stats.m).map_err(|e| Error::Numerical(e.to_string()))?;
    let d = ks_statistic(&samples, |x| law.cdf(x));
    let p_value = ks_pvalue(d, draws);
    let (sample_mean, sample_variance) = mean_var(&samples);
    Ok(HistogramReport {
        draws,
        m: stats.m,
        sample_mean,
        sample_variance,
        ks_statistic: d,
        p_value,
        passes_soft_gate: p_value > SOFT_PVALUE,
    })
}
