//! Monte Carlo evaluation of the expected number of index-`k` critical points
//! at energy `E` and the closed-form conditioned Hessian sampler.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::freeprob::band_edge_e0;
use crate::randmat::{sample_c, sym_eigenvalues, EnsembleParams};
use crate::stats::logsumexp;

/// One Monte Carlo estimate of `ln E[Crt_k(E)]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrtEstimate {
    pub energy: f64,
    pub k: usize,
    pub log_value: f64,
    pub mc_std_error: f64,
    pub trials: usize,
    pub acceptance_fraction: f64,
}

/// `C̃(x) = −2rx·I + (r/m)W + (r/m)√(2mx)·N`.
pub fn hessian_closed_form_sample<R: Rng + ?Sized>(
    x: f64,
    p: usize,
    m: f64,
    r: f64,
    rng: &mut R,
) -> Result<DMatrix<f64>> {
    let params = EnsembleParams::new(p, m, r, x)?;
    let mut c = sample_c(&params, rng)?;
    for i in 0..p {
        c[(i, i)] -= 2.0 * r * x;
    }
    Ok(c)
}

/// The deterministic part of the log count.
pub fn log_prefactor(e: f64, p: usize, m: f64, r: f64) -> f64 {
    let gamma = p as f64 / (2.0 * m);
    0.5 * p as f64 * (std::f64::consts::PI / r).ln() - ln_gamma(m) + (1.0 + gamma) * m * m.ln()
        + ((1.0 - gamma) * m - 1.0) * e.ln()
        - m * e
}

fn validate(e: f64, k: usize, p: usize, m: f64, r: f64, trials: usize) -> Result<EnsembleParams> {
    if !(e > 0.0) || !e.is_finite() {
        return Err(Error::OutsideDomain {
            x: e,
            domain: "E > 0".into(),
        });
    }
    if k >= p {
        return Err(Error::InvalidArgument(format!("index k = {k} must be < p = {p}")));
    }
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be >= 1".into()));
    }
    EnsembleParams::new(p, m, r, e)
}

fn trial_rng(base: u64, t: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(base);
    rng.set_stream(t as u64);
    rng
}

/// Ascending spectrum and `Σ ln|λ_i − 2rE|` per trial.
fn trial_log_dets(params: &EnsembleParams, base: u64, trials: usize) -> Result<Vec<(Vec<f64>, f64)>> {
    let shift = 2.0 * params.r * params.x;
    (0..trials)
        .into_par_iter()
        .map(|t| {
            let c = sample_c(params, &mut trial_rng(base, t))?;
            let ev = sym_eigenvalues(&c);
            let s: f64 = ev.iter().map(|l| (l - shift).abs().ln()).sum();
            Ok((ev, s))
        })
        .collect()
}

fn estimate(e: f64, k: usize, prefactor: f64, terms: &[f64]) -> CrtEstimate {
    let trials = terms.len();
    let accepted = terms.iter().filter(|t| t.is_finite()).count();
    let lse = logsumexp(terms);
    let log_value = prefactor + lse - (trials as f64).ln();
    let mc_std_error = if accepted == 0 {
        f64::INFINITY
    } else if trials == 1 {
        f64::NAN
    } else {
        // Delta method on ln(mean w) with w_t = exp(t_t − max).
        let top = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = terms.iter().map(|t| (t - top).exp()).collect();
        let (mean, var) = crate::stats::mean_var(&w);
        (var / trials as f64).sqrt() / mean
    };
    CrtEstimate {
        energy: e,
        k,
        log_value: if accepted == 0 { f64::NEG_INFINITY } else { log_value },
        mc_std_error,
        trials,
        acceptance_fraction: accepted as f64 / trials as f64,
    }
}

/// Monte Carlo `ln E[Crt_k(E)]` over `trials` samples of `C(E)`.
///
/// For `k = 0` the indicator and the log-determinant come from one Cholesky
/// factorization of `C(E) − 2rE·I`.
pub fn log_crt_k_mc<R: Rng + ?Sized>(
    e: f64,
    k: usize,
    p: usize,
    m: f64,
    r: f64,
    trials: usize,
    rng: &mut R,
) -> Result<CrtEstimate> {
    let params = validate(e, k, p, m, r, trials)?;
    let base: u64 = rng.random();
    let shift = 2.0 * r * e;
    let terms: Vec<f64> = if k == 0 {
        (0..trials)
            .into_par_iter()
            .map(|t| {
                let mut c = sample_c(&params, &mut trial_rng(base, t))?;
                for i in 0..p {
                    c[(i, i)] -= shift;
                }
                Ok(match c.cholesky() {
                    Some(ch) => {
                        let l = ch.l_dirty();
                        2.0 * (0..p).map(|i| l[(i, i)].ln()).sum::<f64>()
                    }
                    None => f64::NEG_INFINITY,
                })
            })
            .collect::<Result<_>>()?
    } else {
        trial_log_dets(&params, base, trials)?
            .into_iter()
            .map(|(ev, s)| if ev[k] >= shift { s } else { f64::NEG_INFINITY })
            .collect()
    };
    Ok(estimate(e, k, log_prefactor(e, p, m, r), &terms))
}

/// Estimates for every `k < p` from one shared set of spectra.
pub fn log_crt_all_k<R: Rng + ?Sized>(
    e: f64,
    p: usize,
    m: f64,
    r: f64,
    trials: usize,
    rng: &mut R,
) -> Result<Vec<CrtEstimate>> {
    let params = validate(e, 0, p, m, r, trials)?;
    let base: u64 = rng.random();
    let shift = 2.0 * r * e;
    let samples = trial_log_dets(&params, base, trials)?;
    let pre = log_prefactor(e, p, m, r);
    Ok((0..p)
        .map(|k| {
            let terms: Vec<f64> = samples
                .iter()
                .map(|(ev, s)| if ev[k] >= shift { *s } else { f64::NEG_INFINITY })
                .collect();
            estimate(e, k, pre, &terms)
        })
        .collect())
}

/// Per-energy estimates with the empirical and analytic band edges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrtProfile {
    pub points: Vec<CrtEstimate>,
    /// Largest grid energy with nonzero acceptance.
    pub empirical_edge: Option<f64>,
    pub e0: Option<f64>,
}

impl CrtProfile {
    /// Grid energy with the largest finite `log_value`.
    pub fn argmax(&self) -> Option<f64> {
        self.points
            .iter()
            .filter(|c| c.log_value.is_finite())
            .max_by(|a, b| a.log_value.total_cmp(&b.log_value))
            .map(|c| c.energy)
    }
}

pub fn crt_band_profile<R: Rng + ?Sized>(
    k: usize,
    p: usize,
    m: f64,
    r: f64,
    e_grid: &[f64],
    trials: usize,
    rng: &mut R,
) -> Result<CrtProfile> {
    if let Some(&bad) = e_grid.iter().find(|&&e| !(e > 0.0 && e < 1.0)) {
        return Err(Error::OutsideDomain {
            x: bad,
            domain: "grid energies in (0, 1)".into(),
        });
    }
    let points = e_grid
        .iter()
        .map(|&e| log_crt_k_mc(e, k, p, m, r, trials, rng))
        .collect::<Result<Vec<_>>>()?;
    let empirical_edge = points
        .iter()
        .filter(|c| c.acceptance_fraction > 0.0)
        .map(|c| c.energy)
        .fold(None, |a: Option<f64>, e| Some(a.map_or(e, |v| v.max(e))));
    let e0 = band_edge_e0(p as f64 / (2.0 * m), r)?;
    Ok(CrtProfile {
        points,
        empirical_edge,
        e0,
    })
}
