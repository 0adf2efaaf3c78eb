//! Ansatz builders, momentum gradient descent, and the multi-instance experiment harness.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cch::predicted_band;
use crate::error::{Error, Result};
use crate::freeprob::band_edge_e0;
use crate::hamiltonian::{
    build_fermi_hubbard, diagonalize, restrict_to_sector, FermiHubbardSpec, PauliSum, SpectralStats,
};
use crate::pauli::{sample_uniform_pauli, PauliString};
use crate::scalar::Real;
use crate::simulator::{
    energy_and_gradient, wrap_angle, AnsatzProgram, CompiledObservable, GradientMode, InitialState,
    Observable, Rotation,
};

/// Momentum gradient-descent settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingConfig {
    pub learning_rate: f64,
    pub momentum: f64,
    /// Halt once `|F_k − F_{k−1}| ≤ tol` (raw energy units) and a plain
    /// gradient step would gain at most `tol` as well, `η‖∇F‖² ≤ tol`. The
    /// second condition keeps momentum turning points from ending a run.
    pub tol: f64,
    pub max_iters: u64,
    pub gradient_mode: GradientMode,
    /// Keep every `decimation`-th energy in the trajectory.
    pub decimation: u64,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.05,
            momentum: 0.9,
            tol: 1e-5,
            max_iters: 1_000_000,
            gradient_mode: GradientMode::Adjoint,
            decimation: 100,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "learning_rate must be > 0, got {}",
                self.learning_rate
            )));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::InvalidArgument(format!(
                "momentum must lie in [0, 1), got {}",
                self.momentum
            )));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidArgument(format!("tol must be > 0, got {}", self.tol)));
        }
        if self.max_iters == 0 || self.decimation == 0 {
            return Err(Error::InvalidArgument(
                "max_iters and decimation must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HaltReason {
    Tol,
    MaxIters,
}

impl std::fmt::Display for HaltReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            HaltReason::Tol => "tol",
            HaltReason::MaxIters => "max_iters",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingResult {
    pub final_params: Vec<f64>,
    pub initial_energy: f64,
    pub final_energy: f64,
    pub final_normalized_energy: f64,
    pub iterations_used: u64,
    pub halt_reason: HaltReason,
    /// Normalized energy at iterations `0, d, 2d, …` plus the final one.
    pub energy_trajectory: Vec<f64>,
    pub final_gradient_norm: f64,
}

/// Gradient descent with momentum: `v ← μv − η∇F`, `θ ← θ + v`.
pub fn train<T: Real, O: Observable<T> + ?Sized + Sync>(
    a: &AnsatzProgram,
    h: &O,
    stats: &SpectralStats,
    cfg: &TrainingConfig,
    init_params: &[T],
) -> Result<TrainingResult> {
    cfg.validate()?;
    if init_params.len() != a.num_params() {
        return Err(Error::InvalidArgument(format!(
            "expected {} initial parameters, got {}",
            a.num_params(),
            init_params.len()
        )));
    }
    let lr = T::lit(cfg.learning_rate);
    let mu = T::lit(cfg.momentum);
    let mut theta = init_params.to_vec();
    let mut v = vec![T::zero(); theta.len()];
    let (mut e, mut g) = energy_and_gradient(a, &theta, h, cfg.gradient_mode)?;
    check_finite(e, &g, 0)?;
    let initial = e.to_f64_lossy();
    let mut traj = vec![stats.normalize(initial)];
    let mut it = 0u64;
    let halt = loop {
        for ((vi, ti), gi) in v.iter_mut().zip(theta.iter_mut()).zip(&g) {
            *vi = mu * *vi - lr * *gi;
            *ti += *vi;
        }
        it += 1;
        let (e_new, g_new) = energy_and_gradient(a, &theta, h, cfg.gradient_mode)?;
        check_finite(e_new, &g_new, it)?;
        let delta = (e - e_new).abs().to_f64_lossy();
        e = e_new;
        g = g_new;
        let predicted = cfg.learning_rate * g.iter().map(|x| x.to_f64_lossy().powi(2)).sum::<f64>();
        if it % cfg.decimation == 0 {
            traj.push(stats.normalize(e.to_f64_lossy()));
        }
        if delta <= cfg.tol && predicted <= cfg.tol {
            break HaltReason::Tol;
        }
        if it >= cfg.max_iters {
            break HaltReason::MaxIters;
        }
    };
    let final_energy = e.to_f64_lossy();
    if it % cfg.decimation != 0 {
        traj.push(stats.normalize(final_energy));
    }
    let gnorm = g.iter().map(|x| x.to_f64_lossy().powi(2)).sum::<f64>().sqrt();
    Ok(TrainingResult {
        final_params: theta.iter().map(|t| wrap_angle(t.to_f64_lossy())).collect(),
        initial_energy: initial,
        final_energy,
        final_normalized_energy: stats.normalize(final_energy),
        iterations_used: it,
        halt_reason: halt,
        energy_trajectory: traj,
        final_gradient_norm: gnorm,
    })
}

fn check_finite<T: Real>(e: T, g: &[T], it: u64) -> Result<()> {
    if !e.is_finite() {
        return Err(Error::Numerical(format!("non-finite loss {e} at iteration {it}")));
    }
    if let Some(i) = g.iter().position(|x| !x.is_finite()) {
        return Err(Error::Numerical(format!(
            "non-finite gradient component {i} at iteration {it}"
        )));
    }
    Ok(())
}

/// Uniform draw on `[−π, π)ᵖ`.
pub fn uniform_params<R: Rng + ?Sized>(p: usize, rng: &mut R) -> Vec<f64> {
    (0..p).map(|_| rng.random_range(-PI..PI)).collect()
}

/// `q = p·r` rotations with i.i.d. uniform non-identity generators; rotation `j` uses parameter `j mod p`.
pub fn build_random_ansatz(n: usize, p: usize, r: usize, seed: u64) -> Result<AnsatzProgram> {
    if p == 0 || r == 0 {
        return Err(Error::InvalidArgument(format!("need p >= 1 and r >= 1, got p={p}, r={r}")));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("need at least one qubit".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rotations = (0..p * r)
        .map(|j| Rotation {
            generator: sample_uniform_pauli(n, true, &mut rng),
            param_index: j % p,
            scale: 1.0,
        })
        .collect();
    AnsatzProgram::new(n, p, rotations, InitialState::Basis(0))
}

/// Splits `items` into `f` contiguous chunks whose sizes differ by at most one.
fn chunks<T: Clone>(items: &[T], f: usize) -> Vec<Vec<T>> {
    let (q, rem) = (items.len() / f, items.len() % f);
    let mut out = Vec::with_capacity(f);
    let mut start = 0;
    for i in 0..f {
        let len = q + usize::from(i < rem);
        out.push(items[start..start + len].to_vec());
        start += len;
    }
    out
}

/// Splits a group's per-link term lists into `f` sub-sums: by link when there
/// are enough links, otherwise by individual terms.
fn split_group(links: &[Vec<(f64, PauliString)>], f: usize) -> Result<Vec<Vec<(f64, PauliString)>>> {
    if f <= links.len() {
        return Ok(chunks(links, f)
            .into_iter()
            .map(|c| c.into_iter().flatten().collect())
            .collect());
    }
    let terms: Vec<_> = links.iter().flatten().cloned().collect();
    if f > terms.len() {
        return Err(Error::InvalidArgument(format!(
            "split factor {f} exceeds the {} terms of an HVA group",
            terms.len()
        )));
    }
    Ok(chunks(&terms, f))
}

/// Hamiltonian variational ansatz: per layer `e^{−iθ₃H_odd} e^{−iθ₂H_even} e^{−iθ₁H_Coulomb}`,
/// each group split into `f` independently parameterized sub-sums.
pub fn build_hva_ansatz(spec: &FermiHubbardSpec, layers: usize, f: usize) -> Result<AnsatzProgram> {
    if layers == 0 || f == 0 {
        return Err(Error::InvalidArgument(format!(
            "need layers >= 1 and f >= 1, got layers={layers}, f={f}"
        )));
    }
    let n = spec.n;
    let links = spec.link_terms()?;
    let coulomb: Vec<Vec<_>> = links
        .iter()
        .map(|l| l.coulomb.iter().filter(|(_, p)| !p.is_identity()).cloned().collect())
        .collect();
    let even: Vec<Vec<_>> = links.iter().filter(|l| l.link % 2 == 0).map(|l| l.hopping.clone()).collect();
    let odd: Vec<Vec<_>> = links.iter().filter(|l| l.link % 2 == 1).map(|l| l.hopping.clone()).collect();
    let groups = [split_group(&coulomb, f)?, split_group(&even, f)?, split_group(&odd, f)?];
    let mut rotations = Vec::new();
    for layer in 0..layers {
        for (gi, group) in groups.iter().enumerate() {
            for (sub, terms) in group.iter().enumerate() {
                let idx = layer * 3 * f + gi * f + sub;
                rotations.extend(terms.iter().map(|(c, p)| Rotation {
                    generator: p.clone(),
                    param_index: idx,
                    scale: *c,
                }));
            }
        }
    }
    let half_filled = (1u64 << (n / 2)) - 1;
    AnsatzProgram::new(n, 3 * layers * f, rotations, InitialState::Basis(half_filled))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnsatzFamily {
    Random,
    Hva,
}

impl std::fmt::Display for AnsatzFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            AnsatzFamily::Random => "random",
            AnsatzFamily::Hva => "hva",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialKind {
    /// `|0…0⟩` for the random family, half filling for HVA.
    #[default]
    Default,
    /// Fresh random Clifford-circuit state per instance.
    Clifford,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnsatzConfig {
    pub family: AnsatzFamily,
    /// Distinct parameters (random family).
    #[serde(default)]
    pub p: Option<usize>,
    #[serde(default = "one")]
    pub r: usize,
    /// Layers (HVA).
    #[serde(default = "six")]
    pub layers: usize,
    /// Parameter split factor (HVA).
    #[serde(default = "one")]
    pub f: usize,
    #[serde(default)]
    pub initial: InitialKind,
}

fn one() -> usize {
    1
}
fn six() -> usize {
    6
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub hamiltonian: FermiHubbardSpec,
    pub ansatz: AnsatzConfig,
    #[serde(default = "fifty_two")]
    pub instances: usize,
    #[serde(default)]
    pub training: TrainingConfig,
    #[serde(default)]
    pub master_seed: u64,
}

fn fifty_two() -> usize {
    52
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.hamiltonian.validate()?;
        self.training.validate()?;
        if self.instances == 0 {
            return Err(Error::InvalidArgument("instances must be >= 1".into()));
        }
        let a = &self.ansatz;
        if a.r == 0 || a.f == 0 || a.layers == 0 {
            return Err(Error::InvalidArgument("r, f and layers must be >= 1".into()));
        }
        match a.family {
            AnsatzFamily::Random => {
                if a.p.unwrap_or(0) == 0 {
                    return Err(Error::InvalidArgument("random family needs p >= 1".into()));
                }
            }
            AnsatzFamily::Hva => {
                if let Some(p) = a.p {
                    if p != 3 * a.layers * a.f {
                        return Err(Error::InvalidArgument(format!(
                            "HVA p is fixed to 3*layers*f = {}, got p = {p}",
                            3 * a.layers * a.f
                        )));
                    }
                }
                if a.r != 1 {
                    return Err(Error::InvalidArgument("r is not used by the HVA family".into()));
                }
            }
        }
        if self.hamiltonian.n > crate::hamiltonian::MAX_DENSE_QUBITS {
            return Err(Error::DimensionTooLarge {
                n: self.hamiltonian.n,
                max: crate::hamiltonian::MAX_DENSE_QUBITS,
            });
        }
        Ok(())
    }

    /// Distinct parameter count implied by the ansatz settings.
    pub fn num_params(&self) -> usize {
        match self.ansatz.family {
            AnsatzFamily::Random => self.ansatz.p.unwrap_or(0),
            AnsatzFamily::Hva => 3 * self.ansatz.layers * self.ansatz.f,
        }
    }
}

/// One CSV row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceRow {
    pub instance: usize,
    pub family: AnsatzFamily,
    pub n: usize,
    pub p: usize,
    pub r: usize,
    pub f: usize,
    pub gamma: f64,
    pub final_normalized_energy: Option<f64>,
    pub final_energy: Option<f64>,
    pub iterations: Option<u64>,
    /// `tol`, `max_iters`, or `error: …`.
    pub halt_reason: String,
    pub in_band: Option<bool>,
    pub final_gradient_norm: Option<f64>,
}

/// Summary of the theory prediction attached to an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub gamma: f64,
    pub m: f64,
    /// `½ − γ ± √γ`, clamped at 0; `None` for `γ ≥ 1`.
    pub band: Option<(f64, f64)>,
    /// Solver band edge (in the units of `C(x)`); `None` when `γ ≥ 1`.
    pub e0: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub stats: SpectralStats,
    /// `true` when `stats` come from the `n/2` sector.
    pub sector_stats: bool,
    pub prediction: Prediction,
    pub rows: Vec<InstanceRow>,
}

impl ExperimentReport {
    /// Fraction of successful instances inside the predicted band.
    pub fn in_band_fraction(&self) -> Option<f64> {
        let flags: Vec<bool> = self.rows.iter().filter_map(|r| r.in_band).collect();
        (!flags.is_empty()).then(|| flags.iter().filter(|&&b| b).count() as f64 / flags.len() as f64)
    }

    pub fn minima(&self) -> Vec<f64> {
        self.rows.iter().filter_map(|r| r.final_normalized_energy).collect()
    }
}

/// Statistics used for normalization: full space for the random family, the `n/2` sector for HVA.
pub fn experiment_stats(h: &PauliSum<f64>, family: AnsatzFamily) -> Result<(SpectralStats, bool)> {
    match family {
        AnsatzFamily::Random => Ok((crate::hamiltonian::spectral_stats(&diagonalize(h)?)?, false)),
        AnsatzFamily::Hva => Ok((restrict_to_sector(h, h.num_qubits() / 2)?.stats, true)),
    }
}

/// Theory overlay for a given `γ`.
pub fn prediction(gamma: f64, m: f64, r: usize) -> Prediction {
    Prediction {
        gamma,
        m,
        band: predicted_band(gamma),
        e0: band_edge_e0(gamma, r as f64).ok().flatten(),
    }
}

/// Per-instance RNG derived from `(master seed, instance)`.
pub fn instance_rng(master_seed: u64, instance: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(instance as u64);
    rng
}

/// Ansatz and starting point of instance `i`; `hva` is the shared HVA program when the family uses one.
pub fn instance_setup(
    cfg: &ExperimentConfig,
    hva: Option<&AnsatzProgram>,
    i: usize,
) -> Result<(AnsatzProgram, Vec<f64>)> {
    let p = cfg.num_params();
    let mut rng = instance_rng(cfg.master_seed, i);
    let program = match hva {
        Some(a) => a.clone(),
        None => build_random_ansatz(cfg.hamiltonian.n, p, cfg.ansatz.r, rng.random())?,
    };
    let program = match cfg.ansatz.initial {
        InitialKind::Default => program,
        InitialKind::Clifford => program.with_initial(InitialState::CliffordPrefix(rng.random())),
    };
    Ok((program, uniform_params(p, &mut rng)))
}

/// Trains instance `i` of an experiment on its own, with the same draws `run_experiment` would use.
pub fn train_instance(cfg: &ExperimentConfig, i: usize) -> Result<(SpectralStats, TrainingResult)> {
    cfg.validate()?;
    let h = build_fermi_hubbard(&cfg.hamiltonian)?;
    let (stats, _) = experiment_stats(&h, cfg.ansatz.family)?;
    let hva = match cfg.ansatz.family {
        AnsatzFamily::Hva => Some(build_hva_ansatz(&cfg.hamiltonian, cfg.ansatz.layers, cfg.ansatz.f)?),
        AnsatzFamily::Random => None,
    };
    let (program, init) = instance_setup(cfg, hva.as_ref(), i)?;
    let res = train(&program, &CompiledObservable::new(&h)?, &stats, &cfg.training, &init)?;
    Ok((stats, res))
}

/// Runs every instance; failures become rows with an `error:` halt reason.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let h = build_fermi_hubbard(&cfg.hamiltonian)?;
    let (stats, sector) = experiment_stats(&h, cfg.ansatz.family)?;
    let obs = CompiledObservable::new(&h)?;
    let p = cfg.num_params();
    let gamma = stats.gamma(p);
    let pred = prediction(gamma, stats.m, cfg.ansatz.r);
    let hva = match cfg.ansatz.family {
        AnsatzFamily::Hva => Some(build_hva_ansatz(&cfg.hamiltonian, cfg.ansatz.layers, cfg.ansatz.f)?),
        AnsatzFamily::Random => None,
    };
    let rows: Vec<InstanceRow> = (0..cfg.instances)
        .into_par_iter()
        .map(|i| {
            let outcome = instance_setup(cfg, hva.as_ref(), i)
                .and_then(|(program, init)| train(&program, &obs, &stats, &cfg.training, &init));
            let base = InstanceRow {
                instance: i,
                family: cfg.ansatz.family,
                n: cfg.hamiltonian.n,
                p,
                r: cfg.ansatz.r,
                f: cfg.ansatz.f,
                gamma,
                final_normalized_energy: None,
                final_energy: None,
                iterations: None,
                halt_reason: String::new(),
                in_band: None,
                final_gradient_norm: None,
            };
            match outcome {
                Ok(res) => InstanceRow {
                    final_normalized_energy: Some(res.final_normalized_energy),
                    final_energy: Some(res.final_energy),
                    iterations: Some(res.iterations_used),
                    halt_reason: res.halt_reason.to_string(),
                    in_band: pred
                        .band
                        .map(|(lo, hi)| (lo..=hi).contains(&res.final_normalized_energy)),
                    final_gradient_norm: Some(res.final_gradient_norm),
                    ..base
                },
                Err(e) => InstanceRow {
                    halt_reason: format!("error: {e}"),
                    ..base
                },
            }
        })
        .collect();
    Ok(ExperimentReport {
        stats,
        sector_stats: sector,
        prediction: pred,
        rows,
    })
}
