use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;
use whrf::cch::{cch_mode, predicted_band, CchDensity, CchParams};
use whrf::checks::{loss_histogram_check, mgf_compare};
use whrf::freeprob::{asymptotic_log_crt0, band_edge_e0, density, FreeModelParams};
use whrf::hamiltonian::{build_fermi_hubbard, diagonalize, restrict_to_sector, spectral_stats};
use whrf::kacrice::crt_band_profile;
use whrf::randmat::{sample_c, sym_eigenvalues, EnsembleParams};
use whrf::stats::ks_statistic;
use whrf::vqe::{run_experiment, train_instance, uniform_params, ExperimentConfig};

use crate::config::*;
use crate::error::{CliError, CliResult};
use crate::output::*;

pub const OVERPARAMETERIZED: &str = "no positive-energy local minima (overparameterized)";

/// What a command produced: files for the output directory and text for stdout.
pub struct Run {
    pub outputs: Outputs,
    pub stdout: String,
}

fn pretty<T: Serialize>(v: &T) -> CliResult<String> {
    Ok(serde_json::to_string_pretty(v)?)
}

pub fn validate_hamiltonian(cfg: &HamiltonianCommand) -> CliResult<()> {
    cfg.hamiltonian.validate()?;
    let v = &cfg.validation;
    if cfg.validate && (v.p == 0 || v.r == 0 || v.draws < 2 || v.x_points < 2 || !(v.x_max > 0.0)) {
        return Err(CliError::user("validation needs p, r >= 1, draws >= 2, x_points >= 2, x_max > 0"));
    }
    if cfg.hamiltonian.n > whrf::hamiltonian::MAX_DENSE_QUBITS {
        return Err(whrf::Error::DimensionTooLarge {
            n: cfg.hamiltonian.n,
            max: whrf::hamiltonian::MAX_DENSE_QUBITS,
        }
        .into());
    }
    Ok(())
}

pub fn hamiltonian(cfg: &HamiltonianCommand) -> CliResult<Run> {
    let h = build_fermi_hubbard(&cfg.hamiltonian)?;
    let stats = spectral_stats(&diagonalize(&h)?)?;
    let sector = restrict_to_sector(&h, cfg.hamiltonian.n / 2)?.stats;
    let gammas: Vec<_> = cfg
        .p
        .iter()
        .map(|&p| json!({ "p": p, "gamma": stats.gamma(p), "sector_gamma": sector.gamma(p) }))
        .collect();
    let mut report = json!({
        "hamiltonian": cfg.hamiltonian,
        "terms": h.len(),
        "stats": stats,
        "sector_stats": sector,
        "gamma": gammas,
    });
    if cfg.validate {
        let v = &cfg.validation;
        let grid: Vec<f64> = (0..v.x_points)
            .map(|i| v.x_max * i as f64 / (v.x_points - 1) as f64)
            .collect();
        let eigs = diagonalize(&h)?;
        let mgf = mgf_compare(&eigs, stats.m, &grid)?;
        let theta = uniform_params(v.p, &mut ChaCha8Rng::seed_from_u64(cfg.seed));
        let hist = loss_histogram_check(&h, &stats, v.r, &theta, v.draws, cfg.seed)?;
        report["validation"] = json!({
            "mgf_max_relative_deviation": mgf.max_relative_deviation,
            "loss_histogram": hist,
        });
    }
    let text = pretty(&report)?;
    let mut outputs = Outputs::default();
    outputs.add("hamiltonian.json", format!("{text}\n"));
    Ok(Run { outputs, stdout: text })
}

pub fn experiment(cfg: &ExperimentConfig) -> CliResult<Run> {
    let rep = run_experiment(cfg)?;
    // The serializer derives the header from the row fields.
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in &rep.rows {
        w.serialize(r)?;
    }
    let rows = w.into_inner().map_err(|e| CliError::user(format!("csv: {e}")))?;
    let errors = rep.rows.iter().filter(|r| r.halt_reason.starts_with("error")).count();
    let summary = json!({
        "stats": rep.stats,
        "sector_stats": rep.sector_stats,
        "prediction": rep.prediction,
        "in_band_fraction": rep.in_band_fraction(),
        "failed_instances": errors,
    });
    let title = format!(
        "{} ansatz, n={}, p={}, γ={:.3}",
        cfg.ansatz.family,
        cfg.hamiltonian.n,
        cfg.num_params(),
        rep.prediction.gamma
    );
    let mut outputs = Outputs::default();
    outputs.add("experiment.csv", rows);
    outputs.add_json("experiment.json", &summary)?;
    outputs.add("plot_experiment.py", experiment_plot("experiment.csv", rep.prediction.band, &title));
    let frac = rep
        .in_band_fraction()
        .map_or("n/a".to_string(), |f| format!("{f:.3}"));
    let stdout = format!(
        "{} instances, γ = {:.4}, in-band fraction {frac}, {errors} failed",
        rep.rows.len(),
        rep.prediction.gamma
    );
    Ok(Run { outputs, stdout })
}

pub fn train(cfg: &TrainCommand) -> CliResult<Run> {
    if cfg.instance >= cfg.experiment.instances {
        return Err(CliError::user(format!(
            "instance {} out of range for {} instances",
            cfg.instance, cfg.experiment.instances
        )));
    }
    let (_, res) = train_instance(&cfg.experiment, cfg.instance)?;
    let d = cfg.experiment.training.decimation;
    let last = res.energy_trajectory.len() - 1;
    let traj = csv_bytes(&["iteration", "normalized_energy"], |w| {
        for (j, e) in res.energy_trajectory.iter().enumerate() {
            let it = if j == last { res.iterations_used } else { j as u64 * d };
            w.write_record([it.to_string(), e.to_string()])?;
        }
        Ok(())
    })?;
    let mut outputs = Outputs::default();
    outputs.add("train.csv", traj);
    outputs.add_json("train.json", &res)?;
    outputs.add("plot_train.py", train_plot("train.csv"));
    let stdout = format!(
        "final normalized energy {:.6} after {} iterations ({})",
        res.final_normalized_energy, res.iterations_used, res.halt_reason
    );
    Ok(Run { outputs, stdout })
}

pub fn validate_predict(cfg: &PredictCommand) -> CliResult<()> {
    if !(cfg.gamma > 0.0) || !cfg.gamma.is_finite() {
        return Err(CliError::user(format!("gamma must be > 0, got {}", cfg.gamma)));
    }
    if cfg.m.is_some_and(|m| !(m >= 1.0)) || !(cfg.r >= 1.0) || cfg.points < 2 {
        return Err(CliError::user("need m >= 1, r >= 1 and points >= 2"));
    }
    Ok(())
}

pub fn predict(cfg: &PredictCommand) -> CliResult<Run> {
    let mut outputs = Outputs::default();
    if cfg.gamma >= 1.0 {
        let report = json!({ "gamma": cfg.gamma, "band": null, "e0": null, "message": OVERPARAMETERIZED });
        outputs.add_json("predict.json", &report)?;
        return Ok(Run {
            outputs,
            stdout: OVERPARAMETERIZED.to_string(),
        });
    }
    let band: (f64, f64) = predicted_band(cfg.gamma).expect("gamma < 1");
    let e0 = band_edge_e0(cfg.gamma, cfg.r)?;
    let mut report = json!({ "gamma": cfg.gamma, "r": cfg.r, "band": band, "e0": e0 });
    if let Some(m) = cfg.m {
        let params = CchParams::new(cfg.gamma, m)?;
        let d = CchDensity::new(&params, cfg.points);
        report["cch"] = json!({ "m": m, "mode": cch_mode(&params), "mean": d.mean(), "std": d.std_dev() });
        let rows = csv_bytes(&["E", "density"], |w| {
            for (e, v) in d.grid.iter().zip(&d.density) {
                w.write_record([e.to_string(), v.to_string()])?;
            }
            Ok(())
        })?;
        outputs.add("predict.csv", rows);
        outputs.add("plot_predict.py", predict_plot("predict.csv", band));
    }
    outputs.add_json("predict.json", &report)?;
    let stdout = format!(
        "band [{:.4}, {:.4}], solver band edge {}",
        band.0,
        band.1,
        e0.map_or("none".to_string(), |e| format!("{e:.4}"))
    );
    Ok(Run { outputs, stdout })
}

pub fn validate_crt(cfg: &CrtCommand) -> CliResult<()> {
    let m = cfg.m()?;
    EnsembleParams::new(cfg.p, m, cfg.r, 0.0)?;
    if cfg.k >= cfg.p || cfg.trials == 0 {
        return Err(CliError::user("need k < p and trials >= 1"));
    }
    let grid = cfg.grid()?;
    if grid.iter().any(|e| !(*e > 0.0 && *e < 1.0)) {
        return Err(CliError::user("energies must lie in (0, 1)"));
    }
    Ok(())
}

pub fn crt(cfg: &CrtCommand) -> CliResult<Run> {
    let m = cfg.m()?;
    let grid = cfg.grid()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let prof = crt_band_profile(cfg.k, cfg.p, m, cfg.r, &grid, cfg.trials, &mut rng)?;
    let gamma = cfg.p as f64 / (2.0 * m);
    let rows = csv_bytes(&["E", "k", "log_value", "stderr", "acceptance"], |w| {
        for c in &prof.points {
            w.write_record([
                c.energy.to_string(),
                c.k.to_string(),
                c.log_value.to_string(),
                c.mc_std_error.to_string(),
                c.acceptance_fraction.to_string(),
            ])?;
        }
        Ok(())
    })?;
    let asymptotic: Option<Vec<f64>> = (cfg.k == 0 && gamma < 1.0).then(|| {
        grid.iter()
            .map(|&e| asymptotic_log_crt0(e, gamma, cfg.r, cfg.p as f64 * cfg.r).unwrap_or(f64::NAN))
            .collect()
    });
    let summary = json!({
        "gamma": gamma,
        "m": m,
        "empirical_edge": prof.empirical_edge,
        "e0": prof.e0,
        "argmax": prof.argmax(),
        "asymptotic_per_p": asymptotic.map(|v| v.into_iter().map(|x| if x.is_finite() { json!(x) } else { json!(null) }).collect::<Vec<_>>()),
    });
    let mut outputs = Outputs::default();
    outputs.add("crt.csv", rows);
    outputs.add_json("crt.json", &summary)?;
    outputs.add("plot_crt.py", crt_plot("crt.csv", cfg.p, prof.e0));
    let fmt = |v: Option<f64>| v.map_or("none".to_string(), |e| format!("{e:.4}"));
    let stdout = format!(
        "γ = {gamma:.4}: empirical band edge {}, solver band edge {}",
        fmt(prof.empirical_edge),
        fmt(prof.e0)
    );
    Ok(Run { outputs, stdout })
}

pub fn validate_spectrum(cfg: &SpectrumCommand) -> CliResult<()> {
    EnsembleParams::from_gamma(cfg.p, cfg.gamma, cfg.r, cfg.x)?;
    FreeModelParams::new(cfg.gamma, cfg.r, cfg.x)?;
    if cfg.draws == 0 || cfg.nodes < 16 {
        return Err(CliError::user("need draws >= 1 and nodes >= 16"));
    }
    Ok(())
}

pub fn spectrum(cfg: &SpectrumCommand) -> CliResult<Run> {
    let ens = EnsembleParams::from_gamma(cfg.p, cfg.gamma, cfg.r, cfg.x)?;
    let mu = density(&FreeModelParams::new(cfg.gamma, cfg.r, cfg.x)?, cfg.nodes)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut pooled = Vec::with_capacity(cfg.draws * cfg.p);
    let samples = csv_bytes(&["draw", "index", "eigenvalue"], |w| {
        for d in 0..cfg.draws {
            let ev = sym_eigenvalues(&sample_c(&ens, &mut rng)?);
            for (i, l) in ev.iter().enumerate() {
                w.write_record([d.to_string(), i.to_string(), l.to_string()])?;
            }
            pooled.extend(ev);
        }
        Ok(())
    })?;
    let theory = csv_bytes(&["lambda", "density"], |w| {
        for (l, v) in mu.grid.iter().zip(&mu.density) {
            w.write_record([l.to_string(), v.to_string()])?;
        }
        Ok(())
    })?;
    let cdf = mu.cdf();
    let ks = ks_statistic(&pooled, &cdf);
    let summary = json!({
        "p": cfg.p,
        "m": ens.m,
        "wishart_dof": ens.wishart_dof(),
        "atoms": mu.atoms,
        "ks_statistic": ks,
    });
    let mut outputs = Outputs::default();
    outputs.add("spectrum.csv", samples);
    outputs.add("density.csv", theory);
    outputs.add_json("spectrum.json", &summary)?;
    outputs.add("plot_spectrum.py", spectrum_plot("spectrum.csv", "density.csv"));
    Ok(Run {
        outputs,
        stdout: format!("{} eigenvalues, KS distance to the limit law {ks:.4}", pooled.len()),
    })
}
