//! Artifacts are assembled in memory and only written once a command has
//! succeeded, so a failing run leaves no partial files behind.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::CliResult;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    /// Effective config after flag overrides; `whrf <command> --config manifest.json` replays it.
    pub config: serde_json::Value,
    pub seed: u64,
    pub artifacts: Vec<String>,
    pub version: String,
    pub started_unix: u64,
    pub wall_clock_seconds: f64,
}

#[derive(Debug, Default)]
pub struct Outputs {
    files: Vec<(String, Vec<u8>)>,
}

impl Outputs {
    pub fn add(&mut self, name: &str, bytes: impl Into<Vec<u8>>) {
        self.files.push((name.to_string(), bytes.into()));
    }

    pub fn add_json<T: Serialize>(&mut self, name: &str, value: &T) -> CliResult<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.add(name, text);
        Ok(())
    }

    pub fn names(&self) -> Vec<String> {
        self.files.iter().map(|(n, _)| n.clone()).collect()
    }

    /// Writes every artifact under `dir`, then the manifest.
    pub fn write(self, dir: &Path, mut manifest: Manifest) -> CliResult<PathBuf> {
        std::fs::create_dir_all(dir)?;
        manifest.artifacts = self.names();
        for (name, bytes) in &self.files {
            std::fs::write(dir.join(name), bytes)?;
        }
        let path = dir.join("manifest.json");
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        std::fs::write(&path, text)?;
        Ok(path)
    }
}

pub fn csv_bytes<F>(header: &[&str], fill: F) -> CliResult<Vec<u8>>
where
    F: FnOnce(&mut csv::Writer<Vec<u8>>) -> CliResult<()>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    fill(&mut w)?;
    w.into_inner().map_err(|e| crate::error::CliError::user(format!("csv: {e}")))
}

pub fn experiment_plot(csv: &str, band: Option<(f64, f64)>, title: &str) -> String {
    let band = match band {
        Some((lo, hi)) => format!("({lo:?}, {hi:?})"),
        None => "None".into(),
    };
    format!(
        r#"import csv
import sys

import matplotlib.pyplot as plt

BAND = {band}

rows = list(csv.DictReader(open("{csv}")))
minima = [float(r["final_normalized_energy"]) for r in rows if r["final_normalized_energy"]]

fig, ax = plt.subplots(figsize=(5, 3.5))
ax.hist(minima, bins=20, color="tab:blue", alpha=0.8)
if BAND is not None:
    for e in BAND:
        ax.axvline(e, color="k", linestyle="--")
ax.set_xlabel("normalized energy of found minimum")
ax.set_ylabel("count")
ax.set_title("{title}")
fig.tight_layout()
fig.savefig(sys.argv[1] if len(sys.argv) > 1 else "experiment.png", dpi=150)
"#
    )
}

pub fn train_plot(csv: &str) -> String {
    format!(
        r#"import csv
import sys

import matplotlib.pyplot as plt

rows = list(csv.DictReader(open("{csv}")))
it = [int(r["iteration"]) for r in rows]
e = [float(r["normalized_energy"]) for r in rows]

fig, ax = plt.subplots(figsize=(5, 3.5))
ax.plot(it, e)
ax.set_xlabel("iteration")
ax.set_ylabel("normalized energy")
fig.tight_layout()
fig.savefig(sys.argv[1] if len(sys.argv) > 1 else "train.png", dpi=150)
"#
    )
}

pub fn crt_plot(csv: &str, p: usize, e0: Option<f64>) -> String {
    let e0 = e0.map_or("None".to_string(), |v| format!("{v:?}"));
    format!(
        r#"import csv
import math
import sys

import matplotlib.pyplot as plt

P = {p}
E0 = {e0}

rows = list(csv.DictReader(open("{csv}")))
pts = [(float(r["E"]), float(r["log_value"]) / P, float(r["stderr"]) / P) for r in rows]
pts = [t for t in pts if math.isfinite(t[1])]

fig, ax = plt.subplots(figsize=(5, 3.5))
if pts:
    ax.errorbar([t[0] for t in pts], [t[1] for t in pts], yerr=[t[2] for t in pts], fmt="o-", ms=3)
if E0 is not None:
    ax.axvline(E0, color="k", linestyle="--")
ax.set_xlabel("E")
ax.set_ylabel("(1/p) log E[Crt]")
fig.tight_layout()
fig.savefig(sys.argv[1] if len(sys.argv) > 1 else "crt.png", dpi=150)
"#
    )
}

pub fn spectrum_plot(samples: &str, density: &str) -> String {
    format!(
        r#"import csv
import sys

import matplotlib.pyplot as plt

ev = [float(r["eigenvalue"]) for r in csv.DictReader(open("{samples}"))]
theory = [(float(r["lambda"]), float(r["density"])) for r in csv.DictReader(open("{density}"))]

fig, ax = plt.subplots(figsize=(5, 3.5))
ax.hist(ev, bins=80, density=True, alpha=0.6)
ax.plot([t[0] for t in theory], [t[1] for t in theory], "k-")
ax.set_xlabel("eigenvalue of C(x)")
ax.set_ylabel("density")
fig.tight_layout()
fig.savefig(sys.argv[1] if len(sys.argv) > 1 else "spectrum.png", dpi=150)
"#
    )
}

pub fn predict_plot(csv: &str, band: (f64, f64)) -> String {
    format!(
        r#"import csv
import sys

import matplotlib.pyplot as plt

rows = [(float(r["E"]), float(r["density"])) for r in csv.DictReader(open("{csv}"))]

fig, ax = plt.subplots(figsize=(5, 3.5))
ax.plot([t[0] for t in rows], [t[1] for t in rows])
for e in {lo:?}, {hi:?}:
    ax.axvline(e, color="k", linestyle="--")
ax.set_xlabel("normalized energy")
ax.set_ylabel("density of local minima")
fig.tight_layout()
fig.savefig(sys.argv[1] if len(sys.argv) > 1 else "predict.png", dpi=150)
"#,
        lo = band.0,
        hi = band.1
    )
}
