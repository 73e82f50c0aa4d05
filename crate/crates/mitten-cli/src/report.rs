//! Result files: tidy CSV tables and the reproducibility manifest.

use crate::config::ExperimentConfig;
use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

/// One results row; the column order is fixed.
#[derive(Debug, Clone)]
pub struct ResultRow {
    pub step: usize,
    pub chi_max: usize,
    pub estimator: &'static str,
    pub ideal: f64,
    pub noisy: f64,
    pub mitigated: f64,
    pub abs_error: f64,
    pub gamma_analytic: Option<f64>,
    pub gamma_empirical: Option<f64>,
    pub pec_gamma_theory: f64,
    pub shots: u64,
    pub seed: u64,
}

pub const RESULTS_HEADER: &str = "step,chi_max,estimator,ideal,noisy,mitigated,abs_error,gamma_analytic,gamma_empirical,pec_gamma_theory,shots,seed";

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Write one observable's rows as `results_<name>.csv` (UTF-8, LF, '.'
/// decimal separator).
pub fn write_results_csv(dir: &Path, observable: &str, rows: &[ResultRow]) -> Result<PathBuf> {
    let path = dir.join(format!("results_{observable}.csv"));
    let mut out = String::new();
    out.push_str(RESULTS_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.step,
            r.chi_max,
            r.estimator,
            r.ideal,
            r.noisy,
            r.mitigated,
            r.abs_error,
            fmt_opt(r.gamma_analytic),
            fmt_opt(r.gamma_empirical),
            r.pec_gamma_theory,
            r.shots,
            r.seed,
        ));
    }
    std::fs::write(&path, out).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

/// Least-squares fit of `ln γ_estimator = alpha · ln γ_PEC + beta` per
/// (observable, chi); written as `overhead_fit.csv`.
#[derive(Debug, Clone)]
pub struct OverheadFit {
    pub observable: String,
    pub chi_max: usize,
    pub estimator: &'static str,
    pub alpha: f64,
    pub beta: f64,
}

pub fn fit_log_exponent(gamma_est: &[f64], gamma_pec: &[f64]) -> Option<(f64, f64)> {
    let pts: Vec<(f64, f64)> = gamma_est
        .iter()
        .zip(gamma_pec)
        .filter(|(&g, &p)| g > 0.0 && p > 1.0)
        .map(|(&g, &p)| (p.ln(), g.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|(x, _)| x).sum();
    let sy: f64 = pts.iter().map(|(_, y)| y).sum();
    let sxx: f64 = pts.iter().map(|(x, _)| x * x).sum();
    let sxy: f64 = pts.iter().map(|(x, y)| x * y).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-30 {
        return None;
    }
    let alpha = (n * sxy - sx * sy) / denom;
    let beta = (sy - alpha * sx) / n;
    Some((alpha, beta))
}

pub fn write_overhead_fit_csv(dir: &Path, fits: &[OverheadFit]) -> Result<PathBuf> {
    let path = dir.join("overhead_fit.csv");
    let mut out = String::from("observable,chi_max,estimator,alpha,beta\n");
    for f in fits {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            f.observable, f.chi_max, f.estimator, f.alpha, f.beta
        ));
    }
    std::fs::write(&path, out).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

/// Everything needed to reproduce a run bit-for-bit with the same build.
#[derive(Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub engine_version: String,
    pub config: ExperimentConfig,
    /// Calibrated generator rates actually used, per noise label.
    pub noise_rates: BTreeMap<String, Vec<(String, f64)>>,
    /// Per-chi, per-Trotter-step accumulated discarded weight of the
    /// middle-out map.
    pub discarded_weights: BTreeMap<String, Vec<f64>>,
    /// Final bond dimensions of the middle-out map per chi.
    pub final_bonds: BTreeMap<String, Vec<usize>>,
    /// Wall-clock seconds per phase.
    pub wall_seconds: BTreeMap<String, f64>,
    pub result_files: Vec<String>,
}

pub fn write_manifest(dir: &Path, manifest: &RunManifest) -> Result<PathBuf> {
    let path = dir.join("manifest.json");
    let mut file = std::fs::File::create(&path)
        .with_context(|| format!("creating {}", path.display()))?;
    let text = serde_json::to_string_pretty(manifest).context("serializing manifest")?;
    file.write_all(text.as_bytes())?;
    file.write_all(b"\n")?;
    Ok(path)
}
