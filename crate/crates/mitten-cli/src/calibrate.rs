//! Calibration: turn template noise specs into explicit (pauli, rate) lists.

use crate::config::{ExperimentConfig, NoiseRecord};
use anyhow::{Context, Result};
use serde::Serialize;
use std::path::{Path, PathBuf};

#[derive(Serialize)]
struct NoiseFile {
    noise: Vec<NoiseRecord>,
}

/// Write the explicit per-generator rates achieving each record's target
/// overhead. Deterministic per seed: re-running produces an identical file.
pub fn calibrate(config: &ExperimentConfig, dir: &Path) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let mut records = Vec::new();
    for (idx, record) in config.noise.iter().enumerate() {
        let model = record.build(config.n)?;
        let rates: Vec<(String, f64)> =
            model.generators().iter().map(|g| (g.pauli.to_string(), g.rate)).collect();
        let gamma = model.gamma();
        if let Some(target) = record.target_gamma {
            if (gamma - target).abs() > 1e-9 {
                anyhow::bail!(
                    "noise record '{}': calibrated gamma {gamma} misses target {target}",
                    record.label
                );
            }
        }
        let applies_to = record.applies_to.clone().or_else(|| {
            Some(if idx == 0 { "even-cnot".into() } else { "odd-cnot".into() })
        });
        records.push(NoiseRecord {
            label: record.label.clone(),
            applies_to,
            template: None,
            target_gamma: record.target_gamma,
            seed: record.seed,
            rates: Some(rates),
        });
    }
    let path = dir.join("noise.toml");
    let text = toml::to_string(&NoiseFile { noise: records }).context("serializing noise file")?;
    std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}
