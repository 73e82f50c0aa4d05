//! Surrogate-column diagnostics from middle-out checkpoints.

use crate::config::ExperimentConfig;
use crate::runner::load_checkpoint;
use anyhow::{bail, Context, Result};
use mitten_core::mitigation::MiddleOutState;
use std::path::{Path, PathBuf};

pub struct DiagnoseOutcome {
    pub files: Vec<PathBuf>,
    pub diagonal: f64,
    pub max_off_diagonal: f64,
    pub dominance_ratio: Option<f64>,
}

/// Read the checkpoint for `(chi, step)` and emit the diagnostics CSVs:
/// the scalar summary always, and the full off-diagonal list at n <= 4.
pub fn diagnose(
    config: &ExperimentConfig,
    output: &Path,
    chi: usize,
    step: usize,
    observable: &str,
) -> Result<DiagnoseOutcome> {
    let target = config.parse_observable(observable)?;
    let state = if step == 0 {
        MiddleOutState::<f64>::init(config.n, chi, config.tol)
    } else {
        let dir = output.join("checkpoints").join(format!("chi{chi}"));
        if !dir.join(format!("step{step:03}.mpo")).is_file() {
            bail!(
                "no checkpoint for chi {chi}, step {step} under {} (run with checkpoints enabled first)",
                dir.display()
            );
        }
        load_checkpoint(&dir, step)?.0
    };
    let diag = state
        .column_diagnostics(&target)
        .map_err(|e| anyhow::anyhow!("column diagnostics: {e}"))?;

    std::fs::create_dir_all(output)?;
    let mut files = Vec::new();
    let summary = output.join(format!("diag_step{step:03}_chi{chi}_{observable}.csv"));
    let ratio = diag.dominance_ratio.map(|r| r.to_string()).unwrap_or_default();
    std::fs::write(
        &summary,
        format!(
            "step,chi_max,observable,diagonal,max_off_diagonal,dominance_ratio\n{},{},{},{},{},{}\n",
            step, chi, observable, diag.diagonal, diag.max_off_diagonal, ratio
        ),
    )
    .with_context(|| format!("writing {}", summary.display()))?;
    files.push(summary);

    if let Some(values) = &diag.off_diagonal_values {
        let path = output.join(format!("offdiag_step{step:03}_chi{chi}_{observable}.csv"));
        let mut out = String::from("pauli_index,value\n");
        for (idx, v) in values {
            out.push_str(&format!("{},{}\n", idx.value(), v));
        }
        std::fs::write(&path, out).with_context(|| format!("writing {}", path.display()))?;
        files.push(path);
    }

    Ok(DiagnoseOutcome {
        files,
        diagonal: diag.diagonal,
        max_off_diagonal: diag.max_off_diagonal,
        dominance_ratio: diag.dominance_ratio,
    })
}
