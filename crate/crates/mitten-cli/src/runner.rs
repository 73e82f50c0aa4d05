//! End-to-end benchmark execution: circuit build, noise calibration,
//! middle-out contraction with per-step checkpoints, ideal and noisy
//! evolution, per-step estimates, overhead records, CSV and manifest output.

use crate::config::{Estimator, ExperimentConfig};
use crate::report::{
    fit_log_exponent, write_manifest, write_overhead_fit_csv, write_results_csv, OverheadFit,
    ResultRow, RunManifest,
};
use anyhow::{Context, Result};
use mitten_core::circuit::{layer_unitary_dense, NoiseAssignment, TrotterCircuit};
use mitten_core::mitigation::{apc_expectation, dense_channel_oracle, MiddleOutState};
use mitten_core::pauli::{ptm_vector, PauliString};
use mitten_core::sim::{expectation, pec_theoretical_gamma, sample_shots, Evolver, StateMps};
use mitten_core::tensor::{Mpo, Mps, RsvdOptions};
use ndarray::Array2;
use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

pub struct RunOutcome {
    pub result_files: Vec<PathBuf>,
    pub manifest_file: PathBuf,
}

/// Deterministic seed derivation: every stochastic draw is keyed by the
/// config seed plus a structural tag, never by a shared mutable stream.
fn derive_seed(base: u64, tags: &[u64]) -> u64 {
    let mut h = base ^ 0x9E37_79B9_7F4A_7C15;
    for &t in tags {
        h ^= t.wrapping_add(0x9E37_79B9_7F4A_7C15).wrapping_add(h << 6).wrapping_add(h >> 2);
        h = h.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    }
    h
}

#[derive(Debug, Serialize, Deserialize)]
struct CheckpointSidecar {
    trotter_step: usize,
    layers_done: usize,
    chi_max: usize,
    tol: f64,
    oversampling: usize,
    power_iters: usize,
    seed_counter: u64,
    /// Accumulated discarded weight at the end of each completed step.
    per_step_discarded: Vec<f64>,
    bond_dims: Vec<usize>,
}

struct ChiRun {
    chi: usize,
    /// `[step][observable]` scalars; index 0 is the pre-circuit row.
    coefs: Vec<Vec<f64>>,
    apcs: Vec<Vec<f64>>,
    per_step_discarded: Vec<f64>,
    final_bonds: Vec<usize>,
    wall_seconds: f64,
}

fn checkpoint_dir(output: &Path, chi: usize) -> PathBuf {
    output.join("checkpoints").join(format!("chi{chi}"))
}

fn save_checkpoint(
    dir: &Path,
    state: &MiddleOutState<f64>,
    trotter_step: usize,
    per_step_discarded: &[f64],
) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let base = dir.join(format!("step{trotter_step:03}"));
    let mut file = std::fs::File::create(base.with_extension("mpo"))?;
    state.mpo().write_dump(&mut file).context("writing checkpoint tensor dump")?;
    let sidecar = CheckpointSidecar {
        trotter_step,
        layers_done: state.step(),
        chi_max: state.chi_max(),
        tol: state.tol(),
        oversampling: state.rsvd().oversampling,
        power_iters: state.rsvd().power_iters,
        seed_counter: state.seed_counter(),
        per_step_discarded: per_step_discarded.to_vec(),
        bond_dims: state.mpo().bond_dims(),
    };
    std::fs::write(base.with_extension("json"), serde_json::to_string_pretty(&sidecar)?)?;
    Ok(())
}

pub fn load_checkpoint(
    dir: &Path,
    trotter_step: usize,
) -> Result<(MiddleOutState<f64>, Vec<f64>)> {
    let base = dir.join(format!("step{trotter_step:03}"));
    let sidecar: CheckpointSidecar =
        serde_json::from_str(&std::fs::read_to_string(base.with_extension("json"))?)
            .context("parsing checkpoint sidecar")?;
    let mut file = std::fs::File::open(base.with_extension("mpo"))?;
    let mpo = Mpo::<f64>::read_dump(&mut file).context("reading checkpoint tensor dump")?;
    let state = MiddleOutState::from_parts(
        mpo,
        sidecar.layers_done,
        sidecar.chi_max,
        sidecar.tol,
        RsvdOptions { oversampling: sidecar.oversampling, power_iters: sidecar.power_iters },
        sidecar.seed_counter,
        Vec::new(),
    );
    Ok((state, sidecar.per_step_discarded))
}

fn latest_checkpoint_step(dir: &Path, max_step: usize) -> Option<usize> {
    (1..=max_step)
        .rev()
        .find(|s| {
            dir.join(format!("step{s:03}.mpo")).is_file()
                && dir.join(format!("step{s:03}.json")).is_file()
        })
}

/// Evolve one middle-out map and extract the per-step scalars for every
/// observable.
fn run_chi(
    config: &ExperimentConfig,
    circuit: &TrotterCircuit<f64>,
    assignment: &NoiseAssignment<f64>,
    observables: &[(String, PauliString)],
    noisy_states: &[Mps<f64>],
    chi: usize,
    output: &Path,
    resume: bool,
) -> Result<ChiRun> {
    let t0 = Instant::now();
    let steps = config.steps;
    let rsvd = RsvdOptions {
        oversampling: config.rsvd.oversampling,
        power_iters: config.rsvd.power_iters,
    };
    let ckpt_dir = checkpoint_dir(output, chi);

    let mut per_step_discarded = vec![0.0];
    let mut state = MiddleOutState::<f64>::init(config.n, chi, config.tol).with_rsvd(rsvd);
    let mut start_step = 0;
    if resume {
        if let Some(found) = latest_checkpoint_step(&ckpt_dir, steps) {
            let (loaded, discarded) = load_checkpoint(&ckpt_dir, found)?;
            state = loaded.with_rsvd(rsvd);
            per_step_discarded = discarded;
            start_step = found;
        }
    }
    let discarded_base: f64 = *per_step_discarded.last().unwrap_or(&0.0);

    let mut coefs = vec![vec![1.0; observables.len()]];
    let mut apcs = vec![Vec::with_capacity(observables.len())];
    for (_, p) in observables {
        apcs[0].push(
            Mps::pauli(p)
                .inner(&noisy_states[0])
                .map_err(|e| anyhow::anyhow!("{e}"))?,
        );
    }

    let extract = |state: &MiddleOutState<f64>, step: usize| -> Result<(Vec<f64>, Vec<f64>)> {
        let mut step_coefs = Vec::with_capacity(observables.len());
        let mut step_apcs = Vec::with_capacity(observables.len());
        for (_, p) in observables {
            let coef = state.dca_coefficient(p).map_err(|e| anyhow::anyhow!("{e}"))?;
            let col = state.surrogate_column(p).map_err(|e| anyhow::anyhow!("{e}"))?;
            let apc =
                apc_expectation(&col, &noisy_states[step]).map_err(|e| anyhow::anyhow!("{e}"))?;
            step_coefs.push(coef);
            step_apcs.push(apc);
        }
        Ok((step_coefs, step_apcs))
    };

    // replay the already-checkpointed steps' scalars from their checkpoints
    for step in 1..=start_step {
        let (loaded, _) = load_checkpoint(&ckpt_dir, step)?;
        let (c, a) = extract(&loaded, step)?;
        coefs.push(c);
        apcs.push(a);
    }

    for step in (start_step + 1)..=steps {
        state = state
            .advance_trotter_step(circuit, assignment, step)
            .map_err(|e| anyhow::anyhow!("middle-out step {step}: {e}"))?;
        per_step_discarded.push(discarded_base + state.total_discarded());
        let (c, a) = extract(&state, step)?;
        coefs.push(c);
        apcs.push(a);
        if config.checkpoints {
            save_checkpoint(&ckpt_dir, &state, step, &per_step_discarded)?;
        }
    }

    Ok(ChiRun {
        chi,
        coefs,
        apcs,
        per_step_discarded,
        final_bonds: state.mpo().bond_dims(),
        wall_seconds: t0.elapsed().as_secs_f64(),
    })
}

/// Dense exact-oracle estimates (n <= 4): per step, per observable, the
/// expectation of the exact surrogate on the dense noisy state.
fn exact_oracle_values(
    config: &ExperimentConfig,
    circuit: &TrotterCircuit<f64>,
    assignment: &NoiseAssignment<f64>,
    observables: &[(String, PauliString)],
) -> Result<Vec<Vec<f64>>> {
    let n = config.n;
    let dim = 1usize << n;
    let scale = ((1u64 << n) as f64).sqrt();
    let mut rho: Array2<Complex<f64>> = Array2::zeros((dim, dim));
    rho[[0, 0]] = Complex::new(1.0, 0.0);
    let mut values = Vec::with_capacity(config.steps + 1);
    values.push(observables
        .iter()
        .map(|(_, p)| mitten_core::pauli::trace_with_pauli(&rho, p).re)
        .collect::<Vec<f64>>());
    for step in 1..=config.steps {
        for layer in circuit.step_layers(step).map_err(|e| anyhow::anyhow!("{e}"))? {
            let u = layer_unitary_dense(layer, n).map_err(|e| anyhow::anyhow!("{e}"))?;
            let udag = u.t().mapv(|z| z.conj());
            rho = u.dot(&rho).dot(&udag);
        }
        let oracle = dense_channel_oracle(circuit, assignment, step)
            .map_err(|e| anyhow::anyhow!("{e}"))?;
        let ideal_vec = ptm_vector(&rho).map_err(|e| anyhow::anyhow!("{e}"))?;
        let noisy_vec = oracle.ptm().apply(&ideal_vec);
        let mut step_values = Vec::with_capacity(observables.len());
        for (_, p) in observables {
            let (y, _) = oracle.exact_surrogate(p).map_err(|e| anyhow::anyhow!("{e}"))?;
            step_values.push(scale * y.dot(&noisy_vec.data));
        }
        values.push(step_values);
    }
    Ok(values)
}

/// Empirical overhead over independent seeded shot batches: the ratio of the
/// sample standard deviation of the rescaled estimates to the unmitigated
/// ones.
fn empirical_gamma_from_shots(
    coef: f64,
    noisy_value: f64,
    shots: u64,
    base_seed: u64,
    batches: u64,
) -> Result<f64> {
    let sd = |values: &[f64]| -> f64 {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
    };
    let mut mitigated = Vec::with_capacity(batches as usize);
    let mut unmitigated = Vec::with_capacity(batches as usize);
    for b in 0..batches {
        let m = sample_shots(noisy_value, shots, derive_seed(base_seed, &[1, b]))
            .map_err(|e| anyhow::anyhow!("{e}"))?;
        let u = sample_shots(noisy_value, shots, derive_seed(base_seed, &[2, b]))
            .map_err(|e| anyhow::anyhow!("{e}"))?;
        mitigated.push(coef * m.mean);
        unmitigated.push(u.mean);
    }
    let denom = sd(&unmitigated);
    if denom == 0.0 {
        return Ok(coef.abs());
    }
    Ok(sd(&mitigated) / denom)
}

pub fn run(config: &ExperimentConfig, output: &Path, resume: bool) -> Result<RunOutcome> {
    std::fs::create_dir_all(output)
        .with_context(|| format!("creating output directory {}", output.display()))?;
    let mut phases: BTreeMap<String, f64> = BTreeMap::new();
    let t_total = Instant::now();

    let circuit = TrotterCircuit::<f64>::ising(config.n, config.steps.max(1), config.h, config.j, config.dt)
        .map_err(|e| anyhow::anyhow!("building circuit: {e}"))?;
    let (even, odd) = config.noise_models()?;
    let mut noise_rates = BTreeMap::new();
    for model in [&even, &odd] {
        noise_rates.insert(
            model.label().to_string(),
            model
                .generators()
                .iter()
                .map(|g| (g.pauli.to_string(), g.rate))
                .collect::<Vec<_>>(),
        );
    }
    let assignment = NoiseAssignment::ising(&circuit, even, odd);
    let observables: Vec<(String, PauliString)> = config
        .observable
        .names()
        .iter()
        .map(|name| Ok((name.clone(), config.parse_observable(name)?)))
        .collect::<Result<_>>()?;
    let estimators = config.estimators()?;

    // ideal and noisy state evolution with per-step snapshots
    let t_phase = Instant::now();
    let rsvd = RsvdOptions {
        oversampling: config.rsvd.oversampling,
        power_iters: config.rsvd.power_iters,
    };
    let evolve_states = |with_noise: bool, chi: usize| -> Result<Vec<Mps<f64>>> {
        let mut evolver =
            Evolver::<f64>::new(config.n, chi, config.state.tol, with_noise).with_rsvd(rsvd);
        let mut snapshots = vec![evolver.state().clone()];
        for step in 1..=config.steps {
            evolver
                .advance_step(&circuit, &assignment)
                .map_err(|e| anyhow::anyhow!("state evolution step {step}: {e}"))?;
            snapshots.push(evolver.state().clone());
        }
        Ok(snapshots)
    };
    let (ideal_states, noisy_states) = rayon::join(
        || evolve_states(false, config.state.chi_ideal),
        || evolve_states(true, config.state.chi_noisy),
    );
    let (ideal_states, noisy_states) = (ideal_states?, noisy_states?);
    phases.insert("state_evolution".into(), t_phase.elapsed().as_secs_f64());

    let state_value = |states: &[Mps<f64>], step: usize, p: &PauliString, chi: usize| -> f64 {
        expectation(
            &StateMps { mps: states[step].clone(), ideal: false, chi_max: chi, tol: config.state.tol },
            p,
        )
        .expect("matching lengths")
    };
    let ideal_values: Vec<Vec<f64>> = (0..=config.steps)
        .map(|s| {
            observables
                .iter()
                .map(|(_, p)| state_value(&ideal_states, s, p, config.state.chi_ideal))
                .collect()
        })
        .collect();
    let noisy_values: Vec<Vec<f64>> = (0..=config.steps)
        .map(|s| {
            observables
                .iter()
                .map(|(_, p)| state_value(&noisy_states, s, p, config.state.chi_noisy))
                .collect()
        })
        .collect();

    // middle-out contraction per requested bond cap
    let t_phase = Instant::now();
    let chi_runs: Vec<ChiRun> = config
        .chi_max
        .par_iter()
        .map(|&chi| {
            run_chi(config, &circuit, &assignment, &observables, &noisy_states, chi, output, resume)
        })
        .collect::<Result<_>>()?;
    phases.insert("middle_out".into(), t_phase.elapsed().as_secs_f64());

    let t_phase = Instant::now();
    let exact_values = if estimators.contains(&Estimator::ExactOracle) {
        Some(exact_oracle_values(config, &circuit, &assignment, &observables)?)
    } else {
        None
    };
    phases.insert("exact_oracle".into(), t_phase.elapsed().as_secs_f64());

    // per-step theoretical PEC curve
    let pec: Vec<f64> = (0..=config.steps)
        .map(|s| {
            let gammas = assignment
                .noisy_gammas_upto(&circuit, s)
                .expect("step within circuit");
            pec_theoretical_gamma(&gammas)
        })
        .collect();

    // assemble rows and files
    let t_phase = Instant::now();
    let mut result_files = Vec::new();
    let mut fits = Vec::new();
    for (obs_idx, (name, _)) in observables.iter().enumerate() {
        let mut rows = Vec::new();
        for step in 0..=config.steps {
            for chi_run in &chi_runs {
                let ideal = ideal_values[step][obs_idx];
                let noisy = noisy_values[step][obs_idx];
                for est in &estimators {
                    let coef = chi_run.coefs[step][obs_idx];
                    let (mitigated, gamma_analytic) = match est {
                        Estimator::Dca => (coef * noisy, Some(coef)),
                        Estimator::Apc => (chi_run.apcs[step][obs_idx], None),
                        Estimator::Noisy => (noisy, Some(1.0)),
                        Estimator::ExactOracle => (
                            exact_values.as_ref().expect("exact oracle enabled")[step][obs_idx],
                            None,
                        ),
                    };
                    let gamma_empirical = match est {
                        Estimator::Dca if step > 0 => Some(empirical_gamma_from_shots(
                            coef,
                            noisy,
                            config.shots,
                            derive_seed(
                                config.seeds.sampling,
                                &[obs_idx as u64, step as u64, chi_run.chi as u64],
                            ),
                            30,
                        )?),
                        _ => None,
                    };
                    rows.push(ResultRow {
                        step,
                        chi_max: chi_run.chi,
                        estimator: est.as_str(),
                        ideal,
                        noisy,
                        mitigated,
                        abs_error: (mitigated - ideal).abs(),
                        gamma_analytic,
                        gamma_empirical,
                        pec_gamma_theory: pec[step],
                        shots: config.shots,
                        seed: config.seeds.sampling,
                    });
                }
            }
        }
        result_files.push(write_results_csv(output, name, &rows)?);

        for chi_run in &chi_runs {
            let gammas: Vec<f64> = (1..=config.steps).map(|s| chi_run.coefs[s][obs_idx]).collect();
            let pecs: Vec<f64> = (1..=config.steps).map(|s| pec[s]).collect();
            if let Some((alpha, beta)) = fit_log_exponent(&gammas, &pecs) {
                fits.push(OverheadFit {
                    observable: name.clone(),
                    chi_max: chi_run.chi,
                    estimator: "dca",
                    alpha,
                    beta,
                });
            }
        }
    }
    result_files.push(write_overhead_fit_csv(output, &fits)?);
    phases.insert("reporting".into(), t_phase.elapsed().as_secs_f64());
    phases.insert("total".into(), t_total.elapsed().as_secs_f64());

    let manifest = RunManifest {
        engine_version: env!("CARGO_PKG_VERSION").to_string(),
        config: config.clone(),
        noise_rates,
        discarded_weights: chi_runs
            .iter()
            .map(|r| (r.chi.to_string(), r.per_step_discarded.clone()))
            .collect(),
        final_bonds: chi_runs
            .iter()
            .map(|r| (r.chi.to_string(), r.final_bonds.clone()))
            .collect(),
        wall_seconds: {
            let mut w = phases;
            for r in &chi_runs {
                w.insert(format!("middle_out_chi{}", r.chi), r.wall_seconds);
            }
            w
        },
        result_files: result_files
            .iter()
            .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
            .collect(),
    };
    let manifest_file = write_manifest(output, &manifest)?;

    Ok(RunOutcome { result_files, manifest_file })
}
