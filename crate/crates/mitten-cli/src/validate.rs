//! Oracle validation suites: dense-oracle equivalence, channel-inverse
//! identity, unitality, QCRB saturation, and input rejection.

use anyhow::Result;
use mitten_core::circuit::{NoiseAssignment, TrotterCircuit};
use mitten_core::mitigation::{apc_expectation, dense_channel_oracle, MiddleOutState};
use mitten_core::noise::{calibrate_rates, sparse_nn_template, LindbladGenerator, NoiseLayer};
use mitten_core::pauli::{PauliIndex, PauliString};
use mitten_core::qcrb;
use mitten_core::scalar::Scalar;
use mitten_core::sim::evolve;
use mitten_core::tensor::Mps;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha12Rng;
use std::path::Path;

#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: String,
    pub residual: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl CheckResult {
    fn new(name: &str, residual: f64, threshold: f64) -> Self {
        Self { name: name.into(), residual, threshold, pass: residual <= threshold }
    }
}

fn ising_fixture(
    n: usize,
    steps: usize,
) -> Result<(TrotterCircuit<f64>, NoiseAssignment<f64>)> {
    let circuit = TrotterCircuit::<f64>::ising(n, steps, 1.0, 0.5236, 0.5)
        .map_err(|e| anyhow::anyhow!("{e}"))?;
    let template = sparse_nn_template(n);
    let even =
        calibrate_rates(n, "even", &template, 1.140, 11).map_err(|e| anyhow::anyhow!("{e}"))?;
    let odd =
        calibrate_rates(n, "odd", &template, 1.137, 12).map_err(|e| anyhow::anyhow!("{e}"))?;
    let assignment = NoiseAssignment::ising(&circuit, even, odd);
    Ok((circuit, assignment))
}

/// Dense-oracle equivalence at n = 3, two Trotter steps, no compression.
fn check_dense_oracle(results: &mut Vec<CheckResult>) -> Result<()> {
    let n = 3;
    let (circuit, assignment) = ising_fixture(n, 2)?;
    let mut state = MiddleOutState::<f64>::init(n, 4096, 0.0);
    for step in 1..=2 {
        state = state
            .advance_trotter_step(&circuit, &assignment, step)
            .map_err(|e| anyhow::anyhow!("{e}"))?;
    }
    let oracle =
        dense_channel_oracle(&circuit, &assignment, 2).map_err(|e| anyhow::anyhow!("{e}"))?;
    let want = oracle.inverse_adjoint().map_err(|e| anyhow::anyhow!("{e}"))?;
    let got = state.mpo().to_dense().map_err(|e| anyhow::anyhow!("{e}"))?;
    let worst = got
        .data
        .iter()
        .zip(want.data.iter())
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    results.push(CheckResult::new("dense-oracle/map-entrywise", worst, 1e-9));

    let target: PauliString = "ZZZ".parse().unwrap();
    let coef = state.dca_coefficient(&target).map_err(|e| anyhow::anyhow!("{e}"))?;
    let i = target.index_of().value();
    results.push(CheckResult::new(
        "dense-oracle/dca-diagonal",
        (coef - want.data[[i, i]]).abs(),
        1e-9,
    ));

    let noisy = evolve(&circuit, &assignment, 4096, 0.0, 2, true).map_err(|e| anyhow::anyhow!("{e}"))?;
    let ideal = evolve(&circuit, &assignment, 4096, 0.0, 2, false).map_err(|e| anyhow::anyhow!("{e}"))?;
    let col = state.surrogate_column(&target).map_err(|e| anyhow::anyhow!("{e}"))?;
    let mitigated = apc_expectation(&col, &noisy.mps).map_err(|e| anyhow::anyhow!("{e}"))?;
    let want_value =
        mitten_core::sim::expectation(&ideal, &target).map_err(|e| anyhow::anyhow!("{e}"))?;
    results.push(CheckResult::new(
        "dense-oracle/apc-recovers-ideal",
        (mitigated - want_value).abs(),
        1e-8,
    ));
    Ok(())
}

/// Channel-inverse identity: dense at n = 4, sampled on 100 random basis
/// words at n = 10.
fn check_channel_inverse(results: &mut Vec<CheckResult>) -> Result<()> {
    let template4 = sparse_nn_template(4);
    let layer4 = calibrate_rates::<f64>(4, "l4", &template4, 1.140, 21)
        .map_err(|e| anyhow::anyhow!("{e}"))?;
    let composed = layer4
        .to_mpo(false)
        .and_then(|f| Ok(f.compose(&layer4.to_mpo(true)?)?))
        .map_err(|e| anyhow::anyhow!("{e}"))?;
    let dense = composed.to_dense().map_err(|e| anyhow::anyhow!("{e}"))?;
    let mut worst = 0.0f64;
    for i in 0..256 {
        for j in 0..256 {
            let want = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((dense.data[[i, j]] - want).abs());
        }
    }
    results.push(CheckResult::new("channel-inverse/dense-n4", worst, 1e-12));

    let n = 10;
    let template = sparse_nn_template(n);
    let layer = calibrate_rates::<f64>(n, "l10", &template, 1.140, 22)
        .map_err(|e| anyhow::anyhow!("{e}"))?;
    let composed = layer
        .to_mpo(false)
        .and_then(|f| Ok(f.compose(&layer.to_mpo(true)?)?))
        .map_err(|e| anyhow::anyhow!("{e}"))?;
    let mut rng = ChaCha12Rng::seed_from_u64(1234);
    let mut worst = 0.0f64;
    let norm = (1u64 << n) as f64;
    for _ in 0..100 {
        let idx = rng.random_range(0..(1usize << (2 * n)));
        let p = PauliString::pauli_of(PauliIndex(idx), n).map_err(|e| anyhow::anyhow!("{e}"))?;
        let pm = Mps::pauli(&p);
        let diag = composed.sandwich(&pm, &pm).map_err(|e| anyhow::anyhow!("{e}"))? / norm;
        worst = worst.max((diag - 1.0).abs());
    }
    results.push(CheckResult::new("channel-inverse/sampled-n10", worst, 1e-12));
    Ok(())
}

/// Unitality: affine offset exactly zero for Pauli-noise circuits.
fn check_unitality(results: &mut Vec<CheckResult>) -> Result<()> {
    for n in 2..=3usize {
        let (circuit, assignment) = ising_fixture(n, 2)?;
        let oracle = dense_channel_oracle(&circuit, &assignment, 2)
            .map_err(|e| anyhow::anyhow!("{e}"))?;
        let worst = oracle.c_vector().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        results.push(CheckResult::new(&format!("unitality/c-vector-n{n}"), worst, 1e-12));
    }
    // identity operator is a fixed point of the channel MPO at n = 10
    let n = 10;
    let template = sparse_nn_template(n);
    let layer = calibrate_rates::<f64>(n, "l10", &template, 1.140, 23)
        .map_err(|e| anyhow::anyhow!("{e}"))?;
    let mpo = layer.to_mpo(false).map_err(|e| anyhow::anyhow!("{e}"))?;
    let id = Mps::<f64>::identity_operator(n);
    let out = mpo.apply(&id).map_err(|e| anyhow::anyhow!("{e}"))?;
    let overlap = out.inner(&id).map_err(|e| anyhow::anyhow!("{e}"))?;
    let norm = out.norm2();
    let two_n = (1u64 << n) as f64;
    let residual = ((overlap - two_n).abs() / two_n).max((norm - two_n).abs() / two_n);
    results.push(CheckResult::new("unitality/identity-fixed-point-n10", residual, 1e-12));
    Ok(())
}

/// One saturation instance; returns |bound - variance|.
pub fn saturation_residual(n: usize, seed: u64, noisy: bool) -> Result<f64> {
    let rho = qcrb::random_mixed_state::<f64>(n, seed, 0.05);
    let b = qcrb::bloch(&rho).map_err(|e| anyhow::anyhow!("{e}"))?;
    let x = qcrb::random_observable_coeffs::<f64>(n, seed ^ 0x0B5E);
    if !noisy {
        let bound = qcrb::qcrb_noiseless(&x, &b, 4).map_err(|e| anyhow::anyhow!("{e}"))?;
        let op = qcrb::observable_from_coeffs(n, &x, 0.0);
        let var = qcrb::variance_direct(&op, &rho, 4);
        return Ok((bound - var).abs());
    }
    let (a, c) = qcrb::random_pauli_lindblad_affine::<f64>(n, seed ^ 0xC4A)
        .map_err(|e| anyhow::anyhow!("{e}"))?;
    let bound = qcrb::qcrb_noisy(&x, &b, &a, &c, 2).map_err(|e| anyhow::anyhow!("{e}"))?;
    let y = f64::solve(&a.t().to_owned(), &x).ok_or_else(|| anyhow::anyhow!("singular A"))?;
    let y0 = -c.dot(&y);
    let theta_out = qcrb::BlochVector::new(n, a.dot(&b.theta) + &c).map_err(|e| anyhow::anyhow!("{e}"))?;
    let rho_out = theta_out.reconstruct();
    let op = qcrb::observable_from_coeffs(n, &y, y0);
    let var = qcrb::variance_direct(&op, &rho_out, 2);
    Ok((bound - var).abs())
}

/// All seeded saturation instances: 200 noiseless and 100 noisy, split over
/// n in {1, 2}.
pub fn saturation_instances() -> Vec<(String, usize, u64, bool)> {
    let mut out = Vec::new();
    for k in 0..200u64 {
        let n = 1 + (k % 2) as usize;
        out.push((format!("noiseless/n{n}/{k}"), n, 31_000 + k, false));
    }
    for k in 0..100u64 {
        let n = 1 + (k % 2) as usize;
        out.push((format!("noisy/n{n}/{k}"), n, 47_000 + k, true));
    }
    out
}

fn check_qcrb(results: &mut Vec<CheckResult>) -> Result<()> {
    let mut worst_clean = 0.0f64;
    let mut worst_noisy = 0.0f64;
    for (_, n, seed, noisy) in saturation_instances() {
        let r = saturation_residual(n, seed, noisy)?;
        if noisy {
            worst_noisy = worst_noisy.max(r);
        } else {
            worst_clean = worst_clean.max(r);
        }
    }
    results.push(CheckResult::new("qcrb/noiseless-saturation", worst_clean, 1e-9));
    results.push(CheckResult::new("qcrb/noisy-saturation", worst_noisy, 1e-9));
    Ok(())
}

fn check_input_rejection(results: &mut Vec<CheckResult>) -> Result<()> {
    let bad = NoiseLayer::new(
        2,
        "corrupt",
        vec![LindbladGenerator { pauli: "XI".parse().unwrap(), rate: -0.05_f64 }],
    );
    let rejected = bad.is_err();
    results.push(CheckResult {
        name: "input/negative-rates-rejected".into(),
        residual: if rejected { 0.0 } else { 1.0 },
        threshold: 0.5,
        pass: rejected,
    });
    Ok(())
}

/// Run every suite; returns the per-check table and overall pass flag.
pub fn validate() -> Result<(Vec<CheckResult>, bool)> {
    let mut results = Vec::new();
    check_dense_oracle(&mut results)?;
    check_channel_inverse(&mut results)?;
    check_unitality(&mut results)?;
    check_qcrb(&mut results)?;
    check_input_rejection(&mut results)?;
    let all_pass = results.iter().all(|r| r.pass);
    Ok((results, all_pass))
}

pub fn write_report(dir: &Path, results: &[CheckResult]) -> Result<std::path::PathBuf> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join("validate_report.csv");
    let mut out = String::from("check,residual,threshold,pass\n");
    for r in results {
        out.push_str(&format!("{},{:e},{:e},{}\n", r.name, r.residual, r.threshold, r.pass));
    }
    std::fs::write(&path, out)?;
    Ok(path)
}

/// Full per-instance QCRB saturation table.
pub fn qcrb_table(dir: &Path) -> Result<(std::path::PathBuf, bool)> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join("qcrb_saturation.csv");
    let mut out = String::from("instance,n,seed,residual,pass\n");
    let mut all = true;
    for (name, n, seed, noisy) in saturation_instances() {
        let r = saturation_residual(n, seed, noisy)?;
        let pass = r <= 1e-9;
        all &= pass;
        out.push_str(&format!("{name},{n},{seed},{r:e},{pass}\n"));
    }
    std::fs::write(&path, out)?;
    Ok((path, all))
}
