//! End-to-end probe of the 10-qubit benchmark: per-step ideal/noisy/DCA/APC
//! values, overheads, and diagnostics.
//!
//! Run: cargo run --release -p mitten-core --example bench_pipeline -- [chi] [steps] [power_iters]

use mitten_core::circuit::{NoiseAssignment, TrotterCircuit};
use mitten_core::mitigation::{apc_expectation, MiddleOutState};
use mitten_core::noise::{calibrate_rates, sparse_nn_template, NoiseLayer};
use mitten_core::sim::{expectation, Evolver};
use mitten_core::tensor::RsvdOptions;
use std::time::Instant;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let chi: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(200);
    let steps: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(6);
    let power_iters: usize = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(1);
    let n = 10;
    let rsvd = RsvdOptions { oversampling: 10, power_iters };
    let circuit = TrotterCircuit::<f64>::ising(n, steps, 1.0, 0.5236, 0.5).unwrap();
    let template = sparse_nn_template(n);
    let even = calibrate_rates(n, "even", &template, 1.140, 11).unwrap();
    let odd = calibrate_rates(n, "odd", &template, 1.137, 12).unwrap();
    let assignment = NoiseAssignment::ising(&circuit, even, odd);
    let trivial = NoiseLayer::noiseless(n, "id");
    let target: mitten_core::pauli::PauliString = "ZZZZZZZZZZ".parse().unwrap();

    let mut mo = MiddleOutState::<f64>::init(n, chi, 1e-12).with_rsvd(rsvd);
    let mut ideal = Evolver::<f64>::new(n, 512, 1e-14, false).with_rsvd(rsvd);
    let mut noisy = Evolver::<f64>::new(n, 256, 1e-14, true).with_rsvd(rsvd);

    let mut layer_idx = 0;
    let t0 = Instant::now();
    println!("step,t_sec,ideal,noisy,dca_coef,dca,apc,err_noisy,err_dca,err_apc,gamma_pec,ratio,maxbond");
    for step in 1..=steps {
        for layer in circuit.step_layers(step).unwrap() {
            let noise = assignment.noise_for(layer_idx).cloned().unwrap_or_else(|| trivial.clone());
            mo = mo.step_layer(layer, &noise).unwrap();
            layer_idx += 1;
        }
        ideal.advance_step(&circuit, &assignment).unwrap();
        noisy.advance_step(&circuit, &assignment).unwrap();
        let ideal_s = ideal.state().clone();
        let noisy_s = noisy.state().clone();
        let iv = expectation(
            &mitten_core::sim::StateMps { mps: ideal_s, ideal: true, chi_max: 512, tol: 1e-14 },
            &target,
        )
        .unwrap();
        let nv = expectation(
            &mitten_core::sim::StateMps { mps: noisy_s.clone(), ideal: false, chi_max: 256, tol: 1e-14 },
            &target,
        )
        .unwrap();
        let coef = mo.dca_coefficient(&target).unwrap();
        let dca = coef * nv;
        let col = mo.surrogate_column(&target).unwrap();
        let apc = apc_expectation(&col, &noisy_s).unwrap();
        let diag = mo.column_diagnostics(&target).unwrap();
        let gammas = assignment.noisy_gammas_upto(&circuit, step).unwrap();
        let pec = mitten_core::sim::pec_theoretical_gamma(&gammas);
        println!(
            "{step},{:.1},{iv:.6},{nv:.6},{coef:.6},{dca:.6},{apc:.6},{:.6},{:.6},{:.6},{pec:.4},{:.2},{}",
            t0.elapsed().as_secs_f64(),
            (nv - iv).abs(),
            (dca - iv).abs(),
            (apc - iv).abs(),
            diag.dominance_ratio.map(|r| r).unwrap_or(f64::INFINITY),
            mo.mpo().max_bond(),
        );
    }
}
