//! Rough timing of the 10-qubit middle-out contraction per Trotter step.
//!
//! Run: cargo run --release -p mitten-core --example bench_middleout -- [chi] [steps]

use mitten_core::circuit::{NoiseAssignment, TrotterCircuit};
use mitten_core::mitigation::MiddleOutState;
use mitten_core::noise::{calibrate_rates, sparse_nn_template, NoiseLayer};
use std::time::Instant;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let chi: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(200);
    let steps: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(3);
    let n = 10;
    let circuit = TrotterCircuit::<f64>::ising(n, steps, 1.0, 0.5236, 0.5).unwrap();
    let template = sparse_nn_template(n);
    let even = calibrate_rates(n, "even", &template, 1.140, 11).unwrap();
    let odd = calibrate_rates(n, "odd", &template, 1.137, 12).unwrap();
    let assignment = NoiseAssignment::ising(&circuit, even, odd);
    let trivial = NoiseLayer::noiseless(n, "id");

    let mut state = MiddleOutState::<f64>::init(n, chi, 1e-12);
    let mut layer_idx = 0;
    let t0 = Instant::now();
    for step in 1..=steps {
        let t_step = Instant::now();
        for layer in circuit.step_layers(step).unwrap() {
            let noise = assignment.noise_for(layer_idx).cloned().unwrap_or_else(|| trivial.clone());
            state = state.step_layer(layer, &noise).unwrap();
            layer_idx += 1;
        }
        let coef = state.dca_coefficient(&"ZZZZZZZZZZ".parse().unwrap()).unwrap();
        eprintln!(
            "step {step}: {:.2}s (total {:.2}s), max bond {}, dca coef {:.6}, discarded {:.3e}",
            t_step.elapsed().as_secs_f64(),
            t0.elapsed().as_secs_f64(),
            state.mpo().max_bond(),
            coef,
            state.total_discarded(),
        );
    }
}
