//! Noisy and ideal state evolution in PTM-MPS form, Pauli expectation
//! values, shot-level measurement simulation, and measurement overhead.
//!
//! States evolve as PTM vectors rather than state-vectors so ideal and noisy
//! evolution share one code path and the all-Pauli-components estimator is a
//! single tensor contraction.

use crate::circuit::{CircuitError, Layer, NoiseAssignment, TrotterCircuit};
use crate::noise::NoiseError;
use crate::pauli::{ptm_matrix_of_unitary, PauliError, PauliString};
use crate::scalar::Scalar;
use crate::tensor::{zip_apply, CompressOptions, Mps, RsvdOptions, TensorError};
use ndarray::Array3;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::Distribution;

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("expectation value {0} is outside [-1, 1]")]
    ValueOutOfRange(f64),
    #[error("shot count must be at least 1")]
    NoShots,
    #[error("noisy standard deviation must be positive")]
    ZeroNoisyStd,
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Noise(#[from] NoiseError),
    #[error(transparent)]
    Pauli(#[from] PauliError),
}

/// A PTM-vector state with its evolution settings.
#[derive(Debug, Clone)]
pub struct StateMps<T> {
    pub mps: Mps<T>,
    pub ideal: bool,
    pub chi_max: usize,
    pub tol: f64,
}

impl<T: Scalar> StateMps<T> {
    /// Trace of the represented operator (1 for a well-formed state).
    pub fn trace(&self) -> T {
        let id = Mps::identity_operator(self.mps.n());
        self.mps.inner(&id).expect("same length")
    }
}

/// Incremental layer-by-layer evolution of a PTM state.
pub struct Evolver<T> {
    state: Mps<T>,
    with_noise: bool,
    chi_max: usize,
    tol: f64,
    rsvd: RsvdOptions,
    layers_done: usize,
    steps_done: usize,
}

impl<T: Scalar> Evolver<T> {
    pub fn new(n: usize, chi_max: usize, tol: f64, with_noise: bool) -> Self {
        Self {
            state: Mps::zero_state(n),
            with_noise,
            chi_max,
            tol,
            rsvd: RsvdOptions::default(),
            layers_done: 0,
            steps_done: 0,
        }
    }

    pub fn with_rsvd(mut self, rsvd: RsvdOptions) -> Self {
        self.rsvd = rsvd;
        self
    }

    pub fn state(&self) -> &Mps<T> {
        &self.state
    }

    pub fn steps_done(&self) -> usize {
        self.steps_done
    }

    fn opts(&self) -> CompressOptions {
        let seed = 0x51A7E_u64 ^ ((self.layers_done as u64) << 16);
        CompressOptions::new(self.chi_max, self.tol).with_rsvd(self.rsvd).with_seed(seed)
    }

    /// Apply one circuit layer and, when enabled and present, its noise.
    pub fn advance_layer(
        &mut self,
        layer: &Layer<T>,
        noise: Option<&crate::noise::NoiseLayer<T>>,
    ) -> Result<(), SimError> {
        let n = self.state.n();
        if layer.is_single_qubit() {
            self.state = apply_single_qubit_layer(&self.state, layer)?;
        } else {
            let mpo = layer.to_mpo(n)?;
            let (next, _) = zip_apply(&mpo, &self.state, &self.opts())?;
            self.state = next;
        }
        if self.with_noise {
            if let Some(model) = noise.filter(|m| !m.is_trivial()) {
                let mpo = model.to_mpo(false)?;
                let (next, _) = zip_apply(&mpo, &self.state, &self.opts())?;
                self.state = next;
            }
        }
        self.layers_done += 1;
        Ok(())
    }

    /// Advance one full Trotter step. Uses the evolver's layer cursor to look
    /// up the per-layer noise, so steps and manual layer advances must not be
    /// interleaved out of circuit order.
    pub fn advance_step(
        &mut self,
        circuit: &TrotterCircuit<T>,
        assignment: &NoiseAssignment<T>,
    ) -> Result<(), SimError> {
        let step = self.steps_done + 1;
        let layers = circuit.step_layers(step)?;
        let start = self.layers_done;
        for (offset, layer) in layers.iter().enumerate() {
            let noise = assignment.noise_for(start + offset);
            self.advance_layer(layer, noise)?;
        }
        self.steps_done = step;
        Ok(())
    }

    pub fn into_state(self) -> StateMps<T> {
        StateMps { mps: self.state, ideal: !self.with_noise, chi_max: self.chi_max, tol: self.tol }
    }
}

/// Single-qubit layers act locally on the physical leg: no bond growth, no
/// truncation, canonical form preserved (rotation PTMs are orthogonal).
fn apply_single_qubit_layer<T: Scalar>(
    state: &Mps<T>,
    layer: &Layer<T>,
) -> Result<Mps<T>, SimError> {
    let n = state.n();
    let mut locals: Vec<Option<ndarray::Array2<T>>> = vec![None; n];
    for g in layer.gates() {
        let q = g.qubits()[0];
        if q >= n {
            return Err(SimError::Circuit(CircuitError::OutOfRange {
                gate: format!("{g:?}"),
                n,
            }));
        }
        let ptm = ptm_matrix_of_unitary(&g.dense_unitary())?;
        locals[q] = Some(ptm.data);
    }
    let cores = state
        .cores()
        .iter()
        .zip(locals)
        .map(|(core, local)| match local {
            None => core.clone(),
            Some(r) => {
                let (l, _, rr) = core.dim();
                // new[l, p', r] = Σ_p R[p', p] core[l, p, r]
                let permuted = core
                    .to_owned()
                    .permuted_axes([1, 0, 2])
                    .as_standard_layout()
                    .to_owned()
                    .into_shape_with_order((4, l * rr))
                    .expect("contiguous");
                let out = r.dot(&permuted);
                out.into_shape_with_order((4, l, rr))
                    .expect("contiguous")
                    .permuted_axes([1, 0, 2])
                    .as_standard_layout()
                    .to_owned()
            }
        })
        .collect::<Vec<Array3<T>>>();
    Ok(Mps::from_cores(cores)?)
}

/// Evolve `|0…0⟩` through `upto_step` Trotter steps.
pub fn evolve<T: Scalar>(
    circuit: &TrotterCircuit<T>,
    assignment: &NoiseAssignment<T>,
    chi_max: usize,
    tol: f64,
    upto_step: usize,
    with_noise: bool,
) -> Result<StateMps<T>, SimError> {
    if upto_step > circuit.steps() {
        return Err(SimError::Circuit(CircuitError::StepOutOfRange(upto_step, circuit.steps())));
    }
    let mut evolver = Evolver::new(circuit.n(), chi_max, tol, with_noise);
    for _ in 0..upto_step {
        evolver.advance_step(circuit, assignment)?;
    }
    Ok(evolver.into_state())
}

/// `Tr[ρ P]`, clamped to `[-1, 1]` for downstream sampling.
pub fn expectation<T: Scalar>(state: &StateMps<T>, p: &PauliString) -> Result<T, SimError> {
    let pm = Mps::pauli(p);
    let raw = state.mps.inner(&pm)?;
    Ok(raw.min(T::one()).max(-T::one()))
}

/// Outcome of a finite-shot measurement of a single Pauli expectation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShotResult<T> {
    pub mean: T,
    pub std_error: T,
    pub shots: u64,
    pub seed: u64,
}

impl<T: Scalar> ShotResult<T> {
    /// Deterministic rescaling by a constant: the mean scales by `c` and the
    /// standard error by `|c|` (linearity of the standard deviation).
    pub fn scaled(&self, c: T) -> ShotResult<T> {
        ShotResult { mean: c * self.mean, std_error: c.abs() * self.std_error, ..*self }
    }
}

/// Draw `shots` ±1 outcomes with `P(+1) = (1 + value)/2` from a seeded
/// generator; sampled through the binomial sufficient statistic, which is
/// distribution-identical to per-shot draws.
pub fn sample_shots<T: Scalar>(value: T, shots: u64, seed: u64) -> Result<ShotResult<T>, SimError> {
    if shots == 0 {
        return Err(SimError::NoShots);
    }
    let v = value.as_f64();
    if !(-1.0 - 1e-12..=1.0 + 1e-12).contains(&v) {
        return Err(SimError::ValueOutOfRange(v));
    }
    let p = ((1.0 + v) / 2.0).clamp(0.0, 1.0);
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let k = rand_distr::Binomial::new(shots, p)
        .expect("valid probability")
        .sample(&mut rng);
    let mean = (2.0 * k as f64 - shots as f64) / shots as f64;
    let sample_var = if shots > 1 {
        (shots as f64) * (1.0 - mean * mean) / (shots as f64 - 1.0)
    } else {
        0.0
    };
    let std_error = (sample_var / shots as f64).sqrt();
    Ok(ShotResult { mean: T::of_f64(mean), std_error: T::of_f64(std_error), shots, seed })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimatorKind {
    Dca,
    Apc,
    Noisy,
    ExactOracle,
}

impl EstimatorKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            EstimatorKind::Dca => "dca",
            EstimatorKind::Apc => "apc",
            EstimatorKind::Noisy => "noisy",
            EstimatorKind::ExactOracle => "exact-oracle",
        }
    }
}

/// Measurement-overhead record: γ = mitigated std / unmitigated std.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OverheadRecord<T> {
    pub gamma_empirical: T,
    pub gamma_analytic: Option<T>,
    pub method: EstimatorKind,
}

/// Ratio of mitigated to unmitigated standard deviations.
pub fn empirical_overhead<T: Scalar>(
    mitigated_std: T,
    noisy_std: T,
    gamma_analytic: Option<T>,
    method: EstimatorKind,
) -> Result<OverheadRecord<T>, SimError> {
    if noisy_std <= T::zero() {
        return Err(SimError::ZeroNoisyStd);
    }
    Ok(OverheadRecord { gamma_empirical: mitigated_std / noisy_std, gamma_analytic, method })
}

impl<T: Scalar> OverheadRecord<T> {
    /// The analytic path of the rescaling estimator: mitigating by a constant
    /// factor scales the standard deviation by exactly `|coef|`, so the
    /// std ratio equals `|coef|` identically.
    pub fn dca_analytic(coef: T) -> Self {
        OverheadRecord {
            gamma_empirical: coef.abs(),
            gamma_analytic: Some(coef.abs()),
            method: EstimatorKind::Dca,
        }
    }
}

/// Theoretical probabilistic-cancellation overhead: the product of the layer
/// overheads of every noisy layer executed so far.
pub fn pec_theoretical_gamma<T: Scalar>(layer_gammas: &[T]) -> T {
    layer_gammas.iter().fold(T::one(), |acc, &g| acc * g)
}
