//! Gate/layer model and the Trotterized transverse-field Ising circuit.
//!
//! A layer is a set of gates on pairwise-disjoint qubits executed in
//! parallel; two-qubit gates act on adjacent qubits only (linear topology).
//! Layers convert to PTM MPOs with bond 1 across gate-free cuts and at most 4
//! inside a two-qubit gate.

use crate::noise::NoiseLayer;
use crate::pauli::{ptm_matrix_of_unitary, PauliError};
use crate::scalar::Scalar;
use crate::tensor::{Mpo, TensorError};
use ndarray::{Array2, Array3};
use num_complex::Complex;

#[derive(Debug, Clone, thiserror::Error)]
pub enum CircuitError {
    #[error("circuit needs at least 2 qubits, got {0}")]
    TooFewQubits(usize),
    #[error("gate acts outside the {n}-qubit register: {gate}")]
    OutOfRange { gate: String, n: usize },
    #[error("CNOT qubits {0} and {1} are not adjacent")]
    NotAdjacent(usize, usize),
    #[error("layer gates overlap on qubit {0}")]
    OverlappingSupports(usize),
    #[error("step index {0} exceeds circuit depth {1}")]
    StepOutOfRange(usize, usize),
    #[error(transparent)]
    Pauli(#[from] PauliError),
    #[error(transparent)]
    Tensor(#[from] TensorError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gate<T> {
    Rx { qubit: usize, angle: T },
    Rz { qubit: usize, angle: T },
    Cnot { control: usize, target: usize },
}

impl<T: Scalar> Gate<T> {
    pub fn qubits(&self) -> Vec<usize> {
        match self {
            Gate::Rx { qubit, .. } | Gate::Rz { qubit, .. } => vec![*qubit],
            Gate::Cnot { control, target } => vec![*control, *target],
        }
    }

    pub fn inverse(&self) -> Gate<T> {
        match *self {
            Gate::Rx { qubit, angle } => Gate::Rx { qubit, angle: -angle },
            Gate::Rz { qubit, angle } => Gate::Rz { qubit, angle: -angle },
            cnot @ Gate::Cnot { .. } => cnot,
        }
    }

    /// Dense unitary on the gate's local Hilbert space (2x2 or 4x4, adjacent
    /// pair ordered low-qubit first).
    pub fn dense_unitary(&self) -> Array2<Complex<T>> {
        let zero = Complex::new(T::zero(), T::zero());
        let one = Complex::new(T::one(), T::zero());
        match *self {
            Gate::Rx { angle, .. } => {
                let half = angle * T::of_f64(0.5);
                let c = Complex::new(half.cos(), T::zero());
                let s = Complex::new(T::zero(), -half.sin());
                ndarray::array![[c, s], [s, c]]
            }
            Gate::Rz { angle, .. } => {
                let half = angle * T::of_f64(0.5);
                let em = Complex::from_polar(T::one(), -half);
                let ep = Complex::from_polar(T::one(), half);
                ndarray::array![[em, zero], [zero, ep]]
            }
            Gate::Cnot { control, target } => {
                let mut u = Array2::zeros((4, 4));
                for basis in 0..4usize {
                    // local pair ordered low-qubit-first, low qubit owns the msb
                    let lo = basis >> 1;
                    let hi = basis & 1;
                    let (c, t) = if control < target { (lo, hi) } else { (hi, lo) };
                    let t_out = t ^ c;
                    let (lo_out, hi_out) =
                        if control < target { (c, t_out) } else { (t_out, c) };
                    u[[(lo_out << 1) | hi_out, basis]] = one;
                }
                u
            }
        }
    }
}

/// Gates on pairwise-disjoint qubits; `noisy` marks CNOT layers, the ones a
/// noise channel attaches to.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer<T> {
    gates: Vec<Gate<T>>,
    noisy: bool,
}

impl<T: Scalar> Layer<T> {
    /// The noisy flag is derived: true iff the layer contains a CNOT.
    pub fn new(gates: Vec<Gate<T>>) -> Result<Self, CircuitError> {
        let mut seen = std::collections::BTreeSet::new();
        let mut noisy = false;
        for g in &gates {
            if let Gate::Cnot { control, target } = g {
                if control.abs_diff(*target) != 1 {
                    return Err(CircuitError::NotAdjacent(*control, *target));
                }
                noisy = true;
            }
            for q in g.qubits() {
                if !seen.insert(q) {
                    return Err(CircuitError::OverlappingSupports(q));
                }
            }
        }
        Ok(Self { gates, noisy })
    }

    pub fn gates(&self) -> &[Gate<T>] {
        &self.gates
    }

    pub fn is_noisy(&self) -> bool {
        self.noisy
    }

    /// Only single-qubit rotations: the layer MPO is a bond-1 product.
    pub fn is_single_qubit(&self) -> bool {
        !self.gates.iter().any(|g| matches!(g, Gate::Cnot { .. }))
    }

    /// Inverse gates; the noisy flag is cleared (inverse layers are ideal
    /// bookkeeping, never executed with noise).
    pub fn inverse(&self) -> Layer<T> {
        Layer { gates: self.gates.iter().map(Gate::inverse).collect(), noisy: false }
    }

    /// Smallest qubit touched by a CNOT, if any. Even values mean an
    /// even-link layer of the Ising template.
    pub fn first_cnot_qubit(&self) -> Option<usize> {
        self.gates.iter().find_map(|g| match g {
            Gate::Cnot { control, target } => Some(*control.min(target)),
            _ => None,
        })
    }

    /// PTM MPO of the layer's unitary conjugation on `n` qubits.
    pub fn to_mpo(&self, n: usize) -> Result<Mpo<T>, CircuitError> {
        let mut cores: Vec<Array3<T>> = (0..n)
            .map(|_| {
                let mut c = Array3::zeros((1, 16, 1));
                for p in 0..4 {
                    c[[0, p * 4 + p, 0]] = T::one();
                }
                c
            })
            .collect();
        for g in &self.gates {
            for q in g.qubits() {
                if q >= n {
                    return Err(CircuitError::OutOfRange { gate: format!("{g:?}"), n });
                }
            }
            match g {
                Gate::Rx { qubit, .. } | Gate::Rz { qubit, .. } => {
                    let ptm = ptm_matrix_of_unitary(&g.dense_unitary())?;
                    let mut c = Array3::zeros((1, 16, 1));
                    for p in 0..4 {
                        for s in 0..4 {
                            c[[0, p * 4 + s, 0]] = ptm.data[[p, s]];
                        }
                    }
                    cores[*qubit] = c;
                }
                Gate::Cnot { control, target } => {
                    let low = *control.min(target);
                    let ptm = ptm_matrix_of_unitary(&g.dense_unitary())?;
                    let (left, right) = split_two_site_ptm(&ptm.data);
                    cores[low] = left;
                    cores[low + 1] = right;
                }
            }
        }
        Ok(Mpo::from_flat_cores(cores)?)
    }
}

/// Split a 16x16 two-site PTM into a pair of MPO cores by exact SVD across
/// the site cut; rank at most 4 for a CNOT.
fn split_two_site_ptm<T: Scalar>(ptm: &Array2<T>) -> (Array3<T>, Array3<T>) {
    // rearrange [(p0 p1), (s0 s1)] -> [(p0 s0), (p1 s1)]
    let mut m = Array2::zeros((16, 16));
    for p0 in 0..4 {
        for p1 in 0..4 {
            for s0 in 0..4 {
                for s1 in 0..4 {
                    m[[p0 * 4 + s0, p1 * 4 + s1]] = ptm[[p0 * 4 + p1, s0 * 4 + s1]];
                }
            }
        }
    }
    let (u, s, v) = T::svd_thin(&m).expect("16x16 SVD");
    let floor = s[0].as_f64() * 1e-13;
    let rank = s.iter().take_while(|x| x.as_f64() > floor).count().max(1);
    let mut left = Array3::zeros((1, 16, rank));
    let mut right = Array3::zeros((rank, 16, 1));
    for r in 0..rank {
        let w = s[r].sqrt();
        for p in 0..4 {
            for q in 0..4 {
                left[[0, p * 4 + q, r]] = u[[p * 4 + q, r]] * w;
                right[[r, p * 4 + q, 0]] = v[[p * 4 + q, r]] * w;
            }
        }
    }
    (left, right)
}

/// Dense `2^n` unitary of a layer (oracle bridge, n <= 6).
pub fn layer_unitary_dense<T: Scalar>(
    layer: &Layer<T>,
    n: usize,
) -> Result<Array2<Complex<T>>, CircuitError> {
    let dim = 1usize << n;
    let mut acc = Array2::eye(dim);
    for g in layer.gates() {
        let local = g.dense_unitary();
        let qubits = g.qubits();
        let low = *qubits.iter().min().expect("gate has qubits");
        if *qubits.iter().max().unwrap() >= n {
            return Err(CircuitError::OutOfRange { gate: format!("{g:?}"), n });
        }
        let local_qubits = qubits.len();
        let before = 1usize << low;
        let after = 1usize << (n - low - local_qubits);
        let full = kron_three(before, &local, after);
        acc = full.dot(&acc);
    }
    Ok(acc)
}

fn kron_three<T: Scalar>(
    before: usize,
    local: &Array2<Complex<T>>,
    after: usize,
) -> Array2<Complex<T>> {
    let l = local.nrows();
    let dim = before * l * after;
    let mut out = Array2::zeros((dim, dim));
    for b in 0..before {
        for i in 0..l {
            for j in 0..l {
                let v = local[[i, j]];
                if v == Complex::new(T::zero(), T::zero()) {
                    continue;
                }
                for a in 0..after {
                    out[[(b * l + i) * after + a, (b * l + j) * after + a]] = v;
                }
            }
        }
    }
    out
}

/// Flat layer list of a Trotterized circuit with step boundaries.
#[derive(Debug, Clone)]
pub struct TrotterCircuit<T> {
    n: usize,
    layers: Vec<Layer<T>>,
    /// `step_ends[k]` is the index one past the last layer of step `k + 1`.
    step_ends: Vec<usize>,
    pub h: T,
    pub j: T,
    pub dt: T,
}

impl<T: Scalar> TrotterCircuit<T> {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn steps(&self) -> usize {
        self.step_ends.len()
    }

    pub fn layers(&self) -> &[Layer<T>] {
        &self.layers
    }

    /// Layers of Trotter step `step` (1-based).
    pub fn step_layers(&self, step: usize) -> Result<&[Layer<T>], CircuitError> {
        if step == 0 || step > self.steps() {
            return Err(CircuitError::StepOutOfRange(step, self.steps()));
        }
        let start = self.step_offset(step)?;
        Ok(&self.layers[start..self.step_ends[step - 1]])
    }

    /// Index of the first layer of Trotter step `step` (1-based).
    pub fn step_offset(&self, step: usize) -> Result<usize, CircuitError> {
        if step == 0 || step > self.steps() {
            return Err(CircuitError::StepOutOfRange(step, self.steps()));
        }
        Ok(if step == 1 { 0 } else { self.step_ends[step - 2] })
    }

    /// One-dimensional transverse-field Ising evolution: `steps` repetitions
    /// of the single-step template.
    pub fn ising(n: usize, steps: usize, h: T, j: T, dt: T) -> Result<Self, CircuitError> {
        let template = build_ising_step(n, h, j, dt)?;
        let per_step = template.len();
        let mut layers = Vec::with_capacity(per_step * steps);
        let mut step_ends = Vec::with_capacity(steps);
        for s in 0..steps {
            layers.extend(template.iter().cloned());
            step_ends.push(per_step * (s + 1));
        }
        Ok(Self { n, layers, step_ends, h, j, dt })
    }
}

/// A single Trotter step: an RX rotation layer, then CNOT/RZ/CNOT on even
/// links, then CNOT/RZ/CNOT on odd links. RZ acts on the CNOT target of each
/// link. At n = 2 there are no odd links, so the step has 4 layers instead
/// of 7.
pub fn build_ising_step<T: Scalar>(
    n: usize,
    h: T,
    j: T,
    dt: T,
) -> Result<Vec<Layer<T>>, CircuitError> {
    if n < 2 {
        return Err(CircuitError::TooFewQubits(n));
    }
    let two = T::of_f64(2.0);
    let rx_angle = two * h * dt;
    let rz_angle = -(two * j * dt);
    let mut layers = Vec::with_capacity(7);
    layers.push(Layer::new(
        (0..n).map(|q| Gate::Rx { qubit: q, angle: rx_angle }).collect(),
    )?);
    for parity in [0usize, 1usize] {
        let links: Vec<(usize, usize)> =
            (parity..n.saturating_sub(1)).step_by(2).map(|q| (q, q + 1)).collect();
        if links.is_empty() {
            continue;
        }
        let cnots =
            || links.iter().map(|&(c, t)| Gate::Cnot { control: c, target: t }).collect::<Vec<_>>();
        layers.push(Layer::new(cnots())?);
        layers.push(Layer::new(
            links.iter().map(|&(_, t)| Gate::Rz { qubit: t, angle: rz_angle }).collect(),
        )?);
        layers.push(Layer::new(cnots())?);
    }
    Ok(layers)
}

/// Which noise model each circuit layer carries.
#[derive(Debug, Clone)]
pub struct NoiseAssignment<T> {
    models: Vec<NoiseLayer<T>>,
    per_layer: Vec<Option<usize>>,
}

impl<T: Scalar> NoiseAssignment<T> {
    pub fn noiseless(circuit: &TrotterCircuit<T>) -> Self {
        Self { models: Vec::new(), per_layer: vec![None; circuit.layers().len()] }
    }

    /// The Ising default: one model for even-link CNOT layers, another for
    /// odd-link CNOT layers, single-qubit layers noiseless.
    pub fn ising(
        circuit: &TrotterCircuit<T>,
        even: NoiseLayer<T>,
        odd: NoiseLayer<T>,
    ) -> Self {
        let per_layer = circuit
            .layers()
            .iter()
            .map(|layer| {
                layer.first_cnot_qubit().map(|q| if q % 2 == 0 { 0 } else { 1 })
            })
            .collect();
        Self { models: vec![even, odd], per_layer }
    }

    pub fn models(&self) -> &[NoiseLayer<T>] {
        &self.models
    }

    pub fn noise_for(&self, layer_idx: usize) -> Option<&NoiseLayer<T>> {
        self.per_layer.get(layer_idx).copied().flatten().map(|i| &self.models[i])
    }

    /// Layer sampling overheads of every noisy layer executed in Trotter
    /// steps `1..=upto_step`, in circuit order.
    pub fn noisy_gammas_upto(
        &self,
        circuit: &TrotterCircuit<T>,
        upto_step: usize,
    ) -> Result<Vec<T>, CircuitError> {
        if upto_step > circuit.steps() {
            return Err(CircuitError::StepOutOfRange(upto_step, circuit.steps()));
        }
        let end = if upto_step == 0 { 0 } else { circuit.step_ends[upto_step - 1] };
        Ok((0..end)
            .filter_map(|idx| self.noise_for(idx))
            .map(|m| m.gamma())
            .collect())
    }
}
