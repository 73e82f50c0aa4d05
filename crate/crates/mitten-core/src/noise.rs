//! Sparse Pauli-Lindblad noise layers.
//!
//! A layer is generated by `exp(Σ_k λ_k (P_k · P_k − id))` with low-weight,
//! geometrically local generator words `P_k`. The channel is diagonal in the
//! Pauli basis: basis word `p` is damped by the fidelity
//! `f(p) = exp(-2 Σ_{k: p anticommutes P_k} λ_k)`, and the inverse channel
//! amplifies by `1/f(p)`. Generators may touch one qubit anywhere or two
//! adjacent qubits (linear topology), which keeps the channel MPO at bond
//! dimension at most 4.

use crate::pauli::{PauliError, PauliLetter, PauliString, PtmMatrix};
use crate::scalar::Scalar;
use crate::tensor::{Mpo, TensorError};
use ndarray::{Array2, Array3};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha12Rng;
use std::collections::BTreeMap;

#[derive(Debug, Clone, thiserror::Error)]
pub enum NoiseError {
    #[error("generator {0} exceeds the {1}-qubit layer")]
    GeneratorTooLong(String, usize),
    #[error("generator {0} must have weight 1 or 2, got {1}")]
    BadWeight(String, usize),
    #[error("weight-2 generator {0} must act on adjacent qubits")]
    NotAdjacent(String),
    #[error("generator {0} has negative rate {1}")]
    NegativeRate(String, f64),
    #[error("target sampling overhead {0} must be at least 1")]
    BadTargetGamma(f64),
    #[error("calibration template is empty")]
    EmptyTemplate,
    #[error(transparent)]
    Pauli(#[from] PauliError),
    #[error(transparent)]
    Tensor(#[from] TensorError),
}

/// One Lindblad generator: a low-weight Pauli word and a rate `λ ≥ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct LindbladGenerator<T> {
    pub pauli: PauliString,
    pub rate: T,
}

/// A one-layer sparse Pauli-Lindblad noise model.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseLayer<T> {
    n: usize,
    label: String,
    generators: Vec<LindbladGenerator<T>>,
}

impl<T: Scalar> NoiseLayer<T> {
    /// Validates supports (weight 1 anywhere, weight 2 adjacent only),
    /// rejects negative rates, and merges duplicate generator words by
    /// summing their rates.
    pub fn new(
        n: usize,
        label: impl Into<String>,
        generators: Vec<LindbladGenerator<T>>,
    ) -> Result<Self, NoiseError> {
        let mut merged: BTreeMap<usize, (PauliString, T)> = BTreeMap::new();
        for g in generators {
            if g.pauli.n() != n {
                return Err(NoiseError::GeneratorTooLong(g.pauli.to_string(), n));
            }
            let support = g.pauli.support();
            match support.len() {
                1 => {}
                2 => {
                    if support[1] - support[0] != 1 {
                        return Err(NoiseError::NotAdjacent(g.pauli.to_string()));
                    }
                }
                w => return Err(NoiseError::BadWeight(g.pauli.to_string(), w)),
            }
            if g.rate < T::zero() {
                return Err(NoiseError::NegativeRate(g.pauli.to_string(), g.rate.as_f64()));
            }
            let entry = merged
                .entry(g.pauli.index_of().value())
                .or_insert((g.pauli.clone(), T::zero()));
            entry.1 += g.rate;
        }
        let generators = merged
            .into_values()
            .map(|(pauli, rate)| LindbladGenerator { pauli, rate })
            .collect();
        Ok(Self { n, label: label.into(), generators })
    }

    pub fn noiseless(n: usize, label: impl Into<String>) -> Self {
        Self { n, label: label.into(), generators: Vec::new() }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn generators(&self) -> &[LindbladGenerator<T>] {
        &self.generators
    }

    /// True when the layer is the identity channel (no generators or all
    /// rates zero).
    pub fn is_trivial(&self) -> bool {
        self.generators.iter().all(|g| g.rate == T::zero())
    }

    /// Per-Pauli fidelity `f(p) = exp(-2 Σ_{k: p ac P_k} λ_k)`.
    pub fn fidelity(&self, p: &PauliString) -> Result<T, NoiseError> {
        if p.n() != self.n {
            return Err(NoiseError::Pauli(PauliError::LengthMismatch(p.n(), self.n)));
        }
        let mut exponent = T::zero();
        for g in &self.generators {
            if p.anticommutes(&g.pauli)? {
                exponent += g.rate;
            }
        }
        Ok((-(exponent + exponent)).exp())
    }

    /// Layer sampling overhead `γ = Π_k exp(2 λ_k) >= 1`.
    pub fn gamma(&self) -> T {
        let sum: T = self.generators.iter().map(|g| g.rate).sum();
        (sum + sum).exp()
    }

    /// Diagonal channel MPO: entry for basis word `p` is `fidelity(p)`
    /// (its reciprocal when `inverse`). Built by composing the commuting
    /// one- and two-local diagonal factors into a transfer form, then
    /// compressed; the bond dimension never exceeds 4.
    pub fn to_mpo(&self, inverse: bool) -> Result<Mpo<T>, NoiseError> {
        if self.is_trivial() {
            return Ok(Mpo::identity(self.n));
        }
        let n = self.n;
        let sign = if inverse { T::of_f64(2.0) } else { T::of_f64(-2.0) };

        // single-site exponents g_q(a) and pair exponents h_q(a, b)
        let mut single = vec![[T::zero(); 4]; n];
        let mut pair = vec![[[T::zero(); 4]; 4]; n.saturating_sub(1)];
        for g in &self.generators {
            let support = g.pauli.support();
            if support.len() == 1 {
                let q = support[0];
                let gl = g.pauli.letter(q);
                for a in 0..4 {
                    if single_ac(gl, a) {
                        single[q][a] += g.rate;
                    }
                }
            } else {
                let q = support[0];
                let (g0, g1) = (g.pauli.letter(q), g.pauli.letter(q + 1));
                for a in 0..4 {
                    for b in 0..4 {
                        if pair_ac(g0, g1, a, b) {
                            pair[q][a][b] += g.rate;
                        }
                    }
                }
            }
        }
        let gq = |q: usize, a: usize| (sign * single[q][a]).exp();
        let hq = |q: usize, a: usize, b: usize| (sign * pair[q][a][b]).exp();

        // diagonal function as a transfer-matrix train carrying the previous
        // letter, then embedded as a diagonal MPO
        let mut cores = Vec::with_capacity(n);
        if n == 1 {
            let mut c = Array3::zeros((1, 16, 1));
            for a in 0..4 {
                c[[0, a * 4 + a, 0]] = gq(0, a);
            }
            cores.push(c);
        } else {
            let mut first = Array3::zeros((1, 16, 4));
            for a in 0..4 {
                first[[0, a * 4 + a, a]] = gq(0, a);
            }
            cores.push(first);
            for q in 1..n - 1 {
                let mut mid = Array3::zeros((4, 16, 4));
                for prev in 0..4 {
                    for b in 0..4 {
                        mid[[prev, b * 4 + b, b]] = hq(q - 1, prev, b) * gq(q, b);
                    }
                }
                cores.push(mid);
            }
            let mut last = Array3::zeros((4, 16, 1));
            for prev in 0..4 {
                for b in 0..4 {
                    last[[prev, b * 4 + b, 0]] = hq(n - 2, prev, b) * gq(n - 1, b);
                }
            }
            cores.push(last);
        }
        let mpo = Mpo::from_flat_cores(cores)?;
        // trim rank deficiency (e.g. no pair generators across a cut)
        let (mpo, _) = mpo.compress(4, 1e-30)?;
        Ok(mpo)
    }

    /// Dense diagonal PTM of the layer (verification oracle, n <= 6).
    pub fn dense_ptm(&self, inverse: bool) -> Result<PtmMatrix<T>, NoiseError> {
        let d4 = 1usize << (2 * self.n);
        let mut data = Array2::zeros((d4, d4));
        for idx in 0..d4 {
            let p = PauliString::pauli_of(crate::pauli::PauliIndex(idx), self.n)?;
            let f = self.fidelity(&p)?;
            data[[idx, idx]] = if inverse { T::one() / f } else { f };
        }
        Ok(PtmMatrix::new(self.n, data)?)
    }
}

fn single_ac(gen: PauliLetter, basis_code: usize) -> bool {
    let b = PauliLetter::from_code(basis_code).expect("code < 4");
    gen != PauliLetter::I && b != PauliLetter::I && gen != b
}

fn pair_ac(g0: PauliLetter, g1: PauliLetter, a: usize, b: usize) -> bool {
    (single_ac(g0, a) as usize + single_ac(g1, b) as usize) % 2 == 1
}

/// Generator template of the sparse nearest-neighbour model: every weight-1
/// word {X, Y, Z} on each qubit plus all nine weight-2 combinations on each
/// adjacent pair. Deterministic order.
pub fn sparse_nn_template(n: usize) -> Vec<PauliString> {
    let letters = [PauliLetter::X, PauliLetter::Y, PauliLetter::Z];
    let mut out = Vec::new();
    for q in 0..n {
        for &l in &letters {
            let mut word = vec![PauliLetter::I; n];
            word[q] = l;
            out.push(PauliString::new(word).expect("n >= 1"));
        }
    }
    for q in 0..n.saturating_sub(1) {
        for &l0 in &letters {
            for &l1 in &letters {
                let mut word = vec![PauliLetter::I; n];
                word[q] = l0;
                word[q + 1] = l1;
                out.push(PauliString::new(word).expect("n >= 2"));
            }
        }
    }
    out
}

/// Draw rates uniformly from a seeded generator, then rescale so that
/// `Σ λ_k = ln(target_gamma) / 2`, which pins `gamma()` to the target.
pub fn calibrate_rates<T: Scalar>(
    n: usize,
    label: impl Into<String>,
    template: &[PauliString],
    target_gamma: f64,
    seed: u64,
) -> Result<NoiseLayer<T>, NoiseError> {
    if target_gamma < 1.0 {
        return Err(NoiseError::BadTargetGamma(target_gamma));
    }
    if template.is_empty() {
        return Err(NoiseError::EmptyTemplate);
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let draws: Vec<f64> = (0..template.len()).map(|_| rng.random_range(0.0..1.0)).collect();
    let total: f64 = draws.iter().sum();
    let budget = target_gamma.ln() / 2.0;
    let generators = template
        .iter()
        .zip(&draws)
        .map(|(pauli, &u)| LindbladGenerator {
            pauli: pauli.clone(),
            rate: T::of_f64(u / total * budget),
        })
        .collect();
    NoiseLayer::new(n, label, generators)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::{dense_pauli, ptm_matrix_of_kraus};
    use approx::assert_abs_diff_eq;
    use num_complex::Complex64;

    fn ps(s: &str) -> PauliString {
        s.parse().unwrap()
    }

    fn gen(p: &str, rate: f64) -> LindbladGenerator<f64> {
        LindbladGenerator { pauli: ps(p), rate }
    }

    /// Dense PTM of the layer built from the Kraus form of each generator
    /// factor, independent of the fidelity formula.
    fn kraus_ptm(layer: &NoiseLayer<f64>) -> PtmMatrix<f64> {
        let n = layer.n();
        let mut acc = PtmMatrix::<f64>::identity(n).unwrap();
        for g in layer.generators() {
            let w1 = (1.0 - (-2.0 * g.rate).exp()) / 2.0;
            let w0 = 1.0 - w1;
            let dim = 1 << n;
            let eye: Array2<Complex64> =
                Array2::eye(dim).mapv(|x: f64| Complex64::new(x * w0.sqrt(), 0.0));
            let p = dense_pauli::<f64>(&g.pauli).mapv(|z| z * w1.sqrt());
            let factor = ptm_matrix_of_kraus(&[eye, p]).unwrap();
            acc = factor.compose(&acc);
        }
        acc
    }

    #[test]
    fn fidelity_identity_is_one() {
        let layer = NoiseLayer::new(2, "l", vec![gen("XI", 0.05), gen("ZZ", 0.02)]).unwrap();
        assert_eq!(layer.fidelity(&ps("II")).unwrap(), 1.0);
    }

    #[test]
    fn single_generator_fidelity_matches_dense_lindblad() {
        let layer = NoiseLayer::new(1, "x", vec![gen("X", 0.05)]).unwrap();
        // frozen from the dense exponential of the generator acting on σ_z
        assert_abs_diff_eq!(layer.fidelity(&ps("Z")).unwrap(), 0.9048374180359595, epsilon = 1e-15);
        assert_abs_diff_eq!(layer.fidelity(&ps("X")).unwrap(), 1.0, epsilon = 1e-15);
        let dense = kraus_ptm(&layer);
        assert_abs_diff_eq!(dense.data[[3, 3]], 0.9048374180359595, epsilon = 1e-12);
        assert_abs_diff_eq!(dense.data[[1, 1]], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn gamma_closed_form() {
        let empty = NoiseLayer::<f64>::noiseless(3, "id");
        assert_eq!(empty.gamma(), 1.0);
        let layer = NoiseLayer::new(1, "x", vec![gen("X", 0.05)]).unwrap();
        assert_abs_diff_eq!(layer.gamma(), 1.1051709180756477, epsilon = 1e-15);
    }

    #[test]
    fn duplicate_generators_merge() {
        let layer = NoiseLayer::new(1, "x", vec![gen("X", 0.02), gen("X", 0.03)]).unwrap();
        assert_eq!(layer.generators().len(), 1);
        assert_abs_diff_eq!(layer.generators()[0].rate, 0.05, epsilon = 1e-16);
    }

    #[test]
    fn support_constraints_enforced() {
        assert!(NoiseLayer::new(3, "bad", vec![gen("XIX", 0.1)]).is_err());
        assert!(NoiseLayer::new(3, "bad", vec![gen("XXX", 0.1)]).is_err());
        assert!(NoiseLayer::new(3, "bad", vec![gen("XI", 0.1)]).is_err());
        assert!(NoiseLayer::new(2, "bad", vec![gen("XI", -0.1)]).is_err());
        assert!(NoiseLayer::new(3, "ok", vec![gen("IXX", 0.1)]).is_ok());
    }

    #[test]
    fn layer_ptm_matches_kraus_oracle() {
        let layer = NoiseLayer::new(
            2,
            "mix",
            vec![gen("XI", 0.03), gen("IY", 0.04), gen("ZZ", 0.02), gen("XY", 0.05)],
        )
        .unwrap();
        let oracle = kraus_ptm(&layer);
        let direct = layer.dense_ptm(false).unwrap();
        for i in 0..16 {
            for j in 0..16 {
                assert_abs_diff_eq!(direct.data[[i, j]], oracle.data[[i, j]], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn mpo_diagonal_matches_fidelities_exhaustively() {
        let template = sparse_nn_template(3);
        let layer = calibrate_rates::<f64>(3, "cal", &template, 1.2, 42).unwrap();
        let mpo = layer.to_mpo(false).unwrap();
        assert!(mpo.max_bond() <= 4);
        let dense = mpo.to_dense().unwrap();
        for idx in 0..64 {
            let p = PauliString::pauli_of(crate::pauli::PauliIndex(idx), 3).unwrap();
            let f = layer.fidelity(&p).unwrap();
            for jdx in 0..64 {
                let want = if idx == jdx { f } else { 0.0 };
                assert_abs_diff_eq!(dense.data[[idx, jdx]], want, epsilon = 1e-12);
            }
        }
        // inverse has reciprocal entries
        let inv = layer.to_mpo(true).unwrap().to_dense().unwrap();
        for idx in 0..64 {
            let p = PauliString::pauli_of(crate::pauli::PauliIndex(idx), 3).unwrap();
            let f = layer.fidelity(&p).unwrap();
            assert_abs_diff_eq!(inv.data[[idx, idx]], 1.0 / f, epsilon = 1e-10);
        }
    }

    #[test]
    fn channel_times_inverse_is_identity() {
        let template = sparse_nn_template(4);
        let layer = calibrate_rates::<f64>(4, "cal", &template, 1.14, 7).unwrap();
        let forward = layer.to_mpo(false).unwrap();
        let inverse = layer.to_mpo(true).unwrap();
        let composed = forward.compose(&inverse).unwrap().to_dense().unwrap();
        let eye = Array2::<f64>::eye(256);
        for (a, b) in composed.data.iter().zip(eye.iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn unital_channel_fixes_identity_mps() {
        let template = sparse_nn_template(8);
        let layer = calibrate_rates::<f64>(8, "cal", &template, 1.14, 3).unwrap();
        let mpo = layer.to_mpo(false).unwrap();
        let id_op = crate::tensor::Mps::<f64>::identity_operator(8);
        let out = mpo.apply(&id_op).unwrap();
        // inner(out - id, out - id) measured against the pauli basis word
        let overlap = out.inner(&id_op).unwrap();
        let norm = out.norm2();
        assert_abs_diff_eq!(overlap, 256.0, epsilon = 1e-9); // 2^8
        assert_abs_diff_eq!(norm, 256.0, epsilon = 1e-9);
    }

    #[test]
    fn fidelity_multiplicative_over_disjoint_subsets() {
        let a = NoiseLayer::new(4, "a", vec![gen("XXII", 0.02), gen("YIII", 0.01)]).unwrap();
        let b = NoiseLayer::new(4, "b", vec![gen("IIZZ", 0.05), gen("IIIX", 0.04)]).unwrap();
        let both = NoiseLayer::new(
            4,
            "ab",
            vec![gen("XXII", 0.02), gen("YIII", 0.01), gen("IIZZ", 0.05), gen("IIIX", 0.04)],
        )
        .unwrap();
        for idx in [1usize, 7, 63, 100, 255] {
            let p = PauliString::pauli_of(crate::pauli::PauliIndex(idx), 4).unwrap();
            let f = both.fidelity(&p).unwrap();
            let fa = a.fidelity(&p).unwrap();
            let fb = b.fidelity(&p).unwrap();
            assert_abs_diff_eq!(f, fa * fb, epsilon = 1e-14);
        }
    }

    #[test]
    fn calibration_hits_target_gamma_deterministically() {
        let template = sparse_nn_template(10);
        let layer = calibrate_rates::<f64>(10, "cnot-even", &template, 1.140, 11).unwrap();
        assert_abs_diff_eq!(layer.gamma(), 1.140, epsilon = 1e-9);
        let again = calibrate_rates::<f64>(10, "cnot-even", &template, 1.140, 11).unwrap();
        assert_eq!(layer, again);
        let sum: f64 = layer.generators().iter().map(|g| g.rate).sum();
        assert_abs_diff_eq!(sum, 1.140_f64.ln() / 2.0, epsilon = 1e-12);

        let zero = calibrate_rates::<f64>(4, "id", &sparse_nn_template(4), 1.0, 5).unwrap();
        assert!(zero.is_trivial());
        assert!(calibrate_rates::<f64>(4, "bad", &sparse_nn_template(4), 0.9, 5).is_err());
    }

    #[test]
    fn gamma_exceeds_one_unless_trivial() {
        let template = sparse_nn_template(3);
        let layer = calibrate_rates::<f64>(3, "cal", &template, 1.05, 9).unwrap();
        assert!(layer.gamma() > 1.0);
        assert!(!layer.is_trivial());
    }
}
