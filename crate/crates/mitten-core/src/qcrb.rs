//! Quantum Cramér-Rao bound validation suite.
//!
//! Dense, small-system machinery (n <= 3 states, n <= 2 structure tensors)
//! working in the unnormalized Pauli convention: the Bloch vector collects
//! `θ_i = Tr[ρ P_i]` over the traceless words. The bound and the direct
//! variance of the matching estimator coincide identically; the suite checks
//! that saturation numerically, both noiseless and through an affine channel
//! description `(A, c)`.

use crate::noise::{calibrate_rates, sparse_nn_template};
use crate::pauli::{
    dense_pauli, trace_with_pauli, PauliError, PauliIndex, PauliString, DENSE_MAX_QUBITS,
};
use crate::scalar::{LinalgError, Scalar};
use ndarray::{Array1, Array2};
use num_complex::Complex;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha12Rng;
use std::collections::BTreeMap;

#[derive(Debug, thiserror::Error)]
pub enum QcrbError {
    #[error("dense QCRB machinery is capped at 3 qubits, got {0}")]
    TooLarge(usize),
    #[error("structure tensors are built dense and capped at 2 qubits, got {0}")]
    StructureTooLarge(usize),
    #[error("not a density matrix: {0}")]
    NotAState(String),
    #[error("quantum Fisher information is singular (pure or rank-deficient state)")]
    SingularState,
    #[error("channel matrix A is singular")]
    SingularChannel,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Pauli(#[from] PauliError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Unnormalized Bloch vector `θ_i = Tr[ρ P_i]`, `i = 1..4^n-1`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlochVector<T> {
    n: usize,
    pub theta: Array1<T>,
}

impl<T: Scalar> BlochVector<T> {
    pub fn new(n: usize, theta: Array1<T>) -> Result<Self, QcrbError> {
        let want = (1usize << (2 * n)) - 1;
        if theta.len() != want {
            return Err(QcrbError::DimensionMismatch { expected: want, got: theta.len() });
        }
        Ok(Self { n, theta })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Reconstruct `ρ = (I + Σ θ_i P_i) / 2^n`.
    pub fn reconstruct(&self) -> Array2<Complex<T>> {
        let dim = 1usize << self.n;
        let norm = T::one() / T::of_f64(dim as f64);
        let mut rho = Array2::eye(dim).mapv(|x: T| Complex::new(x * norm, T::zero()));
        for (off, &t) in self.theta.iter().enumerate() {
            if t == T::zero() {
                continue;
            }
            let p = PauliString::pauli_of(PauliIndex(off + 1), self.n).expect("index in range");
            let pm = dense_pauli::<T>(&p);
            rho.zip_mut_with(&pm, |r, &p| *r += p * Complex::new(t * norm, T::zero()));
        }
        rho
    }
}

/// Bloch vector of a density matrix (trace 1, Hermitian, n <= 3).
pub fn bloch<T: Scalar>(rho: &Array2<Complex<T>>) -> Result<BlochVector<T>, QcrbError> {
    let dim = rho.nrows();
    if rho.ncols() != dim || !dim.is_power_of_two() || dim < 2 {
        return Err(QcrbError::NotAState(format!("shape {}x{}", dim, rho.ncols())));
    }
    let n = dim.trailing_zeros() as usize;
    if n > 3 {
        return Err(QcrbError::TooLarge(n));
    }
    let tr: Complex<T> = rho.diag().iter().copied().sum();
    if (tr.re - T::one()).abs().as_f64() > 1e-9 || tr.im.abs().as_f64() > 1e-9 {
        return Err(QcrbError::NotAState(format!("trace {}", tr.re)));
    }
    let herm_dev = rho
        .iter()
        .zip(rho.t().iter())
        .map(|(a, b)| (*a - b.conj()).norm_sqr().as_f64())
        .sum::<f64>()
        .sqrt();
    if herm_dev > 1e-9 {
        return Err(QcrbError::NotAState(format!("non-Hermitian, deviation {herm_dev}")));
    }
    let d4 = 1usize << (2 * n);
    let mut theta = Array1::zeros(d4 - 1);
    for idx in 1..d4 {
        let p = PauliString::pauli_of(PauliIndex(idx), n)?;
        theta[idx - 1] = trace_with_pauli(rho, &p).re;
    }
    BlochVector::new(n, theta)
}

/// Positive semidefiniteness check via the real embedding of the Hermitian
/// matrix (the embedding's eigenvalues are the doubled spectrum).
pub fn is_valid_state<T: Scalar>(rho: &Array2<Complex<T>>, eig_floor: f64) -> bool {
    let dim = rho.nrows();
    let mut emb = Array2::<T>::zeros((2 * dim, 2 * dim));
    for i in 0..dim {
        for j in 0..dim {
            let z = rho[[i, j]];
            emb[[i, j]] = z.re;
            emb[[i + dim, j + dim]] = z.re;
            emb[[i, j + dim]] = -z.im;
            emb[[i + dim, j]] = z.im;
        }
    }
    let (vals, _) = T::eigh(&emb);
    vals.iter().all(|v| v.as_f64() >= -eig_floor)
}

/// Anticommutator structure constants over the traceless sector:
/// `{P_i, P_j} = 2 δ_ij I + Σ_m μ_ijm P_m`, with the normalization fixed by
/// this defining expansion (`μ_ijm = Tr[{P_i, P_j} P_m] / 2^n`).
#[derive(Debug, Clone)]
pub struct StructureTensor<T> {
    n: usize,
    entries: BTreeMap<(usize, usize), Vec<(usize, T)>>,
}

impl<T: Scalar> StructureTensor<T> {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn entries(&self, i: usize, j: usize) -> &[(usize, T)] {
        self.entries.get(&(i, j)).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Build the structure tensor dense (n <= 2; identically empty at n = 1).
pub fn structure_tensor<T: Scalar>(n: usize) -> Result<StructureTensor<T>, QcrbError> {
    if n > 2 {
        return Err(QcrbError::StructureTooLarge(n));
    }
    let d4 = 1usize << (2 * n);
    let dim = 1usize << n;
    let paulis: Vec<Array2<Complex<T>>> = (1..d4)
        .map(|idx| dense_pauli::<T>(&PauliString::pauli_of(PauliIndex(idx), n).expect("in range")))
        .collect();
    let norm = T::one() / T::of_f64(dim as f64);
    let mut entries: BTreeMap<(usize, usize), Vec<(usize, T)>> = BTreeMap::new();
    for i in 1..d4 {
        for j in 1..d4 {
            let pi = &paulis[i - 1];
            let pj = &paulis[j - 1];
            let anti = pi.dot(pj) + pj.dot(pi);
            let mut terms = Vec::new();
            for m in 1..d4 {
                let p = PauliString::pauli_of(PauliIndex(m), n)?;
                let mu = trace_with_pauli(&anti, &p).re * norm;
                if mu.abs().as_f64() > 1e-12 {
                    terms.push((m, mu));
                }
            }
            if !terms.is_empty() {
                entries.insert((i, j), terms);
            }
        }
    }
    Ok(StructureTensor { n, entries })
}

/// `G_ij(θ) = (1/2) Tr[ρ(θ) {P_i, P_j}] = δ_ij + (1/2) Σ_m μ_ijm θ_m`.
///
/// The half comes from taking μ in the defining-expansion normalization;
/// the dense anticommutator trace is what the variance identity needs, and
/// the formula is verified against it numerically.
pub fn g_matrix<T: Scalar>(theta: &BlochVector<T>) -> Result<Array2<T>, QcrbError> {
    let mu = structure_tensor::<T>(theta.n())?;
    let d = theta.theta.len();
    let half = T::of_f64(0.5);
    let mut g = Array2::eye(d);
    for (&(i, j), terms) in &mu.entries {
        let mut acc = T::zero();
        for &(m, coeff) in terms {
            acc += coeff * theta.theta[m - 1];
        }
        g[[i - 1, j - 1]] += acc * half;
    }
    Ok(g)
}

/// Quantum Fisher information `J(θ) = (G_θᵀ − θ θᵀ)⁻¹`. Singular for pure or
/// rank-deficient states (eigenvalue cutoff 1e-10), reported rather than
/// regularized.
pub fn qfim<T: Scalar>(theta: &BlochVector<T>) -> Result<Array2<T>, QcrbError> {
    let g = g_matrix(theta)?;
    let d = theta.theta.len();
    let mut m = g.t().to_owned();
    for i in 0..d {
        for j in 0..d {
            m[[i, j]] -= theta.theta[i] * theta.theta[j];
        }
    }
    let (vals, _) = T::eigh(&m);
    if vals.iter().any(|v| v.as_f64().abs() < 1e-10) {
        return Err(QcrbError::SingularState);
    }
    T::inverse(&m).ok_or(QcrbError::SingularState)
}

/// Noiseless QCRB for estimating `f(θ) = xᵀθ` from `N` copies:
/// `(xᵀ G_θ x − f(θ)²) / N`.
pub fn qcrb_noiseless<T: Scalar>(
    x: &Array1<T>,
    theta: &BlochVector<T>,
    n_copies: u64,
) -> Result<T, QcrbError> {
    if x.len() != theta.theta.len() {
        return Err(QcrbError::DimensionMismatch { expected: theta.theta.len(), got: x.len() });
    }
    let g = g_matrix(theta)?;
    let f = theta.theta.dot(x);
    Ok((x.dot(&g.dot(x)) - f * f) / T::of_f64(n_copies as f64))
}

/// Noisy QCRB through the affine channel `(A, c)`:
/// `(xᵀ A⁻¹ G_{Aθ+c} A⁻ᵀ x − (f(θ) − y₀)²) / N` with `y₀ = −cᵀ A⁻ᵀ x`.
pub fn qcrb_noisy<T: Scalar>(
    x: &Array1<T>,
    theta: &BlochVector<T>,
    a: &Array2<T>,
    c: &Array1<T>,
    n_copies: u64,
) -> Result<T, QcrbError> {
    let d = theta.theta.len();
    if x.len() != d || a.nrows() != d || a.ncols() != d || c.len() != d {
        return Err(QcrbError::DimensionMismatch { expected: d, got: x.len() });
    }
    // y = A^{-T} x
    let y = T::solve(&a.t().to_owned(), x).ok_or(QcrbError::SingularChannel)?;
    let theta_out = BlochVector::new(theta.n(), a.dot(&theta.theta) + c)?;
    let g = g_matrix(&theta_out)?;
    let y0 = -c.dot(&y);
    let f = theta.theta.dot(x);
    let centered = f - y0;
    Ok((y.dot(&g.dot(&y)) - centered * centered) / T::of_f64(n_copies as f64))
}

/// Direct variance `(Tr[ρ op²] − Tr[ρ op]²) / N` of a dense observable.
pub fn variance_direct<T: Scalar>(
    op: &Array2<Complex<T>>,
    rho: &Array2<Complex<T>>,
    n_copies: u64,
) -> T {
    let mean: Complex<T> = rho.dot(op).diag().iter().copied().sum();
    let second: Complex<T> = rho.dot(&op.dot(op)).diag().iter().copied().sum();
    (second.re - mean.re * mean.re) / T::of_f64(n_copies as f64)
}

/// Dense observable from traceless-sector coefficients plus an identity
/// offset.
pub fn observable_from_coeffs<T: Scalar>(
    n: usize,
    x: &Array1<T>,
    offset: T,
) -> Array2<Complex<T>> {
    let dim = 1usize << n;
    let mut op = Array2::eye(dim).mapv(|v: T| Complex::new(v * offset, T::zero()));
    for (off, &coeff) in x.iter().enumerate() {
        if coeff == T::zero() {
            continue;
        }
        let p = PauliString::pauli_of(PauliIndex(off + 1), n).expect("index in range");
        op.zip_mut_with(&dense_pauli::<T>(&p), |o, &pm| {
            *o += pm * Complex::new(coeff, T::zero())
        });
    }
    op
}

/// Seeded strictly-mixed random state: a random pure state blended with at
/// least 1% of the maximally mixed one.
pub fn random_mixed_state<T: Scalar>(n: usize, seed: u64, mix: f64) -> Array2<Complex<T>> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let dim = 1usize << n;
    let psi: Array1<Complex<T>> = Array1::from_shape_fn(dim, |_| {
        Complex::new(T::standard_normal(&mut rng), T::standard_normal(&mut rng))
    });
    let norm: T = psi.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt();
    let psi = psi.mapv(|z| z / norm);
    let mix = T::of_f64(mix.max(0.01));
    let pure_w = T::one() - mix;
    let mixed_w = mix / T::of_f64(dim as f64);
    Array2::from_shape_fn((dim, dim), |(i, j)| {
        let mut v = psi[i] * psi[j].conj() * pure_w;
        if i == j {
            v += Complex::new(mixed_w, T::zero());
        }
        v
    })
}

/// Seeded coefficient vector over the traceless sector.
pub fn random_observable_coeffs<T: Scalar>(n: usize, seed: u64) -> Array1<T> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let d = (1usize << (2 * n)) - 1;
    let scale = T::one() / T::of_f64(d as f64).sqrt();
    Array1::from_shape_fn(d, |_| T::standard_normal(&mut rng) * scale)
}

/// Seeded sparse Pauli-Lindblad channel in affine form: diagonal `A` from the
/// per-Pauli fidelities, `c = 0` (unital).
pub fn random_pauli_lindblad_affine<T: Scalar>(
    n: usize,
    seed: u64,
) -> Result<(Array2<T>, Array1<T>), QcrbError> {
    if n > DENSE_MAX_QUBITS {
        return Err(QcrbError::TooLarge(n));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let gamma = 1.0 + rng.random_range(0.02..0.5);
    let layer = calibrate_rates::<T>(n, "qcrb", &sparse_nn_template(n), gamma, seed ^ 0xA5A5)
        .map_err(|_| QcrbError::SingularChannel)?;
    let d4 = 1usize << (2 * n);
    let mut a = Array2::zeros((d4 - 1, d4 - 1));
    for idx in 1..d4 {
        let p = PauliString::pauli_of(PauliIndex(idx), n)?;
        let f = layer.fidelity(&p).map_err(|_| QcrbError::SingularChannel)?;
        a[[idx - 1, idx - 1]] = f;
    }
    Ok((a, Array1::zeros(d4 - 1)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use num_complex::Complex64;

    fn ket0_density(n: usize) -> Array2<Complex64> {
        let dim = 1 << n;
        let mut rho = Array2::zeros((dim, dim));
        rho[[0, 0]] = Complex64::new(1.0, 0.0);
        rho
    }

    #[test]
    fn bloch_of_simple_states() {
        let dim = 2;
        let mixed = Array2::<Complex64>::eye(dim).mapv(|z| z * Complex64::new(0.5, 0.0));
        let b = bloch(&mixed).unwrap();
        for v in b.theta.iter() {
            assert_abs_diff_eq!(*v, 0.0, epsilon = 1e-14);
        }
        let b = bloch(&ket0_density(1)).unwrap();
        assert_abs_diff_eq!(b.theta[0], 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(b.theta[1], 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(b.theta[2], 1.0, epsilon = 1e-14);
    }

    #[test]
    fn bloch_roundtrip_and_purity() {
        let rho = random_mixed_state::<f64>(2, 3, 0.0); // pure up to the 1% floor
        let b = bloch(&rho).unwrap();
        let back = b.reconstruct();
        for (x, y) in rho.iter().zip(back.iter()) {
            assert_abs_diff_eq!(x.re, y.re, epsilon = 1e-12);
            assert_abs_diff_eq!(x.im, y.im, epsilon = 1e-12);
        }
        // ‖θ‖² = 2^n Tr[ρ²] − 1
        let purity: f64 = rho.dot(&rho).diag().iter().map(|z| z.re).sum();
        let want = 4.0 * purity - 1.0;
        assert_abs_diff_eq!(b.theta.dot(&b.theta), want, epsilon = 1e-10);
        assert!(is_valid_state(&rho, 1e-10));
    }

    #[test]
    fn structure_tensor_single_qubit_empty() {
        let mu = structure_tensor::<f64>(1).unwrap();
        assert!(mu.is_empty());
        assert!(structure_tensor::<f64>(3).is_err());
    }

    #[test]
    fn structure_tensor_known_entry_and_relation() {
        let mu = structure_tensor::<f64>(2).unwrap();
        let i = "XI".parse::<PauliString>().unwrap().index_of().value();
        let j = "XZ".parse::<PauliString>().unwrap().index_of().value();
        let m = "IZ".parse::<PauliString>().unwrap().index_of().value();
        let terms = mu.entries(i, j);
        assert_eq!(terms, &[(m, 2.0)]);

        // defining relation holds dense: {P_i, P_j} = 2δ_ij I + Σ μ P_m
        for (i, j) in [(1usize, 2), (5, 10), (3, 3), (7, 13), (15, 4)] {
            let pi = dense_pauli::<f64>(&PauliString::pauli_of(PauliIndex(i), 2).unwrap());
            let pj = dense_pauli::<f64>(&PauliString::pauli_of(PauliIndex(j), 2).unwrap());
            let anti = pi.dot(&pj) + pj.dot(&pi);
            let mut recon = Array2::<Complex64>::eye(4)
                .mapv(|z| z * Complex64::new(if i == j { 2.0 } else { 0.0 }, 0.0));
            for &(m, coeff) in mu.entries(i, j) {
                let pm = dense_pauli::<f64>(&PauliString::pauli_of(PauliIndex(m), 2).unwrap());
                recon.zip_mut_with(&pm, |r, &p| *r += p * Complex64::new(coeff, 0.0));
            }
            for (a, b) in anti.iter().zip(recon.iter()) {
                assert_abs_diff_eq!(a.re, b.re, epsilon = 1e-12);
                assert_abs_diff_eq!(a.im, b.im, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn structure_tensor_permutation_symmetry() {
        let mu = structure_tensor::<f64>(2).unwrap();
        let lookup = |i: usize, j: usize, m: usize| -> f64 {
            mu.entries(i, j)
                .iter()
                .find(|(mm, _)| *mm == m)
                .map(|(_, v)| *v)
                .unwrap_or(0.0)
        };
        let mut rng = ChaCha12Rng::seed_from_u64(77);
        for _ in 0..50 {
            let i = rng.random_range(1usize..16);
            let j = rng.random_range(1usize..16);
            let m = rng.random_range(1usize..16);
            let base = lookup(i, j, m);
            for (a, b, c) in [(j, i, m), (m, j, i), (i, m, j), (j, m, i), (m, i, j)] {
                assert_abs_diff_eq!(lookup(a, b, c), base, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn g_matrix_identity_cases() {
        // n = 1: μ = 0, so G = I for any θ
        let b = BlochVector::new(1, ndarray::array![0.3, -0.2, 0.8]).unwrap();
        let g = g_matrix(&b).unwrap();
        for (a, b) in g.iter().zip(Array2::<f64>::eye(3).iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-13);
        }
        // θ = 0 (maximally mixed): G = I at any n
        let b = BlochVector::new(2, Array1::zeros(15)).unwrap();
        let g = g_matrix(&b).unwrap();
        for (a, b) in g.iter().zip(Array2::<f64>::eye(15).iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-13);
        }
    }

    #[test]
    fn g_matrix_matches_dense_anticommutator_traces() {
        let rho = random_mixed_state::<f64>(2, 11, 0.2);
        let b = bloch(&rho).unwrap();
        let g = g_matrix(&b).unwrap();
        for i in 1..16usize {
            for j in 1..16usize {
                let pi = dense_pauli::<f64>(&PauliString::pauli_of(PauliIndex(i), 2).unwrap());
                let pj = dense_pauli::<f64>(&PauliString::pauli_of(PauliIndex(j), 2).unwrap());
                let anti = pi.dot(&pj) + pj.dot(&pi);
                let want: f64 = 0.5 * rho.dot(&anti).diag().iter().map(|z| z.re).sum::<f64>();
                assert_abs_diff_eq!(g[[i - 1, j - 1]], want, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn qfim_basics() {
        // maximally mixed single qubit: J = I
        let b = BlochVector::new(1, Array1::<f64>::zeros(3)).unwrap();
        let j = qfim(&b).unwrap();
        for (a, b) in j.iter().zip(Array2::<f64>::eye(3).iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-10);
        }
        // largest eigenvalue grows monotonically as purity increases
        let mut last = 0.0;
        for k in 1..6 {
            let r = 1.0 - 0.4 / k as f64;
            let b = BlochVector::new(1, ndarray::array![0.0, 0.0, r]).unwrap();
            let j = qfim(&b).unwrap();
            let (vals, _) = f64::eigh(&j);
            assert!(vals[0] > last, "eigenvalue not increasing at purity {r}");
            for i in 0..3 {
                for jj in 0..3 {
                    assert_abs_diff_eq!(j[[i, jj]], j[[jj, i]], epsilon = 1e-10);
                }
            }
            last = vals[0];
        }
        // pure state: singular, reported
        let b = BlochVector::new(1, ndarray::array![0.0, 0.0, 1.0]).unwrap();
        assert!(matches!(qfim(&b), Err(QcrbError::SingularState)));
    }

    #[test]
    fn noiseless_bound_simple_values() {
        // ρ = |0><0|, X = σ_z: eigenstate, zero variance
        let b = bloch(&ket0_density(1)).unwrap();
        let x = ndarray::array![0.0, 0.0, 1.0];
        assert_abs_diff_eq!(qcrb_noiseless(&x, &b, 1).unwrap(), 0.0, epsilon = 1e-12);
        // X = σ_x on |0><0|: variance 1
        let x = ndarray::array![1.0, 0.0, 0.0];
        assert_abs_diff_eq!(qcrb_noiseless(&x, &b, 1).unwrap(), 1.0, epsilon = 1e-12);
        let sx = dense_pauli::<f64>(&"X".parse().unwrap());
        assert_abs_diff_eq!(variance_direct(&sx, &ket0_density(1), 1), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn variance_direct_trivial_cases() {
        let rho = random_mixed_state::<f64>(2, 9, 0.3);
        let eye = Array2::<Complex64>::eye(4);
        assert_abs_diff_eq!(variance_direct(&eye, &rho, 1), 0.0, epsilon = 1e-12);
        let sz = dense_pauli::<f64>(&"ZI".parse().unwrap());
        assert_abs_diff_eq!(variance_direct(&sz, &ket0_density(2), 1), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn noiseless_saturation_sample() {
        for n in 1..=2usize {
            for seed in 0..25u64 {
                let rho = random_mixed_state::<f64>(n, 1000 + seed, 0.05);
                let b = bloch(&rho).unwrap();
                let x = random_observable_coeffs::<f64>(n, 2000 + seed);
                let bound = qcrb_noiseless(&x, &b, 4).unwrap();
                let op = observable_from_coeffs(n, &x, 0.0);
                let var = variance_direct(&op, &rho, 4);
                assert_abs_diff_eq!(bound, var, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn noisy_bound_reduces_to_noiseless_at_identity_channel() {
        let rho = random_mixed_state::<f64>(2, 21, 0.2);
        let b = bloch(&rho).unwrap();
        let x = random_observable_coeffs::<f64>(2, 22);
        let a = Array2::<f64>::eye(15);
        let c = Array1::<f64>::zeros(15);
        let noisy = qcrb_noisy(&x, &b, &a, &c, 3).unwrap();
        let clean = qcrb_noiseless(&x, &b, 3).unwrap();
        assert_abs_diff_eq!(noisy, clean, epsilon = 1e-12);
    }

    #[test]
    fn noisy_saturation_sample() {
        for n in 1..=2usize {
            for seed in 0..15u64 {
                let rho = random_mixed_state::<f64>(n, 3000 + seed, 0.05);
                let b = bloch(&rho).unwrap();
                let x = random_observable_coeffs::<f64>(n, 4000 + seed);
                let (a, c) = random_pauli_lindblad_affine::<f64>(n, 5000 + seed).unwrap();
                let bound = qcrb_noisy(&x, &b, &a, &c, 2).unwrap();
                // direct variance of Y = Σ y P + y0 I on the channel output
                let y = f64::solve(&a.t().to_owned(), &x).unwrap();
                let y0 = -c.dot(&y);
                let theta_out = BlochVector::new(n, a.dot(&b.theta) + &c).unwrap();
                let rho_out = theta_out.reconstruct();
                let op = observable_from_coeffs(n, &y, y0);
                let var = variance_direct(&op, &rho_out, 2);
                assert_abs_diff_eq!(bound, var, epsilon = 1e-9);
            }
        }
    }
}
