//! Tensor-train engine over the PTM basis.
//!
//! PTM vectors (operators, states) are matrix product states with physical
//! dimension 4; PTM matrices (channels) are matrix product operators with two
//! physical legs of dimension 4, stored flattened as one leg of dimension 16
//! in out-major order so both kinds share one contraction/compression engine.
//!
//! All tensors are real: PTMs of Hermiticity-preserving maps and PTM vectors
//! of Hermitian operators have no imaginary part. Complex arithmetic only
//! appears in the dense oracles of the `pauli` module.

mod compress;
mod dense;
mod io;
mod rsvd;
mod zip;

pub use compress::{CompressOptions, CompressionMethod, CompressionReport};
pub use io::DumpError;
pub use rsvd::{rsvd, RsvdOptions};
pub use zip::{zip_apply, zip_compose};

use crate::pauli::{PauliLetter, PauliString};
use crate::scalar::Scalar;
use ndarray::{Array1, Array2, Array3, Array4};

#[derive(Debug, Clone, thiserror::Error)]
pub enum TensorError {
    #[error("tensor train must have at least one site")]
    Empty,
    #[error("site counts differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("core {site} has physical dimension {got}, expected {expected}")]
    PhysMismatch { site: usize, got: usize, expected: usize },
    #[error("bond mismatch at site {site}: left {left} after previous right {prev_right}")]
    BondMismatch { site: usize, left: usize, prev_right: usize },
    #[error("boundary bonds must be 1 (got left {0}, right {1})")]
    OpenBoundary(usize, usize),
    #[error(transparent)]
    Pauli(#[from] crate::pauli::PauliError),
    #[error(transparent)]
    Linalg(#[from] crate::scalar::LinalgError),
}

/// Shared tensor-train storage: a chain of `(left, phys, right)` cores.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorTrain<T> {
    phys: usize,
    cores: Vec<Array3<T>>,
}

impl<T: Scalar> TensorTrain<T> {
    pub fn new(phys: usize, cores: Vec<Array3<T>>) -> Result<Self, TensorError> {
        if cores.is_empty() {
            return Err(TensorError::Empty);
        }
        let mut prev_right = 1usize;
        for (site, core) in cores.iter().enumerate() {
            let (l, p, _r) = core.dim();
            if p != phys {
                return Err(TensorError::PhysMismatch { site, got: p, expected: phys });
            }
            if l != prev_right {
                return Err(TensorError::BondMismatch { site, left: l, prev_right });
            }
            prev_right = core.dim().2;
        }
        let first_left = cores[0].dim().0;
        if first_left != 1 || prev_right != 1 {
            return Err(TensorError::OpenBoundary(first_left, prev_right));
        }
        Ok(Self { phys, cores })
    }

    pub fn n(&self) -> usize {
        self.cores.len()
    }

    pub fn phys(&self) -> usize {
        self.phys
    }

    pub fn cores(&self) -> &[Array3<T>] {
        &self.cores
    }

    pub fn core(&self, site: usize) -> &Array3<T> {
        &self.cores[site]
    }

    /// Bond dimensions including the trivial boundaries: `n + 1` entries.
    pub fn bond_dims(&self) -> Vec<usize> {
        let mut dims = Vec::with_capacity(self.n() + 1);
        dims.push(1);
        for core in &self.cores {
            dims.push(core.dim().2);
        }
        dims
    }

    pub fn max_bond(&self) -> usize {
        self.bond_dims().into_iter().max().unwrap_or(1)
    }

    /// Multiply the represented tensor by a scalar (folded into the first core).
    pub fn scale(&mut self, factor: T) {
        self.cores[0].mapv_inplace(|x| x * factor);
    }

    /// Full contraction of two trains of equal physical dimension.
    pub fn inner(&self, other: &Self) -> Result<T, TensorError> {
        if self.n() != other.n() {
            return Err(TensorError::LengthMismatch(self.n(), other.n()));
        }
        debug_assert_eq!(self.phys, other.phys);
        let mut env = Array2::<T>::ones((1, 1));
        for (a, b) in self.cores.iter().zip(&other.cores) {
            let (bl, p, br) = b.dim();
            let (al, _, ar) = a.dim();
            // y[a, (p, b')] = sum_b env[a, b] * b[b, p, b']
            let b2 = flatten_right(b, bl, p * br);
            let y = env.dot(&b2);
            // env'[a', b'] = sum_{a, p} a[a, p, a'] * y[a, (p, b')]
            let a2 = flatten_left(a, al * p, ar);
            let y3 = y
                .into_shape_with_order((al * p, br))
                .expect("contiguous reshape");
            env = a2.t().dot(&y3);
        }
        Ok(env[[0, 0]])
    }

    pub fn norm2(&self) -> T {
        self.inner(self).expect("same train")
    }

    /// Direct sum: represents `self + coeff * other` (bond dimensions add).
    pub fn add_scaled(&self, other: &Self, coeff: T) -> Result<Self, TensorError> {
        if self.n() != other.n() {
            return Err(TensorError::LengthMismatch(self.n(), other.n()));
        }
        let n = self.n();
        let p = self.phys;
        let mut cores = Vec::with_capacity(n);
        for k in 0..n {
            let a = &self.cores[k];
            let b = &other.cores[k];
            let (al, _, ar) = a.dim();
            let (bl, _, br) = b.dim();
            let scale_b = if k == 0 { coeff } else { T::one() };
            if n == 1 {
                let mut c = a.clone();
                c.zip_mut_with(b, |x, y| *x = *x + coeff * *y);
                cores.push(c);
                continue;
            }
            let (l, r) = if k == 0 {
                (1, ar + br)
            } else if k == n - 1 {
                (al + bl, 1)
            } else {
                (al + bl, ar + br)
            };
            let mut c = Array3::<T>::zeros((l, p, r));
            let (a_off_l, a_off_r) = (0, 0);
            let (b_off_l, b_off_r) = (if k == 0 { 0 } else { al }, if k == n - 1 { 0 } else { ar });
            for i in 0..al {
                for s in 0..p {
                    for j in 0..ar {
                        c[[a_off_l + i, s, a_off_r + j]] = a[[i, s, j]];
                    }
                }
            }
            for i in 0..bl {
                for s in 0..p {
                    for j in 0..br {
                        c[[b_off_l + i, s, b_off_r + j]] = b[[i, s, j]] * scale_b;
                    }
                }
            }
            cores.push(c);
        }
        TensorTrain::new(p, cores)
    }
}

/// View a core as `(left * phys, right)` without copying.
pub(crate) fn flatten_left<T: Scalar>(core: &Array3<T>, rows: usize, cols: usize) -> Array2<T> {
    core.to_owned()
        .into_shape_with_order((rows, cols))
        .expect("core is contiguous")
}

/// View a core as `(left, phys * right)` without copying.
pub(crate) fn flatten_right<T: Scalar>(core: &Array3<T>, rows: usize, cols: usize) -> Array2<T> {
    core.to_owned()
        .into_shape_with_order((rows, cols))
        .expect("core is contiguous")
}

/// Matrix product state: a PTM vector over an n-qubit chain, physical
/// dimension 4.
#[derive(Debug, Clone, PartialEq)]
pub struct Mps<T> {
    pub(crate) tt: TensorTrain<T>,
}

/// Matrix product operator: a PTM channel matrix over an n-qubit chain, two
/// physical legs of dimension 4 stored flattened (out-major).
#[derive(Debug, Clone, PartialEq)]
pub struct Mpo<T> {
    pub(crate) tt: TensorTrain<T>,
}

impl<T: Scalar> Mps<T> {
    pub fn from_cores(cores: Vec<Array3<T>>) -> Result<Self, TensorError> {
        Ok(Self { tt: TensorTrain::new(4, cores)? })
    }

    pub fn n(&self) -> usize {
        self.tt.n()
    }

    pub fn cores(&self) -> &[Array3<T>] {
        self.tt.cores()
    }

    pub fn core(&self, site: usize) -> &Array3<T> {
        self.tt.core(site)
    }

    pub fn bond_dims(&self) -> Vec<usize> {
        self.tt.bond_dims()
    }

    pub fn max_bond(&self) -> usize {
        self.tt.max_bond()
    }

    pub fn scale(&mut self, factor: T) {
        self.tt.scale(factor)
    }

    /// Hilbert-Schmidt inner product of the represented operators.
    pub fn inner(&self, other: &Self) -> Result<T, TensorError> {
        self.tt.inner(&other.tt)
    }

    pub fn norm2(&self) -> T {
        self.tt.norm2()
    }

    /// `self + coeff * other` as a direct sum (bonds add, no truncation).
    pub fn add_scaled(&self, other: &Self, coeff: T) -> Result<Self, TensorError> {
        Ok(Self { tt: self.tt.add_scaled(&other.tt, coeff)? })
    }

    /// PTM-vector MPS of a Pauli word: bond 1, per-site `√2 · e_letter`.
    pub fn pauli(p: &PauliString) -> Self {
        let s2 = T::of_f64(std::f64::consts::SQRT_2);
        let cores = p
            .letters()
            .iter()
            .map(|&l| {
                let mut c = Array3::zeros((1, 4, 1));
                c[[0, l.code(), 0]] = s2;
                c
            })
            .collect();
        Self::from_cores(cores).expect("valid product state")
    }

    /// PTM-vector MPS of `|0…0⟩⟨0…0|`: per-site `(e_I + e_Z)/√2`.
    pub fn zero_state(n: usize) -> Self {
        let inv_s2 = T::of_f64(std::f64::consts::FRAC_1_SQRT_2);
        let cores = (0..n)
            .map(|_| {
                let mut c = Array3::zeros((1, 4, 1));
                c[[0, PauliLetter::I.code(), 0]] = inv_s2;
                c[[0, PauliLetter::Z.code(), 0]] = inv_s2;
                c
            })
            .collect();
        Self::from_cores(cores).expect("valid product state")
    }

    /// PTM-vector MPS of the identity operator `I^{⊗n}`.
    pub fn identity_operator(n: usize) -> Self {
        Self::pauli(&PauliString::identity(n).expect("n >= 1"))
    }
}

impl<T: Scalar> Mpo<T> {
    /// Build from rank-4 cores shaped `(left, 4, 4, right)` (out, in).
    pub fn from_cores4(cores: Vec<Array4<T>>) -> Result<Self, TensorError> {
        let flat = cores
            .into_iter()
            .map(|c| {
                let (l, p, q, r) = c.dim();
                debug_assert_eq!((p, q), (4, 4));
                c.into_shape_with_order((l, 16, r)).expect("contiguous core")
            })
            .collect();
        Ok(Self { tt: TensorTrain::new(16, flat)? })
    }

    pub(crate) fn from_flat_cores(cores: Vec<Array3<T>>) -> Result<Self, TensorError> {
        Ok(Self { tt: TensorTrain::new(16, cores)? })
    }

    /// Core at `site` in its logical `(left, 4, 4, right)` shape.
    pub fn core4(&self, site: usize) -> Array4<T> {
        let c = self.tt.core(site);
        let (l, _, r) = c.dim();
        c.to_owned()
            .into_shape_with_order((l, 4, 4, r))
            .expect("contiguous core")
    }

    pub fn n(&self) -> usize {
        self.tt.n()
    }

    pub fn cores(&self) -> &[Array3<T>] {
        self.tt.cores()
    }

    pub fn bond_dims(&self) -> Vec<usize> {
        self.tt.bond_dims()
    }

    pub fn max_bond(&self) -> usize {
        self.tt.max_bond()
    }

    pub fn scale(&mut self, factor: T) {
        self.tt.scale(factor)
    }

    /// Identity channel: all cores are the flattened 4x4 identity, bond 1.
    pub fn identity(n: usize) -> Self {
        let mut core = Array3::zeros((1, 16, 1));
        for p in 0..4 {
            core[[0, p * 4 + p, 0]] = T::one();
        }
        let cores = (0..n).map(|_| core.clone()).collect();
        Self::from_flat_cores(cores).expect("valid identity")
    }

    /// Exact matrix-vector product in PTM space; output bonds are products of
    /// the input bonds.
    pub fn apply(&self, v: &Mps<T>) -> Result<Mps<T>, TensorError> {
        if self.n() != v.n() {
            return Err(TensorError::LengthMismatch(self.n(), v.n()));
        }
        let mut cores = Vec::with_capacity(self.n());
        for (m, x) in self.tt.cores.iter().zip(v.tt.cores()) {
            let (al, _, ar) = m.dim();
            let (bl, _, br) = x.dim();
            // m[(a,p,s,a')], x[(b,s,b')] -> y[(a b), p, (a' b')]
            let m4 = m
                .to_owned()
                .into_shape_with_order((al, 4, 4, ar))
                .expect("contiguous");
            let m_perm = m4
                .permuted_axes([0, 1, 3, 2])
                .as_standard_layout()
                .to_owned()
                .into_shape_with_order((al * 4 * ar, 4))
                .expect("contiguous");
            let x_perm = x
                .to_owned()
                .permuted_axes([1, 0, 2])
                .as_standard_layout()
                .to_owned()
                .into_shape_with_order((4, bl * br))
                .expect("contiguous");
            let prod = m_perm.dot(&x_perm); // (a p a', b b')
            let prod5 = prod
                .into_shape_with_order((al, 4, ar, bl, br))
                .expect("contiguous");
            let out = prod5
                .permuted_axes([0, 3, 1, 2, 4])
                .as_standard_layout()
                .to_owned()
                .into_shape_with_order((al * bl, 4, ar * br))
                .expect("contiguous");
            cores.push(out);
        }
        Mps::from_cores(cores)
    }

    /// Exact channel composition `self ∘ other` (apply `other` first); bond
    /// dimensions multiply.
    pub fn compose(&self, other: &Mpo<T>) -> Result<Mpo<T>, TensorError> {
        if self.n() != other.n() {
            return Err(TensorError::LengthMismatch(self.n(), other.n()));
        }
        let mut cores = Vec::with_capacity(self.n());
        for (m, x) in self.tt.cores.iter().zip(other.tt.cores()) {
            let (al, _, ar) = m.dim();
            let (bl, _, br) = x.dim();
            // m[a,(p,s),a'], x[b,(s,q),b'] -> y[(a b), (p,q), (a' b')]
            let m_perm = m
                .to_owned()
                .into_shape_with_order((al, 4, 4, ar))
                .expect("contiguous")
                .permuted_axes([0, 1, 3, 2])
                .as_standard_layout()
                .to_owned()
                .into_shape_with_order((al * 4 * ar, 4))
                .expect("contiguous");
            let x_perm = x
                .to_owned()
                .into_shape_with_order((bl, 4, 4, br))
                .expect("contiguous")
                .permuted_axes([1, 0, 2, 3])
                .as_standard_layout()
                .to_owned()
                .into_shape_with_order((4, bl * 4 * br))
                .expect("contiguous");
            let prod = m_perm.dot(&x_perm); // (a p a', b q b')
            let prod6 = prod
                .into_shape_with_order((al, 4, ar, bl, 4, br))
                .expect("contiguous");
            let out = prod6
                .permuted_axes([0, 3, 1, 4, 2, 5])
                .as_standard_layout()
                .to_owned()
                .into_shape_with_order((al * bl, 16, ar * br))
                .expect("contiguous");
            cores.push(out);
        }
        Mpo::from_flat_cores(cores)
    }

    /// Two-sided contraction `⟨bra| self |ket⟩` in one pass.
    pub fn sandwich(&self, bra: &Mps<T>, ket: &Mps<T>) -> Result<T, TensorError> {
        if self.n() != bra.n() || self.n() != ket.n() {
            return Err(TensorError::LengthMismatch(self.n(), bra.n().max(ket.n())));
        }
        // env[b, o, k] over (bra, mpo, ket) bonds
        let mut env = Array1::<T>::ones(1)
            .into_shape_with_order((1, 1, 1))
            .expect("unit env");
        for ((m, b), x) in self.tt.cores.iter().zip(bra.cores()).zip(ket.cores()) {
            let (ol, _, or) = m.dim();
            let (bl, _, br) = b.dim();
            let (kl, _, kr) = x.dim();
            // y[(b,o), (s,k')] = sum_k env[(b,o),k] x[k,(s,k')]
            let env2 = env
                .into_shape_with_order((bl * ol, kl))
                .expect("contiguous");
            let x2 = flatten_right(x, kl, 4 * kr);
            let y = env2.dot(&x2); // (b o, s k')
            // z[(b,k'),(p,o')] = sum_{o,s} y[b,o,s,k'] m[o,(p,s),o']
            let y4 = y
                .into_shape_with_order((bl, ol, 4, kr))
                .expect("contiguous");
            let y_perm = y4
                .permuted_axes([0, 3, 1, 2])
                .as_standard_layout()
                .to_owned()
                .into_shape_with_order((bl * kr, ol * 4))
                .expect("contiguous");
            let m_perm = m
                .to_owned()
                .into_shape_with_order((ol, 4, 4, or))
                .expect("contiguous")
                .permuted_axes([0, 2, 1, 3])
                .as_standard_layout()
                .to_owned()
                .into_shape_with_order((ol * 4, 4 * or))
                .expect("contiguous");
            let z = y_perm.dot(&m_perm); // (b k', p o')
            // env'[b', o', k'] = sum_{b,p} b[b,p,b'] z[b,k',p,o']
            let z4 = z
                .into_shape_with_order((bl, kr, 4, or))
                .expect("contiguous");
            let z_perm = z4
                .permuted_axes([0, 2, 3, 1])
                .as_standard_layout()
                .to_owned()
                .into_shape_with_order((bl * 4, or * kr))
                .expect("contiguous");
            let b2 = flatten_left(b, bl * 4, br);
            let e = b2.t().dot(&z_perm); // (b', o' k')
            env = e
                .into_shape_with_order((br, or, kr))
                .expect("contiguous");
        }
        Ok(env[[0, 0, 0]])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::PauliIndex;
    use approx::assert_abs_diff_eq;

    #[test]
    fn identity_mpo_fixes_any_mps() {
        let p: PauliString = "XZY".parse().unwrap();
        let v = Mps::<f64>::pauli(&p);
        let id = Mpo::<f64>::identity(3);
        let w = id.apply(&v).unwrap();
        let diff = v.add_scaled(&w, -1.0).unwrap();
        assert!(diff.norm2() < 1e-24);
    }

    #[test]
    fn apply_bond_dims_multiply() {
        // MPO bonds (1,2,1), MPS bonds (1,3,1) -> output (1,6,1)
        let m = Mpo::<f64>::from_flat_cores(vec![
            Array3::from_elem((1, 16, 2), 0.1),
            Array3::from_elem((2, 16, 1), 0.2),
        ])
        .unwrap();
        let v = Mps::<f64>::from_cores(vec![
            Array3::from_elem((1, 4, 3), 0.3),
            Array3::from_elem((3, 4, 1), 0.4),
        ])
        .unwrap();
        let w = m.apply(&v).unwrap();
        assert_eq!(w.bond_dims(), vec![1, 6, 1]);
    }

    #[test]
    fn pauli_mps_are_orthogonal() {
        // inner(P_i, P_j) = 2^n δ_ij
        for i in [0usize, 5, 9, 13, 15] {
            for j in [0usize, 5, 9, 13, 15] {
                let pi = PauliString::pauli_of(PauliIndex(i), 2).unwrap();
                let pj = PauliString::pauli_of(PauliIndex(j), 2).unwrap();
                let vi = Mps::<f64>::pauli(&pi);
                let vj = Mps::<f64>::pauli(&pj);
                let want = if i == j { 4.0 } else { 0.0 };
                assert_abs_diff_eq!(vi.inner(&vj).unwrap(), want, epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn zero_state_has_unit_trace_and_z_expectation() {
        let rho = Mps::<f64>::zero_state(4);
        let id = Mps::<f64>::identity_operator(4);
        assert_abs_diff_eq!(rho.inner(&id).unwrap(), 1.0, epsilon = 1e-14);
        let z4 = Mps::<f64>::pauli(&"ZZZZ".parse().unwrap());
        assert_abs_diff_eq!(rho.inner(&z4).unwrap(), 1.0, epsilon = 1e-14);
        let x4 = Mps::<f64>::pauli(&"XXXX".parse().unwrap());
        assert_abs_diff_eq!(rho.inner(&x4).unwrap(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn sandwich_matches_inner_of_apply() {
        let m = Mpo::<f64>::from_flat_cores(vec![
            Array3::from_shape_fn((1, 16, 3), |(_, p, r)| ((p * 3 + r) % 5) as f64 * 0.2 - 0.3),
            Array3::from_shape_fn((3, 16, 1), |(l, p, _)| ((p + l * 7) % 4) as f64 * 0.25 - 0.2),
        ])
        .unwrap();
        let v = Mps::<f64>::pauli(&"XZ".parse().unwrap());
        let w = Mps::<f64>::pauli(&"YI".parse().unwrap());
        let direct = m.sandwich(&w, &v).unwrap();
        let applied = m.apply(&v).unwrap();
        let via_apply = w.inner(&applied).unwrap();
        assert_abs_diff_eq!(direct, via_apply, epsilon = 1e-12);
    }

    #[test]
    fn add_scaled_is_linear_in_dense_sense() {
        let v = Mps::<f64>::pauli(&"XZ".parse().unwrap());
        let w = Mps::<f64>::pauli(&"YI".parse().unwrap());
        let s = v.add_scaled(&w, -2.5).unwrap();
        // norm² = |v|² + 6.25 |w|² (orthogonal Paulis)
        assert_abs_diff_eq!(s.norm2(), 4.0 + 6.25 * 4.0, epsilon = 1e-12);
        assert_eq!(s.bond_dims(), vec![1, 2, 1]);
    }

    #[test]
    fn bond_validation_rejects_mismatch() {
        let bad = Mps::<f64>::from_cores(vec![
            Array3::zeros((1, 4, 2)),
            Array3::zeros((3, 4, 1)),
        ]);
        assert!(bad.is_err());
        let open = Mps::<f64>::from_cores(vec![Array3::zeros((1, 4, 2))]);
        assert!(open.is_err());
    }
}
