//! Pauli-string algebra and the Pauli Transfer Matrix (PTM) embedding.
//!
//! Operators are expanded over the orthonormal basis `σ̃_i = σ_i / √2` per
//! qubit, so an n-qubit operator becomes a real vector of length `4^n` with
//! components `Tr[A P_i] / √(2^n)` and a channel becomes a real `4^n x 4^n`
//! matrix with entries `Tr[P_i E(P_j)] / 2^n`. Under this normalization the
//! Hilbert-Schmidt inner product is the plain dot product and unitary channels
//! map to orthogonal matrices.
//!
//! Dense PTM objects are capped at six qubits; they exist as verification
//! oracles, never as part of the scalable pipeline.

use crate::scalar::Scalar;
use ndarray::{Array1, Array2};
use num_complex::Complex;
use std::fmt;
use std::str::FromStr;

/// Hard cap on dense PTM sizes (`4^n` scaling).
pub const DENSE_MAX_QUBITS: usize = 6;

#[derive(Debug, Clone, thiserror::Error, PartialEq, Eq)]
pub enum PauliError {
    #[error("Pauli string must contain at least one letter")]
    Empty,
    #[error("invalid Pauli letter '{0}' (expected one of I, X, Y, Z)")]
    InvalidLetter(char),
    #[error("Pauli strings have mismatched lengths {0} and {1}")]
    LengthMismatch(usize, usize),
    #[error("index {index} out of range for {qubits} qubits")]
    IndexOutOfRange { index: usize, qubits: usize },
    #[error("dense PTM objects are capped at {DENSE_MAX_QUBITS} qubits, got {0}")]
    TooLarge(usize),
    #[error("operator dimension {0} is not a power of two")]
    NotPowerOfTwo(usize),
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
}

/// Single-qubit Pauli letter with the fixed code I→0, X→1, Y→2, Z→3.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PauliLetter {
    I = 0,
    X = 1,
    Y = 2,
    Z = 3,
}

impl PauliLetter {
    pub const ALL: [PauliLetter; 4] = [PauliLetter::I, PauliLetter::X, PauliLetter::Y, PauliLetter::Z];

    pub fn code(self) -> usize {
        self as usize
    }

    pub fn from_code(code: usize) -> Option<Self> {
        match code {
            0 => Some(PauliLetter::I),
            1 => Some(PauliLetter::X),
            2 => Some(PauliLetter::Y),
            3 => Some(PauliLetter::Z),
            _ => None,
        }
    }

    pub fn to_char(self) -> char {
        match self {
            PauliLetter::I => 'I',
            PauliLetter::X => 'X',
            PauliLetter::Y => 'Y',
            PauliLetter::Z => 'Z',
        }
    }

    pub fn from_char(c: char) -> Result<Self, PauliError> {
        match c {
            'I' | 'i' => Ok(PauliLetter::I),
            'X' | 'x' => Ok(PauliLetter::X),
            'Y' | 'y' => Ok(PauliLetter::Y),
            'Z' | 'z' => Ok(PauliLetter::Z),
            other => Err(PauliError::InvalidLetter(other)),
        }
    }
}

/// Index into the `4^n` Pauli basis; base-4 digits are the per-qubit letter
/// codes with qubit 0 as the most significant digit. Index 0 is the identity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliIndex(pub usize);

impl PauliIndex {
    pub fn value(self) -> usize {
        self.0
    }
}

/// An n-qubit word over {I, X, Y, Z}, qubit 0 first.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PauliString {
    letters: Vec<PauliLetter>,
}

impl PauliString {
    pub fn new(letters: Vec<PauliLetter>) -> Result<Self, PauliError> {
        if letters.is_empty() {
            return Err(PauliError::Empty);
        }
        Ok(Self { letters })
    }

    pub fn identity(n: usize) -> Result<Self, PauliError> {
        Self::new(vec![PauliLetter::I; n])
    }

    /// Uniform word `letter^{⊗n}`, e.g. `Z⊗n`.
    pub fn repeated(letter: PauliLetter, n: usize) -> Result<Self, PauliError> {
        Self::new(vec![letter; n])
    }

    pub fn n(&self) -> usize {
        self.letters.len()
    }

    pub fn letters(&self) -> &[PauliLetter] {
        &self.letters
    }

    pub fn letter(&self, qubit: usize) -> PauliLetter {
        self.letters[qubit]
    }

    /// Number of non-identity letters.
    pub fn weight(&self) -> usize {
        self.letters.iter().filter(|&&l| l != PauliLetter::I).count()
    }

    pub fn is_identity(&self) -> bool {
        self.weight() == 0
    }

    /// Qubits carrying a non-identity letter, ascending.
    pub fn support(&self) -> Vec<usize> {
        self.letters
            .iter()
            .enumerate()
            .filter(|(_, &l)| l != PauliLetter::I)
            .map(|(q, _)| q)
            .collect()
    }

    /// Base-4 encoding with qubit 0 as the most significant digit.
    pub fn index_of(&self) -> PauliIndex {
        let mut v = 0usize;
        for &l in &self.letters {
            v = v * 4 + l.code();
        }
        PauliIndex(v)
    }

    /// Inverse of [`index_of`](Self::index_of).
    pub fn pauli_of(idx: PauliIndex, n: usize) -> Result<Self, PauliError> {
        if n == 0 {
            return Err(PauliError::Empty);
        }
        if n > usize::BITS as usize / 2 || idx.0 >= 1usize << (2 * n) {
            return Err(PauliError::IndexOutOfRange { index: idx.0, qubits: n });
        }
        let mut letters = vec![PauliLetter::I; n];
        let mut v = idx.0;
        for q in (0..n).rev() {
            letters[q] = PauliLetter::from_code(v % 4).expect("base-4 digit");
            v /= 4;
        }
        Self::new(letters)
    }

    /// True iff the two words anticommute: an odd number of positions where
    /// both letters are non-identity and differ.
    pub fn anticommutes(&self, other: &PauliString) -> Result<bool, PauliError> {
        if self.n() != other.n() {
            return Err(PauliError::LengthMismatch(self.n(), other.n()));
        }
        let odd = self
            .letters
            .iter()
            .zip(&other.letters)
            .filter(|(&a, &b)| a != PauliLetter::I && b != PauliLetter::I && a != b)
            .count();
        Ok(odd % 2 == 1)
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &l in &self.letters {
            write!(f, "{}", l.to_char())?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = PauliError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let letters = s
            .chars()
            .map(PauliLetter::from_char)
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(letters)
    }
}

fn check_dense_cap(n: usize) -> Result<(), PauliError> {
    if n > DENSE_MAX_QUBITS {
        Err(PauliError::TooLarge(n))
    } else {
        Ok(())
    }
}

/// Dense PTM vector: `4^n` real components over the normalized Pauli basis.
#[derive(Debug, Clone, PartialEq)]
pub struct PtmVector<T> {
    n: usize,
    pub data: Array1<T>,
}

impl<T: Scalar> PtmVector<T> {
    pub fn new(n: usize, data: Array1<T>) -> Result<Self, PauliError> {
        check_dense_cap(n)?;
        assert_eq!(data.len(), 1 << (2 * n), "PTM vector must have 4^n entries");
        Ok(Self { n, data })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn component(&self, idx: PauliIndex) -> T {
        self.data[idx.0]
    }

    /// Pauli expansion coefficients `A = Σ a_i P_i`: the normalized components
    /// divided by `√(2^n)`.
    pub fn coefficients(&self) -> Array1<T> {
        let scale = T::one() / T::of_f64((1u64 << self.n) as f64).sqrt();
        self.data.mapv(|x| x * scale)
    }

    /// Bloch vector of Eq-style unnormalized components `θ_i = Tr[ρ P_i]`
    /// for `i = 1..4^n-1` (identity component dropped).
    pub fn to_bloch(&self) -> Array1<T> {
        let scale = T::of_f64((1u64 << self.n) as f64).sqrt();
        Array1::from_shape_fn(self.data.len() - 1, |i| self.data[i + 1] * scale)
    }
}

/// Dense PTM matrix: real `4^n x 4^n` channel representation.
#[derive(Debug, Clone, PartialEq)]
pub struct PtmMatrix<T> {
    n: usize,
    pub data: Array2<T>,
}

impl<T: Scalar> PtmMatrix<T> {
    pub fn new(n: usize, data: Array2<T>) -> Result<Self, PauliError> {
        check_dense_cap(n)?;
        let d = 1 << (2 * n);
        assert_eq!(data.dim(), (d, d), "PTM matrix must be 4^n x 4^n");
        Ok(Self { n, data })
    }

    pub fn identity(n: usize) -> Result<Self, PauliError> {
        check_dense_cap(n)?;
        Ok(Self { n, data: Array2::eye(1 << (2 * n)) })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Channel composition `self ∘ other` (matrix product).
    pub fn compose(&self, other: &PtmMatrix<T>) -> PtmMatrix<T> {
        assert_eq!(self.n, other.n);
        PtmMatrix { n: self.n, data: self.data.dot(&other.data) }
    }

    pub fn apply(&self, v: &PtmVector<T>) -> PtmVector<T> {
        assert_eq!(self.n, v.n);
        PtmVector { n: self.n, data: self.data.dot(&v.data) }
    }

    /// `A` block of the affine channel description: rows/columns `1..` of the
    /// full PTM (the traceless sector).
    pub fn a_block(&self) -> Array2<T> {
        let d = self.data.nrows();
        self.data.slice(ndarray::s![1..d, 1..d]).to_owned()
    }

    /// `c` vector of the affine channel description: column 0, rows `1..`.
    pub fn c_vector(&self) -> Array1<T> {
        let d = self.data.nrows();
        self.data.slice(ndarray::s![1..d, 0]).to_owned()
    }
}

/// Sparse action of a Pauli word on computational basis states:
/// `P |k⟩ = phase[k] |perm[k]⟩`.
pub fn pauli_action<T: Scalar>(p: &PauliString) -> (Vec<usize>, Vec<Complex<T>>) {
    let n = p.n();
    let dim = 1usize << n;
    let mut perm = vec![0usize; dim];
    let mut phase = vec![Complex::new(T::one(), T::zero()); dim];
    let i_unit = Complex::new(T::zero(), T::one());
    for k in 0..dim {
        let mut target = k;
        let mut ph = Complex::new(T::one(), T::zero());
        for q in 0..n {
            // qubit 0 owns the most significant bit
            let bit = (k >> (n - 1 - q)) & 1;
            match p.letter(q) {
                PauliLetter::I => {}
                PauliLetter::X => target ^= 1 << (n - 1 - q),
                PauliLetter::Y => {
                    target ^= 1 << (n - 1 - q);
                    // Y|0> = i|1>, Y|1> = -i|0>
                    ph *= if bit == 0 { i_unit } else { -i_unit };
                }
                PauliLetter::Z => {
                    if bit == 1 {
                        ph = -ph;
                    }
                }
            }
        }
        perm[k] = target;
        phase[k] = ph;
    }
    (perm, phase)
}

/// Dense `2^n x 2^n` matrix of a Pauli word.
pub fn dense_pauli<T: Scalar>(p: &PauliString) -> Array2<Complex<T>> {
    let dim = 1usize << p.n();
    let (perm, phase) = pauli_action::<T>(p);
    let mut m = Array2::zeros((dim, dim));
    for k in 0..dim {
        m[[perm[k], k]] = phase[k];
    }
    m
}

/// `Tr[A P]` using the sparse Pauli action; `O(2^n)`.
pub fn trace_with_pauli<T: Scalar>(a: &Array2<Complex<T>>, p: &PauliString) -> Complex<T> {
    let (perm, phase) = pauli_action::<T>(p);
    let mut tr = Complex::new(T::zero(), T::zero());
    for (k, (&t, &ph)) in perm.iter().zip(&phase).enumerate() {
        tr += a[[k, t]] * ph;
    }
    tr
}

fn qubits_of_dim(dim: usize) -> Result<usize, PauliError> {
    if dim == 0 || !dim.is_power_of_two() {
        return Err(PauliError::NotPowerOfTwo(dim));
    }
    Ok(dim.trailing_zeros() as usize)
}

/// PTM vector of a dense Hermitian operator: component `i` is
/// `Tr[A P_i] / √(2^n)`. Hilbert-Schmidt inner products are preserved.
pub fn ptm_vector<T: Scalar>(op: &Array2<Complex<T>>) -> Result<PtmVector<T>, PauliError> {
    let (rows, cols) = op.dim();
    if rows != cols {
        return Err(PauliError::NotSquare { rows, cols });
    }
    let n = qubits_of_dim(rows)?;
    if n == 0 {
        return Err(PauliError::Empty);
    }
    check_dense_cap(n)?;
    let norm = T::one() / T::of_f64((1u64 << n) as f64).sqrt();
    let mut data = Array1::zeros(1 << (2 * n));
    for idx in 0..data.len() {
        let p = PauliString::pauli_of(PauliIndex(idx), n).expect("index in range");
        data[idx] = trace_with_pauli(op, &p).re * norm;
    }
    PtmVector::new(n, data)
}

/// Reconstruct the dense operator from its PTM vector.
pub fn ptm_vector_to_dense<T: Scalar>(v: &PtmVector<T>) -> Array2<Complex<T>> {
    let n = v.n();
    let dim = 1usize << n;
    let norm = T::one() / T::of_f64((1u64 << n) as f64).sqrt();
    let mut out = Array2::zeros((dim, dim));
    for idx in 0..v.data.len() {
        let coeff = v.data[idx] * norm;
        if coeff == T::zero() {
            continue;
        }
        let p = PauliString::pauli_of(PauliIndex(idx), n).expect("index in range");
        let (perm, phase) = pauli_action::<T>(&p);
        for k in 0..dim {
            out[[perm[k], k]] += phase[k] * Complex::new(coeff, T::zero());
        }
    }
    out
}

/// PTM matrix of a linear map given by its action on dense operators:
/// `E_ij = Tr[P_i  E(P_j)] / 2^n`.
pub fn ptm_matrix<T, F>(n: usize, mut channel: F) -> Result<PtmMatrix<T>, PauliError>
where
    T: Scalar,
    F: FnMut(&Array2<Complex<T>>) -> Array2<Complex<T>>,
{
    if n == 0 {
        return Err(PauliError::Empty);
    }
    check_dense_cap(n)?;
    let d4 = 1usize << (2 * n);
    let norm = T::one() / T::of_f64((1u64 << n) as f64);
    let mut data = Array2::zeros((d4, d4));
    for j in 0..d4 {
        let pj = PauliString::pauli_of(PauliIndex(j), n).expect("index in range");
        let image = channel(&dense_pauli(&pj));
        if image.dim() != (1 << n, 1 << n) {
            return Err(PauliError::NotSquare { rows: image.nrows(), cols: image.ncols() });
        }
        for i in 0..d4 {
            let pi = PauliString::pauli_of(PauliIndex(i), n).expect("index in range");
            data[[i, j]] = trace_with_pauli(&image, &pi).re * norm;
        }
    }
    PtmMatrix::new(n, data)
}

/// PTM matrix of the unitary conjugation `ρ → U ρ U†`.
pub fn ptm_matrix_of_unitary<T: Scalar>(u: &Array2<Complex<T>>) -> Result<PtmMatrix<T>, PauliError> {
    let (rows, cols) = u.dim();
    if rows != cols {
        return Err(PauliError::NotSquare { rows, cols });
    }
    let n = qubits_of_dim(rows)?;
    let udag = u.t().mapv(|z| z.conj());
    ptm_matrix(n, |rho| u.dot(rho).dot(&udag))
}

/// PTM matrix of the Kraus channel `ρ → Σ_k K_k ρ K_k†`.
pub fn ptm_matrix_of_kraus<T: Scalar>(
    kraus: &[Array2<Complex<T>>],
) -> Result<PtmMatrix<T>, PauliError> {
    let first = kraus.first().ok_or(PauliError::Empty)?;
    let (rows, cols) = first.dim();
    if rows != cols {
        return Err(PauliError::NotSquare { rows, cols });
    }
    let n = qubits_of_dim(rows)?;
    let daggers: Vec<_> = kraus.iter().map(|k| k.t().mapv(|z| z.conj())).collect();
    ptm_matrix(n, |rho| {
        let mut out = Array2::zeros(rho.dim());
        for (k, kd) in kraus.iter().zip(&daggers) {
            out += &k.dot(rho).dot(kd);
        }
        out
    })
}
