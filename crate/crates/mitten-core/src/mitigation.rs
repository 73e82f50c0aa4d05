//! Middle-out construction of the inverse adjoint noise map and the
//! surrogate-observable estimators.
//!
//! The running MPO holds `[M†]⁻¹` after `l` layer iterations,
//!
//! ```text
//! [M†]⁻¹_l = Λ_l⁻¹ ∘ U_l ∘ [M†]⁻¹_{l-1} ∘ U_l⁻¹,     [M†]⁻¹_0 = id,
//! ```
//!
//! built layer by layer in circuit order. With the orthonormal PTM basis and
//! Pauli-diagonal noise, `Λ† = Λ` and the adjoint of a unitary layer is its
//! inverse, so the map is assembled directly without ever forming the forward
//! channel. For a Pauli target `X = P_i` the surrogate observable is the
//! `i`-th column of this matrix; its diagonal entry alone gives the Dominant
//! Component Approximation.

use crate::circuit::{CircuitError, Layer, NoiseAssignment, TrotterCircuit};
use crate::noise::{NoiseError, NoiseLayer};
use crate::pauli::{
    ptm_matrix_of_unitary, PauliError, PauliIndex, PauliString, PtmMatrix, DENSE_MAX_QUBITS,
};
use crate::scalar::{LinalgError, Scalar};
use crate::tensor::{
    zip_compose, CompressOptions, CompressionMethod, CompressionReport, Mpo, Mps, RsvdOptions,
    TensorError,
};
use ndarray::{Array1, Array2, Array3};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha12Rng;

#[derive(Debug, thiserror::Error)]
pub enum MitigationError {
    #[error("dense oracle is capped at {DENSE_MAX_QUBITS} qubits, got {0}")]
    TooLarge(usize),
    #[error("probabilistic gamma requires n <= 4 (dense column expansion), got {0}")]
    ColumnTooLarge(usize),
    #[error("channel matrix is singular")]
    SingularChannel,
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error(transparent)]
    Pauli(#[from] PauliError),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Noise(#[from] NoiseError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// The running `[M†]⁻¹` MPO with its compression settings and log.
#[derive(Debug, Clone)]
pub struct MiddleOutState<T> {
    mpo: Mpo<T>,
    step: usize,
    chi_max: usize,
    tol: f64,
    rsvd: RsvdOptions,
    full_svd_max_dim: usize,
    seed_counter: u64,
    log: Vec<CompressionReport>,
}

/// The surrogate column `y = [M†]⁻¹ x` for a Pauli target `x = P_i`.
#[derive(Debug, Clone)]
pub struct SurrogateColumn<T> {
    pub column: Mps<T>,
    pub target: PauliString,
}

impl<T: Scalar> MiddleOutState<T> {
    /// Identity map, step 0, empty log.
    pub fn init(n: usize, chi_max: usize, tol: f64) -> Self {
        Self {
            mpo: Mpo::identity(n),
            step: 0,
            chi_max,
            tol,
            rsvd: RsvdOptions::default(),
            full_svd_max_dim: 256,
            seed_counter: 0,
            log: Vec::new(),
        }
    }

    pub fn with_rsvd(mut self, rsvd: RsvdOptions) -> Self {
        self.rsvd = rsvd;
        self
    }

    /// Reassemble a checkpointed state.
    pub fn from_parts(
        mpo: Mpo<T>,
        step: usize,
        chi_max: usize,
        tol: f64,
        rsvd: RsvdOptions,
        seed_counter: u64,
        log: Vec<CompressionReport>,
    ) -> Self {
        Self { mpo, step, chi_max, tol, rsvd, full_svd_max_dim: 256, seed_counter, log }
    }

    pub fn n(&self) -> usize {
        self.mpo.n()
    }

    /// Completed layer iterations.
    pub fn step(&self) -> usize {
        self.step
    }

    pub fn chi_max(&self) -> usize {
        self.chi_max
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn rsvd(&self) -> RsvdOptions {
        self.rsvd
    }

    pub fn seed_counter(&self) -> u64 {
        self.seed_counter
    }

    pub fn mpo(&self) -> &Mpo<T> {
        &self.mpo
    }

    pub fn truncation_log(&self) -> &[CompressionReport] {
        &self.log
    }

    /// Total discarded weight accumulated so far.
    pub fn total_discarded(&self) -> f64 {
        self.log.iter().map(|r| r.discarded_weight).sum()
    }

    fn next_opts(&mut self) -> CompressOptions {
        self.seed_counter += 1;
        let seed = 0x9E37_79B9_7F4A_7C15u64
            .wrapping_mul(self.seed_counter)
            .wrapping_add(0x0DD_B175u64);
        CompressOptions {
            chi_max: self.chi_max,
            tol: self.tol,
            rsvd: self.rsvd,
            full_svd_max_dim: self.full_svd_max_dim,
            seed,
        }
    }

    /// One middle-out iteration: conjugate by the layer and absorb the
    /// inverse noise, truncating to the state's `chi_max`/`tol` after each
    /// composition. Noiseless layers pass a trivial (zero-rate) noise model.
    pub fn step_layer(mut self, u: &Layer<T>, noise: &NoiseLayer<T>) -> Result<Self, MitigationError> {
        let n = self.n();
        if noise.n() != n {
            return Err(MitigationError::Pauli(PauliError::LengthMismatch(noise.n(), n)));
        }
        let mut merged = CompressionReport::untouched(self.mpo.bond_dims());
        if u.is_single_qubit() {
            self.mpo = conjugate_single_qubit(&self.mpo, u)?;
        } else {
            let u_mpo = u.to_mpo(n)?;
            let u_inv_mpo = u.inverse().to_mpo(n)?;
            let opts = self.next_opts();
            let (t1, r1) = zip_compose(&self.mpo, &u_inv_mpo, &opts)?;
            let opts = self.next_opts();
            let (t2, r2) = zip_compose(&u_mpo, &t1, &opts)?;
            self.mpo = t2;
            merge_report(&mut merged, r1);
            merge_report(&mut merged, r2);
        }
        if !noise.is_trivial() {
            let lambda_inv = noise.to_mpo(true)?;
            let opts = self.next_opts();
            let (t3, r3) = zip_compose(&lambda_inv, &self.mpo, &opts)?;
            self.mpo = t3;
            merge_report(&mut merged, r3);
        }
        merged.bond_dims = self.mpo.bond_dims();
        self.log.push(merged);
        self.step += 1;
        Ok(self)
    }

    /// Advance through all layers of one Trotter step (1-based), reading the
    /// per-layer noise off the assignment. The state must have consumed
    /// exactly the preceding steps.
    pub fn advance_trotter_step(
        mut self,
        circuit: &TrotterCircuit<T>,
        assignment: &NoiseAssignment<T>,
        trotter_step: usize,
    ) -> Result<Self, MitigationError> {
        let offset = circuit.step_offset(trotter_step)?;
        let trivial = NoiseLayer::noiseless(self.n(), "id");
        let layers = circuit.step_layers(trotter_step)?;
        for (k, layer) in layers.iter().enumerate() {
            let noise = assignment.noise_for(offset + k).unwrap_or(&trivial);
            self = self.step_layer(layer, noise)?;
        }
        Ok(self)
    }

    /// Diagonal entry `[M†]⁻¹_{ii}`: one sandwich contraction
    /// `⟨P_i| mpo |P_i⟩ / ⟨P_i|P_i⟩`.
    pub fn dca_coefficient(&self, target: &PauliString) -> Result<T, MitigationError> {
        let p = Mps::pauli(target);
        let raw = self.mpo.sandwich(&p, &p)?;
        Ok(raw / T::of_f64((1u64 << target.n()) as f64))
    }

    /// Apply the map to the target Pauli and compress to `chi_max`.
    pub fn surrogate_column(&self, target: &PauliString) -> Result<SurrogateColumn<T>, MitigationError> {
        let p = Mps::pauli(target);
        let applied = self.mpo.apply(&p)?;
        let opts = CompressOptions {
            chi_max: self.chi_max,
            tol: self.tol,
            rsvd: self.rsvd,
            full_svd_max_dim: self.full_svd_max_dim,
            seed: 0xC01_u64 ^ (self.step as u64) << 8,
        };
        let (column, _) = applied.compress_opts(&opts)?;
        Ok(SurrogateColumn { column, target: target.clone() })
    }

    /// Column diagnostics: diagonal value, largest off-diagonal magnitude
    /// (exact dense for n <= 4, deflation plus alternating argmax sweeps
    /// otherwise), dominance ratio, and the full off-diagonal list at n <= 4.
    pub fn column_diagnostics(
        &self,
        target: &PauliString,
    ) -> Result<ColumnDiagnostics<T>, MitigationError> {
        let n = self.n();
        let diagonal = self.dca_coefficient(target)?;
        let col = self.surrogate_column(target)?;
        let scale = T::of_f64((1u64 << n) as f64).sqrt();
        let target_idx = target.index_of();
        let (max_off, values) = if n <= 4 {
            let dense = col.column.to_dense()?;
            let mut max_off = T::zero();
            let mut values = Vec::with_capacity(dense.data.len().saturating_sub(2));
            for (k, &raw) in dense.data.iter().enumerate() {
                if k == target_idx.value() {
                    continue;
                }
                let y = raw / scale;
                if y.abs() > max_off {
                    max_off = y.abs();
                }
                if k != 0 {
                    values.push((PauliIndex(k), y));
                }
            }
            (max_off, Some(values))
        } else {
            let deflated = col.column.add_scaled(&Mps::pauli(target), -diagonal)?;
            let best = max_abs_entry_sweep(&deflated, 8, 0xD1A6 ^ self.step as u64);
            (best / scale, None)
        };
        Ok(ColumnDiagnostics {
            diagonal,
            max_off_diagonal: max_off,
            dominance_ratio: if max_off > T::zero() { Some(diagonal.abs() / max_off) } else { None },
            off_diagonal_values: values,
        })
    }
}

fn merge_report(acc: &mut CompressionReport, next: CompressionReport) {
    acc.discarded_weight += next.discarded_weight;
    if next.method == CompressionMethod::Rsvd {
        acc.method = CompressionMethod::Rsvd;
    }
}

/// Conjugation by a layer of single-qubit rotations: contract each core's
/// out-leg with the gate PTM and its in-leg with the inverse PTM. No bond
/// growth.
fn conjugate_single_qubit<T: Scalar>(mpo: &Mpo<T>, layer: &Layer<T>) -> Result<Mpo<T>, MitigationError> {
    let n = mpo.n();
    let mut fwd: Vec<Option<Array2<T>>> = vec![None; n];
    let mut inv: Vec<Option<Array2<T>>> = vec![None; n];
    for g in layer.gates() {
        let q = g.qubits()[0];
        if q >= n {
            return Err(MitigationError::Circuit(CircuitError::OutOfRange {
                gate: format!("{g:?}"),
                n,
            }));
        }
        fwd[q] = Some(ptm_matrix_of_unitary(&g.dense_unitary())?.data);
        inv[q] = Some(ptm_matrix_of_unitary(&g.inverse().dense_unitary())?.data);
    }
    let mut cores = Vec::with_capacity(n);
    for (site, core) in mpo.cores().iter().enumerate() {
        let (l, _, r) = core.dim();
        match (&fwd[site], &inv[site]) {
            (None, None) => cores.push(core.clone()),
            (Some(rf), Some(ri)) => {
                // new[l, (p', q'), r] = Σ_{p, q} rf[p', p] core[l, (p, q), r] ri[q, q']
                let c4 = core
                    .to_owned()
                    .into_shape_with_order((l, 4, 4, r))
                    .expect("contiguous");
                // out-leg first: tmp[p', (l q r)] = rf · core permuted
                let perm = c4
                    .permuted_axes([1, 0, 2, 3])
                    .as_standard_layout()
                    .to_owned()
                    .into_shape_with_order((4, l * 4 * r))
                    .expect("contiguous");
                let tmp = rf.dot(&perm);
                let t4 = tmp
                    .into_shape_with_order((4, l, 4, r))
                    .expect("contiguous");
                // in-leg: out[l, p', q', r] = Σ_q t4[p', l, q, r] ri[q, q']
                let t_perm = t4
                    .permuted_axes([1, 0, 3, 2])
                    .as_standard_layout()
                    .to_owned()
                    .into_shape_with_order((l * 4 * r, 4))
                    .expect("contiguous");
                let out = t_perm.dot(ri);
                let out4 = out
                    .into_shape_with_order((l, 4, r, 4))
                    .expect("contiguous")
                    .permuted_axes([0, 1, 3, 2])
                    .as_standard_layout()
                    .to_owned()
                    .into_shape_with_order((l, 16, r))
                    .expect("contiguous");
                cores.push(out4);
            }
            _ => unreachable!("fwd and inv are set together"),
        }
    }
    Ok(Mpo::from_flat_cores(cores)?)
}

/// Largest-magnitude entry of an MPS over all `4^n` index words, found by
/// alternating per-site argmax sweeps from several deterministic starts.
/// A heuristic lower bound on the true maximum.
fn max_abs_entry_sweep<T: Scalar>(mps: &Mps<T>, starts: usize, seed: u64) -> T {
    let n = mps.n();
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut best = T::zero();
    let mut start_words: Vec<Vec<usize>> = (0..4).map(|a| vec![a; n]).collect();
    for _ in 0..starts {
        start_words.push((0..n).map(|_| rng.random_range(0usize..4)).collect());
    }
    for mut word in start_words {
        for _sweep in 0..12 {
            let mut changed = false;
            // left partial products L_q for the fixed word
            let mut lefts: Vec<Array1<T>> = Vec::with_capacity(n + 1);
            lefts.push(Array1::ones(1));
            for q in 0..n {
                let slice = fixed_letter_matrix(mps.core(q), word[q]);
                let prev = lefts.last().unwrap();
                lefts.push(prev.dot(&slice));
            }
            let mut right: Array1<T> = Array1::ones(1);
            for q in (0..n).rev() {
                // value for each candidate letter at site q
                let mut best_letter = word[q];
                let mut best_val = T::zero();
                for a in 0..4 {
                    let m = fixed_letter_matrix(mps.core(q), a);
                    let v = lefts[q].dot(&m.dot(&right));
                    if v.abs() > best_val.abs() {
                        best_val = v;
                        best_letter = a;
                    }
                }
                if best_letter != word[q] {
                    word[q] = best_letter;
                    changed = true;
                }
                if best_val.abs() > best.abs() {
                    best = best_val;
                }
                let m = fixed_letter_matrix(mps.core(q), word[q]);
                right = m.dot(&right);
            }
            if !changed {
                break;
            }
        }
    }
    best.abs()
}

fn fixed_letter_matrix<T: Scalar>(core: &Array3<T>, letter: usize) -> Array2<T> {
    core.index_axis(ndarray::Axis(1), letter).to_owned()
}

/// `⟨Ŷ⟩` over the noisy state: one inner product of the column with the
/// state's PTM vector (no Pauli enumeration).
pub fn apc_expectation<T: Scalar>(
    col: &SurrogateColumn<T>,
    noisy_state: &Mps<T>,
) -> Result<T, MitigationError> {
    Ok(col.column.inner(noisy_state)?)
}

/// `⟨Ŷ⟩ ≈ coef · ⟨P_i⟩`: the Dominant Component Approximation estimate.
pub fn dca_expectation<T: Scalar>(coef: T, noisy_value: T) -> T {
    coef * noisy_value
}

/// Importance-sampling overhead of evaluating the column probabilistically:
/// `γ = Σ_i |y_i|` over the Pauli expansion coefficients. Needs the dense
/// column, so capped at n <= 4.
pub fn probabilistic_gamma<T: Scalar>(col: &SurrogateColumn<T>) -> Result<T, MitigationError> {
    let n = col.column.n();
    if n > 4 {
        return Err(MitigationError::ColumnTooLarge(n));
    }
    let dense = col.column.to_dense()?;
    let scale = T::of_f64((1u64 << n) as f64).sqrt();
    Ok(dense.data.iter().map(|x| x.abs()).sum::<T>() / scale)
}

#[derive(Debug, Clone)]
pub struct ColumnDiagnostics<T> {
    pub diagonal: T,
    pub max_off_diagonal: T,
    /// `diagonal / max |off-diagonal|`; absent when every off-diagonal
    /// vanishes.
    pub dominance_ratio: Option<T>,
    /// Full `(index, coefficient)` export (identity row and diagonal entry
    /// excluded), available at n <= 4 only.
    pub off_diagonal_values: Option<Vec<(PauliIndex, T)>>,
}

/// Dense affine description of the multi-layer error channel (Eq.-level
/// oracle): the full `4^n x 4^n` PTM assembled from dense per-layer
/// conjugations and diagonal noise factors.
#[derive(Debug, Clone)]
pub struct DenseChannelOracle<T> {
    n: usize,
    f: PtmMatrix<T>,
}

/// Assemble the oracle by pushing the running PTM through
/// `F ← Λ_l · U_l · F · U_l⁻¹` for every layer of the first `upto_step`
/// Trotter steps (n <= 4).
pub fn dense_channel_oracle<T: Scalar>(
    circuit: &TrotterCircuit<T>,
    assignment: &NoiseAssignment<T>,
    upto_step: usize,
) -> Result<DenseChannelOracle<T>, MitigationError> {
    let n = circuit.n();
    if n > 4 {
        return Err(MitigationError::TooLarge(n));
    }
    let mut f = PtmMatrix::identity(n)?;
    let end: usize = (0..upto_step)
        .map(|s| circuit.step_layers(s + 1).map(|l| l.len()))
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .sum();
    for (idx, layer) in circuit.layers()[..end].iter().enumerate() {
        let u = crate::circuit::layer_unitary_dense(layer, n)?;
        let u_ptm = ptm_matrix_of_unitary(&u)?;
        let u_inv_ptm = PtmMatrix::new(n, u_ptm.data.t().to_owned())?;
        f = u_ptm.compose(&f).compose(&u_inv_ptm);
        if let Some(model) = assignment.noise_for(idx) {
            f = model.dense_ptm(false)?.compose(&f);
        }
    }
    Ok(DenseChannelOracle { n, f })
}

impl<T: Scalar> DenseChannelOracle<T> {
    pub fn n(&self) -> usize {
        self.n
    }

    /// The full `4^n` PTM of the error channel.
    pub fn ptm(&self) -> &PtmMatrix<T> {
        &self.f
    }

    /// `A` block of Eq.-style affine form (traceless sector).
    pub fn a_matrix(&self) -> Array2<T> {
        self.f.a_block()
    }

    /// `c` vector; exactly zero for unital (Pauli) noise.
    pub fn c_vector(&self) -> Array1<T> {
        self.f.c_vector()
    }

    /// Dense `(Fᵀ)⁻¹`, the exact inverse adjoint map the middle-out MPO
    /// approximates.
    pub fn inverse_adjoint(&self) -> Result<PtmMatrix<T>, MitigationError> {
        let inv = T::inverse(&self.f.data.t().to_owned()).ok_or(MitigationError::SingularChannel)?;
        Ok(PtmMatrix::new(self.n, inv)?)
    }

    /// Exact surrogate for a Pauli target: the Pauli expansion coefficients
    /// `y` (full, index 0 included) and the affine offset `y₀ = y[0]`.
    pub fn exact_surrogate(&self, target: &PauliString) -> Result<(Array1<T>, T), MitigationError> {
        let d = self.f.data.nrows();
        let mut x = Array1::zeros(d);
        x[target.index_of().value()] = T::one();
        self.exact_surrogate_coeffs(&x)
    }

    /// Exact surrogate for a general observable given as full Pauli
    /// coefficients (index 0 = identity): solves `Fᵀ y = x`.
    pub fn exact_surrogate_coeffs(&self, x: &Array1<T>) -> Result<(Array1<T>, T), MitigationError> {
        let ft = self.f.data.t().to_owned();
        let y = T::solve(&ft, x).ok_or(MitigationError::SingularChannel)?;
        let y0 = y[0];
        Ok((y, y0))
    }
}
