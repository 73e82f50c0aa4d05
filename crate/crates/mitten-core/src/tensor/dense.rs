//! Dense bridges: exact conversion between tensor trains and dense PTM
//! objects. Verification oracles only; capped at six qubits.

use super::{Mpo, Mps, TensorError, TensorTrain};
use crate::pauli::{PtmMatrix, PtmVector};
use crate::scalar::Scalar;
use ndarray::{Array1, Array2, Array3, Axis};

/// Relative singular-value floor for `from_dense`: exact zeros (up to
/// roundoff) are trimmed, everything else is kept.
const ZERO_TRIM: f64 = 1e-13;

fn tt_to_flat<T: Scalar>(tt: &TensorTrain<T>) -> Array1<T> {
    let phys = tt.phys();
    let mut acc = Array2::<T>::ones((1, 1));
    for core in tt.cores() {
        let (l, _, r) = core.dim();
        let rows = acc.nrows();
        let c2 = core
            .to_owned()
            .into_shape_with_order((l, phys * r))
            .expect("contiguous");
        acc = acc
            .dot(&c2)
            .into_shape_with_order((rows * phys, r))
            .expect("contiguous");
    }
    acc.index_axis(Axis(1), 0).to_owned()
}

fn tt_from_flat<T: Scalar>(data: &Array1<T>, n: usize, phys: usize) -> TensorTrain<T> {
    let total: f64 = data.iter().map(|x| x.as_f64() * x.as_f64()).sum();
    if total == 0.0 {
        let cores = (0..n)
            .map(|_| Array3::zeros((1, phys, 1)))
            .collect();
        return TensorTrain::new(phys, cores).expect("zero train");
    }
    let mut cores = Vec::with_capacity(n);
    let mut rest = data.len() / phys;
    let mut cur = data
        .to_owned()
        .into_shape_with_order((phys, rest))
        .expect("contiguous");
    let mut left = 1usize;
    for _ in 0..n - 1 {
        let (u, s, v) = T::svd_thin(&cur).expect("dense TT-SVD");
        let floor = s[0].as_f64() * ZERO_TRIM;
        let keep = s
            .iter()
            .take_while(|x| x.as_f64() > floor)
            .count()
            .max(1);
        cores.push(
            u.slice_axis(Axis(1), (0..keep).into())
                .to_owned()
                .into_shape_with_order((left, phys, keep))
                .expect("contiguous"),
        );
        let mut sv = v.slice_axis(Axis(1), (0..keep).into()).t().to_owned();
        for (i, mut row) in sv.axis_iter_mut(Axis(0)).enumerate() {
            let si = s[i];
            row.mapv_inplace(|x| x * si);
        }
        left = keep;
        rest /= phys;
        cur = sv
            .as_standard_layout()
            .to_owned()
            .into_shape_with_order((left * phys, rest))
            .expect("contiguous");
    }
    cores.push(
        cur.into_shape_with_order((left, phys, 1)).expect("contiguous"),
    );
    TensorTrain::new(phys, cores).expect("valid TT-SVD output")
}

impl<T: Scalar> Mps<T> {
    /// Contract to the dense `4^n` PTM vector (n <= 6).
    pub fn to_dense(&self) -> Result<PtmVector<T>, TensorError> {
        Ok(PtmVector::new(self.n(), tt_to_flat(&self.tt))?)
    }

    /// Exact tensor-train factorization of a dense PTM vector via sequential
    /// SVD; only numerically zero singular values are trimmed.
    pub fn from_dense(v: &PtmVector<T>) -> Result<Self, TensorError> {
        Ok(Self { tt: tt_from_flat(&v.data, v.n(), 4) })
    }
}

impl<T: Scalar> Mpo<T> {
    /// Contract to the dense `4^n x 4^n` PTM matrix (n <= 6).
    pub fn to_dense(&self) -> Result<PtmMatrix<T>, TensorError> {
        let n = self.n();
        let flat = tt_to_flat(&self.tt);
        let dim = 1usize << (2 * n);
        let mut data = Array2::zeros((dim, dim));
        for (idx, &val) in flat.iter().enumerate() {
            let (row, col) = split_site_major(idx, n);
            data[[row, col]] = val;
        }
        Ok(PtmMatrix::new(n, data)?)
    }

    pub fn from_dense(m: &PtmMatrix<T>) -> Result<Self, TensorError> {
        let n = m.n();
        let dim = 1usize << (2 * n);
        let mut flat = Array1::zeros(dim * dim);
        for row in 0..dim {
            for col in 0..dim {
                flat[join_site_major(row, col, n)] = m.data[[row, col]];
            }
        }
        Ok(Self { tt: tt_from_flat(&flat, n, 16) })
    }
}

/// Site-major flat index -> (row, col): digit k of the flat base-16 index is
/// `(p_k, q_k)`, and row/col are the base-4 numbers with digits `p_k`/`q_k`.
fn split_site_major(mut flat: usize, n: usize) -> (usize, usize) {
    let mut row = 0usize;
    let mut col = 0usize;
    let mut place = 1usize;
    for _ in 0..n {
        let digit = flat % 16;
        row += (digit / 4) * place;
        col += (digit % 4) * place;
        flat /= 16;
        place *= 4;
    }
    (row, col)
}

fn join_site_major(row: usize, col: usize, n: usize) -> usize {
    let mut flat = 0usize;
    let mut r = row;
    let mut c = col;
    let mut place = 1usize;
    for _ in 0..n {
        flat += ((r % 4) * 4 + (c % 4)) * place;
        r /= 4;
        c /= 4;
        place *= 16;
    }
    flat
}
