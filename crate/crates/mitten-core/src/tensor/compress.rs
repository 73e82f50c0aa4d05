//! Canonicalize-then-truncate compression.
//!
//! `compress` runs a left-to-right QR canonicalization sweep followed by a
//! right-to-left truncation sweep. Each bond is truncated to
//! `min(chi_max, smallest rank with relative discarded weight <= tol)`;
//! `chi_max` wins when both bind. Bond matrices whose smaller dimension
//! exceeds `full_svd_max_dim` are truncated with the randomized SVD, the rest
//! with an exact SVD.

use super::rsvd::{rsvd_raw, RsvdOptions};
use super::{flatten_left, flatten_right, Mpo, Mps, TensorError, TensorTrain};
use crate::scalar::Scalar;
use ndarray::{Array3, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// Which SVD backend performed the truncations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CompressionMethod {
    Svd,
    Rsvd,
}

/// Outcome of one compression pass.
#[derive(Debug, Clone, PartialEq)]
pub struct CompressionReport {
    /// Sum of squared truncated singular values, relative to the squared norm
    /// of the input. Exactly zero when nothing was truncated.
    pub discarded_weight: f64,
    /// Bond dimensions after compression (`n + 1` entries).
    pub bond_dims: Vec<usize>,
    pub method: CompressionMethod,
}

impl CompressionReport {
    pub fn untouched(bond_dims: Vec<usize>) -> Self {
        Self { discarded_weight: 0.0, bond_dims, method: CompressionMethod::Svd }
    }
}

/// Tuning knobs for compression and the fused composition paths.
#[derive(Debug, Clone, PartialEq)]
pub struct CompressOptions {
    pub chi_max: usize,
    /// Relative discarded-weight target per bond (sum of squared dropped
    /// singular values over the total).
    pub tol: f64,
    pub rsvd: RsvdOptions,
    /// Bond matrices with `min(rows, cols)` at most this use the exact SVD.
    pub full_svd_max_dim: usize,
    /// Seed for the randomized-SVD sketches.
    pub seed: u64,
}

impl CompressOptions {
    pub fn new(chi_max: usize, tol: f64) -> Self {
        Self { chi_max, tol, rsvd: RsvdOptions::default(), full_svd_max_dim: 256, seed: 0x7454_u64 }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_rsvd(mut self, rsvd: RsvdOptions) -> Self {
        self.rsvd = rsvd;
        self
    }
}

/// Pick the kept rank: `chi_max` is the hard cap, then the smallest rank
/// whose discarded tail weight stays within `tol * total`.
///
/// Tail weights are accumulated smallest-first so singular values far below
/// the norm are not lost to cancellation; `residual` carries the unseen tail
/// of a sketched (randomized) spectrum and is zero for an exact SVD.
pub(crate) fn select_rank(
    sigmas: &[f64],
    chi_max: usize,
    tol: f64,
    total: f64,
    residual: f64,
) -> (usize, f64) {
    let len = sigmas.len();
    if len == 0 {
        return (1, residual.max(0.0));
    }
    let cap = chi_max.max(1).min(len);
    // suffix[r] = residual + sum of squared singular values from index r on
    let mut suffix = vec![0.0f64; len + 1];
    suffix[len] = residual.max(0.0);
    for r in (0..len).rev() {
        suffix[r] = suffix[r + 1] + sigmas[r] * sigmas[r];
    }
    let mut r = 1;
    while r < cap && suffix[r] > tol * total {
        r += 1;
    }
    (r, suffix[r])
}

pub(crate) struct SweepOutcome {
    pub discarded_abs: f64,
    pub norm2: f64,
    pub used_rsvd: bool,
}

/// Right-to-left truncation sweep over a left-canonical train. Leaves the
/// train right-canonical. The squared input norm is read off the first
/// processed bond matrix (exact in canonical form).
pub(crate) fn truncate_sweep_rl<T: Scalar>(
    cores: &mut Vec<Array3<T>>,
    chi_max: usize,
    tol: f64,
    opts: &CompressOptions,
    rng: &mut ChaCha12Rng,
) -> Result<SweepOutcome, TensorError> {
    let n = cores.len();
    let mut discarded_abs = 0.0;
    let mut norm2 = if n == 1 {
        cores[0].mapv(|x| (x.as_f64()).powi(2)).sum()
    } else {
        0.0
    };
    let mut used_rsvd = false;
    for k in (1..n).rev() {
        let (l, phys, r) = cores[k].dim();
        let m2 = flatten_right(&cores[k], l, phys * r);
        let total: f64 = m2.iter().map(|x| x.as_f64() * x.as_f64()).sum();
        if k == n - 1 {
            norm2 = total;
        }
        let min_dim = l.min(phys * r);
        let sketch = (chi_max + opts.rsvd.oversampling).min(min_dim);
        let exact_svd = min_dim <= opts.full_svd_max_dim || sketch >= min_dim;
        let (u, s, v) = if exact_svd {
            T::svd_thin(&m2)?
        } else {
            used_rsvd = true;
            rsvd_raw(&m2, sketch, opts.rsvd.power_iters, rng)?
        };
        let sig: Vec<f64> = s.iter().map(|x| x.as_f64()).collect();
        let residual = if exact_svd {
            0.0
        } else {
            (total - sig.iter().map(|s| s * s).sum::<f64>()).max(0.0)
        };
        let (keep, dropped) = select_rank(&sig, chi_max, tol, total, residual);
        discarded_abs += dropped;
        let vt = v.slice_axis(Axis(1), (0..keep).into()).t().to_owned();
        cores[k] = vt
            .as_standard_layout()
            .to_owned()
            .into_shape_with_order((keep, phys, r))
            .expect("contiguous");
        // absorb u * diag(s) into the previous core
        let mut us = u.slice_axis(Axis(1), (0..keep).into()).to_owned();
        for (j, col) in us.axis_iter_mut(Axis(1)).enumerate() {
            let sj = s[j];
            let mut col = col;
            col.mapv_inplace(|x| x * sj);
        }
        let (pl, pphys, pr) = cores[k - 1].dim();
        debug_assert_eq!(pr, l);
        let prev = flatten_left(&cores[k - 1], pl * pphys, pr);
        cores[k - 1] = prev
            .dot(&us)
            .into_shape_with_order((pl, pphys, keep))
            .expect("contiguous");
    }
    Ok(SweepOutcome { discarded_abs, norm2, used_rsvd })
}

impl<T: Scalar> TensorTrain<T> {
    pub(crate) fn compress_with(
        &self,
        opts: &CompressOptions,
    ) -> Result<(Self, CompressionReport), TensorError> {
        if opts.tol == 0.0 && self.max_bond() <= opts.chi_max {
            return Ok((self.clone(), CompressionReport::untouched(self.bond_dims())));
        }
        let phys = self.phys();
        let n = self.n();
        let mut cores: Vec<Array3<T>> = self.cores().to_vec();
        // left-to-right QR canonicalization
        for k in 0..n - 1 {
            let (l, _, r) = cores[k].dim();
            let m2 = flatten_left(&cores[k], l * phys, r);
            let (q, rmat) = T::qr_thin(&m2);
            let new_r = q.ncols();
            cores[k] = q
                .into_shape_with_order((l, phys, new_r))
                .expect("contiguous");
            let (nl, nphys, nr) = cores[k + 1].dim();
            debug_assert_eq!(nl, r);
            let next = flatten_right(&cores[k + 1], nl, nphys * nr);
            cores[k + 1] = rmat
                .dot(&next)
                .into_shape_with_order((new_r, nphys, nr))
                .expect("contiguous");
        }
        let mut rng = ChaCha12Rng::seed_from_u64(opts.seed);
        let sweep = truncate_sweep_rl(&mut cores, opts.chi_max, opts.tol, opts, &mut rng)?;
        let out = TensorTrain::new(phys, cores)?;
        let bond_dims = out.bond_dims();
        let discarded_weight =
            if sweep.norm2 > 0.0 { sweep.discarded_abs / sweep.norm2 } else { 0.0 };
        let method = if sweep.used_rsvd { CompressionMethod::Rsvd } else { CompressionMethod::Svd };
        Ok((out, CompressionReport { discarded_weight, bond_dims, method }))
    }
}

impl<T: Scalar> Mps<T> {
    pub fn compress(&self, chi_max: usize, tol: f64) -> Result<(Self, CompressionReport), TensorError> {
        self.compress_opts(&CompressOptions::new(chi_max, tol))
    }

    pub fn compress_opts(
        &self,
        opts: &CompressOptions,
    ) -> Result<(Self, CompressionReport), TensorError> {
        let (tt, report) = self.tt.compress_with(opts)?;
        Ok((Self { tt }, report))
    }
}

impl<T: Scalar> Mpo<T> {
    pub fn compress(&self, chi_max: usize, tol: f64) -> Result<(Self, CompressionReport), TensorError> {
        self.compress_opts(&CompressOptions::new(chi_max, tol))
    }

    pub fn compress_opts(
        &self,
        opts: &CompressOptions,
    ) -> Result<(Self, CompressionReport), TensorError> {
        let (tt, report) = self.tt.compress_with(opts)?;
        Ok((Self { tt }, report))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::PauliString;
    use approx::assert_abs_diff_eq;

    #[test]
    fn select_rank_tol_and_cap() {
        let sig = [2.0, 1.0, 0.5, 1e-9];
        let total: f64 = sig.iter().map(|s| s * s).sum();
        // chi cap binds
        let (r, d) = select_rank(&sig, 2, 0.0, total, 0.0);
        assert_eq!(r, 2);
        assert_abs_diff_eq!(d, 0.25 + 1e-18, epsilon = 1e-20);
        // tol lets the tiny value go
        let (r, _) = select_rank(&sig, 10, 1e-12, total, 0.0);
        assert_eq!(r, 3);
        // tol zero keeps every nonzero value, however small
        let (r, d) = select_rank(&sig, 10, 0.0, total, 0.0);
        assert_eq!(r, 4);
        assert_abs_diff_eq!(d, 0.0, epsilon = 1e-30);
        // exact zeros are dropped even at tol zero
        let (r, _) = select_rank(&[1.0, 0.5, 0.0, 0.0], 10, 0.0, 1.25, 0.0);
        assert_eq!(r, 2);
        // a sketch residual is never silently dropped
        let (r, d) = select_rank(&[1.0, 0.5], 10, 0.0, 1.25 + 1e-6, 1e-6);
        assert_eq!(r, 2);
        assert_abs_diff_eq!(d, 1e-6, epsilon = 1e-18);
    }

    #[test]
    fn noop_compress_returns_input() {
        let p: PauliString = "XZYI".parse().unwrap();
        let v = Mps::<f64>::pauli(&p);
        let (w, report) = v.compress(8, 0.0).unwrap();
        assert_eq!(v, w);
        assert_eq!(report.discarded_weight, 0.0);
    }

    #[test]
    fn inflated_product_state_compresses_to_bond_one() {
        // embed a bond-1 product MPS into artificially inflated bonds
        let p: PauliString = "XZY".parse().unwrap();
        let v = Mps::<f64>::pauli(&p);
        let zero = Mps::<f64>::from_cores(vec![
            ndarray::Array3::zeros((1, 4, 3)),
            ndarray::Array3::zeros((3, 4, 2)),
            ndarray::Array3::zeros((2, 4, 1)),
        ])
        .unwrap();
        let inflated = v.add_scaled(&zero, 1.0).unwrap();
        assert_eq!(inflated.bond_dims(), vec![1, 4, 3, 1]);
        let (c, report) = inflated.compress(16, 1e-14).unwrap();
        assert_eq!(c.bond_dims(), vec![1, 1, 1, 1]);
        assert!(report.discarded_weight < 1e-20);
        let dense_in = v.to_dense().unwrap();
        let dense_out = c.to_dense().unwrap();
        let worst = dense_in
            .data
            .iter()
            .zip(dense_out.data.iter())
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(worst < 1e-12, "worst deviation {worst}");
    }
}
