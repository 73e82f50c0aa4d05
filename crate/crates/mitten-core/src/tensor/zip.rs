//! Fused composition with on-the-fly truncation ("zip-up").
//!
//! Composing two MPOs exactly multiplies bond dimensions, so a depth-L
//! middle-out contraction would blow up as `4^{3L}` without interleaved
//! truncation. The zip sweep factorizes each product core as soon as it is
//! formed, carrying the remainder to the next site, so the intermediate never
//! holds the full product bond. The sweep leaves the train left-canonical; a
//! right-to-left truncation pass then enforces `chi_max`/`tol` in canonical
//! gauge and leaves the result right-canonical for the next iteration.

use super::compress::{select_rank, truncate_sweep_rl, CompressOptions, CompressionMethod, CompressionReport};
use super::rsvd::rsvd_raw;
use super::{Mpo, Mps, TensorError, TensorTrain};
use crate::scalar::Scalar;
use ndarray::{Array2, Array3, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// `a ∘ b` with interleaved truncation to `opts.chi_max` / `opts.tol`.
pub fn zip_compose<T: Scalar>(
    a: &Mpo<T>,
    b: &Mpo<T>,
    opts: &CompressOptions,
) -> Result<(Mpo<T>, CompressionReport), TensorError> {
    let (tt, report) = zip_tt(&a.tt, &b.tt, opts)?;
    Ok((Mpo { tt }, report))
}

/// `a · v` (matrix-vector in PTM space) with interleaved truncation.
pub fn zip_apply<T: Scalar>(
    a: &Mpo<T>,
    v: &Mps<T>,
    opts: &CompressOptions,
) -> Result<(Mps<T>, CompressionReport), TensorError> {
    let (tt, report) = zip_tt(&a.tt, &v.tt, opts)?;
    Ok((Mps { tt }, report))
}

fn zip_tt<T: Scalar>(
    a: &TensorTrain<T>,
    b: &TensorTrain<T>,
    opts: &CompressOptions,
) -> Result<(TensorTrain<T>, CompressionReport), TensorError> {
    if a.n() != b.n() {
        return Err(TensorError::LengthMismatch(a.n(), b.n()));
    }
    debug_assert_eq!(a.phys(), 16);
    let n = a.n();
    // b is an MPO (rest = 4, contracted leg out-major) or an MPS (rest = 1)
    let rest = b.phys() / 4;
    let out_phys = 4 * rest;
    let mut rng = ChaCha12Rng::seed_from_u64(opts.seed);
    let mut carry = Array2::<T>::ones((1, 1));
    let mut cores: Vec<Array3<T>> = Vec::with_capacity(n);
    let mut zip_discarded = 0.0;
    let mut used_rsvd = false;

    for k in 0..n {
        let ak = a.core(k);
        let bk = b.core(k);
        let (al, _, ar) = ak.dim();
        let (bl, _, br) = bk.dim();
        let c = carry.nrows();
        debug_assert_eq!(carry.ncols(), al * bl);

        // x1[(c, aL), (s, rest, bR)] = carry[(c, aL), bL] · bk[bL, (s, rest, bR)]
        let carry2 = carry
            .into_shape_with_order((c * al, bl))
            .expect("contiguous");
        let b2 = bk
            .to_owned()
            .into_shape_with_order((bl, 4 * rest * br))
            .expect("contiguous");
        let x1 = carry2.dot(&b2);

        // x2[(c, rest, bR), (p, aR)] = Σ_{aL, s} x1[c, aL, s, rest, bR] · ak[aL, (s, p), aR]
        let x1_perm = x1
            .into_shape_with_order((c, al, 4, rest, br))
            .expect("contiguous")
            .permuted_axes([0, 3, 4, 1, 2])
            .as_standard_layout()
            .to_owned()
            .into_shape_with_order((c * rest * br, al * 4))
            .expect("contiguous");
        let a_perm = ak
            .to_owned()
            .into_shape_with_order((al, 4, 4, ar))
            .expect("contiguous")
            .permuted_axes([0, 2, 1, 3])
            .as_standard_layout()
            .to_owned()
            .into_shape_with_order((al * 4, 4 * ar))
            .expect("contiguous");
        let x2 = x1_perm.dot(&a_perm);

        // rearrange to ((c, p, rest), (aR, bR))
        let m2 = x2
            .into_shape_with_order((c, rest, br, 4, ar))
            .expect("contiguous")
            .permuted_axes([0, 3, 1, 4, 2])
            .as_standard_layout()
            .to_owned()
            .into_shape_with_order((c * out_phys, ar * br))
            .expect("contiguous");

        let cols = ar * br;
        if k == n - 1 {
            debug_assert_eq!(cols, 1);
            cores.push(
                m2.into_shape_with_order((c, out_phys, 1)).expect("contiguous"),
            );
            carry = Array2::ones((1, 1));
            continue;
        }

        let rows = c * out_phys;
        let min_dim = rows.min(cols);
        // headroom above chi_max; the canonical sweep afterwards makes the
        // final cut
        let cap = opts.chi_max + opts.rsvd.oversampling;
        let sketch = cap.min(min_dim);
        let total: f64 = m2.iter().map(|x| x.as_f64() * x.as_f64()).sum();
        let exact_svd = min_dim <= opts.full_svd_max_dim || sketch >= min_dim;
        let (u, s, v) = if exact_svd {
            T::svd_thin(&m2)?
        } else {
            used_rsvd = true;
            rsvd_raw(&m2, sketch, opts.rsvd.power_iters, &mut rng)?
        };
        let sig: Vec<f64> = s.iter().map(|x| x.as_f64()).collect();
        let residual = if exact_svd {
            0.0
        } else {
            (total - sig.iter().map(|s| s * s).sum::<f64>()).max(0.0)
        };
        let (keep, dropped) = select_rank(&sig, cap, opts.tol, total, residual);
        zip_discarded += dropped;
        cores.push(
            u.slice_axis(Axis(1), (0..keep).into())
                .to_owned()
                .into_shape_with_order((c, out_phys, keep))
                .expect("contiguous"),
        );
        let mut sv = v.slice_axis(Axis(1), (0..keep).into()).t().to_owned();
        for (i, mut row) in sv.axis_iter_mut(Axis(0)).enumerate() {
            let si = s[i];
            row.mapv_inplace(|x| x * si);
        }
        carry = sv.as_standard_layout().to_owned();
    }

    let sweep = truncate_sweep_rl(&mut cores, opts.chi_max, opts.tol, opts, &mut rng)?;
    let out = TensorTrain::new(out_phys, cores)?;
    let bond_dims = out.bond_dims();
    let discarded_abs = zip_discarded + sweep.discarded_abs;
    let denom = sweep.norm2 + zip_discarded;
    let report = CompressionReport {
        discarded_weight: if denom > 0.0 { discarded_abs / denom } else { 0.0 },
        bond_dims,
        method: if used_rsvd || sweep.used_rsvd {
            CompressionMethod::Rsvd
        } else {
            CompressionMethod::Svd
        },
    };
    Ok((out, report))
}
