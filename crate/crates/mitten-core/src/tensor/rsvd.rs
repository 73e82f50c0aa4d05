//! Randomized SVD for low-rank truncation of large bond matrices.

use crate::scalar::{LinalgError, Scalar};
use ndarray::{Array1, Array2, Axis};
use rand_chacha::ChaCha12Rng;

/// Sketching parameters for the randomized SVD.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RsvdOptions {
    pub oversampling: usize,
    pub power_iters: usize,
}

impl Default for RsvdOptions {
    fn default() -> Self {
        Self { oversampling: 10, power_iters: 2 }
    }
}

/// Randomized truncated SVD: `u * diag(s) * v^T ≈ mat` with `u`, `v`
/// orthonormal and `s` non-increasing, `target_rank` columns (clamped to the
/// smaller matrix dimension). Exact when `rank(mat) <= target_rank`.
pub fn rsvd<T: Scalar>(
    mat: &Array2<T>,
    target_rank: usize,
    oversampling: usize,
    power_iters: usize,
    rng: &mut ChaCha12Rng,
) -> Result<(Array2<T>, Array1<T>, Array2<T>), LinalgError> {
    let min_dim = mat.nrows().min(mat.ncols());
    let target = target_rank.max(1).min(min_dim);
    let sketch = (target + oversampling).min(min_dim);
    let (u, s, v) = rsvd_raw(mat, sketch, power_iters, rng)?;
    Ok(trim(u, s, v, target))
}

/// Sketch-sized factorization used by the compression sweeps: returns
/// `sketch` singular triplets (or the exact thin SVD when the sketch covers
/// the whole spectrum).
pub(crate) fn rsvd_raw<T: Scalar>(
    mat: &Array2<T>,
    sketch: usize,
    power_iters: usize,
    rng: &mut ChaCha12Rng,
) -> Result<(Array2<T>, Array1<T>, Array2<T>), LinalgError> {
    let (m, n) = mat.dim();
    let min_dim = m.min(n);
    if sketch >= min_dim {
        return T::svd_thin(mat);
    }

    let omega = Array2::from_shape_fn((n, sketch), |_| T::standard_normal(rng));
    let y = mat.dot(&omega);
    let (mut q, _) = T::qr_thin(&y);
    for _ in 0..power_iters {
        let z = mat.t().dot(&q);
        let (qz, _) = T::qr_thin(&z.as_standard_layout().to_owned());
        let y2 = mat.dot(&qz);
        let (q2, _) = T::qr_thin(&y2);
        q = q2;
    }
    let b = q.t().dot(mat).as_standard_layout().to_owned(); // (sketch, n)
    let (ub, s, v) = T::svd_thin(&b)?;
    let u = q.dot(&ub);
    Ok((u, s, v))
}

fn trim<T: Scalar>(
    u: Array2<T>,
    s: Array1<T>,
    v: Array2<T>,
    rank: usize,
) -> (Array2<T>, Array1<T>, Array2<T>) {
    let r = rank.min(s.len());
    let u = u.slice_axis(Axis(1), (0..r).into()).to_owned();
    let s = s.slice_axis(Axis(0), (0..r).into()).to_owned();
    let v = v.slice_axis(Axis(1), (0..r).into()).to_owned();
    (u, s, v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;

    fn low_rank_matrix(m: usize, n: usize, rank: usize, seed: u64) -> Array2<f64> {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let a = Array2::from_shape_fn((m, rank), |_| f64::standard_normal(&mut rng));
        let b = Array2::from_shape_fn((rank, n), |_| f64::standard_normal(&mut rng));
        a.dot(&b)
    }

    #[test]
    fn exact_rank_recovery() {
        let mat = low_rank_matrix(64, 64, 3, 9);
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        let (u, s, v) = rsvd(&mat, 3, 10, 2, &mut rng).unwrap();
        let recon = u.dot(&Array2::from_diag(&s)).dot(&v.t());
        let err = (&recon - &mat).mapv(|x| x * x).sum().sqrt();
        assert!(err <= 1e-10, "reconstruction error {err}");
    }

    #[test]
    fn full_rank_matches_direct_svd() {
        let mat = low_rank_matrix(20, 12, 12, 3);
        let mut rng = ChaCha12Rng::seed_from_u64(2);
        let (_, s, _) = rsvd(&mat, 12, 10, 2, &mut rng).unwrap();
        let (_, s_ref, _) = f64::svd_thin(&mat).unwrap();
        for (a, b) in s.iter().zip(s_ref.iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-8);
        }
    }

    #[test]
    fn singular_values_decrease_and_orthonormal() {
        let mat = low_rank_matrix(80, 50, 50, 5);
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let (u, s, v) = rsvd(&mat, 10, 10, 2, &mut rng).unwrap();
        for w in s.as_slice().unwrap().windows(2) {
            assert!(w[0] >= w[1]);
        }
        let gu = u.t().dot(&u);
        let gv = v.t().dot(&v);
        for i in 0..10 {
            for j in 0..10 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(gu[[i, j]], e, epsilon = 1e-10);
                assert_abs_diff_eq!(gv[[i, j]], e, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn target_rank_clamped_to_min_dim() {
        let mat = low_rank_matrix(6, 4, 4, 7);
        let mut rng = ChaCha12Rng::seed_from_u64(4);
        let (u, s, _) = rsvd(&mat, 100, 10, 2, &mut rng).unwrap();
        assert_eq!(s.len(), 4);
        assert_eq!(u.ncols(), 4);
    }

    #[test]
    fn near_optimal_on_decaying_spectra() {
        // rsvd truncation error within 10x of the optimal SVD truncation
        // error at the same rank, across seeds
        let mut worst: f64 = 0.0;
        for seed in 0..20 {
            let m = 60;
            let mut rng = ChaCha12Rng::seed_from_u64(1000 + seed);
            let a = Array2::from_shape_fn((m, m), |_| f64::standard_normal(&mut rng));
            let (q, _) = f64::qr_thin(&a);
            let b = Array2::from_shape_fn((m, m), |_| f64::standard_normal(&mut rng));
            let (p, _) = f64::qr_thin(&b);
            // polynomially decaying spectrum s_i = (i+1)^-2
            let s = Array1::from_shape_fn(m, |i| ((i + 1) as f64).powi(-2));
            let mat = q.dot(&Array2::from_diag(&s)).dot(&p.t());
            let rank = 8;
            let (u, sr, v) = rsvd(&mat, rank, 10, 2, &mut rng).unwrap();
            let recon = u.dot(&Array2::from_diag(&sr)).dot(&v.t());
            let err = (&recon - &mat).mapv(|x| x * x).sum().sqrt();
            let opt: f64 = (rank..m).map(|i| s[i] * s[i]).sum::<f64>().sqrt();
            worst = worst.max(err / opt);
        }
        assert!(worst <= 10.0, "worst rsvd/svd error ratio {worst}");
    }
}
