//! Real scalar abstraction.
//!
//! The whole engine is generic over [`Scalar`], so the working precision is a
//! type parameter instead of a hard-coded float. `f32` and `f64` implement it;
//! the dense factorizations (SVD, QR, symmetric eigendecomposition, LU) are
//! delegated to nalgebra through per-type impls so generic code never has to
//! disambiguate between `num_traits::Float` and nalgebra's own numeric traits.

use ndarray::{Array1, Array2, LinalgScalar};
use num_traits::{Float, FromPrimitive, NumAssign, Signed};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

/// Dense linear-algebra failure.
#[derive(Debug, Clone, thiserror::Error)]
pub enum LinalgError {
    #[error("SVD did not converge for a {rows}x{cols} matrix")]
    SvdNonConvergence { rows: usize, cols: usize },
    #[error("matrix is singular")]
    Singular,
}

/// Real scalar the tensor engine is generic over.
pub trait Scalar:
    Float
    + NumAssign
    + Signed
    + Sum
    + FromPrimitive
    + LinalgScalar
    + Debug
    + Display
    + LowerExp
    + Send
    + Sync
    + 'static
{
    /// Thin SVD `a = u * diag(s) * v^T` with singular values in
    /// non-increasing order. `u` is `m x k`, `v` is `n x k`, `k = min(m, n)`.
    fn svd_thin(a: &Array2<Self>) -> Result<(Array2<Self>, Array1<Self>, Array2<Self>), LinalgError>;

    /// Thin QR `a = q * r`; `q` is `m x k` with orthonormal columns.
    fn qr_thin(a: &Array2<Self>) -> (Array2<Self>, Array2<Self>);

    /// Cholesky factor `l` (lower triangular, `a = l lᵀ`) of a symmetric
    /// positive-definite matrix; `None` when not numerically PD.
    fn cholesky(a: &Array2<Self>) -> Option<Array2<Self>>;

    /// Symmetric eigendecomposition `a = v * diag(l) * v^T`, eigenvalues in
    /// non-increasing order.
    fn eigh(a: &Array2<Self>) -> (Array1<Self>, Array2<Self>);

    /// Solve `a x = b` (LU with partial pivoting).
    fn solve(a: &Array2<Self>, b: &Array1<Self>) -> Option<Array1<Self>>;

    /// Matrix inverse, `None` if singular.
    fn inverse(a: &Array2<Self>) -> Option<Array2<Self>>;

    /// Standard-normal draw from the engine RNG.
    fn standard_normal(rng: &mut ChaCha12Rng) -> Self;

    /// Conversion from `f64` (named to avoid clashing with
    /// `FromPrimitive::from_f64`).
    fn of_f64(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("finite f64 converts to Scalar")
    }

    /// Conversion to `f64` (named to avoid clashing with
    /// `ToPrimitive::to_f64`).
    fn as_f64(self) -> f64 {
        num_traits::ToPrimitive::to_f64(&self).expect("Scalar converts to f64")
    }
}

/// All factorizations run with sequential faer so results are byte-for-byte
/// reproducible regardless of the worker-pool size.
fn seq_parallelism() {
    static INIT: std::sync::Once = std::sync::Once::new();
    INIT.call_once(|| faer::set_global_parallelism(faer::Par::Seq));
}

macro_rules! impl_scalar {
    ($t:ty) => {
        impl Scalar for $t {
            fn svd_thin(
                a: &Array2<Self>,
            ) -> Result<(Array2<Self>, Array1<Self>, Array2<Self>), LinalgError> {
                seq_parallelism();
                let (m, n) = a.dim();
                // QR-precondition strongly rectangular inputs: the iterative
                // SVD then only sees a small square factor
                if m >= 2 * n && n > 0 {
                    let (q, r) = Self::qr_thin(a);
                    let (ur, s, v) = Self::svd_thin(&r)?;
                    return Ok((q.dot(&ur), s, v));
                }
                if n >= 2 * m && m > 0 {
                    let at = a.t().as_standard_layout().to_owned();
                    let (q, r) = Self::qr_thin(&at);
                    let rt = r.t().as_standard_layout().to_owned();
                    let (ur, s, vr) = Self::svd_thin(&rt)?;
                    return Ok((ur, s, q.dot(&vr)));
                }
                let fm = faer::Mat::<$t>::from_fn(m, n, |i, j| a[[i, j]]);
                let svd = fm
                    .thin_svd()
                    .map_err(|_| LinalgError::SvdNonConvergence { rows: m, cols: n })?;
                let (u, s, v) = (svd.U(), svd.S(), svd.V());
                let k = m.min(n);
                let u_nd = Array2::from_shape_fn((m, k), |(i, j)| u[(i, j)]);
                let s_nd = Array1::from_shape_fn(k, |i| s[i]);
                let v_nd = Array2::from_shape_fn((n, k), |(i, j)| v[(i, j)]);
                // guard against a defective factorization; fall back to
                // one-sided Jacobi if the probes disagree
                if svd_probe_ok(a, &u_nd, &s_nd, &v_nd) {
                    Ok((u_nd, s_nd, v_nd))
                } else {
                    Ok(jacobi_svd_thin(a))
                }
            }

            fn qr_thin(a: &Array2<Self>) -> (Array2<Self>, Array2<Self>) {
                seq_parallelism();
                let (m, n) = a.dim();
                // tall-skinny: Cholesky QR with reorthogonalization runs at
                // GEMM speed; falls through on (near-)rank deficiency
                if m >= 4 * n && n > 0 {
                    if let Some(qr) = chol_qr2(a) {
                        return qr;
                    }
                }
                let fm = faer::Mat::<$t>::from_fn(m, n, |i, j| a[[i, j]]);
                let qr = fm.qr();
                let q = qr.compute_thin_Q();
                let r = qr.thin_R();
                let k = m.min(n);
                let q_nd = Array2::from_shape_fn((m, k), |(i, j)| q[(i, j)]);
                let r_nd = Array2::from_shape_fn((k, n), |(i, j)| r[(i, j)]);
                (q_nd, r_nd)
            }

            fn cholesky(a: &Array2<Self>) -> Option<Array2<Self>> {
                seq_parallelism();
                let n = a.nrows();
                let fm = faer::Mat::<$t>::from_fn(n, n, |i, j| a[[i, j]]);
                let llt = fm.llt(faer::Side::Lower).ok()?;
                let l = llt.L();
                Some(Array2::from_shape_fn((n, n), |(i, j)| l[(i, j)]))
            }

            fn eigh(a: &Array2<Self>) -> (Array1<Self>, Array2<Self>) {
                seq_parallelism();
                let n = a.nrows();
                debug_assert_eq!(n, a.ncols());
                let fm = faer::Mat::<$t>::from_fn(n, n, |i, j| a[[i, j]]);
                let eig = fm
                    .self_adjoint_eigen(faer::Side::Lower)
                    .expect("symmetric eigendecomposition converges");
                let (s, u) = (eig.S(), eig.U());
                // faer returns ascending order; flip to non-increasing
                let vals = Array1::from_shape_fn(n, |i| s[n - 1 - i]);
                let vecs = Array2::from_shape_fn((n, n), |(i, j)| u[(i, n - 1 - j)]);
                (vals, vecs)
            }

            fn solve(a: &Array2<Self>, b: &Array1<Self>) -> Option<Array1<Self>> {
                seq_parallelism();
                let n = a.nrows();
                let fm = faer::Mat::<$t>::from_fn(n, a.ncols(), |i, j| a[[i, j]]);
                let rhs = faer::Mat::<$t>::from_fn(b.len(), 1, |i, _| b[i]);
                use faer::linalg::solvers::Solve;
                let lu = fm.partial_piv_lu();
                let sol = lu.solve(&rhs);
                let x = Array1::from_shape_fn(n, |i| sol[(i, 0)]);
                // partial-pivot LU has no singularity signal; check the
                // residual instead
                let residual = (&a.dot(&x) - b).mapv(|v| v.abs()).sum();
                let scale = a.iter().map(|v| v.abs()).fold(0.0, <$t>::max)
                    * x.iter().map(|v| v.abs()).fold(0.0, <$t>::max)
                    + b.iter().map(|v| v.abs()).fold(0.0, <$t>::max);
                if !residual.is_finite() || residual > scale * <$t>::EPSILON * 1e6 * n as $t {
                    return None;
                }
                Some(x)
            }

            fn inverse(a: &Array2<Self>) -> Option<Array2<Self>> {
                seq_parallelism();
                let n = a.nrows();
                let fm = faer::Mat::<$t>::from_fn(n, a.ncols(), |i, j| a[[i, j]]);
                use faer::linalg::solvers::DenseSolveCore;
                let lu = fm.partial_piv_lu();
                let inv = lu.inverse();
                let inv_nd = Array2::from_shape_fn((n, n), |(i, j)| inv[(i, j)]);
                if inv_nd.iter().any(|v| !v.is_finite()) {
                    return None;
                }
                // residual check on a probe vector
                let probe = Array1::from_shape_fn(n, |i| <$t>::of_f64(((i % 7) as f64 - 3.0) / 3.0));
                let err = (&a.dot(&inv_nd.dot(&probe)) - &probe).mapv(|v| v.abs()).sum();
                let scale = probe.iter().map(|v| v.abs()).sum::<$t>()
                    + a.iter().map(|v| v.abs()).fold(0.0, <$t>::max);
                if err > scale * <$t>::EPSILON * 1e6 * n as $t {
                    return None;
                }
                Some(inv_nd)
            }

            fn standard_normal(rng: &mut ChaCha12Rng) -> Self {
                use rand_distr::Distribution;
                rand_distr::StandardNormal.sample(rng)
            }
        }
    };
}

impl_scalar!(f32);
impl_scalar!(f64);

/// Two rounds of Cholesky QR. Each round forms the Gram matrix, factors it,
/// and applies the inverse triangular factor; the second round restores full
/// orthogonality. `None` when the Gram matrix is not safely positive
/// definite (caller falls back to Householder).
fn chol_qr2<T: Scalar>(a: &Array2<T>) -> Option<(Array2<T>, Array2<T>)> {
    fn round<T: Scalar>(a: &Array2<T>) -> Option<(Array2<T>, Array2<T>)> {
        let gram = a.t().dot(a);
        let l = T::cholesky(&gram)?;
        let n = l.nrows();
        let mut dmin = T::infinity();
        let mut dmax = T::zero();
        for i in 0..n {
            dmin = dmin.min(l[[i, i]].abs());
            dmax = dmax.max(l[[i, i]].abs());
        }
        if dmin <= dmax * T::of_f64(1e-6) {
            return None;
        }
        let linv = T::inverse(&l)?;
        // q = a · l⁻ᵀ, r = lᵀ
        let q = a.dot(&linv.t().as_standard_layout().to_owned());
        Some((q, l.t().as_standard_layout().to_owned()))
    }
    let (q1, r1) = round(a)?;
    let (q2, r2) = round(&q1)?;
    Some((q2, r2.dot(&r1)))
}

/// Cheap factorization sanity check: compare `A w` against `U (S (Vᵀ w))` on
/// a few fixed pseudo-random probes. A defective factorization (wrong by
/// O(σ_max) on some subspace) fails this with overwhelming probability.
fn svd_probe_ok<T: Scalar>(
    a: &Array2<T>,
    u: &Array2<T>,
    s: &Array1<T>,
    v: &Array2<T>,
) -> bool {
    if std::env::var("MITTEN_SVD_AUDIT").is_ok() {
        let us = u * &s.view().insert_axis(ndarray::Axis(0));
        let recon = us.dot(&v.t());
        let err = (&recon - a).mapv(|x| x * x).sum().sqrt().as_f64();
        let smax = if s.is_empty() { 0.0 } else { s[0].as_f64() };
        if err > 1e-11 * smax * ((a.nrows().max(a.ncols())) as f64).sqrt() && smax > 0.0 {
            eprintln!("AUDIT svd {}x{}: residual {:.3e} (smax {:.3e})", a.nrows(), a.ncols(), err, smax);
        }
    }
    let (m, n) = a.dim();
    if m == 0 || n == 0 {
        return true;
    }
    let smax = if s.is_empty() { T::zero() } else { s[0] };
    let mut rng = ChaCha12Rng::seed_from_u64(0x5EED_C4EC);
    let tol = T::of_f64(1e-10 * (m.max(n) as f64).sqrt()) * smax.max(T::min_positive_value());
    for _ in 0..2 {
        let w = Array1::from_shape_fn(n, |_| T::standard_normal(&mut rng));
        let wn = w.dot(&w).sqrt();
        let direct = a.dot(&w);
        let vt_w = v.t().dot(&w);
        let svt_w = &vt_w * s;
        let recon = u.dot(&svt_w);
        let err = (&direct - &recon).mapv(|x| x * x).sum().sqrt();
        if err > tol * wn {
            return false;
        }
    }
    true
}

/// One-sided Jacobi (Hestenes) SVD: slower than the implicit-shift method
/// but unconditionally robust. Used as the fallback when the fast path
/// produces a defective factorization.
fn jacobi_svd_thin<T: Scalar>(a: &Array2<T>) -> (Array2<T>, Array1<T>, Array2<T>) {
    let (m, n) = a.dim();
    if m < n {
        let (u, s, v) = jacobi_svd_thin(&a.t().to_owned());
        return (v, s, u);
    }
    let mut work = a.clone();
    let mut v = Array2::<T>::eye(n);
    let eps = T::epsilon() * T::of_f64(8.0);
    for _ in 0..40 {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let mut app = T::zero();
                let mut aqq = T::zero();
                let mut apq = T::zero();
                for i in 0..m {
                    let (x, y) = (work[[i, p]], work[[i, q]]);
                    app += x * x;
                    aqq += y * y;
                    apq += x * y;
                }
                if apq.abs() <= eps * (app * aqq).sqrt() {
                    continue;
                }
                rotated = true;
                let tau = (aqq - app) / (apq + apq);
                let t = T::one() / (tau.abs() + (T::one() + tau * tau).sqrt());
                let t = if tau >= T::zero() { t } else { -t };
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                for i in 0..m {
                    let (x, y) = (work[[i, p]], work[[i, q]]);
                    work[[i, p]] = c * x - s * y;
                    work[[i, q]] = s * x + c * y;
                }
                for i in 0..n {
                    let (x, y) = (v[[i, p]], v[[i, q]]);
                    v[[i, p]] = c * x - s * y;
                    v[[i, q]] = s * x + c * y;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sigmas: Vec<(T, usize)> = (0..n)
        .map(|j| {
            let col = work.column(j);
            (col.dot(&col).sqrt(), j)
        })
        .collect();
    sigmas.sort_by(|a, b| b.0.partial_cmp(&a.0).expect("finite singular values"));
    let mut u = Array2::zeros((m, n));
    let mut s = Array1::zeros(n);
    let mut vv = Array2::zeros((n, n));
    for (out, &(sigma, j)) in sigmas.iter().enumerate() {
        s[out] = sigma;
        if sigma > T::zero() {
            for i in 0..m {
                u[[i, out]] = work[[i, j]] / sigma;
            }
        }
        for i in 0..n {
            vv[[i, out]] = v[[i, j]];
        }
    }
    (u, s, vv)
}
