//! Thin layer over `nalgebra` for the dense complex kernels used everywhere
//! else: norms, commutators, least squares, eigenvalues and ranks.
//!
//! Singular value and eigenvalue decompositions go through `faer`; the
//! `nalgebra` SVD loses accuracy on tall matrices with clustered singular
//! values.

use nalgebra::{DMatrix, DVector};
pub use num_complex::Complex64 as C64;

pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn identity(dim: usize) -> CMatrix {
    CMatrix::identity(dim, dim)
}

pub fn from_rows(rows: &[&[C64]]) -> CMatrix {
    let n = rows.len();
    let m = rows.first().map_or(0, |r| r.len());
    CMatrix::from_fn(n, m, |i, j| rows[i][j])
}

/// Builds a matrix from a real row-major array; handy for constant operators.
pub fn from_real(n: usize, entries: &[f64]) -> CMatrix {
    assert_eq!(entries.len(), n * n);
    CMatrix::from_fn(n, n, |i, j| c(entries[i * n + j], 0.0))
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

pub fn frobenius(a: &CMatrix) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Largest entry modulus (the "max-entry" norm).
pub fn max_abs(a: &CMatrix) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn is_finite(a: &CMatrix) -> bool {
    a.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

pub fn trace(a: &CMatrix) -> C64 {
    a.diagonal().iter().sum()
}

fn to_faer(a: &CMatrix) -> faer::Mat<C64> {
    faer::Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)])
}

fn from_faer(a: faer::MatRef<'_, C64>) -> CMatrix {
    CMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)])
}

/// Thin SVD `a = U diag(s) V^†`, singular values in non-increasing order.
pub fn svd(a: &CMatrix) -> (CMatrix, Vec<f64>, CMatrix) {
    let (m, n) = a.shape();
    if m == 0 || n == 0 {
        return (CMatrix::zeros(m, 0), Vec::new(), CMatrix::zeros(n, 0));
    }
    let f = to_faer(a).thin_svd().expect("SVD of a finite matrix converges");
    let s = f.S().column_vector().iter().map(|z| z.re).collect();
    (from_faer(f.U()), s, from_faer(f.V()))
}

pub fn singular_values(a: &CMatrix) -> Vec<f64> {
    if a.is_empty() {
        return Vec::new();
    }
    let mut sv: Vec<f64> = to_faer(a)
        .singular_values()
        .expect("SVD of a finite matrix converges");
    sv.sort_by(|x, y| y.total_cmp(x));
    sv
}

/// Numerical rank with threshold `tol * σ_max`.
pub fn rank(a: &CMatrix, tol: f64) -> usize {
    let sv = singular_values(a);
    let Some(&smax) = sv.first() else { return 0 };
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > tol * smax).count()
}

/// Minimal-norm least-squares solution of `a x = b`.
///
/// Singular values below `rcond * σ_max` are treated as zero. Returns the
/// solution together with the Frobenius norm of the residual `a x - b`.
pub fn lstsq(a: &CMatrix, b: &CMatrix, rcond: f64) -> (CMatrix, f64) {
    let (u, s, v) = svd(a);
    let smax = s.first().copied().unwrap_or(0.0);
    let mut x = CMatrix::zeros(a.ncols(), b.ncols());
    if smax > 0.0 {
        let mut ub = u.adjoint() * b;
        for (k, &sk) in s.iter().enumerate() {
            let inv = if sk > rcond * smax { 1.0 / sk } else { 0.0 };
            ub.row_mut(k).scale_mut(inv);
        }
        x = v * ub;
    }
    let res = frobenius(&(a * &x - b));
    (x, res)
}

pub fn inverse(a: &CMatrix) -> Option<CMatrix> {
    a.clone().try_inverse().filter(is_finite)
}

/// Eigenvalues from the complex Schur form.
pub fn eigenvalues(a: &CMatrix) -> Vec<C64> {
    if a.is_empty() {
        return Vec::new();
    }
    to_faer(a).eigenvalues().expect("eigenvalues of a finite matrix converge")
}

/// Coefficients `c_k` of the monic characteristic polynomial
/// `det(λ - A) = Σ c_k λ^k`, lowest degree first.
///
/// Built from the Schur eigenvalues, which is backward stable: the result is
/// the exact characteristic polynomial of a nearby matrix even when the
/// individual eigenvalues of a defective matrix are badly conditioned.
pub fn charpoly(a: &CMatrix) -> Vec<C64> {
    let mut coeffs = vec![ONE];
    for lambda in eigenvalues(a) {
        let mut next = vec![ZERO; coeffs.len() + 1];
        for (k, &ck) in coeffs.iter().enumerate() {
            next[k + 1] += ck;
            next[k] -= ck * lambda;
        }
        coeffs = next;
    }
    coeffs
}

pub fn matrix_power(a: &CMatrix, k: usize) -> CMatrix {
    let mut out = identity(a.nrows());
    for _ in 0..k {
        out = &out * a;
    }
    out
}

/// Rigorous-up-to-rounding upper bound on the spectral radius from
/// Gelfand's formula: `min_j ‖A^{2^j}‖_F^{1/2^j}` over `j ≤ squarings`.
///
/// Unlike the Schur eigenvalues, this bound is not spoiled by the
/// `ε^{1/k}` sensitivity of Jordan blocks, so it certifies nilpotency.
pub fn spectral_radius_bound(a: &CMatrix, squarings: usize) -> f64 {
    let nrm = frobenius(a);
    if nrm == 0.0 {
        return 0.0;
    }
    // m holds A^{2^j} / ‖A^{2^j}‖ and log_norm = ln ‖A^{2^j}‖.
    let mut m = a / C64::from(nrm);
    let mut log_norm = nrm.ln();
    let mut best = nrm;
    let mut power = 1.0_f64;
    for _ in 0..squarings {
        let sq = &m * &m;
        let s = frobenius(&sq);
        if s == 0.0 {
            return 0.0;
        }
        log_norm = 2.0 * log_norm + s.ln();
        power *= 2.0;
        best = best.min((log_norm / power).exp());
        m = sq / C64::from(s);
    }
    best
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn transpose(a: &CMatrix) -> CMatrix {
    a.transpose()
}
