//! Perturbative solution of the Yang–Baxter equation around the permutation,
//! `R(u) = P + P H u + Σ_{n≥2} R_n u^n`, and Cayley–Hamilton fits of the
//! coefficients.

use serde::Serialize;

use crate::linalg::{self, CMatrix, C64, ONE, ZERO};
use crate::rmatrix::RMatrixFn;
use crate::tensor::{self, LocalDensity};
use crate::ybe;
use crate::{Error, Result};

pub const MAX_ORDER: usize = 8;

/// Relative residual of an order-`n` linear system above which the order is
/// reported as obstructed.
pub const OBSTRUCTION_TOL: f64 = 1e-8;

const RCOND: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Obstruction {
    pub order: usize,
    pub residual: f64,
}

#[derive(Clone, Debug)]
pub struct SeriesSolution {
    pub hamiltonian: LocalDensity,
    pub order: usize,
    /// `R_0 … R_k`, where `k = order` unless an obstruction stopped the solve.
    pub coefficients: Vec<CMatrix>,
    /// Relative residual of the linear system at each order, starting at 2.
    pub residuals: Vec<f64>,
    pub obstruction: Option<Obstruction>,
}

impl SeriesSolution {
    pub const GAUGE: &'static str = "R_0 = P, R_1 = P H, R_n (n >= 2) orthogonal to P (minimal-norm solution)";

    pub fn to_rmatrix(&self) -> RMatrixFn {
        RMatrixFn::from_series(format!("series[N={}]", self.coefficients.len() - 1), self.coefficients.clone())
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Coefficients of `u^(n-b) v^b`, `b = 0..=n`, in
/// `R12(u-v) R13(u) R23(v) - R23(v) R13(u) R12(u-v)` for the truncated series.
pub fn ybe_defect(coeffs: &[CMatrix], n: usize) -> Vec<CMatrix> {
    ybe_defect_with(coeffs, n, ybe::embeddings)
}

/// [`ybe_defect`] for any choice of the three embeddings.
pub fn ybe_defect_with(coeffs: &[CMatrix], n: usize, embed: fn(&CMatrix, &CMatrix, &CMatrix) -> (CMatrix, CMatrix, CMatrix)) -> Vec<CMatrix> {
    let emb: Vec<(CMatrix, CMatrix, CMatrix)> = coeffs.iter().take(n + 1).map(|r| embed(r, r, r)).collect();
    let mut out = vec![CMatrix::zeros(8, 8); n + 1];
    for i in 0..emb.len() {
        for j in 0..emb.len().min(n + 1 - i) {
            let k = n - i - j;
            if k >= emb.len() {
                continue;
            }
            let (a, _, _) = &emb[i];
            let (_, b, _) = &emb[j];
            let (_, _, c) = &emb[k];
            let diff = a * b * c - c * b * a;
            for p in 0..=i {
                let s = binomial(i, p) * if p % 2 == 0 { 1.0 } else { -1.0 };
                out[p + k] += &diff * C64::from(s);
            }
        }
    }
    out
}

fn stack(blocks: &[CMatrix]) -> CMatrix {
    let mut v = CMatrix::zeros(64 * blocks.len(), 1);
    for (b, m) in blocks.iter().enumerate() {
        for (e, z) in m.iter().enumerate() {
            v[(64 * b + e, 0)] = *z;
        }
    }
    v
}

/// Solves the YBE order by order through `order`, with `R_0 = P` and
/// `R_1 = P H`. Each `R_n` enters the order-`n` equations linearly; the
/// stacked system is solved by minimal norm, which fixes the scalar gauge
/// `R → f(u) R` by making `R_n` orthogonal to `P`.
pub fn series_solve(h: &LocalDensity, order: usize) -> Result<SeriesSolution> {
    h.expect_range(2)?;
    if !(1..=MAX_ORDER).contains(&order) {
        return Err(Error::SeriesOrder(order));
    }
    let p = tensor::permutation_op();
    let mut coeffs = vec![p.clone(), &p * h.matrix()];
    let mut residuals = Vec::new();
    let mut obstruction = None;
    for n in 2..=order {
        coeffs.push(CMatrix::zeros(4, 4));
        let d0 = stack(&ybe_defect(&coeffs, n));
        let mut jac = CMatrix::zeros(d0.nrows(), 16);
        for e in 0..16 {
            coeffs[n] = CMatrix::zeros(4, 4);
            coeffs[n][(e / 4, e % 4)] = ONE;
            jac.set_column(e, &(stack(&ybe_defect(&coeffs, n)) - &d0).column(0));
        }
        let (x, res) = linalg::lstsq(&jac, &(-&d0), RCOND);
        let rel = res / linalg::frobenius(&d0).max(1.0);
        residuals.push(rel);
        if rel > OBSTRUCTION_TOL {
            coeffs.pop();
            obstruction = Some(Obstruction { order: n, residual: rel });
            break;
        }
        coeffs[n] = CMatrix::from_fn(4, 4, |i, j| x[(4 * i + j, 0)]);
    }
    Ok(SeriesSolution { hamiltonian: h.clone(), order, coefficients: coeffs, residuals, obstruction })
}

/// `P R_n ≈ c_0 + c_1 H + c_2 H² + c_3 H³` for every order.
#[derive(Clone, Debug, Serialize)]
pub struct ChFit {
    pub coefficients: Vec<[C64; 4]>,
    /// `‖P R_n - Σ c_k H^k‖_F / max(1, ‖P R_n‖_F)`.
    pub residuals: Vec<f64>,
}

impl ChFit {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }

    /// `(f_0(0), f_0'(0), f_1(0))`, read off orders 0 and 1.
    pub fn origin_constraints(&self) -> Option<(C64, C64, C64)> {
        let c0 = self.coefficients.first()?;
        let c1 = self.coefficients.get(1)?;
        Some((c0[0], c1[0], c1[1]))
    }
}

/// Least-squares projection of each `P R_n` onto `span{1, H, H², H³}`;
/// minimal-norm coefficients when the powers are dependent. A coefficient
/// equal to `1` or to `H` entry for entry is fitted exactly.
pub fn ch_fit(sol: &SeriesSolution) -> ChFit {
    let p = tensor::permutation_op();
    let h = sol.hamiltonian.matrix();
    let id = linalg::identity(4);
    let powers = [id.clone(), h.clone(), h * h, h * h * h];
    let basis = CMatrix::from_fn(16, 4, |e, k| powers[k][(e / 4, e % 4)]);
    let h_nonzero = h.iter().any(|z| *z != ZERO);
    let mut coefficients = Vec::new();
    let mut residuals = Vec::new();
    for r in &sol.coefficients {
        let m = &p * r;
        let mut c = [ZERO; 4];
        if m == id {
            c[0] = ONE;
        } else if h_nonzero && m == *h {
            c[1] = ONE;
        } else {
            let target = CMatrix::from_fn(16, 1, |e, _| m[(e / 4, e % 4)]);
            let (x, _) = linalg::lstsq(&basis, &target, 1e-10);
            for k in 0..4 {
                c[k] = x[(k, 0)];
            }
        }
        let fit = powers.iter().zip(c).fold(CMatrix::zeros(4, 4), |acc, (pk, ck)| acc + pk * ck);
        residuals.push(linalg::frobenius(&(&m - fit)) / linalg::frobenius(&m).max(1.0));
        coefficients.push(c);
    }
    ChFit { coefficients, residuals }
}

/// Taylor coefficients `R_0 … R_n` of an evaluator from the Cauchy integral
/// on the circle `|u| = radius` with `points` nodes.
pub fn taylor_coefficients(r: &RMatrixFn, n: usize, radius: f64, points: usize) -> Result<Vec<CMatrix>> {
    let nodes: Vec<C64> = (0..points).map(|j| C64::from_polar(radius, std::f64::consts::TAU * j as f64 / points as f64)).collect();
    let values: Vec<CMatrix> = nodes.iter().map(|&z| r.eval(z)).collect::<Result<_>>()?;
    Ok((0..=n)
        .map(|k| {
            let mut acc = CMatrix::zeros(4, 4);
            for (z, v) in nodes.iter().zip(&values) {
                acc += v * z.powi(-(k as i32));
            }
            acc / C64::from(points as f64)
        })
        .collect())
}

#[derive(Clone, Debug, Serialize)]
pub struct GaugeMatch {
    /// `g_0 = 1, g_1, …, g_N`.
    pub g: Vec<C64>,
    /// `sqrt(Σ_n ‖A_n - [g B]_n‖_F²)`.
    pub mismatch: f64,
}

/// Finds the scalar series `g(u)` with `g(0) = 1` that best maps the closed
/// form `b` onto the series solution `a` through order `n`.
pub fn gauge_match(a: &SeriesSolution, b: &RMatrixFn, n: usize) -> Result<GaugeMatch> {
    let n = n.min(a.coefficients.len() - 1);
    let bt = taylor_coefficients(b, n, 0.25, 64)?;
    gauge_match_coefficients(&a.coefficients[..=n], &bt)
}

/// [`gauge_match`] on explicit Taylor coefficients of equal length.
pub fn gauge_match_coefficients(a: &[CMatrix], b: &[CMatrix]) -> Result<GaugeMatch> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::DimensionMismatch { expected: a.len(), found: b.len() });
    }
    let n = a.len() - 1;
    let rows = 16 * (n + 1);
    let mut target = CMatrix::zeros(rows, 1);
    let mut m = CMatrix::zeros(rows, n);
    for order in 0..=n {
        for e in 0..16 {
            let row = 16 * order + e;
            let (i, j) = (e / 4, e % 4);
            target[(row, 0)] = a[order][(i, j)] - b[order][(i, j)];
            for k in 1..=order {
                m[(row, k - 1)] = b[order - k][(i, j)];
            }
        }
    }
    let mut g = vec![ONE];
    let mismatch = if n == 0 {
        linalg::frobenius(&target)
    } else {
        let (x, res) = linalg::lstsq(&m, &target, RCOND);
        g.extend(x.column(0).iter().copied());
        res
    };
    Ok(GaugeMatch { g, mismatch })
}
