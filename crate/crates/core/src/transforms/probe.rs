//! Spectral fingerprints and the numeric search for an explicit local basis
//! change relating two densities.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{apply_local_basis, discrete_transform, BasisTransform, DiscreteTransform};
use crate::charges;
use crate::linalg::{self, CMatrix, CVector, C64, ONE, ZERO};
use crate::tensor::LocalDensity;
use crate::Result;

/// Fingerprints further apart than this are declared inequivalent.
pub const FINGERPRINT_TOL: f64 = 1e-6;

/// Orbits of local basis changes are not closed: a density can be approached
/// by conjugates of another along a degenerating sequence of `V`. Only
/// attained witnesses count, so the Gauss-Newton residual must reach
/// `CONVERGED` and `‖V‖_F²`, which bounds the condition number of `V`, must
/// stay below `MAX_CONDITION`.
const CONVERGED: f64 = 1e-12;
const MAX_CONDITION: f64 = 1e8;

fn admissible(v: &BasisTransform, fit_residual: f64) -> bool {
    let n2 = v.alpha.norm_sqr() + v.beta.norm_sqr() + v.gamma.norm_sqr() + v.delta.norm_sqr();
    fit_residual <= CONVERGED && n2 <= MAX_CONDITION
}

/// Eigenvalues are rounded to this grid before sorting.
const ROUNDING: f64 = 1e-8;

/// Invariants of a two-site density under local basis changes.
///
/// The eigenvalue lists are what gets reported. Comparison goes through the
/// characteristic polynomials instead: they are the same data but remain
/// well conditioned when a matrix has Jordan blocks, where individual
/// eigenvalues move like `ε^{1/k}`.
///
/// The partial traces `tr₁H`, `tr₂H` transform by plain conjugation with `V`,
/// so whether they are scalar matrices is an invariant too. It separates,
/// for example, `XXX + |00⟩⟨singlet|` from XXX, which share every spectrum.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralFingerprint {
    pub hamiltonian: Vec<C64>,
    pub q3: Vec<C64>,
    pub discrete: Vec<Vec<C64>>,
    pub partial_traces: Vec<Vec<C64>>,
    pub partial_scalar: [bool; 2],
    charpolys: Vec<Vec<C64>>,
    radii: Vec<f64>,
}

fn rounded_sorted(m: &CMatrix) -> Vec<C64> {
    let round = |x: f64| {
        let r = (x / ROUNDING).round() * ROUNDING;
        if r == 0.0 {
            0.0
        } else {
            r
        }
    };
    let mut ev: Vec<C64> = linalg::eigenvalues(m).into_iter().map(|z| C64::new(round(z.re), round(z.im))).collect();
    ev.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    ev
}

/// `tr₁` (first factor traced out) and `tr₂` of a 4×4 matrix.
fn partial_traces(m: &CMatrix) -> [CMatrix; 2] {
    let tr1 = CMatrix::from_fn(2, 2, |j, l| m[(j, l)] + m[(2 + j, 2 + l)]);
    let tr2 = CMatrix::from_fn(2, 2, |i, k| m[(2 * i, 2 * k)] + m[(2 * i + 1, 2 * k + 1)]);
    [tr1, tr2]
}

fn is_scalar(m: &CMatrix) -> bool {
    let t = linalg::trace(m) / 2.0;
    let traceless = m - linalg::identity(2) * t;
    linalg::frobenius(&traceless) <= 1e-9 * linalg::frobenius(m).max(1.0)
}

pub fn spectral_fingerprint(h: &LocalDensity) -> Result<SpectralFingerprint> {
    h.expect_range(2)?;
    let q3 = charges::q3_density(h)?;
    let discrete: Vec<CMatrix> =
        DiscreteTransform::ALL.iter().map(|&w| discrete_transform(h, w).map(LocalDensity::into_matrix)).collect::<Result<_>>()?;
    let partial = partial_traces(h.matrix());
    let mut all: Vec<&CMatrix> = vec![h.matrix(), q3.matrix()];
    all.extend(discrete.iter());
    all.extend(partial.iter());
    let charpolys: Vec<Vec<C64>> = all.iter().map(|m| linalg::charpoly(m)).collect();
    let radii = all.iter().map(|m| linalg::eigenvalues(m).iter().map(|z| z.norm()).fold(0.0, f64::max)).collect();
    Ok(SpectralFingerprint {
        hamiltonian: rounded_sorted(h.matrix()),
        q3: rounded_sorted(q3.matrix()),
        discrete: discrete.iter().map(rounded_sorted).collect(),
        partial_traces: partial.iter().map(rounded_sorted).collect(),
        partial_scalar: [is_scalar(&partial[0]), is_scalar(&partial[1])],
        charpolys,
        radii,
    })
}

impl SpectralFingerprint {
    /// Largest scaled difference of characteristic-polynomial coefficients,
    /// or infinity when the discrete invariants differ. Coefficient `c_k` of a
    /// degree-`n` polynomial is divided by `s^{n-k}`, `s` the larger spectral
    /// radius (at least one).
    pub fn distance(&self, other: &Self) -> f64 {
        if self.partial_scalar != other.partial_scalar {
            return f64::INFINITY;
        }
        let mut worst: f64 = 0.0;
        for (k, (p, q)) in self.charpolys.iter().zip(&other.charpolys).enumerate() {
            let s = self.radii[k].max(other.radii[k]).max(1.0);
            let n = p.len() - 1;
            for (j, (x, y)) in p.iter().zip(q).enumerate() {
                worst = worst.max((x - y).norm() / s.powi((n - j) as i32));
            }
        }
        worst
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProbeOptions {
    pub starts: usize,
    pub seed: u64,
    pub max_iterations: usize,
    /// Relative residual `‖H₁^{(V)} - H₂‖ / max(1, ‖H₂‖)` accepted as a witness.
    pub tolerance: f64,
}

impl Default for ProbeOptions {
    fn default() -> Self {
        Self { starts: 32, seed: 0, max_iterations: 100, tolerance: 1e-6 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub transform: BasisTransform,
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Equivalence {
    Equivalent(Witness),
    InequivalentByInvariants { distance: f64 },
    /// Invariants agree but no start converged; `best_residual` is the
    /// smallest relative residual reached.
    Undetermined { best_residual: f64 },
}

/// Damped Gauss-Newton for a holomorphic residual `x ↦ (f(x), J(x))` using
/// minimum-norm least-squares steps. Returns the final point and `‖f‖`.
pub(crate) fn gauss_newton<F>(mut x: Vec<C64>, system: F, target: f64, max_iterations: usize) -> (Vec<C64>, f64)
where
    F: Fn(&[C64]) -> (CVector, CMatrix),
{
    let (mut f, mut jac) = system(&x);
    let mut res = f.norm();
    for _ in 0..max_iterations {
        if res <= target || !res.is_finite() {
            break;
        }
        let rhs = CMatrix::from_iterator(f.len(), 1, f.iter().map(|z| -z));
        let (dx, _) = linalg::lstsq(&jac, &rhs, 1e-12);
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let trial: Vec<C64> = x.iter().enumerate().map(|(i, xi)| xi + dx[(i, 0)] * t).collect();
            let (ft, jt) = system(&trial);
            let rt = ft.norm();
            if rt < res {
                x = trial;
                f = ft;
                jac = jt;
                res = rt;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    (x, res)
}

/// `E_{ij} ⊗ V + V ⊗ E_{ij}`, the derivative of `V⊗V` in the entry `(i, j)`.
pub(crate) fn dkron(v: &CMatrix, k: usize) -> CMatrix {
    let mut e = CMatrix::zeros(2, 2);
    e[(k / 2, k % 2)] = ONE;
    linalg::kron(&e, v) + linalg::kron(v, &e)
}

pub(crate) fn flatten(m: &CMatrix) -> impl Iterator<Item = C64> + '_ {
    (0..m.nrows()).flat_map(move |i| (0..m.ncols()).map(move |j| m[(i, j)]))
}

pub(crate) fn random_start(rng: &mut ChaCha8Rng, n: usize) -> Vec<C64> {
    (0..n).map(|_| C64::new(StandardNormal.sample(rng), StandardNormal.sample(rng))).collect()
}

/// Relative residual of `(V⊗V) H₁ (V⊗V)^{-1} = H₂`.
fn conjugation_residual(h1: &LocalDensity, h2: &LocalDensity, v: &BasisTransform) -> f64 {
    let hv = apply_local_basis(h1, v).expect("4x4 density");
    linalg::frobenius(&(hv.matrix() - h2.matrix())) / h2.norm().max(1.0)
}

/// Gauss-Newton over `V` for `(V⊗V) H₁ = H₂ (V⊗V)`, `det V = 1`. The first
/// start is the identity, the rest are seeded Gaussian matrices; starts run in
/// parallel and the first success in start order is returned. On failure the
/// best relative residual is returned as the error value.
pub fn witness_search(h1: &LocalDensity, h2: &LocalDensity, opts: &ProbeOptions) -> Result<std::result::Result<Witness, f64>> {
    h1.expect_range(2)?;
    h2.expect_range(2)?;
    let scale = h2.norm().max(1.0);
    let (a, b) = (h1.matrix() / C64::from(scale), h2.matrix() / C64::from(scale));
    let system = |x: &[C64]| {
        let v = linalg::from_rows(&[&[x[0], x[1]], &[x[2], x[3]]]);
        let w = linalg::kron(&v, &v);
        let r = &w * &a - &b * &w;
        let det = x[0] * x[3] - x[1] * x[2];
        let f = CVector::from_iterator(17, flatten(&r).chain(std::iter::once(det - ONE)));
        let mut jac = CMatrix::zeros(17, 4);
        for k in 0..4 {
            let dw = dkron(&v, k);
            let col = &dw * &a - &b * &dw;
            for (i, z) in flatten(&col).enumerate() {
                jac[(i, k)] = z;
            }
        }
        let ddet = [x[3], -x[2], -x[1], x[0]];
        for k in 0..4 {
            jac[(16, k)] = ddet[k];
        }
        (f, jac)
    };
    let outcomes: Vec<std::result::Result<Witness, f64>> = (0..opts.starts.max(1))
        .into_par_iter()
        .map(|s| {
            let x0 = if s == 0 {
                vec![ONE, ZERO, ZERO, ONE]
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_mul(0x2545_F491_4F6C_DD1D).wrapping_add(s as u64));
                random_start(&mut rng, 4)
            };
            let (x, fit) = gauss_newton(x0, system, 1e-15, opts.max_iterations);
            match BasisTransform::normalized(x[0], x[1], x[2], x[3]) {
                Ok(v) => {
                    let residual = conjugation_residual(h1, h2, &v);
                    if residual < opts.tolerance && admissible(&v, fit) {
                        Ok(Witness { transform: v, residual })
                    } else {
                        Err(residual)
                    }
                }
                Err(_) => Err(f64::INFINITY),
            }
        })
        .collect();
    let best = outcomes.iter().filter_map(|o| o.as_ref().err().copied()).fold(f64::INFINITY, f64::min);
    Ok(outcomes.into_iter().find_map(|o| o.ok()).ok_or(best))
}

/// Fingerprint comparison followed, if inconclusive, by [`witness_search`].
/// A failed search yields `Undetermined`, never inequivalence.
pub fn equivalence_probe(h1: &LocalDensity, h2: &LocalDensity, opts: &ProbeOptions) -> Result<Equivalence> {
    let distance = spectral_fingerprint(h1)?.distance(&spectral_fingerprint(h2)?);
    if distance > FINGERPRINT_TOL {
        return Ok(Equivalence::InequivalentByInvariants { distance });
    }
    Ok(match witness_search(h1, h2, opts)? {
        Ok(w) => Equivalence::Equivalent(w),
        Err(best_residual) => Equivalence::Undetermined { best_residual },
    })
}

/// Positions outside the eight-vertex pattern (odd total charge).
fn off_pattern() -> impl Iterator<Item = (usize, usize)> {
    (0..4).flat_map(|i: usize| (0..4).map(move |j: usize| (i, j))).filter(|&(i, j)| (i.count_ones() + j.count_ones()) % 2 == 1)
}

/// Searches for `V` making `(V⊗V) H (V⊗V)^{-1}` of eight-vertex (XYZ) form.
/// Returns the witness, or the best relative size of the offending entries.
pub fn eight_vertex_gauge(h: &LocalDensity, opts: &ProbeOptions) -> Result<std::result::Result<Witness, f64>> {
    h.expect_range(2)?;
    let scale = h.norm().max(1.0);
    let a = h.matrix() / C64::from(scale);
    // Entries of W A adj(W), with adj(V) = [[δ, -β], [-γ, α]], are quartic and
    // holomorphic in V.
    let system = |x: &[C64]| {
        let v = linalg::from_rows(&[&[x[0], x[1]], &[x[2], x[3]]]);
        let adj = linalg::from_rows(&[&[x[3], -x[1]], &[-x[2], x[0]]]);
        let w = linalg::kron(&v, &v);
        let wa = linalg::kron(&adj, &adj);
        let m = &w * &a * &wa;
        let det = x[0] * x[3] - x[1] * x[2];
        let rows: Vec<(usize, usize)> = off_pattern().collect();
        let mut f = CVector::zeros(rows.len() + 1);
        let mut jac = CMatrix::zeros(rows.len() + 1, 4);
        for (r, &(i, j)) in rows.iter().enumerate() {
            f[r] = m[(i, j)];
        }
        f[rows.len()] = det - ONE;
        // ∂adj/∂x_k permutes and negates the entries of V.
        let dadj = |k: usize| {
            let mut e = CMatrix::zeros(2, 2);
            match k {
                0 => e[(1, 1)] = ONE,
                1 => e[(0, 1)] = -ONE,
                2 => e[(1, 0)] = -ONE,
                _ => e[(0, 0)] = ONE,
            }
            linalg::kron(&e, &adj) + linalg::kron(&adj, &e)
        };
        for k in 0..4 {
            let dm = dkron(&v, k) * &a * &wa + &w * &a * dadj(k);
            for (r, &(i, j)) in rows.iter().enumerate() {
                jac[(r, k)] = dm[(i, j)];
            }
        }
        let ddet = [x[3], -x[2], -x[1], x[0]];
        for k in 0..4 {
            jac[(rows.len(), k)] = ddet[k];
        }
        (f, jac)
    };
    let outcomes: Vec<std::result::Result<Witness, f64>> = (0..opts.starts.max(1))
        .into_par_iter()
        .map(|s| {
            let x0 = if s == 0 {
                vec![ONE, ZERO, ZERO, ONE]
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_mul(0x9E37_79B9).wrapping_add(s as u64));
                random_start(&mut rng, 4)
            };
            let (x, fit) = gauss_newton(x0, system, 1e-15, opts.max_iterations);
            let Ok(v) = BasisTransform::normalized(x[0], x[1], x[2], x[3]) else {
                return Err(f64::INFINITY);
            };
            let hv = apply_local_basis(h, &v).expect("4x4 density");
            let off = off_pattern().map(|(i, j)| hv.matrix()[(i, j)].norm_sqr()).sum::<f64>().sqrt() / hv.norm().max(1.0);
            if off < opts.tolerance && admissible(&v, fit) {
                Ok(Witness { transform: v, residual: off })
            } else {
                Err(off)
            }
        })
        .collect();
    let best = outcomes.iter().filter_map(|o| o.as_ref().err().copied()).fold(f64::INFINITY, f64::min);
    Ok(outcomes.into_iter().find_map(|o| o.ok()).ok_or(best))
}
