//! Identifications between integrable densities: local basis changes
//! `H ↦ (V⊗V) H (V⊗V)^{-1}`, the discrete maps built from the swap and the
//! transpose, affine normalisation, and the Type I / Type II normal forms.

mod identify;
mod probe;

pub use identify::{identify_family, FamilyMatch, IdentifyOptions};
pub use probe::{
    eight_vertex_gauge, equivalence_probe, spectral_fingerprint, witness_search, Equivalence, ProbeOptions,
    SpectralFingerprint, Witness, FINGERPRINT_TOL,
};

use serde::{Deserialize, Serialize};

use crate::linalg::{self, CMatrix, C64, ONE, ZERO};
use crate::pauli::{self, PauliCoeffs, MINUS, PLUS, Z};
use crate::rmatrix::RMatrixFn;
use crate::tensor::{self, LocalDensity};
use crate::{Error, Result};

/// Allowed deviation of `αδ - βγ` from one.
pub const DET_TOL: f64 = 1e-12;

/// `V = [[α, β], [γ, δ]]` with unit determinant.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BasisTransform {
    pub alpha: C64,
    pub beta: C64,
    pub gamma: C64,
    pub delta: C64,
}

impl BasisTransform {
    pub fn new(alpha: C64, beta: C64, gamma: C64, delta: C64) -> Result<Self> {
        let v = Self { alpha, beta, gamma, delta };
        let det = v.det();
        if !det.is_finite() || det.norm() == 0.0 {
            return Err(Error::SingularTransform);
        }
        if (det - ONE).norm() > DET_TOL {
            return Err(Error::Input(format!("basis transformation has determinant {det}, expected 1")));
        }
        Ok(v)
    }

    /// Rescales an invertible matrix by `1/sqrt(det)`.
    pub fn normalized(alpha: C64, beta: C64, gamma: C64, delta: C64) -> Result<Self> {
        let det = alpha * delta - beta * gamma;
        let size = alpha.norm().max(beta.norm()).max(gamma.norm()).max(delta.norm());
        if !det.is_finite() || det.norm() <= 1e-14 * size * size {
            return Err(Error::SingularTransform);
        }
        let s = det.sqrt().inv();
        Self::new(alpha * s, beta * s, gamma * s, delta * s)
    }

    pub fn from_matrix(m: &CMatrix) -> Result<Self> {
        if m.shape() != (2, 2) {
            return Err(Error::DimensionMismatch { expected: 2, found: m.nrows() });
        }
        Self::new(m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)])
    }

    pub fn identity() -> Self {
        Self { alpha: ONE, beta: ZERO, gamma: ZERO, delta: ONE }
    }

    pub fn det(&self) -> C64 {
        self.alpha * self.delta - self.beta * self.gamma
    }

    pub fn matrix(&self) -> CMatrix {
        linalg::from_rows(&[&[self.alpha, self.beta], &[self.gamma, self.delta]])
    }

    /// Adjugate; the inverse because the determinant is one.
    pub fn inverse(&self) -> Self {
        Self { alpha: self.delta, beta: -self.beta, gamma: -self.gamma, delta: self.alpha }
    }

    /// `self · other`.
    pub fn compose(&self, other: &Self) -> Self {
        let m = self.matrix() * other.matrix();
        Self { alpha: m[(0, 0)], beta: m[(0, 1)], gamma: m[(1, 0)], delta: m[(1, 1)] }
    }

    /// `V^{⊗sites}`.
    pub fn power(&self, sites: usize) -> CMatrix {
        let v = self.matrix();
        (1..sites).fold(v.clone(), |acc, _| linalg::kron(&acc, &v))
    }
}

/// `(V⊗…⊗V) H (V⊗…⊗V)^{-1}`; works for any range.
pub fn apply_local_basis(h: &LocalDensity, v: &BasisTransform) -> Result<LocalDensity> {
    let w = v.power(h.range());
    let w_inv = v.inverse().power(h.range());
    LocalDensity::new(&w * h.matrix() * w_inv)
}

/// Pointwise `(V⊗V) R(u) (V⊗V)^{-1}`.
pub fn apply_local_basis_r(r: &RMatrixFn, v: &BasisTransform) -> RMatrixFn {
    let w = v.power(2);
    let w_inv = v.inverse().power(2);
    r.map(format!("{}^V", r.label()), move |m| &w * m * &w_inv)
}

/// The discrete identifications. Each acts on densities and has an R-matrix
/// counterpart:
///
/// | density  | R-matrix      |
/// |----------|---------------|
/// | `PHP`    | `P R(u) P`    |
/// | `Hᵀ`     | `P R(u)ᵀ P`   |
/// | `PHᵀP`   | `R(u)ᵀ`       |
///
/// Note that the plain transpose `R(u)ᵀ` corresponds to `PHᵀP`, not `Hᵀ`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DiscreteTransform {
    Php,
    Ht,
    Phtp,
}

impl DiscreteTransform {
    pub const ALL: [DiscreteTransform; 3] = [DiscreteTransform::Php, DiscreteTransform::Ht, DiscreteTransform::Phtp];

    pub fn name(self) -> &'static str {
        match self {
            DiscreteTransform::Php => "PHP",
            DiscreteTransform::Ht => "HT",
            DiscreteTransform::Phtp => "PHTP",
        }
    }
}

pub fn discrete_transform(h: &LocalDensity, which: DiscreteTransform) -> Result<LocalDensity> {
    h.expect_range(2)?;
    let p = tensor::permutation_op();
    let m = h.matrix();
    let out = match which {
        DiscreteTransform::Php => &p * m * &p,
        DiscreteTransform::Ht => m.transpose(),
        DiscreteTransform::Phtp => &p * m.transpose() * &p,
    };
    LocalDensity::new(out)
}

/// The R-matrix counterpart of [`discrete_transform`].
pub fn discrete_transform_r(r: &RMatrixFn, which: DiscreteTransform) -> RMatrixFn {
    let p = tensor::permutation_op();
    let label = format!("{}[{}]", r.label(), which.name());
    match which {
        DiscreteTransform::Php => r.map(label, move |m| &p * m * &p),
        DiscreteTransform::Ht => r.map(label, move |m| &p * m.transpose() * &p),
        DiscreteTransform::Phtp => r.map(label, |m| m.transpose()),
    }
}

/// `scale · H + shift · 1`.
pub fn normalize(h: &LocalDensity, scale: C64, shift: C64) -> Result<LocalDensity> {
    if scale.norm() == 0.0 {
        return Err(Error::ZeroScale);
    }
    LocalDensity::new(h.matrix() * scale + linalg::identity(h.dim()) * shift)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum NormalKind {
    /// `A₊₊ = A₋₋ = 0`.
    TypeI,
    /// `A₊₊ = 1`, `A₋₋ = 0`, `A_{±z} = -A_{z±}`, `A_zz = A₊₋ + A₋₊`.
    TypeII,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalFormTag {
    pub kind: NormalKind,
    pub transform: BasisTransform,
}

/// Coefficient with the third Pauli index rescaled to `z = σ3/2`.
fn az(a: &PauliCoeffs, i: usize, j: usize) -> C64 {
    let k = if i == Z { 2.0 } else { 1.0 } * if j == Z { 2.0 } else { 1.0 };
    a.get(i, j) * k
}

/// Coefficients `c_j` of the binary quartic `A'₊₊ = Σ_j c_j α^{4-j} β^j`
/// giving the new `A₊₊` after a change of basis with first row `(α, β)`.
/// The same form evaluated on the second row `(γ, δ)` gives `A'₋₋`.
pub fn gauge_quartic(a: &PauliCoeffs) -> [C64; 5] {
    [
        a.get(PLUS, PLUS),
        -(az(a, PLUS, Z) + az(a, Z, PLUS)),
        -(a.get(PLUS, MINUS) + a.get(MINUS, PLUS) - az(a, Z, Z)),
        az(a, MINUS, Z) + az(a, Z, MINUS),
        a.get(MINUS, MINUS),
    ]
}

pub fn eval_quartic(c: &[C64; 5], x: C64, y: C64) -> C64 {
    (0..5).map(|j| c[j] * x.powu(4 - j as u32) * y.powu(j as u32)).sum()
}

/// Largest violation of the defining equalities of `kind`.
pub fn normal_form_residual(a: &PauliCoeffs, kind: NormalKind) -> f64 {
    let pp = a.get(PLUS, PLUS);
    let mm = a.get(MINUS, MINUS).norm();
    match kind {
        NormalKind::TypeI => pp.norm().max(mm),
        NormalKind::TypeII => [
            (pp - ONE).norm(),
            mm,
            (az(a, PLUS, Z) + az(a, Z, PLUS)).norm(),
            (az(a, MINUS, Z) + az(a, Z, MINUS)).norm(),
            (az(a, Z, Z) - a.get(PLUS, MINUS) - a.get(MINUS, PLUS)).norm(),
        ]
        .into_iter()
        .fold(0.0, f64::max),
    }
}

/// Relative size of the 2×2 minors of the Hankel pattern of a binary quartic;
/// zero exactly for perfect fourth powers `k (pα + qβ)^4`.
fn fourth_power_defect(c: &[C64; 5]) -> f64 {
    let a: [C64; 5] = [c[0], c[1] / 4.0, c[2] / 6.0, c[3] / 4.0, c[4]];
    let size = a.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if size == 0.0 {
        return 0.0;
    }
    let mut worst: f64 = 0.0;
    for j in 0..4 {
        for k in j + 1..4 {
            worst = worst.max((a[j] * a[k + 1] - a[j + 1] * a[k]).norm());
        }
    }
    worst / (size * size)
}

/// Tolerance on [`fourth_power_defect`] for the Type II branch.
const FOURTH_POWER_TOL: f64 = 1e-11;

/// Projective roots of the quartic as unit vectors `(x, y)`, sorted by `|y/x|`
/// (roots at infinity last), ties broken by the phase of `y/x`.
fn quartic_roots(c: &[C64; 5]) -> Vec<(C64, C64)> {
    let size = c.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let degree = (0..5).rev().find(|&j| c[j].norm() > 1e-13 * size).unwrap_or(0);
    let mut ratios: Vec<C64> = Vec::new();
    if degree > 0 {
        let lead = c[degree];
        let comp = CMatrix::from_fn(degree, degree, |i, j| {
            if i == 0 {
                -c[degree - 1 - j] / lead
            } else if i == j + 1 {
                ONE
            } else {
                ZERO
            }
        });
        let poly = |t: C64| (0..=degree).rev().fold(ZERO, |acc, j| acc * t + c[j]);
        let deriv = |t: C64| (1..=degree).rev().fold(ZERO, |acc, j| acc * t + c[j] * j as f64);
        for mut t in linalg::eigenvalues(&comp) {
            for _ in 0..3 {
                let d = deriv(t);
                if d.norm() == 0.0 {
                    break;
                }
                let next = t - poly(t) / d;
                if poly(next).norm() >= poly(t).norm() {
                    break;
                }
                t = next;
            }
            ratios.push(t);
        }
    }
    ratios.sort_by(|a, b| a.norm().total_cmp(&b.norm()).then(a.arg().total_cmp(&b.arg())));
    let mut roots: Vec<(C64, C64)> = ratios
        .into_iter()
        .map(|t| {
            let n = (1.0 + t.norm_sqr()).sqrt();
            (ONE / n, t / n)
        })
        .collect();
    roots.resize(4, (ZERO, ONE));
    roots
}

/// Chordal distance between projective points given as unit vectors.
fn chordal(a: (C64, C64), b: (C64, C64)) -> f64 {
    (a.0 * b.1 - a.1 * b.0).norm()
}

/// Brings a two-site density into Type I or Type II form by a local basis
/// change. Type II is returned exactly when the gauge quartic is a non-zero
/// perfect fourth power: then every admissible `V` leaves one of `A'₊₊`,
/// `A'₋₋` non-zero, and `V` is chosen so that `A'₊₊ = 1`, `A'₋₋ = 0`.
/// Otherwise the two rows of `V` are two distinct roots of the quartic, the
/// first being the root of smallest `|β/α|`.
pub fn type_reduction(h: &LocalDensity) -> Result<(LocalDensity, NormalFormTag)> {
    let a = pauli::decompose_to_pauli(h)?;
    let c = gauge_quartic(&a);
    let size = c.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let tiny = 1e-14 * a.norm().max(1.0);
    let v = if c[0].norm() <= tiny && c[4].norm() <= tiny {
        (BasisTransform::identity(), NormalKind::TypeI)
    } else if size > 0.0 && fourth_power_defect(&c) <= FOURTH_POWER_TOL {
        // c_j = k C(4,j) p^{4-j} q^j
        let (p, q, k) = if c[0].norm() >= c[4].norm() { (ONE, c[1] / (c[0] * 4.0), c[0]) } else { (c[3] / (c[4] * 4.0), ONE, c[4]) };
        let k4 = k.powf(0.25);
        let n2 = p.norm_sqr() + q.norm_sqr();
        let (alpha, beta) = (p.conj() / (k4 * n2), q.conj() / (k4 * n2));
        let (gamma, delta) = (-k4 * q, k4 * p);
        (BasisTransform::normalized(alpha, beta, gamma, delta)?, NormalKind::TypeII)
    } else {
        let roots = quartic_roots(&c);
        let first = roots[0];
        let second = roots[1..]
            .iter()
            .copied()
            .find(|&r| chordal(first, r) > 1e-6)
            .unwrap_or_else(|| roots[1..].iter().copied().max_by(|x, y| chordal(first, *x).total_cmp(&chordal(first, *y))).expect("four roots"));
        (BasisTransform::normalized(first.0, first.1, second.0, second.1)?, NormalKind::TypeI)
    };
    let (transform, kind) = v;
    Ok((apply_local_basis(h, &transform)?, NormalFormTag { kind, transform }))
}
