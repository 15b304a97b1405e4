//! The fourteen integrable two-site families: eight of eight-vertex (XYZ)
//! type and six classes with closed-form R-matrices.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::exact;
use crate::linalg::{self, CMatrix, C64, ONE, ZERO};
use crate::poly::SymPoly;
use crate::rmatrix::{Provenance, RMatrixFn};
use crate::tensor::{self, LocalDensity};
use crate::{Error, Result};

/// Below this modulus removable singularities switch to their Taylor series.
pub const TAYLOR_THRESHOLD: f64 = 1e-4;

/// Tolerance for the polynomial constraint of Class 1.
pub const CONSTRAINT_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Family {
    XYZ1,
    XYZ2,
    XYZ3,
    XYZ4,
    XYZ5,
    XYZ6,
    XYZ7,
    XYZ8,
    C1,
    C2,
    C3,
    C4,
    C5,
    C6,
}

impl Family {
    pub const ALL: [Family; 14] = [
        Family::XYZ1,
        Family::XYZ2,
        Family::XYZ3,
        Family::XYZ4,
        Family::XYZ5,
        Family::XYZ6,
        Family::XYZ7,
        Family::XYZ8,
        Family::C1,
        Family::C2,
        Family::C3,
        Family::C4,
        Family::C5,
        Family::C6,
    ];

    pub const XYZ: [Family; 8] =
        [Family::XYZ1, Family::XYZ2, Family::XYZ3, Family::XYZ4, Family::XYZ5, Family::XYZ6, Family::XYZ7, Family::XYZ8];

    pub const CLASSES: [Family; 6] = [Family::C1, Family::C2, Family::C3, Family::C4, Family::C5, Family::C6];

    pub fn id(self) -> &'static str {
        match self {
            Family::XYZ1 => "XYZ1",
            Family::XYZ2 => "XYZ2",
            Family::XYZ3 => "XYZ3",
            Family::XYZ4 => "XYZ4",
            Family::XYZ5 => "XYZ5",
            Family::XYZ6 => "XYZ6",
            Family::XYZ7 => "XYZ7",
            Family::XYZ8 => "XYZ8",
            Family::C1 => "C1",
            Family::C2 => "C2",
            Family::C3 => "C3",
            Family::C4 => "C4",
            Family::C5 => "C5",
            Family::C6 => "C6",
        }
    }

    pub fn param_names(self) -> &'static [&'static str] {
        match self {
            Family::XYZ1 => &["a1", "b1", "b2", "a2"],
            Family::XYZ2 | Family::XYZ3 => &["a1", "b1", "b2", "c1", "c2"],
            Family::XYZ4 => &["a1", "b1", "c1", "d1"],
            Family::XYZ5 => &["a1", "c1", "c2", "d1"],
            Family::XYZ6 | Family::XYZ7 => &["a1", "b1", "c1", "d1", "d2"],
            Family::XYZ8 => &["a1", "b1", "d1", "d2"],
            Family::C1 | Family::C2 => &["a1", "a2", "a3", "a4", "a5"],
            Family::C3 | Family::C5 => &["a1", "a2", "a3"],
            Family::C4 => &["a1", "a2", "a3", "a4"],
            Family::C6 => &["a1", "a2"],
        }
    }

    pub fn n_params(self) -> usize {
        self.param_names().len()
    }

    pub fn param_index(self, name: &str) -> Option<usize> {
        self.param_names().iter().position(|&n| n == name)
    }

    /// Polynomial constraints as `expr = 0` strings.
    pub fn constraints(self) -> &'static [&'static str] {
        match self {
            Family::C1 => &["a1*a3 - a2*a4 = 0"],
            _ => &[],
        }
    }

    pub fn has_closed_r(self) -> bool {
        matches!(self, Family::C1 | Family::C2 | Family::C3 | Family::C4 | Family::C5 | Family::C6)
    }

    pub fn is_xyz(self) -> bool {
        !self.has_closed_r()
    }

    /// Entries of the Hamiltonian density as polynomials in the parameters
    /// (variable `i` is `param_names()[i]`), row-major.
    pub fn symbolic_hamiltonian(self) -> [SymPoly; 16] {
        let v = SymPoly::var;
        let z = SymPoly::default;
        let n = SymPoly::integer;
        let (a1, a2, a3, a4, a5) = (v(0), v(1), v(2), v(3), v(4));
        let rows: [[SymPoly; 4]; 4] = match self {
            Family::XYZ1 => {
                let (a1, b1, b2, a2) = (v(0), v(1), v(2), v(3));
                [[a1, z(), z(), z()], [z(), b1, z(), z()], [z(), z(), b2, z()], [z(), z(), z(), a2]]
            }
            Family::XYZ2 | Family::XYZ3 => {
                let (a1, b1, b2, c1, c2) = (v(0), v(1), v(2), v(3), v(4));
                let corner = if self == Family::XYZ2 { a1.clone() } else { b1.clone() + b2.clone() - a1.clone() };
                [[a1, z(), z(), z()], [z(), b1, c1, z()], [z(), c2, b2, z()], [z(), z(), z(), corner]]
            }
            Family::XYZ4 => {
                let (a1, b1, c1, d1) = (v(0), v(1), v(2), v(3));
                [
                    [a1.clone(), z(), z(), d1],
                    [z(), a1.clone() + b1.clone(), c1.clone(), z()],
                    [z(), -c1, a1.clone() - b1, z()],
                    [z(), z(), z(), a1],
                ]
            }
            Family::XYZ5 => {
                let (a1, c1, c2, d1) = (v(0), v(1), v(2), v(3));
                [
                    [a1.clone(), z(), z(), d1],
                    [z(), a1.clone() - c2.clone(), c1.clone(), z()],
                    [z(), c2.clone(), a1.clone() - c1.clone(), z()],
                    [z(), z(), z(), a1 - c1 - c2],
                ]
            }
            Family::XYZ6 | Family::XYZ7 => {
                let (a1, b1, c1, d1, d2) = (v(0), v(1), v(2), v(3), v(4));
                let corner = if self == Family::XYZ6 { a1.clone() } else { n(2) * b1.clone() - a1.clone() };
                [[a1, z(), z(), d1], [z(), b1.clone(), c1.clone(), z()], [z(), c1, b1, z()], [d2, z(), z(), corner]]
            }
            Family::XYZ8 => {
                let (a1, b1, d1, d2) = (v(0), v(1), v(2), v(3));
                [[a1.clone(), z(), z(), d1], [z(), a1.clone(), b1.clone(), z()], [z(), -b1, a1.clone(), z()], [d2, z(), z(), a1]]
            }
            Family::C1 => [
                [z(), a1, a2, z()],
                [z(), a5.clone(), z(), a3],
                [z(), z(), -a5, a4],
                [z(), z(), z(), z()],
            ],
            Family::C2 => [
                [z(), a2.clone(), a3.clone() - a2, a5],
                [z(), a1.clone(), z(), a4.clone()],
                [z(), z(), -a1, a3 - a4],
                [z(), z(), z(), z()],
            ],
            Family::C3 => [
                [-a1.clone(), (n(2) * a1.clone() - a2.clone()) * a3.clone(), (n(2) * a1.clone() + a2.clone()) * a3, z()],
                [z(), a1.clone() - a2.clone(), z(), z()],
                [z(), z(), a1.clone() + a2, z()],
                [z(), z(), z(), -a1],
            ],
            Family::C4 => [
                [a1.clone(), a2.clone(), a2, a3],
                [z(), -a1.clone(), z(), a4.clone()],
                [z(), z(), -a1.clone(), a4],
                [z(), z(), z(), a1],
            ],
            Family::C5 => [
                [a1.clone(), a2.clone(), -a2, z()],
                [z(), -a1.clone(), n(2) * a1.clone(), a3.clone()],
                [z(), n(2) * a1.clone(), -a1.clone(), -a3],
                [z(), z(), z(), a1],
            ],
            Family::C6 => [
                [a1.clone(), a2.clone(), a2.clone(), z()],
                [z(), -a1.clone(), n(2) * a1.clone(), -a2.clone()],
                [z(), n(2) * a1.clone(), -a1.clone(), -a2],
                [z(), z(), z(), a1],
            ],
        };
        let mut it = rows.into_iter().flatten();
        std::array::from_fn(|_| it.next().expect("16 entries"))
    }

    /// Symbolic constraint polynomials (each must vanish).
    pub fn constraint_polys(self) -> Vec<SymPoly> {
        match self {
            Family::C1 => vec![SymPoly::var(0) * SymPoly::var(2) - SymPoly::var(1) * SymPoly::var(3)],
            _ => Vec::new(),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().to_ascii_uppercase();
        let t = t.strip_prefix("CLASS").map(|r| format!("C{}", r.trim())).unwrap_or(t);
        Family::ALL.iter().copied().find(|f| f.id() == t).ok_or_else(|| Error::UnknownFamily(s.to_string()))
    }
}

/// Parameter values of one family member, in `param_names` order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamVector {
    family: Family,
    values: Vec<C64>,
}

impl ParamVector {
    pub fn new(family: Family, values: Vec<C64>) -> Result<Self> {
        if values.len() != family.n_params() {
            return Err(Error::Params(format!("{} takes {} parameters, got {}", family, family.n_params(), values.len())));
        }
        if values.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        let p = Self { family, values };
        p.check_constraints()?;
        Ok(p)
    }

    pub fn from_real(family: Family, values: &[f64]) -> Result<Self> {
        Self::new(family, values.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    /// Builds a vector from `(name, value)` pairs; unnamed parameters are zero.
    pub fn from_named(family: Family, named: &[(&str, C64)]) -> Result<Self> {
        let mut values = vec![ZERO; family.n_params()];
        for (name, v) in named {
            let i = family.param_index(name).ok_or_else(|| Error::Params(format!("{family} has no parameter '{name}'")))?;
            values[i] = *v;
        }
        Self::new(family, values)
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn get(&self, name: &str) -> Option<C64> {
        self.family.param_index(name).map(|i| self.values[i])
    }

    fn check_constraints(&self) -> Result<()> {
        for (poly, text) in self.family.constraint_polys().iter().zip(self.family.constraints()) {
            let r = poly.eval(&self.values).norm();
            let scale = self.values.iter().map(|z| z.norm_sqr()).fold(1.0, f64::max);
            if r > CONSTRAINT_TOL * scale {
                return Err(Error::Constraint { constraint: text.to_string(), residual: r });
            }
        }
        Ok(())
    }
}

/// Deterministic pseudo-random parameters: real and imaginary parts uniform in
/// `[-1, 1]`, with the Class 1 constraint solved for `a4`.
pub fn sample_params(family: Family, seed: u64) -> ParamVector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (family as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    let mut draw = || C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    let mut values: Vec<C64> = (0..family.n_params()).map(|_| draw()).collect();
    if family == Family::C1 {
        while values[1].norm() < 0.2 {
            values[1] = draw();
        }
        values[3] = values[0] * values[2] / values[1];
    }
    ParamVector::new(family, values).expect("constraint solved by construction")
}

pub struct FamilyInfo {
    pub family: Family,
    pub param_names: &'static [&'static str],
    pub constraints: &'static [&'static str],
    pub has_closed_r: bool,
}

pub fn list_families() -> Vec<FamilyInfo> {
    Family::ALL
        .iter()
        .map(|&f| FamilyInfo { family: f, param_names: f.param_names(), constraints: f.constraints(), has_closed_r: f.has_closed_r() })
        .collect()
}

/// The Hamiltonian density of a family member.
pub fn hamiltonian(params: &ParamVector) -> LocalDensity {
    let entries = params.family.symbolic_hamiltonian();
    let m = CMatrix::from_fn(4, 4, |i, j| entries[4 * i + j].eval(&params.values));
    LocalDensity::new(m).expect("finite 4x4")
}

/// `(e^x - 1) / x`
fn expm1_over(x: C64) -> C64 {
    if x.norm() < TAYLOR_THRESHOLD {
        ONE + x / 2.0 + x * x / 6.0 + x * x * x / 24.0
    } else {
        (x.exp() - 1.0) / x
    }
}

/// `(cosh x - 1) / x^2`
fn coshm1_over_sq(x: C64) -> C64 {
    if x.norm() < TAYLOR_THRESHOLD {
        let x2 = x * x;
        C64::new(0.5, 0.0) + x2 / 24.0 + x2 * x2 / 720.0
    } else {
        (x.cosh() - 1.0) / (x * x)
    }
}

/// `sinh x / x`
fn sinhc(x: C64) -> C64 {
    if x.norm() < TAYLOR_THRESHOLD {
        let x2 = x * x;
        ONE + x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sinh() / x
    }
}

/// `x / sinh x`, singular at `x = iπk`, `k ≠ 0`.
fn x_over_sinh(x: C64) -> Option<C64> {
    if x.norm() < TAYLOR_THRESHOLD {
        let x2 = x * x;
        return Some(ONE - x2 / 6.0 + x2 * x2 * (7.0 / 360.0));
    }
    let s = x.sinh();
    (s.norm() > 1e-14 * (1.0 + x.norm())).then(|| x / s)
}

/// `tanh(x/2) / x`, singular where `cosh(x/2) = 0`.
fn tanh_half_over(x: C64) -> Option<C64> {
    if x.norm() < TAYLOR_THRESHOLD {
        let x2 = x * x;
        return Some(C64::new(0.5, 0.0) - x2 / 24.0 + x2 * x2 / 240.0);
    }
    let ch = (x / 2.0).cosh();
    (ch.norm() > 1e-14).then(|| (x / 2.0).tanh() / x)
}

fn mat(e: [[C64; 4]; 4]) -> CMatrix {
    CMatrix::from_fn(4, 4, |i, j| e[i][j])
}

/// Closed-form R-matrix of Classes 1 to 6.
pub fn rmatrix(params: &ParamVector) -> Result<RMatrixFn> {
    let family = params.family;
    if !family.has_closed_r() {
        return Err(Error::NoClosedForm(family.id().into()));
    }
    let p: Vec<C64> = params.values.clone();
    let h = hamiltonian(params).into_matrix();
    let perm = tensor::permutation_op();
    let label = format!("R[{family}]");
    let f = move |u: C64| -> Result<CMatrix> {
        let z = ZERO;
        let m = match family {
            Family::C1 => {
                let (a1, a2, a3, a4, a5) = (p[0], p[1], p[2], p[3], p[4]);
                let x = a5 * u;
                let (ep, em) = (x.exp(), (-x).exp());
                let up = u * expm1_over(x);
                let dn = u * expm1_over(-x);
                mat([
                    [ONE, a1 * up, a2 * dn, (a1 * a3 + a2 * a4) * u * u * coshm1_over_sq(x)],
                    [z, z, em, a4 * dn],
                    [z, ep, z, a3 * up],
                    [z, z, z, ONE],
                ])
            }
            Family::C2 => {
                let x = p[0] * u;
                let c0 = x_over_sinh(x).ok_or_else(|| Error::singular_at(u))?;
                let c2 = tanh_half_over(x).ok_or_else(|| Error::singular_at(u))?;
                let inner = linalg::identity(4) * c0 + &h * u + &h * &h * (u * u * c2);
                &perm * inner
            }
            Family::C3 => {
                let (a1, a2, a3) = (p[0], p[1], p[2]);
                let e0 = (-a1 * u).exp();
                let em = ((a1 - a2) * u).exp();
                let ep = ((a1 + a2) * u).exp();
                mat([[e0, a3 * (em - e0), a3 * (ep - e0), z], [z, z, ep, z], [z, em, z, z], [z, z, z, e0]])
            }
            Family::C4 => {
                let (a1, a2, a3, a4) = (p[0], p[1], p[2], p[3]);
                let x = a1 * u;
                let (ep, em) = (x.exp(), (-x).exp());
                let s = u * sinhc(x);
                let corner = ep * (a2 * a4 * s * s + a3 * x.cosh() * s);
                mat([[ep, a2 * s, a2 * s, corner], [z, z, em, a4 * s], [z, em, z, a4 * s], [z, z, z, ep]])
            }
            Family::C5 => {
                let (a1, a2, a3) = (p[0], p[1], p[2]);
                let d = ONE + 2.0 * a1 * u;
                let m = mat([
                    [d, a2 * u, -a2 * u, a2 * a3 * u * u],
                    [z, 2.0 * a1 * u, ONE, -a3 * u],
                    [z, ONE, 2.0 * a1 * u, a3 * u],
                    [z, z, z, d],
                ]);
                m * (ONE - a1 * u)
            }
            Family::C6 => {
                // The 1/(1 + 2 a1 u) entries are multiplied through by the prefactor.
                let (a1, a2) = (p[0], p[1]);
                let d = ONE + 2.0 * a1 * u;
                let m = mat([
                    [d, a2 * u * d, a2 * u * d, -a2 * a2 * u * u * d * d],
                    [z, 2.0 * a1 * u, ONE, -a2 * u * d],
                    [z, ONE, 2.0 * a1 * u, -a2 * u * d],
                    [z, z, z, d],
                ]);
                m * (ONE - a1 * u)
            }
            _ => unreachable!("families without closed form are rejected above"),
        };
        Ok(m)
    };
    Ok(RMatrixFn::new(label, Provenance::ClosedForm, f).with_family(params.clone()))
}

/// Jacobi theta functions `θ1..θ4 (z | q)` in the convention with period `π`.
fn theta(n: u8, z: C64, q: f64) -> C64 {
    let mut acc = match n {
        3 | 4 => ONE,
        _ => ZERO,
    };
    for m in 0..64 {
        let (mf, sign) = (m as f64, if m % 2 == 0 { 1.0 } else { -1.0 });
        let term = match n {
            1 => q.powf((mf + 0.5).powi(2)) * sign * 2.0 * ((2.0 * mf + 1.0) * z).sin(),
            2 => q.powf((mf + 0.5).powi(2)) * 2.0 * ((2.0 * mf + 1.0) * z).cos(),
            3 if m > 0 => q.powf(mf * mf) * 2.0 * (2.0 * mf * z).cos(),
            4 if m > 0 => q.powf(mf * mf) * sign * 2.0 * (2.0 * mf * z).cos(),
            _ => ZERO,
        };
        acc += term;
        if m > 2 && term.norm() < 1e-18 * acc.norm().max(1e-300) {
            break;
        }
    }
    acc
}

/// Jacobi `(sn, cn, dn)` at `u` for the nome `q`; modulus `k = θ2(0)²/θ3(0)²`.
fn jacobi(u: C64, q: f64) -> (C64, C64, C64) {
    let (t2, t3, t4) = (theta(2, ZERO, q), theta(3, ZERO, q), theta(4, ZERO, q));
    let z = u / (t3 * t3);
    let d = theta(4, z, q);
    (t3 / t2 * theta(1, z, q) / d, t4 / t2 * theta(2, z, q) / d, t4 / t3 * theta(3, z, q) / d)
}

/// Baxter's elliptic eight-vertex R-matrix
/// `a = sn(u+η)`, `b = sn u`, `c = sn η`, `d = k sn η sn u sn(u+η)`, divided
/// by `c` so that `R(0) = P`. It is the XYZ6 member with
/// `a1 = cn η dn η / sn η`, `b1 = 0`, `c1 = 1 / sn η`, `d1 = d2 = k sn η`,
/// whose parameters are returned alongside.
pub fn eight_vertex_rmatrix(eta: C64, nome: f64) -> Result<(RMatrixFn, ParamVector)> {
    if !(nome > 0.0 && nome < 1.0) {
        return Err(Error::Params(format!("nome {nome} is outside (0, 1)")));
    }
    let k = (theta(2, ZERO, nome) / theta(3, ZERO, nome)).powi(2);
    let (s, cn, dn) = jacobi(eta, nome);
    if !s.is_finite() || s.norm() < 1e-12 {
        return Err(Error::Params(format!("sn(eta) vanishes or diverges at eta = {eta}")));
    }
    let params = ParamVector::new(Family::XYZ6, vec![cn * dn / s, ZERO, s.inv(), k * s, k * s])?;
    let f = move |u: C64| -> Result<CMatrix> {
        let a = jacobi(u + eta, nome).0;
        let b = jacobi(u, nome).0;
        let d = k * s * b * a;
        let z = ZERO;
        let m = mat([[a, z, z, d], [z, b, s, z], [z, s, b, z], [d, z, z, a]]) / s;
        if linalg::is_finite(&m) {
            Ok(m)
        } else {
            Err(Error::singular_at(u))
        }
    };
    Ok((RMatrixFn::new("R[XYZ6 elliptic]", Provenance::ClosedForm, f).with_family(params.clone()), params))
}

/// Exact Gaussian-rational Hamiltonian for exact parameter values.
pub fn exact_hamiltonian(family: Family, values: &[crate::GaussRat]) -> crate::exact::ExactMatrix {
    let entries = family.symbolic_hamiltonian();
    let vars: Vec<SymPoly> = values.iter().map(|v| SymPoly::constant(v.clone())).collect();
    crate::exact::ExactMatrix::from_fn(4, 4, |i, j| {
        let s = entries[4 * i + j].substitute(&vars);
        let c = s.terms().next().map(|(_, c)| c.clone()).unwrap_or_else(exact::gzero);
        c
    })
}
