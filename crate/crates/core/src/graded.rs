//! The `C^{1|1}` sector: sign-dressed tensor products, the supertrace, the
//! graded Yang–Baxter equation and graded transfer matrices, and the
//! bijection between XYZ-type solutions of the ordinary and graded equations.
//!
//! Grading is distinguished: basis vector 0 is even, 1 is odd. A multi-site
//! basis index (site 0 slowest) has the parity of its number of odd factors.
//! Matrices follow the convention in which the operator
//! `Σ A_{ijkl} (-1)^{(p(i)+p(j)) p(k)} E_ij ⊗ E_kl` is stored as the plain
//! array `A_{(ik),(jl)}`.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::linalg::{self, CMatrix, C64};
use crate::rmatrix::RMatrixFn;
use crate::tensor::MAX_SITES;
use crate::{Error, Result};

/// Parity of a basis index of `(C^{1|1})^{⊗n}`.
pub fn parity(index: usize) -> u32 {
    index.count_ones() % 2
}

/// Parity of the matrix unit `E_{ij}`.
pub fn unit_parity(i: usize, j: usize) -> u32 {
    (parity(i) + parity(j)) % 2
}

/// `(ε₁, ε₂)`: signs on the `d` and `b` entries of an eight-vertex matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignChoice {
    eps1: i8,
    eps2: i8,
}

impl SignChoice {
    pub fn new(eps1: i8, eps2: i8) -> Result<Self> {
        if eps1.abs() != 1 || eps2.abs() != 1 {
            return Err(Error::Input(format!("signs must be ±1, got ({eps1}, {eps2})")));
        }
        Ok(Self { eps1, eps2 })
    }

    pub fn eps1(&self) -> i8 {
        self.eps1
    }

    pub fn eps2(&self) -> i8 {
        self.eps2
    }
}

fn log2_dim(m: &CMatrix) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare { rows: m.nrows(), cols: m.ncols() });
    }
    let n = m.nrows();
    if n == 0 || !n.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(n));
    }
    Ok(n.trailing_zeros() as usize)
}

/// Graded tensor product: `(A ⊗ B)_{(ik),(jl)} = A_ij B_kl (-1)^{p(k)(p(i)+p(j))}`.
/// It satisfies `(A⊗B)(C⊗D) = (-1)^{p(B)p(C)} AC ⊗ BD` for homogeneous
/// factors.
pub fn graded_kron(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    log2_dim(a)?;
    log2_dim(b)?;
    let n = b.nrows();
    let mut out = linalg::kron(a, b);
    for (ai, aj) in (0..a.nrows()).flat_map(|i| (0..a.ncols()).map(move |j| (i, j))) {
        if unit_parity(ai, aj) == 0 {
            continue;
        }
        for k in (0..n).filter(|&k| parity(k) == 1) {
            for l in 0..n {
                out[(ai * n + k, aj * n + l)] = -out[(ai * n + k, aj * n + l)];
            }
        }
    }
    Ok(out)
}

/// `str A = Σ_A (-1)^{p(A)} A_AA`.
pub fn supertrace(a: &CMatrix) -> Result<C64> {
    log2_dim(a)?;
    Ok((0..a.nrows()).map(|i| if parity(i) == 0 { a[(i, i)] } else { -a[(i, i)] }).sum())
}

/// Parity of a homogeneous matrix, `None` if it mixes parities or is zero.
pub fn operator_parity(a: &CMatrix) -> Option<u32> {
    let mut found = None;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            if a[(i, j)] != C64::new(0.0, 0.0) {
                let p = unit_parity(i, j);
                match found {
                    None => found = Some(p),
                    Some(q) if q != p => return None,
                    _ => {}
                }
            }
        }
    }
    found
}

/// Errors with the first parity-violating entry of `a`.
pub fn check_even(a: &CMatrix) -> Result<()> {
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            if unit_parity(i, j) == 1 && a[(i, j)] != C64::new(0.0, 0.0) {
                return Err(Error::OddOperator { row: i, col: j });
            }
        }
    }
    Ok(())
}

/// The graded swap `Σ (-1)^{p(j)} E_ij ⊗ E_ji`, which in matrix form is
/// `P` with the `|11⟩⟨11|` entry negated. It is independent of any
/// parameter and solves the graded Yang–Baxter equation.
pub fn graded_permutation() -> CMatrix {
    linalg::from_real(4, &[1., 0., 0., 0., 0., 0., 1., 0., 0., 1., 0., 0., 0., 0., 0., -1.])
}

/// Sign-dressed pieces of the three-site embeddings, built once:
/// `R12 = mask ∘ (R ⊗ 1)` entrywise, `R23 = 1 ⊗ R`, `R13 = P23 R12 P23`.
struct Embedding3 {
    mask12: CMatrix,
    p23: CMatrix,
}

fn embedding3() -> &'static Embedding3 {
    static E: OnceLock<Embedding3> = OnceLock::new();
    E.get_or_init(|| {
        let ones = CMatrix::from_element(4, 4, C64::new(1.0, 0.0));
        let id = linalg::identity(2);
        Embedding3 {
            mask12: graded_kron(&ones, &id.map(|_| C64::new(1.0, 0.0))).expect("powers of two"),
            p23: graded_kron(&id, &graded_permutation()).expect("powers of two"),
        }
    })
}

/// The three graded embeddings of a 4×4 matrix into `(C^{1|1})^{⊗3}`.
pub fn graded_embeddings(r12: &CMatrix, r13: &CMatrix, r23: &CMatrix) -> (CMatrix, CMatrix, CMatrix) {
    let e = embedding3();
    let id = linalg::identity(2);
    let a = linalg::kron(r12, &id).component_mul(&e.mask12);
    let b = &e.p23 * linalg::kron(r13, &id).component_mul(&e.mask12) * &e.p23;
    let c = linalg::kron(&id, r23);
    (a, b, c)
}

/// Largest entry of `R12(u-v) R13(u) R23(v) - R23(v) R13(u) R12(u-v)` with
/// graded embeddings.
pub fn graded_ybe_residual(r: &RMatrixFn, u: C64, v: C64) -> Result<f64> {
    let (a, b, c) = graded_embeddings(&r.eval(u - v)?, &r.eval(u)?, &r.eval(v)?);
    Ok(linalg::max_abs(&(&a * &b * &c - &c * &b * &a)))
}

/// Coefficients of `u^(n-b) v^b` in the graded equation for a truncated
/// series, as in [`crate::series::ybe_defect`].
pub fn graded_ybe_defect(coeffs: &[CMatrix], n: usize) -> Vec<CMatrix> {
    crate::series::ybe_defect_with(coeffs, n, graded_embeddings)
}

/// Positions of the eight-vertex entries `a1, b1, c1, d1, c2, b2, d2, a2`.
const EIGHT_VERTEX: [(usize, usize); 8] = [(0, 0), (1, 1), (1, 2), (0, 3), (2, 1), (2, 2), (3, 0), (3, 3)];

/// Relative tolerance for entries outside the eight-vertex pattern; series
/// evaluators leave rounding noise there.
const PATTERN_TOL: f64 = 1e-12;

fn check_eight_vertex(m: &CMatrix) -> Result<()> {
    let scale = linalg::max_abs(m).max(1.0);
    for i in 0..4 {
        for j in 0..4 {
            if !EIGHT_VERTEX.contains(&(i, j)) && m[(i, j)].norm() > PATTERN_TOL * scale {
                return Err(Error::NotEightVertex);
            }
        }
    }
    Ok(())
}

/// Entrywise sign map on an eight-vertex matrix; entries outside the
/// pattern are zeroed.
fn signed(m: &CMatrix, signs: [f64; 8]) -> Result<CMatrix> {
    check_eight_vertex(m)?;
    let mut out = CMatrix::zeros(4, 4);
    for (k, &(i, j)) in EIGHT_VERTEX.iter().enumerate() {
        out[(i, j)] = m[(i, j)] * signs[k];
    }
    Ok(out)
}

/// Negates `d2` and `a2`. An involution, so the same map takes graded
/// solutions back to ordinary ones.
pub fn bijection_matrix(m: &CMatrix) -> Result<CMatrix> {
    signed(m, [1., 1., 1., 1., 1., 1., -1., -1.])
}

/// `ε₁` on `d1, d2` and `ε₂` on `b1, b2`; maps solutions of either equation
/// to solutions of the same equation.
pub fn sign_twist_matrix(m: &CMatrix, s: SignChoice) -> Result<CMatrix> {
    let (e1, e2) = (s.eps1 as f64, s.eps2 as f64);
    signed(m, [1., e2, 1., e1, 1., e2, e1, 1.])
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    ToGraded,
    FromGraded,
}

/// Probe points at which the eight-vertex pattern is checked eagerly.
const PATTERN_PROBES: [(f64, f64); 3] = [(0.0, 0.0), (0.13, 0.07), (-0.21, 0.05)];

fn eager_pattern_check(r: &RMatrixFn) -> Result<()> {
    for (re, im) in PATTERN_PROBES {
        if let Ok(m) = r.eval(C64::new(re, im)) {
            check_eight_vertex(&m)?;
        }
    }
    Ok(())
}

/// The bijection between regular XYZ-type solutions of the ordinary and the
/// graded Yang–Baxter equation. Both directions apply the same involution.
pub fn bijection_map(r: &RMatrixFn, direction: Direction) -> Result<RMatrixFn> {
    eager_pattern_check(r)?;
    let tag = match direction {
        Direction::ToGraded => "graded",
        Direction::FromGraded => "ungraded",
    };
    let inner = r.clone();
    let label = format!("{}[{tag}]", r.label());
    Ok(RMatrixFn::new(label, crate::rmatrix::Provenance::Derived, move |u| bijection_matrix(&inner.eval(u)?)))
}

pub fn sign_twist(r: &RMatrixFn, s: SignChoice) -> Result<RMatrixFn> {
    eager_pattern_check(r)?;
    let inner = r.clone();
    let label = format!("{}[eps={},{}]", r.label(), s.eps1, s.eps2);
    Ok(RMatrixFn::new(label, crate::rmatrix::Provenance::Derived, move |u| sign_twist_matrix(&inner.eval(u)?, s)))
}

/// Graded swap of sites `a`, `a+1` in an `n`-site chain.
fn graded_swap(a: usize, n: usize) -> CMatrix {
    let left = linalg::identity(1 << a);
    let right = linalg::identity(1 << (n - a - 2));
    let m = graded_kron(&left, &graded_permutation()).expect("powers of two");
    graded_kron(&m, &right).expect("powers of two")
}

/// `t(u) = str₀ [R_{0L}(u) ⋯ R_{01}(u)]` on `L` physical sites, auxiliary
/// space 0 slowest. `R(u)` must be even.
pub fn graded_transfer_matrix(r: &RMatrixFn, u: C64, length: usize) -> Result<CMatrix> {
    let max = MAX_SITES - 1;
    if !(1..=max.min(6)).contains(&length) {
        return Err(Error::ChainLength { length, min: 1, max: max.min(6) });
    }
    let rm = r.eval(u)?;
    check_even(&rm)?;
    let n = length + 1;
    let r01 = graded_kron(&rm, &linalg::identity(1 << (n - 2)))?;
    let mut factors = Vec::with_capacity(length);
    let mut current = r01;
    for k in 1..=length {
        if k > 1 {
            let s = graded_swap(k - 1, n);
            current = &s * current * &s;
        }
        factors.push(current.clone());
    }
    let mut t = linalg::identity(1 << n);
    for f in factors.iter().rev() {
        t *= f;
    }
    let d = 1 << length;
    Ok(t.view((0, 0), (d, d)) - t.view((d, d), (d, d)))
}

/// `max |[t(u), t(v)]|`; odd R-matrices are rejected with
/// [`Error::OddOperator`], since the supertrace argument that makes graded
/// transfer matrices commute needs an even `R`.
pub fn graded_transfer_commutation(r: &RMatrixFn, length: usize, u: C64, v: C64) -> Result<f64> {
    let tu = graded_transfer_matrix(r, u, length)?;
    let tv = graded_transfer_matrix(r, v, length)?;
    Ok(linalg::max_abs(&(&tu * &tv - &tv * &tu)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{self, Family};
    use crate::linalg::{c, ONE, ZERO};
    use crate::rmatrix::Provenance;
    use crate::ybe;

    fn unit(i: usize, j: usize) -> CMatrix {
        let mut e = CMatrix::zeros(2, 2);
        e[(i, j)] = ONE;
        e
    }

    fn units() -> Vec<(CMatrix, u32)> {
        (0..4).map(|k| (unit(k / 2, k % 2), unit_parity(k / 2, k % 2))).collect()
    }

    #[test]
    fn even_factors_give_the_ordinary_product() {
        let a = linalg::from_real(2, &[1., 0., 0., 2.]);
        let b = linalg::from_real(2, &[3., 0., 0., -1.]);
        assert_eq!(graded_kron(&a, &b).unwrap(), linalg::kron(&a, &b));
    }

    #[test]
    fn e21_e12_gets_the_extra_sign() {
        let g = graded_kron(&unit(1, 0), &unit(0, 1)).unwrap();
        assert_eq!(g, linalg::kron(&unit(1, 0), &unit(0, 1)));
        let g = graded_kron(&unit(1, 0), &unit(1, 0)).unwrap();
        assert_eq!(g, -linalg::kron(&unit(1, 0), &unit(1, 0)));
    }

    #[test]
    fn multiplicativity_over_all_units() {
        let u = units();
        for (a, _) in &u {
            for (b, pb) in &u {
                for (cc, pc) in &u {
                    for (d, _) in &u {
                        let lhs = graded_kron(a, b).unwrap() * graded_kron(cc, d).unwrap();
                        let sign = if pb * pc == 1 { -1.0 } else { 1.0 };
                        let rhs = graded_kron(&(a * cc), &(b * d)).unwrap() * C64::from(sign);
                        assert_eq!(lhs, rhs);
                    }
                }
            }
        }
    }

    #[test]
    fn graded_kron_is_associative() {
        let a = linalg::from_real(2, &[1., 2., 3., 4.]);
        let b = linalg::from_real(2, &[0.5, -1., 2., 0.]);
        let d = linalg::from_real(2, &[-1., 0.25, 1., 3.]);
        let left = graded_kron(&graded_kron(&a, &b).unwrap(), &d).unwrap();
        let right = graded_kron(&a, &graded_kron(&b, &d).unwrap()).unwrap();
        assert!(linalg::max_abs(&(left - right)) < 1e-15);
    }

    #[test]
    fn supertrace_values_and_sign_law() {
        assert_eq!(supertrace(&linalg::identity(2)).unwrap(), ZERO);
        assert_eq!(supertrace(&unit(0, 0)).unwrap(), ONE);
        assert_eq!(supertrace(&unit(1, 1)).unwrap(), -ONE);
        assert_eq!(supertrace(&(unit(0, 1) * unit(1, 0))).unwrap(), ONE);
        assert_eq!(supertrace(&(unit(1, 0) * unit(0, 1))).unwrap(), -ONE);
        for (x, px) in units() {
            for (y, py) in units() {
                let sign = if px * py == 1 { -1.0 } else { 1.0 };
                assert_eq!(supertrace(&(&x * &y)).unwrap(), supertrace(&(&y * &x)).unwrap() * sign);
            }
        }
        assert!(supertrace(&CMatrix::zeros(3, 3)).is_err());
    }

    #[test]
    fn graded_permutation_solves_graded_ybe() {
        let pg = graded_permutation();
        let r = RMatrixFn::new("Pg", Provenance::Derived, move |_| Ok(pg.clone()));
        assert_eq!(graded_ybe_residual(&r, c(0.1, 0.2), c(-0.3, 0.05)).unwrap(), 0.0);
        let image = bijection_map(&RMatrixFn::permutation(), Direction::ToGraded).unwrap();
        assert_eq!(image.eval(ZERO).unwrap(), graded_permutation());
        assert_eq!(graded_transfer_commutation(&r, 3, c(0.1, 0.0), c(0.2, 0.0)).unwrap(), 0.0);
    }

    #[test]
    fn elliptic_image_solves_graded_ybe() {
        let (r, _) = catalog::eight_vertex_rmatrix(c(0.3, 0.1), 0.15).unwrap();
        let g = bijection_map(&r, Direction::ToGraded).unwrap();
        for (u, v) in ybe::sample_pairs(&g, 20, 4) {
            assert!(graded_ybe_residual(&g, u, v).unwrap() < 1e-9);
            // The image is not a solution of the ordinary equation.
            assert!(ybe::ybe_residual(&g, u, v).unwrap() > 1e-6);
        }
        // Graded regularity: R(0) is the graded swap.
        assert!(linalg::max_abs(&(g.eval(ZERO).unwrap() - graded_permutation())) < 1e-13);
        assert!(graded_transfer_commutation(&g, 3, c(0.1, 0.0), c(0.2, 0.0)).unwrap() < 1e-9);
        let back = bijection_map(&g, Direction::FromGraded).unwrap();
        let u = c(0.17, -0.08);
        assert_eq!(back.eval(u).unwrap(), r.eval(u).unwrap());
    }

    #[test]
    fn twists_preserve_each_equation() {
        let (r, _) = catalog::eight_vertex_rmatrix(c(0.25, -0.05), 0.2).unwrap();
        let g = bijection_map(&r, Direction::ToGraded).unwrap();
        let (u, v) = (c(0.12, 0.03), c(-0.2, 0.1));
        for (e1, e2) in [(1, 1), (1, -1), (-1, 1), (-1, -1)] {
            let s = SignChoice::new(e1, e2).unwrap();
            assert!(ybe::ybe_residual(&sign_twist(&r, s).unwrap(), u, v).unwrap() < 1e-12);
            assert!(graded_ybe_residual(&sign_twist(&g, s).unwrap(), u, v).unwrap() < 1e-12);
        }
        let id = sign_twist(&r, SignChoice::new(1, 1).unwrap()).unwrap();
        assert_eq!(id.eval(u).unwrap(), r.eval(u).unwrap());
        assert!(SignChoice::new(0, 1).is_err());
    }

    #[test]
    fn non_eight_vertex_and_odd_inputs_are_rejected() {
        let r = catalog::rmatrix(&catalog::sample_params(Family::C1, 1)).unwrap();
        assert_eq!(bijection_map(&r, Direction::ToGraded).unwrap_err(), Error::NotEightVertex);
        let odd = RMatrixFn::new("odd", Provenance::Derived, |u| {
            let mut m = crate::tensor::permutation_op();
            m[(0, 1)] = u;
            Ok(m)
        });
        assert!(matches!(graded_transfer_commutation(&odd, 3, c(0.1, 0.0), c(0.2, 0.0)), Err(Error::OddOperator { .. })));
        assert!(graded_transfer_matrix(&RMatrixFn::permutation(), ZERO, 7).is_err());
    }

    #[test]
    fn bijection_is_an_involution_on_random_patterns() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let mut m = CMatrix::zeros(4, 4);
            for &(i, j) in &EIGHT_VERTEX {
                m[(i, j)] = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            }
            let once = bijection_matrix(&m).unwrap();
            check_even(&once).unwrap();
            assert_eq!(bijection_matrix(&once).unwrap(), m);
        }
    }

    #[test]
    fn parity_bookkeeping() {
        assert_eq!(operator_parity(&unit(0, 1)), Some(1));
        assert_eq!(operator_parity(&graded_permutation()), Some(0));
        assert_eq!(operator_parity(&(unit(0, 1) + unit(0, 0))), None);
        assert_eq!(unit_parity(1, 1), 0);
    }
}
