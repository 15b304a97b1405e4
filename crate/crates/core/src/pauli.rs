//! The extended Pauli basis `σ0 = 1`, `σ± = (σx ± iσy)/2`, `σ3` and Pauli-string
//! coordinates of multi-site operators.
//!
//! Index order is `0, +, -, 3` → `0, 1, 2, 3`. A range-`r` operator is stored as
//! `4^r` coefficients indexed by base-4 digits with site 0 most significant.

use std::fmt::Debug;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};
use std::sync::OnceLock;

use nalgebra::DMatrix;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::exact::{self, GaussRat};
use crate::linalg::{CMatrix, C64};
use crate::tensor::LocalDensity;
use crate::Result;

pub const ID: usize = 0;
pub const PLUS: usize = 1;
pub const MINUS: usize = 2;
pub const Z: usize = 3;

pub const LABELS: [char; 4] = ['0', '+', '-', '3'];

/// Commutative scalar rings the Pauli algebra is evaluated over: floating
/// complex numbers, Gaussian rationals, and polynomials.
pub trait Ring:
    Clone
    + PartialEq
    + Debug
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + 'static
{
    fn from_ratio(num: i64, den: i64) -> Self;
}

impl Ring for C64 {
    fn from_ratio(num: i64, den: i64) -> Self {
        C64::new(num as f64 / den as f64, 0.0)
    }
}

impl Ring for GaussRat {
    fn from_ratio(num: i64, den: i64) -> Self {
        exact::gauss(num, den, 0, 1)
    }
}

/// One term `coef · σ^c` of a product `σ^a σ^b`; `coef = num / den`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ProductTerm {
    pub index: usize,
    pub num: i64,
    pub den: i64,
}

const fn term(index: usize, num: i64, den: i64) -> ProductTerm {
    ProductTerm { index, num, den }
}

/// `σ^a σ^b` expanded in the basis.
pub fn product(a: usize, b: usize) -> &'static [ProductTerm] {
    const T: [[&[ProductTerm]; 4]; 4] = [
        [&[term(ID, 1, 1)], &[term(PLUS, 1, 1)], &[term(MINUS, 1, 1)], &[term(Z, 1, 1)]],
        [&[term(PLUS, 1, 1)], &[], &[term(ID, 1, 2), term(Z, 1, 2)], &[term(PLUS, -1, 1)]],
        [&[term(MINUS, 1, 1)], &[term(ID, 1, 2), term(Z, -1, 2)], &[], &[term(MINUS, 1, 1)]],
        [&[term(Z, 1, 1)], &[term(PLUS, 1, 1)], &[term(MINUS, -1, 1)], &[term(ID, 1, 1)]],
    ];
    T[a][b]
}

/// Exact table `f^{ab}_c` with `σ^a σ^b = Σ_c f^{ab}_c σ^c`.
pub fn structure_constants() -> &'static [[[GaussRat; 4]; 4]; 4] {
    static TABLE: OnceLock<[[[GaussRat; 4]; 4]; 4]> = OnceLock::new();
    TABLE.get_or_init(|| {
        std::array::from_fn(|a| {
            std::array::from_fn(|b| {
                let mut row: [GaussRat; 4] = std::array::from_fn(|_| exact::gzero());
                for t in product(a, b) {
                    row[t.index] = exact::gauss(t.num, t.den, 0, 1);
                }
                row
            })
        })
    })
}

/// The 2×2 matrix of a basis element.
pub fn sigma(a: usize) -> CMatrix {
    let e = match a {
        ID => [1., 0., 0., 1.],
        PLUS => [0., 1., 0., 0.],
        MINUS => [0., 0., 1., 0.],
        Z => [1., 0., 0., -1.],
        _ => panic!("Pauli index {a} out of range"),
    };
    crate::linalg::from_real(2, &e)
}

/// Dual basis under the trace pairing: `tr(dual(a) σ^b) = δ_ab`.
pub fn dual_sigma(a: usize) -> CMatrix {
    match a {
        ID => sigma(ID) * C64::new(0.5, 0.0),
        PLUS => sigma(MINUS),
        MINUS => sigma(PLUS),
        Z => sigma(Z) * C64::new(0.5, 0.0),
        _ => panic!("Pauli index {a} out of range"),
    }
}

/// Digits of a string index, site 0 first.
pub fn digits(index: usize, range: usize) -> Vec<usize> {
    (0..range).rev().map(|k| (index >> (2 * k)) & 3).collect()
}

pub fn index_of(digits: &[usize]) -> usize {
    digits.iter().fold(0, |acc, &d| (acc << 2) | d)
}

pub fn string_label(index: usize, range: usize) -> String {
    digits(index, range).into_iter().map(|d| LABELS[d]).collect()
}

/// Coordinates of a range-`r` operator in the Pauli-string basis.
#[derive(Clone, Debug, PartialEq)]
pub struct PauliVec<T> {
    range: usize,
    coeffs: Vec<T>,
}

impl<T: Ring> PauliVec<T> {
    pub fn zero(range: usize) -> Self {
        Self { range, coeffs: vec![T::zero(); 1 << (2 * range)] }
    }

    pub fn from_coeffs(range: usize, coeffs: Vec<T>) -> Self {
        assert_eq!(coeffs.len(), 1 << (2 * range));
        Self { range, coeffs }
    }

    pub fn range(&self) -> usize {
        self.range
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<T> {
        self.coeffs
    }

    pub fn get(&self, digits: &[usize]) -> &T {
        &self.coeffs[index_of(digits)]
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(Zero::is_zero)
    }

    /// Places the operator at `offset` inside a window of `range` sites.
    pub fn placed(&self, offset: usize, range: usize) -> Self {
        assert!(offset + self.range <= range);
        let shift = 2 * (range - offset - self.range);
        let mut out = Self::zero(range);
        for (s, c) in self.coeffs.iter().enumerate() {
            if !c.is_zero() {
                out.coeffs[s << shift] = c.clone();
            }
        }
        out
    }

    /// Operator product of two strings sums of equal range.
    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.range, other.range);
        let r = self.range;
        let mut out = Self::zero(r);
        let nz_b: Vec<(usize, &T)> = other.coeffs.iter().enumerate().filter(|(_, c)| !c.is_zero()).collect();
        for (s, ca) in self.coeffs.iter().enumerate() {
            if ca.is_zero() {
                continue;
            }
            for &(t, cb) in &nz_b {
                let Some(terms) = string_product(s, t, r) else { continue };
                let base = ca.clone() * cb.clone();
                for (idx, num, den) in terms {
                    out.coeffs[idx] += base.clone() * T::from_ratio(num, den);
                }
            }
        }
        out
    }

    pub fn commutator(&self, other: &Self) -> Self {
        self.mul(other) - other.mul(self)
    }

    pub fn scale(&self, k: &T) -> Self {
        Self { range: self.range, coeffs: self.coeffs.iter().map(|c| c.clone() * k.clone()).collect() }
    }

    pub fn map<U: Ring>(&self, f: impl Fn(&T) -> U) -> PauliVec<U> {
        PauliVec { range: self.range, coeffs: self.coeffs.iter().map(f).collect() }
    }

    /// Dense matrix of the operator.
    pub fn to_matrix(&self) -> DMatrix<T> {
        from_pauli(&self.coeffs, self.range)
    }

    pub fn from_matrix(m: &DMatrix<T>) -> Self {
        let range = m.nrows().trailing_zeros() as usize;
        Self { range, coeffs: to_pauli(m) }
    }
}

impl<T: Ring> Sub for PauliVec<T> {
    type Output = Self;
    fn sub(mut self, rhs: Self) -> Self {
        assert_eq!(self.range, rhs.range);
        for (a, b) in self.coeffs.iter_mut().zip(rhs.coeffs) {
            *a += -b;
        }
        self
    }
}

impl<T: Ring> Add for PauliVec<T> {
    type Output = Self;
    fn add(mut self, rhs: Self) -> Self {
        assert_eq!(self.range, rhs.range);
        for (a, b) in self.coeffs.iter_mut().zip(rhs.coeffs) {
            *a += b;
        }
        self
    }
}

/// Expands the product of strings `s · t` of range `r`; `None` when it vanishes.
/// Coefficients are `num / den` with `den` a power of two.
fn string_product(s: usize, t: usize, r: usize) -> Option<Vec<(usize, i64, i64)>> {
    let mut acc: Vec<(usize, i64, i64)> = vec![(0, 1, 1)];
    for k in (0..r).rev() {
        let a = (s >> (2 * k)) & 3;
        let b = (t >> (2 * k)) & 3;
        let terms = product(a, b);
        if terms.is_empty() {
            return None;
        }
        if terms.len() == 1 {
            let p = terms[0];
            for e in &mut acc {
                *e = ((e.0 << 2) | p.index, e.1 * p.num, e.2 * p.den);
            }
        } else {
            acc = acc
                .iter()
                .flat_map(|&(i, n, d)| terms.iter().map(move |p| ((i << 2) | p.index, n * p.num, d * p.den)))
                .collect();
        }
    }
    Some(acc)
}

/// Pauli-string coordinates of a `2^r × 2^r` matrix over any ring.
pub fn to_pauli<T: Ring>(m: &DMatrix<T>) -> Vec<T> {
    let dim = m.nrows();
    let r = dim.trailing_zeros() as usize;
    // Reorder entries so that site k contributes the pair digit q = 2 i_k + j_k.
    let mut v = vec![T::zero(); dim * dim];
    for row in 0..dim {
        for col in 0..dim {
            v[interleave(row, col, r)] = m[(row, col)].clone();
        }
    }
    let half = T::from_ratio(1, 2);
    for k in 0..r {
        let stride = 1 << (2 * k);
        for base in 0..v.len() {
            if (base / stride) % 4 != 0 {
                continue;
            }
            let q0 = v[base].clone();
            let q1 = v[base + stride].clone();
            let q2 = v[base + 2 * stride].clone();
            let q3 = v[base + 3 * stride].clone();
            v[base] = (q0.clone() + q3.clone()) * half.clone();
            v[base + stride] = q1;
            v[base + 2 * stride] = q2;
            v[base + 3 * stride] = (q0 - q3) * half.clone();
        }
    }
    v
}

/// Inverse of [`to_pauli`].
pub fn from_pauli<T: Ring>(coeffs: &[T], r: usize) -> DMatrix<T> {
    let dim = 1usize << r;
    assert_eq!(coeffs.len(), dim * dim);
    let mut v = coeffs.to_vec();
    for k in 0..r {
        let stride = 1 << (2 * k);
        for base in 0..v.len() {
            if (base / stride) % 4 != 0 {
                continue;
            }
            let a0 = v[base].clone();
            let a3 = v[base + 3 * stride].clone();
            v[base] = a0.clone() + a3.clone();
            v[base + 3 * stride] = a0 - a3;
        }
    }
    DMatrix::from_fn(dim, dim, |row, col| v[interleave(row, col, r)].clone())
}

#[inline]
fn interleave(row: usize, col: usize, r: usize) -> usize {
    let mut idx = 0;
    for k in (0..r).rev() {
        idx = (idx << 2) | (((row >> k) & 1) << 1) | ((col >> k) & 1);
    }
    idx
}

/// The 4×4 array `A_ab` of a two-site density `Σ A_ab σ^a ⊗ σ^b`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PauliCoeffs {
    pub a: [[C64; 4]; 4],
}

impl PauliCoeffs {
    pub fn zero() -> Self {
        Self { a: [[C64::zero(); 4]; 4] }
    }

    pub fn get(&self, a: usize, b: usize) -> C64 {
        self.a[a][b]
    }

    pub fn set(&mut self, a: usize, b: usize, v: C64) {
        self.a[a][b] = v;
    }

    /// Row-major flattening `A_00, A_0+, …, A_33`, the variable order of the
    /// polynomial system.
    pub fn flat(&self) -> [C64; 16] {
        std::array::from_fn(|k| self.a[k / 4][k % 4])
    }

    pub fn from_flat(v: &[C64]) -> Self {
        assert_eq!(v.len(), 16);
        Self { a: std::array::from_fn(|a| std::array::from_fn(|b| v[4 * a + b])) }
    }

    pub fn norm(&self) -> f64 {
        self.flat().iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }
}

pub fn decompose_to_pauli(d: &LocalDensity) -> Result<PauliCoeffs> {
    d.expect_range(2)?;
    Ok(PauliCoeffs::from_flat(&to_pauli(d.matrix())))
}

pub fn compose_from_pauli(a: &PauliCoeffs) -> LocalDensity {
    LocalDensity::new(from_pauli(&a.flat(), 2)).expect("4x4 matrix")
}

/// Exact variant of the decomposition for Gaussian-rational matrices.
pub fn decompose_exact(m: &DMatrix<GaussRat>) -> [GaussRat; 16] {
    let v = to_pauli(m);
    std::array::from_fn(|k| v[k].clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{self, c};
    use proptest::prelude::*;

    fn gauss_matrix(entries: &[(i64, i64)], n: usize) -> DMatrix<GaussRat> {
        DMatrix::from_fn(n, n, |i, j| {
            let (re, im) = entries[i * n + j];
            exact::gauss(re, 7, im, 5)
        })
    }

    #[test]
    fn products_match_matrices() {
        for a in 0..4 {
            for b in 0..4 {
                let lhs = sigma(a) * sigma(b);
                let mut rhs = CMatrix::zeros(2, 2);
                for (cidx, f) in structure_constants()[a][b].iter().enumerate() {
                    rhs += sigma(cidx) * exact::to_c64(f);
                }
                assert!(linalg::max_abs(&(lhs - rhs)) == 0.0, "σ{a}σ{b}");
            }
        }
    }

    #[test]
    fn plus_minus_product() {
        let f = &structure_constants()[PLUS][MINUS];
        assert_eq!(f[ID], exact::gauss(1, 2, 0, 1));
        assert_eq!(f[Z], exact::gauss(1, 2, 0, 1));
        assert!(f[PLUS].is_zero() && f[MINUS].is_zero());
        assert_eq!(structure_constants()[Z][Z][ID], exact::gone());
    }

    #[test]
    fn dual_basis_pairing() {
        for a in 0..4 {
            for b in 0..4 {
                let t = linalg::trace(&(dual_sigma(a) * sigma(b)));
                assert_eq!(t, if a == b { c(1.0, 0.0) } else { c(0.0, 0.0) });
            }
        }
    }

    #[test]
    fn identity_and_plus_minus() {
        let id = LocalDensity::identity(2);
        let p = decompose_to_pauli(&id).unwrap();
        for a in 0..4 {
            for b in 0..4 {
                let want = if a == 0 && b == 0 { 1.0 } else { 0.0 };
                assert_eq!(p.get(a, b), c(want, 0.0));
            }
        }
        let pm = LocalDensity::new(linalg::kron(&sigma(PLUS), &sigma(MINUS))).unwrap();
        let p = decompose_to_pauli(&pm).unwrap();
        assert_eq!(p.get(PLUS, MINUS), c(1.0, 0.0));
        assert_eq!(p.flat().iter().filter(|z| z.norm() > 0.0).count(), 1);
    }

    #[test]
    fn wrong_range_rejected() {
        assert!(decompose_to_pauli(&LocalDensity::identity(3)).is_err());
    }

    #[test]
    fn trace_pairing_oracle_on_three_sites() {
        // Independent oracle: coefficient = tr((dual ⊗ dual ⊗ dual) M).
        let m = CMatrix::from_fn(8, 8, |i, j| c((i * 3 + j) as f64 - 5.0, (i as f64) - (j as f64) * 0.5));
        let v = to_pauli(&m);
        for (s, got) in v.iter().enumerate() {
            let d = digits(s, 3);
            let dual = linalg::kron(&linalg::kron(&dual_sigma(d[0]), &dual_sigma(d[1])), &dual_sigma(d[2]));
            let want = linalg::trace(&(dual * &m));
            assert!((got - want).norm() < 1e-12, "{}", string_label(s, 3));
        }
    }

    #[test]
    fn string_product_matches_dense() {
        let a = PauliVec::from_matrix(&CMatrix::from_fn(8, 8, |i, j| c(((i + 2 * j) % 5) as f64, (i * j % 3) as f64)));
        let b = PauliVec::from_matrix(&CMatrix::from_fn(8, 8, |i, j| c((i as f64) - (j as f64), ((i + j) % 2) as f64)));
        let dense = a.to_matrix() * b.to_matrix();
        assert!(linalg::max_abs(&(a.mul(&b).to_matrix() - dense)) < 1e-12);
    }

    #[test]
    fn placement_is_kron_with_identity() {
        let m = CMatrix::from_fn(4, 4, |i, j| c(i as f64, j as f64));
        let v = PauliVec::from_matrix(&m);
        let placed = v.placed(1, 4).to_matrix();
        let want = linalg::kron(&linalg::kron(&linalg::identity(2), &m), &linalg::identity(2));
        assert!(linalg::max_abs(&(placed - want)) < 1e-14);
    }

    proptest! {
        #[test]
        fn exact_round_trip(entries in proptest::collection::vec((-20i64..20, -20i64..20), 16)) {
            let coeffs: Vec<GaussRat> = entries.iter().map(|&(re, im)| exact::gauss(re, 3, im, 11)).collect();
            let m = from_pauli(&coeffs, 2);
            prop_assert_eq!(to_pauli(&m), coeffs);
            let g = gauss_matrix(&entries, 4);
            prop_assert_eq!(from_pauli(&to_pauli(&g), 2), g);
        }

        #[test]
        fn float_round_trip(entries in proptest::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 16)) {
            let flat: Vec<C64> = entries.iter().map(|&(re, im)| c(re, im)).collect();
            let p = PauliCoeffs::from_flat(&flat);
            let back = decompose_to_pauli(&compose_from_pauli(&p)).unwrap();
            for (x, y) in back.flat().iter().zip(flat.iter()) {
                prop_assert!((x - y).norm() < 1e-14);
            }
        }
    }
}
