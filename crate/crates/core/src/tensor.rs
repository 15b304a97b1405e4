//! Dense operators on `(C^2)^{⊗L}`.
//!
//! Basis states are ordered lexicographically with site 0 as the slowest
//! index, so a basis index has site `s` in bit `L - 1 - s`. This matches the
//! usual 4×4 display `|11⟩, |12⟩, |21⟩, |22⟩`.

use std::ops::AddAssign;

use nalgebra::{DMatrix, Scalar};
use num_traits::Zero;

use crate::linalg::{self, CMatrix, C64, ONE, ZERO};
use crate::rmatrix::RMatrixFn;
use crate::{Error, Result};

/// Largest chain handled by the dense kernels (4096×4096 matrices).
pub const MAX_SITES: usize = 12;

/// A range-`r` operator on `(C^2)^{⊗r}`: the carrier of Hamiltonian and
/// charge densities.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalDensity {
    range: usize,
    matrix: CMatrix,
}

impl LocalDensity {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        let range = sites_of_dim(&matrix)?;
        if !linalg::is_finite(&matrix) {
            return Err(Error::NonFinite);
        }
        Ok(Self { range, matrix })
    }

    pub fn with_range(matrix: CMatrix, range: usize) -> Result<Self> {
        let d = Self::new(matrix)?;
        if d.range != range {
            return Err(Error::WrongRange { expected: range, found: d.range });
        }
        Ok(d)
    }

    pub fn zero(range: usize) -> Self {
        let dim = 1 << range;
        Self { range, matrix: CMatrix::zeros(dim, dim) }
    }

    pub fn identity(range: usize) -> Self {
        Self { range, matrix: linalg::identity(1 << range) }
    }

    pub fn range(&self) -> usize {
        self.range
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn expect_range(&self, range: usize) -> Result<()> {
        if self.range == range {
            Ok(())
        } else {
            Err(Error::WrongRange { expected: range, found: self.range })
        }
    }

    /// Right-pads with identities up to `range`.
    pub fn padded(&self, range: usize) -> LocalDensity {
        assert!(range >= self.range);
        let extra = linalg::identity(1 << (range - self.range));
        LocalDensity { range, matrix: linalg::kron(&self.matrix, &extra) }
    }

    pub fn norm(&self) -> f64 {
        linalg::frobenius(&self.matrix)
    }
}

fn sites_of_dim(m: &CMatrix) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare { rows: m.nrows(), cols: m.ncols() });
    }
    let dim = m.nrows();
    if dim == 0 || !dim.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(dim));
    }
    Ok(dim.trailing_zeros() as usize)
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    linalg::kron(a, b)
}

/// The two-site swap `P |x⟩⊗|y⟩ = |y⟩⊗|x⟩`.
pub fn permutation_op() -> CMatrix {
    linalg::from_real(4, &[1., 0., 0., 0., 0., 0., 1., 0., 0., 1., 0., 0., 0., 0., 0., 1.])
}

#[inline]
fn site_bit(site: usize, n_sites: usize) -> usize {
    1 << (n_sites - 1 - site)
}

/// Places `op` (acting on `sites.len()` factors, first factor slowest) on the
/// given ordered `sites` of an `n_sites` chain, identity elsewhere.
pub fn embed_operator<T>(op: &DMatrix<T>, sites: &[usize], n_sites: usize) -> DMatrix<T>
where
    T: Scalar + Zero + AddAssign,
{
    let r = sites.len();
    assert_eq!(op.nrows(), 1 << r);
    assert!(sites.iter().all(|&s| s < n_sites));
    let dim = 1usize << n_sites;
    let bits: Vec<usize> = sites.iter().map(|&s| site_bit(s, n_sites)).collect();
    let mask: usize = bits.iter().sum();
    let local_of = |state: usize| -> usize {
        bits.iter().fold(0, |acc, &b| (acc << 1) | usize::from(state & b != 0))
    };
    let global_of = |local: usize| -> usize {
        bits.iter()
            .enumerate()
            .filter(|(k, _)| local & (1 << (r - 1 - k)) != 0)
            .map(|(_, &b)| b)
            .sum()
    };
    let scatter: Vec<usize> = (0..1 << r).map(global_of).collect();
    let mut out = DMatrix::<T>::zeros(dim, dim);
    for col in 0..dim {
        let l_in = local_of(col);
        let rest = col & !mask;
        for (l_out, &g) in scatter.iter().enumerate() {
            let v = &op[(l_out, l_in)];
            if !v.is_zero() {
                out[(rest | g, col)] += v.clone();
            }
        }
    }
    out
}

fn placement(range: usize, first_site: usize, length: usize, periodic: bool) -> Result<Vec<usize>> {
    if length == 0 || length > MAX_SITES {
        return Err(Error::ChainLength { length, min: 1, max: MAX_SITES });
    }
    if first_site >= length || range > length || (!periodic && first_site + range > length) {
        return Err(Error::SiteOutOfRange { site: first_site, range, length });
    }
    Ok((0..range).map(|k| (first_site + k) % length).collect())
}

/// Places a range-`r` density on sites `first_site .. first_site + r - 1`
/// (0-based), wrapping around the end of the chain when `periodic`.
pub fn embed_density(d: &LocalDensity, first_site: usize, length: usize, periodic: bool) -> Result<CMatrix> {
    let sites = placement(d.range, first_site, length, periodic)?;
    Ok(embed_operator(&d.matrix, &sites, length))
}

/// Translation-invariant sum `Σ_n D_{n..n+r-1}` on a periodic chain.
pub fn periodic_sum(d: &LocalDensity, length: usize) -> Result<CMatrix> {
    periodic_sum_generic(d.matrix(), d.range, length)
}

pub fn periodic_sum_generic<T>(density: &DMatrix<T>, range: usize, length: usize) -> Result<DMatrix<T>>
where
    T: Scalar + Zero + AddAssign,
{
    if length < range || length == 0 || length > MAX_SITES {
        return Err(Error::ChainLength { length, min: range.max(1), max: MAX_SITES });
    }
    let dim = 1usize << length;
    let mut total = DMatrix::<T>::zeros(dim, dim);
    for n in 0..length {
        let sites: Vec<usize> = (0..range).map(|k| (n + k) % length).collect();
        let placed = embed_operator(density, &sites, length);
        for (t, p) in total.iter_mut().zip(placed.iter()) {
            if !p.is_zero() {
                *t += p.clone();
            }
        }
    }
    Ok(total)
}

/// `P_{1,2} P_{2,3} ⋯ P_{L-1,L}`: the one-site cyclic translation, equal to
/// `t(0)` for any regular R-matrix.
pub fn shift_operator(length: usize) -> Result<CMatrix> {
    if !(2..=MAX_SITES).contains(&length) {
        return Err(Error::ChainLength { length, min: 2, max: MAX_SITES });
    }
    let p = permutation_op();
    let mut s = linalg::identity(1 << length);
    for k in 0..length - 1 {
        s *= embed_operator(&p, &[k, k + 1], length);
    }
    Ok(s)
}

/// `M · (op acting on one site)` without forming the embedded operator.
fn right_multiply_site(m: &CMatrix, op: &[[C64; 2]; 2], site: usize, n_sites: usize) -> CMatrix {
    let bit = site_bit(site, n_sites);
    let dim = m.ncols();
    let mut out = CMatrix::zeros(m.nrows(), dim);
    for col in 0..dim {
        let b_in = usize::from(col & bit != 0);
        let base = col & !bit;
        for (b, row) in op.iter().enumerate() {
            let w = row[b_in];
            if w == ZERO {
                continue;
            }
            let src = if b == 1 { base | bit } else { base };
            let mut dst = out.column_mut(col);
            dst.axpy(w, &m.column(src), ONE);
        }
    }
    out
}

/// Transfer matrix `t = tr_0 R_{0L} ⋯ R_{01}` of a 4×4 matrix on a periodic
/// chain.
pub fn transfer_matrix_of(r: &CMatrix, length: usize) -> Result<CMatrix> {
    if r.nrows() != 4 || r.ncols() != 4 {
        return Err(Error::DimensionMismatch { expected: 4, found: r.nrows() });
    }
    if !(2..=MAX_SITES).contains(&length) {
        return Err(Error::ChainLength { length, min: 2, max: MAX_SITES });
    }
    // Blocks of R_{0k} = Σ_{ab} E_ab ⊗ r_ab with the auxiliary space first.
    let block = |a: usize, b: usize| -> [[C64; 2]; 2] {
        [[r[(2 * a, 2 * b)], r[(2 * a, 2 * b + 1)]], [r[(2 * a + 1, 2 * b)], r[(2 * a + 1, 2 * b + 1)]]]
    };
    let dim = 1usize << length;
    let id = linalg::identity(dim);
    // Monodromy blocks T_ab, starting from R_{0L} (last site, index L-1).
    let mut t: [[CMatrix; 2]; 2] = [
        [right_multiply_site(&id, &block(0, 0), length - 1, length), right_multiply_site(&id, &block(0, 1), length - 1, length)],
        [right_multiply_site(&id, &block(1, 0), length - 1, length), right_multiply_site(&id, &block(1, 1), length - 1, length)],
    ];
    for site in (0..length - 1).rev() {
        let mut next: [[CMatrix; 2]; 2] = Default::default();
        for (row, ta) in next.iter_mut().zip(&t) {
            for (b, slot) in row.iter_mut().enumerate() {
                *slot = right_multiply_site(&ta[0], &block(0, b), site, length) + right_multiply_site(&ta[1], &block(1, b), site, length);
            }
        }
        t = next;
    }
    let [[t00, _], [_, t11]] = t;
    Ok(t00 + t11)
}

pub fn transfer_matrix(r: &RMatrixFn, u: C64, length: usize) -> Result<CMatrix> {
    transfer_matrix_of(&r.eval(u)?, length)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{self, Family};
    use crate::linalg::c;
    use crate::pauli::{sigma, MINUS, PLUS, Z};
    use proptest::prelude::*;

    /// Oracle: apply an operator on chosen sites by explicit basis-vector action.
    fn brute_embed(op: &CMatrix, sites: &[usize], n: usize) -> CMatrix {
        let dim = 1 << n;
        let bit = |state: usize, s: usize| (state >> (n - 1 - s)) & 1;
        CMatrix::from_fn(dim, dim, |row, col| {
            // Sites outside `sites` must agree.
            for s in 0..n {
                if !sites.contains(&s) && bit(row, s) != bit(col, s) {
                    return ZERO;
                }
            }
            let local = |state: usize| sites.iter().fold(0, |acc, &s| (acc << 1) | bit(state, s));
            op[(local(row), local(col))]
        })
    }

    fn random_matrix(dim: usize, seed: u64) -> CMatrix {
        CMatrix::from_fn(dim, dim, |i, j| {
            let t = (seed as f64 + 1.0) * (i as f64 * 1.3 + j as f64 * 0.7 + 0.1);
            c(t.sin(), (t * 1.7).cos())
        })
    }

    #[test]
    fn kron_examples() {
        assert_eq!(kron(&linalg::identity(2), &linalg::identity(2)), linalg::identity(4));
        let zz = kron(&sigma(Z), &sigma(Z));
        assert_eq!(zz, linalg::from_real(4, &[1., 0., 0., 0., 0., -1., 0., 0., 0., 0., -1., 0., 0., 0., 0., 1.]));
        let pm = kron(&sigma(PLUS), &sigma(MINUS));
        for i in 0..4 {
            for j in 0..4 {
                let want = if (i, j) == (1, 2) { 1.0 } else { 0.0 };
                assert_eq!(pm[(i, j)], c(want, 0.0));
            }
        }
    }

    #[test]
    fn kron_associative() {
        // Small integers keep every product exact in floating point.
        let int = |m: CMatrix| m.map(|z| c((z.re * 8.0).round(), (z.im * 8.0).round()));
        let (a, b, cc) = (int(random_matrix(2, 1)), int(random_matrix(4, 2)), int(random_matrix(2, 3)));
        assert_eq!(kron(&kron(&a, &b), &cc), kron(&a, &kron(&b, &cc)));
    }

    #[test]
    fn permutation_swaps() {
        let p = permutation_op();
        assert_eq!(&p * &p, linalg::identity(4));
        // e1 ⊗ e2 is basis index 1, e2 ⊗ e1 is index 2.
        assert_eq!(p[(2, 1)], ONE);
        assert_eq!(p[(1, 2)], ONE);
        let id = linalg::identity(4);
        for (row, src) in [0, 2, 1, 3].into_iter().enumerate() {
            assert_eq!(p.row(row), id.row(src));
        }
    }

    #[test]
    fn embedding_examples() {
        let id = LocalDensity::identity(2);
        for n in 0..2 {
            assert_eq!(embed_density(&id, n, 3, false).unwrap(), linalg::identity(8));
        }
        let p = LocalDensity::new(permutation_op()).unwrap();
        assert_eq!(embed_density(&p, 0, 3, false).unwrap(), kron(&permutation_op(), &linalg::identity(2)));
        assert!(matches!(embed_density(&p, 2, 3, false), Err(Error::SiteOutOfRange { .. })));
    }

    #[test]
    fn wrapped_embedding_is_conjugated_by_shift() {
        let p = LocalDensity::new(permutation_op()).unwrap();
        let p31 = embed_density(&p, 2, 3, true).unwrap();
        assert_eq!(p31, brute_embed(&permutation_op(), &[2, 0], 3));
        let s = shift_operator(3).unwrap();
        let s_inv = linalg::inverse(&s).unwrap();
        let p12 = kron(&permutation_op(), &linalg::identity(2));
        let conj = &s * &p12 * &s_inv;
        let conj_back = &s_inv * &p12 * &s;
        assert!(linalg::max_abs(&(&p31 - &conj)) < 1e-15 || linalg::max_abs(&(&p31 - &conj_back)) < 1e-15);
    }

    #[test]
    fn embedding_matches_brute_force() {
        let op = random_matrix(8, 4);
        for sites in [[0, 1, 2], [3, 0, 1], [4, 0, 2], [1, 4, 3]] {
            assert_eq!(embed_operator(&op, &sites, 5), brute_embed(&op, &sites, 5));
        }
    }

    #[test]
    fn periodic_sum_examples() {
        assert_eq!(periodic_sum(&LocalDensity::identity(2), 4).unwrap(), linalg::identity(16) * c(4.0, 0.0));
        let zz = LocalDensity::new(kron(&sigma(Z), &sigma(Z))).unwrap();
        let s = periodic_sum(&zz, 3).unwrap();
        // Oracle: count aligned neighbouring pairs minus anti-aligned ones.
        for state in 0..8usize {
            let spin = |k: usize| if (state >> (2 - k)) & 1 == 0 { 1.0 } else { -1.0 };
            let want: f64 = (0..3).map(|k| spin(k) * spin((k + 1) % 3)).sum();
            assert_eq!(s[(state, state)], c(want, 0.0));
        }
        assert_eq!(s[(0, 0)], c(3.0, 0.0));
        assert!(linalg::max_abs(&(s.clone() - CMatrix::from_diagonal(&s.diagonal()))) == 0.0);
        assert!(matches!(periodic_sum(&LocalDensity::identity(3), 2), Err(Error::ChainLength { .. })));
    }

    #[test]
    fn shift_is_t_of_zero() {
        let r = catalog::rmatrix(&catalog::sample_params(Family::C5, 0)).unwrap();
        for l in 2..=5 {
            let t0 = transfer_matrix(&r, ZERO, l).unwrap();
            assert!(linalg::max_abs(&(t0 - shift_operator(l).unwrap())) < 1e-12, "L = {l}");
        }
        let p = RMatrixFn::permutation();
        let t = transfer_matrix(&p, c(0.4, 0.3), 4).unwrap();
        assert_eq!(t, shift_operator(4).unwrap());
    }

    #[test]
    fn shift_translates_sites() {
        let s = shift_operator(3).unwrap();
        // Cyclic shift is a permutation matrix of order L.
        assert_eq!(linalg::matrix_power(&s, 3), linalg::identity(8));
        assert_ne!(s, linalg::identity(8));
    }

    #[test]
    fn transfer_matrices_commute_for_class2() {
        let r = catalog::rmatrix(&catalog::sample_params(Family::C2, 9)).unwrap();
        let a = transfer_matrix(&r, c(0.1, 0.0), 3).unwrap();
        let b = transfer_matrix(&r, c(0.2, 0.0), 3).unwrap();
        assert!(linalg::max_abs(&linalg::commutator(&a, &b)) < 1e-9);
    }

    #[test]
    fn transfer_matrix_matches_dense_trace() {
        // Oracle: build R_{0k} on L+1 sites densely and trace out site 0.
        let r = catalog::rmatrix(&catalog::sample_params(Family::C3, 2)).unwrap();
        let u = c(0.3, -0.2);
        let rm = r.eval(u).unwrap();
        let l = 3;
        let mut mono = linalg::identity(1 << (l + 1));
        for k in (1..=l).rev() {
            mono *= embed_operator(&rm, &[0, k], l + 1);
        }
        let dim = 1 << l;
        let traced = CMatrix::from_fn(dim, dim, |i, j| mono[(i, j)] + mono[(i + dim, j + dim)]);
        assert!(linalg::max_abs(&(traced - transfer_matrix(&r, u, l).unwrap())) < 1e-13);
    }

    #[test]
    fn density_validation() {
        assert!(matches!(LocalDensity::new(CMatrix::zeros(3, 3)), Err(Error::NotPowerOfTwo(3))));
        assert!(matches!(LocalDensity::new(CMatrix::zeros(2, 4)), Err(Error::NotSquare { .. })));
        let mut m = CMatrix::zeros(2, 2);
        m[(0, 0)] = c(f64::NAN, 0.0);
        assert!(matches!(LocalDensity::new(m), Err(Error::NonFinite)));
        assert!(matches!(LocalDensity::with_range(linalg::identity(4), 3), Err(Error::WrongRange { .. })));
    }

    proptest! {
        #[test]
        fn delta_a_sums_to_zero_exactly(entries in proptest::collection::vec((-50i64..50, -50i64..50), 4), length in 2usize..=6) {
            use crate::exact::{self, ExactMatrix};
            let a = ExactMatrix::from_fn(2, 2, |i, j| { let (re, im) = entries[2 * i + j]; exact::gauss(re, 3, im, 7) });
            let id = ExactMatrix::identity(2, 2);
            let delta = a.kronecker(&id) - id.kronecker(&a);
            let total = periodic_sum_generic(&delta, 2, length).unwrap();
            prop_assert!(exact::exact_is_zero(&total));
        }
    }
}
