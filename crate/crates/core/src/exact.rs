//! Gaussian rationals `Q(i)` for the exact parts of the toolkit.

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_complex::Complex;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::C64;

pub type GaussRat = Complex<BigRational>;
pub type ExactMatrix = DMatrix<GaussRat>;

pub fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// `n/d + (m/e) i`
pub fn gauss(n: i64, d: i64, m: i64, e: i64) -> GaussRat {
    Complex::new(rat(n, d), rat(m, e))
}

pub fn gint(n: i64) -> GaussRat {
    Complex::new(rat(n, 1), BigRational::zero())
}

pub fn gzero() -> GaussRat {
    GaussRat::zero()
}

pub fn gone() -> GaussRat {
    GaussRat::one()
}

pub fn to_c64(z: &GaussRat) -> C64 {
    C64::new(rat_to_f64(&z.re), rat_to_f64(&z.im))
}

pub fn rat_to_f64(q: &BigRational) -> f64 {
    q.to_f64().unwrap_or_else(|| {
        // Fall back to a scaled division for huge numerators/denominators.
        let n = q.numer().to_f64().unwrap_or(f64::INFINITY);
        let d = q.denom().to_f64().unwrap_or(f64::INFINITY);
        n / d
    })
}

/// Exact conversion of a finite `f64` (every double is a dyadic rational).
pub fn from_f64(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite float")
}

pub fn from_c64(z: C64) -> GaussRat {
    Complex::new(from_f64(z.re), from_f64(z.im))
}

/// Renders a rational as `p/q` (or `p` when the denominator is one).
pub fn rat_string(q: &BigRational) -> String {
    if q.denom().is_one() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

pub fn is_integer(q: &BigRational) -> bool {
    q.denom().is_one()
}

pub fn abs_rat(q: &BigRational) -> BigRational {
    q.abs()
}

pub fn exact_from_c64_matrix(m: &crate::CMatrix) -> ExactMatrix {
    ExactMatrix::from_fn(m.nrows(), m.ncols(), |i, j| from_c64(m[(i, j)]))
}

pub fn exact_to_c64_matrix(m: &ExactMatrix) -> crate::CMatrix {
    crate::CMatrix::from_fn(m.nrows(), m.ncols(), |i, j| to_c64(&m[(i, j)]))
}

pub fn exact_is_zero(m: &ExactMatrix) -> bool {
    m.iter().all(|z| z.is_zero())
}
