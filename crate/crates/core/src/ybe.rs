//! Numerical checks of the Yang–Baxter equation
//! `R12(u-v) R13(u) R23(v) = R23(v) R13(u) R12(u-v)` and of the standard
//! properties of a regular R-matrix.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::catalog::{self, Family, ParamVector};
use crate::linalg::{self, CMatrix, C64};
use crate::rmatrix::{Provenance, RMatrixFn};
use crate::tensor::{self, LocalDensity};
use crate::{Error, Result};

/// Radius of the complex bidisk `(u, v)` samples are drawn from.
pub const SAMPLE_RADIUS: f64 = 0.5;

/// Sampling radius for order-8 truncated series: the truncation error of the
/// YBE stays below `1e-9` there for the catalog families at unit scale.
pub const SERIES_RADIUS: f64 = 0.05;

/// Step of the central-difference derivative at the origin.
pub const DIFF_STEP: f64 = 1e-3;

/// `|R(0) - P|_F` above which an R-matrix counts as non-regular.
pub const REGULARITY_TOL: f64 = 1e-8;

/// The three embeddings of a 4×4 `R` into the 8-dimensional space.
pub fn embeddings(r12: &CMatrix, r13: &CMatrix, r23: &CMatrix) -> (CMatrix, CMatrix, CMatrix) {
    let id = linalg::identity(2);
    let p = tensor::permutation_op();
    let p12 = linalg::kron(&p, &id);
    let a = linalg::kron(r12, &id);
    let b = &p12 * linalg::kron(&id, r13) * &p12;
    let c = linalg::kron(&id, r23);
    (a, b, c)
}

/// `‖R12(u-v) R13(u) R23(v) - R23(v) R13(u) R12(u-v)‖_∞` (largest entry).
pub fn ybe_residual(r: &RMatrixFn, u: C64, v: C64) -> Result<f64> {
    let (a, b, c) = embeddings(&r.eval(u - v)?, &r.eval(u)?, &r.eval(v)?);
    Ok(linalg::max_abs(&(&a * &b * &c - &c * &b * &a)))
}

/// `‖R(0) - P‖_F`.
pub fn regularity_check(r: &RMatrixFn) -> Result<f64> {
    Ok(linalg::frobenius(&(r.eval(C64::new(0.0, 0.0))? - tensor::permutation_op())))
}

/// Largest distance of `R(u) P R(-u) P` from the nearest multiple of the
/// identity over the sample points.
pub fn braiding_unitarity_check(r: &RMatrixFn, samples: &[C64]) -> Result<f64> {
    let p = tensor::permutation_op();
    let mut worst: f64 = 0.0;
    for &u in samples {
        let m = r.eval(u)? * &p * r.eval(-u)? * &p;
        let c = linalg::trace(&m) / 4.0;
        worst = worst.max(linalg::frobenius(&(m - linalg::identity(4) * c)));
    }
    Ok(worst)
}

/// A point drawn uniformly from the disk `|z| ≤ radius`.
pub fn sample_disk(rng: &mut impl Rng, radius: f64) -> C64 {
    let r = radius * rng.gen::<f64>().sqrt();
    C64::from_polar(r, rng.gen_range(0.0..std::f64::consts::TAU))
}

/// `count` pairs from the bidisk of radius [`SAMPLE_RADIUS`] at which `R(u)`,
/// `R(v)`, `R(u-v)` and `R(-u)` all evaluate; other draws are rejected.
pub fn sample_pairs(r: &RMatrixFn, count: usize, seed: u64) -> Vec<(C64, C64)> {
    sample_pairs_within(r, count, seed, SAMPLE_RADIUS)
}

/// [`sample_pairs`] on the bidisk of the given radius.
pub fn sample_pairs_within(r: &RMatrixFn, count: usize, seed: u64, radius: f64) -> Vec<(C64, C64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    let mut attempts = 0;
    while out.len() < count && attempts < 100 * count.max(1) {
        attempts += 1;
        let (u, v) = (sample_disk(&mut rng, radius), sample_disk(&mut rng, radius));
        if [u, v, u - v, -u].iter().all(|&z| r.eval(z).is_ok()) {
            out.push((u, v));
        }
    }
    out
}

/// Estimate of `P·R'(0)` and of its error.
#[derive(Clone, Debug)]
pub struct ExtractedHamiltonian {
    pub density: LocalDensity,
    pub error_estimate: f64,
}

fn central_difference(r: &RMatrixFn, h: f64) -> Result<CMatrix> {
    let at = |t: f64| r.eval(C64::new(t, 0.0));
    let d = (at(-2.0 * h)? - at(2.0 * h)? + (at(h)? - at(-h)?) * C64::from(8.0)) / C64::from(12.0 * h);
    Ok(d)
}

/// `H = P·R'(0)` from fourth-order central differences at steps `h` and
/// `h/2`, combined by Richardson extrapolation.
pub fn extract_hamiltonian(r: &RMatrixFn) -> Result<ExtractedHamiltonian> {
    let reg = regularity_check(r)?;
    if reg > REGULARITY_TOL {
        return Err(Error::NotRegular(reg));
    }
    let p = tensor::permutation_op();
    let coarse = central_difference(r, DIFF_STEP)?;
    let fine = central_difference(r, DIFF_STEP / 2.0)?;
    let rich = (&fine * C64::from(16.0) - &coarse) / C64::from(15.0);
    let error_estimate = linalg::frobenius(&(&rich - &fine));
    Ok(ExtractedHamiltonian { density: LocalDensity::new(&p * rich)?, error_estimate })
}

fn sci<S: Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&format!("{x:.16e}"))
}

fn sci_opt<S: Serializer>(x: &Option<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match x {
        Some(x) => sci(x, s),
        None => s.serialize_none(),
    }
}

fn pairs<S: Serializer>(xs: &[(C64, C64)], s: S) -> std::result::Result<S::Ok, S::Error> {
    let flat: Vec<[[String; 2]; 2]> = xs
        .iter()
        .map(|(u, v)| [[format!("{:.16e}", u.re), format!("{:.16e}", u.im)], [format!("{:.16e}", v.re), format!("{:.16e}", v.im)]])
        .collect();
    flat.serialize(s)
}

#[derive(Clone, Debug, Serialize)]
pub struct YbeReport {
    pub label: String,
    pub family: Option<Family>,
    pub params: Option<ParamVector>,
    pub provenance: Provenance,
    #[serde(serialize_with = "pairs")]
    pub sample_points: Vec<(C64, C64)>,
    #[serde(serialize_with = "sci")]
    pub max_residual: f64,
    #[serde(serialize_with = "sci")]
    pub regularity_error: f64,
    #[serde(serialize_with = "sci")]
    pub unitarity_error: f64,
    /// `‖P·R'(0) - H‖_F` against the reference Hamiltonian, when one is known.
    #[serde(serialize_with = "sci_opt")]
    pub extracted_h_error: Option<f64>,
}

/// All checks for `r` on `samples` seeded pairs. The reference Hamiltonian
/// defaults to the catalog density when `r` carries family parameters.
pub fn verify(r: &RMatrixFn, samples: usize, seed: u64, reference: Option<&LocalDensity>) -> Result<YbeReport> {
    verify_within(r, samples, seed, reference, SAMPLE_RADIUS)
}

/// [`verify`] with sample points from the bidisk of the given radius; used
/// for truncated series, which are only accurate close to the origin.
pub fn verify_within(r: &RMatrixFn, samples: usize, seed: u64, reference: Option<&LocalDensity>, radius: f64) -> Result<YbeReport> {
    let sample_points = sample_pairs_within(r, samples, seed, radius);
    if sample_points.len() < samples {
        return Err(Error::Input(format!("only {} of {samples} sample points avoid singularities", sample_points.len())));
    }
    let residuals: Vec<f64> = sample_points.par_iter().map(|&(u, v)| ybe_residual(r, u, v)).collect::<Result<_>>()?;
    let max_residual = residuals.into_iter().fold(0.0, f64::max);
    let regularity_error = regularity_check(r)?;
    let us: Vec<C64> = sample_points.iter().map(|p| p.0).collect();
    let unitarity_error = braiding_unitarity_check(r, &us)?;
    let owned;
    let reference = match (reference, r.params()) {
        (Some(h), _) => Some(h),
        (None, Some(p)) => {
            owned = catalog::hamiltonian(p);
            Some(&owned)
        }
        _ => None,
    };
    let extracted_h_error = match reference {
        Some(h) if regularity_error <= REGULARITY_TOL => {
            let e = extract_hamiltonian(r)?;
            Some(linalg::frobenius(&(e.density.matrix() - h.matrix())))
        }
        _ => None,
    };
    Ok(YbeReport {
        label: r.label().to_string(),
        family: r.family(),
        params: r.params().cloned(),
        provenance: r.provenance(),
        sample_points,
        max_residual,
        regularity_error,
        unitarity_error,
        extracted_h_error,
    })
}
