//! Spectral diagnostics: Jordan structure, nilpotency, diagonalizability of
//! the triangular classes and spectral comparison with reference chains.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::catalog::{self, exact_hamiltonian, Family, ParamVector};
use crate::error::{Error, Result};
use crate::exact::{exact_is_zero, gauss, ExactMatrix, GaussRat};
use crate::linalg::{self, CMatrix, C64};
use crate::pauli;
use crate::tensor::{self, periodic_sum, periodic_sum_generic, LocalDensity};

/// Default relative threshold for rank decisions and spectral comparisons.
pub const DEFAULT_TOL: f64 = 1e-8;

/// Largest chain accepted by [`eigenvalue_equivalence`] and [`Level::Periodic`].
pub const MAX_LENGTH: usize = 8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JordanEigenvalue {
    pub value: C64,
    pub algebraic: usize,
    pub geometric: usize,
    pub largest_block: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JordanProfile {
    pub eigenvalues: Vec<JordanEigenvalue>,
    pub tolerance: f64,
    /// Set when the clustering or the rank sequence is numerically doubtful.
    pub warning: Option<String>,
}

impl JordanProfile {
    pub fn dim(&self) -> usize {
        self.eigenvalues.iter().map(|e| e.algebraic).sum()
    }

    pub fn is_diagonalizable(&self) -> bool {
        self.largest_block() <= 1
    }

    pub fn largest_block(&self) -> usize {
        self.eigenvalues.iter().map(|e| e.largest_block).max().unwrap_or(0)
    }
}

/// Coarsest radius (relative to σ_max) at which eigenvalues are grouped.
/// Rounding splits a size-`k` Jordan block by about `ε^{1/k}`.
const CLUSTER_RADIUS: f64 = 1e-2;

/// Single-linkage components of `group` at `radius`.
fn components(eig: &[C64], group: &[usize], radius: f64) -> Vec<Vec<usize>> {
    let mut left: Vec<usize> = group.to_vec();
    let mut out = Vec::new();
    while let Some(seed) = left.pop() {
        let mut comp = vec![seed];
        let mut i = 0;
        while i < comp.len() {
            let z = eig[comp[i]];
            let (near, far): (Vec<usize>, Vec<usize>) = left.iter().partition(|&&j| (eig[j] - z).norm() <= radius);
            comp.extend(near);
            left = far;
            i += 1;
        }
        out.push(comp);
    }
    out
}

/// Accepts a group once its generalized eigenspace has the dimension of the
/// group, otherwise splits it at a tenth of the radius.
fn refine(m: &CMatrix, eig: &[C64], group: Vec<usize>, radius: f64, floor: f64, tol: f64, out: &mut Vec<Vec<C64>>) {
    let values: Vec<C64> = group.iter().map(|&i| eig[i]).collect();
    if group.len() == 1 || radius <= floor {
        out.push(values);
        return;
    }
    let n = m.nrows();
    let shifted = m - linalg::identity(n) * mean(&values);
    if nullity(&linalg::matrix_power(&shifted, group.len()), tol) == group.len() {
        out.push(values);
        return;
    }
    for part in components(eig, &group, radius / 10.0) {
        refine(m, eig, part, radius / 10.0, floor, tol, out);
    }
}

fn mean(zs: &[C64]) -> C64 {
    zs.iter().sum::<C64>() / zs.len() as f64
}

fn nullity(a: &CMatrix, tol: f64) -> usize {
    a.nrows() - linalg::rank(a, tol)
}

/// Eigenvalues with algebraic and geometric multiplicities and the largest
/// Jordan block, from the rank sequence of `(M - λ)^k`.
pub fn jordan_profile(m: &CMatrix, tol: f64) -> Result<JordanProfile> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(Error::NotSquare { rows: n, cols: m.ncols() });
    }
    if !linalg::is_finite(m) {
        return Err(Error::NonFinite);
    }
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::Input(format!("tolerance {tol} must lie in (0, 1)")));
    }
    let scale = linalg::singular_values(m).first().copied().unwrap_or(0.0);
    let eig = linalg::eigenvalues(m);
    let floor = tol * scale;
    let mut clusters = Vec::new();
    for group in components(&eig, &(0..n).collect::<Vec<_>>(), CLUSTER_RADIUS * scale) {
        refine(m, &eig, group, CLUSTER_RADIUS * scale, floor, tol, &mut clusters);
    }

    let mut warnings = Vec::new();
    let mut out = Vec::with_capacity(clusters.len());
    for cl in &clusters {
        let value = mean(cl);
        let alg = cl.len();
        let shifted = m - linalg::identity(n) * value;
        let mut ranks = vec![n];
        let mut power = linalg::identity(n);
        for _ in 0..alg {
            power = &power * &shifted;
            ranks.push(linalg::rank(&power, tol));
        }
        let geometric = n - ranks[1];
        let largest_block = (1..=alg).rev().find(|&k| ranks[k - 1] > ranks[k]).unwrap_or(0);
        if ranks[alg] + alg != n {
            warnings.push(format!("generalized eigenspace at {value:.6e} has dimension {} instead of {alg}", n - ranks[alg]));
        }
        let spread = cl.iter().map(|z| (z - value).norm()).fold(0.0, f64::max);
        if alg > 1 && geometric == alg && spread > tol * scale.max(1.0) {
            warnings.push(format!("eigenvalues near {value:.6e} spread by {spread:.1e} were merged"));
        }
        out.push(JordanEigenvalue { value, algebraic: alg, geometric, largest_block });
    }
    out.sort_by(|x, y| x.value.re.total_cmp(&y.value.re).then(x.value.im.total_cmp(&y.value.im)));
    let warning = (!warnings.is_empty()).then(|| warnings.join("; "));
    Ok(JordanProfile { eigenvalues: out, tolerance: tol, warning })
}

fn inf_norm(a: &CMatrix) -> f64 {
    a.row_iter().map(|r| r.iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max)
}

/// Smallest `k ≤ k_max` with `‖M^k‖∞ < tol ‖M‖∞^k`.
pub fn nilpotency_index(m: &CMatrix, tol: f64, k_max: usize) -> Result<Option<usize>> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare { rows: m.nrows(), cols: m.ncols() });
    }
    if k_max == 0 {
        return Err(Error::Input("k_max must be at least 1".into()));
    }
    let norm = inf_norm(m);
    if norm == 0.0 {
        return Ok(Some(1));
    }
    // Work with M/‖M‖ so the threshold stays `tol` at every power.
    let unit = m / C64::from(norm);
    let mut power = unit.clone();
    for k in 1..=k_max {
        if inf_norm(&power) < tol {
            return Ok(Some(k));
        }
        power = &power * &unit;
    }
    Ok(None)
}

/// Exact version of [`nilpotency_index`]: `Some(k)` certifies a spectral
/// radius of exactly zero.
pub fn exact_nilpotency_index(m: &ExactMatrix, k_max: usize) -> Option<usize> {
    let mut power = m.clone();
    for k in 1..=k_max {
        if exact_is_zero(&power) {
            return Some(k);
        }
        power = &power * m;
    }
    None
}

/// Small Gaussian-integer parameters with the constraints solved exactly.
pub fn exact_sample(family: Family, seed: u64) -> Vec<GaussRat> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xA11C_E5EE_D000_0000);
    let mut draw = || loop {
        let (re, im) = (rng.gen_range(-3i64..=3), rng.gen_range(-3i64..=3));
        if re != 0 || im != 0 {
            return gauss(re, 1, im, 1);
        }
    };
    let mut values: Vec<GaussRat> = (0..family.n_params()).map(|_| draw()).collect();
    if family == Family::C1 {
        values[3] = &values[0] * &values[2] / &values[1];
    }
    values
}

/// Periodic `Q₂ = Σ_n H_{n,n+1}` in exact arithmetic.
pub fn exact_periodic_q2(family: Family, values: &[GaussRat], length: usize) -> Result<ExactMatrix> {
    periodic_sum_generic(&exact_hamiltonian(family, values), 2, length)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Level {
    Density,
    /// Periodic `Q₂` on this many sites.
    Periodic(usize),
}

impl std::fmt::Display for Level {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Level::Density => write!(f, "density"),
            Level::Periodic(l) => write!(f, "periodic L={l}"),
        }
    }
}

fn check_length(length: usize) -> Result<()> {
    if !(2..=MAX_LENGTH).contains(&length) {
        return Err(Error::ChainLength { length, min: 2, max: MAX_LENGTH });
    }
    Ok(())
}

pub fn level_matrix(params: &ParamVector, level: Level) -> Result<CMatrix> {
    let h = catalog::hamiltonian(params);
    match level {
        Level::Density => Ok(h.matrix().clone()),
        Level::Periodic(l) => {
            check_length(l)?;
            periodic_sum(&h, l)
        }
    }
}

const TRIANGULAR: [Family; 4] = [Family::C3, Family::C4, Family::C5, Family::C6];

fn expect_triangular(family: Family) -> Result<()> {
    if TRIANGULAR.contains(&family) {
        Ok(())
    } else {
        Err(Error::Unsupported(format!("{family} has no diagonalizability condition")))
    }
}

/// The published diagonalizability condition of classes 3 to 6:
/// `a3 = 0`; `a2 = a4` and `a1 a3 = a2 a4`; `a2 + a3 = 0`; `a2 = 0`.
pub fn stated_condition(params: &ParamVector) -> Result<bool> {
    let family = params.family();
    expect_triangular(family)?;
    let a = params.values();
    let scale = a.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let small = |z: C64, deg: i32| z.norm() <= 1e-10 * scale.powi(deg);
    Ok(match family {
        Family::C3 => small(a[2], 1),
        Family::C4 => small(a[1] - a[3], 1) && small(a[0] * a[2] - a[1] * a[3], 2),
        Family::C5 => small(a[1] + a[2], 1),
        Family::C6 => small(a[1], 1),
        _ => unreachable!(),
    })
}

/// A pseudo-random member satisfying [`stated_condition`].
pub fn condition_sample(family: Family, seed: u64) -> Result<ParamVector> {
    expect_triangular(family)?;
    let mut a = catalog::sample_params(family, seed).values().to_vec();
    match family {
        Family::C3 => a[2] = C64::from(0.0),
        Family::C4 => {
            if a[0].norm() < 0.2 {
                a[0] += C64::from(0.5);
            }
            a[3] = a[1];
            a[2] = a[1] * a[1] / a[0];
        }
        Family::C5 => a[2] = -a[1],
        Family::C6 => a[1] = C64::from(0.0),
        _ => unreachable!(),
    }
    ParamVector::new(family, a)
}

/// Both directions of the diagonalizability condition over random samples.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagonalizabilityCheck {
    pub family: Family,
    pub level: Level,
    pub samples: usize,
    /// Samples satisfying the condition that came out diagonalizable.
    pub condition_diagonalizable: usize,
    /// Generic samples that came out with a block of size at least two.
    pub violation_defective: usize,
}

impl DiagonalizabilityCheck {
    pub fn sufficient(&self) -> bool {
        self.condition_diagonalizable == self.samples
    }

    pub fn necessary(&self) -> bool {
        self.violation_defective == self.samples
    }
}

pub fn check_diagonalizability(family: Family, level: Level, samples: usize, seed: u64) -> Result<DiagonalizabilityCheck> {
    expect_triangular(family)?;
    let results: Vec<(bool, bool)> = (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let good = condition_sample(family, seed + i)?;
            let generic = catalog::sample_params(family, seed + i);
            let d_good = jordan_profile(&level_matrix(&good, level)?, DEFAULT_TOL)?.is_diagonalizable();
            let d_generic = jordan_profile(&level_matrix(&generic, level)?, DEFAULT_TOL)?.is_diagonalizable();
            Ok((d_good, !d_generic))
        })
        .collect::<Result<_>>()?;
    Ok(DiagonalizabilityCheck {
        family,
        level,
        samples,
        condition_diagonalizable: results.iter().filter(|r| r.0).count(),
        violation_defective: results.iter().filter(|r| r.1).count(),
    })
}

/// Largest modulus among the Schur eigenvalues.
pub fn spectral_radius(m: &CMatrix) -> f64 {
    linalg::eigenvalues(m).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Largest coefficient difference of the characteristic polynomials, with
/// `c_k` divided by `s^{n-k}` for `s` the larger spectral radius (at least 1).
pub fn charpoly_deviation(a: &CMatrix, b: &CMatrix) -> f64 {
    let s = spectral_radius(a).max(spectral_radius(b)).max(1.0);
    let (p, q) = (linalg::charpoly(a), linalg::charpoly(b));
    let n = p.len() - 1;
    p.iter().zip(&q).enumerate().map(|(k, (x, y))| (x - y).norm() / s.powi((n - k) as i32)).fold(0.0, f64::max)
}

/// Largest [`charpoly_deviation`] from a base member when every parameter
/// except `a1` is redrawn, over `samples` redraws.
pub fn a1_dependence(family: Family, level: Level, samples: usize, seed: u64) -> Result<f64> {
    expect_triangular(family)?;
    let base = catalog::sample_params(family, seed);
    let m0 = level_matrix(&base, level)?;
    let devs: Vec<f64> = (1..=samples as u64)
        .into_par_iter()
        .map(|i| {
            let mut v = catalog::sample_params(family, seed.wrapping_add(i.wrapping_mul(7919))).values().to_vec();
            v[0] = base.values()[0];
            Ok(charpoly_deviation(&m0, &level_matrix(&ParamVector::new(family, v)?, level)?))
        })
        .collect::<Result<_>>()?;
    Ok(devs.into_iter().fold(0.0, f64::max))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Reference {
    /// `Sᶻ ⊗ Sᶻ`
    SzSz,
    /// `1 - 2P`
    OneMinus2P,
}

impl Reference {
    pub fn density(self) -> LocalDensity {
        let m = match self {
            Reference::SzSz => {
                let sz = pauli::sigma(3) * C64::from(0.5);
                linalg::kron(&sz, &sz)
            }
            Reference::OneMinus2P => linalg::identity(4) - tensor::permutation_op() * C64::from(2.0),
        };
        LocalDensity::new(m).expect("finite 4x4")
    }

    /// The reference chain whose spectrum a triangular class reproduces.
    pub fn for_family(family: Family) -> Option<Reference> {
        match family {
            Family::C3 | Family::C4 => Some(Reference::SzSz),
            Family::C5 | Family::C6 => Some(Reference::OneMinus2P),
            _ => None,
        }
    }
}

impl std::str::FromStr for Reference {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_', ' '], "").as_str() {
            "szsz" => Ok(Reference::SzSz),
            "oneminus2p" | "12p" => Ok(Reference::OneMinus2P),
            _ => Err(Error::Input(format!("unknown reference chain '{s}'"))),
        }
    }
}

/// Spectral comparison of a family chain with `scale · reference + shift`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenvalueEquivalence {
    pub reference: Reference,
    pub length: usize,
    pub scale: C64,
    /// Identity shift per bond.
    pub shift: C64,
    /// Deviation of the two-site fit the affine map was taken from.
    pub fit_deviation: f64,
    pub deviation: f64,
}

/// Fits `H ≃ s·H_ref + t` on the two-site periodic chain, then compares the
/// characteristic polynomials on `length` sites.
///
/// Candidates come from matching every pair of two-site eigenvalues. When
/// several fit equally well (for `Sᶻ⊗Sᶻ` the sign of `s` is invisible on
/// two sites), the one that does best at `length` is reported.
pub fn eigenvalue_equivalence(params: &ParamVector, length: usize, reference: Reference) -> Result<EigenvalueEquivalence> {
    let family = params.family();
    if Reference::for_family(family) != Some(reference) {
        return Err(Error::Unsupported(format!("{family} against {reference:?}")));
    }
    check_length(length)?;
    let h = catalog::hamiltonian(params);
    let r = reference.density();
    let (fam2, ref2) = (periodic_sum(&h, 2)?, periodic_sum(&r, 2)?);
    let (lam, mu) = (linalg::eigenvalues(&fam2), linalg::eigenvalues(&ref2));
    let mu_scale = mu.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let mapped = |m: &CMatrix, s: C64, t: C64| m * s + linalg::identity(m.nrows()) * t;

    let mut candidates: Vec<(C64, C64, f64)> = Vec::new();
    for (i, &li) in lam.iter().enumerate() {
        for (j, &lj) in lam.iter().enumerate() {
            for (k, &mk) in mu.iter().enumerate() {
                for &ml in &mu[k + 1..] {
                    if i == j || (mk - ml).norm() <= 1e-9 * mu_scale {
                        continue;
                    }
                    let s = (li - lj) / (mk - ml);
                    let t = li - s * mk;
                    if candidates.iter().any(|(s2, t2, _)| (s - s2).norm() + (t - t2).norm() < 1e-9 * (1.0 + s.norm())) {
                        continue;
                    }
                    let dev = charpoly_deviation(&fam2, &mapped(&ref2, s, t));
                    candidates.push((s, t / 2.0, dev));
                }
            }
        }
    }
    let best = candidates.iter().map(|c| c.2).fold(f64::INFINITY, f64::min);
    if !best.is_finite() {
        return Err(Error::Input("degenerate reference spectrum".into()));
    }
    let fam = periodic_sum(&h, length)?;
    let refl = periodic_sum(&r, length)?;
    let cutoff = (10.0 * best).max(DEFAULT_TOL);
    candidates
        .into_iter()
        .filter(|c| c.2 <= cutoff)
        .map(|(scale, shift, fit_deviation)| {
            let deviation = charpoly_deviation(&fam, &mapped(&refl, scale, shift * length as f64));
            EigenvalueEquivalence { reference, length, scale, shift, fit_deviation, deviation }
        })
        .min_by(|a, b| a.deviation.total_cmp(&b.deviation))
        .ok_or_else(|| Error::Input("no affine fit".into()))
}
