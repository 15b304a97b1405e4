//! Matching an arbitrary integrable density against the catalog up to local
//! basis changes, the discrete maps, rescaling and shifts.

use std::sync::OnceLock;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::probe::{dkron, equivalence_probe, flatten, gauss_newton, random_start, Equivalence, ProbeOptions, Witness};
use super::{discrete_transform, normalize, DiscreteTransform};
use crate::catalog::{self, Family, ParamVector};
use crate::linalg::{self, CMatrix, CVector, C64, ONE};
use crate::poly::CompiledPoly;
use crate::tensor::LocalDensity;
use crate::Result;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IdentifyOptions {
    /// Random starts per (family, discrete variant).
    pub starts: usize,
    pub seed: u64,
    pub max_iterations: usize,
    /// Relative fit residual below which a candidate is handed to the probe.
    pub fit_tolerance: f64,
    pub probe: ProbeOptions,
}

impl Default for IdentifyOptions {
    fn default() -> Self {
        Self { starts: 12, seed: 0, max_iterations: 80, fit_tolerance: 1e-10, probe: ProbeOptions::default() }
    }
}

/// `discrete(H)` is equivalent to `hamiltonian(params) + shift` via `witness`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FamilyMatch {
    pub family: Family,
    pub params: ParamVector,
    pub shift: C64,
    pub discrete: Option<DiscreteTransform>,
    pub witness: Witness,
}

struct FamilyModel {
    family: Family,
    entries: Vec<CompiledPoly>,
    /// `derivs[k][e]`: derivative of entry `e` in parameter `k`.
    derivs: Vec<Vec<CompiledPoly>>,
    constraints: Vec<CompiledPoly>,
    constraint_derivs: Vec<Vec<CompiledPoly>>,
}

fn models() -> &'static [FamilyModel] {
    static MODELS: OnceLock<Vec<FamilyModel>> = OnceLock::new();
    MODELS.get_or_init(|| {
        Family::ALL
            .iter()
            .map(|&family| {
                let sym = family.symbolic_hamiltonian();
                let n = family.n_params();
                let cons = family.constraint_polys();
                FamilyModel {
                    family,
                    entries: sym.iter().map(CompiledPoly::new).collect(),
                    derivs: (0..n).map(|k| sym.iter().map(|p| CompiledPoly::new(&p.derivative(k))).collect()).collect(),
                    constraints: cons.iter().map(CompiledPoly::new).collect(),
                    constraint_derivs: cons.iter().map(|g| (0..n).map(|k| CompiledPoly::new(&g.derivative(k))).collect()).collect(),
                }
            })
            .collect()
    })
}

fn compiled_matrix(polys: &[CompiledPoly], p: &[C64]) -> CMatrix {
    CMatrix::from_fn(4, 4, |i, j| polys[4 * i + j].eval(p))
}

/// Gauss-Newton on `(V⊗V) H = (H_f(p) + t) (V⊗V)`, `det V = 1` and the family
/// constraints, over `x = (V, p, t)`. `h` is assumed normalised.
fn fit(model: &FamilyModel, h: &CMatrix, x0: Vec<C64>, max_iterations: usize) -> (Vec<C64>, f64) {
    let n = model.family.n_params();
    let rows = 17 + model.constraints.len();
    let system = |x: &[C64]| {
        let v = linalg::from_rows(&[&[x[0], x[1]], &[x[2], x[3]]]);
        let p = &x[4..4 + n];
        let t = x[4 + n];
        let w = linalg::kron(&v, &v);
        let target = compiled_matrix(&model.entries, p) + linalg::identity(4) * t;
        let r = &w * h - &target * &w;
        let mut f = CVector::zeros(rows);
        let mut jac = CMatrix::zeros(rows, 5 + n);
        for (i, z) in flatten(&r).enumerate() {
            f[i] = z;
        }
        for k in 0..4 {
            let dw = dkron(&v, k);
            for (i, z) in flatten(&(&dw * h - &target * &dw)).enumerate() {
                jac[(i, k)] = z;
            }
        }
        for k in 0..n {
            for (i, z) in flatten(&(-compiled_matrix(&model.derivs[k], p) * &w)).enumerate() {
                jac[(i, 4 + k)] = z;
            }
        }
        for (i, z) in flatten(&(-w.clone())).enumerate() {
            jac[(i, 4 + n)] = z;
        }
        f[16] = x[0] * x[3] - x[1] * x[2] - ONE;
        let ddet = [x[3], -x[2], -x[1], x[0]];
        for k in 0..4 {
            jac[(16, k)] = ddet[k];
        }
        for (c, g) in model.constraints.iter().enumerate() {
            f[17 + c] = g.eval(p);
            for k in 0..n {
                jac[(17 + c, 4 + k)] = model.constraint_derivs[c][k].eval(p);
            }
        }
        (f, jac)
    };
    gauss_newton(x0, system, 1e-14, max_iterations)
}

/// Tries every catalog family against `H` and its three discrete images.
/// Candidate fits are confirmed by [`equivalence_probe`]; the first confirmed
/// match in the order (variant, family, start) is returned.
pub fn identify_family(h: &LocalDensity, opts: &IdentifyOptions) -> Result<Option<FamilyMatch>> {
    h.expect_range(2)?;
    let variants: Vec<(Option<DiscreteTransform>, LocalDensity)> = std::iter::once(Ok((None, h.clone())))
        .chain(DiscreteTransform::ALL.iter().map(|&w| discrete_transform(h, w).map(|d| (Some(w), d))))
        .collect::<Result<_>>()?;
    let scale = h.norm().max(f64::MIN_POSITIVE);
    let jobs: Vec<(usize, usize, usize)> = (0..variants.len())
        .flat_map(|v| (0..Family::ALL.len()).flat_map(move |f| (0..opts.starts).map(move |s| (v, f, s))))
        .collect();
    let found = jobs.par_iter().find_map_first(|&(vi, fi, s)| {
        let model = &models()[fi];
        let (discrete, hv) = &variants[vi];
        let hn = hv.matrix() / C64::from(scale);
        let n = model.family.n_params();
        let job = ((vi * Family::ALL.len() + fi) * opts.starts + s) as u64;
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_mul(0x5851_F42D_4C95_7F2D).wrapping_add(job));
        let x0 = random_start(&mut rng, 5 + n);
        let (x, res) = fit(model, &hn, x0, opts.max_iterations);
        if res > opts.fit_tolerance {
            return None;
        }
        let values: Vec<C64> = x[4..4 + n].iter().map(|z| z * scale).collect();
        let params = ParamVector::new(model.family, values).ok()?;
        let shift = x[4 + n] * scale;
        let target = normalize(&catalog::hamiltonian(&params), ONE, shift).ok()?;
        match equivalence_probe(hv, &target, &opts.probe).ok()? {
            Equivalence::Equivalent(witness) => Some(FamilyMatch { family: model.family, params, shift, discrete: *discrete, witness }),
            _ => None,
        }
    });
    Ok(found)
}
