//! The polynomial system equivalent to `[Q2, Q3] = 0` in the sixteen Pauli
//! coefficients `A_ab` of a two-site density.
//!
//! `[Σ_n H_n, Σ_m Q_m]` is a sum of range-4 densities with Pauli coordinates
//! `B_abcd`, cubic in `A`. Strings that differ by identities on the outside
//! describe the same translated operator, which gives the grouped conditions.

use std::sync::OnceLock;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::catalog::Family;
use crate::exact;
use crate::linalg::{self, CMatrix, C64, ZERO};
use crate::pauli::{self, PauliCoeffs, PauliVec, Ring};
use crate::poly::{CompiledPoly, SymPoly};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Group {
    /// `B_abcd`, all indices non-trivial.
    Bulk,
    /// `B_abc0 + B_0abc`.
    Boundary3,
    /// `B_ab00 + B_0ab0 + B_00ab`.
    Boundary2,
    /// `B_a000 + B_0a00 + B_00a0 + B_000a`.
    Boundary1,
    /// `B_0000`.
    Trivial,
    /// Strings with an identity strictly inside: `B_a..d` with a zero among
    /// the middle indices, and `B_a0c0 + B_0a0c`.
    Interior,
}

impl Group {
    pub fn name(self) -> &'static str {
        match self {
            Group::Bulk => "bulk",
            Group::Boundary3 => "boundary-3",
            Group::Boundary2 => "boundary-2",
            Group::Boundary1 => "boundary-1",
            Group::Trivial => "trivial",
            Group::Interior => "interior",
        }
    }
}

#[derive(Clone, Debug)]
pub struct Equation {
    pub label: String,
    pub group: Group,
    pub poly: SymPoly,
}

impl Equation {
    pub fn is_identically_zero(&self) -> bool {
        self.poly.is_empty()
    }
}

#[derive(Clone, Debug)]
pub struct EquationSystem {
    equations: Vec<Equation>,
    compiled: Vec<CompiledPoly>,
}

impl EquationSystem {
    fn new(equations: Vec<Equation>) -> Self {
        let compiled = equations.iter().map(|e| CompiledPoly::new(&e.poly)).collect();
        Self { equations, compiled }
    }

    pub fn equations(&self) -> &[Equation] {
        &self.equations
    }

    pub fn len(&self) -> usize {
        self.equations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.equations.is_empty()
    }

    pub fn group_sizes(&self) -> Vec<(Group, usize)> {
        let mut out: Vec<(Group, usize)> = Vec::new();
        for e in &self.equations {
            match out.iter_mut().find(|(g, _)| *g == e.group) {
                Some((_, n)) => *n += 1,
                None => out.push((e.group, 1)),
            }
        }
        out
    }

    /// Values of all equations at a numeric point.
    pub fn values(&self, a: &PauliCoeffs) -> Vec<C64> {
        let x = a.flat();
        self.compiled.iter().map(|p| p.eval(&x)).collect()
    }

    /// JSON records `{label, monomials: [{exps, re, im}]}` with exact rational strings.
    pub fn to_json(&self) -> serde_json::Value {
        let records: Vec<serde_json::Value> = self
            .equations
            .iter()
            .map(|e| {
                let monomials: Vec<serde_json::Value> = e
                    .poly
                    .terms()
                    .map(|(exps, c)| {
                        serde_json::json!({
                            "exps": exps.iter().map(|&k| k as u32).collect::<Vec<_>>(),
                            "re": exact::rat_string(&c.re),
                            "im": exact::rat_string(&c.im),
                        })
                    })
                    .collect();
                serde_json::json!({ "label": e.label, "group": e.group.name(), "monomials": monomials })
            })
            .collect();
        serde_json::Value::Array(records)
    }
}

/// Variable names `A00, A0+, …, A33` in system order.
pub fn variable_names() -> [String; 16] {
    std::array::from_fn(|k| format!("A{}{}", pauli::LABELS[k / 4], pauli::LABELS[k % 4]))
}

fn symbolic_a() -> PauliVec<SymPoly> {
    PauliVec::from_coeffs(2, (0..16).map(SymPoly::var).collect())
}

/// Pauli coordinates `A_abc` of `Q3 = [H ⊗ 1, 1 ⊗ H]` over any ring.
pub fn q3_coefficients<T: Ring>(h: &PauliVec<T>) -> PauliVec<T> {
    assert_eq!(h.range(), 2);
    h.placed(0, 3).commutator(&h.placed(1, 3))
}

/// Pauli coordinates `B_abcd` of the range-4 density of `[Q2, Q3]`.
pub fn b_coefficients<T: Ring>(h: &PauliVec<T>) -> PauliVec<T> {
    let q = q3_coefficients(h);
    let mut b = PauliVec::zero(4);
    for (h_at, q_at) in [(0, 1), (0, 0), (1, 0), (2, 0)] {
        b = b + h.placed(h_at, 4).commutator(&q.placed(q_at, 4));
    }
    b
}

/// `A_abc` as quadratic polynomials in the sixteen `A_ab`.
pub fn symbolic_q3() -> PauliVec<SymPoly> {
    q3_coefficients(&symbolic_a())
}

fn symbolic_b() -> &'static PauliVec<SymPoly> {
    static B: OnceLock<PauliVec<SymPoly>> = OnceLock::new();
    B.get_or_init(|| b_coefficients(&symbolic_a()))
}

fn label(digits: &[usize]) -> String {
    digits.iter().map(|&d| pauli::LABELS[d]).collect()
}

fn grouped_equations(b: &PauliVec<SymPoly>, interior: bool) -> Vec<Equation> {
    let get = |d: [usize; 4]| b.get(&d).clone();
    let nz = [1usize, 2, 3];
    let mut eqs = Vec::new();
    for a in nz {
        for bb in nz {
            for c in nz {
                for d in nz {
                    let digits = [a, bb, c, d];
                    eqs.push(Equation { label: format!("B{}", label(&digits)), group: Group::Bulk, poly: get(digits) });
                }
            }
        }
    }
    for a in nz {
        for bb in nz {
            for c in nz {
                let poly = get([a, bb, c, 0]) + get([0, a, bb, c]);
                eqs.push(Equation { label: format!("B{0}0+B0{0}", label(&[a, bb, c])), group: Group::Boundary3, poly });
            }
        }
    }
    for a in nz {
        for bb in nz {
            let poly = get([a, bb, 0, 0]) + get([0, a, bb, 0]) + get([0, 0, a, bb]);
            let l = label(&[a, bb]);
            eqs.push(Equation { label: format!("B{l}00+B0{l}0+B00{l}"), group: Group::Boundary2, poly });
        }
    }
    for a in nz {
        let poly = get([a, 0, 0, 0]) + get([0, a, 0, 0]) + get([0, 0, a, 0]) + get([0, 0, 0, a]);
        let l = label(&[a]);
        eqs.push(Equation { label: format!("B{l}000+B0{l}00+B00{l}0+B000{l}"), group: Group::Boundary1, poly });
    }
    eqs.push(Equation { label: "B0000".into(), group: Group::Trivial, poly: get([0, 0, 0, 0]) });
    if interior {
        for a in nz {
            for d in nz {
                for bb in 0..4 {
                    for c in 0..4 {
                        if bb != 0 && c != 0 {
                            continue;
                        }
                        let digits = [a, bb, c, d];
                        eqs.push(Equation { label: format!("B{}", label(&digits)), group: Group::Interior, poly: get(digits) });
                    }
                }
            }
        }
        for a in nz {
            for c in nz {
                let poly = get([a, 0, c, 0]) + get([0, a, 0, c]);
                let l = label(&[a, 0, c]);
                eqs.push(Equation { label: format!("B{l}0+B0{l}"), group: Group::Interior, poly });
            }
        }
    }
    eqs
}

/// The 121 grouped conditions (81 + 27 + 9 + 3 + 1), identically vanishing
/// ones included.
pub fn commutator_system() -> &'static EquationSystem {
    static SYS: OnceLock<EquationSystem> = OnceLock::new();
    SYS.get_or_init(|| EquationSystem::new(grouped_equations(symbolic_b(), false)))
}

/// The 121 conditions plus the 72 interior ones: vanishing of every
/// translation class of range-4 strings.
pub fn complete_system() -> &'static EquationSystem {
    static SYS: OnceLock<EquationSystem> = OnceLock::new();
    SYS.get_or_init(|| EquationSystem::new(grouped_equations(symbolic_b(), true)))
}

/// Every equation of `sys` with the family's symbolic density substituted,
/// as a polynomial in the family parameters. For C1 the result is reduced
/// modulo `a1 a3 - a2 a4`, which eliminates the constraint exactly.
pub fn family_residuals(sys: &EquationSystem, family: Family) -> Vec<SymPoly> {
    let h = nalgebra::DMatrix::from_row_iterator(4, 4, family.symbolic_hamiltonian());
    let a = PauliVec::from_matrix(&h).into_coeffs();
    sys.equations()
        .par_iter()
        .map(|e| {
            let p = e.poly.substitute(&a);
            match family {
                Family::C1 => p.reduce_binomial((0, 2), (1, 3)),
                _ => p,
            }
        })
        .collect()
}

/// Largest equation modulus at `a`.
pub fn evaluate_system(sys: &EquationSystem, a: &PauliCoeffs) -> f64 {
    sys.values(a).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Scale-free residual `max |eq(A)| / ‖A‖^3` (equations are homogeneous cubics).
pub fn relative_residual(sys: &EquationSystem, a: &PauliCoeffs) -> f64 {
    let n = a.norm();
    if n == 0.0 {
        return 0.0;
    }
    evaluate_system(sys, a) / (n * n * n)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SearchOptions {
    pub tolerance: f64,
    pub max_iterations: usize,
    pub seed: u64,
    /// Solve the 193-equation complete system rather than the 121 grouped
    /// conditions alone.
    pub complete: bool,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self { tolerance: 1e-12, max_iterations: 200, seed: 0, complete: true }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SearchHit {
    pub start: u64,
    pub coeffs: PauliCoeffs,
    pub residual: f64,
    pub iterations: usize,
}

struct Newton {
    eqs: Vec<CompiledPoly>,
    jac: Vec<Vec<CompiledPoly>>,
}

/// Relative `‖Q3‖` below which a converged point is snapped onto the locus
/// `[H ⊗ 1, 1 ⊗ H] = 0`. The cubic system vanishes to second order there, so
/// plain Newton only approaches it linearly.
const SNAP_THRESHOLD: f64 = 1e-3;

impl Newton {
    /// Non-trivial polynomials, unknowns `A_ab` without `A_00`.
    fn build<'a>(polys: impl IntoIterator<Item = &'a SymPoly>) -> Newton {
        let live: Vec<&SymPoly> = polys.into_iter().filter(|p| !p.is_empty()).collect();
        let eqs = live.iter().map(|p| CompiledPoly::new(p)).collect();
        let jac = live.iter().map(|p| (1..16).map(|v| CompiledPoly::new(&p.derivative(v))).collect()).collect();
        Newton { eqs, jac }
    }

    fn get(complete: bool) -> &'static Newton {
        static FULL: OnceLock<Newton> = OnceLock::new();
        static GROUPED: OnceLock<Newton> = OnceLock::new();
        let sys = if complete { complete_system() } else { commutator_system() };
        let cell = if complete { &FULL } else { &GROUPED };
        cell.get_or_init(|| Newton::build(sys.equations().iter().map(|e| &e.poly)))
    }

    fn trivial_locus() -> &'static Newton {
        static Q3: OnceLock<Newton> = OnceLock::new();
        Q3.get_or_init(|| Newton::build(symbolic_q3().coeffs()))
    }

    fn residual(&self, x: &[C64]) -> f64 {
        self.eqs.iter().map(|p| p.eval(x).norm_sqr()).sum::<f64>().sqrt()
    }

    /// Least-norm Newton step orthogonal to `x`. Without the extra row the
    /// radial step `-x/d` solves the linearisation of a degree-`d` system
    /// exactly and the iteration only shrinks the point.
    fn step(&self, x: &[C64]) -> Vec<C64> {
        let m = self.eqs.len();
        let scale = self.jac.iter().flatten().take(64).map(|p| p.eval(x).norm()).fold(1.0, f64::max);
        let f = CMatrix::from_fn(m + 1, 1, |i, _| if i < m { -self.eqs[i].eval(x) } else { ZERO });
        let j = CMatrix::from_fn(m + 1, 15, |i, k| if i < m { self.jac[i][k].eval(x) } else { x[k + 1].conj() * scale });
        let (dx, _) = linalg::lstsq(&j, &f, 1e-12);
        let mut out = vec![ZERO; 16];
        for k in 0..15 {
            out[k + 1] = dx[(k, 0)];
        }
        out
    }

    /// Damped iteration on the unit sphere; stops below `target` or when no
    /// backtracked step decreases the residual.
    fn refine(&self, mut x: Vec<C64>, target: f64, max_iterations: usize) -> (Vec<C64>, usize) {
        let mut res = self.residual(&x);
        let mut iterations = 0;
        while iterations < max_iterations && res > target {
            iterations += 1;
            let dx = self.step(&x);
            let mut t = 1.0;
            let mut accepted = false;
            for _ in 0..20 {
                let trial: Vec<C64> = x.iter().zip(&dx).map(|(a, d)| a + d * t).collect();
                let trial = normalized(&trial);
                let r = self.residual(&trial);
                if r < res {
                    x = trial;
                    res = r;
                    accepted = true;
                    break;
                }
                t *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        (x, iterations)
    }
}

fn normalized(x: &[C64]) -> Vec<C64> {
    let n = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    x.iter().map(|z| z / n).collect()
}

/// Damped Newton iteration from `start`, with `A_00 = 0` and `‖A‖ = 1`
/// imposed after every step. Points that end close to the locus `Q3 = 0` are
/// then polished on that locus. A start that is already a root is returned
/// unchanged.
pub fn newton_refine(start: &PauliCoeffs, opts: &SearchOptions) -> (PauliCoeffs, f64, usize) {
    let sys = if opts.complete { complete_system() } else { commutator_system() };
    let initial = relative_residual(sys, start);
    if initial < opts.tolerance {
        return (*start, initial, 0);
    }
    let mut x = start.flat().to_vec();
    x[0] = ZERO;
    let (mut x, mut iterations) = Newton::get(opts.complete).refine(normalized(&x), opts.tolerance * 1e-3, opts.max_iterations);
    let snap = Newton::trivial_locus();
    if snap.residual(&x) < SNAP_THRESHOLD {
        let (y, extra) = snap.refine(x.clone(), 0.0, 50);
        if relative_residual(sys, &PauliCoeffs::from_flat(&y)) < opts.tolerance {
            x = y;
            iterations += extra;
        }
    }
    let a = PauliCoeffs::from_flat(&x);
    (a, relative_residual(sys, &a), iterations)
}

/// Newton from `seeds` random complex Gaussian starts; returns the points with
/// residual below the tolerance. No deduplication is performed.
pub fn numeric_search(seeds: usize, opts: &SearchOptions) -> Vec<SearchHit> {
    (0..seeds as u64)
        .into_par_iter()
        .filter_map(|i| {
            let start_id = opts.seed.wrapping_mul(1_000_003).wrapping_add(i);
            let mut rng = ChaCha8Rng::seed_from_u64(start_id);
            let flat: Vec<C64> = (0..16)
                .map(|_| C64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng)))
                .collect();
            let (coeffs, residual, iterations) = newton_refine(&PauliCoeffs::from_flat(&flat), opts);
            (residual < opts.tolerance).then_some(SearchHit { start: start_id, coeffs, residual, iterations })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{self, Family};
    use crate::charges;
    use crate::linalg::c;
    use crate::pauli::{decompose_to_pauli, ID, MINUS, PLUS, Z};

    fn coeffs_of(f: Family, seed: u64) -> PauliCoeffs {
        decompose_to_pauli(&catalog::hamiltonian(&catalog::sample_params(f, seed))).unwrap()
    }

    #[test]
    fn counts() {
        let sys = commutator_system();
        assert_eq!(sys.len(), 121);
        assert_eq!(
            sys.group_sizes(),
            vec![(Group::Bulk, 81), (Group::Boundary3, 27), (Group::Boundary2, 9), (Group::Boundary1, 3), (Group::Trivial, 1)]
        );
        assert_eq!(complete_system().len(), 193);
        assert!(sys.equations().iter().all(|e| e.poly.total_degree() <= 3));
    }

    #[test]
    fn identity_only_satisfies_everything() {
        let mut a = PauliCoeffs::zero();
        a.set(ID, ID, c(2.5, -1.0));
        assert_eq!(evaluate_system(complete_system(), &a), 0.0);
        assert_eq!(evaluate_system(commutator_system(), &PauliCoeffs::zero()), 0.0);
    }

    #[test]
    fn catalog_points_satisfy_the_system() {
        for f in Family::ALL {
            for seed in 0..3 {
                let r = evaluate_system(complete_system(), &coeffs_of(f, seed));
                assert!(r < 1e-12, "{f}: {r}");
            }
        }
    }

    #[test]
    fn symbolic_families_reduce_to_zero() {
        for f in [Family::C1, Family::C5, Family::XYZ6] {
            assert!(family_residuals(commutator_system(), f).iter().all(SymPoly::is_empty), "{f}");
        }
        // Without the reduction C1 leaves multiples of the constraint.
        let h = nalgebra::DMatrix::from_row_iterator(4, 4, Family::C1.symbolic_hamiltonian());
        let a = PauliVec::from_matrix(&h).into_coeffs();
        assert!(commutator_system().equations().iter().any(|e| !e.poly.substitute(&a).is_empty()));
    }

    #[test]
    fn random_point_violates_the_system() {
        let flat: Vec<C64> = (0..16).map(|k| c((k as f64 * 0.37).sin(), (k as f64 * 1.1).cos())).collect();
        assert!(evaluate_system(commutator_system(), &PauliCoeffs::from_flat(&flat)) > 1e-2);
    }

    #[test]
    fn cartan_sector_is_closed() {
        let q3 = symbolic_q3();
        // Restrict to A_ab with a, b in {0, 3}: substitute zero for the rest.
        let vals: Vec<SymPoly> = (0..16)
            .map(|k| if [ID, Z].contains(&(k / 4)) && [ID, Z].contains(&(k % 4)) { SymPoly::var(k) } else { SymPoly::default() })
            .collect();
        for (s, p) in q3.coeffs().iter().enumerate() {
            let d = pauli::digits(s, 3);
            if d.iter().any(|&x| x == PLUS || x == MINUS) {
                assert!(p.substitute(&vals).is_empty());
            }
        }
    }

    #[test]
    fn symbolic_q3_matches_dense_path() {
        let q3 = symbolic_q3();
        for seed in 0..100u64 {
            let flat: Vec<C64> = (0..16).map(|k| c(((seed * 16 + k) as f64 * 0.77).sin(), ((seed + k) as f64 * 0.31).cos())).collect();
            let a = PauliCoeffs::from_flat(&flat);
            let dense = charges::q3_density(&pauli::compose_from_pauli(&a)).unwrap();
            let want = PauliVec::from_matrix(dense.matrix());
            for (p, w) in q3.coeffs().iter().zip(want.coeffs()) {
                assert!((p.eval(&flat) - w).norm() < 1e-12);
            }
        }
        let h = catalog::hamiltonian(&catalog::ParamVector::from_real(Family::C5, &[1., 1., 1.]).unwrap());
        let a = decompose_to_pauli(&h).unwrap();
        let want = PauliVec::from_matrix(charges::q3_density(&h).unwrap().matrix());
        for (p, w) in q3.coeffs().iter().zip(want.coeffs()) {
            assert_eq!(p.eval(&a.flat()), *w);
        }
    }

    #[test]
    fn single_plus_minus_entry() {
        // H = σ+ ⊗ σ-: oracle is the dense 8x8 commutator.
        let mut a = PauliCoeffs::zero();
        a.set(PLUS, MINUS, c(1.0, 0.0));
        let q3 = symbolic_q3();
        let dense = charges::q3_density(&pauli::compose_from_pauli(&a)).unwrap();
        let want = PauliVec::from_matrix(dense.matrix());
        for (p, w) in q3.coeffs().iter().zip(want.coeffs()) {
            assert_eq!(p.eval(&a.flat()), *w);
        }
        // [σ+σ-⊗1, 1⊗σ+σ-] = σ+ ⊗ σ3 ⊗ σ- ... up to sign: the middle site carries σ3.
        assert_eq!(*want.get(&[PLUS, Z, MINUS]), c(-1.0, 0.0));
    }

    #[test]
    fn seeding_at_a_root_returns_it_unchanged() {
        let a = coeffs_of(Family::XYZ2, 1);
        let (b, res, it) = newton_refine(&a, &SearchOptions::default());
        assert_eq!(it, 0);
        assert_eq!(a, b);
        assert!(res < 1e-12);
        assert!(numeric_search(0, &SearchOptions::default()).is_empty());
    }

    #[test]
    fn search_hits_have_commuting_towers() {
        let hits = numeric_search(6, &SearchOptions::default());
        assert!(!hits.is_empty());
        for h in &hits {
            assert!(h.residual < 1e-12);
            assert!(evaluate_system(complete_system(), &h.coeffs) < 1e-10);
            let tower = charges::charge_tower(&pauli::compose_from_pauli(&h.coeffs), 4).unwrap();
            let r = charges::verify_commutation(&tower, &[(2, 3), (3, 4)], 7).unwrap();
            assert!(r.iter().all(|&x| x < 1e-9), "{r:?}");
        }
    }

    #[test]
    fn grouped_conditions_alone_admit_spurious_roots() {
        // Some roots of the 121 conditions miss the interior group and fail
        // [Q2, Q3] on a chain.
        let opts = SearchOptions { complete: false, ..Default::default() };
        let hits = numeric_search(40, &opts);
        let spurious: Vec<_> = hits.iter().filter(|h| evaluate_system(complete_system(), &h.coeffs) > 1e-6).collect();
        assert!(!spurious.is_empty());
        for h in spurious {
            let d = pauli::compose_from_pauli(&h.coeffs);
            let q3 = charges::q3_density(&d).unwrap();
            assert!(charges::commutator_residual(&d, &q3, 6).unwrap() > 1e-4);
        }
    }

    #[test]
    fn export_has_exact_rationals() {
        let json = commutator_system().to_json();
        let arr = json.as_array().unwrap();
        assert_eq!(arr.len(), 121);
        let first = arr.iter().find(|r| !r["monomials"].as_array().unwrap().is_empty()).unwrap();
        let mono = &first["monomials"][0];
        assert_eq!(mono["exps"].as_array().unwrap().len(), 16);
        assert!(mono["re"].is_string());
    }
}
