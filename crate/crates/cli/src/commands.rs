use std::path::Path;

use anyhow::Context;
use boostybe_core::analysis::{self, JordanProfile, Level, Reference};
use boostybe_core::catalog::{self, Family};
use boostybe_core::charges;
use boostybe_core::descriptor::{self, complex_to_json, format_real, matrix_to_json, ModelDescriptor};
use boostybe_core::graded::{self, Direction, SignChoice};
use boostybe_core::pauli::{compose_from_pauli, decompose_to_pauli};
use boostybe_core::reshetikhin::{self, SearchOptions};
use boostybe_core::rmatrix::RMatrixFn;
use boostybe_core::series;
use boostybe_core::tensor::LocalDensity;
use boostybe_core::transforms::{identify_family, FamilyMatch, IdentifyOptions};
use boostybe_core::ybe::{self, SAMPLE_RADIUS, SERIES_RADIUS};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::{GradedArgs, SpectraArgs, VerifyArgs};

/// A JSON result and the first failed check, if any.
pub struct Outcome {
    pub value: Value,
    pub failed: Option<String>,
}

impl Outcome {
    fn ok(value: Value) -> Self {
        Self { value, failed: None }
    }
}

/// First entry of `checks` whose value is not within its tolerance.
fn first_failure(checks: &[(&str, Option<f64>, f64)]) -> Option<String> {
    checks.iter().find(|(_, v, tol)| !matches!(v, Some(x) if *x <= *tol)).map(|(name, _, _)| name.to_string())
}

fn real(x: f64) -> Value {
    Value::String(format_real(x))
}

fn read_density(path: &Path) -> anyhow::Result<LocalDensity> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    descriptor::parse_density(&text).with_context(|| format!("invalid density in {}", path.display()))
}

pub fn catalog_list() -> anyhow::Result<Outcome> {
    let entries: Vec<Value> = catalog::list_families()
        .into_iter()
        .map(|f| {
            json!({
                "family": f.family.id(),
                "param_names": f.param_names,
                "constraints": f.constraints,
                "has_closed_r": f.has_closed_r,
            })
        })
        .collect();
    Ok(Outcome::ok(Value::Array(entries)))
}

pub fn catalog_show(family: &str, seed: u64) -> anyhow::Result<Outcome> {
    let family: Family = family.parse()?;
    let names = family.param_names();
    let symbolic: Vec<Vec<String>> = family
        .symbolic_hamiltonian()
        .chunks(4)
        .map(|row| row.iter().map(|p| p.display_with(names)).collect())
        .collect();
    Ok(Outcome::ok(json!({
        "family": family.id(),
        "param_names": names,
        "constraints": family.constraints(),
        "has_closed_r": family.has_closed_r(),
        "hamiltonian": symbolic,
        "example": ModelDescriptor::new(catalog::sample_params(family, seed)).to_json(),
    })))
}

/// Closed form when the family has one, otherwise the truncated series; the
/// second value is the radius the evaluator is trusted within.
fn evaluator(desc: &ModelDescriptor, order: usize) -> anyhow::Result<(RMatrixFn, f64)> {
    let (r, radius) = if desc.family().has_closed_r() {
        (catalog::rmatrix(&desc.params)?, SAMPLE_RADIUS)
    } else {
        let sol = series::series_solve(&desc.hamiltonian(), order)?;
        if let Some(o) = sol.obstruction {
            anyhow::bail!("series obstructed at order {} (residual {:.3e})", o.order, o.residual);
        }
        (sol.to_rmatrix().with_family(desc.params.clone()), SERIES_RADIUS)
    };
    Ok((desc.tamper(r), radius))
}

pub fn verify(a: &VerifyArgs) -> anyhow::Result<Outcome> {
    anyhow::ensure!(a.tol > 0.0 && a.regularity_tol > 0.0 && a.extraction_tol > 0.0 && a.commutator_tol > 0.0, "tolerances must be positive");
    let desc = a.model.resolve(a.seed)?.descriptor;
    let h = desc.hamiltonian();
    let (r, radius) = evaluator(&desc, a.order)?;
    let rep = ybe::verify_within(&r, a.samples, a.seed, Some(&h), radius).context("verification")?;
    let pairs = [(2, 3), (2, 4), (3, 4)];
    let tower = charges::charge_tower(&h, 4).context("charge tower")?;
    let comm = charges::verify_commutation(&tower, &pairs, a.length).context("charge commutators")?;
    let worst_comm = comm.iter().copied().fold(0.0, f64::max);

    let failed = first_failure(&[
        ("ybe_residual", Some(rep.max_residual), a.tol),
        ("regularity", Some(rep.regularity_error), a.regularity_tol),
        ("unitarity", Some(rep.unitarity_error), a.tol),
        ("extracted_h", rep.extracted_h_error, a.extraction_tol),
        ("commutators", Some(worst_comm), a.commutator_tol),
    ]);
    let points: Vec<Value> = rep.sample_points.iter().map(|&(u, v)| json!([complex_to_json(u), complex_to_json(v)])).collect();
    let value = json!({
        "model": desc.to_json(),
        "label": rep.label,
        "provenance": rep.provenance,
        "sample_radius": real(radius),
        "sample_points": points,
        "max_residual": real(rep.max_residual),
        "regularity_error": real(rep.regularity_error),
        "unitarity_error": real(rep.unitarity_error),
        "extracted_h_error": rep.extracted_h_error.map(real),
        "commutators": {
            "length": a.length,
            "pairs": pairs.iter().zip(&comm).map(|(&(r, s), &x)| json!({ "pair": [r, s], "residual": real(x) })).collect::<Vec<_>>(),
        },
        "tolerances": {
            "ybe": real(a.tol),
            "regularity": real(a.regularity_tol),
            "unitarity": real(a.tol),
            "extraction": real(a.extraction_tol),
            "commutators": real(a.commutator_tol),
        },
        "passed": failed.is_none(),
        "failed_check": failed,
    });
    Ok(Outcome { value, failed })
}

pub fn reshetikhin_check(path: &Path, tol: f64) -> anyhow::Result<Outcome> {
    let h = read_density(path)?;
    let a = decompose_to_pauli(&h)?;
    let sys = reshetikhin::commutator_system();
    let absolute = reshetikhin::evaluate_system(sys, &a);
    let relative = reshetikhin::relative_residual(sys, &a);
    let failed = (relative > tol).then(|| "residual".to_string());
    Ok(Outcome {
        value: json!({
            "equations": sys.len(),
            "max_residual": real(absolute),
            "relative_residual": real(relative),
            "tolerance": real(tol),
            "passed": failed.is_none(),
        }),
        failed,
    })
}

pub fn reshetikhin_export() -> anyhow::Result<Outcome> {
    let sys = reshetikhin::commutator_system();
    Ok(Outcome::ok(json!({
        "variables": reshetikhin::variable_names(),
        "count": sys.len(),
        "equations": sys.to_json(),
    })))
}

fn match_json(m: &FamilyMatch) -> Value {
    let v = &m.witness.transform;
    json!({
        "family": m.family.id(),
        "model": ModelDescriptor::new(m.params.clone()).to_json(),
        "shift": complex_to_json(m.shift),
        "discrete": m.discrete.map(|d| d.name()),
        "basis": [[complex_to_json(v.alpha), complex_to_json(v.beta)], [complex_to_json(v.gamma), complex_to_json(v.delta)]],
        "witness_residual": real(m.witness.residual),
    })
}

pub fn reshetikhin_search(seeds: usize, seed: u64, commutator_tol: f64, length: usize) -> anyhow::Result<Outcome> {
    let opts = SearchOptions { seed, ..SearchOptions::default() };
    let hits = reshetikhin::numeric_search(seeds, &opts);
    let reports: Vec<(Value, f64)> = hits
        .par_iter()
        .map(|hit| {
            let h = compose_from_pauli(&hit.coeffs);
            let tower = charges::charge_tower(&h, 3)?;
            let comm = charges::verify_commutation(&tower, &[(2, 3)], length)?[0];
            let id = IdentifyOptions { seed, ..IdentifyOptions::default() };
            let class = match identify_family(&h, &id)? {
                Some(m) => match_json(&m),
                None => json!("undetermined"),
            };
            let value = json!({
                "start": hit.start,
                "residual": real(hit.residual),
                "iterations": hit.iterations,
                "hamiltonian": matrix_to_json(h.matrix()),
                "commutator_residual": real(comm),
                "classification": class,
            });
            Ok((value, comm))
        })
        .collect::<boostybe_core::Result<_>>()?;
    let worst = reports.iter().map(|r| r.1).fold(0.0, f64::max);
    let matched = reports.iter().filter(|r| r.0["classification"].is_object()).count();
    let failed = (worst >= commutator_tol).then(|| "commutator_residual".to_string());
    Ok(Outcome {
        value: json!({
            "seeds": seeds,
            "seed": seed,
            "hits": reports.len(),
            "matched": matched,
            "undetermined": reports.len() - matched,
            "results": reports.into_iter().map(|r| r.0).collect::<Vec<_>>(),
        }),
        failed,
    })
}

pub fn series(path: &Path, order: usize) -> anyhow::Result<Outcome> {
    let h = read_density(path)?;
    let sol = series::series_solve(&h, order)?;
    let fit = series::ch_fit(&sol);
    let failed = sol.obstruction.map(|_| "obstruction".to_string());
    Ok(Outcome {
        value: json!({
            "order": order,
            "gauge": series::SeriesSolution::GAUGE,
            "coefficients": sol.coefficients.iter().map(matrix_to_json).collect::<Vec<_>>(),
            "residuals": sol.residuals.iter().copied().map(real).collect::<Vec<_>>(),
            "obstruction": sol.obstruction.map(|o| json!({ "order": o.order, "residual": real(o.residual) })),
            "ch_fit": {
                "coefficients": fit.coefficients.iter().map(|c| c.iter().copied().map(complex_to_json).collect::<Vec<_>>()).collect::<Vec<_>>(),
                "residuals": fit.residuals.iter().copied().map(real).collect::<Vec<_>>(),
            },
        }),
        failed,
    })
}

/// The graded image of the model and the sign choice used.
fn graded_image(a: &GradedArgs) -> anyhow::Result<(ModelDescriptor, SignChoice, RMatrixFn, f64)> {
    let resolved = a.model.resolve(a.seed)?;
    // A file written by `graded map` records its twist.
    let stored = resolved.raw.as_ref().and_then(|raw| raw.get("twist")).and_then(Value::as_array).and_then(|t| {
        let e1 = t.first()?.as_i64()?;
        let e2 = t.get(1)?.as_i64()?;
        Some((e1 as i8, e2 as i8))
    });
    let (e1, e2) = a.twist.or(stored).unwrap_or((1, 1));
    let twist = SignChoice::new(e1, e2)?;
    let desc = resolved.descriptor;
    let (r, radius) = evaluator(&desc, a.order)?;
    let mapped = graded::sign_twist(&graded::bijection_map(&r, Direction::ToGraded)?, twist)?;
    Ok((desc, twist, mapped, radius))
}

pub fn graded_map(a: &GradedArgs) -> anyhow::Result<Outcome> {
    let (desc, twist, mapped, radius) = graded_image(a)?;
    let taylor = series::taylor_coefficients(&mapped, 1, radius / 2.0, 16)?;
    let hg = graded::graded_permutation() * &taylor[1];
    let mut value = desc.to_json();
    value["twist"] = json!([twist.eps1(), twist.eps2()]);
    value["graded_r0"] = matrix_to_json(&mapped.eval(C64::new(0.0, 0.0))?);
    value["graded_hamiltonian"] = matrix_to_json(&hg);
    Ok(Outcome::ok(value))
}

pub fn graded_verify(a: &GradedArgs) -> anyhow::Result<Outcome> {
    anyhow::ensure!(a.tol > 0.0, "tolerance must be positive");
    let (desc, twist, mapped, radius) = graded_image(a)?;
    let pts = ybe::sample_pairs_within(&mapped, a.samples, a.seed, radius);
    anyhow::ensure!(pts.len() == a.samples, "only {} sample points avoid singularities", pts.len());
    let ybe_res = pts.par_iter().map(|&(u, v)| graded::graded_ybe_residual(&mapped, u, v)).collect::<boostybe_core::Result<Vec<f64>>>()?;
    let comm = pts
        .par_iter()
        .map(|&(u, v)| graded::graded_transfer_commutation(&mapped, a.length, u, v))
        .collect::<boostybe_core::Result<Vec<f64>>>()?;
    let (worst_ybe, worst_comm) = (ybe_res.iter().copied().fold(0.0, f64::max), comm.iter().copied().fold(0.0, f64::max));
    let r0 = mapped.eval(C64::new(0.0, 0.0))?;
    let regularity = boostybe_core::linalg::frobenius(&(r0 - graded::graded_permutation()));
    let failed = first_failure(&[
        ("graded_ybe_residual", Some(worst_ybe), a.tol),
        ("graded_regularity", Some(regularity), 1e-12),
        ("transfer_commutation", Some(worst_comm), a.tol),
    ]);
    Ok(Outcome {
        value: json!({
            "model": desc.to_json(),
            "twist": [twist.eps1(), twist.eps2()],
            "sample_radius": real(radius),
            "graded_ybe_residual": real(worst_ybe),
            "graded_regularity_error": real(regularity),
            "transfer_length": a.length,
            "transfer_commutation": real(worst_comm),
            "passed": failed.is_none(),
            "failed_check": failed,
        }),
        failed,
    })
}

fn profile_json(p: &JordanProfile) -> Value {
    json!({
        "eigenvalues": p.eigenvalues.iter().map(|e| json!({
            "value": complex_to_json(e.value),
            "algebraic": e.algebraic,
            "geometric": e.geometric,
            "largest_block": e.largest_block,
        })).collect::<Vec<_>>(),
        "diagonalizable": p.is_diagonalizable(),
        "tolerance": real(p.tolerance),
        "warning": p.warning,
    })
}

pub fn spectra(a: &SpectraArgs) -> anyhow::Result<Outcome> {
    anyhow::ensure!(a.tol > 0.0 && a.tol < 1.0, "tolerance must lie in (0, 1)");
    let desc = a.model.resolve(a.seed)?.descriptor;
    let h = desc.hamiltonian();
    let chain = analysis::level_matrix(&desc.params, Level::Periodic(a.length))?;
    let density_profile = analysis::jordan_profile(h.matrix(), a.tol)?;
    let chain_profile = analysis::jordan_profile(&chain, a.tol)?;
    let index = analysis::nilpotency_index(&chain, a.tol, chain.nrows())?;
    let equivalence = match Reference::for_family(desc.family()) {
        Some(reference) => {
            let e = analysis::eigenvalue_equivalence(&desc.params, a.length, reference)?;
            json!({
                "reference": reference,
                "scale": complex_to_json(e.scale),
                "shift": complex_to_json(e.shift),
                "fit_deviation": real(e.fit_deviation),
                "deviation": real(e.deviation),
            })
        }
        None => Value::Null,
    };
    let condition = analysis::stated_condition(&desc.params).ok();
    Ok(Outcome::ok(json!({
        "model": desc.to_json(),
        "length": a.length,
        "density": profile_json(&density_profile),
        "chain": profile_json(&chain_profile),
        "nilpotent": index.is_some(),
        "nilpotency_index": index,
        "diagonalizability_condition": condition,
        "eigenvalue_equivalence": equivalence,
    })))
}
