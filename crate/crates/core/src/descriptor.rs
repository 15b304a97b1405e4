//! JSON file formats: model descriptors, explicit densities and complex
//! numbers as `[re, im]` pairs of decimal strings.
//!
//! ```json
//! {"family": "C5", "params": {"a1": ["1.0000000000000000e0", "0.0000000000000000e0"], ...}}
//! ```
//!
//! Inputs may also give plain numbers instead of strings, or a bare real.

use serde_json::{json, Map, Value};

use crate::catalog::{self, Family, ParamVector};
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, C64};
use crate::rmatrix::RMatrixFn;
use crate::tensor::LocalDensity;

/// `{:.16e}`: seventeen significant digits, enough to round-trip an `f64`.
/// Negative zero prints as zero.
pub fn format_real(x: f64) -> String {
    format!("{:.16e}", x + 0.0)
}

pub fn complex_to_json(z: C64) -> Value {
    json!([format_real(z.re), format_real(z.im)])
}

fn real_from_json(v: &Value) -> Result<f64> {
    match v {
        Value::Number(n) => n.as_f64().ok_or_else(|| Error::Input(format!("number {n} out of range"))),
        Value::String(s) => s.trim().parse::<f64>().map_err(|_| Error::Input(format!("'{s}' is not a number"))),
        _ => Err(Error::Input(format!("expected a number, found {v}"))),
    }
}

pub fn complex_from_json(v: &Value) -> Result<C64> {
    match v {
        Value::Array(parts) if parts.len() == 2 => Ok(C64::new(real_from_json(&parts[0])?, real_from_json(&parts[1])?)),
        Value::Array(_) => Err(Error::Input(format!("complex value must be [re, im], found {v}"))),
        other => Ok(C64::new(real_from_json(other)?, 0.0)),
    }
}

pub fn matrix_to_json(m: &CMatrix) -> Value {
    Value::Array((0..m.nrows()).map(|i| Value::Array((0..m.ncols()).map(|j| complex_to_json(m[(i, j)])).collect())).collect())
}

pub fn matrix_from_json(v: &Value) -> Result<CMatrix> {
    let rows = v.as_array().ok_or_else(|| Error::Input("matrix must be an array of rows".into()))?;
    let n = rows.len();
    let mut m = CMatrix::zeros(n, n);
    for (i, row) in rows.iter().enumerate() {
        let row = row.as_array().filter(|r| r.len() == n).ok_or_else(|| Error::Input(format!("row {i} must have {n} entries")))?;
        for (j, z) in row.iter().enumerate() {
            m[(i, j)] = complex_from_json(z)?;
        }
    }
    Ok(m)
}

/// A catalog member, optionally tampered with for negative controls:
/// `entry_flips` lists `(row, col)` entries of `R(u)` whose sign is flipped.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelDescriptor {
    pub params: ParamVector,
    pub entry_flips: Vec<(usize, usize)>,
}

impl ModelDescriptor {
    pub fn new(params: ParamVector) -> Self {
        Self { params, entry_flips: Vec::new() }
    }

    pub fn family(&self) -> Family {
        self.params.family()
    }

    pub fn hamiltonian(&self) -> LocalDensity {
        catalog::hamiltonian(&self.params)
    }

    /// The closed-form R-matrix with the requested entries flipped.
    pub fn rmatrix(&self) -> Result<RMatrixFn> {
        let r = catalog::rmatrix(&self.params)?;
        Ok(self.tamper(r))
    }

    /// Applies `entry_flips` to any evaluator.
    pub fn tamper(&self, r: RMatrixFn) -> RMatrixFn {
        if self.entry_flips.is_empty() {
            return r;
        }
        let flips = self.entry_flips.clone();
        let label = format!("{} (tampered)", r.label());
        r.map(label, move |mut m| {
            for &(i, j) in &flips {
                m[(i, j)] = -m[(i, j)];
            }
            m
        })
    }

    pub fn to_json(&self) -> Value {
        let family = self.family();
        let params: Map<String, Value> =
            family.param_names().iter().zip(self.params.values()).map(|(n, &z)| (n.to_string(), complex_to_json(z))).collect();
        let mut out = json!({ "family": family.id(), "params": params });
        if !self.entry_flips.is_empty() {
            out["entry_flips"] = json!(self.entry_flips.iter().map(|&(i, j)| [i, j]).collect::<Vec<_>>());
        }
        out
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let obj = v.as_object().ok_or_else(|| Error::Input("descriptor must be a JSON object".into()))?;
        let family: Family =
            obj.get("family").and_then(Value::as_str).ok_or_else(|| Error::Input("descriptor needs a 'family' string".into()))?.parse()?;
        let empty = Map::new();
        let given = match obj.get("params") {
            None => &empty,
            Some(Value::Object(m)) => m,
            Some(_) => return Err(Error::Input("'params' must be an object".into())),
        };
        let mut named = Vec::with_capacity(given.len());
        for (name, z) in given {
            named.push((name.as_str(), complex_from_json(z)?));
        }
        let params = ParamVector::from_named(family, &named)?;
        let mut entry_flips = Vec::new();
        if let Some(flips) = obj.get("entry_flips") {
            for f in flips.as_array().ok_or_else(|| Error::Input("'entry_flips' must be an array".into()))? {
                let pair = f.as_array().filter(|p| p.len() == 2).and_then(|p| Some((p[0].as_u64()? as usize, p[1].as_u64()? as usize)));
                match pair {
                    Some((i, j)) if i < 4 && j < 4 => entry_flips.push((i, j)),
                    _ => return Err(Error::Input(format!("entry flip {f} must be [row, col] with indices below 4"))),
                }
            }
        }
        Ok(Self { params, entry_flips })
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::from_json(&parse_json(text)?)
    }
}

fn parse_json(text: &str) -> Result<Value> {
    serde_json::from_str(text).map_err(|e| Error::Input(format!("malformed JSON: {e}")))
}

/// A density file: either a model descriptor or `{"matrix": [[...], ...]}`.
pub fn density_from_json(v: &Value) -> Result<LocalDensity> {
    if v.get("family").is_some() {
        return Ok(ModelDescriptor::from_json(v)?.hamiltonian());
    }
    match v.get("matrix") {
        Some(m) => LocalDensity::new(matrix_from_json(m)?),
        None => Err(Error::Input("expected a model descriptor or an object with a 'matrix' field".into())),
    }
}

pub fn parse_density(text: &str) -> Result<LocalDensity> {
    density_from_json(&parse_json(text)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;
    use crate::ybe;

    #[test]
    fn descriptor_round_trip() {
        for f in Family::ALL {
            let d = ModelDescriptor::new(catalog::sample_params(f, 2));
            let text = serde_json::to_string(&d.to_json()).unwrap();
            assert_eq!(ModelDescriptor::parse(&text).unwrap(), d, "{f}");
        }
    }

    #[test]
    fn values_are_seventeen_digit_strings() {
        let v = complex_to_json(c(1.0 / 3.0, -2.0));
        assert_eq!(v, json!(["3.3333333333333331e-1", "-2.0000000000000000e0"]));
        assert_eq!(complex_from_json(&v).unwrap(), c(1.0 / 3.0, -2.0));
        assert_eq!(complex_from_json(&json!(0.5)).unwrap(), c(0.5, 0.0));
        assert_eq!(complex_from_json(&json!([1, "2"])).unwrap(), c(1.0, 2.0));
        assert!(complex_from_json(&json!([1, 2, 3])).is_err());
        assert!(complex_from_json(&json!("x")).is_err());
        assert_eq!(format_real(-0.0), "0.0000000000000000e0");
    }

    #[test]
    fn bad_descriptors_are_rejected() {
        assert!(matches!(ModelDescriptor::parse("{"), Err(Error::Input(_))));
        assert!(matches!(ModelDescriptor::parse(r#"{"family":"C9"}"#), Err(Error::UnknownFamily(_))));
        assert!(matches!(ModelDescriptor::parse(r#"{"family":"C5","params":{"b7":1}}"#), Err(Error::Params(_))));
        assert!(matches!(
            ModelDescriptor::parse(r#"{"family":"C1","params":{"a1":1,"a2":1,"a3":1,"a4":2}}"#),
            Err(Error::Constraint { .. })
        ));
        assert!(ModelDescriptor::parse(r#"{"family":"C5","entry_flips":[[0,7]]}"#).is_err());
    }

    #[test]
    fn missing_params_default_to_zero() {
        let d = ModelDescriptor::parse(r#"{"family":"C6","params":{"a1":["0.5","0"]}}"#).unwrap();
        assert_eq!(d.params.values(), &[c(0.5, 0.0), c(0.0, 0.0)]);
    }

    #[test]
    fn flipped_entries_break_ybe() {
        let mut d = ModelDescriptor::new(catalog::sample_params(Family::C5, 1));
        let clean = ybe::verify(&d.rmatrix().unwrap(), 4, 0, None).unwrap();
        assert!(clean.max_residual < 1e-9);
        d.entry_flips = vec![(0, 1)];
        let text = serde_json::to_string(&d.to_json()).unwrap();
        let back = ModelDescriptor::parse(&text).unwrap();
        let tampered = ybe::verify(&back.rmatrix().unwrap(), 4, 0, None).unwrap();
        assert!(tampered.max_residual > 1e-6);
    }

    #[test]
    fn density_files() {
        let h = catalog::hamiltonian(&catalog::sample_params(Family::XYZ3, 0));
        let v = json!({ "matrix": matrix_to_json(h.matrix()) });
        assert_eq!(&parse_density(&v.to_string()).unwrap(), &h);
        let d = ModelDescriptor::new(catalog::sample_params(Family::C2, 0));
        assert_eq!(density_from_json(&d.to_json()).unwrap(), d.hamiltonian());
        assert!(parse_density(r#"{"matrix":[[1,2],[3]]}"#).is_err());
        assert!(parse_density(r#"{"other":1}"#).is_err());
    }
}
