//! `RMatrixFn`: a spectral-parameter dependent 4×4 matrix with metadata.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::catalog::{Family, ParamVector};
use crate::linalg::{self, CMatrix, C64};
use crate::tensor;
use crate::{Error, Result};

type Evaluator = dyn Fn(C64) -> Result<CMatrix> + Send + Sync;

/// Where an evaluator came from; reported alongside verification results.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    ClosedForm,
    Series,
    Derived,
}

#[derive(Clone)]
pub struct RMatrixFn {
    label: String,
    family: Option<Family>,
    params: Option<ParamVector>,
    provenance: Provenance,
    eval: Arc<Evaluator>,
}

impl fmt::Debug for RMatrixFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RMatrixFn")
            .field("label", &self.label)
            .field("family", &self.family)
            .field("provenance", &self.provenance)
            .finish_non_exhaustive()
    }
}

impl RMatrixFn {
    pub fn new(label: impl Into<String>, provenance: Provenance, f: impl Fn(C64) -> Result<CMatrix> + Send + Sync + 'static) -> Self {
        Self { label: label.into(), family: None, params: None, provenance, eval: Arc::new(f) }
    }

    pub fn with_family(mut self, params: ParamVector) -> Self {
        self.family = Some(params.family());
        self.params = Some(params);
        self
    }

    /// `R(u) = P` for every `u`.
    pub fn permutation() -> Self {
        let p = tensor::permutation_op();
        Self::new("P", Provenance::Derived, move |_| Ok(p.clone()))
    }

    /// The truncated series `Σ_n coeffs[n] u^n`.
    pub fn from_series(label: impl Into<String>, coeffs: Vec<CMatrix>) -> Self {
        Self::new(label, Provenance::Series, move |u| {
            // Horner evaluation.
            let mut acc = CMatrix::zeros(4, 4);
            for c in coeffs.iter().rev() {
                acc = acc * u + c;
            }
            Ok(acc)
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn family(&self) -> Option<Family> {
        self.family
    }

    pub fn params(&self) -> Option<&ParamVector> {
        self.params.as_ref()
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn eval(&self, u: C64) -> Result<CMatrix> {
        let m = (self.eval)(u)?;
        if !linalg::is_finite(&m) {
            return Err(Error::singular_at(u));
        }
        Ok(m)
    }

    /// A new evaluator `u ↦ f(R(u))`, keeping the metadata.
    pub fn map(&self, label: impl Into<String>, f: impl Fn(CMatrix) -> CMatrix + Send + Sync + 'static) -> Self {
        let inner = self.eval.clone();
        Self {
            label: label.into(),
            family: self.family,
            params: self.params.clone(),
            provenance: Provenance::Derived,
            eval: Arc::new(move |u| inner(u).map(&f)),
        }
    }

    /// `u ↦ g(u) R(u)` for a scalar function `g`.
    pub fn rescaled(&self, g: impl Fn(C64) -> C64 + Send + Sync + 'static) -> Self {
        let inner = self.eval.clone();
        Self {
            label: self.label.clone(),
            family: self.family,
            params: self.params.clone(),
            provenance: self.provenance,
            eval: Arc::new(move |u| inner(u).map(|m| m * g(u))),
        }
    }
}
