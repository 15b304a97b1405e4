//! Shared fixtures for the criterion benchmarks.

use boostybe_core::catalog::{self, Family, ParamVector};
use boostybe_core::LocalDensity;

/// Fixed parameter draw used by every benchmark.
pub fn params(family: Family) -> ParamVector {
    catalog::sample_params(family, 0)
}

pub fn density(family: Family) -> LocalDensity {
    catalog::hamiltonian(&params(family))
}
