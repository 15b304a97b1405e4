//! Verification and generation toolkit for integrable nearest-neighbour spin
//! chains with a two-dimensional local Hilbert space.
//!
//! The crate is organised bottom-up:
//!
//! * [`tensor`] and [`pauli`]: dense operator algebra on `(C^2)^{⊗L}` and the
//!   extended Pauli basis `{1, σ+, σ-, σ3}`.
//! * [`charges`]: the boost recursion producing the conserved-charge tower.
//! * [`poly`] and [`reshetikhin`]: exact polynomial system for `[Q2, Q3] = 0`.
//! * [`catalog`]: the fourteen solution families and their R-matrices.
//! * [`ybe`] and [`series`]: Yang-Baxter checks and the perturbative solver.
//! * [`transforms`], [`graded`], [`analysis`]: identifications, the `C^{1|1}`
//!   sector, and spectral diagnostics.

pub mod analysis;
pub mod catalog;
pub mod charges;
pub mod descriptor;
pub mod error;
pub mod exact;
pub mod graded;
pub mod linalg;
pub mod pauli;
pub mod poly;
pub mod reshetikhin;
pub mod rmatrix;
pub mod series;
pub mod tensor;
pub mod transforms;
pub mod ybe;

pub use catalog::{Family, ParamVector};
pub use charges::{ChargeTower, FormalLocalSum};
pub use error::{Error, Result};
pub use exact::GaussRat;
pub use linalg::{CMatrix, C64};
pub use pauli::PauliCoeffs;
pub use poly::SymPoly;
pub use rmatrix::RMatrixFn;
pub use tensor::LocalDensity;
