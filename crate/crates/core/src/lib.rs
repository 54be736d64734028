//! Simulation kernel for a chain of lossy cavity-QED polariton sites.
//!
//! The crate evolves a network of two-level polariton sites under a
//! zero-temperature microscopic (Davies) Lindblad master equation and
//! computes global quantum discord and related multipartite correlation
//! measures along the trajectory.
//!
//! Module layout:
//! - [`qmat`]: dense complex linear algebra on multi-qubit operators
//!   (tensor products, partial traces, Hermitian eigendecomposition,
//!   entropies).
//! - [`optim`]: derivative-free simplex minimization used by the
//!   measurement-basis search.
//! - [`model`]: network Hamiltonian and Davies jump-operator
//!   construction.
//! - [`dynamics`]: fixed-step master-equation integration and
//!   excitation-probability extraction.
//! - [`measures`]: mutual information, quantum discord, global quantum
//!   discord, and residual (monogamy) combinations.
//! - [`scenarios`]: initial-state builders, end-to-end runs, and the
//!   CSV/config file formats used by the CLI.

pub mod dynamics;
pub mod measures;
pub mod model;
pub mod optim;
pub mod qmat;
pub mod scenarios;

#[cfg(test)]
pub(crate) mod testutil;

pub use dynamics::{EvolutionConfig, Trajectory};
pub use measures::{CorrelationReport, MeasuredSide, MeasurementBasis, OptimizationConfig};
pub use model::{DaviesChannel, NetworkParams};
pub use qmat::{DensityMatrix, OperatorMatrix, Spectrum, StateTolerances};
pub use scenarios::{OutputRecord, Overrides, ScenarioKind, ScenarioSpec};
