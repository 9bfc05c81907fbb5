//! Co-evolving opinions and signed ties.
//!
//! Opinions `V` and tie weights `W` evolve together: `V' = aWV` and
//! `W' = bVVᵀ` on a graph (or the discrete analogue). The tie matrix obeys
//! a matrix Riccati equation with a conserved `C = VVᵀ − (a/b)W²`, which
//! gives closed forms and blow-up predictions, and blow-up typically ends in
//! a structurally balanced sign pattern.
//!
//! - [`dynamics`]: state, simulation and the opinion ODE.
//! - [`riccati`]: series and closed-form solutions, blow-up prediction.
//! - [`balance`]: triangle balance, partitions, outcome classification.
//! - [`analysis`]: λ-coordinates, limits, convergence sweeps.
//! - [`graphio`]: random graphs, edge lists, seeding and accuracy.
//! - [`experiments`]: reproducible run recipes and the invariant battery.
//! - [`spectral`]: symmetric eigensolver and helpers.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod balance;
pub mod dynamics;
pub mod experiments;
pub mod graphio;
pub mod riccati;
pub mod spectral;

pub use balance::{Outcome, OutcomeClass};
pub use dynamics::{
    simulate, DynamicsError, GraphTopology, Mode, SimConfig, StopReason, SystemState, Trajectory,
};
pub use experiments::{GraphSpec, RunSpec, V0Spec, W0Spec};
pub use graphio::LabeledGraph;
pub use riccati::{BlowupPrediction, RiccatiError};
pub use spectral::{SpectralError, SymmetricMatrix};
