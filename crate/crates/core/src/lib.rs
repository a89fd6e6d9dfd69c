//! Multi-fidelity aeroelastic tailoring of composite wingboxes.
//!
//! The crate models a composite wingbox at two fidelity levels, evaluates
//! the full sizing constraint vector (strength, panel buckling, flutter,
//! aileron effectiveness, angle of attack, lamination feasibility) with
//! gradients, compares the fidelities, and minimizes wing mass with a
//! first-order consistent trust-region model-management optimizer.
//!
//! Module map:
//!
//! - [`laminate`]: lamination parameters, stiffness matrices, feasibility, Tsai-Wu.
//! - [`beam`]: thin-walled section stiffness and the Timoshenko beam solver.
//! - [`aero`]: steady vortex lattice, load transfer, quasi-steady state space.
//! - [`aeroelastic`]: static equilibrium, divergence, flutter, aileron effectiveness.
//! - [`constraints`]: the design-to-outputs mapping used by the optimizer.
//! - [`fidelity`]: low- and high-fidelity model construction from one config.
//! - [`mfopt`]: trust-region model management and the single-fidelity baseline.
//! - [`harness`]: configuration, model comparison cases, MAC, reports.

pub mod aero;
pub mod aeroelastic;
pub mod beam;
pub mod constraints;
mod error;
pub mod fidelity;
pub mod harness;
pub mod laminate;
pub mod linalg;
pub mod mfopt;

pub use error::{Error, Result};

pub use constraints::{
    Availability, Category, ConstraintMeta, ConstraintVector, DesignVector, ModelOutputs,
};
pub use harness::config::RunConfig;
pub use laminate::{ABDMatrices, LaminationParameters, MaterialProperties, PanelDesign};
pub use beam::section::SectionStiffness;

/// Value used to pad critical-value sets that have fewer candidates than requested.
pub const SENTINEL: f64 = -1.0e30;
