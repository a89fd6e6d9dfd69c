//! Steady vortex-lattice aerodynamics on a flat-plate planform, load and
//! motion transfer to the beam, and the quasi-steady aeroelastic state space.

pub mod lattice;
pub mod statespace;
pub mod transfer;
pub mod vlm;

pub use lattice::{build_lattice, Aileron, Lattice, Panel, Planform, PlanformSegment};
pub use statespace::{state_space, AeroCoupling, AeroOperators, StateSpace};
pub use transfer::{loads_to_beam, Transfer};
pub use vlm::{steady_solve, AeroSolver, FlowConditions, SteadySolution, Symmetry};
