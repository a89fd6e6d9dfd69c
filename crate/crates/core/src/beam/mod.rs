//! Thin-walled section properties and a Timoshenko beam finite-element
//! solver: assembly, linear and geometrically nonlinear statics, modes,
//! buckling, and local panel buckling.

pub mod analysis;
pub mod element;
pub mod model;
pub mod panel;
pub mod section;

pub use analysis::{buckling, modal, prismatic_beam, static_solve, BucklingResult, Modes, NewtonOptions, SolveMode};
pub use element::element_stiffness;
pub use model::{assemble, geometric_stiffness, AssembledSystem, BeamElement, BeamModel, NodalLoad, PointMass};
pub use section::{section_stiffness, CrossSection, Segment, SectionMass, SectionModel, SectionStiffness};
