//! Coupled static aeroelastic equilibrium, divergence, dynamic stability
//! and aileron effectiveness.

pub mod aileron;
pub mod equilibrium;
pub mod stability;
pub mod typical_section;

pub use aileron::aileron_effectiveness;
pub use equilibrium::{static_aeroelastic_solve, EquilibriumState, StaticOptions, Trim};
pub use stability::{critical_divergence, divergence_eig, dynamic_stability, flutter_speed, rayleigh_damping, StabilityResult};
pub use typical_section::TypicalSection;
