//! Configuration, fidelity comparisons, MAC and report output.

pub mod compare;
pub mod config;
pub mod mac;
pub mod report;
pub mod svg;
