//! Aileron effectiveness: flexible over rigid rolling moment per unit deflection.

use nalgebra::{DMatrix, DVector};

use crate::aero::statespace::AeroCoupling;
use crate::aero::vlm::FlowConditions;
use crate::beam::model::AssembledSystem;
use crate::{Error, Result};

/// `η = (m_rigid + m_elastic) / m_rigid` for an antisymmetric aileron input.
/// `coupling` should use the antisymmetric image; `k_t` is the full-size
/// structural tangent at the flight condition.
pub fn aileron_effectiveness(system: &AssembledSystem, k_t: &DMatrix<f64>, coupling: &AeroCoupling, flow: &FlowConditions) -> Result<f64> {
    let lattice = &coupling.solver.lattice;
    let wash_delta = DVector::from_iterator(lattice.len(), lattice.panels.iter().map(|p| if p.aileron { -flow.speed } else { 0.0 }));
    if lattice.panels.iter().all(|p| !p.aileron) {
        return Err(Error::invalid("no aileron defined on the lattice"));
    }
    if flow.speed == 0.0 {
        return Ok(1.0);
    }
    let arm = DVector::from_iterator(lattice.len(), lattice.panels.iter().map(|p| p.force_point().y));
    let d = coupling.solver.force_per_circulation(flow);
    let w = coupling.solver.circulation_operator(flow);
    let panel_forces = |wash: &DVector<f64>| -> DVector<f64> { (&w * wash).component_mul(&d) };
    let f_rigid = panel_forces(&wash_delta);
    let m_rigid = arm.dot(&f_rigid);
    let ops = coupling.jacobians(flow);
    let f_nodes = &coupling.transfer.force * &f_rigid;
    let a = system.reduce(&(k_t - &ops.k_a));
    let dp = a
        .lu()
        .solve(&system.reduce_vector(&f_nodes))
        .ok_or_else(|| Error::Singular("flexible aileron solve is singular (beyond divergence?)".into()))?;
    let dp = system.expand(&dp);
    let f_elastic = panel_forces(&(&coupling.transfer.incidence * &dp * (-flow.speed)));
    Ok((m_rigid + arm.dot(&f_elastic)) / m_rigid)
}
