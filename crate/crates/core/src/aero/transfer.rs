//! Coupling between lattice points and beam nodes.
//!
//! A point is attached to the beam element whose spanwise range contains
//! it, with linear weights on the two end nodes. Forces become nodal forces
//! plus the moments of their offsets from each node, which conserves total
//! force and moment exactly. The displacement interpolation is the
//! transpose, a rigid link from the nodes to the point.

use nalgebra::{DMatrix, DVector, Vector3};

use crate::aero::lattice::Lattice;
use crate::beam::model::DOF_PER_NODE;
use crate::{Error, Result};

/// Element index and weights `(w_a, w_b)` for span station `y` on a beam
/// whose node `y` coordinates increase strictly.
pub fn locate(nodes: &[Vector3<f64>], y: f64) -> Result<(usize, usize, f64, f64)> {
    let n = nodes.len();
    if n < 2 {
        return Err(Error::invalid("load transfer needs at least two beam nodes"));
    }
    let (y0, y1) = (nodes[0].y, nodes[n - 1].y);
    let tol = 1e-9 * (y1 - y0).abs().max(1.0);
    if y < y0 - tol || y > y1 + tol {
        return Err(Error::invalid(format!("point at y = {y} lies outside the beam span; unmapped strip")));
    }
    for k in 0..n - 1 {
        let (ya, yb) = (nodes[k].y, nodes[k + 1].y);
        if !(yb > ya) {
            return Err(Error::invalid("beam nodes must have strictly increasing y for load transfer"));
        }
        if y <= yb + tol || k == n - 2 {
            let t = ((y - ya) / (yb - ya)).clamp(0.0, 1.0);
            return Ok((k, k + 1, 1.0 - t, t));
        }
    }
    unreachable!()
}

/// Nodal load vector equivalent to point forces.
pub fn loads_to_beam(nodes: &[Vector3<f64>], points: &[Vector3<f64>], forces: &[Vector3<f64>]) -> Result<DVector<f64>> {
    if points.len() != forces.len() {
        return Err(Error::invalid("force and point counts differ"));
    }
    let mut f = DVector::zeros(DOF_PER_NODE * nodes.len());
    for (p, force) in points.iter().zip(forces) {
        let (a, b, wa, wb) = locate(nodes, p.y)?;
        for (node, w) in [(a, wa), (b, wb)] {
            let r = p - nodes[node];
            let i = DOF_PER_NODE * node;
            let fw = force * w;
            let m = r.cross(&fw);
            for d in 0..3 {
                f[i + d] += fw[d];
                f[i + 3 + d] += m[d];
            }
        }
    }
    Ok(f)
}

/// Linear maps between beam DoF and lattice quantities.
#[derive(Debug, Clone)]
pub struct Transfer {
    /// Nodal loads per unit vertical force at each panel force point (n_dof × n_panels).
    pub force: DMatrix<f64>,
    /// Incidence change (global `θ_y`) at each control point (n_panels × n_dof).
    pub incidence: DMatrix<f64>,
    /// Vertical displacement of each control point (n_panels × n_dof).
    pub heave: DMatrix<f64>,
}

impl Transfer {
    pub fn new(nodes: &[Vector3<f64>], lattice: &Lattice) -> Result<Self> {
        let nd = DOF_PER_NODE * nodes.len();
        let np = lattice.len();
        let mut force = DMatrix::zeros(nd, np);
        let mut incidence = DMatrix::zeros(np, nd);
        let mut heave = DMatrix::zeros(np, nd);
        for (j, panel) in lattice.panels.iter().enumerate() {
            let fp = panel.force_point();
            let (a, b, wa, wb) = locate(nodes, fp.y)?;
            for (node, w) in [(a, wa), (b, wb)] {
                let r = fp - nodes[node];
                let i = DOF_PER_NODE * node;
                // unit z force: moment r × ẑ = (r_y, −r_x, 0)
                force[(i + 2, j)] += w;
                force[(i + 3, j)] += w * r.y;
                force[(i + 4, j)] -= w * r.x;
            }
            let cp = panel.control;
            let (a, b, wa, wb) = locate(nodes, cp.y)?;
            for (node, w) in [(a, wa), (b, wb)] {
                let r = cp - nodes[node];
                let i = DOF_PER_NODE * node;
                incidence[(j, i + 4)] += w;
                // u_z + (θ × r)_z
                heave[(j, i + 2)] += w;
                heave[(j, i + 3)] += w * r.y;
                heave[(j, i + 4)] -= w * r.x;
            }
        }
        Ok(Self { force, incidence, heave })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn beam_nodes() -> Vec<Vector3<f64>> {
        (0..=5).map(|i| Vector3::new(0.3 * i as f64, i as f64, 0.0)).collect()
    }

    fn totals(nodes: &[Vector3<f64>], f: &DVector<f64>) -> (Vector3<f64>, Vector3<f64>) {
        let mut force = Vector3::zeros();
        let mut moment = Vector3::zeros();
        for (k, n) in nodes.iter().enumerate() {
            let fk = Vector3::new(f[6 * k], f[6 * k + 1], f[6 * k + 2]);
            let mk = Vector3::new(f[6 * k + 3], f[6 * k + 4], f[6 * k + 5]);
            force += fk;
            moment += mk + n.cross(&fk);
        }
        (force, moment)
    }

    #[test]
    fn random_forces_conserve_totals() {
        let nodes = beam_nodes();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let pts: Vec<_> = (0..40)
            .map(|_| Vector3::new(rng.random_range(-1.0..2.0), rng.random_range(0.0..5.0), rng.random_range(-0.1..0.1)))
            .collect();
        let frc: Vec<_> = (0..40)
            .map(|_| Vector3::new(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0), rng.random_range(-50.0..50.0)))
            .collect();
        let f = loads_to_beam(&nodes, &pts, &frc).unwrap();
        let (ft, mt) = totals(&nodes, &f);
        let fd: Vector3<f64> = frc.iter().sum();
        let md: Vector3<f64> = pts.iter().zip(&frc).map(|(p, f)| p.cross(f)).sum();
        assert!((ft - fd).norm() < 1e-12 * fd.norm());
        assert!((mt - md).norm() < 1e-12 * md.norm());
    }

    #[test]
    fn single_force_is_split_with_transfer_moment() {
        let nodes = beam_nodes();
        let f = loads_to_beam(&nodes, &[Vector3::new(1.0, 2.5, 0.0)], &[Vector3::new(0.0, 0.0, 10.0)]).unwrap();
        assert!((f[12 + 2] - 5.0).abs() < 1e-15 && (f[18 + 2] - 5.0).abs() < 1e-15);
        // node 2 sits at x = 0.6, the point is 0.4 aft: nose-down moment about y
        assert!((f[12 + 4] + 0.4 * 5.0).abs() < 1e-14);
    }

    #[test]
    fn outside_span_is_unmapped() {
        let nodes = beam_nodes();
        assert!(loads_to_beam(&nodes, &[Vector3::new(0.0, 6.0, 0.0)], &[Vector3::z()]).is_err());
    }

    #[test]
    fn displacement_map_is_rigid_link() {
        let nodes = beam_nodes();
        let pf = crate::aero::lattice::Planform::single(5.0, 1.0, 1.0, 0.0);
        let lat = crate::aero::lattice::build_lattice(&pf, 2, 5).unwrap();
        let t = Transfer::new(&nodes, &lat).unwrap();
        // rigid rotation θ_y = 0.01 about the origin: w = −0.01 x
        let mut p = DVector::zeros(36);
        for (k, n) in nodes.iter().enumerate() {
            p[6 * k + 4] = 0.01;
            p[6 * k + 2] = -0.01 * n.x;
        }
        let w = &t.heave * &p;
        for (j, panel) in lat.panels.iter().enumerate() {
            assert!((w[j] + 0.01 * panel.control.x).abs() < 1e-15);
        }
        assert!(((&t.incidence * &p).add_scalar(-0.01)).amax() < 1e-15);
    }
}
