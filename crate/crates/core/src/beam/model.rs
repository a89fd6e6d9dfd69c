//! Beam model definition and global assembly.

use nalgebra::{DMatrix, DVector, Matrix3, SVector, Vector3, Vector6};

use crate::beam::element::{element_frame, element_mass, element_stiffness, rotation12, unit_geometric_stiffness, Matrix12};
use crate::beam::section::{SectionMass, SectionStiffness};
use crate::linalg::skew;
use crate::{Error, Result};

pub const DOF_PER_NODE: usize = 6;

#[derive(Debug, Clone)]
pub struct BeamElement {
    pub nodes: [usize; 2],
    pub stiffness: SectionStiffness,
    /// Smeared mass (structure plus any distributed non-structural mass).
    pub mass: SectionMass,
}

/// Rigid lumped mass attached to a node.
#[derive(Debug, Clone)]
pub struct PointMass {
    pub node: usize,
    pub mass: f64,
    /// Position of the mass relative to the node, global axes.
    pub offset: Vector3<f64>,
    /// Rotary inertia about the mass's own centroid, global axes.
    pub inertia: Matrix3<f64>,
}

#[derive(Debug, Clone, Default)]
pub struct BeamModel {
    pub nodes: Vec<Vector3<f64>>,
    pub elements: Vec<BeamElement>,
    pub point_masses: Vec<PointMass>,
    /// Nodes with all six DoF fixed.
    pub clamped: Vec<usize>,
}

impl BeamModel {
    pub fn n_dof(&self) -> usize {
        DOF_PER_NODE * self.nodes.len()
    }

    pub fn element_length(&self, e: usize) -> f64 {
        let [a, b] = self.elements[e].nodes;
        (self.nodes[b] - self.nodes[a]).norm()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.nodes.len();
        if n < 2 || self.elements.is_empty() {
            return Err(Error::invalid("beam model needs at least one element"));
        }
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut i: usize) -> usize {
            while p[i] != i {
                p[i] = p[p[i]];
                i = p[i];
            }
            i
        }
        for (i, el) in self.elements.iter().enumerate() {
            let [a, b] = el.nodes;
            if a >= n || b >= n || a == b {
                return Err(Error::invalid(format!("element {i} has invalid nodes {a}, {b}")));
            }
            if !(self.element_length(i) > 0.0) {
                return Err(Error::invalid(format!("element {i} has zero length")));
            }
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            parent[ra] = rb;
        }
        let root = find(&mut parent, 0);
        if (0..n).any(|i| find(&mut parent, i) != root) {
            return Err(Error::invalid("beam model is not connected"));
        }
        for pm in &self.point_masses {
            if pm.node >= n || pm.mass < 0.0 {
                return Err(Error::invalid("point mass references a missing node or is negative"));
            }
        }
        if self.clamped.iter().any(|&c| c >= n) {
            return Err(Error::invalid("clamped node out of range"));
        }
        Ok(())
    }

    pub fn free_dofs(&self) -> Vec<usize> {
        (0..self.nodes.len())
            .filter(|i| !self.clamped.contains(i))
            .flat_map(|i| (0..DOF_PER_NODE).map(move |d| DOF_PER_NODE * i + d))
            .collect()
    }

    /// Smeared plus lumped mass.
    pub fn total_mass(&self) -> f64 {
        let smeared: f64 = (0..self.elements.len())
            .map(|e| self.elements[e].mass.mass_per_length * self.element_length(e))
            .sum();
        smeared + self.point_masses.iter().map(|p| p.mass).sum::<f64>()
    }
}

/// Concentrated force and moment at a node, global axes.
#[derive(Debug, Clone, Copy)]
pub struct NodalLoad {
    pub node: usize,
    pub force: Vector3<f64>,
    pub moment: Vector3<f64>,
}

pub fn load_vector(model: &BeamModel, loads: &[NodalLoad]) -> Result<DVector<f64>> {
    let mut f = DVector::zeros(model.n_dof());
    for l in loads {
        if l.node >= model.nodes.len() {
            return Err(Error::invalid(format!("load on missing node {}", l.node)));
        }
        let i = DOF_PER_NODE * l.node;
        f.fixed_rows_mut::<3>(i).copy_from(&l.force);
        f.fixed_rows_mut::<3>(i + 3).copy_from(&l.moment);
    }
    Ok(f)
}

#[derive(Debug, Clone)]
pub(crate) struct ElementCache {
    pub dofs: [usize; 12],
    pub rot: Matrix12,
    pub k_local: Matrix12,
    pub kg_unit: Matrix12,
    pub length: f64,
}

/// Global matrices of a beam model. Full-size (all DoF); the constrained
/// problem uses the `free` index set.
#[derive(Debug, Clone)]
pub struct AssembledSystem {
    pub k: DMatrix<f64>,
    pub m: DMatrix<f64>,
    pub f: DVector<f64>,
    pub free: Vec<usize>,
    pub(crate) elements: Vec<ElementCache>,
}

fn point_mass_matrix(pm: &PointMass) -> nalgebra::Matrix6<f64> {
    let r = skew(&pm.offset);
    let mut out = nalgebra::Matrix6::zeros();
    out.fixed_view_mut::<3, 3>(0, 0).copy_from(&(Matrix3::identity() * pm.mass));
    out.fixed_view_mut::<3, 3>(0, 3).copy_from(&(-r * pm.mass));
    out.fixed_view_mut::<3, 3>(3, 0).copy_from(&(r * pm.mass));
    out.fixed_view_mut::<3, 3>(3, 3).copy_from(&(pm.inertia + r.transpose() * r * pm.mass));
    out
}

/// Builds global `K`, `M` and `f`. Fails when a supported model has a
/// mechanism (singular constrained stiffness). Unsupported models are
/// accepted so free-free modal analysis remains possible.
pub fn assemble(model: &BeamModel, loads: &[NodalLoad]) -> Result<AssembledSystem> {
    model.validate()?;
    let n = model.n_dof();
    let mut k = DMatrix::zeros(n, n);
    let mut m = DMatrix::zeros(n, n);
    let mut elements = Vec::with_capacity(model.elements.len());
    for el in &model.elements {
        let [a, b] = el.nodes;
        let frame = element_frame(&model.nodes[a], &model.nodes[b])?;
        let length = (model.nodes[b] - model.nodes[a]).norm();
        let rot = rotation12(&frame);
        let k_local = element_stiffness(&el.stiffness, length)?;
        let kg_unit = unit_geometric_stiffness(length)?;
        let mut dofs = [0usize; 12];
        for d in 0..6 {
            dofs[d] = DOF_PER_NODE * a + d;
            dofs[6 + d] = DOF_PER_NODE * b + d;
        }
        let kg = rot.transpose() * k_local * rot;
        let mg = rot.transpose() * element_mass(&el.mass, length)? * rot;
        for i in 0..12 {
            for j in 0..12 {
                k[(dofs[i], dofs[j])] += kg[(i, j)];
                m[(dofs[i], dofs[j])] += mg[(i, j)];
            }
        }
        elements.push(ElementCache { dofs, rot, k_local, kg_unit, length });
    }
    for pm in &model.point_masses {
        let mp = point_mass_matrix(pm);
        let base = DOF_PER_NODE * pm.node;
        for i in 0..6 {
            for j in 0..6 {
                m[(base + i, base + j)] += mp[(i, j)];
            }
        }
    }
    crate::linalg::symmetrize(&mut k);
    crate::linalg::symmetrize(&mut m);
    let f = load_vector(model, loads)?;
    let sys = AssembledSystem { k, m, f, free: model.free_dofs(), elements };
    if !model.clamped.is_empty() && sys.reduce(&sys.k).cholesky().is_none() {
        return Err(Error::Singular("constrained stiffness is singular (free mechanism)".into()));
    }
    Ok(sys)
}

impl AssembledSystem {
    pub fn n_dof(&self) -> usize {
        self.k.nrows()
    }

    pub fn n_free(&self) -> usize {
        self.free.len()
    }

    pub fn n_elements(&self) -> usize {
        self.elements.len()
    }

    /// Restriction of a full matrix to the free DoF.
    pub fn reduce(&self, a: &DMatrix<f64>) -> DMatrix<f64> {
        a.select_rows(&self.free).select_columns(&self.free)
    }

    pub fn reduce_vector(&self, v: &DVector<f64>) -> DVector<f64> {
        v.select_rows(&self.free)
    }

    /// Full vector with zeros on constrained DoF.
    pub fn expand(&self, v: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.n_dof());
        for (i, &d) in self.free.iter().enumerate() {
            out[d] = v[i];
        }
        out
    }

    pub(crate) fn local_displacements(&self, e: usize, p: &DVector<f64>) -> SVector<f64, 12> {
        let c = &self.elements[e];
        let g = SVector::<f64, 12>::from_fn(|i, _| p[c.dofs[i]]);
        c.rot * g
    }

    /// Nodal forces acting on element `e` in its local frame.
    pub fn element_end_forces(&self, e: usize, p: &DVector<f64>) -> SVector<f64, 12> {
        self.elements[e].k_local * self.local_displacements(e, p)
    }

    /// Axial force of each element (tension positive).
    pub fn axial_forces(&self, p: &DVector<f64>) -> Vec<f64> {
        (0..self.elements.len()).map(|e| self.element_end_forces(e, p)[6]).collect()
    }

    /// Section resultants `[F; M]` in the element frame at fraction `frac`
    /// along element `e`.
    pub fn element_resultants(&self, e: usize, p: &DVector<f64>, frac: f64) -> Vector6<f64> {
        let f = self.element_end_forces(e, p);
        let tip = Vector6::from_fn(|i, _| f[6 + i]);
        let d = self.elements[e].length * (1.0 - frac);
        let arm = Vector3::new(d, 0.0, 0.0);
        let force = tip.fixed_rows::<3>(0).into_owned();
        let moment = tip.fixed_rows::<3>(3) + arm.cross(&force);
        Vector6::new(force.x, force.y, force.z, moment.x, moment.y, moment.z)
    }

    pub fn element_length(&self, e: usize) -> f64 {
        self.elements[e].length
    }

    fn scatter(&self, out: &mut DMatrix<f64>, e: usize, local: &Matrix12) {
        let c = &self.elements[e];
        let g = c.rot.transpose() * local * c.rot;
        for i in 0..12 {
            for j in 0..12 {
                out[(c.dofs[i], c.dofs[j])] += g[(i, j)];
            }
        }
    }

    /// Internal nodal force of the geometrically nonlinear model, the
    /// gradient of `½pᵀKp + ½Σ N_e s_e + ⅛Σ k_e s_e²` with `s_e = p_eᵀ G_e p_e`,
    /// `N_e` the linear axial force and `k_e` the axial element stiffness.
    /// This is the energy of the mean membrane strain `Δu/L + s/(2L)`.
    pub fn internal_force(&self, p: &DVector<f64>) -> DVector<f64> {
        let mut r = &self.k * p;
        for (e, c) in self.elements.iter().enumerate() {
            let pl = self.local_displacements(e, p);
            let n_row = c.k_local.row(6).transpose();
            let gp = c.kg_unit * pl;
            let s = pl.dot(&gp);
            let axial = n_row.dot(&pl) + 0.5 * c.k_local[(6, 6)] * s;
            let local = gp * axial + n_row * (0.5 * s);
            let global = c.rot.transpose() * local;
            for i in 0..12 {
                r[c.dofs[i]] += global[i];
            }
        }
        r
    }

    /// Tangent of [`Self::internal_force`]; symmetric.
    pub fn tangent(&self, p: &DVector<f64>) -> DMatrix<f64> {
        let mut kt = self.k.clone();
        for (e, c) in self.elements.iter().enumerate() {
            let pl = self.local_displacements(e, p);
            let n_row = c.k_local.row(6).transpose();
            let gp = c.kg_unit * pl;
            let ka = c.k_local[(6, 6)];
            let axial = n_row.dot(&pl) + 0.5 * ka * pl.dot(&gp);
            let local = c.kg_unit * axial + gp * n_row.transpose() + n_row * gp.transpose() + gp * gp.transpose() * ka;
            self.scatter(&mut kt, e, &local);
        }
        kt
    }
}

/// Geometric stiffness from the element axial forces of displacement `p`.
pub fn geometric_stiffness(system: &AssembledSystem, p: &DVector<f64>) -> DMatrix<f64> {
    let n = system.n_dof();
    let mut kg = DMatrix::zeros(n, n);
    for (e, axial) in system.axial_forces(p).into_iter().enumerate() {
        let local = system.elements[e].kg_unit * axial;
        system.scatter(&mut kg, e, &local);
    }
    kg
}

/// Writes a matrix as a header line `rows cols` followed by one row per line.
pub fn write_matrix<W: std::io::Write>(out: &mut W, a: &DMatrix<f64>) -> std::io::Result<()> {
    writeln!(out, "{} {}", a.nrows(), a.ncols())?;
    for i in 0..a.nrows() {
        let row: Vec<String> = (0..a.ncols()).map(|j| format!("{:.12e}", a[(i, j)])).collect();
        writeln!(out, "{}", row.join(" "))?;
    }
    Ok(())
}
