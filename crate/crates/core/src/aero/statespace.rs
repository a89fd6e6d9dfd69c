//! Aerodynamic derivatives with respect to structural motion and the
//! quasi-steady aeroelastic state-space model.

use nalgebra::{DMatrix, DVector};

use crate::aero::transfer::Transfer;
use crate::aero::vlm::{AeroSolver, FlowConditions};
use crate::linalg::{symmetric_generalized_eigen, C64};
use crate::{Error, Result};

/// Lattice plus its coupling to a particular beam mesh.
#[derive(Debug, Clone)]
pub struct AeroCoupling {
    pub solver: AeroSolver,
    pub transfer: Transfer,
}

/// Derivatives of the nodal aerodynamic load vector.
#[derive(Debug, Clone)]
pub struct AeroOperators {
    /// `∂f_a/∂p`
    pub k_a: DMatrix<f64>,
    /// `∂f_a/∂ṗ`
    pub c_a: DMatrix<f64>,
    /// `∂f_a/∂α`
    pub f_alpha: DVector<f64>,
    /// Total lift derivatives, `∂L/∂p` and `∂L/∂α`.
    pub lift_p: DVector<f64>,
    pub lift_alpha: f64,
}

impl AeroCoupling {
    /// Vertical panel force per unit normal wash.
    fn force_operator(&self, flow: &FlowConditions) -> DMatrix<f64> {
        let d = self.solver.force_per_circulation(flow);
        let mut w = self.solver.circulation_operator(flow);
        for (i, mut row) in w.row_iter_mut().enumerate() {
            row *= d[i];
        }
        w
    }

    /// Vertical panel forces for structural displacement `p` (full length).
    pub fn panel_forces(&self, flow: &FlowConditions, p: &DVector<f64>) -> DVector<f64> {
        let n = self.solver.lattice.len();
        let wash = (DVector::from_element(n, flow.alpha) + &self.transfer.incidence * p) * (-flow.speed);
        self.force_operator(flow) * wash
    }

    /// Nodal aerodynamic loads at displacement `p`.
    pub fn loads(&self, flow: &FlowConditions, p: &DVector<f64>) -> DVector<f64> {
        &self.transfer.force * self.panel_forces(flow, p)
    }

    pub fn jacobians(&self, flow: &FlowConditions) -> AeroOperators {
        let n = self.solver.lattice.len();
        let g = self.force_operator(flow);
        let hg = &self.transfer.force * &g;
        let k_a = &hg * &self.transfer.incidence * (-flow.speed);
        let c_a = &hg * &self.transfer.heave;
        let ones = DVector::from_element(n, 1.0);
        let f_alpha = &hg * &ones * (-flow.speed);
        let col_sum = g.transpose() * &ones;
        let lift_p = self.transfer.incidence.transpose() * &col_sum * (-flow.speed);
        let lift_alpha = -flow.speed * col_sum.sum();
        AeroOperators { k_a, c_a, f_alpha, lift_p, lift_alpha }
    }
}

/// First-order model `ṡ = A s + B α_air` in (optionally modal) coordinates.
#[derive(Debug, Clone)]
pub struct StateSpace {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    /// Columns map generalized coordinates to free DoF (identity when not reduced).
    pub basis: DMatrix<f64>,
    /// State scaling of the displacement block, `s₁ = diag(scale) q`.
    pub scale: DVector<f64>,
}

impl StateSpace {
    pub fn n_coordinates(&self) -> usize {
        self.scale.len()
    }

    /// Free-DoF displacement part of a state eigenvector.
    pub fn displacement(&self, v: &DVector<C64>) -> DVector<C64> {
        let n = self.n_coordinates();
        let q = DVector::from_fn(n, |i, _| v[i] / C64::new(self.scale[i], 0.0));
        self.basis.map(|x| C64::new(x, 0.0)) * q
    }
}

/// Assembles the state matrix from reduced (free-DoF) structural and
/// aerodynamic matrices: `M q̈ + (C − C_a) q̇ + (K − K_a) q = f_α α_air`.
/// With `modes = Some(r)` the system is projected on the `r` lowest modes of `(K, M)`.
pub fn state_space(
    m: &DMatrix<f64>,
    c: &DMatrix<f64>,
    k: &DMatrix<f64>,
    k_a: &DMatrix<f64>,
    c_a: &DMatrix<f64>,
    f_alpha: &DVector<f64>,
    modes: Option<usize>,
) -> Result<StateSpace> {
    let n = m.nrows();
    let (basis, scale, m_r, k_eff, c_eff, f_r) = match modes {
        Some(r) => {
            if r == 0 || r > n {
                return Err(Error::invalid(format!("modal basis size {r} not in 1..={n}")));
            }
            let eig = symmetric_generalized_eigen(k, m)?;
            let phi = eig.vectors.columns(0, r).into_owned();
            let scale = DVector::from_fn(r, |i, _| eig.values[i].max(0.0).sqrt().max(1.0));
            let pt = phi.transpose();
            let k_eff = &pt * (k - k_a) * &phi;
            let c_eff = &pt * (c - c_a) * &phi;
            let f_r = &pt * f_alpha;
            (phi, scale, DMatrix::identity(r, r), k_eff, c_eff, f_r)
        }
        None => (DMatrix::identity(n, n), DVector::from_element(n, 1.0), m.clone(), k - k_a, c - c_a, f_alpha.clone()),
    };
    let r = scale.len();
    let chol = m_r
        .cholesky()
        .ok_or_else(|| Error::Singular("mass matrix is not positive definite".into()))?;
    let minv_k = chol.solve(&k_eff);
    let minv_c = chol.solve(&c_eff);
    let minv_f = chol.solve(&f_r);
    let mut a = DMatrix::zeros(2 * r, 2 * r);
    for i in 0..r {
        a[(i, r + i)] = scale[i];
        for j in 0..r {
            a[(r + i, j)] = -minv_k[(i, j)] / scale[j];
            a[(r + i, r + j)] = -minv_c[(i, j)];
        }
    }
    let mut b = DVector::zeros(2 * r);
    b.rows_mut(r, r).copy_from(&minv_f);
    Ok(StateSpace { a, b, basis, scale })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::general_eigenvalues;

    #[test]
    fn structure_only_gives_imaginary_pairs() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 1.0, 3.0]));
        let k = DMatrix::from_row_slice(3, 3, &[8.0, -2.0, 0.0, -2.0, 5.0, -1.0, 0.0, -1.0, 9.0]);
        let z = DMatrix::zeros(3, 3);
        let omega2 = symmetric_generalized_eigen(&k, &m).unwrap().values;
        for modes in [None, Some(3), Some(2)] {
            let ss = state_space(&m, &z, &k, &z, &z, &DVector::zeros(3), modes).unwrap();
            let mut ev = general_eigenvalues(&ss.a).unwrap();
            ev.sort_by(|a, b| a.im.total_cmp(&b.im));
            let r = ss.n_coordinates();
            for (i, l) in ev.iter().rev().take(r).enumerate() {
                assert!(l.re.abs() < 1e-9);
                assert!((l.im - omega2[r - 1 - i].sqrt()).abs() < 1e-9, "{modes:?}");
            }
        }
    }
}
