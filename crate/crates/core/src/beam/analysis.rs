//! Static, modal and buckling analyses on an assembled beam.

use nalgebra::{DMatrix, DVector, Vector3};
use serde::{Deserialize, Serialize};

use crate::beam::model::{AssembledSystem, BeamElement, BeamModel};
use crate::beam::section::{SectionMass, SectionStiffness};
use crate::linalg::{buckling_eigen, symmetric_generalized_eigen};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, schemars::JsonSchema, Default)]
#[serde(rename_all = "lowercase")]
pub enum SolveMode {
    #[default]
    Linear,
    Nonlinear,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(default)]
pub struct NewtonOptions {
    /// Converged when `‖R‖ ≤ tol ‖f‖`.
    pub tol: f64,
    pub max_iter: usize,
    pub load_steps: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self { tol: 1e-8, max_iter: 50, load_steps: 10 }
    }
}

fn solve_spd(a: DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    if let Some(ch) = a.clone().cholesky() {
        return Ok(ch.solve(b));
    }
    a.lu()
        .solve(b)
        .ok_or_else(|| Error::Singular("stiffness matrix is singular".into()))
}

/// Static displacements (full length) for load vector `f`.
pub fn static_solve(system: &AssembledSystem, f: &DVector<f64>, mode: SolveMode, opts: &NewtonOptions) -> Result<DVector<f64>> {
    if f.len() != system.n_dof() {
        return Err(Error::invalid("load vector length does not match the model"));
    }
    let ff = system.reduce_vector(f);
    let p = solve_spd(system.reduce(&system.k), &ff)?;
    let p = system.expand(&p);
    match mode {
        SolveMode::Linear => Ok(p),
        SolveMode::Nonlinear => newton(system, f, opts),
    }
}

fn newton(system: &AssembledSystem, f: &DVector<f64>, opts: &NewtonOptions) -> Result<DVector<f64>> {
    let fnorm = system.reduce_vector(f).norm();
    let mut p = DVector::zeros(system.n_dof());
    if fnorm == 0.0 {
        return Ok(p);
    }
    let steps = opts.load_steps.max(1);
    for step in 1..=steps {
        let lam = step as f64 / steps as f64;
        let mut converged = false;
        for _ in 0..=opts.max_iter {
            let r = system.reduce_vector(&(f * lam - system.internal_force(&p)));
            if r.norm() <= opts.tol * fnorm {
                converged = true;
                break;
            }
            let kt = system.reduce(&system.tangent(&p));
            let dp = kt
                .lu()
                .solve(&r)
                .ok_or_else(|| Error::Singular(format!("tangent stiffness singular at load factor {lam}")))?;
            p += system.expand(&dp);
            if !p.iter().all(|v| v.is_finite()) {
                return Err(Error::NonConvergence(format!("Newton iterate diverged at load factor {lam}")));
            }
        }
        if !converged {
            return Err(Error::NonConvergence(format!(
                "Newton did not converge in {} iterations at load factor {lam}",
                opts.max_iter
            )));
        }
    }
    Ok(p)
}

/// Natural frequencies (rad/s, ascending) and mass-normalized full-length shapes.
#[derive(Debug, Clone)]
pub struct Modes {
    pub omega: Vec<f64>,
    pub shapes: DMatrix<f64>,
}

pub fn modal(system: &AssembledSystem, n: usize) -> Result<Modes> {
    modal_with(system, &system.reduce(&system.k), n)
}

/// Modal analysis with a given reduced stiffness (for example a tangent).
pub fn modal_with(system: &AssembledSystem, k_ff: &DMatrix<f64>, n: usize) -> Result<Modes> {
    if n > system.n_free() {
        return Err(Error::invalid(format!("{n} modes requested but only {} free DoF", system.n_free())));
    }
    let eig = symmetric_generalized_eigen(k_ff, &system.reduce(&system.m))?;
    let omega = (0..n).map(|i| eig.values[i].max(0.0).sqrt()).collect();
    let mut shapes = DMatrix::zeros(system.n_dof(), n);
    for i in 0..n {
        shapes.set_column(i, &system.expand(&eig.vectors.column(i).into_owned()));
    }
    Ok(Modes { omega, shapes })
}

/// Buckling factors and full-length modes.
#[derive(Debug, Clone)]
pub struct BucklingResult {
    pub factors: Vec<f64>,
    pub modes: DMatrix<f64>,
}

/// Solves `(K + λ K_g) a = 0` for the `n` smallest positive factors. An
/// all-tension state yields no factors.
pub fn buckling(system: &AssembledSystem, kg: &DMatrix<f64>, n: usize) -> Result<BucklingResult> {
    let eig = buckling_eigen(&system.reduce(&system.k), &system.reduce(kg))?;
    let take = n.min(eig.values.len());
    let factors = eig.values.iter().take(take).copied().collect();
    let mut modes = DMatrix::zeros(system.n_dof(), take);
    for i in 0..take {
        modes.set_column(i, &system.expand(&eig.vectors.column(i).into_owned()));
    }
    Ok(BucklingResult { factors, modes })
}

/// Straight prismatic beam along global `y`, clamped at node 0 unless `free`.
pub fn prismatic_beam(length: f64, n_elements: usize, stiffness: SectionStiffness, mass: SectionMass, clamped: bool) -> BeamModel {
    let nodes = (0..=n_elements)
        .map(|i| Vector3::new(0.0, length * i as f64 / n_elements as f64, 0.0))
        .collect();
    let elements = (0..n_elements)
        .map(|i| BeamElement { nodes: [i, i + 1], stiffness, mass })
        .collect();
    BeamModel { nodes, elements, point_masses: Vec::new(), clamped: if clamped { vec![0] } else { vec![] } }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beam::model::{assemble, geometric_stiffness, NodalLoad};

    fn section() -> SectionStiffness {
        SectionStiffness::diagonal(2e9, 3e8, 2.5e8, 4e6, 8e6, 6e7)
    }

    fn unit_mass() -> SectionMass {
        SectionMass { mass_per_length: 10.0, ..Default::default() }
    }

    #[test]
    fn zero_load_gives_zero_displacement() {
        let m = prismatic_beam(2.0, 4, section(), unit_mass(), true);
        let s = assemble(&m, &[]).unwrap();
        for mode in [SolveMode::Linear, SolveMode::Nonlinear] {
            let p = static_solve(&s, &s.f, mode, &NewtonOptions::default()).unwrap();
            assert_eq!(p.amax(), 0.0);
        }
    }

    #[test]
    fn cantilever_tip_force_and_torque() {
        let (l, f, t) = (3.0, 1200.0, 250.0);
        let c = section();
        for n_el in [1, 3, 8] {
            let m = prismatic_beam(l, n_el, c, unit_mass(), true);
            let loads = [NodalLoad { node: n_el, force: Vector3::new(0.0, 0.0, f), moment: Vector3::new(0.0, t, 0.0) }];
            let s = assemble(&m, &loads).unwrap();
            let p = static_solve(&s, &s.f, SolveMode::Linear, &NewtonOptions::default()).unwrap();
            // local frame: e1 = y, e2 = -x, e3 = z
            let w = f * l.powi(3) / (3.0 * c.ei2()) + f * l / c.ga3();
            let twist = t * l / c.gj();
            let tip = 6 * n_el;
            assert!((p[tip + 2] - w).abs() < 1e-10 * w, "n_el={n_el}");
            assert!((p[tip + 4] - twist).abs() < 1e-10 * twist);
        }
    }

    #[test]
    fn moderate_transverse_deflection_does_not_soften() {
        // linear tip deflection of 10% of the length
        let c = section();
        let l = 3.0;
        let f = 0.1 * l * 3.0 * c.ei2() / l.powi(3);
        let m = prismatic_beam(l, 16, c, unit_mass(), true);
        let loads = [NodalLoad { node: 16, force: Vector3::new(0.0, 0.0, f), moment: Vector3::zeros() }];
        let s = assemble(&m, &loads).unwrap();
        let lin = static_solve(&s, &s.f, SolveMode::Linear, &NewtonOptions::default()).unwrap();
        let nl = static_solve(&s, &s.f, SolveMode::Nonlinear, &NewtonOptions::default()).unwrap();
        let (wl, wn) = (lin[16 * 6 + 2], nl[16 * 6 + 2]);
        // the free end lets the membrane strain relax, leaving bending linear
        assert!((wn - wl).abs() < 1e-6 * wl, "linear {wl}, nonlinear {wn}");
        assert!(s.reduce(&s.tangent(&nl)).cholesky().is_some());
    }

    #[test]
    fn newton_converges_and_stiffens_under_tension() {
        let m = prismatic_beam(3.0, 6, section(), unit_mass(), true);
        let loads = [NodalLoad { node: 6, force: Vector3::new(0.0, 4e6, 2e4), moment: Vector3::zeros() }];
        let s = assemble(&m, &loads).unwrap();
        let lin = static_solve(&s, &s.f, SolveMode::Linear, &NewtonOptions::default()).unwrap();
        let nl = static_solve(&s, &s.f, SolveMode::Nonlinear, &NewtonOptions::default()).unwrap();
        let r = s.reduce_vector(&(&s.f - s.internal_force(&nl)));
        assert!(r.norm() <= 1e-8 * s.f.norm());
        assert!(nl[6 * 6 + 2] < lin[6 * 6 + 2]);
        let kt = s.tangent(&nl);
        assert!(crate::linalg::asymmetry(&kt) < 1e-12);
    }

    #[test]
    fn tangent_matches_finite_differences() {
        let m = prismatic_beam(2.0, 2, section(), unit_mass(), true);
        let s = assemble(&m, &[]).unwrap();
        let p = DVector::from_fn(s.n_dof(), |i, _| if i < 6 { 0.0 } else { 1e-3 * ((i as f64) * 0.7).sin() });
        let kt = s.tangent(&p);
        let h = 1e-7;
        for j in 6..s.n_dof() {
            let mut pp = p.clone();
            pp[j] += h;
            let mut pm = p.clone();
            pm[j] -= h;
            let col = (s.internal_force(&pp) - s.internal_force(&pm)) / (2.0 * h);
            assert!((col - kt.column(j)).amax() < 1e-6 * kt.amax());
        }
    }

    #[test]
    fn modes_are_mass_orthonormal_and_free_free_has_six_rigid() {
        let m = prismatic_beam(2.0, 6, section(), SectionMass { mass_per_length: 10.0, centroid: [0.01, 0.0], i22: 0.1, i33: 0.3, i23: 0.0 }, false);
        let s = assemble(&m, &[]).unwrap();
        let modes = modal(&s, 10).unwrap();
        let orth = modes.shapes.transpose() * &s.m * &modes.shapes;
        assert!((orth - DMatrix::identity(10, 10)).amax() < 1e-10);
        let rigid = modes.omega.iter().filter(|w| **w < 1.0).count();
        assert_eq!(rigid, 6);
        assert!(modes.omega[6] > 100.0);
        assert!(modal(&s, 10_000).is_err());
    }

    #[test]
    fn euler_column_buckling() {
        let c = section();
        let l = 4.0;
        let m = prismatic_beam(l, 64, c, unit_mass(), true);
        let p_ref = 1000.0;
        let loads = [NodalLoad { node: 64, force: Vector3::new(0.0, -p_ref, 0.0), moment: Vector3::zeros() }];
        let s = assemble(&m, &loads).unwrap();
        let p = static_solve(&s, &s.f, SolveMode::Linear, &NewtonOptions::default()).unwrap();
        let kg = geometric_stiffness(&s, &p);
        let b = buckling(&s, &kg, 3).unwrap();
        let euler = std::f64::consts::PI.powi(2) * c.ei2().min(c.ei3()) / (4.0 * l * l);
        assert!(((b.factors[0] * p_ref - euler) / euler).abs() < 0.02);
        // doubling the load halves the factor
        let b2 = buckling(&s, &(kg * 2.0), 1).unwrap();
        assert!((b2.factors[0] * 2.0 - b.factors[0]).abs() < 1e-9 * b.factors[0]);
    }

    #[test]
    fn tension_has_no_buckling_factor() {
        let m = prismatic_beam(4.0, 8, section(), unit_mass(), true);
        let loads = [NodalLoad { node: 8, force: Vector3::new(0.0, 1000.0, 0.0), moment: Vector3::zeros() }];
        let s = assemble(&m, &loads).unwrap();
        let p = static_solve(&s, &s.f, SolveMode::Linear, &NewtonOptions::default()).unwrap();
        let b = buckling(&s, &geometric_stiffness(&s, &p), 8).unwrap();
        assert!(b.factors.is_empty());
    }
}
