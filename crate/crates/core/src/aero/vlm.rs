//! Steady horseshoe vortex-lattice solver with small-angle boundary
//! conditions, a mirror image for half-span models and Prandtl-Glauert scaling.

use nalgebra::{DMatrix, DVector, Vector3};
use serde::{Deserialize, Serialize};

use crate::aero::lattice::Lattice;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowConditions {
    /// Free-stream speed (m/s).
    pub speed: f64,
    /// Air density (kg/m³).
    pub density: f64,
    pub mach: f64,
    /// Angle of attack (rad).
    pub alpha: f64,
}

impl FlowConditions {
    pub fn validate(&self) -> Result<()> {
        if !(self.speed >= 0.0 && self.density > 0.0 && (0.0..1.0).contains(&self.mach)) {
            return Err(Error::invalid("flow needs V >= 0, density > 0 and 0 <= Mach < 1"));
        }
        Ok(())
    }

    pub fn dynamic_pressure(&self) -> f64 {
        0.5 * self.density * self.speed * self.speed
    }

    /// Prandtl-Glauert factor `√(1 − M²)`.
    pub fn beta(&self) -> f64 {
        (1.0 - self.mach * self.mach).sqrt()
    }
}

/// Image treatment across the `y = 0` plane.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Symmetry {
    None,
    /// Mirror image with equal circulation (symmetric flight).
    Symmetric,
    /// Mirror image with opposite circulation (rolling).
    Antisymmetric,
}

const FOUR_PI_INV: f64 = 0.25 / std::f64::consts::PI;

/// Velocity induced at `p` by a unit-strength straight filament from `a` to `b`.
pub fn segment_velocity(p: &Vector3<f64>, a: &Vector3<f64>, b: &Vector3<f64>) -> Vector3<f64> {
    let r1 = p - a;
    let r2 = p - b;
    let cross = r1.cross(&r2);
    let c2 = cross.norm_squared();
    let (n1, n2) = (r1.norm(), r2.norm());
    let r0 = b - a;
    if c2 <= 1e-20 * r0.norm_squared() * (n1 * n1 + n2 * n2) || n1 == 0.0 || n2 == 0.0 {
        return Vector3::zeros();
    }
    cross * (FOUR_PI_INV * r0.dot(&(r1 / n1 - r2 / n2)) / c2)
}

/// Velocity at `p` from a unit filament starting at `a` and running to
/// infinity along unit direction `d`.
pub fn semi_infinite_velocity(p: &Vector3<f64>, a: &Vector3<f64>, d: &Vector3<f64>) -> Vector3<f64> {
    let r = p - a;
    let dr = d.cross(&r);
    let c2 = dr.norm_squared();
    let n = r.norm();
    if c2 <= 1e-20 * n * n || n == 0.0 {
        return Vector3::zeros();
    }
    dr * (FOUR_PI_INV * (1.0 + d.dot(&r) / n) / c2)
}

/// Unit horseshoe: trailing leg from downstream infinity to `a`, bound
/// segment `a → b`, trailing leg `b` to downstream infinity.
pub fn horseshoe_velocity(p: &Vector3<f64>, a: &Vector3<f64>, b: &Vector3<f64>) -> Vector3<f64> {
    let d = Vector3::x();
    segment_velocity(p, a, b) + semi_infinite_velocity(p, b, &d) - semi_infinite_velocity(p, a, &d)
}

fn mirror(v: &Vector3<f64>) -> Vector3<f64> {
    Vector3::new(v.x, -v.y, v.z)
}

/// Normal velocity at each control point per unit circulation of each horseshoe.
pub fn influence_matrix(lattice: &Lattice, symmetry: Symmetry) -> DMatrix<f64> {
    let n = lattice.len();
    DMatrix::from_fn(n, n, |i, j| {
        let pi = &lattice.panels[i];
        let pj = &lattice.panels[j];
        let mut v = horseshoe_velocity(&pi.control, &pj.bound[0], &pj.bound[1]);
        let image = horseshoe_velocity(&pi.control, &mirror(&pj.bound[1]), &mirror(&pj.bound[0]));
        match symmetry {
            Symmetry::None => {}
            Symmetry::Symmetric => v += image,
            Symmetry::Antisymmetric => v -= image,
        }
        v.dot(&pi.normal)
    })
}

/// Inverse influence matrix of a lattice, ready for repeated solves.
#[derive(Debug, Clone)]
pub struct AeroSolver {
    pub lattice: Lattice,
    pub symmetry: Symmetry,
    inverse: DMatrix<f64>,
}

impl AeroSolver {
    pub fn new(lattice: Lattice, symmetry: Symmetry) -> Result<Self> {
        let aic = influence_matrix(&lattice, symmetry);
        let inverse = aic
            .try_inverse()
            .ok_or_else(|| Error::Singular("vortex-lattice influence matrix is singular".into()))?;
        if !inverse.iter().all(|v| v.is_finite()) {
            return Err(Error::Singular("vortex-lattice influence matrix is singular".into()));
        }
        Ok(Self { lattice, symmetry, inverse })
    }

    /// Circulation per unit normal wash, including the compressibility factor.
    pub fn circulation_operator(&self, flow: &FlowConditions) -> DMatrix<f64> {
        &self.inverse / flow.beta()
    }

    /// Circulations for a prescribed normal wash (m/s) at the control points.
    pub fn solve_normalwash(&self, flow: &FlowConditions, wash: &DVector<f64>) -> DVector<f64> {
        (&self.inverse * wash) / flow.beta()
    }

    /// Vertical force per unit circulation for each panel, `ρ V Δy`.
    pub fn force_per_circulation(&self, flow: &FlowConditions) -> DVector<f64> {
        DVector::from_iterator(self.lattice.len(), self.lattice.panels.iter().map(|p| flow.density * flow.speed * p.span()))
    }
}

/// Result of a steady solve.
#[derive(Debug, Clone)]
pub struct SteadySolution {
    pub gamma: DVector<f64>,
    /// Force on each panel, applied at its bound vortex midpoint.
    pub forces: Vec<Vector3<f64>>,
}

impl SteadySolution {
    pub fn lift(&self) -> f64 {
        self.forces.iter().map(|f| f.z).sum()
    }
}

/// Solves the rigid lattice at the flow angle of attack, plus optional
/// per-panel incidence increments (rad).
pub fn steady_solve(solver: &AeroSolver, flow: &FlowConditions, incidence: Option<&DVector<f64>>) -> Result<SteadySolution> {
    flow.validate()?;
    let n = solver.lattice.len();
    let mut wash = DVector::from_element(n, -flow.speed * flow.alpha);
    if let Some(inc) = incidence {
        if inc.len() != n {
            return Err(Error::invalid("incidence vector length does not match the lattice"));
        }
        wash -= inc * flow.speed;
    }
    let gamma = solver.solve_normalwash(flow, &wash);
    let fpc = solver.force_per_circulation(flow);
    let forces = (0..n).map(|i| Vector3::new(0.0, 0.0, fpc[i] * gamma[i])).collect();
    Ok(SteadySolution { gamma, forces })
}

/// Lift-curve slope (per rad) of a lattice referenced to its planform area,
/// for a symmetric full wing.
pub fn lift_curve_slope(solver: &AeroSolver, flow: &FlowConditions) -> Result<f64> {
    let f = FlowConditions { alpha: 1.0, ..*flow };
    let sol = steady_solve(solver, &f, None)?;
    Ok(sol.lift() / (f.dynamic_pressure() * solver.lattice.area()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aero::lattice::{build_lattice, Planform};

    fn flow(alpha: f64) -> FlowConditions {
        FlowConditions { speed: 50.0, density: 1.2, mach: 0.0, alpha }
    }

    fn slope(ar: f64) -> f64 {
        let chord = 1.0;
        let semi = 0.5 * ar * chord;
        let ny = (4.0 * ar).clamp(20.0, 200.0) as usize;
        let lat = build_lattice(&Planform::single(semi, chord, chord, 0.0), 4, ny).unwrap();
        let s = AeroSolver::new(lat, Symmetry::Symmetric).unwrap();
        lift_curve_slope(&s, &flow(0.0)).unwrap()
    }

    #[test]
    fn zero_alpha_gives_zero_lift() {
        let lat = build_lattice(&Planform::single(5.0, 1.5, 0.8, 0.3), 4, 10).unwrap();
        let s = AeroSolver::new(lat, Symmetry::Symmetric).unwrap();
        let sol = steady_solve(&s, &flow(0.0), None).unwrap();
        assert!(sol.gamma.amax() == 0.0 && sol.lift() == 0.0);
    }

    #[test]
    fn tangency_holds_at_control_points() {
        let lat = build_lattice(&Planform::single(5.0, 1.5, 0.8, 0.3), 4, 10).unwrap();
        let aic = influence_matrix(&lat, Symmetry::Symmetric);
        let s = AeroSolver::new(lat, Symmetry::Symmetric).unwrap();
        let f = flow(0.05);
        let sol = steady_solve(&s, &f, None).unwrap();
        let resid = &aic * &sol.gamma * f.beta() + DVector::from_element(sol.gamma.len(), f.speed * f.alpha);
        assert!(resid.amax() < 1e-10 * f.speed * f.alpha);
    }

    #[test]
    fn high_aspect_ratio_approaches_thin_airfoil_slope() {
        let a = slope(100.0);
        let two_pi = 2.0 * std::f64::consts::PI;
        assert!(((a - two_pi) / two_pi).abs() < 0.05, "slope {a}");
    }

    #[test]
    fn slope_increases_with_aspect_ratio() {
        let s: Vec<f64> = [4.0, 8.0, 20.0, 100.0].iter().map(|&ar| slope(ar)).collect();
        assert!(s.windows(2).all(|w| w[1] > w[0]), "{s:?}");
        // lifting-line estimate for AR 8 as a sanity bound
        let ll = 2.0 * std::f64::consts::PI / (1.0 + 2.0 / 8.0);
        assert!((s[1] - ll).abs() / ll < 0.08);
    }

    #[test]
    fn compressibility_raises_lift() {
        let lat = build_lattice(&Planform::single(5.0, 1.0, 1.0, 0.0), 2, 10).unwrap();
        let s = AeroSolver::new(lat, Symmetry::Symmetric).unwrap();
        let l0 = steady_solve(&s, &flow(0.02), None).unwrap().lift();
        let l1 = steady_solve(&s, &FlowConditions { mach: 0.6, ..flow(0.02) }, None).unwrap().lift();
        assert!((l1 / l0 - 1.25).abs() < 1e-12);
    }

    #[test]
    fn lift_is_linear_in_alpha() {
        let lat = build_lattice(&Planform::single(5.0, 1.0, 0.6, 0.2), 3, 8).unwrap();
        let s = AeroSolver::new(lat, Symmetry::Symmetric).unwrap();
        let l1 = steady_solve(&s, &flow(0.005), None).unwrap().lift();
        let l2 = steady_solve(&s, &flow(0.01), None).unwrap().lift();
        assert!((l2 / (2.0 * l1) - 1.0).abs() < 1e-6);
    }
}
