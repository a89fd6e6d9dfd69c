//! Two-degree-of-freedom pitch-plunge section with quasi-steady lift.
//!
//! Coordinates are plunge `h` (up) and pitch `α` (nose up) at the elastic
//! axis. Lift acts at the aerodynamic centre, a distance `e·c` ahead of the
//! elastic axis, and sees the effective incidence `α − ḣ/V`.

use nalgebra::{DMatrix, DVector};

use crate::aero::statespace::{state_space, StateSpace};
use crate::aeroelastic::stability::{divergence_eig, rayleigh_damping};
use crate::linalg::C64;
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TypicalSection {
    pub mass: f64,
    /// First mass moment about the elastic axis, positive with the centre of gravity aft.
    pub static_moment: f64,
    pub inertia: f64,
    pub k_h: f64,
    pub k_alpha: f64,
    pub chord: f64,
    /// Aerodynamic-centre offset ahead of the elastic axis, as a chord fraction.
    pub e: f64,
    pub area: f64,
    pub cl_alpha: f64,
    pub density: f64,
    /// Rayleigh damping ratio on both natural frequencies.
    pub zeta: f64,
}

impl TypicalSection {
    /// A section whose flutter speed lies well below its divergence speed.
    pub fn example() -> Self {
        Self {
            mass: 60.0,
            static_moment: 9.0,
            inertia: 6.0,
            k_h: 6.0e4,
            k_alpha: 4.0e4,
            chord: 1.5,
            e: 0.15,
            area: 1.5,
            cl_alpha: 2.0 * std::f64::consts::PI,
            density: 1.225,
            zeta: 0.005,
        }
    }

    pub fn mass_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[self.mass, -self.static_moment, -self.static_moment, self.inertia])
    }

    pub fn stiffness_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_vec(vec![self.k_h, self.k_alpha]))
    }

    /// `(K_a, C_a)` at speed `v`: derivatives of `[L, M_ea]` with respect to `[h, α]` and `[ḣ, α̇]`.
    pub fn aero_matrices(&self, v: f64) -> (DMatrix<f64>, DMatrix<f64>) {
        let q = 0.5 * self.density * v * v;
        let la = q * self.area * self.cl_alpha;
        let arm = self.e * self.chord;
        let ka = DMatrix::from_row_slice(2, 2, &[0.0, la, 0.0, la * arm]);
        let ca = if v > 0.0 {
            DMatrix::from_row_slice(2, 2, &[-la / v, 0.0, -la * arm / v, 0.0])
        } else {
            DMatrix::zeros(2, 2)
        };
        (ka, ca)
    }

    pub fn natural_frequencies(&self) -> [f64; 2] {
        let e = crate::linalg::symmetric_generalized_eigen(&self.stiffness_matrix(), &self.mass_matrix()).expect("positive definite section");
        [e.values[0].sqrt(), e.values[1].sqrt()]
    }

    pub fn state_space(&self, v: f64) -> Result<StateSpace> {
        let m = self.mass_matrix();
        let k = self.stiffness_matrix();
        let w = self.natural_frequencies();
        let c = rayleigh_damping(&m, &k, self.zeta, w[0], w[1]);
        let (ka, ca) = self.aero_matrices(v);
        let f_alpha = DVector::from_vec(vec![ka[(0, 1)], ka[(1, 1)]]);
        state_space(&m, &c, &k, &ka, &ca, &f_alpha, None)
    }

    /// Closed-form divergence dynamic pressure `K_α / (e c S C_Lα)`.
    pub fn divergence_pressure_closed_form(&self) -> f64 {
        self.k_alpha / (self.e * self.chord * self.area * self.cl_alpha)
    }

    /// Divergence dynamic pressure from the generalized eigenproblem at a reference speed.
    pub fn divergence_pressure(&self, v_ref: f64) -> Result<Option<f64>> {
        let (ka, _) = self.aero_matrices(v_ref);
        let lam = divergence_eig(&ka, &DMatrix::zeros(2, 2), &self.stiffness_matrix())?;
        let q_ref = 0.5 * self.density * v_ref * v_ref;
        Ok(crate::aeroelastic::stability::critical_divergence(&lam).map(|l| l * q_ref))
    }

    pub fn eigenvalues(&self, v: f64) -> Result<Vec<C64>> {
        crate::linalg::general_eigenvalues(&self.state_space(v)?.a)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aeroelastic::stability::flutter_speed;

    #[test]
    fn divergence_matches_closed_form() {
        let s = TypicalSection::example();
        let q = s.divergence_pressure(100.0).unwrap().unwrap();
        let exact = s.divergence_pressure_closed_form();
        assert!(((q - exact) / exact).abs() < 1e-10);
    }

    #[test]
    fn still_air_is_neutrally_damped_structure() {
        let s = TypicalSection { zeta: 0.0, ..TypicalSection::example() };
        let ev = s.eigenvalues(0.0).unwrap();
        let w = s.natural_frequencies();
        for z in ev {
            assert!(z.re.abs() < 1e-9);
            assert!(w.iter().any(|wi| (z.im.abs() - wi).abs() < 1e-8));
        }
    }

    #[test]
    fn flutter_occurs_before_divergence() {
        let s = TypicalSection::example();
        let v_div = (2.0 * s.divergence_pressure_closed_form() / s.density).sqrt();
        let vf = flutter_speed(|v| Ok(s.state_space(v)?.a), 1.0, v_div, 40, 1e-10).unwrap().unwrap();
        assert!(vf < 0.95 * v_div, "flutter {vf}, divergence {v_div}");
        let below = s.eigenvalues(0.98 * vf).unwrap();
        assert!(below.iter().all(|z| z.re < 0.0));
    }
}
