//! Composite laminate core: lamination parameters, classical laminate
//! stiffness, feasibility of lamination parameters, Tsai-Wu strength and
//! critical-value selection.
//!
//! Laminates are symmetric, so the membrane-bending coupling block `B`
//! vanishes identically. Lamination parameters are ordered
//! `(cos 2θ, cos 4θ, sin 2θ, sin 4θ)` for both the membrane (`A`) and
//! bending (`D`) sets.

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use crate::{Error, Result, SENTINEL};

/// Orthotropic ply properties. Compressive strengths are positive magnitudes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
pub struct MaterialProperties {
    pub e1: f64,
    pub e2: f64,
    pub g12: f64,
    pub nu12: f64,
    pub rho: f64,
    pub xt: f64,
    pub xc: f64,
    pub yt: f64,
    pub yc: f64,
    pub s: f64,
    pub ply_thickness: f64,
}

impl MaterialProperties {
    /// Intermediate-modulus carbon/epoxy tape.
    pub fn carbon_epoxy() -> Self {
        Self {
            e1: 161.0e9,
            e2: 11.38e9,
            g12: 5.17e9,
            nu12: 0.32,
            rho: 1570.0,
            xt: 2326.0e6,
            xc: 1200.0e6,
            yt: 62.3e6,
            yc: 199.8e6,
            s: 92.3e6,
            ply_thickness: 0.131e-3,
        }
    }

    /// Isotropic material expressed through the orthotropic fields.
    pub fn isotropic(e: f64, nu: f64, rho: f64, strength: f64) -> Self {
        Self {
            e1: e,
            e2: e,
            g12: e / (2.0 * (1.0 + nu)),
            nu12: nu,
            rho,
            xt: strength,
            xc: strength,
            yt: strength,
            yc: strength,
            s: strength / 3f64.sqrt(),
            ply_thickness: 1e-4,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("e1", self.e1),
            ("e2", self.e2),
            ("g12", self.g12),
            ("rho", self.rho),
            ("xt", self.xt),
            ("xc", self.xc),
            ("yt", self.yt),
            ("yc", self.yc),
            ("s", self.s),
            ("ply_thickness", self.ply_thickness),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("material {name} must be positive, got {v}")));
            }
        }
        let nu21 = self.nu12 * self.e2 / self.e1;
        if !(self.nu12 > 0.0 && self.nu12 < 0.5 && self.nu12 * nu21 < 1.0) {
            return Err(Error::invalid(format!("material nu12 = {} out of range", self.nu12)));
        }
        Ok(())
    }

    pub fn nu21(&self) -> f64 {
        self.nu12 * self.e2 / self.e1
    }

    /// Plane-stress reduced stiffnesses `(Q11, Q22, Q12, Q66)`.
    pub fn reduced_stiffness(&self) -> (f64, f64, f64, f64) {
        let den = 1.0 - self.nu12 * self.nu21();
        let q11 = self.e1 / den;
        let q22 = self.e2 / den;
        let q12 = self.nu12 * self.e2 / den;
        (q11, q22, q12, self.g12)
    }

    /// Transformed reduced stiffness of a ply at angle `theta` (rad).
    pub fn q_bar(&self, theta: f64) -> Matrix3<f64> {
        let u = self.invariants();
        let (c2, c4, s2, s4) = ((2.0 * theta).cos(), (4.0 * theta).cos(), (2.0 * theta).sin(), (4.0 * theta).sin());
        invariant_combination(&u, [c2, c4, s2, s4])
    }

    /// Stiffness invariants `U1..U5`.
    pub fn invariants(&self) -> [f64; 5] {
        let (q11, q22, q12, q66) = self.reduced_stiffness();
        [
            (3.0 * q11 + 3.0 * q22 + 2.0 * q12 + 4.0 * q66) / 8.0,
            (q11 - q22) / 2.0,
            (q11 + q22 - 2.0 * q12 - 4.0 * q66) / 8.0,
            (q11 + q22 + 6.0 * q12 - 4.0 * q66) / 8.0,
            (q11 + q22 - 2.0 * q12 + 4.0 * q66) / 8.0,
        ]
    }
}

fn invariant_combination(u: &[f64; 5], xi: [f64; 4]) -> Matrix3<f64> {
    let [u1, u2, u3, u4, u5] = *u;
    let g0 = Matrix3::new(u1, u4, 0.0, u4, u1, 0.0, 0.0, 0.0, u5);
    let g1 = Matrix3::new(u2, 0.0, 0.0, 0.0, -u2, 0.0, 0.0, 0.0, 0.0);
    let g2 = Matrix3::new(u3, -u3, 0.0, -u3, u3, 0.0, 0.0, 0.0, -u3);
    let g3 = Matrix3::new(0.0, 0.0, u2 / 2.0, 0.0, 0.0, u2 / 2.0, u2 / 2.0, u2 / 2.0, 0.0);
    let g4 = Matrix3::new(0.0, 0.0, u3, 0.0, 0.0, -u3, u3, -u3, 0.0);
    g0 + g1 * xi[0] + g2 * xi[1] + g3 * xi[2] + g4 * xi[3]
}

/// Membrane (`xi_a`) and bending (`xi_d`) lamination parameters.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LaminationParameters {
    pub xi_a: [f64; 4],
    pub xi_d: [f64; 4],
}

impl LaminationParameters {
    pub fn quasi_isotropic() -> Self {
        Self::default()
    }

    pub fn from_slice(v: &[f64]) -> Self {
        assert!(v.len() >= 8, "lamination parameter slice needs 8 entries");
        Self {
            xi_a: [v[0], v[1], v[2], v[3]],
            xi_d: [v[4], v[5], v[6], v[7]],
        }
    }

    pub fn to_array(&self) -> [f64; 8] {
        let (a, d) = (self.xi_a, self.xi_d);
        [a[0], a[1], a[2], a[3], d[0], d[1], d[2], d[3]]
    }

    pub fn in_box(&self) -> bool {
        self.to_array().iter().all(|v| (-1.0..=1.0).contains(v))
    }
}

/// A panel's laminate: lamination parameters plus total thickness (m).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PanelDesign {
    pub lp: LaminationParameters,
    pub thickness: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ABDMatrices {
    pub a: Matrix3<f64>,
    pub b: Matrix3<f64>,
    pub d: Matrix3<f64>,
}

impl ABDMatrices {
    /// Membrane stiffness condensed for a free transverse resultant
    /// (`N_22 = 0`): returns `[[a11, a16], [a16, a66]]` in N/m.
    pub fn condensed_membrane(&self) -> [[f64; 2]; 2] {
        let a = &self.a;
        let a11 = a[(0, 0)] - a[(0, 1)] * a[(1, 0)] / a[(1, 1)];
        let a16 = a[(0, 2)] - a[(0, 1)] * a[(1, 2)] / a[(1, 1)];
        let a66 = a[(2, 2)] - a[(2, 1)] * a[(1, 2)] / a[(1, 1)];
        [[a11, a16], [a16, a66]]
    }
}

/// Lamination parameters of a symmetric laminate from its half-stack,
/// listed from the mid-plane outward, all plies of equal thickness.
pub fn lp_from_stack(half_stack: &[f64]) -> Result<LaminationParameters> {
    if half_stack.is_empty() {
        return Err(Error::invalid("stacking sequence is empty"));
    }
    let n = half_stack.len() as f64;
    let mut lp = LaminationParameters::default();
    for (k, &theta) in half_stack.iter().enumerate() {
        let f = [(2.0 * theta).cos(), (4.0 * theta).cos(), (2.0 * theta).sin(), (4.0 * theta).sin()];
        let k = k as f64;
        let wa = 1.0 / n;
        let wd = ((k + 1.0).powi(3) - k.powi(3)) / n.powi(3);
        for i in 0..4 {
            lp.xi_a[i] += wa * f[i];
            lp.xi_d[i] += wd * f[i];
        }
    }
    Ok(lp)
}

/// Classical laminate stiffness from lamination parameters.
pub fn abd_from_lp(design: &PanelDesign, material: &MaterialProperties) -> Result<ABDMatrices> {
    let t = design.thickness;
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::invalid(format!("panel thickness must be positive, got {t}")));
    }
    if !design.lp.in_box() {
        return Err(Error::invalid("lamination parameters outside [-1, 1]"));
    }
    let u = material.invariants();
    Ok(ABDMatrices {
        a: invariant_combination(&u, design.lp.xi_a) * t,
        b: Matrix3::zeros(),
        d: invariant_combination(&u, design.lp.xi_d) * (t.powi(3) / 12.0),
    })
}

/// Derivative of `A/t` (or `12 D/t³`) with respect to lamination parameter `i` (0..4).
pub fn stiffness_lp_derivative(material: &MaterialProperties, i: usize) -> Matrix3<f64> {
    let u = material.invariants();
    let mut xi = [0.0; 4];
    xi[i] = 1.0;
    invariant_combination(&u, xi) - invariant_combination(&u, [0.0; 4])
}

fn hammer(x: &[f64; 4]) -> f64 {
    2.0 * x[0] * x[0] * (1.0 - x[1]) + 2.0 * x[2] * x[2] * (1.0 + x[1]) + x[1] * x[1] + x[3] * x[3]
        - 4.0 * x[0] * x[2] * x[3]
        - 1.0
}

fn hammer_grad(x: &[f64; 4]) -> [f64; 4] {
    [
        4.0 * x[0] * (1.0 - x[1]) - 4.0 * x[2] * x[3],
        -2.0 * x[0] * x[0] + 2.0 * x[2] * x[2] + 2.0 * x[1],
        4.0 * x[2] * (1.0 + x[1]) - 4.0 * x[0] * x[3],
        2.0 * x[3] - 4.0 * x[0] * x[2],
    ]
}

/// Six smooth feasibility residuals of a lamination-parameter set; all are
/// `<= 0` for parameters realizable by a symmetric stack.
///
/// 1. membrane hull of `(cos2θ, cos4θ, sin2θ, sin4θ)`,
/// 2. membrane `ξ1² + ξ3² <= 1`,
/// 3. bending hull,
/// 4. bending `ξ1² + ξ3² <= 1`,
/// 5. membrane/bending coupling in `ξ1`,
/// 6. membrane/bending coupling in `ξ3`.
pub fn feasibility_residuals(lp: &LaminationParameters) -> [f64; 6] {
    let (a, d) = (&lp.xi_a, &lp.xi_d);
    [
        hammer(a),
        a[0] * a[0] + a[2] * a[2] - 1.0,
        hammer(d),
        d[0] * d[0] + d[2] * d[2] - 1.0,
        5.0 * (a[0] - d[0]).powi(2) - 2.0 * (1.0 + a[1] - 2.0 * a[0] * a[0]),
        5.0 * (a[2] - d[2]).powi(2) - 2.0 * (1.0 - a[1] - 2.0 * a[2] * a[2]),
    ]
}

/// Jacobian of [`feasibility_residuals`] with respect to `(xi_a, xi_d)`.
pub fn feasibility_jacobian(lp: &LaminationParameters) -> [[f64; 8]; 6] {
    let (a, d) = (&lp.xi_a, &lp.xi_d);
    let mut j = [[0.0; 8]; 6];
    let ha = hammer_grad(a);
    let hd = hammer_grad(d);
    j[0][..4].copy_from_slice(&ha);
    j[1][0] = 2.0 * a[0];
    j[1][2] = 2.0 * a[2];
    j[2][4..].copy_from_slice(&hd);
    j[3][4] = 2.0 * d[0];
    j[3][6] = 2.0 * d[2];
    j[4][0] = 10.0 * (a[0] - d[0]) + 8.0 * a[0];
    j[4][1] = -2.0;
    j[4][4] = -10.0 * (a[0] - d[0]);
    j[5][2] = 10.0 * (a[2] - d[2]) + 8.0 * a[2];
    j[5][1] = 2.0;
    j[5][6] = -10.0 * (a[2] - d[2]);
    j
}

/// Tsai-Wu polynomial coefficients `(F1, F2, F11, F22, F66, F12)`.
pub fn tsai_wu_coefficients(m: &MaterialProperties) -> [f64; 6] {
    let f11 = 1.0 / (m.xt * m.xc);
    let f22 = 1.0 / (m.yt * m.yc);
    [
        1.0 / m.xt - 1.0 / m.xc,
        1.0 / m.yt - 1.0 / m.yc,
        f11,
        f22,
        1.0 / (m.s * m.s),
        -0.5 * (f11 * f22).sqrt(),
    ]
}

/// Tsai-Wu failure index for in-plane stresses `(σ1, σ2, τ12)`; `w < 1`
/// predicts no failure.
pub fn tsai_wu_factor(stress: [f64; 3], material: &MaterialProperties) -> f64 {
    let [f1, f2, f11, f22, f66, f12] = tsai_wu_coefficients(material);
    let [s1, s2, t] = stress;
    f1 * s1 + f2 * s2 + f11 * s1 * s1 + f22 * s2 * s2 + f66 * t * t + 2.0 * f12 * s1 * s2
}

/// Gradient of [`tsai_wu_factor`] with respect to the stresses.
pub fn tsai_wu_gradient(stress: [f64; 3], material: &MaterialProperties) -> [f64; 3] {
    let [f1, f2, f11, f22, f66, f12] = tsai_wu_coefficients(material);
    let [s1, s2, t] = stress;
    [
        f1 + 2.0 * f11 * s1 + 2.0 * f12 * s2,
        f2 + 2.0 * f22 * s2 + 2.0 * f12 * s1,
        2.0 * f66 * t,
    ]
}

/// Ordering that defines which entries are most critical.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Criticality {
    /// Largest values first (Tsai-Wu index, real part of flutter roots).
    Largest,
    /// Smallest strictly positive values first (buckling factors).
    SmallestPositive,
}

/// Indices of the `k` most critical entries, most critical first. Ties are
/// broken by index. Fewer than `k` indices are returned when fewer
/// candidates qualify.
pub fn select_critical(values: &[f64], k: usize, order: Criticality) -> Result<Vec<usize>> {
    if values.is_empty() {
        return Err(Error::invalid("no candidate values to select from"));
    }
    if k == 0 {
        return Err(Error::invalid("critical count must be at least 1"));
    }
    let mut idx: Vec<usize> = match order {
        Criticality::Largest => (0..values.len()).collect(),
        Criticality::SmallestPositive => (0..values.len()).filter(|&i| values[i] > 0.0).collect(),
    };
    match order {
        Criticality::Largest => idx.sort_by(|&i, &j| values[j].total_cmp(&values[i]).then(i.cmp(&j))),
        Criticality::SmallestPositive => {
            idx.sort_by(|&i, &j| values[i].total_cmp(&values[j]).then(i.cmp(&j)))
        }
    }
    idx.truncate(k);
    Ok(idx)
}

/// Selected critical values padded with [`SENTINEL`] to exactly `k` entries.
pub fn critical_values(values: &[f64], k: usize, order: Criticality) -> Result<Vec<f64>> {
    let mut out: Vec<f64> = if values.is_empty() {
        Vec::new()
    } else {
        select_critical(values, k, order)?.into_iter().map(|i| values[i]).collect()
    };
    out.resize(k, SENTINEL);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_4;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    #[test]
    fn unidirectional_and_angle_ply_parameters() {
        let lp = lp_from_stack(&[0.0; 6]).unwrap();
        for (v, e) in lp.xi_a.iter().chain(&lp.xi_d).zip([1.0, 1.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0]) {
            assert!(close(*v, e, 1e-15));
        }
        for (v, e) in lp.xi_d.iter().zip([1.0, 1.0, 0.0, 0.0]) {
            assert!(close(*v, e, 1e-15));
        }
        let lp = lp_from_stack(&[FRAC_PI_4; 3]).unwrap();
        for (v, e) in lp.xi_a.iter().zip([0.0, -1.0, 1.0, 0.0]) {
            assert!((v - e).abs() < 1e-15);
        }
        let lp = lp_from_stack(&[0.0, FRAC_PI_4, -FRAC_PI_4, 2.0 * FRAC_PI_4]).unwrap();
        assert!(lp.xi_a.iter().all(|v| v.abs() < 1e-15));
        assert!(lp_from_stack(&[]).is_err());
    }

    #[test]
    fn stiffness_scaling_and_isotropy() {
        let m = MaterialProperties::carbon_epoxy();
        let ud = PanelDesign { lp: lp_from_stack(&[0.0]).unwrap(), thickness: 2e-3 };
        let abd = abd_from_lp(&ud, &m).unwrap();
        let (q11, ..) = m.reduced_stiffness();
        assert!(close(abd.a[(0, 0)], 2e-3 * q11, 1e-12));

        let qi = PanelDesign { lp: LaminationParameters::quasi_isotropic(), thickness: 2e-3 };
        let abd = abd_from_lp(&qi, &m).unwrap();
        assert!(close(abd.a[(0, 0)], abd.a[(1, 1)], 1e-14));
        assert_eq!(abd.a[(0, 2)], 0.0);
        assert_eq!(abd.a[(1, 2)], 0.0);

        let thick = PanelDesign { thickness: 4e-3, ..qi };
        let abd2 = abd_from_lp(&thick, &m).unwrap();
        assert!(((abd2.a - abd.a * 2.0).amax()) < 1e-6 * abd.a.amax());
        assert!(((abd2.d - abd.d * 8.0).amax()) < 1e-9 * abd.d.amax());
    }

    #[test]
    fn stiffness_rejects_bad_input() {
        let m = MaterialProperties::carbon_epoxy();
        let mut p = PanelDesign { lp: LaminationParameters::default(), thickness: 0.0 };
        assert!(abd_from_lp(&p, &m).is_err());
        p.thickness = 1e-3;
        p.lp.xi_a[0] = 1.2;
        assert!(abd_from_lp(&p, &m).is_err());
    }

    #[test]
    fn feasibility_origin_interior_and_unidirectional_boundary() {
        let r = feasibility_residuals(&LaminationParameters::default());
        assert!(r.iter().all(|&g| g < 0.0));
        let r = feasibility_residuals(&lp_from_stack(&[0.0; 4]).unwrap());
        assert!(r.iter().all(|&g| g <= 1e-12));
        assert!(r.iter().any(|&g| g.abs() < 1e-12));
    }

    #[test]
    fn feasibility_jacobian_matches_finite_differences() {
        let lp = LaminationParameters {
            xi_a: [0.3, -0.2, 0.1, 0.05],
            xi_d: [0.5, 0.1, -0.2, 0.3],
        };
        let j = feasibility_jacobian(&lp);
        let x0 = lp.to_array();
        for k in 0..8 {
            let h = 1e-6;
            let mut xp = x0;
            let mut xm = x0;
            xp[k] += h;
            xm[k] -= h;
            let gp = feasibility_residuals(&LaminationParameters::from_slice(&xp));
            let gm = feasibility_residuals(&LaminationParameters::from_slice(&xm));
            for i in 0..6 {
                let fd = (gp[i] - gm[i]) / (2.0 * h);
                assert!((fd - j[i][k]).abs() < 1e-8, "g{i} x{k}: {fd} vs {}", j[i][k]);
            }
        }
    }

    #[test]
    fn tsai_wu_values() {
        let m = MaterialProperties::carbon_epoxy();
        assert_eq!(tsai_wu_factor([0.0; 3], &m), 0.0);
        assert!(close(tsai_wu_factor([m.xt, 0.0, 0.0], &m), 1.0, 1e-14));
        assert!(close(tsai_wu_factor([-m.xc, 0.0, 0.0], &m), 1.0, 1e-14));
        assert!(close(tsai_wu_factor([0.0, m.yt, 0.0], &m), 1.0, 1e-14));
        // hand substitution at (Xt/2, Yt/2, 0)
        let (s1, s2) = (m.xt / 2.0, m.yt / 2.0);
        let f1 = 1.0 / m.xt - 1.0 / m.xc;
        let f2 = 1.0 / m.yt - 1.0 / m.yc;
        let f11 = 1.0 / (m.xt * m.xc);
        let f22 = 1.0 / (m.yt * m.yc);
        let f12 = -0.5 * (f11 * f22).sqrt();
        let hand = f1 * s1 + f2 * s2 + f11 * s1 * s1 + f22 * s2 * s2 + 2.0 * f12 * s1 * s2;
        assert!(close(tsai_wu_factor([s1, s2, 0.0], &m), hand, 1e-14));
    }

    #[test]
    fn select_critical_orders() {
        let v = [0.1, 0.9, 0.5];
        assert_eq!(select_critical(&v, 2, Criticality::Largest).unwrap(), vec![1, 2]);
        assert_eq!(select_critical(&v, 3, Criticality::Largest).unwrap(), vec![1, 2, 0]);
        let b = [3.0, -1.0, 0.5, 2.0];
        assert_eq!(select_critical(&b, 8, Criticality::SmallestPositive).unwrap(), vec![2, 3, 0]);
        let padded = critical_values(&b, 5, Criticality::SmallestPositive).unwrap();
        assert_eq!(padded, vec![0.5, 2.0, 3.0, SENTINEL, SENTINEL]);
        assert!(select_critical(&[], 1, Criticality::Largest).is_err());
        assert!(select_critical(&v, 0, Criticality::Largest).is_err());
    }
}
