//! Two-node, 12-DoF beam element matrices in the element frame.
//!
//! Local DoF ordering per node is `[u1, u2, u3, θ1, θ2, θ3]` with `x1`
//! along the element. The stiffness comes from the exact flexibility of a
//! cantilevered segment with uniform section, so it carries the full
//! coupled 6×6 section matrix and reproduces tip-loaded cantilevers exactly.

use nalgebra::{Matrix3, Matrix6, SMatrix, Vector3};

use crate::beam::section::{SectionMass, SectionStiffness};
use crate::linalg::skew;
use crate::{Error, Result};

pub type Matrix12 = SMatrix<f64, 12, 12>;
type Matrix6x12 = SMatrix<f64, 6, 12>;

const GAUSS3: [(f64, f64); 3] = [
    (0.112_701_665_379_258_3, 5.0 / 18.0),
    (0.5, 8.0 / 18.0),
    (0.887_298_334_620_741_7, 5.0 / 18.0),
];

fn check_length(l0: f64) -> Result<()> {
    if !(l0 > 0.0 && l0.is_finite()) {
        return Err(Error::invalid(format!("element length must be positive, got {l0}")));
    }
    Ok(())
}

/// Maps resultants at the tip (node 2) to the section at distance `d` from it.
fn transport(d: f64) -> Matrix6<f64> {
    let mut t = Matrix6::identity();
    let e1 = skew(&Vector3::x());
    t.fixed_view_mut::<3, 3>(3, 0).copy_from(&(e1 * d));
    t
}

/// Linear element stiffness.
pub fn element_stiffness(c: &SectionStiffness, l0: f64) -> Result<Matrix12> {
    check_length(l0)?;
    let flex_c = c
        .0
        .try_inverse()
        .ok_or_else(|| Error::Singular("section stiffness is singular".into()))?;
    let mut g = Matrix6::zeros();
    for (frac, w) in GAUSS3 {
        let t = transport(l0 * (1.0 - frac));
        g += t.transpose() * flex_c * t * (w * l0);
    }
    let g = 0.5 * (g + g.transpose());
    let k22 = g
        .try_inverse()
        .ok_or_else(|| Error::Singular("element flexibility is singular".into()))?;
    let k22 = 0.5 * (k22 + k22.transpose());
    // rigid transport of node-1 motion to node 2
    let mut q = Matrix6::identity();
    q.fixed_view_mut::<3, 3>(0, 3).copy_from(&(skew(&Vector3::x()) * -l0));
    let mut k = Matrix12::zeros();
    k.fixed_view_mut::<6, 6>(0, 0).copy_from(&(q.transpose() * k22 * q));
    k.fixed_view_mut::<6, 6>(0, 6).copy_from(&(-q.transpose() * k22));
    k.fixed_view_mut::<6, 6>(6, 0).copy_from(&(-k22 * q));
    k.fixed_view_mut::<6, 6>(6, 6).copy_from(&k22);
    Ok(0.5 * (k + k.transpose()))
}

/// Geometric stiffness for a unit axial force (tension positive); scale by
/// the element's axial force `N`.
pub fn unit_geometric_stiffness(l0: f64) -> Result<Matrix12> {
    check_length(l0)?;
    let l = l0;
    let base = [
        [36.0, 3.0 * l, -36.0, 3.0 * l],
        [3.0 * l, 4.0 * l * l, -3.0 * l, -l * l],
        [-36.0, -3.0 * l, 36.0, -3.0 * l],
        [3.0 * l, -l * l, -3.0 * l, 4.0 * l * l],
    ];
    let s = 1.0 / (30.0 * l);
    let mut kg = Matrix12::zeros();
    // (v, dv/dx) = (u2, θ3) and (w, dw/dx) = (u3, -θ2)
    let planes: [[(usize, f64); 4]; 2] = [
        [(1, 1.0), (5, 1.0), (7, 1.0), (11, 1.0)],
        [(2, 1.0), (4, -1.0), (8, 1.0), (10, -1.0)],
    ];
    for plane in planes {
        for (i, &(di, si)) in plane.iter().enumerate() {
            for (j, &(dj, sj)) in plane.iter().enumerate() {
                kg[(di, dj)] += s * si * sj * base[i][j];
            }
        }
    }
    Ok(kg)
}

/// Interpolation of section motion `[u; θ]` from the 12 nodal DoF at
/// fraction `z` of the element: linear for extension and twist, cubic
/// Hermite for the two bending planes.
pub fn shape_functions(l0: f64, z: f64) -> Matrix6x12 {
    let h = [1.0 - 3.0 * z * z + 2.0 * z.powi(3), z - 2.0 * z * z + z.powi(3), 3.0 * z * z - 2.0 * z.powi(3), -z * z + z.powi(3)];
    let dh = [-6.0 * z + 6.0 * z * z, 1.0 - 4.0 * z + 3.0 * z * z, 6.0 * z - 6.0 * z * z, -2.0 * z + 3.0 * z * z];
    let mut n = Matrix6x12::zeros();
    for (row, dof) in [(0usize, 0usize), (3, 3)] {
        n[(row, dof)] = 1.0 - z;
        n[(row, dof + 6)] = z;
    }
    // v = u2 with slope θ3
    n[(1, 1)] = h[0];
    n[(1, 5)] = h[1] * l0;
    n[(1, 7)] = h[2];
    n[(1, 11)] = h[3] * l0;
    n[(5, 1)] = dh[0] / l0;
    n[(5, 5)] = dh[1];
    n[(5, 7)] = dh[2] / l0;
    n[(5, 11)] = dh[3];
    // w = u3 with slope -θ2
    n[(2, 2)] = h[0];
    n[(2, 4)] = -h[1] * l0;
    n[(2, 8)] = h[2];
    n[(2, 10)] = -h[3] * l0;
    n[(4, 2)] = -dh[0] / l0;
    n[(4, 4)] = dh[1];
    n[(4, 8)] = -dh[2] / l0;
    n[(4, 10)] = dh[3];
    n
}

/// 6×6 sectional mass matrix about the reference point, acting on `[u̇; θ̇]`.
pub fn section_mass_matrix(m: &SectionMass) -> Matrix6<f64> {
    let mu = m.mass_per_length;
    let c = skew(&Vector3::new(0.0, m.centroid[0], m.centroid[1]));
    let j = Matrix3::new(m.i22 + m.i33, 0.0, 0.0, 0.0, m.i22, -m.i23, 0.0, -m.i23, m.i33);
    let mut out = Matrix6::zeros();
    out.fixed_view_mut::<3, 3>(0, 0).copy_from(&(Matrix3::identity() * mu));
    out.fixed_view_mut::<3, 3>(0, 3).copy_from(&(-c * mu));
    out.fixed_view_mut::<3, 3>(3, 0).copy_from(&(c * mu));
    out.fixed_view_mut::<3, 3>(3, 3).copy_from(&j);
    out
}

/// Consistent element mass.
pub fn element_mass(m: &SectionMass, l0: f64) -> Result<Matrix12> {
    check_length(l0)?;
    let ms = section_mass_matrix(m);
    let (pts, wts) = crate::linalg::gauss_legendre(4);
    let mut out = Matrix12::zeros();
    for (p, w) in pts.iter().zip(&wts) {
        let z = 0.5 * (p + 1.0);
        let n = shape_functions(l0, z);
        out += n.transpose() * ms * n * (0.5 * w * l0);
    }
    Ok(0.5 * (out + out.transpose()))
}

/// Element frame rows `[e1; e2; e3]` for an element from `a` to `b`: `e1`
/// along the element, `e3` as close to global `z` as possible.
pub fn element_frame(a: &Vector3<f64>, b: &Vector3<f64>) -> Result<Matrix3<f64>> {
    let d = b - a;
    let l = d.norm();
    check_length(l)?;
    let e1 = d / l;
    let reference = if e1.z.abs() > 0.99 { Vector3::x() } else { Vector3::z() };
    let e2 = reference.cross(&e1).normalize();
    let e3 = e1.cross(&e2);
    Ok(Matrix3::from_rows(&[e1.transpose(), e2.transpose(), e3.transpose()]))
}

/// 12×12 block-diagonal rotation, `local = T · global`.
pub fn rotation12(frame: &Matrix3<f64>) -> Matrix12 {
    let mut t = Matrix12::zeros();
    for b in 0..4 {
        t.fixed_view_mut::<3, 3>(3 * b, 3 * b).copy_from(frame);
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, SymmetricEigen};

    fn coupled() -> SectionStiffness {
        let mut c = Matrix6::from_diagonal(&nalgebra::Vector6::new(5e8, 4e7, 3e7, 2e6, 6e6, 9e7));
        c[(3, 4)] = 1.5e6;
        c[(4, 3)] = 1.5e6;
        c[(0, 5)] = 2e6;
        c[(5, 0)] = 2e6;
        SectionStiffness(c)
    }

    #[test]
    fn six_rigid_body_modes() {
        let k = element_stiffness(&coupled(), 0.7).unwrap();
        let eig = SymmetricEigen::new(DMatrix::from_iterator(12, 12, k.iter().copied()));
        let scale = eig.eigenvalues.amax();
        let zeros = eig.eigenvalues.iter().filter(|v| v.abs() < 1e-10 * scale).count();
        assert_eq!(zeros, 6);
        assert!(eig.eigenvalues.iter().all(|v| *v > -1e-10 * scale));
    }

    #[test]
    fn symmetric_and_axial_term() {
        let c = SectionStiffness::diagonal(7e8, 1e8, 1e8, 3e6, 4e6, 5e6);
        let k = element_stiffness(&c, 1.3).unwrap();
        assert!((k - k.transpose()).amax() < 1e-12 * k.amax());
        assert!((k[(0, 0)] - 7e8 / 1.3).abs() < 1e-9 * 7e8);
        assert!((k[(0, 6)] + 7e8 / 1.3).abs() < 1e-9 * 7e8);
    }

    #[test]
    fn diagonal_section_gives_textbook_timoshenko_bending() {
        let (ei, gas, l) = (4e6, 1e8, 1.3);
        let c = SectionStiffness::diagonal(7e8, gas, gas, 3e6, ei, ei);
        let k = element_stiffness(&c, l).unwrap();
        let phi = 12.0 * ei / (gas * l * l);
        let k_vv = 12.0 * ei / (l.powi(3) * (1.0 + phi));
        let k_tt = (4.0 + phi) * ei / (l * (1.0 + phi));
        let k_tt2 = (2.0 - phi) * ei / (l * (1.0 + phi));
        assert!((k[(1, 1)] - k_vv).abs() < 1e-9 * k_vv);
        assert!((k[(5, 5)] - k_tt).abs() < 1e-9 * k_tt);
        assert!((k[(5, 11)] - k_tt2).abs() < 1e-9 * k_tt);
        assert!((k[(4, 4)] - k_tt).abs() < 1e-9 * k_tt);
        assert!((k[(3, 3)] - 3e6 / l).abs() < 1e-9 * 3e6);
    }

    #[test]
    fn rejects_bad_length() {
        let c = coupled();
        assert!(element_stiffness(&c, 0.0).is_err());
        assert!(element_stiffness(&c, -1.0).is_err());
        assert!(unit_geometric_stiffness(0.0).is_err());
    }

    #[test]
    fn consistent_mass_has_element_total() {
        let m = SectionMass { mass_per_length: 3.0, centroid: [0.1, -0.05], i22: 0.2, i33: 0.4, i23: 0.01 };
        let me = element_mass(&m, 2.0).unwrap();
        // rigid translation along z
        let mut r = nalgebra::SVector::<f64, 12>::zeros();
        r[2] = 1.0;
        r[8] = 1.0;
        assert!(((r.transpose() * me * r)[0] - 6.0).abs() < 1e-12);
        // textbook bending terms for an offset-free section
        let m0 = SectionMass { mass_per_length: 3.0, ..Default::default() };
        let me = element_mass(&m0, 2.0).unwrap();
        assert!((me[(1, 1)] - 3.0 * 2.0 * 156.0 / 420.0).abs() < 1e-12);
        assert!((me[(1, 7)] - 3.0 * 2.0 * 54.0 / 420.0).abs() < 1e-12);
    }

    #[test]
    fn geometric_stiffness_is_textbook() {
        let kg = unit_geometric_stiffness(2.0).unwrap();
        assert!((kg[(1, 1)] - 36.0 / 60.0).abs() < 1e-14);
        assert!((kg[(2, 2)] - 36.0 / 60.0).abs() < 1e-14);
        assert!((kg[(5, 5)] - 16.0 / 60.0).abs() < 1e-14);
        assert!((kg[(2, 4)] + 6.0 / 60.0).abs() < 1e-14);
        assert!((kg - kg.transpose()).amax() < 1e-15);
    }

    #[test]
    fn frame_is_orthonormal() {
        let f = element_frame(&Vector3::new(0.0, 0.0, 0.0), &Vector3::new(0.3, 2.0, 0.1)).unwrap();
        assert!((f * f.transpose() - Matrix3::identity()).amax() < 1e-14);
        assert!((f.determinant() - 1.0).abs() < 1e-14);
    }
}
