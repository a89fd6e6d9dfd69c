//! Thin-walled closed-section stiffness by contour integration.
//!
//! Each wall carries the membrane stiffness of its laminate condensed for a
//! free hoop resultant. Axial wall strain follows plane sections; the wall
//! shear strain is the projection of the transverse shear strains onto the
//! contour tangent plus a torsional part whose shear flow is constant
//! around the cell, so that the closed-cell compatibility condition
//! `∮ γ ds = 2 A κ1` holds.
//!
//! Strain ordering is `[ε11, γ12, γ13, κ1, κ2, κ3]` (axial, two transverse
//! shears, twist, two bending curvatures) and the resultants are
//! `[F1, F2, F3, M1, M2, M3]`.

use nalgebra::{Matrix6, Vector6};
use serde::{Deserialize, Serialize};

use crate::laminate::{abd_from_lp, MaterialProperties, PanelDesign};
use crate::{Error, Result};

/// One straight wall of the contour, in section coordinates `(ξ2, ξ3)` (m).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub start: [f64; 2],
    pub end: [f64; 2],
    /// Index into the panel designs passed to the section model.
    pub panel: usize,
    /// Buckling region this wall belongs to.
    pub region: usize,
    /// Ply angles of the referenced panel are measured in a frame mirrored
    /// with respect to the contour direction (sine parameters change sign).
    #[serde(default)]
    pub mirrored: bool,
}

impl Segment {
    pub fn length(&self) -> f64 {
        (self.end[0] - self.start[0]).hypot(self.end[1] - self.start[1])
    }

    pub fn point(&self, frac: f64) -> [f64; 2] {
        [
            self.start[0] + frac * (self.end[0] - self.start[0]),
            self.start[1] + frac * (self.end[1] - self.start[1]),
        ]
    }

    pub fn tangent(&self) -> [f64; 2] {
        let l = self.length();
        [(self.end[0] - self.start[0]) / l, (self.end[1] - self.start[1]) / l]
    }
}

/// Single-cell closed contour, segments ordered head to tail.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossSection {
    pub segments: Vec<Segment>,
}

/// Wall order used by [`CrossSection::rectangular_box`].
pub const BOX_WALLS: [&str; 4] = ["front_spar", "upper_skin", "rear_spar", "lower_skin"];

impl CrossSection {
    /// Rectangular box centred at `center`, traversed counter-clockwise:
    /// front spar (`+ξ2` side), upper skin, rear spar, lower skin.
    ///
    /// Skin ply angles are read in one planform frame and spar angles in one
    /// side-view frame, so equal skin designs give bend-twist coupling. The
    /// upper skin and rear spar run against those frames and are mirrored.
    pub fn rectangular_box(width: f64, height: f64, center: [f64; 2], panels: [usize; 4], regions: [usize; 4]) -> Self {
        let (hw, hh) = (0.5 * width, 0.5 * height);
        let c = |x: f64, y: f64| [center[0] + x, center[1] + y];
        let corners = [c(hw, -hh), c(hw, hh), c(-hw, hh), c(-hw, -hh)];
        let segments = (0..4)
            .map(|i| Segment {
                start: corners[i],
                end: corners[(i + 1) % 4],
                panel: panels[i],
                region: regions[i],
                mirrored: i == 1 || i == 2,
            })
            .collect();
        Self { segments }
    }

    pub fn validate(&self) -> Result<()> {
        if self.segments.len() < 3 {
            return Err(Error::invalid("closed contour needs at least three walls"));
        }
        for (i, s) in self.segments.iter().enumerate() {
            if !(s.length() > 0.0) {
                return Err(Error::invalid(format!("wall {i} has zero length")));
            }
            let next = &self.segments[(i + 1) % self.segments.len()];
            let gap = (s.end[0] - next.start[0]).hypot(s.end[1] - next.start[1]);
            if gap > 1e-9 * (1.0 + s.length()) {
                return Err(Error::invalid(format!(
                    "open contour: wall {i} does not connect to wall {} (torsion would be rank deficient)",
                    (i + 1) % self.segments.len()
                )));
            }
        }
        if self.enclosed_area().abs() < 1e-14 {
            return Err(Error::invalid("contour encloses no area"));
        }
        Ok(())
    }

    /// Signed enclosed area, positive for counter-clockwise traversal.
    pub fn enclosed_area(&self) -> f64 {
        0.5 * self
            .segments
            .iter()
            .map(|s| s.start[0] * s.end[1] - s.end[0] * s.start[1])
            .sum::<f64>()
    }

    pub fn perimeter(&self) -> f64 {
        self.segments.iter().map(Segment::length).sum()
    }
}

/// 6×6 Timoshenko cross-section stiffness.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SectionStiffness(pub Matrix6<f64>);

impl SectionStiffness {
    /// Uncoupled section from its six diagonal rigidities
    /// `(EA, GA2, GA3, GJ, EI2, EI3)`.
    pub fn diagonal(ea: f64, ga2: f64, ga3: f64, gj: f64, ei2: f64, ei3: f64) -> Self {
        Self(Matrix6::from_diagonal(&Vector6::new(ea, ga2, ga3, gj, ei2, ei3)))
    }

    pub fn ea(&self) -> f64 {
        self.0[(0, 0)]
    }
    pub fn ga2(&self) -> f64 {
        self.0[(1, 1)]
    }
    pub fn ga3(&self) -> f64 {
        self.0[(2, 2)]
    }
    pub fn gj(&self) -> f64 {
        self.0[(3, 3)]
    }
    pub fn ei2(&self) -> f64 {
        self.0[(4, 4)]
    }
    pub fn ei3(&self) -> f64 {
        self.0[(5, 5)]
    }

    /// Scales the torsional stiffness by `kappa`, with its coupling entries
    /// by `√κ`: `C' = S C S`, `S = diag(1, 1, 1, √κ, 1, 1)`. Extension, shear
    /// and bending entries are untouched.
    pub fn knockdown_torsion(&self, kappa: f64) -> Self {
        let r = kappa.sqrt();
        let s = [1.0, 1.0, 1.0, r, 1.0, 1.0];
        let mut c = self.0;
        for i in 0..6 {
            for j in 0..6 {
                if s[i] != 1.0 || s[j] != 1.0 {
                    c[(i, j)] = self.0[(i, j)] * s[i] * s[j];
                }
            }
        }
        Self(c)
    }
}

/// Mass per unit length and its moments about the section reference point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SectionMass {
    pub mass_per_length: f64,
    /// Mass centroid `(ξ2, ξ3)`.
    pub centroid: [f64; 2],
    /// `∫ ξ3² dm`
    pub i22: f64,
    /// `∫ ξ2² dm`
    pub i33: f64,
    /// `∫ ξ2 ξ3 dm`
    pub i23: f64,
}

impl SectionMass {
    pub fn add(&self, other: &SectionMass) -> SectionMass {
        let m = self.mass_per_length + other.mass_per_length;
        let centroid = if m > 0.0 {
            [
                (self.mass_per_length * self.centroid[0] + other.mass_per_length * other.centroid[0]) / m,
                (self.mass_per_length * self.centroid[1] + other.mass_per_length * other.centroid[1]) / m,
            ]
        } else {
            [0.0, 0.0]
        };
        SectionMass {
            mass_per_length: m,
            centroid,
            i22: self.i22 + other.i22,
            i33: self.i33 + other.i33,
            i23: self.i23 + other.i23,
        }
    }

    /// A line mass at `(ξ2, ξ3)`.
    pub fn point(mass_per_length: f64, at: [f64; 2]) -> SectionMass {
        SectionMass {
            mass_per_length,
            centroid: at,
            i22: mass_per_length * at[1] * at[1],
            i33: mass_per_length * at[0] * at[0],
            i23: mass_per_length * at[0] * at[1],
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Wall {
    a: [[f64; 2]; 2],
    thickness: f64,
    density: f64,
}

/// Cross-section with its walls' membrane properties resolved.
#[derive(Debug, Clone)]
pub struct SectionModel {
    pub section: CrossSection,
    walls: Vec<Wall>,
    /// Constant torsional shear-flow coefficients, `q0 = c0 · e`.
    c0: Vector6<f64>,
    shear_root: f64,
}

const GAUSS3: [(f64, f64); 3] = [
    (0.112_701_665_379_258_3, 5.0 / 18.0),
    (0.5, 8.0 / 18.0),
    (0.887_298_334_620_741_7, 5.0 / 18.0),
];

impl SectionModel {
    /// `panels` is indexed by each segment's `panel` field; `shear_factor`
    /// scales the transverse shear rigidities (1.0 for the smeared thin-walled model).
    pub fn new(section: CrossSection, panels: &[PanelDesign], material: &MaterialProperties, shear_factor: f64) -> Result<Self> {
        section.validate()?;
        if !(shear_factor > 0.0) {
            return Err(Error::invalid("shear correction factor must be positive"));
        }
        let mut walls = Vec::with_capacity(section.segments.len());
        for (i, seg) in section.segments.iter().enumerate() {
            let design = panels
                .get(seg.panel)
                .ok_or_else(|| Error::invalid(format!("wall {i} references missing panel {}", seg.panel)))?;
            let abd = abd_from_lp(&oriented(design, seg.mirrored), material)?;
            walls.push(Wall {
                a: abd.condensed_membrane(),
                thickness: design.thickness,
                density: material.rho,
            });
        }
        let two_area = 2.0 * section.enclosed_area();
        let mut flex = 0.0;
        let mut v = Vector6::zeros();
        for (seg, wall) in section.segments.iter().zip(&walls) {
            let l = seg.length();
            flex += l / wall.a[1][1];
            for (frac, w) in GAUSS3 {
                v += axial_map(seg.point(frac)) * (w * l * wall.a[0][1] / wall.a[1][1]);
            }
        }
        let mut c0 = v / flex;
        c0[3] += two_area / flex;
        Ok(Self {
            section,
            walls,
            c0,
            shear_root: shear_factor.sqrt(),
        })
    }

    fn shear_map(&self, seg: usize, frac: f64) -> Vector6<f64> {
        let s = &self.section.segments[seg];
        let wall = &self.walls[seg];
        let t = s.tangent();
        let h = axial_map(s.point(frac));
        let mut g = (self.c0 - h * wall.a[0][1]) / wall.a[1][1];
        g[1] += self.shear_root * t[0];
        g[2] += self.shear_root * t[1];
        g
    }

    pub fn stiffness(&self) -> SectionStiffness {
        let mut c = Matrix6::zeros();
        for (i, (seg, wall)) in self.section.segments.iter().zip(&self.walls).enumerate() {
            let l = seg.length();
            let [[a11, a16], [_, a66]] = wall.a;
            for (frac, w) in GAUSS3 {
                let h = axial_map(seg.point(frac));
                let g = self.shear_map(i, frac);
                let hg = h * g.transpose();
                c += (h * h.transpose() * a11 + (hg + hg.transpose()) * a16 + g * g.transpose() * a66) * (w * l);
            }
        }
        SectionStiffness(0.5 * (c + c.transpose()))
    }

    pub fn mass(&self) -> SectionMass {
        let mut out = SectionMass::default();
        let (mut m2, mut m3) = (0.0, 0.0);
        for (seg, wall) in self.section.segments.iter().zip(&self.walls) {
            let l = seg.length();
            let rt = wall.density * wall.thickness;
            for (frac, w) in GAUSS3 {
                let [x2, x3] = seg.point(frac);
                let dm = rt * w * l;
                out.mass_per_length += dm;
                m2 += dm * x2;
                m3 += dm * x3;
                out.i22 += dm * x3 * x3;
                out.i33 += dm * x2 * x2;
                out.i23 += dm * x2 * x3;
            }
        }
        if out.mass_per_length > 0.0 {
            out.centroid = [m2 / out.mass_per_length, m3 / out.mass_per_length];
        }
        out
    }

    /// Wall axial and shear strain at fraction `frac` along wall `seg` for
    /// beam strains `e`.
    pub fn wall_strains(&self, seg: usize, frac: f64, e: &Vector6<f64>) -> (f64, f64) {
        let s = &self.section.segments[seg];
        (axial_map(s.point(frac)).dot(e), self.shear_map(seg, frac).dot(e))
    }

    /// Wall membrane resultants `(N_x, N_xs)` (N/m).
    pub fn wall_resultants(&self, seg: usize, frac: f64, e: &Vector6<f64>) -> (f64, f64) {
        let (eps, gam) = self.wall_strains(seg, frac, e);
        let [[a11, a16], [_, a66]] = self.walls[seg].a;
        (a11 * eps + a16 * gam, a16 * eps + a66 * gam)
    }

    pub fn wall_thickness(&self, seg: usize) -> f64 {
        self.walls[seg].thickness
    }
}

/// Panel design expressed in the contour frame of a wall.
pub fn oriented(design: &PanelDesign, mirrored: bool) -> PanelDesign {
    let mut d = *design;
    if mirrored {
        for xi in [&mut d.lp.xi_a, &mut d.lp.xi_d] {
            xi[2] = -xi[2];
            xi[3] = -xi[3];
        }
    }
    d
}

fn axial_map(p: [f64; 2]) -> Vector6<f64> {
    Vector6::new(1.0, 0.0, 0.0, 0.0, p[1], -p[0])
}

/// Section stiffness of a thin-walled closed contour.
pub fn section_stiffness(section: &CrossSection, panels: &[PanelDesign], material: &MaterialProperties) -> Result<SectionStiffness> {
    Ok(SectionModel::new(section.clone(), panels, material, 1.0)?.stiffness())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::laminate::{lp_from_stack, LaminationParameters};
    use std::f64::consts::FRAC_PI_4;

    fn iso_box() -> (CrossSection, Vec<PanelDesign>, MaterialProperties) {
        let e = 70e9;
        let g = 26.9e9;
        let nu = e / (2.0 * g) - 1.0;
        let mat = MaterialProperties::isotropic(e, nu, 2700.0, 300e6);
        let sec = CrossSection::rectangular_box(0.4, 0.1, [0.0, 0.0], [0; 4], [0, 1, 2, 3]);
        let p = vec![PanelDesign { lp: LaminationParameters::default(), thickness: 2e-3 }];
        (sec, p, mat)
    }

    #[test]
    fn isotropic_box_matches_thin_walled_formulas() {
        let (sec, p, mat) = iso_box();
        let c = section_stiffness(&sec, &p, &mat).unwrap();
        let (w, h, t, e, g) = (0.4, 0.1, 2e-3, mat.e1, mat.g12);
        let ea = e * t * 2.0 * (w + h);
        let ei2 = e * (2.0 * t * w * (h / 2.0_f64).powi(2) + 2.0 * t * h.powi(3) / 12.0);
        let ei3 = e * (2.0 * t * h * (w / 2.0_f64).powi(2) + 2.0 * t * w.powi(3) / 12.0);
        let gj = 4.0 * (w * h).powi(2) / (2.0 * (w + h) / (g * t));
        let rel = |a: f64, b: f64| ((a - b) / b).abs();
        assert!(rel(c.ea(), ea) < 1e-9);
        assert!(rel(c.ei2(), ei2) < 1e-9);
        assert!(rel(c.ei3(), ei3) < 1e-9);
        assert!(rel(c.gj(), gj) < 1e-9);
        for (i, j) in [(0, 3), (3, 4), (3, 5), (0, 4), (0, 5), (1, 3), (2, 3)] {
            assert!(c.0[(i, j)].abs() < 1e-9 * c.0.amax(), "coupling ({i},{j}) = {}", c.0[(i, j)]);
        }
        assert!(c.0.cholesky().is_some());
    }

    #[test]
    fn ply_angle_trades_axial_for_torsional_stiffness() {
        let mat = MaterialProperties::carbon_epoxy();
        let sec = CrossSection::rectangular_box(0.4, 0.1, [0.0, 0.0], [0; 4], [0; 4]);
        let ud = vec![PanelDesign { lp: lp_from_stack(&[0.0]).unwrap(), thickness: 2e-3 }];
        let ap = vec![PanelDesign { lp: lp_from_stack(&[FRAC_PI_4, -FRAC_PI_4]).unwrap(), thickness: 2e-3 }];
        let c0 = section_stiffness(&sec, &ud, &mat).unwrap();
        let c45 = section_stiffness(&sec, &ap, &mat).unwrap();
        assert!(c45.gj() > c0.gj());
        assert!(c0.ea() > c45.ea());
    }

    #[test]
    fn off_axis_skins_couple_bending_and_twist() {
        let mat = MaterialProperties::carbon_epoxy();
        // upper and lower skins with +30 plies, spars quasi-isotropic
        let sec = CrossSection::rectangular_box(0.4, 0.1, [0.0, 0.0], [1, 0, 1, 0], [0; 4]);
        let skin = PanelDesign { lp: lp_from_stack(&[0.5236]).unwrap(), thickness: 2e-3 };
        let spar = PanelDesign { lp: LaminationParameters::default(), thickness: 2e-3 };
        let c = section_stiffness(&sec, &[skin, spar], &mat).unwrap();
        assert!(c.0[(3, 4)].abs() > 1e-3 * (c.gj() * c.ei2()).sqrt());
        assert!(c.0.cholesky().is_some());
    }

    #[test]
    fn uniform_contour_frame_gives_extension_twist_instead() {
        let mat = MaterialProperties::carbon_epoxy();
        let mut sec = CrossSection::rectangular_box(0.4, 0.1, [0.0, 0.0], [0; 4], [0; 4]);
        for s in &mut sec.segments {
            s.mirrored = false;
        }
        let p = vec![PanelDesign { lp: lp_from_stack(&[0.5236]).unwrap(), thickness: 2e-3 }];
        let c = section_stiffness(&sec, &p, &mat).unwrap();
        assert!(c.0[(0, 3)].abs() > 1e-3 * (c.gj() * c.ea()).sqrt());
        assert!(c.0[(3, 4)].abs() < 1e-9 * (c.gj() * c.ei2()).sqrt());
    }

    #[test]
    fn knockdown_preserves_extension_and_bending() {
        let (sec, p, mat) = iso_box();
        let c = section_stiffness(&sec, &p, &mat).unwrap();
        let k = c.knockdown_torsion(0.7);
        assert_eq!(k.ea(), c.ea());
        assert_eq!(k.ei2(), c.ei2());
        assert_eq!(k.ei3(), c.ei3());
        assert!((k.gj() - 0.7 * c.gj()).abs() < 1e-9 * c.gj());
    }

    #[test]
    fn invalid_sections_are_rejected() {
        let (mut sec, p, mat) = iso_box();
        sec.segments.pop();
        assert!(section_stiffness(&sec, &p, &mat).is_err());
        let (sec, mut p, mat) = iso_box();
        p[0].thickness = 0.0;
        assert!(section_stiffness(&sec, &p, &mat).is_err());
    }

    #[test]
    fn torsion_shear_flow_is_constant_for_isotropic_walls() {
        let (sec, p, mat) = iso_box();
        let model = SectionModel::new(sec, &p, &mat, 1.0).unwrap();
        let mut e = Vector6::zeros();
        e[3] = 1e-3;
        let q: Vec<f64> = (0..4).map(|s| model.wall_resultants(s, 0.3, &e).1).collect();
        for v in &q {
            assert!((v - q[0]).abs() < 1e-9 * q[0].abs());
        }
    }
}
