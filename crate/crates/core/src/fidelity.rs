//! Low- and high-fidelity wing models built from one [`RunConfig`].
//!
//! Both levels share planform, rib stations, box geometry, panel layout,
//! materials and load cases. The high-fidelity stand-in refines the beam
//! mesh and the lattice, adds detail masses and knocks down torsion and
//! shear stiffness on flagged bays.

use nalgebra::{DVector, Matrix3, Matrix6, Vector3};

use crate::aero::lattice::{build_lattice, Lattice};
use crate::aero::statespace::{AeroCoupling, AeroOperators};
use crate::aero::transfer::Transfer;
use crate::aero::vlm::{AeroSolver, FlowConditions, Symmetry};
use crate::beam::element::element_frame;
use crate::beam::model::{assemble, AssembledSystem, BeamElement, BeamModel, PointMass, DOF_PER_NODE};
use crate::beam::panel::PlateBasis;
use crate::beam::section::{CrossSection, SectionMass, SectionModel, BOX_WALLS};
use crate::constraints::Availability;
use crate::harness::config::{AvailabilityMask, FidelityConfig, LoadCase, MassSpec, RunConfig};
use crate::laminate::PanelDesign;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Lf,
    Hf,
}

impl Level {
    /// Whether an entry with this availability tag is computed at this level.
    pub fn computes(self, tag: Availability) -> bool {
        matches!((self, tag), (_, Availability::Both) | (Level::Lf, Availability::Lf) | (Level::Hf, Availability::Hf))
    }
}

/// One beam element with its section geometry.
#[derive(Debug, Clone)]
pub struct ElementInfo {
    pub nodes: [usize; 2],
    pub bay: usize,
    /// Box contour in the element frame; segment `panel` fields index design panels.
    pub section: CrossSection,
    pub nonstructural: SectionMass,
    pub knockdown: f64,
}

#[derive(Debug, Clone)]
pub struct BayInfo {
    pub elements: std::ops::Range<usize>,
    pub y_mid: f64,
    /// Beam axis length of the bay.
    pub length: f64,
    pub zone: usize,
}

/// Local buckling region: one wall of one bay.
#[derive(Debug, Clone)]
pub struct RegionInfo {
    pub bay: usize,
    pub wall: usize,
    pub panel: usize,
    pub mirrored: bool,
    pub basis: PlateBasis,
}

/// Load case with its flow and steady aerodynamic operators.
#[derive(Debug, Clone)]
pub struct CaseData {
    pub case: LoadCase,
    pub flow: FlowConditions,
    pub ops: AeroOperators,
}

/// Structural model of one design.
#[derive(Debug, Clone)]
pub struct Structure {
    pub model: BeamModel,
    pub system: AssembledSystem,
    pub sections: Vec<SectionModel>,
    /// Compliance of the unreduced section of each element, for stress recovery.
    pub compliance: Vec<Matrix6<f64>>,
}

/// Immutable model handle for one fidelity level.
#[derive(Debug, Clone)]
pub struct WingModel {
    pub level: Level,
    pub config: RunConfig,
    pub fidelity: FidelityConfig,
    pub nodes: Vec<Vector3<f64>>,
    /// Node index of each rib.
    pub rib_nodes: Vec<usize>,
    pub elements: Vec<ElementInfo>,
    pub bays: Vec<BayInfo>,
    pub regions: Vec<RegionInfo>,
    pub point_masses: Vec<PointMass>,
    pub symmetric: AeroCoupling,
    pub antisymmetric: Option<AeroCoupling>,
    pub cases: Vec<CaseData>,
    /// Skin and spar area of each design panel (m²).
    pub panel_area: Vec<f64>,
}

pub fn make_lf(config: &RunConfig) -> Result<WingModel> {
    WingModel::new(config, Level::Lf)
}

pub fn make_hf(config: &RunConfig) -> Result<WingModel> {
    WingModel::new(config, Level::Hf)
}

impl WingModel {
    pub fn new(config: &RunConfig, level: Level) -> Result<Self> {
        config.validate()?;
        let fidelity = match level {
            Level::Lf => config.fidelity.lf.clone(),
            Level::Hf => config.fidelity.hf.clone(),
        };
        let planform = &config.planform;
        let st = &config.structure;
        let n_bays = config.n_bays();
        let mf = fidelity.mesh_factor;
        let n_el = n_bays * mf;
        let span = planform.semi_span();
        let box_mid = 0.5 * (st.front_spar + st.rear_spar);
        let box_frac = st.rear_spar - st.front_spar;
        let axis_point = |y: f64| {
            let (x_le, c) = planform.leading_edge_and_chord(y);
            let x = x_le + c * (box_mid - st.reference_offset[0] * box_frac);
            Vector3::new(x, y, st.reference_offset[1] * st.box_height * c)
        };
        let nodes: Vec<Vector3<f64>> = (0..=n_el).map(|k| axis_point(span * k as f64 / n_el as f64)).collect();
        let rib_nodes: Vec<usize> = (0..=n_bays).map(|b| b * mf).collect();

        let groups = config.panels.grouping.groups();
        let zones = config.panels.zones;
        let zone_of = |bay: usize| bay * zones / n_bays;
        let panel_of = |bay: usize, wall: usize| zone_of(bay) * groups + config.panels.grouping.group_of(wall);
        let flagged = |bay: usize| fidelity.knockdown_bays.as_ref().is_none_or(|b| b.contains(&bay));

        let mut elements = Vec::with_capacity(n_el);
        for e in 0..n_el {
            let bay = e / mf;
            let (a, b) = (nodes[e], nodes[e + 1]);
            let frame = element_frame(&a, &b)?;
            let e1 = frame.row(0).transpose();
            let cos_sweep = e1.y.hypot(e1.z) / e1.norm();
            let y_mid = 0.5 * (a.y + b.y);
            let (x_le, c) = planform.leading_edge_and_chord(y_mid);
            let width = box_frac * c * cos_sweep;
            let height = st.box_height * c;
            let center = [-st.reference_offset[0] * width, -st.reference_offset[1] * height];
            let panels = std::array::from_fn(|w| panel_of(bay, w));
            let regions = std::array::from_fn(|w| 4 * bay + w);
            let section = CrossSection::rectangular_box(width, height, center, panels, regions);
            // smeared secondary mass, chordwise offset resolved into the section plane
            let x_ref = 0.5 * (a.x + b.x);
            let dx = x_le + st.nonstructural_chord * c - x_ref;
            let mu = st.nonstructural_mass_per_area * c * cos_sweep;
            let nonstructural = SectionMass::point(mu, [-dx * cos_sweep, 0.0]);
            let knockdown = if flagged(bay) { fidelity.knockdown } else { 1.0 };
            elements.push(ElementInfo { nodes: [e, e + 1], bay, section, nonstructural, knockdown });
        }

        let mut bays = Vec::with_capacity(n_bays);
        let mut regions = Vec::with_capacity(4 * n_bays);
        let mut panel_area = vec![0.0; config.panels.n_panels()];
        for bay in 0..n_bays {
            let (a, b) = (nodes[rib_nodes[bay]], nodes[rib_nodes[bay + 1]]);
            let length = (b - a).norm();
            let y_mid = 0.5 * (a.y + b.y);
            // wall lengths at the bay midpoint; linear in y, so this integrates exactly
            let mid_section = Self::bay_section(config, &a, &b)?;
            for (wall, seg) in mid_section.segments.iter().enumerate() {
                let panel = panel_of(bay, wall);
                panel_area[panel] += seg.length() * length;
                let basis = PlateBasis::new(length, seg.length(), fidelity.plate_terms)?;
                regions.push(RegionInfo { bay, wall, panel, mirrored: seg.mirrored, basis });
            }
            bays.push(BayInfo { elements: bay * mf..(bay + 1) * mf, y_mid, length, zone: zone_of(bay) });
        }

        let point_masses = st
            .point_masses
            .iter()
            .chain(&fidelity.extra_masses)
            .map(|m| Self::place_mass(config, &nodes, m))
            .collect();

        let ny = n_bays * fidelity.strips_per_bay;
        let lattice = build_lattice(planform, fidelity.nx, ny)?;
        let transfer = Transfer::new(&nodes, &lattice)?;
        let symmetric = AeroCoupling {
            solver: AeroSolver::new(lattice.clone(), Symmetry::Symmetric)?,
            transfer: transfer.clone(),
        };
        let antisymmetric = if planform.aileron.is_some() && level.computes(config.fidelity.availability.ae) {
            Some(AeroCoupling { solver: AeroSolver::new(lattice, Symmetry::Antisymmetric)?, transfer })
        } else {
            None
        };
        let cases = config
            .loadcases
            .cases
            .iter()
            .map(|c| {
                let flow = FlowConditions { speed: c.speed, density: c.density, mach: c.mach, alpha: 0.0 };
                flow.validate()?;
                let ops = symmetric.jacobians(&flow);
                Ok(CaseData { case: c.clone(), flow, ops })
            })
            .collect::<Result<Vec<_>>>()?;

        Ok(Self {
            level,
            config: config.clone(),
            fidelity,
            nodes,
            rib_nodes,
            elements,
            bays,
            regions,
            point_masses,
            symmetric,
            antisymmetric,
            cases,
            panel_area,
        })
    }

    fn bay_section(config: &RunConfig, a: &Vector3<f64>, b: &Vector3<f64>) -> Result<CrossSection> {
        let st = &config.structure;
        let frame = element_frame(a, b)?;
        let e1 = frame.row(0).transpose();
        let cos_sweep = e1.y.hypot(e1.z) / e1.norm();
        let (_, c) = config.planform.leading_edge_and_chord(0.5 * (a.y + b.y));
        let width = (st.rear_spar - st.front_spar) * c * cos_sweep;
        Ok(CrossSection::rectangular_box(width, st.box_height * c, [0.0, 0.0], [0; 4], [0; 4]))
    }

    fn place_mass(config: &RunConfig, nodes: &[Vector3<f64>], m: &MassSpec) -> PointMass {
        let y = m.span_fraction * config.planform.semi_span();
        let (x_le, c) = config.planform.leading_edge_and_chord(y);
        let at = Vector3::new(x_le + m.chord_fraction * c, y, 0.0);
        let node = (0..nodes.len())
            .min_by(|&i, &j| (nodes[i].y - y).abs().total_cmp(&(nodes[j].y - y).abs()))
            .unwrap_or(0);
        PointMass { node, mass: m.mass, offset: at - nodes[node], inertia: Matrix3::zeros() }
    }

    pub fn n_panels(&self) -> usize {
        self.config.panels.n_panels()
    }

    pub fn n_bays(&self) -> usize {
        self.bays.len()
    }

    pub fn n_regions(&self) -> usize {
        self.regions.len()
    }

    pub fn n_cases(&self) -> usize {
        self.cases.len()
    }

    pub fn availability(&self) -> AvailabilityMask {
        self.config.fidelity.availability
    }

    pub fn lattice(&self) -> &Lattice {
        &self.symmetric.solver.lattice
    }

    /// Tip node index.
    pub fn tip(&self) -> usize {
        self.nodes.len() - 1
    }

    /// Builds and assembles the beam for the given panel designs.
    pub fn structure(&self, panels: &[PanelDesign]) -> Result<Structure> {
        if panels.len() != self.n_panels() {
            return Err(Error::invalid(format!("expected {} panel designs, got {}", self.n_panels(), panels.len())));
        }
        let material = &self.config.materials;
        let shear = self.config.structure.shear_factor;
        let mut sections = Vec::with_capacity(self.elements.len());
        let mut beam_elements = Vec::with_capacity(self.elements.len());
        let mut compliance = Vec::with_capacity(self.elements.len());
        for info in &self.elements {
            let sm = SectionModel::new(info.section.clone(), panels, material, shear)?;
            let c = sm.stiffness();
            compliance.push(
                c.0.try_inverse()
                    .ok_or_else(|| Error::Singular("section stiffness is singular".into()))?,
            );
            let stiffness = if info.knockdown < 1.0 { c.knockdown_torsion(info.knockdown) } else { c };
            let mass = sm.mass().add(&info.nonstructural);
            beam_elements.push(BeamElement { nodes: info.nodes, stiffness, mass });
            sections.push(sm);
        }
        let model = BeamModel {
            nodes: self.nodes.clone(),
            elements: beam_elements,
            point_masses: self.point_masses.clone(),
            clamped: vec![0],
        };
        let system = assemble(&model, &[])?;
        Ok(Structure { model, system, sections, compliance })
    }

    /// Gravity load for load factor `n`: `−n g M ẑ`.
    pub fn gravity_load(&self, system: &AssembledSystem, n: f64) -> DVector<f64> {
        let mut rz = DVector::zeros(system.n_dof());
        for i in 0..self.nodes.len() {
            rz[DOF_PER_NODE * i + 2] = 1.0;
        }
        &system.m * rz * (-n * self.config.loadcases.gravity)
    }

    /// Trim lift for the half aircraft at load factor `n`.
    pub fn lift_target(&self, n: f64) -> f64 {
        0.5 * n * self.config.loadcases.gravity * self.config.loadcases.aircraft_mass
    }

    /// Global `θ_y` interpolated to span station `y`.
    pub fn twist_at(&self, p: &DVector<f64>, y: f64) -> Result<f64> {
        let (a, b, wa, wb) = crate::aero::transfer::locate(&self.nodes, y)?;
        Ok(wa * p[DOF_PER_NODE * a + 4] + wb * p[DOF_PER_NODE * b + 4])
    }

    pub fn wall_names() -> [&'static str; 4] {
        BOX_WALLS
    }
}
