//! Run configuration: one JSON document shared by both fidelities.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::aero::lattice::{Aileron, Planform, PlanformSegment};
use crate::aeroelastic::equilibrium::StaticOptions;
use crate::beam::analysis::{NewtonOptions, SolveMode};
pub use crate::constraints::Availability;
use crate::constraints::Category;
use crate::laminate::{LaminationParameters, MaterialProperties, PanelDesign};
use crate::{Error, Result};

/// Environment variable overriding `output.directory`.
pub const OUTPUT_DIR_ENV: &str = "MFAT_OUTPUT_DIR";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub planform: Planform,
    pub structure: StructureConfig,
    pub materials: MaterialProperties,
    pub panels: PanelConfig,
    pub loadcases: LoadCaseConfig,
    pub fidelity: FidelityPair,
    #[serde(default)]
    pub optimizer: OptimizerConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

/// Concentrated non-structural mass placed by span and chord fraction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct MassSpec {
    /// Span station as a fraction of the semi-span.
    pub span_fraction: f64,
    /// Chordwise position as a fraction of the local chord.
    pub chord_fraction: f64,
    pub mass: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(deny_unknown_fields, default)]
pub struct StructureConfig {
    /// Ribs from root to tip inclusive; bays = ribs − 1.
    pub ribs: usize,
    pub front_spar: f64,
    pub rear_spar: f64,
    /// Box depth as a fraction of the local chord.
    pub box_height: f64,
    /// Beam reference axis offset from the box centre, as fractions of box
    /// width (positive forward) and height (positive up).
    pub reference_offset: [f64; 2],
    pub shear_factor: f64,
    /// Smeared non-structural mass per planform area (kg/m²), at `nonstructural_chord`.
    pub nonstructural_mass_per_area: f64,
    pub nonstructural_chord: f64,
    pub point_masses: Vec<MassSpec>,
    /// Constant mass added to the objective (kg).
    pub fixed_mass: f64,
    /// Modal damping ratio for Rayleigh damping on the first two modes.
    pub damping_ratio: f64,
    pub thickness_bounds: [f64; 2],
}

impl Default for StructureConfig {
    fn default() -> Self {
        Self {
            ribs: 30,
            front_spar: 0.15,
            rear_spar: 0.65,
            box_height: 0.12,
            reference_offset: [0.0, 0.0],
            shear_factor: 1.0,
            nonstructural_mass_per_area: 12.0,
            nonstructural_chord: 0.5,
            point_masses: Vec::new(),
            fixed_mass: 0.0,
            damping_ratio: 0.005,
            thickness_bounds: [1e-3, 0.06],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum Grouping {
    /// One design panel per wall: front spar, upper skin, rear spar, lower skin.
    PerWall,
    /// Skins share one design, spars another.
    SkinsSpars,
    /// One design for the whole zone.
    Single,
}

impl Grouping {
    pub fn groups(self) -> usize {
        match self {
            Grouping::PerWall => 4,
            Grouping::SkinsSpars => 2,
            Grouping::Single => 1,
        }
    }

    /// Group of a box wall in contour order (front spar, upper, rear spar, lower).
    pub fn group_of(self, wall: usize) -> usize {
        match self {
            Grouping::PerWall => wall,
            Grouping::SkinsSpars => usize::from(wall % 2 == 0),
            Grouping::Single => 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct PanelConfig {
    /// Spanwise design zones; bays are split into this many contiguous groups.
    pub zones: usize,
    pub grouping: Grouping,
    /// Starting design applied to every panel.
    pub initial: InitialPanel,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct InitialPanel {
    pub xi_a: [f64; 4],
    pub xi_d: [f64; 4],
    pub thickness: f64,
}

impl InitialPanel {
    pub fn design(&self) -> PanelDesign {
        PanelDesign { lp: LaminationParameters { xi_a: self.xi_a, xi_d: self.xi_d }, thickness: self.thickness }
    }
}

impl PanelConfig {
    pub fn n_panels(&self) -> usize {
        self.zones * self.grouping.groups()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct LoadCase {
    pub name: String,
    pub load_factor: f64,
    pub speed: f64,
    pub mach: f64,
    pub density: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct LoadCaseConfig {
    /// Aircraft mass used for the trim lift target (kg).
    pub aircraft_mass: f64,
    #[serde(default = "default_gravity")]
    pub gravity: f64,
    /// Local angle-of-attack bounds (rad).
    pub alpha_bounds: [f64; 2],
    /// Minimum aileron effectiveness.
    pub eta_min: f64,
    pub cases: Vec<LoadCase>,
}

fn default_gravity() -> f64 {
    9.81
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(deny_unknown_fields, default)]
pub struct AvailabilityMask {
    pub tw: Availability,
    pub b: Availability,
    pub ds: Availability,
    pub ae: Availability,
    #[serde(rename = "AoA")]
    pub aoa: Availability,
    pub feas: Availability,
}

impl AvailabilityMask {
    pub fn get(&self, category: Category) -> Availability {
        match category {
            Category::Tw => self.tw,
            Category::B => self.b,
            Category::Ds => self.ds,
            Category::Ae => self.ae,
            Category::Aoa => self.aoa,
            Category::Feas => self.feas,
        }
    }
}

impl Default for AvailabilityMask {
    fn default() -> Self {
        use Availability::*;
        Self { tw: Both, b: Both, ds: Both, ae: Lf, aoa: Both, feas: Both }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(deny_unknown_fields, default)]
pub struct FidelityConfig {
    /// Beam elements per rib bay.
    pub mesh_factor: usize,
    /// Chordwise lattice panels.
    pub nx: usize,
    /// Spanwise lattice strips per rib bay.
    pub strips_per_bay: usize,
    /// Torsion and shear stiffness factor on flagged bays, in (0, 1].
    pub knockdown: f64,
    /// Bays carrying the knockdown; `None` flags every bay.
    pub knockdown_bays: Option<Vec<usize>>,
    pub extra_masses: Vec<MassSpec>,
    /// Modal basis size for the state-space model; 0 keeps all free DoF.
    pub state_modes: usize,
    /// Sine terms per direction in the panel buckling expansion.
    pub plate_terms: usize,
    #[serde(rename = "static")]
    pub static_options: StaticOptions,
}

impl Default for FidelityConfig {
    fn default() -> Self {
        Self {
            mesh_factor: 1,
            nx: 4,
            strips_per_bay: 1,
            knockdown: 1.0,
            knockdown_bays: None,
            extra_masses: Vec::new(),
            state_modes: 20,
            plate_terms: 4,
            static_options: StaticOptions {
                mode: SolveMode::Nonlinear,
                newton: NewtonOptions { tol: 1e-8, max_iter: 30, load_steps: 2 },
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct FidelityPair {
    pub lf: FidelityConfig,
    pub hf: FidelityConfig,
    #[serde(default)]
    pub availability: AvailabilityMask,
}

impl FidelityPair {
    /// High fidelity identical to low fidelity apart from mesh refinement.
    pub fn matched_physics(&self) -> FidelityPair {
        let hf = FidelityConfig {
            knockdown: 1.0,
            knockdown_bays: None,
            extra_masses: Vec::new(),
            mesh_factor: 2 * self.lf.mesh_factor,
            ..self.hf.clone()
        };
        FidelityPair { lf: self.lf.clone(), hf, availability: self.availability }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerConfig {
    pub eta1: f64,
    pub eta2: f64,
    pub radius0: f64,
    pub radius_max: f64,
    pub radius_min: f64,
    pub max_iterations: usize,
    pub hf_budget: usize,
    /// Weight on the largest constraint violation in the merit function.
    pub penalty: f64,
    /// Stop when the scaled step and merit decrease fall below this.
    pub tolerance: f64,
    pub inner_iterations: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            eta1: 0.1,
            eta2: 0.75,
            radius0: 0.1,
            radius_max: 1.0,
            radius_min: 1e-6,
            max_iterations: 50,
            hf_budget: 100,
            penalty: 10.0,
            tolerance: 1e-6,
            inner_iterations: 60,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub directory: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { directory: PathBuf::from("mfat-output") }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    /// JSON Schema of the config document, as shipped in `configs/schema.json`.
    pub fn schema_json() -> String {
        let schema = schemars::schema_for!(RunConfig);
        serde_json::to_string_pretty(&schema).expect("schema serializes") + "\n"
    }

    /// Output directory after applying the environment override.
    pub fn output_dir(&self) -> PathBuf {
        std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from).unwrap_or_else(|| self.output.directory.clone())
    }

    pub fn n_bays(&self) -> usize {
        self.structure.ribs.saturating_sub(1)
    }

    pub fn validate(&self) -> Result<()> {
        let cfg = |m: String| Err(Error::Config(m));
        self.planform.validate().map_err(|e| Error::Config(format!("planform: {e}")))?;
        self.materials.validate().map_err(|e| Error::Config(format!("materials: {e}")))?;
        let s = &self.structure;
        if s.ribs < 2 {
            return cfg("structure.ribs must be at least 2".into());
        }
        if !(0.0 <= s.front_spar && s.front_spar < s.rear_spar && s.rear_spar <= 1.0) {
            return cfg("structure: spar positions must satisfy 0 <= front < rear <= 1".into());
        }
        if !(s.box_height > 0.0 && s.shear_factor > 0.0 && s.damping_ratio >= 0.0) {
            return cfg("structure: box_height and shear_factor must be positive, damping_ratio non-negative".into());
        }
        if !(s.thickness_bounds[0] > 0.0 && s.thickness_bounds[1] > s.thickness_bounds[0]) {
            return cfg("structure.thickness_bounds must be positive and increasing".into());
        }
        if s.nonstructural_mass_per_area < 0.0 || s.fixed_mass < 0.0 {
            return cfg("structure: masses must be non-negative".into());
        }
        let p = &self.panels;
        if p.zones == 0 || p.zones > self.n_bays() {
            return cfg(format!("panels.zones must lie in 1..={}", self.n_bays()));
        }
        let init = p.initial.design();
        if !init.lp.in_box() || !(init.thickness > 0.0) {
            return cfg("panels.initial: lamination parameters must lie in [-1, 1] and thickness be positive".into());
        }
        let l = &self.loadcases;
        if l.cases.is_empty() {
            return cfg("loadcases.cases is empty".into());
        }
        if !(l.aircraft_mass > 0.0 && l.alpha_bounds[0] < l.alpha_bounds[1]) {
            return cfg("loadcases: aircraft_mass must be positive and alpha_bounds increasing".into());
        }
        for (i, c) in l.cases.iter().enumerate() {
            if !(c.speed >= 0.0 && c.density > 0.0 && (0.0..1.0).contains(&c.mach)) {
                return cfg(format!("loadcases.cases[{i}]: needs speed >= 0, density > 0, 0 <= mach < 1"));
            }
        }
        for (name, f) in [("lf", &self.fidelity.lf), ("hf", &self.fidelity.hf)] {
            if f.mesh_factor == 0 || f.nx == 0 || f.strips_per_bay == 0 || f.plate_terms == 0 {
                return cfg(format!("fidelity.{name}: mesh_factor, nx, strips_per_bay and plate_terms must be >= 1"));
            }
            if !(f.knockdown > 0.0 && f.knockdown <= 1.0) {
                return cfg(format!("fidelity.{name}.knockdown must lie in (0, 1]"));
            }
            if let Some(bays) = &f.knockdown_bays {
                if bays.iter().any(|&b| b >= self.n_bays()) {
                    return cfg(format!("fidelity.{name}.knockdown_bays references a missing bay"));
                }
            }
            for m in f.extra_masses.iter().chain(&s.point_masses) {
                if !((0.0..=1.0).contains(&m.span_fraction) && m.mass >= 0.0) {
                    return cfg(format!("fidelity.{name}: mass positions need span_fraction in [0, 1] and mass >= 0"));
                }
            }
        }
        if self.fidelity.lf.mesh_factor > self.fidelity.hf.mesh_factor {
            return cfg("fidelity: hf.mesh_factor must not be below lf.mesh_factor".into());
        }
        let o = &self.optimizer;
        if !(0.0 < o.eta1 && o.eta1 < o.eta2 && o.eta2 < 1.0) {
            return cfg("optimizer: need 0 < eta1 < eta2 < 1".into());
        }
        if !(0.0 < o.radius_min && o.radius_min <= o.radius0 && o.radius0 <= o.radius_max) {
            return cfg("optimizer: need 0 < radius_min <= radius0 <= radius_max".into());
        }
        Ok(())
    }

    /// Benchmark transport wing with per-bay, per-wall design panels.
    pub fn benchmark() -> Self {
        let mut planform = Planform::single(14.0, 5.0, 1.5, 25f64.to_radians());
        planform.aileron = Some(Aileron { y_start: 9.5, y_end: 13.0, chord_fraction: 0.25 });
        RunConfig {
            planform,
            structure: StructureConfig::default(),
            materials: MaterialProperties::carbon_epoxy(),
            panels: PanelConfig {
                zones: 29,
                grouping: Grouping::PerWall,
                initial: InitialPanel { xi_a: [0.0; 4], xi_d: [0.0; 4], thickness: 0.02 },
            },
            loadcases: LoadCaseConfig {
                aircraft_mass: 36_000.0,
                gravity: 9.81,
                alpha_bounds: [-12f64.to_radians(), 12f64.to_radians()],
                eta_min: 0.3,
                cases: vec![
                    LoadCase { name: "pull_up".into(), load_factor: 2.5, speed: 140.0, mach: 0.69, density: 1.225 },
                    LoadCase { name: "push_over".into(), load_factor: -1.0, speed: 140.0, mach: 0.69, density: 1.225 },
                ],
            },
            fidelity: FidelityPair {
                lf: FidelityConfig::default(),
                hf: FidelityConfig {
                    mesh_factor: 2,
                    nx: 6,
                    strips_per_bay: 2,
                    // from `calibrate_knockdown(.., 0.2399, ..)` at the initial design
                    knockdown: 0.735,
                    extra_masses: vec![
                        MassSpec { span_fraction: 0.35, chord_fraction: 0.3, mass: 40.0 },
                        MassSpec { span_fraction: 0.7, chord_fraction: 0.3, mass: 25.0 },
                    ],
                    ..FidelityConfig::default()
                },
                availability: AvailabilityMask::default(),
            },
            optimizer: OptimizerConfig::default(),
            output: OutputConfig::default(),
        }
    }

    /// Small wing with two design panels (skins, spars): 18 variables.
    pub fn toy() -> Self {
        let mut c = Self::benchmark();
        c.planform.segments = vec![PlanformSegment { span: 8.0, root_chord: 3.0, tip_chord: 1.2, sweep: 20f64.to_radians() }];
        c.planform.aileron = Some(Aileron { y_start: 5.5, y_end: 7.5, chord_fraction: 0.25 });
        c.structure.ribs = 9;
        c.panels = PanelConfig {
            zones: 1,
            grouping: Grouping::SkinsSpars,
            initial: InitialPanel { xi_a: [0.0; 4], xi_d: [0.0; 4], thickness: 0.03 },
        };
        c.loadcases.aircraft_mass = 8_000.0;
        c.fidelity.lf.state_modes = 12;
        c.fidelity.hf.state_modes = 12;
        c.fidelity.hf.knockdown = 0.8;
        c.fidelity.hf.extra_masses = vec![MassSpec { span_fraction: 0.5, chord_fraction: 0.3, mass: 10.0 }];
        c
    }
}
