//! Design vector to objective, constraints and gradients.
//!
//! Design variables are stored panel by panel as
//! `[ξA1, ξA2, ξA3, ξA4, ξD1, ξD2, ξD3, ξD4, t]`, panels numbered
//! `zone · groups + group`.
//!
//! Constraint ordering, for each load case in config order: Tsai-Wu
//! (panel-major, 8 each), panel buckling (region-major, 8 each), dynamic
//! stability (10), aileron effectiveness (1), angle of attack (upper then
//! lower bound per bay-midpoint section). Lamination feasibility (6 per
//! panel) follows once after all load cases. Entries not computed at a
//! fidelity level are left out of that level's vector.

mod evaluate;
mod gradient;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::fidelity::{Level, WingModel};
use crate::laminate::{LaminationParameters, PanelDesign};
use crate::{Error, Result};

pub use evaluate::{evaluate_raw, CaseRaw, RawOutputs, Selection};
pub use gradient::{fd_step_for, gradients};

/// Critical Tsai-Wu samples kept per design panel.
pub const K_STRENGTH: usize = 8;
/// Smallest buckling factors kept per region.
pub const K_BUCKLING: usize = 8;
/// Rightmost state-matrix eigenvalues kept per load case.
pub const K_STABILITY: usize = 10;
/// Variables per design panel.
pub const VARS_PER_PANEL: usize = 9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignVector {
    pub values: DVector<f64>,
}

impl DesignVector {
    pub fn from_panels(panels: &[PanelDesign]) -> Self {
        let mut v = DVector::zeros(VARS_PER_PANEL * panels.len());
        for (i, p) in panels.iter().enumerate() {
            let o = VARS_PER_PANEL * i;
            for (j, x) in p.lp.to_array().iter().enumerate() {
                v[o + j] = *x;
            }
            v[o + 8] = p.thickness;
        }
        Self { values: v }
    }

    /// Initial design of a model's config.
    pub fn initial(model: &WingModel) -> Self {
        Self::from_panels(&vec![model.config.panels.initial.design(); model.n_panels()])
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn n_panels(&self) -> usize {
        self.values.len() / VARS_PER_PANEL
    }

    pub fn panel(&self, i: usize) -> PanelDesign {
        let o = VARS_PER_PANEL * i;
        PanelDesign {
            lp: LaminationParameters::from_slice(&self.values.as_slice()[o..o + 8]),
            thickness: self.values[o + 8],
        }
    }

    pub fn panels(&self) -> Vec<PanelDesign> {
        (0..self.n_panels()).map(|i| self.panel(i)).collect()
    }

    pub fn validate(&self, n_panels: usize) -> Result<()> {
        if self.values.len() != VARS_PER_PANEL * n_panels {
            return Err(Error::invalid(format!(
                "design vector has {} entries, expected {}",
                self.values.len(),
                VARS_PER_PANEL * n_panels
            )));
        }
        for (i, p) in self.panels().iter().enumerate() {
            if !p.lp.in_box() {
                return Err(Error::invalid(format!("panel {i}: lamination parameters outside [-1, 1]")));
            }
            if !(p.thickness > 0.0 && p.thickness.is_finite()) {
                return Err(Error::invalid(format!("panel {i}: thickness must be positive")));
            }
        }
        Ok(())
    }

    /// Box bounds: lamination parameters in `[-1, 1]`, thickness within the configured bounds.
    pub fn bounds(n_panels: usize, thickness: [f64; 2]) -> (DVector<f64>, DVector<f64>) {
        let n = VARS_PER_PANEL * n_panels;
        let lo = DVector::from_fn(n, |i, _| if i % VARS_PER_PANEL == 8 { thickness[0] } else { -1.0 });
        let hi = DVector::from_fn(n, |i, _| if i % VARS_PER_PANEL == 8 { thickness[1] } else { 1.0 });
        (lo, hi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Category {
    #[serde(rename = "tw")]
    Tw,
    #[serde(rename = "b")]
    B,
    #[serde(rename = "ds")]
    Ds,
    #[serde(rename = "ae")]
    Ae,
    #[serde(rename = "AoA")]
    Aoa,
    #[serde(rename = "feas")]
    Feas,
}

impl Category {
    pub fn name(self) -> &'static str {
        match self {
            Category::Tw => "tw",
            Category::B => "b",
            Category::Ds => "ds",
            Category::Ae => "ae",
            Category::Aoa => "AoA",
            Category::Feas => "feas",
        }
    }

    /// Whether entries of this category are closed-form in the design variables.
    pub fn closed_form(self) -> bool {
        self == Category::Feas
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(rename_all = "lowercase")]
pub enum Availability {
    Lf,
    Hf,
    Both,
}

/// Identity of one constraint entry, stable across designs and levels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ConstraintMeta {
    pub category: Category,
    /// Load case index; `None` for design-level entries.
    pub load_case: Option<usize>,
    /// Panel (tw, feas), region (b) or section (AoA) id; 0 otherwise.
    pub entity: usize,
    /// Rank within a critical set, bound side for AoA, residual index for feas.
    pub slot: usize,
    pub availability: Availability,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintVector {
    pub values: DVector<f64>,
    pub meta: Vec<ConstraintMeta>,
}

impl ConstraintVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max_violation(&self) -> f64 {
        self.values.iter().fold(0.0, |m, &v| m.max(v))
    }

    /// Position of each meta key, for aligning vectors from different levels.
    pub fn position(&self, key: &ConstraintMeta) -> Option<usize> {
        self.meta.iter().position(|m| m == key)
    }
}

#[derive(Debug, Clone)]
pub struct ModelOutputs {
    /// Mass (kg).
    pub f: f64,
    pub c: ConstraintVector,
    pub grad_f: DVector<f64>,
    /// `G × D` Jacobian.
    pub grad_c: DMatrix<f64>,
    /// Rows whose derivative is unreliable because a selected eigenvalue is nearly repeated.
    pub nonsmooth: Vec<usize>,
}

/// Full constraint layout of a model, before availability filtering.
pub fn layout(model: &WingModel) -> Vec<ConstraintMeta> {
    let mask = model.availability();
    let mut out = Vec::new();
    let mut push = |category: Category, load_case: Option<usize>, entity: usize, slot: usize| {
        out.push(ConstraintMeta { category, load_case, entity, slot, availability: mask.get(category) });
    };
    for lc in 0..model.n_cases() {
        for p in 0..model.n_panels() {
            for s in 0..K_STRENGTH {
                push(Category::Tw, Some(lc), p, s);
            }
        }
        for r in 0..model.n_regions() {
            for s in 0..K_BUCKLING {
                push(Category::B, Some(lc), r, s);
            }
        }
        for s in 0..K_STABILITY {
            push(Category::Ds, Some(lc), 0, s);
        }
        push(Category::Ae, Some(lc), 0, 0);
        for sec in 0..model.n_bays() {
            push(Category::Aoa, Some(lc), sec, 0);
            push(Category::Aoa, Some(lc), sec, 1);
        }
    }
    for p in 0..model.n_panels() {
        for s in 0..6 {
            push(Category::Feas, None, p, s);
        }
    }
    out
}

/// Layout entries computed at the model's level.
pub fn level_layout(model: &WingModel) -> Vec<ConstraintMeta> {
    layout(model).into_iter().filter(|m| model.level.computes(m.availability)).collect()
}

/// `n_lc (8 n_p + 8 n_region + 10 + 1 + 2 n_sec) + 6 n_p`.
pub fn full_length(n_cases: usize, n_panels: usize, n_regions: usize, n_sections: usize) -> usize {
    n_cases * (K_STRENGTH * n_panels + K_BUCKLING * n_regions + K_STABILITY + 1 + 2 * n_sections) + 6 * n_panels
}

/// Structural mass `Σ ρ area t` plus the fixed non-structural mass.
pub fn objective_mass(x: &DesignVector, model: &WingModel) -> Result<f64> {
    if x.n_panels() != model.n_panels() {
        return Err(Error::invalid("design vector does not match the panel layout"));
    }
    let rho = model.config.materials.rho;
    let mut f = model.config.structure.fixed_mass;
    for (i, area) in model.panel_area.iter().enumerate() {
        let t = x.values[VARS_PER_PANEL * i + 8];
        if !(t > 0.0) {
            return Err(Error::invalid(format!("panel {i}: thickness must be positive")));
        }
        f += rho * area * t;
    }
    Ok(f)
}

/// Closed-form gradient of [`objective_mass`].
pub fn objective_gradient(model: &WingModel) -> DVector<f64> {
    let rho = model.config.materials.rho;
    let mut g = DVector::zeros(VARS_PER_PANEL * model.n_panels());
    for (i, area) in model.panel_area.iter().enumerate() {
        g[VARS_PER_PANEL * i + 8] = rho * area;
    }
    g
}

/// Objective and constraints without gradients.
pub fn evaluate_values(model: &WingModel, x: &DesignVector) -> Result<(f64, ConstraintVector)> {
    let raw = evaluate_raw(model, x)?;
    let sel = Selection::baseline(&raw);
    Ok((objective_mass(x, model)?, sel.constraints(model, &raw)))
}

/// Objective, constraints and their gradients at `x`.
pub fn evaluate(model: &WingModel, x: &DesignVector) -> Result<ModelOutputs> {
    let raw = evaluate_raw(model, x)?;
    let sel = Selection::baseline(&raw);
    let c = sel.constraints(model, &raw);
    let (grad_c, nonsmooth) = gradients(model, x, &raw, &sel, &c)?;
    Ok(ModelOutputs { f: objective_mass(x, model)?, c, grad_f: objective_gradient(model), grad_c, nonsmooth })
}

/// Handle used by the optimizer: a wing model at one level.
pub trait Model: Sync {
    fn level(&self) -> Level;
    fn n_vars(&self) -> usize;
    /// Box bounds `(lower, upper)` of the design variables.
    fn bounds(&self) -> (DVector<f64>, DVector<f64>);
    fn evaluate(&self, x: &DVector<f64>) -> Result<ModelOutputs>;
    fn evaluate_values(&self, x: &DVector<f64>) -> Result<(f64, ConstraintVector)>;
}

impl Model for WingModel {
    fn level(&self) -> Level {
        self.level
    }

    fn n_vars(&self) -> usize {
        VARS_PER_PANEL * self.n_panels()
    }

    fn bounds(&self) -> (DVector<f64>, DVector<f64>) {
        DesignVector::bounds(self.n_panels(), self.config.structure.thickness_bounds)
    }

    fn evaluate(&self, x: &DVector<f64>) -> Result<ModelOutputs> {
        evaluate(self, &DesignVector { values: x.clone() })
    }

    fn evaluate_values(&self, x: &DVector<f64>) -> Result<(f64, ConstraintVector)> {
        evaluate_values(self, &DesignVector { values: x.clone() })
    }
}
