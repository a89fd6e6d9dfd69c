//! Per-load-case analyses and the critical-value selection applied to them.

use std::collections::HashMap;

use nalgebra::{DVector, Matrix3};
use rayon::prelude::*;

use super::{
    level_layout, Category, ConstraintVector, DesignVector, K_BUCKLING, K_STABILITY, K_STRENGTH,
};
use crate::aero::statespace::state_space;
use crate::aeroelastic::aileron::aileron_effectiveness;
use crate::aeroelastic::equilibrium::{static_aeroelastic_solve, EquilibriumState, StaticOptions, Trim};
use crate::aeroelastic::stability::{dynamic_stability, rayleigh_damping};
use crate::beam::analysis::{modal_with, SolveMode};
use crate::beam::section::oriented;
use crate::fidelity::{CaseData, Structure, WingModel};
use crate::laminate::{abd_from_lp, feasibility_residuals, select_critical, tsai_wu_factor, Criticality, PanelDesign};
use crate::linalg::C64;
use crate::{Error, Result, SENTINEL};

/// Sample points along each wall for stress recovery.
const WALL_SAMPLES: usize = 9;
/// Newton tolerance floor inside evaluations, so that finite differences
/// see converged equilibria.
const EVAL_TOL: f64 = 1e-10;

/// Uncondensed analysis results of one load case.
#[derive(Debug, Clone)]
pub struct CaseRaw {
    pub equilibrium: EquilibriumState,
    /// Tsai-Wu index minus one at every sample of each design panel.
    pub tw: Vec<Vec<f64>>,
    /// Ascending positive buckling factors of each region.
    pub b: Vec<Vec<f64>>,
    /// State-matrix eigenvalues by descending real part.
    pub ds: Vec<C64>,
    pub ae: Option<f64>,
    /// Local angle of attack at each bay midpoint (rad).
    pub aoa: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct RawOutputs {
    pub cases: Vec<CaseRaw>,
    pub feas: Vec<[f64; 6]>,
}

/// Frozen choice of critical entries, so that perturbed designs report the
/// same physical quantities as the baseline.
#[derive(Debug, Clone)]
pub struct Selection {
    /// `[case][panel]` sample indices.
    pub tw: Vec<Vec<Vec<usize>>>,
    /// `[case][region]` baseline factors.
    pub b: Vec<Vec<Vec<f64>>>,
    /// `[case]` baseline eigenvalues.
    pub ds: Vec<Vec<C64>>,
}

fn tagged<T>(r: Result<T>, stage: &str) -> Result<T> {
    r.map_err(|e| e.in_stage(stage))
}

/// Runs every analysis of every load case at `x`.
pub fn evaluate_raw(model: &WingModel, x: &DesignVector) -> Result<RawOutputs> {
    x.validate(model.n_panels())?;
    let panels = x.panels();
    let structure = tagged(model.structure(&panels), "structure")?;
    let d_matrices = bending_stiffness(model, &panels)?;
    let cases = model
        .cases
        .par_iter()
        .map(|case| analyze_case(model, &structure, &d_matrices, case))
        .collect::<Result<Vec<_>>>()?;
    let feas = panels.iter().map(|p| feasibility_residuals(&p.lp)).collect();
    Ok(RawOutputs { cases, feas })
}

fn bending_stiffness(model: &WingModel, panels: &[PanelDesign]) -> Result<HashMap<(usize, bool), Matrix3<f64>>> {
    let mut out = HashMap::new();
    for r in &model.regions {
        if let std::collections::hash_map::Entry::Vacant(v) = out.entry((r.panel, r.mirrored)) {
            let abd = tagged(abd_from_lp(&oriented(&panels[r.panel], r.mirrored), &model.config.materials), "laminate")?;
            v.insert(abd.d);
        }
    }
    Ok(out)
}

fn analyze_case(
    model: &WingModel,
    s: &Structure,
    d_matrices: &HashMap<(usize, bool), Matrix3<f64>>,
    case: &CaseData,
) -> Result<CaseRaw> {
    let sys = &s.system;
    let n = case.case.load_factor;
    let mut opts: StaticOptions = model.fidelity.static_options;
    opts.newton.tol = opts.newton.tol.min(EVAL_TOL);
    let f_e = model.gravity_load(sys, n);
    let eq = tagged(
        static_aeroelastic_solve(sys, &case.ops, &f_e, Trim::Lift(model.lift_target(n)), &opts),
        "trim",
    )?;
    let p = &eq.p;
    let k_t = match opts.mode {
        SolveMode::Linear => sys.k.clone(),
        SolveMode::Nonlinear => sys.tangent(p),
    };

    // strength: laminate-average stresses at both element ends
    let material = &model.config.materials;
    let mut tw = vec![Vec::new(); model.n_panels()];
    for (e, info) in model.elements.iter().enumerate() {
        let sm = &s.sections[e];
        for frac in [0.0, 1.0] {
            let strain = s.compliance[e] * sys.element_resultants(e, p, frac);
            for (w, seg) in info.section.segments.iter().enumerate() {
                let t = sm.wall_thickness(w);
                for k in 0..WALL_SAMPLES {
                    let (nx, nxs) = sm.wall_resultants(w, k as f64 / (WALL_SAMPLES - 1) as f64, &strain);
                    tw[seg.panel].push(tsai_wu_factor([nx / t, 0.0, nxs / t], material) - 1.0);
                }
            }
        }
    }

    // local buckling: bay-averaged resultants on each wall
    let mut b = Vec::with_capacity(model.n_regions());
    for r in &model.regions {
        let bay = &model.bays[r.bay];
        let (mut nx, mut nxs) = (0.0, 0.0);
        let mut count = 0.0;
        for e in bay.elements.clone() {
            let strain = s.compliance[e] * sys.element_resultants(e, p, 0.5);
            for k in 0..WALL_SAMPLES {
                let (a, q) = s.sections[e].wall_resultants(r.wall, k as f64 / (WALL_SAMPLES - 1) as f64, &strain);
                nx += a;
                nxs += q;
                count += 1.0;
            }
        }
        let d = &d_matrices[&(r.panel, r.mirrored)];
        b.push(tagged(r.basis.factors(d, nx / count, 0.0, nxs / count), "panel buckling")?);
    }

    // dynamic stability about the trimmed state
    let m_ff = sys.reduce(&sys.m);
    let kt_ff = sys.reduce(&k_t);
    let ds = tagged(
        (|| {
            let w = modal_with(sys, &kt_ff, 2.min(sys.n_free()))?.omega;
            let (w1, w2) = (w[0], *w.last().unwrap_or(&w[0]));
            let c = rayleigh_damping(&m_ff, &kt_ff, model.config.structure.damping_ratio, w1, w2);
            let modes = match model.fidelity.state_modes {
                0 => None,
                r => Some(r.min(sys.n_free())),
            };
            let ss = state_space(
                &m_ff,
                &c,
                &kt_ff,
                &sys.reduce(&case.ops.k_a),
                &sys.reduce(&case.ops.c_a),
                &sys.reduce_vector(&case.ops.f_alpha),
                modes,
            )?;
            Ok(dynamic_stability(&ss.a, K_STABILITY)?.eigenvalues)
        })(),
        "dynamic stability",
    )?;

    let ae = match &model.antisymmetric {
        Some(anti) => Some(tagged(aileron_effectiveness(sys, &k_t, anti, &case.flow), "aileron effectiveness")?),
        None => None,
    };

    let aoa = model
        .bays
        .iter()
        .map(|bay| Ok(eq.alpha + model.twist_at(p, bay.y_mid)?))
        .collect::<Result<Vec<_>>>()?;

    Ok(CaseRaw { equilibrium: eq, tw, b, ds, ae, aoa })
}

fn pad(mut v: Vec<f64>, k: usize) -> Vec<f64> {
    v.resize(k, SENTINEL);
    v
}

/// Nearest unused candidate to each target.
fn match_nearest<T: Copy>(targets: &[T], candidates: &[T], dist: impl Fn(T, T) -> f64) -> Vec<Option<T>> {
    let mut used = vec![false; candidates.len()];
    targets
        .iter()
        .map(|&t| {
            let best = (0..candidates.len())
                .filter(|&i| !used[i])
                .min_by(|&i, &j| dist(t, candidates[i]).total_cmp(&dist(t, candidates[j])))?;
            used[best] = true;
            Some(candidates[best])
        })
        .collect()
}

impl Selection {
    /// Critical sets chosen at `raw`.
    pub fn baseline(raw: &RawOutputs) -> Self {
        let tw = raw
            .cases
            .iter()
            .map(|c| {
                c.tw.iter()
                    .map(|v| if v.is_empty() { Vec::new() } else { select_critical(v, K_STRENGTH, Criticality::Largest).unwrap_or_default() })
                    .collect()
            })
            .collect();
        let b = raw
            .cases
            .iter()
            .map(|c| c.b.iter().map(|v| v.iter().take(K_BUCKLING).copied().collect()).collect())
            .collect();
        let ds = raw.cases.iter().map(|c| c.ds.iter().take(K_STABILITY).copied().collect()).collect();
        Self { tw, b, ds }
    }

    /// Constraint values of `raw` under this selection. At the baseline
    /// this is the ordinary critical-value set; at perturbed designs each
    /// entry follows the same sample or the nearest eigenvalue.
    pub fn constraints(&self, model: &WingModel, raw: &RawOutputs) -> ConstraintVector {
        let lay = level_layout(model);
        let cfg = &model.config.loadcases;
        let mut per_case = Vec::with_capacity(raw.cases.len());
        for (lc, c) in raw.cases.iter().enumerate() {
            let tw: Vec<Vec<f64>> = self.tw[lc]
                .iter()
                .zip(&c.tw)
                .map(|(idx, v)| pad(idx.iter().map(|&i| v[i]).collect(), K_STRENGTH))
                .collect();
            let b: Vec<Vec<f64>> = self.b[lc]
                .iter()
                .zip(&c.b)
                .map(|(base, v)| {
                    let m = match_nearest(base, v, |a, b| (a - b).abs());
                    pad(m.into_iter().map(|l| l.map_or(SENTINEL, |l| 1.0 - l)).collect(), K_BUCKLING)
                })
                .collect();
            let ds = pad(
                match_nearest(&self.ds[lc], &c.ds, |a, b| (a - b).norm())
                    .into_iter()
                    .map(|z| z.map_or(SENTINEL, |z| z.re))
                    .collect(),
                K_STABILITY,
            );
            per_case.push((tw, b, ds));
        }
        let values = lay
            .iter()
            .map(|m| {
                let lc = m.load_case.unwrap_or(0);
                match m.category {
                    Category::Tw => per_case[lc].0[m.entity][m.slot],
                    Category::B => per_case[lc].1[m.entity][m.slot],
                    Category::Ds => per_case[lc].2[m.slot],
                    Category::Ae => raw.cases[lc].ae.map_or(SENTINEL, |eta| cfg.eta_min - eta),
                    Category::Aoa => {
                        let a = raw.cases[lc].aoa[m.entity];
                        if m.slot == 0 {
                            a - cfg.alpha_bounds[1]
                        } else {
                            cfg.alpha_bounds[0] - a
                        }
                    }
                    Category::Feas => raw.feas[m.entity][m.slot],
                }
            })
            .collect::<Vec<f64>>();
        ConstraintVector { values: DVector::from_vec(values), meta: lay }
    }

    /// Rows whose selected eigenvalue has a distinct neighbour closer than
    /// `1e-6` relative (conjugate partners excluded).
    pub fn nonsmooth_rows(&self, c: &ConstraintVector, raw: &RawOutputs) -> Vec<usize> {
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-6 * a.abs().max(b.abs());
        c.meta
            .iter()
            .enumerate()
            .filter(|(_, m)| {
                let lc = m.load_case.unwrap_or(0);
                match m.category {
                    Category::B => {
                        let Some(&l) = self.b[lc][m.entity].get(m.slot) else { return false };
                        let all = &raw.cases[lc].b[m.entity];
                        all.iter().filter(|&&o| close(o, l)).count() > 1
                    }
                    Category::Ds => {
                        let Some(&z) = self.ds[lc].get(m.slot) else { return false };
                        raw.cases[lc].ds.iter().any(|&o| {
                            o != z && o != z.conj() && (o - z).norm() <= 1e-6 * z.norm().max(o.norm())
                        })
                    }
                    _ => false,
                }
            })
            .map(|(i, _)| i)
            .collect()
    }
}

impl RawOutputs {
    pub fn case(&self, lc: usize) -> Result<&CaseRaw> {
        self.cases.get(lc).ok_or_else(|| Error::invalid(format!("no load case {lc}")))
    }
}
