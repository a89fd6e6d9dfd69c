//! LF versus HF comparison cases with HF as the reference: tip loads,
//! structural modes, and aeroelastic eigenvalues at a flow point.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::aero::statespace::state_space;
use crate::aero::vlm::FlowConditions;
use crate::aeroelastic::stability::rayleigh_damping;
use crate::beam::analysis::{modal, static_solve, NewtonOptions, SolveMode};
use crate::beam::model::{AssembledSystem, DOF_PER_NODE};
use crate::fidelity::{make_hf, make_lf, WingModel};
use crate::harness::config::RunConfig;
use crate::harness::mac::{complexify, diagonal_dominance, mac_matrix, swapped_rows};
use crate::laminate::PanelDesign;
use crate::linalg::{eigenvector_for, general_eigenvalues, C64};
use crate::{DesignVector, Error, Result};

/// Thresholds behind the pass/fail flags.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub bending_max: f64,
    pub torsion_min: f64,
    /// Smallest structural MAC diagonal over the leading `mac_modes` modes.
    pub modal_mac: f64,
    pub aero_mac: f64,
    pub mac_modes: usize,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self { bending_max: 0.10, torsion_min: 0.15, modal_mac: 0.95, aero_mac: 0.9, mac_modes: 5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub name: String,
    pub lf: f64,
    pub hf: f64,
    pub rel_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Flag {
    pub name: String,
    pub value: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub case: u8,
    pub title: String,
    pub rows: Vec<ComparisonRow>,
    /// `[re, im]` per eigenvalue; frequencies (rad/s) as `[0, ω]` for the modal case.
    pub lf_eigenvalues: Vec<[f64; 2]>,
    pub hf_eigenvalues: Vec<[f64; 2]>,
    /// `mac[i][j]` between LF shape `i` and HF shape `j`.
    pub mac: Option<DMatrix<f64>>,
    pub flags: Vec<Flag>,
}

impl ComparisonReport {
    pub fn row(&self, name: &str) -> Option<&ComparisonRow> {
        self.rows.iter().find(|r| r.name == name)
    }

    pub fn flag(&self, name: &str) -> Option<bool> {
        self.flags.iter().find(|f| f.name == name).map(|f| f.value)
    }

    fn push_flag(&mut self, name: &str, value: bool) {
        self.flags.push(Flag { name: name.into(), value });
    }
}

/// `|a − b| / |b|`.
pub fn relative_error(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / b.abs()
    }
}

fn row(name: impl Into<String>, lf: f64, hf: f64) -> ComparisonRow {
    ComparisonRow { name: name.into(), lf, hf, rel_error: relative_error(lf, hf) }
}

/// LF and HF handles built from one config.
pub struct ModelPair {
    pub lf: WingModel,
    pub hf: WingModel,
}

impl ModelPair {
    pub fn new(config: &RunConfig) -> Result<Self> {
        Ok(Self { lf: make_lf(config)?, hf: make_hf(config)? })
    }

    fn designs(&self, design: Option<&DesignVector>) -> Result<Vec<PanelDesign>> {
        match design {
            Some(d) => {
                d.validate(self.lf.n_panels())?;
                Ok(d.panels())
            }
            None => Ok(DesignVector::initial(&self.lf).panels()),
        }
    }
}

fn tip_response(model: &WingModel, panels: &[PanelDesign], dof: usize, dof_out: usize) -> Result<f64> {
    let s = model.structure(panels)?;
    let tip = model.tip();
    let mut f = DVector::zeros(s.system.n_dof());
    f[DOF_PER_NODE * tip + dof] = 1.0;
    let p = static_solve(&s.system, &f, SolveMode::Linear, &NewtonOptions::default())?;
    Ok(p[DOF_PER_NODE * tip + dof_out])
}

/// Tip deflection under a unit tip `F_z` and tip twist under a unit tip `M_y`
/// (linear statics; compliance per unit load).
pub fn compare_static(pair: &ModelPair, design: Option<&DesignVector>, th: &Thresholds) -> Result<ComparisonReport> {
    let panels = pair.designs(design)?;
    let bend = row("tip_deflection_fz", tip_response(&pair.lf, &panels, 2, 2)?, tip_response(&pair.hf, &panels, 2, 2)?);
    let tors = row("tip_twist_my", tip_response(&pair.lf, &panels, 4, 4)?, tip_response(&pair.hf, &panels, 4, 4)?);
    let mut r = ComparisonReport {
        case: 1,
        title: "static tip loads".into(),
        rows: vec![],
        lf_eigenvalues: vec![],
        hf_eigenvalues: vec![],
        mac: None,
        flags: vec![],
    };
    r.push_flag("bending_within_threshold", bend.rel_error < th.bending_max);
    r.push_flag("torsion_beyond_threshold", tors.rel_error > th.torsion_min);
    r.rows = vec![bend, tors];
    Ok(r)
}

/// Entries of full-length vectors at the rib nodes, all six DoF each.
fn at_ribs(model: &WingModel, v: &DVector<C64>) -> DVector<C64> {
    let idx: Vec<usize> = model
        .rib_nodes
        .iter()
        .flat_map(|&n| (0..DOF_PER_NODE).map(move |d| DOF_PER_NODE * n + d))
        .collect();
    DVector::from_iterator(idx.len(), idx.iter().map(|&i| v[i]))
}

fn check_shared_ribs(pair: &ModelPair) -> Result<()> {
    if pair.lf.rib_nodes.len() != pair.hf.rib_nodes.len() {
        return Err(Error::invalid("LF and HF models have different rib counts"));
    }
    Ok(())
}

/// Natural frequencies and the structural MAC over the first `n` modes.
pub fn compare_modal(pair: &ModelPair, design: Option<&DesignVector>, n: usize, th: &Thresholds) -> Result<ComparisonReport> {
    check_shared_ribs(pair)?;
    let panels = pair.designs(design)?;
    let run = |m: &WingModel| -> Result<(Vec<f64>, Vec<DVector<C64>>)> {
        let s = m.structure(&panels)?;
        let modes = modal(&s.system, n)?;
        let shapes = (0..n).map(|i| at_ribs(m, &complexify(&modes.shapes.column(i).into_owned()))).collect();
        Ok((modes.omega, shapes))
    };
    let (wl, sl) = run(&pair.lf)?;
    let (wh, sh) = run(&pair.hf)?;
    let mac = mac_matrix(&sl, &sh)?;
    let hz = 0.5 / std::f64::consts::PI;
    let mut r = ComparisonReport {
        case: 2,
        title: "structural modes".into(),
        rows: (0..n).map(|i| row(format!("frequency_hz_{}", i + 1), wl[i] * hz, wh[i] * hz)).collect(),
        lf_eigenvalues: wl.iter().map(|&w| [0.0, w]).collect(),
        hf_eigenvalues: wh.iter().map(|&w| [0.0, w]).collect(),
        mac: None,
        flags: vec![],
    };
    finish_mac_flags(&mut r, mac, th.modal_mac, th.mac_modes);
    Ok(r)
}

fn finish_mac_flags(r: &mut ComparisonReport, mac: DMatrix<f64>, threshold: f64, lead: usize) {
    let k = lead.min(mac.nrows()).min(mac.ncols());
    let diag_ok = (0..k).all(|i| mac[(i, i)] > threshold);
    r.push_flag("mode_swap", !swapped_rows(&mac).is_empty());
    r.push_flag("mac_diagonal_above_threshold", diag_ok);
    r.rows.push(row("mac_diagonal_dominance", diagonal_dominance(&mac), 1.0));
    r.mac = Some(mac);
}

/// Oscillatory eigenvalues (positive imaginary part, ascending) of the
/// quasi-steady state matrix at `flow`, with displacement shapes at the ribs.
pub fn aeroelastic_modes(model: &WingModel, panels: &[PanelDesign], flow: &FlowConditions, n: usize) -> Result<Vec<(C64, DVector<C64>)>> {
    flow.validate()?;
    let s = model.structure(panels)?;
    let sys: &AssembledSystem = &s.system;
    let m = sys.reduce(&sys.m);
    let k = sys.reduce(&sys.k);
    let w = modal(sys, 2.min(sys.n_free()))?.omega;
    let c = rayleigh_damping(&m, &k, model.config.structure.damping_ratio, w[0], *w.last().unwrap_or(&w[0]));
    let ops = model.symmetric.jacobians(flow);
    let modes = match model.fidelity.state_modes {
        0 => None,
        r => Some(r.min(sys.n_free())),
    };
    let ss = state_space(&m, &c, &k, &sys.reduce(&ops.k_a), &sys.reduce(&ops.c_a), &sys.reduce_vector(&ops.f_alpha), modes)?;
    let mut ev: Vec<C64> = general_eigenvalues(&ss.a)?.into_iter().filter(|z| z.im > 0.0).collect();
    ev.sort_by(|a, b| a.im.total_cmp(&b.im));
    ev.truncate(n);
    ev.into_iter()
        .map(|z| {
            let v = eigenvector_for(&ss.a, z)?;
            let free = ss.displacement(&v);
            let mut full = DVector::from_element(sys.n_dof(), C64::new(0.0, 0.0));
            for (i, &d) in sys.free.iter().enumerate() {
                full[d] = free[i];
            }
            Ok((z, at_ribs(model, &full)))
        })
        .collect()
}

/// Complex eigenvalues and complex MAC of the LF and HF state matrices at `flow`.
pub fn compare_aeroelastic(
    pair: &ModelPair,
    design: Option<&DesignVector>,
    flow: &FlowConditions,
    n: usize,
    th: &Thresholds,
) -> Result<ComparisonReport> {
    check_shared_ribs(pair)?;
    let panels = pair.designs(design)?;
    let lf = aeroelastic_modes(&pair.lf, &panels, flow, n)?;
    let hf = aeroelastic_modes(&pair.hf, &panels, flow, n)?;
    let k = lf.len().min(hf.len());
    if k == 0 {
        return Err(Error::NonConvergence("no oscillatory aeroelastic modes at the flow point".into()));
    }
    let sl: Vec<_> = lf.iter().take(k).map(|p| p.1.clone()).collect();
    let sh: Vec<_> = hf.iter().take(k).map(|p| p.1.clone()).collect();
    let mac = mac_matrix(&sl, &sh)?;
    let mut rows = Vec::new();
    for i in 0..k {
        rows.push(row(format!("eigenvalue_re_{}", i + 1), lf[i].0.re, hf[i].0.re));
        rows.push(row(format!("eigenvalue_im_{}", i + 1), lf[i].0.im, hf[i].0.im));
    }
    let mut r = ComparisonReport {
        case: 3,
        title: format!("aeroelastic eigenvalues at V = {} m/s, Ma = {}", flow.speed, flow.mach),
        rows,
        lf_eigenvalues: lf.iter().take(k).map(|p| [p.0.re, p.0.im]).collect(),
        hf_eigenvalues: hf.iter().take(k).map(|p| [p.0.re, p.0.im]).collect(),
        mac: None,
        flags: vec![],
    };
    r.push_flag("lf_stable", lf.iter().all(|p| p.0.re < 0.0));
    r.push_flag("hf_stable", hf.iter().all(|p| p.0.re < 0.0));
    finish_mac_flags(&mut r, mac, th.aero_mac, th.mac_modes);
    Ok(r)
}

/// Flow point of the aeroelastic case: given speed and Mach, density of the
/// first load case, zero incidence.
pub fn cruise_flow(config: &RunConfig, speed: f64, mach: f64) -> FlowConditions {
    let density = config.loadcases.cases.first().map_or(1.225, |c| c.density);
    FlowConditions { speed, density, mach, alpha: 0.0 }
}

/// The config with the HF physics set equal to the LF physics (no
/// knockdown, no extra masses); only the refinement differs.
pub fn matched_physics(config: &RunConfig) -> RunConfig {
    let mut c = config.clone();
    c.fidelity.hf.knockdown = 1.0;
    c.fidelity.hf.extra_masses.clear();
    c
}

/// Knockdown that makes the static torsion error equal `target`, by
/// bisection on `[lo, 1]` (the error falls as the knockdown rises).
pub fn calibrate_knockdown(config: &RunConfig, target: f64, lo: f64, tol: f64) -> Result<f64> {
    if !(0.0 < lo && lo < 1.0 && target > 0.0 && tol > 0.0) {
        return Err(Error::invalid("calibration needs 0 < lo < 1, target > 0, tol > 0"));
    }
    let lf = make_lf(config)?;
    let panels = DesignVector::initial(&lf).panels();
    let lf_twist = tip_response(&lf, &panels, 4, 4)?;
    let error_at = |kappa: f64| -> Result<f64> {
        let mut c = config.clone();
        c.fidelity.hf.knockdown = kappa;
        let hf = make_hf(&c)?;
        Ok(relative_error(lf_twist, tip_response(&hf, &panels, 4, 4)?))
    };
    let (mut a, mut b) = (lo, 1.0);
    let (ea, eb) = (error_at(a)?, error_at(b)?);
    if !(ea >= target && eb <= target) {
        return Err(Error::invalid(format!(
            "torsion error spans [{eb:.4}, {ea:.4}] over the knockdown bracket; target {target} is outside"
        )));
    }
    while b - a > tol {
        let mid = 0.5 * (a + b);
        if error_at(mid)? > target {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(0.5 * (a + b))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn identical(config: &RunConfig) -> ModelPair {
        let mut c = config.clone();
        c.fidelity.hf = c.fidelity.lf.clone();
        ModelPair::new(&c).unwrap()
    }

    #[test]
    fn identical_models_agree_in_every_case() {
        let cfg = RunConfig::toy();
        let pair = identical(&cfg);
        let th = Thresholds::default();
        let s = compare_static(&pair, None, &th).unwrap();
        assert!(s.rows.iter().all(|r| r.rel_error == 0.0));
        let m = compare_modal(&pair, None, 6, &th).unwrap();
        let mac = m.mac.as_ref().unwrap();
        for i in 0..6 {
            assert!((mac[(i, i)] - 1.0).abs() < 1e-10);
        }
        assert_eq!(m.flag("mode_swap"), Some(false));
        let a = compare_aeroelastic(&pair, None, &cruise_flow(&cfg, 140.0, 0.69), 6, &th).unwrap();
        let mac = a.mac.as_ref().unwrap();
        for i in 0..mac.nrows() {
            assert!((mac[(i, i)] - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn zero_speed_reduces_to_structural_modes() {
        let cfg = RunConfig::toy();
        let pair = ModelPair::new(&matched_physics(&cfg)).unwrap();
        let th = Thresholds::default();
        let flow = cruise_flow(&cfg, 0.0, 0.0);
        let modes = aeroelastic_modes(&pair.lf, &DesignVector::initial(&pair.lf).panels(), &flow, 4).unwrap();
        let s = pair.lf.structure(&DesignVector::initial(&pair.lf).panels()).unwrap();
        let w = modal(&s.system, 4).unwrap().omega;
        for (i, (z, _)) in modes.iter().enumerate() {
            // light Rayleigh damping shifts the damped frequency by ζ²
            assert!((z.norm() - w[i]).abs() < 1e-6 * w[i], "{z} vs {}", w[i]);
        }
        let a = compare_aeroelastic(&pair, None, &flow, 4, &th).unwrap();
        let m = compare_modal(&pair, None, 4, &th).unwrap();
        let (ma, mm) = (a.mac.unwrap(), m.mac.unwrap());
        for i in 0..4 {
            assert!((ma[(i, i)] - mm[(i, i)]).abs() < 1e-6);
        }
    }

    #[test]
    fn relative_error_uses_hf_denominator() {
        assert_eq!(relative_error(1.1, 1.0), 0.10000000000000009);
        assert_eq!(relative_error(2.0, 2.0), 0.0);
        assert!(relative_error(1.0, 0.0).is_infinite());
    }
}
