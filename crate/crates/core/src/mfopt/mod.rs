//! Trust-region model management with an additively corrected low-fidelity
//! model, and a single-fidelity trust-region SQP baseline.
//!
//! Both optimizers work in scaled variables `u = (x − lo) / (hi − lo)` so the
//! radius is in units of each variable's range. Progress is measured with the
//! merit `f / f0 + w · max(0, max c)`, where `f0` is the HF objective at the
//! start point and `w` is fixed for the run.

pub mod analytic;
pub mod compress;
pub mod correction;
pub mod qp;
pub mod sqp;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::constraints::{Model, ModelOutputs};
use crate::harness::config::OptimizerConfig;
use crate::{Error, Result};

pub use compress::{compress, Compressed};
pub use correction::{build_correction, lf_only_passthrough, CorrectionData, Partition, Surrogate, SurrogateOutputs};
pub use sqp::{merit, qp_step, solve_subproblem, InnerOptions, Scaling, SubproblemResult};

/// Low-fidelity-only rows count as satisfied up to this value.
pub const FEAS_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// The step and the predicted merit decrease vanished.
    Criticality,
    RadiusCollapsed,
    HfBudget,
    MaxIterations,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub iteration: usize,
    /// Centre after this iteration.
    pub x: Vec<f64>,
    pub f_hf: f64,
    pub max_violation: f64,
    pub merit: f64,
    /// Radius after the update.
    pub radius: f64,
    pub rho: Option<f64>,
    pub accepted: bool,
    pub hf_evaluations: usize,
    pub lf_evaluations: usize,
    /// Relative mismatch of the corrected model at the centre used this iteration.
    pub consistency_value: Option<f64>,
    pub consistency_gradient: Option<f64>,
    pub lf_only_violation: Option<f64>,
    pub restoration: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerReport {
    pub method: String,
    pub x: Vec<f64>,
    pub f: f64,
    pub max_violation: f64,
    pub merit: f64,
    pub iterations: usize,
    pub hf_evaluations: usize,
    pub lf_evaluations: usize,
    pub termination: Termination,
    pub diagnostic: String,
    pub trace: Vec<TraceEntry>,
}

impl OptimizerReport {
    /// Trace rows `iteration,f_hf,max_violation,merit,radius,rho,accepted,hf_evaluations,lf_evaluations`.
    pub fn trace_csv(&self) -> String {
        let mut s = String::from("iteration,f_hf,max_violation,merit,radius,rho,accepted,hf_evaluations,lf_evaluations\n");
        for t in &self.trace {
            let rho = t.rho.map(|r| format!("{r:.11e}")).unwrap_or_default();
            s.push_str(&format!(
                "{},{:.11e},{:.11e},{:.11e},{:.11e},{},{},{},{}\n",
                t.iteration, t.f_hf, t.max_violation, t.merit, t.radius, rho, t.accepted, t.hf_evaluations, t.lf_evaluations
            ));
        }
        s
    }
}

/// Centre, radius and counters of a trust-region run.
#[derive(Debug, Clone)]
pub struct TrustRegionState {
    pub center: DVector<f64>,
    pub radius: f64,
    pub iteration: usize,
    pub hf_evaluations: usize,
    pub lf_evaluations: usize,
    pub history: Vec<bool>,
}

impl TrustRegionState {
    /// Applies the ratio test; returns whether the step is accepted.
    fn update(&mut self, rho: Option<f64>, opts: &OptimizerConfig) -> bool {
        let accept = matches!(rho, Some(r) if r >= opts.eta1);
        match rho {
            Some(r) if r >= opts.eta2 => self.radius = (2.0 * self.radius).min(opts.radius_max),
            Some(r) if r >= opts.eta1 => {}
            _ => self.radius *= 0.5,
        }
        self.history.push(accept);
        accept
    }
}

fn check_options(opts: &OptimizerConfig) -> Result<()> {
    let ok = opts.eta1 > 0.0
        && opts.eta1 <= opts.eta2
        && opts.eta2 < 1.0
        && opts.radius_min > 0.0
        && opts.radius_min <= opts.radius0
        && opts.radius0 <= opts.radius_max
        && opts.penalty > 0.0
        && opts.tolerance > 0.0
        && opts.hf_budget > 0;
    if ok { Ok(()) } else { Err(Error::invalid("inconsistent optimizer options")) }
}

fn check_start(x0: &DVector<f64>, lo: &DVector<f64>, hi: &DVector<f64>) -> Result<()> {
    if x0.len() != lo.len() {
        return Err(Error::invalid(format!("start point has {} entries, model has {}", x0.len(), lo.len())));
    }
    if (0..x0.len()).any(|k| !(x0[k] >= lo[k] && x0[k] <= hi[k])) {
        return Err(Error::invalid("start point outside the design bounds"));
    }
    Ok(())
}

fn merit_of(o: &ModelOutputs, f0: f64, w: f64) -> f64 {
    merit(o.f, &o.c.values, f0, w)
}

fn entry(state: &TrustRegionState, hf: &ModelOutputs, f0: f64, w: f64) -> TraceEntry {
    TraceEntry {
        iteration: state.iteration,
        x: state.center.iter().copied().collect(),
        f_hf: hf.f,
        max_violation: sqp::violation(&hf.c.values),
        merit: merit_of(hf, f0, w),
        radius: state.radius,
        rho: None,
        accepted: false,
        hf_evaluations: state.hf_evaluations,
        lf_evaluations: state.lf_evaluations,
        consistency_value: None,
        consistency_gradient: None,
        lf_only_violation: None,
        restoration: false,
    }
}

fn report(method: &str, state: &TrustRegionState, hf: &ModelOutputs, f0: f64, w: f64, termination: Termination, trace: Vec<TraceEntry>) -> OptimizerReport {
    let diagnostic = match termination {
        Termination::Criticality => "step and predicted decrease below tolerance".to_string(),
        Termination::RadiusCollapsed => format!("trust radius {:.3e} fell below the minimum", state.radius),
        Termination::HfBudget => format!("high-fidelity budget of {} evaluations used", state.hf_evaluations),
        Termination::MaxIterations => format!("stopped after {} iterations", state.iteration),
    };
    OptimizerReport {
        method: method.to_string(),
        x: state.center.iter().copied().collect(),
        f: hf.f,
        max_violation: sqp::violation(&hf.c.values),
        merit: merit_of(hf, f0, w),
        iterations: state.iteration,
        hf_evaluations: state.hf_evaluations,
        lf_evaluations: state.lf_evaluations,
        termination,
        diagnostic,
        trace,
    }
}

fn stop_reason(state: &TrustRegionState, opts: &OptimizerConfig) -> Option<Termination> {
    if state.radius < opts.radius_min {
        Some(Termination::RadiusCollapsed)
    } else if state.hf_evaluations >= opts.hf_budget {
        Some(Termination::HfBudget)
    } else if state.iteration >= opts.max_iterations {
        Some(Termination::MaxIterations)
    } else {
        None
    }
}

fn critical(step_norm: f64, predicted: f64, merit: f64, tol: f64) -> bool {
    step_norm <= tol || predicted.abs() <= 1e-3 * tol * (1.0 + merit.abs())
}

/// Trust-region model management. Every HF evaluation returns values and
/// gradients and counts once; LF counts include every call made by the
/// subproblem solver.
pub fn trmm_optimize(x0: &DVector<f64>, lf: &dyn Model, hf: &dyn Model, opts: &OptimizerConfig) -> Result<OptimizerReport> {
    let lf = &Compressed(lf);
    check_options(opts)?;
    let hf = &Compressed(hf);
    let (lo, hi) = hf.bounds();
    check_start(x0, &lo, &hi)?;
    let sc = Scaling::new(&lo, &hi)?;
    let n = x0.len();
    let w = opts.penalty;

    let mut hf_c = hf.evaluate(x0)?;
    let f0 = hf_c.f.abs().max(f64::MIN_POSITIVE);
    let mut state = TrustRegionState {
        center: x0.clone(),
        radius: opts.radius0,
        iteration: 0,
        hf_evaluations: 1,
        lf_evaluations: 0,
        history: vec![],
    };
    let mut trace = vec![entry(&state, &hf_c, f0, w)];
    let mut b = DMatrix::identity(n, n);
    let mut lf_c: Option<ModelOutputs> = None;

    let termination = loop {
        if let Some(t) = stop_reason(&state, opts) {
            break t;
        }
        let lf_out = match lf_c.take() {
            Some(o) => o,
            None => {
                state.lf_evaluations += 1;
                lf.evaluate(&state.center)?
            }
        };
        let corr = build_correction(&state.center, &lf_out, &hf_c)?;
        let sur = Surrogate::new(lf, corr, &lf_out.c.meta)?;
        let (cv, cg) = sur.consistency(&lf_out, &hf_c);
        let at_center = sur.correct(&state.center, lf_out.f, &lf_out.c.values, Some((&lf_out.grad_f, &lf_out.grad_c)));
        let inner = InnerOptions { f0, penalty: w, max_iterations: opts.inner_iterations, tolerance: 1e-3 * opts.tolerance };
        let sub = solve_subproblem(&sur, &sc, &state.center, &at_center, state.radius, &mut b, inner)?;
        state.lf_evaluations += sur.evaluations();
        let merit_c = merit_of(&hf_c, f0, w);
        if critical(sub.step_norm, sub.predicted, merit_c, opts.tolerance) {
            break Termination::Criticality;
        }
        state.iteration += 1;
        let mut rho = None;
        let mut trial = None;
        if sub.predicted > 0.0 {
            state.hf_evaluations += 1;
            if let Ok(o) = hf.evaluate(&sub.x) {
                let actual = merit_c - merit_of(&o, f0, w);
                let lf_only_ok = sub.lf_only_violation <= FEAS_TOL
                    || sub.lf_only_violation < sur.passthrough_violation(&at_center.c);
                let r = actual / sub.predicted;
                rho = Some(if lf_only_ok || r < opts.eta1 { r } else { f64::NEG_INFINITY });
                trial = Some(o);
            }
        }
        let accepted = state.update(rho, opts);
        if accepted {
            state.center = sub.x.clone();
            hf_c = trial.expect("accepted steps have outputs");
        } else {
            lf_c = Some(lf_out);
        }
        let mut e = entry(&state, &hf_c, f0, w);
        e.rho = rho.filter(|r| r.is_finite());
        e.accepted = accepted;
        e.consistency_value = Some(cv);
        e.consistency_gradient = Some(cg);
        e.lf_only_violation = Some(sub.lf_only_violation);
        e.restoration = sub.restoration;
        trace.push(e);
    };
    Ok(report("trmm", &state, &hf_c, f0, w, termination, trace))
}

/// Single-fidelity trust-region SQP on one model: one QP per evaluation,
/// ratio of actual to QP-predicted merit decrease, damped BFGS Hessian.
pub fn baseline_optimize(x0: &DVector<f64>, hf: &dyn Model, opts: &OptimizerConfig) -> Result<OptimizerReport> {
    check_options(opts)?;
    let hf = &Compressed(hf);
    let (lo, hi) = hf.bounds();
    check_start(x0, &lo, &hi)?;
    let sc = Scaling::new(&lo, &hi)?;
    let n = x0.len();
    let w = opts.penalty;

    let mut hf_c = hf.evaluate(x0)?;
    let f0 = hf_c.f.abs().max(f64::MIN_POSITIVE);
    let mut state = TrustRegionState {
        center: x0.clone(),
        radius: opts.radius0,
        iteration: 0,
        hf_evaluations: 1,
        lf_evaluations: 0,
        history: vec![],
    };
    let mut trace = vec![entry(&state, &hf_c, f0, w)];
    let mut b = DMatrix::identity(n, n);

    let termination = loop {
        if let Some(t) = stop_reason(&state, opts) {
            break t;
        }
        let uc = sc.to_u(&state.center);
        let dlo = DVector::from_fn(n, |k, _| (uc[k] - state.radius).max(0.0) - uc[k]);
        let dhi = DVector::from_fn(n, |k, _| (uc[k] + state.radius).min(1.0) - uc[k]);
        let g = sc.grad(&hf_c.grad_f) / f0;
        let jac = sc.jac(&hf_c.grad_c);
        let step = match qp_step(&b, &g, &hf_c.c.values, &jac, &dlo, &dhi) {
            Ok(s) => s,
            Err(_) => {
                // a badly conditioned Hessian estimate; restart it once
                b = DMatrix::identity(n, n);
                match qp_step(&b, &g, &hf_c.c.values, &jac, &dlo, &dhi) {
                    Ok(s) => s,
                    Err(_) => {
                        state.iteration += 1;
                        state.update(None, opts);
                        let mut e = entry(&state, &hf_c, f0, w);
                        e.accepted = false;
                        trace.push(e);
                        continue;
                    }
                }
            }
        };
        let merit_c = merit_of(&hf_c, f0, w);
        let model = hf_c.f / f0 + g.dot(&step.d) + 0.5 * step.d.dot(&(&b * &step.d)) + w * step.lin_violation;
        let predicted = merit_c - model;
        let step_norm = step.d.amax();
        if critical(step_norm, predicted, merit_c, opts.tolerance) {
            break Termination::Criticality;
        }
        state.iteration += 1;
        let clamp = |d: &DVector<f64>| sc.to_x(&(&uc + d).zip_zip_map(&DVector::zeros(n), &DVector::from_element(n, 1.0), |v, l, h| v.clamp(l, h)));
        let mut xt = clamp(&step.d);
        let mut rho = None;
        let mut trial = None;
        if predicted > 0.0 {
            state.hf_evaluations += 1;
            if let Ok(mut o) = hf.evaluate(&xt) {
                let mut r = (merit_c - merit_of(&o, f0, w)) / predicted;
                if r < opts.eta1 && state.hf_evaluations < opts.hf_budget {
                    // second-order correction against curvature of the constraints
                    let c_soc = &o.c.values - &jac * &step.d;
                    if let Ok(soc) = qp_step(&b, &g, &c_soc, &jac, &dlo, &dhi) {
                        let xs = clamp(&soc.d);
                        state.hf_evaluations += 1;
                        if let Ok(os) = hf.evaluate(&xs) {
                            let rs = (merit_c - merit_of(&os, f0, w)) / predicted;
                            if rs > r {
                                (xt, o, r) = (xs, os, rs);
                            }
                        }
                    }
                }
                rho = Some(r);
                let lag = |m: &ModelOutputs| sc.grad(&(&m.grad_f / f0 + m.grad_c.transpose() * &step.z));
                let s = sc.to_u(&xt) - &uc;
                sqp::bfgs_update(&mut b, &s, &(lag(&o) - lag(&hf_c)));
                trial = Some(o);
            }
        }
        let accepted = state.update(rho, opts);
        if accepted {
            state.center = xt;
            hf_c = trial.expect("accepted steps have outputs");
        }
        let mut e = entry(&state, &hf_c, f0, w);
        e.rho = rho;
        e.accepted = accepted;
        e.restoration = step.relaxed;
        trace.push(e);
    };
    Ok(report("baseline", &state, &hf_c, f0, w, termination, trace))
}

#[cfg(test)]
mod tests {
    use super::analytic::{AnalyticModel, START};
    use super::*;

    fn opts(tol: f64) -> OptimizerConfig {
        OptimizerConfig { tolerance: tol, max_iterations: 200, hf_budget: 200, radius0: 1.0, ..OptimizerConfig::default() }
    }

    fn dist(x: &[f64]) -> f64 {
        let (k, _, _) = AnalyticModel::hf().kkt();
        (x[0] - k[0]).abs().max((x[1] - k[1]).abs())
    }

    #[test]
    fn trmm_reaches_kkt_point_with_fewer_hf_evaluations() {
        let x0 = DVector::from_column_slice(&START);
        let r = trmm_optimize(&x0, &AnalyticModel::lf(), &AnalyticModel::hf(), &opts(1e-10)).unwrap();
        let base = baseline_optimize(&x0, &AnalyticModel::hf(), &opts(1e-10)).unwrap();
        assert_eq!(r.termination, Termination::Criticality, "{}", r.diagnostic);
        assert!(dist(&r.x) < 1e-6, "{:?}", r.x);
        assert!(dist(&base.x) < 1e-6, "{:?}", base.x);
        assert!(r.hf_evaluations * 2 <= base.hf_evaluations, "{} vs {}", r.hf_evaluations, base.hf_evaluations);
        assert_eq!(r.trace.len(), r.iterations + 1);
        for t in &r.trace[1..] {
            assert!(t.consistency_value.unwrap() <= 1e-12);
            assert!(t.consistency_gradient.unwrap() <= 1e-10);
        }
    }

    #[test]
    fn exact_model_gives_unit_ratio_and_growing_radius() {
        let x0 = DVector::from_column_slice(&START);
        let lf = AnalyticModel { discrepancy: 0.0, ..AnalyticModel::lf() };
        let r = trmm_optimize(&x0, &lf, &AnalyticModel::hf(), &opts(1e-10)).unwrap();
        let o = opts(1e-10);
        let mut radius = o.radius0;
        for k in 1..r.trace.len() {
            let t = &r.trace[k];
            if r.trace[k - 1].merit - t.merit < 1e-6 {
                break;
            }
            assert!((t.rho.unwrap() - 1.0).abs() < 1e-6, "rho {:?}", t.rho);
            radius = (2.0 * radius).min(o.radius_max);
            assert_eq!(t.radius, radius);
        }
        assert_eq!(r.trace.last().unwrap().radius, o.radius_max);
        assert!(dist(&r.x) < 1e-6);
    }

    #[test]
    fn budget_of_one_returns_start() {
        let x0 = DVector::from_column_slice(&START);
        let o = OptimizerConfig { hf_budget: 1, ..OptimizerConfig::default() };
        let r = trmm_optimize(&x0, &AnalyticModel::lf(), &AnalyticModel::hf(), &o).unwrap();
        assert_eq!(r.termination, Termination::HfBudget);
        assert_eq!(r.x, START.to_vec());
        assert_eq!(r.hf_evaluations, 1);
        assert_eq!(r.trace.len(), 1);
        assert!(!r.diagnostic.is_empty());
    }

    #[test]
    fn accepted_merit_is_monotone_and_lf_only_rows_hold() {
        let x0 = DVector::from_column_slice(&START);
        let lf = AnalyticModel { lf_only_bound: Some(0.8), ..AnalyticModel::lf() };
        let r = trmm_optimize(&x0, &lf, &AnalyticModel::hf(), &opts(1e-10)).unwrap();
        let mut last = f64::INFINITY;
        for t in &r.trace {
            assert!(t.merit <= last);
            last = t.merit;
            if t.accepted {
                assert!(t.lf_only_violation.unwrap() <= FEAS_TOL);
            }
        }
        // the LF-only bound moves the solution to (0.8, 1)
        assert!((r.x[0] - 0.8).abs() < 1e-6 && (r.x[1] - 1.0).abs() < 1e-6, "{:?}", r.x);
    }

    /// `(x1 − 1)² + 2 (x2 + 0.5)² + x1 x2`, unconstrained.
    struct Quad;

    impl Model for Quad {
        fn level(&self) -> crate::fidelity::Level {
            crate::fidelity::Level::Hf
        }
        fn n_vars(&self) -> usize {
            2
        }
        fn bounds(&self) -> (DVector<f64>, DVector<f64>) {
            (DVector::from_element(2, -4.0), DVector::from_element(2, 4.0))
        }
        fn evaluate(&self, x: &DVector<f64>) -> Result<ModelOutputs> {
            let (f, c) = self.evaluate_values(x)?;
            let g = DVector::from_vec(vec![2.0 * (x[0] - 1.0) + x[1], 4.0 * (x[1] + 0.5) + x[0]]);
            Ok(ModelOutputs { f, c, grad_f: g, grad_c: DMatrix::zeros(0, 2), nonsmooth: vec![] })
        }
        fn evaluate_values(&self, x: &DVector<f64>) -> Result<(f64, crate::ConstraintVector)> {
            let f = (x[0] - 1.0).powi(2) + 2.0 * (x[1] + 0.5).powi(2) + x[0] * x[1];
            Ok((f, crate::ConstraintVector { values: DVector::zeros(0), meta: vec![] }))
        }
    }

    fn subproblem(m: &dyn Model, xc: &DVector<f64>, radius: f64) -> SubproblemResult {
        let o = m.evaluate(xc).unwrap();
        let sur = Surrogate::new(m, build_correction(xc, &o, &o).unwrap(), &o.c.meta).unwrap();
        let (lo, hi) = m.bounds();
        let sc = Scaling::new(&lo, &hi).unwrap();
        let at = sur.correct(xc, o.f, &o.c.values, Some((&o.grad_f, &o.grad_c)));
        let mut b = DMatrix::identity(2, 2);
        let inner = InnerOptions { f0: o.f.abs(), penalty: 10.0, max_iterations: 60, tolerance: 1e-13 };
        solve_subproblem(&sur, &sc, xc, &at, radius, &mut b, inner).unwrap()
    }

    #[test]
    fn subproblem_takes_newton_step_on_quadratic() {
        let xc = DVector::from_vec(vec![3.0, 3.0]);
        let s = subproblem(&Quad, &xc, 1.0);
        // stationary point of the quadratic: [2 1; 1 4] x = [2, -2]
        let h = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 4.0]);
        let exact = h.lu().solve(&DVector::from_vec(vec![2.0, -2.0])).unwrap();
        assert!((&s.x - exact).amax() < 1e-8, "{}", s.x);
        assert!(s.predicted > 0.0);
    }

    #[test]
    fn subproblem_stops_on_active_constraint_and_shrinks_with_radius() {
        let m = AnalyticModel::hf();
        let xc = DVector::from_column_slice(&START);
        let s = subproblem(&m, &xc, 1.0);
        assert!(dist(s.x.as_slice()) < 1e-8, "{}", s.x);
        let mut last = f64::INFINITY;
        for r in [1e-1, 1e-3, 1e-6] {
            let s = subproblem(&m, &xc, r);
            assert!(s.step_norm <= r * (1.0 + 1e-12) && s.step_norm < last);
            last = s.step_norm;
        }
    }

    #[test]
    fn linear_discrepancy_is_absorbed_by_the_correction() {
        let hf = AnalyticModel::hf();
        let lf = AnalyticModel { terms: [0.3, -0.2, 0.0, 0.0, 0.05, -0.1], ..AnalyticModel::lf() };
        let xc = DVector::from_vec(vec![0.4, -1.1]);
        let (lo, ho) = (lf.evaluate(&xc).unwrap(), hf.evaluate(&xc).unwrap());
        let sur = Surrogate::new(&lf, build_correction(&xc, &lo, &ho).unwrap(), &lo.c.meta).unwrap();
        for x in [[2.0, 2.0], [-3.0, 1.0], [0.0, 0.0]] {
            let x = DVector::from_column_slice(&x);
            let m = sur.evaluate(&x, true).unwrap();
            let h = hf.evaluate(&x).unwrap();
            assert!((m.f - h.f).abs() < 1e-12 * (1.0 + h.f.abs()));
            assert!((m.c[0] - h.c.values[0]).abs() < 1e-12);
            assert!((m.grad_f.unwrap() - h.grad_f).amax() < 1e-12);
        }
    }

    #[test]
    fn start_outside_box_is_rejected() {
        let x0 = DVector::from_vec(vec![5.0, 0.0]);
        assert!(trmm_optimize(&x0, &AnalyticModel::lf(), &AnalyticModel::hf(), &OptimizerConfig::default()).is_err());
    }
}
