//! SQP building blocks shared by the trust-region subproblem and the
//! single-fidelity baseline. All steps are taken in scaled variables
//! `u = (x − lo) / (hi − lo)`.

use nalgebra::{DMatrix, DVector};

use super::correction::{Surrogate, SurrogateOutputs};
use super::qp::{solve_relaxed, QpProblem};
use crate::{Error, Result, SENTINEL};

#[derive(Debug, Clone)]
pub struct Scaling {
    pub lo: DVector<f64>,
    pub range: DVector<f64>,
}

impl Scaling {
    pub fn new(lo: &DVector<f64>, hi: &DVector<f64>) -> Result<Self> {
        let range = hi - lo;
        if lo.len() != hi.len() || range.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return Err(Error::invalid("design bounds must be finite with lower < upper"));
        }
        Ok(Self { lo: lo.clone(), range })
    }

    pub fn to_u(&self, x: &DVector<f64>) -> DVector<f64> {
        (x - &self.lo).component_div(&self.range)
    }

    pub fn to_x(&self, u: &DVector<f64>) -> DVector<f64> {
        &self.lo + u.component_mul(&self.range)
    }

    pub fn grad(&self, g: &DVector<f64>) -> DVector<f64> {
        g.component_mul(&self.range)
    }

    pub fn jac(&self, j: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = j.clone();
        for (k, mut col) in out.column_iter_mut().enumerate() {
            col *= self.range[k];
        }
        out
    }
}

/// Largest entry clipped at zero; padding entries never count.
pub fn violation(c: &DVector<f64>) -> f64 {
    c.iter().fold(0.0, |m, &v| if v.is_nan() { f64::INFINITY } else { m.max(v) })
}

/// `f / f0 + w · max(0, max c)`.
pub fn merit(f: f64, c: &DVector<f64>, f0: f64, w: f64) -> f64 {
    let v = f / f0 + w * violation(c);
    if v.is_finite() { v } else { f64::INFINITY }
}

/// Damped BFGS update that keeps `b` positive definite.
pub fn bfgs_update(b: &mut DMatrix<f64>, s: &DVector<f64>, y: &DVector<f64>) {
    let bs = &*b * s;
    let sbs = s.dot(&bs);
    if !(sbs > 1e-300) || !y.iter().all(|v| v.is_finite()) {
        return;
    }
    let sy = s.dot(y);
    let theta = if sy >= 0.2 * sbs { 1.0 } else { 0.8 * sbs / (sbs - sy) };
    let r = y * theta + &bs * (1.0 - theta);
    let sr = s.dot(&r);
    if !(sr > 0.0) {
        return;
    }
    *b += &r * r.transpose() / sr - &bs * bs.transpose() / sbs;
    let bt = b.transpose();
    let eig = ((&*b + bt) * 0.5).symmetric_eigen();
    // nonsmooth constraint gradients can drive the update towards singular
    // or huge curvature; clip the spectrum
    let top = eig.eigenvalues.amax().clamp(1e-8, B_MAX);
    let vals = eig.eigenvalues.map(|v| v.clamp(top * 1e-8, B_MAX));
    *b = &eig.eigenvectors * DMatrix::from_diagonal(&vals) * eig.eigenvectors.transpose();
}

/// Largest curvature kept in the scaled Hessian approximation.
const B_MAX: f64 = 1e4;

#[derive(Debug, Clone)]
pub struct QpStep {
    pub d: DVector<f64>,
    /// Multipliers for every row (zero for rows left out of the QP).
    pub z: DVector<f64>,
    /// Largest linearized violation `max(0, max(c + J d))`.
    pub lin_violation: f64,
    pub relaxed: bool,
}

/// Quadratic step `min gᵀd + ½ dᵀBd  s.t.  c + J d ≤ 0,  dlo ≤ d ≤ dhi`,
/// relaxed uniformly when the linearization is infeasible. Rows that cannot
/// reach zero anywhere in the step box are left out.
pub fn qp_step(
    b: &DMatrix<f64>,
    g: &DVector<f64>,
    c: &DVector<f64>,
    j: &DMatrix<f64>,
    dlo: &DVector<f64>,
    dhi: &DVector<f64>,
) -> Result<QpStep> {
    let n = g.len();
    let reach = DVector::from_fn(n, |k, _| dlo[k].abs().max(dhi[k].abs()));
    let mut keep = Vec::new();
    for i in 0..c.len() {
        if !(c[i] > 0.5 * SENTINEL) {
            continue;
        }
        let spread: f64 = (0..n).map(|k| j[(i, k)].abs() * reach[k]).sum();
        if c[i] + spread >= 0.0 {
            keep.push(i);
        }
    }
    // positive row scaling leaves the feasible set unchanged
    let scale: Vec<f64> = keep
        .iter()
        .map(|&i| 1.0 / (1.0f64).max(c[i].abs()).max(j.row(i).amax()))
        .collect();
    let a = DMatrix::from_fn(keep.len(), n, |r, k| scale[r] * j[(keep[r], k)]);
    let rhs = DVector::from_fn(keep.len(), |r, _| -scale[r] * c[keep[r]]);
    let qpp = QpProblem { h: b.clone(), g: g.clone(), a, b: rhs, lo: dlo.clone(), hi: dhi.clone() };
    let (sol, tau) = solve_relaxed(&qpp)?;
    let mut z = DVector::zeros(c.len());
    for (r, &i) in keep.iter().enumerate() {
        z[i] = sol.z[r] * scale[r];
    }
    let lin = c + j * &sol.x;
    Ok(QpStep { d: sol.x, z, lin_violation: violation(&lin), relaxed: tau > 0.0 })
}

/// Gradient of `f/f0 + zᵀc` in scaled variables.
fn lagrangian_grad(sc: &Scaling, o: &SurrogateOutputs, z: &DVector<f64>, f0: f64) -> DVector<f64> {
    let gf = o.grad_f.as_ref().expect("gradient evaluated");
    let jc = o.grad_c.as_ref().expect("gradient evaluated");
    sc.grad(&(gf / f0 + jc.transpose() * z))
}

#[derive(Debug, Clone)]
pub struct SubproblemResult {
    /// Trial point in design units.
    pub x: DVector<f64>,
    /// Corrected-model outputs at the trial point.
    pub at_trial: SurrogateOutputs,
    /// `‖u_trial − u_center‖∞`.
    pub step_norm: f64,
    /// Corrected-model merit decrease.
    pub predicted: f64,
    /// The step came from relaxed linearizations (the corrected constraints
    /// could not all be met inside the trust region).
    pub restoration: bool,
    pub lf_only_violation: f64,
    pub iterations: usize,
}

/// Settings of the inner solve.
#[derive(Debug, Clone, Copy)]
pub struct InnerOptions {
    pub f0: f64,
    pub penalty: f64,
    pub max_iterations: usize,
    pub tolerance: f64,
}

/// Minimizes the corrected model inside `‖u − u_c‖∞ ≤ Δ` and the box by SQP
/// with an ℓ∞ merit line search. `b` is the scaled Lagrangian Hessian
/// approximation, updated in place.
pub fn solve_subproblem(
    sur: &Surrogate,
    sc: &Scaling,
    xc: &DVector<f64>,
    at_center: &SurrogateOutputs,
    radius: f64,
    b: &mut DMatrix<f64>,
    opts: InnerOptions,
) -> Result<SubproblemResult> {
    if !(radius > 0.0) {
        return Err(Error::invalid("trust radius must be positive"));
    }
    let uc = sc.to_u(xc);
    let n = uc.len();
    let box_lo = DVector::from_fn(n, |k, _| (uc[k] - radius).max(0.0));
    let box_hi = DVector::from_fn(n, |k, _| (uc[k] + radius).min(1.0));
    let f0 = opts.f0;
    let mut w = opts.penalty;
    let mut u = uc.clone();
    let mut cur = at_center.clone();
    let mut restoration = false;
    let mut iterations = 0;

    for _ in 0..opts.max_iterations {
        iterations += 1;
        let g = sc.grad(cur.grad_f.as_ref().expect("gradient evaluated")) / f0;
        let jac = sc.jac(cur.grad_c.as_ref().expect("gradient evaluated"));
        let dlo = &box_lo - &u;
        let dhi = &box_hi - &u;
        let Ok(step) = qp_step(b, &g, &cur.c, &jac, &dlo, &dhi) else { break };
        restoration = step.relaxed;
        if step.d.amax() <= opts.tolerance {
            break;
        }
        w = w.max(1.5 * step.z.sum());
        let phi = merit(cur.f, &cur.c, f0, w);
        let theta = violation(&cur.c);
        let slope = g.dot(&step.d) + w * (step.lin_violation - theta);
        // near a solution the QP tolerance can leave the slope at round-off
        // level; then only the full step with plain decrease is tried
        let descent = slope < -1e-15 * (1.0 + phi.abs());
        let slope = slope.min(0.0);
        let clamp = |v: DVector<f64>| DVector::from_fn(n, |k, _| v[k].clamp(box_lo[k], box_hi[k]));
        let eval = |v: &DVector<f64>| -> Option<(f64, SurrogateOutputs)> {
            let o = sur.evaluate(&sc.to_x(v), false).ok()?;
            let m = merit(o.f, &o.c, f0, w);
            m.is_finite().then_some((m, o))
        };
        let mut next = None;
        let mut alpha = 1.0;
        for attempt in 0..if descent { 30 } else { 1 } {
            let ut = clamp(&u + &step.d * alpha);
            let trial = eval(&ut);
            if let Some((m, _)) = &trial {
                if *m <= phi + 1e-4 * alpha * slope && (descent || *m < phi) {
                    next = Some(ut);
                    break;
                }
            }
            if attempt == 0 {
                // second-order correction against curvature of the constraints
                if let Some((_, o)) = &trial {
                    let c_soc = &o.c - &jac * &step.d;
                    if let Ok(soc) = qp_step(b, &g, &c_soc, &jac, &dlo, &dhi) {
                        let us = clamp(&u + &soc.d);
                        if let Some((m, _)) = eval(&us) {
                            if m <= phi + 1e-4 * slope && (descent || m < phi) {
                                next = Some(us);
                                break;
                            }
                        }
                    }
                }
            }
            alpha *= 0.5;
        }
        let Some(un) = next else { break };
        let Ok(new) = sur.evaluate(&sc.to_x(&un), true) else { break };
        let s = &un - &u;
        let y = lagrangian_grad(sc, &new, &step.z, f0) - lagrangian_grad(sc, &cur, &step.z, f0);
        bfgs_update(b, &s, &y);
        u = un;
        cur = new;
        if s.amax() <= opts.tolerance {
            break;
        }
    }

    let predicted = merit(at_center.f, &at_center.c, f0, opts.penalty) - merit(cur.f, &cur.c, f0, opts.penalty);
    Ok(SubproblemResult {
        x: sc.to_x(&u),
        step_norm: (&u - &uc).amax(),
        predicted,
        restoration,
        lf_only_violation: sur.passthrough_violation(&cur.c),
        at_trial: cur,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bfgs_keeps_positive_definite_and_satisfies_secant() {
        let mut b = DMatrix::identity(2, 2);
        let s = DVector::from_vec(vec![1.0, 0.5]);
        let y = DVector::from_vec(vec![3.0, 1.0]);
        bfgs_update(&mut b, &s, &y);
        assert!(((&b * &s) - &y).amax() < 1e-12);
        // negative curvature is damped, not applied
        let y_bad = DVector::from_vec(vec![-1.0, 0.0]);
        bfgs_update(&mut b, &s, &y_bad);
        assert!(b.clone().cholesky().is_some());
    }

    #[test]
    fn rows_out_of_reach_are_dropped() {
        let b = DMatrix::identity(1, 1);
        let g = DVector::from_vec(vec![-10.0]);
        let c = DVector::from_vec(vec![-5.0, -0.05, SENTINEL]);
        let j = DMatrix::from_column_slice(3, 1, &[1.0, 1.0, 1.0]);
        let lo = DVector::from_vec(vec![-0.1]);
        let hi = DVector::from_vec(vec![0.1]);
        let st = qp_step(&b, &g, &c, &j, &lo, &hi).unwrap();
        assert!((st.d[0] - 0.05).abs() < 1e-8);
        assert_eq!(st.z[0], 0.0);
        assert!(st.z[1] > 0.0);
        assert!(!st.relaxed);
    }
}
