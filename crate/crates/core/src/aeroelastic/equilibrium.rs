//! Static aeroelastic equilibrium `f_s(p) − f_a(p, α) − f_e = 0`, with an
//! optional trim equation that frees `α` to meet a lift target.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::aero::statespace::AeroOperators;
use crate::beam::analysis::{NewtonOptions, SolveMode};
use crate::beam::model::AssembledSystem;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, schemars::JsonSchema, Default)]
#[serde(default)]
pub struct StaticOptions {
    pub mode: SolveMode,
    pub newton: NewtonOptions,
}

/// Converged equilibrium.
#[derive(Debug, Clone)]
pub struct EquilibriumState {
    /// Full-length displacements.
    pub p: DVector<f64>,
    pub alpha: f64,
    pub residual: f64,
    pub iterations: usize,
}

/// What the equilibrium holds fixed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Trim {
    /// Fixed angle of attack (rad).
    Alpha(f64),
    /// Free angle of attack; total lift must equal the target (N).
    Lift(f64),
}

/// Solves the coupled equilibrium with the aerodynamic load linear in
/// displacement and `α`: `f_a = K_a p + f_α α`. External load `f_e` and the
/// trim target are ramped over the configured load steps.
pub fn static_aeroelastic_solve(
    system: &AssembledSystem,
    aero: &AeroOperators,
    f_e: &DVector<f64>,
    trim: Trim,
    opts: &StaticOptions,
) -> Result<EquilibriumState> {
    let n = system.n_dof();
    if f_e.len() != n || aero.k_a.nrows() != n {
        return Err(Error::invalid("load or aerodynamic operator size does not match the structure"));
    }
    let free = &system.free;
    let nf = free.len();
    let ka_ff = system.reduce(&aero.k_a);
    let fa_f = system.reduce_vector(&aero.f_alpha);
    let lift_f = system.reduce_vector(&aero.lift_p);
    let trimmed = matches!(trim, Trim::Lift(_));
    let dim = nf + usize::from(trimmed);

    let (steps, max_iter, tol) = match opts.mode {
        SolveMode::Linear => (1, 3, opts.newton.tol),
        SolveMode::Nonlinear => (opts.newton.load_steps.max(1), opts.newton.max_iter, opts.newton.tol),
    };
    let mut p = DVector::zeros(n);
    let mut alpha = 0.0;
    let mut iterations = 0;
    let mut residual = 0.0;
    for step in 1..=steps {
        let lam = step as f64 / steps as f64;
        let fe = f_e * lam;
        let (alpha_fixed, lift_target) = match trim {
            Trim::Alpha(a) => (Some(a * lam), 0.0),
            Trim::Lift(l) => (None, l * lam),
        };
        if let Some(a) = alpha_fixed {
            alpha = a;
        }
        let mut converged = false;
        for _ in 0..=max_iter {
            let fs = match opts.mode {
                SolveMode::Linear => &system.k * &p,
                SolveMode::Nonlinear => system.internal_force(&p),
            };
            let fa = &aero.k_a * &p + &aero.f_alpha * alpha;
            let r_full = &fs - &fa - &fe;
            let r = system.reduce_vector(&r_full);
            let scale = system.reduce_vector(&(&fa + &fe)).norm().max(f64::MIN_POSITIVE);
            let lift_res = if trimmed {
                aero.lift_p.dot(&p) + aero.lift_alpha * alpha - lift_target
            } else {
                0.0
            };
            residual = r.norm() / scale;
            let lift_ok = !trimmed || lift_res.abs() <= tol * lift_target.abs().max(f64::MIN_POSITIVE);
            if residual <= tol && lift_ok {
                converged = true;
                break;
            }
            if fe.norm() == 0.0 && fa.norm() == 0.0 && !trimmed {
                converged = true;
                residual = 0.0;
                break;
            }
            let kt = match opts.mode {
                SolveMode::Linear => system.reduce(&system.k),
                SolveMode::Nonlinear => system.reduce(&system.tangent(&p)),
            };
            let mut jac = DMatrix::zeros(dim, dim);
            jac.view_mut((0, 0), (nf, nf)).copy_from(&(kt - &ka_ff));
            let mut rhs = DVector::zeros(dim);
            rhs.rows_mut(0, nf).copy_from(&(-r));
            if trimmed {
                jac.view_mut((0, nf), (nf, 1)).copy_from(&(-&fa_f));
                jac.view_mut((nf, 0), (1, nf)).copy_from(&lift_f.transpose());
                jac[(nf, nf)] = aero.lift_alpha;
                rhs[nf] = -lift_res;
            }
            let dx = jac.lu().solve(&rhs).ok_or_else(|| {
                Error::Singular("aeroelastic tangent is singular (divergence dynamic pressure exceeded?)".into())
            })?;
            for (i, &d) in free.iter().enumerate() {
                p[d] += dx[i];
            }
            if trimmed {
                alpha += dx[nf];
            }
            iterations += 1;
            if !p.iter().all(|v| v.is_finite()) || !alpha.is_finite() {
                return Err(Error::NonConvergence("aeroelastic Newton iterate diverged".into()));
            }
        }
        if !converged {
            return Err(Error::NonConvergence(format!(
                "aeroelastic equilibrium did not converge at load factor {lam} (residual {residual:.3e})"
            )));
        }
    }
    Ok(EquilibriumState { p, alpha, residual, iterations })
}
