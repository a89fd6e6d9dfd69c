//! Finite-difference gradients with frozen critical-value selection.
//!
//! Each column re-runs all analyses at a perturbed design and reads the
//! constraint values through the baseline selection. Lamination
//! feasibility rows are replaced by their closed-form Jacobian.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::evaluate::{evaluate_raw, RawOutputs, Selection};
use super::{Category, ConstraintVector, DesignVector, VARS_PER_PANEL};
use crate::fidelity::WingModel;
use crate::laminate::feasibility_jacobian;
use crate::Result;

/// Default step `1e-6 (1 + |x|)`.
pub fn fd_step_for(x: f64) -> f64 {
    1e-6 * (1.0 + x.abs())
}

/// Admissible interval of design variable `j` for perturbation.
fn admissible(j: usize) -> (f64, f64) {
    if j % VARS_PER_PANEL == 8 {
        (0.0, f64::INFINITY)
    } else {
        (-1.0, 1.0)
    }
}

pub fn gradients(
    model: &WingModel,
    x: &DesignVector,
    raw: &RawOutputs,
    sel: &Selection,
    c: &ConstraintVector,
) -> Result<(DMatrix<f64>, Vec<usize>)> {
    let n = x.len();
    let values_at = |xv: DVector<f64>| -> Result<DVector<f64>> {
        let r = evaluate_raw(model, &DesignVector { values: xv })?;
        Ok(sel.constraints(model, &r).values)
    };
    let columns = (0..n)
        .into_par_iter()
        .map(|j| {
            let xj = x.values[j];
            let h = fd_step_for(xj);
            let (lo, hi) = admissible(j);
            let shifted = |d: f64| {
                let mut v = x.values.clone();
                v[j] = xj + d;
                v
            };
            if xj - h > lo && xj + h < hi {
                Ok((values_at(shifted(h))? - values_at(shifted(-h))?) / (2.0 * h))
            } else if xj + 2.0 * h <= hi {
                let (a, b) = (values_at(shifted(h))?, values_at(shifted(2.0 * h))?);
                Ok((a * 4.0 - b - &c.values * 3.0) / (2.0 * h))
            } else {
                let (a, b) = (values_at(shifted(-h))?, values_at(shifted(-2.0 * h))?);
                Ok((&c.values * 3.0 - a * 4.0 + b) / (2.0 * h))
            }
        })
        .collect::<Result<Vec<DVector<f64>>>>()?;
    let mut g = DMatrix::zeros(c.len(), n);
    for (j, col) in columns.iter().enumerate() {
        g.set_column(j, col);
    }
    for (row, m) in c.meta.iter().enumerate() {
        if m.category == Category::Feas {
            let jac = feasibility_jacobian(&x.panel(m.entity).lp);
            g.row_mut(row).fill(0.0);
            for k in 0..8 {
                g[(row, VARS_PER_PANEL * m.entity + k)] = jac[m.slot][k];
            }
        }
    }
    Ok((g, sel.nonsmooth_rows(c, raw)))
}
