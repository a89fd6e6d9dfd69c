//! Two-variable constrained pair with a known solution, for exercising the
//! optimizers without the wing analysis.
//!
//! HF: `f = (x − a)ᵀ Q (x − a)`, `c = x1 + x2 − 2 ≤ 0`, box `[−3, 3]²`.
//! LF adds `e (p1 x1 + p2 x2 + p3 sin x1 cos x2)` to `f` and
//! `e (p4 sin(x1 − x2) + p5 x1 + p6)` to `c`.

use nalgebra::{DMatrix, DVector, Matrix2, Vector2};

use crate::constraints::{Availability, Category, ConstraintMeta, ConstraintVector, Model, ModelOutputs};
use crate::fidelity::Level;
use crate::{Error, Result};

pub const START: [f64; 2] = [-2.0, -2.0];

#[derive(Debug, Clone)]
pub struct AnalyticModel {
    pub level: Level,
    pub q: Matrix2<f64>,
    pub a: Vector2<f64>,
    /// `[p1, p2, p3, p4, p5, p6]`.
    pub terms: [f64; 6],
    /// Scale of the LF discrepancy; 0 makes LF identical to HF.
    pub discrepancy: f64,
    /// Optional LF-only bound `x1 ≤ value`.
    pub lf_only_bound: Option<f64>,
}

impl AnalyticModel {
    pub fn hf() -> Self {
        Self {
            level: Level::Hf,
            q: Matrix2::new(1.0, 0.0, 0.0, 100.0),
            a: Vector2::new(2.0, 1.0),
            terms: [0.1, -0.05, 0.02, 0.0, 0.05, -0.1],
            discrepancy: 1.0,
            lf_only_bound: None,
        }
    }

    pub fn lf() -> Self {
        Self { level: Level::Lf, ..Self::hf() }
    }

    /// Same pair at the other level.
    pub fn with_level(&self, level: Level) -> Self {
        Self { level, ..self.clone() }
    }

    /// KKT point and objective of the HF problem, assuming the constraint is active.
    pub fn kkt(&self) -> (Vector2<f64>, f64, f64) {
        let n = Vector2::new(1.0, 1.0);
        let qi = self.q.try_inverse().expect("Q is positive definite");
        let lambda = 2.0 * (n.dot(&self.a) - 2.0) / n.dot(&(qi * n));
        let x = self.a - qi * n * (0.5 * lambda);
        let d = x - self.a;
        (x, d.dot(&(self.q * d)), lambda)
    }

    fn meta(&self) -> Vec<ConstraintMeta> {
        let mut m = vec![ConstraintMeta {
            category: Category::Tw,
            load_case: None,
            entity: 0,
            slot: 0,
            availability: Availability::Both,
        }];
        if self.lf_only_bound.is_some() && self.level == Level::Lf {
            m.push(ConstraintMeta { category: Category::Ae, load_case: None, entity: 0, slot: 0, availability: Availability::Lf });
        }
        m
    }

    fn check(&self, x: &DVector<f64>) -> Result<Vector2<f64>> {
        if x.len() != 2 || !x.iter().all(|v| v.is_finite()) {
            return Err(Error::invalid("analytic model takes two finite variables"));
        }
        Ok(Vector2::new(x[0], x[1]))
    }

    fn lf_weight(&self) -> f64 {
        if self.level == Level::Lf { self.discrepancy } else { 0.0 }
    }
}

impl Model for AnalyticModel {
    fn level(&self) -> Level {
        self.level
    }

    fn n_vars(&self) -> usize {
        2
    }

    fn bounds(&self) -> (DVector<f64>, DVector<f64>) {
        (DVector::from_element(2, -3.0), DVector::from_element(2, 3.0))
    }

    fn evaluate(&self, x: &DVector<f64>) -> Result<ModelOutputs> {
        let (f, c) = self.evaluate_values(x)?;
        let v = self.check(x)?;
        let (x1, x2) = (v[0], v[1]);
        let e = self.lf_weight();
        let [p1, p2, p3, p4, p5, _] = self.terms;
        let g = (self.q + self.q.transpose()) * (v - self.a);
        let grad_f = DVector::from_vec(vec![
            g[0] + e * (p1 + p3 * x1.cos() * x2.cos()),
            g[1] + e * (p2 - p3 * x1.sin() * x2.sin()),
        ]);
        let dc = e * p4 * (x1 - x2).cos();
        let mut rows = vec![1.0 + dc + e * p5, 1.0 - dc];
        if c.len() == 2 {
            rows.extend([1.0, 0.0]);
        }
        let grad_c = DMatrix::from_row_slice(c.len(), 2, &rows);
        Ok(ModelOutputs { f, c, grad_f, grad_c, nonsmooth: vec![] })
    }

    fn evaluate_values(&self, x: &DVector<f64>) -> Result<(f64, ConstraintVector)> {
        let v = self.check(x)?;
        let (x1, x2) = (v[0], v[1]);
        let e = self.lf_weight();
        let [p1, p2, p3, p4, p5, p6] = self.terms;
        let d = v - self.a;
        let f = d.dot(&(self.q * d)) + e * (p1 * x1 + p2 * x2 + p3 * x1.sin() * x2.cos());
        let mut c = vec![x1 + x2 - 2.0 + e * (p4 * (x1 - x2).sin() + p5 * x1 + p6)];
        let meta = self.meta();
        if meta.len() == 2 {
            c.push(x1 - self.lf_only_bound.unwrap_or(f64::INFINITY));
        }
        Ok((f, ConstraintVector { values: DVector::from_vec(c), meta }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gradients_match_central_differences() {
        let curved = AnalyticModel { terms: [0.1, 0.2, 0.3, 0.05, 0.1, 0.1], lf_only_bound: Some(1.0), ..AnalyticModel::lf() };
        for m in [AnalyticModel::hf(), AnalyticModel::lf(), curved] {
            let x = DVector::from_vec(vec![0.7, -1.3]);
            let o = m.evaluate(&x).unwrap();
            let h = 1e-6;
            for k in 0..2 {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[k] += h;
                xm[k] -= h;
                let (fp, cp) = m.evaluate_values(&xp).unwrap();
                let (fm, cm) = m.evaluate_values(&xm).unwrap();
                assert!(((fp - fm) / (2.0 * h) - o.grad_f[k]).abs() < 1e-6 * (1.0 + o.grad_f[k].abs()));
                for i in 0..o.c.len() {
                    assert!(((cp.values[i] - cm.values[i]) / (2.0 * h) - o.grad_c[(i, k)]).abs() < 1e-8);
                }
            }
        }
    }

    #[test]
    fn hf_kkt_conditions_hold() {
        let m = AnalyticModel::hf();
        let (x, f, lambda) = m.kkt();
        assert!(lambda > 0.0);
        let o = m.evaluate(&DVector::from_column_slice(x.as_slice())).unwrap();
        assert!((o.f - f).abs() < 1e-14);
        assert!(o.c.values[0].abs() < 1e-14);
        assert!((o.grad_f + o.grad_c.row(0).transpose() * lambda).amax() < 1e-13);
    }
}
