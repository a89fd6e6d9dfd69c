//! Constraint compression applied before any model enters the optimizer.
//!
//! Entries below −1 are mapped through `s(c) = −1 − ln(−c)`; entries at or
//! above −1 are left alone. `s` is monotone and C¹, so the sign of every entry
//! and the violation `max(0, max c)` do not change. Buckling rows of lightly
//! loaded panels sit near −10⁶ and behave like `t³`; after compression they
//! are nearly linear in the design, so linearizations and additive
//! corrections stay meaningful over a trust region.

use nalgebra::DVector;

use crate::constraints::{ConstraintVector, Model, ModelOutputs};
use crate::fidelity::Level;
use crate::{Result, SENTINEL};

/// Compressed value and slope `ds/dc`.
pub fn compress(c: f64) -> (f64, f64) {
    if c >= -1.0 || c <= 0.5 * SENTINEL || !c.is_finite() {
        (c, 1.0)
    } else {
        (-1.0 - (-c).ln(), -1.0 / c)
    }
}

fn compress_vector(c: &mut ConstraintVector) -> Vec<f64> {
    c.values
        .iter_mut()
        .map(|v| {
            let (s, ds) = compress(*v);
            *v = s;
            ds
        })
        .collect()
}

/// A model whose constraint entries are compressed.
pub struct Compressed<'a>(pub &'a dyn Model);

impl Model for Compressed<'_> {
    fn level(&self) -> Level {
        self.0.level()
    }

    fn n_vars(&self) -> usize {
        self.0.n_vars()
    }

    fn bounds(&self) -> (DVector<f64>, DVector<f64>) {
        self.0.bounds()
    }

    fn evaluate(&self, x: &DVector<f64>) -> Result<ModelOutputs> {
        let mut o = self.0.evaluate(x)?;
        let slopes = compress_vector(&mut o.c);
        for (i, ds) in slopes.into_iter().enumerate() {
            if ds != 1.0 {
                o.grad_c.row_mut(i).scale_mut(ds);
            }
        }
        Ok(o)
    }

    fn evaluate_values(&self, x: &DVector<f64>) -> Result<(f64, ConstraintVector)> {
        let (f, mut c) = self.0.evaluate_values(x)?;
        compress_vector(&mut c);
        Ok((f, c))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn compression_keeps_sign_and_order(a in -1e8f64..10.0, b in -1e8f64..10.0) {
            let (sa, da) = compress(a);
            let (sb, _) = compress(b);
            prop_assert_eq!(sa > 0.0, a > 0.0);
            prop_assert_eq!(a < b, sa < sb);
            prop_assert!(da > 0.0 && da <= 1.0);
            if a >= -1.0 {
                prop_assert_eq!(sa, a);
            }
        }
    }

    #[test]
    fn slope_matches_difference_and_join_is_smooth() {
        for c in [-1.0f64 - 1e-9, -3.0, -4e6] {
            let h = 1e-6 * c.abs();
            let fd = (compress(c + h).0 - compress(c - h).0) / (2.0 * h);
            assert!((fd - compress(c).1).abs() < 1e-6 * compress(c).1);
        }
        assert_eq!(compress(SENTINEL).0, SENTINEL);
    }
}
