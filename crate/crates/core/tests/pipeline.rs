use mfat_core::constraints::{layout, objective_gradient, objective_mass, Category, Model};
use mfat_core::fidelity::{make_hf, make_lf, WingModel};
use mfat_core::laminate::lp_from_stack;
use mfat_core::{DesignVector, PanelDesign, RunConfig, SENTINEL};
use proptest::prelude::*;
use std::sync::OnceLock;

fn toy_lf() -> &'static WingModel {
    static M: OnceLock<WingModel> = OnceLock::new();
    M.get_or_init(|| make_lf(&RunConfig::toy()).unwrap())
}

fn design(angles: &[Vec<f64>], t: &[f64]) -> DesignVector {
    let panels: Vec<PanelDesign> = angles
        .iter()
        .zip(t)
        .map(|(a, &t)| PanelDesign { lp: lp_from_stack(a).unwrap(), thickness: t })
        .collect();
    DesignVector::from_panels(&panels)
}

fn stack() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(prop::sample::select(vec![0.0, 45.0, -45.0, 90.0, 30.0, -60.0]), 2..8)
        .prop_map(|v| v.into_iter().map(f64::to_radians).collect())
}

#[test]
fn toy_levels_share_the_constraint_layout() {
    let cfg = RunConfig::toy();
    let (lf, hf) = (make_lf(&cfg).unwrap(), make_hf(&cfg).unwrap());
    assert_eq!(layout(&lf), layout(&hf));
    let x = DesignVector::initial(&lf).values;
    let (_, cl) = lf.evaluate_values(&x).unwrap();
    let (_, ch) = hf.evaluate_values(&x).unwrap();
    // the LF-only rows are absent from the HF vector
    let lf_only = cl.meta.iter().filter(|m| m.availability == mfat_core::Availability::Lf).count();
    assert_eq!(cl.len(), ch.len() + lf_only);
    assert!(cl.meta.iter().any(|m| m.category == Category::Ae));
    assert!(!ch.meta.iter().any(|m| m.category == Category::Ae));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn stacked_designs_evaluate_to_finite_constraints(
        a in stack(), b in stack(), t0 in 0.02f64..0.05, t1 in 0.02f64..0.05,
    ) {
        let m = toy_lf();
        let x = design(&[a, b], &[t0, t1]);
        let (f, c) = m.evaluate_values(&x.values).unwrap();
        prop_assert!(f > 0.0);
        for (v, meta) in c.values.iter().zip(&c.meta) {
            prop_assert!(v.is_finite(), "{meta:?}");
            prop_assert!(*v == SENTINEL || *v > -1e12, "{meta:?}: {v}");
            if meta.category == Category::Feas {
                // stacking sequences are lamination-feasible
                prop_assert!(*v <= 1e-9, "{meta:?}: {v}");
            }
        }
    }

    #[test]
    fn mass_is_affine_in_thickness(t0 in 0.01f64..0.06, t1 in 0.01f64..0.06, s in 0.5f64..2.0) {
        let m = toy_lf();
        let stacks = [vec![0.0, 0.5], vec![0.3, -0.3]];
        let x = design(&stacks, &[t0, t1]);
        let y = design(&stacks, &[s * t0, s * t1]);
        let fixed = m.config.structure.fixed_mass;
        let (fx, fy) = (objective_mass(&x, m).unwrap(), objective_mass(&y, m).unwrap());
        prop_assert!(((fy - fixed) - s * (fx - fixed)).abs() <= 1e-10 * fy);
        let g = objective_gradient(m);
        prop_assert!((g.dot(&x.values) - (fx - fixed)).abs() <= 1e-10 * fx);
    }
}
