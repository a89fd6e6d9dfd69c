//! Additive first-order correction of low-fidelity outputs.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::constraints::{Availability, ConstraintMeta, Model, ModelOutputs};
use crate::{Error, Result};

/// Entries by how they enter the trust-region subproblem.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Partition {
    /// Available at both levels: corrected.
    pub corrected: Vec<ConstraintMeta>,
    /// Low fidelity only: entered uncorrected.
    pub passthrough: Vec<ConstraintMeta>,
    /// High fidelity only: checked when a step is tested.
    pub hf_only: Vec<ConstraintMeta>,
}

pub fn lf_only_passthrough(meta: &[ConstraintMeta]) -> Result<Partition> {
    let mut p = Partition::default();
    for (i, m) in meta.iter().enumerate() {
        if meta[..i].contains(m) {
            return Err(Error::invalid(format!("constraint entry {i} is listed twice")));
        }
        match m.availability {
            Availability::Both => p.corrected.push(*m),
            Availability::Lf => p.passthrough.push(*m),
            Availability::Hf => p.hf_only.push(*m),
        }
    }
    Ok(p)
}

/// Value and gradient gaps `HF − LF` at a trust-region centre.
#[derive(Debug, Clone)]
pub struct CorrectionData {
    pub center: DVector<f64>,
    pub df: f64,
    pub dgrad_f: DVector<f64>,
    pub keys: Vec<ConstraintMeta>,
    pub dc: DVector<f64>,
    pub dgrad_c: DMatrix<f64>,
}

pub fn build_correction(center: &DVector<f64>, lf: &ModelOutputs, hf: &ModelOutputs) -> Result<CorrectionData> {
    let n = center.len();
    if lf.grad_f.len() != n || hf.grad_f.len() != n || lf.grad_c.ncols() != n || hf.grad_c.ncols() != n {
        return Err(Error::invalid("correction: gradient sizes differ from the design dimension"));
    }
    let mut keys = Vec::new();
    let mut pairs = Vec::new();
    for (ih, m) in hf.c.meta.iter().enumerate() {
        if m.availability != Availability::Both {
            continue;
        }
        let il = lf
            .c
            .position(m)
            .ok_or_else(|| Error::invalid(format!("correction: entry {m:?} missing from the low-fidelity outputs")))?;
        keys.push(*m);
        pairs.push((il, ih));
    }
    let dc = DVector::from_iterator(pairs.len(), pairs.iter().map(|&(il, ih)| hf.c.values[ih] - lf.c.values[il]));
    let mut dgrad_c = DMatrix::zeros(pairs.len(), n);
    for (k, &(il, ih)) in pairs.iter().enumerate() {
        dgrad_c.set_row(k, &(hf.grad_c.row(ih) - lf.grad_c.row(il)));
    }
    Ok(CorrectionData {
        center: center.clone(),
        df: hf.f - lf.f,
        dgrad_f: &hf.grad_f - &lf.grad_f,
        keys,
        dc,
        dgrad_c,
    })
}

/// Corrected low-fidelity outputs.
#[derive(Debug, Clone)]
pub struct SurrogateOutputs {
    pub f: f64,
    pub c: DVector<f64>,
    pub grad_f: Option<DVector<f64>>,
    pub grad_c: Option<DMatrix<f64>>,
}

/// Low-fidelity model plus correction: corrected entries and passthrough
/// entries, in low-fidelity order.
pub struct Surrogate<'a> {
    pub lf: &'a dyn Model,
    pub corr: CorrectionData,
    /// For each low-fidelity row: index into `corr.keys` or `None` for passthrough.
    rows: Vec<(usize, Option<usize>)>,
    pub meta: Vec<ConstraintMeta>,
    evaluations: std::sync::atomic::AtomicUsize,
}

impl<'a> Surrogate<'a> {
    /// `lf_meta` is the low-fidelity constraint layout.
    pub fn new(lf: &'a dyn Model, corr: CorrectionData, lf_meta: &[ConstraintMeta]) -> Result<Self> {
        let mut rows = Vec::new();
        let mut meta = Vec::new();
        for (i, m) in lf_meta.iter().enumerate() {
            match m.availability {
                Availability::Both => {
                    let k = corr
                        .keys
                        .iter()
                        .position(|key| key == m)
                        .ok_or_else(|| Error::invalid(format!("correction lacks entry {m:?}")))?;
                    rows.push((i, Some(k)));
                }
                Availability::Lf => rows.push((i, None)),
                Availability::Hf => return Err(Error::invalid("low-fidelity layout contains a high-fidelity-only entry")),
            }
            meta.push(*m);
        }
        Ok(Self { lf, corr, rows, meta, evaluations: 0.into() })
    }

    pub fn evaluations(&self) -> usize {
        self.evaluations.load(std::sync::atomic::Ordering::Relaxed)
    }

    /// Applies the correction to raw low-fidelity outputs at `x`.
    pub fn correct(&self, x: &DVector<f64>, f: f64, c: &DVector<f64>, grads: Option<(&DVector<f64>, &DMatrix<f64>)>) -> SurrogateOutputs {
        let dx = x - &self.corr.center;
        let fc = f + self.corr.df + self.corr.dgrad_f.dot(&dx);
        let cc = DVector::from_iterator(
            self.rows.len(),
            self.rows.iter().map(|&(i, k)| match k {
                Some(k) => c[i] + self.corr.dc[k] + self.corr.dgrad_c.row(k).transpose().dot(&dx),
                None => c[i],
            }),
        );
        let (grad_f, grad_c) = match grads {
            Some((gf, gc)) => {
                let mut jc = DMatrix::zeros(self.rows.len(), x.len());
                for (r, &(i, k)) in self.rows.iter().enumerate() {
                    let mut row = gc.row(i).into_owned();
                    if let Some(k) = k {
                        row += self.corr.dgrad_c.row(k);
                    }
                    jc.set_row(r, &row);
                }
                (Some(gf + &self.corr.dgrad_f), Some(jc))
            }
            None => (None, None),
        };
        SurrogateOutputs { f: fc, c: cc, grad_f, grad_c }
    }

    /// Largest relative value and gradient mismatch between the corrected
    /// model and the high-fidelity outputs at the centre, over the objective
    /// and every corrected entry.
    pub fn consistency(&self, lf: &ModelOutputs, hf: &ModelOutputs) -> (f64, f64) {
        let x = &self.corr.center;
        let m = self.correct(x, lf.f, &lf.c.values, Some((&lf.grad_f, &lf.grad_c)));
        let gf = m.grad_f.as_ref().expect("gradient requested");
        let gc = m.grad_c.as_ref().expect("gradient requested");
        let mut ev = (m.f - hf.f).abs() / (1.0 + hf.f.abs());
        let mut eg = (gf - &hf.grad_f).norm() / (1.0 + hf.grad_f.norm());
        for (r, &(_, k)) in self.rows.iter().enumerate() {
            if k.is_none() {
                continue;
            }
            let Some(ih) = hf.c.position(&self.meta[r]) else {
                return (f64::INFINITY, f64::INFINITY);
            };
            let h = hf.c.values[ih];
            ev = ev.max((m.c[r] - h).abs() / (1.0 + h.abs()));
            let hrow = hf.grad_c.row(ih);
            eg = eg.max((gc.row(r) - hrow).norm() / (1.0 + hrow.norm()));
        }
        (ev, eg)
    }

    /// Largest value among the uncorrected low-fidelity-only rows, or 0.
    pub fn passthrough_violation(&self, c: &DVector<f64>) -> f64 {
        self.rows
            .iter()
            .enumerate()
            .filter(|(_, (_, k))| k.is_none())
            .fold(0.0, |m, (r, _)| m.max(c[r]))
    }

    pub fn evaluate(&self, x: &DVector<f64>, with_gradient: bool) -> Result<SurrogateOutputs> {
        self.evaluations.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
        if with_gradient {
            let o = self.lf.evaluate(x)?;
            Ok(self.correct(x, o.f, &o.c.values, Some((&o.grad_f, &o.grad_c))))
        } else {
            let (f, c) = self.lf.evaluate_values(x)?;
            Ok(self.correct(x, f, &c.values, None))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraints::{Category, ConstraintVector};

    fn meta(av: Availability, slot: usize) -> ConstraintMeta {
        ConstraintMeta { category: Category::Tw, load_case: Some(0), entity: 0, slot, availability: av }
    }

    fn outputs(f: f64, c: Vec<f64>, metas: Vec<ConstraintMeta>) -> ModelOutputs {
        let n = 2;
        ModelOutputs {
            f,
            grad_f: DVector::from_vec(vec![f, 2.0 * f]),
            grad_c: DMatrix::from_fn(c.len(), n, |i, j| c[i] * (j + 1) as f64),
            c: ConstraintVector { values: DVector::from_vec(c), meta: metas },
            nonsmooth: vec![],
        }
    }

    #[test]
    fn partition_follows_tags() {
        let m = vec![meta(Availability::Both, 0), meta(Availability::Lf, 1), meta(Availability::Hf, 2)];
        let p = lf_only_passthrough(&m).unwrap();
        assert_eq!((p.corrected.len(), p.passthrough.len(), p.hf_only.len()), (1, 1, 1));
        let all_both = vec![meta(Availability::Both, 0), meta(Availability::Both, 1)];
        assert!(lf_only_passthrough(&all_both).unwrap().passthrough.is_empty());
        assert!(lf_only_passthrough(&[m[0], m[0]]).is_err());
    }

    #[test]
    fn identical_models_give_zero_correction_and_missing_entries_fail() {
        let m = vec![meta(Availability::Both, 0)];
        let a = outputs(3.0, vec![0.5], m.clone());
        let x = DVector::from_vec(vec![0.1, 0.2]);
        let corr = build_correction(&x, &a, &a).unwrap();
        assert_eq!(corr.df, 0.0);
        assert_eq!(corr.dc.amax(), 0.0);
        assert_eq!(corr.dgrad_c.amax(), 0.0);
        let b = outputs(3.0, vec![0.5], vec![meta(Availability::Both, 5)]);
        assert!(build_correction(&x, &b, &a).is_err());
    }
}
