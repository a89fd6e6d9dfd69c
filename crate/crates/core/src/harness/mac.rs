//! Modal assurance criterion for real and complex shapes.

use nalgebra::{DMatrix, DVector};

use crate::linalg::C64;
use crate::{Error, Result};

/// `|aᴴ b|² / ((aᴴ a)(bᴴ b))`.
pub fn mac(a: &DVector<C64>, b: &DVector<C64>) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::invalid(format!("MAC of vectors with lengths {} and {}", a.len(), b.len())));
    }
    let aa = a.dotc(a).re;
    let bb = b.dotc(b).re;
    if !(aa > 0.0 && bb > 0.0) {
        return Err(Error::invalid("MAC of a zero vector"));
    }
    let ab = a.dotc(b).norm_sqr();
    Ok((ab / (aa * bb)).clamp(0.0, 1.0))
}

pub fn mac_real(a: &DVector<f64>, b: &DVector<f64>) -> Result<f64> {
    mac(&complexify(a), &complexify(b))
}

pub fn complexify(v: &DVector<f64>) -> DVector<C64> {
    v.map(|x| C64::new(x, 0.0))
}

/// `MAC[i][j] = mac(a_i, b_j)`.
pub fn mac_matrix(a: &[DVector<C64>], b: &[DVector<C64>]) -> Result<DMatrix<f64>> {
    let mut m = DMatrix::zeros(a.len(), b.len());
    for (i, u) in a.iter().enumerate() {
        for (j, v) in b.iter().enumerate() {
            m[(i, j)] = mac(u, v)?;
        }
    }
    Ok(m)
}

/// Rows whose largest entry is off the diagonal: the mode order differs
/// between the two sets there.
pub fn swapped_rows(m: &DMatrix<f64>) -> Vec<usize> {
    (0..m.nrows().min(m.ncols()))
        .filter(|&i| (0..m.ncols()).any(|j| j != i && m[(i, j)] > m[(i, i)]))
        .collect()
}

/// Mean of the diagonal over the mean row maximum; 1 for a perfectly
/// ordered comparison.
pub fn diagonal_dominance(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows().min(m.ncols());
    if n == 0 {
        return 0.0;
    }
    let diag: f64 = (0..n).map(|i| m[(i, i)]).sum();
    let best: f64 = (0..n).map(|i| m.row(i).max()).sum();
    if best > 0.0 { diag / best } else { 0.0 }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cvec(v: &[(f64, f64)]) -> DVector<C64> {
        DVector::from_iterator(v.len(), v.iter().map(|&(r, i)| C64::new(r, i)))
    }

    #[test]
    fn identical_orthogonal_and_zero() {
        let a = DVector::from_vec(vec![1.0, 2.0, -0.5]);
        assert!((mac_real(&a, &a).unwrap() - 1.0).abs() < 1e-15);
        let b = DVector::from_vec(vec![2.0, -1.0, 0.0]);
        assert!(mac_real(&a, &b).unwrap() < 1e-30);
        assert!(mac_real(&a, &DVector::zeros(3)).is_err());
        assert!(mac_real(&a, &DVector::zeros(2)).is_err());
    }

    #[test]
    fn swap_is_flagged() {
        let m = DMatrix::from_row_slice(2, 2, &[0.1, 0.9, 0.9, 0.1]);
        assert_eq!(swapped_rows(&m), vec![0, 1]);
        assert!(swapped_rows(&DMatrix::identity(3, 3)).is_empty());
        assert_eq!(diagonal_dominance(&DMatrix::identity(3, 3)), 1.0);
    }

    proptest! {
        #[test]
        fn complex_scaling_leaves_mac_at_one(
            v in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 2..8),
            s in (0.1f64..10.0, -3.0f64..3.0),
        ) {
            let a = cvec(&v);
            prop_assume!(a.norm() > 1e-3);
            let b = &a * C64::from_polar(s.0, s.1);
            prop_assert!((mac(&a, &b).unwrap() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn mac_lies_in_unit_interval(
            v in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0), 3..6),
        ) {
            let a = cvec(&v.iter().map(|x| (x.0, x.1)).collect::<Vec<_>>());
            let b = cvec(&v.iter().map(|x| (x.2, x.3)).collect::<Vec<_>>());
            prop_assume!(a.norm() > 1e-3 && b.norm() > 1e-3);
            let m = mac(&a, &b).unwrap();
            prop_assert!((0.0..=1.0).contains(&m));
        }
    }
}
