//! Divergence and dynamic stability eigenanalyses.

use nalgebra::DMatrix;

use crate::laminate::{select_critical, Criticality};
use crate::linalg::{eigenvector_for, general_eigenvalues, C64};
use crate::{Error, Result};

/// Divergence multipliers `λ_s` of `(λ_s K_a + K_e − K_s) Δp = 0`, sorted
/// by modulus. A real positive `λ_s` is the dynamic-pressure multiplier at
/// which the static equilibrium loses stability.
pub fn divergence_eig(k_a: &DMatrix<f64>, k_e: &DMatrix<f64>, k_s: &DMatrix<f64>) -> Result<Vec<C64>> {
    if k_a.amax() == 0.0 {
        return Err(Error::invalid("divergence analysis needs a nonzero aerodynamic stiffness"));
    }
    let lu = (k_s - k_e).lu();
    let x = lu
        .solve(k_a)
        .ok_or_else(|| Error::Singular("structural stiffness is singular".into()))?;
    let mu = general_eigenvalues(&x)?;
    let scale = mu.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let mut out: Vec<C64> = mu
        .into_iter()
        .filter(|z| z.norm() > 1e-12 * scale)
        .map(|z| C64::new(1.0, 0.0) / z)
        .collect();
    out.sort_by(|a, b| a.norm().total_cmp(&b.norm()));
    Ok(out)
}

/// Smallest real positive divergence multiplier, if any.
pub fn critical_divergence(lambdas: &[C64]) -> Option<f64> {
    lambdas
        .iter()
        .filter(|z| z.re > 0.0 && z.im.abs() <= 1e-8 * z.norm())
        .map(|z| z.re)
        .min_by(f64::total_cmp)
}

#[derive(Debug, Clone)]
pub struct StabilityResult {
    /// Eigenvalues sorted by descending real part (ties by ascending imaginary part).
    pub eigenvalues: Vec<C64>,
    /// Indices of the `k` most critical eigenvalues (largest real parts).
    pub critical: Vec<usize>,
    pub stable: bool,
}

impl StabilityResult {
    pub fn max_real(&self) -> f64 {
        self.eigenvalues.first().map_or(f64::NEG_INFINITY, |z| z.re)
    }

    /// Right eigenvectors of `a` for the critical eigenvalues.
    pub fn critical_vectors(&self, a: &DMatrix<f64>) -> Result<Vec<nalgebra::DVector<C64>>> {
        self.critical.iter().map(|&i| eigenvector_for(a, self.eigenvalues[i])).collect()
    }
}

pub fn dynamic_stability(a: &DMatrix<f64>, k: usize) -> Result<StabilityResult> {
    let mut ev = general_eigenvalues(a)?;
    ev.sort_by(|x, y| y.re.total_cmp(&x.re).then(x.im.total_cmp(&y.im)));
    let re: Vec<f64> = ev.iter().map(|z| z.re).collect();
    let critical = select_critical(&re, k, Criticality::Largest)?;
    let stable = re.first().is_none_or(|&r| r < 0.0);
    Ok(StabilityResult { eigenvalues: ev, critical, stable })
}

/// Rayleigh damping `C = a M + b K` giving ratio `zeta` at `w1` and `w2` (rad/s).
pub fn rayleigh_damping(m: &DMatrix<f64>, k: &DMatrix<f64>, zeta: f64, w1: f64, w2: f64) -> DMatrix<f64> {
    if zeta == 0.0 || w1 <= 0.0 || w2 <= 0.0 {
        return DMatrix::zeros(m.nrows(), m.ncols());
    }
    let a = 2.0 * zeta * w1 * w2 / (w1 + w2);
    let b = 2.0 * zeta / (w1 + w2);
    m * a + k * b
}

/// First speed in `(v_min, v_max]` where the largest real part of the
/// state matrix built by `state` turns positive. The interval is scanned
/// in `scan` steps and the first sign change refined by the Illinois
/// variant of regula falsi. Returns `None` when no crossing is found.
pub fn flutter_speed<F>(state: F, v_min: f64, v_max: f64, scan: usize, tol: f64) -> Result<Option<f64>>
where
    F: Fn(f64) -> Result<DMatrix<f64>>,
{
    let g = |v: f64| -> Result<f64> { Ok(dynamic_stability(&state(v)?, 1)?.max_real()) };
    let scan = scan.max(2);
    let mut va = v_min;
    let mut ga = g(va)?;
    if ga >= 0.0 {
        return Ok(Some(v_min));
    }
    for i in 1..=scan {
        let vb = v_min + (v_max - v_min) * i as f64 / scan as f64;
        let gb = g(vb)?;
        if gb >= 0.0 {
            let (mut a, mut fa, mut b, mut fb) = (va, ga, vb, gb);
            let mut side = 0i8;
            for _ in 0..200 {
                let c = (a * fb - b * fa) / (fb - fa);
                let fc = g(c)?;
                if fc >= 0.0 {
                    b = c;
                    fb = fc;
                    if side == 1 {
                        fa *= 0.5;
                    }
                    side = 1;
                } else {
                    a = c;
                    fa = fc;
                    if side == -1 {
                        fb *= 0.5;
                    }
                    side = -1;
                }
                if (b - a).abs() <= tol * b.abs() {
                    break;
                }
            }
            return Ok(Some(0.5 * (a + b)));
        }
        va = vb;
        ga = gb;
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stability_sorting_and_critical_set() {
        let a = DMatrix::from_row_slice(4, 4, &[0.0, 1.0, 0.0, 0.0, -4.0, -0.2, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, -9.0, 0.3]);
        let s = dynamic_stability(&a, 10).unwrap();
        assert_eq!(s.eigenvalues.len(), 4);
        assert!(!s.stable);
        assert!((s.max_real() - 0.15).abs() < 1e-12);
        assert_eq!(s.critical.len(), 4);
        // conjugate pairs are both present
        assert!((s.eigenvalues[0].im + s.eigenvalues[1].im).abs() < 1e-12);
    }

    #[test]
    fn divergence_scales_with_stiffness() {
        let ka = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.5]);
        let ks = DMatrix::from_row_slice(2, 2, &[4.0, 0.0, 0.0, 2.0]);
        let z = DMatrix::zeros(2, 2);
        let l1 = critical_divergence(&divergence_eig(&ka, &z, &ks).unwrap()).unwrap();
        let l2 = critical_divergence(&divergence_eig(&ka, &z, &(&ks * 2.0)).unwrap()).unwrap();
        assert!((l1 - 4.0).abs() < 1e-12);
        assert!((l2 - 2.0 * l1).abs() < 1e-12);
        assert!(divergence_eig(&z, &z, &ks).is_err());
    }
}
