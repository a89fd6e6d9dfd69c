//! Local buckling of a simply supported, symmetric laminate plate under
//! in-plane resultants, by a Ritz expansion in double sine series.

use nalgebra::{DMatrix, Matrix3};

use crate::linalg::{buckling_eigen, gauss_legendre};
use crate::{Error, Result};

/// Plate of length `a` (x, spanwise) and width `b` (y, along the contour)
/// with resultants in N/m, compression negative.
#[derive(Debug, Clone, Copy)]
pub struct PlateLoad {
    pub a: f64,
    pub b: f64,
    pub d: Matrix3<f64>,
    pub nx: f64,
    pub ny: f64,
    pub nxy: f64,
}

/// Ritz matrices of one plate geometry, split by stiffness and load
/// component so that buckling for new `D` and resultants costs only a
/// linear combination and a small eigensolve.
#[derive(Debug, Clone)]
pub struct PlateBasis {
    pub a: f64,
    pub b: f64,
    pub terms: usize,
    /// Stiffness parts for D11, D12, D22, D16, D26, D66.
    k: [DMatrix<f64>; 6],
    /// Geometric parts for Nx, Ny, Nxy.
    g: [DMatrix<f64>; 3],
}

const D_ENTRIES: [(usize, usize); 6] = [(0, 0), (0, 1), (1, 1), (0, 2), (1, 2), (2, 2)];

impl PlateBasis {
    pub fn new(a: f64, b: f64, terms: usize) -> Result<Self> {
        if !(a > 0.0 && b > 0.0) || terms == 0 {
            return Err(Error::invalid("plate dimensions and term count must be positive"));
        }
        let nt = terms * terms;
        let nq = 4 * terms + 8;
        let (gp, gw) = gauss_legendre(nq);
        let pi = std::f64::consts::PI;
        let trig = |x: f64, len: f64| -> Vec<(f64, f64, f64)> {
            (1..=terms)
                .map(|m| {
                    let c = m as f64 * pi / len;
                    ((c * x).sin(), c * (c * x).cos(), -c * c * (c * x).sin())
                })
                .collect()
        };
        let mut k: [DMatrix<f64>; 6] = std::array::from_fn(|_| DMatrix::zeros(nt, nt));
        let mut g: [DMatrix<f64>; 3] = std::array::from_fn(|_| DMatrix::zeros(nt, nt));
        let mut curv = vec![[0.0; 3]; nt];
        let mut slope = vec![[0.0; 2]; nt];
        for (px, wx) in gp.iter().zip(&gw) {
            let tx = trig(0.5 * a * (px + 1.0), a);
            for (py, wy) in gp.iter().zip(&gw) {
                let ty = trig(0.5 * b * (py + 1.0), b);
                let w = 0.25 * a * b * wx * wy;
                for i in 0..terms {
                    for j in 0..terms {
                        let (sx, dx, ddx) = tx[i];
                        let (sy, dy, ddy) = ty[j];
                        let t = i * terms + j;
                        curv[t] = [ddx * sy, sx * ddy, 2.0 * dx * dy];
                        slope[t] = [dx * sy, sx * dy];
                    }
                }
                for r in 0..nt {
                    for c in 0..nt {
                        for (m, &(p, q)) in D_ENTRIES.iter().enumerate() {
                            let v = if p == q {
                                curv[r][p] * curv[c][p]
                            } else {
                                curv[r][p] * curv[c][q] + curv[r][q] * curv[c][p]
                            };
                            k[m][(r, c)] += w * v;
                        }
                        g[0][(r, c)] += w * slope[r][0] * slope[c][0];
                        g[1][(r, c)] += w * slope[r][1] * slope[c][1];
                        g[2][(r, c)] += w * (slope[r][0] * slope[c][1] + slope[r][1] * slope[c][0]);
                    }
                }
            }
        }
        for m in k.iter_mut().chain(g.iter_mut()) {
            crate::linalg::symmetrize(m);
        }
        Ok(Self { a, b, terms, k, g })
    }

    /// Smallest positive load factors, ascending.
    pub fn factors(&self, d: &Matrix3<f64>, nx: f64, ny: f64, nxy: f64) -> Result<Vec<f64>> {
        let mut k = &self.k[0] * d[(0, 0)];
        for (m, &(p, q)) in D_ENTRIES.iter().enumerate().skip(1) {
            k += &self.k[m] * d[(p, q)];
        }
        let g = &self.g[0] * nx + &self.g[1] * ny + &self.g[2] * nxy;
        Ok(buckling_eigen(&k, &g)?.values.iter().copied().collect())
    }
}

/// Smallest positive load factors of `(K + λ K_g) w = 0` with `terms × terms`
/// sine functions, ascending.
pub fn plate_buckling(load: &PlateLoad, terms: usize) -> Result<Vec<f64>> {
    PlateBasis::new(load.a, load.b, terms)?.factors(&load.d, load.nx, load.ny, load.nxy)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iso_d(e: f64, nu: f64, t: f64) -> Matrix3<f64> {
        let dd = e * t.powi(3) / (12.0 * (1.0 - nu * nu));
        Matrix3::new(dd, nu * dd, 0.0, nu * dd, dd, 0.0, 0.0, 0.0, 0.5 * (1.0 - nu) * dd)
    }

    #[test]
    fn square_isotropic_plate_under_uniaxial_compression() {
        let (e, nu, t, b) = (70e9, 0.3, 2e-3, 0.5);
        let d = iso_d(e, nu, t)[(0, 0)];
        let load = PlateLoad { a: b, b, d: iso_d(e, nu, t), nx: -1.0, ny: 0.0, nxy: 0.0 };
        let f = plate_buckling(&load, 4).unwrap();
        let exact = 4.0 * std::f64::consts::PI.powi(2) * d / (b * b);
        assert!(((f[0] - exact) / exact).abs() < 1e-10);
    }

    #[test]
    fn orthotropic_long_plate_picks_best_half_wave_count() {
        // a/b = 3 under uniaxial load buckles in three half-waves, k = 4
        let (e, nu, t, b) = (70e9, 0.3, 2e-3, 0.3);
        let d = iso_d(e, nu, t)[(0, 0)];
        let load = PlateLoad { a: 3.0 * b, b, d: iso_d(e, nu, t), nx: -1.0, ny: 0.0, nxy: 0.0 };
        let f = plate_buckling(&load, 4).unwrap();
        let exact = 4.0 * std::f64::consts::PI.powi(2) * d / (b * b);
        assert!(((f[0] - exact) / exact).abs() < 1e-10);
    }

    #[test]
    fn shear_buckling_is_sign_symmetric_for_specially_orthotropic_plates() {
        let load = PlateLoad { a: 0.6, b: 0.4, d: iso_d(70e9, 0.3, 2e-3), nx: 0.0, ny: 0.0, nxy: 1.0 };
        let pos = plate_buckling(&load, 5).unwrap();
        let neg = plate_buckling(&PlateLoad { nxy: -1.0, ..load }, 5).unwrap();
        assert!(((pos[0] - neg[0]) / pos[0]).abs() < 1e-8);
        // square-plate shear coefficient is 9.34 for the exact solution; Ritz is an upper bound
        let d = iso_d(70e9, 0.3, 2e-3)[(0, 0)];
        let sq = plate_buckling(&PlateLoad { a: 0.4, ..load }, 6).unwrap();
        let k = sq[0] * 0.4 * 0.4 / (std::f64::consts::PI.powi(2) * d);
        assert!(k > 9.3 && k < 10.0, "k = {k}");
    }

    #[test]
    fn tension_gives_no_factor_and_scaling_is_inverse() {
        let load = PlateLoad { a: 0.5, b: 0.4, d: iso_d(70e9, 0.3, 2e-3), nx: 1.0, ny: 0.5, nxy: 0.0 };
        assert!(plate_buckling(&load, 4).unwrap().is_empty());
        let c = PlateLoad { nx: -1.0, ..load };
        let c2 = PlateLoad { nx: -2.0, ny: 1.0, ..load };
        let f1 = plate_buckling(&c, 4).unwrap();
        let f2 = plate_buckling(&c2, 4).unwrap();
        assert!((f1[0] - 2.0 * f2[0]).abs() < 1e-9 * f1[0]);
    }
}
