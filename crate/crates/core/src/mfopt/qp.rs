//! Dense convex QP by a Mehrotra predictor-corrector interior point method:
//! `min ½ xᵀHx + gᵀx  s.t.  A x ≤ b,  lo ≤ x ≤ hi`.

use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct QpProblem {
    pub h: DMatrix<f64>,
    pub g: DVector<f64>,
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    /// Bounds; infinite entries are ignored.
    pub lo: DVector<f64>,
    pub hi: DVector<f64>,
}

#[derive(Debug, Clone)]
pub struct QpSolution {
    pub x: DVector<f64>,
    /// Multipliers of `A x ≤ b`.
    pub z: DVector<f64>,
    pub z_lo: DVector<f64>,
    pub z_hi: DVector<f64>,
    pub iterations: usize,
}

const TOL: f64 = 1e-12;
const MAX_ITER: usize = 200;

/// Inequality rows in the form `G x + s = h`: general rows, then finite
/// lower bounds (`−x ≤ −lo`), then finite upper bounds.
struct Rows<'a> {
    p: &'a QpProblem,
    lo_idx: Vec<usize>,
    hi_idx: Vec<usize>,
}

impl Rows<'_> {
    fn m(&self) -> usize {
        self.p.a.nrows() + self.lo_idx.len() + self.hi_idx.len()
    }

    fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        let ma = self.p.a.nrows();
        let mut out = DVector::zeros(self.m());
        out.rows_mut(0, ma).copy_from(&(&self.p.a * x));
        for (k, &i) in self.lo_idx.iter().enumerate() {
            out[ma + k] = -x[i];
        }
        let o = ma + self.lo_idx.len();
        for (k, &i) in self.hi_idx.iter().enumerate() {
            out[o + k] = x[i];
        }
        out
    }

    fn apply_t(&self, y: &DVector<f64>) -> DVector<f64> {
        let ma = self.p.a.nrows();
        let mut out = self.p.a.tr_mul(&y.rows(0, ma).into_owned());
        for (k, &i) in self.lo_idx.iter().enumerate() {
            out[i] -= y[ma + k];
        }
        let o = ma + self.lo_idx.len();
        for (k, &i) in self.hi_idx.iter().enumerate() {
            out[i] += y[o + k];
        }
        out
    }

    fn rhs(&self) -> DVector<f64> {
        let ma = self.p.a.nrows();
        let mut h = DVector::zeros(self.m());
        h.rows_mut(0, ma).copy_from(&self.p.b);
        for (k, &i) in self.lo_idx.iter().enumerate() {
            h[ma + k] = -self.p.lo[i];
        }
        let o = ma + self.lo_idx.len();
        for (k, &i) in self.hi_idx.iter().enumerate() {
            h[o + k] = self.p.hi[i];
        }
        h
    }

    /// `H + Gᵀ diag(d) G`.
    fn normal_matrix(&self, d: &DVector<f64>) -> DMatrix<f64> {
        let ma = self.p.a.nrows();
        let mut scaled = self.p.a.clone();
        for (r, mut row) in scaled.row_iter_mut().enumerate() {
            row *= d[r];
        }
        let mut m = &self.p.h + self.p.a.tr_mul(&scaled);
        for (k, &i) in self.lo_idx.iter().enumerate() {
            m[(i, i)] += d[ma + k];
        }
        let o = ma + self.lo_idx.len();
        for (k, &i) in self.hi_idx.iter().enumerate() {
            m[(i, i)] += d[o + k];
        }
        m
    }
}

fn max_step(v: &DVector<f64>, dv: &DVector<f64>) -> f64 {
    v.iter()
        .zip(dv.iter())
        .filter(|(_, &d)| d < 0.0)
        .map(|(&x, &d)| -x / d)
        .fold(1.0, f64::min)
}

pub fn solve_qp(p: &QpProblem) -> Result<QpSolution> {
    let n = p.g.len();
    if p.h.shape() != (n, n) || p.a.ncols() != n || p.a.nrows() != p.b.len() || p.lo.len() != n || p.hi.len() != n {
        return Err(Error::invalid("QP dimensions are inconsistent"));
    }
    if p.lo.iter().zip(p.hi.iter()).any(|(l, h)| l > h) {
        return Err(Error::invalid("QP bounds cross"));
    }
    let rows = Rows {
        p,
        lo_idx: (0..n).filter(|&i| p.lo[i].is_finite()).collect(),
        hi_idx: (0..n).filter(|&i| p.hi[i].is_finite()).collect(),
    };
    let m = rows.m();
    let h_vec = rows.rhs();
    // start at the box midpoint (or zero) with unit slacks and duals
    let mut x = DVector::from_fn(n, |i, _| match (p.lo[i].is_finite(), p.hi[i].is_finite()) {
        (true, true) => 0.5 * (p.lo[i] + p.hi[i]),
        (true, false) => p.lo[i] + 1.0,
        (false, true) => p.hi[i] - 1.0,
        _ => 0.0,
    });
    let gx = rows.apply(&x);
    let mut s = DVector::from_fn(m, |i, _| (h_vec[i] - gx[i]).max(1.0));
    let mut z = DVector::from_element(m, 1.0);
    let scale_d = 1.0 + p.g.amax();
    let scale_p = 1.0 + h_vec.amax();

    for it in 0..MAX_ITER {
        let r_d = &p.h * &x + &p.g + rows.apply_t(&z);
        let r_p = rows.apply(&x) + &s - &h_vec;
        let mu = if m > 0 { s.dot(&z) / m as f64 } else { 0.0 };
        if r_d.amax() <= TOL * scale_d && r_p.amax() <= TOL * scale_p && mu <= TOL * scale_d.max(1.0) {
            return Ok(finish(&rows, x, z, it));
        }
        let d = z.component_div(&s);
        let chol = factor(rows.normal_matrix(&d))?;
        let solve = |r_c: &DVector<f64>| {
            // dz = S⁻¹(Z r_p − r_c + Z G dx)
            let w = (z.component_mul(&r_p) - r_c).component_div(&s);
            let rhs = -&r_d - rows.apply_t(&w);
            let dx = chol.solve(&rhs);
            let gdx = rows.apply(&dx);
            let dz = &w + d.component_mul(&gdx);
            let ds = -&r_p - gdx;
            (dx, ds, dz)
        };
        let sz = s.component_mul(&z);
        let (_, ds_a, dz_a) = solve(&sz);
        let a_aff = max_step(&s, &ds_a).min(max_step(&z, &dz_a));
        let mu_aff = if m > 0 {
            (&s + &ds_a * a_aff).dot(&(&z + &dz_a * a_aff)) / m as f64
        } else {
            0.0
        };
        let sigma = if mu > 0.0 { (mu_aff / mu).powi(3).min(1.0) } else { 0.0 };
        let r_c = sz + ds_a.component_mul(&dz_a) - DVector::from_element(m, sigma * mu);
        let (dx, ds, dz) = solve(&r_c);
        let alpha = if m == 0 { 1.0 } else { (0.995 * max_step(&s, &ds).min(max_step(&z, &dz))).min(1.0) };
        x += dx * alpha;
        s += ds * alpha;
        z += dz * alpha;
        if !x.iter().all(|v| v.is_finite()) {
            return Err(Error::NonConvergence("QP iterate diverged".into()));
        }
        if m == 0 {
            return Ok(finish(&rows, x, z, it + 1));
        }
    }
    Err(Error::NonConvergence("QP interior point did not converge".into()))
}

/// Cholesky factor, with a growing diagonal shift if round-off has cost
/// positive definiteness.
fn factor(m: DMatrix<f64>) -> Result<nalgebra::linalg::Cholesky<f64, nalgebra::Dyn>> {
    let scale = m.diagonal().amax().max(f64::MIN_POSITIVE);
    let mut shift = 0.0;
    for _ in 0..8 {
        let shifted = &m + DMatrix::identity(m.nrows(), m.ncols()) * shift;
        if let Some(c) = shifted.cholesky() {
            return Ok(c);
        }
        shift = if shift == 0.0 { 1e-14 * scale } else { shift * 100.0 };
    }
    Err(Error::Singular("QP normal matrix is not positive definite".into()))
}

fn finish(rows: &Rows, x: DVector<f64>, z: DVector<f64>, iterations: usize) -> QpSolution {
    let ma = rows.p.a.nrows();
    let n = x.len();
    let mut z_lo = DVector::zeros(n);
    let mut z_hi = DVector::zeros(n);
    for (k, &i) in rows.lo_idx.iter().enumerate() {
        z_lo[i] = z[ma + k];
    }
    let o = ma + rows.lo_idx.len();
    for (k, &i) in rows.hi_idx.iter().enumerate() {
        z_hi[i] = z[o + k];
    }
    QpSolution { x, z: z.rows(0, ma).into_owned(), z_lo, z_hi, iterations }
}

/// Relaxed QP: first finds the smallest uniform relaxation `τ ≥ 0` of the
/// general rows that admits a solution, then solves the QP with rows
/// relaxed by `τ`. Returns the solution and `τ`.
pub fn solve_relaxed(p: &QpProblem) -> Result<(QpSolution, f64)> {
    let n = p.g.len();
    let ma = p.a.nrows();
    if ma == 0 {
        return Ok((solve_qp(p)?, 0.0));
    }
    let mut h1 = DMatrix::identity(n + 1, n + 1) * 1e-8;
    h1[(n, n)] = 1e-8;
    let mut g1 = DVector::zeros(n + 1);
    g1[n] = 1.0;
    let mut a1 = DMatrix::zeros(ma, n + 1);
    a1.view_mut((0, 0), (ma, n)).copy_from(&p.a);
    a1.column_mut(n).fill(-1.0);
    let mut lo1 = p.lo.clone().insert_row(n, 0.0);
    let hi1 = p.hi.clone().insert_row(n, f64::INFINITY);
    // bounded boxes only, so the phase-1 problem has a minimizer
    for i in 0..n {
        if !lo1[i].is_finite() {
            lo1[i] = -1e6;
        }
    }
    let phase1 = solve_qp(&QpProblem { h: h1, g: g1, a: a1, b: p.b.clone(), lo: lo1, hi: hi1 })?;
    let tau = phase1.x[n].max(0.0);
    let tau = if tau <= 1e-9 * (1.0 + p.b.amax()) { 0.0 } else { tau * (1.0 + 1e-9) + 1e-12 };
    let b = p.b.add_scalar(tau);
    Ok((solve_qp(&QpProblem { b, ..p.clone() })?, tau))
}
