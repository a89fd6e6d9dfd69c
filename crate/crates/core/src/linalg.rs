//! Dense linear-algebra helpers shared by the structural, aerodynamic and
//! optimization modules: quadrature, eigen-solvers and small utilities.

use nalgebra::{Complex, DMatrix, DVector, Matrix3, Vector3};

use crate::{Error, Result};

pub type C64 = Complex<f64>;

/// Cross-product matrix, `skew(a) * b == a.cross(&b)`.
pub fn skew(a: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -a.z, a.y, a.z, 0.0, -a.x, -a.y, a.x, 0.0)
}

/// Gauss-Legendre points and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "quadrature order must be positive");
    if n == 1 {
        return (vec![0.0], vec![2.0]);
    }
    let mut pts = vec![0.0; n];
    let mut wts = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        pts[i] = -z;
        pts[n - 1 - i] = z;
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        wts[i] = w;
        wts[n - 1 - i] = w;
    }
    (pts, wts)
}

/// Largest absolute asymmetry relative to the largest entry.
pub fn asymmetry(m: &DMatrix<f64>) -> f64 {
    let scale = m.amax().max(f64::MIN_POSITIVE);
    let mut worst: f64 = 0.0;
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst / scale
}

pub fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

/// Eigenpairs of a symmetric-definite pencil.
#[derive(Debug, Clone)]
pub struct GeneralizedEigen {
    /// Ascending eigenvalues.
    pub values: DVector<f64>,
    /// Columns normalized so that `vᵀ B v = 1`.
    pub vectors: DMatrix<f64>,
}

/// Solves `A v = λ B v` for symmetric `A` and symmetric positive definite `B`.
pub fn symmetric_generalized_eigen(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<GeneralizedEigen> {
    let n = a.nrows();
    if a.ncols() != n || b.nrows() != n || b.ncols() != n {
        return Err(Error::invalid("eigenproblem matrices must be square and conformant"));
    }
    let chol = b
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Singular("right-hand matrix is not positive definite".into()))?;
    let l = chol.l();
    let x = l
        .solve_lower_triangular(a)
        .ok_or_else(|| Error::Singular("triangular solve failed".into()))?;
    let mut c = l
        .solve_lower_triangular(&x.transpose())
        .ok_or_else(|| Error::Singular("triangular solve failed".into()))?;
    symmetrize(&mut c);
    let eig = nalgebra::SymmetricEigen::try_new(c, 1e-15, 10_000)
        .ok_or_else(|| Error::NonConvergence("symmetric eigen-solver".into()))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut y = DMatrix::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        y.set_column(col, &eig.eigenvectors.column(i));
    }
    let lt = l.transpose();
    let mut vectors = lt
        .solve_upper_triangular(&y)
        .ok_or_else(|| Error::Singular("triangular solve failed".into()))?;
    // deterministic sign: largest-magnitude component positive
    for mut col in vectors.column_iter_mut() {
        let imax = col.iamax();
        if col[imax] < 0.0 {
            col.neg_mut();
        }
    }
    Ok(GeneralizedEigen { values, vectors })
}

/// Solutions of `(K + λ G) a = 0` with `K` symmetric positive definite and
/// `G` symmetric. Only positive, finite factors are returned, ascending.
pub fn buckling_eigen(k: &DMatrix<f64>, g: &DMatrix<f64>) -> Result<GeneralizedEigen> {
    // G a = μ K a with μ = -1/λ
    let eig = symmetric_generalized_eigen(g, k)?;
    let scale = eig.values.amax().max(f64::MIN_POSITIVE);
    let mut pairs: Vec<(f64, usize)> = eig
        .values
        .iter()
        .enumerate()
        .filter(|(_, &mu)| mu < -1e-13 * scale)
        .map(|(i, &mu)| (-1.0 / mu, i))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let values = DVector::from_iterator(pairs.len(), pairs.iter().map(|p| p.0));
    let mut vectors = DMatrix::zeros(k.nrows(), pairs.len());
    for (col, &(_, i)) in pairs.iter().enumerate() {
        vectors.set_column(col, &eig.vectors.column(i));
    }
    Ok(GeneralizedEigen { values, vectors })
}

/// Eigenvalues of a general real square matrix.
pub fn general_eigenvalues(a: &DMatrix<f64>) -> Result<Vec<C64>> {
    if a.nrows() != a.ncols() {
        return Err(Error::invalid("eigenvalues need a square matrix"));
    }
    if a.nrows() == 0 {
        return Ok(Vec::new());
    }
    let schur = nalgebra::Schur::try_new(a.clone(), 1e-15, 100_000)
        .ok_or_else(|| Error::NonConvergence("real Schur decomposition".into()))?;
    Ok(schur.complex_eigenvalues().iter().copied().collect())
}

/// Right eigenvector of `a` for an eigenvalue estimate, by shifted inverse
/// iteration. The result has unit 2-norm and a real, positive largest entry.
pub fn eigenvector_for(a: &DMatrix<f64>, lambda: C64) -> Result<DVector<C64>> {
    let n = a.nrows();
    let shift = lambda + C64::new(1e-10 * (1.0 + lambda.norm()), 1e-10 * (1.0 + lambda.norm()));
    let mut m: DMatrix<C64> = a.map(|v| C64::new(v, 0.0));
    for i in 0..n {
        m[(i, i)] -= shift;
    }
    let lu = m.lu();
    let mut v = DVector::from_fn(n, |i, _| C64::new(1.0 + (i as f64 * 0.37).sin(), 0.1));
    for _ in 0..4 {
        let w = lu
            .solve(&v)
            .ok_or_else(|| Error::Singular("inverse iteration".into()))?;
        let nrm = w.norm();
        if !nrm.is_finite() || nrm == 0.0 {
            return Err(Error::Singular("inverse iteration produced a zero vector".into()));
        }
        v = w / C64::new(nrm, 0.0);
    }
    Ok(normalize_phase(v))
}

/// Scales a complex vector to unit norm with its largest entry real and positive.
pub fn normalize_phase(v: DVector<C64>) -> DVector<C64> {
    let mut imax = 0;
    let mut best: f64 = -1.0;
    for (i, z) in v.iter().enumerate() {
        if z.norm() > best + 1e-12 * best.abs() {
            best = z.norm();
            imax = i;
        }
    }
    let nrm = v.norm();
    if best <= 0.0 || nrm == 0.0 {
        return v;
    }
    let phase = v[imax] / C64::new(v[imax].norm(), 0.0);
    v.map(|z| z / phase / C64::new(nrm, 0.0))
}

/// Central finite-difference step used throughout: `1e-6 (1 + |x|)`.
pub fn fd_step(x: f64) -> f64 {
    1e-6 * (1.0 + x.abs())
}
