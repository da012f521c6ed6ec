//! Polynomial bases on the reference triangle and reference edge.
//!
//! Scalar spaces use one orthonormal modal family per degree, hierarchical by
//! total degree: the first dim(P^m) functions span P^m for every m up to the
//! build degree, and functions of degree d are L2-orthogonal to all of
//! P^{d-1}. Orthonormality is with respect to the reference-triangle measure;
//! physical elements rescale by 1/sqrt(2|K|) so that element mass matrices
//! stay the identity.
//!
//! A separate Lagrange basis on the principal lattice supports nodal
//! interpolation; it is represented through the modal family by its
//! Vandermonde matrix.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};

/// dim P^m on a triangle.
pub fn tri_dim(degree: usize) -> usize {
    (degree + 1) * (degree + 2) / 2
}

/// Full tabulation of the modal family at one point: values, first and
/// second derivatives.
#[derive(Debug, Clone)]
pub struct PointTab {
    pub val: DVector<f64>,
    pub dx: DVector<f64>,
    pub dy: DVector<f64>,
    pub dxx: DVector<f64>,
    pub dxy: DVector<f64>,
    pub dyy: DVector<f64>,
}

/// Orthonormal modal basis of P^degree on the reference triangle, built from
/// Legendre polynomials scaled onto the collapsed coordinate and Jacobi
/// polynomials in the second coordinate. Functions are ordered by total
/// degree, so the leading dim(P^m) entries span P^m for every m <= degree and
/// every function is L2-orthogonal to all polynomials of lower degree.
#[derive(Debug, Clone)]
pub struct TriangleBasis {
    pub degree: usize,
    /// (i, j) index pair per basis function, total degree i + j ascending.
    pairs: Vec<(usize, usize)>,
}

impl TriangleBasis {
    pub fn new(degree: usize) -> Self {
        let mut pairs = Vec::with_capacity(tri_dim(degree));
        for d in 0..=degree {
            for j in 0..=d {
                pairs.push((d - j, j));
            }
        }
        Self { degree, pairs }
    }

    pub fn dim(&self) -> usize {
        self.pairs.len()
    }

    /// Tabulate values and derivatives of the whole family at (x, y).
    ///
    /// The first factor is the scaled Legendre polynomial
    /// f_i = (1-y)^i P_i((2x-(1-y))/(1-y)), evaluated through a recurrence in
    /// the variables u = 2x-(1-y), v = 1-y that stays polynomial at v = 0;
    /// the second factor is a Jacobi polynomial in 2y-1.
    #[allow(clippy::needless_range_loop)]
    pub fn tabulate(&self, x: f64, y: f64) -> PointTab {
        let m = self.degree;
        let dim = self.dim();
        let u = 2.0 * x - (1.0 - y);
        let v = 1.0 - y;
        let t = 2.0 * y - 1.0;

        // Scaled Legendre factor and partial derivatives; u_x = 2, u_y = 1,
        // v_x = 0, v_y = -1.
        let n1 = m + 1;
        let mut f = vec![[0.0f64; 6]; n1]; // [val, fx, fy, fxx, fxy, fyy]
        f[0] = [1.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        if m >= 1 {
            f[1] = [u, 2.0, 1.0, 0.0, 0.0, 0.0];
        }
        for i in 1..m {
            let a = (2.0 * i as f64 + 1.0) / (i as f64 + 1.0);
            let b = i as f64 / (i as f64 + 1.0);
            let (p, q) = (f[i], f[i - 1]);
            let val = a * u * p[0] - b * v * v * q[0];
            let fx = a * (2.0 * p[0] + u * p[1]) - b * v * v * q[1];
            let fy = a * (p[0] + u * p[2]) - b * (-2.0 * v * q[0] + v * v * q[2]);
            let fxx = a * (4.0 * p[1] + u * p[3]) - b * v * v * q[3];
            let fxy = a * (2.0 * p[2] + p[1] + u * p[4]) - b * (-2.0 * v * q[1] + v * v * q[4]);
            let fyy = a * (2.0 * p[2] + u * p[5])
                - b * (2.0 * q[0] - 4.0 * v * q[2] + v * v * q[5]);
            f[i + 1] = [val, fx, fy, fxx, fxy, fyy];
        }

        // Jacobi polynomials P_j^{(2i+1, 0)}(t) with d/dt and d2/dt2 per i.
        // t = 2y - 1, so y-derivatives pick up factors of 2 and 4.
        let mut val = DVector::zeros(dim);
        let mut dx = DVector::zeros(dim);
        let mut dy = DVector::zeros(dim);
        let mut dxx = DVector::zeros(dim);
        let mut dxy = DVector::zeros(dim);
        let mut dyy = DVector::zeros(dim);
        for i in 0..=m {
            let alpha = 2.0 * i as f64 + 1.0;
            let jmax = m - i;
            let mut g = vec![[0.0f64; 3]; jmax + 1]; // [val, d/dt, d2/dt2]
            g[0] = [1.0, 0.0, 0.0];
            if jmax >= 1 {
                g[1] = [
                    ((alpha + 2.0) * t + alpha) / 2.0,
                    (alpha + 2.0) / 2.0,
                    0.0,
                ];
            }
            for j in 2..=jmax {
                let jf = j as f64;
                let c0 = 2.0 * jf * (jf + alpha) * (2.0 * jf + alpha - 2.0);
                let c1 = 2.0 * jf + alpha - 1.0;
                let c2 = (2.0 * jf + alpha) * (2.0 * jf + alpha - 2.0);
                let c3 = alpha * alpha;
                let c4 = 2.0 * (jf + alpha - 1.0) * (jf - 1.0) * (2.0 * jf + alpha);
                let (p, q) = (g[j - 1], g[j - 2]);
                g[j] = [
                    (c1 * (c2 * t + c3) * p[0] - c4 * q[0]) / c0,
                    (c1 * (c2 * (t * p[1] + p[0]) + c3 * p[1]) - c4 * q[1]) / c0,
                    (c1 * (c2 * (t * p[2] + 2.0 * p[1]) + c3 * p[2]) - c4 * q[2]) / c0,
                ];
            }
            for j in 0..=jmax {
                let d = i + j;
                let idx = d * (d + 1) / 2 + j;
                let norm = (2.0 * (2.0 * i as f64 + 1.0) * (i as f64 + j as f64 + 1.0)).sqrt();
                let fi = f[i];
                let gj = g[j];
                let gy = 2.0 * gj[1];
                let gyy = 4.0 * gj[2];
                val[idx] = norm * fi[0] * gj[0];
                dx[idx] = norm * fi[1] * gj[0];
                dy[idx] = norm * (fi[2] * gj[0] + fi[0] * gy);
                dxx[idx] = norm * fi[3] * gj[0];
                dxy[idx] = norm * (fi[4] * gj[0] + fi[1] * gy);
                dyy[idx] = norm * (fi[5] * gj[0] + 2.0 * fi[2] * gy + fi[0] * gyy);
            }
        }
        PointTab {
            val,
            dx,
            dy,
            dxx,
            dxy,
            dyy,
        }
    }

    /// Values of all basis functions at a point.
    pub fn eval_point(&self, x: f64, y: f64) -> DVector<f64> {
        self.tabulate(x, y).val
    }

    /// Gradients (d/dx, d/dy) of all basis functions at a point.
    pub fn grad_point(&self, x: f64, y: f64) -> (DVector<f64>, DVector<f64>) {
        let tab = self.tabulate(x, y);
        (tab.dx, tab.dy)
    }

    /// Second derivatives (d2/dx2, d2/dxdy, d2/dy2) of all basis functions.
    pub fn hess_point(&self, x: f64, y: f64) -> (DVector<f64>, DVector<f64>, DVector<f64>) {
        let tab = self.tabulate(x, y);
        (tab.dxx, tab.dxy, tab.dyy)
    }

    /// Value matrix: rows = points, columns = basis functions.
    pub fn eval(&self, points: &[[f64; 2]]) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(points.len(), self.dim());
        for (r, p) in points.iter().enumerate() {
            out.row_mut(r)
                .copy_from(&self.eval_point(p[0], p[1]).transpose());
        }
        out
    }

    /// Gradient tensors: one matrix per derivative direction, rows = points.
    pub fn grad(&self, points: &[[f64; 2]]) -> (DMatrix<f64>, DMatrix<f64>) {
        let mut gx = DMatrix::zeros(points.len(), self.dim());
        let mut gy = DMatrix::zeros(points.len(), self.dim());
        for (r, p) in points.iter().enumerate() {
            let (dx, dy) = self.grad_point(p[0], p[1]);
            gx.row_mut(r).copy_from(&dx.transpose());
            gy.row_mut(r).copy_from(&dy.transpose());
        }
        (gx, gy)
    }
}

/// Orthonormal 1D modal basis of P^degree on the unit interval: shifted, normalized
/// Legendre polynomials.
#[derive(Debug, Clone)]
pub struct EdgeBasis {
    pub degree: usize,
}

impl EdgeBasis {
    pub fn new(degree: usize) -> Self {
        Self { degree }
    }

    pub fn dim(&self) -> usize {
        self.degree + 1
    }

    /// Values of all basis functions at s in the unit interval.
    pub fn eval_point(&self, s: f64) -> DVector<f64> {
        let t = 2.0 * s - 1.0;
        let n = self.dim();
        let mut out = DVector::zeros(n);
        let mut p0 = 1.0;
        let mut p1 = t;
        out[0] = 1.0;
        if n > 1 {
            out[1] = 3f64.sqrt() * t;
        }
        for j in 2..n {
            let jf = j as f64;
            let p2 = ((2.0 * jf - 1.0) * t * p1 - (jf - 1.0) * p0) / jf;
            p0 = p1;
            p1 = p2;
            out[j] = (2.0 * jf + 1.0).sqrt() * p2;
        }
        out
    }
}

/// Principal-lattice interpolation nodes for P^degree on the reference
/// triangle: {(i/m, j/m) : i, j >= 0, i + j <= m}. Degree zero falls back to
/// the centroid.
pub fn lagrange_nodes(degree: usize) -> Vec<[f64; 2]> {
    if degree == 0 {
        return vec![[1.0 / 3.0, 1.0 / 3.0]];
    }
    let m = degree as f64;
    let mut nodes = Vec::with_capacity(tri_dim(degree));
    for j in 0..=degree {
        for i in 0..=(degree - j) {
            nodes.push([i as f64 / m, j as f64 / m]);
        }
    }
    nodes
}

/// Nodal machinery tying the modal family to the Lagrange lattice:
/// `vandermonde[n][m]` = modal function m at node n, plus its inverse.
#[derive(Debug, Clone)]
pub struct NodalBasis {
    pub nodes: Vec<[f64; 2]>,
    pub vandermonde: DMatrix<f64>,
    pub inverse: DMatrix<f64>,
}

impl NodalBasis {
    pub fn new(basis: &TriangleBasis) -> Result<Self> {
        let nodes = lagrange_nodes(basis.degree);
        let vandermonde = basis.eval(&nodes);
        let inverse = vandermonde.clone().try_inverse().ok_or_else(|| {
            Error::LinearAlgebra(format!(
                "singular Vandermonde matrix at degree {}",
                basis.degree
            ))
        })?;
        Ok(Self {
            nodes,
            vandermonde,
            inverse,
        })
    }
}
