//! Quadrature rules on the reference edge (the unit interval) and the reference triangle
//! {(x,y): x >= 0, y >= 0, x + y <= 1}.
//!
//! Triangle rules are conical products of Gauss-Legendre rules through the
//! Duffy map (x, y) = (s(1-t), t); the map Jacobian (1-t) is absorbed into
//! the weights. All weights are positive and the stated polynomial exactness
//! is honored to machine precision.

use crate::error::{Error, Result};

/// Largest supported polynomial exactness for triangle rules.
pub const MAX_EXACTNESS: usize = 20;

/// Points and weights integrating polynomials up to `exactness` exactly.
///
/// Points live on the reference element (edge or triangle); weights sum to
/// its measure (1 for the edge, 1/2 for the triangle).
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
    pub exactness: usize,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Integrate `f` over the reference element.
    pub fn integrate(&self, mut f: impl FnMut(f64, f64) -> f64) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(p, w)| w * f(p[0], p[1]))
            .sum()
    }
}

/// 1D rule on the unit interval, exact for polynomials of degree `exactness`.
#[derive(Debug, Clone)]
pub struct EdgeRule {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
    pub exactness: usize,
}

impl EdgeRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(s, w)| w * f(*s))
            .sum()
    }
}

/// Gauss-Legendre nodes and weights on [-1,1], by Newton iteration on the
/// Legendre recurrence. Accurate to machine precision for the sizes used here.
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        // Chebyshev-like initial guess.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Evaluate P_n and P_n' at x via the three-term recurrence.
            let mut p0 = 1.0;
            let mut p1 = x;
            for j in 2..=n {
                let jf = j as f64;
                let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
                p0 = p1;
                p1 = p2;
            }
            dp = (n as f64) * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    // Newton's starting guesses enumerate roots in decreasing order; flip for
    // a deterministic ascending layout.
    nodes.reverse();
    weights.reverse();
    (nodes, weights)
}

/// Gauss-Legendre rule mapped to the unit interval, exact for degree `exactness`.
pub fn edge_rule(exactness: usize) -> EdgeRule {
    let n = exactness / 2 + 1;
    let (xs, ws) = gauss_legendre(n);
    EdgeRule {
        points: xs.iter().map(|x| 0.5 * (x + 1.0)).collect(),
        weights: ws.iter().map(|w| 0.5 * w).collect(),
        exactness,
    }
}

/// Conical-product rule on the reference triangle, exact for total degree
/// `exactness`. Errors for exactness above [`MAX_EXACTNESS`].
pub fn triangle_rule(exactness: usize) -> Result<QuadratureRule> {
    if exactness > MAX_EXACTNESS {
        return Err(Error::UnsupportedDegree(format!(
            "triangle quadrature exactness {exactness} exceeds {MAX_EXACTNESS}"
        )));
    }
    // Under the Duffy map the integrand picks up the factor (1-t): degree
    // `exactness` in s, `exactness + 1` in t.
    let ns = exactness / 2 + 1;
    let nt = (exactness + 2).div_ceil(2);
    let (s_nodes, s_weights) = gauss_legendre(ns);
    let (t_nodes, t_weights) = gauss_legendre(nt);
    let mut points = Vec::with_capacity(ns * nt);
    let mut weights = Vec::with_capacity(ns * nt);
    for (t, wt) in t_nodes.iter().zip(&t_weights) {
        let t01 = 0.5 * (t + 1.0);
        for (s, ws) in s_nodes.iter().zip(&s_weights) {
            let s01 = 0.5 * (s + 1.0);
            points.push([s01 * (1.0 - t01), t01]);
            weights.push(0.25 * ws * wt * (1.0 - t01));
        }
    }
    Ok(QuadratureRule {
        points,
        weights,
        exactness,
    })
}

/// Exact integral of x^a y^b over the reference triangle: a! b! / (a+b+2)!.
pub fn monomial_integral(a: usize, b: usize) -> f64 {
    // Evaluated as a product of ratios to stay exact in f64 for the degrees
    // used here (a + b <= ~24).
    // a! b! / (a+b+2)! = prod_{i=1..b} i/(a+i) / ((a+b+1)(a+b+2))
    let mut value = 1.0;
    for i in 1..=b {
        value *= i as f64 / (a + i) as f64;
    }
    value / ((a + b + 1) as f64 * (a + b + 2) as f64)
}
