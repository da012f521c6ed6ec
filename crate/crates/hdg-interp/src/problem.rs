//! Reaction nonlinearities and manufactured problems on the unit square.
//!
//! A manufactured problem fixes the exact solution and derives the source
//! term f = u_t - laplace(u) + F(u), so every run has a known error. All
//! built-in solutions vanish on the boundary of the unit square, matching
//! the homogeneous Dirichlet condition built into the trace space.

use crate::error::{Error, Result};
use std::sync::Arc;

type Scalar3 = Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>;
type Grad3 = Arc<dyn Fn(f64, f64, f64) -> [f64; 2] + Send + Sync>;

/// Pointwise reaction term F and its derivative.
#[derive(Clone)]
pub struct Nonlinearity {
    pub name: &'static str,
    zero: bool,
    f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    df: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl Nonlinearity {
    pub fn new(
        name: &'static str,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        df: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            name,
            zero: false,
            f: Arc::new(f),
            df: Arc::new(df),
        }
    }

    /// Chaffee-Infante reaction F(u) = u^3 - u.
    pub fn chaffee_infante() -> Self {
        Self::new("chaffee_infante", |u| u * u * u - u, |u| 3.0 * u * u - 1.0)
    }

    /// No reaction: F = 0 (linear heat equation).
    pub fn none() -> Self {
        let mut nl = Self::new("none", |_| 0.0, |_| 0.0);
        nl.zero = true;
        nl
    }

    /// Whether the reaction is identically zero (steps become single solves).
    pub fn is_zero(&self) -> bool {
        self.zero
    }

    pub fn eval(&self, u: f64) -> f64 {
        (self.f)(u)
    }

    pub fn derivative(&self, u: f64) -> f64 {
        (self.df)(u)
    }
}

impl std::fmt::Debug for Nonlinearity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Nonlinearity").field("name", &self.name).finish()
    }
}

/// Exact solution, derivatives, nonlinearity, and the derived source term.
#[derive(Clone)]
pub struct ManufacturedProblem {
    pub name: String,
    pub t_final: f64,
    pub nonlinearity: Nonlinearity,
    exact: Scalar3,
    gradient: Grad3,
    time_derivative: Scalar3,
    laplacian: Option<Scalar3>,
}

impl ManufacturedProblem {
    pub fn new(
        name: impl Into<String>,
        t_final: f64,
        nonlinearity: Nonlinearity,
        exact: impl Fn(f64, f64, f64) -> f64 + Send + Sync + 'static,
        gradient: impl Fn(f64, f64, f64) -> [f64; 2] + Send + Sync + 'static,
        time_derivative: impl Fn(f64, f64, f64) -> f64 + Send + Sync + 'static,
        laplacian: Option<Scalar3>,
    ) -> Self {
        Self {
            name: name.into(),
            t_final,
            nonlinearity,
            exact: Arc::new(exact),
            gradient: Arc::new(gradient),
            time_derivative: Arc::new(time_derivative),
            laplacian,
        }
    }

    /// Chaffee-Infante equation with exact solution
    /// u = sin(t) sin(pi x) sin(pi y).
    pub fn chaffee_infante() -> Self {
        use std::f64::consts::PI;
        Self::new(
            "chaffee_infante",
            1.0,
            Nonlinearity::chaffee_infante(),
            |x, y, t| t.sin() * (PI * x).sin() * (PI * y).sin(),
            |x, y, t| {
                [
                    t.sin() * PI * (PI * x).cos() * (PI * y).sin(),
                    t.sin() * PI * (PI * x).sin() * (PI * y).cos(),
                ]
            },
            |x, y, t| t.cos() * (PI * x).sin() * (PI * y).sin(),
            Some(Arc::new(|x: f64, y: f64, t: f64| {
                -2.0 * PI * PI * t.sin() * (PI * x).sin() * (PI * y).sin()
            })),
        )
    }

    /// Heat equation (F = 0) with a solution linear in time and polynomial in
    /// space: u = (1 + t) x (1 - x) y (1 - y).
    pub fn linear_polynomial() -> Self {
        let bubble = |x: f64, y: f64| x * (1.0 - x) * y * (1.0 - y);
        Self::new(
            "linear_poly",
            1.0,
            Nonlinearity::none(),
            move |x, y, t| (1.0 + t) * bubble(x, y),
            |x, y, t| {
                [
                    (1.0 + t) * (1.0 - 2.0 * x) * y * (1.0 - y),
                    (1.0 + t) * x * (1.0 - x) * (1.0 - 2.0 * y),
                ]
            },
            move |x, y, _| bubble(x, y),
            Some(Arc::new(|x: f64, y: f64, t: f64| {
                -2.0 * (1.0 + t) * (y * (1.0 - y) + x * (1.0 - x))
            })),
        )
    }

    /// Heat equation (F = 0) with u = sin(t) sin(pi x) sin(pi y); used for
    /// temporal-order studies.
    pub fn linear_sine() -> Self {
        use std::f64::consts::PI;
        Self::new(
            "linear_sine",
            1.0,
            Nonlinearity::none(),
            |x, y, t| t.sin() * (PI * x).sin() * (PI * y).sin(),
            |x, y, t| {
                [
                    t.sin() * PI * (PI * x).cos() * (PI * y).sin(),
                    t.sin() * PI * (PI * x).sin() * (PI * y).cos(),
                ]
            },
            |x, y, t| t.cos() * (PI * x).sin() * (PI * y).sin(),
            Some(Arc::new(|x: f64, y: f64, t: f64| {
                -2.0 * PI * PI * t.sin() * (PI * x).sin() * (PI * y).sin()
            })),
        )
    }

    /// Chaffee-Infante reaction with a decaying exact solution
    /// u = exp(-t) sin(pi x) sin(pi y).
    pub fn decaying_exponential() -> Self {
        use std::f64::consts::PI;
        Self::new(
            "decaying_exp",
            1.0,
            Nonlinearity::chaffee_infante(),
            |x, y, t| (-t).exp() * (PI * x).sin() * (PI * y).sin(),
            |x, y, t| {
                [
                    (-t).exp() * PI * (PI * x).cos() * (PI * y).sin(),
                    (-t).exp() * PI * (PI * x).sin() * (PI * y).cos(),
                ]
            },
            |x, y, t| -(-t).exp() * (PI * x).sin() * (PI * y).sin(),
            Some(Arc::new(|x: f64, y: f64, t: f64| {
                -2.0 * PI * PI * (-t).exp() * (PI * x).sin() * (PI * y).sin()
            })),
        )
    }

    /// Look up a built-in problem by CLI name.
    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "chaffee_infante" => Ok(Self::chaffee_infante()),
            "linear_poly" => Ok(Self::linear_polynomial()),
            "custom" => Ok(Self::decaying_exponential()),
            other => Err(Error::InvalidArgument(format!("unknown problem {other:?}"))),
        }
    }

    pub fn exact(&self, x: f64, y: f64, t: f64) -> f64 {
        (self.exact)(x, y, t)
    }

    /// Exact flux -grad u.
    pub fn exact_flux(&self, x: f64, y: f64, t: f64) -> [f64; 2] {
        let g = (self.gradient)(x, y, t);
        [-g[0], -g[1]]
    }

    pub fn du_dt(&self, x: f64, y: f64, t: f64) -> f64 {
        (self.time_derivative)(x, y, t)
    }

    /// -laplace(u), required by the elliptic solve and the source term.
    pub fn neg_laplacian(&self, x: f64, y: f64, t: f64) -> Result<f64> {
        match &self.laplacian {
            Some(l) => Ok(-l(x, y, t)),
            None => Err(Error::Config(format!(
                "problem {:?} does not provide a Laplacian",
                self.name
            ))),
        }
    }

    pub fn has_laplacian(&self) -> bool {
        self.laplacian.is_some()
    }

    /// Derived source f = u_t - laplace(u) + F(u).
    pub fn source(&self, x: f64, y: f64, t: f64) -> Result<f64> {
        let u = self.exact(x, y, t);
        Ok(self.du_dt(x, y, t) + self.neg_laplacian(x, y, t)? + self.nonlinearity.eval(u))
    }

    /// Wiring check: the source really is u_t - laplace(u) + F(u) at random
    /// space-time points.
    pub fn verify_consistency(&self, samples: usize, seed: u64) -> Result<f64> {
        // Simple deterministic low-discrepancy points; no RNG dependency.
        let mut max_err = 0.0f64;
        let mut state = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(1);
        let mut next = || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..samples {
            let (x, y, t) = (next(), next(), next());
            let lhs = self.du_dt(x, y, t) + self.neg_laplacian(x, y, t)?
                + self.nonlinearity.eval(self.exact(x, y, t));
            let rhs = self.source(x, y, t)?;
            max_err = max_err.max((lhs - rhs).abs());
        }
        Ok(max_err)
    }
}

impl std::fmt::Debug for ManufacturedProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ManufacturedProblem")
            .field("name", &self.name)
            .field("t_final", &self.t_final)
            .field("nonlinearity", &self.nonlinearity)
            .finish()
    }
}
