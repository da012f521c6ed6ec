//! Method variants and polynomial degree bookkeeping.
//!
//! All three variants approximate the flux and the face trace with degree-k
//! polynomials; they differ in the scalar space degree and therefore in how
//! much work the local postprocessing does:
//!
//! | variant | scalar degree | postprocessed rate |
//! |---------|---------------|--------------------|
//! | A       | k + 1         | k + 2 (k >= 0)     |
//! | B       | k             | k + 2 (k >= 0)     |
//! | C       | k - 1         | k + 2 (k >= 2)     |

use crate::error::{Error, Result};

/// Highest supported flux degree.
pub const MAX_DEGREE: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    A,
    B,
    C,
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Variant::A => write!(f, "A"),
            Variant::B => write!(f, "B"),
            Variant::C => write!(f, "C"),
        }
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "A" | "a" => Ok(Variant::A),
            "B" | "b" => Ok(Variant::B),
            "C" | "c" => Ok(Variant::C),
            other => Err(Error::InvalidArgument(format!("unknown variant {other:?}"))),
        }
    }
}

/// Variant plus flux degree k; the scalar degree and the stabilization weight
/// 1/h_K follow from them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DegreeConfig {
    pub variant: Variant,
    pub k: usize,
}

impl DegreeConfig {
    pub fn new(variant: Variant, k: usize) -> Result<Self> {
        if k > MAX_DEGREE {
            return Err(Error::UnsupportedDegree(format!(
                "k = {k} exceeds supported maximum {MAX_DEGREE}"
            )));
        }
        if variant == Variant::C && k == 0 {
            return Err(Error::Config("variant C requires k >= 1".into()));
        }
        Ok(Self { variant, k })
    }

    /// Scalar space degree: k+1 (A), k (B), k-1 (C).
    pub fn scalar_degree(&self) -> usize {
        match self.variant {
            Variant::A => self.k + 1,
            Variant::B => self.k,
            Variant::C => self.k - 1,
        }
    }

    /// Stabilization weight on an element of diameter `h`.
    pub fn tau(&self, h: f64) -> f64 {
        1.0 / h
    }

    /// Quadrature exactness used for operator assembly.
    pub fn assembly_exactness(&self) -> usize {
        2 * (self.k + 1) + 1
    }

    /// Quadrature exactness used for error norms (over-integration).
    pub fn error_exactness(&self) -> usize {
        2 * (self.k + 1) + 6
    }
}
