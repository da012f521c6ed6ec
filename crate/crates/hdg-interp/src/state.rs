//! Discrete solution at one time level.

use nalgebra::DVector;

/// Coefficient vectors of all unknowns at one time level: per-element flux
/// and scalar coefficients, global interior-face trace coefficients, and the
//  derived postprocessed reconstruction.
#[derive(Debug, Clone)]
pub struct FieldState {
    pub time: f64,
    /// Per element: stacked (x-block, y-block) flux coefficients.
    pub flux: Vec<DVector<f64>>,
    /// Per element: scalar coefficients.
    pub scalar: Vec<DVector<f64>>,
    /// Global interior-face trace coefficients.
    pub trace: Vec<f64>,
    /// Per element: degree-(k+1) reconstruction coefficients.
    pub post: Vec<DVector<f64>>,
}

impl FieldState {
    pub fn zero(n_elements: usize, d_flux: usize, d_scalar: usize, d_post: usize, n_trace: usize) -> Self {
        Self {
            time: 0.0,
            flux: (0..n_elements).map(|_| DVector::zeros(d_flux)).collect(),
            scalar: (0..n_elements).map(|_| DVector::zeros(d_scalar)).collect(),
            trace: vec![0.0; n_trace],
            post: (0..n_elements).map(|_| DVector::zeros(d_post)).collect(),
        }
    }

    /// Largest coefficient magnitude across all unknowns.
    pub fn amax(&self) -> f64 {
        let mut m = self.trace.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        for v in self.flux.iter().chain(&self.scalar).chain(&self.post) {
            if !v.is_empty() {
                m = m.max(v.amax());
            }
        }
        m
    }

    /// Largest coefficient difference against another state.
    pub fn max_difference(&self, other: &Self) -> f64 {
        let mut m = self
            .trace
            .iter()
            .zip(&other.trace)
            .fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
        for (a, b) in self.flux.iter().zip(&other.flux) {
            m = m.max((a - b).amax());
        }
        for (a, b) in self.scalar.iter().zip(&other.scalar) {
            m = m.max((a - b).amax());
        }
        for (a, b) in self.post.iter().zip(&other.post) {
            m = m.max((a - b).amax());
        }
        m
    }
}
