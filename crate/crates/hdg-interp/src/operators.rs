//! Per-element HDG operators in the reformulated (trace-free) form.
//!
//! The method couples, on each element K,
//!
//! * the flux equation  (q, r) - (u, div r) + <u_hat, r.n> = 0,
//! * the scalar equation  sigma (u, v) + (div q, v) - <q.n, v_hat>
//!   + (1/h_K) <P(u, u_hat) trace jump, P(v, v_hat) trace jump> = rhs,
//!
//! where P is the local postprocessing map and the jump of a pair is the
//! face projection of the reconstruction minus the face unknown. With
//! orthonormal bases both mass blocks are the identity, so the element data
//! reduces to the divergence moments, the flux trace moments, the three
//! stabilization blocks, and the nonlinearity coupling used by the
//! interpolatory treatment of F.

use crate::error::Result;
use crate::mesh::Mesh;
use crate::projector::{ElementProjector, ReferenceElements};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use std::sync::Arc;

/// Precomputed matrices of one element.
pub struct ElementOperators {
    pub projector: ElementProjector,
    /// [i, j] = (scalar basis j, divergence of flux basis i); rows stack the
    /// x-component block then the y-component block.
    pub div_moments: DMatrix<f64>,
    /// Flux-trace coupling, columns stacked per face slot:
    /// [i, slot*f+j] = <face basis j, flux basis i . n>.
    pub flux_trace: DMatrix<f64>,
    /// Stabilization blocks (already weighted by 1/h_K).
    pub stab_scalar_scalar: DMatrix<f64>,
    pub stab_scalar_trace: DMatrix<f64>,
    pub stab_trace_trace: DMatrix<f64>,
    /// [i, n] = (scalar basis i, Lagrange function n): moves nodal values of
    /// the interpolated nonlinearity into scalar test moments.
    pub nonlin_coupling: DMatrix<f64>,
    /// Nodal evaluation of degree-(k+1) coefficients (post_dim x post_dim).
    pub nodal_map: DMatrix<f64>,
}

impl ElementOperators {
    pub fn new(mesh: &Mesh, element: usize, refs: Arc<ReferenceElements>) -> Result<Self> {
        let projector = ElementProjector::new(mesh, element, Arc::clone(&refs))?;
        let d_flux = refs.flux_dim();
        let d_scalar = refs.scalar_dim();
        let d_post = refs.post_dim();
        let f_dim = refs.face_dim();
        let geom = &projector.geometry;
        let ji = &geom.jac_inv;

        // Divergence moments by assembly quadrature (polynomial, exact).
        let mut div_moments = DMatrix::zeros(2 * d_flux, d_scalar);
        for (p, w) in refs.volume_rule.points.iter().zip(&refs.volume_rule.weights) {
            let tab = refs.tri.tabulate(p[0], p[1]);
            for i in 0..d_flux {
                // Physical gradient of modal i: J^{-T} (dx, dy).
                let gx = ji[0][0] * tab.dx[i] + ji[1][0] * tab.dy[i];
                let gy = ji[0][1] * tab.dx[i] + ji[1][1] * tab.dy[i];
                for j in 0..d_scalar {
                    div_moments[(i, j)] += w * tab.val[j] * gx;
                    div_moments[(d_flux + i, j)] += w * tab.val[j] * gy;
                }
            }
        }

        // Flux traces reuse the projector's face moments.
        let mut flux_trace = DMatrix::zeros(2 * d_flux, 3 * f_dim);
        for slot in 0..3 {
            let n = geom.faces[slot].normal;
            let w_mat = &projector.trace_moments[slot];
            for i in 0..d_flux {
                for j in 0..f_dim {
                    flux_trace[(i, slot * f_dim + j)] = n[0] * w_mat[(j, i)];
                    flux_trace[(d_flux + i, slot * f_dim + j)] = n[1] * w_mat[(j, i)];
                }
            }
        }

        // Stabilization through the postprocessing map: jump(u, u_hat) on a
        // face is the trace projection of the reconstruction minus the face
        // coefficients. Face bases are orthonormal so the quadratic form is a
        // plain Gram product.
        let tau = refs.config.tau(geom.diameter);
        let mut jump_scalar = DMatrix::zeros(3 * f_dim, d_scalar);
        let mut jump_trace = DMatrix::zeros(3 * f_dim, 3 * f_dim);
        for slot in 0..3 {
            let r = &projector.trace_moments[slot]; // f_dim x d_post
            let js = r * &projector.post_from_scalar;
            let jt = r * &projector.post_from_trace;
            jump_scalar.rows_mut(slot * f_dim, f_dim).copy_from(&js);
            jump_trace.rows_mut(slot * f_dim, f_dim).copy_from(&jt);
            for j in 0..f_dim {
                jump_trace[(slot * f_dim + j, slot * f_dim + j)] -= 1.0;
            }
        }
        let stab_scalar_scalar = tau * jump_scalar.transpose() * &jump_scalar;
        let stab_scalar_trace = tau * jump_scalar.transpose() * &jump_trace;
        let stab_trace_trace = tau * jump_trace.transpose() * &jump_trace;

        // Nonlinearity coupling: (Lagrange_n, scalar_i)_K = sqrt(det) times
        // the corresponding entry of the inverse Vandermonde.
        let sqrt_det = geom.det.sqrt();
        let mut nonlin_coupling = DMatrix::zeros(d_scalar, d_post);
        for i in 0..d_scalar {
            for n in 0..d_post {
                nonlin_coupling[(i, n)] = sqrt_det * refs.nodal.inverse[(i, n)];
            }
        }
        let nodal_map = &refs.nodal.vandermonde / sqrt_det;

        Ok(Self {
            projector,
            div_moments,
            flux_trace,
            stab_scalar_scalar,
            stab_scalar_trace,
            stab_trace_trace,
            nonlin_coupling,
            nodal_map,
        })
    }

    /// Build operators for every element (parallel, deterministic output).
    pub fn build_all(mesh: &Mesh, refs: &Arc<ReferenceElements>) -> Result<Vec<Self>> {
        (0..mesh.n_elements())
            .into_par_iter()
            .map(|e| Self::new(mesh, e, Arc::clone(refs)))
            .collect()
    }

    pub fn refs(&self) -> &ReferenceElements {
        self.projector.refs()
    }

    /// Flux recovered from the first equation: q = B u - C u_hat.
    pub fn recover_flux(&self, scalar: &DVector<f64>, traces: &DVector<f64>) -> DVector<f64> {
        &self.div_moments * scalar - &self.flux_trace * traces
    }

    /// Scalar-tested spatial terms: (div q, v) + stabilization rows.
    pub fn apply_scalar_form(
        &self,
        flux: &DVector<f64>,
        scalar: &DVector<f64>,
        traces: &DVector<f64>,
    ) -> DVector<f64> {
        self.div_moments.transpose() * flux
            + &self.stab_scalar_scalar * scalar
            + &self.stab_scalar_trace * traces
    }

    /// Face-tested spatial terms: -<q.n, v_hat> + stabilization rows.
    pub fn apply_face_form(
        &self,
        flux: &DVector<f64>,
        scalar: &DVector<f64>,
        traces: &DVector<f64>,
    ) -> DVector<f64> {
        -self.flux_trace.transpose() * flux
            + self.stab_scalar_trace.transpose() * scalar
            + &self.stab_trace_trace * traces
    }

    /// Interpolatory nonlinear term tested against the scalar space:
    /// nodal values of the reconstruction, mapped through F, then through the
    /// fixed coupling matrix.
    pub fn nonlinear_term(&self, post: &DVector<f64>, f: impl Fn(f64) -> f64) -> DVector<f64> {
        let nodes = &self.nodal_map * post;
        let fv = DVector::from_iterator(nodes.len(), nodes.iter().map(|u| f(*u)));
        &self.nonlin_coupling * fv
    }

    /// Nodal values of a reconstruction coefficient vector.
    pub fn nodal_values(&self, post: &DVector<f64>) -> DVector<f64> {
        &self.nodal_map * post
    }

    /// Local saddle matrix [[-I, B], [B^T, sigma I + S_uu]] for the
    /// sigma-weighted scalar mass (sigma = 0 steady, 2/dt for time stepping).
    pub fn local_matrix(&self, sigma: f64) -> DMatrix<f64> {
        let d_flux2 = self.div_moments.nrows();
        let d_scalar = self.div_moments.ncols();
        let n = d_flux2 + d_scalar;
        let mut a = DMatrix::zeros(n, n);
        for i in 0..d_flux2 {
            a[(i, i)] = -1.0;
        }
        a.view_mut((0, d_flux2), (d_flux2, d_scalar))
            .copy_from(&self.div_moments);
        a.view_mut((d_flux2, 0), (d_scalar, d_flux2))
            .copy_from(&self.div_moments.transpose());
        let mut lower_right = self.stab_scalar_scalar.clone();
        for i in 0..d_scalar {
            lower_right[(i, i)] += sigma;
        }
        a.view_mut((d_flux2, d_flux2), (d_scalar, d_scalar))
            .copy_from(&lower_right);
        a
    }

    /// Coupling of local unknowns to the element's stacked face unknowns:
    /// `[[-C], [S_ut]]`.
    pub fn local_face_coupling(&self) -> DMatrix<f64> {
        let d_flux2 = self.div_moments.nrows();
        let d_scalar = self.div_moments.ncols();
        let n_faces = self.flux_trace.ncols();
        let mut b = DMatrix::zeros(d_flux2 + d_scalar, n_faces);
        b.view_mut((0, 0), (d_flux2, n_faces))
            .copy_from(&(-&self.flux_trace));
        b.view_mut((d_flux2, 0), (d_scalar, n_faces))
            .copy_from(&self.stab_scalar_trace);
        b
    }

    /// Moments of a source function against the scalar space.
    pub fn source_moments(&self, f: impl Fn(f64, f64) -> f64) -> DVector<f64> {
        self.projector
            .project_scalar(f, self.refs().config.scalar_degree())
    }
}
