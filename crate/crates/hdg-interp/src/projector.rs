//! Per-element projections, local postprocessing, and nodal interpolation.
//!
//! Every element carries matrices realizing:
//!
//! * elementwise L2 projection onto P^m for any m up to k+1,
//! * per-face L2 projection of traces onto P^k,
//! * the local postprocessing map taking scalar and trace coefficients to a
//!   degree-(k+1) reconstruction: its gradient moments against the part of
//!   P^{k+1} orthogonal to the scalar space match the weak gradient of the
//!   pair, while its projection back onto the scalar space reproduces the
//!   scalar input exactly,
//! * nodal evaluation and Lagrange interpolation on the degree-(k+1) lattice.
//!
//! Coefficients are stored against orthonormal physical bases (modal functions
//! scaled by 1/sqrt(2|K|), face functions by 1/sqrt(|e|)), so mass matrices
//! are identity, projections are plain moment evaluations, and coefficient
//! norms equal L2 norms.

use crate::basis::{tri_dim, EdgeBasis, NodalBasis, TriangleBasis};
use crate::degree::DegreeConfig;
use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::quadrature::{edge_rule, triangle_rule, EdgeRule, QuadratureRule};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use std::sync::Arc;

/// Reference-element data shared by every element of a run: bases for the
/// flux/scalar/postprocessing spaces, the face basis, the nodal lattice, and
/// the assembly quadrature rules.
#[derive(Debug, Clone)]
pub struct ReferenceElements {
    pub config: DegreeConfig,
    /// Orthonormal modal family of degree k+1; the flux and scalar spaces are
    /// its leading sub-families.
    pub tri: TriangleBasis,
    pub edge: EdgeBasis,
    pub nodal: NodalBasis,
    /// Assembly rule for the (polynomial) operator integrals.
    pub volume_rule: QuadratureRule,
    pub face_rule: EdgeRule,
    /// Over-integrated rules for projecting general data.
    pub data_rule: QuadratureRule,
    pub data_face_rule: EdgeRule,
}

impl ReferenceElements {
    pub fn new(config: DegreeConfig) -> Result<Self> {
        let tri = TriangleBasis::new(config.k + 1);
        let edge = EdgeBasis::new(config.k);
        let nodal = NodalBasis::new(&tri)?;
        let volume_rule = triangle_rule(config.assembly_exactness())?;
        let face_rule = edge_rule(2 * (config.k + 1));
        let data_rule = triangle_rule(config.error_exactness())?;
        let data_face_rule = edge_rule(config.error_exactness());
        Ok(Self {
            config,
            tri,
            edge,
            nodal,
            volume_rule,
            face_rule,
            data_rule,
            data_face_rule,
        })
    }

    pub fn flux_dim(&self) -> usize {
        tri_dim(self.config.k)
    }

    pub fn scalar_dim(&self) -> usize {
        tri_dim(self.config.scalar_degree())
    }

    pub fn post_dim(&self) -> usize {
        tri_dim(self.config.k + 1)
    }

    pub fn face_dim(&self) -> usize {
        self.config.k + 1
    }
}

/// Geometry of one face as seen from one element.
#[derive(Debug, Clone, Copy)]
pub struct FaceGeometry {
    /// Global face index.
    pub face: usize,
    /// Whether this element is the face's left element.
    pub is_left: bool,
    /// Outward unit normal of this element.
    pub normal: [f64; 2],
    pub length: f64,
    /// Reference coordinates of the global parametrization endpoints
    /// (lower vertex index at s=0, higher at s=1).
    pub ref_start: [f64; 2],
    pub ref_end: [f64; 2],
}

/// Affine geometry of one element.
#[derive(Debug, Clone)]
pub struct ElementGeometry {
    pub origin: [f64; 2],
    /// Columns are the edge vectors v1-v0 and v2-v0.
    pub jac: [[f64; 2]; 2],
    pub jac_inv: [[f64; 2]; 2],
    /// det(jac) = 2 * area.
    pub det: f64,
    /// J^{-1} J^{-T}.
    pub metric: [[f64; 2]; 2],
    pub diameter: f64,
    pub faces: [FaceGeometry; 3],
}

impl ElementGeometry {
    pub fn new(mesh: &Mesh, element: usize) -> Result<Self> {
        let verts = mesh.triangle_vertices(element);
        let jac = [
            [verts[1][0] - verts[0][0], verts[2][0] - verts[0][0]],
            [verts[1][1] - verts[0][1], verts[2][1] - verts[0][1]],
        ];
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        if det < 1e-14 {
            return Err(Error::MeshIntegrity(format!(
                "element {element} is degenerate (area {})",
                det / 2.0
            )));
        }
        let jac_inv = [
            [jac[1][1] / det, -jac[0][1] / det],
            [-jac[1][0] / det, jac[0][0] / det],
        ];
        let metric = [
            [
                jac_inv[0][0] * jac_inv[0][0] + jac_inv[0][1] * jac_inv[0][1],
                jac_inv[0][0] * jac_inv[1][0] + jac_inv[0][1] * jac_inv[1][1],
            ],
            [
                jac_inv[1][0] * jac_inv[0][0] + jac_inv[1][1] * jac_inv[0][1],
                jac_inv[1][0] * jac_inv[1][0] + jac_inv[1][1] * jac_inv[1][1],
            ],
        ];
        let tri = mesh.triangles()[element];
        let ref_coords = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        let mut faces = Vec::with_capacity(3);
        for slot in 0..3 {
            let ef = mesh.element_faces(element)[slot];
            let face = &mesh.faces()[ef.face];
            let normal = if ef.is_left {
                face.normal
            } else {
                [-face.normal[0], -face.normal[1]]
            };
            let local_of = |global: usize| -> usize {
                tri.iter().position(|&v| v == global).expect("face vertex in element")
            };
            let ref_start = ref_coords[local_of(face.vertices[0])];
            let ref_end = ref_coords[local_of(face.vertices[1])];
            faces.push(FaceGeometry {
                face: ef.face,
                is_left: ef.is_left,
                normal,
                length: face.length,
                ref_start,
                ref_end,
            });
        }
        Ok(Self {
            origin: verts[0],
            jac,
            jac_inv,
            det,
            metric,
            diameter: mesh.diameter(element),
            faces: [faces[0], faces[1], faces[2]],
        })
    }

    /// Map reference coordinates to physical coordinates.
    pub fn to_physical(&self, xr: f64, yr: f64) -> [f64; 2] {
        [
            self.origin[0] + self.jac[0][0] * xr + self.jac[0][1] * yr,
            self.origin[1] + self.jac[1][0] * xr + self.jac[1][1] * yr,
        ]
    }

    /// Map physical coordinates to reference coordinates.
    pub fn to_reference(&self, x: f64, y: f64) -> [f64; 2] {
        let dx = x - self.origin[0];
        let dy = y - self.origin[1];
        [
            self.jac_inv[0][0] * dx + self.jac_inv[0][1] * dy,
            self.jac_inv[1][0] * dx + self.jac_inv[1][1] * dy,
        ]
    }

    /// Physical point on face `slot` at global parameter s.
    pub fn face_point(&self, slot: usize, s: f64) -> [f64; 2] {
        let f = &self.faces[slot];
        let xr = f.ref_start[0] + s * (f.ref_end[0] - f.ref_start[0]);
        let yr = f.ref_start[1] + s * (f.ref_end[1] - f.ref_start[1]);
        self.to_physical(xr, yr)
    }
}

/// Projection and postprocessing operators of one element.
pub struct ElementProjector {
    pub geometry: ElementGeometry,
    refs: Arc<ReferenceElements>,
    /// Per face: trace moments [i, m] = (face basis i, modal m) over the face.
    pub trace_moments: [DMatrix<f64>; 3],
    /// Per face: [m, i] = (face basis i, outward normal derivative of modal m).
    pub normal_grad_moments: [DMatrix<f64>; 3],
    /// Postprocessing map from scalar coefficients (post_dim x scalar_dim).
    pub post_from_scalar: DMatrix<f64>,
    /// Postprocessing map from stacked face coefficients
    /// (post_dim x 3*face_dim).
    pub post_from_trace: DMatrix<f64>,
    /// Reference-metric stiffness of the modal family (post_dim x post_dim).
    pub stiffness: DMatrix<f64>,
}

impl ElementProjector {
    pub fn new(mesh: &Mesh, element: usize, refs: Arc<ReferenceElements>) -> Result<Self> {
        let geometry = ElementGeometry::new(mesh, element)?;
        let d_post = refs.post_dim();
        let d_scalar = refs.scalar_dim();
        let f_dim = refs.face_dim();

        // Volume integrals with the element metric.
        let mut stiffness = DMatrix::zeros(d_post, d_post);
        let mut laplace_moments = DMatrix::<f64>::zeros(d_post, d_post);
        let g = &geometry.metric;
        for (p, w) in refs.volume_rule.points.iter().zip(&refs.volume_rule.weights) {
            let (gx, gy) = refs.tri.grad_point(p[0], p[1]);
            let vals = refs.tri.eval_point(p[0], p[1]);
            let (hxx, hxy, hyy) = refs.tri.hess_point(p[0], p[1]);
            // Physical gradients contracted through the metric.
            for j in 0..d_post {
                let lap_j = g[0][0] * hxx[j] + 2.0 * g[0][1] * hxy[j] + g[1][1] * hyy[j];
                for m in 0..d_post {
                    stiffness[(j, m)] += w
                        * (gx[m] * (g[0][0] * gx[j] + g[0][1] * gy[j])
                            + gy[m] * (g[1][0] * gx[j] + g[1][1] * gy[j]));
                    laplace_moments[(j, m)] += w * vals[m] * lap_j;
                }
            }
        }

        // Face trace integrals in the global parametrization.
        let mut trace_moments = Vec::with_capacity(3);
        let mut normal_grad_moments = Vec::with_capacity(3);
        for fg in &geometry.faces {
            let mut w_mat = DMatrix::zeros(f_dim, d_post);
            let mut t_mat = DMatrix::zeros(d_post, f_dim);
            let face_scale = (fg.length / geometry.det).sqrt();
            // J^{-1} n maps the outward normal into reference gradient space.
            let jn = [
                geometry.jac_inv[0][0] * fg.normal[0] + geometry.jac_inv[0][1] * fg.normal[1],
                geometry.jac_inv[1][0] * fg.normal[0] + geometry.jac_inv[1][1] * fg.normal[1],
            ];
            for (s, w) in refs.face_rule.points.iter().zip(&refs.face_rule.weights) {
                let xr = fg.ref_start[0] + s * (fg.ref_end[0] - fg.ref_start[0]);
                let yr = fg.ref_start[1] + s * (fg.ref_end[1] - fg.ref_start[1]);
                let edge_vals = refs.edge.eval_point(*s);
                let tri_vals = refs.tri.eval_point(xr, yr);
                let (gx, gy) = refs.tri.grad_point(xr, yr);
                for i in 0..f_dim {
                    for m in 0..d_post {
                        w_mat[(i, m)] += w * edge_vals[i] * tri_vals[m] * face_scale;
                        t_mat[(m, i)] +=
                            w * edge_vals[i] * (jn[0] * gx[m] + jn[1] * gy[m]) * face_scale;
                    }
                }
            }
            trace_moments.push(w_mat);
            normal_grad_moments.push(t_mat);
        }
        let trace_moments: [DMatrix<f64>; 3] = trace_moments.try_into().unwrap();
        let normal_grad_moments: [DMatrix<f64>; 3] = normal_grad_moments.try_into().unwrap();

        // Local postprocessing: stack the scalar-reproduction rows (identity
        // in the orthonormal family) with the gradient-moment rows tested
        // against the trailing modal functions, then solve the square system.
        let (post_from_scalar, post_from_trace) = if d_post == d_scalar {
            (DMatrix::identity(d_post, d_post), DMatrix::zeros(d_post, 3 * f_dim))
        } else {
            let mut system = DMatrix::zeros(d_post, d_post);
            for i in 0..d_scalar {
                system[(i, i)] = 1.0;
            }
            for j in d_scalar..d_post {
                for m in 0..d_post {
                    system[(j, m)] = stiffness[(j, m)];
                }
            }
            let mut rhs = DMatrix::zeros(d_post, d_scalar + 3 * f_dim);
            for i in 0..d_scalar {
                rhs[(i, i)] = 1.0;
            }
            for j in d_scalar..d_post {
                for m in 0..d_scalar {
                    rhs[(j, m)] = -laplace_moments[(j, m)];
                }
                for slot in 0..3 {
                    for i in 0..f_dim {
                        rhs[(j, d_scalar + slot * f_dim + i)] = normal_grad_moments[slot][(j, i)];
                    }
                }
            }
            let lu = system.lu();
            let solved = lu.solve(&rhs).ok_or_else(|| {
                Error::LinearAlgebra("singular local postprocessing system".into())
            })?;
            (
                solved.columns(0, d_scalar).into_owned(),
                solved.columns(d_scalar, 3 * f_dim).into_owned(),
            )
        };

        Ok(Self {
            geometry,
            refs,
            trace_moments,
            normal_grad_moments,
            post_from_scalar,
            post_from_trace,
            stiffness,
        })
    }

    /// Build projectors for every element (parallel, deterministic output).
    pub fn build_all(mesh: &Mesh, refs: &Arc<ReferenceElements>) -> Result<Vec<Self>> {
        (0..mesh.n_elements())
            .into_par_iter()
            .map(|e| Self::new(mesh, e, Arc::clone(refs)))
            .collect()
    }

    pub fn refs(&self) -> &ReferenceElements {
        &self.refs
    }

    /// L2 projection of `f` onto P^degree on this element.
    pub fn project_scalar(&self, f: impl Fn(f64, f64) -> f64, degree: usize) -> DVector<f64> {
        let dim = tri_dim(degree);
        assert!(dim <= self.refs.post_dim(), "projection degree above k+1");
        let sqrt_det = self.geometry.det.sqrt();
        let mut coeffs = DVector::zeros(dim);
        for (p, w) in self
            .refs
            .data_rule
            .points
            .iter()
            .zip(&self.refs.data_rule.weights)
        {
            let xy = self.geometry.to_physical(p[0], p[1]);
            let vals = self.refs.tri.eval_point(p[0], p[1]);
            let fv = f(xy[0], xy[1]);
            for i in 0..dim {
                coeffs[i] += w * fv * vals[i] * sqrt_det;
            }
        }
        coeffs
    }

    /// L2 projection of the trace of `g` onto P^k on face `slot`.
    pub fn project_face(&self, slot: usize, g: impl Fn(f64, f64) -> f64) -> DVector<f64> {
        let f_dim = self.refs.face_dim();
        let fg = &self.geometry.faces[slot];
        let sqrt_len = fg.length.sqrt();
        let mut coeffs = DVector::zeros(f_dim);
        for (s, w) in self
            .refs
            .data_face_rule
            .points
            .iter()
            .zip(&self.refs.data_face_rule.weights)
        {
            let xy = self.geometry.face_point(slot, *s);
            let vals = self.refs.edge.eval_point(*s);
            let gv = g(xy[0], xy[1]);
            for i in 0..f_dim {
                coeffs[i] += w * gv * vals[i] * sqrt_len;
            }
        }
        coeffs
    }

    /// Local postprocessing: scalar coefficients plus per-face trace
    /// coefficients to degree-(k+1) coefficients.
    pub fn postprocess(&self, scalar: &DVector<f64>, traces: &[DVector<f64>; 3]) -> DVector<f64> {
        let f_dim = self.refs.face_dim();
        let mut stacked = DVector::zeros(3 * f_dim);
        for (slot, trace) in traces.iter().enumerate() {
            stacked.rows_mut(slot * f_dim, f_dim).copy_from(trace);
        }
        &self.post_from_scalar * scalar + &self.post_from_trace * stacked
    }

    /// Postprocessing applied to the projections of a function: the auxiliary
    /// degree-(k+1) projection that reproduces P^{k+1} exactly.
    pub fn postprocessed_projection(&self, f: impl Fn(f64, f64) -> f64) -> DVector<f64> {
        let scalar = self.project_scalar(&f, self.refs.config.scalar_degree());
        let traces = [
            self.project_face(0, &f),
            self.project_face(1, &f),
            self.project_face(2, &f),
        ];
        self.postprocess(&scalar, &traces)
    }

    /// Lagrange interpolation of `g` on the degree-(k+1) lattice.
    pub fn interpolate(&self, g: impl Fn(f64, f64) -> f64) -> Result<DVector<f64>> {
        let nodes = &self.refs.nodal.nodes;
        let mut values = DVector::zeros(nodes.len());
        for (n, node) in nodes.iter().enumerate() {
            let xy = self.geometry.to_physical(node[0], node[1]);
            let v = g(xy[0], xy[1]);
            if !v.is_finite() {
                return Err(Error::Evaluation(format!(
                    "non-finite value at interpolation node ({}, {})",
                    xy[0], xy[1]
                )));
            }
            values[n] = v;
        }
        Ok(self.interpolate_values(&values))
    }

    /// Modal coefficients of the Lagrange interpolant with given nodal values.
    pub fn interpolate_values(&self, values: &DVector<f64>) -> DVector<f64> {
        self.geometry.det.sqrt() * (&self.refs.nodal.inverse * values)
    }

    /// Values of a degree-(k+1) coefficient vector at the Lagrange nodes.
    pub fn nodal_values(&self, post: &DVector<f64>) -> DVector<f64> {
        (&self.refs.nodal.vandermonde * post) / self.geometry.det.sqrt()
    }

    /// Evaluate a modal coefficient vector at a physical point.
    pub fn eval_scalar(&self, coeffs: &DVector<f64>, x: f64, y: f64) -> f64 {
        let r = self.geometry.to_reference(x, y);
        let vals = self.refs.tri.eval_point(r[0], r[1]);
        let mut out = 0.0;
        for i in 0..coeffs.len() {
            out += coeffs[i] * vals[i];
        }
        out / self.geometry.det.sqrt()
    }

    /// Trace projection of a degree-(k+1) coefficient vector on face `slot`.
    pub fn trace_projection(&self, slot: usize, post: &DVector<f64>) -> DVector<f64> {
        &self.trace_moments[slot] * post
    }
}
