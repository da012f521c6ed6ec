//! Shared oracles for the integration suites: a dense monolithic solver that
//! bypasses static condensation, and a monomial-basis reconstruction solver
//! that bypasses the orthonormal-modal postprocessing path.

use hdg_interp::mesh::Mesh;
use hdg_interp::operators::ElementOperators;
use hdg_interp::projector::ElementProjector;
use hdg_interp::quadrature::{edge_rule, triangle_rule};
use hdg_interp::system::TraceDofMap;
use nalgebra::{DMatrix, DVector};

/// Assemble and solve the full saddle system over (flux, scalar, trace)
/// without condensation. Returns per-element flux and scalar coefficients
/// plus the global trace vector, in the same layout as the condensed solver.
#[allow(dead_code)]
pub fn monolithic_solve(
    mesh: &Mesh,
    ops: &[ElementOperators],
    sigma: f64,
    scalar_rhs: &[DVector<f64>],
    face_rhs: &[f64],
) -> (Vec<DVector<f64>>, Vec<DVector<f64>>, Vec<f64>) {
    let refs = ops[0].refs();
    let d_flux = 2 * refs.flux_dim();
    let d_scalar = refs.scalar_dim();
    let f_dim = refs.face_dim();
    let dof_map = TraceDofMap::new(mesh, f_dim);
    let n_elem = mesh.n_elements();
    let local = d_flux + d_scalar;
    let n_total = n_elem * local + dof_map.n_dofs();
    let trace_base = n_elem * local;

    let mut a = DMatrix::<f64>::zeros(n_total, n_total);
    let mut rhs = DVector::<f64>::zeros(n_total);

    for (e, op) in ops.iter().enumerate() {
        let base = e * local;
        let block = op.local_matrix(sigma);
        for i in 0..local {
            for j in 0..local {
                a[(base + i, base + j)] = block[(i, j)];
            }
        }
        for i in 0..d_scalar {
            rhs[base + d_flux + i] = scalar_rhs[e][i];
        }
        let coupling = op.local_face_coupling();
        let efs = mesh.element_faces(e);
        for (slot, ef) in efs.iter().enumerate() {
            let Some(start) = dof_map.offset(ef.face) else { continue };
            for i in 0..local {
                for j in 0..f_dim {
                    let c = coupling[(i, slot * f_dim + j)];
                    a[(base + i, trace_base + start + j)] += c;
                    // Face equations: transpose coupling rows.
                    a[(trace_base + start + j, base + i)] += c;
                }
            }
        }
        // Face-face stabilization block.
        for (sa, efa) in efs.iter().enumerate() {
            let Some(fa) = dof_map.offset(efa.face) else { continue };
            for (sb, efb) in efs.iter().enumerate() {
                let Some(fb) = dof_map.offset(efb.face) else { continue };
                for i in 0..f_dim {
                    for j in 0..f_dim {
                        a[(trace_base + fa + i, trace_base + fb + j)] +=
                            op.stab_trace_trace[(sa * f_dim + i, sb * f_dim + j)];
                    }
                }
            }
        }
    }
    for (i, v) in face_rhs.iter().enumerate() {
        rhs[trace_base + i] = *v;
    }

    let solution = a.lu().solve(&rhs).expect("monolithic system solvable");
    let mut flux = Vec::with_capacity(n_elem);
    let mut scalar = Vec::with_capacity(n_elem);
    for e in 0..n_elem {
        let base = e * local;
        flux.push(solution.rows(base, d_flux).into_owned());
        scalar.push(solution.rows(base + d_flux, d_scalar).into_owned());
    }
    let trace = solution.rows(trace_base, dof_map.n_dofs()).iter().copied().collect();
    (flux, scalar, trace)
}

/// Independent local reconstruction in the physical monomial basis: solves
/// the gradient-moment and scalar-reproduction conditions as one saddle
/// system with a Lagrange multiplier enforcing the scalar constraint, and
/// returns a pointwise evaluator of the reconstructed polynomial.
#[allow(dead_code)]
pub fn reconstruction_oracle(
    projector: &ElementProjector,
    scalar: &DVector<f64>,
    traces: &[DVector<f64>; 3],
) -> impl Fn(f64, f64) -> f64 {
    let refs = projector.refs();
    let k = refs.config.k;
    let ell = refs.config.scalar_degree();
    let geom = &projector.geometry;

    // Physical monomial exponents.
    let exps: Vec<(i32, i32)> = (0..=(k + 1))
        .flat_map(|d| (0..=d).map(move |b| ((d - b) as i32, b as i32)))
        .collect();
    let dim = exps.len();
    let dim_l = (ell + 1) * (ell + 2) / 2;

    let rule = triangle_rule(2 * (k + 1) + 4).unwrap();
    let frule = edge_rule(2 * (k + 1) + 4);

    // Monomials centered at the element centroid and scaled by its diameter,
    // to keep the oracle's own conditioning harmless.
    let centroid = geom.to_physical(1.0 / 3.0, 1.0 / 3.0);
    let scale = geom.diameter;
    let mono = move |x: f64, y: f64, (a, b): (i32, i32)| {
        ((x - centroid[0]) / scale).powi(a) * ((y - centroid[1]) / scale).powi(b)
    };
    let mono_grad = move |x: f64, y: f64, (a, b): (i32, i32)| {
        let xs = (x - centroid[0]) / scale;
        let ys = (y - centroid[1]) / scale;
        [
            if a == 0 { 0.0 } else { a as f64 * xs.powi(a - 1) * ys.powi(b) / scale },
            if b == 0 { 0.0 } else { b as f64 * xs.powi(a) * ys.powi(b - 1) / scale },
        ]
    };
    let mono_lap = move |x: f64, y: f64, (a, b): (i32, i32)| {
        let xs = (x - centroid[0]) / scale;
        let ys = (y - centroid[1]) / scale;
        let xx = if a < 2 {
            0.0
        } else {
            (a * (a - 1)) as f64 * xs.powi(a - 2) * ys.powi(b) / (scale * scale)
        };
        let yy = if b < 2 {
            0.0
        } else {
            (b * (b - 1)) as f64 * xs.powi(a) * ys.powi(b - 2) / (scale * scale)
        };
        xx + yy
    };

    let n = dim + dim_l;
    let mut a_mat = DMatrix::<f64>::zeros(n, n);
    let mut rhs = DVector::<f64>::zeros(n);
    for (p, w) in rule.points.iter().zip(&rule.weights) {
        let xy = geom.to_physical(p[0], p[1]);
        let w_phys = w * geom.det;
        let u_val = projector.eval_scalar(scalar, xy[0], xy[1]);
        for zi in 0..dim {
            let gz = mono_grad(xy[0], xy[1], exps[zi]);
            for pj in 0..dim {
                let gp = mono_grad(xy[0], xy[1], exps[pj]);
                a_mat[(zi, pj)] += w_phys * (gz[0] * gp[0] + gz[1] * gp[1]);
            }
            rhs[zi] -= w_phys * u_val * mono_lap(xy[0], xy[1], exps[zi]);
            // Multiplier columns: (mu, z) for mu in the scalar space.
            for mj in 0..dim_l {
                let m = mono(xy[0], xy[1], exps[mj]);
                a_mat[(zi, dim + mj)] += w_phys * m * mono(xy[0], xy[1], exps[zi]);
            }
        }
        for wi in 0..dim_l {
            let m = mono(xy[0], xy[1], exps[wi]);
            for pj in 0..dim {
                a_mat[(dim + wi, pj)] += w_phys * m * mono(xy[0], xy[1], exps[pj]);
            }
            rhs[dim + wi] += w_phys * u_val * m;
        }
    }
    // Boundary term of the gradient-moment rows.
    let f_dim = refs.face_dim();
    for (slot, fg) in geom.faces.iter().enumerate() {
        for (s, w) in frule.points.iter().zip(&frule.weights) {
            let xy = geom.face_point(slot, *s);
            let w_phys = w * fg.length;
            // Face trace value from the orthonormal edge coefficients.
            let edge = hdg_interp::basis::EdgeBasis::new(k);
            let vals = edge.eval_point(*s);
            let mut trace_val = 0.0;
            for i in 0..f_dim {
                trace_val += traces[slot][i] * vals[i];
            }
            trace_val /= fg.length.sqrt();
            for zi in 0..dim {
                let gz = mono_grad(xy[0], xy[1], exps[zi]);
                rhs[zi] += w_phys * trace_val * (gz[0] * fg.normal[0] + gz[1] * fg.normal[1]);
            }
        }
    }

    let solution = a_mat.lu().solve(&rhs).expect("oracle saddle system solvable");
    let coeffs: Vec<f64> = solution.rows(0, dim).iter().copied().collect();
    let exps_owned = exps;
    move |x: f64, y: f64| {
        exps_owned
            .iter()
            .zip(&coeffs)
            .map(|(e, c)| c * mono(x, y, *e))
            .sum()
    }
}

/// Random coefficient vector helper.
#[allow(dead_code)]
pub fn random_vector(rng: &mut impl rand::Rng, len: usize) -> DVector<f64> {
    DVector::from_iterator(len, (0..len).map(|_| rng.random_range(-1.0..1.0)))
}
