//! Steady solves: generic diffusion-reaction solve and the elliptic
//! approximation of an exact solution.

use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::operators::ElementOperators;
use crate::state::FieldState;
use crate::system::{flux_continuity_residual, CondensedSystem};
use nalgebra::DVector;
use rayon::prelude::*;

/// Solve the steady problem with scalar source `g` (and the system's sigma
/// mass weight): sigma (u, v) + spatial form = (g, v).
pub fn solve_steady(
    mesh: &Mesh,
    ops: &[ElementOperators],
    system: &CondensedSystem,
    g: impl Fn(f64, f64) -> f64 + Sync,
) -> Result<FieldState> {
    let scalar_rhs: Vec<DVector<f64>> = ops
        .par_iter()
        .map(|op| op.source_moments(&g))
        .collect();
    let face_rhs = vec![0.0; system.n_trace_dofs()];
    let (flux, scalar, trace) = system.solve(mesh, &scalar_rhs, &face_rhs);
    let post: Vec<DVector<f64>> = ops
        .par_iter()
        .enumerate()
        .map(|(e, op)| {
            let lambda = system.dof_map.gather(mesh, e, &trace);
            let traces = split_traces(&lambda, system.dof_map.face_dim());
            op.projector.postprocess(&scalar[e], &traces)
        })
        .collect();
    let state = FieldState {
        time: 0.0,
        flux,
        scalar,
        trace,
        post,
    };
    let (residual, scale) = flux_continuity_residual(
        mesh,
        ops,
        &system.dof_map,
        &state.flux,
        &state.scalar,
        &state.trace,
        &face_rhs,
    );
    if residual > 1e-9 * scale.max(1e-300) && scale > 0.0 {
        return Err(Error::LinearAlgebra(format!(
            "steady solve left flux-continuity residual {residual:.3e} at scale {scale:.3e}"
        )));
    }
    Ok(state)
}

/// Elliptic approximation of the exact solution at time `t`: the steady HDG
/// solve with source -laplace(u)(t). Requires the problem's Laplacian.
pub fn solve_elliptic_projection(
    mesh: &Mesh,
    ops: &[ElementOperators],
    system: &CondensedSystem,
    neg_laplacian: impl Fn(f64, f64) -> f64 + Sync,
    t: f64,
) -> Result<FieldState> {
    let mut state = solve_steady(mesh, ops, system, neg_laplacian)?;
    state.time = t;
    Ok(state)
}

/// Largest face-equation residual of a state, relative to its scale.
pub fn check_flux_continuity(
    mesh: &Mesh,
    ops: &[ElementOperators],
    system: &CondensedSystem,
    state: &FieldState,
    face_rhs: &[f64],
) -> (f64, f64) {
    flux_continuity_residual(
        mesh,
        ops,
        &system.dof_map,
        &state.flux,
        &state.scalar,
        &state.trace,
        face_rhs,
    )
}

/// Split a stacked 3-face coefficient vector into per-slot vectors.
pub fn split_traces(stacked: &DVector<f64>, face_dim: usize) -> [DVector<f64>; 3] {
    [
        stacked.rows(0, face_dim).into_owned(),
        stacked.rows(face_dim, face_dim).into_owned(),
        stacked.rows(2 * face_dim, face_dim).into_owned(),
    ]
}
