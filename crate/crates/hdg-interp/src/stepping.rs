//! Crank-Nicolson time integration with the interpolatory nonlinear term.
//!
//! The step solves, for all scalar and face test functions,
//!
//!   (u1 - u0, v)/dt + [a(state1) + a(state0)]/2 = (f(t1) + f(t0), v)/2,
//!
//! where a(.) is the full spatial form including the interpolated reaction
//! term. The condensed matrix depends only on sigma = 2/dt, so it is
//! assembled and factorized once per run; the default inner iteration keeps
//! that matrix frozen and re-evaluates the reaction at the Lagrange nodes of
//! the current reconstruction, moving it to the right-hand side through the
//! fixed coupling matrices. A Newton path (per-iteration refactorization) is
//! available for stiff reactions.

use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::operators::ElementOperators;
use crate::problem::ManufacturedProblem;
use crate::solve::{solve_elliptic_projection, split_traces};
use crate::state::FieldState;
use crate::system::{flux_continuity_residual, CondensedSystem};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

/// Time-step selection: tied to the tabulated mesh parameter 1/n of the
/// uniform family, its square, or a fixed value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DtPolicy {
    MeshParam,
    MeshParamSquared,
    Fixed(f64),
}

impl DtPolicy {
    /// Resolve the step size; `n` is the uniform-family subdivision count.
    pub fn dt(&self, n: Option<usize>) -> Result<f64> {
        match self {
            DtPolicy::Fixed(dt) if *dt > 0.0 => Ok(*dt),
            DtPolicy::Fixed(dt) => Err(Error::Config(format!("dt must be positive, got {dt}"))),
            DtPolicy::MeshParam | DtPolicy::MeshParamSquared => {
                let n = n.ok_or_else(|| {
                    Error::Config("mesh-tied dt policy requires a uniform-family level".into())
                })? as f64;
                Ok(match self {
                    DtPolicy::MeshParam => 1.0 / n,
                    _ => 1.0 / (n * n),
                })
            }
        }
    }
}

impl std::str::FromStr for DtPolicy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "h" => Ok(DtPolicy::MeshParam),
            "h2" => Ok(DtPolicy::MeshParamSquared),
            other => {
                if let Some(v) = other.strip_prefix("fixed:") {
                    let dt: f64 = v
                        .parse()
                        .map_err(|e| Error::InvalidArgument(format!("bad dt value: {e}")))?;
                    Ok(DtPolicy::Fixed(dt))
                } else {
                    Err(Error::InvalidArgument(format!(
                        "unknown dt policy {other:?} (expected h, h2, or fixed:VAL)"
                    )))
                }
            }
        }
    }
}

/// How the discrete initial state is produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitialCondition {
    /// Elementwise L2 projection of u0 (plus local flux recovery).
    L2Projection,
    /// Steady HDG solve with source -laplace(u)(0).
    EllipticProjection,
}

/// Run parameters for one integration.
#[derive(Debug, Clone)]
pub struct TimeConfig {
    pub t_final: f64,
    pub dt: f64,
    /// Inner-iteration stop: sup-norm of the last increment.
    pub tolerance: f64,
    pub max_iterations: usize,
    pub initial_condition: InitialCondition,
    /// Replace the frozen-matrix iteration by Newton (refactorizes each
    /// iteration; trades the assemble-once property for robustness).
    pub newton: bool,
}

impl TimeConfig {
    pub fn new(t_final: f64, dt: f64) -> Result<Self> {
        if dt <= 0.0 {
            return Err(Error::Config(format!("dt must be positive, got {dt}")));
        }
        if t_final < 0.0 {
            return Err(Error::Config(format!("final time must be >= 0, got {t_final}")));
        }
        Ok(Self {
            t_final,
            dt,
            tolerance: 1e-10,
            max_iterations: 50,
            initial_condition: InitialCondition::L2Projection,
            newton: false,
        })
    }
}

/// Bookkeeping of one integrate call.
#[derive(Debug, Clone, Default)]
pub struct IntegrateStats {
    pub steps: usize,
    /// Factorizations of the stepping matrix (1 under the frozen-matrix
    /// contract with a uniform grid).
    pub factorizations: usize,
    /// Extra factorization spent on an elliptic-projection initial state.
    pub ic_factorizations: usize,
    pub iterations_per_step: Vec<usize>,
    /// Largest relative flux-continuity residual seen after any step.
    pub max_flux_residual: f64,
}

impl IntegrateStats {
    pub fn total_inner_iterations(&self) -> usize {
        self.iterations_per_step.iter().sum()
    }
}

/// Discrete initial state.
pub fn initial_state(
    mesh: &Mesh,
    ops: &[ElementOperators],
    problem: &ManufacturedProblem,
    mode: InitialCondition,
) -> Result<(FieldState, usize)> {
    match mode {
        InitialCondition::L2Projection => {
            let refs = ops[0].refs();
            let f_dim = refs.face_dim();
            let u0 = |x: f64, y: f64| problem.exact(x, y, 0.0);
            let scalar: Vec<DVector<f64>> = ops
                .par_iter()
                .map(|op| op.projector.project_scalar(u0, refs.config.scalar_degree()))
                .collect();
            // Interior traces from the left element's face projection.
            let dof_map = crate::system::TraceDofMap::new(mesh, f_dim);
            let mut trace = vec![0.0; dof_map.n_dofs()];
            for f in mesh.interior_faces() {
                let start = dof_map.offset(f).unwrap();
                let left = mesh.faces()[f].left;
                let slot = mesh
                    .element_faces(left)
                    .iter()
                    .position(|ef| ef.face == f)
                    .expect("left element contains its face");
                let coeffs = ops[left].projector.project_face(slot, u0);
                for i in 0..f_dim {
                    trace[start + i] = coeffs[i];
                }
            }
            let parts: Vec<(DVector<f64>, DVector<f64>)> = ops
                .par_iter()
                .enumerate()
                .map(|(e, op)| {
                    let lambda = dof_map.gather(mesh, e, &trace);
                    let flux = op.recover_flux(&scalar[e], &lambda);
                    let post = op
                        .projector
                        .postprocess(&scalar[e], &split_traces(&lambda, f_dim));
                    (flux, post)
                })
                .collect();
            let mut flux = Vec::with_capacity(parts.len());
            let mut post = Vec::with_capacity(parts.len());
            for (f, p) in parts {
                flux.push(f);
                post.push(p);
            }
            Ok((
                FieldState {
                    time: 0.0,
                    flux,
                    scalar,
                    trace,
                    post,
                },
                0,
            ))
        }
        InitialCondition::EllipticProjection => {
            if !problem.has_laplacian() {
                return Err(Error::Config(
                    "elliptic initial condition requires the problem's Laplacian".into(),
                ));
            }
            let system = CondensedSystem::build(mesh, ops, 0.0)?;
            let state = solve_elliptic_projection(
                mesh,
                ops,
                &system,
                |x, y| problem.neg_laplacian(x, y, 0.0).expect("laplacian checked"),
                0.0,
            )?;
            Ok((state, 1))
        }
    }
}

/// Integrate the semilinear problem from 0 to the configured final time.
pub fn integrate(
    mesh: &Mesh,
    ops: &[ElementOperators],
    time: &TimeConfig,
    problem: &ManufacturedProblem,
) -> Result<(FieldState, IntegrateStats)> {
    let (state, _snaps, stats) = integrate_with_snapshots(mesh, ops, time, problem, &[])?;
    Ok((state, stats))
}

/// Integrate and additionally capture states at the step ends nearest to the
/// requested times.
pub fn integrate_with_snapshots(
    mesh: &Mesh,
    ops: &[ElementOperators],
    time: &TimeConfig,
    problem: &ManufacturedProblem,
    snapshot_times: &[f64],
) -> Result<(FieldState, Vec<FieldState>, IntegrateStats)> {
    if !problem.has_laplacian() {
        return Err(Error::Config(
            "time integration needs the problem's Laplacian to form the source term".into(),
        ));
    }
    let mut stats = IntegrateStats::default();
    let (mut state, ic_facts) = initial_state(mesh, ops, problem, time.initial_condition)?;
    stats.ic_factorizations = ic_facts;

    let mut snapshots: Vec<FieldState> = Vec::new();
    let mut pending: Vec<f64> = snapshot_times.to_vec();
    pending.sort_by(f64::total_cmp);

    if time.t_final <= 0.0 {
        for _ in &pending {
            snapshots.push(state.clone());
        }
        return Ok((state, snapshots, stats));
    }

    let ratio = time.t_final / time.dt;
    let n_steps = if (ratio - ratio.round()).abs() < 1e-9 {
        ratio.round() as usize
    } else {
        ratio.ceil() as usize
    }
    .max(1);

    // A run shorter than one nominal step integrates with a single step of
    // the full remaining interval.
    let dt_main = if n_steps == 1 { time.t_final } else { time.dt };
    let mut stepper = Stepper::new(mesh, ops, time, problem, dt_main)?;
    stats.factorizations += 1;

    let mut previous_post: Option<Vec<DVector<f64>>> = None;
    for step_index in 0..n_steps {
        let t_target = if step_index + 1 == n_steps {
            time.t_final
        } else {
            (step_index as f64 + 1.0) * dt_main
        };
        let dt_step = t_target - state.time;
        if dt_step <= 0.0 {
            continue;
        }
        let mut uniform_step = true;
        if (dt_step - stepper.dt).abs() > 1e-12 * stepper.dt {
            // Shortened final step: the sigma weight changes, so the stepping
            // matrix must be refactorized once.
            stepper = Stepper::new(mesh, ops, time, problem, dt_step)?;
            stats.factorizations += 1;
            uniform_step = false;
        }
        // Linear extrapolation of the reconstruction as the inner-iteration
        // start; valid when the previous step used the same dt.
        let predictor = match (&previous_post, uniform_step) {
            (Some(prev), true) => Some(
                state
                    .post
                    .iter()
                    .zip(prev)
                    .map(|(cur, old)| 2.0 * cur - old)
                    .collect::<Vec<_>>(),
            ),
            _ => None,
        };
        previous_post = Some(state.post.clone());
        let iterations = stepper.advance(&mut state, t_target, predictor, &mut stats)?;
        stats.iterations_per_step.push(iterations);
        stats.steps += 1;
        while let Some(&next_snap) = pending.first() {
            if state.time + 1e-12 >= next_snap {
                snapshots.push(state.clone());
                pending.remove(0);
            } else {
                break;
            }
        }
    }
    for _ in &pending {
        snapshots.push(state.clone());
    }
    Ok((state, snapshots, stats))
}

/// Stacked elementwise difference a - b as one vector.
fn stack_difference(a: &[DVector<f64>], b: &[DVector<f64>]) -> DVector<f64> {
    let total: usize = a.iter().map(|v| v.len()).sum();
    let mut out = DVector::zeros(total);
    let mut offset = 0;
    for (va, vb) in a.iter().zip(b) {
        for i in 0..va.len() {
            out[offset + i] = va[i] - vb[i];
        }
        offset += va.len();
    }
    out
}

/// One-dt stepping context holding the factorized condensed matrix.
struct Stepper<'a> {
    mesh: &'a Mesh,
    ops: &'a [ElementOperators],
    time: &'a TimeConfig,
    problem: &'a ManufacturedProblem,
    dt: f64,
    system: CondensedSystem,
}

impl<'a> Stepper<'a> {
    fn new(
        mesh: &'a Mesh,
        ops: &'a [ElementOperators],
        time: &'a TimeConfig,
        problem: &'a ManufacturedProblem,
        dt: f64,
    ) -> Result<Self> {
        let system = CondensedSystem::build(mesh, ops, 2.0 / dt)?;
        Ok(Self {
            mesh,
            ops,
            time,
            problem,
            dt,
            system,
        })
    }

    /// Advance `state` to `t_target`, returning the inner-iteration count.
    fn advance(
        &mut self,
        state: &mut FieldState,
        t_target: f64,
        predictor: Option<Vec<DVector<f64>>>,
        stats: &mut IntegrateStats,
    ) -> Result<usize> {
        let dt = t_target - state.time;
        let sigma = 2.0 / dt;
        let t0 = state.time;
        let t1 = t_target;
        let f_dim = self.system.dof_map.face_dim();
        let nl = &self.problem.nonlinearity;

        // Step-constant right-hand side: source average, old mass, and the
        // old state's full spatial form (scalar- and face-tested).
        let const_parts: Vec<(DVector<f64>, DVector<f64>)> = self
            .ops
            .par_iter()
            .enumerate()
            .map(|(e, op)| {
                let f_mom = op.source_moments(|x, y| {
                    self.problem.source(x, y, t0).expect("laplacian checked")
                        + self.problem.source(x, y, t1).expect("laplacian checked")
                });
                let lambda = self.system.dof_map.gather(self.mesh, e, &state.trace);
                let b_old = op.apply_scalar_form(&state.flux[e], &state.scalar[e], &lambda);
                let f_old = op.nonlinear_term(&state.post[e], |u| nl.eval(u));
                let rhs_v = f_mom + sigma * &state.scalar[e] - b_old - f_old;
                let face_old = op.apply_face_form(&state.flux[e], &state.scalar[e], &lambda);
                (rhs_v, face_old)
            })
            .collect();
        let mut face_rhs = vec![0.0; self.system.n_trace_dofs()];
        for (e, (_, face_old)) in const_parts.iter().enumerate() {
            self.system
                .dof_map
                .scatter_add(self.mesh, e, &(-face_old), &mut face_rhs);
        }

        let mut current = state.clone();
        current.time = t1;
        if let Some(post) = predictor {
            current.post = post;
        }
        let _ = f_dim;
        let iterations = if nl.is_zero() {
            // Linear problem: the step is a single solve.
            current = self.picard_iterate(&const_parts, &face_rhs, &current)?;
            1
        } else if self.time.newton {
            let mut iterations = 0;
            loop {
                if iterations >= self.time.max_iterations {
                    return Err(Error::StepFailed(format!(
                        "Newton iteration did not reach {} in {} iterations at t = {}",
                        self.time.tolerance, self.time.max_iterations, t1
                    )));
                }
                iterations += 1;
                let next = self.newton_iterate(&const_parts, &face_rhs, &current, sigma, stats)?;
                let increment = next.max_difference(&current);
                current = next;
                if !increment.is_finite() {
                    return Err(Error::Evaluation(format!(
                        "non-finite iterate at t = {t1} (reaction blow-up?)"
                    )));
                }
                if increment <= self.time.tolerance {
                    break iterations;
                }
            }
        } else {
            // Frozen-matrix fixed point on the reconstruction, with Aitken
            // relaxation of the next reaction argument.
            let mut z = current.post.clone();
            let mut omega = 1.0f64;
            let mut residual_prev: Option<DVector<f64>> = None;
            let mut iterations = 0;
            loop {
                if iterations >= self.time.max_iterations {
                    return Err(Error::StepFailed(format!(
                        "inner iteration did not reach {} in {} iterations at t = {}",
                        self.time.tolerance, self.time.max_iterations, t1
                    )));
                }
                iterations += 1;
                current.post = z.clone();
                let next = self.picard_iterate(&const_parts, &face_rhs, &current)?;
                let residual = stack_difference(&next.post, &z);
                let increment = residual.amax();
                if !increment.is_finite() {
                    return Err(Error::Evaluation(format!(
                        "non-finite iterate at t = {t1} (reaction blow-up?)"
                    )));
                }
                if increment <= self.time.tolerance {
                    current = next;
                    break iterations;
                }
                if let Some(prev) = &residual_prev {
                    let delta = &residual - prev;
                    let denom = delta.norm_squared();
                    if denom > 0.0 {
                        omega = (-omega * prev.dot(&delta) / denom).clamp(0.05, 2.0);
                    }
                } else {
                    omega = 1.0;
                }
                let mut offset = 0;
                for zi in &mut z {
                    for r in 0..zi.len() {
                        zi[r] += omega * residual[offset + r];
                    }
                    offset += zi.len();
                }
                residual_prev = Some(residual);
            }
        };

        // Flux-continuity bookkeeping at the accepted state.
        let (residual, scale) = flux_continuity_residual(
            self.mesh,
            self.ops,
            &self.system.dof_map,
            &current.flux,
            &current.scalar,
            &current.trace,
            &face_rhs,
        );
        if scale > 0.0 {
            stats.max_flux_residual = stats.max_flux_residual.max(residual / scale);
        }

        *state = current;
        Ok(iterations)
    }

    /// Frozen-matrix iteration: reaction of the current reconstruction moves
    /// to the right-hand side; one triangular solve with the stored
    /// factorization.
    fn picard_iterate(
        &self,
        const_parts: &[(DVector<f64>, DVector<f64>)],
        face_rhs: &[f64],
        current: &FieldState,
    ) -> Result<FieldState> {
        let nl = &self.problem.nonlinearity;
        let scalar_rhs: Vec<DVector<f64>> = self
            .ops
            .par_iter()
            .enumerate()
            .map(|(e, op)| {
                &const_parts[e].0 - op.nonlinear_term(&current.post[e], |u| nl.eval(u))
            })
            .collect();
        let (flux, scalar, trace) = self.system.solve(self.mesh, &scalar_rhs, face_rhs);
        self.finish_state(flux, scalar, trace, current.time)
    }

    /// Newton iteration: linearize the interpolated reaction around the
    /// current nodal values and refactorize the condensed matrix.
    fn newton_iterate(
        &self,
        const_parts: &[(DVector<f64>, DVector<f64>)],
        face_rhs: &[f64],
        current: &FieldState,
        sigma: f64,
        stats: &mut IntegrateStats,
    ) -> Result<FieldState> {
        let nl = &self.problem.nonlinearity;
        let pieces: Vec<(DMatrix<f64>, DMatrix<f64>, DVector<f64>)> = self
            .ops
            .par_iter()
            .enumerate()
            .map(|(e, op)| {
                let z = op.nodal_values(&current.post[e]);
                let fz = DVector::from_iterator(z.len(), z.iter().map(|u| nl.eval(*u)));
                let dfz = DVector::from_iterator(z.len(), z.iter().map(|u| nl.derivative(*u)));
                // d(v,u) and d(v,trace) blocks of the linearized reaction.
                let mut weighted = op.nodal_map.clone();
                for (r, w) in dfz.iter().enumerate() {
                    for c in 0..weighted.ncols() {
                        weighted[(r, c)] *= *w;
                    }
                }
                let chain = &op.nonlin_coupling * weighted;
                let jac_scalar = &chain * &op.projector.post_from_scalar;
                let jac_trace = &chain * &op.projector.post_from_trace;
                let constant = &fz - dfz.component_mul(&z);
                let rhs = &const_parts[e].0 - &op.nonlin_coupling * constant;
                (jac_scalar, jac_trace, rhs)
            })
            .collect();
        let jacobians: Vec<(DMatrix<f64>, DMatrix<f64>)> = pieces
            .iter()
            .map(|(a, b, _)| (a.clone(), b.clone()))
            .collect();
        let scalar_rhs: Vec<DVector<f64>> = pieces.into_iter().map(|(_, _, r)| r).collect();
        let system =
            CondensedSystem::build_with_reaction_jacobian(self.mesh, self.ops, sigma, &jacobians)?;
        stats.factorizations += 1;
        let (flux, scalar, trace) = system.solve(self.mesh, &scalar_rhs, face_rhs);
        self.finish_state(flux, scalar, trace, current.time)
    }

    fn finish_state(
        &self,
        flux: Vec<DVector<f64>>,
        scalar: Vec<DVector<f64>>,
        trace: Vec<f64>,
        time: f64,
    ) -> Result<FieldState> {
        let f_dim = self.system.dof_map.face_dim();
        let post: Vec<DVector<f64>> = self
            .ops
            .par_iter()
            .enumerate()
            .map(|(e, op)| {
                let lambda = self.system.dof_map.gather(self.mesh, e, &trace);
                op.projector
                    .postprocess(&scalar[e], &split_traces(&lambda, f_dim))
            })
            .collect();
        Ok(FieldState {
            time,
            flux,
            scalar,
            trace,
            post,
        })
    }
}
