//! Static condensation onto interior-face unknowns and the global solve.
//!
//! Each element's (flux, scalar) block is eliminated through a dense local
//! factorization; what remains is a sparse symmetric-profile system on the
//! face unknowns, factored once and reused for every right-hand side. Faces
//! on the domain boundary carry no unknowns (the trace space vanishes
//! there), which realizes the homogeneous Dirichlet condition.

use crate::error::Result;
use crate::mesh::Mesh;
use crate::operators::ElementOperators;
use crate::skyline::{reverse_cuthill_mckee, SkylineMatrix};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

/// Mapping from interior faces to global trace degrees of freedom.
#[derive(Debug, Clone)]
pub struct TraceDofMap {
    /// Per face: starting dof, or None for boundary faces.
    offsets: Vec<Option<usize>>,
    face_dim: usize,
    n_dofs: usize,
}

impl TraceDofMap {
    pub fn new(mesh: &Mesh, face_dim: usize) -> Self {
        let mut offsets = vec![None; mesh.faces().len()];
        let mut next = 0;
        for f in mesh.interior_faces() {
            offsets[f] = Some(next);
            next += face_dim;
        }
        Self {
            offsets,
            face_dim,
            n_dofs: next,
        }
    }

    pub fn n_dofs(&self) -> usize {
        self.n_dofs
    }

    pub fn face_dim(&self) -> usize {
        self.face_dim
    }

    pub fn offset(&self, face: usize) -> Option<usize> {
        self.offsets[face]
    }

    /// Stacked per-slot trace coefficients of one element; boundary slots
    /// read as zero.
    pub fn gather(&self, mesh: &Mesh, element: usize, global: &[f64]) -> DVector<f64> {
        let mut local = DVector::zeros(3 * self.face_dim);
        for (slot, ef) in mesh.element_faces(element).iter().enumerate() {
            if let Some(start) = self.offsets[ef.face] {
                for i in 0..self.face_dim {
                    local[slot * self.face_dim + i] = global[start + i];
                }
            }
        }
        local
    }

    /// Accumulate per-slot contributions of one element into a global vector.
    pub fn scatter_add(
        &self,
        mesh: &Mesh,
        element: usize,
        local: &DVector<f64>,
        global: &mut [f64],
    ) {
        for (slot, ef) in mesh.element_faces(element).iter().enumerate() {
            if let Some(start) = self.offsets[ef.face] {
                for i in 0..self.face_dim {
                    global[start + i] += local[slot * self.face_dim + i];
                }
            }
        }
    }
}

type LocalLu = nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>;

/// Condensed global operator: per-element recovery data plus the factored
/// profile matrix over interior-face unknowns.
pub struct CondensedSystem {
    pub sigma: f64,
    pub dof_map: TraceDofMap,
    d_flux: usize,
    d_scalar: usize,
    /// dof_perm[new] = old, induced by reverse Cuthill-McKee on faces.
    dof_perm: Vec<usize>,
    local_lu: Vec<LocalLu>,
    /// Local-to-face coupling (columns of the saddle system).
    local_coupling: Vec<DMatrix<f64>>,
    /// Face-to-local coupling (rows of the face equations); equals the
    /// transpose of `local_coupling` except on the Newton path.
    row_coupling: Vec<DMatrix<f64>>,
    skyline: SkylineMatrix,
}

impl CondensedSystem {
    /// Assemble and factorize. Exactly one profile factorization happens per
    /// call; callers tracking the assemble-once property count invocations.
    pub fn build(mesh: &Mesh, ops: &[ElementOperators], sigma: f64) -> Result<Self> {
        Self::build_inner(mesh, ops, sigma, None)
    }

    /// Assemble with per-element reaction-jacobian blocks added to the
    /// scalar rows: `jacobians[e] = (d(v,u), d(v,trace))`. Used by the
    /// Newton path; the face equations are unaffected by the reaction term,
    /// so the condensation becomes unsymmetric.
    pub fn build_with_reaction_jacobian(
        mesh: &Mesh,
        ops: &[ElementOperators],
        sigma: f64,
        jacobians: &[(DMatrix<f64>, DMatrix<f64>)],
    ) -> Result<Self> {
        Self::build_inner(mesh, ops, sigma, Some(jacobians))
    }

    fn build_inner(
        mesh: &Mesh,
        ops: &[ElementOperators],
        sigma: f64,
        jacobians: Option<&[(DMatrix<f64>, DMatrix<f64>)]>,
    ) -> Result<Self> {
        let refs = ops[0].refs();
        let f_dim = refs.face_dim();
        let d_flux = 2 * refs.flux_dim();
        let d_scalar = refs.scalar_dim();
        let dof_map = TraceDofMap::new(mesh, f_dim);

        // Face adjacency graph: interior faces couple when they share an
        // element.
        let mut face_index = vec![None; mesh.faces().len()];
        let mut interior: Vec<usize> = Vec::new();
        for f in mesh.interior_faces() {
            face_index[f] = Some(interior.len());
            interior.push(f);
        }
        let mut adjacency = vec![Vec::new(); interior.len()];
        for e in 0..mesh.n_elements() {
            let efs = mesh.element_faces(e);
            for a in 0..3 {
                for b in 0..3 {
                    if a == b {
                        continue;
                    }
                    if let (Some(ia), Some(ib)) =
                        (face_index[efs[a].face], face_index[efs[b].face])
                    {
                        adjacency[ia].push(ib);
                    }
                }
            }
        }
        for list in &mut adjacency {
            list.sort_unstable();
            list.dedup();
        }
        let face_perm = reverse_cuthill_mckee(&adjacency);

        let mut dof_perm = vec![0usize; dof_map.n_dofs()];
        let mut dof_perm_inv = vec![0usize; dof_map.n_dofs()];
        let mut next = 0;
        for &fi in &face_perm {
            let start = dof_map.offset(interior[fi]).unwrap();
            for i in 0..f_dim {
                dof_perm[next] = start + i;
                dof_perm_inv[start + i] = next;
                next += 1;
            }
        }

        // Local elimination per element (parallel), then a deterministic
        // element-ordered scatter into the profile matrix.
        type Block = (LocalLu, DMatrix<f64>, DMatrix<f64>, DMatrix<f64>);
        let blocks: Vec<Block> = ops
            .par_iter()
            .enumerate()
            .map(|(e, op)| {
                let mut a = op.local_matrix(sigma);
                let mut coupling = op.local_face_coupling();
                let row_coupling = coupling.transpose();
                if let Some(jac) = jacobians {
                    let (jac_scalar, jac_trace) = &jac[e];
                    let mut block = a.view_mut((d_flux, d_flux), (d_scalar, d_scalar));
                    block += jac_scalar;
                    let mut cols = coupling.view_mut((d_flux, 0), (d_scalar, 3 * f_dim));
                    cols += jac_trace;
                }
                let lu = a.lu();
                let solve_coupling = lu
                    .solve(&coupling)
                    .expect("local HDG block is invertible for nondegenerate elements");
                let schur = &op.stab_trace_trace - &row_coupling * &solve_coupling;
                (lu, coupling, row_coupling, schur)
            })
            .collect();

        let mut pairs = Vec::new();
        for e in 0..mesh.n_elements() {
            let efs = mesh.element_faces(e);
            for efa in efs {
                let Some(sa) = dof_map.offset(efa.face) else { continue };
                for efb in efs {
                    let Some(sb) = dof_map.offset(efb.face) else { continue };
                    for i in 0..f_dim {
                        for j in 0..f_dim {
                            pairs.push((dof_perm_inv[sa + i], dof_perm_inv[sb + j]));
                        }
                    }
                }
            }
        }
        let mut skyline = SkylineMatrix::new(dof_map.n_dofs(), pairs.into_iter());

        let mut local_lu = Vec::with_capacity(blocks.len());
        let mut local_coupling = Vec::with_capacity(blocks.len());
        let mut row_coupling = Vec::with_capacity(blocks.len());
        for (e, (lu, coupling, row, schur)) in blocks.into_iter().enumerate() {
            let efs = mesh.element_faces(e);
            for a in 0..3 {
                let Some(sa) = dof_map.offset(efs[a].face) else { continue };
                for b in 0..3 {
                    let Some(sb) = dof_map.offset(efs[b].face) else { continue };
                    for i in 0..f_dim {
                        for j in 0..f_dim {
                            skyline.add(
                                dof_perm_inv[sa + i],
                                dof_perm_inv[sb + j],
                                schur[(a * f_dim + i, b * f_dim + j)],
                            );
                        }
                    }
                }
            }
            local_lu.push(lu);
            local_coupling.push(coupling);
            row_coupling.push(row);
        }
        skyline.factorize()?;

        Ok(Self {
            sigma,
            dof_map,
            d_flux,
            d_scalar,
            dof_perm,
            local_lu,
            local_coupling,
            row_coupling,
            skyline,
        })
    }

    /// Number of globally coupled unknowns.
    pub fn n_trace_dofs(&self) -> usize {
        self.dof_map.n_dofs()
    }

    /// Solve for (flux, scalar, trace) given per-element scalar-equation
    /// moments and a global face-equation right-hand side. The flux equation
    /// is homogeneous in every use of the solver.
    pub fn solve(
        &self,
        mesh: &Mesh,
        scalar_rhs: &[DVector<f64>],
        face_rhs: &[f64],
    ) -> (Vec<DVector<f64>>, Vec<DVector<f64>>, Vec<f64>) {
        let n_dofs = self.dof_map.n_dofs();
        assert_eq!(face_rhs.len(), n_dofs);
        assert_eq!(scalar_rhs.len(), mesh.n_elements());

        // Condense the right-hand side: g = face_rhs - sum_K Bc^T A^{-1} r_K.
        let local_solutions: Vec<DVector<f64>> = scalar_rhs
            .par_iter()
            .enumerate()
            .map(|(e, rhs)| {
                let mut full = DVector::zeros(self.d_flux + self.d_scalar);
                full.rows_mut(self.d_flux, self.d_scalar).copy_from(rhs);
                self.local_lu[e]
                    .solve(&full)
                    .expect("factored local block stays solvable")
            })
            .collect();
        let mut g = face_rhs.to_vec();
        for (e, local) in local_solutions.iter().enumerate() {
            let contribution = -(&self.row_coupling[e] * local);
            self.dof_map.scatter_add(mesh, e, &contribution, &mut g);
        }

        // Permute, solve the profile system, permute back.
        let mut b = vec![0.0; n_dofs];
        for new in 0..n_dofs {
            b[new] = g[self.dof_perm[new]];
        }
        self.skyline.solve_in_place(&mut b);
        let mut trace = vec![0.0; n_dofs];
        for new in 0..n_dofs {
            trace[self.dof_perm[new]] = b[new];
        }

        // Recover element unknowns: x = A^{-1} r - A^{-1} Bc lambda.
        let parts: Vec<(DVector<f64>, DVector<f64>)> = (0..mesh.n_elements())
            .into_par_iter()
            .map(|e| {
                let lambda = self.dof_map.gather(mesh, e, &trace);
                let correction = self.local_lu[e]
                    .solve(&(&self.local_coupling[e] * &lambda))
                    .expect("factored local block stays solvable");
                let x = &local_solutions[e] - correction;
                (
                    x.rows(0, self.d_flux).into_owned(),
                    x.rows(self.d_flux, self.d_scalar).into_owned(),
                )
            })
            .collect();
        let mut flux = Vec::with_capacity(parts.len());
        let mut scalar = Vec::with_capacity(parts.len());
        for (f, s) in parts {
            flux.push(f);
            scalar.push(s);
        }
        (flux, scalar, trace)
    }
}

/// Residual of the face (flux-continuity) equations at a given state:
/// max over interior-face test functions of the condensed second equation,
/// together with the state's coefficient scale.
pub fn flux_continuity_residual(
    mesh: &Mesh,
    ops: &[ElementOperators],
    dof_map: &TraceDofMap,
    flux: &[DVector<f64>],
    scalar: &[DVector<f64>],
    trace: &[f64],
    face_rhs: &[f64],
) -> (f64, f64) {
    let mut residual = vec![0.0; dof_map.n_dofs()];
    for i in 0..dof_map.n_dofs() {
        residual[i] = -face_rhs[i];
    }
    for e in 0..mesh.n_elements() {
        let lambda = dof_map.gather(mesh, e, trace);
        let contribution = ops[e].apply_face_form(&flux[e], &scalar[e], &lambda);
        dof_map.scatter_add(mesh, e, &contribution, &mut residual);
    }
    let max_residual = residual.iter().fold(0.0f64, |m, r| m.max(r.abs()));
    let mut scale = trace.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for e in 0..mesh.n_elements() {
        scale = scale.max(flux[e].amax().max(scalar[e].amax()));
    }
    (max_residual, scale)
}

/// Dense condensed matrix (test and diagnostic use on small meshes).
pub fn condensed_dense_matrix(mesh: &Mesh, ops: &[ElementOperators], sigma: f64) -> DMatrix<f64> {
    let refs = ops[0].refs();
    let f_dim = refs.face_dim();
    let dof_map = TraceDofMap::new(mesh, f_dim);
    let mut dense = DMatrix::zeros(dof_map.n_dofs(), dof_map.n_dofs());
    for (e, op) in ops.iter().enumerate() {
        let a = op.local_matrix(sigma);
        let coupling = op.local_face_coupling();
        let solve_coupling = a.lu().solve(&coupling).expect("local block invertible");
        let schur = &op.stab_trace_trace - coupling.transpose() * &solve_coupling;
        let efs = mesh.element_faces(e);
        for a_slot in 0..3 {
            let Some(sa) = dof_map.offset(efs[a_slot].face) else { continue };
            for b_slot in 0..3 {
                let Some(sb) = dof_map.offset(efs[b_slot].face) else { continue };
                for i in 0..f_dim {
                    for j in 0..f_dim {
                        dense[(sa + i, sb + j)] +=
                            schur[(a_slot * f_dim + i, b_slot * f_dim + j)];
                    }
                }
            }
        }
    }
    dense
}
