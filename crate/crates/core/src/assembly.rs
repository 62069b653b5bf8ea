//! Residual evaluation and block-system assembly.
//!
//! The discrete residual is written in total displacements `U` (cells and
//! boundary faces):
//!
//! * cell `C`: `r_C = Σ_f ±|S_f| P(∇U_f)·N_f`, the net surface force;
//! * displacement face: `r_b = k_b (Ū − U_b)`;
//! * traction face: `r_b = |S_b| (T̄ − P(∇U_b)·N)`;
//! * symmetry face: minus `k_b` times the normal displacement and minus the tangential force.
//!
//! `k_b = (2μ + λ)|S_b|/|d_b|` is the stiffness of the half cell next to the
//! face; it keeps every row in force units. Boundary rows carry the sign of
//! the cell rows so the Jacobian diagonal is negative throughout.
//!
//! `∇U_f` is the compact face gradient of [`CartesianMesh::face_gradient_stencil`].
//! The block matrix is the exact Jacobian `∂r/∂U` and the right-hand side is
//! `−r`, so one solve yields the Newton increment `ΔU`.

use std::sync::Arc;

use crate::error::{Error, Location, Result};
use crate::kinematics::IncrementalState;
use crate::linsolve::{Block, BlockSparseMatrix};
use crate::material::{LameParameters, Material};
use crate::mesh::{CartesianMesh, Patch, Side};
use crate::tensor::{Tensor2, Vector3};

/// Spatial profile of prescribed boundary data, evaluated at load factor `t`.
#[derive(Debug, Clone)]
pub enum BoundaryData {
    /// `t · v`
    Uniform(Vector3),
    /// `t · G · X`
    Affine(Tensor2),
    /// `P(t · ∇U) · N`, the traction of a homogeneous deformation.
    HomogeneousTraction { grad_u: Tensor2, material: Arc<dyn Material> },
}

impl BoundaryData {
    pub fn zero() -> Self {
        BoundaryData::Uniform(Vector3::ZERO)
    }

    pub fn value(&self, t: f64, x: &Vector3, n: &Vector3) -> Result<Vector3> {
        match self {
            BoundaryData::Uniform(v) => Ok(*v * t),
            BoundaryData::Affine(g) => Ok(g.dot_vec(x) * t),
            BoundaryData::HomogeneousTraction { grad_u, material } => Ok(material.first_piola(&(*grad_u * t))?.dot_vec(n)),
        }
    }
}

#[derive(Debug, Clone)]
pub enum BoundaryCondition {
    Displacement(BoundaryData),
    Traction(BoundaryData),
    Symmetry,
}

/// One condition per patch.
#[derive(Debug, Clone)]
pub struct BoundaryConditions {
    patches: [BoundaryCondition; 4],
}

impl BoundaryConditions {
    pub fn new(left: BoundaryCondition, right: BoundaryCondition, bottom: BoundaryCondition, top: BoundaryCondition) -> Self {
        BoundaryConditions {
            patches: [left, right, bottom, top],
        }
    }

    pub fn get(&self, patch: Patch) -> &BoundaryCondition {
        &self.patches[patch.index()]
    }

    pub fn set(&mut self, patch: Patch, bc: BoundaryCondition) {
        self.patches[patch.index()] = bc;
    }

    pub fn has_traction(&self) -> bool {
        self.patches.iter().any(|b| matches!(b, BoundaryCondition::Traction(_)))
    }
}

/// Linearised face traction around the current face state.
///
/// The stencils act on the reference gradient, so the vectors of the
/// increment form are pulled back: `v = S·N` and `g_d = e_d`. With
/// `T_d = Σ_c (T^c·e_d) ⊗ e_c` the traction response to `U_k ⊗ w` is
/// `|S| [(w·N) H_n + (w·t) H_t] · U_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceLinearisation {
    pub normal: Vector3,
    pub tangent: Vector3,
    pub v: Vector3,
    pub v_t: Vector3,
    pub g: [Vector3; 3],
    pub h: [Vector3; 3],
    pub t_d: [Tensor2; 3],
    pub h_n: Tensor2,
    pub h_t: Tensor2,
}

impl FaceLinearisation {
    pub fn new(mat: &dyn Material, grad_u: &Tensor2, normal: Vector3, tangent: Vector3) -> Result<Self> {
        let s = mat.geometric_stress(grad_u)?;
        let v = s.dot_vec(&normal);
        let nn = Tensor2::outer(&normal, &normal);
        let proj = Tensor2::identity() - nn;
        let v_t = proj.dot_vec(&v);
        let t_up = [
            mat.t_tensor(grad_u, &normal, 0)?,
            mat.t_tensor(grad_u, &normal, 1)?,
            mat.t_tensor(grad_u, &normal, 2)?,
        ];
        let t_d: [Tensor2; 3] = std::array::from_fn(|d| {
            let mut td = Tensor2::ZERO;
            for (c, tc) in t_up.iter().enumerate() {
                for a in 0..3 {
                    td.c[a][c] = tc.c[a][d];
                }
            }
            td
        });
        let g: [Vector3; 3] = std::array::from_fn(Vector3::unit);
        let h: [Vector3; 3] = std::array::from_fn(|d| proj.dot_vec(&g[d]));
        let mut h_n = Tensor2::identity() * v.dot(&normal);
        let mut h_t = Tensor2::identity() * v_t.dot(&tangent);
        for d in 0..3 {
            h_n += t_d[d] * g[d].dot(&normal);
            h_t += t_d[d] * h[d].dot(&tangent);
        }
        Ok(FaceLinearisation {
            normal,
            tangent,
            v,
            v_t,
            g,
            h,
            t_d,
            h_n,
            h_t,
        })
    }

    /// Traction derivative per unit area for a stencil weight `w`.
    pub fn coefficient(&self, w: &Vector3) -> Tensor2 {
        self.h_n * w.dot(&self.normal) + self.h_t * w.dot(&self.tangent)
    }
}

/// How the implicit part of the segregated operator is weighted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SegregatedCoefficient {
    /// `2μ + λ` everywhere.
    Reference,
    /// The stiffest normal-direction component of `H_n` at the current face state.
    Tangent,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ResidualSummary {
    /// 2-norm of the residual in force units.
    pub norm: f64,
    /// 2-norm of the per-row sums of face-force magnitudes.
    pub internal_force: f64,
}

#[derive(Debug, Clone)]
pub struct BlockSystem {
    pub matrix: BlockSparseMatrix,
    /// `−r`, flattened in-plane components.
    pub rhs: Vec<f64>,
    pub residual: ResidualSummary,
}

/// Row of the linearised system, as returned by the row helpers.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub blocks: Vec<(usize, Block)>,
    pub rhs: [f64; 2],
}

fn to_block(t: &Tensor2) -> Block {
    [[t.c[0][0], t.c[0][1]], [t.c[1][0], t.c[1][1]]]
}

fn scaled_identity(s: f64) -> Block {
    [[s, 0.0], [0.0, s]]
}

struct FaceForce {
    traction: Vector3,
    lin: Option<FaceLinearisation>,
}

/// Mesh-bound assembler holding the stencils, sparsity patterns and boundary conditions.
#[derive(Debug, Clone)]
pub struct Assembler<'m> {
    pub mesh: &'m CartesianMesh,
    pub bcs: BoundaryConditions,
    stencils: Vec<Vec<(usize, Vector3)>>,
    coupled: BlockSparseMatrix,
    segregated: BlockSparseMatrix,
    reference_stiffness: f64,
}

impl<'m> Assembler<'m> {
    pub fn new(mesh: &'m CartesianMesh, bcs: BoundaryConditions, lame: &LameParameters) -> Self {
        let stencils: Vec<_> = (0..mesh.faces.len()).map(|f| mesh.face_gradient_stencil(f)).collect();
        let n = mesh.n_dofs();
        let mut pattern = vec![Vec::new(); n];
        let mut seg = vec![Vec::new(); n];
        for (id, f) in mesh.faces.iter().enumerate() {
            let cols: Vec<usize> = stencils[id].iter().map(|&(k, _)| k).collect();
            let far = match f.neighbour {
                Side::Cell(c) => c,
                Side::Boundary { bface, .. } => mesh.bface_dof(bface),
            };
            pattern[f.owner].extend(&cols);
            pattern[far].extend(&cols);
            seg[f.owner].push(far);
        }
        Assembler {
            mesh,
            bcs,
            coupled: BlockSparseMatrix::from_pattern(n, &pattern),
            segregated: BlockSparseMatrix::from_pattern(n, &seg),
            stencils,
            reference_stiffness: lame.p_wave_modulus(),
        }
    }

    pub fn stencil(&self, face: usize) -> &[(usize, Vector3)] {
        &self.stencils[face]
    }

    /// Compact face gradient `Σ_k U_k ⊗ w_k`.
    pub fn face_gradient(&self, face: usize, u: &[Vector3]) -> Tensor2 {
        let mut g = Tensor2::ZERO;
        for &(k, w) in &self.stencils[face] {
            g += Tensor2::outer(&u[k], &w);
        }
        g
    }

    pub fn face_linearisation(&self, mat: &dyn Material, state: &IncrementalState, face: usize) -> Result<FaceLinearisation> {
        let f = &self.mesh.faces[face];
        let g = self.face_gradient(face, &state.u);
        FaceLinearisation::new(mat, &g, f.normal, f.tangent).map_err(|e| e.at(Location::Face(face)))
    }

    fn face_forces(&self, mat: &dyn Material, state: &IncrementalState, linearise: bool) -> Result<Vec<FaceForce>> {
        if state.u.len() != self.mesh.n_dofs() {
            return Err(Error::DimensionMismatch {
                expected: self.mesh.n_dofs(),
                got: state.u.len(),
            });
        }
        self.mesh
            .faces
            .iter()
            .enumerate()
            .map(|(id, f)| {
                let g = self.face_gradient(id, &state.u);
                let p = mat.first_piola(&g).map_err(|e| e.at(Location::Face(id)))?;
                if !p.is_finite() {
                    return Err(Error::InvertedElement {
                        location: Location::Face(id),
                        det: f64::NAN,
                    });
                }
                let lin = if linearise {
                    Some(FaceLinearisation::new(mat, &g, f.normal, f.tangent).map_err(|e| e.at(Location::Face(id)))?)
                } else {
                    None
                };
                Ok(FaceForce {
                    traction: p.dot_vec(&f.normal) * f.area,
                    lin,
                })
            })
            .collect()
    }

    fn half_stiffness(&self, face: usize) -> f64 {
        let f = &self.mesh.faces[face];
        self.reference_stiffness * f.area / f.d.norm()
    }

    /// Returns the raw residual per dof, the force-unit residual and the force scale.
    fn residual_rows(&self, forces: &[FaceForce], state: &IncrementalState, t: f64) -> Result<(Vec<Vector3>, Vec<f64>, Vec<f64>)> {
        let mesh = self.mesh;
        let n = mesh.n_dofs();
        let mut r = vec![Vector3::ZERO; n];
        let mut force = vec![0.0; 2 * n];
        let mut scale = vec![0.0; n];
        for (id, f) in mesh.faces.iter().enumerate() {
            let tr = forces[id].traction;
            r[f.owner] += tr;
            scale[f.owner] += tr.norm();
            match f.neighbour {
                Side::Cell(c) => {
                    r[c] -= tr;
                    scale[c] += tr.norm();
                }
                Side::Boundary { patch, bface } => {
                    let dof = mesh.bface_dof(bface);
                    let ub = state.u[dof];
                    match self.bcs.get(patch) {
                        BoundaryCondition::Displacement(data) => {
                            r[dof] = (data.value(t, &f.centroid, &f.normal)? - ub) * self.half_stiffness(id);
                            force[2 * dof] = r[dof][0];
                            force[2 * dof + 1] = r[dof][1];
                        }
                        BoundaryCondition::Traction(data) => {
                            let tb = data.value(t, &f.centroid, &f.normal)? * f.area;
                            r[dof] = tb - tr;
                            scale[dof] += tr.norm() + tb.norm();
                            force[2 * dof] = r[dof][0];
                            force[2 * dof + 1] = r[dof][1];
                        }
                        BoundaryCondition::Symmetry => {
                            let un = f.normal.dot(&ub) * self.half_stiffness(id);
                            r[dof] = (f.normal * un + f.tangent * f.tangent.dot(&tr)) * -1.0;
                            scale[dof] += tr.norm();
                            force[2 * dof] = r[dof][0];
                            force[2 * dof + 1] = r[dof][1];
                        }
                    }
                }
            }
        }
        for c in 0..mesh.n_cells() {
            force[2 * c] = r[c][0];
            force[2 * c + 1] = r[c][1];
        }
        Ok((r, force, scale))
    }

    fn summary(force: &[f64], scale: &[f64]) -> ResidualSummary {
        ResidualSummary {
            norm: force.iter().map(|v| v * v).sum::<f64>().sqrt(),
            internal_force: scale.iter().map(|v| v * v).sum::<f64>().sqrt(),
        }
    }

    /// Raw residual per dof.
    pub fn residual_vector(&self, mat: &dyn Material, state: &IncrementalState, t: f64) -> Result<Vec<Vector3>> {
        let forces = self.face_forces(mat, state, false)?;
        Ok(self.residual_rows(&forces, state, t)?.0)
    }

    pub fn residual(&self, mat: &dyn Material, state: &IncrementalState, t: f64) -> Result<ResidualSummary> {
        let forces = self.face_forces(mat, state, false)?;
        let (_, force, scale) = self.residual_rows(&forces, state, t)?;
        Ok(Self::summary(&force, &scale))
    }

    fn rhs_from(r: &[Vector3]) -> Vec<f64> {
        r.iter().flat_map(|v| [-v[0], -v[1]]).collect()
    }

    /// Newton system `J ΔU = −r` at the current state.
    pub fn assemble_system(&self, mat: &dyn Material, state: &IncrementalState, t: f64) -> Result<BlockSystem> {
        let forces = self.face_forces(mat, state, true)?;
        let (r, force, scale) = self.residual_rows(&forces, state, t)?;
        let mut a = self.coupled.clone();
        let mesh = self.mesh;
        for (id, f) in mesh.faces.iter().enumerate() {
            let lin = forces[id].lin.as_ref().expect("linearised face");
            for &(k, w) in &self.stencils[id] {
                let blk = lin.coefficient(&w) * f.area;
                a.add(f.owner, k, &to_block(&blk));
                match f.neighbour {
                    Side::Cell(c) => a.add(c, k, &to_block(&(blk * -1.0))),
                    Side::Boundary { patch, bface } => {
                        let dof = mesh.bface_dof(bface);
                        match self.bcs.get(patch) {
                            BoundaryCondition::Displacement(_) => {}
                            BoundaryCondition::Traction(_) => a.add(dof, k, &to_block(&(blk * -1.0))),
                            BoundaryCondition::Symmetry => {
                                let tt = Tensor2::outer(&f.tangent, &f.tangent);
                                a.add(dof, k, &to_block(&(tt.dot(&blk) * -1.0)));
                            }
                        }
                    }
                }
            }
            if let Side::Boundary { patch, bface } = f.neighbour {
                let dof = mesh.bface_dof(bface);
                let k = self.half_stiffness(id);
                match self.bcs.get(patch) {
                    BoundaryCondition::Displacement(_) => a.add(dof, dof, &scaled_identity(-k)),
                    BoundaryCondition::Symmetry => a.add(dof, dof, &to_block(&(Tensor2::outer(&f.normal, &f.normal) * -k))),
                    BoundaryCondition::Traction(_) => {}
                }
            }
        }
        Ok(BlockSystem {
            matrix: a,
            rhs: Self::rhs_from(&r),
            residual: Self::summary(&force, &scale),
        })
    }

    /// Cell row of the Newton system.
    pub fn assemble_interior_row(&self, mat: &dyn Material, state: &IncrementalState, cell: usize) -> Result<Row> {
        let mut acc: Vec<(usize, Block)> = Vec::new();
        let mut rhs = Vector3::ZERO;
        for &(face, sign) in &self.mesh.cells[cell].faces {
            let f = &self.mesh.faces[face];
            let g = self.face_gradient(face, &state.u);
            let p = mat.first_piola(&g).map_err(|e| e.at(Location::Face(face)))?;
            rhs -= p.dot_vec(&f.normal) * (f.area * sign);
            let lin = self.face_linearisation(mat, state, face)?;
            for &(k, w) in &self.stencils[face] {
                push_block(&mut acc, k, &to_block(&(lin.coefficient(&w) * (f.area * sign))));
            }
        }
        acc.sort_by_key(|&(k, _)| k);
        Ok(Row {
            blocks: acc,
            rhs: [rhs[0], rhs[1]],
        })
    }

    /// Row of boundary face `bface` of the Newton system.
    pub fn assemble_boundary_row(&self, mat: &dyn Material, state: &IncrementalState, bface: usize, t: f64) -> Result<Row> {
        let id = self.mesh.boundary_faces[bface];
        let f = &self.mesh.faces[id];
        let dof = self.mesh.bface_dof(bface);
        let patch = self.mesh.bface_patch(bface);
        let g = self.face_gradient(id, &state.u);
        let traction = mat.first_piola(&g).map_err(|e| e.at(Location::Face(id)))?.dot_vec(&f.normal) * f.area;
        let mut acc: Vec<(usize, Block)> = Vec::new();
        let k = self.half_stiffness(id);
        let rhs = match self.bcs.get(patch) {
            BoundaryCondition::Displacement(data) => {
                acc.push((dof, scaled_identity(-k)));
                (state.u[dof] - data.value(t, &f.centroid, &f.normal)?) * k
            }
            BoundaryCondition::Traction(data) => {
                let lin = self.face_linearisation(mat, state, id)?;
                for &(k, w) in &self.stencils[id] {
                    push_block(&mut acc, k, &to_block(&(lin.coefficient(&w) * -f.area)));
                }
                traction - data.value(t, &f.centroid, &f.normal)? * f.area
            }
            BoundaryCondition::Symmetry => {
                let lin = self.face_linearisation(mat, state, id)?;
                let tt = Tensor2::outer(&f.tangent, &f.tangent);
                for &(k, w) in &self.stencils[id] {
                    push_block(&mut acc, k, &to_block(&(tt.dot(&lin.coefficient(&w)) * -f.area)));
                }
                push_block(&mut acc, dof, &to_block(&(Tensor2::outer(&f.normal, &f.normal) * -k)));
                f.normal * (k * f.normal.dot(&state.u[dof])) + f.tangent * f.tangent.dot(&traction)
            }
        };
        acc.sort_by_key(|&(k, _)| k);
        Ok(Row {
            blocks: acc,
            rhs: [rhs[0], rhs[1]],
        })
    }

    /// Small-strain system `K U = b` in total displacements. The face
    /// coefficients are those of the linear-elastic law at zero strain,
    /// `μ(w·N) I + μ w⊗N + λ N⊗w`.
    pub fn assemble_linear(&self, lame: &LameParameters, t: f64) -> Result<BlockSystem> {
        let small = crate::material::LinearElastic::new(*lame);
        let mesh = self.mesh;
        let mut a = self.coupled.clone();
        let mut b = vec![Vector3::ZERO; mesh.n_dofs()];
        for (id, f) in mesh.faces.iter().enumerate() {
            let lin = FaceLinearisation::new(&small, &Tensor2::ZERO, f.normal, f.tangent)?;
            for &(k, w) in &self.stencils[id] {
                let coef = lin.coefficient(&w) * f.area;
                a.add(f.owner, k, &to_block(&coef));
                match f.neighbour {
                    Side::Cell(c) => a.add(c, k, &to_block(&(coef * -1.0))),
                    Side::Boundary { patch, bface } => {
                        let dof = mesh.bface_dof(bface);
                        match self.bcs.get(patch) {
                            BoundaryCondition::Displacement(_) => {}
                            BoundaryCondition::Traction(_) => a.add(dof, k, &to_block(&(coef * -1.0))),
                            BoundaryCondition::Symmetry => {
                                let tt = Tensor2::outer(&f.tangent, &f.tangent);
                                a.add(dof, k, &to_block(&(tt.dot(&coef) * -1.0)));
                            }
                        }
                    }
                }
            }
            if let Side::Boundary { patch, bface } = f.neighbour {
                let dof = mesh.bface_dof(bface);
                let k = self.half_stiffness(id);
                match self.bcs.get(patch) {
                    BoundaryCondition::Displacement(data) => {
                        a.add(dof, dof, &scaled_identity(-k));
                        b[dof] = data.value(t, &f.centroid, &f.normal)? * -k;
                    }
                    BoundaryCondition::Traction(data) => b[dof] = data.value(t, &f.centroid, &f.normal)? * -f.area,
                    BoundaryCondition::Symmetry => a.add(dof, dof, &to_block(&(Tensor2::outer(&f.normal, &f.normal) * -k))),
                }
            }
        }
        Ok(BlockSystem {
            matrix: a,
            rhs: b.iter().flat_map(|v| [v[0], v[1]]).collect(),
            residual: ResidualSummary::default(),
        })
    }

    /// Component-decoupled deferred-correction system `K δ = −r`.
    ///
    /// `K` keeps only the normal-derivative part of each face flux with a
    /// scalar stiffness per face, so each displacement component has its own
    /// Laplacian-like equation; both are held in diagonal blocks.
    pub fn assemble_segregated(
        &self,
        mat: &dyn Material,
        state: &IncrementalState,
        t: f64,
        coefficient: SegregatedCoefficient,
    ) -> Result<BlockSystem> {
        let forces = self.face_forces(mat, state, coefficient == SegregatedCoefficient::Tangent)?;
        let (r, force, scale) = self.residual_rows(&forces, state, t)?;
        let mesh = self.mesh;
        let mut a = self.segregated.clone();
        for (id, f) in mesh.faces.iter().enumerate() {
            let kappa = match &forces[id].lin {
                Some(lin) => {
                    let h = &lin.h_n;
                    h.c[0][0].max(h.c[1][1])
                }
                None => self.reference_stiffness,
            };
            let k = kappa * f.area / f.d.norm();
            let far = match f.neighbour {
                Side::Cell(c) => c,
                Side::Boundary { bface, .. } => mesh.bface_dof(bface),
            };
            a.add(f.owner, f.owner, &scaled_identity(-k));
            a.add(f.owner, far, &scaled_identity(k));
            match f.neighbour {
                Side::Cell(c) => {
                    a.add(c, c, &scaled_identity(-k));
                    a.add(c, f.owner, &scaled_identity(k));
                }
                Side::Boundary { patch, .. } => match self.bcs.get(patch) {
                    BoundaryCondition::Displacement(_) => a.add(far, far, &scaled_identity(-self.half_stiffness(id))),
                    BoundaryCondition::Traction(_) => {
                        a.add(far, far, &scaled_identity(-k));
                        a.add(far, f.owner, &scaled_identity(k));
                    }
                    BoundaryCondition::Symmetry => {
                        let nn = to_block(&(Tensor2::outer(&f.normal, &f.normal) * -self.half_stiffness(id)));
                        let tt = Tensor2::outer(&f.tangent, &f.tangent);
                        a.add(far, far, &nn);
                        a.add(far, far, &to_block(&(tt * -k)));
                        a.add(far, f.owner, &to_block(&(tt * k)));
                    }
                },
            }
        }
        Ok(BlockSystem {
            matrix: a,
            rhs: Self::rhs_from(&r),
            residual: Self::summary(&force, &scale),
        })
    }
}

fn push_block(acc: &mut Vec<(usize, Block)>, k: usize, b: &Block) {
    if let Some((_, e)) = acc.iter_mut().find(|(j, _)| *j == k) {
        for r in 0..2 {
            for c in 0..2 {
                e[r][c] += b[r][c];
            }
        }
    } else {
        acc.push((k, *b));
    }
}
