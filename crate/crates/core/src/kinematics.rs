//! Incremental kinematics: the old state `(U°, ∇U°)` and its update from a
//! solved displacement increment.
//!
//! With `ΔF = I + ∇°ΔU` the deformation composes as `F = ΔF·F°`, so the total
//! gradient moves by `∇°ΔU·F°`.

use crate::error::{Error, Location, Result};
use crate::mesh::{CartesianMesh, Side};
use crate::tensor::{Tensor2, Vector3};

/// Old-configuration state. Displacements are stored per dof (cells first,
/// then boundary faces); `∇U°` per cell, with `F° = I + ∇U°` derived on demand.
#[derive(Debug, Clone, PartialEq)]
pub struct IncrementalState {
    pub u: Vec<Vector3>,
    pub grad_u: Vec<Tensor2>,
    n_cells: usize,
}

impl IncrementalState {
    pub fn zero(mesh: &CartesianMesh) -> Self {
        IncrementalState {
            u: vec![Vector3::ZERO; mesh.n_dofs()],
            grad_u: vec![Tensor2::ZERO; mesh.n_cells()],
            n_cells: mesh.n_cells(),
        }
    }

    /// State holding the total displacement `u`, with cell gradients rebuilt from it.
    pub fn from_displacement(mesh: &CartesianMesh, u: Vec<Vector3>) -> Result<Self> {
        if u.len() != mesh.n_dofs() {
            return Err(Error::DimensionMismatch {
                expected: mesh.n_dofs(),
                got: u.len(),
            });
        }
        let grad_u = cell_gradient(mesh, &u);
        Ok(IncrementalState {
            u,
            grad_u,
            n_cells: mesh.n_cells(),
        })
    }

    pub fn u_cells(&self) -> &[Vector3] {
        &self.u[..self.n_cells]
    }

    pub fn u_bfaces(&self) -> &[Vector3] {
        &self.u[self.n_cells..]
    }

    pub fn f_old(&self, cell: usize) -> Tensor2 {
        Tensor2::identity() + self.grad_u[cell]
    }
}

/// `∇°ΔU · F°`, the change of the total displacement gradient.
pub fn gradient_increment(grad_du_old: &Tensor2, f_old: &Tensor2) -> Tensor2 {
    grad_du_old.dot(f_old)
}

/// Gauss gradient `(1/V_C) Σ_f φ_f ⊗ S_f` in the reference configuration.
///
/// Interior face values are the mean of the two cells; boundary faces use
/// their own unknowns.
pub fn cell_gradient(mesh: &CartesianMesh, field: &[Vector3]) -> Vec<Tensor2> {
    assert_eq!(field.len(), mesh.n_dofs(), "field must cover all cells and boundary faces");
    let mut grad = vec![Tensor2::ZERO; mesh.n_cells()];
    for f in &mesh.faces {
        let s = f.area_vector();
        match f.neighbour {
            Side::Cell(n) => {
                let phi = (field[f.owner] + field[n]) * 0.5;
                let flux = Tensor2::outer(&phi, &s);
                grad[f.owner] += flux;
                grad[n] += flux * -1.0;
            }
            Side::Boundary { bface, .. } => {
                grad[f.owner] += Tensor2::outer(&field[mesh.bface_dof(bface)], &s);
            }
        }
    }
    for (g, cell) in grad.iter_mut().zip(&mesh.cells) {
        *g = *g * (1.0 / cell.volume);
    }
    grad
}

/// Applies a solved increment: `U° += ΔU`, `∇U° += ∇°ΔU·F°`.
///
/// `∇°ΔU` is the increment's gradient in the old configuration, recovered
/// from its reference Gauss gradient as `∇ΔU·F°⁻¹`.
pub fn advance_state(mesh: &CartesianMesh, state: &mut IncrementalState, delta: &[Vector3]) -> Result<()> {
    if delta.len() != state.u.len() {
        return Err(Error::DimensionMismatch {
            expected: state.u.len(),
            got: delta.len(),
        });
    }
    for (u, du) in state.u.iter_mut().zip(delta) {
        *u += *du;
    }
    let grad_ref = cell_gradient(mesh, delta);
    for (c, g_ref) in grad_ref.iter().enumerate() {
        let f_old = state.f_old(c);
        let f_inv = f_old.inverse().map_err(|_| Error::InvertedElement {
            location: Location::Cell(c),
            det: f_old.det(),
        })?;
        let g_old = g_ref.dot(&f_inv);
        state.grad_u[c] += gradient_increment(&g_old, &f_old);
    }
    for c in 0..state.grad_u.len() {
        let det = state.f_old(c).det();
        if !(det > 0.0) || !det.is_finite() {
            return Err(Error::InvertedElement {
                location: Location::Cell(c),
                det,
            });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_mesh;

    fn linear_field(mesh: &CartesianMesh, g: &Tensor2) -> Vec<Vector3> {
        (0..mesh.n_dofs()).map(|d| g.dot_vec(&mesh.dof_position(d))).collect()
    }

    #[test]
    fn gauss_gradient_is_exact_for_linear_fields() {
        let mesh = build_mesh(5, 4, 1.0, 0.7).unwrap();
        let g = Tensor2::from_rows([[0.3, -1.2, 0.0], [0.7, 0.25, 0.0], [0.0, 0.0, 0.0]]);
        for grad in cell_gradient(&mesh, &linear_field(&mesh, &g)) {
            assert!((grad - g).max_abs() < 1e-13);
        }
    }

    #[test]
    fn constant_field_has_zero_gradient() {
        let mesh = build_mesh(3, 3, 1.0, 1.0).unwrap();
        let field = vec![Vector3::new(1.5, -2.0, 0.0); mesh.n_dofs()];
        for grad in cell_gradient(&mesh, &field) {
            assert!(grad.max_abs() < 1e-13);
        }
    }

    #[test]
    fn zero_increment_leaves_state() {
        let mesh = build_mesh(3, 2, 1.0, 1.0).unwrap();
        let mut s = IncrementalState::zero(&mesh);
        let before = s.clone();
        advance_state(&mesh, &mut s, &vec![Vector3::ZERO; mesh.n_dofs()]).unwrap();
        assert_eq!(s, before);
    }

    #[test]
    fn uniaxial_update_from_zero() {
        let mesh = build_mesh(4, 4, 1.0, 1.0).unwrap();
        let mut s = IncrementalState::zero(&mesh);
        let g = Tensor2::diag(-0.35, 0.0, 0.0);
        advance_state(&mesh, &mut s, &linear_field(&mesh, &g)).unwrap();
        for c in 0..mesh.n_cells() {
            assert!((s.f_old(c) - Tensor2::diag(0.65, 1.0, 1.0)).max_abs() < 1e-13);
        }
    }

    #[test]
    fn inversion_is_detected() {
        let mesh = build_mesh(2, 2, 1.0, 1.0).unwrap();
        let mut s = IncrementalState::zero(&mesh);
        let g = Tensor2::diag(-1.5, 0.0, 0.0);
        let err = advance_state(&mesh, &mut s, &linear_field(&mesh, &g)).unwrap_err();
        assert!(matches!(err, Error::InvertedElement { location: Location::Cell(_), .. }));
    }
}
