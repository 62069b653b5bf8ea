//! Manufactured solutions, the analytic cantilever benchmark and error metrics.

use std::sync::Arc;

use crate::assembly::{BoundaryCondition, BoundaryConditions, BoundaryData};
use crate::error::{Error, Result};
use crate::material::{lame_from_e_nu, LameParameters, Material, Regime};
use crate::mesh::{CartesianMesh, Patch};
use crate::tensor::{Tensor2, Vector3};

/// Homogeneous deformation maps `x = F(t)·X`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MmsMap {
    /// `F = diag(1 + (Λ − 1) t, 1, 1)`
    Uniaxial { stretch: f64 },
    /// `F = I + ω t e₁⊗e₂`
    Shear { omega: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BcKind {
    Displacement,
    Traction,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MmsCase {
    pub map: MmsMap,
    pub bc: BcKind,
}

impl MmsCase {
    pub fn new(map: MmsMap, bc: BcKind) -> Result<Self> {
        match map {
            MmsMap::Uniaxial { stretch } if !(stretch > 0.0 && stretch.is_finite()) => {
                Err(Error::Validation(format!("uniaxial stretch must be positive, got {stretch}")))
            }
            MmsMap::Shear { omega } if !omega.is_finite() => Err(Error::Validation(format!("shear factor must be finite, got {omega}"))),
            _ => Ok(MmsCase { map, bc }),
        }
    }

    pub fn deformation_gradient(&self, t: f64) -> Tensor2 {
        match self.map {
            MmsMap::Uniaxial { stretch } => Tensor2::diag(1.0 + (stretch - 1.0) * t, 1.0, 1.0),
            MmsMap::Shear { omega } => {
                let mut f = Tensor2::identity();
                f.c[0][1] = omega * t;
                f
            }
        }
    }

    /// `Ū = (F(t) − I)·X`
    pub fn dirichlet_data(&self, t: f64, x: &Vector3) -> Vector3 {
        (self.deformation_gradient(t) - Tensor2::identity()).dot_vec(x)
    }

    /// `T̄ = P(F(t) − I)·N`
    pub fn traction_data(&self, mat: &dyn Material, t: f64, n: &Vector3) -> Result<Vector3> {
        Ok(mat.first_piola(&(self.deformation_gradient(t) - Tensor2::identity()))?.dot_vec(n))
    }

    /// Boundary conditions reproducing the exact solution. Traction cases pin
    /// the left patch with the exact displacement and load the other three.
    pub fn boundary_conditions(&self, mat: Arc<dyn Material>) -> BoundaryConditions {
        let g = self.deformation_gradient(1.0) - Tensor2::identity();
        let disp = || BoundaryCondition::Displacement(BoundaryData::Affine(g));
        match self.bc {
            BcKind::Displacement => BoundaryConditions::new(disp(), disp(), disp(), disp()),
            BcKind::Traction => {
                let tr = || {
                    BoundaryCondition::Traction(BoundaryData::HomogeneousTraction {
                        grad_u: g,
                        material: mat.clone(),
                    })
                };
                BoundaryConditions::new(disp(), tr(), tr(), tr())
            }
        }
    }
}

/// Free-standing form of [`MmsCase::deformation_gradient`].
pub fn mms_deformation_gradient(case: &MmsCase, t: f64) -> Tensor2 {
    case.deformation_gradient(t)
}

/// Material constants of the manufactured-solution cases (E = 0.02 GPa, ν = 0.3).
pub fn mms_lame() -> LameParameters {
    lame_from_e_nu(0.02e9, 0.3, Regime::PlaneStrain).expect("valid constants")
}

/// Unit-square mesh with `n` cells per side.
pub fn mms_mesh(n: usize) -> Result<CartesianMesh> {
    CartesianMesh::new(n, n, 1.0, 1.0)
}

pub const MMS_MESHES: [usize; 5] = [3, 8, 16, 32, 64];

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ErrorMetrics {
    pub mean: f64,
    pub max: f64,
    pub min: f64,
}

/// Statistics of `|U − U_exact|` over cell centroids.
pub fn compute_errors(mesh: &CartesianMesh, u_cells: &[Vector3], case: &MmsCase, t: f64) -> ErrorMetrics {
    assert_eq!(u_cells.len(), mesh.n_cells(), "one displacement per cell");
    let mut m = ErrorMetrics {
        mean: 0.0,
        max: 0.0,
        min: f64::INFINITY,
    };
    for (cell, u) in mesh.cells.iter().zip(u_cells) {
        let r = (*u - case.dirichlet_data(t, &cell.centroid)).norm();
        m.mean += r;
        m.max = m.max.max(r);
        m.min = m.min.min(r);
    }
    m.mean /= mesh.n_cells() as f64;
    m
}

/// Tip deflection `P L³ / (3 E' I)` with the plane-strain modulus `E' = E/(1 − ν²)`.
pub fn cantilever_analytic(e: f64, nu: f64, length: f64, load: f64, second_moment: f64) -> f64 {
    load * length.powi(3) / (3.0 * (e / (1.0 - nu * nu)) * second_moment)
}

/// The slender cantilever: 2 m by 0.1 m, E = 200 GPa, ν = 0.3, end shear of 1 MPa.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cantilever {
    pub length: f64,
    pub depth: f64,
    pub youngs_modulus: f64,
    pub poisson_ratio: f64,
    pub end_traction: f64,
}

impl Default for Cantilever {
    fn default() -> Self {
        Cantilever {
            length: 2.0,
            depth: 0.1,
            youngs_modulus: 200e9,
            poisson_ratio: 0.3,
            end_traction: 1e6,
        }
    }
}

impl Cantilever {
    pub const MESHES: [(usize, usize); 3] = [(60, 3), (100, 5), (300, 15)];

    pub fn lame(&self) -> LameParameters {
        lame_from_e_nu(self.youngs_modulus, self.poisson_ratio, Regime::PlaneStrain).expect("valid constants")
    }

    pub fn mesh(&self, nx: usize, ny: usize) -> Result<CartesianMesh> {
        CartesianMesh::new(nx, ny, self.length, self.depth)
    }

    pub fn boundary_conditions(&self) -> BoundaryConditions {
        let free = || BoundaryCondition::Traction(BoundaryData::zero());
        BoundaryConditions::new(
            BoundaryCondition::Displacement(BoundaryData::zero()),
            BoundaryCondition::Traction(BoundaryData::Uniform(Vector3::new(0.0, self.end_traction, 0.0))),
            free(),
            free(),
        )
    }

    pub fn analytic_deflection(&self) -> f64 {
        let load = self.end_traction * self.depth;
        cantilever_analytic(self.youngs_modulus, self.poisson_ratio, self.length, load, self.depth.powi(3) / 12.0)
    }
}

/// Mean vertical displacement over the right-hand patch faces.
pub fn end_deflection(mesh: &CartesianMesh, u: &[Vector3]) -> f64 {
    let faces = mesh.patch_bfaces(Patch::Right);
    let n = faces.len() as f64;
    faces.map(|b| u[mesh.bface_dof(b)][1]).sum::<f64>() / n
}
