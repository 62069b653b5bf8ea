//! Independent oracles shared by the property tests and the acceptance run.

#![allow(dead_code)]

use std::sync::Arc;

use blockfv_core::assembly::{Assembler, BoundaryCondition, BoundaryConditions, BoundaryData};
use blockfv_core::kinematics::{advance_state, IncrementalState};
use blockfv_core::linsolve::{self, LinearMethod, LinearSolverConfig};
use blockfv_core::material::{lame_from_e_nu, LameParameters, Material, NeoHookean, Regime};
use blockfv_core::mesh::CartesianMesh;
use blockfv_core::verification::{mms_lame, mms_mesh, BcKind, MmsCase, MmsMap};
use blockfv_core::{Tensor2, Tensor4, Vector3};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

pub fn lame() -> LameParameters {
    lame_from_e_nu(0.02e9, 0.3, Regime::PlaneStrain).unwrap()
}

/// In-plane tensor with entries in `[-scale, scale]`.
pub fn random_planar(r: &mut StdRng, scale: f64) -> Tensor2 {
    let mut t = Tensor2::ZERO;
    for i in 0..2 {
        for j in 0..2 {
            t.c[i][j] = r.gen_range(-scale..scale);
        }
    }
    t
}

/// Displacement gradient with `det F` comfortably positive.
pub fn random_grad(r: &mut StdRng, scale: f64) -> Tensor2 {
    loop {
        let g = random_planar(r, scale);
        if (Tensor2::identity() + g).det() > 0.3 {
            return g;
        }
    }
}

pub fn random_unit(r: &mut StdRng) -> Vector3 {
    let a: f64 = r.gen_range(0.0..std::f64::consts::TAU);
    Vector3::new(a.cos(), a.sin(), 0.0)
}

fn rel(err: f64, scale: f64) -> f64 {
    if scale == 0.0 {
        err
    } else {
        err / scale
    }
}

/// Strain energy `μ/2 (tr C − 3) − μ ln J + λ/2 (ln J)²`.
pub fn nh_energy(l: &LameParameters, f: &Tensor2) -> f64 {
    let c = f.transpose().dot(f);
    let lnj = f.det().ln();
    0.5 * l.mu * (c.trace() - 3.0) - l.mu * lnj + 0.5 * l.lambda * lnj * lnj
}

/// `P = ∂W/∂F` by central differences of the energy.
pub fn fd_first_piola(l: &LameParameters, grad_u: &Tensor2) -> Tensor2 {
    let f = Tensor2::identity() + *grad_u;
    let h = 1e-6;
    let mut p = Tensor2::ZERO;
    for i in 0..3 {
        for j in 0..3 {
            let (mut a, mut b) = (f, f);
            a.c[i][j] += h;
            b.c[i][j] -= h;
            p.c[i][j] = (nh_energy(l, &a) - nh_energy(l, &b)) / (2.0 * h);
        }
    }
    p
}

/// `Σ_IK F_aI C_IJKL F_dK` by plain loops.
pub fn brute_transformed(f: &Tensor2, c: &Tensor4) -> Tensor4 {
    Tensor4::from_fn(|a, j, d, l| {
        let mut s = 0.0;
        for i in 0..3 {
            for k in 0..3 {
                s += f.c[a][i] * c.get(i, j, k, l) * f.c[d][k];
            }
        }
        s
    })
}

/// `T^d_aL = Σ_J ℳ_aJdL N_J` with ℳ built by loops.
pub fn brute_t(f: &Tensor2, c: &Tensor4, n: &Vector3, d: usize) -> Tensor2 {
    let m = brute_transformed(f, c);
    let mut t = Tensor2::ZERO;
    for a in 0..3 {
        for l in 0..3 {
            for j in 0..3 {
                t.c[a][l] += m.get(a, j, d, l) * n[j];
            }
        }
    }
    t
}

/// (a) worst relative error of `dP:A` against central differences of `P`.
pub fn dp_fd_error(n_states: usize) -> f64 {
    let mat = NeoHookean::new(lame());
    let mut r = rng(11);
    let mut worst: f64 = 0.0;
    for _ in 0..n_states {
        let g = random_grad(&mut r, 0.4);
        let a = random_planar(&mut r, 1.0);
        let eps = 1e-6;
        let plus = mat.first_piola(&(g + a * eps)).unwrap();
        let minus = mat.first_piola(&(g - a * eps)).unwrap();
        let fd = (plus - minus) * (0.5 / eps);
        let an = mat.dp_apply(&g, &a).unwrap();
        worst = worst.max(rel((fd - an).norm(), an.norm()));
    }
    worst
}

/// (b) largest violation of `𝒞_IJKL = 𝒞_IJLK`, relative to the largest entry.
pub fn minor_symmetry_error(n_states: usize) -> f64 {
    let mat = NeoHookean::new(lame());
    let mut r = rng(12);
    let mut worst: f64 = 0.0;
    for _ in 0..n_states {
        let f = Tensor2::identity() + random_grad(&mut r, 0.4);
        let c = mat.elasticity_tensor(&f.transpose().dot(&f)).unwrap();
        let scale = c.max_abs();
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    for l in 0..3 {
                        worst = worst.max((c.get(i, j, k, l) - c.get(i, j, l, k)).abs() / scale);
                    }
                }
            }
        }
    }
    worst
}

/// (c) closed-form `T^d` against the loop contraction.
pub fn t_closed_form_error(n_states: usize) -> f64 {
    let mat = NeoHookean::new(lame());
    let mut r = rng(13);
    let mut worst: f64 = 0.0;
    for _ in 0..n_states {
        let g = random_grad(&mut r, 0.4);
        let f = Tensor2::identity() + g;
        let c = mat.elasticity_tensor(&f.transpose().dot(&f)).unwrap();
        let n = random_unit(&mut r);
        for d in 0..3 {
            let oracle = brute_t(&f, &c, &n, d);
            let got = mat.t_tensor(&g, &n, d).unwrap();
            worst = worst.max(rel((got - oracle).norm(), oracle.norm().max(c.max_abs())));
        }
    }
    worst
}

/// (d) worst `|Σ_f ±S_f|` over all cells, relative to the face area.
pub fn face_closure_error(mesh: &CartesianMesh) -> f64 {
    let mut worst: f64 = 0.0;
    for cell in &mesh.cells {
        let mut s = Vector3::ZERO;
        let mut area: f64 = 0.0;
        for &(f, sign) in &cell.faces {
            s += mesh.faces[f].area_vector() * sign;
            area = area.max(mesh.faces[f].area);
        }
        worst = worst.max(s.norm() / area);
    }
    worst
}

/// `(F − I)·X` on every dof.
pub fn homogeneous_field(mesh: &CartesianMesh, g: &Tensor2) -> Vec<Vector3> {
    (0..mesh.n_dofs()).map(|k| g.dot_vec(&mesh.dof_position(k))).collect()
}

pub fn fixed_bcs() -> BoundaryConditions {
    let d = || BoundaryCondition::Displacement(BoundaryData::zero());
    BoundaryConditions::new(d(), d(), d(), d())
}

/// (e) worst cell-row residual of a homogeneous state, relative to `|S| |P·N|`.
pub fn homogeneous_residual_error(mesh: &CartesianMesh, g: &Tensor2) -> f64 {
    let mat = NeoHookean::new(lame());
    let asm = Assembler::new(mesh, fixed_bcs(), &lame());
    let state = IncrementalState::from_displacement(mesh, homogeneous_field(mesh, g)).unwrap();
    let r = asm.residual_vector(&mat, &state, 1.0).unwrap();
    let p = mat.first_piola(g).unwrap();
    let scale = mesh.faces.iter().map(|f| p.dot_vec(&f.normal).norm() * f.area).fold(0.0, f64::max);
    (0..mesh.n_cells()).map(|c| r[c].norm()).fold(0.0, f64::max) / scale
}

fn relative_gap(x: &[f64], y: &[f64]) -> f64 {
    let d: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    let s: f64 = y.iter().map(|b| b * b).sum::<f64>().sqrt();
    rel(d, s)
}

/// Newton systems of two nonlinear cases, one at a deformed state.
pub fn sample_systems() -> Vec<(String, blockfv_core::assembly::BlockSystem)> {
    let mat: Arc<dyn Material> = Arc::new(NeoHookean::new(mms_lame()));
    let mut out = Vec::new();
    let cases = [
        ("tension traction 16x16", MmsMap::Uniaxial { stretch: 2.0 }, BcKind::Traction, 16, 0.0),
        ("shear displacement 8x8", MmsMap::Shear { omega: 0.45 }, BcKind::Displacement, 8, 0.5),
    ];
    for (name, map, bc, n, t_state) in cases {
        let case = MmsCase::new(map, bc).unwrap();
        let mesh = mms_mesh(n).unwrap();
        let asm = Assembler::new(&mesh, case.boundary_conditions(mat.clone()), &mms_lame());
        let mut state = IncrementalState::zero(&mesh);
        if t_state > 0.0 {
            let g = case.deformation_gradient(t_state) - Tensor2::identity();
            let mut r = rng(14);
            let du: Vec<Vector3> = homogeneous_field(&mesh, &g)
                .into_iter()
                .map(|u| u + Vector3::new(r.gen_range(-1e-3..1e-3), r.gen_range(-1e-3..1e-3), 0.0))
                .collect();
            advance_state(&mesh, &mut state, &du).unwrap();
        }
        out.push((name.to_string(), asm.assemble_system(mat.as_ref(), &state, 1.0).unwrap()));
    }
    out
}

/// (f) worst relative difference between direct, BiCGStab and GMRES solutions.
pub fn solver_agreement_error() -> f64 {
    let mut worst: f64 = 0.0;
    for (_, sys) in sample_systems() {
        let solve = |method| {
            let cfg = LinearSolverConfig {
                method,
                ..Default::default()
            };
            linsolve::solve(&sys.matrix, &sys.rhs, &cfg).unwrap().x
        };
        let direct = solve(LinearMethod::Direct);
        let dense = linsolve::dense_solve(sys.matrix.to_dense(), sys.rhs.clone()).unwrap();
        for x in [solve(LinearMethod::BiCgStab), solve(LinearMethod::Gmres { restart: 50 }), dense] {
            worst = worst.max(relative_gap(&x, &direct));
        }
    }
    worst
}

/// (g) composing two homogeneous steps against one step to the final map.
pub fn composition_error() -> f64 {
    let mesh = mms_mesh(4).unwrap();
    let mut r = rng(15);
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let g1 = random_grad(&mut r, 0.3);
        let g2 = random_grad(&mut r, 0.3);
        let mut two = IncrementalState::zero(&mesh);
        advance_state(&mesh, &mut two, &homogeneous_field(&mesh, &g1)).unwrap();
        advance_state(&mesh, &mut two, &homogeneous_field(&mesh, &(g2 - g1))).unwrap();
        let mut one = IncrementalState::zero(&mesh);
        advance_state(&mesh, &mut one, &homogeneous_field(&mesh, &g2)).unwrap();
        for (a, b) in two.grad_u.iter().zip(&one.grad_u) {
            worst = worst.max((*a - *b).max_abs());
        }
        // ΔF·F° = F for the maps themselves
        let f1 = Tensor2::identity() + g1;
        let f2 = Tensor2::identity() + g2;
        let df = Tensor2::identity() + (f2 - f1).dot(&f1.inverse().unwrap());
        worst = worst.max((df.dot(&f1) - f2).max_abs());
    }
    worst
}

/// Mesh with unequal spacing, used where square cells could hide errors.
pub fn skewed_mesh() -> CartesianMesh {
    CartesianMesh::new(5, 3, 1.3, 0.7).unwrap()
}
