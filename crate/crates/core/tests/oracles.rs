mod common;

use blockfv_core::assembly::{Assembler, BoundaryCondition, BoundaryConditions, BoundaryData, FaceLinearisation};
use blockfv_core::kinematics::{cell_gradient, IncrementalState};
use blockfv_core::material::{deformation_gradient, LinearElastic, Material, NeoHookean};
use blockfv_core::mesh::CartesianMesh;
use blockfv_core::{Tensor2, Tensor4, Vector3};
use common::*;
use proptest::prelude::*;
use rand::Rng;

fn planar_strategy(scale: f64) -> impl Strategy<Value = Tensor2> {
    prop::array::uniform4(-scale..scale).prop_map(|a| Tensor2::from_rows([[a[0], a[1], 0.0], [a[2], a[3], 0.0], [0.0, 0.0, 0.0]]))
}

fn full_strategy() -> impl Strategy<Value = Tensor2> {
    prop::array::uniform9(-1.0..1.0f64).prop_map(|a| Tensor2::from_rows([[a[0], a[1], a[2]], [a[3], a[4], a[5]], [a[6], a[7], a[8]]]))
}

fn t4_strategy() -> impl Strategy<Value = Tensor4> {
    prop::collection::vec(-1.0..1.0f64, 81).prop_map(|v| Tensor4::from_fn(|i, j, k, l| v[27 * i + 9 * j + 3 * k + l]))
}

fn brute_double(t: &Tensor4, a: &Tensor2) -> Tensor2 {
    let mut out = Tensor2::ZERO;
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                for l in 0..3 {
                    out.c[i][j] += t.get(i, j, k, l) * a.c[k][l];
                }
            }
        }
    }
    out
}

proptest! {
    #[test]
    fn double_contract_matches_loops(t in t4_strategy(), a in full_strategy()) {
        prop_assert!((t.double_contract(&a) - brute_double(&t, &a)).max_abs() < 1e-13);
    }

    #[test]
    fn double_contract_is_linear(t in t4_strategy(), a in full_strategy(), b in full_strategy(), s in -3.0..3.0f64) {
        let lhs = t.double_contract(&(a + b * s));
        let rhs = t.double_contract(&a) + t.double_contract(&b) * s;
        prop_assert!((lhs - rhs).max_abs() < 1e-13 * (1.0 + lhs.max_abs()));
    }

    #[test]
    fn contract_third_matches_loops(t in t4_strategy(), f in full_strategy(), a in full_strategy()) {
        let fast = t.contract_third(&f).double_contract(&a);
        let slow = brute_double(&brute_transformed(&f, &t), &a);
        prop_assert!((fast - slow).max_abs() < 1e-13 * (1.0 + slow.max_abs()));
    }

    #[test]
    fn homogeneous_states_balance(g in planar_strategy(0.35), nx in 1usize..7, ny in 1usize..7, lx in 0.2..3.0f64, ly in 0.2..3.0f64) {
        prop_assume!((Tensor2::identity() + g).det() > 0.3);
        let mesh = CartesianMesh::new(nx, ny, lx, ly).unwrap();
        prop_assert!(homogeneous_residual_error(&mesh, &g) < 1e-12);
    }

    #[test]
    fn cells_are_closed(nx in 1usize..12, ny in 1usize..12, lx in 0.01..10.0f64, ly in 0.01..10.0f64) {
        let mesh = CartesianMesh::new(nx, ny, lx, ly).unwrap();
        prop_assert!(face_closure_error(&mesh) < 1e-14);
    }

    #[test]
    fn linear_fields_have_exact_face_gradients(g in planar_strategy(1.0), nx in 1usize..6, ny in 1usize..6) {
        let mesh = CartesianMesh::new(nx, ny, 1.7, 0.9).unwrap();
        let asm = Assembler::new(&mesh, fixed_bcs(), &lame());
        let u = homogeneous_field(&mesh, &g);
        for face in 0..mesh.faces.len() {
            prop_assert!((asm.face_gradient(face, &u) - g).max_abs() < 1e-12);
        }
        for cg in cell_gradient(&mesh, &u) {
            prop_assert!((cg - g).max_abs() < 1e-12);
        }
    }
}

#[test]
fn first_piola_matches_energy_derivative() {
    let l = lame();
    let mat = NeoHookean::new(l);
    let mut r = rng(1);
    for _ in 0..20 {
        let g = random_grad(&mut r, 0.4);
        let p = mat.first_piola(&g).unwrap();
        let fd = fd_first_piola(&l, &g);
        assert!((p - fd).norm() < 1e-6 * p.norm().max(l.mu), "{p:?} vs {fd:?}");
    }
}

#[test]
fn stress_free_reference() {
    let mat = NeoHookean::new(lame());
    assert!(mat.first_piola(&Tensor2::ZERO).unwrap().max_abs() < 1e-9);
    assert!(mat.second_piola(&Tensor2::identity()).unwrap().max_abs() < 1e-9);
}

#[test]
fn elasticity_tensor_matches_stress_derivative() {
    let mat = NeoHookean::new(lame());
    let mut r = rng(2);
    for _ in 0..20 {
        let f = Tensor2::identity() + random_grad(&mut r, 0.4);
        let c = f.transpose().dot(&f);
        let delta = random_planar(&mut r, 1.0).sym();
        let eps = 1e-6;
        let sp = mat.second_piola(&(c + delta * eps)).unwrap();
        let sm = mat.second_piola(&(c - delta * eps)).unwrap();
        let fd = (sp - sm) * (2.0 / (2.0 * eps));
        let an = mat.elasticity_tensor(&c).unwrap().double_contract(&delta);
        assert!((fd - an).norm() < 1e-6 * an.norm(), "{fd:?} vs {an:?}");
    }
}

#[test]
fn elasticity_tensor_symmetries() {
    assert!(minor_symmetry_error(20) < 1e-14);
    let mat = NeoHookean::new(lame());
    let mut r = rng(3);
    let f = Tensor2::identity() + random_grad(&mut r, 0.4);
    let c = mat.elasticity_tensor(&f.transpose().dot(&f)).unwrap();
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                for l in 0..3 {
                    let s = c.max_abs();
                    assert!((c.get(i, j, k, l) - c.get(k, l, i, j)).abs() < 1e-14 * s);
                    assert!((c.get(i, j, k, l) - c.get(j, i, k, l)).abs() < 1e-14 * s);
                }
            }
        }
    }
}

#[test]
fn directional_derivative_matches_finite_differences() {
    assert!(dp_fd_error(20) < 1e-5);
}

#[test]
fn transformed_tensor_chain_rule() {
    let mat = NeoHookean::new(lame());
    let mut r = rng(4);
    for _ in 0..20 {
        let g = random_grad(&mut r, 0.4);
        let f = Tensor2::identity() + g;
        let a = random_planar(&mut r, 1.0);
        let c = mat.elasticity_tensor(&f.transpose().dot(&f)).unwrap();
        let lhs = f.dot(&c.double_contract(&f.transpose().dot(&a)));
        let rhs = mat.transformed_elasticity(&g).unwrap().double_contract(&a);
        assert!((lhs - rhs).max_abs() < 1e-13 * lhs.max_abs().max(1.0));
    }
}

#[test]
fn closed_form_t_tensor() {
    assert!(t_closed_form_error(20) < 1e-12);
}

#[test]
fn linear_elastic_against_hooke_tensor() {
    let l = lame();
    let mat = LinearElastic::new(l);
    let hooke = Tensor4::from_fn(|i, j, k, m| {
        let d = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
        l.lambda * d(i, j) * d(k, m) + l.mu * (d(i, k) * d(j, m) + d(i, m) * d(j, k))
    });
    let mut r = rng(5);
    for _ in 0..10 {
        let g = random_planar(&mut r, 1e-3);
        let p = mat.first_piola(&g).unwrap();
        assert!((p - brute_double(&hooke, &g)).max_abs() < 1e-12 * p.max_abs());
        let n = random_unit(&mut r);
        for d in 0..3 {
            let t = mat.t_tensor(&g, &n, d).unwrap();
            let oracle = brute_t(&Tensor2::identity(), &hooke, &n, d);
            assert!((t - oracle).max_abs() < 1e-12 * l.lambda);
        }
    }
}

#[test]
fn neo_hookean_reduces_to_hooke_at_reference() {
    let l = lame();
    let nh = NeoHookean::new(l);
    let le = LinearElastic::new(l);
    let mut r = rng(6);
    for _ in 0..10 {
        let a = random_planar(&mut r, 1.0);
        let x = nh.dp_apply(&Tensor2::ZERO, &a).unwrap();
        let y = le.dp_apply(&Tensor2::ZERO, &a).unwrap();
        assert!((x - y).max_abs() < 1e-12 * l.lambda);
    }
}

#[test]
fn tiny_strains_keep_relative_accuracy() {
    let l = lame();
    let nh = NeoHookean::new(l);
    let le = LinearElastic::new(l);
    let mut r = rng(10);
    for _ in 0..10 {
        let g = random_planar(&mut r, 1e-9);
        let (p, q) = (nh.first_piola(&g).unwrap(), le.first_piola(&g).unwrap());
        assert!((p - q).norm() < 1e-6 * q.norm(), "{p:?} vs {q:?}");
    }
}

#[test]
fn inverted_gradient_rejected() {
    let g = Tensor2::diag(-1.5, 0.0, 0.0);
    assert!(deformation_gradient(&g).is_err());
    assert!(NeoHookean::new(lame()).first_piola(&g).is_err());
}

#[test]
fn small_strain_face_coefficients() {
    let l = lame();
    let mesh = skewed_mesh();
    let asm = Assembler::new(&mesh, fixed_bcs(), &l);
    for (id, f) in mesh.faces.iter().enumerate() {
        let lin = FaceLinearisation::new(&NeoHookean::new(l), &Tensor2::ZERO, f.normal, f.tangent).unwrap();
        for &(_, w) in asm.stencil(id) {
            let n = f.normal;
            let oracle = Tensor2::identity() * (l.mu * w.dot(&n)) + Tensor2::outer(&w, &n) * l.mu + Tensor2::outer(&n, &w) * l.lambda;
            assert!((lin.coefficient(&w) - oracle).max_abs() < 1e-12 * l.lambda * w.norm());
        }
    }
}

#[test]
fn face_closure_on_unequal_spacing() {
    assert!(face_closure_error(&skewed_mesh()) < 1e-14);
}

fn mixed_bcs() -> BoundaryConditions {
    BoundaryConditions::new(
        BoundaryCondition::Displacement(BoundaryData::Uniform(Vector3::new(0.01, -0.02, 0.0))),
        BoundaryCondition::Traction(BoundaryData::Uniform(Vector3::new(2e5, 1e5, 0.0))),
        BoundaryCondition::Symmetry,
        BoundaryCondition::Traction(BoundaryData::zero()),
    )
}

fn flatten_rows(r: &[Vector3]) -> Vec<f64> {
    r.iter().flat_map(|v| [v[0], v[1]]).collect()
}

fn perturbed_state(mesh: &CartesianMesh, seed: u64, g: &Tensor2, amp: f64) -> IncrementalState {
    let mut r = rng(seed);
    let u: Vec<Vector3> = homogeneous_field(mesh, g)
        .into_iter()
        .map(|u| u + Vector3::new(r.gen_range(-amp..amp), r.gen_range(-amp..amp), 0.0))
        .collect();
    IncrementalState::from_displacement(mesh, u).unwrap()
}

#[test]
fn jacobian_matches_finite_differences() {
    let l = lame();
    let mesh = skewed_mesh();
    let asm = Assembler::new(&mesh, mixed_bcs(), &l);
    let mats: [Box<dyn Material>; 2] = [Box::new(NeoHookean::new(l)), Box::new(LinearElastic::new(l))];
    for mat in &mats {
        let state = perturbed_state(&mesh, 7, &Tensor2::from_rows([[0.2, 0.1, 0.0], [-0.05, -0.1, 0.0], [0.0; 3]]), 0.01);
        let sys = asm.assemble_system(mat.as_ref(), &state, 1.0).unwrap();
        assert_eq!(sys.rhs, flatten_rows(&asm.residual_vector(mat.as_ref(), &state, 1.0).unwrap()).iter().map(|v| -v).collect::<Vec<_>>());
        let mut r = rng(8);
        let v: Vec<f64> = (0..sys.rhs.len()).map(|_| r.gen_range(-1.0..1.0)).collect();
        let jv = sys.matrix.matvec(&v).unwrap();
        let eps = 1e-7;
        let shifted = |s: f64| {
            let mut st = state.clone();
            for (k, u) in st.u.iter_mut().enumerate() {
                *u += Vector3::new(v[2 * k], v[2 * k + 1], 0.0) * s;
            }
            flatten_rows(&asm.residual_vector(mat.as_ref(), &st, 1.0).unwrap())
        };
        let (rp, rm) = (shifted(eps), shifted(-eps));
        let scale = jv.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        for i in 0..jv.len() {
            let fd = (rp[i] - rm[i]) / (2.0 * eps);
            assert!((fd - jv[i]).abs() < 1e-6 * scale, "row {i}: {fd} vs {}", jv[i]);
        }
    }
}

#[test]
fn rigid_translation_is_a_null_vector() {
    let l = lame();
    let mesh = skewed_mesh();
    let free = || BoundaryCondition::Traction(BoundaryData::zero());
    let asm = Assembler::new(&mesh, BoundaryConditions::new(free(), free(), free(), free()), &l);
    let state = perturbed_state(&mesh, 9, &Tensor2::diag(0.1, -0.05, 0.0), 0.005);
    let sys = asm.assemble_system(&NeoHookean::new(l), &state, 1.0).unwrap();
    for dir in [Vector3::unit(0), Vector3::unit(1)] {
        let v: Vec<f64> = (0..mesh.n_dofs()).flat_map(|_| [dir[0], dir[1]]).collect();
        let jv = sys.matrix.matvec(&v).unwrap();
        let scale = (0..mesh.n_dofs()).map(|i| sys.matrix.diagonal(i)[0][0].abs()).fold(0.0, f64::max);
        assert!(jv.iter().all(|x| x.abs() < 1e-10 * scale));
    }
}

#[test]
fn linear_assembly_equals_newton_matrix_at_zero_state() {
    let l = lame();
    let mesh = skewed_mesh();
    let asm = Assembler::new(&mesh, mixed_bcs(), &l);
    let zero = IncrementalState::zero(&mesh);
    let newton = asm.assemble_system(&LinearElastic::new(l), &zero, 1.0).unwrap();
    let linear = asm.assemble_linear(&l, 1.0).unwrap();
    let (a, b) = (newton.matrix.to_dense(), linear.matrix.to_dense());
    let scale = a.iter().flatten().fold(0.0_f64, |m, x| m.max(x.abs()));
    for (ra, rb) in a.iter().zip(&b) {
        for (x, y) in ra.iter().zip(rb) {
            assert!((x - y).abs() < 1e-12 * scale);
        }
    }
    // at U = 0 the Newton right-hand side is the load vector
    let load = linear.rhs.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    for (x, y) in newton.rhs.iter().zip(&linear.rhs) {
        assert!((x - y).abs() < 1e-14 * load);
    }
}

#[test]
fn incremental_composition() {
    assert!(composition_error() < 1e-14);
}
