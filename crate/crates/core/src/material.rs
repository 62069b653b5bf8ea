//! Constitutive models: compressible neo-Hookean and small-strain linear elasticity.
//!
//! Both are written against the displacement gradient `∇U`, with
//! `F = I + ∇U`. The face tensors `T^d` are `T^d_aL = Σ_J ℳ_aJdL N_J`, so the
//! linearised traction for a gradient increment `A` is
//! `(A·S + ℳ:A)·N = A·(S·N) + Σ_d T^d · (row d of A)`.

use std::fmt::Debug;

use crate::error::{Error, Location, Result};
use crate::tensor::{Tensor2, Tensor4, Vector3};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    PlaneStrain,
    PlaneStress,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LameParameters {
    pub mu: f64,
    pub lambda: f64,
    pub youngs_modulus: f64,
    pub poisson_ratio: f64,
    pub regime: Regime,
}

impl LameParameters {
    /// Stiffness of a normal-normal stretch, `2μ + λ`.
    pub fn p_wave_modulus(&self) -> f64 {
        2.0 * self.mu + self.lambda
    }
}

pub fn lame_from_e_nu(e: f64, nu: f64, regime: Regime) -> Result<LameParameters> {
    if !(e > 0.0 && e.is_finite()) {
        return Err(Error::Validation(format!("Young's modulus must be positive, got {e}")));
    }
    if nu >= 0.5 {
        return Err(Error::IncompressibleLimit { nu });
    }
    if !(nu > -1.0) {
        return Err(Error::Validation(format!("Poisson ratio must exceed -1, got {nu}")));
    }
    let mu = e / (2.0 * (1.0 + nu));
    let lambda = match regime {
        Regime::PlaneStrain => nu * e / ((1.0 + nu) * (1.0 - 2.0 * nu)),
        Regime::PlaneStress => nu * e / ((1.0 + nu) * (1.0 - nu)),
    };
    Ok(LameParameters {
        mu,
        lambda,
        youngs_modulus: e,
        poisson_ratio: nu,
        regime,
    })
}

fn inverted(det: f64) -> Error {
    Error::InvertedElement {
        location: Location::Unknown,
        det,
    }
}

/// `F = I + ∇U`, rejecting non-positive Jacobians.
pub fn deformation_gradient(grad_u: &Tensor2) -> Result<(Tensor2, f64)> {
    let f = Tensor2::identity() + *grad_u;
    let j = f.det();
    if !(j > 0.0) || !j.is_finite() {
        return Err(inverted(j));
    }
    Ok((f, j))
}

/// `𝒥_IJKL = ½ (A_IK A_JL + A_IL A_JK)`.
pub fn j_tensor(a: &Tensor2) -> Tensor4 {
    Tensor4::from_fn(|i, j, k, l| 0.5 * (a.c[i][k] * a.c[j][l] + a.c[i][l] * a.c[j][k]))
}

/// `ℳ_aJdL = F_aI 𝒞_IJKL F_dK`.
pub fn transformed_elasticity(f: &Tensor2, elas: &Tensor4) -> Tensor4 {
    elas.contract_third(f)
}

/// `T^d_aL = Σ_J ℳ_aJdL N_J`.
pub fn t_from_transformed(m: &Tensor4, n: &Vector3, d: usize) -> Tensor2 {
    let mut t = Tensor2::ZERO;
    for a in 0..3 {
        for l in 0..3 {
            t.c[a][l] = (0..3).map(|j| m.get(a, j, d, l) * n[j]).sum();
        }
    }
    t
}

pub trait Material: Debug + Send + Sync {
    fn lame(&self) -> LameParameters;

    /// First Piola-Kirchhoff stress at displacement gradient `∇U`.
    fn first_piola(&self, grad_u: &Tensor2) -> Result<Tensor2>;

    /// The stress `S` multiplying the gradient increment in `A·S`.
    fn geometric_stress(&self, grad_u: &Tensor2) -> Result<Tensor2>;

    fn transformed_elasticity(&self, grad_u: &Tensor2) -> Result<Tensor4>;

    fn t_tensor(&self, grad_u: &Tensor2, n: &Vector3, d: usize) -> Result<Tensor2>;

    /// True when the stress is linear in `∇U`.
    fn is_linear(&self) -> bool;

    /// Directional derivative `∂P/∂∇U : A = A·S + ℳ:A`.
    fn dp_apply(&self, grad_u: &Tensor2, a: &Tensor2) -> Result<Tensor2> {
        let s = self.geometric_stress(grad_u)?;
        let m = self.transformed_elasticity(grad_u)?;
        Ok(a.dot(&s) + m.double_contract(a))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeoHookean {
    pub lame: LameParameters,
}

impl NeoHookean {
    pub fn new(lame: LameParameters) -> Self {
        NeoHookean { lame }
    }

    fn invert_c(c: &Tensor2) -> Result<(Tensor2, f64)> {
        let det = c.det();
        if !(det > 0.0) || !det.is_finite() {
            return Err(inverted(det));
        }
        Ok((c.inverse()?, 0.5 * det.ln()))
    }

    /// `S = μ(I − C⁻¹) + λ ln J C⁻¹`.
    pub fn second_piola(&self, c: &Tensor2) -> Result<Tensor2> {
        let (ci, ln_j) = Self::invert_c(c)?;
        let LameParameters { mu, lambda, .. } = self.lame;
        Ok((Tensor2::identity() - ci) * mu + ci * (lambda * ln_j))
    }

    /// `S` evaluated from `∇U` without forming `I − C⁻¹` by subtraction, so
    /// small strains keep their relative accuracy.
    fn second_piola_from_gradient(&self, grad_u: &Tensor2) -> Result<Tensor2> {
        let g = *grad_u;
        let strain = g + g.transpose() + g.transpose().dot(&g);
        let ci = (Tensor2::identity() + strain).inverse()?;
        let tr = g.trace();
        let j_minus_one = tr + 0.5 * (tr * tr - g.dot(&g).trace()) + g.det();
        if !(j_minus_one > -1.0) || !j_minus_one.is_finite() {
            return Err(inverted(1.0 + j_minus_one));
        }
        let LameParameters { mu, lambda, .. } = self.lame;
        Ok(ci.dot(&strain) * mu + ci * (lambda * j_minus_one.ln_1p()))
    }

    /// `𝒞 = λ C⁻¹⊗C⁻¹ + 2(μ − λ ln J) 𝒥(C⁻¹)`.
    pub fn elasticity_tensor(&self, c: &Tensor2) -> Result<Tensor4> {
        let (ci, ln_j) = Self::invert_c(c)?;
        let LameParameters { mu, lambda, .. } = self.lame;
        let two_g = 2.0 * (mu - lambda * ln_j);
        Ok(Tensor4::from_fn(|i, j, k, l| {
            lambda * ci.c[i][j] * ci.c[k][l] + 0.5 * two_g * (ci.c[i][k] * ci.c[j][l] + ci.c[i][l] * ci.c[j][k])
        }))
    }
}

impl Material for NeoHookean {
    fn lame(&self) -> LameParameters {
        self.lame
    }

    fn first_piola(&self, grad_u: &Tensor2) -> Result<Tensor2> {
        let (f, _) = deformation_gradient(grad_u)?;
        Ok(f.dot(&self.second_piola_from_gradient(grad_u)?))
    }

    fn geometric_stress(&self, grad_u: &Tensor2) -> Result<Tensor2> {
        deformation_gradient(grad_u)?;
        self.second_piola_from_gradient(grad_u)
    }

    fn transformed_elasticity(&self, grad_u: &Tensor2) -> Result<Tensor4> {
        let (f, _) = deformation_gradient(grad_u)?;
        let elas = self.elasticity_tensor(&f.transpose().dot(&f))?;
        Ok(transformed_elasticity(&f, &elas))
    }

    /// Closed form `λ(A·N)⊗(C⁻¹f^d) + (μ − λ ln J)[(A·f^d)⊗b + (b·f^d) A]`
    /// with `A = F·C⁻¹`, `b = C⁻¹·N` and `f^d` the d-th row of `F`.
    fn t_tensor(&self, grad_u: &Tensor2, n: &Vector3, d: usize) -> Result<Tensor2> {
        let (f, j) = deformation_gradient(grad_u)?;
        let ci = f.transpose().dot(&f).inverse()?;
        let LameParameters { mu, lambda, .. } = self.lame;
        let a = f.dot(&ci);
        let b = ci.dot_vec(n);
        let fd = f.row(d);
        let g = mu - lambda * j.ln();
        Ok(Tensor2::outer(&a.dot_vec(n), &ci.dot_vec(&fd)) * lambda
            + (Tensor2::outer(&a.dot_vec(&fd), &b) + a * b.dot(&fd)) * g)
    }

    fn is_linear(&self) -> bool {
        false
    }
}

/// `P = σ = 2μ sym(∇U) + λ tr(∇U) I` with all geometric terms frozen at `F = I`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearElastic {
    pub lame: LameParameters,
}

impl LinearElastic {
    pub fn new(lame: LameParameters) -> Self {
        LinearElastic { lame }
    }

    pub fn stiffness(&self) -> Tensor4 {
        let LameParameters { mu, lambda, .. } = self.lame;
        let d = |a: usize, b: usize| (a == b) as u8 as f64;
        Tensor4::from_fn(|i, j, k, l| lambda * d(i, j) * d(k, l) + mu * (d(i, k) * d(j, l) + d(i, l) * d(j, k)))
    }
}

impl Material for LinearElastic {
    fn lame(&self) -> LameParameters {
        self.lame
    }

    fn first_piola(&self, grad_u: &Tensor2) -> Result<Tensor2> {
        let LameParameters { mu, lambda, .. } = self.lame;
        Ok(grad_u.sym() * (2.0 * mu) + Tensor2::identity() * (lambda * grad_u.trace()))
    }

    fn geometric_stress(&self, _grad_u: &Tensor2) -> Result<Tensor2> {
        Ok(Tensor2::ZERO)
    }

    fn transformed_elasticity(&self, _grad_u: &Tensor2) -> Result<Tensor4> {
        Ok(self.stiffness())
    }

    /// `λ N⊗e_d + μ(e_d⊗N + N_d I)`.
    fn t_tensor(&self, _grad_u: &Tensor2, n: &Vector3, d: usize) -> Result<Tensor2> {
        let LameParameters { mu, lambda, .. } = self.lame;
        let ed = Vector3::unit(d);
        Ok(Tensor2::outer(n, &ed) * lambda + (Tensor2::outer(&ed, n) + Tensor2::identity() * n[d]) * mu)
    }

    fn is_linear(&self) -> bool {
        true
    }

    fn dp_apply(&self, _grad_u: &Tensor2, a: &Tensor2) -> Result<Tensor2> {
        self.first_piola(a)
    }
}
