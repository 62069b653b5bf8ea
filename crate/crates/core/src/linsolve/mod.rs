//! Linear solvers for the assembled block system.

mod direct;
mod krylov;
mod matrix;

pub use direct::{dense_solve, reverse_cuthill_mckee, BandedLu, MAX_BAND_ENTRIES};
pub use krylov::{bicgstab, gmres};
pub use matrix::{block_inverse, write_vector_market, Block, BlockJacobi, BlockSparseMatrix, IDENTITY_BLOCK, ZERO_BLOCK};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinearMethod {
    BiCgStab,
    Gmres { restart: usize },
    Direct,
    /// Direct whenever the band fits in memory, BiCGStab otherwise.
    Auto,
}

impl std::str::FromStr for LinearMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bicgstab" => Ok(LinearMethod::BiCgStab),
            "gmres" => Ok(LinearMethod::Gmres { restart: 50 }),
            "direct" => Ok(LinearMethod::Direct),
            "auto" => Ok(LinearMethod::Auto),
            other => Err(Error::Config(format!("unknown linear solver '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearSolverConfig {
    pub method: LinearMethod,
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for LinearSolverConfig {
    fn default() -> Self {
        LinearSolverConfig {
            method: LinearMethod::Auto,
            tolerance: 1e-12,
            max_iterations: 20_000,
        }
    }
}

impl LinearSolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) {
            return Err(Error::Validation(format!("linear tolerance must be positive, got {}", self.tolerance)));
        }
        if let LinearMethod::Gmres { restart: 0 } = self.method {
            return Err(Error::Validation("gmres restart must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearSolution {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// `‖R − A x‖₂ / ‖R‖₂`
    pub residual: f64,
}

fn relative_residual(a: &BlockSparseMatrix, x: &[f64], b: &[f64]) -> Result<f64> {
    let bn = matrix::norm2(b);
    if bn == 0.0 {
        return Ok(0.0);
    }
    let ax = a.matvec(x)?;
    let r: Vec<f64> = b.iter().zip(&ax).map(|(p, q)| p - q).collect();
    Ok(matrix::norm2(&r) / bn)
}

pub fn solve(a: &BlockSparseMatrix, b: &[f64], cfg: &LinearSolverConfig) -> Result<LinearSolution> {
    cfg.validate()?;
    if b.len() != a.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), got: b.len() });
    }
    if b.iter().all(|&v| v == 0.0) {
        return Ok(LinearSolution {
            x: vec![0.0; b.len()],
            iterations: 0,
            residual: 0.0,
        });
    }
    match cfg.method {
        LinearMethod::BiCgStab => bicgstab(a, b, cfg.tolerance, cfg.max_iterations),
        LinearMethod::Gmres { restart } => gmres(a, b, cfg.tolerance, cfg.max_iterations, restart),
        LinearMethod::Direct => solve_direct(a, b),
        LinearMethod::Auto => match BandedLu::factor(a) {
            Ok(lu) => finish_direct(a, b, &lu),
            Err(Error::BandTooLarge { .. }) => bicgstab(a, b, cfg.tolerance, cfg.max_iterations),
            Err(e) => Err(e),
        },
    }
}

fn solve_direct(a: &BlockSparseMatrix, b: &[f64]) -> Result<LinearSolution> {
    let lu = BandedLu::factor(a)?;
    finish_direct(a, b, &lu)
}

/// Sweeps of iterative refinement after the direct solve.
const REFINEMENT_SWEEPS: usize = 3;

fn finish_direct(a: &BlockSparseMatrix, b: &[f64], lu: &BandedLu) -> Result<LinearSolution> {
    let mut x = lu.solve(b)?;
    let mut residual = relative_residual(a, &x, b)?;
    for _ in 0..REFINEMENT_SWEEPS {
        let ax = a.matvec(&x)?;
        let r: Vec<f64> = b.iter().zip(&ax).map(|(p, q)| p - q).collect();
        let dx = lu.solve(&r)?;
        let trial: Vec<f64> = x.iter().zip(&dx).map(|(p, q)| p + q).collect();
        let next = relative_residual(a, &trial, b)?;
        if !(next < residual) {
            break;
        }
        x = trial;
        residual = next;
    }
    Ok(LinearSolution { x, iterations: 1, residual })
}
