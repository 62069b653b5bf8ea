//! Outer drivers: Newton for the nonlinear block-coupled method, a single
//! small-strain solve for the linear block-coupled method, and relaxed
//! fixed-point iteration for the segregated method.

use std::time::{Duration, Instant};

use crate::assembly::{Assembler, BlockSystem, BoundaryConditions, ResidualSummary, SegregatedCoefficient};
use crate::error::{Error, Result};
use crate::kinematics::{advance_state, IncrementalState};
use crate::linsolve::{self, BandedLu, BlockSparseMatrix, LinearMethod, LinearSolverConfig};
use crate::material::{LinearElastic, Material};
use crate::mesh::CartesianMesh;
use crate::tensor::Vector3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Nlbc,
    Bc,
    Seg,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Nlbc => "nlbc",
            Method::Bc => "bc",
            Method::Seg => "seg",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "nlbc" => Ok(Method::Nlbc),
            "bc" => Ok(Method::Bc),
            "seg" => Ok(Method::Seg),
            other => Err(Error::Config(format!("unknown method '{other}' (expected nlbc, bc or seg)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveConfig {
    pub method: Method,
    pub outer_tolerance: f64,
    pub max_corrections: usize,
    pub n_load_steps: usize,
    pub linear: LinearSolverConfig,
    /// Fraction of each segregated update that is applied.
    pub relaxation: f64,
    pub seg_coefficient: SegregatedCoefficient,
    /// Consecutive residual increases treated as divergence.
    pub divergence_window: usize,
    /// Keep a copy of the first assembled system in the report.
    pub capture_first_system: bool,
}

impl SolveConfig {
    pub fn new(method: Method) -> Self {
        let linear = match method {
            Method::Seg => LinearSolverConfig {
                method: LinearMethod::BiCgStab,
                tolerance: 1e-10,
                max_iterations: 20_000,
            },
            _ => LinearSolverConfig::default(),
        };
        SolveConfig {
            method,
            outer_tolerance: 1e-7,
            max_corrections: 200,
            n_load_steps: 1,
            linear,
            relaxation: 1.0,
            seg_coefficient: SegregatedCoefficient::Tangent,
            divergence_window: 5,
            capture_first_system: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.outer_tolerance > 0.0) {
            return Err(Error::Validation(format!("outer tolerance must be positive, got {}", self.outer_tolerance)));
        }
        if self.n_load_steps == 0 {
            return Err(Error::Validation("at least one load step is required".into()));
        }
        if self.max_corrections == 0 {
            return Err(Error::Validation("max_corrections must be at least 1".into()));
        }
        if !(self.relaxation > 0.0 && self.relaxation <= 1.0) {
            return Err(Error::Validation(format!("relaxation must lie in (0, 1], got {}", self.relaxation)));
        }
        self.linear.validate()
    }
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig::new(Method::Nlbc)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RunStatus {
    Converged,
    /// Correction budget exhausted with a finite, non-growing residual.
    MaxCorrections,
    Diverged(String),
}

impl RunStatus {
    pub fn label(&self) -> &'static str {
        match self {
            RunStatus::Converged => "converged",
            RunStatus::MaxCorrections => "max_corrections",
            RunStatus::Diverged(_) => "diverged",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrectionRecord {
    pub load_step: usize,
    pub correction: usize,
    pub residual: f64,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub method: Method,
    pub status: RunStatus,
    /// Corrections per load step, including a partial final step.
    pub n_corr: Vec<usize>,
    pub history: Vec<CorrectionRecord>,
    /// Total displacement per dof: cells first, then boundary faces.
    pub u: Vec<Vector3>,
    pub n_cells: usize,
    pub wall_time: Duration,
    pub final_residual: f64,
    pub first_system: Option<(BlockSparseMatrix, Vec<f64>)>,
}

impl RunReport {
    pub fn converged(&self) -> bool {
        self.status == RunStatus::Converged
    }

    pub fn diverged(&self) -> bool {
        matches!(self.status, RunStatus::Diverged(_))
    }

    pub fn u_cells(&self) -> &[Vector3] {
        &self.u[..self.n_cells]
    }

    pub fn u_bfaces(&self) -> &[Vector3] {
        &self.u[self.n_cells..]
    }

    pub fn total_corrections(&self) -> usize {
        self.n_corr.iter().sum()
    }

    pub fn max_corrections_per_step(&self) -> usize {
        self.n_corr.iter().copied().max().unwrap_or(0)
    }
}

/// Residual relative to `max(first, internal force)`; zero when both vanish.
pub fn residual_norm(current: &ResidualSummary, first: f64) -> f64 {
    let scale = first.max(current.internal_force);
    if scale > 0.0 {
        current.norm / scale
    } else {
        current.norm
    }
}

fn unflatten(x: &[f64]) -> Vec<Vector3> {
    x.chunks_exact(2).map(|c| Vector3::new(c[0], c[1], 0.0)).collect()
}

struct Progress {
    report: RunReport,
    start: Instant,
}

impl Progress {
    fn new(method: Method, mesh: &CartesianMesh) -> Self {
        Progress {
            report: RunReport {
                method,
                status: RunStatus::Converged,
                n_corr: Vec::new(),
                history: Vec::new(),
                u: vec![Vector3::ZERO; mesh.n_dofs()],
                n_cells: mesh.n_cells(),
                wall_time: Duration::ZERO,
                final_residual: 0.0,
                first_system: None,
            },
            start: Instant::now(),
        }
    }

    fn capture(&mut self, cfg: &SolveConfig, sys: &BlockSystem) {
        if cfg.capture_first_system && self.report.first_system.is_none() {
            self.report.first_system = Some((sys.matrix.clone(), sys.rhs.clone()));
        }
    }

    fn finish(mut self, status: RunStatus, state: &IncrementalState) -> RunReport {
        self.report.status = status;
        self.report.u = state.u.clone();
        self.report.wall_time = self.start.elapsed();
        self.report
    }
}

/// Tracks consecutive residual growth within a load step.
struct Watch {
    prev: f64,
    rises: usize,
    window: usize,
}

impl Watch {
    fn new(window: usize) -> Self {
        Watch {
            prev: f64::INFINITY,
            rises: 0,
            window,
        }
    }

    fn grew_too_often(&mut self, res: f64) -> bool {
        if res > self.prev {
            self.rises += 1;
        } else {
            self.rises = 0;
        }
        self.prev = res;
        self.rises >= self.window
    }
}

enum Step {
    Converged,
    Stop(RunStatus),
}

fn record(progress: &mut Progress, step: usize, corr: usize, res: f64) {
    progress.report.history.push(CorrectionRecord {
        load_step: step,
        correction: corr,
        residual: res,
    });
    progress.report.final_residual = res;
    if let Some(last) = progress.report.n_corr.last_mut() {
        *last = corr;
    }
}

/// Newton iteration on the nonlinear block-coupled system.
pub fn run_nlbc(mesh: &CartesianMesh, mat: &dyn Material, bcs: &BoundaryConditions, cfg: &SolveConfig) -> Result<RunReport> {
    cfg.validate()?;
    let asm = Assembler::new(mesh, bcs.clone(), &mat.lame());
    let mut state = IncrementalState::zero(mesh);
    let mut progress = Progress::new(Method::Nlbc, mesh);

    for step in 1..=cfg.n_load_steps {
        let t = step as f64 / cfg.n_load_steps as f64;
        progress.report.n_corr.push(0);
        let outcome = newton_step(&asm, mat, &mut state, t, step, cfg, &mut progress);
        match outcome {
            Step::Converged => {}
            Step::Stop(status) => return Ok(progress.finish(status, &state)),
        }
    }
    Ok(progress.finish(RunStatus::Converged, &state))
}

fn newton_step(
    asm: &Assembler,
    mat: &dyn Material,
    state: &mut IncrementalState,
    t: f64,
    step: usize,
    cfg: &SolveConfig,
    progress: &mut Progress,
) -> Step {
    let mut sys = match asm.assemble_system(mat, state, t) {
        Ok(s) => s,
        Err(e) => return Step::Stop(RunStatus::Diverged(e.to_string())),
    };
    let first = sys.residual.norm;
    if residual_norm(&sys.residual, first) < cfg.outer_tolerance || first == 0.0 {
        return Step::Converged;
    }
    let mut watch = Watch::new(cfg.divergence_window);
    for corr in 1..=cfg.max_corrections {
        progress.capture(cfg, &sys);
        let sol = match linsolve::solve(&sys.matrix, &sys.rhs, &cfg.linear) {
            Ok(s) => s,
            Err(e) => return Step::Stop(RunStatus::Diverged(e.to_string())),
        };
        if let Err(e) = advance_state(asm.mesh, state, &unflatten(&sol.x)) {
            record(progress, step, corr, f64::NAN);
            return Step::Stop(RunStatus::Diverged(e.to_string()));
        }
        sys = match asm.assemble_system(mat, state, t) {
            Ok(s) => s,
            Err(e) => {
                record(progress, step, corr, f64::NAN);
                return Step::Stop(RunStatus::Diverged(e.to_string()));
            }
        };
        let res = residual_norm(&sys.residual, first);
        record(progress, step, corr, res);
        if !res.is_finite() {
            return Step::Stop(RunStatus::Diverged("non-finite residual".into()));
        }
        if res < cfg.outer_tolerance {
            return Step::Converged;
        }
        if watch.grew_too_often(res) {
            return Step::Stop(RunStatus::Diverged(format!(
                "residual grew over {} consecutive corrections",
                cfg.divergence_window
            )));
        }
    }
    Step::Stop(RunStatus::MaxCorrections)
}

/// Linear block-coupled method: one small-strain solve per load step in total
/// displacements, checked against the linear-elastic residual.
pub fn run_bc(mesh: &CartesianMesh, mat: &LinearElastic, bcs: &BoundaryConditions, cfg: &SolveConfig) -> Result<RunReport> {
    cfg.validate()?;
    let lame = mat.lame();
    let asm = Assembler::new(mesh, bcs.clone(), &lame);
    let mut state = IncrementalState::zero(mesh);
    let mut progress = Progress::new(Method::Bc, mesh);
    for step in 1..=cfg.n_load_steps {
        let t = step as f64 / cfg.n_load_steps as f64;
        progress.report.n_corr.push(0);
        let first = asm.residual(mat, &state, t)?.norm;
        let sys = asm.assemble_linear(&lame, t)?;
        progress.capture(cfg, &sys);
        let sol = match linsolve::solve(&sys.matrix, &sys.rhs, &cfg.linear) {
            Ok(s) => s,
            Err(e) => return Ok(progress.finish(RunStatus::Diverged(e.to_string()), &state)),
        };
        state = IncrementalState::from_displacement(mesh, unflatten(&sol.x))?;
        let res = residual_norm(&asm.residual(mat, &state, t)?, first);
        record(&mut progress, step, 1, res);
        if !(res < cfg.outer_tolerance) {
            let status = if res.is_finite() {
                RunStatus::MaxCorrections
            } else {
                RunStatus::Diverged("non-finite residual".into())
            };
            return Ok(progress.finish(status, &state));
        }
    }
    Ok(progress.finish(RunStatus::Converged, &state))
}

/// Segregated method: `K δ = −r(U)` with the component-decoupled operator
/// of [`Assembler::assemble_segregated`], then `U += ω δ`.
pub fn run_seg(mesh: &CartesianMesh, mat: &dyn Material, bcs: &BoundaryConditions, cfg: &SolveConfig) -> Result<RunReport> {
    cfg.validate()?;
    let asm = Assembler::new(mesh, bcs.clone(), &mat.lame());
    let mut state = IncrementalState::zero(mesh);
    let mut progress = Progress::new(Method::Seg, mesh);
    // With a fixed coefficient the operator never changes, so factor it once.
    let frozen = cfg.seg_coefficient == SegregatedCoefficient::Reference || mat.is_linear();
    let mut lu: Option<BandedLu> = None;

    for step in 1..=cfg.n_load_steps {
        let t = step as f64 / cfg.n_load_steps as f64;
        progress.report.n_corr.push(0);
        let mut sys = match asm.assemble_segregated(mat, &state, t, cfg.seg_coefficient) {
            Ok(s) => s,
            Err(e) => return Ok(progress.finish(RunStatus::Diverged(e.to_string()), &state)),
        };
        let first = sys.residual.norm;
        if first == 0.0 || residual_norm(&sys.residual, first) < cfg.outer_tolerance {
            continue;
        }
        let mut watch = Watch::new(cfg.divergence_window);
        let mut done = false;
        for corr in 1..=cfg.max_corrections {
            progress.capture(cfg, &sys);
            let delta = if frozen {
                if lu.is_none() {
                    lu = BandedLu::factor(&sys.matrix).ok();
                }
                match &lu {
                    Some(f) => f.solve(&sys.rhs),
                    None => linsolve::solve(&sys.matrix, &sys.rhs, &cfg.linear).map(|s| s.x),
                }
            } else {
                linsolve::solve(&sys.matrix, &sys.rhs, &cfg.linear).map(|s| s.x)
            };
            let delta = match delta {
                Ok(d) => d,
                Err(e) => return Ok(progress.finish(RunStatus::Diverged(e.to_string()), &state)),
            };
            let mut du = unflatten(&delta);
            for v in du.iter_mut() {
                *v = *v * cfg.relaxation;
            }
            if let Err(e) = advance_state(mesh, &mut state, &du) {
                record(&mut progress, step, corr, f64::NAN);
                return Ok(progress.finish(RunStatus::Diverged(e.to_string()), &state));
            }
            sys = match asm.assemble_segregated(mat, &state, t, cfg.seg_coefficient) {
                Ok(s) => s,
                Err(e) => {
                    record(&mut progress, step, corr, f64::NAN);
                    return Ok(progress.finish(RunStatus::Diverged(e.to_string()), &state));
                }
            };
            let res = residual_norm(&sys.residual, first);
            record(&mut progress, step, corr, res);
            if !res.is_finite() {
                return Ok(progress.finish(RunStatus::Diverged("non-finite residual".into()), &state));
            }
            if res < cfg.outer_tolerance {
                done = true;
                break;
            }
            if watch.grew_too_often(res) {
                let msg = format!("residual grew over {} consecutive corrections", cfg.divergence_window);
                return Ok(progress.finish(RunStatus::Diverged(msg), &state));
            }
        }
        if !done {
            return Ok(progress.finish(RunStatus::MaxCorrections, &state));
        }
    }
    Ok(progress.finish(RunStatus::Converged, &state))
}

/// Dispatches on `cfg.method`. `Bc` uses the small-strain constants of `mat`.
pub fn run(mesh: &CartesianMesh, mat: &dyn Material, bcs: &BoundaryConditions, cfg: &SolveConfig) -> Result<RunReport> {
    match cfg.method {
        Method::Nlbc => run_nlbc(mesh, mat, bcs, cfg),
        Method::Bc => run_bc(mesh, &LinearElastic::new(mat.lame()), bcs, cfg),
        Method::Seg => run_seg(mesh, mat, bcs, cfg),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn residual_norm_basics() {
        let zero = ResidualSummary::default();
        assert_eq!(residual_norm(&zero, 0.0), 0.0);
        let r = ResidualSummary {
            norm: 4.0,
            internal_force: 1.0,
        };
        assert_eq!(residual_norm(&r, 4.0), 1.0);
        let half = ResidualSummary {
            norm: 2.0,
            internal_force: 0.5,
        };
        assert_eq!(residual_norm(&half, 4.0), 0.5 * residual_norm(&r, 4.0));
    }

    #[test]
    fn config_validation() {
        let mut c = SolveConfig::default();
        assert!(c.validate().is_ok());
        c.outer_tolerance = 0.0;
        assert!(c.validate().is_err());
        let mut c = SolveConfig::new(Method::Seg);
        c.relaxation = 1.5;
        assert!(c.validate().is_err());
    }
}
