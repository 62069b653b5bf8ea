//! Runs a validated case and writes its artifacts.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use blockfv_core::assembly::BoundaryConditions;
use blockfv_core::linsolve::write_vector_market;
use blockfv_core::material::{lame_from_e_nu, LinearElastic, Material, NeoHookean, Regime};
use blockfv_core::mesh::CartesianMesh;
use blockfv_core::solver::{run, RunReport, RunStatus};
use blockfv_core::verification::{compute_errors, end_deflection, BcKind, MmsCase, MmsMap};
use serde::Serialize;

use crate::config::{CaseConfig, CaseKind, MaterialKind};
use crate::output::{self, ConvergenceRow, ErrorRow};
use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metrics {
    pub mean: f64,
    pub max: f64,
    pub min: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub mesh: String,
    pub nx: usize,
    pub ny: usize,
    pub status: &'static str,
    pub converged: bool,
    pub divergence_reason: Option<String>,
    pub n_corr: Vec<usize>,
    pub total_corrections: usize,
    pub final_residual: f64,
    pub wall_time_s: f64,
    pub errors: Option<Metrics>,
    pub end_deflection: Option<f64>,
    pub analytic_deflection: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub case: &'static str,
    pub method: &'static str,
    pub bc: Option<&'static str>,
    pub material: &'static str,
    pub stretch: Option<f64>,
    pub omega: Option<f64>,
    pub youngs_modulus: f64,
    pub poisson_ratio: f64,
    pub regime: &'static str,
    pub density: Option<f64>,
    pub tolerance: f64,
    pub load_steps: usize,
    pub converged: bool,
    pub runs: Vec<RunSummary>,
}

#[derive(Debug, Clone)]
pub struct CaseOutcome {
    pub report: Report,
    pub files: Vec<PathBuf>,
}

impl CaseOutcome {
    /// 0 when every run converged, 2 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.report.converged {
            0
        } else {
            2
        }
    }
}

fn bc_name(b: BcKind) -> &'static str {
    match b {
        BcKind::Displacement => "displacement",
        BcKind::Traction => "traction",
    }
}

fn regime_name(r: Regime) -> &'static str {
    match r {
        Regime::PlaneStrain => "plane_strain",
        Regime::PlaneStress => "plane_stress",
    }
}

struct Problem {
    mesh: CartesianMesh,
    bcs: BoundaryConditions,
    mms: Option<MmsCase>,
}

fn problem(cfg: &CaseConfig, mat: &Arc<dyn Material>, nx: usize, ny: usize) -> Result<Problem, CliError> {
    let solver = |e: blockfv_core::Error| CliError::Config(e.to_string());
    if cfg.case == CaseKind::Cantilever {
        return Ok(Problem {
            mesh: cfg.cantilever.mesh(nx, ny).map_err(solver)?,
            bcs: cfg.cantilever.boundary_conditions(),
            mms: None,
        });
    }
    let map = match cfg.case {
        CaseKind::Uniaxial => MmsMap::Uniaxial { stretch: cfg.stretch.unwrap_or(1.0) },
        _ => MmsMap::Shear { omega: cfg.omega.unwrap_or(0.0) },
    };
    let case = MmsCase::new(map, cfg.bc_kind.unwrap_or(BcKind::Displacement)).map_err(solver)?;
    let mesh = CartesianMesh::new(nx, ny, 1.0, 1.0).map_err(solver)?;
    Ok(Problem {
        mesh,
        bcs: case.boundary_conditions(mat.clone()),
        mms: Some(case),
    })
}

fn dump_system(report: &RunReport, dir: &Path, suffix: &str, files: &mut Vec<PathBuf>) -> Result<(), CliError> {
    let Some((a, b)) = &report.first_system else { return Ok(()) };
    let mtx = dir.join(format!("matrix{suffix}.mtx"));
    let file = std::fs::File::create(&mtx).map_err(|e| CliError::io(&mtx, e))?;
    a.write_matrix_market(std::io::BufWriter::new(file)).map_err(|e| CliError::io(&mtx, e))?;
    let rhs = dir.join(format!("rhs{suffix}.mtx"));
    let file = std::fs::File::create(&rhs).map_err(|e| CliError::io(&rhs, e))?;
    write_vector_market(b, std::io::BufWriter::new(file)).map_err(|e| CliError::io(&rhs, e))?;
    files.extend([mtx, rhs]);
    Ok(())
}

/// Run every mesh of `cfg` in order and write the artifacts to `cfg.out_dir`.
pub fn run_case(cfg: &CaseConfig) -> Result<CaseOutcome, CliError> {
    let dir = &cfg.out_dir;
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let lame = lame_from_e_nu(cfg.youngs_modulus, cfg.poisson_ratio, cfg.regime).map_err(|e| CliError::Config(e.to_string()))?;
    let mat: Arc<dyn Material> = match cfg.material {
        MaterialKind::LinearElastic => Arc::new(LinearElastic::new(lame)),
        MaterialKind::NeoHookean => Arc::new(NeoHookean::new(lame)),
    };

    let mut runs = Vec::new();
    let mut error_rows = Vec::new();
    let mut history = Vec::new();
    let mut files = Vec::new();
    for &(nx, ny) in &cfg.meshes {
        let p = problem(cfg, &mat, nx, ny)?;
        let report = run(&p.mesh, mat.as_ref(), &p.bcs, &cfg.solve).map_err(|e| CliError::Config(e.to_string()))?;
        let label = output::mesh_label(nx, ny);
        let suffix = if cfg.sweep { format!("_{label}") } else { String::new() };

        let errors = p.mms.map(|case| {
            let m = compute_errors(&p.mesh, report.u_cells(), &case, 1.0);
            Metrics {
                mean: m.mean,
                max: m.max,
                min: m.min,
            }
        });
        let (deflection, analytic) = match cfg.case {
            CaseKind::Cantilever => (Some(end_deflection(&p.mesh, &report.u)), Some(cfg.cantilever.analytic_deflection())),
            _ => (None, None),
        };

        let vtk = dir.join(format!("deformed{suffix}.vtk"));
        let title = format!("blockfv {} {} {label} {}", cfg.case.name(), cfg.method.name(), report.status.label());
        output::write_vtk_file(&vtk, &p.mesh, &report.u, &title)?;
        files.push(vtk);
        dump_system(&report, dir, &suffix, &mut files)?;

        history.extend(report.history.iter().map(|h| ConvergenceRow {
            mesh: label.clone(),
            load_step: h.load_step,
            correction: h.correction,
            residual: h.residual,
        }));
        error_rows.push(ErrorRow {
            mesh: label.clone(),
            nx,
            ny,
            method: cfg.method.name(),
            converged: report.converged(),
            n_corr: report.total_corrections(),
            mean_error: errors.as_ref().map(|m| m.mean),
            max_error: errors.as_ref().map(|m| m.max),
            min_error: errors.as_ref().map(|m| m.min),
            end_deflection: deflection,
            analytic_deflection: analytic,
        });
        runs.push(RunSummary {
            mesh: label,
            nx,
            ny,
            status: report.status.label(),
            converged: report.converged(),
            divergence_reason: match &report.status {
                RunStatus::Diverged(why) => Some(why.clone()),
                _ => None,
            },
            n_corr: report.n_corr.clone(),
            total_corrections: report.total_corrections(),
            final_residual: report.final_residual,
            wall_time_s: report.wall_time.as_secs_f64(),
            errors,
            end_deflection: deflection,
            analytic_deflection: analytic,
        });
    }

    let errors_csv = dir.join("errors.csv");
    output::write_csv(&errors_csv, &error_rows, output::ERROR_COLUMNS)?;
    let conv_csv = dir.join("convergence.csv");
    output::write_csv(&conv_csv, &history, output::CONVERGENCE_COLUMNS)?;

    let report = Report {
        case: cfg.case.name(),
        method: cfg.method.name(),
        bc: cfg.bc_kind.map(bc_name),
        material: cfg.material.name(),
        stretch: cfg.stretch,
        omega: cfg.omega,
        youngs_modulus: cfg.youngs_modulus,
        poisson_ratio: cfg.poisson_ratio,
        regime: regime_name(cfg.regime),
        density: cfg.density,
        tolerance: cfg.solve.outer_tolerance,
        load_steps: cfg.solve.n_load_steps,
        converged: runs.iter().all(|r| r.converged),
        runs,
    };
    let json = dir.join("report.json");
    output::write_json(&json, &report)?;
    files.extend([errors_csv, conv_csv, json]);
    Ok(CaseOutcome { report, files })
}
