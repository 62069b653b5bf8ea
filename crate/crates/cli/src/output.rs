//! Artifact writers: CSV tables, the JSON report and legacy VTK meshes.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use blockfv_core::mesh::CartesianMesh;
use blockfv_core::Vector3;
use serde::Serialize;

use crate::CliError;

/// One row of `errors.csv`. Field order is the column order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorRow {
    pub mesh: String,
    pub nx: usize,
    pub ny: usize,
    pub method: &'static str,
    pub converged: bool,
    pub n_corr: usize,
    pub mean_error: Option<f64>,
    pub max_error: Option<f64>,
    pub min_error: Option<f64>,
    pub end_deflection: Option<f64>,
    pub analytic_deflection: Option<f64>,
}

/// One row of `convergence.csv`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub mesh: String,
    pub load_step: usize,
    pub correction: usize,
    pub residual: f64,
}

pub fn mesh_label(nx: usize, ny: usize) -> String {
    format!("{nx}x{ny}")
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path).map(BufWriter::new).map_err(|e| CliError::io(path, e))
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T], header: &[&str]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(create(path)?);
    let err = |e: csv::Error| CliError::io(path, std::io::Error::other(e));
    // serde only emits headers with the first record
    if rows.is_empty() {
        w.write_record(header).map_err(err)?;
    }
    for r in rows {
        w.serialize(r).map_err(err)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub const ERROR_COLUMNS: &[&str] = &[
    "mesh",
    "nx",
    "ny",
    "method",
    "converged",
    "n_corr",
    "mean_error",
    "max_error",
    "min_error",
    "end_deflection",
    "analytic_deflection",
];

pub const CONVERGENCE_COLUMNS: &[&str] = &["mesh", "load_step", "correction", "residual"];

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| CliError::io(path, e.into()))?;
    writeln!(w).and_then(|_| w.flush()).map_err(|e| CliError::io(path, e))
}

/// Vertex displacements interpolated from the dof field.
pub fn vertex_displacements(mesh: &CartesianMesh, u: &[Vector3]) -> Vec<Vector3> {
    let mut out = Vec::with_capacity((mesh.nx + 1) * (mesh.ny + 1));
    for j in 0..=mesh.ny {
        for i in 0..=mesh.nx {
            let mut v = Vector3::ZERO;
            for (dof, w) in mesh.edge_stencil(i, j) {
                v += u[dof] * w;
            }
            out.push(v);
        }
    }
    out
}

/// Legacy ASCII unstructured grid of the deformed quads.
pub fn write_vtk<W: Write>(mesh: &CartesianMesh, u: &[Vector3], title: &str, mut w: W) -> std::io::Result<()> {
    let (nx, ny) = (mesh.nx, mesh.ny);
    let disp = vertex_displacements(mesh, u);
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "{title}")?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(w, "POINTS {} double", disp.len())?;
    for j in 0..=ny {
        for i in 0..=nx {
            let x = mesh.vertex_position(i, j) + disp[i + (nx + 1) * j];
            writeln!(w, "{} {} 0", x[0], x[1])?;
        }
    }
    let nc = nx * ny;
    writeln!(w, "CELLS {nc} {}", 5 * nc)?;
    for j in 0..ny {
        for i in 0..nx {
            let v = |a: usize, b: usize| a + (nx + 1) * b;
            writeln!(w, "4 {} {} {} {}", v(i, j), v(i + 1, j), v(i + 1, j + 1), v(i, j + 1))?;
        }
    }
    writeln!(w, "CELL_TYPES {nc}")?;
    for _ in 0..nc {
        writeln!(w, "9")?;
    }
    writeln!(w, "POINT_DATA {}", disp.len())?;
    writeln!(w, "VECTORS displacement double")?;
    for d in &disp {
        writeln!(w, "{} {} 0", d[0], d[1])?;
    }
    writeln!(w, "CELL_DATA {nc}")?;
    writeln!(w, "VECTORS cell_displacement double")?;
    for d in &u[..nc] {
        writeln!(w, "{} {} 0", d[0], d[1])?;
    }
    w.flush()
}

pub fn write_vtk_file(path: &Path, mesh: &CartesianMesh, u: &[Vector3], title: &str) -> Result<(), CliError> {
    write_vtk(mesh, u, title, create(path)?).map_err(|e| CliError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_field_reaches_vertices_exactly() {
        let mesh = CartesianMesh::new(3, 2, 1.5, 1.0).unwrap();
        let g = |x: Vector3| Vector3::new(0.1 * x[0] - 0.2 * x[1], 0.3 * x[1], 0.0);
        let u: Vec<Vector3> = (0..mesh.n_dofs()).map(|k| g(mesh.dof_position(k))).collect();
        let v = vertex_displacements(&mesh, &u);
        for j in 0..=2 {
            for i in 0..=3 {
                assert!((v[i + 4 * j] - g(mesh.vertex_position(i, j))).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn vtk_layout() {
        let mesh = CartesianMesh::new(2, 1, 2.0, 1.0).unwrap();
        let u = vec![Vector3::ZERO; mesh.n_dofs()];
        let mut buf = Vec::new();
        write_vtk(&mesh, &u, "t", &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("# vtk DataFile Version 3.0\nt\nASCII\nDATASET UNSTRUCTURED_GRID\nPOINTS 6 double\n"));
        assert!(text.contains("CELLS 2 10\n4 0 1 4 3\n4 1 2 5 4\n"));
        assert!(text.contains("CELL_TYPES 2\n9\n9\n"));
    }
}
