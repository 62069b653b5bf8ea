//! Structured 2-D Cartesian meshes of rectangular cells with unit depth.
//!
//! Cells are numbered `c = i + nx * j`. Faces come in three groups: vertical
//! interior faces (normal `+x`), horizontal interior faces (normal `+y`) and
//! boundary faces, which are stored patch by patch in the order left, right,
//! bottom, top. An interior face is owned by the lower-numbered cell and its
//! normal points into the neighbour.
//!
//! Unknowns ("dofs") live at cell centroids and at boundary-face centroids:
//! cell `c` is dof `c`, boundary face `b` is dof `n_cells + b`.

use std::collections::BTreeMap;
use std::ops::Range;

use crate::error::{Error, Result};
use crate::tensor::Vector3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Patch {
    Left,
    Right,
    Bottom,
    Top,
}

impl Patch {
    pub const ALL: [Patch; 4] = [Patch::Left, Patch::Right, Patch::Bottom, Patch::Top];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Patch::Left => "left",
            Patch::Right => "right",
            Patch::Bottom => "bottom",
            Patch::Top => "top",
        }
    }

    pub fn outward_normal(self) -> Vector3 {
        match self {
            Patch::Left => Vector3::new(-1.0, 0.0, 0.0),
            Patch::Right => Vector3::new(1.0, 0.0, 0.0),
            Patch::Bottom => Vector3::new(0.0, -1.0, 0.0),
            Patch::Top => Vector3::new(0.0, 1.0, 0.0),
        }
    }
}

/// What lies on the far side of a face.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Cell(usize),
    Boundary { patch: Patch, bface: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub centroid: Vector3,
    pub volume: f64,
    /// Face ids with orientation: `+1` if the cell owns the face.
    pub faces: [(usize, f64); 4],
}

/// One depth-direction edge of a face.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceEdge {
    pub length: f64,
    pub binormal: Vector3,
    /// `(dof, weight)` pairs interpolating the edge value.
    pub stencil: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Face {
    pub centroid: Vector3,
    pub normal: Vector3,
    pub tangent: Vector3,
    pub area: f64,
    pub owner: usize,
    pub neighbour: Side,
    /// Owner centroid to neighbour centroid, or to the face centroid on a boundary.
    pub d: Vector3,
    pub edges: [FaceEdge; 2],
}

impl Face {
    pub fn is_boundary(&self) -> bool {
        matches!(self.neighbour, Side::Boundary { .. })
    }

    /// Area vector `S_f = |S_f| N`.
    pub fn area_vector(&self) -> Vector3 {
        self.normal * self.area
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CartesianMesh {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
    pub dx: f64,
    pub dy: f64,
    pub cells: Vec<Cell>,
    pub faces: Vec<Face>,
    /// Face id of each boundary face, indexed by boundary-face number.
    pub boundary_faces: Vec<usize>,
    patch_ranges: [Range<usize>; 4],
}

/// Builds the `nx` by `ny` mesh of the rectangle `[0, lx] x [0, ly]`.
pub fn build_mesh(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<CartesianMesh> {
    CartesianMesh::new(nx, ny, lx, ly)
}

impl CartesianMesh {
    pub fn new(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::Validation(format!("mesh needs at least one cell per direction, got {nx}x{ny}")));
        }
        if !(lx > 0.0 && ly > 0.0 && lx.is_finite() && ly.is_finite()) {
            return Err(Error::Validation(format!("domain extents must be positive, got {lx} x {ly}")));
        }
        let dx = lx / nx as f64;
        let dy = ly / ny as f64;
        let mut mesh = CartesianMesh {
            nx,
            ny,
            lx,
            ly,
            dx,
            dy,
            cells: Vec::with_capacity(nx * ny),
            faces: Vec::with_capacity(2 * nx * ny + nx + ny),
            boundary_faces: Vec::with_capacity(2 * (nx + ny)),
            patch_ranges: [0..0, 0..0, 0..0, 0..0],
        };

        let ex = Vector3::unit(0);
        let ey = Vector3::unit(1);
        for j in 0..ny {
            for i in 0..nx - 1 {
                let owner = mesh.cell_index(i, j);
                let c = Vector3::new((i + 1) as f64 * dx, (j as f64 + 0.5) * dy, 0.0);
                mesh.push_face(c, ex, dy, owner, Side::Cell(owner + 1), ex * dx);
            }
        }
        for j in 0..ny - 1 {
            for i in 0..nx {
                let owner = mesh.cell_index(i, j);
                let c = Vector3::new((i as f64 + 0.5) * dx, (j + 1) as f64 * dy, 0.0);
                mesh.push_face(c, ey, dx, owner, Side::Cell(owner + nx), ey * dy);
            }
        }

        let mut bface = 0;
        for patch in Patch::ALL {
            let start = bface;
            let n = mesh.outward_normal_count(patch);
            for k in 0..n {
                let (owner, c, len) = match patch {
                    Patch::Left => (mesh.cell_index(0, k), Vector3::new(0.0, (k as f64 + 0.5) * dy, 0.0), dy),
                    Patch::Right => (mesh.cell_index(nx - 1, k), Vector3::new(lx, (k as f64 + 0.5) * dy, 0.0), dy),
                    Patch::Bottom => (mesh.cell_index(k, 0), Vector3::new((k as f64 + 0.5) * dx, 0.0, 0.0), dx),
                    Patch::Top => (mesh.cell_index(k, ny - 1), Vector3::new((k as f64 + 0.5) * dx, ly, 0.0), dx),
                };
                let d = c - mesh.cell_centroid(owner);
                let id = mesh.push_face(c, patch.outward_normal(), len, owner, Side::Boundary { patch, bface }, d);
                mesh.boundary_faces.push(id);
                bface += 1;
            }
            mesh.patch_ranges[patch.index()] = start..bface;
        }

        let mut cell_faces = vec![Vec::with_capacity(4); nx * ny];
        for (id, f) in mesh.faces.iter().enumerate() {
            cell_faces[f.owner].push((id, 1.0));
            if let Side::Cell(n) = f.neighbour {
                cell_faces[n].push((id, -1.0));
            }
        }
        for (c, faces) in cell_faces.into_iter().enumerate() {
            let faces: [(usize, f64); 4] = faces
                .try_into()
                .expect("every rectangular cell has four faces");
            mesh.cells.push(Cell {
                centroid: mesh.cell_centroid(c),
                volume: dx * dy,
                faces,
            });
        }

        for id in 0..mesh.faces.len() {
            let f = &mesh.faces[id];
            let half = 0.5 * f.area;
            let plus = mesh.vertex_at(f.centroid + f.tangent * half);
            let minus = mesh.vertex_at(f.centroid - f.tangent * half);
            let t = f.tangent;
            let edges = [
                FaceEdge {
                    length: 1.0,
                    binormal: t,
                    stencil: mesh.edge_stencil(plus.0, plus.1),
                },
                FaceEdge {
                    length: 1.0,
                    binormal: -t,
                    stencil: mesh.edge_stencil(minus.0, minus.1),
                },
            ];
            mesh.faces[id].edges = edges;
        }
        Ok(mesh)
    }

    fn outward_normal_count(&self, patch: Patch) -> usize {
        match patch {
            Patch::Left | Patch::Right => self.ny,
            Patch::Bottom | Patch::Top => self.nx,
        }
    }

    fn push_face(&mut self, centroid: Vector3, normal: Vector3, area: f64, owner: usize, neighbour: Side, d: Vector3) -> usize {
        let empty = || FaceEdge {
            length: 1.0,
            binormal: Vector3::ZERO,
            stencil: Vec::new(),
        };
        self.faces.push(Face {
            centroid,
            normal,
            tangent: Vector3::new(-normal[1], normal[0], 0.0),
            area,
            owner,
            neighbour,
            d,
            edges: [empty(), empty()],
        });
        self.faces.len() - 1
    }

    fn cell_centroid(&self, c: usize) -> Vector3 {
        let (i, j) = (c % self.nx, c / self.nx);
        Vector3::new((i as f64 + 0.5) * self.dx, (j as f64 + 0.5) * self.dy, 0.0)
    }

    fn vertex_at(&self, x: Vector3) -> (usize, usize) {
        ((x[0] / self.dx).round() as usize, (x[1] / self.dy).round() as usize)
    }

    pub fn cell_index(&self, i: usize, j: usize) -> usize {
        i + self.nx * j
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn n_boundary_faces(&self) -> usize {
        self.boundary_faces.len()
    }

    pub fn n_dofs(&self) -> usize {
        self.n_cells() + self.n_boundary_faces()
    }

    pub fn bface_dof(&self, bface: usize) -> usize {
        self.n_cells() + bface
    }

    /// Boundary-face numbers belonging to `patch`.
    pub fn patch_bfaces(&self, patch: Patch) -> Range<usize> {
        self.patch_ranges[patch.index()].clone()
    }

    pub fn bface_patch(&self, bface: usize) -> Patch {
        for p in Patch::ALL {
            if self.patch_ranges[p.index()].contains(&bface) {
                return p;
            }
        }
        panic!("boundary face {bface} out of range");
    }

    /// Face id of boundary face `bface`.
    pub fn bface(&self, bface: usize) -> &Face {
        &self.faces[self.boundary_faces[bface]]
    }

    /// Position of the point a dof lives at.
    pub fn dof_position(&self, dof: usize) -> Vector3 {
        if dof < self.n_cells() {
            self.cells[dof].centroid
        } else {
            self.bface(dof - self.n_cells()).centroid
        }
    }

    pub fn vertex_position(&self, i: usize, j: usize) -> Vector3 {
        Vector3::new(i as f64 * self.dx, j as f64 * self.dy, 0.0)
    }

    /// Interpolation stencil for grid vertex `(i, j)`, `0 <= i <= nx`, `0 <= j <= ny`.
    ///
    /// Interior vertices average the four surrounding cells and vertices
    /// inside a patch average the two adjacent boundary faces. A corner takes
    /// `U_a + U_b - U_c` from its two boundary faces and its cell, which is
    /// exact for linear fields.
    pub fn edge_stencil(&self, i: usize, j: usize) -> Vec<(usize, f64)> {
        let (nx, ny) = (self.nx, self.ny);
        assert!(i <= nx && j <= ny, "vertex ({i}, {j}) outside {nx}x{ny} grid");
        let on_x = i == 0 || i == nx;
        let on_y = j == 0 || j == ny;
        let bdof = |patch: Patch, k: usize| self.bface_dof(self.patch_ranges[patch.index()].start + k);
        match (on_x, on_y) {
            (false, false) => vec![
                (self.cell_index(i - 1, j - 1), 0.25),
                (self.cell_index(i, j - 1), 0.25),
                (self.cell_index(i - 1, j), 0.25),
                (self.cell_index(i, j), 0.25),
            ],
            (true, false) => {
                let patch = if i == 0 { Patch::Left } else { Patch::Right };
                vec![(bdof(patch, j - 1), 0.5), (bdof(patch, j), 0.5)]
            }
            (false, true) => {
                let patch = if j == 0 { Patch::Bottom } else { Patch::Top };
                vec![(bdof(patch, i - 1), 0.5), (bdof(patch, i), 0.5)]
            }
            (true, true) => {
                let (px, ci) = if i == 0 { (Patch::Left, 0) } else { (Patch::Right, nx - 1) };
                let (py, cj) = if j == 0 { (Patch::Bottom, 0) } else { (Patch::Top, ny - 1) };
                vec![(bdof(px, cj), 1.0), (bdof(py, ci), 1.0), (self.cell_index(ci, cj), -1.0)]
            }
        }
    }

    /// Weights `w_k` such that the face gradient is `Σ_k U_k ⊗ w_k`.
    ///
    /// The normal part is the central difference across the face, the
    /// tangential part the Finite Area sum over the two depth edges.
    pub fn face_gradient_stencil(&self, face: usize) -> Vec<(usize, Vector3)> {
        let f = &self.faces[face];
        let mut acc: BTreeMap<usize, Vector3> = BTreeMap::new();
        let inv_d = 1.0 / f.d.norm();
        let far = match f.neighbour {
            Side::Cell(n) => n,
            Side::Boundary { bface, .. } => self.bface_dof(bface),
        };
        *acc.entry(f.owner).or_default() -= f.normal * inv_d;
        *acc.entry(far).or_default() += f.normal * inv_d;
        for e in &f.edges {
            let m = e.binormal * (e.length / f.area);
            for &(dof, w) in &e.stencil {
                *acc.entry(dof).or_default() += m * w;
            }
        }
        acc.into_iter().collect()
    }
}
