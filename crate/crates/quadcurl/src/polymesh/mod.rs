//! Polytopal meshes in two and three dimensions.
//!
//! A mesh stores vertices, faces as vertex cycles (edges in 2D, planar
//! polygons in 3D) and cells as lists of faces with an orientation sign.
//! A sign of `+1` means the face's stored normal points out of the cell.

mod families;
mod io;

pub use families::{generate, MeshFamily};
pub use io::{read_mesh, write_mesh};

use crate::geometry::{self, Point};
use crate::{Error, Result};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SignedFace {
    pub face: usize,
    /// `+1` if the stored face normal points out of the cell, `-1` otherwise.
    pub sign: i8,
}

impl SignedFace {
    pub fn sign_f64(self) -> f64 {
        f64::from(self.sign)
    }
}

#[derive(Debug, Clone)]
pub struct FaceGeometry {
    /// Length in 2D, area in 3D.
    pub measure: f64,
    pub centroid: Point,
    pub diameter: f64,
    /// Stored unit normal. In 2D the edge `a -> b` has normal `(dy, -dx)`.
    pub normal: Point,
    /// First tangent: `Rot90(n)` in 2D, the normalised first edge in 3D.
    pub t1: Point,
    /// Second tangent `n x t1` (3D only).
    pub t2: Point,
}

#[derive(Debug, Clone)]
pub struct CellGeometry {
    pub measure: f64,
    pub centroid: Point,
    pub diameter: f64,
    pub convex: bool,
}

/// Orthonormal frame of a face as seen from one of its cells.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaceFrame {
    /// Points out of the cell.
    pub normal: Point,
    pub t1: Point,
    pub t2: Point,
}

#[derive(Debug, Clone)]
pub struct PolytopalMesh {
    dim: usize,
    vertices: Vec<Point>,
    faces: Vec<Vec<usize>>,
    cells: Vec<Vec<SignedFace>>,
    face_cells: Vec<Vec<usize>>,
    face_geometry: Vec<FaceGeometry>,
    cell_geometry: Vec<CellGeometry>,
    cell_vertices: Vec<Vec<usize>>,
    h: f64,
}

/// A structural defect reported by [`PolytopalMesh::validate`].
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Violation {
    #[error("face {face} is degenerate (measure {measure:e})")]
    DegenerateFace { face: usize, measure: f64 },
    #[error("face {face} belongs to no cell")]
    OrphanFace { face: usize },
    #[error("face {face} is shared by {count} cells")]
    OverSharedFace { face: usize, count: usize },
    #[error("face {face} has the same orientation in both of its cells")]
    InconsistentOrientation { face: usize },
    #[error("cell {cell} does not close: |sum of signed area vectors| = {defect:e}")]
    NotClosed { cell: usize, defect: f64 },
    #[error("cell {cell} has non-positive measure {measure:e}")]
    NonPositiveMeasure { cell: usize, measure: f64 },
    #[error("face {face} is not planar")]
    NonPlanarFace { face: usize },
}

impl PolytopalMesh {
    /// Builds a mesh and its cached geometry. Only index errors are fatal here;
    /// geometric and topological defects are left for [`Self::validate`].
    pub fn new(
        dim: usize,
        vertices: Vec<Point>,
        faces: Vec<Vec<usize>>,
        cells: Vec<Vec<SignedFace>>,
    ) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::InvalidMesh(format!("dimension {dim} is not 2 or 3")));
        }
        for (f, verts) in faces.iter().enumerate() {
            if verts.len() < dim || (dim == 2 && verts.len() != 2) {
                return Err(Error::InvalidMesh(format!(
                    "face {f} has {} vertices",
                    verts.len()
                )));
            }
            if let Some(&v) = verts.iter().find(|&&v| v >= vertices.len()) {
                return Err(Error::InvalidMesh(format!("face {f} references vertex {v}")));
            }
        }
        let mut face_cells = vec![Vec::new(); faces.len()];
        for (c, cell) in cells.iter().enumerate() {
            if cell.len() < dim + 1 {
                return Err(Error::InvalidMesh(format!("cell {c} has {} faces", cell.len())));
            }
            for sf in cell {
                if sf.face >= faces.len() || sf.sign.abs() != 1 {
                    return Err(Error::InvalidMesh(format!(
                        "cell {c} references face {} with sign {}",
                        sf.face, sf.sign
                    )));
                }
                face_cells[sf.face].push(c);
            }
        }
        let face_geometry: Vec<FaceGeometry> = faces
            .iter()
            .map(|f| face_geometry(dim, &vertices, f))
            .collect();
        let mut mesh = PolytopalMesh {
            dim,
            vertices,
            faces,
            cells,
            face_cells,
            face_geometry,
            cell_geometry: Vec::new(),
            cell_vertices: Vec::new(),
            h: 0.0,
        };
        mesh.cell_vertices = (0..mesh.cells.len()).map(|c| mesh.collect_vertices(c)).collect();
        mesh.cell_geometry = (0..mesh.cells.len()).map(|c| mesh.compute_cell_geometry(c)).collect();
        mesh.h = mesh.cell_geometry.iter().map(|g| g.diameter).fold(0.0, f64::max);
        Ok(mesh)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn vertex(&self, v: usize) -> Point {
        self.vertices[v]
    }

    pub fn face_vertices(&self, face: usize) -> &[usize] {
        &self.faces[face]
    }

    pub fn face_points(&self, face: usize) -> Vec<Point> {
        self.faces[face].iter().map(|&v| self.vertices[v]).collect()
    }

    pub fn cell_faces(&self, cell: usize) -> &[SignedFace] {
        &self.cells[cell]
    }

    /// Distinct vertices of a cell in order of first appearance.
    pub fn cell_vertices(&self, cell: usize) -> &[usize] {
        &self.cell_vertices[cell]
    }

    pub fn face_cells(&self, face: usize) -> &[usize] {
        &self.face_cells[face]
    }

    pub fn is_boundary_face(&self, face: usize) -> bool {
        self.face_cells[face].len() == 1
    }

    pub fn boundary_faces(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.faces.len()).filter(|&f| self.is_boundary_face(f))
    }

    pub fn face_geometry(&self, face: usize) -> &FaceGeometry {
        &self.face_geometry[face]
    }

    pub fn cell_geometry(&self, cell: usize) -> &CellGeometry {
        &self.cell_geometry[cell]
    }

    /// Largest cell diameter.
    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn is_convex(&self, cell: usize) -> bool {
        self.cell_geometry[cell].convex
    }

    /// Largest number of faces of any cell.
    pub fn max_faces_per_cell(&self) -> usize {
        self.cells.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Frame of `face` with the normal pointing out of `cell`.
    ///
    /// In 2D `t1 = Rot90(n)`; in 3D `t1` is the normalised first edge of the
    /// face and `t2 = n x t1`, so `(t1, t2, n)` is right-handed.
    pub fn face_frame(&self, face: usize, cell: usize) -> Result<FaceFrame> {
        let sf = self.cells[cell]
            .iter()
            .find(|sf| sf.face == face)
            .ok_or_else(|| Error::InvalidMesh(format!("face {face} is not a face of cell {cell}")))?;
        Ok(self.signed_frame(*sf))
    }

    pub(crate) fn signed_frame(&self, sf: SignedFace) -> FaceFrame {
        let g = &self.face_geometry[sf.face];
        let s = sf.sign_f64();
        let normal = geometry::scale(g.normal, s);
        if self.dim == 2 {
            FaceFrame { normal, t1: geometry::rot90(normal), t2: [0.0; 3] }
        } else {
            FaceFrame { normal, t1: g.t1, t2: geometry::cross(normal, g.t1) }
        }
    }

    /// Counter-clockwise vertex cycle of a 2D cell.
    pub fn cell_polygon(&self, cell: usize) -> Result<Vec<usize>> {
        if self.dim != 2 {
            return Err(Error::InvalidMesh("cell polygons exist only in 2D".into()));
        }
        let edges: Vec<(usize, usize)> = self.cells[cell]
            .iter()
            .map(|sf| {
                let f = &self.faces[sf.face];
                if sf.sign > 0 {
                    (f[0], f[1])
                } else {
                    (f[1], f[0])
                }
            })
            .collect();
        let mut cycle = vec![edges[0].0];
        let mut current = edges[0].1;
        while current != edges[0].0 {
            cycle.push(current);
            if cycle.len() > edges.len() {
                return Err(Error::InvalidMesh(format!("cell {cell} boundary is not a cycle")));
            }
            current = edges
                .iter()
                .find(|e| e.0 == current)
                .map(|e| e.1)
                .ok_or_else(|| Error::InvalidMesh(format!("cell {cell} boundary is open")))?;
        }
        if cycle.len() != edges.len() {
            return Err(Error::InvalidMesh(format!("cell {cell} boundary is not a single cycle")));
        }
        Ok(cycle)
    }

    /// Checks face sharing, orientation consistency, closedness and positive
    /// measures. An empty result means the mesh is valid.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        for (f, g) in self.face_geometry.iter().enumerate() {
            let scale = g.diameter.max(f64::MIN_POSITIVE);
            if !(g.measure > 1e-14 * scale.powi(self.dim as i32 - 1)) {
                out.push(Violation::DegenerateFace { face: f, measure: g.measure });
            }
            if self.dim == 3 {
                let c = g.centroid;
                let off = self.faces[f]
                    .iter()
                    .map(|&v| geometry::dot(geometry::sub(self.vertices[v], c), g.normal).abs())
                    .fold(0.0, f64::max);
                if off > 1e-10 * scale {
                    out.push(Violation::NonPlanarFace { face: f });
                }
            }
        }
        for (f, cells) in self.face_cells.iter().enumerate() {
            match cells.len() {
                0 => out.push(Violation::OrphanFace { face: f }),
                1 => {}
                2 => {
                    let s0 = self.sign_in(f, cells[0]);
                    let s1 = self.sign_in(f, cells[1]);
                    if s0 == s1 {
                        out.push(Violation::InconsistentOrientation { face: f });
                    }
                }
                count => out.push(Violation::OverSharedFace { face: f, count }),
            }
        }
        for (c, cell) in self.cells.iter().enumerate() {
            let mut sum = [0.0; 3];
            let mut total = 0.0;
            for sf in cell {
                let g = &self.face_geometry[sf.face];
                sum = geometry::add(sum, geometry::scale(g.normal, sf.sign_f64() * g.measure));
                total += g.measure;
            }
            let defect = geometry::norm(sum);
            if defect > 1e-12 * total.max(f64::MIN_POSITIVE) {
                out.push(Violation::NotClosed { cell: c, defect });
            }
            let measure = self.cell_geometry[c].measure;
            if !(measure > 0.0) {
                out.push(Violation::NonPositiveMeasure { cell: c, measure });
            }
        }
        out
    }

    fn sign_in(&self, face: usize, cell: usize) -> i8 {
        self.cells[cell].iter().find(|sf| sf.face == face).map_or(0, |sf| sf.sign)
    }

    fn collect_vertices(&self, cell: usize) -> Vec<usize> {
        let mut out: Vec<usize> = Vec::new();
        for sf in &self.cells[cell] {
            for &v in &self.faces[sf.face] {
                if !out.contains(&v) {
                    out.push(v);
                }
            }
        }
        out
    }

    /// Measure and centroid from signed simplices coning the oriented
    /// boundary to the first vertex; valid for non-convex cells.
    fn compute_cell_geometry(&self, cell: usize) -> CellGeometry {
        let verts = &self.cell_vertices[cell];
        let o = self.vertices[verts[0]];
        let mut measure = 0.0;
        let mut moment = [0.0; 3];
        for sf in &self.cells[cell] {
            let s = sf.sign_f64();
            let pts = self.face_points(sf.face);
            if self.dim == 2 {
                let a = geometry::sub(pts[0], o);
                let b = geometry::sub(pts[1], o);
                let area = 0.5 * s * (a[0] * b[1] - a[1] * b[0]);
                let c = geometry::scale(geometry::add(geometry::add(o, pts[0]), pts[1]), 1.0 / 3.0);
                measure += area;
                moment = geometry::add(moment, geometry::scale(c, area));
            } else {
                for i in 1..pts.len() - 1 {
                    let a = geometry::sub(pts[0], o);
                    let b = geometry::sub(pts[i], o);
                    let d = geometry::sub(pts[i + 1], o);
                    let vol = s * geometry::dot(a, geometry::cross(b, d)) / 6.0;
                    let c = geometry::scale(
                        geometry::add(geometry::add(o, pts[0]), geometry::add(pts[i], pts[i + 1])),
                        0.25,
                    );
                    measure += vol;
                    moment = geometry::add(moment, geometry::scale(c, vol));
                }
            }
        }
        let centroid = if measure != 0.0 { geometry::scale(moment, 1.0 / measure) } else { o };
        let points: Vec<Point> = verts.iter().map(|&v| self.vertices[v]).collect();
        let diameter = geometry::diameter(&points);
        let tol = 1e-10 * diameter;
        let convex = self.cells[cell].iter().all(|sf| {
            let g = &self.face_geometry[sf.face];
            let n = geometry::scale(g.normal, sf.sign_f64());
            points.iter().all(|&p| geometry::dot(geometry::sub(p, g.centroid), n) <= tol)
        });
        CellGeometry { measure, centroid, diameter, convex }
    }
}

fn face_geometry(dim: usize, vertices: &[Point], face: &[usize]) -> FaceGeometry {
    let pts: Vec<Point> = face.iter().map(|&v| vertices[v]).collect();
    if dim == 2 {
        let d = geometry::sub(pts[1], pts[0]);
        let len = geometry::norm(d);
        let normal = geometry::normalize([d[1], -d[0], 0.0]);
        return FaceGeometry {
            measure: len,
            centroid: geometry::scale(geometry::add(pts[0], pts[1]), 0.5),
            diameter: len,
            normal,
            t1: geometry::rot90(normal),
            t2: [0.0; 3],
        };
    }
    let normal = geometry::normalize(geometry::newell(&pts));
    let t1 = geometry::normalize(geometry::sub(pts[1], pts[0]));
    let t2 = geometry::cross(normal, t1);
    let mut area = 0.0;
    let mut moment = [0.0; 3];
    for i in 1..pts.len() - 1 {
        let a = 0.5
            * geometry::dot(
                geometry::cross(geometry::sub(pts[i], pts[0]), geometry::sub(pts[i + 1], pts[0])),
                normal,
            );
        let c = geometry::scale(geometry::add(geometry::add(pts[0], pts[i]), pts[i + 1]), 1.0 / 3.0);
        area += a;
        moment = geometry::add(moment, geometry::scale(c, a));
    }
    let centroid = if area != 0.0 { geometry::scale(moment, 1.0 / area) } else { pts[0] };
    FaceGeometry { measure: area, centroid, diameter: geometry::diameter(&pts), normal, t1, t2 }
}

impl fmt::Display for PolytopalMesh {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}D mesh: {} vertices, {} faces, {} cells, h = {:.4}",
            self.dim,
            self.vertices.len(),
            self.faces.len(),
            self.cells.len(),
            self.h
        )
    }
}
