//! Weak Galerkin spaces, discrete weak operators and interpolation.
//!
//! `V_h` carries, per cell, `v0 ∈ [P_k(T)]^d` and, per face, the tangential
//! trace `v_b` (components along the face tangents, `P_k`) and the tangential
//! curl trace `v_n` (`P_{k-1}`; a single scalar in 2D). `W_h` carries
//! `σ0 ∈ P_k(T)` and `σ_b ∈ P_k(e)`. Face unknowns are stored in the face's
//! own frame, so they do not depend on which neighbouring cell looks at them.
//!
//! Two-dimensional fields are handled as planar three-dimensional ones: a
//! scalar curl is the z-component of a vector, so one set of formulas serves
//! both dimensions.

mod interp;
mod local;

pub use interp::{interpolate_v, interpolate_w, project_face_v, project_face_w, FieldV};
pub use local::{weak_curlcurl_operator, weak_gradient_operator, CellOperators, LocalWeakOperator};

use crate::basis::dim_p;
use crate::geometry::Point;
use crate::polymesh::PolytopalMesh;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Degrees of the weak curl-curl (`r1`) and weak gradient (`r2`) targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Degrees {
    pub r1: usize,
    pub r2: usize,
}

impl Degrees {
    pub fn max(self) -> usize {
        self.r1.max(self.r2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DegreeMode {
    /// Per-cell degrees from the face count and convexity.
    #[default]
    Auto,
    /// The convex recipe on every cell.
    AutoConvex,
    /// The non-convex recipe on every cell.
    AutoNonconvex,
    /// The same `(r1, r2)` on every cell.
    Explicit([usize; 2]),
}

/// Target degrees on `cell` with `N` faces: `r1 = 2N + k - 2` everywhere,
/// `r2 = N + k - 1` on convex cells and `2N + k - 1` on non-convex ones.
///
/// The curl-curl degree is not lowered on convex cells. With `r1 = N + k - 2`
/// the local operator misses part of `curl curl v0` (on a triangle with
/// `k = 2` it needs `r1 >= 5`) and the global system turns singular.
pub fn default_degrees(mesh: &PolytopalMesh, cell: usize, k: usize) -> Result<Degrees> {
    recipe(mesh.cell_faces(cell).len(), k, mesh.is_convex(cell))
}

/// [`default_degrees`] for a cell with `n` faces.
pub fn recipe(n: usize, k: usize, convex: bool) -> Result<Degrees> {
    if k < 2 {
        return Err(Error::DegreeTooLow(k));
    }
    let base = if convex { n } else { 2 * n };
    Ok(Degrees { r1: 2 * n + k - 2, r2: base + k - 1 })
}

pub fn degrees(mesh: &PolytopalMesh, cell: usize, k: usize, mode: DegreeMode) -> Result<Degrees> {
    let n = mesh.cell_faces(cell).len();
    match mode {
        DegreeMode::Auto => default_degrees(mesh, cell, k),
        DegreeMode::AutoConvex => recipe(n, k, true),
        DegreeMode::AutoNonconvex => recipe(n, k, false),
        DegreeMode::Explicit([r1, r2]) => {
            if k < 2 {
                return Err(Error::DegreeTooLow(k));
            }
            if r1 + 2 < k || r2 + 1 < k {
                return Err(Error::InvalidConfig(format!(
                    "explicit degrees ({r1}, {r2}) cannot hold curl-curl and gradient of degree {k} data"
                )));
            }
            Ok(Degrees { r1, r2 })
        }
    }
}

/// Global numbering of `V_h` and `W_h`: all cell blocks first (in cell
/// order), then all face blocks (in face order); graded-lex inside a block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SpaceLayout {
    pub dim: usize,
    pub k: usize,
    pub n_cells: usize,
    pub n_faces: usize,
    /// `dim P_k(T)`.
    pub nk: usize,
    /// `dim P_k(e)`.
    pub nke: usize,
    /// `dim P_{k-1}(e)`.
    pub nkm1e: usize,
    /// Tangential components per face unknown (1 in 2D, 2 in 3D).
    pub ntan: usize,
}

impl SpaceLayout {
    pub fn new(mesh: &PolytopalMesh, k: usize) -> Result<Self> {
        if k < 2 {
            return Err(Error::DegreeTooLow(k));
        }
        let dim = mesh.dim();
        Ok(SpaceLayout {
            dim,
            k,
            n_cells: mesh.num_cells(),
            n_faces: mesh.num_faces(),
            nk: dim_p(dim, k),
            nke: dim_p(dim - 1, k),
            nkm1e: dim_p(dim - 1, k - 1),
            ntan: dim - 1,
        })
    }

    pub fn v_cell_len(&self) -> usize {
        self.dim * self.nk
    }

    pub fn v_face_len(&self) -> usize {
        self.ntan * (self.nke + self.nkm1e)
    }

    pub fn v_len(&self) -> usize {
        self.n_cells * self.v_cell_len() + self.n_faces * self.v_face_len()
    }

    pub fn w_len(&self) -> usize {
        self.n_cells * self.nk + self.n_faces * self.nke
    }

    pub fn v_cell(&self, cell: usize) -> usize {
        cell * self.v_cell_len()
    }

    pub fn v_face(&self, face: usize) -> usize {
        self.n_cells * self.v_cell_len() + face * self.v_face_len()
    }

    pub fn w_cell(&self, cell: usize) -> usize {
        cell * self.nk
    }

    pub fn w_face(&self, face: usize) -> usize {
        self.n_cells * self.nk + face * self.nke
    }

    /// Offset of tangential component `t` inside a face block.
    pub fn vb_offset(&self, t: usize) -> usize {
        t * self.nke
    }

    /// Offset of curl component `t` inside a face block.
    pub fn vn_offset(&self, t: usize) -> usize {
        self.ntan * self.nke + t * self.nkm1e
    }

    /// Global indices of a cell's local `V` unknowns: `v0` then each face
    /// block in the cell's face order.
    pub fn local_v_dofs(&self, mesh: &PolytopalMesh, cell: usize) -> Vec<usize> {
        let start = self.v_cell(cell);
        let mut out: Vec<usize> = (start..start + self.v_cell_len()).collect();
        for sf in mesh.cell_faces(cell) {
            let f = self.v_face(sf.face);
            out.extend(f..f + self.v_face_len());
        }
        out
    }

    pub fn local_w_dofs(&self, mesh: &PolytopalMesh, cell: usize) -> Vec<usize> {
        let start = self.w_cell(cell);
        let mut out: Vec<usize> = (start..start + self.nk).collect();
        for sf in mesh.cell_faces(cell) {
            let f = self.w_face(sf.face);
            out.extend(f..f + self.nke);
        }
        out
    }
}

/// Directions of the tangential trace unknowns on a face.
pub fn tangent_dirs(mesh: &PolytopalMesh, face: usize) -> Vec<Point> {
    let g = mesh.face_geometry(face);
    if mesh.dim() == 2 {
        vec![g.t1]
    } else {
        vec![g.t1, g.t2]
    }
}

/// Directions of the curl trace unknowns on a face: the out-of-plane axis
/// in 2D, the face tangents in 3D.
pub fn curl_dirs(mesh: &PolytopalMesh, face: usize) -> Vec<Point> {
    let g = mesh.face_geometry(face);
    if mesh.dim() == 2 {
        vec![[0.0, 0.0, 1.0]]
    } else {
        vec![g.t1, g.t2]
    }
}

#[cfg(test)]
mod tests;
