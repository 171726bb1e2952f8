//! Global saddle-point system
//!
//! ```text
//! [ A   B^T ] [u]   [f]
//! [ B   -C  ] [p] = [0]
//! ```
//!
//! with `A = Σ (∇×∇×_w u, ∇×∇×_w v)_T`, `B` from `b(v, q) = Σ (v0, ∇_w q)_T`
//! and `C = Σ h_T^4 (∇_w p, ∇_w q)_T`. Boundary face unknowns are fixed to the
//! projections of the boundary data and eliminated.

mod assemble;
mod solve;

pub use assemble::{assemble, AssemblyOptions, Problem};
pub use solve::{solve, SolveMethod, SolveReport, SolverOptions};

use crate::weakops::SpaceLayout;
use crate::polymesh::PolytopalMesh;
use crate::Result;
use faer::sparse::SparseColMat;
use std::io::Write;

const FIXED: u32 = u32::MAX;

/// Maps global `V_h`/`W_h` unknowns to positions in the reduced system.
/// Unknowns on boundary faces are fixed and have no position.
#[derive(Debug, Clone)]
pub struct DofMap {
    pub layout: SpaceLayout,
    v_index: Vec<u32>,
    w_index: Vec<u32>,
    n_v: usize,
    n_w: usize,
}

impl DofMap {
    pub fn new(mesh: &PolytopalMesh, layout: SpaceLayout) -> Self {
        let mut v_fixed = vec![false; layout.v_len()];
        let mut w_fixed = vec![false; layout.w_len()];
        for f in mesh.boundary_faces() {
            let s = layout.v_face(f);
            v_fixed[s..s + layout.v_face_len()].fill(true);
            let s = layout.w_face(f);
            w_fixed[s..s + layout.nke].fill(true);
        }
        let number = |fixed: &[bool]| {
            let mut next = 0u32;
            let idx: Vec<u32> = fixed
                .iter()
                .map(|&f| {
                    if f {
                        FIXED
                    } else {
                        next += 1;
                        next - 1
                    }
                })
                .collect();
            (idx, next as usize)
        };
        let (v_index, n_v) = number(&v_fixed);
        let (w_index, n_w) = number(&w_fixed);
        DofMap { layout, v_index, w_index, n_v, n_w }
    }

    /// Free `V` unknowns (rows `0..n_v` of the system).
    pub fn n_v(&self) -> usize {
        self.n_v
    }

    /// Free `W` unknowns (rows `n_v..n_v + n_w`).
    pub fn n_w(&self) -> usize {
        self.n_w
    }

    pub fn n_free(&self) -> usize {
        self.n_v + self.n_w
    }

    pub fn v_row(&self, global: usize) -> Option<usize> {
        let i = self.v_index[global];
        (i != FIXED).then_some(i as usize)
    }

    pub fn w_row(&self, global: usize) -> Option<usize> {
        let i = self.w_index[global];
        (i != FIXED).then(|| self.n_v + i as usize)
    }

    /// Global `V` and `W` vectors from a reduced solution and the boundary lift.
    pub fn expand(&self, x: &[f64], lift: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let u = (0..self.layout.v_len()).map(|g| self.v_row(g).map_or(lift[g], |r| x[r])).collect();
        let p = (0..self.layout.w_len()).map(|g| self.w_row(g).map_or(0.0, |r| x[r])).collect();
        (u, p)
    }
}

/// Which block of the saddle matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Block {
    A,
    B,
    C,
}

#[derive(Debug, Clone)]
pub struct SaddleSystem {
    pub dofs: DofMap,
    /// Full symmetric matrix on the free unknowns, with `-C` in the lower
    /// right block.
    pub matrix: SparseColMat<usize, f64>,
    pub rhs: Vec<f64>,
    /// Global `V_h` vector holding the boundary data on fixed unknowns.
    pub lift: Vec<f64>,
}

impl SaddleSystem {
    pub fn size(&self) -> usize {
        self.rhs.len()
    }

    pub fn rhs_f(&self) -> &[f64] {
        &self.rhs[..self.dofs.n_v()]
    }

    pub fn rhs_g(&self) -> &[f64] {
        &self.rhs[self.dofs.n_v()..]
    }

    /// Dense copy of one block (`C` with its own sign, i.e. positive
    /// semi-definite). Intended for small systems and tests.
    pub fn dense_block(&self, block: Block) -> faer::Mat<f64> {
        let nv = self.dofs.n_v();
        let nw = self.dofs.n_w();
        let (r0, c0, nr, nc, s) = match block {
            Block::A => (0, 0, nv, nv, 1.0),
            Block::B => (nv, 0, nw, nv, 1.0),
            Block::C => (nv, nv, nw, nw, -1.0),
        };
        let mut out = faer::Mat::<f64>::zeros(nr, nc);
        let m = self.matrix.as_ref();
        for j in c0..c0 + nc {
            for (i, v) in m.row_idx_of_col(j).zip(m.val_of_col(j)) {
                if i >= r0 && i < r0 + nr {
                    out[(i - r0, j - c0)] = s * v;
                }
            }
        }
        out
    }

    /// `y = K x`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        spmv(&self.matrix, x)
    }

    /// Writes `n nnz`, then 0-based `i j value` triplets, then the
    /// right-hand side one value per line.
    pub fn dump(&self, mut out: impl Write) -> Result<()> {
        let m = self.matrix.as_ref();
        writeln!(out, "{} {}", self.size(), m.compute_nnz())?;
        for j in 0..m.ncols() {
            for (i, v) in m.row_idx_of_col(j).zip(m.val_of_col(j)) {
                writeln!(out, "{i} {j} {v:e}")?;
            }
        }
        for v in &self.rhs {
            writeln!(out, "{v:e}")?;
        }
        Ok(())
    }
}

pub(crate) fn spmv(m: &SparseColMat<usize, f64>, x: &[f64]) -> Vec<f64> {
    let m = m.as_ref();
    let mut y = vec![0.0; m.nrows()];
    for (j, xj) in x.iter().enumerate() {
        for (i, v) in m.row_idx_of_col(j).zip(m.val_of_col(j)) {
            y[i] += v * xj;
        }
    }
    y
}

pub(crate) fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests;
