use super::{DofMap, SaddleSystem};
use crate::basis::MonomialBasis;
use crate::geometry::Point;
use crate::polymesh::PolytopalMesh;
use crate::polyquad::cell_quadrature;
use crate::weakops::{degrees, project_face_v, CellOperators, DegreeMode, FieldV, SpaceLayout};
use crate::par::map_cells;
use crate::{Error, Result};
use faer::sparse::{SparseColMat, SymbolicSparseColMat};
use faer::Mat;

/// Data of one quad-curl problem.
#[derive(Clone, Copy)]
pub struct Problem<'a> {
    pub load: &'a (dyn Fn(Point) -> Point + Sync),
    /// Boundary traces of `u` and `curl u`; `None` means homogeneous.
    pub boundary: Option<FieldV<'a>>,
}

#[derive(Debug, Clone, Copy)]
pub struct AssemblyOptions {
    pub k: usize,
    pub degree_mode: DegreeMode,
    /// Extra exactness for integrands that are not polynomials.
    pub boost: usize,
    /// Refuse systems with more free unknowns than this.
    pub dof_cap: Option<usize>,
}

impl Default for AssemblyOptions {
    fn default() -> Self {
        AssemblyOptions { k: 2, degree_mode: DegreeMode::Auto, boost: 2, dof_cap: Some(200_000) }
    }
}

struct Local {
    a: Mat<f64>,
    b: Mat<f64>,
    c: Mat<f64>,
    load: Vec<f64>,
}

fn local_system(
    mesh: &PolytopalMesh,
    layout: &SpaceLayout,
    cell: usize,
    problem: &Problem<'_>,
    opts: &AssemblyOptions,
) -> Result<Local> {
    let deg = degrees(mesh, cell, opts.k, opts.degree_mode)?;
    let ops = CellOperators::new(mesh, layout, cell, deg)?;
    let h = mesh.cell_geometry(cell).diameter;
    let mono = MonomialBasis::cell(mesh, cell, opts.k);
    let rule = cell_quadrature(mesh, cell, 2 * opts.k + 2 + 2 * opts.boost)?;
    let nk = mono.len();
    let dim = mesh.dim();
    let mut load = vec![0.0; dim * nk];
    let mut phi = vec![0.0; nk];
    for (x, w) in rule.points.iter().zip(&rule.weights) {
        let f = (problem.load)(*x);
        mono.eval(*x, &mut phi);
        for a in 0..dim {
            for m in 0..nk {
                load[a * nk + m] += w * f[a] * phi[m];
            }
        }
    }
    Ok(Local { a: ops.stiffness(), b: ops.coupling(dim), c: ops.penalty(h.powi(4)), load })
}

/// Assembles the reduced saddle system; cell contributions are computed in
/// parallel and merged in cell order, so the result is deterministic.
pub fn assemble(mesh: &PolytopalMesh, problem: &Problem<'_>, opts: &AssemblyOptions) -> Result<SaddleSystem> {
    let layout = SpaceLayout::new(mesh, opts.k)?;
    let dofs = DofMap::new(mesh, layout);
    if let Some(cap) = opts.dof_cap {
        if dofs.n_free() > cap {
            return Err(Error::DofCapExceeded { dofs: dofs.n_free(), cap });
        }
    }
    let mut lift = vec![0.0; layout.v_len()];
    if let Some(field) = problem.boundary {
        for f in mesh.boundary_faces() {
            let s = layout.v_face(f);
            lift[s..s + layout.v_face_len()].copy_from_slice(&project_face_v(mesh, &layout, f, opts.boost, field)?);
        }
    }
    let n = dofs.n_free();
    let mut rhs = vec![0.0; n];
    let mut trip: Vec<(u32, u32, f64)> = Vec::new();
    const CHUNK: usize = 512;
    let cells: Vec<usize> = (0..mesh.num_cells()).collect();
    for chunk in cells.chunks(CHUNK) {
        let locals = map_cells(chunk, |c| local_system(mesh, &layout, c, problem, opts))?;
        for (&cell, loc) in chunk.iter().zip(locals) {
            let vd = layout.local_v_dofs(mesh, cell);
            let wd = layout.local_w_dofs(mesh, cell);
            let vrow: Vec<Option<usize>> = vd.iter().map(|&g| dofs.v_row(g)).collect();
            let wrow: Vec<Option<usize>> = wd.iter().map(|&g| dofs.w_row(g)).collect();
            for (i, ri) in vrow.iter().enumerate() {
                let Some(ri) = *ri else { continue };
                for (j, rj) in vrow.iter().enumerate() {
                    let v = loc.a[(i, j)];
                    match rj {
                        Some(rj) => trip.push((ri as u32, *rj as u32, v)),
                        None => rhs[ri] -= v * lift[vd[j]],
                    }
                }
            }
            for i in 0..loc.b.nrows() {
                let ri = vrow[i].expect("cell unknowns are free");
                rhs[ri] += loc.load[i];
                for (j, rj) in wrow.iter().enumerate() {
                    if let Some(rj) = *rj {
                        let v = loc.b[(i, j)];
                        trip.push((rj as u32, ri as u32, v));
                        trip.push((ri as u32, rj as u32, v));
                    }
                }
            }
            for (i, ri) in wrow.iter().enumerate() {
                let Some(ri) = *ri else { continue };
                for (j, rj) in wrow.iter().enumerate() {
                    if let Some(rj) = *rj {
                        trip.push((ri as u32, rj as u32, -loc.c[(i, j)]));
                    }
                }
            }
        }
    }
    let matrix = merge_triplets(n, trip);
    Ok(SaddleSystem { dofs, matrix, rhs, lift })
}

/// Sums duplicates in input order after a stable sort by column then row.
pub(crate) fn merge_triplets(n: usize, mut trip: Vec<(u32, u32, f64)>) -> SparseColMat<usize, f64> {
    trip.sort_by_key(|&(i, j, _)| (j, i));
    let mut col_ptr = vec![0usize; n + 1];
    let mut row_idx = Vec::with_capacity(trip.len() / 2);
    let mut vals = Vec::with_capacity(trip.len() / 2);
    let mut last: Option<(u32, u32)> = None;
    for (i, j, v) in trip {
        if last == Some((i, j)) {
            *vals.last_mut().expect("previous entry") += v;
        } else {
            row_idx.push(i as usize);
            vals.push(v);
            col_ptr[j as usize + 1] += 1;
            last = Some((i, j));
        }
    }
    for j in 0..n {
        col_ptr[j + 1] += col_ptr[j];
    }
    let sym = SymbolicSparseColMat::new_checked(n, n, col_ptr, None, row_idx);
    SparseColMat::new(sym, vals)
}
