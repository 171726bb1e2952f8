//! Splitting polygons and polyhedra into simplices.

use crate::geometry::{self, Point};
use crate::polymesh::PolytopalMesh;
use crate::{Error, Result};

/// Triangulates a simple counter-clockwise polygon by ear clipping.
/// Returns `None` if no ear can be found (self-intersecting input).
pub fn ear_clip(poly: &[[f64; 2]]) -> Option<Vec<[usize; 3]>> {
    let n = poly.len();
    if n < 3 {
        return None;
    }
    let scale = poly
        .iter()
        .flat_map(|p| poly.iter().map(move |q| (p[0] - q[0]).hypot(p[1] - q[1])))
        .fold(0.0, f64::max);
    let eps = 1e-12 * scale * scale;
    let mut idx: Vec<usize> = (0..n).collect();
    let mut out = Vec::with_capacity(n - 2);
    while idx.len() > 3 {
        let m = idx.len();
        let ear = (0..m).find(|&i| {
            let (a, b, c) = (idx[(i + m - 1) % m], idx[i], idx[(i + 1) % m]);
            let (pa, pb, pc) = (poly[a], poly[b], poly[c]);
            if orient(pa, pb, pc) <= eps {
                return false;
            }
            idx.iter().all(|&j| {
                j == a || j == b || j == c || poly[j] == pa || poly[j] == pb || poly[j] == pc
                    || !in_triangle(poly[j], pa, pb, pc, eps)
            })
        })?;
        out.push([idx[(ear + m - 1) % m], idx[ear], idx[(ear + 1) % m]]);
        idx.remove(ear);
    }
    out.push([idx[0], idx[1], idx[2]]);
    Some(out)
}

fn orient(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

fn in_triangle(p: [f64; 2], a: [f64; 2], b: [f64; 2], c: [f64; 2], eps: f64) -> bool {
    orient(a, b, p) >= -eps && orient(b, c, p) >= -eps && orient(c, a, p) >= -eps
}

/// Triangles of a face, counter-clockwise with respect to its stored normal.
pub fn face_triangles(mesh: &PolytopalMesh, face: usize) -> Result<Vec<[Point; 3]>> {
    let pts = mesh.face_points(face);
    if pts.len() == 3 {
        return Ok(vec![[pts[0], pts[1], pts[2]]]);
    }
    let g = mesh.face_geometry(face);
    let local: Vec<[f64; 2]> = pts
        .iter()
        .map(|&p| {
            let d = geometry::sub(p, g.centroid);
            [geometry::dot(d, g.t1), geometry::dot(d, g.t2)]
        })
        .collect();
    let tris = ear_clip(&local).ok_or_else(|| Error::InvalidMesh(format!("face {face} cannot be triangulated")))?;
    Ok(tris.into_iter().map(|t| t.map(|i| pts[i])).collect())
}

/// Point maximising the smallest distance to the face planes of a 3D cell,
/// with that distance. A positive distance means the point lies in the
/// kernel, so every face is visible from it.
pub fn star_point(mesh: &PolytopalMesh, cell: usize) -> (Point, f64) {
    let planes: Vec<(Point, Point)> = mesh
        .cell_faces(cell)
        .iter()
        .map(|sf| {
            let g = mesh.face_geometry(sf.face);
            (g.centroid, geometry::scale(g.normal, sf.sign_f64()))
        })
        .collect();
    let depth = |x: Point| {
        planes
            .iter()
            .map(|(c, n)| geometry::dot(geometry::sub(*c, x), *n))
            .fold(f64::INFINITY, f64::min)
    };
    let verts: Vec<Point> = mesh.cell_vertices(cell).iter().map(|&v| mesh.vertex(v)).collect();
    let mut lo = verts[0];
    let mut hi = verts[0];
    for p in &verts {
        for i in 0..3 {
            lo[i] = lo[i].min(p[i]);
            hi[i] = hi[i].max(p[i]);
        }
    }
    let mut best = mesh.cell_geometry(cell).centroid;
    let mut best_d = depth(best);
    const GRID: usize = 12;
    for i in 0..=GRID {
        for j in 0..=GRID {
            for k in 0..=GRID {
                let t = [i, j, k].map(|s| s as f64 / GRID as f64);
                let x = [0, 1, 2].map(|a| lo[a] + t[a] * (hi[a] - lo[a]));
                let d = depth(x);
                if d > best_d {
                    best = x;
                    best_d = d;
                }
            }
        }
    }
    let diam = mesh.cell_geometry(cell).diameter;
    let mut step = diam / GRID as f64;
    while step > 1e-6 * diam {
        let mut improved = false;
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    let x = geometry::add(best, [dx, dy, dz].map(|s| f64::from(s) * step));
                    let d = depth(x);
                    if d > best_d {
                        best = x;
                        best_d = d;
                        improved = true;
                    }
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    (best, best_d)
}

/// Piece of a cell carrying its own quadrature rule.
#[derive(Debug, Clone)]
pub enum Piece {
    Simplex(Vec<Point>),
    /// Triangle `base` swept along the vector `shift`.
    Prism { base: [Point; 3], shift: Point },
}

impl Piece {
    pub fn measure(&self) -> f64 {
        match self {
            Piece::Simplex(s) => signed_volume(s),
            Piece::Prism { base, shift } => 0.5 * prism_det(base, *shift),
        }
    }
}

fn prism_det(base: &[Point; 3], shift: Point) -> f64 {
    let a = geometry::sub(base[1], base[0]);
    let b = geometry::sub(base[2], base[0]);
    geometry::dot(geometry::cross(a, b), shift)
}

/// Pieces used to integrate over a cell: simplices in general, triangular
/// prisms for cells that are straight extrusions of a polygon (far fewer
/// points at high exactness).
pub fn quadrature_pieces(mesh: &PolytopalMesh, cell: usize) -> Result<Vec<Piece>> {
    if mesh.dim() == 3 {
        if let Some(pieces) = extruded_pieces(mesh, cell)? {
            return Ok(pieces);
        }
    }
    Ok(simplex_decompose(mesh, cell)?.into_iter().map(Piece::Simplex).collect())
}

/// Splits a cell into positively oriented simplices (triangles in 2D,
/// tetrahedra in 3D). Simplices are returned as vertex lists.
pub fn simplex_decompose(mesh: &PolytopalMesh, cell: usize) -> Result<Vec<Vec<Point>>> {
    let fail = |reason: String| Error::Decomposition { cell, reason };
    let simplices: Vec<Vec<Point>> = if mesh.dim() == 2 {
        let cycle = mesh.cell_polygon(cell)?;
        let pts: Vec<Point> = cycle.iter().map(|&v| mesh.vertex(v)).collect();
        let flat: Vec<[f64; 2]> = pts.iter().map(|p| [p[0], p[1]]).collect();
        let tris = ear_clip(&flat).ok_or_else(|| fail("polygon has no ear".into()))?;
        tris.into_iter().map(|t| t.iter().map(|&i| pts[i]).collect()).collect()
    } else {
        let faces = mesh.cell_faces(cell);
        let is_tet = faces.len() == 4 && faces.iter().all(|sf| mesh.face_vertices(sf.face).len() == 3);
        if is_tet {
            let mut v: Vec<Point> = mesh.cell_vertices(cell).iter().map(|&i| mesh.vertex(i)).collect();
            if signed_volume(&v) < 0.0 {
                v.swap(1, 2);
            }
            vec![v]
        } else {
            let (apex, depth) = star_point(mesh, cell);
            let diam = mesh.cell_geometry(cell).diameter;
            if depth <= 1e-8 * diam {
                return Err(fail(format!("cell is not star-shaped (kernel depth {depth:e})")));
            }
            let mut out = Vec::new();
            for sf in faces {
                for mut t in face_triangles(mesh, sf.face)? {
                    if sf.sign < 0 {
                        t.swap(1, 2);
                    }
                    out.push(vec![apex, t[0], t[1], t[2]]);
                }
            }
            out
        }
    };
    check_pieces(mesh, cell, simplices.iter().map(|s| signed_volume(s)))?;
    Ok(simplices)
}

fn check_pieces(mesh: &PolytopalMesh, cell: usize, volumes: impl Iterator<Item = f64>) -> Result<()> {
    let fail = |reason: String| Error::Decomposition { cell, reason };
    let mut total = 0.0;
    for v in volumes {
        if v <= 0.0 {
            return Err(fail("decomposition produced an inverted piece".into()));
        }
        total += v;
    }
    let measure = mesh.cell_geometry(cell).measure;
    if (total - measure).abs() > 1e-10 * measure.abs() {
        return Err(fail(format!("piece volumes sum to {total}, cell measure is {measure}")));
    }
    Ok(())
}

/// Recognises a cell whose two caps are translates of each other with
/// quadrilateral sides, and returns its triangular prisms.
fn extruded_pieces(mesh: &PolytopalMesh, cell: usize) -> Result<Option<Vec<Piece>>> {
    let faces = mesh.cell_faces(cell);
    let m = faces.len() - 2;
    let caps: Vec<_> = faces.iter().filter(|sf| mesh.face_vertices(sf.face).len() != 4).collect();
    let (a, b) = match caps.as_slice() {
        [a, b] => (**a, **b),
        _ => return Ok(None),
    };
    if a.face == b.face || mesh.face_vertices(a.face).len() != m || mesh.face_vertices(b.face).len() != m {
        return Ok(None);
    }
    let shift = geometry::sub(mesh.face_geometry(b.face).centroid, mesh.face_geometry(a.face).centroid);
    let tol = 1e-12 * mesh.cell_geometry(cell).diameter;
    let top = mesh.face_points(b.face);
    let matched = mesh.face_points(a.face).iter().all(|&p| {
        let q = geometry::add(p, shift);
        top.iter().any(|&t| geometry::dist(t, q) <= tol)
    });
    if !matched {
        return Ok(None);
    }
    let mut pieces = Vec::new();
    for mut t in face_triangles(mesh, a.face)? {
        if prism_det(&t, shift) < 0.0 {
            t.swap(1, 2);
        }
        pieces.push(Piece::Prism { base: t, shift });
    }
    check_pieces(mesh, cell, pieces.iter().map(Piece::measure))?;
    Ok(Some(pieces))
}

/// Signed measure of a triangle (in the x-y plane) or tetrahedron.
pub fn signed_volume(s: &[Point]) -> f64 {
    let a = geometry::sub(s[1], s[0]);
    let b = geometry::sub(s[2], s[0]);
    if s.len() == 3 {
        0.5 * (a[0] * b[1] - a[1] * b[0])
    } else {
        geometry::dot(a, geometry::cross(b, geometry::sub(s[3], s[0]))) / 6.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polymesh::{generate, MeshFamily};

    #[test]
    fn ear_clip_handles_reflex_vertex() {
        let poly = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [2.0 / 3.0, 1.0 / 6.0], [1.0 / 3.0, 5.0 / 6.0]];
        let tris = ear_clip(&poly).unwrap();
        assert_eq!(tris.len(), 3);
        let area: f64 = tris.iter().map(|t| 0.5 * orient(poly[t[0]], poly[t[1]], poly[t[2]])).sum();
        assert!((area - 0.5).abs() < 1e-15);
        assert!(tris.iter().all(|t| orient(poly[t[0]], poly[t[1]], poly[t[2]]) > 0.0));
    }

    #[test]
    fn every_family_decomposes() {
        for family in MeshFamily::ALL {
            let m = generate(family, 1).unwrap();
            for c in 0..m.num_cells() {
                let s = simplex_decompose(&m, c).unwrap();
                let expected = match (family, m.cell_faces(c).len()) {
                    (MeshFamily::KuhnTet3d, _) | (MeshFamily::CrisscrossTri2d, _) => 1,
                    (MeshFamily::NonconvexPoly2d, _) => 3,
                    // 2 caps of 3 triangles plus 5 quads of 2 triangles
                    (MeshFamily::NonconvexPoly3d, _) => 16,
                };
                assert_eq!(s.len(), expected, "{family} cell {c}");
            }
        }
    }

    #[test]
    fn prisms_are_recognised() {
        let m = generate(MeshFamily::NonconvexPoly3d, 1).unwrap();
        for c in 0..2 {
            let pieces = quadrature_pieces(&m, c).unwrap();
            assert_eq!(pieces.len(), 3);
            assert!(pieces.iter().all(|p| matches!(p, Piece::Prism { .. })));
        }
        let k = generate(MeshFamily::KuhnTet3d, 1).unwrap();
        assert!(matches!(quadrature_pieces(&k, 0).unwrap()[0], Piece::Simplex(_)));
    }

    #[test]
    fn chevron_kernel_is_strictly_inside() {
        let m = generate(MeshFamily::NonconvexPoly3d, 1).unwrap();
        let (p, d) = star_point(&m, 1);
        assert!(d > 0.05, "depth {d} at {p:?}");
    }
}
