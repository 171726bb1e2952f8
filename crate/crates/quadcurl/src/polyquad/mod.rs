//! Quadrature on polytopal cells and their faces.
//!
//! Cells are split into simplices (ear clipping in 2D, cones from a kernel
//! point in 3D) or, for extruded cells, triangular prisms; each piece gets a
//! collapsed-coordinate Gauss-Jacobi rule of the requested exactness.

mod decompose;
mod rules;

pub use decompose::{ear_clip, face_triangles, quadrature_pieces, simplex_decompose, star_point, Piece};
pub use rules::{gauss_jacobi, reference_rule, ReferenceRule, Shape};

use crate::geometry::{self, Point};
use crate::polymesh::PolytopalMesh;
use crate::{Error, Result};

/// Highest polynomial exactness for which rules are built.
pub const MAX_EXACTNESS: usize = 64;

#[derive(Debug, Clone, Default)]
pub struct QuadratureRule {
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(Point) -> f64) -> f64 {
        self.points.iter().zip(&self.weights).map(|(p, w)| w * f(*p)).sum()
    }

    fn append_piece(&mut self, piece: &Piece, exactness: usize) {
        match piece {
            Piece::Simplex(s) => {
                let shape = if s.len() == 3 { Shape::Triangle } else { Shape::Tetrahedron };
                let rule = reference_rule(shape, exactness);
                let jac = piece.measure().abs() * if s.len() == 3 { 2.0 } else { 6.0 };
                let edges: Vec<Point> = s[1..].iter().map(|p| geometry::sub(*p, s[0])).collect();
                for (r, w) in rule.points.iter().zip(&rule.weights) {
                    let mut x = s[0];
                    for (e, &c) in edges.iter().zip(r) {
                        x = geometry::add(x, geometry::scale(*e, c));
                    }
                    self.points.push(x);
                    self.weights.push(w * jac);
                }
            }
            Piece::Prism { base, shift } => {
                let tri = reference_rule(Shape::Triangle, exactness);
                let line = reference_rule(Shape::Segment, exactness);
                let jac = 2.0 * piece.measure();
                let e1 = geometry::sub(base[1], base[0]);
                let e2 = geometry::sub(base[2], base[0]);
                for (r, w) in tri.points.iter().zip(&tri.weights) {
                    let x = geometry::add(base[0], geometry::add(geometry::scale(e1, r[0]), geometry::scale(e2, r[1])));
                    for (t, wt) in line.points.iter().zip(&line.weights) {
                        self.points.push(geometry::add(x, geometry::scale(*shift, t[0])));
                        self.weights.push(w * wt * jac);
                    }
                }
            }
        }
    }
}

fn check_exactness(exactness: usize) -> Result<()> {
    if exactness > MAX_EXACTNESS {
        return Err(Error::QuadratureTooHigh { requested: exactness, max: MAX_EXACTNESS });
    }
    Ok(())
}

/// Rule on a cell exact for polynomials of total degree `exactness`.
pub fn cell_quadrature(mesh: &PolytopalMesh, cell: usize, exactness: usize) -> Result<QuadratureRule> {
    check_exactness(exactness)?;
    let mut rule = QuadratureRule::default();
    for piece in quadrature_pieces(mesh, cell)? {
        rule.append_piece(&piece, exactness);
    }
    Ok(rule)
}

/// Rule on a face (edge in 2D) exact for polynomials of degree `exactness`.
pub fn face_quadrature(mesh: &PolytopalMesh, face: usize, exactness: usize) -> Result<QuadratureRule> {
    check_exactness(exactness)?;
    let mut rule = QuadratureRule::default();
    if mesh.dim() == 2 {
        let pts = mesh.face_points(face);
        let len = mesh.face_geometry(face).measure;
        let line = reference_rule(Shape::Segment, exactness);
        let d = geometry::sub(pts[1], pts[0]);
        for (t, w) in line.points.iter().zip(&line.weights) {
            rule.points.push(geometry::add(pts[0], geometry::scale(d, t[0])));
            rule.weights.push(w * len);
        }
    } else {
        let tri = reference_rule(Shape::Triangle, exactness);
        for t in face_triangles(mesh, face)? {
            let e1 = geometry::sub(t[1], t[0]);
            let e2 = geometry::sub(t[2], t[0]);
            let jac = geometry::norm(geometry::cross(e1, e2));
            for (r, w) in tri.points.iter().zip(&tri.weights) {
                rule.points.push(geometry::add(t[0], geometry::add(geometry::scale(e1, r[0]), geometry::scale(e2, r[1]))));
                rule.weights.push(w * jac);
            }
        }
    }
    Ok(rule)
}
