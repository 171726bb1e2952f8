//! Interpolation `Q_h` into the weak spaces by local L2 projections.

use super::{curl_dirs, tangent_dirs, SpaceLayout};
use crate::basis::{l2_project, Entity};
use crate::geometry::{self, Point};
use crate::polymesh::PolytopalMesh;
use crate::Result;

/// A vector field together with its curl (planar fields return the scalar
/// curl as the z-component).
#[derive(Clone, Copy)]
pub struct FieldV<'a> {
    pub u: &'a (dyn Fn(Point) -> Point + Sync),
    pub curl: &'a (dyn Fn(Point) -> Point + Sync),
}

/// Face block of `Q_h u`: projections of the tangential components of `u`
/// onto `P_k(e)` and of `curl u` onto `P_{k-1}(e)`.
pub fn project_face_v(
    mesh: &PolytopalMesh,
    layout: &SpaceLayout,
    face: usize,
    boost: usize,
    field: FieldV<'_>,
) -> Result<Vec<f64>> {
    let k = layout.k;
    let mut out = Vec::with_capacity(layout.v_face_len());
    for d in tangent_dirs(mesh, face) {
        out.extend(l2_project(mesh, Entity::Face(face), k, boost, |x| geometry::dot((field.u)(x), d))?);
    }
    for d in curl_dirs(mesh, face) {
        out.extend(l2_project(mesh, Entity::Face(face), k - 1, boost, |x| geometry::dot((field.curl)(x), d))?);
    }
    Ok(out)
}

pub fn project_face_w(
    mesh: &PolytopalMesh,
    layout: &SpaceLayout,
    face: usize,
    boost: usize,
    p: &(dyn Fn(Point) -> f64 + Sync),
) -> Result<Vec<f64>> {
    l2_project(mesh, Entity::Face(face), layout.k, boost, p)
}

/// `Q_h u` as a global `V_h` vector.
pub fn interpolate_v(mesh: &PolytopalMesh, layout: &SpaceLayout, boost: usize, field: FieldV<'_>) -> Result<Vec<f64>> {
    let mut out = vec![0.0; layout.v_len()];
    for c in 0..mesh.num_cells() {
        let start = layout.v_cell(c);
        for a in 0..mesh.dim() {
            let coef = l2_project(mesh, Entity::Cell(c), layout.k, boost, |x| (field.u)(x)[a])?;
            out[start + a * layout.nk..start + (a + 1) * layout.nk].copy_from_slice(&coef);
        }
    }
    for f in 0..mesh.num_faces() {
        let start = layout.v_face(f);
        out[start..start + layout.v_face_len()].copy_from_slice(&project_face_v(mesh, layout, f, boost, field)?);
    }
    Ok(out)
}

/// `Q_h p` as a global `W_h` vector.
pub fn interpolate_w(
    mesh: &PolytopalMesh,
    layout: &SpaceLayout,
    boost: usize,
    p: &(dyn Fn(Point) -> f64 + Sync),
) -> Result<Vec<f64>> {
    let mut out = vec![0.0; layout.w_len()];
    for c in 0..mesh.num_cells() {
        let start = layout.w_cell(c);
        out[start..start + layout.nk].copy_from_slice(&l2_project(mesh, Entity::Cell(c), layout.k, boost, p)?);
    }
    for f in 0..mesh.num_faces() {
        let start = layout.w_face(f);
        out[start..start + layout.nke].copy_from_slice(&project_face_w(mesh, layout, f, boost, p)?);
    }
    Ok(out)
}
