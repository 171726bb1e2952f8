use super::{PolytopalMesh, SignedFace};
use crate::geometry::{self, Point};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

/// The four mesh families used in convergence studies. Level `l` splits the
/// unit square or cube into `2^(l-1)` subdivisions per side and fills each
/// with a fixed template.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MeshFamily {
    /// Each square cut by both diagonals into four triangles.
    #[serde(rename = "crisscross-tri-2d")]
    CrisscrossTri2d,
    /// Six Kuhn tetrahedra per cube.
    #[serde(rename = "kuhn-tet-3d")]
    KuhnTet3d,
    /// Each square cut by a zigzag into two non-convex pentagons.
    #[serde(rename = "nonconvex-poly-2d")]
    NonconvexPoly2d,
    /// Each cube cut by an extruded chevron into two heptagonal prisms, one
    /// of them non-convex.
    #[serde(rename = "nonconvex-poly-3d")]
    NonconvexPoly3d,
}

impl MeshFamily {
    pub const ALL: [MeshFamily; 4] = [
        MeshFamily::CrisscrossTri2d,
        MeshFamily::KuhnTet3d,
        MeshFamily::NonconvexPoly2d,
        MeshFamily::NonconvexPoly3d,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MeshFamily::CrisscrossTri2d => "crisscross-tri-2d",
            MeshFamily::KuhnTet3d => "kuhn-tet-3d",
            MeshFamily::NonconvexPoly2d => "nonconvex-poly-2d",
            MeshFamily::NonconvexPoly3d => "nonconvex-poly-3d",
        }
    }

    pub fn dim(self) -> usize {
        match self {
            MeshFamily::CrisscrossTri2d | MeshFamily::NonconvexPoly2d => 2,
            MeshFamily::KuhnTet3d | MeshFamily::NonconvexPoly3d => 3,
        }
    }
}

impl fmt::Display for MeshFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MeshFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MeshFamily::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::UnknownFamily(s.to_string()))
    }
}

/// Zigzag of the 2D non-convex template, in unit-square coordinates.
const ZIGZAG: [[f64; 2]; 2] = [[1.0 / 3.0, 5.0 / 6.0], [2.0 / 3.0, 1.0 / 6.0]];
/// Chevron of the 3D template: feet at `x = a`, apex at `x = 1 - a`.
const CHEVRON_FOOT: f64 = 0.25;

pub fn generate(family: MeshFamily, level: usize) -> Result<PolytopalMesh> {
    if level == 0 {
        return Err(Error::InvalidLevel(level));
    }
    if level > 12 {
        return Err(Error::InvalidConfig(format!("level {level} is unreasonably fine")));
    }
    let m = 1usize << (level - 1);
    let h = 1.0 / m as f64;
    let mut b = Builder::new(family.dim());
    match family {
        MeshFamily::CrisscrossTri2d => {
            for j in 0..m {
                for i in 0..m {
                    let o = [i as f64 * h, j as f64 * h];
                    let p = |x: f64, y: f64| [o[0] + x * h, o[1] + y * h, 0.0];
                    let corners = [p(0.0, 0.0), p(1.0, 0.0), p(1.0, 1.0), p(0.0, 1.0)];
                    let centre = b.vertex(p(0.5, 0.5));
                    let c: Vec<usize> = corners.iter().map(|&q| b.vertex(q)).collect();
                    for k in 0..4 {
                        b.polygon(&[c[k], c[(k + 1) % 4], centre]);
                    }
                }
            }
        }
        MeshFamily::NonconvexPoly2d => {
            for j in 0..m {
                for i in 0..m {
                    let o = [i as f64 * h, j as f64 * h];
                    let mut p = |x: f64, y: f64| b.vertex([o[0] + x * h, o[1] + y * h, 0.0]);
                    let (p00, p10, p11, p01) = (p(0.0, 0.0), p(1.0, 0.0), p(1.0, 1.0), p(0.0, 1.0));
                    let za = p(ZIGZAG[0][0], ZIGZAG[0][1]);
                    let zb = p(ZIGZAG[1][0], ZIGZAG[1][1]);
                    b.polygon(&[p00, p10, p11, zb, za]);
                    b.polygon(&[p00, za, zb, p11, p01]);
                }
            }
        }
        MeshFamily::KuhnTet3d => {
            const PERMS: [[usize; 3]; 6] =
                [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
            for k in 0..m {
                for j in 0..m {
                    for i in 0..m {
                        let o = [i as f64 * h, j as f64 * h, k as f64 * h];
                        for perm in PERMS {
                            let mut pts = [o; 4];
                            for (s, &axis) in perm.iter().enumerate() {
                                pts[s + 1] = pts[s];
                                pts[s + 1][axis] += h;
                            }
                            b.tetrahedron(pts);
                        }
                    }
                }
            }
        }
        MeshFamily::NonconvexPoly3d => {
            let a = CHEVRON_FOOT;
            let left = [[0.0, 0.0], [a, 0.0], [1.0 - a, 0.5], [a, 1.0], [0.0, 1.0]];
            let right = [[a, 0.0], [1.0, 0.0], [1.0, 1.0], [a, 1.0], [1.0 - a, 0.5]];
            for k in 0..m {
                for j in 0..m {
                    for i in 0..m {
                        let o = [i as f64 * h, j as f64 * h, k as f64 * h];
                        for poly in [&left[..], &right[..]] {
                            let base: Vec<[f64; 2]> =
                                poly.iter().map(|q| [o[0] + q[0] * h, o[1] + q[1] * h]).collect();
                            b.prism(&base, o[2], o[2] + h);
                        }
                    }
                }
            }
        }
    }
    b.finish()
}

/// Assembles a mesh from outward-oriented face cycles, deduplicating
/// vertices by coordinates and faces by vertex set.
struct Builder {
    dim: usize,
    vertices: Vec<Point>,
    vertex_ids: HashMap<[i64; 3], usize>,
    faces: Vec<Vec<usize>>,
    face_ids: HashMap<Vec<usize>, usize>,
    cells: Vec<Vec<SignedFace>>,
}

impl Builder {
    fn new(dim: usize) -> Self {
        Builder {
            dim,
            vertices: Vec::new(),
            vertex_ids: HashMap::new(),
            faces: Vec::new(),
            face_ids: HashMap::new(),
            cells: Vec::new(),
        }
    }

    fn vertex(&mut self, p: Point) -> usize {
        let key = p.map(|x| (x * (1u64 << 36) as f64).round() as i64);
        let next = self.vertices.len();
        *self.vertex_ids.entry(key).or_insert_with(|| {
            self.vertices.push(p);
            next
        })
    }

    fn face(&mut self, cycle: Vec<usize>) -> SignedFace {
        let mut key = cycle.clone();
        key.sort_unstable();
        if let Some(&face) = self.face_ids.get(&key) {
            let stored = &self.faces[face];
            let same = if cycle.len() == 2 {
                cycle[0] == stored[0]
            } else {
                let pos = cycle.iter().position(|&v| v == stored[0]).expect("same vertex set");
                cycle[(pos + 1) % cycle.len()] == stored[1]
            };
            SignedFace { face, sign: if same { 1 } else { -1 } }
        } else {
            let face = self.faces.len();
            self.faces.push(cycle);
            self.face_ids.insert(key, face);
            SignedFace { face, sign: 1 }
        }
    }

    /// 2D cell from a counter-clockwise vertex cycle.
    fn polygon(&mut self, cycle: &[usize]) {
        let cell = (0..cycle.len())
            .map(|i| self.face(vec![cycle[i], cycle[(i + 1) % cycle.len()]]))
            .collect();
        self.cells.push(cell);
    }

    fn tetrahedron(&mut self, mut pts: [Point; 4]) {
        let vol = geometry::dot(
            geometry::sub(pts[1], pts[0]),
            geometry::cross(geometry::sub(pts[2], pts[0]), geometry::sub(pts[3], pts[0])),
        );
        if vol < 0.0 {
            pts.swap(1, 2);
        }
        let v = pts.map(|p| self.vertex(p));
        let cycles = [[v[1], v[2], v[3]], [v[0], v[3], v[2]], [v[0], v[1], v[3]], [v[0], v[2], v[1]]];
        let cell = cycles.iter().map(|c| self.face(c.to_vec())).collect();
        self.cells.push(cell);
    }

    /// Extrudes a counter-clockwise polygon between `z0` and `z1`.
    fn prism(&mut self, base: &[[f64; 2]], z0: f64, z1: f64) {
        let n = base.len();
        let bottom: Vec<usize> = base.iter().map(|q| self.vertex([q[0], q[1], z0])).collect();
        let top: Vec<usize> = base.iter().map(|q| self.vertex([q[0], q[1], z1])).collect();
        let mut cell = Vec::with_capacity(n + 2);
        cell.push(self.face(bottom.iter().rev().copied().collect()));
        cell.push(self.face(top.clone()));
        for i in 0..n {
            let j = (i + 1) % n;
            cell.push(self.face(vec![bottom[i], bottom[j], top[j], top[i]]));
        }
        self.cells.push(cell);
    }

    fn finish(self) -> Result<PolytopalMesh> {
        PolytopalMesh::new(self.dim, self.vertices, self.faces, self.cells)
    }
}
