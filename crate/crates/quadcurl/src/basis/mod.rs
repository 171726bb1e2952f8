//! Scaled monomial bases on cells and faces.
//!
//! A cell basis of degree `k` is `((x - c)/s)^α`, `|α| <= k`, with `c` the
//! centroid and `s` the diameter. Face bases use the face frame `(t1, t2)`
//! as local axes. Exponents are listed in graded lexicographic order.

use crate::geometry::{self, Point};
use crate::polymesh::PolytopalMesh;
use crate::polyquad::QuadratureRule;
use crate::{Error, Result};
use faer::{Mat, Side};
use faer::linalg::solvers::Solve;

mod ortho;
pub use ortho::OrthoBasis;

/// Dimension of the space of polynomials of total degree `degree` in
/// `nvars` variables.
pub fn dim_p(nvars: usize, degree: usize) -> usize {
    match nvars {
        0 => 1,
        1 => degree + 1,
        2 => (degree + 1) * (degree + 2) / 2,
        _ => (degree + 1) * (degree + 2) * (degree + 3) / 6,
    }
}

/// Exponents of total degree at most `degree`, graded, then lexicographic
/// with the first variable's power decreasing.
pub fn exponents(nvars: usize, degree: usize) -> Vec<[u8; 3]> {
    let mut out = Vec::with_capacity(dim_p(nvars, degree));
    for d in 0..=degree {
        match nvars {
            0 => {
                if d == 0 {
                    out.push([0, 0, 0]);
                }
            }
            1 => out.push([d as u8, 0, 0]),
            2 => (0..=d).rev().for_each(|a| out.push([a as u8, (d - a) as u8, 0])),
            _ => {
                for a in (0..=d).rev() {
                    for b in (0..=d - a).rev() {
                        out.push([a as u8, b as u8, (d - a - b) as u8]);
                    }
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct MonomialBasis {
    nvars: usize,
    degree: usize,
    exps: Vec<[u8; 3]>,
    center: Point,
    /// Rows map `x - center` to local coordinates (already divided by the scale).
    axes: [Point; 3],
}

impl MonomialBasis {
    pub fn new(nvars: usize, degree: usize, center: Point, axes: [Point; 3], scale: f64) -> Self {
        MonomialBasis {
            nvars,
            degree,
            exps: exponents(nvars, degree),
            center,
            axes: axes.map(|a| geometry::scale(a, 1.0 / scale)),
        }
    }

    /// `P_degree` on a cell, centred at its centroid and scaled by its diameter.
    pub fn cell(mesh: &PolytopalMesh, cell: usize, degree: usize) -> Self {
        let g = mesh.cell_geometry(cell);
        let id = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        Self::new(mesh.dim(), degree, g.centroid, id, g.diameter)
    }

    /// `P_degree` on a face in the coordinates of its stored frame.
    pub fn face(mesh: &PolytopalMesh, face: usize, degree: usize) -> Self {
        let g = mesh.face_geometry(face);
        Self::new(mesh.dim() - 1, degree, g.centroid, [g.t1, g.t2, [0.0; 3]], g.diameter)
    }

    pub fn len(&self) -> usize {
        self.exps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exps.is_empty()
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn exponents(&self) -> &[[u8; 3]] {
        &self.exps
    }

    fn local(&self, x: Point) -> [f64; 3] {
        let d = geometry::sub(x, self.center);
        let mut y = [0.0; 3];
        for (yi, a) in y.iter_mut().zip(&self.axes).take(self.nvars) {
            *yi = geometry::dot(d, *a);
        }
        y
    }

    fn powers(&self, y: [f64; 3]) -> [Vec<f64>; 3] {
        let p = self.degree + 1;
        let mut out = [vec![1.0; p], vec![1.0; p], vec![1.0; p]];
        for (v, pw) in out.iter_mut().enumerate().take(self.nvars) {
            for e in 1..p {
                pw[e] = pw[e - 1] * y[v];
            }
        }
        out
    }

    pub fn eval(&self, x: Point, out: &mut [f64]) {
        let pw = self.powers(self.local(x));
        for (o, e) in out.iter_mut().zip(&self.exps) {
            *o = pw[0][e[0] as usize] * pw[1][e[1] as usize] * pw[2][e[2] as usize];
        }
    }

    pub fn values(&self, x: Point) -> Vec<f64> {
        let mut v = vec![0.0; self.len()];
        self.eval(x, &mut v);
        v
    }

    /// Gradients with respect to the physical coordinates.
    pub fn eval_grad(&self, x: Point, out: &mut [[f64; 3]]) {
        let pw = self.powers(self.local(x));
        let f = |e: u8, v: usize, d: u8| -> f64 {
            if e < d {
                0.0
            } else {
                let mut c = 1.0;
                for j in 0..d {
                    c *= f64::from(e - j);
                }
                c * pw[v][(e - d) as usize]
            }
        };
        for (o, e) in out.iter_mut().zip(&self.exps) {
            let mut g = [0.0; 3];
            for i in 0..self.nvars {
                let mut d = [0u8; 3];
                d[i] = 1;
                let dy = f(e[0], 0, d[0]) * f(e[1], 1, d[1]) * f(e[2], 2, d[2]);
                g = geometry::add(g, geometry::scale(self.axes[i], dy));
            }
            *o = g;
        }
    }

    /// Hessians (row-major 3x3) with respect to the physical coordinates.
    pub fn eval_hessian(&self, x: Point, out: &mut [[f64; 9]]) {
        let pw = self.powers(self.local(x));
        let f = |e: u8, v: usize, d: u8| -> f64 {
            if e < d {
                0.0
            } else {
                let mut c = 1.0;
                for j in 0..d {
                    c *= f64::from(e - j);
                }
                c * pw[v][(e - d) as usize]
            }
        };
        for (o, e) in out.iter_mut().zip(&self.exps) {
            let mut hy = [[0.0; 3]; 3];
            for i in 0..self.nvars {
                for j in 0..self.nvars {
                    let mut d = [0u8; 3];
                    d[i] += 1;
                    d[j] += 1;
                    hy[i][j] = f(e[0], 0, d[0]) * f(e[1], 1, d[1]) * f(e[2], 2, d[2]);
                }
            }
            let mut h = [0.0; 9];
            for i in 0..self.nvars {
                for j in 0..self.nvars {
                    for a in 0..3 {
                        for b in 0..3 {
                            h[3 * a + b] += self.axes[i][a] * hy[i][j] * self.axes[j][b];
                        }
                    }
                }
            }
            *o = h;
        }
    }

    /// Values of every basis function at every point of `rule`, row per point.
    pub fn tabulate(&self, rule: &QuadratureRule) -> Mat<f64> {
        let mut m = Mat::<f64>::zeros(rule.len(), self.len());
        let mut buf = vec![0.0; self.len()];
        for (q, p) in rule.points.iter().enumerate() {
            self.eval(*p, &mut buf);
            for (j, v) in buf.iter().enumerate() {
                m[(q, j)] = *v;
            }
        }
        m
    }

    pub fn mass_matrix(&self, rule: &QuadratureRule) -> Mat<f64> {
        let t = self.tabulate(rule);
        let mut wt = t.clone();
        for (q, w) in rule.weights.iter().enumerate() {
            for j in 0..self.len() {
                wt[(q, j)] *= w;
            }
        }
        t.transpose() * &wt
    }
}

/// Cholesky-factored mass matrix for repeated L2 projections.
pub struct MassSolver {
    llt: faer::linalg::solvers::Llt<f64>,
    n: usize,
}

impl MassSolver {
    /// Fails if the matrix is not numerically positive definite or its
    /// condition number exceeds `1e12`.
    pub fn new(mass: &Mat<f64>, entity: impl Fn() -> String) -> Result<Self> {
        let eig = mass
            .self_adjoint_eigenvalues(Side::Lower)
            .map_err(|_| Error::SingularMass { entity: entity() })?;
        let (lo, hi) = (eig[0], eig[eig.len() - 1]);
        if !(lo > 0.0) || hi / lo > 1e12 {
            return Err(Error::SingularMass { entity: entity() });
        }
        let llt = mass.llt(Side::Lower).map_err(|_| Error::SingularMass { entity: entity() })?;
        Ok(MassSolver { llt, n: mass.nrows() })
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let b = Mat::from_fn(self.n, 1, |i, _| rhs[i]);
        let x = self.llt.solve(&b);
        (0..self.n).map(|i| x[(i, 0)]).collect()
    }
}

/// Where an L2 projection lives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Entity {
    Cell(usize),
    Face(usize),
}

/// Mass matrix of the scaled monomial basis of `degree` on a cell or face.
pub fn mass_matrix(mesh: &PolytopalMesh, entity: Entity, degree: usize) -> Result<Mat<f64>> {
    let (basis, rule) = basis_and_rule(mesh, entity, degree, 2 * degree)?;
    Ok(basis.mass_matrix(&rule))
}

/// Coefficients of the L2 projection of `field` onto `P_degree(entity)` in
/// the scaled monomial basis, integrated with exactness `2*degree + boost`.
pub fn l2_project(
    mesh: &PolytopalMesh,
    entity: Entity,
    degree: usize,
    boost: usize,
    field: impl Fn(Point) -> f64,
) -> Result<Vec<f64>> {
    let (basis, rule) = basis_and_rule(mesh, entity, degree, 2 * degree + boost)?;
    let solver = MassSolver::new(&basis.mass_matrix(&rule), || format!("{entity:?}"))?;
    let mut rhs = vec![0.0; basis.len()];
    let mut buf = vec![0.0; basis.len()];
    for (p, w) in rule.points.iter().zip(&rule.weights) {
        basis.eval(*p, &mut buf);
        let fw = w * field(*p);
        for (r, b) in rhs.iter_mut().zip(&buf) {
            *r += fw * b;
        }
    }
    Ok(solver.solve(&rhs))
}

fn basis_and_rule(
    mesh: &PolytopalMesh,
    entity: Entity,
    degree: usize,
    exactness: usize,
) -> Result<(MonomialBasis, QuadratureRule)> {
    Ok(match entity {
        Entity::Cell(c) => (MonomialBasis::cell(mesh, c, degree), crate::polyquad::cell_quadrature(mesh, c, exactness)?),
        Entity::Face(f) => (MonomialBasis::face(mesh, f, degree), crate::polyquad::face_quadrature(mesh, f, exactness)?),
    })
}
