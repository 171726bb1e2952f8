use super::*;
use crate::geometry::{self, Point};
use crate::polymesh::{generate, MeshFamily};
use crate::polyquad::{cell_quadrature, face_quadrature};
use crate::basis::MonomialBasis;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn degree_formula_examples() {
    let tri = generate(MeshFamily::CrisscrossTri2d, 1).unwrap();
    assert_eq!(default_degrees(&tri, 0, 2).unwrap(), Degrees { r1: 6, r2: 4 });
    let tet = generate(MeshFamily::KuhnTet3d, 1).unwrap();
    assert_eq!(default_degrees(&tet, 0, 3).unwrap(), Degrees { r1: 9, r2: 6 });
    let pent = generate(MeshFamily::NonconvexPoly2d, 1).unwrap();
    assert_eq!(default_degrees(&pent, 0, 2).unwrap(), Degrees { r1: 10, r2: 11 });
    let chev = generate(MeshFamily::NonconvexPoly3d, 1).unwrap();
    assert_eq!(default_degrees(&chev, 0, 2).unwrap(), Degrees { r1: 14, r2: 8 });
    assert_eq!(default_degrees(&chev, 1, 3).unwrap(), Degrees { r1: 15, r2: 16 });
    assert!(matches!(default_degrees(&tri, 0, 1), Err(Error::DegreeTooLow(1))));
}

#[test]
fn dof_counts() {
    let m = generate(MeshFamily::CrisscrossTri2d, 1).unwrap();
    let l = SpaceLayout::new(&m, 2).unwrap();
    // 4 cells * 2 * 6 + 8 faces * (3 + 2)
    assert_eq!(l.v_len(), 4 * 12 + 8 * 5);
    assert_eq!(l.w_len(), 4 * 6 + 8 * 3);
    let t = generate(MeshFamily::KuhnTet3d, 1).unwrap();
    let l = SpaceLayout::new(&t, 2).unwrap();
    assert_eq!(l.v_face_len(), 2 * (6 + 3));
    assert_eq!(l.local_v_dofs(&t, 0).len(), 3 * 10 + 4 * 18);
}

fn unit(c: usize) -> Point {
    let mut e = [0.0; 3];
    e[c] = 1.0;
    e
}

fn face_field(mesh: &PolytopalMesh, face: usize, deg: usize, dirs: &[Point], dofs: &[f64], x: Point) -> Point {
    let b = MonomialBasis::face(mesh, face, deg);
    let vals = b.values(x);
    let n = b.len();
    let mut out = [0.0; 3];
    for (t, d) in dirs.iter().enumerate() {
        let s: f64 = (0..n).map(|m| dofs[t * n + m] * vals[m]).sum();
        out = geometry::add(out, geometry::scale(*d, s));
    }
    out
}

/// Right side of the defining identity
/// `(G v, q) = (v0, curl curl q) - <v_b x n, curl q> - <v_n x n, q>`
/// for every plain monomial `q` of `P_r1`, on a separate rule.
fn oracle_curlcurl(mesh: &PolytopalMesh, layout: &SpaceLayout, cell: usize, r1: usize, dofs: &[f64]) -> (MonomialBasis, Vec<Vec<f64>>) {
    let dim = mesh.dim();
    let k = layout.k;
    let qb = MonomialBasis::cell(mesh, cell, r1);
    let vb = MonomialBasis::cell(mesh, cell, k);
    let nq = qb.len();
    let nk = vb.len();
    let rule = cell_quadrature(mesh, cell, 2 * r1 + 6).unwrap();
    let mut rhs = vec![vec![0.0; nq]; dim];
    let mut h = vec![[0.0; 9]; nq];
    for (x, w) in rule.points.iter().zip(&rule.weights) {
        let v = vb.values(*x);
        qb.eval_hessian(*x, &mut h);
        let v0: Vec<f64> = (0..dim).map(|a| (0..nk).map(|m| dofs[a * nk + m] * v[m]).sum()).collect();
        for c in 0..dim {
            for i in 0..nq {
                let lap = h[i][0] + h[i][4] + h[i][8];
                let cc: f64 = (0..dim)
                    .map(|a| v0[a] * (h[i][3 * a + c] - if a == c { lap } else { 0.0 }))
                    .sum();
                rhs[c][i] += w * cc;
            }
        }
    }
    let mut g = vec![[0.0; 3]; nq];
    for (j, sf) in mesh.cell_faces(cell).iter().enumerate() {
        let n = mesh.signed_frame(*sf).normal;
        let fb = &dofs[layout.v_cell_len() + j * layout.v_face_len()..];
        let td = tangent_dirs(mesh, sf.face);
        let cd = curl_dirs(mesh, sf.face);
        let frule = face_quadrature(mesh, sf.face, 2 * r1 + 6).unwrap();
        for (x, w) in frule.points.iter().zip(&frule.weights) {
            let vbx = face_field(mesh, sf.face, k, &td, fb, *x);
            let vnx = face_field(mesh, sf.face, k - 1, &cd, &fb[layout.vn_offset(0)..], *x);
            let vbn = geometry::cross(vbx, n);
            let vnn = geometry::cross(vnx, n);
            let q = qb.values(*x);
            qb.eval_grad(*x, &mut g);
            for c in 0..dim {
                for i in 0..nq {
                    let curl_q = geometry::cross(g[i], unit(c));
                    rhs[c][i] -= w * (geometry::dot(vbn, curl_q) + vnn[c] * q[i]);
                }
            }
        }
    }
    (qb, rhs)
}

fn eval_coef(b: &MonomialBasis, coef: &[Vec<f64>], x: Point) -> Point {
    let v = b.values(x);
    let mut out = [0.0; 3];
    for (c, cf) in coef.iter().enumerate() {
        out[c] = cf.iter().zip(&v).map(|(a, b)| a * b).sum();
    }
    out
}

fn sample_points(mesh: &PolytopalMesh, cell: usize) -> Vec<Point> {
    let rule = cell_quadrature(mesh, cell, 3).unwrap();
    rule.points
}

#[test]
fn curlcurl_matches_defining_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for (family, k) in [(MeshFamily::CrisscrossTri2d, 2), (MeshFamily::CrisscrossTri2d, 3), (MeshFamily::KuhnTet3d, 2)] {
        let mesh = generate(family, 1).unwrap();
        let layout = SpaceLayout::new(&mesh, k).unwrap();
        let deg = default_degrees(&mesh, 0, k).unwrap();
        let op = weak_curlcurl_operator(&mesh, 0, k, deg.r1).unwrap();
        let dofs: Vec<f64> = (0..op.matrix.ncols()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let (qb, rhs) = oracle_curlcurl(&mesh, &layout, 0, deg.r1, &dofs);
        let rule = cell_quadrature(&mesh, 0, 2 * deg.r1 + 4).unwrap();
        let mut lhs = vec![vec![0.0; qb.len()]; mesh.dim()];
        for (x, w) in rule.points.iter().zip(&rule.weights) {
            let g = op.eval(&dofs, *x, mesh.dim());
            for (i, q) in qb.values(*x).iter().enumerate() {
                for c in 0..mesh.dim() {
                    lhs[c][i] += w * g[c] * q;
                }
            }
        }
        let scale = rhs.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
        for (l, r) in lhs.iter().flatten().zip(rhs.iter().flatten()) {
            assert!((l - r).abs() < 1e-10 * scale, "{family} k={k}: {l} vs {r}");
        }
    }
}

#[test]
fn gradient_matches_defining_identity() {
    // (∇_w σ, ψ) = -(σ0, div ψ) + <σ_b, ψ·n>
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for family in [MeshFamily::CrisscrossTri2d, MeshFamily::KuhnTet3d, MeshFamily::NonconvexPoly2d] {
        let mesh = generate(family, 1).unwrap();
        let k = 2;
        let dim = mesh.dim();
        let r2 = default_degrees(&mesh, 0, k).unwrap().r2;
        let op = weak_gradient_operator(&mesh, 0, k, r2).unwrap();
        let dofs: Vec<f64> = (0..op.matrix.ncols()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let qb = MonomialBasis::cell(&mesh, 0, r2.min(6));
        let sb = MonomialBasis::cell(&mesh, 0, k);
        let nq = qb.len();
        let nk = sb.len();
        let rule = cell_quadrature(&mesh, 0, 2 * r2 + 4).unwrap();
        let mut rhs = vec![vec![0.0; nq]; dim];
        let mut g = vec![[0.0; 3]; nq];
        for (x, w) in rule.points.iter().zip(&rule.weights) {
            let s0: f64 = sb.values(*x).iter().zip(&dofs).map(|(a, b)| a * b).sum();
            qb.eval_grad(*x, &mut g);
            for c in 0..dim {
                for i in 0..nq {
                    rhs[c][i] -= w * s0 * g[i][c];
                }
            }
        }
        for (j, sf) in mesh.cell_faces(0).iter().enumerate() {
            let n = mesh.signed_frame(*sf).normal;
            let fb = MonomialBasis::face(&mesh, sf.face, k);
            let off = nk + j * fb.len();
            let frule = face_quadrature(&mesh, sf.face, 2 * r2 + 4).unwrap();
            for (x, w) in frule.points.iter().zip(&frule.weights) {
                let sb: f64 = fb.values(*x).iter().zip(&dofs[off..]).map(|(a, b)| a * b).sum();
                let q = qb.values(*x);
                for c in 0..dim {
                    for i in 0..nq {
                        rhs[c][i] += w * sb * q[i] * n[c];
                    }
                }
            }
        }
        // Moments of the computed target against P_r2 monomials.
        let gx: Vec<Point> = rule.points.iter().map(|x| op.eval(&dofs, *x, dim)).collect();
        let qv: Vec<Vec<f64>> = rule.points.iter().map(|x| qb.values(*x)).collect();
        for c in 0..dim {
            for i in 0..nq {
                let val: f64 = rule.weights.iter().enumerate().map(|(q, w)| w * gx[q][c] * qv[q][i]).sum();
                assert!((val - rhs[c][i]).abs() < 1e-9 * (1.0 + rhs[c][i].abs()), "{family} {c} {i}: {val} vs {}", rhs[c][i]);
            }
        }
    }
}

/// Random polynomial vector field of degree `k` with its curl and curl curl.
struct PolyField {
    basis: MonomialBasis,
    coef: Vec<Vec<f64>>,
}

impl PolyField {
    fn random(mesh: &PolytopalMesh, cell: usize, k: usize, rng: &mut ChaCha8Rng) -> Self {
        let basis = MonomialBasis::cell(mesh, cell, k);
        let coef = (0..mesh.dim()).map(|_| (0..basis.len()).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        PolyField { basis, coef }
    }

    fn u(&self, x: Point) -> Point {
        eval_coef(&self.basis, &self.coef, x)
    }

    fn curl(&self, x: Point) -> Point {
        let mut g = vec![[0.0; 3]; self.basis.len()];
        self.basis.eval_grad(x, &mut g);
        let mut out = [0.0; 3];
        for (a, cf) in self.coef.iter().enumerate() {
            for (c, gm) in cf.iter().zip(&g) {
                out = geometry::add(out, geometry::scale(geometry::cross(*gm, unit(a)), *c));
            }
        }
        out
    }

    fn curlcurl(&self, x: Point) -> Point {
        let mut h = vec![[0.0; 9]; self.basis.len()];
        self.basis.eval_hessian(x, &mut h);
        let mut out = [0.0; 3];
        for (a, cf) in self.coef.iter().enumerate() {
            for (c, hm) in cf.iter().zip(&h) {
                let lap = hm[0] + hm[4] + hm[8];
                for (d, o) in out.iter_mut().enumerate() {
                    *o += c * (hm[3 * d + a] - if a == d { lap } else { 0.0 });
                }
            }
        }
        out
    }
}

#[test]
fn commutes_with_projection_on_every_family() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for family in MeshFamily::ALL {
        let mesh = generate(family, 1).unwrap();
        let cell = mesh.num_cells() - 1;
        for k in [2, 3] {
            let layout = SpaceLayout::new(&mesh, k).unwrap();
            let deg = default_degrees(&mesh, cell, k).unwrap();
            let ops = CellOperators::new(&mesh, &layout, cell, deg).unwrap();
            let cc = LocalWeakOperator { degree: deg.r1, basis: ops.basis.clone(), matrix: ops.curlcurl.clone() };
            let gr = LocalWeakOperator { degree: deg.r2, basis: ops.basis.clone(), matrix: ops.grad.clone() };
            let pts = sample_points(&mesh, cell);
            for _ in 0..3 {
                let w = PolyField::random(&mesh, cell, k, &mut rng);
                let (u, c) = (|x| w.u(x), |x| w.curl(x));
                let qh = interpolate_v(&mesh, &layout, 0, FieldV { u: &u, curl: &c }).unwrap();
                let loc: Vec<f64> = layout.local_v_dofs(&mesh, cell).iter().map(|&g| qh[g]).collect();
                for x in &pts {
                    let a = cc.eval(&loc, *x, mesh.dim());
                    let b = w.curlcurl(*x);
                    assert!(geometry::dist(a, b) < 1e-9 * geometry::norm(b).max(1.0), "{family} k={k}: {a:?} {b:?}");
                }
                let sb = MonomialBasis::cell(&mesh, cell, k);
                let sc: Vec<f64> = (0..sb.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let sigma = |x: Point| sb.values(x).iter().zip(&sc).map(|(a, b)| a * b).sum::<f64>();
                let qs = interpolate_w(&mesh, &layout, 0, &sigma).unwrap();
                let loc: Vec<f64> = layout.local_w_dofs(&mesh, cell).iter().map(|&g| qs[g]).collect();
                let mut g = vec![[0.0; 3]; sb.len()];
                for x in &pts {
                    sb.eval_grad(*x, &mut g);
                    let exact = g.iter().zip(&sc).fold([0.0; 3], |acc, (gm, c)| geometry::add(acc, geometry::scale(*gm, *c)));
                    let a = gr.eval(&loc, *x, mesh.dim());
                    assert!(geometry::dist(a, exact) < 1e-9 * geometry::norm(exact).max(1.0), "{family} k={k}: {a:?} {exact:?}");
                }
            }
        }
    }
}

fn kernel_dim(g: &faer::Mat<f64>) -> usize {
    let s = g.singular_values().unwrap();
    g.ncols() - s.iter().filter(|v| **v > 1e-10 * s[0]).count()
}

// On a triangle with k = 2 the kernel of the exact curl-curl on V_h is the
// 10-dimensional {grad P3} + span{(-y, x)}; a lower r1 leaves extra modes.
#[test]
fn curlcurl_kernel_needs_the_full_degree() {
    let mesh = generate(MeshFamily::CrisscrossTri2d, 1).unwrap();
    let layout = SpaceLayout::new(&mesh, 2).unwrap();
    let full = CellOperators::new(&mesh, &layout, 0, default_degrees(&mesh, 0, 2).unwrap()).unwrap();
    assert_eq!(kernel_dim(&full.curlcurl), 10);
    let low = CellOperators::new(&mesh, &layout, 0, Degrees { r1: 3, r2: 4 }).unwrap();
    assert!(kernel_dim(&low.curlcurl) > 10);
    assert_eq!(kernel_dim(&full.grad), 1);
}
