use super::{curl_dirs, tangent_dirs, Degrees, SpaceLayout};
use crate::basis::{MonomialBasis, OrthoBasis};
use crate::geometry::{self, Point};
use crate::polymesh::PolytopalMesh;
use crate::polyquad::{cell_quadrature, face_quadrature, QuadratureRule};
use crate::Result;
use faer::Mat;

/// Everything the assembly needs from one cell.
///
/// Weak functions in the target spaces are represented by their
/// coefficients in `basis`, which is orthonormal on the cell, so each weak
/// operator matrix is directly the matrix of its defining functional.
#[derive(Debug, Clone)]
pub struct CellOperators {
    pub cell: usize,
    pub degrees: Degrees,
    pub basis: OrthoBasis,
    /// Rule on which `basis` is orthonormal (exactness `2 max(r1, r2)`).
    pub rule: QuadratureRule,
    pub mono: MonomialBasis,
    /// Weak curl-curl: rows `(c, i)` -> `c * n(r1) + i`, columns local `V`.
    pub curlcurl: Mat<f64>,
    /// Weak gradient: rows `(c, i)` -> `c * n(r2) + i`, columns local `W`.
    pub grad: Mat<f64>,
    /// `(φ_m, ψ_i)_T` for `φ_m ∈ P_k` monomials and `ψ_i`, `i < n(r2)`.
    pub cross_mass: Mat<f64>,
    pub n_r1: usize,
    pub n_r2: usize,
}

impl CellOperators {
    pub fn new(mesh: &PolytopalMesh, layout: &SpaceLayout, cell: usize, degrees: Degrees) -> Result<Self> {
        let dim = mesh.dim();
        let k = layout.k;
        let rmax = degrees.max();
        let g = mesh.cell_geometry(cell);
        let rule = cell_quadrature(mesh, cell, 2 * rmax)?;
        let basis = OrthoBasis::new(dim, rmax, g.centroid, g.diameter, &rule, cell)?;
        let mono = MonomialBasis::cell(mesh, cell, k);
        let n_r1 = basis.len_for_degree(degrees.r1);
        let n_r2 = basis.len_for_degree(degrees.r2);
        let nk = mono.len();
        let faces = mesh.cell_faces(cell);
        let v_len = layout.v_cell_len() + faces.len() * layout.v_face_len();
        let w_len = nk + faces.len() * layout.nke;
        let psi = basis.rule_values();
        let nq = rule.len();

        // cell terms: (curl curl v0, q) and (grad σ0, ψ)
        let mut phi = Mat::<f64>::zeros(nq, nk);
        let mut dphi: [Mat<f64>; 3] = std::array::from_fn(|_| Mat::zeros(nq, nk));
        let mut ccphi: [Mat<f64>; 3] = std::array::from_fn(|_| Mat::zeros(nq, dim * nk));
        let mut vals = vec![0.0; nk];
        let mut grads = vec![[0.0; 3]; nk];
        let mut hess = vec![[0.0; 9]; nk];
        for (q, (x, w)) in rule.points.iter().zip(&rule.weights).enumerate() {
            mono.eval(*x, &mut vals);
            mono.eval_grad(*x, &mut grads);
            mono.eval_hessian(*x, &mut hess);
            for m in 0..nk {
                phi[(q, m)] = vals[m] * w;
                for c in 0..dim {
                    dphi[c][(q, m)] = grads[m][c] * w;
                }
                let h = &hess[m];
                let lap = h[0] + h[4] + h[8];
                for a in 0..dim {
                    for c in 0..dim {
                        let delta = if a == c { lap } else { 0.0 };
                        ccphi[c][(q, a * nk + m)] = (h[3 * c + a] - delta) * w;
                    }
                }
            }
        }
        let psi1 = psi.subcols(0, n_r1);
        let psi2 = psi.subcols(0, n_r2);
        let mut curlcurl = Mat::<f64>::zeros(dim * n_r1, v_len);
        let mut grad = Mat::<f64>::zeros(dim * n_r2, w_len);
        for c in 0..dim {
            curlcurl
                .submatrix_mut(c * n_r1, 0, n_r1, dim * nk)
                .copy_from(psi1.transpose() * &ccphi[c]);
            grad.submatrix_mut(c * n_r2, 0, n_r2, nk).copy_from(psi2.transpose() * &dphi[c]);
        }
        let cross_mass = phi.transpose() * psi2;

        for (j, sf) in faces.iter().enumerate() {
            let frame = mesh.signed_frame(*sf);
            let n = frame.normal;
            let frule = face_quadrature(mesh, sf.face, k + rmax)?;
            let nf = frule.len();
            let (fv, fg) = basis.eval_with_grad(&frule.points);
            let fk = MonomialBasis::face(mesh, sf.face, k);
            let fk1 = MonomialBasis::face(mesh, sf.face, k - 1);
            let tdirs = tangent_dirs(mesh, sf.face);
            let cdirs = curl_dirs(mesh, sf.face);
            let vb0 = layout.v_cell_len() + j * layout.v_face_len();
            let sb0 = nk + j * layout.nke;

            // Σ_q w (curl q)·V_dof = Σ_k Σ_q w ∂_k ψ (e_c × V_dof)_k
            // Σ_q w q·U_dof         = Σ_q w ψ (U_dof)_c
            let mut mv: Vec<[Mat<f64>; 3]> =
                (0..dim).map(|_| std::array::from_fn(|_| Mat::zeros(nf, v_len))).collect();
            let mut nu: Vec<Mat<f64>> = (0..dim).map(|_| Mat::zeros(nf, v_len)).collect();
            let mut gs = Mat::<f64>::zeros(nf, w_len);
            let mut ek = vec![0.0; fk.len()];
            let mut ek1 = vec![0.0; fk1.len()];
            for (q, (x, w)) in frule.points.iter().zip(&frule.weights).enumerate() {
                mono.eval(*x, &mut vals);
                mono.eval_grad(*x, &mut grads);
                fk.eval(*x, &mut ek);
                fk1.eval(*x, &mut ek1);
                let mut put = |col: usize, v: Point, u: Point| {
                    for c in 0..dim {
                        let ec = unit(c);
                        let ecv = geometry::cross(ec, v);
                        for kk in 0..3 {
                            mv[c][kk][(q, col)] += w * ecv[kk];
                        }
                        nu[c][(q, col)] += w * u[c];
                    }
                };
                for a in 0..dim {
                    let ea_n = geometry::cross(unit(a), n);
                    for m in 0..nk {
                        let curl_phi = geometry::cross(grads[m], unit(a));
                        put(a * nk + m, geometry::scale(ea_n, vals[m]), geometry::cross(curl_phi, n));
                    }
                }
                for (t, d) in tdirs.iter().enumerate() {
                    let dn = geometry::cross(*d, n);
                    for (m, e) in ek.iter().enumerate() {
                        put(vb0 + layout.vb_offset(t) + m, geometry::scale(dn, -e), [0.0; 3]);
                    }
                }
                for (t, d) in cdirs.iter().enumerate() {
                    let dn = geometry::cross(*d, n);
                    for (m, e) in ek1.iter().enumerate() {
                        put(vb0 + layout.vn_offset(t) + m, [0.0; 3], geometry::scale(dn, -e));
                    }
                }
                for m in 0..nk {
                    gs[(q, m)] -= w * vals[m];
                }
                for (m, e) in ek.iter().enumerate() {
                    gs[(q, sb0 + m)] += w * e;
                }
            }
            let fv1 = fv.subcols(0, n_r1);
            for c in 0..dim {
                let mut block = fv1.transpose() * &nu[c];
                for kk in 0..dim {
                    block += fg[kk].subcols(0, n_r1).transpose() * &mv[c][kk];
                }
                let mut dst = curlcurl.submatrix_mut(c * n_r1, 0, n_r1, v_len);
                dst += &block;
                let mut gdst = grad.submatrix_mut(c * n_r2, 0, n_r2, w_len);
                gdst += fv.subcols(0, n_r2).transpose() * &gs * faer::Scale(n[c]);
            }
        }
        Ok(CellOperators { cell, degrees, basis, rule, mono, curlcurl, grad, cross_mass, n_r1, n_r2 })
    }

    /// `A_T = G^T G` for the weak curl-curl, exactly symmetric.
    pub fn stiffness(&self) -> Mat<f64> {
        symmetric_gram(&self.curlcurl, 1.0)
    }

    /// `C_T = h_T^4 (∇_w p, ∇_w q)_T`, exactly symmetric.
    pub fn penalty(&self, h4: f64) -> Mat<f64> {
        symmetric_gram(&self.grad, h4)
    }

    /// `b_T(v, q) = (v0, ∇_w q)_T`: rows are the local `v0` unknowns, columns
    /// the local `W` unknowns.
    pub fn coupling(&self, dim: usize) -> Mat<f64> {
        let nk = self.mono.len();
        let w_len = self.grad.ncols();
        let mut b = Mat::<f64>::zeros(dim * nk, w_len);
        for a in 0..dim {
            b.submatrix_mut(a * nk, 0, nk, w_len)
                .copy_from(&self.cross_mass * self.grad.submatrix(a * self.n_r2, 0, self.n_r2, w_len));
        }
        b
    }
}

fn unit(c: usize) -> Point {
    let mut e = [0.0; 3];
    e[c] = 1.0;
    e
}

fn symmetric_gram(g: &Mat<f64>, s: f64) -> Mat<f64> {
    let a = g.transpose() * g;
    let n = a.nrows();
    Mat::from_fn(n, n, |i, j| s * 0.5 * (a[(i, j)] + a[(j, i)]))
}

/// A weak operator on one cell: `matrix` maps local unknowns to coefficients
/// in the first `dim * n` functions of `basis` (component-major).
#[derive(Debug, Clone)]
pub struct LocalWeakOperator {
    pub degree: usize,
    pub basis: OrthoBasis,
    pub matrix: Mat<f64>,
}

impl LocalWeakOperator {
    /// Evaluates the weak function with local unknowns `dofs` at `x`.
    pub fn eval(&self, dofs: &[f64], x: Point, dim: usize) -> Point {
        self.eval_many(dofs, &[x], dim)[0]
    }

    /// [`eval`](Self::eval) at many points, forming the coefficients once.
    pub fn eval_many(&self, dofs: &[f64], points: &[Point], dim: usize) -> Vec<Point> {
        let n = self.basis.len_for_degree(self.degree);
        let coef: Vec<f64> = (0..dim * n)
            .map(|r| dofs.iter().enumerate().map(|(j, d)| self.matrix[(r, j)] * d).sum())
            .collect();
        let psi = self.basis.eval(points);
        (0..points.len())
            .map(|q| {
                let mut out = [0.0; 3];
                for (c, o) in out.iter_mut().enumerate().take(dim) {
                    *o = (0..n).map(|i| coef[c * n + i] * psi[(q, i)]).sum();
                }
                out
            })
            .collect()
    }
}

/// Discrete weak curl-curl on `cell` with target degree `r1`.
pub fn weak_curlcurl_operator(mesh: &PolytopalMesh, cell: usize, k: usize, r1: usize) -> Result<LocalWeakOperator> {
    let layout = SpaceLayout::new(mesh, k)?;
    let ops = CellOperators::new(mesh, &layout, cell, Degrees { r1, r2: r1 })?;
    Ok(LocalWeakOperator { degree: r1, basis: ops.basis, matrix: ops.curlcurl })
}

/// Discrete weak gradient on `cell` with target degree `r2`.
pub fn weak_gradient_operator(mesh: &PolytopalMesh, cell: usize, k: usize, r2: usize) -> Result<LocalWeakOperator> {
    let layout = SpaceLayout::new(mesh, k)?;
    let ops = CellOperators::new(mesh, &layout, cell, Degrees { r1: r2, r2 })?;
    Ok(LocalWeakOperator { degree: r2, basis: ops.basis, matrix: ops.grad })
}
