use super::ManufacturedSolution;
use crate::basis::MonomialBasis;
use crate::geometry::{self, Point};
use crate::par::map_cells;
use crate::polymesh::PolytopalMesh;
use crate::polyquad::{cell_quadrature, face_quadrature};
use crate::weakops::{curl_dirs, degrees, interpolate_v, interpolate_w, tangent_dirs, CellOperators, FieldV, SpaceLayout};
use crate::wgsystem::{AssemblyOptions, DofMap};
use crate::Result;
use faer::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Errors of one discrete solution against the exact one.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Errors {
    /// `||u - u0||`.
    pub l2_u: f64,
    /// `|||Q_h u - u_h|||` plus the curl-curl projection defect.
    pub energy: f64,
    /// `||p - p0||`.
    pub l2_p: f64,
    /// `|||Q_h p - p_h|||` in the weighted weak-gradient norm.
    pub energy_p: f64,
    /// `||Q_h u - u_h||_{2,h}`.
    pub disc_2h: f64,
    /// `||Q_h p - p_h||_{1,h}`.
    pub disc_1h: f64,
}

fn unit(c: usize) -> Point {
    let mut e = [0.0; 3];
    e[c] = 1.0;
    e
}

fn gather(global: &[f64], idx: &[usize]) -> Vec<f64> {
    idx.iter().map(|&g| global[g]).collect()
}

fn matvec(m: &Mat<f64>, x: &[f64]) -> Vec<f64> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)] * x[j]).sum()).collect()
}

fn quad_form(m: &Mat<f64>, x: &[f64]) -> f64 {
    matvec(m, x).iter().zip(x).map(|(a, b)| a * b).sum()
}

fn sum_sq(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

/// Accumulates `Σ w r r^T` from weighted rows.
struct Gram {
    rows: Vec<(f64, Vec<f64>)>,
    n: usize,
}

impl Gram {
    fn new(n: usize) -> Self {
        Gram { rows: Vec::new(), n }
    }

    fn row(&mut self, w: f64) -> &mut Vec<f64> {
        self.rows.push((w, vec![0.0; self.n]));
        &mut self.rows.last_mut().expect("just pushed").1
    }

    fn finish(self) -> Mat<f64> {
        let r = Mat::from_fn(self.rows.len(), self.n, |i, j| self.rows[i].1[j]);
        let wr = Mat::from_fn(self.rows.len(), self.n, |i, j| self.rows[i].0 * self.rows[i].1[j]);
        let g = r.transpose() * wr;
        Mat::from_fn(self.n, self.n, |i, j| 0.5 * (g[(i, j)] + g[(j, i)]))
    }
}

/// Matrix of `||v||_{2,h}^2` restricted to one cell, acting on local `V`
/// unknowns.
pub(crate) fn disc_2h_gram(mesh: &PolytopalMesh, layout: &SpaceLayout, ops: &CellOperators) -> Result<Mat<f64>> {
    let dim = mesh.dim();
    let k = layout.k;
    let mono = &ops.mono;
    let nk = mono.len();
    let h = mesh.cell_geometry(ops.cell).diameter;
    let faces = mesh.cell_faces(ops.cell);
    let mut gram = Gram::new(ops.curlcurl.ncols());
    let mut hess = vec![[0.0; 9]; nk];
    let rule = cell_quadrature(mesh, ops.cell, 2 * k)?;
    for (x, w) in rule.points.iter().zip(&rule.weights) {
        mono.eval_hessian(*x, &mut hess);
        for c in 0..dim {
            let row = gram.row(*w);
            for a in 0..dim {
                for (m, hm) in hess.iter().enumerate() {
                    let lap = hm[0] + hm[4] + hm[8];
                    row[a * nk + m] = hm[3 * c + a] - if a == c { lap } else { 0.0 };
                }
            }
        }
    }
    let mut vals = vec![0.0; nk];
    let mut grads = vec![[0.0; 3]; nk];
    for (j, sf) in faces.iter().enumerate() {
        let fk = MonomialBasis::face(mesh, sf.face, k);
        let fk1 = MonomialBasis::face(mesh, sf.face, k - 1);
        let base = layout.v_cell_len() + j * layout.v_face_len();
        let frule = face_quadrature(mesh, sf.face, 2 * k)?;
        for (x, w) in frule.points.iter().zip(&frule.weights) {
            mono.eval(*x, &mut vals);
            mono.eval_grad(*x, &mut grads);
            let ek = fk.values(*x);
            let ek1 = fk1.values(*x);
            for (t, d) in tangent_dirs(mesh, sf.face).iter().enumerate() {
                let row = gram.row(w / h.powi(3));
                for a in 0..dim {
                    for m in 0..nk {
                        row[a * nk + m] = vals[m] * d[a];
                    }
                }
                for (m, e) in ek.iter().enumerate() {
                    row[base + layout.vb_offset(t) + m] = -e;
                }
            }
            for (t, d) in curl_dirs(mesh, sf.face).iter().enumerate() {
                let row = gram.row(w / h);
                for a in 0..dim {
                    for m in 0..nk {
                        row[a * nk + m] = geometry::dot(geometry::cross(grads[m], unit(a)), *d);
                    }
                }
                for (m, e) in ek1.iter().enumerate() {
                    row[base + layout.vn_offset(t) + m] = -e;
                }
            }
        }
    }
    Ok(gram.finish())
}

/// Matrix of `||σ||_{1,h}^2` restricted to one cell.
pub(crate) fn disc_1h_gram(mesh: &PolytopalMesh, layout: &SpaceLayout, ops: &CellOperators) -> Result<Mat<f64>> {
    let dim = mesh.dim();
    let k = layout.k;
    let mono = &ops.mono;
    let nk = mono.len();
    let h = mesh.cell_geometry(ops.cell).diameter;
    let mut gram = Gram::new(ops.grad.ncols());
    let mut grads = vec![[0.0; 3]; nk];
    let rule = cell_quadrature(mesh, ops.cell, 2 * k)?;
    for (x, w) in rule.points.iter().zip(&rule.weights) {
        mono.eval_grad(*x, &mut grads);
        for c in 0..dim {
            let row = gram.row(w * h.powi(4));
            for (m, g) in grads.iter().enumerate() {
                row[m] = g[c];
            }
        }
    }
    let mut vals = vec![0.0; nk];
    for (j, sf) in mesh.cell_faces(ops.cell).iter().enumerate() {
        let fk = MonomialBasis::face(mesh, sf.face, k);
        let base = nk + j * layout.nke;
        let frule = face_quadrature(mesh, sf.face, 2 * k)?;
        for (x, w) in frule.points.iter().zip(&frule.weights) {
            mono.eval(*x, &mut vals);
            let row = gram.row(w * h.powi(3));
            row[..nk].copy_from_slice(&vals);
            for (m, e) in fk.values(*x).iter().enumerate() {
                row[base + m] = -e;
            }
        }
    }
    Ok(gram.finish())
}

/// Coefficients of the L2 projection of a vector field onto the first `n`
/// functions of the cell's orthonormal basis, component-major.
fn project_ortho(ops: &CellOperators, dim: usize, n: usize, points: &[Point], weights: &[f64], field: impl Fn(Point) -> Point) -> Vec<f64> {
    let psi = ops.basis.eval(points);
    let mut coef = vec![0.0; dim * n];
    for (q, (x, w)) in points.iter().zip(weights).enumerate() {
        let f = field(*x);
        for c in 0..dim {
            for i in 0..n {
                coef[c * n + i] += w * f[c] * psi[(q, i)];
            }
        }
    }
    coef
}

fn eval_ortho(psi_row: impl Fn(usize) -> f64, coef: &[f64], dim: usize, n: usize) -> Point {
    let mut out = [0.0; 3];
    for (c, o) in out.iter_mut().enumerate().take(dim) {
        *o = (0..n).map(|i| coef[c * n + i] * psi_row(i)).sum();
    }
    out
}

fn v0_at(mono: &MonomialBasis, loc: &[f64], dim: usize, x: Point) -> Point {
    let vals = mono.values(x);
    let nk = vals.len();
    let mut out = [0.0; 3];
    for (a, o) in out.iter_mut().enumerate().take(dim) {
        *o = (0..nk).map(|m| loc[a * nk + m] * vals[m]).sum();
    }
    out
}

struct CellErrors {
    l2_u: f64,
    energy_h: f64,
    defect: f64,
    l2_p: f64,
    energy_p: f64,
    disc_2h: f64,
    disc_1h: f64,
}

/// Errors of `(u_h, p_h)` (full `V_h` and `W_h` vectors) against `exact`.
pub fn compute_errors(
    mesh: &PolytopalMesh,
    opts: &AssemblyOptions,
    exact: &ManufacturedSolution,
    u_h: &[f64],
    p_h: &[f64],
) -> Result<Errors> {
    let layout = SpaceLayout::new(mesh, opts.k)?;
    let dim = mesh.dim();
    let (uf, cf) = (|x: Point| exact.u(x), |x: Point| exact.curl(x));
    let pf = |x: Point| exact.p(x);
    let qu = interpolate_v(mesh, &layout, opts.boost, FieldV { u: &uf, curl: &cf })?;
    let qp = interpolate_w(mesh, &layout, opts.boost, &pf)?;
    let cells: Vec<usize> = (0..mesh.num_cells()).collect();
    let per_cell = map_cells(&cells, |cell| {
        let deg = degrees(mesh, cell, opts.k, opts.degree_mode)?;
        let ops = CellOperators::new(mesh, &layout, cell, deg)?;
        let h = mesh.cell_geometry(cell).diameter;
        let vd = layout.local_v_dofs(mesh, cell);
        let wd = layout.local_w_dofs(mesh, cell);
        let e: Vec<f64> = vd.iter().map(|&g| qu[g] - u_h[g]).collect();
        let eps: Vec<f64> = wd.iter().map(|&g| qp[g] - p_h[g]).collect();

        let energy_h = sum_sq(&matvec(&ops.curlcurl, &e));
        let prj = cell_quadrature(mesh, cell, 2 * deg.max() + 2 + 2 * opts.boost)?;
        let coef = project_ortho(&ops, dim, ops.n_r1, &prj.points, &prj.weights, |x| exact.curlcurl(x));
        let psi = ops.basis.eval(&prj.points);
        let mut defect = 0.0;
        for (q, (x, w)) in prj.points.iter().zip(&prj.weights).enumerate() {
            let qw = eval_ortho(|i| psi[(q, i)], &coef, dim, ops.n_r1);
            defect += w * geometry::dist(qw, exact.curlcurl(*x)).powi(2);
        }

        let rule = cell_quadrature(mesh, cell, 2 * opts.k + 2 + 2 * opts.boost)?;
        let uh_loc = gather(u_h, &vd[..layout.v_cell_len()]);
        let ph_loc = gather(p_h, &wd[..layout.nk]);
        let mut l2_u = 0.0;
        let mut l2_p = 0.0;
        for (x, w) in rule.points.iter().zip(&rule.weights) {
            l2_u += w * geometry::dist(exact.u(*x), v0_at(&ops.mono, &uh_loc, dim, *x)).powi(2);
            let p0: f64 = ops.mono.values(*x).iter().zip(&ph_loc).map(|(a, b)| a * b).sum();
            l2_p += w * (exact.p(*x) - p0).powi(2);
        }
        let energy_p = h.powi(4) * sum_sq(&matvec(&ops.grad, &eps));
        let disc_2h = quad_form(&disc_2h_gram(mesh, &layout, &ops)?, &e);
        let disc_1h = quad_form(&disc_1h_gram(mesh, &layout, &ops)?, &eps);
        Ok(CellErrors { l2_u, energy_h, defect, l2_p, energy_p, disc_2h, disc_1h })
    })?;
    let total = |f: fn(&CellErrors) -> f64| per_cell.iter().map(f).sum::<f64>().max(0.0).sqrt();
    Ok(Errors {
        l2_u: total(|c| c.l2_u),
        energy: total(|c| c.energy_h) + total(|c| c.defect),
        l2_p: total(|c| c.l2_p),
        energy_p: total(|c| c.energy_p),
        disc_2h: total(|c| c.disc_2h),
        disc_1h: total(|c| c.disc_1h),
    })
}

/// Largest violations of the two error equations over the unit vectors of
/// `V_h^0` and `W_h^0`, with the norm of the assembled load for scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorEquationResidual {
    pub res_v: f64,
    pub res_w: f64,
    pub load_norm: f64,
}

/// Evaluates `a(e_h, v) + b(v, ε_h) - ℓ1(u, v)` and
/// `c(ε_h, q) - b(e_h, q) + ℓ2(u, q)` with `e_h = u - u_h`, `ε_h = p - p_h`.
/// The weak operators of the exact fields are taken as the projections
/// `Q^{r1}(curl curl u)` and `Q^{r2}(grad p)`, and `b(u, q)` as `(u, ∇_w q)`,
/// all integrated at exactness `2 max(r1, r2) + 2 + 2 boost`.
pub fn error_equation_residual(
    mesh: &PolytopalMesh,
    opts: &AssemblyOptions,
    exact: &ManufacturedSolution,
    u_h: &[f64],
    p_h: &[f64],
) -> Result<ErrorEquationResidual> {
    let layout = SpaceLayout::new(mesh, opts.k)?;
    let dofs = DofMap::new(mesh, layout);
    let dim = mesh.dim();
    let k = opts.k;
    let cells: Vec<usize> = (0..mesh.num_cells()).collect();
    let locals = map_cells(&cells, |cell| {
        let deg = degrees(mesh, cell, k, opts.degree_mode)?;
        let ops = CellOperators::new(mesh, &layout, cell, deg)?;
        let h = mesh.cell_geometry(cell).diameter;
        let nk = ops.mono.len();
        let (n1, n2) = (ops.n_r1, ops.n_r2);
        let vd = layout.local_v_dofs(mesh, cell);
        let wd = layout.local_w_dofs(mesh, cell);
        let uh = gather(u_h, &vd);
        let ph = gather(p_h, &wd);
        let ex = 2 * deg.max() + 2 + 2 * opts.boost;
        let prj = cell_quadrature(mesh, cell, ex)?;
        let cw = project_ortho(&ops, dim, n1, &prj.points, &prj.weights, |x| exact.curlcurl(x));
        let gp = project_ortho(&ops, dim, n2, &prj.points, &prj.weights, |x| exact.grad_p(x));
        let du = project_ortho(&ops, dim, n2, &prj.points, &prj.weights, |x| {
            let v = v0_at(&ops.mono, &uh, dim, x);
            geometry::sub(exact.u(x), v)
        });
        let uc = project_ortho(&ops, dim, n2, &prj.points, &prj.weights, |x| exact.u(x));

        // a(e_h, v) = (Q cc u - G u_h, G v)
        let gu = matvec(&ops.curlcurl, &uh);
        let da: Vec<f64> = cw.iter().zip(&gu).map(|(a, b)| a - b).collect();
        let mut rv = vec![0.0; vd.len()];
        for (j, r) in rv.iter_mut().enumerate() {
            *r = (0..da.len()).map(|i| ops.curlcurl[(i, j)] * da[i]).sum();
        }
        // b(v, ε_h) = (v0, Q grad p - ∇_w p_h)
        let gph = matvec(&ops.grad, &ph);
        let de: Vec<f64> = gp.iter().zip(&gph).map(|(a, b)| a - b).collect();
        for a in 0..dim {
            for m in 0..nk {
                rv[a * nk + m] += (0..n2).map(|i| ops.cross_mass[(m, i)] * de[a * n2 + i]).sum::<f64>();
            }
        }
        // c(ε_h, q) - b(e_h, q)
        let mut rw = vec![0.0; wd.len()];
        for (j, r) in rw.iter_mut().enumerate() {
            *r = (0..dim * n2).map(|i| ops.grad[(i, j)] * (h.powi(4) * de[i] - du[i])).sum();
        }

        let mut vals = vec![0.0; nk];
        let mut grads = vec![[0.0; 3]; nk];
        for (j, sf) in mesh.cell_faces(cell).iter().enumerate() {
            let n = mesh.signed_frame(*sf).normal;
            let frule = face_quadrature(mesh, sf.face, ex)?;
            let (psi, dpsi) = ops.basis.eval_with_grad(&frule.points);
            let fk = MonomialBasis::face(mesh, sf.face, k);
            let fk1 = MonomialBasis::face(mesh, sf.face, k - 1);
            let vb0 = layout.v_cell_len() + j * layout.v_face_len();
            let wb0 = nk + j * layout.nke;
            for (q, (x, w)) in frule.points.iter().zip(&frule.weights).enumerate() {
                ops.mono.eval(*x, &mut vals);
                ops.mono.eval_grad(*x, &mut grads);
                let ek = fk.values(*x);
                let ek1 = fk1.values(*x);
                let qw = eval_ortho(|i| psi[(q, i)], &cw, dim, n1);
                let mut curl_qw = [0.0; 3];
                for c in 0..dim {
                    for i in 0..n1 {
                        let g = [dpsi[0][(q, i)], dpsi[1][(q, i)], dpsi[2][(q, i)]];
                        curl_qw = geometry::add(curl_qw, geometry::scale(geometry::cross(g, unit(c)), cw[c * n1 + i]));
                    }
                }
                let alpha = geometry::cross(n, geometry::sub(curl_qw, exact.curl3(*x)));
                let beta = geometry::cross(n, geometry::sub(qw, exact.curlcurl(*x)));
                // ℓ1 = <v0 - v_b, α> + <curl v0 - v_n, β>
                for a in 0..dim {
                    for m in 0..nk {
                        let cphi = geometry::cross(grads[m], unit(a));
                        rv[a * nk + m] -= w * (vals[m] * alpha[a] + geometry::dot(cphi, beta));
                    }
                }
                for (t, d) in tangent_dirs(mesh, sf.face).iter().enumerate() {
                    let s = geometry::dot(*d, alpha);
                    for (m, e) in ek.iter().enumerate() {
                        rv[vb0 + layout.vb_offset(t) + m] += w * e * s;
                    }
                }
                for (t, d) in curl_dirs(mesh, sf.face).iter().enumerate() {
                    let s = geometry::dot(*d, beta);
                    for (m, e) in ek1.iter().enumerate() {
                        rv[vb0 + layout.vn_offset(t) + m] += w * e * s;
                    }
                }
                // ℓ2 = <q0 - q_b, (I - Q^{r2}) u · n>
                let qu = eval_ortho(|i| psi[(q, i)], &uc, dim, n2);
                let defect = geometry::dot(geometry::sub(exact.u(*x), qu), n);
                for m in 0..nk {
                    rw[m] += w * vals[m] * defect;
                }
                for (m, e) in ek.iter().enumerate() {
                    rw[wb0 + m] -= w * e * defect;
                }
            }
        }

        let rule = cell_quadrature(mesh, cell, 2 * k + 2 + 2 * opts.boost)?;
        let mut load = vec![0.0; dim * nk];
        for (x, w) in rule.points.iter().zip(&rule.weights) {
            let f = exact.f(*x);
            ops.mono.eval(*x, &mut vals);
            for a in 0..dim {
                for m in 0..nk {
                    load[a * nk + m] += w * f[a] * vals[m];
                }
            }
        }
        Ok((vd, wd, rv, rw, load))
    })?;
    let mut gv = vec![0.0; layout.v_len()];
    let mut gw = vec![0.0; layout.w_len()];
    let mut load_sq = 0.0;
    for (vd, wd, rv, rw, load) in locals {
        for (g, r) in vd.iter().zip(rv) {
            gv[*g] += r;
        }
        for (g, r) in wd.iter().zip(rw) {
            gw[*g] += r;
        }
        load_sq += sum_sq(&load);
    }
    let free_max = |vals: &[f64], row: &dyn Fn(usize) -> Option<usize>| {
        vals.iter().enumerate().filter(|(g, _)| row(*g).is_some()).fold(0.0f64, |m, (_, v)| m.max(v.abs()))
    };
    Ok(ErrorEquationResidual {
        res_v: free_max(&gv, &|g| dofs.v_row(g)),
        res_w: free_max(&gw, &|g| dofs.w_row(g)),
        load_norm: load_sq.sqrt(),
    })
}

/// Observed range of `|||v||| / ||v||_{2,h}` over random `v ∈ V_h^0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormRatio {
    pub min: f64,
    pub max: f64,
}

pub fn norm_equivalence_probe(mesh: &PolytopalMesh, opts: &AssemblyOptions, n_samples: usize, seed: u64) -> Result<NormRatio> {
    let layout = SpaceLayout::new(mesh, opts.k)?;
    let dofs = DofMap::new(mesh, layout);
    let cells: Vec<usize> = (0..mesh.num_cells()).collect();
    let grams = map_cells(&cells, |cell| {
        let deg = degrees(mesh, cell, opts.k, opts.degree_mode)?;
        let ops = CellOperators::new(mesh, &layout, cell, deg)?;
        Ok((layout.local_v_dofs(mesh, cell), ops.stiffness(), disc_2h_gram(mesh, &layout, &ops)?))
    })?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = NormRatio { min: f64::INFINITY, max: 0.0 };
    let mut drawn = 0;
    while drawn < n_samples.max(1) {
        let v: Vec<f64> =
            (0..layout.v_len()).map(|g| if dofs.v_row(g).is_some() { rng.gen_range(-1.0..1.0) } else { 0.0 }).collect();
        let (mut num, mut den) = (0.0, 0.0);
        for (vd, a, g) in &grams {
            let loc = gather(&v, vd);
            num += quad_form(a, &loc);
            den += quad_form(g, &loc);
        }
        if den <= 0.0 {
            continue;
        }
        let r = (num.max(0.0) / den).sqrt();
        out.min = out.min.min(r);
        out.max = out.max.max(r);
        drawn += 1;
    }
    Ok(out)
}
