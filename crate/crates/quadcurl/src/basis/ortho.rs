//! Orthonormal polynomial basis on a cell by block Arnoldi.
//!
//! Monomial mass matrices are hopeless at the degrees needed on non-convex
//! cells (condition numbers well beyond 1e16). Instead every new function of
//! degree `d` starts as `y_i * ψ_parent` for a degree `d-1` function, is
//! orthogonalised twice against all previous functions in the discrete inner
//! product of an exact quadrature rule, and orthonormalised within its degree
//! block by QR. The recurrence coefficients are stored so the basis (and its
//! gradient) can be evaluated anywhere.

use super::exponents;
use crate::geometry::{self, Point};
use crate::polyquad::QuadratureRule;
use crate::{Error, Result};
use faer::Mat;
use std::collections::HashMap;

#[derive(Debug, Clone)]
struct BlockStep {
    /// Columns of this block.
    start: usize,
    len: usize,
    /// `(parent column, variable)` of each candidate.
    seeds: Vec<(usize, usize)>,
    h1: Mat<f64>,
    r1_inv: Mat<f64>,
    h2: Mat<f64>,
    r2_inv: Mat<f64>,
}

#[derive(Debug, Clone)]
pub struct OrthoBasis {
    dim: usize,
    degree: usize,
    center: Point,
    inv_scale: f64,
    c0: f64,
    steps: Vec<BlockStep>,
    /// Values at the construction rule's points, row per point.
    values: Mat<f64>,
}

impl OrthoBasis {
    /// Builds an orthonormal basis of `P_degree` on a cell of dimension `dim`
    /// with respect to `rule`, which must be exact to degree `2*degree`.
    pub fn new(
        dim: usize,
        degree: usize,
        center: Point,
        scale: f64,
        rule: &QuadratureRule,
        cell: usize,
    ) -> Result<Self> {
        let nq = rule.len();
        let exps = exponents(dim, degree);
        let index: HashMap<[u8; 3], usize> = exps.iter().enumerate().map(|(i, e)| (*e, i)).collect();
        let inv_scale = 1.0 / scale;
        let sqrt_w: Vec<f64> = rule.weights.iter().map(|w| w.sqrt()).collect();
        let y: Vec<[f64; 3]> = rule
            .points
            .iter()
            .map(|p| geometry::scale(geometry::sub(*p, center), inv_scale))
            .collect();
        let measure: f64 = rule.weights.iter().sum();
        let c0 = 1.0 / measure.sqrt();
        // weighted values: row q scaled by sqrt(w_q), orthonormal columns
        let mut vt = Mat::<f64>::zeros(nq, exps.len());
        for q in 0..nq {
            vt[(q, 0)] = c0 * sqrt_w[q];
        }
        let mut steps = Vec::with_capacity(degree);
        let mut start = 1;
        for d in 1..=degree {
            let len = super::dim_p(dim, d) - start;
            let seeds: Vec<(usize, usize)> = exps[start..start + len]
                .iter()
                .map(|e| {
                    let var = (0..dim).find(|&v| e[v] > 0).expect("degree >= 1");
                    let mut parent = *e;
                    parent[var] -= 1;
                    (index[&parent], var)
                })
                .collect();
            let mut c = Mat::<f64>::from_fn(nq, len, |q, j| {
                let (p, v) = seeds[j];
                y[q][v] * vt[(q, p)]
            });
            let prev = vt.subcols(0, start);
            let h1 = prev.transpose() * &c;
            c -= prev * &h1;
            let (q1, r1_inv) = orthonormalise(&c).ok_or(Error::BasisRankDeficient { cell, degree: d })?;
            let h2 = prev.transpose() * &q1;
            let mut c2 = q1;
            c2 -= prev * &h2;
            let (q2, r2_inv) = orthonormalise(&c2).ok_or(Error::BasisRankDeficient { cell, degree: d })?;
            vt.subcols_mut(start, len).copy_from(&q2);
            steps.push(BlockStep { start, len, seeds, h1, r1_inv, h2, r2_inv });
            start += len;
        }
        let values = Mat::from_fn(nq, exps.len(), |q, j| vt[(q, j)] / sqrt_w[q]);
        Ok(OrthoBasis { dim, degree, center, inv_scale, c0, steps, values })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.values.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Number of functions spanning `P_degree`; the basis is nested by degree.
    pub fn len_for_degree(&self, degree: usize) -> usize {
        super::dim_p(self.dim, degree.min(self.degree))
    }

    /// Values at the construction rule's points (row per point).
    pub fn rule_values(&self) -> &Mat<f64> {
        &self.values
    }

    /// Values at arbitrary points, row per point.
    pub fn eval(&self, points: &[Point]) -> Mat<f64> {
        self.eval_impl(points, false).0
    }

    /// Values and the three partial derivatives at arbitrary points.
    pub fn eval_with_grad(&self, points: &[Point]) -> (Mat<f64>, [Mat<f64>; 3]) {
        let (v, g) = self.eval_impl(points, true);
        (v, g.expect("gradients requested"))
    }

    fn eval_impl(&self, points: &[Point], grad: bool) -> (Mat<f64>, Option<[Mat<f64>; 3]>) {
        let np = points.len();
        let n = self.len();
        let y: Vec<[f64; 3]> = points
            .iter()
            .map(|p| geometry::scale(geometry::sub(*p, self.center), self.inv_scale))
            .collect();
        let mut v = Mat::<f64>::zeros(np, n);
        for q in 0..np {
            v[(q, 0)] = self.c0;
        }
        let nd = if grad { self.dim } else { 0 };
        let mut g: Vec<Mat<f64>> = (0..nd).map(|_| Mat::<f64>::zeros(np, n)).collect();
        for s in &self.steps {
            let prev_v = v.subcols(0, s.start);
            let mut c = Mat::<f64>::from_fn(np, s.len, |q, j| {
                let (p, var) = s.seeds[j];
                y[q][var] * prev_v[(q, p)]
            });
            let mut cg: Vec<Mat<f64>> = (0..nd)
                .map(|k| {
                    Mat::<f64>::from_fn(np, s.len, |q, j| {
                        let (p, var) = s.seeds[j];
                        let own = if var == k { self.inv_scale * v[(q, p)] } else { 0.0 };
                        own + y[q][var] * g[k][(q, p)]
                    })
                })
                .collect();
            apply_step(&mut c, v.subcols(0, s.start), s);
            for (k, ck) in cg.iter_mut().enumerate() {
                apply_step(ck, g[k].subcols(0, s.start), s);
            }
            v.subcols_mut(s.start, s.len).copy_from(&c);
            for (k, ck) in cg.iter().enumerate() {
                g[k].subcols_mut(s.start, s.len).copy_from(ck);
            }
        }
        if !grad {
            return (v, None);
        }
        let zero = || Mat::<f64>::zeros(np, n);
        let mut it = g.into_iter();
        let gx = it.next().unwrap_or_else(zero);
        let gy = it.next().unwrap_or_else(zero);
        let gz = it.next().unwrap_or_else(zero);
        (v, Some([gx, gy, gz]))
    }
}

fn apply_step(c: &mut Mat<f64>, prev: faer::MatRef<'_, f64>, s: &BlockStep) {
    *c -= prev * &s.h1;
    let mut t = &*c * &s.r1_inv;
    t -= prev * &s.h2;
    *c = &t * &s.r2_inv;
}

/// Thin QR of `c`; returns `Q` and `R^{-1}`, or `None` if `c` is rank deficient.
fn orthonormalise(c: &Mat<f64>) -> Option<(Mat<f64>, Mat<f64>)> {
    let m = c.ncols();
    let qr = c.qr();
    let r = qr.thin_R().to_owned();
    let scale = (0..m).map(|j| r[(j, j)].abs()).fold(0.0, f64::max);
    if (0..m).any(|j| !(r[(j, j)].abs() > 1e-11 * scale.max(1e-300))) {
        return None;
    }
    Some((qr.compute_thin_Q(), upper_inverse(&r)))
}

fn upper_inverse(r: &Mat<f64>) -> Mat<f64> {
    let m = r.nrows();
    let mut inv = Mat::<f64>::zeros(m, m);
    for j in 0..m {
        inv[(j, j)] = 1.0 / r[(j, j)];
        for i in (0..j).rev() {
            let s: f64 = (i + 1..=j).map(|k| r[(i, k)] * inv[(k, j)]).sum();
            inv[(i, j)] = -s / r[(i, i)];
        }
    }
    inv
}
