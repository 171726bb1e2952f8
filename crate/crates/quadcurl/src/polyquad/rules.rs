//! Gauss-Jacobi rules and collapsed-coordinate rules on reference simplices.

use faer::{Mat, Side};
use std::collections::HashMap;
use std::sync::{Arc, LazyLock, Mutex};

/// Nodes and weights on `[-1, 1]` for the weight `(1-x)^alpha (1+x)^beta`.
///
/// Nodes come from the eigenvalues of the Jacobi matrix and are then
/// polished by Newton's method; weights use the derivative formula and are
/// normalised to the exact weight integral.
pub fn gauss_jacobi(n: usize, alpha: u32, beta: u32) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let (a, b) = (f64::from(alpha), f64::from(beta));
    let mut jm = Mat::<f64>::zeros(n, n);
    for j in 0..n {
        let jf = j as f64;
        let s = 2.0 * jf + a + b;
        jm[(j, j)] = if j == 0 { (b - a) / (a + b + 2.0) } else { (b * b - a * a) / (s * (s + 2.0)) };
        if j + 1 < n {
            let k = jf + 1.0;
            let s = 2.0 * k + a + b;
            let num = 4.0 * k * (k + a) * (k + b) * (k + a + b);
            let den = s * s * (s + 1.0) * (s - 1.0);
            let off = (num / den).sqrt();
            jm[(j + 1, j)] = off;
            jm[(j, j + 1)] = off;
        }
    }
    let mut nodes = jm
        .self_adjoint_eigenvalues(Side::Lower)
        .expect("symmetric tridiagonal eigenproblem converges");
    let mut weights = Vec::with_capacity(n);
    for x in nodes.iter_mut() {
        for _ in 0..3 {
            let (p, dp, _) = jacobi_p(n, a, b, *x);
            *x -= p / dp;
        }
        let (_, dp, _) = jacobi_p(n, a, b, *x);
        weights.push(1.0 / ((1.0 - *x * *x) * dp * dp));
    }
    let total: f64 = weights.iter().sum();
    let mu0 = 2f64.powi((alpha + beta + 1) as i32) * factorial(alpha) * factorial(beta)
        / factorial(alpha + beta + 1);
    for w in &mut weights {
        *w *= mu0 / total;
    }
    (nodes, weights)
}

/// `P_n^(a,b)(x)`, its derivative and `P_{n-1}^(a,b)(x)`.
fn jacobi_p(n: usize, a: f64, b: f64, x: f64) -> (f64, f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = 0.5 * ((a + b + 2.0) * x + (a - b));
    if n == 1 {
        return (p1, 0.5 * (a + b + 2.0), p0);
    }
    for k in 2..=n {
        let k = k as f64;
        let s = 2.0 * k + a + b;
        let c1 = 2.0 * k * (k + a + b) * (s - 2.0);
        let c2 = (s - 1.0) * (s * (s - 2.0) * x + a * a - b * b);
        let c3 = 2.0 * (k + a - 1.0) * (k + b - 1.0) * s;
        let p2 = (c2 * p1 - c3 * p0) / c1;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let s = 2.0 * nf + a + b;
    let dp = (nf * (a - b - s * x) * p1 + 2.0 * (nf + a) * (nf + b) * p0) / (s * (1.0 - x * x));
    (p1, dp, p0)
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// Reference rule: points in barycentric-free reference coordinates (the
/// unit segment, triangle or tetrahedron with a vertex at the origin).
#[derive(Debug, Clone)]
pub struct ReferenceRule {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Shape {
    Segment,
    Triangle,
    Tetrahedron,
}

static CACHE: LazyLock<Mutex<HashMap<(Shape, usize), Arc<ReferenceRule>>>> =
    LazyLock::new(|| Mutex::new(HashMap::new()));

/// Rule on the reference simplex integrating polynomials of total degree
/// `exactness` exactly, using `ceil((exactness+1)/2)` points per direction.
pub fn reference_rule(shape: Shape, exactness: usize) -> Arc<ReferenceRule> {
    let key = (shape, exactness);
    if let Some(r) = CACHE.lock().expect("cache lock").get(&key) {
        return Arc::clone(r);
    }
    let rule = Arc::new(build(shape, exactness));
    CACHE.lock().expect("cache lock").insert(key, Arc::clone(&rule));
    rule
}

fn build(shape: Shape, exactness: usize) -> ReferenceRule {
    let n = exactness / 2 + 1;
    let (gx, gw) = gauss_jacobi(n, 0, 0);
    let mut points = Vec::new();
    let mut weights = Vec::new();
    match shape {
        Shape::Segment => {
            for (x, w) in gx.iter().zip(&gw) {
                points.push([0.5 * (1.0 + x), 0.0, 0.0]);
                weights.push(0.5 * w);
            }
        }
        Shape::Triangle => {
            let (jx, jw) = gauss_jacobi(n, 1, 0);
            for (u, wu) in gx.iter().zip(&gw) {
                for (v, wv) in jx.iter().zip(&jw) {
                    points.push([0.25 * (1.0 + u) * (1.0 - v), 0.5 * (1.0 + v), 0.0]);
                    weights.push(wu * wv / 8.0);
                }
            }
        }
        Shape::Tetrahedron => {
            let (jx1, jw1) = gauss_jacobi(n, 1, 0);
            let (jx2, jw2) = gauss_jacobi(n, 2, 0);
            for (a, wa) in gx.iter().zip(&gw) {
                for (b, wb) in jx1.iter().zip(&jw1) {
                    for (c, wc) in jx2.iter().zip(&jw2) {
                        points.push([
                            0.125 * (1.0 + a) * (1.0 - b) * (1.0 - c),
                            0.25 * (1.0 + b) * (1.0 - c),
                            0.5 * (1.0 + c),
                        ]);
                        weights.push(wa * wb * wc / 64.0);
                    }
                }
            }
        }
    }
    ReferenceRule { points, weights }
}
