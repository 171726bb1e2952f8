use super::symbolic::{c, curl, div, eval_vector, grad, symbolic_rhs, to_vector, x, y, z, Expr, PolyExp, VectorExpr};
use crate::geometry::{self, Point};
use crate::weakops::FieldV;
use crate::wgsystem::Problem;
use crate::{Error, Result};

/// Exact solution `(u, p)` of a quad-curl problem together with the
/// derivatives needed by the discretisation and the error analysis.
///
/// Planar solutions are stored as three-component fields with a zero third
/// component, so `curl u` is `(0, 0, scalar curl)`.
#[derive(Debug, Clone)]
pub struct ManufacturedSolution {
    name: String,
    dim: usize,
    u: VectorExpr,
    curl_u: VectorExpr,
    curlcurl_u: VectorExpr,
    curl3_u: VectorExpr,
    p: PolyExp,
    grad_p: VectorExpr,
    f: VectorExpr,
}

pub const NAMES: [&str; 2] = ["e1-2d", "e3-3d"];

impl ManufacturedSolution {
    pub fn new(name: impl Into<String>, dim: usize, u: [Expr; 3], p: Expr) -> Result<Self> {
        let f = symbolic_rhs(&u, &p)?;
        let u = to_vector(&u)?;
        let p = p.to_polyexp()?;
        if dim == 2 && (!u[2].is_zero() || u.iter().chain([&p]).any(|e| e.depends_on(2))) {
            return Err(Error::InvalidConfig("a planar solution must not depend on z or have a z-component".into()));
        }
        let curl_u = curl(&u);
        let curlcurl_u = curl(&curl_u);
        let curl3_u = curl(&curlcurl_u);
        let grad_p = grad(&p);
        Ok(ManufacturedSolution { name: name.into(), dim, u, curl_u, curlcurl_u, curl3_u, p, grad_p, f })
    }

    /// `u = rot ψ` with `ψ = 2^8 (x - x²)^3 (y - y²)^3`, `p = 0`. All
    /// boundary traces vanish on the unit square.
    pub fn e1_2d() -> Self {
        let psi = c(256.0) * (x() - x().pow(2)).pow(3) * (y() - y().pow(2)).pow(3);
        let psi = psi.to_polyexp().expect("polynomial");
        let u = [psi.diff(1), -&psi.diff(0), PolyExp::zero()];
        Self::from_parts("e1-2d", 2, u, PolyExp::zero())
    }

    /// `u = (e^y, e^z, e^x)`, `p = 0`, with non-zero boundary traces.
    pub fn e3_3d() -> Self {
        Self::new("e3-3d", 3, [y().exp(), z().exp(), x().exp()], c(0.0)).expect("supported expression")
    }

    /// Identically zero solution in `dim` dimensions.
    pub fn zero(dim: usize) -> Self {
        Self::from_parts("zero", dim, [PolyExp::zero(), PolyExp::zero(), PolyExp::zero()], PolyExp::zero())
    }

    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "e1-2d" => Ok(Self::e1_2d()),
            "e3-3d" => Ok(Self::e3_3d()),
            _ => Err(Error::InvalidConfig(format!("unknown solution `{name}`, expected one of {NAMES:?}"))),
        }
    }

    fn from_parts(name: &str, dim: usize, u: VectorExpr, p: PolyExp) -> Self {
        let curl_u = curl(&u);
        let curlcurl_u = curl(&curl_u);
        let curl3_u = curl(&curlcurl_u);
        let c4 = curl(&curl3_u);
        let grad_p = grad(&p);
        let f = [&c4[0] + &grad_p[0], &c4[1] + &grad_p[1], &c4[2] + &grad_p[2]];
        ManufacturedSolution { name: name.into(), dim, u, curl_u, curlcurl_u, curl3_u, p, grad_p, f }
    }

    /// The same solution multiplied by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        let sv = |v: &VectorExpr| v.clone().map(|e| e.scale(s));
        ManufacturedSolution {
            name: format!("{}*{s}", self.name),
            dim: self.dim,
            u: sv(&self.u),
            curl_u: sv(&self.curl_u),
            curlcurl_u: sv(&self.curlcurl_u),
            curl3_u: sv(&self.curl3_u),
            p: self.p.scale(s),
            grad_p: sv(&self.grad_p),
            f: sv(&self.f),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn load_expr(&self) -> &VectorExpr {
        &self.f
    }

    pub fn u_expr(&self) -> &VectorExpr {
        &self.u
    }

    pub fn u(&self, x: Point) -> Point {
        eval_vector(&self.u, x)
    }

    pub fn curl(&self, x: Point) -> Point {
        eval_vector(&self.curl_u, x)
    }

    pub fn curlcurl(&self, x: Point) -> Point {
        eval_vector(&self.curlcurl_u, x)
    }

    pub fn curl3(&self, x: Point) -> Point {
        eval_vector(&self.curl3_u, x)
    }

    pub fn p(&self, x: Point) -> f64 {
        self.p.eval(x)
    }

    pub fn grad_p(&self, x: Point) -> Point {
        eval_vector(&self.grad_p, x)
    }

    pub fn f(&self, x: Point) -> Point {
        eval_vector(&self.f, x)
    }

    pub fn divergence(&self, x: Point) -> f64 {
        div(&self.u).eval(x)
    }

    /// Boundary traces `(u × n, (curl u) × n)` at `x` for unit normal `n`.
    pub fn traces(&self, x: Point, n: Point) -> (Point, Point) {
        (geometry::cross(self.u(x), n), geometry::cross(self.curl(x), n))
    }

    /// Runs `body` with the problem data and the `(u, curl u)` pair.
    pub fn with_problem<R>(&self, body: impl FnOnce(Problem<'_>, FieldV<'_>) -> R) -> R {
        let load = |x: Point| self.f(x);
        let u = |x: Point| self.u(x);
        let curl = |x: Point| self.curl(x);
        let field = FieldV { u: &u, curl: &curl };
        body(Problem { load: &load, boundary: Some(field) }, field)
    }
}
