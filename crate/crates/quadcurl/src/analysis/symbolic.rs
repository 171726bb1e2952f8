//! Closed-form differentiation for manufactured solutions.
//!
//! Expressions built from constants, coordinates, sums, products, integer
//! powers and exponentials of affine arguments are normalised to sums of
//! terms `c x^a y^b z^c exp(βx x + βy y + βz z)`. That class is closed under
//! differentiation, so derivatives of any order are exact and two
//! expressions can be compared term by term.

use crate::geometry::Point;
use crate::{Error, Result};
use std::collections::BTreeMap;
use std::fmt;
use std::ops;

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    /// Coordinate `0`, `1` or `2`.
    Var(usize),
    Add(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
    Pow(Box<Expr>, u32),
    Exp(Box<Expr>),
    Sin(Box<Expr>),
    Cos(Box<Expr>),
}

pub fn x() -> Expr {
    Expr::Var(0)
}

pub fn y() -> Expr {
    Expr::Var(1)
}

pub fn z() -> Expr {
    Expr::Var(2)
}

pub fn c(v: f64) -> Expr {
    Expr::Const(v)
}

impl Expr {
    pub fn pow(self, n: u32) -> Expr {
        Expr::Pow(Box::new(self), n)
    }

    pub fn exp(self) -> Expr {
        Expr::Exp(Box::new(self))
    }

    pub fn sin(self) -> Expr {
        Expr::Sin(Box::new(self))
    }

    pub fn cos(self) -> Expr {
        Expr::Cos(Box::new(self))
    }

    pub fn to_polyexp(&self) -> Result<PolyExp> {
        Ok(match self {
            Expr::Const(v) => PolyExp::constant(*v),
            Expr::Var(i) => {
                if *i > 2 {
                    return Err(Error::UnsupportedExpression(format!("coordinate index {i}")));
                }
                PolyExp::var(*i)
            }
            Expr::Add(a, b) => &a.to_polyexp()? + &b.to_polyexp()?,
            Expr::Mul(a, b) => &a.to_polyexp()? * &b.to_polyexp()?,
            Expr::Neg(a) => -&a.to_polyexp()?,
            Expr::Pow(a, n) => a.to_polyexp()?.powi(*n),
            Expr::Exp(a) => PolyExp::exp_affine(&a.to_polyexp()?)?,
            Expr::Sin(_) => return Err(Error::UnsupportedExpression("sin".into())),
            Expr::Cos(_) => return Err(Error::UnsupportedExpression("cos".into())),
        })
    }
}

impl ops::Add for Expr {
    type Output = Expr;
    fn add(self, rhs: Expr) -> Expr {
        Expr::Add(Box::new(self), Box::new(rhs))
    }
}

impl ops::Sub for Expr {
    type Output = Expr;
    fn sub(self, rhs: Expr) -> Expr {
        Expr::Add(Box::new(self), Box::new(Expr::Neg(Box::new(rhs))))
    }
}

impl ops::Mul for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        Expr::Mul(Box::new(self), Box::new(rhs))
    }
}

impl ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::Neg(Box::new(self))
    }
}

/// Exponent rates are keyed by their bit patterns so that terms compare
/// exactly; `-0.0` is folded into `0.0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
struct Term {
    pow: [u32; 3],
    rate: [u64; 3],
}

fn rate_key(r: f64) -> u64 {
    if r == 0.0 {
        0
    } else {
        r.to_bits()
    }
}

impl Term {
    fn rates(&self) -> [f64; 3] {
        self.rate.map(f64::from_bits)
    }
}

/// Sum of `coefficient * monomial * exponential` terms.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PolyExp {
    terms: BTreeMap<Term, f64>,
}

impl PolyExp {
    pub fn zero() -> Self {
        PolyExp::default()
    }

    pub fn constant(v: f64) -> Self {
        let mut p = PolyExp::zero();
        p.push(Term { pow: [0; 3], rate: [0; 3] }, v);
        p
    }

    pub fn var(i: usize) -> Self {
        let mut pow = [0; 3];
        pow[i] = 1;
        let mut p = PolyExp::zero();
        p.push(Term { pow, rate: [0; 3] }, 1.0);
        p
    }

    /// `exp(a)` for an affine `a`.
    pub fn exp_affine(a: &PolyExp) -> Result<Self> {
        let mut c0 = 0.0;
        let mut beta = [0.0; 3];
        for (t, v) in &a.terms {
            let deg: u32 = t.pow.iter().sum();
            if t.rate != [0; 3] || deg > 1 {
                return Err(Error::UnsupportedExpression("exponential of a non-affine argument".into()));
            }
            match t.pow.iter().position(|&p| p == 1) {
                Some(i) => beta[i] = *v,
                None => c0 = *v,
            }
        }
        let mut p = PolyExp::zero();
        p.push(Term { pow: [0; 3], rate: beta.map(rate_key) }, c0.exp());
        Ok(p)
    }

    fn push(&mut self, t: Term, v: f64) {
        if v == 0.0 {
            return;
        }
        let e = self.terms.entry(t).or_insert(0.0);
        *e += v;
        if *e == 0.0 {
            self.terms.remove(&t);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn scale(&self, s: f64) -> PolyExp {
        let mut out = PolyExp::zero();
        for (t, v) in &self.terms {
            out.push(*t, v * s);
        }
        out
    }

    pub fn powi(&self, n: u32) -> PolyExp {
        (0..n).fold(PolyExp::constant(1.0), |acc, _| &acc * self)
    }

    /// `∂/∂x_i`.
    pub fn diff(&self, i: usize) -> PolyExp {
        let mut out = PolyExp::zero();
        for (t, v) in &self.terms {
            if t.pow[i] > 0 {
                let mut pow = t.pow;
                pow[i] -= 1;
                out.push(Term { pow, rate: t.rate }, v * f64::from(t.pow[i]));
            }
            let b = t.rates()[i];
            if b != 0.0 {
                out.push(*t, v * b);
            }
        }
        out
    }

    /// Evaluates with a compensated dot product, so that expanded
    /// polynomials which cancel at a point (e.g. on a boundary where a
    /// factored form vanishes) come out at roundoff of the result, not of
    /// the individual terms.
    pub fn eval(&self, x: Point) -> f64 {
        let mut s = 0.0;
        let mut comp = 0.0;
        for (t, v) in &self.terms {
            let r = t.rates();
            let mut m = 1.0;
            for i in 0..3 {
                if t.pow[i] > 0 {
                    m *= x[i].powi(t.pow[i] as i32);
                }
            }
            let arg = r[0] * x[0] + r[1] * x[1] + r[2] * x[2];
            if arg != 0.0 {
                m *= arg.exp();
            }
            let p = v * m;
            let e = v.mul_add(m, -p);
            let sum = s + p;
            let bp = sum - s;
            let q = (s - (sum - bp)) + (p - bp);
            s = sum;
            comp += q + e;
        }
        s + comp
    }

    /// Whether the expression depends on coordinate `i`.
    pub fn depends_on(&self, i: usize) -> bool {
        self.terms.keys().any(|t| t.pow[i] > 0 || t.rate[i] != 0)
    }
}

impl ops::Add for &PolyExp {
    type Output = PolyExp;
    fn add(self, rhs: &PolyExp) -> PolyExp {
        let mut out = self.clone();
        for (t, v) in &rhs.terms {
            out.push(*t, *v);
        }
        out
    }
}

impl ops::Sub for &PolyExp {
    type Output = PolyExp;
    fn sub(self, rhs: &PolyExp) -> PolyExp {
        let mut out = self.clone();
        for (t, v) in &rhs.terms {
            out.push(*t, -v);
        }
        out
    }
}

impl ops::Mul for &PolyExp {
    type Output = PolyExp;
    fn mul(self, rhs: &PolyExp) -> PolyExp {
        let mut out = PolyExp::zero();
        for (a, va) in &self.terms {
            for (b, vb) in &rhs.terms {
                let (ra, rb) = (a.rates(), b.rates());
                let t = Term {
                    pow: [a.pow[0] + b.pow[0], a.pow[1] + b.pow[1], a.pow[2] + b.pow[2]],
                    rate: [0, 1, 2].map(|i| rate_key(ra[i] + rb[i])),
                };
                out.push(t, va * vb);
            }
        }
        out
    }
}

impl ops::Neg for &PolyExp {
    type Output = PolyExp;
    fn neg(self) -> PolyExp {
        self.scale(-1.0)
    }
}

impl fmt::Display for PolyExp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        const NAMES: [&str; 3] = ["x", "y", "z"];
        for (n, (t, v)) in self.terms.iter().enumerate() {
            if n > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{v}")?;
            for i in 0..3 {
                match t.pow[i] {
                    0 => {}
                    1 => write!(f, "*{}", NAMES[i])?,
                    p => write!(f, "*{}^{p}", NAMES[i])?,
                }
            }
            let r = t.rates();
            if r != [0.0; 3] {
                let args: Vec<String> = (0..3).filter(|&i| r[i] != 0.0).map(|i| format!("{}*{}", r[i], NAMES[i])).collect();
                write!(f, "*exp({})", args.join(" + "))?;
            }
        }
        Ok(())
    }
}

/// A vector field with three symbolic components.
pub type VectorExpr = [PolyExp; 3];

pub fn curl(v: &VectorExpr) -> VectorExpr {
    [
        &v[2].diff(1) - &v[1].diff(2),
        &v[0].diff(2) - &v[2].diff(0),
        &v[1].diff(0) - &v[0].diff(1),
    ]
}

pub fn grad(s: &PolyExp) -> VectorExpr {
    [s.diff(0), s.diff(1), s.diff(2)]
}

pub fn div(v: &VectorExpr) -> PolyExp {
    &(&v[0].diff(0) + &v[1].diff(1)) + &v[2].diff(2)
}

pub fn eval_vector(v: &VectorExpr, x: Point) -> Point {
    [v[0].eval(x), v[1].eval(x), v[2].eval(x)]
}

pub fn to_vector(e: &[Expr; 3]) -> Result<VectorExpr> {
    Ok([e[0].to_polyexp()?, e[1].to_polyexp()?, e[2].to_polyexp()?])
}

/// `f = (curl)^4 u + grad p` in closed form.
pub fn symbolic_rhs(u: &[Expr; 3], p: &Expr) -> Result<VectorExpr> {
    let u = to_vector(u)?;
    let c4 = curl(&curl(&curl(&curl(&u))));
    let g = grad(&p.to_polyexp()?);
    Ok([&c4[0] + &g[0], &c4[1] + &g[1], &c4[2] + &g[2]])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivative_rules() {
        let e = (x().pow(3) * y() + (c(2.0) * x()).exp()).to_polyexp().unwrap();
        let dx = e.diff(0);
        let p = [0.3, -0.7, 0.1];
        let expect = 3.0 * 0.09 * -0.7 + 2.0 * (0.6f64).exp();
        assert!((dx.eval(p) - expect).abs() < 1e-14);
        assert!(e.diff(2).is_zero());
    }

    #[test]
    fn constant_field_has_zero_load() {
        let f = symbolic_rhs(&[c(1.0), c(-2.0), c(3.0)], &c(0.0)).unwrap();
        assert!(f.iter().all(PolyExp::is_zero));
    }

    #[test]
    fn unsupported_nodes_are_rejected() {
        assert!(matches!(x().sin().to_polyexp(), Err(Error::UnsupportedExpression(_))));
        assert!(matches!((x() * y()).exp().to_polyexp(), Err(Error::UnsupportedExpression(_))));
    }

    #[test]
    fn exponential_field_reproduces_itself() {
        let u = [y().exp(), z().exp(), x().exp()];
        let f = symbolic_rhs(&u, &c(0.0)).unwrap();
        assert_eq!(f, to_vector(&u).unwrap());
        let cc = curl(&curl(&to_vector(&u).unwrap()));
        assert_eq!(cc, to_vector(&[-y().exp(), -z().exp(), -x().exp()]).unwrap());
    }

    #[test]
    fn planar_rotation_of_stream_function() {
        // u = rot φ gives curl⁴ u = rot(Δ²φ)
        let phi = (x().pow(2) * y().pow(3) - x().pow(4) * y()).to_polyexp().unwrap();
        let u = [phi.diff(1), -&phi.diff(0), PolyExp::zero()];
        let c4 = curl(&curl(&curl(&curl(&u))));
        let lap = |s: &PolyExp| &s.diff(0).diff(0) + &s.diff(1).diff(1);
        let bi = lap(&lap(&phi));
        assert_eq!(c4[0], bi.diff(1));
        assert_eq!(c4[1], -&bi.diff(0));
        assert!(div(&u).is_zero());
    }
}
