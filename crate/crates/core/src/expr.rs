//! Small expression trees for analytic scalar fields on a chart.
//!
//! Expressions evaluate over any [`Real`], so a single description of a
//! conformal factor serves value, finite-difference and exact-derivative
//! queries.

use std::ops::{Add, Div, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::jet::Real;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Expr {
    Const(f64),
    Coord(usize),
    /// `|x - center|^2`
    DistSq(Vec<f64>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, f64),
    Exp(Box<Expr>),
    Ln(Box<Expr>),
    Sqrt(Box<Expr>),
    Sin(Box<Expr>),
    Cos(Box<Expr>),
}

impl Expr {
    pub fn c(v: f64) -> Expr {
        Expr::Const(v)
    }

    pub fn x(i: usize) -> Expr {
        Expr::Coord(i)
    }

    pub fn dist_sq(center: &[f64]) -> Expr {
        Expr::DistSq(center.to_vec())
    }

    /// Euclidean distance to `center`; not differentiable at the center.
    pub fn radius(center: &[f64]) -> Expr {
        Expr::dist_sq(center).sqrt()
    }

    pub fn pow(self, p: f64) -> Expr {
        Expr::Pow(Box::new(self), p)
    }

    pub fn exp(self) -> Expr {
        Expr::Exp(Box::new(self))
    }

    pub fn ln(self) -> Expr {
        Expr::Ln(Box::new(self))
    }

    pub fn sqrt(self) -> Expr {
        Expr::Sqrt(Box::new(self))
    }

    pub fn sin(self) -> Expr {
        Expr::Sin(Box::new(self))
    }

    pub fn cos(self) -> Expr {
        Expr::Cos(Box::new(self))
    }

    pub fn eval<S: Real>(&self, x: &[S]) -> S {
        match self {
            Expr::Const(c) => S::cst(*c),
            Expr::Coord(i) => x[*i].clone(),
            Expr::DistSq(center) => {
                let mut acc = S::cst(0.0);
                for (xi, ci) in x.iter().zip(center) {
                    let d = xi.shift(-ci);
                    acc = acc + d.clone() * d;
                }
                acc
            }
            Expr::Add(a, b) => a.eval(x) + b.eval(x),
            Expr::Sub(a, b) => a.eval(x) - b.eval(x),
            Expr::Mul(a, b) => a.eval(x) * b.eval(x),
            Expr::Div(a, b) => a.eval(x) / b.eval(x),
            Expr::Pow(a, p) => a.eval(x).powf(*p),
            Expr::Exp(a) => a.eval(x).exp(),
            Expr::Ln(a) => a.eval(x).ln(),
            Expr::Sqrt(a) => a.eval(x).sqrt(),
            Expr::Sin(a) => a.eval(x).sin(),
            Expr::Cos(a) => a.eval(x).cos(),
        }
    }

    /// Returns `x ↦ self(offset + scale * x)`.
    pub fn compose_affine(&self, offset: &[f64], scale: f64) -> Expr {
        let rec = |e: &Expr| Box::new(e.compose_affine(offset, scale));
        match self {
            Expr::Const(c) => Expr::Const(*c),
            Expr::Coord(i) => Expr::c(offset[*i]) + Expr::c(scale) * Expr::x(*i),
            Expr::DistSq(center) => {
                let shifted: Vec<f64> = center
                    .iter()
                    .zip(offset)
                    .map(|(c, o)| (c - o) / scale)
                    .collect();
                Expr::c(scale * scale) * Expr::DistSq(shifted)
            }
            Expr::Add(a, b) => Expr::Add(rec(a), rec(b)),
            Expr::Sub(a, b) => Expr::Sub(rec(a), rec(b)),
            Expr::Mul(a, b) => Expr::Mul(rec(a), rec(b)),
            Expr::Div(a, b) => Expr::Div(rec(a), rec(b)),
            Expr::Pow(a, p) => Expr::Pow(rec(a), *p),
            Expr::Exp(a) => Expr::Exp(rec(a)),
            Expr::Ln(a) => Expr::Ln(rec(a)),
            Expr::Sqrt(a) => Expr::Sqrt(rec(a)),
            Expr::Sin(a) => Expr::Sin(rec(a)),
            Expr::Cos(a) => Expr::Cos(rec(a)),
        }
    }
}

macro_rules! binop {
    ($tr:ident, $m:ident, $var:ident) => {
        impl $tr for Expr {
            type Output = Expr;
            fn $m(self, o: Expr) -> Expr {
                Expr::$var(Box::new(self), Box::new(o))
            }
        }
    };
}

binop!(Add, add, Add);
binop!(Sub, sub, Sub);
binop!(Mul, mul, Mul);
binop!(Div, div, Div);

impl Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::c(-1.0) * self
    }
}
