//! Forward-mode second-order jets.
//!
//! A [`Jet2`] carries a value together with its gradient and Hessian with
//! respect to a fixed set of chart coordinates. Every field in the crate is
//! evaluated through the [`Real`] trait, so the same code path yields plain
//! values (`f64`) or exact first and second derivatives (`Jet2`).

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

/// Scalar arithmetic shared by `f64` and [`Jet2`].
pub trait Real:
    Clone
    + Debug
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn cst(c: f64) -> Self;
    fn val(&self) -> f64;

    /// Applies a scalar function whose value and first two derivatives at
    /// `self.val()` are `f0`, `f1`, `f2`.
    fn chain(&self, f0: f64, f1: f64, f2: f64) -> Self;

    fn scale(&self, c: f64) -> Self {
        self.chain(c * self.val(), c, 0.0)
    }

    fn shift(&self, c: f64) -> Self {
        self.chain(self.val() + c, 1.0, 0.0)
    }

    fn powf(&self, p: f64) -> Self {
        let v = self.val();
        self.chain(
            v.powf(p),
            p * v.powf(p - 1.0),
            p * (p - 1.0) * v.powf(p - 2.0),
        )
    }

    fn recip(&self) -> Self {
        let v = self.val();
        self.chain(1.0 / v, -1.0 / (v * v), 2.0 / (v * v * v))
    }

    fn sqrt(&self) -> Self {
        let v = self.val();
        let s = v.sqrt();
        self.chain(s, 0.5 / s, -0.25 / (s * v))
    }

    fn exp(&self) -> Self {
        let e = self.val().exp();
        self.chain(e, e, e)
    }

    fn ln(&self) -> Self {
        let v = self.val();
        self.chain(v.ln(), 1.0 / v, -1.0 / (v * v))
    }

    fn sin(&self) -> Self {
        let (s, c) = self.val().sin_cos();
        self.chain(s, c, -s)
    }

    fn cos(&self) -> Self {
        let (s, c) = self.val().sin_cos();
        self.chain(c, -s, -c)
    }

    fn sinh(&self) -> Self {
        let v = self.val();
        self.chain(v.sinh(), v.cosh(), v.sinh())
    }

    fn cosh(&self) -> Self {
        let v = self.val();
        self.chain(v.cosh(), v.sinh(), v.cosh())
    }
}

impl Real for f64 {
    fn cst(c: f64) -> Self {
        c
    }
    fn val(&self) -> f64 {
        *self
    }
    fn chain(&self, f0: f64, _f1: f64, _f2: f64) -> Self {
        f0
    }
    fn scale(&self, c: f64) -> Self {
        self * c
    }
    fn shift(&self, c: f64) -> Self {
        self + c
    }
    fn powf(&self, p: f64) -> Self {
        f64::powf(*self, p)
    }
    fn recip(&self) -> Self {
        1.0 / self
    }
    fn sqrt(&self) -> Self {
        f64::sqrt(*self)
    }
    fn exp(&self) -> Self {
        f64::exp(*self)
    }
    fn ln(&self) -> Self {
        f64::ln(*self)
    }
    fn sin(&self) -> Self {
        f64::sin(*self)
    }
    fn cos(&self) -> Self {
        f64::cos(*self)
    }
    fn sinh(&self) -> Self {
        f64::sinh(*self)
    }
    fn cosh(&self) -> Self {
        f64::cosh(*self)
    }
}

/// Value, gradient and Hessian of a scalar with respect to `n` coordinates.
///
/// Constants carry empty derivative buffers, which are read as zeros.
#[derive(Clone, Debug, PartialEq)]
pub struct Jet2 {
    v: f64,
    g: Vec<f64>,
    h: Vec<f64>,
}

impl Jet2 {
    /// The coordinate function `x_i` at the value `x`.
    pub fn var(x: f64, i: usize, n: usize) -> Self {
        let mut g = vec![0.0; n];
        g[i] = 1.0;
        Jet2 {
            v: x,
            g,
            h: vec![0.0; n * n],
        }
    }

    /// Seeds all coordinates of a point.
    pub fn point(x: &[f64]) -> Vec<Jet2> {
        let n = x.len();
        x.iter()
            .enumerate()
            .map(|(i, &xi)| Jet2::var(xi, i, n))
            .collect()
    }

    pub fn value(&self) -> f64 {
        self.v
    }

    pub fn grad(&self, i: usize) -> f64 {
        self.g.get(i).copied().unwrap_or(0.0)
    }

    pub fn hess(&self, i: usize, j: usize) -> f64 {
        let n = self.g.len();
        if n == 0 {
            0.0
        } else {
            self.h[i * n + j]
        }
    }

    fn dim(&self) -> usize {
        self.g.len()
    }
}

fn zip_add(a: &[f64], b: &[f64], sa: f64, sb: f64) -> Vec<f64> {
    match (a.is_empty(), b.is_empty()) {
        (true, true) => Vec::new(),
        (false, true) => a.iter().map(|x| sa * x).collect(),
        (true, false) => b.iter().map(|x| sb * x).collect(),
        (false, false) => a.iter().zip(b).map(|(x, y)| sa * x + sb * y).collect(),
    }
}

impl Real for Jet2 {
    fn cst(c: f64) -> Self {
        Jet2 {
            v: c,
            g: Vec::new(),
            h: Vec::new(),
        }
    }

    fn val(&self) -> f64 {
        self.v
    }

    fn chain(&self, f0: f64, f1: f64, f2: f64) -> Self {
        let n = self.dim();
        if n == 0 {
            return Jet2::cst(f0);
        }
        let g: Vec<f64> = self.g.iter().map(|x| f1 * x).collect();
        let mut h = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                h[i * n + j] = f1 * self.h[i * n + j] + f2 * self.g[i] * self.g[j];
            }
        }
        Jet2 { v: f0, g, h }
    }
}

impl Add for Jet2 {
    type Output = Jet2;
    fn add(self, o: Jet2) -> Jet2 {
        Jet2 {
            v: self.v + o.v,
            g: zip_add(&self.g, &o.g, 1.0, 1.0),
            h: zip_add(&self.h, &o.h, 1.0, 1.0),
        }
    }
}

impl Sub for Jet2 {
    type Output = Jet2;
    fn sub(self, o: Jet2) -> Jet2 {
        Jet2 {
            v: self.v - o.v,
            g: zip_add(&self.g, &o.g, 1.0, -1.0),
            h: zip_add(&self.h, &o.h, 1.0, -1.0),
        }
    }
}

impl Neg for Jet2 {
    type Output = Jet2;
    fn neg(self) -> Jet2 {
        self.scale(-1.0)
    }
}

impl Mul for Jet2 {
    type Output = Jet2;
    fn mul(self, o: Jet2) -> Jet2 {
        if o.g.is_empty() {
            return self.scale(o.v);
        }
        if self.g.is_empty() {
            return o.scale(self.v);
        }
        let n = self.dim();
        let g = zip_add(&self.g, &o.g, o.v, self.v);
        let mut h = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                let k = i * n + j;
                h[k] = o.v * self.h[k] + self.v * o.h[k] + self.g[i] * o.g[j] + o.g[i] * self.g[j];
            }
        }
        Jet2 {
            v: self.v * o.v,
            g,
            h,
        }
    }
}

impl Div for Jet2 {
    type Output = Jet2;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, o: Jet2) -> Jet2 {
        self * o.recip()
    }
}
