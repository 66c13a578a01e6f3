//! Second-order jets: value, gradient and Hessian of a scalar function of a
//! handful of variables, propagated through arithmetic by the chain rule.
//!
//! A jet carries an `order` telling how many derivative levels are still
//! exact. Seeded variables and constants start at order 2; taking a partial
//! derivative with [`Jet::partial`] drops one level. Binary operations keep
//! the smaller order of their operands, so a quantity built from first
//! derivatives of the metric (Christoffel symbols, say) can be differentiated
//! once more but not twice.

use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

/// Maximum number of independent variables a jet can track.
pub const MAX_VARS: usize = 4;

/// Highest derivative order tracked.
pub const MAX_ORDER: u8 = 2;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet {
    order: u8,
    nvars: u8,
    v: f64,
    g: [f64; MAX_VARS],
    h: [[f64; MAX_VARS]; MAX_VARS],
}

impl Default for Jet {
    fn default() -> Self {
        Jet::constant(0.0)
    }
}

impl From<f64> for Jet {
    fn from(v: f64) -> Self {
        Jet::constant(v)
    }
}

impl Jet {
    /// A constant: all derivatives exactly zero.
    pub const fn constant(v: f64) -> Self {
        Jet {
            order: MAX_ORDER,
            nvars: 0,
            v,
            g: [0.0; MAX_VARS],
            h: [[0.0; MAX_VARS]; MAX_VARS],
        }
    }

    /// The `index`-th of `nvars` independent variables, evaluated at `v`.
    pub fn variable(v: f64, index: usize, nvars: usize) -> Self {
        assert!(nvars <= MAX_VARS, "jet supports at most {MAX_VARS} variables");
        assert!(index < nvars);
        let mut j = Jet::constant(v);
        j.nvars = nvars as u8;
        j.g[index] = 1.0;
        j
    }

    /// Seeds `values.len()` variables at once.
    pub fn seed(values: &[f64]) -> Vec<Jet> {
        values
            .iter()
            .enumerate()
            .map(|(i, &v)| Jet::variable(v, i, values.len()))
            .collect()
    }

    /// Builds a jet from explicit parts. `hess` must be symmetric.
    pub fn from_parts(value: f64, grad: &[f64], hess: &[Vec<f64>], order: u8) -> Self {
        let n = grad.len();
        assert!(n <= MAX_VARS);
        let mut j = Jet::constant(value);
        j.nvars = n as u8;
        j.order = order.min(MAX_ORDER);
        j.g[..n].copy_from_slice(grad);
        if j.order >= 2 {
            for a in 0..n {
                for b in 0..n {
                    j.h[a][b] = hess[a][b];
                }
            }
        }
        j
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.v
    }

    #[inline]
    pub fn order(&self) -> u8 {
        self.order
    }

    #[inline]
    pub fn nvars(&self) -> usize {
        self.nvars as usize
    }

    /// ∂/∂x_i at the expansion point.
    #[inline]
    pub fn grad(&self, i: usize) -> f64 {
        debug_assert!(self.order >= 1, "gradient of an order-0 jet");
        self.g[i]
    }

    /// ∂²/∂x_i∂x_j at the expansion point.
    #[inline]
    pub fn hess(&self, i: usize, j: usize) -> f64 {
        debug_assert!(self.order >= 2, "Hessian of an order-{} jet", self.order);
        self.h[i][j]
    }

    pub fn gradient(&self) -> Vec<f64> {
        self.g[..self.nvars()].to_vec()
    }

    pub fn hessian(&self) -> Vec<Vec<f64>> {
        let n = self.nvars();
        (0..n).map(|i| self.h[i][..n].to_vec()).collect()
    }

    /// True when at least one first derivative is tracked and nonzero-capable.
    pub fn has_derivatives(&self) -> bool {
        self.nvars > 0 && self.order > 0
    }

    /// Partial derivative with respect to variable `i`, one order lower.
    pub fn partial(&self, i: usize) -> Jet {
        assert!(self.order >= 1, "cannot differentiate an order-0 jet");
        let mut out = Jet::constant(0.0);
        out.nvars = self.nvars;
        out.order = self.order - 1;
        if i >= self.nvars() {
            return out;
        }
        out.v = self.g[i];
        if out.order >= 1 {
            out.g = self.h[i];
        }
        out
    }

    /// Truncates to at most `order`.
    pub fn truncate(mut self, order: u8) -> Jet {
        self.order = self.order.min(order);
        self
    }

    /// Drops every derivative, keeping only the value as a constant.
    pub fn detach(&self) -> Jet {
        Jet::constant(self.v)
    }

    /// Composes this jet (a function of `inner.len()` variables, expanded at
    /// the values of `inner`) with `inner`, giving a jet over the variables
    /// of `inner`. Requires this jet to be at least as exact as the result.
    pub fn compose(&self, inner: &[Jet]) -> Jet {
        let mut out = Jet::constant(self.v);
        if self.nvars == 0 {
            return out.truncate(self.order);
        }
        if self.order == 0 {
            return out.truncate(0);
        }
        let n = self.nvars();
        assert!(inner.len() >= n);
        out.order = self.order.min(min_order(inner));
        out.nvars = inner.iter().map(|j| j.nvars).max().unwrap_or(0);
        let m = out.nvars();
        for l in 0..n {
            let d = self.g[l];
            for a in 0..m {
                out.g[a] += d * inner[l].g[a];
            }
        }
        if out.order >= 2 {
            for a in 0..m {
                for b in 0..m {
                    let mut s = 0.0;
                    for l in 0..n {
                        s += self.g[l] * inner[l].h[a][b];
                        for k in 0..n {
                            s += self.h[l][k] * inner[l].g[a] * inner[k].g[b];
                        }
                    }
                    out.h[a][b] = s;
                }
            }
        }
        out
    }

    /// Applies a scalar function given its value and first two derivatives
    /// at `self.value()`.
    #[inline]
    pub fn chain(&self, f0: f64, f1: f64, f2: f64) -> Jet {
        let mut out = *self;
        out.v = f0;
        let n = self.nvars();
        if self.order >= 2 {
            for a in 0..n {
                for b in 0..n {
                    out.h[a][b] = f1 * self.h[a][b] + f2 * self.g[a] * self.g[b];
                }
            }
        }
        if self.order >= 1 {
            for a in 0..n {
                out.g[a] = f1 * self.g[a];
            }
        }
        out
    }

    pub fn sin(&self) -> Jet {
        let (s, c) = self.v.sin_cos();
        self.chain(s, c, -s)
    }

    pub fn cos(&self) -> Jet {
        let (s, c) = self.v.sin_cos();
        self.chain(c, -s, -c)
    }

    pub fn tan(&self) -> Jet {
        let t = self.v.tan();
        let sec2 = 1.0 + t * t;
        self.chain(t, sec2, 2.0 * t * sec2)
    }

    pub fn exp(&self) -> Jet {
        let e = self.v.exp();
        self.chain(e, e, e)
    }

    /// Natural log; the caller guarantees a positive value.
    pub fn ln(&self) -> Jet {
        let x = self.v;
        self.chain(x.ln(), 1.0 / x, -1.0 / (x * x))
    }

    /// Square root; the caller guarantees a positive value when derivatives
    /// are tracked.
    pub fn sqrt(&self) -> Jet {
        let r = self.v.sqrt();
        if !self.has_derivatives() {
            return self.chain(r, 0.0, 0.0);
        }
        self.chain(r, 0.5 / r, -0.25 / (r * self.v))
    }

    pub fn sinh(&self) -> Jet {
        let (s, c) = (self.v.sinh(), self.v.cosh());
        self.chain(s, c, s)
    }

    pub fn cosh(&self) -> Jet {
        let (s, c) = (self.v.sinh(), self.v.cosh());
        self.chain(c, s, c)
    }

    pub fn tanh(&self) -> Jet {
        let t = self.v.tanh();
        let d = 1.0 - t * t;
        self.chain(t, d, -2.0 * t * d)
    }

    pub fn atan(&self) -> Jet {
        let x = self.v;
        let d = 1.0 / (1.0 + x * x);
        self.chain(x.atan(), d, -2.0 * x * d * d)
    }

    pub fn powi(&self, n: i32) -> Jet {
        let x = self.v;
        match n {
            0 => self.chain(1.0, 0.0, 0.0),
            1 => *self,
            _ => {
                let nf = n as f64;
                self.chain(x.powi(n), nf * x.powi(n - 1), nf * (nf - 1.0) * x.powi(n - 2))
            }
        }
    }

    /// Real power with a constant exponent; the caller guarantees x > 0 when
    /// derivatives are tracked.
    pub fn powf(&self, p: f64) -> Jet {
        let x = self.v;
        if !self.has_derivatives() {
            return self.chain(x.powf(p), 0.0, 0.0);
        }
        self.chain(x.powf(p), p * x.powf(p - 1.0), p * (p - 1.0) * x.powf(p - 2.0))
    }

    pub fn recip(&self) -> Jet {
        let x = self.v;
        let r = 1.0 / x;
        self.chain(r, -r * r, 2.0 * r * r * r)
    }

    pub fn abs_value(&self) -> f64 {
        self.v.abs()
    }
}

fn min_order(js: &[Jet]) -> u8 {
    js.iter().map(|j| j.order).min().unwrap_or(MAX_ORDER)
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.chain(-self.v, -1.0, 0.0)
    }
}

impl Add for Jet {
    type Output = Jet;
    #[inline]
    fn add(self, rhs: Jet) -> Jet {
        let mut out = Jet::constant(self.v + rhs.v);
        out.order = self.order.min(rhs.order);
        out.nvars = self.nvars.max(rhs.nvars);
        let n = out.nvars();
        for a in 0..n {
            out.g[a] = self.g[a] + rhs.g[a];
        }
        if out.order >= 2 {
            for a in 0..n {
                for b in 0..n {
                    out.h[a][b] = self.h[a][b] + rhs.h[a][b];
                }
            }
        }
        out
    }
}

impl Sub for Jet {
    type Output = Jet;
    #[inline]
    fn sub(self, rhs: Jet) -> Jet {
        let mut out = Jet::constant(self.v - rhs.v);
        out.order = self.order.min(rhs.order);
        out.nvars = self.nvars.max(rhs.nvars);
        let n = out.nvars();
        for a in 0..n {
            out.g[a] = self.g[a] - rhs.g[a];
        }
        if out.order >= 2 {
            for a in 0..n {
                for b in 0..n {
                    out.h[a][b] = self.h[a][b] - rhs.h[a][b];
                }
            }
        }
        out
    }
}

impl Mul for Jet {
    type Output = Jet;
    #[inline]
    fn mul(self, rhs: Jet) -> Jet {
        let mut out = Jet::constant(self.v * rhs.v);
        out.order = self.order.min(rhs.order);
        out.nvars = self.nvars.max(rhs.nvars);
        let n = out.nvars();
        if out.order >= 2 {
            for a in 0..n {
                for b in 0..n {
                    out.h[a][b] = self.h[a][b] * rhs.v
                        + self.g[a] * rhs.g[b]
                        + self.g[b] * rhs.g[a]
                        + self.v * rhs.h[a][b];
                }
            }
        }
        for a in 0..n {
            out.g[a] = self.g[a] * rhs.v + self.v * rhs.g[a];
        }
        out
    }
}

impl Div for Jet {
    type Output = Jet;
    #[inline]
    fn div(self, rhs: Jet) -> Jet {
        if !rhs.has_derivatives() {
            return self * Jet::constant(1.0 / rhs.v).truncate(rhs.order);
        }
        self * rhs.recip()
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    #[inline]
    fn mul(self, rhs: f64) -> Jet {
        let mut out = self;
        out.v *= rhs;
        let n = out.nvars();
        for a in 0..n {
            out.g[a] *= rhs;
            for b in 0..n {
                out.h[a][b] *= rhs;
            }
        }
        out
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    #[inline]
    fn add(self, rhs: f64) -> Jet {
        let mut out = self;
        out.v += rhs;
        out
    }
}

impl Sub<f64> for Jet {
    type Output = Jet;
    #[inline]
    fn sub(self, rhs: f64) -> Jet {
        let mut out = self;
        out.v -= rhs;
        out
    }
}

impl AddAssign for Jet {
    fn add_assign(&mut self, rhs: Jet) {
        *self = *self + rhs;
    }
}

impl SubAssign for Jet {
    fn sub_assign(&mut self, rhs: Jet) {
        *self = *self - rhs;
    }
}

impl MulAssign for Jet {
    fn mul_assign(&mut self, rhs: Jet) {
        *self = *self * rhs;
    }
}

impl std::iter::Sum for Jet {
    fn sum<I: Iterator<Item = Jet>>(iter: I) -> Jet {
        iter.fold(Jet::constant(0.0), |a, b| a + b)
    }
}

/// Numbers the expression evaluator can run on.
pub trait Scalar:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn constant(c: f64) -> Self;
    fn value(&self) -> f64;
    /// Whether derivatives ride along; governs domain checks at singular
    /// points such as sqrt(0).
    fn has_derivatives(&self) -> bool;
    fn sin(&self) -> Self;
    fn cos(&self) -> Self;
    fn tan(&self) -> Self;
    fn exp(&self) -> Self;
    fn ln(&self) -> Self;
    fn sqrt(&self) -> Self;
    fn sinh(&self) -> Self;
    fn cosh(&self) -> Self;
    fn tanh(&self) -> Self;
    fn atan(&self) -> Self;
    fn powi(&self, n: i32) -> Self;
    fn powf(&self, p: f64) -> Self;
}

impl Scalar for f64 {
    fn constant(c: f64) -> Self {
        c
    }
    fn value(&self) -> f64 {
        *self
    }
    fn has_derivatives(&self) -> bool {
        false
    }
    fn sin(&self) -> Self {
        f64::sin(*self)
    }
    fn cos(&self) -> Self {
        f64::cos(*self)
    }
    fn tan(&self) -> Self {
        f64::tan(*self)
    }
    fn exp(&self) -> Self {
        f64::exp(*self)
    }
    fn ln(&self) -> Self {
        f64::ln(*self)
    }
    fn sqrt(&self) -> Self {
        f64::sqrt(*self)
    }
    fn sinh(&self) -> Self {
        f64::sinh(*self)
    }
    fn cosh(&self) -> Self {
        f64::cosh(*self)
    }
    fn tanh(&self) -> Self {
        f64::tanh(*self)
    }
    fn atan(&self) -> Self {
        f64::atan(*self)
    }
    fn powi(&self, n: i32) -> Self {
        f64::powi(*self, n)
    }
    fn powf(&self, p: f64) -> Self {
        f64::powf(*self, p)
    }
}

impl Scalar for Jet {
    fn constant(c: f64) -> Self {
        Jet::constant(c)
    }
    fn value(&self) -> f64 {
        self.v
    }
    fn has_derivatives(&self) -> bool {
        Jet::has_derivatives(self)
    }
    fn sin(&self) -> Self {
        Jet::sin(self)
    }
    fn cos(&self) -> Self {
        Jet::cos(self)
    }
    fn tan(&self) -> Self {
        Jet::tan(self)
    }
    fn exp(&self) -> Self {
        Jet::exp(self)
    }
    fn ln(&self) -> Self {
        Jet::ln(self)
    }
    fn sqrt(&self) -> Self {
        Jet::sqrt(self)
    }
    fn sinh(&self) -> Self {
        Jet::sinh(self)
    }
    fn cosh(&self) -> Self {
        Jet::cosh(self)
    }
    fn tanh(&self) -> Self {
        Jet::tanh(self)
    }
    fn atan(&self) -> Self {
        Jet::atan(self)
    }
    fn powi(&self, n: i32) -> Self {
        Jet::powi(self, n)
    }
    fn powf(&self, p: f64) -> Self {
        Jet::powf(self, p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_rule_and_hessian() {
        let xs = Jet::seed(&[3.0, 2.0]);
        let f = xs[0] * xs[0] * xs[1];
        assert_eq!(f.value(), 18.0);
        assert_eq!(f.grad(0), 12.0);
        assert_eq!(f.grad(1), 9.0);
        assert_eq!(f.hess(0, 0), 4.0);
        assert_eq!(f.hess(0, 1), 6.0);
        assert_eq!(f.hess(1, 1), 0.0);
    }

    #[test]
    fn partial_lowers_order() {
        let xs = Jet::seed(&[0.5]);
        let f = xs[0].sin();
        let df = f.partial(0);
        assert_eq!(df.order(), 1);
        assert!((df.value() - 0.5f64.cos()).abs() < 1e-15);
        assert!((df.grad(0) + 0.5f64.sin()).abs() < 1e-15);
        let ddf = df.partial(0);
        assert_eq!(ddf.order(), 0);
    }

    #[test]
    fn mixed_order_takes_minimum() {
        let xs = Jet::seed(&[1.0, 2.0]);
        let a = (xs[0] * xs[1]).partial(0);
        let b = xs[1] * xs[1];
        assert_eq!((a * b).order(), 1);
        assert_eq!((b + b).order(), 2);
    }

    #[test]
    fn compose_matches_direct_expansion() {
        // f(x, y) = x * y expanded at (2, 3); x = u^2, y = sin(u) at u = 0.7
        let u = Jet::seed(&[0.7]);
        let inner = [u[0] * u[0], u[0].sin()];
        let outer = {
            let xs = Jet::seed(&[inner[0].value(), inner[1].value()]);
            xs[0] * xs[1]
        };
        let composed = outer.compose(&inner);
        let direct = inner[0] * inner[1];
        assert!((composed.value() - direct.value()).abs() < 1e-15);
        assert!((composed.grad(0) - direct.grad(0)).abs() < 1e-14);
        assert!((composed.hess(0, 0) - direct.hess(0, 0)).abs() < 1e-13);
    }

    #[test]
    fn constants_mix_with_variables() {
        let x = Jet::variable(2.0, 1, 3);
        let f = Jet::constant(5.0) * x + Jet::constant(1.0);
        assert_eq!(f.nvars(), 3);
        assert_eq!(f.grad(1), 5.0);
        assert_eq!(f.grad(0), 0.0);
    }
}
