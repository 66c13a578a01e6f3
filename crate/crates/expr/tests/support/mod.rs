#![allow(dead_code)]

//! Random expression generator and a finite-difference oracle.

use foliation_expr::{BinOp, Expression, Func, Node, NodeKind};
use rand::Rng;

pub const VARS: [&str; 3] = ["x", "y", "z"];

pub fn random_expr<R: Rng>(rng: &mut R, depth: u32) -> Expression {
    if depth == 0 || rng.gen_bool(0.25) {
        return if rng.gen_bool(0.6) {
            Expression::symbol(VARS[rng.gen_range(0..VARS.len())])
        } else {
            Expression::number((rng.gen_range(-20..=20) as f64) / 10.0)
        };
    }
    match rng.gen_range(0..10) {
        0..=1 => Expression::binary(BinOp::Add, random_expr(rng, depth - 1), random_expr(rng, depth - 1)),
        2 => Expression::binary(BinOp::Sub, random_expr(rng, depth - 1), random_expr(rng, depth - 1)),
        3..=4 => Expression::binary(BinOp::Mul, random_expr(rng, depth - 1), random_expr(rng, depth - 1)),
        5 => Expression::binary(BinOp::Div, random_expr(rng, depth - 1), random_expr(rng, depth - 1)),
        6 => {
            let n = rng.gen_range(-2..=3) as f64;
            Expression::binary(BinOp::Pow, random_expr(rng, depth - 1), Expression::number(n))
        }
        7 => Expression::negate(random_expr(rng, depth - 1)),
        _ => {
            let f = Func::ALL[rng.gen_range(0..Func::ALL.len())];
            Expression::call(f, random_expr(rng, depth - 1))
        }
    }
}

/// Smallest distance, over all singular sub-terms, between a sub-term's
/// value and the nearest singularity of the enclosing operation.
pub fn singularity_distance(e: &Expression, point: &[f64]) -> f64 {
    fn value(n: &Node, point: &[f64]) -> f64 {
        let e = Expression::from_node(n.clone());
        let b: Vec<(&str, f64)> = VARS.iter().copied().zip(point.iter().copied()).collect();
        e.evaluate(&b).unwrap_or(f64::NAN)
    }
    fn walk(n: &Node, point: &[f64], best: &mut f64) {
        match &n.kind {
            NodeKind::Neg(a) => walk(a, point, best),
            NodeKind::Call(f, a) => {
                walk(a, point, best);
                let v = value(a, point);
                let d = match f {
                    Func::Log | Func::Sqrt => v,
                    Func::Tan => v.cos().abs(),
                    _ => f64::INFINITY,
                };
                *best = best.min(d);
            }
            NodeKind::Binary(op, l, r) => {
                walk(l, point, best);
                walk(r, point, best);
                match op {
                    BinOp::Div => *best = best.min(value(r, point).abs()),
                    BinOp::Pow => *best = best.min(value(l, point).abs()),
                    _ => {}
                }
            }
            _ => {}
        }
        if best.is_nan() {
            *best = -1.0;
        }
    }
    let mut best = f64::INFINITY;
    walk(e.root(), point, &mut best);
    best
}

/// Central differences with one Richardson step.
pub struct FiniteDifferences {
    pub step: f64,
}

impl FiniteDifferences {
    fn f(&self, e: &Expression, p: &[f64]) -> Option<f64> {
        let b: Vec<(&str, f64)> = VARS.iter().copied().zip(p.iter().copied()).collect();
        e.evaluate(&b).ok()
    }

    fn grad_at(&self, e: &Expression, p: &[f64], i: usize, h: f64) -> Option<f64> {
        let mut a = p.to_vec();
        let mut b = p.to_vec();
        a[i] += h;
        b[i] -= h;
        Some((self.f(e, &a)? - self.f(e, &b)?) / (2.0 * h))
    }

    fn hess_at(&self, e: &Expression, p: &[f64], i: usize, j: usize, h: f64) -> Option<f64> {
        let shifted = |si: f64, sj: f64| {
            let mut q = p.to_vec();
            q[i] += si * h;
            q[j] += sj * h;
            self.f(e, &q)
        };
        Some((shifted(1.0, 1.0)? - shifted(1.0, -1.0)? - shifted(-1.0, 1.0)? + shifted(-1.0, -1.0)?) / (4.0 * h * h))
    }

    fn richardson(d: impl Fn(f64) -> Option<f64>, h: f64) -> Option<f64> {
        let d1 = d(h)?;
        let d2 = d(h / 2.0)?;
        Some((4.0 * d2 - d1) / 3.0)
    }

    /// Returns `None` when the stencil hits a domain error or when the
    /// estimates at `step` and `step / 2` disagree, i.e. the oracle itself is
    /// not resolved at this point.
    fn resolved(&self, d: impl Fn(f64) -> Option<f64>) -> Option<f64> {
        let a = Self::richardson(&d, self.step)?;
        let b = Self::richardson(&d, self.step / 2.0)?;
        ((a - b).abs() <= 1e-7 * b.abs().max(1.0)).then_some(b)
    }

    pub fn gradient(&self, e: &Expression, p: &[f64], i: usize) -> Option<f64> {
        self.resolved(|h| self.grad_at(e, p, i, h))
    }

    pub fn hessian(&self, e: &Expression, p: &[f64], i: usize, j: usize) -> Option<f64> {
        self.resolved(|h| self.hess_at(e, p, i, j, h))
    }
}
