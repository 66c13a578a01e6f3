//! Reproducible sample points (Halton) and seeded random test fields.

use foliation_expr::{BinOp, Expression, Func};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::chart::{Chart, Point, VectorFieldSpec};
use crate::error::{Error, Result};

const PRIMES: [u64; 4] = [2, 3, 5, 7];

/// Radical inverse of `i` in base `b`.
pub fn radical_inverse(mut i: u64, b: u64) -> f64 {
    let inv = 1.0 / b as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += f * (i % b) as f64;
        i /= b;
        f *= inv;
    }
    r
}

/// Halton point number `i` (1-based) in the unit cube of dimension `dim`.
pub fn halton(i: u64, dim: usize) -> Vec<f64> {
    assert!(dim <= PRIMES.len(), "Halton sampling supports at most {} dimensions", PRIMES.len());
    PRIMES[..dim].iter().map(|&b| radical_inverse(i, b)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SamplingPlan {
    pub count: usize,
    pub seed: u64,
    /// Optional sampling box; the chart's domain box otherwise.
    pub bounds: Option<Vec<(f64, f64)>>,
}

impl Default for SamplingPlan {
    fn default() -> Self {
        SamplingPlan {
            count: 200,
            seed: 42,
            bounds: None,
        }
    }
}

impl SamplingPlan {
    pub fn new(count: usize, seed: u64) -> SamplingPlan {
        SamplingPlan {
            count,
            seed,
            bounds: None,
        }
    }

    pub fn with_bounds(mut self, bounds: Vec<(f64, f64)>) -> SamplingPlan {
        self.bounds = Some(bounds);
        self
    }

    /// Halton points starting at index `seed + 1`, mapped into the box.
    pub fn points(&self, chart: &Chart) -> Result<Vec<Point>> {
        let m = chart.dim();
        let bounds: Vec<(f64, f64)> = match &self.bounds {
            Some(b) if b.len() == m => b.clone(),
            Some(b) => {
                return Err(Error::Invalid(format!(
                    "sampling box has {} axes, chart has {m}",
                    b.len()
                )))
            }
            None => chart.axes().iter().map(|a| a.range()).collect(),
        };
        Ok((0..self.count as u64)
            .map(|i| {
                let u = halton(self.seed + i + 1, m);
                Point::new(
                    u.iter()
                        .zip(&bounds)
                        .map(|(&t, &(lo, hi))| lo + t * (hi - lo))
                        .collect::<Vec<_>>(),
                )
            })
            .collect())
    }

    pub fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        rng
    }
}

fn num(v: f64) -> Expression {
    Expression::number((v * 1e4).round() / 1e4)
}

fn mul(a: Expression, b: Expression) -> Expression {
    Expression::binary(BinOp::Mul, a, b)
}

fn add(a: Expression, b: Expression) -> Expression {
    Expression::binary(BinOp::Add, a, b)
}

/// `cos(d·x)` or `sin(d·x)` for d ∈ {1, 2}, or 1.
fn trig_factor<R: Rng>(rng: &mut R, coord: &str) -> Option<Expression> {
    let kind = rng.gen_range(0..5);
    if kind == 0 {
        return None;
    }
    let func = if kind % 2 == 1 { Func::Cos } else { Func::Sin };
    let arg = if kind > 2 {
        mul(Expression::number(2.0), Expression::symbol(coord))
    } else {
        Expression::symbol(coord)
    };
    Some(Expression::call(func, arg))
}

/// A trigonometric polynomial of degree at most 2 in each coordinate:
/// a constant plus `terms` random monomials with coefficients in [−1, 1].
pub fn random_trig_poly<R: Rng>(rng: &mut R, coords: &[String], terms: usize) -> Expression {
    let mut e = num(rng.gen_range(-1.0..1.0));
    for _ in 0..terms {
        let mut t = num(rng.gen_range(-1.0..1.0));
        for c in coords {
            if let Some(f) = trig_factor(rng, c) {
                t = mul(t, f);
            }
        }
        e = add(e, t);
    }
    e
}

pub fn random_field<R: Rng>(rng: &mut R, chart: &Chart) -> VectorFieldSpec {
    let comps = (0..chart.dim())
        .map(|_| random_trig_poly(rng, chart.coords(), 3))
        .collect();
    VectorFieldSpec::new(chart.coords(), comps).expect("generated field binds")
}

/// `count` seeded random fields, reproducible for a given plan and stream.
pub fn random_fields(plan: &SamplingPlan, chart: &Chart, stream: u64, count: usize) -> Vec<VectorFieldSpec> {
    let mut rng = plan.rng(stream);
    (0..count).map(|_| random_field(&mut rng, chart)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::Axis;
    use std::f64::consts::PI;

    #[test]
    fn radical_inverse_base_two() {
        assert_eq!(radical_inverse(1, 2), 0.5);
        assert_eq!(radical_inverse(2, 2), 0.25);
        assert_eq!(radical_inverse(3, 2), 0.75);
        assert_eq!(radical_inverse(5, 3), 2.0 / 3.0 + 1.0 / 9.0);
    }

    #[test]
    fn points_lie_in_box_and_are_reproducible() {
        let c = Chart::diagonal(
            vec![Axis::interval("a", -1.0, 1.0), Axis::periodic("b", 2.0 * PI)],
            &["1", "1"],
        )
        .unwrap();
        let plan = SamplingPlan::default();
        let p = plan.points(&c).unwrap();
        assert_eq!(p.len(), 200);
        assert!(p.iter().all(|q| q.coords[0] > -1.0 && q.coords[0] < 1.0));
        assert!(p.iter().all(|q| q.coords[1] >= 0.0 && q.coords[1] < 2.0 * PI));
        assert_eq!(p, plan.points(&c).unwrap());
    }

    #[test]
    fn random_fields_are_reproducible_and_printable() {
        let c = Chart::diagonal(
            vec![Axis::periodic("x", 1.0), Axis::periodic("y", 1.0)],
            &["1", "1"],
        )
        .unwrap();
        let plan = SamplingPlan::default();
        let a = random_fields(&plan, &c, 3, 4);
        let b = random_fields(&plan, &c, 3, 4);
        for (f, g) in a.iter().zip(&b) {
            assert_eq!(f.to_string(), g.to_string());
            for e in f.expressions() {
                let back = Expression::parse(&e.to_string()).unwrap();
                assert_eq!(&back, e);
            }
        }
        let other = random_fields(&plan, &c, 4, 4);
        assert_ne!(a[0].to_string(), other[0].to_string());
    }
}
