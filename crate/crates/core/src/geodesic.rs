//! Geodesics by fixed-step classical Runge–Kutta.
//!
//! The state may carry jets: positions and velocities that depend on outside
//! parameters (a leaf's parameters, say) are pushed through the flow with
//! their derivatives, which is how deformed leaves get exact tangent vectors.

use foliation_expr::Jet;

use crate::chart::{Chart, GeodesicState, Point, TangentVector};
use crate::error::{Error, Result};

pub const DEFAULT_STEP: f64 = 1e-3;

/// Snapshot every `every` steps along a trajectory.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub time: f64,
    pub state: GeodesicState,
}

impl Chart {
    /// ẍ^k = −Γ^k_{ij}(x) ẋ^i ẋ^j, with Γ's coordinate derivatives chained
    /// through whatever the jets of `x` depend on.
    fn acceleration(&self, x: &[Jet], v: &[Jet]) -> Result<Vec<Jet>> {
        let m = self.dim();
        let xv: Vec<f64> = x.iter().map(|j| j.value()).collect();
        let gamma = self.connection_jets(&xv)?;
        let tracked = x.iter().any(|j| j.has_derivatives());
        let mut a = vec![Jet::constant(0.0); m];
        for (k, ak) in a.iter_mut().enumerate() {
            let mut s = Jet::constant(0.0);
            for i in 0..m {
                for j in 0..m {
                    let g = gamma[k][i][j];
                    if g.value() == 0.0 && !g.has_derivatives() {
                        continue;
                    }
                    let g = if tracked { g.compose(x) } else { Jet::constant(g.value()) };
                    s += g * v[i] * v[j];
                }
            }
            *ak = -s;
        }
        Ok(a)
    }

    fn rk4_step(&self, x: &[Jet], v: &[Jet], h: f64) -> Result<(Vec<Jet>, Vec<Jet>)> {
        let axpy = |a: &[Jet], s: f64, b: &[Jet]| -> Vec<Jet> {
            a.iter().zip(b).map(|(&p, &q)| p + q * s).collect()
        };
        let k1x = v.to_vec();
        let k1v = self.acceleration(x, v)?;
        let x2 = axpy(x, h / 2.0, &k1x);
        let v2 = axpy(v, h / 2.0, &k1v);
        let k2v = self.acceleration(&x2, &v2)?;
        let x3 = axpy(x, h / 2.0, &v2);
        let v3 = axpy(v, h / 2.0, &k2v);
        let k3v = self.acceleration(&x3, &v3)?;
        let x4 = axpy(x, h, &v3);
        let v4 = axpy(v, h, &k3v);
        let k4v = self.acceleration(&x4, &v4)?;
        let comb = |base: &[Jet], a: &[Jet], b: &[Jet], c: &[Jet], d: &[Jet]| -> Vec<Jet> {
            (0..base.len())
                .map(|k| base[k] + (a[k] + (b[k] + c[k]) * 2.0 + d[k]) * (h / 6.0))
                .collect()
        };
        Ok((
            comb(x, &k1x, &v2, &v3, &v4),
            comb(v, &k1v, &k2v, &k3v, &k4v),
        ))
    }

    /// Integrates for time `t` (either sign) with steps of at most `step`,
    /// calling `observe` after every `every` steps and at the end.
    pub fn geodesic_jets(
        &self,
        x0: Vec<Jet>,
        v0: Vec<Jet>,
        t: f64,
        step: f64,
        every: usize,
        mut observe: impl FnMut(f64, &[Jet], &[Jet]) -> Result<()>,
    ) -> Result<(Vec<Jet>, Vec<Jet>)> {
        if !(step > 0.0) || !t.is_finite() {
            return Err(Error::Invalid(format!("bad geodesic step {step} or time {t}")));
        }
        let n = ((t.abs() / step) - 1e-9).ceil().max(0.0) as usize;
        let (mut x, mut v) = (x0, v0);
        if n == 0 {
            observe(0.0, &x, &v)?;
            return Ok((x, v));
        }
        let h = t / n as f64;
        for s in 1..=n {
            let (nx, nv) = self.rk4_step(&x, &v, h)?;
            x = nx;
            v = nv;
            let xv: Vec<f64> = x.iter().map(|j| j.value()).collect();
            let time = h * s as f64;
            if !self.contains(&xv) {
                return Err(Error::BoundaryExit { time, point: xv });
            }
            if (every > 0 && s % every == 0) || s == n {
                observe(time, &x, &v)?;
            }
        }
        Ok((x, v))
    }

    /// The geodesic through `p` with initial velocity `v`, followed for time `t`.
    pub fn geodesic_flow(&self, p: &Point, v: &TangentVector, t: f64, step: f64) -> Result<GeodesicState> {
        let path = self.geodesic_path(p, v, t, step, 0)?;
        Ok(path.into_iter().last().expect("final sample always recorded").state)
    }

    /// Samples along the geodesic every `every` steps (0: endpoint only).
    pub fn geodesic_path(
        &self,
        p: &Point,
        v: &TangentVector,
        t: f64,
        step: f64,
        every: usize,
    ) -> Result<Vec<Sample>> {
        let speed2 = self.metric_values(&p.coords).map(|g| {
            crate::germ::inner_values(&g, &v.components, &v.components)
        })?;
        if t != 0.0 && !(speed2 > 0.0) {
            return Err(Error::Misuse("geodesic_flow needs a nonzero initial velocity".into()));
        }
        if !self.contains(&p.coords) {
            return Err(Error::BoundaryExit {
                time: 0.0,
                point: p.coords.clone(),
            });
        }
        let x0 = p.coords.iter().map(|&c| Jet::constant(c)).collect();
        let v0 = v.components.iter().map(|&c| Jet::constant(c)).collect();
        let mut out = Vec::new();
        self.geodesic_jets(x0, v0, t, step, every, |time, x, v| {
            let point = Point::new(x.iter().map(|j| j.value()).collect::<Vec<_>>());
            let vel = TangentVector::new(point.clone(), v.iter().map(|j| j.value()).collect());
            out.push(Sample {
                time,
                state: GeodesicState { point, velocity: vel },
            });
            Ok(())
        })?;
        Ok(out)
    }
}
