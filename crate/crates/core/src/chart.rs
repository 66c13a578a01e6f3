//! The ambient manifold: a single coordinate chart with optional periodic
//! identifications, a metric given by expressions, and everything derived
//! from it (Levi-Civita connection, curvature, brackets).

use foliation_expr::{BoundExpr, Expression, Jet};
use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::germ::{self, JetMatrix, JetVec};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AxisKind {
    Periodic { period: f64 },
    Interval { lo: f64, hi: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Axis {
    pub name: String,
    pub kind: AxisKind,
}

impl Axis {
    pub fn periodic(name: &str, period: f64) -> Axis {
        Axis {
            name: name.into(),
            kind: AxisKind::Periodic { period },
        }
    }

    pub fn interval(name: &str, lo: f64, hi: f64) -> Axis {
        Axis {
            name: name.into(),
            kind: AxisKind::Interval { lo, hi },
        }
    }

    pub fn is_periodic(&self) -> bool {
        matches!(self.kind, AxisKind::Periodic { .. })
    }

    /// Domain box along this axis; `[0, period)` for periodic axes.
    pub fn range(&self) -> (f64, f64) {
        match self.kind {
            AxisKind::Periodic { period } => (0.0, period),
            AxisKind::Interval { lo, hi } => (lo, hi),
        }
    }

    pub fn reduce(&self, x: f64) -> f64 {
        match self.kind {
            AxisKind::Periodic { period } => x.rem_euclid(period),
            AxisKind::Interval { .. } => x,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Point {
    pub coords: Vec<f64>,
}

impl Point {
    pub fn new(coords: impl Into<Vec<f64>>) -> Point {
        Point {
            coords: coords.into(),
        }
    }
}

impl From<&[f64]> for Point {
    fn from(c: &[f64]) -> Point {
        Point::new(c.to_vec())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TangentVector {
    pub base: Point,
    pub components: Vec<f64>,
}

impl TangentVector {
    pub fn new(base: Point, components: Vec<f64>) -> TangentVector {
        TangentVector { base, components }
    }

    pub fn max_abs(&self) -> f64 {
        self.components.iter().fold(0.0, |m, c| m.max(c.abs()))
    }
}

/// A vector field given by coordinate-component expressions.
#[derive(Clone, Debug)]
pub struct VectorFieldSpec {
    components: Vec<BoundExpr>,
}

impl VectorFieldSpec {
    pub fn new(coords: &[String], components: Vec<Expression>) -> Result<VectorFieldSpec> {
        if components.len() != coords.len() {
            return Err(Error::Invalid(format!(
                "vector field has {} components, chart has dimension {}",
                components.len(),
                coords.len()
            )));
        }
        let components = components
            .iter()
            .map(|e| e.bind(coords))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        Ok(VectorFieldSpec { components })
    }

    pub fn parse(chart: &Chart, sources: &[&str]) -> Result<VectorFieldSpec> {
        let exprs = sources
            .iter()
            .map(|s| Expression::parse(s))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        VectorFieldSpec::new(chart.coords(), exprs)
    }

    /// The coordinate field ∂_k.
    pub fn coordinate(chart: &Chart, k: usize) -> VectorFieldSpec {
        let exprs = (0..chart.dim())
            .map(|i| Expression::number(if i == k { 1.0 } else { 0.0 }))
            .collect();
        VectorFieldSpec::new(chart.coords(), exprs).expect("constant field binds")
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn expressions(&self) -> impl Iterator<Item = &Expression> {
        self.components.iter().map(|c| c.expression())
    }

    /// Germ at the (already reduced) coordinate jets `x`.
    pub fn germ(&self, x: &[Jet]) -> Result<JetVec> {
        Ok(JetVec(
            self.components
                .iter()
                .map(|c| c.eval(x))
                .collect::<std::result::Result<Vec<_>, _>>()?,
        ))
    }

    pub fn values(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self
            .components
            .iter()
            .map(|c| c.eval(x))
            .collect::<std::result::Result<Vec<_>, _>>()?)
    }
}

impl std::fmt::Display for VectorFieldSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("(")?;
        for (i, c) in self.components.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{c}")?;
        }
        f.write_str(")")
    }
}

/// Christoffel symbols Γ^k_{ij} at a point, indexed `[k][i][j]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Christoffel(pub Vec<Vec<Vec<f64>>>);

impl Christoffel {
    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        self.0[k][i][j]
    }
}

/// Position and velocity at the end of a geodesic segment.
#[derive(Clone, Debug, PartialEq)]
pub struct GeodesicState {
    pub point: Point,
    pub velocity: TangentVector,
}

#[derive(Clone, Debug)]
pub struct Chart {
    axes: Vec<Axis>,
    coords: Vec<String>,
    /// Upper triangle, `metric[i][j - i]`; `None` is an identically zero entry.
    metric: Vec<Vec<Option<BoundExpr>>>,
}

impl Chart {
    /// `entries` lists metric components `((i, j), expr)` with `i <= j`.
    /// Missing off-diagonal entries are zero; a missing diagonal is an error.
    pub fn new(axes: Vec<Axis>, entries: Vec<((usize, usize), Expression)>) -> Result<Chart> {
        let m = axes.len();
        if m == 0 || m > foliation_expr::MAX_VARS {
            return Err(Error::Invalid(format!(
                "chart dimension {m} outside 1..={}",
                foliation_expr::MAX_VARS
            )));
        }
        for a in &axes {
            match a.kind {
                AxisKind::Periodic { period } if !(period > 0.0) => {
                    return Err(Error::Invalid(format!("axis {}: period must be positive", a.name)))
                }
                AxisKind::Interval { lo, hi } if !(lo < hi) => {
                    return Err(Error::Invalid(format!("axis {}: empty interval", a.name)))
                }
                _ => {}
            }
        }
        let coords: Vec<String> = axes.iter().map(|a| a.name.clone()).collect();
        for (i, c) in coords.iter().enumerate() {
            if foliation_expr::is_reserved(c) {
                return Err(Error::Invalid(format!("coordinate name `{c}` is reserved")));
            }
            if coords[..i].contains(c) {
                return Err(Error::Invalid(format!("duplicate coordinate `{c}`")));
            }
        }
        let mut metric: Vec<Vec<Option<BoundExpr>>> = (0..m).map(|i| vec![None; m - i]).collect();
        for ((i, j), e) in entries {
            if i > j || j >= m {
                return Err(Error::Invalid(format!("metric entry ({i}, {j}) not in upper triangle")));
            }
            if metric[i][j - i].is_some() {
                return Err(Error::Invalid(format!("metric entry ({i}, {j}) given twice")));
            }
            metric[i][j - i] = Some(e.bind(&coords)?);
        }
        for (i, row) in metric.iter().enumerate() {
            if row[0].is_none() {
                return Err(Error::Invalid(format!("missing diagonal metric entry g_{0}_{0}", coords[i])));
            }
        }
        Ok(Chart {
            axes,
            coords,
            metric,
        })
    }

    /// Diagonal metric from component sources.
    pub fn diagonal(axes: Vec<Axis>, diag: &[&str]) -> Result<Chart> {
        let entries = diag
            .iter()
            .enumerate()
            .map(|(i, s)| Ok(((i, i), Expression::parse(s)?)))
            .collect::<Result<Vec<_>>>()?;
        Chart::new(axes, entries)
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn coords(&self) -> &[String] {
        &self.coords
    }

    /// Upper-triangle metric expression, if nonzero.
    pub fn metric_entry(&self, i: usize, j: usize) -> Option<&Expression> {
        let (i, j) = (i.min(j), i.max(j));
        self.metric[i][j - i].as_ref().map(|b| b.expression())
    }

    /// Whether `p` lies in the open domain box (periodic axes always do).
    pub fn contains(&self, p: &[f64]) -> bool {
        self.axes.iter().zip(p).all(|(a, &x)| match a.kind {
            AxisKind::Periodic { .. } => x.is_finite(),
            AxisKind::Interval { lo, hi } => x > lo && x < hi,
        })
    }

    pub fn reduce(&self, p: &[f64]) -> Vec<f64> {
        self.axes.iter().zip(p).map(|(a, &x)| a.reduce(x)).collect()
    }

    /// Shifts jet values onto the fundamental domain; derivatives unchanged.
    pub fn reduce_jets(&self, x: &[Jet]) -> Vec<Jet> {
        self.axes
            .iter()
            .zip(x)
            .map(|(a, &j)| j + (a.reduce(j.value()) - j.value()))
            .collect()
    }

    /// Coordinate jets seeded at `p` (after periodic reduction).
    pub fn seed(&self, p: &[f64]) -> Vec<Jet> {
        Jet::seed(&self.reduce(p))
    }

    /// Full symmetric metric evaluated on coordinate jets.
    pub fn metric_jets(&self, x: &[Jet]) -> Result<JetMatrix> {
        let m = self.dim();
        let mut g = vec![vec![Jet::constant(0.0); m]; m];
        for i in 0..m {
            for j in i..m {
                if let Some(e) = &self.metric[i][j - i] {
                    let v = e.eval(x)?;
                    g[i][j] = v;
                    g[j][i] = v;
                }
            }
        }
        Ok(g)
    }

    pub fn metric_values(&self, p: &[f64]) -> Result<Vec<Vec<f64>>> {
        let x = self.reduce(p);
        let m = self.dim();
        let mut g = vec![vec![0.0; m]; m];
        for i in 0..m {
            for j in i..m {
                if let Some(e) = &self.metric[i][j - i] {
                    let v = e.eval(&x)?;
                    g[i][j] = v;
                    g[j][i] = v;
                }
            }
        }
        Ok(g)
    }

    /// g(p), checked positive definite.
    pub fn metric_at(&self, p: &Point) -> Result<DMatrix<f64>> {
        let g = self.metric_values(&p.coords)?;
        let m = self.dim();
        let mat = DMatrix::from_fn(m, m, |i, j| g[i][j]);
        if mat.clone().cholesky().is_none() {
            return Err(Error::NotPositiveDefinite {
                point: p.coords.clone(),
            });
        }
        Ok(mat)
    }

    /// Smallest eigenvalue of g(p).
    pub fn min_metric_eigenvalue(&self, p: &Point) -> Result<f64> {
        let g = self.metric_values(&p.coords)?;
        let m = self.dim();
        let mat = DMatrix::from_fn(m, m, |i, j| g[i][j]);
        Ok(mat.symmetric_eigenvalues().min())
    }

    /// Metric, inverse and connection as jets at `p`.
    pub fn geometry_at(&self, p: &Point) -> Result<PointGeometry> {
        let x = self.seed(&p.coords);
        let g = self.metric_jets(&x)?;
        let m = self.dim();
        let gv = DMatrix::from_fn(m, m, |i, j| g[i][j].value());
        if gv.cholesky().is_none() {
            return Err(Error::NotPositiveDefinite {
                point: p.coords.clone(),
            });
        }
        let ginv = germ::invert(&g).ok_or_else(|| Error::SingularMetric {
            point: p.coords.clone(),
        })?;
        let gamma = christoffel_from(&g, &ginv);
        Ok(PointGeometry {
            point: Point::new(self.reduce(&p.coords)),
            x,
            g,
            ginv,
            gamma,
        })
    }

    /// Connection coefficients as order-1 jets in the chart coordinates at
    /// `p`, without the positive-definiteness check.
    pub(crate) fn connection_jets(&self, p: &[f64]) -> Result<Vec<Vec<Vec<Jet>>>> {
        let x = self.seed(p);
        let g = self.metric_jets(&x)?;
        let ginv = germ::invert(&g).ok_or_else(|| Error::SingularMetric { point: p.to_vec() })?;
        Ok(christoffel_from(&g, &ginv))
    }

    pub fn christoffel_at(&self, p: &Point) -> Result<Christoffel> {
        let geo = self.geometry_at(p)?;
        Ok(Christoffel(
            geo.gamma
                .iter()
                .map(|a| a.iter().map(|b| b.iter().map(|c| c.value()).collect()).collect())
                .collect(),
        ))
    }

    pub fn covariant_derivative(
        &self,
        x: &VectorFieldSpec,
        y: &VectorFieldSpec,
        p: &Point,
    ) -> Result<TangentVector> {
        let geo = self.geometry_at(p)?;
        let xs = x.germ(&geo.x)?;
        let ys = y.germ(&geo.x)?;
        Ok(geo.tangent(&geo.covariant(&xs, &ys)))
    }

    pub fn lie_bracket(&self, x: &VectorFieldSpec, y: &VectorFieldSpec, p: &Point) -> Result<TangentVector> {
        let xs_ = self.seed(&p.coords);
        let xs = x.germ(&xs_)?;
        let ys = y.germ(&xs_)?;
        Ok(TangentVector::new(
            Point::new(self.reduce(&p.coords)),
            bracket(&xs, &ys).values(),
        ))
    }

    /// R(X, Y)Z = ∇_X∇_Y Z − ∇_Y∇_X Z − ∇_[X,Y] Z at `p`.
    pub fn riemann(
        &self,
        x: &VectorFieldSpec,
        y: &VectorFieldSpec,
        z: &VectorFieldSpec,
        p: &Point,
    ) -> Result<TangentVector> {
        let geo = self.geometry_at(p)?;
        let r = geo.curvature(
            &x.values(&geo.point.coords)?,
            &y.values(&geo.point.coords)?,
            &z.values(&geo.point.coords)?,
        );
        Ok(TangentVector::new(geo.point.clone(), r))
    }
}

fn christoffel_from(g: &JetMatrix, ginv: &JetMatrix) -> Vec<Vec<Vec<Jet>>> {
    let m = g.len();
    // first-kind symbols [ij, l] = ½(∂_i g_jl + ∂_j g_il − ∂_l g_ij)
    let mut first = vec![vec![vec![Jet::constant(0.0); m]; m]; m];
    for i in 0..m {
        for j in i..m {
            for l in 0..m {
                let v = (g[j][l].partial(i) + g[i][l].partial(j) - g[i][j].partial(l)) * 0.5;
                first[i][j][l] = v;
                first[j][i][l] = v;
            }
        }
    }
    let mut gamma = vec![vec![vec![Jet::constant(0.0).truncate(1); m]; m]; m];
    for k in 0..m {
        for i in 0..m {
            for j in i..m {
                let mut s = Jet::constant(0.0);
                for l in 0..m {
                    s += ginv[k][l] * first[i][j][l];
                }
                gamma[k][i][j] = s;
                gamma[k][j][i] = s;
            }
        }
    }
    gamma
}

/// [X, Y]^k = X^a ∂_a Y^k − Y^a ∂_a X^k.
pub fn bracket(x: &JetVec, y: &JetVec) -> JetVec {
    &y.derivative_along(x) - &x.derivative_along(y)
}

/// Metric and connection at a point, as jets in the chart coordinates.
#[derive(Clone, Debug)]
pub struct PointGeometry {
    /// Reduced base point.
    pub point: Point,
    /// Seeded coordinate jets at the base point.
    pub x: Vec<Jet>,
    pub g: JetMatrix,
    pub ginv: JetMatrix,
    /// Γ^k_{ij} as order-1 jets, `[k][i][j]`.
    pub gamma: Vec<Vec<Vec<Jet>>>,
}

impl PointGeometry {
    pub fn dim(&self) -> usize {
        self.g.len()
    }

    pub fn inner(&self, a: &JetVec, b: &JetVec) -> Jet {
        germ::inner(&self.g, a, b)
    }

    pub fn inner_values(&self, a: &[f64], b: &[f64]) -> f64 {
        let m = self.dim();
        let mut s = 0.0;
        for i in 0..m {
            for j in 0..m {
                s += self.g[i][j].value() * a[i] * b[j];
            }
        }
        s
    }

    pub fn norm_values(&self, a: &[f64]) -> f64 {
        self.inner_values(a, a).max(0.0).sqrt()
    }

    pub fn metric_values(&self) -> Vec<Vec<f64>> {
        self.g.iter().map(|r| r.iter().map(|j| j.value()).collect()).collect()
    }

    /// (∇_X Y)^k = X^a(∂_a Y^k + Γ^k_{ab} Y^b), as a germ one order below Y.
    pub fn covariant(&self, x: &JetVec, y: &JetVec) -> JetVec {
        let m = self.dim();
        let mut out = y.derivative_along(x);
        for k in 0..m {
            let mut s = Jet::constant(0.0);
            for a in 0..m {
                for b in 0..m {
                    s += self.gamma[k][a][b] * x.0[a] * y.0[b];
                }
            }
            out.0[k] += s;
        }
        out
    }

    /// Riemann components R^k_{lij} with R(∂_i, ∂_j)∂_l = R^k_{lij} ∂_k.
    pub fn riemann_tensor(&self) -> Vec<Vec<Vec<Vec<f64>>>> {
        let m = self.dim();
        let gam = |k: usize, i: usize, j: usize| self.gamma[k][i][j].value();
        let dgam = |k: usize, i: usize, j: usize, d: usize| self.gamma[k][i][j].grad(d);
        let mut r = vec![vec![vec![vec![0.0; m]; m]; m]; m];
        for k in 0..m {
            for l in 0..m {
                for i in 0..m {
                    for j in 0..m {
                        let mut v = dgam(k, j, l, i) - dgam(k, i, l, j);
                        for s in 0..m {
                            v += gam(k, i, s) * gam(s, j, l) - gam(k, j, s) * gam(s, i, l);
                        }
                        r[k][l][i][j] = v;
                    }
                }
            }
        }
        r
    }

    /// R(X, Y)Z for vectors at the base point.
    pub fn curvature(&self, x: &[f64], y: &[f64], z: &[f64]) -> Vec<f64> {
        let r = self.riemann_tensor();
        curvature_with(&r, x, y, z)
    }

    /// div X = ∂_a X^a + Γ^a_{ab} X^b at the base point.
    pub fn divergence(&self, x: &JetVec) -> f64 {
        let m = self.dim();
        let mut s = 0.0;
        for a in 0..m {
            s += x.0[a].grad(a);
            for b in 0..m {
                s += self.gamma[a][a][b].value() * x.0[b].value();
            }
        }
        s
    }

    pub fn tangent(&self, v: &JetVec) -> TangentVector {
        TangentVector::new(self.point.clone(), v.values())
    }
}

pub(crate) fn curvature_with(r: &[Vec<Vec<Vec<f64>>>], x: &[f64], y: &[f64], z: &[f64]) -> Vec<f64> {
    let m = x.len();
    let mut out = vec![0.0; m];
    for (k, o) in out.iter_mut().enumerate() {
        let mut s = 0.0;
        for l in 0..m {
            for i in 0..m {
                for j in 0..m {
                    s += r[k][l][i][j] * x[i] * y[j] * z[l];
                }
            }
        }
        *o = s;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn torus3() -> Chart {
        Chart::diagonal(
            vec![
                Axis::periodic("x", 2.0 * PI),
                Axis::periodic("y", 2.0 * PI),
                Axis::periodic("z", 2.0 * PI),
            ],
            &["1", "1", "1"],
        )
        .unwrap()
    }

    fn warped() -> Chart {
        Chart::diagonal(
            vec![
                Axis::periodic("x", 2.0 * PI),
                Axis::periodic("y", 2.0 * PI),
                Axis::periodic("z", 2.0 * PI),
            ],
            &["1", "1", "exp(2*sin(x)*cos(y))"],
        )
        .unwrap()
    }

    fn sphere2() -> Chart {
        Chart::diagonal(
            vec![Axis::interval("th", 0.0, PI), Axis::periodic("ph", 2.0 * PI)],
            &["1", "sin(th)^2"],
        )
        .unwrap()
    }

    #[test]
    fn flat_torus_metric_is_identity() {
        let g = torus3().metric_at(&Point::new([0.3, 5.0, 9.0])).unwrap();
        assert_eq!(g, DMatrix::identity(3, 3));
    }

    #[test]
    fn warped_metric_at_origin() {
        let g = warped().metric_at(&Point::new([0.0, 0.0, 0.0])).unwrap();
        assert_eq!(g, DMatrix::identity(3, 3));
    }

    #[test]
    fn hopf_metric_at_quarter_pi() {
        let c = Chart::diagonal(
            vec![
                Axis::interval("eta", 0.1, PI / 2.0 - 0.1),
                Axis::periodic("xi1", 2.0 * PI),
                Axis::periodic("xi2", 2.0 * PI),
            ],
            &["1", "cos(eta)^2", "sin(eta)^2"],
        )
        .unwrap();
        let g = c.metric_at(&Point::new([PI / 4.0, 1.0, 2.0])).unwrap();
        assert!((g[(0, 0)] - 1.0).abs() < 1e-15);
        assert!((g[(1, 1)] - 0.5).abs() < 1e-15);
        assert!((g[(2, 2)] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn flat_christoffels_vanish() {
        let gam = torus3().christoffel_at(&Point::new([1.0, 2.0, 3.0])).unwrap();
        assert!(gam.0.iter().flatten().flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn warped_christoffels_match_hand_computation() {
        // f = sin x cos y; Γ^z_{xz} = f_x, Γ^x_{zz} = −f_x e^{2f}
        let (x, y) = (0.4, 1.1);
        let gam = warped().christoffel_at(&Point::new([x, y, 0.2])).unwrap();
        let f = f64::sin(x) * f64::cos(y);
        let fx = f64::cos(x) * f64::cos(y);
        assert!((gam.get(2, 0, 2) - fx).abs() < 1e-14);
        assert!((gam.get(2, 2, 0) - fx).abs() < 1e-14);
        assert!((gam.get(0, 2, 2) + fx * (2.0 * f).exp()).abs() < 1e-13);
    }

    #[test]
    fn sphere_christoffel() {
        let th = 0.8;
        let gam = sphere2().christoffel_at(&Point::new([th, 0.3])).unwrap();
        assert!((gam.get(0, 1, 1) + th.sin() * th.cos()).abs() < 1e-15);
    }

    #[test]
    fn flat_covariant_derivative_is_directional_derivative() {
        let c = torus3();
        let x = VectorFieldSpec::parse(&c, &["1", "0", "0"]).unwrap();
        let y = VectorFieldSpec::parse(&c, &["0", "x", "0"]).unwrap();
        let d = c.covariant_derivative(&x, &y, &Point::new([0.5, 0.1, 0.2])).unwrap();
        assert_eq!(d.components, vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn warped_unit_normal_is_parallel_along_x() {
        let c = warped();
        let x = VectorFieldSpec::parse(&c, &["1", "0", "0"]).unwrap();
        let v = VectorFieldSpec::parse(&c, &["0", "0", "exp(-sin(x)*cos(y))"]).unwrap();
        let d = c.covariant_derivative(&x, &v, &Point::new([0.7, 0.2, 1.0])).unwrap();
        assert!(d.max_abs() < 1e-15);
    }

    #[test]
    fn brackets() {
        let c = torus3();
        let p = Point::new([0.3, 0.9, 0.0]);
        let dx = VectorFieldSpec::coordinate(&c, 0);
        let dy = VectorFieldSpec::coordinate(&c, 1);
        assert!(c.lie_bracket(&dx, &dy, &p).unwrap().max_abs() == 0.0);
        // [x∂y, y∂x] = x∂x − y∂y
        let a = VectorFieldSpec::parse(&c, &["0", "x", "0"]).unwrap();
        let b = VectorFieldSpec::parse(&c, &["y", "0", "0"]).unwrap();
        assert_eq!(c.lie_bracket(&a, &b, &p).unwrap().components, vec![0.3, -0.9, 0.0]);
    }

    #[test]
    fn hopf_bracket() {
        let c = Chart::diagonal(
            vec![
                Axis::interval("eta", 0.1, PI / 2.0 - 0.1),
                Axis::periodic("xi1", 2.0 * PI),
                Axis::periodic("xi2", 2.0 * PI),
            ],
            &["1", "cos(eta)^2", "sin(eta)^2"],
        )
        .unwrap();
        let d_eta = VectorFieldSpec::coordinate(&c, 0);
        let n = VectorFieldSpec::parse(&c, &["0", "sin(eta)^2", "-cos(eta)^2"]).unwrap();
        for eta in [0.3, 0.7, 1.2] {
            let b = c.lie_bracket(&d_eta, &n, &Point::new([eta, 0.0, 0.0])).unwrap();
            let s = (2.0 * eta).sin();
            assert!((b.components[1] - s).abs() < 1e-15);
            assert!((b.components[2] - s).abs() < 1e-15);
            assert_eq!(b.components[0], 0.0);
        }
    }

    #[test]
    fn flat_curvature_vanishes() {
        let c = torus3();
        let p = Point::new([0.1, 0.2, 0.3]);
        let f = VectorFieldSpec::parse(&c, &["sin(y)", "1", "z"]).unwrap();
        assert!(c.riemann(&f, &f, &f, &p).unwrap().max_abs() == 0.0);
    }

    #[test]
    fn reserved_coordinate_name_rejected() {
        let r = Chart::diagonal(vec![Axis::periodic("pi", 1.0)], &["1"]);
        assert!(matches!(r, Err(Error::Invalid(_))));
    }

    #[test]
    fn missing_diagonal_rejected() {
        let r = Chart::new(
            vec![Axis::periodic("x", 1.0), Axis::periodic("y", 1.0)],
            vec![((0, 0), Expression::number(1.0))],
        );
        assert!(matches!(r, Err(Error::Invalid(_))));
    }

    #[test]
    fn indefinite_metric_rejected() {
        let c = Chart::diagonal(vec![Axis::periodic("x", 1.0), Axis::periodic("y", 1.0)], &["1", "-1"]).unwrap();
        assert!(matches!(
            c.metric_at(&Point::new([0.0, 0.0])),
            Err(Error::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn periodic_reduction() {
        let c = torus3();
        let r = c.reduce(&[-0.5, 7.0, 2.0 * PI]);
        assert!((r[0] - (2.0 * PI - 0.5)).abs() < 1e-15);
        assert!((r[1] - (7.0 - 2.0 * PI)).abs() < 1e-15);
        assert!(r[2].abs() < 1e-15);
    }
}
