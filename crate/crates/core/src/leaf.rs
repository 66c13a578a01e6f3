//! Integration over parametrized leaf patches: volume, the stability
//! functional, and the second variation of volume computed directly by
//! pushing the leaf along geodesics.

use foliation_expr::{BinOp, BoundExpr, Expression, Func, Jet};
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::chart::{Axis, AxisKind, Chart, Point, VectorFieldSpec};
use crate::error::{Error, Result};
use crate::foliation::{FoliationSpec, JetFrame};
use crate::germ::{self, JetVec};

/// Tolerance on the hypotheses (minimality, integrability) along a leaf.
pub const HYPOTHESIS_TOL: f64 = 1e-8;

/// A leaf given by an embedding of a parameter box into the chart.
#[derive(Clone, Debug)]
pub struct LeafPatch {
    name: String,
    params: Vec<Axis>,
    embed: Vec<BoundExpr>,
    resolution: usize,
}

impl LeafPatch {
    pub fn new(name: &str, params: Vec<Axis>, embed: Vec<Expression>, resolution: usize) -> Result<LeafPatch> {
        if params.is_empty() || params.len() > foliation_expr::MAX_VARS {
            return Err(Error::Invalid(format!("leaf {name}: bad parameter count {}", params.len())));
        }
        if resolution < 2 {
            return Err(Error::Invalid(format!("leaf {name}: resolution must be at least 2")));
        }
        let names: Vec<String> = params.iter().map(|a| a.name.clone()).collect();
        let embed = embed
            .iter()
            .map(|e| e.bind(&names))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        Ok(LeafPatch {
            name: name.into(),
            params,
            embed,
            resolution,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn params(&self) -> &[Axis] {
        &self.params
    }

    pub fn embedding(&self) -> impl Iterator<Item = &Expression> {
        self.embed.iter().map(|b| b.expression())
    }

    pub fn dim(&self) -> usize {
        self.params.len()
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn with_resolution(&self, resolution: usize) -> LeafPatch {
        LeafPatch {
            resolution: resolution.max(2),
            ..self.clone()
        }
    }

    /// Closed leaf: every parameter periodic.
    pub fn is_compact(&self) -> bool {
        self.params.iter().all(|a| a.is_periodic())
    }

    /// Tensor-product nodes and weights. Periodic axes use the trapezoidal
    /// rule; interval axes the midpoint rule, so no node sits on the boundary.
    pub fn nodes(&self) -> Vec<(Vec<f64>, f64)> {
        let n = self.resolution;
        let per_axis: Vec<Vec<(f64, f64)>> = self
            .params
            .iter()
            .map(|a| {
                let (lo, hi) = a.range();
                let h = (hi - lo) / n as f64;
                let shift = match a.kind {
                    AxisKind::Periodic { .. } => 0.0,
                    AxisKind::Interval { .. } => 0.5,
                };
                (0..n).map(|k| (lo + (k as f64 + shift) * h, h)).collect()
            })
            .collect();
        let mut out = vec![(Vec::new(), 1.0)];
        for axis in &per_axis {
            out = out
                .into_iter()
                .flat_map(|(u, w)| {
                    axis.iter().map(move |&(x, h)| {
                        let mut u = u.clone();
                        u.push(x);
                        (u, w * h)
                    })
                })
                .collect();
        }
        out
    }

    /// Embedded coordinates as jets in the leaf parameters.
    pub fn embed_jets(&self, u: &[f64]) -> Result<Vec<Jet>> {
        let uj = Jet::seed(u);
        Ok(self
            .embed
            .iter()
            .map(|e| e.eval(&uj))
            .collect::<std::result::Result<Vec<_>, _>>()?)
    }

    pub fn point(&self, u: &[f64]) -> Result<Point> {
        Ok(Point::new(
            self.embed
                .iter()
                .map(|e| e.eval(u))
                .collect::<std::result::Result<Vec<_>, _>>()?,
        ))
    }

    /// Checks dimensions, that the patch stays in the chart, has full rank,
    /// and is tangent to D, at every node of the current grid.
    pub fn validate(&self, chart: &Chart, fol: &FoliationSpec) -> Result<()> {
        if self.embed.len() != chart.dim() {
            return Err(Error::Invalid(format!(
                "leaf {}: embedding has {} components, chart has dimension {}",
                self.name,
                self.embed.len(),
                chart.dim()
            )));
        }
        if self.dim() != fol.leaf_dim() {
            return Err(Error::Invalid(format!(
                "leaf {}: {} parameters for leaves of dimension {}",
                self.name,
                self.dim(),
                fol.leaf_dim()
            )));
        }
        for (u, _) in self.nodes() {
            let x = self.embed_jets(&u)?;
            let xv: Vec<f64> = x.iter().map(|j| j.value()).collect();
            if !chart.contains(&xv) {
                return Err(Error::Invalid(format!(
                    "leaf {}: parameter {u:?} maps to {xv:?}, outside the chart",
                    self.name
                )));
            }
            area_element(chart, &x, self.dim()).map_err(|_| {
                Error::RankDeficient(format!("leaf {}: embedding degenerate at parameter {u:?}", self.name))
            })?;
            let frame = JetFrame::new(chart, fol, &Point::new(xv))?;
            for a in 0..self.dim() {
                let d: Vec<f64> = x.iter().map(|j| j.grad(a)).collect();
                let off = frame.bot(&JetVec::constant(&d)).values();
                let scale = frame.norm_values(&d).max(1.0);
                if frame.norm_values(&off) > 1e-8 * scale {
                    return Err(Error::Invalid(format!(
                        "leaf {}: not tangent to the foliation at parameter {u:?} (normal part {:e})",
                        self.name,
                        frame.norm_values(&off)
                    )));
                }
            }
        }
        Ok(())
    }
}

/// sqrt det(Dφᵀ g Dφ) from position jets in the leaf parameters.
fn area_element(chart: &Chart, x: &[Jet], k: usize) -> Result<f64> {
    let xv: Vec<f64> = x.iter().map(|j| j.value()).collect();
    let g = chart.metric_values(&xv)?;
    let m = chart.dim();
    let gram = DMatrix::from_fn(k, k, |a, b| {
        let mut s = 0.0;
        for i in 0..m {
            for j in 0..m {
                s += g[i][j] * x[i].grad(a) * x[j].grad(b);
            }
        }
        s
    });
    let det = gram.determinant();
    let scale = (0..k).map(|a| gram[(a, a)]).product::<f64>().max(f64::MIN_POSITIVE);
    if !(det > 1e-14 * scale) {
        return Err(Error::RankDeficient(format!("embedding differential degenerate at {xv:?}")));
    }
    Ok(det.sqrt())
}

/// Deterministic pairwise summation.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 8 {
        return v.iter().sum();
    }
    let (a, b) = v.split_at(v.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

/// Evaluates `f` at every node in parallel (order-preserving) and returns the
/// per-node results.
fn map_nodes<T: Send>(
    leaf: &LeafPatch,
    f: impl Fn(&[f64], f64) -> Result<T> + Sync,
) -> Result<Vec<T>> {
    leaf.nodes()
        .par_iter()
        .map(|(u, w)| f(u, *w))
        .collect::<Result<Vec<_>>>()
}

pub fn leaf_volume(chart: &Chart, leaf: &LeafPatch) -> Result<f64> {
    integrate_leaf(chart, leaf, |_| Ok(1.0))
}

/// ∫_L f dvol with the induced volume element.
pub fn integrate_leaf(chart: &Chart, leaf: &LeafPatch, f: impl Fn(&Point) -> Result<f64> + Sync) -> Result<f64> {
    let terms = map_nodes(leaf, |u, w| {
        let x = leaf.embed_jets(u)?;
        let da = area_element(chart, &x, leaf.dim())?;
        let p = Point::new(x.iter().map(|j| j.value()).collect::<Vec<_>>());
        Ok(w * da * f(&p)?)
    })?;
    Ok(pairwise_sum(&terms))
}

/// Several integrals ∫_L f_k dvol at once; `f` returns all integrands at a
/// point, and every call must return the same number of values.
pub fn integrate_leaf_many(
    chart: &Chart,
    leaf: &LeafPatch,
    f: impl Fn(&Point) -> Result<Vec<f64>> + Sync,
) -> Result<Vec<f64>> {
    let rows = map_nodes(leaf, |u, w| {
        let x = leaf.embed_jets(u)?;
        let da = area_element(chart, &x, leaf.dim())?;
        let p = Point::new(x.iter().map(|j| j.value()).collect::<Vec<_>>());
        Ok(f(&p)?.into_iter().map(|v| w * da * v).collect::<Vec<_>>())
    })?;
    let k = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != k) {
        return Err(Error::Invalid("integrand returned a varying number of values".into()));
    }
    Ok((0..k)
        .map(|i| pairwise_sum(&rows.iter().map(|r| r[i]).collect::<Vec<_>>()))
        .collect())
}

/// A variation field: a vector field used through its normal part, with
/// an optional bump factor vanishing to all orders on the boundary of the
/// chart's non-periodic axes.
#[derive(Clone, Debug)]
pub struct VariationField {
    name: String,
    field: VectorFieldSpec,
    bumped: bool,
}

/// exp(1 − 1/(1 − s²)) with s the coordinate rescaled to (−1, 1).
fn bump(coord: &str, lo: f64, hi: f64) -> Expression {
    let s = Expression::binary(
        BinOp::Div,
        Expression::binary(
            BinOp::Sub,
            Expression::binary(BinOp::Mul, Expression::number(2.0), Expression::symbol(coord)),
            Expression::number(lo + hi),
        ),
        Expression::number(hi - lo),
    );
    let one = || Expression::number(1.0);
    let inner = Expression::binary(
        BinOp::Sub,
        one(),
        Expression::binary(
            BinOp::Div,
            one(),
            Expression::binary(
                BinOp::Sub,
                one(),
                Expression::binary(BinOp::Pow, s, Expression::number(2.0)),
            ),
        ),
    );
    Expression::call(Func::Exp, inner)
}

impl VariationField {
    pub fn new(name: &str, field: VectorFieldSpec) -> VariationField {
        VariationField {
            name: name.into(),
            field,
            bumped: false,
        }
    }

    /// Multiplies every component by a product of bumps over the chart's
    /// interval axes.
    pub fn bumped(name: &str, chart: &Chart, field: &VectorFieldSpec) -> Result<VariationField> {
        let mut factor: Option<Expression> = None;
        for a in chart.axes() {
            if let AxisKind::Interval { lo, hi } = a.kind {
                let b = bump(&a.name, lo, hi);
                factor = Some(match factor {
                    None => b,
                    Some(f) => Expression::binary(BinOp::Mul, f, b),
                });
            }
        }
        let Some(factor) = factor else {
            return Ok(VariationField::new(name, field.clone()));
        };
        let comps = field
            .expressions()
            .map(|e| Expression::binary(BinOp::Mul, factor.clone(), e.clone()))
            .collect();
        Ok(VariationField {
            name: name.into(),
            field: VectorFieldSpec::new(chart.coords(), comps)?,
            bumped: true,
        })
    }

    pub fn zero(name: &str, chart: &Chart) -> VariationField {
        let comps = (0..chart.dim()).map(|_| Expression::number(0.0)).collect();
        VariationField::new(name, VectorFieldSpec::new(chart.coords(), comps).expect("zero field"))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn field(&self) -> &VectorFieldSpec {
        &self.field
    }

    pub fn is_bumped(&self) -> bool {
        self.bumped
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StabilityReport {
    pub leaf: String,
    pub field: String,
    pub grid: usize,
    /// ∫ f_{V,V}
    pub i_f: f64,
    /// ∫ |α_V|²
    pub i_alpha: f64,
    pub residual: f64,
    pub relative_residual: f64,
    pub stable: bool,
    /// Largest |H| and D^⊥ Frobenius residual seen on the leaf.
    pub max_mean_curvature: f64,
    pub max_frobenius_perp: f64,
    pub warnings: Vec<String>,
}

/// Integrals of f_{V,V} and |α_V|² over the leaf.
pub fn stability_report(
    chart: &Chart,
    fol: &FoliationSpec,
    leaf: &LeafPatch,
    v: &VariationField,
) -> Result<StabilityReport> {
    let rows = map_nodes(leaf, |u, w| {
        let x = leaf.embed_jets(u)?;
        let da = area_element(chart, &x, leaf.dim())?;
        let p = Point::new(x.iter().map(|j| j.value()).collect::<Vec<_>>());
        let frame = JetFrame::new(chart, fol, &p)?;
        let vg = frame.field(v.field())?;
        let vb = frame.bot(&vg);
        let f = frame.f_vw(&vb, &vb);
        let a = frame.alpha_inner(&vb, &vb);
        let h = frame.norm_values(&frame.mean_curvature());
        Ok((w * da * f, w * da * a, h, frame.normal_frobenius()))
    })?;
    let fs: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let alphas: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let max_h = rows.iter().map(|r| r.2).fold(0.0, f64::max);
    let max_frob = rows.iter().map(|r| r.3).fold(0.0, f64::max);
    let i_f = pairwise_sum(&fs);
    let i_alpha = pairwise_sum(&alphas);
    let residual = (i_f - i_alpha).abs();
    let mut warnings = Vec::new();
    if max_h > HYPOTHESIS_TOL {
        warnings.push(format!("foliation is not minimal along the leaf (max |H| = {max_h:.3e})"));
    }
    if max_frob > HYPOTHESIS_TOL {
        warnings.push(format!("normal distribution is not integrable along the leaf (residual {max_frob:.3e})"));
    }
    Ok(StabilityReport {
        leaf: leaf.name().into(),
        field: v.name().into(),
        grid: leaf.resolution(),
        i_f,
        i_alpha,
        residual,
        relative_residual: residual / i_alpha.max(1.0),
        stable: i_f >= -HYPOTHESIS_TOL,
        max_mean_curvature: max_h,
        max_frobenius_perp: max_frob,
        warnings,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SecondVariation {
    pub leaf: String,
    pub field: String,
    pub grid: usize,
    pub t_step: f64,
    pub volume: f64,
    pub d2vol: f64,
    pub i_f: f64,
    pub relative_error: f64,
    pub warnings: Vec<String>,
}

/// The normal part of `v` along the jets `x`, with the tangent frame of D
/// rebuilt from the spanning fields at `x`.
fn normal_part(chart: &Chart, fol: &FoliationSpec, x: &[Jet], v: &JetVec) -> Result<JetVec> {
    let xr = chart.reduce_jets(x);
    let g = chart.metric_jets(&xr)?;
    let mut basis: Vec<JetVec> = Vec::new();
    for f in fol.fields() {
        let mut u = f.germ(&xr)?;
        for e in &basis {
            let k = germ::inner(&g, &u, e);
            u = &u - &e.scale(k);
        }
        let n2 = germ::inner(&g, &u, &u);
        if !(n2.value() > 1e-16) {
            return Err(Error::RankDeficient("spanning fields dependent along the leaf".into()));
        }
        basis.push(u.scale(n2.sqrt().recip()));
    }
    let mut out = v.clone();
    for e in &basis {
        out = &out - &e.scale(germ::inner(&g, v, e));
    }
    Ok(out)
}

/// d²/dt² vol(φ_t(L)) at t = 0 by a central difference, where
/// φ_t(u) = exp_{φ(u)}(t V^⊥(φ(u))). The difference is taken node by node
/// before summation so that the O(t²) cancellation is not swamped by
/// rounding in the volume sums.
pub fn second_variation_direct(
    chart: &Chart,
    fol: &FoliationSpec,
    leaf: &LeafPatch,
    v: &VariationField,
    t_step: f64,
) -> Result<SecondVariation> {
    if !(t_step > 0.0) {
        return Err(Error::Invalid(format!("t_step must be positive, got {t_step}")));
    }
    let k = leaf.dim();
    let rows = map_nodes(leaf, |u, w| {
        let x = leaf.embed_jets(u)?;
        let vx = v.field().germ(&chart.reduce_jets(&x))?;
        let vn = normal_part(chart, fol, &x, &vx)?;
        let mut da = [0.0; 3];
        for (slot, t) in [-t_step, 0.0, t_step].into_iter().enumerate() {
            if t == 0.0 {
                da[slot] = area_element(chart, &x, k)?;
                continue;
            }
            let (xt, _) = chart.geodesic_jets(
                x.clone(),
                vn.0.clone(),
                t,
                crate::geodesic::DEFAULT_STEP,
                0,
                |_, _, _| Ok(()),
            )?;
            da[slot] = area_element(chart, &xt, k)?;
        }
        Ok((w * da[1], w * ((da[2] - da[1]) + (da[0] - da[1])) / (t_step * t_step)))
    })?;
    let vols: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let d2s: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let d2vol = pairwise_sum(&d2s);
    let stab = stability_report(chart, fol, leaf, v)?;
    Ok(SecondVariation {
        leaf: leaf.name().into(),
        field: v.name().into(),
        grid: leaf.resolution(),
        t_step,
        volume: pairwise_sum(&vols),
        d2vol,
        i_f: stab.i_f,
        relative_error: (d2vol - stab.i_f).abs() / stab.i_f.abs().max(1.0),
        warnings: stab.warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn torus3() -> (Chart, FoliationSpec) {
        let c = Chart::diagonal(
            vec![
                Axis::periodic("x", 2.0 * PI),
                Axis::periodic("y", 2.0 * PI),
                Axis::periodic("z", 2.0 * PI),
            ],
            &["1", "1", "1"],
        )
        .unwrap();
        let fol = FoliationSpec::parse(&c, &[&["1", "0", "0"], &["0", "1", "0"]]).unwrap();
        (c, fol)
    }

    fn z0_leaf(res: usize) -> LeafPatch {
        LeafPatch::new(
            "z0",
            vec![Axis::periodic("u", 2.0 * PI), Axis::periodic("v", 2.0 * PI)],
            vec![Expression::symbol("u"), Expression::symbol("v"), Expression::number(0.0)],
            res,
        )
        .unwrap()
    }

    #[test]
    fn flat_torus_leaf_area() {
        let (c, fol) = torus3();
        let leaf = z0_leaf(16);
        leaf.validate(&c, &fol).unwrap();
        let a = leaf_volume(&c, &leaf).unwrap();
        assert!((a - 4.0 * PI * PI).abs() < 1e-12);
    }

    #[test]
    fn integral_of_cos_squared() {
        let (c, _) = torus3();
        let i = integrate_leaf(&c, &z0_leaf(32), |p| Ok(p.coords[0].cos().powi(2))).unwrap();
        assert!((i - 2.0 * PI * PI).abs() < 1e-12);
    }

    #[test]
    fn tilted_patch_is_not_a_leaf() {
        let (c, fol) = torus3();
        let leaf = LeafPatch::new(
            "tilted",
            vec![Axis::periodic("u", 2.0 * PI), Axis::periodic("v", 2.0 * PI)],
            vec![
                Expression::symbol("u"),
                Expression::symbol("v"),
                Expression::parse("0.1*sin(u)").unwrap(),
            ],
            8,
        )
        .unwrap();
        assert!(matches!(leaf.validate(&c, &fol), Err(Error::Invalid(_))));
    }

    #[test]
    fn flat_stability_closed_form() {
        let (c, fol) = torus3();
        let v = VariationField::new("V", VectorFieldSpec::parse(&c, &["0", "0", "sin(x)"]).unwrap());
        let r = stability_report(&c, &fol, &z0_leaf(32), &v).unwrap();
        assert!((r.i_f - 2.0 * PI * PI).abs() < 1e-10);
        assert!((r.i_alpha - 2.0 * PI * PI).abs() < 1e-10);
        assert!(r.stable && r.warnings.is_empty());
    }

    #[test]
    fn zero_variation() {
        let (c, fol) = torus3();
        let v = VariationField::zero("0", &c);
        let r = stability_report(&c, &fol, &z0_leaf(8), &v).unwrap();
        assert_eq!((r.i_f, r.i_alpha, r.residual), (0.0, 0.0, 0.0));
        let s = second_variation_direct(&c, &fol, &z0_leaf(8), &v, 1e-3).unwrap();
        assert_eq!(s.d2vol, 0.0);
    }

    #[test]
    fn bump_vanishes_at_boundary() {
        let c = Chart::diagonal(
            vec![Axis::interval("x", -1.0, 1.0), Axis::interval("y", -1.0, 1.0)],
            &["1", "1"],
        )
        .unwrap();
        let v = VariationField::bumped("b", &c, &VectorFieldSpec::parse(&c, &["0", "1"]).unwrap()).unwrap();
        let at = |x: f64, y: f64| v.field().values(&[x, y]).unwrap()[1];
        assert_eq!(at(0.0, 0.0), 1.0);
        assert!(at(0.9999, 0.0) < 1e-12);
        assert!(at(0.3, -0.99999) < 1e-12);
    }

    #[test]
    fn pairwise_sum_matches_plain_sum() {
        let v: Vec<f64> = (0..1000).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&v), 499500.0);
    }
}
