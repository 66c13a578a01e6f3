//! The tangent distribution D of a foliation, its orthogonal complement, and
//! adapted orthonormal frames built by Gram–Schmidt over jets.

use foliation_expr::Jet;
use serde::Serialize;

use crate::chart::{bracket, Chart, Point, PointGeometry, TangentVector, VectorFieldSpec};
use crate::error::{Error, Result};
use crate::germ::JetVec;

/// Norm below which a Gram–Schmidt candidate is treated as dependent.
pub const PIVOT_TOL: f64 = 1e-8;

/// Ordered spanning fields of D.
#[derive(Clone, Debug)]
pub struct FoliationSpec {
    fields: Vec<VectorFieldSpec>,
}

impl FoliationSpec {
    pub fn new(fields: Vec<VectorFieldSpec>) -> Result<FoliationSpec> {
        let Some(first) = fields.first() else {
            return Err(Error::Invalid("foliation needs at least one spanning field".into()));
        };
        let m = first.dim();
        if fields.iter().any(|f| f.dim() != m) {
            return Err(Error::Invalid("spanning fields have different dimensions".into()));
        }
        if fields.len() >= m {
            return Err(Error::Invalid(format!(
                "{} spanning fields leave no normal directions in dimension {m}",
                fields.len()
            )));
        }
        Ok(FoliationSpec { fields })
    }

    pub fn parse(chart: &Chart, fields: &[&[&str]]) -> Result<FoliationSpec> {
        FoliationSpec::new(
            fields
                .iter()
                .map(|f| VectorFieldSpec::parse(chart, f))
                .collect::<Result<Vec<_>>>()?,
        )
    }

    /// Leaf dimension n.
    pub fn leaf_dim(&self) -> usize {
        self.fields.len()
    }

    pub fn fields(&self) -> &[VectorFieldSpec] {
        &self.fields
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Part {
    /// Component in D.
    Top,
    /// Component in D^⊥.
    Bot,
}

/// An adapted orthonormal frame at a point, as plain vectors.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AdaptedFrame {
    pub point: Point,
    pub tangent: Vec<TangentVector>,
    pub normal: Vec<TangentVector>,
}

/// The adapted frame as jet germs: `e[..n]` span D, `e[n..]` span D^⊥.
/// Every member is a smooth local field, so its derivatives at the base
/// point are exact.
#[derive(Clone, Debug)]
pub struct JetFrame {
    pub geo: PointGeometry,
    pub n: usize,
    pub e: Vec<JetVec>,
}

/// Gram–Schmidt of `candidates` against the already orthonormal `basis`,
/// appending accepted vectors. Candidates whose residual norm is below
/// `PIVOT_TOL` are skipped when `skip` is set, otherwise reported.
fn gram_schmidt(
    geo: &PointGeometry,
    basis: &mut Vec<JetVec>,
    candidates: impl IntoIterator<Item = JetVec>,
    limit: usize,
    skip: bool,
) -> std::result::Result<(), usize> {
    for (idx, c) in candidates.into_iter().enumerate() {
        if basis.len() == limit {
            break;
        }
        let mut u = c;
        for e in basis.iter() {
            let k = geo.inner(&u, e);
            u = &u - &e.scale(k);
        }
        let n2 = geo.inner(&u, &u);
        if !(n2.value() > PIVOT_TOL * PIVOT_TOL) {
            if skip {
                continue;
            }
            return Err(idx);
        }
        basis.push(u.scale(n2.sqrt().recip()));
    }
    Ok(())
}

impl JetFrame {
    /// Builds the frame from explicit geometry and tangent spanning germs.
    pub fn from_spanning(geo: PointGeometry, spanning: Vec<JetVec>, p: &Point) -> Result<JetFrame> {
        let m = geo.dim();
        let n = spanning.len();
        let mut e = Vec::with_capacity(m);
        gram_schmidt(&geo, &mut e, spanning, n, false).map_err(|idx| {
            Error::RankDeficient(format!(
                "spanning field {} is dependent on the previous ones at {:?}",
                idx + 1,
                p.coords
            ))
        })?;
        let coordinate = (0..m).map(|k| JetVec::basis(m, k));
        gram_schmidt(&geo, &mut e, coordinate, m, true).expect("skipping never fails");
        if e.len() < m {
            return Err(Error::RankDeficient(format!(
                "normal complement has rank {} < {} at {:?}",
                e.len() - n,
                m - n,
                p.coords
            )));
        }
        Ok(JetFrame { geo, n, e })
    }

    pub fn new(chart: &Chart, fol: &FoliationSpec, p: &Point) -> Result<JetFrame> {
        let geo = chart.geometry_at(p)?;
        let spanning = fol
            .fields()
            .iter()
            .map(|f| f.germ(&geo.x))
            .collect::<Result<Vec<_>>>()?;
        JetFrame::from_spanning(geo, spanning, p)
    }

    pub fn dim(&self) -> usize {
        self.e.len()
    }

    pub fn tangent_frame(&self) -> &[JetVec] {
        &self.e[..self.n]
    }

    pub fn normal_frame(&self) -> &[JetVec] {
        &self.e[self.n..]
    }

    /// Evaluates a field spec as a germ at the base point.
    pub fn field(&self, spec: &VectorFieldSpec) -> Result<JetVec> {
        spec.germ(&self.geo.x)
    }

    pub fn inner(&self, a: &JetVec, b: &JetVec) -> Jet {
        self.geo.inner(a, b)
    }

    pub fn inner_values(&self, a: &[f64], b: &[f64]) -> f64 {
        self.geo.inner_values(a, b)
    }

    pub fn norm_values(&self, a: &[f64]) -> f64 {
        self.geo.norm_values(a)
    }

    fn expand(&self, v: &JetVec, frame: &[JetVec]) -> JetVec {
        let mut out = JetVec::zeros(v.dim());
        for e in frame {
            out = &out + &e.scale(self.inner(v, e));
        }
        out
    }

    /// v^⊤ as a germ.
    pub fn top(&self, v: &JetVec) -> JetVec {
        self.expand(v, self.tangent_frame())
    }

    /// v^⊥ = v − v^⊤ as a germ.
    pub fn bot(&self, v: &JetVec) -> JetVec {
        v - &self.top(v)
    }

    pub fn project(&self, v: &JetVec, which: Part) -> JetVec {
        match which {
            Part::Top => self.top(v),
            Part::Bot => self.bot(v),
        }
    }

    pub fn covariant(&self, x: &JetVec, y: &JetVec) -> JetVec {
        self.geo.covariant(x, y)
    }

    pub fn point(&self) -> &Point {
        &self.geo.point
    }

    pub fn to_adapted(&self) -> AdaptedFrame {
        let tv = |v: &JetVec| self.geo.tangent(v);
        AdaptedFrame {
            point: self.geo.point.clone(),
            tangent: self.tangent_frame().iter().map(tv).collect(),
            normal: self.normal_frame().iter().map(tv).collect(),
        }
    }

    /// Mean curvature H = Σ_α tr(A^{e_α}) e_α of D.
    pub fn mean_curvature(&self) -> Vec<f64> {
        let m = self.dim();
        let mut h = vec![0.0; m];
        for ea in self.normal_frame() {
            let mut tr = 0.0;
            for ei in self.tangent_frame() {
                tr -= self.inner(&self.covariant(ei, ea), ei).value();
            }
            for (hk, c) in h.iter_mut().zip(ea.values()) {
                *hk += tr * c;
            }
        }
        h
    }

    /// Mean curvature of D^⊥ regarded as a distribution in its own right:
    /// Σ_i tr(A_⊥^{e_i}) e_i = Σ_α (∇_{e_α} e_α)^⊤.
    pub fn mean_curvature_perp(&self) -> Vec<f64> {
        let m = self.dim();
        let mut h = vec![0.0; m];
        for ei in self.tangent_frame() {
            let mut tr = 0.0;
            for ea in self.normal_frame() {
                tr -= self.inner(&self.covariant(ea, ei), ea).value();
            }
            for (hk, c) in h.iter_mut().zip(ei.values()) {
                *hk += tr * c;
            }
        }
        h
    }

    /// Frobenius residual of D^⊥ over its orthonormal frame.
    pub fn normal_frobenius(&self) -> f64 {
        let normals = self.normal_frame();
        frobenius_over(&self.geo, normals, normals)
    }

    /// Frobenius residual of D over its orthonormal frame.
    pub fn tangent_frobenius(&self) -> f64 {
        let t = self.tangent_frame();
        frobenius_over(&self.geo, t, t)
    }
}

/// Largest norm of the part of [E_a, E_b] orthogonal to `span`, where
/// `span` is orthonormal at the base point.
fn frobenius_over(geo: &PointGeometry, fields: &[JetVec], span: &[JetVec]) -> f64 {
    let mut worst: f64 = 0.0;
    let spanv: Vec<Vec<f64>> = span.iter().map(|e| e.values()).collect();
    for a in 0..fields.len() {
        for b in a + 1..fields.len() {
            let mut w = bracket(&fields[a], &fields[b]).values();
            for e in &spanv {
                let k = geo.inner_values(&w, e);
                for (wk, ek) in w.iter_mut().zip(e) {
                    *wk -= k * ek;
                }
            }
            worst = worst.max(geo.norm_values(&w));
        }
    }
    worst
}

pub fn adapted_frame_at(chart: &Chart, fol: &FoliationSpec, p: &Point) -> Result<AdaptedFrame> {
    Ok(JetFrame::new(chart, fol, p)?.to_adapted())
}

pub fn project(chart: &Chart, fol: &FoliationSpec, v: &TangentVector, which: Part) -> Result<TangentVector> {
    let frame = JetFrame::new(chart, fol, &v.base)?;
    let pv = frame.project(&JetVec::constant(&v.components), which);
    Ok(TangentVector::new(frame.point().clone(), pv.values()))
}

/// A^V(X) = −(∇_X V)^⊤. Unlike the other operators this one insists that
/// V is normal and X tangent at `p` instead of projecting them.
pub fn shape_operator(
    chart: &Chart,
    fol: &FoliationSpec,
    v: &VectorFieldSpec,
    x: &VectorFieldSpec,
    p: &Point,
) -> Result<TangentVector> {
    let frame = JetFrame::new(chart, fol, p)?;
    let vg = frame.field(v)?;
    let xg = frame.field(x)?;
    let off = frame.top(&vg).values();
    if frame.norm_values(&off) >= PIVOT_TOL {
        return Err(Error::Misuse(format!(
            "shape operator: field V = {v} is not normal at {:?} (|V^⊤| = {:e})",
            p.coords,
            frame.norm_values(&off)
        )));
    }
    let off = frame.bot(&xg).values();
    if frame.norm_values(&off) >= PIVOT_TOL {
        return Err(Error::Misuse(format!(
            "shape operator: field X = {x} is not tangent to D at {:?} (|X^⊥| = {:e})",
            p.coords,
            frame.norm_values(&off)
        )));
    }
    let a = frame.shape(&vg, &xg);
    Ok(TangentVector::new(frame.point().clone(), a.values()))
}

pub fn mean_curvature(chart: &Chart, fol: &FoliationSpec, p: &Point) -> Result<TangentVector> {
    let frame = JetFrame::new(chart, fol, p)?;
    Ok(TangentVector::new(frame.point().clone(), frame.mean_curvature()))
}

/// Max over pairs of the part of [E_a, E_b] orthogonal to span(F), with
/// E the orthonormalized fields, so the value does not depend on how the
/// span is parametrized.
pub fn frobenius_residual(chart: &Chart, fields: &[VectorFieldSpec], p: &Point) -> Result<f64> {
    let geo = chart.geometry_at(p)?;
    let germs = fields
        .iter()
        .map(|f| f.germ(&geo.x))
        .collect::<Result<Vec<_>>>()?;
    let mut e = Vec::new();
    gram_schmidt(&geo, &mut e, germs, fields.len(), false).map_err(|idx| {
        Error::RankDeficient(format!("field {} is dependent at {:?}", idx + 1, p.coords))
    })?;
    Ok(frobenius_over(&geo, &e, &e))
}
