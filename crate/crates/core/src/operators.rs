//! Operators on normal fields built from the adapted frame: α_V and its
//! transpose, the normal connection and its trace Laplacian, the curvature
//! trace R(V), Â, the Jacobi operator J, the integrand f_{V,W}, and leaf and
//! ambient divergences.
//!
//! Arguments are silently projected (normal fields to D^⊥, tangent fields to
//! D). Frame fields are jets, so their derivatives enter exactly.

use crate::chart::{bracket, curvature_with, Chart, Point, TangentVector, VectorFieldSpec};
use crate::error::Result;
use crate::foliation::{FoliationSpec, JetFrame};
use crate::germ::JetVec;

impl JetFrame {
    /// A^V(X) = −(∇_X V)^⊤, no projection of the arguments.
    pub fn shape(&self, v: &JetVec, x: &JetVec) -> JetVec {
        -&self.top(&self.covariant(x, v))
    }

    /// α_V(X) = [V^⊥, X^⊤]^⊥.
    pub fn alpha(&self, v: &JetVec, x: &JetVec) -> JetVec {
        self.bot(&bracket(&self.bot(v), &self.top(x)))
    }

    /// α_V evaluated on each tangent frame field.
    fn alpha_on_frame(&self, vb: &JetVec) -> Vec<JetVec> {
        self.tangent_frame()
            .iter()
            .map(|e| self.bot(&bracket(vb, e)))
            .collect()
    }

    /// α_V^t(W) = Σ_i ⟨W^⊥, α_V(e_i)⟩ e_i, as a germ tangent to D.
    pub fn alpha_t(&self, v: &JetVec, w: &JetVec) -> JetVec {
        let wb = self.bot(w);
        let alphas = self.alpha_on_frame(&self.bot(v));
        let mut out = JetVec::zeros(v.dim());
        for (a, e) in alphas.iter().zip(self.tangent_frame()) {
            out = &out + &e.scale(self.inner(&wb, a));
        }
        out
    }

    /// ⟨α_V, α_W⟩ = Σ_i ⟨α_V(e_i), α_W(e_i)⟩.
    pub fn alpha_inner(&self, v: &JetVec, w: &JetVec) -> f64 {
        let av = self.alpha_on_frame(&self.bot(v));
        let aw = self.alpha_on_frame(&self.bot(w));
        av.iter()
            .zip(&aw)
            .map(|(a, b)| self.inner_values(&a.values(), &b.values()))
            .sum()
    }

    /// ∇^⊥_X V = (∇_{X^⊤} V^⊥)^⊥.
    pub fn nabla_perp(&self, v: &JetVec, x: &JetVec) -> JetVec {
        self.bot(&self.covariant(&self.top(x), &self.bot(v)))
    }

    /// R(V) = Σ_i (R(e_i, V^⊥) e_i)^⊥.
    pub fn curvature_trace(&self, v: &JetVec) -> Vec<f64> {
        let r = self.geo.riemann_tensor();
        let vb = self.bot(v).values();
        let m = self.dim();
        let mut sum = vec![0.0; m];
        for e in self.tangent_frame() {
            let ev = e.values();
            let t = curvature_with(&r, &ev, &vb, &ev);
            for (s, x) in sum.iter_mut().zip(t) {
                *s += x;
            }
        }
        self.bot(&JetVec::constant(&sum)).values()
    }

    /// A^V(e_i) for each tangent frame field, V projected.
    fn shape_on_frame(&self, v: &JetVec) -> Vec<Vec<f64>> {
        let vb = self.bot(v);
        self.tangent_frame()
            .iter()
            .map(|e| self.shape(&vb, e).values())
            .collect()
    }

    /// ⟨A^V, A^W⟩ = Σ_i ⟨A^V(e_i), A^W(e_i)⟩.
    pub fn shape_inner(&self, v: &JetVec, w: &JetVec) -> f64 {
        let av = self.shape_on_frame(v);
        let aw = self.shape_on_frame(w);
        av.iter().zip(&aw).map(|(a, b)| self.inner_values(a, b)).sum()
    }

    /// Â(V) = Σ_α ⟨A^V, A^{e_α}⟩ e_α.
    pub fn a_hat(&self, v: &JetVec) -> Vec<f64> {
        let av = self.shape_on_frame(v);
        let mut out = vec![0.0; self.dim()];
        for ea in self.normal_frame() {
            let aa = self.shape_on_frame(ea);
            let k: f64 = av.iter().zip(&aa).map(|(a, b)| self.inner_values(a, b)).sum();
            for (o, c) in out.iter_mut().zip(ea.values()) {
                *o += k * c;
            }
        }
        out
    }

    /// ∇^{⊥2}V = Σ_i ∇^⊥_{e_i}∇^⊥_{e_i}V − ∇^⊥_{(∇_{e_i}e_i)^⊤}V.
    pub fn nabla_perp_squared(&self, v: &JetVec) -> Vec<f64> {
        let vb = self.bot(v);
        let m = self.dim();
        let mut out = JetVec::zeros(m);
        for e in self.tangent_frame() {
            let inner = self.bot(&self.covariant(e, &vb));
            let outer = self.bot(&self.covariant(e, &inner));
            let d = self.top(&self.covariant(e, e));
            let corr = self.bot(&self.covariant(&d, &vb));
            out = &out + &(&outer - &corr);
        }
        out.values()
    }

    /// J(V) = −∇^{⊥2}V + R(V) − Â(V).
    pub fn jacobi(&self, v: &JetVec) -> Vec<f64> {
        let l = self.nabla_perp_squared(v);
        let r = self.curvature_trace(v);
        let a = self.a_hat(v);
        (0..self.dim()).map(|k| -l[k] + r[k] - a[k]).collect()
    }

    /// ⟨∇^⊥V, ∇^⊥W⟩ = Σ_i ⟨∇^⊥_{e_i}V, ∇^⊥_{e_i}W⟩.
    pub fn nabla_perp_inner(&self, v: &JetVec, w: &JetVec) -> f64 {
        let (vb, wb) = (self.bot(v), self.bot(w));
        self.tangent_frame()
            .iter()
            .map(|e| {
                let a = self.bot(&self.covariant(e, &vb)).values();
                let b = self.bot(&self.covariant(e, &wb)).values();
                self.inner_values(&a, &b)
            })
            .sum()
    }

    /// f_{V,W} = ⟨∇^⊥V, ∇^⊥W⟩ + ⟨R(V), W⟩ − ⟨A^V, A^W⟩.
    pub fn f_vw(&self, v: &JetVec, w: &JetVec) -> f64 {
        let wb = self.bot(w).values();
        self.nabla_perp_inner(v, w) + self.inner_values(&self.curvature_trace(v), &wb)
            - self.shape_inner(v, w)
    }

    /// div_L X = Σ_i ⟨∇_{e_i} X^⊤, e_i⟩.
    pub fn div_leaf(&self, x: &JetVec) -> f64 {
        let xt = self.top(x);
        self.tangent_frame()
            .iter()
            .map(|e| self.inner(&self.covariant(e, &xt), e).value())
            .sum()
    }

    /// div_M X = Σ_A ⟨∇_{e_A} X, e_A⟩ over the whole frame.
    pub fn div_full(&self, x: &JetVec) -> f64 {
        self.e
            .iter()
            .map(|e| self.inner(&self.covariant(e, x), e).value())
            .sum()
    }

    /// Both sides of f_{V,W} = ⟨α_V, α_W⟩ − div_L((∇_V W)^⊤).
    pub fn lemma2_sides(&self, v: &JetVec, w: &JetVec) -> (f64, f64) {
        let (vb, wb) = (self.bot(v), self.bot(w));
        let lhs = self.f_vw(&vb, &wb);
        let rhs = self.alpha_inner(&vb, &wb) - self.div_leaf(&self.covariant(&vb, &wb));
        (lhs, rhs)
    }

    /// Both sides of ⟨J(V), W⟩ = ⟨α_V, α_W⟩ + div_L(α_V^t(W)).
    pub fn lemma3_sides(&self, v: &JetVec, w: &JetVec) -> (f64, f64) {
        let wb = self.bot(w).values();
        let lhs = self.inner_values(&self.jacobi(v), &wb);
        let rhs = self.alpha_inner(v, w) + self.div_leaf(&self.alpha_t(v, w));
        (lhs, rhs)
    }
}

fn with_frame<T>(
    chart: &Chart,
    fol: &FoliationSpec,
    p: &Point,
    f: impl FnOnce(&JetFrame) -> Result<T>,
) -> Result<T> {
    f(&JetFrame::new(chart, fol, p)?)
}

fn tangent(frame: &JetFrame, v: Vec<f64>) -> TangentVector {
    TangentVector::new(frame.point().clone(), v)
}

pub fn alpha(
    chart: &Chart,
    fol: &FoliationSpec,
    v: &VectorFieldSpec,
    x: &VectorFieldSpec,
    p: &Point,
) -> Result<TangentVector> {
    with_frame(chart, fol, p, |f| {
        Ok(tangent(f, f.alpha(&f.field(v)?, &f.field(x)?).values()))
    })
}

pub fn alpha_transpose(
    chart: &Chart,
    fol: &FoliationSpec,
    v: &VectorFieldSpec,
    w: &VectorFieldSpec,
    p: &Point,
) -> Result<TangentVector> {
    with_frame(chart, fol, p, |f| {
        Ok(tangent(f, f.alpha_t(&f.field(v)?, &f.field(w)?).values()))
    })
}

pub fn nabla_perp(
    chart: &Chart,
    fol: &FoliationSpec,
    v: &VectorFieldSpec,
    x: &VectorFieldSpec,
    p: &Point,
) -> Result<TangentVector> {
    with_frame(chart, fol, p, |f| {
        Ok(tangent(f, f.nabla_perp(&f.field(v)?, &f.field(x)?).values()))
    })
}

pub fn curvature_trace(chart: &Chart, fol: &FoliationSpec, v: &VectorFieldSpec, p: &Point) -> Result<TangentVector> {
    with_frame(chart, fol, p, |f| Ok(tangent(f, f.curvature_trace(&f.field(v)?))))
}

pub fn a_hat(chart: &Chart, fol: &FoliationSpec, v: &VectorFieldSpec, p: &Point) -> Result<TangentVector> {
    with_frame(chart, fol, p, |f| Ok(tangent(f, f.a_hat(&f.field(v)?))))
}

pub fn nabla_perp_squared(
    chart: &Chart,
    fol: &FoliationSpec,
    v: &VectorFieldSpec,
    p: &Point,
) -> Result<TangentVector> {
    with_frame(chart, fol, p, |f| Ok(tangent(f, f.nabla_perp_squared(&f.field(v)?))))
}

pub fn jacobi(chart: &Chart, fol: &FoliationSpec, v: &VectorFieldSpec, p: &Point) -> Result<TangentVector> {
    with_frame(chart, fol, p, |f| Ok(tangent(f, f.jacobi(&f.field(v)?))))
}

pub fn f_vw(
    chart: &Chart,
    fol: &FoliationSpec,
    v: &VectorFieldSpec,
    w: &VectorFieldSpec,
    p: &Point,
) -> Result<f64> {
    with_frame(chart, fol, p, |f| Ok(f.f_vw(&f.field(v)?, &f.field(w)?)))
}

pub fn div_leaf(chart: &Chart, fol: &FoliationSpec, x: &VectorFieldSpec, p: &Point) -> Result<f64> {
    with_frame(chart, fol, p, |f| Ok(f.div_leaf(&f.field(x)?)))
}

/// Ambient divergence. Frame independent, so computed in coordinates.
pub fn div_full(chart: &Chart, x: &VectorFieldSpec, p: &Point) -> Result<f64> {
    let geo = chart.geometry_at(p)?;
    Ok(geo.divergence(&x.germ(&geo.x)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::Axis;
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

    fn warped() -> (Chart, FoliationSpec) {
        let c = Chart::diagonal(
            vec![
                Axis::periodic("x", 2.0 * PI),
                Axis::periodic("y", 2.0 * PI),
                Axis::periodic("z", 2.0 * PI),
            ],
            &["1", "1", "exp(2*(0.3*sin(x)*cos(y)))"],
        )
        .unwrap();
        let fol = FoliationSpec::parse(&c, &[&["1", "0", "0"], &["0", "1", "0"]]).unwrap();
        (c, fol)
    }

    fn sphere_leaves() -> (Chart, FoliationSpec) {
        let c = Chart::diagonal(
            vec![
                Axis::interval("r", 1.0, 2.0),
                Axis::interval("th", 0.0, PI),
                Axis::periodic("ph", 2.0 * PI),
            ],
            &["1", "r^2", "r^2*sin(th)^2"],
        )
        .unwrap();
        let fol = FoliationSpec::parse(&c, &[&["0", "1", "0"], &["0", "0", "1"]]).unwrap();
        (c, fol)
    }

    /// f = 0.3 sin x cos y with flat gradient and Laplacian.
    fn warp(x: f64, y: f64) -> (f64, f64, f64, f64) {
        let f = 0.3 * x.sin() * y.cos();
        let fx = 0.3 * x.cos() * y.cos();
        let fy = -0.3 * x.sin() * y.sin();
        (f, fx, fy, -2.0 * f)
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() < tol)
    }

    #[test]
    fn alpha_examples() {
        let (c, fol) = torus3();
        let v = VectorFieldSpec::parse(&c, &["0", "0", "sin(x)"]).unwrap();
        let dx = VectorFieldSpec::coordinate(&c, 0);
        let x = 0.8;
        let a = alpha(&c, &fol, &v, &dx, &Point::new([x, 0.2, 0.3])).unwrap();
        assert!(close(&a.components, &[0.0, 0.0, -f64::cos(x)], 1e-15));

        let k = VectorFieldSpec::parse(&c, &["0.3", "-1", "2"]).unwrap();
        assert_eq!(alpha(&c, &fol, &k, &dx, &Point::new([x, 0.2, 0.3])).unwrap().max_abs(), 0.0);

        let (c, fol) = warped();
        let v = VectorFieldSpec::parse(&c, &["0", "0", "exp(-0.3*sin(x)*cos(y))"]).unwrap();
        let (px, py) = (0.4, 1.3);
        let (f, fx, _, _) = warp(px, py);
        let a = alpha(&c, &fol, &v, &VectorFieldSpec::coordinate(&c, 0), &Point::new([px, py, 2.0])).unwrap();
        assert!(close(&a.components, &[0.0, 0.0, fx * (-f).exp()], 1e-15));
    }

    #[test]
    fn alpha_transpose_example() {
        let (c, fol) = torus3();
        let v = VectorFieldSpec::parse(&c, &["0", "0", "sin(x)"]).unwrap();
        let x = 1.1;
        let t = alpha_transpose(&c, &fol, &v, &v, &Point::new([x, 0.0, 0.0])).unwrap();
        assert!(close(&t.components, &[-0.5 * (2.0 * x).sin(), 0.0, 0.0], 1e-15));
    }

    #[test]
    fn nabla_perp_examples() {
        let (c, fol) = torus3();
        let v = VectorFieldSpec::parse(&c, &["0", "0", "sin(x)"]).unwrap();
        let dx = VectorFieldSpec::coordinate(&c, 0);
        let x = 2.0;
        let n = nabla_perp(&c, &fol, &v, &dx, &Point::new([x, 0.0, 0.0])).unwrap();
        assert!(close(&n.components, &[0.0, 0.0, x.cos()], 1e-15));

        let (c, fol) = warped();
        let v = VectorFieldSpec::parse(&c, &["0", "0", "exp(-0.3*sin(x)*cos(y))"]).unwrap();
        let x = VectorFieldSpec::parse(&c, &["cos(y)", "sin(z)", "0"]).unwrap();
        let n = nabla_perp(&c, &fol, &v, &x, &Point::new([0.3, 0.9, 1.7])).unwrap();
        assert!(n.max_abs() < 1e-15);
    }

    #[test]
    fn curvature_trace_on_warped_chart() {
        let (c, fol) = warped();
        let v = VectorFieldSpec::parse(&c, &["0", "0", "exp(-0.3*sin(x)*cos(y))"]).unwrap();
        for (px, py) in [(0.4, 1.3), (2.0, -0.5), (5.0, 3.0)] {
            let p = Point::new([px, py, 0.7]);
            let frame = JetFrame::new(&c, &fol, &p).unwrap();
            let vg = frame.field(&v).unwrap();
            let rv = frame.curvature_trace(&vg);
            let (_, fx, fy, lap) = warp(px, py);
            let got = frame.inner_values(&rv, &vg.values());
            assert!((got - (lap + fx * fx + fy * fy)).abs() < 1e-14);
        }
    }

    #[test]
    fn sphere_leaf_a_hat() {
        let (c, fol) = sphere_leaves();
        let dr = VectorFieldSpec::coordinate(&c, 0);
        let r = 1.7;
        let a = a_hat(&c, &fol, &dr, &Point::new([r, 0.9, 0.0])).unwrap();
        assert!(close(&a.components, &[2.0 / (r * r), 0.0, 0.0], 1e-14));
    }

    #[test]
    fn flat_jacobi_examples() {
        let (c, fol) = torus3();
        let v = VectorFieldSpec::parse(&c, &["0", "0", "sin(x)"]).unwrap();
        let x = 0.6;
        let p = Point::new([x, 0.3, 0.0]);
        let l = nabla_perp_squared(&c, &fol, &v, &p).unwrap();
        assert!(close(&l.components, &[0.0, 0.0, -x.sin()], 1e-15));
        let j = jacobi(&c, &fol, &v, &p).unwrap();
        assert!(close(&j.components, &[0.0, 0.0, x.sin()], 1e-15));
        let dz = VectorFieldSpec::coordinate(&c, 2);
        assert_eq!(jacobi(&c, &fol, &dz, &p).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn f_vw_examples() {
        let (c, fol) = torus3();
        let v = VectorFieldSpec::parse(&c, &["0", "0", "sin(x)"]).unwrap();
        let x: f64 = 0.6;
        let f = f_vw(&c, &fol, &v, &v, &Point::new([x, 0.0, 0.0])).unwrap();
        assert!((f - x.cos().powi(2)).abs() < 1e-15);

        let (c, fol) = warped();
        let v = VectorFieldSpec::parse(&c, &["0", "0", "exp(-0.3*sin(x)*cos(y))"]).unwrap();
        let (px, py) = (1.2, 0.1);
        let (_, fx, fy, lap) = warp(px, py);
        let f = f_vw(&c, &fol, &v, &v, &Point::new([px, py, 0.0])).unwrap();
        assert!((f - (lap + fx * fx + fy * fy)).abs() < 1e-14);
    }

    #[test]
    fn divergences() {
        let (c, fol) = torus3();
        let x: f64 = 0.9;
        let p = Point::new([x, 0.0, 0.0]);
        let s = VectorFieldSpec::parse(&c, &["sin(x)", "0", "0"]).unwrap();
        assert!((div_leaf(&c, &fol, &s, &p).unwrap() - x.cos()).abs() < 1e-15);
        assert_eq!(div_leaf(&c, &fol, &VectorFieldSpec::coordinate(&c, 1), &p).unwrap(), 0.0);
        let xx = VectorFieldSpec::parse(&c, &["x", "0", "0"]).unwrap();
        assert_eq!(div_full(&c, &xx, &p).unwrap(), 1.0);

        let (c, fol) = warped();
        let grad = VectorFieldSpec::parse(&c, &["-0.3*cos(x)*cos(y)", "0.3*sin(x)*sin(y)", "0"]).unwrap();
        let (px, py) = (0.7, 2.2);
        let (_, _, _, lap) = warp(px, py);
        let d = div_leaf(&c, &fol, &grad, &Point::new([px, py, 1.0])).unwrap();
        assert!((d + lap).abs() < 1e-14);
    }

    #[test]
    fn frame_divergence_matches_coordinate_divergence() {
        let (c, fol) = sphere_leaves();
        let x = VectorFieldSpec::parse(&c, &["r*sin(ph)", "cos(th)*r", "sin(th)"]).unwrap();
        let p = Point::new([1.3, 1.1, 0.4]);
        let frame = JetFrame::new(&c, &fol, &p).unwrap();
        let a = frame.div_full(&frame.field(&x).unwrap());
        let b = div_full(&c, &x, &p).unwrap();
        assert!((a - b).abs() < 1e-13);
    }

    #[test]
    fn lemma3_closed_form_on_flat_torus() {
        let (c, fol) = torus3();
        let v = VectorFieldSpec::parse(&c, &["0", "0", "sin(x)"]).unwrap();
        let x: f64 = 1.9;
        let frame = JetFrame::new(&c, &fol, &Point::new([x, 0.5, 0.5])).unwrap();
        let vg = frame.field(&v).unwrap();
        let (l, r) = frame.lemma3_sides(&vg, &vg);
        assert!((l - x.sin().powi(2)).abs() < 1e-15);
        assert!((r - x.sin().powi(2)).abs() < 1e-15);
    }
}
