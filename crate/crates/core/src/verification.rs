//! Named, reportable checks of the foliation identities over a scenario.
//!
//! Every check samples the scenario's Halton plan, evaluates a pointwise
//! residual in parallel (results keep sample order, so reports do not depend
//! on scheduling) and returns a [`CheckReport`]. Checks whose statement is
//! conditional on hypotheses the scenario violates are still run, but the
//! report is marked informational.

use std::collections::BTreeMap;
use std::time::Instant;

use foliation_expr::BoundExpr;
use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::chart::{bracket, Chart, Point, TangentVector, VectorFieldSpec};
use crate::error::{Error, Result};
use crate::foliation::{FoliationSpec, JetFrame};
use crate::geodesic::DEFAULT_STEP;
use crate::germ::JetVec;
use crate::leaf::{integrate_leaf_many, LeafPatch};
use crate::sampling::{random_fields, SamplingPlan};
use crate::scenario::{Scenario, Tag};

/// Tolerance for hypotheses (minimality, integrability of D^⊥).
pub const HYPOTHESIS_TOL: f64 = 1e-8;
/// Random field pairs used by the identity checks.
pub const DEFAULT_PAIRS: usize = 10;
/// Length of the leaf geodesics in the transport check.
pub const TRANSPORT_TIME: f64 = 10.0;
/// |X^⊥| below this marks a valid start point for the transport check.
const START_TOL: f64 = 1e-10;
/// Leaf drift beyond this aborts the transport check.
const DRIFT_TOL: f64 = 1e-6;
const TRANSPORT_STARTS: usize = 4;
const WORST: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Hypotheses {
    pub minimal: bool,
    pub integrable_perp: bool,
    pub leaves_compact: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WorstPoint {
    pub coords: Vec<f64>,
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckReport {
    pub check: String,
    pub scenario: String,
    pub hypotheses: Hypotheses,
    pub samples: usize,
    pub seed: u64,
    pub max_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub worst_points: Vec<WorstPoint>,
    pub wall_ms: Option<u64>,
    /// Set when the statement's hypotheses fail on this scenario, so the
    /// residual carries no pass/fail meaning.
    pub informational: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    /// Secondary measurements, by name.
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub extras: BTreeMap<String, f64>,
}

impl CheckReport {
    /// Whether this report should fail a run.
    pub fn fails(&self, strict: bool) -> bool {
        !self.pass && (strict || !self.informational)
    }

    pub fn summary(&self) -> String {
        let verdict = match (self.pass, self.informational) {
            (true, false) => "PASS",
            (false, false) => "FAIL",
            (true, true) => "pass (informational)",
            (false, true) => "fail (informational)",
        };
        let mut s = format!(
            "{:<28} {:<4} max residual {:.3e} (tol {:.0e}, {} samples)  {verdict}",
            self.check, self.scenario, self.max_residual, self.tolerance, self.samples
        );
        if let Some(n) = &self.note {
            s.push_str(&format!("\n    note: {n}"));
        }
        for (k, v) in &self.extras {
            s.push_str(&format!("\n    {k} = {v:.6e}"));
        }
        s
    }
}

/// One request in a check run.
#[derive(Clone, Debug, PartialEq)]
pub enum CheckRequest {
    Lemma2,
    Lemma3,
    Killing(String),
    Preserving(String),
    Jacobi(String),
    Prop3,
    Prop4 { field: String, leaf: Option<String> },
    Minimality,
    IntegrablePerp,
    Prop2Integral { leaf: String },
}

impl CheckRequest {
    pub fn default_tolerance(&self) -> f64 {
        match self {
            CheckRequest::Prop4 { .. } | CheckRequest::Minimality | CheckRequest::IntegrablePerp => 1e-8,
            _ => 1e-6,
        }
    }
}

/// Per-sample residuals before they are folded into a report.
struct Rows {
    rows: Vec<(Vec<f64>, f64)>,
}

impl Rows {
    fn max(&self) -> f64 {
        self.rows.iter().fold(0.0, |m: f64, r| if r.1.is_nan() || m.is_nan() { f64::NAN } else { m.max(r.1) })
    }

    fn worst(&self) -> Vec<WorstPoint> {
        let mut idx: Vec<usize> = (0..self.rows.len()).collect();
        idx.sort_by(|&a, &b| {
            let (x, y) = (self.rows[a].1, self.rows[b].1);
            y.partial_cmp(&x).unwrap_or_else(|| y.is_nan().cmp(&x.is_nan()).reverse())
        });
        idx.into_iter()
            .take(WORST)
            .map(|i| WorstPoint {
                coords: self.rows[i].0.clone(),
                residual: self.rows[i].1,
            })
            .collect()
    }
}

fn norm_max(frame: &JetFrame, v: &[f64]) -> f64 {
    frame.norm_values(v)
}

pub struct Verifier<'s> {
    scenario: &'s Scenario,
    plan: SamplingPlan,
    points: Vec<Point>,
    hypotheses: Hypotheses,
    timestamps: bool,
}

impl<'s> Verifier<'s> {
    /// Samples the plan and computes the hypothesis flags on it.
    pub fn new(scenario: &'s Scenario, plan: SamplingPlan) -> Result<Verifier<'s>> {
        let points = plan.points(&scenario.chart)?;
        let flags = points
            .par_iter()
            .map(|p| {
                let f = JetFrame::new(&scenario.chart, &scenario.foliation, p)?;
                Ok((f.norm_values(&f.mean_curvature()), f.normal_frobenius()))
            })
            .collect::<Result<Vec<_>>>()?;
        let hypotheses = Hypotheses {
            minimal: flags.iter().all(|f| f.0 < HYPOTHESIS_TOL),
            integrable_perp: flags.iter().all(|f| f.1 < HYPOTHESIS_TOL),
            leaves_compact: scenario.leaves_compact(),
        };
        Ok(Verifier {
            scenario,
            plan,
            points,
            hypotheses,
            timestamps: true,
        })
    }

    /// Leaves `wall_ms` empty so reports are reproducible byte for byte.
    pub fn without_timestamps(mut self) -> Self {
        self.timestamps = false;
        self
    }

    pub fn hypotheses(&self) -> Hypotheses {
        self.hypotheses
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn plan(&self) -> &SamplingPlan {
        &self.plan
    }

    fn chart(&self) -> &Chart {
        &self.scenario.chart
    }

    fn fol(&self) -> &FoliationSpec {
        &self.scenario.foliation
    }

    fn minimal_integrable(&self) -> bool {
        self.hypotheses.minimal && self.hypotheses.integrable_perp
    }

    fn per_point(&self, f: impl Fn(&JetFrame) -> Result<f64> + Sync) -> Result<Rows> {
        let rows = self
            .points
            .par_iter()
            .map(|p| {
                let frame = JetFrame::new(self.chart(), self.fol(), p)?;
                Ok((p.coords.clone(), f(&frame)?))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Rows { rows })
    }

    fn report(&self, check: String, start: Instant, rows: &Rows, tol: f64) -> CheckReport {
        let max = rows.max();
        CheckReport {
            check,
            scenario: self.scenario.name.clone(),
            hypotheses: self.hypotheses,
            samples: rows.rows.len(),
            seed: self.plan.seed,
            max_residual: max,
            tolerance: tol,
            pass: max <= tol,
            worst_points: rows.worst(),
            wall_ms: self.timestamps.then(|| start.elapsed().as_millis() as u64),
            informational: false,
            note: None,
            extras: BTreeMap::new(),
        }
    }

    fn gate(&self, mut r: CheckReport, holds: bool, what: &str) -> CheckReport {
        if !holds {
            r.informational = true;
            r.note = Some(format!("hypotheses violated ({what}): residual expected"));
        }
        r
    }

    /// `count` seeded pairs of random fields from the given stream.
    pub fn random_pairs(&self, stream: u64, count: usize) -> Vec<(VectorFieldSpec, VectorFieldSpec)> {
        let f = random_fields(&self.plan, self.chart(), stream, 2 * count);
        f.chunks(2).map(|c| (c[0].clone(), c[1].clone())).collect()
    }

    fn pair_check(
        &self,
        name: &str,
        pairs: &[(VectorFieldSpec, VectorFieldSpec)],
        tol: f64,
        sides: impl Fn(&JetFrame, &JetVec, &JetVec) -> (f64, f64) + Sync,
    ) -> Result<CheckReport> {
        let start = Instant::now();
        let rows = self.per_point(|frame| {
            let mut worst: f64 = 0.0;
            for (v, w) in pairs {
                let (vg, wg) = (frame.field(v)?, frame.field(w)?);
                let (l, r) = sides(frame, &frame.bot(&vg), &frame.bot(&wg));
                worst = if (l - r).is_nan() { f64::NAN } else { worst.max((l - r).abs()) };
            }
            Ok(worst)
        })?;
        let r = self.report(name.into(), start, &rows, tol);
        Ok(self.gate(r, self.minimal_integrable(), "leaves minimal and normal distribution integrable"))
    }

    /// f_{V,W} = ⟨α_V, α_W⟩ − div_L((∇_V W)^⊤) over the given normal pairs.
    pub fn lemma2(&self, pairs: &[(VectorFieldSpec, VectorFieldSpec)], tol: f64) -> Result<CheckReport> {
        self.pair_check("lemma2", pairs, tol, |f, v, w| f.lemma2_sides(v, w))
    }

    /// ⟨J(V), W⟩ = ⟨α_V, α_W⟩ + div_L(α_V^t(W)) over the given normal pairs.
    pub fn lemma3(&self, pairs: &[(VectorFieldSpec, VectorFieldSpec)], tol: f64) -> Result<CheckReport> {
        self.pair_check("lemma3", pairs, tol, |f, v, w| f.lemma3_sides(v, w))
    }

    /// Operator norm of the symmetrized covariant derivative of X, which is
    /// the largest |⟨∇_Y X, Z⟩ + ⟨∇_Z X, Y⟩| over unit Y, Z.
    pub fn killing(&self, label: &str, x: &VectorFieldSpec, tol: f64) -> Result<CheckReport> {
        let start = Instant::now();
        let rows = self.per_point(|frame| {
            let xg = frame.field(x)?;
            let m = frame.dim();
            let d: Vec<Vec<f64>> = frame.e.iter().map(|e| frame.covariant(e, &xg).values()).collect();
            let ev: Vec<Vec<f64>> = frame.e.iter().map(|e| e.values()).collect();
            let s = DMatrix::from_fn(m, m, |a, b| frame.inner_values(&d[a], &ev[b]) + frame.inner_values(&d[b], &ev[a]));
            Ok(SymmetricEigen::new(s).eigenvalues.iter().fold(0.0, |m: f64, l| m.max(l.abs())))
        })?;
        Ok(self.report(format!("killing({label})"), start, &rows, tol))
    }

    fn preserving_rows(&self, x: &VectorFieldSpec) -> Result<Rows> {
        self.per_point(|frame| {
            let xg = frame.field(x)?;
            let mut worst: f64 = 0.0;
            for f in self.fol().fields() {
                let fg = frame.field(f)?;
                worst = worst.max(norm_max(frame, &frame.bot(&bracket(&xg, &fg)).values()));
            }
            Ok(worst)
        })
    }

    /// Largest |[X, F_j]^⊥| over the spanning fields F_j of D.
    pub fn preserving(&self, label: &str, x: &VectorFieldSpec, tol: f64) -> Result<CheckReport> {
        let start = Instant::now();
        let rows = self.preserving_rows(x)?;
        Ok(self.report(format!("preserving({label})"), start, &rows, tol))
    }

    /// Compares the preservation residual with a closed form.
    pub fn preserving_closed_form(
        &self,
        label: &str,
        x: &VectorFieldSpec,
        expected: &BoundExpr,
        tol: f64,
    ) -> Result<CheckReport> {
        let start = Instant::now();
        let mut rows = self.preserving_rows(x)?;
        for (p, r) in rows.rows.iter_mut() {
            *r = (*r - expected.eval(&self.chart().reduce(p))?).abs();
        }
        let mut rep = self.report(format!("preserving_closed_form({label})"), start, &rows, tol);
        rep.note = Some(format!("residual compared with {expected}"));
        Ok(rep)
    }

    /// |J(X^⊥)|: whether the normal part of X is a Jacobi field.
    pub fn jacobi_field(&self, label: &str, x: &VectorFieldSpec, tol: f64) -> Result<CheckReport> {
        let start = Instant::now();
        let rows = self.per_point(|frame| {
            let xb = frame.bot(&frame.field(x)?);
            Ok(frame.norm_values(&frame.jacobi(&xb)))
        })?;
        let r = self.report(format!("jacobi({label})"), start, &rows, tol);
        Ok(self.gate(r, self.minimal_integrable(), "leaves minimal and normal distribution integrable"))
    }

    /// max |H| over the samples.
    pub fn minimality(&self, tol: f64) -> Result<CheckReport> {
        let start = Instant::now();
        let rows = self.per_point(|frame| Ok(frame.norm_values(&frame.mean_curvature())))?;
        Ok(self.report("minimality".into(), start, &rows, tol))
    }

    /// Compares |H| with a closed form.
    pub fn mean_curvature_closed_form(&self, expected: &BoundExpr, tol: f64) -> Result<CheckReport> {
        let start = Instant::now();
        let rows = self.per_point(|frame| {
            let h = frame.norm_values(&frame.mean_curvature());
            Ok((h - expected.eval(&frame.point().coords)?).abs())
        })?;
        let mut rep = self.report("mean_curvature_closed_form".into(), start, &rows, tol);
        rep.note = Some(format!("|H| compared with {expected}"));
        Ok(rep)
    }

    /// Frobenius residual of D^⊥ over the samples.
    pub fn integrable_perp(&self, tol: f64) -> Result<CheckReport> {
        let start = Instant::now();
        let rows = self.per_point(|frame| Ok(frame.normal_frobenius()))?;
        Ok(self.report("integrable_perp".into(), start, &rows, tol))
    }

    /// div_L Y = div_M Y + ⟨Y, H^⊥⟩ for Y tangent to a leaf, with H^⊥ the
    /// mean curvature of the complementary distribution. Both foliations of
    /// the pair take the role of D in turn. The fields Y are α_V^t(V) for
    /// random normal V, and random tangent fields.
    pub fn prop3(&self, count: usize, tol: f64) -> Result<CheckReport> {
        let start = Instant::now();
        let second = self
            .scenario
            .foliation2
            .as_ref()
            .ok_or_else(|| Error::Misuse(format!("scenario {} has no second foliation", self.scenario.name)))?;
        let fields = random_fields(&self.plan, self.chart(), 3, 2 * count);
        let (vs, ys) = fields.split_at(count);
        let rows = self
            .points
            .par_iter()
            .map(|p| {
                let mut worst: f64 = 0.0;
                let mut corr: f64 = 0.0;
                for fol in [self.fol(), second] {
                    let frame = JetFrame::new(self.chart(), fol, p)?;
                    let hp = frame.mean_curvature_perp();
                    let mut candidates = Vec::with_capacity(2 * count);
                    for v in vs {
                        let vb = frame.bot(&frame.field(v)?);
                        candidates.push(frame.alpha_t(&vb, &vb));
                    }
                    for y in ys {
                        candidates.push(frame.top(&frame.field(y)?));
                    }
                    for y in &candidates {
                        let c = frame.inner_values(&y.values(), &hp);
                        let r = frame.div_leaf(y) - frame.div_full(y) - c;
                        worst = worst.max(r.abs());
                        corr = corr.max(c.abs());
                    }
                }
                Ok(((p.coords.clone(), worst), corr))
            })
            .collect::<Result<Vec<_>>>()?;
        let corr = rows.iter().map(|r| r.1).fold(0.0, f64::max);
        let rows = Rows {
            rows: rows.into_iter().map(|r| r.0).collect(),
        };
        let mut rep = self.report("prop3".into(), start, &rows, tol);
        rep.extras.insert("max_correction".into(), corr);
        Ok(rep)
    }

    /// Leaf nodes where |X^⊥| vanishes, spread along the node order.
    fn transport_starts(&self, leaf: &LeafPatch, x: &VectorFieldSpec) -> Result<Vec<Point>> {
        let coarse = leaf.with_resolution(leaf.resolution().min(8));
        let mut ok = Vec::new();
        for (u, _) in coarse.nodes() {
            let p = coarse.point(&u)?;
            let frame = JetFrame::new(self.chart(), self.fol(), &p)?;
            let xb = frame.bot(&frame.field(x)?).values();
            if frame.norm_values(&xb) < START_TOL {
                ok.push(p);
            }
        }
        if ok.is_empty() {
            return Err(Error::Misuse(format!("no point of leaf {} where the normal part of the field vanishes", leaf.name())));
        }
        let stride = ok.len().div_ceil(TRANSPORT_STARTS).max(1);
        Ok(ok.into_iter().step_by(stride).collect())
    }

    /// Follows leaf geodesics from points of `leaf` where X^⊥ = 0 and
    /// monitors |⟨α_{X^⊥}(ċ), e_α⟩| and |X^⊥(c)|, which should both stay 0
    /// when X preserves the foliation.
    pub fn prop4(&self, label: &str, x: &VectorFieldSpec, leaf: &LeafPatch, time: f64, tol: f64) -> Result<CheckReport> {
        let starts = self.transport_starts(leaf, x)?;
        self.prop4_from(label, x, &starts, time, tol)
    }

    /// As [`Verifier::prop4`] from explicit start points.
    pub fn prop4_from(&self, label: &str, x: &VectorFieldSpec, starts: &[Point], time: f64, tol: f64) -> Result<CheckReport> {
        let start = Instant::now();
        let preserving = self.preserving_rows(x)?.max();
        let mut rng = self.plan.rng(4);
        let mut jobs = Vec::new();
        for p in starts {
            let frame = JetFrame::new(self.chart(), self.fol(), p)?;
            let mut v = vec![0.0; frame.dim()];
            for e in frame.tangent_frame() {
                let c: f64 = rng.gen_range(-1.0..1.0);
                for (vk, ek) in v.iter_mut().zip(e.values()) {
                    *vk += c * ek;
                }
            }
            let s = frame.norm_values(&v);
            if !(s > 1e-12) {
                return Err(Error::Invalid("degenerate start velocity".into()));
            }
            v.iter_mut().for_each(|c| *c /= s);
            jobs.push((p.clone(), v));
        }
        let traces = jobs
            .par_iter()
            .map(|(p, v)| self.transport_trace(x, p, v, time))
            .collect::<Result<Vec<_>>>()?;
        let mut rows = Rows { rows: Vec::new() };
        let (mut alpha, mut normal, mut speed, mut drift) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
        for t in traces {
            for s in t {
                alpha = alpha.max(s.alpha);
                normal = normal.max(s.normal);
                speed = speed.max(s.speed_drift);
                drift = drift.max(s.leaf_drift);
                rows.rows.push((s.coords, s.alpha.max(s.normal)));
            }
        }
        let mut rep = self.report(format!("prop4({label})"), start, &rows, tol);
        rep.extras.insert("max_alpha".into(), alpha);
        rep.extras.insert("max_normal_part".into(), normal);
        rep.extras.insert("max_speed_drift".into(), speed);
        rep.extras.insert("max_leaf_drift".into(), drift);
        rep.extras.insert("preserving_residual".into(), preserving);
        if !(preserving <= 1e-6) {
            rep.informational = true;
            rep.note = Some(format!(
                "hypotheses violated (field does not preserve the foliation, residual {preserving:.3e}): residual expected"
            ));
        }
        Ok(rep)
    }

    fn transport_trace(&self, x: &VectorFieldSpec, p: &Point, v: &[f64], time: f64) -> Result<Vec<TraceSample>> {
        let chart = self.chart();
        let speed0 = chart.geometry_at(p)?.norm_values(v);
        let mut initial = vec![(0.0, p.clone(), v.to_vec())];
        let path = chart.geodesic_path(p, &TangentVector::new(p.clone(), v.to_vec()), time, DEFAULT_STEP, 10)?;
        initial.extend(path.into_iter().map(|s| (s.time, s.state.point, s.state.velocity.components)));
        initial
            .into_iter()
            .map(|(t, q, w)| {
                let frame = JetFrame::new(chart, self.fol(), &q)?;
                let speed = frame.norm_values(&w);
                let wv = JetVec::constant(&w);
                let drift = frame.norm_values(&frame.bot(&wv).values()) / speed;
                if drift > DRIFT_TOL {
                    return Err(Error::LeafDrift { time: t, drift });
                }
                let xg = frame.field(x)?;
                Ok(TraceSample {
                    coords: q.coords,
                    alpha: frame.norm_values(&frame.alpha(&xg, &wv).values()),
                    normal: frame.norm_values(&frame.bot(&xg).values()),
                    speed_drift: (speed / speed0 - 1.0).abs(),
                    leaf_drift: drift,
                })
            })
            .collect()
    }

    /// ∫_L ⟨J(V), V⟩ against ∫_L |α_V|² on a closed leaf, for `count` random
    /// normal fields; the residual is relative to max(1, ∫|α_V|²).
    pub fn prop2_integral(&self, leaf: &LeafPatch, count: usize, tol: f64) -> Result<CheckReport> {
        let start = Instant::now();
        let fields = random_fields(&self.plan, self.chart(), 5, count);
        let ints = integrate_leaf_many(self.chart(), leaf, |p| {
            let frame = JetFrame::new(self.chart(), self.fol(), p)?;
            let mut out = Vec::with_capacity(2 * count);
            for f in &fields {
                let vb = frame.bot(&frame.field(f)?);
                let vv = vb.values();
                out.push(frame.inner_values(&frame.jacobi(&vb), &vv));
                out.push(frame.alpha_inner(&vb, &vb));
            }
            Ok(out)
        })?;
        let mut rows = Rows { rows: Vec::new() };
        let mut extras = BTreeMap::new();
        for (i, pair) in ints.chunks(2).enumerate() {
            let (j, a) = (pair[0], pair[1]);
            rows.rows.push((Vec::new(), (j - a).abs() / a.abs().max(1.0)));
            extras.insert(format!("field{i}_jacobi_integral"), j);
            extras.insert(format!("field{i}_alpha_integral"), a);
        }
        let mut rep = self.report(format!("prop2_integral({})", leaf.name()), start, &rows, tol);
        rep.samples = leaf.nodes().len();
        rep.worst_points.clear();
        rep.extras = extras;
        let holds = self.minimal_integrable() && leaf.is_compact();
        Ok(self.gate(rep, holds, "closed leaf, leaves minimal and normal distribution integrable"))
    }

    fn field_spec(&self, name: &str) -> Result<&VectorFieldSpec> {
        Ok(&self.scenario.field(name)?.field)
    }

    /// Runs one request with the given tolerance (the request's default when
    /// `None`).
    pub fn run(&self, req: &CheckRequest, tol: Option<f64>) -> Result<CheckReport> {
        let tol = tol.unwrap_or_else(|| req.default_tolerance());
        match req {
            CheckRequest::Lemma2 => self.lemma2(&self.random_pairs(1, DEFAULT_PAIRS), tol),
            CheckRequest::Lemma3 => self.lemma3(&self.random_pairs(2, DEFAULT_PAIRS), tol),
            CheckRequest::Killing(f) => self.killing(f, self.field_spec(f)?, tol),
            CheckRequest::Preserving(f) => self.preserving(f, self.field_spec(f)?, tol),
            CheckRequest::Jacobi(f) => self.jacobi_field(f, self.field_spec(f)?, tol),
            CheckRequest::Prop3 => self.prop3(DEFAULT_PAIRS, tol),
            CheckRequest::Prop4 { field, leaf } => {
                let x = self.field_spec(field)?;
                match leaf {
                    Some(l) => self.prop4(field, x, self.scenario.leaf(l)?, TRANSPORT_TIME, tol),
                    None => {
                        let leaf = self.scenario.leaves.first().ok_or_else(|| {
                            Error::Misuse(format!("scenario {} has no leaf patches", self.scenario.name))
                        })?;
                        self.prop4(field, x, leaf, TRANSPORT_TIME, tol)
                    }
                }
            }
            CheckRequest::Minimality => self.minimality(tol),
            CheckRequest::IntegrablePerp => self.integrable_perp(tol),
            CheckRequest::Prop2Integral { leaf } => self.prop2_integral(self.scenario.leaf(leaf)?, 5, tol),
        }
    }

    /// The checks a scenario's own claims call for: the identities, the
    /// tagged fields, the divergence decomposition when a second foliation
    /// is present, and transport for preserving fields on closed leaves of
    /// minimal foliations with integrable normal bundle.
    pub fn standard_requests(&self) -> Vec<CheckRequest> {
        let s = self.scenario;
        let mut out = vec![CheckRequest::Lemma2, CheckRequest::Lemma3];
        if s.expect.minimal {
            out.push(CheckRequest::Minimality);
        }
        if s.expect.integrable_perp {
            out.push(CheckRequest::IntegrablePerp);
        }
        for f in &s.fields {
            if f.has(Tag::Killing) {
                out.push(CheckRequest::Killing(f.name.clone()));
            }
        }
        for f in &s.fields {
            if f.has(Tag::Preserving) {
                out.push(CheckRequest::Preserving(f.name.clone()));
                out.push(CheckRequest::Jacobi(f.name.clone()));
            }
        }
        if s.foliation2.is_some() {
            out.push(CheckRequest::Prop3);
        }
        if s.leaves_compact() && s.expect.minimal && s.expect.integrable_perp {
            for l in &s.leaves {
                out.push(CheckRequest::Prop2Integral { leaf: l.name().into() });
            }
            for f in &s.fields {
                if !f.has(Tag::Preserving) {
                    continue;
                }
                for l in &s.leaves {
                    if self.transport_starts(l, &f.field).is_ok() {
                        out.push(CheckRequest::Prop4 {
                            field: f.name.clone(),
                            leaf: Some(l.name().into()),
                        });
                    }
                }
            }
        }
        out
    }
}

struct TraceSample {
    coords: Vec<f64>,
    alpha: f64,
    normal: f64,
    speed_drift: f64,
    leaf_drift: f64,
}

/// One line of the self-test matrix.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SelftestItem {
    pub scenario: String,
    pub check: String,
    /// Whether the check is expected to pass.
    pub expect_pass: bool,
    pub max_residual: f64,
    pub tolerance: f64,
    pub ok: bool,
}

impl SelftestItem {
    fn from_report(r: &CheckReport, expect_pass: bool) -> SelftestItem {
        SelftestItem {
            scenario: r.scenario.clone(),
            check: r.check.clone(),
            expect_pass,
            max_residual: r.max_residual,
            tolerance: r.tolerance,
            ok: r.pass == expect_pass,
        }
    }
}

/// Checks every claim a scenario makes: its standard checks pass (those
/// whose hypotheses hold), minimality and integrability match the claims,
/// counterexample fields fail preservation, and closed forms match.
pub fn selftest(scenario: &Scenario, plan: &SamplingPlan) -> Result<Vec<SelftestItem>> {
    let v = Verifier::new(scenario, plan.clone())?.without_timestamps();
    let mut out = Vec::new();
    for req in v.standard_requests() {
        let r = v.run(&req, None)?;
        if r.informational {
            continue;
        }
        out.push(SelftestItem::from_report(&r, true));
    }
    if !scenario.expect.minimal {
        out.push(SelftestItem::from_report(&v.minimality(HYPOTHESIS_TOL)?, false));
    }
    if !scenario.expect.integrable_perp {
        out.push(SelftestItem::from_report(&v.integrable_perp(HYPOTHESIS_TOL)?, false));
    }
    if let Some(h) = &scenario.mean_curvature {
        out.push(SelftestItem::from_report(&v.mean_curvature_closed_form(h, 1e-8)?, true));
    }
    for f in &scenario.fields {
        if f.has(Tag::Counterexample) {
            out.push(SelftestItem::from_report(&v.preserving(&f.name, &f.field, 1e-6)?, false));
        }
        if let Some(r) = &f.preserving_residual {
            out.push(SelftestItem::from_report(&v.preserving_closed_form(&f.name, &f.field, r, 1e-6)?, true));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::builtin;

    fn plan(n: usize) -> SamplingPlan {
        SamplingPlan::new(n, 42)
    }

    #[test]
    fn hypotheses_follow_scenarios() {
        let s1 = builtin("S1").unwrap();
        let h = Verifier::new(&s1, plan(20)).unwrap().hypotheses();
        assert!(h.minimal && h.integrable_perp && h.leaves_compact);
        let s4 = builtin("S4").unwrap();
        let h = Verifier::new(&s4, plan(20)).unwrap().hypotheses();
        assert!(h.minimal && !h.integrable_perp);
        let s6 = builtin("S6").unwrap();
        let h = Verifier::new(&s6, plan(20)).unwrap().hypotheses();
        assert!(!h.minimal && !h.leaves_compact);
    }

    #[test]
    fn lemma_checks_on_hopf_are_informational() {
        let s4 = builtin("S4").unwrap();
        let v = Verifier::new(&s4, plan(10)).unwrap();
        let r = v.lemma2(&v.random_pairs(1, 2), 1e-6).unwrap();
        assert!(r.informational);
        assert!(!r.fails(false));
        assert!(r.note.unwrap().contains("hypotheses violated"));
    }

    #[test]
    fn pass_iff_within_tolerance() {
        let s1 = builtin("S1").unwrap();
        let v = Verifier::new(&s1, plan(10)).unwrap();
        let x = &s1.field("V1").unwrap().field;
        let r = v.jacobi_field("V1", x, 1e-6).unwrap();
        assert_eq!(r.pass, r.max_residual <= r.tolerance);
        assert!(!r.pass);
        assert!(r.worst_points.len() <= WORST);
        assert!(r.worst_points.windows(2).all(|w| w[0].residual >= w[1].residual));
    }

    #[test]
    fn transport_without_start_points_is_misuse() {
        let s1 = builtin("S1").unwrap();
        let v = Verifier::new(&s1, plan(4)).unwrap();
        let z = &s1.field("Z").unwrap().field;
        assert!(matches!(v.prop4("Z", z, &s1.leaves[0], 1.0, 1e-8), Err(Error::Misuse(_))));
    }

    #[test]
    fn prop3_needs_second_foliation() {
        let s1 = builtin("S1").unwrap();
        let v = Verifier::new(&s1, plan(4)).unwrap();
        assert!(matches!(v.prop3(2, 1e-6), Err(Error::Misuse(_))));
    }

    #[test]
    fn reports_without_timestamps_are_reproducible() {
        let s2 = builtin("S2").unwrap();
        let a = Verifier::new(&s2, plan(16)).unwrap().without_timestamps();
        let b = Verifier::new(&s2, plan(16)).unwrap().without_timestamps();
        let ra = serde_json::to_string(&a.run(&CheckRequest::Prop3, None).unwrap()).unwrap();
        let rb = serde_json::to_string(&b.run(&CheckRequest::Prop3, None).unwrap()).unwrap();
        assert_eq!(ra, rb);
        assert!(ra.contains("\"wall_ms\":null"));
    }
}
