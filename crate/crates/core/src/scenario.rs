//! Scenarios: a chart, a foliation, named fields and leaf patches, read from
//! a sectioned key-value text format. The built-in scenarios ship as files
//! in that format.

use std::fmt::Write as _;
use std::path::Path;

use foliation_expr::{BoundExpr, Expression};
use serde::Serialize;

use crate::chart::{Axis, AxisKind, Chart, Point, VectorFieldSpec};
use crate::error::{Error, Result};
use crate::foliation::{frobenius_residual, FoliationSpec, JetFrame};
use crate::leaf::LeafPatch;
use crate::sampling::SamplingPlan;

/// Points used to validate a scenario at load time.
const VALIDATION_POINTS: usize = 64;
/// Coarsest grid on which leaf patches are validated.
const VALIDATION_GRID: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Tag {
    /// Expected to be a Killing field.
    Killing,
    /// Expected to map leaves to leaves.
    Preserving,
    /// Expected to fail foliation preservation.
    Counterexample,
}

impl Tag {
    fn parse(s: &str) -> Option<Tag> {
        match s {
            "killing" => Some(Tag::Killing),
            "preserving" => Some(Tag::Preserving),
            "counterexample" => Some(Tag::Counterexample),
            _ => None,
        }
    }

    fn as_str(self) -> &'static str {
        match self {
            Tag::Killing => "killing",
            Tag::Preserving => "preserving",
            Tag::Counterexample => "counterexample",
        }
    }
}

#[derive(Clone, Debug)]
pub struct NamedField {
    pub name: String,
    pub field: VectorFieldSpec,
    pub tags: Vec<Tag>,
    /// Closed form of the pointwise foliation-preservation residual, for
    /// fields expected to fail.
    pub preserving_residual: Option<BoundExpr>,
}

impl NamedField {
    pub fn has(&self, tag: Tag) -> bool {
        self.tags.contains(&tag)
    }
}

/// What the scenario claims about its foliation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Expectations {
    pub minimal: bool,
    pub integrable_perp: bool,
}

#[derive(Clone, Debug)]
pub struct Scenario {
    pub name: String,
    pub title: String,
    pub doc: String,
    pub expect: Expectations,
    /// Closed form of |H|, when known.
    pub mean_curvature: Option<BoundExpr>,
    pub chart: Chart,
    pub foliation: FoliationSpec,
    pub foliation2: Option<FoliationSpec>,
    pub fields: Vec<NamedField>,
    pub leaves: Vec<LeafPatch>,
}

const BUILTINS: [(&str, &str); 7] = [
    ("S1", include_str!("../scenarios/s1.scn")),
    ("S2", include_str!("../scenarios/s2.scn")),
    ("S3", include_str!("../scenarios/s3.scn")),
    ("S4", include_str!("../scenarios/s4.scn")),
    ("S5", include_str!("../scenarios/s5.scn")),
    ("S5b", include_str!("../scenarios/s5b.scn")),
    ("S6", include_str!("../scenarios/s6.scn")),
];

pub fn builtin_names() -> impl Iterator<Item = &'static str> {
    BUILTINS.iter().map(|b| b.0)
}

/// Source text of a built-in scenario.
pub fn builtin_source(name: &str) -> Option<&'static str> {
    BUILTINS
        .iter()
        .find(|b| b.0.eq_ignore_ascii_case(name))
        .map(|b| b.1)
}

/// A built-in scenario by short name (`S1`) or title (`flat_torus3`).
pub fn builtin(name: &str) -> Result<Scenario> {
    if let Some(src) = builtin_source(name) {
        return Scenario::parse(src, &format!("<builtin {name}>"));
    }
    for (short, src) in BUILTINS {
        let s = Scenario::parse(src, &format!("<builtin {short}>"))?;
        if s.title == name {
            return Ok(s);
        }
    }
    Err(Error::UnknownScenario(name.into()))
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    Scenario::parse(&text, &path.display().to_string())
}

/// A built-in name, or else a path to a scenario file.
pub fn resolve(name_or_path: &str) -> Result<Scenario> {
    match builtin(name_or_path) {
        Err(Error::UnknownScenario(_)) if Path::new(name_or_path).exists() => load_scenario(name_or_path),
        other => other,
    }
}

struct Entry {
    key: String,
    value: String,
    line: usize,
}

struct Section {
    kind: String,
    arg: Option<String>,
    line: usize,
    entries: Vec<Entry>,
}

impl Section {
    fn get(&self, key: &str) -> Option<&Entry> {
        self.entries.iter().find(|e| e.key == key)
    }

    fn all<'a>(&'a self, key: &'a str) -> impl Iterator<Item = &'a Entry> {
        self.entries.iter().filter(move |e| e.key == key)
    }
}

struct Ctx<'a> {
    file: &'a str,
}

impl Ctx<'_> {
    fn err(&self, line: usize, message: impl Into<String>) -> Error {
        Error::Scenario {
            file: self.file.into(),
            line,
            message: message.into(),
        }
    }

    fn require<'s>(&self, sec: &'s Section, key: &str) -> Result<&'s Entry> {
        sec.get(key)
            .ok_or_else(|| self.err(sec.line, format!("[{}] is missing `{key}`", sec.kind)))
    }

    fn expr(&self, e: &Entry, src: &str) -> Result<Expression> {
        Expression::parse(src.trim()).map_err(|err| self.err(e.line, format!("{}: {err}", e.key)))
    }

    fn bound(&self, e: &Entry, coords: &[String]) -> Result<BoundExpr> {
        self.expr(e, &e.value)?
            .bind(coords)
            .map_err(|err| self.err(e.line, format!("{}: {err}", e.key)))
    }

    fn constant(&self, e: &Entry, src: &str) -> Result<f64> {
        let x = self.expr(e, src)?;
        x.evaluate(&[])
            .map_err(|err| self.err(e.line, format!("{}: {err} (constants only)", e.key)))
    }

    fn list<'e>(&self, e: &'e Entry) -> Vec<&'e str> {
        e.value.split(',').map(str::trim).filter(|s| !s.is_empty()).collect()
    }

    fn tuple(&self, e: &Entry) -> Result<Vec<Expression>> {
        let v = e.value.trim();
        let inner = v
            .strip_prefix('(')
            .and_then(|s| s.strip_suffix(')'))
            .ok_or_else(|| self.err(e.line, format!("{}: expected a parenthesized list", e.key)))?;
        inner.split(',').map(|s| self.expr(e, s)).collect()
    }

    fn bools(&self, e: &Entry) -> Result<Vec<bool>> {
        self.list(e)
            .into_iter()
            .map(|s| match s {
                "true" => Ok(true),
                "false" => Ok(false),
                other => Err(self.err(e.line, format!("{}: expected true or false, found `{other}`", e.key))),
            })
            .collect()
    }

    fn bool(&self, e: &Entry) -> Result<bool> {
        let v = self.bools(e)?;
        if v.len() != 1 {
            return Err(self.err(e.line, format!("{}: expected a single boolean", e.key)));
        }
        Ok(v[0])
    }

    /// Axes from `<names>`, `periodic`, `period` and `bounds` entries.
    fn axes(&self, sec: &Section, names_key: &str) -> Result<Vec<Axis>> {
        let names_e = self.require(sec, names_key)?;
        let names = self.list(names_e);
        let periodic = match sec.get("periodic") {
            Some(e) => {
                let p = self.bools(e)?;
                if p.len() != names.len() {
                    return Err(self.err(e.line, format!("periodic: {} flags for {} coordinates", p.len(), names.len())));
                }
                p
            }
            None => vec![false; names.len()],
        };
        let mut periods = Vec::new();
        if let Some(e) = sec.get("period") {
            for s in self.list(e) {
                periods.push(self.constant(e, s)?);
            }
        }
        let mut bounds = Vec::new();
        if let Some(e) = sec.get("bounds") {
            for s in self.list(e) {
                let (lo, hi) = s
                    .split_once(':')
                    .ok_or_else(|| self.err(e.line, format!("bounds: expected `lo : hi`, found `{s}`")))?;
                bounds.push((self.constant(e, lo)?, self.constant(e, hi)?));
            }
        }
        let want_p = periodic.iter().filter(|&&p| p).count();
        if periods.len() != want_p {
            let line = sec.get("period").map_or(sec.line, |e| e.line);
            return Err(self.err(line, format!("expected {want_p} periods, found {}", periods.len())));
        }
        if bounds.len() != names.len() - want_p {
            let line = sec.get("bounds").map_or(sec.line, |e| e.line);
            return Err(self.err(
                line,
                format!("expected {} bounds, found {}", names.len() - want_p, bounds.len()),
            ));
        }
        let (mut pi, mut bi) = (0, 0);
        let mut axes = Vec::new();
        for (name, &per) in names.iter().zip(&periodic) {
            if !is_ident(name) {
                return Err(self.err(names_e.line, format!("`{name}` is not an identifier")));
            }
            let axis = if per {
                pi += 1;
                Axis::periodic(name, periods[pi - 1])
            } else {
                bi += 1;
                let (lo, hi) = bounds[bi - 1];
                Axis::interval(name, lo, hi)
            };
            match axis.kind {
                AxisKind::Periodic { period } if !(period > 0.0) => {
                    return Err(self.err(sec.line, format!("axis {name}: period must be positive")))
                }
                AxisKind::Interval { lo, hi } if !(lo < hi) => {
                    return Err(self.err(sec.line, format!("axis {name}: empty interval")))
                }
                _ => {}
            }
            axes.push(axis);
        }
        Ok(axes)
    }

    fn fields(&self, sec: &Section, chart: &Chart) -> Result<FoliationSpec> {
        let mut fields = Vec::new();
        for e in sec.all("span") {
            let comps = self.tuple(e)?;
            fields.push(VectorFieldSpec::new(chart.coords(), comps).map_err(|err| self.err(e.line, err.to_string()))?);
        }
        if fields.is_empty() {
            return Err(self.err(sec.line, format!("[{}] has no `span` lines", sec.kind)));
        }
        FoliationSpec::new(fields).map_err(|err| self.err(sec.line, err.to_string()))
    }
}

fn is_ident(s: &str) -> bool {
    let mut c = s.chars();
    matches!(c.next(), Some(ch) if ch.is_ascii_alphabetic() || ch == '_')
        && c.all(|ch| ch.is_ascii_alphanumeric() || ch == '_')
}

fn sections(text: &str, ctx: &Ctx) -> Result<Vec<Section>> {
    let mut out: Vec<Section> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let s = raw.trim();
        if s.is_empty() || s.starts_with('#') {
            continue;
        }
        if let Some(h) = s.strip_prefix('[') {
            let h = h
                .strip_suffix(']')
                .ok_or_else(|| ctx.err(line, "unterminated section header"))?
                .trim();
            let (kind, arg) = match h.split_once(char::is_whitespace) {
                Some((k, a)) => (k.to_string(), Some(a.trim().to_string())),
                None => (h.to_string(), None),
            };
            out.push(Section {
                kind,
                arg,
                line,
                entries: Vec::new(),
            });
            continue;
        }
        let (k, v) = s
            .split_once('=')
            .ok_or_else(|| ctx.err(line, format!("expected `key = value`, found `{s}`")))?;
        let sec = out
            .last_mut()
            .ok_or_else(|| ctx.err(line, "entry before the first section header"))?;
        sec.entries.push(Entry {
            key: k.trim().to_string(),
            value: v.trim().to_string(),
            line,
        });
    }
    Ok(out)
}

impl Scenario {
    /// Parses and validates scenario text; `file` labels error locations.
    pub fn parse(text: &str, file: &str) -> Result<Scenario> {
        let ctx = Ctx { file };
        let secs = sections(text, &ctx)?;
        let find = |kind: &str| secs.iter().find(|s| s.kind == kind);
        for s in &secs {
            let known = ["scenario", "manifold", "metric", "foliation", "foliation2", "field", "leaf"];
            if !known.contains(&s.kind.as_str()) {
                return Err(ctx.err(s.line, format!("unknown section [{}]", s.kind)));
            }
            let named = s.kind == "field" || s.kind == "leaf";
            if named != s.arg.is_some() {
                return Err(ctx.err(s.line, format!("bad header for [{}]", s.kind)));
            }
            if !named && secs.iter().filter(|t| t.kind == s.kind).count() > 1 {
                return Err(ctx.err(s.line, format!("duplicate section [{}]", s.kind)));
            }
        }

        let head = find("scenario").ok_or_else(|| ctx.err(1, "missing [scenario] section"))?;
        let name = ctx.require(head, "name")?.value.clone();
        let title = head.get("title").map_or_else(|| name.clone(), |e| e.value.clone());
        let doc = head.all("doc").map(|e| e.value.as_str()).collect::<Vec<_>>().join(" ");
        let expect = Expectations {
            minimal: head.get("minimal").map_or(Ok(true), |e| ctx.bool(e))?,
            integrable_perp: head.get("integrable_perp").map_or(Ok(true), |e| ctx.bool(e))?,
        };

        let man = find("manifold").ok_or_else(|| ctx.err(1, "missing [manifold] section"))?;
        let axes = ctx.axes(man, "coords")?;
        if let Some(e) = man.get("dim") {
            let d: usize = e
                .value
                .parse()
                .map_err(|_| ctx.err(e.line, format!("dim: `{}` is not a positive integer", e.value)))?;
            if d != axes.len() {
                return Err(ctx.err(e.line, format!("dim = {d} but {} coordinates listed", axes.len())));
            }
        }
        let coords: Vec<String> = axes.iter().map(|a| a.name.clone()).collect();

        let met = find("metric").ok_or_else(|| ctx.err(1, "missing [metric] section"))?;
        let mut given: Vec<((usize, usize), Expression, usize)> = Vec::new();
        for e in &met.entries {
            let (i, j) = metric_indices(&e.key, &coords)
                .ok_or_else(|| ctx.err(e.line, format!("`{}` is not a metric component g_<i>_<j>", e.key)))?;
            let x = ctx.expr(e, &e.value)?;
            if given.iter().any(|g| g.0 == (i, j)) {
                return Err(ctx.err(e.line, format!("{} given twice", e.key)));
            }
            given.push(((i, j), x, e.line));
        }
        let mut entries = Vec::new();
        for ((i, j), x, line) in &given {
            if i > j {
                if let Some(up) = given.iter().find(|g| g.0 == (*j, *i)) {
                    if up.1 != *x {
                        return Err(ctx.err(
                            *line,
                            format!(
                                "metric is not symmetric: g_{0}_{1} = {2} but g_{1}_{0} = {3}",
                                coords[*i], coords[*j], x, up.1
                            ),
                        ));
                    }
                    continue;
                }
            }
            entries.push(((*i.min(j), *i.max(j)), x.clone()));
        }
        let chart = Chart::new(axes, entries).map_err(|err| ctx.err(met.line, err.to_string()))?;

        let fsec = find("foliation").ok_or_else(|| ctx.err(1, "missing [foliation] section"))?;
        let foliation = ctx.fields(fsec, &chart)?;
        let foliation2 = match find("foliation2") {
            Some(s) => Some((ctx.fields(s, &chart)?, s.line)),
            None => None,
        };

        let mut fields: Vec<NamedField> = Vec::new();
        for s in secs.iter().filter(|s| s.kind == "field") {
            let fname = s.arg.clone().unwrap_or_default();
            if fields.iter().any(|f| f.name == fname) {
                return Err(ctx.err(s.line, format!("duplicate field `{fname}`")));
            }
            let e = ctx.require(s, "components")?;
            let comps = ctx.tuple(e)?;
            let field = VectorFieldSpec::new(chart.coords(), comps).map_err(|err| ctx.err(e.line, err.to_string()))?;
            let mut tags = Vec::new();
            if let Some(t) = s.get("tags") {
                for word in t.value.split([',', '|']).map(str::trim).filter(|w| !w.is_empty()) {
                    tags.push(Tag::parse(word).ok_or_else(|| ctx.err(t.line, format!("unknown tag `{word}`")))?);
                }
            }
            let preserving_residual = match s.get("preserving_residual") {
                Some(e) => Some(ctx.bound(e, chart.coords())?),
                None => None,
            };
            fields.push(NamedField {
                name: fname,
                field,
                tags,
                preserving_residual,
            });
        }

        let mut leaves: Vec<(LeafPatch, usize)> = Vec::new();
        for s in secs.iter().filter(|s| s.kind == "leaf") {
            let lname = s.arg.clone().unwrap_or_default();
            if leaves.iter().any(|l| l.0.name() == lname) {
                return Err(ctx.err(s.line, format!("duplicate leaf `{lname}`")));
            }
            let params = ctx.axes(s, "params")?;
            let e = ctx.require(s, "embed")?;
            let embed = ctx.tuple(e)?;
            let res = match s.get("resolution") {
                Some(r) => r
                    .value
                    .parse()
                    .map_err(|_| ctx.err(r.line, format!("resolution: `{}` is not an integer", r.value)))?,
                None => 64,
            };
            let leaf = LeafPatch::new(&lname, params, embed, res).map_err(|err| ctx.err(s.line, err.to_string()))?;
            leaves.push((leaf, s.line));
        }

        let mean_curvature = match head.get("mean_curvature") {
            Some(e) => Some(ctx.bound(e, chart.coords())?),
            None => None,
        };
        let scenario = Scenario {
            name,
            title,
            doc,
            expect,
            mean_curvature,
            chart,
            foliation,
            foliation2: foliation2.as_ref().map(|f| f.0.clone()),
            fields,
            leaves: leaves.iter().map(|l| l.0.clone()).collect(),
        };
        scenario.validate(&ctx, fsec.line, met.line, foliation2.map(|f| f.1), &leaves)?;
        Ok(scenario)
    }

    fn validate(
        &self,
        ctx: &Ctx,
        fol_line: usize,
        metric_line: usize,
        fol2_line: Option<usize>,
        leaves: &[(LeafPatch, usize)],
    ) -> Result<()> {
        let plan = SamplingPlan::new(VALIDATION_POINTS, 0);
        let points = plan.points(&self.chart)?;
        let n = self.foliation.leaf_dim();
        for p in &points {
            self.chart
                .metric_at(p)
                .map_err(|err| ctx.err(metric_line, err.to_string()))?;
            let frame = JetFrame::new(&self.chart, &self.foliation, p).map_err(|err| ctx.err(fol_line, err.to_string()))?;
            let r = frobenius_residual(&self.chart, self.foliation.fields(), p)?;
            if r > 1e-8 {
                return Err(ctx.err(
                    fol_line,
                    format!(
                        "distribution is not involutive: Frobenius residual {r:.6} at witness point {:?}",
                        p.coords
                    ),
                ));
            }
            if let (Some(f2), Some(line)) = (&self.foliation2, fol2_line) {
                if f2.leaf_dim() + n != self.chart.dim() {
                    return Err(ctx.err(line, "second foliation is not complementary in dimension"));
                }
                for f in f2.fields() {
                    let g = frame.field(f)?;
                    let top = frame.top(&g).values();
                    if frame.norm_values(&top) > 1e-10 {
                        return Err(ctx.err(line, format!("second foliation is not orthogonal to the first at {:?}", p.coords)));
                    }
                }
                let r = frobenius_residual(&self.chart, f2.fields(), p)?;
                if r > 1e-8 {
                    return Err(ctx.err(line, format!("second distribution is not involutive: residual {r:.6} at {:?}", p.coords)));
                }
            }
        }
        for (leaf, line) in leaves {
            let coarse = leaf.with_resolution(leaf.resolution().min(VALIDATION_GRID));
            coarse
                .validate(&self.chart, &self.foliation)
                .map_err(|err| ctx.err(*line, err.to_string()))?;
        }
        Ok(())
    }

    pub fn field(&self, name: &str) -> Result<&NamedField> {
        self.fields.iter().find(|f| f.name == name).ok_or_else(|| Error::UnknownItem {
            kind: "field",
            name: name.into(),
            scenario: self.name.clone(),
        })
    }

    pub fn leaf(&self, name: &str) -> Result<&LeafPatch> {
        self.leaves.iter().find(|l| l.name() == name).ok_or_else(|| Error::UnknownItem {
            kind: "leaf",
            name: name.into(),
            scenario: self.name.clone(),
        })
    }

    /// Writes the scenario back in file form. Numbers are printed in full,
    /// so `parse(to_source())` reproduces the scenario exactly.
    pub fn to_source(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "[scenario]");
        let _ = writeln!(s, "name = {}", self.name);
        let _ = writeln!(s, "title = {}", self.title);
        if !self.doc.is_empty() {
            let _ = writeln!(s, "doc = {}", self.doc);
        }
        let _ = writeln!(s, "minimal = {}", self.expect.minimal);
        let _ = writeln!(s, "integrable_perp = {}", self.expect.integrable_perp);
        if let Some(h) = &self.mean_curvature {
            let _ = writeln!(s, "mean_curvature = {h}");
        }
        let _ = writeln!(s, "\n[manifold]");
        let _ = writeln!(s, "dim = {}", self.chart.dim());
        let _ = writeln!(s, "coords = {}", self.chart.coords().join(", "));
        write_axes(&mut s, self.chart.axes());
        let _ = writeln!(s, "\n[metric]");
        let m = self.chart.dim();
        let c = self.chart.coords();
        for i in 0..m {
            for j in i..m {
                if let Some(e) = self.chart.metric_entry(i, j) {
                    let _ = writeln!(s, "g_{}_{} = {e}", c[i], c[j]);
                }
            }
        }
        let _ = writeln!(s, "\n[foliation]");
        for f in self.foliation.fields() {
            let _ = writeln!(s, "span = {f}");
        }
        if let Some(f2) = &self.foliation2 {
            let _ = writeln!(s, "\n[foliation2]");
            for f in f2.fields() {
                let _ = writeln!(s, "span = {f}");
            }
        }
        for f in &self.fields {
            let _ = writeln!(s, "\n[field {}]", f.name);
            let _ = writeln!(s, "components = {}", f.field);
            if !f.tags.is_empty() {
                let tags: Vec<&str> = f.tags.iter().map(|t| t.as_str()).collect();
                let _ = writeln!(s, "tags = {}", tags.join(", "));
            }
            if let Some(r) = &f.preserving_residual {
                let _ = writeln!(s, "preserving_residual = {r}");
            }
        }
        for l in &self.leaves {
            let _ = writeln!(s, "\n[leaf {}]", l.name());
            let names: Vec<&str> = l.params().iter().map(|a| a.name.as_str()).collect();
            let _ = writeln!(s, "params = {}", names.join(", "));
            write_axes(&mut s, l.params());
            let embed: Vec<String> = l.embedding().map(|e| e.to_string()).collect();
            let _ = writeln!(s, "embed = ({})", embed.join(", "));
            let _ = writeln!(s, "resolution = {}", l.resolution());
        }
        s
    }

    /// Human-readable summary.
    pub fn describe(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{} ({})", self.name, self.title);
        if !self.doc.is_empty() {
            let _ = writeln!(s, "  {}", self.doc);
        }
        let _ = writeln!(
            s,
            "  dimension {}, leaves of dimension {}; claims: minimal = {}, integrable normal distribution = {}",
            self.chart.dim(),
            self.foliation.leaf_dim(),
            self.expect.minimal,
            self.expect.integrable_perp
        );
        let c = self.chart.coords();
        for (i, a) in self.chart.axes().iter().enumerate() {
            match a.kind {
                AxisKind::Periodic { period } => {
                    let _ = writeln!(s, "  {}: periodic, period {period}", c[i]);
                }
                AxisKind::Interval { lo, hi } => {
                    let _ = writeln!(s, "  {}: interval ({lo}, {hi})", c[i]);
                }
            }
        }
        let m = self.chart.dim();
        for i in 0..m {
            for j in i..m {
                if let Some(e) = self.chart.metric_entry(i, j) {
                    let _ = writeln!(s, "  g_{}_{} = {e}", c[i], c[j]);
                }
            }
        }
        for f in self.foliation.fields() {
            let _ = writeln!(s, "  D spanned by {f}");
        }
        if let Some(f2) = &self.foliation2 {
            for f in f2.fields() {
                let _ = writeln!(s, "  second foliation spanned by {f}");
            }
        }
        for f in &self.fields {
            let tags: Vec<&str> = f.tags.iter().map(|t| t.as_str()).collect();
            let _ = writeln!(s, "  field {} = {} [{}]", f.name, f.field, tags.join(", "));
        }
        for l in &self.leaves {
            let embed: Vec<String> = l.embedding().map(|e| e.to_string()).collect();
            let _ = writeln!(
                s,
                "  leaf {}: ({}) on a {} grid{}",
                l.name(),
                embed.join(", "),
                l.resolution(),
                if l.is_compact() { ", closed" } else { "" }
            );
        }
        s
    }

    /// Whether every leaf patch is closed (and there is at least one).
    pub fn leaves_compact(&self) -> bool {
        !self.leaves.is_empty() && self.leaves.iter().all(|l| l.is_compact())
    }

    /// A sample point on each leaf, for callers that need points on leaves.
    pub fn leaf_point(&self, leaf: &LeafPatch, u: &[f64]) -> Result<Point> {
        leaf.point(u)
    }
}

fn write_axes(s: &mut String, axes: &[Axis]) {
    let flags: Vec<&str> = axes.iter().map(|a| if a.is_periodic() { "true" } else { "false" }).collect();
    let _ = writeln!(s, "periodic = {}", flags.join(", "));
    let periods: Vec<String> = axes
        .iter()
        .filter_map(|a| match a.kind {
            AxisKind::Periodic { period } => Some(Expression::number(period).to_string()),
            _ => None,
        })
        .collect();
    if !periods.is_empty() {
        let _ = writeln!(s, "period = {}", periods.join(", "));
    }
    let bounds: Vec<String> = axes
        .iter()
        .filter_map(|a| match a.kind {
            AxisKind::Interval { lo, hi } => Some(format!("{} : {}", Expression::number(lo), Expression::number(hi))),
            _ => None,
        })
        .collect();
    if !bounds.is_empty() {
        let _ = writeln!(s, "bounds = {}", bounds.join(", "));
    }
}

/// `g_<a>_<b>` with coordinate names that may themselves contain `_`.
fn metric_indices(key: &str, coords: &[String]) -> Option<(usize, usize)> {
    let rest = key.strip_prefix("g_")?;
    for (pos, _) in rest.match_indices('_') {
        let (a, b) = (&rest[..pos], &rest[pos + 1..]);
        let i = coords.iter().position(|c| c == a);
        let j = coords.iter().position(|c| c == b);
        if let (Some(i), Some(j)) = (i, j) {
            return Some((i, j));
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_builtins_load() {
        for name in builtin_names() {
            let s = builtin(name).unwrap_or_else(|e| panic!("{name}: {e}"));
            assert_eq!(s.name, name);
        }
    }

    #[test]
    fn lookup_by_title() {
        assert_eq!(builtin("hopf").unwrap().name, "S4");
        assert!(matches!(builtin("S9"), Err(Error::UnknownScenario(_))));
    }

    #[test]
    fn metric_keys_with_underscored_names() {
        let coords = vec!["a_b".to_string(), "c".to_string()];
        assert_eq!(metric_indices("g_a_b_c", &coords), Some((0, 1)));
        assert_eq!(metric_indices("g_c_c", &coords), Some((1, 1)));
        assert_eq!(metric_indices("g_c_d", &coords), None);
    }

    const BASE: &str = "[scenario]\nname = T\n[manifold]\ncoords = x, y, z\nperiodic = true, true, true\nperiod = 2*pi, 2*pi, 2*pi\n";

    #[test]
    fn non_involutive_distribution_is_rejected() {
        let text = format!(
            "{BASE}[metric]\ng_x_x = 1\ng_y_y = 1\ng_z_z = 1\n[foliation]\nspan = (1, 0, y)\nspan = (0, 1, 0)\n"
        );
        match Scenario::parse(&text, "t.scn") {
            Err(Error::Scenario { line, message, .. }) => {
                assert_eq!(line, 11);
                assert!(message.contains("Frobenius residual"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn asymmetric_metric_is_rejected() {
        let text = format!(
            "{BASE}[metric]\ng_x_x = 1\ng_y_y = 1\ng_z_z = 1\ng_x_y = 0.1\ng_y_x = 0.2\n[foliation]\nspan = (1, 0, 0)\n"
        );
        match Scenario::parse(&text, "t.scn") {
            Err(Error::Scenario { line, message, .. }) => {
                assert_eq!(line, 12);
                assert!(message.contains("not symmetric"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_diagonal_is_rejected() {
        let text = format!("{BASE}[metric]\ng_x_x = 1\ng_y_y = 1\n[foliation]\nspan = (1, 0, 0)\n");
        assert!(matches!(Scenario::parse(&text, "t.scn"), Err(Error::Scenario { line: 7, .. })));
    }

    #[test]
    fn syntax_errors_carry_lines() {
        let text = format!("{BASE}[metric]\ng_x_x = 1 +\n");
        match Scenario::parse(&text, "t.scn") {
            Err(Error::Scenario { line, message, .. }) => {
                assert_eq!(line, 8);
                assert!(message.contains("syntax error"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
