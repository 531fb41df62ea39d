//! Geometric building blocks. Each gadget draws its free choices, derives the
//! remaining elements by join and meet, and records a trace.

use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::{ConfigError, Configuration, LineFraming, LineId, LineRole, PointId, PointRole, Provenance};
use crate::field::{sample_general, FieldError, FieldSpec, Sampler, Scalar};
use crate::proj::{framed_coordinate, Ext, Framing, PPoint, ProjError};

/// Resamples allowed per gadget before giving up.
pub const RETRIES: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GadgetError {
    #[error("the midpoint construction degenerates in characteristic 2")]
    CharTwo,
    #[error("coincident inputs")]
    CoincidentInputs,
    #[error("case violation: {0}")]
    CaseViolation(String),
    #[error("{kind} failed after {attempts} attempts: {last}")]
    CoincidenceRetryExhausted { kind: TraceKind, attempts: usize, last: String },
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Proj(#[from] ProjError),
}

impl GadgetError {
    /// Failures caused by an unlucky free choice, cured by resampling.
    pub fn is_degenerate(&self) -> bool {
        match self {
            GadgetError::Proj(_) => true,
            GadgetError::Config(e) => matches!(
                e,
                ConfigError::DuplicateElement(_) | ConfigError::UnintendedIncidence { .. } | ConfigError::Proj(_)
            ),
            _ => false,
        }
    }

    /// The realization contradicts an enforced relation.
    pub fn is_contradiction(&self) -> bool {
        matches!(self, GadgetError::Config(ConfigError::IntendedIncidenceFails { .. }))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceKind {
    ParallelShift,
    Midpoint,
    Reflect,
    GenericAddition,
    GenericMultiplication,
    Equality,
    /// Ports points between two lines through a center fixed by two matched pairs.
    Transfer,
    VariableLine,
    FreeParameter,
}

impl TraceKind {
    pub const GADGETS: [TraceKind; 6] = [
        TraceKind::ParallelShift,
        TraceKind::Midpoint,
        TraceKind::Reflect,
        TraceKind::GenericAddition,
        TraceKind::GenericMultiplication,
        TraceKind::Equality,
    ];

    pub fn free_variables(self) -> usize {
        match self {
            TraceKind::Transfer => 0,
            TraceKind::FreeParameter => 4,
            _ => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            TraceKind::ParallelShift => "parallel_shift",
            TraceKind::Midpoint => "midpoint",
            TraceKind::Reflect => "reflect",
            TraceKind::GenericAddition => "generic_addition",
            TraceKind::GenericMultiplication => "generic_multiplication",
            TraceKind::Equality => "equality",
            TraceKind::Transfer => "transfer",
            TraceKind::VariableLine => "variable_line",
            TraceKind::FreeParameter => "free_parameter",
        }
    }

    pub fn from_name(s: &str) -> Option<TraceKind> {
        TraceKind::GADGETS
            .into_iter()
            .chain([TraceKind::Transfer, TraceKind::VariableLine, TraceKind::FreeParameter])
            .find(|k| k.name() == s)
    }
}

impl fmt::Display for TraceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ElementRef {
    Point(PointId),
    Line(LineId),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FreeChoice {
    pub name: String,
    pub value: Scalar,
    pub forbidden: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GadgetTrace {
    pub id: usize,
    pub kind: TraceKind,
    pub inputs: Vec<ElementRef>,
    pub free: Vec<FreeChoice>,
    pub outputs: Vec<ElementRef>,
    pub relation: String,
    pub free_variables: usize,
}

#[derive(Serialize, Deserialize)]
struct FreeRec {
    name: String,
    value: Value,
    forbidden: usize,
}

#[derive(Serialize, Deserialize)]
struct TraceRec {
    id: usize,
    kind: TraceKind,
    inputs: Vec<ElementRef>,
    free: Vec<FreeRec>,
    outputs: Vec<ElementRef>,
    relation: String,
    free_variables: usize,
}

impl GadgetTrace {
    pub fn to_json(&self) -> Value {
        let rec = TraceRec {
            id: self.id,
            kind: self.kind,
            inputs: self.inputs.clone(),
            free: self
                .free
                .iter()
                .map(|c| FreeRec { name: c.name.clone(), value: c.value.to_json(), forbidden: c.forbidden })
                .collect(),
            outputs: self.outputs.clone(),
            relation: self.relation.clone(),
            free_variables: self.free_variables,
        };
        serde_json::to_value(rec).expect("trace serializes")
    }

    pub fn from_json(v: &Value, field: &FieldSpec) -> Result<Self, ConfigError> {
        let rec: TraceRec = serde_json::from_value(v.clone()).map_err(|e| ConfigError::Schema(format!("trace: {e}")))?;
        let free = rec
            .free
            .into_iter()
            .map(|c| Ok(FreeChoice { name: c.name, value: field.scalar_from_json(&c.value)?, forbidden: c.forbidden }))
            .collect::<Result<Vec<_>, ConfigError>>()?;
        Ok(GadgetTrace {
            id: rec.id,
            kind: rec.kind,
            inputs: rec.inputs,
            free,
            outputs: rec.outputs,
            relation: rec.relation,
            free_variables: rec.free_variables,
        })
    }
}

/// A horizontal line with two labeled reference points and a variable point.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FramedTriple {
    pub line: LineId,
    pub s1: Scalar,
    pub p1: PointId,
    pub s2: Scalar,
    pub p2: PointId,
    pub v: PointId,
    pub value: Scalar,
}

impl FramedTriple {
    pub fn framing(&self, cfg: &Configuration) -> Result<Framing, ProjError> {
        Framing::new(
            cfg.line(self.line).coeffs.clone(),
            self.s1.clone(),
            cfg.point(self.p1).coords.clone(),
            self.s2.clone(),
            cfg.point(self.p2).coords.clone(),
        )
    }

    /// Framed coordinate of the variable point, recomputed from coordinates.
    pub fn measure(&self, cfg: &Configuration) -> Result<Ext, ProjError> {
        framed_coordinate(&self.framing(cfg)?, &cfg.point(self.v).coords)
    }

    /// Same points read with new labels: the value follows the affine chart change.
    pub fn relabel(&self, s1: Scalar, s2: Scalar) -> FramedTriple {
        let value = relabel_value(&self.value, (&self.s1, &self.s2), (&s1, &s2));
        FramedTriple { s1, s2, value, ..self.clone() }
    }

    /// Swap the two reference points (labels travel with their points).
    pub fn swapped(&self) -> FramedTriple {
        FramedTriple {
            s1: self.s2.clone(),
            p1: self.p2,
            s2: self.s1.clone(),
            p2: self.p1,
            ..self.clone()
        }
    }

    pub fn line_framing(&self) -> LineFraming {
        LineFraming { labels: vec![(self.s1.clone(), self.p1), (self.s2.clone(), self.p2)], variable: Some(self.v) }
    }
}

/// s1' + (s2' − s1')(q − s1)/(s2 − s1).
pub fn relabel_value(q: &Scalar, from: (&Scalar, &Scalar), to: (&Scalar, &Scalar)) -> Scalar {
    let t = &(q - from.0) / &(from.1 - from.0);
    to.0 + &(&(to.1 - to.0) * &t)
}

/// Run `f` with rollback on failure, resampling degenerate attempts.
/// A scripted sampler gets exactly one attempt.
pub fn transaction<T>(
    cfg: &mut Configuration,
    rng: &mut Sampler,
    kind: TraceKind,
    mut f: impl FnMut(&mut Configuration, &mut Sampler) -> Result<T, GadgetError>,
) -> Result<T, GadgetError> {
    let attempts = if rng.is_scripted() { 1 } else { RETRIES };
    let mut last = String::new();
    for _ in 0..attempts {
        let cp = cfg.checkpoint();
        match f(cfg, rng) {
            Ok(v) => return Ok(v),
            Err(e) => {
                cfg.rollback(cp);
                if !e.is_degenerate() {
                    return Err(e);
                }
                last = e.to_string();
            }
        }
    }
    Err(GadgetError::CoincidenceRetryExhausted { kind, attempts, last })
}

/// Builder for one trace: labels elements, records draws, inputs and outputs.
pub(crate) struct Rec {
    pub id: usize,
    kind: TraceKind,
    inputs: Vec<ElementRef>,
    free: Vec<FreeChoice>,
    outputs: Vec<ElementRef>,
}

impl Rec {
    pub fn new(cfg: &Configuration, kind: TraceKind) -> Self {
        Rec { id: cfg.traces.len(), kind, inputs: Vec::new(), free: Vec::new(), outputs: Vec::new() }
    }

    fn prov(&self) -> Provenance {
        Provenance::Trace(self.id)
    }

    fn label(&self, name: &str) -> String {
        format!("T{}.{}", self.id, name)
    }

    pub fn input_points(&mut self, ps: &[PointId]) {
        self.inputs.extend(ps.iter().map(|&p| ElementRef::Point(p)));
    }

    pub fn input_lines(&mut self, ls: &[LineId]) {
        self.inputs.extend(ls.iter().map(|&l| ElementRef::Line(l)));
    }

    pub fn draw(&mut self, cfg: &Configuration, rng: &mut Sampler, name: &str, forbidden: &[Scalar]) -> Result<Scalar, GadgetError> {
        let value = sample_general(cfg.field(), forbidden, rng)?;
        self.free.push(FreeChoice { name: name.to_string(), value: value.clone(), forbidden: forbidden.len() });
        Ok(value)
    }

    /// Record a value chosen outside the sampler.
    pub fn record(&mut self, name: &str, value: Scalar, forbidden: usize) {
        self.free.push(FreeChoice { name: name.to_string(), value, forbidden });
    }

    /// Draw an intercept for a new horizontal line.
    pub fn draw_intercept(&mut self, cfg: &Configuration, rng: &mut Sampler, name: &str) -> Result<Scalar, GadgetError> {
        let f = cfg.field();
        let mut forbidden = cfg.intercepts();
        forbidden.extend([f.zero(), f.one()]);
        self.draw(cfg, rng, name, &forbidden)
    }

    /// Draw a center point off the anchor lines and the horizontals with the given extra intercepts.
    pub fn draw_center(&mut self, cfg: &mut Configuration, rng: &mut Sampler, name: &str, extra: &[Scalar]) -> Result<PointId, GadgetError> {
        let f = cfg.field().clone();
        let x = self.draw(cfg, rng, &format!("{name}.x"), &[f.zero(), f.one()])?;
        let mut forbidden = cfg.intercepts();
        forbidden.extend([f.zero(), f.one(), x.clone()]);
        forbidden.extend_from_slice(extra);
        let y = self.draw(cfg, rng, &format!("{name}.y"), &forbidden)?;
        self.point(cfg, name, PointRole::Auxiliary, PPoint::affine(x, y), &[])
    }

    pub fn point(&mut self, cfg: &mut Configuration, name: &str, role: PointRole, coords: PPoint, on: &[LineId]) -> Result<PointId, GadgetError> {
        let id = cfg.add_point(&self.label(name), role, coords, self.prov(), on)?;
        self.outputs.push(ElementRef::Point(id));
        Ok(id)
    }

    pub fn meet(&mut self, cfg: &mut Configuration, name: &str, role: PointRole, l: LineId, m: LineId, also: &[LineId]) -> Result<PointId, GadgetError> {
        let id = cfg.add_meet(&self.label(name), role, self.prov(), l, m, also)?;
        self.outputs.push(ElementRef::Point(id));
        Ok(id)
    }

    pub fn join(&mut self, cfg: &mut Configuration, name: &str, a: PointId, b: PointId, also: &[PointId]) -> Result<LineId, GadgetError> {
        let id = cfg.add_join(&self.label(name), a, b, also)?;
        self.outputs.push(ElementRef::Line(id));
        Ok(id)
    }

    pub fn horizontal(&mut self, cfg: &mut Configuration, name: &str, role: LineRole, c: &Scalar) -> Result<LineId, GadgetError> {
        let id = cfg.add_horizontal(&self.label(name), role, c, &[])?;
        self.outputs.push(ElementRef::Line(id));
        Ok(id)
    }

    /// Horizontal line through an existing point.
    pub fn horizontal_through(&mut self, cfg: &mut Configuration, name: &str, p: PointId) -> Result<LineId, GadgetError> {
        let p3 = cfg.p3().expect("configuration has p3");
        let id = cfg.add_join(&self.label(name), p, p3, &[])?;
        self.outputs.push(ElementRef::Line(id));
        Ok(id)
    }

    pub fn finish(self, cfg: &mut Configuration, relation: String) -> usize {
        let free_variables = self.free.len();
        debug_assert!(self.kind == TraceKind::VariableLine || free_variables == self.kind.free_variables());
        cfg.free_count += free_variables;
        cfg.traces.push(GadgetTrace {
            id: self.id,
            kind: self.kind,
            inputs: self.inputs,
            free: self.free,
            outputs: self.outputs,
            relation,
            free_variables,
        });
        self.id
    }
}

fn plabel(cfg: &Configuration, p: PointId) -> &str {
    &cfg.point(p).label
}

#[derive(Clone, Debug)]
pub struct Shifted {
    pub triple: FramedTriple,
    pub center: PointId,
    pub trace: usize,
}

/// Project a framed triple from a general center onto a general horizontal line.
pub fn parallel_shift(cfg: &mut Configuration, src: &FramedTriple, rng: &mut Sampler) -> Result<Shifted, GadgetError> {
    transaction(cfg, rng, TraceKind::ParallelShift, |cfg, rng| {
        let mut r = Rec::new(cfg, TraceKind::ParallelShift);
        r.input_points(&[src.p1, src.v, src.p2]);
        let (lp, x) = shift_onto_fresh(cfg, rng, &mut r, &[src.p1, src.v, src.p2])?;
        let triple = FramedTriple { line: lp.0, p1: x[0], v: x[1], p2: x[2], ..src.clone() };
        cfg.set_framing(lp.0, triple.line_framing());
        let rel = format!("{} = {}", plabel(cfg, triple.v), plabel(cfg, src.v));
        let trace = r.finish(cfg, rel);
        Ok(Shifted { triple, center: lp.1, trace })
    })
}

// Draw l' and X, then project each source point from X onto l'.
// Returns ((l', X), projected points).
fn shift_onto_fresh(cfg: &mut Configuration, rng: &mut Sampler, r: &mut Rec, src: &[PointId]) -> Result<((LineId, PointId), Vec<PointId>), GadgetError> {
    let c = r.draw_intercept(cfg, rng, "l'")?;
    let x = r.draw_center(cfg, rng, "X", std::slice::from_ref(&c))?;
    let lp = r.horizontal(cfg, "l'", LineRole::VariableBearing, &c)?;
    let mut out = Vec::with_capacity(src.len());
    for (i, &p) in src.iter().enumerate() {
        let ray = r.join(cfg, &format!("r{i}"), x, p, &[])?;
        out.push(r.meet(cfg, &format!("P{i}'"), PointRole::Framing, ray, lp, &[])?);
    }
    Ok(((lp, x), out))
}

#[derive(Clone, Debug)]
pub struct Midpoint {
    pub m: PointId,
    pub trace: usize,
}

fn midpoint_pre(cfg: &Configuration, a: PointId, b: PointId) -> Result<(), GadgetError> {
    if cfg.field().characteristic() == 2 {
        return Err(GadgetError::CharTwo);
    }
    if a == b {
        return Err(GadgetError::CoincidentInputs);
    }
    Ok(())
}

// The complete quadrilateral on A, B (on l) and a general l'. If `m` is given the
// diagonal XY must pass through it; otherwise M = XY ∩ l is created.
fn midpoint_figure(cfg: &mut Configuration, rng: &mut Sampler, r: &mut Rec, l: LineId, a: PointId, b: PointId, m: Option<PointId>) -> Result<PointId, GadgetError> {
    let ((lp, x), ab) = shift_onto_fresh(cfg, rng, r, &[a, b])?;
    cfg.set_point_role(ab[0], PointRole::Auxiliary);
    cfg.set_point_role(ab[1], PointRole::Auxiliary);
    let d1 = r.join(cfg, "AB'", a, ab[1], &[])?;
    let d2 = r.join(cfg, "BA'", b, ab[0], &[])?;
    let y = r.meet(cfg, "Y", PointRole::Auxiliary, d1, d2, &[])?;
    let (xy, m) = match m {
        Some(m) => (r.join(cfg, "XY", x, y, &[m])?, m),
        None => {
            let xy = r.join(cfg, "XY", x, y, &[])?;
            (xy, r.meet(cfg, "M", PointRole::Framing, xy, l, &[])?)
        }
    };
    r.meet(cfg, "M'", PointRole::Auxiliary, xy, lp, &[])?;
    Ok(m)
}

/// Mark the midpoint of two points on a horizontal line.
pub fn midpoint(cfg: &mut Configuration, l: LineId, a: PointId, b: PointId, rng: &mut Sampler) -> Result<Midpoint, GadgetError> {
    midpoint_pre(cfg, a, b)?;
    transaction(cfg, rng, TraceKind::Midpoint, |cfg, rng| {
        let mut r = Rec::new(cfg, TraceKind::Midpoint);
        r.input_lines(&[l]);
        r.input_points(&[a, b]);
        let m = midpoint_figure(cfg, rng, &mut r, l, a, b, None)?;
        let rel = format!("{} = ({} + {})/2", plabel(cfg, m), plabel(cfg, a), plabel(cfg, b));
        let trace = r.finish(cfg, rel);
        Ok(Midpoint { m, trace })
    })
}

/// Mark A = 2M − B on the line of M and B, certified by the midpoint figure.
pub fn reflect(cfg: &mut Configuration, l: LineId, m: PointId, b: PointId, label: &str, role: PointRole, rng: &mut Sampler) -> Result<Midpoint, GadgetError> {
    midpoint_pre(cfg, m, b)?;
    let (um, y) = cfg.point(m).coords.to_affine().ok_or(GadgetError::CoincidentInputs)?;
    let (ub, _) = cfg.point(b).coords.to_affine().ok_or(GadgetError::CoincidentInputs)?;
    let ua = &(&um + &um) - &ub;
    transaction(cfg, rng, TraceKind::Reflect, |cfg, rng| {
        let mut r = Rec::new(cfg, TraceKind::Reflect);
        r.input_lines(&[l]);
        r.input_points(&[m, b]);
        let a = r.point(cfg, label, role, PPoint::affine(ua.clone(), y.clone()), &[l])?;
        midpoint_figure(cfg, rng, &mut r, l, a, b, Some(m))?;
        let rel = format!("{} = 2{} - {}", plabel(cfg, a), plabel(cfg, m), plabel(cfg, b));
        let trace = r.finish(cfg, rel);
        Ok(Midpoint { m: a, trace })
    })
}

fn check_zero_one(t: &FramedTriple, what: &str) -> Result<(), GadgetError> {
    if !t.s1.is_zero() || !t.s2.is_one() {
        return Err(GadgetError::CaseViolation(format!("{what} is not framed by (0, 1)")));
    }
    Ok(())
}

fn check_generic(values: &[(&Scalar, &str)]) -> Result<(), GadgetError> {
    for (v, name) in values {
        if v.is_zero() || v.is_one() {
            return Err(GadgetError::CaseViolation(format!("{name} = {v} at the witness")));
        }
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Arith {
    Add,
    Mul,
}

/// V' = V_a + V_b on a general line framed by (0, 1).
pub fn generic_addition(cfg: &mut Configuration, a: &FramedTriple, b: &FramedTriple, rng: &mut Sampler) -> Result<Shifted, GadgetError> {
    generic_arith(cfg, a, b, rng, Arith::Add)
}

/// V' = V_a · V_b on a general line framed by (0, 1).
pub fn generic_multiplication(cfg: &mut Configuration, a: &FramedTriple, b: &FramedTriple, rng: &mut Sampler) -> Result<Shifted, GadgetError> {
    generic_arith(cfg, a, b, rng, Arith::Mul)
}

fn generic_arith(cfg: &mut Configuration, a: &FramedTriple, b: &FramedTriple, rng: &mut Sampler, op: Arith) -> Result<Shifted, GadgetError> {
    check_zero_one(a, "first input")?;
    check_zero_one(b, "second input")?;
    if a.line == b.line {
        return Err(GadgetError::CaseViolation("inputs share a line".into()));
    }
    let (kind, value, sym) = match op {
        Arith::Add => (TraceKind::GenericAddition, &a.value + &b.value, "+"),
        Arith::Mul => (TraceKind::GenericMultiplication, &a.value * &b.value, "*"),
    };
    check_generic(&[(&a.value, "x_a"), (&b.value, "x_b"), (&value, "result")])?;
    transaction(cfg, rng, kind, |cfg, rng| {
        let mut r = Rec::new(cfg, kind);
        r.input_points(&[a.p1, a.v, a.p2, b.p1, b.v, b.p2]);
        let ((lp, center), pr) = shift_onto_fresh(cfg, rng, &mut r, &[a.p1, a.v, a.p2])?;
        let (p0, v, p1) = (pr[0], pr[1], pr[2]);
        let vp = match op {
            Arith::Add => {
                let m0 = r.join(cfg, "P0'Pb0", p0, b.p1, &[])?;
                let m1 = r.join(cfg, "P1'Pb1", p1, b.p2, &[])?;
                let y2 = r.meet(cfg, "Y2", PointRole::Auxiliary, m0, m1, &[])?;
                let l2 = r.horizontal_through(cfg, "l''", y2)?;
                let vb0 = r.join(cfg, "VPb0", v, b.p1, &[])?;
                let y1 = r.meet(cfg, "Y1", PointRole::Auxiliary, vb0, l2, &[])?;
                let out = r.join(cfg, "Y1Vb", y1, b.v, &[])?;
                r.meet(cfg, "V'", PointRole::Variable, out, lp, &[])?
            }
            Arith::Mul => {
                let m0 = r.join(cfg, "P0'Pb0", p0, b.p1, &[])?;
                let m1 = r.join(cfg, "VPb1", v, b.p2, &[])?;
                let y = r.meet(cfg, "Y", PointRole::Auxiliary, m0, m1, &[])?;
                let out = r.join(cfg, "YVb", y, b.v, &[])?;
                r.meet(cfg, "V'", PointRole::Variable, out, lp, &[])?
            }
        };
        cfg.set_point_role(v, PointRole::Auxiliary);
        let triple = FramedTriple { line: lp, s1: a.s1.clone(), p1: p0, s2: a.s2.clone(), p2: p1, v: vp, value: value.clone() };
        cfg.set_framing(lp, triple.line_framing());
        let rel = format!("{} = {} {sym} {}", plabel(cfg, vp), plabel(cfg, a.v), plabel(cfg, b.v));
        let trace = r.finish(cfg, rel);
        Ok(Shifted { triple, center, trace })
    })
}

#[derive(Clone, Debug)]
pub struct Equality {
    pub line: LineId,
    /// Images of a's reference points on the new line.
    pub refs: (PointId, PointId),
    pub v: PointId,
    pub center: PointId,
    pub second_center: PointId,
    pub trace: usize,
}

/// Impose x_a = x_b for two triples with the same labels.
pub fn equality(cfg: &mut Configuration, a: &FramedTriple, b: &FramedTriple, rng: &mut Sampler) -> Result<Equality, GadgetError> {
    let b = if a.s1 == b.s1 && a.s2 == b.s2 {
        b.clone()
    } else if a.s1 == b.s2 && a.s2 == b.s1 {
        b.swapped()
    } else {
        return Err(GadgetError::CaseViolation(format!(
            "framing types {{{}, {}}} and {{{}, {}}} differ",
            a.s1, a.s2, b.s1, b.s2
        )));
    };
    transaction(cfg, rng, TraceKind::Equality, |cfg, rng| {
        let mut r = Rec::new(cfg, TraceKind::Equality);
        r.input_points(&[a.p1, a.v, a.p2, b.p1, b.v, b.p2]);
        let ((lp, x), pr) = shift_onto_fresh(cfg, rng, &mut r, &[a.p1, a.v, a.p2])?;
        let m1 = r.join(cfg, "P1'Pb1", pr[0], b.p1, &[])?;
        let m2 = r.join(cfg, "P2'Pb2", pr[2], b.p2, &[])?;
        let xp = r.meet(cfg, "X'", PointRole::Auxiliary, m1, m2, &[])?;
        r.join(cfg, "X'Vb", xp, b.v, &[pr[1]])?;
        let rel = format!("{} = {}", plabel(cfg, a.v), plabel(cfg, b.v));
        let trace = r.finish(cfg, rel);
        Ok(Equality { line: lp, refs: (pr[0], pr[2]), v: pr[1], center: x, second_center: xp, trace })
    })
}

/// Port points to another horizontal line through the center fixed by two
/// matched pairs (source, image). No free choices; degenerate outcomes are
/// left to the caller's transaction.
pub fn transfer(cfg: &mut Configuration, pairs: [(PointId, PointId); 2], carry: &[(PointId, &str)], target: LineId) -> Result<Vec<PointId>, GadgetError> {
    let mut r = Rec::new(cfg, TraceKind::Transfer);
    r.input_points(&[pairs[0].0, pairs[0].1, pairs[1].0, pairs[1].1]);
    r.input_points(&carry.iter().map(|c| c.0).collect::<Vec<_>>());
    r.input_lines(&[target]);
    let m1 = r.join(cfg, "R1P1'", pairs[0].0, pairs[0].1, &[])?;
    let m2 = r.join(cfg, "R2P2'", pairs[1].0, pairs[1].1, &[])?;
    let center = r.meet(cfg, "X", PointRole::Auxiliary, m1, m2, &[])?;
    let mut out = Vec::new();
    for (i, &(p, name)) in carry.iter().enumerate() {
        let ray = r.join(cfg, &format!("r{i}"), center, p, &[])?;
        out.push(r.meet(cfg, name, PointRole::Framing, ray, target, &[])?);
    }
    let rel = format!("ported {} points", out.len());
    r.finish(cfg, rel);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::init_anchors;
    use crate::field::make_field;

    // A line y = c with reference points at x = 0, 1 and the variable at x = v.
    fn triple(cfg: &mut Configuration, name: &str, c: i64, xs: [i64; 3]) -> FramedTriple {
        let f = cfg.field().clone();
        let l = cfg.add_horizontal(name, LineRole::VariableBearing, &f.from_i64(c), &[]).unwrap();
        let mut ids = Vec::new();
        for (i, x) in xs.iter().enumerate() {
            let p = PPoint::affine(f.from_i64(*x), f.from_i64(c));
            ids.push(cfg.add_point(&format!("{name}{i}"), PointRole::Framing, p, Provenance::INITIAL, &[l]).unwrap());
        }
        let t = FramedTriple { line: l, s1: f.zero(), p1: ids[0], s2: f.one(), p2: ids[1], v: ids[2], value: f.zero() };
        let value = t.measure(cfg).unwrap().finite().unwrap().clone();
        FramedTriple { value, ..t }
    }

    #[test]
    fn worked_parallel_shift() {
        let f = FieldSpec::rationals();
        let mut cfg = Configuration::bare(&f);
        let src = triple(&mut cfg, "l", 1, [0, 1, 2]);
        assert_eq!(src.value, f.from_i64(2));
        let mut rng = Sampler::scripted([f.from_i64(3), f.from_i64(0), f.from_i64(5)]);
        let s = parallel_shift(&mut cfg, &src, &mut rng).unwrap();
        let pos = |p: PointId| cfg.point(p).coords.to_affine().unwrap();
        assert_eq!(pos(s.triple.p1), (f.from_i64(0), f.from_i64(3)));
        assert_eq!(pos(s.triple.v), (f.from_i64(1), f.from_i64(3)));
        assert_eq!(pos(s.triple.p2), (f.parse_scalar("1/2").unwrap(), f.from_i64(3)));
        assert_eq!(s.triple.measure(&cfg).unwrap(), Ext::Finite(f.from_i64(2)));
        assert_eq!(cfg.traces[0].free_variables, 3);
    }

    #[test]
    fn shift_preserves_value_over_f109() {
        let f = make_field(109, 1).unwrap();
        let mut rng = Sampler::new(7);
        for _ in 0..1000 {
            let mut cfg = Configuration::bare(&f);
            let v = rng.below(80) as i64;
            let src = triple(&mut cfg, "l", 5, [3, 8, v + 17]);
            let s = parallel_shift(&mut cfg, &src, &mut rng).unwrap();
            assert_eq!(s.triple.measure(&cfg).unwrap(), Ext::Finite(src.value.clone()));
        }
    }

    // Random draws in a prime field this small hit existing points too often;
    // the prime-field values are exercised inside F_{p^4}.
    #[test]
    fn midpoint_and_reflect() {
        let f = make_field(5, 4).unwrap();
        let mut cfg = Configuration::bare(&f);
        // reference points labeled by their own x-positions 1 and 4
        let t = triple(&mut cfg, "l", 2, [1, 4, 2]).relabel(f.one(), f.from_i64(4));
        let b = cfg.add_point("B", PointRole::Framing, PPoint::affine(f.from_i64(3), f.from_i64(2)), Provenance::INITIAL, &[t.line]).unwrap();
        let mut rng = Sampler::new(3);
        let m = midpoint(&mut cfg, t.line, t.v, b, &mut rng).unwrap();
        let fr = t.framing(&cfg).unwrap();
        // (2 + 3)/2 = 0 in F_5
        assert_eq!(framed_coordinate(&fr, &cfg.point(m.m).coords).unwrap(), Ext::Finite(f.zero()));
        assert_eq!(midpoint(&mut cfg, t.line, t.p1, t.p1, &mut rng).unwrap_err(), GadgetError::CoincidentInputs);

        let f7 = make_field(7, 4).unwrap();
        let mut cfg = init_anchors(&f7);
        let a = reflect(&mut cfg, 1, 0, 4, "m1", PointRole::Framing, &mut rng).unwrap();
        assert_eq!(cfg.point(a.m).coords.to_affine().unwrap().0, f7.from_i64(6));
        assert_eq!(reflect(&mut cfg, 1, 0, 0, "z", PointRole::Framing, &mut rng).unwrap_err(), GadgetError::CoincidentInputs);
        // M at 3 and B at 5 on a fresh line give A at 1
        let mut cfg = Configuration::bare(&f7);
        let t = triple(&mut cfg, "l", 2, [2, 4, 3]).relabel(f7.from_i64(2), f7.from_i64(4));
        let b = cfg.add_point("B", PointRole::Framing, PPoint::affine(f7.from_i64(5), f7.from_i64(2)), Provenance::INITIAL, &[t.line]).unwrap();
        let a = reflect(&mut cfg, t.line, t.v, b, "A", PointRole::Framing, &mut rng).unwrap();
        assert_eq!(framed_coordinate(&t.framing(&cfg).unwrap(), &cfg.point(a.m).coords).unwrap(), Ext::Finite(f7.one()));

        let f2 = make_field(2, 2).unwrap();
        let mut cfg = init_anchors(&f2);
        assert_eq!(midpoint(&mut cfg, 1, 0, 4, &mut rng).unwrap_err(), GadgetError::CharTwo);
    }

    #[test]
    fn arithmetic_gadgets() {
        let f = make_field(7, 4).unwrap();
        let mut rng = Sampler::new(11);
        for (xa, xb, sum, prod) in [(2, 3, 5, 6), (4, 5, 2, 6)] {
            let mut cfg = Configuration::bare(&f);
            let a = triple(&mut cfg, "a", 2, [0, 1, xa]);
            let b = triple(&mut cfg, "b", 3, [1, 2, 1 + xb]);
            let s = generic_addition(&mut cfg, &a, &b, &mut rng).unwrap();
            assert_eq!(s.triple.measure(&cfg).unwrap(), Ext::Finite(f.from_i64(sum)));
            let m = generic_multiplication(&mut cfg, &a, &b, &mut rng).unwrap();
            assert_eq!(m.triple.measure(&cfg).unwrap(), Ext::Finite(f.from_i64(prod)));
        }
        let mut cfg = Configuration::bare(&f);
        let a = triple(&mut cfg, "a", 2, [0, 1, 3]);
        let b = triple(&mut cfg, "b", 3, [0, 1, 5]);
        // 3 + 5 = 1 and 3 * 5 = 1 mod 7
        assert!(matches!(generic_addition(&mut cfg, &a, &b, &mut rng), Err(GadgetError::CaseViolation(_))));
        assert!(matches!(generic_multiplication(&mut cfg, &a, &b, &mut rng), Err(GadgetError::CaseViolation(_))));
    }

    #[test]
    fn equality_gadget() {
        let f = make_field(7, 4).unwrap();
        let mut rng = Sampler::new(5);
        let mut cfg = Configuration::bare(&f);
        let a = triple(&mut cfg, "a", 2, [0, 1, 4]);
        let b = triple(&mut cfg, "b", 3, [2, 3, 6]);
        let e = equality(&mut cfg, &a, &b, &mut rng).unwrap();
        let on_lp = FramedTriple { line: e.line, p1: e.refs.0, p2: e.refs.1, v: e.v, ..a.clone() };
        assert_eq!(on_lp.measure(&cfg).unwrap(), Ext::Finite(f.from_i64(4)));
        assert_eq!(cfg.traces[e.trace].free_variables, 3);

        let mut cfg = Configuration::bare(&f);
        let a = triple(&mut cfg, "a", 2, [0, 1, 2]);
        let b = triple(&mut cfg, "b", 3, [0, 1, 3]);
        let n = cfg.element_count();
        let err = equality(&mut cfg, &a, &b, &mut rng).unwrap_err();
        assert!(err.is_contradiction(), "{err}");
        assert_eq!(cfg.element_count(), n);

        let c = a.relabel(f.from_i64(-1), f.one());
        assert!(matches!(equality(&mut cfg, &a, &c, &mut rng), Err(GadgetError::CaseViolation(_))));
    }

    #[test]
    fn relabel_examples() {
        let f = FieldSpec::rationals();
        let q = f.from_i64(5);
        let (z, o, m) = (f.zero(), f.one(), f.from_i64(-1));
        assert_eq!(relabel_value(&q, (&z, &o), (&z, &m)), f.from_i64(-5));
        assert_eq!(relabel_value(&q, (&m, &o), (&z, &o)), f.from_i64(3));
        let f4 = make_field(2, 2).unwrap();
        let j = f4.generator();
        let x = f4.element(3);
        let j2 = j.square();
        let want = &(&x - &f4.one()) / &j2;
        // relabel {1, j} to {0, 1}
        assert_eq!(relabel_value(&x, (&f4.one(), &j), (&f4.zero(), &f4.one())), want);
    }
}
