//! Compile a polynomial system and a witness into a configuration: initial
//! framing, one variable-bearing line per program variable, and one
//! connecting construction per atomic equation.

use std::collections::BTreeMap;
use std::fmt;
use std::time::Instant;

use serde::Serialize;

use crate::config::{init_anchors, ConfigError, ProgramRecord, Configuration, LineFraming, LineId, LineRole, PointId, PointRole, Provenance, P1, UNIT, X_AXIS};
use crate::field::{find_quadratic_root, make_field, Embedding, FieldError, FieldSpec, Sampler, Scalar, MAX_ORDER_BITS};
use crate::gadgets::{
    equality, generic_addition, generic_multiplication, midpoint, parallel_shift, reflect, transaction, transfer, FramedTriple, GadgetError, Rec,
    TraceKind,
};
use crate::proj::{framed_coordinate, Ext, Framing, PPoint};
use crate::slp::{decompose, eval_program, AtomicEq, Poly, SLProgram, SlpError};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CompileError {
    #[error("the witness does not solve the system")]
    WitnessDoesNotSolve,
    #[error("witness has {got} values, the system has {want} variables")]
    WitnessLength { got: usize, want: usize },
    #[error("relation fails at the witness: {0}")]
    Contradiction(String),
    #[error("{eq}: {source}")]
    AtEquation { eq: String, source: Box<CompileError> },
    #[error("no valid translation parameters after {0} draws")]
    TranslationExhausted(usize),
    #[error("gave up after {attempts} compilation attempts: {last}")]
    AttemptsExhausted { attempts: usize, last: String },
    #[error(transparent)]
    Gadget(GadgetError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Slp(#[from] SlpError),
}

impl From<GadgetError> for CompileError {
    fn from(e: GadgetError) -> Self {
        if e.is_contradiction() {
            CompileError::Contradiction(e.to_string())
        } else {
            CompileError::Gadget(e)
        }
    }
}

impl CompileError {
    /// True when the witness itself is at fault rather than an unlucky draw.
    pub fn is_contradiction(&self) -> bool {
        match self {
            CompileError::Contradiction(_) => true,
            CompileError::AtEquation { source, .. } => source.is_contradiction(),
            _ => false,
        }
    }

    // worth a fresh seed
    fn is_unlucky(&self) -> bool {
        match self {
            CompileError::AtEquation { source, .. } => source.is_unlucky(),
            CompileError::Config(ConfigError::ConcurrencyViolation(_)) => true,
            CompileError::Gadget(GadgetError::CoincidenceRetryExhausted { .. }) => true,
            CompileError::TranslationExhausted(_) => true,
            _ => false,
        }
    }
}

type Result<T> = std::result::Result<T, CompileError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Op {
    Add,
    Mul,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Case {
    Generic,
    OnePlus,
    ZeroPlus,
    Translate,
    Char2OnePlus,
    Char2ZeroPlus,
}

impl fmt::Display for Case {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).unwrap();
        f.write_str(s.as_str().unwrap())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CaseTag {
    pub op: Op,
    pub case: Case,
    /// The roles of the first two operands were exchanged before dispatch.
    pub swapped: bool,
    pub predicate: String,
}

/// Labels available for framing: [−1, 0, 1], or [0, 1, j] in characteristic 2.
pub fn base_labels(field: &FieldSpec, j: Option<&Scalar>) -> Vec<Scalar> {
    if field.characteristic() == 2 {
        vec![field.zero(), field.one(), j.expect("characteristic 2 needs j").clone()]
    } else {
        vec![field.from_i64(-1), field.zero(), field.one()]
    }
}

/// First 2-subset of `labels` (in their listed order) avoiding q.
pub fn choose_framing_type(q: &Scalar, labels: &[Scalar]) -> (Scalar, Scalar) {
    for i in 0..labels.len() {
        for k in (i + 1)..labels.len() {
            if labels[i] != *q && labels[k] != *q {
                return (labels[i].clone(), labels[k].clone());
            }
        }
    }
    unreachable!("three labels always leave a pair")
}

/// {0, 1} whenever q allows it, so generic gadgets need no reframing.
pub fn preferred_framing(q: &Scalar, labels: &[Scalar]) -> (Scalar, Scalar) {
    let f = q.spec();
    if !q.is_zero() && !q.is_one() {
        (f.zero(), f.one())
    } else {
        choose_framing_type(q, labels)
    }
}

fn not_in(q: &Scalar, set: &[Scalar]) -> bool {
    !set.contains(q)
}

fn fmt_set(set: &[Scalar]) -> String {
    let items: Vec<String> = set.iter().map(|s| s.to_string()).collect();
    format!("{{{}}}", items.join(", "))
}

/// Addition case for x_c = x_a + x_b at the witness values.
pub fn classify_addition(qa: &Scalar, qb: &Scalar, qc: &Scalar, j: Option<&Scalar>) -> CaseTag {
    let f = qa.spec();
    let (zero, one) = (f.zero(), f.one());
    let zo = [zero.clone(), one.clone()];
    let tag = |case, swapped, predicate: String| CaseTag { op: Op::Add, case, swapped, predicate };
    if not_in(qa, &zo) && not_in(qb, &zo) && not_in(qc, &zo) {
        return tag(Case::Generic, false, format!("q_a, q_b, q_c not in {}", fmt_set(&zo)));
    }
    let pairs = [(qa, qb, false), (qb, qa, true)];
    if f.characteristic() != 2 {
        let m1 = f.from_i64(-1);
        for &(x, y, swapped) in &pairs {
            if x.is_one() && not_in(y, &zo) && not_in(qc, &zo) && *qc != m1 {
                return tag(Case::OnePlus, swapped, format!("q_a = 1, q_b and q_c not in {}, q_c != -1", fmt_set(&zo)));
            }
        }
        let four = [m1, zero.clone(), one.clone(), f.from_i64(2)];
        for &(x, y, swapped) in &pairs {
            if x.is_zero() && not_in(y, &four) && not_in(qc, &four) {
                return tag(Case::ZeroPlus, swapped, format!("q_a = 0, q_b and q_c not in {}", fmt_set(&four)));
            }
        }
    } else {
        let j = j.expect("characteristic 2 needs j").clone();
        let j2 = j.square();
        let zoj = [zero.clone(), one.clone(), j.clone()];
        for &(x, y, swapped) in &pairs {
            if x.is_one() && not_in(y, &zoj) && not_in(qc, &zoj) {
                return tag(Case::Char2OnePlus, swapped, format!("q_a = 1, q_b and q_c not in {}", fmt_set(&zoj)));
            }
        }
        let four = [zero, one.clone(), j.clone(), j2];
        for &(x, y, swapped) in &pairs {
            if x.is_zero() && not_in(y, &four) && not_in(qc, &[one.clone(), j.clone()]) {
                return tag(Case::Char2ZeroPlus, swapped, format!("q_a = 0, q_b not in {}, q_c not in {{1, j}}", fmt_set(&four)));
            }
        }
    }
    tag(Case::Translate, false, "no direct case applies".into())
}

/// Multiplication case for x_c = x_a · x_b.
pub fn classify_multiplication(qa: &Scalar, qb: &Scalar, qc: &Scalar) -> CaseTag {
    let f = qa.spec();
    let zo = [f.zero(), f.one()];
    if not_in(qa, &zo) && not_in(qb, &zo) && not_in(qc, &zo) {
        CaseTag { op: Op::Mul, case: Case::Generic, swapped: false, predicate: "q_a, q_b, q_c not in {0, 1}".into() }
    } else {
        CaseTag { op: Op::Mul, case: Case::Translate, swapped: false, predicate: "some value in {0, 1}".into() }
    }
}

fn add_constructible(q1: &Scalar, q2: &Scalar, j: Option<&Scalar>) -> bool {
    classify_addition(q1, q2, &(q1 + q2), j).case != Case::Translate
}

fn mul_generic(q1: &Scalar, q2: &Scalar) -> bool {
    classify_multiplication(q1, q2, &(q1 * q2)).case == Case::Generic
}

/// Translation parameters (s, t) usable for x_a + x_b = x_c.
pub fn translation_ok(qa: &Scalar, qb: &Scalar, qc: &Scalar, s: &Scalar, t: &Scalar, j: Option<&Scalar>) -> bool {
    let a = qa + s;
    let b = qb + t;
    let d = s + t;
    add_constructible(qa, s, j)
        && add_constructible(qb, t, j)
        && add_constructible(&a, &b, j)
        && add_constructible(s, t, j)
        && add_constructible(qc, &d, j)
}

/// Parameters (u, v) usable for x_a · x_b = x_c through
/// (a+u)(b+v) + uv = c + (a+u)v + (b+v)u.
pub fn mul_translation_ok(qa: &Scalar, qb: &Scalar, qc: &Scalar, u: &Scalar, v: &Scalar, j: Option<&Scalar>) -> bool {
    let a = qa + u;
    let b = qb + v;
    let c = &a * &b;
    let d = u * v;
    let e = &a * v;
    let f = &b * u;
    let h = &e + &f;
    add_constructible(qa, u, j)
        && add_constructible(qb, v, j)
        && mul_generic(&a, &b)
        && mul_generic(u, v)
        && mul_generic(&a, v)
        && mul_generic(&b, u)
        && add_constructible(&c, &d, j)
        && add_constructible(&e, &f, j)
        && add_constructible(qc, &h, j)
}

/// A variable-bearing line: labeled reference points, a variable point and its value.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FramedVariable {
    pub line: LineId,
    pub refs: BTreeMap<Scalar, PointId>,
    pub v: PointId,
    pub value: Scalar,
}

impl FramedVariable {
    /// Framed coordinate of the variable point, measured from the first two references.
    pub fn measure(&self, cfg: &Configuration) -> Option<Ext> {
        let mut it = self.refs.iter();
        let (s1, p1) = it.next()?;
        let (s2, p2) = it.next()?;
        let fr = Framing::new(
            cfg.line(self.line).coeffs.clone(),
            s1.clone(),
            cfg.point(*p1).coords.clone(),
            s2.clone(),
            cfg.point(*p2).coords.clone(),
        )
        .ok()?;
        framed_coordinate(&fr, &cfg.point(self.v).coords).ok()
    }
}

/// New value after reading the same points with labels `to` instead of `from`.
pub fn relabel(q: &Scalar, from: (&Scalar, &Scalar), to: (&Scalar, &Scalar)) -> Scalar {
    crate::gadgets::relabel_value(q, from, to)
}

#[derive(Clone, Debug)]
enum Quantity {
    /// A labeled point of the x-axis.
    Axis(Scalar),
    Line(FramedVariable),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Handle(usize);

/// Draws allowed when searching for translation parameters.
pub const TRANSLATION_DRAWS: usize = 64;

pub struct Compiler {
    cfg: Configuration,
    rng: Sampler,
    field: FieldSpec,
    j: Option<Scalar>,
    labels: Vec<Scalar>,
    axis: BTreeMap<Scalar, PointId>,
    quantities: Vec<Quantity>,
    pub cases: Vec<CaseTag>,
}

impl Compiler {
    /// Anchors plus the initial framing of the x-axis.
    pub fn new(field: &FieldSpec, rng: Sampler) -> Result<Self> {
        let mut c = Compiler {
            cfg: init_anchors(field),
            rng,
            field: field.clone(),
            j: None,
            labels: Vec::new(),
            axis: BTreeMap::new(),
            quantities: Vec::new(),
            cases: Vec::new(),
        };
        c.axis.insert(field.zero(), P1);
        c.axis.insert(field.one(), UNIT);
        c.initial_framing()?;
        Ok(c)
    }

    pub fn config(&self) -> &Configuration {
        &self.cfg
    }

    pub fn into_config(self) -> Configuration {
        self.cfg
    }

    pub fn j(&self) -> Option<&Scalar> {
        self.j.as_ref()
    }

    /// Labeled points of the x-axis.
    pub fn axis(&self) -> &BTreeMap<Scalar, PointId> {
        &self.axis
    }

    fn axis_triple(&self, s1: &Scalar, s2: &Scalar, value: &Scalar) -> FramedTriple {
        FramedTriple {
            line: X_AXIS,
            s1: s1.clone(),
            p1: self.axis[s1],
            s2: s2.clone(),
            p2: self.axis[s2],
            v: self.axis[value],
            value: value.clone(),
        }
    }

    fn initial_framing(&mut self) -> Result<()> {
        let f = self.field.clone();
        if f.characteristic() != 2 {
            let a = reflect(&mut self.cfg, X_AXIS, P1, UNIT, "-1", PointRole::Framing, &mut self.rng)?;
            self.axis.insert(f.from_i64(-1), a.m);
            self.labels = base_labels(&f, None);
            return Ok(());
        }
        let j = find_quadratic_root(&f.one(), &f.one(), &f).ok_or(FieldError::NoEmbedding { from: 2, to: f.degree() })?;
        let jp = self.cfg.add_point("j", PointRole::Framing, PPoint::affine(j.clone(), f.zero()), Provenance::INITIAL, &[X_AXIS])?;
        self.axis.insert(j.clone(), jp);
        self.j = Some(j.clone());
        self.labels = base_labels(&f, Some(&j));
        let (zero, one) = (f.zero(), f.one());

        // j·j on a fresh line
        let tj = self.axis_triple(&zero, &one, &j);
        let copy = parallel_shift(&mut self.cfg, &tj, &mut self.rng)?;
        let prod = generic_multiplication(&mut self.cfg, &tj, &copy.triple, &mut self.rng)?;

        // 1 − j: read a shifted copy with 0 and 1 exchanged and send it back to the axis
        let k = transaction(&mut self.cfg, &mut self.rng, TraceKind::ParallelShift, |cfg, rng| {
            let s = parallel_shift(cfg, &tj, rng)?;
            let t = s.triple;
            let out = transfer(cfg, [(t.p2, P1), (t.p1, UNIT)], &[(t.v, "1-j")], X_AXIS)?;
            Ok(out[0])
        })?;
        let j2 = j.square();
        debug_assert_eq!(j2, &one - &j);
        self.axis.insert(j2.clone(), k);
        let tk = self.axis_triple(&zero, &one, &j2);
        equality(&mut self.cfg, &tk, &prod.triple, &mut self.rng)?;
        Ok(())
    }

    fn push(&mut self, q: Quantity) -> Handle {
        self.quantities.push(q);
        Handle(self.quantities.len() - 1)
    }

    /// A labeled point of the x-axis as a constant operand.
    pub fn constant(&mut self, value: &Scalar) -> Handle {
        assert!(self.axis.contains_key(value), "{value} is not marked on the x-axis");
        self.push(Quantity::Axis(value.clone()))
    }

    pub fn value(&self, h: Handle) -> &Scalar {
        match &self.quantities[h.0] {
            Quantity::Axis(v) => v,
            Quantity::Line(fv) => &fv.value,
        }
    }

    /// The current carrier of a quantity (None for x-axis constants).
    pub fn framed_variable(&self, h: Handle) -> Option<&FramedVariable> {
        match &self.quantities[h.0] {
            Quantity::Axis(_) => None,
            Quantity::Line(fv) => Some(fv),
        }
    }

    fn adopt(&mut self, t: &FramedTriple, labels: (Scalar, Scalar), value: Scalar) -> Handle {
        let mut refs = BTreeMap::new();
        refs.insert(labels.0, t.p1);
        refs.insert(labels.1, t.p2);
        let fv = FramedVariable { line: t.line, refs, v: t.v, value };
        self.cfg.set_framing(fv.line, line_framing(&fv));
        self.push(Quantity::Line(fv))
    }

    /// A general horizontal line carrying q with the preferred framing.
    pub fn place_variable_line(&mut self, q: &Scalar) -> Result<Handle> {
        self.place_line(q, None)
    }

    fn place_line(&mut self, q: &Scalar, drawn: Option<&str>) -> Result<Handle> {
        let (s1, s2) = preferred_framing(q, &self.labels);
        let kind = if drawn.is_some() { TraceKind::FreeParameter } else { TraceKind::VariableLine };
        let f = self.field.clone();
        let fv = transaction(&mut self.cfg, &mut self.rng, kind, |cfg, rng| {
            let mut r = Rec::new(cfg, kind);
            if let Some(name) = drawn {
                r.record(name, q.clone(), 0);
            }
            let c = r.draw_intercept(cfg, rng, "y")?;
            let u1 = r.draw(cfg, rng, "u1", &[f.zero(), f.one(), c.clone()])?;
            let u2 = r.draw(cfg, rng, "u2", &[f.zero(), f.one(), c.clone(), u1.clone()])?;
            let t = &(q - &s1) / &(&s2 - &s1);
            let uv = &u1 + &(&(&u2 - &u1) * &t);
            let l = r.horizontal(cfg, "l", LineRole::VariableBearing, &c)?;
            let p1 = r.point(cfg, "P1", PointRole::Framing, PPoint::affine(u1, c.clone()), &[l])?;
            let p2 = r.point(cfg, "P2", PointRole::Framing, PPoint::affine(u2, c.clone()), &[l])?;
            let v = r.point(cfg, "V", PointRole::Variable, PPoint::affine(uv, c), &[l])?;
            let mut refs = BTreeMap::new();
            refs.insert(s1.clone(), p1);
            refs.insert(s2.clone(), p2);
            let fv = FramedVariable { line: l, refs, v, value: q.clone() };
            cfg.set_framing(l, line_framing(&fv));
            r.finish(cfg, format!("{} = {q}", cfg.point(v).label));
            Ok(fv)
        })?;
        Ok(self.push(Quantity::Line(fv)))
    }

    fn has_labels(&self, h: Handle, want: &[&Scalar]) -> bool {
        match &self.quantities[h.0] {
            Quantity::Axis(_) => want.iter().all(|s| self.axis.contains_key(*s)),
            Quantity::Line(fv) => want.iter().all(|s| fv.refs.contains_key(*s)),
        }
    }

    /// Make the carrier of `h` hold reference points for `want`, porting them
    /// from the x-axis onto a shifted copy when missing.
    fn ensure(&mut self, h: Handle, want: &[&Scalar]) -> Result<()> {
        if self.has_labels(h, want) {
            return Ok(());
        }
        let Quantity::Line(fv) = self.quantities[h.0].clone() else {
            unreachable!("the x-axis carries every label");
        };
        let mut it = fv.refs.iter();
        let (s1, p1) = it.next().map(|(s, p)| (s.clone(), *p)).unwrap();
        let (s2, p2) = it.next().map(|(s, p)| (s.clone(), *p)).unwrap();
        let src = FramedTriple { line: fv.line, s1: s1.clone(), p1, s2: s2.clone(), p2, v: fv.v, value: fv.value.clone() };
        let missing: Vec<Scalar> = want.iter().filter(|s| !fv.refs.contains_key(**s)).map(|s| (*s).clone()).collect();
        if missing.contains(&fv.value) {
            return Err(CompileError::Contradiction(format!("value {} cannot be a framing label", fv.value)));
        }
        let (r1, r2) = (self.axis[&s1], self.axis[&s2]);
        let carry: Vec<(PointId, String)> = missing.iter().map(|s| (self.axis[s], format!("P[{s}]"))).collect();
        let (shifted, ported) = transaction(&mut self.cfg, &mut self.rng, TraceKind::ParallelShift, |cfg, rng| {
            let sh = parallel_shift(cfg, &src, rng)?;
            let t = &sh.triple;
            let carry: Vec<(PointId, &str)> = carry.iter().map(|(p, n)| (*p, n.as_str())).collect();
            let ported = transfer(cfg, [(r1, t.p1), (r2, t.p2)], &carry, t.line)?;
            Ok((sh.triple, ported))
        })?;
        let mut refs = BTreeMap::new();
        refs.insert(s1, shifted.p1);
        refs.insert(s2, shifted.p2);
        for (s, p) in missing.into_iter().zip(ported) {
            refs.insert(s, p);
        }
        let nfv = FramedVariable { line: shifted.line, refs, v: shifted.v, value: fv.value };
        self.cfg.set_framing(nfv.line, line_framing(&nfv));
        self.quantities[h.0] = Quantity::Line(nfv);
        Ok(())
    }

    fn view(&self, h: Handle, s1: &Scalar, s2: &Scalar) -> FramedTriple {
        match &self.quantities[h.0] {
            Quantity::Axis(v) => self.axis_triple(s1, s2, v),
            Quantity::Line(fv) => FramedTriple {
                line: fv.line,
                s1: s1.clone(),
                p1: fv.refs[s1],
                s2: s2.clone(),
                p2: fv.refs[s2],
                v: fv.v,
                value: fv.value.clone(),
            },
        }
    }

    /// Make sure h carries (s1, s2) and return the view.
    fn view_ensured(&mut self, h: Handle, s1: &Scalar, s2: &Scalar) -> Result<FramedTriple> {
        self.ensure(h, &[s1, s2])?;
        Ok(self.view(h, s1, s2))
    }

    fn is_axis(&self, h: Handle) -> bool {
        matches!(self.quantities[h.0], Quantity::Axis(_))
    }

    fn missing_count(&self, h: Handle, s: &[&Scalar]) -> usize {
        usize::from(!self.has_labels(h, s))
    }

    fn label_pairs(&self) -> Vec<(Scalar, Scalar)> {
        let l = &self.labels;
        vec![(l[0].clone(), l[1].clone()), (l[0].clone(), l[2].clone()), (l[1].clone(), l[2].clone())]
    }

    fn equality(&mut self, a: &FramedTriple, b: &FramedTriple) -> Result<()> {
        equality(&mut self.cfg, a, b, &mut self.rng)?;
        Ok(())
    }

    /// Impose x = y.
    pub fn enforce_equality(&mut self, x: Handle, y: Handle) -> Result<()> {
        let (qx, qy) = (self.value(x).clone(), self.value(y).clone());
        let pair = self
            .label_pairs()
            .into_iter()
            .filter(|(s1, s2)| ![s1, s2].contains(&&qx) && ![s1, s2].contains(&&qy))
            .min_by_key(|(s1, s2)| self.missing_count(x, &[s1, s2]) + self.missing_count(y, &[s1, s2]));
        let Some((s1, s2)) = pair else {
            return Err(CompileError::Contradiction(format!("{qx} != {qy}")));
        };
        // the x-axis only ever appears on the projected side
        let (a, b) = if self.is_axis(y) { (y, x) } else { (x, y) };
        let ta = self.view_ensured(a, &s1, &s2)?;
        let tb = self.view_ensured(b, &s1, &s2)?;
        self.equality(&ta, &tb)
    }

    /// Impose x = −y.
    pub fn enforce_negation(&mut self, x: Handle, y: Handle) -> Result<()> {
        if self.field.characteristic() == 2 {
            let zero = self.constant(&self.field.zero());
            return self.addition(x, y, zero);
        }
        let (qx, qy) = (self.value(x).clone(), self.value(y).clone());
        let pair = self
            .label_pairs()
            .into_iter()
            .filter(|(s1, s2)| ![s1, s2].contains(&&qx) && ![&-s1, &-s2].contains(&&qy))
            .min_by_key(|(s1, s2)| self.missing_count(x, &[s1, s2]) + self.missing_count(y, &[&-s1, &-s2]));
        let Some((s1, s2)) = pair else {
            return Err(CompileError::Contradiction(format!("{qx} != -({qy})")));
        };
        let tx = self.view_ensured(x, &s1, &s2)?;
        let ty = self.view_ensured(y, &-&s1, &-&s2)?.relabel(s1, s2);
        if self.is_axis(y) {
            self.equality(&ty, &tx)
        } else {
            self.equality(&tx, &ty)
        }
    }

    /// Impose x = 0 against the x-axis.
    pub fn enforce_zero(&mut self, x: Handle) -> Result<()> {
        let f = self.field.clone();
        let (s1, s2) = match &self.j {
            Some(j) => (f.one(), j.clone()),
            None => (f.from_i64(-1), f.one()),
        };
        let q = self.value(x).clone();
        if q == s1 || q == s2 {
            return Err(CompileError::Contradiction(format!("{q} != 0")));
        }
        let tx = self.view_ensured(x, &s1, &s2)?;
        let tz = self.axis_triple(&s1, &s2, &f.zero());
        self.equality(&tz, &tx)
    }

    /// Impose x_c = x_a + x_b.
    pub fn enforce_addition(&mut self, a: Handle, b: Handle, c: Handle) -> Result<()> {
        let tag = classify_addition(self.value(a), self.value(b), self.value(c), self.j.as_ref());
        self.cases.push(tag.clone());
        let holds = &(self.value(a) + self.value(b)) == self.value(c);
        self.add_case(a, b, c, &tag).map_err(|e| witness_fault(e, holds))
    }

    fn addition(&mut self, a: Handle, b: Handle, c: Handle) -> Result<()> {
        let tag = classify_addition(self.value(a), self.value(b), self.value(c), self.j.as_ref());
        self.add_case(a, b, c, &tag)
    }

    fn add_case(&mut self, a: Handle, b: Handle, c: Handle, tag: &CaseTag) -> Result<()> {
        let (a, b) = if tag.swapped { (b, a) } else { (a, b) };
        let f = self.field.clone();
        let (zero, one) = (f.zero(), f.one());
        match tag.case {
            Case::Generic => {
                let s = self.generic_sum(a, b)?;
                self.enforce_equality(s, c)
            }
            Case::OnePlus => {
                // −x_c + x_b = −x_a
                let m1 = f.from_i64(-1);
                let tc = self.view_ensured(c, &zero, &m1)?.relabel(zero.clone(), one.clone());
                let tb = self.view_ensured(b, &zero, &one)?;
                let s = generic_addition(&mut self.cfg, &tc, &tb, &mut self.rng)?;
                let ta = self.view_ensured(a, &zero, &m1)?.relabel(zero, one);
                self.equality(&ta, &s.triple)
            }
            Case::ZeroPlus => {
                let s = self.zero_plus_sum(a, b)?;
                let m1 = f.from_i64(-1);
                let tc = self.view_ensured(c, &m1, &one)?.relabel(zero, one);
                self.equality(&s, &tc)
            }
            Case::Char2OnePlus => {
                let j = self.j.clone().unwrap();
                let s = self.char2_one_plus_sum(a, b)?;
                let tc = self.view_ensured(c, &zero, &j)?.relabel(zero, one);
                self.equality(&s, &tc)
            }
            Case::Char2ZeroPlus => {
                let j = self.j.clone().unwrap();
                let s = self.char2_zero_plus_sum(a, b)?;
                let tc = self.view_ensured(c, &one, &j)?.relabel(zero, one);
                self.equality(&s, &tc)
            }
            Case::Translate => self.translate_addition(a, b, c),
        }
    }

    fn generic_sum(&mut self, a: Handle, b: Handle) -> Result<Handle> {
        let (zero, one) = (self.field.zero(), self.field.one());
        let ta = self.view_ensured(a, &zero, &one)?;
        let tb = self.view_ensured(b, &zero, &one)?;
        let s = generic_addition(&mut self.cfg, &ta, &tb, &mut self.rng)?;
        let value = s.triple.value.clone();
        Ok(self.adopt(&s.triple, (zero, one), value))
    }

    fn generic_product(&mut self, a: Handle, b: Handle) -> Result<Handle> {
        let (zero, one) = (self.field.zero(), self.field.one());
        let ta = self.view_ensured(a, &zero, &one)?;
        let tb = self.view_ensured(b, &zero, &one)?;
        let s = generic_multiplication(&mut self.cfg, &ta, &tb, &mut self.rng)?;
        let value = s.triple.value.clone();
        Ok(self.adopt(&s.triple, (zero, one), value))
    }

    // x_a = 0: read a by (x+1)/2, halve b with a midpoint, add. The result is
    // framed by (0, 1) in the halved chart, which is (−1, 1) in the true one.
    fn zero_plus_sum(&mut self, a: Handle, b: Handle) -> Result<FramedTriple> {
        let f = self.field.clone();
        let (zero, one, m1) = (f.zero(), f.one(), f.from_i64(-1));
        let ta = self.view_ensured(a, &m1, &one)?.relabel(zero.clone(), one.clone());
        let tb = self.view_ensured(b, &zero, &one)?;
        let sh = parallel_shift(&mut self.cfg, &tb, &mut self.rng)?.triple;
        let m = midpoint(&mut self.cfg, sh.line, sh.v, sh.p1, &mut self.rng)?;
        let half = &sh.value / &f.from_i64(2);
        let tb2 = FramedTriple { v: m.m, value: half, ..sh };
        Ok(generic_addition(&mut self.cfg, &ta, &tb2, &mut self.rng)?.triple)
    }

    // x_a = 1: a read by t/j is j², b times j² is b/j; the sum is x_c/j.
    fn char2_one_plus_sum(&mut self, a: Handle, b: Handle) -> Result<FramedTriple> {
        let f = self.field.clone();
        let (zero, one) = (f.zero(), f.one());
        let j = self.j.clone().unwrap();
        let j2 = j.square();
        let tj2 = self.axis_triple(&zero, &one, &j2);
        let tb = self.view_ensured(b, &zero, &one)?;
        let bj = generic_multiplication(&mut self.cfg, &tj2, &tb, &mut self.rng)?.triple;
        let ta = self.view_ensured(a, &zero, &j)?.relabel(zero, one);
        Ok(generic_addition(&mut self.cfg, &ta, &bj, &mut self.rng)?.triple)
    }

    // x_a = 0: a read by (t−1)/j² is j, b times j is b/j²; the sum is (x_c − 1)/j².
    fn char2_zero_plus_sum(&mut self, a: Handle, b: Handle) -> Result<FramedTriple> {
        let f = self.field.clone();
        let (zero, one) = (f.zero(), f.one());
        let j = self.j.clone().unwrap();
        let tj = self.axis_triple(&zero, &one, &j);
        let tb = self.view_ensured(b, &zero, &one)?;
        let bj = generic_multiplication(&mut self.cfg, &tj, &tb, &mut self.rng)?.triple;
        let ta = self.view_ensured(a, &one, &j)?.relabel(zero, one);
        Ok(generic_addition(&mut self.cfg, &ta, &bj, &mut self.rng)?.triple)
    }

    /// A new quantity carrying x + y, built without the translation case.
    fn construct_sum(&mut self, x: Handle, y: Handle) -> Result<Handle> {
        let (qx, qy) = (self.value(x).clone(), self.value(y).clone());
        let value = &qx + &qy;
        let tag = classify_addition(&qx, &qy, &value, self.j.as_ref());
        let (x, y) = if tag.swapped { (y, x) } else { (x, y) };
        let f = self.field.clone();
        let (zero, one) = (f.zero(), f.one());
        match tag.case {
            Case::Generic => self.generic_sum(x, y),
            Case::ZeroPlus => {
                let s = self.zero_plus_sum(x, y)?;
                Ok(self.adopt(&s, (f.from_i64(-1), one), value))
            }
            Case::Char2ZeroPlus => {
                let s = self.char2_zero_plus_sum(x, y)?;
                let j = self.j.clone().unwrap();
                Ok(self.adopt(&s, (one, j), value))
            }
            Case::Char2OnePlus => {
                let s = self.char2_one_plus_sum(x, y)?;
                let j = self.j.clone().unwrap();
                Ok(self.adopt(&s, (zero, j), value))
            }
            Case::OnePlus => {
                // the rewritten form only imposes, so place the sum and impose it
                let h = self.place_variable_line(&value)?;
                self.add_case(x, y, h, &CaseTag { swapped: false, ..tag })?;
                Ok(h)
            }
            Case::Translate => Err(CompileError::Gadget(GadgetError::CaseViolation(format!("no direct construction of {qx} + {qy}")))),
        }
    }

    fn draw_parameters(&mut self, ok: impl Fn(&Scalar, &Scalar) -> bool) -> Result<(Scalar, Scalar)> {
        for _ in 0..TRANSLATION_DRAWS {
            let s = crate::field::sample_general(&self.field, &[], &mut self.rng)?;
            let t = crate::field::sample_general(&self.field, &[], &mut self.rng)?;
            if ok(&s, &t) {
                return Ok((s, t));
            }
        }
        Err(CompileError::TranslationExhausted(TRANSLATION_DRAWS))
    }

    // (x_a + s) + (x_b + t) = x_c + (s + t)
    fn translate_addition(&mut self, a: Handle, b: Handle, c: Handle) -> Result<()> {
        let (qa, qb, qc) = (self.value(a).clone(), self.value(b).clone(), self.value(c).clone());
        let j = self.j.clone();
        let (s, t) = self.draw_parameters(|s, t| translation_ok(&qa, &qb, &qc, s, t, j.as_ref()))?;
        let hs = self.place_line(&s, Some("s"))?;
        let ht = self.place_line(&t, Some("t"))?;
        let ha = self.construct_sum(a, hs)?;
        let hb = self.construct_sum(b, ht)?;
        let lhs = self.construct_sum(ha, hb)?;
        let st = self.construct_sum(hs, ht)?;
        let rhs = self.construct_sum(c, st)?;
        self.enforce_equality(lhs, rhs)
    }

    /// Impose x_c = x_a · x_b.
    pub fn enforce_multiplication(&mut self, a: Handle, b: Handle, c: Handle) -> Result<()> {
        let tag = classify_multiplication(self.value(a), self.value(b), self.value(c));
        self.cases.push(tag.clone());
        let holds = &(self.value(a) * self.value(b)) == self.value(c);
        let r = match tag.case {
            Case::Generic => {
                let p = self.generic_product(a, b)?;
                self.enforce_equality(p, c)
            }
            _ => self.translate_multiplication(a, b, c),
        };
        r.map_err(|e| witness_fault(e, holds))
    }

    // (a+u)(b+v) + uv = c + ((a+u)v + (b+v)u)
    fn translate_multiplication(&mut self, a: Handle, b: Handle, c: Handle) -> Result<()> {
        let (qa, qb, qc) = (self.value(a).clone(), self.value(b).clone(), self.value(c).clone());
        let j = self.j.clone();
        let (u, v) = self.draw_parameters(|u, v| mul_translation_ok(&qa, &qb, &qc, u, v, j.as_ref()))?;
        let hu = self.place_line(&u, Some("u"))?;
        let hv = self.place_line(&v, Some("v"))?;
        let ha = self.construct_sum(a, hu)?;
        let hb = self.construct_sum(b, hv)?;
        let hab = self.generic_product(ha, hb)?;
        let huv = self.generic_product(hu, hv)?;
        let hav = self.generic_product(ha, hv)?;
        let hbu = self.generic_product(hb, hu)?;
        let lhs = self.construct_sum(hab, huv)?;
        let cross = self.construct_sum(hav, hbu)?;
        let rhs = self.construct_sum(c, cross)?;
        self.enforce_equality(lhs, rhs)
    }

    pub fn enforce(&mut self, eq: &AtomicEq, handles: &[Handle]) -> Result<()> {
        match *eq {
            AtomicEq::Copy { a, b } => self.enforce_equality(handles[a], handles[b]),
            AtomicEq::Neg { a, b } => self.enforce_negation(handles[a], handles[b]),
            AtomicEq::Sum { a, b, c } => self.enforce_addition(handles[a], handles[b], handles[c]),
            AtomicEq::Prod { a, b, c } => self.enforce_multiplication(handles[a], handles[b], handles[c]),
            AtomicEq::Zero { a } => self.enforce_zero(handles[a]),
        }
    }
}

// A case chosen from a false relation can meet a degenerate intermediate value.
fn witness_fault(e: CompileError, holds: bool) -> CompileError {
    match e {
        CompileError::Gadget(GadgetError::CaseViolation(m)) if !holds => CompileError::Contradiction(m),
        e => e,
    }
}

fn line_framing(fv: &FramedVariable) -> LineFraming {
    LineFraming { labels: fv.refs.iter().map(|(s, p)| (s.clone(), *p)).collect(), variable: Some(fv.v) }
}

#[derive(Clone, Debug)]
pub struct CompileOptions {
    pub seed: u64,
    /// Whole-compilation attempts; attempt r uses seed + r.
    pub max_retries: usize,
    /// Refuse witnesses that do not solve the system.
    pub require_solution: bool,
    /// Override the working extension degree.
    pub degree: Option<usize>,
}

impl Default for CompileOptions {
    fn default() -> Self {
        CompileOptions { seed: 1, max_retries: 8, require_solution: true, degree: None }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct EquationCase {
    pub equation: String,
    #[serde(flatten)]
    pub tag: CaseTag,
}

#[derive(Clone, Debug, Serialize)]
pub struct CompileReport {
    pub base_field: String,
    pub working_field: String,
    pub program: Vec<String>,
    pub witness: Vec<String>,
    pub values: Vec<String>,
    pub cases: Vec<EquationCase>,
    pub points: usize,
    pub lines: usize,
    pub bystanders: usize,
    pub free_count: usize,
    pub traces: usize,
    pub seed: u64,
    pub attempts: usize,
    pub violations: usize,
    pub elapsed_ms: u128,
}

#[derive(Debug)]
pub struct Compiled {
    pub config: Configuration,
    pub report: CompileReport,
    pub program: SLProgram,
    /// Carriers of x1..x_m in the final configuration.
    pub variables: Vec<FramedVariable>,
}

/// Rough count of lines a program will need.
pub fn estimate_lines(prog: &SLProgram) -> u128 {
    40 + prog
        .equations
        .iter()
        .map(|eq| match eq {
            AtomicEq::Copy { .. } | AtomicEq::Neg { .. } | AtomicEq::Zero { .. } => 12,
            AtomicEq::Sum { .. } => 100,
            AtomicEq::Prod { .. } => 250,
        })
        .sum::<u128>()
}

/// Target field size: at least 2^16 and 64 E² for an estimate of E lines.
pub fn target_order(lines: u128) -> u128 {
    (64 * lines * lines).max(1 << 16)
}

/// Working field: F_{p^N} with k | N (and 2 | N when p = 2) and p^N ≥ target,
/// or the rationals.
pub fn working_field(base: &FieldSpec, target: u128, degree: Option<usize>) -> Result<FieldSpec> {
    if base.is_rational() {
        return Ok(base.clone());
    }
    let p = base.characteristic();
    let k = base.degree();
    let step = if p == 2 && k % 2 == 1 { 2 * k } else { k };
    if let Some(n) = degree {
        if n % step != 0 {
            return Err(FieldError::NoEmbedding { from: step, to: n }.into());
        }
        return Ok(make_field(p, n)?);
    }
    let mut n = step;
    loop {
        let order = (p as u128).checked_pow((n + step) as u32);
        let fits = order.is_some_and(|o| o < (1u128 << MAX_ORDER_BITS));
        if (p as u128).pow(n as u32) >= target || !fits {
            break;
        }
        n += step;
    }
    Ok(make_field(p, n)?)
}

/// Compile `polys` at `witness` (values in `base`).
pub fn compile_system(polys: &[Poly], base: &FieldSpec, witness: &[Scalar], opts: &CompileOptions) -> Result<Compiled> {
    let start = Instant::now();
    let n = crate::slp::num_vars(polys);
    if witness.len() != n {
        return Err(CompileError::WitnessLength { got: witness.len(), want: n });
    }
    if opts.require_solution && !crate::slp::solves(polys, base, witness) {
        return Err(CompileError::WitnessDoesNotSolve);
    }
    let prog = decompose(polys, n);
    let lines = estimate_lines(&prog);
    let target = target_order(lines);
    let work = working_field(base, target, opts.degree)?;
    let window = target.min(1 << 31) as i64;
    let emb = Embedding::new(base, &work)?;
    let inputs: Vec<Scalar> = witness.iter().map(|x| emb.apply(x)).collect();
    let (vals, _) = eval_program(&prog, &work, &inputs);

    let mut last = String::new();
    for attempt in 0..opts.max_retries.max(1) {
        let seed = opts.seed.wrapping_add(attempt as u64);
        match compile_attempt(&prog, &work, &vals, Sampler::with_window(seed, window), seed) {
            Ok((mut cfg, cases, variables)) => {
                let bystanders = match cfg.complete_bystanders() {
                    Ok(b) => b,
                    Err(e @ ConfigError::ConcurrencyViolation(_)) => {
                        last = e.to_string();
                        continue;
                    }
                    Err(e) => return Err(e.into()),
                };
                cfg.program = Some(ProgramRecord {
                    system: polys.iter().map(|p| p.to_string()).collect(),
                    variables: variables.iter().map(|v: &FramedVariable| v.line).collect(),
                });
                let report = cfg.check_conditions();
                let cases = cases
                    .into_iter()
                    .map(|(eq, tag)| EquationCase { equation: eq, tag })
                    .collect();
                let report = CompileReport {
                    base_field: base.to_string(),
                    working_field: work.to_string(),
                    program: prog.equations.iter().map(|e| e.to_string()).collect(),
                    witness: witness.iter().map(|x| x.to_string()).collect(),
                    values: vals.iter().map(|x| x.to_string()).collect(),
                    cases,
                    points: cfg.points().len(),
                    lines: cfg.lines().len(),
                    bystanders,
                    free_count: cfg.free_count,
                    traces: cfg.traces.len(),
                    seed,
                    attempts: attempt + 1,
                    violations: report.counts.values().sum(),
                    elapsed_ms: start.elapsed().as_millis(),
                };
                return Ok(Compiled { config: cfg, report, program: prog, variables });
            }
            Err(e) if e.is_unlucky() => last = e.to_string(),
            Err(e) => return Err(e),
        }
    }
    Err(CompileError::AttemptsExhausted { attempts: opts.max_retries.max(1), last })
}

type Attempt = (Configuration, Vec<(String, CaseTag)>, Vec<FramedVariable>);

fn compile_attempt(prog: &SLProgram, work: &FieldSpec, vals: &[Scalar], rng: Sampler, seed: u64) -> Result<Attempt> {
    let mut c = Compiler::new(work, rng)?;
    let one = work.one();
    let mut handles = vec![c.constant(&one)];
    for v in &vals[1..] {
        handles.push(c.place_variable_line(v)?);
    }
    let mut cases = Vec::new();
    for eq in &prog.equations {
        let before = c.cases.len();
        c.enforce(eq, &handles).map_err(|e| CompileError::AtEquation { eq: eq.to_string(), source: Box::new(e) })?;
        if c.cases.len() > before {
            cases.push((eq.to_string(), c.cases[before].clone()));
        }
    }
    let variables = handles[1..].iter().map(|&h| c.framed_variable(h).unwrap().clone()).collect();
    let mut cfg = c.into_config();
    cfg.seed = seed;
    Ok((cfg, cases, variables))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::make_field;

    fn big7() -> FieldSpec {
        make_field(7, 6).unwrap()
    }

    fn measured(c: &Compiler, h: Handle) -> Scalar {
        let fv = c.framed_variable(h).unwrap();
        match fv.measure(c.config()).unwrap() {
            Ext::Finite(x) => x,
            Ext::Infinity => panic!("variable at infinity"),
        }
    }

    #[test]
    fn framing_types() {
        let f = make_field(7, 1).unwrap();
        let l = base_labels(&f, None);
        assert_eq!(choose_framing_type(&f.zero(), &l), (f.from_i64(-1), f.one()));
        assert_eq!(choose_framing_type(&f.from_i64(5), &l), (f.from_i64(-1), f.zero()));
        let f4 = make_field(2, 2).unwrap();
        let j = f4.generator();
        let l4 = base_labels(&f4, Some(&j));
        assert_eq!(choose_framing_type(&j, &l4), (f4.zero(), f4.one()));
        assert_eq!(preferred_framing(&f.from_i64(5), &l), (f.zero(), f.one()));
    }

    #[test]
    fn relabel_rules() {
        let f = FieldSpec::rationals();
        let (z, o, m) = (f.zero(), f.one(), f.from_i64(-1));
        let q = f.parse_scalar("7/3").unwrap();
        assert_eq!(relabel(&q, (&z, &o), (&z, &m)), -&q);
        let x = relabel(&q, (&m, &o), (&z, &o));
        assert_eq!(x, &(&q + &o) / &f.from_i64(2));
        assert_eq!(relabel(&x, (&z, &o), (&m, &o)), q);
    }

    #[test]
    fn initial_framing_marks_minus_one() {
        let f = make_field(7, 3).unwrap();
        let c = Compiler::new(&f, Sampler::new(0)).unwrap();
        let m1 = c.axis()[&f.from_i64(-1)];
        assert_eq!(c.config().point(m1).coords, PPoint::affine(f.from_i64(6), f.zero()));
        let q = FieldSpec::rationals();
        let c = Compiler::new(&q, Sampler::new(1)).unwrap();
        let m1 = c.axis()[&q.from_i64(-1)];
        assert_eq!(c.config().point(m1).coords, PPoint::affine(q.from_i64(-1), q.zero()));
    }

    #[test]
    fn initial_framing_char2() {
        let f = make_field(2, 16).unwrap();
        let c = Compiler::new(&f, Sampler::new(3)).unwrap();
        let j = c.j().unwrap().clone();
        assert!((&(&j * &j) + &(&j + &f.one())).is_zero());
        let k = c.axis()[&j.square()];
        assert_eq!(c.config().point(k).coords, PPoint::affine(&f.one() - &j, f.zero()));
        assert!(c.config().check_conditions().count(crate::config::Condition::Incidence) == 0);
    }

    #[test]
    fn variable_line_placement() {
        let f = make_field(7, 2).unwrap();
        let mut c = Compiler::new(&make_field(7, 6).unwrap(), Sampler::new(2)).unwrap();
        let q = c.field.from_i64(5);
        let h = c.place_variable_line(&q).unwrap();
        assert_eq!(measured(&c, h), q);
        let h2 = c.place_variable_line(&q).unwrap();
        let y1 = c.config().line(c.framed_variable(h).unwrap().line).coeffs.y_intercept();
        let y2 = c.config().line(c.framed_variable(h2).unwrap().line).coeffs.y_intercept();
        assert_ne!(y1, y2);
        let _ = f;
    }

    #[test]
    fn equality_and_negation() {
        let f = big7();
        let mut c = Compiler::new(&f, Sampler::new(4)).unwrap();
        let a = c.place_variable_line(&f.from_i64(4)).unwrap();
        let b = c.place_variable_line(&f.from_i64(4)).unwrap();
        c.enforce_equality(a, b).unwrap();
        let x = c.place_variable_line(&f.from_i64(3)).unwrap();
        let y = c.place_variable_line(&f.from_i64(4)).unwrap();
        c.enforce_negation(x, y).unwrap();
        let z = c.place_variable_line(&f.from_i64(3)).unwrap();
        assert!(c.enforce_negation(x, z).unwrap_err().is_contradiction());
        let w = c.place_variable_line(&f.from_i64(2)).unwrap();
        assert!(c.enforce_equality(x, w).unwrap_err().is_contradiction());
    }

    #[test]
    fn equality_across_framings() {
        let f = big7();
        let mut c = Compiler::new(&f, Sampler::new(5)).unwrap();
        let a = c.place_variable_line(&f.from_i64(5)).unwrap();
        let b = c.place_variable_line(&f.from_i64(5)).unwrap();
        // force b onto {−1, 0}
        let m1 = f.from_i64(-1);
        c.ensure(b, &[&m1]).unwrap();
        assert_eq!(measured(&c, b), f.from_i64(5));
        c.enforce_equality(a, b).unwrap();
        let one = c.constant(&f.one());
        let u = c.place_variable_line(&f.one()).unwrap();
        c.enforce_equality(u, one).unwrap();
    }

    #[test]
    fn zero_enforcement() {
        let f = big7();
        let mut c = Compiler::new(&f, Sampler::new(6)).unwrap();
        let z = c.place_variable_line(&f.zero()).unwrap();
        c.enforce_zero(z).unwrap();
        let o = c.place_variable_line(&f.one()).unwrap();
        assert!(c.enforce_zero(o).unwrap_err().is_contradiction());
        let t = c.place_variable_line(&f.from_i64(3)).unwrap();
        assert!(c.enforce_zero(t).unwrap_err().is_contradiction());
    }

    #[test]
    fn addition_cases() {
        let f = big7();
        let cases = [
            ((2, 3, 5), Case::Generic),
            ((1, 4, 5), Case::OnePlus),
            ((4, 1, 5), Case::OnePlus),
            ((0, 3, 3), Case::ZeroPlus),
            ((0, 2, 2), Case::Translate),
            ((1, 1, 2), Case::Translate),
            ((3, 4, 0), Case::Translate),
        ];
        for (seed, ((a, b, s), case)) in cases.into_iter().enumerate() {
            let mut c = Compiler::new(&f, Sampler::new(seed as u64)).unwrap();
            let ha = c.place_variable_line(&f.from_i64(a)).unwrap();
            let hb = c.place_variable_line(&f.from_i64(b)).unwrap();
            let hc = c.place_variable_line(&f.from_i64(s)).unwrap();
            c.enforce_addition(ha, hb, hc).unwrap();
            assert_eq!(c.cases[0].case, case, "{a} + {b}");
            let bad = c.place_variable_line(&f.from_i64(s + 1)).unwrap();
            assert!(c.enforce_addition(ha, hb, bad).unwrap_err().is_contradiction(), "{a} + {b} != {}", s + 1);
        }
    }

    #[test]
    fn multiplication_cases() {
        let f = big7();
        for (seed, (a, b, p, case)) in [(2, 3, 6, Case::Generic), (0, 4, 0, Case::Translate), (1, 5, 5, Case::Translate)].into_iter().enumerate() {
            let mut c = Compiler::new(&f, Sampler::new(seed as u64)).unwrap();
            let ha = c.place_variable_line(&f.from_i64(a)).unwrap();
            let hb = c.place_variable_line(&f.from_i64(b)).unwrap();
            let hc = c.place_variable_line(&f.from_i64(p)).unwrap();
            c.enforce_multiplication(ha, hb, hc).unwrap();
            assert_eq!(c.cases[0].case, case);
            let bad = c.place_variable_line(&f.from_i64(p + 2)).unwrap();
            assert!(c.enforce_multiplication(ha, hb, bad).unwrap_err().is_contradiction());
        }
    }

    #[test]
    fn char2_cases() {
        let f = make_field(2, 16).unwrap();
        let c0 = Compiler::new(&f, Sampler::new(1)).unwrap();
        let j = c0.j().unwrap().clone();
        let g = f.generator();
        // a value outside F_4
        let w = &g * &(&g + &f.one());
        for (seed, (a, b, case)) in
            [(f.one(), w.clone(), Case::Char2OnePlus), (f.zero(), w.clone(), Case::Char2ZeroPlus), (j.clone(), j.square(), Case::Translate)].into_iter().enumerate()
        {
            let mut c = Compiler::new(&f, Sampler::new(seed as u64 + 10)).unwrap();
            let s = &a + &b;
            let ha = c.place_variable_line(&a).unwrap();
            let hb = c.place_variable_line(&b).unwrap();
            let hc = c.place_variable_line(&s).unwrap();
            c.enforce_addition(ha, hb, hc).unwrap();
            assert_eq!(c.cases[0].case, case);
            let bad = c.place_variable_line(&(&s + &g)).unwrap();
            let e = c.enforce_addition(ha, hb, bad).unwrap_err();
            assert!(e.is_contradiction(), "{case:?}: {e}");
        }
        let mut c = Compiler::new(&f, Sampler::new(30)).unwrap();
        let x = c.place_variable_line(&w).unwrap();
        let y = c.place_variable_line(&w).unwrap();
        c.enforce_negation(x, y).unwrap();
    }

    #[test]
    fn compile_x_squared_minus_two() {
        let polys = crate::slp::parse_system("x1^2 - 2").unwrap();
        let f = make_field(7, 1).unwrap();
        let out = compile_system(&polys, &f, &[f.from_i64(3)], &CompileOptions::default()).unwrap();
        let report = out.config.check_conditions();
        assert!(report.is_clean(), "{report}");
        assert_eq!(out.variables[0].measure(&out.config), Some(Ext::Finite(out.variables[0].value.clone())));
        assert!(matches!(
            compile_system(&polys, &f, &[f.from_i64(2)], &CompileOptions::default()),
            Err(CompileError::WitnessDoesNotSolve)
        ));
        let relaxed = CompileOptions { require_solution: false, ..Default::default() };
        assert!(compile_system(&polys, &f, &[f.from_i64(2)], &relaxed).unwrap_err().is_contradiction());
    }
}
