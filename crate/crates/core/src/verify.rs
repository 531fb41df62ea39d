//! Semantic checks: exhaustive gadget oracles over small fields, the
//! soundness/completeness suite, free-variable audits and realization checks.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::Serialize;

use crate::compile::{compile_system, CompileOptions};
use crate::config::{ConditionReport, ConfigError, Configuration, LineId, LineRole, PointId, PointRole, Provenance};
use crate::field::{FieldSpec, Sampler, Scalar};
use crate::gadgets::{equality, generic_addition, generic_multiplication, midpoint, parallel_shift, reflect, FramedTriple, GadgetError, TraceKind};
use crate::proj::{framed_coordinate, incident, Ext, Framing, PPoint, Pencil};
use crate::slp::{assignments, decompose, num_vars, parse_poly, solves, AtomicEq, Poly, SlpError};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum VerifyError {
    #[error("{needed} cases exceed the budget of {budget}")]
    BudgetExceeded { needed: u128, budget: u128 },
    #[error("{0} is not a gadget")]
    NotAGadget(String),
    #[error("gadget {kind} expects {expected} inputs, got {got}")]
    Arity { kind: String, expected: usize, got: usize },
    #[error("inputs rejected: {0}")]
    Rejected(GadgetError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Slp(#[from] SlpError),
}

/// Free-choice tuples allowed in one oracle run.
pub const ORACLE_BUDGET: u128 = 1_000_000;

#[derive(Clone, Debug, Serialize)]
pub struct OracleResult {
    pub kind: String,
    pub field: String,
    pub inputs: Vec<String>,
    /// None when no realization should exist.
    pub expected: Option<String>,
    pub achieved: BTreeSet<String>,
    pub choices: usize,
    pub successes: usize,
    pub degenerate: usize,
    pub contradictions: usize,
    pub pass: bool,
}

fn arity(kind: TraceKind) -> usize {
    match kind {
        TraceKind::ParallelShift => 1,
        _ => 2,
    }
}

fn expected_value(kind: TraceKind, spec: &FieldSpec, x: &[Scalar]) -> Option<Scalar> {
    match kind {
        TraceKind::ParallelShift => Some(x[0].clone()),
        TraceKind::Midpoint => (&x[0] + &x[1]).checked_div(&spec.from_i64(2)),
        TraceKind::Reflect => Some(&(&x[0] + &x[0]) - &x[1]),
        TraceKind::GenericAddition => Some(&x[0] + &x[1]),
        TraceKind::GenericMultiplication => Some(&x[0] * &x[1]),
        TraceKind::Equality => (x[0] == x[1]).then(|| x[0].clone()),
        _ => None,
    }
}

fn ext_string(e: &Ext) -> String {
    match e {
        Ext::Finite(x) => x.to_string(),
        Ext::Infinity => "inf".into(),
    }
}

// Fixture: l_a is y = 0 framed by (0,0) and (1,0); l_b is y = 3 framed by (1,3)
// and (3,3). Midpoint and reflect get their two inputs as bare points on l_a.
fn run_once(kind: TraceKind, spec: &FieldSpec, x: &[Scalar], rng: &mut Sampler) -> Result<Ext, GadgetError> {
    let mut cfg = Configuration::bare(spec);
    cfg.tolerate_accidental_incidences(true);
    let (zero, one) = (spec.zero(), spec.one());
    let three = spec.from_i64(3);
    let la = cfg.add_horizontal("la", LineRole::VariableBearing, &zero, &[])?;
    let pt = |cfg: &mut Configuration, name: &str, role, xx: Scalar, y: &Scalar, l| {
        cfg.add_point(name, role, PPoint::affine(xx, y.clone()), Provenance::INITIAL, &[l])
    };
    match kind {
        TraceKind::Midpoint | TraceKind::Reflect => {
            let a = pt(&mut cfg, "A", PointRole::Framing, x[0].clone(), &zero, la)?;
            let b = pt(&mut cfg, "B", PointRole::Framing, x[1].clone(), &zero, la)?;
            let m = if kind == TraceKind::Midpoint {
                midpoint(&mut cfg, la, a, b, rng)?.m
            } else {
                reflect(&mut cfg, la, a, b, "A'", PointRole::Framing, rng)?.m
            };
            let c = cfg.point(m).coords.to_affine().ok_or(GadgetError::CaseViolation("output at infinity".into()))?;
            return Ok(Ext::Finite(c.0));
        }
        _ => {}
    }
    let triple_a = {
        let p1 = pt(&mut cfg, "Pa0", PointRole::Framing, zero.clone(), &zero, la)?;
        let p2 = pt(&mut cfg, "Pa1", PointRole::Framing, one.clone(), &zero, la)?;
        let v = pt(&mut cfg, "Va", PointRole::Variable, x[0].clone(), &zero, la)?;
        FramedTriple { line: la, s1: zero.clone(), p1, s2: one.clone(), p2, v, value: x[0].clone() }
    };
    if kind == TraceKind::ParallelShift {
        let s = parallel_shift(&mut cfg, &triple_a, rng)?;
        return Ok(s.triple.measure(&cfg)?);
    }
    let lb = cfg.add_horizontal("lb", LineRole::VariableBearing, &three, &[])?;
    let triple_b = {
        let p1 = pt(&mut cfg, "Pb0", PointRole::Framing, one.clone(), &three, lb)?;
        let p2 = pt(&mut cfg, "Pb1", PointRole::Framing, three.clone(), &three, lb)?;
        let xb = &one + &(&spec.from_i64(2) * &x[1]);
        let v = pt(&mut cfg, "Vb", PointRole::Variable, xb, &three, lb)?;
        FramedTriple { line: lb, s1: zero, p1, s2: one, p2, v, value: x[1].clone() }
    };
    let out = match kind {
        TraceKind::GenericAddition => generic_addition(&mut cfg, &triple_a, &triple_b, rng)?.triple,
        TraceKind::GenericMultiplication => generic_multiplication(&mut cfg, &triple_a, &triple_b, rng)?.triple,
        TraceKind::Equality => {
            let e = equality(&mut cfg, &triple_a, &triple_b, rng)?;
            FramedTriple { line: e.line, p1: e.refs.0, p2: e.refs.1, v: e.v, ..triple_a }
        }
        _ => unreachable!(),
    };
    Ok(out.measure(&cfg).unwrap_or(Ext::Infinity))
}

/// Walk every free choice of one gadget application on fixed inputs.
pub fn gadget_oracle(kind: TraceKind, spec: &FieldSpec, inputs: &[Scalar]) -> Result<OracleResult, VerifyError> {
    if !TraceKind::GADGETS.contains(&kind) {
        return Err(VerifyError::NotAGadget(kind.name().into()));
    }
    if inputs.len() != arity(kind) {
        return Err(VerifyError::Arity { kind: kind.name().into(), expected: arity(kind), got: inputs.len() });
    }
    let elems: Vec<Scalar> = spec.elements().collect();
    let n = kind.free_variables() as u32;
    let needed = (elems.len() as u128).pow(n);
    if spec.is_rational() || needed > ORACLE_BUDGET {
        return Err(VerifyError::BudgetExceeded { needed: if spec.is_rational() { u128::MAX } else { needed }, budget: ORACLE_BUDGET });
    }
    let expected = expected_value(kind, spec, inputs);
    let mut res = OracleResult {
        kind: kind.name().into(),
        field: spec.to_string(),
        inputs: inputs.iter().map(|x| x.to_string()).collect(),
        expected: expected.as_ref().map(|x| x.to_string()),
        achieved: BTreeSet::new(),
        choices: 0,
        successes: 0,
        degenerate: 0,
        contradictions: 0,
        pass: false,
    };
    let q = elems.len();
    for idx in 0..needed as usize {
        let mut script = Vec::with_capacity(n as usize);
        let mut r = idx;
        for _ in 0..n {
            script.push(elems[r % q].clone());
            r /= q;
        }
        res.choices += 1;
        match run_once(kind, spec, inputs, &mut Sampler::scripted(script)) {
            Ok(v) => {
                res.successes += 1;
                res.achieved.insert(ext_string(&v));
            }
            Err(e) if e.is_contradiction() => res.contradictions += 1,
            Err(GadgetError::CoincidenceRetryExhausted { .. }) => res.degenerate += 1,
            Err(e) if e.is_degenerate() => res.degenerate += 1,
            Err(e) => return Err(VerifyError::Rejected(e)),
        }
    }
    res.pass = match &res.expected {
        Some(x) => res.successes > 0 && res.contradictions == 0 && res.achieved.len() == 1 && res.achieved.contains(x),
        None => res.successes == 0,
    };
    Ok(res)
}

/// Inputs each gadget accepts over a small field.
pub fn admissible_inputs(kind: TraceKind, spec: &FieldSpec) -> Vec<Vec<Scalar>> {
    let elems: Vec<Scalar> = spec.elements().collect();
    let general: Vec<Scalar> = elems.iter().filter(|x| !x.is_zero() && !x.is_one()).cloned().collect();
    let generic = |x: &Scalar| !x.is_zero() && !x.is_one();
    let mut out = Vec::new();
    match kind {
        TraceKind::ParallelShift => out.extend(general.iter().map(|a| vec![a.clone()])),
        TraceKind::Midpoint | TraceKind::Reflect => {
            for a in &elems {
                for b in &elems {
                    if a != b {
                        out.push(vec![a.clone(), b.clone()]);
                    }
                }
            }
        }
        _ => {
            for a in &general {
                for b in &general {
                    let ok = match kind {
                        TraceKind::GenericAddition => generic(&(a + b)),
                        TraceKind::GenericMultiplication => generic(&(a * b)),
                        _ => true,
                    };
                    if ok {
                        out.push(vec![a.clone(), b.clone()]);
                    }
                }
            }
        }
    }
    out
}

/// Oracle over every admissible input tuple.
pub fn oracle_sweep(kind: TraceKind, spec: &FieldSpec) -> Result<Vec<OracleResult>, VerifyError> {
    admissible_inputs(kind, spec).iter().map(|x| gadget_oracle(kind, spec, x)).collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct SoundnessEntry {
    pub assignment: Vec<String>,
    pub solves: bool,
    pub realized: bool,
    pub error: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SoundnessReport {
    pub field: String,
    pub entries: Vec<SoundnessEntry>,
    pub solutions: usize,
    pub realized: usize,
    /// Indices of entries where realization and solving disagree.
    pub discrepancies: Vec<usize>,
    pub pass: bool,
}

/// Compile at every assignment: success must coincide with being a solution.
pub fn soundness_suite(polys: &[Poly], spec: &FieldSpec, seed: u64, budget: u128) -> Result<SoundnessReport, VerifyError> {
    let n = num_vars(polys);
    let opts = CompileOptions { seed, require_solution: false, ..Default::default() };
    let mut entries = Vec::new();
    for point in assignments(spec, n, budget)? {
        let sol = solves(polys, spec, &point);
        let (realized, error) = match compile_system(polys, spec, &point, &opts) {
            Ok(c) => (c.report.violations == 0, None),
            Err(e) => (false, Some(e.to_string())),
        };
        entries.push(SoundnessEntry { assignment: point.iter().map(|x| x.to_string()).collect(), solves: sol, realized, error });
    }
    let discrepancies: Vec<usize> = entries.iter().enumerate().filter(|(_, e)| e.solves != e.realized).map(|(i, _)| i).collect();
    Ok(SoundnessReport {
        field: spec.to_string(),
        solutions: entries.iter().filter(|e| e.solves).count(),
        realized: entries.iter().filter(|e| e.realized).count(),
        pass: discrepancies.is_empty(),
        discrepancies,
        entries,
    })
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct AuditReport {
    pub traces: usize,
    /// kind name -> (traces, free variables)
    pub by_kind: BTreeMap<String, (usize, usize)>,
    pub recomputed: usize,
    pub ledger: usize,
    pub mismatches: Vec<String>,
    pub pass: bool,
}

/// Recompute s from the traces and compare with the ledger total.
pub fn freedom_audit(cfg: &Configuration) -> AuditReport {
    let mut rep = AuditReport { traces: cfg.traces.len(), ledger: cfg.free_count, ..Default::default() };
    for t in &cfg.traces {
        let want = t.kind.free_variables();
        if t.free_variables != want || t.free.len() != want {
            rep.mismatches.push(format!("trace {} ({}) records {} draws, {} declared, {want} expected", t.id, t.kind, t.free.len(), t.free_variables));
        }
        let e = rep.by_kind.entry(t.kind.name().to_string()).or_default();
        e.0 += 1;
        e.1 += want;
        rep.recomputed += want;
    }
    if rep.recomputed != rep.ledger {
        rep.mismatches.push(format!("ledger total {} but traces give {}", rep.ledger, rep.recomputed));
    }
    rep.pass = rep.mismatches.is_empty();
    rep
}

#[derive(Clone, Debug, Serialize)]
pub struct WitnessCheck {
    pub values: Vec<String>,
    pub failing: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RealizationReport {
    pub points: usize,
    pub lines: usize,
    pub incidence_diffs: Vec<String>,
    pub framing_diffs: Vec<String>,
    pub conditions: ConditionReport,
    pub witness: Option<WitnessCheck>,
    pub pass: bool,
}

const DIFF_CAP: usize = 20;

/// Realized incidences against the ledger, the condition check, framing
/// consistency and the program equations at the extracted coordinates.
pub fn check_realization(cfg: &Configuration) -> RealizationReport {
    let mut diffs = Vec::new();
    let mut ndiff = 0usize;
    let mut note = |d: String| {
        ndiff += 1;
        if diffs.len() < DIFF_CAP {
            diffs.push(d);
        }
    };
    // Every point on two or more lines is one of their pairwise meets, so
    // hashing the meets gives the exact set of lines through each such point.
    let lines = cfg.lines();
    let pencil = Pencil::new(lines.iter().map(|l| &l.coeffs).collect());
    let mut through: HashMap<PPoint, BTreeSet<LineId>> = HashMap::new();
    for i in 0..lines.len() {
        for k in (i + 1)..lines.len() {
            match pencil.meet(i, k) {
                Ok(x) => {
                    let e = through.entry(x).or_default();
                    e.insert(lines[i].id);
                    e.insert(lines[k].id);
                }
                Err(_) => note(format!("{} and {} coincide", lines[i].label, lines[k].label)),
            }
        }
    }
    for p in cfg.points() {
        let real: BTreeSet<LineId> = match through.get(&p.coords) {
            Some(s) => s.clone(),
            None => lines.iter().filter(|l| incident(&p.coords, &l.coeffs)).map(|l| l.id).collect(),
        };
        let ledger: BTreeSet<LineId> = cfg.lines_through(p.id).iter().copied().collect();
        for &l in real.symmetric_difference(&ledger) {
            note(format!("{} on {}: realized {}, ledger {}", p.label, cfg.line(l).label, real.contains(&l), ledger.contains(&l)));
        }
    }
    if ndiff > DIFF_CAP {
        diffs.push(format!("... {} more", ndiff - DIFF_CAP));
    }

    let mut framing_diffs = Vec::new();
    for l in cfg.lines() {
        let Some(fr) = &l.framing else { continue };
        if fr.labels.len() < 2 {
            framing_diffs.push(format!("{} has fewer than two framing points", l.label));
            continue;
        }
        let Some(chart) = chart(cfg, l.id, &fr.labels) else {
            framing_diffs.push(format!("{} has a degenerate framing", l.label));
            continue;
        };
        for (s, p) in &fr.labels[2..] {
            if framed_coordinate(&chart, &cfg.point(*p).coords).ok() != Some(Ext::Finite(s.clone())) {
                framing_diffs.push(format!("{}: point {} does not sit at {s}", l.label, cfg.point(*p).label));
            }
        }
    }

    let witness = cfg.program.as_ref().map(|prog| check_program(cfg, &prog.system, &prog.variables));
    let conditions = cfg.check_conditions();
    let pass = ndiff == 0 && framing_diffs.is_empty() && conditions.is_clean() && witness.as_ref().is_none_or(|w| w.failing.is_empty());
    RealizationReport {
        points: cfg.points().len(),
        lines: cfg.lines().len(),
        incidence_diffs: diffs,
        framing_diffs,
        conditions,
        witness,
        pass,
    }
}

fn chart(cfg: &Configuration, l: usize, labels: &[(Scalar, PointId)]) -> Option<Framing> {
    let (s1, p1) = &labels[0];
    let (s2, p2) = &labels[1];
    Framing::new(cfg.line(l).coeffs.clone(), s1.clone(), cfg.point(*p1).coords.clone(), s2.clone(), cfg.point(*p2).coords.clone()).ok()
}

/// Read each variable off its line and test every program equation.
pub fn extract_values(cfg: &Configuration, lines: &[usize]) -> Vec<Option<Scalar>> {
    lines
        .iter()
        .map(|&l| {
            let fr = cfg.line(l).framing.as_ref()?;
            let v = fr.variable?;
            match framed_coordinate(&chart(cfg, l, &fr.labels)?, &cfg.point(v).coords).ok()? {
                Ext::Finite(x) => Some(x),
                Ext::Infinity => None,
            }
        })
        .collect()
}

fn check_program(cfg: &Configuration, system: &[String], lines: &[usize]) -> WitnessCheck {
    let mut failing = Vec::new();
    let polys: Result<Vec<Poly>, _> = system.iter().map(|s| parse_poly(s)).collect();
    let extracted = extract_values(cfg, lines);
    let values: Vec<String> = extracted.iter().map(|v| v.as_ref().map_or("?".into(), |x| x.to_string())).collect();
    let Ok(polys) = polys else {
        failing.push("stored system does not parse".into());
        return WitnessCheck { values, failing };
    };
    let prog = decompose(&polys, num_vars(&polys));
    if prog.m != lines.len() {
        failing.push(format!("program has {} variables, {} lines recorded", prog.m, lines.len()));
        return WitnessCheck { values, failing };
    }
    let f = cfg.field();
    let mut x = vec![f.one()];
    for v in &extracted {
        match v {
            Some(v) => x.push(v.clone()),
            None => {
                failing.push("a variable could not be read".into());
                return WitnessCheck { values, failing };
            }
        }
    }
    for eq in &prog.equations {
        let ok = match *eq {
            AtomicEq::Copy { a, b } => x[a] == x[b],
            AtomicEq::Neg { a, b } => x[a] == -&x[b],
            AtomicEq::Sum { a, b, c } => x[c] == &x[a] + &x[b],
            AtomicEq::Prod { a, b, c } => x[c] == &x[a] * &x[b],
            AtomicEq::Zero { a } => x[a].is_zero(),
        };
        if !ok {
            failing.push(eq.to_string());
        }
    }
    WitnessCheck { values, failing }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::make_field;

    fn ints(f: &FieldSpec, v: &[i64]) -> Vec<Scalar> {
        v.iter().map(|&x| f.from_i64(x)).collect()
    }

    #[test]
    fn oracle_examples() {
        let f5 = make_field(5, 1).unwrap();
        let f7 = make_field(7, 1).unwrap();
        let r = gadget_oracle(TraceKind::ParallelShift, &f5, &ints(&f5, &[3])).unwrap();
        assert!(r.pass, "{r:?}");
        assert_eq!(r.achieved, BTreeSet::from(["3".to_string()]));
        let r = gadget_oracle(TraceKind::GenericAddition, &f7, &ints(&f7, &[2, 3])).unwrap();
        assert_eq!(r.achieved, BTreeSet::from(["5".to_string()]));
        let r = gadget_oracle(TraceKind::Midpoint, &f5, &ints(&f5, &[2, 3])).unwrap();
        assert_eq!(r.achieved, BTreeSet::from(["0".to_string()]));
        let r = gadget_oracle(TraceKind::Equality, &f7, &ints(&f7, &[2, 3])).unwrap();
        assert!(r.pass && r.successes == 0 && r.contradictions > 0);
    }

    #[test]
    fn oracle_rejects_char_two_midpoint() {
        let f4 = make_field(2, 2).unwrap();
        let x = vec![f4.zero(), f4.one()];
        assert!(matches!(gadget_oracle(TraceKind::Midpoint, &f4, &x), Err(VerifyError::Rejected(GadgetError::CharTwo))));
    }

    #[test]
    fn audit_detects_tampering() {
        let f = make_field(7, 4).unwrap();
        let mut c = crate::compile::Compiler::new(&f, Sampler::new(1)).unwrap();
        c.place_variable_line(&f.from_i64(3)).unwrap();
        let mut cfg = c.into_config();
        let rep = freedom_audit(&cfg);
        assert!(rep.pass, "{rep:?}");
        assert_eq!(rep.by_kind["variable_line"], (1, 3));
        cfg.free_count += 1;
        assert!(!freedom_audit(&cfg).pass);
    }

    #[test]
    fn realization_of_small_compile() {
        let polys = crate::slp::parse_system("x1^2 - 2").unwrap();
        let f = make_field(7, 1).unwrap();
        let out = compile_system(&polys, &f, &[f.from_i64(3)], &CompileOptions::default()).unwrap();
        let rep = check_realization(&out.config);
        assert!(rep.pass, "{:?}", rep.incidence_diffs);
        let w = rep.witness.unwrap();
        assert!(w.failing.is_empty());
        assert_eq!(w.values[0], "3");
        let mut cfg = out.config;
        let v = out.variables[0].v;
        let y = cfg.point(v).coords.to_affine().unwrap().1;
        cfg.perturb_point(v, PPoint::affine(cfg.field().from_i64(5), y));
        let rep = check_realization(&cfg);
        assert!(!rep.pass && !rep.incidence_diffs.is_empty());
    }
}
