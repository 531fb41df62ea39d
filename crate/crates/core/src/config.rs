//! Labeled point-line configurations: realized coordinates, the required
//! incidence ledger, bystander completion, condition checks and JSON I/O.

use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::field::{FieldError, FieldSpec, Scalar};
use crate::gadgets::GadgetTrace;
use crate::proj::{incident, join, meet, PLine, PPoint, Pencil, ProjError};

pub type PointId = usize;
pub type LineId = usize;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ConfigError {
    #[error("duplicate element: {0}")]
    DuplicateElement(String),
    #[error("unintended incidence between point {point} and line {line}")]
    UnintendedIncidence { point: String, line: String },
    #[error("intended incidence fails between point {point} and line {line}")]
    IntendedIncidenceFails { point: String, line: String },
    #[error("three or more lines meet at a would-be bystander: {0}")]
    ConcurrencyViolation(String),
    #[error("schema error: {0}")]
    Schema(String),
    #[error(transparent)]
    Proj(#[from] ProjError),
    #[error(transparent)]
    Field(#[from] FieldError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointRole {
    Anchor,
    Unit,
    Framing,
    Variable,
    Auxiliary,
    Bystander,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LineRole {
    Anchor,
    VariableBearing,
    Auxiliary,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Provenance {
    Trace(usize),
    Initial(InitialTag),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialTag {
    Initial,
    Completion,
}

impl Provenance {
    pub const INITIAL: Provenance = Provenance::Initial(InitialTag::Initial);
    pub const COMPLETION: Provenance = Provenance::Initial(InitialTag::Completion);
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MarkedPoint {
    pub id: PointId,
    pub label: String,
    pub role: PointRole,
    pub coords: PPoint,
    pub provenance: Provenance,
}

/// Framing data attached to a variable-bearing line.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LineFraming {
    pub labels: Vec<(Scalar, PointId)>,
    pub variable: Option<PointId>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MarkedLine {
    pub id: LineId,
    pub label: String,
    pub role: LineRole,
    pub coeffs: PLine,
    pub framing: Option<LineFraming>,
    pub y_intercept: Option<Scalar>,
}

/// Element counts and trace count, used to undo a failed attempt.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Checkpoint {
    points: usize,
    lines: usize,
    traces: usize,
    free_count: usize,
}

#[derive(Clone)]
pub struct Configuration {
    field: FieldSpec,
    points: Vec<MarkedPoint>,
    lines: Vec<MarkedLine>,
    point_lines: Vec<Vec<LineId>>,
    line_points: Vec<Vec<PointId>>,
    point_index: HashMap<PPoint, PointId>,
    line_index: HashMap<PLine, LineId>,
    p3: Option<PointId>,
    pub traces: Vec<GadgetTrace>,
    pub free_count: usize,
    pub seed: u64,
    pub program: Option<ProgramRecord>,
    // oracle fixtures over tiny fields accept accidental incidences
    tolerate_accidental: bool,
}

/// The compiled system and the line carrying each program variable x1..x_m.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProgramRecord {
    pub system: Vec<String>,
    pub variables: Vec<LineId>,
}

impl fmt::Debug for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Configuration({} points, {} lines over {})", self.points.len(), self.lines.len(), self.field)
    }
}

pub const ANCHOR_POINTS: [[i64; 3]; 4] = [[0, 0, 1], [0, 1, 0], [1, 0, 0], [1, 1, 1]];

/// Index pairs (i, j) of the anchor lines p_i p_j, in insertion order.
pub const ANCHOR_LINES: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

/// Fixed ids of the initial elements.
pub const P1: PointId = 0;
pub const P2: PointId = 1;
pub const P3: PointId = 2;
pub const P4: PointId = 3;
pub const UNIT: PointId = 4;
pub const X_AXIS: LineId = 1;

impl Configuration {
    /// A configuration with no elements besides p3 (used by gadget oracles).
    pub fn bare(field: &FieldSpec) -> Self {
        let mut cfg = Configuration::empty(field);
        let p3 = PPoint::from_ints(field, ANCHOR_POINTS[2]).unwrap();
        let id = cfg.push_point("p3", PointRole::Anchor, p3, Provenance::INITIAL, Vec::new());
        cfg.p3 = Some(id);
        cfg
    }

    fn empty(field: &FieldSpec) -> Self {
        Configuration {
            field: field.clone(),
            points: Vec::new(),
            lines: Vec::new(),
            point_lines: Vec::new(),
            line_points: Vec::new(),
            point_index: HashMap::new(),
            line_index: HashMap::new(),
            p3: None,
            traces: Vec::new(),
            free_count: 0,
            seed: 0,
            program: None,
            tolerate_accidental: false,
        }
    }

    /// Accept new elements that accidentally meet unrelated ones. Intended
    /// incidences and duplicates are still checked. Used by exhaustive oracles,
    /// where small fields leave no choice free of accidents.
    pub fn tolerate_accidental_incidences(&mut self, on: bool) {
        self.tolerate_accidental = on;
    }

    pub fn field(&self) -> &FieldSpec {
        &self.field
    }

    pub fn points(&self) -> &[MarkedPoint] {
        &self.points
    }

    pub fn lines(&self) -> &[MarkedLine] {
        &self.lines
    }

    pub fn point(&self, id: PointId) -> &MarkedPoint {
        &self.points[id]
    }

    pub fn line(&self, id: LineId) -> &MarkedLine {
        &self.lines[id]
    }

    pub fn p3(&self) -> Option<PointId> {
        self.p3
    }

    /// Lines required to pass through a point.
    pub fn lines_through(&self, p: PointId) -> &[LineId] {
        &self.point_lines[p]
    }

    /// Points required to lie on a line.
    pub fn points_on(&self, l: LineId) -> &[PointId] {
        &self.line_points[l]
    }

    pub fn required(&self, p: PointId, l: LineId) -> bool {
        self.point_lines[p].binary_search(&l).is_ok()
    }

    pub fn find_point(&self, coords: &PPoint) -> Option<PointId> {
        self.point_index.get(coords).copied()
    }

    pub fn find_line(&self, coeffs: &PLine) -> Option<LineId> {
        self.line_index.get(coeffs).copied()
    }

    pub fn element_count(&self) -> usize {
        self.points.len() + self.lines.len()
    }

    /// y-intercepts of all marked horizontal affine lines.
    pub fn intercepts(&self) -> Vec<Scalar> {
        self.lines.iter().filter_map(|l| l.coeffs.y_intercept()).collect()
    }

    pub fn set_framing(&mut self, l: LineId, framing: LineFraming) {
        self.lines[l].framing = Some(framing);
        self.lines[l].role = LineRole::VariableBearing;
    }

    pub fn set_point_role(&mut self, p: PointId, role: PointRole) {
        self.points[p].role = role;
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint { points: self.points.len(), lines: self.lines.len(), traces: self.traces.len(), free_count: self.free_count }
    }

    pub fn rollback(&mut self, cp: Checkpoint) {
        for p in self.points.drain(cp.points..) {
            self.point_index.remove(&p.coords);
        }
        for l in self.lines.drain(cp.lines..) {
            self.line_index.remove(&l.coeffs);
        }
        self.point_lines.truncate(cp.points);
        self.line_points.truncate(cp.lines);
        for ls in &mut self.point_lines {
            while ls.last().is_some_and(|&l| l >= cp.lines) {
                ls.pop();
            }
        }
        for ps in &mut self.line_points {
            while ps.last().is_some_and(|&p| p >= cp.points) {
                ps.pop();
            }
        }
        self.traces.truncate(cp.traces);
        self.free_count = cp.free_count;
    }

    fn push_point(&mut self, label: &str, role: PointRole, coords: PPoint, provenance: Provenance, mut on: Vec<LineId>) -> PointId {
        let id = self.points.len();
        on.sort_unstable();
        on.dedup();
        for &l in &on {
            self.line_points[l].push(id);
        }
        self.point_index.insert(coords.clone(), id);
        self.points.push(MarkedPoint { id, label: label.to_string(), role, coords, provenance });
        self.point_lines.push(on);
        id
    }

    fn push_line(&mut self, label: &str, role: LineRole, coeffs: PLine, mut through: Vec<PointId>) -> LineId {
        let id = self.lines.len();
        through.sort_unstable();
        through.dedup();
        for &p in &through {
            self.point_lines[p].push(id);
        }
        let y_intercept = if role == LineRole::VariableBearing { coeffs.y_intercept() } else { None };
        self.line_index.insert(coeffs.clone(), id);
        self.lines.push(MarkedLine { id, label: label.to_string(), role, coeffs, framing: None, y_intercept });
        self.line_points.push(through);
        id
    }

    /// Add a point that must lie on exactly the lines `on` among existing lines.
    pub fn add_point(
        &mut self,
        label: &str,
        role: PointRole,
        coords: PPoint,
        provenance: Provenance,
        on: &[LineId],
    ) -> Result<PointId, ConfigError> {
        if let Some(&other) = self.point_index.get(&coords) {
            return Err(ConfigError::DuplicateElement(format!("{label} coincides with point {}", self.points[other].label)));
        }
        let mut unintended = None;
        for l in &self.lines {
            let inc = incident(&coords, &l.coeffs);
            let wanted = on.contains(&l.id);
            if wanted && !inc {
                return Err(ConfigError::IntendedIncidenceFails { point: label.into(), line: l.label.clone() });
            }
            if inc && !wanted && unintended.is_none() {
                unintended = Some(l.label.clone());
            }
        }
        if let Some(line) = unintended.filter(|_| !self.tolerate_accidental) {
            return Err(ConfigError::UnintendedIncidence { point: label.into(), line });
        }
        Ok(self.push_point(label, role, coords, provenance, on.to_vec()))
    }

    /// Add a line that must pass through exactly the points `through` among existing points.
    pub fn add_line(&mut self, label: &str, role: LineRole, coeffs: PLine, through: &[PointId]) -> Result<LineId, ConfigError> {
        if let Some(&other) = self.line_index.get(&coeffs) {
            return Err(ConfigError::DuplicateElement(format!("{label} coincides with line {}", self.lines[other].label)));
        }
        let mut unintended = None;
        for p in &self.points {
            let inc = incident(&p.coords, &coeffs);
            let wanted = through.contains(&p.id);
            if wanted && !inc {
                return Err(ConfigError::IntendedIncidenceFails { point: p.label.clone(), line: label.into() });
            }
            if inc && !wanted && unintended.is_none() {
                unintended = Some(p.label.clone());
            }
        }
        if let Some(point) = unintended.filter(|_| !self.tolerate_accidental) {
            return Err(ConfigError::UnintendedIncidence { point, line: label.into() });
        }
        Ok(self.push_line(label, role, coeffs, through.to_vec()))
    }

    /// Add a horizontal line y = c through p3 and the given points.
    pub fn add_horizontal(&mut self, label: &str, role: LineRole, c: &Scalar, through: &[PointId]) -> Result<LineId, ConfigError> {
        let mut pts = through.to_vec();
        if let Some(p3) = self.p3 {
            pts.push(p3);
        }
        self.add_line(label, role, PLine::horizontal(c), &pts)
    }

    /// Add the line through two existing points (plus any further intended points).
    pub fn add_join(&mut self, label: &str, a: PointId, b: PointId, also: &[PointId]) -> Result<LineId, ConfigError> {
        let coeffs = join(&self.points[a].coords, &self.points[b].coords)?;
        let mut through = vec![a, b];
        through.extend_from_slice(also);
        self.add_line(label, LineRole::Auxiliary, coeffs, &through)
    }

    /// Add the intersection point of two existing lines (plus any further intended lines).
    pub fn add_meet(&mut self, label: &str, role: PointRole, provenance: Provenance, l: LineId, m: LineId, also: &[LineId]) -> Result<PointId, ConfigError> {
        let coords = meet(&self.lines[l].coeffs, &self.lines[m].coeffs)?;
        let mut on = vec![l, m];
        on.extend_from_slice(also);
        self.add_point(label, role, coords, provenance, &on)
    }

    /// Mark the intersection of every pair of lines that shares no marked point.
    pub fn complete_bystanders(&mut self) -> Result<usize, ConfigError> {
        let n = self.lines.len();
        let shared = self.shared_pairs();
        let pencil = Pencil::new(self.lines.iter().map(|l| &l.coeffs).collect());
        let mut found: HashMap<PPoint, (LineId, LineId)> = HashMap::new();
        let mut order = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                if shared[i * n + j] {
                    continue;
                }
                let p = pencil.meet(i, j)?;
                if let Some(&existing) = self.point_index.get(&p) {
                    return Err(ConfigError::UnintendedIncidence {
                        point: self.points[existing].label.clone(),
                        line: format!("{} / {}", self.lines[i].label, self.lines[j].label),
                    });
                }
                if let Some(&(a, b)) = found.get(&p) {
                    return Err(ConfigError::ConcurrencyViolation(format!(
                        "{} {} {} {}",
                        self.lines[a].label, self.lines[b].label, self.lines[i].label, self.lines[j].label
                    )));
                }
                found.insert(p.clone(), (i, j));
                order.push((p, i, j));
            }
        }
        let added = order.len();
        for (p, i, j) in order {
            let label = format!("b{i}.{j}");
            self.push_point(&label, PointRole::Bystander, p, Provenance::COMPLETION, vec![i, j]);
        }
        Ok(added)
    }

    // n*n table: entry i*n+j (i<j) set when lines i and j share a marked point in the ledger
    fn shared_pairs(&self) -> Vec<bool> {
        let n = self.lines.len();
        let mut shared = vec![false; n * n];
        for ls in &self.point_lines {
            for (a, &i) in ls.iter().enumerate() {
                for &j in &ls[a + 1..] {
                    shared[i * n + j] = true;
                }
            }
        }
        shared
    }

    /// Verify the incidence-scheme conditions and the variable-line extras.
    pub fn check_conditions(&self) -> ConditionReport {
        let mut report = ConditionReport::default();
        self.check_anchors(&mut report);

        // (iii) distinctness
        let mut seen_points: HashMap<&PPoint, PointId> = HashMap::with_capacity(self.points.len());
        for p in &self.points {
            if let Some(other) = seen_points.insert(&p.coords, p.id) {
                report.push(Condition::Distinct, format!("points {} and {} coincide", self.points[other].label, p.label));
            }
        }
        let mut seen_lines: HashMap<&PLine, LineId> = HashMap::with_capacity(self.lines.len());
        for l in &self.lines {
            if let Some(other) = seen_lines.insert(&l.coeffs, l.id) {
                report.push(Condition::Distinct, format!("lines {} and {} coincide", self.lines[other].label, l.label));
            }
        }

        // (ii) realized incidences against the ledger, certified through pairwise
        // meets: a point on two or more lines is the meet of each pair of them.
        let n = self.lines.len();
        let mut realized: Vec<Vec<LineId>> = vec![Vec::new(); self.points.len()];
        let shared = self.shared_pairs();
        let pencil = Pencil::new(self.lines.iter().map(|l| &l.coeffs).collect());
        for i in 0..n {
            for j in (i + 1)..n {
                let Ok(p) = pencil.meet(i, j) else {
                    continue;
                };
                match seen_points.get(&p) {
                    Some(&pid) => {
                        realized[pid].push(i);
                        realized[pid].push(j);
                    }
                    None => {
                        // (iv) from the realization side
                        report.push(
                            Condition::SharedPoint,
                            format!("lines {} and {} meet at an unmarked point", self.lines[i].label, self.lines[j].label),
                        );
                    }
                }
                if !shared[i * n + j] {
                    report.push(
                        Condition::SharedPoint,
                        format!("ledger gives lines {} and {} no common marked point", self.lines[i].label, self.lines[j].label),
                    );
                }
            }
        }
        for (pid, r) in realized.iter_mut().enumerate() {
            r.sort_unstable();
            r.dedup();
            if r.len() < 2 {
                // on at most one line: a direct scan is cheap
                *r = self.lines.iter().filter(|l| incident(&self.points[pid].coords, &l.coeffs)).map(|l| l.id).collect();
            }
            if *r != self.point_lines[pid] {
                report.push(
                    Condition::Incidence,
                    format!(
                        "point {} lies on {:?} but the ledger requires {:?}",
                        self.points[pid].label,
                        r.iter().map(|&l| &self.lines[l].label).collect::<Vec<_>>(),
                        self.point_lines[pid].iter().map(|&l| &self.lines[l].label).collect::<Vec<_>>()
                    ),
                );
            }
        }

        // (v)
        for l in &self.lines {
            if self.line_points[l.id].len() < 3 {
                report.push(Condition::ThreePoints, format!("line {} carries {} marked points", l.label, self.line_points[l.id].len()));
            }
        }

        self.check_extras(&mut report);
        report
    }

    fn check_anchors(&self, report: &mut ConditionReport) {
        let f = &self.field;
        for (i, c) in ANCHOR_POINTS.iter().enumerate() {
            let want = PPoint::from_ints(f, *c).unwrap();
            if self.points.get(i).map(|p| &p.coords) != Some(&want) {
                report.push(Condition::Anchors, format!("point {} is not p{}", i, i + 1));
            }
        }
        for (k, &(i, j)) in ANCHOR_LINES.iter().enumerate() {
            let want = join(&PPoint::from_ints(f, ANCHOR_POINTS[i]).unwrap(), &PPoint::from_ints(f, ANCHOR_POINTS[j]).unwrap()).unwrap();
            if self.lines.get(k).map(|l| &l.coeffs) != Some(&want) {
                report.push(Condition::Anchors, format!("line {} is not p{}p{}", k, i + 1, j + 1));
            }
        }
    }

    fn check_extras(&self, report: &mut ConditionReport) {
        let zero = self.field.zero();
        let one = self.field.one();
        let mut intercepts: HashMap<Scalar, LineId> = HashMap::new();
        for l in self.lines.iter().filter(|l| l.role == LineRole::VariableBearing) {
            let Some(c) = l.coeffs.y_intercept() else {
                report.push(Condition::Extra, format!("variable-bearing line {} is not horizontal", l.label));
                continue;
            };
            if c == zero || c == one {
                report.push(Condition::Extra, format!("variable-bearing line {} has y-intercept {c}", l.label));
            }
            if let Some(other) = intercepts.insert(c.clone(), l.id) {
                report.push(Condition::Extra, format!("lines {} and {} share a y-intercept", self.lines[other].label, l.label));
            }
            if l.y_intercept.as_ref() != Some(&c) {
                report.push(Condition::Extra, format!("line {} records a stale y-intercept", l.label));
            }
            for anchor in [P1, P2, P4] {
                if self.required(anchor, l.id) {
                    report.push(Condition::Extra, format!("variable-bearing line {} passes through p{}", l.label, anchor + 1));
                }
            }
            if self.p3.is_some_and(|p3| !self.required(p3, l.id)) {
                report.push(Condition::Extra, format!("variable-bearing line {} misses p3", l.label));
            }
            if let Some(fr) = &l.framing {
                for &(_, pid) in &fr.labels {
                    if !self.required(pid, l.id) {
                        report.push(Condition::Extra, format!("framing point {} is not on {}", self.points[pid].label, l.label));
                    }
                }
            }
        }
        for p in self.points.iter().filter(|p| p.role == PointRole::Bystander) {
            if self.point_lines[p.id].len() != 2 {
                report.push(Condition::Extra, format!("bystander {} lies on {} lines", p.label, self.point_lines[p.id].len()));
            }
        }
    }

    /// Build a configuration from raw parts, as read from disk.
    pub fn from_parts(
        field: FieldSpec,
        points: Vec<MarkedPoint>,
        lines: Vec<MarkedLine>,
        incidence: &[(PointId, LineId)],
        traces: Vec<GadgetTrace>,
        free_count: usize,
        seed: u64,
    ) -> Result<Self, ConfigError> {
        let mut cfg = Configuration::empty(&field);
        let p3 = PPoint::from_ints(&field, ANCHOR_POINTS[2]).unwrap();
        for (i, p) in points.iter().enumerate() {
            if p.id != i {
                return Err(ConfigError::Schema(format!("point id {} at position {i}", p.id)));
            }
        }
        for (i, l) in lines.iter().enumerate() {
            if l.id != i {
                return Err(ConfigError::Schema(format!("line id {} at position {i}", l.id)));
            }
        }
        cfg.point_lines = vec![Vec::new(); points.len()];
        cfg.line_points = vec![Vec::new(); lines.len()];
        for &(p, l) in incidence {
            cfg.point_lines[p].push(l);
            cfg.line_points[l].push(p);
        }
        for v in cfg.point_lines.iter_mut().chain(cfg.line_points.iter_mut()) {
            v.sort_unstable();
        }
        for p in &points {
            if p.coords == p3 {
                cfg.p3 = Some(p.id);
            }
            cfg.point_index.entry(p.coords.clone()).or_insert(p.id);
        }
        for l in &lines {
            cfg.line_index.entry(l.coeffs.clone()).or_insert(l.id);
        }
        cfg.points = points;
        cfg.lines = lines;
        cfg.traces = traces;
        cfg.free_count = free_count;
        cfg.seed = seed;
        Ok(cfg)
    }

    /// Overwrite a point's coordinates without any checks (for tamper tests).
    pub fn perturb_point(&mut self, p: PointId, coords: PPoint) {
        let old = std::mem::replace(&mut self.points[p].coords, coords.clone());
        self.point_index.remove(&old);
        self.point_index.insert(coords, p);
    }

    /// Drop one ledger entry without touching coordinates (for tamper tests).
    pub fn forget_incidence(&mut self, p: PointId, l: LineId) {
        self.point_lines[p].retain(|&x| x != l);
        self.line_points[l].retain(|&x| x != p);
    }
}

/// The anchor points p1..p4, the six lines joining them, and the unit point.
pub fn init_anchors(field: &FieldSpec) -> Configuration {
    let mut cfg = Configuration::empty(field);
    for (i, c) in ANCHOR_POINTS.iter().enumerate() {
        let p = PPoint::from_ints(field, *c).unwrap();
        cfg.push_point(&format!("p{}", i + 1), PointRole::Anchor, p, Provenance::INITIAL, Vec::new());
    }
    cfg.p3 = Some(P3);
    for &(i, j) in ANCHOR_LINES.iter() {
        let l = join(&cfg.points[i].coords, &cfg.points[j].coords).unwrap();
        cfg.push_line(&format!("p{}p{}", i + 1, j + 1), LineRole::Anchor, l, vec![i, j]);
    }
    // 1 = p2p4 ∩ p1p3
    let unit = meet(&cfg.lines[4].coeffs, &cfg.lines[X_AXIS].coeffs).unwrap();
    let id = cfg.push_point("unit", PointRole::Unit, unit, Provenance::INITIAL, vec![X_AXIS, 4]);
    debug_assert_eq!(id, UNIT);
    cfg
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Condition {
    #[serde(rename = "i")]
    Anchors,
    #[serde(rename = "ii")]
    Incidence,
    #[serde(rename = "iii")]
    Distinct,
    #[serde(rename = "iv")]
    SharedPoint,
    #[serde(rename = "v")]
    ThreePoints,
    #[serde(rename = "extra")]
    Extra,
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Condition::Anchors => "(i) anchors",
            Condition::Incidence => "(ii) incidence",
            Condition::Distinct => "(iii) distinct",
            Condition::SharedPoint => "(iv) shared point",
            Condition::ThreePoints => "(v) three points",
            Condition::Extra => "extra",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub condition: Condition,
    pub message: String,
}

/// Violations found by [`Configuration::check_conditions`]; at most
/// [`ConditionReport::MAX_PER_CONDITION`] messages are kept per condition.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub violations: Vec<Violation>,
    pub counts: std::collections::BTreeMap<Condition, usize>,
}

impl ConditionReport {
    pub const MAX_PER_CONDITION: usize = 20;

    pub fn push(&mut self, condition: Condition, message: String) {
        let c = self.counts.entry(condition).or_insert(0);
        *c += 1;
        if *c <= Self::MAX_PER_CONDITION {
            self.violations.push(Violation { condition, message });
        }
    }

    pub fn is_clean(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn count(&self, c: Condition) -> usize {
        self.counts.get(&c).copied().unwrap_or(0)
    }
}

impl fmt::Display for ConditionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_clean() {
            return writeln!(f, "all conditions hold");
        }
        for v in &self.violations {
            writeln!(f, "{}: {}", v.condition, v.message)?;
        }
        for (c, n) in &self.counts {
            if *n > Self::MAX_PER_CONDITION {
                writeln!(f, "{c}: {} further violations", n - Self::MAX_PER_CONDITION)?;
            }
        }
        Ok(())
    }
}

// ---- serialization ----

#[derive(Serialize, Deserialize)]
struct PointRec {
    id: PointId,
    label: String,
    role: PointRole,
    coords: [Value; 3],
    provenance: Provenance,
}

#[derive(Serialize, Deserialize)]
struct FramingRec {
    labels: Vec<(Value, PointId)>,
    variable: Option<PointId>,
}

#[derive(Serialize, Deserialize)]
struct LineRec {
    id: LineId,
    label: String,
    role: LineRole,
    coeffs: [Value; 3],
    framing: Option<FramingRec>,
    y_intercept: Option<Value>,
}

#[derive(Serialize, Deserialize)]
struct ConfigFile {
    field: Value,
    points: Vec<PointRec>,
    lines: Vec<LineRec>,
    incidence: Vec<Vec<u8>>,
    traces: Vec<Value>,
    free_count: usize,
    seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    program: Option<ProgramRecord>,
}

fn triple_json(c: &[Scalar; 3]) -> [Value; 3] {
    [c[0].to_json(), c[1].to_json(), c[2].to_json()]
}

fn triple_from_json(f: &FieldSpec, v: &[Value; 3]) -> Result<[Scalar; 3], ConfigError> {
    Ok([f.scalar_from_json(&v[0])?, f.scalar_from_json(&v[1])?, f.scalar_from_json(&v[2])?])
}

/// Deterministic JSON with the full dense incidence matrix.
pub fn serialize(cfg: &Configuration) -> Vec<u8> {
    let points = cfg
        .points
        .iter()
        .map(|p| PointRec {
            id: p.id,
            label: p.label.clone(),
            role: p.role,
            coords: triple_json(p.coords.coords()),
            provenance: p.provenance,
        })
        .collect();
    let lines = cfg
        .lines
        .iter()
        .map(|l| LineRec {
            id: l.id,
            label: l.label.clone(),
            role: l.role,
            coeffs: triple_json(l.coeffs.coeffs()),
            framing: l.framing.as_ref().map(|fr| FramingRec {
                labels: fr.labels.iter().map(|(s, p)| (s.to_json(), *p)).collect(),
                variable: fr.variable,
            }),
            y_intercept: l.y_intercept.as_ref().map(Scalar::to_json),
        })
        .collect();
    let incidence = cfg
        .point_lines
        .iter()
        .map(|ls| {
            let mut row = vec![0u8; cfg.lines.len()];
            for &l in ls {
                row[l] = 1;
            }
            row
        })
        .collect();
    let file = ConfigFile {
        field: cfg.field.to_json(),
        points,
        lines,
        incidence,
        traces: cfg.traces.iter().map(GadgetTrace::to_json).collect(),
        free_count: cfg.free_count,
        seed: cfg.seed,
        program: cfg.program.clone(),
    };
    serde_json::to_vec(&file).expect("configuration serializes")
}

pub fn deserialize(bytes: &[u8]) -> Result<Configuration, ConfigError> {
    let file: ConfigFile = serde_json::from_slice(bytes).map_err(|e| ConfigError::Schema(e.to_string()))?;
    let field = FieldSpec::from_json(&file.field)?;
    let mut points = Vec::with_capacity(file.points.len());
    for r in file.points {
        let [x, y, z] = triple_from_json(&field, &r.coords)?;
        let coords = PPoint::new(x, y, z)?;
        if coords.coords() != &triple_from_json(&field, &r.coords)? {
            return Err(ConfigError::Schema(format!("point {} is not normalized", r.id)));
        }
        points.push(MarkedPoint { id: r.id, label: r.label, role: r.role, coords, provenance: r.provenance });
    }
    let mut lines = Vec::with_capacity(file.lines.len());
    for r in file.lines {
        let [a, b, c] = triple_from_json(&field, &r.coeffs)?;
        let coeffs = PLine::new(a, b, c)?;
        if coeffs.coeffs() != &triple_from_json(&field, &r.coeffs)? {
            return Err(ConfigError::Schema(format!("line {} is not normalized", r.id)));
        }
        let framing = match r.framing {
            None => None,
            Some(fr) => {
                let mut labels = Vec::new();
                for (s, p) in fr.labels {
                    if p >= points.len() {
                        return Err(ConfigError::Schema(format!("framing point {p} out of range")));
                    }
                    labels.push((field.scalar_from_json(&s)?, p));
                }
                if fr.variable.is_some_and(|v| v >= points.len()) {
                    return Err(ConfigError::Schema("variable point out of range".into()));
                }
                Some(LineFraming { labels, variable: fr.variable })
            }
        };
        let y_intercept = r.y_intercept.map(|v| field.scalar_from_json(&v)).transpose()?;
        lines.push(MarkedLine { id: r.id, label: r.label, role: r.role, coeffs, framing, y_intercept });
    }
    if file.incidence.len() != points.len() {
        return Err(ConfigError::Schema("incidence matrix row count".into()));
    }
    let mut incidence = Vec::new();
    for (p, row) in file.incidence.iter().enumerate() {
        if row.len() != lines.len() {
            return Err(ConfigError::Schema(format!("incidence row {p} has {} columns", row.len())));
        }
        for (l, &v) in row.iter().enumerate() {
            match v {
                0 => {}
                1 => incidence.push((p, l)),
                _ => return Err(ConfigError::Schema(format!("incidence entry {v}"))),
            }
        }
    }
    let traces = file
        .traces
        .iter()
        .map(|t| GadgetTrace::from_json(t, &field))
        .collect::<Result<Vec<_>, _>>()?;
    let mut cfg = Configuration::from_parts(field, points, lines, &incidence, traces, file.free_count, file.seed)?;
    if let Some(prog) = &file.program {
        if let Some(&l) = prog.variables.iter().find(|&&l| l >= cfg.lines.len()) {
            return Err(ConfigError::Schema(format!("variable line {l} out of range")));
        }
    }
    cfg.program = file.program;
    Ok(cfg)
}

/// Points of the configuration not on any of the given lines; used by tests and tools.
pub fn points_off(cfg: &Configuration, lines: &[LineId]) -> HashSet<PointId> {
    (0..cfg.points.len()).filter(|&p| lines.iter().all(|&l| !cfg.required(p, l))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::make_field;

    #[test]
    fn anchors() {
        let f = make_field(7, 1).unwrap();
        let cfg = init_anchors(&f);
        assert_eq!(cfg.points().len(), 5);
        assert_eq!(cfg.lines().len(), 6);
        assert_eq!(cfg.line(X_AXIS).coeffs, PLine::from_ints(&f, [0, 1, 0]).unwrap());
        assert_eq!(cfg.point(UNIT).coords, PPoint::from_ints(&f, [1, 0, 1]).unwrap());
    }

    #[test]
    fn anchors_only_completion() {
        let f = FieldSpec::rationals();
        let mut cfg = init_anchors(&f);
        assert_eq!(cfg.complete_bystanders().unwrap(), 2);
        let coords: HashSet<_> = cfg.points()[5..].iter().map(|p| p.coords.clone()).collect();
        let want: HashSet<_> = [[1, 1, 0], [0, 1, 1]].into_iter().map(|c| PPoint::from_ints(&f, c).unwrap()).collect();
        assert_eq!(coords, want);
        assert_eq!(cfg.complete_bystanders().unwrap(), 0);
        let report = cfg.check_conditions();
        // anchor lines carry three marked points once the two bystanders exist
        assert!(report.is_clean(), "{report}");
    }

    #[test]
    fn add_element_errors() {
        let f = FieldSpec::rationals();
        let mut cfg = init_anchors(&f);
        let c = f.from_i64(5);
        cfg.add_horizontal("l", LineRole::VariableBearing, &c, &[]).unwrap();
        assert!(matches!(cfg.add_horizontal("l2", LineRole::VariableBearing, &c, &[]), Err(ConfigError::DuplicateElement(_))));
        // (3, 3) lies on x = y
        let on_diag = PPoint::affine(f.from_i64(3), f.from_i64(3));
        assert!(matches!(
            cfg.add_point("X", PointRole::Auxiliary, on_diag, Provenance::INITIAL, &[]),
            Err(ConfigError::UnintendedIncidence { .. })
        ));
        let off = PPoint::affine(f.from_i64(3), f.from_i64(4));
        assert!(matches!(
            cfg.add_point("X", PointRole::Auxiliary, off.clone(), Provenance::INITIAL, &[X_AXIS]),
            Err(ConfigError::IntendedIncidenceFails { .. })
        ));
        let cp = cfg.checkpoint();
        let x = cfg.add_point("X", PointRole::Auxiliary, off, Provenance::INITIAL, &[]).unwrap();
        cfg.add_join("ray", UNIT, x, &[]).unwrap();
        cfg.rollback(cp);
        assert_eq!(cfg.points().len(), 5);
        assert_eq!(cfg.lines().len(), 7);
        assert_eq!(cfg.lines_through(UNIT), &[X_AXIS, 4]);
    }

    #[test]
    fn concurrency_is_detected() {
        let f = FieldSpec::rationals();
        let mut cfg = init_anchors(&f);
        // two rays from points far apart that meet on the anchor line x = 1 at (1, 5)
        let a = cfg.add_point("A", PointRole::Auxiliary, PPoint::affine(f.from_i64(3), f.from_i64(7)), Provenance::INITIAL, &[]).unwrap();
        let b = cfg.add_point("B", PointRole::Auxiliary, PPoint::affine(f.from_i64(-2), f.from_i64(9)), Provenance::INITIAL, &[]).unwrap();
        let target = PPoint::affine(f.from_i64(1), f.from_i64(5));
        cfg.add_line("ra", LineRole::Auxiliary, join(&cfg.point(a).coords, &target).unwrap(), &[a]).unwrap();
        cfg.add_line("rb", LineRole::Auxiliary, join(&cfg.point(b).coords, &target).unwrap(), &[b]).unwrap();
        assert!(matches!(cfg.complete_bystanders(), Err(ConfigError::ConcurrencyViolation(_))));
    }

    #[test]
    fn tampering_is_reported() {
        let f = FieldSpec::rationals();
        let mut cfg = init_anchors(&f);
        cfg.complete_bystanders().unwrap();
        let mut dup = cfg.clone();
        let c = dup.point(P1).coords.clone();
        dup.perturb_point(5, c);
        assert!(dup.check_conditions().count(Condition::Distinct) > 0);
        let mut dropped = cfg.clone();
        dropped.forget_incidence(UNIT, X_AXIS);
        assert!(dropped.check_conditions().count(Condition::Incidence) > 0);
    }

    #[test]
    fn json_round_trip_and_p3_row() {
        let f = make_field(5, 2).unwrap();
        let mut cfg = init_anchors(&f);
        cfg.add_horizontal("h", LineRole::VariableBearing, &f.generator(), &[]).unwrap();
        cfg.complete_bystanders().unwrap();
        let bytes = serialize(&cfg);
        let back = deserialize(&bytes).unwrap();
        assert_eq!(serialize(&back), bytes);
        let v: Value = serde_json::from_slice(&bytes).unwrap();
        let row = &v["incidence"][P3];
        for (l, line) in cfg.lines().iter().enumerate() {
            if line.coeffs.is_horizontal() {
                assert_eq!(row[l], 1);
            }
        }
        let keys: Vec<_> = v.as_object().unwrap().keys().cloned().collect();
        assert_eq!(keys.len(), 7);
        assert!(deserialize(b"{\"field\": 3}").is_err());
    }
}
