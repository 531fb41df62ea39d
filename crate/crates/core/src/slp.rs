//! Integer polynomial systems and their straight-line decomposition into
//! atomic equations.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::field::{FieldSpec, Scalar};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SlpError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    SyntaxError { line: usize, column: usize, message: String },
    #[error("x0 is reserved for the constant 1 (line {line}, column {column})")]
    ReservedVariable { line: usize, column: usize },
    #[error("enumeration of {needed} assignments exceeds the budget of {budget}")]
    BudgetExceeded { needed: u128, budget: u128 },
    #[error("bad witness: {0}")]
    BadWitness(String),
}

/// Exponent vector; entry i is the power of x_{i+1}. Trailing zeros are trimmed.
pub type Monomial = Vec<u32>;

/// Sparse polynomial with integer coefficients.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Poly {
    terms: BTreeMap<Monomial, BigInt>,
}

fn trim_mono(mut m: Monomial) -> Monomial {
    while m.last() == Some(&0) {
        m.pop();
    }
    m
}

impl Poly {
    pub fn zero() -> Self {
        Poly::default()
    }

    pub fn constant(c: impl Into<BigInt>) -> Self {
        let mut p = Poly::zero();
        p.add_term(Vec::new(), c.into());
        p
    }

    /// The variable x_i, i >= 1.
    pub fn var(i: usize) -> Self {
        assert!(i >= 1);
        let mut m = vec![0; i];
        m[i - 1] = 1;
        let mut p = Poly::zero();
        p.add_term(m, BigInt::one());
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &BigInt)> {
        self.terms.iter()
    }

    pub fn add_term(&mut self, m: Monomial, c: BigInt) {
        let m = trim_mono(m);
        let entry = self.terms.entry(m.clone()).or_insert_with(BigInt::zero);
        *entry += c;
        if entry.is_zero() {
            self.terms.remove(&m);
        }
    }

    /// Number of variables mentioned (largest index).
    pub fn num_vars(&self) -> usize {
        self.terms.keys().map(Vec::len).max().unwrap_or(0)
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(|m| m.iter().sum()).max().unwrap_or(0)
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    pub fn neg(&self) -> Poly {
        Poly { terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect() }
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                let n = m1.len().max(m2.len());
                let m: Monomial = (0..n).map(|i| m1.get(i).unwrap_or(&0) + m2.get(i).unwrap_or(&0)).collect();
                out.add_term(m, c1 * c2);
            }
        }
        out
    }

    pub fn pow(&self, e: u32) -> Poly {
        let mut acc = Poly::constant(1);
        for _ in 0..e {
            acc = acc.mul(self);
        }
        acc
    }

    /// Evaluate at `values[i]` for x_{i+1}.
    pub fn eval(&self, spec: &FieldSpec, values: &[Scalar]) -> Scalar {
        let mut acc = spec.zero();
        for (m, c) in &self.terms {
            let mut t = spec.from_bigint(c);
            for (i, &e) in m.iter().enumerate() {
                if e > 0 {
                    t = &t * &values[i].pow(e as u128);
                }
            }
            acc = &acc + &t;
        }
        acc
    }

    // graded order, highest degree first, constant last
    fn sorted_terms(&self) -> Vec<(&Monomial, &BigInt)> {
        let mut v: Vec<_> = self.terms.iter().collect();
        v.sort_by(|(a, _), (b, _)| {
            let da: u32 = a.iter().sum();
            let db: u32 = b.iter().sum();
            db.cmp(&da).then_with(|| {
                let n = a.len().max(b.len());
                let pa: Vec<u32> = (0..n).map(|i| *a.get(i).unwrap_or(&0)).collect();
                let pb: Vec<u32> = (0..n).map(|i| *b.get(i).unwrap_or(&0)).collect();
                pb.cmp(&pa)
            })
        });
        v
    }
}

fn fmt_mono(m: &Monomial) -> String {
    let parts: Vec<String> = m
        .iter()
        .enumerate()
        .filter(|(_, &e)| e > 0)
        .map(|(i, &e)| if e == 1 { format!("x{}", i + 1) } else { format!("x{}^{}", i + 1, e) })
        .collect();
    parts.join("*")
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (m, c)) in self.sorted_terms().into_iter().enumerate() {
            let neg = c.is_negative();
            match (i, neg) {
                (0, true) => write!(f, "-")?,
                (0, false) => {}
                (_, true) => write!(f, " - ")?,
                (_, false) => write!(f, " + ")?,
            }
            let a = c.abs();
            if m.is_empty() {
                write!(f, "{a}")?;
            } else if a.is_one() {
                write!(f, "{}", fmt_mono(m))?;
            } else {
                write!(f, "{a}*{}", fmt_mono(m))?;
            }
        }
        Ok(())
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    line: usize,
}

impl<'a> Parser<'a> {
    fn err(&self, message: &str) -> SlpError {
        SlpError::SyntaxError { line: self.line, column: self.pos + 1, message: message.into() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn digits(&mut self) -> Option<&'a str> {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        (self.pos > start).then(|| std::str::from_utf8(&self.src[start..self.pos]).unwrap())
    }

    fn expr(&mut self) -> Result<Poly, SlpError> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    acc = acc.add(&self.term()?);
                }
                Some(b'-') => {
                    self.pos += 1;
                    acc = acc.sub(&self.term()?);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Poly, SlpError> {
        let mut acc = self.unary()?;
        while self.peek() == Some(b'*') {
            self.pos += 1;
            acc = acc.mul(&self.unary()?);
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<Poly, SlpError> {
        match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                Ok(self.unary()?.neg())
            }
            Some(b'+') => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Poly, SlpError> {
        let base = self.atom()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            self.skip_ws();
            let d = self.digits().ok_or_else(|| self.err("expected exponent"))?;
            let e: u32 = d.parse().map_err(|_| self.err("exponent too large"))?;
            return Ok(base.pow(e));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Poly, SlpError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(self.err("expected ')'"));
                }
                self.pos += 1;
                Ok(e)
            }
            Some(b'x') => {
                let start = self.pos;
                self.pos += 1;
                let d = self.digits().ok_or_else(|| self.err("expected variable index"))?;
                let i: usize = d.parse().map_err(|_| self.err("variable index too large"))?;
                if i == 0 {
                    return Err(SlpError::ReservedVariable { line: self.line, column: start + 1 });
                }
                Ok(Poly::var(i))
            }
            Some(c) if c.is_ascii_digit() => {
                let d = self.digits().unwrap();
                Ok(Poly::constant(d.parse::<BigInt>().unwrap()))
            }
            Some(_) => Err(self.err("unexpected character")),
            None => Err(self.err("unexpected end of input")),
        }
    }
}

/// Parse a single polynomial.
pub fn parse_poly(text: &str) -> Result<Poly, SlpError> {
    parse_line(text, 1)
}

fn parse_line(text: &str, line: usize) -> Result<Poly, SlpError> {
    let mut p = Parser { src: text.as_bytes(), pos: 0, line };
    let poly = p.expr()?;
    if p.peek().is_some() {
        return Err(p.err("trailing input"));
    }
    Ok(poly)
}

/// One polynomial per line; blank lines and `#` comments are skipped.
pub fn parse_system(text: &str) -> Result<Vec<Poly>, SlpError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let body = raw.split('#').next().unwrap();
        if body.trim().is_empty() {
            continue;
        }
        out.push(parse_line(body, i + 1)?);
    }
    Ok(out)
}

/// Number of input variables of a system.
pub fn num_vars(polys: &[Poly]) -> usize {
    polys.iter().map(Poly::num_vars).max().unwrap_or(0)
}

/// Atomic equations; index 0 is the constant 1. The defined variable is
/// `a` for Copy/Neg and `c` for Sum/Prod.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AtomicEq {
    /// x_a = x_b
    Copy { a: usize, b: usize },
    /// x_a = -x_b
    Neg { a: usize, b: usize },
    /// x_c = x_a + x_b
    Sum { a: usize, b: usize, c: usize },
    /// x_c = x_a * x_b
    Prod { a: usize, b: usize, c: usize },
    /// x_a = 0
    Zero { a: usize },
}

impl AtomicEq {
    pub fn defined(&self) -> Option<usize> {
        match *self {
            AtomicEq::Copy { a, .. } | AtomicEq::Neg { a, .. } => Some(a),
            AtomicEq::Sum { c, .. } | AtomicEq::Prod { c, .. } => Some(c),
            AtomicEq::Zero { .. } => None,
        }
    }

    pub fn operands(&self) -> Vec<usize> {
        match *self {
            AtomicEq::Copy { b, .. } | AtomicEq::Neg { b, .. } => vec![b],
            AtomicEq::Sum { a, b, .. } | AtomicEq::Prod { a, b, .. } => vec![a, b],
            AtomicEq::Zero { a } => vec![a],
        }
    }
}

impl fmt::Display for AtomicEq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            AtomicEq::Copy { a, b } => write!(f, "x{a} = x{b}"),
            AtomicEq::Neg { a, b } => write!(f, "x{a} = -x{b}"),
            AtomicEq::Sum { a, b, c } => write!(f, "x{c} = x{a} + x{b}"),
            AtomicEq::Prod { a, b, c } => write!(f, "x{c} = x{a} * x{b}"),
            AtomicEq::Zero { a } => write!(f, "zero x{a}"),
        }
    }
}

/// Straight-line program over x0 = 1, inputs x1..xn and intermediates up to x_m.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SLProgram {
    pub n: usize,
    pub m: usize,
    pub equations: Vec<AtomicEq>,
    pub notes: Vec<String>,
}

impl SLProgram {
    /// Check the structural rules: operands defined before use, distinct
    /// Sum/Prod operands, each intermediate defined exactly once.
    pub fn validate(&self) -> Result<(), String> {
        let mut defined = vec![false; self.m + 1];
        for d in defined.iter_mut().take(self.n + 1) {
            *d = true;
        }
        for (k, eq) in self.equations.iter().enumerate() {
            for o in eq.operands() {
                if o > self.m || !defined[o] {
                    return Err(format!("equation {k} ({eq}) uses undefined x{o}"));
                }
            }
            if let AtomicEq::Sum { a, b, .. } | AtomicEq::Prod { a, b, .. } = *eq {
                if a == b {
                    return Err(format!("equation {k} ({eq}) repeats an operand"));
                }
            }
            if let Some(d) = eq.defined() {
                if d == 0 || d > self.m || defined[d] {
                    return Err(format!("equation {k} ({eq}) redefines x{d}"));
                }
                defined[d] = true;
            }
        }
        Ok(())
    }
}

impl fmt::Display for SLProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for eq in &self.equations {
            writeln!(f, "{eq}")?;
        }
        Ok(())
    }
}

struct Builder {
    next: usize,
    eqs: Vec<AtomicEq>,
    notes: Vec<String>,
    note: String,
}

impl Builder {
    fn fresh(&mut self) -> usize {
        self.next += 1;
        self.next
    }

    fn push(&mut self, eq: AtomicEq) {
        self.eqs.push(eq);
        self.notes.push(self.note.clone());
    }

    fn copy(&mut self, b: usize) -> usize {
        let a = self.fresh();
        self.push(AtomicEq::Copy { a, b });
        a
    }

    fn neg(&mut self, b: usize) -> usize {
        let a = self.fresh();
        self.push(AtomicEq::Neg { a, b });
        a
    }

    fn sum(&mut self, a: usize, b: usize) -> usize {
        let b = if a == b { self.copy(b) } else { b };
        let c = self.fresh();
        self.push(AtomicEq::Sum { a, b, c });
        c
    }

    fn prod(&mut self, a: usize, b: usize) -> usize {
        let b = if a == b { self.copy(b) } else { b };
        let c = self.fresh();
        self.push(AtomicEq::Prod { a, b, c });
        c
    }

    // k * x_base for k >= 1 by binary doubling
    fn scale(&mut self, base: usize, k: &BigInt) -> usize {
        let bits = k.to_str_radix(2);
        let mut r = base;
        for bit in bits.chars().skip(1) {
            r = self.sum(r, r);
            if bit == '1' {
                r = self.sum(r, base);
            }
        }
        r
    }

    fn constant(&mut self, c: &BigInt) -> usize {
        if c.is_one() {
            return self.copy(0);
        }
        let minus_one = self.neg(0);
        if *c == -BigInt::one() {
            return minus_one;
        }
        // build -|c| from -1 so that no 1 + 1 step is needed, then flip the sign
        let m = self.scale(minus_one, &c.abs());
        if c.is_positive() {
            self.neg(m)
        } else {
            m
        }
    }

    fn monomial(&mut self, m: &Monomial) -> usize {
        let mut factors = Vec::new();
        for (i, &e) in m.iter().enumerate() {
            factors.extend(std::iter::repeat_n(i + 1, e as usize));
        }
        let mut acc = factors[0];
        for &f in &factors[1..] {
            acc = self.prod(acc, f);
        }
        acc
    }

    fn term(&mut self, m: &Monomial, c: &BigInt) -> usize {
        if m.is_empty() {
            return self.constant(c);
        }
        let t = self.monomial(m);
        if c.is_one() {
            return t;
        }
        let base = if c.is_negative() { self.neg(t) } else { t };
        let k = c.abs();
        if k.is_one() {
            base
        } else {
            self.scale(base, &k)
        }
    }
}

/// Decompose a system over inputs x1..xn into atomic equations.
pub fn decompose(polys: &[Poly], n: usize) -> SLProgram {
    let n = n.max(num_vars(polys));
    let mut b = Builder { next: n, eqs: Vec::new(), notes: Vec::new(), note: String::new() };
    for (i, poly) in polys.iter().enumerate() {
        if poly.is_zero() {
            continue;
        }
        b.note = format!("f{}: {}", i + 1, poly);
        let terms: Vec<usize> = poly.sorted_terms().into_iter().map(|(m, c)| b.term(m, c)).collect();
        // sum from the right so the constant is absorbed first
        let mut acc = *terms.last().unwrap();
        for &t in terms[..terms.len() - 1].iter().rev() {
            acc = b.sum(t, acc);
        }
        b.push(AtomicEq::Zero { a: acc });
    }
    SLProgram { n, m: b.next, equations: b.eqs, notes: b.notes }
}

/// Assignment x0..x_m and the residuals of the Zero equations.
pub fn eval_program(prog: &SLProgram, spec: &FieldSpec, inputs: &[Scalar]) -> (Vec<Scalar>, Vec<Scalar>) {
    assert_eq!(inputs.len(), prog.n, "input count");
    let mut vals = vec![spec.zero(); prog.m + 1];
    vals[0] = spec.one();
    vals[1..=prog.n].clone_from_slice(inputs);
    let mut residuals = Vec::new();
    for eq in &prog.equations {
        match *eq {
            AtomicEq::Copy { a, b } => vals[a] = vals[b].clone(),
            AtomicEq::Neg { a, b } => vals[a] = -&vals[b],
            AtomicEq::Sum { a, b, c } => vals[c] = &vals[a] + &vals[b],
            AtomicEq::Prod { a, b, c } => vals[c] = &vals[a] * &vals[b],
            AtomicEq::Zero { a } => residuals.push(vals[a].clone()),
        }
    }
    (vals, residuals)
}

pub fn solves(polys: &[Poly], spec: &FieldSpec, point: &[Scalar]) -> bool {
    polys.iter().all(|f| f.eval(spec, point).is_zero())
}

pub const DEFAULT_BUDGET: u128 = 1_000_000;

/// All assignments of `n` variables over a finite field, in lexicographic order.
pub fn assignments(spec: &FieldSpec, n: usize, budget: u128) -> Result<impl Iterator<Item = Vec<Scalar>> + '_, SlpError> {
    let q = spec.order().ok_or(SlpError::BudgetExceeded { needed: u128::MAX, budget })?;
    let needed = q.checked_pow(n as u32).unwrap_or(u128::MAX);
    if needed > budget {
        return Err(SlpError::BudgetExceeded { needed, budget });
    }
    Ok((0..needed).map(move |mut idx| {
        let mut out = vec![spec.zero(); n];
        for i in (0..n).rev() {
            out[i] = spec.element(idx % q);
            idx /= q;
        }
        out
    }))
}

/// Lexicographically smallest solution over `spec`.
pub fn find_witness(polys: &[Poly], spec: &FieldSpec, budget: u128) -> Result<Option<Vec<Scalar>>, SlpError> {
    let n = num_vars(polys);
    Ok(assignments(spec, n, budget)?.find(|a| solves(polys, spec, a)))
}

/// Back-substitute the program symbolically and compare the Zero-flagged
/// polynomials with the nonzero input polynomials as multisets.
pub fn equivalence_check(polys: &[Poly], prog: &SLProgram) -> bool {
    if prog.validate().is_err() || prog.n < num_vars(polys) {
        return false;
    }
    let mut sym: Vec<Poly> = vec![Poly::zero(); prog.m + 1];
    sym[0] = Poly::constant(1);
    for (i, s) in sym.iter_mut().enumerate().take(prog.n + 1).skip(1) {
        *s = Poly::var(i);
    }
    let mut zeros = Vec::new();
    for eq in &prog.equations {
        match *eq {
            AtomicEq::Copy { a, b } => sym[a] = sym[b].clone(),
            AtomicEq::Neg { a, b } => sym[a] = sym[b].neg(),
            AtomicEq::Sum { a, b, c } => sym[c] = sym[a].add(&sym[b]),
            AtomicEq::Prod { a, b, c } => sym[c] = sym[a].mul(&sym[b]),
            AtomicEq::Zero { a } => zeros.push(sym[a].clone()),
        }
    }
    let mut want: Vec<Poly> = polys.iter().filter(|p| !p.is_zero()).cloned().collect();
    want.sort();
    zeros.sort();
    want == zeros
}

/// Parse "x1=3, x2=1/2" into a full assignment of x1..xn.
pub fn parse_witness(text: &str, spec: &FieldSpec, n: usize) -> Result<Vec<Scalar>, SlpError> {
    let mut vals: Vec<Option<Scalar>> = vec![None; n];
    for part in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (name, value) = part.split_once('=').ok_or_else(|| SlpError::BadWitness(part.into()))?;
        let idx: usize = name
            .trim()
            .strip_prefix('x')
            .and_then(|d| d.parse().ok())
            .filter(|&i| i >= 1 && i <= n)
            .ok_or_else(|| SlpError::BadWitness(format!("unknown variable {}", name.trim())))?;
        let v = spec.parse_scalar(value).ok_or_else(|| SlpError::BadWitness(format!("cannot read {value}")))?;
        vals[idx - 1] = Some(v);
    }
    vals.into_iter()
        .enumerate()
        .map(|(i, v)| v.ok_or_else(|| SlpError::BadWitness(format!("x{} missing", i + 1))))
        .collect()
}

/// Total bit size of the coefficients and exponents, for size bounds.
pub fn bit_size(polys: &[Poly]) -> u64 {
    polys
        .iter()
        .flat_map(|p| p.terms())
        .map(|(m, c)| c.bits() + m.iter().map(|&e| e as u64).sum::<u64>() + 1)
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::make_field;

    #[test]
    fn parse_examples() {
        let p = parse_poly("x1*x2 + x3^2 - 2").unwrap();
        let want = Poly::var(1).mul(&Poly::var(2)).add(&Poly::var(3).pow(2)).add(&Poly::constant(-2));
        assert_eq!(p, want);
        assert_eq!(p.terms().count(), 3);
        assert!(parse_poly("x1 - x1").unwrap().is_zero());
        assert!(matches!(parse_poly("x0 + 1"), Err(SlpError::ReservedVariable { column: 1, .. })));
        assert!(matches!(parse_poly("x1 +"), Err(SlpError::SyntaxError { .. })));
        assert!(matches!(parse_poly("x1 $ 2"), Err(SlpError::SyntaxError { column: 4, .. })));
    }

    #[test]
    fn print_parse_fixed_point() {
        for s in ["x1*x2 + x3^2 - 2", "-(x1 - 3)^3 + 2*x2", "x1^2 + x1 + 1", "0", "-7"] {
            let p = parse_poly(s).unwrap();
            let printed = p.to_string();
            assert_eq!(parse_poly(&printed).unwrap(), p, "{s} -> {printed}");
            assert_eq!(parse_poly(&printed).unwrap().to_string(), printed);
        }
        assert_eq!(parse_poly("x3^2 - 2 + x2*x1").unwrap().to_string(), "x1*x2 + x3^2 - 2");
    }

    #[test]
    fn decompose_examples() {
        let sq = decompose(&[parse_poly("x1^2").unwrap()], 1);
        assert_eq!(
            sq.equations,
            vec![AtomicEq::Copy { a: 2, b: 1 }, AtomicEq::Prod { a: 1, b: 2, c: 3 }, AtomicEq::Zero { a: 3 }]
        );
        let dbl = decompose(&[parse_poly("x1 + x1").unwrap()], 1);
        assert_eq!(
            dbl.equations,
            vec![AtomicEq::Copy { a: 2, b: 1 }, AtomicEq::Sum { a: 1, b: 2, c: 3 }, AtomicEq::Zero { a: 3 }]
        );
        let polys = vec![parse_poly("x1*x2 + x3^2 - 2").unwrap()];
        let prog = decompose(&polys, 3);
        assert!(prog.validate().is_ok());
        assert!(equivalence_check(&polys, &prog));
        let text = prog.to_string();
        assert!(text.starts_with("x4 = x1 * x2\n"), "{text}");
        assert!(text.trim_end().ends_with(&format!("zero x{}", prog.m)));
    }

    #[test]
    fn hand_written_program_is_equivalent() {
        use AtomicEq::*;
        // x4 = x1x2, x5 = x3, x6 = x3x5, x7 = x4+x6, x8 = 1, x9 = 1, x10 = x8+x9, x11 = -x10, x12 = x7+x11
        let prog = SLProgram {
            n: 3,
            m: 12,
            equations: vec![
                Prod { a: 1, b: 2, c: 4 },
                Copy { a: 5, b: 3 },
                Prod { a: 3, b: 5, c: 6 },
                Sum { a: 4, b: 6, c: 7 },
                Copy { a: 8, b: 0 },
                Copy { a: 9, b: 0 },
                Sum { a: 8, b: 9, c: 10 },
                Neg { a: 11, b: 10 },
                Sum { a: 7, b: 11, c: 12 },
                Zero { a: 12 },
            ],
            notes: vec![String::new(); 10],
        };
        let polys = vec![parse_poly("x1*x2 + x3^2 - 2").unwrap()];
        assert!(equivalence_check(&polys, &prog));
        let mut dropped = prog.clone();
        dropped.equations.pop();
        assert!(!equivalence_check(&polys, &dropped));
    }

    #[test]
    fn eval_examples() {
        let f7 = make_field(7, 1).unwrap();
        let prog = decompose(&[parse_poly("x1^2 - 2").unwrap()], 1);
        let (vals, res) = eval_program(&prog, &f7, &[f7.from_i64(3)]);
        assert!(res.iter().all(Scalar::is_zero));
        assert!(vals.contains(&f7.from_i64(2)));
        let (_, res) = eval_program(&prog, &f7, &[f7.one()]);
        assert_eq!(res, vec![f7.from_i64(-1)]);
        let empty = SLProgram { n: 0, m: 0, equations: vec![], notes: vec![] };
        assert!(eval_program(&empty, &f7, &[]).1.is_empty());
    }

    #[test]
    fn witness_examples() {
        let f7 = make_field(7, 1).unwrap();
        let w = find_witness(&[parse_poly("x1^2 - 2").unwrap()], &f7, DEFAULT_BUDGET).unwrap();
        assert_eq!(w, Some(vec![f7.from_i64(3)]));
        assert_eq!(find_witness(&[parse_poly("x1^2 - 3").unwrap()], &f7, DEFAULT_BUDGET).unwrap(), None);
        let f4 = make_field(2, 2).unwrap();
        let w = find_witness(&[parse_poly("x1^2 + x1 + 1").unwrap()], &f4, DEFAULT_BUDGET).unwrap();
        assert_eq!(w, Some(vec![f4.generator()]));
        assert!(matches!(
            find_witness(&[parse_poly("x1*x2*x3*x4*x5*x6*x7*x8").unwrap()], &f7, 1000),
            Err(SlpError::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn witness_strings() {
        let q = FieldSpec::rationals();
        let w = parse_witness("x1=2, x2=1/2", &q, 2).unwrap();
        assert_eq!(w[1], q.from_i64(1) / q.from_i64(2));
        assert!(parse_witness("x1=2", &q, 2).is_err());
        assert!(parse_witness("x3=2", &q, 2).is_err());
    }
}
