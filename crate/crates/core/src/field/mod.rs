//! Exact arithmetic over the rationals and over finite fields F_{p^k}.

mod fp;
mod roots;
mod sample;

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde_json::Value;
use smallvec::SmallVec;

pub use roots::{embed, find_quadratic_root, roots_of, Embedding};
pub use sample::{sample_general, Sampler};

/// Largest supported characteristic.
pub const MAX_CHARACTERISTIC: u64 = (1 << 31) - 1;
/// Largest supported extension degree.
pub const MAX_DEGREE: usize = 64;
/// Field orders are kept below 2^62 so that q and q-1 fit comfortably in machine words.
pub const MAX_ORDER_BITS: u32 = 62;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FieldError {
    #[error("{0} is not a prime")]
    NotPrime(u64),
    #[error("degree {degree} is out of range for characteristic {characteristic}")]
    DegreeOutOfRange { characteristic: u64, degree: usize },
    #[error("characteristic {0} exceeds the supported bound")]
    CharacteristicOutOfRange(u64),
    #[error("no embedding of a degree {from} field into a degree {to} field")]
    NoEmbedding { from: usize, to: usize },
    #[error("characteristic mismatch: {0} vs {1}")]
    CharacteristicMismatch(u64, u64),
    #[error("field with {order} elements cannot avoid {forbidden} forbidden values")]
    FieldTooSmall { order: u128, forbidden: usize },
    #[error("malformed scalar: {0}")]
    Malformed(String),
}

pub(crate) type Coeffs = SmallVec<[u32; 12]>;

struct Inner {
    p: u64,
    k: usize,
    modulus: Option<Vec<u64>>,
    // reduction[h][i]: coefficient of t^i in t^(k+h) mod modulus
    reduction: Vec<Vec<u64>>,
    // products of two coefficients fit in 32 bits, so sums can be delayed
    narrow: bool,
}

/// A concrete field: the rationals, or F_{p^k} with an explicit modulus.
#[derive(Clone)]
pub struct FieldSpec(Arc<Inner>);

impl PartialEq for FieldSpec {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
            || (self.0.p == other.0.p && self.0.k == other.0.k && self.0.modulus == other.0.modulus)
    }
}
impl Eq for FieldSpec {}

impl fmt::Debug for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.0.p, self.0.k) {
            (0, _) => write!(f, "Q"),
            (p, 1) => write!(f, "F_{p}"),
            (p, k) => write!(f, "F_{p}^{k}"),
        }
    }
}

/// Build the field for characteristic `p` (0 for the rationals) and degree `k`.
pub fn make_field(p: u64, k: usize) -> Result<FieldSpec, FieldError> {
    if p == 0 {
        if k != 1 {
            return Err(FieldError::DegreeOutOfRange { characteristic: 0, degree: k });
        }
        return Ok(FieldSpec::rationals());
    }
    if !fp::is_prime(p) {
        return Err(FieldError::NotPrime(p));
    }
    if p > MAX_CHARACTERISTIC {
        return Err(FieldError::CharacteristicOutOfRange(p));
    }
    if k == 0 || k > MAX_DEGREE || (k as f64) * (p as f64).log2() >= MAX_ORDER_BITS as f64 {
        return Err(FieldError::DegreeOutOfRange { characteristic: p, degree: k });
    }
    let modulus = (k >= 2).then(|| fp::smallest_irreducible(p, k));
    Ok(FieldSpec::from_parts(p, k, modulus))
}

impl FieldSpec {
    pub fn rationals() -> Self {
        FieldSpec(Arc::new(Inner { p: 0, k: 1, modulus: None, reduction: Vec::new(), narrow: false }))
    }

    fn from_parts(p: u64, k: usize, modulus: Option<Vec<u64>>) -> Self {
        let mut reduction = Vec::new();
        if let Some(m) = &modulus {
            // t^k = -(m_0 + ... + m_{k-1} t^{k-1})
            let mut cur: Vec<u64> = m[..k].iter().map(|&c| (p - c) % p).collect();
            for _ in 0..k.saturating_sub(1) {
                reduction.push(cur.clone());
                // multiply by t
                let top = cur[k - 1];
                let mut next = vec![0u64; k];
                next[1..k].copy_from_slice(&cur[..(k - 1)]);
                for i in 0..k {
                    next[i] = (next[i] + fp::mul_mod(top, (p - m[i]) % p, p)) % p;
                }
                cur = next;
            }
        }
        FieldSpec(Arc::new(Inner { p, k, modulus, reduction, narrow: p < (1 << 16) }))
    }

    /// Rebuild a field from an explicit modulus, as read from a file.
    pub fn with_modulus(p: u64, modulus: Vec<u64>) -> Result<Self, FieldError> {
        if !fp::is_prime(p) {
            return Err(FieldError::NotPrime(p));
        }
        if p > MAX_CHARACTERISTIC {
            return Err(FieldError::CharacteristicOutOfRange(p));
        }
        let k = modulus.len().saturating_sub(1);
        if !(2..=MAX_DEGREE).contains(&k) || modulus[k] != 1 || modulus.iter().any(|&c| c >= p) {
            return Err(FieldError::Malformed(format!("modulus {modulus:?}")));
        }
        if !fp::is_irreducible(&modulus, p) {
            return Err(FieldError::Malformed(format!("modulus {modulus:?} is reducible")));
        }
        Ok(FieldSpec::from_parts(p, k, Some(modulus)))
    }

    pub fn characteristic(&self) -> u64 {
        self.0.p
    }

    pub fn degree(&self) -> usize {
        self.0.k
    }

    pub fn modulus(&self) -> Option<&[u64]> {
        self.0.modulus.as_deref()
    }

    pub fn is_rational(&self) -> bool {
        self.0.p == 0
    }

    /// Number of elements, or `None` for the rationals.
    pub fn order(&self) -> Option<u128> {
        (self.0.p != 0).then(|| (self.0.p as u128).pow(self.0.k as u32))
    }

    pub fn zero(&self) -> Scalar {
        self.from_i64(0)
    }

    pub fn one(&self) -> Scalar {
        self.from_i64(1)
    }

    pub fn from_i64(&self, v: i64) -> Scalar {
        if self.is_rational() {
            return self.rational(BigRational::from_integer(BigInt::from(v)));
        }
        let c = v.rem_euclid(self.0.p as i64) as u32;
        let mut coeffs: Coeffs = SmallVec::from_elem(0, self.0.k);
        coeffs[0] = c;
        self.wrap(Repr::F(coeffs))
    }

    pub fn from_bigint(&self, v: &BigInt) -> Scalar {
        if self.is_rational() {
            return self.rational(BigRational::from_integer(v.clone()));
        }
        let p = BigInt::from(self.0.p);
        let r = ((v % &p) + &p) % &p;
        self.from_i64(r.to_i64().unwrap())
    }

    /// Exact fraction; in characteristic p the denominator is inverted.
    pub fn from_fraction(&self, num: &BigInt, den: &BigInt) -> Option<Scalar> {
        if den.is_zero() {
            return None;
        }
        if self.is_rational() {
            return Some(self.rational(BigRational::new(num.clone(), den.clone())));
        }
        self.from_bigint(num).checked_div(&self.from_bigint(den))
    }

    pub fn rational(&self, q: BigRational) -> Scalar {
        assert!(self.is_rational(), "rational value in a finite field");
        self.wrap(Repr::Q(q))
    }

    /// Element with the given coefficients (constant term first), reduced mod p.
    pub fn from_coeffs(&self, coeffs: &[u64]) -> Result<Scalar, FieldError> {
        if self.is_rational() || coeffs.len() > self.0.k {
            return Err(FieldError::Malformed(format!("{coeffs:?} for {self}")));
        }
        let mut c: Coeffs = SmallVec::from_elem(0, self.0.k);
        for (i, &v) in coeffs.iter().enumerate() {
            c[i] = (v % self.0.p) as u32;
        }
        Ok(self.wrap(Repr::F(c)))
    }

    /// The class of t, a generator of F_{p^k} over F_p.
    pub fn generator(&self) -> Scalar {
        if self.0.k == 1 {
            return self.zero();
        }
        self.from_coeffs(&[0, 1]).unwrap()
    }

    /// Element number `index` in the canonical order (finite fields only).
    pub fn element(&self, mut index: u128) -> Scalar {
        let p = self.0.p as u128;
        let k = self.0.k;
        let mut c: Coeffs = SmallVec::from_elem(0, k);
        for i in (0..k).rev() {
            c[i] = (index % p) as u32;
            index /= p;
        }
        self.wrap(Repr::F(c))
    }

    /// All elements in canonical order; finite fields only.
    pub fn elements(&self) -> impl Iterator<Item = Scalar> + '_ {
        let n = self.order().expect("enumerating the rationals");
        (0..n).map(move |i| self.element(i))
    }

    fn wrap(&self, value: Repr) -> Scalar {
        Scalar { spec: self.clone(), value }
    }

    /// JSON form: {"characteristic","degree","modulus"}.
    pub fn to_json(&self) -> Value {
        let mut map = serde_json::Map::new();
        map.insert("characteristic".into(), self.0.p.into());
        map.insert("degree".into(), (self.0.k as u64).into());
        map.insert(
            "modulus".into(),
            match &self.0.modulus {
                Some(m) => Value::Array(m.iter().map(|&c| c.into()).collect()),
                None => Value::Null,
            },
        );
        Value::Object(map)
    }

    pub fn from_json(v: &Value) -> Result<Self, FieldError> {
        let bad = || FieldError::Malformed(format!("field spec {v}"));
        let p = v.get("characteristic").and_then(Value::as_u64).ok_or_else(bad)?;
        let k = v.get("degree").and_then(Value::as_u64).ok_or_else(bad)? as usize;
        match v.get("modulus") {
            Some(Value::Array(items)) => {
                let m = items.iter().map(|c| c.as_u64().ok_or_else(bad)).collect::<Result<Vec<_>, _>>()?;
                if m.len() != k + 1 {
                    return Err(bad());
                }
                FieldSpec::with_modulus(p, m)
            }
            None | Some(Value::Null) => {
                if k != 1 {
                    return Err(bad());
                }
                make_field(p, 1)
            }
            _ => Err(bad()),
        }
    }

    /// Parse a scalar from its JSON form.
    pub fn scalar_from_json(&self, v: &Value) -> Result<Scalar, FieldError> {
        let bad = || FieldError::Malformed(format!("scalar {v} for {self}"));
        match v {
            Value::String(s) if self.is_rational() => self.parse_scalar(s).ok_or_else(bad),
            Value::Array(items) if !self.is_rational() => {
                if items.len() != self.0.k {
                    return Err(bad());
                }
                let c = items.iter().map(|c| c.as_u64().filter(|&x| x < self.0.p).ok_or_else(bad)).collect::<Result<Vec<_>, _>>()?;
                self.from_coeffs(&c)
            }
            _ => Err(bad()),
        }
    }

    /// Parse a human-written value: an integer, a fraction `a/b`, or in
    /// extension fields a polynomial in `t` such as `2t+1` or `t^2+t`.
    pub fn parse_scalar(&self, text: &str) -> Option<Scalar> {
        let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
        if s.is_empty() {
            return None;
        }
        if let Some((n, d)) = s.split_once('/') {
            let n: BigInt = n.parse().ok()?;
            let d: BigInt = d.parse().ok()?;
            return self.from_fraction(&n, &d);
        }
        if let Ok(n) = s.parse::<BigInt>() {
            return Some(self.from_bigint(&n));
        }
        if self.is_rational() {
            return None;
        }
        // polynomial in t
        let mut acc = self.zero();
        let t = self.generator();
        let mut rest = s.as_str();
        while !rest.is_empty() {
            let (sign, body) = match rest.as_bytes()[0] {
                b'-' => (-1i64, &rest[1..]),
                b'+' => (1, &rest[1..]),
                _ => (1, rest),
            };
            let end = body.find(['+', '-']).unwrap_or(body.len());
            let term = &body[..end];
            rest = &body[end..];
            let (coef, power) = match term.find('t') {
                None => (term.parse::<BigInt>().ok()?, 0u32),
                Some(pos) => {
                    let c = term[..pos].trim_end_matches('*');
                    let c = if c.is_empty() { BigInt::one() } else { c.parse().ok()? };
                    let e = &term[pos + 1..];
                    let e = if e.is_empty() { 1 } else { e.strip_prefix('^')?.parse().ok()? };
                    (c, e)
                }
            };
            let term_val = &self.from_bigint(&coef) * &t.pow(power as u128);
            acc = if sign < 0 { &acc - &term_val } else { &acc + &term_val };
        }
        Some(acc)
    }

    fn mul_coeffs(&self, a: &[u32], b: &[u32]) -> Coeffs {
        let inner = &*self.0;
        let p = inner.p;
        let k = inner.k;
        if k == 1 {
            return SmallVec::from_elem(((a[0] as u64 * b[0] as u64) % p) as u32, 1);
        }
        let mut prod = [0u64; 2 * MAX_DEGREE];
        if inner.narrow {
            for (i, &x) in a.iter().enumerate() {
                if x == 0 {
                    continue;
                }
                let x = x as u64;
                for (j, &y) in b.iter().enumerate() {
                    prod[i + j] += x * y as u64;
                }
            }
            for v in prod[..2 * k - 1].iter_mut() {
                *v %= p;
            }
        } else {
            for (i, &x) in a.iter().enumerate() {
                if x == 0 {
                    continue;
                }
                for (j, &y) in b.iter().enumerate() {
                    prod[i + j] = (prod[i + j] + (x as u64 * y as u64) % p) % p;
                }
            }
        }
        let mut out: Coeffs = SmallVec::from_elem(0, k);
        for i in 0..k {
            let mut acc = prod[i];
            for h in 0..k - 1 {
                let hi = prod[k + h];
                if hi == 0 {
                    continue;
                }
                let t = hi * inner.reduction[h][i];
                if inner.narrow {
                    acc += t;
                } else {
                    acc = (acc + t % p) % p;
                }
            }
            out[i] = (acc % p) as u32;
        }
        out
    }
}

#[derive(Clone, PartialEq, Eq)]
enum Repr {
    Q(BigRational),
    F(Coeffs),
}

// Ratio's own Hash expands a continued fraction; ours are always reduced.
impl Hash for Repr {
    fn hash<H: Hasher>(&self, state: &mut H) {
        match self {
            Repr::Q(q) => {
                q.numer().hash(state);
                q.denom().hash(state);
            }
            Repr::F(c) => c.hash(state),
        }
    }
}

/// An exact element of a [`FieldSpec`].
#[derive(Clone)]
pub struct Scalar {
    spec: FieldSpec,
    value: Repr,
}

impl PartialEq for Scalar {
    fn eq(&self, other: &Self) -> bool {
        self.value == other.value
    }
}
impl Eq for Scalar {}

impl Hash for Scalar {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.value.hash(state)
    }
}

impl PartialOrd for Scalar {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Numeric order on the rationals; lexicographic on coefficient vectors
/// (constant term first) in finite fields.
impl Ord for Scalar {
    fn cmp(&self, other: &Self) -> Ordering {
        match (&self.value, &other.value) {
            (Repr::Q(a), Repr::Q(b)) => a.cmp(b),
            (Repr::F(a), Repr::F(b)) => a.cmp(b),
            _ => panic!("comparing scalars of different fields"),
        }
    }
}

impl fmt::Debug for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.value {
            Repr::Q(q) if q.is_integer() => write!(f, "{}", q.numer()),
            Repr::Q(q) => write!(f, "{}/{}", q.numer(), q.denom()),
            Repr::F(c) if c.len() == 1 => write!(f, "{}", c[0]),
            Repr::F(c) => {
                let mut first = true;
                for (i, &v) in c.iter().enumerate().rev() {
                    if v == 0 {
                        continue;
                    }
                    if !first {
                        write!(f, "+")?;
                    }
                    first = false;
                    match (i, v) {
                        (0, _) => write!(f, "{v}")?,
                        (1, 1) => write!(f, "t")?,
                        (1, _) => write!(f, "{v}t")?,
                        (_, 1) => write!(f, "t^{i}")?,
                        _ => write!(f, "{v}t^{i}")?,
                    }
                }
                if first {
                    write!(f, "0")?;
                }
                Ok(())
            }
        }
    }
}

impl Scalar {
    pub fn spec(&self) -> &FieldSpec {
        &self.spec
    }

    pub fn is_zero(&self) -> bool {
        match &self.value {
            Repr::Q(q) => q.is_zero(),
            Repr::F(c) => c.iter().all(|&x| x == 0),
        }
    }

    pub fn is_one(&self) -> bool {
        match &self.value {
            Repr::Q(q) => q.is_one(),
            Repr::F(c) => c[0] == 1 && c[1..].iter().all(|&x| x == 0),
        }
    }

    /// The fraction, for scalars of the rationals.
    pub fn as_rational(&self) -> Option<&BigRational> {
        match &self.value {
            Repr::Q(q) => Some(q),
            Repr::F(_) => None,
        }
    }

    /// Coefficients over F_p, constant term first, for finite-field scalars.
    pub fn coeffs(&self) -> Option<&[u32]> {
        match &self.value {
            Repr::F(c) => Some(c),
            Repr::Q(_) => None,
        }
    }

    pub fn inv(&self) -> Option<Scalar> {
        if self.is_zero() {
            return None;
        }
        let value = match &self.value {
            Repr::Q(q) => Repr::Q(q.recip()),
            Repr::F(c) => {
                let inner = &*self.spec.0;
                let p = inner.p;
                if inner.k == 1 {
                    Repr::F(SmallVec::from_elem(fp::inv_mod(c[0] as u64, p)? as u32, 1))
                } else {
                    let a: Vec<u64> = c.iter().map(|&x| x as u64).collect();
                    let inv = fp::inv_poly(&a, inner.modulus.as_ref().unwrap(), p)?;
                    let mut out: Coeffs = SmallVec::from_elem(0, inner.k);
                    for (i, v) in inv.into_iter().enumerate() {
                        out[i] = v as u32;
                    }
                    Repr::F(out)
                }
            }
        };
        Some(self.spec.wrap(value))
    }

    pub fn checked_div(&self, rhs: &Scalar) -> Option<Scalar> {
        rhs.inv().map(|r| self * &r)
    }

    pub fn pow(&self, mut e: u128) -> Scalar {
        let mut acc = self.spec.one();
        let mut base = self.clone();
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    pub fn square(&self) -> Scalar {
        self * self
    }

    /// JSON form: "a/b" over the rationals, a coefficient array otherwise.
    pub fn to_json(&self) -> Value {
        match &self.value {
            Repr::Q(q) => Value::String(format!("{}/{}", q.numer(), q.denom())),
            Repr::F(c) => Value::Array(c.iter().map(|&x| Value::from(x)).collect()),
        }
    }

    /// Rough size used to keep coordinate growth in view; bits of numerator plus denominator.
    pub fn bit_size(&self) -> u64 {
        match &self.value {
            Repr::Q(q) => q.numer().bits() + q.denom().bits(),
            Repr::F(c) => c.len() as u64 * 32,
        }
    }

    /// Integer value when the scalar lies in the prime field (or is an integer in Q).
    pub fn to_i64(&self) -> Option<i64> {
        match &self.value {
            Repr::Q(q) if q.is_integer() => q.numer().to_i64(),
            Repr::Q(_) => None,
            Repr::F(c) => c[1..].iter().all(|&x| x == 0).then_some(c[0] as i64),
        }
    }
}

fn add_values(a: &Scalar, b: &Scalar) -> Repr {
    match (&a.value, &b.value) {
        (Repr::Q(x), Repr::Q(y)) => Repr::Q(x + y),
        (Repr::F(x), Repr::F(y)) => {
            let p = a.spec.0.p;
            Repr::F(x.iter().zip(y.iter()).map(|(&u, &v)| ((u as u64 + v as u64) % p) as u32).collect())
        }
        _ => panic!("mixing scalars of different fields"),
    }
}

fn sub_values(a: &Scalar, b: &Scalar) -> Repr {
    match (&a.value, &b.value) {
        (Repr::Q(x), Repr::Q(y)) => Repr::Q(x - y),
        (Repr::F(x), Repr::F(y)) => {
            let p = a.spec.0.p;
            Repr::F(x.iter().zip(y.iter()).map(|(&u, &v)| ((u as u64 + p - v as u64) % p) as u32).collect())
        }
        _ => panic!("mixing scalars of different fields"),
    }
}

fn mul_values(a: &Scalar, b: &Scalar) -> Repr {
    match (&a.value, &b.value) {
        (Repr::Q(x), Repr::Q(y)) => Repr::Q(x * y),
        (Repr::F(x), Repr::F(y)) => Repr::F(a.spec.mul_coeffs(x, y)),
        _ => panic!("mixing scalars of different fields"),
    }
}

impl<'a> Add<&'a Scalar> for &'a Scalar {
    type Output = Scalar;
    fn add(self, rhs: &Scalar) -> Scalar {
        self.spec.wrap(add_values(self, rhs))
    }
}

impl<'a> Sub<&'a Scalar> for &'a Scalar {
    type Output = Scalar;
    fn sub(self, rhs: &Scalar) -> Scalar {
        self.spec.wrap(sub_values(self, rhs))
    }
}

impl<'a> Mul<&'a Scalar> for &'a Scalar {
    type Output = Scalar;
    fn mul(self, rhs: &Scalar) -> Scalar {
        self.spec.wrap(mul_values(self, rhs))
    }
}

/// Panics on division by zero; use [`Scalar::checked_div`] when the divisor may vanish.
impl<'a> Div<&'a Scalar> for &'a Scalar {
    type Output = Scalar;
    fn div(self, rhs: &Scalar) -> Scalar {
        self.checked_div(rhs).expect("division by zero")
    }
}

impl Neg for &Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        match &self.value {
            Repr::Q(q) => self.spec.wrap(Repr::Q(-q)),
            Repr::F(c) => {
                let p = self.spec.0.p;
                self.spec.wrap(Repr::F(c.iter().map(|&x| ((p - x as u64) % p) as u32).collect()))
            }
        }
    }
}

macro_rules! owned_ops {
    ($($tr:ident $m:ident),*) => {$(
        impl $tr<Scalar> for Scalar {
            type Output = Scalar;
            fn $m(self, rhs: Scalar) -> Scalar { (&self).$m(&rhs) }
        }
        impl<'a> $tr<&'a Scalar> for Scalar {
            type Output = Scalar;
            fn $m(self, rhs: &Scalar) -> Scalar { (&self).$m(rhs) }
        }
        impl<'a> $tr<Scalar> for &'a Scalar {
            type Output = Scalar;
            fn $m(self, rhs: Scalar) -> Scalar { self.$m(&rhs) }
        }
    )*};
}
owned_ops!(Add add, Sub sub, Mul mul, Div div);

impl Neg for Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        -&self
    }
}
