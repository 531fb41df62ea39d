//! Points and lines of the projective plane over a [`FieldSpec`], with framed
//! coordinates on horizontal lines.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::field::{FieldSpec, Scalar};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ProjError {
    #[error("coincident points have no join")]
    CoincidentPoints,
    #[error("coincident lines have no meet")]
    CoincidentLines,
    #[error("all three homogeneous coordinates are zero")]
    AllZero,
    #[error("cross-ratio of a degenerate tuple")]
    DegenerateTuple,
    #[error("point is not on the framed line")]
    PointNotOnLine,
    #[error("invalid framing: {0}")]
    InvalidFraming(&'static str),
}

fn normalize(mut c: [Scalar; 3]) -> Result<[Scalar; 3], ProjError> {
    let i = c.iter().position(|x| !x.is_zero()).ok_or(ProjError::AllZero)?;
    if !c[i].is_one() {
        let inv = c[i].inv().unwrap();
        for x in c.iter_mut().skip(i) {
            *x = &*x * &inv;
        }
    }
    Ok(c)
}

fn cross(u: &[Scalar; 3], v: &[Scalar; 3]) -> [Scalar; 3] {
    [
        &(&u[1] * &v[2]) - &(&u[2] * &v[1]),
        &(&u[2] * &v[0]) - &(&u[0] * &v[2]),
        &(&u[0] * &v[1]) - &(&u[1] * &v[0]),
    ]
}

/// A point [x, y, z], scaled so that its first nonzero coordinate is 1.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PPoint([Scalar; 3]);

/// A line ax + by + cz = 0, normalized like [`PPoint`].
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PLine([Scalar; 3]);

impl PPoint {
    pub fn new(x: Scalar, y: Scalar, z: Scalar) -> Result<Self, ProjError> {
        normalize([x, y, z]).map(PPoint)
    }

    /// The affine point (x, y) = [x, y, 1].
    pub fn affine(x: Scalar, y: Scalar) -> Self {
        let one = x.spec().one();
        PPoint::new(x, y, one).unwrap()
    }

    pub fn from_ints(spec: &FieldSpec, c: [i64; 3]) -> Result<Self, ProjError> {
        PPoint::new(spec.from_i64(c[0]), spec.from_i64(c[1]), spec.from_i64(c[2]))
    }

    pub fn coords(&self) -> &[Scalar; 3] {
        &self.0
    }

    pub fn spec(&self) -> &FieldSpec {
        self.0[0].spec()
    }

    pub fn is_at_infinity(&self) -> bool {
        self.0[2].is_zero()
    }

    /// (x/z, y/z) for affine points.
    pub fn to_affine(&self) -> Option<(Scalar, Scalar)> {
        let zi = self.0[2].inv()?;
        Some((&self.0[0] * &zi, &self.0[1] * &zi))
    }
}

impl PLine {
    pub fn new(a: Scalar, b: Scalar, c: Scalar) -> Result<Self, ProjError> {
        normalize([a, b, c]).map(PLine)
    }

    /// The horizontal line y = c.
    pub fn horizontal(c: &Scalar) -> Self {
        let spec = c.spec();
        PLine::new(spec.zero(), spec.one(), -c).unwrap()
    }

    pub fn from_ints(spec: &FieldSpec, c: [i64; 3]) -> Result<Self, ProjError> {
        PLine::new(spec.from_i64(c[0]), spec.from_i64(c[1]), spec.from_i64(c[2]))
    }

    pub fn coeffs(&self) -> &[Scalar; 3] {
        &self.0
    }

    pub fn spec(&self) -> &FieldSpec {
        self.0[0].spec()
    }

    /// True iff the line passes through p3 = [1, 0, 0].
    pub fn is_horizontal(&self) -> bool {
        self.0[0].is_zero()
    }

    /// −c/b for horizontal affine lines.
    pub fn y_intercept(&self) -> Option<Scalar> {
        if !self.is_horizontal() || self.0[1].is_zero() {
            return None;
        }
        // normalized, so b = 1
        Some(-&self.0[2])
    }
}

fn fmt_triple(f: &mut fmt::Formatter<'_>, c: &[Scalar; 3]) -> fmt::Result {
    write!(f, "[{}, {}, {}]", c[0], c[1], c[2])
}

impl fmt::Debug for PPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_triple(f, &self.0)
    }
}

impl fmt::Display for PPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_triple(f, &self.0)
    }
}

impl fmt::Debug for PLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_triple(f, &self.0)
    }
}

impl fmt::Display for PLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_triple(f, &self.0)
    }
}

pub fn join(p: &PPoint, q: &PPoint) -> Result<PLine, ProjError> {
    normalize(cross(&p.0, &q.0)).map(PLine).map_err(|_| ProjError::CoincidentPoints)
}

pub fn meet(l: &PLine, m: &PLine) -> Result<PPoint, ProjError> {
    normalize(cross(&l.0, &m.0)).map(PPoint).map_err(|_| ProjError::CoincidentLines)
}

/// Lines prepared for many pairwise meets. Rational lines are scaled to
/// primitive integer vectors so the cross product avoids fraction arithmetic.
pub struct Pencil<'a> {
    lines: Vec<&'a PLine>,
    ints: Option<Vec<[BigInt; 3]>>,
}

impl<'a> Pencil<'a> {
    pub fn new(lines: Vec<&'a PLine>) -> Self {
        let rational = lines.first().is_some_and(|l| l.0[0].spec().is_rational());
        let ints = rational.then(|| lines.iter().map(|l| integer_vector(&l.0)).collect());
        Pencil { lines, ints }
    }

    pub fn meet(&self, i: usize, j: usize) -> Result<PPoint, ProjError> {
        let Some(ints) = &self.ints else {
            return meet(self.lines[i], self.lines[j]);
        };
        let (u, v) = (&ints[i], &ints[j]);
        let c = [&u[1] * &v[2] - &u[2] * &v[1], &u[2] * &v[0] - &u[0] * &v[2], &u[0] * &v[1] - &u[1] * &v[0]];
        let k = c.iter().position(|x| !x.is_zero()).ok_or(ProjError::CoincidentLines)?;
        let spec = self.lines[i].0[0].spec();
        let coords = std::array::from_fn(|t| {
            if t < k {
                spec.zero()
            } else if t == k {
                spec.one()
            } else {
                spec.rational(BigRational::new(c[t].clone(), c[k].clone()))
            }
        });
        Ok(PPoint(coords))
    }
}

fn integer_vector(c: &[Scalar; 3]) -> [BigInt; 3] {
    let qs: Vec<&BigRational> = c.iter().map(|x| x.as_rational().unwrap()).collect();
    let den = qs.iter().fold(BigInt::one(), |acc, q| acc.lcm(q.denom()));
    std::array::from_fn(|t| qs[t].numer() * (&den / qs[t].denom()))
}

pub fn incident(p: &PPoint, l: &PLine) -> bool {
    let mut acc = None::<Scalar>;
    for (x, a) in p.0.iter().zip(l.0.iter()) {
        if x.is_zero() || a.is_zero() {
            continue;
        }
        let t = x * a;
        acc = Some(match acc {
            None => t,
            Some(s) => &s + &t,
        });
    }
    acc.is_none_or(|s| s.is_zero())
}

/// A value on the projective line.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Ext {
    Finite(Scalar),
    Infinity,
}

impl Ext {
    pub fn finite(&self) -> Option<&Scalar> {
        match self {
            Ext::Finite(s) => Some(s),
            Ext::Infinity => None,
        }
    }
}

impl From<Scalar> for Ext {
    fn from(s: Scalar) -> Self {
        Ext::Finite(s)
    }
}

impl fmt::Display for Ext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ext::Finite(s) => write!(f, "{s}"),
            Ext::Infinity => write!(f, "inf"),
        }
    }
}

/// ((z1−z3)(z2−z4)) / ((z1−z4)(z2−z3)); factors containing ∞ cancel.
pub fn cross_ratio(z1: &Ext, z2: &Ext, z3: &Ext, z4: &Ext) -> Result<Ext, ProjError> {
    let zs = [z1, z2, z3, z4];
    let mut distinct: Vec<&Ext> = Vec::new();
    for z in zs {
        if !distinct.contains(&z) {
            distinct.push(z);
        }
    }
    if distinct.len() < 3 {
        return Err(ProjError::DegenerateTuple);
    }
    let diff = |a: &Ext, b: &Ext| -> Option<Scalar> {
        match (a, b) {
            (Ext::Finite(x), Ext::Finite(y)) => Some(x - y),
            _ => None,
        }
    };
    let spec = zs.iter().find_map(|z| z.finite()).unwrap().spec().clone();
    let factor = |f: Option<Scalar>| f.unwrap_or_else(|| spec.one());
    let num = &factor(diff(z1, z3)) * &factor(diff(z2, z4));
    let den = &factor(diff(z1, z4)) * &factor(diff(z2, z3));
    match (num.is_zero(), den.is_zero()) {
        (_, false) => Ok(Ext::Finite(&num / &den)),
        (false, true) => Ok(Ext::Infinity),
        (true, true) => Err(ProjError::DegenerateTuple),
    }
}

/// Chart on a horizontal line sending p3 to ∞ and two marked points to labels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Framing {
    line: PLine,
    s1: Scalar,
    p1: PPoint,
    s2: Scalar,
    p2: PPoint,
    // cached affine x-positions of p1 and p2
    u1: Scalar,
    u2: Scalar,
}

fn p3(spec: &FieldSpec) -> PPoint {
    PPoint::new(spec.one(), spec.zero(), spec.zero()).unwrap()
}

/// Affine x-position of a point on a horizontal affine line.
pub fn x_position(p: &PPoint) -> Option<Scalar> {
    p.to_affine().map(|(x, _)| x)
}

impl Framing {
    pub fn new(line: PLine, s1: Scalar, p1: PPoint, s2: Scalar, p2: PPoint) -> Result<Self, ProjError> {
        if line.y_intercept().is_none() {
            return Err(ProjError::InvalidFraming("line is not a horizontal affine line"));
        }
        if s1 == s2 {
            return Err(ProjError::InvalidFraming("labels coincide"));
        }
        if p1 == p2 {
            return Err(ProjError::InvalidFraming("framing points coincide"));
        }
        if !incident(&p1, &line) || !incident(&p2, &line) {
            return Err(ProjError::PointNotOnLine);
        }
        let inf = p3(line.spec());
        if p1 == inf || p2 == inf {
            return Err(ProjError::InvalidFraming("framing point at p3"));
        }
        let u1 = x_position(&p1).unwrap();
        let u2 = x_position(&p2).unwrap();
        Ok(Framing { line, s1, p1, s2, p2, u1, u2 })
    }

    pub fn line(&self) -> &PLine {
        &self.line
    }

    pub fn labels(&self) -> (&Scalar, &Scalar) {
        (&self.s1, &self.s2)
    }

    pub fn points(&self) -> (&PPoint, &PPoint) {
        (&self.p1, &self.p2)
    }
}

pub fn framed_coordinate(f: &Framing, v: &PPoint) -> Result<Ext, ProjError> {
    if !incident(v, &f.line) {
        return Err(ProjError::PointNotOnLine);
    }
    let Some(u) = x_position(v) else {
        return Ok(Ext::Infinity);
    };
    let t = &(&u - &f.u1) / &(&f.u2 - &f.u1);
    Ok(Ext::Finite(&f.s1 + &(&(&f.s2 - &f.s1) * &t)))
}

pub fn point_at_coordinate(f: &Framing, value: &Scalar) -> PPoint {
    let t = &(value - &f.s1) / &(&f.s2 - &f.s1);
    let u = &f.u1 + &(&(&f.u2 - &f.u1) * &t);
    PPoint::affine(u, f.line.y_intercept().unwrap())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::make_field;

    fn q() -> FieldSpec {
        FieldSpec::rationals()
    }

    #[test]
    fn join_examples() {
        let f = q();
        let p1 = PPoint::from_ints(&f, [0, 0, 1]).unwrap();
        let p3 = PPoint::from_ints(&f, [1, 0, 0]).unwrap();
        let p4 = PPoint::from_ints(&f, [1, 1, 1]).unwrap();
        assert_eq!(join(&p1, &p3).unwrap(), PLine::from_ints(&f, [0, 1, 0]).unwrap());
        assert_eq!(join(&p3, &p1).unwrap(), join(&p1, &p3).unwrap());
        assert_eq!(join(&p1, &p4).unwrap(), PLine::from_ints(&f, [1, -1, 0]).unwrap());
        assert_eq!(join(&p1, &p1), Err(ProjError::CoincidentPoints));
    }

    #[test]
    fn meet_examples() {
        let f = q();
        let xaxis = PLine::from_ints(&f, [0, 1, 0]).unwrap();
        let x_eq_z = PLine::from_ints(&f, [1, 0, -1]).unwrap();
        assert_eq!(meet(&xaxis, &x_eq_z).unwrap(), PPoint::from_ints(&f, [1, 0, 1]).unwrap());
        let h1 = PLine::horizontal(&f.from_i64(3));
        let h2 = PLine::horizontal(&f.from_i64(-7));
        assert_eq!(meet(&h1, &h2).unwrap(), PPoint::from_ints(&f, [1, 0, 0]).unwrap());
        assert_eq!(meet(&h1, &h1), Err(ProjError::CoincidentLines));
    }

    #[test]
    fn incidence_examples() {
        let f = q();
        assert!(incident(&PPoint::from_ints(&f, [1, 1, 1]).unwrap(), &PLine::from_ints(&f, [1, -1, 0]).unwrap()));
        assert!(!incident(&PPoint::from_ints(&f, [0, 0, 1]).unwrap(), &PLine::from_ints(&f, [0, 0, 1]).unwrap()));
        assert!(incident(&PPoint::from_ints(&f, [1, 0, 0]).unwrap(), &PLine::horizontal(&f.from_i64(11))));
    }

    #[test]
    fn cross_ratio_examples() {
        let f = q();
        let e = |v: i64| Ext::Finite(f.from_i64(v));
        let lambda = e(17);
        assert_eq!(cross_ratio(&lambda, &e(1), &e(0), &Ext::Infinity).unwrap(), lambda);
        let (a, b) = (f.from_i64(4), f.from_i64(9));
        let m = &(&a + &b) / &f.from_i64(2);
        assert_eq!(
            cross_ratio(&Ext::Finite(a), &Ext::Finite(b), &Ext::Finite(m), &Ext::Infinity).unwrap(),
            e(-1)
        );
        assert_eq!(cross_ratio(&e(2), &e(3), &e(2), &Ext::Infinity).unwrap(), e(0));
        assert_eq!(cross_ratio(&e(2), &e(2), &e(2), &Ext::Infinity), Err(ProjError::DegenerateTuple));
    }

    #[test]
    fn framed_coordinate_examples() {
        let f = q();
        let xaxis = PLine::from_ints(&f, [0, 1, 0]).unwrap();
        let fr = Framing::new(
            xaxis.clone(),
            f.zero(),
            PPoint::affine(f.zero(), f.zero()),
            f.one(),
            PPoint::affine(f.one(), f.zero()),
        )
        .unwrap();
        let v = PPoint::affine(f.from_i64(13), f.zero());
        assert_eq!(framed_coordinate(&fr, &v).unwrap(), Ext::Finite(f.from_i64(13)));
        assert_eq!(point_at_coordinate(&fr, &f.from_i64(13)), v);
        let p3 = PPoint::from_ints(&f, [1, 0, 0]).unwrap();
        assert_eq!(framed_coordinate(&fr, &p3).unwrap(), Ext::Infinity);
        let off = PPoint::affine(f.one(), f.one());
        assert_eq!(framed_coordinate(&fr, &off), Err(ProjError::PointNotOnLine));

        let f7 = make_field(7, 1).unwrap();
        let five = f7.from_i64(5);
        let fr = Framing::new(
            PLine::horizontal(&five),
            f7.zero(),
            PPoint::affine(f7.from_i64(2), five.clone()),
            f7.one(),
            PPoint::affine(f7.from_i64(4), five.clone()),
        )
        .unwrap();
        let v = PPoint::affine(f7.from_i64(6), five.clone());
        assert_eq!(framed_coordinate(&fr, &v).unwrap(), Ext::Finite(f7.from_i64(2)));
        assert_eq!(point_at_coordinate(&fr, &f7.from_i64(2)), v);

        let c = f.from_i64(3);
        let (u, w) = (f.from_i64(-4), f.from_i64(10));
        let fr = Framing::new(
            PLine::horizontal(&c),
            f.from_i64(-1),
            PPoint::affine(u.clone(), c.clone()),
            f.one(),
            PPoint::affine(w.clone(), c.clone()),
        )
        .unwrap();
        let mid = PPoint::affine(&(&u + &w) / &f.from_i64(2), c);
        assert_eq!(framed_coordinate(&fr, &mid).unwrap(), Ext::Finite(f.zero()));
    }
}
