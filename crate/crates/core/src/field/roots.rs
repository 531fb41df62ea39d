//! Polynomials over a field, root finding, and embeddings between extensions.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Signed;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{FieldError, FieldSpec, Scalar};

type Poly = Vec<Scalar>;

fn trim(p: &mut Poly) {
    while p.last().is_some_and(Scalar::is_zero) {
        p.pop();
    }
}

fn monic(mut p: Poly) -> Poly {
    trim(&mut p);
    if let Some(lead) = p.last().cloned() {
        let inv = lead.inv().unwrap();
        for c in &mut p {
            *c = &*c * &inv;
        }
    }
    p
}

fn poly_mul(a: &[Scalar], b: &[Scalar], spec: &FieldSpec) -> Poly {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![spec.zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            out[i + j] = &out[i + j] + &(x * y);
        }
    }
    trim(&mut out);
    out
}

fn poly_divrem(a: &[Scalar], m: &[Scalar], spec: &FieldSpec) -> (Poly, Poly) {
    let dm = m.len() - 1;
    let lead_inv = m[dm].inv().expect("nonzero divisor");
    let mut r = a.to_vec();
    trim(&mut r);
    let mut q = vec![spec.zero(); r.len().saturating_sub(dm).max(1)];
    while r.len() > dm {
        let dr = r.len() - 1;
        let f = &r[dr] * &lead_inv;
        let shift = dr - dm;
        for (i, c) in m.iter().enumerate() {
            r[shift + i] = &r[shift + i] - &(&f * c);
        }
        q[shift] = f;
        trim(&mut r);
    }
    trim(&mut q);
    (q, r)
}

fn poly_rem(a: &[Scalar], m: &[Scalar], spec: &FieldSpec) -> Poly {
    poly_divrem(a, m, spec).1
}

fn poly_sub(a: &[Scalar], b: &[Scalar], spec: &FieldSpec) -> Poly {
    let n = a.len().max(b.len());
    let mut out: Poly = (0..n)
        .map(|i| {
            let x = a.get(i).cloned().unwrap_or_else(|| spec.zero());
            let y = b.get(i).cloned().unwrap_or_else(|| spec.zero());
            &x - &y
        })
        .collect();
    trim(&mut out);
    out
}

fn poly_gcd(a: &[Scalar], b: &[Scalar], spec: &FieldSpec) -> Poly {
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    trim(&mut x);
    trim(&mut y);
    while !y.is_empty() {
        let r = poly_rem(&x, &y, spec);
        x = y;
        y = r;
    }
    monic(x)
}

fn poly_powmod(base: &[Scalar], mut e: u128, m: &[Scalar], spec: &FieldSpec) -> Poly {
    let mut acc = vec![spec.one()];
    let mut b = poly_rem(base, m, spec);
    while e > 0 {
        if e & 1 == 1 {
            acc = poly_rem(&poly_mul(&acc, &b, spec), m, spec);
        }
        e >>= 1;
        if e > 0 {
            b = poly_rem(&poly_mul(&b, &b, spec), m, spec);
        }
    }
    acc
}

/// Distinct roots in `spec` of the polynomial with coefficients `coeffs`
/// (constant term first), sorted in canonical order. Finite fields only.
pub fn roots_of(coeffs: &[Scalar], spec: &FieldSpec) -> Vec<Scalar> {
    let q = spec.order().expect("root finding needs a finite field");
    let f = monic(coeffs.to_vec());
    if f.len() <= 1 {
        return Vec::new();
    }
    let x = vec![spec.zero(), spec.one()];
    let xq = poly_powmod(&x, q, &f, spec);
    let g = poly_gcd(&f, &poly_sub(&xq, &x, spec), spec);
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut out = Vec::new();
    split(g, spec, q, &mut rng, &mut out);
    out.sort();
    out
}

// Equal-degree splitting of a product of distinct linear factors.
fn split(g: Poly, spec: &FieldSpec, q: u128, rng: &mut ChaCha8Rng, out: &mut Vec<Scalar>) {
    match g.len() {
        0 | 1 => return,
        2 => {
            out.push(-&g[0]);
            return;
        }
        _ => {}
    }
    let p = spec.characteristic();
    loop {
        let delta = super::sample::uniform(spec, rng);
        let h = if p == 2 {
            // absolute trace of delta*t, a polynomial whose values are 0 or 1
            let m = (128 - q.leading_zeros() - 1) as usize;
            let mut y = poly_rem(&[spec.zero(), delta], &g, spec);
            let mut tr = y.clone();
            for _ in 1..m {
                y = poly_rem(&poly_mul(&y, &y, spec), &g, spec);
                tr = poly_sub(&tr, &neg(&y), spec);
            }
            tr
        } else {
            let lin = vec![delta, spec.one()];
            let pw = poly_powmod(&lin, (q - 1) / 2, &g, spec);
            poly_sub(&pw, &[spec.one()], spec)
        };
        let d = poly_gcd(&g, &h, spec);
        if d.len() > 1 && d.len() < g.len() {
            let (other, _) = poly_divrem(&g, &d, spec);
            split(d, spec, q, rng, out);
            split(monic(other), spec, q, rng, out);
            return;
        }
    }
}

fn neg(p: &[Scalar]) -> Poly {
    p.iter().map(|c| -c).collect()
}

fn rational_sqrt(q: &BigRational) -> Option<BigRational> {
    if q.is_negative() {
        return None;
    }
    let n = q.numer().sqrt();
    let d = q.denom().sqrt();
    (&n * &n == *q.numer() && &d * &d == *q.denom()).then(|| BigRational::new(n, d))
}

/// Smallest root of t^2 + c1 t + c0 in `spec`, if any.
pub fn find_quadratic_root(c0: &Scalar, c1: &Scalar, spec: &FieldSpec) -> Option<Scalar> {
    if spec.is_rational() {
        let (a, b) = (c0.as_rational()?, c1.as_rational()?);
        let disc = b * b - BigRational::from_integer(BigInt::from(4)) * a;
        let r = rational_sqrt(&disc)?;
        let two = BigRational::from_integer(BigInt::from(2));
        let lo = (-b - &r) / &two;
        return Some(spec.rational(lo));
    }
    roots_of(&[c0.clone(), c1.clone(), spec.one()], spec).into_iter().next()
}

/// The canonical embedding of one finite field into an extension of it.
#[derive(Clone, Debug)]
pub struct Embedding {
    source: FieldSpec,
    target: FieldSpec,
    // image of t^i for i < source degree
    powers: Vec<Scalar>,
}

impl Embedding {
    pub fn new(source: &FieldSpec, target: &FieldSpec) -> Result<Self, FieldError> {
        if source.characteristic() != target.characteristic() {
            return Err(FieldError::CharacteristicMismatch(source.characteristic(), target.characteristic()));
        }
        let (k, n) = (source.degree(), target.degree());
        if n % k != 0 {
            return Err(FieldError::NoEmbedding { from: k, to: n });
        }
        let powers = match source.modulus() {
            None => vec![target.one()],
            Some(m) => {
                let coeffs: Vec<Scalar> = m.iter().map(|&c| target.from_i64(c as i64)).collect();
                let r = roots_of(&coeffs, target).into_iter().next().ok_or(FieldError::NoEmbedding { from: k, to: n })?;
                let mut powers = vec![target.one()];
                for i in 1..k {
                    let next = &powers[i - 1] * &r;
                    powers.push(next);
                }
                powers
            }
        };
        Ok(Embedding { source: source.clone(), target: target.clone(), powers })
    }

    pub fn source(&self) -> &FieldSpec {
        &self.source
    }

    pub fn target(&self) -> &FieldSpec {
        &self.target
    }

    pub fn apply(&self, x: &Scalar) -> Scalar {
        if self.source.is_rational() {
            return self.target.rational(x.as_rational().unwrap().clone());
        }
        let mut acc = self.target.zero();
        for (c, pw) in x.coeffs().unwrap().iter().zip(&self.powers) {
            if *c != 0 {
                acc = &acc + &(&self.target.from_i64(*c as i64) * pw);
            }
        }
        acc
    }
}

/// Image of `x` under the canonical embedding into `target`.
pub fn embed(x: &Scalar, target: &FieldSpec) -> Result<Scalar, FieldError> {
    if x.spec().is_rational() && target.is_rational() {
        return Ok(x.clone());
    }
    Ok(Embedding::new(x.spec(), target)?.apply(x))
}
