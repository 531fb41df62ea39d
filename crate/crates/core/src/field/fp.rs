//! Dense polynomials over a prime field F_p, coefficients stored constant term first.

pub(crate) fn mul_mod(a: u64, b: u64, p: u64) -> u64 {
    ((a as u128 * b as u128) % p as u128) as u64
}

pub(crate) fn inv_mod(a: u64, p: u64) -> Option<u64> {
    if a.is_multiple_of(p) {
        return None;
    }
    // Extended Euclid on signed integers; p < 2^31 so i64 is plenty.
    let (mut r0, mut r1) = (p as i64, (a % p) as i64);
    let (mut s0, mut s1) = (0i64, 1i64);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (s0, s1) = (s1, s0 - q * s1);
    }
    Some(s0.rem_euclid(p as i64) as u64)
}

pub(crate) fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

fn prime_factors(mut n: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            out.push(d);
            while n.is_multiple_of(d) {
                n /= d;
            }
        }
        d += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

pub(crate) fn trim(v: &mut Vec<u64>) {
    while v.last() == Some(&0) {
        v.pop();
    }
}

fn degree(v: &[u64]) -> Option<usize> {
    v.iter().rposition(|&c| c != 0)
}

/// Remainder of `a` modulo `m`; `m` must be nonzero.
pub(crate) fn rem(a: &[u64], m: &[u64], p: u64) -> Vec<u64> {
    let dm = degree(m).expect("division by zero polynomial");
    let lead_inv = inv_mod(m[dm], p).expect("leading coefficient invertible");
    let mut r = a.to_vec();
    trim(&mut r);
    while let Some(dr) = degree(&r) {
        if dr < dm {
            break;
        }
        let f = mul_mod(r[dr], lead_inv, p);
        let shift = dr - dm;
        for (i, &c) in m[..=dm].iter().enumerate() {
            let sub = mul_mod(f, c, p);
            r[shift + i] = (r[shift + i] + p - sub) % p;
        }
        trim(&mut r);
    }
    r
}

fn divrem(a: &[u64], m: &[u64], p: u64) -> (Vec<u64>, Vec<u64>) {
    let dm = degree(m).expect("division by zero polynomial");
    let lead_inv = inv_mod(m[dm], p).expect("leading coefficient invertible");
    let mut r = a.to_vec();
    trim(&mut r);
    let mut q = vec![0u64; r.len().saturating_sub(dm).max(1)];
    while let Some(dr) = degree(&r) {
        if dr < dm {
            break;
        }
        let f = mul_mod(r[dr], lead_inv, p);
        let shift = dr - dm;
        q[shift] = f;
        for (i, &c) in m[..=dm].iter().enumerate() {
            let sub = mul_mod(f, c, p);
            r[shift + i] = (r[shift + i] + p - sub) % p;
        }
        trim(&mut r);
    }
    trim(&mut q);
    (q, r)
}

pub(crate) fn mul(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0u64; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x == 0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            out[i + j] = (out[i + j] + mul_mod(x, y, p)) % p;
        }
    }
    trim(&mut out);
    out
}

fn sub(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
    let n = a.len().max(b.len());
    let mut out = vec![0u64; n];
    for (i, o) in out.iter_mut().enumerate() {
        let x = a.get(i).copied().unwrap_or(0);
        let y = b.get(i).copied().unwrap_or(0);
        *o = (x + p - y) % p;
    }
    trim(&mut out);
    out
}

pub(crate) fn gcd(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    trim(&mut x);
    trim(&mut y);
    while !y.is_empty() {
        let r = rem(&x, &y, p);
        x = y;
        y = r;
    }
    if let Some(d) = degree(&x) {
        let inv = inv_mod(x[d], p).unwrap();
        for c in &mut x {
            *c = mul_mod(*c, inv, p);
        }
    }
    x
}

fn pow_poly_mod(base: &[u64], mut e: u64, m: &[u64], p: u64) -> Vec<u64> {
    let mut acc = vec![1u64];
    let mut b = rem(base, m, p);
    while e > 0 {
        if e & 1 == 1 {
            acc = rem(&mul(&acc, &b, p), m, p);
        }
        e >>= 1;
        if e > 0 {
            b = rem(&mul(&b, &b, p), m, p);
        }
    }
    acc
}

/// Rabin's test for a monic polynomial of degree k >= 1.
pub(crate) fn is_irreducible(f: &[u64], p: u64) -> bool {
    let k = match degree(f) {
        Some(d) if d >= 1 => d,
        _ => return false,
    };
    if k == 1 {
        return true;
    }
    let x = vec![0u64, 1];
    // frob[i] = x^(p^i) mod f
    let mut frob = vec![rem(&x, f, p)];
    for i in 1..=k {
        let next = pow_poly_mod(&frob[i - 1], p, f, p);
        frob.push(next);
    }
    if sub(&frob[k], &x, p) != Vec::<u64>::new() {
        return false;
    }
    for r in prime_factors(k) {
        let h = sub(&frob[k / r], &x, p);
        let g = gcd(f, &h, p);
        if degree(&g) != Some(0) {
            return false;
        }
    }
    true
}

/// Inverse of `a` modulo the irreducible `m`.
pub(crate) fn inv_poly(a: &[u64], m: &[u64], p: u64) -> Option<Vec<u64>> {
    let mut r0 = m.to_vec();
    let mut r1 = rem(a, m, p);
    if r1.is_empty() {
        return None;
    }
    let mut s0: Vec<u64> = Vec::new();
    let mut s1: Vec<u64> = vec![1];
    while !r1.is_empty() {
        let (q, r) = divrem(&r0, &r1, p);
        let s2 = sub(&s0, &mul(&q, &s1, p), p);
        r0 = r1;
        r1 = r;
        s0 = s1;
        s1 = s2;
    }
    // r0 is a nonzero constant
    let c = inv_mod(r0[0], p)?;
    let mut out = rem(&s0, m, p);
    for v in &mut out {
        *v = mul_mod(*v, c, p);
    }
    Some(out)
}

/// Lexicographically smallest monic irreducible of degree k, comparing
/// coefficient vectors from the constant term upwards.
pub(crate) fn smallest_irreducible(p: u64, k: usize) -> Vec<u64> {
    let mut coeffs = vec![0u64; k];
    // A zero constant term is divisible by t, so start at c0 = 1.
    coeffs[0] = 1;
    loop {
        let mut f = coeffs.clone();
        f.push(1);
        if is_irreducible(&f, p) {
            return f;
        }
        // odometer with c0 most significant, c_{k-1} fastest
        let mut i = k;
        loop {
            i -= 1;
            coeffs[i] += 1;
            if coeffs[i] < p {
                break;
            }
            coeffs[i] = 0;
            assert!(i > 0, "no irreducible polynomial found");
        }
    }
}
