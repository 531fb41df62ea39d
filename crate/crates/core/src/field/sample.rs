//! Seeded general choices.

use std::collections::{HashSet, VecDeque};

use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{FieldError, FieldSpec, Scalar};

/// Default half-width of the integer window used over the rationals.
pub const DEFAULT_WINDOW: i64 = 1 << 16;

/// Deterministic source of general choices.
///
/// A scripted sampler replays a fixed list of values instead; exhaustive
/// oracles use it to walk every free choice.
#[derive(Clone, Debug)]
pub struct Sampler {
    rng: ChaCha8Rng,
    window: i64,
    draws: u64,
    script: Option<VecDeque<Scalar>>,
}

impl Sampler {
    pub fn new(seed: u64) -> Self {
        Self::with_window(seed, DEFAULT_WINDOW)
    }

    pub fn with_window(seed: u64, window: i64) -> Self {
        Sampler { rng: ChaCha8Rng::seed_from_u64(seed), window: window.max(2), draws: 0, script: None }
    }

    pub fn scripted(values: impl IntoIterator<Item = Scalar>) -> Self {
        let mut s = Self::new(0);
        s.script = Some(values.into_iter().collect());
        s
    }

    /// Total number of scalars handed out, accepted or not.
    pub fn draws(&self) -> u64 {
        self.draws
    }

    pub fn is_scripted(&self) -> bool {
        self.script.is_some()
    }

    pub fn window(&self) -> i64 {
        self.window
    }

    /// Uniform value in `0..n`.
    pub fn below(&mut self, n: u64) -> u64 {
        self.rng.gen_range(0..n)
    }
}

pub(super) fn uniform(spec: &FieldSpec, rng: &mut ChaCha8Rng) -> Scalar {
    let p = spec.characteristic();
    let coeffs: Vec<u64> = (0..spec.degree()).map(|_| rng.gen_range(0..p)).collect();
    spec.from_coeffs(&coeffs).unwrap()
}

/// Draw a scalar outside `forbidden`.
pub fn sample_general(spec: &FieldSpec, forbidden: &[Scalar], rng: &mut Sampler) -> Result<Scalar, FieldError> {
    if let Some(script) = rng.script.as_mut() {
        rng.draws += 1;
        return script.pop_front().ok_or(FieldError::FieldTooSmall { order: 0, forbidden: forbidden.len() });
    }
    let set: HashSet<&Scalar> = forbidden.iter().collect();
    match spec.order() {
        Some(order) => {
            if order <= set.len() as u128 {
                return Err(FieldError::FieldTooSmall { order, forbidden: set.len() });
            }
            rng.draws += 1;
            if order <= 4096 {
                let allowed: Vec<Scalar> = spec.elements().filter(|x| !set.contains(x)).collect();
                let i = rng.rng.gen_range(0..allowed.len());
                return Ok(allowed[i].clone());
            }
            loop {
                let x = uniform(spec, &mut rng.rng);
                if !set.contains(&x) {
                    return Ok(x);
                }
            }
        }
        None => {
            rng.draws += 1;
            // widen if the forbidden set could crowd out the window
            let mut w = rng.window;
            while (2 * w + 1) as usize <= 2 * set.len() {
                w *= 2;
            }
            loop {
                let v = rng.rng.gen_range(-w..=w);
                let x = spec.from_bigint(&BigInt::from(v));
                if !set.contains(&x) {
                    return Ok(x);
                }
            }
        }
    }
}
