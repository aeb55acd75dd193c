//! Seeded randomness and exact categorical sampling.

use num_bigint::{BigUint, RandBigInt};
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

/// The generator used everywhere randomness is needed.
pub type SeededRng = ChaCha8Rng;

/// A generator for `(seed, stream)`. Streams give independent sequences for
/// parallel workers while keeping the overall result a function of `seed`.
pub fn rng_for(seed: u64, stream: u64) -> SeededRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Samples an index with probability proportional to exact rational weights.
///
/// Weights are brought to a common denominator and a uniform integer below
/// the total is drawn, so no floating point rounding enters the selection.
#[derive(Debug, Clone)]
pub struct ExactCategorical {
    cumulative: Vec<BigUint>,
    total: BigUint,
}

impl ExactCategorical {
    pub fn new<'a>(weights: impl IntoIterator<Item = &'a BigRational>) -> Result<Self> {
        let weights: Vec<&BigRational> = weights.into_iter().collect();
        if weights.iter().any(|w| w.is_negative()) {
            return Err(Error::invalid("negative sampling weight"));
        }
        let denom = weights
            .iter()
            .fold(num_bigint::BigInt::from(1), |acc, w| {
                num_integer::Integer::lcm(&acc, w.denom())
            });
        let mut cumulative = Vec::with_capacity(weights.len());
        let mut total = BigUint::zero();
        for w in &weights {
            let scaled = w.numer() * (&denom / w.denom());
            total += scaled.to_biguint().expect("nonnegative weight");
            cumulative.push(total.clone());
        }
        if total.is_zero() {
            return Err(Error::invalid("sampling weights are all zero"));
        }
        Ok(Self { cumulative, total })
    }

    pub fn len(&self) -> usize {
        self.cumulative.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cumulative.is_empty()
    }

    pub fn sample<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let r = rng.gen_biguint_below(&self.total);
        self.cumulative.partition_point(|c| c <= &r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn zero_weight_is_never_drawn() {
        let w = [q(1, 3), q(0, 1), q(2, 3)];
        let cat = ExactCategorical::new(w.iter()).unwrap();
        let mut rng = rng_for(7, 0);
        let mut counts = [0usize; 3];
        for _ in 0..3000 {
            counts[cat.sample(&mut rng)] += 1;
        }
        assert_eq!(counts[1], 0);
        assert!(counts[0] > 800 && counts[0] < 1200, "{counts:?}");
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let w = [q(1, 2), q(1, 2)];
        let cat = ExactCategorical::new(w.iter()).unwrap();
        let draw = |stream| {
            let mut rng = rng_for(42, stream);
            (0..64).map(|_| cat.sample(&mut rng)).collect::<Vec<_>>()
        };
        assert_eq!(draw(0), draw(0));
        assert_ne!(draw(0), draw(1));
    }

    #[test]
    fn rejects_degenerate_weights() {
        assert!(ExactCategorical::new([q(0, 1)].iter()).is_err());
        assert!(ExactCategorical::new([q(-1, 2), q(3, 2)].iter()).is_err());
    }
}
