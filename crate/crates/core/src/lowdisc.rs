//! Randomly shifted Halton sequence.
//!
//! Point `i` depends only on `i` and the seed, so the first `n` points of a
//! longer run are exactly the `n`-point set.

use alloc::vec::Vec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct Halton {
    bases: Vec<u64>,
    shift: Vec<f64>,
}

impl Halton {
    pub fn new(dim: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let shift = (0..dim).map(|_| rng.random::<f64>()).collect();
        Self {
            bases: first_primes(dim),
            shift,
        }
    }

    pub fn dim(&self) -> usize {
        self.bases.len()
    }

    /// The `i`-th point in `[0, 1)^dim`, shifted modulo 1.
    pub fn point(&self, i: u64) -> Vec<f64> {
        self.bases
            .iter()
            .zip(&self.shift)
            .map(|(&b, &s)| {
                let x = radical_inverse(i, b) + s;
                if x >= 1.0 {
                    x - 1.0
                } else {
                    x
                }
            })
            .collect()
    }
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += f * (i % base) as f64;
        i /= base;
        f *= inv;
    }
    r
}

fn first_primes(n: usize) -> Vec<u64> {
    let mut primes = Vec::with_capacity(n);
    let mut k = 2u64;
    while primes.len() < n {
        if primes
            .iter()
            .take_while(|&&p| p * p <= k)
            .all(|&p| !k.is_multiple_of(p))
        {
            primes.push(k);
        }
        k += 1;
    }
    primes
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radical_inverse_base_two() {
        assert_eq!(radical_inverse(1, 2), 0.5);
        assert_eq!(radical_inverse(2, 2), 0.25);
        assert_eq!(radical_inverse(3, 2), 0.75);
        assert_eq!(first_primes(5), alloc::vec![2, 3, 5, 7, 11]);
    }

    #[test]
    fn seeded_and_in_unit_cube() {
        let h = Halton::new(3, 42);
        let g = Halton::new(3, 42);
        for i in 0..100 {
            let p = h.point(i);
            assert_eq!(p, g.point(i));
            assert!(p.iter().all(|&x| (0.0..1.0).contains(&x)));
        }
        assert_ne!(Halton::new(3, 43).point(5), h.point(5));
    }
}
