//! Reproducible random streams and the elementary draws used by the
//! simulators.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Poisson};

/// Independent stream `stream` of the generator seeded with `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// One `Po(λ)` draw; `λ = 0` gives 0.
pub(crate) fn poisson_draw<R: Rng + ?Sized>(rng: &mut R, lambda: f64) -> u64 {
    if lambda <= 0.0 {
        return 0;
    }
    Poisson::new(lambda).expect("finite positive Poisson mean").sample(rng) as u64
}

/// One `Bin(n, q)` draw.
pub(crate) fn binomial_draw<R: Rng + ?Sized>(rng: &mut R, n: u64, q: f64) -> u64 {
    if n == 0 || q <= 0.0 {
        return 0;
    }
    if q >= 1.0 {
        return n;
    }
    Binomial::new(n, q).expect("valid binomial").sample(rng)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: Vec<u64> = (0..4).map(|_| stream_rng(7, 0).random()).collect();
        assert!(a.windows(2).all(|w| w[0] == w[1]));
        let mut s0 = stream_rng(7, 0);
        let mut s1 = stream_rng(7, 1);
        assert_ne!(s0.random::<u64>(), s1.random::<u64>());
    }

    #[test]
    fn degenerate_draws() {
        let mut rng = stream_rng(1, 0);
        assert_eq!(poisson_draw(&mut rng, 0.0), 0);
        assert_eq!(binomial_draw(&mut rng, 5, 1.0), 5);
        assert_eq!(binomial_draw(&mut rng, 5, 0.0), 0);
    }
}
