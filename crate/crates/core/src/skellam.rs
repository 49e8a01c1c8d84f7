//! The Skellam law `Sk(λ1, λ2)` of `X - Y` with independent
//! `X ~ Po(λ1)`, `Y ~ Po(λ2)`.

use std::collections::VecDeque;

use rand::Rng;
use serde::Serialize;

use crate::error::{domain, Result};
use crate::real::{KahanSum, Real};
use crate::sampling::poisson_draw;
use crate::special::{bessel_i, ln_bessel_i_scaled_unchecked, ln_factorial, poisson_dist};
use crate::tv::IntegerDist;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SkellamParams<T> {
    lambda1: T,
    lambda2: T,
}

impl<T: Real> SkellamParams<T> {
    /// Both rates strictly positive and finite.
    pub fn new(lambda1: T, lambda2: T) -> Result<Self> {
        if !(lambda1 > T::zero() && lambda2 > T::zero()) || !lambda1.is_finite() || !lambda2.is_finite() {
            return domain(format!(
                "Skellam rates must be finite and > 0, got ({lambda1}, {lambda2})"
            ));
        }
        Ok(Self { lambda1, lambda2 })
    }

    /// Allows zero rates: `Sk(λ, 0) = Po(λ)`, `Sk(0, λ)` is the law of
    /// `-Po(λ)`, and `Sk(0, 0)` is the point mass at 0.
    pub fn extended(lambda1: T, lambda2: T) -> Result<Self> {
        if !(lambda1 >= T::zero() && lambda2 >= T::zero()) || !lambda1.is_finite() || !lambda2.is_finite() {
            return domain(format!(
                "Skellam rates must be finite and >= 0, got ({lambda1}, {lambda2})"
            ));
        }
        Ok(Self { lambda1, lambda2 })
    }

    pub fn lambda1(&self) -> T {
        self.lambda1
    }

    pub fn lambda2(&self) -> T {
        self.lambda2
    }

    /// True when a rate is zero and the law is a (signed) Poisson.
    pub fn is_degenerate(&self) -> bool {
        self.lambda1 == T::zero() || self.lambda2 == T::zero()
    }

    pub fn swapped(&self) -> Self {
        Self {
            lambda1: self.lambda2,
            lambda2: self.lambda1,
        }
    }

    pub fn total(&self) -> T {
        self.lambda1 + self.lambda2
    }

    pub fn max_rate(&self) -> T {
        self.lambda1.max(self.lambda2)
    }

    /// `(λ1 - λ2, λ1 + λ2)`.
    pub fn moments(&self) -> (T, T) {
        (self.lambda1 - self.lambda2, self.lambda1 + self.lambda2)
    }

    /// `ln P(X - Y = k)`; `-inf` off the support.
    pub fn ln_pmf(&self, k: i64) -> T {
        let (l1, l2) = (self.lambda1, self.lambda2);
        match (l1 == T::zero(), l2 == T::zero()) {
            (true, true) => {
                if k == 0 {
                    T::zero()
                } else {
                    T::neg_infinity()
                }
            }
            (false, true) => ln_poisson(k, l1),
            (true, false) => ln_poisson(-k, l2),
            (false, false) => {
                let d = l1.sqrt() - l2.sqrt();
                let kf = T::from_i64_lossy(k);
                let z = T::lit(2.0) * (l1 * l2).sqrt();
                -(d * d) + kf * T::lit(0.5) * (l1.ln() - l2.ln()) + ln_bessel_i_scaled_unchecked(k.abs(), z)
            }
        }
    }

    /// `e^{-(λ1+λ2)} (λ1/λ2)^{k/2} I_k(2 sqrt(λ1 λ2))`.
    pub fn pmf(&self, k: i64) -> T {
        self.ln_pmf(k).exp()
    }

    /// `P(X - Y <= k)`, summed over a window with tail below `1e-15`
    /// (`1e-6` for `f32`).
    pub fn cdf(&self, k: i64) -> Result<T> {
        let tol = T::epsilon().max(T::lit(1e-15)) * T::lit(10.0);
        let d = self.to_dist(tol)?;
        if k >= d.max_support() {
            return Ok(T::one());
        }
        let below = d
            .iter()
            .take_while(|(j, _)| *j <= k)
            .map(|(_, p)| p)
            .collect::<KahanSum<T>>()
            .value();
        Ok(below.min(T::one()))
    }

    /// Truncated table grown outward from `round(λ1 - λ2)` until the mass
    /// outside is provably at most `tail_tol`. Entries are exactly
    /// [`pmf`](Self::pmf) for non-degenerate parameters.
    pub fn to_dist(&self, tail_tol: T) -> Result<IntegerDist<T>> {
        if !(tail_tol > T::zero() && tail_tol < T::one()) {
            return domain(format!("tail tolerance must lie in (0, 1), got {tail_tol}"));
        }
        let (l1, l2) = (self.lambda1, self.lambda2);
        if l2 == T::zero() {
            return poisson_dist(l1, tail_tol);
        }
        if l1 == T::zero() {
            return Ok(poisson_dist(l2, tail_tol)?.negate());
        }
        let half_tol = tail_tol * T::lit(0.5);
        let four_prod = T::lit(4.0) * l1 * l2;
        // p_{k+1}/p_k <= 2λ1 / (k + sqrt(k² + 4λ1λ2)) for k >= 0, and the
        // mirrored bound with λ2 below.
        let tail_bound = |next: T, m: i64, rate: T| -> Option<T> {
            if m < 0 {
                return None;
            }
            let mf = T::from_i64_lossy(m);
            let rho = T::lit(2.0) * rate / (mf + (mf * mf + four_prod).sqrt());
            (rho < T::one()).then(|| next / (T::one() - rho))
        };
        let centre = (l1 - l2).round().to_i64().unwrap_or(0);
        let mut probs = VecDeque::from([self.pmf(centre)]);
        let (mut lo, mut hi) = (centre, centre);
        let mut next_lo = self.pmf(lo - 1);
        let mut next_hi = self.pmf(hi + 1);
        loop {
            let upper = tail_bound(next_hi, hi + 1, l1).filter(|b| *b <= half_tol);
            let lower = tail_bound(next_lo, -(lo - 1), l2).filter(|b| *b <= half_tol);
            match (lower, upper) {
                (Some(lb), Some(ub)) => {
                    let captured = probs.iter().copied().collect::<KahanSum<T>>().value();
                    let tail = (T::one() - captured).max(T::zero()).min(lb + ub);
                    return Ok(IntegerDist::from_parts(lo, probs.into(), tail));
                }
                (None, Some(_)) => {
                    lo -= 1;
                    probs.push_front(next_lo);
                    next_lo = self.pmf(lo - 1);
                }
                (Some(_), None) => {
                    hi += 1;
                    probs.push_back(next_hi);
                    next_hi = self.pmf(hi + 1);
                }
                (None, None) => {
                    if next_lo > next_hi {
                        lo -= 1;
                        probs.push_front(next_lo);
                        next_lo = self.pmf(lo - 1);
                    } else {
                        hi += 1;
                        probs.push_back(next_hi);
                        next_hi = self.pmf(hi + 1);
                    }
                }
            }
            if probs.len() > crate::tv::MAX_CONVOLUTION_LEN {
                return Err(crate::Error::Resource(format!(
                    "Skellam window exceeds {} points",
                    crate::tv::MAX_CONVOLUTION_LEN
                )));
            }
        }
    }

    /// `e^{-(λ1+λ2)} I_0(λ1+λ2)`, a uniform bound on the pmf.
    pub fn max_pmf_bound(&self) -> T {
        bessel_i(0, self.total(), true).expect("nonnegative argument")
    }

    /// `count` independent draws of `X - Y`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, count: usize) -> Vec<i64> {
        let (l1, l2) = (self.lambda1.as_f64(), self.lambda2.as_f64());
        (0..count)
            .map(|_| poisson_draw(rng, l1) as i64 - poisson_draw(rng, l2) as i64)
            .collect()
    }
}

fn ln_poisson<T: Real>(k: i64, lambda: T) -> T {
    if k < 0 {
        return T::neg_infinity();
    }
    T::from_i64_lossy(k) * lambda.ln() - lambda - ln_factorial::<T>(k as u64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn constructors_validate() {
        assert!(SkellamParams::new(0.0_f64, 1.0).is_err());
        assert!(SkellamParams::new(1.0_f64, f64::NAN).is_err());
        assert!(SkellamParams::extended(0.0_f64, 0.0).is_ok());
        assert!(SkellamParams::extended(-1.0_f64, 0.0).is_err());
    }

    #[test]
    fn symmetric_pmf_at_zero() {
        let s = SkellamParams::new(1.0_f64, 1.0).unwrap();
        assert!((s.pmf(0) - 0.308_508_322_553_671_039_53).abs() < 1e-15);
    }

    #[test]
    fn frozen_reference_values() {
        let s = SkellamParams::new(3.0_f64, 1.0).unwrap();
        let cases = [
            (-5, 0.000_247_523_940_030_773_656),
            (0, 0.131_121_595_373_807_713_05),
            (2, 0.202_773_184_575_132_911_08),
            (10, 0.000_390_306_595_416_241_155_1),
        ];
        for (k, v) in cases {
            assert!(((s.pmf(k) - v) / v).abs() < 1e-12, "k={k}: {}", s.pmf(k));
        }
        let big = SkellamParams::new(1e6_f64, 1e6).unwrap();
        let v0 = 0.000_282_094_809_404_807_588_04;
        let v1000 = 0.000_219_695_645_878_106_976_84;
        assert!(((big.pmf(0) - v0) / v0).abs() < 1e-10);
        assert!(((big.pmf(1000) - v1000) / v1000).abs() < 1e-10);
    }

    #[test]
    fn degenerate_rates_reduce_to_poisson() {
        let s = SkellamParams::extended(2.0_f64, 0.0).unwrap();
        assert_eq!(s.pmf(-1), 0.0);
        assert!((s.pmf(3) - 8.0 / 6.0 * (-2.0_f64).exp()).abs() < 1e-15);
        let t = SkellamParams::extended(0.0_f64, 2.0).unwrap();
        assert_eq!(t.pmf(1), 0.0);
        assert!((t.pmf(-3) - s.pmf(3)).abs() < 1e-16);
        let z = SkellamParams::extended(0.0_f64, 0.0).unwrap();
        assert_eq!(z.pmf(0), 1.0);
        assert_eq!(z.to_dist(1e-9).unwrap(), IntegerDist::point_mass(0));
    }

    #[test]
    fn table_matches_pmf() {
        let s = SkellamParams::new(1.0_f64, 1.0).unwrap();
        let d = s.to_dist(1e-10).unwrap();
        assert!(d.window_mass() >= 1.0 - 1e-10);
        assert_eq!(d.get(0), s.pmf(0));
        let d = SkellamParams::new(5.0_f64, 2.0).unwrap().to_dist(1e-12).unwrap();
        assert!((d.mean() - 3.0).abs() < 1e-8);
    }

    #[test]
    fn cdf_is_monotone_and_reaches_one() {
        let s = SkellamParams::new(2.5_f64, 1.5).unwrap();
        let mut prev = 0.0;
        for k in -15..25 {
            let c = s.cdf(k).unwrap();
            assert!(c >= prev);
            prev = c;
        }
        assert!((prev - 1.0).abs() < 1e-13);
        assert!((s.cdf(0).unwrap() - (-20..=0).map(|k| s.pmf(k)).sum::<f64>()).abs() < 1e-14);
    }

    #[test]
    fn max_pmf_bound_matches_pmf_at_zero_for_equal_rates() {
        let s = SkellamParams::new(1.0_f64, 1.0).unwrap();
        assert!((s.max_pmf_bound() - s.pmf(0)).abs() < 1e-15);
    }

    #[test]
    fn empty_sample() {
        let s = SkellamParams::new(1.0_f64, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(s.sample(&mut rng, 0).is_empty());
    }
}
