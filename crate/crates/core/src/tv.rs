//! Finite-window integer distributions, exact convolution, and total
//! variation distance.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::real::{KahanSum, Real};

/// Largest window [`convolve`] will produce.
pub const MAX_CONVOLUTION_LEN: usize = 10_000_000;

/// Windows at least this long are convolved through an FFT.
pub const FFT_THRESHOLD: usize = 4096;

/// Probabilities on the contiguous window `min_support ..= min_support + len - 1`.
///
/// `tail_mass` is the probability not represented in the window, so the
/// entries plus the tail sum to one up to rounding.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IntegerDist<T> {
    min_support: i64,
    probs: Vec<T>,
    tail_mass: T,
}

impl<T: Real> IntegerDist<T> {
    pub fn new(min_support: i64, probs: Vec<T>, tail_mass: T) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::Domain("empty probability window".into()));
        }
        if let Some(bad) = probs.iter().find(|p| !(**p >= T::zero()) || !p.is_finite()) {
            return Err(Error::Domain(format!("invalid probability {bad}")));
        }
        if !(tail_mass >= T::zero()) || !(tail_mass < T::one()) {
            return Err(Error::Domain(format!("invalid tail mass {tail_mass}")));
        }
        Ok(Self {
            min_support,
            probs,
            tail_mass,
        })
    }

    pub(crate) fn from_parts(min_support: i64, probs: Vec<T>, tail_mass: T) -> Self {
        debug_assert!(!probs.is_empty());
        Self {
            min_support,
            probs,
            tail_mass,
        }
    }

    pub fn point_mass(k: i64) -> Self {
        Self::from_parts(k, vec![T::one()], T::zero())
    }

    pub fn min_support(&self) -> i64 {
        self.min_support
    }

    pub fn max_support(&self) -> i64 {
        self.min_support + self.probs.len() as i64 - 1
    }

    pub fn probs(&self) -> &[T] {
        &self.probs
    }

    pub fn tail_mass(&self) -> T {
        self.tail_mass
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Probability at `k`; zero outside the window.
    pub fn get(&self, k: i64) -> T {
        let idx = k - self.min_support;
        if idx < 0 || idx >= self.probs.len() as i64 {
            T::zero()
        } else {
            self.probs[idx as usize]
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, T)> + '_ {
        self.probs
            .iter()
            .enumerate()
            .map(move |(i, &p)| (self.min_support + i as i64, p))
    }

    /// Mass captured by the window.
    pub fn window_mass(&self) -> T {
        self.probs.iter().copied().collect::<KahanSum<T>>().value()
    }

    pub fn mean(&self) -> T {
        self.iter()
            .map(|(k, p)| T::from_i64_lossy(k) * p)
            .collect::<KahanSum<T>>()
            .value()
    }

    pub fn variance(&self) -> T {
        let m = self.mean();
        self.iter()
            .map(|(k, p)| {
                let d = T::from_i64_lossy(k) - m;
                d * d * p
            })
            .collect::<KahanSum<T>>()
            .value()
    }

    /// Expectation of the indicator `k ∈ set` over the window.
    pub fn mass_where(&self, mut pred: impl FnMut(i64) -> bool) -> T {
        self.iter()
            .filter(|(k, _)| pred(*k))
            .map(|(_, p)| p)
            .collect::<KahanSum<T>>()
            .value()
    }

    /// Law of `-X`.
    pub fn negate(&self) -> Self {
        let mut probs = self.probs.clone();
        probs.reverse();
        Self::from_parts(-self.max_support(), probs, self.tail_mass)
    }

    /// Law of `X + shift`.
    pub fn shifted(&self, shift: i64) -> Self {
        Self::from_parts(self.min_support + shift, self.probs.clone(), self.tail_mass)
    }

    /// Drops leading and trailing zero entries (keeps at least one entry).
    pub fn trimmed(mut self) -> Self {
        let first = self.probs.iter().position(|p| *p > T::zero());
        match first {
            None => {
                self.probs.truncate(1);
                self
            }
            Some(first) => {
                let last = self.probs.iter().rposition(|p| *p > T::zero()).unwrap();
                self.probs.truncate(last + 1);
                self.probs.drain(..first);
                self.min_support += first as i64;
                self
            }
        }
    }
}

/// Law of `-X`.
pub fn negate<T: Real>(d: &IntegerDist<T>) -> IntegerDist<T> {
    d.negate()
}

/// Exact law of `X + Y` for independent `X ~ d1`, `Y ~ d2`.
///
/// The missing mass of the result is `t1 + t2 - t1 t2`.
pub fn convolve<T: Real>(d1: &IntegerDist<T>, d2: &IntegerDist<T>) -> Result<IntegerDist<T>> {
    let out_len = d1.len() + d2.len() - 1;
    if out_len > MAX_CONVOLUTION_LEN {
        return Err(Error::Resource(format!(
            "convolution window of {out_len} points exceeds the cap of {MAX_CONVOLUTION_LEN}"
        )));
    }
    let probs = if out_len < FFT_THRESHOLD || d1.len().min(d2.len()) <= 32 {
        convolve_direct(&d1.probs, &d2.probs)
    } else {
        convolve_fft(&d1.probs, &d2.probs)
    };
    let (t1, t2) = (d1.tail_mass, d2.tail_mass);
    Ok(IntegerDist::from_parts(
        d1.min_support + d2.min_support,
        probs,
        t1 + t2 - t1 * t2,
    ))
}

pub(crate) fn convolve_direct<T: Real>(a: &[T], b: &[T]) -> Vec<T> {
    let (a, b) = if a.len() >= b.len() { (a, b) } else { (b, a) };
    let mut out = vec![T::zero(); a.len() + b.len() - 1];
    for (j, &bj) in b.iter().enumerate() {
        if bj == T::zero() {
            continue;
        }
        for (o, &ai) in out[j..j + a.len()].iter_mut().zip(a) {
            *o = *o + ai * bj;
        }
    }
    out
}

pub(crate) fn convolve_fft<T: Real>(a: &[T], b: &[T]) -> Vec<T> {
    let out_len = a.len() + b.len() - 1;
    let n = out_len.next_power_of_two();
    let mut planner = FftPlanner::<T>::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let lift = |v: &[T]| {
        let mut buf = vec![Complex::new(T::zero(), T::zero()); n];
        for (slot, &x) in buf.iter_mut().zip(v) {
            slot.re = x;
        }
        buf
    };
    let mut fa = lift(a);
    let mut fb = lift(b);
    fwd.process(&mut fa);
    fwd.process(&mut fb);
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x = *x * *y;
    }
    inv.process(&mut fa);
    let scale = T::from_usize(n).unwrap().recip();
    fa[..out_len]
        .iter()
        .map(|c| (c.re * scale).max(T::zero()))
        .collect()
}

/// Total variation distance with its truncation allowance: the exact
/// distance lies in `[value - slack, value + slack]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TvInterval<T> {
    pub value: T,
    pub slack: T,
}

impl<T: Real> TvInterval<T> {
    pub fn lower(&self) -> T {
        (self.value - self.slack).max(T::zero())
    }

    pub fn upper(&self) -> T {
        self.value + self.slack
    }
}

/// An exact TV interval judged against a theoretical bound.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BoundCheck<T> {
    pub tv: TvInterval<T>,
    pub bound: T,
    /// `tv.upper() <= bound`.
    pub satisfied: bool,
    /// `tv.value / bound`; 0 when the distance is 0 or the bound infinite.
    pub ratio: T,
}

impl<T: Real> BoundCheck<T> {
    pub fn new(tv: TvInterval<T>, bound: T) -> Self {
        let ratio = if tv.value == T::zero() || bound.is_infinite() {
            T::zero()
        } else {
            tv.value / bound
        };
        Self {
            tv,
            bound,
            satisfied: tv.upper() <= bound,
            ratio,
        }
    }
}

/// `½ Σ_k |p_k - q_k|` over the union of both windows.
pub fn tv_distance<T: Real>(d1: &IntegerDist<T>, d2: &IntegerDist<T>) -> TvInterval<T> {
    let lo = d1.min_support().min(d2.min_support());
    let hi = d1.max_support().max(d2.max_support());
    let mut acc = KahanSum::new();
    for k in lo..=hi {
        acc.add((d1.get(k) - d2.get(k)).abs());
    }
    let half = T::lit(0.5);
    TvInterval {
        value: half * acc.value(),
        slack: half * (d1.tail_mass() + d2.tail_mass()),
    }
}

/// Normalised histogram of integer samples.
pub fn empirical_dist<T: Real>(samples: &[i64]) -> Result<IntegerDist<T>> {
    let (Some(&lo), Some(&hi)) = (samples.iter().min(), samples.iter().max()) else {
        return Err(Error::Domain("empirical distribution of an empty sample".into()));
    };
    let width = (hi - lo) as usize + 1;
    if width > MAX_CONVOLUTION_LEN {
        return Err(Error::Resource(format!("sample range {width} too wide")));
    }
    let mut counts = vec![0_u64; width];
    for &s in samples {
        counts[(s - lo) as usize] += 1;
    }
    let n = T::from_usize(samples.len()).unwrap();
    let probs = counts
        .into_iter()
        .map(|c| T::from_u64(c).unwrap() / n)
        .collect();
    Ok(IntegerDist::from_parts(lo, probs, T::zero()))
}

/// Concentration threshold `3 sqrt(ln(2/δ) / (2n))` used to judge empirical
/// laws of `n` draws against an exact law.
pub fn concentration_threshold(n: usize, delta: f64) -> f64 {
    3.0 * ((2.0 / delta).ln() / (2.0 * n as f64)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dist(min: i64, p: &[f64]) -> IntegerDist<f64> {
        IntegerDist::new(min, p.to_vec(), 0.0).unwrap()
    }

    #[test]
    fn tv_of_identical_is_zero() {
        let d = dist(-1, &[0.2, 0.5, 0.3]);
        let tv = tv_distance(&d, &d);
        assert_eq!(tv.value, 0.0);
        assert_eq!(tv.slack, 0.0);
    }

    #[test]
    fn tv_of_disjoint_point_masses_is_one() {
        let tv = tv_distance(&IntegerDist::<f64>::point_mass(0), &IntegerDist::point_mass(1));
        assert_eq!((tv.value, tv.slack), (1.0, 0.0));
    }

    #[test]
    fn convolution_with_point_masses() {
        let d = dist(3, &[0.25, 0.5, 0.25]);
        let same = convolve(&d, &IntegerDist::point_mass(0)).unwrap();
        assert_eq!(same, d);
        let c = convolve(&IntegerDist::<f64>::point_mass(2), &IntegerDist::point_mass(-3)).unwrap();
        assert_eq!(c, IntegerDist::point_mass(-1));
    }

    #[test]
    fn negate_reflects_window() {
        let n = IntegerDist::<f64>::point_mass(3).negate();
        assert_eq!(n, IntegerDist::point_mass(-3));
        let d = dist(-2, &[0.1, 0.6, 0.3]);
        assert_eq!(d.negate().negate(), d);
        assert_eq!(d.negate().get(2), 0.1);
    }

    #[test]
    fn tail_masses_combine() {
        let a = IntegerDist::<f64>::new(0, vec![0.9], 0.1).unwrap();
        let b = IntegerDist::new(0, vec![0.8], 0.2).unwrap();
        let c = convolve(&a, &b).unwrap();
        assert!((c.window_mass() + c.tail_mass() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn fft_and_direct_paths_agree() {
        let a: Vec<f64> = (0..3000).map(|i| ((i as f64) * 0.37).sin().abs() + 1e-3).collect();
        let b: Vec<f64> = (0..2500).map(|i| ((i as f64) * 0.11).cos().abs() + 1e-3).collect();
        let sa: f64 = a.iter().sum();
        let sb: f64 = b.iter().sum();
        let a: Vec<f64> = a.iter().map(|x| x / sa).collect();
        let b: Vec<f64> = b.iter().map(|x| x / sb).collect();
        let direct = convolve_direct(&a, &b);
        let fft = convolve_fft(&a, &b);
        for (x, y) in direct.iter().zip(&fft) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn empirical_histogram() {
        let d: IntegerDist<f64> = empirical_dist(&[0]).unwrap();
        assert_eq!(d, IntegerDist::point_mass(0));
        let d: IntegerDist<f64> = empirical_dist(&[0, 0, 1, 1]).unwrap();
        assert_eq!(d.probs(), &[0.5, 0.5]);
        assert!(empirical_dist::<f64>(&[]).is_err());
    }

    #[test]
    fn rejects_invalid_entries() {
        assert!(IntegerDist::new(0, vec![-0.1, 1.1], 0.0).is_err());
        assert!(IntegerDist::new(0, vec![1.0], 1.0).is_err());
        assert!(IntegerDist::<f64>::new(0, vec![], 0.0).is_err());
    }

    #[test]
    fn size_cap_enforced() {
        let big = IntegerDist::from_parts(0, vec![0.0_f32; MAX_CONVOLUTION_LEN / 2 + 2], 0.0);
        assert!(matches!(convolve(&big, &big), Err(Error::Resource(_))));
    }
}
