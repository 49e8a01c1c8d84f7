//! Haar coefficients of a Poisson signal observed through a one-bin
//! spillover channel.
//!
//! Bin `i` holds `X_i ~ Po(f_i)`. Each particle is recorded one bin lower
//! with probability `p`; particles leaving bin 0 are lost. A coefficient is
//! the unnormalised difference `P·X - N·X` over disjoint windows `P`, `N`.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::real::{KahanSum, Real};
use crate::sampling::{binomial_draw, poisson_draw};
use crate::skellam::SkellamParams;
use crate::tv::{tv_distance, BoundCheck, TvInterval};

/// Tail tolerance of the Skellam tables compared in [`HaarSpilloverModel::verify`].
pub const SKELLAM_TAIL_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HaarSpilloverModel<T> {
    f: Vec<T>,
    pos: Vec<bool>,
    neg: Vec<bool>,
    p: T,
}

/// Left and right halves of the dyadic window
/// `[location 2^scale, (location + 1) 2^scale)`.
pub fn haar_windows(n: usize, scale: u32, location: usize) -> Result<(Vec<bool>, Vec<bool>)> {
    if scale == 0 || scale >= usize::BITS {
        return Err(Error::Domain(format!("scale must be between 1 and {}, got {scale}", usize::BITS - 1)));
    }
    let width = 1_usize << scale;
    let start = location
        .checked_mul(width)
        .filter(|s| s + width <= n)
        .ok_or_else(|| Error::Domain(format!("window {location} at scale {scale} exceeds {n} bins")))?;
    let half = width / 2;
    let pos = (0..n).map(|i| i >= start && i < start + half).collect();
    let neg = (0..n).map(|i| i >= start + half && i < start + width).collect();
    Ok((pos, neg))
}

/// Newline-separated nonnegative intensities; blank lines and `#` comments
/// are skipped.
pub fn parse_signal<T: Real>(text: &str) -> Result<Vec<T>> {
    let mut out = Vec::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let v: f64 = line
            .parse()
            .map_err(|_| Error::Parse(format!("line {}: {line:?} is not a number", no + 1)))?;
        if !(v >= 0.0) || !v.is_finite() {
            return Err(Error::InvalidModel(format!("line {}: intensity {v} must be finite and >= 0", no + 1)));
        }
        out.push(T::lit(v));
    }
    if out.is_empty() {
        return Err(Error::InvalidModel("signal has no bins".into()));
    }
    Ok(out)
}

fn dot<T: Real>(mask: &[bool], f: impl Iterator<Item = T>) -> T {
    mask.iter()
        .zip(f)
        .filter(|(m, _)| **m)
        .map(|(_, v)| v)
        .collect::<KahanSum<T>>()
        .value()
}

impl<T: Real> HaarSpilloverModel<T> {
    pub fn new(f: Vec<T>, pos: Vec<bool>, neg: Vec<bool>, p: T) -> Result<Self> {
        let n = f.len();
        if n == 0 || pos.len() != n || neg.len() != n {
            return Err(Error::InvalidModel(format!(
                "signal and windows must share a nonzero length, got {n}, {}, {}",
                pos.len(),
                neg.len()
            )));
        }
        if let Some((i, v)) = f.iter().enumerate().find(|(_, v)| !(**v >= T::zero()) || !v.is_finite()) {
            return Err(Error::InvalidModel(format!("f[{i}] = {v} must be finite and >= 0")));
        }
        if let Some(i) = (0..n).find(|&i| pos[i] && neg[i]) {
            return Err(Error::InvalidModel(format!("bin {i} is in both windows")));
        }
        if !(p >= T::zero() && p <= T::one()) {
            return Err(Error::InvalidModel(format!("spillover probability {p} outside [0, 1]")));
        }
        Ok(Self { f, pos, neg, p })
    }

    /// Model on the dyadic window at `(scale, location)`.
    pub fn dyadic(f: Vec<T>, scale: u32, location: usize, p: T) -> Result<Self> {
        let (pos, neg) = haar_windows(f.len(), scale, location)?;
        Self::new(f, pos, neg, p)
    }

    pub fn signal(&self) -> &[T] {
        &self.f
    }

    pub fn spillover(&self) -> T {
        self.p
    }

    /// `f^{(-1)}_i = f_{i+1}`, zero past the last bin.
    fn shifted(&self) -> impl Iterator<Item = T> + '_ {
        self.f.iter().skip(1).copied().chain(std::iter::once(T::zero()))
    }

    /// `(P·f, N·f, P·f^{(-1)}, N·f^{(-1)})`.
    fn dots(&self) -> (T, T, T, T) {
        (
            dot(&self.pos, self.f.iter().copied()),
            dot(&self.neg, self.f.iter().copied()),
            dot(&self.pos, self.shifted()),
            dot(&self.neg, self.shifted()),
        )
    }

    /// `(P·f, N·f)`.
    pub fn true_coeff_params(&self) -> SkellamParams<T> {
        let (pf, nf, _, _) = self.dots();
        SkellamParams::extended(pf, nf).expect("nonnegative signal")
    }

    /// `((1-p) P·f + p P·f^{(-1)}, (1-p) N·f + p N·f^{(-1)})`, evaluated as
    /// `P·f + p (P·f^{(-1)} - P·f)` so that equal dot products give equal
    /// rates exactly.
    pub fn observed_coeff_params(&self) -> SkellamParams<T> {
        let (pf, nf, ps, ns) = self.dots();
        let mix = |a: T, b: T| (a + self.p * (b - a)).max(T::zero());
        SkellamParams::extended(mix(pf, ps), mix(nf, ns)).expect("nonnegative signal")
    }

    /// `sqrt(2p² / (e max(P·f, N·f))) (|P·f - P·f^{(-1)}| + |N·f - N·f^{(-1)}|)`.
    ///
    /// Zero when `p = 0` or both shift differences vanish; `+inf` when the
    /// maximum is zero while a shift difference is not.
    pub fn tv_bound(&self) -> T {
        let (pf, nf, ps, ns) = self.dots();
        let spread = (pf - ps).abs() + (nf - ns).abs();
        if self.p == T::zero() || spread == T::zero() {
            return T::zero();
        }
        let m = pf.max(nf);
        if m == T::zero() {
            return T::infinity();
        }
        (T::lit(2.0) * self.p * self.p / (T::E() * m)).sqrt() * spread
    }

    /// Exact TV between the observed and true coefficient laws.
    pub fn tv_observed_vs_true(&self) -> Result<TvInterval<T>> {
        let truth = self.true_coeff_params();
        let observed = self.observed_coeff_params();
        if truth == observed {
            return Ok(TvInterval {
                value: T::zero(),
                slack: T::zero(),
            });
        }
        let tol = T::lit(SKELLAM_TAIL_TOL);
        Ok(tv_distance(&observed.to_dist(tol)?, &truth.to_dist(tol)?))
    }

    /// `trials` draws of `(true coefficient, observed coefficient)`.
    pub fn simulate_spillover<R: Rng + ?Sized>(&self, rng: &mut R, trials: usize) -> (Vec<i64>, Vec<i64>) {
        let n = self.f.len();
        let f: Vec<f64> = self.f.iter().map(|v| v.as_f64()).collect();
        let p = self.p.as_f64();
        let sign = |i: usize| -> i64 {
            if self.pos[i] {
                1
            } else if self.neg[i] {
                -1
            } else {
                0
            }
        };
        let mut truth = Vec::with_capacity(trials);
        let mut observed = Vec::with_capacity(trials);
        for _ in 0..trials {
            let (mut t, mut o) = (0_i64, 0_i64);
            for i in 0..n {
                let x = poisson_draw(rng, f[i]);
                let moved = binomial_draw(rng, x, p);
                t += sign(i) * x as i64;
                o += sign(i) * (x - moved) as i64;
                if i > 0 {
                    o += sign(i - 1) * moved as i64;
                }
            }
            truth.push(t);
            observed.push(o);
        }
        (truth, observed)
    }

    pub fn verify(&self) -> Result<HaarReport<T>> {
        let tv = self.tv_observed_vs_true()?;
        let bound = self.tv_bound();
        Ok(HaarReport {
            true_params: self.true_coeff_params(),
            observed_params: self.observed_coeff_params(),
            p: self.p,
            bound_is_sentinel: bound.is_infinite(),
            check: BoundCheck::new(tv, bound),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HaarReport<T> {
    pub true_params: SkellamParams<T>,
    pub observed_params: SkellamParams<T>,
    pub p: T,
    /// The bound is infinite because both windows carry zero intensity.
    pub bound_is_sentinel: bool,
    #[serde(flatten)]
    pub check: BoundCheck<T>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SweepEntry<T> {
    pub scale: u32,
    pub location: usize,
    #[serde(flatten)]
    pub report: HaarReport<T>,
}

/// Verifies every dyadic window of `signal` at the given scales.
pub fn sweep<T: Real>(signal: &[T], scales: &[u32], p: T) -> Result<Vec<SweepEntry<T>>> {
    let n = signal.len();
    let jobs: Vec<(u32, usize)> = scales
        .iter()
        .flat_map(|&s| {
            let count = if s == 0 || s >= usize::BITS { 0 } else { n >> s };
            (0..count).map(move |l| (s, l))
        })
        .collect();
    jobs.par_iter()
        .map(|&(scale, location)| {
            let m = HaarSpilloverModel::dyadic(signal.to_vec(), scale, location, p)?;
            Ok(SweepEntry {
                scale,
                location,
                report: m.verify()?,
            })
        })
        .collect()
}
