//! Edge-count discrepancy between a random graph and a noisy observation of
//! it.
//!
//! Vertex pair `i` carries an edge with probability `p_i`; a true edge is
//! missed with probability `r_i` and a non-edge is reported with probability
//! `s_i`. The difference `U - V` of true and observed edge counts is a sum of
//! independent three-point variables with `P(+1) = p_i r_i` and
//! `P(-1) = (1 - p_i) s_i`.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::real::{KahanSum, Real};
use crate::skellam::SkellamParams;
use crate::tv::{convolve, tv_distance, BoundCheck, IntegerDist, TvInterval};

/// Largest model handled by the exact law.
pub const MAX_EXACT_PAIRS: usize = 100_000;

/// Tail tolerance of the Skellam table compared against the exact law.
pub const SKELLAM_TAIL_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NoisyGraphModel<T> {
    p: Vec<T>,
    r: Vec<T>,
    s: Vec<T>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ModelFile {
    Full { p: Vec<f64>, r: Vec<f64>, s: Vec<f64> },
    Homogeneous { n: usize, p: f64, r: f64, s: f64 },
}

impl<T: Real> NoisyGraphModel<T> {
    pub fn new(p: Vec<T>, r: Vec<T>, s: Vec<T>) -> Result<Self> {
        if p.is_empty() {
            return Err(Error::InvalidModel("model needs at least one vertex pair".into()));
        }
        if p.len() != r.len() || p.len() != s.len() {
            return Err(Error::InvalidModel(format!(
                "p, r, s must have equal lengths, got {}, {}, {}",
                p.len(),
                r.len(),
                s.len()
            )));
        }
        for (name, v) in [("p", &p), ("r", &r), ("s", &s)] {
            if let Some((i, x)) = v.iter().enumerate().find(|(_, x)| !(**x >= T::zero() && **x <= T::one())) {
                return Err(Error::InvalidModel(format!("{name}[{i}] = {x} is not a probability")));
            }
        }
        Ok(Self { p, r, s })
    }

    /// `n` pairs sharing the same `(p, r, s)`.
    pub fn homogeneous(n: usize, p: T, r: T, s: T) -> Result<Self> {
        Self::new(vec![p; n], vec![r; n], vec![s; n])
    }

    /// Parses `{"p": [...], "r": [...], "s": [...]}` or the homogeneous
    /// shorthand `{"n": .., "p": .., "r": .., "s": ..}`.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile =
            serde_json::from_str(text).map_err(|e| Error::Parse(format!("graph model: {e}")))?;
        let lift = |v: Vec<f64>| v.into_iter().map(T::lit).collect::<Vec<T>>();
        match file {
            ModelFile::Full { p, r, s } => Self::new(lift(p), lift(r), lift(s)),
            ModelFile::Homogeneous { n, p, r, s } => Self::homogeneous(n, T::lit(p), T::lit(r), T::lit(s)),
        }
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    /// `(p_i r_i, (1 - p_i) s_i)` for each pair.
    fn rates(&self) -> impl Iterator<Item = (T, T)> + '_ {
        self.p
            .iter()
            .zip(&self.r)
            .zip(&self.s)
            .map(|((&p, &r), &s)| (p * r, (T::one() - p) * s))
    }

    /// `(Σ p_i r_i, Σ s_i (1 - p_i))`.
    pub fn skellam_params(&self) -> SkellamParams<T> {
        let mut l1 = KahanSum::new();
        let mut l2 = KahanSum::new();
        for (a, b) in self.rates() {
            l1.add(a);
            l2.add(b);
        }
        SkellamParams::extended(l1.value(), l2.value()).expect("sums of probabilities are valid rates")
    }

    /// Exact law of `U - V`, by a balanced product tree of convolutions.
    pub fn edge_difference_dist(&self) -> Result<IntegerDist<T>> {
        if self.len() > MAX_EXACT_PAIRS {
            return Err(Error::Resource(format!(
                "exact law limited to {MAX_EXACT_PAIRS} vertex pairs, model has {}",
                self.len()
            )));
        }
        let mut layer: Vec<IntegerDist<T>> = self
            .rates()
            .map(|(up, down)| IntegerDist::new(-1, vec![down, T::one() - up - down, up], T::zero()))
            .collect::<Result<_>>()?;
        while layer.len() > 1 {
            layer = layer
                .par_chunks(2)
                .map(|pair| match pair {
                    [a, b] => convolve(a, b),
                    [a] => Ok(a.clone()),
                    _ => unreachable!(),
                })
                .collect::<Result<_>>()?;
        }
        Ok(layer.pop().expect("nonempty model").trimmed())
    }

    /// The bound with `log⁺` in place of `log`, and the printed `log` form.
    pub fn tv_bound(&self) -> GraphBound<T> {
        let mut sum = KahanSum::new();
        let mut sq = KahanSum::new();
        for (a, b) in self.rates() {
            sum.add(a + b);
            sq.add((a + b) * (a + b));
        }
        let (s, q) = (sum.value(), sq.value());
        if s == T::zero() {
            return GraphBound {
                bound: T::zero(),
                raw_log: T::zero(),
            };
        }
        let two = T::lit(2.0);
        let s2 = T::SQRT_2();
        let log = (s2 * s).ln();
        let with = |l: T| q * (two / (s * s) + two * s2 * l / s);
        GraphBound {
            bound: with(log.max(T::zero())),
            raw_log: with(log),
        }
    }

    /// `trials` draws of `U - V`.
    pub fn simulate<R: Rng + ?Sized>(&self, rng: &mut R, trials: usize) -> Vec<i64> {
        let p: Vec<f64> = self.p.iter().map(|v| v.as_f64()).collect();
        let r: Vec<f64> = self.r.iter().map(|v| v.as_f64()).collect();
        let s: Vec<f64> = self.s.iter().map(|v| v.as_f64()).collect();
        (0..trials)
            .map(|_| {
                let mut diff = 0_i64;
                for i in 0..p.len() {
                    let u = rng.random::<f64>() < p[i];
                    let v = if u {
                        rng.random::<f64>() >= r[i]
                    } else {
                        rng.random::<f64>() < s[i]
                    };
                    diff += u as i64 - v as i64;
                }
                diff
            })
            .collect()
    }

    /// Exact TV between the law of `U - V` and its Skellam approximation,
    /// checked against [`tv_bound`](Self::tv_bound).
    pub fn verify(&self) -> Result<GraphReport<T>> {
        let params = self.skellam_params();
        let exact = self.edge_difference_dist()?;
        let approx = params.to_dist(T::lit(SKELLAM_TAIL_TOL))?;
        let tv: TvInterval<T> = tv_distance(&exact, &approx);
        let bound = self.tv_bound();
        Ok(GraphReport {
            n: self.len(),
            lambda1: params.lambda1(),
            lambda2: params.lambda2(),
            degenerate: params.is_degenerate(),
            check: BoundCheck::new(tv, bound.bound),
            bound_raw_log: bound.raw_log,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GraphBound<T> {
    pub bound: T,
    /// The same expression with a plain (possibly negative) logarithm.
    pub raw_log: T,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GraphReport<T> {
    pub n: usize,
    pub lambda1: T,
    pub lambda2: T,
    /// A Skellam rate is zero and the approximation is a signed Poisson.
    pub degenerate: bool,
    #[serde(flatten)]
    pub check: BoundCheck<T>,
    pub bound_raw_log: T,
}

/// Verifies several models concurrently.
pub fn verify_batch<T: Real>(models: &[NoisyGraphModel<T>]) -> Vec<Result<GraphReport<T>>> {
    models.par_iter().map(|m| m.verify()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::stream_rng;

    fn two_pair() -> NoisyGraphModel<f64> {
        NoisyGraphModel::new(vec![0.5, 0.5], vec![0.2, 0.2], vec![0.1, 0.1]).unwrap()
    }

    #[test]
    fn parameters() {
        let m = NoisyGraphModel::new(vec![1.0], vec![0.0], vec![0.3]).unwrap();
        assert_eq!(m.skellam_params().lambda1(), 0.0);
        assert_eq!(m.skellam_params().lambda2(), 0.0);
        let p = two_pair().skellam_params();
        assert!((p.lambda1() - 0.2).abs() < 1e-15 && (p.lambda2() - 0.1).abs() < 1e-15);
        let h = NoisyGraphModel::<f64>::homogeneous(10, 0.4, 0.5, 0.25).unwrap().skellam_params();
        assert!((h.lambda1() - 2.0).abs() < 1e-14 && (h.lambda2() - 1.5).abs() < 1e-14);
    }

    #[test]
    fn exact_law_small_cases() {
        let m = NoisyGraphModel::new(vec![1.0], vec![1.0], vec![0.4]).unwrap();
        assert_eq!(m.edge_difference_dist().unwrap(), IntegerDist::point_mass(1));
        let m = NoisyGraphModel::new(vec![0.0], vec![0.7], vec![1.0]).unwrap();
        assert_eq!(m.edge_difference_dist().unwrap(), IntegerDist::point_mass(-1));
        let d = two_pair().edge_difference_dist().unwrap();
        assert_eq!((d.min_support(), d.max_support()), (-2, 2));
        assert!((d.get(2) - 0.01).abs() < 1e-15);
        assert!((d.get(-2) - 0.0025).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_models() {
        assert!(NoisyGraphModel::new(vec![0.5], vec![0.1, 0.2], vec![0.1]).is_err());
        assert!(NoisyGraphModel::new(vec![1.5], vec![0.1], vec![0.1]).is_err());
        assert!(NoisyGraphModel::<f64>::from_json(r#"{"p":[0.5],"r":[0.1]}"#).is_err());
        let m = NoisyGraphModel::<f64>::from_json(r#"{"n":3,"p":0.5,"r":0.1,"s":0.2}"#).unwrap();
        assert_eq!(m.len(), 3);
    }

    #[test]
    fn zero_noise_is_exact() {
        let m = NoisyGraphModel::new(vec![0.3, 0.9], vec![0.0, 0.0], vec![0.0, 0.0]).unwrap();
        let r = m.verify().unwrap();
        assert_eq!(r.check.tv.value, 0.0);
        assert_eq!(r.check.tv.slack, 0.0);
        assert!(r.check.satisfied);
        assert_eq!(r.check.ratio, 0.0);
    }

    #[test]
    fn simulation_is_reproducible() {
        let m = two_pair();
        let a = m.simulate(&mut stream_rng(3, 0), 50);
        let b = m.simulate(&mut stream_rng(3, 0), 50);
        assert_eq!(a, b);
        assert!(m.simulate(&mut stream_rng(3, 0), 0).is_empty());
        let sure = NoisyGraphModel::new(vec![1.0], vec![1.0], vec![0.0]).unwrap();
        assert!(sure.simulate(&mut stream_rng(3, 0), 20).iter().all(|&v| v == 1));
    }
}
