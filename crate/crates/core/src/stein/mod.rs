//! Stein's method for Skellam approximation through the bivariate
//! immigration-death process.
//!
//! For a test set `A` and `f = 1_A` applied to `x - y`, the Stein equation
//! `𝒜h(x, y) = f(x - y) - Sk{f}` is solved by
//! `h(x, y) = -∫_0^∞ (E f(Z_{x,y}(t)) - Sk{f}) dt`, where the difference
//! coordinate of `Z_{x,y}(t)` is `Bin(x, u) - Bin(y, u) + Po(λ1 (1 - u))
//! - Po(λ2 (1 - u))` with `u = e^{-t}`.

mod bounds;
mod engine;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::real::{KahanSum, Real};
use crate::skellam::SkellamParams;
use crate::special::{binomial_thin_dist, integrate_halfline, poisson_dist};
use crate::tv::{convolve, IntegerDist};

pub use bounds::{
    bound_first_diff, bound_first_diff_integral, bound_relaxed, bound_second_diff, first_diff_asymptote,
    prior_bound_comparison, skellam_second_diff_sum, IntegralForm, SecondDiffSum,
};
pub use engine::{
    default_state_grid, difference_kernel, exact_stein_factor, exact_stein_factors, stein_solution_grid,
    DifferenceKernel, FactorReport, SteinFactors, MAX_FEJER_NODES,
};

/// Default absolute quadrature tolerance.
pub const DEFAULT_QUAD_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct BivariateState {
    pub x: u64,
    pub y: u64,
}

impl BivariateState {
    pub fn new(x: u64, y: u64) -> Self {
        Self { x, y }
    }
}

impl fmt::Display for BivariateState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// A set `A ⊂ ℤ`; the test function is its indicator.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TestSet {
    All,
    Empty,
    AtLeast { a: i64 },
    AtMost { a: i64 },
    /// Explicit members, all inside `lo..=hi`.
    Finite { members: BTreeSet<i64>, lo: i64, hi: i64 },
}

impl TestSet {
    pub fn finite(members: impl IntoIterator<Item = i64>) -> Self {
        let members: BTreeSet<i64> = members.into_iter().collect();
        match (members.first(), members.last()) {
            (Some(&lo), Some(&hi)) => TestSet::Finite { members, lo, hi },
            _ => TestSet::Empty,
        }
    }

    /// Explicit set with a declared window that must contain every member.
    pub fn finite_in(members: impl IntoIterator<Item = i64>, lo: i64, hi: i64) -> Result<Self> {
        let members: BTreeSet<i64> = members.into_iter().collect();
        if lo > hi || members.iter().any(|&m| m < lo || m > hi) {
            return domain(format!("set members must lie in [{lo}, {hi}]"));
        }
        Ok(TestSet::Finite { members, lo, hi })
    }

    pub fn contains(&self, k: i64) -> bool {
        match self {
            TestSet::All => true,
            TestSet::Empty => false,
            TestSet::AtLeast { a } => k >= *a,
            TestSet::AtMost { a } => k <= *a,
            TestSet::Finite { members, .. } => members.contains(&k),
        }
    }

    /// Sets whose Stein solution vanishes identically.
    pub fn is_trivial(&self) -> bool {
        match self {
            TestSet::All | TestSet::Empty => true,
            TestSet::Finite { members, .. } => members.is_empty(),
            _ => false,
        }
    }

    /// `E 1_A(W)` over the window of `d`.
    pub fn expectation<T: Real>(&self, d: &IntegerDist<T>) -> T {
        d.mass_where(|k| self.contains(k))
    }
}

impl fmt::Display for TestSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TestSet::All => write!(f, "all"),
            TestSet::Empty => write!(f, "{{}}"),
            TestSet::AtLeast { a } => write!(f, "k>={a}"),
            TestSet::AtMost { a } => write!(f, "k<={a}"),
            TestSet::Finite { members, .. } => {
                let items: Vec<String> = members.iter().map(|m| m.to_string()).collect();
                write!(f, "{{{}}}", items.join(","))
            }
        }
    }
}

/// Grammar: `k>=a`, `k<=a`, `{a,b,c}` (whitespace ignored), plus `all`.
impl FromStr for TestSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let bad = || Error::Parse(format!("cannot parse set spec {s:?}; expected k>=a, k<=a or {{a,b,...}}"));
        let int = |t: &str| t.parse::<i64>().map_err(|_| bad());
        if compact == "all" {
            Ok(TestSet::All)
        } else if let Some(rest) = compact.strip_prefix("k>=") {
            Ok(TestSet::AtLeast { a: int(rest)? })
        } else if let Some(rest) = compact.strip_prefix("k<=") {
            Ok(TestSet::AtMost { a: int(rest)? })
        } else if let Some(inner) = compact.strip_prefix('{').and_then(|r| r.strip_suffix('}')) {
            if inner.is_empty() {
                return Ok(TestSet::Empty);
            }
            let members = inner.split(',').map(int).collect::<Result<Vec<_>>>()?;
            Ok(TestSet::finite(members))
        } else {
            Err(bad())
        }
    }
}

/// `(𝒜h)(x, y)` for the bivariate immigration-death generator. `h` is never
/// evaluated at negative coordinates.
pub fn generator_apply<T: Real>(
    mut h: impl FnMut(u64, u64) -> T,
    params: &SkellamParams<T>,
    state: BivariateState,
) -> T {
    let BivariateState { x, y } = state;
    let centre = h(x, y);
    let mut acc = params.lambda1() * (h(x + 1, y) - centre) + params.lambda2() * (h(x, y + 1) - centre);
    if x > 0 {
        acc = acc + T::from_u64(x).unwrap() * (h(x - 1, y) - centre);
    }
    if y > 0 {
        acc = acc + T::from_u64(y).unwrap() * (h(x, y - 1) - centre);
    }
    acc
}

/// Law of the difference coordinate at time `t` started from `state`.
pub fn intermediate_law<T: Real>(
    state: BivariateState,
    params: &SkellamParams<T>,
    t: T,
    tail_tol: T,
) -> Result<IntegerDist<T>> {
    if !(t > T::zero()) {
        return domain(format!("time must be positive, got {t}"));
    }
    let u = (-t).exp();
    let v = -(-t).exp_m1();
    law_at(state, params, u, v, tail_tol)
}

/// Same law parametrised by `u = e^{-t}` and `v = 1 - u`.
pub(crate) fn law_at<T: Real>(
    state: BivariateState,
    params: &SkellamParams<T>,
    u: T,
    v: T,
    tail_tol: T,
) -> Result<IntegerDist<T>> {
    let half = tail_tol * T::lit(0.5);
    let pos = poisson_dist(params.lambda1() * v, half)?;
    let neg = poisson_dist(params.lambda2() * v, half)?.negate();
    let bx = binomial_thin_dist(state.x, u)?;
    let by = binomial_thin_dist(state.y, u)?.negate();
    convolve(&convolve(&bx, &by)?, &convolve(&pos, &neg)?)
}

/// `Sk{f}` with the table accurate to `tail_tol`.
pub(crate) fn skellam_expectation<T: Real>(params: &SkellamParams<T>, f: &TestSet, tail_tol: T) -> Result<T> {
    Ok(f.expectation(&params.to_dist(tail_tol)?))
}

/// `h_f(x, y)` by adaptive Gauss-Kronrod quadrature of the integral
/// representation, to absolute error `quad_tol`.
pub fn stein_solution<T: Real>(
    params: &SkellamParams<T>,
    f: &TestSet,
    state: BivariateState,
    quad_tol: T,
) -> Result<T> {
    if !(quad_tol > T::zero()) {
        return domain(format!("quadrature tolerance must be positive, got {quad_tol}"));
    }
    if f.is_trivial() {
        return Ok(T::zero());
    }
    let tail = (quad_tol * T::lit(1e-4)).max(T::epsilon() * T::lit(16.0));
    let target = skellam_expectation(params, f, tail)?;
    let mut failure = None;
    let est = integrate_halfline(
        |t: T| {
            let u = (-t).exp();
            let v = -(-t).exp_m1();
            match law_at(state, params, u, v, tail) {
                Ok(law) => f.expectation(&law) - target,
                Err(e) => {
                    failure.get_or_insert(e);
                    T::zero()
                }
            }
        },
        quad_tol,
    )?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(-est.value)
}

/// Expectation of `g(X, Y)` under independent `Po(λ1) ⊗ Po(λ2)` truncated to
/// windows with tail `tail_tol` each; returns the sum and the neglected mass.
pub fn bivariate_poisson_expectation<T: Real>(
    params: &SkellamParams<T>,
    tail_tol: T,
    mut g: impl FnMut(u64, u64) -> T,
) -> Result<(T, T)> {
    let px = poisson_dist(params.lambda1(), tail_tol)?;
    let py = poisson_dist(params.lambda2(), tail_tol)?;
    let mut acc = KahanSum::new();
    for (x, wx) in px.iter() {
        for (y, wy) in py.iter() {
            acc.add(wx * wy * g(x as u64, y as u64));
        }
    }
    let (tx, ty) = (px.tail_mass(), py.tail_mass());
    Ok((acc.value(), tx + ty - tx * ty))
}

/// Which finite difference of `h`: `Δ1`, `Δ2`, `Δ²11`, `Δ²12`, `Δ²22`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Difference {
    D1,
    D2,
    D11,
    D12,
    D22,
}

impl Difference {
    pub const ALL: [Difference; 5] = [Self::D1, Self::D2, Self::D11, Self::D12, Self::D22];

    /// From an order and 1-based coordinates; `Δ²21 = Δ²12`.
    pub fn new(order: u8, coords: &[u8]) -> Result<Self> {
        match (order, coords) {
            (1, [1]) => Ok(Self::D1),
            (1, [2]) => Ok(Self::D2),
            (2, [1, 1]) => Ok(Self::D11),
            (2, [1, 2]) | (2, [2, 1]) => Ok(Self::D12),
            (2, [2, 2]) => Ok(Self::D22),
            _ => domain(format!("unsupported difference order {order} with coordinates {coords:?}")),
        }
    }

    pub fn order(self) -> u8 {
        match self {
            Self::D1 | Self::D2 => 1,
            _ => 2,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Self::D1 => "1",
            Self::D2 => "2",
            Self::D11 => "11",
            Self::D12 => "12",
            Self::D22 => "22",
        }
    }

    /// Applies the difference to a function on states.
    pub fn apply<T: Real>(self, mut h: impl FnMut(u64, u64) -> T, s: BivariateState) -> T {
        let BivariateState { x, y } = s;
        let two = T::lit(2.0);
        match self {
            Self::D1 => h(x + 1, y) - h(x, y),
            Self::D2 => h(x, y + 1) - h(x, y),
            Self::D11 => h(x + 2, y) - two * h(x + 1, y) + h(x, y),
            Self::D12 => h(x + 1, y + 1) - h(x + 1, y) - h(x, y + 1) + h(x, y),
            Self::D22 => h(x, y + 2) - two * h(x, y + 1) + h(x, y),
        }
    }
}

impl fmt::Display for Difference {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Δ{}", self.label())
    }
}
