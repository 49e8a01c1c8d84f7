//! Grid sweeps over states with nested Fejér quadrature in `u = e^{-t}`.
//!
//! For a fixed row `y` and node `u`, the laws of all states `(x, y)`,
//! `x = 0, 1, ...`, come from one recurrence: adding a particle to the
//! first coordinate convolves with a `Bernoulli(u)` step, so
//! `L_{x+1} = (1 - u) L_x + u L_x(· - 1)`. Integrating `L_u` and `u L_u`
//! over `u` gives the moment vectors `M0`, `M1` from which every first and
//! second difference of `h` is a fixed stencil:
//!
//! | difference | kernel `g(k)`                        |
//! |------------|--------------------------------------|
//! | `Δ1`       | `M0(k-1) - M0(k)`                    |
//! | `Δ2`       | `M0(k+1) - M0(k)`                    |
//! | `Δ²11`     | `M1(k-2) - 2 M1(k-1) + M1(k)`        |
//! | `Δ²12`     | `2 M1(k) - M1(k-1) - M1(k+1)`        |
//! | `Δ²22`     | `M1(k+2) - 2 M1(k+1) + M1(k)`        |
//!
//! with `Δh(x, y) = -Σ_k f(k) g(k)`.

use rayon::prelude::*;
use serde::Serialize;

use super::{skellam_expectation, BivariateState, Difference, TestSet};
use crate::error::{domain, Result};
use crate::real::{KahanSum, Real};
use crate::skellam::SkellamParams;
use crate::special::{binomial_thin_dist, integrate_nested, poisson_dist, NestedIntegrand};

/// Largest Fejér rule tried before reporting non-convergence.
pub const MAX_FEJER_NODES: usize = 1 << 14;

const START_NODES: usize = 32;

/// Laws of the states `(0, y), ..., (max_x, y)` at one quadrature node, all
/// on windows starting at `-y - q2`.
struct RowSweep<T> {
    lambda1: T,
    lambda2: T,
    y: u64,
    max_x: usize,
    q1: usize,
    q2: usize,
    tau: T,
    s: Vec<T>,
    cur: Vec<T>,
    next: Vec<T>,
}

impl<T: Real> RowSweep<T> {
    fn new(params: &SkellamParams<T>, y: u64, max_x: usize, tau: T) -> Result<Self> {
        let reach = |lambda: T| -> Result<usize> {
            Ok(poisson_dist(lambda, tau * T::lit(0.5))?.max_support() as usize)
        };
        let q1 = reach(params.lambda1())?;
        let q2 = reach(params.lambda2())?;
        let base = y as usize + q1 + q2 + 1;
        Ok(Self {
            lambda1: params.lambda1(),
            lambda2: params.lambda2(),
            y,
            max_x,
            q1,
            q2,
            tau,
            s: vec![T::zero(); q1 + q2 + 1],
            cur: Vec::with_capacity(base + max_x),
            next: Vec::with_capacity(base + max_x),
        })
    }

    fn lo(&self) -> i64 {
        -(self.y as i64) - self.q2 as i64
    }

    fn base_len(&self) -> usize {
        self.y as usize + self.q1 + self.q2 + 1
    }

    /// Calls `visit(x, law)` for each state in the row; returns the mass
    /// missing from every window.
    fn sweep(&mut self, u: T, v: T, mut visit: impl FnMut(usize, &[T])) -> Result<T> {
        let half = self.tau * T::lit(0.5);
        let p1 = poisson_dist(self.lambda1 * v, half)?;
        let p2 = poisson_dist(self.lambda2 * v, half)?;
        let (t1, t2) = (p1.tail_mass(), p2.tail_mass());
        let mut tail = t1 + t2 - t1 * t2;

        self.s.iter_mut().for_each(|e| *e = T::zero());
        let (q1, q2) = (self.q1 as i64, self.q2 as i64);
        // mass beyond the common window is dropped and counted as tail
        let beyond = |d: &crate::tv::IntegerDist<T>, q: i64| {
            d.iter().filter(|(k, _)| *k > q).map(|(_, p)| p).collect::<KahanSum<T>>().value()
        };
        tail = tail + beyond(&p1, q1) + beyond(&p2, q2);
        for (j, b) in p2.iter().filter(|(j, _)| *j <= q2) {
            for (i, a) in p1.iter().filter(|(i, _)| *i <= q1) {
                let idx = (i - j + q2) as usize;
                self.s[idx] = self.s[idx] + a * b;
            }
        }

        let y = self.y as usize;
        let bin = binomial_thin_dist(self.y, u)?;
        self.cur.clear();
        self.cur.resize(self.base_len(), T::zero());
        for (m, &b) in bin.probs().iter().enumerate() {
            if b == T::zero() {
                continue;
            }
            for (sidx, &sv) in self.s.iter().enumerate() {
                let idx = sidx + y - m;
                self.cur[idx] = self.cur[idx] + sv * b;
            }
        }

        for x in 0..=self.max_x {
            visit(x, &self.cur);
            if x == self.max_x {
                break;
            }
            let n = self.cur.len();
            self.next.clear();
            self.next.push(v * self.cur[0]);
            for i in 1..n {
                self.next.push(v * self.cur[i] + u * self.cur[i - 1]);
            }
            self.next.push(u * self.cur[n - 1]);
            std::mem::swap(&mut self.cur, &mut self.next);
        }
        Ok(tail)
    }
}

fn l1_diff<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .map(|(p, q)| (*p - *q).abs())
        .collect::<KahanSum<T>>()
        .value()
}

/// Moment vectors `M0`, `M1` for one row of states.
struct KernelRow<T> {
    sweep: RowSweep<T>,
    offsets: Vec<usize>,
    m0f: Vec<T>,
    m0c: Vec<T>,
    m1f: Vec<T>,
    m1c: Vec<T>,
    tail_max: T,
}

impl<T: Real> KernelRow<T> {
    fn new(params: &SkellamParams<T>, y: u64, max_x: usize, tau: T) -> Result<Self> {
        let sweep = RowSweep::new(params, y, max_x, tau)?;
        let base = sweep.base_len();
        let mut offsets = Vec::with_capacity(max_x + 2);
        let mut total = 0;
        for x in 0..=max_x {
            offsets.push(total);
            total += base + x;
        }
        offsets.push(total);
        Ok(Self {
            sweep,
            offsets,
            m0f: vec![T::zero(); total],
            m0c: vec![T::zero(); total],
            m1f: vec![T::zero(); total],
            m1c: vec![T::zero(); total],
            tail_max: T::zero(),
        })
    }

    fn moments(&self, x: usize) -> (&[T], &[T]) {
        let r = self.offsets[x]..self.offsets[x + 1];
        (&self.m0f[r.clone()], &self.m1f[r])
    }
}

impl<T: Real> NestedIntegrand<T> for KernelRow<T> {
    fn reset(&mut self) {
        for buf in [&mut self.m0f, &mut self.m0c, &mut self.m1f, &mut self.m1c] {
            buf.iter_mut().for_each(|e| *e = T::zero());
        }
        self.tail_max = T::zero();
    }

    fn accumulate(&mut self, u: T, v: T, wf: T, wc: T) -> Result<()> {
        let Self {
            sweep,
            offsets,
            m0f,
            m0c,
            m1f,
            m1c,
            ..
        } = self;
        let uf = u * wf;
        let uc = u * wc;
        let coarse = wc != T::zero();
        let tail = sweep.sweep(u, v, |x, law| {
            let off = offsets[x];
            let end = off + law.len();
            for ((a0, a1), &p) in m0f[off..end].iter_mut().zip(&mut m1f[off..end]).zip(law) {
                *a0 = *a0 + wf * p;
                *a1 = *a1 + uf * p;
            }
            if coarse {
                for ((a0, a1), &p) in m0c[off..end].iter_mut().zip(&mut m1c[off..end]).zip(law) {
                    *a0 = *a0 + wc * p;
                    *a1 = *a1 + uc * p;
                }
            }
        })?;
        self.tail_max = self.tail_max.max(tail);
        Ok(())
    }

    fn discrepancy(&self) -> T {
        let mut worst = T::zero();
        for w in self.offsets.windows(2) {
            let r = w[0]..w[1];
            worst = worst
                .max(l1_diff(&self.m0f[r.clone()], &self.m0c[r.clone()]))
                .max(l1_diff(&self.m1f[r.clone()], &self.m1c[r]));
        }
        worst
    }
}

/// Kernel values for `diff` from the moment vectors on a window starting at
/// `lo`; returns the kernel's first support point and values.
fn stencil<T: Real>(diff: Difference, m0: &[T], m1: &[T], lo: i64) -> (i64, Vec<T>) {
    let at = |m: &[T], i: i64| -> T {
        if i < 0 || i >= m.len() as i64 {
            T::zero()
        } else {
            m[i as usize]
        }
    };
    let n = m0.len() as i64;
    let two = T::lit(2.0);
    // (first kernel index relative to lo, last index)
    let (a, b) = match diff {
        Difference::D1 => (0, n),
        Difference::D2 => (-1, n - 1),
        Difference::D11 => (0, n + 1),
        Difference::D12 => (-1, n),
        Difference::D22 => (-2, n - 1),
    };
    let vals = (a..=b)
        .map(|i| match diff {
            Difference::D1 => at(m0, i - 1) - at(m0, i),
            Difference::D2 => at(m0, i + 1) - at(m0, i),
            Difference::D11 => at(m1, i - 2) - two * at(m1, i - 1) + at(m1, i),
            Difference::D12 => two * at(m1, i) - at(m1, i - 1) - at(m1, i + 1),
            Difference::D22 => at(m1, i + 2) - two * at(m1, i + 1) + at(m1, i),
        })
        .collect();
    (lo + a, vals)
}

/// `max(Σ g⁺, Σ g⁻)`: the supremum of `|Σ_k f(k) g(k)|` over indicators `f`.
fn sign_sup<T: Real>(g: &[T]) -> T {
    let mut pos = KahanSum::new();
    let mut neg = KahanSum::new();
    for &v in g {
        if v > T::zero() {
            pos.add(v);
        } else {
            neg.add(-v);
        }
    }
    pos.value().max(neg.value())
}

/// Signed kernel `g` with `Δh_f(x, y) = -Σ_k f(k) g(k)` for every indicator `f`.
#[derive(Clone, Debug, Serialize)]
pub struct DifferenceKernel<T> {
    pub difference: Difference,
    pub state: BivariateState,
    pub min_support: i64,
    pub values: Vec<T>,
    pub quad_tol: T,
    /// Bound on the ℓ1 error of `values` from quadrature and truncation.
    pub error_bound: T,
}

impl<T: Real> DifferenceKernel<T> {
    pub fn get(&self, k: i64) -> T {
        let i = k - self.min_support;
        if i < 0 || i >= self.values.len() as i64 {
            T::zero()
        } else {
            self.values[i as usize]
        }
    }

    pub fn max_support(&self) -> i64 {
        self.min_support + self.values.len() as i64 - 1
    }

    /// `Δh_f` at the kernel's state.
    pub fn apply(&self, f: &TestSet) -> T {
        let s = (self.min_support..=self.max_support())
            .filter(|&k| f.contains(k))
            .map(|k| self.get(k))
            .collect::<KahanSum<T>>()
            .value();
        -s
    }

    /// `Σ_k g(k)`, zero up to rounding.
    pub fn total(&self) -> T {
        self.values.iter().copied().collect::<KahanSum<T>>().value()
    }

    /// Exact supremum of `|Δh_f|` over all indicator test functions.
    pub fn sup(&self) -> T {
        sign_sup(&self.values)
    }
}

fn check_tol<T: Real>(quad_tol: T) -> Result<()> {
    if !(quad_tol > T::zero()) {
        return domain(format!("quadrature tolerance must be positive, got {quad_tol}"));
    }
    Ok(())
}

fn converged_row<T: Real>(
    params: &SkellamParams<T>,
    y: u64,
    max_x: usize,
    quad_tol: T,
) -> Result<(KernelRow<T>, T)> {
    let mut row = KernelRow::new(params, y, max_x, quad_tol * T::lit(0.01))?;
    let disc = integrate_nested(&mut row, quad_tol, START_NODES, MAX_FEJER_NODES)?;
    Ok((row, disc))
}

/// Kernel of the difference `diff` of `h` at `state`.
pub fn difference_kernel<T: Real>(
    params: &SkellamParams<T>,
    diff: Difference,
    state: BivariateState,
    quad_tol: T,
) -> Result<DifferenceKernel<T>> {
    check_tol(quad_tol)?;
    let (row, disc) = converged_row(params, state.y, state.x as usize, quad_tol)?;
    let (m0, m1) = row.moments(state.x as usize);
    let (min_support, values) = stencil(diff, m0, m1, row.sweep.lo());
    Ok(DifferenceKernel {
        difference: diff,
        state,
        min_support,
        values,
        quad_tol,
        error_bound: T::lit(4.0) * (disc + row.tail_max),
    })
}

/// Supremum of one difference over the state grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FactorReport<T> {
    pub difference: Difference,
    pub value: T,
    /// Allowance for quadrature and truncation error in `value`.
    pub slack: T,
    pub argmax: BivariateState,
}

impl<T: Real> FactorReport<T> {
    pub fn upper(&self) -> T {
        self.value + self.slack
    }
}

/// Exact Stein factors of all five differences on one grid.
#[derive(Clone, Debug, Serialize)]
pub struct SteinFactors<T> {
    pub params: SkellamParams<T>,
    pub grid_max: u64,
    pub quad_tol: T,
    pub factors: Vec<FactorReport<T>>,
}

impl<T: Real> SteinFactors<T> {
    pub fn get(&self, diff: Difference) -> &FactorReport<T> {
        self.factors.iter().find(|f| f.difference == diff).expect("all differences computed")
    }
}

/// `max(10, ⌈λ1 + λ2 + 6 sqrt(λ1 + λ2)⌉)`.
pub fn default_state_grid<T: Real>(params: &SkellamParams<T>) -> u64 {
    let total = params.total().as_f64();
    let m = (total + 6.0 * total.sqrt()).ceil();
    (m as u64).max(10)
}

/// Exact `sup_f sup_{x, y <= grid_max} |Δh_f(x, y)|` for every difference.
pub fn exact_stein_factors<T: Real>(
    params: &SkellamParams<T>,
    grid_max: u64,
    quad_tol: T,
) -> Result<SteinFactors<T>> {
    check_tol(quad_tol)?;
    let rows: Vec<Vec<FactorReport<T>>> = (0..=grid_max)
        .into_par_iter()
        .map(|y| {
            let (row, disc) = converged_row(params, y, grid_max as usize, quad_tol)?;
            let slack = T::lit(2.0) * (disc + row.tail_max);
            let mut best: Vec<FactorReport<T>> = Difference::ALL
                .iter()
                .map(|&d| FactorReport {
                    difference: d,
                    value: T::neg_infinity(),
                    slack,
                    argmax: BivariateState::new(0, y),
                })
                .collect();
            for x in 0..=grid_max as usize {
                let (m0, m1) = row.moments(x);
                for rep in best.iter_mut() {
                    let (_, g) = stencil(rep.difference, m0, m1, 0);
                    let s = sign_sup(&g);
                    if s > rep.value {
                        rep.value = s;
                        rep.argmax = BivariateState::new(x as u64, y);
                    }
                }
            }
            Ok(best)
        })
        .collect::<Result<_>>()?;
    let mut factors = rows[0].clone();
    for row in &rows[1..] {
        for (acc, r) in factors.iter_mut().zip(row) {
            if r.value > acc.value {
                acc.value = r.value;
                acc.argmax = r.argmax;
            }
            acc.slack = acc.slack.max(r.slack);
        }
    }
    Ok(SteinFactors {
        params: *params,
        grid_max,
        quad_tol,
        factors,
    })
}

/// One entry of [`exact_stein_factors`].
pub fn exact_stein_factor<T: Real>(
    params: &SkellamParams<T>,
    diff: Difference,
    grid_max: u64,
    quad_tol: T,
) -> Result<FactorReport<T>> {
    Ok(*exact_stein_factors(params, grid_max, quad_tol)?.get(diff))
}

/// `h_f` on one row of states.
struct SolutionRow<T> {
    sweep: RowSweep<T>,
    indicator: Vec<T>,
    target: T,
    fine: Vec<T>,
    coarse: Vec<T>,
}

impl<T: Real> NestedIntegrand<T> for SolutionRow<T> {
    fn reset(&mut self) {
        self.fine.iter_mut().for_each(|e| *e = T::zero());
        self.coarse.iter_mut().for_each(|e| *e = T::zero());
    }

    fn accumulate(&mut self, u: T, v: T, wf: T, wc: T) -> Result<()> {
        let Self {
            sweep,
            indicator,
            target,
            fine,
            coarse,
        } = self;
        sweep.sweep(u, v, |x, law| {
            let ef = law
                .iter()
                .zip(indicator.iter())
                .map(|(p, i)| *p * *i)
                .collect::<KahanSum<T>>()
                .value();
            let val = (ef - *target) / u;
            fine[x] = fine[x] + wf * val;
            coarse[x] = coarse[x] + wc * val;
        })?;
        Ok(())
    }

    fn discrepancy(&self) -> T {
        self.fine
            .iter()
            .zip(&self.coarse)
            .map(|(a, b)| (*a - *b).abs())
            .fold(T::zero(), T::max)
    }
}

/// `h_f(x, y)` for all `x <= max_x`, `y <= max_y`.
#[derive(Clone, Debug, Serialize)]
pub struct SolutionGrid<T> {
    pub max_x: u64,
    pub max_y: u64,
    values: Vec<T>,
}

impl<T: Real> SolutionGrid<T> {
    pub fn get(&self, x: u64, y: u64) -> Option<T> {
        (x <= self.max_x && y <= self.max_y).then(|| self.values[(y * (self.max_x + 1) + x) as usize])
    }
}

/// The Stein solution on a rectangle of states, from the same integral
/// representation as [`stein_solution`](super::stein_solution) but with one
/// nested Fejér pass per row.
pub fn stein_solution_grid<T: Real>(
    params: &SkellamParams<T>,
    f: &TestSet,
    max_x: u64,
    max_y: u64,
    quad_tol: T,
) -> Result<SolutionGrid<T>> {
    check_tol(quad_tol)?;
    let width = (max_x + 1) as usize;
    if f.is_trivial() {
        return Ok(SolutionGrid {
            max_x,
            max_y,
            values: vec![T::zero(); width * (max_y + 1) as usize],
        });
    }
    let tau = (quad_tol * T::lit(1e-4)).max(T::epsilon() * T::lit(16.0));
    let target = skellam_expectation(params, f, tau)?;
    let rows: Vec<Vec<T>> = (0..=max_y)
        .into_par_iter()
        .map(|y| {
            let sweep = RowSweep::new(params, y, max_x as usize, tau)?;
            let lo = sweep.lo();
            let len = sweep.base_len() + max_x as usize;
            let indicator = (0..len as i64)
                .map(|i| if f.contains(lo + i) { T::one() } else { T::zero() })
                .collect();
            let mut row = SolutionRow {
                sweep,
                indicator,
                target,
                fine: vec![T::zero(); width],
                coarse: vec![T::zero(); width],
            };
            integrate_nested(&mut row, quad_tol, START_NODES, MAX_FEJER_NODES)?;
            Ok(row.fine.into_iter().map(|v| -v).collect())
        })
        .collect::<Result<_>>()?;
    Ok(SolutionGrid {
        max_x,
        max_y,
        values: rows.concat(),
    })
}
