//! Scalar special functions, elementary integer laws, and quadrature.

mod bessel;
mod quad;

pub use bessel::{bessel_i, ln_bessel_i, ln_bessel_i_scaled, ln_factorial, LogReal};
pub(crate) use bessel::{ln_bessel_i_scaled_unchecked, stirling_correction};
pub use quad::{integrate_halfline, integrate_unit, QuadEstimate, GK_MAX_DEPTH, GK_MAX_INTERVALS};
pub(crate) use quad::{integrate_nested, NestedIntegrand};

use crate::error::{domain, Result};
use crate::real::{KahanSum, Real};
use crate::tv::IntegerDist;

/// `ln P(Po(λ) = m)` without the cancellation of `m ln λ - λ - ln m!`.
fn ln_poisson_pmf<T: Real>(m: u64, lambda: T) -> T {
    if m < 20 {
        return T::from_u64(m).unwrap() * lambda.ln() - lambda - ln_factorial::<T>(m);
    }
    let mf = T::from_u64(m).unwrap();
    mf * ((lambda - mf) / mf).ln_1p() + (mf - lambda) - T::lit(0.5) * (T::TAU() * mf).ln()
        - stirling_correction::<T>(m)
}

/// Truncated `Po(λ)` table around the mode.
///
/// Each side of the window is extended until a geometric bound on the mass
/// beyond it drops below `tail_tol / 2`; probabilities come from ratio
/// recurrences out of the mode.
pub fn poisson_dist<T: Real>(lambda: T, tail_tol: T) -> Result<IntegerDist<T>> {
    if !(lambda >= T::zero()) || !lambda.is_finite() {
        return domain(format!("Poisson mean must be finite and >= 0, got {lambda}"));
    }
    if !(tail_tol > T::zero() && tail_tol < T::one()) {
        return domain(format!("tail tolerance must lie in (0, 1), got {tail_tol}"));
    }
    if lambda == T::zero() {
        return Ok(IntegerDist::point_mass(0));
    }
    let half_tol = tail_tol * T::lit(0.5);
    let mode = lambda.floor().to_u64().unwrap_or(0);
    let p_mode = ln_poisson_pmf(mode, lambda).exp();

    let mut lower = Vec::new();
    let mut p = p_mode;
    let mut j = mode;
    let lower_bound = loop {
        if j == 0 {
            break T::zero();
        }
        let jf = T::from_u64(j).unwrap();
        let next = p * jf / lambda;
        // mass below j: p_{j-1} (1 + r + r^2 + ...), r <= (j-1)/λ
        let r = (jf - T::one()) / lambda;
        let bound = next / (T::one() - r);
        if bound <= half_tol {
            break bound;
        }
        lower.push(next);
        p = next;
        j -= 1;
    };
    let lo = j;

    let mut upper = Vec::new();
    let mut p = p_mode;
    let mut j = mode;
    let upper_bound = loop {
        let jf = T::from_u64(j).unwrap();
        let next = p * lambda / (jf + T::one());
        let r = lambda / (jf + T::lit(2.0));
        let bound = next / (T::one() - r);
        if bound <= half_tol {
            break bound;
        }
        upper.push(next);
        p = next;
        j += 1;
    };

    lower.reverse();
    let mut probs = lower;
    probs.push(p_mode);
    probs.extend(upper);
    let captured = probs.iter().copied().collect::<KahanSum<T>>().value();
    let tail = (T::one() - captured)
        .max(T::zero())
        .min(lower_bound + upper_bound);
    Ok(IntegerDist::from_parts(lo as i64, probs, tail))
}

/// Exact `Bin(n, q)` on `{0, ..., n}`: survivors of `n` unit-rate deaths
/// observed with survival probability `q`.
pub fn binomial_thin_dist<T: Real>(n: u64, q: T) -> Result<IntegerDist<T>> {
    if !(q >= T::zero() && q <= T::one()) {
        return domain(format!("binomial probability must lie in [0, 1], got {q}"));
    }
    if n == 0 || q == T::zero() {
        return Ok(IntegerDist::point_mass(0));
    }
    if q == T::one() {
        return Ok(IntegerDist::point_mass(n as i64));
    }
    let nf = T::from_u64(n).unwrap();
    let mode = ((nf + T::one()) * q).floor().to_u64().unwrap_or(0).min(n);
    let odds = q / (T::one() - q);
    let mut probs = vec![T::zero(); n as usize + 1];
    let ln_mode = ln_factorial::<T>(n) - ln_factorial::<T>(mode) - ln_factorial::<T>(n - mode)
        + T::from_u64(mode).unwrap() * q.ln()
        + T::from_u64(n - mode).unwrap() * (-q).ln_1p();
    probs[mode as usize] = ln_mode.exp();
    for j in mode..n {
        let jf = T::from_u64(j).unwrap();
        probs[j as usize + 1] = probs[j as usize] * (nf - jf) / (jf + T::one()) * odds;
    }
    for j in (1..=mode).rev() {
        let jf = T::from_u64(j).unwrap();
        probs[j as usize - 1] = probs[j as usize] * jf / ((nf - jf + T::one()) * odds);
    }
    let total = probs.iter().copied().collect::<KahanSum<T>>().value();
    for p in &mut probs {
        *p = *p / total;
    }
    Ok(IntegerDist::from_parts(0, probs, T::zero()))
}
