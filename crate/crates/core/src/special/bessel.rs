//! Modified Bessel functions of the first kind, integer order.
//!
//! Everything is computed in log form of the exponentially scaled function
//! `e^{-x} I_k(x)`, which stays representable for every argument the Skellam
//! code can produce. Three regimes:
//!
//! * `x <= 30`: power series, summed with all-positive terms.
//! * `x > 30`, `|k| < 100`: Miller backward recurrence on the ratios
//!   `I_{j+1}/I_j`, normalised with `sum_j e^{-x} I_j(x) = 1`.
//! * `x > 30`, `|k| >= 100`: Debye uniform asymptotic expansion.
//!
//! The Miller start index depends on `x` only, so every order below the
//! switch sees bit-identical ratios for a given argument.

use std::sync::OnceLock;

use crate::error::{domain, Error, Result};
use crate::real::{KahanSum, Real};

const SERIES_MAX_X: f64 = 30.0;
const DEBYE_MIN_ORDER: u64 = 100;
const DEBYE_TERMS: usize = 11;

/// Natural logarithm of a nonnegative quantity. `-inf` encodes zero.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct LogReal<T> {
    pub log_magnitude: T,
}

impl<T: Real> LogReal<T> {
    pub fn zero() -> Self {
        Self {
            log_magnitude: T::neg_infinity(),
        }
    }

    pub fn one() -> Self {
        Self {
            log_magnitude: T::zero(),
        }
    }

    pub fn from_log(log_magnitude: T) -> Self {
        Self { log_magnitude }
    }

    /// `v` must be nonnegative.
    pub fn from_value(v: T) -> Self {
        Self {
            log_magnitude: v.ln(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.log_magnitude == T::neg_infinity()
    }

    pub fn value(self) -> T {
        self.log_magnitude.exp()
    }
}

impl<T: Real> std::ops::Mul for LogReal<T> {
    type Output = Self;

    fn mul(self, rhs: Self) -> Self {
        Self {
            log_magnitude: self.log_magnitude + rhs.log_magnitude,
        }
    }
}

/// `ln(n!)`.
pub fn ln_factorial<T: Real>(n: u64) -> T {
    if n < 20 {
        let mut prod = T::one();
        for i in 2..=n {
            prod = prod * T::from_u64(i).unwrap();
        }
        return prod.ln();
    }
    let x = T::from_u64(n).unwrap();
    x * x.ln() - x + T::lit(0.5) * (T::TAU() * x).ln() + stirling_correction(n)
}

/// `ln(n!) - (n ln n - n + ½ ln(2πn))` for `n >= 20`; truncation error below
/// `1/(1188 n^9)`.
pub(crate) fn stirling_correction<T: Real>(n: u64) -> T {
    debug_assert!(n >= 20);
    let inv = T::from_u64(n).unwrap().recip();
    let inv2 = inv * inv;
    inv * (T::lit(1.0 / 12.0)
        - inv2
            * (T::lit(1.0 / 360.0)
                - inv2 * (T::lit(1.0 / 1260.0) - inv2 * T::lit(1.0 / 1680.0))))
}

/// `ln(e^{-x} I_k(x))`.
pub fn ln_bessel_i_scaled<T: Real>(k: i64, x: T) -> Result<LogReal<T>> {
    if !(x >= T::zero()) || !x.is_finite() {
        return domain(format!("bessel_i requires finite x >= 0, got {x}"));
    }
    Ok(LogReal::from_log(ln_bessel_i_scaled_unchecked(k, x)))
}

/// `ln I_k(x)` (unscaled), as a [`LogReal`].
pub fn ln_bessel_i<T: Real>(k: i64, x: T) -> Result<LogReal<T>> {
    let scaled = ln_bessel_i_scaled(k, x)?;
    Ok(LogReal::from_log(scaled.log_magnitude + x))
}

/// `I_k(x)`, or `e^{-x} I_k(x)` when `scaled` is set.
pub fn bessel_i<T: Real>(k: i64, x: T, scaled: bool) -> Result<T> {
    let ls = ln_bessel_i_scaled(k, x)?;
    if scaled {
        return Ok(ls.value());
    }
    let v = (ls.log_magnitude + x).exp();
    if v.is_infinite() {
        return Err(Error::Overflow(format!(
            "I_{k}({x}) exceeds the floating point range; use the scaled form"
        )));
    }
    Ok(v)
}

pub(crate) fn ln_bessel_i_scaled_unchecked<T: Real>(k: i64, x: T) -> T {
    let order = k.unsigned_abs();
    if x == T::zero() {
        return if order == 0 {
            T::zero()
        } else {
            T::neg_infinity()
        };
    }
    if x <= T::lit(SERIES_MAX_X) {
        ln_series(order, x) - x
    } else if order >= DEBYE_MIN_ORDER {
        ln_debye_scaled(order, x)
    } else {
        ln_miller_scaled(order, x)
    }
}

/// `ln I_k(x)` from `(x/2)^k / k! * sum_m (x^2/4)^m / (m! (k+1)_m)`.
fn ln_series<T: Real>(order: u64, x: T) -> T {
    let q = x * x * T::lit(0.25);
    let kk = T::from_u64(order).unwrap();
    let mut term = T::one();
    let mut sum = T::one();
    let mut m = T::zero();
    for _ in 0..1000 {
        m = m + T::one();
        term = term * q / (m * (m + kk));
        sum = sum + term;
        if term <= sum * T::epsilon() * T::lit(0.25) {
            break;
        }
    }
    kk * (x * T::lit(0.5)).ln() - ln_factorial::<T>(order) + sum.ln()
}

fn miller_start<T: Real>(x: T) -> usize {
    let pad = (T::lit(12.0) * x.sqrt()).ceil().to_usize().unwrap_or(usize::MAX / 4);
    DEBYE_MIN_ORDER as usize + 60 + pad
}

fn ln_miller_scaled<T: Real>(order: u64, x: T) -> T {
    let n = miller_start(x);
    let two = T::lit(2.0);
    // Start from the Amos-type estimate r_N ~ x / (N + 1 + sqrt((N+1)^2 + x^2)).
    let nf = T::from_usize(n + 1).unwrap();
    let mut r = x / (nf + (nf * nf + x * x).sqrt());
    // ratios[j] = I_{j+1}(x) / I_j(x), j = 0..n-1
    let mut ratios = vec![T::zero(); n];
    for j in (1..=n).rev() {
        r = x / (two * T::from_usize(j).unwrap() + x * r);
        ratios[j - 1] = r;
    }
    // y_j = I_j / I_0; S = y_0 + 2 sum_{j>=1} y_j = e^x / I_0.
    let mut y = T::one();
    let mut tail = KahanSum::new();
    for &rj in &ratios {
        y = y * rj;
        if y == T::zero() {
            break;
        }
        tail.add(y);
    }
    let norm = T::one() + two * tail.value();
    let mut ln_y = T::zero();
    for &rj in &ratios[..order as usize] {
        ln_y = ln_y + rj.ln();
    }
    ln_y - norm.ln()
}

/// Coefficients (ascending powers of `t`) of the Debye polynomials `u_k(t)`.
fn debye_polys() -> &'static [Vec<f64>] {
    static POLYS: OnceLock<Vec<Vec<f64>>> = OnceLock::new();
    POLYS.get_or_init(|| {
        // u_{k+1}(t) = t^2 (1 - t^2) u_k'(t) / 2 + (1/8) int_0^t (1 - 5 s^2) u_k(s) ds
        let mut polys = vec![vec![1.0]];
        for k in 0..DEBYE_TERMS - 1 {
            let u = &polys[k];
            let deg = u.len() - 1;
            let mut next = vec![0.0; deg + 4];
            for (i, &c) in u.iter().enumerate().skip(1) {
                let d = c * i as f64;
                // d * t^{i-1} * t^2 (1 - t^2) / 2
                next[i + 1] += 0.5 * d;
                next[i + 3] -= 0.5 * d;
            }
            for (i, &c) in u.iter().enumerate() {
                // (1/8) int_0^t (c s^i - 5 c s^{i+2}) ds
                next[i + 1] += c / (8.0 * (i + 1) as f64);
                next[i + 3] -= 5.0 * c / (8.0 * (i + 3) as f64);
            }
            polys.push(next);
        }
        polys
    })
}

#[cfg(test)]
pub(crate) fn debye_poly(k: usize) -> Vec<f64> {
    debye_polys()[k].clone()
}

fn ln_debye_scaled<T: Real>(order: u64, x: T) -> T {
    let nu = T::from_u64(order).unwrap();
    let z = x / nu;
    let root = (T::one() + z * z).sqrt();
    let t = root.recip();
    // nu * eta - x = nu (sqrt(1+z^2) - z) + nu ln(z / (1 + sqrt(1+z^2)))
    let head = nu / (root + z) + nu * (z / (T::one() + root)).ln();
    let inv_nu = nu.recip();
    let mut series = T::zero();
    let mut scale = T::one();
    for poly in debye_polys() {
        let mut acc = T::zero();
        for &c in poly.iter().rev() {
            acc = acc * t + T::lit(c);
        }
        series = series + acc * scale;
        scale = scale * inv_nu;
    }
    head - T::lit(0.5) * (T::TAU() * nu).ln() - T::lit(0.25) * (T::one() + z * z).ln()
        + series.ln()
}
