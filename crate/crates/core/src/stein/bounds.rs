//! Closed-form Stein-factor bounds and related probes.

use serde::Serialize;

use crate::error::Result;
use crate::real::{KahanSum, Real};
use crate::skellam::SkellamParams;
use crate::special::{bessel_i, integrate_unit};

fn log_plus<T: Real>(x: T) -> T {
    x.ln().max(T::zero())
}

/// `min{1, sqrt(2 / (e max(λ1, λ2)))}`.
pub fn bound_first_diff<T: Real>(params: &SkellamParams<T>) -> T {
    let m = params.max_rate();
    if m == T::zero() {
        return T::one();
    }
    (T::lit(2.0) / (T::E() * m)).sqrt().min(T::one())
}

/// `min{1, 1/(2m²) + sqrt(2) log⁺(sqrt(2) m)/m}` with `m = max(λ1, λ2)`.
pub fn bound_second_diff<T: Real>(params: &SkellamParams<T>) -> T {
    let m = params.max_rate();
    if m == T::zero() {
        return T::one();
    }
    let s2 = T::SQRT_2();
    (T::one() / (T::lit(2.0) * m * m) + s2 * log_plus(s2 * m) / m).min(T::one())
}

/// Which integrand the integral bound uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum IntegralForm {
    /// `min{1, e^{-z} I_0(z)}`, which carries the `sqrt(2/(π(λ1+λ2)))`
    /// asymptote.
    #[default]
    Min,
    /// `max{1, e^{-z} I_0(z)}`; since `e^{-z} I_0(z) <= 1` this is
    /// identically 1.
    AsPrinted,
}

/// `∫_0^∞ e^{-t} min{1, e^{-z} I_0(z)} dt` with `z = (λ1+λ2)(1 - e^{-t})`,
/// evaluated as `∫_0^1 e^{-Λv} I_0(Λv) dv`.
pub fn bound_first_diff_integral<T: Real>(params: &SkellamParams<T>, form: IntegralForm, quad_tol: T) -> Result<T> {
    let total = params.total();
    let est = integrate_unit(
        |v: T| {
            let i0 = bessel_i(0, total * v, true).unwrap_or(T::zero());
            match form {
                IntegralForm::Min => i0.min(T::one()),
                IntegralForm::AsPrinted => i0.max(T::one()),
            }
        },
        quad_tol,
    )?;
    Ok(est.value)
}

/// `sqrt(2 / (π(λ1+λ2)))`.
pub fn first_diff_asymptote<T: Real>(params: &SkellamParams<T>) -> T {
    (T::lit(2.0) / (T::PI() * params.total())).sqrt()
}

/// The bounds with `max(λ1, λ2)` replaced through `Λ/2 <= max <= Λ`,
/// `Λ = λ1 + λ2`: order 1 gives `min{1, sqrt(4/(eΛ))}`, order 2 gives
/// `min{1, 2/Λ² + 2 sqrt(2) log⁺(sqrt(2) Λ)/Λ}`.
pub fn bound_relaxed<T: Real>(params: &SkellamParams<T>, order: u8) -> T {
    let total = params.total();
    if total == T::zero() {
        return T::one();
    }
    let s2 = T::SQRT_2();
    let two = T::lit(2.0);
    let v = if order == 1 {
        (T::lit(4.0) / (T::E() * total)).sqrt()
    } else {
        two / (total * total) + two * s2 * log_plus(s2 * total) / total
    };
    v.min(T::one())
}

/// Second-difference bound for `Sk(λ, λ)` next to the earlier `160/(2λ)`.
pub fn prior_bound_comparison<T: Real>(lambda: T) -> Result<(T, T)> {
    let p = SkellamParams::new(lambda, lambda)?;
    Ok((bound_second_diff(&p), T::lit(80.0) / lambda))
}

/// `Σ_k |p_k - 2p_{k-1} + p_{k-2}|` for the Skellam pmf.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SecondDiffSum<T> {
    pub value: T,
    /// Bound on the contribution of mass outside the window.
    pub tail_slack: T,
    /// `1 / (λ1 + λ2)`, the conjectured bound.
    pub conjectured: T,
    pub ratio: T,
}

pub fn skellam_second_diff_sum<T: Real>(params: &SkellamParams<T>, tail_tol: T) -> Result<SecondDiffSum<T>> {
    let d = params.to_dist(tail_tol)?;
    let mut acc = KahanSum::new();
    for k in d.min_support()..=d.max_support() + 2 {
        acc.add((d.get(k) - T::lit(2.0) * d.get(k - 1) + d.get(k - 2)).abs());
    }
    let value = acc.value();
    let conjectured = params.total().recip();
    Ok(SecondDiffSum {
        value,
        tail_slack: T::lit(4.0) * d.tail_mass(),
        conjectured,
        ratio: value / conjectured,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sk(a: f64, b: f64) -> SkellamParams<f64> {
        SkellamParams::new(a, b).unwrap()
    }

    #[test]
    fn first_diff_examples() {
        assert!((bound_first_diff(&sk(2.0, 1.0)) - (-0.5_f64).exp()).abs() < 1e-15);
        assert_eq!(bound_first_diff(&sk(0.1, 0.1)), 1.0);
        assert_eq!(bound_first_diff(&sk(3.0, 7.0)), bound_first_diff(&sk(7.0, 3.0)));
    }

    #[test]
    fn second_diff_examples() {
        let expect = 1.0 / 32.0 + 2.0_f64.sqrt() * (4.0 * 2.0_f64.sqrt()).ln() / 4.0;
        assert!((bound_second_diff(&sk(4.0, 4.0)) - expect).abs() < 1e-15);
        assert!((expect - 0.6439).abs() < 1e-4);
        assert_eq!(bound_second_diff(&sk(0.5, 0.5)), 1.0);
    }

    #[test]
    fn integral_bound_limits() {
        let tiny = sk(1e-8, 1e-8);
        let v = bound_first_diff_integral(&tiny, IntegralForm::Min, 1e-10).unwrap();
        assert!((v - 1.0).abs() < 1e-6);
        let printed = bound_first_diff_integral(&sk(3.0, 2.0), IntegralForm::AsPrinted, 1e-10).unwrap();
        assert!((printed - 1.0).abs() < 1e-12);
    }

    #[test]
    fn relaxed_examples() {
        assert!((bound_relaxed(&sk(1.0, 1.0), 1) - (2.0 / std::f64::consts::E).sqrt()).abs() < 1e-15);
        assert_eq!(bound_relaxed(&sk(0.05, 0.05), 2), 1.0);
    }

    #[test]
    fn prior_comparison() {
        let (ours, prior) = prior_bound_comparison(4.0_f64).unwrap();
        assert_eq!(prior, 20.0);
        assert!(ours < 0.65);
        assert_eq!(prior_bound_comparison(80.0_f64).unwrap().1, 1.0);
    }

    #[test]
    fn second_diff_sum_is_bounded() {
        let r = skellam_second_diff_sum(&sk(1.0, 1.0), 1e-14).unwrap();
        assert!(r.value <= 2.0);
        let a = skellam_second_diff_sum(&sk(2.0, 3.0), 1e-14).unwrap();
        let b = skellam_second_diff_sum(&sk(3.0, 2.0), 1e-14).unwrap();
        assert!((a.value - b.value).abs() < 1e-14);
    }
}
