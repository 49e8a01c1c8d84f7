//! Quadrature on the half-line via `u = e^{-t}`.
//!
//! Two schemes live here. [`integrate_unit`] is a globally adaptive
//! Gauss-Kronrod (7, 15) bisection for scalar integrands. The nested
//! Fejér driver is used for the large vector integrands of the Stein
//! kernels: each pass over the `N`-point rule also accumulates the
//! `N/2`-point rule on the shared nodes, and the pass is accepted once the
//! two agree to the tolerance.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};
use crate::real::{KahanSum, Real};

/// Maximum bisection depth of the adaptive Gauss-Kronrod scheme.
pub const GK_MAX_DEPTH: u32 = 40;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

// Gauss weights for XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadEstimate<T> {
    pub value: T,
    /// Sum of the final |K15 - G7| differences.
    pub error: T,
    pub evaluations: usize,
}

fn gk15<T: Real>(f: &mut impl FnMut(T) -> T, a: T, b: T) -> (T, T) {
    let half = (b - a) * T::lit(0.5);
    let mid = a + half;
    let fc = f(mid);
    let mut k = fc * T::lit(WGK[7]);
    let mut g = fc * T::lit(WG[3]);
    for j in 0..7 {
        let dx = half * T::lit(XGK[j]);
        let s = f(mid - dx) + f(mid + dx);
        k = k + s * T::lit(WGK[j]);
        if j % 2 == 1 {
            g = g + s * T::lit(WG[j / 2]);
        }
    }
    (k * half, (k - g).abs() * half)
}

/// Maximum number of subintervals kept by [`integrate_unit`].
pub const GK_MAX_INTERVALS: usize = 4000;

/// Globally adaptive Gauss-Kronrod integral of `f` over `[0, 1]`.
///
/// The subinterval with the largest |K15 - G7| is bisected until the summed
/// estimate is at most `abs_tol`. Fails with [`Error::NonConvergence`] once
/// that interval sits at [`GK_MAX_DEPTH`] or the partition reaches
/// [`GK_MAX_INTERVALS`] pieces.
pub fn integrate_unit<T: Real>(mut f: impl FnMut(T) -> T, abs_tol: T) -> Result<QuadEstimate<T>> {
    if !(abs_tol > T::zero()) {
        return Err(Error::Domain(format!("tolerance must be positive, got {abs_tol}")));
    }
    struct Piece<T> {
        a: T,
        b: T,
        depth: u32,
        value: T,
        err: T,
    }
    let mut evaluations = 0;
    let mut eval = |a: T, b: T, depth: u32, evaluations: &mut usize| -> Result<Piece<T>> {
        let (value, err) = gk15(&mut f, a, b);
        *evaluations += 15;
        if !value.is_finite() || !err.is_finite() {
            return Err(Error::Domain("integrand is not finite".into()));
        }
        Ok(Piece { a, b, depth, value, err })
    };
    let mut pieces = vec![eval(T::zero(), T::one(), 0, &mut evaluations)?];
    loop {
        let total_err = pieces.iter().map(|p| p.err).collect::<KahanSum<T>>().value();
        if total_err <= abs_tol {
            let value = pieces.iter().map(|p| p.value).collect::<KahanSum<T>>().value();
            return Ok(QuadEstimate {
                value,
                error: total_err,
                evaluations,
            });
        }
        let (worst, _) = pieces
            .iter()
            .enumerate()
            .fold((0, T::neg_infinity()), |acc, (i, p)| if p.err > acc.1 { (i, p.err) } else { acc });
        if pieces[worst].depth >= GK_MAX_DEPTH || pieces.len() >= GK_MAX_INTERVALS {
            return Err(Error::NonConvergence {
                tol: abs_tol.as_f64(),
                achieved: total_err.as_f64(),
            });
        }
        let p = pieces.swap_remove(worst);
        let m = (p.a + p.b) * T::lit(0.5);
        pieces.push(eval(p.a, m, p.depth + 1, &mut evaluations)?);
        pieces.push(eval(m, p.b, p.depth + 1, &mut evaluations)?);
    }
}

/// `∫_0^∞ g(t) dt` for `|g(t)| <= C e^{-t}`, computed as
/// `∫_0^1 g(-ln u) / u du` with [`integrate_unit`].
pub fn integrate_halfline<T: Real>(mut g: impl FnMut(T) -> T, abs_tol: T) -> Result<QuadEstimate<T>> {
    integrate_unit(move |u: T| g(-u.ln()) / u, abs_tol)
}

/// Vector integrand for [`integrate_nested`].
pub(crate) trait NestedIntegrand<T> {
    /// Clears both accumulators before a pass.
    fn reset(&mut self);
    /// Adds `w_fine f(u)` to the fine sum and `w_coarse f(u)` to the coarse
    /// sum (`w_coarse` is zero on nodes the coarse rule lacks). `v = 1 - u`
    /// is passed separately to keep it accurate near `u = 1`.
    fn accumulate(&mut self, u: T, v: T, w_fine: T, w_coarse: T) -> Result<()>;
    /// Norm of the difference between the fine and coarse sums.
    fn discrepancy(&self) -> T;
}

/// Fejér second-rule weights for `n` subintervals, mapped to `[0, 1]`;
/// entry `k - 1` belongs to the node `u_k = (1 - cos(kπ/n)) / 2`.
fn fejer_weights(n: usize) -> Arc<Vec<f64>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Vec<f64>>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(w) = cache.lock().unwrap().get(&n) {
        return w.clone();
    }
    let pi = std::f64::consts::PI;
    let w: Vec<f64> = (1..n)
        .map(|k| {
            let theta = k as f64 * pi / n as f64;
            let s: f64 = (1..=n / 2)
                .map(|j| {
                    let m = (2 * j - 1) as f64;
                    (m * theta).sin() / m
                })
                .sum();
            // 4/n on [-1, 1], halved for [0, 1]
            2.0 / n as f64 * theta.sin() * s
        })
        .collect();
    let w = Arc::new(w);
    cache.lock().unwrap().insert(n, w.clone());
    w
}

/// Node `u_k = (1 - cos(kπ/n)) / 2` and its complement `1 - u_k`.
pub(crate) fn fejer_node(k: usize, n: usize) -> (f64, f64) {
    let half = 0.5 * k as f64 * std::f64::consts::PI / n as f64;
    let (s, c) = half.sin_cos();
    (s * s, c * c)
}

/// Runs nested Fejér passes with `n = start, 2 start, ...` up to `max_n`
/// until the `n`- and `n/2`-point rules agree within `tol`. Returns the
/// accepted discrepancy; the integrand's fine accumulator holds the result.
pub(crate) fn integrate_nested<T: Real, I: NestedIntegrand<T>>(
    integrand: &mut I,
    tol: T,
    start: usize,
    max_n: usize,
) -> Result<T> {
    let mut n = start.max(4).next_power_of_two();
    loop {
        let fine = fejer_weights(n);
        let coarse = fejer_weights(n / 2);
        integrand.reset();
        for k in 1..n {
            let wc = if k % 2 == 0 { coarse[k / 2 - 1] } else { 0.0 };
            let (u, v) = fejer_node(k, n);
            integrand.accumulate(T::lit(u), T::lit(v), T::lit(fine[k - 1]), T::lit(wc))?;
        }
        let err = integrand.discrepancy();
        if err <= tol {
            return Ok(err);
        }
        if n >= max_n {
            return Err(Error::NonConvergence {
                tol: tol.as_f64(),
                achieved: err.as_f64(),
            });
        }
        n *= 2;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_moments() {
        let r = integrate_halfline(|t: f64| (-t).exp(), 1e-12).unwrap();
        assert!((r.value - 1.0).abs() < 1e-12);
        let r = integrate_halfline(|t: f64| t * (-t).exp(), 1e-12).unwrap();
        assert!((r.value - 1.0).abs() < 1e-12);
        let r = integrate_halfline(|t: f64| (-2.0 * t).exp(), 1e-12).unwrap();
        assert!((r.value - 0.5).abs() < 1e-12);
    }

    #[test]
    fn reports_non_convergence() {
        // integrable, but far too singular for the subdivision budget
        let r = integrate_unit(|u: f64| if u < 1e-300 { 0.0 } else { u.powf(-0.999) }, 1e-14);
        assert!(matches!(r, Err(Error::NonConvergence { .. })));
    }

    #[test]
    fn rejects_nonpositive_tolerance() {
        assert!(integrate_unit(|u: f64| u, 0.0).is_err());
    }

    #[test]
    fn fejer_weights_integrate_polynomials() {
        for &n in &[4_usize, 16, 64, 256] {
            let w = fejer_weights(n);
            let total: f64 = w.iter().sum();
            assert!((total - 1.0).abs() < 1e-14, "n={n}");
            for p in 0..(n - 1).min(12) {
                let q: f64 = (1..n).map(|k| w[k - 1] * fejer_node(k, n).0.powi(p as i32)).sum();
                assert!((q - 1.0 / (p + 1) as f64).abs() < 1e-13, "n={n} p={p}");
            }
        }
    }

    struct Scalar<F> {
        f: F,
        fine: f64,
        coarse: f64,
    }

    impl<F: FnMut(f64) -> f64> NestedIntegrand<f64> for Scalar<F> {
        fn reset(&mut self) {
            self.fine = 0.0;
            self.coarse = 0.0;
        }
        fn accumulate(&mut self, u: f64, _v: f64, wf: f64, wc: f64) -> Result<()> {
            let val = (self.f)(u);
            self.fine += wf * val;
            self.coarse += wc * val;
            Ok(())
        }
        fn discrepancy(&self) -> f64 {
            (self.fine - self.coarse).abs()
        }
    }

    #[test]
    fn nested_driver_converges_on_smooth_integrand() {
        let mut s = Scalar {
            f: |u: f64| (3.0 * u).cos(),
            fine: 0.0,
            coarse: 0.0,
        };
        let err = integrate_nested(&mut s, 1e-12, 8, 1 << 12).unwrap();
        assert!(err <= 1e-12);
        assert!((s.fine - 3.0_f64.sin() / 3.0).abs() < 1e-13);
    }
}
