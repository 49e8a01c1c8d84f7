use proptest::prelude::*;
use skellam_stein::graph::NoisyGraphModel;
use skellam_stein::haar::{haar_windows, HaarSpilloverModel};
use skellam_stein::stein::{bound_first_diff, bound_relaxed, bound_second_diff};
use skellam_stein::tv::{convolve, tv_distance};
use skellam_stein::{IntegerDist, SkellamParams};

fn rate() -> impl Strategy<Value = f64> {
    prop_oneof![0.01..1.0, 1.0..30.0, 30.0..400.0]
}

fn dist() -> impl Strategy<Value = IntegerDist<f64>> {
    (-20_i64..20, prop::collection::vec(0.0..1.0_f64, 1..12)).prop_map(|(lo, w)| {
        let total: f64 = w.iter().sum::<f64>() + 1e-12;
        IntegerDist::new(lo, w.iter().map(|x| (x + 1e-12 / w.len() as f64) / total).collect(), 0.0).unwrap()
    })
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pmf_is_skew_symmetric(a in rate(), b in rate(), k in -60_i64..60) {
        let p = SkellamParams::new(a, b).unwrap();
        prop_assert!(close(p.pmf(k), p.swapped().pmf(-k), 1e-12));
    }

    #[test]
    fn table_is_normalised(a in rate(), b in rate()) {
        let d = SkellamParams::new(a, b).unwrap().to_dist(1e-12).unwrap();
        prop_assert!((d.window_mass() + d.tail_mass() - 1.0).abs() < 1e-12);
        prop_assert!(d.tail_mass() <= 1e-12);
        prop_assert!(d.probs().iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn cdf_is_monotone(a in 0.1..20.0_f64, b in 0.1..20.0_f64, k in -30_i64..30) {
        let p = SkellamParams::new(a, b).unwrap();
        let (c0, c1) = (p.cdf(k).unwrap(), p.cdf(k + 1).unwrap());
        prop_assert!(c0 <= c1 + 1e-15);
        prop_assert!((c1 - c0 - p.pmf(k + 1)).abs() < 1e-12);
    }

    #[test]
    fn tv_is_a_metric(x in dist(), y in dist(), z in dist()) {
        let xy = tv_distance(&x, &y).value;
        prop_assert_eq!(xy, tv_distance(&y, &x).value);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&xy));
        prop_assert!(xy <= tv_distance(&x, &z).value + tv_distance(&z, &y).value + 1e-12);
        prop_assert_eq!(tv_distance(&x, &x).value, 0.0);
    }

    #[test]
    fn convolution_commutes_and_associates(x in dist(), y in dist(), z in dist()) {
        let xy = convolve(&x, &y).unwrap();
        prop_assert!(tv_distance(&xy, &convolve(&y, &x).unwrap()).value < 1e-14);
        let left = convolve(&xy, &z).unwrap();
        let right = convolve(&x, &convolve(&y, &z).unwrap()).unwrap();
        prop_assert!(tv_distance(&left, &right).value < 1e-14);
        prop_assert!((left.window_mass() - 1.0).abs() < 1e-12);
        prop_assert!((xy.mean() - x.mean() - y.mean()).abs() < 1e-9);
    }

    #[test]
    fn negation_is_an_involution(x in dist()) {
        prop_assert_eq!(x.negate().negate(), x);
    }

    #[test]
    fn relaxed_bounds_are_weaker(a in rate(), b in rate()) {
        let p = SkellamParams::new(a, b).unwrap();
        prop_assert!(bound_relaxed(&p, 1) >= bound_first_diff(&p));
        prop_assert!(bound_relaxed(&p, 2) >= bound_second_diff(&p));
    }

    #[test]
    fn graph_law_matches_parameters(
        entries in prop::collection::vec((0.0..=1.0_f64, 0.0..=1.0_f64, 0.0..=1.0_f64), 1..40)
    ) {
        let (p, (r, s)): (Vec<f64>, (Vec<f64>, Vec<f64>)) =
            entries.iter().map(|&(p, r, s)| (p, (r, s))).unzip();
        let m = NoisyGraphModel::new(p, r, s).unwrap();
        let d = m.edge_difference_dist().unwrap();
        let params = m.skellam_params();
        prop_assert!((d.window_mass() - 1.0).abs() < 1e-12);
        prop_assert!((d.mean() - (params.lambda1() - params.lambda2())).abs() < 1e-10);
        prop_assert!(m.verify().unwrap().check.satisfied);
    }

    #[test]
    fn haar_observed_rates_follow_the_shift(
        f in prop::collection::vec(0.0..10.0_f64, 16),
        scale in 1_u32..=4,
        loc in 0_usize..8,
        p in 0.0..=1.0_f64,
    ) {
        let loc = loc % (16 >> scale);
        let (pos, neg) = haar_windows(16, scale, loc).unwrap();
        let m = HaarSpilloverModel::new(f.clone(), pos.clone(), neg.clone(), p).unwrap();
        let shifted = |i: usize| f.get(i + 1).copied().unwrap_or(0.0);
        let mut l1 = 0.0;
        let mut l2 = 0.0;
        for i in 0..16 {
            if pos[i] {
                l1 += (1.0 - p) * f[i] + p * shifted(i);
            }
            if neg[i] {
                l2 += (1.0 - p) * f[i] + p * shifted(i);
            }
        }
        let o = m.observed_coeff_params();
        prop_assert!((o.lambda1() - l1).abs() < 1e-12 && (o.lambda2() - l2).abs() < 1e-12);
        let swapped = HaarSpilloverModel::new(f, neg, pos, p).unwrap();
        prop_assert_eq!(swapped.true_coeff_params(), m.true_coeff_params().swapped());
        prop_assert!(m.verify().unwrap().check.satisfied);
    }
}
