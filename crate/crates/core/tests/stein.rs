use rand::Rng;
use skellam_stein::sampling::stream_rng;
use skellam_stein::stein::{
    self, difference_kernel, exact_stein_factors, skellam_second_diff_sum, stein_solution, Difference,
};
use skellam_stein::{BivariateState, SkellamF32, SkellamParams, TestSet};

const TOL: f64 = 1e-8;

fn sk(a: f64, b: f64) -> SkellamParams<f64> {
    SkellamParams::new(a, b).unwrap()
}

#[test]
fn kernels_reproduce_solution_differences() {
    let p = sk(3.0, 2.0);
    let sets = [TestSet::AtLeast { a: 1 }, TestSet::finite([-1, 0, 2]), TestSet::AtMost { a: -2 }];
    let mut rng = stream_rng(17, 0);
    for _ in 0..5 {
        let s = BivariateState::new(rng.random_range(0..6), rng.random_range(0..6));
        for f in &sets {
            for d in Difference::ALL {
                let k = difference_kernel(&p, d, s, TOL).unwrap();
                let direct = d.apply(|x, y| stein_solution(&p, f, BivariateState::new(x, y), TOL).unwrap(), s);
                assert!(
                    (k.apply(f) - direct).abs() <= 2.0 * TOL,
                    "{d} at {s}: kernel {} vs solution {direct}",
                    k.apply(f)
                );
            }
        }
    }
}

#[test]
fn factors_swap_with_rates() {
    for (a, b) in [(0.7, 3.0), (5.0, 1.0)] {
        let m = 14;
        let f = exact_stein_factors(&sk(a, b), m, TOL).unwrap();
        let g = exact_stein_factors(&sk(b, a), m, TOL).unwrap();
        for (d, e) in [(Difference::D1, Difference::D2), (Difference::D11, Difference::D22)] {
            assert!((f.get(d).value - g.get(e).value).abs() <= 2.0 * TOL);
        }
    }
}

#[test]
fn solution_converges_with_tolerance() {
    let p = sk(1.0, 1.0);
    let f: TestSet = "k>=0".parse().unwrap();
    let s = BivariateState::new(0, 0);
    let coarse = stein_solution(&p, &f, s, TOL).unwrap();
    let fine = stein_solution(&p, &f, s, 1e-11).unwrap();
    assert!(coarse.is_finite());
    assert!((coarse - fine).abs() < 10.0 * TOL);
}

#[test]
fn trivial_sets_give_zero_solution() {
    let p = sk(2.0, 1.0);
    for f in [TestSet::All, TestSet::Empty] {
        assert_eq!(stein_solution(&p, &f, BivariateState::new(3, 1), TOL).unwrap(), 0.0);
    }
}

#[test]
fn second_difference_sum_probe() {
    let r = skellam_second_diff_sum(&sk(5.0, 5.0), 1e-14).unwrap();
    assert!((r.conjectured - 0.1).abs() < 1e-15);
    assert!(r.value > 0.0 && r.ratio.is_finite());
    let a = skellam_second_diff_sum(&sk(4.0, 1.5), 1e-14).unwrap();
    let b = skellam_second_diff_sum(&sk(1.5, 4.0), 1e-14).unwrap();
    assert!((a.value - b.value).abs() < 1e-13);
}

#[test]
fn single_precision_bounds_and_pmf() {
    let p = SkellamF32::new(3.0, 1.0).unwrap();
    assert!((p.pmf(2) - 0.202_773_18).abs() < 1e-6);
    let b = stein::bound_first_diff(&p);
    assert!((b - (2.0 / (std::f32::consts::E * 3.0)).sqrt()).abs() < 1e-6);
    let d = p.to_dist(1e-6).unwrap();
    assert!((d.window_mass() - 1.0).abs() < 1e-5);
}
