use skellam_stein::graph::{verify_batch, NoisyGraphModel, MAX_EXACT_PAIRS};
use skellam_stein::haar::{sweep, HaarSpilloverModel, SweepEntry};
use skellam_stein::sampling::stream_rng;
use skellam_stein::tv::{concentration_threshold, empirical_dist, tv_distance};
use skellam_stein::Error;

fn ramp(p: f64) -> HaarSpilloverModel<f64> {
    HaarSpilloverModel::new(
        vec![1.0, 2.0, 3.0, 4.0],
        vec![true, true, false, false],
        vec![false, false, true, true],
        p,
    )
    .unwrap()
}

#[test]
fn two_pair_graph_is_dominated() {
    let m = NoisyGraphModel::new(vec![0.5, 0.5], vec![0.2, 0.2], vec![0.1, 0.1]).unwrap();
    let r = m.verify().unwrap();
    assert!(r.check.satisfied);
    assert!(r.check.ratio > 0.0 && r.check.ratio < 1.0);
}

#[test]
fn noiseless_graph_matches_degenerate_skellam() {
    let m = NoisyGraphModel::new(vec![0.2, 0.7, 1.0], vec![0.0; 3], vec![0.0; 3]).unwrap();
    let d = m.edge_difference_dist().unwrap();
    assert_eq!(d.get(0), 1.0);
    let r = m.verify().unwrap();
    assert!(r.degenerate && r.check.satisfied);
    assert_eq!((r.check.tv.value, r.check.bound, r.check.ratio), (0.0, 0.0, 0.0));
}

#[test]
fn negative_log_is_clamped_but_reported() {
    let m = NoisyGraphModel::homogeneous(2, 0.5, 0.2, 0.1).unwrap();
    let b = m.tv_bound();
    assert!(b.raw_log < b.bound);
}

#[test]
fn oversized_graph_is_a_resource_error() {
    let m = NoisyGraphModel::homogeneous(MAX_EXACT_PAIRS + 1, 0.5, 0.1, 0.1).unwrap();
    assert!(matches!(m.edge_difference_dist(), Err(Error::Resource(_))));
}

#[test]
fn batch_matches_individual_runs() {
    let models: Vec<_> = (1..6)
        .map(|n| NoisyGraphModel::homogeneous(n * 7, 0.3, 0.2, 0.05 * n as f64).unwrap())
        .collect();
    let batch = verify_batch(&models);
    for (m, r) in models.iter().zip(batch) {
        assert_eq!(m.verify().unwrap(), r.unwrap());
    }
}

#[test]
fn graph_simulation_matches_exact_law() {
    let m = NoisyGraphModel::new(vec![0.5, 0.5], vec![0.2, 0.2], vec![0.1, 0.1]).unwrap();
    let draws = m.simulate(&mut stream_rng(1, 4), 100_000);
    let tv = tv_distance(&empirical_dist::<f64>(&draws).unwrap(), &m.edge_difference_dist().unwrap());
    assert!(tv.value <= concentration_threshold(100_000, 1e-3));
}

#[test]
fn ramp_model_is_dominated() {
    let m = ramp(0.1);
    let tv = m.tv_observed_vs_true().unwrap();
    assert!(tv.upper() <= m.tv_bound());
    assert!(m.verify().unwrap().check.satisfied);
    let r = ramp(0.0).verify().unwrap();
    assert!(r.check.satisfied && r.check.ratio == 0.0);
}

#[test]
fn spillover_matters_more_near_jumps() {
    let mut signal = vec![2.0; 32];
    for v in &mut signal[16..] {
        *v = 9.0;
    }
    let entries = sweep(&signal, &[1, 2, 3], 0.4).unwrap();
    // The last window reads zero past the end of the signal.
    let interior = entries.iter().filter(|e| (e.location + 1) << e.scale < 32);
    let (jump, smooth): (Vec<&SweepEntry<f64>>, Vec<&SweepEntry<f64>>) = interior.partition(|e| {
        let w = 1usize << e.scale;
        (e.location + 1) * w == 16 || e.location * w + w / 2 == 16
    });
    let max_smooth = smooth.iter().map(|e| e.report.check.tv.value).fold(0.0, f64::max);
    let min_jump = jump.iter().map(|e| e.report.check.tv.value).fold(f64::INFINITY, f64::min);
    println!("smooth windows: max tv {max_smooth:e}; windows at the jump: min tv {min_jump:e}");
    assert!(entries.iter().all(|e| e.report.check.satisfied));
}
