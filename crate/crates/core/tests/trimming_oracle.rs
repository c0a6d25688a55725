use proptest::prelude::*;

use trimlab::dynsys::{Point, SystemId, SystemModel};
use trimlab::numeric::{compensated_sum, NeumaierSum};
use trimlab::observables::{Aperture, Observable, Profile, GOLDEN_SITE};
use trimlab::rng::{stream, StreamPurpose};
use trimlab::trimming::{run_trimmed_series, trimmed_sum_bruteforce, TrimAccumulator, TrimSchedule, TrimSpec};

/// Values drawn from a small alphabet so that ties are common.
fn instance() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, usize)> {
    (1usize..300).prop_flat_map(|n| {
        (
            prop::collection::vec(prop_oneof![(1u32..6).prop_map(f64::from), 0.0f64..100.0], n),
            prop::collection::vec(prop_oneof![(1u32..4).prop_map(|v| f64::from(v) / 8.0), 0.0f64..1.0], n),
            0..=n.min(40),
        )
    })
}

proptest! {
    #[test]
    fn streaming_matches_sort_oracle((values, distances, k) in instance()) {
        let mut acc = TrimAccumulator::new(k);
        for (&v, &d) in values.iter().zip(&distances) {
            acc.push(v, d);
        }
        let oracle = trimmed_sum_bruteforce(&values, &distances, k).unwrap();
        prop_assert_eq!(acc.top_indices(k), oracle.top_indices.clone());
        prop_assert_eq!(acc.closest_indices(k), oracle.closest_indices.clone());
        if k == 0 || (k as u64) < acc.count() {
            let c = acc.checkpoint(k).unwrap();
            let scale = values.iter().sum::<f64>().max(1.0);
            prop_assert!((c.trimmed - oracle.trimmed).abs() <= 1e-12 * scale);
            prop_assert!((c.hat_trimmed - oracle.hat_trimmed).abs() <= 1e-12 * scale);
            prop_assert!((c.total - oracle.total).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn trimmed_sums_are_ordered((values, distances, k) in instance()) {
        prop_assume!(k < values.len());
        let mut acc = TrimAccumulator::new(k + 1);
        for (&v, &d) in values.iter().zip(&distances) {
            acc.push(v, d);
        }
        let c = acc.checkpoint(k).unwrap();
        let eps = 1e-9 * c.total.max(1.0);
        prop_assert!(c.trimmed >= -eps);
        prop_assert!(c.trimmed <= c.hat_trimmed + eps);
        prop_assert!(c.hat_trimmed <= c.total + eps);
        if k + 1 < values.len() {
            let next = acc.checkpoint(k + 1).unwrap();
            prop_assert!(next.trimmed <= c.trimmed + eps);
        }
    }

    #[test]
    fn scaling_commutes_with_trimming((values, distances, k) in instance(), lambda in 0.5f64..4.0) {
        prop_assume!(k < values.len());
        let a = trimmed_sum_bruteforce(&values, &distances, k).unwrap();
        let scaled: Vec<f64> = values.iter().map(|v| v * lambda).collect();
        let b = trimmed_sum_bruteforce(&scaled, &distances, k).unwrap();
        prop_assert_eq!(a.top_indices, b.top_indices);
        prop_assert!((b.trimmed - lambda * a.trimmed).abs() <= 1e-10 * b.total.max(1.0));
    }
}

#[test]
fn orbit_series_matches_oracle_at_every_checkpoint() {
    let sys = SystemModel::new(SystemId::DoublingBitstream);
    let obs = Observable::power(&sys, Point::one(GOLDEN_SITE), 1.0, Profile::Oscillatory, Aperture::Full).unwrap();
    let trim = TrimSpec::Intermediate(TrimSchedule::PowerLaw(0.5));
    let checkpoints = [100, 1000, 5000];
    let series = run_trimmed_series(&sys, &obs, &trim, sys.sample_initial(stream(3, StreamPurpose::Orbit, 0)), &checkpoints).unwrap();

    let mut state = sys.sample_initial(stream(3, StreamPurpose::Orbit, 0));
    let mut values = Vec::new();
    let mut distances = Vec::new();
    use trimlab::dynsys::Orbit;
    for _ in 0..5000 {
        let p = state.point();
        distances.push(obs.distance(&sys, p));
        values.push(obs.evaluate(&sys, p).unwrap());
        state.step().unwrap();
    }
    for c in &series.checkpoints {
        let n = c.n as usize;
        let o = trimmed_sum_bruteforce(&values[..n], &distances[..n], c.k).unwrap();
        assert_eq!(c.k, trim.k_at(c.n));
        assert!((c.trimmed - o.trimmed).abs() <= 1e-12 * o.total);
        assert!((c.hat_trimmed - o.hat_trimmed).abs() <= 1e-12 * o.total);
    }
}

#[test]
fn compensated_sum_of_a_hundred_million_tenths() {
    let n = 100_000_000u64;
    let mut s = NeumaierSum::new();
    for _ in 0..n {
        s.add(0.1);
    }
    let exact = 1e7;
    assert!(((s.value() - exact) / exact).abs() < 1e-12, "{}", s.value());
    assert_eq!(compensated_sum(&[1e16, 1.0, -1e16]), 1.0);
}
