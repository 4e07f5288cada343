use lptd_core::truth::{
    device_distance, run_crh, run_crh_with_presence, std_pass, update_truths, update_weights,
    weights_from_distances, CrhOptions, ObservationMatrix, TruthError, TruthInit, TruthVector,
    WeightVector,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn matrix(k: usize, m: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-1000.0f64..1000.0, m), k)
}

fn sized_matrix() -> impl Strategy<Value = Vec<Vec<f64>>> {
    (2usize..8, 1usize..6).prop_flat_map(|(k, m)| matrix(k, m))
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * (1.0 + a.abs().max(b.abs()))
}

proptest! {
    #[test]
    fn deterministic_for_a_seed(rows in sized_matrix(), seed: u64) {
        let obs = ObservationMatrix::continuous(&rows).unwrap();
        let a = run_crh(&obs, &CrhOptions::default(), &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let b = run_crh(&obs, &CrhOptions::default(), &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        prop_assert_eq!(a, b);
    }

    /// Identical rows are a fixed point: truths equal the shared row and
    /// every weight is `log K`.
    #[test]
    fn identical_rows_fixed_point(row in prop::collection::vec(-100.0f64..100.0, 1..6), k in 2usize..8, iters in 1usize..6) {
        let rows = vec![row.clone(); k];
        let obs = ObservationMatrix::continuous(&rows).unwrap();
        let opts = CrhOptions { iterations: iters, init: TruthInit::Mean, early_stop: false };
        let out = run_crh(&obs, &opts, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        for t in &out.trace {
            for (x, r) in t.truths.values().iter().zip(&row) {
                prop_assert!(close(*x, *r));
            }
            for w in &t.weights.0 {
                prop_assert!(close(*w, (k as f64).ln()));
            }
        }
    }

    #[test]
    fn truths_invariant_under_weight_scaling(rows in sized_matrix(), ws in prop::collection::vec(0.01f64..10.0, 8), c in 0.001f64..1000.0) {
        let obs = ObservationMatrix::continuous(&rows).unwrap();
        let w = WeightVector(ws[..rows.len()].to_vec());
        let scaled = WeightVector(w.0.iter().map(|x| x * c).collect());
        let a = update_truths(&obs, &w).unwrap();
        let b = update_truths(&obs, &scaled).unwrap();
        for (x, y) in a.values().iter().zip(b.values()) {
            prop_assert!(close(*x, *y), "{x} vs {y}");
        }
        prop_assert_eq!(w.argmax(), scaled.argmax());
    }

    /// Positive weights give a convex combination of the readings.
    #[test]
    fn truths_within_reading_range(rows in sized_matrix(), ws in prop::collection::vec(0.01f64..10.0, 8)) {
        let obs = ObservationMatrix::continuous(&rows).unwrap();
        let t = update_truths(&obs, &WeightVector(ws[..rows.len()].to_vec())).unwrap();
        for m in 0..obs.objects() {
            let lo = rows.iter().map(|r| r[m]).fold(f64::INFINITY, f64::min);
            let hi = rows.iter().map(|r| r[m]).fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(t.value(m) >= lo - 1e-9 && t.value(m) <= hi + 1e-9);
        }
    }

    /// Closer devices never get less weight.
    #[test]
    fn weights_order_by_distance(dists in prop::collection::vec(1e-6f64..1e6, 2..10)) {
        let w = weights_from_distances(&dists);
        for i in 0..dists.len() {
            for j in 0..dists.len() {
                if dists[i] < dists[j] {
                    prop_assert!(w.0[i] > w.0[j]);
                }
            }
        }
    }

    #[test]
    fn categorical_truths_are_distributions(
        choices in prop::collection::vec(2usize..5, 1..5),
        k in 2usize..7,
        picks_seed: u64,
        ws in prop::collection::vec(0.01f64..5.0, 7),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(picks_seed);
        let picks: Vec<Vec<usize>> = (0..k)
            .map(|_| choices.iter().map(|&c| rand::Rng::random_range(&mut rng, 0..c)).collect())
            .collect();
        let obs = ObservationMatrix::categorical(&choices, &picks).unwrap();
        let t = update_truths(&obs, &WeightVector(ws[..k].to_vec())).unwrap();
        for (m, &c) in choices.iter().enumerate() {
            let p = t.get(m);
            prop_assert_eq!(p.len(), c);
            prop_assert!(close(p.iter().sum::<f64>(), 1.0));
            prop_assert!(p.iter().all(|&x| x >= 0.0));
        }
    }

    /// Full presence reproduces the unrestricted run.
    #[test]
    fn full_presence_is_plain_crh(rows in sized_matrix(), seed: u64) {
        let obs = ObservationMatrix::continuous(&rows).unwrap();
        let opts = CrhOptions { iterations: 4, ..CrhOptions::default() };
        let plain = run_crh(&obs, &opts, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let presence = vec![vec![true; rows.len()]; 4];
        let with = run_crh_with_presence(&obs, &opts, &mut ChaCha8Rng::seed_from_u64(seed), &presence).unwrap();
        prop_assert_eq!(plain, with);
    }

    /// Dropping a device in a round equals running that round on the
    /// survivors alone.
    #[test]
    fn absent_device_matches_subset(rows in (3usize..7, 1usize..5).prop_flat_map(|(k, m)| matrix(k, m)), drop in 0usize..7) {
        let k = rows.len();
        let drop = drop % k;
        let obs = ObservationMatrix::continuous(&rows).unwrap();
        let dev = std_pass(&obs);
        let init = TruthVector::scalars(dev.mean.clone());
        let opts = CrhOptions { iterations: 1, init: TruthInit::Given(init.clone()), early_stop: false };
        let mut presence = vec![vec![true; k]];
        presence[0][drop] = false;
        let out = run_crh_with_presence(&obs, &opts, &mut ChaCha8Rng::seed_from_u64(0), &presence).unwrap();
        let survivors: Vec<usize> = (0..k).filter(|&i| i != drop).collect();
        let dists: Vec<f64> = survivors.iter().map(|&i| device_distance(&obs, i, &init, &dev)).collect();
        let w = weights_from_distances(&dists);
        match update_truths(&obs.select(&survivors).unwrap(), &w) {
            Ok(expected) => {
                for (a, b) in out.truths.values().iter().zip(expected.values()) {
                    prop_assert!(close(*a, *b));
                }
            }
            Err(e) => prop_assert_eq!(e, TruthError::DegenerateWeights),
        }
        prop_assert_eq!(out.weights.0[drop], 0.0);
    }
}

#[test]
fn closer_device_wins_weight() {
    let rows = vec![vec![10.0, 20.0], vec![10.1, 19.9], vec![14.0, 25.0]];
    let obs = ObservationMatrix::continuous(&rows).unwrap();
    let truths = TruthVector::scalars(vec![10.0, 20.0]);
    let w = update_weights(&obs, &truths, &std_pass(&obs));
    assert_eq!(w.argmax(), Some(0));
    assert!(w.0[1] > w.0[2]);
}
