use tarstop::sim::{
    gen_synthetic, ingest_record, record_to_json, replicate, replicate_with, Execution,
};
use tarstop::{RecallLevel, RuleConfig, SyntheticModel};

#[test]
fn pet_undershoots_and_qpet_does_not_on_a_census() {
    let record = gen_synthetic(&SyntheticModel::all_relevant(10_000), 0).unwrap();
    let half = RecallLevel::from_ratio(1, 2).unwrap();
    let pet = replicate(&record, &RuleConfig::pet(10, half).unwrap(), 20_000, 3).unwrap();
    let qpet = replicate(&record, &RuleConfig::qpet(10, half).unwrap(), 20_000, 3).unwrap();
    let (pet_mean, pet_se) = pet.mean_recall();
    let (qpet_mean, qpet_se) = qpet.mean_recall();
    // E[D_k] / N = k (N + 1) / ((n + 1) N) with k = 5 for PET and 6 for QPET.
    let expect = |k: f64| k * 10_001.0 / (11.0 * 10_000.0);
    assert!((pet_mean - expect(5.0)).abs() < 4.0 * pet_se);
    assert!((qpet_mean - expect(6.0)).abs() < 4.0 * qpet_se);
    assert!(pet_mean < 0.5 && qpet_mean > 0.5);
}

#[test]
fn larger_samples_tighten_qbcb_recall() {
    let record = gen_synthetic(&SyntheticModel::geometric(50_000, 0.04, 5.0), 21).unwrap();
    let spread = |r: u64| {
        let s = replicate(&record, &RuleConfig::qbcb(r, 0.8, 0.05).unwrap(), 2000, 4).unwrap();
        assert!(s.coverage(0.8) > 0.93, "r={r}: {}", s.coverage(0.8));
        (s.recall_stats.q3 - s.recall_stats.q1, s.recall_stats.median)
    };
    let (iqr_small, median_small) = spread(14);
    let (iqr_mid, median_mid) = spread(50);
    let (iqr_large, median_large) = spread(158);
    assert!(iqr_small > iqr_mid && iqr_mid > iqr_large);
    assert!(median_small > median_mid && median_mid > median_large);
    assert!(median_large > 0.8);
}

#[test]
fn records_survive_a_json_round_trip() {
    let record = gen_synthetic(&SyntheticModel::uniform(3000, 0.05), 9)
        .unwrap()
        .with_batch_size(50);
    let back = ingest_record(&record_to_json(&record)).unwrap();
    assert_eq!(back, record);
    let cfg = RuleConfig::countdown(15, 0.8, None).unwrap();
    let a = replicate_with(&record, &cfg, 200, 6, Execution::Sequential).unwrap();
    let b = replicate_with(&back, &cfg, 200, 6, Execution::Parallel).unwrap();
    assert_eq!(a, b);
}
