use qfill_core::cqem::{build_index, compute_kappa, match_events, MatchConfig};
use qfill_core::data::{read_dataset, write_dataset, EventDataset, TradeEvent};
use qfill_core::pqfm::{preset, transform_batch, AnsatzConfig, FeatureMap};
use qfill_core::preprocess::fit_scaler;
use qfill_core::qsim::NoiseConfig;
use qfill_core::synth::{generate, SynthConfig};

fn small_dataset(n: usize, seed: u64) -> EventDataset {
    let cfg = SynthConfig {
        n_events: n,
        feature_count: 10,
        signal_feature_count: 4,
        events_per_day: 100,
        base_seed: seed,
        ..Default::default()
    };
    generate(&cfg).unwrap().0
}

fn map_for(ds: &EventDataset, cfg: AnsatzConfig) -> FeatureMap {
    FeatureMap::new(cfg, fit_scaler(ds).unwrap()).unwrap()
}

#[test]
fn projection_keeps_identity_columns_and_bounds() {
    let ds = small_dataset(200, 1);
    let q = transform_batch(&ds, &map_for(&ds, preset("shorter", 6).unwrap())).unwrap();
    assert_eq!(q.len(), ds.len());
    assert_eq!(q.feature_count(), 18);
    assert_eq!(q.feature_names().unwrap()[..3], ["XQ0", "YQ0", "ZQ0"]);
    for (a, b) in ds.events().iter().zip(q.events()) {
        assert_eq!((a.timestamp, a.event_id, a.label), (b.timestamp, b.event_id, b.label));
        assert!(b.features.iter().all(|v| v.abs() <= 1.0));
    }
    assert_eq!(q.provenance(), "pqfm-sim");
}

#[test]
fn sampled_noise_is_keyed_by_event() {
    let ds = small_dataset(120, 2);
    let cfg = AnsatzConfig {
        qubits: 6,
        shots: Some(256),
        noise: NoiseConfig { p2: 0.01, readout_flip: 0.02, noise_seed: 3, ..Default::default() },
        ..preset("shorter", 6).unwrap()
    };
    let map = map_for(&ds, cfg);
    let full = transform_batch(&ds, &map).unwrap();
    assert_eq!(full.provenance(), "pqfm-noisy");
    // any subset reproduces the same rows: noise depends on the event, not its position
    let subset: Vec<TradeEvent> = ds.events().iter().skip(1).step_by(7).cloned().collect();
    let sub = EventDataset::new(ds.feature_count(), subset, None, "subset").unwrap();
    let part = transform_batch(&sub, &map).unwrap();
    for e in part.events() {
        let same = full.events().iter().find(|f| f.event_id == e.event_id).unwrap();
        assert_eq!(e.features, same.features);
    }
}

#[test]
fn readout_flips_contract_single_qubit_expectations() {
    let ds = small_dataset(40, 3);
    let exact = map_for(&ds, preset("longer", 5).unwrap());
    let eps = 0.05;
    let noisy_cfg = AnsatzConfig {
        noise: NoiseConfig { readout_flip: eps, ..Default::default() },
        ..preset("longer", 5).unwrap()
    };
    let noisy = map_for(&ds, noisy_cfg);
    for e in ds.events() {
        let a = exact.transform(&e.features, e.event_id).unwrap();
        let b = noisy.transform(&e.features, e.event_id).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x * (1.0 - 2.0 * eps) - y).abs() < 1e-14);
        }
    }
}

#[test]
fn projected_csv_round_trips_exactly() {
    let ds = small_dataset(50, 4);
    let q = transform_batch(&ds, &map_for(&ds, preset("shorter", 6).unwrap())).unwrap();
    let mut buf = Vec::new();
    write_dataset(&q, &mut buf).unwrap();
    let back = read_dataset(buf.as_slice(), "roundtrip").unwrap();
    assert_eq!(back.events(), q.events());
}

#[test]
fn matching_serves_group_means_and_ignores_labels() {
    let sample = small_dataset(300, 5);
    let quantum = transform_batch(&sample, &map_for(&sample, preset("shorter", 6).unwrap())).unwrap();
    let cfg = MatchConfig { n_bins: 4, exclude_source: false };
    let index = build_index(&sample, &quantum, &cfg).unwrap();

    let relabeled: Vec<TradeEvent> =
        sample.events().iter().map(|e| TradeEvent { label: e.label.map(|l| 1 - l), ..e.clone() }).collect();
    let relabeled = EventDataset::new(sample.feature_count(), relabeled, None, "relabeled").unwrap();
    assert_eq!(build_index(&relabeled, &quantum, &cfg).unwrap(), index);

    let (matched, report) = match_events(&index, &sample, &cfg).unwrap();
    assert_eq!(report.matched, sample.len());
    for (e, m) in sample.events().iter().zip(matched.events()) {
        assert_eq!((e.event_id, e.label), (m.event_id, m.label));
        let k = compute_kappa(&e.features, 4).unwrap();
        let members: Vec<&TradeEvent> = sample
            .events()
            .iter()
            .zip(quantum.events())
            .filter(|(c, _)| compute_kappa(&c.features, 4).unwrap() == k)
            .map(|(_, q)| q)
            .collect();
        for (j, v) in m.features.iter().enumerate() {
            let mean = members.iter().map(|q| q.features[j]).sum::<f64>() / members.len() as f64;
            assert!((v - mean).abs() < 1e-12);
        }
    }

    let excluded = match_events(&index, &sample, &MatchConfig { n_bins: 4, exclude_source: true }).unwrap().1;
    assert_eq!((excluded.candidates, excluded.matched), (0, 0));
}
