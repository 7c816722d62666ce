use qfill_core::learners::{
    auc, predict_proba, train, Criterion, GbtParams, LrParams, Matrix, MlpParams, ModelParams, RfParams, TrainedModel,
};
use qfill_core::seed;
use rand::Rng;

fn gaussian_problem(n: usize, p: usize, informative: bool, seed_value: u64) -> (Matrix, Vec<u8>) {
    let mut rng = seed::rng(seed_value);
    let mut data = Vec::with_capacity(n * p);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let row: Vec<f64> = (0..p).map(|_| rng.random_range(-1.0..1.0)).collect();
        let z = if informative { 3.0 * row[0] - 2.0 * row[1] } else { 0.0 };
        let prob = 1.0 / (1.0 + (-z).exp());
        y.push(u8::from(rng.random::<f64>() < prob));
        data.extend(row);
    }
    (Matrix::new(n, p, data), y)
}

fn all_families() -> Vec<ModelParams> {
    vec![
        ModelParams::Lr(LrParams::default()),
        ModelParams::Gbt(GbtParams { n_estimators: 30, ..Default::default() }),
        ModelParams::Rf(RfParams { n_estimators: 30, criterion: Criterion::Entropy, ..Default::default() }),
        ModelParams::Mlp(MlpParams { hidden_layer_sizes: vec![16], max_iter: 50, ..Default::default() }),
    ]
}

#[test]
fn boosting_ignores_monotone_rescaling() {
    // every row is in the training set, so all of them fall on the same side
    // of every split under a strictly increasing feature map
    let (x, y) = gaussian_problem(300, 4, true, 1);
    let warped = x.map(|v| (2.0 * v).exp() + 3.0);
    let params = ModelParams::Gbt(GbtParams { n_estimators: 20, ..Default::default() });
    let a = train(&params, &x, &y, 9).unwrap();
    let b = train(&params, &warped, &y, 9).unwrap();
    assert_eq!(predict_proba(&a, &x).unwrap(), predict_proba(&b, &warped).unwrap());
}

#[test]
fn forest_ignores_exact_rescaling() {
    // out-of-bag rows meet midpoint thresholds, which only a scaling by a
    // power of two maps exactly
    let (x, y) = gaussian_problem(300, 4, true, 1);
    let scaled = x.map(|v| v * 8.0);
    for criterion in [Criterion::Gini, Criterion::Entropy] {
        let params = ModelParams::Rf(RfParams { n_estimators: 20, criterion, ..Default::default() });
        let a = train(&params, &x, &y, 9).unwrap();
        let b = train(&params, &scaled, &y, 9).unwrap();
        assert_eq!(predict_proba(&a, &x).unwrap(), predict_proba(&b, &scaled).unwrap());
    }
}

#[test]
fn uninformative_features_score_near_chance() {
    let (x, y) = gaussian_problem(1500, 5, false, 2);
    let (xt, yt) = gaussian_problem(3000, 5, false, 3);
    for params in all_families() {
        let m = train(&params, &x, &y, 4).unwrap();
        let a = auc(&predict_proba(&m, &xt).unwrap(), &yt).unwrap();
        assert!((a - 0.5).abs() < 0.06, "{}: auc {a}", params.describe());
    }
}

#[test]
fn informative_features_are_learned() {
    let (x, y) = gaussian_problem(1500, 5, true, 5);
    let (xt, yt) = gaussian_problem(3000, 5, true, 6);
    for params in all_families() {
        let m = train(&params, &x, &y, 7).unwrap();
        let a = auc(&predict_proba(&m, &xt).unwrap(), &yt).unwrap();
        assert!(a > 0.75, "{}: auc {a}", params.describe());
    }
}

#[test]
fn saved_models_predict_identically() {
    let (x, y) = gaussian_problem(200, 3, true, 8);
    for params in all_families() {
        let m = train(&params, &x, &y, 1).unwrap();
        let back = TrainedModel::from_json(&m.to_json()).unwrap();
        assert_eq!(back.checksum(), m.checksum());
        assert_eq!(predict_proba(&back, &x).unwrap(), predict_proba(&m, &x).unwrap());
    }
}

#[test]
fn fixed_seed_fits_are_reproducible() {
    let (x, y) = gaussian_problem(200, 3, true, 10);
    for params in all_families() {
        let a = train(&params, &x, &y, 42).unwrap();
        let b = train(&params, &x, &y, 42).unwrap();
        assert_eq!(a.checksum(), b.checksum(), "{}", params.describe());
    }
}
