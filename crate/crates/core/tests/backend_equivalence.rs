use qfill_core::pqfm::{assign_features, build_circuit, capacity, CouplingMode};
use qfill_core::qsim::{init_fiducial, Backend, QuantumState};
use qfill_core::seed;
use rand::Rng;

fn max_gap(a: &QuantumState, b: &QuantumState) -> f64 {
    a.single_site_expectations()
        .iter()
        .zip(b.single_site_expectations())
        .flat_map(|(x, y)| (0..3).map(move |k| (x[k] - y[k]).abs()))
        .fold(0.0, f64::max)
}

/// Random ansatz circuits, including rank-deficient two-site updates from
/// zero-angle slots, agree between the dense and untruncated MPS backends.
#[test]
fn untruncated_mps_matches_dense() {
    for stream in [202, 7, 8] {
        let mut rng = seed::rng(stream);
        for _ in 0..40 {
            let n = rng.random_range(2..=10usize);
            let blocks = rng.random_range(1..=2usize);
            let mode = if rng.random::<bool>() { CouplingMode::Scalar } else { CouplingMode::Triple };
            let p = rng.random_range(1..=capacity(n, blocks, mode));
            let assignment = assign_features(p, n, blocks, mode).unwrap();
            let angles: Vec<f64> = (0..p).map(|_| rng.random_range(-6.3..6.3)).collect();
            let alpha = rng.random_range(0.1..2.0);
            let fid_seed = rng.random::<u64>();
            let gates = build_circuit(&angles, &assignment, alpha).unwrap();
            let mut dense = init_fiducial(n, fid_seed, Backend::Dense).unwrap();
            let mut mps = init_fiducial(n, fid_seed, Backend::mps_exact()).unwrap();
            dense.apply_gates(&gates).unwrap();
            mps.apply_gates(&gates).unwrap();
            assert!((mps.norm_sqr() - 1.0).abs() < 1e-10, "norm {}", mps.norm_sqr());
            let gap = max_gap(&dense, &mps);
            assert!(gap < 1e-10, "n={n} B={blocks} {mode:?} p={p}: gap {gap:e}");
        }
    }
}
