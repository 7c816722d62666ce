//! Stand-in noise channels: shot sampling with readout flips, trajectory
//! two-qubit depolarizing noise, and a common-mode random-walk drift on
//! expectation values.

use rand::Rng as _;
use rand_distr::{Binomial, Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{kron2, Pauli, QsimError, QuantumState};
use crate::data::TradeEvent;
use crate::seed::{self, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriftMode {
    #[default]
    None,
    RandomWalk,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct DriftConfig {
    pub mode: DriftMode,
    /// Standard deviation of the walk increment per processed event.
    pub step_sigma: f64,
}

impl DriftConfig {
    pub fn random_walk(step_sigma: f64) -> Self {
        Self { mode: DriftMode::RandomWalk, step_sigma }
    }

    pub fn is_active(&self) -> bool {
        self.mode == DriftMode::RandomWalk && self.step_sigma > 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseConfig {
    /// Depolarizing probability after each pair rotation.
    pub p2: f64,
    pub readout_flip: f64,
    pub drift: DriftConfig,
    pub noise_seed: u64,
}

impl NoiseConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(0.0..=0.5).contains(&self.p2) {
            return Err(format!("p2 = {} outside [0, 0.5]", self.p2));
        }
        if !(0.0..=0.5).contains(&self.readout_flip) {
            return Err(format!("readout_flip = {} outside [0, 0.5]", self.readout_flip));
        }
        if !(self.drift.step_sigma >= 0.0) {
            return Err("drift.step_sigma must be non-negative".into());
        }
        Ok(())
    }

    pub fn is_noiseless(&self) -> bool {
        self.p2 == 0.0 && self.readout_flip == 0.0 && !self.drift.is_active()
    }
}

/// Mean of `shots` ±1 outcomes with `P(+1) = (1 + ⟨P⟩)/2`, each flipped with
/// probability `readout_flip`.
pub fn sample_expectation(expectation: f64, shots: u64, readout_flip: f64, rng: &mut Rng) -> f64 {
    assert!(shots >= 1, "shots must be positive");
    let p_plus = ((1.0 + expectation.clamp(-1.0, 1.0)) / 2.0).clamp(0.0, 1.0);
    // a flipped Bernoulli(p) outcome is Bernoulli(p(1-ε) + (1-p)ε)
    let p_obs = p_plus * (1.0 - readout_flip) + (1.0 - p_plus) * readout_flip;
    let plus = Binomial::new(shots, p_obs).expect("probability in [0, 1]").sample(rng);
    (2.0 * plus as f64 - shots as f64) / shots as f64
}

/// With probability `p2` applies a uniformly random non-identity two-qubit
/// Pauli on `sites`. Returns the inserted Pauli pair, if any.
pub fn apply_depolarizing(
    state: &mut QuantumState,
    sites: (usize, usize),
    p2: f64,
    rng: &mut Rng,
) -> Result<Option<(Pauli, Pauli)>, QsimError> {
    if p2 <= 0.0 || rng.random::<f64>() >= p2 {
        return Ok(None);
    }
    const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];
    let k = rng.random_range(1..16usize);
    let (pa, pb) = (ALL[k / 4], ALL[k % 4]);
    let n = state.qubit_count();
    for s in [sites.0, sites.1] {
        if s >= n {
            return Err(QsimError::SiteOutOfRange { site: s, qubits: n });
        }
    }
    if sites.1 == sites.0 + 1 {
        state.apply_two(sites.0, sites.1, &kron2(&pa.matrix(), &pb.matrix()))?;
    } else {
        state.apply_single(sites.0, &pa.matrix());
        state.apply_single(sites.1, &pb.matrix());
    }
    Ok(Some((pa, pb)))
}

/// Common-mode offset added to every expectation value; one step per event.
#[derive(Debug, Clone)]
pub struct DriftWalk {
    config: DriftConfig,
    offset: f64,
    rng: Rng,
}

impl DriftWalk {
    pub fn new(config: DriftConfig, seed: u64) -> Self {
        Self { config, offset: 0.0, rng: seed::derived_rng(seed, &[0xD1F7]) }
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn advance(&mut self) -> f64 {
        if self.config.is_active() {
            let step = Normal::new(0.0, self.config.step_sigma).expect("finite sigma");
            self.offset += step.sample(&mut self.rng);
        }
        self.offset
    }

    pub fn apply(&self, features: &mut [f64]) {
        if self.config.is_active() {
            for v in features.iter_mut() {
                *v = (*v + self.offset).clamp(-1.0, 1.0);
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftProbe {
    /// Mean over consecutive runs of the mean absolute feature change.
    pub mean_abs_step: f64,
    /// Median of the per-run mean observable over the last third minus that
    /// over the first third.
    pub median_shift_first_last_third: f64,
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Feeds the same event through `transform` `repeats` times while a drift walk
/// advances once per run.
pub fn drift_probe<F>(
    mut transform: F,
    event: &TradeEvent,
    repeats: usize,
    drift: DriftConfig,
    seed: u64,
) -> DriftProbe
where
    F: FnMut(&TradeEvent) -> Vec<f64>,
{
    assert!(repeats >= 9, "drift probe needs at least 9 repeats");
    let mut walk = DriftWalk::new(drift, seed);
    let mut prev: Option<Vec<f64>> = None;
    let mut step_sum = 0.0;
    let mut means = Vec::with_capacity(repeats);
    for _ in 0..repeats {
        walk.advance();
        let mut x = transform(event);
        walk.apply(&mut x);
        let q = x.len().max(1) as f64;
        means.push(x.iter().sum::<f64>() / q);
        if let Some(p) = &prev {
            step_sum += p.iter().zip(&x).map(|(a, b)| (a - b).abs()).sum::<f64>() / q;
        }
        prev = Some(x);
    }
    let third = repeats / 3;
    DriftProbe {
        mean_abs_step: step_sum / (repeats - 1) as f64,
        median_shift_first_last_third: median(&means[repeats - third..]) - median(&means[..third]),
    }
}

/// Expected `|median shift|` for a Gaussian random walk with step `sigma`
/// over `repeats` runs.
///
/// The shift splits into the walk increment across the middle third
/// (variance `σ²r/3`) plus the deviation of each third's median from its
/// inner endpoint. The median of Brownian motion on `[0, L]` is distributed as
/// `√L·(|Z₁| − |Z₂|)/√2`, variance `L(1 − 2/π)`. Treating the sum as Gaussian
/// gives `E|D| ≈ σ·√(2/π)·√((r/3)(3 − 4/π))`.
pub fn analytic_median_shift(step_sigma: f64, repeats: usize) -> f64 {
    use std::f64::consts::PI;
    let third = repeats as f64 / 3.0;
    step_sigma * (2.0 / PI).sqrt() * (third * (3.0 - 4.0 / PI)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qsim::{Axis, Backend, GateOp, PauliString};

    #[test]
    fn perfect_expectation_samples_exactly() {
        let mut rng = seed::rng(1);
        for shots in [1, 7, 4096] {
            assert_eq!(sample_expectation(1.0, shots, 0.0, &mut rng), 1.0);
            assert_eq!(sample_expectation(-1.0, shots, 0.0, &mut rng), -1.0);
        }
    }

    #[test]
    fn readout_flip_scales_mean() {
        let mut rng = seed::rng(2);
        let est = sample_expectation(1.0, 4096, 0.1, &mut rng);
        // mean 0.8, variance of the mean (1 - 0.64)/4096
        let sigma = ((1.0 - 0.64) / 4096.0_f64).sqrt();
        assert!((est - 0.8).abs() <= 3.0 * sigma, "{est}");
    }

    #[test]
    fn depolarizing_zero_is_identity() {
        let mut s = crate::qsim::init_fiducial(3, 1, Backend::Dense).unwrap();
        let before = s.to_amplitudes();
        let mut rng = seed::rng(0);
        assert_eq!(apply_depolarizing(&mut s, (0, 1), 0.0, &mut rng).unwrap(), None);
        assert_eq!(before, s.to_amplitudes());
    }

    #[test]
    fn depolarizing_certain_is_reproducible() {
        let run = || {
            let mut s = crate::qsim::init_fiducial(3, 1, Backend::mps(8)).unwrap();
            let mut rng = seed::rng(17);
            let hit = apply_depolarizing(&mut s, (1, 2), 1.0, &mut rng).unwrap();
            (hit, s.to_amplitudes())
        };
        let (h1, a1) = run();
        let (h2, a2) = run();
        assert!(h1.is_some());
        assert_eq!(h1, h2);
        assert_eq!(a1, a2);
    }

    /// Exact two-qubit density-matrix evolution under the same channel.
    fn density_matrix_z(gates: usize, theta: f64, p2: f64) -> f64 {
        use num_complex::Complex64 as C;
        let zero = C::new(0.0, 0.0);
        let mut rho = [[zero; 4]; 4];
        rho[0][0] = C::new(1.0, 0.0);
        let mul = |a: &[[C; 4]; 4], b: &[[C; 4]; 4]| {
            let mut o = [[zero; 4]; 4];
            for i in 0..4 {
                for j in 0..4 {
                    for k in 0..4 {
                        o[i][j] += a[i][k] * b[k][j];
                    }
                }
            }
            o
        };
        let dag = |a: &[[C; 4]; 4]| {
            let mut o = [[zero; 4]; 4];
            for i in 0..4 {
                for j in 0..4 {
                    o[i][j] = a[j][i].conj();
                }
            }
            o
        };
        const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];
        let u = crate::qsim::pair_rotation_matrix(Axis::ZZ, theta);
        for _ in 0..gates {
            rho = mul(&mul(&u, &rho), &dag(&u));
            let mut mixed = [[zero; 4]; 4];
            for k in 1..16 {
                let p = kron2(&ALL[k / 4].matrix(), &ALL[k % 4].matrix());
                let term = mul(&mul(&p, &rho), &dag(&p));
                for i in 0..4 {
                    for j in 0..4 {
                        mixed[i][j] += term[i][j] * (p2 / 15.0);
                    }
                }
            }
            for i in 0..4 {
                for j in 0..4 {
                    rho[i][j] = rho[i][j] * (1.0 - p2) + mixed[i][j];
                }
            }
        }
        // Z on the first qubit (high local bit)
        (rho[0][0] + rho[1][1] - rho[2][2] - rho[3][3]).re
    }

    #[test]
    fn trajectories_match_density_matrix() {
        let (gates, theta, p2, trajectories) = (10, 0.3, 0.05, 2000);
        let mut rng = seed::rng(5);
        let mut acc = 0.0;
        let mut clean = 0.0;
        for _ in 0..trajectories {
            let mut s = QuantumState::zero(2, Backend::Dense).unwrap();
            let mut c = QuantumState::zero(2, Backend::Dense).unwrap();
            for _ in 0..gates {
                let g = GateOp::pair(Axis::ZZ, theta, 0);
                s.apply_gate(&g).unwrap();
                c.apply_gate(&g).unwrap();
                apply_depolarizing(&mut s, (0, 1), p2, &mut rng).unwrap();
            }
            acc += s.expectation(&PauliString::single(0, Pauli::Z)).unwrap();
            clean += c.expectation(&PauliString::single(0, Pauli::Z)).unwrap();
        }
        let noisy = acc / trajectories as f64;
        let clean = clean / trajectories as f64;
        let exact = density_matrix_z(gates, theta, p2);
        let exact_clean = density_matrix_z(gates, theta, 0.0);
        assert!((clean - exact_clean).abs() < 1e-12);
        let decay = exact_clean - exact;
        assert!(decay > 0.0);
        assert!(((clean - noisy) - decay).abs() <= 0.2 * decay, "{} vs {decay}", clean - noisy);
    }

    #[test]
    fn drift_off_gives_zero_probe() {
        let ev = TradeEvent::new(0, 0, vec![0.1, 0.2], None);
        let probe = drift_probe(|e| e.features.clone(), &ev, 30, DriftConfig::default(), 3);
        assert_eq!(probe.mean_abs_step, 0.0);
        assert_eq!(probe.median_shift_first_last_third, 0.0);
    }

    #[test]
    fn analytic_shift_matches_walk_simulation() {
        // direct simulation of the 1D walk, independent of drift_probe
        let (sigma, repeats, sims) = (1e-3, 900, 4000);
        let normal = Normal::new(0.0, sigma).unwrap();
        let mut rng = seed::rng(99);
        let mut total = 0.0;
        for _ in 0..sims {
            let mut w = 0.0;
            let path: Vec<f64> = (0..repeats)
                .map(|_| {
                    w += normal.sample(&mut rng);
                    w
                })
                .collect();
            let third = repeats / 3;
            total += (median(&path[repeats - third..]) - median(&path[..third])).abs();
        }
        let simulated = total / sims as f64;
        let analytic = analytic_median_shift(sigma, repeats);
        assert!((simulated - analytic).abs() / simulated < 0.05, "{simulated} vs {analytic}");
    }

    #[test]
    fn validation() {
        assert!(NoiseConfig { p2: 0.6, ..Default::default() }.validate().is_err());
        assert!(NoiseConfig { readout_flip: -0.1, ..Default::default() }.validate().is_err());
        assert!(NoiseConfig::default().validate().is_ok());
        assert!(NoiseConfig::default().is_noiseless());
    }
}
