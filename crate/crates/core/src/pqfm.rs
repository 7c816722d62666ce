//! Projected quantum feature map over a Heisenberg-type ansatz.
//!
//! Each encoded feature becomes the coupling of one nearest-neighbour bond in
//! one Trotter repetition. A block holds two repetitions; each repetition
//! applies `XX`, `YY`, `ZZ` rotations on the odd bonds and then on the even
//! bonds of a 1D chain. The evolved fiducial state is read out through a set
//! of Pauli observables, giving one bounded feature per observable.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{EventDataset, TradeEvent};
use crate::preprocess::{encode_angles, PreprocessError, Scaler};
use crate::qsim::{
    apply_depolarizing, init_fiducial, sample_expectation, Axis, Backend, DriftWalk, GateOp, NoiseConfig, Pauli,
    PauliString, QsimError, QuantumState,
};
use crate::seed;

#[derive(Debug, Error, PartialEq)]
pub enum PqfmError {
    #[error("{p} features exceed capacity {capacity}; need at least {min_qubits} qubits or {min_blocks} blocks")]
    CapacityExceeded { p: usize, capacity: usize, min_qubits: usize, min_blocks: usize },
    #[error("expected {expected} features, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid ansatz configuration: {0}")]
    InvalidConfig(String),
    #[error("unknown preset {0:?}; expected \"shorter\" or \"longer\"")]
    UnknownPreset(String),
    #[error(transparent)]
    Qsim(#[from] QsimError),
    #[error(transparent)]
    Preprocess(#[from] PreprocessError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CouplingMode {
    /// One feature drives the `XX`, `YY` and `ZZ` rotations of a bond.
    #[default]
    Scalar,
    /// Each axis of each bond carries its own feature.
    Triple,
}

impl CouplingMode {
    fn slots_per_bond(self) -> usize {
        match self {
            CouplingMode::Scalar => 1,
            CouplingMode::Triple => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnsatzConfig {
    pub qubits: usize,
    pub blocks: usize,
    pub alpha: f64,
    /// Seed of the fiducial product state.
    pub seed: u64,
    pub coupling_mode: CouplingMode,
    pub backend: Backend,
    /// `None` reads exact expectation values.
    pub shots: Option<u64>,
    pub noise: NoiseConfig,
    /// Extra observables appended after the single-qubit ones.
    pub extra_observables: Vec<PauliString>,
}

impl Default for AnsatzConfig {
    fn default() -> Self {
        Self {
            qubits: 16,
            blocks: 1,
            alpha: 1.0,
            seed: 1,
            coupling_mode: CouplingMode::Scalar,
            backend: Backend::default(),
            shots: None,
            noise: NoiseConfig::default(),
            extra_observables: Vec::new(),
        }
    }
}

impl AnsatzConfig {
    pub fn validate(&self) -> Result<(), PqfmError> {
        if self.qubits < 2 {
            return Err(PqfmError::InvalidConfig(format!("qubits = {} < 2", self.qubits)));
        }
        if self.blocks < 1 {
            return Err(PqfmError::InvalidConfig("blocks must be at least 1".into()));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(PqfmError::InvalidConfig(format!("alpha = {} must be positive", self.alpha)));
        }
        if self.shots == Some(0) {
            return Err(PqfmError::InvalidConfig("shots must be positive".into()));
        }
        self.noise.validate().map_err(PqfmError::InvalidConfig)?;
        for o in &self.extra_observables {
            o.check_sites(self.qubits)?;
        }
        Ok(())
    }

    /// Trotter repetitions: two per block.
    pub fn repetitions(&self) -> usize {
        2 * self.blocks
    }

    pub fn capacity(&self) -> usize {
        capacity(self.qubits, self.blocks, self.coupling_mode)
    }

    pub fn is_exact(&self) -> bool {
        self.shots.is_none() && self.noise.is_noiseless()
    }
}

/// Named circuit settings; the qubit count is supplied by the caller.
pub fn preset(name: &str, qubits: usize) -> Result<AnsatzConfig, PqfmError> {
    let (blocks, alpha, seed) = match name {
        "shorter" => (1, 1.0, 1),
        "longer" => (2, 0.1, 0),
        other => return Err(PqfmError::UnknownPreset(other.to_string())),
    };
    Ok(AnsatzConfig { qubits, blocks, alpha, seed, ..AnsatzConfig::default() })
}

pub fn capacity(qubits: usize, blocks: usize, mode: CouplingMode) -> usize {
    blocks * 2 * qubits.saturating_sub(1) * mode.slots_per_bond()
}

/// Bond `j` couples qubits `(j, j+1)`; odd bonds run first in each repetition.
pub fn bond_order(qubits: usize) -> Vec<usize> {
    let bonds = qubits.saturating_sub(1);
    (1..bonds).step_by(2).chain((0..bonds).step_by(2)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Slot {
    pub repetition: usize,
    /// First qubit of the bond.
    pub bond: usize,
    /// Set in triple mode only.
    pub axis: Option<Axis>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureAssignment {
    pub qubits: usize,
    pub blocks: usize,
    pub coupling_mode: CouplingMode,
    /// Slot of feature `k`.
    pub slots: Vec<Slot>,
    pub capacity: usize,
}

impl FeatureAssignment {
    pub fn feature_count(&self) -> usize {
        self.slots.len()
    }
}

/// Fills slots repetition-major, bonds in execution order, axes `XX, YY, ZZ`.
pub fn assign_features(
    p: usize,
    qubits: usize,
    blocks: usize,
    mode: CouplingMode,
) -> Result<FeatureAssignment, PqfmError> {
    if qubits < 2 || blocks < 1 {
        return Err(PqfmError::InvalidConfig(format!("qubits = {qubits}, blocks = {blocks}")));
    }
    let cap = capacity(qubits, blocks, mode);
    if p > cap {
        let per_rep = 2 * blocks * mode.slots_per_bond();
        let min_qubits = p.div_ceil(per_rep) + 1;
        let per_block = 2 * (qubits - 1) * mode.slots_per_bond();
        let min_blocks = p.div_ceil(per_block);
        return Err(PqfmError::CapacityExceeded { p, capacity: cap, min_qubits, min_blocks });
    }
    let order = bond_order(qubits);
    let axes: &[Option<Axis>] = match mode {
        CouplingMode::Scalar => &[None],
        CouplingMode::Triple => &[Some(Axis::XX), Some(Axis::YY), Some(Axis::ZZ)],
    };
    let slots = (0..2 * blocks)
        .flat_map(|repetition| {
            order.iter().flat_map(move |&bond| axes.iter().map(move |&axis| Slot { repetition, bond, axis }))
        })
        .take(p)
        .collect();
    Ok(FeatureAssignment { qubits, blocks, coupling_mode: mode, slots, capacity: cap })
}

/// Gate list in execution order. Every bond of every repetition receives its
/// three rotations; unassigned slots get a zero angle.
pub fn build_circuit(
    angles: &[f64],
    assignment: &FeatureAssignment,
    alpha: f64,
) -> Result<Vec<GateOp>, PqfmError> {
    if angles.len() != assignment.feature_count() {
        return Err(PqfmError::DimensionMismatch { expected: assignment.feature_count(), found: angles.len() });
    }
    let reps = 2 * assignment.blocks;
    let n = assignment.qubits;
    let scale = alpha / (2.0 * reps as f64);
    // slot table: [repetition][bond][axis]
    let mut table = vec![[0.0f64; 3]; reps * (n - 1)];
    for (k, slot) in assignment.slots.iter().enumerate() {
        let cell = &mut table[slot.repetition * (n - 1) + slot.bond];
        match slot.axis {
            None => *cell = [angles[k]; 3],
            Some(axis) => cell[axis as usize] = angles[k],
        }
    }
    let order = bond_order(n);
    let mut gates = Vec::with_capacity(reps * (n - 1) * 3);
    for m in 0..reps {
        for &j in &order {
            let cell = table[m * (n - 1) + j];
            for axis in Axis::ALL {
                gates.push(GateOp::pair(axis, scale * cell[axis as usize], j));
            }
        }
    }
    Ok(gates)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservableSet {
    pub strings: Vec<PauliString>,
}

impl ObservableSet {
    /// `X q0, Y q0, Z q0, X q1, …` followed by `extra`.
    pub fn with_defaults(qubits: usize, extra: &[PauliString]) -> Self {
        let mut strings: Vec<PauliString> = (0..qubits)
            .flat_map(|q| Pauli::NON_IDENTITY.iter().map(move |&p| PauliString::single(q, p)))
            .collect();
        strings.extend_from_slice(extra);
        Self { strings }
    }

    pub fn len(&self) -> usize {
        self.strings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.strings.is_empty()
    }

    pub fn names(&self) -> Vec<String> {
        self.strings.iter().map(ToString::to_string).collect()
    }
}

/// A ready-to-run feature map: configuration, fitted scaler, assignment and
/// observables.
#[derive(Debug, Clone)]
pub struct FeatureMap {
    pub config: AnsatzConfig,
    pub scaler: Scaler,
    pub assignment: FeatureAssignment,
    pub observables: ObservableSet,
}

impl FeatureMap {
    pub fn new(config: AnsatzConfig, scaler: Scaler) -> Result<Self, PqfmError> {
        config.validate()?;
        let assignment = assign_features(scaler.feature_count(), config.qubits, config.blocks, config.coupling_mode)?;
        let observables = ObservableSet::with_defaults(config.qubits, &config.extra_observables);
        Ok(Self { config, scaler, assignment, observables })
    }

    pub fn output_dim(&self) -> usize {
        self.observables.len()
    }

    /// Projected features of one event, without drift. Noise and shot
    /// sampling draw from a stream keyed by `(noise_seed, event_id)`.
    pub fn transform(&self, features: &[f64], event_id: u64) -> Result<Vec<f64>, PqfmError> {
        transform_event(features, event_id, &self.scaler, &self.assignment, &self.observables, &self.config)
    }
}

pub fn transform_event(
    features: &[f64],
    event_id: u64,
    scaler: &Scaler,
    assignment: &FeatureAssignment,
    observables: &ObservableSet,
    config: &AnsatzConfig,
) -> Result<Vec<f64>, PqfmError> {
    if features.len() != assignment.feature_count() {
        return Err(PqfmError::DimensionMismatch { expected: assignment.feature_count(), found: features.len() });
    }
    let angles = encode_angles(features, scaler)?;
    let gates = build_circuit(&angles, assignment, config.alpha)?;
    let mut state = init_fiducial(config.qubits, config.seed, config.backend)?;
    let noisy = config.noise.p2 > 0.0 || config.noise.readout_flip > 0.0 || config.shots.is_some();
    let mut rng = seed::derived_rng(config.noise.noise_seed, &[event_id]);
    for g in &gates {
        state.apply_gate(g)?;
        if config.noise.p2 > 0.0 {
            if let GateOp::PairRotation { sites, .. } = g {
                apply_depolarizing(&mut state, *sites, config.noise.p2, &mut rng)?;
            }
        }
    }
    let exact = read_observables(&state, observables)?;
    if !noisy {
        return Ok(exact);
    }
    let eps = config.noise.readout_flip;
    Ok(exact
        .into_iter()
        .zip(&observables.strings)
        .map(|(v, o)| {
            // independent per-qubit flips flip a b-local parity with
            // probability (1 − (1 − 2ε)^b)/2
            let contraction = (1.0 - 2.0 * eps).powi(o.locality() as i32);
            match config.shots {
                Some(shots) => sample_expectation(v, shots, (1.0 - contraction) / 2.0, &mut rng),
                None => v * contraction,
            }
        })
        .collect())
}

fn read_observables(state: &QuantumState, observables: &ObservableSet) -> Result<Vec<f64>, QsimError> {
    let singles = if observables.strings.iter().any(|o| o.locality() == 1) {
        Some(state.single_site_expectations())
    } else {
        None
    };
    observables
        .strings
        .iter()
        .map(|o| match (o.terms(), &singles) {
            ([(site, p)], Some(s)) => Ok(s[*site][*p as usize - 1]),
            _ => state.expectation(o),
        })
        .collect()
}

/// Transforms every event; labels, timestamps and ids pass through untouched.
/// With drift enabled, events are processed in timestamp order and the walk
/// advances once per event.
pub fn transform_batch(dataset: &EventDataset, map: &FeatureMap) -> Result<EventDataset, PqfmError> {
    if dataset.feature_count() != map.assignment.feature_count() {
        return Err(PqfmError::DimensionMismatch {
            expected: map.assignment.feature_count(),
            found: dataset.feature_count(),
        });
    }
    // the transform path only sees (features, event_id)
    let inputs: Vec<(&[f64], u64)> = dataset.events().iter().map(|e| (e.features.as_slice(), e.event_id)).collect();
    let mut rows: Vec<Vec<f64>> =
        inputs.par_iter().map(|(x, id)| map.transform(x, *id)).collect::<Result<_, _>>()?;
    let drift = map.config.noise.drift;
    if drift.is_active() {
        let mut walk = DriftWalk::new(drift, map.config.noise.noise_seed);
        for row in rows.iter_mut() {
            walk.advance();
            walk.apply(row);
        }
    }
    let events = dataset
        .events()
        .iter()
        .zip(rows)
        .map(|(e, x)| TradeEvent::new(e.timestamp, e.event_id, x, e.label))
        .collect();
    let provenance = if map.config.is_exact() { "pqfm-sim" } else { "pqfm-noisy" };
    Ok(EventDataset::new(map.output_dim(), events, Some(map.observables.names()), provenance)
        .expect("transform preserves ordering and width"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::preprocess::fit_scaler_rows;

    #[test]
    fn capacity_examples() {
        let a = assign_features(216, 109, 1, CouplingMode::Scalar).unwrap();
        assert_eq!(a.capacity, 216);
        assert_eq!(a.slots[107].repetition, 0);
        assert_eq!(a.slots[108].repetition, 1);
        let b = assign_features(10, 4, 2, CouplingMode::Scalar).unwrap();
        assert_eq!(b.capacity, 12);
        assert_eq!(b.slots.len(), 10);
        assert_eq!(capacity(4, 1, CouplingMode::Triple), 18);
    }

    #[test]
    fn odd_bonds_first() {
        let a = assign_features(3, 4, 1, CouplingMode::Scalar).unwrap();
        let bonds: Vec<(usize, usize)> = a.slots.iter().map(|s| (s.repetition, s.bond)).collect();
        assert_eq!(bonds, vec![(0, 1), (0, 0), (0, 2)]);
        assert_eq!(bond_order(6), vec![1, 3, 0, 2, 4]);
    }

    #[test]
    fn capacity_error_reports_minimums() {
        let err = assign_features(20, 4, 1, CouplingMode::Scalar).unwrap_err();
        assert_eq!(err, PqfmError::CapacityExceeded { p: 20, capacity: 6, min_qubits: 11, min_blocks: 4 });
    }

    #[test]
    fn triple_mode_axes() {
        let a = assign_features(4, 3, 1, CouplingMode::Triple).unwrap();
        assert_eq!(a.slots[0], Slot { repetition: 0, bond: 1, axis: Some(Axis::XX) });
        assert_eq!(a.slots[2].axis, Some(Axis::ZZ));
        assert_eq!(a.slots[3], Slot { repetition: 0, bond: 0, axis: Some(Axis::XX) });
        let gates = build_circuit(&[1.0, 2.0, 3.0, 4.0], &a, 1.0).unwrap();
        let GateOp::PairRotation { theta, axis, sites } = gates[1] else { panic!() };
        assert_eq!((axis, sites), (Axis::YY, (1, 2)));
        assert_eq!(theta, 2.0 / 4.0);
    }

    #[test]
    fn gate_count_and_zero_surplus() {
        let a = assign_features(3, 4, 1, CouplingMode::Scalar).unwrap();
        let gates = build_circuit(&[0.5, 0.6, 0.7], &a, 1.0).unwrap();
        assert_eq!(gates.len(), 18);
        for g in &gates[9..] {
            let GateOp::PairRotation { theta, .. } = g else { panic!() };
            assert_eq!(*theta, 0.0);
        }
        assert!(build_circuit(&[0.5], &a, 1.0).is_err());
    }

    #[test]
    fn zero_angles_give_fiducial_expectations() {
        let rows: Vec<Vec<f64>> = vec![vec![0.0, 0.0, 0.0], vec![0.0, 0.0, 0.0]];
        let refs: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
        let scaler = fit_scaler_rows(&refs, 3).unwrap();
        for alpha in [0.1, 1.0, 7.0] {
            let cfg = AnsatzConfig { qubits: 4, alpha, seed: 5, backend: Backend::Dense, ..Default::default() };
            let map = FeatureMap::new(cfg, scaler.clone()).unwrap();
            let out = map.transform(&[0.0, 0.0, 0.0], 0).unwrap();
            let fid = init_fiducial(4, 5, Backend::Dense).unwrap().single_site_expectations();
            let flat: Vec<f64> = fid.concat();
            for (a, b) in out.iter().zip(&flat) {
                assert!((a - b).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn presets() {
        let s = preset("shorter", 16).unwrap();
        assert_eq!((s.blocks, s.alpha, s.seed), (1, 1.0, 1));
        let l = preset("longer", 109).unwrap();
        assert_eq!((l.blocks, l.alpha, l.seed, l.qubits), (2, 0.1, 0, 109));
        assert_eq!(preset("x", 16).unwrap_err(), PqfmError::UnknownPreset("x".into()));
    }
}
