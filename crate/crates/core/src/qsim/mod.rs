//! Quantum state simulation for shallow nearest-neighbour circuits.
//!
//! Two interchangeable backends sit behind [`QuantumState`]: a dense
//! statevector (exact, exponential memory) and a matrix product state with
//! singular-value truncation. Both implement the same gate set (single-qubit
//! unitaries and `exp(−i θ/2 P⊗P)` pair rotations) and the same Pauli
//! expectation interface. Rotation convention: `R_PP(θ) = exp(−i (θ/2) P⊗P)`.

mod dense;
mod mps;
pub mod noise;
mod pauli;

use num_complex::Complex64;
use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use dense::DenseState;
pub use mps::MpsState;
pub use noise::{
    analytic_median_shift, apply_depolarizing, drift_probe, sample_expectation, DriftConfig, DriftMode,
    DriftProbe, DriftWalk, NoiseConfig,
};
pub use pauli::{Pauli, PauliString};

use crate::seed;

#[derive(Debug, Error, PartialEq)]
pub enum QsimError {
    #[error("sites ({0}, {1}) are not nearest neighbours")]
    NonAdjacentSites(usize, usize),
    #[error("site {site} out of range for {qubits} qubits")]
    SiteOutOfRange { site: usize, qubits: usize },
    #[error("matrix is not unitary (deviation {0:e})")]
    NonUnitary(f64),
    #[error("invalid Pauli string: {0}")]
    InvalidPauliString(String),
    #[error("need at least 2 qubits, got {0}")]
    TooFewQubits(usize),
    #[error("dense backend limited to 26 qubits, got {0}")]
    TooManyQubits(usize),
}

pub type Mat2 = [[Complex64; 2]; 2];
pub type Mat4 = [[Complex64; 4]; 4];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axis {
    XX,
    YY,
    ZZ,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::XX, Axis::YY, Axis::ZZ];

    pub fn pauli(self) -> Pauli {
        match self {
            Axis::XX => Pauli::X,
            Axis::YY => Pauli::Y,
            Axis::ZZ => Pauli::Z,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum GateOp {
    SingleQubit { site: usize, matrix: Mat2 },
    /// `exp(−i (θ/2) P⊗P)` on `(sites.0, sites.1)`.
    PairRotation { axis: Axis, theta: f64, sites: (usize, usize) },
}

impl GateOp {
    pub fn pair(axis: Axis, theta: f64, first: usize) -> Self {
        GateOp::PairRotation { axis, theta, sites: (first, first + 1) }
    }
}

/// Kronecker product `a ⊗ b` with index `2·s_a + s_b`.
pub fn kron2(a: &Mat2, b: &Mat2) -> Mat4 {
    let mut out = [[Complex64::new(0.0, 0.0); 4]; 4];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = a[i / 2][j / 2] * b[i % 2][j % 2];
        }
    }
    out
}

/// `cos(θ/2)·I − i·sin(θ/2)·P⊗P`.
pub fn pair_rotation_matrix(axis: Axis, theta: f64) -> Mat4 {
    let p = axis.pauli().matrix();
    let pp = kron2(&p, &p);
    let c = Complex64::new((theta / 2.0).cos(), 0.0);
    let s = Complex64::new(0.0, -(theta / 2.0).sin());
    let mut out = pp;
    for (i, row) in out.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = s * pp[i][j] + if i == j { c } else { Complex64::new(0.0, 0.0) };
        }
    }
    out
}

fn unitarity_deviation(m: &Mat2) -> f64 {
    let mut dev: f64 = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            let v: Complex64 = (0..2).map(|k| m[k][i].conj() * m[k][j]).sum();
            let target = if i == j { 1.0 } else { 0.0 };
            dev = dev.max((v - Complex64::new(target, 0.0)).norm());
        }
    }
    dev
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Backend {
    Dense,
    Mps {
        #[serde(default = "default_max_bond")]
        max_bond: usize,
        #[serde(default = "default_truncation_tol")]
        truncation_tol: f64,
    },
}

fn default_max_bond() -> usize {
    64
}

fn default_truncation_tol() -> f64 {
    1e-12
}

impl Backend {
    pub fn mps(max_bond: usize) -> Self {
        Backend::Mps { max_bond, truncation_tol: default_truncation_tol() }
    }

    /// MPS with no bond cap; only singular values below numerical rank are dropped.
    pub fn mps_exact() -> Self {
        Backend::Mps { max_bond: usize::MAX, truncation_tol: 0.0 }
    }
}

impl Default for Backend {
    fn default() -> Self {
        Backend::mps(64)
    }
}

#[derive(Debug, Clone)]
pub enum QuantumState {
    Dense(DenseState),
    Mps(MpsState),
}

/// Haar-random single-qubit amplitudes for qubits `0..n`, consumed in order.
pub fn fiducial_amplitudes(n: usize, seed: u64) -> Vec<[Complex64; 2]> {
    let mut rng = seed::rng(seed);
    (0..n)
        .map(|_| {
            let mut amp = [Complex64::new(0.0, 0.0); 2];
            for a in amp.iter_mut() {
                *a = Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
            }
            let norm = (amp[0].norm_sqr() + amp[1].norm_sqr()).sqrt();
            [amp[0] / norm, amp[1] / norm]
        })
        .collect()
}

/// The product state of `n` Haar-random single-qubit states drawn from `seed`.
pub fn init_fiducial(n: usize, seed: u64, backend: Backend) -> Result<QuantumState, QsimError> {
    if n < 2 {
        return Err(QsimError::TooFewQubits(n));
    }
    QuantumState::product(&fiducial_amplitudes(n, seed), backend)
}

impl QuantumState {
    pub fn product(amps: &[[Complex64; 2]], backend: Backend) -> Result<Self, QsimError> {
        Ok(match backend {
            Backend::Dense => QuantumState::Dense(DenseState::product(amps)?),
            Backend::Mps { max_bond, truncation_tol } => {
                QuantumState::Mps(MpsState::product(amps, max_bond, truncation_tol))
            }
        })
    }

    /// `|0…0⟩`.
    pub fn zero(n: usize, backend: Backend) -> Result<Self, QsimError> {
        let zero = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
        Self::product(&vec![zero; n], backend)
    }

    pub fn qubit_count(&self) -> usize {
        match self {
            QuantumState::Dense(s) => s.qubit_count(),
            QuantumState::Mps(s) => s.qubit_count(),
        }
    }

    pub fn apply_gate(&mut self, gate: &GateOp) -> Result<(), QsimError> {
        let n = self.qubit_count();
        match gate {
            GateOp::SingleQubit { site, matrix } => {
                if *site >= n {
                    return Err(QsimError::SiteOutOfRange { site: *site, qubits: n });
                }
                let dev = unitarity_deviation(matrix);
                if dev > 1e-12 {
                    return Err(QsimError::NonUnitary(dev));
                }
                self.apply_single(*site, matrix);
                Ok(())
            }
            GateOp::PairRotation { axis, theta, sites } => {
                let (a, b) = *sites;
                for s in [a, b] {
                    if s >= n {
                        return Err(QsimError::SiteOutOfRange { site: s, qubits: n });
                    }
                }
                self.apply_two(a, b, &pair_rotation_matrix(*axis, *theta))
            }
        }
    }

    pub fn apply_gates(&mut self, gates: &[GateOp]) -> Result<(), QsimError> {
        gates.iter().try_for_each(|g| self.apply_gate(g))
    }

    pub(crate) fn apply_single(&mut self, site: usize, m: &Mat2) {
        match self {
            QuantumState::Dense(s) => s.apply_single(site, m),
            QuantumState::Mps(s) => s.apply_single(site, m),
        }
    }

    pub(crate) fn apply_two(&mut self, a: usize, b: usize, m: &Mat4) -> Result<(), QsimError> {
        match self {
            QuantumState::Dense(s) => {
                if a == b {
                    return Err(QsimError::NonAdjacentSites(a, b));
                }
                s.apply_two(a, b, m);
                Ok(())
            }
            QuantumState::Mps(s) => {
                if b != a + 1 {
                    return Err(QsimError::NonAdjacentSites(a, b));
                }
                s.apply_two(a, m);
                Ok(())
            }
        }
    }

    /// `⟨ψ|P|ψ⟩`, clamped to `[−1, 1]`.
    pub fn expectation(&self, pauli: &PauliString) -> Result<f64, QsimError> {
        pauli.check_sites(self.qubit_count())?;
        let v = match self {
            QuantumState::Dense(s) => s.expectation(pauli),
            QuantumState::Mps(s) => s.expectation(pauli),
        };
        debug_assert!(v.abs() <= 1.0 + 1e-9, "expectation {v} out of range");
        Ok(v.clamp(-1.0, 1.0))
    }

    /// `[⟨X⟩, ⟨Y⟩, ⟨Z⟩]` for every qubit in one pass.
    pub fn single_site_expectations(&self) -> Vec<[f64; 3]> {
        let raw = match self {
            QuantumState::Dense(s) => s.single_site_expectations(),
            QuantumState::Mps(s) => s.single_site_expectations(),
        };
        raw.into_iter().map(|v| v.map(|x| x.clamp(-1.0, 1.0))).collect()
    }

    pub fn norm_sqr(&self) -> f64 {
        match self {
            QuantumState::Dense(s) => s.norm_sqr(),
            QuantumState::Mps(s) => s.norm_sqr(),
        }
    }

    /// Full amplitude vector, qubit `q` at bit `q` of the index.
    pub fn to_amplitudes(&self) -> Vec<Complex64> {
        match self {
            QuantumState::Dense(s) => s.amplitudes().to_vec(),
            QuantumState::Mps(s) => s.to_amplitudes(),
        }
    }

    pub fn max_bond_dimension(&self) -> usize {
        match self {
            QuantumState::Dense(_) => 0,
            QuantumState::Mps(s) => s.max_bond_dimension(),
        }
    }
}

/// `|⟨a|b⟩|²` for normalised amplitude vectors; insensitive to global phase.
pub fn fidelity(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum::<Complex64>().norm_sqr()
}
