use num_complex::Complex64;

use super::{Mat2, Mat4, PauliString, QsimError};

const MAX_DENSE_QUBITS: usize = 26;

/// Statevector; qubit `q` is bit `q` of the amplitude index.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseState {
    n: usize,
    amps: Vec<Complex64>,
}

impl DenseState {
    pub fn product(single: &[[Complex64; 2]]) -> Result<Self, QsimError> {
        let n = single.len();
        if n > MAX_DENSE_QUBITS {
            return Err(QsimError::TooManyQubits(n));
        }
        let mut amps = vec![Complex64::new(1.0, 0.0)];
        // qubit q occupies bit q: build from the highest qubit down
        for q in single.iter().rev() {
            amps = amps.iter().flat_map(|a| [a * q[0], a * q[1]]).collect();
        }
        Ok(Self { n, amps })
    }

    pub fn from_amplitudes(amps: Vec<Complex64>) -> Self {
        let n = amps.len().trailing_zeros() as usize;
        assert_eq!(1usize << n, amps.len(), "length must be a power of two");
        Self { n, amps }
    }

    pub fn qubit_count(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn apply_single(&mut self, q: usize, m: &Mat2) {
        let bit = 1usize << q;
        for i in 0..self.amps.len() {
            if i & bit == 0 {
                let (a0, a1) = (self.amps[i], self.amps[i | bit]);
                self.amps[i] = m[0][0] * a0 + m[0][1] * a1;
                self.amps[i | bit] = m[1][0] * a0 + m[1][1] * a1;
            }
        }
    }

    /// Applies `m` with local index `2·bit(qa) + bit(qb)`.
    pub fn apply_two(&mut self, qa: usize, qb: usize, m: &Mat4) {
        let ba = 1usize << qa;
        let bb = 1usize << qb;
        for i in 0..self.amps.len() {
            if i & ba == 0 && i & bb == 0 {
                let idx = [i, i | bb, i | ba, i | ba | bb];
                let v = idx.map(|k| self.amps[k]);
                for (r, &k) in idx.iter().enumerate() {
                    self.amps[k] = (0..4).map(|c| m[r][c] * v[c]).sum();
                }
            }
        }
    }

    pub fn expectation(&self, pauli: &PauliString) -> f64 {
        let mut phi = self.clone();
        for &(site, p) in pauli.terms() {
            phi.apply_single(site, &p.matrix());
        }
        self.amps.iter().zip(&phi.amps).map(|(a, b)| a.conj() * b).sum::<Complex64>().re
    }

    pub fn single_site_expectations(&self) -> Vec<[f64; 3]> {
        (0..self.n)
            .map(|q| {
                let bit = 1usize << q;
                let (mut r00, mut r11, mut r01) = (0.0, 0.0, Complex64::new(0.0, 0.0));
                for i in 0..self.amps.len() {
                    if i & bit == 0 {
                        let (a0, a1) = (self.amps[i], self.amps[i | bit]);
                        r00 += a0.norm_sqr();
                        r11 += a1.norm_sqr();
                        r01 += a0 * a1.conj();
                    }
                }
                [2.0 * r01.re, -2.0 * r01.im, r00 - r11]
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qsim::Pauli;

    #[test]
    fn product_bit_order() {
        let zero = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
        let one = [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)];
        // qubit 0 = |1>, qubit 1 = |0> → index 1
        let s = DenseState::product(&[one, zero]).unwrap();
        assert_eq!(s.amplitudes()[1], Complex64::new(1.0, 0.0));
        assert_eq!(s.single_site_expectations()[0][2], -1.0);
        assert_eq!(s.single_site_expectations()[1][2], 1.0);
    }

    #[test]
    fn single_site_batch_matches_string_expectation() {
        let amps: Vec<Complex64> =
            (0..8).map(|i| Complex64::new((i as f64 * 0.7).sin(), (i as f64 * 1.3).cos())).collect();
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        let s = DenseState::from_amplitudes(amps.into_iter().map(|a| a / norm).collect());
        let batch = s.single_site_expectations();
        for q in 0..3 {
            for (k, p) in Pauli::NON_IDENTITY.iter().enumerate() {
                let v = s.expectation(&PauliString::single(q, *p));
                assert!((v - batch[q][k]).abs() < 1e-12);
            }
        }
    }
}
