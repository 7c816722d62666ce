use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::QsimError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I_UNIT: Complex64 = Complex64::new(0.0, 1.0);

impl Pauli {
    pub const NON_IDENTITY: [Pauli; 3] = [Pauli::X, Pauli::Y, Pauli::Z];

    /// Matrix elements `⟨s|P|s'⟩` indexed `[s][s']`.
    pub fn matrix(self) -> [[Complex64; 2]; 2] {
        match self {
            Pauli::I => [[ONE, ZERO], [ZERO, ONE]],
            Pauli::X => [[ZERO, ONE], [ONE, ZERO]],
            Pauli::Y => [[ZERO, -I_UNIT], [I_UNIT, ZERO]],
            Pauli::Z => [[ONE, ZERO], [ZERO, -ONE]],
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

/// A b-local Pauli observable, `b ∈ {1, 2}`, stored as `(site, pauli)` pairs
/// sorted by site with no identities.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<(usize, Pauli)>", into = "Vec<(usize, Pauli)>")]
pub struct PauliString {
    terms: Vec<(usize, Pauli)>,
}

impl PauliString {
    pub fn new(mut terms: Vec<(usize, Pauli)>) -> Result<Self, QsimError> {
        terms.sort_by_key(|t| t.0);
        if terms.is_empty() || terms.len() > 2 {
            return Err(QsimError::InvalidPauliString(format!("locality {} not in {{1, 2}}", terms.len())));
        }
        if terms.iter().any(|t| t.1 == Pauli::I) {
            return Err(QsimError::InvalidPauliString("identity factor".into()));
        }
        if terms.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(QsimError::InvalidPauliString("repeated site".into()));
        }
        Ok(Self { terms })
    }

    pub fn single(site: usize, pauli: Pauli) -> Self {
        Self::new(vec![(site, pauli)]).expect("valid single-site string")
    }

    pub fn terms(&self) -> &[(usize, Pauli)] {
        &self.terms
    }

    pub fn locality(&self) -> usize {
        self.terms.len()
    }

    pub fn max_site(&self) -> usize {
        self.terms.last().map(|t| t.0).unwrap_or(0)
    }

    pub fn min_site(&self) -> usize {
        self.terms.first().map(|t| t.0).unwrap_or(0)
    }

    /// The factor acting on `site` (identity if none).
    pub fn at(&self, site: usize) -> Pauli {
        self.terms.iter().find(|t| t.0 == site).map_or(Pauli::I, |t| t.1)
    }

    pub fn check_sites(&self, n: usize) -> Result<(), QsimError> {
        if self.max_site() >= n {
            return Err(QsimError::SiteOutOfRange { site: self.max_site(), qubits: n });
        }
        Ok(())
    }
}

impl TryFrom<Vec<(usize, Pauli)>> for PauliString {
    type Error = QsimError;
    fn try_from(v: Vec<(usize, Pauli)>) -> Result<Self, Self::Error> {
        Self::new(v)
    }
}

impl From<PauliString> for Vec<(usize, Pauli)> {
    fn from(p: PauliString) -> Self {
        p.terms
    }
}

impl fmt::Display for PauliString {
    /// Renders as e.g. `XQ3` or `ZQ0ZQ1`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (site, p) in &self.terms {
            write!(f, "{}Q{}", p.symbol(), site)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(PauliString::new(vec![]).is_err());
        assert!(PauliString::new(vec![(0, Pauli::I)]).is_err());
        assert!(PauliString::new(vec![(1, Pauli::X), (1, Pauli::Z)]).is_err());
        assert!(PauliString::new(vec![(0, Pauli::X), (1, Pauli::X), (2, Pauli::X)]).is_err());
        let p = PauliString::new(vec![(3, Pauli::Z), (1, Pauli::X)]).unwrap();
        assert_eq!(p.terms(), &[(1, Pauli::X), (3, Pauli::Z)]);
        assert_eq!(p.to_string(), "XQ1ZQ3");
        assert!(p.check_sites(3).is_err());
        assert!(p.check_sites(4).is_ok());
    }

    #[test]
    fn json_round_trip() {
        let p = PauliString::new(vec![(0, Pauli::Y), (1, Pauli::Y)]).unwrap();
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(serde_json::from_str::<PauliString>(&s).unwrap(), p);
        assert!(serde_json::from_str::<PauliString>("[]").is_err());
    }
}
