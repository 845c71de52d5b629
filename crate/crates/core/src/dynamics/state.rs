use num_complex::Complex64;

use crate::error::{Error, Result};

const NORM_TOLERANCE: f64 = 1e-10;

/// Amplitudes of the single excitation over the chain sites.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState {
    amplitudes: Vec<Complex64>,
}

impl QuantumState {
    /// Wraps `amplitudes`, rejecting vectors whose norm differs from 1 by more than 1e-10.
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self> {
        let state = Self { amplitudes };
        let norm = state.norm();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::NotNormalized(norm));
        }
        Ok(state)
    }

    /// Excitation localized on `site` (0-based).
    pub fn basis(n_sites: usize, site: usize) -> Self {
        assert!(site < n_sites, "site {site} outside a chain of {n_sites}");
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); n_sites];
        amplitudes[site] = Complex64::new(1.0, 0.0);
        Self { amplitudes }
    }

    pub(crate) fn from_unchecked(amplitudes: Vec<Complex64>) -> Self {
        Self { amplitudes }
    }

    /// Inverse of [`QuantumState::features`].
    pub fn from_features(features: &[f64]) -> Result<Self> {
        if !features.len().is_multiple_of(2) {
            return Err(Error::DimensionMismatch {
                expected: features.len() + 1,
                found: features.len(),
            });
        }
        let n = features.len() / 2;
        let amplitudes = (0..n)
            .map(|k| Complex64::new(features[k], features[n + k]))
            .collect();
        Self::new(amplitudes)
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Real parts of all amplitudes followed by their imaginary parts.
    pub fn features(&self) -> Vec<f64> {
        self.amplitudes
            .iter()
            .map(|a| a.re)
            .chain(self.amplitudes.iter().map(|a| a.im))
            .collect()
    }

    /// ⟨self, other⟩, antilinear in `self`.
    pub fn inner(&self, other: &QuantumState) -> Complex64 {
        assert_eq!(self.dim(), other.dim(), "state dimensions differ");
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        Self {
            amplitudes: self.amplitudes.iter().map(|a| a * factor).collect(),
        }
    }
}

/// |⟨target, state⟩|², clamped to [0, 1].
pub fn transition_probability(state: &QuantumState, target: &QuantumState) -> f64 {
    target.inner(state).norm_sqr().clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn basis_states_are_orthonormal() {
        let a = QuantumState::basis(5, 0);
        let b = QuantumState::basis(5, 4);
        assert_eq!(transition_probability(&a, &a), 1.0);
        assert_eq!(transition_probability(&a, &b), 0.0);
    }

    #[test]
    fn rejects_unnormalized() {
        let v = vec![Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)];
        assert!(matches!(QuantumState::new(v), Err(Error::NotNormalized(_))));
    }

    #[test]
    fn odd_feature_length_rejected() {
        assert!(QuantumState::from_features(&[1.0, 0.0, 0.0]).is_err());
    }

    fn arb_state(n: usize) -> impl Strategy<Value = QuantumState> {
        prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n)
            .prop_filter("nonzero", |v| v.iter().any(|(r, i)| r.abs() + i.abs() > 1e-3))
            .prop_map(|v| {
                let raw: Vec<Complex64> = v.into_iter().map(|(r, i)| Complex64::new(r, i)).collect();
                let norm = raw.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
                QuantumState::new(raw.into_iter().map(|a| a / norm).collect()).unwrap()
            })
    }

    proptest! {
        #[test]
        fn features_are_lossless(s in arb_state(6)) {
            let f = s.features();
            prop_assert!((f.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-9);
            let back = QuantumState::from_features(&f).unwrap();
            prop_assert_eq!(back, s);
        }

        #[test]
        fn probability_ignores_global_phase(s in arb_state(5), t in arb_state(5), a in 0.0f64..6.3, b in 0.0f64..6.3) {
            let p = transition_probability(&s, &t);
            let ps = transition_probability(&s.scaled(Complex64::from_polar(1.0, a)), &t);
            let pt = transition_probability(&s, &t.scaled(Complex64::from_polar(1.0, b)));
            prop_assert!((p - ps).abs() < 1e-12);
            prop_assert!((p - pt).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&p));
        }
    }
}
