//! Exact dynamics of the controlled XX chain.
//!
//! The XX coupling and the σᶻ control fields both conserve the number of
//! excitations, so a chain prepared with a single excitation never leaves the
//! N-dimensional single-excitation subspace. Everything here works in that
//! subspace: basis state `k` is the chain with site `k` excited and every
//! other site in its ground state. The full 2ᴺ construction survives only in
//! [`oracle`], where it is used to check the reduction.

mod catalog;
pub mod oracle;
mod propagator;
mod state;

pub use catalog::{build_action_catalog, ActionCatalog, ControlAction, NUM_ACTIONS};
pub(crate) use propagator::check_ids;
pub use propagator::{
    apply, evolve_sequence, hermitian_expm, natural_evolution, reduced_hamiltonian,
    HamiltonianMatrix, Propagator, PropagatorSet,
};
pub use state::{transition_probability, QuantumState};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest chain accepted by [`ChainConfig::validate`].
///
/// Control masks address sites 1..=3 and N-2..=N; on chains shorter than six
/// sites the two ends overlap and a site is driven when either mask selects it.
/// Chains of two or three sites are useful for closed-form checks of the
/// uncontrolled dynamics.
pub const MIN_SITES: usize = 2;

/// Physical parameters of a homogeneous chain driven by piecewise-constant pulses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChainConfig {
    /// Number of qubits N.
    pub n_sites: usize,
    /// Exchange strength J multiplying each σˣσˣ + σʸσʸ term.
    pub coupling: f64,
    /// Field magnitude B applied to every active control site.
    pub field_strength: f64,
    /// Duration of one control interval.
    pub dt: f64,
}

impl Default for ChainConfig {
    fn default() -> Self {
        Self {
            n_sites: 8,
            coupling: 1.0,
            field_strength: 100.0,
            dt: 0.15,
        }
    }
}

impl ChainConfig {
    pub fn new(n_sites: usize) -> Self {
        Self {
            n_sites,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_sites < MIN_SITES {
            return Err(Error::InvalidConfig(format!(
                "n_sites must be at least {MIN_SITES}, got {}",
                self.n_sites
            )));
        }
        if !self.coupling.is_finite() || self.coupling == 0.0 {
            return Err(Error::InvalidConfig(format!(
                "coupling must be finite and nonzero, got {}",
                self.coupling
            )));
        }
        if !self.field_strength.is_finite() || self.field_strength < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "field_strength must be finite and non-negative, got {}",
                self.field_strength
            )));
        }
        if !self.dt.is_finite() || self.dt <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "dt must be finite and positive, got {}",
                self.dt
            )));
        }
        Ok(())
    }

    /// Off-diagonal element of the reduced Hamiltonian: ⟨k+1|σˣσˣ + σʸσʸ|k⟩ = 2.
    pub fn hopping(&self) -> f64 {
        2.0 * self.coupling
    }

    /// Index of the site that receives the transferred excitation.
    pub fn target_site(&self) -> usize {
        self.n_sites - 1
    }
}
