//! Episodic view of the chain shared by both optimizers.
//!
//! An episode starts with the excitation on site 1, applies one control
//! action per interval, and scores the overlap with the excitation on site N.

use serde::{Deserialize, Serialize};

use crate::dynamics::{ChainConfig, PropagatorSet, QuantumState, NUM_ACTIONS};
use crate::error::{Error, Result};

/// Shape of the per-step reward `step_scale·fᵉˣᵖᵒⁿᵉⁿᵗ`, plus `success_bonus`
/// on the step that ends an episode at or above the success threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RewardConfig {
    pub step_scale: f64,
    pub exponent: f64,
    pub success_bonus: f64,
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self {
            step_scale: 10.0,
            exponent: 3.0,
            success_bonus: 2500.0,
        }
    }
}

/// `⌈2.5·N⌉` control intervals.
pub fn default_horizon(n_sites: usize) -> usize {
    (5 * n_sites).div_ceil(2)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeConfig {
    pub chain: ChainConfig,
    /// Number of control intervals per episode.
    pub horizon: usize,
    /// Fidelity that counts as a successful transfer.
    pub success_threshold: f64,
    /// End the episode as soon as the success threshold is reached.
    pub early_stop: bool,
    pub reward: RewardConfig,
}

impl EpisodeConfig {
    pub fn new(chain: ChainConfig) -> Self {
        Self {
            horizon: default_horizon(chain.n_sites),
            chain,
            success_threshold: 0.999,
            early_stop: true,
            reward: RewardConfig::default(),
        }
    }

    pub fn with_horizon(mut self, horizon: usize) -> Self {
        self.horizon = horizon;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.chain.validate()?;
        if self.horizon == 0 {
            return Err(Error::InvalidConfig("horizon must be at least 1".into()));
        }
        if !(self.success_threshold > 0.0 && self.success_threshold <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "success_threshold must lie in (0, 1], got {}",
                self.success_threshold
            )));
        }
        Ok(())
    }

    pub fn initial_state(&self) -> QuantumState {
        QuantumState::basis(self.chain.n_sites, 0)
    }

    pub fn target_state(&self) -> QuantumState {
        QuantumState::basis(self.chain.n_sites, self.chain.target_site())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvState {
    pub state: QuantumState,
    pub step_index: usize,
    pub done: bool,
}

impl EnvState {
    /// Probability of finding the excitation on the last site.
    pub fn fidelity(&self) -> f64 {
        let amps = self.state.amplitudes();
        amps[amps.len() - 1].norm_sqr().min(1.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    /// Real parts then imaginary parts of the amplitudes.
    pub features: Vec<f64>,
    pub reward: f64,
    pub fidelity: f64,
    pub done: bool,
}

pub fn reset(cfg: &EpisodeConfig) -> EnvState {
    EnvState {
        state: cfg.initial_state(),
        step_index: 0,
        done: false,
    }
}

pub fn reward(fidelity: f64, done: bool, cfg: &EpisodeConfig) -> f64 {
    let r = &cfg.reward;
    let mut value = r.step_scale * fidelity.max(0.0).powf(r.exponent);
    if done && fidelity >= cfg.success_threshold {
        value += r.success_bonus;
    }
    value
}

pub fn step(
    env: &EnvState,
    action_id: usize,
    cfg: &EpisodeConfig,
    set: &PropagatorSet,
) -> Result<(EnvState, StepOutcome)> {
    if env.done {
        return Err(Error::EpisodeDone);
    }
    if action_id >= NUM_ACTIONS {
        return Err(Error::InvalidAction(action_id));
    }
    let n = set.n_sites();
    if env.state.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: env.state.dim(),
        });
    }
    let mut next = vec![num_complex::Complex64::new(0.0, 0.0); n];
    set.apply_into(action_id, env.state.amplitudes(), &mut next);
    let state = QuantumState::from_unchecked(next);
    let step_index = env.step_index + 1;
    let fidelity = state.amplitudes()[n - 1].norm_sqr().min(1.0);
    let done = step_index >= cfg.horizon || (cfg.early_stop && fidelity >= cfg.success_threshold);
    let outcome = StepOutcome {
        features: state.features(),
        reward: reward(fidelity, done, cfg),
        fidelity,
        done,
    };
    Ok((
        EnvState {
            state,
            step_index,
            done,
        },
        outcome,
    ))
}

/// `(step, fidelity)` after each prefix of `seq`, steps counted from 1.
pub fn sequence_fidelity_profile(
    seq: &[usize],
    cfg: &EpisodeConfig,
    set: &PropagatorSet,
) -> Result<Vec<(usize, f64)>> {
    if seq.len() > cfg.horizon {
        return Err(Error::SequenceTooLong {
            len: seq.len(),
            horizon: cfg.horizon,
        });
    }
    crate::dynamics::check_ids(seq)?;
    let mut out = Vec::with_capacity(seq.len());
    set.transfer_profile_into(seq, &mut out);
    Ok(out.into_iter().enumerate().map(|(j, f)| (j + 1, f)).collect())
}

/// Longest run of consecutive entries at or above `fraction` of the profile maximum.
pub fn plateau_width(profile: &[f64], fraction: f64) -> usize {
    let max = profile.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if profile.is_empty() || max <= 0.0 {
        return 0;
    }
    let level = fraction * max;
    let mut best = 0;
    let mut run = 0;
    for &f in profile {
        if f >= level {
            run += 1;
            best = best.max(run);
        } else {
            run = 0;
        }
    }
    best
}
