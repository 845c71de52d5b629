//! Deep Q-learning over the 16 control actions.
//!
//! The agent acts ε-greedily on a [`ValueNetwork`], stores every step in a
//! [`ReplayBuffer`] and regresses sampled batches onto temporal-difference
//! targets computed by a periodically synchronized copy of the network.
//! Training is single-threaded and fully determined by the seed.

mod network;
mod replay;

pub use network::{Gradients, ValueNetwork};
pub use replay::{ReplayBuffer, Transition};

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::{PropagatorSet, NUM_ACTIONS};
use crate::environment::{self, EpisodeConfig};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DqnConfig {
    /// SGD learning rate.
    pub alpha: f64,
    /// Discount factor.
    pub gamma: f64,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    /// Per-episode multiplicative decay of ε.
    pub epsilon_decay: f64,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    /// Gradient steps between target-network synchronizations.
    pub target_update_period: usize,
    /// Transitions collected before the first gradient step.
    pub learning_starts: usize,
    pub episodes: usize,
    pub hidden_sizes: Vec<usize>,
    #[serde(skip)]
    pub seed: u64,
}

impl Default for DqnConfig {
    fn default() -> Self {
        Self {
            alpha: 0.01,
            gamma: 0.95,
            epsilon_start: 1.0,
            epsilon_end: 0.01,
            epsilon_decay: 0.9985,
            batch_size: 32,
            buffer_capacity: 50_000,
            target_update_period: 100,
            learning_starts: 256,
            episodes: 5000,
            hidden_sizes: vec![256, 256],
            seed: 0,
        }
    }
}

impl DqnConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return bad(format!("alpha must be positive, got {}", self.alpha));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return bad(format!("gamma must lie in [0, 1], got {}", self.gamma));
        }
        if !(0.0 <= self.epsilon_end && self.epsilon_end <= self.epsilon_start && self.epsilon_start <= 1.0) {
            return bad(format!(
                "need 0 <= epsilon_end <= epsilon_start <= 1, got {} and {}",
                self.epsilon_end, self.epsilon_start
            ));
        }
        if !(0.0..=1.0).contains(&self.epsilon_decay) {
            return bad(format!("epsilon_decay must lie in [0, 1], got {}", self.epsilon_decay));
        }
        if self.batch_size == 0 || self.buffer_capacity == 0 || self.target_update_period == 0 {
            return bad("batch_size, buffer_capacity and target_update_period must be positive".into());
        }
        if self.hidden_sizes.contains(&0) {
            return bad("hidden layers must have at least one unit".into());
        }
        Ok(())
    }

    pub fn layer_sizes(&self, n_sites: usize) -> Vec<usize> {
        std::iter::once(2 * n_sites)
            .chain(self.hidden_sizes.iter().copied())
            .chain(std::iter::once(NUM_ACTIONS))
            .collect()
    }

    /// `max(epsilon_end, epsilon_start · epsilon_decayᵉᵖⁱˢᵒᵈᵉ)`.
    pub fn epsilon_at(&self, episode: usize) -> f64 {
        let decayed = self.epsilon_start * self.epsilon_decay.powi(episode.min(i32::MAX as usize) as i32);
        decayed.max(self.epsilon_end)
    }
}

/// Lowest action id among the maximal entries of `q`.
pub fn argmax(q: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in q.iter().enumerate() {
        if v > q[best] {
            best = i;
        }
    }
    best
}

/// Uniform random action with probability `epsilon`, otherwise [`argmax`].
///
/// Always consumes one uniform draw so the random stream does not depend on ε.
pub fn epsilon_greedy<R: Rng + ?Sized>(q: &[f64], epsilon: f64, rng: &mut R) -> usize {
    if rng.random::<f64>() < epsilon {
        rng.random_range(0..NUM_ACTIONS)
    } else {
        argmax(q)
    }
}

fn stack(rows: impl ExactSizeIterator<Item = impl AsRef<[f64]>>, width: usize) -> Array2<f64> {
    let n = rows.len();
    let mut flat = Vec::with_capacity(n * width);
    for r in rows {
        flat.extend_from_slice(r.as_ref());
    }
    Array2::from_shape_vec((n, width), flat).expect("rows of equal width")
}

/// `r` for terminal transitions, `r + γ·maxₐ Q_target(s')[a]` otherwise.
pub fn td_targets(batch: &[Transition], target: &ValueNetwork, gamma: f64) -> Result<Vec<f64>> {
    if batch.is_empty() {
        return Ok(Vec::new());
    }
    let width = target.input_dim();
    if let Some(t) = batch.iter().find(|t| !t.done && t.features_after.len() != width) {
        return Err(Error::DimensionMismatch {
            expected: width,
            found: t.features_after.len(),
        });
    }
    let next = stack(
        batch.iter().map(|t| {
            if t.done {
                vec![0.0; width]
            } else {
                t.features_after.clone()
            }
        }),
        width,
    );
    let q_next = target.forward_batch(&next)?;
    Ok(batch
        .iter()
        .zip(q_next.rows())
        .map(|(t, q)| {
            if t.done {
                t.reward
            } else {
                t.reward + gamma * q.iter().copied().fold(f64::NEG_INFINITY, f64::max)
            }
        })
        .collect())
}

fn batch_gradients(params: &ValueNetwork, batch: &[Transition], targets: &[f64]) -> Result<(f64, Gradients)> {
    let width = params.input_dim();
    if let Some(t) = batch.iter().find(|t| t.features_before.len() != width) {
        return Err(Error::DimensionMismatch {
            expected: width,
            found: t.features_before.len(),
        });
    }
    let inputs = stack(batch.iter().map(|t| &t.features_before), width);
    let actions: Vec<usize> = batch.iter().map(|t| t.action_id).collect();
    params.loss_and_gradients(&inputs, &actions, targets)
}

/// One SGD step on the batch's mean squared TD error. Returns the loss before the step.
pub fn sgd_step(params: &mut ValueNetwork, batch: &[Transition], targets: &[f64], alpha: f64) -> Result<f64> {
    let (loss, grads) = batch_gradients(params, batch, targets)?;
    params.apply_gradients(&grads, alpha);
    Ok(loss)
}

/// Functional form of [`sgd_step`].
pub fn train_batch(
    params: &ValueNetwork,
    batch: &[Transition],
    targets: &[f64],
    alpha: f64,
) -> Result<(ValueNetwork, f64)> {
    let mut next = params.clone();
    let loss = sgd_step(&mut next, batch, targets, alpha)?;
    Ok((next, loss))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRecord {
    pub episode: usize,
    pub epsilon: f64,
    pub episode_return: f64,
    pub best_fidelity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub params: ValueNetwork,
    /// Highest-fidelity action sequence executed during training.
    pub best_sequence: Vec<usize>,
    /// Fidelity at the end of `best_sequence`.
    pub best_fidelity: f64,
    pub history: Vec<EpisodeRecord>,
}

pub fn train(dqncfg: &DqnConfig, cfg: &EpisodeConfig) -> Result<TrainReport> {
    cfg.validate()?;
    let set = PropagatorSet::build(&cfg.chain)?;
    train_with(dqncfg, cfg, &set)
}

/// [`train`] against an already-built propagator set.
pub fn train_with(dqncfg: &DqnConfig, cfg: &EpisodeConfig, set: &PropagatorSet) -> Result<TrainReport> {
    dqncfg.validate()?;
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(dqncfg.seed);
    let mut online = ValueNetwork::init(&dqncfg.layer_sizes(cfg.chain.n_sites), &mut rng)?;
    let mut target = online.clone();
    let mut buffer = ReplayBuffer::new(dqncfg.buffer_capacity);
    let warmup = dqncfg.learning_starts.max(dqncfg.batch_size);

    let mut updates = 0usize;
    let mut best_sequence = Vec::new();
    let mut best_fidelity = 0.0;
    let mut history = Vec::with_capacity(dqncfg.episodes);

    for episode in 0..dqncfg.episodes {
        let epsilon = dqncfg.epsilon_at(episode);
        let mut env = environment::reset(cfg);
        let mut features = env.state.features();
        let mut sequence = Vec::with_capacity(cfg.horizon);
        let mut episode_return = 0.0;
        let mut final_fidelity = 0.0;

        while !env.done {
            let q = online.forward(&features)?;
            let action = epsilon_greedy(&q, epsilon, &mut rng);
            let (next, outcome) = environment::step(&env, action, cfg, set)?;
            sequence.push(action);
            episode_return += outcome.reward;
            final_fidelity = outcome.fidelity;
            buffer.push(Transition {
                features_before: std::mem::take(&mut features),
                action_id: action,
                reward: outcome.reward,
                features_after: outcome.features.clone(),
                done: outcome.done,
            });
            features = outcome.features;
            env = next;

            if buffer.len() >= warmup {
                let batch = buffer.sample(dqncfg.batch_size, &mut rng);
                let targets = td_targets(&batch, &target, dqncfg.gamma)?;
                let loss = sgd_step(&mut online, &batch, &targets, dqncfg.alpha)?;
                if !loss.is_finite() || !online.is_finite() {
                    return Err(Error::Diverged(format!(
                        "non-finite loss at episode {episode}; lower alpha"
                    )));
                }
                updates += 1;
                if updates.is_multiple_of(dqncfg.target_update_period) {
                    target = online.clone();
                }
            }
        }

        if final_fidelity > best_fidelity {
            best_fidelity = final_fidelity;
            best_sequence = sequence;
        }
        history.push(EpisodeRecord {
            episode,
            epsilon,
            episode_return,
            best_fidelity,
        });
    }

    Ok(TrainReport {
        params: online,
        best_sequence,
        best_fidelity,
        history,
    })
}

/// One ε = 0 episode; returns the executed actions and the fidelity after each.
pub fn greedy_rollout(
    params: &ValueNetwork,
    cfg: &EpisodeConfig,
    set: &PropagatorSet,
) -> Result<(Vec<usize>, Vec<f64>)> {
    let mut env = environment::reset(cfg);
    let mut sequence = Vec::with_capacity(cfg.horizon);
    let mut profile = Vec::with_capacity(cfg.horizon);
    while !env.done {
        let action = argmax(&params.forward(&env.state.features())?);
        let (next, outcome) = environment::step(&env, action, cfg, set)?;
        sequence.push(action);
        profile.push(outcome.fidelity);
        env = next;
    }
    Ok((sequence, profile))
}
