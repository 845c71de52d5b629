use qst_core::dqn::{self, td_targets, train_batch, DqnConfig, Transition, ValueNetwork};
use qst_core::dynamics::{ChainConfig, PropagatorSet};
use qst_core::environment::{self, EpisodeConfig};
use qst_core::ga::{self, exhaustive_best, GaConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn ga_solves_four_sites() {
    let cfg = EpisodeConfig::new(ChainConfig::new(4));
    assert_eq!(cfg.horizon, 10);
    let gacfg = GaConfig {
        population_size: 256,
        num_parents: 26,
        generations: 200,
        seed: 1,
        ..GaConfig::default()
    };
    let report = ga::run_ga(&gacfg, &cfg).unwrap();
    assert!(report.best_fidelity >= 0.95, "{}", report.best_fidelity);
}

#[test]
fn ga_never_beats_exhaustive_search() {
    for (n, len, seed) in [(3, 3, 0), (4, 3, 1), (5, 4, 2), (6, 4, 3), (7, 2, 4)] {
        let chain = ChainConfig::new(n);
        let set = PropagatorSet::build(&chain).unwrap();
        let cfg = EpisodeConfig::new(chain).with_horizon(len);
        let (_, optimum) = exhaustive_best(&set, len).unwrap();
        let gacfg = GaConfig {
            population_size: 64,
            num_parents: 8,
            generations: 30,
            seed,
            ..GaConfig::default()
        };
        let report = ga::run_ga_with(&gacfg, &cfg, &set).unwrap();
        assert!(report.best_fidelity <= optimum + 1e-12, "N={n}");
        let profile = environment::sequence_fidelity_profile(report.best.genes(), &cfg, &set).unwrap();
        assert_eq!(profile.last().unwrap().1, report.best_fidelity);
    }
}

fn random_batch(rng: &mut ChaCha8Rng, n: usize, size: usize) -> Vec<Transition> {
    (0..size)
        .map(|i| Transition {
            features_before: (0..2 * n).map(|_| rng.random_range(-1.0..1.0)).collect(),
            action_id: rng.random_range(0..16),
            reward: rng.random_range(0.0..10.0),
            features_after: (0..2 * n).map(|_| rng.random_range(-1.0..1.0)).collect(),
            done: i % 4 == 0,
        })
        .collect()
}

#[test]
fn targets_ignore_online_updates_until_sync() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let sizes = DqnConfig::default().layer_sizes(4);
    let mut online = ValueNetwork::init(&[sizes[0], 32, 32, 16], &mut rng).unwrap();
    let target = online.clone();
    let probe = random_batch(&mut rng, 4, 16);
    let before = td_targets(&probe, &target, 0.95).unwrap();
    for _ in 0..20 {
        let batch = random_batch(&mut rng, 4, 8);
        let y = td_targets(&batch, &target, 0.95).unwrap();
        online = train_batch(&online, &batch, &y, 1e-2).unwrap().0;
    }
    assert_ne!(online, target);
    assert_eq!(td_targets(&probe, &target, 0.95).unwrap(), before);
    assert_ne!(td_targets(&probe, &online, 0.95).unwrap(), before);
}

#[test]
fn best_sequence_replays_to_reported_fidelity() {
    let cfg = EpisodeConfig::new(ChainConfig::new(4));
    let set = PropagatorSet::build(&cfg.chain).unwrap();
    let dqncfg = DqnConfig {
        episodes: 60,
        hidden_sizes: vec![32, 32],
        seed: 8,
        ..DqnConfig::default()
    };
    let report = dqn::train_with(&dqncfg, &cfg, &set).unwrap();
    assert_eq!(report.history.len(), 60);
    let profile = environment::sequence_fidelity_profile(&report.best_sequence, &cfg, &set).unwrap();
    assert_eq!(profile.last().unwrap().1, report.best_fidelity);
    let best: Vec<f64> = report.history.iter().map(|r| r.best_fidelity).collect();
    assert!(best.windows(2).all(|w| w[1] >= w[0]));
    assert_eq!(*best.last().unwrap(), report.best_fidelity);
}
