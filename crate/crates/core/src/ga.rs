//! Genetic search over action sequences.
//!
//! Each generation keeps the fittest `num_parents` individuals unchanged and
//! fills the rest of the population with children bred from them by uniform
//! crossover followed by a swap mutation. Fitness evaluation is the only
//! parallel stage; all randomness comes from one seeded stream consumed on
//! the calling thread, so results do not depend on the worker count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{check_ids, PropagatorSet, NUM_ACTIONS};
use crate::environment::EpisodeConfig;
use crate::error::{Error, Result};

/// A candidate pulse program: one action id per control interval.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Chromosome {
    genes: Vec<usize>,
}

impl Chromosome {
    pub fn new(genes: Vec<usize>) -> Result<Self> {
        check_ids(&genes)?;
        Ok(Self { genes })
    }

    pub fn random<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Self {
        Self {
            genes: (0..len).map(|_| rng.random_range(0..NUM_ACTIONS)).collect(),
        }
    }

    pub fn genes(&self) -> &[usize] {
        &self.genes
    }

    pub fn len(&self) -> usize {
        self.genes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.genes.is_empty()
    }

    pub fn into_genes(self) -> Vec<usize> {
        self.genes
    }
}

/// `c_final·f_L + c_mean·mean(f_jᵖ)` over the stepwise fidelity profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitnessWeights {
    pub c_final: f64,
    pub c_mean: f64,
    pub power: f64,
}

impl Default for FitnessWeights {
    fn default() -> Self {
        Self {
            c_final: 10.0,
            c_mean: 5.0,
            power: 3.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaConfig {
    pub population_size: usize,
    pub num_parents: usize,
    pub generations: usize,
    /// Probability that a child receives one swap.
    pub mutation_probability: f64,
    /// Individuals carried over unchanged when `keep_parents` is off.
    pub elite_count: usize,
    /// Steady-state replacement: every selected parent survives.
    pub keep_parents: bool,
    pub fitness_weights: FitnessWeights,
    /// Stop once the best individual's final fidelity reaches this value.
    pub fidelity_stop: f64,
    /// Threads for fitness evaluation; 0 uses the global pool, 1 runs serially.
    pub workers: usize,
    #[serde(skip)]
    pub seed: u64,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            population_size: 2048,
            num_parents: 205,
            generations: 200,
            mutation_probability: 0.3,
            elite_count: 1,
            keep_parents: true,
            fitness_weights: FitnessWeights::default(),
            fidelity_stop: 1.0,
            workers: 0,
            seed: 0,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.num_parents == 0 || self.num_parents >= self.population_size {
            return bad(format!(
                "num_parents must be in 1..population_size, got {} of {}",
                self.num_parents, self.population_size
            ));
        }
        if self.elite_count == 0 || self.elite_count > self.num_parents {
            return bad(format!(
                "elite_count must be in 1..=num_parents, got {}",
                self.elite_count
            ));
        }
        if !(0.0..=1.0).contains(&self.mutation_probability) {
            return bad(format!(
                "mutation_probability must lie in [0, 1], got {}",
                self.mutation_probability
            ));
        }
        if self.fitness_weights.power.is_nan() || self.fitness_weights.power < 1.0 {
            return bad(format!("fitness power must be >= 1, got {}", self.fitness_weights.power));
        }
        Ok(())
    }
}

/// Fitness and final fidelity of one chromosome.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub fitness: f64,
    pub fidelity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaReport {
    pub best: Chromosome,
    pub best_fitness: f64,
    /// Fidelity after the last action of `best`.
    pub best_fidelity: f64,
    /// Best fitness after initialization and after every generation.
    pub best_fitness_history: Vec<f64>,
    pub best_fidelity_history: Vec<f64>,
    pub generations_run: usize,
}

pub fn fitness_from_profile(profile: &[f64], weights: &FitnessWeights) -> f64 {
    let Some(&last) = profile.last() else {
        return 0.0;
    };
    let mean = profile.iter().map(|f| f.powf(weights.power)).sum::<f64>() / profile.len() as f64;
    weights.c_final * last + weights.c_mean * mean
}

fn evaluate_with(c: &Chromosome, weights: &FitnessWeights, set: &PropagatorSet, buf: &mut Vec<f64>) -> Evaluation {
    set.transfer_profile_into(&c.genes, buf);
    Evaluation {
        fitness: fitness_from_profile(buf, weights),
        fidelity: buf.last().copied().unwrap_or(0.0),
    }
}

pub fn fitness(c: &Chromosome, weights: &FitnessWeights, set: &PropagatorSet) -> f64 {
    evaluate_with(c, weights, set, &mut Vec::with_capacity(c.len())).fitness
}

/// Runs fitness evaluation on the configured number of workers.
pub struct Evaluator {
    pool: Option<rayon::ThreadPool>,
    serial: bool,
}

impl Evaluator {
    pub fn new(workers: usize) -> Result<Self> {
        match workers {
            0 => Ok(Self { pool: None, serial: false }),
            1 => Ok(Self { pool: None, serial: true }),
            w => {
                let pool = rayon::ThreadPoolBuilder::new()
                    .num_threads(w)
                    .build()
                    .map_err(|e| Error::InvalidConfig(format!("cannot start {w} workers: {e}")))?;
                Ok(Self { pool: Some(pool), serial: false })
            }
        }
    }

    pub fn evaluate(&self, pop: &[Chromosome], weights: &FitnessWeights, set: &PropagatorSet) -> Vec<Evaluation> {
        if self.serial {
            let mut buf = Vec::new();
            return pop.iter().map(|c| evaluate_with(c, weights, set, &mut buf)).collect();
        }
        let run = || {
            pop.par_iter()
                .map_init(Vec::new, |buf, c| evaluate_with(c, weights, set, buf))
                .collect()
        };
        match &self.pool {
            Some(pool) => pool.install(run),
            None => run(),
        }
    }
}

/// Population indices ordered by fitness, best first; ties keep index order.
fn ranking(fitness: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..fitness.len()).collect();
    order.sort_by(|&a, &b| fitness[b].total_cmp(&fitness[a]));
    order
}

/// The `k` fittest individuals, best first, ties broken by lower index.
pub fn steady_state_select(pop: &[(Chromosome, f64)], k: usize) -> Vec<Chromosome> {
    let fitness: Vec<f64> = pop.iter().map(|(_, f)| *f).collect();
    ranking(&fitness)
        .into_iter()
        .take(k)
        .map(|i| pop[i].0.clone())
        .collect()
}

/// Child whose every gene comes from `a` or `b` with probability 1/2.
pub fn uniform_crossover<R: Rng + ?Sized>(a: &Chromosome, b: &Chromosome, rng: &mut R) -> Result<Chromosome> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(a.len(), b.len()));
    }
    let genes = a
        .genes
        .iter()
        .zip(&b.genes)
        .map(|(&x, &y)| if rng.random::<bool>() { x } else { y })
        .collect();
    Ok(Chromosome { genes })
}

/// With probability `probability`, exchanges the genes at two distinct random positions.
pub fn swap_mutation<R: Rng + ?Sized>(c: &Chromosome, rng: &mut R, probability: f64) -> Chromosome {
    let mut out = c.clone();
    let len = out.len();
    if len < 2 || probability <= 0.0 || rng.random::<f64>() >= probability {
        return out;
    }
    let i = rng.random_range(0..len);
    let mut j = rng.random_range(0..len - 1);
    if j >= i {
        j += 1;
    }
    out.genes.swap(i, j);
    out
}

pub fn run_ga(gacfg: &GaConfig, cfg: &EpisodeConfig) -> Result<GaReport> {
    gacfg.validate()?;
    cfg.validate()?;
    let set = PropagatorSet::build(&cfg.chain)?;
    run_ga_with(gacfg, cfg, &set)
}

/// [`run_ga`] against an already-built propagator set.
pub fn run_ga_with(gacfg: &GaConfig, cfg: &EpisodeConfig, set: &PropagatorSet) -> Result<GaReport> {
    gacfg.validate()?;
    cfg.validate()?;
    let evaluator = Evaluator::new(gacfg.workers)?;
    let weights = &gacfg.fitness_weights;
    let mut rng = ChaCha8Rng::seed_from_u64(gacfg.seed);

    let mut pop: Vec<Chromosome> = (0..gacfg.population_size)
        .map(|_| Chromosome::random(cfg.horizon, &mut rng))
        .collect();
    let mut evals = evaluator.evaluate(&pop, weights, set);

    let mut fitness_history = Vec::with_capacity(gacfg.generations + 1);
    let mut fidelity_history = Vec::with_capacity(gacfg.generations + 1);
    let mut record = |evals: &[Evaluation]| -> usize {
        let fit: Vec<f64> = evals.iter().map(|e| e.fitness).collect();
        let best = ranking(&fit)[0];
        fitness_history.push(evals[best].fitness);
        fidelity_history.push(evals[best].fidelity);
        best
    };
    let mut best = record(&evals);
    let mut generations_run = 0;

    for generation in 1..=gacfg.generations {
        if evals[best].fidelity >= gacfg.fidelity_stop {
            break;
        }
        let fit: Vec<f64> = evals.iter().map(|e| e.fitness).collect();
        let order = ranking(&fit);
        let parents = &order[..gacfg.num_parents];
        let survivors = if gacfg.keep_parents {
            parents
        } else {
            &order[..gacfg.elite_count]
        };

        let n_children = gacfg.population_size - survivors.len();
        let children: Vec<Chromosome> = (0..n_children)
            .map(|_| {
                let a = &pop[parents[rng.random_range(0..parents.len())]];
                let b = &pop[parents[rng.random_range(0..parents.len())]];
                let child = uniform_crossover(a, b, &mut rng).expect("equal-length population");
                swap_mutation(&child, &mut rng, gacfg.mutation_probability)
            })
            .collect();
        let child_evals = evaluator.evaluate(&children, weights, set);

        let mut next_pop = Vec::with_capacity(gacfg.population_size);
        let mut next_evals = Vec::with_capacity(gacfg.population_size);
        for &i in survivors {
            next_pop.push(pop[i].clone());
            next_evals.push(evals[i]);
        }
        next_pop.extend(children);
        next_evals.extend(child_evals);
        pop = next_pop;
        evals = next_evals;

        best = record(&evals);
        generations_run = generation;
    }

    Ok(GaReport {
        best: pop[best].clone(),
        best_fitness: evals[best].fitness,
        best_fidelity: evals[best].fidelity,
        best_fitness_history: fitness_history,
        best_fidelity_history: fidelity_history,
        generations_run,
    })
}

/// Largest budget accepted by [`exhaustive_best`].
pub const EXHAUSTIVE_BUDGET: u64 = 10_000_000;

/// Best final fidelity over all `16^length` sequences, by depth-first enumeration.
///
/// Ties go to the lexicographically first sequence.
pub fn exhaustive_best(set: &PropagatorSet, length: usize) -> Result<(Vec<usize>, f64)> {
    let budget = (NUM_ACTIONS as u64).checked_pow(length as u32);
    if budget.is_none_or(|b| b > EXHAUSTIVE_BUDGET) {
        return Err(Error::SearchBudgetExceeded(length));
    }
    let n = set.n_sites();
    let zero = num_complex::Complex64::new(0.0, 0.0);
    // states[d] is the state after d actions of the current prefix.
    let mut states = vec![vec![zero; n]; length + 1];
    states[0][0] = num_complex::Complex64::new(1.0, 0.0);
    if length == 0 {
        return Ok((Vec::new(), states[0][n - 1].norm_sqr()));
    }
    let mut prefix = vec![0usize; length];
    let mut best = (Vec::new(), f64::NEG_INFINITY);

    fn descend(
        set: &PropagatorSet,
        depth: usize,
        states: &mut [Vec<num_complex::Complex64>],
        prefix: &mut [usize],
        best: &mut (Vec<usize>, f64),
    ) {
        let n = set.n_sites();
        let length = prefix.len();
        for id in 0..NUM_ACTIONS {
            let (done, rest) = states.split_at_mut(depth + 1);
            set.apply_into(id, &done[depth], &mut rest[0]);
            prefix[depth] = id;
            if depth + 1 == length {
                let f = rest[0][n - 1].norm_sqr().min(1.0);
                if f > best.1 {
                    *best = (prefix.to_vec(), f);
                }
            } else {
                descend(set, depth + 1, states, prefix, best);
            }
        }
    }

    descend(set, 0, &mut states, &mut prefix, &mut best);
    Ok(best)
}
