//! The `qst` command line.
//!
//! Each subcommand has a `cmd_*` function that does the work and writes its
//! files into the output directory, so tests can drive them without a process.

use std::fmt::Write as _;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::config::RunConfig;
use crate::dqn::{self, TrainReport};
use crate::dynamics::{natural_evolution, ActionCatalog, PropagatorSet};
use crate::environment::{plateau_width, sequence_fidelity_profile, EpisodeConfig};
use crate::error::{Error, Result};
use crate::ga::{self, GaReport};
use crate::io::{self, Csv};

/// Fraction of the profile maximum that counts as being on the plateau.
pub const PLATEAU_FRACTION: f64 = 0.9;

#[derive(Debug, Parser)]
#[command(name = "qst", version, about = "Optimal control of state transfer in XX spin chains")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// TOML configuration file; defaults apply to anything it omits.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Base seed for every stochastic component.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Number of sites.
    #[arg(long = "n", global = true)]
    pub n_sites: Option<usize>,
    /// Suppress progress and summary output.
    #[arg(long, global = true)]
    pub quiet: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// List the 16 control actions.
    Catalog,
    /// Print the effective configuration as TOML.
    Config {
        /// Print the built-in defaults instead.
        #[arg(long)]
        print_default: bool,
    },
    /// Transfer probability of the uncontrolled chain.
    Evolve {
        /// Final time; defaults to horizon·dt.
        #[arg(long)]
        t_max: Option<f64>,
        #[arg(long, default_value_t = 1001)]
        samples: usize,
    },
    /// Optimize a pulse sequence with the genetic algorithm.
    Ga {
        #[arg(long)]
        generations: Option<usize>,
    },
    /// Optimize a pulse sequence with deep Q-learning.
    Drl {
        #[arg(long)]
        episodes: Option<usize>,
    },
    /// Fidelity profile of a stored sequence.
    Replay {
        #[arg(long)]
        sequence: PathBuf,
    },
    /// Repeated GA and DQN runs side by side.
    Compare {
        #[arg(long, default_value_t = 10)]
        repetitions: usize,
        /// Comma-separated chain sizes; defaults to the configured size.
        #[arg(long, value_delimiter = ',')]
        sizes: Vec<usize>,
    },
}

/// Loads the configuration and applies command-line overrides.
pub fn resolve_config(global: &GlobalArgs) -> Result<RunConfig> {
    let mut cfg = match &global.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = global.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &global.out {
        cfg.output_dir = out.clone();
    }
    if let Some(n) = global.n_sites {
        cfg = cfg.with_n_sites(n);
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Runs one parsed invocation; returns the text for stdout.
pub fn run(cli: &Cli) -> Result<String> {
    if let Command::Config { print_default: true } = cli.command {
        return RunConfig::default().to_toml_string();
    }
    let mut cfg = resolve_config(&cli.global)?;
    let quiet = cli.global.quiet;
    let mut out = String::new();
    match &cli.command {
        Command::Catalog => out = cmd_catalog(),
        Command::Config { .. } => out = cfg.to_toml_string()?,
        Command::Evolve { t_max, samples } => {
            let t_max = t_max.unwrap_or_else(|| {
                let ep = cfg.episode_config();
                ep.horizon as f64 * ep.chain.dt
            });
            let points = cmd_evolve(&cfg, t_max, *samples)?;
            let max = points.iter().map(|p| p.1).fold(0.0, f64::max);
            writeln!(out, "max P = {max:.6} over t in [0, {t_max}]").unwrap();
        }
        Command::Ga { generations } => {
            if let Some(g) = generations {
                cfg.ga.generations = *g;
            }
            let report = cmd_ga(&cfg)?;
            writeln!(
                out,
                "GA best fidelity {:.6} after {} generations: {}",
                report.best_fidelity,
                report.generations_run,
                io::format_sequence(report.best.genes()).trim_end()
            )
            .unwrap();
        }
        Command::Drl { episodes } => {
            if let Some(e) = episodes {
                cfg.dqn.episodes = *e;
            }
            let report = cmd_drl(&cfg)?;
            writeln!(
                out,
                "DQN best fidelity {:.6}: {}",
                report.best_fidelity,
                io::format_sequence(&report.best_sequence).trim_end()
            )
            .unwrap();
        }
        Command::Replay { sequence } => {
            let profile = cmd_replay(&cfg, sequence)?;
            let last = profile.last().map_or(0.0, |p| p.1);
            writeln!(out, "{} steps, final fidelity {last:.12}", profile.len()).unwrap();
        }
        Command::Compare { repetitions, sizes } => {
            let sizes = if sizes.is_empty() { vec![cfg.chain.n_sites] } else { sizes.clone() };
            for row in cmd_compare(&cfg, *repetitions, &sizes, quiet)? {
                writeln!(
                    out,
                    "N={:<3} {:<3} mean {:.6} max {:.6} plateau {}",
                    row.n_sites, row.method, row.mean_best_fidelity, row.max_best_fidelity, row.plateau_width
                )
                .unwrap();
            }
        }
    }
    Ok(if quiet { String::new() } else { out })
}

pub fn cmd_catalog() -> String {
    let mut out = String::from("id  left  right\n");
    for action in ActionCatalog::canonical().iter() {
        writeln!(out, "{action}").unwrap();
    }
    out
}

fn output_path(cfg: &RunConfig, name: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(&cfg.output_dir)?;
    Ok(cfg.output_dir.join(name))
}

/// Profile points keyed by elapsed time `step·dt`.
fn timed_profile(profile: &[(usize, f64)], dt: f64) -> Vec<(f64, f64)> {
    profile.iter().map(|&(j, f)| (j as f64 * dt, f)).collect()
}

/// Writes `natural_evolution.csv`.
pub fn cmd_evolve(cfg: &RunConfig, t_max: f64, samples: usize) -> Result<Vec<(f64, f64)>> {
    let points = natural_evolution(&cfg.chain, t_max, samples)?;
    io::profile_csv(&points).write(&output_path(cfg, "natural_evolution.csv")?)?;
    Ok(points)
}

fn ga_report_csv(report: &GaReport) -> Csv {
    let mut csv = Csv::new(&["generation", "best_fitness", "best_fidelity"]);
    for (g, (&fit, &fid)) in report
        .best_fitness_history
        .iter()
        .zip(&report.best_fidelity_history)
        .enumerate()
    {
        csv.row(&[g.into(), fit.into(), fid.into()]);
    }
    csv
}

/// Writes `ga_best_sequence.txt`, `ga_report.csv` and `ga_profile.csv`.
pub fn cmd_ga(cfg: &RunConfig) -> Result<GaReport> {
    let episode = cfg.episode_config();
    let set = PropagatorSet::build(&episode.chain)?;
    let report = ga::run_ga_with(&cfg.ga_config(0), &episode, &set)?;
    io::write_sequence(&output_path(cfg, "ga_best_sequence.txt")?, report.best.genes())?;
    ga_report_csv(&report).write(&output_path(cfg, "ga_report.csv")?)?;
    let profile = sequence_fidelity_profile(report.best.genes(), &episode, &set)?;
    io::profile_csv(&timed_profile(&profile, episode.chain.dt)).write(&output_path(cfg, "ga_profile.csv")?)?;
    Ok(report)
}

/// Writes `drl_best_sequence.txt`, `drl_history.csv`, `drl_profile.csv` and `drl_params.txt`.
pub fn cmd_drl(cfg: &RunConfig) -> Result<TrainReport> {
    let episode = cfg.episode_config();
    let set = PropagatorSet::build(&episode.chain)?;
    let report = dqn::train_with(&cfg.dqn_config(0), &episode, &set)?;
    io::write_sequence(&output_path(cfg, "drl_best_sequence.txt")?, &report.best_sequence)?;
    let mut history = Csv::new(&["episode", "epsilon", "return", "best_fidelity"]);
    for r in &report.history {
        history.row(&[r.episode.into(), r.epsilon.into(), r.episode_return.into(), r.best_fidelity.into()]);
    }
    history.write(&output_path(cfg, "drl_history.csv")?)?;
    let profile = sequence_fidelity_profile(&report.best_sequence, &episode, &set)?;
    io::profile_csv(&timed_profile(&profile, episode.chain.dt)).write(&output_path(cfg, "drl_profile.csv")?)?;
    report
        .params
        .save(BufWriter::new(File::create(output_path(cfg, "drl_params.txt")?)?))?;
    Ok(report)
}

/// Writes `replay_profile.csv`; returns the stepwise profile.
pub fn cmd_replay(cfg: &RunConfig, sequence: &Path) -> Result<Vec<(usize, f64)>> {
    let seq = io::read_sequence(sequence)?;
    let episode = cfg.episode_config();
    // A stored sequence may be longer than the configured horizon.
    let episode = EpisodeConfig {
        horizon: episode.horizon.max(seq.len()),
        ..episode
    };
    let set = PropagatorSet::build(&episode.chain)?;
    let profile = sequence_fidelity_profile(&seq, &episode, &set)?;
    io::profile_csv(&timed_profile(&profile, episode.chain.dt)).write(&output_path(cfg, "replay_profile.csv")?)?;
    Ok(profile)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareRow {
    pub n_sites: usize,
    pub method: &'static str,
    pub repetitions: usize,
    pub mean_best_fidelity: f64,
    pub max_best_fidelity: f64,
    /// Plateau width of the best run's profile.
    pub plateau_width: usize,
}

fn summarize(n_sites: usize, method: &'static str, runs: &[(f64, Vec<f64>)]) -> CompareRow {
    // Earliest repetition wins ties.
    let best = runs
        .iter()
        .reduce(|a, b| if b.0 > a.0 { b } else { a })
        .expect("at least one repetition");
    CompareRow {
        n_sites,
        method,
        repetitions: runs.len(),
        mean_best_fidelity: runs.iter().map(|r| r.0).sum::<f64>() / runs.len() as f64,
        max_best_fidelity: best.0,
        plateau_width: plateau_width(&best.1, PLATEAU_FRACTION),
    }
}

/// Runs both optimizers `repetitions` times per size with seeds `seed + i`;
/// writes `compare_summary.csv`.
pub fn cmd_compare(cfg: &RunConfig, repetitions: usize, sizes: &[usize], quiet: bool) -> Result<Vec<CompareRow>> {
    if repetitions == 0 {
        return Err(Error::InvalidConfig("repetitions must be at least 1".into()));
    }
    let mut rows = Vec::with_capacity(2 * sizes.len());
    for &n in sizes {
        let run_cfg = cfg.clone().with_n_sites(n);
        run_cfg.validate()?;
        let episode = run_cfg.episode_config();
        let set = PropagatorSet::build(&episode.chain)?;
        let profile_of = |seq: &[usize]| -> Result<Vec<f64>> {
            Ok(sequence_fidelity_profile(seq, &episode, &set)?.into_iter().map(|p| p.1).collect())
        };
        let mut ga_runs = Vec::with_capacity(repetitions);
        let mut dqn_runs = Vec::with_capacity(repetitions);
        for i in 0..repetitions as u64 {
            let g = ga::run_ga_with(&run_cfg.ga_config(i), &episode, &set)?;
            ga_runs.push((g.best_fidelity, profile_of(g.best.genes())?));
            let d = dqn::train_with(&run_cfg.dqn_config(i), &episode, &set)?;
            dqn_runs.push((d.best_fidelity, profile_of(&d.best_sequence)?));
            if !quiet {
                eprintln!(
                    "N={n} repetition {}/{repetitions}: GA {:.6} DQN {:.6}",
                    i + 1,
                    g.best_fidelity,
                    d.best_fidelity
                );
            }
        }
        rows.push(summarize(n, "ga", &ga_runs));
        rows.push(summarize(n, "dqn", &dqn_runs));
    }
    let mut csv = Csv::new(&[
        "n",
        "method",
        "repetitions",
        "mean_best_fidelity",
        "max_best_fidelity",
        "plateau_width",
    ]);
    for r in &rows {
        csv.row(&[
            r.n_sites.into(),
            r.method.into(),
            r.repetitions.into(),
            r.mean_best_fidelity.into(),
            r.max_best_fidelity.into(),
            r.plateau_width.into(),
        ]);
    }
    csv.write(&output_path(cfg, "compare_summary.csv")?)?;
    Ok(rows)
}
