use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;

use super::csv::{aggregate, format_log};
use crate::dynamics::{run, IterateLog, Method, RunConfig, StepSize, TheoremAudit};
use crate::error::{Error, Result};
use crate::game::{make_general_potential, make_identical_interest, read_game, GameKind, PotentialGame};
use crate::rng::stream_seed;

#[derive(Debug, Clone, PartialEq)]
pub enum GameSource {
    /// A fresh game per run, seeded with `base_seed + run_index`.
    Generate {
        kind: GameKind,
        num_agents: usize,
        num_actions: usize,
    },
    File(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Variant {
    pub method: Method,
    pub tau: f64,
    pub eta: StepSize,
}

impl Variant {
    /// File stem shared by all runs of this variant, e.g. `npg_tau1e-2`.
    pub fn name(&self) -> String {
        format!("{}_tau{}", self.method.name(), tau_tag(self.tau))
    }

    pub fn label(&self) -> String {
        match self.method {
            Method::Npg => format!("npg tau={}", tau_tag(self.tau)),
            m => m.name().to_string(),
        }
    }
}

pub fn tau_tag(tau: f64) -> String {
    format!("{tau:e}")
}

/// Cartesian product of methods and temperatures. Unregularized methods
/// appear once with `τ = 0`.
pub fn variants(methods: &[Method], taus: &[f64], eta: StepSize) -> Vec<Variant> {
    let mut out = Vec::new();
    for &method in methods {
        match method {
            Method::Npg => out.extend(taus.iter().map(|&tau| Variant { method, tau, eta })),
            _ => out.push(Variant { method, tau: 0.0, eta }),
        }
    }
    out.dedup();
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub source: GameSource,
    pub variants: Vec<Variant>,
    pub num_seeds: usize,
    pub base_seed: u64,
    pub max_iters: usize,
    pub log_every: usize,
    pub stop_qre_gap: Option<f64>,
    pub out_dir: PathBuf,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.variants.is_empty() {
            return Err(Error::InvalidParameter("no run variants".into()));
        }
        if self.num_seeds == 0 {
            return Err(Error::InvalidParameter("--runs must be positive".into()));
        }
        if matches!(self.source, GameSource::File(_)) && self.num_seeds > 1 {
            return Err(Error::InvalidParameter(
                "a loaded game with uniform initialization is deterministic; use --runs 1".into(),
            ));
        }
        Ok(())
    }

    pub fn run_seed(&self, run_index: usize) -> u64 {
        stream_seed(self.base_seed, run_index as u64)
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub variant: Variant,
    pub run_index: usize,
    pub seed: u64,
    pub stem: String,
    pub log: IterateLog,
    pub audit: TheoremAudit,
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub runs: Vec<RunOutcome>,
    pub aggregates: Vec<(Variant, PathBuf)>,
}

fn write(path: &Path, contents: &[u8]) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn load_games(spec: &ExperimentSpec) -> Result<Vec<Arc<PotentialGame>>> {
    match &spec.source {
        GameSource::File(path) => Ok(vec![Arc::new(read_game(path)?)]),
        GameSource::Generate {
            kind,
            num_agents,
            num_actions,
        } => (0..spec.num_seeds)
            .into_par_iter()
            .map(|k| {
                let seed = spec.run_seed(k);
                let game = match kind {
                    GameKind::GeneralPotential => make_general_potential(*num_agents, *num_actions, seed)?,
                    _ => make_identical_interest(*num_agents, *num_actions, seed)?,
                };
                Ok(Arc::new(game))
            })
            .collect(),
    }
}

/// Runs every (variant, seed) pair, writing `{stem}.csv`, `{stem}.json` and
/// `{stem}.policy.csv` per run and `aggregate_{variant}.csv` per variant.
/// Runs execute in parallel; outputs are independent of scheduling.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentReport> {
    spec.validate()?;
    std::fs::create_dir_all(&spec.out_dir).map_err(|e| Error::io(&spec.out_dir, e))?;
    let games = load_games(spec)?;
    let jobs: Vec<(usize, usize)> = (0..spec.variants.len())
        .flat_map(|v| (0..spec.num_seeds).map(move |k| (v, k)))
        .collect();
    let runs = jobs
        .into_par_iter()
        .map(|(v, k)| {
            let variant = spec.variants[v];
            let game = &games[k];
            let seed = game.seed();
            let mut config = RunConfig::new(variant.method, variant.tau, spec.max_iters)
                .with_eta(variant.eta)
                .with_seed(seed);
            config.log_every = spec.log_every;
            config.stop_qre_gap = spec.stop_qre_gap;
            // Monotonicity is audited after the run so a violation still
            // leaves a complete log behind.
            config.monotonicity_check = false;
            let log = run(game, &config)?;
            let stem = format!("{}_seed{seed}", variant.name());
            let dir = &spec.out_dir;
            write(&dir.join(format!("{stem}.csv")), format_log(&log.records).as_bytes())?;
            let json = serde_json::to_string_pretty(&log.summary).expect("summary serializes");
            write(&dir.join(format!("{stem}.json")), (json + "\n").as_bytes())?;
            write(&dir.join(format!("{stem}.policy.csv")), log.final_policy.to_csv().as_bytes())?;
            let audit = TheoremAudit::evaluate(&log.summary, &log.records);
            Ok(RunOutcome {
                variant,
                run_index: k,
                seed,
                stem,
                log,
                audit,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut aggregates = Vec::new();
    for (v, variant) in spec.variants.iter().enumerate() {
        let logs: Vec<_> = runs[v * spec.num_seeds..(v + 1) * spec.num_seeds]
            .iter()
            .map(|r| r.log.records.clone())
            .collect();
        let path = spec.out_dir.join(format!("aggregate_{}.csv", variant.name()));
        write(&path, format_log(&aggregate(&logs)?).as_bytes())?;
        aggregates.push((*variant, path));
    }
    Ok(ExperimentReport { runs, aggregates })
}

/// Recovers `(method, τ)` from an `aggregate_{method}_tau{τ}.csv` file name.
pub fn parse_aggregate_name(path: &Path) -> Option<(Method, f64)> {
    let stem = path.file_name()?.to_str()?.strip_prefix("aggregate_")?.strip_suffix(".csv")?;
    let (method, tau) = stem.split_once("_tau")?;
    Some((method.parse().ok()?, tau.parse().ok()?))
}
