//! Multi-run experiment execution with per-run seed derivation, optional
//! parallelism over a bounded worker pool, and canonical CSV output.

use crate::config::Experiment;
use crate::HarnessError;
use mobles_core::agents::build_agent;
use mobles_core::spaces::SpaceFamily;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// One episode of one run, as written to `returns.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub env: String,
    pub agent: String,
    pub run: usize,
    pub episode: usize,
    #[serde(rename = "return")]
    pub ret: f64,
    pub steps: usize,
    pub reached_goal: bool,
    pub truncated: bool,
}

/// One (episode, space) weight entry, as written to `weights.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightRecord {
    pub env: String,
    pub agent: String,
    pub run: usize,
    pub episode: usize,
    pub space: String,
    pub weight: f64,
}

/// Derives the random seed for one run. The derivation hashes the
/// environment and agent identifiers together with the run index, so adding
/// or reordering agents in a config never perturbs another agent's streams.
pub fn run_seed(base_seed: u64, env: &str, agent: &str, run: usize) -> u64 {
    let mut h = 0xcbf29ce484222325u64; // FNV-1a
    let mut eat = |bytes: &[u8]| {
        for &b in bytes {
            h ^= b as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
    };
    eat(&base_seed.to_le_bytes());
    eat(env.as_bytes());
    eat(&[0]);
    eat(agent.as_bytes());
    eat(&[0]);
    eat(&(run as u64).to_le_bytes());
    h
}

fn run_single(
    exp: &Experiment,
    agent_idx: usize,
    run: usize,
) -> Result<(Vec<RunRecord>, Vec<WeightRecord>), HarnessError> {
    let spec = &exp.agents[agent_idx];
    let features = exp.maze.feature_space(exp.mode);
    let family = match &exp.subspaces {
        Some(subs) => SpaceFamily::from_names(features, subs)
            .map_err(|e| HarnessError::Config(e.to_string()))?,
        None => SpaceFamily::singletons(features),
    };
    let mut agent = build_agent(spec.kind, exp.maze.clone(), exp.mode, family, spec.params)?;
    let labels = agent.space_labels();
    let mut rng = ChaCha8Rng::seed_from_u64(run_seed(exp.base_seed, &exp.env_id, &spec.id, run));

    let mut returns = Vec::with_capacity(exp.episodes);
    let mut weights = Vec::new();
    for episode in 1..=exp.episodes {
        let log = agent.run_episode(&mut rng, exp.max_steps)?;
        returns.push(RunRecord {
            env: exp.env_id.clone(),
            agent: spec.id.clone(),
            run,
            episode,
            ret: log.return_sum,
            steps: log.num_steps(),
            reached_goal: log.reached_goal,
            truncated: log.truncated,
        });
        for (label, &weight) in labels.iter().zip(&log.mean_weights) {
            weights.push(WeightRecord {
                env: exp.env_id.clone(),
                agent: spec.id.clone(),
                run,
                episode,
                space: label.clone(),
                weight,
            });
        }
    }
    Ok((returns, weights))
}

/// Runs every (agent, run) combination and returns the records in canonical
/// order (agent declaration order, then run, then episode). Scheduling never
/// affects the contents: each run owns an independent random stream and the
/// results are sorted before returning.
pub fn run_experiment(
    exp: &Experiment,
) -> Result<(Vec<RunRecord>, Vec<WeightRecord>), HarnessError> {
    let tasks: Vec<(usize, usize)> = (0..exp.agents.len())
        .flat_map(|ai| (0..exp.runs).map(move |r| (ai, r)))
        .collect();
    let results: Result<Vec<_>, HarnessError> = if exp.workers == 1 {
        tasks
            .iter()
            .map(|&(ai, run)| run_single(exp, ai, run).map(|out| ((ai, run), out)))
            .collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(exp.workers)
            .build()
            .map_err(|e| HarnessError::Runtime(e.to_string()))?;
        pool.install(|| {
            tasks
                .par_iter()
                .map(|&(ai, run)| run_single(exp, ai, run).map(|out| ((ai, run), out)))
                .collect()
        })
    };
    let mut results = results?;
    results.sort_by_key(|(key, _)| *key);
    let mut returns = Vec::with_capacity(exp.agents.len() * exp.runs * exp.episodes);
    let mut weights = Vec::new();
    for (_, (r, w)) in results {
        returns.extend(r);
        weights.extend(w);
    }
    Ok((returns, weights))
}

/// Writes both CSVs under `out_dir` (created if needed). Files are written
/// to a temporary name and renamed into place, so a failed run leaves no
/// partial output behind.
pub fn write_outputs(
    out_dir: &Path,
    returns: &[RunRecord],
    weights: &[WeightRecord],
) -> Result<(PathBuf, PathBuf), HarnessError> {
    std::fs::create_dir_all(out_dir)?;
    let returns_path = out_dir.join("returns.csv");
    let weights_path = out_dir.join("weights.csv");
    write_csv(&returns_path, RETURNS_HEADER, returns)?;
    if let Err(e) = write_csv(&weights_path, WEIGHTS_HEADER, weights) {
        let _ = std::fs::remove_file(&returns_path);
        return Err(e);
    }
    Ok((returns_path, weights_path))
}

const RETURNS_HEADER: &[&str] = &[
    "env", "agent", "run", "episode", "return", "steps", "reached_goal", "truncated",
];
const WEIGHTS_HEADER: &[&str] = &["env", "agent", "run", "episode", "space", "weight"];

fn write_csv<T: Serialize>(path: &Path, header: &[&str], rows: &[T]) -> Result<(), HarnessError> {
    let tmp = path.with_extension("csv.tmp");
    let result = (|| -> Result<(), HarnessError> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_path(&tmp)?;
        w.write_record(header)?;
        for row in rows {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    })();
    match result {
        Ok(()) => {
            std::fs::rename(&tmp, path)?;
            Ok(())
        }
        Err(e) => {
            let _ = std::fs::remove_file(&tmp);
            Err(e)
        }
    }
}

pub fn read_returns(path: &Path) -> Result<Vec<RunRecord>, HarnessError> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for row in reader.deserialize() {
        out.push(row?);
    }
    Ok(out)
}

pub fn read_weights(path: &Path) -> Result<Vec<WeightRecord>, HarnessError> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for row in reader.deserialize() {
        out.push(row?);
    }
    Ok(out)
}
