//! Aggregation over runs (per-episode mean and standard error) and the
//! rectangular smoothing used for the weight plots.

use crate::run::{RunRecord, WeightRecord};
use crate::HarnessError;
use std::collections::BTreeMap;

/// Centered moving average with an odd window; near the boundaries the
/// window shrinks symmetrically so the average never reaches outside the
/// series.
pub fn smooth_rect(series: &[f64], window: usize) -> Result<Vec<f64>, HarnessError> {
    if window == 0 || window % 2 == 0 {
        return Err(HarnessError::Config(format!(
            "smoothing window must be odd and positive, got {window}"
        )));
    }
    let n = series.len();
    let half = window / 2;
    Ok((0..n)
        .map(|i| {
            let reach = half.min(i).min(n - 1 - i);
            let slice = &series[i - reach..=i + reach];
            slice.iter().sum::<f64>() / slice.len() as f64
        })
        .collect())
}

/// Per-episode aggregate over runs.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeStat {
    pub episode: usize,
    pub mean: f64,
    /// Standard error of the mean: sample standard deviation over runs
    /// divided by sqrt(runs). Zero by convention for a single run.
    pub sem: f64,
}

fn mean_and_sem(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt() / n.sqrt())
}

/// Per-episode return statistics keyed by (env, agent).
pub fn aggregate_returns(
    records: &[RunRecord],
) -> BTreeMap<(String, String), Vec<EpisodeStat>> {
    let mut grouped: BTreeMap<(String, String), BTreeMap<usize, Vec<f64>>> = BTreeMap::new();
    for r in records {
        grouped
            .entry((r.env.clone(), r.agent.clone()))
            .or_default()
            .entry(r.episode)
            .or_default()
            .push(r.ret);
    }
    finalize(grouped)
}

/// Per-episode weight statistics keyed by (env, agent, space).
pub fn aggregate_weights(
    records: &[WeightRecord],
) -> BTreeMap<(String, String, String), Vec<EpisodeStat>> {
    let mut grouped: BTreeMap<(String, String, String), BTreeMap<usize, Vec<f64>>> =
        BTreeMap::new();
    for r in records {
        grouped
            .entry((r.env.clone(), r.agent.clone(), r.space.clone()))
            .or_default()
            .entry(r.episode)
            .or_default()
            .push(r.weight);
    }
    finalize(grouped)
}

fn finalize<K: Ord>(
    grouped: BTreeMap<K, BTreeMap<usize, Vec<f64>>>,
) -> BTreeMap<K, Vec<EpisodeStat>> {
    let mut out = BTreeMap::new();
    for (key, by_episode) in grouped {
        let mut series = Vec::with_capacity(by_episode.len());
        for (episode, values) in by_episode {
            if values.len() == 1 {
                log::warn!("single run at episode {episode}; standard error reported as 0");
            }
            let (mean, sem) = mean_and_sem(&values);
            series.push(EpisodeStat { episode, mean, sem });
        }
        out.insert(key, series);
    }
    out
}
