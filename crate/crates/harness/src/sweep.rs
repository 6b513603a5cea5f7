//! Baseline grid search: every trace-decay and learning-rate combination for
//! the eligibility-trace agents, and every step-size schedule for the
//! tile-coding agent. The best setting per agent is reported; model-based
//! agents have nothing to sweep and are skipped.

use crate::config::Experiment;
use crate::run::run_experiment;
use crate::HarnessError;
use mobles_core::agents::{AgentKind, AlphaSchedule, BetaSchedule, LAMBDA_TABLE};
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub agent: String,
    pub lambda: Option<f64>,
    pub alpha_schedule: Option<usize>,
    pub beta_schedule: Option<usize>,
    /// Mean accumulated reward over every episode of every run.
    pub mean_return: f64,
}

fn score(exp: &Experiment) -> Result<f64, HarnessError> {
    let (returns, _) = run_experiment(exp)?;
    if returns.is_empty() {
        return Err(HarnessError::Runtime("sweep produced no records".into()));
    }
    Ok(returns.iter().map(|r| r.ret).sum::<f64>() / returns.len() as f64)
}

/// Runs the grid for every sweepable agent in the experiment, returning all
/// scored rows in evaluation order.
pub fn sweep(exp: &Experiment) -> Result<Vec<SweepRow>, HarnessError> {
    let mut rows = Vec::new();
    for spec in &exp.agents {
        match spec.kind {
            AgentKind::QLambda | AgentKind::QsLambda => {
                for &lambda in &LAMBDA_TABLE {
                    for alpha in AlphaSchedule::ALL {
                        let mut probe = exp.clone();
                        let mut s = spec.clone();
                        s.params.lambda = lambda;
                        s.params.alpha = alpha;
                        probe.agents = vec![s];
                        rows.push(SweepRow {
                            agent: spec.id.clone(),
                            lambda: Some(lambda),
                            alpha_schedule: Some(alpha.id()),
                            beta_schedule: None,
                            mean_return: score(&probe)?,
                        });
                    }
                }
            }
            AgentKind::QlTile => {
                for beta in BetaSchedule::ALL {
                    let mut probe = exp.clone();
                    let mut s = spec.clone();
                    s.params.beta = beta;
                    s.params.beta_override = None;
                    probe.agents = vec![s];
                    rows.push(SweepRow {
                        agent: spec.id.clone(),
                        lambda: None,
                        alpha_schedule: None,
                        beta_schedule: Some(beta.id()),
                        mean_return: score(&probe)?,
                    });
                }
            }
            _ => {
                log::info!("agent `{}` has no sweep grid; skipping", spec.id);
            }
        }
    }
    Ok(rows)
}

/// The best row per agent, in first-seen agent order.
pub fn best_per_agent(rows: &[SweepRow]) -> Vec<&SweepRow> {
    let mut best: Vec<&SweepRow> = Vec::new();
    for row in rows {
        match best.iter_mut().find(|b| b.agent == row.agent) {
            Some(slot) => {
                if row.mean_return > slot.mean_return {
                    *slot = row;
                }
            }
            None => best.push(row),
        }
    }
    best
}
