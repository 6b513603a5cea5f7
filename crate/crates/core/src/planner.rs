//! Dynamic programming over an estimated model: point-estimate Q-values by
//! value iteration, in-episode one-step backups, and optimistic/pessimistic
//! Q-bounds by extended value iteration over the reward and transition
//! confidence sets.

use crate::model::{TabularModel, TERMINAL_SUCCESSOR};
use thiserror::Error;

/// Sweep cap guarding pathological configurations.
pub const MAX_SWEEPS: usize = 100_000;

#[derive(Debug, Error, PartialEq)]
pub enum PlannerError {
    #[error("value iteration did not converge within {sweeps} sweeps")]
    IterationCap { sweeps: usize },
    #[error("malformed probability vector: {0}")]
    MalformedDistribution(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlannerParams {
    pub gamma: f64,
    pub theta: f64,
    pub delta_r: f64,
    pub delta_p: f64,
}

impl PlannerParams {
    pub fn new(gamma: f64, theta: f64, delta_r: f64, delta_p: f64) -> Self {
        assert!((0.0..1.0).contains(&gamma), "gamma must be in [0, 1)");
        assert!(theta > 0.0, "theta must be positive");
        assert!((0.0..1.0).contains(&delta_r) && delta_r > 0.0);
        assert!((0.0..1.0).contains(&delta_p) && delta_p > 0.0);
        Self {
            gamma,
            theta,
            delta_r,
            delta_p,
        }
    }

    /// The stopping threshold tightens logarithmically with training:
    /// `0.01 / (1 + ln(episode))`, episodes numbered from 1.
    pub fn theta_for_episode(episode: usize) -> f64 {
        assert!(episode >= 1);
        0.01 / (1.0 + (episode as f64).ln())
    }

    pub fn with_theta(self, theta: f64) -> Self {
        Self { theta, ..self }
    }
}

/// Which extreme of the transition confidence set a backup optimizes over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExtremeDirection {
    Max,
    Min,
}

/// Exact optimizer of a linear objective over the intersection of the
/// probability simplex with the L1 ball of radius `eps_p` around `p_hat`:
/// shifts up to `eps_p / 2` of mass onto the extreme-valued successor and
/// strips it from the opposite tail. Ties are broken by successor position
/// so results are bit-reproducible.
pub fn inner_extreme_l1(
    values: &[f64],
    p_hat: &[f64],
    eps_p: f64,
    direction: ExtremeDirection,
) -> Result<Vec<f64>, PlannerError> {
    let mut out = p_hat.to_vec();
    let mut order = Vec::new();
    inner_extreme_l1_into(values, p_hat, eps_p, direction, &mut out, &mut order)?;
    Ok(out)
}

/// Allocation-free variant used inside the planning sweeps. `out` must
/// already contain a copy of `p_hat`.
fn inner_extreme_l1_into(
    values: &[f64],
    p_hat: &[f64],
    eps_p: f64,
    direction: ExtremeDirection,
    out: &mut [f64],
    order: &mut Vec<usize>,
) -> Result<(), PlannerError> {
    let n = p_hat.len();
    if n == 0 || values.len() != n {
        return Err(PlannerError::MalformedDistribution(
            "empty or mismatched successor arrays".into(),
        ));
    }
    let mut total = 0.0;
    for &p in p_hat {
        if !(0.0..=1.0 + 1e-9).contains(&p) {
            return Err(PlannerError::MalformedDistribution(format!(
                "probability {p} outside [0, 1]"
            )));
        }
        total += p;
    }
    if (total - 1.0).abs() > 1e-6 {
        return Err(PlannerError::MalformedDistribution(format!(
            "probabilities sum to {total}"
        )));
    }
    if !(0.0..=2.0).contains(&eps_p) {
        return Err(PlannerError::MalformedDistribution(format!(
            "eps_p {eps_p} outside [0, 2]"
        )));
    }

    // sort by value (best objective-improver first), ties by index
    order.clear();
    order.extend(0..n);
    match direction {
        ExtremeDirection::Max => order.sort_by(|&i, &j| {
            values[j]
                .partial_cmp(&values[i])
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(i.cmp(&j))
        }),
        ExtremeDirection::Min => order.sort_by(|&i, &j| {
            values[i]
                .partial_cmp(&values[j])
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(i.cmp(&j))
        }),
    }

    let receiver = order[0];
    let add = (eps_p / 2.0).min(1.0 - out[receiver]);
    out[receiver] += add;
    let mut excess = add;
    for &j in order.iter().rev() {
        if excess <= 0.0 {
            break;
        }
        if j == receiver {
            continue;
        }
        let take = out[j].min(excess);
        out[j] -= take;
        excess -= take;
    }
    Ok(())
}

/// Point-estimate optimal Q-values: Bellman optimality iteration on the
/// maximum-likelihood model, swept in place until the largest update is at
/// most `theta`. Terminal states stay pinned at zero.
pub fn policy_evaluation(
    model: &TabularModel,
    params: &PlannerParams,
) -> Result<Vec<f64>, PlannerError> {
    let a_n = model.num_actions();
    let mut q = vec![0.0; model.num_states() * a_n];
    let mut probs = Vec::new();
    for _ in 0..MAX_SWEEPS {
        let mut max_change = 0.0f64;
        for s in 0..model.num_states() {
            if !model.is_valid(s) || model.is_terminal(s) {
                continue;
            }
            for a in 0..a_n {
                model.estimated_probs_into(s, a, &mut probs);
                let mut v = model.r_hat(s, a);
                for (&s2, &p) in model.successors(s, a).iter().zip(&probs) {
                    v += p * params.gamma * state_value(model, &q, s2);
                }
                let sa = s * a_n + a;
                max_change = max_change.max((v - q[sa]).abs());
                q[sa] = v;
            }
        }
        if max_change <= params.theta {
            return Ok(q);
        }
    }
    Err(PlannerError::IterationCap { sweeps: MAX_SWEEPS })
}

#[inline]
fn state_value(model: &TabularModel, q: &[f64], s: u32) -> f64 {
    if s == TERMINAL_SUCCESSOR {
        return 0.0;
    }
    let s = s as usize;
    if model.is_terminal(s) {
        return 0.0;
    }
    let a_n = model.num_actions();
    let row = &q[s * a_n..(s + 1) * a_n];
    row.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// One Bellman backup of `model.q` at a single pair, using the current
/// values of the successors.
pub fn one_step_backup(model: &mut TabularModel, s: usize, a: usize, params: &PlannerParams) {
    let mut probs = Vec::new();
    model.estimated_probs_into(s, a, &mut probs);
    let mut v = model.r_hat(s, a);
    for (&s2, &p) in model.successors(s, a).iter().zip(&probs) {
        v += p * params.gamma * state_value(model, &model.q, s2);
    }
    let sa = model.sa(s, a);
    model.q[sa] = v;
}

#[allow(clippy::too_many_arguments)]
fn bound_backup(
    model: &TabularModel,
    q: &[f64],
    s: usize,
    a: usize,
    params: &PlannerParams,
    direction: ExtremeDirection,
    u: &mut Vec<f64>,
    probs: &mut Vec<f64>,
    tilted: &mut Vec<f64>,
    order: &mut Vec<usize>,
) -> Result<f64, PlannerError> {
    let eps_r = model.reward_radius(s, a, params.delta_r);
    let r_bound = match direction {
        ExtremeDirection::Max => model.r_hat(s, a) + eps_r,
        ExtremeDirection::Min => model.r_hat(s, a) - eps_r,
    };
    let successors = model.successors(s, a);
    u.clear();
    u.extend(
        successors
            .iter()
            .map(|&s2| params.gamma * state_value(model, q, s2)),
    );
    model.estimated_probs_into(s, a, probs);
    let eps_p = model.transition_radius(s, a, params.delta_p);
    tilted.clear();
    tilted.extend_from_slice(probs);
    inner_extreme_l1_into(u, probs, eps_p, direction, tilted, order)?;
    let expectation: f64 = tilted.iter().zip(u.iter()).map(|(p, v)| p * v).sum();
    Ok(r_bound + expectation)
}

fn extended_value_iteration(
    model: &TabularModel,
    params: &PlannerParams,
    direction: ExtremeDirection,
) -> Result<Vec<f64>, PlannerError> {
    let a_n = model.num_actions();
    let mut q = vec![0.0; model.num_states() * a_n];
    let mut u = Vec::new();
    let mut probs = Vec::new();
    let mut tilted = Vec::new();
    let mut order = Vec::new();
    for _ in 0..MAX_SWEEPS {
        let mut max_change = 0.0f64;
        for s in 0..model.num_states() {
            if !model.is_valid(s) || model.is_terminal(s) {
                continue;
            }
            for a in 0..a_n {
                let v = bound_backup(
                    model, &q, s, a, params, direction, &mut u, &mut probs, &mut tilted,
                    &mut order,
                )?;
                let sa = s * a_n + a;
                max_change = max_change.max((v - q[sa]).abs());
                q[sa] = v;
            }
        }
        if max_change <= params.theta {
            return Ok(q);
        }
    }
    Err(PlannerError::IterationCap { sweeps: MAX_SWEEPS })
}

/// Optimistic Q-bounds: rewards shifted up by their radius, transition
/// vectors tilted toward the best successors within the L1 ball.
pub fn optimistic_values(
    model: &TabularModel,
    params: &PlannerParams,
) -> Result<Vec<f64>, PlannerError> {
    extended_value_iteration(model, params, ExtremeDirection::Max)
}

/// Pessimistic Q-bounds: the mirror image of [`optimistic_values`].
pub fn pessimistic_values(
    model: &TabularModel,
    params: &PlannerParams,
) -> Result<Vec<f64>, PlannerError> {
    extended_value_iteration(model, params, ExtremeDirection::Min)
}

/// In-episode refresh of `model.q_u` and `model.q_l` at the visited pair
/// only, against the current bound tables. The full recomputation happens
/// after each episode via [`optimistic_values`] / [`pessimistic_values`].
pub fn refresh_bounds_at(
    model: &mut TabularModel,
    s: usize,
    a: usize,
    params: &PlannerParams,
) -> Result<(), PlannerError> {
    let mut u = Vec::new();
    let mut probs = Vec::new();
    let mut tilted = Vec::new();
    let mut order = Vec::new();
    let up = bound_backup(
        model,
        &model.q_u,
        s,
        a,
        params,
        ExtremeDirection::Max,
        &mut u,
        &mut probs,
        &mut tilted,
        &mut order,
    )?;
    let low = bound_backup(
        model,
        &model.q_l,
        s,
        a,
        params,
        ExtremeDirection::Min,
        &mut u,
        &mut probs,
        &mut tilted,
        &mut order,
    )?;
    let sa = model.sa(s, a);
    model.q_u[sa] = up;
    model.q_l[sa] = low;
    Ok(())
}
