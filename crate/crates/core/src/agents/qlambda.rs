//! Watkins-style eligibility-trace learning, per space, with Monte-Carlo
//! return statistics supplying the confidence intervals that drive the same
//! decision fusion as the model-based learner.
//!
//! The uncertainty side is a reconstruction: per (state, action) and per
//! space, first-visit discounted returns are collected and a Hoeffding
//! interval over the configured return range stands in for the original
//! Monte-Carlo procedure. With an empty subspace family the agent is plain
//! Watkins Q(lambda).

use super::{sample_action, AgentError, AgentParams, EpisodeLog, StepRecord};
use crate::cdm::{
    confidence_degree_with, decision_weights, epsilon_greedy_probs, fuse, ConfidenceDegree,
    ConfidenceInterval,
};
use crate::gridworld::{terminal_states, Action, GridMaze, SensorMode, NUM_ACTIONS};
use crate::spaces::{SpaceFamily, SubspaceDef};
use rand::Rng;

/// Tabular Watkins Q(lambda) over one space.
pub struct WatkinsLearner {
    num_states: usize,
    pub q: Vec<f64>,
    traces: Vec<f64>,
    active: Vec<usize>,
    visits: Vec<u64>,
    terminal: Vec<bool>,
}

impl WatkinsLearner {
    pub fn new(num_states: usize, terminal: Vec<bool>) -> Self {
        assert_eq!(terminal.len(), num_states);
        let pairs = num_states * NUM_ACTIONS;
        WatkinsLearner {
            num_states,
            q: vec![0.0; pairs],
            traces: vec![0.0; pairs],
            active: Vec::new(),
            visits: vec![0; pairs],
            terminal,
        }
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn visit_count(&self, s: usize, a: usize) -> u64 {
        self.visits[s * NUM_ACTIONS + a]
    }

    pub fn q_row(&self, s: usize) -> &[f64] {
        &self.q[s * NUM_ACTIONS..(s + 1) * NUM_ACTIONS]
    }

    fn state_value(&self, s: usize) -> f64 {
        if self.terminal[s] {
            return 0.0;
        }
        self.q_row(s).iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Whether `a` is in the exact argmax set of the row at `s`.
    pub fn is_greedy(&self, s: usize, a: usize) -> bool {
        let row = self.q_row(s);
        let best = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        row[a] == best
    }

    pub fn reset_traces(&mut self) {
        for &i in &self.active {
            self.traces[i] = 0.0;
        }
        self.active.clear();
    }

    /// One Watkins update: the one-step TD error is applied through the
    /// accumulated traces, then the traces decay by `gamma * lambda` if the
    /// action taken was greedy and are wiped otherwise.
    #[allow(clippy::too_many_arguments)]
    pub fn step(
        &mut self,
        s: usize,
        a: usize,
        reward: f64,
        s2: usize,
        terminal_next: bool,
        alpha: f64,
        gamma: f64,
        lambda: f64,
        action_was_greedy: bool,
    ) {
        let sa = s * NUM_ACTIONS + a;
        let next_value = if terminal_next { 0.0 } else { self.state_value(s2) };
        let delta = reward + gamma * next_value - self.q[sa];
        if self.traces[sa] == 0.0 {
            self.active.push(sa);
        }
        self.traces[sa] += 1.0;
        for &i in &self.active {
            self.q[i] += alpha * delta * self.traces[i];
        }
        if action_was_greedy {
            let decay = gamma * lambda;
            let traces = &mut self.traces;
            self.active.retain(|&i| {
                traces[i] *= decay;
                if traces[i] < 1e-12 {
                    traces[i] = 0.0;
                    false
                } else {
                    true
                }
            });
        } else {
            self.reset_traces();
        }
        self.visits[sa] += 1;
    }
}

/// First-visit discounted-return statistics per (state, action).
struct ReturnStats {
    count: Vec<u64>,
    mean: Vec<f64>,
}

impl ReturnStats {
    fn new(num_states: usize) -> Self {
        let pairs = num_states * NUM_ACTIONS;
        ReturnStats {
            count: vec![0; pairs],
            mean: vec![0.0; pairs],
        }
    }

    fn record(&mut self, sa: usize, g: f64) {
        let n = self.count[sa];
        self.mean[sa] = (self.mean[sa] * n as f64 + g) / (n + 1) as f64;
        self.count[sa] = n + 1;
    }

    /// Hoeffding interval over the return range; no data spans the whole
    /// configured range.
    fn interval(&self, sa: usize, g_lo: f64, g_hi: f64, delta_r: f64) -> ConfidenceInterval {
        let n = self.count[sa];
        if n == 0 {
            return ConfidenceInterval::spanning(g_lo, g_hi);
        }
        let radius = (g_hi - g_lo) * ((2.0 / delta_r).ln() / (2.0 * n as f64)).sqrt();
        ConfidenceInterval::spanning(self.mean[sa] - radius, self.mean[sa] + radius)
    }
}

pub struct QsLambdaAgent {
    maze: GridMaze,
    mode: SensorMode,
    family: SpaceFamily,
    params: AgentParams,
    full: WatkinsLearner,
    subs: Vec<WatkinsLearner>,
    full_returns: ReturnStats,
    sub_returns: Vec<ReturnStats>,
    episodes_done: usize,
}

impl QsLambdaAgent {
    pub fn new(
        maze: GridMaze,
        mode: SensorMode,
        family: SpaceFamily,
        params: AgentParams,
    ) -> Result<Self, AgentError> {
        let learner = |def: &SubspaceDef| {
            WatkinsLearner::new(def.num_states(), terminal_states(&maze, mode, def))
        };
        let full = learner(family.full());
        let subs: Vec<WatkinsLearner> = family.subspaces().iter().map(learner).collect();
        let full_returns = ReturnStats::new(family.full().num_states());
        let sub_returns = family
            .subspaces()
            .iter()
            .map(|d| ReturnStats::new(d.num_states()))
            .collect();
        Ok(QsLambdaAgent {
            maze,
            mode,
            family,
            params,
            full,
            subs,
            full_returns,
            sub_returns,
            episodes_done: 0,
        })
    }

    pub fn family(&self) -> &SpaceFamily {
        &self.family
    }

    pub fn full_learner(&self) -> &WatkinsLearner {
        &self.full
    }

    pub fn space_labels(&self) -> Vec<String> {
        if self.subs.is_empty() {
            return Vec::new();
        }
        let mut labels: Vec<String> = self
            .family
            .subspaces()
            .iter()
            .map(|d| d.name().to_string())
            .collect();
        labels.push("full".to_string());
        labels
    }

    /// The return interval every discounted episode return must fall in,
    /// derived from the reward supports and the step cap.
    pub fn return_bounds(&self, max_steps: usize) -> (f64, f64) {
        let (r_min, r_max) = self.maze.rewards().global_bounds();
        let gamma = self.params.gamma;
        let factor = if gamma < 1.0 {
            (1.0 - gamma.powi(max_steps as i32)) / (1.0 - gamma)
        } else {
            max_steps as f64
        };
        let lo = if r_min < 0.0 { r_min * factor } else { r_min };
        let hi = if r_max > 0.0 { r_max * factor } else { r_max };
        (lo, hi)
    }

    /// Mean first-visit return recorded for a full-space pair, with its
    /// sample count.
    pub fn full_return_stat(&self, s: usize, a: usize) -> (u64, f64) {
        let sa = s * NUM_ACTIONS + a;
        (self.full_returns.count[sa], self.full_returns.mean[sa])
    }

    fn degrees_at(
        &self,
        full_state: usize,
        sub_states: &[usize],
        g_lo: f64,
        g_hi: f64,
    ) -> Vec<Vec<ConfidenceDegree>> {
        let mut cds = Vec::with_capacity(self.subs.len());
        for (x, learner) in self.subs.iter().enumerate() {
            let u = sub_states[x];
            let mut row = Vec::with_capacity(NUM_ACTIONS);
            for a in 0..NUM_ACTIONS {
                let ja = full_state * NUM_ACTIONS + a;
                let ua = u * NUM_ACTIONS + a;
                let ci_full = self
                    .full_returns
                    .interval(ja, g_lo, g_hi, self.params.delta_r);
                let ci_sub = self.sub_returns[x].interval(ua, g_lo, g_hi, self.params.delta_r);
                row.push(confidence_degree_with(
                    self.params.cdm,
                    self.full.q[ja],
                    learner.q[ua],
                    ci_full,
                    ci_sub,
                ));
            }
            cds.push(row);
        }
        cds
    }

    pub fn run_episode<R: Rng + ?Sized>(
        &mut self,
        rng: &mut R,
        max_steps: usize,
    ) -> Result<EpisodeLog, AgentError> {
        let episode = self.episodes_done + 1;
        let (g_lo, g_hi) = self.return_bounds(max_steps);
        let gamma = self.params.gamma;
        let lambda = self.params.lambda;
        let has_cdm = !self.subs.is_empty();

        self.full.reset_traces();
        for l in &mut self.subs {
            l.reset_traces();
        }

        let num_spaces = self.subs.len() + 1;
        let mut weight_sums = vec![0.0; num_spaces];
        let mut steps = Vec::new();
        // per step: full index, each subspace index, action, reward
        let mut trajectory: Vec<(usize, Vec<usize>, usize, f64)> = Vec::new();
        let mut return_sum = 0.0;
        let mut reached_goal = false;

        let mut state = self.maze.reset(rng)?;
        let mut sub_states = vec![0usize; self.subs.len()];
        for _ in 0..max_steps {
            let obs = self.maze.observe(state, self.mode);
            let j = self.family.full().project(obs.as_slice())?;
            for (x, def) in self.family.subspaces().iter().enumerate() {
                sub_states[x] = def.project(obs.as_slice())?;
            }

            let full_probs = epsilon_greedy_probs(self.full.q_row(j), self.params.epsilon)?;
            let probs = if has_cdm {
                let cds = self.degrees_at(j, &sub_states, g_lo, g_hi);
                let sub_probs: Vec<Vec<f64>> = self
                    .subs
                    .iter()
                    .zip(&sub_states)
                    .map(|(l, &u)| epsilon_greedy_probs(l.q_row(u), self.params.epsilon))
                    .collect::<Result<_, _>>()?;
                for (w, acc) in decision_weights(&cds, NUM_ACTIONS)
                    .iter()
                    .zip(&mut weight_sums)
                {
                    *acc += w;
                }
                fuse(&full_probs, &sub_probs, &cds)?
            } else {
                full_probs
            };

            let a = sample_action(&probs, rng);
            let greedy_full = self.full.is_greedy(j, a);
            let greedy_subs: Vec<bool> = self
                .subs
                .iter()
                .zip(&sub_states)
                .map(|(l, &u)| l.is_greedy(u, a))
                .collect();

            let out = self
                .maze
                .step(state, Action::from_index(a).expect("action in range"), rng)?;
            let next_obs = self.maze.observe(out.next, self.mode);
            let j2 = self.family.full().project(next_obs.as_slice())?;

            let alpha_full = self.params.alpha.value(self.full.visit_count(j, a), episode);
            self.full.step(
                j,
                a,
                out.reward,
                j2,
                out.done,
                alpha_full,
                gamma,
                lambda,
                greedy_full,
            );
            for (x, def) in self.family.subspaces().iter().enumerate() {
                let u = sub_states[x];
                let u2 = def.project(next_obs.as_slice())?;
                let alpha = self
                    .params
                    .alpha
                    .value(self.subs[x].visit_count(u, a), episode);
                self.subs[x].step(
                    u,
                    a,
                    out.reward,
                    u2,
                    out.done,
                    alpha,
                    gamma,
                    lambda,
                    greedy_subs[x],
                );
            }

            steps.push(StepRecord {
                state: j,
                action: a,
                reward: out.reward,
            });
            trajectory.push((j, sub_states.clone(), a, out.reward));
            return_sum += out.reward;
            if out.done {
                reached_goal = true;
                break;
            }
            state = out.next;
        }

        if has_cdm {
            self.record_first_visit_returns(&trajectory, gamma);
        }
        self.episodes_done = episode;

        let mean_weights = if has_cdm {
            let n = steps.len().max(1) as f64;
            weight_sums.iter().map(|w| w / n).collect()
        } else {
            Vec::new()
        };
        let truncated = !reached_goal;
        Ok(EpisodeLog {
            steps,
            return_sum,
            reached_goal,
            truncated,
            mean_weights,
        })
    }

    /// Accumulates the first-visit discounted return of every pair touched
    /// this episode, per space.
    fn record_first_visit_returns(
        &mut self,
        trajectory: &[(usize, Vec<usize>, usize, f64)],
        gamma: f64,
    ) {
        let mut returns = vec![0.0; trajectory.len()];
        let mut g = 0.0;
        for (t, &(_, _, _, r)) in trajectory.iter().enumerate().rev() {
            g = r + gamma * g;
            returns[t] = g;
        }
        let mut seen_full = std::collections::HashSet::new();
        let mut seen_subs: Vec<std::collections::HashSet<usize>> =
            vec![std::collections::HashSet::new(); self.subs.len()];
        for (t, (j, subs, a, _)) in trajectory.iter().enumerate() {
            let ja = j * NUM_ACTIONS + a;
            if seen_full.insert(ja) {
                self.full_returns.record(ja, returns[t]);
            }
            for (x, &u) in subs.iter().enumerate() {
                let ua = u * NUM_ACTIONS + a;
                if seen_subs[x].insert(ua) {
                    self.sub_returns[x].record(ua, returns[t]);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const ROOM: &str = "\
######
#....#
#....#
#...G#
######";

    fn agent(family_subs: bool, params: AgentParams) -> QsLambdaAgent {
        let maze = GridMaze::load(ROOM).unwrap();
        let features = maze.feature_space(SensorMode::TwoSensor);
        let family = if family_subs {
            SpaceFamily::singletons(features)
        } else {
            SpaceFamily::full_only(features)
        };
        QsLambdaAgent::new(maze, SensorMode::TwoSensor, family, params).unwrap()
    }

    #[test]
    fn lambda_zero_is_one_step_q_learning() {
        // two learners fed the same transition: with lambda = 0 the update
        // must touch exactly the visited pair by alpha * delta
        let mut l = WatkinsLearner::new(3, vec![false, false, true]);
        l.q[0 * NUM_ACTIONS + 1] = 0.5;
        l.q[1 * NUM_ACTIONS + 2] = 2.0;
        let before = l.q.clone();
        l.step(0, 1, -1.0, 1, false, 0.5, 0.9, 0.0, true);
        let delta = -1.0 + 0.9 * 2.0 - 0.5;
        assert!((l.q[1] - (before[1] + 0.5 * delta)).abs() < 1e-12);
        for i in 0..l.q.len() {
            if i != 1 {
                assert_eq!(l.q[i], before[i]);
            }
        }
        assert!(l.active.is_empty());
    }

    #[test]
    fn exploratory_actions_wipe_all_traces() {
        let mut l = WatkinsLearner::new(3, vec![false; 3]);
        l.step(0, 0, 1.0, 1, false, 0.1, 0.9, 0.9, true);
        assert!(!l.active.is_empty());
        // make action 0 non-greedy at state 1 before stepping with it
        l.q[1 * NUM_ACTIONS + 2] = 10.0;
        l.step(1, 0, 0.0, 2, false, 0.1, 0.9, 0.9, false);
        assert!(l.active.is_empty());
        assert!(l.traces.iter().all(|&e| e == 0.0));
    }

    #[test]
    fn greedy_episode_with_unit_rates_recovers_discounted_returns() {
        // deterministic 3-state chain, single action, alpha = 1, lambda = 1
        let mut l = WatkinsLearner::new(3, vec![false, false, true]);
        let gamma = 0.9;
        let (r0, r1) = (2.0, -1.0);
        // one action per state means every action is greedy
        l.step(0, 0, r0, 1, false, 1.0, gamma, 1.0, true);
        l.step(1, 0, r1, 2, true, 1.0, gamma, 1.0, true);
        assert!((l.q[1 * NUM_ACTIONS] - r1).abs() < 1e-12);
        assert!((l.q[0] - (r0 + gamma * r1)).abs() < 1e-12);
    }

    #[test]
    fn no_data_interval_spans_the_configured_return_range() {
        let params = AgentParams::default();
        let a = agent(true, params);
        let (g_lo, g_hi) = a.return_bounds(2000);
        let ci = a.full_returns.interval(0, g_lo, g_hi, params.delta_r);
        assert_eq!(ci.lo(), g_lo);
        assert_eq!(ci.hi(), g_hi);
        // gamma = 0.9 over an effectively infinite horizon: 10x the extremes
        assert!((g_lo - -120.0).abs() < 1e-6);
        assert!((g_hi - 115.0).abs() < 1e-6);
    }

    #[test]
    fn recorded_returns_stay_inside_the_bounds() {
        let mut a = agent(true, AgentParams::default());
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let max_steps = 300;
        for _ in 0..25 {
            a.run_episode(&mut rng, max_steps).unwrap();
        }
        let (g_lo, g_hi) = a.return_bounds(max_steps);
        for sa in 0..a.full_returns.mean.len() {
            if a.full_returns.count[sa] > 0 {
                let m = a.full_returns.mean[sa];
                assert!(m >= g_lo && m <= g_hi, "return mean {m} outside bounds");
            }
        }
    }

    #[test]
    fn empty_family_is_plain_q_lambda_and_logs_no_weights() {
        let mut a = agent(false, AgentParams::default());
        let mut b = agent(false, AgentParams::default());
        let mut rng_a = ChaCha8Rng::seed_from_u64(4);
        let mut rng_b = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..5 {
            let la = a.run_episode(&mut rng_a, 200).unwrap();
            let lb = b.run_episode(&mut rng_b, 200).unwrap();
            assert_eq!(la.steps, lb.steps);
            assert!(la.mean_weights.is_empty());
        }
        assert_eq!(a.full.q, b.full.q);
    }

    #[test]
    fn subspace_variant_is_reproducible_and_learns() {
        let mut a = agent(true, AgentParams::default());
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let mut first_returns = Vec::new();
        let mut last_returns = Vec::new();
        for ep in 0..60 {
            let log = a.run_episode(&mut rng, 300).unwrap();
            if ep < 10 {
                first_returns.push(log.return_sum);
            }
            if ep >= 50 {
                last_returns.push(log.return_sum);
            }
        }
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        assert!(
            mean(&last_returns) > mean(&first_returns),
            "no improvement: {} vs {}",
            mean(&last_returns),
            mean(&first_returns)
        );
    }
}
