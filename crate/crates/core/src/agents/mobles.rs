//! The confidence-degree model-based learner: per-space tabular models,
//! in-episode one-step backups with local bound refreshes, full planning
//! after every episode, and action selection that fuses the per-space
//! epsilon-greedy policies by confidence degree.
//!
//! With an empty subspace family this is exactly the plain model-based
//! baseline; with a visit threshold it becomes the thresholded variant that
//! hands control to the full-space after enough visits.

use super::{mobles_thr_gate, sample_action, AgentError, AgentParams, EpisodeLog, StepRecord};
use crate::cdm::{
    confidence_degree_with, decision_weights, epsilon_greedy_probs, fuse, ConfidenceDegree,
    ConfidenceInterval,
};
use crate::gridworld::{
    candidate_successors, terminal_states, valid_states, Action, GridMaze, SensorMode,
    NUM_ACTIONS,
};
use crate::model::{SpaceKind, TabularModel, TERMINAL_SUCCESSOR};
use crate::planner::{
    one_step_backup, optimistic_values, pessimistic_values, policy_evaluation,
    refresh_bounds_at, PlannerParams,
};
use crate::spaces::{SpaceFamily, SubspaceDef};
use rand::Rng;

pub struct MoblesAgent {
    maze: GridMaze,
    mode: SensorMode,
    family: SpaceFamily,
    params: AgentParams,
    full: TabularModel,
    subs: Vec<TabularModel>,
    episodes_done: usize,
}

fn build_model(
    maze: &GridMaze,
    mode: SensorMode,
    def: &SubspaceDef,
    kind: SpaceKind,
    prior_len_r: f64,
) -> TabularModel {
    TabularModel::new(
        def.num_states(),
        NUM_ACTIONS,
        kind,
        prior_len_r,
        candidate_successors(maze, mode, def),
        valid_states(maze, mode, def),
        terminal_states(maze, mode, def),
    )
}

/// Largest reward-interval length any single sample can carry.
fn prior_interval_len(maze: &GridMaze) -> f64 {
    let r = maze.rewards();
    r.collision
        .interval_len()
        .max(r.goal.interval_len())
        .max(r.step.interval_len())
}

impl MoblesAgent {
    pub fn new(
        maze: GridMaze,
        mode: SensorMode,
        family: SpaceFamily,
        params: AgentParams,
    ) -> Result<Self, AgentError> {
        let prior = prior_interval_len(&maze);
        let full = build_model(&maze, mode, family.full(), SpaceKind::Full, prior);
        let subs = family
            .subspaces()
            .iter()
            .map(|def| build_model(&maze, mode, def, SpaceKind::Subspace, prior))
            .collect();
        Ok(MoblesAgent {
            maze,
            mode,
            family,
            params,
            full,
            subs,
            episodes_done: 0,
        })
    }

    /// The plain model-based baseline: the same learner with no subspaces.
    pub fn mb(maze: GridMaze, mode: SensorMode, params: AgentParams) -> Result<Self, AgentError> {
        let features = maze.feature_space(mode);
        Self::new(maze, mode, SpaceFamily::full_only(features), params)
    }

    pub fn family(&self) -> &SpaceFamily {
        &self.family
    }

    pub fn full_model(&self) -> &TabularModel {
        &self.full
    }

    pub fn subspace_models(&self) -> &[TabularModel] {
        &self.subs
    }

    pub fn episodes_done(&self) -> usize {
        self.episodes_done
    }

    pub fn space_labels(&self) -> Vec<String> {
        let mut labels: Vec<String> = self
            .family
            .subspaces()
            .iter()
            .map(|d| d.name().to_string())
            .collect();
        labels.push("full".to_string());
        labels
    }

    /// Greedy action on the point-estimate Q row (lowest index wins ties).
    pub fn greedy_action(&self, full_state: usize) -> usize {
        let mut best = 0;
        for a in 1..NUM_ACTIONS {
            if self.full.q[self.full.sa(full_state, a)] > self.full.q[self.full.sa(full_state, best)]
            {
                best = a;
            }
        }
        best
    }

    fn planner_params(&self, episode: usize) -> PlannerParams {
        PlannerParams::new(
            self.params.gamma,
            PlannerParams::theta_for_episode(episode),
            self.params.delta_r,
            self.params.delta_p,
        )
    }

    /// Confidence degrees of every (subspace, action) at the current state.
    fn degrees_at(&self, full_state: usize, sub_states: &[usize]) -> Vec<Vec<ConfidenceDegree>> {
        let mut cds = Vec::with_capacity(self.subs.len());
        for (x, model) in self.subs.iter().enumerate() {
            let u = sub_states[x];
            let mut row = Vec::with_capacity(NUM_ACTIONS);
            for a in 0..NUM_ACTIONS {
                let ja = self.full.sa(full_state, a);
                let ua = model.sa(u, a);
                let ci_full = ConfidenceInterval::spanning(self.full.q_l[ja], self.full.q_u[ja]);
                let ci_sub = ConfidenceInterval::spanning(model.q_l[ua], model.q_u[ua]);
                row.push(confidence_degree_with(
                    self.params.cdm,
                    self.full.q[ja],
                    model.q[ua],
                    ci_full,
                    ci_sub,
                ));
            }
            cds.push(row);
        }
        if let Some(threshold) = self.params.visit_threshold {
            for a in 0..NUM_ACTIONS {
                if !mobles_thr_gate(self.full.visit_count(full_state, a), threshold) {
                    for row in &mut cds {
                        row[a] = ConfidenceDegree(0.0);
                    }
                }
            }
        }
        cds
    }

    pub fn run_episode<R: Rng + ?Sized>(
        &mut self,
        rng: &mut R,
        max_steps: usize,
    ) -> Result<EpisodeLog, AgentError> {
        let episode = self.episodes_done + 1;
        let pp = self.planner_params(episode);
        let num_spaces = self.subs.len() + 1;
        let mut weight_sums = vec![0.0; num_spaces];
        let mut steps = Vec::new();
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

            let cds = self.degrees_at(j, &sub_states);
            let q_row = &self.full.q[j * NUM_ACTIONS..(j + 1) * NUM_ACTIONS];
            let full_probs = epsilon_greedy_probs(q_row, self.params.epsilon)?;
            let sub_probs: Vec<Vec<f64>> = self
                .subs
                .iter()
                .zip(&sub_states)
                .map(|(m, &u)| {
                    epsilon_greedy_probs(
                        &m.q[u * NUM_ACTIONS..(u + 1) * NUM_ACTIONS],
                        self.params.epsilon,
                    )
                })
                .collect::<Result<_, _>>()?;
            let probs = fuse(&full_probs, &sub_probs, &cds)?;
            for (w, acc) in decision_weights(&cds, NUM_ACTIONS)
                .iter()
                .zip(&mut weight_sums)
            {
                *acc += w;
            }

            let a = sample_action(&probs, rng);
            let out = self
                .maze
                .step(state, Action::from_index(a).expect("action in range"), rng)?;
            let next_obs = self.maze.observe(out.next, self.mode);
            let j2 = if out.done {
                TERMINAL_SUCCESSOR
            } else {
                self.family.full().project(next_obs.as_slice())? as u32
            };

            self.full.update(j, a, j2, out.reward, out.len_r);
            one_step_backup(&mut self.full, j, a, &pp);
            refresh_bounds_at(&mut self.full, j, a, &pp)?;
            for (x, def) in self.family.subspaces().iter().enumerate() {
                let u = sub_states[x];
                let u2 = if out.done {
                    TERMINAL_SUCCESSOR
                } else {
                    def.project(next_obs.as_slice())? as u32
                };
                self.subs[x].update(u, a, u2, out.reward, out.len_r);
                one_step_backup(&mut self.subs[x], u, a, &pp);
                refresh_bounds_at(&mut self.subs[x], u, a, &pp)?;
            }
            if self.params.full_sweep_in_episode {
                self.full.q = policy_evaluation(&self.full, &pp)?;
                for m in &mut self.subs {
                    m.q = policy_evaluation(m, &pp)?;
                }
            }

            steps.push(StepRecord {
                state: j,
                action: a,
                reward: out.reward,
            });
            return_sum += out.reward;
            if out.done {
                reached_goal = true;
                break;
            }
            state = out.next;
        }

        // planning pass over every space
        self.full.q = policy_evaluation(&self.full, &pp)?;
        self.full.q_u = optimistic_values(&self.full, &pp)?;
        self.full.q_l = pessimistic_values(&self.full, &pp)?;
        for m in &mut self.subs {
            m.q = policy_evaluation(m, &pp)?;
            m.q_u = optimistic_values(m, &pp)?;
            m.q_l = pessimistic_values(m, &pp)?;
        }
        self.episodes_done = episode;

        let n = steps.len().max(1) as f64;
        let mut mean_weights: Vec<f64> = weight_sums.iter().map(|w| w / n).collect();
        // weights are logged as [subspaces..., full]; decision_weights already
        // uses that order
        debug_assert_eq!(mean_weights.len(), num_spaces);
        if steps.is_empty() {
            mean_weights = vec![0.0; num_spaces];
            mean_weights[num_spaces - 1] = 1.0;
        }
        let truncated = !reached_goal;
        Ok(EpisodeLog {
            steps,
            return_sum,
            reached_goal,
            truncated,
            mean_weights,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const CORRIDOR: &str = "\
########
#.....G#
########";

    const ROOM: &str = "\
#######
#.....#
#.....#
#...#.#
#.....#
#....G#
#######";

    fn agent(map: &str, params: AgentParams) -> MoblesAgent {
        let maze = GridMaze::load(map).unwrap();
        let features = maze.feature_space(SensorMode::TwoSensor);
        MoblesAgent::new(
            maze,
            SensorMode::TwoSensor,
            SpaceFamily::singletons(features),
            params,
        )
        .unwrap()
    }

    #[test]
    fn corridor_greedy_policy_matches_exact_value_iteration() {
        let mut a = agent(CORRIDOR, AgentParams::default());
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            a.run_episode(&mut rng, 500).unwrap();
        }
        let maze = GridMaze::load(CORRIDOR).unwrap();
        let mdp = crate::gridworld::true_model(&maze, SensorMode::TwoSensor);
        let q_star = mdp.optimal_q(0.9, 1e-10);
        for s in 0..mdp.num_states {
            if !mdp.valid[s] || mdp.terminal[s] {
                continue;
            }
            let greedy = a.greedy_action(s);
            let optimal = mdp.greedy_actions(&q_star, s, 1e-9);
            assert!(
                optimal.contains(&greedy),
                "state {s}: greedy {greedy}, optimal {optimal:?}"
            );
            assert_eq!(greedy, Action::Right.index());
        }
    }

    #[test]
    fn weight_vectors_sum_to_one_each_step() {
        let mut a = agent(ROOM, AgentParams::default());
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..5 {
            let log = a.run_episode(&mut rng, 300).unwrap();
            let total: f64 = log.mean_weights.iter().sum();
            assert!((total - 1.0).abs() < 1e-9, "weights sum to {total}");
        }
    }

    #[test]
    fn mb_equals_mobles_with_empty_family_trace_for_trace() {
        let maze = GridMaze::load(ROOM).unwrap();
        let features = maze.feature_space(SensorMode::TwoSensor);
        let mut mobles_empty = MoblesAgent::new(
            maze.clone(),
            SensorMode::TwoSensor,
            SpaceFamily::full_only(features),
            AgentParams::default(),
        )
        .unwrap();
        let mut mb =
            MoblesAgent::mb(maze, SensorMode::TwoSensor, AgentParams::default()).unwrap();
        let mut rng_a = ChaCha8Rng::seed_from_u64(11);
        let mut rng_b = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let la = mobles_empty.run_episode(&mut rng_a, 400).unwrap();
            let lb = mb.run_episode(&mut rng_b, 400).unwrap();
            assert_eq!(la.steps, lb.steps);
            assert_eq!(la.return_sum.to_bits(), lb.return_sum.to_bits());
        }
        assert_eq!(mobles_empty.full.q, mb.full.q);
    }

    #[test]
    fn episodes_are_bit_reproducible_under_a_fixed_seed() {
        let run = || {
            let mut a = agent(ROOM, AgentParams::default());
            let mut rng = ChaCha8Rng::seed_from_u64(21);
            let mut logs = Vec::new();
            for _ in 0..4 {
                logs.push(a.run_episode(&mut rng, 300).unwrap());
            }
            (logs, a.full.q.clone(), a.subs[0].q_u.clone())
        };
        let (logs_a, q_a, qu_a) = run();
        let (logs_b, q_b, qu_b) = run();
        assert_eq!(logs_a, logs_b);
        assert_eq!(
            q_a.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            q_b.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
        assert_eq!(
            qu_a.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            qu_b.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
    }

    #[test]
    fn threshold_variant_shifts_weight_to_the_full_space() {
        let run = |threshold: Option<u64>| {
            let mut params = AgentParams::default();
            params.visit_threshold = threshold;
            let mut a = agent(ROOM, params);
            let mut rng = ChaCha8Rng::seed_from_u64(5);
            let mut full_weight = 0.0;
            for _ in 0..30 {
                let log = a.run_episode(&mut rng, 300).unwrap();
                full_weight += *log.mean_weights.last().unwrap();
            }
            full_weight / 30.0
        };
        let plain = run(None);
        let gated = run(Some(1));
        assert!(
            gated > plain,
            "gating must shift weight to the full-space: {gated} vs {plain}"
        );
        // an unreachable threshold is plain behavior
        assert_eq!(run(Some(u64::MAX)), plain);
    }
}
