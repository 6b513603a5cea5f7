//! Per-space tabular MDP estimation: visit counts, running reward means,
//! reward-interval accumulators, and the confidence radii for rewards and
//! transitions.
//!
//! One `TabularModel` is kept per space (the full-space and each subspace).
//! A model is owned by a single run; planning reads and experience writes
//! never interleave.

use std::fmt::Write as _;

/// Successor sentinel for "the episode ended here": an absorbing outcome
/// whose value is always zero. Recording terminal transitions explicitly
/// keeps every space's estimates episodic; without it an aliased subspace
/// state containing the goal would look like a renewable reward source.
pub const TERMINAL_SUCCESSOR: u32 = u32::MAX;

/// Whether a model estimates the full-space or a subspace. The two differ in
/// how the reward radius is computed: the full-space assumes one constant
/// reward interval per state-action, while a subspace aggregates samples that
/// may come from differently-distributed full-space pairs, so it accumulates
/// the observed interval lengths sample by sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpaceKind {
    Full,
    Subspace,
}

#[derive(Debug, Clone)]
pub struct TabularModel {
    num_states: usize,
    num_actions: usize,
    kind: SpaceKind,
    /// A-priori reward-interval length, used before any sample is seen.
    prior_len_r: f64,
    /// Per (s, a): candidate successor states, sorted ascending.
    succ: Vec<Vec<u32>>,
    /// Per (s, a): transition counts aligned with `succ`.
    n_sas: Vec<Vec<u64>>,
    /// Per (s, a): total visits.
    n_sa: Vec<u64>,
    /// Per (s, a): running mean reward.
    r_hat: Vec<f64>,
    /// Per (s, a): constant reward-interval length (full-space form).
    len_r: Vec<f64>,
    /// Per (s, a): sum of squared per-sample interval lengths (subspace form).
    sum_sq_len: Vec<f64>,
    /// Point-estimate, optimistic, and pessimistic Q tables. The planner
    /// refreshes these; they start at zero.
    pub q: Vec<f64>,
    pub q_u: Vec<f64>,
    pub q_l: Vec<f64>,
    valid: Vec<bool>,
    terminal: Vec<bool>,
}

impl TabularModel {
    /// Builds a model with per-state candidate successor sets (the structural
    /// prior). `successors` is indexed by state; the same candidates apply to
    /// every action of that state.
    pub fn new(
        num_states: usize,
        num_actions: usize,
        kind: SpaceKind,
        prior_len_r: f64,
        successors: Vec<Vec<u32>>,
        valid: Vec<bool>,
        terminal: Vec<bool>,
    ) -> Self {
        assert!(num_actions > 0);
        assert_eq!(successors.len(), num_states);
        assert_eq!(valid.len(), num_states);
        assert_eq!(terminal.len(), num_states);
        assert!(prior_len_r > 0.0);
        let pairs = num_states * num_actions;
        let mut succ = Vec::with_capacity(pairs);
        let mut n_sas = Vec::with_capacity(pairs);
        for row in &successors {
            for _ in 0..num_actions {
                succ.push(row.clone());
                n_sas.push(vec![0; row.len()]);
            }
        }
        TabularModel {
            num_states,
            num_actions,
            kind,
            prior_len_r,
            succ,
            n_sas,
            n_sa: vec![0; pairs],
            r_hat: vec![0.0; pairs],
            len_r: vec![prior_len_r; pairs],
            sum_sq_len: vec![0.0; pairs],
            q: vec![0.0; pairs],
            q_u: vec![0.0; pairs],
            q_l: vec![0.0; pairs],
            valid,
            terminal,
        }
    }

    /// Model without structural knowledge: every state can reach every state.
    pub fn all_successors(
        num_states: usize,
        num_actions: usize,
        kind: SpaceKind,
        prior_len_r: f64,
    ) -> Self {
        let everything: Vec<u32> = (0..num_states as u32).collect();
        Self::new(
            num_states,
            num_actions,
            kind,
            prior_len_r,
            vec![everything; num_states],
            vec![true; num_states],
            vec![false; num_states],
        )
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn kind(&self) -> SpaceKind {
        self.kind
    }

    pub fn is_valid(&self, s: usize) -> bool {
        self.valid[s]
    }

    pub fn is_terminal(&self, s: usize) -> bool {
        self.terminal[s]
    }

    #[inline]
    pub fn sa(&self, s: usize, a: usize) -> usize {
        debug_assert!(s < self.num_states && a < self.num_actions);
        s * self.num_actions + a
    }

    pub fn visit_count(&self, s: usize, a: usize) -> u64 {
        self.n_sa[self.sa(s, a)]
    }

    pub fn transition_count(&self, s: usize, a: usize, s2: u32) -> u64 {
        let sa = self.sa(s, a);
        match self.succ[sa].binary_search(&s2) {
            Ok(k) => self.n_sas[sa][k],
            Err(_) => 0,
        }
    }

    pub fn r_hat(&self, s: usize, a: usize) -> f64 {
        self.r_hat[self.sa(s, a)]
    }

    pub fn successors(&self, s: usize, a: usize) -> &[u32] {
        &self.succ[self.sa(s, a)]
    }

    /// Records one transition. The running mean absorbs the reward, the
    /// transition count increments, and the squared interval length
    /// accumulates. An observed successor outside the candidate set extends
    /// the set with a warning.
    pub fn update(&mut self, s: usize, a: usize, s2: u32, reward: f64, len_r: f64) {
        assert!(len_r > 0.0, "reward interval length must be positive");
        let sa = self.sa(s, a);
        let k = match self.succ[sa].binary_search(&s2) {
            Ok(k) => k,
            Err(k) => {
                log::warn!(
                    "successor {s2} of ({s}, {a}) was outside the candidate set; extending"
                );
                self.succ[sa].insert(k, s2);
                self.n_sas[sa].insert(k, 0);
                k
            }
        };
        let n = self.n_sa[sa];
        self.r_hat[sa] = (self.r_hat[sa] * n as f64 + reward) / (n + 1) as f64;
        self.n_sas[sa][k] += 1;
        self.n_sa[sa] = n + 1;
        self.sum_sq_len[sa] += len_r * len_r;
        if len_r > self.len_r[sa] {
            self.len_r[sa] = len_r;
        }
    }

    /// Maximum-likelihood transition probability; uniform over the candidate
    /// set while the pair is unvisited.
    pub fn estimated_prob(&self, s: usize, a: usize, s2: u32) -> f64 {
        let sa = self.sa(s, a);
        let k = match self.succ[sa].binary_search(&s2) {
            Ok(k) => k,
            Err(_) => return 0.0,
        };
        if self.n_sa[sa] == 0 {
            1.0 / self.succ[sa].len() as f64
        } else {
            self.n_sas[sa][k] as f64 / self.n_sa[sa] as f64
        }
    }

    /// Fills `out` with the probability of each candidate successor, in the
    /// order of [`successors`](Self::successors).
    pub fn estimated_probs_into(&self, s: usize, a: usize, out: &mut Vec<f64>) {
        let sa = self.sa(s, a);
        out.clear();
        let n = self.n_sa[sa];
        if n == 0 {
            let m = self.succ[sa].len();
            out.resize(m, 1.0 / m as f64);
        } else {
            out.extend(self.n_sas[sa].iter().map(|&c| c as f64 / n as f64));
        }
    }

    pub fn estimated_probs(&self, s: usize, a: usize) -> Vec<f64> {
        let mut out = Vec::new();
        self.estimated_probs_into(s, a, &mut out);
        out
    }

    /// Hoeffding half-width for the estimated mean reward of `(s, a)` at tail
    /// mass `delta_r`. Unvisited pairs use an effective count of one with the
    /// a-priori interval length, giving the largest finite radius.
    pub fn reward_radius(&self, s: usize, a: usize, delta_r: f64) -> f64 {
        debug_assert!(delta_r > 0.0 && delta_r < 1.0);
        let sa = self.sa(s, a);
        let n = self.n_sa[sa].max(1) as f64;
        let log_term = (2.0 / delta_r).ln();
        match self.kind {
            SpaceKind::Full => {
                let len = self.len_r[sa];
                (len * len * log_term / (2.0 * n)).sqrt()
            }
            SpaceKind::Subspace => {
                let sum_sq = if self.n_sa[sa] == 0 {
                    self.prior_len_r * self.prior_len_r
                } else {
                    self.sum_sq_len[sa]
                };
                (sum_sq * log_term / (2.0 * n * n)).sqrt()
            }
        }
    }

    /// L1 confidence radius for the estimated transition vector of `(s, a)`
    /// at tail mass `delta_p`, clamped to the simplex diameter 2. A single
    /// candidate successor admits no uncertainty.
    pub fn transition_radius(&self, s: usize, a: usize, delta_p: f64) -> f64 {
        debug_assert!(delta_p > 0.0 && delta_p < 1.0);
        let sa = self.sa(s, a);
        let m = self.succ[sa].len();
        if m <= 1 {
            return 0.0;
        }
        let n = self.n_sa[sa].max(1) as f64;
        // log((2^m - 2) / delta_p), kept stable for large m
        let log_num = if m < 1024 {
            m as f64 * std::f64::consts::LN_2 + (1.0 - (2.0f64).powi(1 - m as i32)).ln()
        } else {
            m as f64 * std::f64::consts::LN_2
        };
        let radius = (2.0 * (log_num - delta_p.ln()) / n).sqrt();
        radius.min(2.0)
    }

    /// Debug dump of the transition statistics as CSV text with columns
    /// `space,s,a,s2,count,r_hat`.
    pub fn snapshot_csv(&self, space_label: &str) -> String {
        let mut out = String::from("space,s,a,s2,count,r_hat\n");
        for s in 0..self.num_states {
            for a in 0..self.num_actions {
                let sa = self.sa(s, a);
                for (k, &s2) in self.succ[sa].iter().enumerate() {
                    if self.n_sas[sa][k] > 0 {
                        let _ = writeln!(
                            out,
                            "{space_label},{s},{a},{s2},{},{}",
                            self.n_sas[sa][k], self.r_hat[sa]
                        );
                    }
                }
            }
        }
        out
    }
}
