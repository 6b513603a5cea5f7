//! 2D maze environments: fixed wall layouts, slip dynamics, truncated-mixture
//! rewards, optional infrared wall sensors, and an exact-model extractor for
//! oracle tests.
//!
//! Conventions, fixed once for the whole crate: `x` grows rightward and `y`
//! grows upward, both 1-based; map text files list rows top-first. Action
//! order is up, down, right, left. IR sensor order is up, right, down, left.

use crate::spaces::{FeatureDef, FeatureSpace, SubspaceDef};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use statrs::function::erf::erf;
use std::f64::consts::{PI, SQRT_2};
use thiserror::Error;

pub const NUM_ACTIONS: usize = 4;

#[derive(Debug, Error, PartialEq)]
pub enum MazeError {
    #[error("map is not rectangular (line {line} differs in width)")]
    NonRectangular { line: usize },
    #[error("unknown character `{ch}` at line {line}, column {col}")]
    UnknownChar { ch: char, line: usize, col: usize },
    #[error("map has no goal cell")]
    NoGoal,
    #[error("map has more than one goal cell")]
    MultipleGoals,
    #[error("map border must consist entirely of walls")]
    Unbordered,
    #[error("map must be at least 3x3")]
    TooSmall,
    #[error("maze has no free non-goal cell to start from")]
    NoFreeCell,
    #[error("state ({x}, {y}) is not a free non-goal cell")]
    InvalidState { x: u16, y: u16 },
    #[error("invalid reward specification: {0}")]
    BadRewardSpec(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Action {
    Up = 0,
    Down = 1,
    Right = 2,
    Left = 3,
}

impl Action {
    pub const ALL: [Action; NUM_ACTIONS] = [Action::Up, Action::Down, Action::Right, Action::Left];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Action> {
        Action::ALL.get(i).copied()
    }

    fn delta(self) -> (i32, i32) {
        match self {
            Action::Up => (0, 1),
            Action::Down => (0, -1),
            Action::Right => (1, 0),
            Action::Left => (-1, 0),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Action::Up => "up",
            Action::Down => "down",
            Action::Right => "right",
            Action::Left => "left",
        }
    }
}

/// One Gaussian component of a reward mixture.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixtureComponent {
    pub weight: f64,
    pub mean: f64,
    pub stddev: f64,
}

/// A mixture of Gaussians truncated to a closed interval. Every sample drawn
/// from the spec lies inside `[lo, hi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardSpec {
    components: Vec<MixtureComponent>,
    lo: f64,
    hi: f64,
}

impl RewardSpec {
    /// Minimum mixture mass the truncation interval must retain; rejection
    /// sampling on anything thinner would be impractically slow.
    pub const MIN_INTERVAL_MASS: f64 = 1e-3;

    pub fn new(components: Vec<MixtureComponent>, lo: f64, hi: f64) -> Result<Self, MazeError> {
        if components.is_empty() {
            return Err(MazeError::BadRewardSpec("no mixture components".into()));
        }
        if !matches!(lo.partial_cmp(&hi), Some(std::cmp::Ordering::Less)) {
            return Err(MazeError::BadRewardSpec(format!(
                "interval [{lo}, {hi}] is empty"
            )));
        }
        let wsum: f64 = components.iter().map(|c| c.weight).sum();
        if (wsum - 1.0).abs() > 1e-12 {
            return Err(MazeError::BadRewardSpec(format!(
                "component weights sum to {wsum}, not 1"
            )));
        }
        for c in &components {
            if c.weight < 0.0 {
                return Err(MazeError::BadRewardSpec("negative component weight".into()));
            }
            if !matches!(c.stddev.partial_cmp(&0.0), Some(std::cmp::Ordering::Greater)) {
                return Err(MazeError::BadRewardSpec(format!(
                    "component stddev {} must be > 0",
                    c.stddev
                )));
            }
        }
        let spec = Self { components, lo, hi };
        let mass = spec.interval_mass();
        if mass < Self::MIN_INTERVAL_MASS {
            return Err(MazeError::BadRewardSpec(format!(
                "mixture mass {mass:.3e} inside [{lo}, {hi}] is below {}",
                Self::MIN_INTERVAL_MASS
            )));
        }
        Ok(spec)
    }

    pub fn single(mean: f64, stddev: f64, lo: f64, hi: f64) -> Result<Self, MazeError> {
        Self::new(
            vec![MixtureComponent {
                weight: 1.0,
                mean,
                stddev,
            }],
            lo,
            hi,
        )
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn components(&self) -> &[MixtureComponent] {
        &self.components
    }

    /// Length of the truncation interval.
    pub fn interval_len(&self) -> f64 {
        self.hi - self.lo
    }

    /// Probability mass the untruncated mixture puts inside `[lo, hi]`.
    pub fn interval_mass(&self) -> f64 {
        self.components
            .iter()
            .map(|c| {
                let a = (self.lo - c.mean) / c.stddev;
                let b = (self.hi - c.mean) / c.stddev;
                c.weight * (std_normal_cdf(b) - std_normal_cdf(a))
            })
            .sum()
    }

    /// Exact mean of the mixture conditioned on the truncation interval.
    pub fn truncated_mean(&self) -> f64 {
        let mut mass = 0.0;
        let mut first_moment = 0.0;
        for c in &self.components {
            let a = (self.lo - c.mean) / c.stddev;
            let b = (self.hi - c.mean) / c.stddev;
            let m = std_normal_cdf(b) - std_normal_cdf(a);
            mass += c.weight * m;
            first_moment += c.weight * (c.mean * m + c.stddev * (std_normal_pdf(a) - std_normal_pdf(b)));
        }
        first_moment / mass
    }

    /// Draws one reward: pick a component by weight, sample its Gaussian, and
    /// reject draws outside the interval.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        for _ in 0..1_000_000 {
            let mut u: f64 = rng.gen();
            let mut chosen = &self.components[self.components.len() - 1];
            for c in &self.components {
                if u < c.weight {
                    chosen = c;
                    break;
                }
                u -= c.weight;
            }
            let normal = Normal::new(chosen.mean, chosen.stddev).expect("validated stddev");
            let r = normal.sample(rng);
            if r >= self.lo && r <= self.hi {
                debug_assert!(r >= self.lo && r <= self.hi);
                return r;
            }
        }
        unreachable!("rejection sampling failed; spec validation bounds the reject rate")
    }
}

fn std_normal_cdf(z: f64) -> f64 {
    0.5 * (1.0 + erf(z / SQRT_2))
}

fn std_normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

/// Which reward law a step outcome draws from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RewardKind {
    Collision,
    Goal,
    Step,
}

/// The three reward laws of a maze.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardTable {
    pub collision: RewardSpec,
    pub goal: RewardSpec,
    pub step: RewardSpec,
}

impl RewardTable {
    /// Collision in [-12, -10], goal in [9.5, 11.5], step in [-2, 0].
    pub fn standard() -> Self {
        let third = 1.0 / 3.0;
        RewardTable {
            collision: RewardSpec::new(
                vec![
                    MixtureComponent {
                        weight: third,
                        mean: -11.5,
                        stddev: 0.2,
                    },
                    MixtureComponent {
                        weight: 1.0 - third,
                        mean: -10.5,
                        stddev: 0.3,
                    },
                ],
                -12.0,
                -10.0,
            )
            .expect("standard collision spec"),
            goal: RewardSpec::single(10.0, 0.02, 9.5, 11.5).expect("standard goal spec"),
            step: RewardSpec::new(
                vec![
                    MixtureComponent {
                        weight: third,
                        mean: -1.5,
                        stddev: 0.2,
                    },
                    MixtureComponent {
                        weight: 1.0 - third,
                        mean: -0.5,
                        stddev: 0.3,
                    },
                ],
                -2.0,
                0.0,
            )
            .expect("standard step spec"),
        }
    }

    pub fn spec(&self, kind: RewardKind) -> &RewardSpec {
        match kind {
            RewardKind::Collision => &self.collision,
            RewardKind::Goal => &self.goal,
            RewardKind::Step => &self.step,
        }
    }

    /// Extreme support bounds over all three laws.
    pub fn global_bounds(&self) -> (f64, f64) {
        let lo = self
            .collision
            .lo()
            .min(self.goal.lo())
            .min(self.step.lo());
        let hi = self
            .collision
            .hi()
            .max(self.goal.hi())
            .max(self.step.hi());
        (lo, hi)
    }
}

/// A grid position, 1-based from the bottom-left corner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Cell {
    pub x: u16,
    pub y: u16,
}

impl Cell {
    pub fn new(x: u16, y: u16) -> Self {
        Cell { x, y }
    }
}

/// State = the agent's current cell.
pub type State = Cell;

/// How many features the agent observes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SensorMode {
    /// (x, y)
    TwoSensor,
    /// (x, y, IR-up, IR-right, IR-down, IR-left)
    SixSensor,
}

impl SensorMode {
    pub fn num_features(self) -> usize {
        match self {
            SensorMode::TwoSensor => 2,
            SensorMode::SixSensor => 6,
        }
    }
}

/// A full-space observation: the ordered feature tuple for a cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Observation {
    values: [u16; 6],
    len: u8,
}

impl Observation {
    pub fn as_slice(&self) -> &[u16] {
        &self.values[..self.len as usize]
    }

    pub fn x(&self) -> u16 {
        self.values[0]
    }

    pub fn y(&self) -> u16 {
        self.values[1]
    }
}

/// Result of one environment step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub next: State,
    pub reward: f64,
    pub done: bool,
    /// Length of the truncation interval the reward was drawn from. This is
    /// the one piece of privileged knowledge the environment hands the agent.
    pub len_r: f64,
}

/// An immutable maze: wall grid, one goal cell, slip probability, and the
/// reward laws. Shareable across threads once built.
#[derive(Debug, Clone)]
pub struct GridMaze {
    width: u16,
    height: u16,
    walls: Vec<bool>,
    goal: Cell,
    slip_prob: f64,
    rewards: RewardTable,
}

impl GridMaze {
    /// Parses a map document: `#` wall, `.` free, `G` goal; rectangular,
    /// fully `#`-bordered, exactly one goal. Rows are listed top-first, so the
    /// last text row is y = 1.
    pub fn load(text: &str) -> Result<Self, MazeError> {
        let rows: Vec<&str> = text.lines().filter(|l| !l.trim().is_empty()).collect();
        let height = rows.len();
        if height < 3 {
            return Err(MazeError::TooSmall);
        }
        let width = rows[0].chars().count();
        if width < 3 {
            return Err(MazeError::TooSmall);
        }
        let mut walls = vec![false; width * height];
        let mut goal = None;
        for (row_i, row) in rows.iter().enumerate() {
            if row.chars().count() != width {
                return Err(MazeError::NonRectangular { line: row_i + 1 });
            }
            let y = (height - row_i) as u16;
            for (col_i, ch) in row.chars().enumerate() {
                let x = (col_i + 1) as u16;
                match ch {
                    '#' => walls[cell_index(x, y, width as u16)] = true,
                    '.' => {}
                    'G' => {
                        if goal.replace(Cell::new(x, y)).is_some() {
                            return Err(MazeError::MultipleGoals);
                        }
                    }
                    other => {
                        return Err(MazeError::UnknownChar {
                            ch: other,
                            line: row_i + 1,
                            col: col_i + 1,
                        })
                    }
                }
            }
        }
        let goal = goal.ok_or(MazeError::NoGoal)?;
        let maze = GridMaze {
            width: width as u16,
            height: height as u16,
            walls,
            goal,
            slip_prob: 0.1,
            rewards: RewardTable::standard(),
        };
        for x in 1..=maze.width {
            if !maze.is_wall(Cell::new(x, 1)) || !maze.is_wall(Cell::new(x, maze.height)) {
                return Err(MazeError::Unbordered);
            }
        }
        for y in 1..=maze.height {
            if !maze.is_wall(Cell::new(1, y)) || !maze.is_wall(Cell::new(maze.width, y)) {
                return Err(MazeError::Unbordered);
            }
        }
        Ok(maze)
    }

    pub fn with_slip_prob(mut self, slip_prob: f64) -> Self {
        assert!((0.0..=1.0).contains(&slip_prob));
        self.slip_prob = slip_prob;
        self
    }

    pub fn with_rewards(mut self, rewards: RewardTable) -> Self {
        self.rewards = rewards;
        self
    }

    pub fn width(&self) -> u16 {
        self.width
    }

    pub fn height(&self) -> u16 {
        self.height
    }

    pub fn goal(&self) -> Cell {
        self.goal
    }

    pub fn slip_prob(&self) -> f64 {
        self.slip_prob
    }

    pub fn rewards(&self) -> &RewardTable {
        &self.rewards
    }

    pub fn is_wall(&self, cell: Cell) -> bool {
        debug_assert!(cell.x >= 1 && cell.x <= self.width && cell.y >= 1 && cell.y <= self.height);
        self.walls[cell_index(cell.x, cell.y, self.width)]
    }

    pub fn is_free(&self, cell: Cell) -> bool {
        !self.is_wall(cell)
    }

    /// Free cells excluding the goal, in row-major order (used as the reset
    /// candidate set).
    pub fn free_non_goal_cells(&self) -> Vec<Cell> {
        let mut out = Vec::new();
        for y in 1..=self.height {
            for x in 1..=self.width {
                let c = Cell::new(x, y);
                if self.is_free(c) && c != self.goal {
                    out.push(c);
                }
            }
        }
        out
    }

    /// Draws a start state uniformly over the free non-goal cells.
    pub fn reset<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<State, MazeError> {
        let candidates = self.free_non_goal_cells();
        if candidates.is_empty() {
            return Err(MazeError::NoFreeCell);
        }
        Ok(candidates[rng.gen_range(0..candidates.len())])
    }

    /// Advances one step: with probability `1 - slip_prob` the intended
    /// direction is taken, otherwise a uniformly random one. A wall target
    /// leaves the position unchanged and draws the collision reward; the goal
    /// ends the episode with the goal reward; any other move draws the step
    /// reward.
    pub fn step<R: Rng + ?Sized>(
        &self,
        state: State,
        action: Action,
        rng: &mut R,
    ) -> Result<StepOutcome, MazeError> {
        if self.is_wall(state) || state == self.goal {
            return Err(MazeError::InvalidState {
                x: state.x,
                y: state.y,
            });
        }
        let direction = if rng.gen::<f64>() < self.slip_prob {
            Action::ALL[rng.gen_range(0..NUM_ACTIONS)]
        } else {
            action
        };
        let target = self.neighbor(state, direction);
        let (next, kind, done) = if self.is_wall(target) {
            (state, RewardKind::Collision, false)
        } else if target == self.goal {
            (target, RewardKind::Goal, true)
        } else {
            (target, RewardKind::Step, false)
        };
        let spec = self.rewards.spec(kind);
        let reward = spec.sample(rng);
        Ok(StepOutcome {
            next,
            reward,
            done,
            len_r: spec.interval_len(),
        })
    }

    /// Adjacent cell in the given direction. The border is all walls, so this
    /// never leaves the grid for a free `state`.
    fn neighbor(&self, state: Cell, direction: Action) -> Cell {
        let (dx, dy) = direction.delta();
        Cell::new(
            (state.x as i32 + dx) as u16,
            (state.y as i32 + dy) as u16,
        )
    }

    /// IR readings at a free cell, in order (up, right, down, left); a bit is
    /// 1 iff the adjacent cell in that direction is a wall.
    pub fn ir_sensors(&self, state: Cell) -> [u16; 4] {
        let probe = |a: Action| u16::from(self.is_wall(self.neighbor(state, a)));
        [
            probe(Action::Up),
            probe(Action::Right),
            probe(Action::Down),
            probe(Action::Left),
        ]
    }

    /// The feature tuple the agent sees at `state`.
    pub fn observe(&self, state: Cell, mode: SensorMode) -> Observation {
        let mut values = [0u16; 6];
        values[0] = state.x;
        values[1] = state.y;
        match mode {
            SensorMode::TwoSensor => Observation { values, len: 2 },
            SensorMode::SixSensor => {
                let ir = self.ir_sensors(state);
                values[2..6].copy_from_slice(&ir);
                Observation { values, len: 6 }
            }
        }
    }

    /// Declares the feature set for this maze under the given sensor mode.
    pub fn feature_space(&self, mode: SensorMode) -> FeatureSpace {
        let mut features = vec![
            FeatureDef::new("x", 1, self.width),
            FeatureDef::new("y", 1, self.height),
        ];
        if mode == SensorMode::SixSensor {
            for name in ["ir_up", "ir_right", "ir_down", "ir_left"] {
                features.push(FeatureDef::new(name, 0, 1));
            }
        }
        FeatureSpace::new(features)
    }
}

fn cell_index(x: u16, y: u16, width: u16) -> usize {
    (y as usize - 1) * width as usize + (x as usize - 1)
}

/// Per-state candidate successor sets for a space: the projections of
/// {cell itself, adjacent free cells} over every free cell mapping to each
/// space state. Stepping onto the goal ends the episode, so the goal
/// contributes [`TERMINAL_SUCCESSOR`](crate::model::TERMINAL_SUCCESSOR)
/// rather than its own projection, and is never a source. This is the prior
/// structural knowledge handed to learners.
pub fn candidate_successors(
    maze: &GridMaze,
    mode: SensorMode,
    def: &SubspaceDef,
) -> Vec<Vec<u32>> {
    let mut out: Vec<Vec<u32>> = vec![Vec::new(); def.num_states()];
    for y in 1..=maze.height() {
        for x in 1..=maze.width() {
            let cell = Cell::new(x, y);
            if maze.is_wall(cell) || cell == maze.goal() {
                continue;
            }
            let u = def
                .project(maze.observe(cell, mode).as_slice())
                .expect("observation within declared ranges");
            let mut push = |v: u32| {
                if !out[u].contains(&v) {
                    out[u].push(v);
                }
            };
            push(def
                .project(maze.observe(cell, mode).as_slice())
                .expect("observation within declared ranges") as u32);
            for a in Action::ALL {
                let (dx, dy) = a.delta();
                let n = Cell::new((x as i32 + dx) as u16, (y as i32 + dy) as u16);
                if maze.is_wall(n) {
                    continue;
                }
                if n == maze.goal() {
                    push(crate::model::TERMINAL_SUCCESSOR);
                } else {
                    push(def
                        .project(maze.observe(n, mode).as_slice())
                        .expect("observation within declared ranges")
                        as u32);
                }
            }
        }
    }
    for set in &mut out {
        set.sort_unstable();
    }
    out
}

/// Which space states correspond to at least one free cell.
pub fn valid_states(maze: &GridMaze, mode: SensorMode, def: &SubspaceDef) -> Vec<bool> {
    let mut valid = vec![false; def.num_states()];
    for y in 1..=maze.height() {
        for x in 1..=maze.width() {
            let cell = Cell::new(x, y);
            if maze.is_free(cell) {
                let u = def
                    .project(maze.observe(cell, mode).as_slice())
                    .expect("observation within declared ranges");
                valid[u] = true;
            }
        }
    }
    valid
}

/// Which space states are terminal: every free cell projecting onto the state
/// is the goal. In the full-space this is exactly the goal's index; in an
/// aliased subspace a state is terminal only if the goal is its sole preimage.
pub fn terminal_states(maze: &GridMaze, mode: SensorMode, def: &SubspaceDef) -> Vec<bool> {
    let mut has_goal = vec![false; def.num_states()];
    let mut has_other = vec![false; def.num_states()];
    for y in 1..=maze.height() {
        for x in 1..=maze.width() {
            let cell = Cell::new(x, y);
            if maze.is_free(cell) {
                let u = def
                    .project(maze.observe(cell, mode).as_slice())
                    .expect("observation within declared ranges");
                if cell == maze.goal() {
                    has_goal[u] = true;
                } else {
                    has_other[u] = true;
                }
            }
        }
    }
    has_goal
        .iter()
        .zip(&has_other)
        .map(|(&g, &o)| g && !o)
        .collect()
}

/// The exact MDP induced by a maze under a sensor mode: true transition
/// probabilities from the slip dynamics and exact expected rewards from the
/// truncated-mixture means. State indices match the full-space indexer, so
/// learned tables can be compared entry by entry.
#[derive(Debug, Clone)]
pub struct ExactMdp {
    pub num_states: usize,
    pub num_actions: usize,
    /// Per (s, a): sorted `(successor, probability)` pairs.
    pub transitions: Vec<Vec<(u32, f64)>>,
    /// Per (s, a): expected immediate reward.
    pub expected_reward: Vec<f64>,
    pub valid: Vec<bool>,
    pub terminal: Vec<bool>,
}

impl ExactMdp {
    /// Optimal Q-values by value iteration to the given tolerance. Terminal
    /// states are absorbing with value 0.
    pub fn optimal_q(&self, gamma: f64, tol: f64) -> Vec<f64> {
        let a_n = self.num_actions;
        let mut q = vec![0.0; self.num_states * a_n];
        for _ in 0..1_000_000 {
            let mut max_change = 0.0f64;
            for s in 0..self.num_states {
                if !self.valid[s] || self.terminal[s] {
                    continue;
                }
                for a in 0..a_n {
                    let sa = s * a_n + a;
                    let mut v = self.expected_reward[sa];
                    for &(s2, p) in &self.transitions[sa] {
                        let s2 = s2 as usize;
                        if !self.terminal[s2] {
                            let best = (0..a_n)
                                .map(|a2| q[s2 * a_n + a2])
                                .fold(f64::NEG_INFINITY, f64::max);
                            v += p * gamma * best;
                        }
                    }
                    max_change = max_change.max((v - q[sa]).abs());
                    q[sa] = v;
                }
            }
            if max_change <= tol {
                return q;
            }
        }
        unreachable!("value iteration failed to converge within the sweep cap")
    }

    /// Actions within `tie_tol` of the best Q-value at `s`.
    pub fn greedy_actions(&self, q: &[f64], s: usize, tie_tol: f64) -> Vec<usize> {
        let a_n = self.num_actions;
        let best = (0..a_n)
            .map(|a| q[s * a_n + a])
            .fold(f64::NEG_INFINITY, f64::max);
        (0..a_n)
            .filter(|&a| q[s * a_n + a] >= best - tie_tol)
            .collect()
    }
}

/// Extracts the exact MDP of a maze.
pub fn true_model(maze: &GridMaze, mode: SensorMode) -> ExactMdp {
    let features = maze.feature_space(mode);
    let all: Vec<usize> = (0..features.len()).collect();
    let full = SubspaceDef::new(&features, all).expect("full-space definition");
    let num_states = full.num_states();
    let valid = valid_states(maze, mode, &full);
    let terminal = terminal_states(maze, mode, &full);

    let mut transitions = vec![Vec::new(); num_states * NUM_ACTIONS];
    let mut expected_reward = vec![0.0; num_states * NUM_ACTIONS];
    let slip = maze.slip_prob();

    for y in 1..=maze.height() {
        for x in 1..=maze.width() {
            let cell = Cell::new(x, y);
            if maze.is_wall(cell) {
                continue;
            }
            let s = full
                .project(maze.observe(cell, mode).as_slice())
                .expect("observation within declared ranges");
            if cell == maze.goal() {
                // absorbing, reward 0
                for a in 0..NUM_ACTIONS {
                    transitions[s * NUM_ACTIONS + a].push((s as u32, 1.0));
                }
                continue;
            }
            for action in Action::ALL {
                let sa = s * NUM_ACTIONS + action.index();
                let mut row: Vec<(u32, f64)> = Vec::with_capacity(NUM_ACTIONS + 1);
                let mut reward = 0.0;
                for direction in Action::ALL {
                    let p_dir =
                        slip / NUM_ACTIONS as f64 + if direction == action { 1.0 - slip } else { 0.0 };
                    if p_dir == 0.0 {
                        continue;
                    }
                    let (dx, dy) = direction.delta();
                    let target = Cell::new((x as i32 + dx) as u16, (y as i32 + dy) as u16);
                    let (next_cell, kind) = if maze.is_wall(target) {
                        (cell, RewardKind::Collision)
                    } else if target == maze.goal() {
                        (target, RewardKind::Goal)
                    } else {
                        (target, RewardKind::Step)
                    };
                    reward += p_dir * maze.rewards().spec(kind).truncated_mean();
                    let next = full
                        .project(maze.observe(next_cell, mode).as_slice())
                        .expect("observation within declared ranges")
                        as u32;
                    match row.iter_mut().find(|(c, _)| *c == next) {
                        Some((_, p)) => *p += p_dir,
                        None => row.push((next, p_dir)),
                    }
                }
                row.sort_unstable_by_key(|&(c, _)| c);
                transitions[sa] = row;
                expected_reward[sa] = reward;
            }
        }
    }

    ExactMdp {
        num_states,
        num_actions: NUM_ACTIONS,
        transitions,
        expected_reward,
        valid,
        terminal,
    }
}
