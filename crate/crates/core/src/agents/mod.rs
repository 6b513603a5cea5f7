//! Complete learning agents sharing the episode protocol: the
//! confidence-degree model-based learner and its baselines.

mod mobles;
mod qlambda;
mod tile;

pub use mobles::MoblesAgent;
pub use qlambda::QsLambdaAgent;
pub use tile::TileCodingAgent;

use crate::cdm::{CdmError, CdmFunctions};
use crate::gridworld::{GridMaze, MazeError, SensorMode};
use crate::planner::PlannerError;
use crate::spaces::{SpaceError, SpaceFamily};
use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AgentError {
    #[error(transparent)]
    Maze(#[from] MazeError),
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Planner(#[from] PlannerError),
    #[error(transparent)]
    Cdm(#[from] CdmError),
}

/// Learning-rate schedules for the eligibility-trace learners, numbered as
/// they are configured (1 through 7).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlphaSchedule {
    /// 1 / (1 + n(s,a))
    InvVisits,
    /// sqrt(1 / (1 + n(s,a)))
    SqrtInvVisits,
    /// 1 / (1 + sqrt(n(s,a)))
    InvSqrtVisits,
    /// 1 / (1 + episode)
    InvEpisode,
    /// sqrt(1 / (1 + episode))
    SqrtInvEpisode,
    /// 1 / (1 + sqrt(episode))
    InvSqrtEpisode,
    /// 0.1
    Const,
}

impl AlphaSchedule {
    pub const ALL: [AlphaSchedule; 7] = [
        AlphaSchedule::InvVisits,
        AlphaSchedule::SqrtInvVisits,
        AlphaSchedule::InvSqrtVisits,
        AlphaSchedule::InvEpisode,
        AlphaSchedule::SqrtInvEpisode,
        AlphaSchedule::InvSqrtEpisode,
        AlphaSchedule::Const,
    ];

    pub fn from_id(id: usize) -> Option<Self> {
        (1..=Self::ALL.len()).contains(&id).then(|| Self::ALL[id - 1])
    }

    pub fn id(self) -> usize {
        Self::ALL.iter().position(|&s| s == self).unwrap() + 1
    }

    pub fn value(self, visits: u64, episode: usize) -> f64 {
        let n = visits as f64;
        let ep = episode as f64;
        match self {
            AlphaSchedule::InvVisits => 1.0 / (1.0 + n),
            AlphaSchedule::SqrtInvVisits => (1.0 / (1.0 + n)).sqrt(),
            AlphaSchedule::InvSqrtVisits => 1.0 / (1.0 + n.sqrt()),
            AlphaSchedule::InvEpisode => 1.0 / (1.0 + ep),
            AlphaSchedule::SqrtInvEpisode => (1.0 / (1.0 + ep)).sqrt(),
            AlphaSchedule::InvSqrtEpisode => 1.0 / (1.0 + ep.sqrt()),
            AlphaSchedule::Const => 0.1,
        }
    }
}

/// Step-size schedules for the tile-coding learner, numbered 1 through 5.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BetaSchedule {
    /// 1 / (1 + #subspaces)
    InvSubspaces,
    /// 1 / (1 + 10 * #subspaces)
    InvTenSubspaces,
    /// 1 / (1 + episode)
    InvEpisode,
    /// sqrt(1 / (1 + episode))
    SqrtInvEpisode,
    /// 1 / (1 + sqrt(episode))
    InvSqrtEpisode,
}

impl BetaSchedule {
    pub const ALL: [BetaSchedule; 5] = [
        BetaSchedule::InvSubspaces,
        BetaSchedule::InvTenSubspaces,
        BetaSchedule::InvEpisode,
        BetaSchedule::SqrtInvEpisode,
        BetaSchedule::InvSqrtEpisode,
    ];

    pub fn from_id(id: usize) -> Option<Self> {
        (1..=Self::ALL.len()).contains(&id).then(|| Self::ALL[id - 1])
    }

    pub fn id(self) -> usize {
        Self::ALL.iter().position(|&s| s == self).unwrap() + 1
    }

    pub fn value(self, num_subspaces: usize, episode: usize) -> f64 {
        let k = num_subspaces as f64;
        let ep = episode as f64;
        match self {
            BetaSchedule::InvSubspaces => 1.0 / (1.0 + k),
            BetaSchedule::InvTenSubspaces => 1.0 / (1.0 + 10.0 * k),
            BetaSchedule::InvEpisode => 1.0 / (1.0 + ep),
            BetaSchedule::SqrtInvEpisode => (1.0 / (1.0 + ep)).sqrt(),
            BetaSchedule::InvSqrtEpisode => 1.0 / (1.0 + ep.sqrt()),
        }
    }
}

/// Trace-decay grid the baseline sweep explores.
pub const LAMBDA_TABLE: [f64; 4] = [1.0, 0.9, 0.5, 0.0];

/// Shared agent hyperparameters.
#[derive(Debug, Clone, Copy)]
pub struct AgentParams {
    pub epsilon: f64,
    pub gamma: f64,
    pub delta_r: f64,
    pub delta_p: f64,
    pub lambda: f64,
    pub alpha: AlphaSchedule,
    pub beta: BetaSchedule,
    /// Fixed tile-coding step size; overrides the schedule when set.
    pub beta_override: Option<f64>,
    /// Visit count at which subspace influence is switched off for a
    /// state-action pair; `None` leaves subspaces active forever.
    pub visit_threshold: Option<u64>,
    /// Replace the in-episode one-step backup with a full sweep after every
    /// transition. Expensive; off by default.
    pub full_sweep_in_episode: bool,
    pub cdm: CdmFunctions,
}

impl Default for AgentParams {
    fn default() -> Self {
        AgentParams {
            epsilon: 0.1,
            gamma: 0.9,
            delta_r: 0.1,
            delta_p: 0.1,
            lambda: 0.9,
            alpha: AlphaSchedule::Const,
            beta: BetaSchedule::InvSubspaces,
            beta_override: None,
            visit_threshold: None,
            full_sweep_in_episode: false,
            cdm: CdmFunctions::default(),
        }
    }
}

/// Whether a state-action pair may still draw on subspace decisions: true
/// below the visit threshold, false from the threshold on.
pub fn mobles_thr_gate(n_full: u64, threshold: u64) -> bool {
    n_full < threshold
}

/// One transition as experienced by the agent, in full-space indices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub state: usize,
    pub action: usize,
    pub reward: f64,
}

/// What one episode produced.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeLog {
    pub steps: Vec<StepRecord>,
    pub return_sum: f64,
    pub reached_goal: bool,
    pub truncated: bool,
    /// Mean per-space decision weights over the episode's steps, ordered
    /// `[subspaces..., full]`. Empty for agents without a decision model.
    pub mean_weights: Vec<f64>,
}

impl EpisodeLog {
    pub fn num_steps(&self) -> usize {
        self.steps.len()
    }
}

/// Samples an index from an explicit probability vector with a single
/// uniform draw.
pub(crate) fn sample_action<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    let mut cum = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        cum += p;
        if u < cum {
            return i;
        }
    }
    probs.len() - 1
}

/// The agent kinds the harness can run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AgentKind {
    Mobles,
    MoblesThr,
    Mb,
    QLambda,
    QsLambda,
    QlTile,
}

impl AgentKind {
    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "mobles" => Some(AgentKind::Mobles),
            "mobles-thr" => Some(AgentKind::MoblesThr),
            "mb" => Some(AgentKind::Mb),
            "qlambda" => Some(AgentKind::QLambda),
            "qslambda" => Some(AgentKind::QsLambda),
            "ql-tile" => Some(AgentKind::QlTile),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            AgentKind::Mobles => "mobles",
            AgentKind::MoblesThr => "mobles-thr",
            AgentKind::Mb => "mb",
            AgentKind::QLambda => "qlambda",
            AgentKind::QsLambda => "qslambda",
            AgentKind::QlTile => "ql-tile",
        }
    }
}

/// Type-erased agent for the experiment runner.
pub enum AnyAgent {
    Mobles(MoblesAgent),
    Qs(QsLambdaAgent),
    Tile(TileCodingAgent),
}

impl AnyAgent {
    pub fn run_episode<R: Rng + ?Sized>(
        &mut self,
        rng: &mut R,
        max_steps: usize,
    ) -> Result<EpisodeLog, AgentError> {
        match self {
            AnyAgent::Mobles(a) => a.run_episode(rng, max_steps),
            AnyAgent::Qs(a) => a.run_episode(rng, max_steps),
            AnyAgent::Tile(a) => a.run_episode(rng, max_steps),
        }
    }

    /// Labels for the weight log, `[subspaces..., full]`; empty when the
    /// agent logs no weights.
    pub fn space_labels(&self) -> Vec<String> {
        match self {
            AnyAgent::Mobles(a) => a.space_labels(),
            AnyAgent::Qs(a) => a.space_labels(),
            AnyAgent::Tile(_) => Vec::new(),
        }
    }
}

/// Builds an agent of the requested kind. `family` applies to the kinds that
/// use subspaces; the plain full-space baselines ignore it.
pub fn build_agent(
    kind: AgentKind,
    maze: GridMaze,
    mode: SensorMode,
    family: SpaceFamily,
    mut params: AgentParams,
) -> Result<AnyAgent, AgentError> {
    match kind {
        AgentKind::Mobles => Ok(AnyAgent::Mobles(MoblesAgent::new(
            maze, mode, family, params,
        )?)),
        AgentKind::MoblesThr => {
            params.visit_threshold = Some(params.visit_threshold.unwrap_or(5));
            Ok(AnyAgent::Mobles(MoblesAgent::new(maze, mode, family, params)?))
        }
        AgentKind::Mb => {
            params.visit_threshold = None;
            let features = maze.feature_space(mode);
            Ok(AnyAgent::Mobles(MoblesAgent::new(
                maze,
                mode,
                SpaceFamily::full_only(features),
                params,
            )?))
        }
        AgentKind::QLambda => {
            let features = maze.feature_space(mode);
            Ok(AnyAgent::Qs(QsLambdaAgent::new(
                maze,
                mode,
                SpaceFamily::full_only(features),
                params,
            )?))
        }
        AgentKind::QsLambda => Ok(AnyAgent::Qs(QsLambdaAgent::new(maze, mode, family, params)?)),
        AgentKind::QlTile => Ok(AnyAgent::Tile(TileCodingAgent::new(
            maze, mode, family, params,
        )?)),
    }
}
