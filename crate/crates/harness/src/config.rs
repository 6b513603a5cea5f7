//! Experiment configuration: a TOML document mirroring the runtime options,
//! resolved against the filesystem into a ready-to-run [`Experiment`].
//!
//! ```toml
//! env_id = "four_rooms"          # optional; defaults to the map file stem
//! map = "maps/four_rooms.map"
//! sensor_mode = "2-sensor"       # or "6-sensor"
//! episodes = 100
//! runs = 15
//! base_seed = 42
//! max_steps = 2000
//! out_dir = "out"
//! workers = 0                    # 0 = one per hardware thread
//! # subspaces = [["x"], ["y"]]   # optional family override, feature names
//!
//! [[agents]]
//! kind = "mobles"                # mobles | mobles-thr | mb | qlambda | qslambda | ql-tile
//! # id = "mobles"                # optional; defaults to the kind
//! # epsilon / gamma / delta_r / delta_p / lambda = ...
//! # alpha_schedule = 1..7, beta_schedule = 1..5
//! # visit_threshold = 5          # mobles-thr only
//! ```

use crate::HarnessError;
use mobles_core::agents::{AgentKind, AgentParams, AlphaSchedule, BetaSchedule};
use mobles_core::gridworld::{GridMaze, SensorMode};
use serde::Deserialize;
use std::path::{Path, PathBuf};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    env_id: Option<String>,
    map: PathBuf,
    #[serde(default = "default_sensor_mode")]
    sensor_mode: String,
    #[serde(default = "default_episodes")]
    episodes: usize,
    #[serde(default = "default_runs")]
    runs: usize,
    #[serde(default)]
    base_seed: u64,
    #[serde(default = "default_max_steps")]
    max_steps: usize,
    #[serde(default = "default_out_dir")]
    out_dir: PathBuf,
    #[serde(default)]
    workers: usize,
    subspaces: Option<Vec<Vec<String>>>,
    agents: Vec<RawAgent>,
}

fn default_sensor_mode() -> String {
    "2-sensor".to_string()
}

fn default_episodes() -> usize {
    100
}

fn default_runs() -> usize {
    15
}

fn default_max_steps() -> usize {
    2000
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAgent {
    kind: String,
    id: Option<String>,
    epsilon: Option<f64>,
    gamma: Option<f64>,
    delta_r: Option<f64>,
    delta_p: Option<f64>,
    lambda: Option<f64>,
    alpha_schedule: Option<usize>,
    beta_schedule: Option<usize>,
    beta: Option<f64>,
    visit_threshold: Option<u64>,
    full_sweep_in_episode: Option<bool>,
}

/// One agent to run: a stable identifier, the kind, and its parameters.
#[derive(Debug, Clone)]
pub struct AgentSpec {
    pub id: String,
    pub kind: AgentKind,
    pub params: AgentParams,
}

/// A fully resolved experiment.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub env_id: String,
    pub maze: GridMaze,
    pub mode: SensorMode,
    pub episodes: usize,
    pub runs: usize,
    pub base_seed: u64,
    pub max_steps: usize,
    pub out_dir: PathBuf,
    pub workers: usize,
    /// Optional subspace override as lists of feature names; agents that use
    /// a family default to one singleton subspace per feature.
    pub subspaces: Option<Vec<Vec<String>>>,
    pub agents: Vec<AgentSpec>,
}

/// Loads and validates a config file. Relative map paths resolve against the
/// config file's directory first, then the working directory.
pub fn load_config(path: &Path) -> Result<Experiment, HarnessError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| HarnessError::Config(format!("cannot read {}: {e}", path.display())))?;
    let raw: RawConfig = toml::from_str(&text)?;
    resolve(raw, path.parent())
}

/// Parses a config from TOML text; map paths resolve against `base_dir`.
pub fn load_config_str(text: &str, base_dir: Option<&Path>) -> Result<Experiment, HarnessError> {
    let raw: RawConfig = toml::from_str(text)?;
    resolve(raw, base_dir)
}

fn resolve(raw: RawConfig, base_dir: Option<&Path>) -> Result<Experiment, HarnessError> {
    if raw.agents.is_empty() {
        return Err(HarnessError::Config("no agents configured".into()));
    }
    if raw.episodes == 0 || raw.runs == 0 {
        return Err(HarnessError::Config(
            "episodes and runs must be at least 1".into(),
        ));
    }
    let mode = match raw.sensor_mode.as_str() {
        "2-sensor" => SensorMode::TwoSensor,
        "6-sensor" => SensorMode::SixSensor,
        other => {
            return Err(HarnessError::Config(format!(
                "unknown sensor_mode `{other}` (expected `2-sensor` or `6-sensor`)"
            )))
        }
    };
    let map_path = if raw.map.is_absolute() {
        raw.map.clone()
    } else {
        match base_dir {
            Some(dir) if dir.join(&raw.map).exists() => dir.join(&raw.map),
            _ => raw.map.clone(),
        }
    };
    let map_text = std::fs::read_to_string(&map_path).map_err(|e| {
        HarnessError::Config(format!("cannot read map {}: {e}", map_path.display()))
    })?;
    let maze = GridMaze::load(&map_text)
        .map_err(|e| HarnessError::Config(format!("{}: {e}", map_path.display())))?;

    let env_id = raw.env_id.unwrap_or_else(|| {
        map_path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "env".to_string())
    });

    // the override must name declared features; validate now rather than at
    // run time
    if let Some(subs) = &raw.subspaces {
        let features = maze.feature_space(mode);
        mobles_core::spaces::SpaceFamily::from_names(features, subs)
            .map_err(|e| HarnessError::Config(e.to_string()))?;
    }

    let mut agents = Vec::with_capacity(raw.agents.len());
    for a in raw.agents {
        let kind = AgentKind::parse(&a.kind)
            .ok_or_else(|| HarnessError::Config(format!("unknown agent kind `{}`", a.kind)))?;
        let mut params = AgentParams::default();
        if let Some(v) = a.epsilon {
            if !(0.0..=1.0).contains(&v) {
                return Err(HarnessError::Config(format!("epsilon {v} outside [0, 1]")));
            }
            params.epsilon = v;
        }
        if let Some(v) = a.gamma {
            if !(0.0..1.0).contains(&v) {
                return Err(HarnessError::Config(format!("gamma {v} outside [0, 1)")));
            }
            params.gamma = v;
        }
        if let Some(v) = a.delta_r {
            if !(0.0 < v && v < 1.0) {
                return Err(HarnessError::Config(format!("delta_r {v} outside (0, 1)")));
            }
            params.delta_r = v;
        }
        if let Some(v) = a.delta_p {
            if !(0.0 < v && v < 1.0) {
                return Err(HarnessError::Config(format!("delta_p {v} outside (0, 1)")));
            }
            params.delta_p = v;
        }
        if let Some(v) = a.lambda {
            if !(0.0..=1.0).contains(&v) {
                return Err(HarnessError::Config(format!("lambda {v} outside [0, 1]")));
            }
            params.lambda = v;
        }
        if let Some(id) = a.alpha_schedule {
            params.alpha = AlphaSchedule::from_id(id)
                .ok_or_else(|| HarnessError::Config(format!("alpha_schedule {id} not in 1..=7")))?;
        }
        if let Some(id) = a.beta_schedule {
            params.beta = BetaSchedule::from_id(id)
                .ok_or_else(|| HarnessError::Config(format!("beta_schedule {id} not in 1..=5")))?;
        }
        if let Some(v) = a.beta {
            if !(0.0..=1.0).contains(&v) {
                return Err(HarnessError::Config(format!("beta {v} outside [0, 1]")));
            }
            params.beta_override = Some(v);
        }
        if let Some(v) = a.visit_threshold {
            if v == 0 {
                return Err(HarnessError::Config("visit_threshold must be >= 1".into()));
            }
            params.visit_threshold = Some(v);
        }
        if let Some(v) = a.full_sweep_in_episode {
            params.full_sweep_in_episode = v;
        }
        let id = a.id.unwrap_or_else(|| kind.name().to_string());
        if agents.iter().any(|s: &AgentSpec| s.id == id) {
            return Err(HarnessError::Config(format!("duplicate agent id `{id}`")));
        }
        agents.push(AgentSpec { id, kind, params });
    }

    Ok(Experiment {
        env_id,
        maze,
        mode,
        episodes: raw.episodes,
        runs: raw.runs,
        base_seed: raw.base_seed,
        max_steps: raw.max_steps,
        out_dir: raw.out_dir,
        workers: raw.workers,
        subspaces: raw.subspaces,
        agents,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_map(dir: &Path) -> PathBuf {
        let path = dir.join("m.map");
        let mut f = std::fs::File::create(&path).unwrap();
        write!(f, "#####\n#..G#\n#####\n").unwrap();
        path
    }

    #[test]
    fn minimal_config_fills_defaults() {
        let dir = tempfile::tempdir().unwrap();
        write_map(dir.path());
        let exp = load_config_str(
            "map = \"m.map\"\n[[agents]]\nkind = \"mb\"\n",
            Some(dir.path()),
        )
        .unwrap();
        assert_eq!(exp.env_id, "m");
        assert_eq!(exp.episodes, 100);
        assert_eq!(exp.runs, 15);
        assert_eq!(exp.max_steps, 2000);
        assert_eq!(exp.agents.len(), 1);
        assert_eq!(exp.agents[0].id, "mb");
        assert!((exp.agents[0].params.epsilon - 0.1).abs() < 1e-15);
        assert!((exp.agents[0].params.gamma - 0.9).abs() < 1e-15);
    }

    #[test]
    fn bad_configs_are_rejected_as_config_errors() {
        let dir = tempfile::tempdir().unwrap();
        write_map(dir.path());
        let cases = [
            "map = \"missing.map\"\n[[agents]]\nkind = \"mb\"\n",
            "map = \"m.map\"\nsensor_mode = \"3-sensor\"\n[[agents]]\nkind = \"mb\"\n",
            "map = \"m.map\"\n[[agents]]\nkind = \"nope\"\n",
            "map = \"m.map\"\nepisodes = 0\n[[agents]]\nkind = \"mb\"\n",
            "map = \"m.map\"\nagents = []\n",
            "map = \"m.map\"\n[[agents]]\nkind = \"mb\"\nepsilon = 1.5\n",
            "map = \"m.map\"\n[[agents]]\nkind = \"mb\"\nalpha_schedule = 9\n",
            "map = \"m.map\"\nsubspaces = [[\"z\"]]\n[[agents]]\nkind = \"mobles\"\n",
            "map = \"m.map\"\n[[agents]]\nkind = \"mb\"\n[[agents]]\nkind = \"mb\"\n",
        ];
        for text in cases {
            let err = load_config_str(text, Some(dir.path())).unwrap_err();
            assert_eq!(err.exit_code(), 2, "case `{text}` gave {err}");
        }
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        write_map(dir.path());
        let err = load_config_str(
            "map = \"m.map\"\nbogus = 1\n[[agents]]\nkind = \"mb\"\n",
            Some(dir.path()),
        )
        .unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }
}
