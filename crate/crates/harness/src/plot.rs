//! Static SVG learning-curve and weight plots, emitted directly with no
//! plotting dependency: per-agent mean curves with a shaded standard-error
//! band, and smoothed per-space weight curves for the decision-model agents.

use crate::run::{read_returns, read_weights};
use crate::stats::{aggregate_returns, aggregate_weights, smooth_rect, EpisodeStat};
use crate::HarnessError;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

const CANVAS_W: f64 = 860.0;
const CANVAS_H: f64 = 520.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 170.0;
const MARGIN_T: f64 = 30.0;
const MARGIN_B: f64 = 50.0;
/// Fraction of the data span added on each side of every axis.
const AXIS_PAD: f64 = 0.05;
/// Rectangular window for the weight curves.
const WEIGHT_SMOOTH_WINDOW: usize = 5;

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#7f7f7f",
];

/// Maps data coordinates onto the pixel canvas. The stored ranges already
/// include the 5% padding and are exported on the SVG root for inspection.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Frame {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Frame {
    pub(crate) fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Frame {
        let pad = |lo: f64, hi: f64| -> (f64, f64) {
            let span = if hi > lo { hi - lo } else { 1.0 };
            (lo - AXIS_PAD * span, hi + AXIS_PAD * span)
        };
        let (x0, x1) = pad(x_min, x_max);
        let (y0, y1) = pad(y_min, y_max);
        Frame { x0, x1, y0, y1 }
    }

    pub(crate) fn sx(&self, x: f64) -> f64 {
        MARGIN_L + (x - self.x0) / (self.x1 - self.x0) * (CANVAS_W - MARGIN_L - MARGIN_R)
    }

    pub(crate) fn sy(&self, y: f64) -> f64 {
        CANVAS_H - MARGIN_B - (y - self.y0) / (self.y1 - self.y0) * (CANVAS_H - MARGIN_T - MARGIN_B)
    }
}

fn fmt_tick(v: f64) -> String {
    if v.abs() >= 1000.0 {
        format!("{v:.0}")
    } else {
        let rounded = (v * 100.0).round() / 100.0;
        format!("{rounded}")
    }
}

struct Svg {
    body: String,
}

impl Svg {
    fn new(frame: &Frame, title: &str) -> Svg {
        let mut body = String::new();
        let _ = writeln!(
            body,
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{CANVAS_W}\" height=\"{CANVAS_H}\" \
             viewBox=\"0 0 {CANVAS_W} {CANVAS_H}\" data-x-range=\"{} {}\" data-y-range=\"{} {}\">",
            frame.x0, frame.x1, frame.y0, frame.y1
        );
        let _ = writeln!(
            body,
            "<rect width=\"{CANVAS_W}\" height=\"{CANVAS_H}\" fill=\"white\"/>"
        );
        let _ = writeln!(
            body,
            "<text x=\"{}\" y=\"20\" font-family=\"sans-serif\" font-size=\"15\" text-anchor=\"middle\">{}</text>",
            MARGIN_L + (CANVAS_W - MARGIN_L - MARGIN_R) / 2.0,
            escape(title)
        );
        Svg { body }
    }

    fn axes(&mut self, frame: &Frame, x_label: &str, y_label: &str) {
        let x_px0 = frame.sx(frame.x0);
        let x_px1 = frame.sx(frame.x1);
        let y_px0 = frame.sy(frame.y0);
        let y_px1 = frame.sy(frame.y1);
        let _ = writeln!(
            self.body,
            "<rect x=\"{x_px0:.2}\" y=\"{y_px1:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"none\" stroke=\"#333\"/>",
            x_px1 - x_px0,
            y_px0 - y_px1
        );
        for i in 0..=5 {
            let t = i as f64 / 5.0;
            let x = frame.x0 + t * (frame.x1 - frame.x0);
            let y = frame.y0 + t * (frame.y1 - frame.y0);
            let xp = frame.sx(x);
            let yp = frame.sy(y);
            let _ = writeln!(
                self.body,
                "<line x1=\"{xp:.2}\" y1=\"{y_px0:.2}\" x2=\"{xp:.2}\" y2=\"{y_px1:.2}\" stroke=\"#ddd\"/>"
            );
            let _ = writeln!(
                self.body,
                "<text x=\"{xp:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">{}</text>",
                y_px0 + 16.0,
                fmt_tick(x)
            );
            let _ = writeln!(
                self.body,
                "<line x1=\"{x_px0:.2}\" y1=\"{yp:.2}\" x2=\"{x_px1:.2}\" y2=\"{yp:.2}\" stroke=\"#ddd\"/>"
            );
            let _ = writeln!(
                self.body,
                "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">{}</text>",
                x_px0 - 6.0,
                yp + 4.0,
                fmt_tick(y)
            );
        }
        let _ = writeln!(
            self.body,
            "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\">{}</text>",
            MARGIN_L + (CANVAS_W - MARGIN_L - MARGIN_R) / 2.0,
            CANVAS_H - 12.0,
            escape(x_label)
        );
        let _ = writeln!(
            self.body,
            "<text x=\"18\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 18 {:.2})\">{}</text>",
            (MARGIN_T + CANVAS_H - MARGIN_B) / 2.0,
            (MARGIN_T + CANVAS_H - MARGIN_B) / 2.0,
            escape(y_label)
        );
    }

    fn band(&mut self, frame: &Frame, points: &[(f64, f64, f64)], color: &str) {
        if points.len() < 2 {
            return;
        }
        let mut path = String::new();
        for (x, mean, sem) in points {
            let _ = write!(path, "{:.2},{:.2} ", frame.sx(*x), frame.sy(mean + sem));
        }
        for (x, mean, sem) in points.iter().rev() {
            let _ = write!(path, "{:.2},{:.2} ", frame.sx(*x), frame.sy(mean - sem));
        }
        let _ = writeln!(
            self.body,
            "<polygon points=\"{}\" fill=\"{color}\" fill-opacity=\"0.18\" stroke=\"none\"/>",
            path.trim_end()
        );
    }

    fn curve(&mut self, frame: &Frame, points: &[(f64, f64)], color: &str, label: &str) {
        let mut path = String::new();
        for (x, y) in points {
            let _ = write!(path, "{:.2},{:.2} ", frame.sx(*x), frame.sy(*y));
        }
        let _ = writeln!(
            self.body,
            "<polyline data-series=\"{}\" points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.8\"/>",
            escape(label),
            path.trim_end()
        );
    }

    fn legend(&mut self, entries: &[(String, &str)]) {
        let x = CANVAS_W - MARGIN_R + 14.0;
        for (i, (label, color)) in entries.iter().enumerate() {
            let y = MARGIN_T + 14.0 + i as f64 * 20.0;
            let _ = writeln!(
                self.body,
                "<line x1=\"{x:.2}\" y1=\"{y:.2}\" x2=\"{:.2}\" y2=\"{y:.2}\" stroke=\"{color}\" stroke-width=\"2.5\"/>",
                x + 22.0
            );
            let _ = writeln!(
                self.body,
                "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"12\">{}</text>",
                x + 28.0,
                y + 4.0,
                escape(label)
            );
        }
    }

    fn finish(mut self) -> String {
        self.body.push_str("</svg>\n");
        self.body
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn series_extent<'a>(
    series: impl Iterator<Item = &'a Vec<EpisodeStat>>,
    with_sem: bool,
) -> (f64, f64, f64, f64) {
    let mut x_min = f64::INFINITY;
    let mut x_max = f64::NEG_INFINITY;
    let mut y_min = f64::INFINITY;
    let mut y_max = f64::NEG_INFINITY;
    for stats in series {
        for s in stats {
            x_min = x_min.min(s.episode as f64);
            x_max = x_max.max(s.episode as f64);
            let (lo, hi) = if with_sem {
                (s.mean - s.sem, s.mean + s.sem)
            } else {
                (s.mean, s.mean)
            };
            y_min = y_min.min(lo);
            y_max = y_max.max(hi);
        }
    }
    (x_min, x_max, y_min, y_max)
}

/// Renders one SVG per environment with the per-agent mean return curves and
/// their standard-error bands, plus one SVG per (environment, agent) pair
/// that logged decision weights, with the smoothed per-space weight curves.
/// Returns the paths written. Empty input is an error and writes nothing.
pub fn plot(
    returns_csv: &Path,
    weights_csv: &Path,
    out_dir: &Path,
) -> Result<Vec<PathBuf>, HarnessError> {
    let returns = read_returns(returns_csv)?;
    if returns.is_empty() {
        return Err(HarnessError::Runtime(format!(
            "no records in {}",
            returns_csv.display()
        )));
    }
    let weights = read_weights(weights_csv)?;
    std::fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();

    let by_key = aggregate_returns(&returns);
    let mut by_env: BTreeMap<String, Vec<(String, &Vec<EpisodeStat>)>> = BTreeMap::new();
    for ((env, agent), stats) in &by_key {
        by_env
            .entry(env.clone())
            .or_default()
            .push((agent.clone(), stats));
    }
    for (env, agents) in &by_env {
        let (x_min, x_max, y_min, y_max) = series_extent(agents.iter().map(|(_, s)| *s), true);
        let frame = Frame::new(x_min, x_max, y_min, y_max);
        let mut svg = Svg::new(&frame, &format!("Accumulated reward per episode: {env}"));
        svg.axes(&frame, "episode", "accumulated reward");
        let mut legend = Vec::new();
        for (i, (agent, stats)) in agents.iter().enumerate() {
            let color = PALETTE[i % PALETTE.len()];
            let band: Vec<(f64, f64, f64)> = stats
                .iter()
                .map(|s| (s.episode as f64, s.mean, s.sem))
                .collect();
            svg.band(&frame, &band, color);
            let pts: Vec<(f64, f64)> =
                stats.iter().map(|s| (s.episode as f64, s.mean)).collect();
            svg.curve(&frame, &pts, color, agent);
            legend.push((agent.clone(), color));
        }
        svg.legend(&legend);
        let path = out_dir.join(format!("returns_{env}.svg"));
        std::fs::write(&path, svg.finish())?;
        written.push(path);
    }

    let weight_stats = aggregate_weights(&weights);
    let mut by_pair: BTreeMap<(String, String), Vec<(String, Vec<EpisodeStat>)>> = BTreeMap::new();
    for ((env, agent, space), stats) in &weight_stats {
        let smoothed_means =
            smooth_rect(&stats.iter().map(|s| s.mean).collect::<Vec<_>>(), WEIGHT_SMOOTH_WINDOW)?;
        let smoothed: Vec<EpisodeStat> = stats
            .iter()
            .zip(smoothed_means)
            .map(|(s, mean)| EpisodeStat {
                episode: s.episode,
                mean,
                sem: 0.0,
            })
            .collect();
        by_pair
            .entry((env.clone(), agent.clone()))
            .or_default()
            .push((space.clone(), smoothed));
    }
    for ((env, agent), spaces) in &by_pair {
        let (x_min, x_max, _, _) = series_extent(spaces.iter().map(|(_, s)| s), false);
        // weights live in [0, 1]; fix the axis so figures are comparable
        let frame = Frame::new(x_min, x_max, 0.0, 1.0);
        let mut svg = Svg::new(&frame, &format!("Mean decision weights: {agent} on {env}"));
        svg.axes(&frame, "episode", "mean weight (smoothed)");
        let mut legend = Vec::new();
        for (i, (space, stats)) in spaces.iter().enumerate() {
            let color = PALETTE[i % PALETTE.len()];
            let pts: Vec<(f64, f64)> =
                stats.iter().map(|s| (s.episode as f64, s.mean)).collect();
            svg.curve(&frame, &pts, color, space);
            legend.push((space.clone(), color));
        }
        svg.legend(&legend);
        let path = out_dir.join(format!("weights_{env}_{agent}.svg"));
        std::fs::write(&path, svg.finish())?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::run::{write_outputs, RunRecord, WeightRecord};

    fn record(agent: &str, run: usize, episode: usize, ret: f64) -> RunRecord {
        RunRecord {
            env: "env1".into(),
            agent: agent.into(),
            run,
            episode,
            ret,
            steps: 3,
            reached_goal: true,
            truncated: false,
        }
    }

    #[test]
    fn empty_input_is_an_error_and_writes_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let (rp, wp) = write_outputs(dir.path(), &[], &[]).unwrap();
        let out = dir.path().join("figs");
        assert!(plot(&rp, &wp, &out).is_err());
        assert!(!out.exists() || std::fs::read_dir(&out).unwrap().next().is_none());
    }

    #[test]
    fn axis_ranges_pad_the_data_extrema_by_five_percent() {
        let dir = tempfile::tempdir().unwrap();
        let returns = vec![
            record("a", 0, 1, -10.0),
            record("a", 0, 2, 30.0),
            record("a", 0, 3, 10.0),
        ];
        let (rp, wp) = write_outputs(dir.path(), &returns, &[]).unwrap();
        let out = dir.path().join("figs");
        let written = plot(&rp, &wp, &out).unwrap();
        assert_eq!(written.len(), 1);
        let svg = std::fs::read_to_string(&written[0]).unwrap();
        let grab = |key: &str| -> (f64, f64) {
            let start = svg.find(key).unwrap() + key.len() + 2;
            let rest = &svg[start..];
            let end = rest.find('"').unwrap();
            let mut it = rest[..end].split_whitespace();
            (
                it.next().unwrap().parse().unwrap(),
                it.next().unwrap().parse().unwrap(),
            )
        };
        let (x0, x1) = grab("data-x-range");
        let (y0, y1) = grab("data-y-range");
        // single run: sem = 0, so the y extent is the raw data extent
        assert!((x0 - (1.0 - 0.05 * 2.0)).abs() < 1e-9);
        assert!((x1 - (3.0 + 0.05 * 2.0)).abs() < 1e-9);
        assert!((y0 - (-10.0 - 0.05 * 40.0)).abs() < 1e-9);
        assert!((y1 - (30.0 + 0.05 * 40.0)).abs() < 1e-9);
    }

    #[test]
    fn single_run_curve_matches_the_raw_returns() {
        let dir = tempfile::tempdir().unwrap();
        let raw = [2.0, -1.0, 4.0, 0.5];
        let returns: Vec<RunRecord> = raw
            .iter()
            .enumerate()
            .map(|(i, &v)| record("solo", 0, i + 1, v))
            .collect();
        let (rp, wp) = write_outputs(dir.path(), &returns, &[]).unwrap();
        let out = dir.path().join("figs");
        let written = plot(&rp, &wp, &out).unwrap();
        let svg = std::fs::read_to_string(&written[0]).unwrap();
        // recompute the expected pixel coordinates through the same mapping
        let frame = Frame::new(1.0, 4.0, -1.0, 4.0);
        let mut expected = String::new();
        for (i, &v) in raw.iter().enumerate() {
            expected.push_str(&format!(
                "{:.2},{:.2} ",
                frame.sx((i + 1) as f64),
                frame.sy(v)
            ));
        }
        assert!(
            svg.contains(expected.trim_end()),
            "polyline points for the raw series not found"
        );
    }

    #[test]
    fn weight_figures_are_emitted_per_agent() {
        let dir = tempfile::tempdir().unwrap();
        let returns = vec![record("m", 0, 1, 1.0), record("m", 0, 2, 2.0)];
        let weights: Vec<WeightRecord> = (1..=2)
            .flat_map(|ep| {
                [("x", 0.4), ("full", 0.6)].map(|(space, w)| WeightRecord {
                    env: "env1".into(),
                    agent: "m".into(),
                    run: 0,
                    episode: ep,
                    space: space.into(),
                    weight: w,
                })
            })
            .collect();
        let (rp, wp) = write_outputs(dir.path(), &returns, &weights).unwrap();
        let out = dir.path().join("figs");
        let written = plot(&rp, &wp, &out).unwrap();
        assert_eq!(written.len(), 2);
        let names: Vec<String> = written
            .iter()
            .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
            .collect();
        assert!(names.contains(&"returns_env1.svg".to_string()));
        assert!(names.contains(&"weights_env1_m.svg".to_string()));
        let svg = std::fs::read_to_string(out.join("weights_env1_m.svg")).unwrap();
        assert!(svg.contains("data-series=\"x\""));
        assert!(svg.contains("data-series=\"full\""));
    }
}
