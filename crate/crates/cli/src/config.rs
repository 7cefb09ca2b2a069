//! Scenario configuration: the JSON file format and its validated form.

use std::path::PathBuf;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use wigner_flow::states::bound_state_count;
use wigner_flow::{
    Basis, LoopPath, PhaseGrid, PhysicalParams, QuadratureSpec, StateSpec, StreamlineOptions, Term,
    TruncationPolicy,
};

use crate::error::CliError;
use crate::presets;

/// One coefficient of a superposition, `re + i im` on level `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermConfig {
    pub n: usize,
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

/// `cos(theta)|m> + sin(theta) e^{i phi}|n>`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwoLevelConfig {
    pub m: usize,
    pub n: usize,
    pub theta: f64,
    pub phi: f64,
}

/// State at `t = 0`, either as explicit terms or as a two-level superposition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum StateConfig {
    Terms(Vec<TermConfig>),
    TwoLevel(TwoLevelConfig),
}

impl StateConfig {
    pub fn to_spec(&self, basis: Basis) -> wigner_flow::Result<StateSpec> {
        match self {
            StateConfig::Terms(terms) => StateSpec::new(
                basis,
                terms
                    .iter()
                    .map(|t| Term {
                        n: t.n,
                        coeff: Complex64::new(t.re, t.im),
                    })
                    .collect(),
                0.0,
            ),
            StateConfig::TwoLevel(s) => StateSpec::two_level(basis, s.m, s.n, s.theta, s.phi),
        }
    }

    fn levels(&self) -> Vec<usize> {
        match self {
            StateConfig::Terms(t) => t.iter().map(|t| t.n).collect(),
            StateConfig::TwoLevel(s) => vec![s.m, s.n],
        }
    }
}

/// A single time or a sweep of `steps` times `start + k (stop - start) / steps`, `k < steps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TimeConfig {
    At(f64),
    Sweep { start: f64, stop: f64, steps: usize },
}

impl Default for TimeConfig {
    fn default() -> Self {
        TimeConfig::At(0.0)
    }
}

impl TimeConfig {
    pub fn times(&self) -> Vec<f64> {
        match *self {
            TimeConfig::At(t) => vec![t],
            TimeConfig::Sweep { start, stop, steps } => (0..steps)
                .map(|k| start + (stop - start) * k as f64 / steps as f64)
                .collect(),
        }
    }

    pub fn is_sweep(&self) -> bool {
        matches!(self, TimeConfig::Sweep { .. })
    }
}

/// Which artifacts to write. Everything is off unless requested.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSelection {
    /// `W.csv`
    pub wigner: bool,
    /// `dW_x1_p0.csv`, `dW_x0_p1.csv`
    pub gradient: bool,
    /// `dWdt.csv`
    pub time_derivative: bool,
    /// `J.csv`
    pub flow: bool,
    /// `divJ.csv`
    pub flow_divergence: bool,
    /// `w.csv`
    pub velocity: bool,
    /// `div_w.csv` and `div_w_compressed.csv`
    pub divergence: bool,
    /// `topology.json`
    pub topology: bool,
    /// `streamlines.json`
    pub streamlines: bool,
    /// `summary.json`
    pub summary: bool,
    /// `W.ppm`, `div_w_compressed.ppm`, `streamlines.ppm` as selected
    pub plots: bool,
}

impl OutputSelection {
    pub fn all() -> Self {
        Self {
            wigner: true,
            gradient: true,
            time_derivative: true,
            flow: true,
            flow_divergence: true,
            velocity: true,
            divergence: true,
            topology: true,
            streamlines: true,
            summary: true,
            plots: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum LoopConfig {
    Circle {
        center: [f64; 2],
        radius: f64,
        vertices: usize,
    },
    Rectangle {
        x: [f64; 2],
        p: [f64; 2],
    },
}

impl LoopConfig {
    pub fn path(&self) -> wigner_flow::Result<LoopPath> {
        match *self {
            LoopConfig::Circle {
                center,
                radius,
                vertices,
            } => LoopPath::circle(center, radius, vertices),
            LoopConfig::Rectangle { x, p } => LoopPath::rectangle(x[0], x[1], p[0], p[1]),
        }
    }
}

/// Loops for Poincaré indices and streamline seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TopologyConfig {
    pub loops: Vec<LoopConfig>,
    pub seeds: Vec<[f64; 2]>,
    pub step: f64,
    pub max_length: f64,
    /// Relative `|W|` threshold of the velocity mask.
    pub mask_relative: f64,
}

impl Default for TopologyConfig {
    fn default() -> Self {
        let s = StreamlineOptions::default();
        Self {
            loops: Vec::new(),
            seeds: Vec::new(),
            step: s.step,
            max_length: s.max_length,
            mask_relative: wigner_flow::velocity::DEFAULT_MASK_RELATIVE,
        }
    }
}

impl TopologyConfig {
    pub fn streamline_options(&self) -> StreamlineOptions {
        StreamlineOptions {
            step: self.step,
            max_length: self.max_length,
            ..Default::default()
        }
    }
}

/// Config file as written by users: a preset name, explicit fields, or both
/// (explicit fields override the preset).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub preset: Option<String>,
    pub system: Option<Basis>,
    pub params: Option<PhysicalParams>,
    pub state: Option<StateConfig>,
    pub grid: Option<PhaseGrid>,
    pub quadrature: Option<QuadratureSpec>,
    pub truncation: Option<TruncationPolicy>,
    pub time: Option<TimeConfig>,
    pub outputs: Option<OutputSelection>,
    pub topology: Option<TopologyConfig>,
    pub output_dir: Option<PathBuf>,
}

/// Fully specified scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub system: Basis,
    pub params: PhysicalParams,
    pub state: StateConfig,
    pub grid: PhaseGrid,
    pub quadrature: QuadratureSpec,
    pub truncation: TruncationPolicy,
    pub time: TimeConfig,
    pub outputs: OutputSelection,
    pub topology: TopologyConfig,
    pub output_dir: PathBuf,
}

pub const DEFAULT_OUTPUT_DIR: &str = "wflow-out";

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Validation(vec![format!("config: {e}")]))
    }

    /// Fills from the preset, then checks every field; all violations are reported together.
    pub fn resolve(self) -> Result<ScenarioConfig, CliError> {
        let mut errors = Vec::new();
        let base = match &self.preset {
            Some(name) => match presets::preset(name) {
                Some(p) => Some(p),
                None => {
                    errors.push(format!(
                        "unknown preset '{name}' (known: {})",
                        presets::names().join(", ")
                    ));
                    None
                }
            },
            None => None,
        };
        // missing fields are only worth reporting when no preset was requested
        let report = self.preset.is_none();
        let system = required(
            "system",
            self.system,
            base.as_ref().map(|b| b.system),
            report,
            &mut errors,
        );
        let params = required(
            "params",
            self.params,
            base.as_ref().map(|b| b.params),
            report,
            &mut errors,
        );
        let state = required(
            "state",
            self.state,
            base.as_ref().map(|b| b.state.clone()),
            report,
            &mut errors,
        );
        let grid = required(
            "grid",
            self.grid,
            base.as_ref().map(|b| b.grid),
            report,
            &mut errors,
        );
        let quadrature = or_base(
            self.quadrature,
            base.as_ref().map(|b| b.quadrature),
            QuadratureSpec::default(),
        );
        let truncation = or_base(
            self.truncation,
            base.as_ref().map(|b| b.truncation),
            TruncationPolicy::default(),
        );
        let time = or_base(
            self.time,
            base.as_ref().map(|b| b.time),
            TimeConfig::default(),
        );
        let outputs = or_base(
            self.outputs,
            base.as_ref().map(|b| b.outputs),
            OutputSelection::default(),
        );
        let topology = self
            .topology
            .or(base.as_ref().map(|b| b.topology.clone()))
            .unwrap_or_default();
        let output_dir = self
            .output_dir
            .or(base.as_ref().map(|b| b.output_dir.clone()))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR));
        match (system, params, state, grid) {
            (Some(system), Some(params), Some(state), Some(grid)) if errors.is_empty() => {
                let cfg = ScenarioConfig {
                    system,
                    params,
                    state,
                    grid,
                    quadrature,
                    truncation,
                    time,
                    outputs,
                    topology,
                    output_dir,
                };
                cfg.validate()?;
                Ok(cfg)
            }
            _ => Err(CliError::Validation(errors)),
        }
    }
}

fn or_base<T>(own: Option<T>, base: Option<T>, default: T) -> T {
    own.or(base).unwrap_or(default)
}

fn required<T>(
    name: &str,
    own: Option<T>,
    base: Option<T>,
    report: bool,
    errors: &mut Vec<String>,
) -> Option<T> {
    let v = own.or(base);
    if v.is_none() && report {
        errors.push(format!("missing field '{name}' (no preset given)"));
    }
    v
}

impl ScenarioConfig {
    /// Every violated invariant, empty when the config is runnable.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let prefixed =
            |tag: &'static str, v: Vec<String>| v.into_iter().map(move |m| format!("{tag}: {m}"));
        out.extend(prefixed("params", self.params.violations()));
        out.extend(prefixed("grid", self.grid.violations()));
        out.extend(prefixed("quadrature", self.quadrature.violations()));
        out.extend(prefixed("truncation", self.truncation.violations()));
        if self.system == Basis::Morse && self.params.validate().is_ok() {
            let count = bound_state_count(&self.params);
            for n in self.state.levels() {
                if n >= count {
                    out.push(format!(
                        "state: level {n} is not bound (potential supports {count})"
                    ));
                }
            }
        }
        if let Err(e) = self.state.to_spec(self.system) {
            out.push(format!("state: {e}"));
        }
        match self.time {
            TimeConfig::At(t) if !t.is_finite() => {
                out.push(format!("time: must be finite (got {t})"))
            }
            TimeConfig::Sweep { start, stop, steps } => {
                if steps < 1 {
                    out.push("time: sweep needs steps >= 1".into());
                }
                if !(start.is_finite() && stop.is_finite()) {
                    out.push(format!(
                        "time: sweep bounds must be finite (got {start}, {stop})"
                    ));
                }
            }
            _ => {}
        }
        let t = &self.topology;
        if !(t.step > 0.0 && t.step.is_finite()) {
            out.push(format!(
                "topology: streamline step must be > 0 (got {})",
                t.step
            ));
        }
        if !(t.max_length >= 0.0 && t.max_length.is_finite()) {
            out.push(format!(
                "topology: max_length must be finite and >= 0 (got {})",
                t.max_length
            ));
        }
        if !(t.mask_relative > 0.0 && t.mask_relative < 1.0) {
            out.push(format!(
                "topology: mask_relative must lie in (0, 1) (got {})",
                t.mask_relative
            ));
        }
        for (k, l) in t.loops.iter().enumerate() {
            if let Err(e) = l.path() {
                out.push(format!("topology: loop {k}: {e}"));
            }
        }
        for (k, s) in t.seeds.iter().enumerate() {
            if !self.grid.contains(s[0], s[1]) {
                out.push(format!(
                    "topology: seed {k} ({}, {}) lies outside the grid",
                    s[0], s[1]
                ));
            }
        }
        out
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(CliError::Validation(v))
        }
    }

    /// Canonical JSON of everything that determines the results (the output
    /// directory excluded); object keys are sorted.
    pub fn canonical_json(&self) -> String {
        let mut v = serde_json::to_value(self).expect("config serializes");
        if let Some(map) = v.as_object_mut() {
            map.remove("output_dir");
        }
        serde_json::to_string(&v).expect("value serializes")
    }

    /// SHA-256 of [`Self::canonical_json`], hex encoded.
    pub fn hash(&self) -> String {
        use sha2::{Digest, Sha256};
        hex::encode(Sha256::digest(self.canonical_json().as_bytes()))
    }

    pub fn state_spec(&self, time: f64) -> wigner_flow::Result<StateSpec> {
        Ok(self.state.to_spec(self.system)?.at_time(time))
    }
}
