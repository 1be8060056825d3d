//! Experiment configuration: a flat key-value file format plus validation.
//!
//! Every key has a CLI flag mirror (see the `relu-moments` binary). Format:
//!
//! ```text
//! # comment
//! shape = 4,8,8,1
//! schedule = fan-in            # fan-in | fan-out | custom:b1,b2,...
//! x_norm = 1.0                 # or: x = 1,0,0,0 (explicit input vector)
//! trials = 100000
//! seed = 42
//! eps = 0.3
//! width_constant = 2.0
//! z_max = 4.0
//! probe_layers = 1,2           # default: every hidden layer
//! probe_neurons = 1,2
//! workers = 1
//! ```

use crate::moments::{InitSchedule, NetworkShape};

use std::fmt;

/// Hard cap on simulated layer widths.
pub const MAX_SIM_WIDTH: usize = 1 << 20;

/// Validation failure listing every offending field.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub problems: Vec<String>,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid configuration: {}", self.problems.join("; "))
    }
}

impl std::error::Error for ConfigError {}

impl ConfigError {
    fn one(msg: impl Into<String>) -> Self {
        Self {
            problems: vec![msg.into()],
        }
    }
}

/// How the per-layer weight standard deviations are chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum ScheduleSpec {
    /// beta_l^2 = 2 / n_{l-1}
    FanIn,
    /// beta_l^2 = 2 / n_l
    FanOut,
    /// Explicit list beta_1..beta_L.
    Custom(Vec<f64>),
}

impl ScheduleSpec {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let t = text.trim();
        match t {
            "fan-in" | "fan_in" => Ok(ScheduleSpec::FanIn),
            "fan-out" | "fan_out" => Ok(ScheduleSpec::FanOut),
            _ => {
                if let Some(rest) = t.strip_prefix("custom:") {
                    let betas = parse_f64_list(rest)
                        .map_err(|e| ConfigError::one(format!("schedule: {e}")))?;
                    Ok(ScheduleSpec::Custom(betas))
                } else {
                    Err(ConfigError::one(format!(
                        "schedule: expected fan-in, fan-out, or custom:<list>, got {t:?}"
                    )))
                }
            }
        }
    }

    pub fn resolve(&self, shape: &NetworkShape) -> Result<InitSchedule, ConfigError> {
        match self {
            ScheduleSpec::FanIn => Ok(InitSchedule::fan_in(shape)),
            ScheduleSpec::FanOut => Ok(InitSchedule::fan_out(shape)),
            ScheduleSpec::Custom(betas) => InitSchedule::custom(shape, betas.clone())
                .map_err(|e| ConfigError::one(format!("schedule: {e}"))),
        }
    }
}

impl fmt::Display for ScheduleSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScheduleSpec::FanIn => write!(f, "fan-in"),
            ScheduleSpec::FanOut => write!(f, "fan-out"),
            ScheduleSpec::Custom(betas) => {
                write!(f, "custom:")?;
                for (i, b) in betas.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{b}")?;
                }
                Ok(())
            }
        }
    }
}

/// The network input: an explicit vector, or a norm along the deterministic
/// direction (1, 0, ..., 0).
#[derive(Debug, Clone, PartialEq)]
pub enum InputSpec {
    Norm(f64),
    Vector(Vec<f64>),
}

impl InputSpec {
    pub fn resolve(&self, shape: &NetworkShape) -> Result<Vec<f64>, ConfigError> {
        match self {
            InputSpec::Norm(r) => {
                let mut x = vec![0.0; shape.input_dim()];
                x[0] = *r;
                Ok(x)
            }
            InputSpec::Vector(v) => {
                if v.len() != shape.input_dim() {
                    return Err(ConfigError::one(format!(
                        "x: length {} does not match input dimension {}",
                        v.len(),
                        shape.input_dim()
                    )));
                }
                Ok(v.clone())
            }
        }
    }

    pub fn norm(&self) -> f64 {
        match self {
            InputSpec::Norm(r) => *r,
            InputSpec::Vector(v) => v.iter().map(|x| x * x).sum::<f64>().sqrt(),
        }
    }
}

/// Everything a predict/verify run needs.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub shape: NetworkShape,
    pub schedule: ScheduleSpec,
    pub input: InputSpec,
    pub trials: u64,
    pub seed: u64,
    pub eps: f64,
    pub width_constant: f64,
    pub z_max: f64,
    /// Hidden layers to probe; `None` means every k in [1, L-1].
    pub probe_layers: Option<Vec<usize>>,
    /// Neuron indices to probe per layer (clamped to the layer width).
    pub probe_neurons: Vec<usize>,
    pub workers: usize,
}

impl ExperimentConfig {
    /// Defaults for everything except the mandatory shape.
    pub fn new(shape: NetworkShape) -> Self {
        Self {
            shape,
            schedule: ScheduleSpec::FanIn,
            input: InputSpec::Norm(1.0),
            trials: 100_000,
            seed: 42,
            eps: 0.3,
            width_constant: crate::moments::DEFAULT_WIDTH_CONSTANT,
            z_max: 4.0,
            probe_layers: None,
            probe_neurons: vec![1, 2],
            workers: 1,
        }
    }

    /// Check every field, collecting all problems rather than the first.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut problems = Vec::new();
        let depth = self.shape.depth();
        if self.shape.widths().iter().any(|&w| w > MAX_SIM_WIDTH) {
            problems.push(format!("shape: widths above the {MAX_SIM_WIDTH} cap"));
        }
        if let ScheduleSpec::Custom(betas) = &self.schedule {
            if betas.len() != depth {
                problems.push(format!(
                    "schedule: custom list has {} entries, need {depth}",
                    betas.len()
                ));
            }
            if betas.iter().any(|b| !b.is_finite() || *b <= 0.0) {
                problems.push("schedule: std-devs must be positive and finite".into());
            }
        }
        match &self.input {
            InputSpec::Norm(r) if !(r.is_finite() && *r > 0.0) => {
                problems.push(format!("x_norm: must be positive and finite, got {r}"));
            }
            InputSpec::Vector(v) => {
                if v.len() != self.shape.input_dim() {
                    problems.push(format!(
                        "x: length {} does not match input dimension {}",
                        v.len(),
                        self.shape.input_dim()
                    ));
                }
                if v.iter().any(|c| !c.is_finite()) {
                    problems.push("x: entries must be finite".into());
                } else if self.input.norm() <= 0.0 {
                    problems.push("x: the input vector must have positive norm".into());
                }
            }
            _ => {}
        }
        if self.trials < 100 {
            problems.push(format!("trials: need at least 100, got {}", self.trials));
        }
        if !(self.eps > 0.0 && self.eps < 1.0) {
            problems.push(format!("eps: must lie in (0, 1), got {}", self.eps));
        }
        if !(self.width_constant.is_finite() && self.width_constant > 0.0) {
            problems.push(format!(
                "width_constant: must be positive, got {}",
                self.width_constant
            ));
        }
        if !(self.z_max.is_finite() && self.z_max > 0.0) {
            problems.push(format!("z_max: must be positive, got {}", self.z_max));
        }
        if let Some(layers) = &self.probe_layers {
            if layers.is_empty() {
                problems.push("probe_layers: list is empty".into());
            }
            for &k in layers {
                if k < 1 || k >= depth {
                    problems.push(format!(
                        "probe_layers: layer {k} outside the hidden range [1, {}]",
                        depth - 1
                    ));
                }
            }
        }
        if self.probe_neurons.is_empty() {
            problems.push("probe_neurons: list is empty".into());
        }
        if self.probe_neurons.iter().any(|&p| p < 1) {
            problems.push("probe_neurons: indices are 1-based".into());
        }
        for k in self.probed_layers() {
            if k >= 1 && k < depth && self.probed_neurons(k).is_empty() {
                problems.push(format!(
                    "probe_neurons: no probed index fits layer {k} (width {})",
                    self.shape.width(k)
                ));
            }
        }
        if self.workers == 0 {
            problems.push("workers: must be at least 1".into());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(ConfigError { problems })
        }
    }

    /// Hidden layers to probe after applying defaults, ascending and unique.
    pub fn probed_layers(&self) -> Vec<usize> {
        match &self.probe_layers {
            Some(layers) => {
                let mut l = layers.clone();
                l.sort_unstable();
                l.dedup();
                l
            }
            None => (1..self.shape.depth()).collect(),
        }
    }

    /// Probed neuron indices at layer k, clamped to the layer width,
    /// ascending and unique.
    pub fn probed_neurons(&self, k: usize) -> Vec<usize> {
        let mut p: Vec<usize> = self
            .probe_neurons
            .iter()
            .copied()
            .filter(|&p| p <= self.shape.width(k))
            .collect();
        p.sort_unstable();
        p.dedup();
        p
    }

    /// Ordered key-value echo, the canonical form for reports.
    pub fn echo(&self) -> Vec<(String, String)> {
        let shape = self
            .shape
            .widths()
            .iter()
            .map(ToString::to_string)
            .collect::<Vec<_>>()
            .join(",");
        let mut kv = vec![
            ("shape".into(), shape),
            ("schedule".into(), self.schedule.to_string()),
        ];
        match &self.input {
            InputSpec::Norm(r) => kv.push(("x_norm".into(), format!("{r}"))),
            InputSpec::Vector(v) => kv.push((
                "x".into(),
                v.iter()
                    .map(ToString::to_string)
                    .collect::<Vec<_>>()
                    .join(","),
            )),
        }
        kv.push(("trials".into(), self.trials.to_string()));
        kv.push(("seed".into(), self.seed.to_string()));
        kv.push(("eps".into(), format!("{}", self.eps)));
        kv.push(("width_constant".into(), format!("{}", self.width_constant)));
        kv.push(("z_max".into(), format!("{}", self.z_max)));
        kv.push((
            "probe_layers".into(),
            match &self.probe_layers {
                None => "all".into(),
                Some(l) => l
                    .iter()
                    .map(ToString::to_string)
                    .collect::<Vec<_>>()
                    .join(","),
            },
        ));
        kv.push((
            "probe_neurons".into(),
            self.probe_neurons
                .iter()
                .map(ToString::to_string)
                .collect::<Vec<_>>()
                .join(","),
        ));
        kv.push(("workers".into(), self.workers.to_string()));
        kv
    }

    /// Parse the flat key-value file format. Later keys override earlier
    /// ones; unknown keys are errors.
    pub fn from_key_values(text: &str) -> Result<Self, ConfigError> {
        let mut shape: Option<NetworkShape> = None;
        let mut fields: Vec<(String, String)> = Vec::new();
        let mut problems = Vec::new();
        for (line_no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                problems.push(format!("line {}: expected key = value", line_no + 1));
                continue;
            };
            let (key, value) = (key.trim().to_string(), value.trim().to_string());
            if key == "shape" {
                match parse_usize_list(&value)
                    .map_err(|e| format!("shape: {e}"))
                    .and_then(|w| NetworkShape::new(w).map_err(|e| format!("shape: {e}")))
                {
                    Ok(s) => shape = Some(s),
                    Err(e) => problems.push(e),
                }
            } else {
                fields.push((key, value));
            }
        }
        let Some(shape) = shape else {
            problems.push("shape: missing (required)".into());
            return Err(ConfigError { problems });
        };
        let mut config = ExperimentConfig::new(shape);
        for (key, value) in fields {
            if let Err(e) = config.set_field(&key, &value) {
                problems.extend(e.problems);
            }
        }
        if !problems.is_empty() {
            return Err(ConfigError { problems });
        }
        config.validate()?;
        Ok(config)
    }

    /// Apply one key (same names as the file format and the CLI flags).
    pub fn set_field(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let bad = |field: &str, value: &str| {
            ConfigError::one(format!("{field}: cannot parse {value:?}"))
        };
        match key {
            "schedule" => self.schedule = ScheduleSpec::parse(value)?,
            "x_norm" => {
                self.input =
                    InputSpec::Norm(value.parse().map_err(|_| bad("x_norm", value))?);
            }
            "x" => {
                self.input = InputSpec::Vector(
                    parse_f64_list(value).map_err(|e| ConfigError::one(format!("x: {e}")))?,
                );
            }
            "trials" => self.trials = value.parse().map_err(|_| bad("trials", value))?,
            "seed" => self.seed = value.parse().map_err(|_| bad("seed", value))?,
            "eps" => self.eps = value.parse().map_err(|_| bad("eps", value))?,
            "width_constant" => {
                self.width_constant = value.parse().map_err(|_| bad("width_constant", value))?;
            }
            "z_max" => self.z_max = value.parse().map_err(|_| bad("z_max", value))?,
            "probe_layers" => {
                self.probe_layers = if value.trim() == "all" {
                    None
                } else {
                    Some(
                        parse_usize_list(value)
                            .map_err(|e| ConfigError::one(format!("probe_layers: {e}")))?,
                    )
                };
            }
            "probe_neurons" => {
                self.probe_neurons = parse_usize_list(value)
                    .map_err(|e| ConfigError::one(format!("probe_neurons: {e}")))?;
            }
            "workers" => self.workers = value.parse().map_err(|_| bad("workers", value))?,
            other => {
                return Err(ConfigError::one(format!("unknown key {other:?}")));
            }
        }
        Ok(())
    }

    /// The resolved (schedule, input) pair, post-validation.
    pub fn materialize(&self) -> Result<(InitSchedule, Vec<f64>), ConfigError> {
        self.validate()?;
        Ok((
            self.schedule.resolve(&self.shape)?,
            self.input.resolve(&self.shape)?,
        ))
    }
}

pub fn parse_usize_list(text: &str) -> Result<Vec<usize>, String> {
    text.split(',')
        .map(|t| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| format!("cannot parse {:?} as an integer", t.trim()))
        })
        .collect()
}

pub fn parse_f64_list(text: &str) -> Result<Vec<f64>, String> {
    text.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| format!("cannot parse {:?} as a number", t.trim()))
        })
        .collect()
}
