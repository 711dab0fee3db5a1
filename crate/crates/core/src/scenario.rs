//! Scenario files: TOML description of one closed-loop run.
//!
//! See `docs/scenario-format.md` in the repository for the full schema.

use std::fmt;

use serde::de::{self, Deserializer};
use serde::{Deserialize, Serialize, Serializer};

use crate::controller::{CostWeights, HorizonConfig, Norm, MAX_HORIZON};
use crate::filter::{FilterSpec, Gap, ReferenceSpectrum, Segment};
use crate::plant::{Load, PlantParams};
use crate::spectrum::{EngineConfig, DEFAULT_RESYNC_INTERVAL};

pub const SCHEMA_VERSION: u32 = 1;

/// Keys every scenario must set, as dotted paths.
pub const REQUIRED_KEYS: &[&str] = &[
    "schema_version",
    "name",
    "duration",
    "plant.vin",
    "plant.inductance",
    "plant.capacitance",
    "plant.vref",
    "plant.load",
    "control.fc",
    "control.window",
    "control.horizon",
    "control.lambda1",
    "control.lambda2",
    "control.norm",
    "control.k_max",
];

/// `K_max` as written in a file: a positive integer or `"inf"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct KMax(pub Option<u32>);

impl Serialize for KMax {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self.0 {
            Some(k) => s.serialize_u32(k),
            None => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for KMax {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Int(i64),
            Float(f64),
            Text(String),
        }
        match Repr::deserialize(d)? {
            Repr::Int(k) if k >= 1 && k <= i64::from(u32::MAX) => Ok(KMax(Some(k as u32))),
            Repr::Float(f) if f.is_infinite() && f > 0.0 => Ok(KMax(None)),
            Repr::Text(t) if t.eq_ignore_ascii_case("inf") => Ok(KMax(None)),
            _ => Err(de::Error::custom("k_max must be an integer >= 1 or \"inf\"")),
        }
    }
}

impl fmt::Display for KMax {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Some(k) => write!(f, "{k}"),
            None => f.write_str("inf"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum InitialState {
    /// Output at the reference, inductor carrying the load current.
    #[default]
    Equilibrium,
    /// Discharged converter.
    Zero,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantSection {
    pub vin: f64,
    pub inductance: f64,
    pub capacitance: f64,
    #[serde(default)]
    pub series_resistance: f64,
    /// Output voltage reference, V.
    pub vref: f64,
    pub load: Load,
    /// Standard deviation of a random extra load current redrawn every
    /// control period, A.
    #[serde(default)]
    pub load_jitter: f64,
    #[serde(default)]
    pub initial: InitialState,
}

impl PlantSection {
    pub fn params(&self, fc: f64) -> PlantParams {
        PlantParams {
            vin: self.vin,
            inductance: self.inductance,
            capacitance: self.capacitance,
            series_resistance: self.series_resistance,
            load: self.load,
            dt: 1.0 / fc,
        }
    }
}

fn default_resync() -> u64 {
    DEFAULT_RESYNC_INTERVAL
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlSection {
    /// Control (sampling) frequency, Hz.
    pub fc: f64,
    /// DFT window length N.
    pub window: usize,
    /// Prediction horizon M.
    pub horizon: usize,
    pub lambda1: f64,
    pub lambda2: f64,
    pub norm: Norm,
    pub k_max: KMax,
    #[serde(default = "default_resync")]
    pub resync_interval: u64,
    /// Split the candidate tree over two threads.
    #[serde(default)]
    pub parallel: bool,
    #[serde(default)]
    pub prefill: Prefill,
}

/// Contents of the switching window before the first step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Prefill {
    /// First-order sigma-delta pattern at the starting duty.
    #[default]
    SigmaDelta,
    /// Seeded Bernoulli draws at the starting duty.
    Random,
}

impl ControlSection {
    pub fn weights(&self) -> CostWeights {
        CostWeights {
            lambda1: self.lambda1,
            lambda2: self.lambda2,
            norm: self.norm,
            k_max: self.k_max.0,
        }
    }

    pub fn engine(&self) -> EngineConfig {
        EngineConfig {
            window: self.window,
            fc: self.fc,
            resync_interval: self.resync_interval,
        }
    }
}

/// Optional overrides of the designed PI gains.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct PiSection {
    pub kp: Option<f64>,
    pub ki: Option<f64>,
    pub bias: Option<f64>,
}

/// Filter weighting; empty `segments` selects the default template.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct FilterSection {
    #[serde(default)]
    pub segments: Vec<Segment>,
    #[serde(default)]
    pub gaps: Vec<Gap>,
    /// Weight of the 0 Hz bin; defaults to the weight of the lowest bin.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dc_weight: Option<f64>,
}

impl FilterSection {
    pub fn spec(&self, fc: f64) -> FilterSpec {
        let mut spec = if self.segments.is_empty() {
            FilterSpec::template(fc)
        } else {
            FilterSpec {
                segments: self.segments.clone(),
                gaps: Vec::new(),
                dc_weight: None,
            }
        };
        spec.gaps = self.gaps.clone();
        spec.dc_weight = self.dc_weight;
        spec
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ReferenceSection {
    #[default]
    Zero,
    Flat { lo: f64, hi: f64, level: f64 },
    /// Flat target carrying the distortion power of a window at the
    /// reference duty.
    Calibrated { lo: f64, hi: f64 },
}

impl ReferenceSection {
    pub fn build(&self, window: usize, fc: f64, duty: f64) -> crate::Result<ReferenceSpectrum> {
        match *self {
            ReferenceSection::Zero => Ok(ReferenceSpectrum::zero(window)),
            ReferenceSection::Flat { lo, hi, level } => ReferenceSpectrum::flat(window, fc, lo, hi, level),
            ReferenceSection::Calibrated { lo, hi } => {
                ReferenceSpectrum::flat_calibrated(window, fc, lo, hi, duty)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EventSpec {
    LoadStep {
        time: f64,
        load: Load,
    },
    /// Moves a gap to `center`, instantly or at `rate` Hz/s.
    GapMove {
        time: f64,
        gap: usize,
        center: f64,
        rate: Option<f64>,
    },
    Weights {
        time: f64,
        lambda1: Option<f64>,
        lambda2: Option<f64>,
    },
    KMax {
        time: f64,
        k_max: KMax,
    },
}

impl EventSpec {
    pub fn time(&self) -> f64 {
        match *self {
            EventSpec::LoadStep { time, .. }
            | EventSpec::GapMove { time, .. }
            | EventSpec::Weights { time, .. }
            | EventSpec::KMax { time, .. } => time,
        }
    }
}

fn default_oversample() -> usize {
    16
}

/// Fixed-frequency PWM comparison run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaselineSection {
    #[serde(default)]
    pub enabled: bool,
    #[serde(default = "default_oversample")]
    pub oversample: usize,
    /// Defaults to the measured average switching frequency of the run.
    pub frequency: Option<f64>,
    /// Defaults to the steady-state mean duty reference of the run.
    pub duty: Option<f64>,
}

impl Default for BaselineSection {
    fn default() -> Self {
        Self {
            enabled: false,
            oversample: default_oversample(),
            frequency: None,
            duty: None,
        }
    }
}

fn default_fraction() -> f64 {
    0.2
}
fn default_overlap() -> f64 {
    0.5
}
fn default_flank() -> f64 {
    2e3
}
fn default_settle_tolerance() -> f64 {
    0.01
}
fn default_settle_window() -> f64 {
    1e-3
}
fn default_neighborhood() -> usize {
    3
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSection {
    /// Leading share of every trace discarded before statistics.
    #[serde(default = "default_fraction")]
    pub steady_state_fraction: f64,
    /// Welch segment length in control periods; defaults to the window.
    pub segment: Option<usize>,
    #[serde(default = "default_overlap")]
    pub overlap: f64,
    /// Defaults to the window.
    pub spectrogram_window: Option<usize>,
    /// Defaults to the spectrogram window.
    pub spectrogram_hop: Option<usize>,
    /// Width of each flank band next to a gap, Hz.
    #[serde(default = "default_flank")]
    pub gap_flank: f64,
    /// Relative band the mean output must return to after a load step.
    #[serde(default = "default_settle_tolerance")]
    pub settle_tolerance: f64,
    /// Averaging window for the settling test, s.
    #[serde(default = "default_settle_window")]
    pub settle_window: f64,
    /// Length of the spectra taken right before and after a load step, s.
    /// Defaults to the time between the step and the trace ends.
    pub step_window: Option<f64>,
    #[serde(default = "default_neighborhood")]
    pub sfdr_neighborhood: usize,
    /// Snapshot period of the controller's own spectrum, s.
    pub snapshot_interval: Option<f64>,
}

impl Default for AnalysisSection {
    fn default() -> Self {
        Self {
            steady_state_fraction: default_fraction(),
            segment: None,
            overlap: default_overlap(),
            spectrogram_window: None,
            spectrogram_hop: None,
            gap_flank: default_flank(),
            settle_tolerance: default_settle_tolerance(),
            settle_window: default_settle_window(),
            step_window: None,
            sfdr_neighborhood: default_neighborhood(),
            snapshot_interval: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    Lambda2,
    Horizon,
    KMax,
}

impl fmt::Display for SweepParameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepParameter::Lambda2 => "lambda2",
            SweepParameter::Horizon => "horizon",
            SweepParameter::KMax => "k_max",
        })
    }
}

/// One sweep point; `k_max` accepts `"inf"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SweepValue {
    Int(i64),
    Float(f64),
    Text(String),
}

impl fmt::Display for SweepValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SweepValue::Int(v) => write!(f, "{v}"),
            SweepValue::Float(v) => write!(f, "{v}"),
            SweepValue::Text(v) => f.write_str(v),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub parameter: SweepParameter,
    pub values: Vec<SweepValue>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema_version: u32,
    pub name: String,
    /// Simulated time, s.
    pub duration: f64,
    #[serde(default)]
    pub seed: u64,
    pub plant: PlantSection,
    pub control: ControlSection,
    #[serde(default)]
    pub pi: PiSection,
    #[serde(default)]
    pub filter: FilterSection,
    #[serde(default)]
    pub reference: ReferenceSection,
    #[serde(default)]
    pub events: Vec<EventSpec>,
    #[serde(default)]
    pub baseline: BaselineSection,
    #[serde(default)]
    pub analysis: AnalysisSection,
    pub sweep: Option<SweepSection>,
}

/// One problem found in a scenario, located by a dotted path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub path: String,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("{0}")]
    Syntax(String),
    #[error("missing required keys: {}", .0.join(", "))]
    Missing(Vec<String>),
    #[error("{}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("\n"))]
    Invalid(Vec<Diagnostic>),
}

impl ScenarioError {
    /// One line per problem.
    pub fn lines(&self) -> Vec<String> {
        match self {
            ScenarioError::Syntax(msg) => msg.lines().map(str::to_owned).collect(),
            ScenarioError::Missing(keys) => keys.iter().map(|k| format!("{k}: missing required key")).collect(),
            ScenarioError::Invalid(d) => d.iter().map(ToString::to_string).collect(),
        }
    }
}

fn missing_keys(table: &toml::Table) -> Vec<String> {
    REQUIRED_KEYS
        .iter()
        .filter(|path| {
            let mut node: Option<&toml::Value> = None;
            let mut current = table;
            for (i, part) in path.split('.').enumerate() {
                match current.get(part) {
                    Some(v) => {
                        node = Some(v);
                        if let Some(t) = v.as_table() {
                            current = t;
                        } else if i + 1 < path.split('.').count() {
                            return true;
                        }
                    }
                    None => return true,
                }
            }
            node.is_none()
        })
        .map(|p| (*p).to_owned())
        .collect()
}

impl Scenario {
    /// Parses and validates a scenario.
    pub fn from_toml_str(text: &str) -> std::result::Result<Self, ScenarioError> {
        let table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| ScenarioError::Syntax(e.to_string()))?;
        let missing = missing_keys(&table);
        if !missing.is_empty() {
            return Err(ScenarioError::Missing(missing));
        }
        let scenario: Scenario =
            toml::from_str(text).map_err(|e| ScenarioError::Syntax(e.to_string()))?;
        let problems = scenario.validate();
        if problems.is_empty() {
            Ok(scenario)
        } else {
            Err(ScenarioError::Invalid(problems))
        }
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    pub fn plant_params(&self) -> PlantParams {
        self.plant.params(self.control.fc)
    }

    pub fn filter_spec(&self) -> FilterSpec {
        self.filter.spec(self.control.fc)
    }

    pub fn steps(&self) -> usize {
        (self.duration * self.control.fc).round() as usize
    }

    /// Welch segment in control periods.
    pub fn segment(&self) -> usize {
        self.analysis.segment.unwrap_or(self.control.window)
    }

    /// Copy with one sweep value applied.
    pub fn with_sweep_value(&self, parameter: SweepParameter, value: &SweepValue) -> std::result::Result<Scenario, ScenarioError> {
        let bad = |msg: String| {
            ScenarioError::Invalid(vec![Diagnostic {
                path: format!("sweep.values ({parameter})"),
                message: msg,
            }])
        };
        let mut out = self.clone();
        match (parameter, value) {
            (SweepParameter::Lambda2, SweepValue::Int(v)) => out.control.lambda2 = *v as f64,
            (SweepParameter::Lambda2, SweepValue::Float(v)) => out.control.lambda2 = *v,
            (SweepParameter::Horizon, SweepValue::Int(v)) if *v >= 1 => out.control.horizon = *v as usize,
            (SweepParameter::KMax, SweepValue::Int(v)) if *v >= 1 => out.control.k_max = KMax(Some(*v as u32)),
            (SweepParameter::KMax, SweepValue::Float(v)) if v.is_infinite() && *v > 0.0 => {
                out.control.k_max = KMax(None)
            }
            (SweepParameter::KMax, SweepValue::Text(t)) if t.eq_ignore_ascii_case("inf") => {
                out.control.k_max = KMax(None)
            }
            _ => return Err(bad(format!("value {value} not valid"))),
        }
        out.name = format!("{}_{}_{}", self.name, parameter, value);
        out.sweep = None;
        let problems = out.validate();
        if problems.is_empty() {
            Ok(out)
        } else {
            Err(ScenarioError::Invalid(problems))
        }
    }

    /// Every schema and physics problem, in file order.
    pub fn validate(&self) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        let mut push = |path: &str, message: String| {
            out.push(Diagnostic {
                path: path.to_owned(),
                message,
            })
        };
        if self.schema_version != SCHEMA_VERSION {
            push(
                "schema_version",
                format!("unsupported version {}, expected {SCHEMA_VERSION}", self.schema_version),
            );
        }
        if !(self.duration.is_finite() && self.duration >= 0.0) {
            push("duration", format!("must be >= 0, got {}", self.duration));
        }

        let c = &self.control;
        let fc_ok = c.fc.is_finite() && c.fc > 0.0;
        if !fc_ok {
            push("control.fc", format!("must be positive, got {}", c.fc));
        }
        if let Err(e) = self.plant.params(if fc_ok { c.fc } else { 1.0 }).validate() {
            push("plant", e.to_string());
        }
        if !(self.plant.vref.is_finite() && self.plant.vref >= 0.0 && self.plant.vref <= self.plant.vin) {
            push("plant.vref", format!("must lie in [0, vin], got {}", self.plant.vref));
        }
        if !(self.plant.load_jitter.is_finite() && self.plant.load_jitter >= 0.0) {
            push("plant.load_jitter", format!("must be >= 0, got {}", self.plant.load_jitter));
        }
        if let Err(e) = c.engine().validate() {
            push("control.window", e.to_string());
        }
        match HorizonConfig::new(c.horizon) {
            Err(e) => push("control.horizon", e.to_string()),
            Ok(_) if c.horizon >= c.window => push(
                "control.horizon",
                format!("must be shorter than the window ({})", c.window),
            ),
            Ok(_) => {}
        }
        if let Err(e) = c.weights().validate() {
            push("control", e.to_string());
        }
        if c.resync_interval == 0 {
            push("control.resync_interval", "must be at least 1".into());
        }

        for (key, v) in [("pi.kp", self.pi.kp), ("pi.ki", self.pi.ki)] {
            if let Some(v) = v {
                if !(v.is_finite() && v >= 0.0) {
                    push(key, format!("must be >= 0, got {v}"));
                }
            }
        }

        if fc_ok {
            let spec = self.filter_spec();
            if let Err(e) = spec.validate(c.fc) {
                push("filter", e.to_string());
            }
            let nyquist = c.fc / 2.0;
            let band_ok = |lo: f64, hi: f64| lo >= 0.0 && hi <= nyquist && lo < hi;
            match self.reference {
                ReferenceSection::Zero => {}
                ReferenceSection::Flat { lo, hi, level } => {
                    if !band_ok(lo, hi) {
                        push("reference", format!("band {lo}..{hi} Hz outside (0, {nyquist}] Hz"));
                    }
                    if !(level.is_finite() && level >= 0.0) {
                        push("reference.level", format!("must be >= 0, got {level}"));
                    }
                }
                ReferenceSection::Calibrated { lo, hi } => {
                    if !band_ok(lo, hi) {
                        push("reference", format!("band {lo}..{hi} Hz outside (0, {nyquist}] Hz"));
                    }
                }
            }

            let mut last = f64::NEG_INFINITY;
            for (i, ev) in self.events.iter().enumerate() {
                let path = format!("events[{i}]");
                let t = ev.time();
                if !(t.is_finite() && t >= 0.0) {
                    push(&format!("{path}.time"), format!("must be >= 0, got {t}"));
                } else if t < last {
                    push(&format!("{path}.time"), format!("{t} s is earlier than the previous event at {last} s"));
                }
                last = last.max(t);
                match *ev {
                    EventSpec::LoadStep { load, .. } => {
                        let p = PlantParams { load, ..self.plant.params(c.fc) };
                        if let Err(e) = p.validate() {
                            push(&format!("{path}.load"), e.to_string());
                        }
                    }
                    EventSpec::GapMove { gap, center, rate, .. } => {
                        if let Err(e) = spec.move_gap(gap, center, c.fc) {
                            push(&path, e.to_string());
                        }
                        if let Some(r) = rate {
                            if !(r.is_finite() && r > 0.0) {
                                push(&format!("{path}.rate"), format!("must be positive, got {r}"));
                            }
                        }
                    }
                    EventSpec::Weights { lambda1, lambda2, .. } => {
                        let w = CostWeights {
                            lambda1: lambda1.unwrap_or(c.lambda1),
                            lambda2: lambda2.unwrap_or(c.lambda2),
                            ..c.weights()
                        };
                        if let Err(e) = w.validate() {
                            push(&path, e.to_string());
                        }
                    }
                    EventSpec::KMax { .. } => {}
                }
            }
        }

        let a = &self.analysis;
        if !(0.0..1.0).contains(&a.steady_state_fraction) {
            push("analysis.steady_state_fraction", format!("must lie in [0, 1), got {}", a.steady_state_fraction));
        }
        if !(0.0..1.0).contains(&a.overlap) {
            push("analysis.overlap", format!("must lie in [0, 1), got {}", a.overlap));
        }
        for (key, v) in [("analysis.segment", a.segment), ("analysis.spectrogram_window", a.spectrogram_window)] {
            if v.is_some_and(|v| v < 4) {
                push(key, "must be at least 4".into());
            }
        }
        if a.spectrogram_hop == Some(0) {
            push("analysis.spectrogram_hop", "must be at least 1".into());
        }
        if !(a.gap_flank.is_finite() && a.gap_flank > 0.0) {
            push("analysis.gap_flank", format!("must be positive, got {}", a.gap_flank));
        }
        if !(a.settle_tolerance > 0.0 && a.settle_window > 0.0) {
            push("analysis", "settle_tolerance and settle_window must be positive".into());
        }
        if a.snapshot_interval.is_some_and(|s| !(s > 0.0)) {
            push("analysis.snapshot_interval", "must be positive".into());
        }
        if self.baseline.enabled {
            if self.baseline.oversample == 0 {
                push("baseline.oversample", "must be at least 1".into());
            }
            if let Some(f) = self.baseline.frequency {
                let limit = c.fc * self.baseline.oversample as f64 / 2.0;
                if !(f > 0.0 && f < limit) {
                    push("baseline.frequency", format!("must lie in (0, {limit}) Hz, got {f}"));
                }
            }
            if let Some(d) = self.baseline.duty {
                if !(0.0..=1.0).contains(&d) {
                    push("baseline.duty", format!("must lie in [0, 1], got {d}"));
                }
            }
        }
        if let Some(sweep) = &self.sweep {
            if sweep.values.is_empty() {
                push("sweep.values", "must not be empty".into());
            }
            for (i, v) in sweep.values.iter().enumerate() {
                let ok = match (sweep.parameter, v) {
                    (SweepParameter::Lambda2, SweepValue::Int(x)) => *x >= 0,
                    (SweepParameter::Lambda2, SweepValue::Float(x)) => x.is_finite() && *x >= 0.0,
                    (SweepParameter::Horizon, SweepValue::Int(x)) => {
                        *x >= 1 && *x as usize <= MAX_HORIZON && (*x as usize) < c.window
                    }
                    (SweepParameter::KMax, SweepValue::Int(x)) => *x >= 1,
                    (SweepParameter::KMax, SweepValue::Float(x)) => x.is_infinite() && *x > 0.0,
                    (SweepParameter::KMax, SweepValue::Text(t)) => t.eq_ignore_ascii_case("inf"),
                    _ => false,
                };
                if !ok {
                    push(&format!("sweep.values[{i}]"), format!("{v} is not a valid {}", sweep.parameter));
                }
            }
        }
        out
    }
}
