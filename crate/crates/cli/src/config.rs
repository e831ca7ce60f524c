//! JSON scenario documents.
//!
//! A document is parsed with unknown keys rejected, then resolved: every
//! default is filled in so the resolved [`Scenario`] serializes back into a
//! complete, self-describing document.

use std::fmt;

use jcwigner::{AtomPrep, CatParity, Complex64, FieldSpec, GridSpec, DEFAULT_EPS_TAIL};
use serde::{Deserialize, Serialize};

/// Default entrywise tolerance for oracle cross-checks of the field density matrix.
pub const DEFAULT_VERIFY_TOLERANCE: f64 = 1e-9;
/// Default tolerance for oracle cross-checks of Wigner values.
pub const DEFAULT_VERIFY_WIGNER_TOLERANCE: f64 = 1e-6;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("config error at `{path}` (line {line}, column {column}): {message}")]
    Schema {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("config error at `{key}`: {reason}")]
    Invalid { key: String, reason: String },
    #[error("unknown preset or unreadable config `{0}`: {1}")]
    Source(String, String),
}

fn invalid(key: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key: key.to_string(),
        reason: reason.into(),
    }
}

/// Complex number as magnitude and phase (radians).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Polar {
    pub r: f64,
    #[serde(default)]
    pub theta: f64,
}

impl Polar {
    pub fn to_complex(self) -> Complex64 {
        Complex64::from_polar(self.r, self.theta)
    }
}

/// Atomic amplitude as magnitude and phase (radians).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Amplitude {
    pub mag: f64,
    #[serde(default)]
    pub phase: f64,
}

impl Amplitude {
    pub fn to_complex(self) -> Complex64 {
        Complex64::from_polar(self.mag, self.phase)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    #[default]
    Even,
    Odd,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawField", into = "RawField")]
pub enum FieldConfig {
    Coherent {
        alpha: Polar,
    },
    Cat {
        alpha: Polar,
        phi: f64,
        parity: Parity,
    },
    Thermal {
        nbar: f64,
    },
    Fock {
        n: usize,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum FieldKind {
    Coherent,
    Cat,
    Thermal,
    Fock,
}

/// Flat form of [`FieldConfig`], so that diagnostics keep nested key paths.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawField {
    kind: FieldKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    alpha: Option<Polar>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    phi: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    parity: Option<Parity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    nbar: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    n: Option<usize>,
}

impl TryFrom<RawField> for FieldConfig {
    type Error = String;

    fn try_from(raw: RawField) -> Result<Self, String> {
        let allowed: &[&str] = match raw.kind {
            FieldKind::Coherent => &["alpha"],
            FieldKind::Cat => &["alpha", "phi", "parity"],
            FieldKind::Thermal => &["nbar"],
            FieldKind::Fock => &["n"],
        };
        let present = [
            ("alpha", raw.alpha.is_some()),
            ("phi", raw.phi.is_some()),
            ("parity", raw.parity.is_some()),
            ("nbar", raw.nbar.is_some()),
            ("n", raw.n.is_some()),
        ];
        for (key, set) in present {
            if set && !allowed.contains(&key) {
                return Err(format!("key `{key}` does not apply to kind {:?}", raw.kind));
            }
        }
        let need = |key: &str| format!("missing key `{key}` for kind {:?}", raw.kind);
        Ok(match raw.kind {
            FieldKind::Coherent => FieldConfig::Coherent {
                alpha: raw.alpha.ok_or_else(|| need("alpha"))?,
            },
            FieldKind::Cat => FieldConfig::Cat {
                alpha: raw.alpha.ok_or_else(|| need("alpha"))?,
                phi: raw.phi.unwrap_or(0.0),
                parity: raw.parity.unwrap_or_default(),
            },
            FieldKind::Thermal => FieldConfig::Thermal {
                nbar: raw.nbar.ok_or_else(|| need("nbar"))?,
            },
            FieldKind::Fock => FieldConfig::Fock {
                n: raw.n.ok_or_else(|| need("n"))?,
            },
        })
    }
}

impl From<FieldConfig> for RawField {
    fn from(f: FieldConfig) -> Self {
        let mut raw = RawField {
            kind: FieldKind::Coherent,
            alpha: None,
            phi: None,
            parity: None,
            nbar: None,
            n: None,
        };
        match f {
            FieldConfig::Coherent { alpha } => raw.alpha = Some(alpha),
            FieldConfig::Cat { alpha, phi, parity } => {
                raw.kind = FieldKind::Cat;
                raw.alpha = Some(alpha);
                raw.phi = Some(phi);
                raw.parity = Some(parity);
            }
            FieldConfig::Thermal { nbar } => {
                raw.kind = FieldKind::Thermal;
                raw.nbar = Some(nbar);
            }
            FieldConfig::Fock { n } => {
                raw.kind = FieldKind::Fock;
                raw.n = Some(n);
            }
        }
        raw
    }
}

impl FieldConfig {
    pub fn to_spec(&self) -> FieldSpec {
        match *self {
            FieldConfig::Coherent { alpha } => FieldSpec::Coherent {
                alpha: alpha.to_complex(),
            },
            FieldConfig::Cat { alpha, phi, parity } => FieldSpec::Cat {
                alpha: alpha.to_complex(),
                phi,
                parity: match parity {
                    Parity::Even => CatParity::Even,
                    Parity::Odd => CatParity::Odd,
                },
            },
            FieldConfig::Thermal { nbar } => FieldSpec::Thermal { nbar },
            FieldConfig::Fock { n } => FieldSpec::Fock { n },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomConfig {
    pub c_a: Amplitude,
    pub c_b: Amplitude,
}

impl AtomConfig {
    pub fn to_prep(&self) -> jcwigner::Result<AtomPrep> {
        AtomPrep::new(self.c_a.to_complex(), self.c_b.to_complex())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeRange {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl TimeRange {
    /// `start + i·step` for every `i` with the sample not beyond `stop`.
    pub fn samples(&self) -> Vec<f64> {
        let span = (self.stop - self.start) / self.step;
        let count = (span + 1e-9).floor() as usize;
        (0..=count).map(|i| self.start + i as f64 * self.step).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum TimeSamples {
    Range(TimeRange),
    List(Vec<f64>),
}

impl Default for TimeSamples {
    fn default() -> Self {
        TimeSamples::Range(TimeRange {
            start: 0.0,
            stop: 12.0,
            step: 0.01,
        })
    }
}

impl TimeSamples {
    pub fn samples(&self) -> Vec<f64> {
        match self {
            TimeSamples::Range(r) => r.samples(),
            TimeSamples::List(v) => v.clone(),
        }
    }

    fn bounds(&self) -> (f64, f64) {
        match self {
            TimeSamples::Range(r) => (r.start, r.stop),
            TimeSamples::List(v) => (v.first().copied().unwrap_or(0.0), v.last().copied().unwrap_or(0.0)),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Point {
    pub re: f64,
    pub im: f64,
}

/// Grid overrides; after resolution every field is set.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<Point>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub half_width: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Output {
    Inversion,
    Wigner,
    Metrics,
    Heatmap,
}

impl Output {
    pub const ALL: [Output; 4] = [Output::Inversion, Output::Wigner, Output::Metrics, Output::Heatmap];
}

fn default_outputs() -> Vec<Output> {
    Output::ALL.to_vec()
}

fn default_verify_tolerance() -> f64 {
    DEFAULT_VERIFY_TOLERANCE
}

fn default_verify_wigner_tolerance() -> f64 {
    DEFAULT_VERIFY_WIGNER_TOLERANCE
}

fn default_eps_tail() -> f64 {
    DEFAULT_EPS_TAIL
}

fn default_name() -> String {
    "scenario".to_string()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default = "default_name")]
    pub name: String,
    pub initial_field: FieldConfig,
    pub atom: AtomConfig,
    #[serde(default)]
    pub detuning: f64,
    #[serde(default)]
    pub time_samples: TimeSamples,
    #[serde(default)]
    pub snapshot_times: Vec<f64>,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default = "default_outputs")]
    pub outputs: Vec<Output>,
    #[serde(default)]
    pub verify: bool,
    #[serde(default = "default_verify_tolerance")]
    pub verify_tolerance: f64,
    #[serde(default = "default_verify_wigner_tolerance")]
    pub verify_wigner_tolerance: f64,
    #[serde(default = "default_eps_tail")]
    pub eps_tail: f64,
    /// Fock cutoff; chosen from `eps_tail` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nmax: Option<usize>,
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", serde_json::to_string_pretty(self).map_err(|_| fmt::Error)?)
    }
}

impl Scenario {
    pub fn field_spec(&self) -> FieldSpec {
        self.initial_field.to_spec()
    }

    pub fn atom_prep(&self) -> AtomPrep {
        self.atom.to_prep().expect("validated at parse time")
    }

    /// The resolved sampling grid.
    pub fn grid_spec(&self) -> GridSpec {
        let g = self.grid;
        let c = g.center.expect("resolved");
        GridSpec::new(Complex64::new(c.re, c.im), g.half_width.expect("resolved"), g.step.expect("resolved"))
            .expect("validated at parse time")
    }

    pub fn wants(&self, out: Output) -> bool {
        self.outputs.contains(&out)
    }

    /// Fills every default and checks cross-field constraints.
    pub fn resolve(mut self) -> Result<Self, ConfigError> {
        let spec = self.field_spec();
        spec.validate().map_err(|e| invalid("initial_field", e.to_string()))?;
        self.atom.to_prep().map_err(|e| invalid("atom", e.to_string()))?;
        if !self.detuning.is_finite() {
            return Err(invalid("detuning", "must be finite"));
        }
        check_times(&self.time_samples)?;
        let (lo, hi) = self.time_samples.bounds();
        for (i, &t) in self.snapshot_times.iter().enumerate() {
            if !(t >= lo - 1e-12 && t <= hi + 1e-12) {
                return Err(invalid(
                    &format!("snapshot_times[{i}]"),
                    format!("{t} lies outside the sampled range [{lo}, {hi}]"),
                ));
            }
        }

        let default = GridSpec::default_for(&spec);
        let center = self.grid.center.unwrap_or(Point {
            re: default.center().re,
            im: default.center().im,
        });
        let half_width = self.grid.half_width.unwrap_or(default.half_width());
        let step = self.grid.step.unwrap_or(default.step());
        GridSpec::new(Complex64::new(center.re, center.im), half_width, step)
            .map_err(|e| invalid("grid", e.to_string()))?;
        self.grid = GridConfig {
            center: Some(center),
            half_width: Some(half_width),
            step: Some(step),
        };

        self.outputs.sort();
        self.outputs.dedup();
        if !(self.eps_tail > 0.0 && self.eps_tail <= jcwigner::field::MAX_EPS_TAIL) {
            return Err(invalid(
                "eps_tail",
                format!("must lie in (0, {}], got {}", jcwigner::field::MAX_EPS_TAIL, self.eps_tail),
            ));
        }
        if !(self.verify_tolerance >= 0.0) {
            return Err(invalid("verify_tolerance", "must be a nonnegative number"));
        }
        if !(self.verify_wigner_tolerance >= 0.0) {
            return Err(invalid("verify_wigner_tolerance", "must be a nonnegative number"));
        }
        Ok(self)
    }
}

fn check_times(samples: &TimeSamples) -> Result<(), ConfigError> {
    match samples {
        TimeSamples::Range(r) => {
            if !(r.start.is_finite() && r.stop.is_finite() && r.start >= 0.0 && r.stop >= r.start) {
                return Err(invalid("time_samples.range", "need 0 <= start <= stop"));
            }
            if !(r.step.is_finite() && r.step > 0.0) {
                return Err(invalid("time_samples.range.step", "must be > 0"));
            }
            if (r.stop - r.start) / r.step > 1e7 {
                return Err(invalid("time_samples.range", "more than 1e7 samples"));
            }
        }
        TimeSamples::List(v) => {
            if v.is_empty() {
                return Err(invalid("time_samples.list", "must not be empty"));
            }
            for (i, &t) in v.iter().enumerate() {
                if !(t.is_finite() && t >= 0.0) {
                    return Err(invalid(&format!("time_samples.list[{i}]"), "must be finite and >= 0"));
                }
                if i > 0 && t < v[i - 1] {
                    return Err(invalid(&format!("time_samples.list[{i}]"), "times must be nondecreasing"));
                }
            }
        }
    }
    Ok(())
}

/// Parses and resolves a scenario document.
pub fn parse_scenario(text: &str) -> Result<Scenario, ConfigError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let raw: Scenario = serde_path_to_error::deserialize(de).map_err(|err| {
        let path = err.path().to_string();
        let inner = err.into_inner();
        ConfigError::Schema {
            path,
            line: inner.line(),
            column: inner.column(),
            message: strip_position(&inner.to_string()),
        }
    })?;
    raw.resolve()
}

fn strip_position(msg: &str) -> String {
    match msg.rfind(" at line ") {
        Some(i) => msg[..i].to_string(),
        None => msg.to_string(),
    }
}

pub const PRESET_NAMES: [&str; 4] = ["fig1", "fig2", "fig3", "fig4"];

pub fn preset_text(name: &str) -> Option<&'static str> {
    Some(match name {
        "fig1" => include_str!("../scenarios/fig1.json"),
        "fig2" => include_str!("../scenarios/fig2.json"),
        "fig3" => include_str!("../scenarios/fig3.json"),
        "fig4" => include_str!("../scenarios/fig4.json"),
        _ => return None,
    })
}

pub fn preset(name: &str) -> Option<Scenario> {
    preset_text(name).map(|t| parse_scenario(t).expect("built-in presets are valid"))
}

/// A preset name or a path to a JSON document.
pub fn load(source: &str) -> Result<Scenario, ConfigError> {
    if let Some(s) = preset(source) {
        return Ok(s);
    }
    let text = std::fs::read_to_string(source).map_err(|e| ConfigError::Source(source.to_string(), e.to_string()))?;
    parse_scenario(&text)
}
