//! Run configuration: TOML in, validated typed values out.
//!
//! Every frequency in the file is an ordinary frequency in Hz, every time in
//! seconds. Unknown keys are rejected with their location and, where one is
//! close, a suggested key.

use std::collections::BTreeMap;
use std::fmt;

use ionmotion::dynamics::{EnvelopeKind, PropagationFrame, PropagationSettings, PulseEnvelope};
use ionmotion::experiments::{InitialState, Readout};
use ionmotion::qcore::{HilbertSpace, THERMAL_TAIL_TOLERANCE};
use ionmotion::units::{hz_to_rad, ATOMIC_MASS_UNIT};
use ionmotion::{DriveConfig, IonTrapConfig};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("line {line}, column {column}: {message}{}", hint(.suggestion))]
    Parse { line: usize, column: usize, message: String, suggestion: Option<String> },
    #[error("{path}: {message}")]
    Semantic { path: String, message: String },
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
}

fn hint(s: &Option<String>) -> String {
    s.as_ref().map(|k| format!(" (did you mean `{k}`?)")).unwrap_or_default()
}

fn semantic(path: &str, message: impl fmt::Display) -> ConfigError {
    ConfigError::Semantic { path: path.to_string(), message: message.to_string() }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub trap: TrapSection,
    pub drive: DriveSection,
    #[serde(default)]
    pub envelope: EnvelopeSection,
    #[serde(default)]
    pub settings: SettingsSection,
    #[serde(default)]
    pub state: StateSection,
    #[serde(default)]
    pub readout: ReadoutSection,
    #[serde(default)]
    pub output: OutputSection,
    pub spectroscopy: Option<SpectroscopySection>,
    pub rabi: Option<RabiSection>,
    pub bessel: Option<BesselSection>,
    pub sideband: Option<SidebandSection>,
    pub cooling: Option<CoolingSection>,
    pub thermometry: Option<ThermometrySection>,
}

/// Ion and trap. Defaults to 25Mg+ in the surface trap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrapSection {
    /// Atomic mass units.
    pub ion_mass_u: f64,
    /// Hz by mode label.
    pub mode_freqs: BTreeMap<String, f64>,
    /// Hz.
    pub qubit_freq: f64,
    /// Hz per tesla.
    pub field_sensitivity: f64,
    /// Tesla.
    pub static_field: f64,
}

impl Default for TrapSection {
    fn default() -> Self {
        let t = IonTrapConfig::mg25_surface_trap();
        Self {
            ion_mass_u: t.ion_mass / ATOMIC_MASS_UNIT,
            mode_freqs: t.mode_freqs,
            qubit_freq: t.qubit_freq,
            field_sensitivity: t.field_sensitivity,
            static_field: t.static_field,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriveSection {
    pub mode: String,
    #[serde(default)]
    pub gradient_freq: f64,
    #[serde(default)]
    pub gradient_projection: f64,
    #[serde(default)]
    pub field_at_ion: f64,
    #[serde(default)]
    pub mw_rabi: f64,
    #[serde(default)]
    pub mw_detuning: f64,
    #[serde(default)]
    pub gradient_phase: f64,
    #[serde(default)]
    pub mw_phase: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Shape {
    Blackman,
    Rectangular,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvelopeSection {
    #[serde(default = "default_shape")]
    pub kind: Shape,
    #[serde(default = "default_ramp")]
    pub ramp_time: f64,
    /// Full-amplitude time; give this or `total_time`.
    pub plateau_time: Option<f64>,
    /// Ramps plus plateau.
    pub total_time: Option<f64>,
}

fn default_shape() -> Shape {
    Shape::Blackman
}
fn default_ramp() -> f64 {
    10e-6
}

impl Default for EnvelopeSection {
    fn default() -> Self {
        Self { kind: default_shape(), ramp_time: default_ramp(), plateau_time: None, total_time: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FrameName {
    Rotating,
    Lab,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SettingsSection {
    pub max_step: Option<f64>,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_guard")]
    pub truncation_guard: f64,
    #[serde(default = "default_frame")]
    pub frame: FrameName,
}

fn default_samples() -> usize {
    2
}
fn default_guard() -> f64 {
    1e-6
}
fn default_frame() -> FrameName {
    FrameName::Rotating
}

impl Default for SettingsSection {
    fn default() -> Self {
        Self { max_step: None, samples: default_samples(), truncation_guard: default_guard(), frame: default_frame() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitialName {
    Ground,
    Thermal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateSection {
    #[serde(default = "default_fock")]
    pub fock_dim: usize,
    #[serde(default = "default_initial")]
    pub initial: InitialName,
    /// Mean phonon number of the thermal state.
    pub nbar: Option<f64>,
}

fn default_fock() -> usize {
    12
}
fn default_initial() -> InitialName {
    InitialName::Ground
}

impl Default for StateSection {
    fn default() -> Self {
        Self { fock_dim: default_fock(), initial: default_initial(), nbar: None }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReadoutSection {
    /// Projective measurements per point; 0 reports expectation values.
    #[serde(default)]
    pub shots: u32,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    /// CSV path; standard output when absent.
    pub path: Option<String>,
}

/// `start, start + step, ...` up to and including `stop`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Range {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Range {
    pub fn values(&self, path: &str) -> Result<Vec<f64>, ConfigError> {
        let Range { start, stop, step } = *self;
        if ![start, stop, step].iter().all(|v| v.is_finite()) || !(step > 0.0) || stop < start {
            return Err(semantic(path, "need finite start <= stop and step > 0"));
        }
        let n = ((stop - start) / step * (1.0 + 1e-12)).floor() as usize + 1;
        if n > 1_000_000 {
            return Err(semantic(path, format!("{n} points is too many")));
        }
        Ok((0..n).map(|k| start + k as f64 * step).collect())
    }
}

/// Half-windows of `half_steps` points at `step` Hz around every predicted
/// line, plus an optional coarse grid of `coarse` Hz over ±`span` Hz.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Windows {
    #[serde(default = "default_half_steps")]
    pub half_steps: u32,
    #[serde(default = "default_window_step")]
    pub step: f64,
    #[serde(default)]
    pub coarse: f64,
    #[serde(default)]
    pub span: f64,
}

fn default_half_steps() -> u32 {
    2
}
fn default_window_step() -> f64 {
    10e3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectroscopySection {
    /// Explicit detunings, Hz.
    pub detunings: Option<Vec<f64>>,
    pub detuning_range: Option<Range>,
    pub windows: Option<Windows>,
    /// Modes scanned and overlaid; defaults to `drive.mode`.
    pub modes: Option<Vec<String>>,
    /// Gradient projection per mode, T/m; defaults to `drive.gradient_projection`.
    #[serde(default)]
    pub projections: BTreeMap<String, f64>,
    #[serde(default = "default_comb")]
    pub comb_orders: u32,
}

fn default_comb() -> u32 {
    2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RabiSection {
    /// Plateau lengths, seconds.
    pub plateaus: Option<Vec<f64>>,
    pub plateau_range: Option<Range>,
    #[serde(default = "yes")]
    pub fit: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BesselSection {
    /// Values of 4Ωz/ω_g.
    pub arguments: Option<Vec<f64>>,
    pub argument_range: Option<Range>,
    #[serde(default = "default_orders")]
    pub orders: Vec<u32>,
    #[serde(default = "default_bessel_samples")]
    pub samples: usize,
    #[serde(default = "default_max_span")]
    pub max_span: f64,
    #[serde(default = "default_floor")]
    pub contrast_floor: f64,
    /// Locate the first zero of the m = 0 rate on this grid.
    pub zero_scan: Option<Range>,
}

fn default_orders() -> Vec<u32> {
    (0..=5).collect()
}
fn default_bessel_samples() -> usize {
    128
}
fn default_max_span() -> f64 {
    3e-3
}
fn default_floor() -> f64 {
    1e-4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SidebandSection {
    /// Values of 2Ωμ/(ω_r − ω_g).
    pub ratios: Vec<f64>,
    #[serde(default = "default_sb_samples")]
    pub samples: usize,
    #[serde(default = "default_periods")]
    pub periods: f64,
    #[serde(default = "default_window_fraction")]
    pub window_fraction: f64,
    /// Hz.
    #[serde(default = "default_min_window")]
    pub min_window: f64,
    #[serde(default = "default_spacing")]
    pub spacing: f64,
}

fn default_sb_samples() -> usize {
    48
}
fn default_periods() -> f64 {
    2.5
}
fn default_window_fraction() -> f64 {
    0.015
}
fn default_min_window() -> f64 {
    5e3
}
fn default_spacing() -> f64 {
    0.25
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoolingSection {
    #[serde(default = "default_pulses")]
    pub pulses: usize,
    #[serde(default)]
    pub continuous_gradient: bool,
    /// Analysis pulse plateau, seconds; defaults to the sideband π-pulse area.
    pub analysis_plateau: Option<f64>,
}

fn default_pulses() -> usize {
    12
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThermometrySection {
    pub analysis_plateau: Option<f64>,
}

/// Line and column (1-based) of byte `offset` in `text`.
fn position(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

/// Physics symbols people tend to type, mapped to the keys that hold them.
const ALIASES: [(&str, &str); 10] = [
    ("omega_q", "qubit_freq"),
    ("omega_0", "qubit_freq"),
    ("omega_r", "mode_freqs"),
    ("omega_g", "gradient_freq"),
    ("omega_mu", "mw_rabi"),
    ("delta", "mw_detuning"),
    ("b_g", "field_at_ion"),
    ("grad_b", "gradient_projection"),
    ("mass", "ion_mass_u"),
    ("n_bar", "nbar"),
];

fn suggest(unknown: &str, expected: &[&str]) -> Option<String> {
    let key = unknown.to_ascii_lowercase();
    if let Some((_, k)) = ALIASES.iter().find(|(a, k)| *a == key && expected.contains(k)) {
        return Some(k.to_string());
    }
    expected
        .iter()
        .map(|e| (strsim::jaro_winkler(&key, e), *e))
        .filter(|(s, _)| *s >= 0.8)
        .max_by(|a, b| a.0.total_cmp(&b.0))
        .map(|(_, e)| e.to_string())
}

/// Pulls `unknown field `x`, expected one of `a`, `b`` apart.
fn unknown_field(message: &str) -> Option<(String, Vec<String>)> {
    let rest = message.split("unknown field `").nth(1)?;
    let name = rest.split('`').next()?.to_string();
    let expected = rest
        .split_once("expected")
        .map(|(_, list)| list.split('`').skip(1).step_by(2).map(str::to_string).collect())
        .unwrap_or_default();
    Some((name, expected))
}

/// Parses and validates a configuration; warnings are returned alongside.
pub fn parse_config(text: &str) -> Result<(RunConfig, Vec<String>), ConfigError> {
    let config: RunConfig = toml::from_str(text).map_err(|e| {
        let (line, column) = e.span().map_or((1, 1), |s| position(text, s.start));
        let message = e.message().trim().to_string();
        let suggestion = unknown_field(&message).and_then(|(name, expected)| {
            let refs: Vec<&str> = expected.iter().map(String::as_str).collect();
            suggest(&name, &refs)
        });
        ConfigError::Parse { line, column, message, suggestion }
    })?;
    let warnings = config.validate()?;
    Ok((config, warnings))
}

fn finite_nonneg(path: &str, v: f64) -> Result<(), ConfigError> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(semantic(path, format!("must be finite and >= 0, got {v}")))
    }
}

fn finite(path: &str, v: f64) -> Result<(), ConfigError> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(semantic(path, format!("must be finite, got {v}")))
    }
}

impl RunConfig {
    /// Checks every field, returning warnings for legal but doubtful values.
    pub fn validate(&self) -> Result<Vec<String>, ConfigError> {
        let mut warnings = Vec::new();
        let t = &self.trap;
        if !(t.ion_mass_u > 0.0) || !t.ion_mass_u.is_finite() {
            return Err(semantic("trap.ion_mass_u", format!("must be > 0, got {}", t.ion_mass_u)));
        }
        if t.mode_freqs.is_empty() {
            return Err(semantic("trap.mode_freqs", "at least one mode is required"));
        }
        for (label, f) in &t.mode_freqs {
            if !(*f > 0.0) || !f.is_finite() {
                return Err(semantic(&format!("trap.mode_freqs.{label}"), format!("must be > 0, got {f}")));
            }
        }
        if !(t.qubit_freq > 0.0) || !t.qubit_freq.is_finite() {
            return Err(semantic("trap.qubit_freq", format!("must be > 0, got {}", t.qubit_freq)));
        }
        finite("trap.field_sensitivity", t.field_sensitivity)?;
        finite("trap.static_field", t.static_field)?;

        let d = &self.drive;
        let Some(fr) = t.mode_freqs.get(&d.mode) else {
            let known: Vec<&str> = t.mode_freqs.keys().map(String::as_str).collect();
            return Err(semantic("drive.mode", format!("unknown mode `{}`; trap has {}", d.mode, known.join(", "))));
        };
        finite_nonneg("drive.gradient_freq", d.gradient_freq)?;
        finite_nonneg("drive.mw_rabi", d.mw_rabi)?;
        for (k, v) in [
            ("drive.gradient_projection", d.gradient_projection),
            ("drive.field_at_ion", d.field_at_ion),
            ("drive.mw_detuning", d.mw_detuning),
            ("drive.gradient_phase", d.gradient_phase),
            ("drive.mw_phase", d.mw_phase),
        ] {
            finite(k, v)?;
        }
        if d.gradient_freq == *fr {
            return Err(semantic("drive.gradient_freq", "equals the mode frequency; the sideband formulas are singular"));
        }
        if 2.0 * d.mw_rabi >= (fr - d.gradient_freq).abs() {
            warnings.push(format!(
                "drive: 2Ωμ/2π = {} Hz is not below |ω_r − ω_g|/2π = {} Hz; sideband experiments will reject it",
                2.0 * d.mw_rabi,
                (fr - d.gradient_freq).abs()
            ));
        }

        let e = &self.envelope;
        finite_nonneg("envelope.ramp_time", e.ramp_time)?;
        if e.plateau_time.is_some() && e.total_time.is_some() {
            return Err(semantic("envelope", "give plateau_time or total_time, not both"));
        }
        if let Some(p) = e.plateau_time {
            finite_nonneg("envelope.plateau_time", p)?;
        }
        if let Some(total) = e.total_time {
            if !(total >= 2.0 * e.ramp_time) || !total.is_finite() {
                return Err(semantic("envelope.total_time", format!("must be at least twice ramp_time, got {total}")));
            }
        }

        let s = &self.settings;
        if let Some(h) = s.max_step {
            if !(h > 0.0) || !h.is_finite() {
                return Err(semantic("settings.max_step", format!("must be > 0, got {h}")));
            }
        }
        if !(s.truncation_guard > 0.0) || !(s.truncation_guard < 1.0) {
            return Err(semantic("settings.truncation_guard", format!("must lie in (0, 1), got {}", s.truncation_guard)));
        }
        if s.frame == FrameName::Lab {
            let ratio = d.mw_rabi / t.qubit_freq;
            if ratio > 0.01 {
                warnings.push(format!("settings.frame: Ωμ/ω₀ = {ratio:.2e}; rotating-wave corrections are not small"));
            }
        }

        let st = &self.state;
        if st.fock_dim < 2 {
            return Err(semantic("state.fock_dim", format!("must be >= 2, got {}", st.fock_dim)));
        }
        match (st.initial, st.nbar) {
            (InitialName::Thermal, None) => return Err(semantic("state.nbar", "required for a thermal initial state")),
            (InitialName::Thermal, Some(n)) => {
                finite_nonneg("state.nbar", n)?;
                let q = n / (n + 1.0);
                let tail = q.powi(st.fock_dim as i32);
                if tail > THERMAL_TAIL_TOLERANCE {
                    return Err(semantic(
                        "state.fock_dim",
                        format!("thermal tail {tail:.2e} above {THERMAL_TAIL_TOLERANCE:.0e}; increase fock_dim"),
                    ));
                }
                if tail > 0.1 * THERMAL_TAIL_TOLERANCE {
                    warnings.push(format!(
                        "state.fock_dim: thermal tail {tail:.2e} leaves little margin below the truncation guard"
                    ));
                }
            }
            (InitialName::Ground, Some(_)) => warnings.push("state.nbar: ignored for a ground initial state".into()),
            (InitialName::Ground, None) => {}
        }
        if self.readout.shots == 0 && self.readout.seed != 0 {
            warnings.push("readout.seed: ignored without shots".into());
        }

        if let Some(sp) = &self.spectroscopy {
            let sources = [sp.detunings.is_some(), sp.detuning_range.is_some(), sp.windows.is_some()];
            if sources.iter().filter(|b| **b).count() != 1 {
                return Err(semantic("spectroscopy", "give exactly one of detunings, detuning_range, windows"));
            }
            if let Some(list) = &sp.detunings {
                for v in list {
                    finite("spectroscopy.detunings", *v)?;
                }
            }
            if let Some(r) = &sp.detuning_range {
                r.values("spectroscopy.detuning_range")?;
            }
            if let Some(w) = &sp.windows {
                if !(w.step > 0.0) {
                    return Err(semantic("spectroscopy.windows.step", "must be > 0"));
                }
                finite_nonneg("spectroscopy.windows.coarse", w.coarse)?;
                finite_nonneg("spectroscopy.windows.span", w.span)?;
            }
            for m in sp.modes.iter().flatten().chain(sp.projections.keys()) {
                if !t.mode_freqs.contains_key(m) {
                    return Err(semantic("spectroscopy.modes", format!("unknown mode `{m}`")));
                }
            }
            if self.envelope.plateau_time.is_none() && self.envelope.total_time.is_none() {
                return Err(semantic("envelope", "spectroscopy needs plateau_time or total_time"));
            }
        }
        if let Some(r) = &self.rabi {
            if r.plateaus.is_some() == r.plateau_range.is_some() {
                return Err(semantic("rabi", "give exactly one of plateaus, plateau_range"));
            }
            for v in r.plateaus.iter().flatten() {
                finite_nonneg("rabi.plateaus", *v)?;
            }
            if let Some(range) = &r.plateau_range {
                if range.start < 0.0 {
                    return Err(semantic("rabi.plateau_range.start", "must be >= 0"));
                }
                range.values("rabi.plateau_range")?;
            }
        }
        if let Some(b) = &self.bessel {
            if b.arguments.is_some() == b.argument_range.is_some() {
                return Err(semantic("bessel", "give exactly one of arguments, argument_range"));
            }
            for v in b.arguments.iter().flatten() {
                finite_nonneg("bessel.arguments", *v)?;
            }
            if let Some(r) = &b.argument_range {
                r.values("bessel.argument_range")?;
            }
            if let Some(r) = &b.zero_scan {
                r.values("bessel.zero_scan")?;
            }
            if b.samples < 8 {
                return Err(semantic("bessel.samples", "must be >= 8"));
            }
            if !(b.max_span > 0.0) || !(b.contrast_floor >= 0.0) {
                return Err(semantic("bessel", "max_span must be > 0 and contrast_floor >= 0"));
            }
        }
        if let Some(sb) = &self.sideband {
            if sb.ratios.is_empty() {
                return Err(semantic("sideband.ratios", "must not be empty"));
            }
            for v in &sb.ratios {
                finite_nonneg("sideband.ratios", *v)?;
                if *v >= 1.0 {
                    warnings.push(format!("sideband.ratios: {v} has no sideband resonance and will be skipped"));
                }
            }
            if sb.samples < 8 {
                return Err(semantic("sideband.samples", "must be >= 8"));
            }
            if !(sb.periods >= 1.25) || !(sb.window_fraction > 0.0) || !(sb.min_window >= 0.0) || !(sb.spacing > 0.0) {
                return Err(semantic("sideband", "need periods >= 1.25, window_fraction > 0, min_window >= 0, spacing > 0"));
            }
        }
        if let Some(c) = &self.cooling {
            if self.envelope.plateau_time.is_none() && self.envelope.total_time.is_none() {
                return Err(semantic("envelope", "cooling needs plateau_time or total_time for its pulses"));
            }
            if let Some(p) = c.analysis_plateau {
                finite_nonneg("cooling.analysis_plateau", p)?;
            }
        }
        if let Some(p) = self.thermometry.as_ref().and_then(|t| t.analysis_plateau) {
            finite_nonneg("thermometry.analysis_plateau", p)?;
        }
        Ok(warnings)
    }

    pub fn trap_config(&self) -> IonTrapConfig {
        IonTrapConfig {
            ion_mass: self.trap.ion_mass_u * ATOMIC_MASS_UNIT,
            mode_freqs: self.trap.mode_freqs.clone(),
            qubit_freq: self.trap.qubit_freq,
            field_sensitivity: self.trap.field_sensitivity,
            static_field: self.trap.static_field,
        }
    }

    pub fn drive_config(&self) -> DriveConfig {
        let d = &self.drive;
        DriveConfig {
            gradient_freq: d.gradient_freq,
            gradient_projection: d.gradient_projection,
            field_at_ion: d.field_at_ion,
            mw_rabi: d.mw_rabi,
            mw_detuning: d.mw_detuning,
            mode: d.mode.clone(),
            gradient_phase: d.gradient_phase,
            mw_phase: d.mw_phase,
        }
    }

    /// Envelope with the configured plateau (zero if none given).
    pub fn envelope(&self) -> PulseEnvelope {
        let e = &self.envelope;
        let kind = match e.kind {
            Shape::Blackman => EnvelopeKind::Blackman,
            Shape::Rectangular => EnvelopeKind::Rectangular,
        };
        let plateau = match (e.plateau_time, e.total_time) {
            (Some(p), _) => p,
            (None, Some(total)) => total - 2.0 * e.ramp_time,
            (None, None) => 0.0,
        };
        PulseEnvelope { kind, ramp_time: e.ramp_time, plateau_time: plateau }
    }

    pub fn settings(&self) -> PropagationSettings {
        let s = &self.settings;
        PropagationSettings {
            max_step: s.max_step,
            samples: s.samples,
            truncation_guard: s.truncation_guard,
            frame: match s.frame {
                FrameName::Rotating => PropagationFrame::Rotating,
                FrameName::Lab => PropagationFrame::Lab { qubit_freq: hz_to_rad(self.trap.qubit_freq) },
            },
        }
    }

    pub fn initial(&self) -> InitialState {
        match self.state.initial {
            InitialName::Ground => InitialState::Ground,
            InitialName::Thermal => InitialState::Thermal { nbar: self.state.nbar.unwrap_or(0.0) },
        }
    }

    pub fn space(&self) -> HilbertSpace {
        HilbertSpace::new(self.state.fock_dim).expect("fock_dim validated")
    }

    pub fn readout(&self) -> Readout {
        match self.readout.shots {
            0 => Readout::Expectation,
            shots => Readout::Shots { shots, seed: self.readout.seed },
        }
    }

    /// SHA-256 of every field that affects results (the output path does not).
    pub fn hash(&self) -> String {
        let mut semantic = self.clone();
        semantic.output = OutputSection::default();
        let json = serde_json::to_string(&semantic).expect("config serializes");
        let digest = Sha256::digest(json.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[drive]
mode = "r1"
gradient_freq = 5e6
"#;

    #[test]
    fn minimal_config_uses_trap_defaults() {
        let (c, w) = parse_config(MINIMAL).unwrap();
        assert!(w.is_empty(), "{w:?}");
        assert_eq!(c.trap.mode_freqs["r1"], 6.2e6);
        assert_eq!(c.drive.gradient_freq, 5e6);
        assert!((c.trap_config().ion_mass - IonTrapConfig::mg25_surface_trap().ion_mass).abs() < 1e-35);
    }

    #[test]
    fn unknown_key_has_location_and_suggestion() {
        let text = "[trap]\nomega_q = 1e9\n\n[drive]\nmode = \"r1\"\n";
        let err = parse_config(text).unwrap_err();
        match &err {
            ConfigError::Parse { line, suggestion, .. } => {
                assert_eq!(*line, 2);
                assert_eq!(suggestion.as_deref(), Some("qubit_freq"));
            }
            other => panic!("{other:?}"),
        }
        assert!(err.to_string().contains("did you mean `qubit_freq`"), "{err}");
    }

    #[test]
    fn misspelling_is_suggested() {
        let err = parse_config("[drive]\nmode = \"r1\"\ngradient_frq = 5e6\n").unwrap_err();
        assert!(err.to_string().contains("gradient_freq"), "{err}");
    }

    #[test]
    fn negative_mode_frequency_rejected() {
        let text = "[trap]\nion_mass_u = 25\nqubit_freq = 1e9\nfield_sensitivity = -1e10\nstatic_field = 0.02\nmode_freqs = { r1 = -6.2e6 }\n[drive]\nmode = \"r1\"\n";
        let err = parse_config(text).unwrap_err();
        assert!(matches!(&err, ConfigError::Semantic { path, .. } if path == "trap.mode_freqs.r1"), "{err}");
    }

    #[test]
    fn syntax_error_position() {
        let err = parse_config("[drive]\nmode = \n").unwrap_err();
        assert!(matches!(err, ConfigError::Parse { line: 2, .. }), "{err}");
    }

    #[test]
    fn strong_drive_warns() {
        let (_, w) = parse_config("[drive]\nmode = \"r1\"\ngradient_freq = 5e6\nmw_rabi = 0.7e6\n").unwrap();
        assert!(w.iter().any(|w| w.contains("sideband")), "{w:?}");
    }

    #[test]
    fn thermal_needs_nbar_and_room() {
        let base = "[drive]\nmode = \"r1\"\n[state]\ninitial = \"thermal\"\n";
        assert!(parse_config(base).is_err());
        let err = parse_config(&format!("{base}nbar = 2.0\nfock_dim = 10\n")).unwrap_err();
        assert!(matches!(&err, ConfigError::Semantic { path, .. } if path == "state.fock_dim"), "{err}");
        assert!(parse_config(&format!("{base}nbar = 2.0\nfock_dim = 40\n")).is_ok());
    }

    #[test]
    fn hash_tracks_semantic_fields_only() {
        let (a, _) = parse_config(MINIMAL).unwrap();
        let (b, _) = parse_config(&format!("# comment\n{MINIMAL}\n[output]\npath = \"x.csv\"\n")).unwrap();
        assert_eq!(a.hash(), b.hash());
        let (c, _) = parse_config(&MINIMAL.replace("5e6", "5.000001e6")).unwrap();
        assert_ne!(a.hash(), c.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn envelope_forms() {
        let (c, _) = parse_config(&format!("{MINIMAL}[envelope]\nkind = \"rectangular\"\ntotal_time = 500e-6\n")).unwrap();
        let e = c.envelope();
        assert_eq!(e.kind, EnvelopeKind::Rectangular);
        assert!((e.plateau_time - 480e-6).abs() < 1e-15);
        assert!(parse_config(&format!("{MINIMAL}[envelope]\nplateau_time = 1e-6\ntotal_time = 5e-5\n")).is_err());
    }

    #[test]
    fn ranges() {
        let r = Range { start: 0.0, stop: 1.0, step: 0.25 };
        assert_eq!(r.values("x").unwrap(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert!(Range { start: 1.0, stop: 0.0, step: 0.1 }.values("x").is_err());
    }
}
