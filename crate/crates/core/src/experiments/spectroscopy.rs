use super::{par_map, reason, InitialState};
use crate::dynamics::{propagate, DriveProgram, PropagationSettings, PulseEnvelope};
use crate::model::{derive_couplings, DriveConfig, IonTrapConfig};
use crate::qcore::HilbertSpace;
use crate::units::hz_to_rad;
use crate::{CancelToken, Error, Result};

/// A predicted line position.
#[derive(Debug, Clone, PartialEq)]
pub struct LineAnnotation {
    pub label: String,
    /// Microwave detuning, Hz.
    pub detuning_hz: f64,
}

/// Spin-flip probability against microwave detuning.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    /// Hz.
    pub detunings_hz: Vec<f64>,
    /// `None` where the point failed.
    pub p_up: Vec<Option<f64>>,
    /// Failure reason per point.
    pub notes: Vec<Option<String>>,
    pub annotations: Vec<LineAnnotation>,
}

impl Spectrum {
    /// Detunings of points above `floor` and strictly above both neighbours.
    /// Failed points, the scan ends and the edges of windowed grids (a gap
    /// more than twice the other) never qualify.
    pub fn local_maxima(&self, floor: f64) -> Vec<f64> {
        let (p, d) = (&self.p_up, &self.detunings_hz);
        (1..p.len().saturating_sub(1))
            .filter(|&i| {
                let (lo, hi) = ((d[i] - d[i - 1]).abs(), (d[i + 1] - d[i]).abs());
                lo <= 2.0 * hi && hi <= 2.0 * lo
            })
            .filter(|&i| match (p[i - 1], p[i], p[i + 1]) {
                (Some(a), Some(b), Some(c)) => b > floor && b > a && b > c,
                _ => false,
            })
            .map(|i| self.detunings_hz[i])
            .collect()
    }
}

/// Detuning scan of one mode.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectroscopySpec {
    pub trap: IonTrapConfig,
    pub drive: DriveConfig,
    /// Pulse shape of both tones.
    pub envelope: PulseEnvelope,
    pub settings: PropagationSettings,
    pub fock_dim: usize,
    pub initial: InitialState,
    /// Hz.
    pub detunings_hz: Vec<f64>,
    /// Highest carrier comb order annotated.
    pub comb_orders: u32,
}

/// Lines at `m·ω_g` for `|m| ≤ comb_orders` and at `±(ω_r ∓ ω_g)` for the
/// driven mode, in Hz.
pub fn predicted_lines(trap: &IonTrapConfig, drive: &DriveConfig, comb_orders: u32) -> Result<Vec<LineAnnotation>> {
    let fr = trap.mode_freq(&drive.mode)?;
    let fg = drive.gradient_freq;
    let mut lines = Vec::new();
    let orders = if fg > 0.0 { comb_orders as i32 } else { 0 };
    for m in -orders..=orders {
        lines.push(LineAnnotation { label: format!("m={m:+}"), detuning_hz: m as f64 * fg });
    }
    for (sign, s) in [(1.0, '+'), (-1.0, '-')] {
        lines.push(LineAnnotation { label: format!("{s}({}-g)", drive.mode), detuning_hz: sign * (fr - fg) });
        if fg > 0.0 {
            lines.push(LineAnnotation { label: format!("{s}({}+g)", drive.mode), detuning_hz: sign * (fr + fg) });
        }
    }
    Ok(lines)
}

/// Sorted grid with `half_steps` points of spacing `step_hz` on each side of
/// every line, plus a coarse grid of spacing `coarse_hz` over
/// `[−span_hz, span_hz]` (none if `coarse_hz` is zero).
pub fn line_windows(lines_hz: &[f64], half_steps: u32, step_hz: f64, coarse_hz: f64, span_hz: f64) -> Vec<f64> {
    let mut grid: Vec<f64> = lines_hz
        .iter()
        .flat_map(|&c| (-(half_steps as i64)..=half_steps as i64).map(move |k| c + k as f64 * step_hz))
        .collect();
    if coarse_hz > 0.0 {
        let k = (span_hz / coarse_hz).floor() as i64;
        grid.extend((-k..=k).map(|j| j as f64 * coarse_hz));
    }
    grid.sort_by(f64::total_cmp);
    grid.dedup_by(|a, b| (*a - *b).abs() < 1e-6);
    grid
}

/// Fixed-length pulse at every detuning of `spec`, starting from the
/// initial motional state with the spin down.
pub fn spectroscopy(spec: &SpectroscopySpec, cancel: &CancelToken) -> Result<Spectrum> {
    spec.trap.validate()?;
    spec.drive.validate()?;
    let couplings = derive_couplings(&spec.trap, &spec.drive)?;
    let annotations = predicted_lines(&spec.trap, &spec.drive, spec.comb_orders)?;
    let initial = spec.initial.prepare(HilbertSpace::new(spec.fock_dim)?)?;
    let settings = PropagationSettings { samples: 1, ..spec.settings };
    let results = par_map(&spec.detunings_hz, cancel, |&d| {
        let program = DriveProgram::pulse(couplings.with_delta(hz_to_rad(d)), spec.envelope)?;
        let rec = propagate(&program, &initial, &settings)?;
        rec.p_up.last().copied().ok_or_else(|| Error::InvalidInput("no sample recorded".into()))
    });
    if cancel.is_cancelled() && results.iter().all(|r| r.is_err()) {
        return Err(Error::Cancelled);
    }
    let (p_up, notes) = results
        .into_iter()
        .map(|r| match r {
            Ok(p) => (Some(p), None),
            Err(e) => (None, Some(reason(&e))),
        })
        .unzip();
    Ok(Spectrum { detunings_hz: spec.detunings_hz.clone(), p_up, notes, annotations })
}

/// Pointwise maximum of spectra taken on the same detuning grid, with the
/// union of their annotations.
pub fn overlay(spectra: &[Spectrum]) -> Result<Spectrum> {
    let first = spectra.first().ok_or_else(|| Error::InvalidInput("nothing to overlay".into()))?;
    if spectra.iter().any(|s| s.detunings_hz != first.detunings_hz) {
        return Err(Error::InvalidInput("overlaid spectra must share one detuning grid".into()));
    }
    let n = first.detunings_hz.len();
    let mut p_up = vec![None; n];
    let mut notes = vec![None; n];
    for s in spectra {
        for i in 0..n {
            match (p_up[i], s.p_up[i]) {
                (None, Some(v)) => p_up[i] = Some(v),
                (Some(a), Some(v)) => p_up[i] = Some(f64::max(a, v)),
                _ => {}
            }
            if notes[i].is_none() {
                notes[i] = s.notes[i].clone();
            }
        }
    }
    for i in 0..n {
        if p_up[i].is_some() {
            notes[i] = None;
        }
    }
    let mut annotations: Vec<LineAnnotation> = Vec::new();
    for a in spectra.iter().flat_map(|s| &s.annotations) {
        if !annotations.iter().any(|b| b.label == a.label && b.detuning_hz == a.detuning_hz) {
            annotations.push(a.clone());
        }
    }
    annotations.sort_by(|a, b| a.detuning_hz.total_cmp(&b.detuning_hz));
    Ok(Spectrum { detunings_hz: first.detunings_hz.clone(), p_up, notes, annotations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::EnvelopeKind;

    fn drive() -> DriveConfig {
        DriveConfig { gradient_freq: 5e6, mw_rabi: 2e3, ..DriveConfig::new("r1") }
    }

    #[test]
    fn annotations_follow_config() {
        let trap = IonTrapConfig::mg25_surface_trap();
        let lines = predicted_lines(&trap, &drive(), 2).unwrap();
        let pos: Vec<f64> = lines.iter().map(|l| l.detuning_hz).collect();
        for want in [0.0, 5e6, -5e6, 10e6, -10e6, 1.2e6, -1.2e6, 11.2e6, -11.2e6] {
            assert!(pos.iter().any(|p| (p - want).abs() < 1e-3), "{want}");
        }
        assert_eq!(lines.len(), 9);
    }

    #[test]
    fn windows() {
        let g = line_windows(&[0.0, 1e6], 2, 10e3, 0.0, 0.0);
        assert_eq!(g.len(), 10);
        assert_eq!(g[0], -20e3);
        let g = line_windows(&[0.0], 1, 10e3, 100e3, 200e3);
        assert_eq!(g.len(), 7);
    }

    #[test]
    fn bare_carrier_is_the_only_line() {
        let trap = IonTrapConfig::mg25_surface_trap();
        let drive = DriveConfig { gradient_freq: 5e6, mw_rabi: 1.0 / (4.0 * 90e-6), ..DriveConfig::new("r1") };
        let envelope = PulseEnvelope::with_total(EnvelopeKind::Rectangular, 10e-6, 100e-6).unwrap();
        let detunings = line_windows(&[0.0, 1.2e6, 5e6], 2, 10e3, 0.0, 0.0);
        let spec = SpectroscopySpec {
            trap,
            drive,
            envelope,
            settings: PropagationSettings::default(),
            fock_dim: 4,
            initial: InitialState::Ground,
            detunings_hz: detunings,
            comb_orders: 1,
        };
        let s = spectroscopy(&spec, &CancelToken::new()).unwrap();
        assert_eq!(s.local_maxima(0.05), vec![0.0], "{:?}", s.p_up);
        let peak = s.p_up[2].unwrap();
        assert!(peak > 0.5);
        for (i, p) in s.p_up.iter().enumerate() {
            if i != 2 {
                assert!(p.unwrap() < 0.05);
            }
        }
    }

    #[test]
    fn overlay_takes_maximum() {
        let a = Spectrum {
            detunings_hz: vec![0.0, 1.0],
            p_up: vec![Some(0.1), None],
            notes: vec![None, Some("x".into())],
            annotations: vec![LineAnnotation { label: "a".into(), detuning_hz: 0.0 }],
        };
        let b = Spectrum {
            detunings_hz: vec![0.0, 1.0],
            p_up: vec![Some(0.05), Some(0.3)],
            notes: vec![None, None],
            annotations: vec![LineAnnotation { label: "b".into(), detuning_hz: 1.0 }],
        };
        let o = overlay(&[a, b.clone()]).unwrap();
        assert_eq!(o.p_up, vec![Some(0.1), Some(0.3)]);
        assert_eq!(o.notes, vec![None, None]);
        assert_eq!(o.annotations.len(), 2);
        let c = Spectrum { detunings_hz: vec![0.0], ..b };
        assert!(overlay(&[o, c]).is_err());
    }
}
