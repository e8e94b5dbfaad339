use std::f64::consts::PI;

use super::fit::{fit_rabi, golden_min, RabiFit};
use super::rabi::{rabi_timescan, TimeSeries};
use super::{par_map, reason};
use crate::dynamics::{propagate, DriveProgram, PropagationSettings, PulseEnvelope};
use crate::model::{sideband_rabi, sideband_resonance_detuning, Branch, Couplings, Sideband};
use crate::qcore::{HilbertSpace, QuantumState};
use crate::{CancelToken, Error, Result};

/// How widely and finely to look for a sideband resonance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResonanceSearch {
    /// Half-width of the detuning window as a fraction of |ω_r − ω_g|.
    pub window_fraction: f64,
    /// Smallest half-width, rad/s.
    pub min_window: f64,
    /// Grid spacing in units of 2π over the effective π-pulse time.
    pub spacing: f64,
}

impl Default for ResonanceSearch {
    fn default() -> Self {
        Self { window_fraction: 0.015, min_window: 2.0 * PI * 5e3, spacing: 0.25 }
    }
}

/// Sideband characterization against the normalized microwave strength
/// `2Ωμ/(ω_r − ω_g)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SidebandSpec {
    /// Ωg, ω_r and ω_g from here; Ωμ and δ are set per point; Ωz must be 0.
    pub base: Couplings,
    pub ratios: Vec<f64>,
    pub fock_dim: usize,
    /// Ramp shape of the pulses; the plateau is chosen per point.
    pub envelope: PulseEnvelope,
    pub settings: PropagationSettings,
    pub search: ResonanceSearch,
    /// Samples in each pulse-length scan.
    pub samples: usize,
    /// Length of each pulse-length scan in oscillation periods of sin².
    pub periods: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SidebandPoint {
    /// 2Ωμ/(ω_r − ω_g).
    pub ratio: f64,
    /// Fitted Ω_sb/|Ωg|.
    pub rate: Option<f64>,
    pub predicted_rate: Option<f64>,
    /// Located resonance δ_res/(ω_r − ω_g).
    pub resonance: Option<f64>,
    pub predicted_resonance: Option<f64>,
    pub fit: Option<RabiFit>,
    pub note: Option<String>,
}

fn pi_pulse(c: &Couplings, envelope: &PulseEnvelope) -> Result<(PulseEnvelope, f64)> {
    let rate = sideband_rabi(c, Branch::Minus)?;
    if !(rate > 0.0) {
        return Err(Error::InvalidInput("sideband coupling vanishes".into()));
    }
    let t_eff = PI / (2.0 * rate);
    Ok((PulseEnvelope { plateau_time: envelope.plateau_for_area(t_eff), ..*envelope }, t_eff))
}

/// Detuning (rad/s) maximizing the spin flip of a π-pulse on the given
/// sideband from `|↓, 0⟩`, searched around the ac-Zeeman-shifted prediction.
pub fn find_sideband_resonance(
    c: &Couplings,
    sideband: Sideband,
    envelope: &PulseEnvelope,
    fock_dim: usize,
    settings: &PropagationSettings,
    search: &ResonanceSearch,
) -> Result<f64> {
    let predicted = sideband_resonance_detuning(c, sideband)?;
    let (pulse, t_eff) = pi_pulse(c, envelope)?;
    let initial = match sideband {
        Sideband::Blue => QuantumState::ground(HilbertSpace::new(fock_dim)?),
        // the red sideband needs a phonon to remove
        Sideband::Red => QuantumState::basis(HilbertSpace::new(fock_dim)?, crate::Spin::Down, 1),
    };
    let quiet = PropagationSettings { samples: 1, ..*settings };
    let flip = |delta: f64| -> Result<f64> {
        let rec = propagate(&DriveProgram::pulse(c.with_delta(delta), pulse)?, &initial, &quiet)?;
        Ok(rec.p_up[0])
    };
    let spacing = search.spacing * 2.0 * PI / t_eff;
    let window = (search.window_fraction * c.mode_detuning().abs()).max(search.min_window);
    let k = (window / spacing).ceil() as i64;
    let grid: Vec<f64> = (-k..=k).map(|j| predicted + j as f64 * spacing).collect();
    let values: Vec<f64> = par_map(&grid, &CancelToken::new(), |&d| flip(d)).into_iter().collect::<Result<_>>()?;
    let best = (0..grid.len()).max_by(|&a, &b| values[a].total_cmp(&values[b])).unwrap_or(0);
    let refined = golden_min(|d| flip(d).map_or(f64::INFINITY, |p| -p), grid[best] - spacing, grid[best] + spacing);
    Ok(refined)
}

/// Pulse-length scan at detuning `c.delta` from `|↓, 0⟩` and its Rabi fit.
/// The scan spans `periods` oscillations of the predicted sideband rate.
pub fn sideband_flop(
    c: &Couplings,
    envelope: &PulseEnvelope,
    fock_dim: usize,
    settings: &PropagationSettings,
    samples: usize,
    periods: f64,
) -> Result<(TimeSeries, RabiFit)> {
    let rate = sideband_rabi(c, Branch::Minus)?;
    if !(rate > 0.0) {
        return Err(Error::InvalidInput("sideband coupling vanishes".into()));
    }
    let span = periods * PI / rate;
    let n = samples.max(8);
    let plateaus: Vec<f64> = (0..n).map(|k| span * k as f64 / (n - 1) as f64).collect();
    let initial = QuantumState::ground(HilbertSpace::new(fock_dim)?);
    let series = rabi_timescan(c, envelope, &plateaus, &initial, settings)?;
    let fit = fit_rabi(&series.times, &series.p_up)?;
    Ok((series, fit))
}

fn characterize(spec: &SidebandSpec, ratio: f64) -> Result<SidebandPoint> {
    let det = spec.base.mode_detuning();
    let og = spec.base.omega_g.abs();
    let c = spec.base.with_omega_mu(0.5 * ratio * det.abs());
    let mut point = SidebandPoint {
        ratio,
        rate: None,
        predicted_rate: None,
        resonance: None,
        predicted_resonance: None,
        fit: None,
        note: None,
    };
    if ratio == 0.0 {
        point.rate = Some(0.0);
        point.predicted_rate = Some(0.0);
        point.resonance = Some(1.0);
        point.predicted_resonance = Some(1.0);
        point.note = Some("no microwave drive".into());
        return Ok(point);
    }
    point.predicted_resonance = Some(sideband_resonance_detuning(&c, Sideband::Blue)? / det);
    point.predicted_rate = Some(sideband_rabi(&c, Branch::Minus)? / og);
    let delta = find_sideband_resonance(&c, Sideband::Blue, &spec.envelope, spec.fock_dim, &spec.settings, &spec.search)?;
    point.resonance = Some(delta / det);
    let (_, fit) = sideband_flop(&c.with_delta(delta), &spec.envelope, spec.fock_dim, &spec.settings, spec.samples, spec.periods)?;
    point.rate = Some(fit.frequency / og);
    point.fit = Some(fit);
    Ok(point)
}

/// Blue-sideband resonance and Rabi frequency for each ratio.
pub fn sideband_characterization(spec: &SidebandSpec, cancel: &CancelToken) -> Result<Vec<SidebandPoint>> {
    if spec.base.omega_z != 0.0 {
        return Err(Error::InvalidInput("sideband characterization requires Ωz = 0 (no field at the ion)".into()));
    }
    if spec.base.omega_g == 0.0 {
        return Err(Error::InvalidInput("sideband characterization requires a gradient coupling".into()));
    }
    let results = par_map(&spec.ratios, cancel, |&r| {
        if !(0.0..1.0).contains(&r) {
            return Err(Error::Constraint(format!("2Ωμ/(ω_r − ω_g) = {r} leaves no sideband resonance")));
        }
        characterize(spec, r)
    });
    Ok(results
        .into_iter()
        .zip(&spec.ratios)
        .map(|(r, &ratio)| {
            r.unwrap_or_else(|e| SidebandPoint {
                ratio,
                rate: None,
                predicted_rate: None,
                resonance: None,
                predicted_resonance: None,
                fit: None,
                note: Some(reason(&e)),
            })
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::EnvelopeKind;

    fn spec(ratios: Vec<f64>) -> SidebandSpec {
        let base = Couplings {
            omega_g: 2.0 * PI * 2e3,
            omega_z: 0.0,
            r0: 5.7e-9,
            omega_r: 2.0 * PI * 6.2e6,
            omega_gdrive: 2.0 * PI * 5e6,
            omega_mu: 0.0,
            delta: 0.0,
            gradient_phase: 0.0,
            mw_phase: 0.0,
        };
        SidebandSpec {
            base,
            ratios,
            fock_dim: 8,
            envelope: PulseEnvelope::new(EnvelopeKind::Blackman, 10e-6, 0.0).unwrap(),
            settings: PropagationSettings::default(),
            search: ResonanceSearch::default(),
            samples: 48,
            periods: 2.5,
        }
    }

    #[test]
    fn trivial_and_forbidden_points() {
        let pts = sideband_characterization(&spec(vec![0.0, 1.0, 1.2]), &CancelToken::new()).unwrap();
        assert_eq!(pts[0].rate, Some(0.0));
        assert_eq!(pts[0].resonance, Some(1.0));
        for p in &pts[1..] {
            assert!(p.rate.is_none());
            assert!(p.note.as_deref().unwrap().contains("constraint"), "{p:?}");
        }
    }

    #[test]
    fn field_at_ion_rejected() {
        let mut s = spec(vec![0.5]);
        s.base.omega_z = 1.0;
        assert!(sideband_characterization(&s, &CancelToken::new()).is_err());
    }

    #[test]
    fn blue_sideband_matches_prediction() {
        let pts = sideband_characterization(&spec(vec![0.6]), &CancelToken::new()).unwrap();
        let p = &pts[0];
        assert!((p.resonance.unwrap() - 0.8).abs() < 0.01, "{p:?}");
        let rate = p.rate.unwrap();
        let predicted = p.predicted_rate.unwrap();
        assert!((rate / predicted - 1.0).abs() < 0.03, "{p:?}");
        assert!((predicted - 0.6).abs() < 1e-9);
    }
}
