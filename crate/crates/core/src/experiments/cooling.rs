use std::f64::consts::PI;

use super::InitialState;
use crate::dynamics::{
    evolve_density_sequence_with_cancel, propagate, DriveProgram, EnvelopeKind, EvolutionRecord, PropagationSettings,
    PulseEnvelope, SequenceStep,
};
use crate::model::{sideband_rabi, sideband_resonance_detuning, Branch, Couplings, Sideband};
use crate::qcore::{HilbertSpace, QuantumState};
use crate::{CancelToken, Error, Result};

/// Below this blue-sideband excitation the sideband ratio is undefined.
const BLUE_FLOOR: f64 = 1e-9;

/// Sideband thermometry outcome.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermometryResult {
    /// `p_red / p_blue`, in [0, 1).
    pub ratio: f64,
    /// `ratio / (1 − ratio)`.
    pub nbar: f64,
    pub p_red: f64,
    pub p_blue: f64,
}

/// Resolved-sideband cooling: `pulses` red-sideband pulses each followed by
/// a repump, then thermometry.
#[derive(Debug, Clone, PartialEq)]
pub struct CoolingSpec {
    /// Ωz must be 0; δ is replaced by the red-sideband resonance.
    pub couplings: Couplings,
    pub pulse: PulseEnvelope,
    /// Hold the gradient at full amplitude for the whole of each pulse
    /// instead of ramping it with the microwaves.
    pub continuous_gradient: bool,
    pub pulses: usize,
    pub fock_dim: usize,
    pub initial: InitialState,
    pub settings: PropagationSettings,
    /// Analysis pulse for thermometry; `None` uses [`default_analysis_pulse`]
    /// with the cooling pulse's ramp shape.
    pub analysis: Option<PulseEnvelope>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoolingResult {
    /// State after each pulse and each repump, starting at t = 0.
    pub record: EvolutionRecord,
    /// ⟨a†a⟩ initially and after each pulse-plus-repump.
    pub nbar_per_pulse: Vec<f64>,
    pub thermometry: ThermometryResult,
    /// ⟨a†a⟩ of the final state computed directly.
    pub direct_nbar: f64,
    /// Red-sideband detuning used for the cooling pulses, rad/s.
    pub detuning: f64,
}

/// Analysis pulse with the ground-state sideband π-pulse area.
pub fn default_analysis_pulse(c: &Couplings, kind: EnvelopeKind, ramp_time: f64) -> Result<PulseEnvelope> {
    let rate = sideband_rabi(c, Branch::Minus)?;
    if !(rate > 0.0) {
        return Err(Error::InvalidInput("sideband coupling vanishes".into()));
    }
    let shape = PulseEnvelope::new(kind, ramp_time, 0.0)?;
    PulseEnvelope::new(kind, ramp_time, shape.plateau_for_area(PI / (2.0 * rate)))
}

/// Equal-length red- and blue-sideband analysis pulses on `state` (spin
/// down), each at its ac-Zeeman-shifted resonance.
pub fn thermometry(
    state: &QuantumState,
    c: &Couplings,
    analysis: &PulseEnvelope,
    settings: &PropagationSettings,
) -> Result<ThermometryResult> {
    let quiet = PropagationSettings { samples: 1, ..*settings };
    let flip = |sb: Sideband| -> Result<f64> {
        let program = DriveProgram::pulse(c.with_delta(sideband_resonance_detuning(c, sb)?), *analysis)?;
        Ok(propagate(&program, state, &quiet)?.p_up[0])
    };
    let p_red = flip(Sideband::Red)?;
    let p_blue = flip(Sideband::Blue)?;
    if !(p_blue > BLUE_FLOOR) {
        return Err(Error::Constraint(format!(
            "blue-sideband excitation {p_blue:.3e} is below {BLUE_FLOOR:.0e}; sideband ratio undefined"
        )));
    }
    let ratio = (p_red / p_blue).max(0.0);
    if ratio >= 1.0 {
        return Err(Error::Constraint(format!("sideband ratio {ratio:.4} >= 1; state is not thermal-like")));
    }
    Ok(ThermometryResult { ratio, nbar: ratio / (1.0 - ratio), p_red, p_blue })
}

/// Runs the cooling sequence and thermometry on the final state.
pub fn cooling_run(spec: &CoolingSpec, cancel: &CancelToken) -> Result<CoolingResult> {
    let c = &spec.couplings;
    if c.omega_z != 0.0 {
        return Err(Error::InvalidInput("cooling requires Ωz = 0 (no field at the ion)".into()));
    }
    let detuning = sideband_resonance_detuning(c, Sideband::Red)?;
    let gradient = if spec.continuous_gradient { PulseEnvelope::square(spec.pulse.total_duration())? } else { spec.pulse };
    let program = DriveProgram::new(c.with_delta(detuning), spec.pulse, gradient, spec.pulse.total_duration())?;
    let steps: Vec<SequenceStep> =
        (0..spec.pulses).flat_map(|_| [SequenceStep::Pulse(program), SequenceStep::Repump]).collect();
    let initial = spec.initial.prepare(HilbertSpace::new(spec.fock_dim)?)?;
    let record = evolve_density_sequence_with_cancel(&steps, &initial, &spec.settings, cancel)?;
    let nbar_per_pulse = record.mean_n.iter().step_by(2).copied().collect();
    let analysis = match spec.analysis {
        Some(a) => a,
        None => default_analysis_pulse(c, spec.pulse.kind, spec.pulse.ramp_time)?,
    };
    cancel.check()?;
    let thermometry = thermometry(&record.final_state, c, &analysis, &spec.settings)?;
    let direct_nbar = record.final_state.mean_phonon();
    Ok(CoolingResult { record, nbar_per_pulse, thermometry, direct_nbar, detuning })
}
