use crate::dynamics::{scan_plateau, DriveProgram, PropagationSettings, PulseEnvelope};
use crate::model::Couplings;
use crate::qcore::QuantumState;
use crate::Result;

/// Populations against pulse plateau length.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    /// Plateau lengths actually simulated, seconds.
    pub times: Vec<f64>,
    pub p_up: Vec<f64>,
    pub mean_n: Vec<f64>,
}

/// Pulses of `envelope` shape (its plateau is ignored) with each plateau
/// length in `plateaus`, both tones ramped together.
pub fn rabi_timescan(
    couplings: &Couplings,
    envelope: &PulseEnvelope,
    plateaus: &[f64],
    initial: &QuantumState,
    settings: &PropagationSettings,
) -> Result<TimeSeries> {
    let template = DriveProgram::pulse(*couplings, PulseEnvelope { plateau_time: 0.0, ..*envelope })?;
    let scan = scan_plateau(&template, plateaus, initial, settings)?;
    Ok(TimeSeries { times: scan.plateaus, p_up: scan.p_up, mean_n: scan.mean_n })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::EnvelopeKind;
    use crate::experiments::fit_rabi;
    use crate::qcore::HilbertSpace;
    use std::f64::consts::PI;

    #[test]
    fn resonant_carrier_fit() {
        let om = 2.0 * PI * 50e3;
        let c = Couplings {
            omega_g: 0.0,
            omega_z: 0.0,
            r0: 5.7e-9,
            omega_r: 2.0 * PI * 6.2e6,
            omega_gdrive: 2.0 * PI * 5e6,
            omega_mu: om,
            delta: 0.0,
            gradient_phase: 0.0,
            mw_phase: 0.0,
        };
        let env = PulseEnvelope::new(EnvelopeKind::Blackman, 2e-6, 0.0).unwrap();
        let plateaus: Vec<f64> = (0..40).map(|k| 1e-6 * k as f64).collect();
        let s = HilbertSpace::new(3).unwrap();
        let ts = rabi_timescan(&c, &env, &plateaus, &QuantumState::ground(s), &PropagationSettings::default()).unwrap();
        let fit = fit_rabi(&ts.times, &ts.p_up).unwrap();
        assert!((fit.frequency / om - 1.0).abs() < 5e-3, "{}", fit.frequency / om);
        assert!((fit.amplitude - 1.0).abs() < 1e-3);
    }
}
