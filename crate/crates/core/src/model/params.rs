use std::collections::BTreeMap;

use crate::{Error, Result};

/// Ion and trap parameters. Frequencies are ordinary frequencies in Hz.
#[derive(Debug, Clone, PartialEq)]
pub struct IonTrapConfig {
    /// Ion mass, kg.
    pub ion_mass: f64,
    /// Motional mode frequencies by label, Hz. Labels are unique by
    /// construction.
    pub mode_freqs: BTreeMap<String, f64>,
    /// Qubit frequency ω₀/2π, Hz.
    pub qubit_freq: f64,
    /// (dω₀/dB_z)/2π, Hz per tesla (signed).
    pub field_sensitivity: f64,
    /// |B₀|, tesla.
    pub static_field: f64,
}

impl IonTrapConfig {
    /// 25Mg+ in the surface trap: modes (a, r1, r2) at (3.2, 6.2, 7.6) MHz,
    /// a 1.326 GHz qubit at 21.3 mT with sensitivity −19.7 MHz/mT.
    pub fn mg25_surface_trap() -> Self {
        let mode_freqs = [("a", 3.2e6), ("r1", 6.2e6), ("r2", 7.6e6)]
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect();
        Self {
            ion_mass: crate::units::MG25_MASS_U * crate::units::ATOMIC_MASS_UNIT,
            mode_freqs,
            qubit_freq: 1.326e9,
            field_sensitivity: -19.7e9,
            static_field: 21.3e-3,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.ion_mass > 0.0) || !self.ion_mass.is_finite() {
            return Err(Error::InvalidInput(format!("ion_mass must be > 0, got {}", self.ion_mass)));
        }
        if self.mode_freqs.is_empty() {
            return Err(Error::InvalidInput("at least one motional mode is required".into()));
        }
        for (label, f) in &self.mode_freqs {
            if !(*f > 0.0) || !f.is_finite() {
                return Err(Error::InvalidInput(format!("mode `{label}` frequency must be > 0, got {f}")));
            }
        }
        for (name, v) in [
            ("qubit_freq", self.qubit_freq),
            ("field_sensitivity", self.field_sensitivity),
            ("static_field", self.static_field),
        ] {
            if !v.is_finite() {
                return Err(Error::InvalidInput(format!("{name} must be finite")));
            }
        }
        Ok(())
    }

    pub fn mode_freq(&self, mode: &str) -> Result<f64> {
        self.mode_freqs.get(mode).copied().ok_or_else(|| Error::UnknownMode(mode.to_string()))
    }
}

/// Drive parameters for one simulated mode. Frequencies in Hz.
#[derive(Debug, Clone, PartialEq)]
pub struct DriveConfig {
    /// ω_g/2π, Hz. Zero selects the static-gradient limit.
    pub gradient_freq: f64,
    /// r̂·∇B_g along the simulated mode, T/m.
    pub gradient_projection: f64,
    /// B_g at the ion, T.
    pub field_at_ion: f64,
    /// Ωμ/2π, Hz.
    pub mw_rabi: f64,
    /// δ/2π, Hz.
    pub mw_detuning: f64,
    /// Label of the simulated mode.
    pub mode: String,
    /// Phase of the gradient drive at t = 0, rad.
    pub gradient_phase: f64,
    /// Phase of the microwave drive at t = 0, rad.
    pub mw_phase: f64,
}

impl DriveConfig {
    pub fn new(mode: impl Into<String>) -> Self {
        Self {
            gradient_freq: 0.0,
            gradient_projection: 0.0,
            field_at_ion: 0.0,
            mw_rabi: 0.0,
            mw_detuning: 0.0,
            mode: mode.into(),
            gradient_phase: 0.0,
            mw_phase: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gradient_freq >= 0.0) || !self.gradient_freq.is_finite() {
            return Err(Error::InvalidInput(format!("gradient_freq must be >= 0, got {}", self.gradient_freq)));
        }
        if !(self.mw_rabi >= 0.0) || !self.mw_rabi.is_finite() {
            return Err(Error::InvalidInput(format!("mw_rabi must be >= 0, got {}", self.mw_rabi)));
        }
        for (name, v) in [
            ("gradient_projection", self.gradient_projection),
            ("field_at_ion", self.field_at_ion),
            ("mw_detuning", self.mw_detuning),
            ("gradient_phase", self.gradient_phase),
            ("mw_phase", self.mw_phase),
        ] {
            if !v.is_finite() {
                return Err(Error::InvalidInput(format!("{name} must be finite")));
            }
        }
        Ok(())
    }
}
