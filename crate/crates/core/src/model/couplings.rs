use crate::units::{hz_to_rad, HBAR};
use crate::Result;

use super::{DriveConfig, IonTrapConfig};

/// Derived couplings. Every rate is an angular frequency in rad/s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Couplings {
    /// Spin-motion coupling Ωg (signed).
    pub omega_g: f64,
    /// Qubit-frequency modulation amplitude Ωz (signed).
    pub omega_z: f64,
    /// Ground-state extent, m.
    pub r0: f64,
    /// Mode frequency ω_r.
    pub omega_r: f64,
    /// Gradient drive frequency ω_g.
    pub omega_gdrive: f64,
    /// Microwave Rabi frequency Ωμ.
    pub omega_mu: f64,
    /// Microwave detuning δ.
    pub delta: f64,
    /// Gradient drive phase at t = 0, rad.
    pub gradient_phase: f64,
    /// Microwave phase at t = 0, rad.
    pub mw_phase: f64,
}

impl Couplings {
    /// ω_r − ω_g.
    pub fn mode_detuning(&self) -> f64 {
        self.omega_r - self.omega_gdrive
    }

    /// Copy with the microwave detuning replaced.
    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }

    /// Copy with Ωμ replaced.
    pub fn with_omega_mu(mut self, omega_mu: f64) -> Self {
        self.omega_mu = omega_mu;
        self
    }

    /// Copy with both gradient amplitudes (Ωg, Ωz) multiplied by `s`.
    pub fn scaled_gradient(mut self, s: f64) -> Self {
        self.omega_g *= s;
        self.omega_z *= s;
        self
    }
}

/// Ground-state extent √(ħ / 2Mω) for angular frequency `omega`.
pub fn ground_state_extent(mass: f64, omega: f64) -> f64 {
    (HBAR / (2.0 * mass * omega)).sqrt()
}

/// Couplings of `drive` to its mode of `trap`.
pub fn derive_couplings(trap: &IonTrapConfig, drive: &DriveConfig) -> Result<Couplings> {
    let mode_freq = trap.mode_freq(&drive.mode)?;
    let omega_r = hz_to_rad(mode_freq);
    let r0 = ground_state_extent(trap.ion_mass, omega_r);
    let sens = hz_to_rad(trap.field_sensitivity);
    Ok(Couplings {
        omega_g: r0 * drive.gradient_projection / 4.0 * sens,
        omega_z: drive.field_at_ion / 4.0 * sens,
        r0,
        omega_r,
        omega_gdrive: hz_to_rad(drive.gradient_freq),
        omega_mu: hz_to_rad(drive.mw_rabi),
        delta: hz_to_rad(drive.mw_detuning),
        gradient_phase: drive.gradient_phase,
        mw_phase: drive.mw_phase,
    })
}

/// Ωμ = B_x ⟨↓|μ_x|↑⟩ / 2ħ, with the matrix element in J/T.
pub fn microwave_rabi_from_field(b_x: f64, moment_matrix_element: f64) -> f64 {
    b_x * moment_matrix_element / (2.0 * HBAR)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::{rad_to_hz, ATOMIC_MASS_UNIT};
    use crate::Error;

    fn r1_drive(projection: f64, field: f64) -> DriveConfig {
        DriveConfig {
            gradient_freq: 5e6,
            gradient_projection: projection,
            field_at_ion: field,
            ..DriveConfig::new("r1")
        }
    }

    #[test]
    fn extent_of_25u_at_6p2mhz() {
        let r0 = ground_state_extent(25.0 * ATOMIC_MASS_UNIT, hz_to_rad(6.2e6));
        assert!((r0 - 5.71e-9).abs() < 0.01e-9, "r0 = {r0}");
    }

    #[test]
    fn measured_gradient_gives_measured_coupling() {
        let trap = IonTrapConfig::mg25_surface_trap();
        let c = derive_couplings(&trap, &r1_drive(49.4, 0.0)).unwrap();
        let og = rad_to_hz(c.omega_g.abs());
        assert!((og - 1383.0).abs() / 1383.0 < 0.01, "Ωg/2π = {og}");
        // negative sensitivity, positive projection
        assert!(c.omega_g < 0.0);
        assert_eq!(c.omega_z, 0.0);
        assert_eq!(c.r0, ground_state_extent(trap.ion_mass, c.omega_r));
    }

    #[test]
    fn field_amplitude_sets_omega_z() {
        let trap = IonTrapConfig::mg25_surface_trap();
        let c = derive_couplings(&trap, &r1_drive(0.0, 1e-4)).unwrap();
        assert!((c.omega_z - hz_to_rad(-19.7e9 * 1e-4 / 4.0)).abs() < 1e-6);
    }

    #[test]
    fn unknown_mode() {
        let trap = IonTrapConfig::mg25_surface_trap();
        let err = derive_couplings(&trap, &DriveConfig::new("r3")).unwrap_err();
        assert_eq!(err, Error::UnknownMode("r3".into()));
    }

    #[test]
    fn microwave_rabi_is_linear() {
        assert_eq!(microwave_rabi_from_field(0.0, 9.27e-24), 0.0);
        let one = microwave_rabi_from_field(1e-5, 9.27e-24);
        let two = microwave_rabi_from_field(2e-5, 9.27e-24);
        assert!((two - 2.0 * one).abs() < 1e-9 * one);
        // field giving Ωμ/2π = 375 kHz
        let mu = 9.27e-24;
        let b = hz_to_rad(375e3) * 2.0 * HBAR / mu;
        assert!((rad_to_hz(microwave_rabi_from_field(b, mu)) - 375e3).abs() < 1e-6);
    }
}
