//! Shared fixtures for the benchmarks.

use std::f64::consts::PI;

use ionmotion::Couplings;

/// Sideband-cooling drive on the 6.2 MHz mode with a 5 MHz gradient,
/// a field at the ion for modulation index 1.5 and detuning `delta` (rad/s).
pub fn couplings(delta: f64) -> Couplings {
    let omega_gdrive = 2.0 * PI * 5e6;
    Couplings {
        omega_g: 2.0 * PI * 1.383e3,
        omega_z: 1.5 * omega_gdrive / 4.0,
        r0: 5.7e-9,
        omega_r: 2.0 * PI * 6.2e6,
        omega_gdrive,
        omega_mu: 2.0 * PI * 300e3,
        delta,
        gradient_phase: 0.0,
        mw_phase: 0.0,
    }
}

#[cfg(test)]
mod tests {
    #[test]
    fn fixture_is_valid() {
        let c = super::couplings(0.0);
        assert!((4.0 * c.omega_z / c.omega_gdrive - 1.5).abs() < 1e-12);
    }
}
