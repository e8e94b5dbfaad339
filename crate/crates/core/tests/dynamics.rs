//! Cross-module behaviour of the propagator: pulse shaping, sequences and
//! conservation laws over randomized drives.

use std::f64::consts::PI;

use approx::assert_abs_diff_eq;
use ionmotion::dynamics::{evolve_density_sequence, program_unitary, propagate, SequenceStep};
use ionmotion::model::{bessel_j, sideband_resonance_detuning, Sideband};
use ionmotion::qcore::thermal_state;
use ionmotion::{
    Couplings, DriveProgram, EnvelopeKind, HilbertSpace, PropagationSettings, PulseEnvelope, QuantumState,
};
use proptest::prelude::*;

fn couplings(omega_mu: f64) -> Couplings {
    Couplings {
        omega_g: 0.0,
        omega_z: 0.0,
        r0: 5.7e-9,
        omega_r: 2.0 * PI * 6.2e6,
        omega_gdrive: 2.0 * PI * 5e6,
        omega_mu,
        delta: 0.0,
        gradient_phase: 0.0,
        mw_phase: 0.0,
    }
}

fn quiet() -> PropagationSettings {
    PropagationSettings { samples: 1, ..PropagationSettings::default() }
}

/// Carrier excitation left after a pulse tuned to the blue sideband at
/// 2Ωμ/(ω_r − ω_g) = 0.9, with the sideband coupling switched off.
fn carrier_leak(kind: EnvelopeKind, ramp: f64, plateau: f64) -> f64 {
    let c = couplings(0.45 * 2.0 * PI * 1.2e6);
    let c = c.with_delta(sideband_resonance_detuning(&c, Sideband::Blue).unwrap());
    let program = DriveProgram::pulse(c, PulseEnvelope::new(kind, ramp, plateau).unwrap()).unwrap();
    let ground = QuantumState::ground(HilbertSpace::new(4).unwrap());
    propagate(&program, &ground, &quiet()).unwrap().p_up[0]
}

#[test]
fn blackman_ramps_suppress_off_resonant_carrier() {
    let plateaus = [20e-6, 20.13e-6, 20.29e-6, 20.41e-6];
    let blackman = plateaus.iter().map(|&p| carrier_leak(EnvelopeKind::Blackman, 10e-6, p)).fold(0.0, f64::max);
    let square = plateaus.iter().map(|&p| carrier_leak(EnvelopeKind::Rectangular, 0.0, p)).sum::<f64>() / 4.0;
    assert!(blackman < 0.05, "Blackman leak {blackman}");
    assert!(blackman < square, "Blackman {blackman} vs square {square}");
}

#[test]
fn empty_sequence_returns_initial_state() {
    let space = HilbertSpace::new(16).unwrap();
    let initial = thermal_state(space, 0.5).unwrap();
    let rec = evolve_density_sequence(&[], &initial, &quiet()).unwrap();
    assert_eq!(rec.times, vec![0.0]);
    assert_abs_diff_eq!(rec.mean_n[0], initial.mean_phonon(), epsilon = 1e-14);
    let diff = (rec.final_state.density_matrix() - initial.density_matrix()).norm();
    assert_abs_diff_eq!(diff, 0.0, epsilon = 1e-14);
}

#[test]
/// Ωμt = π/4 leaves sin²(Ωμt) = 1/2 in spin-up before the repump.
fn repump_after_pulse_resets_spin_only() {
    let space = HilbertSpace::new(10).unwrap();
    let c = couplings(2.0 * PI * 100e3);
    let pulse = DriveProgram::pulse(c, PulseEnvelope::square(1.25e-6).unwrap()).unwrap();
    let rec = evolve_density_sequence(
        &[SequenceStep::Pulse(pulse), SequenceStep::Repump],
        &QuantumState::ground(space),
        &quiet(),
    )
    .unwrap();
    assert_abs_diff_eq!(rec.p_up[1], 0.5, epsilon = 1e-6);
    assert_abs_diff_eq!(rec.p_up[2], 0.0, epsilon = 1e-14);
    assert_abs_diff_eq!(rec.final_state.trace(), 1.0, epsilon = 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn propagator_is_unitary(
        og in 0.0..2.0 * PI * 20e3,
        oz in 0.0..2.0 * PI * 2e6,
        omu in 0.0..2.0 * PI * 300e3,
        delta in -2.0 * PI * 2e6..2.0 * PI * 2e6,
        phase in 0.0..2.0 * PI,
    ) {
        let c = Couplings { omega_g: og, omega_z: oz, delta, gradient_phase: phase, ..couplings(omu) };
        let env = PulseEnvelope::new(EnvelopeKind::Blackman, 1e-6, 1.3e-6).unwrap();
        let program = DriveProgram::pulse(c, env).unwrap();
        let u = program_unitary(&program, HilbertSpace::new(6).unwrap(), &PropagationSettings::default()).unwrap();
        prop_assert!(u.unitarity_error() < 1e-9, "unitarity error {}", u.unitarity_error());
    }

    #[test]
    fn bessel_recurrence_and_sum(x in 0.0..30.0f64, m in 1i32..12) {
        let lhs = bessel_j(m - 1, x) + bessel_j(m + 1, x);
        let rhs = 2.0 * m as f64 / x.max(1e-300) * bessel_j(m, x);
        prop_assert!((lhs - rhs).abs() < 1e-12 * (1.0 + rhs.abs()) || x == 0.0);
        let sum: f64 = bessel_j(0, x).powi(2) + 2.0 * (1..80).map(|k| bessel_j(k, x).powi(2)).sum::<f64>();
        prop_assert!((sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pure_state_populations_stay_normalized(
        omu in 2.0 * PI * 1e3..2.0 * PI * 200e3,
        delta in -2.0 * PI * 1e6..2.0 * PI * 1e6,
        n in 0usize..4,
    ) {
        let space = HilbertSpace::new(8).unwrap();
        let c = Couplings { omega_g: 2.0 * PI * 5e3, delta, ..couplings(omu) };
        let program = DriveProgram::pulse(c, PulseEnvelope::new(EnvelopeKind::Rectangular, 0.5e-6, 3e-6).unwrap()).unwrap();
        let initial = QuantumState::basis(space, ionmotion::Spin::Down, n);
        let rec = propagate(&program, &initial, &PropagationSettings { samples: 5, ..PropagationSettings::default() }).unwrap();
        prop_assert!((rec.final_state.trace() - 1.0).abs() < 1e-10);
        for p in &rec.p_up {
            prop_assert!((-1e-12..=1.0 + 1e-12).contains(p));
        }
    }
}
