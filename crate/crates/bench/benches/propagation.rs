use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use ionmotion::dynamics::{max_step_limit, propagate, PropagationFrame};
use ionmotion::model::rotating_frame_hamiltonian;
use ionmotion::qcore::{expm_hermitian, thermal_state};
use ionmotion::{DriveProgram, EnvelopeKind, HilbertSpace, PropagationSettings, PulseEnvelope, QuantumState};
use ionmotion_bench::couplings;

fn quiet() -> PropagationSettings {
    PropagationSettings { samples: 1, ..PropagationSettings::default() }
}

/// One fourth-order substep on a pure state (two kernel applications).
fn kernel_step(c: &mut Criterion) {
    let mut g = c.benchmark_group("kernel_step");
    let cp = couplings(0.0);
    let h = max_step_limit(&cp, PropagationFrame::Rotating);
    let program = DriveProgram::pulse(cp, PulseEnvelope::square(h).unwrap()).unwrap();
    for n in [8, 20, 40] {
        let state = QuantumState::ground(HilbertSpace::new(n).unwrap());
        g.bench_with_input(BenchmarkId::from_parameter(n), &state, |b, s| {
            b.iter(|| propagate(&program, s, &quiet()).unwrap())
        });
    }
    g.finish();
}

/// Dense Hermitian exponential of the full generator.
fn expm(c: &mut Criterion) {
    let mut g = c.benchmark_group("expm_hermitian");
    for n in [8, 20, 40] {
        let space = HilbertSpace::new(n).unwrap();
        let h = rotating_frame_hamiltonian(&couplings(0.0), 1e-7, 1.0, space);
        g.bench_with_input(BenchmarkId::from_parameter(n), &h, |b, h| b.iter(|| expm_hermitian(h, 1e-8).unwrap()));
    }
    g.finish();
}

/// A 150 μs Blackman cooling pulse on a pure state and on a thermal density.
fn pulse(c: &mut Criterion) {
    let mut g = c.benchmark_group("pulse_150us");
    g.sample_size(10);
    let cp = couplings(-2.0 * std::f64::consts::PI * 1.039e6);
    let env = PulseEnvelope::with_total(EnvelopeKind::Blackman, 10e-6, 150e-6).unwrap();
    let program = DriveProgram::pulse(cp, env).unwrap();
    let pure = QuantumState::ground(HilbertSpace::new(8).unwrap());
    g.bench_function("pure_n8", |b| b.iter(|| propagate(&program, &pure, &quiet()).unwrap()));
    let thermal = thermal_state(HilbertSpace::new(36).unwrap(), 2.0).unwrap();
    g.bench_function("thermal_n36", |b| b.iter(|| propagate(&program, &thermal, &quiet()).unwrap()));
    g.finish();
}

criterion_group!(benches, kernel_step, expm, pulse);
criterion_main!(benches);
