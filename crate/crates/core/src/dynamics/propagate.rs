//! Piecewise-constant propagation of drive programs.
//!
//! Every substep applies the fourth-order commutator-free Magnus step: two
//! exponentials of combinations of `H` at the Gauss nodes, each exactly
//! unitary. Internally the spin is
//! written in a frame co-rotating with the microwave detuning, where the
//! generator is periodic in the gradient period `2π/ω_g`; on pulse plateaus
//! one period is exponentiated once and reused. Populations are identical in
//! both frames and final states are rotated back before they are returned.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DMatrixView, DMatrixViewMut};
use num_complex::Complex64 as C64;

use super::envelope::PulseEnvelope;
use super::kernel::{Block, Kernel};
use crate::model::{generator, Couplings, Frame, Generator};
use crate::qcore::{HilbertSpace, QuantumState};
use crate::{Error, Operator, Result};

/// Substeps per period of the fastest rate.
const STEPS_PER_PERIOD: f64 = 20.0;
/// Minimum number of plateau periods before a period propagator is cached.
const MIN_CACHED_BLOCKS: usize = 4;
/// Substeps per cached block when the gradient is static.
const STATIC_BLOCK_STEPS: f64 = 16.0;
/// Gauss-Legendre nodes of a substep, as fractions of its length.
const GAUSS: [f64; 2] = [0.5 - SQRT3 / 6.0, 0.5 + SQRT3 / 6.0];
/// Weights of the fourth-order commutator-free Magnus step
/// `exp(−ih(w₀G₁ + w₁G₂)) · exp(−ih(w₁G₁ + w₀G₂))`.
const CF4: [f64; 2] = [0.25 - SQRT3 / 6.0, 0.25 + SQRT3 / 6.0];
const SQRT3: f64 = 1.732_050_807_568_877_2;
/// Density eigenvalues below this are dropped from the factor.
const RANK_FLOOR: f64 = 1e-15;

/// Picture in which the dynamics is integrated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PropagationFrame {
    /// Rotating frame of the qubit and of the gradient drive.
    Rotating,
    /// Laboratory frame with qubit frequency `qubit_freq` (rad/s).
    Lab { qubit_freq: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagationSettings {
    /// Largest substep, seconds. `None` uses the largest allowed value.
    pub max_step: Option<f64>,
    /// Number of evenly spaced observable samples over the program,
    /// including both end points when at least two.
    pub samples: usize,
    /// Largest population tolerated in the top Fock levels.
    pub truncation_guard: f64,
    pub frame: PropagationFrame,
}

impl Default for PropagationSettings {
    fn default() -> Self {
        Self { max_step: None, samples: 2, truncation_guard: 1e-6, frame: PropagationFrame::Rotating }
    }
}

impl PropagationSettings {
    pub fn validate(&self) -> Result<()> {
        if let Some(h) = self.max_step {
            if !(h > 0.0) || !h.is_finite() {
                return Err(Error::InvalidInput(format!("max_step must be > 0, got {h}")));
            }
        }
        if !(self.truncation_guard > 0.0) {
            return Err(Error::InvalidInput("truncation_guard must be > 0".into()));
        }
        if let PropagationFrame::Lab { qubit_freq } = self.frame {
            if !(qubit_freq > 0.0) {
                return Err(Error::InvalidInput("lab-frame qubit frequency must be > 0".into()));
            }
        }
        Ok(())
    }

    /// Substep actually used for `c`: the requested one, checked against
    /// [`max_step_limit`], or the limit itself.
    pub fn resolve_step(&self, c: &Couplings) -> Result<f64> {
        let limit = max_step_limit(c, self.frame);
        match self.max_step {
            None => Ok(limit),
            Some(h) if h <= limit * (1.0 + 1e-12) => Ok(h),
            Some(h) => Err(Error::StepTooLarge { max_step: h, limit }),
        }
    }
}

/// Largest admissible substep: a twentieth of the period of the fastest rate.
pub fn max_step_limit(c: &Couplings, frame: PropagationFrame) -> f64 {
    let mut fastest = [
        2.0 * c.omega_gdrive,
        c.mode_detuning().abs(),
        c.delta.abs(),
        2.0 * c.omega_mu,
        4.0 * c.omega_z.abs(),
    ]
    .into_iter()
    .fold(0.0, f64::max);
    if let PropagationFrame::Lab { qubit_freq } = frame {
        fastest = fastest.max(2.0 * (qubit_freq + c.delta.abs())).max(2.0 * c.omega_r);
    }
    if fastest == 0.0 {
        return f64::INFINITY;
    }
    2.0 * PI / fastest / STEPS_PER_PERIOD
}

/// Microwave and gradient envelopes applied to one set of couplings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveProgram {
    pub couplings: Couplings,
    pub mw_envelope: PulseEnvelope,
    pub gradient_envelope: PulseEnvelope,
    /// Seconds.
    pub duration: f64,
}

impl DriveProgram {
    pub fn new(
        couplings: Couplings,
        mw_envelope: PulseEnvelope,
        gradient_envelope: PulseEnvelope,
        duration: f64,
    ) -> Result<Self> {
        let p = Self { couplings, mw_envelope, gradient_envelope, duration };
        p.validate()?;
        Ok(p)
    }

    /// Both tones pulsed together with the same envelope.
    pub fn pulse(couplings: Couplings, envelope: PulseEnvelope) -> Result<Self> {
        Self::new(couplings, envelope, envelope, envelope.total_duration())
    }

    pub fn validate(&self) -> Result<()> {
        self.mw_envelope.validate()?;
        self.gradient_envelope.validate()?;
        let longest = self.mw_envelope.total_duration().max(self.gradient_envelope.total_duration());
        if !(self.duration >= longest * (1.0 - 1e-12)) || !self.duration.is_finite() {
            return Err(Error::InvalidInput(format!(
                "program duration {} s is shorter than its envelopes ({longest} s)",
                self.duration
            )));
        }
        Ok(())
    }

    /// `(microwave, gradient)` envelope values at `t`.
    pub fn envelopes(&self, t: f64) -> (f64, f64) {
        (self.mw_envelope.value(t), self.gradient_envelope.value(t))
    }
}

/// Observables recorded during a propagation.
#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionRecord {
    /// Sample times, seconds (on substep boundaries).
    pub times: Vec<f64>,
    pub p_up: Vec<f64>,
    pub mean_n: Vec<f64>,
    pub final_state: QuantumState,
}

/// State as a factor `X` with `ρ = X X†`; a pure state is a single column.
#[derive(Debug, Clone)]
pub(crate) struct Factor {
    pub(crate) space: HilbertSpace,
    pub(crate) x: Block,
    pub(crate) pure: bool,
}

impl Factor {
    pub(crate) fn from_state(state: &QuantumState) -> Self {
        let space = state.space();
        match state {
            QuantumState::Pure { psi, .. } => {
                Factor { space, x: Block::from_matrix(&DMatrix::from_column_slice(psi.len(), 1, psi.as_slice())), pure: true }
            }
            QuantumState::Density { rho, .. } => {
                let d = space.dim();
                let zero = C64::new(0.0, 0.0);
                let off_diag = (0..d).any(|j| (0..d).any(|i| i != j && rho[(i, j)] != zero));
                let (values, vectors) = if off_diag {
                    let h = (rho + rho.adjoint()) * C64::new(0.5, 0.0);
                    let eig = h.symmetric_eigen();
                    (eig.eigenvalues.iter().copied().collect::<Vec<_>>(), eig.eigenvectors)
                } else {
                    ((0..d).map(|i| rho[(i, i)].re).collect(), DMatrix::identity(d, d))
                };
                let keep: Vec<usize> = (0..d).filter(|&i| values[i] > RANK_FLOOR).collect();
                let x = DMatrix::from_fn(d, keep.len(), |r, col| vectors[(r, keep[col])] * values[keep[col]].sqrt());
                Factor { space, x: Block::from_matrix(&x), pure: false }
            }
        }
    }

    fn identity(space: HilbertSpace) -> Self {
        Factor { space, x: Block::identity(space.dim()), pure: false }
    }

    pub(crate) fn into_state(self) -> QuantumState {
        let x = self.x.to_matrix();
        if self.pure {
            QuantumState::Pure { space: self.space, psi: x.column(0).into_owned() }
        } else {
            let rho = &x * x.adjoint();
            QuantumState::Density { space: self.space, rho }
        }
    }

    pub(crate) fn p_up(&self) -> f64 {
        let n = self.space.fock_dim();
        (n..2 * n).map(|r| self.x.row_weight(r)).sum::<f64>().clamp(0.0, 1.0)
    }

    pub(crate) fn mean_n(&self) -> f64 {
        let n = self.space.fock_dim();
        (0..2 * n).map(|r| (r % n) as f64 * self.x.row_weight(r)).sum::<f64>().max(0.0)
    }

    pub(crate) fn guard_population(&self) -> f64 {
        let n = self.space.fock_dim();
        self.space.guard_levels().flat_map(|k| [k, n + k]).map(|r| self.x.row_weight(r)).sum()
    }
}

/// Dense propagator kept as the split parts of its transpose, so that
/// `Yᵀ = Xᵀ Uᵀ` is four real matrix products on the stored layout.
struct Dense {
    re: DMatrix<f64>,
    im: DMatrix<f64>,
}

impl Dense {
    fn from_block(u: &Block) -> Self {
        let (re, im) = u.transposed_parts();
        Self { re, im }
    }
}

/// Sample schedule and the values recorded so far.
struct Observer {
    targets: Vec<f64>,
    next: usize,
    times: Vec<f64>,
    p_up: Vec<f64>,
    mean_n: Vec<f64>,
}

impl Observer {
    fn new(mut targets: Vec<f64>) -> Self {
        targets.sort_by(f64::total_cmp);
        Self { targets, next: 0, times: Vec::new(), p_up: Vec::new(), mean_n: Vec::new() }
    }

    fn pending(&self) -> Option<f64> {
        self.targets.get(self.next).copied()
    }

    /// Records every target within `half` of the current time `t`.
    fn flush(&mut self, t: f64, half: f64, f: &Factor) {
        while let Some(target) = self.pending() {
            if target > t + half {
                break;
            }
            self.times.push(t);
            self.p_up.push(f.p_up());
            self.mean_n.push(f.mean_n());
            self.next += 1;
        }
    }
}

/// Single-threaded propagation engine for one set of couplings.
pub(crate) struct Engine {
    c: Couplings,
    frame: Frame,
    fock_dim: usize,
    max_step: f64,
    guard: Option<f64>,
    kernel: Kernel,
    tmp: Block,
}

impl Engine {
    pub(crate) fn new(c: &Couplings, space: HilbertSpace, settings: &PropagationSettings, guarded: bool) -> Result<Self> {
        settings.validate()?;
        let max_step = settings.resolve_step(c)?;
        let frame = match settings.frame {
            PropagationFrame::Rotating => Frame::Detuning,
            PropagationFrame::Lab { qubit_freq } => Frame::Lab { omega0: qubit_freq },
        };
        Ok(Self {
            c: *c,
            frame,
            fock_dim: space.fock_dim(),
            max_step,
            guard: guarded.then_some(settings.truncation_guard),
            kernel: Kernel::new(space.fock_dim()),
            tmp: Block::zeros(0, 0),
        })
    }

    fn generator(&self, t: f64, env: (f64, f64)) -> Generator {
        generator(&self.c, self.frame, t, env.0, env.1, self.fock_dim)
    }

    /// Period over which the generator repeats on a plateau, with its substep count.
    fn block(&self) -> Option<(f64, usize)> {
        match self.frame {
            Frame::Lab { .. } => None,
            _ if self.max_step.is_infinite() => None,
            _ => {
                let period = if self.c.omega_gdrive > 0.0 {
                    2.0 * PI / self.c.omega_gdrive
                } else {
                    STATIC_BLOCK_STEPS * self.max_step
                };
                Some((period, (period / self.max_step).ceil() as usize))
            }
        }
    }

    fn substeps(&self, len: f64) -> usize {
        if self.max_step.is_infinite() {
            1
        } else {
            ((len / self.max_step).ceil() as usize).max(1)
        }
    }

    fn check(&self, f: &Factor, t: f64) -> Result<()> {
        if let Some(limit) = self.guard {
            let population = f.guard_population();
            if population > limit {
                return Err(Error::Truncation { time: t, population });
            }
        }
        Ok(())
    }

    /// Steps `x` across `[t0, t0 + len]`, sampling `env(t)` at the Gauss
    /// nodes of each substep.
    fn march(&mut self, f: &mut Factor, t0: f64, len: f64, env: &dyn Fn(f64) -> (f64, f64), obs: &mut Option<&mut Observer>) -> Result<()> {
        if len <= 0.0 {
            return Ok(());
        }
        let n = self.substeps(len);
        let dt = len / n as f64;
        for j in 0..n {
            let t = t0 + j as f64 * dt;
            if let Some(o) = obs.as_deref_mut() {
                o.flush(t, 0.5 * dt, f);
            }
            let (t1, t2) = (t + GAUSS[0] * dt, t + GAUSS[1] * dt);
            let (g1, g2) = (self.generator(t1, env(t1)), self.generator(t2, env(t2)));
            self.kernel.step(&Generator::mix(&g1, CF4[1], &g2, CF4[0]), dt, &mut f.x);
            self.kernel.step(&Generator::mix(&g1, CF4[0], &g2, CF4[1]), dt, &mut f.x);
            self.check(f, t + dt)?;
        }
        Ok(())
    }

    /// Dense propagator of `[t0, t0 + len]` under `env`, unguarded.
    fn span_unitary(&mut self, t0: f64, len: f64, env: &dyn Fn(f64) -> (f64, f64)) -> Dense {
        let space = HilbertSpace::new(self.fock_dim).expect("valid dimension");
        let mut u = Factor::identity(space);
        let guard = self.guard.take();
        self.march(&mut u, t0, len, env, &mut None).expect("unguarded march cannot fail");
        self.guard = guard;
        Dense::from_block(&u.x)
    }

    fn apply(&mut self, u: &Dense, f: &mut Factor) {
        let (d, r) = (f.x.rows, f.x.cols);
        if self.tmp.rows != d || self.tmp.cols != r {
            self.tmp = Block::zeros(d, r);
        }
        let xr = DMatrixView::from_slice(&f.x.re, r, d);
        let xi = DMatrixView::from_slice(&f.x.im, r, d);
        let mut yr = DMatrixViewMut::from_slice(&mut self.tmp.re, r, d);
        yr.gemm(1.0, &xr, &u.re, 0.0);
        yr.gemm(-1.0, &xi, &u.im, 1.0);
        let mut yi = DMatrixViewMut::from_slice(&mut self.tmp.im, r, d);
        yi.gemm(1.0, &xr, &u.im, 0.0);
        yi.gemm(1.0, &xi, &u.re, 1.0);
        std::mem::swap(&mut self.tmp, &mut f.x);
    }

    /// Propagates across a segment on which both envelopes are constant.
    fn steady(&mut self, f: &mut Factor, t0: f64, len: f64, env: (f64, f64), obs: &mut Option<&mut Observer>) -> Result<()> {
        let constant = move |_: f64| env;
        let Some((period, nsub)) = self.block() else {
            return self.march(f, t0, len, &constant, obs);
        };
        let blocks = (len / period * (1.0 + 1e-12)).floor() as usize;
        if blocks < MIN_CACHED_BLOCKS {
            return self.march(f, t0, len, &constant, obs);
        }
        let u = self.span_unitary(t0, period, &constant);
        let half = 0.5 * period / nsub as f64;
        for k in 0..blocks {
            let t = t0 + k as f64 * period;
            let inside = match obs.as_deref_mut() {
                Some(o) => {
                    o.flush(t, half, f);
                    o.pending().is_some_and(|s| s < t + period - half)
                }
                None => false,
            };
            if inside {
                self.march(f, t, period, &constant, obs)?;
            } else {
                self.apply(&u, f);
                self.check(f, t + period)?;
            }
        }
        let done = blocks as f64 * period;
        self.march(f, t0 + done, (len - done).max(0.0), &constant, obs)
    }

    /// Runs the whole program.
    fn run(&mut self, program: &DriveProgram, f: &mut Factor, mut obs: Option<&mut Observer>) -> Result<()> {
        let mw = program.mw_envelope;
        let grad = program.gradient_envelope;
        let end = program.duration;
        let mut cuts: Vec<f64> = mw.breakpoints().into_iter().chain(grad.breakpoints()).chain([0.0, end]).filter(|t| *t >= 0.0 && *t <= end).collect();
        cuts.sort_by(f64::total_cmp);
        cuts.dedup_by(|a, b| (*a - *b).abs() <= 1e-15 * end.max(1e-300));
        let env = move |t: f64| (mw.value(t), grad.value(t));
        for w in cuts.windows(2) {
            let (a, b) = (w[0], w[1]);
            let mid = 0.5 * (a + b);
            if mw.is_flat_at(mid) && grad.is_flat_at(mid) {
                self.steady(f, a, b - a, env(mid), &mut obs)?;
            } else {
                self.march(f, a, b - a, &env, &mut obs)?;
            }
        }
        if let Some(o) = obs {
            o.flush(end, f64::INFINITY, f);
        }
        Ok(())
    }

    /// Rotates the internal frame at time `t` back to the rotating frame.
    fn to_rotating_frame(&self, x: &mut Block, t: f64) {
        if self.frame != Frame::Detuning {
            return;
        }
        let n = self.fock_dim;
        let up = C64::from_polar(1.0, -0.5 * self.c.delta * t);
        for r in 0..2 * n {
            x.scale_row(r, if r < n { up.conj() } else { up });
        }
    }
}

fn check_space(program: &DriveProgram, initial: &QuantumState) -> Result<()> {
    program.validate()?;
    initial.validate()?;
    Ok(())
}

fn uniform_times(duration: f64, samples: usize) -> Vec<f64> {
    match samples {
        0 => Vec::new(),
        1 => vec![duration],
        n => (0..n).map(|k| duration * k as f64 / (n - 1) as f64).collect(),
    }
}

/// Propagates `initial` through `program`, sampling `settings.samples`
/// evenly spaced times.
pub fn propagate(program: &DriveProgram, initial: &QuantumState, settings: &PropagationSettings) -> Result<EvolutionRecord> {
    propagate_sampled(program, initial, settings, &uniform_times(program.duration, settings.samples))
}

/// Propagates `initial` through `program`, sampling at `times` (snapped to
/// the nearest substep boundary; the recorded times are the snapped ones).
pub fn propagate_sampled(
    program: &DriveProgram,
    initial: &QuantumState,
    settings: &PropagationSettings,
    times: &[f64],
) -> Result<EvolutionRecord> {
    check_space(program, initial)?;
    let mut engine = Engine::new(&program.couplings, initial.space(), settings, true)?;
    let mut f = Factor::from_state(initial);
    engine.check(&f, 0.0)?;
    let mut obs = Observer::new(times.to_vec());
    engine.run(program, &mut f, Some(&mut obs))?;
    engine.to_rotating_frame(&mut f.x, program.duration);
    Ok(EvolutionRecord { times: obs.times, p_up: obs.p_up, mean_n: obs.mean_n, final_state: f.into_state() })
}

/// Propagator of the whole program in the rotating frame (or the lab frame
/// when selected). The truncation guard is not applied.
pub fn program_unitary(program: &DriveProgram, space: HilbertSpace, settings: &PropagationSettings) -> Result<Operator> {
    program.validate()?;
    let mut engine = Engine::new(&program.couplings, space, settings, false)?;
    let mut f = Factor::identity(space);
    engine.run(program, &mut f, None)?;
    engine.to_rotating_frame(&mut f.x, program.duration);
    Ok(Operator::from_matrix_unchecked(space, f.x.to_matrix()))
}

/// Populations after a family of pulses that differ only in plateau length.
#[derive(Debug, Clone, PartialEq)]
pub struct PlateauScan {
    /// Plateau lengths actually simulated (rounded to whole gradient
    /// periods), seconds, in input order.
    pub plateaus: Vec<f64>,
    pub p_up: Vec<f64>,
    pub mean_n: Vec<f64>,
}

/// Simulates `template` with each plateau length in `plateaus`.
///
/// Both envelopes must share kind and ramp time. The rising ramp is
/// propagated once, the plateau is advanced period by period, and the
/// falling ramp is applied for each requested length. Plateau lengths are
/// rounded to whole periods of the gradient drive so the falling ramp is the
/// same for every length.
pub fn scan_plateau(
    template: &DriveProgram,
    plateaus: &[f64],
    initial: &QuantumState,
    settings: &PropagationSettings,
) -> Result<PlateauScan> {
    let mw = template.mw_envelope;
    let grad = template.gradient_envelope;
    if mw.kind != grad.kind || mw.ramp_time != grad.ramp_time {
        return Err(Error::InvalidInput("plateau scans need identical microwave and gradient ramps".into()));
    }
    if settings.frame != PropagationFrame::Rotating {
        return Err(Error::InvalidInput("plateau scans run in the rotating frame".into()));
    }
    if plateaus.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) {
        return Err(Error::InvalidInput("plateau lengths must be finite and >= 0".into()));
    }
    initial.validate()?;
    let space = initial.space();
    let mut engine = Engine::new(&template.couplings, space, settings, true)?;
    let ramp = mw.ramp_time;
    let (period, _) = engine.block().unwrap_or((1e-6, 1));

    let mut f = Factor::from_state(initial);
    engine.check(&f, 0.0)?;
    let rising = move |t: f64| (mw.ramp_shape(t / ramp), grad.ramp_shape(t / ramp));
    let falling = move |t: f64| (mw.falling(t - ramp), grad.falling(t - ramp));
    engine.march(&mut f, 0.0, ramp, &rising, &mut None)?;

    let counts: Vec<usize> = plateaus.iter().map(|p| (p / period).round() as usize).collect();
    let mut order: Vec<usize> = (0..counts.len()).collect();
    order.sort_by_key(|&i| counts[i]);

    let dense_down = ramp > 0.0 && counts.len() * f.x.cols > space.dim();
    let u_down = dense_down.then(|| engine.span_unitary(ramp, ramp, &falling));
    let u_block = engine.span_unitary(ramp, period, &|_| (1.0, 1.0));

    let mut p_up = vec![0.0; counts.len()];
    let mut mean_n = vec![0.0; counts.len()];
    let mut k = 0;
    for &i in &order {
        while k < counts[i] {
            engine.apply(&u_block, &mut f);
            k += 1;
            engine.check(&f, ramp + k as f64 * period)?;
        }
        let mut g = f.clone();
        match &u_down {
            Some(u) => engine.apply(u, &mut g),
            None => engine.march(&mut g, ramp, ramp, &falling, &mut None)?,
        }
        engine.check(&g, 2.0 * ramp + k as f64 * period)?;
        p_up[i] = g.p_up();
        mean_n[i] = g.mean_n();
    }
    Ok(PlateauScan { plateaus: counts.iter().map(|&c| c as f64 * period).collect(), p_up, mean_n })
}
