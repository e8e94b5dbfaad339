use crate::{Error, Result};

/// Shape of the amplitude ramps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EnvelopeKind {
    /// Linear ramps; abrupt switching when `ramp_time` is zero.
    Rectangular,
    /// Three-term Blackman window ramps.
    Blackman,
}

/// Amplitude envelope: ramp up, plateau at 1, ramp down; zero outside.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseEnvelope {
    pub kind: EnvelopeKind,
    /// Seconds.
    pub ramp_time: f64,
    /// Seconds.
    pub plateau_time: f64,
}

impl PulseEnvelope {
    pub fn new(kind: EnvelopeKind, ramp_time: f64, plateau_time: f64) -> Result<Self> {
        let env = Self { kind, ramp_time, plateau_time };
        env.validate()?;
        Ok(env)
    }

    /// Abrupt rectangular pulse of length `duration`.
    pub fn square(duration: f64) -> Result<Self> {
        Self::new(EnvelopeKind::Rectangular, 0.0, duration)
    }

    /// Pulse of fixed total length `total` with ramps of `ramp_time` folded in.
    pub fn with_total(kind: EnvelopeKind, ramp_time: f64, total: f64) -> Result<Self> {
        Self::new(kind, ramp_time, total - 2.0 * ramp_time)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.ramp_time >= 0.0) || !self.ramp_time.is_finite() {
            return Err(Error::InvalidInput(format!("ramp_time must be >= 0, got {}", self.ramp_time)));
        }
        if !(self.plateau_time >= 0.0) || !self.plateau_time.is_finite() {
            return Err(Error::InvalidInput(format!("plateau_time must be >= 0, got {}", self.plateau_time)));
        }
        Ok(())
    }

    pub fn total_duration(&self) -> f64 {
        2.0 * self.ramp_time + self.plateau_time
    }

    /// Rising ramp shape at fraction `x` ∈ [0, 1] of the ramp.
    pub fn ramp_shape(&self, x: f64) -> f64 {
        let x = x.clamp(0.0, 1.0);
        match self.kind {
            EnvelopeKind::Rectangular => x,
            EnvelopeKind::Blackman => {
                use std::f64::consts::PI;
                (0.42 - 0.5 * (PI * x).cos() + 0.08 * (2.0 * PI * x).cos()).clamp(0.0, 1.0)
            }
        }
    }

    /// Envelope value at time `t` after the pulse start.
    pub fn value(&self, t: f64) -> f64 {
        let total = self.total_duration();
        if t < 0.0 || t > total {
            return 0.0;
        }
        if self.ramp_time == 0.0 {
            return 1.0;
        }
        if t < self.ramp_time {
            self.ramp_shape(t / self.ramp_time)
        } else if t <= self.ramp_time + self.plateau_time {
            1.0
        } else {
            self.ramp_shape((total - t) / self.ramp_time)
        }
    }

    /// Mean of the ramp shape over one ramp: each ramp contributes
    /// `ramp_area()·ramp_time` of full-amplitude pulse area.
    pub fn ramp_area(&self) -> f64 {
        match self.kind {
            EnvelopeKind::Rectangular => 0.5,
            EnvelopeKind::Blackman => 0.42,
        }
    }

    /// Plateau giving an effective full-amplitude duration `t_eff`, if the
    /// ramps alone do not already exceed it.
    pub fn plateau_for_area(&self, t_eff: f64) -> f64 {
        (t_eff - 2.0 * self.ramp_area() * self.ramp_time).max(0.0)
    }

    /// Value during the falling ramp, `tau` seconds after the plateau ends.
    pub(crate) fn falling(&self, tau: f64) -> f64 {
        if self.ramp_time == 0.0 {
            return 1.0;
        }
        self.ramp_shape(1.0 - tau / self.ramp_time)
    }

    /// Times at which the envelope changes between ramp, plateau and off.
    pub fn breakpoints(&self) -> [f64; 4] {
        let r = self.ramp_time;
        [0.0, r, r + self.plateau_time, self.total_duration()]
    }

    /// True if the envelope is constant at time `t` (not on a ramp).
    pub(crate) fn is_flat_at(&self, t: f64) -> bool {
        let [_, up, down, end] = self.breakpoints();
        self.ramp_time == 0.0 || t <= 0.0 || (t >= up && t <= down) || t >= end
    }
}
