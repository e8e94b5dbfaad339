use std::f64::consts::PI;

use super::fit::{fit_line, fit_rabi, RabiFit};
use super::{par_map, reason};
use crate::dynamics::{propagate_sampled, DriveProgram, PropagationSettings, PulseEnvelope};
use crate::model::{bessel_j, Couplings};
use crate::qcore::{HilbertSpace, QuantumState};
use crate::{CancelToken, Error, Result};

/// Spin-flip comb scan: Rabi frequency of the m-th line against the Bessel
/// argument 4Ωz/ω_g. The gradient coupling is switched off and only two
/// Fock levels are kept, so this is a spin-only simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct BesselScanSpec {
    /// Ωμ, ω_g and ω_r are taken from here; Ωg, Ωz and δ are overridden.
    pub base: Couplings,
    pub arguments: Vec<f64>,
    pub orders: Vec<u32>,
    pub settings: PropagationSettings,
    /// Samples per record (stroboscopic, at multiples of the gradient period).
    pub samples: usize,
    /// Longest record before a line is declared unresolved, seconds.
    pub max_span: f64,
    /// Peak-to-peak p_up below which a line counts as absent.
    pub contrast_floor: f64,
}

impl BesselScanSpec {
    pub fn new(base: Couplings, arguments: Vec<f64>, orders: Vec<u32>) -> Self {
        Self {
            base,
            arguments,
            orders,
            settings: PropagationSettings::default(),
            samples: 128,
            max_span: 3e-3,
            contrast_floor: 1e-4,
        }
    }
}

/// One (argument, order) point.
#[derive(Debug, Clone, PartialEq)]
pub struct BesselPoint {
    pub argument: f64,
    pub order: u32,
    /// Fitted |Ωm|/Ωμ; `None` if the point failed.
    pub ratio: Option<f64>,
    /// |J_m(argument)|.
    pub expected: f64,
    /// The line was not resolved above the contrast floor; ratio reported as 0.
    pub below_floor: bool,
    pub fit: Option<RabiFit>,
    pub note: Option<String>,
}

/// Fitted |Ωm|/Ωμ at one argument and order.
///
/// The microwave sits on the m-th comb line (δ = m·ω_g) and p_up is sampled
/// once per gradient period. The record is lengthened by factors of eight
/// until at least 1.25 oscillations are resolved. The reported rate is
/// `Ω_fit·√A`, which removes the detuning contribution to the generalized
/// Rabi frequency of a slightly shifted line.
pub fn bessel_point(spec: &BesselScanSpec, argument: f64, order: u32) -> Result<BesselPoint> {
    let wg = spec.base.omega_gdrive;
    if !(wg > 0.0) {
        return Err(Error::InvalidInput("Bessel scan needs an oscillating gradient (ω_g > 0)".into()));
    }
    if !(spec.base.omega_mu > 0.0) {
        return Err(Error::InvalidInput("Bessel scan needs a microwave drive (Ωμ > 0)".into()));
    }
    let c = Couplings {
        omega_g: 0.0,
        omega_z: argument * wg / 4.0,
        delta: order as f64 * wg,
        ..spec.base
    };
    let space = HilbertSpace::new(2)?;
    let initial = QuantumState::ground(space);
    let period = 2.0 * PI / wg;
    let expected = bessel_j(order as i32, argument).abs();
    let settings = PropagationSettings { samples: 0, ..spec.settings };
    let n = spec.samples.max(8);

    let mut stride = 1usize;
    loop {
        let times: Vec<f64> = (0..n).map(|k| (k * stride) as f64 * period).collect();
        let span = times[n - 1];
        let program = DriveProgram::pulse(c, PulseEnvelope::square(span)?)?;
        let rec = propagate_sampled(&program, &initial, &settings, &times)?;
        let (lo, hi) = rec.p_up.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &p| (a.min(p), b.max(p)));
        let longer = span * 8.0 <= spec.max_span * (1.0 + 1e-9);
        if hi - lo < spec.contrast_floor {
            if longer {
                stride *= 8;
                continue;
            }
            return Ok(BesselPoint { argument, order, ratio: Some(0.0), expected, below_floor: true, fit: None, note: None });
        }
        match fit_rabi(&rec.times, &rec.p_up) {
            Ok(fit) => {
                let ratio = fit.frequency * fit.amplitude.clamp(0.0, 1.0).sqrt() / spec.base.omega_mu;
                return Ok(BesselPoint { argument, order, ratio: Some(ratio), expected, below_floor: false, fit: Some(fit), note: None });
            }
            Err(Error::NoFit(_)) if longer => stride *= 8,
            Err(e) => return Err(e),
        }
    }
}

/// Every (argument, order) combination, arguments outermost.
pub fn bessel_scan(spec: &BesselScanSpec, cancel: &CancelToken) -> Vec<BesselPoint> {
    let jobs: Vec<(f64, u32)> = spec.arguments.iter().flat_map(|&x| spec.orders.iter().map(move |&m| (x, m))).collect();
    par_map(&jobs, cancel, |&(x, m)| bessel_point(spec, x, m))
        .into_iter()
        .zip(&jobs)
        .map(|(r, &(argument, order))| {
            r.unwrap_or_else(|e| BesselPoint {
                argument,
                order,
                ratio: None,
                expected: bessel_j(order as i32, argument).abs(),
                below_floor: false,
                fit: None,
                note: Some(reason(&e)),
            })
        })
        .collect()
}

/// Argument at which the m = 0 rate vanishes, from a scan over `[lo, hi]`
/// with spacing `step`. The unsigned rates are given a sign change at their
/// minimum and a straight line is fitted through the signed values. Points
/// too close to the zero to resolve an oscillation are left out.
pub fn j0_zero_crossing(spec: &BesselScanSpec, lo: f64, hi: f64, step: f64, cancel: &CancelToken) -> Result<f64> {
    let count = ((hi - lo) / step).round() as usize + 1;
    if count < 3 {
        return Err(Error::InvalidInput("zero-crossing scan needs at least three arguments".into()));
    }
    let grid: Vec<f64> = (0..count).map(|k| lo + k as f64 * step).collect();
    let mut xs = Vec::new();
    let mut rates = Vec::new();
    for (x, r) in grid.iter().zip(par_map(&grid, cancel, |&x| bessel_point(spec, x, 0))) {
        match r {
            Ok(BesselPoint { ratio: Some(rate), below_floor: false, .. }) => {
                xs.push(*x);
                rates.push(rate);
            }
            Ok(_) | Err(Error::NoFit(_)) => {}
            Err(e) => return Err(e),
        }
    }
    if xs.len() < 3 {
        return Err(Error::NoFit("fewer than three resolved points in zero-crossing scan".into()));
    }
    let imin = (0..xs.len()).min_by(|&a, &b| rates[a].total_cmp(&rates[b])).unwrap_or(0);
    let mut best: Option<(f64, f64)> = None;
    // the minimum itself may lie on either side of the zero
    for split in [imin, imin + 1] {
        let signed: Vec<f64> = rates.iter().enumerate().map(|(i, r)| if i < split { *r } else { -r }).collect();
        let line = fit_line(&xs, &signed)?;
        let ssr: f64 = xs.iter().zip(&signed).map(|(x, y)| (y - line.slope * x - line.intercept).powi(2)).sum();
        if best.is_none_or(|(s, _)| ssr < s) && line.slope != 0.0 {
            best = Some((ssr, -line.intercept / line.slope));
        }
    }
    best.map(|(_, x)| x).ok_or_else(|| Error::NoFit("no zero crossing".into()))
}
