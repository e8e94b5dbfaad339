//! Least-squares fit of `p(t) = A sin²(Ωt + φ) + c`.
//!
//! Written as `c₀ + a cos 2Ωt + b sin 2Ωt`, the model is linear in
//! `(c₀, a, b)` for fixed Ω. Ω is located on a periodogram of the residual
//! reduction and then refined by golden-section search.

use nalgebra::{Matrix3, Vector3};

use crate::{Error, Result};

/// Minimum number of samples.
pub const MIN_SAMPLES: usize = 8;
/// Minimum span in oscillation periods of sin².
pub const MIN_PERIODS: f64 = 1.25;
/// Minimum fraction of the variance the best sinusoid must explain.
pub const MIN_EXPLAINED: f64 = 0.5;
const OVERSAMPLING: f64 = 8.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RabiFit {
    /// Ω, rad/s.
    pub frequency: f64,
    pub amplitude: f64,
    pub offset: f64,
    /// φ, rad.
    pub phase: f64,
    pub rms_residual: f64,
}

impl RabiFit {
    pub fn eval(&self, t: f64) -> f64 {
        self.amplitude * (self.frequency * t + self.phase).sin().powi(2) + self.offset
    }
}

struct Linear {
    coef: Vector3<f64>,
    ssr: f64,
}

fn solve(t: &[f64], y: &[f64], w: f64) -> Option<Linear> {
    let mut ata = Matrix3::zeros();
    let mut aty = Vector3::zeros();
    for (&ti, &yi) in t.iter().zip(y) {
        let row = Vector3::new(1.0, (w * ti).cos(), (w * ti).sin());
        ata += row * row.transpose();
        aty += row * yi;
    }
    let coef = ata.cholesky()?.solve(&aty);
    let ssr = t
        .iter()
        .zip(y)
        .map(|(&ti, &yi)| {
            let r = yi - coef[0] - coef[1] * (w * ti).cos() - coef[2] * (w * ti).sin();
            r * r
        })
        .sum();
    Some(Linear { coef, ssr })
}

fn ssr_at(t: &[f64], y: &[f64], w: f64) -> f64 {
    solve(t, y, w).map_or(f64::INFINITY, |l| l.ssr)
}

/// Fits `A sin²(Ωt + φ) + c` to `(times, values)`.
pub fn fit_rabi(times: &[f64], values: &[f64]) -> Result<RabiFit> {
    if times.len() != values.len() {
        return Err(Error::InvalidInput("times and values differ in length".into()));
    }
    let n = times.len();
    if n < MIN_SAMPLES {
        return Err(Error::NoFit(format!("{n} samples, need at least {MIN_SAMPLES}")));
    }
    if times.iter().chain(values).any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite sample".into()));
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let sst: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
    if sst < 1e-24 * n as f64 {
        return Err(Error::NoFit("data are constant".into()));
    }
    let (t0, t1) = times.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &t| (a.min(t), b.max(t)));
    let span = t1 - t0;
    let mut sorted = times.to_vec();
    sorted.sort_by(f64::total_cmp);
    let min_dt = sorted.windows(2).map(|w| w[1] - w[0]).filter(|d| *d > 0.0).fold(f64::INFINITY, f64::min);
    if !(span > 0.0) || !min_dt.is_finite() {
        return Err(Error::NoFit("samples do not span an interval".into()));
    }

    // angular frequency of the cos/sin pair, w = 2Ω
    let w_lo = std::f64::consts::PI / span;
    let w_hi = std::f64::consts::PI / min_dt;
    let dw = 2.0 * std::f64::consts::PI / (OVERSAMPLING * span);
    let steps = ((w_hi - w_lo) / dw).ceil().max(1.0) as usize;
    let (mut best_w, mut best_ssr) = (w_lo, f64::INFINITY);
    for k in 0..=steps {
        let w = w_lo + k as f64 * dw;
        let s = ssr_at(times, values, w);
        if s < best_ssr {
            best_w = w;
            best_ssr = s;
        }
    }
    let explained = 1.0 - best_ssr / sst;
    if !(explained >= MIN_EXPLAINED) {
        return Err(Error::NoFit(format!("no oscillation found (best sinusoid explains {:.1}% of variance)", 100.0 * explained)));
    }

    let w = golden_min(|w| ssr_at(times, values, w), (best_w - dw).max(0.5 * w_lo), best_w + dw);
    let lin = solve(times, values, w).ok_or_else(|| Error::NoFit("singular design matrix".into()))?;
    let frequency = 0.5 * w;
    if span * frequency / std::f64::consts::PI < MIN_PERIODS {
        return Err(Error::NoFit(format!(
            "samples span {:.2} oscillation periods, need {MIN_PERIODS}",
            span * frequency / std::f64::consts::PI
        )));
    }
    let (c0, a, b) = (lin.coef[0], lin.coef[1], lin.coef[2]);
    let amplitude = 2.0 * a.hypot(b);
    Ok(RabiFit {
        frequency,
        amplitude,
        offset: c0 - 0.5 * amplitude,
        phase: 0.5 * b.atan2(-a),
        rms_residual: (lin.ssr / n as f64).sqrt(),
    })
}

/// Minimizer of a unimodal `f` on `[a, b]`.
pub(crate) fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() <= 1e-13 * (a.abs() + b.abs()) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Ordinary least-squares line `y = slope·x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope.
    pub slope_error: f64,
}

pub fn fit_line(x: &[f64], y: &[f64]) -> Result<LineFit> {
    let n = x.len();
    if n != y.len() || n < 2 {
        return Err(Error::InvalidInput("line fit needs at least two paired points".into()));
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidInput("line fit needs distinct x values".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = x.iter().zip(y).map(|(a, b)| (b - slope * a - intercept).powi(2)).sum();
    let slope_error = if n > 2 { (ssr / (n - 2) as f64 / sxx).sqrt() } else { 0.0 };
    Ok(LineFit { slope, intercept, slope_error })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn grid(n: usize, span: f64) -> Vec<f64> {
        (0..n).map(|k| span * k as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn recovers_clean_rabi_flop() {
        let om = 2.0 * PI * 1e3;
        let t = grid(40, 2.2e-3);
        let y: Vec<f64> = t.iter().map(|t| (om * t).sin().powi(2)).collect();
        let fit = fit_rabi(&t, &y).unwrap();
        assert!((fit.frequency / om - 1.0).abs() < 1e-3);
        assert!((fit.amplitude - 1.0).abs() < 1e-6);
        assert!(fit.offset.abs() < 1e-6);
        assert!(fit.rms_residual < 1e-9);
    }

    #[test]
    fn recovers_phase_offset_and_amplitude() {
        let om = 2.0 * PI * 3.3e3;
        let t = grid(64, 1e-3);
        let y: Vec<f64> = t.iter().map(|t| 0.6 * (om * t + 0.4).sin().powi(2) + 0.1).collect();
        let fit = fit_rabi(&t, &y).unwrap();
        assert!((fit.frequency / om - 1.0).abs() < 1e-6);
        assert!((fit.amplitude - 0.6).abs() < 1e-6);
        assert!((fit.offset - 0.1).abs() < 1e-6);
        for ti in &t {
            assert!((fit.eval(*ti) - (0.6 * (om * ti + 0.4).sin().powi(2) + 0.1)).abs() < 1e-6);
        }
    }

    #[test]
    fn tolerates_noise() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let om = 2.0 * PI * 800.0;
        let t = grid(80, 4e-3);
        let y: Vec<f64> = t.iter().map(|t| (om * t).sin().powi(2) + rng.gen_range(-0.03..0.03)).collect();
        let fit = fit_rabi(&t, &y).unwrap();
        assert!((fit.frequency / om - 1.0).abs() < 5e-3);
        assert!(fit.rms_residual > 0.005);
    }

    #[test]
    fn rejects_non_oscillatory_data() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let t = grid(50, 1e-3);
        let y: Vec<f64> = t.iter().map(|_| rng.gen_range(0.0..1.0)).collect();
        assert!(matches!(fit_rabi(&t, &y), Err(Error::NoFit(_))));
        let flat = vec![0.3; 50];
        assert!(matches!(fit_rabi(&t, &flat), Err(Error::NoFit(_))));
    }

    #[test]
    fn rejects_short_records() {
        let om = 2.0 * PI * 1e3;
        let t = grid(7, 2e-3);
        let y: Vec<f64> = t.iter().map(|t| (om * t).sin().powi(2)).collect();
        assert!(fit_rabi(&t, &y).is_err());
        // one period of sin²
        let t = grid(30, 0.5e-3);
        let y: Vec<f64> = t.iter().map(|t| (om * t).sin().powi(2)).collect();
        assert!(matches!(fit_rabi(&t, &y), Err(Error::NoFit(_))));
    }

    #[test]
    fn line_fit() {
        let x = [0.1, 0.3, 0.6, 0.9];
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 0.01).collect();
        let l = fit_line(&x, &y).unwrap();
        assert!((l.slope - 2.0).abs() < 1e-12 && (l.intercept - 0.01).abs() < 1e-12);
        assert!(l.slope_error < 1e-12);
    }

    #[test]
    fn golden_section() {
        let x = golden_min(|x| (x - 0.3).powi(2), 0.0, 1.0);
        assert!((x - 0.3).abs() < 1e-7);
    }
}
