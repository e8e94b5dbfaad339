//! Experiment drivers and curve fitting.
//!
//! Scan points are independent; they run on the rayon pool and results are
//! returned in input order. A failing point becomes a null with its reason
//! and the scan continues.

mod bessel_scan;
mod cooling;
pub mod fit;
mod rabi;
mod sideband;
mod spectroscopy;

pub use bessel_scan::{bessel_point, bessel_scan, j0_zero_crossing, BesselPoint, BesselScanSpec};
pub use cooling::{cooling_run, default_analysis_pulse, thermometry, CoolingResult, CoolingSpec, ThermometryResult};
pub use fit::{fit_line, fit_rabi, LineFit, RabiFit};
pub use rabi::{rabi_timescan, TimeSeries};
pub use sideband::{
    find_sideband_resonance, sideband_characterization, sideband_flop, ResonanceSearch, SidebandPoint, SidebandSpec,
};
pub use spectroscopy::{line_windows, overlay, predicted_lines, spectroscopy, LineAnnotation, SpectroscopySpec, Spectrum};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;

use crate::qcore::{thermal_state, HilbertSpace, QuantumState};
use crate::{CancelToken, Error, Result};

/// Motional state the spin starts from (always spin-down).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialState {
    Ground,
    Thermal { nbar: f64 },
}

impl InitialState {
    pub fn prepare(&self, space: HilbertSpace) -> Result<QuantumState> {
        match *self {
            InitialState::Ground => Ok(QuantumState::ground(space)),
            InitialState::Thermal { nbar } => thermal_state(space, nbar),
        }
    }
}

/// How spin-up probabilities are reported.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Readout {
    /// Exact expectation values.
    #[default]
    Expectation,
    /// Fraction of `shots` projective measurements, drawn from a seeded
    /// generator in input order.
    Shots { shots: u32, seed: u64 },
}

impl Readout {
    /// Applies the readout to `p`; missing values stay missing.
    pub fn apply(&self, p: &[Option<f64>]) -> Vec<Option<f64>> {
        match *self {
            Readout::Expectation => p.to_vec(),
            Readout::Shots { shots, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                p.iter()
                    .map(|v| {
                        v.map(|p| {
                            let p = p.clamp(0.0, 1.0);
                            let k = Binomial::new(u64::from(shots), p).map_or(0, |b| b.sample(&mut rng));
                            k as f64 / f64::from(shots.max(1))
                        })
                    })
                    .collect()
            }
        }
    }
}

/// Maps `f` over `items` in parallel, keeping input order. Points not yet
/// started when `cancel` fires return [`Error::Cancelled`].
pub(crate) fn par_map<T: Sync, R: Send>(
    items: &[T],
    cancel: &CancelToken,
    f: impl Fn(&T) -> Result<R> + Sync + Send,
) -> Vec<Result<R>> {
    items
        .par_iter()
        .map(|item| {
            cancel.check()?;
            f(item)
        })
        .collect()
}

/// Human-readable reason for a failed scan point.
pub(crate) fn reason(e: &Error) -> String {
    e.to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expectation_readout_is_identity() {
        let p = vec![Some(0.3), None];
        assert_eq!(Readout::Expectation.apply(&p), p);
    }

    #[test]
    fn shot_readout_is_seeded() {
        let p: Vec<Option<f64>> = (0..50).map(|k| Some(k as f64 / 49.0)).chain([None]).collect();
        let r = Readout::Shots { shots: 200, seed: 7 };
        let a = r.apply(&p);
        assert_eq!(a, r.apply(&p));
        assert_ne!(a, Readout::Shots { shots: 200, seed: 8 }.apply(&p));
        assert_eq!(a[0], Some(0.0));
        assert_eq!(a[49], Some(1.0));
        assert_eq!(a[50], None);
        let mean_err: f64 = a.iter().zip(&p).take(50).map(|(x, y)| (x.unwrap() - y.unwrap()).abs()).sum::<f64>() / 50.0;
        assert!(mean_err < 0.05, "{mean_err}");
    }
}
