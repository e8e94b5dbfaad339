//! Closed-form first-order predictions. Rates are in rad/s.

use crate::units::{hz_to_rad, ELEMENTARY_CHARGE, HBAR};
use crate::{Error, Result};

use super::bessel::bessel_j;
use super::{ground_state_extent, Couplings, IonTrapConfig};

/// Sideband branch: gradient drive below (`Minus`, denominator ω_r − ω_g) or
/// above (`Plus`, ω_r + ω_g) the mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Minus,
    Plus,
}

/// Motional sideband: blue adds a phonon on spin-up, red removes one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sideband {
    Blue,
    Red,
}

impl Sideband {
    pub fn sign(self) -> f64 {
        match self {
            Sideband::Blue => 1.0,
            Sideband::Red => -1.0,
        }
    }
}

/// 4Ωz/ω_g, or 0 for a static gradient with no field modulation.
fn bessel_argument(c: &Couplings) -> Result<f64> {
    if c.omega_gdrive == 0.0 {
        if c.omega_z != 0.0 {
            return Err(Error::InvalidInput("Bessel argument 4Ωz/ω_g undefined for ω_g = 0 with Ωz ≠ 0".into()));
        }
        return Ok(0.0);
    }
    Ok(4.0 * c.omega_z / c.omega_gdrive)
}

/// Magnitude of the sideband Rabi frequency `|2ΩgΩμ/(ω_r ∓ ω_g)|·|J₀(4Ωz/ω_g)|`.
///
/// A static gradient (ω_g = 0) returns `|4ΩgΩμ/ω_r|` for either branch: both
/// branches coincide there and add coherently.
pub fn sideband_rabi(c: &Couplings, branch: Branch) -> Result<f64> {
    let x = bessel_argument(c)?;
    if c.omega_gdrive == 0.0 {
        return Ok((4.0 * c.omega_g * c.omega_mu / c.omega_r).abs());
    }
    let denom = match branch {
        Branch::Minus => c.omega_r - c.omega_gdrive,
        Branch::Plus => c.omega_r + c.omega_gdrive,
    };
    if denom == 0.0 {
        return Err(Error::Resonance(c.omega_gdrive));
    }
    Ok((2.0 * c.omega_g * c.omega_mu / denom * bessel_j(0, x)).abs())
}

/// Signed spin-flip Rabi frequency Ωμ·J_m(4Ωz/ω_g) of the m-th carrier comb line.
pub fn spinflip_rabi(c: &Couplings, m: u32) -> Result<f64> {
    let x = bessel_argument(c)?;
    Ok(c.omega_mu * bessel_j(m as i32, x))
}

/// Magnitude of the motional sideband of the m-th spin-flip line,
/// `|2ΩgΩμ/(ω_r − ω_g)·J_m(4Ωz/ω_g)|`.
pub fn sideband_rabi_mth(c: &Couplings, m: i32) -> Result<f64> {
    let x = bessel_argument(c)?;
    let denom = c.omega_r - c.omega_gdrive;
    if denom == 0.0 {
        return Err(Error::Resonance(c.omega_gdrive));
    }
    Ok((2.0 * c.omega_g * c.omega_mu / denom * bessel_j(m, x)).abs())
}

/// Microwave detuning of the sideband resonance including the ac Zeeman
/// shift, `±√((ω_r − ω_g)² − 4Ωμ²)`.
pub fn sideband_resonance_detuning(c: &Couplings, sideband: Sideband) -> Result<f64> {
    let det = c.mode_detuning();
    let disc = det * det - 4.0 * c.omega_mu * c.omega_mu;
    if !(disc > 0.0) {
        return Err(Error::Constraint(format!(
            "2Ωμ = {:.6e} rad/s must be below |ω_r − ω_g| = {:.6e} rad/s for a sideband resonance",
            2.0 * c.omega_mu,
            det.abs()
        )));
    }
    Ok(sideband.sign() * disc.sqrt())
}

/// Spin-flip Rabi frequency induced by a residual electric field `e_field`
/// (V/m) along `mode` oscillating with the gradient drive at `omega_gdrive`,
/// given the sideband microwave Rabi frequency `omega_musb`.
pub fn efield_spinflip_rabi(
    omega_musb: f64,
    e_field: f64,
    trap: &IonTrapConfig,
    mode: &str,
    omega_gdrive: f64,
) -> Result<f64> {
    let omega_r = hz_to_rad(trap.mode_freq(mode)?);
    let denom = omega_r * omega_r - omega_gdrive * omega_gdrive;
    if denom == 0.0 {
        return Err(Error::Resonance(omega_gdrive));
    }
    let r0 = ground_state_extent(trap.ion_mass, omega_r);
    let omega_e = ELEMENTARY_CHARGE * e_field * r0 / (2.0 * HBAR);
    Ok(2.0 * omega_musb * omega_e * omega_r / denom)
}
