//! Physical parameters, Hamiltonians and closed-form predictions.

mod analytic;
pub mod bessel;
mod couplings;
mod hamiltonian;
mod params;

pub use analytic::{
    efield_spinflip_rabi, sideband_rabi, sideband_rabi_mth, sideband_resonance_detuning, spinflip_rabi, Branch,
    Sideband,
};
pub use bessel::{bessel_j, J0_FIRST_ZERO};
pub use couplings::{derive_couplings, ground_state_extent, microwave_rabi_from_field, Couplings};
pub(crate) use hamiltonian::{generator, Frame};
pub use hamiltonian::{lab_frame_hamiltonian, rotating_frame_hamiltonian, Generator};
pub use params::{DriveConfig, IonTrapConfig};
