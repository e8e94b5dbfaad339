//! Spin-motion coupling of a trapped-ion qubit driven by microwaves and a
//! magnetic field gradient oscillating near the motional frequency.
//!
//! The crate is organised bottom-up:
//!
//! * [`qcore`] dense linear algebra over the spin ⊗ truncated-Fock space.
//! * [`model`] physical parameters, Hamiltonians and closed-form predictions.
//! * [`dynamics`] piecewise-constant time evolution of pulse programs.
//! * [`experiments`] scan drivers (spectroscopy, Rabi and Bessel scans,
//!   sideband characterization, cooling and thermometry) and curve fitting.
//! * [`report`] tabular results and CSV output.
//! * [`acceptance`] the end-to-end validation suite.
//!
//! Internally every frequency is an angular frequency in rad/s. Values that
//! cross the public configuration boundary ([`model::IonTrapConfig`],
//! [`model::DriveConfig`]) are ordinary frequencies in Hz.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acceptance;
mod cancel;
pub mod dynamics;
mod error;
pub mod experiments;
pub mod model;
pub mod qcore;
pub mod report;
pub mod units;

pub use cancel::CancelToken;
pub use dynamics::{DriveProgram, EnvelopeKind, EvolutionRecord, PropagationSettings, PulseEnvelope};
pub use error::{Error, Result};
pub use model::{Couplings, DriveConfig, IonTrapConfig};
pub use num_complex::Complex64 as C64;
pub use qcore::{HilbertSpace, Operator, QuantumState, Spin};
pub use report::ResultTable;

