//! Time evolution of states under shaped, time-dependent drives.

mod envelope;
mod kernel;
mod propagate;
mod sequence;

pub use envelope::{EnvelopeKind, PulseEnvelope};
pub use propagate::{
    max_step_limit, program_unitary, propagate, propagate_sampled, scan_plateau, DriveProgram, EvolutionRecord,
    PlateauScan, PropagationFrame, PropagationSettings,
};
pub use sequence::{evolve_density_sequence, evolve_density_sequence_with_cancel, SequenceStep};
