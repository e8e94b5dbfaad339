use super::propagate::{program_unitary, propagate, DriveProgram, EvolutionRecord, PropagationSettings};
use crate::qcore::{measure_up, reset_spin_down, QuantumState};
use crate::{CancelToken, Error, Operator, Result};

/// One element of a pulse sequence.
#[derive(Debug, Clone, PartialEq)]
pub enum SequenceStep {
    Pulse(DriveProgram),
    /// Optical repumping: spin reset to ↓, motion untouched.
    Repump,
}

/// Applies `steps` in order to `initial` (converted to a density matrix).
///
/// The record holds the initial state at t = 0 and one sample after every
/// step, at the cumulative time. Programs that occur more than once are
/// exponentiated once and reused; for those the truncation guard is checked
/// on the state after the pulse.
pub fn evolve_density_sequence(
    steps: &[SequenceStep],
    initial: &QuantumState,
    settings: &PropagationSettings,
) -> Result<EvolutionRecord> {
    evolve_density_sequence_with_cancel(steps, initial, settings, &CancelToken::new())
}

/// [`evolve_density_sequence`] that stops between steps once `cancel` fires.
pub fn evolve_density_sequence_with_cancel(
    steps: &[SequenceStep],
    initial: &QuantumState,
    settings: &PropagationSettings,
    cancel: &CancelToken,
) -> Result<EvolutionRecord> {
    initial.validate()?;
    let space = initial.space();
    let mut state = initial.to_density();
    let mut t = 0.0;
    let mut times = vec![0.0];
    let mut p_up = vec![measure_up(&state)];
    let mut mean_n = vec![state.mean_phonon()];
    let mut cache: Vec<(DriveProgram, Operator)> = Vec::new();

    for (index, step) in steps.iter().enumerate() {
        cancel.check()?;
        let wrap = |source: Error| Error::Sequence { index, source: Box::new(source) };
        match step {
            SequenceStep::Repump => state = reset_spin_down(&state),
            SequenceStep::Pulse(program) => {
                let repeated = steps.iter().filter(|s| matches!(s, SequenceStep::Pulse(p) if p == program)).count() > 1;
                if repeated {
                    let pos = match cache.iter().position(|(p, _)| p == program) {
                        Some(pos) => pos,
                        None => {
                            let u = program_unitary(program, space, settings).map_err(wrap)?;
                            cache.push((*program, u));
                            cache.len() - 1
                        }
                    };
                    state = state.evolve(&cache[pos].1);
                    let population = state.top_level_population();
                    if population > settings.truncation_guard {
                        return Err(wrap(Error::Truncation { time: t + program.duration, population }));
                    }
                } else {
                    let quiet = PropagationSettings { samples: 0, ..*settings };
                    state = propagate(program, &state, &quiet).map_err(wrap)?.final_state;
                }
                t += program.duration;
            }
        }
        times.push(t);
        p_up.push(measure_up(&state));
        mean_n.push(state.mean_phonon());
    }
    Ok(EvolutionRecord { times, p_up, mean_n, final_state: state })
}
