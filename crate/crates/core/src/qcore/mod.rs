//! Dense linear algebra over the spin ⊗ truncated-Fock tensor space.
//!
//! Basis ordering is fixed throughout the crate: the spin index is the slow
//! index and the Fock index the fast one, so the basis vector `|s, n⟩` lives
//! at position `s * N + n` with `|↓⟩ = 0` and `|↑⟩ = 1`. Operator factories
//! are therefore `kron(spin_block, fock_block)` with the 2×2 block first.

mod expm;
mod operator;
mod state;

pub use expm::expm_hermitian;
pub use operator::{annihilation, identity, number, spin_ops, Operator, SpinOps};
pub use state::{measure_up, reset_spin_down, thermal_state, thermal_state_with_tolerance, QuantumState};

use crate::{Error, Result};

/// Default tail-weight tolerance for thermal states.
pub const THERMAL_TAIL_TOLERANCE: f64 = 1e-6;

/// Relative Frobenius tolerance for Hermiticity checks.
pub const HERMITIAN_TOLERANCE: f64 = 1e-12;

/// The two qubit levels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Spin {
    Down = 0,
    Up = 1,
}

/// Spin (2 levels) ⊗ Fock (`fock_dim` levels).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct HilbertSpace {
    fock_dim: usize,
}

impl HilbertSpace {
    pub fn new(fock_dim: usize) -> Result<Self> {
        if fock_dim < 2 {
            return Err(Error::InvalidInput(format!("fock_dim must be >= 2, got {fock_dim}")));
        }
        Ok(Self { fock_dim })
    }

    #[inline]
    pub fn fock_dim(&self) -> usize {
        self.fock_dim
    }

    /// Total dimension `2 * fock_dim`.
    #[inline]
    pub fn dim(&self) -> usize {
        2 * self.fock_dim
    }

    #[inline]
    pub fn index(&self, spin: Spin, n: usize) -> usize {
        debug_assert!(n < self.fock_dim);
        spin as usize * self.fock_dim + n
    }

    /// Fock levels watched by the truncation guard: the top two, or only the
    /// top one when the space has just two levels.
    pub fn guard_levels(&self) -> std::ops::Range<usize> {
        let count = 2.min(self.fock_dim - 1);
        self.fock_dim - count..self.fock_dim
    }
}
