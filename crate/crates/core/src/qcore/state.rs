use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use super::{HilbertSpace, Operator, Spin, HERMITIAN_TOLERANCE, THERMAL_TAIL_TOLERANCE};
use crate::{Error, Result};

const NORM_TOLERANCE: f64 = 1e-9;
const EIGEN_FLOOR: f64 = -1e-10;

/// A pure state vector or a density matrix on a [`HilbertSpace`].
#[derive(Debug, Clone, PartialEq)]
pub enum QuantumState {
    Pure { space: HilbertSpace, psi: DVector<C64> },
    Density { space: HilbertSpace, rho: DMatrix<C64> },
}

impl QuantumState {
    /// The basis state `|spin, n⟩`.
    pub fn basis(space: HilbertSpace, spin: Spin, n: usize) -> Self {
        let mut psi = DVector::zeros(space.dim());
        psi[space.index(spin, n)] = C64::new(1.0, 0.0);
        QuantumState::Pure { space, psi }
    }

    /// `|↓, 0⟩`.
    pub fn ground(space: HilbertSpace) -> Self {
        Self::basis(space, Spin::Down, 0)
    }

    pub fn pure(space: HilbertSpace, psi: DVector<C64>) -> Result<Self> {
        let state = QuantumState::Pure { space, psi };
        state.validate()?;
        Ok(state)
    }

    pub fn density(space: HilbertSpace, rho: DMatrix<C64>) -> Result<Self> {
        let state = QuantumState::Density { space, rho };
        state.validate()?;
        Ok(state)
    }

    pub fn space(&self) -> HilbertSpace {
        match self {
            QuantumState::Pure { space, .. } | QuantumState::Density { space, .. } => *space,
        }
    }

    pub fn is_pure(&self) -> bool {
        matches!(self, QuantumState::Pure { .. })
    }

    pub fn pure_vector(&self) -> Option<&DVector<C64>> {
        match self {
            QuantumState::Pure { psi, .. } => Some(psi),
            QuantumState::Density { .. } => None,
        }
    }

    /// Checks the normalization / Hermiticity / positivity invariants.
    pub fn validate(&self) -> Result<()> {
        match self {
            QuantumState::Pure { space, psi } => {
                if psi.len() != space.dim() {
                    return Err(Error::InvalidInput(format!(
                        "state vector has length {}, space dimension is {}",
                        psi.len(),
                        space.dim()
                    )));
                }
                let norm = psi.norm();
                if (norm - 1.0).abs() > NORM_TOLERANCE {
                    return Err(Error::InvalidInput(format!("state norm {norm} is not 1")));
                }
            }
            QuantumState::Density { space, rho } => {
                if rho.nrows() != space.dim() || rho.ncols() != space.dim() {
                    return Err(Error::InvalidInput("density matrix has the wrong shape".into()));
                }
                let op = Operator::from_matrix_unchecked(*space, rho.clone());
                let herm = op.hermiticity_error();
                if herm > HERMITIAN_TOLERANCE {
                    return Err(Error::InvalidInput(format!("density matrix not Hermitian ({herm:.2e})")));
                }
                let tr = rho.trace();
                if (tr.re - 1.0).abs() > NORM_TOLERANCE || tr.im.abs() > NORM_TOLERANCE {
                    return Err(Error::InvalidInput(format!("density matrix trace {tr} is not 1")));
                }
                let sym = (rho + rho.adjoint()) * C64::new(0.5, 0.0);
                let min = sym.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min);
                if min < EIGEN_FLOOR {
                    return Err(Error::InvalidInput(format!("density matrix has eigenvalue {min:.3e}")));
                }
            }
        }
        Ok(())
    }

    pub fn to_density(&self) -> QuantumState {
        match self {
            QuantumState::Pure { space, psi } => QuantumState::Density { space: *space, rho: psi * psi.adjoint() },
            QuantumState::Density { .. } => self.clone(),
        }
    }

    pub fn density_matrix(&self) -> DMatrix<C64> {
        match self {
            QuantumState::Pure { psi, .. } => psi * psi.adjoint(),
            QuantumState::Density { rho, .. } => rho.clone(),
        }
    }

    /// `U|ψ⟩` or `UρU†`.
    pub fn evolve(&self, u: &Operator) -> QuantumState {
        assert_eq!(u.space(), self.space());
        match self {
            QuantumState::Pure { space, psi } => QuantumState::Pure { space: *space, psi: u.matrix() * psi },
            QuantumState::Density { space, rho } => {
                QuantumState::Density { space: *space, rho: u.matrix() * rho * u.matrix().adjoint() }
            }
        }
    }

    /// Population of each basis state, in basis order.
    pub fn populations(&self) -> Vec<f64> {
        match self {
            QuantumState::Pure { psi, .. } => psi.iter().map(|z| z.norm_sqr()).collect(),
            QuantumState::Density { rho, .. } => (0..rho.nrows()).map(|i| rho[(i, i)].re).collect(),
        }
    }

    /// Fock-level populations with the spin traced out.
    pub fn fock_populations(&self) -> Vec<f64> {
        let space = self.space();
        let pops = self.populations();
        (0..space.fock_dim())
            .map(|n| pops[space.index(Spin::Down, n)] + pops[space.index(Spin::Up, n)])
            .collect()
    }

    /// `⟨a†a⟩`.
    pub fn mean_phonon(&self) -> f64 {
        self.fock_populations().iter().enumerate().map(|(n, p)| n as f64 * p).sum()
    }

    /// `Tr ρ` or `‖ψ‖²`.
    pub fn trace(&self) -> f64 {
        self.populations().iter().sum()
    }

    /// Population in the Fock levels watched by the truncation guard.
    pub fn top_level_population(&self) -> f64 {
        let pops = self.fock_populations();
        self.space().guard_levels().map(|n| pops[n]).sum()
    }
}

/// Probability of finding the spin in `|↑⟩`.
pub fn measure_up(state: &QuantumState) -> f64 {
    let space = state.space();
    let pops = state.populations();
    let p: f64 = (0..space.fock_dim()).map(|n| pops[space.index(Spin::Up, n)]).sum();
    p.clamp(0.0, 1.0)
}

/// Thermal motional state with the spin in `|↓⟩`, using the default tail
/// tolerance.
pub fn thermal_state(space: HilbertSpace, nbar: f64) -> Result<QuantumState> {
    thermal_state_with_tolerance(space, nbar, THERMAL_TAIL_TOLERANCE)
}

/// `|↓⟩⟨↓| ⊗ Σ pₙ|n⟩⟨n|` with `pₙ = n̄ⁿ/(n̄+1)ⁿ⁺¹`, renormalized on the
/// truncated space. Fails when the weight beyond the truncation exceeds
/// `tail_tolerance`.
pub fn thermal_state_with_tolerance(space: HilbertSpace, nbar: f64, tail_tolerance: f64) -> Result<QuantumState> {
    if !(nbar >= 0.0) || !nbar.is_finite() {
        return Err(Error::InvalidInput(format!("nbar must be finite and >= 0, got {nbar}")));
    }
    let n = space.fock_dim();
    let q = nbar / (nbar + 1.0);
    let tail = q.powi(n as i32);
    if tail > tail_tolerance {
        let required = (tail_tolerance.ln() / q.ln()).ceil() as usize;
        return Err(Error::ThermalTruncation { nbar, fock_dim: n, tail, required });
    }
    let weights: Vec<f64> = (0..n).map(|k| q.powi(k as i32) / (nbar + 1.0)).collect();
    let total: f64 = weights.iter().sum();
    let mut rho = DMatrix::zeros(space.dim(), space.dim());
    for (k, w) in weights.iter().enumerate() {
        let i = space.index(Spin::Down, k);
        rho[(i, i)] = C64::new(w / total, 0.0);
    }
    Ok(QuantumState::Density { space, rho })
}

/// Optical repumping: `ρ → |↓⟩⟨↓| ⊗ Tr_spin ρ`. Pure inputs are converted
/// to a density matrix first.
pub fn reset_spin_down(state: &QuantumState) -> QuantumState {
    let space = state.space();
    let rho = state.density_matrix();
    let n = space.fock_dim();
    let mut out = DMatrix::zeros(space.dim(), space.dim());
    for i in 0..n {
        for j in 0..n {
            let reduced = rho[(i, j)] + rho[(n + i, n + j)];
            out[(i, j)] = reduced;
        }
    }
    QuantumState::Density { space, rho: out }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::{annihilation, number, spin_ops};

    fn space(n: usize) -> HilbertSpace {
        HilbertSpace::new(n).unwrap()
    }

    #[test]
    fn thermal_ground_state() {
        let s = space(4);
        let rho = thermal_state(s, 0.0).unwrap();
        assert_eq!(rho.density_matrix(), QuantumState::ground(s).density_matrix());
    }

    #[test]
    fn thermal_geometric_weights() {
        let s = space(60);
        let pops = thermal_state(s, 2.0).unwrap().fock_populations();
        assert!((pops[0] - 1.0 / 3.0).abs() < 1e-9);
        assert!((pops[1] - 2.0 / 9.0).abs() < 1e-9);
    }

    #[test]
    fn thermal_moments() {
        for nbar in [0.05f64, 0.5, 1.0, 2.0, 3.0] {
            let n = (30.0 * (nbar + 1.0_f64)).ceil() as usize;
            let rho = thermal_state(space(n), nbar).unwrap();
            assert!((rho.trace() - 1.0).abs() < 1e-12);
            assert!((rho.mean_phonon() - nbar).abs() < 1e-6, "nbar {nbar}: {}", rho.mean_phonon());
            // Cross-check against the number operator.
            let nop = number(rho.space());
            let expect = (nop.matrix() * rho.density_matrix()).trace().re;
            assert!((expect - rho.mean_phonon()).abs() < 1e-12);
        }
    }

    #[test]
    fn thermal_truncation_error_names_required_dim() {
        match thermal_state(space(32), 2.0) {
            Err(Error::ThermalTruncation { required, .. }) => {
                assert_eq!(required, 35);
                assert!(thermal_state(space(required), 2.0).is_ok());
            }
            other => panic!("expected truncation error, got {other:?}"),
        }
    }

    #[test]
    fn thermal_mean_converges_with_dimension() {
        let mut last = f64::INFINITY;
        for n in [36, 40, 48, 56, 64] {
            let err = (thermal_state(space(n), 2.0).unwrap().mean_phonon() - 2.0).abs();
            assert!(err < last, "n = {n}: {err} !< {last}");
            last = err;
        }
    }

    #[test]
    fn measure_up_basics() {
        let s = space(3);
        assert_eq!(measure_up(&QuantumState::ground(s)), 0.0);
        let mut psi = DVector::zeros(s.dim());
        psi[s.index(Spin::Down, 0)] = C64::new(1.0 / 2f64.sqrt(), 0.0);
        psi[s.index(Spin::Up, 0)] = C64::new(1.0 / 2f64.sqrt(), 0.0);
        let st = QuantumState::pure(s, psi).unwrap();
        assert!((measure_up(&st) - 0.5).abs() < 1e-15);
        assert_eq!(measure_up(&thermal_state(space(40), 2.0).unwrap()), 0.0);
    }

    #[test]
    fn reset_moves_spin_and_keeps_motion() {
        let s = space(4);
        let up1 = QuantumState::basis(s, Spin::Up, 1).to_density();
        let out = reset_spin_down(&up1);
        assert_eq!(out.density_matrix(), QuantumState::basis(s, Spin::Down, 1).density_matrix());
        let down = QuantumState::basis(s, Spin::Down, 2).to_density();
        assert_eq!(reset_spin_down(&down), down);
    }

    #[test]
    fn reset_preserves_mean_phonon_of_mixed_state() {
        // 0.3|↑,0⟩⟨↑,0| + 0.7|↓,1⟩⟨↓,1| plus a spin coherence.
        let s = space(3);
        let mut rho = DMatrix::zeros(s.dim(), s.dim());
        let (a, b) = (s.index(Spin::Up, 0), s.index(Spin::Down, 1));
        rho[(a, a)] = C64::new(0.3, 0.0);
        rho[(b, b)] = C64::new(0.7, 0.0);
        rho[(a, b)] = C64::new(0.1, 0.2);
        rho[(b, a)] = C64::new(0.1, -0.2);
        let st = QuantumState::density(s, rho).unwrap();
        assert!((st.mean_phonon() - 0.7).abs() < 1e-15);
        let out = reset_spin_down(&st);
        assert!((out.mean_phonon() - 0.7).abs() < 1e-15);
        assert!((out.trace() - 1.0).abs() < 1e-15);
        assert_eq!(measure_up(&out), 0.0);
        out.validate().unwrap();
    }

    #[test]
    fn annihilation_blocks() {
        let a = annihilation(space(2));
        let m = a.matrix();
        assert_eq!(m[(0, 1)], C64::new(1.0, 0.0));
        assert_eq!(m[(2, 3)], C64::new(1.0, 0.0));
        assert_eq!(m.iter().filter(|z| z.norm() > 0.0).count(), 2);

        let s4 = space(4);
        let a4 = annihilation(s4);
        let n = &a4.adjoint() * &a4;
        for k in 0..4 {
            assert!((n.matrix()[(k, k)].re - k as f64).abs() < 1e-15);
        }
    }

    #[test]
    fn canonical_commutator_below_truncation() {
        let s = space(8);
        let a = annihilation(s);
        let comm = a.commutator(&a.adjoint());
        let m = comm.matrix();
        let mut err = 0.0f64;
        for spin in [Spin::Down, Spin::Up] {
            for i in 0..7 {
                for j in 0..7 {
                    let target = if i == j { 1.0 } else { 0.0 };
                    err = err.max((m[(s.index(spin, i), s.index(spin, j))] - target).norm());
                }
            }
        }
        assert!(err < 1e-14);
        // The top level carries the truncation defect.
        assert!((m[(s.index(Spin::Down, 7), s.index(Spin::Down, 7))].re + 7.0).abs() < 1e-12);
    }

    #[test]
    fn pauli_algebra() {
        let s = space(3);
        let ops = spin_ops(s);
        let g = QuantumState::ground(s);
        let out = g.evolve(&ops.sz);
        assert_eq!(out.pure_vector().unwrap()[0], C64::new(-1.0, 0.0));
        for n in 0..3 {
            let out = QuantumState::basis(s, Spin::Down, n).evolve(&ops.sp);
            assert_eq!(out, QuantumState::basis(s, Spin::Up, n));
        }
        let sx2 = &ops.sx * &ops.sx;
        assert!((&sx2 - &crate::qcore::identity(s)).frobenius_norm() == 0.0);
    }

    #[test]
    fn factories_match_explicit_kronecker_products() {
        let n = 5;
        let s = space(n);
        let fock_a = crate::qcore::operator::fock_annihilation(n);
        let id2 = nalgebra::DMatrix::<C64>::identity(2, 2);
        let kron = id2.kronecker(&fock_a);
        assert_eq!(annihilation(s).matrix(), &kron);
        let pz = nalgebra::DMatrix::from_row_slice(
            2,
            2,
            &[C64::new(-1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(1.0, 0.0)],
        );
        let idn = nalgebra::DMatrix::<C64>::identity(n, n);
        assert_eq!(spin_ops(s).sz.matrix(), &pz.kronecker(&idn));
    }
}
