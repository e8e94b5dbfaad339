use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use super::{Operator, HERMITIAN_TOLERANCE};
use crate::{Error, Result};

/// `exp(−i·scale·H)` for Hermitian `H`, via the spectral decomposition.
///
/// The result is unitary to rounding (the eigenvector matrix is unitary and
/// the eigenvalues are real), which is what the propagators rely on.
pub fn expm_hermitian(h: &Operator, scale: f64) -> Result<Operator> {
    let deviation = h.hermiticity_error();
    if deviation > HERMITIAN_TOLERANCE {
        return Err(Error::NotHermitian { deviation });
    }
    if !scale.is_finite() {
        return Err(Error::InvalidInput(format!("non-finite scale {scale}")));
    }
    let n = h.matrix().nrows();
    // Symmetrize so the eigensolver sees an exactly Hermitian input.
    let sym = (h.matrix() + h.matrix().adjoint()) * C64::new(0.5, 0.0);
    let eig = sym.symmetric_eigen();
    let v = &eig.eigenvectors;
    let mut scaled = v.clone();
    for (j, &lambda) in eig.eigenvalues.iter().enumerate() {
        let phase = C64::from_polar(1.0, -scale * lambda);
        for i in 0..n {
            scaled[(i, j)] *= phase;
        }
    }
    let u: DMatrix<C64> = scaled * v.adjoint();
    Ok(Operator::from_matrix_unchecked(h.space(), u))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::{identity, spin_ops, HilbertSpace, QuantumState, Spin};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn random_hermitian(space: HilbertSpace, seed: u64) -> Operator {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = space.dim();
        let a = DMatrix::from_fn(d, d, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        let h = (&a + a.adjoint()) * C64::new(0.5, 0.0);
        Operator::from_matrix(space, h).unwrap()
    }

    #[test]
    fn zero_hamiltonian_gives_identity() {
        let space = HilbertSpace::new(3).unwrap();
        let u = expm_hermitian(&Operator::zeros(space), 1.7).unwrap();
        assert!((&u - &identity(space)).frobenius_norm() < 1e-15);
    }

    #[test]
    fn quarter_rabi_cycle_flips_spin() {
        let space = HilbertSpace::new(2).unwrap();
        let omega = 2.0e5;
        let h = spin_ops(space).sx.scale_real(omega);
        let t = std::f64::consts::FRAC_PI_2 / omega;
        let u = expm_hermitian(&h, t).unwrap();
        let psi = QuantumState::basis(space, Spin::Down, 0);
        let out = psi.evolve(&u);
        let amp = out.pure_vector().unwrap()[space.index(Spin::Up, 0)];
        assert!((amp - C64::new(0.0, -1.0)).norm() < 1e-12, "{amp}");
    }

    #[test]
    fn random_hermitian_self_inverse() {
        let space = HilbertSpace::new(8).unwrap();
        let h = random_hermitian(space, 7);
        let t = 0.83;
        let fwd = expm_hermitian(&h, t).unwrap();
        let back = expm_hermitian(&h, -t).unwrap();
        let err = (&(&fwd * &back) - &identity(space)).frobenius_norm();
        assert!(err < 1e-10, "{err}");
        assert!(fwd.unitarity_error() < 1e-9);
    }

    #[test]
    fn group_property_up_to_dimension_64() {
        for (fock, seed) in [(2usize, 1u64), (5, 2), (16, 3), (32, 4)] {
            let space = HilbertSpace::new(fock).unwrap();
            let h = random_hermitian(space, seed);
            let (t1, t2) = (0.37, 1.21);
            let lhs = &expm_hermitian(&h, t1).unwrap() * &expm_hermitian(&h, t2).unwrap();
            let rhs = expm_hermitian(&h, t1 + t2).unwrap();
            let err = (&lhs - &rhs).frobenius_norm() / (space.dim() as f64).sqrt();
            assert!(err < 1e-9, "dim {}: {err}", space.dim());
        }
    }

    #[test]
    fn rejects_non_hermitian() {
        let space = HilbertSpace::new(2).unwrap();
        let ops = spin_ops(space);
        let err = expm_hermitian(&ops.sp, 1.0).unwrap_err();
        assert!(matches!(err, Error::NotHermitian { .. }));
    }

    #[test]
    fn agrees_with_taylor_series() {
        // Independent route: plain Taylor series with scaling and squaring.
        let space = HilbertSpace::new(4).unwrap();
        let h = random_hermitian(space, 11);
        let t = 2.3;
        let d = space.dim();
        let squarings = 10;
        let a = h.matrix() * C64::new(0.0, -t / f64::from(1 << squarings));
        let mut term = DMatrix::<C64>::identity(d, d);
        let mut sum = term.clone();
        for k in 1..30 {
            term = &term * &a / C64::new(k as f64, 0.0);
            sum += &term;
        }
        for _ in 0..squarings {
            sum = &sum * &sum;
        }
        let u = expm_hermitian(&h, t).unwrap();
        let err = (u.matrix() - sum).norm();
        assert!(err < 1e-11, "{err}");
    }
}
