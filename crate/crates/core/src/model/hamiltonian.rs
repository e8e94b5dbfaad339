//! Hamiltonians in rad/s (divided by ħ).
//!
//! All frames share the structure
//!
//! ```text
//! G = D + σz ⊗ (c a + c* a†) + f σ+ + f* σ−
//! ```
//!
//! with `D` diagonal in the product basis. [`Generator`] stores exactly these
//! pieces so the propagator can act on states without forming matrices.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::qcore::HilbertSpace;
use crate::Operator;

use super::Couplings;

/// Structured Hamiltonian `D + σz ⊗ (c a + c* a†) + f σ+ + h.c.`.
#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    pub(crate) fock_dim: usize,
    /// Diagonal, indexed `s·N + n` (↓ = 0, ↑ = 1).
    pub(crate) diag: Vec<f64>,
    /// Coefficient of σz ⊗ a.
    pub(crate) coupling: C64,
    /// Coefficient of σ+.
    pub(crate) flip: C64,
}

impl Generator {
    pub(crate) fn zero(fock_dim: usize) -> Self {
        Self { fock_dim, diag: vec![0.0; 2 * fock_dim], coupling: C64::new(0.0, 0.0), flip: C64::new(0.0, 0.0) }
    }

    /// `wa·a + wb·b`.
    pub(crate) fn mix(a: &Generator, wa: f64, b: &Generator, wb: f64) -> Generator {
        debug_assert_eq!(a.fock_dim, b.fock_dim);
        Generator {
            fock_dim: a.fock_dim,
            diag: a.diag.iter().zip(&b.diag).map(|(x, y)| wa * x + wb * y).collect(),
            coupling: a.coupling * wa + b.coupling * wb,
            flip: a.flip * wa + b.flip * wb,
        }
    }

    pub fn fock_dim(&self) -> usize {
        self.fock_dim
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn coupling(&self) -> C64 {
        self.coupling
    }

    pub fn flip(&self) -> C64 {
        self.flip
    }

    /// Dense matrix of the generator.
    pub fn to_matrix(&self) -> DMatrix<C64> {
        let n = self.fock_dim;
        let mut m = DMatrix::from_element(2 * n, 2 * n, C64::new(0.0, 0.0));
        for (i, d) in self.diag.iter().enumerate() {
            m[(i, i)] = C64::new(*d, 0.0);
        }
        for s in 0..2 {
            let sign = if s == 1 { 1.0 } else { -1.0 };
            let o = s * n;
            for k in 1..n {
                let amp = (k as f64).sqrt() * sign;
                // a|k⟩ = √k |k−1⟩
                m[(o + k - 1, o + k)] += self.coupling * amp;
                m[(o + k, o + k - 1)] += self.coupling.conj() * amp;
            }
        }
        for k in 0..n {
            m[(n + k, k)] += self.flip;
            m[(k, n + k)] += self.flip.conj();
        }
        m
    }

    pub fn to_operator(&self) -> Operator {
        let space = HilbertSpace::new(self.fock_dim).expect("generator built from a valid space");
        Operator::from_matrix_unchecked(space, self.to_matrix())
    }
}

/// Which picture the generator is written in.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Frame {
    /// Spin rotating at ω₀, motion at ω_g.
    Rotating,
    /// Rotating frame followed by a spin rotation at δ; periodic in 2π/ω_g.
    Detuning,
    /// Laboratory frame with the given qubit frequency.
    Lab { omega0: f64 },
}

/// Generator at time `t` with microwave envelope `env_mw` and gradient
/// envelope `env_g`.
pub(crate) fn generator(c: &Couplings, frame: Frame, t: f64, env_mw: f64, env_g: f64, fock_dim: usize) -> Generator {
    let mut g = Generator::zero(fock_dim);
    let n = fock_dim;
    let wg = c.omega_gdrive;
    let phi = c.gradient_phase;
    match frame {
        Frame::Rotating | Frame::Detuning => {
            let det = c.mode_detuning();
            let zshift = 2.0 * c.omega_z * env_g * (wg * t + phi).cos();
            let spin_shift = if frame == Frame::Detuning { -c.delta / 2.0 } else { 0.0 };
            for k in 0..n {
                g.diag[k] = det * k as f64 - zshift - spin_shift;
                g.diag[n + k] = det * k as f64 + zshift + spin_shift;
            }
            g.coupling = c.omega_g * env_g * (C64::from_polar(1.0, phi) + C64::from_polar(1.0, -(2.0 * wg * t + phi)));
            let mw_phase = if frame == Frame::Detuning { c.mw_phase } else { c.delta * t + c.mw_phase };
            g.flip = C64::from_polar(c.omega_mu * env_mw, -mw_phase);
        }
        Frame::Lab { omega0 } => {
            let zshift = 2.0 * c.omega_z * env_g * (wg * t + phi).cos();
            for k in 0..n {
                g.diag[k] = c.omega_r * k as f64 - omega0 / 2.0 - zshift;
                g.diag[n + k] = c.omega_r * k as f64 + omega0 / 2.0 + zshift;
            }
            g.coupling = C64::new(2.0 * c.omega_g * env_g * (wg * t + phi).cos(), 0.0);
            g.flip = C64::new(2.0 * c.omega_mu * env_mw * ((omega0 + c.delta) * t + c.mw_phase).cos(), 0.0);
        }
    }
    g
}

/// Rotating-frame Hamiltonian at time `t` (rad/s). The microwave amplitude is
/// scaled by `envelope_value`; gradient envelopes are applied by passing a
/// [`Couplings::scaled_gradient`] copy.
pub fn rotating_frame_hamiltonian(c: &Couplings, t: f64, envelope_value: f64, space: HilbertSpace) -> Operator {
    generator(c, Frame::Rotating, t, envelope_value, 1.0, space.fock_dim()).to_operator()
}

/// Laboratory-frame Hamiltonian at time `t` for qubit frequency `omega0` (rad/s).
pub fn lab_frame_hamiltonian(c: &Couplings, omega0: f64, t: f64, envelope_value: f64, space: HilbertSpace) -> Operator {
    generator(c, Frame::Lab { omega0 }, t, envelope_value, 1.0, space.fock_dim()).to_operator()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::{annihilation, number, spin_ops};
    use std::f64::consts::PI;

    fn space(n: usize) -> HilbertSpace {
        HilbertSpace::new(n).unwrap()
    }

    fn couplings() -> Couplings {
        Couplings {
            omega_g: 2.0 * PI * 1.383e3,
            omega_z: 2.0 * PI * 0.4e6,
            r0: 5.7e-9,
            omega_r: 2.0 * PI * 6.2e6,
            omega_gdrive: 2.0 * PI * 5e6,
            omega_mu: 2.0 * PI * 0.3e6,
            delta: 2.0 * PI * 10e6,
            gradient_phase: 0.0,
            mw_phase: 0.0,
        }
    }

    fn diff(a: &Operator, b: &Operator) -> f64 {
        (a.matrix() - b.matrix()).norm()
    }

    #[test]
    fn free_mode_only() {
        let c = Couplings { omega_g: 0.0, omega_z: 0.0, omega_mu: 0.0, ..couplings() };
        let s = space(6);
        let h = rotating_frame_hamiltonian(&c, 1.3e-6, 1.0, s);
        let expect = number(s).scale_real(c.mode_detuning());
        assert!(diff(&h, &expect) < 1e-6);
    }

    #[test]
    fn matches_operator_algebra() {
        let c = couplings();
        let s = space(5);
        let ops = spin_ops(s);
        let a = annihilation(s);
        let ad = a.adjoint();
        let t = 0.37e-6;
        let wg = c.omega_gdrive;
        let e2 = C64::from_polar(1.0, -2.0 * wg * t);
        let grad = &ops.sz * &(&(&a + &ad) + &(&a.scale(e2) + &ad.scale(e2.conj())));
        let mut expect = grad.scale_real(c.omega_g);
        expect = &expect + &ops.sz.scale_real(2.0 * c.omega_z * (wg * t).cos());
        expect = &expect + &number(s).scale_real(c.mode_detuning());
        let ph = C64::from_polar(1.0, -c.delta * t);
        let mw = &ops.sp.scale(ph) + &ops.sm.scale(ph.conj());
        expect = &expect + &mw.scale_real(c.omega_mu * 0.7);
        let h = rotating_frame_hamiltonian(&c, t, 0.7, s);
        assert!(diff(&h, &expect) < 1e-6 * expect.frobenius_norm());
        assert!(h.is_hermitian());
    }

    #[test]
    fn at_origin_without_field_or_microwave() {
        let c = Couplings { omega_z: 0.0, omega_mu: 0.0, ..couplings() };
        let s = space(4);
        let ops = spin_ops(s);
        let a = annihilation(s);
        let x = &a + &a.adjoint();
        let expect = &(&ops.sz * &x).scale_real(2.0 * c.omega_g) + &number(s).scale_real(c.mode_detuning());
        let h = rotating_frame_hamiltonian(&c, 0.0, 1.0, s);
        assert!(diff(&h, &expect) < 1e-9 * expect.frobenius_norm());
    }

    #[test]
    fn periodic_when_detuning_is_harmonic() {
        let c = couplings().with_delta(2.0 * 2.0 * PI * 5e6);
        let s = space(4);
        let period = 2.0 * PI / c.omega_gdrive;
        for t in [0.0, 0.11e-6, 0.93e-6] {
            let h0 = rotating_frame_hamiltonian(&c, t, 1.0, s);
            let h1 = rotating_frame_hamiltonian(&c, t + period, 1.0, s);
            assert!(diff(&h0, &h1) < 1e-6 * h0.frobenius_norm());
        }
    }

    #[test]
    fn detuning_frame_is_periodic_for_any_detuning() {
        let c = couplings().with_delta(2.0 * PI * 1.234e6);
        let period = 2.0 * PI / c.omega_gdrive;
        let g0 = generator(&c, Frame::Detuning, 0.2e-6, 1.0, 1.0, 4).to_matrix();
        let g1 = generator(&c, Frame::Detuning, 0.2e-6 + period, 1.0, 1.0, 4).to_matrix();
        assert!((g0 - &g1).norm() < 1e-6 * g1.norm());
    }

    #[test]
    fn lab_frame_free_spectrum() {
        let c = Couplings { omega_g: 0.0, omega_z: 0.0, omega_mu: 0.0, ..couplings() };
        let s = space(4);
        let w0 = 2.0 * PI * 50e6;
        let h = lab_frame_hamiltonian(&c, w0, 0.5e-6, 1.0, s);
        for spin in 0..2 {
            for k in 0..4 {
                let i = spin * 4 + k;
                let e = if spin == 1 { w0 / 2.0 } else { -w0 / 2.0 } + c.omega_r * k as f64;
                assert!((h.matrix()[(i, i)].re - e).abs() < 1e-3);
            }
        }
        let off = h.matrix().norm_squared() - (0..8).map(|i| h.matrix()[(i, i)].norm_sqr()).sum::<f64>();
        assert!(off.abs() < 1e-6);
    }

    #[test]
    fn lab_gradient_averages_out() {
        let c = Couplings { omega_z: 0.0, omega_mu: 0.0, ..couplings() };
        let s = space(4);
        let w0 = 2.0 * PI * 50e6;
        let period = 2.0 * PI / c.omega_gdrive;
        let k = 64;
        let mut acc = Operator::zeros(s);
        for j in 0..k {
            let t = period * j as f64 / k as f64;
            acc = &acc + &lab_frame_hamiltonian(&c, w0, t, 1.0, s);
        }
        let avg = acc.scale_real(1.0 / k as f64);
        let free = lab_frame_hamiltonian(&Couplings { omega_g: 0.0, ..c }, w0, 0.0, 1.0, s);
        assert!(diff(&avg, &free) < 1e-9 * free.frobenius_norm());
    }
}
