use std::ops::{Add, Mul, Sub};

use nalgebra::{DMatrix, Matrix2};
use num_complex::Complex64 as C64;

use super::{HilbertSpace, HERMITIAN_TOLERANCE};
use crate::{Error, Result};

/// A dense operator on a [`HilbertSpace`].
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    space: HilbertSpace,
    mat: DMatrix<C64>,
}

impl Operator {
    pub fn from_matrix(space: HilbertSpace, mat: DMatrix<C64>) -> Result<Self> {
        if mat.nrows() != space.dim() || mat.ncols() != space.dim() {
            return Err(Error::InvalidInput(format!(
                "matrix is {}x{}, space has dimension {}",
                mat.nrows(),
                mat.ncols(),
                space.dim()
            )));
        }
        Ok(Self { space, mat })
    }

    pub(crate) fn from_matrix_unchecked(space: HilbertSpace, mat: DMatrix<C64>) -> Self {
        debug_assert_eq!(mat.nrows(), space.dim());
        Self { space, mat }
    }

    pub fn zeros(space: HilbertSpace) -> Self {
        Self { space, mat: DMatrix::zeros(space.dim(), space.dim()) }
    }

    /// `kron(spin, fock)` with the spin factor as the slow index.
    pub fn from_blocks(spin: &Matrix2<C64>, fock: &DMatrix<C64>) -> Result<Self> {
        let n = fock.nrows();
        if fock.ncols() != n {
            return Err(Error::InvalidInput("fock block must be square".into()));
        }
        let space = HilbertSpace::new(n)?;
        let mut mat = DMatrix::zeros(2 * n, 2 * n);
        for si in 0..2 {
            for sj in 0..2 {
                let s = spin[(si, sj)];
                if s == C64::new(0.0, 0.0) {
                    continue;
                }
                for i in 0..n {
                    for j in 0..n {
                        mat[(si * n + i, sj * n + j)] = s * fock[(i, j)];
                    }
                }
            }
        }
        Ok(Self { space, mat })
    }

    #[inline]
    pub fn space(&self) -> HilbertSpace {
        self.space
    }

    #[inline]
    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.mat
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.mat
    }

    pub fn adjoint(&self) -> Self {
        Self { space: self.space, mat: self.mat.adjoint() }
    }

    pub fn scale(&self, s: C64) -> Self {
        Self { space: self.space, mat: &self.mat * s }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        Self { space: self.space, mat: self.mat.map(|z| z * s) }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.mat.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `‖A − A†‖_F / ‖A‖_F` (zero for the zero operator).
    pub fn hermiticity_error(&self) -> f64 {
        let norm = self.frobenius_norm();
        if norm == 0.0 {
            return 0.0;
        }
        let n = self.mat.nrows();
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                acc += (self.mat[(i, j)] - self.mat[(j, i)].conj()).norm_sqr();
            }
        }
        acc.sqrt() / norm
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermiticity_error() <= HERMITIAN_TOLERANCE
    }

    /// `‖U†U − I‖_F / ‖I‖_F`.
    pub fn unitarity_error(&self) -> f64 {
        let n = self.mat.nrows();
        let prod = self.mat.adjoint() * &self.mat;
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                let target = if i == j { 1.0 } else { 0.0 };
                acc += (prod[(i, j)] - target).norm_sqr();
            }
        }
        acc.sqrt() / (n as f64).sqrt()
    }

    /// Matrix commutator `[self, other]`.
    pub fn commutator(&self, other: &Operator) -> Operator {
        &(self * other) - &(other * self)
    }
}

impl<'a> Mul<&'a Operator> for &'a Operator {
    type Output = Operator;
    fn mul(self, rhs: &'a Operator) -> Operator {
        assert_eq!(self.space, rhs.space, "operators live on different spaces");
        Operator { space: self.space, mat: &self.mat * &rhs.mat }
    }
}

impl<'a> Add<&'a Operator> for &'a Operator {
    type Output = Operator;
    fn add(self, rhs: &'a Operator) -> Operator {
        assert_eq!(self.space, rhs.space, "operators live on different spaces");
        Operator { space: self.space, mat: &self.mat + &rhs.mat }
    }
}

impl<'a> Sub<&'a Operator> for &'a Operator {
    type Output = Operator;
    fn sub(self, rhs: &'a Operator) -> Operator {
        assert_eq!(self.space, rhs.space, "operators live on different spaces");
        Operator { space: self.space, mat: &self.mat - &rhs.mat }
    }
}

pub(crate) fn fock_annihilation(n: usize) -> DMatrix<C64> {
    let mut a = DMatrix::zeros(n, n);
    for k in 1..n {
        a[(k - 1, k)] = C64::new((k as f64).sqrt(), 0.0);
    }
    a
}

pub fn identity(space: HilbertSpace) -> Operator {
    Operator { space, mat: DMatrix::identity(space.dim(), space.dim()) }
}

/// `I₂ ⊗ a` with `a|n⟩ = √n |n−1⟩`.
pub fn annihilation(space: HilbertSpace) -> Operator {
    Operator::from_blocks(&Matrix2::identity(), &fock_annihilation(space.fock_dim()))
        .expect("fock_dim already validated")
}

/// `I₂ ⊗ a†a`.
pub fn number(space: HilbertSpace) -> Operator {
    let n = space.fock_dim();
    let fock = DMatrix::from_fn(n, n, |i, j| if i == j { C64::new(i as f64, 0.0) } else { C64::new(0.0, 0.0) });
    Operator::from_blocks(&Matrix2::identity(), &fock).expect("fock_dim already validated")
}

/// Pauli operators tensored with the Fock identity.
#[derive(Debug, Clone)]
pub struct SpinOps {
    /// `|↑⟩⟨↑| − |↓⟩⟨↓|`
    pub sz: Operator,
    /// `|↑⟩⟨↓|`
    pub sp: Operator,
    /// `|↓⟩⟨↑|`
    pub sm: Operator,
    /// `σ₊ + σ₋`
    pub sx: Operator,
}

pub fn spin_ops(space: HilbertSpace) -> SpinOps {
    let zero = C64::new(0.0, 0.0);
    let one = C64::new(1.0, 0.0);
    let id = DMatrix::identity(space.fock_dim(), space.fock_dim());
    // rows/cols: 0 = ↓, 1 = ↑
    let sz = Matrix2::new(-one, zero, zero, one);
    let sp = Matrix2::new(zero, zero, one, zero);
    let sm = Matrix2::new(zero, one, zero, zero);
    let build = |m: &Matrix2<C64>| Operator::from_blocks(m, &id).expect("fock_dim already validated");
    let sp = build(&sp);
    let sm = build(&sm);
    let sx = &sp + &sm;
    SpinOps { sz: build(&sz), sp, sm, sx }
}
