//! Action of `exp(−i G h)` on a block of state columns.
//!
//! The generator is shifted by the midpoint of its diagonal, which only
//! contributes a global phase, and the exponential of the remainder is summed
//! as a truncated Taylor series. The step is subdivided so that
//! `‖G‖·h ≤ THETA_MAX` (Gershgorin bound) and the number of terms is chosen
//! from the bound alone, so the work per step is deterministic.
//!
//! States are stored transposed with split real and imaginary parts: entry
//! `(row i, column j)` lives at `i·r + j` for `r` columns, so every generator
//! row is an operation on contiguous runs of length `r`.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::model::Generator;

const THETA_MAX: f64 = 2.0;
const TAYLOR_TOL: f64 = 1e-17;
const MAX_TERMS: usize = 40;

/// Smallest `K` with `θ^{K+1}/(K+1)! ≤ TAYLOR_TOL`.
fn taylor_terms(theta: f64) -> usize {
    let mut term = 1.0;
    for k in 1..=MAX_TERMS {
        term *= theta / k as f64;
        if term <= TAYLOR_TOL {
            return k - 1;
        }
    }
    MAX_TERMS
}

/// Transposed split-complex block of `cols` state columns of length `rows`.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Block {
    pub(crate) rows: usize,
    pub(crate) cols: usize,
    pub(crate) re: Vec<f64>,
    pub(crate) im: Vec<f64>,
}

impl Block {
    pub(crate) fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, re: vec![0.0; rows * cols], im: vec![0.0; rows * cols] }
    }

    pub(crate) fn identity(d: usize) -> Self {
        let mut b = Self::zeros(d, d);
        for i in 0..d {
            b.re[i * d + i] = 1.0;
        }
        b
    }

    pub(crate) fn from_matrix(x: &DMatrix<C64>) -> Self {
        let (rows, cols) = x.shape();
        let mut b = Self::zeros(rows, cols);
        for j in 0..cols {
            for i in 0..rows {
                let z = x[(i, j)];
                b.re[i * cols + j] = z.re;
                b.im[i * cols + j] = z.im;
            }
        }
        b
    }

    pub(crate) fn to_matrix(&self) -> DMatrix<C64> {
        DMatrix::from_fn(self.rows, self.cols, |i, j| C64::new(self.re[i * self.cols + j], self.im[i * self.cols + j]))
    }

    /// Σ_j |x_ij|² for row `i`.
    pub(crate) fn row_weight(&self, i: usize) -> f64 {
        let s = i * self.cols..(i + 1) * self.cols;
        self.re[s.clone()].iter().map(|v| v * v).sum::<f64>() + self.im[s].iter().map(|v| v * v).sum::<f64>()
    }

    /// Multiplies row `i` by `z`.
    pub(crate) fn scale_row(&mut self, i: usize, z: C64) {
        let s = i * self.cols..(i + 1) * self.cols;
        for (a, b) in self.re[s.clone()].iter_mut().zip(&mut self.im[s]) {
            let (x, y) = (*a, *b);
            *a = z.re * x - z.im * y;
            *b = z.re * y + z.im * x;
        }
    }

    /// Real and imaginary parts as `cols × rows` column-major matrices,
    /// i.e. the transpose of the represented block.
    pub(crate) fn transposed_parts(&self) -> (DMatrix<f64>, DMatrix<f64>) {
        (
            DMatrix::from_column_slice(self.cols, self.rows, &self.re),
            DMatrix::from_column_slice(self.cols, self.rows, &self.im),
        )
    }
}

/// `dst = c · src` on one row run.
#[inline]
fn set_scaled(dst_re: &mut [f64], dst_im: &mut [f64], c: C64, src_re: &[f64], src_im: &[f64]) {
    for j in 0..dst_re.len() {
        dst_re[j] = c.re * src_re[j] - c.im * src_im[j];
        dst_im[j] = c.re * src_im[j] + c.im * src_re[j];
    }
}

/// `dst += c · src` on one row run.
#[inline]
fn add_scaled(dst_re: &mut [f64], dst_im: &mut [f64], c: C64, src_re: &[f64], src_im: &[f64]) {
    for j in 0..dst_re.len() {
        dst_re[j] += c.re * src_re[j] - c.im * src_im[j];
        dst_im[j] += c.re * src_im[j] + c.im * src_re[j];
    }
}

/// Reusable buffers for [`Kernel::step`].
#[derive(Debug, Clone)]
pub(crate) struct Kernel {
    fock_dim: usize,
    sqrt: Vec<f64>,
    diag: Vec<f64>,
    up: Vec<C64>,
    down: Vec<C64>,
    term: Block,
    next: Block,
}

impl Kernel {
    pub(crate) fn new(fock_dim: usize) -> Self {
        Self {
            fock_dim,
            sqrt: (0..=fock_dim).map(|k| (k as f64).sqrt()).collect(),
            diag: vec![0.0; 2 * fock_dim],
            up: vec![C64::new(0.0, 0.0); fock_dim],
            down: vec![C64::new(0.0, 0.0); fock_dim],
            term: Block::zeros(0, 0),
            next: Block::zeros(0, 0),
        }
    }

    /// `x ← exp(−i g h) x`.
    pub(crate) fn step(&mut self, g: &Generator, h: f64, x: &mut Block) {
        let n = self.fock_dim;
        debug_assert_eq!(g.fock_dim(), n);
        debug_assert_eq!(x.rows, 2 * n);
        let (lo, hi) = g.diag().iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        let mid = 0.5 * (lo + hi);
        for (dst, src) in self.diag.iter_mut().zip(g.diag()) {
            *dst = src - mid;
        }
        let c = g.coupling();
        let f = g.flip();
        // (c a)|k+1⟩ → √(k+1) c |k⟩ ; (c* a†)|k−1⟩ → √k c* |k⟩
        for k in 0..n {
            self.up[k] = if k + 1 < n { c * self.sqrt[k + 1] } else { C64::new(0.0, 0.0) };
            self.down[k] = if k > 0 { c.conj() * self.sqrt[k] } else { C64::new(0.0, 0.0) };
        }
        let beta = 0.5 * (hi - lo) + 2.0 * c.norm() * self.sqrt[n - 1] + f.norm();
        let subs = ((beta * h.abs() / THETA_MAX).ceil() as usize).max(1);
        let hs = h / subs as f64;
        let terms = taylor_terms(beta * hs.abs());

        if self.term.re.len() != x.re.len() {
            self.term = Block::zeros(x.rows, x.cols);
            self.next = Block::zeros(x.rows, x.cols);
        }
        for _ in 0..subs {
            self.term.re.copy_from_slice(&x.re);
            self.term.im.copy_from_slice(&x.im);
            for k in 1..=terms {
                let scale = C64::new(0.0, -hs / k as f64);
                self.apply(f, scale, x.cols);
                for (a, t) in x.re.iter_mut().zip(&self.next.re) {
                    *a += t;
                }
                for (a, t) in x.im.iter_mut().zip(&self.next.im) {
                    *a += t;
                }
                std::mem::swap(&mut self.term, &mut self.next);
            }
        }
        let phase = C64::from_polar(1.0, -mid * h);
        for i in 0..x.rows {
            x.scale_row(i, phase);
        }
    }

    /// `next = scale · G' term`.
    fn apply(&mut self, f: C64, scale: C64, r: usize) {
        let n = self.fock_dim;
        let src = &self.term;
        let dst = &mut self.next;
        let run = |i: usize| i * r..(i + 1) * r;
        for s in 0..2 {
            let sign = if s == 1 { 1.0 } else { -1.0 };
            let flip = if s == 1 { f } else { f.conj() } * scale;
            let other = (1 - s) * n;
            for k in 0..n {
                let i = s * n + k;
                let (dr, di) = (&mut dst.re[run(i)], &mut dst.im[run(i)]);
                set_scaled(dr, di, scale * self.diag[i], &src.re[run(i)], &src.im[run(i)]);
                add_scaled(dr, di, flip, &src.re[run(other + k)], &src.im[run(other + k)]);
                if k + 1 < n {
                    add_scaled(dr, di, scale * self.up[k] * sign, &src.re[run(i + 1)], &src.im[run(i + 1)]);
                }
                if k > 0 {
                    add_scaled(dr, di, scale * self.down[k] * sign, &src.re[run(i - 1)], &src.im[run(i - 1)]);
                }
            }
        }
    }
}
