//! Dense complex matrices and the decompositions behind every norm in the crate.
//!
//! Dimensions here are small (a handful of qubits), so all norms are computed
//! from full decompositions. The Kronecker convention is "first factor is the
//! slow index": `kron(a, b)[(i*rb + k, j*cb + l)] = a[(i, j)] * b[(k, l)]`.

use std::fmt;
use std::ops::{Add, Index, Mul, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Largest dimension accepted by the eigen/singular-value routines.
pub const MAX_DECOMPOSITION_DIM: usize = 64;

/// Max |a - a^dag| entry accepted as Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-10;

/// Eigenvalues in [-PSD_CLAMP_TOL, 0) are clamped to zero by [`Matrix::psd_sqrt`].
pub const PSD_CLAMP_TOL: f64 = 1e-12;

/// Eigenvalues below `-PSD_REJECT_TOL` make [`Matrix::psd_sqrt`] fail.
pub const PSD_REJECT_TOL: f64 = 1e-8;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// `e^{i phi}`
pub fn cis(phi: f64) -> C64 {
    C64::from_polar(1.0, phi)
}

/// Dense complex matrix.
#[derive(Clone, PartialEq)]
pub struct Matrix {
    inner: DMatrix<C64>,
}

/// Output of [`Matrix::hermitian_eig`]: ascending eigenvalues with the
/// matching orthonormal eigenvectors stored as columns.
#[derive(Clone, Debug)]
pub struct HermitianEig {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Matrix,
}

impl HermitianEig {
    /// `V diag(f(lambda)) V^dag`
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> C64) -> Matrix {
        let v = &self.eigenvectors.inner;
        let n = v.nrows();
        let mut scaled = v.clone();
        for (j, &lambda) in self.eigenvalues.iter().enumerate() {
            let s = f(lambda);
            for i in 0..n {
                scaled[(i, j)] *= s;
            }
        }
        Matrix::from_inner(scaled * v.adjoint())
    }
}

impl Matrix {
    pub(crate) fn from_inner(inner: DMatrix<C64>) -> Self {
        Self { inner }
    }

    pub(crate) fn inner(&self) -> &DMatrix<C64> {
        &self.inner
    }

    /// Build from row-major entries.
    pub fn new(rows: usize, cols: usize, entries: Vec<C64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::EntryCount {
                expected: rows * cols,
                got: entries.len(),
            });
        }
        if entries.len() != rows * cols {
            return Err(Error::EntryCount {
                expected: rows * cols,
                got: entries.len(),
            });
        }
        if entries
            .iter()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::NonFinite);
        }
        Ok(Self::from_inner(DMatrix::from_row_slice(
            rows, cols, &entries,
        )))
    }

    /// Build from real row-major entries.
    pub fn from_real(rows: usize, cols: usize, entries: &[f64]) -> Result<Self> {
        Self::new(
            rows,
            cols,
            entries.iter().map(|&x| C64::new(x, 0.0)).collect(),
        )
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl FnMut(usize, usize) -> C64) -> Self {
        Self::from_inner(DMatrix::from_fn(rows, cols, f))
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::from_inner(DMatrix::zeros(rows, cols))
    }

    pub fn identity(n: usize) -> Self {
        Self::from_inner(DMatrix::identity(n, n))
    }

    pub fn diag(entries: &[C64]) -> Self {
        let n = entries.len();
        Self::from_fn(n, n, |i, j| if i == j { entries[i] } else { ZERO })
    }

    pub fn real_diag(entries: &[f64]) -> Self {
        let c: Vec<C64> = entries.iter().map(|&x| C64::new(x, 0.0)).collect();
        Self::diag(&c)
    }

    /// Column vector.
    pub fn column(entries: &[C64]) -> Self {
        Self::from_fn(entries.len(), 1, |i, _| entries[i])
    }

    /// `|psi><psi|` for a (not necessarily normalized) vector.
    pub fn projector(psi: &[C64]) -> Self {
        let n = psi.len();
        Self::from_fn(n, n, |i, j| psi[i] * psi[j].conj())
    }

    pub fn rows(&self) -> usize {
        self.inner.nrows()
    }

    pub fn cols(&self) -> usize {
        self.inner.ncols()
    }

    pub fn shape(&self) -> (usize, usize) {
        self.inner.shape()
    }

    pub fn is_square(&self) -> bool {
        self.rows() == self.cols()
    }

    /// Entries in row-major order.
    pub fn to_row_major(&self) -> Vec<C64> {
        let mut out = Vec::with_capacity(self.rows() * self.cols());
        for i in 0..self.rows() {
            for j in 0..self.cols() {
                out.push(self.inner[(i, j)]);
            }
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.inner
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Matrix product, rejecting incompatible shapes.
    pub fn multiply(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols() != other.rows() {
            return Err(Error::DimensionMismatch {
                op: "multiply",
                left: self.shape(),
                right: other.shape(),
            });
        }
        Ok(Self::from_inner(&self.inner * &other.inner))
    }

    fn same_shape(&self, other: &Matrix, op: &'static str) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::DimensionMismatch {
                op,
                left: self.shape(),
                right: other.shape(),
            });
        }
        Ok(())
    }

    pub fn try_add(&self, other: &Matrix) -> Result<Matrix> {
        self.same_shape(other, "add")?;
        Ok(Self::from_inner(&self.inner + &other.inner))
    }

    pub fn try_sub(&self, other: &Matrix) -> Result<Matrix> {
        self.same_shape(other, "sub")?;
        Ok(Self::from_inner(&self.inner - &other.inner))
    }

    pub fn scale(&self, s: C64) -> Matrix {
        Self::from_inner(&self.inner * s)
    }

    pub fn scale_real(&self, s: f64) -> Matrix {
        self.scale(C64::new(s, 0.0))
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Matrix {
        Self::from_inner(self.inner.adjoint())
    }

    pub fn transpose(&self) -> Matrix {
        Self::from_inner(self.inner.transpose())
    }

    pub fn conj(&self) -> Matrix {
        Self::from_inner(self.inner.map(|z| z.conj()))
    }

    /// Kronecker product; `self` is the slow index.
    pub fn kron(&self, other: &Matrix) -> Matrix {
        Self::from_inner(self.inner.kronecker(&other.inner))
    }

    pub fn trace(&self) -> C64 {
        self.inner.trace()
    }

    /// `max |a_ij - b_ij|`
    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        assert_eq!(self.shape(), other.shape(), "max_abs_diff shape mismatch");
        self.inner
            .iter()
            .zip(other.inner.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.inner.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `max |a - a^dag|`, or infinity for non-square input.
    pub fn hermiticity_deviation(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let n = self.rows();
        let mut dev: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                dev = dev.max((self.inner[(i, j)] - self.inner[(j, i)].conj()).norm());
            }
        }
        dev
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_deviation() <= tol
    }

    /// `max |u^dag u - I|`, or infinity for non-square input.
    pub fn unitarity_deviation(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let prod = Self::from_inner(self.inner.adjoint() * &self.inner);
        prod.max_abs_diff(&Matrix::identity(self.rows()))
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_deviation() <= tol
    }

    fn check_decomposition_dim(&self, op: &'static str) -> Result<()> {
        let dim = self.rows().max(self.cols());
        if dim > MAX_DECOMPOSITION_DIM {
            return Err(Error::DimensionTooLarge {
                op,
                dim,
                max: MAX_DECOMPOSITION_DIM,
            });
        }
        Ok(())
    }

    /// All singular values, descending.
    pub fn singular_values(&self) -> Result<Vec<f64>> {
        self.check_decomposition_dim("singular_values")?;
        let svd = self.inner.clone().svd(false, false);
        let mut s: Vec<f64> = svd.singular_values.iter().copied().collect();
        s.sort_by(|a, b| b.total_cmp(a));
        Ok(s)
    }

    /// Largest singular value.
    pub fn operator_norm(&self) -> Result<f64> {
        Ok(self.singular_values()?.first().copied().unwrap_or(0.0))
    }

    /// Sum of singular values; square input only.
    pub fn trace_norm(&self) -> Result<f64> {
        if !self.is_square() {
            return Err(Error::NotSquare {
                op: "trace_norm",
                rows: self.rows(),
                cols: self.cols(),
            });
        }
        Ok(self.singular_values()?.iter().sum())
    }

    /// Trace norm of a Hermitian matrix as the sum of |eigenvalues|.
    ///
    /// The input is symmetrized first; no Hermiticity check is made, so callers
    /// must know their matrix is Hermitian up to rounding.
    pub fn hermitian_trace_norm(&self) -> Result<f64> {
        let eig = self.symmetrized_eig("hermitian_trace_norm")?;
        Ok(eig.iter().map(|l| l.abs()).sum())
    }

    fn symmetrized_eig(&self, op: &'static str) -> Result<Vec<f64>> {
        if !self.is_square() {
            return Err(Error::NotSquare {
                op,
                rows: self.rows(),
                cols: self.cols(),
            });
        }
        self.check_decomposition_dim(op)?;
        let sym = (&self.inner + self.inner.adjoint()) * C64::new(0.5, 0.0);
        Ok(sym.symmetric_eigenvalues().iter().copied().collect())
    }

    /// Eigendecomposition of a Hermitian matrix, eigenvalues ascending.
    pub fn hermitian_eig(&self) -> Result<HermitianEig> {
        if !self.is_square() {
            return Err(Error::NotSquare {
                op: "hermitian_eig",
                rows: self.rows(),
                cols: self.cols(),
            });
        }
        self.check_decomposition_dim("hermitian_eig")?;
        let deviation = self.hermiticity_deviation();
        if deviation > HERMITIAN_TOL {
            return Err(Error::NotHermitian { deviation });
        }
        let sym = (&self.inner + self.inner.adjoint()) * C64::new(0.5, 0.0);
        let eig = sym.symmetric_eigen();
        let n = self.rows();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let eigenvalues = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let eigenvectors = Matrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
        Ok(HermitianEig {
            eigenvalues,
            eigenvectors,
        })
    }

    /// Smallest eigenvalue of a Hermitian matrix.
    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(self.hermitian_eig()?.eigenvalues[0])
    }

    /// Principal square root of a Hermitian positive semidefinite matrix.
    pub fn psd_sqrt(&self) -> Result<Matrix> {
        let eig = self.hermitian_eig()?;
        let min = eig.eigenvalues[0];
        if min < -PSD_REJECT_TOL {
            return Err(Error::NotPsd {
                min_eigenvalue: min,
            });
        }
        Ok(eig.reconstruct_with(|l| {
            let l = if l < PSD_CLAMP_TOL { 0.0 } else { l };
            C64::new(l.sqrt(), 0.0)
        }))
    }

    /// `exp(i H)` for Hermitian `H`.
    pub fn exp_i_hermitian(&self) -> Result<Matrix> {
        Ok(self.hermitian_eig()?.reconstruct_with(cis))
    }

    /// Cholesky-based PSD test, usable above the decomposition cap.
    ///
    /// Works on the real embedding `[[A, -B], [B, A]]` of `A + iB`, which is
    /// PSD exactly when the complex matrix is.
    pub(crate) fn is_psd_by_cholesky(&self, shift: f64) -> bool {
        if !self.is_square() {
            return false;
        }
        let n = self.rows();
        let real = DMatrix::<f64>::from_fn(2 * n, 2 * n, |r, c| {
            let z = 0.5 * (self.inner[(r % n, c % n)] + self.inner[(c % n, r % n)].conj());
            let v = match (r < n, c < n) {
                (true, true) | (false, false) => z.re,
                (true, false) => -z.im,
                (false, true) => z.im,
            };
            if r == c {
                v + shift
            } else {
                v
            }
        });
        real.cholesky().is_some()
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = C64;

    fn index(&self, idx: (usize, usize)) -> &C64 {
        &self.inner[idx]
    }
}

impl Mul for &Matrix {
    type Output = Matrix;

    /// Panics on a shape mismatch; use [`Matrix::multiply`] for checked input.
    fn mul(self, rhs: &Matrix) -> Matrix {
        self.multiply(rhs).expect("matrix product shape mismatch")
    }
}

impl Add for &Matrix {
    type Output = Matrix;

    fn add(self, rhs: &Matrix) -> Matrix {
        self.try_add(rhs).expect("matrix sum shape mismatch")
    }
}

impl Sub for &Matrix {
    type Output = Matrix;

    fn sub(self, rhs: &Matrix) -> Matrix {
        self.try_sub(rhs).expect("matrix difference shape mismatch")
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows(), self.cols())?;
        for i in 0..self.rows() {
            write!(f, "  ")?;
            for j in 0..self.cols() {
                let z = self.inner[(i, j)];
                write!(f, "{:+.6}{:+.6}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// Single-qubit Paulis and common gates.
pub mod gates {
    use super::*;

    pub fn pauli_x() -> Matrix {
        Matrix::from_fn(2, 2, |i, j| if i != j { ONE } else { ZERO })
    }

    pub fn pauli_y() -> Matrix {
        Matrix::new(2, 2, vec![ZERO, -I, I, ZERO]).expect("static shape")
    }

    pub fn pauli_z() -> Matrix {
        Matrix::real_diag(&[1.0, -1.0])
    }

    pub fn hadamard() -> Matrix {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Matrix::from_real(2, 2, &[h, h, h, -h]).expect("static shape")
    }

    /// `exp(i theta sigma_Z) = diag(e^{i theta}, e^{-i theta})`
    pub fn z_rotation(theta: f64) -> Matrix {
        Matrix::diag(&[cis(theta), cis(-theta)])
    }

    /// Controlled-X with the control as the first (slow) factor.
    pub fn cnot() -> Matrix {
        Matrix::from_real(
            4,
            4,
            &[
                1.0, 0.0, 0.0, 0.0, //
                0.0, 1.0, 0.0, 0.0, //
                0.0, 0.0, 0.0, 1.0, //
                0.0, 0.0, 1.0, 0.0,
            ],
        )
        .expect("static shape")
    }

    pub fn cz() -> Matrix {
        Matrix::real_diag(&[1.0, 1.0, 1.0, -1.0])
    }

    /// `|+><+|`
    pub fn plus_state() -> Matrix {
        Matrix::from_real(2, 2, &[0.5, 0.5, 0.5, 0.5]).expect("static shape")
    }

    /// `|-><-|`
    pub fn minus_state() -> Matrix {
        Matrix::from_real(2, 2, &[0.5, -0.5, -0.5, 0.5]).expect("static shape")
    }
}
