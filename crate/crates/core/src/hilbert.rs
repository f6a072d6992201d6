//! Dense operator algebra on truncated Fock spaces.
//!
//! Density matrices are vectorized by stacking columns, so that
//! `vec(A X B) = (Bᵀ ⊗ A) vec(X)`. Every superoperator in the crate is built on
//! that identity.

use std::ops::{Add, Mul, Sub};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub const TOL_HERM: f64 = 1e-10;
pub const TOL_TRACE: f64 = 1e-10;
pub const TOL_PSD: f64 = 1e-8;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// A square complex matrix acting on a (possibly tensor-product) Hilbert space.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator(DMatrix<Complex64>);

impl Operator {
    pub fn from_matrix(m: DMatrix<Complex64>) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return Err(Error::InvalidOperator(format!(
                "expected a non-empty square matrix, found {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        Ok(Operator(m))
    }

    /// Builds an operator from real row-major entries.
    pub fn from_real_rows(dim: usize, rows: &[f64]) -> Result<Self> {
        if rows.len() != dim * dim {
            return Err(Error::Shape(format!("{} entries for dimension {dim}", rows.len())));
        }
        Self::from_matrix(DMatrix::from_fn(dim, dim, |i, j| Complex64::new(rows[i * dim + j], 0.0)))
    }

    pub fn identity(dim: usize) -> Self {
        Operator(DMatrix::identity(dim, dim))
    }

    pub fn zeros(dim: usize) -> Self {
        Operator(DMatrix::zeros(dim, dim))
    }

    pub fn diagonal(entries: &[f64]) -> Self {
        let n = entries.len();
        Operator(DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                Complex64::new(entries[i], 0.0)
            } else {
                ZERO
            }
        }))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.0
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.0[(row, col)]
    }

    pub fn dagger(&self) -> Self {
        Operator(self.0.adjoint())
    }

    pub fn scale(&self, s: f64) -> Self {
        Operator(self.0.map(|z| z * s))
    }

    /// Largest elementwise deviation from Hermiticity.
    pub fn hermiticity_error(&self) -> f64 {
        max_abs(&(&self.0 - self.0.adjoint()))
    }

    pub fn trace(&self) -> Complex64 {
        self.0.trace()
    }
}

impl Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        Operator(&self.0 + &rhs.0)
    }
}

impl Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        Operator(&self.0 - &rhs.0)
    }
}

impl Mul for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        Operator(&self.0 * &rhs.0)
    }
}

/// Bosonic lowering operator truncated to `dim` Fock levels.
pub fn annihilation(dim: usize) -> Result<Operator> {
    if dim < 2 {
        return Err(Error::InvalidDimension(dim));
    }
    let mut m = DMatrix::zeros(dim, dim);
    for n in 1..dim {
        m[(n - 1, n)] = Complex64::new((n as f64).sqrt(), 0.0);
    }
    Ok(Operator(m))
}

/// Kronecker product; `a` acts on the first (slowest-varying) factor.
pub fn tensor(a: &Operator, b: &Operator) -> Operator {
    Operator(a.0.kronecker(&b.0))
}

/// A hermitian, unit-trace, positive semidefinite matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(DMatrix<Complex64>);

impl DensityMatrix {
    /// Validates `m` against the density-matrix invariants.
    pub fn new(m: DMatrix<Complex64>) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return Err(Error::Shape(format!("{}x{} is not square", m.nrows(), m.ncols())));
        }
        let herm = max_abs(&(&m - m.adjoint()));
        if herm > TOL_HERM {
            return Err(Error::State(format!("not hermitian (deviation {herm:.3e})")));
        }
        let tr = m.trace();
        if (tr - ONE).norm() > TOL_TRACE {
            return Err(Error::State(format!("trace {tr} differs from 1")));
        }
        let min_eig = min_eigenvalue(&m);
        if min_eig < -TOL_PSD {
            return Err(Error::State(format!("negative eigenvalue {min_eig:.3e}")));
        }
        Ok(DensityMatrix(m))
    }

    /// Hermitizes with `(m + m†)/2`, rescales to unit trace, then validates.
    pub fn from_unnormalized(m: DMatrix<Complex64>) -> Result<Self> {
        let h = (&m + m.adjoint()).map(|z| z * 0.5);
        let tr = h.trace();
        if tr.norm() < f64::MIN_POSITIVE {
            return Err(Error::NumericalFailure("zero trace".into()));
        }
        let scaled = h.map(|z| z / tr.re);
        let scaled = (&scaled + scaled.adjoint()).map(|z| z * 0.5);
        DensityMatrix::new(scaled)
    }

    /// `|ψ⟩⟨ψ|` for a (not necessarily normalized) state vector.
    pub fn pure(psi: &[Complex64]) -> Result<Self> {
        let v = DVector::from_column_slice(psi);
        let norm2 = v.norm_squared();
        if norm2 == 0.0 {
            return Err(Error::State("zero state vector".into()));
        }
        Self::from_unnormalized(&v * v.adjoint() / Complex64::new(norm2, 0.0))
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        DensityMatrix(DMatrix::identity(dim, dim).map(|z: Complex64| z / dim as f64))
    }

    /// Diagonal state with the given populations (normalized on construction).
    pub fn diagonal(populations: &[f64]) -> Result<Self> {
        Self::from_unnormalized(Operator::diagonal(populations).into_matrix())
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.0
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.0[(row, col)]
    }

    pub fn populations(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.0[(i, i)].re).collect()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        min_eigenvalue(&self.0)
    }

    /// Largest elementwise distance to another matrix of the same size.
    pub fn max_abs_diff(&self, other: &DensityMatrix) -> f64 {
        max_abs(&(&self.0 - &other.0))
    }
}

/// Matrix acting on column-stacked density matrices (`d² × d²`).
#[derive(Debug, Clone, PartialEq)]
pub struct Superoperator {
    dim: usize,
    m: DMatrix<Complex64>,
}

impl Superoperator {
    pub fn zeros(dim: usize) -> Self {
        Superoperator { dim, m: DMatrix::zeros(dim * dim, dim * dim) }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.m
    }

    pub fn scale(&self, s: f64) -> Self {
        Superoperator { dim: self.dim, m: self.m.map(|z| z * s) }
    }

    /// Applies the superoperator to a matrix (not necessarily a valid state).
    pub fn apply(&self, rho: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let v = DVector::from_column_slice(rho.as_slice());
        let out = &self.m * v;
        DMatrix::from_column_slice(self.dim, self.dim, out.as_slice())
    }

    /// `max_j |Σ_i L[(i,i), j]|`: how far `tr(L ρ)` can be from zero.
    pub fn trace_residual(&self) -> f64 {
        let d = self.dim;
        (0..d * d)
            .map(|j| (0..d).map(|i| self.m[(i * d + i, j)]).sum::<Complex64>().norm())
            .fold(0.0, f64::max)
    }

    /// Rough spectral-radius bound (max absolute row sum).
    pub fn norm_inf(&self) -> f64 {
        self.m.row_iter().map(|r| r.iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max)
    }
}

impl Add for &Superoperator {
    type Output = Superoperator;
    fn add(self, rhs: &Superoperator) -> Superoperator {
        assert_eq!(self.dim, rhs.dim, "superoperator dimensions differ");
        Superoperator { dim: self.dim, m: &self.m + &rhs.m }
    }
}

impl Add for Superoperator {
    type Output = Superoperator;
    fn add(self, rhs: Superoperator) -> Superoperator {
        &self + &rhs
    }
}

/// `ρ ↦ 2LρL† − L†Lρ − ρL†L`, with no rate prefactor.
pub fn dissipator(l: &Operator) -> Superoperator {
    let d = l.dim();
    let id = DMatrix::<Complex64>::identity(d, d);
    let ldl = l.0.adjoint() * &l.0;
    let jump = l.0.map(|z| z.conj()).kronecker(&l.0).map(|z| z * 2.0);
    let m = jump - id.kronecker(&ldl) - ldl.transpose().kronecker(&id);
    Superoperator { dim: d, m }
}

/// `ρ ↦ −i(Hρ − ρH)`.
pub fn hamiltonian_part(h: &Operator) -> Result<Superoperator> {
    let err = h.hermiticity_error();
    if err > TOL_HERM {
        return Err(Error::InvalidHamiltonian(err));
    }
    let d = h.dim();
    let id = DMatrix::<Complex64>::identity(d, d);
    let m = (id.kronecker(&h.0) - h.0.transpose().kronecker(&id)).map(|z| z * Complex64::new(0.0, -1.0));
    Ok(Superoperator { dim: d, m })
}

pub fn vectorize(rho: &DensityMatrix) -> DVector<Complex64> {
    DVector::from_column_slice(rho.0.as_slice())
}

/// Inverse of [`vectorize`] for an arbitrary vector of length `d²`.
pub fn devectorize(v: &[Complex64]) -> Result<DMatrix<Complex64>> {
    let d = (v.len() as f64).sqrt().round() as usize;
    if d * d != v.len() || d == 0 {
        return Err(Error::Shape(format!("length {} is not a perfect square", v.len())));
    }
    Ok(DMatrix::from_column_slice(d, d, v))
}

pub(crate) fn max_abs(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn min_eigenvalue(m: &DMatrix<Complex64>) -> f64 {
    let h = (m + m.adjoint()).map(|z| z * 0.5);
    h.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
}
