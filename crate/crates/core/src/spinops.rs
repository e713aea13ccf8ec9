//! Collective spin operators for a spin-`j` system in the `J_z` eigenbasis.
//!
//! The basis is ordered by ascending magnetic quantum number,
//! `m = -j, -j+1, ..., +j`; every other module inherits this convention.
//! Matrices are stored dense: dimensions stay below a few hundred.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Basis of a spin-`j` system: `dim = 2j + 1` levels labelled by the `J_z`
/// eigenvalue `m`, stored in ascending order.
///
/// `j` is kept as `2j` (an exact integer) so half-integer spins carry no
/// floating-point ambiguity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SpinBasis {
    twice_j: u32,
}

impl SpinBasis {
    /// Build the basis for spin magnitude `j` (must be a non-negative
    /// half-integer).
    pub fn new(j: f64) -> Result<Self> {
        if !j.is_finite() || j < 0.0 {
            return Err(Error::InvalidSpin(format!("j = {j} must be >= 0")));
        }
        let twice_j = 2.0 * j;
        if (twice_j - twice_j.round()).abs() > 1e-9 {
            return Err(Error::InvalidSpin(format!(
                "j = {j} is not a half-integer (2j must be an integer)"
            )));
        }
        Ok(Self {
            twice_j: twice_j.round() as u32,
        })
    }

    pub fn from_twice_j(twice_j: u32) -> Self {
        Self { twice_j }
    }

    pub fn j(&self) -> f64 {
        f64::from(self.twice_j) / 2.0
    }

    pub fn twice_j(&self) -> u32 {
        self.twice_j
    }

    /// Number of qubits represented by the collective spin, `N = 2j`.
    pub fn n_qubits(&self) -> u32 {
        self.twice_j
    }

    pub fn dim(&self) -> usize {
        self.twice_j as usize + 1
    }

    /// `m` value of basis index `i`, i.e. `m = -j + i`.
    pub fn m_at(&self, i: usize) -> f64 {
        -self.j() + i as f64
    }

    /// All `J_z` eigenvalues in ascending order.
    pub fn m_values(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.m_at(i)).collect()
    }

    /// Casimir eigenvalue `j(j + 1)`.
    pub fn j_jp1(&self) -> f64 {
        self.j() * (self.j() + 1.0)
    }

    /// Ladder coefficient `<m+1|J_+|m> = sqrt(j(j+1) - m(m+1))`.
    pub fn ladder_up(&self, m: f64) -> f64 {
        (self.j_jp1() - m * (m + 1.0)).max(0.0).sqrt()
    }

    /// Ladder coefficient `<m-1|J_-|m> = sqrt(j(j+1) - m(m-1))`.
    pub fn ladder_down(&self, m: f64) -> f64 {
        (self.j_jp1() - m * (m - 1.0)).max(0.0).sqrt()
    }
}

/// Dense complex operator attached to a [`SpinBasis`].
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    basis: SpinBasis,
    matrix: CMatrix,
}

impl Operator {
    pub fn new(basis: SpinBasis, matrix: CMatrix) -> Result<Self> {
        if matrix.nrows() != basis.dim() || matrix.ncols() != basis.dim() {
            return Err(Error::DimensionMismatch {
                expected: basis.dim(),
                actual: matrix.nrows(),
            });
        }
        Ok(Self { basis, matrix })
    }

    pub fn basis(&self) -> SpinBasis {
        self.basis
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn adjoint(&self) -> Self {
        Self {
            basis: self.basis,
            matrix: self.matrix.adjoint(),
        }
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        (&self.matrix - self.matrix.adjoint()).norm() <= tol
    }

    /// Eigendecomposition for Hermitian operators: eigenvalues ascending,
    /// eigenvectors as the matching columns.
    pub fn eigh(&self) -> (Vec<f64>, CMatrix) {
        hermitian_eigen(&self.matrix)
    }
}

impl std::ops::Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        assert_eq!(self.basis, rhs.basis);
        Operator {
            basis: self.basis,
            matrix: &self.matrix + &rhs.matrix,
        }
    }
}

impl std::ops::Mul<&Operator> for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        assert_eq!(self.basis, rhs.basis);
        Operator {
            basis: self.basis,
            matrix: &self.matrix * &rhs.matrix,
        }
    }
}

/// Build the basis for spin magnitude `j`.
pub fn build_basis(j: f64) -> Result<SpinBasis> {
    SpinBasis::new(j)
}

pub fn identity(basis: SpinBasis) -> Operator {
    Operator {
        basis,
        matrix: CMatrix::identity(basis.dim(), basis.dim()),
    }
}

/// `J_z`: diagonal with entries `m`.
pub fn jz(basis: SpinBasis) -> Operator {
    let d = basis.dim();
    let mut m = CMatrix::zeros(d, d);
    for i in 0..d {
        m[(i, i)] = Complex64::new(basis.m_at(i), 0.0);
    }
    Operator { basis, matrix: m }
}

/// `J_+`: raises `m` by one, `J_+|m> = sqrt(j(j+1) - m(m+1)) |m+1>`.
pub fn jplus(basis: SpinBasis) -> Operator {
    let d = basis.dim();
    let mut m = CMatrix::zeros(d, d);
    for i in 0..d.saturating_sub(1) {
        m[(i + 1, i)] = Complex64::new(basis.ladder_up(basis.m_at(i)), 0.0);
    }
    Operator { basis, matrix: m }
}

/// `J_-`: adjoint of `J_+`.
pub fn jminus(basis: SpinBasis) -> Operator {
    jplus(basis).adjoint()
}

/// `J_x = (J_+ + J_-) / 2`.
pub fn jx(basis: SpinBasis) -> Operator {
    let p = jplus(basis);
    let m = p.adjoint();
    Operator {
        basis,
        matrix: (p.matrix + m.matrix) * Complex64::new(0.5, 0.0),
    }
}

/// `J_y = (J_+ - J_-) / (2i)`.
pub fn jy(basis: SpinBasis) -> Operator {
    let p = jplus(basis);
    let m = p.adjoint();
    Operator {
        basis,
        matrix: (p.matrix - m.matrix) * Complex64::new(0.0, -0.5),
    }
}

/// `J_x^2`, tridiagonal in the `J_z` basis (couples `m` and `m +/- 2`).
pub fn jx_squared(basis: SpinBasis) -> Operator {
    let x = jx(basis);
    Operator {
        basis,
        matrix: &x.matrix * &x.matrix,
    }
}

/// Parity `Pi = exp(i pi (J_z + j))`: diagonal with entries `(-1)^(m+j)`.
///
/// `m + j` equals the basis index, so the entries alternate starting from
/// `+1` at `m = -j`.
pub fn parity(basis: SpinBasis) -> Operator {
    let d = basis.dim();
    let mut m = CMatrix::zeros(d, d);
    for i in 0..d {
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        m[(i, i)] = Complex64::new(sign, 0.0);
    }
    Operator { basis, matrix: m }
}

/// Hermitian eigendecomposition with eigenvalues sorted ascending.
pub(crate) fn hermitian_eigen(matrix: &CMatrix) -> (Vec<f64>, CMatrix) {
    let eig = matrix.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let d = matrix.nrows();
    let mut vecs = CMatrix::zeros(d, d);
    for (col, &i) in order.iter().enumerate() {
        vecs.set_column(col, &eig.eigenvectors.column(i));
    }
    (vals, vecs)
}

/// Eigenvalues only (Hermitian), sorted ascending.
pub(crate) fn hermitian_eigenvalues(matrix: &CMatrix) -> Vec<f64> {
    let mut vals: Vec<f64> = matrix
        .clone()
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .collect();
    vals.sort_by(f64::total_cmp);
    vals
}
