use nalgebra::DMatrix;
use num_complex::Complex64;

use super::basis::Basis;
use super::state::StateVector;
use crate::error::{Error, Result};

/// Tolerance for flagging an operator as hermitian.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Trace tolerance accepted when validating a density matrix.
pub const TRACE_TOL: f64 = 1e-8;
/// Hermiticity tolerance accepted when validating a density matrix.
pub const DENSITY_HERMITIAN_TOL: f64 = 1e-10;
/// Smallest eigenvalue accepted as positive semidefinite.
pub const POSITIVITY_TOL: f64 = -1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Hermiticity {
    Yes,
    No,
    Unknown,
}

/// Largest entry of `|M − M†|`.
pub fn hermiticity_residual(m: &DMatrix<Complex64>) -> f64 {
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Dense operator over a labeled basis.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    basis: Basis,
    matrix: DMatrix<Complex64>,
    hermitian: Hermiticity,
}

impl Operator {
    pub fn new(basis: impl Into<Basis>, matrix: DMatrix<Complex64>) -> Result<Self> {
        let basis = basis.into();
        check_square(&basis, &matrix)?;
        Ok(Operator {
            basis,
            matrix,
            hermitian: Hermiticity::Unknown,
        })
    }

    /// Construct and verify hermiticity within [`HERMITIAN_TOL`].
    pub fn hermitian(basis: impl Into<Basis>, matrix: DMatrix<Complex64>) -> Result<Self> {
        let mut op = Self::new(basis, matrix)?;
        let r = hermiticity_residual(&op.matrix);
        if r > HERMITIAN_TOL {
            return Err(Error::NotHermitian(r));
        }
        op.hermitian = Hermiticity::Yes;
        Ok(op)
    }

    pub fn identity(basis: impl Into<Basis>) -> Self {
        let basis = basis.into();
        let d = basis.dim();
        Operator {
            basis,
            matrix: DMatrix::identity(d, d),
            hermitian: Hermiticity::Yes,
        }
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.matrix
    }

    pub fn hermiticity(&self) -> Hermiticity {
        self.hermitian
    }

    /// Re-evaluate the flag from the entries.
    pub fn check_hermitian(mut self) -> Self {
        self.hermitian = if hermiticity_residual(&self.matrix) <= HERMITIAN_TOL {
            Hermiticity::Yes
        } else {
            Hermiticity::No
        };
        self
    }

    pub fn hermiticity_residual(&self) -> f64 {
        hermiticity_residual(&self.matrix)
    }

    /// `⟨a|M|b⟩` by label.
    pub fn element(&self, row: &str, col: &str) -> Result<Complex64> {
        let i = self.basis.index_of(&row.parse()?)?;
        let j = self.basis.index_of(&col.parse()?)?;
        Ok(self.matrix[(i, j)])
    }

    pub fn adjoint(&self) -> Operator {
        Operator {
            basis: self.basis.clone(),
            matrix: self.matrix.adjoint(),
            hermitian: self.hermitian,
        }
    }

    pub fn tensor(&self, other: &Operator) -> Operator {
        let hermitian = match (self.hermitian, other.hermitian) {
            (Hermiticity::Yes, Hermiticity::Yes) => Hermiticity::Yes,
            _ => Hermiticity::Unknown,
        };
        Operator {
            basis: self.basis.tensor(&other.basis),
            matrix: self.matrix.kronecker(&other.matrix),
            hermitian,
        }
    }

    pub fn apply(&self, psi: &StateVector) -> Result<StateVector> {
        if psi.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: psi.dim(),
            });
        }
        StateVector::new(self.basis.clone(), &self.matrix * psi.amplitudes())
    }

    /// `⟨ψ|M|ψ⟩`
    pub fn expectation(&self, psi: &StateVector) -> Result<Complex64> {
        let m_psi = self.apply(psi)?;
        Ok(psi.amplitudes().dotc(m_psi.amplitudes()))
    }
}

fn check_square(basis: &Basis, m: &DMatrix<Complex64>) -> Result<()> {
    if m.nrows() != basis.dim() || m.ncols() != basis.dim() {
        return Err(Error::DimensionMismatch {
            expected: basis.dim(),
            found: m.nrows().max(m.ncols()),
        });
    }
    Ok(())
}

/// Mixed state over a labeled basis.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    basis: Basis,
    matrix: DMatrix<Complex64>,
}

impl DensityMatrix {
    /// Validated construction: unit trace within [`TRACE_TOL`] and hermitian
    /// within [`DENSITY_HERMITIAN_TOL`].
    pub fn new(basis: impl Into<Basis>, matrix: DMatrix<Complex64>) -> Result<Self> {
        let rho = Self::from_matrix_unchecked(basis.into(), matrix)?;
        rho.validate()?;
        Ok(rho)
    }

    pub(crate) fn from_matrix_unchecked(
        basis: Basis,
        matrix: DMatrix<Complex64>,
    ) -> Result<Self> {
        check_square(&basis, &matrix)?;
        Ok(DensityMatrix { basis, matrix })
    }

    pub fn from_pure(psi: &StateVector) -> Self {
        DensityMatrix {
            basis: psi.basis().clone(),
            matrix: psi.outer(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let tr = self.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::InvalidDensity(format!("trace {tr}")));
        }
        let h = self.hermiticity_residual();
        if h > DENSITY_HERMITIAN_TOL {
            return Err(Error::InvalidDensity(format!("hermiticity residual {h:e}")));
        }
        Ok(())
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn trace(&self) -> Complex64 {
        self.matrix.trace()
    }

    pub fn hermiticity_residual(&self) -> f64 {
        hermiticity_residual(&self.matrix)
    }

    /// Smallest eigenvalue of the hermitian part `(ρ + ρ†)/2`.
    pub fn min_eigenvalue(&self) -> f64 {
        let sym = (&self.matrix + self.matrix.adjoint()).unscale(2.0);
        sym.symmetric_eigen()
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn population(&self, label: &str) -> Result<f64> {
        let i = self.basis.index_of(&label.parse()?)?;
        Ok(self.matrix[(i, i)].re)
    }

    pub fn tensor(&self, other: &DensityMatrix) -> DensityMatrix {
        DensityMatrix {
            basis: self.basis.tensor(&other.basis),
            matrix: self.matrix.kronecker(&other.matrix),
        }
    }
}

/// States that can be scored against a pure ideal state.
pub trait Overlap {
    /// `⟨ψ|ρ|ψ⟩` (or `|⟨ψ|φ⟩|²` for a pure state), unclamped.
    fn overlap_with(&self, ideal: &StateVector) -> Result<f64>;
}

impl Overlap for StateVector {
    fn overlap_with(&self, ideal: &StateVector) -> Result<f64> {
        Ok(ideal.inner(self)?.norm_sqr())
    }
}

impl Overlap for DensityMatrix {
    fn overlap_with(&self, ideal: &StateVector) -> Result<f64> {
        if ideal.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: ideal.dim(),
            });
        }
        let psi = ideal.amplitudes();
        Ok(psi.dotc(&(&self.matrix * psi)).re)
    }
}

/// `⟨ψ_ideal|ρ|ψ_ideal⟩`, clamped to `[0, 1]`.
pub fn fidelity<S: Overlap + ?Sized>(ideal: &StateVector, actual: &S) -> Result<f64> {
    Ok(actual.overlap_with(ideal)?.clamp(0.0, 1.0))
}

/// Kronecker product over the concatenated basis.
pub trait Tensor {
    fn tensor_with(&self, other: &Self) -> Self;
}

impl Tensor for StateVector {
    fn tensor_with(&self, other: &Self) -> Self {
        self.tensor(other)
    }
}

impl Tensor for Operator {
    fn tensor_with(&self, other: &Self) -> Self {
        self.tensor(other)
    }
}

impl Tensor for DensityMatrix {
    fn tensor_with(&self, other: &Self) -> Self {
        self.tensor(other)
    }
}

pub fn tensor<T: Tensor>(a: &T, b: &T) -> T {
    a.tensor_with(b)
}
