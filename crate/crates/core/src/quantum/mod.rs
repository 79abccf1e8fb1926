//! Basis-labeled dense states and operators.

mod basis;
mod operator;
mod state;

pub use basis::{Basis, BasisLabel, Layout, Level, SiteKind};
pub use operator::{
    fidelity, hermiticity_residual, tensor, DensityMatrix, Hermiticity, Operator, Overlap, Tensor,
    DENSITY_HERMITIAN_TOL, HERMITIAN_TOL, POSITIVITY_TOL, TRACE_TOL,
};
pub use state::{Projection, StateVector};

pub use num_complex::Complex64;

pub(crate) const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub(crate) const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub(crate) const I: Complex64 = Complex64::new(0.0, 1.0);
