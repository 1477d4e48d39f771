//! Dense numerical kernels: matrix exponential, Lyapunov solves, spectra and
//! the imaginary-axis Hamiltonian test used by the H∞ norm computation.

mod eig;
mod expm;
mod hamiltonian;
mod lyapunov;

pub use eig::{
    eigenvalues, left_right_eigenvectors, max_singular_triplet, min_singular_value, singular_values,
    symmetric_max_eigen, Spectrum,
};
pub use expm::expm;
pub use hamiltonian::{
    frequency_response, imaginary_axis_crossings, is_imaginary, max_gain, IMAGINARY_TOL,
};
pub use lyapunov::solve_lyapunov;
pub(crate) use eig::complex_eigenvalues;
pub(crate) use hamiltonian::raw_crossings_unchecked;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{KreissError, Result};

pub type RealMatrix = DMatrix<f64>;
pub type ComplexMatrix = DMatrix<Complex64>;

pub(crate) fn ensure_finite(m: &RealMatrix, what: &'static str) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(KreissError::NonFinite(what))
    }
}

pub(crate) fn ensure_square(m: &RealMatrix, what: &str) -> Result<()> {
    if m.is_square() {
        Ok(())
    } else {
        Err(KreissError::Dimension(format!(
            "{what} must be square, got {}x{}",
            m.nrows(),
            m.ncols()
        )))
    }
}

pub fn to_complex(m: &RealMatrix) -> ComplexMatrix {
    m.map(|v| Complex64::new(v, 0.0))
}

/// Spectral norm of a real matrix.
pub fn norm2(m: &RealMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone()
        .singular_values()
        .iter()
        .cloned()
        .fold(0.0, f64::max)
}

/// Induced 1-norm (max column sum).
pub fn norm1(m: &RealMatrix) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}
