use nalgebra::{DVector, Schur, SymmetricEigen};
use num_complex::Complex64;

use super::{ensure_finite, ensure_square, to_complex, ComplexMatrix, RealMatrix};
use crate::error::{KreissError, Result};

const SCHUR_MAX_ITER: usize = 20_000;
/// Deflation tolerances tried in turn. A bare machine epsilon stalls on
/// clustered eigenvalues (e.g. the Hamiltonian of `-I`).
const SCHUR_EPS: [f64; 3] = [4.0 * f64::EPSILON, 1e-14, 1e-12];

pub(crate) fn schur<T>(m: &nalgebra::DMatrix<T>) -> Option<Schur<T, nalgebra::Dyn>>
where
    T: nalgebra::ComplexField,
{
    SCHUR_EPS
        .iter()
        .find_map(|&eps| Schur::try_new(m.clone(), nalgebra::convert(eps), SCHUR_MAX_ITER))
}

/// Eigenvalues of a real square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    eigenvalues: Vec<Complex64>,
}

impl Spectrum {
    pub fn eigenvalues(&self) -> &[Complex64] {
        &self.eigenvalues
    }

    pub fn dimension(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Largest real part; `-inf` for an empty spectrum.
    pub fn abscissa(&self) -> f64 {
        self.eigenvalues
            .iter()
            .map(|l| l.re)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Largest modulus; 0 for an empty spectrum.
    pub fn radius(&self) -> f64 {
        self.eigenvalues.iter().map(|l| l.norm()).fold(0.0, f64::max)
    }

    pub fn rightmost(&self) -> Option<Complex64> {
        self.eigenvalues
            .iter()
            .cloned()
            .max_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)))
    }
}

pub fn eigenvalues(a: &RealMatrix) -> Result<Spectrum> {
    ensure_square(a, "eigenvalue argument")?;
    ensure_finite(a, "eigenvalue argument")?;
    if a.nrows() == 0 {
        return Ok(Spectrum {
            eigenvalues: Vec::new(),
        });
    }
    let f = faer::Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)]);
    let mut eigenvalues = f
        .eigenvalues()
        .map_err(|e| KreissError::Numerical(format!("eigenvalue iteration failed: {e:?}")))?;
    // Real input: conjugate pairs come out of 2x2 blocks, keep them exact.
    for l in eigenvalues.iter_mut() {
        if l.im.abs() <= f64::EPSILON * l.re.abs() {
            l.im = 0.0;
        }
    }
    Ok(Spectrum { eigenvalues })
}

/// Eigenvalues of a complex square matrix from its triangular Schur form.
pub(crate) fn complex_eigenvalues(a: &ComplexMatrix) -> Result<Vec<Complex64>> {
    if a.nrows() == 0 {
        return Ok(Vec::new());
    }
    let f = faer::Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)]);
    f.eigenvalues()
        .map_err(|e| KreissError::Numerical(format!("complex eigenvalue iteration failed: {e:?}")))
}

/// Largest eigenvalue of a symmetric matrix together with a unit eigenvector.
pub fn symmetric_max_eigen(s: &RealMatrix) -> Result<(f64, DVector<f64>)> {
    ensure_square(s, "symmetric argument")?;
    ensure_finite(s, "symmetric argument")?;
    if s.nrows() == 0 {
        return Err(KreissError::Dimension("empty symmetric matrix".into()));
    }
    let eig = SymmetricEigen::new(s.clone());
    let (idx, val) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, &v)| {
            if v > acc.1 {
                (i, v)
            } else {
                acc
            }
        });
    Ok((val, eig.eigenvectors.column(idx).into_owned()))
}

pub fn singular_values(m: &ComplexMatrix) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    let mut sv: Vec<f64> = m.clone().singular_values().iter().cloned().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

pub fn min_singular_value(m: &ComplexMatrix) -> f64 {
    singular_values(m).last().cloned().unwrap_or(0.0)
}

/// Largest singular value with left/right singular vectors `u`, `v`
/// such that `m v = sigma u`.
pub fn max_singular_triplet(m: &ComplexMatrix) -> (f64, DVector<Complex64>, DVector<Complex64>) {
    let (r, c) = m.shape();
    if r == 0 || c == 0 {
        return (0.0, DVector::zeros(r), DVector::zeros(c));
    }
    if r == 1 || c == 1 {
        // Rank-one shortcut: avoids an SVD in the scalar-channel case.
        let norm = m.norm();
        if norm == 0.0 {
            let mut u = DVector::zeros(r);
            let mut v = DVector::zeros(c);
            u[0] = Complex64::new(1.0, 0.0);
            v[0] = Complex64::new(1.0, 0.0);
            return (0.0, u, v);
        }
        if r == 1 {
            let v = m.row(0).adjoint() / Complex64::new(norm, 0.0);
            let u = DVector::from_element(1, Complex64::new(1.0, 0.0));
            return (norm, u, v);
        }
        let u = m.column(0) / Complex64::new(norm, 0.0);
        let v = DVector::from_element(1, Complex64::new(1.0, 0.0));
        return (norm, u.into_owned(), v);
    }
    let svd = m.clone().svd(true, true);
    let (idx, sigma) = svd
        .singular_values
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, &s)| {
            if s > acc.1 {
                (i, s)
            } else {
                acc
            }
        });
    let u = svd.u.as_ref().unwrap().column(idx).into_owned();
    let v = svd.v_t.as_ref().unwrap().row(idx).adjoint();
    (sigma, u, v)
}

/// Right and left eigenvectors `(x, y)` of a real matrix for the eigenvalue
/// `lambda`, with `A x = lambda x` and `y^H A = lambda y^H`, computed by
/// shifted inverse iteration.
pub fn left_right_eigenvectors(
    a: &RealMatrix,
    lambda: Complex64,
) -> Result<(DVector<Complex64>, DVector<Complex64>)> {
    let n = a.nrows();
    let ac = to_complex(a);
    let shift = lambda + Complex64::new(1e-10 * (1.0 + lambda.norm()), 1e-11);
    let ident = ComplexMatrix::identity(n, n);
    let right_lu = (&ac - &ident * shift).lu();
    let left_lu = (ac.adjoint() - &ident * shift.conj()).lu();
    let start = DVector::from_fn(n, |i, _| Complex64::new(1.0 + 0.1 * i as f64, 0.3));
    let iterate = |lu: &nalgebra::LU<Complex64, nalgebra::Dyn, nalgebra::Dyn>| -> Result<DVector<Complex64>> {
        let mut x = start.clone();
        for _ in 0..3 {
            x = lu
                .solve(&x)
                .ok_or_else(|| KreissError::Numerical("inverse iteration breakdown".into()))?;
            let nrm = x.norm();
            if !nrm.is_finite() || nrm == 0.0 {
                return Err(KreissError::Numerical("inverse iteration breakdown".into()));
            }
            x /= Complex64::new(nrm, 0.0);
        }
        Ok(x)
    };
    Ok((iterate(&right_lu)?, iterate(&left_lu)?))
}
