use nalgebra::DMatrix;
use num_complex::Complex64;

use super::eig::{eigenvalues, max_singular_triplet};
use super::{to_complex, ComplexMatrix, RealMatrix};
use crate::error::{KreissError, Result};
use crate::sysmodel::StateSpace;

/// Relative tolerance for classifying a Hamiltonian eigenvalue as imaginary.
pub const IMAGINARY_TOL: f64 = 1e-8;

pub fn is_imaginary(lambda: Complex64) -> bool {
    lambda.re.abs() <= IMAGINARY_TOL * (1.0 + lambda.norm())
}

/// `C (jωI - A)^{-1} B + D`.
pub fn frequency_response(sys: &StateSpace, omega: f64) -> Result<ComplexMatrix> {
    let n = sys.nstates();
    let mut m = to_complex(&-sys.a());
    for i in 0..n {
        m[(i, i)] += Complex64::new(0.0, omega);
    }
    let x = m
        .lu()
        .solve(&to_complex(sys.b()))
        .ok_or_else(|| KreissError::Numerical(format!("resolvent singular at ω = {omega:e}")))?;
    Ok(to_complex(sys.c()) * x + to_complex(sys.d()))
}

/// Largest singular value of the frequency response at `omega`.
pub fn max_gain(sys: &StateSpace, omega: f64) -> Result<f64> {
    Ok(max_singular_triplet(&frequency_response(sys, omega)?).0)
}

/// Frequencies `ω ≥ 0` at which the largest singular value of `G(jω)`
/// equals `gamma`, read off the imaginary eigenvalues of the associated Hamiltonian.
///
/// An empty list means the gain never equals `gamma` on the axis, so the H∞
/// norm lies strictly below `gamma` whenever some sampled gain does.
pub fn imaginary_axis_crossings(sys: &StateSpace, gamma: f64) -> Result<Vec<f64>> {
    let omegas = raw_crossings(sys, gamma)?;
    // Drop crossings of a lower singular value: there the largest one is
    // strictly above gamma.
    let mut kept = Vec::with_capacity(omegas.len());
    for w in omegas {
        if max_gain(sys, w)? <= gamma * (1.0 + 1e-6) {
            kept.push(w);
        }
    }
    Ok(kept)
}

/// Frequencies `ω ≥ 0` at which any singular value of `G(jω)` equals `gamma`.
pub(crate) fn raw_crossings(sys: &StateSpace, gamma: f64) -> Result<Vec<f64>> {
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(KreissError::InvalidArgument(format!(
            "gamma must be positive and finite, got {gamma}"
        )));
    }
    let spec = eigenvalues(sys.a())?;
    if spec.abscissa() >= 0.0 {
        return Err(KreissError::NotHurwitz(spec.abscissa()));
    }
    raw_crossings_unchecked(sys, gamma)
}

/// As [`raw_crossings`] without the stability and argument checks.
pub(crate) fn raw_crossings_unchecked(sys: &StateSpace, gamma: f64) -> Result<Vec<f64>> {
    let feedthrough = max_singular_triplet(&to_complex(sys.d())).0;
    if gamma <= feedthrough {
        return Err(KreissError::GammaTooSmall { gamma, feedthrough });
    }
    let h = hamiltonian(sys, gamma)?;
    let eig = eigenvalues(&h)?;
    let mut omegas: Vec<f64> = eig
        .eigenvalues()
        .iter()
        .filter(|l| l.im >= 0.0 && is_imaginary(**l))
        .map(|l| l.im)
        .collect();
    omegas.sort_by(f64::total_cmp);
    omegas.dedup_by(|a, b| (*a - *b).abs() <= 1e-10 * (1.0 + b.abs()));
    Ok(omegas)
}

fn hamiltonian(sys: &StateSpace, gamma: f64) -> Result<RealMatrix> {
    let (a, b, c, d) = (sys.a(), sys.b(), sys.c(), sys.d());
    let n = a.nrows();
    let (p, m) = d.shape();
    let g2 = gamma * gamma;
    let r = d.transpose() * d - RealMatrix::identity(m, m) * g2;
    let s = d * d.transpose() - RealMatrix::identity(p, p) * g2;
    let r_inv = r
        .try_inverse()
        .ok_or_else(|| KreissError::Numerical("singular Hamiltonian weight R".into()))?;
    let s_inv = s
        .try_inverse()
        .ok_or_else(|| KreissError::Numerical("singular Hamiltonian weight S".into()))?;
    let br = b * &r_inv;
    let h11 = a - &br * d.transpose() * c;
    let h12 = -(&br * b.transpose()) * gamma;
    let h21 = c.transpose() * s_inv * c * gamma;
    let h22 = -a.transpose() + c.transpose() * d * &r_inv * b.transpose();
    let mut h = DMatrix::zeros(2 * n, 2 * n);
    h.view_mut((0, 0), (n, n)).copy_from(&h11);
    h.view_mut((0, n), (n, n)).copy_from(&h12);
    h.view_mut((n, 0), (n, n)).copy_from(&h21);
    h.view_mut((n, n), (n, n)).copy_from(&h22);
    Ok(h)
}
