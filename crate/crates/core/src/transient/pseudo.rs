use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{KreissError, Result};
use crate::matcore::{
    complex_eigenvalues, eigenvalues, ensure_finite, ensure_square, is_imaginary, min_singular_value,
    to_complex, ComplexMatrix, RealMatrix,
};

const MAX_ITER: usize = 100;
const STEP_TOL: f64 = 1e-8;
const REAL_TOL: f64 = 1e-6;

/// `α_ε / ε` sampled on an `ε` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct EpsProfile {
    pub epsilons: Vec<f64>,
    pub alphas: Vec<f64>,
    pub ratio_peak: f64,
}

fn sigma_min_at(a: &RealMatrix, z: Complex64) -> f64 {
    let n = a.nrows();
    let mut m = to_complex(&-a);
    for i in 0..n {
        m[(i, i)] += z;
    }
    min_singular_value(&m)
}

/// Rightmost `x` on the horizontal line `Im s = y` with `σ_min(sI - A) = ε`.
fn horizontal(a: &RealMatrix, eps: f64, y: f64) -> Result<Option<f64>> {
    let n = a.nrows();
    let ac = to_complex(a);
    let shift = Complex64::new(0.0, y);
    let mut m = ComplexMatrix::zeros(2 * n, 2 * n);
    let ident = ComplexMatrix::identity(n, n);
    m.view_mut((0, 0), (n, n)).copy_from(&(&ac - &ident * shift));
    m.view_mut((0, n), (n, n)).copy_from(&(&ident * Complex64::new(eps, 0.0)));
    m.view_mut((n, 0), (n, n)).copy_from(&(&ident * Complex64::new(eps, 0.0)));
    m.view_mut((n, n), (n, n)).copy_from(&(ac.adjoint() + &ident * shift));
    let mut xs: Vec<f64> = complex_eigenvalues(&m)?
        .into_iter()
        .filter(|l| l.im.abs() <= REAL_TOL * (1.0 + l.norm()))
        .map(|l| l.re)
        .collect();
    xs.sort_by(|p, q| q.total_cmp(p));
    for &x in &xs {
        if sigma_min_at(a, Complex64::new(x, y)) <= eps * (1.0 + 1e-4) {
            return Ok(Some(x));
        }
    }
    Ok(xs.first().cloned())
}

/// Imaginary parts `y` where the vertical line `Re s = x` meets the level set.
fn vertical(a: &RealMatrix, eps: f64, x: f64) -> Result<Vec<f64>> {
    let n = a.nrows();
    let ident = RealMatrix::identity(n, n);
    let mut h = RealMatrix::zeros(2 * n, 2 * n);
    h.view_mut((0, 0), (n, n)).copy_from(&(a - &ident * x));
    h.view_mut((0, n), (n, n)).copy_from(&(&ident * eps));
    h.view_mut((n, 0), (n, n)).copy_from(&(&ident * -eps));
    h.view_mut((n, n), (n, n)).copy_from(&(&ident * x - a.transpose()));
    let mut ys: Vec<f64> = eigenvalues(&h)?
        .eigenvalues()
        .iter()
        .filter(|l| is_imaginary(**l))
        .map(|l| l.im)
        .collect();
    ys.sort_by(f64::total_cmp);
    ys.dedup_by(|p, q| (*p - *q).abs() <= 1e-12 * (1.0 + q.abs()));
    Ok(ys)
}

/// `ε`-pseudospectral abscissa `max{Re s : σ_min(sI - A) ≤ ε}` by criss-cross
/// iteration, to absolute accuracy `1e-8`.
pub fn pseudospectral_abscissa(a: &RealMatrix, eps: f64) -> Result<f64> {
    ensure_square(a, "pseudospectral argument")?;
    ensure_finite(a, "pseudospectral argument")?;
    if !(eps.is_finite() && eps > 0.0) {
        return Err(KreissError::InvalidArgument(format!("eps must be positive, got {eps}")));
    }
    let lambda = eigenvalues(a)?
        .rightmost()
        .ok_or_else(|| KreissError::Dimension("empty matrix".into()))?;
    let mut x = horizontal(a, eps, lambda.im.abs())?
        .ok_or_else(|| KreissError::Numerical("no level-set point to the right of the rightmost eigenvalue".into()))?
        .max(lambda.re);

    for _ in 0..MAX_ITER {
        let ys = vertical(a, eps, x)?;
        let mut mids: Vec<f64> = Vec::new();
        for w in ys.windows(2) {
            let m = 0.5 * (w[0] + w[1]);
            if sigma_min_at(a, Complex64::new(x, m)) <= eps {
                mids.push(m);
            }
        }
        if mids.is_empty() {
            return Ok(x);
        }
        let mut next = x;
        for y in mids {
            if let Some(h) = horizontal(a, eps, y)? {
                next = next.max(h);
            }
        }
        if next - x <= STEP_TOL {
            return Ok(next);
        }
        x = next;
    }
    Err(KreissError::Numerical(format!(
        "criss-cross iteration did not settle within {MAX_ITER} steps"
    )))
}

/// `sup_ε α_ε(A)/ε` over a positive ascending grid.
pub fn kreiss_via_eps(a: &RealMatrix, epsilons: &[f64]) -> Result<EpsProfile> {
    if epsilons.is_empty()
        || epsilons.iter().any(|e| !(e.is_finite() && *e > 0.0))
        || epsilons.windows(2).any(|w| w[0] >= w[1])
    {
        return Err(KreissError::InvalidArgument(
            "epsilon grid must be positive and strictly increasing".into(),
        ));
    }
    let alpha = eigenvalues(a)?.abscissa();
    if alpha >= 0.0 {
        return Err(KreissError::NotHurwitz(alpha));
    }
    let alphas: Vec<f64> = epsilons
        .par_iter()
        .map(|&e| pseudospectral_abscissa(a, e))
        .collect::<Result<Vec<_>>>()?;
    let ratio_peak = alphas
        .iter()
        .zip(epsilons)
        .map(|(al, e)| al / e)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(EpsProfile {
        epsilons: epsilons.to_vec(),
        alphas,
        ratio_peak,
    })
}

/// `n` log-spaced points between `lo` and `hi`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|k| (a + (b - a) * k as f64 / (n.max(2) - 1) as f64).exp())
        .collect()
}
