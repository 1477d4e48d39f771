use num_complex::Complex64;

use super::{ensure_finite, ensure_square, to_complex, ComplexMatrix, RealMatrix};
use crate::error::{KreissError, Result};

/// Solves `Aᵀ X + X A + Q = 0` for symmetric `Q` and Hurwitz `A`.
///
/// Bartels–Stewart on the complex Schur form `A = U T Uᴴ`: the transformed
/// equation `Tᴴ Y + Y T = -Uᴴ Q U` is solved column by column with lower
/// triangular forward substitutions, then `X = Re(U Y Uᴴ)`.
pub fn solve_lyapunov(a: &RealMatrix, q: &RealMatrix) -> Result<RealMatrix> {
    ensure_square(a, "Lyapunov A")?;
    ensure_finite(a, "Lyapunov A")?;
    ensure_finite(q, "Lyapunov Q")?;
    let n = a.nrows();
    if q.shape() != (n, n) {
        return Err(KreissError::Dimension(format!(
            "Lyapunov Q must be {n}x{n}, got {}x{}",
            q.nrows(),
            q.ncols()
        )));
    }
    if n == 0 {
        return Ok(RealMatrix::zeros(0, 0));
    }
    let Some(schur) = super::eig::schur(&to_complex(a)) else {
        return kronecker_lyapunov(a, q);
    };
    let (u, t) = schur.unpack();
    let alpha = (0..n).map(|i| t[(i, i)].re).fold(f64::NEG_INFINITY, f64::max);
    if alpha >= 0.0 {
        return Err(KreissError::NotHurwitz(alpha));
    }

    let f = -(u.adjoint() * to_complex(q) * &u);
    let th = t.adjoint();
    let mut y = ComplexMatrix::zeros(n, n);
    for j in 0..n {
        // rhs = F[:, j] - sum_{k<j} Y[:, k] T[k, j]
        let mut rhs = f.column(j).into_owned();
        for k in 0..j {
            let tkj = t[(k, j)];
            if tkj != Complex64::new(0.0, 0.0) {
                rhs -= y.column(k) * tkj;
            }
        }
        // (Tᴴ + T[j,j] I) is lower triangular.
        let tjj = t[(j, j)];
        for i in 0..n {
            let mut acc = rhs[i];
            for k in 0..i {
                acc -= th[(i, k)] * y[(k, j)];
            }
            y[(i, j)] = acc / (th[(i, i)] + tjj);
        }
    }
    let x = &u * y * u.adjoint();
    let mut xr = x.map(|v| v.re);
    symmetrize(&mut xr);
    Ok(xr)
}

/// Dense `n² × n²` solve, used when the Schur iteration stalls.
fn kronecker_lyapunov(a: &RealMatrix, q: &RealMatrix) -> Result<RealMatrix> {
    let alpha = super::eigenvalues(a)?.abscissa();
    if alpha >= 0.0 {
        return Err(KreissError::NotHurwitz(alpha));
    }
    let n = a.nrows();
    let at = a.transpose();
    let ident = RealMatrix::identity(n, n);
    let op = ident.kronecker(&at) + at.kronecker(&ident);
    let rhs = nalgebra::DVector::from_column_slice(q.as_slice()) * -1.0;
    let x = op
        .lu()
        .solve(&rhs)
        .ok_or_else(|| KreissError::Numerical("singular Lyapunov operator".into()))?;
    let mut xr = RealMatrix::from_column_slice(n, n, x.as_slice());
    symmetrize(&mut xr);
    Ok(xr)
}

fn symmetrize(m: &mut RealMatrix) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn residual(a: &RealMatrix, q: &RealMatrix, x: &RealMatrix) -> f64 {
        (a.transpose() * x + x * a + q).norm()
    }

    /// Kronecker-product oracle: (I ⊗ Aᵀ + Aᵀ ⊗ I) vec(X) = -vec(Q).
    fn kron_oracle(a: &RealMatrix, q: &RealMatrix) -> RealMatrix {
        let n = a.nrows();
        let at = a.transpose();
        let ident = RealMatrix::identity(n, n);
        let big = ident.kronecker(&at) + at.kronecker(&ident);
        let rhs = nalgebra::DVector::from_iterator(n * n, q.iter().map(|v| -v));
        let sol = big.lu().solve(&rhs).unwrap();
        RealMatrix::from_column_slice(n, n, sol.as_slice())
    }

    #[test]
    fn kronecker_fallback_agrees() {
        let a = dmatrix![-1.0, 4.0, 0.0; 0.0, -2.0, 1.0; 0.5, 0.0, -3.0];
        let q = dmatrix![2.0, 1.0, 0.0; 1.0, 3.0, 0.5; 0.0, 0.5, 1.0];
        let x = solve_lyapunov(&a, &q).unwrap();
        let y = kronecker_lyapunov(&a, &q).unwrap();
        assert!((x - y).norm() < 1e-12);
    }

    #[test]
    fn scalar_case() {
        let x = solve_lyapunov(&dmatrix![-1.0], &dmatrix![2.0]).unwrap();
        assert!((x[(0, 0)] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn decoupled_diagonal() {
        let a = dmatrix![-1.0, 0.0; 0.0, -2.0];
        let x = solve_lyapunov(&a, &RealMatrix::identity(2, 2)).unwrap();
        assert!((x - dmatrix![0.5, 0.0; 0.0, 0.25]).norm() < 1e-14);
    }

    #[test]
    fn random_stable_matches_kronecker_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let n = 4;
            let mut a = RealMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
            let shift = crate::matcore::eigenvalues(&a).unwrap().abscissa() + 0.5;
            for i in 0..n {
                a[(i, i)] -= shift.max(0.0);
            }
            let g = RealMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
            let q = &g * g.transpose();
            let x = solve_lyapunov(&a, &q).unwrap();
            assert!(residual(&a, &q, &x) <= 1e-10 * q.norm());
            assert!((&x - kron_oracle(&a, &q)).norm() <= 1e-9 * x.norm());
            assert_eq!(x, x.transpose());
        }
    }

    #[test]
    fn errors() {
        assert!(matches!(
            solve_lyapunov(&dmatrix![1.0], &dmatrix![1.0]),
            Err(KreissError::NotHurwitz(_))
        ));
        assert!(matches!(
            solve_lyapunov(&dmatrix![-1.0], &RealMatrix::identity(2, 2)),
            Err(KreissError::Dimension(_))
        ));
    }
}
