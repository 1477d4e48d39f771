//! Objective and constraint values with gradients with respect to `A_cl`.

use nalgebra::SymmetricEigen;
use num_complex::Complex64;

use crate::error::Result;
use crate::matcore::{
    eigenvalues, left_right_eigenvectors, max_singular_triplet, solve_lyapunov,
    to_complex, ComplexMatrix, RealMatrix, Spectrum,
};
use crate::sysmodel::{ProjectionJ, StateSpace};
use crate::transient::{hinf_norm_with_poles, worst_case_energy, ACTIVE_TOL};

/// Keeps bundles small when sums of max-functions multiply pieces.
const MAX_PIECES: usize = 24;

/// A max-type value with the gradients of its active smooth pieces; the
/// first gradient belongs to the dominant piece.
#[derive(Debug, Clone)]
pub struct Piecewise {
    pub value: f64,
    pub grads: Vec<RealMatrix>,
}

impl Piecewise {
    pub fn smooth(value: f64, grad: RealMatrix) -> Self {
        Self { value, grads: vec![grad] }
    }

    /// Pointwise maximum; pieces within `ACTIVE_TOL` of the max stay active.
    pub fn max(parts: Vec<Piecewise>) -> Piecewise {
        let top = parts.iter().map(|p| p.value).fold(f64::NEG_INFINITY, f64::max);
        let band = ACTIVE_TOL * top.abs().max(1e-12);
        let mut ordered: Vec<&Piecewise> = parts.iter().collect();
        ordered.sort_by(|a, b| b.value.total_cmp(&a.value));
        let mut grads = Vec::new();
        for p in ordered {
            if p.value >= top - band {
                grads.extend(p.grads.iter().cloned());
            }
        }
        grads.truncate(MAX_PIECES);
        Piecewise { value: top, grads }
    }

    /// `max(0, self)`, with both branches active near zero.
    pub fn positive_part(self, band: f64) -> Piecewise {
        let zero = RealMatrix::zeros(self.grads[0].nrows(), self.grads[0].ncols());
        if self.value > band {
            self
        } else if self.value < -band {
            Piecewise::smooth(0.0, zero)
        } else {
            let mut grads = self.grads;
            grads.push(zero);
            Piecewise { value: self.value.max(0.0), grads }
        }
    }

    /// `self + w · other`.
    pub fn plus(self, other: &Piecewise, w: f64) -> Piecewise {
        let mut grads = Vec::new();
        for g in &self.grads {
            for h in &other.grads {
                grads.push(g + h * w);
            }
        }
        grads.truncate(MAX_PIECES);
        Piecewise {
            value: self.value + w * other.value,
            grads,
        }
    }
}

/// Gradient of `Re λ` for a simple eigenvalue with right/left vectors `x`, `y`.
fn eigen_gradient(x: &nalgebra::DVector<Complex64>, y: &nalgebra::DVector<Complex64>, scale: Complex64) -> RealMatrix {
    let c = y.dotc(x); // yᴴ x
    let outer = y.map(|v| v.conj()) * x.transpose();
    (outer * (scale / c)).map(|v| v.re)
}

/// Eigenvalues with `Im ≥ 0` whose `key` lies within the active band of the max.
fn active_eigenvalues(spec: &Spectrum, key: impl Fn(Complex64) -> f64) -> Vec<Complex64> {
    let top = spec.eigenvalues().iter().map(|l| key(*l)).fold(f64::NEG_INFINITY, f64::max);
    let band = ACTIVE_TOL * (1.0 + top.abs());
    let mut act: Vec<Complex64> = spec
        .eigenvalues()
        .iter()
        .filter(|l| l.im >= 0.0 && key(**l) >= top - band)
        .cloned()
        .collect();
    act.sort_by(|a, b| key(*b).total_cmp(&key(*a)));
    act.truncate(4);
    act
}

/// Spectral abscissa `α(A)` as a max of eigenvalue real parts.
pub fn abscissa(a: &RealMatrix, spec: &Spectrum) -> Piecewise {
    let mut grads = Vec::new();
    for l in active_eigenvalues(spec, |l| l.re) {
        if let Ok((x, y)) = left_right_eigenvectors(a, l) {
            grads.push(eigen_gradient(&x, &y, Complex64::new(1.0, 0.0)));
        }
    }
    if grads.is_empty() {
        grads.push(RealMatrix::zeros(a.nrows(), a.ncols()));
    }
    Piecewise { value: spec.abscissa(), grads }
}

/// Spectral radius `ρ(A)` as a max of eigenvalue moduli.
pub fn radius(a: &RealMatrix, spec: &Spectrum) -> Piecewise {
    let mut grads = Vec::new();
    for l in active_eigenvalues(spec, |l| l.norm()) {
        if l.norm() == 0.0 {
            continue;
        }
        if let Ok((x, y)) = left_right_eigenvectors(a, l) {
            grads.push(eigen_gradient(&x, &y, l.conj() / l.norm()));
        }
    }
    if grads.is_empty() {
        grads.push(RealMatrix::zeros(a.nrows(), a.ncols()));
    }
    Piecewise { value: spec.radius(), grads }
}

/// Matrix sign function by scaled Newton iteration; `None` when an
/// eigenvalue sits on the imaginary axis.
fn matrix_sign(m: &RealMatrix) -> Option<RealMatrix> {
    let n = m.nrows();
    let mut x = m.clone();
    for _ in 0..100 {
        let inv = x.clone().try_inverse()?;
        let det = x.determinant().abs();
        let mu = if det.is_finite() && det > 0.0 { det.powf(-1.0 / n as f64) } else { 1.0 };
        let next = (&x * mu + inv / mu) * 0.5;
        let change = (&next - &x).norm();
        x = next;
        if !x.iter().all(|v| v.is_finite()) {
            return None;
        }
        if change <= 1e-13 * x.norm() {
            return Some(x);
        }
    }
    None
}

/// `Σ (Re λᵢ - c)` over the eigenvalues right of `Re s = c`.
///
/// The sum over a group of eigenvalues is smooth even where they collide,
/// unlike `α`; its gradient is the transposed spectral projector.
pub fn right_excess(a: &RealMatrix, c: f64) -> Option<Piecewise> {
    let n = a.nrows();
    let shifted = a - RealMatrix::identity(n, n) * c;
    let sign = matrix_sign(&shifted)?;
    let p = (sign + RealMatrix::identity(n, n)) * 0.5;
    let value = (&p * &shifted).trace().max(0.0);
    Some(Piecewise::smooth(value, p.transpose()))
}

/// H∞ norm of `Jᵀ(sI - (a A - I))^{-1} J` with `a = (1-δ)/(1+δ)`.
pub fn kreiss_scenario(acl: &RealMatrix, j: ProjectionJ, delta: f64, tol: f64) -> Result<Piecewise> {
    let nt = acl.nrows();
    if delta <= -1.0 {
        return Ok(Piecewise::smooth(0.0, RealMatrix::zeros(nt, nt)));
    }
    let scale = (1.0 - delta) / (1.0 + delta);
    let m = acl * scale - RealMatrix::identity(nt, nt);
    let jm = j.matrix();
    let sys = StateSpace::new(m.clone(), jm.clone(), jm.transpose(), RealMatrix::zeros(j.plant_states(), j.plant_states()))?;
    let spec = eigenvalues(&m)?;
    if spec.abscissa() >= 0.0 {
        return Err(crate::error::KreissError::NotHurwitz(spec.abscissa()));
    }
    let h = hinf_norm_with_poles(&sys, tol, spec.eigenvalues())?;
    let mc = to_complex(&m);
    let jc = to_complex(&jm);
    let mut ranked: Vec<(f64, RealMatrix)> = Vec::new();
    for &w in &h.active {
        let mut shifted = -mc.clone();
        for i in 0..nt {
            shifted[(i, i)] += Complex64::new(0.0, w);
        }
        let Some(r) = shifted.try_inverse() else { continue };
        let t: ComplexMatrix = jc.transpose() * &r * &jc;
        let (sigma, u, v) = max_singular_triplet(&t);
        let x = &r * &jc * v * u.adjoint() * jc.transpose() * &r;
        ranked.push((sigma, x.transpose().map(|z| z.re * scale)));
    }
    ranked.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut grads: Vec<RealMatrix> = ranked.into_iter().map(|p| p.1).take(6).collect();
    if grads.is_empty() {
        grads.push(RealMatrix::zeros(nt, nt));
    }
    Ok(Piecewise { value: h.value, grads })
}

/// `ω(Jᵀ A J)`.
pub fn numerical_abscissa(acl: &RealMatrix, j: ProjectionJ) -> Piecewise {
    let n = j.plant_states();
    let nt = acl.nrows();
    let a11 = acl.view((0, 0), (n, n));
    let s = (a11 + a11.transpose()) * 0.5;
    let eig = SymmetricEigen::new(s);
    let top = eig.eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let band = ACTIVE_TOL * (1.0 + top.abs());
    let mut idx: Vec<usize> = (0..n).filter(|&i| eig.eigenvalues[i] >= top - band).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let grads = idx
        .into_iter()
        .map(|i| {
            let q = eig.eigenvectors.column(i);
            let mut g = RealMatrix::zeros(nt, nt);
            g.view_mut((0, 0), (n, n)).copy_from(&(q * q.transpose()));
            g
        })
        .collect();
    Piecewise { value: top, grads }
}

/// `‖Jᵀ(sI - A_cl)^{-1} J - (sI - A_r)^{-1}‖₂`.
pub fn h2_match(acl: &RealMatrix, j: ProjectionJ, a_r: &RealMatrix) -> Result<Piecewise> {
    let nt = acl.nrows();
    let n = j.plant_states();
    let ne = nt + n;
    let jm = j.matrix();
    let mut ae = RealMatrix::zeros(ne, ne);
    ae.view_mut((0, 0), (nt, nt)).copy_from(acl);
    ae.view_mut((nt, nt), (n, n)).copy_from(a_r);
    let mut be = RealMatrix::zeros(ne, n);
    be.view_mut((0, 0), (nt, n)).copy_from(&jm);
    be.view_mut((nt, 0), (n, n)).copy_from(&RealMatrix::identity(n, n));
    let mut ce = RealMatrix::zeros(n, ne);
    ce.view_mut((0, 0), (n, nt)).copy_from(&jm.transpose());
    ce.view_mut((0, nt), (n, n)).copy_from(&-RealMatrix::identity(n, n));

    let p = solve_lyapunov(&ae.transpose(), &(&be * be.transpose()))?;
    let y = solve_lyapunov(&ae, &(ce.transpose() * &ce))?;
    let f = (&ce * &p * ce.transpose()).trace().max(0.0);
    let value = f.sqrt();
    let grad = if value > 0.0 {
        (&y * &p).view((0, 0), (nt, nt)).into_owned() / value
    } else {
        RealMatrix::zeros(nt, nt)
    };
    Ok(Piecewise::smooth(value, grad))
}

/// Worst-case energy over the unit box of plant initial conditions.
pub fn wc_energy(acl: &RealMatrix, j: ProjectionJ) -> Result<Piecewise> {
    let nt = acl.nrows();
    let n = j.plant_states();
    let r = worst_case_energy(acl, j)?;
    let jm = j.matrix();
    let w = r.gramian.view((0, 0), (n, n)).into_owned();
    // Enumerate vertices near the max to form the bundle.
    let top = r.value * r.value;
    let band = ACTIVE_TOL * top.max(1e-300);
    let mut active: Vec<(f64, nalgebra::DVector<f64>)> = Vec::new();
    let count: u64 = if n == 0 { 0 } else { 1 << (n - 1) };
    for mask in 0..count {
        let v = nalgebra::DVector::from_fn(n, |i, _| if i > 0 && (mask >> (i - 1)) & 1 == 1 { -1.0 } else { 1.0 });
        let q = v.dot(&(&w * &v));
        if q >= top - band {
            active.push((q, v));
        }
    }
    active.sort_by(|a, b| b.0.total_cmp(&a.0));
    active.truncate(6);
    let mut grads = Vec::new();
    for (q, v) in active {
        let x0 = &jm * v;
        let pv = solve_lyapunov(&acl.transpose(), &(&x0 * x0.transpose()))?;
        let s = q.max(0.0).sqrt();
        if s > 0.0 {
            grads.push(&r.gramian * pv / s);
        }
    }
    if grads.is_empty() {
        grads.push(RealMatrix::zeros(nt, nt));
    }
    Ok(Piecewise { value: r.value, grads })
}

/// Largest singular value of `Jᵀ(jωI - M)^{-1}J`, used by tests.
#[cfg(test)]
pub(crate) fn scenario_gain(acl: &RealMatrix, j: ProjectionJ, delta: f64, omega: f64) -> f64 {
    let nt = acl.nrows();
    let scale = (1.0 - delta) / (1.0 + delta);
    let m = acl * scale - RealMatrix::identity(nt, nt);
    let jm = j.matrix();
    let sys = StateSpace::new(m, jm.clone(), jm.transpose(), RealMatrix::zeros(j.plant_states(), j.plant_states())).unwrap();
    max_singular_triplet(&crate::matcore::frequency_response(&sys, omega).unwrap()).0
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn stable(rng: &mut ChaCha8Rng, n: usize) -> RealMatrix {
        let mut a = RealMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let alpha = eigenvalues(&a).unwrap().abscissa();
        for i in 0..n {
            a[(i, i)] -= alpha + 0.3;
        }
        a
    }

    /// Central-difference directional derivative check of a smooth piece.
    fn check_gradient(f: impl Fn(&RealMatrix) -> f64, g: &RealMatrix, a: &RealMatrix, dir: &RealMatrix, rel: f64) {
        let h = 1e-6;
        let fd = (f(&(a + dir * h)) - f(&(a - dir * h))) / (2.0 * h);
        let an = g.dot(dir);
        assert!((fd - an).abs() <= rel * (1.0 + an.abs()), "fd {fd} vs analytic {an}");
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let j = ProjectionJ::new(3, 1);
        for _ in 0..5 {
            let a = stable(&mut rng, 4);
            let dir = RealMatrix::from_fn(4, 4, |_, _| rng.random_range(-1.0..1.0));

            let spec = eigenvalues(&a).unwrap();
            let p = abscissa(&a, &spec);
            if p.grads.len() == 1 {
                check_gradient(|m| eigenvalues(m).unwrap().abscissa(), &p.grads[0], &a, &dir, 1e-5);
            }
            let p = radius(&a, &spec);
            if p.grads.len() == 1 {
                check_gradient(|m| eigenvalues(m).unwrap().radius(), &p.grads[0], &a, &dir, 1e-5);
            }
            let p = numerical_abscissa(&a, j);
            check_gradient(|m| numerical_abscissa(m, j).value, &p.grads[0], &a, &dir, 1e-5);

            let ar = -RealMatrix::identity(3, 3);
            let p = h2_match(&a, j, &ar).unwrap();
            check_gradient(|m| h2_match(m, j, &ar).unwrap().value, &p.grads[0], &a, &dir, 1e-5);

            let p = wc_energy(&a, j).unwrap();
            if p.grads.len() == 1 {
                check_gradient(|m| wc_energy(m, j).unwrap().value, &p.grads[0], &a, &dir, 1e-5);
            }

            // H∞ piece: derivative of the gain at the frozen peak frequency.
            let delta = 0.2;
            let p = kreiss_scenario(&a, j, delta, 1e-10).unwrap();
            let h = hinf_norm_with_poles(
                &StateSpace::new(
                    &a * (0.8 / 1.2) - RealMatrix::identity(4, 4),
                    j.matrix(),
                    j.matrix().transpose(),
                    RealMatrix::zeros(3, 3),
                )
                .unwrap(),
                1e-10,
                eigenvalues(&(&a * (0.8 / 1.2) - RealMatrix::identity(4, 4))).unwrap().eigenvalues(),
            )
            .unwrap();
            if h.frequency.is_finite() {
                check_gradient(|m| scenario_gain(m, j, delta, h.frequency), &p.grads[0], &a, &dir, 1e-4);
            }
        }
    }

    #[test]
    fn right_excess_sums_right_eigenvalues() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let a = RealMatrix::from_fn(5, 5, |_, _| rng.random_range(-1.0..1.0));
            let c = -0.1;
            let expected: f64 = eigenvalues(&a)
                .unwrap()
                .eigenvalues()
                .iter()
                .filter(|l| l.re > c)
                .map(|l| l.re - c)
                .sum();
            let p = right_excess(&a, c).unwrap();
            assert!((p.value - expected).abs() < 1e-10, "{} vs {expected}", p.value);
            let dir = RealMatrix::from_fn(5, 5, |_, _| rng.random_range(-1.0..1.0));
            check_gradient(|m| right_excess(m, c).unwrap().value, &p.grads[0], &a, &dir, 1e-5);
        }
        // A Jordan block: α is not Lipschitz here but the excess is smooth.
        let a = RealMatrix::from_row_slice(2, 2, &[0.5, 1.0, 0.0, 0.5]);
        let p = right_excess(&a, 0.0).unwrap();
        assert!((p.value - 1.0).abs() < 1e-12);
        let dir = RealMatrix::from_row_slice(2, 2, &[0.3, -0.2, 0.7, 0.1]);
        check_gradient(|m| right_excess(m, 0.0).unwrap().value, &p.grads[0], &a, &dir, 1e-6);
        assert!(right_excess(&(-RealMatrix::identity(3, 3)), 0.0).unwrap().value < 1e-14);
    }

    #[test]
    fn piecewise_algebra() {
        let z = RealMatrix::zeros(1, 1);
        let one = RealMatrix::from_element(1, 1, 1.0);
        let m = Piecewise::max(vec![
            Piecewise::smooth(2.0, one.clone()),
            Piecewise::smooth(2.0 - 1e-6, z.clone()),
            Piecewise::smooth(1.0, z.clone()),
        ]);
        assert_eq!(m.value, 2.0);
        assert_eq!(m.grads.len(), 2);
        let p = Piecewise::smooth(-1.0, one.clone()).positive_part(1e-9);
        assert_eq!(p.value, 0.0);
        let s = m.plus(&Piecewise::smooth(1.0, one), 10.0);
        assert_eq!(s.value, 12.0);
        assert_eq!(s.grads[0][(0, 0)], 11.0);
    }
}
