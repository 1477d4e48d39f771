//! Dormand–Prince 5(4) with local error control.

use nalgebra::DVector;

use crate::error::{KreissError, Result};

const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
/// Fifth-order minus embedded fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

const MAX_STATE_NORM: f64 = 1e8;
const MAX_STEPS: usize = 5_000_000;

/// Accepted steps `(t, y)` of the solution of `y' = f(y)` on `[0, t_end]`.
///
/// Each component is held to `tol · (1e-6 + |y|)` of local error.
pub fn integrate<F>(f: F, y0: &DVector<f64>, t_end: f64, tol: f64) -> Result<(Vec<f64>, Vec<DVector<f64>>)>
where
    F: Fn(&DVector<f64>) -> DVector<f64>,
{
    let atol = tol * 1e-6;
    let mut t = 0.0;
    let mut y = y0.clone();
    let mut times = vec![0.0];
    let mut states = vec![y.clone()];
    let mut h = (t_end / 100.0).min(1e-2);
    let mut k1 = f(&y);
    let mut steps = 0;
    while t < t_end {
        steps += 1;
        if steps > MAX_STEPS {
            return Err(KreissError::Divergence {
                t,
                reason: "step budget exhausted".into(),
            });
        }
        if t + h > t_end {
            h = t_end - t;
        }
        let mut k = vec![k1.clone()];
        for s in 1..7 {
            let mut ys = y.clone();
            for (j, kj) in k.iter().enumerate() {
                if A[s][j] != 0.0 {
                    ys.axpy(h * A[s][j], kj, 1.0);
                }
            }
            k.push(f(&ys));
        }
        // Row 6 of A holds the fifth-order weights (FSAL).
        let mut y_new = y.clone();
        for (j, kj) in k.iter().take(6).enumerate() {
            y_new.axpy(h * A[6][j], kj, 1.0);
        }
        let mut err = 0.0;
        for i in 0..y.len() {
            let e: f64 = (0..7).map(|j| E[j] * k[j][i]).sum::<f64>() * h;
            let sc = atol + tol * y[i].abs().max(y_new[i].abs());
            err += (e / sc).powi(2);
        }
        let err = (err / y.len().max(1) as f64).sqrt();
        if !err.is_finite() {
            h *= 0.1;
        } else if err <= 1.0 {
            t += h;
            y = y_new;
            k1 = k.swap_remove(6);
            if !y.iter().all(|v| v.is_finite()) || y.norm() > MAX_STATE_NORM {
                return Err(KreissError::Divergence {
                    t,
                    reason: format!("state norm {:e} exceeds {MAX_STATE_NORM:e}", y.norm()),
                });
            }
            times.push(t);
            states.push(y.clone());
            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            h *= factor;
        } else {
            h *= (0.9 * err.powf(-0.2)).clamp(0.1, 1.0);
        }
        if h < 1e-13 * t.abs().max(1.0) {
            return Err(KreissError::Divergence {
                t,
                reason: format!("step size underflow (h = {h:e})"),
            });
        }
    }
    Ok((times, states))
}
