use rayon::prelude::*;

use crate::error::{KreissError, Result};
use crate::matcore::{eigenvalues, expm, norm2, RealMatrix};
use crate::sysmodel::ProjectionJ;

use super::search::golden_max;

const LOG_SAMPLES: usize = 600;
const LINEAR_SAMPLES: usize = 600;
const REFINED_PEAKS: usize = 4;
const MAX_DOUBLINGS: usize = 40;

/// Sampled `‖Jᵀ e^{At} J‖` on `[0, T]` with its refined peak.
#[derive(Debug, Clone, PartialEq)]
pub struct TransientProfile {
    pub times: Vec<f64>,
    pub gains: Vec<f64>,
    pub peak: f64,
    pub peak_time: f64,
    pub horizon: f64,
}

struct Sample {
    t: f64,
    restricted: f64,
    full: f64,
}

fn sample_grid(horizon: f64) -> Vec<f64> {
    let mut t: Vec<f64> = Vec::with_capacity(LOG_SAMPLES + LINEAR_SAMPLES + 1);
    t.push(0.0);
    let lo = (horizon * 1e-10).ln();
    let hi = horizon.ln();
    for k in 0..LOG_SAMPLES {
        t.push((lo + (hi - lo) * k as f64 / (LOG_SAMPLES - 1) as f64).exp());
    }
    for k in 1..=LINEAR_SAMPLES {
        t.push(horizon * k as f64 / LINEAR_SAMPLES as f64);
    }
    t.sort_by(f64::total_cmp);
    t.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * b.abs().max(1e-300));
    t
}

fn restricted_norm(e: &RealMatrix, j: ProjectionJ) -> f64 {
    let n = j.plant_states();
    norm2(&e.view((0, 0), (n, n)).into_owned())
}

/// `sup_{t ≥ 0} ‖Jᵀ e^{At} J‖` for Hurwitz `A`.
///
/// The horizon starts at `max(10/|α|, 5 t_peak)` and is doubled until the
/// semigroup bound `‖e^{At}‖ ≤ ‖e^{AT}‖ · max_{[0,T]} ‖e^{As}‖` for `t ≥ T`
/// falls below the observed peak, so no larger value can occur past `T`.
/// Grid local maxima are refined by golden-section search to relative width
/// `tol`.
pub fn transient_growth(a: &RealMatrix, j: ProjectionJ, tol: f64) -> Result<TransientProfile> {
    if a.nrows() != j.total() || !a.is_square() {
        return Err(KreissError::Dimension(format!(
            "A is {}x{} but J expects {} states",
            a.nrows(),
            a.ncols(),
            j.total()
        )));
    }
    if !(tol.is_finite() && tol > 0.0) {
        return Err(KreissError::InvalidArgument(format!("tol must be positive, got {tol}")));
    }
    let alpha = eigenvalues(a)?.abscissa();
    if alpha >= 0.0 {
        return Err(KreissError::NotHurwitz(alpha));
    }
    let eval = |t: f64| -> Result<Sample> {
        let e = expm(a, t)?;
        Ok(Sample {
            t,
            restricted: restricted_norm(&e, j),
            full: norm2(&e),
        })
    };

    let mut horizon = 10.0 / alpha.abs();
    let mut samples: Vec<Sample>;
    let mut doublings = 0;
    loop {
        samples = sample_grid(horizon)
            .into_par_iter()
            .map(eval)
            .collect::<Result<Vec<_>>>()?;
        let (peak_t, peak) = samples
            .iter()
            .fold((0.0, f64::NEG_INFINITY), |acc, s| if s.restricted > acc.1 { (s.t, s.restricted) } else { acc });
        let full_max = samples.iter().map(|s| s.full).fold(0.0, f64::max);
        let tail = samples.last().unwrap().full;
        let certified = 5.0 * peak_t <= horizon && tail < 1.0 && tail * full_max <= peak;
        if certified {
            break;
        }
        doublings += 1;
        if doublings > MAX_DOUBLINGS {
            return Err(KreissError::NoConvergence(
                "transient horizon could not be certified".into(),
            ));
        }
        horizon = (2.0 * horizon).max(5.0 * peak_t);
    }

    let times: Vec<f64> = samples.iter().map(|s| s.t).collect();
    let gains: Vec<f64> = samples.iter().map(|s| s.restricted).collect();
    let n = times.len();
    let mut peaks: Vec<usize> = (0..n)
        .filter(|&i| (i == 0 || gains[i] > gains[i - 1]) && (i + 1 == n || gains[i] >= gains[i + 1]))
        .collect();
    peaks.sort_by(|&x, &y| gains[y].total_cmp(&gains[x]));
    peaks.truncate(REFINED_PEAKS);

    let f = |t: f64| -> Result<(f64, ())> { Ok((restricted_norm(&expm(a, t)?, j), ())) };
    let mut best_i = 0;
    for i in 1..n {
        if gains[i] > gains[best_i] {
            best_i = i;
        }
    }
    let (mut peak_time, mut peak) = (times[best_i], gains[best_i]);
    for &i in &peaks {
        if i == 0 {
            continue;
        }
        let lo = times[i - 1];
        let hi = times[(i + 1).min(n - 1)];
        let width = (tol * (hi - lo)).max(1e-14 * hi);
        let (t, v, _) = golden_max(&f, lo, hi, width)?;
        if v > peak {
            peak = v;
            peak_time = t;
        }
    }
    Ok(TransientProfile {
        times,
        gains,
        peak,
        peak_time,
        horizon,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use nalgebra::dmatrix;

    #[test]
    fn contraction_peaks_at_zero() {
        let p = transient_growth(&(-RealMatrix::identity(3, 3)), ProjectionJ::identity(3), 1e-8).unwrap();
        assert!((p.peak - 1.0).abs() < 1e-12);
        assert_eq!(p.peak_time, 0.0);
        assert!((p.gains[0] - 1.0).abs() < 1e-15);
        assert!(p.times.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn restricted_triangular_example() {
        let a = dmatrix![-2.0, 0.0; 3.0, -1.0];
        let p = transient_growth(&a, ProjectionJ::new(1, 1), 1e-8).unwrap();
        assert!((p.peak - 1.0).abs() < 1e-9);
    }

    #[test]
    fn example_plant_open_loop_matches_dense_scan() {
        let a = fixtures::example_plant_a();
        let p = transient_growth(&a, ProjectionJ::identity(7), 1e-8).unwrap();
        let scan = (0..20_000)
            .map(|k| 1e-4 * 10f64.powf(5.0 * k as f64 / 19_999.0))
            .map(|t| norm2(&expm(&a, t).unwrap()))
            .fold(1.0, f64::max);
        assert!(p.peak >= scan * (1.0 - 1e-12));
        assert!(p.peak <= scan * (1.0 + 1e-5), "{} vs {scan}", p.peak);
        assert!((p.peak - 598.45).abs() < 0.01, "{}", p.peak);
    }

    #[test]
    fn rejects_unstable() {
        assert!(matches!(
            transient_growth(&dmatrix![0.1], ProjectionJ::identity(1), 1e-6),
            Err(KreissError::NotHurwitz(_))
        ));
    }
}
