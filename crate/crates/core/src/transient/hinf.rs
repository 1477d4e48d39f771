use crate::error::{KreissError, Result};
use crate::matcore::{eigenvalues, max_gain, max_singular_triplet, raw_crossings_unchecked, to_complex};
use crate::sysmodel::StateSpace;

/// Number of lightly damped poles whose frequencies seed the lower bound.
const POLE_SEEDS: usize = 10;
const MAX_ITER: usize = 100;
/// Frequencies within this relative distance of the peak count as active.
pub const ACTIVE_TOL: f64 = 1e-3;

/// H∞ norm with the frequency attaining it (`f64::INFINITY` when the
/// feedthrough term dominates).
#[derive(Debug, Clone, PartialEq)]
pub struct HinfNorm {
    pub value: f64,
    pub frequency: f64,
    /// Evaluated frequencies whose gain is within [`ACTIVE_TOL`] of the value.
    pub active: Vec<f64>,
}

/// H∞ norm of a stable system to relative accuracy `tol`.
///
/// Level-set iteration on `gamma`: each Hamiltonian eigenvalue test at
/// `gamma = lb (1 + tol)` either certifies the upper bound (no crossings) or
/// yields frequency intervals whose midpoints raise the lower bound `lb`.
pub fn hinf_norm(sys: &StateSpace, tol: f64) -> Result<HinfNorm> {
    let spec = eigenvalues(sys.a())?;
    if spec.abscissa() >= 0.0 {
        return Err(KreissError::NotHurwitz(spec.abscissa()));
    }
    hinf_norm_with_poles(sys, tol, spec.eigenvalues())
}

pub(crate) fn hinf_norm_with_poles(
    sys: &StateSpace,
    tol: f64,
    poles: &[num_complex::Complex64],
) -> Result<HinfNorm> {
    if !(tol.is_finite() && tol > 0.0) {
        return Err(KreissError::InvalidArgument(format!("tol must be positive, got {tol}")));
    }
    let feedthrough = max_singular_triplet(&to_complex(sys.d())).0;
    if sys.ninputs() == 0 || sys.noutputs() == 0 {
        return Ok(HinfNorm {
            value: 0.0,
            frequency: 0.0,
            active: vec![0.0],
        });
    }

    let mut seeds: Vec<&num_complex::Complex64> = poles.iter().filter(|l| l.im > 0.0).collect();
    seeds.sort_by(|a, b| {
        let ra = a.im / a.re.abs().max(f64::MIN_POSITIVE);
        let rb = b.im / b.re.abs().max(f64::MIN_POSITIVE);
        rb.total_cmp(&ra)
    });
    let mut evaluated: Vec<(f64, f64)> = Vec::new();
    evaluated.push((0.0, max_gain(sys, 0.0)?));
    for l in seeds.iter().take(POLE_SEEDS) {
        evaluated.push((l.im, max_gain(sys, l.im)?));
    }

    let best = |ev: &[(f64, f64)]| {
        ev.iter()
            .cloned()
            .fold((0.0, f64::NEG_INFINITY), |acc, p| if p.1 > acc.1 { p } else { acc })
    };
    let (mut w_best, mut lb) = best(&evaluated);
    if feedthrough > lb {
        w_best = f64::INFINITY;
        lb = feedthrough;
    }
    if lb == 0.0 {
        return Ok(HinfNorm {
            value: 0.0,
            frequency: 0.0,
            active: vec![0.0],
        });
    }

    for _ in 0..MAX_ITER {
        let gamma = lb * (1.0 + tol);
        let crossings = raw_crossings_unchecked(sys, gamma)?;
        if crossings.is_empty() {
            break;
        }
        let mut mids: Vec<f64> = crossings.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        if crossings.len() == 1 {
            mids.push(crossings[0]);
        }
        let mut improved = false;
        for w in mids {
            let g = max_gain(sys, w)?;
            evaluated.push((w, g));
            if g > lb {
                lb = g;
                w_best = w;
                improved = true;
            }
        }
        if !improved {
            break;
        }
    }

    let mut active: Vec<f64> = evaluated
        .iter()
        .filter(|p| p.1 >= lb * (1.0 - ACTIVE_TOL))
        .map(|p| p.0)
        .collect();
    if w_best.is_finite() && !active.contains(&w_best) {
        active.push(w_best);
    }
    active.sort_by(f64::total_cmp);
    active.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * (1.0 + b.abs()));
    Ok(HinfNorm {
        value: lb,
        frequency: w_best,
        active,
    })
}
