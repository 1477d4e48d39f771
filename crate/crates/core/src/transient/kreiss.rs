use crate::error::{KreissError, Result};
use crate::matcore::{eigenvalues, RealMatrix};
use crate::sysmodel::{build_kreiss_plant, ProjectionJ, TwoPortPlant};

use super::hinf::hinf_norm_with_poles;
use super::search::{chebyshev_grid, maximize_on_grid};

pub const DEFAULT_TOL: f64 = 1e-4;
pub const DELTA_GRID: usize = 101;
/// Width of the golden-section bracket on `δ` at termination.
pub(crate) const DELTA_WIDTH: f64 = 1e-7;

/// Kreiss constant with the maximizing scenario and frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct KreissReport {
    pub value: f64,
    pub delta_star: f64,
    /// `f64::INFINITY` when the peak sits at the high-frequency limit.
    pub omega_star: f64,
    /// Grid samples `(δ, H∞ norm)`.
    pub profile: Vec<(f64, f64)>,
    pub tolerance: f64,
}

/// H∞ norm of `δI ⋆ P ⋆ K` at one scenario, with its peak frequency.
/// The family member must be stable; `δ = -1` yields zero.
pub(crate) fn scenario_hinf(
    plant: &TwoPortPlant,
    k: Option<&RealMatrix>,
    delta: f64,
    tol: f64,
) -> Result<(f64, f64)> {
    let Some(sys) = plant.close(delta, k)? else {
        return Ok((0.0, 0.0));
    };
    let spec = eigenvalues(sys.a())?;
    if spec.abscissa() >= 0.0 {
        return Err(KreissError::NotHurwitz(spec.abscissa()));
    }
    let h = hinf_norm_with_poles(&sys, tol, spec.eigenvalues())?;
    Ok((h.value, h.frequency))
}

/// Maximum over `δ ∈ [-1, 1]` of the scenario H∞ norm, by a Chebyshev grid
/// and golden-section refinement of each grid-local maximum.
pub(crate) fn worst_scenario(
    plant: &TwoPortPlant,
    k: Option<&RealMatrix>,
    tol: f64,
    grid_points: usize,
) -> Result<KreissReport> {
    let inner_tol = tol / 10.0;
    let grid = chebyshev_grid(grid_points);
    let found = maximize_on_grid(&grid, |d| scenario_hinf(plant, k, d, inner_tol), DELTA_WIDTH)?;
    Ok(KreissReport {
        value: found.value,
        delta_star: found.arg,
        omega_star: found.payload,
        profile: found.profile,
        tolerance: tol,
    })
}

/// `sup_{Re s > 0} Re(s) ‖Jᵀ(sI - A)^{-1} J‖` for Hurwitz `A`, evaluated as
/// the worst case over `δ ∈ [-1, 1]` of the H∞ norm of
/// `Jᵀ(sI - ((1-δ)/(1+δ) A - I))^{-1} J`.
pub fn kreiss_constant(a: &RealMatrix, j: ProjectionJ, tol: f64) -> Result<KreissReport> {
    if !(tol.is_finite() && tol > 0.0) {
        return Err(KreissError::InvalidArgument(format!("tol must be positive, got {tol}")));
    }
    let plant = build_kreiss_plant(a, j)?;
    let alpha = eigenvalues(a)?.abscissa();
    if alpha >= 0.0 {
        return Err(KreissError::NotHurwitz(alpha));
    }
    worst_scenario(&plant, None, tol, DELTA_GRID)
}
