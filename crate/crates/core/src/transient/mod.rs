//! Analysis quantities: spectral and numerical abscissas, transient growth,
//! H∞ and H₂ norms, the Kreiss constant, pseudospectral abscissas and the
//! worst-case initial-condition energy.

mod energy;
mod growth;
mod hinf;
mod kreiss;
mod pseudo;
pub(crate) mod search;

pub use energy::{h2_norm, worst_case_energy, WorstCaseEnergy, VERTEX_LIMIT};
pub use growth::{transient_growth, TransientProfile};
pub use hinf::{hinf_norm, HinfNorm, ACTIVE_TOL};
pub use kreiss::{kreiss_constant, KreissReport, DEFAULT_TOL, DELTA_GRID};
pub use pseudo::{kreiss_via_eps, log_grid, pseudospectral_abscissa, EpsProfile};

pub(crate) use hinf::hinf_norm_with_poles;
pub(crate) use kreiss::worst_scenario;

use crate::error::Result;
use crate::matcore::{eigenvalues, ensure_finite, ensure_square, symmetric_max_eigen, RealMatrix};
use crate::sysmodel::ProjectionJ;

pub fn spectral_abscissa(a: &RealMatrix) -> Result<f64> {
    Ok(eigenvalues(a)?.abscissa())
}

/// `λ_max((A + Aᵀ)/2)`.
pub fn numerical_abscissa(a: &RealMatrix) -> Result<f64> {
    ensure_square(a, "numerical abscissa argument")?;
    ensure_finite(a, "numerical abscissa argument")?;
    if a.nrows() == 0 {
        return Ok(f64::NEG_INFINITY);
    }
    let s = (a + a.transpose()) * 0.5;
    Ok(symmetric_max_eigen(&s)?.0)
}

/// `ω(Jᵀ A J)`: numerical abscissa of the plant-state block.
pub fn restricted_numerical_abscissa(a: &RealMatrix, j: ProjectionJ) -> Result<f64> {
    let n = j.plant_states();
    ensure_square(a, "numerical abscissa argument")?;
    numerical_abscissa(&a.view((0, 0), (n, n)).into_owned())
}
