use rayon::prelude::*;

use crate::error::{KreissError, Result};
use crate::matcore::{eigenvalues, solve_lyapunov, RealMatrix};
use crate::sysmodel::{ProjectionJ, StateSpace};

/// Largest plant state count accepted by the `2ⁿ` vertex enumeration.
pub const VERTEX_LIMIT: usize = 20;

/// `sqrt(tr(C P Cᵀ))` with `P` the controllability Gramian.
pub fn h2_norm(sys: &StateSpace) -> Result<f64> {
    sys.require_strictly_proper()?;
    let alpha = eigenvalues(sys.a())?.abscissa();
    if alpha >= 0.0 {
        return Err(KreissError::NotHurwitz(alpha));
    }
    let q = sys.b() * sys.b().transpose();
    let p = solve_lyapunov(&sys.a().transpose(), &q)?;
    let v = (sys.c() * p * sys.c().transpose()).trace();
    Ok(v.max(0.0).sqrt())
}

/// Worst unit-box initial condition for the output energy.
#[derive(Debug, Clone, PartialEq)]
pub struct WorstCaseEnergy {
    pub value: f64,
    pub vertex: Vec<f64>,
    /// Observability Gramian of `(A_cl, Jᵀ)`.
    pub gramian: RealMatrix,
}

/// `max_{‖v‖_∞ ≤ 1} sqrt(∫ ‖Jᵀ e^{A t} J v‖² dt)`, attained at a vertex of
/// the box since the integrand is a convex quadratic form in `v`.
pub fn worst_case_energy(a_cl: &RealMatrix, j: ProjectionJ) -> Result<WorstCaseEnergy> {
    let n = j.plant_states();
    if n > VERTEX_LIMIT {
        return Err(KreissError::TooManyVertices { n, limit: VERTEX_LIMIT });
    }
    if a_cl.nrows() != j.total() {
        return Err(KreissError::Dimension(format!(
            "A_cl is {}x{} but J expects {} states",
            a_cl.nrows(),
            a_cl.ncols(),
            j.total()
        )));
    }
    let jm = j.matrix();
    let y = solve_lyapunov(a_cl, &(&jm * jm.transpose()))?;
    let w = y.view((0, 0), (n, n)).into_owned();
    if n == 0 {
        return Ok(WorstCaseEnergy {
            value: 0.0,
            vertex: Vec::new(),
            gramian: y,
        });
    }
    // v and -v give the same value: fix the first sign.
    let count: u64 = 1 << (n - 1);
    let vertex_of = |mask: u64| -> Vec<f64> {
        (0..n)
            .map(|i| if i > 0 && (mask >> (i - 1)) & 1 == 1 { -1.0 } else { 1.0 })
            .collect()
    };
    let (best_mask, best) = (0..count)
        .into_par_iter()
        .map(|mask| {
            let v = vertex_of(mask);
            let mut q = 0.0;
            for r in 0..n {
                for c in 0..n {
                    q += v[r] * w[(r, c)] * v[c];
                }
            }
            (mask, q)
        })
        .reduce(
            || (u64::MAX, f64::NEG_INFINITY),
            |p, q| {
                if q.1 > p.1 || (q.1 == p.1 && q.0 < p.0) {
                    q
                } else {
                    p
                }
            },
        );
    Ok(WorstCaseEnergy {
        value: best.max(0.0).sqrt(),
        vertex: vertex_of(best_mask),
        gramian: y,
    })
}
