//! Simulation of `ẋ = Ax + ‖x‖B_x x + Bu` in open loop and under output
//! feedback.

mod dopri;

pub use dopri::integrate;

use std::fmt::Write as _;

use nalgebra::DVector;

use crate::error::{KreissError, Result};
use crate::fixtures;
use crate::matcore::{eigenvalues, RealMatrix};
use crate::sysmodel::{close_loop, Controller, StateSpace};

pub const DEFAULT_HORIZON: f64 = 2000.0;
pub const DEFAULT_TOL: f64 = 1e-9;
pub const ORIGIN_NORM: f64 = 1e-9;
pub const REMOTE_NORM: f64 = 1e-2;
pub const EQUILIBRIUM_FIELD: f64 = 1e-8;
/// Relative bracket width at which [`threshold_search`] stops.
pub const THRESHOLD_REL_WIDTH: f64 = 1e-6;
const SEARCH_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct NonlinearSystem {
    pub a: RealMatrix,
    pub bx: RealMatrix,
    pub b: RealMatrix,
    pub c: RealMatrix,
    pub reynolds: f64,
}

impl NonlinearSystem {
    pub fn new(reynolds: f64) -> Result<Self> {
        if !(reynolds.is_finite() && reynolds > 0.0) {
            return Err(KreissError::InvalidArgument(format!("R must be positive, got {reynolds}")));
        }
        let lin = fixtures::nonlinear_linear_part(reynolds);
        Ok(Self {
            a: lin.a().clone(),
            bx: fixtures::nonlinear_bx(),
            b: lin.b().clone(),
            c: lin.c().clone(),
            reynolds,
        })
    }

    /// Same system with the quadratic term removed.
    pub fn linearized(&self) -> Self {
        Self {
            bx: RealMatrix::zeros(self.bx.nrows(), self.bx.ncols()),
            ..self.clone()
        }
    }

    pub fn plant_states(&self) -> usize {
        self.a.nrows()
    }

    fn linear_part(&self) -> Result<StateSpace> {
        StateSpace::new(self.a.clone(), self.b.clone(), self.c.clone(), RealMatrix::zeros(self.c.nrows(), self.b.ncols()))
    }

    fn check_controller(&self, k: &Controller) -> Result<()> {
        if k.noutputs() != self.b.ncols() || k.ninputs() != self.c.nrows() {
            return Err(KreissError::Dimension(format!(
                "controller maps {} measurements to {} inputs, system has {} and {}",
                k.ninputs(),
                k.noutputs(),
                self.c.nrows(),
                self.b.ncols()
            )));
        }
        Ok(())
    }

    /// Right-hand side for the joint plant/controller state `z = [x; x_K]`.
    pub fn field(&self, k: Option<&Controller>, z: &DVector<f64>) -> DVector<f64> {
        let n = self.plant_states();
        let x = z.rows(0, n);
        let nx = x.norm();
        let mut dx = &self.a * x + (&self.bx * x) * nx;
        let Some(k) = k else { return dx };
        let nk = k.order();
        let xk = z.rows(n, nk);
        let y = &self.c * x;
        let u = k.c_k() * xk + k.d_k() * &y;
        dx += &self.b * u;
        let dxk = k.a_k() * xk + k.b_k() * y;
        let mut out = DVector::zeros(n + nk);
        out.rows_mut(0, n).copy_from(&dx);
        out.rows_mut(n, nk).copy_from(&dxk);
        out
    }

    /// Jacobian of [`Self::field`].
    pub fn jacobian(&self, k: Option<&Controller>, z: &DVector<f64>) -> RealMatrix {
        let n = self.plant_states();
        let x = z.rows(0, n).into_owned();
        let nx = x.norm();
        let mut jx = &self.a + &self.bx * nx;
        if nx > 0.0 {
            jx += (&self.bx * &x) * x.transpose() / nx;
        }
        let Some(k) = k else { return jx };
        let lin = close_loop(&self.linear_part().expect("consistent shapes"), k).expect("checked controller");
        let mut j = lin.a().clone();
        let nonlinear = jx - &self.a;
        let mut top = j.view_mut((0, 0), (n, n));
        top += nonlinear;
        j
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Terminal {
    Origin,
    RemoteEquilibrium,
    Undecided,
}

impl Terminal {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Origin => "origin",
            Self::RemoteEquilibrium => "remote-equilibrium",
            Self::Undecided => "undecided",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// Joint states `[x; x_K]` at each time.
    pub states: Vec<Vec<f64>>,
    /// Plant-state norms `‖x(t)‖`.
    pub norms: Vec<f64>,
    pub plant_states: usize,
    pub terminal: Terminal,
}

impl Trajectory {
    /// CSV with columns `t, x1.., xk1.., norm`.
    pub fn to_csv(&self) -> String {
        let width = self.states.first().map_or(0, |s| s.len());
        let mut out = String::from("t");
        for i in 0..self.plant_states {
            let _ = write!(out, ",x{}", i + 1);
        }
        for i in self.plant_states..width {
            let _ = write!(out, ",xk{}", i + 1 - self.plant_states);
        }
        out.push_str(",norm\n");
        for ((t, s), n) in self.times.iter().zip(&self.states).zip(&self.norms) {
            let _ = write!(out, "{t:e}");
            for v in s {
                let _ = write!(out, ",{v:e}");
            }
            let _ = writeln!(out, ",{n:e}");
        }
        out
    }
}

/// Integrates on `[0, horizon]` and classifies the end state. `x0` holds the
/// plant state, optionally followed by the controller state (zero otherwise).
pub fn simulate(
    sys: &NonlinearSystem,
    k: Option<&Controller>,
    x0: &[f64],
    horizon: f64,
    tol: f64,
) -> Result<Trajectory> {
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(KreissError::InvalidArgument(format!("horizon must be positive, got {horizon}")));
    }
    if !(tol.is_finite() && tol > 0.0) {
        return Err(KreissError::InvalidArgument(format!("tol must be positive, got {tol}")));
    }
    if !x0.iter().all(|v| v.is_finite()) {
        return Err(KreissError::NonFinite("initial state"));
    }
    if let Some(k) = k {
        sys.check_controller(k)?;
    }
    let n = sys.plant_states();
    let total = n + k.map_or(0, |k| k.order());
    if x0.len() != n && x0.len() != total {
        return Err(KreissError::Dimension(format!(
            "initial state has {} entries, expected {n} or {total}",
            x0.len()
        )));
    }
    let mut z0 = DVector::zeros(total);
    z0.rows_mut(0, x0.len()).copy_from_slice(x0);
    let (times, states) = integrate(|z| sys.field(k, z), &z0, horizon, tol)?;
    let end = states.last().expect("at least the initial state");
    let terminal = classify(sys, k, end)?;
    Ok(Trajectory {
        norms: states.iter().map(|z| z.rows(0, n).norm()).collect(),
        states: states.iter().map(|z| z.as_slice().to_vec()).collect(),
        times,
        plant_states: n,
        terminal,
    })
}

fn classify(sys: &NonlinearSystem, k: Option<&Controller>, z: &DVector<f64>) -> Result<Terminal> {
    let stable_at = |z: &DVector<f64>| -> Result<bool> { Ok(eigenvalues(&sys.jacobian(k, z))?.abscissa() < 0.0) };
    if z.norm() < ORIGIN_NORM {
        return Ok(if stable_at(&DVector::zeros(z.len()))? { Terminal::Origin } else { Terminal::Undecided });
    }
    let n = sys.plant_states();
    if z.rows(0, n).norm() > REMOTE_NORM && sys.field(k, z).norm() < EQUILIBRIUM_FIELD && stable_at(z)? {
        return Ok(Terminal::RemoteEquilibrium);
    }
    Ok(Terminal::Undecided)
}

/// Smallest amplitude `s` in `bracket` for which `s · direction` leaves the
/// basin of the origin, by bisection to relative width
/// [`THRESHOLD_REL_WIDTH`].
pub fn threshold_search(
    sys: &NonlinearSystem,
    k: Option<&Controller>,
    direction: &[f64],
    bracket: (f64, f64),
) -> Result<f64> {
    let (mut lo, mut hi) = bracket;
    if !(lo.is_finite() && hi.is_finite() && 0.0 <= lo && lo < hi) {
        return Err(KreissError::InvalidArgument(format!("bad bracket [{lo}, {hi}]")));
    }
    let run = |s: f64| -> Result<Terminal> {
        let x0: Vec<f64> = direction.iter().map(|d| d * s).collect();
        Ok(simulate(sys, k, &x0, DEFAULT_HORIZON, SEARCH_TOL)?.terminal)
    };
    let at_lo = run(lo)?;
    let at_hi = run(hi)?;
    if at_lo == at_hi {
        return Err(KreissError::NoThreshold(at_lo.name().into()));
    }
    while hi - lo > THRESHOLD_REL_WIDTH * hi {
        let mid = 0.5 * (lo + hi);
        let c = run(mid)?;
        if c == at_lo {
            lo = mid;
        } else if c == at_hi {
            hi = mid;
        } else {
            return Err(KreissError::NoConvergence(format!(
                "amplitude {mid:e} is {} between {} and {}",
                c.name(),
                at_lo.name(),
                at_hi.name()
            )));
        }
    }
    Ok(0.5 * (lo + hi))
}
