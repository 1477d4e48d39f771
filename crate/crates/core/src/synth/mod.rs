//! Structured output-feedback synthesis by the worst-scenario loop around a
//! multi-start nonsmooth local optimizer.

pub mod objectives;
pub mod optimizer;
mod scenario;

pub use optimizer::{local_step, minimize, Evaluation, NonsmoothObjective, OptimizerOptions, Outcome, StopReason};
pub use scenario::{
    degrade, destabilize, multimodel_min, objective_value, restart_controller, scenario_loop, scenario_run,
};

use crate::error::{KreissError, Result};
use crate::matcore::{RealMatrix, Spectrum};
use crate::sysmodel::{Controller, StateSpace};

/// Closed-loop eigenvalue region `{Re λ ≤ -min_decay, |λ| ≤ radius}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiskRegion {
    pub min_decay: f64,
    pub radius: f64,
}

impl DiskRegion {
    /// `min_decay == radius` leaves the single point `-radius`, which is
    /// accepted so that infeasibility is reported by the synthesis itself.
    pub fn new(min_decay: f64, radius: f64) -> Result<Self> {
        if !(min_decay.is_finite() && radius.is_finite() && min_decay > 0.0 && min_decay <= radius) {
            return Err(KreissError::InvalidArgument(format!(
                "need 0 < min decay <= radius, got {min_decay} and {radius}"
            )));
        }
        Ok(Self { min_decay, radius })
    }

    pub fn contains(&self, spec: &Spectrum) -> bool {
        spec.abscissa() <= -self.min_decay && spec.radius() <= self.radius
    }

    /// Slightly smaller region used internally so that optimizer outputs
    /// land strictly inside `self`.
    pub(crate) fn tightened(&self) -> Self {
        Self {
            min_decay: self.min_decay * 1.05,
            radius: self.radius * (1.0 - 1e-3),
        }
    }
}

impl Default for DiskRegion {
    fn default() -> Self {
        Self {
            min_decay: 1e-3,
            radius: 100.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ObjectiveKind {
    /// Worst case over `δ ∈ [-1, 1]` of the closed-loop H∞ norm, i.e. `𝒦(A_cl)`.
    Kreiss,
    /// `ω(Jᵀ A_cl J)`.
    NumAbs,
    /// H₂ distance of `Jᵀ(sI - A_cl)^{-1}J` to `(sI - A_r)^{-1}`.
    H2Match { reference: RealMatrix },
    /// Worst-case output energy over unit-box plant initial conditions.
    WcEnergy,
}

impl ObjectiveKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Kreiss => "kreiss",
            Self::NumAbs => "numabs",
            Self::H2Match { .. } => "h2match",
            Self::WcEnergy => "wcenergy",
        }
    }

    /// Parses a method name; `h2match` gets the reference `-I` of size `n`.
    pub fn parse(name: &str, n: usize) -> Result<Self> {
        match name {
            "kreiss" => Ok(Self::Kreiss),
            "numabs" => Ok(Self::NumAbs),
            "h2match" => Ok(Self::H2Match {
                reference: -RealMatrix::identity(n, n),
            }),
            "wcenergy" => Ok(Self::WcEnergy),
            other => Err(KreissError::InvalidArgument(format!(
                "unknown method '{other}' (expected kreiss, numabs, h2match or wcenergy)"
            ))),
        }
    }

    /// Whether the objective depends on the scenario `δ`.
    pub fn uses_scenarios(&self) -> bool {
        matches!(self, Self::Kreiss)
    }
}

#[derive(Debug, Clone)]
pub struct SynthesisProblem {
    pub plant: StateSpace,
    pub order: usize,
    pub kind: ObjectiveKind,
    pub region: DiskRegion,
    pub restarts: usize,
    pub scenario_tol: f64,
    pub seeds: Vec<u64>,
    pub max_scenarios: usize,
    pub optimizer: OptimizerOptions,
}

pub const DEFAULT_RESTARTS: usize = 10;
pub const DEFAULT_SCENARIO_TOL: f64 = 0.01;
pub const DEFAULT_MAX_SCENARIOS: usize = 30;
pub const DEFAULT_SEED: u64 = 1;
/// Scenarios closer than this are considered equal.
pub const SCENARIO_DEDUP: f64 = 1e-6;

impl SynthesisProblem {
    pub fn new(plant: StateSpace, order: usize, kind: ObjectiveKind) -> Result<Self> {
        plant.require_strictly_proper()?;
        if let ObjectiveKind::H2Match { reference } = &kind {
            let n = plant.nstates();
            if reference.shape() != (n, n) {
                return Err(KreissError::Dimension(format!(
                    "reference A_r must be {n}x{n}, got {}x{}",
                    reference.nrows(),
                    reference.ncols()
                )));
            }
        }
        Ok(Self {
            plant,
            order,
            kind,
            region: DiskRegion::default(),
            restarts: DEFAULT_RESTARTS,
            scenario_tol: DEFAULT_SCENARIO_TOL,
            seeds: seed_list(DEFAULT_SEED, DEFAULT_RESTARTS),
            max_scenarios: DEFAULT_MAX_SCENARIOS,
            optimizer: OptimizerOptions::default(),
        })
    }

    /// Sets the restart count with seeds `base, base + 1, ...`.
    pub fn with_restarts(mut self, restarts: usize, base_seed: u64) -> Result<Self> {
        if restarts == 0 {
            return Err(KreissError::InvalidArgument("at least one restart is required".into()));
        }
        self.restarts = restarts;
        self.seeds = seed_list(base_seed, restarts);
        Ok(self)
    }

    pub fn with_region(mut self, region: DiskRegion) -> Self {
        self.region = region;
        self
    }

    pub(crate) fn validate(&self) -> Result<()> {
        self.plant.require_strictly_proper()?;
        if self.restarts == 0 || self.seeds.len() < self.restarts {
            return Err(KreissError::InvalidArgument(format!(
                "{} restarts need as many seeds, got {}",
                self.restarts,
                self.seeds.len()
            )));
        }
        if !(self.scenario_tol.is_finite() && self.scenario_tol > 0.0) {
            return Err(KreissError::InvalidArgument(format!(
                "scenario tol must be positive, got {}",
                self.scenario_tol
            )));
        }
        DiskRegion::new(self.region.min_decay, self.region.radius)?;
        Ok(())
    }

    /// Zero controller of the problem's shape.
    pub fn zero_controller(&self) -> Controller {
        Controller::zeros(self.order, self.plant.ninputs(), self.plant.noutputs())
    }
}

fn seed_list(base: u64, n: usize) -> Vec<u64> {
    (0..n as u64).map(|r| base.wrapping_add(r)).collect()
}

/// One pass of the scenario loop.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioRecord {
    pub scenarios: usize,
    /// Multi-model optimum over the current scenario set.
    pub h_lower: f64,
    pub destabilizing_delta: f64,
    pub alpha_star: f64,
    /// Worst case over all `δ`; `None` when the family was not stable.
    pub degrading_delta: Option<f64>,
    pub h_upper: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioStatus {
    Running,
    Converged,
    Certified,
    /// The scenario cap was hit before the stopping test passed.
    CapReached,
}

impl ScenarioStatus {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Running => "running",
            Self::Converged => "converged",
            Self::Certified => "certified",
            Self::CapReached => "cap-reached",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioState {
    pub scenarios: Vec<f64>,
    pub history: Vec<ScenarioRecord>,
    pub status: ScenarioStatus,
}

impl ScenarioState {
    pub fn new() -> Self {
        Self {
            scenarios: vec![0.0],
            history: Vec::new(),
            status: ScenarioStatus::Running,
        }
    }

    /// Adds `delta` unless it is within `SCENARIO_DEDUP` of a known scenario.
    pub fn add(&mut self, delta: f64) -> bool {
        if self.scenarios.iter().any(|d| (d - delta).abs() <= SCENARIO_DEDUP) {
            return false;
        }
        self.scenarios.push(delta);
        true
    }
}

impl Default for ScenarioState {
    fn default() -> Self {
        Self::new()
    }
}

/// Outcome of one restart.
#[derive(Debug, Clone, PartialEq)]
pub struct RestartReport {
    pub index: usize,
    pub seed: u64,
    pub certified: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthesisResult {
    pub controller: Controller,
    pub kind: &'static str,
    pub certified: f64,
    pub state: ScenarioState,
    pub restart: usize,
    pub restarts: Vec<RestartReport>,
}
