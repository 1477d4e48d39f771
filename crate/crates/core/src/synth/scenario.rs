use std::sync::Mutex;

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::objectives::{self, Piecewise};
use super::optimizer::{minimize, Evaluation, NonsmoothObjective, OptimizerOptions};
use super::{
    DiskRegion, ObjectiveKind, RestartReport, ScenarioRecord, ScenarioState, ScenarioStatus, SynthesisProblem,
    SynthesisResult,
};
use crate::error::{KreissError, Result};
use crate::matcore::{eigenvalues, RealMatrix};
use crate::sysmodel::{augment, Augmented, Controller, ProjectionJ};
use crate::transient::search::{maximize_on_grid, uniform_grid};
use crate::transient::{h2_norm, kreiss_constant, worst_case_energy, worst_scenario, DEFAULT_TOL};

/// Relative accuracy of the per-scenario H∞ norms inside the optimizer.
const SCENARIO_HINF_TOL: f64 = 1e-9;
const DESTABILIZE_GRID: usize = 201;
const DEGRADE_GRID: usize = 201;
const DEGRADE_TOL: f64 = 1e-5;
const PENALTY_START: f64 = 10.0;
const PENALTY_ESCALATIONS: usize = 4;
/// Width of the golden-section bracket in `destabilize`.
const DESTABILIZE_WIDTH: f64 = 1e-9;
/// `δ = -1` is replaced by this point, where `(1-δ)/(1+δ)` is finite.
const DELTA_FLOOR: f64 = -1.0 + 1e-9;

fn packed_from(aug: &Augmented, x: &[f64]) -> RealMatrix {
    RealMatrix::from_column_slice(aug.b_a.ncols(), aug.c_a.nrows(), x)
}

/// Value of the chosen objective over a scenario set, with gradients with
/// respect to `A_cl`.
fn objective_pieces(kind: &ObjectiveKind, acl: &RealMatrix, j: ProjectionJ, scenarios: &[f64]) -> Result<Piecewise> {
    match kind {
        ObjectiveKind::Kreiss => {
            let parts = scenarios
                .par_iter()
                .map(|&d| objectives::kreiss_scenario(acl, j, d, SCENARIO_HINF_TOL))
                .collect::<Result<Vec<_>>>()?;
            Ok(Piecewise::max(parts))
        }
        ObjectiveKind::NumAbs => Ok(objectives::numerical_abscissa(acl, j)),
        ObjectiveKind::H2Match { reference } => objectives::h2_match(acl, j, reference),
        ObjectiveKind::WcEnergy => objectives::wc_energy(acl, j),
    }
}

/// Region violation pieces `α + decay` and `ρ - radius`.
fn region_pieces(acl: &RealMatrix, region: &DiskRegion) -> Result<(Piecewise, Piecewise)> {
    let spec = eigenvalues(acl)?;
    let mut alpha = objectives::abscissa(acl, &spec);
    alpha.value += region.min_decay;
    let mut rho = objectives::radius(acl, &spec);
    rho.value -= region.radius;
    Ok((alpha, rho))
}

enum Phase {
    /// `max(α + decay, ρ - radius)`.
    Stabilize,
    /// Right-half-plane excess plus `(ρ - radius)₊`; smooth where `α` is not.
    Excess,
    /// Objective plus `w ((α + decay)₊ + (ρ - radius)₊)`.
    Penalized(f64),
}

struct LoopObjective<'a> {
    aug: &'a Augmented,
    kind: &'a ObjectiveKind,
    scenarios: &'a [f64],
    region: DiskRegion,
    inner: DiskRegion,
    phase: Phase,
    /// Lowest objective value among evaluated points inside `region`.
    best: Mutex<Option<(f64, Vec<f64>)>>,
}

impl LoopObjective<'_> {
    fn pieces(&self, x: &[f64]) -> Result<Option<Piecewise>> {
        let acl = self.aug.closed_loop(&packed_from(self.aug, x));
        let (alpha, rho) = region_pieces(&acl, &self.inner)?;
        match self.phase {
            Phase::Stabilize => Ok(Some(Piecewise::max(vec![alpha, rho]))),
            Phase::Excess => Ok(objectives::right_excess(&acl, -self.inner.min_decay)
                .map(|ex| ex.plus(&rho.positive_part(1e-9), 1.0))),
            Phase::Penalized(w) => {
                let raw_alpha = alpha.value - self.inner.min_decay;
                if raw_alpha >= 0.0 {
                    return Ok(None);
                }
                let obj = objective_pieces(self.kind, &acl, self.aug.projection(), self.scenarios)?;
                let feasible = raw_alpha <= -self.region.min_decay && rho.value + self.inner.radius <= self.region.radius;
                if feasible {
                    let mut best = self.best.lock().unwrap();
                    if best.as_ref().is_none_or(|b| obj.value < b.0) {
                        *best = Some((obj.value, x.to_vec()));
                    }
                }
                let band = 1e-9;
                let total = obj
                    .plus(&alpha.positive_part(band), w)
                    .plus(&rho.positive_part(band), w);
                Ok(Some(total))
            }
        }
    }
}

impl NonsmoothObjective for LoopObjective<'_> {
    fn dim(&self) -> usize {
        self.aug.b_a.ncols() * self.aug.c_a.nrows()
    }

    fn evaluate(&self, x: &[f64]) -> Option<Evaluation> {
        let p = self.pieces(x).ok()??;
        if !p.value.is_finite() {
            return None;
        }
        let gradients = p
            .grads
            .iter()
            .map(|g| DVector::from_column_slice(self.aug.pullback(g).as_slice()))
            .collect();
        Some(Evaluation { value: p.value, gradients })
    }
}

fn check_controller(problem: &SynthesisProblem, k: &Controller) -> Result<()> {
    if k.order() != problem.order || k.noutputs() != problem.plant.ninputs() || k.ninputs() != problem.plant.noutputs() {
        return Err(KreissError::Dimension(format!(
            "controller of order {} with {} outputs and {} inputs does not fit the problem (order {}, {} inputs, {} outputs)",
            k.order(),
            k.noutputs(),
            k.ninputs(),
            problem.order,
            problem.plant.ninputs(),
            problem.plant.noutputs()
        )));
    }
    Ok(())
}

fn closed_loop(problem: &SynthesisProblem, k: &Controller) -> Result<(Augmented, RealMatrix)> {
    check_controller(problem, k)?;
    let aug = Augmented::new(&problem.plant, problem.order)?;
    let acl = aug.closed_loop(k.packed());
    Ok((aug, acl))
}

/// Locally minimizes the objective over the scenario set subject to the disk
/// region, starting from `k0`. Returns the controller and the achieved value,
/// which never exceeds the value at `k0` when `k0` is feasible.
pub fn multimodel_min(problem: &SynthesisProblem, scenarios: &[f64], k0: &Controller) -> Result<(Controller, f64)> {
    multimodel_min_seeded(problem, scenarios, k0, problem.optimizer.seed)
}

fn multimodel_min_seeded(
    problem: &SynthesisProblem,
    scenarios: &[f64],
    k0: &Controller,
    seed: u64,
) -> Result<(Controller, f64)> {
    if scenarios.is_empty() {
        return Err(KreissError::InvalidArgument("scenario set is empty".into()));
    }
    let (aug, acl0) = closed_loop(problem, k0)?;
    let region = problem.region;
    let inner = region.tightened();
    let options = OptimizerOptions {
        seed,
        ..problem.optimizer.clone()
    };
    let mut x = k0.parameters();

    if !region.contains(&eigenvalues(&acl0)?) {
        let stab = LoopObjective {
            aug: &aug,
            kind: &problem.kind,
            scenarios,
            region,
            inner,
            phase: Phase::Stabilize,
            best: Mutex::new(None),
        };
        let target = -1e-3 * inner.min_decay;
        let out = minimize(&stab, &x, &OptimizerOptions { target: Some(target), ..options.clone() })
            .ok_or_else(|| KreissError::Numerical("stabilization objective undefined at start".into()))?;
        let mut violation = out.value;
        x = out.x;
        if violation >= 0.0 {
            // Stalled, typically at colliding eigenvalues.
            let excess = LoopObjective {
                phase: Phase::Excess,
                best: Mutex::new(None),
                ..stab
            };
            if let Some(out) = minimize(&excess, &x, &OptimizerOptions { target: Some(1e-13), ..options.clone() }) {
                let acl = aug.closed_loop(&packed_from(&aug, &out.x));
                let spec = eigenvalues(&acl)?;
                violation = (spec.abscissa() + region.min_decay).max(spec.radius() - region.radius);
                x = out.x;
            }
        }
        if violation >= 0.0 {
            return Err(KreissError::Infeasible(format!(
                "no controller with eigenvalues in the region found (best violation {violation:.3e})"
            )));
        }
    }

    let mut w = PENALTY_START;
    let best = Mutex::new(None);
    for _ in 0..PENALTY_ESCALATIONS {
        let obj = LoopObjective {
            aug: &aug,
            kind: &problem.kind,
            scenarios,
            region,
            inner,
            phase: Phase::Penalized(w),
            best: Mutex::new(best.lock().unwrap().take()),
        };
        let out = minimize(&obj, &x, &options);
        *best.lock().unwrap() = obj.best.into_inner().unwrap();
        let Some(out) = out else { break };
        x = out.x;
        let acl = aug.closed_loop(&packed_from(&aug, &x));
        if region.contains(&eigenvalues(&acl)?) {
            break;
        }
        w *= 10.0;
    }
    let (value, params) = best
        .into_inner()
        .unwrap()
        .ok_or_else(|| KreissError::Infeasible("penalty phase never reached the region".into()))?;
    Ok((k0.with_parameters(&params)?, value))
}

/// Worst scenario for stability: `max_δ α(((1-δ)/(1+δ)) A_cl - I)`.
pub fn destabilize(problem: &SynthesisProblem, k: &Controller) -> Result<(f64, f64)> {
    let (_, acl) = closed_loop(problem, k)?;
    let nt = acl.nrows();
    let f = |d: f64| -> Result<(f64, ())> {
        let d = d.max(DELTA_FLOOR);
        let a = (1.0 - d) / (1.0 + d);
        let m = &acl * a - RealMatrix::identity(nt, nt);
        Ok((eigenvalues(&m)?.abscissa(), ()))
    };
    let mut grid = uniform_grid(DESTABILIZE_GRID);
    grid[0] = DELTA_FLOOR;
    let found = maximize_on_grid(&grid, f, DESTABILIZE_WIDTH)?;
    Ok((found.arg.max(DELTA_FLOOR), found.value))
}

/// Worst scenario for performance. δ-independent objectives return `δ* = 0`.
pub fn degrade(problem: &SynthesisProblem, k: &Controller) -> Result<(f64, f64)> {
    let (_, alpha) = destabilize(problem, k)?;
    if alpha >= 0.0 {
        return Err(KreissError::NotHurwitz(alpha));
    }
    match problem.kind {
        ObjectiveKind::Kreiss => {
            let plant = augment(&problem.plant, problem.order)?;
            let r = worst_scenario(&plant, Some(k.packed()), DEGRADE_TOL, DEGRADE_GRID)?;
            Ok((r.delta_star, r.value))
        }
        _ => Ok((0.0, objective_value(&problem.kind, problem, k)?)),
    }
}

/// Final value of the objective for the closed loop under `k`.
pub fn objective_value(kind: &ObjectiveKind, problem: &SynthesisProblem, k: &Controller) -> Result<f64> {
    let (aug, acl) = closed_loop(problem, k)?;
    let j = aug.projection();
    match kind {
        ObjectiveKind::Kreiss => Ok(kreiss_constant(&acl, j, DEFAULT_TOL)?.value),
        ObjectiveKind::NumAbs => Ok(objectives::numerical_abscissa(&acl, j).value),
        ObjectiveKind::H2Match { reference } => {
            let (_, h2) = h2_match_system(&acl, j, reference)?;
            Ok(h2)
        }
        ObjectiveKind::WcEnergy => Ok(worst_case_energy(&acl, j)?.value),
    }
}

/// The model-matching error system and its H₂ norm.
fn h2_match_system(
    acl: &RealMatrix,
    j: ProjectionJ,
    reference: &RealMatrix,
) -> Result<(crate::sysmodel::StateSpace, f64)> {
    let nt = acl.nrows();
    let n = j.plant_states();
    let jm = j.matrix();
    let mut ae = RealMatrix::zeros(nt + n, nt + n);
    ae.view_mut((0, 0), (nt, nt)).copy_from(acl);
    ae.view_mut((nt, nt), (n, n)).copy_from(reference);
    let mut be = RealMatrix::zeros(nt + n, n);
    be.view_mut((0, 0), (nt, n)).copy_from(&jm);
    be.view_mut((nt, 0), (n, n)).fill_with_identity();
    let mut ce = RealMatrix::zeros(n, nt + n);
    ce.view_mut((0, 0), (n, nt)).copy_from(&jm.transpose());
    ce.view_mut((0, nt), (n, n)).copy_from(&-RealMatrix::identity(n, n));
    let sys = crate::sysmodel::StateSpace::new(ae, be, ce, RealMatrix::zeros(n, n))?;
    let v = h2_norm(&sys)?;
    Ok((sys, v))
}

/// One run of the scenario loop from `k0`.
pub fn scenario_run(problem: &SynthesisProblem, k0: &Controller, seed: u64) -> Result<(Controller, f64, ScenarioState)> {
    problem.validate()?;
    check_controller(problem, k0)?;
    let mut state = ScenarioState::new();
    let mut k = k0.clone();
    loop {
        let (next, h_lower) = multimodel_min_seeded(problem, &state.scenarios, &k, seed)?;
        k = next;
        let (d_alpha, alpha) = destabilize(problem, &k)?;
        if alpha >= 0.0 {
            state.history.push(ScenarioRecord {
                scenarios: state.scenarios.len(),
                h_lower,
                destabilizing_delta: d_alpha,
                alpha_star: alpha,
                degrading_delta: None,
                h_upper: None,
            });
            if !state.add(d_alpha) {
                return Err(KreissError::Numerical(format!(
                    "scenario {d_alpha} destabilizes the family but is already in the set"
                )));
            }
        } else {
            let (d_perf, h_upper) = degrade(problem, &k)?;
            state.history.push(ScenarioRecord {
                scenarios: state.scenarios.len(),
                h_lower,
                destabilizing_delta: d_alpha,
                alpha_star: alpha,
                degrading_delta: Some(d_perf),
                h_upper: Some(h_upper),
            });
            if h_upper < (1.0 + problem.scenario_tol) * h_lower || !state.add(d_perf) {
                state.status = ScenarioStatus::Converged;
                break;
            }
        }
        if state.scenarios.len() > problem.max_scenarios {
            state.status = ScenarioStatus::CapReached;
            break;
        }
    }
    let certified = objective_value(&problem.kind, problem, &k)?;
    if state.status == ScenarioStatus::Converged {
        state.status = ScenarioStatus::Certified;
    }
    Ok((k, certified, state))
}

/// Starting controller of restart `index`: zero for the first, otherwise
/// entries `0.1 · N(0, 1)` drawn from the restart's seed.
pub fn restart_controller(problem: &SynthesisProblem, index: usize) -> Controller {
    let zero = problem.zero_controller();
    if index == 0 {
        return zero;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(problem.seeds[index]);
    let params: Vec<f64> = (0..zero.packed().len())
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            0.1 * z
        })
        .collect();
    zero.with_parameters(&params).expect("shape matches")
}

/// Runs every restart (in parallel) and keeps the lowest certified value;
/// ties go to the lowest restart index.
pub fn scenario_loop(problem: &SynthesisProblem) -> Result<SynthesisResult> {
    problem.validate()?;
    let runs: Vec<Result<(Controller, f64, ScenarioState)>> = (0..problem.restarts)
        .into_par_iter()
        .map(|r| scenario_run(problem, &restart_controller(problem, r), problem.seeds[r]))
        .collect();
    let reports = runs
        .iter()
        .enumerate()
        .map(|(index, r)| RestartReport {
            index,
            seed: problem.seeds[index],
            certified: r.as_ref().ok().map(|x| x.1),
            error: r.as_ref().err().map(|e| e.to_string()),
        })
        .collect();
    let mut best: Option<(usize, (Controller, f64, ScenarioState))> = None;
    let mut first_error = None;
    for (i, r) in runs.into_iter().enumerate() {
        match r {
            Ok(run) => {
                if best.as_ref().is_none_or(|b| run.1 < b.1 .1) {
                    best = Some((i, run));
                }
            }
            Err(e) => {
                first_error.get_or_insert(e);
            }
        }
    }
    let Some((restart, (controller, certified, state))) = best else {
        return Err(first_error.unwrap_or_else(|| KreissError::Infeasible("no restart succeeded".into())));
    };
    Ok(SynthesisResult {
        controller,
        kind: problem.kind.name(),
        certified,
        state,
        restart,
        restarts: reports,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::sysmodel::StateSpace;
    use nalgebra::dmatrix;

    fn scalar_plant(a: f64) -> StateSpace {
        StateSpace::new(dmatrix![a], dmatrix![1.0], dmatrix![1.0], dmatrix![0.0]).unwrap()
    }

    #[test]
    fn descent_from_zero_controller() {
        let p = SynthesisProblem::new(scalar_plant(-2.0), 0, ObjectiveKind::Kreiss).unwrap();
        let k0 = p.zero_controller();
        let (aug, acl) = closed_loop(&p, &k0).unwrap();
        let h0 = objectives::kreiss_scenario(&acl, aug.projection(), 0.0, 1e-12).unwrap().value;
        let (_, h) = multimodel_min(&p, &[0.0], &k0).unwrap();
        assert!(h <= h0 + 1e-12, "{h} > {h0}");
    }

    #[test]
    fn destabilize_matches_closed_form() {
        let p = SynthesisProblem::new(scalar_plant(0.5), 0, ObjectiveKind::Kreiss).unwrap();
        let (d, alpha) = destabilize(&p, &p.zero_controller()).unwrap();
        assert!(alpha >= 0.0);
        assert!(d < -0.99);
        // Stable scalar loop: α(aA - I) = -a·2 - 1 is largest at δ = 1.
        let p = SynthesisProblem::new(scalar_plant(-2.0), 0, ObjectiveKind::Kreiss).unwrap();
        let (d, alpha) = destabilize(&p, &p.zero_controller()).unwrap();
        assert!((alpha + 1.0).abs() < 1e-9 && (d - 1.0).abs() < 1e-6, "{d} {alpha}");
    }

    #[test]
    fn destabilize_matches_fine_grid() {
        let plant = fixtures::example_plant();
        let p = SynthesisProblem::new(plant, 3, ObjectiveKind::Kreiss).unwrap();
        let k = fixtures::printed_controller(fixtures::Design::Kreiss);
        let (_, alpha) = destabilize(&p, &k).unwrap();
        let (_, acl) = closed_loop(&p, &k).unwrap();
        let fine = (0..100_000)
            .map(|i| (-1.0 + 2.0 * i as f64 / 99_999.0).max(DELTA_FLOOR))
            .map(|d| {
                let a = (1.0 - d) / (1.0 + d);
                eigenvalues(&(&acl * a - RealMatrix::identity(10, 10))).unwrap().abscissa()
            })
            .fold(f64::NEG_INFINITY, f64::max);
        assert!(alpha >= fine - 1e-6 && alpha <= fine + 1e-6, "{alpha} vs {fine}");
    }

    #[test]
    fn degrade_normal_family_is_one() {
        let plant = StateSpace::new(
            dmatrix![-1.0, 0.0; 0.0, -3.0],
            dmatrix![1.0; 0.0],
            dmatrix![1.0, 0.0],
            dmatrix![0.0],
        )
        .unwrap();
        let p = SynthesisProblem::new(plant, 0, ObjectiveKind::Kreiss).unwrap();
        let (_, h) = degrade(&p, &p.zero_controller()).unwrap();
        assert!((h - 1.0).abs() < 1e-4, "{h}");
    }

    #[test]
    fn degrade_scalar_family_closed_form() {
        // For ẋ = -x + u, y = x, u = k y the family is (a(k-1) - 1) and every
        // scenario has H∞ norm 1/(1 + a(1-k)), maximal (= 1) at δ = 1.
        let p = SynthesisProblem::new(scalar_plant(-1.0), 0, ObjectiveKind::Kreiss).unwrap();
        let k = Controller::static_gain(dmatrix![0.5]).unwrap();
        let (d, h) = degrade(&p, &k).unwrap();
        assert!((h - 1.0).abs() < 1e-5 && d > 0.99, "{d} {h}");
    }

    #[test]
    fn degrade_printed_kreiss_controller() {
        let p = SynthesisProblem::new(fixtures::example_plant(), 3, ObjectiveKind::Kreiss).unwrap();
        let k = fixtures::printed_controller(fixtures::Design::Kreiss);
        let (_, h) = degrade(&p, &k).unwrap();
        assert!((h - 10.91).abs() / 10.91 < 0.05, "{h}");
    }

    #[test]
    fn objective_values_of_printed_loops() {
        let plant = fixtures::example_plant();
        let p = SynthesisProblem::new(plant.clone(), 3, ObjectiveKind::NumAbs).unwrap();
        let k = fixtures::printed_controller(fixtures::Design::Kreiss);
        let w = objective_value(&ObjectiveKind::NumAbs, &p, &k).unwrap();
        assert!((w - 656.0).abs() / 656.0 < 0.02, "{w}");

        let k = fixtures::printed_controller(fixtures::Design::WcEnergy);
        let e = objective_value(&ObjectiveKind::WcEnergy, &p, &k).unwrap();
        let (_, acl) = closed_loop(&p, &k).unwrap();
        let j = ProjectionJ::new(7, 3);
        let m0 = crate::transient::transient_growth(&acl, j, 1e-8).unwrap().peak;
        let kc = kreiss_constant(&acl, j, 1e-4).unwrap().value;
        assert!(e.is_finite() && e > 0.0);
        assert!((m0 - 57.1).abs() / 57.1 < 0.05 && (kc - 24.8).abs() / 24.8 < 0.05, "{m0} {kc}");
    }

    #[test]
    fn h2_match_of_reference_is_zero() {
        let plant = StateSpace::new(
            -RealMatrix::identity(2, 2),
            RealMatrix::zeros(2, 1),
            RealMatrix::zeros(1, 2),
            RealMatrix::zeros(1, 1),
        )
        .unwrap();
        let kind = ObjectiveKind::parse("h2match", 2).unwrap();
        let p = SynthesisProblem::new(plant, 0, kind.clone()).unwrap();
        let v = objective_value(&kind, &p, &p.zero_controller()).unwrap();
        assert!(v.abs() < 1e-12, "{v}");
    }

    #[test]
    fn uncontrollable_normal_plant_terminates_in_one_round() {
        let plant = StateSpace::new(
            dmatrix![-1.0, 0.0; 0.0, -2.0],
            RealMatrix::zeros(2, 1),
            RealMatrix::zeros(1, 2),
            RealMatrix::zeros(1, 1),
        )
        .unwrap();
        let p = SynthesisProblem::new(plant, 0, ObjectiveKind::Kreiss)
            .unwrap()
            .with_restarts(1, 3)
            .unwrap();
        let r = scenario_loop(&p).unwrap();
        // δ = 0 underestimates; the single added scenario δ = 1 is the worst case.
        assert_eq!(r.state.scenarios.len(), 2);
        assert!((r.state.scenarios[1] - 1.0).abs() < 1e-6);
        assert_eq!(r.state.status, ScenarioStatus::Certified);
        assert!((r.certified - 1.0).abs() < 1e-4, "{}", r.certified);
    }

    #[test]
    fn scenario_state_dedups() {
        let mut s = ScenarioState::new();
        assert!(!s.add(5e-7));
        assert!(s.add(0.5));
        assert!(!s.add(0.5 + 1e-7));
        assert_eq!(s.scenarios, vec![0.0, 0.5]);
    }

    #[test]
    fn restart_controllers_are_deterministic() {
        let p = SynthesisProblem::new(fixtures::example_plant(), 3, ObjectiveKind::Kreiss).unwrap();
        assert_eq!(restart_controller(&p, 0), p.zero_controller());
        assert_eq!(restart_controller(&p, 4), restart_controller(&p, 4));
        assert_ne!(restart_controller(&p, 4), restart_controller(&p, 5));
    }
}
