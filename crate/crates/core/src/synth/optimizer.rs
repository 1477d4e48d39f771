//! Nonsmooth local minimization for max-type objectives.
//!
//! Each iterate carries a bundle of gradients of the currently active smooth
//! pieces. The search direction is minus the minimum-norm element of their
//! convex hull, measured in the BFGS inverse-Hessian metric; steps satisfy a
//! weak Wolfe condition. When the line search fails, a gradient-sampling step
//! over a shrinking ball takes over.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Objective value with gradients of its active pieces; `gradients[0]` is
/// the gradient of the dominant piece.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub value: f64,
    pub gradients: Vec<DVector<f64>>,
}

/// A locally Lipschitz function given by value and active-piece gradients.
/// `None` marks points outside the domain (the value is `+∞` there).
pub trait NonsmoothObjective {
    fn dim(&self) -> usize;
    fn evaluate(&self, x: &[f64]) -> Option<Evaluation>;
}

#[derive(Debug, Clone)]
pub struct OptimizerOptions {
    pub max_iter: usize,
    /// Stop when the min-norm bundle element is this small (relative to `1 + |f|`).
    pub stationarity_tol: f64,
    /// Stop as soon as the value drops below this target.
    pub target: Option<f64>,
    pub sampling_radius: f64,
    pub min_sampling_radius: f64,
    pub seed: u64,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        Self {
            max_iter: 300,
            stationarity_tol: 1e-8,
            target: None,
            sampling_radius: 1e-2,
            min_sampling_radius: 1e-8,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Stationary,
    TargetReached,
    MaxIterations,
    /// Neither the line search nor gradient sampling could decrease the value.
    NoDescent,
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub reason: StopReason,
}

/// State carried between iterations of [`local_step`].
#[derive(Debug, Clone)]
pub struct StepState {
    pub x: DVector<f64>,
    pub eval: Evaluation,
    pub h: DMatrix<f64>,
    pub radius: f64,
    rng: ChaCha8Rng,
    scaled: bool,
}

impl StepState {
    pub fn new(x: &[f64], eval: Evaluation, options: &OptimizerOptions) -> Self {
        let n = x.len();
        Self {
            x: DVector::from_column_slice(x),
            eval,
            h: DMatrix::identity(n, n),
            radius: options.sampling_radius * (1.0 + x.iter().fold(0.0f64, |m, v| m.max(v.abs()))),
            rng: ChaCha8Rng::seed_from_u64(options.seed),
            scaled: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepResult {
    Moved,
    Stationary,
    NoDescent,
}

/// Minimum-norm point of the convex hull of `points` (Wolfe's algorithm).
/// Returns the convex weights.
pub fn min_norm_weights(points: &[DVector<f64>]) -> Vec<f64> {
    let k = points.len();
    assert!(k > 0);
    let scale = points.iter().map(|p| p.norm_squared()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let tol = 1e-12 * scale;
    let start = (0..k)
        .min_by(|&a, &b| points[a].norm_squared().total_cmp(&points[b].norm_squared()))
        .unwrap();
    let mut set = vec![start];
    let mut lambda = vec![1.0];
    let mut x = points[start].clone();

    for _ in 0..(50 * k + 50) {
        let (j, best) = (0..k)
            .map(|i| (i, x.dot(&points[i])))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        if best >= x.norm_squared() - tol || set.contains(&j) {
            break;
        }
        set.push(j);
        lambda.push(0.0);
        loop {
            let m = set.len();
            let mut gram = DMatrix::from_fn(m, m, |a, b| points[set[a]].dot(&points[set[b]]));
            for d in 0..m {
                gram[(d, d)] += 1e-14 * scale;
            }
            let ones = DVector::from_element(m, 1.0);
            let Some(sol) = gram.lu().solve(&ones) else {
                break;
            };
            let total: f64 = sol.sum();
            let mu: Vec<f64> = sol.iter().map(|v| v / total).collect();
            if mu.iter().all(|&v| v > 1e-14) {
                lambda = mu;
                break;
            }
            let mut theta = 1.0f64;
            for i in 0..m {
                if mu[i] <= 1e-14 {
                    let denom = lambda[i] - mu[i];
                    if denom > 0.0 {
                        theta = theta.min(lambda[i] / denom);
                    }
                }
            }
            for i in 0..m {
                lambda[i] += theta * (mu[i] - lambda[i]);
            }
            let mut keep_set = Vec::new();
            let mut keep_l = Vec::new();
            for i in 0..m {
                if lambda[i] > 1e-14 {
                    keep_set.push(set[i]);
                    keep_l.push(lambda[i]);
                }
            }
            if keep_set.is_empty() || keep_set.len() == m {
                break;
            }
            set = keep_set;
            let s: f64 = keep_l.iter().sum();
            lambda = keep_l.iter().map(|v| v / s).collect();
        }
        x = set
            .iter()
            .zip(&lambda)
            .fold(DVector::zeros(points[0].len()), |acc, (&i, &l)| acc + &points[i] * l);
    }
    let mut w = vec![0.0; k];
    for (&i, &l) in set.iter().zip(&lambda) {
        w[i] += l;
    }
    w
}

/// Minimum-norm element of the convex hull in the metric `‖g‖_H² = gᵀ H g`.
fn aggregate(grads: &[DVector<f64>], h: &DMatrix<f64>) -> DVector<f64> {
    if grads.len() == 1 {
        return grads[0].clone();
    }
    let mapped: Vec<DVector<f64>> = match h.clone().cholesky() {
        Some(ch) => grads.iter().map(|g| ch.l().transpose() * g).collect(),
        None => grads.to_vec(),
    };
    let w = min_norm_weights(&mapped);
    grads
        .iter()
        .zip(&w)
        .fold(DVector::zeros(grads[0].len()), |acc, (g, &l)| acc + g * l)
}

const C1: f64 = 1e-4;
const C2: f64 = 0.5;
const LINE_SEARCH_STEPS: usize = 60;
/// Relative decrease below which a quasi-Newton step counts as stalled.
const STALL: f64 = 1e-10;

/// Weak Wolfe bracketing line search. Returns the accepted step with its
/// evaluation and whether the curvature condition also held.
fn line_search<O: NonsmoothObjective + ?Sized>(
    obj: &O,
    x: &DVector<f64>,
    f: f64,
    d: &DVector<f64>,
    slope: f64,
) -> Option<(f64, Evaluation, bool)> {
    let mut lo = 0.0;
    let mut hi = f64::INFINITY;
    let mut t = 1.0;
    let mut armijo_best: Option<(f64, Evaluation)> = None;
    for _ in 0..LINE_SEARCH_STEPS {
        let xt = x + d * t;
        match obj.evaluate(xt.as_slice()) {
            Some(e) if e.value <= f + C1 * t * slope => {
                let dd = e.gradients[0].dot(d);
                if dd >= C2 * slope {
                    return Some((t, e, true));
                }
                lo = t;
                armijo_best = Some((t, e));
            }
            _ => hi = t,
        }
        t = if hi.is_finite() { 0.5 * (lo + hi) } else { 2.0 * t };
        if hi.is_finite() && hi - lo < 1e-14 * hi.max(1.0) {
            break;
        }
        if t > 1e12 {
            break;
        }
    }
    armijo_best.map(|(t, e)| (t, e, false))
}

/// One descent iteration. Updates `state` in place.
pub fn local_step<O: NonsmoothObjective + ?Sized>(
    obj: &O,
    state: &mut StepState,
    options: &OptimizerOptions,
) -> StepResult {
    let f = state.eval.value;
    let g = aggregate(&state.eval.gradients, &state.h);
    let gnorm = g.norm();
    if gnorm <= options.stationarity_tol * (1.0 + f.abs()) {
        // A vanishing aggregate over several pieces only shows stationarity
        // up to the active band; sampling resolves it further.
        if state.eval.gradients.len() == 1 {
            return StepResult::Stationary;
        }
        return gradient_sampling_step(obj, state, options);
    }
    let mut d = -(&state.h * &g);
    let mut slope = g.dot(&d);
    if !(slope < 0.0) {
        state.h = DMatrix::identity(g.len(), g.len());
        d = -g.clone();
        slope = -gnorm * gnorm;
    }
    if let Some((t, e, curvature)) = line_search(obj, &state.x, f, &d, slope) {
        let s = &d * t;
        let y = &e.gradients[0] - &state.eval.gradients[0];
        let sy = s.dot(&y);
        if curvature && sy > 1e-12 * s.norm() * y.norm() {
            if !state.scaled {
                state.h *= sy / y.norm_squared();
                state.scaled = true;
            }
            let rho = 1.0 / sy;
            let n = s.len();
            let v = DMatrix::identity(n, n) - &s * y.transpose() * rho;
            state.h = &v * &state.h * v.transpose() + &s * s.transpose() * rho;
        }
        state.x += s;
        state.eval = e;
        // BFGS can creep along a kink with steps that no longer pay off.
        if f - state.eval.value <= STALL * (1.0 + f.abs()) {
            return gradient_sampling_step(obj, state, options);
        }
        return StepResult::Moved;
    }
    gradient_sampling_step(obj, state, options)
}

fn gradient_sampling_step<O: NonsmoothObjective + ?Sized>(
    obj: &O,
    state: &mut StepState,
    options: &OptimizerOptions,
) -> StepResult {
    let n = state.x.len();
    let samples = (n + 1).min(30);
    while state.radius >= options.min_sampling_radius {
        let mut bundle = vec![state.eval.gradients[0].clone()];
        for _ in 0..samples {
            let mut u = DVector::from_fn(n, |_, _| state.rng.random_range(-1.0..1.0));
            let norm = u.norm();
            if norm > 0.0 {
                u *= state.radius * state.rng.random_range(0.0f64..1.0).powf(1.0 / n as f64) / norm;
            }
            if let Some(e) = obj.evaluate((&state.x + u).as_slice()) {
                bundle.push(e.gradients[0].clone());
            }
        }
        let w = min_norm_weights(&bundle);
        let g = bundle
            .iter()
            .zip(&w)
            .fold(DVector::zeros(n), |acc, (b, &l)| acc + b * l);
        let gnorm = g.norm();
        if gnorm <= options.stationarity_tol * (1.0 + state.eval.value.abs()) {
            state.radius *= 0.1;
            continue;
        }
        let d = -&g;
        let slope = -gnorm * gnorm;
        let mut t = state.radius / gnorm;
        let f = state.eval.value;
        for _ in 0..LINE_SEARCH_STEPS {
            if let Some(e) = obj.evaluate((&state.x + &d * t).as_slice()) {
                if e.value <= f + C1 * t * slope {
                    state.x += &d * t;
                    state.eval = e;
                    state.h = DMatrix::identity(n, n);
                    state.scaled = false;
                    return StepResult::Moved;
                }
            }
            t *= 0.5;
        }
        state.radius *= 0.1;
    }
    StepResult::NoDescent
}

/// Runs [`local_step`] from `x0` until stationarity, the target value, the
/// iteration cap, or failure to descend. Returns `None` if `x0` lies outside
/// the domain.
pub fn minimize<O: NonsmoothObjective + ?Sized>(
    obj: &O,
    x0: &[f64],
    options: &OptimizerOptions,
) -> Option<Outcome> {
    let eval = obj.evaluate(x0)?;
    let mut state = StepState::new(x0, eval, options);
    let finish = |state: &StepState, iterations, reason| Outcome {
        x: state.x.as_slice().to_vec(),
        value: state.eval.value,
        iterations,
        reason,
    };
    if obj.dim() == 0 {
        return Some(finish(&state, 0, StopReason::Stationary));
    }
    for it in 0..options.max_iter {
        if let Some(target) = options.target {
            if state.eval.value < target {
                return Some(finish(&state, it, StopReason::TargetReached));
            }
        }
        match local_step(obj, &mut state, options) {
            StepResult::Moved => {}
            StepResult::Stationary => return Some(finish(&state, it, StopReason::Stationary)),
            StepResult::NoDescent => return Some(finish(&state, it, StopReason::NoDescent)),
        }
    }
    let reason = match options.target {
        Some(t) if state.eval.value < t => StopReason::TargetReached,
        _ => StopReason::MaxIterations,
    };
    Some(finish(&state, options.max_iter, reason))
}
