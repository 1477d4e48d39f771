//! Randomized invariants checked against independent brute-force oracles.
//! Shared by the core property tests and the acceptance suite.

use kreiss_core::matcore::{eigenvalues, expm, ComplexMatrix, RealMatrix};
use kreiss_core::synth::{scenario_run, ObjectiveKind, ScenarioStatus, SynthesisProblem};
use kreiss_core::sysmodel::{star, Partitioned, ProjectionJ, StateSpace};
use kreiss_core::transient::{
    h2_norm, hinf_norm, kreiss_constant, numerical_abscissa, spectral_abscissa, transient_growth,
    worst_case_energy,
};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use proptest::prelude::*;
use proptest::test_runner::{RngSeed, TestCaseError, TestRunner};

/// Trials per suite.
pub const CASES: u32 = 100;

fn config() -> ProptestConfig {
    ProptestConfig {
        cases: CASES,
        rng_seed: RngSeed::Fixed(0x6b72_6569_7373),
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}

fn spectral_norm(m: &RealMatrix) -> f64 {
    m.clone().svd(false, false).singular_values.max()
}

fn complex_norm(m: &ComplexMatrix) -> f64 {
    m.clone().svd(false, false).singular_values.max()
}

fn square(n: usize, entries: &[f64]) -> RealMatrix {
    DMatrix::from_row_slice(n, n, &entries[..n * n])
}

/// Shifts `m` so its spectral abscissa equals `-margin`.
fn stabilized(m: RealMatrix, margin: f64) -> RealMatrix {
    let n = m.nrows();
    let alpha = eigenvalues(&m).unwrap().abscissa();
    m - RealMatrix::identity(n, n) * (alpha + margin)
}

fn any_square(sizes: std::ops::RangeInclusive<usize>, scale: f64) -> impl Strategy<Value = RealMatrix> {
    sizes.prop_flat_map(move |n| {
        prop::collection::vec(-scale..scale, n * n).prop_map(move |v| square(n, &v))
    })
}

fn stable_square(sizes: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = RealMatrix> {
    (any_square(sizes, 2.0), 0.05..1.0f64).prop_map(|(m, margin)| stabilized(m, margin))
}

/// `Q D Qᵀ` with `Q` orthogonal and `D` built from real eigenvalues and
/// rotation blocks, so the result is normal with abscissa `max(diag)`.
fn normal_matrix(n: usize, re: &[f64], im: &[f64], q_seed: &[f64]) -> RealMatrix {
    let mut d = RealMatrix::zeros(n, n);
    let mut i = 0;
    while i < n {
        if i + 1 < n && im[i] != 0.0 {
            d[(i, i)] = re[i];
            d[(i + 1, i + 1)] = re[i];
            d[(i, i + 1)] = im[i];
            d[(i + 1, i)] = -im[i];
            i += 2;
        } else {
            d[(i, i)] = re[i];
            i += 1;
        }
    }
    let q = square(n, q_seed).qr().q();
    &q * d * q.transpose()
}

fn normal_stable() -> impl Strategy<Value = RealMatrix> {
    (2usize..=5).prop_flat_map(|n| {
        (
            prop::collection::vec(-3.0..-0.05f64, n),
            prop::collection::vec(prop_oneof![Just(0.0), -3.0..3.0f64], n),
            prop::collection::vec(-1.0..1.0f64, n * n),
        )
            .prop_map(move |(re, im, q)| normal_matrix(n, &re, &im, &q))
    })
}

fn restricted_block(a: &RealMatrix, s: Complex64, n: usize) -> ComplexMatrix {
    let total = a.nrows();
    let m = ComplexMatrix::identity(total, total) * s - a.map(|v| Complex64::new(v, 0.0));
    let inv = m.try_inverse().expect("s is not an eigenvalue");
    inv.view((0, 0), (n, n)).into_owned()
}

/// Direct maximization of `Re(s) ‖Jᵀ(sI - A)^{-1} J‖` over a log/sinh grid of
/// the right half-plane followed by a shrinking compass search from the best
/// grid points.
fn resolvent_grid_oracle(a: &RealMatrix, n: usize) -> f64 {
    let f = |x: f64, y: f64| -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        x * complex_norm(&restricted_block(a, Complex64::new(x, y), n))
    };
    let xs: Vec<f64> = (0..=80).map(|k| 10f64.powf(-3.0 + 7.0 * k as f64 / 80.0)).collect();
    let mut ys = vec![0.0];
    for k in 0..=90 {
        let y = 10f64.powf(-3.0 + 6.0 * k as f64 / 90.0);
        ys.push(y);
        ys.push(-y);
    }
    let mut samples: Vec<(f64, f64, f64)> = Vec::new();
    for &x in &xs {
        for &y in &ys {
            samples.push((f(x, y), x, y));
        }
    }
    samples.sort_by(|p, q| q.0.total_cmp(&p.0));
    let mut best = samples[0].0;
    for &(v0, x0, y0) in samples.iter().take(6) {
        let (mut v, mut lx, mut y) = (v0, x0.ln(), y0);
        let mut step = (0.1, 0.1 * (1.0 + y0.abs()));
        while step.0 > 1e-10 {
            let mut moved = false;
            for (dx, dy) in [(step.0, 0.0), (-step.0, 0.0), (0.0, step.1), (0.0, -step.1)] {
                let w = f((lx + dx).exp(), y + dy);
                if w > v {
                    v = w;
                    lx += dx;
                    y += dy;
                    moved = true;
                    break;
                }
            }
            if !moved {
                step = (step.0 * 0.5, step.1 * 0.5);
            }
        }
        best = best.max(v);
    }
    best
}

fn max_gain_at(sys: &StateSpace, omega: f64) -> f64 {
    complex_norm(&sys.evaluate(Complex64::new(0.0, omega)).unwrap())
}

/// Dense log grid over frequency, refined by golden section between the
/// neighbours of the best sample.
fn frequency_grid_oracle(sys: &StateSpace) -> f64 {
    let mut w = vec![0.0];
    w.extend((0..=20_000).map(|k| 10f64.powf(-4.0 + 8.0 * k as f64 / 20_000.0)));
    let gains: Vec<f64> = w.iter().map(|&o| max_gain_at(sys, o)).collect();
    let (i, &g) = gains.iter().enumerate().max_by(|p, q| p.1.total_cmp(q.1)).unwrap();
    let feedthrough = complex_norm(&sys.d().map(|v| Complex64::new(v, 0.0)));
    let (mut lo, mut hi) = (w[i.saturating_sub(1)], w[(i + 1).min(w.len() - 1)]);
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut best = g;
    while hi - lo > 1e-13 * hi.max(1.0) {
        let m1 = hi - phi * (hi - lo);
        let m2 = lo + phi * (hi - lo);
        let (g1, g2) = (max_gain_at(sys, m1), max_gain_at(sys, m2));
        best = best.max(g1).max(g2);
        if g1 >= g2 {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    best.max(feedthrough)
}

/// Two-state plants with `C = I` and a single input under a static gain.
fn toy_plant() -> impl Strategy<Value = StateSpace> {
    (prop::collection::vec(-2.0..2.0f64, 4), prop::collection::vec(-1.0..1.0f64, 2), 0.0..8.0f64).prop_map(
        |(a, b, skew)| {
            let mut a = square(2, &a);
            a[(0, 1)] += skew;
            StateSpace::new(
                a,
                DMatrix::from_column_slice(2, 1, &[b[0], 1.0 + b[1].abs()]),
                RealMatrix::identity(2, 2),
                RealMatrix::zeros(2, 1),
            )
            .unwrap()
        },
    )
}


fn check<S>(strategy: S, test: impl Fn(S::Value) -> Result<(), TestCaseError>) -> Result<(), String>
where
    S: Strategy,
    S::Value: std::fmt::Debug,
{
    TestRunner::new(config()).run(&strategy, test).map_err(|e| e.to_string())
}

fn sized_square(
    plant: std::ops::RangeInclusive<usize>,
    controller: std::ops::RangeInclusive<usize>,
) -> impl Strategy<Value = (usize, usize, Vec<f64>)> {
    (plant, controller).prop_flat_map(|(n, nk)| {
        (Just(n), Just(nk), prop::collection::vec(-2.0..2.0f64, (n + nk) * (n + nk)))
    })
}

/// `K ≤ M₀ ≤ e·n·K`.
pub fn kreiss_sandwich() -> Result<(), String> {
    check(stable_square(2..=4), |a| {
        let n = a.nrows();
        let j = ProjectionJ::identity(n);
        let k = kreiss_constant(&a, j, 1e-5).unwrap().value;
        let m0 = transient_growth(&a, j, 1e-8).unwrap().peak;
        prop_assert!(k <= m0 * (1.0 + 1e-4), "K = {k} exceeds M0 = {m0}");
        prop_assert!(m0 <= std::f64::consts::E * n as f64 * k, "M0 = {m0}, K = {k}");
        Ok(())
    })
}

/// `𝒦 ≤ 𝓜₀ ≤ e·N·𝒦` on random loops with `J = [I_n, 0]ᵀ`.
pub fn restricted_kreiss_sandwich() -> Result<(), String> {
    check((sized_square(1..=3, 0..=2), 0.05..1.0f64), |((n, nk, entries), margin)| {
        let total = n + nk;
        let a = stabilized(square(total, &entries), margin);
        let j = ProjectionJ::new(n, nk);
        let k = kreiss_constant(&a, j, 1e-5).unwrap().value;
        let m0 = transient_growth(&a, j, 1e-8).unwrap().peak;
        prop_assert!(k <= m0 * (1.0 + 1e-4), "K = {k} exceeds M0 = {m0}");
        // The restricted resolvent is rational of degree at most the loop order.
        prop_assert!(m0 <= std::f64::consts::E * total as f64 * k, "M0 = {m0}, K = {k}");
        Ok(())
    })
}

pub fn kreiss_at_least_one() -> Result<(), String> {
    check(stable_square(1..=4), |a| {
        let k = kreiss_constant(&a, ProjectionJ::identity(a.nrows()), 1e-6).unwrap().value;
        prop_assert!(k >= 1.0 - 1e-6, "K = {k}");
        Ok(())
    })
}

pub fn kreiss_of_normal_is_one() -> Result<(), String> {
    check(normal_stable(), |a| {
        let n = a.nrows();
        let k = kreiss_constant(&a, ProjectionJ::identity(n), 1e-6).unwrap().value;
        prop_assert!((k - 1.0).abs() <= 1e-5, "K = {k}");
        let m0 = transient_growth(&a, ProjectionJ::identity(n), 1e-8).unwrap().peak;
        prop_assert!((m0 - 1.0).abs() <= 1e-10, "M0 = {m0}");
        Ok(())
    })
}

/// `‖e^{At}‖ ≤ 1` for all `t ≥ 0` exactly when `ω(A) ≤ 0`.
pub fn contraction_iff_nonpositive_numerical_abscissa() -> Result<(), String> {
    check((any_square(2..=4, 2.0), -2.0..2.0f64), |(a, shift)| {
        let n = a.nrows();
        let a = a - RealMatrix::identity(n, n) * shift;
        let omega = numerical_abscissa(&a).unwrap();
        prop_assume!(omega.abs() > 1e-3);
        let times: Vec<f64> = (0..200).map(|k| 10f64.powf(-8.0 + 9.0 * k as f64 / 199.0)).collect();
        let peak = times
            .iter()
            .map(|&t| spectral_norm(&expm(&a, t).unwrap()))
            .fold(0.0, f64::max);
        if omega <= 0.0 {
            prop_assert!(peak <= 1.0 + 1e-12, "omega = {omega} but ‖e^(At)‖ reaches {peak}");
        } else {
            prop_assert!(peak > 1.0, "omega = {omega} > 0 yet no growth");
        }
        Ok(())
    })
}

pub fn exponential_bounded_by_numerical_abscissa() -> Result<(), String> {
    check((any_square(2..=4, 2.0), 0.0..5.0f64), |(a, t)| {
        let omega = numerical_abscissa(&a).unwrap();
        let g = spectral_norm(&expm(&a, t).unwrap());
        let bound = (omega * t).exp();
        prop_assert!(g <= bound * (1.0 + 1e-11), "‖e^(At)‖ = {g} > e^(ωt) = {bound}");
        Ok(())
    })
}

/// Forward difference of `‖e^{At}‖` at `0⁺` against `ω(A)`.
pub fn initial_slope_is_numerical_abscissa() -> Result<(), String> {
    check(any_square(2..=4, 2.0), |a| {
        let omega = numerical_abscissa(&a).unwrap();
        let norm_a = spectral_norm(&a);
        let h = 1e-6;
        let slope = (spectral_norm(&expm(&a, h).unwrap()) - 1.0) / h;
        let err = (slope - omega).abs();
        prop_assert!(err <= 2.0 * h * norm_a * norm_a + 1e-8, "slope {slope} vs omega {omega}");
        Ok(())
    })
}

pub fn normal_numerical_abscissa_is_spectral() -> Result<(), String> {
    check((normal_stable(), -3.0..3.0f64), |(a, shift)| {
        let n = a.nrows();
        let a = a + RealMatrix::identity(n, n) * shift;
        let omega = numerical_abscissa(&a).unwrap();
        let alpha = spectral_abscissa(&a).unwrap();
        prop_assert!((omega - alpha).abs() <= 1e-10 * (1.0 + alpha.abs()), "{omega} vs {alpha}");
        Ok(())
    })
}

pub fn hinf_matches_frequency_grid() -> Result<(), String> {
    let dims = (1usize..=5, 1usize..=3, 1usize..=3).prop_flat_map(|(n, m, p)| {
        (
            Just(n),
            Just(m),
            Just(p),
            prop::collection::vec(-1.5..1.5f64, n * n + n * m + p * n + p * m),
        )
    });
    check((dims, 0.05..1.0f64, any::<bool>()), |((n, m, p, entries), margin, with_d)| {
        let a = stabilized(square(n, &entries), margin);
        let mut rest = entries[n * n..].iter().copied();
        let b = DMatrix::from_iterator(n, m, rest.by_ref().take(n * m));
        let c = DMatrix::from_iterator(p, n, rest.by_ref().take(p * n));
        let d = DMatrix::from_iterator(p, m, rest.take(p * m)) * if with_d { 0.5 } else { 0.0 };
        let sys = StateSpace::new(a, b, c, d).unwrap();
        let tol = 1e-6;
        let h = hinf_norm(&sys, tol).unwrap();
        let oracle = frequency_grid_oracle(&sys);
        prop_assert!(oracle <= h.value * (1.0 + tol) * (1.0 + 1e-12), "grid {oracle} above {}", h.value);
        prop_assert!(h.value <= oracle * (1.0 + tol), "{} above grid {oracle}", h.value);
        if h.frequency.is_finite() {
            let attained = max_gain_at(&sys, h.frequency);
            prop_assert!(attained >= h.value * (1.0 - tol), "gain {attained} at reported frequency");
        }
        Ok(())
    })
}

/// Against the H₂ norm of `(A, J v, Jᵀ)` for every sign vector `v`.
pub fn worst_case_energy_matches_vertex_lyapunov() -> Result<(), String> {
    check((sized_square(1..=4, 0..=2), 0.05..1.0f64), |((n, nk, entries), margin)| {
        let total = n + nk;
        let a = stabilized(square(total, &entries), margin);
        let w = worst_case_energy(&a, ProjectionJ::new(n, nk)).unwrap();
        let mut jt = RealMatrix::zeros(n, total);
        jt.view_mut((0, 0), (n, n)).fill_with_identity();
        let mut oracle: f64 = 0.0;
        for mask in 0u32..(1 << n) {
            let mut x0 = DVector::zeros(total);
            for i in 0..n {
                x0[i] = if mask >> i & 1 == 1 { -1.0 } else { 1.0 };
            }
            let b = DMatrix::from_column_slice(total, 1, x0.as_slice());
            let sys = StateSpace::new(a.clone(), b, jt.clone(), RealMatrix::zeros(n, 1)).unwrap();
            oracle = oracle.max(h2_norm(&sys).unwrap());
        }
        prop_assert!((w.value - oracle).abs() <= 1e-8 * oracle.max(1.0), "{} vs {oracle}", w.value);
        Ok(())
    })
}

pub fn kreiss_matches_resolvent_grid() -> Result<(), String> {
    check((sized_square(1..=3, 0..=1), 0.1..1.0f64), |((n, nk, entries), margin)| {
        let total = n + nk;
        let a = stabilized(square(total, &entries), margin);
        let k = kreiss_constant(&a, ProjectionJ::new(n, nk), 1e-5).unwrap().value;
        let oracle = resolvent_grid_oracle(&a, n);
        prop_assert!(oracle <= k * 1.01, "grid {oracle} vs K = {k}");
        prop_assert!(k <= oracle * 1.01, "K = {k} vs grid {oracle}");
        Ok(())
    })
}

pub fn star_product_is_associative() -> Result<(), String> {
    let strategy = (
        prop::collection::vec(1usize..=3, 8),
        prop::collection::vec(-0.4..0.4f64, 2 * 3 * 36),
    );
    check(strategy, |(dims, entries)| {
        let mut it = entries.iter().copied();
        let mut block = |r: usize, c: usize| {
            DMatrix::from_fn(r, c, |_, _| Complex64::new(it.next().unwrap(), it.next().unwrap()))
        };
        // M1: (a + b) x (c + d); M2: (d + e) x (b + f); M3: (f + g) x (e + h).
        let (a, b, c, d, e, f, g, h) = (dims[0], dims[1], dims[2], dims[3], dims[4], dims[5], dims[6], dims[7]);
        let m1 = Partitioned::new(block(a + b, c + d), a, c).unwrap();
        let m2 = Partitioned::new(block(d + e, b + f), d, b).unwrap();
        let m3 = Partitioned::new(block(f + g, e + h), f, e).unwrap();
        let left = star(&star(&m1, &m2).unwrap(), &m3).unwrap();
        let right = star(&m1, &star(&m2, &m3).unwrap()).unwrap();
        prop_assert_eq!(left.splits(), right.splits());
        let diff = complex_norm(&(left.matrix() - right.matrix()));
        prop_assert!(diff <= 1e-12 * (1.0 + complex_norm(left.matrix())), "difference {diff}");
        Ok(())
    })
}

pub fn exponential_semigroup() -> Result<(), String> {
    check((any_square(1..=5, 2.0), 0.0..2.0f64, 0.0..2.0f64), |(a, s, t)| {
        let lhs = expm(&a, s + t).unwrap();
        let rhs = expm(&a, s).unwrap() * expm(&a, t).unwrap();
        prop_assert!(spectral_norm(&(&lhs - &rhs)) <= 1e-11 * (1.0 + spectral_norm(&lhs)));
        Ok(())
    })
}

/// `h_*` never decreases from one scenario round to the next and the loop
/// stops with a certified gap or at the scenario cap.
pub fn scenario_loop_lower_values_nondecreasing() -> Result<(), String> {
    check(toy_plant(), |plant| {
        let problem = SynthesisProblem::new(plant, 0, ObjectiveKind::Kreiss).unwrap();
        let (_, certified, state) = scenario_run(&problem, &problem.zero_controller(), 3).unwrap();
        prop_assert!(matches!(state.status, ScenarioStatus::Certified | ScenarioStatus::CapReached));
        prop_assert!(state.history.len() <= problem.max_scenarios + 1);
        for w in state.history.windows(2) {
            prop_assert!(w[1].h_lower >= w[0].h_lower * (1.0 - 1e-6), "h_* decreased: {:?}", state.history);
        }
        if state.status == ScenarioStatus::Certified {
            let last = state.history.last().unwrap();
            let upper = last.h_upper.unwrap();
            prop_assert!(upper < (1.0 + problem.scenario_tol) * last.h_lower);
            prop_assert!(certified >= last.h_lower * (1.0 - 1e-6));
        }
        Ok(())
    })
}

pub type Suite = (&'static str, fn() -> Result<(), String>);

pub const SUITES: [Suite; 14] = [
    ("kreiss sandwich", kreiss_sandwich),
    ("restricted kreiss sandwich", restricted_kreiss_sandwich),
    ("K >= 1", kreiss_at_least_one),
    ("K = 1 for normal matrices", kreiss_of_normal_is_one),
    ("contraction iff omega <= 0", contraction_iff_nonpositive_numerical_abscissa),
    ("exp growth bounded by omega", exponential_bounded_by_numerical_abscissa),
    ("initial slope equals omega", initial_slope_is_numerical_abscissa),
    ("omega = alpha for normal matrices", normal_numerical_abscissa_is_spectral),
    ("hinf vs frequency grid", hinf_matches_frequency_grid),
    ("worst-case energy vs vertex Lyapunov", worst_case_energy_matches_vertex_lyapunov),
    ("kreiss vs resolvent grid", kreiss_matches_resolvent_grid),
    ("star product associativity", star_product_is_associative),
    ("expm semigroup", exponential_semigroup),
    ("scenario loop h_* monotone", scenario_loop_lower_values_nondecreasing),
];
