use nalgebra::DMatrix;

use super::{ensure_finite, ensure_square, norm1, RealMatrix};
use crate::error::{KreissError, Result};

// Padé degree thresholds on the 1-norm (Higham, "The scaling and squaring
// method for the matrix exponential revisited").
const THETA: [(usize, f64); 4] = [
    (3, 1.495585217958292e-2),
    (5, 2.539398330063230e-1),
    (7, 9.504178996162932e-1),
    (9, 2.097847961257068),
];
const THETA_13: f64 = 5.371920351148152;

const B3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const B5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const B7: [f64; 8] = [
    17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0,
];
const B9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const B13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

/// Computes `e^{A t}` by scaling and squaring with a diagonal Padé approximant.
pub fn expm(a: &RealMatrix, t: f64) -> Result<RealMatrix> {
    ensure_square(a, "expm argument")?;
    ensure_finite(a, "expm argument")?;
    if !(t.is_finite() && t >= 0.0) {
        return Err(KreissError::InvalidArgument(format!(
            "expm time must be finite and nonnegative, got {t}"
        )));
    }
    let n = a.nrows();
    if n == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }
    let at = a * t;
    let norm = norm1(&at);

    for &(degree, theta) in THETA.iter() {
        if norm <= theta {
            let (u, v) = pade_low(&at, degree);
            return solve_pade(u, v);
        }
    }

    let squarings = if norm > THETA_13 {
        (norm / THETA_13).log2().ceil().max(0.0) as i32
    } else {
        0
    };
    let scaled = &at * 2f64.powi(-squarings);
    let (u, v) = pade13(&scaled);
    let mut result = solve_pade(u, v)?;
    for _ in 0..squarings {
        result = &result * &result;
    }
    Ok(result)
}

fn solve_pade(u: RealMatrix, v: RealMatrix) -> Result<RealMatrix> {
    let numer = &v + &u;
    let denom = v - u;
    denom
        .lu()
        .solve(&numer)
        .ok_or_else(|| KreissError::Numerical("singular Padé denominator".into()))
}

fn pade_low(a: &RealMatrix, degree: usize) -> (RealMatrix, RealMatrix) {
    let n = a.nrows();
    let b: &[f64] = match degree {
        3 => &B3,
        5 => &B5,
        7 => &B7,
        _ => &B9,
    };
    let ident = RealMatrix::identity(n, n);
    let a2 = a * a;
    // Even powers I, A², A⁴, ...
    let mut powers = vec![ident, a2.clone()];
    while powers.len() <= degree / 2 {
        let next = powers.last().unwrap() * &a2;
        powers.push(next);
    }
    let mut u_inner = RealMatrix::zeros(n, n);
    let mut v = RealMatrix::zeros(n, n);
    for (k, p) in powers.iter().enumerate() {
        if 2 * k + 1 <= degree {
            u_inner += p * b[2 * k + 1];
        }
        v += p * b[2 * k];
    }
    (a * u_inner, v)
}

fn pade13(a: &RealMatrix) -> (RealMatrix, RealMatrix) {
    let b = &B13;
    let n = a.nrows();
    let ident = RealMatrix::identity(n, n);
    let a2 = a * a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let u_hi = &a6 * b[13] + &a4 * b[11] + &a2 * b[9];
    let u_inner = &a6 * &u_hi + &a6 * b[7] + &a4 * b[5] + &a2 * b[3] + &ident * b[1];
    let u = a * u_inner;
    let v_hi = &a6 * b[12] + &a4 * b[10] + &a2 * b[8];
    let v = &a6 * &v_hi + &a6 * b[6] + &a4 * b[4] + &a2 * b[2] + &ident * b[0];
    (u, v)
}
