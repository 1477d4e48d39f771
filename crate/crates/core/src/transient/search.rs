use rayon::prelude::*;

use crate::error::Result;

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// `n` Chebyshev–Lobatto points `cos(πk/(n-1))` on `[-1, 1]`, ascending.
pub fn chebyshev_grid(n: usize) -> Vec<f64> {
    assert!(n >= 2);
    let mut g: Vec<f64> = (0..n)
        .map(|k| (std::f64::consts::PI * k as f64 / (n - 1) as f64).cos())
        .collect();
    g.reverse();
    g[0] = -1.0;
    g[n - 1] = 1.0;
    g
}

/// `n` equispaced points on `[-1, 1]`.
pub fn uniform_grid(n: usize) -> Vec<f64> {
    assert!(n >= 2);
    (0..n)
        .map(|k| -1.0 + 2.0 * k as f64 / (n - 1) as f64)
        .collect()
}

/// Maximizes a unimodal function on `[lo, hi]` by golden-section search,
/// returning the best point evaluated.
pub fn golden_max<T, F>(f: &F, lo: f64, hi: f64, width: f64) -> Result<(f64, f64, T)>
where
    F: Fn(f64) -> Result<(f64, T)>,
{
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut pc) = f(c)?;
    let (mut fd, mut pd) = f(d)?;
    while (b - a) > width {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            pd = pc;
            c = b - INV_PHI * (b - a);
            let (v, p) = f(c)?;
            fc = v;
            pc = p;
        } else {
            a = c;
            c = d;
            fc = fd;
            pc = pd;
            d = a + INV_PHI * (b - a);
            let (v, p) = f(d)?;
            fd = v;
            pd = p;
        }
    }
    if fc >= fd {
        Ok((c, fc, pc))
    } else {
        Ok((d, fd, pd))
    }
}

/// Result of a grid-plus-refinement maximization.
#[derive(Debug, Clone)]
pub struct GridMax<T> {
    pub arg: f64,
    pub value: f64,
    pub payload: T,
    /// Grid samples `(x, f(x))`.
    pub profile: Vec<(f64, f64)>,
}

/// Evaluates `f` on `grid` in parallel, refines every grid-local maximum with
/// golden-section search on its neighbouring cell, and returns the overall
/// maximum (lowest index wins ties, so the result is independent of the
/// thread count).
pub fn maximize_on_grid<T, F>(grid: &[f64], f: F, width: f64) -> Result<GridMax<T>>
where
    T: Send + Clone,
    F: Fn(f64) -> Result<(f64, T)> + Sync,
{
    let samples: Vec<(f64, T)> = grid
        .par_iter()
        .map(|&x| f(x))
        .collect::<Result<Vec<_>>>()?;
    let n = grid.len();
    let values: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let peaks: Vec<usize> = (0..n)
        .filter(|&i| {
            (i == 0 || values[i] > values[i - 1]) && (i + 1 == n || values[i] >= values[i + 1])
        })
        .collect();
    let refined: Vec<(f64, f64, T)> = peaks
        .par_iter()
        .map(|&i| {
            let lo = grid[i.saturating_sub(1)];
            let hi = grid[(i + 1).min(n - 1)];
            golden_max(&f, lo, hi, width)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut best_i = 0;
    for i in 1..n {
        if values[i] > values[best_i] {
            best_i = i;
        }
    }
    let mut best = (grid[best_i], values[best_i], samples[best_i].1.clone());
    for r in refined {
        if r.1 > best.1 {
            best = r;
        }
    }
    Ok(GridMax {
        arg: best.0,
        value: best.1,
        payload: best.2,
        profile: grid.iter().cloned().zip(values).collect(),
    })
}
