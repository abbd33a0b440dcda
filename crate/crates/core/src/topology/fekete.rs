use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};

/// Fekete points on [-1, 1] with solver diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct FeketeSolution {
    pub beta: Vec<f64>,
    /// Π_{a<b} (β_b - β_a)².
    pub objective: f64,
    pub iterations: usize,
    pub starts: usize,
    /// Largest interior component of the log-objective gradient.
    pub stationarity: f64,
    /// Largest deviation from the Gauss–Lobatto nodes.
    pub lobatto_gap: f64,
}

fn squared_vandermonde(x: &[f64]) -> f64 {
    let mut p = 1.0;
    for b in 0..x.len() {
        for a in 0..b {
            p *= (x[b] - x[a]).powi(2);
        }
    }
    p
}

fn gradient(x: &[f64], i: usize) -> (f64, f64) {
    let mut g = 0.0;
    let mut scale = 0.0;
    for (j, &y) in x.iter().enumerate() {
        if j != i {
            let t = 1.0 / (x[i] - y);
            g += t;
            scale += t.abs();
        }
    }
    (g, scale)
}

/// Maximizes Σ_j log|x - x_j| for interior point i between its neighbors.
/// The derivative decreases monotonically from +∞ to -∞ on that interval,
/// so a safeguarded Newton iteration finds the unique root.
fn coordinate_update(x: &[f64], i: usize) -> f64 {
    let mut lo = x[i - 1];
    let mut hi = x[i + 1];
    let mut t = x[i].clamp(lo + 1e-3 * (hi - lo), hi - 1e-3 * (hi - lo));
    for _ in 0..100 {
        let mut g = 0.0;
        let mut h = 0.0;
        for (j, &y) in x.iter().enumerate() {
            if j != i {
                let r = 1.0 / (t - y);
                g += r;
                h -= r * r;
            }
        }
        if g > 0.0 {
            lo = t;
        } else {
            hi = t;
        }
        let mut next = t - g / h;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - t).abs() <= 1e-15 * (1.0 + t.abs()) {
            return next;
        }
        t = next;
    }
    t
}

/// Newton steps on all interior points at once.
fn newton_polish(x: &mut [f64], tol: f64) -> usize {
    let k = x.len();
    let interior = k - 2;
    let mut iters = 0;
    for _ in 0..50 {
        let mut g = DVector::zeros(interior);
        let mut h = DMatrix::zeros(interior, interior);
        let mut worst: f64 = 0.0;
        for a in 0..interior {
            let i = a + 1;
            let (gi, scale) = gradient(x, i);
            g[a] = gi;
            worst = worst.max(gi.abs() / scale.max(1.0));
            for (j, &y) in x.iter().enumerate() {
                if j != i {
                    let r2 = 1.0 / (x[i] - y).powi(2);
                    h[(a, a)] -= r2;
                    if (1..k - 1).contains(&j) {
                        h[(a, j - 1)] += r2;
                    }
                }
            }
        }
        if worst <= tol {
            break;
        }
        iters += 1;
        let Some(step) = (-h).cholesky().map(|c| c.solve(&g)) else {
            break;
        };
        // Shrink until ordering is preserved.
        let mut alpha = 1.0;
        loop {
            let trial: Vec<f64> = (0..k)
                .map(|i| if i == 0 || i == k - 1 { x[i] } else { x[i] + alpha * step[i - 1] })
                .collect();
            if trial.windows(2).all(|w| w[1] > w[0]) {
                x.copy_from_slice(&trial);
                break;
            }
            alpha *= 0.5;
            if alpha < 1e-12 {
                return iters;
            }
        }
    }
    iters
}

fn stationarity(x: &[f64]) -> f64 {
    (1..x.len() - 1)
        .map(|i| {
            let (g, s) = gradient(x, i);
            g.abs() / s.max(1.0)
        })
        .fold(0.0, f64::max)
}

fn ascend(mut x: Vec<f64>, tol: f64) -> (Vec<f64>, usize) {
    let k = x.len();
    let mut iterations = 0;
    for _ in 0..10_000 {
        iterations += 1;
        let mut change: f64 = 0.0;
        for i in 1..k - 1 {
            let t = coordinate_update(&x, i);
            change = change.max((t - x[i]).abs());
            x[i] = t;
        }
        if change < 1e-6 {
            break;
        }
    }
    iterations += newton_polish(&mut x, tol);
    (x, iterations)
}

/// Gauss–Lobatto nodes: ±1 and the roots of P'_{K-1}, ascending.
pub fn gauss_lobatto_nodes(k: usize) -> Vec<f64> {
    if k == 1 {
        return vec![0.0];
    }
    let n = k - 1;
    let mut x: Vec<f64> = (0..=n)
        .map(|i| (std::f64::consts::PI * i as f64 / n as f64).cos())
        .collect();
    for _ in 0..200 {
        let mut delta: f64 = 0.0;
        for xi in x.iter_mut() {
            let mut p_prev = 1.0;
            let mut p = *xi;
            for j in 2..=n {
                let next = ((2 * j - 1) as f64 * *xi * p - (j - 1) as f64 * p_prev) / j as f64;
                p_prev = p;
                p = next;
            }
            let (pn, pn1) = if n == 1 { (*xi, 1.0) } else { (p, p_prev) };
            let old = *xi;
            *xi = old - (old * pn - pn1) / ((n + 1) as f64 * pn);
            delta = delta.max((*xi - old).abs());
        }
        if delta < 1e-16 {
            break;
        }
    }
    x.sort_by(f64::total_cmp);
    x[0] = -1.0;
    x[n] = 1.0;
    x
}

/// K Fekete points of [-1, 1], maximizing the squared Vandermonde
/// determinant. Endpoints are pinned to ±1; interior points come from
/// multi-start coordinate ascent on the log objective followed by a Newton
/// polish, and the result is checked against the Gauss–Lobatto nodes.
pub fn fekete_points(k: usize, tol: f64, starts: usize) -> Result<FeketeSolution> {
    if k < 2 {
        return Err(Error::invalid("Fekete points need K >= 2"));
    }
    if !(tol > 0.0) {
        return Err(Error::invalid("tolerance must be positive"));
    }
    let starts = starts.max(1);
    let mut best: Option<(Vec<f64>, f64, usize)> = None;
    let mut total_iters = 0;
    for s in 0..starts {
        let mut init: Vec<f64> = if s == 0 {
            (0..k)
                .map(|i| -(std::f64::consts::PI * i as f64 / (k - 1) as f64).cos())
                .collect()
        } else {
            let mut rng = ChaCha12Rng::seed_from_u64(s as u64);
            let mut v: Vec<f64> = (0..k - 2).map(|_| rng.random_range(-0.999..0.999)).collect();
            v.push(-1.0);
            v.push(1.0);
            v
        };
        init.sort_by(f64::total_cmp);
        init.dedup();
        if init.len() != k {
            continue;
        }
        init[0] = -1.0;
        init[k - 1] = 1.0;
        let (x, it) = ascend(init, tol);
        total_iters += it;
        let obj = squared_vandermonde(&x);
        let better = match &best {
            None => true,
            Some((bx, bo, _)) => obj > *bo || (obj == *bo && x < *bx),
        };
        if better {
            best = Some((x, obj, it));
        }
    }
    let (beta, objective, _) = best.ok_or_else(|| Error::NonConvergence("no valid start".into()))?;
    let stat = stationarity(&beta);
    let lobatto = gauss_lobatto_nodes(k);
    let gap = beta
        .iter()
        .zip(lobatto.iter())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    if stat > tol.max(1e-10) || gap > 1e-8 {
        return Err(Error::NonConvergence(format!(
            "Fekete ascent for K={k}: stationarity {stat:.3e}, Gauss-Lobatto gap {gap:.3e}"
        )));
    }
    Ok(FeketeSolution {
        beta,
        objective,
        iterations: total_iters,
        starts,
        stationarity: stat,
        lobatto_gap: gap,
    })
}
