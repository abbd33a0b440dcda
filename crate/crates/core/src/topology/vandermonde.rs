use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Largest number of subsets enumerated explicitly.
const ENUMERATION_LIMIT: f64 = 1e6;

fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn enumerate(eta: &[f64], k: usize) -> f64 {
    fn walk(eta: &[f64], start: usize, left: usize, chosen: &mut Vec<f64>, prod: f64, acc: &mut f64) {
        if left == 0 {
            *acc += prod;
            return;
        }
        for j in start..=eta.len() - left {
            let x = eta[j];
            let mut p = prod;
            for &y in chosen.iter() {
                p *= (x - y) * (x - y);
            }
            if p == 0.0 {
                continue;
            }
            chosen.push(x);
            walk(eta, j + 1, left - 1, chosen, p, acc);
            chosen.pop();
        }
    }
    let mut acc = 0.0;
    walk(eta, 0, k, &mut Vec::with_capacity(k), 1.0, &mut acc);
    acc
}

fn vandermonde(eta: &[f64], k: usize) -> DMatrix<f64> {
    DMatrix::from_fn(eta.len(), k, |i, p| eta[i].powi(p as i32))
}

/// Σ over all k-subsets of Π_{a<b} (η_b - η_a)², with the empty product
/// equal to 1 (so k = 1 gives N and k = 0 gives 1).
///
/// Small cases are enumerated; larger ones use Cauchy–Binet, where the sum
/// equals det(VᵀV) for the N×k Vandermonde matrix V, evaluated as the
/// product of squared triangular diagonals.
pub fn subset_sum(eta: &[f64], k: usize) -> f64 {
    let n = eta.len();
    if k == 0 {
        return 1.0;
    }
    if k > n {
        return 0.0;
    }
    if binomial(n, k) <= ENUMERATION_LIMIT {
        enumerate(eta, k)
    } else {
        let qr = vandermonde(eta, k).qr();
        qr.r().diagonal().iter().map(|r| r * r).product()
    }
}

pub fn subset_vandermonde_objective(eta: &[f64], k: usize) -> Result<f64> {
    if k > eta.len() {
        return Err(Error::invalid(format!("K={k} exceeds N={}", eta.len())));
    }
    Ok(subset_sum(eta, k))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiagonalMethod {
    /// Ratio of consecutive subset sums.
    Formula,
    /// Squared diagonal of R in V = QR.
    Qr,
}

fn distinct_count(eta: &[f64]) -> usize {
    let mut v = eta.to_vec();
    v.sort_by(f64::total_cmp);
    let mut count = 0;
    let mut last = f64::NEG_INFINITY;
    for x in v {
        if x - last > 1e-12 {
            count += 1;
            last = x;
        }
    }
    count
}

/// Squared diagonals r²_1..r²_K of the triangular factor of the N×K
/// Vandermonde matrix of `eta`.
pub fn triangular_diagonals(eta: &[f64], k: usize, method: DiagonalMethod) -> Result<Vec<f64>> {
    if k > eta.len() {
        return Err(Error::invalid(format!("K={k} exceeds N={}", eta.len())));
    }
    match method {
        DiagonalMethod::Formula => {
            let sums: Vec<f64> = (0..=k).map(|j| subset_sum(eta, j)).collect();
            Ok((1..=k)
                .map(|j| if sums[j - 1] > 0.0 { sums[j] / sums[j - 1] } else { 0.0 })
                .collect())
        }
        DiagonalMethod::Qr => {
            let distinct = distinct_count(eta);
            if distinct < k {
                return Err(Error::RankDeficient { distinct, k });
            }
            let qr = vandermonde(eta, k).qr();
            Ok(qr.r().diagonal().iter().map(|r| r * r).collect())
        }
    }
}
