//! Virtual-array topology design: subset Vandermonde objectives, Fekete
//! points, grouped topologies and eigenvalue asymptotics.

mod eigen;
mod fekete;
mod vandermonde;

pub use eigen::{
    asymptotic_eigenvalues, asymptotic_eigenvalues_with_receiver, capacity, true_eigenvalues, EigenAsymptotics,
};
pub use fekete::{fekete_points, gauss_lobatto_nodes, FeketeSolution};
pub use vandermonde::{subset_sum, subset_vandermonde_objective, triangular_diagonals, DiagonalMethod};

use crate::config::{ScenarioConfig, TopologyChoice};
use crate::error::{Error, Result};

/// Normalized element spacings on [-1, 1], kept in nondecreasing order.
#[derive(Debug, Clone, PartialEq)]
pub struct TopologyVector {
    eta: Vec<f64>,
}

impl TopologyVector {
    pub fn new(mut eta: Vec<f64>) -> Result<Self> {
        if eta.is_empty() {
            return Err(Error::invalid("topology must have at least one element"));
        }
        if let Some(bad) = eta.iter().find(|e| !(-1.0..=1.0).contains(*e)) {
            return Err(Error::invalid(format!("eta entry {bad} outside [-1, 1]")));
        }
        eta.sort_by(f64::total_cmp);
        Ok(TopologyVector { eta })
    }

    /// Equispaced elements spanning [-1, 1] (a single element sits at 0).
    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("topology must have at least one element"));
        }
        if n == 1 {
            return Self::new(vec![0.0]);
        }
        Self::new(
            (0..n)
                .map(|i| -1.0 + 2.0 * i as f64 / (n - 1) as f64)
                .collect(),
        )
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.eta
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.eta
    }

    pub fn len(&self) -> usize {
        self.eta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eta.is_empty()
    }
}

/// Assigns UAV n (1-based) to group k with k-1 < nK/N <= k, every member of
/// group k sitting at `beta[k-1]`.
pub fn grouped_topology(n: usize, k: usize, beta: &[f64]) -> Result<TopologyVector> {
    if k == 0 || k > n {
        return Err(Error::invalid(format!("need 1 <= K <= N, got K={k}, N={n}")));
    }
    if beta.len() != k {
        return Err(Error::DimensionMismatch {
            expected: format!("{k} Fekete points"),
            got: beta.len().to_string(),
        });
    }
    let eta = (1..=n)
        .map(|i| {
            let group = (i * k).div_ceil(n);
            beta[group - 1]
        })
        .collect();
    TopologyVector::new(eta)
}

/// `(N/K)^K · Π_{a<b} (β_b - β_a)²`, the largest subset objective any
/// N-element topology can reach when β are the K Fekete points.
pub fn grouping_bound(n: usize, k: usize, beta: &[f64]) -> f64 {
    let mut prod = 1.0;
    for b in 0..beta.len() {
        for a in 0..b {
            prod *= (beta[b] - beta[a]).powi(2);
        }
    }
    (n as f64 / k as f64).powi(k as i32) * prod
}

/// Fekete-based topology for N elements carrying K streams. K = 1 places
/// every element at the center.
pub fn optimal_topology(n: usize, k: usize, tol: f64, starts: usize) -> Result<TopologyVector> {
    if k == 0 || k > n {
        return Err(Error::invalid(format!("need 1 <= K <= N, got K={k}, N={n}")));
    }
    if k == 1 {
        return TopologyVector::new(vec![0.0; n]);
    }
    let sol = fekete_points(k, tol, starts)?;
    grouped_topology(n, k, &sol.beta)
}

/// Per-axis topologies for planar (`nz = None`) or cube arrays.
pub fn tensor_fekete(
    nx: usize,
    ny: usize,
    nz: Option<usize>,
    kx: usize,
    ky: usize,
    kz: Option<usize>,
    tol: f64,
) -> Result<Vec<TopologyVector>> {
    let mut axes = vec![(nx, kx), (ny, ky)];
    match (nz, kz) {
        (Some(n), Some(k)) => axes.push((n, k)),
        (None, None) => {}
        _ => return Err(Error::invalid("Nz and Kz must be given together")),
    }
    axes.into_iter()
        .map(|(n, k)| optimal_topology(n, k, tol, 4))
        .collect()
}

/// Per-axis topologies for the array described by the configuration.
pub fn topology_from_config(config: &ScenarioConfig) -> Result<Vec<TopologyVector>> {
    let spec = &config.array;
    let tol = config.solver.fekete_tol;
    let starts = config.solver.fekete_starts;
    let axes = match spec.kind {
        crate::config::ArrayKindSpec::Linear => 1,
        crate::config::ArrayKindSpec::Planar => 2,
        crate::config::ArrayKindSpec::Cube => 3,
    };
    (0..axes)
        .map(|a| {
            let n = spec.axis_n[a];
            let k = spec.axis_k[a];
            match &spec.topology {
                TopologyChoice::Fekete => optimal_topology(n, k, tol, starts),
                TopologyChoice::Ula => TopologyVector::uniform(n),
                TopologyChoice::Custom(eta) if a == 0 => TopologyVector::new(eta.clone()),
                TopologyChoice::Custom(_) => TopologyVector::uniform(n),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grouped_examples() {
        let t = grouped_topology(4, 2, &[-1.0, 1.0]).unwrap();
        assert_eq!(t.as_slice(), &[-1.0, -1.0, 1.0, 1.0]);
        let t = grouped_topology(6, 3, &[-1.0, 0.0, 1.0]).unwrap();
        assert_eq!(t.as_slice(), &[-1.0, -1.0, 0.0, 0.0, 1.0, 1.0]);
        let beta = [-1.0, -0.4472135954999579, 0.4472135954999579, 1.0];
        let t = grouped_topology(4, 4, &beta).unwrap();
        assert_eq!(t.as_slice(), &beta);
        assert!(grouped_topology(2, 3, &[-1.0, 0.0, 1.0]).is_err());
    }

    #[test]
    fn grouped_uneven_split() {
        // N=5, K=2: nK/N = 0.4, 0.8 | 1.2, 1.6, 2.0
        let t = grouped_topology(5, 2, &[-1.0, 1.0]).unwrap();
        assert_eq!(t.as_slice(), &[-1.0, -1.0, 1.0, 1.0, 1.0]);
    }

    #[test]
    fn grouped_attains_bound() {
        let t = grouped_topology(4, 2, &[-1.0, 1.0]).unwrap();
        let f = subset_vandermonde_objective(t.as_slice(), 2).unwrap();
        assert!((f - 16.0).abs() < 1e-12);
        assert!((grouping_bound(4, 2, &[-1.0, 1.0]) - 16.0).abs() < 1e-12);
    }

    #[test]
    fn tensor_axes() {
        let axes = tensor_fekete(2, 2, None, 2, 2, None, 1e-12).unwrap();
        assert_eq!(axes[0].as_slice(), &[-1.0, 1.0]);
        assert_eq!(axes[1].as_slice(), &[-1.0, 1.0]);
        let axes = tensor_fekete(8, 8, None, 4, 4, None, 1e-12).unwrap();
        let sol = fekete_points(4, 1e-12, 4).unwrap();
        let want = grouped_topology(8, 4, &sol.beta).unwrap();
        assert_eq!(axes[0], want);
        assert_eq!(axes[1], want);
        let cube = tensor_fekete(4, 4, Some(4), 4, 4, Some(4), 1e-12).unwrap();
        assert_eq!(cube.len(), 3);
        assert_eq!(cube[0], cube[2]);
    }

    #[test]
    fn uniform_spacing() {
        assert_eq!(TopologyVector::uniform(3).unwrap().as_slice(), &[-1.0, 0.0, 1.0]);
        assert_eq!(TopologyVector::uniform(1).unwrap().as_slice(), &[0.0]);
    }
}
