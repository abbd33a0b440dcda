use crate::error::{Error, Result};
use crate::geometry::ula_grid;
use crate::linalg::{singular_values, CMat};

use super::vandermonde::{triangular_diagonals, DiagonalMethod};

/// Small-ν eigenvalue approximations of H̃H̃ᴴ.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenAsymptotics {
    pub lambda_asym: Vec<f64>,
    pub r_b: Vec<f64>,
    pub r_u: Vec<f64>,
    pub nu: f64,
    pub phi: f64,
}

/// λ_k ≈ (r_{B,k} r_{U,k} / (k-1)!)² (ν cos φ)^{2(k-1)} with the receive side
/// on the uniform grid (2m-1-M)/M.
pub fn asymptotic_eigenvalues(eta: &[f64], m: usize, k: usize, nu: f64, phi: f64) -> Result<EigenAsymptotics> {
    asymptotic_eigenvalues_with_receiver(eta, &ula_grid(m), k, nu, phi)
}

/// Same as [`asymptotic_eigenvalues`] for arbitrary receive positions ζ.
pub fn asymptotic_eigenvalues_with_receiver(
    eta: &[f64],
    zeta: &[f64],
    k: usize,
    nu: f64,
    phi: f64,
) -> Result<EigenAsymptotics> {
    if k > eta.len().min(zeta.len()) {
        return Err(Error::invalid(format!(
            "K={k} exceeds min(M={}, N={})",
            zeta.len(),
            eta.len()
        )));
    }
    if nu < 0.0 {
        return Err(Error::invalid("nu must be nonnegative"));
    }
    let rb2 = triangular_diagonals(zeta, k, DiagonalMethod::Formula)?;
    let ru2 = triangular_diagonals(eta, k, DiagonalMethod::Formula)?;
    let x = nu * phi.cos();
    let mut fact = 1.0;
    let lambda = (0..k)
        .map(|i| {
            if i > 0 {
                fact *= i as f64;
            }
            rb2[i] * ru2[i] / (fact * fact) * x.powi(2 * i as i32)
        })
        .collect();
    Ok(EigenAsymptotics {
        lambda_asym: lambda,
        r_b: rb2.iter().map(|v| v.sqrt()).collect(),
        r_u: ru2.iter().map(|v| v.sqrt()).collect(),
        nu,
        phi,
    })
}

/// Largest K eigenvalues of H̃H̃ᴴ, from squared singular values (accurate
/// for the tiny trailing eigenvalues).
pub fn true_eigenvalues(h_tilde: &CMat, k: usize) -> Vec<f64> {
    singular_values(h_tilde)
        .into_iter()
        .take(k)
        .map(|s| s * s)
        .collect()
}

/// Σ_k log₂(1 + γ λ_k / N).
pub fn capacity(lambda: &[f64], gamma: f64, n: usize) -> f64 {
    lambda
        .iter()
        .map(|&l| (1.0 + gamma * l.max(0.0) / n as f64).log2())
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::asymptotic_matrix;

    #[test]
    fn two_by_two_closed_form() {
        let nu = 0.05;
        let e = asymptotic_eigenvalues(&[-1.0, 1.0], 2, 2, nu, 0.0).unwrap();
        assert!((e.lambda_asym[0] - 4.0).abs() < 1e-12);
        assert!((e.lambda_asym[1] - nu * nu).abs() < 1e-14);
        let t = asymptotic_matrix(&ula_grid(2), &[-1.0, 1.0], nu, 0.0);
        let l = true_eigenvalues(&t, 2);
        assert!((l[0] - (2.0 + 2.0 * nu.cos())).abs() < 1e-12);
        assert!((l[1] - (2.0 - 2.0 * nu.cos())).abs() < 1e-12);
    }

    #[test]
    fn degenerate_angles() {
        let e = asymptotic_eigenvalues(&[-1.0, 0.0, 1.0], 3, 3, 0.3, std::f64::consts::FRAC_PI_2).unwrap();
        assert!(e.lambda_asym[1].abs() < 1e-30 && e.lambda_asym[2].abs() < 1e-30);
        let e = asymptotic_eigenvalues(&[-1.0, 0.0, 1.0], 4, 3, 0.0, 0.0).unwrap();
        assert!((e.lambda_asym[0] - 12.0).abs() < 1e-12);
        assert_eq!(e.lambda_asym[1], 0.0);
    }

    #[test]
    fn capacity_examples() {
        assert_eq!(capacity(&[4.0, 0.0], 0.0, 2), 0.0);
        assert!((capacity(&[4.0, 0.0], 10.0, 2) - 21f64.log2()).abs() < 1e-12);
    }
}
