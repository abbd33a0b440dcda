use statrs::function::gamma::gamma_ur;

use crate::channel::eve_channel_sample;
use crate::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::linalg::CMat;
use crate::rng::substream;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChanceConstraintParams {
    pub xi: f64,
    pub kappa: f64,
    pub q: usize,
    pub sigma_e2: f64,
}

impl ChanceConstraintParams {
    pub fn new(xi: f64, kappa: f64, q: usize, sigma_e2: f64) -> Result<Self> {
        if !(xi > 0.0) {
            return Err(Error::invalid("xi must be positive"));
        }
        if !(kappa > 0.0 && kappa < 1.0) {
            return Err(Error::invalid("kappa must lie in (0, 1)"));
        }
        if q < 1 {
            return Err(Error::invalid("Q must be at least 1"));
        }
        if !(sigma_e2 > 0.0) {
            return Err(Error::invalid("sigmaE2 must be positive"));
        }
        Ok(ChanceConstraintParams { xi, kappa, q, sigma_e2 })
    }
}

impl From<&ScenarioConfig> for ChanceConstraintParams {
    fn from(c: &ScenarioConfig) -> Self {
        ChanceConstraintParams {
            xi: c.xi,
            kappa: c.kappa,
            q: c.q,
            sigma_e2: c.sigma_e2,
        }
    }
}

/// t such that Pr(1/‖h‖² ≤ t) = p for h with N i.i.d. CN(0, 1) entries.
///
/// ‖h‖² is Gamma(N, 1), so Pr(1/‖h‖² ≤ t) = Q(N, 1/t) with Q the upper
/// regularized incomplete gamma function; 1/t is found by bisection.
pub fn inverse_chi_square_quantile(p: f64, n: usize) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::invalid(format!("probability {p} outside (0, 1)")));
    }
    if n < 1 {
        return Err(Error::invalid("N must be at least 1"));
    }
    let a = n as f64;
    // Q(a, y) decreases in y from 1 to 0.
    let mut lo = 0.0;
    let mut hi = a.max(1.0);
    while gamma_ur(a, hi) > p {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if gamma_ur(a, mid) > p {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    Ok(1.0 / (0.5 * (lo + hi)))
}

/// Largest c such that W Wᴴ ⪯ c I guarantees the Eve outage constraint.
pub fn spectral_cap(params: &ChanceConstraintParams, n: usize) -> Result<f64> {
    let p = 1.0 - params.kappa.powf(1.0 / params.q as f64);
    Ok(inverse_chi_square_quantile(p, n)? * params.xi * params.sigma_e2)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidationReport {
    pub trials: usize,
    pub xi: f64,
    pub kappa: f64,
    pub probability: f64,
    pub std_error: f64,
}

/// Fraction of trials in which every one of Q fresh Eve channels sees
/// aggregate SNR at most ξ. Trial t uses substream t of `seed`.
pub fn validate_chance_constraint(
    w: &CMat,
    params: &ChanceConstraintParams,
    samples: usize,
    seed: u64,
) -> ValidationReport {
    let n = w.nrows();
    let mut ok = 0usize;
    for t in 0..samples {
        let mut rng = substream(seed, t as u64);
        let mut worst: f64 = 0.0;
        for _ in 0..params.q {
            let h = eve_channel_sample(n, &mut rng);
            let leak: f64 = (w.adjoint() * &h).iter().map(|z| z.norm_sqr()).sum();
            worst = worst.max(leak / params.sigma_e2);
        }
        if worst <= params.xi {
            ok += 1;
        }
    }
    let p = ok as f64 / samples.max(1) as f64;
    ValidationReport {
        trials: samples,
        xi: params.xi,
        kappa: params.kappa,
        probability: p,
        std_error: (p * (1.0 - p) / samples.max(1) as f64).sqrt(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_quantiles() {
        let t = inverse_chi_square_quantile(0.5, 1).unwrap();
        assert!((t - 1.0 / 2f64.ln()).abs() < 1e-10);
        let p = 1.0 - 0.99f64.powf(1.0 / 3.0);
        let t = inverse_chi_square_quantile(p, 1).unwrap();
        assert!((t + 1.0 / p.ln()).abs() < 1e-10);
        assert!((t - 0.17542).abs() < 1e-4);
    }

    #[test]
    fn quantile_monotone_and_validated() {
        assert!(inverse_chi_square_quantile(0.0, 2).is_err());
        assert!(inverse_chi_square_quantile(1.0, 2).is_err());
        let a = inverse_chi_square_quantile(0.01, 4).unwrap();
        let b = inverse_chi_square_quantile(0.02, 4).unwrap();
        assert!(a < b);
        // Consistency with the gamma CDF.
        assert!((gamma_ur(4.0, 1.0 / a) - 0.01).abs() < 1e-12);
    }

    #[test]
    fn cap_scaling() {
        let p = ChanceConstraintParams::new(1.0, 0.99, 3, 1.0).unwrap();
        let c = spectral_cap(&p, 1).unwrap();
        assert!((c - 0.17542).abs() < 1e-4);
        let p2 = ChanceConstraintParams { xi: 2.0, ..p };
        assert!((spectral_cap(&p2, 1).unwrap() - 2.0 * c).abs() < 1e-14);
        let p3 = ChanceConstraintParams { kappa: 0.999999, ..p };
        assert!(spectral_cap(&p3, 1).unwrap() < 0.08);
    }

    #[test]
    fn zero_precoder_never_leaks() {
        let p = ChanceConstraintParams::new(1.0, 0.99, 3, 1.0).unwrap();
        let r = validate_chance_constraint(&CMat::zeros(4, 2), &p, 1000, 1);
        assert_eq!(r.probability, 1.0);
    }
}
