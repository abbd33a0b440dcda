//! Line-of-sight MIMO channel, its asymptotic factorization, the truncated
//! Vandermonde expansion, and Rayleigh eavesdropper channels.
//!
//! Phase convention: `h_{m,n} = ρ(R) exp(-j k τ_{m,n})` with `k = 2π f_c / c`
//! and carrier time fixed at zero. With this sign the diagonal factors and
//! the asymptotic matrix below reproduce the channel exactly (approx ranges).

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::config::RangeMode;
use crate::error::{Error, Result};
use crate::geometry::{range_matrix, uav_positions, ArrayGeometry, ArrayKind, BsGeometry, BsLayout};
use crate::linalg::{cis, CMat, CVec, C64};

/// Physical constants needed to build a channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Radio {
    pub f_c: f64,
    pub c: f64,
}

impl Radio {
    pub fn wavenumber(&self) -> f64 {
        2.0 * PI * self.f_c / self.c
    }

    /// Free-space attenuation ρ(R) = c / (4π f_c R).
    pub fn attenuation(&self, range: f64) -> f64 {
        self.c / (4.0 * PI * self.f_c * range)
    }
}

impl From<&crate::config::ScenarioConfig> for Radio {
    fn from(c: &crate::config::ScenarioConfig) -> Self {
        Radio { f_c: c.f_c, c: c.c }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix {
    /// M×N complex entries.
    pub h: CMat,
    pub rho: f64,
    pub range_r: f64,
    /// False when R < 10 L, where the equal-attenuation far-field model is
    /// questionable.
    pub far_field: bool,
}

/// Exact LoS channel between the transmit array and the BS.
pub fn exact_channel(array: &ArrayGeometry, bs: &BsGeometry, radio: Radio, mode: RangeMode) -> ChannelMatrix {
    let k = radio.wavenumber();
    let rho = radio.attenuation(bs.range_r);
    let ranges = range_matrix(array, bs, mode);
    let m = ranges.len();
    let n = array.len();
    let h = CMat::from_fn(m, n, |i, j| cis(-k * ranges[i][j]) * rho);
    let span = array.aperture.iter().cloned().fold(0.0, f64::max);
    ChannelMatrix {
        h,
        rho,
        range_r: bs.range_r,
        far_field: bs.range_r >= 10.0 * span,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoticFactorization {
    pub g_b: CVec,
    pub g_u: CVec,
    pub h_tilde: CMat,
    pub nu: f64,
    /// Common factor `exp(-j k R)`.
    pub common_phase: C64,
    pub rho: f64,
}

impl AsymptoticFactorization {
    /// `common_phase · ρ · diag(G_B) · H̃ · diag(G_U)`.
    pub fn reconstruct(&self) -> CMat {
        let scale = self.common_phase * self.rho;
        CMat::from_fn(self.h_tilde.nrows(), self.h_tilde.ncols(), |i, j| {
            scale * self.g_b[i] * self.h_tilde[(i, j)] * self.g_u[j]
        })
    }
}

fn linear_bs(bs: &BsGeometry) -> Result<(usize, f64, &[f64])> {
    match &bs.layout {
        BsLayout::Linear { m, spacing_d, zeta } => Ok((*m, *spacing_d, zeta.as_slice())),
        BsLayout::Planar { .. } => Err(Error::invalid("asymptotic factorization requires a linear BS")),
    }
}

/// ν = (π f_c / c) · d M L / (2R).
pub fn nu_parameter(radio: Radio, spacing_d: f64, m: usize, aperture: f64, range: f64) -> f64 {
    PI * radio.f_c / radio.c * spacing_d * m as f64 * aperture / (2.0 * range)
}

/// `H̃_{m,n} = exp(j ν ζ_m η_n cos φ)`.
pub fn asymptotic_matrix(zeta: &[f64], eta: &[f64], nu: f64, phi: f64) -> CMat {
    let c = phi.cos();
    CMat::from_fn(zeta.len(), eta.len(), |i, j| cis(nu * zeta[i] * eta[j] * c))
}

pub fn asymptotic_factorization(array: &ArrayGeometry, bs: &BsGeometry, radio: Radio) -> Result<AsymptoticFactorization> {
    if array.kind != ArrayKind::Linear {
        return Err(Error::invalid("asymptotic factorization requires a linear transmit array"));
    }
    let (m, d, zeta) = linear_bs(bs)?;
    let k = radio.wavenumber();
    let r = bs.range_r;
    let l = array.aperture_l();
    let phi = array.rotation_phi;
    let u = bs.direction();
    let nu = nu_parameter(radio, d, m, l, r);

    let g_b = CVec::from_iterator(
        m,
        zeta.iter().map(|&z| {
            let x = z * m as f64 * d / 2.0;
            cis(-k * (x * x / (2.0 * r) + x * u[0]))
        }),
    );
    let centered = array.clone().with_center([0.0; 3]);
    let g_u = CVec::from_iterator(
        array.len(),
        array.eta.iter().zip(uav_positions(&centered)).map(|(&e, p)| {
            let le = l * e;
            cis(-k * (le * le / (8.0 * r) - (u[0] * p[0] + u[1] * p[1])))
        }),
    );
    Ok(AsymptoticFactorization {
        g_b,
        g_u,
        h_tilde: asymptotic_matrix(zeta, &array.eta, nu, phi),
        nu,
        common_phase: cis(-k * r),
        rho: radio.attenuation(r),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct VandermondeTruncation {
    pub v_b: nalgebra::DMatrix<f64>,
    pub v_u: nalgebra::DMatrix<f64>,
    pub a_diag: CVec,
    pub order_p: usize,
}

impl VandermondeTruncation {
    /// `V_B diag(A) V_U^T`.
    pub fn reconstruct(&self) -> CMat {
        let m = self.v_b.nrows();
        let n = self.v_u.nrows();
        CMat::from_fn(m, n, |i, j| {
            (0..self.order_p)
                .map(|p| self.a_diag[p] * (self.v_b[(i, p)] * self.v_u[(j, p)]))
                .sum()
        })
    }
}

/// Default truncation order, max(M, K) + 8.
pub fn default_order(m: usize, k: usize) -> usize {
    m.max(k) + 8
}

/// Taylor truncation of H̃ from explicit receive positions ζ and η.
pub fn vandermonde_from_nodes(zeta: &[f64], eta: &[f64], nu: f64, phi: f64, order_p: usize) -> Result<VandermondeTruncation> {
    if order_p < 1 {
        return Err(Error::invalid("truncation order must be at least 1"));
    }
    let v_b = nalgebra::DMatrix::from_fn(zeta.len(), order_p, |i, p| zeta[i].powi(p as i32));
    let v_u = nalgebra::DMatrix::from_fn(eta.len(), order_p, |i, p| eta[i].powi(p as i32));
    let base = C64::new(0.0, nu * phi.cos());
    let mut a = Vec::with_capacity(order_p);
    let mut term = C64::new(1.0, 0.0);
    for p in 0..order_p {
        if p > 0 {
            term = term * base / p as f64;
        }
        a.push(term);
    }
    Ok(VandermondeTruncation {
        v_b,
        v_u,
        a_diag: CVec::from_vec(a),
        order_p,
    })
}

pub fn vandermonde_truncation(array: &ArrayGeometry, bs: &BsGeometry, radio: Radio, order_p: usize) -> Result<VandermondeTruncation> {
    if array.kind != ArrayKind::Linear {
        return Err(Error::invalid("Vandermonde truncation requires a linear transmit array"));
    }
    let (m, d, zeta) = linear_bs(bs)?;
    let nu = nu_parameter(radio, d, m, array.aperture_l(), bs.range_r);
    vandermonde_from_nodes(zeta, &array.eta, nu, array.rotation_phi, order_p)
}

/// Taylor remainder bound ν^P / P! · e^ν for the truncation at order P.
pub fn truncation_bound(nu: f64, order_p: usize) -> f64 {
    let mut fact = 1.0;
    for i in 1..=order_p {
        fact *= i as f64;
    }
    nu.abs().powi(order_p as i32) / fact * nu.abs().exp()
}

/// One eavesdropper channel with i.i.d. CN(0, 1) entries.
pub fn eve_channel_sample<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CVec {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    CVec::from_fn(n, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re * s, im * s)
    })
}

/// Single-antenna LoS channel from every transmit element to `point`
/// (array frame), with per-element attenuation. Row vector as a column:
/// the received amplitude is `h^T s`.
pub fn point_channel(tx: &[[f64; 3]], point: [f64; 3], radio: Radio) -> CVec {
    let k = radio.wavenumber();
    CVec::from_iterator(
        tx.len(),
        tx.iter().map(|&p| {
            let r = crate::geometry::propagation_range(p, point);
            cis(-k * r) * radio.attenuation(r)
        }),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::singular_values;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_4};

    const RADIO: Radio = Radio { f_c: 1e9, c: 3e8 };

    fn sample_setup() -> (ArrayGeometry, BsGeometry) {
        let a = ArrayGeometry::linear(vec![-1.0, -0.45, 0.2, 1.0], 10.0, 0.3).unwrap();
        let bs = BsGeometry::linear(8, 0.15, 300.0, FRAC_PI_3, FRAC_PI_4).unwrap();
        (a, bs)
    }

    #[test]
    fn magnitudes_equal_rho() {
        let (a, bs) = sample_setup();
        let ch = exact_channel(&a, &bs, RADIO, RangeMode::Exact);
        let rho = 0.3 / (4.0 * PI * 300.0);
        assert!((ch.rho - rho).abs() < 1e-18);
        assert!((ch.rho - 7.957747e-5).abs() < 1e-10);
        for z in ch.h.iter() {
            assert!((z.norm() - rho).abs() < 1e-15);
        }
        assert!(ch.far_field);
    }

    #[test]
    fn scalar_phase_matches_range() {
        let a = ArrayGeometry::linear(vec![0.0], 10.0, 0.0).unwrap();
        let bs = BsGeometry::linear(1, 0.15, 321.7, 0.4, 1.0).unwrap();
        let ch = exact_channel(&a, &bs, RADIO, RangeMode::Exact);
        let k = RADIO.wavenumber();
        let want = cis(-k * 321.7) * RADIO.attenuation(321.7);
        assert!((ch.h[(0, 0)] - want).norm() < 1e-14);
    }

    #[test]
    fn nu_example() {
        let nu = nu_parameter(RADIO, 0.15, 8, 10.0, 300.0);
        assert!((nu - 0.20943951023931953).abs() < 1e-12);
    }

    #[test]
    fn factorization_reconstructs_approx_channel() {
        let (a, bs) = sample_setup();
        let f = asymptotic_factorization(&a, &bs, RADIO).unwrap();
        let h = exact_channel(&a, &bs, RADIO, RangeMode::Approx).h;
        let rec = f.reconstruct();
        for (x, y) in h.iter().zip(rec.iter()) {
            assert!((x - y).norm() <= 1e-9 * x.norm());
        }
        for z in f.g_b.iter().chain(f.g_u.iter()).chain(f.h_tilde.iter()) {
            assert!((z.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn h_tilde_limits() {
        let zeta = crate::geometry::ula_grid(4);
        let eta = [-1.0, 0.3, 1.0];
        let t = asymptotic_matrix(&zeta, &eta, 0.0, 0.0);
        assert!(t.iter().all(|z| (z - C64::new(1.0, 0.0)).norm() < 1e-15));
        let t = asymptotic_matrix(&zeta, &eta, 0.7, FRAC_PI_2);
        assert!(t.iter().all(|z| (z - C64::new(1.0, 0.0)).norm() < 1e-15));
    }

    #[test]
    fn singular_values_scale_by_rho() {
        let (a, bs) = sample_setup();
        let f = asymptotic_factorization(&a, &bs, RADIO).unwrap();
        let h = exact_channel(&a, &bs, RADIO, RangeMode::Approx);
        let s1 = singular_values(&h.h);
        let s2 = singular_values(&f.h_tilde);
        for (x, y) in s1.iter().zip(s2.iter()) {
            assert!((x - f.rho * y).abs() <= 1e-8 * (f.rho * s2[0]));
        }
    }

    #[test]
    fn vandermonde_examples() {
        let zeta = crate::geometry::ula_grid(4);
        let eta = vec![-1.0, -0.2, 0.5, 1.0];
        let t1 = vandermonde_from_nodes(&zeta, &eta, 0.2, 0.1, 1).unwrap();
        assert!(t1.reconstruct().iter().all(|z| (z - C64::new(1.0, 0.0)).norm() < 1e-15));

        let t = vandermonde_from_nodes(&zeta, &eta, 0.2, 0.0, 12).unwrap();
        let exact = asymptotic_matrix(&zeta, &eta, 0.2, 0.0);
        let err = (t.reconstruct() - exact).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(err <= 1e-10);
        assert!(err <= truncation_bound(0.2, 12) + 1e-15);
        for (m, &z) in zeta.iter().enumerate() {
            for p in 0..12 {
                assert_eq!(t.v_b[(m, p)], z.powi(p as i32));
            }
        }
        assert!(vandermonde_from_nodes(&zeta, &eta, 0.2, 0.0, 0).is_err());
    }

    #[test]
    fn eve_samples_reproducible() {
        let mut r1 = ChaCha12Rng::seed_from_u64(3);
        let mut r2 = ChaCha12Rng::seed_from_u64(3);
        assert_eq!(eve_channel_sample(4, &mut r1), eve_channel_sample(4, &mut r2));
    }
}
