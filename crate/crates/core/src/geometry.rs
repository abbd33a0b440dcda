//! UAV and BS element coordinates, propagation ranges, and rotation offsets.
//!
//! All coordinates are in the array frame: origin at the virtual-array
//! center, `x` parallel to the BS array rows, `z` pointing to the ground.

use rand::Rng;

use crate::config::{ArrayKindSpec, BsKindSpec, RangeMode, ScenarioConfig};
use crate::error::{Error, Result};

pub type Point3 = [f64; 3];
pub type Point2 = [f64; 2];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArrayKind {
    Linear,
    Planar,
    Cube,
}

/// Transmit virtual array formed by the UAVs.
///
/// For the linear kind only `eta` (the x axis) is used. Planar arrays use
/// `eta` and `eta_y`; cube arrays additionally use `eta_z`. Elements are
/// ordered with the x index fastest, then y, then z.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrayGeometry {
    pub kind: ArrayKind,
    pub eta: Vec<f64>,
    pub eta_y: Vec<f64>,
    pub eta_z: Vec<f64>,
    /// Apertures along x, y, z in meters. The linear kind uses `aperture[0]`.
    pub aperture: [f64; 3],
    pub rotation_phi: f64,
    pub center: Point3,
}

fn check_eta(eta: &[f64], what: &str) -> Result<()> {
    if eta.is_empty() {
        return Err(Error::invalid(format!("{what} must not be empty")));
    }
    if let Some(bad) = eta.iter().find(|e| !(-1.0..=1.0).contains(*e)) {
        return Err(Error::invalid(format!("{what} entry {bad} outside [-1, 1]")));
    }
    Ok(())
}

impl ArrayGeometry {
    pub fn linear(eta: Vec<f64>, aperture: f64, rotation_phi: f64) -> Result<Self> {
        check_eta(&eta, "eta")?;
        if !(aperture > 0.0) {
            return Err(Error::invalid("aperture must be positive"));
        }
        Ok(ArrayGeometry {
            kind: ArrayKind::Linear,
            eta,
            eta_y: vec![0.0],
            eta_z: vec![0.0],
            aperture: [aperture, aperture, aperture],
            rotation_phi,
            center: [0.0; 3],
        })
    }

    pub fn planar(eta_x: Vec<f64>, eta_y: Vec<f64>, lx: f64, ly: f64, rotation_phi: f64) -> Result<Self> {
        check_eta(&eta_x, "eta_x")?;
        check_eta(&eta_y, "eta_y")?;
        if !(lx > 0.0 && ly > 0.0) {
            return Err(Error::invalid("apertures must be positive"));
        }
        Ok(ArrayGeometry {
            kind: ArrayKind::Planar,
            eta: eta_x,
            eta_y,
            eta_z: vec![0.0],
            aperture: [lx, ly, lx],
            rotation_phi,
            center: [0.0; 3],
        })
    }

    pub fn cube(
        eta_x: Vec<f64>,
        eta_y: Vec<f64>,
        eta_z: Vec<f64>,
        apertures: [f64; 3],
        rotation_phi: f64,
    ) -> Result<Self> {
        check_eta(&eta_x, "eta_x")?;
        check_eta(&eta_y, "eta_y")?;
        check_eta(&eta_z, "eta_z")?;
        if !apertures.iter().all(|&a| a > 0.0) {
            return Err(Error::invalid("apertures must be positive"));
        }
        Ok(ArrayGeometry {
            kind: ArrayKind::Cube,
            eta: eta_x,
            eta_y,
            eta_z,
            aperture: apertures,
            rotation_phi,
            center: [0.0; 3],
        })
    }

    pub fn with_center(mut self, center: Point3) -> Self {
        self.center = center;
        self
    }

    pub fn with_rotation(mut self, phi: f64) -> Self {
        self.rotation_phi = phi;
        self
    }

    pub fn aperture_l(&self) -> f64 {
        self.aperture[0]
    }

    /// Number of transmit elements N.
    pub fn len(&self) -> usize {
        match self.kind {
            ArrayKind::Linear => self.eta.len(),
            ArrayKind::Planar => self.eta.len() * self.eta_y.len(),
            ArrayKind::Cube => self.eta.len() * self.eta_y.len() * self.eta_z.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Element coordinates of the transmit array, center offset included.
pub fn uav_positions(array: &ArrayGeometry) -> Vec<Point3> {
    let (s, c) = array.rotation_phi.sin_cos();
    let [lx, ly, lz] = array.aperture;
    let [ox, oy, oz] = array.center;
    match array.kind {
        ArrayKind::Linear => array
            .eta
            .iter()
            .map(|&e| [ox + lx * e * c / 2.0, oy + lx * e * s / 2.0, oz])
            .collect(),
        ArrayKind::Planar | ArrayKind::Cube => {
            let zs: &[f64] = if array.kind == ArrayKind::Cube {
                &array.eta_z
            } else {
                &[0.0]
            };
            let mut out = Vec::with_capacity(array.len());
            for &ez in zs {
                for &ey in &array.eta_y {
                    for &ex in &array.eta {
                        let u = lx * ex;
                        let v = ly * ey;
                        out.push([
                            ox + (u * c - v * s) / 2.0,
                            oy + (u * s + v * c) / 2.0,
                            oz + lz * ez / 2.0,
                        ]);
                    }
                }
            }
            out
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum BsLayout {
    /// ULA along x. `zeta` holds the normalized positions, `(2m-1-M)/M`
    /// for the uniform grid, so element m sits at `zeta_m * M * d / 2`.
    Linear { m: usize, spacing_d: f64, zeta: Vec<f64> },
    Planar { mx: usize, my: usize, dx: f64, dy: f64 },
}

/// Receive array at the BS, placed at range R, elevation θ and azimuth φ
/// from the transmit-array center.
#[derive(Debug, Clone, PartialEq)]
pub struct BsGeometry {
    pub layout: BsLayout,
    pub range_r: f64,
    pub elevation_theta: f64,
    pub azimuth_varphi: f64,
}

/// `(2m-1-M)/M` for m = 1..M.
pub fn ula_grid(m: usize) -> Vec<f64> {
    (1..=m)
        .map(|i| (2.0 * i as f64 - 1.0 - m as f64) / m as f64)
        .collect()
}

impl BsGeometry {
    pub fn linear(m: usize, spacing_d: f64, range_r: f64, theta: f64, varphi: f64) -> Result<Self> {
        if m < 1 {
            return Err(Error::invalid("M must be at least 1"));
        }
        Self::with_layout(
            BsLayout::Linear {
                m,
                spacing_d,
                zeta: ula_grid(m),
            },
            range_r,
            theta,
            varphi,
        )
    }

    /// Linear BS whose elements sit at arbitrary normalized positions.
    pub fn linear_with_positions(zeta: Vec<f64>, spacing_d: f64, range_r: f64, theta: f64, varphi: f64) -> Result<Self> {
        if zeta.is_empty() {
            return Err(Error::invalid("M must be at least 1"));
        }
        Self::with_layout(
            BsLayout::Linear {
                m: zeta.len(),
                spacing_d,
                zeta,
            },
            range_r,
            theta,
            varphi,
        )
    }

    pub fn planar(mx: usize, my: usize, dx: f64, dy: f64, range_r: f64, theta: f64, varphi: f64) -> Result<Self> {
        if mx < 1 || my < 1 {
            return Err(Error::invalid("Mx and My must be at least 1"));
        }
        if !(dx > 0.0 && dy > 0.0) {
            return Err(Error::invalid("spacings must be positive"));
        }
        Self::with_layout(BsLayout::Planar { mx, my, dx, dy }, range_r, theta, varphi)
    }

    fn with_layout(layout: BsLayout, range_r: f64, theta: f64, varphi: f64) -> Result<Self> {
        if let BsLayout::Linear { spacing_d, .. } = &layout {
            if !(*spacing_d > 0.0) {
                return Err(Error::invalid("spacing_d must be positive"));
            }
        }
        if !(range_r > 0.0) {
            return Err(Error::invalid("range R must be positive"));
        }
        Ok(BsGeometry {
            layout,
            range_r,
            elevation_theta: theta,
            azimuth_varphi: varphi,
        })
    }

    /// BS geometry seen from a UAV-array center at `altitude` above the
    /// ground, with the BS center at ground point `bs`.
    pub fn from_positions(template: &BsLayout, center: Point2, bs: Point2, altitude: f64) -> Result<Self> {
        let dx = bs[0] - center[0];
        let dy = bs[1] - center[1];
        let r = (dx * dx + dy * dy + altitude * altitude).sqrt();
        let theta = (altitude / r).clamp(-1.0, 1.0).acos();
        let varphi = dy.atan2(dx);
        Self::with_layout(template.clone(), r, theta, varphi)
    }

    pub fn m(&self) -> usize {
        match &self.layout {
            BsLayout::Linear { m, .. } => *m,
            BsLayout::Planar { mx, my, .. } => mx * my,
        }
    }

    /// Unit vector from the transmit-array center to the BS center.
    pub fn direction(&self) -> Point3 {
        let (st, ct) = self.elevation_theta.sin_cos();
        let (sp, cp) = self.azimuth_varphi.sin_cos();
        [st * cp, st * sp, ct]
    }

    pub fn center(&self) -> Point3 {
        let u = self.direction();
        [self.range_r * u[0], self.range_r * u[1], self.range_r * u[2]]
    }

    /// Element offsets relative to the BS center.
    pub fn offsets(&self) -> Vec<Point3> {
        match &self.layout {
            BsLayout::Linear { m, spacing_d, zeta } => zeta
                .iter()
                .map(|&z| [z * *m as f64 * spacing_d / 2.0, 0.0, 0.0])
                .collect(),
            BsLayout::Planar { mx, my, dx, dy } => {
                let mut out = Vec::with_capacity(mx * my);
                for j in 1..=*my {
                    for i in 1..=*mx {
                        out.push([
                            (2.0 * i as f64 - 1.0 - *mx as f64) * dx / 2.0,
                            (2.0 * j as f64 - 1.0 - *my as f64) * dy / 2.0,
                            0.0,
                        ]);
                    }
                }
                out
            }
        }
    }
}

/// Receive element coordinates.
pub fn bs_positions(bs: &BsGeometry) -> Vec<Point3> {
    let c = bs.center();
    bs.offsets()
        .into_iter()
        .map(|o| [c[0] + o[0], c[1] + o[1], c[2] + o[2]])
        .collect()
}

/// Euclidean distance.
pub fn propagation_range(p_tx: Point3, p_rx: Point3) -> f64 {
    let dx = p_rx[0] - p_tx[0];
    let dy = p_rx[1] - p_tx[1];
    let dz = p_rx[2] - p_tx[2];
    (dx * dx + dy * dy + dz * dz).sqrt()
}

/// First-order square-root expansion of the range between transmit element
/// offset `a` and receive element offset `b` (both relative to their array
/// centers): `R + u·(b - a) + |b - a|² / (2R)`.
///
/// For the linear kinds this is term-for-term the seven-term expression in
/// R, d, L, η, θ, φ.
pub fn approx_range(a: Point3, b: Point3, bs: &BsGeometry) -> f64 {
    let u = bs.direction();
    let r = bs.range_r;
    let diff = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
    let proj = u[0] * diff[0] + u[1] * diff[1] + u[2] * diff[2];
    let sq = diff[0] * diff[0] + diff[1] * diff[1] + diff[2] * diff[2];
    r + proj + sq / (2.0 * r)
}

/// Range from transmit element `n` to receive element `m` (0-based) with
/// the array center at the origin.
pub fn pair_range(array: &ArrayGeometry, bs: &BsGeometry, m: usize, n: usize, mode: RangeMode) -> f64 {
    let centered = ArrayGeometry {
        center: [0.0; 3],
        ..array.clone()
    };
    let a = uav_positions(&centered)[n];
    let b = bs.offsets()[m];
    match mode {
        RangeMode::Exact => {
            let c = bs.center();
            propagation_range(a, [c[0] + b[0], c[1] + b[1], c[2] + b[2]])
        }
        RangeMode::Approx => approx_range(a, b, bs),
    }
}

/// All M×N ranges, row m and column n.
pub fn range_matrix(array: &ArrayGeometry, bs: &BsGeometry, mode: RangeMode) -> Vec<Vec<f64>> {
    let centered = ArrayGeometry {
        center: [0.0; 3],
        ..array.clone()
    };
    let tx = uav_positions(&centered);
    let c = bs.center();
    bs.offsets()
        .iter()
        .map(|b| {
            tx.iter()
                .map(|&a| match mode {
                    RangeMode::Exact => propagation_range(a, [c[0] + b[0], c[1] + b[1], c[2] + b[2]]),
                    RangeMode::Approx => approx_range(a, *b, bs),
                })
                .collect()
        })
        .collect()
}

/// Uniform draw on `[lo, hi)`; a degenerate interval returns `lo`.
pub fn sample_offset_in<R: Rng + ?Sized>(interval: (f64, f64), rng: &mut R) -> f64 {
    let (lo, hi) = interval;
    if hi <= lo {
        return lo;
    }
    lo + (hi - lo) * rng.random::<f64>()
}

/// Rotation offset drawn uniformly from the configured interval.
pub fn sample_rotation_offset<R: Rng + ?Sized>(config: &ScenarioConfig, rng: &mut R) -> f64 {
    sample_offset_in(config.rotation_interval, rng)
}

/// Builds the transmit array described by the configuration from per-axis
/// topologies.
pub fn array_from_spec(config: &ScenarioConfig, axes: &[Vec<f64>]) -> Result<ArrayGeometry> {
    let spec = &config.array;
    let phi = config.rotation_phi;
    match spec.kind {
        ArrayKindSpec::Linear => ArrayGeometry::linear(axes[0].clone(), spec.aperture, phi),
        ArrayKindSpec::Planar => ArrayGeometry::planar(
            axes[0].clone(),
            axes[1].clone(),
            spec.axis_aperture[0],
            spec.axis_aperture[1],
            phi,
        ),
        ArrayKindSpec::Cube => ArrayGeometry::cube(
            axes[0].clone(),
            axes[1].clone(),
            axes[2].clone(),
            spec.axis_aperture,
            phi,
        ),
    }
}

/// BS layout described by the configuration; `zeta` overrides the uniform
/// receive grid for the linear kind.
pub fn bs_layout_from_spec(config: &ScenarioConfig, zeta: Option<Vec<f64>>) -> BsLayout {
    let b = &config.bs;
    match b.kind {
        BsKindSpec::Linear => BsLayout::Linear {
            m: b.m,
            spacing_d: b.spacing_d,
            zeta: zeta.unwrap_or_else(|| ula_grid(b.m)),
        },
        BsKindSpec::Planar => BsLayout::Planar {
            mx: b.mx,
            my: b.my,
            dx: b.dx,
            dy: b.dy,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_4, PI};

    fn close(a: Point3, b: Point3, tol: f64) -> bool {
        a.iter().zip(b.iter()).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn linear_positions() {
        let a = ArrayGeometry::linear(vec![-1.0, 1.0], 10.0, 0.0).unwrap();
        let p = uav_positions(&a);
        assert!(close(p[0], [-5.0, 0.0, 0.0], 1e-12));
        assert!(close(p[1], [5.0, 0.0, 0.0], 1e-12));

        let a = a.with_rotation(FRAC_PI_2);
        let p = uav_positions(&a);
        assert!(close(p[0], [0.0, -5.0, 0.0], 1e-12));
        assert!(close(p[1], [0.0, 5.0, 0.0], 1e-12));

        let a = ArrayGeometry::linear(vec![0.0], 3.0, 1.1).unwrap();
        assert!(close(uav_positions(&a)[0], [0.0; 3], 0.0));
    }

    #[test]
    fn rejects_out_of_range_eta() {
        assert!(ArrayGeometry::linear(vec![-1.5, 1.0], 10.0, 0.0).is_err());
        assert!(ArrayGeometry::linear(vec![-1.0, 1.0], 0.0, 0.0).is_err());
    }

    #[test]
    fn bs_examples() {
        let bs = BsGeometry::linear(1, 0.15, 300.0, 0.0, 0.0).unwrap();
        assert!(close(bs_positions(&bs)[0], [0.0, 0.0, 300.0], 1e-12));

        let bs = BsGeometry::linear(2, 0.15, 300.0, FRAC_PI_2, 0.0).unwrap();
        let p = bs_positions(&bs);
        assert!(close(p[0], [299.925, 0.0, 0.0], 1e-9));
        assert!(close(p[1], [300.075, 0.0, 0.0], 1e-9));

        let bs = BsGeometry::linear(3, 1.0, 10.0, FRAC_PI_2, FRAC_PI_2).unwrap();
        for (i, p) in bs_positions(&bs).iter().enumerate() {
            let m = (i + 1) as f64;
            assert!(close(*p, [(2.0 * m - 4.0) / 2.0, 10.0, 0.0], 1e-9), "{p:?}");
        }
    }

    #[test]
    fn range_examples() {
        assert_eq!(propagation_range([0.0; 3], [3.0, 4.0, 0.0]), 5.0);
        let a = ArrayGeometry::linear(vec![0.0], 10.0, 0.4).unwrap();
        let bs = BsGeometry::linear(1, 0.15, 300.0, 0.7, 0.2).unwrap();
        assert!((pair_range(&a, &bs, 0, 0, RangeMode::Approx) - 300.0).abs() < 1e-12);
    }

    /// Seven-term expression written out literally.
    #[allow(clippy::too_many_arguments)]
    fn seven_term(r: f64, m: usize, mm: usize, d: f64, l: f64, eta: f64, th: f64, vp: f64, phi: f64) -> f64 {
        let u = 2.0 * m as f64 - 1.0 - mm as f64;
        r + u * u * d * d / (8.0 * r) + u * d * th.sin() * vp.cos() / 2.0
            - u / (4.0 * r) * d * l * eta * phi.cos()
            - l * eta * th.sin() * vp.cos() * phi.cos() / 2.0
            - l * eta * th.sin() * vp.sin() * phi.sin() / 2.0
            + (l * eta).powi(2) / (8.0 * r)
    }

    #[test]
    fn approx_matches_literal_expansion() {
        let eta = vec![-1.0, -0.3, 0.2, 0.9];
        let phi = 0.37;
        let a = ArrayGeometry::linear(eta.clone(), 10.0, phi).unwrap();
        let bs = BsGeometry::linear(8, 0.15, 300.0, FRAC_PI_3, FRAC_PI_4).unwrap();
        for m in 0..8 {
            for (n, &e) in eta.iter().enumerate() {
                let got = pair_range(&a, &bs, m, n, RangeMode::Approx);
                let want = seven_term(300.0, m + 1, 8, 0.15, 10.0, e, FRAC_PI_3, FRAC_PI_4, phi);
                assert!((got - want).abs() < 1e-9, "{got} {want}");
            }
        }
    }

    #[test]
    fn approx_exact_at_broadside() {
        // With the BS straight below the array the linear term vanishes and
        // the neglected second-order term is O(L^4/R^3).
        let eta = vec![-1.0, -0.4, 0.1, 0.7, 1.0];
        let a = ArrayGeometry::linear(eta, 10.0, 0.3).unwrap();
        let bs = BsGeometry::linear(8, 0.15, 300.0, 0.0, 0.0).unwrap();
        let ex = range_matrix(&a, &bs, RangeMode::Exact);
        let ap = range_matrix(&a, &bs, RangeMode::Approx);
        for (re, ra) in ex.iter().zip(ap.iter()) {
            for (x, y) in re.iter().zip(ra.iter()) {
                assert!((x - y).abs() <= 1e-3);
            }
        }
    }

    #[test]
    fn sample_offsets() {
        let cfg = ScenarioConfig::reference();
        let mut r1 = ChaCha12Rng::seed_from_u64(7);
        let mut r2 = ChaCha12Rng::seed_from_u64(7);
        let a = sample_rotation_offset(&cfg, &mut r1);
        let b = sample_rotation_offset(&cfg, &mut r1);
        assert_ne!(a, b);
        assert_eq!(a, sample_rotation_offset(&cfg, &mut r2));
        assert_eq!(b, sample_rotation_offset(&cfg, &mut r2));
        assert!((0.0..2.0 * PI).contains(&a));
        assert_eq!(sample_offset_in((0.4, 0.4), &mut r1), 0.4);
    }

    #[test]
    fn from_positions_geometry() {
        let layout = BsLayout::Linear {
            m: 1,
            spacing_d: 0.15,
            zeta: vec![0.0],
        };
        let bs = BsGeometry::from_positions(&layout, [0.0, 0.0], [300.0, 400.0], 100.0).unwrap();
        let c = bs.center();
        assert!(close(c, [300.0, 400.0, 100.0], 1e-9));
    }
}
