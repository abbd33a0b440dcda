//! Link metrics, Monte Carlo secrecy rate, capacity sweeps and the ground
//! SNR map.

use std::collections::VecDeque;
use std::fmt::Write as _;

use crate::channel::{asymptotic_matrix, eve_channel_sample, nu_parameter, point_channel, Radio};
use crate::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::geometry::{array_from_spec, uav_positions, ula_grid, ArrayGeometry, Point2};
use crate::optimizer::{slot_channel, solve_precoding_slot, PrecodingProblem};
use crate::security::{spectral_cap, ChanceConstraintParams};
use crate::linalg::{CMat, CVec};
use crate::rng::substream;
use crate::topology::{capacity, optimal_topology, topology_from_config, true_eigenvalues, TopologyVector};

pub use crate::optimizer::snr_per_stream;

/// One CSV cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(x) => format_float(*x),
            Cell::Int(i) => i.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Num(x) => Some(*x),
            Cell::Int(i) => Some(*i as f64),
            Cell::Text(_) => None,
        }
    }
}

/// Decimal scientific notation with 17 significant digits (round-trips
/// every `f64`).
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

/// Tabular result of a sweep: each row holds the sweep variables, one
/// metric value and a replication index.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub sweep_vars: Vec<String>,
    pub metric: String,
    pub rows: Vec<(Vec<Cell>, f64)>,
    pub replications: usize,
    pub rng_seed: u64,
    pub config_snapshot: String,
}

impl ExperimentResult {
    pub fn new(sweep_vars: &[&str], metric: &str, rng_seed: u64, config_snapshot: String) -> Self {
        ExperimentResult {
            sweep_vars: sweep_vars.iter().map(|s| s.to_string()).collect(),
            metric: metric.to_string(),
            rows: Vec::new(),
            replications: 1,
            rng_seed,
            config_snapshot,
        }
    }

    pub fn push(&mut self, vars: Vec<Cell>, value: f64) {
        debug_assert_eq!(vars.len(), self.sweep_vars.len());
        self.rows.push((vars, value));
    }

    /// Metric values of rows whose variable `name` equals `value`.
    pub fn select(&self, name: &str, value: &Cell) -> Vec<&(Vec<Cell>, f64)> {
        let Some(col) = self.sweep_vars.iter().position(|v| v == name) else {
            return Vec::new();
        };
        self.rows.iter().filter(|(v, _)| &v[col] == value).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let mut header: Vec<&str> = self.sweep_vars.iter().map(String::as_str).collect();
        header.push(&self.metric);
        header.push("replications");
        out.push_str(&header.join(","));
        out.push('\n');
        for (vars, value) in &self.rows {
            let mut cells: Vec<String> = vars.iter().map(Cell::render).collect();
            cells.push(format_float(*value));
            cells.push(self.replications.to_string());
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

/// Σ_k |h_Eᴴ w_k|² / σ_E².
pub fn eve_snr(h_e: &CVec, w: &CMat, sigma_e2: f64) -> f64 {
    (w.adjoint() * h_e).iter().map(|z| z.norm_sqr()).sum::<f64>() / sigma_e2
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecrecyEstimate {
    /// Mean secrecy rate in bits/s/Hz.
    pub mean: f64,
    pub std_error: f64,
    pub samples: usize,
}

/// Monte Carlo average of [Σ_k log₂(1 + SNR_k) − log₂(1 + max_q SNR_E,q)]⁺
/// over `samples` draws of `q` Rayleigh eavesdroppers. Sample s draws its
/// eavesdroppers, in order, from substream s of `seed`, so estimates for
/// different `q` are coupled.
pub fn secrecy_rate_mc(
    h: &CMat,
    w: &CMat,
    sigma2: f64,
    sigma_e2: f64,
    q: usize,
    samples: usize,
    seed: u64,
) -> Result<SecrecyEstimate> {
    if samples < 100 {
        return Err(Error::invalid("secrecy rate needs at least 100 samples"));
    }
    if h.ncols() != w.nrows() || h.nrows() < w.ncols() {
        return Err(Error::DimensionMismatch {
            expected: format!("H with {} columns and at least {} rows", w.nrows(), w.ncols()),
            got: format!("{}x{}", h.nrows(), h.ncols()),
        });
    }
    let c_b: f64 = snr_per_stream(h, w, sigma2).iter().map(|s| (1.0 + s).log2()).sum();
    let n = w.nrows();
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for s in 0..samples {
        let mut rng = substream(seed, s as u64);
        let mut worst: f64 = 0.0;
        for _ in 0..q {
            let he = eve_channel_sample(n, &mut rng);
            worst = worst.max(eve_snr(&he, w, sigma_e2));
        }
        let r = (c_b - (1.0 + worst).log2()).max(0.0);
        sum += r;
        sum_sq += r * r;
    }
    let m = samples as f64;
    let mean = sum / m;
    let var = ((sum_sq / m - mean * mean) * m / (m - 1.0)).max(0.0);
    Ok(SecrecyEstimate {
        mean,
        std_error: (var / m).sqrt(),
        samples,
    })
}

/// Capacity Σ_k log₂(1 + γ λ_k / N) of the normalized channel H̃ for the
/// receive grid of `m` antennas and transmit topology `eta`, using the K
/// largest eigenvalues from the singular values of H̃.
pub fn topology_capacity(m: usize, eta: &[f64], k: usize, nu: f64, phi: f64, gamma: f64) -> f64 {
    let h = asymptotic_matrix(&ula_grid(m), eta, nu, phi);
    capacity(&true_eigenvalues(&h, k), gamma, eta.len())
}

/// Capacity versus γ for Fekete (NULA) and uniform (ULA) topologies, for
/// every square size M = N in `experiments.capacity_sizes`, every φ in
/// `experiments.phis`, at range `experiments.capacity_range`.
pub fn capacity_sweep(config: &ScenarioConfig) -> Result<ExperimentResult> {
    let ex = &config.experiments;
    let mut out = ExperimentResult::new(
        &["size", "topology", "phi", "gamma_db"],
        "capacity_bps_hz",
        config.rng_seed,
        String::new(),
    );
    let radio = Radio::from(config);
    for &size in &ex.capacity_sizes {
        let nu = nu_parameter(radio, config.bs.spacing_d, size, config.array.aperture, ex.capacity_range);
        let nula = optimal_topology(size, size, config.solver.fekete_tol, config.solver.fekete_starts)?;
        let ula = TopologyVector::uniform(size)?;
        for (label, eta) in [("nula", &nula), ("ula", &ula)] {
            for &phi in &ex.phis {
                for &g_db in &ex.gammas_db {
                    let gamma = crate::config::db_to_linear(g_db);
                    let c = topology_capacity(size, eta.as_slice(), size, nu, phi, gamma);
                    out.push(
                        vec![
                            Cell::Int(size as i64),
                            Cell::Text(label.into()),
                            Cell::Num(phi),
                            Cell::Num(g_db),
                        ],
                        c,
                    );
                }
            }
        }
    }
    Ok(out)
}

/// Square ground grid centered on `center` (meters).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundGrid {
    pub center: Point2,
    pub half_width: f64,
    pub step: f64,
}

impl GroundGrid {
    pub fn axis(&self) -> Vec<f64> {
        let n = (self.half_width / self.step).round() as i64;
        (-n..=n).map(|i| i as f64 * self.step).collect()
    }
}

/// SNR map over the ground with sidelobe diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct RadiationMap {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    /// Linear SNR, row-major over (y, x).
    pub snr: Vec<f64>,
}

impl RadiationMap {
    pub fn value(&self, ix: usize, iy: usize) -> f64 {
        self.snr[iy * self.xs.len() + ix]
    }

    pub fn argmax(&self) -> (usize, usize) {
        let (i, _) = self
            .snr
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |b, (i, &v)| if v > b.1 { (i, v) } else { b });
        (i % self.xs.len(), i / self.xs.len())
    }

    /// Grid index closest to ground point `p`.
    pub fn nearest(&self, p: Point2) -> (usize, usize) {
        let pick = |axis: &[f64], v: f64| {
            axis.iter()
                .enumerate()
                .fold((0, f64::INFINITY), |b, (i, &a)| if (a - v).abs() < b.1 { (i, (a - v).abs()) } else { b })
                .0
        };
        (pick(&self.xs, p[0]), pick(&self.ys, p[1]))
    }

    /// Cells reachable from the peak by steps that never increase the SNR:
    /// the main lobe down to its first nulls.
    pub fn mainlobe(&self) -> Vec<bool> {
        let nx = self.xs.len();
        let ny = self.ys.len();
        let mut seen = vec![false; nx * ny];
        let (px, py) = self.argmax();
        let mut queue = VecDeque::from([(px, py)]);
        seen[py * nx + px] = true;
        while let Some((x, y)) = queue.pop_front() {
            let v = self.value(x, y);
            for (dx, dy) in [(-1i64, 0i64), (1, 0), (0, -1), (0, 1), (-1, -1), (-1, 1), (1, -1), (1, 1)] {
                let (xx, yy) = (x as i64 + dx, y as i64 + dy);
                if xx < 0 || yy < 0 || xx >= nx as i64 || yy >= ny as i64 {
                    continue;
                }
                let (xx, yy) = (xx as usize, yy as usize);
                let idx = yy * nx + xx;
                if !seen[idx] && self.snr[idx] <= v {
                    seen[idx] = true;
                    queue.push_back((xx, yy));
                }
            }
        }
        seen
    }

    /// Largest SNR outside the main lobe (0 when the main lobe covers the grid).
    pub fn sidelobe_peak(&self) -> f64 {
        let main = self.mainlobe();
        self.snr
            .iter()
            .zip(&main)
            .filter(|(_, &m)| !m)
            .map(|(&v, _)| v)
            .fold(0.0, f64::max)
    }

    pub fn to_experiment(&self, rng_seed: u64) -> ExperimentResult {
        let mut out = ExperimentResult::new(&["x", "y"], "snr_db", rng_seed, String::new());
        for (iy, &y) in self.ys.iter().enumerate() {
            for (ix, &x) in self.xs.iter().enumerate() {
                out.push(vec![Cell::Num(x), Cell::Num(y)], 10.0 * self.value(ix, iy).log10());
            }
        }
        out
    }
}

/// Σ_k |h_pᵀ w_k|² / σ² at every grid point, where h_p is the exact
/// single-antenna LoS channel from each UAV of `array` (centered above
/// `center` at `altitude`) to the ground point p.
pub fn radiation_map(
    w: &CMat,
    array: &ArrayGeometry,
    center: Point2,
    altitude: f64,
    radio: Radio,
    sigma2: f64,
    grid: &GroundGrid,
) -> Result<RadiationMap> {
    if w.nrows() != array.len() {
        return Err(Error::DimensionMismatch {
            expected: format!("{} precoder rows", array.len()),
            got: w.nrows().to_string(),
        });
    }
    let tx = uav_positions(array);
    let axis = grid.axis();
    let xs: Vec<f64> = axis.iter().map(|a| grid.center[0] + a).collect();
    let ys: Vec<f64> = axis.iter().map(|a| grid.center[1] + a).collect();
    let mut snr = Vec::with_capacity(xs.len() * ys.len());
    for &y in &ys {
        for &x in &xs {
            let p = [x - center[0], y - center[1], altitude];
            let h = point_channel(&tx, p, radio);
            let amp = w.transpose() * &h;
            snr.push(amp.iter().map(|z| z.norm_sqr()).sum::<f64>() / sigma2);
        }
    }
    Ok(RadiationMap { xs, ys, snr })
}

/// Solves the single-slot precoder with the array hovering above `center`
/// (rotation from the configuration) and maps the resulting ground SNR.
pub fn hover_radiation_map(config: &ScenarioConfig, center: Point2, grid: &GroundGrid) -> Result<(RadiationMap, CMat)> {
    let axes = topology_from_config(config)?;
    let w = hover_precoder(config, &axes, center)?;
    let raw: Vec<Vec<f64>> = axes.iter().map(|t| t.as_slice().to_vec()).collect();
    let array = array_from_spec(config, &raw)?.with_rotation(config.rotation_phi);
    let map = radiation_map(&w, &array, center, config.altitude, Radio::from(config), config.sigma2, grid)?;
    Ok((map, w))
}

/// Minimum-power secure precoder for the array hovering above `center`.
pub fn hover_precoder(config: &ScenarioConfig, axes: &[TopologyVector], center: Point2) -> Result<CMat> {
    let cap = spectral_cap(&ChanceConstraintParams::from(config), config.array.n)?;
    let problem = PrecodingProblem {
        h: slot_channel(config, axes, center, config.rotation_phi)?,
        streams: config.array.k,
        gamma: config.gamma,
        sigma2: config.sigma2,
        spectral_cap: cap,
        p_max: config.p_max,
    };
    Ok(solve_precoding_slot(&problem, config.solver.tol)?.0)
}

/// Writes `key = value` lines for a report.
pub fn render_summary(pairs: &[(&str, String)]) -> String {
    let mut s = String::new();
    for (k, v) in pairs {
        let _ = writeln!(s, "{k} = {v}");
    }
    s
}
