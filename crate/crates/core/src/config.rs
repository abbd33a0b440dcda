//! Scenario configuration.
//!
//! The on-disk format is TOML with one table per concern (`[radio]`, `[qos]`,
//! `[array]`, ...). Every key is optional; missing keys take the reference
//! scenario value. Unknown keys are rejected. Decibel-valued keys
//! (`gamma_db`, `xi_db`, `P_max_dbm`, `sigma2_dbm`, `sigmaE2_dbm`) are
//! converted to linear SI values here and nowhere else; supplying both the dB
//! key and its linear twin is an error.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Linear power ratio from decibels.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Watts from dBm.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    1e-3 * db_to_linear(dbm)
}

// ---------------------------------------------------------------------------
// File representation
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub radio: RadioSection,
    #[serde(default)]
    pub qos: QosSection,
    #[serde(default)]
    pub power: PowerSection,
    #[serde(default)]
    pub array: ArraySection,
    #[serde(default)]
    pub bs: BsSection,
    #[serde(default)]
    pub trajectory: TrajectorySection,
    #[serde(default)]
    pub rotation: RotationSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub experiments: ExperimentSection,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub rng_seed: Option<u64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadioSection {
    pub f_c: Option<f64>,
    pub c: Option<f64>,
    pub sigma2: Option<f64>,
    pub sigma2_dbm: Option<f64>,
    #[serde(rename = "sigmaE2")]
    pub sigma_e2: Option<f64>,
    #[serde(rename = "sigmaE2_dbm")]
    pub sigma_e2_dbm: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QosSection {
    pub gamma: Option<f64>,
    pub gamma_db: Option<f64>,
    pub xi: Option<f64>,
    pub xi_db: Option<f64>,
    pub kappa: Option<f64>,
    #[serde(rename = "Q")]
    pub q: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerSection {
    #[serde(rename = "P_max")]
    pub p_max: Option<f64>,
    #[serde(rename = "P_max_dbm")]
    pub p_max_dbm: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArraySection {
    /// `linear`, `planar` or `cube`.
    pub kind: Option<String>,
    /// `fekete`, `ula` or `custom` (custom requires `eta`).
    pub topology: Option<String>,
    #[serde(rename = "N")]
    pub n: Option<usize>,
    #[serde(rename = "K")]
    pub k: Option<usize>,
    #[serde(rename = "L")]
    pub l: Option<f64>,
    pub eta: Option<Vec<f64>>,
    pub rotation_phi: Option<f64>,
    #[serde(rename = "Nx")]
    pub nx: Option<usize>,
    #[serde(rename = "Ny")]
    pub ny: Option<usize>,
    #[serde(rename = "Nz")]
    pub nz: Option<usize>,
    #[serde(rename = "Kx")]
    pub kx: Option<usize>,
    #[serde(rename = "Ky")]
    pub ky: Option<usize>,
    #[serde(rename = "Kz")]
    pub kz: Option<usize>,
    #[serde(rename = "Lx")]
    pub lx: Option<f64>,
    #[serde(rename = "Ly")]
    pub ly: Option<f64>,
    #[serde(rename = "Lz")]
    pub lz: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BsSection {
    /// `linear` or `planar`.
    pub kind: Option<String>,
    #[serde(rename = "M")]
    pub m: Option<usize>,
    pub spacing_d: Option<f64>,
    /// Ground-plane center of the BS array (meters).
    pub position: Option<[f64; 2]>,
    /// Place the receive elements at Fekete points instead of a ULA grid.
    pub fekete_receiver: Option<bool>,
    #[serde(rename = "Mx")]
    pub mx: Option<usize>,
    #[serde(rename = "My")]
    pub my: Option<usize>,
    pub dx: Option<f64>,
    pub dy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZoneEntry {
    pub center: [f64; 2],
    pub radius: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectorySection {
    #[serde(rename = "T")]
    pub t: Option<f64>,
    #[serde(rename = "I")]
    pub i: Option<usize>,
    #[serde(rename = "V_max")]
    pub v_max: Option<f64>,
    #[serde(rename = "d_I")]
    pub d_i: Option<[f64; 2]>,
    #[serde(rename = "d_F")]
    pub d_f: Option<[f64; 2]>,
    pub altitude: Option<f64>,
    pub epsilon_out: Option<f64>,
    pub max_outer: Option<usize>,
    /// `exact` or `approx`.
    pub range_mode: Option<String>,
    pub no_fly_zones: Option<Vec<ZoneEntry>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RotationSection {
    #[serde(rename = "period_Lambda")]
    pub period_lambda: Option<f64>,
    pub fraction_iota: Option<f64>,
    pub interval: Option<[f64; 2]>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub tol: Option<f64>,
    pub max_iters: Option<usize>,
    pub fekete_tol: Option<f64>,
    pub fekete_starts: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub gammas_db: Option<Vec<f64>>,
    pub phis: Option<Vec<f64>>,
    pub capacity_range: Option<f64>,
    pub capacity_sizes: Option<Vec<usize>>,
    pub secrecy_samples: Option<usize>,
    pub validation_trials: Option<usize>,
    pub grid_half_width: Option<f64>,
    pub grid_step: Option<f64>,
}

// ---------------------------------------------------------------------------
// Resolved configuration
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoFlyZone {
    pub center: [f64; 2],
    pub radius: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RangeMode {
    Exact,
    Approx,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TopologyChoice {
    Fekete,
    Ula,
    Custom(Vec<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArrayKindSpec {
    Linear,
    Planar,
    Cube,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArraySpec {
    pub kind: ArrayKindSpec,
    pub topology: TopologyChoice,
    pub n: usize,
    pub k: usize,
    pub aperture: f64,
    pub axis_n: [usize; 3],
    pub axis_k: [usize; 3],
    pub axis_aperture: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BsKindSpec {
    Linear,
    Planar,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BsSpec {
    pub kind: BsKindSpec,
    pub m: usize,
    pub spacing_d: f64,
    pub position: [f64; 2],
    pub fekete_receiver: bool,
    pub mx: usize,
    pub my: usize,
    pub dx: f64,
    pub dy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverSettings {
    pub tol: f64,
    pub max_iters: usize,
    pub fekete_tol: f64,
    pub fekete_starts: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSettings {
    pub gammas_db: Vec<f64>,
    pub phis: Vec<f64>,
    pub capacity_range: f64,
    pub capacity_sizes: Vec<usize>,
    pub secrecy_samples: usize,
    pub validation_trials: usize,
    pub grid_half_width: f64,
    pub grid_step: f64,
}

/// Physical constants, thresholds and trajectory data, all in linear SI units.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub f_c: f64,
    pub c: f64,
    pub sigma2: f64,
    pub sigma_e2: f64,
    pub gamma: f64,
    pub xi: f64,
    pub kappa: f64,
    pub q: usize,
    pub p_max: f64,
    pub v_max: f64,
    pub t_total: f64,
    pub slots: usize,
    pub d_i: [f64; 2],
    pub d_f: [f64; 2],
    pub altitude: f64,
    pub no_fly_zones: Vec<NoFlyZone>,
    pub rotation_period: Option<f64>,
    pub rotation_fraction: Option<f64>,
    pub rotation_interval: (f64, f64),
    pub rotation_phi: f64,
    pub rng_seed: u64,
    pub epsilon_out: f64,
    pub max_outer: usize,
    pub range_mode: RangeMode,
    pub array: ArraySpec,
    pub bs: BsSpec,
    pub solver: SolverSettings,
    pub experiments: ExperimentSettings,
}

impl BsSpec {
    /// Number of receive antennas.
    pub fn m_total(&self) -> usize {
        match self.kind {
            BsKindSpec::Linear => self.m,
            BsKindSpec::Planar => self.mx * self.my,
        }
    }
}

impl ScenarioConfig {
    /// The reference scenario (1 GHz carrier, 500 m transit, 14 dB QoS).
    pub fn reference() -> Self {
        ConfigFile::default()
            .resolve()
            .expect("reference scenario is valid")
    }

    pub fn wavelength(&self) -> f64 {
        self.c / self.f_c
    }

    /// Slot duration δ = T / I.
    pub fn slot_duration(&self) -> f64 {
        self.t_total / self.slots as f64
    }

    /// Maximum displacement per slot, δ·V_max.
    pub fn step_limit(&self) -> f64 {
        self.slot_duration() * self.v_max
    }

    /// Free-space attenuation ρ(R) = c / (4π f_c R).
    pub fn attenuation(&self, range: f64) -> f64 {
        self.c / (4.0 * PI * self.f_c * range)
    }

    /// Whether slot `i` (1-based) falls in the silent repositioning phase.
    pub fn is_repositioning_slot(&self, i: usize) -> bool {
        match (self.rotation_period, self.rotation_fraction) {
            (Some(period), Some(iota)) => {
                let start = (i - 1) as f64 * self.slot_duration();
                let offset = start.rem_euclid(period);
                offset < iota * period
            }
            _ => false,
        }
    }

    /// Index of the rotation period containing slot `i` (1-based).
    pub fn rotation_epoch(&self, i: usize) -> usize {
        match self.rotation_period {
            Some(period) => {
                let start = (i - 1) as f64 * self.slot_duration();
                (start / period).floor() as usize
            }
            None => 0,
        }
    }
}

const REF_SEED: u64 = 20240611;
const REF_SIGMA_E2_DBM: f64 = 33.0;

fn pick_db(
    key: &str,
    linear: Option<f64>,
    db: Option<f64>,
    default_db: f64,
    convert: fn(f64) -> f64,
) -> Result<f64> {
    match (linear, db) {
        (Some(_), Some(_)) => Err(Error::Config {
            key: key.to_string(),
            reason: "both linear and dB forms given".into(),
        }),
        (Some(v), None) => Ok(v),
        (None, Some(d)) => Ok(convert(d)),
        (None, None) => Ok(convert(default_db)),
    }
}

fn require(cond: bool, key: &str, reason: &str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::Config {
            key: key.to_string(),
            reason: reason.to_string(),
        })
    }
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(map_toml_error)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Fills every missing key with its reference value so the file alone
    /// reproduces the run.
    pub fn normalized(&self) -> ConfigFile {
        let mut out = self.clone();
        let r = &mut out.run;
        r.rng_seed.get_or_insert(REF_SEED);

        let radio = &mut out.radio;
        radio.f_c.get_or_insert(1.0e9);
        radio.c.get_or_insert(3.0e8);
        if radio.sigma2.is_none() && radio.sigma2_dbm.is_none() {
            radio.sigma2_dbm = Some(-110.0);
        }
        if radio.sigma_e2.is_none() && radio.sigma_e2_dbm.is_none() {
            radio.sigma_e2_dbm = Some(REF_SIGMA_E2_DBM);
        }

        let qos = &mut out.qos;
        if qos.gamma.is_none() && qos.gamma_db.is_none() {
            qos.gamma_db = Some(14.0);
        }
        if qos.xi.is_none() && qos.xi_db.is_none() {
            qos.xi_db = Some(0.0);
        }
        qos.kappa.get_or_insert(0.99);
        qos.q.get_or_insert(3);

        let p = &mut out.power;
        if p.p_max.is_none() && p.p_max_dbm.is_none() {
            p.p_max_dbm = Some(10.0);
        }

        let a = &mut out.array;
        a.kind.get_or_insert_with(|| "linear".into());
        a.topology.get_or_insert_with(|| "fekete".into());
        a.n.get_or_insert(8);
        a.k.get_or_insert(2);
        a.l.get_or_insert(10.0);
        a.rotation_phi.get_or_insert(0.0);

        let b = &mut out.bs;
        b.kind.get_or_insert_with(|| "linear".into());
        b.m.get_or_insert(2);
        b.position.get_or_insert([300.0, 400.0]);
        b.fekete_receiver.get_or_insert(false);

        let t = &mut out.trajectory;
        t.t.get_or_insert(110.0);
        t.i.get_or_insert(110);
        t.v_max.get_or_insert(10.0);
        t.d_i.get_or_insert([0.0, 0.0]);
        t.d_f.get_or_insert([500.0, 0.0]);
        t.altitude.get_or_insert(100.0);
        t.epsilon_out.get_or_insert(1e-3);
        t.max_outer.get_or_insert(50);
        t.range_mode.get_or_insert_with(|| "exact".into());
        t.no_fly_zones.get_or_insert_with(Vec::new);

        out.rotation.interval.get_or_insert([0.0, 2.0 * PI]);

        let s = &mut out.solver;
        s.tol.get_or_insert(1e-8);
        s.max_iters.get_or_insert(100);
        s.fekete_tol.get_or_insert(1e-12);
        s.fekete_starts.get_or_insert(8);

        let e = &mut out.experiments;
        e.gammas_db
            .get_or_insert_with(|| (0..=10).map(|i| -10.0 + 5.0 * i as f64).collect());
        e.phis.get_or_insert_with(|| vec![0.0, PI / 6.0, PI / 3.0]);
        e.capacity_range.get_or_insert(300.0);
        e.capacity_sizes.get_or_insert_with(|| vec![4, 8]);
        e.secrecy_samples.get_or_insert(100);
        e.validation_trials.get_or_insert(100_000);
        e.grid_half_width.get_or_insert(60.0);
        e.grid_step.get_or_insert(1.0);
        out
    }

    /// Validates every invariant and converts to linear SI units.
    pub fn resolve(&self) -> Result<ScenarioConfig> {
        let f = self.normalized();

        let f_c = f.radio.f_c.unwrap();
        let c = f.radio.c.unwrap();
        require(f_c > 0.0, "radio.f_c", "must be positive")?;
        require(c > 0.0, "radio.c", "must be positive")?;
        let sigma2 = pick_db("radio.sigma2", self.radio.sigma2, f.radio.sigma2_dbm, -110.0, dbm_to_watts)?;
        let sigma_e2 = pick_db(
            "radio.sigmaE2",
            self.radio.sigma_e2,
            f.radio.sigma_e2_dbm,
            REF_SIGMA_E2_DBM,
            dbm_to_watts,
        )?;
        require(sigma2 > 0.0, "radio.sigma2", "must be positive")?;
        require(sigma_e2 > 0.0, "radio.sigmaE2", "must be positive")?;

        let gamma = pick_db("qos.gamma", self.qos.gamma, f.qos.gamma_db, 14.0, db_to_linear)?;
        let xi = pick_db("qos.xi", self.qos.xi, f.qos.xi_db, 0.0, db_to_linear)?;
        require(gamma > 0.0, "qos.gamma", "must be positive")?;
        require(xi > 0.0, "qos.xi", "must be positive")?;
        let kappa = f.qos.kappa.unwrap();
        require(kappa > 0.0 && kappa < 1.0, "qos.kappa", "must lie in (0, 1)")?;
        let q = f.qos.q.unwrap();

        let p_max = pick_db("power.P_max", self.power.p_max, f.power.p_max_dbm, 10.0, dbm_to_watts)?;
        require(p_max >= 0.0, "power.P_max", "must be nonnegative")?;

        let array = resolve_array(&f.array)?;
        let bs = resolve_bs(&f.bs, c / f_c)?;
        require(array.k <= bs.m, "array.K", "stream count must not exceed BS antennas M")?;

        let t = &f.trajectory;
        let t_total = t.t.unwrap();
        let slots = t.i.unwrap();
        require(slots >= 1, "trajectory.I", "must be at least 1")?;
        require(t_total > 0.0, "trajectory.T", "must be positive")?;
        let v_max = t.v_max.unwrap();
        require(v_max > 0.0, "trajectory.V_max", "must be positive")?;
        let altitude = t.altitude.unwrap();
        require(altitude > 0.0, "trajectory.altitude", "must be positive")?;
        let epsilon_out = t.epsilon_out.unwrap();
        require(epsilon_out > 0.0, "trajectory.epsilon_out", "must be positive")?;
        let max_outer = t.max_outer.unwrap();
        require(max_outer >= 1, "trajectory.max_outer", "must be at least 1")?;
        let range_mode = match t.range_mode.as_deref().unwrap() {
            "exact" => RangeMode::Exact,
            "approx" => RangeMode::Approx,
            other => {
                return Err(Error::Config {
                    key: "trajectory.range_mode".into(),
                    reason: format!("expected `exact` or `approx`, got `{other}`"),
                })
            }
        };
        let mut zones = Vec::new();
        for (i, z) in t.no_fly_zones.as_ref().unwrap().iter().enumerate() {
            require(
                z.radius > 0.0,
                &format!("trajectory.no_fly_zones[{i}].radius"),
                "must be positive",
            )?;
            zones.push(NoFlyZone {
                center: z.center,
                radius: z.radius,
            });
        }

        let rot = &f.rotation;
        if let Some(period) = rot.period_lambda {
            require(period > 0.0, "rotation.period_Lambda", "must be positive")?;
        }
        if let Some(iota) = rot.fraction_iota {
            require(iota > 0.0 && iota < 1.0, "rotation.fraction_iota", "must lie in (0, 1)")?;
        }
        require(
            rot.period_lambda.is_some() == rot.fraction_iota.is_some(),
            "rotation",
            "period_Lambda and fraction_iota must be given together",
        )?;
        let interval = rot.interval.unwrap();
        require(interval[0] <= interval[1], "rotation.interval", "lower bound exceeds upper")?;

        let s = &f.solver;
        let solver = SolverSettings {
            tol: s.tol.unwrap(),
            max_iters: s.max_iters.unwrap(),
            fekete_tol: s.fekete_tol.unwrap(),
            fekete_starts: s.fekete_starts.unwrap(),
        };
        require(solver.tol > 0.0, "solver.tol", "must be positive")?;
        require(solver.fekete_tol > 0.0, "solver.fekete_tol", "must be positive")?;
        require(solver.fekete_starts >= 1, "solver.fekete_starts", "must be at least 1")?;

        let e = &f.experiments;
        let experiments = ExperimentSettings {
            gammas_db: e.gammas_db.clone().unwrap(),
            phis: e.phis.clone().unwrap(),
            capacity_range: e.capacity_range.unwrap(),
            capacity_sizes: e.capacity_sizes.clone().unwrap(),
            secrecy_samples: e.secrecy_samples.unwrap(),
            validation_trials: e.validation_trials.unwrap(),
            grid_half_width: e.grid_half_width.unwrap(),
            grid_step: e.grid_step.unwrap(),
        };
        require(experiments.capacity_range > 0.0, "experiments.capacity_range", "must be positive")?;
        require(experiments.grid_step > 0.0, "experiments.grid_step", "must be positive")?;
        require(experiments.secrecy_samples >= 1, "experiments.secrecy_samples", "must be at least 1")?;

        Ok(ScenarioConfig {
            f_c,
            c,
            sigma2,
            sigma_e2,
            gamma,
            xi,
            kappa,
            q,
            p_max,
            v_max,
            t_total,
            slots,
            d_i: t.d_i.unwrap(),
            d_f: t.d_f.unwrap(),
            altitude,
            no_fly_zones: zones,
            rotation_period: rot.period_lambda,
            rotation_fraction: rot.fraction_iota,
            rotation_interval: (interval[0], interval[1]),
            rotation_phi: f.array.rotation_phi.unwrap(),
            rng_seed: f.run.rng_seed.unwrap(),
            epsilon_out,
            max_outer,
            range_mode,
            array,
            bs,
            solver,
            experiments,
        })
    }
}

fn resolve_array(a: &ArraySection) -> Result<ArraySpec> {
    let kind = match a.kind.as_deref().unwrap() {
        "linear" => ArrayKindSpec::Linear,
        "planar" => ArrayKindSpec::Planar,
        "cube" => ArrayKindSpec::Cube,
        other => {
            return Err(Error::Config {
                key: "array.kind".into(),
                reason: format!("expected linear, planar or cube, got `{other}`"),
            })
        }
    };
    let topology = match a.topology.as_deref().unwrap() {
        "fekete" => TopologyChoice::Fekete,
        "ula" => TopologyChoice::Ula,
        "custom" => {
            let eta = a.eta.clone().ok_or_else(|| Error::Config {
                key: "array.eta".into(),
                reason: "custom topology requires eta".into(),
            })?;
            TopologyChoice::Custom(eta)
        }
        other => {
            return Err(Error::Config {
                key: "array.topology".into(),
                reason: format!("expected fekete, ula or custom, got `{other}`"),
            })
        }
    };
    let l = a.l.unwrap();
    require(l > 0.0, "array.L", "aperture must be positive")?;
    let k = a.k.unwrap();
    require(k >= 1, "array.K", "must be at least 1")?;

    let (n, axis_n, axis_k) = match kind {
        ArrayKindSpec::Linear => {
            let n = a.n.unwrap();
            (n, [n, 1, 1], [k, 1, 1])
        }
        ArrayKindSpec::Planar | ArrayKindSpec::Cube => {
            let nx = a.nx.unwrap_or(8);
            let ny = a.ny.unwrap_or(8);
            let nz = if kind == ArrayKindSpec::Cube {
                a.nz.unwrap_or(4)
            } else {
                1
            };
            let kx = a.kx.unwrap_or(nx);
            let ky = a.ky.unwrap_or(ny);
            let kz = if kind == ArrayKindSpec::Cube {
                a.kz.unwrap_or(nz)
            } else {
                1
            };
            (nx * ny * nz, [nx, ny, nz], [kx, ky, kz])
        }
    };
    require(n >= 1, "array.N", "must be at least 1")?;
    require(k <= n, "array.K", "stream count must not exceed N")?;
    for (ax, (&na, &ka)) in ["x", "y", "z"].iter().zip(axis_n.iter().zip(axis_k.iter())) {
        require(
            ka >= 1 && ka <= na,
            &format!("array.K{ax}"),
            "per-axis K must lie in 1..=N",
        )?;
    }
    if let TopologyChoice::Custom(eta) = &topology {
        require(eta.len() == axis_n[0], "array.eta", "length must equal N")?;
        require(
            eta.iter().all(|e| (-1.0..=1.0).contains(e)),
            "array.eta",
            "entries must lie in [-1, 1]",
        )?;
    }
    let axis_aperture = [a.lx.unwrap_or(l), a.ly.unwrap_or(l), a.lz.unwrap_or(l)];
    require(
        axis_aperture.iter().all(|&x| x > 0.0),
        "array.Lx",
        "apertures must be positive",
    )?;
    Ok(ArraySpec {
        kind,
        topology,
        n,
        k,
        aperture: l,
        axis_n,
        axis_k,
        axis_aperture,
    })
}

fn resolve_bs(b: &BsSection, wavelength: f64) -> Result<BsSpec> {
    let kind = match b.kind.as_deref().unwrap() {
        "linear" => BsKindSpec::Linear,
        "planar" => BsKindSpec::Planar,
        other => {
            return Err(Error::Config {
                key: "bs.kind".into(),
                reason: format!("expected linear or planar, got `{other}`"),
            })
        }
    };
    let d = b.spacing_d.unwrap_or(wavelength / 2.0);
    require(d > 0.0, "bs.spacing_d", "must be positive")?;
    let (m, mx, my) = match kind {
        BsKindSpec::Linear => {
            let m = b.m.unwrap();
            (m, m, 1)
        }
        BsKindSpec::Planar => {
            let mx = b.mx.unwrap_or(2);
            let my = b.my.unwrap_or(2);
            (mx * my, mx, my)
        }
    };
    require(m >= 1, "bs.M", "must be at least 1")?;
    let dx = b.dx.unwrap_or(d);
    let dy = b.dy.unwrap_or(d);
    require(dx > 0.0 && dy > 0.0, "bs.dx", "spacings must be positive")?;
    Ok(BsSpec {
        kind,
        m,
        spacing_d: d,
        position: b.position.unwrap(),
        fekete_receiver: b.fekete_receiver.unwrap(),
        mx,
        my,
        dx,
        dy,
    })
}

fn map_toml_error(e: toml::de::Error) -> Error {
    let msg = e.message().to_string();
    if let Some(rest) = msg.strip_prefix("unknown field `") {
        let key = rest.split('`').next().unwrap_or(rest).to_string();
        return Error::UnknownKey(key);
    }
    Error::Parse(e.to_string())
}

/// Applies a `section.key=value` override to a parsed TOML table. The value
/// is parsed as a TOML value when possible and as a bare string otherwise.
pub fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<()> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::Parse(format!("override `{assignment}` is not key=value")))?;
    let path = path.trim();
    let raw = raw.trim();
    let value: toml::Value = match toml::from_str::<toml::Table>(&format!("v = {raw}")) {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => toml::Value::String(raw.to_string()),
    };
    let parts: Vec<&str> = path.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Error::Parse(format!("bad override key `{path}`")));
    }
    let mut cursor = table;
    for part in &parts[..parts.len() - 1] {
        let entry = cursor
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cursor = entry
            .as_table_mut()
            .ok_or_else(|| Error::Parse(format!("override path `{path}` crosses a non-table")))?;
    }
    cursor.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

/// Parses config text, applies overrides last, and returns the file form.
pub fn parse_with_overrides(text: &str, overrides: &[String]) -> Result<ConfigFile> {
    let mut table: toml::Table = toml::from_str(text).map_err(map_toml_error)?;
    for o in overrides {
        apply_override(&mut table, o)?;
    }
    let merged = toml::to_string(&table).map_err(|e| Error::Parse(e.to_string()))?;
    ConfigFile::parse(&merged)
}

/// Reads, validates and converts a scenario file.
pub fn load_config(path: &Path, overrides: &[String]) -> Result<ScenarioConfig> {
    load_config_file(path, overrides)?.resolve()
}

pub fn load_config_file(path: &Path, overrides: &[String]) -> Result<ConfigFile> {
    let text = std::fs::read_to_string(path)?;
    parse_with_overrides(&text, overrides)
}
