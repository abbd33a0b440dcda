//! Command-line driver: binds a scenario file to the experiments and writes
//! CSV artifacts named `<subcommand>_<seed>.csv` plus `config_snapshot.txt`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::channel::eve_channel_sample;
use crate::config::{load_config_file, parse_with_overrides, ConfigFile, ScenarioConfig};
use crate::error::{Error, Result};
use crate::evaluation::{
    capacity_sweep, format_float, hover_precoder, hover_radiation_map, secrecy_rate_mc, Cell, ExperimentResult,
    GroundGrid,
};
use crate::linalg::{max_eigenvalue, CMat, C64};
use crate::optimizer::{
    double_loop_optimize, slot_channel, solve_precoding_slot, total_power, zf_precoder, PrecodingProblem,
};
use crate::rng::substream;
use crate::security::{spectral_cap, validate_chance_constraint, ChanceConstraintParams};
use crate::topology::{
    asymptotic_eigenvalues, fekete_points, gauss_lobatto_nodes, grouped_topology, grouping_bound,
    subset_vandermonde_objective, topology_from_config, triangular_diagonals, true_eigenvalues, DiagonalMethod,
};

#[derive(Debug, Parser)]
#[command(name = "uavsec", version, about = "Secure multi-UAV virtual-array experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Scenario file (TOML). Without it the built-in reference scenario is used.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Directory receiving the CSV files and the config snapshot.
    #[arg(long, global = true, default_value = ".")]
    pub output_dir: PathBuf,
    /// Overrides `run.rng_seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// `section.key=value` override, applied after the file. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Fekete points and the per-axis UAV topology.
    Topology {
        #[arg(long = "K")]
        k: Option<usize>,
        #[arg(long = "N")]
        n: Option<usize>,
    },
    /// Capacity versus SNR for Fekete and uniform topologies.
    CapacitySweep,
    /// Joint trajectory and precoder optimization.
    Optimize,
    /// Monte Carlo secrecy rate for 0..=Q eavesdroppers at the hover point above the BS.
    SecrecyEval {
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Ground SNR map of the precoder optimized above the BS.
    RadiationMap,
    /// Quick invariant suite; exits nonzero if any check fails.
    Validate,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Topology { .. } => "topology",
            Command::CapacitySweep => "capacity-sweep",
            Command::Optimize => "optimize",
            Command::SecrecyEval { .. } => "secrecy-eval",
            Command::RadiationMap => "radiation-map",
            Command::Validate => "validate",
        }
    }

    fn file_stem(&self) -> String {
        self.name().replace('-', "_")
    }
}

/// Files written by a successful run and whether every check passed
/// (always true except for `validate`).
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub files: Vec<PathBuf>,
    pub passed: bool,
}

fn load(cli: &Cli) -> Result<ConfigFile> {
    let mut overrides = cli.common.overrides.clone();
    if let Some(seed) = cli.common.seed {
        overrides.push(format!("run.rng_seed={seed}"));
    }
    if let Command::Topology { k, n } = &cli.command {
        if let Some(k) = k {
            overrides.push(format!("array.K={k}"));
        }
        if let Some(n) = n {
            overrides.push(format!("array.N={n}"));
        }
    }
    let mut file = match &cli.common.config {
        Some(path) => load_config_file(path, &overrides)?,
        None => parse_with_overrides("", &overrides)?,
    };
    // Topology output does not involve the BS; let a large --K through.
    if let Command::Topology { k: Some(k), .. } = &cli.command {
        let bs = &mut file.bs;
        let planar = bs.kind.as_deref() == Some("planar");
        if !planar && bs.m.unwrap_or(0) < *k {
            bs.m = Some(*k);
        }
    }
    Ok(file)
}

/// Executes one subcommand and writes its artifacts.
pub fn run(cli: &Cli) -> Result<RunOutput> {
    let file = load(cli)?;
    let config = file.resolve()?;
    let snapshot = file.normalized().to_toml();
    let dir = &cli.common.output_dir;
    fs::create_dir_all(dir)?;

    let stem = cli.command.file_stem();
    let seed = config.rng_seed;
    let main_csv = dir.join(format!("{stem}_{seed}.csv"));
    let mut files = Vec::new();
    let mut passed = true;

    match &cli.command {
        Command::Topology { .. } => write(&main_csv, &topology_table(&config)?.to_csv(), &mut files)?,
        Command::CapacitySweep => write(&main_csv, &capacity_sweep(&config)?.to_csv(), &mut files)?,
        Command::Optimize => {
            let out = run_optimize(&config)?;
            write(&main_csv, &out.trajectory, &mut files)?;
            write(&dir.join(format!("{stem}_precoders_{seed}.csv")), &out.precoders, &mut files)?;
            write(&dir.join(format!("{stem}_log_{seed}.txt")), &out.log, &mut files)?;
        }
        Command::SecrecyEval { samples } => {
            let samples = samples.unwrap_or(config.experiments.secrecy_samples);
            write(&main_csv, &secrecy_table(&config, samples)?.to_csv(), &mut files)?;
        }
        Command::RadiationMap => {
            let ex = &config.experiments;
            let grid = GroundGrid {
                center: config.bs.position,
                half_width: ex.grid_half_width,
                step: ex.grid_step,
            };
            let (map, _) = hover_radiation_map(&config, config.bs.position, &grid)?;
            write(&main_csv, &map.to_experiment(seed).to_csv(), &mut files)?;
        }
        Command::Validate => {
            let table = validate(&config, &snapshot)?;
            passed = table.rows.iter().all(|(_, ok)| *ok == 1.0);
            write(&main_csv, &table.to_csv(), &mut files)?;
        }
    }
    write(&dir.join("config_snapshot.txt"), &snapshot, &mut files)?;
    Ok(RunOutput { files, passed })
}

fn write(path: &Path, text: &str, files: &mut Vec<PathBuf>) -> Result<()> {
    fs::write(path, text)?;
    files.push(path.to_path_buf());
    Ok(())
}

/// Machine-readable failure record printed on stderr by the binary.
pub fn error_record(err: &Error) -> String {
    let mut s = String::from("[error]\n");
    let _ = writeln!(s, "kind = {:?}", err.kind());
    let _ = writeln!(s, "message = {:?}", err.to_string());
    match err {
        Error::Slot { slot, source } => {
            let _ = writeln!(s, "slot = {slot}");
            let _ = writeln!(s, "cause = {:?}", source.kind());
            if let Error::Infeasible { family, .. } = source.as_ref() {
                let _ = writeln!(s, "constraint_family = {:?}", family.to_string());
            }
        }
        Error::Infeasible { family, .. } => {
            let _ = writeln!(s, "constraint_family = {:?}", family.to_string());
        }
        Error::Unreachable { slot, .. } => {
            let _ = writeln!(s, "slot = {slot}");
        }
        _ => {}
    }
    s
}

fn topology_table(config: &ScenarioConfig) -> Result<ExperimentResult> {
    let mut out = ExperimentResult::new(&["set", "index"], "position", config.rng_seed, String::new());
    let k = config.array.k;
    if k >= 2 {
        let sol = fekete_points(k, config.solver.fekete_tol, config.solver.fekete_starts)?;
        for (i, b) in sol.beta.iter().enumerate() {
            out.push(vec![Cell::Text("fekete".into()), Cell::Int(i as i64)], *b);
        }
    }
    let names = ["eta_x", "eta_y", "eta_z"];
    let axes = topology_from_config(config)?;
    for (axis, t) in axes.iter().enumerate() {
        let name = if axes.len() == 1 { "eta" } else { names[axis] };
        for (i, e) in t.as_slice().iter().enumerate() {
            out.push(vec![Cell::Text(name.into()), Cell::Int(i as i64)], *e);
        }
    }
    Ok(out)
}

struct OptimizeArtifacts {
    trajectory: String,
    precoders: String,
    log: String,
}

fn run_optimize(config: &ScenarioConfig) -> Result<OptimizeArtifacts> {
    let axes = topology_from_config(config)?;
    let out = double_loop_optimize(config, &axes)?;
    let traj = &out.trajectory;

    let mut t = String::from("slot,x,y,slot_power_watts\n");
    for (i, c) in traj.centers.iter().enumerate() {
        let p = if i == 0 { 0.0 } else { traj.per_slot_power[i - 1] };
        let _ = writeln!(t, "{i},{},{},{}", format_float(c[0]), format_float(c[1]), format_float(p));
    }

    let mut w = String::from("slot,n,k,re,im\n");
    for (i, p) in out.precoders.iter().enumerate() {
        for k in 0..p.ncols() {
            for n in 0..p.nrows() {
                let z = p[(n, k)];
                let _ = writeln!(w, "{},{n},{k},{},{}", i + 1, format_float(z.re), format_float(z.im));
            }
        }
    }

    let mut log = String::new();
    for (s, g) in out.gamma_history.iter().enumerate() {
        let _ = writeln!(log, "outer = {} gamma_watts = {}", s + 1, format_float(*g));
    }
    let r = &out.report;
    let _ = writeln!(log, "status = {:?}", format!("{:?}", r.status));
    let _ = writeln!(log, "outer_iterations = {}", out.outer_iterations);
    let _ = writeln!(log, "total_power_watts = {}", format_float(r.objective));
    let _ = writeln!(log, "lower_bound_watts = {}", format_float(r.lower_bound));
    let _ = writeln!(log, "ipm_iterations = {}", r.iterations);
    let _ = writeln!(log, "max_constraint_violation = {}", format_float(r.max_constraint_violation));
    let _ = writeln!(log, "rank_one = {}", r.rank_one);
    let _ = writeln!(log, "feasibility_violation_m = {}", format_float(traj.feasibility_violation(config)));
    Ok(OptimizeArtifacts {
        trajectory: t,
        precoders: w,
        log,
    })
}

fn secrecy_table(config: &ScenarioConfig, samples: usize) -> Result<ExperimentResult> {
    let axes = topology_from_config(config)?;
    let center = config.bs.position;
    let w = hover_precoder(config, &axes, center)?;
    let h = slot_channel(config, &axes, center, config.rotation_phi)?;
    let mut out = ExperimentResult::new(&["Q"], "secrecy_rate_bps_hz", config.rng_seed, String::new());
    out.replications = samples;
    for q in 0..=config.q {
        let est = secrecy_rate_mc(&h, &w, config.sigma2, config.sigma_e2, q, samples, config.rng_seed)?;
        out.push(vec![Cell::Int(q as i64)], est.mean);
    }
    Ok(out)
}

fn random_channel(rows: usize, cols: usize, seed: u64, stream: u64) -> CMat {
    let mut rng = substream(seed, stream);
    let mut h = CMat::zeros(rows, cols);
    for r in 0..rows {
        let v = eve_channel_sample(cols, &mut rng);
        for c in 0..cols {
            h[(r, c)] = v[c].conj();
        }
    }
    h
}

/// Fast versions of the library invariants. Metric is 1 for pass, 0 for fail;
/// the second variable is the observed error or statistic.
pub fn validate(config: &ScenarioConfig, snapshot: &str) -> Result<ExperimentResult> {
    let mut out = ExperimentResult::new(&["check", "observed"], "passed", config.rng_seed, String::new());
    let mut record = |name: &str, observed: f64, ok: bool| {
        out.push(vec![Cell::Text(name.into()), Cell::Num(observed)], if ok { 1.0 } else { 0.0 });
    };
    let seed = config.rng_seed;

    let mut gap: f64 = 0.0;
    for k in 2..=8 {
        let sol = fekete_points(k, 1e-12, 4)?;
        let nodes = gauss_lobatto_nodes(k);
        for (a, b) in sol.beta.iter().zip(&nodes) {
            gap = gap.max((a - b).abs());
        }
    }
    record("fekete_matches_lobatto", gap, gap <= 1e-8);

    let mut rel: f64 = 0.0;
    for t in 0..50u64 {
        use rand::Rng;
        let mut rng = substream(seed, t);
        let n = rng.random_range(2..=7);
        let k = rng.random_range(1..=n);
        let eta: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect();
        let a = triangular_diagonals(&eta, k, DiagonalMethod::Formula)?;
        let b = triangular_diagonals(&eta, k, DiagonalMethod::Qr)?;
        for (x, y) in a.iter().zip(&b) {
            rel = rel.max((x - y).abs() / x.abs().max(y.abs()).max(f64::MIN_POSITIVE));
        }
    }
    record("diagonals_formula_vs_qr", rel, rel <= 1e-9);

    let beta = [-1.0, 1.0];
    let grouped = grouped_topology(4, 2, &beta)?;
    let obj = subset_vandermonde_objective(grouped.as_slice(), 2)?;
    let bound = grouping_bound(4, 2, &beta);
    record("grouped_attains_bound", obj, (obj - 16.0).abs() <= 1e-9 * 16.0 && (obj - bound).abs() <= 1e-9 * bound);

    let nu = 1e-3;
    let eta = gauss_lobatto_nodes(3);
    let asym = asymptotic_eigenvalues(&eta, 3, 3, nu, 0.0)?;
    let truth = true_eigenvalues(
        &crate::channel::asymptotic_matrix(&crate::geometry::ula_grid(3), &eta, nu, 0.0),
        3,
    );
    let worst = truth
        .iter()
        .zip(&asym.lambda_asym)
        .map(|(t, a)| (t / a - 1.0).abs())
        .fold(0.0, f64::max);
    record("eigen_asymptotics_small_nu", worst, worst <= 0.01);

    let params = ChanceConstraintParams::from(config);
    let cap1 = spectral_cap(&params, 1)? / (params.xi * params.sigma_e2);
    let closed = 0.17542;
    let q3 = params.q == 3 && (params.kappa - 0.99).abs() < 1e-15;
    record("spectral_cap_single_uav", cap1, !q3 || (cap1 - closed).abs() <= 1e-4);

    let n = config.array.n;
    let cap = spectral_cap(&params, n)?;
    let w = CMat::identity(n, n) * C64::new(cap.sqrt(), 0.0);
    let trials = config.experiments.validation_trials.min(20_000);
    let rep = validate_chance_constraint(&w, &params, trials, seed);
    record(
        "chance_constraint_calibration",
        rep.probability,
        rep.probability >= params.kappa - 3.0 * rep.std_error,
    );

    let mut mrt: f64 = 0.0;
    for t in 0..5u64 {
        let h = random_channel(1, 4, seed, 1000 + t);
        let problem = PrecodingProblem {
            h: h.clone(),
            streams: 1,
            gamma: config.gamma,
            sigma2: 1.0,
            spectral_cap: f64::INFINITY,
            p_max: f64::INFINITY,
        };
        let (w, _) = solve_precoding_slot(&problem, config.solver.tol)?;
        let expect = config.gamma / h.row(0).norm_squared();
        mrt = mrt.max((total_power(&[w]) - expect).abs() / expect);
    }
    record("precoder_matches_mrt", mrt, mrt <= 1e-6);

    let h = random_channel(2, 4, seed, 2000);
    let w = zf_precoder(&h, config.gamma, 1.0)?;
    let mut last = f64::INFINITY;
    let mut monotone = true;
    for q in 0..=3 {
        let r = secrecy_rate_mc(&h, &w, 1.0, 1.0, q, 200, seed)?.mean;
        monotone &= r <= last + 1e-12;
        last = r;
    }
    record("secrecy_nonincreasing_in_q", last, monotone);
    let lam = max_eigenvalue(&(&w * w.adjoint()));
    record("zf_precoder_finite", lam, lam.is_finite());

    let sweep = capacity_sweep(config)?;
    let mut worst_gap = f64::INFINITY;
    for (vars, c) in &sweep.rows {
        if vars[1] != Cell::Text("nula".into()) {
            continue;
        }
        let twin = sweep
            .rows
            .iter()
            .find(|(v, _)| v[0] == vars[0] && v[1] == Cell::Text("ula".into()) && v[2] == vars[2] && v[3] == vars[3])
            .map(|(_, c)| *c)
            .unwrap_or(f64::NAN);
        worst_gap = worst_gap.min(c - twin);
    }
    record("nula_capacity_at_least_ula", worst_gap, worst_gap >= -1e-12);

    let again = parse_with_overrides(snapshot, &[])?.resolve()?;
    record("snapshot_round_trip", 0.0, &again == config);
    Ok(out)
}
