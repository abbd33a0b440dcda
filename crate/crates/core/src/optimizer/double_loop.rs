use crate::channel::{exact_channel, Radio};
use crate::config::{BsKindSpec, ScenarioConfig};
use crate::error::{Error, Result};
use crate::geometry::{array_from_spec, bs_layout_from_spec, sample_rotation_offset, BsGeometry, Point2};
use crate::linalg::CMat;
use crate::rng::substream;
use crate::security::{spectral_cap, ChanceConstraintParams};
use crate::topology::{fekete_points, TopologyVector};

use super::precoding::{solve_precoding_slot, PrecodingProblem, SolveStatus, SolverReport};
use super::trajectory::{sweep_trajectory, PowerSurrogate, Trajectory};

/// Seed offset separating rotation draws from other uses of the run seed.
const ROTATION_STREAM_BASE: u64 = 1 << 40;

#[derive(Debug, Clone, PartialEq)]
pub struct DoubleLoopOutput {
    pub trajectory: Trajectory,
    /// One N×K precoder per slot; silent slots carry zeros.
    pub precoders: Vec<CMat>,
    /// Aggregate report: objective Γ, summed lower bounds and iterations,
    /// worst violation over slots.
    pub report: SolverReport,
    /// Γ of every accepted outer iterate, starting with the first sweep.
    pub gamma_history: Vec<f64>,
    pub outer_iterations: usize,
}

/// Array rotation used in slot `i` (1-based): the configured offset plus,
/// when periodic repositioning is enabled, a fresh draw per period.
pub fn slot_rotation(config: &ScenarioConfig, i: usize) -> f64 {
    if config.rotation_period.is_none() {
        return config.rotation_phi;
    }
    let epoch = config.rotation_epoch(i) as u64;
    let mut rng = substream(config.rng_seed, ROTATION_STREAM_BASE + epoch);
    config.rotation_phi + sample_rotation_offset(config, &mut rng)
}

/// Fekete receive positions scaled to the span ±(M−1)/M of the uniform
/// grid, when the configuration asks for them on a linear BS.
fn receiver_positions(config: &ScenarioConfig) -> Result<Option<Vec<f64>>> {
    let b = &config.bs;
    if !b.fekete_receiver || b.kind != BsKindSpec::Linear || b.m < 2 {
        return Ok(None);
    }
    let scale = (b.m - 1) as f64 / b.m as f64;
    let beta = fekete_points(b.m, config.solver.fekete_tol, config.solver.fekete_starts)?.beta;
    Ok(Some(beta.into_iter().map(|x| x * scale).collect()))
}

/// Channel from the array centered above `center` to the BS.
pub fn slot_channel(config: &ScenarioConfig, axes: &[TopologyVector], center: Point2, phi: f64) -> Result<CMat> {
    let axes: Vec<Vec<f64>> = axes.iter().map(|t| t.as_slice().to_vec()).collect();
    let array = array_from_spec(config, &axes)?.with_rotation(phi);
    let layout = bs_layout_from_spec(config, receiver_positions(config)?);
    let bs = BsGeometry::from_positions(&layout, center, config.bs.position, config.altitude)?;
    Ok(exact_channel(&array, &bs, Radio::from(config), config.range_mode).h)
}

struct Sweep {
    precoders: Vec<CMat>,
    powers: Vec<f64>,
    report: SolverReport,
}

fn precode_all(config: &ScenarioConfig, axes: &[TopologyVector], traj: &Trajectory, cap: f64) -> Result<Sweep> {
    let slots = traj.slots();
    let n = config.array.n;
    let k = config.array.k;
    let mut precoders = Vec::with_capacity(slots);
    let mut powers = Vec::with_capacity(slots);
    let mut report = SolverReport {
        status: SolveStatus::Optimal,
        objective: 0.0,
        iterations: 0,
        max_constraint_violation: 0.0,
        lower_bound: 0.0,
        rank_one: true,
    };
    for i in 1..=slots {
        if config.is_repositioning_slot(i) {
            precoders.push(CMat::zeros(n, k));
            powers.push(0.0);
            continue;
        }
        let wrap = |e: Error| Error::Slot {
            slot: i,
            source: Box::new(e),
        };
        let h = slot_channel(config, axes, traj.centers[i], slot_rotation(config, i)).map_err(wrap)?;
        let problem = PrecodingProblem {
            h,
            streams: k,
            gamma: config.gamma,
            sigma2: config.sigma2,
            spectral_cap: cap,
            p_max: config.p_max,
        };
        let (w, r) = solve_precoding_slot(&problem, config.solver.tol).map_err(wrap)?;
        report.objective += r.objective;
        report.lower_bound += r.lower_bound;
        report.iterations += r.iterations;
        report.max_constraint_violation = report.max_constraint_violation.max(r.max_constraint_violation);
        report.rank_one &= r.rank_one;
        if r.status != SolveStatus::Optimal {
            report.status = r.status;
        }
        powers.push(r.objective);
        precoders.push(w);
    }
    Ok(Sweep {
        precoders,
        powers,
        report,
    })
}

/// Alternates trajectory sweeps against the path-loss power surrogate with
/// exact per-slot precoding until the centers stop moving.
///
/// Each outer iteration re-linearizes the no-fly zones at the previous
/// iterate, recomputes every center, and re-solves all slot precoders.
/// An iterate that would increase Γ is rejected and the previous one
/// returned.
pub fn double_loop_optimize(config: &ScenarioConfig, axes: &[TopologyVector]) -> Result<DoubleLoopOutput> {
    if config.array.k > config.bs.m_total() {
        return Err(Error::invalid(format!(
            "K={} exceeds the {} BS antennas",
            config.array.k,
            config.bs.m_total()
        )));
    }
    let params = ChanceConstraintParams::from(config);
    let cap = spectral_cap(&params, config.array.n)?;
    let surrogate = PowerSurrogate::from_config(config);

    let mut current = Trajectory::straight(config)?;
    let mut accepted: Option<Sweep> = None;
    let mut history = Vec::new();
    let mut status = SolveStatus::MaxIters;
    let mut outer = 0;
    for s in 1..=config.max_outer {
        outer = s;
        let mut work = sweep_trajectory(&current, config, &surrogate)?;
        let sweep = precode_all(config, axes, &work, cap)?;
        let gamma: f64 = sweep.powers.iter().sum();
        let previous = accepted.as_ref().map(|a| a.report.objective);
        if let Some(prev) = previous {
            if gamma > prev * (1.0 + 1e-9) {
                status = SolveStatus::Optimal;
                break;
            }
        }
        let moved = current
            .centers
            .iter()
            .zip(&work.centers)
            .map(|(a, b)| (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2))
            .fold(0.0, f64::max);
        work.per_slot_power = sweep.powers.clone();
        work.total_gamma = gamma;
        current = work;
        history.push(gamma);
        accepted = Some(sweep);
        if moved < config.epsilon_out {
            status = SolveStatus::Optimal;
            break;
        }
    }
    let sweep = accepted.ok_or_else(|| Error::NonConvergence("no outer iteration completed".into()))?;
    let mut report = sweep.report;
    if report.status == SolveStatus::Optimal {
        report.status = status;
    }
    Ok(DoubleLoopOutput {
        trajectory: current,
        precoders: sweep.precoders,
        report,
        gamma_history: history,
        outer_iterations: outer,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ConfigFile;
    use crate::topology::topology_from_config;

    #[test]
    fn fekete_receiver_changes_channel() {
        let mut f = ConfigFile::default();
        f.bs.m = Some(4);
        let plain = f.resolve().unwrap();
        f.bs.fekete_receiver = Some(true);
        let fek = f.resolve().unwrap();
        assert_eq!(receiver_positions(&plain).unwrap(), None);
        let z = receiver_positions(&fek).unwrap().unwrap();
        assert!((z[0] + 0.75).abs() < 1e-12 && (z[3] - 0.75).abs() < 1e-12);
        let axes = topology_from_config(&plain).unwrap();
        let a = slot_channel(&plain, &axes, [250.0, 300.0], 0.0).unwrap();
        let b = slot_channel(&fek, &axes, [250.0, 300.0], 0.0).unwrap();
        assert!((&a - &b).norm() > 1e-9);
        // The outer elements coincide with the uniform grid's endpoints.
        assert!((a.row(0) - b.row(0)).norm() < 1e-12 * a.row(0).norm());
    }
}
