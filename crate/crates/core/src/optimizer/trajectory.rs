use crate::config::{NoFlyZone, ScenarioConfig};
use crate::error::{Error, Result};
use crate::geometry::Point2;

use super::precoding::PrecodingProblem;

/// `normal · p ≥ offset`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Halfspace {
    pub normal: Point2,
    pub offset: f64,
}

impl Halfspace {
    pub fn contains(&self, p: Point2, slack: f64) -> bool {
        dot(self.normal, p) >= self.offset - slack * norm(self.normal)
    }
}

/// Disc `‖p − center‖ ≤ radius`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Disc {
    pub center: Point2,
    pub radius: f64,
}

impl Disc {
    fn contains(&self, p: Point2, slack: f64) -> bool {
        norm(sub(p, self.center)) <= self.radius + slack
    }
}

/// One slot of the alternating scheme: the precoding data at the current
/// channel plus the convexified trajectory constraints.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotProblem {
    pub precoding: PrecodingProblem,
    pub previous_center: Point2,
    pub no_fly_linearizations: Vec<Halfspace>,
    /// Maximum displacement per slot in meters.
    pub speed_limit: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// I + 1 horizontal centers; slot i (1-based) flies at `centers[i]`.
    pub centers: Vec<Point2>,
    /// Transmit power of slot i at index i − 1 (zero in silent slots).
    pub per_slot_power: Vec<f64>,
    pub total_gamma: f64,
}

impl Trajectory {
    /// Constant-speed straight line from d_I to d_F.
    pub fn straight(config: &ScenarioConfig) -> Result<Self> {
        let n = config.slots;
        let dist = norm(sub(config.d_f, config.d_i));
        if dist > n as f64 * config.step_limit() * (1.0 + 1e-12) {
            return Err(Error::Unreachable {
                slot: 0,
                distance: dist,
            });
        }
        let centers = (0..=n)
            .map(|i| {
                let t = i as f64 / n as f64;
                [
                    config.d_i[0] + t * (config.d_f[0] - config.d_i[0]),
                    config.d_i[1] + t * (config.d_f[1] - config.d_i[1]),
                ]
            })
            .collect();
        Ok(Trajectory {
            centers,
            per_slot_power: vec![0.0; n],
            total_gamma: 0.0,
        })
    }

    pub fn slots(&self) -> usize {
        self.centers.len() - 1
    }

    /// Largest violation of the endpoint, speed and no-fly invariants.
    pub fn feasibility_violation(&self, config: &ScenarioConfig) -> f64 {
        let n = self.centers.len() - 1;
        let mut worst = norm(sub(self.centers[0], config.d_i)).max(norm(sub(self.centers[n], config.d_f)));
        let s = config.step_limit();
        for w in self.centers.windows(2) {
            worst = worst.max(norm(sub(w[1], w[0])) - s);
        }
        for p in &self.centers {
            for z in &config.no_fly_zones {
                worst = worst.max(z.radius - norm(sub(*p, z.center)));
            }
        }
        worst.max(0.0)
    }
}

/// Path-loss-scaled slot power: `unit_power · (4π f_c / c)² · (‖p − target‖² + h²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerSurrogate {
    /// Ground projection of the BS center.
    pub target: Point2,
    pub altitude: f64,
    /// Power meeting the SNR target through a unit-gain channel.
    pub unit_power: f64,
    pub f_c: f64,
    pub c: f64,
}

impl PowerSurrogate {
    pub fn from_config(config: &ScenarioConfig) -> Self {
        PowerSurrogate {
            target: config.bs.position,
            altitude: config.altitude,
            unit_power: config.gamma * config.sigma2 * config.array.k as f64,
            f_c: config.f_c,
            c: config.c,
        }
    }

    pub fn value(&self, p: Point2) -> f64 {
        let d = sub(p, self.target);
        let g = 4.0 * std::f64::consts::PI * self.f_c / self.c;
        self.unit_power * g * g * (dot(d, d) + self.altitude * self.altitude)
    }
}

fn sub(a: Point2, b: Point2) -> Point2 {
    [a[0] - b[0], a[1] - b[1]]
}

fn dot(a: Point2, b: Point2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

fn norm(a: Point2) -> f64 {
    a[0].hypot(a[1])
}

/// First-order inner approximation of the disc's exterior around `p_prev`:
/// ‖p_prev − χ‖² + 2 (p_prev − χ)ᵀ (p − p_prev) ≥ Υ².
pub fn linearize_no_fly(p_prev: Point2, zone: &NoFlyZone) -> Result<Halfspace> {
    let d = sub(p_prev, zone.center);
    if d[0] == 0.0 && d[1] == 0.0 {
        return Err(Error::DegenerateLinearization);
    }
    Ok(Halfspace {
        normal: [2.0 * d[0], 2.0 * d[1]],
        offset: zone.radius * zone.radius - dot(d, d) + 2.0 * dot(d, p_prev),
    })
}

/// Euclidean projection of `target` onto the intersection of discs and
/// halfspaces, or `None` when the intersection is empty.
///
/// The minimizer is either the target itself, its projection onto a single
/// constraint boundary, or a boundary intersection point of two
/// constraints; the closest feasible candidate is returned.
pub fn project(target: Point2, discs: &[Disc], halfspaces: &[Halfspace]) -> Option<Point2> {
    let scale = 1.0
        + norm(target)
        + discs.iter().map(|d| norm(d.center) + d.radius).fold(0.0, f64::max);
    let slack = 1e-9 * scale;
    let feasible = |p: Point2| {
        discs.iter().all(|d| d.contains(p, slack)) && halfspaces.iter().all(|h| h.contains(p, slack))
    };
    let mut cands: Vec<Point2> = vec![target];
    for d in discs {
        let v = sub(target, d.center);
        let r = norm(v);
        if r > d.radius && r > 0.0 {
            cands.push([d.center[0] + v[0] * d.radius / r, d.center[1] + v[1] * d.radius / r]);
        } else if r == 0.0 {
            cands.push(d.center);
        }
    }
    for h in halfspaces {
        let nn = dot(h.normal, h.normal);
        let t = (h.offset - dot(h.normal, target)) / nn;
        if t > 0.0 {
            cands.push([target[0] + t * h.normal[0], target[1] + t * h.normal[1]]);
        }
    }
    for (a, da) in discs.iter().enumerate() {
        for db in &discs[a + 1..] {
            cands.extend(circle_circle(da, db));
        }
        for h in halfspaces {
            cands.extend(circle_line(da, h));
        }
    }
    for (a, ha) in halfspaces.iter().enumerate() {
        for hb in &halfspaces[a + 1..] {
            if let Some(p) = line_line(ha, hb) {
                cands.push(p);
            }
        }
    }
    let mut best: Option<(f64, Point2)> = None;
    for p in cands {
        if !p[0].is_finite() || !p[1].is_finite() || !feasible(p) {
            continue;
        }
        let dist = norm(sub(p, target));
        let better = match best {
            None => true,
            Some((bd, bp)) => dist < bd || (dist == bd && (p[0], p[1]) < (bp[0], bp[1])),
        };
        if better {
            best = Some((dist, p));
        }
    }
    best.map(|b| b.1)
}

fn circle_circle(a: &Disc, b: &Disc) -> Vec<Point2> {
    let v = sub(b.center, a.center);
    let d = norm(v);
    if d == 0.0 {
        return if a.radius == 0.0 && b.radius == 0.0 { vec![a.center] } else { vec![] };
    }
    let x = (d * d + a.radius * a.radius - b.radius * b.radius) / (2.0 * d);
    let h2 = a.radius * a.radius - x * x;
    if h2 < -1e-12 * (1.0 + a.radius * a.radius) {
        return vec![];
    }
    let h = h2.max(0.0).sqrt();
    let e = [v[0] / d, v[1] / d];
    let base = [a.center[0] + x * e[0], a.center[1] + x * e[1]];
    vec![
        [base[0] - h * e[1], base[1] + h * e[0]],
        [base[0] + h * e[1], base[1] - h * e[0]],
    ]
}

fn circle_line(c: &Disc, h: &Halfspace) -> Vec<Point2> {
    let nn = norm(h.normal);
    if nn == 0.0 {
        return vec![];
    }
    let n = [h.normal[0] / nn, h.normal[1] / nn];
    let off = h.offset / nn;
    let dist = off - dot(n, c.center);
    let h2 = c.radius * c.radius - dist * dist;
    if h2 < -1e-12 * (1.0 + c.radius * c.radius) {
        return vec![];
    }
    let t = h2.max(0.0).sqrt();
    let foot = [c.center[0] + dist * n[0], c.center[1] + dist * n[1]];
    vec![
        [foot[0] - t * n[1], foot[1] + t * n[0]],
        [foot[0] + t * n[1], foot[1] - t * n[0]],
    ]
}

fn line_line(a: &Halfspace, b: &Halfspace) -> Option<Point2> {
    let det = a.normal[0] * b.normal[1] - a.normal[1] * b.normal[0];
    if det.abs() <= 1e-14 * norm(a.normal) * norm(b.normal) {
        return None;
    }
    Some([
        (a.offset * b.normal[1] - a.normal[1] * b.offset) / det,
        (a.normal[0] * b.offset - a.offset * b.normal[0]) / det,
    ])
}

/// Closest point to the surrogate target within one step of `anchor`,
/// outside the zones linearized at `lin_point` and inside `reach`. Falls
/// back to linearizing at `anchor`, where hovering is always admissible.
fn step_from(
    anchor: Point2,
    lin_point: Point2,
    reach: Option<Disc>,
    config: &ScenarioConfig,
    surrogate: &PowerSurrogate,
    slot: usize,
) -> Result<Point2> {
    let mut discs = vec![Disc {
        center: anchor,
        radius: config.step_limit(),
    }];
    discs.extend(reach);
    let around = |p: Point2| -> Result<Vec<Halfspace>> {
        config.no_fly_zones.iter().map(|z| linearize_no_fly(p, z)).collect()
    };
    if let Ok(hs) = around(lin_point) {
        if let Some(p) = project(surrogate.target, &discs, &hs) {
            return Ok(p);
        }
    }
    let hs = around(anchor)?;
    project(surrogate.target, &discs, &hs).ok_or_else(|| Error::Unreachable {
        slot,
        distance: reach.map_or(0.0, |d| norm(sub(d.center, anchor))),
    })
}

/// New center for slot `slot_i` (1-based).
///
/// `prev_traj.centers[slot_i − 1]` is the already-updated center of the
/// preceding slot and `prev_traj.centers[slot_i]` the previous iterate, at
/// which the no-fly zones are linearized. The step stays within δ·V_max,
/// outside every linearized zone, and close enough to d_F to arrive in the
/// remaining slots.
pub fn trajectory_step(
    prev_traj: &Trajectory,
    slot_i: usize,
    config: &ScenarioConfig,
    surrogate: &PowerSurrogate,
) -> Result<Point2> {
    let n = prev_traj.slots();
    if slot_i == 0 || slot_i > n {
        return Err(Error::invalid(format!("slot {slot_i} outside 1..={n}")));
    }
    let reach = Disc {
        center: config.d_f,
        radius: (n - slot_i) as f64 * config.step_limit(),
    };
    step_from(
        prev_traj.centers[slot_i - 1],
        prev_traj.centers[slot_i],
        Some(reach),
        config,
        surrogate,
        slot_i,
    )
}

fn surrogate_cost(centers: &[Point2], surrogate: &PowerSurrogate) -> f64 {
    centers[1..].iter().map(|&p| norm(sub(p, surrogate.target)).powi(2)).sum()
}

/// One trajectory update against the previous iterate `prev`.
///
/// A greedy sweep forward from d_I and one backward from d_F are joined at
/// the cheapest slot where they lie within one step of each other; this
/// keeps zone detours on the way out. If the sweeps never meet, a forward
/// sweep with the reachability disc is used instead.
pub fn sweep_trajectory(prev: &Trajectory, config: &ScenarioConfig, surrogate: &PowerSurrogate) -> Result<Trajectory> {
    let n = prev.slots();
    let s = config.step_limit();
    let mut fwd = prev.centers.clone();
    fwd[0] = config.d_i;
    for i in 1..=n {
        fwd[i] = step_from(fwd[i - 1], prev.centers[i], None, config, surrogate, i)?;
    }
    let mut bwd = prev.centers.clone();
    bwd[n] = config.d_f;
    for i in (0..n).rev() {
        bwd[i] = step_from(bwd[i + 1], prev.centers[i], None, config, surrogate, i)?;
    }
    let mut best: Option<(f64, Vec<Point2>)> = None;
    for j in 0..n {
        if norm(sub(bwd[j + 1], fwd[j])) > s * (1.0 + 1e-12) {
            continue;
        }
        let mut c = fwd[..=j].to_vec();
        c.extend_from_slice(&bwd[j + 1..]);
        let cost = surrogate_cost(&c, surrogate);
        if best.as_ref().is_none_or(|b| cost < b.0) {
            best = Some((cost, c));
        }
    }
    let centers = match best {
        Some((_, c)) => c,
        None => {
            let mut work = prev.clone();
            work.centers[0] = config.d_i;
            for i in 1..=n {
                work.centers[i] = trajectory_step(&work, i, config, surrogate)?;
            }
            work.centers
        }
    };
    Ok(Trajectory {
        centers,
        per_slot_power: vec![0.0; n],
        total_gamma: 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linearization_example() {
        let z = NoFlyZone { center: [0.0, 0.0], radius: 1.0 };
        let h = linearize_no_fly([2.0, 0.0], &z).unwrap();
        assert!((h.offset / h.normal[0] - 1.25).abs() < 1e-15);
        assert_eq!(h.normal[1], 0.0);
        assert!(h.contains([2.0, 0.0], 0.0));
        assert!(linearize_no_fly([0.0, 0.0], &z).is_err());
    }

    #[test]
    fn projection_cases() {
        let d = Disc { center: [0.0, 0.0], radius: 1.0 };
        assert_eq!(project([0.5, 0.0], &[d], &[]), Some([0.5, 0.0]));
        let p = project([3.0, 0.0], &[d], &[]).unwrap();
        assert!((p[0] - 1.0).abs() < 1e-15);
        let h = Halfspace { normal: [0.0, 1.0], offset: 0.5 };
        let p = project([3.0, 0.0], &[d], &[h]).unwrap();
        assert!((p[1] - 0.5).abs() < 1e-12 && (p[0] - 0.75f64.sqrt()).abs() < 1e-12);
        let far = Halfspace { normal: [0.0, 1.0], offset: 2.0 };
        assert_eq!(project([0.0, 0.0], &[d], &[far]), None);
    }
}
