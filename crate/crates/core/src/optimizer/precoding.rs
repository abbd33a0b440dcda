use nalgebra::DMatrix;

use crate::error::{ConstraintFamily, Error, Result};
use crate::linalg::{hermitian_eigen, max_eigenvalue, min_eigenvalue, singular_values, CMat, CVec, C64};

use super::sdp::{hermitian_basis, solve, BlockSdp, IpmOptions, SdpStatus, Term};

/// Complex N×K precoder, one column per stream.
pub type PrecodingMatrix = CMat;

/// Largest array for which the relaxation is solved over the full N-dim
/// space; bigger arrays restrict beams to the span of the served channels.
const FULL_SPACE_LIMIT: usize = 24;

/// Data of one per-slot precoding problem.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecodingProblem {
    /// M×N channel; the first K rows are the served streams.
    pub h: CMat,
    pub streams: usize,
    pub gamma: f64,
    pub sigma2: f64,
    /// Bound c in W Wᴴ ⪯ c I; `f64::INFINITY` disables it.
    pub spectral_cap: f64,
    /// Per-UAV power limit; `f64::INFINITY` disables it.
    pub p_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible(ConstraintFamily),
    MaxIters,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverReport {
    pub status: SolveStatus,
    /// Tr(W Wᴴ) in watts.
    pub objective: f64,
    pub iterations: usize,
    /// Largest relative violation over the three constraint families,
    /// evaluated directly on the returned W.
    pub max_constraint_violation: f64,
    /// Certified lower bound on the optimal power, in watts.
    pub lower_bound: f64,
    /// Whether every lifted block came back rank one.
    pub rank_one: bool,
}

impl PrecodingProblem {
    fn validate(&self) -> Result<()> {
        let (m, n) = self.h.shape();
        if self.streams == 0 || self.streams > m || self.streams > n {
            return Err(Error::invalid(format!(
                "need 1 <= K <= min(M, N), got K={}, M={m}, N={n}",
                self.streams
            )));
        }
        if !(self.gamma > 0.0) {
            return Err(Error::invalid("gamma must be positive"));
        }
        if !(self.sigma2 > 0.0) {
            return Err(Error::invalid("sigma2 must be positive"));
        }
        if self.spectral_cap.is_nan() || self.p_max.is_nan() {
            return Err(Error::invalid("caps must not be NaN"));
        }
        if self.h.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::invalid("channel has non-finite entries"));
        }
        Ok(())
    }

    fn served(&self) -> CMat {
        self.h.rows(0, self.streams).into_owned()
    }

    /// h_k as a column, so that the received amplitude is h_kᴴ w.
    fn stream_channel(&self, k: usize) -> CVec {
        self.h.row(k).adjoint()
    }
}

/// |h_kᴴ w_k|² / (Σ_{i≠k} |h_kᴴ w_i|² + σ²) for the first K rows of `h`.
pub fn snr_per_stream(h: &CMat, w: &CMat, sigma2: f64) -> Vec<f64> {
    let k = w.ncols();
    let g = h.rows(0, k) * w;
    (0..k)
        .map(|a| {
            let interference: f64 = (0..k).filter(|&b| b != a).map(|b| g[(a, b)].norm_sqr()).sum();
            g[(a, a)].norm_sqr() / (interference + sigma2)
        })
        .collect()
}

/// Σ_i Tr(W_i W_iᴴ).
pub fn total_power(precoders: &[CMat]) -> f64 {
    precoders.iter().map(|w| w.norm_squared()).sum()
}

/// Largest relative violation of the SNR, per-UAV power and spectral-cap
/// constraints by `w`.
pub fn constraint_violation(problem: &PrecodingProblem, w: &CMat) -> f64 {
    let snr = snr_per_stream(&problem.h, w, problem.sigma2);
    let mut worst: f64 = snr
        .iter()
        .map(|s| ((problem.gamma - s) / problem.gamma).max(0.0))
        .fold(0.0, f64::max);
    let ww = w * w.adjoint();
    if problem.p_max.is_finite() {
        for n in 0..ww.nrows() {
            let p = ww[(n, n)].re;
            let v = if problem.p_max > 0.0 { (p - problem.p_max) / problem.p_max } else { p };
            worst = worst.max(v.max(0.0));
        }
    }
    if problem.spectral_cap.is_finite() {
        let l = max_eigenvalue(&ww);
        let c = problem.spectral_cap;
        let v = if c > 0.0 { (l - c) / c } else { l };
        worst = worst.max(v.max(0.0));
    }
    worst
}

/// Zero-forcing precoder meeting every stream's SNR with equality.
pub fn zf_precoder(h: &CMat, gamma: f64, sigma2: f64) -> Result<PrecodingMatrix> {
    if !(gamma >= 0.0 && sigma2 > 0.0) {
        return Err(Error::invalid("need gamma >= 0 and sigma2 > 0"));
    }
    let gram = h * h.adjoint();
    let sv = singular_values(&gram);
    if sv.is_empty() || sv[sv.len() - 1] <= 1e-13 * sv[0] {
        return Err(Error::Singular("H Hᴴ is not invertible".into()));
    }
    let inv = gram.try_inverse().ok_or_else(|| Error::Singular("H Hᴴ is not invertible".into()))?;
    Ok(h.adjoint() * inv * C64::new((gamma * sigma2).sqrt(), 0.0))
}

/// Orthonormal basis of the search space and a flag telling whether it is
/// the full space.
fn search_basis(problem: &PrecodingProblem) -> (CMat, bool) {
    let n = problem.h.ncols();
    if n <= FULL_SPACE_LIMIT {
        return (CMat::identity(n, n), true);
    }
    let hs = problem.served().adjoint();
    let qr = hs.qr();
    (qr.q(), false)
}

enum Objective {
    Power,
    /// Minimize τ with per-UAV power ≤ τ·P_max (and no cap).
    PowerProbe,
    /// Minimize τ with W Wᴴ ⪯ τ·c I (and no per-UAV limit).
    CapProbe,
}

struct Layout {
    sdp: BlockSdp,
    /// Normalized per-UAV limit and cap.
    p_tilde: f64,
    c_tilde: f64,
    n_snr: usize,
    n_pow: usize,
    cap_basis: Vec<Vec<(usize, usize, C64)>>,
}

fn build(problem: &PrecodingProblem, u: &CMat, hs: f64, p_scale: f64, objective: Objective) -> Layout {
    let k = problem.streams;
    let r = u.ncols();
    let n = problem.h.ncols();
    let use_pow = match objective {
        Objective::Power => problem.p_max.is_finite(),
        Objective::PowerProbe => true,
        Objective::CapProbe => false,
    };
    let use_cap = match objective {
        Objective::Power => problem.spectral_cap.is_finite(),
        Objective::PowerProbe => false,
        Objective::CapProbe => true,
    };
    let probe = !matches!(objective, Objective::Power);
    let p_tilde = problem.p_max / p_scale;
    let c_tilde = problem.spectral_cap / p_scale;

    let g: Vec<CVec> = (0..k)
        .map(|i| u.adjoint() * problem.stream_channel(i) / C64::new(hs, 0.0))
        .collect();
    let mut vecs = g.clone();
    if use_pow {
        for row in 0..n {
            vecs.push(u.row(row).adjoint());
        }
    }

    // Blocks: X_0..X_{K-1}, s_0..s_{K-1}, [t_0..t_{N-1}], [S], [τ].
    let mut sizes = vec![r; k];
    sizes.extend(std::iter::repeat_n(1, k));
    let t0 = sizes.len();
    if use_pow {
        sizes.extend(std::iter::repeat_n(1, n));
    }
    let s_block = sizes.len();
    if use_cap {
        sizes.push(r);
    }
    let tau_block = sizes.len();
    if probe {
        sizes.push(1);
    }
    let nb = sizes.len();
    let mut c: Vec<CMat> = sizes.iter().map(|&s| CMat::zeros(s, s)).collect();
    if probe {
        c[tau_block] = CMat::identity(1, 1);
    } else {
        for blk in c.iter_mut().take(k) {
            *blk = CMat::identity(r, r);
        }
    }
    let mut vectors: Vec<Vec<CVec>> = vec![Vec::new(); nb];
    for v in vectors.iter_mut().take(k) {
        *v = vecs.clone();
    }

    let mut constraints = Vec::new();
    let mut b = Vec::new();
    for a in 0..k {
        let mut terms: Vec<Term> = (0..k)
            .map(|i| Term::RankOne {
                block: i,
                vec: a,
                scale: if i == a { 1.0 } else { -problem.gamma },
            })
            .collect();
        terms.push(Term::Scalar { block: k + a, scale: -1.0 });
        constraints.push(terms);
        b.push(1.0);
    }
    if use_pow {
        for row in 0..n {
            let mut terms: Vec<Term> = (0..k)
                .map(|i| Term::RankOne { block: i, vec: k + row, scale: 1.0 })
                .collect();
            terms.push(Term::Scalar { block: t0 + row, scale: 1.0 });
            if probe {
                terms.push(Term::Scalar { block: tau_block, scale: -p_tilde });
                b.push(0.0);
            } else {
                b.push(p_tilde);
            }
            constraints.push(terms);
        }
    }
    let mut cap_basis = Vec::new();
    if use_cap {
        for (entries, tr) in hermitian_basis(r) {
            let mut terms: Vec<Term> = (0..k)
                .map(|i| Term::Basis { block: i, entries: entries.clone() })
                .collect();
            terms.push(Term::Basis { block: s_block, entries: entries.clone() });
            if probe {
                if tr != 0.0 {
                    terms.push(Term::Scalar { block: tau_block, scale: -c_tilde * tr });
                }
                b.push(0.0);
            } else {
                b.push(c_tilde * tr);
            }
            constraints.push(terms);
            cap_basis.push(entries);
        }
    }
    Layout {
        n_snr: k,
        n_pow: if use_pow { n } else { 0 },
        cap_basis,
        p_tilde,
        c_tilde,
        sdp: BlockSdp {
            sizes,
            c,
            vectors,
            constraints,
            b,
        },
    }
}

/// Dual objective of the power problem after scaling the clipped duals
/// until every full-space dual slack is PSD; a valid lower bound on the
/// normalized optimal power.
fn certified_bound(problem: &PrecodingProblem, layout: &Layout, y: &[f64], u: &CMat, hs: f64) -> f64 {
    let k = problem.streams;
    let n = problem.h.ncols();
    let r = u.ncols();
    let lambda: Vec<f64> = y[..layout.n_snr].iter().map(|v| v.max(0.0)).collect();
    let mu: Vec<f64> = y[layout.n_snr..layout.n_snr + layout.n_pow]
        .iter()
        .map(|v| (-v).max(0.0))
        .collect();
    let mut ycap = CMat::zeros(r, r);
    for (entries, &yi) in layout.cap_basis.iter().zip(&y[layout.n_snr + layout.n_pow..]) {
        for &(p, q, c) in entries {
            ycap[(p, q)] -= c * yi;
        }
    }
    let ycap = if layout.cap_basis.is_empty() {
        ycap
    } else {
        let (vals, vecs) = hermitian_eigen(&ycap);
        let d = CMat::from_diagonal(&CVec::from_iterator(r, vals.iter().map(|&l| C64::new(l.max(0.0), 0.0))));
        &vecs * d * vecs.adjoint()
    };
    let mut dual = lambda.iter().sum::<f64>();
    if !layout.cap_basis.is_empty() {
        dual -= ycap.trace().re * layout.c_tilde;
    }
    if layout.n_pow > 0 {
        dual -= mu.iter().sum::<f64>() * layout.p_tilde;
    }
    let ht: Vec<CVec> = (0..k)
        .map(|i| problem.stream_channel(i) / C64::new(hs, 0.0))
        .collect();
    let mut common = u * &ycap * u.adjoint();
    for (i, &m) in mu.iter().enumerate() {
        common[(i, i)] += C64::new(m, 0.0);
    }
    for (i, h) in ht.iter().enumerate() {
        common.gerc(C64::new(problem.gamma * lambda[i], 0.0), h, h, C64::new(1.0, 0.0));
    }
    let mut theta: f64 = 1.0;
    for a in 0..k {
        let mut g = common.clone();
        g.gerc(
            C64::new(-(1.0 + problem.gamma) * lambda[a], 0.0),
            &ht[a],
            &ht[a],
            C64::new(1.0, 0.0),
        );
        debug_assert_eq!(g.nrows(), n);
        let lmin = min_eigenvalue(&g);
        if lmin < -1.0 {
            theta = theta.min(-1.0 / lmin);
        }
    }
    (theta * dual).max(0.0)
}

/// Rank-one beams from the lifted solution: principal eigenvectors, with
/// powers re-solved so each stream meets γ exactly.
fn recover(problem: &PrecodingProblem, x: &[CMat], u: &CMat) -> (Vec<CMat>, bool) {
    let k = problem.streams;
    let mut dirs = Vec::with_capacity(k);
    let mut eig_w = CMat::zeros(u.nrows(), k);
    let mut rank_one = true;
    for (a, xa) in x.iter().take(k).enumerate() {
        let (vals, vecs) = hermitian_eigen(xa);
        let top = vals[vals.len() - 1].max(0.0);
        if vals.len() > 1 && vals[vals.len() - 2] > 1e-6 * top {
            rank_one = false;
        }
        let v = u * vecs.column(vecs.ncols() - 1);
        eig_w.set_column(a, &(&v * C64::new(top.sqrt(), 0.0)));
        dirs.push(v);
    }
    let mut candidates = Vec::new();

    // Power control on the fixed directions.
    let gains = DMatrix::<f64>::from_fn(k, k, |a, i| problem.stream_channel(a).dotc(&dirs[i]).norm_sqr());
    let mut sys = DMatrix::<f64>::zeros(k, k);
    for a in 0..k {
        for i in 0..k {
            sys[(a, i)] = if a == i { gains[(a, a)] } else { -problem.gamma * gains[(a, i)] };
        }
    }
    let rhs = nalgebra::DVector::from_element(k, problem.gamma * problem.sigma2);
    if let Some(p) = sys.lu().solve(&rhs) {
        if p.iter().all(|&v| v > 0.0 && v.is_finite()) {
            let mut w = CMat::zeros(u.nrows(), k);
            for a in 0..k {
                w.set_column(a, &(&dirs[a] * C64::new(p[a].sqrt(), 0.0)));
            }
            candidates.push(w);
        }
    }

    // Uniform rescale of the eigen solution.
    let g = problem.served() * &eig_w;
    let mut alpha: f64 = 0.0;
    let mut ok = true;
    for a in 0..k {
        let s = g[(a, a)].norm_sqr();
        let i: f64 = (0..k).filter(|&b| b != a).map(|b| g[(a, b)].norm_sqr()).sum();
        let margin = s - problem.gamma * i;
        if margin <= 0.0 {
            ok = false;
            break;
        }
        alpha = alpha.max(problem.gamma * problem.sigma2 / margin);
    }
    if ok {
        candidates.push(&eig_w * C64::new(alpha.sqrt(), 0.0));
    }
    if candidates.is_empty() {
        candidates.push(eig_w);
    }
    (candidates, rank_one)
}

/// Rotates each column so that h_kᴴ w_k is real and nonnegative.
fn align_phases(problem: &PrecodingProblem, w: &mut CMat) {
    for a in 0..problem.streams {
        let z = problem.stream_channel(a).dotc(&w.column(a).into_owned());
        if z.norm() > 0.0 {
            let rot = z.conj() / z.norm();
            let col = w.column(a) * rot;
            w.set_column(a, &col);
        }
    }
}

/// Minimum-power precoder meeting every stream's SNR, the spectral cap and
/// the per-UAV power limit.
///
/// Infeasible instances return [`Error::Infeasible`] naming the first
/// violated family in the order per-UAV power, spectral cap, SNR.
pub fn solve_precoding_slot(problem: &PrecodingProblem, tol: f64) -> Result<(PrecodingMatrix, SolverReport)> {
    problem.validate()?;
    if !(tol > 0.0) {
        return Err(Error::invalid("tolerance must be positive"));
    }
    if problem.p_max <= 0.0 {
        return Err(Error::Infeasible {
            family: ConstraintFamily::PerUavPower,
            detail: "P_max is zero".into(),
        });
    }
    if problem.spectral_cap <= 0.0 {
        return Err(Error::Infeasible {
            family: ConstraintFamily::SpectralCap,
            detail: "spectral cap is zero".into(),
        });
    }
    let served = problem.served();
    let sv = singular_values(&served);
    if sv[sv.len() - 1] <= 1e-10 * sv[0] {
        return Err(Error::Singular("served channel rows are linearly dependent".into()));
    }
    let k = problem.streams;
    let hs = (0..k).map(|a| problem.stream_channel(a).norm()).fold(0.0, f64::max);
    let p_scale = problem.gamma * problem.sigma2 / (hs * hs);
    let (u, _full) = search_basis(problem);
    let opts = IpmOptions {
        tol: tol.min(1e-8),
        max_iters: 150,
    };

    let layout = build(problem, &u, hs, p_scale, Objective::Power);
    let sol = solve(&layout.sdp, &opts);
    if sol.status != SdpStatus::Optimal {
        return Err(diagnose(problem, &u, hs, p_scale, &opts, sol.iterations));
    }
    let lower = certified_bound(problem, &layout, &sol.y, &u, hs) * p_scale;
    let (candidates, rank_one) = recover(problem, &sol.x, &u);
    let mut best: Option<(CMat, f64, f64)> = None;
    for mut w in candidates {
        align_phases(problem, &mut w);
        let viol = constraint_violation(problem, &w);
        let power = w.norm_squared();
        let better = match &best {
            None => true,
            Some((_, bv, bp)) => {
                let feas = viol <= 1e-9;
                let bfeas = *bv <= 1e-9;
                (feas && !bfeas) || (feas == bfeas && (if feas { power < *bp } else { viol < *bv }))
            }
        };
        if better {
            best = Some((w, viol, power));
        }
    }
    let (w, viol, power) = best.expect("at least one candidate");
    let status = if viol <= 1e-6 { SolveStatus::Optimal } else { SolveStatus::MaxIters };
    Ok((
        w,
        SolverReport {
            status,
            objective: power,
            iterations: sol.iterations,
            max_constraint_violation: viol,
            lower_bound: lower.min(power),
            rank_one,
        },
    ))
}

fn diagnose(problem: &PrecodingProblem, u: &CMat, hs: f64, p_scale: f64, opts: &IpmOptions, iters: usize) -> Error {
    let probe = |obj: Objective| {
        let layout = build(problem, u, hs, p_scale, obj);
        let s = solve(&layout.sdp, opts);
        (s.status, s.primal_objective)
    };
    if problem.p_max.is_finite() {
        let (st, tau) = probe(Objective::PowerProbe);
        if st == SdpStatus::Optimal && tau > 1.0 + 1e-6 {
            return Error::Infeasible {
                family: ConstraintFamily::PerUavPower,
                detail: format!("meeting the SNR target needs {tau:.6} x P_max on some UAV"),
            };
        }
    }
    if problem.spectral_cap.is_finite() {
        let (st, tau) = probe(Objective::CapProbe);
        if st == SdpStatus::Optimal && tau > 1.0 + 1e-6 {
            return Error::Infeasible {
                family: ConstraintFamily::SpectralCap,
                detail: format!("meeting the SNR target needs {tau:.6} x the spectral cap"),
            };
        }
    }
    if problem.p_max.is_finite() && problem.spectral_cap.is_finite() {
        return Error::Infeasible {
            family: ConstraintFamily::Snr,
            detail: "SNR target unreachable under the combined power limits".into(),
        };
    }
    Error::NonConvergence(format!("interior-point method stopped after {iters} iterations"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn problem(h: CMat, k: usize) -> PrecodingProblem {
        PrecodingProblem {
            h,
            streams: k,
            gamma: 1.0,
            sigma2: 1.0,
            spectral_cap: f64::INFINITY,
            p_max: f64::INFINITY,
        }
    }

    #[test]
    fn single_stream_mrt() {
        let p = problem(CMat::from_row_slice(1, 2, &[c(1.0, 0.0), c(0.0, 0.0)]), 1);
        let (w, r) = solve_precoding_slot(&p, 1e-9).unwrap();
        assert_eq!(r.status, SolveStatus::Optimal);
        assert!((r.objective - 1.0).abs() < 1e-7, "{}", r.objective);
        assert!((w[(0, 0)] - c(1.0, 0.0)).norm() < 1e-6);
        assert!(w[(1, 0)].norm() < 1e-6);
        let p = problem(CMat::from_row_slice(1, 2, &[c(1.0, 0.0), c(1.0, 0.0)]), 1);
        let (_, r) = solve_precoding_slot(&p, 1e-9).unwrap();
        assert!((r.objective - 0.5).abs() < 1e-7);
        assert!(r.lower_bound <= r.objective && r.lower_bound > 0.5 - 1e-6, "{r:?}");
    }

    #[test]
    fn zero_power_limit_is_infeasible() {
        let mut p = problem(CMat::from_row_slice(1, 2, &[c(1.0, 0.0), c(1.0, 0.0)]), 1);
        p.p_max = 0.0;
        match solve_precoding_slot(&p, 1e-9) {
            Err(Error::Infeasible { family, .. }) => assert_eq!(family, ConstraintFamily::PerUavPower),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn diagnoses_tight_limits() {
        let mut p = problem(CMat::from_row_slice(1, 2, &[c(1.0, 0.0), c(1.0, 0.0)]), 1);
        p.p_max = 0.2; // needs 0.25 per UAV
        match solve_precoding_slot(&p, 1e-9) {
            Err(Error::Infeasible { family, .. }) => assert_eq!(family, ConstraintFamily::PerUavPower),
            other => panic!("unexpected {other:?}"),
        }
        p.p_max = f64::INFINITY;
        p.spectral_cap = 0.4; // needs 0.5
        match solve_precoding_slot(&p, 1e-9) {
            Err(Error::Infeasible { family, .. }) => assert_eq!(family, ConstraintFamily::SpectralCap),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn zf_identity() {
        let w = zf_precoder(&CMat::identity(2, 2), 1.0, 1.0).unwrap();
        assert!((w - CMat::identity(2, 2)).norm() < 1e-14);
        assert!(zf_precoder(&CMat::from_element(2, 2, c(1.0, 0.0)), 1.0, 1.0).is_err());
    }

    #[test]
    fn power_bookkeeping() {
        assert_eq!(total_power(&[CMat::zeros(2, 2)]), 0.0);
        assert_eq!(total_power(&[CMat::identity(2, 2)]), 2.0);
        let snr = snr_per_stream(&CMat::identity(2, 2), &CMat::identity(2, 2), 1.0);
        assert_eq!(snr, vec![1.0, 1.0]);
    }
}
