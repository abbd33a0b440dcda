use rand::Rng;

use crate::channel::eve_channel_sample;
use crate::error::{Error, Result};
use crate::linalg::{min_eigenvalue, CMat, CVec, C64};

/// Bounded CSI error: the true stream channel lies within `epsilon[k]` of
/// `h_hat[k]` in Euclidean norm.
#[derive(Debug, Clone, PartialEq)]
pub struct UncertaintyModel {
    pub epsilon: Vec<f64>,
    pub h_hat: Vec<CVec>,
}

impl UncertaintyModel {
    pub fn new(epsilon: Vec<f64>, h_hat: Vec<CVec>) -> Result<Self> {
        if epsilon.len() != h_hat.len() {
            return Err(Error::DimensionMismatch {
                expected: format!("{} radii", h_hat.len()),
                got: epsilon.len().to_string(),
            });
        }
        if epsilon.iter().any(|&e| e < 0.0) {
            return Err(Error::invalid("uncertainty radii must be nonnegative"));
        }
        Ok(UncertaintyModel { epsilon, h_hat })
    }
}

fn interference_matrix(w_all: &[CMat], k: usize, gamma: f64) -> CMat {
    let mut a = w_all[k].clone();
    for (i, wi) in w_all.iter().enumerate() {
        if i != k {
            a -= wi * C64::new(gamma, 0.0);
        }
    }
    a
}

fn block(a: &CMat, h_hat: &CVec, eps: f64, slack: f64, gamma: f64, sigma2: f64) -> CMat {
    let n = h_hat.len();
    // U = [I_N, ĥ]; Uᴴ A U = [[A, A ĥ], [ĥᴴ A, ĥᴴ A ĥ]].
    let ah = a * h_hat;
    let corner = h_hat.dotc(&ah);
    let mut s = CMat::zeros(n + 1, n + 1);
    s.view_mut((0, 0), (n, n)).copy_from(a);
    for i in 0..n {
        s[(i, n)] = ah[i];
        s[(n, i)] = ah[i].conj();
        s[(i, i)] += slack;
    }
    s[(n, n)] = corner + C64::new(-slack * eps * eps - gamma * sigma2, 0.0);
    s
}

/// S-procedure blocks
/// `[[ς_k I, 0], [0, -ς_k ε_k² - γσ²]] + U_kᴴ (W_k - γ Σ_{i≠k} W_i) U_k`
/// with `U_k = [I_N, ĥ_k]`. All blocks PSD certifies the worst-case SNR
/// over every ε-ball.
pub fn robust_lmi_blocks(
    w_all: &[CMat],
    gamma: f64,
    sigma2: f64,
    model: &UncertaintyModel,
    slack: &[f64],
) -> Result<Vec<CMat>> {
    let k = w_all.len();
    if model.h_hat.len() != k || slack.len() != k {
        return Err(Error::DimensionMismatch {
            expected: format!("{k} streams"),
            got: format!("{} channels, {} slacks", model.h_hat.len(), slack.len()),
        });
    }
    if slack.iter().any(|&s| s < 0.0) {
        return Err(Error::invalid("slack variables must be nonnegative"));
    }
    let mut out = Vec::with_capacity(k);
    for s in 0..k {
        let n = model.h_hat[s].len();
        if w_all[s].nrows() != n || w_all[s].ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: format!("{n}x{n} outer product"),
                got: format!("{}x{}", w_all[s].nrows(), w_all[s].ncols()),
            });
        }
        let a = interference_matrix(w_all, s, gamma);
        out.push(block(&a, &model.h_hat[s], model.epsilon[s], slack[s], gamma, sigma2));
    }
    Ok(out)
}

/// Slack ς_k maximizing the smallest eigenvalue of block k, and that
/// eigenvalue. The block is affine in ς, so the objective is concave and a
/// golden-section search on a doubling bracket applies.
pub fn best_slack(w_all: &[CMat], k: usize, gamma: f64, sigma2: f64, model: &UncertaintyModel) -> (f64, f64) {
    let a = interference_matrix(w_all, k, gamma);
    let h = &model.h_hat[k];
    let eps = model.epsilon[k];
    let f = |s: f64| min_eigenvalue(&block(&a, h, eps, s, gamma, sigma2));
    let scale = a.iter().map(|z| z.norm()).fold(0.0, f64::max).max(gamma * sigma2).max(1e-300);
    let mut hi = scale;
    let mut f_hi = f(hi);
    // With ε = 0 the objective saturates instead of turning down, so the
    // bracket also stops once doubling gains nothing measurable.
    while hi < 1e8 * scale {
        let f_next = f(2.0 * hi);
        if f_next <= f_hi + 1e-12 * (f_hi.abs() + scale) {
            break;
        }
        hi *= 2.0;
        f_hi = f_next;
    }
    let hi = 2.0 * hi;
    let (mut lo, mut up) = (0.0, hi);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = up - g * (up - lo);
    let mut x2 = lo + g * (up - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..200 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (up - lo);
            f2 = f(x2);
        } else {
            up = x2;
            x2 = x1;
            f2 = f1;
            x1 = up - g * (up - lo);
            f1 = f(x1);
        }
        if up - lo <= 1e-12 * hi {
            break;
        }
    }
    let candidates = [(0.0, f(0.0)), (x1, f1), (x2, f2)];
    candidates
        .into_iter()
        .fold((0.0, f64::NEG_INFINITY), |best, c| if c.1 > best.1 { c } else { best })
}

fn stream_snr(w: &CMat, k: usize, h: &CVec, sigma2: f64) -> f64 {
    let g = w.adjoint() * h;
    let signal = g[k].norm_sqr();
    let interference: f64 = g.iter().enumerate().filter(|(i, _)| *i != k).map(|(_, z)| z.norm_sqr()).sum();
    signal / (interference + sigma2)
}

/// Smallest SNR of stream k found over the ε-ball around ĥ_k: random probes
/// on the sphere, a deterministic signal-cancelling probe, then projected
/// gradient descent from the best probes. The returned value bounds the
/// true worst case from above.
pub fn worst_case_snr<R: Rng + ?Sized>(
    w: &CMat,
    k: usize,
    h_hat: &CVec,
    eps: f64,
    sigma2: f64,
    probes: usize,
    rng: &mut R,
) -> f64 {
    let n = h_hat.len();
    let nominal = stream_snr(w, k, h_hat, sigma2);
    if eps == 0.0 {
        return nominal;
    }
    let wk = w.column(k).into_owned();
    let mut starts: Vec<(f64, CVec)> = Vec::new();
    let push = |d: CVec, starts: &mut Vec<(f64, CVec)>| {
        let h = h_hat + &d;
        starts.push((stream_snr(w, k, &h, sigma2), d));
    };
    // Move ĥ against the signal direction.
    let proj = wk.dotc(h_hat);
    if wk.norm() > 0.0 {
        let phase = if proj.norm() > 0.0 { proj / proj.norm() } else { C64::new(1.0, 0.0) };
        let d = wk.map(|z| -z * phase) * C64::new(eps / wk.norm(), 0.0);
        push(d, &mut starts);
    }
    for _ in 0..probes {
        let g = eve_channel_sample(n, rng);
        let nrm = g.norm();
        if nrm > 0.0 {
            push(g * C64::new(eps / nrm, 0.0), &mut starts);
        }
    }
    starts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut best = starts.first().map(|s| s.0).unwrap_or(nominal).min(nominal);

    let a1 = &wk * wk.adjoint();
    let mut bmat = CMat::zeros(n, n);
    for i in 0..w.ncols() {
        if i != k {
            let wi = w.column(i).into_owned();
            bmat += &wi * wi.adjoint();
        }
    }
    for (_, d0) in starts.into_iter().take(8) {
        let mut d = d0;
        let mut val = stream_snr(w, k, &(h_hat + &d), sigma2);
        let mut step = eps;
        for _ in 0..200 {
            let h = h_hat + &d;
            let num = h.dotc(&(&a1 * &h)).re;
            let den = h.dotc(&(&bmat * &h)).re + sigma2;
            let grad = (&a1 * &h) * C64::new(1.0 / den, 0.0) - (&bmat * &h) * C64::new(num / (den * den), 0.0);
            let gn = grad.norm();
            if gn == 0.0 {
                break;
            }
            let mut improved = false;
            while step > 1e-12 * eps {
                let mut trial = &d - &grad * C64::new(step / gn, 0.0);
                let tn = trial.norm();
                if tn > eps {
                    trial *= C64::new(eps / tn, 0.0);
                }
                let tv = stream_snr(w, k, &(h_hat + &trial), sigma2);
                if tv < val {
                    d = trial;
                    val = tv;
                    improved = true;
                    step *= 1.5;
                    break;
                }
                step *= 0.5;
            }
            if !improved {
                break;
            }
        }
        best = best.min(val);
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::ONE;
    use crate::rng::seeded;

    fn cvec(v: &[(f64, f64)]) -> CVec {
        CVec::from_iterator(v.len(), v.iter().map(|&(a, b)| C64::new(a, b)))
    }

    #[test]
    fn analytic_single_stream_worst_case() {
        let h = cvec(&[(1.0, 0.0), (0.0, 0.0)]);
        let w = CMat::from_column_slice(2, 1, &[ONE, C64::new(0.0, 0.0)]);
        let mut rng = seeded(5);
        let s = worst_case_snr(&w, 0, &h, 0.1, 1.0, 1000, &mut rng);
        assert!((s - 0.81).abs() < 1e-9, "{s}");
        assert_eq!(worst_case_snr(&w, 0, &h, 0.0, 1.0, 1000, &mut rng), 1.0);
    }

    #[test]
    fn worst_case_nonincreasing_in_radius() {
        let h = cvec(&[(0.7, 0.1), (-0.2, 0.4), (0.3, -0.5)]);
        let w = CMat::from_fn(3, 2, |i, j| C64::new((i + j) as f64 * 0.3 - 0.2, 0.1 * i as f64));
        let mut prev = f64::INFINITY;
        for eps in [0.0, 0.05, 0.1, 0.2] {
            let mut rng = seeded(9);
            let s = worst_case_snr(&w, 0, &h, eps, 0.1, 1000, &mut rng);
            assert!(s <= prev + 1e-12);
            prev = s;
        }
    }

    #[test]
    fn gamma_zero_block_psd() {
        let h = cvec(&[(0.5, 0.2), (0.1, -0.3)]);
        let w = cvec(&[(0.3, 0.0), (0.2, 0.1)]);
        let wk = &w * w.adjoint();
        let model = UncertaintyModel::new(vec![0.3], vec![h]).unwrap();
        let b = robust_lmi_blocks(&[wk], 0.0, 1.0, &model, &[0.0]).unwrap();
        assert!(min_eigenvalue(&b[0]) >= -1e-12);
    }

    #[test]
    fn nominal_margin_gives_feasible_slack() {
        let h = cvec(&[(1.0, 0.0), (0.5, 0.5)]);
        let w = &h * C64::new(2.0, 0.0);
        let wk = &w * w.adjoint();
        let model = UncertaintyModel::new(vec![0.0], vec![h]).unwrap();
        let (s, lam) = best_slack(std::slice::from_ref(&wk), 0, 1.0, 1.0, &model);
        assert!(lam >= -1e-9, "slack {s}, min eig {lam}");
        let b = robust_lmi_blocks(&[wk], 1.0, 1.0, &model, &[s]).unwrap();
        assert!(min_eigenvalue(&b[0]) >= -1e-9);
    }

    #[test]
    fn dimension_checks() {
        let model = UncertaintyModel::new(vec![0.1], vec![CVec::zeros(2)]).unwrap();
        assert!(robust_lmi_blocks(&[CMat::zeros(3, 3)], 1.0, 1.0, &model, &[0.0]).is_err());
        assert!(robust_lmi_blocks(&[CMat::zeros(2, 2)], 1.0, 1.0, &model, &[]).is_err());
    }
}
