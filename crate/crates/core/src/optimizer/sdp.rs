//! Primal-dual interior-point method for small block-structured complex
//! semidefinite programs
//!
//! ```text
//! min  Σ_b ⟨C_b, X_b⟩   s.t.  Σ_b ⟨A_ib, X_b⟩ = b_i,   X_b ⪰ 0
//! ```
//!
//! with Hermitian blocks. Constraint coefficients are restricted to the
//! shapes the precoding problem needs (scaled rank-one matrices, entries of
//! a Hermitian basis, and scalars on 1×1 blocks), which keeps the Schur
//! complement cheap to assemble. Search directions are HKM with a Mehrotra
//! predictor-corrector and an infeasible start.

use nalgebra::DMatrix;

use crate::linalg::{hermitian_eigenvalues, hermitian_part, CMat, CVec, C64};

#[derive(Debug, Clone)]
pub(crate) enum Term {
    /// `scale · v vᴴ` with `v = vectors[block][vec]`.
    RankOne { block: usize, vec: usize, scale: f64 },
    /// `Σ c · e_p e_qᴴ` over the listed entries.
    Basis { block: usize, entries: Vec<(usize, usize, C64)> },
    /// `scale` on a 1×1 block.
    Scalar { block: usize, scale: f64 },
}

impl Term {
    fn block(&self) -> usize {
        match self {
            Term::RankOne { block, .. } | Term::Basis { block, .. } | Term::Scalar { block, .. } => *block,
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct BlockSdp {
    pub sizes: Vec<usize>,
    pub c: Vec<CMat>,
    pub vectors: Vec<Vec<CVec>>,
    pub constraints: Vec<Vec<Term>>,
    pub b: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum SdpStatus {
    Optimal,
    MaxIters,
    Stalled,
}

#[derive(Debug, Clone)]
pub(crate) struct SdpSolution {
    pub x: Vec<CMat>,
    pub y: Vec<f64>,
    pub status: SdpStatus,
    pub iterations: usize,
    pub primal_objective: f64,
}

fn herm_basis_entries(p: usize, q: usize, imag: bool) -> Vec<(usize, usize, C64)> {
    if p == q {
        vec![(p, p, C64::new(1.0, 0.0))]
    } else if !imag {
        vec![(p, q, C64::new(0.5, 0.0)), (q, p, C64::new(0.5, 0.0))]
    } else {
        vec![(p, q, C64::new(0.0, -0.5)), (q, p, C64::new(0.0, 0.5))]
    }
}

/// Real-linear basis of r×r Hermitian matrices, as (entries, trace).
pub(crate) type BasisElement = (Vec<(usize, usize, C64)>, f64);

pub(crate) fn hermitian_basis(r: usize) -> Vec<BasisElement> {
    let mut out = Vec::with_capacity(r * r);
    for p in 0..r {
        out.push((herm_basis_entries(p, p, false), 1.0));
        for q in p + 1..r {
            out.push((herm_basis_entries(p, q, false), 0.0));
            out.push((herm_basis_entries(p, q, true), 0.0));
        }
    }
    out
}

impl BlockSdp {
    fn apply(&self, x: &[CMat]) -> Vec<f64> {
        self.constraints
            .iter()
            .map(|terms| terms.iter().map(|t| self.term_dot(t, x)).sum())
            .collect()
    }

    /// Re Tr(A_term · Y_block); Y need not be Hermitian.
    fn term_dot(&self, t: &Term, y: &[CMat]) -> f64 {
        match t {
            Term::RankOne { block, vec, scale } => {
                let v = &self.vectors[*block][*vec];
                scale * v.dotc(&(&y[*block] * v)).re
            }
            Term::Basis { block, entries } => entries
                .iter()
                .map(|&(p, q, c)| (c * y[*block][(q, p)]).re)
                .sum(),
            Term::Scalar { block, scale } => scale * y[*block][(0, 0)].re,
        }
    }

    fn adjoint(&self, y: &[f64]) -> Vec<CMat> {
        let mut out: Vec<CMat> = self.sizes.iter().map(|&s| CMat::zeros(s, s)).collect();
        for (terms, &yi) in self.constraints.iter().zip(y) {
            if yi == 0.0 {
                continue;
            }
            for t in terms {
                match t {
                    Term::RankOne { block, vec, scale } => {
                        let v = &self.vectors[*block][*vec];
                        out[*block].gerc(C64::new(yi * scale, 0.0), v, v, C64::new(1.0, 0.0));
                    }
                    Term::Basis { block, entries } => {
                        for &(p, q, c) in entries {
                            out[*block][(p, q)] += c * yi;
                        }
                    }
                    Term::Scalar { block, scale } => {
                        out[*block][(0, 0)] += C64::new(yi * scale, 0.0);
                    }
                }
            }
        }
        out
    }

    fn schur(&self, x: &[CMat], zi: &[CMat]) -> DMatrix<f64> {
        let m = self.constraints.len();
        let mut mat = DMatrix::<f64>::zeros(m, m);
        let mut per_block: Vec<Vec<(usize, &Term)>> = vec![Vec::new(); self.sizes.len()];
        for (i, terms) in self.constraints.iter().enumerate() {
            for t in terms {
                per_block[t.block()].push((i, t));
            }
        }
        for (b, terms) in per_block.iter().enumerate() {
            if terms.is_empty() {
                continue;
            }
            let xb = &x[b];
            let zb = &zi[b];
            let vecs = &self.vectors[b];
            let (p, q, xv, zv) = if vecs.is_empty() {
                (CMat::zeros(0, 0), CMat::zeros(0, 0), CMat::zeros(0, 0), CMat::zeros(0, 0))
            } else {
                let v = CMat::from_columns(vecs);
                let xv = xb * &v;
                let zv = zb * &v;
                (v.adjoint() * &xv, v.adjoint() * &zv, xv, zv)
            };
            for (a, &(i, ti)) in terms.iter().enumerate() {
                for (bb, &(j, tj)) in terms.iter().enumerate().skip(a) {
                    let val = match (ti, tj) {
                        (
                            Term::RankOne { vec: vi, scale: si, .. },
                            Term::RankOne { vec: vj, scale: sj, .. },
                        ) => si * sj * (p[(*vi, *vj)] * q[(*vj, *vi)]).re,
                        (Term::RankOne { vec, scale, .. }, Term::Basis { entries, .. })
                        | (Term::Basis { entries, .. }, Term::RankOne { vec, scale, .. }) => {
                            scale
                                * entries
                                    .iter()
                                    .map(|&(pp, qq, c)| (c * xv[(pp, *vec)].conj() * zv[(qq, *vec)]).re)
                                    .sum::<f64>()
                        }
                        (Term::Basis { entries: ei, .. }, Term::Basis { entries: ej, .. }) => {
                            let mut s = C64::new(0.0, 0.0);
                            for &(pi, qi, ci) in ei {
                                for &(pj, qj, cj) in ej {
                                    s += ci * cj * xb[(qi, pj)] * zb[(qj, pi)];
                                }
                            }
                            s.re
                        }
                        (Term::Scalar { scale: si, .. }, Term::Scalar { scale: sj, .. }) => {
                            si * sj * (xb[(0, 0)] * zb[(0, 0)]).re
                        }
                        _ => unreachable!("scalar terms live on 1x1 blocks only"),
                    };
                    mat[(i, j)] += val;
                    if bb != a {
                        mat[(j, i)] += val;
                    }
                }
            }
        }
        mat
    }
}

fn inner(a: &[CMat], b: &[CMat]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.iter().zip(y.iter()).map(|(p, q)| (p.conj() * q).re).sum::<f64>())
        .sum()
}

fn frob(a: &[CMat]) -> f64 {
    inner(a, a).sqrt()
}

fn inverse_hpd(a: &CMat) -> Option<CMat> {
    let ch = hermitian_part(a).cholesky()?;
    Some(hermitian_part(&ch.inverse()))
}

/// Largest α ≤ 1/τ-scaled step keeping `x + α d` positive definite.
fn max_step(x: &CMat, d: &CMat) -> f64 {
    let Some(ch) = hermitian_part(x).cholesky() else {
        return 0.0;
    };
    let l = ch.l();
    let Some(li) = l.clone().try_inverse() else {
        return 0.0;
    };
    let s = &li * d * li.adjoint();
    let lmin = hermitian_eigenvalues(&s).first().copied().unwrap_or(0.0);
    if lmin >= 0.0 {
        f64::INFINITY
    } else {
        -1.0 / lmin
    }
}

fn sym(a: &CMat) -> CMat {
    hermitian_part(a)
}

pub(crate) struct IpmOptions {
    pub tol: f64,
    pub max_iters: usize,
}

pub(crate) fn solve(sdp: &BlockSdp, opts: &IpmOptions) -> SdpSolution {
    let n_total: usize = sdp.sizes.iter().sum();
    let m = sdp.constraints.len();
    let b_norm = sdp.b.iter().map(|v| v * v).sum::<f64>().sqrt();
    let c_norm = frob(&sdp.c);

    // Starting point scaled to the data.
    let mut a_norms = vec![0.0f64; m];
    for (i, terms) in sdp.constraints.iter().enumerate() {
        let mut s = 0.0;
        for t in terms {
            s += match t {
                Term::RankOne { block, vec, scale } => (scale * sdp.vectors[*block][*vec].norm_squared()).powi(2),
                Term::Basis { entries, .. } => entries.iter().map(|e| e.2.norm_sqr()).sum(),
                Term::Scalar { scale, .. } => scale * scale,
            };
        }
        a_norms[i] = s.sqrt();
    }
    let x0 = (0..m)
        .map(|i| (1.0 + sdp.b[i].abs()) / (1.0 + a_norms[i]))
        .fold(10.0f64, f64::max)
        .max((n_total as f64).sqrt());
    let z0 = a_norms
        .iter()
        .cloned()
        .fold(10.0f64.max((n_total as f64).sqrt()), f64::max)
        .max(c_norm);
    let mut x: Vec<CMat> = sdp.sizes.iter().map(|&s| CMat::identity(s, s) * C64::new(x0, 0.0)).collect();
    let mut z: Vec<CMat> = sdp.sizes.iter().map(|&s| CMat::identity(s, s) * C64::new(z0, 0.0)).collect();
    let mut y = vec![0.0; m];

    let mut status = SdpStatus::MaxIters;
    let mut iterations = 0;
    for it in 0..opts.max_iters {
        iterations = it;
        let ax = sdp.apply(&x);
        let rp: Vec<f64> = sdp.b.iter().zip(&ax).map(|(b, a)| b - a).collect();
        let aty = sdp.adjoint(&y);
        let rd: Vec<CMat> = (0..sdp.sizes.len()).map(|b| &sdp.c[b] - &z[b] - &aty[b]).collect();
        let pobj = inner(&sdp.c, &x);
        let dobj: f64 = sdp.b.iter().zip(&y).map(|(b, y)| b * y).sum();
        let gap = inner(&x, &z);
        let mu = gap / n_total as f64;
        let relp = rp.iter().map(|v| v * v).sum::<f64>().sqrt() / (1.0 + b_norm);
        let reld = frob(&rd) / (1.0 + c_norm);
        let relgap = gap.abs() / (1.0 + pobj.abs() + dobj.abs());
        if relp <= opts.tol && reld <= opts.tol && relgap <= opts.tol {
            status = SdpStatus::Optimal;
            break;
        }
        if !(pobj.is_finite() && dobj.is_finite()) || frob(&x) > 1e14 || frob(&z) > 1e14 {
            status = SdpStatus::Stalled;
            break;
        }

        let Some(zi) = z.iter().map(inverse_hpd).collect::<Option<Vec<_>>>() else {
            status = SdpStatus::Stalled;
            break;
        };
        let schur = sdp.schur(&x, &zi);
        let chol = match schur.clone().cholesky() {
            Some(c) => c,
            None => {
                let mut reg = schur.clone();
                let d = schur.diagonal().amax().max(1e-300) * 1e-13;
                for i in 0..m {
                    reg[(i, i)] += d;
                }
                match reg.cholesky() {
                    Some(c) => c,
                    None => {
                        status = SdpStatus::Stalled;
                        break;
                    }
                }
            }
        };

        let x_rd_zi: Vec<CMat> = (0..x.len()).map(|b| &x[b] * &rd[b] * &zi[b]).collect();
        let a_x_rd_zi = sdp.apply(&x_rd_zi);
        let a_zi = sdp.apply(&zi);

        let direction = |sigma_mu: f64, corr: Option<&[CMat]>| {
            let a_corr = corr.map(|c| sdp.apply(c));
            let rhs = nalgebra::DVector::from_fn(m, |i, _| {
                rp[i] - sigma_mu * a_zi[i] + ax[i] + a_x_rd_zi[i] + a_corr.as_ref().map_or(0.0, |v| v[i])
            });
            let dy = chol.solve(&rhs);
            let dy: Vec<f64> = dy.iter().copied().collect();
            let atdy = sdp.adjoint(&dy);
            let dz: Vec<CMat> = (0..x.len()).map(|b| &rd[b] - &atdy[b]).collect();
            let dx: Vec<CMat> = (0..x.len())
                .map(|b| {
                    let mut t = &zi[b] * C64::new(sigma_mu, 0.0) - &x[b] - sym(&(&x[b] * &dz[b] * &zi[b]));
                    if let Some(c) = corr {
                        t -= sym(&c[b]);
                    }
                    sym(&t)
                })
                .collect();
            (dx, dy, dz)
        };
        let steps = |dx: &[CMat], dz: &[CMat]| {
            let ap = x.iter().zip(dx).map(|(a, d)| max_step(a, d)).fold(f64::INFINITY, f64::min);
            let ad = z.iter().zip(dz).map(|(a, d)| max_step(a, d)).fold(f64::INFINITY, f64::min);
            (ap, ad)
        };

        // Predictor.
        let (dx_a, _, dz_a) = direction(0.0, None);
        let (ap, ad) = steps(&dx_a, &dz_a);
        let ap = ap.min(1.0);
        let ad = ad.min(1.0);
        let xa: Vec<CMat> = (0..x.len()).map(|b| &x[b] + &dx_a[b] * C64::new(ap, 0.0)).collect();
        let za: Vec<CMat> = (0..x.len()).map(|b| &z[b] + &dz_a[b] * C64::new(ad, 0.0)).collect();
        let mu_aff = inner(&xa, &za) / n_total as f64;
        let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);

        // Corrector.
        let corr: Vec<CMat> = (0..x.len()).map(|b| &dx_a[b] * &dz_a[b] * &zi[b]).collect();
        let (dx, dy, dz) = direction(sigma * mu, Some(&corr));
        let (ap, ad) = steps(&dx, &dz);
        let tau = 0.98;
        let ap = (tau * ap).min(1.0);
        let ad = (tau * ad).min(1.0);
        for b in 0..x.len() {
            x[b] = sym(&(&x[b] + &dx[b] * C64::new(ap, 0.0)));
            z[b] = sym(&(&z[b] + &dz[b] * C64::new(ad, 0.0)));
        }
        for (yi, d) in y.iter_mut().zip(&dy) {
            *yi += ad * d;
        }
        if ap < 1e-10 && ad < 1e-10 {
            status = SdpStatus::Stalled;
            break;
        }
    }
    let primal_objective = inner(&sdp.c, &x);
    SdpSolution {
        x,
        y,
        status,
        iterations,
        primal_objective,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// min Tr X  s.t.  X_00 = 1, X ⪰ 0 on a 2×2 block: optimum 1.
    #[test]
    fn tiny_trace_problem() {
        let sdp = BlockSdp {
            sizes: vec![2],
            c: vec![CMat::identity(2, 2)],
            vectors: vec![vec![]],
            constraints: vec![vec![Term::Basis {
                block: 0,
                entries: vec![(0, 0, C64::new(1.0, 0.0))],
            }]],
            b: vec![1.0],
        };
        let s = solve(&sdp, &IpmOptions { tol: 1e-9, max_iters: 100 });
        assert_eq!(s.status, SdpStatus::Optimal);
        assert!((s.primal_objective - 1.0).abs() < 1e-7);
    }

    /// max-eigenvalue as an SDP: min t s.t. t I - A ⪰ 0, written in
    /// standard form with S = t I - A, t = t⁺ (scalar block).
    #[test]
    fn max_eigenvalue_problem() {
        let a = CMat::from_row_slice(
            2,
            2,
            &[C64::new(2.0, 0.0), C64::new(0.0, 1.0), C64::new(0.0, -1.0), C64::new(1.0, 0.0)],
        );
        let want = crate::linalg::max_eigenvalue(&a);
        let mut constraints = Vec::new();
        let mut b = Vec::new();
        for (entries, tr) in hermitian_basis(2) {
            let rhs: f64 = -entries.iter().map(|&(p, q, c)| (c * a[(q, p)]).re).sum::<f64>();
            let mut terms = vec![Term::Basis { block: 0, entries }];
            if tr != 0.0 {
                terms.push(Term::Scalar { block: 1, scale: -tr });
            }
            constraints.push(terms);
            b.push(rhs);
        }
        // S - t I = -A  with S ⪰ 0, t ≥ 0.
        let sdp = BlockSdp {
            sizes: vec![2, 1],
            c: vec![CMat::zeros(2, 2), CMat::identity(1, 1)],
            vectors: vec![vec![], vec![]],
            constraints,
            b,
        };
        let s = solve(&sdp, &IpmOptions { tol: 1e-10, max_iters: 100 });
        assert_eq!(s.status, SdpStatus::Optimal);
        assert!((s.primal_objective - want).abs() < 1e-7, "{} vs {want}", s.primal_objective);
    }
}
