//! Dense primal-dual interior-point solver for small semidefinite programs.
//!
//! Problems are stated in linear-matrix-inequality form
//!
//! ```text
//! minimize    cᵀx
//! subject to  A₀ᵇ + Σ_i x_i Aᵢᵇ ⪰ 0     for every block b
//!             E x = f                    (optional)
//! ```
//!
//! Equalities and linearly dependent columns are eliminated up front, then an
//! infeasible path-following method with Nesterov-Todd scaling and Mehrotra
//! predictor-corrector steps is run on the reduced problem and its conic dual
//! `max −⟨C, X⟩  s.t.  ⟨Aⱼ, X⟩ = cⱼ, X ⪰ 0`.
//! Everything is dense and deterministic.

use nalgebra::{Cholesky, Dyn};

use crate::error::{QestError, Result};
use crate::operators::eig_symmetric;
use crate::scalar::{RMatrix, RVector, Real};
use crate::tolerances::Tolerances;

/// One symmetric block `A₀ + Σ x_i A_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct LmiBlock<T: Real> {
    pub a0: RMatrix<T>,
    pub a: Vec<RMatrix<T>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearEqualities<T: Real> {
    pub e: RMatrix<T>,
    pub f: RVector<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdpProblem<T: Real> {
    pub c: RVector<T>,
    pub blocks: Vec<LmiBlock<T>>,
    pub equalities: Option<LinearEqualities<T>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SdpStatus {
    Optimal,
    MaxIter,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdpSolution<T: Real> {
    pub x: RVector<T>,
    /// `cᵀx` at the returned point.
    pub objective_value: T,
    /// Objective of the conic dual at the returned multiplier.
    pub dual_value: T,
    pub gap: T,
    pub status: SdpStatus,
    pub iterations: usize,
    /// Smallest eigenvalue over all blocks of `A₀ + Σ x_i A_i`, recomputed.
    pub min_block_eigenvalue: T,
    /// `‖E x − f‖`, zero when there are no equalities.
    pub equality_residual: T,
    /// Dual multiplier matrices, one per block.
    pub dual_blocks: Vec<RMatrix<T>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdpSettings {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SdpSettings {
    fn default() -> Self {
        let t = Tolerances::default();
        Self { tol: t.sdp_tol, max_iter: t.sdp_max_iter }
    }
}

impl SdpSettings {
    pub fn from_tolerances(t: &Tolerances) -> Self {
        Self { tol: t.sdp_tol, max_iter: t.sdp_max_iter }
    }
}

impl<T: Real> SdpProblem<T> {
    pub fn num_vars(&self) -> usize {
        self.c.len()
    }

    fn validate(&self) -> Result<()> {
        let m = self.num_vars();
        for (b, blk) in self.blocks.iter().enumerate() {
            let n = blk.a0.nrows();
            if !blk.a0.is_square() || blk.a.len() != m || blk.a.iter().any(|a| a.shape() != (n, n)) {
                return Err(QestError::InvalidInput(format!("block {b} has inconsistent shapes")));
            }
        }
        if let Some(eq) = &self.equalities {
            if eq.e.ncols() != m || eq.e.nrows() != eq.f.len() {
                return Err(QestError::InvalidInput("equality constraint shapes do not match".into()));
            }
        }
        if self.blocks.is_empty() {
            return Err(QestError::InvalidInput("problem has no semidefinite blocks".into()));
        }
        Ok(())
    }

    /// Evaluates every block at `x`.
    pub fn blocks_at(&self, x: &RVector<T>) -> Vec<RMatrix<T>> {
        self.blocks
            .iter()
            .map(|blk| {
                let mut s = blk.a0.clone();
                for (xi, a) in x.iter().zip(&blk.a) {
                    if *xi != T::zero() {
                        s += a * *xi;
                    }
                }
                sym(&s)
            })
            .collect()
    }
}

fn sym<T: Real>(m: &RMatrix<T>) -> RMatrix<T> {
    (m + m.transpose()) * T::lit(0.5)
}

fn inner<T: Real>(a: &RMatrix<T>, b: &RMatrix<T>) -> T {
    a.iter().zip(b.iter()).fold(T::zero(), |acc, (x, y)| acc + *x * *y)
}

fn binner<T: Real>(a: &[RMatrix<T>], b: &[RMatrix<T>]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (x, y)| acc + inner(x, y))
}

fn bnorm<T: Real>(a: &[RMatrix<T>]) -> T {
    binner(a, a).sqrt()
}

/// Affine substitution `x = x₀ + T w` removing equalities and directions that
/// do not enter any block.
struct Reduction<T: Real> {
    x0: RVector<T>,
    basis: RMatrix<T>,
}

/// Orthonormal basis of the range (`keep = true`) or null space of `GᵀG`-style
/// Gram matrices, from a symmetric eigendecomposition.
fn split_spectrum<T: Real>(gram: &RMatrix<T>, rel: T) -> (RMatrix<T>, RMatrix<T>, RVector<T>) {
    let (vals, vecs) = eig_symmetric(gram);
    let n = vals.len();
    let top = if n > 0 { vals[n - 1].max(T::zero()) } else { T::zero() };
    let keep: Vec<usize> = (0..n).filter(|&k| vals[k] > rel * top && vals[k] > T::zero()).collect();
    let drop: Vec<usize> = (0..n).filter(|k| !keep.contains(k)).collect();
    let range = RMatrix::from_fn(n, keep.len(), |i, j| vecs[(i, keep[j])]);
    let null = RMatrix::from_fn(n, drop.len(), |i, j| vecs[(i, drop[j])]);
    let kept_vals = RVector::from_iterator(keep.len(), keep.iter().map(|&k| vals[k]));
    (range, null, kept_vals)
}

enum Reduced<T: Real> {
    Ok(Reduction<T>),
    Infeasible,
    Unbounded,
}

fn reduce<T: Real>(p: &SdpProblem<T>) -> Reduced<T> {
    let m = p.num_vars();
    let rel = T::lit(1e-12);
    let (x0, n_basis) = match &p.equalities {
        None => (RVector::zeros(m), RMatrix::identity(m, m)),
        Some(eq) => {
            let ete = eq.e.transpose() * &eq.e;
            let (range, null, vals) = split_spectrum(&ete, rel);
            // minimum-norm solution x0 = V Σ⁻² Vᵀ Eᵀ f
            let etf = eq.e.transpose() * &eq.f;
            let mut coef = range.transpose() * etf;
            for (k, v) in vals.iter().enumerate() {
                coef[k] /= *v;
            }
            let x0 = &range * coef;
            let resid = (&eq.e * &x0 - &eq.f).norm();
            if resid > T::lit(1e-9) * (T::one() + eq.f.norm()) {
                return Reduced::Infeasible;
            }
            (x0, null)
        }
    };
    let k = n_basis.ncols();
    // Gram matrix of the reduced block directions
    let dirs: Vec<Vec<RMatrix<T>>> = (0..k).map(|j| combine(p, &n_basis.column(j).into_owned())).collect();
    let gram = RMatrix::from_fn(k, k, |i, j| binner(&dirs[i], &dirs[j]));
    let (range, null, _) = split_spectrum(&gram, rel);
    let cbar = n_basis.transpose() * &p.c;
    if null.ncols() > 0 {
        let leak = (null.transpose() * &cbar).norm();
        if leak > T::lit(1e-9) * (T::one() + cbar.norm()) {
            return Reduced::Unbounded;
        }
    }
    Reduced::Ok(Reduction { x0, basis: n_basis * range })
}

/// `Σ_i v_i A_i` for every block.
fn combine<T: Real>(p: &SdpProblem<T>, v: &RVector<T>) -> Vec<RMatrix<T>> {
    p.blocks
        .iter()
        .map(|blk| {
            let n = blk.a0.nrows();
            let mut s = RMatrix::zeros(n, n);
            for (vi, a) in v.iter().zip(&blk.a) {
                if *vi != T::zero() {
                    s += a * *vi;
                }
            }
            s
        })
        .collect()
}

/// Solves the program. Malformed input is an error; infeasibility and the
/// iteration cap are reported through [`SdpSolution::status`].
pub fn solve<T: Real>(p: &SdpProblem<T>, settings: &SdpSettings) -> Result<SdpSolution<T>> {
    p.validate()?;
    let red = match reduce(p) {
        Reduced::Ok(r) => r,
        Reduced::Infeasible | Reduced::Unbounded => return Ok(failed(p, SdpStatus::Infeasible)),
    };
    let k = red.basis.ncols();
    if k == 0 {
        return Ok(fixed_point(p, red.x0, settings));
    }
    let c_mat = p.blocks_at(&red.x0);
    let a: Vec<Vec<RMatrix<T>>> = (0..k).map(|j| combine(p, &red.basis.column(j).into_owned())).collect();
    let cbar = red.basis.transpose() * &p.c;
    let constant = p.c.dot(&red.x0);

    let ipm = Ipm { c: c_mat, a, b: cbar };
    let out = ipm.run(settings);

    let x = &red.x0 + &red.basis * &out.y;
    let blocks = p.blocks_at(&x);
    let min_block_eigenvalue = blocks
        .iter()
        .map(|b| eig_symmetric(b).0[0])
        .fold(T::max_value().unwrap(), |m, v| m.min(v));
    let equality_residual = p.equalities.as_ref().map_or(T::zero(), |eq| (&eq.e * &x - &eq.f).norm());
    let objective_value = p.c.dot(&x);
    let dual_value = -binner(&ipm.c, &out.x) + constant;
    Ok(SdpSolution {
        objective_value,
        dual_value,
        gap: objective_value - dual_value,
        status: out.status,
        iterations: out.iterations,
        min_block_eigenvalue,
        equality_residual,
        dual_blocks: out.x,
        x,
    })
}

/// Every variable is pinned by the equalities; only feasibility remains.
fn fixed_point<T: Real>(p: &SdpProblem<T>, x: RVector<T>, settings: &SdpSettings) -> SdpSolution<T> {
    let blocks = p.blocks_at(&x);
    let min_block_eigenvalue = blocks
        .iter()
        .map(|b| eig_symmetric(b).0[0])
        .fold(T::max_value().unwrap(), |m, v| m.min(v));
    let equality_residual = p.equalities.as_ref().map_or(T::zero(), |eq| (&eq.e * &x - &eq.f).norm());
    let objective_value = p.c.dot(&x);
    let status = if min_block_eigenvalue >= -T::lit(settings.tol) {
        SdpStatus::Optimal
    } else {
        SdpStatus::Infeasible
    };
    SdpSolution {
        objective_value,
        dual_value: objective_value,
        gap: T::zero(),
        status,
        iterations: 0,
        min_block_eigenvalue,
        equality_residual,
        dual_blocks: blocks.iter().map(|b| RMatrix::zeros(b.nrows(), b.ncols())).collect(),
        x,
    }
}

fn failed<T: Real>(p: &SdpProblem<T>, status: SdpStatus) -> SdpSolution<T> {
    let nan = T::lit(f64::NAN);
    SdpSolution {
        x: RVector::from_element(p.num_vars(), nan),
        objective_value: nan,
        dual_value: nan,
        gap: nan,
        status,
        iterations: 0,
        min_block_eigenvalue: nan,
        equality_residual: nan,
        dual_blocks: Vec::new(),
    }
}

/// `F(y) = C + Σ yⱼ Aⱼ ⪰ 0`, minimize `bᵀy`; conic dual `X ⪰ 0`, `⟨Aⱼ, X⟩ = bⱼ`.
struct Ipm<T: Real> {
    c: Vec<RMatrix<T>>,
    a: Vec<Vec<RMatrix<T>>>,
    b: RVector<T>,
}

struct IpmOutput<T: Real> {
    y: RVector<T>,
    x: Vec<RMatrix<T>>,
    status: SdpStatus,
    iterations: usize,
}

/// NT scaling of one block: `G` with `G⁻¹XG⁻ᵀ = GᵀSG = diag(λ)`.
struct Scaling<T: Real> {
    g: RMatrix<T>,
    g_inv: RMatrix<T>,
    lambda: RVector<T>,
    w: RMatrix<T>,
}

fn cholesky_l<T: Real>(m: &RMatrix<T>) -> Option<RMatrix<T>> {
    Cholesky::<T, Dyn>::new(sym(m)).map(|c| c.l())
}

fn lower_inverse<T: Real>(l: &RMatrix<T>) -> RMatrix<T> {
    let n = l.nrows();
    l.solve_lower_triangular(&RMatrix::identity(n, n)).expect("triangular factor is nonsingular")
}

fn nt_scaling<T: Real>(x: &RMatrix<T>, s: &RMatrix<T>) -> Option<Scaling<T>> {
    let lx = cholesky_l(x)?;
    let ls = cholesky_l(s)?;
    let svd = (ls.transpose() * &lx).svd(true, true);
    let u_t = svd.v_t?;
    let d = svd.singular_values;
    if d.iter().any(|v| !(*v > T::zero())) {
        return None;
    }
    let v = u_t.transpose();
    let n = d.len();
    let mut g = &lx * &v;
    let mut dhalf_vt = v.transpose();
    for j in 0..n {
        let r = d[j].sqrt();
        g.column_mut(j).iter_mut().for_each(|e| *e /= r);
        dhalf_vt.row_mut(j).iter_mut().for_each(|e| *e *= r);
    }
    let g_inv = dhalf_vt * lower_inverse(&lx);
    let w = sym(&(&g * g.transpose()));
    Some(Scaling { g, g_inv, lambda: d, w })
}

/// Largest `α ≤ 1/...` keeping `X + αΔX ⪰ 0`, infinite when unconstrained.
fn max_step<T: Real>(x: &RMatrix<T>, dx: &RMatrix<T>) -> T {
    let big = T::lit(1e30);
    let Some(l) = cholesky_l(x) else { return T::zero() };
    let li = lower_inverse(&l);
    let m = &li * dx * li.transpose();
    let (vals, _) = eig_symmetric(&m);
    let lo = vals[0];
    if lo >= T::zero() {
        big
    } else {
        -T::one() / lo
    }
}

struct Direction<T: Real> {
    dx: Vec<RMatrix<T>>,
    ds: Vec<RMatrix<T>>,
    dy: RVector<T>,
}

impl<T: Real> Ipm<T> {
    fn m(&self) -> usize {
        self.b.len()
    }

    fn op(&self, x: &[RMatrix<T>]) -> RVector<T> {
        RVector::from_iterator(self.m(), self.a.iter().map(|aj| binner(aj, x)))
    }

    fn adjoint(&self, y: &RVector<T>) -> Vec<RMatrix<T>> {
        let mut out: Vec<RMatrix<T>> = self.c.iter().map(|c| RMatrix::zeros(c.nrows(), c.ncols())).collect();
        for (yj, aj) in y.iter().zip(&self.a) {
            for (o, a) in out.iter_mut().zip(aj) {
                *o += a * *yj;
            }
        }
        out
    }

    fn initial_point(&self) -> (Vec<RMatrix<T>>, Vec<RMatrix<T>>) {
        let ten = T::lit(10.0);
        let mut xs = Vec::new();
        let mut ss = Vec::new();
        for (bi, c) in self.c.iter().enumerate() {
            let n = c.nrows();
            let sn = T::from_count(n).sqrt();
            let mut xi = ten.max(sn);
            let mut eta = ten.max(sn).max(c.norm());
            for (j, aj) in self.a.iter().enumerate() {
                let na = aj[bi].norm();
                xi = xi.max(sn * (T::one() + self.b[j].abs()) / (T::one() + na));
                eta = eta.max(na);
            }
            xs.push(RMatrix::identity(n, n) * xi);
            ss.push(RMatrix::identity(n, n) * eta);
        }
        (xs, ss)
    }

    /// Solves `ΔX + WΔSW = R_c`, `ΔS = R_d + A*(Δy)`, `A(ΔX) = r_p`.
    fn direction(
        &self,
        scal: &[Scaling<T>],
        schur: &Cholesky<T, Dyn>,
        rc: &[RMatrix<T>],
        rd: &[RMatrix<T>],
        rp: &RVector<T>,
    ) -> Direction<T> {
        let t: Vec<RMatrix<T>> = rc
            .iter()
            .zip(rd)
            .zip(scal)
            .map(|((rc, rd), s)| rc - &s.w * rd * &s.w)
            .collect();
        let rhs = self.op(&t) - rp;
        let dy = schur.solve(&rhs);
        let ads = self.adjoint(&dy);
        let ds: Vec<RMatrix<T>> = rd.iter().zip(&ads).map(|(r, a)| sym(&(r + a))).collect();
        let dx = rc
            .iter()
            .zip(&ds)
            .zip(scal)
            .map(|((rc, ds), s)| sym(&(rc - &s.w * ds * &s.w)))
            .collect();
        Direction { dx, ds, dy }
    }

    fn schur_matrix(&self, scal: &[Scaling<T>]) -> Option<Cholesky<T, Dyn>> {
        let m = self.m();
        let waw: Vec<Vec<RMatrix<T>>> = self
            .a
            .iter()
            .map(|aj| aj.iter().zip(scal).map(|(a, s)| &s.w * a * &s.w).collect())
            .collect();
        let mut mat = RMatrix::from_fn(m, m, |i, j| if i <= j { binner(&self.a[i], &waw[j]) } else { T::zero() });
        for i in 0..m {
            for j in 0..i {
                mat[(i, j)] = mat[(j, i)];
            }
        }
        if let Some(ch) = Cholesky::new(mat.clone()) {
            return Some(ch);
        }
        let scale = (0..m).fold(T::zero(), |acc, i| acc.max(mat[(i, i)].abs()));
        for i in 0..m {
            mat[(i, i)] += T::lit(1e-13) * scale;
        }
        Cholesky::new(mat)
    }

    fn run(&self, settings: &SdpSettings) -> IpmOutput<T> {
        let m = self.m();
        let (mut x, mut s) = self.initial_point();
        let mut y = RVector::zeros(m);
        let n_total = T::from_count(self.c.iter().map(|c| c.nrows()).sum());
        let tol = T::lit(settings.tol);
        let norm_c = bnorm(&self.c);
        let norm_b = self.b.norm();
        let diverged = T::lit(1e12) * (T::one() + norm_c + norm_b);
        let mut status = SdpStatus::MaxIter;
        let mut iterations = 0;
        let half = T::lit(0.5);

        for iter in 0..=settings.max_iter {
            iterations = iter;
            let rp = &self.b - self.op(&x);
            let aty = self.adjoint(&y);
            let rd: Vec<RMatrix<T>> = self.c.iter().zip(&aty).zip(&s).map(|((c, a), s)| c + a - s).collect();
            let pobj = self.b.dot(&y);
            let dobj = -binner(&self.c, &x);
            let xs = binner(&x, &s);
            let denom = T::one() + pobj.abs() + dobj.abs();
            let rel_gap = (pobj - dobj).abs().max(xs) / denom;
            let lmi_inf = bnorm(&rd) / (T::one() + norm_c);
            let eq_inf = rp.norm() / (T::one() + norm_b);
            if rel_gap <= tol && lmi_inf <= tol && eq_inf <= tol {
                status = SdpStatus::Optimal;
                break;
            }
            if bnorm(&x) > diverged || bnorm(&s) > diverged || y.norm() > diverged {
                status = SdpStatus::Infeasible;
                break;
            }
            if iter == settings.max_iter {
                break;
            }
            let mu = xs / n_total;

            let Some(scal) = x.iter().zip(&s).map(|(x, s)| nt_scaling(x, s)).collect::<Option<Vec<_>>>() else {
                break;
            };
            let Some(schur) = self.schur_matrix(&scal) else { break };

            // predictor
            let rc_aff: Vec<RMatrix<T>> = x.iter().map(|x| -x).collect();
            let aff = self.direction(&scal, &schur, &rc_aff, &rd, &rp);
            let ap = step_all(&x, &aff.dx);
            let ad = step_all(&s, &aff.ds);
            let ap_aff = T::one().min(ap);
            let ad_aff = T::one().min(ad);
            let xs_aff = x
                .iter()
                .zip(&aff.dx)
                .zip(s.iter().zip(&aff.ds))
                .fold(T::zero(), |acc, ((x, dx), (s, ds))| {
                    acc + inner(&(x + dx * ap_aff), &(s + ds * ad_aff))
                });
            let ratio = (xs_aff / xs).max(T::zero()).min(T::one());
            let sigma = ratio * ratio * ratio;

            // corrector in the scaled space, where X and S both equal diag(λ)
            let rc: Vec<RMatrix<T>> = scal
                .iter()
                .zip(aff.dx.iter().zip(&aff.ds))
                .map(|(sc, (dx, ds))| {
                    let n = sc.lambda.len();
                    let dxt = &sc.g_inv * dx * sc.g_inv.transpose();
                    let dst = sc.g.transpose() * ds * &sc.g;
                    let cross = &dxt * &dst + &dst * &dxt;
                    let k = RMatrix::from_fn(n, n, |i, j| {
                        let mut r = -cross[(i, j)];
                        if i == j {
                            r += (sigma * mu - sc.lambda[i] * sc.lambda[i]) * T::lit(2.0);
                        }
                        r / (sc.lambda[i] + sc.lambda[j])
                    });
                    sym(&(&sc.g * k * sc.g.transpose()))
                })
                .collect();
            let dir = self.direction(&scal, &schur, &rc, &rd, &rp);
            let gamma = T::lit(0.9) + T::lit(0.09) * ap_aff.min(ad_aff);
            let alpha_p = T::one().min(gamma * step_all(&x, &dir.dx));
            let alpha_d = T::one().min(gamma * step_all(&s, &dir.ds));
            if alpha_p < T::lit(1e-14) && alpha_d < T::lit(1e-14) {
                break;
            }
            for (xb, dxb) in x.iter_mut().zip(&dir.dx) {
                *xb = sym(&(&*xb + dxb * alpha_p));
            }
            for (sb, dsb) in s.iter_mut().zip(&dir.ds) {
                *sb = sym(&(&*sb + dsb * alpha_d));
            }
            y += &dir.dy * alpha_d;
            let _ = half;
        }
        IpmOutput { y, x, status, iterations }
    }
}

fn step_all<T: Real>(x: &[RMatrix<T>], dx: &[RMatrix<T>]) -> T {
    x.iter().zip(dx).fold(T::lit(1e30), |acc, (x, d)| acc.min(max_step(x, d)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::trace_norm;
    use crate::random::random_hermitian;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn scalar_block(a0: f64, a1: f64) -> LmiBlock<f64> {
        LmiBlock { a0: RMatrix::from_element(1, 1, a0), a: vec![RMatrix::from_element(1, 1, a1)] }
    }

    #[test]
    fn scalar_lower_bound() {
        let p = SdpProblem { c: RVector::from_vec(vec![1.0]), blocks: vec![scalar_block(-1.0, 1.0)], equalities: None };
        let sol = solve(&p, &SdpSettings::default()).unwrap();
        assert_eq!(sol.status, SdpStatus::Optimal);
        assert!((sol.x[0] - 1.0).abs() < 1e-7, "{:?}", sol.x);
        assert!(sol.gap.abs() <= 1e-7 * (1.0 + sol.objective_value.abs()));
    }

    #[test]
    fn unbounded_direction_reported_infeasible() {
        // x free in an empty LMI direction with nonzero cost
        let p = SdpProblem {
            c: RVector::from_vec(vec![1.0, 1.0]),
            blocks: vec![LmiBlock {
                a0: RMatrix::from_element(1, 1, -1.0),
                a: vec![RMatrix::from_element(1, 1, 1.0), RMatrix::zeros(1, 1)],
            }],
            equalities: None,
        };
        assert_eq!(solve(&p, &SdpSettings::default()).unwrap().status, SdpStatus::Infeasible);
    }

    #[test]
    fn inconsistent_equalities_reported_infeasible() {
        let p = SdpProblem {
            c: RVector::from_vec(vec![1.0]),
            blocks: vec![scalar_block(-1.0, 1.0)],
            equalities: Some(LinearEqualities {
                e: RMatrix::from_row_slice(2, 1, &[1.0, 1.0]),
                f: RVector::from_vec(vec![1.0, 2.0]),
            }),
        };
        assert_eq!(solve(&p, &SdpSettings::default()).unwrap().status, SdpStatus::Infeasible);
    }

    #[test]
    fn empty_lmi_detected_infeasible() {
        // -1 - x^2-free: block [[-1]] with no dependence on x
        let p = SdpProblem {
            c: RVector::from_vec(vec![1.0]),
            blocks: vec![LmiBlock { a0: RMatrix::from_element(1, 1, -1.0), a: vec![RMatrix::from_element(1, 1, 1.0)] }],
            equalities: Some(LinearEqualities { e: RMatrix::from_element(1, 1, 1.0), f: RVector::from_vec(vec![0.0]) }),
        };
        let sol = solve(&p, &SdpSettings::default()).unwrap();
        assert_ne!(sol.status, SdpStatus::Optimal);
    }

    #[test]
    fn inner_holevo_structure_matches_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for d in [2, 3, 4] {
            let z = random_hermitian::<f64, _>(d, &mut rng);
            let sol = solve(&crate::bounds::inner_holevo_problem(&z), &SdpSettings::default()).unwrap();
            assert_eq!(sol.status, SdpStatus::Optimal);
            let im = z.map(|v| num_complex::Complex::new(v.im, 0.0));
            let expect = z.trace().re + trace_norm(&im);
            assert!((sol.objective_value - expect).abs() <= 1e-7 * (1.0 + expect.abs()), "d={d}");
            assert!(sol.dual_value <= sol.objective_value + 1e-9);
            assert!(sol.min_block_eigenvalue >= -1e-8);
        }
    }

    #[test]
    fn random_feasible_problems_close_the_gap() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for trial in 0..10 {
            let n = 4;
            let m = 3;
            // A0 = I guarantees x = 0 is strictly feasible; a PSD-cost combination keeps it bounded
            let a: Vec<RMatrix<f64>> = (0..m)
                .map(|_| {
                    let g = RMatrix::from_fn(n, n, |_, _| rng.random::<f64>() - 0.5);
                    &g + g.transpose()
                })
                .collect();
            let y0 = RMatrix::from_fn(n, n, |_, _| rng.random::<f64>() - 0.5);
            let y0 = &y0 * y0.transpose() + RMatrix::identity(n, n);
            let c = RVector::from_iterator(m, a.iter().map(|aj| inner(aj, &y0)));
            let p = SdpProblem {
                c,
                blocks: vec![LmiBlock { a0: RMatrix::identity(n, n), a }],
                equalities: None,
            };
            let sol = solve(&p, &SdpSettings::default()).unwrap();
            assert_eq!(sol.status, SdpStatus::Optimal, "trial {trial}");
            assert!(sol.gap.abs() <= 1e-7 * (1.0 + sol.objective_value.abs()));
            assert!(sol.dual_value <= sol.objective_value + 1e-9);
            let again = solve(&p, &SdpSettings::default()).unwrap();
            assert_eq!(sol, again);
        }
    }
}
