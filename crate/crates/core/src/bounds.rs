//! Scalar Cramér-Rao type bounds: SLD, RLD, Holevo and the upper-bound chain.

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{QestError, Result};
use crate::information::{classical_fi, compute_sld, qfi_matrices, sld_matrices, InfoMatrices, Povm};
use crate::model::ModelPoint;
use crate::operators::{
    check_invertible, complex_to_real_embed, eig_hermitian, eig_symmetric, psd_sqrt, spd_inv_sqrt, spd_inverse, trace_norm_real,
    trace_product, HermitianOperator,
};
use crate::optimize::nelder_mead;
use crate::scalar::{cr, to_complex, CMatrix, RMatrix, RVector, Real};
use crate::sdp::{solve, LinearEqualities, LmiBlock, SdpProblem, SdpSettings, SdpSolution, SdpStatus};
use crate::tolerances::Tolerances;

/// Positive definite cost weight.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix<T: Real> {
    w: RMatrix<T>,
    sqrt: RMatrix<T>,
}

impl<T: Real> WeightMatrix<T> {
    pub fn new(w: RMatrix<T>) -> Result<Self> {
        if !w.is_square() || w.is_empty() {
            return Err(QestError::InvalidInput("weight matrix must be square and non-empty".into()));
        }
        let asym = (&w - w.transpose()).abs().max();
        let scale = T::one().max(w.abs().max());
        if asym > T::lit(1e-12) * scale {
            return Err(QestError::InvalidInput(format!("weight matrix is not symmetric (asymmetry {asym:e})")));
        }
        let w = (&w + w.transpose()) * T::lit(0.5);
        let (vals, _) = crate::operators::eig_symmetric(&w);
        if !(vals[0] >= T::lit(Tolerances::default().weight_pd)) {
            return Err(QestError::InvalidInput(format!(
                "weight matrix is not positive definite (smallest eigenvalue {:e})",
                vals[0]
            )));
        }
        let sqrt = psd_sqrt(&w);
        Ok(Self { w, sqrt })
    }

    pub fn identity(d: usize) -> Self {
        Self { w: RMatrix::identity(d, d), sqrt: RMatrix::identity(d, d) }
    }

    pub fn dim(&self) -> usize {
        self.w.nrows()
    }

    pub fn matrix(&self) -> &RMatrix<T> {
        &self.w
    }

    pub fn sqrt(&self) -> &RMatrix<T> {
        &self.sqrt
    }

    fn check_dim(&self, d: usize) -> Result<()> {
        if self.dim() != d {
            return Err(QestError::InvalidInput(format!(
                "weight matrix is {}x{} but there are {d} parameters",
                self.dim(),
                self.dim()
            )));
        }
        Ok(())
    }
}

/// `Tr[W Q⁻¹]`.
pub fn scalar_sld_bound<T: Real>(q: &RMatrix<T>, w: &WeightMatrix<T>, tol: &Tolerances) -> Result<T> {
    w.check_dim(q.nrows())?;
    let qi = spd_inverse(q, tol.qfi_condition)?;
    Ok((w.matrix() * qi).trace())
}

/// `Tr[W Re J⁻¹] + ‖√W Im J⁻¹ √W‖₁`.
pub fn scalar_rld_bound<T: Real>(j: &CMatrix<T>, w: &WeightMatrix<T>, tol: &Tolerances) -> Result<T> {
    w.check_dim(j.nrows())?;
    let eig = eig_hermitian(&crate::operators::hermitian_part(j))?;
    let n = eig.eigenvalues.len();
    let (lo, hi) = (eig.eigenvalues[0], eig.eigenvalues[n - 1]);
    if !(hi > T::zero()) || !(lo > T::lit(tol.qfi_condition) * hi) {
        let ratio = if hi > T::zero() { (lo / hi).as_f64() } else { 0.0 };
        return Err(QestError::SingularQfi(ratio));
    }
    let jinv = eig.map_eigenvalues(|v| T::one() / v);
    let re = jinv.map(|z| z.re);
    let im = jinv.map(|z| z.im);
    let sw = w.sqrt();
    let term = trace_norm_real(&(sw * im * sw));
    Ok((w.matrix() * re).trace() + term)
}

/// The three upper estimates of the Holevo bound, each computed on its own.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundChain<T: Real> {
    pub c_s_plus_norm: T,
    pub one_plus_r_cs: T,
    pub two_cs: T,
}

pub fn upper_bound_chain<T: Real>(
    q: &RMatrix<T>,
    d: &RMatrix<T>,
    w: &WeightMatrix<T>,
    tol: &Tolerances,
) -> Result<BoundChain<T>> {
    let cs = scalar_sld_bound(q, w, tol)?;
    let qi = spd_inverse(q, tol.qfi_condition)?;
    let sw = w.sqrt();
    let norm_term = trace_norm_real(&(sw * &qi * d * &qi * sw));
    let info = InfoMatrices { q: q.clone(), j: None, d: d.clone() };
    let r = crate::information::incompatibility_r(&info, tol)?;
    Ok(BoundChain { c_s_plus_norm: cs + norm_term, one_plus_r_cs: (T::one() + r) * cs, two_cs: cs + cs })
}

/// Marginal bound `Tr[W_S (Q⁻¹)_SS]` on the parameters in `interest`, the
/// others being unknown nuisance parameters.
pub fn nuisance_bound<T: Real>(
    q: &RMatrix<T>,
    interest: &[usize],
    w_sub: &WeightMatrix<T>,
    tol: &Tolerances,
) -> Result<T> {
    let d = q.nrows();
    if interest.is_empty() || interest.iter().any(|&i| i >= d) {
        return Err(QestError::InvalidInput("interest indices out of range".into()));
    }
    let mut sorted = interest.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != interest.len() {
        return Err(QestError::InvalidInput("interest indices repeat".into()));
    }
    w_sub.check_dim(interest.len())?;
    let qi = spd_inverse(q, tol.qfi_condition)?;
    let k = interest.len();
    let sub = RMatrix::from_fn(k, k, |a, b| qi[(interest[a], interest[b])]);
    Ok((w_sub.matrix() * sub).trace())
}

/// Orthonormal Hermitian basis of `n×n` matrices under `Re Tr[A B]`, starting
/// with `I/√n`.
pub fn hermitian_basis<T: Real>(n: usize) -> Vec<CMatrix<T>> {
    let inv_sqrt2 = T::lit(std::f64::consts::FRAC_1_SQRT_2);
    let mut candidates: Vec<CMatrix<T>> = vec![CMatrix::identity(n, n)];
    for i in 0..n {
        let mut e = CMatrix::zeros(n, n);
        e[(i, i)] = cr(T::one());
        candidates.push(e);
    }
    for i in 0..n {
        for j in i + 1..n {
            let mut s = CMatrix::zeros(n, n);
            s[(i, j)] = cr(inv_sqrt2);
            s[(j, i)] = cr(inv_sqrt2);
            candidates.push(s);
            let mut a = CMatrix::zeros(n, n);
            a[(i, j)] = Complex::new(T::zero(), -inv_sqrt2);
            a[(j, i)] = Complex::new(T::zero(), inv_sqrt2);
            candidates.push(a);
        }
    }
    let mut basis: Vec<CMatrix<T>> = Vec::with_capacity(n * n);
    for mut v in candidates {
        for b in &basis {
            let overlap = trace_product(b, &v).re;
            v -= b * cr(overlap);
        }
        let norm = trace_product(&v, &v).re.sqrt();
        if norm > T::lit(1e-8) {
            basis.push(v / cr(norm));
        }
    }
    basis
}

/// Feasible point of the Holevo program certifying the returned value.
#[derive(Debug, Clone)]
pub struct HolevoCertificate<T: Real> {
    pub x_ops: Vec<HermitianOperator<T>>,
    pub u: RMatrix<T>,
    pub sdp_gap: T,
    /// `max |Tr[∂_μρ X_ν] − δ_μν|`.
    pub constraint_residual: T,
    /// Smallest eigenvalue of `U − Z[X]`.
    pub min_eig_u_minus_z: T,
    pub iterations: usize,
}

/// `Z_μν = Tr[ρ X_μ X_ν]`.
pub fn z_matrix<T: Real>(rho: &CMatrix<T>, x: &[HermitianOperator<T>]) -> CMatrix<T> {
    let d = x.len();
    CMatrix::from_fn(d, d, |mu, nu| trace_product(rho, &(x[mu].matrix() * x[nu].matrix())))
}

/// `Tr[W Re Z] + ‖√W Im Z √W‖₁`, the function minimized by the Holevo bound.
pub fn holevo_function<T: Real>(rho: &CMatrix<T>, x: &[HermitianOperator<T>], w: &WeightMatrix<T>) -> T {
    let z = z_matrix(rho, x);
    let re = z.map(|v| v.re);
    let im = z.map(|v| v.im);
    let sw = w.sqrt();
    (w.matrix() * re).trace() + trace_norm_real(&(sw * im * sw))
}

/// Holevo bound as a semidefinite program over operator coefficients.
///
/// `X_μ = Σ_k x_μk E_k` over [`hermitian_basis`], with `V` holding
/// `vec(X_μ S)` for `ρ = S S†` and the block `[[U, V†], [V, I]] ⪰ 0`.
pub fn holevo_bound<T: Real>(
    pt: &ModelPoint<T>,
    w: &WeightMatrix<T>,
    tol: &Tolerances,
) -> Result<(T, HolevoCertificate<T>)> {
    let d = pt.param_dim();
    w.check_dim(d)?;
    let sld = compute_sld(pt, tol)?;
    let (q, _) = sld_matrices(&pt.rho, &sld);
    check_invertible(&q, tol.qfi_condition)?;
    // λ = A λ̄ with A = Q^{-1/2} V Λ^{-1/4}, where Q^{-1/2} W Q^{-1/2} = V Λ Vᵀ;
    // then Q̄ = Λ^{-1/2} and W̄ = Λ^{1/2} share the conditioning
    let qis = spd_inv_sqrt(&q, tol.qfi_condition)?;
    let (lam, v) = eig_symmetric(&(&qis * w.matrix() * &qis));
    let a = RMatrix::from_fn(d, d, |i, j| (&qis * &v)[(i, j)] / lam[j].sqrt().sqrt());
    let balanced = pt.reparametrized(pt.lambda.clone(), &a.transpose(), tol)?;
    let wb = RMatrix::from_diagonal(&lam.map(|x| x.sqrt()));
    let scale = wb.trace() / T::from_count(d);
    let (value, xw, uw, sol) = holevo_program(&balanced, &(wb / scale), tol)?;
    let x_ops: Vec<HermitianOperator<T>> = (0..d)
        .map(|mu| {
            let n = pt.dim();
            let m = (0..d).fold(CMatrix::zeros(n, n), |acc, nu| acc + xw[nu].matrix() * cr(a[(mu, nu)]));
            HermitianOperator::from_hermitian_part(&m)
        })
        .collect();
    let u = &a * uw * a.transpose();
    let mut constraint_residual = T::zero();
    for mu in 0..d {
        for nu in 0..d {
            let t = trace_product(pt.drho[mu].matrix(), x_ops[nu].matrix()).re;
            let target = if mu == nu { T::one() } else { T::zero() };
            constraint_residual = constraint_residual.max((t - target).abs());
        }
    }
    let z = z_matrix(pt.rho.matrix(), &x_ops);
    let diff = to_complex(&u) - z;
    let min_eig_u_minus_z = HermitianOperator::from_hermitian_part(&diff).eig().min_eigenvalue();
    let cert = HolevoCertificate {
        x_ops,
        u,
        sdp_gap: sol.gap * scale,
        constraint_residual,
        min_eig_u_minus_z,
        iterations: sol.iterations,
    };
    Ok((value * scale, cert))
}

type ProgramOutput<T> = (T, Vec<HermitianOperator<T>>, RMatrix<T>, SdpSolution<T>);

fn holevo_program<T: Real>(pt: &ModelPoint<T>, w: &RMatrix<T>, tol: &Tolerances) -> Result<ProgramOutput<T>> {
    let d = pt.param_dim();
    let n = pt.dim();
    let basis = hermitian_basis::<T>(n);
    let nb = basis.len();
    let eig = pt.rho.eig();
    let support: Vec<usize> = (0..n).filter(|&i| eig.eigenvalues[i] > T::lit(tol.holevo_sqrt_cutoff)).collect();
    let r = support.len();
    let s = CMatrix::from_fn(n, r, |i, j| {
        let k = support[j];
        eig.eigenvectors[(i, k)] * cr(eig.eigenvalues[k].sqrt())
    });
    let nr = n * r;
    let size = d + nr;
    let es: Vec<CMatrix<T>> = basis.iter().map(|e| e * &s).collect();

    let nu_vars = d * (d + 1) / 2;
    let m = nu_vars + d * nb;
    let mut a0 = CMatrix::zeros(size, size);
    for i in d..size {
        a0[(i, i)] = cr(T::one());
    }
    let mut mats = Vec::with_capacity(m);
    let mut c = Vec::with_capacity(m);
    let mut u_index = Vec::with_capacity(nu_vars);
    for i in 0..d {
        for j in i..d {
            let mut e = CMatrix::zeros(size, size);
            e[(i, j)] = cr(T::one());
            e[(j, i)] = cr(T::one());
            mats.push(complex_to_real_embed(&e));
            let wij = w[(i, j)];
            c.push(if i == j { wij } else { wij + wij });
            u_index.push((i, j));
        }
    }
    for mu in 0..d {
        for esk in &es {
            let mut g = CMatrix::zeros(size, size);
            for (a, v) in esk.iter().enumerate() {
                g[(d + a, mu)] = *v;
                g[(mu, d + a)] = v.conj();
            }
            mats.push(complex_to_real_embed(&g));
            c.push(T::zero());
        }
    }
    let mut e = RMatrix::zeros(d * d, m);
    let mut f = RVector::zeros(d * d);
    for nu in 0..d {
        for mu in 0..d {
            let row = nu * d + mu;
            for (k, ek) in basis.iter().enumerate() {
                e[(row, nu_vars + mu * nb + k)] = trace_product(pt.drho[nu].matrix(), ek).re;
            }
            if mu == nu {
                f[row] = T::one();
            }
        }
    }
    let problem = SdpProblem {
        c: RVector::from_vec(c),
        blocks: vec![LmiBlock { a0: complex_to_real_embed(&a0), a: mats }],
        equalities: Some(LinearEqualities { e, f }),
    };
    let sol = solve(&problem, &SdpSettings::from_tolerances(tol))?;
    let scale = T::one() + sol.objective_value.abs();
    let acceptable = match sol.status {
        SdpStatus::Optimal => true,
        SdpStatus::MaxIter => sol.gap.abs() <= T::lit(tol.sdp_fail_gap) * scale,
        SdpStatus::Infeasible => false,
    };
    if !acceptable {
        return Err(QestError::SolverFailure(format!(
            "Holevo program ended with status {:?} and gap {:e}",
            sol.status, sol.gap
        )));
    }

    let mut u = RMatrix::zeros(d, d);
    for (idx, &(i, j)) in u_index.iter().enumerate() {
        u[(i, j)] = sol.x[idx];
        u[(j, i)] = sol.x[idx];
    }
    let x_ops: Vec<HermitianOperator<T>> = (0..d)
        .map(|mu| {
            let mut x = CMatrix::zeros(n, n);
            for (k, ek) in basis.iter().enumerate() {
                x += ek * cr(sol.x[nu_vars + mu * nb + k]);
            }
            HermitianOperator::from_hermitian_part(&x)
        })
        .collect();
    Ok((sol.objective_value, x_ops, u, sol))
}

/// Two-outcome projective qubit measurement along the Bloch direction `(θ, φ)`.
pub fn bloch_projective<T: Real>(theta: T, phi: T) -> Povm<T> {
    let (st, ct) = (theta.sin(), theta.cos());
    let (sp, cp) = (phi.sin(), phi.cos());
    let half = T::lit(0.5);
    let nx = st * cp;
    let ny = st * sp;
    let nz = ct;
    let plus = CMatrix::from_row_slice(
        2,
        2,
        &[
            cr(half * (T::one() + nz)),
            Complex::new(half * nx, -half * ny),
            Complex::new(half * nx, half * ny),
            cr(half * (T::one() - nz)),
        ],
    );
    let minus = CMatrix::identity(2, 2) - &plus;
    Povm::new(vec![plus, minus], &Tolerances::default()).expect("projective qubit measurement is valid")
}

/// Best mixture of projective qubit measurements found by the search.
#[derive(Debug, Clone)]
pub struct MostInformative<T: Real> {
    /// `Tr[W F⁻¹]` at the best measurement found; an upper bound on the
    /// most-informative bound, not a certified optimum.
    pub value: T,
    pub angles: Vec<(T, T)>,
    pub weights: Vec<T>,
    pub feasible_starts: usize,
}

fn bloch_angles_of<T: Real>(v: &CMatrix<T>) -> (f64, f64) {
    // Bloch vector of the projector onto the column vector v
    let a = v[(0, 0)];
    let b = v[(1, 0)];
    let x = (a.conj() * b).re * T::lit(2.0);
    let y = (a.conj() * b).im * T::lit(2.0);
    let z = a.norm_sqr() - b.norm_sqr();
    let (x, y, z) = (x.as_f64(), y.as_f64(), z.as_f64());
    (z.clamp(-1.0, 1.0).acos(), y.atan2(x))
}

/// Multi-start Nelder-Mead search for the measurement minimizing
/// `Tr[W F(Π)⁻¹]` among convex mixtures of `d` projective qubit measurements.
pub fn most_informative_search<T: Real>(
    pt: &ModelPoint<T>,
    w: &WeightMatrix<T>,
    tol: &Tolerances,
) -> Result<MostInformative<T>> {
    if pt.dim() != 2 {
        return Err(QestError::InvalidInput("measurement search is implemented for qubits only".into()));
    }
    let d = pt.param_dim();
    w.check_dim(d)?;
    let parts = d;
    let decode = |p: &[f64]| -> (Vec<(T, T)>, Vec<T>) {
        let angles = (0..parts).map(|j| (T::lit(p[2 * j]), T::lit(p[2 * j + 1]))).collect();
        let logits = &p[2 * parts..];
        let top = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let ex: Vec<f64> = logits.iter().map(|l| (l - top).exp()).collect();
        let total: f64 = ex.iter().sum();
        (angles, ex.iter().map(|e| T::lit(e / total)).collect())
    };
    let cost = |p: &[f64]| -> f64 {
        let (angles, weights) = decode(p);
        let mut f = RMatrix::<T>::zeros(d, d);
        for ((th, ph), wt) in angles.iter().zip(&weights) {
            match classical_fi(pt, &bloch_projective(*th, *ph), tol) {
                Ok(fj) => f += fj * *wt,
                Err(_) => return f64::INFINITY,
            }
        }
        match spd_inverse(&f, tol.qfi_condition) {
            Ok(fi) => (w.matrix() * fi).trace().as_f64(),
            Err(_) => f64::INFINITY,
        }
    };

    let mut starts: Vec<Vec<f64>> = Vec::new();
    if let Ok(sld) = compute_sld(pt, tol) {
        let mut p = Vec::with_capacity(3 * parts);
        for l in sld.operators.iter().take(parts) {
            let e = l.eig();
            let (th, ph) = bloch_angles_of(&e.eigenvectors.columns(1, 1).into_owned());
            p.push(th);
            p.push(ph);
        }
        p.extend(std::iter::repeat(0.0).take(parts));
        starts.push(p);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x6d69);
    while starts.len() < tol.mi_starts.max(1) {
        let mut p = Vec::with_capacity(3 * parts);
        for _ in 0..parts {
            let z: f64 = rng.random_range(-1.0..1.0);
            p.push(z.acos());
            p.push(rng.random_range(-std::f64::consts::PI..std::f64::consts::PI));
        }
        for _ in 0..parts {
            p.push(rng.random_range(-0.5..0.5));
        }
        starts.push(p);
    }

    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut feasible = 0;
    for s in &starts {
        let mut f = |p: &[f64]| cost(p);
        let first = nelder_mead(&mut f, s, 0.3, 1e-13, 4000);
        let polished = nelder_mead(&mut f, &first.x, 0.05, 1e-15, 4000);
        if polished.value.is_finite() {
            feasible += 1;
            if best.as_ref().is_none_or(|(v, _)| polished.value < *v) {
                best = Some((polished.value, polished.x));
            }
        }
    }
    let Some((value, p)) = best else { return Err(QestError::SearchDegenerate) };
    let (angles, weights) = decode(&p);
    Ok(MostInformative { value: T::lit(value), angles, weights, feasible_starts: feasible })
}

/// Inner program of the Holevo bound at fixed `Z`: minimize `Tr U` over real
/// symmetric `U ⪰ Z`. The optimum is `Tr[Re Z] + ‖Im Z‖₁`.
pub fn inner_holevo_problem<T: Real>(z: &CMatrix<T>) -> SdpProblem<T> {
    let d = z.nrows();
    let mut a = Vec::new();
    let mut c = Vec::new();
    for i in 0..d {
        for j in i..d {
            let mut e = CMatrix::<T>::zeros(d, d);
            e[(i, j)] = cr(T::one());
            e[(j, i)] = cr(T::one());
            a.push(complex_to_real_embed(&e));
            c.push(if i == j { T::one() } else { T::zero() });
        }
    }
    SdpProblem { c: RVector::from_vec(c), blocks: vec![LmiBlock { a0: complex_to_real_embed(&(-z)), a }], equalities: None }
}

/// Closed form `Tr[Re Z] + ‖Im Z‖₁` of the inner program.
pub fn inner_holevo_closed_form<T: Real>(z: &CMatrix<T>) -> T {
    let im = z.map(|v| cr(v.im));
    z.trace().re + crate::operators::trace_norm(&im)
}

/// Solver output carried into reports.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HolevoValue<T: Real> {
    pub value: T,
    pub gap: T,
}

/// All bounds at one model point.
#[derive(Debug, Clone)]
pub struct BoundsReport<T: Real> {
    pub c_sld: T,
    pub c_rld: Option<T>,
    pub c_holevo: Option<HolevoValue<T>>,
    pub chain: BoundChain<T>,
    pub r: T,
    pub q: RMatrix<T>,
    pub d: RMatrix<T>,
}

pub fn bounds_report<T: Real>(
    pt: &ModelPoint<T>,
    w: &WeightMatrix<T>,
    with_holevo: bool,
    tol: &Tolerances,
) -> Result<BoundsReport<T>> {
    let info = qfi_matrices(pt, tol)?;
    let c_sld = scalar_sld_bound(&info.q, w, tol)?;
    let c_rld = match &info.j {
        Some(j) => match scalar_rld_bound(j, w, tol) {
            Ok(v) => Some(v),
            Err(QestError::SingularQfi(_)) => None,
            Err(e) => return Err(e),
        },
        None => None,
    };
    let chain = upper_bound_chain(&info.q, &info.d, w, tol)?;
    let r = crate::information::incompatibility_r(&info, tol)?;
    let c_holevo = if with_holevo {
        let (value, cert) = holevo_bound(pt, w, tol)?;
        Some(HolevoValue { value, gap: cert.sdp_gap })
    } else {
        None
    };
    Ok(BoundsReport { c_sld, c_rld, c_holevo, chain, r, q: info.q, d: info.d })
}
