//! Logarithmic derivatives and information matrices.

use crate::error::{QestError, Result};
use crate::model::ModelPoint;
use crate::operators::{
    frobenius, lyapunov_solve, spd_inv_sqrt, spd_inverse, trace_product, DensityMatrix, HermitianOperator,
};
use crate::scalar::{cr, CMatrix, RMatrix, Real};
use crate::tolerances::Tolerances;

/// Symmetric logarithmic derivatives with their defining-equation residuals.
#[derive(Debug, Clone)]
pub struct SldSet<T: Real> {
    pub operators: Vec<HermitianOperator<T>>,
    pub residuals: Vec<T>,
}

/// Right logarithmic derivatives `L^R = ρ⁺ ∂ρ`.
#[derive(Debug, Clone)]
pub struct RldSet<T: Real> {
    pub operators: Vec<CMatrix<T>>,
    pub residuals: Vec<T>,
}

#[derive(Debug, Clone)]
pub struct InfoMatrices<T: Real> {
    /// SLD quantum Fisher information.
    pub q: RMatrix<T>,
    /// RLD quantum Fisher information; `None` when the RLD does not exist.
    pub j: Option<CMatrix<T>>,
    /// Mean Uhlmann curvature, `D_μν = Im Tr[ρ L_μ L_ν]`.
    pub d: RMatrix<T>,
}

/// A measurement: PSD elements summing to the identity.
#[derive(Debug, Clone, PartialEq)]
pub struct Povm<T: Real> {
    elements: Vec<HermitianOperator<T>>,
}

impl<T: Real> Povm<T> {
    pub fn new(elements: Vec<CMatrix<T>>, tol: &Tolerances) -> Result<Self> {
        let first = elements.first().ok_or_else(|| QestError::InvalidInput("POVM has no elements".into()))?;
        let n = first.nrows();
        let mut total = CMatrix::zeros(n, n);
        let mut ops = Vec::with_capacity(elements.len());
        for (k, e) in elements.into_iter().enumerate() {
            let op = HermitianOperator::with_tolerance(e, tol.hermiticity)?;
            if op.dim() != n {
                return Err(QestError::InvalidInput(format!("POVM element {k} has wrong dimension")));
            }
            let min = op.eig().min_eigenvalue();
            if !(min >= -T::lit(tol.psd)) {
                return Err(QestError::InvalidInput(format!(
                    "POVM element {k} has negative eigenvalue {:.3e}",
                    min.as_f64()
                )));
            }
            total += op.matrix();
            ops.push(op);
        }
        let defect = frobenius(&(total - CMatrix::identity(n, n)));
        if !(defect <= T::lit(tol.povm_completeness)) {
            return Err(QestError::InvalidInput(format!(
                "POVM elements do not sum to the identity (defect {:.3e})",
                defect.as_f64()
            )));
        }
        Ok(Self { elements: ops })
    }

    /// Projective measurement on the columns of a unitary.
    pub fn from_basis(u: &CMatrix<T>, tol: &Tolerances) -> Result<Self> {
        let elements = (0..u.ncols())
            .map(|j| {
                let v = u.column(j);
                v * v.adjoint()
            })
            .collect();
        Self::new(elements, tol)
    }

    /// The computational-basis measurement.
    pub fn computational(n: usize) -> Self {
        Self::from_basis(&CMatrix::identity(n, n), &Tolerances::default()).expect("identity basis")
    }

    /// Randomly choosing measurement `i` with probability `weights[i]`.
    pub fn mixture(parts: &[Povm<T>], weights: &[T], tol: &Tolerances) -> Result<Self> {
        let elements = parts
            .iter()
            .zip(weights)
            .flat_map(|(p, w)| p.elements.iter().map(move |e| e.matrix() * cr(*w)))
            .collect();
        Self::new(elements, tol)
    }

    pub fn elements(&self) -> &[HermitianOperator<T>] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.elements[0].dim()
    }

    /// Born-rule probabilities `Tr[ρ Π_k]`.
    pub fn probabilities(&self, rho: &CMatrix<T>) -> Vec<T> {
        self.elements.iter().map(|e| trace_product(rho, e.matrix()).re).collect()
    }
}

/// `L_μ` solving `∂_μρ = (L_μρ + ρL_μ)/2`, zero on the blocks where `p_i + p_j` vanishes.
pub fn compute_sld<T: Real>(pt: &ModelPoint<T>, tol: &Tolerances) -> Result<SldSet<T>> {
    let rho = &pt.rho;
    let cutoff = rho.default_cutoff(tol);
    let half = cr(T::lit(0.5));
    let mut operators = Vec::with_capacity(pt.param_dim());
    let mut residuals = Vec::with_capacity(pt.param_dim());
    for d in &pt.drho {
        let l = lyapunov_solve(rho, d, cutoff, tol)?;
        let lhs = (l.matrix() * rho.matrix() + rho.matrix() * l.matrix()) * half;
        residuals.push(frobenius(&(lhs - d.matrix())));
        operators.push(l);
    }
    Ok(SldSet { operators, residuals })
}

/// `L^R_μ = ρ⁺ ∂_μρ`; defined only if every `∂_μρ` is supported on supp(ρ).
pub fn compute_rld<T: Real>(pt: &ModelPoint<T>, tol: &Tolerances) -> Result<RldSet<T>> {
    let rho = &pt.rho;
    let cutoff = rho.default_cutoff(tol);
    let eig = rho.eig();
    let p = &eig.eigenvalues;
    let n = rho.dim();
    let mut operators = Vec::with_capacity(pt.param_dim());
    let mut residuals = Vec::with_capacity(pt.param_dim());
    for (index, d) in pt.drho.iter().enumerate() {
        let bt = eig.to_eigenbasis(d.matrix());
        let mut xt = CMatrix::zeros(n, n);
        let mut outside = T::zero();
        for i in 0..n {
            for j in 0..n {
                if p[i] > cutoff {
                    xt[(i, j)] = bt[(i, j)] * cr(T::one() / p[i]);
                } else {
                    outside += bt[(i, j)].norm_sqr();
                }
            }
        }
        if outside.sqrt() > T::lit(tol.rhs_consistency) * frobenius(d.matrix()) {
            return Err(QestError::RldUndefined { index });
        }
        let l = eig.from_eigenbasis(&xt);
        residuals.push(frobenius(&(rho.matrix() * &l - d.matrix())));
        operators.push(l);
    }
    Ok(RldSet { operators, residuals })
}

/// `Tr[ρ A B]` for each pair, as a complex `d×d` matrix.
fn rho_weighted_products<T: Real>(rho: &DensityMatrix<T>, ops: &[CMatrix<T>]) -> CMatrix<T> {
    let d = ops.len();
    let rho_ops: Vec<CMatrix<T>> = ops.iter().map(|l| rho.matrix() * l).collect();
    CMatrix::from_fn(d, d, |mu, nu| trace_product(&rho_ops[mu], &ops[nu]))
}

/// `Q_μν = Re Tr[ρ L_μ L_ν]` and `D_μν = Im Tr[ρ L_μ L_ν]` from an SLD set.
pub fn sld_matrices<T: Real>(rho: &DensityMatrix<T>, sld: &SldSet<T>) -> (RMatrix<T>, RMatrix<T>) {
    let ops: Vec<CMatrix<T>> = sld.operators.iter().map(|l| l.matrix().clone()).collect();
    let z = rho_weighted_products(rho, &ops);
    let half = T::lit(0.5);
    let re = z.map(|c| c.re);
    let im = z.map(|c| c.im);
    let q = (&re + re.transpose()) * half;
    let d = (&im - im.transpose()) * half;
    (q, d)
}

/// `J_μν = Tr[ρ L^R_ν L^R_μ†]`.
pub fn rld_matrix<T: Real>(rho: &DensityMatrix<T>, rld: &RldSet<T>) -> CMatrix<T> {
    let d = rld.operators.len();
    let j = CMatrix::from_fn(d, d, |mu, nu| {
        let prod = rho.matrix() * &rld.operators[nu];
        trace_product(&prod, &rld.operators[mu].adjoint())
    });
    (&j + j.adjoint()) * cr(T::lit(0.5))
}

pub fn qfi_matrices<T: Real>(pt: &ModelPoint<T>, tol: &Tolerances) -> Result<InfoMatrices<T>> {
    let sld = compute_sld(pt, tol)?;
    let (q, d) = sld_matrices(&pt.rho, &sld);
    let j = match compute_rld(pt, tol) {
        Ok(rld) => Some(rld_matrix(&pt.rho, &rld)),
        Err(QestError::RldUndefined { .. }) => None,
        Err(e) => return Err(e),
    };
    Ok(InfoMatrices { q, j, d })
}

/// `i Q^{-1/2} D Q^{-1/2}`, the Hermitian form sharing the spectrum of `i Q⁻¹ D`.
pub fn incompatibility_matrix<T: Real>(q: &RMatrix<T>, d: &RMatrix<T>, tol: &Tolerances) -> Result<CMatrix<T>> {
    let s = spd_inv_sqrt(q, tol.qfi_condition)?;
    let k = &s * d * &s;
    Ok(k.map(|x| num_complex::Complex::new(T::zero(), x)))
}

/// Largest eigenvalue of `i Q⁻¹ D`, clamped to `[0, 1]`.
pub fn incompatibility_r<T: Real>(info: &InfoMatrices<T>, tol: &Tolerances) -> Result<T> {
    let k = incompatibility_matrix(&info.q, &info.d, tol)?;
    let top = HermitianOperator::from_hermitian_part(&k).eig().max_eigenvalue();
    Ok(top.max(T::zero()).min(T::one()))
}

/// Classical Fisher information of a measurement, Born-rule probabilities.
pub fn classical_fi<T: Real>(pt: &ModelPoint<T>, povm: &Povm<T>, tol: &Tolerances) -> Result<RMatrix<T>> {
    if povm.dim() != pt.dim() {
        return Err(QestError::InvalidInput("POVM and state dimensions differ".into()));
    }
    let probs = povm.probabilities(pt.rho.matrix());
    let grads: Vec<Vec<T>> = pt.drho.iter().map(|d| povm.probabilities(d.matrix())).collect();
    let dim = pt.param_dim();
    let mut f = RMatrix::zeros(dim, dim);
    let floor = T::lit(tol.prob_floor);
    for (k, &p) in probs.iter().enumerate() {
        if p <= floor {
            if grads.iter().any(|g| g[k].abs() > T::lit(tol.singular_outcome_grad)) {
                return Err(QestError::SingularOutcome { outcome: k });
            }
            continue;
        }
        for mu in 0..dim {
            for nu in 0..dim {
                f[(mu, nu)] += grads[mu][k] * grads[nu][k] / p;
            }
        }
    }
    Ok((&f + f.transpose()) * T::lit(0.5))
}

/// `Υ = Tr[F Q⁻¹]`.
pub fn upsilon<T: Real>(f: &RMatrix<T>, q: &RMatrix<T>, tol: &Tolerances) -> Result<T> {
    let qi = spd_inverse(q, tol.qfi_condition)?;
    Ok((f * qi).trace())
}
