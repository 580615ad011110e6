//! Parametric families of density matrices and their local derivatives.

use std::fmt;
use std::sync::Arc;

use crate::error::{QestError, Result};
use crate::operators::{frobenius, hermitian_part, DensityMatrix, HermitianOperator};
use crate::scalar::{cr, CMatrix, RMatrix, Real};
use crate::tolerances::Tolerances;

pub type StateFn<T> = Arc<dyn Fn(&[T]) -> Result<CMatrix<T>> + Send + Sync>;
pub type DerivativeFn<T> = Arc<dyn Fn(&[T]) -> Result<Vec<CMatrix<T>>> + Send + Sync>;

/// How `∂_μ ρ` is obtained.
#[derive(Clone)]
pub enum DerivativeMode<T: Real> {
    Analytic(DerivativeFn<T>),
    /// Central differences with step `h_μ = h0 (1 + |λ_μ|)` and one Richardson level.
    FiniteDifference { h0: f64 },
}

impl<T: Real> fmt::Debug for DerivativeMode<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Analytic(_) => f.write_str("Analytic"),
            Self::FiniteDifference { h0 } => write!(f, "FiniteDifference {{ h0: {h0} }}"),
        }
    }
}

/// A quantum statistical model `λ ↦ ρ_λ` over a box domain.
#[derive(Clone)]
pub struct StatisticalModel<T: Real> {
    name: String,
    hilbert_dim: usize,
    domain: Vec<(T, T)>,
    state_fn: StateFn<T>,
    derivatives: DerivativeMode<T>,
    factor_fn: Option<StateFn<T>>,
    fixed_frame: bool,
}

impl<T: Real> fmt::Debug for StatisticalModel<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("StatisticalModel")
            .field("name", &self.name)
            .field("param_dim", &self.param_dim())
            .field("hilbert_dim", &self.hilbert_dim)
            .field("derivatives", &self.derivatives)
            .finish()
    }
}

impl<T: Real> StatisticalModel<T> {
    /// A model with finite-difference derivatives (default step `1e-5`).
    pub fn new(
        name: impl Into<String>,
        hilbert_dim: usize,
        domain: Vec<(T, T)>,
        state_fn: impl Fn(&[T]) -> Result<CMatrix<T>> + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            hilbert_dim,
            domain,
            state_fn: Arc::new(state_fn),
            derivatives: DerivativeMode::FiniteDifference { h0: Tolerances::default().fd_step },
            factor_fn: None,
            fixed_frame: true,
        }
    }

    pub fn with_analytic_derivatives(
        mut self,
        f: impl Fn(&[T]) -> Result<Vec<CMatrix<T>>> + Send + Sync + 'static,
    ) -> Self {
        self.derivatives = DerivativeMode::Analytic(Arc::new(f));
        self
    }

    /// Supplies a square-root factor `F(λ)` with `ρ(λ) = F F†`, used to
    /// obtain an accurate spectrum for nearly rank-deficient states.
    pub fn with_state_factor(mut self, f: impl Fn(&[T]) -> Result<CMatrix<T>> + Send + Sync + 'static) -> Self {
        self.factor_fn = Some(Arc::new(f));
        self
    }

    pub fn with_finite_differences(mut self, h0: f64) -> Self {
        self.derivatives = DerivativeMode::FiniteDifference { h0 };
        self
    }

    /// Marks the model as expressed in a λ-dependent orthonormal frame: states at
    /// different λ are not directly comparable, only `(ρ, ∂ρ)` at one point.
    pub fn with_local_frame(mut self) -> Self {
        self.fixed_frame = false;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn param_dim(&self) -> usize {
        self.domain.len()
    }

    pub fn hilbert_dim(&self) -> usize {
        self.hilbert_dim
    }

    pub fn domain(&self) -> &[(T, T)] {
        &self.domain
    }

    pub fn derivative_mode(&self) -> &DerivativeMode<T> {
        &self.derivatives
    }

    pub fn has_fixed_frame(&self) -> bool {
        self.fixed_frame
    }

    pub fn check_domain(&self, lambda: &[T]) -> Result<()> {
        if lambda.len() != self.param_dim() {
            return Err(QestError::InvalidInput(format!(
                "model `{}` takes {} parameters, got {}",
                self.name,
                self.param_dim(),
                lambda.len()
            )));
        }
        for (index, (&v, &(lo, hi))) in lambda.iter().zip(&self.domain).enumerate() {
            if !(v >= lo && v <= hi) {
                return Err(QestError::DomainError { index, value: v.as_f64(), lo: lo.as_f64(), hi: hi.as_f64() });
            }
        }
        Ok(())
    }

    /// Clamps each coordinate into the domain box.
    pub fn project(&self, lambda: &mut [T]) {
        for (v, &(lo, hi)) in lambda.iter_mut().zip(&self.domain) {
            *v = v.max(lo).min(hi);
        }
    }

    /// The raw state matrix, without domain or validity checks.
    pub fn state_matrix(&self, lambda: &[T]) -> Result<CMatrix<T>> {
        (self.state_fn)(lambda)
    }

    /// The raw derivative matrices, symmetrized, without validation.
    pub fn derivative_matrices(&self, lambda: &[T], tol: &Tolerances) -> Result<Vec<CMatrix<T>>> {
        match &self.derivatives {
            DerivativeMode::Analytic(f) => Ok(f(lambda)?.iter().map(hermitian_part).collect()),
            DerivativeMode::FiniteDifference { h0 } => self.finite_differences(lambda, *h0, tol),
        }
    }

    fn finite_differences(&self, lambda: &[T], h0: f64, tol: &Tolerances) -> Result<Vec<CMatrix<T>>> {
        let shifted = |mu: usize, h: T| -> Result<CMatrix<T>> {
            let mut l = lambda.to_vec();
            l[mu] += h;
            let m = (self.state_fn)(&l).map_err(|e| QestError::DerivativeError(e.to_string()))?;
            DensityMatrix::with_tolerances(m.clone(), tol).map_err(|e| {
                QestError::DerivativeError(format!("state at offset {} along parameter {mu}: {e}", h.as_f64()))
            })?;
            Ok(m)
        };
        (0..lambda.len())
            .map(|mu| {
                let h = T::lit(h0) * (T::one() + lambda[mu].abs());
                let half = h * T::lit(0.5);
                let d_h = (shifted(mu, h)? - shifted(mu, -h)?) * cr(T::one() / (h + h));
                let d_half = (shifted(mu, half)? - shifted(mu, -half)?) * cr(T::one() / (half + half));
                let richardson = (d_half * cr(T::lit(4.0)) - d_h) * cr(T::one() / T::lit(3.0));
                Ok(hermitian_part(&richardson))
            })
            .collect()
    }

    /// `ρ(λ)` and all `∂_μ ρ(λ)`.
    pub fn evaluate(&self, lambda: &[T], tol: &Tolerances) -> Result<ModelPoint<T>> {
        self.check_domain(lambda)?;
        let rho = match &self.factor_fn {
            Some(f) => DensityMatrix::from_factor(&f(lambda)?, tol)?,
            None => DensityMatrix::with_tolerances(self.state_matrix(lambda)?, tol)?,
        };
        if rho.dim() != self.hilbert_dim {
            return Err(QestError::InvalidInput(format!(
                "model `{}` produced a {}-dimensional state, declared {}",
                self.name,
                rho.dim(),
                self.hilbert_dim
            )));
        }
        let drho = self
            .derivative_matrices(lambda, tol)?
            .into_iter()
            .map(|m| HermitianOperator::with_tolerance(m, tol.hermiticity))
            .collect::<Result<Vec<_>>>()?;
        ModelPoint::new(lambda.to_vec(), rho, drho, tol)
    }
}

/// State and derivatives at one parameter value.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelPoint<T: Real> {
    pub lambda: Vec<T>,
    pub rho: DensityMatrix<T>,
    pub drho: Vec<HermitianOperator<T>>,
}

impl<T: Real> ModelPoint<T> {
    pub fn new(lambda: Vec<T>, rho: DensityMatrix<T>, drho: Vec<HermitianOperator<T>>, tol: &Tolerances) -> Result<Self> {
        if drho.len() != lambda.len() {
            return Err(QestError::InvalidInput(format!(
                "{} derivative matrices for {} parameters",
                drho.len(),
                lambda.len()
            )));
        }
        for (mu, d) in drho.iter().enumerate() {
            if d.dim() != rho.dim() {
                return Err(QestError::InvalidInput(format!("derivative {mu} has wrong dimension")));
            }
            let tr = d.trace();
            if !(tr.abs() <= T::lit(tol.drho_trace)) {
                return Err(QestError::InvalidState(format!(
                    "derivative {mu} has trace {:.3e}, expected 0",
                    tr.as_f64()
                )));
            }
        }
        Ok(Self { lambda, rho, drho })
    }

    pub fn param_dim(&self) -> usize {
        self.drho.len()
    }

    pub fn dim(&self) -> usize {
        self.rho.dim()
    }

    /// Derivatives with respect to new parameters, `∂̄_μ ρ = Σ_ν B_μν ∂_ν ρ`.
    pub fn reparametrized(&self, lambda_bar: Vec<T>, b: &RMatrix<T>, tol: &Tolerances) -> Result<Self> {
        let drho = transform_derivatives(&self.drho.iter().map(|d| d.matrix().clone()).collect::<Vec<_>>(), b)
            .iter()
            .map(HermitianOperator::from_hermitian_part)
            .collect();
        Self::new(lambda_bar, self.rho.clone(), drho, tol)
    }
}

fn transform_derivatives<T: Real>(drho: &[CMatrix<T>], b: &RMatrix<T>) -> Vec<CMatrix<T>> {
    (0..b.nrows())
        .map(|mu| {
            let n = drho[0].nrows();
            drho.iter()
                .enumerate()
                .fold(CMatrix::zeros(n, n), |acc, (nu, d)| acc + d * cr(b[(mu, nu)]))
        })
        .collect()
}

/// A smooth invertible change of variables `λ̄ ↦ λ`.
#[derive(Clone)]
pub struct Reparametrization<T: Real> {
    pub name: String,
    pub domain: Vec<(T, T)>,
    pub map: Arc<dyn Fn(&[T]) -> Vec<T> + Send + Sync>,
    /// `J_νμ = ∂λ_ν / ∂λ̄_μ`; the reparametrization matrix is `B = Jᵀ`.
    pub jacobian: Arc<dyn Fn(&[T]) -> RMatrix<T> + Send + Sync>,
}

impl<T: Real> Reparametrization<T> {
    /// Linear map `λ = A λ̄ + offset`.
    pub fn linear(name: impl Into<String>, domain: Vec<(T, T)>, a: RMatrix<T>, offset: Vec<T>) -> Self {
        let a_map = a.clone();
        Self {
            name: name.into(),
            domain,
            map: Arc::new(move |lb: &[T]| {
                let v = &a_map * nalgebra::DVector::from_column_slice(lb);
                v.iter().zip(&offset).map(|(x, o)| *x + *o).collect()
            }),
            jacobian: Arc::new(move |_| a.clone()),
        }
    }

    /// `B_μν = ∂λ_ν/∂λ̄_μ`, rejecting a singular Jacobian.
    pub fn b_matrix(&self, lambda_bar: &[T], tol: &Tolerances) -> Result<RMatrix<T>> {
        let b = (self.jacobian)(lambda_bar).transpose();
        let det = if b.is_square() { b.clone().determinant() } else { T::zero() };
        if !(det.abs() >= T::lit(tol.jacobian_det)) {
            return Err(QestError::SingularJacobian(det.abs().as_f64()));
        }
        Ok(b)
    }
}

/// The same family in new coordinates `λ̄`: `ρ̄(λ̄) = ρ(λ(λ̄))` with derivatives
/// transformed by `B`.
pub fn reparametrize_model<T: Real>(model: &StatisticalModel<T>, reparam: Reparametrization<T>) -> StatisticalModel<T> {
    let inner = Arc::new(model.clone());
    let state_inner = inner.clone();
    let map = reparam.map.clone();
    let state_map = reparam.map.clone();
    let rp = reparam.clone();
    let mut out = StatisticalModel::new(
        format!("{}|{}", model.name(), reparam.name),
        model.hilbert_dim(),
        reparam.domain.clone(),
        move |lb: &[T]| state_inner.state_matrix(&state_map(lb)),
    )
    .with_analytic_derivatives(move |lb: &[T]| {
        let tol = Tolerances::default();
        let b = rp.b_matrix(lb, &tol)?;
        let lambda = map(lb);
        let d = inner.derivative_matrices(&lambda, &tol)?;
        Ok(transform_derivatives(&d, &b))
    });
    out.fixed_frame = model.has_fixed_frame();
    out
}

/// Largest entrywise difference between two derivative lists.
pub fn max_derivative_deviation<T: Real>(a: &[HermitianOperator<T>], b: &[HermitianOperator<T>]) -> T {
    a.iter()
        .zip(b)
        .map(|(x, y)| crate::operators::max_abs(&(x.matrix() - y.matrix())))
        .fold(T::zero(), |m, v| m.max(v))
}

/// `‖A − B‖_F` summed over a derivative list.
pub fn derivative_distance<T: Real>(a: &[HermitianOperator<T>], b: &[HermitianOperator<T>]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (x, y)| acc + frobenius(&(x.matrix() - y.matrix())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::zoo;
    use nalgebra::DVector;
    use num_complex::Complex;

    fn classical() -> StatisticalModel<f64> {
        StatisticalModel::new("diag", 2, vec![(0.0, 1.0)], |l: &[f64]| {
            Ok(CMatrix::from_diagonal(&DVector::from_vec(vec![
                Complex::new(l[0], 0.0),
                Complex::new(1.0 - l[0], 0.0),
            ])))
        })
    }

    #[test]
    fn finite_difference_linear_model() {
        let tol = Tolerances::default();
        let pt = classical().evaluate(&[0.3], &tol).unwrap();
        let d = pt.drho[0].matrix();
        assert!((d[(0, 0)].re - 1.0).abs() < 1e-9);
        assert!((d[(1, 1)].re + 1.0).abs() < 1e-9);
    }

    #[test]
    fn phase_generator_derivative() {
        let tol = Tolerances::default();
        let model = zoo::phase_qubit::<f64>();
        let pt = model.evaluate(&[0.0], &tol).unwrap();
        let sz = CMatrix::from_diagonal(&DVector::from_vec(vec![Complex::new(1.0, 0.0), Complex::new(-1.0, 0.0)]));
        let expect = crate::operators::commutator(&sz, pt.rho.matrix()) * Complex::new(0.0, -0.5);
        assert!(frobenius(&(pt.drho[0].matrix() - expect)) < 1e-9);
    }

    #[test]
    fn domain_is_enforced() {
        let tol = Tolerances::default();
        assert!(matches!(classical().evaluate(&[1.5], &tol), Err(QestError::DomainError { index: 0, .. })));
        assert!(classical().evaluate(&[0.1, 0.2], &tol).is_err());
    }

    #[test]
    fn broken_state_fails_finite_differences() {
        let tol = Tolerances::default();
        // valid only exactly at λ = 0.5
        let m = StatisticalModel::new("kink", 2, vec![(0.0, 1.0)], |l: &[f64]| {
            let p = if (l[0] - 0.5).abs() < 1e-15 { 0.5 } else { -0.2 };
            Ok(CMatrix::from_diagonal(&DVector::from_vec(vec![Complex::new(p, 0.0), Complex::new(1.0 - p, 0.0)])))
        });
        assert!(matches!(m.evaluate(&[0.5], &tol), Err(QestError::DerivativeError(_))));
    }

    #[test]
    fn identity_reparametrization() {
        let tol = Tolerances::default();
        let base = classical();
        let re = reparametrize_model(
            &base,
            Reparametrization::linear("id", vec![(0.0, 1.0)], RMatrix::identity(1, 1), vec![0.0]),
        );
        let a = base.evaluate(&[0.4], &tol).unwrap();
        let b = re.evaluate(&[0.4], &tol).unwrap();
        assert!(max_derivative_deviation(&a.drho, &b.drho) < 1e-12);
        assert_eq!(a.rho, b.rho);
    }

    #[test]
    fn singular_jacobian_rejected() {
        let tol = Tolerances::default();
        let re = reparametrize_model(
            &classical(),
            Reparametrization::linear("zero", vec![(0.0, 1.0)], RMatrix::zeros(1, 1), vec![0.3]),
        );
        assert!(matches!(re.evaluate(&[0.4], &tol), Err(QestError::SingularJacobian(_))));
    }
}
