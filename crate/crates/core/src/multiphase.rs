//! Simultaneous estimation of `d` phases with an `N`-photon probe spread over
//! `d + 1` modes, mode 0 being the phase reference.
//!
//! The state lives in the span of the `d + 1` states with all `N` photons in one
//! mode; the phase shift on mode `μ` multiplies its amplitude by `e^{iNλ_μ}`.

use nalgebra::DVector;
use num_complex::Complex;

use crate::bounds::{scalar_sld_bound, WeightMatrix};
use crate::error::{QestError, Result};
use crate::information::qfi_matrices;
use crate::model::StatisticalModel;
use crate::scalar::{CMatrix, Real};
use crate::tolerances::Tolerances;

#[derive(Debug, Clone, PartialEq)]
pub struct MultiphaseProbe<T: Real> {
    pub d: usize,
    pub n_photons: usize,
    pub beta2: T,
    pub alpha2: T,
}

impl<T: Real> MultiphaseProbe<T> {
    /// Probe with reference weight `β²`; the rest is split evenly, `α² = (1 − β²)/d`.
    pub fn new(d: usize, n_photons: usize, beta2: T) -> Result<Self> {
        if d == 0 || n_photons == 0 {
            return Err(QestError::InvalidInput("need at least one phase and one photon".into()));
        }
        if !(beta2 >= T::zero() && beta2 <= T::one()) {
            return Err(QestError::InvalidInput(format!("β² must lie in [0, 1], got {beta2:e}")));
        }
        let alpha2 = (T::one() - beta2) / T::from_count(d);
        Ok(Self { d, n_photons, beta2, alpha2 })
    }

    /// `(β, α, …, α)`.
    pub fn amplitudes(&self) -> Vec<T> {
        let mut a = vec![self.beta2.sqrt()];
        a.extend(std::iter::repeat(self.alpha2.sqrt()).take(self.d));
        a
    }
}

/// `β² = 1/(1 + √d)`.
pub fn optimal_probe<T: Real>(d: usize, n_photons: usize) -> Result<MultiphaseProbe<T>> {
    let beta2 = T::one() / (T::one() + T::from_count(d).sqrt());
    MultiphaseProbe::new(d, n_photons, beta2)
}

fn state_vector<T: Real>(probe: &MultiphaseProbe<T>, lambda: &[T]) -> DVector<Complex<T>> {
    let n = T::from_count(probe.n_photons);
    let amp = probe.amplitudes();
    DVector::from_fn(probe.d + 1, |i, _| {
        if i == 0 {
            Complex::new(amp[0], T::zero())
        } else {
            crate::scalar::polar(amp[i], n * lambda[i - 1])
        }
    })
}

pub fn build_multiphase_model<T: Real>(probe: &MultiphaseProbe<T>) -> StatisticalModel<T> {
    let pi = T::pi();
    let p_state = probe.clone();
    let p_deriv = probe.clone();
    let d = probe.d;
    let name = format!("multiphase:d={},N={}", probe.d, probe.n_photons);
    StatisticalModel::new(name, d + 1, vec![(-pi, pi); d], move |l: &[T]| {
        let psi = state_vector(&p_state, l);
        Ok(&psi * psi.adjoint())
    })
    .with_analytic_derivatives(move |l: &[T]| {
        let psi = state_vector(&p_deriv, l);
        let n = T::from_count(p_deriv.n_photons);
        Ok((0..d)
            .map(|mu| {
                let mut dpsi = DVector::zeros(d + 1);
                dpsi[mu + 1] = psi[mu + 1] * Complex::new(T::zero(), n);
                let a: CMatrix<T> = &dpsi * psi.adjoint();
                &a + a.adjoint()
            })
            .collect())
    })
}

/// `Tr[Q⁻¹]` of the built model at `λ`, computed numerically.
pub fn total_variance_bound<T: Real>(probe: &MultiphaseProbe<T>, lambda: &[T], tol: &Tolerances) -> Result<T> {
    let pt = build_multiphase_model(probe).evaluate(lambda, tol)?;
    let info = qfi_matrices(&pt, tol)?;
    scalar_sld_bound(&info.q, &WeightMatrix::identity(probe.d), tol)
}

/// Closed form `(1 + √d)² d / (4N²)` for the optimal probe.
pub fn optimal_total_variance(d: usize, n_photons: usize) -> f64 {
    let d = d as f64;
    let n = n_photons as f64;
    (1.0 + d.sqrt()).powi(2) * d / (4.0 * n * n)
}

/// Total variance `d³/N²` when the `N` photons are split between `d` separate
/// single-phase interferometers.
pub fn independent_total_variance(d: usize, n_photons: usize) -> f64 {
    let d = d as f64;
    let n = n_photons as f64;
    d * d * d / (n * n)
}
