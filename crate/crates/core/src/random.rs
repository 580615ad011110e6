//! Seeded random states, local models, measurements and weights.
//!
//! Used by the property suites and available to callers who want to probe the
//! bound hierarchy on generic models.

use nalgebra::DVector;
use num_complex::Complex;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::bounds::WeightMatrix;
use crate::information::Povm;
use crate::model::{ModelPoint, StatisticalModel};
use crate::operators::{DensityMatrix, HermitianOperator};
use crate::scalar::{cr, CMatrix, RMatrix, Real};
use crate::tolerances::Tolerances;

fn normal<T: Real, R: Rng + ?Sized>(rng: &mut R) -> T {
    let x: f64 = rng.sample(StandardNormal);
    T::lit(x)
}

/// Complex Ginibre matrix with i.i.d. standard normal real and imaginary parts.
pub fn ginibre<T: Real, R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix<T> {
    let mut m = CMatrix::zeros(rows, cols);
    for j in 0..cols {
        for i in 0..rows {
            m[(i, j)] = Complex::new(normal(rng), normal(rng));
        }
    }
    m
}

pub fn random_hermitian<T: Real, R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix<T> {
    let g = ginibre::<T, R>(n, n, rng);
    (&g + g.adjoint()) * cr(T::lit(0.5))
}

/// Traceless Hermitian matrix with unit Frobenius norm.
pub fn random_traceless_hermitian<T: Real, R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix<T> {
    let mut h = random_hermitian::<T, R>(n, rng);
    let shift = h.trace() / cr(T::from_count(n));
    for i in 0..n {
        h[(i, i)] -= shift;
    }
    let norm = crate::operators::frobenius(&h);
    h / cr(norm)
}

/// Full-rank state `(1−ε) G G†/Tr + ε I/n` with `ε = 0.05`, keeping the
/// spectrum away from zero.
pub fn random_density_matrix<T: Real, R: Rng + ?Sized>(n: usize, rng: &mut R) -> DensityMatrix<T> {
    let g = ginibre::<T, R>(n, n, rng);
    let gg = &g * g.adjoint();
    let tr = gg.trace().re;
    let eps = T::lit(0.05);
    let m = gg * cr((T::one() - eps) / tr) + CMatrix::identity(n, n) * cr(eps / T::from_count(n));
    DensityMatrix::new(m).expect("random state is valid")
}

/// Random pure state.
pub fn random_pure_state<T: Real, R: Rng + ?Sized>(n: usize, rng: &mut R) -> DensityMatrix<T> {
    let psi: DVector<Complex<T>> = ginibre::<T, R>(n, 1, rng).column(0).into_owned();
    DensityMatrix::pure(&psi).expect("random pure state is valid")
}

/// A generic full-rank local model: a random state with `d` random traceless
/// derivative directions (the affine family `ρ₀ + Σ λ_μ Δ_μ` at `λ = 0`).
pub fn random_model_point<T: Real, R: Rng + ?Sized>(n: usize, d: usize, rng: &mut R) -> ModelPoint<T> {
    let rho = random_density_matrix::<T, R>(n, rng);
    let drho = (0..d)
        .map(|_| {
            let h = random_traceless_hermitian::<T, R>(n, rng) * cr(T::lit(0.3));
            HermitianOperator::from_hermitian_part(&h)
        })
        .collect();
    ModelPoint::new(vec![T::zero(); d], rho, drho, &Tolerances::default()).expect("random model point is valid")
}

/// The affine family `ρ₀ + Σ λ_μ Δ_μ` of [`random_model_point`] as a model, on a
/// box small enough to keep every state positive definite.
pub fn random_affine_model<T: Real, R: Rng + ?Sized>(n: usize, d: usize, rng: &mut R) -> StatisticalModel<T> {
    let pt = random_model_point::<T, R>(n, d, rng);
    let rho0 = pt.rho.matrix().clone();
    let dirs: Vec<CMatrix<T>> = pt.drho.iter().map(|h| h.matrix().clone()).collect();
    let spread = dirs.iter().fold(T::zero(), |a, h| a + crate::operators::frobenius(h));
    let b = T::lit(0.5) * pt.rho.eig().min_eigenvalue() / spread;
    let dirs2 = dirs.clone();
    StatisticalModel::new(format!("random-affine:n={n},d={d}"), n, vec![(-b, b); d], move |l: &[T]| {
        let mut m = rho0.clone();
        for (h, x) in dirs.iter().zip(l) {
            m += h * cr(*x);
        }
        Ok(m)
    })
    .with_analytic_derivatives(move |_| Ok(dirs2.clone()))
}

/// Random rank-one POVM with `k ≥ n` outcomes:
/// `Π_k = S^{-1/2} v_k v_k† S^{-1/2}` with `S = Σ v_k v_k†`.
pub fn random_povm<T: Real, R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> Povm<T> {
    assert!(k >= n, "need at least as many outcomes as the dimension");
    let vs: Vec<CMatrix<T>> = (0..k).map(|_| ginibre::<T, R>(n, 1, rng)).collect();
    let s = vs.iter().fold(CMatrix::zeros(n, n), |acc, v| acc + v * v.adjoint());
    let s_op = HermitianOperator::from_hermitian_part(&s);
    let inv_sqrt = s_op.eig().map_eigenvalues(|p| T::one() / p.sqrt());
    let elements = vs
        .iter()
        .map(|v| {
            let w = &inv_sqrt * v;
            w.clone() * w.adjoint()
        })
        .collect();
    Povm::new(elements, &Tolerances::default()).expect("random POVM is valid")
}

/// Random positive definite weight `A Aᵀ/d + 0.1 I`.
pub fn random_weight<T: Real, R: Rng + ?Sized>(d: usize, rng: &mut R) -> WeightMatrix<T> {
    let a = RMatrix::from_fn(d, d, |_, _| normal::<T, R>(rng));
    let w = &a * a.transpose() / T::from_count(d) + RMatrix::identity(d, d) * T::lit(0.1);
    WeightMatrix::new(w).expect("random weight is positive definite")
}
