//! Dense Hermitian linear algebra.
//!
//! Every matrix function (square roots, pseudo-inverses, Lyapunov-type solves)
//! goes through one Hermitian eigendecomposition. Dimensions here are small
//! (tens of rows), so the eigenbasis route is used throughout.

use nalgebra::{ComplexField, DMatrix, DVector};
use num_complex::Complex;

use crate::error::{QestError, Result};
use crate::scalar::{cr, CMatrix, RMatrix, RVector, Real};
use crate::tolerances::Tolerances;

/// A validated Hermitian matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator<T: Real> {
    m: CMatrix<T>,
}

impl<T: Real> HermitianOperator<T> {
    /// Validates Hermiticity against `tol` (relative to `1 + max|a_ij|`) and
    /// stores the exactly symmetrized matrix `(A + A†)/2`.
    pub fn with_tolerance(m: CMatrix<T>, tol: f64) -> Result<Self> {
        if !m.is_square() {
            return Err(QestError::InvalidInput(format!(
                "expected a square matrix, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let asym = hermitian_asymmetry(&m);
        let scale = T::one() + max_abs(&m);
        if !(asym <= T::lit(tol) * scale) {
            return Err(QestError::NonHermitianInput {
                asymmetry: asym.as_f64(),
                tolerance: tol * scale.as_f64(),
            });
        }
        Ok(Self { m: hermitian_part(&m) })
    }

    pub fn new(m: CMatrix<T>) -> Result<Self> {
        Self::with_tolerance(m, Tolerances::default().hermiticity)
    }

    /// Symmetrizes without checking. For matrices Hermitian by construction.
    pub fn from_hermitian_part(m: &CMatrix<T>) -> Self {
        Self { m: hermitian_part(m) }
    }

    pub fn from_real(m: &RMatrix<T>) -> Result<Self> {
        Self::new(m.map(cr))
    }

    pub fn identity(n: usize) -> Self {
        Self { m: CMatrix::identity(n, n) }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &CMatrix<T> {
        &self.m
    }

    pub fn into_matrix(self) -> CMatrix<T> {
        self.m
    }

    pub fn eig(&self) -> EigDecomposition<T> {
        eig_unchecked(&self.m)
    }

    /// Tr[A], which is real for Hermitian A.
    pub fn trace(&self) -> T {
        self.m.trace().re
    }
}

/// Eigenvalues in ascending order and the matching unitary of eigenvectors.
#[derive(Debug, Clone, PartialEq)]
pub struct EigDecomposition<T: Real> {
    pub eigenvalues: RVector<T>,
    pub eigenvectors: CMatrix<T>,
}

impl<T: Real> EigDecomposition<T> {
    /// `U f(diag(p)) U†`.
    pub fn map_eigenvalues(&self, f: impl Fn(T) -> T) -> CMatrix<T> {
        let u = &self.eigenvectors;
        let mut scaled = u.clone();
        for (j, p) in self.eigenvalues.iter().enumerate() {
            let fp = cr(f(*p));
            scaled.column_mut(j).iter_mut().for_each(|z| *z *= fp);
        }
        scaled * u.adjoint()
    }

    pub fn reconstruct(&self) -> CMatrix<T> {
        self.map_eigenvalues(|p| p)
    }

    pub fn max_eigenvalue(&self) -> T {
        self.eigenvalues[self.eigenvalues.len() - 1]
    }

    pub fn min_eigenvalue(&self) -> T {
        self.eigenvalues[0]
    }

    /// Expresses `b` in the eigenbasis: `U† B U`.
    pub fn to_eigenbasis(&self, b: &CMatrix<T>) -> CMatrix<T> {
        self.eigenvectors.adjoint() * b * &self.eigenvectors
    }

    pub fn from_eigenbasis(&self, b: &CMatrix<T>) -> CMatrix<T> {
        &self.eigenvectors * b * self.eigenvectors.adjoint()
    }
}

/// A validated quantum state: Hermitian, unit trace, positive semidefinite.
///
/// The eigendecomposition computed during validation is kept, since nearly
/// every downstream operation works in the eigenbasis of ρ.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix<T: Real> {
    op: HermitianOperator<T>,
    eig: EigDecomposition<T>,
    /// Smallest nonzero eigenvalue when the support is known exactly.
    support_floor: Option<T>,
}

impl<T: Real> DensityMatrix<T> {
    pub fn with_tolerances(m: CMatrix<T>, tol: &Tolerances) -> Result<Self> {
        let op = HermitianOperator::with_tolerance(m, tol.hermiticity)?;
        let tr = op.trace();
        if !((tr - T::one()).abs() <= T::lit(tol.trace)) {
            return Err(QestError::InvalidState(format!("trace {} differs from 1", tr.as_f64())));
        }
        let eig = op.eig();
        let min = eig.min_eigenvalue();
        if !(min >= -T::lit(tol.psd)) {
            return Err(QestError::InvalidState(format!(
                "smallest eigenvalue {:.3e} is negative",
                min.as_f64()
            )));
        }
        Ok(Self { op, eig, support_floor: None })
    }

    /// `ρ = F F†` from a square-root factor `F` (`n × r`).
    ///
    /// The spectrum comes from the singular values of `F`, which resolves
    /// eigenvalues far below what diagonalizing `ρ` itself can, and the support
    /// is known exactly.
    pub fn from_factor(f: &CMatrix<T>, tol: &Tolerances) -> Result<Self> {
        let n = f.nrows();
        if f.ncols() == 0 || n == 0 {
            return Err(QestError::InvalidState("empty state factor".into()));
        }
        let m = f * f.adjoint();
        let op = HermitianOperator::from_hermitian_part(&m);
        let tr = op.trace();
        if !((tr - T::one()).abs() <= T::lit(tol.trace)) {
            return Err(QestError::InvalidState(format!("trace {} differs from 1", tr.as_f64())));
        }
        let svd = f.clone().svd(true, false);
        let u = svd.u.expect("left singular vectors requested");
        let sv = svd.singular_values;
        let top = sv.iter().fold(T::zero(), |a, v| a.max(*v));
        let keep: Vec<usize> = (0..sv.len()).filter(|&k| sv[k] > T::lit(1e-14) * top).collect();
        let r = keep.len();
        let support = CMatrix::from_fn(n, r, |i, j| u[(i, keep[j])]);
        // orthonormal complement from the projector onto the kernel
        let proj = CMatrix::identity(n, n) - &support * support.adjoint();
        let pe = eig_hermitian(&hermitian_part(&proj))?;
        let mut pairs: Vec<(T, DVector<Complex<T>>)> = keep.iter().map(|&k| (sv[k] * sv[k], u.column(k).into_owned())).collect();
        for j in (0..n).rev().take(n - r) {
            pairs.push((T::zero(), pe.eigenvectors.column(j).into_owned()));
        }
        pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
        let eigenvalues = RVector::from_iterator(n, pairs.iter().map(|p| p.0));
        let mut eigenvectors = CMatrix::zeros(n, n);
        for (j, p) in pairs.iter().enumerate() {
            eigenvectors.set_column(j, &p.1);
        }
        let support_floor = keep.iter().map(|&k| sv[k] * sv[k]).fold(None, |a: Option<T>, v| Some(a.map_or(v, |x| x.min(v))));
        Ok(Self { op, eig: EigDecomposition { eigenvalues, eigenvectors }, support_floor })
    }

    pub fn new(m: CMatrix<T>) -> Result<Self> {
        Self::with_tolerances(m, &Tolerances::default())
    }

    /// The pure state `|ψ⟩⟨ψ|` for a (not necessarily normalized) vector.
    pub fn pure(psi: &DVector<Complex<T>>) -> Result<Self> {
        let norm2 = psi.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr());
        if !(norm2 > T::zero()) {
            return Err(QestError::InvalidState("zero state vector".into()));
        }
        let m = psi * psi.adjoint() / cr(norm2);
        Self::new(m)
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub fn matrix(&self) -> &CMatrix<T> {
        self.op.matrix()
    }

    pub fn operator(&self) -> &HermitianOperator<T> {
        &self.op
    }

    pub fn eig(&self) -> &EigDecomposition<T> {
        &self.eig
    }

    /// Default cutoff for `p_i + p_j` divisions: `cutoff_rel · p_max`, lowered
    /// below the support when the support is known exactly.
    pub fn default_cutoff(&self, tol: &Tolerances) -> T {
        let rel = T::lit(tol.cutoff_rel) * self.eig.max_eigenvalue();
        match self.support_floor {
            Some(floor) => rel.min(floor * T::lit(0.5)),
            None => rel,
        }
    }

    /// Number of eigenvalues above `cutoff`.
    pub fn rank(&self, cutoff: T) -> usize {
        self.eig.eigenvalues.iter().filter(|p| **p > cutoff).count()
    }

    /// `√ρ` with eigenvalues at or below `cutoff` set to zero.
    pub fn sqrt(&self, cutoff: T) -> CMatrix<T> {
        self.eig.map_eigenvalues(|p| if p > cutoff { p.sqrt() } else { T::zero() })
    }

    /// Moore-Penrose pseudo-inverse on the support.
    pub fn pinv(&self, cutoff: T) -> CMatrix<T> {
        self.eig.map_eigenvalues(|p| if p > cutoff { T::one() / p } else { T::zero() })
    }
}

pub fn max_abs<T: Real>(m: &CMatrix<T>) -> T {
    m.iter().fold(T::zero(), |acc, z| acc.max(z.modulus()))
}

/// `max |a_ij − conj(a_ji)|`.
pub fn hermitian_asymmetry<T: Real>(m: &CMatrix<T>) -> T {
    let n = m.nrows();
    let mut worst = T::zero();
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).modulus());
        }
    }
    worst
}

pub fn hermitian_part<T: Real>(m: &CMatrix<T>) -> CMatrix<T> {
    (m + m.adjoint()) * cr(T::lit(0.5))
}

pub fn frobenius<T: Real>(m: &CMatrix<T>) -> T {
    m.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr()).sqrt()
}

pub fn commutator<T: Real>(a: &CMatrix<T>, b: &CMatrix<T>) -> CMatrix<T> {
    a * b - b * a
}

pub fn anticommutator<T: Real>(a: &CMatrix<T>, b: &CMatrix<T>) -> CMatrix<T> {
    a * b + b * a
}

/// Tr[A B] without forming the product.
pub fn trace_product<T: Real>(a: &CMatrix<T>, b: &CMatrix<T>) -> Complex<T> {
    let n = a.nrows();
    let mut acc = Complex::new(T::zero(), T::zero());
    for i in 0..n {
        for k in 0..a.ncols() {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

fn eig_unchecked<T: Real>(m: &CMatrix<T>) -> EigDecomposition<T> {
    let n = m.nrows();
    let se = m.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        se.eigenvalues[a]
            .partial_cmp(&se.eigenvalues[b])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let eigenvalues = RVector::from_iterator(n, order.iter().map(|&k| se.eigenvalues[k]));
    let mut eigenvectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        eigenvectors.set_column(dst, &se.eigenvectors.column(src));
    }
    EigDecomposition { eigenvalues, eigenvectors }
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending.
pub fn eig_hermitian<T: Real>(a: &CMatrix<T>) -> Result<EigDecomposition<T>> {
    let op = HermitianOperator::new(a.clone())?;
    Ok(op.eig())
}

/// Real symmetric eigendecomposition, eigenvalues ascending.
pub fn eig_symmetric<T: Real>(a: &RMatrix<T>) -> (RVector<T>, RMatrix<T>) {
    let n = a.nrows();
    if n == 0 {
        return (RVector::zeros(0), RMatrix::zeros(0, 0));
    }
    let sym = (a + a.transpose()) * T::lit(0.5);
    let se = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| {
        se.eigenvalues[x]
            .partial_cmp(&se.eigenvalues[y])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let vals = RVector::from_iterator(n, order.iter().map(|&k| se.eigenvalues[k]));
    let mut vecs = RMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vecs.set_column(dst, &se.eigenvectors.column(src));
    }
    (vals, vecs)
}

/// `V f(Λ) Vᵀ` for a real symmetric matrix.
pub fn symmetric_map<T: Real>(a: &RMatrix<T>, f: impl Fn(T) -> T) -> RMatrix<T> {
    let (vals, vecs) = eig_symmetric(a);
    let mut scaled = vecs.clone();
    for (j, v) in vals.iter().enumerate() {
        let fv = f(*v);
        scaled.column_mut(j).iter_mut().for_each(|x| *x *= fv);
    }
    scaled * vecs.transpose()
}

/// Checks that a real symmetric information matrix is invertible.
pub fn check_invertible<T: Real>(q: &RMatrix<T>, condition: f64) -> Result<(RVector<T>, RMatrix<T>)> {
    let (vals, vecs) = eig_symmetric(q);
    let n = vals.len();
    if n == 0 {
        return Err(QestError::InvalidInput("empty information matrix".into()));
    }
    let largest = vals[n - 1];
    let smallest = vals[0];
    if !(largest > T::zero()) || !(smallest > T::lit(condition) * largest) {
        let ratio = if largest > T::zero() { (smallest / largest).as_f64() } else { 0.0 };
        return Err(QestError::SingularQfi(ratio));
    }
    Ok((vals, vecs))
}

/// Inverse of a positive definite matrix, rejecting near-singular input.
pub fn spd_inverse<T: Real>(q: &RMatrix<T>, condition: f64) -> Result<RMatrix<T>> {
    let (vals, vecs) = check_invertible(q, condition)?;
    let mut scaled = vecs.clone();
    for (j, v) in vals.iter().enumerate() {
        let inv = T::one() / *v;
        scaled.column_mut(j).iter_mut().for_each(|x| *x *= inv);
    }
    let inv = scaled * vecs.transpose();
    Ok((&inv + inv.transpose()) * T::lit(0.5))
}

/// `Q^{-1/2}` of a positive definite matrix.
pub fn spd_inv_sqrt<T: Real>(q: &RMatrix<T>, condition: f64) -> Result<RMatrix<T>> {
    check_invertible(q, condition)?;
    Ok(symmetric_map(q, |v| T::one() / v.sqrt()))
}

/// Principal square root of a PSD matrix (negative rounding clipped to zero).
pub fn psd_sqrt<T: Real>(q: &RMatrix<T>) -> RMatrix<T> {
    symmetric_map(q, |v| v.max(T::zero()).sqrt())
}

/// Splits an eigenbasis right-hand side into the entries solved and the weight
/// that falls on blocks with `p_i + p_j ≤ cutoff`.
fn anticommutator_solve_in_eigenbasis<T: Real>(
    eig: &EigDecomposition<T>,
    b: &CMatrix<T>,
    cutoff: T,
    scale: T,
    rhs_tol: f64,
) -> Result<CMatrix<T>> {
    let bt = eig.to_eigenbasis(b);
    let n = bt.nrows();
    let p = &eig.eigenvalues;
    let mut xt = CMatrix::zeros(n, n);
    let mut dropped = T::zero();
    for i in 0..n {
        for j in 0..n {
            let s = p[i] + p[j];
            if s > cutoff {
                xt[(i, j)] = bt[(i, j)] * cr(scale / s);
            } else {
                dropped += bt[(i, j)].norm_sqr();
            }
        }
    }
    let bnorm = frobenius(b);
    if dropped.sqrt() > T::lit(rhs_tol) * bnorm {
        return Err(QestError::InconsistentRhs { weight: dropped.sqrt().as_f64() });
    }
    Ok(eig.from_eigenbasis(&xt))
}

/// Solves `(Xρ + ρX)/2 = B` for Hermitian `X`.
///
/// In the eigenbasis of ρ, `X_ij = 2 B_ij / (p_i + p_j)` where `p_i + p_j > cutoff`
/// and zero elsewhere. Fails if `B` has weight on the unsolvable blocks.
pub fn lyapunov_solve<T: Real>(
    rho: &DensityMatrix<T>,
    b: &HermitianOperator<T>,
    cutoff: T,
    tol: &Tolerances,
) -> Result<HermitianOperator<T>> {
    let x = anticommutator_solve_in_eigenbasis(rho.eig(), b.matrix(), cutoff, T::lit(2.0), tol.rhs_consistency)?;
    Ok(HermitianOperator::from_hermitian_part(&x))
}

/// Solves `ρY + Yρ = B` for a general (possibly non-Hermitian) `B`:
/// `Y_ij = B_ij / (p_i + p_j)` above the cutoff.
pub fn anticommutator_inverse_apply<T: Real>(
    rho: &DensityMatrix<T>,
    b: &CMatrix<T>,
    cutoff: T,
    tol: &Tolerances,
) -> Result<CMatrix<T>> {
    anticommutator_solve_in_eigenbasis(rho.eig(), b, cutoff, T::one(), tol.rhs_consistency)
}

/// Sum of singular values.
pub fn trace_norm<T: Real>(a: &CMatrix<T>) -> T {
    if a.is_empty() {
        return T::zero();
    }
    a.clone().svd(false, false).singular_values.sum()
}

pub fn trace_norm_real<T: Real>(a: &RMatrix<T>) -> T {
    if a.is_empty() {
        return T::zero();
    }
    a.clone().svd(false, false).singular_values.sum()
}

/// `[[Re A, −Im A], [Im A, Re A]]`: a real symmetric matrix of twice the
/// dimension whose spectrum is that of `A` with every eigenvalue doubled.
pub fn complex_to_real_embed<T: Real>(a: &CMatrix<T>) -> RMatrix<T> {
    let (r, c) = a.shape();
    let mut out = RMatrix::zeros(2 * r, 2 * c);
    for i in 0..r {
        for j in 0..c {
            let z = a[(i, j)];
            out[(i, j)] = z.re;
            out[(i + r, j + c)] = z.re;
            out[(i, j + c)] = -z.im;
            out[(i + r, j)] = z.im;
        }
    }
    out
}

/// Inverse of [`complex_to_real_embed`] (reads the left column blocks).
pub fn real_to_complex_unembed<T: Real>(m: &RMatrix<T>) -> CMatrix<T> {
    let r = m.nrows() / 2;
    let c = m.ncols() / 2;
    DMatrix::from_fn(r, c, |i, j| Complex::new(m[(i, j)], m[(i + r, j)]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_density_matrix, random_hermitian};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    #[test]
    fn eig_trivial_cases() {
        let e = eig_hermitian(&CMatrix::<f64>::identity(2, 2)).unwrap();
        assert_eq!(e.eigenvalues.as_slice(), &[1.0, 1.0]);
        let z = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)]);
        let e = eig_hermitian(&z).unwrap();
        assert!((e.eigenvalues[0] + 1.0).abs() < 1e-15 && (e.eigenvalues[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn eig_rejects_non_hermitian() {
        let m = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        assert!(matches!(eig_hermitian(&m), Err(QestError::NonHermitianInput { .. })));
    }

    #[test]
    fn eig_random_reconstruction_and_unitarity() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in [1, 3, 5, 8] {
            let a = random_hermitian::<f64, _>(n, &mut rng);
            let e = eig_hermitian(&a).unwrap();
            let resid = frobenius(&(e.reconstruct() - &a));
            assert!(resid <= 1e-10 * frobenius(&a), "n={n} resid={resid}");
            let uu = e.eigenvectors.adjoint() * &e.eigenvectors - CMatrix::identity(n, n);
            assert!(frobenius(&uu) <= 1e-12 * n as f64);
            for k in 1..n {
                assert!(e.eigenvalues[k - 1] <= e.eigenvalues[k]);
            }
        }
    }

    #[test]
    fn lyapunov_diagonal_solve() {
        let p = 0.3;
        let rho = DensityMatrix::new(CMatrix::from_diagonal(&DVector::from_vec(vec![c(p, 0.0), c(1.0 - p, 0.0)]))).unwrap();
        let b = HermitianOperator::new(CMatrix::from_diagonal(&DVector::from_vec(vec![c(1.0, 0.0), c(-1.0, 0.0)]))).unwrap();
        let tol = Tolerances::default();
        let x = lyapunov_solve(&rho, &b, rho.default_cutoff(&tol), &tol).unwrap();
        assert!((x.matrix()[(0, 0)].re - 1.0 / p).abs() < 1e-12);
        assert!((x.matrix()[(1, 1)].re + 1.0 / (1.0 - p)).abs() < 1e-12);
        assert!(x.matrix()[(0, 1)].modulus() < 1e-14);
    }

    #[test]
    fn lyapunov_pure_projector() {
        let rho = DensityMatrix::new(CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)])).unwrap();
        let bm = CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
        let b = HermitianOperator::new(bm.clone()).unwrap();
        let tol = Tolerances::default();
        let x = lyapunov_solve(&rho, &b, rho.default_cutoff(&tol), &tol).unwrap();
        assert!(frobenius(&(x.matrix() - bm * c(2.0, 0.0))) < 1e-14);
    }

    #[test]
    fn lyapunov_rejects_unsupported_rhs() {
        let rho = DensityMatrix::new(CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)])).unwrap();
        let b = HermitianOperator::new(CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)])).unwrap();
        let tol = Tolerances::default();
        assert!(matches!(
            lyapunov_solve(&rho, &b, rho.default_cutoff(&tol), &tol),
            Err(QestError::InconsistentRhs { .. })
        ));
    }

    #[test]
    fn lyapunov_random_substitution() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let tol = Tolerances::default();
        let rho = random_density_matrix::<f64, _>(4, &mut rng);
        let b = HermitianOperator::new(random_hermitian(4, &mut rng)).unwrap();
        let x = lyapunov_solve(&rho, &b, rho.default_cutoff(&tol), &tol).unwrap();
        let lhs = (x.matrix() * rho.matrix() + rho.matrix() * x.matrix()) * c(0.5, 0.0);
        assert!(frobenius(&(lhs - b.matrix())) <= 1e-10);
    }

    #[test]
    fn anticommutator_inverse_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let tol = Tolerances::default();
        let rho = random_density_matrix::<f64, _>(3, &mut rng);
        let cut = rho.default_cutoff(&tol);
        let y = anticommutator_inverse_apply(&rho, &(rho.matrix() * c(2.0, 0.0)), cut, &tol).unwrap();
        assert!(frobenius(&(y - CMatrix::identity(3, 3))) < 1e-10);

        // X diagonal in ρ's eigenbasis commutes with ρ.
        let x = rho.eig().map_eigenvalues(|p| p * p - 1.0);
        let b = commutator(rho.matrix(), &x) * c(0.0, -1.0);
        let y = anticommutator_inverse_apply(&rho, &b, cut, &tol).unwrap();
        assert!(frobenius(&y) < 1e-12);

        // non-Hermitian right-hand side
        let b = random_hermitian::<f64, _>(3, &mut rng) + random_hermitian::<f64, _>(3, &mut rng) * c(0.0, 0.7)
            + CMatrix::from_fn(3, 3, |i, j| c((i * 3 + j) as f64 * 0.1, 0.0));
        let y = anticommutator_inverse_apply(&rho, &b, cut, &tol).unwrap();
        assert!(frobenius(&(rho.matrix() * &y + &y * rho.matrix() - b)) <= 1e-10);
    }

    #[test]
    fn trace_norm_cases() {
        let a = CMatrix::from_diagonal(&DVector::from_vec(vec![c(3.0, 0.0), c(-4.0, 0.0)]));
        assert!((trace_norm(&a) - 7.0).abs() < 1e-14);
        let u = DVector::from_vec(vec![c(0.6, 0.0), c(0.0, 0.8)]);
        let v = DVector::from_vec(vec![c(0.0, 1.0), c(0.0, 0.0)]);
        assert!((trace_norm(&(u * v.adjoint())) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn embedding_of_pauli_y() {
        let y = CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)]);
        let (vals, _) = eig_symmetric(&complex_to_real_embed(&y));
        let expect = [-1.0, -1.0, 1.0, 1.0];
        for (v, e) in vals.iter().zip(expect) {
            assert!((v - e).abs() < 1e-14);
        }
        let real = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(2.0, 0.0), c(2.0, 0.0), c(5.0, 0.0)]);
        let emb = complex_to_real_embed(&real);
        assert_eq!(emb[(0, 1)], 2.0);
        assert_eq!(emb[(2, 3)], 2.0);
        assert_eq!(emb[(0, 2)], 0.0);
        assert_eq!(real_to_complex_unembed(&emb), real);
    }

    #[test]
    fn works_in_single_precision() {
        let rho = DensityMatrix::<f32>::new(CMatrix::from_diagonal(&DVector::from_vec(vec![
            Complex::new(0.25f32, 0.0),
            Complex::new(0.75, 0.0),
        ])))
        .unwrap();
        let b = HermitianOperator::new(CMatrix::from_diagonal(&DVector::from_vec(vec![
            Complex::new(1.0f32, 0.0),
            Complex::new(-1.0, 0.0),
        ])))
        .unwrap();
        let tol = Tolerances::default();
        let x = lyapunov_solve(&rho, &b, rho.default_cutoff(&tol), &tol).unwrap();
        assert!((x.matrix()[(0, 0)].re - 4.0).abs() < 1e-5);
    }
}
