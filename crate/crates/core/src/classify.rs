//! Four-way classification of a model at a set of sample points: classical,
//! quasi-classical, D-invariant and asymptotically classical.
//!
//! Every verdict is a conjunction over the tested points, never a statement
//! about the whole domain.

use nalgebra::DVector;

use crate::error::{QestError, Result};
use crate::information::{compute_sld, sld_matrices};
use crate::model::{ModelPoint, StatisticalModel};
use crate::operators::{anticommutator_inverse_apply, commutator, eig_symmetric, frobenius};
use crate::scalar::{ci, CMatrix, RMatrix, Real};
use crate::tolerances::Tolerances;

/// Largest residual behind each verdict; a verdict holds when its witness is `≤ τ`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassificationWitnesses<T: Real> {
    /// Relative commutators among `ρ(λᵢ)`, `∂ρ` at the same point and across points.
    pub classical: T,
    /// Relative SLD commutator, or `‖D‖_F/‖Q‖_F` for pure states.
    pub quasi_classical: T,
    /// Distance of `D_ρ(L_μ)` from the SLD span, relative to `‖D_ρ(L_μ)‖ + ‖L_μ‖`.
    pub d_invariant: T,
    /// `‖D‖_F / ‖Q‖_F`.
    pub asymptotically_classical: T,
    /// Relative SLD commutator compressed to the support of ρ.
    pub support_commutator: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassificationReport<T: Real> {
    pub classical: bool,
    pub quasi_classical: bool,
    pub d_invariant: bool,
    pub asymptotically_classical: bool,
    /// ρ was rank deficient at some tested point. Then the SLDs carry arbitrary
    /// components off the support and the quasi-classical verdict depends on
    /// the representative chosen (zero on the kernel block).
    pub rank_deficient: bool,
    /// SLDs commute on the support of ρ. Informational only.
    pub support_commuting: bool,
    /// Commutators between different sample points were included. They are
    /// skipped for models whose matrix frame moves with `λ`.
    pub cross_point_checked: bool,
    pub tau: T,
    pub points: usize,
    pub witnesses: ClassificationWitnesses<T>,
}

fn rel_commutator<T: Real>(a: &CMatrix<T>, b: &CMatrix<T>) -> T {
    let scale = frobenius(a) * frobenius(b);
    if scale == T::zero() {
        return T::zero();
    }
    frobenius(&commutator(a, b)) / scale
}

fn ratio<T: Real>(num: T, den: T) -> T {
    if num == T::zero() {
        T::zero()
    } else if den == T::zero() {
        T::lit(f64::INFINITY)
    } else {
        num / den
    }
}

fn rmat_frobenius<T: Real>(m: &RMatrix<T>) -> T {
    m.iter().fold(T::zero(), |a, v| a + *v * *v).sqrt()
}

/// Per-point part of the classification, without cross-point commutators.
#[derive(Debug, Clone, PartialEq)]
pub struct PointWitnesses<T: Real> {
    pub rank: usize,
    pub witnesses: ClassificationWitnesses<T>,
}

pub fn classify_point<T: Real>(pt: &ModelPoint<T>, tol: &Tolerances) -> Result<PointWitnesses<T>> {
    let rho = &pt.rho;
    let n = rho.dim();
    let cutoff = rho.default_cutoff(tol);
    let rank = rho.rank(cutoff);
    let sld = compute_sld(pt, tol)?;
    let (q, d) = sld_matrices(rho, &sld);
    let ls: Vec<&CMatrix<T>> = sld.operators.iter().map(|l| l.matrix()).collect();
    let k = ls.len();

    let mut classical = T::zero();
    for (mu, dm) in pt.drho.iter().enumerate() {
        classical = classical.max(rel_commutator(rho.matrix(), dm.matrix()));
        for dn in &pt.drho[mu + 1..] {
            classical = classical.max(rel_commutator(dm.matrix(), dn.matrix()));
        }
    }

    // projector onto the support
    let eig = rho.eig();
    let mut proj = CMatrix::zeros(n, n);
    for j in 0..n {
        if eig.eigenvalues[j] > cutoff {
            let v = eig.eigenvectors.column(j);
            proj += &v * v.adjoint();
        }
    }
    let mut sld_comm = T::zero();
    let mut support_comm = T::zero();
    for mu in 0..k {
        for nu in mu + 1..k {
            sld_comm = sld_comm.max(rel_commutator(ls[mu], ls[nu]));
            let c = &proj * commutator(ls[mu], ls[nu]) * &proj;
            support_comm = support_comm.max(ratio(frobenius(&c), frobenius(ls[mu]) * frobenius(ls[nu])));
        }
    }
    let asym = ratio(rmat_frobenius(&d), rmat_frobenius(&q));
    let quasi = if rank == 1 { asym } else { sld_comm };

    // least-squares projection of D_ρ(L_μ) onto the real span of the SLDs
    let gram = RMatrix::from_fn(k, k, |a, b| (ls[a].adjoint() * ls[b]).trace().re);
    let (gv, gu) = eig_symmetric(&gram);
    let gmax = gv.iter().fold(T::zero(), |a, v| a.max(*v));
    let mut dinv = T::zero();
    for l in &ls {
        let b = (rho.matrix() * *l - *l * rho.matrix()) * (-ci::<T>());
        let y = anticommutator_inverse_apply(rho, &b, cutoff, tol)?;
        let rhs = DVector::from_fn(k, |a, _| (ls[a].adjoint() * &y).trace().re);
        let mut coef = DVector::zeros(k);
        for j in 0..k {
            if gv[j] > T::lit(1e-14) * gmax {
                let u = gu.column(j);
                coef += u * (u.dot(&rhs) / gv[j]);
            }
        }
        let mut r = y.clone();
        for (c, lm) in coef.iter().zip(&ls) {
            r -= *lm * crate::scalar::cr(*c);
        }
        dinv = dinv.max(ratio(frobenius(&r), frobenius(&y) + frobenius(*l)));
    }

    Ok(PointWitnesses {
        rank,
        witnesses: ClassificationWitnesses {
            classical,
            quasi_classical: quasi,
            d_invariant: dinv,
            asymptotically_classical: asym,
            support_commutator: support_comm,
        },
    })
}

/// Classifies `model` at `points` (at least three, strictly inside the domain)
/// with threshold `tol.classify_tau`.
pub fn classify<T: Real>(model: &StatisticalModel<T>, points: &[Vec<T>], tol: &Tolerances) -> Result<ClassificationReport<T>> {
    if points.len() < 3 {
        return Err(QestError::InvalidInput(format!("classification needs at least 3 sample points, got {}", points.len())));
    }
    for p in points {
        model.check_domain(p)?;
        for (i, (x, (lo, hi))) in p.iter().zip(model.domain()).enumerate() {
            if !(*x > *lo && *x < *hi) {
                return Err(QestError::InvalidInput(format!("sample coordinate {i} = {:e} is on the domain boundary", x.as_f64())));
            }
        }
    }
    let pts = points.iter().map(|p| model.evaluate(p, tol)).collect::<Result<Vec<_>>>()?;
    let tau = T::lit(tol.classify_tau);
    let mut w = ClassificationWitnesses {
        classical: T::zero(),
        quasi_classical: T::zero(),
        d_invariant: T::zero(),
        asymptotically_classical: T::zero(),
        support_commutator: T::zero(),
    };
    let mut rank_deficient = false;
    for pt in &pts {
        let pw = classify_point(pt, tol)?;
        rank_deficient |= pw.rank < pt.rho.dim();
        let x = pw.witnesses;
        w.classical = w.classical.max(x.classical);
        w.quasi_classical = w.quasi_classical.max(x.quasi_classical);
        w.d_invariant = w.d_invariant.max(x.d_invariant);
        w.asymptotically_classical = w.asymptotically_classical.max(x.asymptotically_classical);
        w.support_commutator = w.support_commutator.max(x.support_commutator);
    }
    let cross = model.has_fixed_frame();
    if cross {
        for (i, a) in pts.iter().enumerate() {
            for b in &pts[i + 1..] {
                w.classical = w.classical.max(rel_commutator(a.rho.matrix(), b.rho.matrix()));
                for db in &b.drho {
                    w.classical = w.classical.max(rel_commutator(a.rho.matrix(), db.matrix()));
                }
                for da in &a.drho {
                    w.classical = w.classical.max(rel_commutator(b.rho.matrix(), da.matrix()));
                }
            }
        }
    }
    Ok(ClassificationReport {
        classical: w.classical <= tau,
        quasi_classical: w.quasi_classical <= tau,
        d_invariant: w.d_invariant <= tau,
        asymptotically_classical: w.asymptotically_classical <= tau,
        rank_deficient,
        support_commuting: w.support_commutator <= tau,
        cross_point_checked: cross,
        tau,
        points: pts.len(),
        witnesses: w,
    })
}

impl<T: Real> ClassificationReport<T> {
    /// The containments between the four classes hold for this report.
    pub fn containments_hold(&self) -> bool {
        let implies = |a: bool, b: bool| !a || b;
        implies(self.classical, self.quasi_classical && self.d_invariant && self.asymptotically_classical)
            && implies(self.quasi_classical, self.asymptotically_classical)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multiphase::{build_multiphase_model, optimal_probe};
    use crate::zoo;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn diagonal_family_is_classical() {
        let r = classify(&zoo::classical_qubit::<f64>(), &[vec![0.2], vec![0.5], vec![0.7]], &tol()).unwrap();
        assert!(r.classical && r.quasi_classical && r.d_invariant && r.asymptotically_classical, "{r:?}");
        assert!(r.cross_point_checked && !r.rank_deficient);
    }

    #[test]
    fn multiphase_is_quasi_classical() {
        let m = build_multiphase_model(&optimal_probe::<f64>(3, 2).unwrap());
        let pts = vec![vec![0.1, 0.2, 0.3], vec![-0.4, 0.5, 1.0], vec![0.0, -1.0, 2.0]];
        let r = classify(&m, &pts, &tol()).unwrap();
        assert!(r.quasi_classical && r.asymptotically_classical && !r.classical, "{r:?}");
        assert!(r.rank_deficient && r.containments_hold());
    }

    #[test]
    fn tomography_is_d_invariant() {
        let pts = vec![vec![0.2, -0.1, 0.3], vec![0.0, 0.4, 0.1], vec![-0.3, 0.2, -0.2]];
        let r = classify(&zoo::qubit_tomography::<f64>(), &pts, &tol()).unwrap();
        assert!(r.d_invariant && !r.asymptotically_classical && !r.quasi_classical && !r.classical, "{r:?}");
    }

    #[test]
    fn pure_qubit_rotations_are_not_weakly_commuting() {
        let pts = vec![vec![0.1, 0.2], vec![-0.3, 0.4], vec![0.5, -0.1]];
        let r = classify(&zoo::pure_qubit_xy::<f64>(), &pts, &tol()).unwrap();
        assert!(!r.asymptotically_classical && !r.quasi_classical && r.containments_hold(), "{r:?}");
    }

    #[test]
    fn needs_three_interior_points() {
        let m = zoo::classical_qubit::<f64>();
        assert!(classify(&m, &[vec![0.2], vec![0.5]], &tol()).is_err());
        assert!(classify(&m, &[vec![0.0], vec![0.5], vec![0.7]], &tol()).is_err());
    }
}
