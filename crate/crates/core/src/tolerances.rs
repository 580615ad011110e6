//! Central tolerance record.
//!
//! Every numerical threshold used by the library lives here so a run is fully
//! reproducible from `(config, Tolerances)`. Values are stored as `f64` and
//! converted to the working scalar at the point of use.

use crate::error::{QestError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Tolerances {
    /// Allowed entrywise asymmetry of Hermitian inputs, relative to `1 + max|a_ij|`.
    pub hermiticity: f64,
    /// |Tr ρ − 1| for density matrices.
    pub trace: f64,
    /// Most negative eigenvalue accepted for PSD objects.
    pub psd: f64,
    /// Cutoff for `p_i + p_j` divisions, relative to the largest eigenvalue of ρ.
    pub cutoff_rel: f64,
    /// Weight of a right-hand side outside the solvable blocks, relative to its norm.
    pub rhs_consistency: f64,
    /// |Tr ∂ρ| for derivative matrices.
    pub drho_trace: f64,
    /// Base finite-difference step `h0`.
    pub fd_step: f64,
    /// Minimum |det B| of a reparametrization.
    pub jacobian_det: f64,
    /// Smallest/largest eigenvalue ratio below which an information matrix is singular.
    pub qfi_condition: f64,
    /// Probability floor in Fisher-information sums.
    pub prob_floor: f64,
    /// Derivative magnitude that makes a zero-probability outcome singular.
    pub singular_outcome_grad: f64,
    /// ‖Σ Π_k − I‖_F for POVMs.
    pub povm_completeness: f64,
    /// Smallest eigenvalue of a weight matrix.
    pub weight_pd: f64,
    /// Interior-point stopping tolerance (relative gap and infeasibilities).
    pub sdp_tol: f64,
    pub sdp_max_iter: usize,
    /// Gap above which a non-optimal SDP exit is reported as a failure.
    pub sdp_fail_gap: f64,
    /// Eigenvalue cutoff for √ρ in the Holevo program.
    pub holevo_sqrt_cutoff: f64,
    /// Classification threshold τ.
    pub classify_tau: f64,
    /// Gram eigenvalues below this (relative) are dropped when orthonormalizing scene bases.
    pub gram_drop: f64,
    /// Allowed Hermite-Gauss tail probability.
    pub hg_tail: f64,
    /// Relative change that stops direct-imaging grid refinement.
    pub grid_convergence: f64,
    pub grid_max_refinements: usize,
    /// MLE stops when ‖score‖_∞ ≤ `mle_grad · M`.
    pub mle_grad: f64,
    pub mle_max_iter: usize,
    pub mle_starts: usize,
    /// Multi-start count for the most-informative search.
    pub mi_starts: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            hermiticity: 1e-12,
            trace: 1e-10,
            psd: 1e-10,
            cutoff_rel: 1e-12,
            rhs_consistency: 1e-8,
            drho_trace: 1e-8,
            fd_step: 1e-5,
            jacobian_det: 1e-12,
            qfi_condition: 1e-10,
            prob_floor: 1e-12,
            singular_outcome_grad: 1e-6,
            povm_completeness: 1e-9,
            weight_pd: 1e-12,
            sdp_tol: 1e-10,
            sdp_max_iter: 200,
            sdp_fail_gap: 1e-5,
            holevo_sqrt_cutoff: 1e-12,
            classify_tau: 1e-8,
            gram_drop: 1e-10,
            hg_tail: 1e-10,
            grid_convergence: 1e-8,
            grid_max_refinements: 6,
            mle_grad: 1e-9,
            mle_max_iter: 500,
            mle_starts: 5,
            mi_starts: 32,
        }
    }
}

macro_rules! tolerance_keys {
    ($($field:ident : $kind:ident),* $(,)?) => {
        impl Tolerances {
            /// Field names accepted by [`Tolerances::set`].
            pub const KEYS: &'static [&'static str] = &[$(stringify!($field)),*];

            /// Overrides one field from its textual value (`KEY=VAL` overrides).
            pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
                match key {
                    $(stringify!($field) => {
                        self.$field = tolerance_keys!(@parse $kind, key, value);
                        Ok(())
                    })*
                    _ => Err(QestError::InvalidInput(format!("unknown tolerance key `{key}`"))),
                }
            }

            /// Canonical `key=value` listing, stable across runs (used for hashing).
            pub fn entries(&self) -> Vec<(&'static str, String)> {
                vec![$((stringify!($field), format!("{:?}", self.$field))),*]
            }
        }
    };
    (@parse f64, $key:expr, $value:expr) => {
        $value.trim().parse::<f64>().ok().filter(|v| v.is_finite() && *v >= 0.0).ok_or_else(|| {
            QestError::InvalidInput(format!("tolerance `{}` needs a non-negative number, got `{}`", $key, $value))
        })?
    };
    (@parse usize, $key:expr, $value:expr) => {
        $value.trim().parse::<usize>().map_err(|_| {
            QestError::InvalidInput(format!("tolerance `{}` needs an integer, got `{}`", $key, $value))
        })?
    };
}

tolerance_keys! {
    hermiticity: f64,
    trace: f64,
    psd: f64,
    cutoff_rel: f64,
    rhs_consistency: f64,
    drho_trace: f64,
    fd_step: f64,
    jacobian_det: f64,
    qfi_condition: f64,
    prob_floor: f64,
    singular_outcome_grad: f64,
    povm_completeness: f64,
    weight_pd: f64,
    sdp_tol: f64,
    sdp_max_iter: usize,
    sdp_fail_gap: f64,
    holevo_sqrt_cutoff: f64,
    classify_tau: f64,
    gram_drop: f64,
    hg_tail: f64,
    grid_convergence: f64,
    grid_max_refinements: usize,
    mle_grad: f64,
    mle_max_iter: usize,
    mle_starts: usize,
    mi_starts: usize,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn override_roundtrip() {
        let mut t = Tolerances::default();
        t.set("sdp_tol", "1e-9").unwrap();
        t.set("sdp_max_iter", "50").unwrap();
        assert_eq!(t.sdp_tol, 1e-9);
        assert_eq!(t.sdp_max_iter, 50);
        assert!(t.set("nope", "1").is_err());
        assert!(t.set("trace", "abc").is_err());
        assert_eq!(t.entries().len(), Tolerances::KEYS.len());
    }
}
