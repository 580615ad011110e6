use nalgebra::DMatrix;
use num_complex::Complex;
use proptest::prelude::*;
use qest_core::bounds::{bounds_report, holevo_bound, WeightMatrix};
use qest_core::information::{classical_fi, compute_sld, qfi_matrices};
use qest_core::operators::{eig_symmetric, trace_norm};
use qest_core::random::{random_model_point, random_povm, random_weight};
use qest_core::Tolerances;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn dims(seed: u64) -> (usize, usize) {
    let n = 2 + (seed % 3) as usize;
    let d = 1 + ((seed / 3) % 3) as usize;
    (n, d)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn sld_satisfies_its_defining_equation(seed in any::<u64>()) {
        let tol = Tolerances::default();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (n, d) = dims(seed);
        let pt = random_model_point::<f64, _>(n, d, &mut rng);
        let sld = compute_sld(&pt, &tol).unwrap();
        let rho = pt.rho.matrix();
        for (l, dr) in sld.operators.iter().zip(&pt.drho) {
            let lhs = (l.matrix() * rho + rho * l.matrix()) * Complex::new(0.5, 0.0);
            prop_assert!((lhs - dr.matrix()).norm() <= 1e-10);
        }
    }

    #[test]
    fn qfi_dominates_classical_fisher(seed in any::<u64>()) {
        let tol = Tolerances::default();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (n, d) = dims(seed);
        let pt = random_model_point::<f64, _>(n, d, &mut rng);
        let k = rng.random_range(n..=3 * n);
        let povm = random_povm::<f64, _>(n, k, &mut rng);
        let f = classical_fi(&pt, &povm, &tol).unwrap();
        let info = qfi_matrices(&pt, &tol).unwrap();
        let (vals, _) = eig_symmetric(&(&info.q - &f));
        prop_assert!(vals[0] >= -1e-10 * (1.0 + info.q.norm()));
        prop_assert!((&info.d + info.d.transpose()).norm() <= 1e-12);
    }

    #[test]
    fn holevo_bound_is_reparametrization_covariant(seed in any::<u64>()) {
        let tol = Tolerances::default();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 2 + (seed % 2) as usize;
        let d = 2;
        let pt = random_model_point::<f64, _>(n, d, &mut rng);
        let w = random_weight::<f64, _>(d, &mut rng);
        // λ = A λ̄, so ∂̄ = Aᵀ∂ and the weight becomes AᵀWA
        let a = DMatrix::from_fn(d, d, |i, j| if i == j { 1.0 } else { 0.0 } + 0.4 * (rng.random::<f64>() - 0.5));
        let moved = pt.reparametrized(pt.lambda.clone(), &a.transpose(), &tol).unwrap();
        let wa = WeightMatrix::new(a.transpose() * w.matrix() * &a).unwrap();
        let (h0, _) = holevo_bound(&pt, &w, &tol).unwrap();
        let (h1, cert) = holevo_bound(&moved, &wa, &tol).unwrap();
        prop_assert!((h0 - h1).abs() <= 1e-7 * (1.0 + h0));
        prop_assert!(cert.constraint_residual <= 1e-8);
        prop_assert!(cert.min_eig_u_minus_z >= -1e-8 * (1.0 + h1));
    }

    #[test]
    fn chain_and_incompatibility_are_ordered(seed in any::<u64>()) {
        let tol = Tolerances::default();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (n, d) = dims(seed);
        let pt = random_model_point::<f64, _>(n, d, &mut rng);
        let w = random_weight::<f64, _>(d, &mut rng);
        let r = bounds_report(&pt, &w, true, &tol).unwrap();
        let h = r.c_holevo.unwrap().value;
        let slack = 1e-7 * (1.0 + h);
        prop_assert!(r.c_sld <= h + slack);
        prop_assert!(h <= r.chain.c_s_plus_norm + slack);
        prop_assert!(r.chain.c_s_plus_norm <= r.chain.one_plus_r_cs + slack);
        prop_assert!(r.chain.one_plus_r_cs <= r.chain.two_cs + slack);
        if let Some(cr) = r.c_rld {
            prop_assert!(cr <= h + slack);
        }
    }

    #[test]
    fn trace_norm_is_unitarily_invariant(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 2 + (seed % 4) as usize;
        let mut c = || Complex::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
        let a = DMatrix::from_fn(n, n, |_, _| c());
        let g = DMatrix::from_fn(n, n, |_, _| c());
        let u = g.qr().q();
        let base = trace_norm(&a);
        prop_assert!((trace_norm(&(&u * &a)) - base).abs() <= 1e-12 * (1.0 + base));
        prop_assert!((trace_norm(&a.adjoint()) - base).abs() <= 1e-12 * (1.0 + base));
    }
}
