//! Acceptance checks. Each test prints one `criterion N: PASS|FAIL` line.

use std::io::Write;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use num_complex::Complex;
use qest_core::bounds::{bounds_report, inner_holevo_closed_form, inner_holevo_problem, nuisance_bound, WeightMatrix};
use qest_core::classify::classify;
use qest_core::imaging::{
    build_scene_model, direct_imaging_fi, gaussian_overlaps, hg_mode_fi, hg_order_for, GaussianPsf, Grid,
    ImagingParametrization, SceneBasis, SourceScene,
};
use qest_core::information::{classical_fi, qfi_matrices, upsilon};
use qest_core::multiphase::{
    build_multiphase_model, independent_total_variance, optimal_probe, optimal_total_variance, total_variance_bound,
};
use qest_core::operators::{eig_hermitian, eig_symmetric, lyapunov_solve, trace_norm, HermitianOperator};
use qest_core::random::{
    random_affine_model, random_density_matrix, random_hermitian, random_model_point, random_povm, random_weight,
};
use qest_core::sdp::{solve, SdpSettings, SdpStatus};
use qest_core::simulate::{empirical_mse, fisher_inverse, summarize};
use qest_core::{zoo, Tolerances};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn verdict(n: usize, ok: bool, detail: &str, elapsed: Duration) {
    let tag = if ok { "PASS" } else { "FAIL" };
    // straight to the stream so the line survives output capture
    let _ = writeln!(std::io::stderr(), "criterion {n}: {tag} ({detail}; {elapsed:.2?})");
}

fn scene_q(scene: &SourceScene<f64>, param: ImagingParametrization, tol: &Tolerances) -> DMatrix<f64> {
    let psf = GaussianPsf::new(1.0).unwrap();
    let reach = scene.positions().iter().fold(0.0f64, |a, x| a.max(x.abs())) + 10.0;
    let basis = SceneBasis::HermiteGauss { q_max: hg_order_for(&psf, reach) };
    let sm = build_scene_model(psf, scene, param, basis, tol).unwrap();
    qfi_matrices(&sm.point(tol).unwrap(), tol).unwrap().q
}

fn descending_eigenvalues(q: &DMatrix<f64>) -> Vec<f64> {
    let (vals, _) = eig_symmetric(q);
    let mut v: Vec<f64> = vals.iter().copied().collect();
    v.sort_by(|a, b| b.partial_cmp(a).unwrap());
    v
}

#[test]
fn criterion_01_multiphase_exactness() {
    let tol = Tolerances::default();
    let t = Instant::now();
    let mut worst = 0.0f64;
    for d in [1, 2, 3, 5] {
        for n in [1, 2, 4] {
            let probe = optimal_probe::<f64>(d, n).unwrap();
            let got = total_variance_bound(&probe, &vec![0.1; d], &tol).unwrap();
            let want = (1.0 + (d as f64).sqrt()).powi(2) * d as f64 / (4.0 * (n * n) as f64);
            assert!((optimal_total_variance(d, n) - want).abs() <= 1e-14 * want);
            worst = worst.max((got - want).abs() / want);
        }
    }
    let el = t.elapsed();
    let ok = worst <= 1e-8 && el < Duration::from_secs(1);
    verdict(1, ok, &format!("max relative error {worst:.2e} over 12 cases"), el);
    assert!(ok);
}

#[test]
fn criterion_02_simultaneous_beats_independent() {
    let tol = Tolerances::default();
    let t = Instant::now();
    let mut ok = true;
    let mut detail = Vec::new();
    for d in [2, 3, 5] {
        for n in [1, 2, 4] {
            let probe = optimal_probe::<f64>(d, n).unwrap();
            let got = total_variance_bound(&probe, &vec![0.1; d], &tol).unwrap();
            let indep = (d * d * d) as f64 / (n * n) as f64;
            assert!((independent_total_variance(d, n) - indep).abs() <= 1e-12 * indep);
            ok &= got < indep;
            if n == 1 {
                detail.push(format!("d={d}: {got:.4} < {indep}"));
            }
        }
    }
    verdict(2, ok, &detail.join(", "), t.elapsed());
    assert!(ok);
}

#[test]
fn criterion_03_superresolution() {
    let tol = Tolerances::default();
    let t = Instant::now();
    let psf = GaussianPsf::new(1.0).unwrap();
    let mut worst_q = 0.0f64;
    let steps = 40;
    for i in 0..=steps {
        let s = 0.05 * (3.0f64 / 0.05).powf(i as f64 / steps as f64);
        let q = scene_q(&SourceScene::equally_spaced(2, s).unwrap(), ImagingParametrization::CentroidSeparation, &tol);
        worst_q = worst_q.max((q[(1, 1)] - 0.25).abs() / 0.25);
    }
    let direct = |s: f64| {
        direct_imaging_fi(
            &psf,
            &SourceScene::two_sources(s, 0.5).unwrap(),
            ImagingParametrization::CentroidSeparation,
            Grid::default(),
            &tol,
        )
        .unwrap()[(1, 1)]
    };
    let curse = direct(0.01) / direct(2.0);
    let mut worst_hg = 0.0f64;
    for s in [0.01, 0.1, 0.5, 1.0, 2.0, 3.0] {
        let f = hg_mode_fi(&psf, s, hg_order_for(&psf, s / 2.0 + 10.0), &tol).unwrap().f_separation;
        worst_hg = worst_hg.max((f - 0.25).abs() / 0.25);
    }
    let el = t.elapsed();
    let ok = worst_q <= 1e-6 && curse <= 1e-3 && worst_hg <= 1e-6 && el < Duration::from_secs(30);
    verdict(
        3,
        ok,
        &format!("Q22 rel err {worst_q:.2e}, direct F22(0.01)/F22(2) = {curse:.2e}, HG rel err {worst_hg:.2e}"),
        el,
    );
    assert!(ok);
}

#[test]
fn criterion_04_n_source_rank_collapse() {
    let tol = Tolerances::default();
    let t = Instant::now();
    let mut ratios = Vec::new();
    for n in [3, 4] {
        let q = scene_q(&SourceScene::equally_spaced(n, 1e-3).unwrap(), ImagingParametrization::Separations, &tol);
        let e = descending_eigenvalues(&q);
        ratios.push(e[2] / e[1]);
    }
    let ok = ratios.iter().all(|r| *r <= 1e-4 && *r >= 0.0);
    verdict(4, ok, &format!("eig3/eig2 = {:.2e} (N=3), {:.2e} (N=4)", ratios[0], ratios[1]), t.elapsed());
    assert!(ok);
}

#[test]
fn criterion_05_imbalance_divergence() {
    let tol = Tolerances::default();
    let t = Instant::now();
    let bound = |s: f64| {
        let q = scene_q(
            &SourceScene::two_sources(s, 0.7).unwrap(),
            ImagingParametrization::CentroidSeparationImbalance,
            &tol,
        );
        nuisance_bound(&q, &[1], &WeightMatrix::identity(1), &tol).unwrap()
    };
    let (near, far) = (bound(0.01), bound(1.0));
    let ratio = near / far;
    let ok = ratio > 100.0;
    verdict(5, ok, &format!("bound(0.01σ) = {near:.4e}, bound(σ) = {far:.4e}, ratio {ratio:.1}"), t.elapsed());
    assert!(ok);
}

#[test]
fn criterion_06_bound_chain() {
    let tol = Tolerances::default();
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let slack = 1e-5;
    let mut failures = Vec::new();
    // duality gap relative to 1 + C^H; the bound itself spans many decades
    let mut worst_gap = 0.0f64;
    for case in 0..500 {
        let n = if case % 2 == 0 { 2 } else { 3 };
        let d = if (case / 2) % 2 == 0 { 2 } else { 3 };
        let pt = random_model_point::<f64, _>(n, d, &mut rng);
        let w = random_weight::<f64, _>(d, &mut rng);
        let rep = bounds_report(&pt, &w, true, &tol).unwrap();
        let h = rep.c_holevo.unwrap();
        let rel_gap = h.gap.abs() / (1.0 + h.value.abs());
        worst_gap = worst_gap.max(rel_gap);
        let cs = rep.c_sld;
        let ch = h.value;
        let c = &rep.chain;
        let holds = cs <= ch + slack
            && ch <= c.c_s_plus_norm + slack
            && c.c_s_plus_norm <= c.one_plus_r_cs + slack
            && c.one_plus_r_cs <= c.two_cs + slack
            && rep.r >= -slack
            && rep.r <= 1.0 + slack
            && rel_gap <= 1e-7;
        if !holds {
            failures.push(format!("case {case}: cs={cs} ch={ch} chain={c:?} r={} gap={}", rep.r, h.gap));
        }
    }
    let el = t.elapsed();
    let ok = failures.is_empty() && el < Duration::from_secs(300);
    verdict(6, ok, &format!("500 models, {} violations, max relative gap {worst_gap:.2e}", failures.len()), el);
    assert!(ok, "{failures:#?}");
}

fn sample_points(lambda: &[f64], domain: &[(f64, f64)]) -> Vec<Vec<f64>> {
    let step: Vec<f64> = domain.iter().map(|(lo, hi)| (0.1 * (hi - lo)).min(0.05)).collect();
    let mut pts = vec![lambda.to_vec()];
    for sign in [1.0, -1.0] {
        pts.push(
            lambda
                .iter()
                .zip(&step)
                .enumerate()
                .map(|(i, (x, h))| x + sign * h * (1.0 + 0.37 * i as f64))
                .collect(),
        );
    }
    pts
}

#[test]
fn criterion_07_classification_cross_checks() {
    let tol = Tolerances::default();
    let t = Instant::now();
    let mut models = Vec::new();
    for id in [
        "classical-qubit",
        "phase-qubit",
        "pure-qubit-xy",
        "qubit-tomography",
        "multiphase:d=2,N=1",
        "multiphase:d=3,N=2",
        "two-source:sigma=1",
        "n-source:sigma=1,n=3",
        "two-source-imbalance:w=0.7",
    ] {
        let e = zoo::lookup(id).unwrap();
        models.push((e.model, e.default_lambda));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for k in 0..20 {
        let n = 2 + k % 3;
        let d = 2 + k % 2;
        let m = random_affine_model::<f64, _>(n, d, &mut rng);
        models.push((m, vec![0.0; d]));
    }
    let mut violations = Vec::new();
    let (mut n_ac, mut n_di) = (0, 0);
    for (model, lambda) in &models {
        let pts = sample_points(lambda, model.domain());
        let rep = classify(model, &pts, &tol).unwrap();
        if !rep.containments_hold() {
            violations.push(format!("{}: containments {rep:?}", model.name()));
        }
        if !(rep.asymptotically_classical || rep.d_invariant) {
            continue;
        }
        let w = WeightMatrix::identity(model.param_dim());
        for p in &pts {
            let pt = model.evaluate(p, &tol).unwrap();
            let b = bounds_report(&pt, &w, true, &tol).unwrap();
            let ch = b.c_holevo.unwrap().value;
            if rep.asymptotically_classical {
                n_ac += 1;
                let rel = (ch - b.c_sld).abs() / b.c_sld;
                if rel > 1e-4 {
                    violations.push(format!("{}: asymptotically classical but |CH-CS|/CS = {rel:.2e}", model.name()));
                }
            }
            if rep.d_invariant {
                if let Some(cr) = b.c_rld {
                    n_di += 1;
                    let rel = (ch - cr).abs() / cr;
                    if rel > 1e-4 {
                        violations.push(format!("{}: D-invariant but |CH-CR|/CR = {rel:.2e}", model.name()));
                    }
                }
            }
        }
    }
    let ok = violations.is_empty();
    verdict(
        7,
        ok,
        &format!("{} models, {n_ac} asymptotically classical and {n_di} D-invariant point checks", models.len()),
        t.elapsed(),
    );
    assert!(ok, "{violations:#?}");
}

#[test]
fn criterion_08_upsilon_bound() {
    let tol = Tolerances::default();
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst_qubit = 0.0f64;
    let mut min_seen = f64::INFINITY;
    for case in 0..1000 {
        let d = 1 + case % 3;
        let pt = random_model_point::<f64, _>(2, d, &mut rng);
        let k = rng.random_range(2..=6);
        let povm = random_povm::<f64, _>(2, k, &mut rng);
        let f = classical_fi(&pt, &povm, &tol).unwrap();
        let q = qfi_matrices(&pt, &tol).unwrap().q;
        let u = upsilon(&f, &q, &tol).unwrap();
        worst_qubit = worst_qubit.max(u);
        min_seen = min_seen.min(u);
    }
    let mut worst_excess = f64::NEG_INFINITY;
    for case in 0..200 {
        let n = 3 + case % 3;
        let d = 2 + (case / 3) % 4;
        let pt = random_model_point::<f64, _>(n, d, &mut rng);
        let k = rng.random_range(n..=3 * n);
        let povm = random_povm::<f64, _>(n, k, &mut rng);
        let f = classical_fi(&pt, &povm, &tol).unwrap();
        let q = qfi_matrices(&pt, &tol).unwrap().q;
        let u = upsilon(&f, &q, &tol).unwrap();
        min_seen = min_seen.min(u);
        worst_excess = worst_excess.max(u - d.min(n - 1) as f64);
    }
    let ok = min_seen >= 0.0 && worst_qubit <= 1.0 + 1e-8 && worst_excess <= 1e-8;
    verdict(
        8,
        ok,
        &format!("qubit max {worst_qubit:.6}, min over all {min_seen:.2e}, higher-dim max excess {worst_excess:.4}"),
        t.elapsed(),
    );
    assert!(ok);
}

#[test]
fn criterion_09_mle_attainability() {
    let tol = Tolerances::default();
    let t = Instant::now();
    let model = build_multiphase_model(&optimal_probe::<f64>(2, 1).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let povm = random_povm::<f64, _>(3, 9, &mut rng);
    let lambda = [0.3, -0.5];
    let run = empirical_mse(&model, &povm, &lambda, 10_000, 400, 2024, &tol).unwrap();
    let s = summarize(&run, 1000, 5);
    let finv = fisher_inverse(&model, &povm, &lambda, &tol).unwrap();
    let mut worst_z = 0.0f64;
    for i in 0..2 {
        for j in 0..2 {
            worst_z = worst_z.max((s.scaled_v[(i, j)] - finv[(i, j)]).abs() / s.scaled_v_se[(i, j)]);
        }
    }
    let tr_f = finv.trace();
    let tr_z = (tr_f - s.scaled_trace) / s.scaled_trace_se;
    let el = t.elapsed();
    let ok = worst_z <= 3.0 && tr_z <= 3.0 && el < Duration::from_secs(120);
    verdict(
        9,
        ok,
        &format!(
            "max |M·V - F^-1|/SE = {worst_z:.2}, Tr[M·V] = {:.4} vs Tr[F^-1] = {tr_f:.4} (SE {:.4})",
            s.scaled_trace, s.scaled_trace_se
        ),
        el,
    );
    assert!(ok);
}

fn simpson(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> f64 {
    let h = (hi - lo) / n as f64;
    let mut acc = f(lo) + f(hi);
    for i in 1..n {
        acc += f(lo + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    acc * h / 3.0
}

#[test]
fn criterion_10_oracles() {
    let tol = Tolerances::default();
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(10);

    let mut overlap_err = 0.0f64;
    for sigma in [0.5, 1.0, 2.3] {
        let psf = GaussianPsf::new(sigma).unwrap();
        for _ in 0..10 {
            let xa: f64 = rng.random_range(-2.0..2.0) * sigma;
            let xb: f64 = rng.random_range(-2.0..2.0) * sigma;
            let ov = gaussian_overlaps(&psf, xa, xb);
            let (lo, hi) = (xa.min(xb) - 14.0 * sigma, xa.max(xb) + 14.0 * sigma);
            let q = |g: &dyn Fn(f64) -> f64| simpson(g, lo, hi, 20_000);
            let pp = q(&|x| psf.amplitude(x - xa) * psf.amplitude(x - xb));
            let pd = q(&|x| psf.amplitude(x - xa) * psf.derivative(x - xb));
            let dd = q(&|x| psf.derivative(x - xa) * psf.derivative(x - xb));
            overlap_err = overlap_err
                .max((pp - ov.psi_psi).abs())
                .max((pd - ov.psi_dpsi).abs())
                .max((dd - ov.dpsi_dpsi).abs());
        }
    }

    let mut lyap_err = 0.0f64;
    for n in 2..=6 {
        for _ in 0..10 {
            let rho = random_density_matrix::<f64, _>(n, &mut rng);
            let b = HermitianOperator::from_hermitian_part(&random_hermitian::<f64, _>(n, &mut rng));
            let x = lyapunov_solve(&rho, &b, rho.default_cutoff(&tol), &tol).unwrap();
            let lhs = (x.matrix() * rho.matrix() + rho.matrix() * x.matrix()) * Complex::new(0.5, 0.0);
            lyap_err = lyap_err.max((lhs - b.matrix()).norm());
        }
    }

    let mut tn_err = 0.0f64;
    for _ in 0..30 {
        let r = rng.random_range(1..=5);
        let c = rng.random_range(1..=5);
        let a = DMatrix::from_fn(r, c, |_, _| Complex::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        let mut dil = DMatrix::zeros(r + c, r + c);
        dil.view_mut((0, r), (r, c)).copy_from(&a);
        dil.view_mut((r, 0), (c, r)).copy_from(&a.adjoint());
        let eig = eig_hermitian(&dil).unwrap();
        let oracle: f64 = eig.eigenvalues.iter().map(|v| v.abs()).sum::<f64>() / 2.0;
        tn_err = tn_err.max((trace_norm(&a) - oracle).abs());
    }

    let mut sdp_err = 0.0f64;
    let settings = SdpSettings::from_tolerances(&tol);
    for d in 2..=5 {
        for _ in 0..5 {
            let g = DMatrix::from_fn(d, d, |_, _| Complex::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
            let z = &g * g.adjoint();
            let sol = solve(&inner_holevo_problem(&z), &settings).unwrap();
            assert_eq!(sol.status, SdpStatus::Optimal);
            let want: f64 = inner_holevo_closed_form(&z);
            let re_trace: f64 = z.diagonal().iter().map(|v| v.re).sum();
            let im = z.map(|v| Complex::new(v.im, 0.0));
            assert!((want - (re_trace + trace_norm(&im))).abs() <= 1e-14 * (1.0 + want));
            sdp_err = sdp_err.max((sol.objective_value - want).abs());
        }
    }

    let ok = overlap_err <= 1e-9 && lyap_err <= 1e-10 && tn_err <= 1e-10 && sdp_err <= 1e-7;
    verdict(
        10,
        ok,
        &format!(
            "overlaps {overlap_err:.1e}, Lyapunov residual {lyap_err:.1e}, trace norm {tn_err:.1e}, inner SDP {sdp_err:.1e}"
        ),
        t.elapsed(),
    );
    assert!(ok);
}
