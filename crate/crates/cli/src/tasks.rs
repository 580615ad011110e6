//! One function per task. Each returns CSV tables and a JSON summary.

use qest_core::bounds::{bounds_report, inner_holevo_closed_form, inner_holevo_problem, nuisance_bound, scalar_sld_bound, WeightMatrix};
use qest_core::classify::classify;
use qest_core::imaging::{direct_imaging_fi, hg_mode_fi, hg_order_for, GaussianPsf, Grid, ImagingParametrization, SourceScene};
use qest_core::information::{qfi_matrices, Povm};
use qest_core::multiphase::{independent_total_variance, optimal_probe, optimal_total_variance, total_variance_bound};
use qest_core::operators::eig_symmetric;
use qest_core::random::{random_hermitian, random_povm};
use qest_core::scalar::{RMatrix, RVector};
use qest_core::sdp::{solve, LmiBlock, SdpProblem, SdpSettings, SdpStatus};
use qest_core::simulate::{empirical_mse, fisher_inverse, stream_rng, summarize};
use qest_core::zoo::ZooEntry;
use qest_core::{QestError, Tolerances};
use rand::Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{param_names, parse_povm, PovmSpec, ScenarioConfig};
use crate::output::{Cell, Table};
use crate::CliError;

pub struct TaskOutput {
    pub tables: Vec<(String, Table)>,
    pub summaries: Vec<(String, Value)>,
    /// What goes to standard output when no output directory is given.
    pub stdout: String,
}

fn numerical<'a>(op: &str, lambda: &'a [f64]) -> impl Fn(QestError) -> CliError + 'a {
    let op = op.to_string();
    move |e| match e {
        QestError::InvalidInput(_) | QestError::DomainError { .. } => CliError::Validation(format!("{op}: {e}")),
        other => CliError::Numerical { op: format!("{op} at lambda={lambda:?}"), message: other.to_string() },
    }
}

fn matrix_json(m: &RMatrix<f64>) -> Value {
    json!((0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect::<Vec<_>>()).collect::<Vec<_>>())
}

fn lambda_header(names: &[String]) -> Vec<String> {
    names.iter().map(|n| format!("lambda.{n}")).collect()
}

fn lambda_cells(l: &[f64]) -> Vec<Cell> {
    l.iter().map(|v| Cell::Num(*v)).collect()
}

fn pretty(v: &Value) -> String {
    serde_json::to_string_pretty(v).unwrap_or_default() + "\n"
}

pub fn bounds(cfg: &ScenarioConfig, tol: &Tolerances) -> Result<TaskOutput, CliError> {
    let entry = cfg.entry()?;
    let id = cfg.model_id()?;
    let dim = entry.model.param_dim();
    let w = cfg.weight(dim)?;
    let points = cfg.points(&entry)?;
    let reports = points
        .par_iter()
        .map(|l| {
            let fail = numerical("bounds", l);
            let pt = entry.model.evaluate(l, tol).map_err(&fail)?;
            bounds_report(&pt, &w, cfg.holevo, tol).map_err(&fail)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let names = param_names(id, dim);
    let mut header = lambda_header(&names);
    header.extend(
        ["c_sld", "c_rld", "c_holevo", "holevo_gap", "chain_cs_plus_norm", "chain_one_plus_r_cs", "chain_two_cs", "r"]
            .map(String::from),
    );
    let mut table = Table::new(header);
    let mut rows_json = Vec::new();
    for (l, r) in points.iter().zip(&reports) {
        let mut row = lambda_cells(l);
        row.extend([
            Cell::Num(r.c_sld),
            r.c_rld.into(),
            r.c_holevo.map(|h| h.value).into(),
            r.c_holevo.map(|h| h.gap).into(),
            Cell::Num(r.chain.c_s_plus_norm),
            Cell::Num(r.chain.one_plus_r_cs),
            Cell::Num(r.chain.two_cs),
            Cell::Num(r.r),
        ]);
        table.rows.push(row);
        rows_json.push(json!({
            "lambda": l,
            "c_sld": r.c_sld,
            "c_rld": r.c_rld,
            "c_holevo": r.c_holevo.map(|h| h.value),
            "holevo_gap": r.c_holevo.map(|h| h.gap),
            "chain": { "cs_plus_norm": r.chain.c_s_plus_norm, "one_plus_r_cs": r.chain.one_plus_r_cs, "two_cs": r.chain.two_cs },
            "r": r.r,
            "q": matrix_json(&r.q),
            "d": matrix_json(&r.d),
        }));
    }
    let summary = json!({ "model": id, "weight": matrix_json(w.matrix()), "points": rows_json });
    Ok(TaskOutput { stdout: pretty(&summary), tables: vec![("bounds.csv".into(), table)], summaries: vec![("bounds.json".into(), summary)] })
}

/// The configured points, topped up to three by moving each coordinate a
/// tenth of the way towards either domain edge.
fn classification_points(cfg: &ScenarioConfig, entry: &ZooEntry) -> Result<Vec<Vec<f64>>, CliError> {
    let mut pts = cfg.points(entry)?;
    pts.extend(cfg.points.iter().cloned());
    let base = pts[0].clone();
    let dom = entry.model.domain();
    let mut k = 0;
    while pts.len() < 3 {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let scale = 0.1 / (1 + k / 2) as f64;
        pts.push(base.iter().zip(dom).map(|(x, (lo, hi))| if sign > 0.0 { x + scale * (hi - x) } else { x - scale * (x - lo) }).collect());
        k += 1;
    }
    Ok(pts)
}

pub fn classify_task(cfg: &ScenarioConfig, tol: &Tolerances) -> Result<TaskOutput, CliError> {
    let entry = cfg.entry()?;
    let id = cfg.model_id()?;
    let pts = classification_points(cfg, &entry)?;
    let r = classify(&entry.model, &pts, tol).map_err(numerical("classify", &pts[0]))?;
    let header = [
        "classical",
        "quasi_classical",
        "d_invariant",
        "asymptotically_classical",
        "rank_deficient",
        "support_commuting",
        "cross_point_checked",
        "w_classical",
        "w_quasi_classical",
        "w_d_invariant",
        "w_asymptotically_classical",
        "w_support_commutator",
        "points",
    ];
    let mut table = Table::new(header.iter().map(|s| s.to_string()).collect());
    let b = |v: bool| Cell::Text(v.to_string());
    let wt = &r.witnesses;
    table.rows.push(vec![
        b(r.classical),
        b(r.quasi_classical),
        b(r.d_invariant),
        b(r.asymptotically_classical),
        b(r.rank_deficient),
        b(r.support_commuting),
        b(r.cross_point_checked),
        Cell::Num(wt.classical),
        Cell::Num(wt.quasi_classical),
        Cell::Num(wt.d_invariant),
        Cell::Num(wt.asymptotically_classical),
        Cell::Num(wt.support_commutator),
        Cell::Int(r.points as u64),
    ]);
    let mut pt_table = Table::new(lambda_header(&param_names(id, entry.model.param_dim())));
    for p in &pts {
        pt_table.rows.push(lambda_cells(p));
    }
    let summary = json!({
        "model": id,
        "verdict_scope": "at tested points",
        "classical": r.classical,
        "quasi_classical": r.quasi_classical,
        "d_invariant": r.d_invariant,
        "asymptotically_classical": r.asymptotically_classical,
        "rank_deficient": r.rank_deficient,
        "support_commuting": r.support_commuting,
        "cross_point_checked": r.cross_point_checked,
        "tau": r.tau,
        "witnesses": {
            "classical": wt.classical,
            "quasi_classical": wt.quasi_classical,
            "d_invariant": wt.d_invariant,
            "asymptotically_classical": wt.asymptotically_classical,
            "support_commutator": wt.support_commutator,
        },
        "points": pts,
    });
    Ok(TaskOutput {
        stdout: pretty(&summary),
        tables: vec![("classify.csv".into(), table), ("classify_points.csv".into(), pt_table)],
        summaries: vec![("classify.json".into(), summary)],
    })
}

fn model_sigma(id: &str) -> Result<f64, CliError> {
    let args = id.split_once(':').map(|x| x.1).unwrap_or("");
    for part in args.split(',') {
        if let Some((k, v)) = part.split_once('=') {
            if k.trim() == "sigma" {
                return v.trim().parse().map_err(|_| CliError::Validation(format!("model: bad sigma in `{id}`")));
            }
        }
    }
    Ok(1.0)
}

pub fn imaging(cfg: &ScenarioConfig, tol: &Tolerances) -> Result<TaskOutput, CliError> {
    let entry = cfg.entry()?;
    let id = cfg.model_id()?;
    let head = id.split(':').next().unwrap_or("").trim();
    let two = match head {
        "two-source" => Some(ImagingParametrization::CentroidSeparation),
        "two-source-imbalance" => Some(ImagingParametrization::CentroidSeparationImbalance),
        "n-source" => None,
        _ => return Err(CliError::Validation(format!("model: `{id}` is not an imaging scene"))),
    };
    let psf = GaussianPsf::new(model_sigma(id)?).map_err(|e| CliError::Validation(format!("model: {e}")))?;
    let dim = entry.model.param_dim();
    let names = param_names(id, dim);
    let points = cfg.points(&entry)?;
    let w = cfg.weight(dim)?;
    let rows = points
        .par_iter()
        .map(|l| -> Result<Vec<Cell>, CliError> {
            let fail = numerical("imaging", l);
            let pt = entry.model.evaluate(l, tol).map_err(&fail)?;
            let q = qfi_matrices(&pt, tol).map_err(&fail)?.q;
            let (vals, _) = eig_symmetric(&q);
            let mut row = lambda_cells(l);
            row.extend((0..dim).map(|i| Cell::Num(q[(i, i)])));
            row.extend(vals.iter().rev().map(|v| Cell::Num(*v)));
            row.push(scalar_sld_bound(&q, &w, tol).ok().into());
            row.push(nuisance_bound(&q, &[1], &WeightMatrix::identity(1), tol).ok().into());
            if let Some(param) = two {
                let (c, s) = (l[0], l[1]);
                let w1 = if dim == 3 { l[2] } else { 0.5 };
                let scene = SourceScene::new(vec![c - s / 2.0, c + s / 2.0], vec![w1, 1.0 - w1]).map_err(&fail)?;
                let f = direct_imaging_fi(&psf, &scene, param, Grid::default(), tol).map_err(&fail)?;
                row.push(Cell::Num(f[(1, 1)]));
                let q_max = hg_order_for(&psf, s);
                row.push(Cell::Num(hg_mode_fi(&psf, s, q_max, tol).map_err(&fail)?.f_separation));
            } else if dim >= 3 {
                row.push(Cell::Num(vals[dim - 3] / vals[dim - 2]));
            }
            Ok(row)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut header = lambda_header(&names);
    header.extend(names.iter().map(|n| format!("q.{n}")));
    header.extend((1..=dim).map(|k| format!("q_eig{k}")));
    header.push("c_sld".into());
    header.push("separation_bound".into());
    if two.is_some() {
        header.push("direct_f_separation".into());
        header.push("spade_f_separation".into());
    } else if dim >= 3 {
        header.push("eig3_over_eig2".into());
    }
    let mut table = Table::new(header);
    table.rows = rows;
    let csv = table.to_csv();
    let summary = json!({ "model": id, "sigma": psf.sigma(), "rows": table.rows.len() });
    Ok(TaskOutput { stdout: csv, tables: vec![("imaging.csv".into(), table)], summaries: vec![("imaging.json".into(), summary)] })
}

pub fn multiphase(cfg: &ScenarioConfig, tol: &Tolerances) -> Result<TaskOutput, CliError> {
    let cases: Vec<(usize, usize)> =
        cfg.multiphase.d.iter().flat_map(|&d| cfg.multiphase.photons.iter().map(move |&n| (d, n))).collect();
    let rows = cases
        .par_iter()
        .map(|&(d, n)| -> Result<Vec<Cell>, CliError> {
            let lambda = vec![0.0; d];
            let fail = numerical("multiphase", &lambda);
            let probe = optimal_probe::<f64>(d, n).map_err(&fail)?;
            let v = total_variance_bound(&probe, &lambda, tol).map_err(&fail)?;
            let closed = optimal_total_variance(d, n);
            let indep = independent_total_variance(d, n);
            Ok(vec![
                Cell::Int(d as u64),
                Cell::Int(n as u64),
                Cell::Num(probe.beta2),
                Cell::Num(v),
                Cell::Num(closed),
                Cell::Num((v - closed).abs() / closed),
                Cell::Num(indep),
                Cell::Num(v / indep),
            ])
        })
        .collect::<Result<Vec<_>, _>>()?;
    let header = ["d", "photons", "beta2", "total_variance", "closed_form", "rel_error", "independent", "ratio_to_independent"];
    let mut table = Table::new(header.iter().map(|s| s.to_string()).collect());
    table.rows = rows;
    let csv = table.to_csv();
    let summary = json!({ "cases": cases.len() });
    Ok(TaskOutput { stdout: csv, tables: vec![("multiphase.csv".into(), table)], summaries: vec![("multiphase.json".into(), summary)] })
}

pub fn simulate(cfg: &ScenarioConfig, tol: &Tolerances) -> Result<TaskOutput, CliError> {
    let entry = cfg.entry()?;
    let id = cfg.model_id()?;
    let lambda = cfg.points(&entry)?.remove(0);
    let n = entry.model.hilbert_dim();
    let sim = &cfg.simulate;
    let povm = match parse_povm(&sim.povm)? {
        PovmSpec::Computational => Povm::computational(n),
        PovmSpec::Random(k) if k >= n => random_povm::<f64, _>(n, k, &mut stream_rng(cfg.seed, u64::MAX - 1)),
        PovmSpec::Random(k) => return Err(CliError::Validation(format!("simulate.povm: {k} outcomes on a {n}-dimensional space"))),
    };
    let fail = numerical("simulate", &lambda);
    let run = empirical_mse(&entry.model, &povm, &lambda, sim.shots, sim.repetitions, cfg.seed, tol).map_err(&fail)?;
    let s = summarize(&run, sim.bootstrap, cfg.seed);
    let finv = fisher_inverse(&entry.model, &povm, &lambda, tol).map_err(&fail)?;
    let dim = lambda.len();
    let names = param_names(id, dim);
    let mut header = vec!["repetition".to_string()];
    header.extend(names.iter().map(|n| format!("lambda_hat.{n}")));
    header.extend(lambda_header(&names));
    let mut table = Table::new(header);
    for (i, e) in run.estimates.iter().enumerate() {
        let mut row = vec![Cell::Int(i as u64)];
        row.extend(lambda_cells(e));
        row.extend(lambda_cells(&lambda));
        table.rows.push(row);
    }
    let m = sim.shots as f64;
    let summary = json!({
        "model": id,
        "lambda": lambda,
        "shots": sim.shots,
        "repetitions": sim.repetitions,
        "povm": sim.povm,
        "V_hat": matrix_json(&run.v_hat),
        "M_V_hat": matrix_json(&s.scaled_v),
        "M_V_hat_standard_error": matrix_json(&s.scaled_v_se),
        "F_inverse": matrix_json(&finv),
        "F_inverse_over_M": matrix_json(&(&finv / m)),
        "trace_M_V_hat": s.scaled_trace,
        "trace_M_V_hat_standard_error": s.scaled_trace_se,
        "trace_F_inverse": finv.trace(),
        "bias": s.bias,
        "bias_standard_error": s.bias_se,
    });
    Ok(TaskOutput {
        stdout: pretty(&summary),
        tables: vec![("simulate.csv".into(), table)],
        summaries: vec![("simulate_summary.json".into(), summary)],
    })
}

/// Solver self-check: inner Holevo programs against their closed form and
/// random strictly feasible programs for a closed duality gap.
pub fn sdp_check(cfg: &ScenarioConfig, tol: &Tolerances) -> Result<TaskOutput, CliError> {
    let settings = SdpSettings::from_tolerances(tol);
    let header = ["case", "kind", "dim", "objective", "reference", "abs_error", "gap", "status", "ok"];
    let mut table = Table::new(header.iter().map(|s| s.to_string()).collect());
    let mut failures = Vec::new();
    let mut case = 0u64;
    for d in 2..=5 {
        let mut rng = stream_rng(cfg.seed, case);
        let z = random_hermitian::<f64, _>(d, &mut rng);
        let sol = solve(&inner_holevo_problem(&z), &settings).map_err(numerical("sdp-check", &[]))?;
        let want = inner_holevo_closed_form(&z);
        let err = (sol.objective_value - want).abs();
        let ok = sol.status == SdpStatus::Optimal && err <= 1e-7 * (1.0 + want.abs());
        if !ok {
            failures.push(format!("inner program d={d}"));
        }
        table.rows.push(vec![
            Cell::Int(case),
            Cell::Text("inner-holevo".into()),
            Cell::Int(d as u64),
            Cell::Num(sol.objective_value),
            Cell::Num(want),
            Cell::Num(err),
            Cell::Num(sol.gap),
            Cell::Text(format!("{:?}", sol.status)),
            Cell::Text(ok.to_string()),
        ]);
        case += 1;
    }
    for n in 3..=6 {
        let mut rng = stream_rng(cfg.seed, case);
        let m = n - 1;
        let a: Vec<RMatrix<f64>> = (0..m)
            .map(|_| {
                let g = RMatrix::from_fn(n, n, |_, _| rng.random::<f64>() - 0.5);
                &g + g.transpose()
            })
            .collect();
        let y0 = RMatrix::from_fn(n, n, |_, _| rng.random::<f64>() - 0.5);
        let y0 = &y0 * y0.transpose() + RMatrix::identity(n, n);
        let c = RVector::from_iterator(m, a.iter().map(|aj| aj.component_mul(&y0).sum()));
        let p = SdpProblem { c, blocks: vec![LmiBlock { a0: RMatrix::identity(n, n), a }], equalities: None };
        let sol = solve(&p, &settings).map_err(numerical("sdp-check", &[]))?;
        let ok = sol.status == SdpStatus::Optimal && sol.gap.abs() <= 1e-7 * (1.0 + sol.objective_value.abs());
        if !ok {
            failures.push(format!("random program n={n}"));
        }
        table.rows.push(vec![
            Cell::Int(case),
            Cell::Text("random-feasible".into()),
            Cell::Int(n as u64),
            Cell::Num(sol.objective_value),
            Cell::Num(sol.dual_value),
            Cell::Num((sol.objective_value - sol.dual_value).abs()),
            Cell::Num(sol.gap),
            Cell::Text(format!("{:?}", sol.status)),
            Cell::Text(ok.to_string()),
        ]);
        case += 1;
    }
    if !failures.is_empty() {
        return Err(CliError::Numerical { op: "sdp-check".into(), message: format!("failed cases: {}", failures.join(", ")) });
    }
    let summary = json!({ "cases": case, "all_ok": true });
    let csv = table.to_csv();
    Ok(TaskOutput { stdout: csv, tables: vec![("sdp_check.csv".into(), table)], summaries: vec![("sdp_check.json".into(), summary)] })
}
