//! Built-in models, addressable by string identifiers.

use crate::error::{QestError, Result};
use crate::imaging::{build_scene_model, hg_order_for, GaussianPsf, ImagingParametrization, SceneBasis, SourceScene};
use crate::model::StatisticalModel;
use crate::multiphase::{build_multiphase_model, optimal_probe};
use crate::tolerances::Tolerances;
use crate::scalar::{cr, ci, CMatrix, Real};

fn pauli<T: Real>() -> [CMatrix<T>; 3] {
    let (o, z) = (cr(T::one()), cr(T::zero()));
    let i = ci::<T>();
    [
        CMatrix::from_row_slice(2, 2, &[z, o, o, z]),
        CMatrix::from_row_slice(2, 2, &[z, -i, i, z]),
        CMatrix::from_row_slice(2, 2, &[o, z, z, -o]),
    ]
}

/// `ρ(λ) = diag(λ, 1−λ)`.
pub fn classical_qubit<T: Real>() -> StatisticalModel<T> {
    StatisticalModel::new("classical-qubit", 2, vec![(T::zero(), T::one())], |l: &[T]| {
        let mut m = CMatrix::zeros(2, 2);
        m[(0, 0)] = cr(l[0]);
        m[(1, 1)] = cr(T::one() - l[0]);
        Ok(m)
    })
    .with_analytic_derivatives(|_| {
        let mut m = CMatrix::zeros(2, 2);
        m[(0, 0)] = cr(T::one());
        m[(1, 1)] = cr(-T::one());
        Ok(vec![m])
    })
}

/// `e^{−iλσz/2}|+⟩` as a density matrix.
pub fn phase_qubit<T: Real>() -> StatisticalModel<T> {
    let pi = T::pi();
    let state = |l: &[T]| -> CMatrix<T> {
        let h = T::lit(0.5);
        let psi = [crate::scalar::polar(h.sqrt(), -l[0] * h), crate::scalar::polar(h.sqrt(), l[0] * h)];
        CMatrix::from_fn(2, 2, |i, j| psi[i] * psi[j].conj())
    };
    StatisticalModel::new("phase-qubit", 2, vec![(-pi, pi)], move |l: &[T]| Ok(state(l))).with_analytic_derivatives(
        move |l: &[T]| {
            let rho = state(l);
            let sz = &pauli::<T>()[2];
            let comm = sz * &rho - &rho * sz;
            Ok(vec![comm * (-ci::<T>() * cr(T::lit(0.5)))])
        },
    )
}

/// `e^{−i(λ₁σx + λ₂σy)/2}|0⟩`: two rotation parameters of a pure qubit.
pub fn pure_qubit_xy<T: Real>() -> StatisticalModel<T> {
    let b = T::lit(1.5);
    StatisticalModel::new("pure-qubit-xy", 2, vec![(-b, b), (-b, b)], |l: &[T]| {
        let [sx, sy, _] = pauli::<T>();
        let (ax, ay) = (l[0] * T::lit(0.5), l[1] * T::lit(0.5));
        let t = (ax * ax + ay * ay).sqrt();
        let gen = if t > T::zero() { (sx * cr(ax) + sy * cr(ay)) / cr(t) } else { CMatrix::zeros(2, 2) };
        let u = CMatrix::identity(2, 2) * cr(t.cos()) - gen * (ci::<T>() * cr(t.sin()));
        let psi = u.column(0).into_owned();
        Ok(&psi * psi.adjoint())
    })
}

/// Full-rank qubit tomography: `ρ = (I + r·σ)/2` with Bloch vector `r = λ`.
pub fn qubit_tomography<T: Real>() -> StatisticalModel<T> {
    let one = T::one();
    StatisticalModel::new("qubit-tomography", 2, vec![(-one, one); 3], |l: &[T]| {
        let r2 = l.iter().fold(T::zero(), |a, x| a + *x * *x);
        if r2 >= T::one() {
            return Err(QestError::InvalidState(format!("Bloch vector has length {:e} ≥ 1", r2.sqrt())));
        }
        let p = pauli::<T>();
        let mut m = CMatrix::identity(2, 2);
        for (s, x) in p.iter().zip(l) {
            m += s * cr(*x);
        }
        Ok(m * cr(T::lit(0.5)))
    })
    .with_analytic_derivatives(|_| Ok(pauli::<T>().iter().map(|s| s * cr(T::lit(0.5))).collect()))
}

/// A built-in model with a representative interior point.
#[derive(Debug, Clone)]
pub struct ZooEntry {
    pub model: StatisticalModel<f64>,
    pub default_lambda: Vec<f64>,
}

/// Looks up a model by identifier. Accepted forms:
/// `classical-qubit`, `phase-qubit`, `pure-qubit-xy`, `qubit-tomography`,
/// `multiphase:d=3,N=2`, `two-source:sigma=1`, `n-source:sigma=1,n=3`,
/// `two-source-imbalance:w=0.7`. Imaging scenes take an optional `s=` spacing
/// (default σ) that sets the default point.
pub fn lookup(id: &str) -> Result<ZooEntry> {
    let (head, args) = match id.split_once(':') {
        Some((h, a)) => (h.trim(), a.trim()),
        None => (id.trim(), ""),
    };
    let mut kv = std::collections::BTreeMap::new();
    for part in args.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| QestError::InvalidInput(format!("malformed model argument `{part}` in `{id}`")))?;
        let v: f64 = v
            .trim()
            .parse()
            .map_err(|_| QestError::InvalidInput(format!("argument `{k}` of `{id}` is not a number")))?;
        kv.insert(k.trim().to_string(), v);
    }
    let mut take = |key: &str, default: Option<f64>| -> Result<f64> {
        kv.remove(key)
            .or(default)
            .ok_or_else(|| QestError::InvalidInput(format!("model `{head}` needs argument `{key}`")))
    };
    let int = |v: f64, key: &str| -> Result<usize> {
        if v >= 1.0 && v.fract() == 0.0 && v < 1e6 {
            Ok(v as usize)
        } else {
            Err(QestError::InvalidInput(format!("argument `{key}` must be a positive integer")))
        }
    };
    let tol = Tolerances::default();
    let entry = |model: StatisticalModel<f64>, default_lambda: Vec<f64>| ZooEntry { model, default_lambda };
    let out = match head {
        "classical-qubit" => entry(classical_qubit(), vec![0.3]),
        "phase-qubit" => entry(phase_qubit(), vec![0.4]),
        "pure-qubit-xy" => entry(pure_qubit_xy(), vec![0.0, 0.0]),
        "qubit-tomography" => entry(qubit_tomography(), vec![0.2, -0.1, 0.3]),
        "multiphase" => {
            let d = int(take("d", None)?, "d")?;
            let n = int(take("N", None)?, "N")?;
            entry(build_multiphase_model(&optimal_probe(d, n)?), vec![0.1; d])
        }
        "two-source" | "n-source" | "two-source-imbalance" => {
            let sigma = take("sigma", Some(1.0))?;
            let psf = GaussianPsf::new(sigma)?;
            let spacing = take("s", Some(sigma))?;
            let (scene, param) = match head {
                "two-source" => (SourceScene::equally_spaced(2, spacing)?, ImagingParametrization::CentroidSeparation),
                "n-source" => {
                    let n = int(take("n", None)?, "n")?;
                    (SourceScene::equally_spaced(n, spacing)?, ImagingParametrization::Separations)
                }
                _ => {
                    let w = take("w", None)?;
                    (SourceScene::two_sources(spacing, w)?, ImagingParametrization::CentroidSeparationImbalance)
                }
            };
            let reach = scene.positions().iter().fold(0.0f64, |a, x| a.max(x.abs())) + 10.0 * sigma;
            let basis = SceneBasis::HermiteGauss { q_max: hg_order_for(&psf, reach) };
            let sm = build_scene_model(psf, &scene, param, basis, &tol)?;
            entry(sm.model, sm.lambda)
        }
        other => return Err(QestError::InvalidInput(format!("unknown model `{other}`"))),
    };
    if let Some(k) = kv.keys().next() {
        return Err(QestError::InvalidInput(format!("unexpected argument `{k}` for model `{head}`")));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex;

    #[test]
    fn lookup_accepts_documented_ids() {
        for id in [
            "classical-qubit",
            "phase-qubit",
            "pure-qubit-xy",
            "qubit-tomography",
            "multiphase:d=2,N=2",
            "two-source:sigma=1",
            "n-source:sigma=1,n=3",
            "two-source-imbalance:w=0.7",
        ] {
            let e = lookup(id).unwrap_or_else(|e| panic!("{id}: {e}"));
            assert_eq!(e.model.param_dim(), e.default_lambda.len());
            e.model.evaluate(&e.default_lambda, &Tolerances::default()).unwrap();
        }
        assert!(lookup("multiphase:d=2").is_err());
        assert!(lookup("nonsense").is_err());
        assert!(lookup("multiphase:d=2,N=2,q=1").is_err());
    }

    #[test]
    fn finite_differences_agree_with_analytic() {
        let tol = Tolerances::default();
        for (m, l) in [
            (classical_qubit::<f64>(), vec![0.3]),
            (phase_qubit(), vec![0.4]),
            (qubit_tomography(), vec![0.2, -0.1, 0.3]),
        ] {
            let fd = m.clone().with_finite_differences(1e-5).evaluate(&l, &tol).unwrap();
            let an = m.evaluate(&l, &tol).unwrap();
            assert!(crate::model::max_derivative_deviation(&fd.drho, &an.drho) < 1e-8);
        }
    }

    #[test]
    fn pure_qubit_generators_at_origin() {
        let tol = Tolerances::default();
        let pt = pure_qubit_xy::<f64>().evaluate(&[0.0, 0.0], &tol).unwrap();
        let [sx, sy, _] = pauli::<f64>();
        let rho = pt.rho.matrix().clone();
        for (g, d) in [sx, sy].iter().zip(&pt.drho) {
            let want = (g * &rho - &rho * g) * Complex::new(0.0, -0.5);
            assert!(crate::operators::frobenius(&(d.matrix() - want)) < 1e-8);
        }
    }
}
