//! Incoherent point sources imaged through a 1D Gaussian point spread function.
//!
//! The image state `ρ = Σ_s w_s |ψ_s⟩⟨ψ_s|` with `ψ_s(x) = ψ(x − X_s)` and all
//! its position derivatives live in the span of `{ψ_s, ∂_X ψ_s}`, so the model is
//! represented exactly in an orthonormal basis of that span.

use crate::error::{QestError, Result};
use crate::model::{ModelPoint, StatisticalModel};
use crate::operators::{eig_symmetric, HermitianOperator};
use crate::scalar::{to_complex, RMatrix, Real};
use crate::tolerances::Tolerances;

/// `ψ(x) = (2πσ²)^{-1/4} exp(−x²/(4σ²))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianPsf<T: Real> {
    sigma: T,
}

impl<T: Real> GaussianPsf<T> {
    pub fn new(sigma: T) -> Result<Self> {
        if !(sigma > T::zero()) || !sigma.is_finite() {
            return Err(QestError::InvalidInput(format!("PSF width must be positive, got {sigma:e}")));
        }
        Ok(Self { sigma })
    }

    pub fn sigma(&self) -> T {
        self.sigma
    }

    pub fn amplitude(&self, x: T) -> T {
        let s2 = self.sigma * self.sigma;
        (T::two_pi() * s2).powf(T::lit(-0.25)) * (-(x * x) / (T::lit(4.0) * s2)).exp()
    }

    /// `ψ′(x)`.
    pub fn derivative(&self, x: T) -> T {
        -x / (T::lit(2.0) * self.sigma * self.sigma) * self.amplitude(x)
    }
}

/// Overlaps between shifted copies `ψ_a = ψ(· − x_a)`, `ψ_b = ψ(· − x_b)` and
/// their derivatives `ψ′_a = ψ′(· − x_a)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Overlaps<T: Real> {
    pub psi_psi: T,
    pub psi_dpsi: T,
    pub dpsi_dpsi: T,
}

pub fn gaussian_overlaps<T: Real>(psf: &GaussianPsf<T>, xa: T, xb: T) -> Overlaps<T> {
    let s2 = psf.sigma * psf.sigma;
    let delta = xa - xb;
    let e = (-(delta * delta) / (T::lit(8.0) * s2)).exp();
    Overlaps {
        psi_psi: e,
        psi_dpsi: -delta / (T::lit(4.0) * s2) * e,
        dpsi_dpsi: (s2 - delta * delta / T::lit(4.0)) / (T::lit(4.0) * s2 * s2) * e,
    }
}

/// Source positions and relative intensities.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceScene<T: Real> {
    positions: Vec<T>,
    weights: Vec<T>,
}

impl<T: Real> SourceScene<T> {
    pub fn new(positions: Vec<T>, weights: Vec<T>) -> Result<Self> {
        if positions.is_empty() || positions.len() != weights.len() {
            return Err(QestError::InvalidInput("scene needs matching non-empty positions and weights".into()));
        }
        if weights.iter().any(|w| !(*w >= T::zero())) {
            return Err(QestError::InvalidInput("source weights must be nonnegative".into()));
        }
        let total = weights.iter().fold(T::zero(), |a, w| a + *w);
        if (total - T::one()).abs() > T::lit(1e-12) {
            return Err(QestError::InvalidInput(format!("source weights sum to {total:e}, not 1")));
        }
        for i in 1..positions.len() {
            if !(positions[i] > positions[i - 1]) {
                return Err(QestError::InvalidInput("source positions must be strictly increasing".into()));
            }
        }
        Ok(Self { positions, weights })
    }

    /// `n` equal-intensity sources spaced by `spacing`, centred on zero.
    pub fn equally_spaced(n: usize, spacing: T) -> Result<Self> {
        let nn = T::from_count(n);
        let half = (nn - T::one()) * T::lit(0.5);
        let positions = (0..n).map(|k| (T::from_count(k) - half) * spacing).collect();
        Self::new(positions, vec![T::one() / nn; n])
    }

    /// Two sources at `∓ separation/2` with weights `(w₁, 1 − w₁)`.
    pub fn two_sources(separation: T, w1: T) -> Result<Self> {
        let h = separation * T::lit(0.5);
        Self::new(vec![-h, h], vec![w1, T::one() - w1])
    }

    pub fn positions(&self) -> &[T] {
        &self.positions
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}

/// Coordinates in which the scene is estimated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImagingParametrization {
    /// Two sources: `(c, s)` with `X₁ = c − s/2`, `X₂ = c + s/2`.
    CentroidSeparation,
    /// `N` sources: the mean position followed by the `N − 1` gaps `X_{μ+1} − X_μ`.
    Separations,
    /// The positions themselves.
    PositionsRaw,
    /// Two sources: `(c, s, w₁)` with `w₂ = 1 − w₁`.
    CentroidSeparationImbalance,
}

impl ImagingParametrization {
    pub fn param_dim(self, sources: usize) -> usize {
        match self {
            Self::CentroidSeparation => 2,
            Self::Separations | Self::PositionsRaw => sources,
            Self::CentroidSeparationImbalance => 3,
        }
    }

    fn check_sources(self, sources: usize) -> Result<()> {
        let ok = match self {
            Self::CentroidSeparation | Self::CentroidSeparationImbalance => sources == 2,
            Self::Separations | Self::PositionsRaw => sources >= 1,
        };
        if ok {
            Ok(())
        } else {
            Err(QestError::InvalidInput(format!("{self:?} does not apply to {sources} sources")))
        }
    }
}

/// Positions, weights and their Jacobians (`sources × params`) at `λ`.
#[derive(Debug, Clone)]
pub struct SceneGeometry<T: Real> {
    pub positions: Vec<T>,
    pub weights: Vec<T>,
    pub d_positions: RMatrix<T>,
    pub d_weights: RMatrix<T>,
}

fn geometry<T: Real>(
    param: ImagingParametrization,
    base_weights: &[T],
    lambda: &[T],
    sigma: T,
) -> Result<SceneGeometry<T>> {
    let n = base_weights.len();
    let d = param.param_dim(n);
    if lambda.len() != d {
        return Err(QestError::InvalidInput(format!("expected {d} imaging parameters, got {}", lambda.len())));
    }
    let half = T::lit(0.5);
    let mut dx = RMatrix::zeros(n, d);
    let mut dw = RMatrix::zeros(n, d);
    let mut weights = base_weights.to_vec();
    let positions: Vec<T> = match param {
        ImagingParametrization::CentroidSeparation | ImagingParametrization::CentroidSeparationImbalance => {
            let (c, s) = (lambda[0], lambda[1]);
            dx[(0, 0)] = T::one();
            dx[(1, 0)] = T::one();
            dx[(0, 1)] = -half;
            dx[(1, 1)] = half;
            if param == ImagingParametrization::CentroidSeparationImbalance {
                weights = vec![lambda[2], T::one() - lambda[2]];
                dw[(0, 2)] = T::one();
                dw[(1, 2)] = -T::one();
            }
            vec![c - s * half, c + s * half]
        }
        ImagingParametrization::Separations => {
            let nn = T::from_count(n);
            let mut x1 = lambda[0];
            for k in 1..n {
                x1 -= T::from_count(n - k) / nn * lambda[k];
            }
            let mut pos = vec![x1];
            for k in 1..n {
                pos.push(pos[k - 1] + lambda[k]);
            }
            for j in 0..n {
                dx[(j, 0)] = T::one();
                for k in 1..n {
                    let below = if k <= j { T::one() } else { T::zero() };
                    dx[(j, k)] = below - T::from_count(n - k) / nn;
                }
            }
            pos
        }
        ImagingParametrization::PositionsRaw => {
            for j in 0..n {
                dx[(j, j)] = T::one();
            }
            lambda.to_vec()
        }
    };
    for j in 1..n {
        if (positions[j] - positions[j - 1]).abs() <= T::lit(1e-12) * sigma {
            return Err(QestError::DegenerateScene(j - 1, j));
        }
    }
    Ok(SceneGeometry { positions, weights, d_positions: dx, d_weights: dw })
}

/// Parameter vector describing `scene` in the given coordinates.
pub fn scene_lambda<T: Real>(scene: &SourceScene<T>, param: ImagingParametrization) -> Result<Vec<T>> {
    param.check_sources(scene.len())?;
    let x = scene.positions();
    Ok(match param {
        ImagingParametrization::CentroidSeparation => vec![(x[0] + x[1]) * T::lit(0.5), x[1] - x[0]],
        ImagingParametrization::CentroidSeparationImbalance => {
            vec![(x[0] + x[1]) * T::lit(0.5), x[1] - x[0], scene.weights()[0]]
        }
        ImagingParametrization::Separations => {
            let mean = x.iter().fold(T::zero(), |a, v| a + *v) / T::from_count(x.len());
            let mut l = vec![mean];
            l.extend(x.windows(2).map(|w| w[1] - w[0]));
            l
        }
        ImagingParametrization::PositionsRaw => x.to_vec(),
    })
}

/// How the span of `{ψ_s, ∂ψ_s}` is given orthonormal coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SceneBasis {
    /// Eigendecomposition of the overlap (Gram) matrix; directions with
    /// eigenvalue below `gram_drop × largest` are discarded.
    Gram,
    /// Expansion over the first `q_max + 1` Hermite-Gauss modes of matched width.
    HermiteGauss { q_max: usize },
}

/// Coefficients of `ψ(x − X)` on Hermite-Gauss modes:
/// `c_q = e^{−α²/2} α^q / √q!` with `α = X/(2σ)`, together with `∂c_q/∂X`.
pub fn hg_coefficients<T: Real>(psf: &GaussianPsf<T>, x: T, q_max: usize) -> (Vec<T>, Vec<T>) {
    let alpha = x / (T::lit(2.0) * psf.sigma);
    let mut c = Vec::with_capacity(q_max + 1);
    c.push((-(alpha * alpha) * T::lit(0.5)).exp());
    for q in 1..=q_max {
        let prev = c[q - 1];
        c.push(prev * alpha / T::from_count(q).sqrt());
    }
    let scale = T::one() / (T::lit(2.0) * psf.sigma);
    let dc = (0..=q_max)
        .map(|q| {
            let down = if q > 0 { T::from_count(q).sqrt() * c[q - 1] } else { T::zero() };
            (down - alpha * c[q]) * scale
        })
        .collect();
    (c, dc)
}

/// Overlap matrix of `[ψ_1..ψ_N, ∂_Xψ_1..∂_Xψ_N]` (note `∂_X ψ_s = −ψ′_s`).
pub fn scene_gram<T: Real>(psf: &GaussianPsf<T>, positions: &[T]) -> RMatrix<T> {
    let n = positions.len();
    let mut g = RMatrix::zeros(2 * n, 2 * n);
    for a in 0..n {
        for b in 0..n {
            let o = gaussian_overlaps(psf, positions[a], positions[b]);
            g[(a, b)] = o.psi_psi;
            g[(a, n + b)] = -o.psi_dpsi;
            g[(n + a, b)] = -gaussian_overlaps(psf, positions[b], positions[a]).psi_dpsi;
            g[(n + a, n + b)] = o.dpsi_dpsi;
        }
    }
    (&g + g.transpose()) * T::lit(0.5)
}

/// Orthonormal coordinates (`K × 2N`) of `[ψ_s…, ∂ψ_s…]`.
fn coordinates<T: Real>(psf: &GaussianPsf<T>, positions: &[T], basis: SceneBasis, gram_drop: f64) -> RMatrix<T> {
    let n = positions.len();
    match basis {
        SceneBasis::Gram => {
            let g = scene_gram(psf, positions);
            let (vals, vecs) = eig_symmetric(&g);
            let top = vals[vals.len() - 1];
            let keep: Vec<usize> = (0..2 * n).rev().filter(|&k| vals[k] > T::lit(gram_drop) * top).collect();
            RMatrix::from_fn(keep.len(), 2 * n, |k, j| vals[keep[k]].sqrt() * vecs[(j, keep[k])])
        }
        SceneBasis::HermiteGauss { q_max } => {
            let mut c = RMatrix::zeros(q_max + 1, 2 * n);
            for (s, x) in positions.iter().enumerate() {
                let (coef, dcoef) = hg_coefficients(psf, *x, q_max);
                // negligible high-order coefficients are flushed so that no
                // subnormal numbers reach the eigensolvers
                let flush = |v: T| if v.abs() < T::lit(1e-40) { T::zero() } else { v };
                for q in 0..=q_max {
                    c[(q, s)] = flush(coef[q]);
                    c[(q, n + s)] = flush(dcoef[q]);
                }
            }
            c
        }
    }
}

/// `ρ` and `∂_μρ` as real matrices in a basis with coordinates `coords`.
fn scene_operators<T: Real>(coords: &RMatrix<T>, geo: &SceneGeometry<T>) -> (RMatrix<T>, Vec<RMatrix<T>>) {
    let n = geo.positions.len();
    let d = geo.d_positions.ncols();
    let col = |j: usize| coords.column(j).into_owned();
    let mut rho = RMatrix::zeros(coords.nrows(), coords.nrows());
    for s in 0..n {
        let v = col(s);
        rho += &v * v.transpose() * geo.weights[s];
    }
    let drho: Vec<RMatrix<T>> = (0..d)
        .map(|mu| {
            let mut m = RMatrix::zeros(coords.nrows(), coords.nrows());
            for s in 0..n {
                let v = col(s);
                let dv = col(n + s);
                let dw = geo.d_weights[(s, mu)];
                if dw != T::zero() {
                    m += &v * v.transpose() * dw;
                }
                let dx = geo.d_positions[(s, mu)];
                if dx != T::zero() {
                    let cross = &dv * v.transpose();
                    m += (&cross + cross.transpose()) * (geo.weights[s] * dx);
                }
            }
            m
        })
        .collect();
    // remove the trace lost to discarded directions, consistently for ρ and ∂ρ
    let t = rho.trace();
    let rho_n = &rho / t;
    let drho_n = drho.into_iter().map(|m: RMatrix<T>| (&m - &rho_n * m.trace()) / t).collect();
    (rho_n, drho_n)
}

/// A scene packaged as a statistical model.
#[derive(Debug, Clone)]
pub struct SceneModel<T: Real> {
    pub psf: GaussianPsf<T>,
    pub parametrization: ImagingParametrization,
    pub basis: SceneBasis,
    /// Parameters of the scene the model was built from.
    pub lambda: Vec<T>,
    /// Number of orthonormal directions kept at that scene.
    pub basis_dim: usize,
    /// Overlaps of `{ψ_s, ∂ψ_s}` at that scene.
    pub gram: RMatrix<T>,
    pub model: StatisticalModel<T>,
}

impl<T: Real> SceneModel<T> {
    pub fn point(&self, tol: &Tolerances) -> Result<ModelPoint<T>> {
        self.model.evaluate(&self.lambda, tol)
    }
}

/// Hermite-Gauss truncation that keeps the discarded weight of every source
/// within `|X| ≤ reach` below roughly `1e-16`.
pub fn hg_order_for<T: Real>(psf: &GaussianPsf<T>, reach: T) -> usize {
    let alpha = (reach / (T::lit(2.0) * psf.sigma)).as_f64().abs();
    let mean = alpha * alpha;
    (mean + 12.0 * alpha.max(1.0) + 30.0).ceil() as usize
}

pub fn build_scene_model<T: Real>(
    psf: GaussianPsf<T>,
    scene: &SourceScene<T>,
    param: ImagingParametrization,
    basis: SceneBasis,
    tol: &Tolerances,
) -> Result<SceneModel<T>> {
    param.check_sources(scene.len())?;
    let lambda = scene_lambda(scene, param)?;
    let n = scene.len();
    let d = param.param_dim(n);
    let sigma = psf.sigma;
    let big = T::lit(100.0) * sigma;
    let domain: Vec<(T, T)> = match param {
        ImagingParametrization::CentroidSeparation => vec![(-big, big), (T::zero(), big)],
        ImagingParametrization::CentroidSeparationImbalance => vec![(-big, big), (T::zero(), big), (T::zero(), T::one())],
        ImagingParametrization::Separations => {
            let mut v = vec![(-big, big)];
            v.extend(std::iter::repeat((T::zero(), big)).take(n - 1));
            v
        }
        ImagingParametrization::PositionsRaw => vec![(-big, big); d],
    };
    let gram_drop = tol.gram_drop;
    let geo0 = geometry(param, scene.weights(), &lambda, sigma)?;
    let gram = scene_gram(&psf, &geo0.positions);
    let coords0 = coordinates(&psf, &geo0.positions, basis, gram_drop);
    let basis_dim = coords0.nrows().min(2 * n);
    let base_weights = scene.weights().to_vec();

    let name = format!("{}-source-{:?}", n, param).to_lowercase();
    let model = match basis {
        SceneBasis::Gram => {
            // the frame follows λ, so the Hilbert dimension is the full span size
            // and unused directions are padded with zeros
            let dim = 2 * n;
            let build = move |l: &[T]| -> Result<(RMatrix<T>, Vec<RMatrix<T>>)> {
                let geo = geometry(param, &base_weights, l, sigma)?;
                let coords = coordinates(&psf, &geo.positions, basis, gram_drop);
                let (rho, drho) = scene_operators(&coords, &geo);
                Ok((pad(&rho, dim), drho.iter().map(|m| pad(m, dim)).collect()))
            };
            let b2 = build.clone();
            StatisticalModel::new(name, dim, domain, move |l: &[T]| Ok(to_complex(&build(l)?.0)))
                .with_analytic_derivatives(move |l: &[T]| Ok(b2(l)?.1.iter().map(to_complex).collect()))
                .with_local_frame()
        }
        SceneBasis::HermiteGauss { q_max } => {
            // mode coefficients are compressed onto the 2N-dimensional span by a
            // Householder QR, which keeps the tiny singular values of nearly
            // coincident sources accurate
            let dim = 2 * n;
            let compressed = move |l: &[T]| -> Result<(RMatrix<T>, SceneGeometry<T>)> {
                let geo = geometry(param, &base_weights, l, sigma)?;
                let lost = geo.positions.iter().map(|x| hg_tail(&psf, *x, q_max)).fold(T::zero(), |a, b| a.max(b));
                if lost > T::lit(1e-14) {
                    return Err(QestError::TailTooLarge(lost.as_f64()));
                }
                let coords = coordinates(&psf, &geo.positions, basis, gram_drop);
                Ok((pad_rows(&coords.qr().r(), dim), geo))
            };
            let (c1, c2) = (compressed.clone(), compressed.clone());
            StatisticalModel::new(name, dim, domain, move |l: &[T]| {
                let (r, geo) = compressed(l)?;
                Ok(to_complex(&scene_operators(&r, &geo).0))
            })
            .with_analytic_derivatives(move |l: &[T]| {
                let (r, geo) = c1(l)?;
                Ok(scene_operators(&r, &geo).1.iter().map(to_complex).collect())
            })
            .with_state_factor(move |l: &[T]| {
                let (r, geo) = c2(l)?;
                let mut f = RMatrix::from_fn(dim, n, |i, s| r[(i, s)] * geo.weights[s].sqrt());
                let t = f.norm_squared();
                f /= t.sqrt();
                Ok(to_complex(&f))
            })
            .with_local_frame()
        }
    };
    Ok(SceneModel { psf, parametrization: param, basis, lambda, basis_dim, gram, model })
}

fn pad_rows<T: Real>(m: &RMatrix<T>, rows: usize) -> RMatrix<T> {
    let mut out = RMatrix::zeros(rows, m.ncols());
    let k = m.nrows().min(rows);
    out.view_mut((0, 0), (k, m.ncols())).copy_from(&m.rows(0, k));
    out
}

fn pad<T: Real>(m: &RMatrix<T>, dim: usize) -> RMatrix<T> {
    let mut out = RMatrix::zeros(dim, dim);
    out.view_mut((0, 0), (m.nrows(), m.ncols())).copy_from(m);
    out
}

/// Weight of `ψ(· − x)` beyond mode `q_max`.
fn hg_tail<T: Real>(psf: &GaussianPsf<T>, x: T, q_max: usize) -> T {
    let alpha2 = (x / (T::lit(2.0) * psf.sigma)).powi(2);
    poisson_tail(alpha2, q_max)
}

/// `P[K > q_max]` for `K ~ Poisson(mean)`, summed directly from the upper terms.
fn poisson_tail<T: Real>(mean: T, q_max: usize) -> T {
    let mut term = (-mean).exp();
    for q in 1..=q_max + 1 {
        term *= mean / T::from_count(q);
    }
    let mut total = T::zero();
    let mut q = q_max + 1;
    while term > T::lit(1e-300) && q < q_max + 2000 {
        total += term;
        q += 1;
        term *= mean / T::from_count(q);
        if term < total * T::lit(1e-18) {
            break;
        }
    }
    total
}

/// Quadrature grid for direct imaging.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    /// Half width beyond the outermost sources, in units of σ.
    pub halfwidth_in_sigma: f64,
    /// Initial number of nodes; odd.
    pub points: usize,
}

impl Default for Grid {
    fn default() -> Self {
        Self { halfwidth_in_sigma: 10.0, points: 2001 }
    }
}

/// Fisher information of an ideal position-resolving detector,
/// `F_μν = ∫ ∂_μp ∂_νp / p dx` with `p(x) = Σ_s w_s |ψ(x − X_s)|²`, by composite
/// Simpson quadrature refined by doubling until converged.
pub fn direct_imaging_fi<T: Real>(
    psf: &GaussianPsf<T>,
    scene: &SourceScene<T>,
    param: ImagingParametrization,
    grid: Grid,
    tol: &Tolerances,
) -> Result<RMatrix<T>> {
    if grid.points < 1001 || grid.points % 2 == 0 || grid.halfwidth_in_sigma < 8.0 {
        return Err(QestError::InvalidInput("grid needs an odd number of at least 1001 points and halfwidth ≥ 8σ".into()));
    }
    let lambda = scene_lambda(scene, param)?;
    let geo = geometry(param, scene.weights(), &lambda, psf.sigma)?;
    let lo = geo.positions[0] - T::lit(grid.halfwidth_in_sigma) * psf.sigma;
    let hi = geo.positions[geo.positions.len() - 1] + T::lit(grid.halfwidth_in_sigma) * psf.sigma;
    let mut points = grid.points;
    let mut prev = simpson_fi(psf, &geo, lo, hi, points);
    for _ in 0..tol.grid_max_refinements {
        points = 2 * points - 1;
        let next = simpson_fi(psf, &geo, lo, hi, points);
        let scale = next.abs().max().max(T::lit(f64::MIN_POSITIVE));
        let change = (&next - &prev).abs().max() / scale;
        prev = next;
        if change < T::lit(tol.grid_convergence) {
            return Ok(prev);
        }
    }
    Err(QestError::GridUnconverged(tol.grid_max_refinements))
}

fn simpson_fi<T: Real>(psf: &GaussianPsf<T>, geo: &SceneGeometry<T>, lo: T, hi: T, points: usize) -> RMatrix<T> {
    let d = geo.d_positions.ncols();
    let n = geo.positions.len();
    let h = (hi - lo) / T::from_count(points - 1);
    let s2 = psf.sigma * psf.sigma;
    let mut f = RMatrix::zeros(d, d);
    let mut grad = vec![T::zero(); d];
    for k in 0..points {
        let x = lo + h * T::from_count(k);
        let mut p = T::zero();
        grad.iter_mut().for_each(|g| *g = T::zero());
        for s in 0..n {
            let u = x - geo.positions[s];
            let a = psf.amplitude(u);
            let dens = a * a;
            p += geo.weights[s] * dens;
            // ∂_X |ψ(x − X)|² = |ψ|² (x − X)/σ²
            let ddens = dens * u / s2;
            for (mu, g) in grad.iter_mut().enumerate() {
                *g += geo.d_weights[(s, mu)] * dens + geo.weights[s] * geo.d_positions[(s, mu)] * ddens;
            }
        }
        if !(p > T::zero()) {
            continue;
        }
        let wk = if k == 0 || k == points - 1 {
            T::one()
        } else if k % 2 == 1 {
            T::lit(4.0)
        } else {
            T::lit(2.0)
        };
        let c = wk / p;
        for mu in 0..d {
            for nu in mu..d {
                f[(mu, nu)] += c * grad[mu] * grad[nu];
            }
        }
    }
    for mu in 0..d {
        for nu in 0..mu {
            f[(mu, nu)] = f[(nu, mu)];
        }
    }
    f * (h / T::lit(3.0))
}

/// Mode-sorting (SPADE) statistics for two equal sources at `± s/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct HgModeFi<T: Real> {
    pub probabilities: Vec<T>,
    pub tail: T,
    pub f_separation: T,
}

/// Photon-counting statistics on Hermite-Gauss modes `0..=q_max` plus one
/// lumped tail outcome, with the centroid known and on the mode axis. The
/// counts are Poisson with mean `s²/(16σ²)`.
pub fn hg_mode_fi<T: Real>(psf: &GaussianPsf<T>, separation: T, q_max: usize, tol: &Tolerances) -> Result<HgModeFi<T>> {
    if q_max < 8 {
        return Err(QestError::InvalidInput("q_max must be at least 8".into()));
    }
    if !(separation >= T::zero()) {
        return Err(QestError::InvalidInput("separation must be nonnegative".into()));
    }
    let s2 = psf.sigma * psf.sigma;
    let mean = separation * separation / (T::lit(16.0) * s2);
    let dmean = separation / (T::lit(8.0) * s2);
    let mut probabilities = Vec::with_capacity(q_max + 1);
    let mut term = (-mean).exp();
    probabilities.push(term);
    for q in 1..=q_max {
        term *= mean / T::from_count(q);
        probabilities.push(term);
    }
    let tail = poisson_tail(mean, q_max);
    if tail > T::lit(tol.hg_tail) {
        return Err(QestError::TailTooLarge(tail.as_f64()));
    }
    let mut f = T::zero();
    for q in 0..=q_max {
        let p = probabilities[q];
        let dp = (if q > 0 { probabilities[q - 1] } else { T::zero() } - p) * dmean;
        if p > T::lit(1e-300) {
            f += dp * dp / p;
        }
    }
    if tail > T::lit(1e-300) {
        let dtail = probabilities[q_max] * dmean;
        f += dtail * dtail / tail;
    }
    Ok(HgModeFi { probabilities, tail, f_separation: f })
}

/// SPADE Fisher information for `(centroid, separation)` when the mode axis
/// sits at the origin but the centroid does not, for arbitrary weights.
pub fn hg_mode_fi_misaligned<T: Real>(
    psf: &GaussianPsf<T>,
    scene: &SourceScene<T>,
    q_max: usize,
    tol: &Tolerances,
) -> Result<RMatrix<T>> {
    let lambda = scene_lambda(scene, ImagingParametrization::CentroidSeparation)?;
    let geo = geometry(ImagingParametrization::CentroidSeparation, scene.weights(), &lambda, psf.sigma)?;
    let mut p = vec![T::zero(); q_max + 1];
    let mut dp = vec![[T::zero(); 2]; q_max + 1];
    let mut tail = T::zero();
    for s in 0..2 {
        let (c, dc) = hg_coefficients(psf, geo.positions[s], q_max);
        tail += geo.weights[s] * hg_tail(psf, geo.positions[s], q_max);
        for q in 0..=q_max {
            p[q] += geo.weights[s] * c[q] * c[q];
            for mu in 0..2 {
                dp[q][mu] += geo.weights[s] * T::lit(2.0) * c[q] * dc[q] * geo.d_positions[(s, mu)];
            }
        }
    }
    if tail > T::lit(tol.hg_tail) {
        return Err(QestError::TailTooLarge(tail.as_f64()));
    }
    let mut f = RMatrix::zeros(2, 2);
    for q in 0..=q_max {
        if p[q] > T::lit(1e-300) {
            for mu in 0..2 {
                for nu in 0..2 {
                    f[(mu, nu)] += dp[q][mu] * dp[q][nu] / p[q];
                }
            }
        }
    }
    Ok(f)
}

/// `ρ` and `∂ρ` wrapped as a model point directly from a scene.
pub fn scene_point<T: Real>(
    psf: GaussianPsf<T>,
    scene: &SourceScene<T>,
    param: ImagingParametrization,
    basis: SceneBasis,
    tol: &Tolerances,
) -> Result<ModelPoint<T>> {
    build_scene_model(psf, scene, param, basis, tol)?.point(tol)
}

/// Model point from explicit operators, used when the caller already has them.
pub fn point_from_real<T: Real>(lambda: Vec<T>, rho: &RMatrix<T>, drho: &[RMatrix<T>], tol: &Tolerances) -> Result<ModelPoint<T>> {
    let rho = crate::operators::DensityMatrix::with_tolerances(to_complex(rho), tol)?;
    let drho = drho.iter().map(|m| HermitianOperator::from_hermitian_part(&to_complex(m))).collect();
    ModelPoint::new(lambda, rho, drho, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::information::qfi_matrices;

    #[test]
    fn overlap_special_values() {
        let psf = GaussianPsf::new(1.3f64).unwrap();
        let o = gaussian_overlaps(&psf, 0.4, 0.4);
        assert!((o.psi_psi - 1.0).abs() < 1e-15 && o.psi_dpsi.abs() < 1e-15);
        let o = gaussian_overlaps(&psf, 2.0 * 1.3, 0.0);
        assert!((o.psi_psi - (-0.5f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn single_source_qfi() {
        let tol = Tolerances::default();
        let psf = GaussianPsf::new(0.7f64).unwrap();
        let scene = SourceScene::new(vec![0.2], vec![1.0]).unwrap();
        let pt = scene_point(psf, &scene, ImagingParametrization::PositionsRaw, SceneBasis::Gram, &tol).unwrap();
        let q = qfi_matrices(&pt, &tol).unwrap().q[(0, 0)];
        let o = gaussian_overlaps(&psf, 0.2, 0.2);
        let oracle = 4.0 * (o.dpsi_dpsi - o.psi_dpsi * o.psi_dpsi);
        assert!((q - oracle).abs() < 1e-10 && (q - 1.0 / 0.49).abs() < 1e-9);
    }

    #[test]
    fn gram_and_hermite_gauss_agree() {
        let tol = Tolerances::default();
        let psf = GaussianPsf::new(1.0f64).unwrap();
        for (n, s) in [(2, 0.3), (2, 2.0), (3, 0.5), (4, 0.8)] {
            let scene = SourceScene::equally_spaced(n, s).unwrap();
            let param = if n == 2 { ImagingParametrization::CentroidSeparation } else { ImagingParametrization::Separations };
            let q_max = hg_order_for(&psf, 5.0);
            let a = qfi_matrices(&scene_point(psf, &scene, param, SceneBasis::Gram, &tol).unwrap(), &tol).unwrap().q;
            let b = qfi_matrices(&scene_point(psf, &scene, param, SceneBasis::HermiteGauss { q_max }, &tol).unwrap(), &tol)
                .unwrap()
                .q;
            assert!((&a - &b).abs().max() < 1e-8 * a.abs().max(), "n={n} s={s}\n{a}\n{b}");
        }
    }

    #[test]
    fn two_source_qfi_is_diagonal_and_constant() {
        let tol = Tolerances::default();
        let psf = GaussianPsf::new(1.0f64).unwrap();
        for s in [0.05, 0.5, 1.0, 3.0] {
            let scene = SourceScene::equally_spaced(2, s).unwrap();
            let pt = scene_point(psf, &scene, ImagingParametrization::CentroidSeparation, SceneBasis::Gram, &tol).unwrap();
            let q = qfi_matrices(&pt, &tol).unwrap().q;
            assert!((q[(1, 1)] - 0.25).abs() < 1e-6 * 0.25, "s={s}: {}", q[(1, 1)]);
            assert!(q[(0, 1)].abs() < 1e-9);
        }
    }

    #[test]
    fn spade_matches_qfi() {
        let tol = Tolerances::default();
        let psf = GaussianPsf::new(1.0f64).unwrap();
        for s in [0.1, 0.5, 1.0, 2.0] {
            let r = hg_mode_fi(&psf, s, 30, &tol).unwrap();
            assert!((r.f_separation - 0.25).abs() < 1e-8 * 0.25);
        }
        let r = hg_mode_fi(&psf, 0.0, 10, &tol).unwrap();
        assert_eq!(r.probabilities[0], 1.0);
        assert!(matches!(hg_mode_fi(&psf, 8.0, 8, &tol), Err(QestError::TailTooLarge(_))));
    }

    #[test]
    fn degenerate_scene_rejected() {
        let tol = Tolerances::default();
        let psf = GaussianPsf::new(1.0f64).unwrap();
        let m = build_scene_model(
            psf,
            &SourceScene::equally_spaced(2, 1.0).unwrap(),
            ImagingParametrization::CentroidSeparation,
            SceneBasis::Gram,
            &tol,
        )
        .unwrap();
        assert!(matches!(m.model.evaluate(&[0.0, 0.0], &tol), Err(QestError::DegenerateScene(0, 1))));
    }
}
