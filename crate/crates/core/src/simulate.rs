//! Monte-Carlo estimation: multinomial sampling of measurement outcomes,
//! maximum-likelihood estimation and the empirical mean-square-error matrix.
//!
//! Every repetition draws from its own ChaCha20 stream keyed by `(seed, index)`,
//! so results do not depend on the number of threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;

use crate::error::{QestError, Result};
use crate::information::{classical_fi, Povm};
use crate::model::{ModelPoint, StatisticalModel};
use crate::operators::spd_inverse;
use crate::scalar::RMatrix;
use crate::tolerances::Tolerances;

/// Generator for stream `stream` of `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutcomeSample {
    pub counts: Vec<u64>,
    pub m: u64,
    pub seed: u64,
}

/// Multinomial draw as a chain of conditional binomials.
pub fn multinomial<R: Rng + ?Sized>(probs: &[f64], m: u64, rng: &mut R) -> Vec<u64> {
    let clean: Vec<f64> = probs.iter().map(|p| if p.is_finite() { p.max(0.0) } else { 0.0 }).collect();
    let mut rest_mass: f64 = clean.iter().sum();
    let mut rest = m;
    let mut counts = vec![0; clean.len()];
    for (k, p) in clean.iter().enumerate() {
        if rest == 0 || rest_mass <= 0.0 {
            break;
        }
        let last = clean[k + 1..].iter().all(|q| *q == 0.0);
        let c = if last {
            rest
        } else {
            let q = (p / rest_mass).clamp(0.0, 1.0);
            Binomial::new(rest, q).expect("probability in [0, 1]").sample(rng)
        };
        counts[k] = c;
        rest -= c;
        rest_mass -= p;
    }
    counts
}

fn sample_from(pt: &ModelPoint<f64>, povm: &Povm<f64>, m: u64, seed: u64, stream: u64) -> Result<OutcomeSample> {
    if povm.dim() != pt.dim() {
        return Err(QestError::InvalidInput("POVM and state dimensions differ".into()));
    }
    let probs = povm.probabilities(pt.rho.matrix());
    let counts = multinomial(&probs, m, &mut stream_rng(seed, stream));
    Ok(OutcomeSample { counts, m, seed })
}

/// `M` outcomes of `povm` on the state at `pt`.
pub fn sample_outcomes(pt: &ModelPoint<f64>, povm: &Povm<f64>, m: u64, seed: u64) -> Result<OutcomeSample> {
    sample_from(pt, povm, m, seed, 0)
}

struct Likelihood<'a> {
    counts: &'a [u64],
    model: &'a StatisticalModel<f64>,
    povm: &'a Povm<f64>,
    tol: &'a Tolerances,
}

struct LocalFit {
    loglik: f64,
    score: Vec<f64>,
    fisher: RMatrix<f64>,
}

impl Likelihood<'_> {
    fn loglik(&self, lambda: &[f64]) -> f64 {
        let Ok(rho) = self.model.state_matrix(lambda) else { return f64::NEG_INFINITY };
        let probs = self.povm.probabilities(&rho);
        self.sum_log(&probs)
    }

    fn sum_log(&self, probs: &[f64]) -> f64 {
        let mut l = 0.0;
        for (n, p) in self.counts.iter().zip(probs) {
            if *n > 0 {
                if *p <= 0.0 {
                    return f64::NEG_INFINITY;
                }
                l += *n as f64 * p.ln();
            }
        }
        l
    }

    fn local(&self, lambda: &[f64]) -> Result<LocalFit> {
        let pt = self.model.evaluate(lambda, self.tol)?;
        let probs = self.povm.probabilities(pt.rho.matrix());
        let grads: Vec<Vec<f64>> = pt.drho.iter().map(|d| self.povm.probabilities(d.matrix())).collect();
        let mut score = vec![0.0; lambda.len()];
        for (k, n) in self.counts.iter().enumerate() {
            if *n > 0 && probs[k] > 0.0 {
                for (s, g) in score.iter_mut().zip(&grads) {
                    *s += *n as f64 * g[k] / probs[k];
                }
            }
        }
        let d = lambda.len();
        let mut fisher = RMatrix::zeros(d, d);
        for (k, p) in probs.iter().enumerate() {
            if *p > self.tol.prob_floor {
                for a in 0..d {
                    for b in 0..d {
                        fisher[(a, b)] += grads[a][k] * grads[b][k] / p;
                    }
                }
            }
        }
        Ok(LocalFit { loglik: self.sum_log(&probs), score, fisher })
    }
}

/// Zeroes components that would push `λ` out of the box.
fn project_direction(model: &StatisticalModel<f64>, lambda: &[f64], dir: &mut [f64]) {
    for (i, (lo, hi)) in model.domain().iter().enumerate() {
        if (lambda[i] <= *lo && dir[i] < 0.0) || (lambda[i] >= *hi && dir[i] > 0.0) {
            dir[i] = 0.0;
        }
    }
}

/// Box-projected Fisher-scoring ascent from one start. Returns the end point,
/// its log-likelihood and whether the score criterion was met.
fn ascend(lik: &Likelihood, start: &[f64], m: f64) -> Result<(Vec<f64>, f64, bool)> {
    let model = lik.model;
    let mut lambda = start.to_vec();
    model.project(&mut lambda);
    let gtol = lik.tol.mle_grad * m;
    for _ in 0..lik.tol.mle_max_iter {
        let fit = lik.local(&lambda)?;
        let mut g = fit.score.clone();
        project_direction(model, &lambda, &mut g);
        if g.iter().all(|x| x.abs() <= gtol) {
            return Ok((lambda, fit.loglik, true));
        }
        let mut dir: Vec<f64> = match spd_inverse(&(fit.fisher * m), lik.tol.qfi_condition) {
            Ok(inv) => (0..g.len()).map(|a| (0..g.len()).map(|b| inv[(a, b)] * g[b]).sum()).collect(),
            Err(_) => g.iter().map(|x| x / m).collect(),
        };
        project_direction(model, &lambda, &mut dir);
        let slope: f64 = dir.iter().zip(&g).map(|(a, b)| a * b).sum();
        let mut t = 1.0;
        let mut moved = false;
        for _ in 0..60 {
            let mut trial: Vec<f64> = lambda.iter().zip(&dir).map(|(x, d)| x + t * d).collect();
            model.project(&mut trial);
            let l = lik.loglik(&trial);
            if l.is_finite() && l >= fit.loglik + 1e-4 * t * slope {
                lambda = trial;
                moved = true;
                break;
            }
            t *= 0.5;
        }
        if !moved {
            // no representable improvement left along the ascent direction
            let done = g.iter().all(|x| x.abs() <= 1e3 * gtol);
            return Ok((lambda, fit.loglik, done));
        }
    }
    let l = lik.loglik(&lambda);
    Ok((lambda, l, false))
}

/// Maximum-likelihood estimate from `lambda0` and four perturbed starts; the
/// highest converged likelihood wins, earlier starts on ties.
pub fn mle(
    sample: &OutcomeSample,
    model: &StatisticalModel<f64>,
    povm: &Povm<f64>,
    lambda0: &[f64],
    tol: &Tolerances,
) -> Result<Vec<f64>> {
    model.check_domain(lambda0)?;
    if sample.counts.len() != povm.len() {
        return Err(QestError::InvalidInput("sample and POVM have different outcome counts".into()));
    }
    let lik = Likelihood { counts: &sample.counts, model, povm, tol };
    if !lik.loglik(lambda0).is_finite() {
        return Err(QestError::InvalidInput("likelihood is not finite at the starting point".into()));
    }
    let mut rng = stream_rng(sample.seed ^ 0x6d6c_6573_7461_7274, sample.counts.iter().sum());
    let mut starts = vec![lambda0.to_vec()];
    for _ in 1..tol.mle_starts.max(1) {
        let s: Vec<f64> = lambda0
            .iter()
            .zip(model.domain())
            .map(|(x, (lo, hi))| x + 0.01 * (hi - lo) * (2.0 * rng.random::<f64>() - 1.0))
            .collect();
        starts.push(s);
    }
    let mut best: Option<(Vec<f64>, f64)> = None;
    for s in &starts {
        let Ok((x, l, ok)) = ascend(&lik, s, sample.m as f64) else { continue };
        if ok && best.as_ref().is_none_or(|(_, bl)| l > *bl) {
            best = Some((x, l));
        }
    }
    best.map(|b| b.0).ok_or(QestError::NonConvergent(tol.mle_max_iter))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorRun {
    pub estimates: Vec<Vec<f64>>,
    /// Mean of `(λ̂ − λ)(λ̂ − λ)ᵀ` over repetitions.
    pub v_hat: RMatrix<f64>,
    pub r: usize,
    pub m: u64,
    pub lambda_true: Vec<f64>,
}

fn outer_mean(estimates: &[&Vec<f64>], lambda: &[f64]) -> RMatrix<f64> {
    let d = lambda.len();
    let mut v = RMatrix::zeros(d, d);
    for e in estimates {
        for a in 0..d {
            for b in 0..d {
                v[(a, b)] += (e[a] - lambda[a]) * (e[b] - lambda[b]);
            }
        }
    }
    v / estimates.len().max(1) as f64
}

/// `R` independent sample-and-estimate repetitions at `lambda_true`.
pub fn empirical_mse(
    model: &StatisticalModel<f64>,
    povm: &Povm<f64>,
    lambda_true: &[f64],
    m: u64,
    r: usize,
    seed: u64,
    tol: &Tolerances,
) -> Result<EstimatorRun> {
    if r == 0 || m == 0 {
        return Err(QestError::InvalidInput("need at least one repetition and one shot".into()));
    }
    let pt = model.evaluate(lambda_true, tol)?;
    let estimates = (0..r)
        .into_par_iter()
        .map(|rep| {
            let mut s = sample_from(&pt, povm, m, seed, rep as u64)?;
            s.seed = seed.wrapping_add(rep as u64);
            mle(&s, model, povm, lambda_true, tol)
        })
        .collect::<Result<Vec<_>>>()?;
    let refs: Vec<&Vec<f64>> = estimates.iter().collect();
    let v_hat = outer_mean(&refs, lambda_true);
    Ok(EstimatorRun { estimates, v_hat, r, m, lambda_true: lambda_true.to_vec() })
}

/// Bootstrap summary of a run, everything scaled by `M`.
#[derive(Debug, Clone, PartialEq)]
pub struct MseSummary {
    /// `M·V̂`.
    pub scaled_v: RMatrix<f64>,
    /// Bootstrap standard errors of the entries of `M·V̂`.
    pub scaled_v_se: RMatrix<f64>,
    pub scaled_trace: f64,
    pub scaled_trace_se: f64,
    /// `mean(λ̂) − λ` and its standard error.
    pub bias: Vec<f64>,
    pub bias_se: Vec<f64>,
}

pub fn summarize(run: &EstimatorRun, resamples: usize, seed: u64) -> MseSummary {
    let m = run.m as f64;
    let d = run.lambda_true.len();
    let n = run.estimates.len();
    let mut rng = stream_rng(seed, u64::MAX);
    let mut acc = RMatrix::zeros(d, d);
    let mut acc2 = RMatrix::zeros(d, d);
    let (mut t1, mut t2) = (0.0, 0.0);
    let b = resamples.max(2);
    for _ in 0..b {
        let pick: Vec<&Vec<f64>> = (0..n).map(|_| &run.estimates[rng.random_range(0..n)]).collect();
        let v = outer_mean(&pick, &run.lambda_true) * m;
        acc += &v;
        acc2 += v.component_mul(&v);
        let t = v.trace();
        t1 += t;
        t2 += t * t;
    }
    let bf = b as f64;
    let var = |s: f64, s2: f64| ((s2 - s * s / bf) / (bf - 1.0)).max(0.0).sqrt();
    let scaled_v_se = RMatrix::from_fn(d, d, |i, j| var(acc[(i, j)], acc2[(i, j)]));
    let mut bias = vec![0.0; d];
    let mut bias_se = vec![0.0; d];
    for a in 0..d {
        let xs: Vec<f64> = run.estimates.iter().map(|e| e[a] - run.lambda_true[a]).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let sd = if n > 1 { (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0)).sqrt() } else { 0.0 };
        bias[a] = mean;
        bias_se[a] = sd / (n as f64).sqrt();
    }
    MseSummary {
        scaled_v: &run.v_hat * m,
        scaled_v_se,
        scaled_trace: run.v_hat.trace() * m,
        scaled_trace_se: var(t1, t2),
        bias,
        bias_se,
    }
}

/// `F⁻¹` of the measurement at `lambda`.
pub fn fisher_inverse(model: &StatisticalModel<f64>, povm: &Povm<f64>, lambda: &[f64], tol: &Tolerances) -> Result<RMatrix<f64>> {
    let pt = model.evaluate(lambda, tol)?;
    spd_inverse(&classical_fi(&pt, povm, tol)?, tol.qfi_condition)
}
