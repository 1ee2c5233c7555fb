//! Gaussian Process regression with a scaled RBF kernel, exact inference via
//! Cholesky factorization, deterministic marginal-likelihood hyperparameter
//! search, and the LCB acquisition transform.
//!
//! One independent GP is trained per response, on inputs that concatenate the
//! min-max-normalized design variables with the normalized corner shift, so a
//! single model covers every corner.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rayon::prelude::*;

use crate::problem::{
    AlgoConfig, Corner, DesignPoint, Direction, Evaluation, ProblemSpec,
};
use crate::{Error, Result};

const JITTER_MAX: f64 = 1e-2;

#[derive(Debug, Clone)]
pub struct KernelParams {
    pub signal_variance: f64,
    /// One lengthscale per input dimension.
    pub lengthscales: Vec<f64>,
    pub noise_variance: f64,
}

impl KernelParams {
    pub fn isotropic(lengthscale: f64, signal_variance: f64, noise_variance: f64, dim: usize) -> Self {
        KernelParams {
            signal_variance,
            lengthscales: vec![lengthscale; dim],
            noise_variance,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = self.signal_variance > 0.0
            && self.signal_variance.is_finite()
            && self.noise_variance >= 0.0
            && self.noise_variance.is_finite()
            && self
                .lengthscales
                .iter()
                .all(|l| *l > 0.0 && l.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::Numeric("kernel parameters must be positive and finite".into()))
        }
    }

    fn k(&self, a: &[f64], b: &[f64]) -> f64 {
        let mut s = 0.0;
        for ((x, y), l) in a.iter().zip(b).zip(&self.lengthscales) {
            let d = (x - y) / l;
            s += d * d;
        }
        self.signal_variance * (-0.5 * s).exp()
    }
}

/// A fitted per-response GP. Inputs live in the unit cube, targets are
/// standardized internally and predictions de-standardized on the way out.
#[derive(Debug, Clone)]
pub struct GpModel {
    inputs: Vec<Vec<f64>>,
    target_mean: f64,
    target_std: f64,
    pub params: KernelParams,
    /// Lower Cholesky factor of K + noise*I (+ escalated jitter).
    factor_l: DMatrix<f64>,
    alpha: DVector<f64>,
}

fn cholesky_with_jitter(
    gram: &DMatrix<f64>,
    params: &KernelParams,
) -> Result<(Cholesky<f64, Dyn>, f64)> {
    let n = gram.nrows();
    let mut jitter = 1e-8 * gram.trace() / n as f64;
    if let Some(ch) = Cholesky::new(gram.clone()) {
        return Ok((ch, 0.0));
    }
    while jitter <= JITTER_MAX * params.signal_variance.max(1.0) {
        let mut g = gram.clone();
        for i in 0..n {
            g[(i, i)] += jitter;
        }
        if let Some(ch) = Cholesky::new(g) {
            return Ok((ch, jitter));
        }
        jitter *= 10.0;
    }
    Err(Error::NotPositiveDefinite)
}

fn gram_matrix(inputs: &[Vec<f64>], params: &KernelParams) -> DMatrix<f64> {
    let n = inputs.len();
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = params.k(&inputs[i], &inputs[j]);
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
        k[(i, i)] += params.noise_variance;
    }
    k
}

fn log_marginal_likelihood(
    inputs: &[Vec<f64>],
    targets: &DVector<f64>,
    params: &KernelParams,
) -> Option<f64> {
    let gram = gram_matrix(inputs, params);
    let (chol, _) = cholesky_with_jitter(&gram, params).ok()?;
    let alpha = chol.solve(targets);
    let n = inputs.len() as f64;
    let log_det_half: f64 = (0..inputs.len())
        .map(|i| chol.l_dirty()[(i, i)].ln())
        .sum();
    Some(-0.5 * targets.dot(&alpha) - log_det_half - 0.5 * n * (2.0 * std::f64::consts::PI).ln())
}

fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

/// Golden-section maximization of `f` over [lo, hi] in log space.
fn golden_refine<F: FnMut(f64) -> f64>(lo: f64, hi: f64, iters: usize, mut f: F) -> f64 {
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo.ln(), hi.ln());
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let mut fc = f(c.exp());
    let mut fd = f(d.exp());
    for _ in 0..iters {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = f(c.exp());
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = f(d.exp());
        }
    }
    if fc > fd { c.exp() } else { d.exp() }
}

/// Fits with hyperparameters chosen by maximizing the log marginal likelihood
/// over a coarse log grid (shared lengthscale, signal variance, noise)
/// followed by coordinate-wise golden-section refinement. The search runs on
/// at most `hyper_cap` most-recent points; the final factorization uses all
/// given points. Fully deterministic.
pub fn fit(inputs: &[Vec<f64>], targets: &[f64], hyper_cap: usize) -> Result<GpModel> {
    if inputs.len() < 2 {
        return Err(Error::Numeric("GP fit needs at least 2 points".into()));
    }
    let dim = inputs[0].len();
    let (mean, std) = standardize_stats(targets);
    let std_targets: Vec<f64> = targets.iter().map(|t| (t - mean) / std).collect();

    let start = inputs.len().saturating_sub(hyper_cap.max(2));
    let sub_inputs = &inputs[start..];
    let sub_targets = DVector::from_row_slice(&std_targets[start..]);

    let mut best = (1.0f64, 1.0f64, 1e-4f64);
    let mut best_lml = f64::NEG_INFINITY;
    for &ls in &logspace(0.05, 2.0, 5) {
        for &sv in &logspace(0.1, 10.0, 5) {
            for &nv in &logspace(1e-6, 1e-1, 5) {
                let p = KernelParams::isotropic(ls, sv, nv, dim);
                if let Some(lml) = log_marginal_likelihood(sub_inputs, &sub_targets, &p) {
                    if lml > best_lml {
                        best_lml = lml;
                        best = (ls, sv, nv);
                    }
                }
            }
        }
    }
    // Coordinate-wise refinement around the grid optimum.
    for _ in 0..2 {
        let (ls, sv, nv) = best;
        best.0 = golden_refine(ls / 3.0, ls * 3.0, 10, |x| {
            log_marginal_likelihood(
                sub_inputs,
                &sub_targets,
                &KernelParams::isotropic(x, best.1, best.2, dim),
            )
            .unwrap_or(f64::NEG_INFINITY)
        });
        best.1 = golden_refine(sv / 3.0, sv * 3.0, 10, |x| {
            log_marginal_likelihood(
                sub_inputs,
                &sub_targets,
                &KernelParams::isotropic(best.0, x, best.2, dim),
            )
            .unwrap_or(f64::NEG_INFINITY)
        });
        best.2 = golden_refine((nv / 3.0).max(1e-9), nv * 3.0, 10, |x| {
            log_marginal_likelihood(
                sub_inputs,
                &sub_targets,
                &KernelParams::isotropic(best.0, best.1, x, dim),
            )
            .unwrap_or(f64::NEG_INFINITY)
        });
    }

    let params = KernelParams::isotropic(best.0, best.1, best.2, dim);
    fit_standardized(inputs, &std_targets, mean, std, params)
}

/// Fits with fixed hyperparameters (no likelihood search).
pub fn fit_with_params(
    inputs: &[Vec<f64>],
    targets: &[f64],
    params: KernelParams,
) -> Result<GpModel> {
    if inputs.len() < 2 {
        return Err(Error::Numeric("GP fit needs at least 2 points".into()));
    }
    params.validate()?;
    let (mean, std) = standardize_stats(targets);
    let std_targets: Vec<f64> = targets.iter().map(|t| (t - mean) / std).collect();
    fit_standardized(inputs, &std_targets, mean, std, params)
}

fn standardize_stats(targets: &[f64]) -> (f64, f64) {
    let n = targets.len() as f64;
    let mean = targets.iter().sum::<f64>() / n;
    let var = targets.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt();
    (mean, if std > 1e-12 { std } else { 1.0 })
}

fn fit_standardized(
    inputs: &[Vec<f64>],
    std_targets: &[f64],
    target_mean: f64,
    target_std: f64,
    params: KernelParams,
) -> Result<GpModel> {
    let gram = gram_matrix(inputs, &params);
    let (chol, _) = cholesky_with_jitter(&gram, &params)?;
    let y = DVector::from_row_slice(std_targets);
    let alpha = chol.solve(&y);
    Ok(GpModel {
        inputs: inputs.to_vec(),
        target_mean,
        target_std,
        params,
        factor_l: chol.unpack(),
        alpha,
    })
}

impl GpModel {
    pub fn num_points(&self) -> usize {
        self.inputs.len()
    }

    /// Predictive mean and standard deviation at one query, in original
    /// target units. Queries outside the unit cube are clamped.
    pub fn posterior(&self, query: &[f64]) -> (f64, f64) {
        let (means, stds) = self.posterior_batch(std::slice::from_ref(&query.to_vec()));
        (means[0], stds[0])
    }

    /// Batched predictive means and standard deviations. Queries are split
    /// into chunks solved in parallel and reassembled in input order.
    pub fn posterior_batch(&self, queries: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
        const CHUNK: usize = 256;
        let per_chunk: Vec<(Vec<f64>, Vec<f64>)> = queries
            .par_chunks(CHUNK.max(1))
            .map(|chunk| self.posterior_chunk(chunk))
            .collect();
        let mut means = Vec::with_capacity(queries.len());
        let mut stds = Vec::with_capacity(queries.len());
        for (m, s) in per_chunk {
            means.extend(m);
            stds.extend(s);
        }
        (means, stds)
    }

    fn posterior_chunk(&self, queries: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
        let n = self.inputs.len();
        let q = queries.len();
        let mut kstar = DMatrix::zeros(n, q);
        for (j, query) in queries.iter().enumerate() {
            let clamped: Vec<f64> = query.iter().map(|v| v.clamp(0.0, 1.0)).collect();
            for i in 0..n {
                kstar[(i, j)] = self.params.k(&self.inputs[i], &clamped);
            }
        }
        let means_std = kstar.transpose() * &self.alpha;
        let v = self
            .factor_l
            .solve_lower_triangular(&kstar)
            .expect("triangular solve");
        let mut means = Vec::with_capacity(q);
        let mut stds = Vec::with_capacity(q);
        for j in 0..q {
            let reduction: f64 = (0..n).map(|i| v[(i, j)] * v[(i, j)]).sum();
            let var = (self.params.signal_variance - reduction).max(0.0);
            means.push(means_std[j] * self.target_std + self.target_mean);
            stds.push(var.sqrt() * self.target_std);
        }
        (means, stds)
    }
}

/// LCB transform: optimistic value per the response direction. Minimized
/// responses go low (mean - K*std), maximized responses go high.
pub fn lcb(mean: f64, std: f64, k: f64, direction: Direction) -> f64 {
    match direction {
        Direction::Minimize => mean - k * std,
        Direction::Maximize => mean + k * std,
    }
}

/// Maps (design, corner) pairs into the unit cube: design variables min-max
/// normalized by their bounds, corner shift components min-max normalized
/// over the corner set. Constant shift components encode to 0.
#[derive(Debug, Clone)]
pub struct InputEncoder {
    var_lo: Vec<f64>,
    var_range: Vec<f64>,
    shift_lo: Vec<f64>,
    shift_range: Vec<f64>,
}

impl InputEncoder {
    pub fn new(spec: &ProblemSpec) -> Self {
        let var_lo: Vec<f64> = spec.variables.iter().map(|v| v.lower).collect();
        let var_range: Vec<f64> = spec.variables.iter().map(|v| v.upper - v.lower).collect();
        let shift_dim = spec.corners[0].shift.len();
        let mut shift_lo = vec![f64::INFINITY; shift_dim];
        let mut shift_hi = vec![f64::NEG_INFINITY; shift_dim];
        for c in &spec.corners {
            for (k, &s) in c.shift.iter().enumerate() {
                shift_lo[k] = shift_lo[k].min(s);
                shift_hi[k] = shift_hi[k].max(s);
            }
        }
        let shift_range = shift_lo
            .iter()
            .zip(&shift_hi)
            .map(|(lo, hi)| hi - lo)
            .collect();
        InputEncoder {
            var_lo,
            var_range,
            shift_lo,
            shift_range,
        }
    }

    pub fn dim(&self) -> usize {
        self.var_lo.len() + self.shift_lo.len()
    }

    pub fn encode(&self, design: &DesignPoint, corner: &Corner) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.dim());
        for ((v, lo), range) in design.values.iter().zip(&self.var_lo).zip(&self.var_range) {
            out.push((v - lo) / range);
        }
        for ((s, lo), range) in corner.shift.iter().zip(&self.shift_lo).zip(&self.shift_range) {
            out.push(if *range > 0.0 { (s - lo) / range } else { 0.0 });
        }
        out
    }
}

/// One fitted GP per response, sharing the input encoding.
pub struct SurrogateSet {
    pub models: Vec<GpModel>,
    pub encoder: InputEncoder,
}

impl SurrogateSet {
    /// Trains one GP per response on every (design, corner) point of the
    /// given simulated records, retaining the `gp_train_cap` most recent
    /// training points. The per-response fits run in parallel and are
    /// assembled in response order.
    pub fn fit(
        records: &[(DesignPoint, Evaluation)],
        spec: &ProblemSpec,
        config: &AlgoConfig,
    ) -> Result<SurrogateSet> {
        let encoder = InputEncoder::new(spec);
        let mut inputs: Vec<Vec<f64>> = Vec::new();
        let mut targets: Vec<Vec<f64>> = vec![Vec::new(); spec.num_responses()];
        for (design, eval) in records {
            for (ci, corner) in spec.corners.iter().enumerate() {
                inputs.push(encoder.encode(design, corner));
                for r in 0..spec.num_responses() {
                    targets[r].push(eval.responses[r][ci]);
                }
            }
        }
        if inputs.len() > config.gp_train_cap {
            let cut = inputs.len() - config.gp_train_cap;
            inputs.drain(..cut);
            for t in &mut targets {
                t.drain(..cut);
            }
        }
        let models: Result<Vec<GpModel>> = targets
            .par_iter()
            .map(|t| fit(&inputs, t, config.gp_hyper_cap))
            .collect();
        Ok(SurrogateSet {
            models: models?,
            encoder,
        })
    }

    /// Predicts every design on every corner, producing one surrogate
    /// evaluation (mean and std matrices) per design.
    pub fn batch_predict(&self, designs: &[DesignPoint], spec: &ProblemSpec) -> Vec<Evaluation> {
        let c = spec.num_corners();
        let queries: Vec<Vec<f64>> = designs
            .iter()
            .flat_map(|d| spec.corners.iter().map(move |corner| self.encoder.encode(d, corner)))
            .collect();
        let per_response: Vec<(Vec<f64>, Vec<f64>)> = self
            .models
            .par_iter()
            .map(|m| m.posterior_batch(&queries))
            .collect();
        designs
            .iter()
            .enumerate()
            .map(|(di, _)| {
                let mut means = Vec::with_capacity(spec.num_responses());
                let mut stds = Vec::with_capacity(spec.num_responses());
                for (m, s) in &per_response {
                    means.push(m[di * c..(di + 1) * c].to_vec());
                    stds.push(s[di * c..(di + 1) * c].to_vec());
                }
                Evaluation::surrogate(means, stds)
            })
            .collect()
    }
}
