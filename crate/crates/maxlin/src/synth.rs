//! Deterministic seeded generation of regressors, ground truths, initial
//! estimates, and noise.
//!
//! Every draw comes from an explicitly seeded ChaCha12 stream; Gaussian
//! variates use the polar Box-Muller method. Determinism is within this
//! implementation, not across languages. The four synthetic ingredients use
//! sub-seeds derived from the master seed by fixed additive offsets, so e.g.
//! changing the noise level never changes the regressors of a paired trial.

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::model::{eval_max_linear, ParamBlocks};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

const REGRESSOR_OFFSET: u64 = 1;
const TRUTH_OFFSET: u64 = 2;
const NOISE_OFFSET: u64 = 3;
const PERTURBATION_OFFSET: u64 = 4;

/// A seeded stream of uniform and Gaussian draws.
#[derive(Debug, Clone)]
pub struct SeedStream {
    rng: ChaCha12Rng,
    spare_gaussian: Option<f64>,
}

impl SeedStream {
    pub fn new(seed: u64) -> Self {
        SeedStream {
            rng: ChaCha12Rng::seed_from_u64(seed),
            spare_gaussian: None,
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform draw in [0, 1) with 53 random bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal draw by the polar Box-Muller method (pairs are
    /// generated together; the spare is cached).
    pub fn next_gaussian(&mut self) -> f64 {
        if let Some(g) = self.spare_gaussian.take() {
            return g;
        }
        loop {
            let u = 2.0 * self.next_f64() - 1.0;
            let v = 2.0 * self.next_f64() - 1.0;
            let s = u * u + v * v;
            if s > 0.0 && s < 1.0 {
                let scale = (-2.0 * s.ln() / s).sqrt();
                self.spare_gaussian = Some(v * scale);
                return u * scale;
            }
        }
    }

    /// Uniform direction on the unit sphere in `R^p`.
    pub fn next_direction(&mut self, p: usize) -> Vec<f64> {
        loop {
            let g: Vec<f64> = (0..p).map(|_| self.next_gaussian()).collect();
            let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 1e-12 {
                return g.into_iter().map(|v| v / norm).collect();
            }
        }
    }
}

/// Derives a decorrelated sub-seed from a master seed and a list of tags
/// (cell indices, trial numbers, ...). SplitMix64 finalizer chain.
pub fn derive_seed(master: u64, tags: &[u64]) -> u64 {
    let mut h = master;
    for &t in tags {
        h = splitmix64(h ^ splitmix64(t.wrapping_add(0x9E3779B97F4A7C15)));
    }
    splitmix64(h)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E3779B97F4A7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// How the ground-truth blocks are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TruthKind {
    /// Blocks are scaled standard basis vectors `e_j / sqrt(k)`; requires
    /// `k <= p`. The concatenated vector has unit norm and the cones form a
    /// balanced partition.
    Basis,
    /// All `k*p` entries i.i.d. standard normal, then rescaled so the
    /// concatenated vector has unit norm.
    Gaussian,
}

/// Configuration for one synthetic instance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n: usize,
    pub p: usize,
    pub k: usize,
    pub truth_kind: TruthKind,
    /// Noise standard deviation.
    pub sigma: f64,
    /// Variance of the initializer perturbation; defaults to `1/(1000*k*p)`.
    #[serde(default)]
    pub perturbation_scale: Option<f64>,
    pub seed: u64,
}

impl SynthConfig {
    pub fn new(n: usize, p: usize, k: usize, truth_kind: TruthKind, sigma: f64, seed: u64) -> Self {
        SynthConfig {
            n,
            p,
            k,
            truth_kind,
            sigma,
            perturbation_scale: None,
            seed,
        }
    }

    pub fn perturbation_scale(&self) -> f64 {
        self.perturbation_scale
            .unwrap_or(1.0 / (1000.0 * (self.k * self.p) as f64))
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.p == 0 || self.k == 0 {
            return Err(Error::invalid("n, p, k must all be >= 1"));
        }
        if self.truth_kind == TruthKind::Basis && self.k > self.p {
            return Err(Error::invalid(format!(
                "basis truth requires k <= p, got k={} p={}",
                self.k, self.p
            )));
        }
        if self.sigma < 0.0 || !self.sigma.is_finite() {
            return Err(Error::invalid("sigma must be finite and >= 0"));
        }
        let scale = self.perturbation_scale();
        if scale < 0.0 || !scale.is_finite() {
            return Err(Error::invalid("perturbation_scale must be finite and >= 0"));
        }
        Ok(())
    }
}

/// i.i.d. standard normal regressor matrix, deterministic in
/// (seed, n, p) only.
pub fn gen_regressors(config: &SynthConfig) -> Result<DenseMatrix> {
    config.validate()?;
    let mut stream = SeedStream::new(config.seed.wrapping_add(REGRESSOR_OFFSET));
    let data: Vec<f64> = (0..config.n * config.p)
        .map(|_| stream.next_gaussian())
        .collect();
    DenseMatrix::from_vec(config.n, config.p, data)
}

/// Ground-truth blocks, normalized so the concatenated vector has unit norm.
pub fn gen_ground_truth(config: &SynthConfig) -> Result<ParamBlocks> {
    config.validate()?;
    let (k, p) = (config.k, config.p);
    match config.truth_kind {
        TruthKind::Basis => {
            let scale = 1.0 / (k as f64).sqrt();
            let mut beta = ParamBlocks::zeros(k, p)?;
            for j in 0..k {
                beta.block_mut(j)[j] = scale;
            }
            Ok(beta)
        }
        TruthKind::Gaussian => {
            let mut stream = SeedStream::new(config.seed.wrapping_add(TRUTH_OFFSET));
            let flat: Vec<f64> = (0..k * p).map(|_| stream.next_gaussian()).collect();
            let norm = flat.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm == 0.0 {
                return Err(Error::NonFinite("degenerate zero ground truth"));
            }
            ParamBlocks::from_flat(k, p, flat.into_iter().map(|v| v / norm).collect())
        }
    }
}

/// Initial estimate: the truth plus i.i.d. Gaussian entries of variance
/// `perturbation_scale`.
pub fn perturb_init(beta_star: &ParamBlocks, config: &SynthConfig) -> Result<ParamBlocks> {
    config.validate()?;
    let std = config.perturbation_scale().sqrt();
    let mut stream = SeedStream::new(config.seed.wrapping_add(PERTURBATION_OFFSET));
    let flat: Vec<f64> = beta_star
        .flat()
        .iter()
        .map(|&v| v + std * stream.next_gaussian())
        .collect();
    ParamBlocks::from_flat(beta_star.k(), beta_star.p(), flat)
}

/// Observations `y_i = max_j <x_i, beta_j> + w_i` with
/// `w_i ~ Normal(0, sigma^2)`; `sigma = 0` yields exactly zero noise.
pub fn gen_observations(
    x: &DenseMatrix,
    beta_star: &ParamBlocks,
    config: &SynthConfig,
) -> Result<(Vec<f64>, Vec<f64>)> {
    config.validate()?;
    if x.cols() != beta_star.p() {
        return Err(Error::dim("gen_observations", beta_star.p(), x.cols()));
    }
    let mut stream = SeedStream::new(config.seed.wrapping_add(NOISE_OFFSET));
    let n = x.rows();
    let mut y = Vec::with_capacity(n);
    let mut w = Vec::with_capacity(n);
    for i in 0..n {
        let wi = config.sigma * stream.next_gaussian();
        let (f, _) = eval_max_linear(x.row(i), beta_star)?;
        y.push(f + wi);
        w.push(wi);
    }
    Ok((y, w))
}

/// The residual budget `eta = (1/n) sum_i (-w_i)_+` computed from the
/// realized noise.
pub fn compute_eta(w: &[f64]) -> f64 {
    if w.is_empty() {
        return 0.0;
    }
    w.iter().map(|&wi| (-wi).max(0.0)).sum::<f64>() / w.len() as f64
}
