//! The max-linear model: parameter blocks, evaluation, subgradients, the
//! polyhedral cone partition, norms, and the objective functions used by the
//! estimators.

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

/// A `k`-block parameter vector `beta = [beta_1; ...; beta_k]` with each
/// block in `R^p`, stored as one contiguous `k*p` vector so that anchor and
/// LP assembly can use the flat layout directly.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamBlocks {
    k: usize,
    p: usize,
    flat: Vec<f64>,
}

impl ParamBlocks {
    /// Builds from the flat `k*p` layout `[block_1; block_2; ...]`.
    pub fn from_flat(k: usize, p: usize, flat: Vec<f64>) -> Result<Self> {
        if k == 0 || p == 0 {
            return Err(Error::invalid("ParamBlocks requires k >= 1 and p >= 1"));
        }
        match k.checked_mul(p) {
            Some(expected) if expected == flat.len() => {}
            Some(expected) => {
                return Err(Error::dim("ParamBlocks::from_flat", expected, flat.len()))
            }
            None => return Err(Error::invalid("k * p overflows")),
        }
        if !flat.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("ParamBlocks entries"));
        }
        Ok(ParamBlocks { k, p, flat })
    }

    /// Builds from `k` blocks of equal length `p`.
    pub fn from_blocks(blocks: &[Vec<f64>]) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::invalid("ParamBlocks requires at least one block"));
        }
        let p = blocks[0].len();
        let mut flat = Vec::with_capacity(blocks.len() * p);
        for b in blocks {
            if b.len() != p {
                return Err(Error::dim("ParamBlocks::from_blocks", p, b.len()));
            }
            flat.extend_from_slice(b);
        }
        Self::from_flat(blocks.len(), p, flat)
    }

    pub fn zeros(k: usize, p: usize) -> Result<Self> {
        Self::from_flat(k, p, vec![0.0; k * p])
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// Block `j` (0-based) as a slice of length `p`.
    pub fn block(&self, j: usize) -> &[f64] {
        &self.flat[j * self.p..(j + 1) * self.p]
    }

    pub fn blocks(&self) -> impl Iterator<Item = &[f64]> {
        self.flat.chunks_exact(self.p)
    }

    /// The contiguous `k*p` layout.
    pub fn flat(&self) -> &[f64] {
        &self.flat
    }

    pub(crate) fn block_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.flat[j * self.p..(j + 1) * self.p]
    }

    /// Euclidean norm of the flat `k*p` vector.
    pub fn flat_norm(&self) -> f64 {
        self.flat.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// A regression sample: regressor rows `x_i`, observations `y_i`, and, for
/// synthetic data, the realized noise `w_i` with `y_i - w_i` equal to the
/// max-linear value at `x_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: DenseMatrix,
    y: Vec<f64>,
    w: Option<Vec<f64>>,
}

impl Dataset {
    pub fn new(x: DenseMatrix, y: Vec<f64>, w: Option<Vec<f64>>) -> Result<Self> {
        if y.len() != x.rows() {
            return Err(Error::dim("Dataset observations", x.rows(), y.len()));
        }
        if let Some(w) = &w {
            if w.len() != x.rows() {
                return Err(Error::dim("Dataset noise", x.rows(), w.len()));
            }
            if !w.iter().all(|v| v.is_finite()) {
                return Err(Error::NonFinite("Dataset noise"));
            }
        }
        if !y.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("Dataset observations"));
        }
        Ok(Dataset { x, y, w })
    }

    pub fn n(&self) -> usize {
        self.x.rows()
    }

    pub fn p(&self) -> usize {
        self.x.cols()
    }

    pub fn x(&self) -> &DenseMatrix {
        &self.x
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.x.row(i)
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn w(&self) -> Option<&[f64]> {
        self.w.as_deref()
    }
}

fn check_dims(x: &[f64], beta: &ParamBlocks, context: &'static str) -> Result<()> {
    if x.len() != beta.p() {
        return Err(Error::dim(context, beta.p(), x.len()));
    }
    Ok(())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| u * v).sum()
}

/// Value of the max-linear function `max_j <x, beta_j>` together with the
/// achieving component. Ties break to the lowest index so that the cone
/// partition is a deterministic function of its inputs.
pub fn eval_max_linear(x: &[f64], beta: &ParamBlocks) -> Result<(f64, usize)> {
    check_dims(x, beta, "eval_max_linear")?;
    let mut best = f64::NEG_INFINITY;
    let mut arg = 0;
    for (j, block) in beta.blocks().enumerate() {
        let v = dot(x, block);
        if v > best {
            best = v;
            arg = j;
        }
    }
    Ok((best, arg))
}

/// Subgradient of `beta -> max_j <x, beta_j>`: zero except for the argmax
/// block, which carries `x`.
pub fn subgradient(x: &[f64], beta: &ParamBlocks) -> Result<ParamBlocks> {
    let (_, arg) = eval_max_linear(x, beta)?;
    let mut g = ParamBlocks::zeros(beta.k(), beta.p())?;
    g.block_mut(arg).copy_from_slice(x);
    Ok(g)
}

/// Index of the polyhedral cone containing `x`: the `j` with
/// `<x, beta_j - beta_l> >= 0` for every other `l`, i.e. the argmax component.
pub fn cone_index(x: &[f64], beta: &ParamBlocks) -> Result<usize> {
    Ok(eval_max_linear(x, beta)?.1)
}

/// The l_{1,2} norm: sum over blocks of the block Euclidean norms.
pub fn norm_12(z: &ParamBlocks) -> f64 {
    z.blocks()
        .map(|b| b.iter().map(|v| v * v).sum::<f64>().sqrt())
        .sum()
}

fn check_data_dims(beta: &ParamBlocks, data: &Dataset, context: &'static str) -> Result<()> {
    if data.p() != beta.p() {
        return Err(Error::dim(context, beta.p(), data.p()));
    }
    Ok(())
}

/// Mean absolute deviation `(1/n) sum_i |f_i(beta) - y_i|`.
pub fn lad_objective(beta: &ParamBlocks, data: &Dataset) -> Result<f64> {
    check_data_dims(beta, data, "lad_objective")?;
    let n = data.n();
    let mut total = 0.0;
    for i in 0..n {
        let (f, _) = eval_max_linear(data.row(i), beta)?;
        total += (f - data.y()[i]).abs();
    }
    Ok(total / n as f64)
}

/// Mean positive part of the residuals `(1/n) sum_i (f_i(beta) - y_i)_+`,
/// the quantity the convex estimator's budget constrains.
pub fn positive_residual_objective(beta: &ParamBlocks, data: &Dataset) -> Result<f64> {
    check_data_dims(beta, data, "positive_residual_objective")?;
    let n = data.n();
    let mut total = 0.0;
    for i in 0..n {
        let (f, _) = eval_max_linear(data.row(i), beta)?;
        total += (f - data.y()[i]).max(0.0);
    }
    Ok(total / n as f64)
}

/// Normalized estimation error
/// `sum_j ||bhat_j - bstar_j||_2 / sum_j ||bstar_j||_2`, with blocks compared
/// in fixed index order (no permutation matching).
pub fn normalized_error(beta_hat: &ParamBlocks, beta_star: &ParamBlocks) -> Result<f64> {
    if beta_hat.k() != beta_star.k() || beta_hat.p() != beta_star.p() {
        return Err(Error::dim(
            "normalized_error",
            beta_star.k() * beta_star.p(),
            beta_hat.k() * beta_hat.p(),
        ));
    }
    let denom = norm_12(beta_star);
    if denom == 0.0 {
        return Err(Error::ZeroNormTruth);
    }
    let mut num = 0.0;
    for (bh, bs) in beta_hat.blocks().zip(beta_star.blocks()) {
        num += bh
            .iter()
            .zip(bs)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
    }
    Ok(num / denom)
}
