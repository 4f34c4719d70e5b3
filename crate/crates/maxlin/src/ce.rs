//! The anchored convex estimator: anchor construction, LP assembly, solve,
//! and extraction of the estimate.
//!
//! The estimator maximizes `<theta, beta>` subject to the one-sided residual
//! budget `(1/n) sum_i (f_i(beta) - y_i)_+ <= eta`, written as a linear
//! program over `(beta, t)` with `n*k` residual rows and one budget row.
//!
//! [`fit_ce`] solves that LP through its dual, which has only `k*p + n` rows
//! (`sum_i lambda_ij x_i = theta_j` per block and `sum_j lambda_ij <= mu` per
//! sample) instead of `n*k + 1`, a large saving since the basis factorization
//! cost grows with the row count. The primal estimate is recovered from the
//! equality-row multipliers and certified against the primal problem: the
//! residual budget must hold and the primal and dual objectives must agree.
//! With an anchor built from the same regressors the dual is always feasible
//! (`lambda_{i, argmax block} = 1/(2n)`, `mu = 1/(2n)` satisfies it), so a
//! dual-infeasible outcome is a numerical failure, while a dual-unbounded
//! outcome certifies an infeasible budget.

use crate::error::{Error, LpFailure, Result};
use crate::linalg::DenseMatrix;
use crate::lp::{
    solve_sparse, LpProblem, LpStatus, Sense, SolveOptions, SparseLp, VarBounds,
};
use crate::model::{cone_index, eval_max_linear, ParamBlocks};

/// The anchor vector: the average half-subgradient of the observation
/// functions at the initial estimate, with the same block structure as the
/// parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct AnchorVector {
    theta: ParamBlocks,
}

impl AnchorVector {
    pub fn theta(&self) -> &ParamBlocks {
        &self.theta
    }

    pub fn k(&self) -> usize {
        self.theta.k()
    }

    pub fn p(&self) -> usize {
        self.theta.p()
    }
}

/// `theta = (1/2n) sum_i subgradient(x_i, beta_tilde)`; block `j` collects
/// the mean of the regressors whose argmax cone under `beta_tilde` is `j`,
/// halved.
pub fn build_anchor(x: &DenseMatrix, beta_tilde: &ParamBlocks) -> Result<AnchorVector> {
    if x.cols() != beta_tilde.p() {
        return Err(Error::dim("build_anchor", beta_tilde.p(), x.cols()));
    }
    let n = x.rows();
    let mut theta = ParamBlocks::zeros(beta_tilde.k(), beta_tilde.p())?;
    for i in 0..n {
        let row = x.row(i);
        let j = cone_index(row, beta_tilde)?;
        let block = theta.block_mut(j);
        for (t, v) in block.iter_mut().zip(row) {
            *t += v;
        }
    }
    let scale = 1.0 / (2.0 * n as f64);
    let flat: Vec<f64> = theta.flat().iter().map(|v| v * scale).collect();
    Ok(AnchorVector {
        theta: ParamBlocks::from_flat(beta_tilde.k(), beta_tilde.p(), flat)?,
    })
}

/// Assembles the estimator LP over variables `(beta in R^{kp} free,
/// t in R^n >= 0)`: maximize `<theta, beta>` subject to
/// `<x_i, beta_j> - t_i <= y_i` for every `(i, j)` (row index `i*k + j`) and
/// `sum_i t_i <= n * eta` (last row).
pub fn assemble_lp(
    x: &DenseMatrix,
    y: &[f64],
    theta: &AnchorVector,
    eta: f64,
) -> Result<LpProblem> {
    if eta < 0.0 || !eta.is_finite() {
        return Err(Error::invalid("eta must be finite and >= 0"));
    }
    if x.cols() != theta.p() {
        return Err(Error::dim("assemble_lp regressors", theta.p(), x.cols()));
    }
    let n = x.rows();
    if y.len() != n {
        return Err(Error::dim("assemble_lp observations", n, y.len()));
    }
    let k = theta.k();
    let p = theta.p();
    let kp = k * p;
    let num_vars = kp + n;

    let mut objective = vec![0.0; num_vars];
    objective[..kp].copy_from_slice(theta.theta().flat());

    let mut bounds = vec![VarBounds::free(); kp];
    bounds.extend(std::iter::repeat_n(VarBounds::nonnegative(), n));

    let mut problem = LpProblem::with_bounds(objective, bounds);
    for i in 0..n {
        for j in 0..k {
            let mut row = vec![0.0; num_vars];
            row[j * p..(j + 1) * p].copy_from_slice(x.row(i));
            row[kp + i] = -1.0;
            problem.add_constraint(row, Sense::Le, y[i]);
        }
    }
    let mut budget = vec![0.0; num_vars];
    for slot in &mut budget[kp..] {
        *slot = 1.0;
    }
    problem.add_constraint(budget, Sense::Le, n as f64 * eta);
    Ok(problem)
}

/// Outcome of a convex-estimator fit.
#[derive(Debug, Clone)]
pub struct CeFitResult {
    pub beta_hat: ParamBlocks,
    pub lp_status: LpStatus,
    /// `<theta, beta_hat>` at the optimum.
    pub objective: f64,
    /// `(1/n) sum_i t_i` at the optimum with `t_i = (f_i(beta_hat) - y_i)_+`.
    pub residual_budget_used: f64,
    pub solve_iterations: usize,
}

/// Builds the dual of the estimator LP in sparse form. Variables are
/// `lambda_{ij}` (index `i*k + j`) and `mu` (last); rows are the `k*p`
/// anchor-matching equalities followed by the `n` coupling rows.
fn assemble_dual(x: &DenseMatrix, y: &[f64], theta: &AnchorVector, eta: f64) -> SparseLp {
    let n = x.rows();
    let k = theta.k();
    let p = theta.p();
    let num_vars = n * k + 1;
    let mu = n * k;

    let mut objective = vec![0.0; num_vars];
    for i in 0..n {
        for j in 0..k {
            objective[i * k + j] = -y[i];
        }
    }
    objective[mu] = -(n as f64) * eta;

    let mut rows = Vec::with_capacity(k * p + n);
    for j in 0..k {
        for c in 0..p {
            let coeffs: Vec<(u32, f64)> = (0..n)
                .filter(|&i| x.get(i, c) != 0.0)
                .map(|i| ((i * k + j) as u32, x.get(i, c)))
                .collect();
            rows.push((coeffs, Sense::Eq, theta.theta().block(j)[c]));
        }
    }
    for i in 0..n {
        let mut coeffs: Vec<(u32, f64)> = (0..k).map(|j| ((i * k + j) as u32, 1.0)).collect();
        coeffs.push((mu as u32, -1.0));
        rows.push((coeffs, Sense::Le, 0.0));
    }

    SparseLp {
        num_vars,
        objective,
        rows,
        bounds: vec![VarBounds::nonnegative(); num_vars],
    }
}

/// Fits the convex estimator: builds the anchor at `beta_tilde`, solves the
/// budgeted LP, and returns the extracted estimate with its certificates.
pub fn fit_ce(
    x: &DenseMatrix,
    y: &[f64],
    beta_tilde: &ParamBlocks,
    eta: f64,
    tol: f64,
) -> Result<CeFitResult> {
    if eta < 0.0 || !eta.is_finite() {
        return Err(Error::invalid("eta must be finite and >= 0"));
    }
    if x.cols() != beta_tilde.p() {
        return Err(Error::dim("fit_ce regressors", beta_tilde.p(), x.cols()));
    }
    if y.len() != x.rows() {
        return Err(Error::dim("fit_ce observations", x.rows(), y.len()));
    }
    let n = x.rows();
    let k = beta_tilde.k();
    let p = beta_tilde.p();

    let theta = build_anchor(x, beta_tilde)?;
    let dual = assemble_dual(x, y, &theta, eta);
    let options = SolveOptions {
        tol,
        max_iterations: None,
    };
    let solution = solve_sparse(&dual, &options)?;

    match solution.status {
        LpStatus::Unbounded => {
            // Unbounded dual certifies an infeasible budget.
            Err(Error::Estimator {
                status: LpStatus::Infeasible,
            })
        }
        LpStatus::Infeasible => Err(Error::Lp(LpFailure::Numerical(
            "anchor-matching system reported infeasible".into(),
        ))),
        LpStatus::Optimal => {
            let duals = solution
                .row_duals
                .as_ref()
                .ok_or_else(|| Error::Lp(LpFailure::Numerical("missing duals".into())))?;
            let mut flat = Vec::with_capacity(k * p);
            for jc in 0..k * p {
                let v = -duals[jc];
                if !v.is_finite() {
                    return Err(Error::Lp(LpFailure::Numerical(
                        "non-finite recovered estimate".into(),
                    )));
                }
                flat.push(v);
            }
            let beta_hat = ParamBlocks::from_flat(k, p, flat)?;

            let mut budget = 0.0;
            for i in 0..n {
                let (f, _) = eval_max_linear(x.row(i), &beta_hat)?;
                budget += (f - y[i]).max(0.0);
            }
            budget /= n as f64;

            let objective: f64 = theta
                .theta()
                .flat()
                .iter()
                .zip(beta_hat.flat())
                .map(|(t, b)| t * b)
                .sum();

            // Certificates: primal feasibility of the recovered point and
            // agreement of primal and dual objectives (strong duality).
            let dual_objective = -solution.objective_value.unwrap_or(f64::NAN);
            let scale = 1.0 + objective.abs().max(dual_objective.abs());
            if (objective - dual_objective).abs() > 1e-6 * scale {
                return Err(Error::Lp(LpFailure::Numerical(format!(
                    "duality gap {} exceeds tolerance",
                    (objective - dual_objective).abs()
                ))));
            }
            if budget > eta + 1e-7 * (1.0 + eta) {
                return Err(Error::Lp(LpFailure::Numerical(format!(
                    "residual budget {budget} exceeds eta {eta}"
                ))));
            }

            Ok(CeFitResult {
                beta_hat,
                lp_status: LpStatus::Optimal,
                objective,
                residual_budget_used: budget,
                solve_iterations: solution.iterations,
            })
        }
    }
}
