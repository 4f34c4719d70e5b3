//! Monte Carlo grid runner for phase-transition heatmaps and noise sweeps.
//!
//! A grid is a pure function of its configuration: trial seeds derive from
//! the master seed and the cell/trial indices only (never from sigma, so
//! noise levels are paired on identical regressors), trials run in parallel
//! but reduce in deterministic order, and per-trial failures are recorded as
//! infinite-error sentinels instead of aborting the sweep.

use crate::ce::fit_ce;
use crate::error::{Error, Result};
use crate::lp::{DEFAULT_TOL, LpStatus};
use crate::lspa::{fit_lspa, DEFAULT_MAX_ITER};
use crate::model::normalized_error;
use crate::synth::{
    compute_eta, derive_seed, gen_ground_truth, gen_observations, gen_regressors, perturb_init,
    SynthConfig, TruthKind,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridMode {
    FixKVaryP,
    FixPVaryK,
    NoiseSweep,
}

impl GridMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            GridMode::FixKVaryP => "fix_k_vary_p",
            GridMode::FixPVaryK => "fix_p_vary_k",
            GridMode::NoiseSweep => "noise_sweep",
        }
    }

    pub fn parse(s: &str) -> Option<GridMode> {
        match s {
            "fix_k_vary_p" => Some(GridMode::FixKVaryP),
            "fix_p_vary_k" => Some(GridMode::FixPVaryK),
            "noise_sweep" => Some(GridMode::NoiseSweep),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Ce,
    Lspa,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Ce => "ce",
            Method::Lspa => "lspa",
        }
    }

    pub fn parse(s: &str) -> Option<Method> {
        match s {
            "ce" => Some(Method::Ce),
            "lspa" => Some(Method::Lspa),
            _ => None,
        }
    }
}

fn default_trials() -> usize {
    50
}

/// Grid configuration. Axis semantics by mode:
/// - `fix_k_vary_p`: `fixed` is k, `axis_values` are p values;
/// - `fix_p_vary_k`: `fixed` is p, `axis_values` are k values;
/// - `noise_sweep`: `fixed` is k, `axis_values` holds the single p, and
///   `sigma_values` lists the noise levels (one panel each).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridConfig {
    pub mode: GridMode,
    pub fixed: usize,
    #[serde(default)]
    pub axis_values: Vec<usize>,
    pub n_values: Vec<usize>,
    #[serde(default)]
    pub sigma: f64,
    #[serde(default)]
    pub sigma_values: Vec<f64>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    pub truth_kind: TruthKind,
    pub master_seed: u64,
    pub methods: Vec<Method>,
}

fn strictly_increasing<T: PartialOrd>(v: &[T]) -> bool {
    v.windows(2).all(|w| w[0] < w[1])
}

impl GridConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::invalid("trials must be >= 1"));
        }
        if self.n_values.is_empty() || !strictly_increasing(&self.n_values) {
            return Err(Error::invalid("n_values must be nonempty and strictly increasing"));
        }
        if self.methods.is_empty() {
            return Err(Error::invalid("at least one method required"));
        }
        if self.methods.len() > 2 || (self.methods.len() == 2 && self.methods[0] == self.methods[1])
        {
            return Err(Error::invalid("methods must be a subset of {ce, lspa}"));
        }
        if self.fixed == 0 {
            return Err(Error::invalid("fixed dimension must be >= 1"));
        }
        if !self.sigma.is_finite() || self.sigma < 0.0 {
            return Err(Error::invalid("sigma must be finite and >= 0"));
        }
        match self.mode {
            GridMode::FixKVaryP | GridMode::FixPVaryK => {
                if self.axis_values.is_empty() || !strictly_increasing(&self.axis_values) {
                    return Err(Error::invalid(
                        "axis_values must be nonempty and strictly increasing",
                    ));
                }
            }
            GridMode::NoiseSweep => {
                if self.axis_values.len() != 1 {
                    return Err(Error::invalid(
                        "noise_sweep takes exactly one axis value (the dimension p)",
                    ));
                }
                if self.sigma_values.is_empty() || !strictly_increasing(&self.sigma_values) {
                    return Err(Error::invalid(
                        "sigma_values must be nonempty and strictly increasing",
                    ));
                }
                if self.sigma_values.iter().any(|s| !s.is_finite() || *s < 0.0) {
                    return Err(Error::invalid("sigma_values must be finite and >= 0"));
                }
            }
        }
        // Basis truths need k <= p in every cell.
        if self.truth_kind == TruthKind::Basis {
            for cell in self.cells() {
                if cell.k > cell.p {
                    return Err(Error::invalid(format!(
                        "basis truth requires k <= p in every cell; cell has k={} p={}",
                        cell.k, cell.p
                    )));
                }
            }
        }
        Ok(())
    }

    pub(crate) fn cells(&self) -> Vec<CellSpec> {
        let mut cells = Vec::new();
        match self.mode {
            GridMode::FixKVaryP => {
                for (ai, &p) in self.axis_values.iter().enumerate() {
                    for (ni, &n) in self.n_values.iter().enumerate() {
                        cells.push(CellSpec {
                            axis_idx: ai,
                            n_idx: ni,
                            k: self.fixed,
                            p,
                            n,
                            sigma: self.sigma,
                        });
                    }
                }
            }
            GridMode::FixPVaryK => {
                for (ai, &k) in self.axis_values.iter().enumerate() {
                    for (ni, &n) in self.n_values.iter().enumerate() {
                        cells.push(CellSpec {
                            axis_idx: ai,
                            n_idx: ni,
                            k,
                            p: self.fixed,
                            n,
                            sigma: self.sigma,
                        });
                    }
                }
            }
            GridMode::NoiseSweep => {
                let p = self.axis_values[0];
                for &sigma in &self.sigma_values {
                    for (ni, &n) in self.n_values.iter().enumerate() {
                        cells.push(CellSpec {
                            axis_idx: 0,
                            n_idx: ni,
                            k: self.fixed,
                            p,
                            n,
                            sigma,
                        });
                    }
                }
            }
        }
        cells
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct CellSpec {
    pub axis_idx: usize,
    pub n_idx: usize,
    pub k: usize,
    pub p: usize,
    pub n: usize,
    pub sigma: f64,
}

/// One method's outcome on one synthetic instance.
#[derive(Debug, Clone)]
pub struct TrialResult {
    pub n: usize,
    pub p: usize,
    pub k: usize,
    pub sigma: f64,
    pub seed: u64,
    pub method: Method,
    /// Normalized estimation error, or `f64::INFINITY` when the fit failed.
    pub normalized_error: f64,
    pub status: String,
    pub wall_time_s: f64,
}

/// One aggregated grid cell (per method), the unit of the grid CSV schema.
#[derive(Debug, Clone, PartialEq)]
pub struct GridRow {
    pub mode: GridMode,
    pub k: usize,
    pub p: usize,
    pub n: usize,
    pub sigma: f64,
    pub method: Method,
    pub trials: usize,
    /// Lower-median of the finite trial errors; `inf` when sentinels hold
    /// the majority.
    pub median_error: f64,
    pub finite_trials: usize,
}

/// Generates one synthetic instance and fits every requested method on the
/// identical `(X, y, beta_tilde)`. Fit failures are recorded per trial, not
/// propagated.
pub fn run_trial(
    n: usize,
    p: usize,
    k: usize,
    sigma: f64,
    truth_kind: TruthKind,
    seed: u64,
    methods: &[Method],
) -> Result<Vec<TrialResult>> {
    let config = SynthConfig::new(n, p, k, truth_kind, sigma, seed);
    config.validate()?;
    let x = gen_regressors(&config)?;
    let beta_star = gen_ground_truth(&config)?;
    let (y, w) = gen_observations(&x, &beta_star, &config)?;
    let beta_tilde = perturb_init(&beta_star, &config)?;
    let eta = compute_eta(&w);

    let mut out = Vec::with_capacity(methods.len());
    for &method in methods {
        let start = Instant::now();
        let (error, status) = match method {
            Method::Ce => match fit_ce(&x, &y, &beta_tilde, eta, DEFAULT_TOL) {
                Ok(fit) => (
                    normalized_error(&fit.beta_hat, &beta_star)?,
                    "optimal".to_string(),
                ),
                Err(e) => (f64::INFINITY, failure_label(&e)),
            },
            Method::Lspa => match fit_lspa(&x, &y, &beta_tilde, DEFAULT_MAX_ITER) {
                Ok(fit) => {
                    let status = if fit.converged { "converged" } else { "max_iter" };
                    (
                        normalized_error(&fit.beta_hat, &beta_star)?,
                        status.to_string(),
                    )
                }
                Err(e) => (f64::INFINITY, failure_label(&e)),
            },
        };
        out.push(TrialResult {
            n,
            p,
            k,
            sigma,
            seed,
            method,
            normalized_error: error,
            status,
            wall_time_s: start.elapsed().as_secs_f64(),
        });
    }
    Ok(out)
}

fn failure_label(e: &Error) -> String {
    match e {
        Error::Estimator { status: LpStatus::Infeasible } => "infeasible".to_string(),
        Error::Estimator { status: LpStatus::Unbounded } => "unbounded".to_string(),
        Error::Estimator { status: LpStatus::Optimal } => "optimal".to_string(),
        Error::Lp(f) => match f {
            crate::error::LpFailure::IterationLimit { .. } => "iteration_limit".to_string(),
            _ => "lp_failure".to_string(),
        },
        _ => "error".to_string(),
    }
}

/// Lower-median: the `(len-1)/2`-th order statistic, which never averages a
/// finite value with a sentinel on even counts.
fn lower_median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    values[(values.len() - 1) / 2]
}

fn cell_median(errors: &[f64], trials: usize) -> (f64, usize) {
    let mut finite: Vec<f64> = errors.iter().copied().filter(|e| e.is_finite()).collect();
    let sentinels = trials - finite.len();
    if finite.is_empty() || 2 * sentinels > trials {
        (f64::INFINITY, finite.len())
    } else {
        (lower_median(&mut finite), finite.len())
    }
}

/// Runs every cell of the grid; returns one row per (cell, method) in
/// deterministic cell order. Trial seeds never depend on sigma, so sweeps at
/// different noise levels see paired data.
pub fn run_grid(config: &GridConfig) -> Result<Vec<GridRow>> {
    config.validate()?;
    let mut rows = Vec::new();
    for cell in config.cells() {
        let trial_results: Vec<Vec<TrialResult>> = (0..config.trials)
            .into_par_iter()
            .map(|t| {
                run_trial(
                    cell.n,
                    cell.p,
                    cell.k,
                    cell.sigma,
                    config.truth_kind,
                    derive_seed(
                        config.master_seed,
                        &[cell.axis_idx as u64, cell.n_idx as u64, t as u64],
                    ),
                    &config.methods,
                )
            })
            .collect::<Result<Vec<_>>>()?;
        for (mi, &method) in config.methods.iter().enumerate() {
            let errors: Vec<f64> = trial_results
                .iter()
                .map(|r| r[mi].normalized_error)
                .collect();
            let (median_error, finite_trials) = cell_median(&errors, config.trials);
            rows.push(GridRow {
                mode: config.mode,
                k: cell.k,
                p: cell.p,
                n: cell.n,
                sigma: cell.sigma,
                method,
                trials: config.trials,
                median_error,
                finite_trials,
            });
        }
    }
    Ok(rows)
}

/// The value that varies across heatmap columns.
pub fn axis_value(mode: GridMode, row: &GridRow) -> usize {
    match mode {
        GridMode::FixKVaryP => row.p,
        GridMode::FixPVaryK => row.k,
        GridMode::NoiseSweep => row.p,
    }
}

/// Per-column recovery boundary: the smallest `n` from which the median
/// error stays below `threshold` through the column's largest `n`. Columns
/// that never recover map to `None`.
pub fn phase_boundary(
    rows: &[GridRow],
    method: Method,
    threshold: f64,
) -> Result<Vec<(usize, Option<usize>)>> {
    if threshold.is_nan() || threshold <= 0.0 {
        return Err(Error::invalid("threshold must be positive"));
    }
    let mode = match rows.first() {
        Some(r) => r.mode,
        None => return Ok(Vec::new()),
    };
    if mode == GridMode::NoiseSweep {
        return Err(Error::invalid("phase boundary applies to phase-grid modes"));
    }
    let mut axes: Vec<usize> = rows
        .iter()
        .filter(|r| r.method == method)
        .map(|r| axis_value(mode, r))
        .collect();
    axes.sort_unstable();
    axes.dedup();

    let mut out = Vec::with_capacity(axes.len());
    for axis in axes {
        let mut column: Vec<(usize, f64)> = rows
            .iter()
            .filter(|r| r.method == method && axis_value(mode, r) == axis)
            .map(|r| (r.n, r.median_error))
            .collect();
        column.sort_by_key(|&(n, _)| n);
        let mut boundary = None;
        for &(n, median) in column.iter().rev() {
            if median < threshold {
                boundary = Some(n);
            } else {
                break;
            }
        }
        out.push((axis, boundary));
    }
    Ok(out)
}
