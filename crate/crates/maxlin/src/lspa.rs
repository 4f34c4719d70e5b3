//! The least-square partition algorithm: alternate cone assignment and
//! per-partition least squares from a given initial estimate, stopping when
//! the assignment reaches a fixed point or an iteration cap (200 by
//! default, matching the usual benchmark setting).

use crate::error::{Error, Result};
use crate::linalg::{least_squares, DenseMatrix};
use crate::model::{cone_index, ParamBlocks};

pub const DEFAULT_MAX_ITER: usize = 200;

#[derive(Debug, Clone)]
pub struct LspaResult {
    pub beta_hat: ParamBlocks,
    pub iterations_run: usize,
    /// True when the assignment repeated the previous iteration's assignment.
    pub converged: bool,
    pub final_assignment: Vec<usize>,
}

/// Cone assignment of every sample under `beta` (0-based component indices).
pub fn partition(x: &DenseMatrix, beta: &ParamBlocks) -> Result<Vec<usize>> {
    if x.cols() != beta.p() {
        return Err(Error::dim("partition", beta.p(), x.cols()));
    }
    (0..x.rows()).map(|i| cone_index(x.row(i), beta)).collect()
}

fn step_with_assignment(
    x: &DenseMatrix,
    y: &[f64],
    assignment: &[usize],
    beta: &ParamBlocks,
) -> Result<ParamBlocks> {
    let k = beta.k();
    let p = beta.p();
    let mut blocks: Vec<Vec<f64>> = (0..k).map(|j| beta.block(j).to_vec()).collect();
    for j in 0..k {
        let rows: Vec<usize> = (0..x.rows()).filter(|&i| assignment[i] == j).collect();
        if rows.is_empty() {
            // Empty partitions keep the incoming block; dropping it would
            // change k.
            continue;
        }
        let mut sub = Vec::with_capacity(rows.len() * p);
        let mut rhs = Vec::with_capacity(rows.len());
        for &i in &rows {
            sub.extend_from_slice(x.row(i));
            rhs.push(y[i]);
        }
        let sub = DenseMatrix::from_vec(rows.len(), p, sub)?;
        blocks[j] = least_squares(&sub, &rhs)?;
    }
    ParamBlocks::from_blocks(&blocks)
}

/// One alternating step: partition by `beta`, then solve the decoupled least
/// squares per nonempty partition.
pub fn lspa_step(x: &DenseMatrix, y: &[f64], beta: &ParamBlocks) -> Result<ParamBlocks> {
    if y.len() != x.rows() {
        return Err(Error::dim("lspa_step observations", x.rows(), y.len()));
    }
    let assignment = partition(x, beta)?;
    step_with_assignment(x, y, &assignment, beta)
}

/// Runs the alternation from `beta_init` until the assignment fixes or
/// `max_iter` steps have been taken; returns the last iterate either way.
pub fn fit_lspa(
    x: &DenseMatrix,
    y: &[f64],
    beta_init: &ParamBlocks,
    max_iter: usize,
) -> Result<LspaResult> {
    if max_iter == 0 {
        return Err(Error::invalid("max_iter must be >= 1"));
    }
    if y.len() != x.rows() {
        return Err(Error::dim("fit_lspa observations", x.rows(), y.len()));
    }
    let mut beta = beta_init.clone();
    let mut assignment = partition(x, &beta)?;
    for iter in 1..=max_iter {
        beta = step_with_assignment(x, y, &assignment, &beta)?;
        let next = partition(x, &beta)?;
        if next == assignment {
            return Ok(LspaResult {
                beta_hat: beta,
                iterations_run: iter,
                converged: true,
                final_assignment: next,
            });
        }
        assignment = next;
    }
    Ok(LspaResult {
        beta_hat: beta,
        iterations_run: max_iter,
        converged: false,
        final_assignment: assignment,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::least_squares;
    use crate::model::normalized_error;
    use crate::synth::{
        gen_ground_truth, gen_observations, gen_regressors, perturb_init, SynthConfig, TruthKind,
    };

    fn pb(blocks: &[&[f64]]) -> ParamBlocks {
        ParamBlocks::from_blocks(&blocks.iter().map(|b| b.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn partition_examples() {
        let beta = pb(&[&[1.0, 0.0], &[-1.0, 0.0]]);
        let x = DenseMatrix::from_rows(&[vec![1.0, 0.0], vec![-2.0, 3.0]]).unwrap();
        assert_eq!(partition(&x, &beta).unwrap(), vec![0, 1]);

        let single = pb(&[&[0.5, 0.5]]);
        assert_eq!(partition(&x, &single).unwrap(), vec![0, 0]);

        let tied = pb(&[&[1.0, 0.0], &[1.0, 0.0]]);
        assert_eq!(partition(&x, &tied).unwrap(), vec![0, 0]);
    }

    #[test]
    fn correct_partition_recovers_truth_exactly() {
        let config = SynthConfig::new(60, 4, 2, TruthKind::Basis, 0.0, 15);
        let x = gen_regressors(&config).unwrap();
        let star = gen_ground_truth(&config).unwrap();
        let (y, _) = gen_observations(&x, &star, &config).unwrap();
        let next = lspa_step(&x, &y, &star).unwrap();
        let mut worst = 0.0f64;
        for (a, b) in next.flat().iter().zip(star.flat()) {
            worst = worst.max((a - b).abs());
        }
        assert!(worst < 1e-10, "deviation {worst}");
    }

    #[test]
    fn single_component_is_plain_least_squares() {
        let config = SynthConfig::new(40, 3, 1, TruthKind::Gaussian, 0.2, 5);
        let x = gen_regressors(&config).unwrap();
        let star = gen_ground_truth(&config).unwrap();
        let (y, _) = gen_observations(&x, &star, &config).unwrap();
        let init = pb(&[&[0.0, 0.0, 0.0]]);

        let step = lspa_step(&x, &y, &init).unwrap();
        let ols = least_squares(&x, &y).unwrap();
        for (a, b) in step.flat().iter().zip(&ols) {
            assert!((a - b).abs() < 1e-12);
        }

        let fit = fit_lspa(&x, &y, &init, DEFAULT_MAX_ITER).unwrap();
        assert!(fit.converged);
        assert_eq!(fit.iterations_run, 1);
        for (a, b) in fit.beta_hat.flat().iter().zip(&ols) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn empty_partition_keeps_block() {
        // Second block never wins: its column never appears.
        let beta = pb(&[&[1.0, 0.0], &[-5.0, -5.0]]);
        let x = DenseMatrix::from_rows(&[vec![1.0, 0.2], vec![2.0, -0.1], vec![0.5, 0.3]]).unwrap();
        let y = vec![1.0, 2.0, 0.5];
        assert!(partition(&x, &beta).unwrap().iter().all(|&j| j == 0));
        let next = lspa_step(&x, &y, &beta).unwrap();
        assert_eq!(next.block(1), beta.block(1));
    }

    #[test]
    fn truth_init_converges_fast_noiseless() {
        let config = SynthConfig::new(300, 5, 3, TruthKind::Basis, 0.0, 23);
        let x = gen_regressors(&config).unwrap();
        let star = gen_ground_truth(&config).unwrap();
        let (y, _) = gen_observations(&x, &star, &config).unwrap();
        let fit = fit_lspa(&x, &y, &star, DEFAULT_MAX_ITER).unwrap();
        assert!(fit.converged);
        assert!(fit.iterations_run <= 2);
        let err = normalized_error(&fit.beta_hat, &star).unwrap();
        assert!(err < 1e-10, "error {err}");
    }

    #[test]
    fn perturbed_init_recovery_noiseless() {
        let config = SynthConfig::new(500, 5, 3, TruthKind::Basis, 0.0, 29);
        let x = gen_regressors(&config).unwrap();
        let star = gen_ground_truth(&config).unwrap();
        let (y, _) = gen_observations(&x, &star, &config).unwrap();
        let tilde = perturb_init(&star, &config).unwrap();
        let fit = fit_lspa(&x, &y, &tilde, DEFAULT_MAX_ITER).unwrap();
        let err = normalized_error(&fit.beta_hat, &star).unwrap();
        assert!(err < 1e-5, "error {err}");
    }

    fn assignment_ssr(
        x: &DenseMatrix,
        y: &[f64],
        assignment: &[usize],
        beta: &ParamBlocks,
    ) -> f64 {
        (0..x.rows())
            .map(|i| {
                let pred: f64 = x
                    .row(i)
                    .iter()
                    .zip(beta.block(assignment[i]))
                    .map(|(a, b)| a * b)
                    .sum();
                (pred - y[i]).powi(2)
            })
            .sum()
    }

    #[test]
    fn step_never_increases_ssr_under_current_assignment() {
        for seed in 0..10u64 {
            let config = SynthConfig::new(50, 3, 3, TruthKind::Basis, 0.3, seed);
            let x = gen_regressors(&config).unwrap();
            let star = gen_ground_truth(&config).unwrap();
            let (y, _) = gen_observations(&x, &star, &config).unwrap();
            let init = perturb_init(&star, &config).unwrap();

            let assignment = partition(&x, &init).unwrap();
            let stepped = lspa_step(&x, &y, &init).unwrap();
            let before = assignment_ssr(&x, &y, &assignment, &init);
            let after = assignment_ssr(&x, &y, &assignment, &stepped);
            assert!(after <= before + 1e-9, "SSR rose: {before} -> {after}");
        }
    }

    #[test]
    fn fixed_point_assignment_means_fixed_beta() {
        let config = SynthConfig::new(120, 4, 2, TruthKind::Basis, 0.05, 31);
        let x = gen_regressors(&config).unwrap();
        let star = gen_ground_truth(&config).unwrap();
        let (y, _) = gen_observations(&x, &star, &config).unwrap();
        let fit = fit_lspa(&x, &y, &star, DEFAULT_MAX_ITER).unwrap();
        assert!(fit.converged);
        // One more step from the fixed point must not move the estimate.
        let again = lspa_step(&x, &y, &fit.beta_hat).unwrap();
        for (a, b) in again.flat().iter().zip(fit.beta_hat.flat()) {
            assert!((a - b).abs() < 1e-10);
        }
        // Fixed point also means results are stable across max_iter.
        assert!(fit.iterations_run <= DEFAULT_MAX_ITER);
        assert_eq!(fit.final_assignment, partition(&x, &fit.beta_hat).unwrap());
    }
}
