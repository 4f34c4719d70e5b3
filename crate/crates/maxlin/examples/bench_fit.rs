use maxlin::ce::fit_ce;
use maxlin::lspa::{fit_lspa, DEFAULT_MAX_ITER};
use maxlin::model::normalized_error;
use maxlin::synth::*;
use std::time::Instant;

fn run(n: usize, p: usize, k: usize, sigma: f64, seed: u64) {
    let config = SynthConfig::new(n, p, k, TruthKind::Basis, sigma, seed);
    let x = gen_regressors(&config).unwrap();
    let star = gen_ground_truth(&config).unwrap();
    let (y, w) = gen_observations(&x, &star, &config).unwrap();
    let tilde = perturb_init(&star, &config).unwrap();
    let eta = compute_eta(&w);

    let t0 = Instant::now();
    let fit = fit_ce(&x, &y, &tilde, eta, 1e-9);
    let ce_time = t0.elapsed().as_secs_f64();
    let (ce_err, iters) = match &fit {
        Ok(f) => (normalized_error(&f.beta_hat, &star).unwrap(), f.solve_iterations),
        Err(e) => {
            println!("CE error: {e}");
            (f64::INFINITY, 0)
        }
    };

    let t0 = Instant::now();
    let lspa = fit_lspa(&x, &y, &tilde, DEFAULT_MAX_ITER).unwrap();
    let lspa_time = t0.elapsed().as_secs_f64();
    let lspa_err = normalized_error(&lspa.beta_hat, &star).unwrap();

    println!(
        "n={n:5} p={p:3} k={k:2} sigma={sigma:4} | CE {ce_time:7.3}s iters={iters:5} err={ce_err:9.2e} | LSPA {lspa_time:6.3}s err={lspa_err:9.2e}"
    );
}

fn main() {
    run(500, 5, 3, 0.0, 1);
    run(500, 5, 3, 0.0, 2);
    run(2000, 4, 2, 0.1, 1);
    run(2000, 4, 2, 0.1, 2);
    run(300, 10, 6, 0.1, 1);
    run(600, 10, 8, 0.0, 1);
    run(900, 10, 8, 0.0, 1);
    run(400, 10, 4, 0.0, 1);
}
