//! `maxlin` command-line driver: synthetic data generation, single fits,
//! phase-transition grids, noise sweeps, recovery diagnostics, and SVG
//! rendering of grid CSVs.

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use maxlin::ce::fit_ce;
use maxlin::grid::{run_grid, GridConfig, GridMode, Method};
use maxlin::io;
use maxlin::lspa::fit_lspa;
use maxlin::svg::{render_heatmap, render_noise_sweep};
use maxlin::synth::{
    compute_eta, gen_ground_truth, gen_observations, gen_regressors, perturb_init, SynthConfig,
    TruthKind,
};
use maxlin::theory::{theory_report, TheoryOptions};
use maxlin::Dataset;
use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Parser)]
#[command(name = "maxlin", version, about = "Max-linear regression toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset, its ground truth, and an initializer.
    Synth(SynthArgs),
    /// Fit one estimator to a dataset CSV.
    Fit(FitArgs),
    /// Run a phase-transition grid from a JSON config.
    Phase(GridArgs),
    /// Run a noise sweep from a JSON config.
    NoiseSweep(GridArgs),
    /// Monte Carlo recovery diagnostics for a truth/initializer pair.
    Theory(TheoryArgs),
    /// Render an SVG from a grid CSV (heatmap or noise-sweep lines).
    Render(RenderArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum TruthArg {
    Basis,
    Gaussian,
}

impl From<TruthArg> for TruthKind {
    fn from(t: TruthArg) -> TruthKind {
        match t {
            TruthArg::Basis => TruthKind::Basis,
            TruthArg::Gaussian => TruthKind::Gaussian,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Ce,
    Lspa,
}

#[derive(Args)]
struct SynthArgs {
    /// JSON file with a SynthConfig; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    p: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long, value_enum)]
    truth: Option<TruthArg>,
    #[arg(long)]
    seed: Option<u64>,
    /// Variance of the initializer perturbation (default 1/(1000*k*p)).
    #[arg(long)]
    perturbation_scale: Option<f64>,
    /// Dataset CSV (x1..xp,y,w).
    #[arg(long)]
    out_data: PathBuf,
    /// Ground-truth parameter CSV.
    #[arg(long)]
    out_truth: Option<PathBuf>,
    /// Perturbed initializer CSV.
    #[arg(long)]
    out_init: Option<PathBuf>,
}

#[derive(Args)]
struct FitArgs {
    #[arg(long, value_enum)]
    method: MethodArg,
    /// Dataset CSV; a trailing w column supplies the residual budget when
    /// --eta is omitted.
    #[arg(long)]
    data: PathBuf,
    /// Initial estimate CSV.
    #[arg(long)]
    init: PathBuf,
    /// Residual budget for the convex estimator.
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long, default_value_t = maxlin::lspa::DEFAULT_MAX_ITER)]
    max_iter: usize,
    #[arg(long, default_value_t = maxlin::lp::DEFAULT_TOL)]
    tol: f64,
    /// Estimate CSV output.
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON diagnostics output.
    #[arg(long)]
    diagnostics: Option<PathBuf>,
}

#[derive(Args)]
struct GridArgs {
    /// JSON file with a GridConfig.
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out_csv: PathBuf,
    /// SVG output; with several methods the method name is inserted before
    /// the extension.
    #[arg(long)]
    out_svg: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-5)]
    threshold: f64,
    /// Override the configured trial count.
    #[arg(long)]
    trials: Option<usize>,
    /// Override the configured master seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct TheoryArgs {
    /// Ground-truth parameter CSV.
    #[arg(long)]
    truth: PathBuf,
    /// Initializer CSV; defaults to the truth itself.
    #[arg(long)]
    init: Option<PathBuf>,
    #[arg(long, default_value_t = maxlin::theory::DEFAULT_MC_SAMPLES)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    /// Constant multiplying the sample-complexity threshold.
    #[arg(long, default_value_t = 1.0)]
    scale_c: f64,
    /// Also estimate the directional margin (slower).
    #[arg(long)]
    varrho: bool,
    #[arg(long, default_value_t = 200_000)]
    varrho_samples: usize,
    #[arg(long, default_value_t = maxlin::theory::DEFAULT_MC_DIRECTIONS)]
    directions: usize,
    /// JSON report output.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RenderArgs {
    /// Grid CSV produced by `phase` or `noise-sweep`.
    #[arg(long)]
    grid: PathBuf,
    #[arg(long, value_enum, default_value = "ce")]
    method: MethodArg,
    #[arg(long, default_value_t = 1e-5)]
    threshold: f64,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Synth(args) => synth(args),
        Command::Fit(args) => fit(args),
        Command::Phase(args) => grid(args, false),
        Command::NoiseSweep(args) => grid(args, true),
        Command::Theory(args) => theory(args),
        Command::Render(args) => render(args),
    }
}

fn synth(args: SynthArgs) -> Result<()> {
    let mut config = match &args.config {
        Some(path) => serde_json::from_str::<SynthConfig>(
            &std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?,
        )
        .with_context(|| format!("parsing {}", path.display()))?,
        None => {
            let (n, p, k) = match (args.n, args.p, args.k) {
                (Some(n), Some(p), Some(k)) => (n, p, k),
                _ => bail!("without --config, all of --n, --p, --k are required"),
            };
            SynthConfig::new(
                n,
                p,
                k,
                args.truth.map(Into::into).unwrap_or(TruthKind::Basis),
                args.sigma.unwrap_or(0.0),
                args.seed.unwrap_or(0),
            )
        }
    };
    if let Some(n) = args.n {
        config.n = n;
    }
    if let Some(p) = args.p {
        config.p = p;
    }
    if let Some(k) = args.k {
        config.k = k;
    }
    if let Some(sigma) = args.sigma {
        config.sigma = sigma;
    }
    if let Some(truth) = args.truth {
        config.truth_kind = truth.into();
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(scale) = args.perturbation_scale {
        config.perturbation_scale = Some(scale);
    }
    config.validate()?;

    let x = gen_regressors(&config)?;
    let beta_star = gen_ground_truth(&config)?;
    let (y, w) = gen_observations(&x, &beta_star, &config)?;
    let data = Dataset::new(x, y, Some(w))?;
    io::write_dataset(&args.out_data, &data)?;
    eprintln!("wrote {}", args.out_data.display());
    if let Some(path) = &args.out_truth {
        io::write_param_blocks(path, &beta_star)?;
        eprintln!("wrote {}", path.display());
    }
    if let Some(path) = &args.out_init {
        let init = perturb_init(&beta_star, &config)?;
        io::write_param_blocks(path, &init)?;
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

fn fit(args: FitArgs) -> Result<()> {
    let data = io::read_dataset(&args.data)?;
    let init = io::read_param_blocks(&args.init)?;
    let start = Instant::now();
    let diagnostics = match args.method {
        MethodArg::Ce => {
            let eta = match (args.eta, data.w()) {
                (Some(eta), _) => eta,
                (None, Some(w)) => compute_eta(w),
                (None, None) => bail!(
                    "the convex estimator needs --eta when the dataset has no noise column"
                ),
            };
            let fit = fit_ce(data.x(), data.y(), &init, eta, args.tol)?;
            if let Some(path) = &args.out {
                io::write_param_blocks(path, &fit.beta_hat)?;
            }
            serde_json::json!({
                "method": "ce",
                "status": "optimal",
                "objective": fit.objective,
                "residual_budget_used": fit.residual_budget_used,
                "eta": eta,
                "iterations": fit.solve_iterations,
                "wall_time_s": start.elapsed().as_secs_f64(),
            })
        }
        MethodArg::Lspa => {
            let fit = fit_lspa(data.x(), data.y(), &init, args.max_iter)?;
            if let Some(path) = &args.out {
                io::write_param_blocks(path, &fit.beta_hat)?;
            }
            serde_json::json!({
                "method": "lspa",
                "status": if fit.converged { "converged" } else { "max_iter" },
                "iterations": fit.iterations_run,
                "wall_time_s": start.elapsed().as_secs_f64(),
            })
        }
    };
    let text = serde_json::to_string_pretty(&diagnostics)?;
    match &args.diagnostics {
        Some(path) => std::fs::write(path, text)?,
        None => println!("{text}"),
    }
    Ok(())
}

fn with_method_suffix(path: &Path, method: Method) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("grid");
    let ext = path.extension().and_then(|s| s.to_str()).unwrap_or("svg");
    path.with_file_name(format!("{stem}.{}.{ext}", method.as_str()))
}

fn grid(args: GridArgs, sweep: bool) -> Result<()> {
    let mut config: GridConfig = serde_json::from_str(
        &std::fs::read_to_string(&args.config)
            .with_context(|| format!("reading {}", args.config.display()))?,
    )
    .with_context(|| format!("parsing {}", args.config.display()))?;
    if let Some(trials) = args.trials {
        config.trials = trials;
    }
    if let Some(seed) = args.seed {
        config.master_seed = seed;
    }
    match (sweep, config.mode) {
        (true, GridMode::NoiseSweep) | (false, GridMode::FixKVaryP) | (false, GridMode::FixPVaryK) => {}
        (true, _) => bail!("noise-sweep requires a config with mode noise_sweep"),
        (false, _) => bail!("phase requires a config with mode fix_k_vary_p or fix_p_vary_k"),
    }
    let rows = run_grid(&config)?;
    io::write_grid(&args.out_csv, &rows)?;
    eprintln!("wrote {}", args.out_csv.display());
    if let Some(svg_path) = &args.out_svg {
        if sweep {
            std::fs::write(svg_path, render_noise_sweep(&rows)?)?;
            eprintln!("wrote {}", svg_path.display());
        } else {
            for &method in &config.methods {
                let path = if config.methods.len() == 1 {
                    svg_path.clone()
                } else {
                    with_method_suffix(svg_path, method)
                };
                std::fs::write(&path, render_heatmap(&rows, method, args.threshold)?)?;
                eprintln!("wrote {}", path.display());
            }
        }
    }
    Ok(())
}

fn theory(args: TheoryArgs) -> Result<()> {
    let truth = io::read_param_blocks(&args.truth)?;
    let init = match &args.init {
        Some(path) => io::read_param_blocks(path)?,
        None => truth.clone(),
    };
    let options = TheoryOptions {
        samples: args.samples,
        seed: args.seed,
        delta: args.delta,
        complexity_scale_c: args.scale_c,
        varrho: args.varrho.then_some((args.varrho_samples, args.directions)),
    };
    let report = theory_report(&truth, &init, &options)?;
    std::fs::write(&args.out, serde_json::to_string_pretty(&report)?)?;
    eprintln!("wrote {}", args.out.display());
    Ok(())
}

fn render(args: RenderArgs) -> Result<()> {
    let rows = io::read_grid(&args.grid)?;
    let svg = match rows.first().map(|r| r.mode) {
        Some(GridMode::NoiseSweep) => render_noise_sweep(&rows)?,
        Some(_) => {
            let method = match args.method {
                MethodArg::Ce => Method::Ce,
                MethodArg::Lspa => Method::Lspa,
            };
            render_heatmap(&rows, method, args.threshold)?
        }
        None => bail!("grid CSV has no rows"),
    };
    std::fs::write(&args.out, svg)?;
    eprintln!("wrote {}", args.out.display());
    Ok(())
}
