//! Monte Carlo and closed-form evaluation of the quantities that govern
//! recovery: per-cone Gaussian probabilities, the margin `zeta` (a squared
//! smallest-cone mass term minus a symmetric-difference penalty), the sharper
//! margin `varrho` defined through directional expectations, analytic bounds
//! for both, and the exact two-dimensional wedge formulas.
//!
//! All Monte Carlo loops are chunked, data-parallel over sub-seeded streams,
//! and merged in fixed chunk order, so every estimate is a deterministic
//! function of `(inputs, samples, seed)`.

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::model::{cone_index, ParamBlocks};
use crate::synth::{derive_seed, SeedStream};
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;

/// `sqrt(pi/32)`, the constant of the squared-probability lower bound.
pub const INF_BOUND_COEFF: f64 = 0.31332853432887503; // (PI / 32.0).sqrt()

const MC_CHUNK: usize = 1 << 16;
const TAG_CONE: u64 = 0x11;
const TAG_DIRECTIONS: u64 = 0x22;
const TAG_EXTREMA: u64 = 0x33;

/// A Monte Carlo estimate with its standard error and provenance.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MonteCarloEstimate {
    pub value: f64,
    pub std_error: f64,
    pub samples: usize,
    pub seed: u64,
}

fn binomial_estimate(count: u64, n: usize, seed: u64) -> MonteCarloEstimate {
    let v = count as f64 / n as f64;
    MonteCarloEstimate {
        value: v,
        std_error: (v * (1.0 - v) / n as f64).sqrt(),
        samples: n,
        seed,
    }
}

fn chunk_ranges(n: usize) -> Vec<(usize, usize)> {
    (0..n.div_ceil(MC_CHUNK))
        .map(|c| (c * MC_CHUNK, ((c + 1) * MC_CHUNK).min(n)))
        .collect()
}

fn check_pair(a: &ParamBlocks, b: &ParamBlocks, context: &'static str) -> Result<()> {
    if a.k() != b.k() || a.p() != b.p() {
        return Err(Error::dim(context, a.k() * a.p(), b.k() * b.p()));
    }
    Ok(())
}

/// Per-cone and symmetric-difference hit counts from one pass of `n` draws.
fn cone_counts(
    beta_star: &ParamBlocks,
    beta_tilde: &ParamBlocks,
    n: usize,
    seed: u64,
) -> (Vec<u64>, Vec<u64>) {
    let k = beta_star.k();
    let p = beta_star.p();
    let partials: Vec<(Vec<u64>, Vec<u64>)> = chunk_ranges(n)
        .into_par_iter()
        .enumerate()
        .map(|(c, (lo, hi))| {
            let mut stream = SeedStream::new(derive_seed(seed, &[TAG_CONE, c as u64]));
            let mut cone = vec![0u64; k];
            let mut sym = vec![0u64; k];
            let mut g = vec![0.0; p];
            for _ in lo..hi {
                for v in g.iter_mut() {
                    *v = stream.next_gaussian();
                }
                let cs = cone_index(&g, beta_star).expect("dims fixed");
                let ct = cone_index(&g, beta_tilde).expect("dims fixed");
                cone[cs] += 1;
                if cs != ct {
                    // Membership in cone cs and ct each flipped.
                    sym[cs] += 1;
                    sym[ct] += 1;
                }
            }
            (cone, sym)
        })
        .collect();
    let mut cone = vec![0u64; k];
    let mut sym = vec![0u64; k];
    for (pc, ps) in partials {
        for j in 0..k {
            cone[j] += pc[j];
            sym[j] += ps[j];
        }
    }
    (cone, sym)
}

/// Fraction of standard Gaussian draws landing in cone `j` of `beta`.
pub fn mc_cone_probability(
    beta: &ParamBlocks,
    j: usize,
    n: usize,
    seed: u64,
) -> Result<MonteCarloEstimate> {
    if n == 0 {
        return Err(Error::invalid("sample count must be >= 1"));
    }
    if j >= beta.k() {
        return Err(Error::invalid(format!("cone index {j} out of range")));
    }
    let (cone, _) = cone_counts(beta, beta, n, seed);
    Ok(binomial_estimate(cone[j], n, seed))
}

/// Fraction of draws whose membership in cone `j` differs between the cones
/// of `beta_star` and those of `beta_tilde`.
pub fn mc_symdiff_probability(
    beta_star: &ParamBlocks,
    beta_tilde: &ParamBlocks,
    j: usize,
    n: usize,
    seed: u64,
) -> Result<MonteCarloEstimate> {
    check_pair(beta_star, beta_tilde, "mc_symdiff_probability")?;
    if n == 0 {
        return Err(Error::invalid("sample count must be >= 1"));
    }
    if j >= beta_star.k() {
        return Err(Error::invalid(format!("cone index {j} out of range")));
    }
    let (_, sym) = cone_counts(beta_star, beta_tilde, n, seed);
    Ok(binomial_estimate(sym[j], n, seed))
}

/// Plug-in estimate of the recovery margin
/// `zeta = sqrt(pi/32) * (min_j P{C_j})^2 - 2 * sqrt(max_j P{C~_j sym C_j})`,
/// with the standard error propagated by the delta method at the selected
/// minimizer/maximizer.
pub fn zeta(
    beta_star: &ParamBlocks,
    beta_tilde: &ParamBlocks,
    n: usize,
    seed: u64,
) -> Result<MonteCarloEstimate> {
    check_pair(beta_star, beta_tilde, "zeta")?;
    if n == 0 {
        return Err(Error::invalid("sample count must be >= 1"));
    }
    let (cone, sym) = cone_counts(beta_star, beta_tilde, n, seed);
    Ok(zeta_from_counts(&cone, &sym, n, seed))
}

fn zeta_from_counts(cone: &[u64], sym: &[u64], n: usize, seed: u64) -> MonteCarloEstimate {
    let nf = n as f64;
    let p_min = cone.iter().min().copied().unwrap_or(0) as f64 / nf;
    let q_max = sym.iter().max().copied().unwrap_or(0) as f64 / nf;
    let value = INF_BOUND_COEFF * p_min * p_min - 2.0 * q_max.sqrt();
    let se_p = (p_min * (1.0 - p_min) / nf).sqrt();
    let se_q = (q_max * (1.0 - q_max) / nf).sqrt();
    let dp = 2.0 * INF_BOUND_COEFF * p_min * se_p;
    let dq = if q_max > 0.0 { se_q / q_max.sqrt() } else { 0.0 };
    MonteCarloEstimate {
        value,
        std_error: (dp * dp + dq * dq).sqrt(),
        samples: n,
        seed,
    }
}

/// Analytic bounds on the directional expectations of a set of Gaussian
/// measure `prob`: the infimum of `E 1_A(g)|<g,w>|` is at least
/// `sqrt(pi/32) * prob^2` and the supremum of `E 1_A(g)<g,w>_+` is at most
/// `sqrt(prob)`, the contractual bound. `sup_upper_tight` carries the
/// sharper `sqrt(prob/2)` that the Cauchy-Schwarz route actually yields.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DirectionalBounds {
    pub inf_lower: f64,
    pub sup_upper: f64,
    pub sup_upper_tight: f64,
}

pub fn directional_expectation_bounds(prob: f64) -> Result<DirectionalBounds> {
    if !(0.0..=1.0).contains(&prob) {
        return Err(Error::invalid(format!("probability {prob} outside [0, 1]")));
    }
    Ok(DirectionalBounds {
        inf_lower: INF_BOUND_COEFF * prob * prob,
        sup_upper: prob.sqrt(),
        sup_upper_tight: (prob / 2.0).sqrt(),
    })
}

fn check_angle(theta_c: f64) -> Result<()> {
    if !(0.0..=PI).contains(&theta_c) {
        return Err(Error::invalid(format!("angle {theta_c} outside [0, pi]")));
    }
    Ok(())
}

/// Exact two-dimensional value of `inf_w E 1_C(g)|<g,w>|` for a wedge of
/// angular width `theta_c`: `sqrt(2/pi) * sin^2(theta_c/4)`.
pub fn cone2d_inf_expectation(theta_c: f64) -> Result<f64> {
    check_angle(theta_c)?;
    Ok((2.0 / PI).sqrt() * (theta_c / 4.0).sin().powi(2))
}

/// Exact two-dimensional value of `sup_w E 1_C(g)<g,w>_+` for a wedge of
/// angular width `theta_c`: `sin(theta_c/2) / sqrt(2*pi)`.
pub fn cone2d_sup_expectation(theta_c: f64) -> Result<f64> {
    check_angle(theta_c)?;
    Ok((theta_c / 2.0).sin() / (2.0 * PI).sqrt())
}

/// Closed-form `varrho` for two-dimensional wedge partitions.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Varrho2d {
    pub value: f64,
    /// Whether the smallest cone width dominates the largest total mismatch
    /// width, the regime in which the closed form applies.
    pub assumption_holds: bool,
}

/// Evaluates the two-dimensional closed form from per-cone widths and
/// per-cone mismatch widths `(gained_j, lost_j)` (the wedges claimed by the
/// initializer's cone `j` but not the truth's, and vice versa). All angles in
/// `[0, pi]`.
pub fn varrho_2d(widths: &[f64], mismatch_widths: &[(f64, f64)]) -> Result<Varrho2d> {
    if widths.is_empty() || widths.len() != mismatch_widths.len() {
        return Err(Error::dim("varrho_2d", widths.len(), mismatch_widths.len()));
    }
    for &w in widths {
        check_angle(w)?;
    }
    for &(a, b) in mismatch_widths {
        check_angle(a)?;
        check_angle(b)?;
    }
    let min_width = widths.iter().copied().fold(f64::INFINITY, f64::min);
    let max_gained = mismatch_widths.iter().map(|m| m.0).fold(0.0, f64::max);
    let max_lost = mismatch_widths.iter().map(|m| m.1).fold(0.0, f64::max);
    let max_total = mismatch_widths
        .iter()
        .map(|m| m.0 + m.1)
        .fold(0.0, f64::max);
    let value = cone2d_inf_expectation(min_width)?
        - cone2d_sup_expectation(max_gained)?
        - cone2d_sup_expectation(max_lost)?;
    Ok(Varrho2d {
        value,
        assumption_holds: min_width >= max_total,
    })
}

// ---------------------------------------------------------------------------
// Directional Monte Carlo
// ---------------------------------------------------------------------------

/// `m` directions drawn uniformly on the unit sphere of `R^p`.
pub fn uniform_directions(p: usize, m: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut stream = SeedStream::new(derive_seed(seed, &[TAG_DIRECTIONS]));
    (0..m).map(|_| stream.next_direction(p)).collect()
}

/// Evenly spaced unit directions on the circle (two-dimensional only).
pub fn circle_grid_directions(m: usize) -> Vec<Vec<f64>> {
    (0..m)
        .map(|i| {
            let a = 2.0 * PI * i as f64 / m as f64;
            vec![a.cos(), a.sin()]
        })
        .collect()
}

fn push_unit(out: &mut Vec<Vec<f64>>, v: &[f64]) {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 1e-12 {
        out.push(v.iter().map(|x| x / norm).collect());
    }
}

/// Candidate extremal directions tied to cone `j`: the block directions, the
/// facet normals `+-(beta_j - beta_l)`, and in two dimensions the wedge
/// boundary rays. Extremal directions of the wedge formulas sit on cone
/// boundaries and bisectors, so these sharpen the search at no cost.
pub fn cone_candidate_directions(beta: &ParamBlocks, j: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    for l in 0..beta.k() {
        push_unit(&mut out, beta.block(l));
        if l != j {
            let d: Vec<f64> = beta
                .block(j)
                .iter()
                .zip(beta.block(l))
                .map(|(a, b)| a - b)
                .collect();
            push_unit(&mut out, &d);
            let neg: Vec<f64> = d.iter().map(|v| -v).collect();
            push_unit(&mut out, &neg);
            if beta.p() == 2 {
                let alpha = d[1].atan2(d[0]);
                for side in [alpha + PI / 2.0, alpha - PI / 2.0] {
                    out.push(vec![side.cos(), side.sin()]);
                }
            }
        }
    }
    out
}

struct ExtremaAccum {
    /// Per (set, direction): sum of the statistic and sum of its square.
    sums: Vec<f64>,
    sq_sums: Vec<f64>,
}

impl ExtremaAccum {
    fn new(sets: usize, dirs: usize) -> Self {
        ExtremaAccum {
            sums: vec![0.0; sets * dirs],
            sq_sums: vec![0.0; sets * dirs],
        }
    }

    fn add(&mut self, set: usize, dirs: usize, dir: usize, v: f64) {
        self.sums[set * dirs + dir] += v;
        self.sq_sums[set * dirs + dir] += v * v;
    }

    fn merge(&mut self, other: &ExtremaAccum) {
        for (a, b) in self.sums.iter_mut().zip(&other.sums) {
            *a += b;
        }
        for (a, b) in self.sq_sums.iter_mut().zip(&other.sq_sums) {
            *a += b;
        }
    }

    fn estimate(&self, set: usize, dirs: usize, dir: usize, n: usize, seed: u64) -> MonteCarloEstimate {
        let mean = self.sums[set * dirs + dir] / n as f64;
        let var = (self.sq_sums[set * dirs + dir] / n as f64 - mean * mean).max(0.0);
        MonteCarloEstimate {
            value: mean,
            std_error: (var / n as f64).sqrt(),
            samples: n,
            seed,
        }
    }
}

/// One pass of `n` Gaussian draws accumulating, for every direction, the
/// statistics needed by the margin terms: `|<g,w>|` restricted to each cone
/// of `beta_star`, and `<g,w>_+` restricted to the two one-sided mismatch
/// sets against `beta_tilde`. Set layout: `[0, k)` cones, `[k, 2k)` gained
/// (`C~_j \ C_j`), `[2k, 3k)` lost (`C_j \ C~_j`).
fn directional_pass(
    beta_star: &ParamBlocks,
    beta_tilde: &ParamBlocks,
    directions: &[Vec<f64>],
    n: usize,
    seed: u64,
) -> ExtremaAccum {
    let k = beta_star.k();
    let p = beta_star.p();
    let ndir = directions.len();
    let flat_dirs: Vec<f64> = directions.iter().flat_map(|d| d.iter().copied()).collect();
    let same = beta_star.flat() == beta_tilde.flat();

    chunk_ranges(n)
        .into_par_iter()
        .enumerate()
        .map(|(c, (lo, hi))| {
            let mut stream = SeedStream::new(derive_seed(seed, &[TAG_EXTREMA, c as u64]));
            let mut acc = ExtremaAccum::new(3 * k, ndir);
            let mut g = vec![0.0; p];
            for _ in lo..hi {
                for v in g.iter_mut() {
                    *v = stream.next_gaussian();
                }
                let cs = cone_index(&g, beta_star).expect("dims fixed");
                let ct = if same {
                    cs
                } else {
                    cone_index(&g, beta_tilde).expect("dims fixed")
                };
                for d in 0..ndir {
                    let w = &flat_dirs[d * p..(d + 1) * p];
                    let dot: f64 = g.iter().zip(w).map(|(a, b)| a * b).sum();
                    acc.add(cs, ndir, d, dot.abs());
                    if cs != ct {
                        let pos = dot.max(0.0);
                        acc.add(k + ct, ndir, d, pos);
                        acc.add(2 * k + cs, ndir, d, pos);
                    }
                }
            }
            acc
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(ExtremaAccum::new(3 * k, ndir), |mut a, b| {
            a.merge(&b);
            a
        })
}

/// Directional extrema for one cone: the infimum over `directions` of
/// `E 1_{C_j}|<g,w>|` and the supremum of `E 1_{C_j}<g,w>_+`, from a shared
/// set of `n` draws.
pub fn cone_directional_extrema(
    beta: &ParamBlocks,
    j: usize,
    directions: &[Vec<f64>],
    n: usize,
    seed: u64,
) -> Result<(MonteCarloEstimate, MonteCarloEstimate)> {
    if n == 0 || directions.is_empty() {
        return Err(Error::invalid("need at least one draw and one direction"));
    }
    if j >= beta.k() {
        return Err(Error::invalid(format!("cone index {j} out of range")));
    }
    for d in directions {
        if d.len() != beta.p() {
            return Err(Error::dim("direction", beta.p(), d.len()));
        }
    }
    let p = beta.p();
    let ndir = directions.len();
    let flat_dirs: Vec<f64> = directions.iter().flat_map(|d| d.iter().copied()).collect();

    // Single-cone pass: |.| and (.)_+ per direction.
    let acc = chunk_ranges(n)
        .into_par_iter()
        .enumerate()
        .map(|(c, (lo, hi))| {
            let mut stream = SeedStream::new(derive_seed(seed, &[TAG_EXTREMA, c as u64]));
            let mut acc = ExtremaAccum::new(2, ndir);
            let mut g = vec![0.0; p];
            for _ in lo..hi {
                for v in g.iter_mut() {
                    *v = stream.next_gaussian();
                }
                if cone_index(&g, beta).expect("dims fixed") != j {
                    continue;
                }
                for d in 0..ndir {
                    let w = &flat_dirs[d * p..(d + 1) * p];
                    let dot: f64 = g.iter().zip(w).map(|(a, b)| a * b).sum();
                    acc.add(0, ndir, d, dot.abs());
                    acc.add(1, ndir, d, dot.max(0.0));
                }
            }
            acc
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(ExtremaAccum::new(2, ndir), |mut a, b| {
            a.merge(&b);
            a
        });

    let mut inf_est = acc.estimate(0, ndir, 0, n, seed);
    let mut sup_est = acc.estimate(1, ndir, 0, n, seed);
    for d in 1..ndir {
        let e = acc.estimate(0, ndir, d, n, seed);
        if e.value < inf_est.value {
            inf_est = e;
        }
        let e = acc.estimate(1, ndir, d, n, seed);
        if e.value > sup_est.value {
            sup_est = e;
        }
    }
    Ok((inf_est, sup_est))
}

/// Direction-sampled approximation of `varrho`. One-sided by construction:
/// the reported infimum term upper-bounds the true infimum and the reported
/// supremum terms lower-bound the true suprema, so `value` is an optimistic
/// approximation whose gap shrinks with the direction count.
#[derive(Debug, Clone, Serialize)]
pub struct VarrhoMcReport {
    pub estimate: MonteCarloEstimate,
    pub inf_term: MonteCarloEstimate,
    /// Supremum term over the sets the initializer's cones gained.
    pub sup_gain_term: MonteCarloEstimate,
    /// Supremum term over the sets the initializer's cones lost.
    pub sup_loss_term: MonteCarloEstimate,
    pub directions_searched: usize,
}

/// Monte Carlo `varrho`: minimizes/maximizes the directional expectations
/// over `m_dirs` sampled unit directions plus the cone candidate directions
/// of both parameter vectors.
pub fn varrho_mc(
    beta_star: &ParamBlocks,
    beta_tilde: &ParamBlocks,
    n_draws: usize,
    m_dirs: usize,
    seed: u64,
) -> Result<VarrhoMcReport> {
    check_pair(beta_star, beta_tilde, "varrho_mc")?;
    if n_draws == 0 || m_dirs == 0 {
        return Err(Error::invalid("need at least one draw and one direction"));
    }
    let k = beta_star.k();
    let p = beta_star.p();
    let mut directions = uniform_directions(p, m_dirs, seed);
    for j in 0..k {
        directions.extend(cone_candidate_directions(beta_star, j));
        directions.extend(cone_candidate_directions(beta_tilde, j));
    }
    let ndir = directions.len();
    let acc = directional_pass(beta_star, beta_tilde, &directions, n_draws, seed);

    let mut inf_term: Option<MonteCarloEstimate> = None;
    let mut gain: Option<MonteCarloEstimate> = None;
    let mut loss: Option<MonteCarloEstimate> = None;
    for j in 0..k {
        for d in 0..ndir {
            let e = acc.estimate(j, ndir, d, n_draws, seed);
            if inf_term.is_none_or(|cur| e.value < cur.value) {
                inf_term = Some(e);
            }
            let e = acc.estimate(k + j, ndir, d, n_draws, seed);
            if gain.is_none_or(|cur| e.value > cur.value) {
                gain = Some(e);
            }
            let e = acc.estimate(2 * k + j, ndir, d, n_draws, seed);
            if loss.is_none_or(|cur| e.value > cur.value) {
                loss = Some(e);
            }
        }
    }
    let inf_term = inf_term.expect("nonempty search");
    let gain = gain.expect("nonempty search");
    let loss = loss.expect("nonempty search");
    let value = inf_term.value - gain.value - loss.value;
    let std_error = (inf_term.std_error.powi(2)
        + gain.std_error.powi(2)
        + loss.std_error.powi(2))
    .sqrt();
    Ok(VarrhoMcReport {
        estimate: MonteCarloEstimate {
            value,
            std_error,
            samples: n_draws,
            seed,
        },
        inf_term,
        sup_gain_term: gain,
        sup_loss_term: loss,
        directions_searched: ndir,
    })
}

// ---------------------------------------------------------------------------
// Empirical processes
// ---------------------------------------------------------------------------

/// `V_z = (1/n) sum_i sum_j 1_{C_j}(x_i) |<x_i, z_j>|` with the cones taken
/// from `beta_star`.
pub fn empirical_v(x: &DenseMatrix, beta_star: &ParamBlocks, z: &ParamBlocks) -> Result<f64> {
    check_pair(beta_star, z, "empirical_v")?;
    if x.cols() != beta_star.p() {
        return Err(Error::dim("empirical_v", beta_star.p(), x.cols()));
    }
    let n = x.rows();
    let mut total = 0.0;
    for i in 0..n {
        let row = x.row(i);
        let j = cone_index(row, beta_star)?;
        let dot: f64 = row.iter().zip(z.block(j)).map(|(a, b)| a * b).sum();
        total += dot.abs();
    }
    Ok(total / n as f64)
}

/// `Q_z = (1/n) sum_i sum_j (1_{C~_j}(x_i) - 1_{C_j}(x_i)) <x_i, z_j>` with
/// `C` from `beta_star` and `C~` from `beta_tilde`.
pub fn empirical_q(
    x: &DenseMatrix,
    beta_star: &ParamBlocks,
    beta_tilde: &ParamBlocks,
    z: &ParamBlocks,
) -> Result<f64> {
    check_pair(beta_star, beta_tilde, "empirical_q")?;
    check_pair(beta_star, z, "empirical_q")?;
    if x.cols() != beta_star.p() {
        return Err(Error::dim("empirical_q", beta_star.p(), x.cols()));
    }
    let n = x.rows();
    let mut total = 0.0;
    for i in 0..n {
        let row = x.row(i);
        let cs = cone_index(row, beta_star)?;
        let ct = cone_index(row, beta_tilde)?;
        if cs != ct {
            let dot_t: f64 = row.iter().zip(z.block(ct)).map(|(a, b)| a * b).sum();
            let dot_s: f64 = row.iter().zip(z.block(cs)).map(|(a, b)| a * b).sum();
            total += dot_t - dot_s;
        }
    }
    Ok(total / n as f64)
}

// ---------------------------------------------------------------------------
// Sample complexity and error bound
// ---------------------------------------------------------------------------

/// `ceil(c * zeta^-2 * (4 p log^3 p log^5 k + 4 log(1/delta) log k))` with
/// natural logarithms floored at 1 so the threshold does not vanish at
/// `p = 1` or `k = 1` (the constant `c` absorbs base changes).
pub fn sample_complexity_threshold(
    p: usize,
    k: usize,
    delta: f64,
    zeta: f64,
    c: f64,
) -> Result<u64> {
    if p == 0 || k == 0 {
        return Err(Error::invalid("p and k must be >= 1"));
    }
    if !(0.0 < delta && delta < 1.0) {
        return Err(Error::invalid("delta must lie in (0, 1)"));
    }
    if zeta <= 0.0 || !zeta.is_finite() {
        return Err(Error::invalid("zeta must be positive"));
    }
    if c <= 0.0 || !c.is_finite() {
        return Err(Error::invalid("c must be positive"));
    }
    let lp = (p as f64).ln().max(1.0);
    let lk = (k as f64).ln().max(1.0);
    let raw = c / (zeta * zeta)
        * (4.0 * p as f64 * lp.powi(3) * lk.powi(5) + 4.0 * (1.0 / delta).ln() * lk);
    Ok(raw.ceil() as u64)
}

/// Right-hand side of the recovery error bound: `(2 / (zeta * n)) * sum |w_i|`.
pub fn error_bound_rhs(zeta: f64, w: &[f64]) -> Result<f64> {
    if zeta <= 0.0 || !zeta.is_finite() {
        return Err(Error::invalid("zeta must be positive"));
    }
    if w.is_empty() {
        return Err(Error::invalid("noise vector must be nonempty"));
    }
    let n = w.len() as f64;
    Ok(2.0 / (zeta * n) * w.iter().map(|v| v.abs()).sum::<f64>())
}

// ---------------------------------------------------------------------------
// Aggregated report
// ---------------------------------------------------------------------------

pub const DEFAULT_MC_SAMPLES: usize = 1_000_000;
pub const DEFAULT_MC_DIRECTIONS: usize = 10_000;

#[derive(Debug, Clone, Serialize)]
pub struct ConeReport {
    /// 1-based component index, matching the CSV convention.
    pub component: usize,
    pub probability: MonteCarloEstimate,
    pub symdiff_probability: MonteCarloEstimate,
    pub bounds: DirectionalBounds,
}

#[derive(Debug, Clone, Serialize)]
pub struct TheoryReport {
    pub k: usize,
    pub p: usize,
    pub samples: usize,
    pub seed: u64,
    pub cones: Vec<ConeReport>,
    pub pi_min: f64,
    pub zeta_hat: MonteCarloEstimate,
    pub varrho_hat: Option<VarrhoMcReport>,
    pub delta: f64,
    pub complexity_scale_c: f64,
    /// Absent when the estimated margin is nonpositive.
    pub sample_complexity_threshold: Option<u64>,
}

#[derive(Debug, Clone)]
pub struct TheoryOptions {
    pub samples: usize,
    pub seed: u64,
    pub delta: f64,
    pub complexity_scale_c: f64,
    /// When set, also run the directional margin with
    /// `(draws, directions)`.
    pub varrho: Option<(usize, usize)>,
}

impl Default for TheoryOptions {
    fn default() -> Self {
        TheoryOptions {
            samples: DEFAULT_MC_SAMPLES,
            seed: 0,
            delta: 0.05,
            complexity_scale_c: 1.0,
            varrho: None,
        }
    }
}

/// Runs the full diagnostic battery for a truth/initializer pair.
pub fn theory_report(
    beta_star: &ParamBlocks,
    beta_tilde: &ParamBlocks,
    options: &TheoryOptions,
) -> Result<TheoryReport> {
    check_pair(beta_star, beta_tilde, "theory_report")?;
    if options.samples == 0 {
        return Err(Error::invalid("sample count must be >= 1"));
    }
    let n = options.samples;
    let seed = options.seed;
    let (cone, sym) = cone_counts(beta_star, beta_tilde, n, seed);
    let k = beta_star.k();
    let mut cones = Vec::with_capacity(k);
    let mut pi_min = f64::INFINITY;
    for j in 0..k {
        let probability = binomial_estimate(cone[j], n, seed);
        let symdiff_probability = binomial_estimate(sym[j], n, seed);
        pi_min = pi_min.min(probability.value);
        cones.push(ConeReport {
            component: j + 1,
            probability,
            symdiff_probability,
            bounds: directional_expectation_bounds(probability.value)?,
        });
    }
    let zeta_hat = zeta_from_counts(&cone, &sym, n, seed);
    let varrho_hat = match options.varrho {
        Some((draws, dirs)) => Some(varrho_mc(beta_star, beta_tilde, draws, dirs, seed)?),
        None => None,
    };
    let sample_complexity = if zeta_hat.value > 0.0 {
        Some(sample_complexity_threshold(
            beta_star.p(),
            k,
            options.delta,
            zeta_hat.value,
            options.complexity_scale_c,
        )?)
    } else {
        None
    };
    Ok(TheoryReport {
        k,
        p: beta_star.p(),
        samples: n,
        seed,
        cones,
        pi_min,
        zeta_hat,
        varrho_hat,
        delta: options.delta,
        complexity_scale_c: options.complexity_scale_c,
        sample_complexity_threshold: sample_complexity,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pb(blocks: &[&[f64]]) -> ParamBlocks {
        ParamBlocks::from_blocks(&blocks.iter().map(|b| b.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    fn halfspace_pair() -> ParamBlocks {
        pb(&[&[1.0, 0.0], &[-1.0, 0.0]])
    }

    /// k=3 blocks on the circle at angles 0, +a, -a give cone 0 the angular
    /// width a (the adjacent bisectors sit at +-a/2).
    fn wedge_blocks(width: f64) -> ParamBlocks {
        pb(&[
            &[1.0, 0.0],
            &[width.cos(), width.sin()],
            &[width.cos(), -width.sin()],
        ])
    }

    #[test]
    fn halfspace_probability_is_half() {
        let beta = halfspace_pair();
        let est = mc_cone_probability(&beta, 0, 1_000_000, 7).unwrap();
        assert!((est.value - 0.5).abs() < 4.0 * est.std_error, "{est:?}");

        let single = pb(&[&[1.0, 0.5]]);
        let est = mc_cone_probability(&single, 0, 1000, 7).unwrap();
        assert_eq!(est.value, 1.0);
    }

    #[test]
    fn quarter_cone_probability() {
        // Four symmetric blocks in the plane: each cone has measure 1/4.
        let beta = pb(&[&[1.0, 0.0], &[0.0, 1.0], &[-1.0, 0.0], &[0.0, -1.0]]);
        let est = mc_cone_probability(&beta, 2, 1_000_000, 11).unwrap();
        assert!((est.value - 0.25).abs() < 4.0 * est.std_error, "{est:?}");
    }

    #[test]
    fn cone_probabilities_sum_to_one() {
        let beta = pb(&[&[0.3, 1.0, -0.2], &[1.0, -0.4, 0.0], &[-0.5, 0.2, 0.9]]);
        let n = 200_000;
        let mut total = 0.0;
        let mut var = 0.0;
        for j in 0..3 {
            let e = mc_cone_probability(&beta, j, n, 3).unwrap();
            total += e.value;
            var += e.std_error * e.std_error;
        }
        assert!((total - 1.0).abs() <= 4.0 * var.sqrt() + 1e-12);
    }

    #[test]
    fn symdiff_zero_for_identical_and_one_for_swapped() {
        let beta = halfspace_pair();
        let same = mc_symdiff_probability(&beta, &beta, 0, 50_000, 5).unwrap();
        assert_eq!(same.value, 0.0);

        let swapped = pb(&[&[-1.0, 0.0], &[1.0, 0.0]]);
        let est = mc_symdiff_probability(&beta, &swapped, 0, 200_000, 5).unwrap();
        assert!(est.value > 1.0 - 4.0 * est.std_error - 1e-9, "{est:?}");
    }

    #[test]
    fn symdiff_of_rotated_halfspace_has_angular_measure() {
        // Rotating the separating normal by alpha moves measure alpha/pi
        // into the symmetric difference of each cone.
        let alpha = 0.3f64;
        let beta = halfspace_pair();
        let rotated = pb(&[
            &[alpha.cos(), alpha.sin()],
            &[-alpha.cos(), -alpha.sin()],
        ]);
        let est = mc_symdiff_probability(&beta, &rotated, 0, 1_000_000, 13).unwrap();
        let expect = alpha / PI;
        assert!(
            (est.value - expect).abs() < 4.0 * est.std_error,
            "{est:?} vs {expect}"
        );
    }

    #[test]
    fn zeta_matches_halfspace_arithmetic() {
        let beta = halfspace_pair();
        let est = zeta(&beta, &beta, 1_000_000, 17).unwrap();
        let expect = INF_BOUND_COEFF * 0.25;
        assert!(
            (est.value - expect).abs() <= 4.0 * est.std_error + 1e-12,
            "{est:?} vs {expect}"
        );
        assert!((expect - 0.07833).abs() < 5e-6);

        let single = pb(&[&[0.2, 0.9]]);
        let est = zeta(&single, &single, 1000, 1).unwrap();
        assert!((est.value - INF_BOUND_COEFF).abs() < 1e-12);
        assert!((INF_BOUND_COEFF - 0.31333).abs() < 5e-6);
    }

    #[test]
    fn zeta_goes_negative_for_distant_initializer() {
        let beta = halfspace_pair();
        let swapped = pb(&[&[-1.0, 0.0], &[1.0, 0.0]]);
        let est = zeta(&beta, &swapped, 100_000, 19).unwrap();
        assert!(est.value < 0.0, "{est:?}");
    }

    #[test]
    fn inf_bound_coefficient_is_exact() {
        assert_eq!(INF_BOUND_COEFF, (PI / 32.0).sqrt());
    }

    #[test]
    fn bound_values() {
        let b = directional_expectation_bounds(0.0).unwrap();
        assert_eq!(b.inf_lower, 0.0);
        assert_eq!(b.sup_upper, 0.0);

        let b = directional_expectation_bounds(1.0).unwrap();
        assert!((b.inf_lower - 0.31333).abs() < 5e-6);
        assert_eq!(b.sup_upper, 1.0);
        assert!((b.sup_upper_tight - (0.5f64).sqrt()).abs() < 1e-15);

        assert!(directional_expectation_bounds(1.5).is_err());
    }

    #[test]
    fn wedge_formulas_at_reference_angles() {
        assert_eq!(cone2d_inf_expectation(0.0).unwrap(), 0.0);
        assert_eq!(cone2d_sup_expectation(0.0).unwrap(), 0.0);
        let inf_pi = cone2d_inf_expectation(PI).unwrap();
        let sup_pi = cone2d_sup_expectation(PI).unwrap();
        assert!((inf_pi - 0.39894).abs() < 5e-6);
        assert!((sup_pi - 0.39894).abs() < 5e-6);
        assert!((cone2d_inf_expectation(PI / 2.0).unwrap() - 0.1168475).abs() < 5e-7);
        assert!((cone2d_sup_expectation(PI / 3.0).unwrap() - 0.1994711).abs() < 5e-7);
        assert!(cone2d_inf_expectation(4.0).is_err());
    }

    #[test]
    fn varrho_2d_matches_wedge_formula_without_mismatch() {
        let widths = vec![PI / 2.0; 4];
        let mismatch = vec![(0.0, 0.0); 4];
        let v = varrho_2d(&widths, &mismatch).unwrap();
        assert!(v.assumption_holds);
        assert_eq!(v.value, cone2d_inf_expectation(PI / 2.0).unwrap());
        assert!((v.value - 0.1168475).abs() < 5e-7);

        let zero = varrho_2d(&[0.0, 0.0], &[(0.0, 0.0), (0.0, 0.0)]).unwrap();
        assert_eq!(zero.value, 0.0);

        let neg = varrho_2d(&[0.0], &[(0.4, 0.0)]).unwrap();
        assert!(neg.value < 0.0);
        assert!(!neg.assumption_holds);
    }

    #[test]
    fn wedge_construction_has_expected_width() {
        let width = PI / 3.0;
        let beta = wedge_blocks(width);
        let est = mc_cone_probability(&beta, 0, 400_000, 23).unwrap();
        let expect = width / (2.0 * PI);
        assert!(
            (est.value - expect).abs() < 4.0 * est.std_error,
            "{est:?} vs {expect}"
        );
    }

    #[test]
    fn directional_extrema_match_wedge_closed_forms() {
        let width = PI / 2.0;
        let beta = wedge_blocks(width);
        let mut dirs = circle_grid_directions(360);
        dirs.extend(cone_candidate_directions(&beta, 0));
        let (inf_est, sup_est) =
            cone_directional_extrema(&beta, 0, &dirs, 300_000, 29).unwrap();
        let inf_expect = cone2d_inf_expectation(width).unwrap();
        let sup_expect = cone2d_sup_expectation(width).unwrap();
        assert!(
            (inf_est.value - inf_expect).abs() <= 3.0 * inf_est.std_error + 0.02 * inf_expect,
            "inf {inf_est:?} vs {inf_expect}"
        );
        assert!(
            (sup_est.value - sup_expect).abs() <= 3.0 * sup_est.std_error + 0.02 * sup_expect,
            "sup {sup_est:?} vs {sup_expect}"
        );
    }

    #[test]
    fn varrho_mc_single_component_equals_gaussian_abs_mean() {
        let single = pb(&[&[0.7, -0.2, 0.4]]);
        let report = varrho_mc(&single, &single, 200_000, 400, 31).unwrap();
        assert_eq!(report.sup_gain_term.value, 0.0);
        assert_eq!(report.sup_loss_term.value, 0.0);
        let expect = (2.0 / PI).sqrt();
        assert!(
            (report.estimate.value - expect).abs()
                <= 3.0 * report.estimate.std_error + 0.02 * expect,
            "{report:?} vs {expect}"
        );
    }

    #[test]
    fn varrho_mc_agrees_with_closed_form_for_rotated_wedges() {
        // Four quarter-plane cones rotated by alpha: widths pi/2, each cone
        // gains and loses a wedge of width alpha.
        let alpha = 0.15f64;
        let blocks_at = |phase: f64| {
            let angles = [0.0, PI / 2.0, PI, 1.5 * PI];
            let rows: Vec<Vec<f64>> = angles
                .iter()
                .map(|a| vec![(a + phase).cos(), (a + phase).sin()])
                .collect();
            ParamBlocks::from_blocks(&rows).unwrap()
        };
        let star = blocks_at(0.0);
        let tilde = blocks_at(alpha);
        let closed = varrho_2d(&[PI / 2.0; 4], &[(alpha, alpha); 4]).unwrap();
        assert!(closed.assumption_holds);
        let report = varrho_mc(&star, &tilde, 400_000, 720, 37).unwrap();
        let tol = 3.0 * report.estimate.std_error + 0.02 * closed.value.abs() + 2e-3;
        assert!(
            (report.estimate.value - closed.value).abs() <= tol,
            "mc {} vs closed {} (tol {tol})",
            report.estimate.value,
            closed.value
        );
    }

    #[test]
    fn empirical_processes_hand_checks() {
        let star = pb(&[&[1.0, 0.0], &[-1.0, 0.0]]);
        let x = DenseMatrix::from_rows(&[
            vec![2.0, 1.0],
            vec![-1.0, 0.5],
            vec![0.5, -2.0],
        ])
        .unwrap();

        let zero = ParamBlocks::zeros(2, 2).unwrap();
        assert_eq!(empirical_v(&x, &star, &zero).unwrap(), 0.0);
        assert_eq!(empirical_q(&x, &star, &star, &zero).unwrap(), 0.0);

        // Q vanishes when both partitions agree, for any z.
        let z = pb(&[&[0.3, -1.0], &[2.0, 0.7]]);
        assert_eq!(empirical_q(&x, &star, &star, &z).unwrap(), 0.0);

        // k=1: V is the mean absolute inner product.
        let single = pb(&[&[1.0, 1.0]]);
        let zs = pb(&[&[0.5, -0.5]]);
        let direct = ((2.0f64 * 0.5 - 0.5).abs()
            + (-0.5f64 - 0.25).abs()
            + (0.25f64 + 1.0).abs())
            / 3.0;
        assert!((empirical_v(&x, &single, &zs).unwrap() - direct).abs() < 1e-15);

        // Rows: (2,1) in cone 0, (-1,0.5) in cone 1, (0.5,-2) in cone 0.
        let v = empirical_v(&x, &star, &z).unwrap();
        let expect = ((2.0f64 * 0.3 - 1.0).abs()
            + (-1.0f64 * 2.0 + 0.5 * 0.7).abs()
            + (0.5f64 * 0.3 + 2.0).abs())
            / 3.0;
        assert!((v - expect).abs() < 1e-15);
    }

    #[test]
    fn q_bounded_by_v_with_union_indicator() {
        let mut stream = SeedStream::new(41);
        for _ in 0..50 {
            let star = ParamBlocks::from_flat(
                2,
                3,
                (0..6).map(|_| stream.next_gaussian()).collect(),
            )
            .unwrap();
            let tilde = ParamBlocks::from_flat(
                2,
                3,
                star.flat()
                    .iter()
                    .map(|v| v + 0.3 * stream.next_gaussian())
                    .collect(),
            )
            .unwrap();
            let z = ParamBlocks::from_flat(
                2,
                3,
                (0..6).map(|_| stream.next_gaussian()).collect(),
            )
            .unwrap();
            let x = DenseMatrix::from_vec(
                20,
                3,
                (0..60).map(|_| stream.next_gaussian()).collect(),
            )
            .unwrap();
            let q = empirical_q(&x, &star, &tilde, &z).unwrap();
            // Coarse bound: |Q_z| <= V_z(star) + V_z(tilde) since each term
            // is an inner product counted with coefficient in {-1, 0, 1}.
            let v_star = empirical_v(&x, &star, &z).unwrap();
            let v_tilde = empirical_v(&x, &tilde, &z).unwrap();
            assert!(q.abs() <= v_star + v_tilde + 1e-12);
        }
    }

    #[test]
    fn threshold_arithmetic_and_scaling() {
        let base = sample_complexity_threshold(1, 1, (-1.0f64).exp(), 1.0, 1.0).unwrap();
        assert_eq!(base, 8);

        // Doubling zeta divides the threshold by four (up to ceiling).
        let t1 = sample_complexity_threshold(7, 3, 0.05, 0.1, 2.0).unwrap();
        let t2 = sample_complexity_threshold(7, 3, 0.05, 0.2, 2.0).unwrap();
        assert!((t1 as f64 / t2 as f64 - 4.0).abs() < 0.01);

        // Halving delta adds c * zeta^-2 * 4 ln2 * log k before ceiling.
        let a = sample_complexity_threshold(4, 5, 0.1, 0.5, 1.0).unwrap();
        let b = sample_complexity_threshold(4, 5, 0.05, 0.5, 1.0).unwrap();
        let expect = 1.0 / 0.25 * 4.0 * 2.0f64.ln() * (5.0f64).ln();
        assert!((b as f64 - a as f64 - expect).abs() <= 1.0);

        assert!(sample_complexity_threshold(4, 5, 0.1, 0.0, 1.0).is_err());
    }

    #[test]
    fn error_bound_arithmetic() {
        assert_eq!(error_bound_rhs(0.5, &[0.0, 0.0]).unwrap(), 0.0);
        let v = error_bound_rhs(0.1, &[1.0, -1.0, 2.0, 0.0]).unwrap();
        assert!((v - 20.0).abs() < 1e-12);
        let scaled = error_bound_rhs(0.1, &[3.0, -3.0, 6.0, 0.0]).unwrap();
        assert!((scaled - 60.0).abs() < 1e-12);
        assert!(error_bound_rhs(0.0, &[1.0]).is_err());
    }

    #[test]
    fn report_is_deterministic_and_consistent() {
        let star = halfspace_pair();
        let opts = TheoryOptions {
            samples: 50_000,
            seed: 99,
            varrho: Some((20_000, 64)),
            ..TheoryOptions::default()
        };
        let a = theory_report(&star, &star, &opts).unwrap();
        let b = theory_report(&star, &star, &opts).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
        assert_eq!(a.cones.len(), 2);
        assert!(a.pi_min <= a.cones[0].probability.value);
        assert!(a.sample_complexity_threshold.is_some());
        let total: f64 = a.cones.iter().map(|c| c.probability.value).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }
}
