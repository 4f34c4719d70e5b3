//! Shared test utilities: an exhaustive vertex-enumeration LP oracle and a
//! random instance generator. The oracle is independent of the simplex
//! implementation: it solves every d-subset of the constraint set as a
//! linear system, filters feasible basic points, and decides unboundedness
//! by enumerating the recession cone's simplex-normalized directions. Valid
//! for pointed problems (every variable carries a finite lower bound, which
//! the generator guarantees).

use maxlin::lp::{LpProblem, Sense, VarBounds};
use maxlin::synth::SeedStream;

const FEAS_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OracleOutcome {
    Optimal(f64),
    Infeasible,
    Unbounded,
}

struct Row {
    coeffs: Vec<f64>,
    sense: Sense,
    rhs: f64,
}

fn gather_rows(p: &LpProblem) -> Vec<Row> {
    let mut rows: Vec<Row> = p
        .constraints
        .iter()
        .map(|c| Row {
            coeffs: c.coeffs.clone(),
            sense: c.sense,
            rhs: c.rhs,
        })
        .collect();
    for (i, b) in p.bounds.iter().enumerate() {
        let mut unit = vec![0.0; p.num_vars];
        unit[i] = 1.0;
        if b.lower.is_finite() {
            rows.push(Row {
                coeffs: unit.clone(),
                sense: Sense::Ge,
                rhs: b.lower,
            });
        }
        if b.upper.is_finite() {
            rows.push(Row {
                coeffs: unit,
                sense: Sense::Le,
                rhs: b.upper,
            });
        }
    }
    rows
}

fn solve_square(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let d = b.len();
    let mut m: Vec<Vec<f64>> = a.to_vec();
    let mut rhs = b.to_vec();
    for k in 0..d {
        let (piv, best) = (k..d)
            .map(|r| (r, m[r][k].abs()))
            .max_by(|x, y| x.1.total_cmp(&y.1))?;
        if best < 1e-9 {
            return None;
        }
        m.swap(k, piv);
        rhs.swap(k, piv);
        for r in k + 1..d {
            let f = m[r][k] / m[k][k];
            if f != 0.0 {
                for c in k..d {
                    m[r][c] -= f * m[k][c];
                }
                rhs[r] -= f * rhs[k];
            }
        }
    }
    let mut x = vec![0.0; d];
    for k in (0..d).rev() {
        let mut s = rhs[k];
        for c in k + 1..d {
            s -= m[k][c] * x[c];
        }
        x[k] = s / m[k][k];
    }
    Some(x)
}

fn feasible(rows: &[Row], x: &[f64]) -> bool {
    rows.iter().all(|row| {
        let ax: f64 = row.coeffs.iter().zip(x).map(|(a, v)| a * v).sum();
        match row.sense {
            Sense::Le => ax <= row.rhs + FEAS_TOL,
            Sense::Ge => ax >= row.rhs - FEAS_TOL,
            Sense::Eq => (ax - row.rhs).abs() <= FEAS_TOL,
        }
    })
}

/// Best objective over all feasible basic points, if any.
fn best_vertex(rows: &[Row], objective: &[f64]) -> Option<f64> {
    let d = objective.len();
    let n = rows.len();
    let mut best: Option<f64> = None;
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize != d {
            continue;
        }
        let chosen: Vec<&Row> = (0..n).filter(|i| mask & (1 << i) != 0).map(|i| &rows[i]).collect();
        let a: Vec<Vec<f64>> = chosen.iter().map(|r| r.coeffs.clone()).collect();
        let b: Vec<f64> = chosen.iter().map(|r| r.rhs).collect();
        let Some(x) = solve_square(&a, &b) else { continue };
        if feasible(rows, &x) {
            let obj: f64 = objective.iter().zip(&x).map(|(c, v)| c * v).sum();
            best = Some(best.map_or(obj, |cur: f64| cur.max(obj)));
        }
    }
    best
}

/// Whether the recession cone contains an objective-improving ray. The cone
/// lives in the nonnegative orthant (finite lower bounds), so normalizing by
/// `sum d_i = 1` yields a bounded polytope whose vertices we enumerate.
fn has_improving_ray(p: &LpProblem) -> bool {
    let d = p.num_vars;
    let mut rows: Vec<Row> = p
        .constraints
        .iter()
        .map(|c| Row {
            coeffs: c.coeffs.clone(),
            sense: c.sense,
            rhs: 0.0,
        })
        .collect();
    for (i, b) in p.bounds.iter().enumerate() {
        assert!(b.lower.is_finite(), "oracle needs pointed problems");
        let mut unit = vec![0.0; d];
        unit[i] = 1.0;
        rows.push(Row {
            coeffs: unit.clone(),
            sense: Sense::Ge,
            rhs: 0.0,
        });
        if b.upper.is_finite() {
            rows.push(Row {
                coeffs: unit,
                sense: Sense::Le,
                rhs: 0.0,
            });
        }
    }
    rows.push(Row {
        coeffs: vec![1.0; d],
        sense: Sense::Eq,
        rhs: 1.0,
    });
    match best_vertex(&rows, &p.objective) {
        Some(gain) => gain > 1e-6,
        None => false,
    }
}

pub fn oracle_solve(p: &LpProblem) -> OracleOutcome {
    let rows = gather_rows(p);
    match best_vertex(&rows, &p.objective) {
        None => OracleOutcome::Infeasible,
        Some(best) => {
            if has_improving_ray(p) {
                OracleOutcome::Unbounded
            } else {
                OracleOutcome::Optimal(best)
            }
        }
    }
}

/// Random pointed LP with up to `max_vars` variables and `max_rows` rows;
/// roughly a third of the instances use small-integer data to stress
/// degenerate pivoting.
pub fn random_lp(seed: u64, max_vars: usize, max_rows: usize) -> LpProblem {
    let mut s = SeedStream::new(seed);
    let d = 1 + (s.next_u64() as usize) % max_vars;
    let m = 1 + (s.next_u64() as usize) % max_rows;
    let integer = s.next_f64() < 0.3;
    let coef = |s: &mut SeedStream| {
        if integer {
            (s.next_u64() % 5) as f64 - 2.0
        } else {
            4.0 * s.next_f64() - 2.0
        }
    };

    let objective: Vec<f64> = (0..d).map(|_| coef(&mut s)).collect();
    let mut bounds = Vec::with_capacity(d);
    for _ in 0..d {
        if s.next_f64() < 0.25 {
            bounds.push(VarBounds::range(0.0, 0.5 + 2.5 * s.next_f64()));
        } else {
            bounds.push(VarBounds::nonnegative());
        }
    }
    let mut p = LpProblem::with_bounds(objective, bounds);
    for _ in 0..m {
        let coeffs: Vec<f64> = (0..d).map(|_| coef(&mut s)).collect();
        let roll = s.next_f64();
        // Bias toward satisfiable rows so the corpus keeps a healthy mix of
        // optimal instances next to infeasible and unbounded ones.
        let (sense, rhs) = if roll < 0.6 {
            (Sense::Le, coef(&mut s) + 1.0)
        } else if roll < 0.85 {
            (Sense::Ge, coef(&mut s) - 1.0)
        } else {
            (Sense::Eq, coef(&mut s))
        };
        p.add_constraint(coeffs, sense, rhs);
    }
    p
}
