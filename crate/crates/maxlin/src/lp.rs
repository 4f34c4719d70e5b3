//! Dense-input linear programming by two-phase revised simplex.
//!
//! Problems arrive in inequality form (maximize `c^T x` subject to rows with
//! `<=`, `>=`, `=` senses and per-variable bounds). [`to_standard_form`]
//! rewrites them to equality form with nonnegative variables: free variables
//! split into nonnegative pairs, shifted/mirrored variables absorb finite
//! bounds, and slack/surplus columns close the inequalities. The solver runs
//! phase 1 over artificial columns, then phase 2 with the original objective.
//!
//! The basis is held as a factorization: unit-reachable columns are peeled
//! off by iterated singleton elimination and the residual bump is factored by
//! dense LU with partial pivoting. Pivots apply product-form eta updates and
//! the basis is refactorized from scratch every [`REFACTOR_INTERVAL`] pivots.
//! Pricing is Dantzig's rule with a permanent switch to Bland's rule after
//! [`STALL_LIMIT`] consecutive non-improving pivots, which guarantees
//! termination on degenerate instances.

use crate::error::{Error, LpFailure, Result};

/// Default feasibility and reduced-cost tolerance, relative to row scale.
pub const DEFAULT_TOL: f64 = 1e-9;
/// Pivots between basis refactorizations.
pub const REFACTOR_INTERVAL: usize = 50;
/// Consecutive non-improving pivots before Bland's rule engages.
pub const STALL_LIMIT: usize = 200;
/// Iteration cap factor: the default cap is `50 * (rows + cols)`.
pub const ITER_CAP_FACTOR: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

/// One dense constraint row.
#[derive(Debug, Clone)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub sense: Sense,
    pub rhs: f64,
}

/// Per-variable lower/upper bound; either side may be infinite.
#[derive(Debug, Clone, Copy)]
pub struct VarBounds {
    pub lower: f64,
    pub upper: f64,
}

impl VarBounds {
    pub fn nonnegative() -> Self {
        VarBounds {
            lower: 0.0,
            upper: f64::INFINITY,
        }
    }

    pub fn free() -> Self {
        VarBounds {
            lower: f64::NEG_INFINITY,
            upper: f64::INFINITY,
        }
    }

    pub fn range(lower: f64, upper: f64) -> Self {
        VarBounds { lower, upper }
    }
}

/// A dense LP in inequality form; the objective is always maximized.
#[derive(Debug, Clone)]
pub struct LpProblem {
    pub num_vars: usize,
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
    pub bounds: Vec<VarBounds>,
}

impl LpProblem {
    /// Problem with the given objective and all variables nonnegative.
    pub fn new(objective: Vec<f64>) -> Self {
        let num_vars = objective.len();
        LpProblem {
            num_vars,
            objective,
            constraints: Vec::new(),
            bounds: vec![VarBounds::nonnegative(); num_vars],
        }
    }

    pub fn with_bounds(objective: Vec<f64>, bounds: Vec<VarBounds>) -> Self {
        let num_vars = objective.len();
        LpProblem {
            num_vars,
            objective,
            constraints: Vec::new(),
            bounds,
        }
    }

    pub fn add_constraint(&mut self, coeffs: Vec<f64>, sense: Sense, rhs: f64) {
        self.constraints.push(Constraint { coeffs, sense, rhs });
    }

    pub fn validate(&self) -> Result<()> {
        if self.objective.len() != self.num_vars {
            return Err(Error::dim("LpProblem objective", self.num_vars, self.objective.len()));
        }
        if self.bounds.len() != self.num_vars {
            return Err(Error::dim("LpProblem bounds", self.num_vars, self.bounds.len()));
        }
        if !self.objective.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("LpProblem objective"));
        }
        for (i, c) in self.constraints.iter().enumerate() {
            if c.coeffs.len() != self.num_vars {
                return Err(Error::dim("LpProblem constraint row", self.num_vars, c.coeffs.len()));
            }
            if !c.rhs.is_finite() || !c.coeffs.iter().all(|v| v.is_finite()) {
                return Err(Error::invalid(format!("constraint {i} has non-finite data")));
            }
        }
        for (i, b) in self.bounds.iter().enumerate() {
            if b.lower.is_nan() || b.upper.is_nan() || b.lower > b.upper {
                return Err(Error::invalid(format!("variable {i} has invalid bounds")));
            }
        }
        Ok(())
    }

    /// Plain-text dump (objective line, one constraint per line, bounds) for
    /// external cross-checking.
    pub fn dump(&self) -> String {
        fn term(first: &mut bool, coef: f64, var: usize, out: &mut String) {
            if coef == 0.0 {
                return;
            }
            if *first {
                out.push_str(&format!("{coef} x{var}"));
                *first = false;
            } else if coef < 0.0 {
                out.push_str(&format!(" - {} x{var}", -coef));
            } else {
                out.push_str(&format!(" + {coef} x{var}"));
            }
        }
        let mut out = String::from("max:");
        let mut first = true;
        out.push(' ');
        for (j, &c) in self.objective.iter().enumerate() {
            term(&mut first, c, j, &mut out);
        }
        if first {
            out.push('0');
        }
        out.push('\n');
        for c in &self.constraints {
            let mut line = String::new();
            let mut first = true;
            for (j, &a) in c.coeffs.iter().enumerate() {
                term(&mut first, a, j, &mut line);
            }
            if first {
                line.push('0');
            }
            let op = match c.sense {
                Sense::Le => "<=",
                Sense::Ge => ">=",
                Sense::Eq => "=",
            };
            out.push_str(&format!("{line} {op} {}\n", c.rhs));
        }
        for (j, b) in self.bounds.iter().enumerate() {
            out.push_str(&format!("{} <= x{j} <= {}\n", b.lower, b.upper));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Solver outcome. `x`, `objective_value`, and `row_duals` are present only
/// for optimal terminations; `row_duals[i]` is the multiplier of original
/// constraint `i`.
#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Option<Vec<f64>>,
    pub objective_value: Option<f64>,
    pub iterations: usize,
    pub row_duals: Option<Vec<f64>>,
}

/// Feasibility report from [`verify_solution`]: raw maximum violation plus a
/// verdict at the given relative tolerance.
#[derive(Debug, Clone)]
pub struct VerifyReport {
    pub feasible: bool,
    pub max_violation: f64,
    pub objective: f64,
}

/// Pure feasibility check of `x` against `problem`; no solving. Row `i` is
/// accepted when its violation is at most `tol * (1 + |rhs_i|)`, bounds
/// likewise.
pub fn verify_solution(problem: &LpProblem, x: &[f64], tol: f64) -> Result<VerifyReport> {
    problem.validate()?;
    if x.len() != problem.num_vars {
        return Err(Error::dim("verify_solution", problem.num_vars, x.len()));
    }
    let mut max_violation = 0.0f64;
    let mut feasible = true;
    for c in &problem.constraints {
        let ax: f64 = c.coeffs.iter().zip(x).map(|(a, v)| a * v).sum();
        let violation = match c.sense {
            Sense::Le => (ax - c.rhs).max(0.0),
            Sense::Ge => (c.rhs - ax).max(0.0),
            Sense::Eq => (ax - c.rhs).abs(),
        };
        max_violation = max_violation.max(violation);
        if violation > tol * (1.0 + c.rhs.abs()) {
            feasible = false;
        }
    }
    for (j, b) in problem.bounds.iter().enumerate() {
        let below = (b.lower - x[j]).max(0.0);
        let above = (x[j] - b.upper).max(0.0);
        let violation = below.max(above);
        if violation > 0.0 {
            max_violation = max_violation.max(violation);
            let scale = 1.0 + b.lower.abs().min(b.upper.abs());
            if violation > tol * scale {
                feasible = false;
            }
        }
    }
    let objective: f64 = problem.objective.iter().zip(x).map(|(c, v)| c * v).sum();
    Ok(VerifyReport {
        feasible,
        max_violation,
        objective,
    })
}

// ---------------------------------------------------------------------------
// Standard form
// ---------------------------------------------------------------------------

pub(crate) type SparseCol = Vec<(u32, f64)>;

/// Sparse inequality-form LP; the internal currency of the solver. The public
/// [`LpProblem`] converts losslessly into this.
#[derive(Debug, Clone)]
pub(crate) struct SparseLp {
    pub num_vars: usize,
    pub objective: Vec<f64>,
    pub rows: Vec<(Vec<(u32, f64)>, Sense, f64)>,
    pub bounds: Vec<VarBounds>,
}

impl SparseLp {
    fn from_problem(p: &LpProblem) -> SparseLp {
        let rows = p
            .constraints
            .iter()
            .map(|c| {
                let coeffs: Vec<(u32, f64)> = c
                    .coeffs
                    .iter()
                    .enumerate()
                    .filter(|(_, &v)| v != 0.0)
                    .map(|(j, &v)| (j as u32, v))
                    .collect();
                (coeffs, c.sense, c.rhs)
            })
            .collect();
        SparseLp {
            num_vars: p.num_vars,
            objective: p.objective.clone(),
            rows,
            bounds: p.bounds.clone(),
        }
    }
}

/// How an original variable is rebuilt from canonical columns.
#[derive(Debug, Clone, Copy)]
enum VarRecon {
    /// `x = offset + x_col`
    Shifted { col: usize, offset: f64 },
    /// `x = offset - x_col`
    Mirrored { col: usize, offset: f64 },
    /// `x = x_pos - x_neg`
    Split { pos: usize, neg: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum RowOrigin {
    Constraint(usize),
    UpperBound(usize),
}

/// Equality-form problem `max c^T x, A x = b, x >= 0` plus the mapping back
/// to the original variables and rows.
#[derive(Debug, Clone)]
pub struct StandardForm {
    /// Structural canonical columns (before slack/surplus).
    pub num_structural: usize,
    /// Total canonical columns including slack/surplus.
    pub num_cols: usize,
    pub num_rows: usize,
    pub objective_offset: f64,
    cols: Vec<SparseCol>,
    obj: Vec<f64>,
    rhs: Vec<f64>,
    /// Combined row scale and sign flip: canonical row = factor * original row.
    row_factor: Vec<f64>,
    row_origin: Vec<RowOrigin>,
    recon: Vec<VarRecon>,
    num_original_rows: usize,
}

impl StandardForm {
    /// Rebuilds a point in the original variable space from canonical
    /// coordinates (slack entries are ignored).
    pub fn reconstruct(&self, canonical_x: &[f64]) -> Vec<f64> {
        self.recon
            .iter()
            .map(|r| match *r {
                VarRecon::Shifted { col, offset } => offset + canonical_x[col],
                VarRecon::Mirrored { col, offset } => offset - canonical_x[col],
                VarRecon::Split { pos, neg } => canonical_x[pos] - canonical_x[neg],
            })
            .collect()
    }

    /// Canonical objective value of a canonical point, including the offset
    /// from bound shifts.
    pub fn canonical_objective(&self, canonical_x: &[f64]) -> f64 {
        self.objective_offset
            + self
                .obj
                .iter()
                .zip(canonical_x)
                .map(|(c, v)| c * v)
                .sum::<f64>()
    }
}

/// Rewrites `problem` into equality standard form with nonnegative variables.
pub fn to_standard_form(problem: &LpProblem) -> Result<StandardForm> {
    problem.validate()?;
    standardize(&SparseLp::from_problem(problem))
}

fn standardize(lp: &SparseLp) -> Result<StandardForm> {
    let mut cols: Vec<SparseCol> = Vec::new();
    let mut obj: Vec<f64> = Vec::new();
    let mut recon = Vec::with_capacity(lp.num_vars);
    let mut objective_offset = 0.0;
    // Pending rhs adjustment per original row from variable shifts.
    let mut rhs_shift = vec![0.0; lp.rows.len()];
    // Extra `x_col <= rhs` rows from two-sided bounds.
    let mut bound_rows: Vec<(usize, f64)> = Vec::new();

    // Column entries are filled after we know each variable's column index:
    // original column j contributes to rows via lp.rows, so build a
    // column-wise view of the row data first.
    let mut var_entries: Vec<Vec<(u32, f64)>> = vec![Vec::new(); lp.num_vars];
    for (r, (coeffs, _, _)) in lp.rows.iter().enumerate() {
        for &(j, v) in coeffs {
            var_entries[j as usize].push((r as u32, v));
        }
    }

    for j in 0..lp.num_vars {
        let b = lp.bounds[j];
        if b.lower.is_infinite() && b.lower > 0.0 || b.upper.is_infinite() && b.upper < 0.0 {
            return Err(Error::invalid(format!("variable {j} has inverted infinite bounds")));
        }
        let entries = &var_entries[j];
        let c_j = lp.objective[j];
        if b.lower.is_finite() {
            // x = lower + x'
            let col = cols.len();
            cols.push(entries.clone());
            obj.push(c_j);
            recon.push(VarRecon::Shifted { col, offset: b.lower });
            if b.lower != 0.0 {
                objective_offset += c_j * b.lower;
                for &(r, v) in entries {
                    rhs_shift[r as usize] += v * b.lower;
                }
            }
            if b.upper.is_finite() {
                bound_rows.push((col, b.upper - b.lower));
            }
        } else if b.upper.is_finite() {
            // x = upper - x''
            let col = cols.len();
            cols.push(entries.iter().map(|&(r, v)| (r, -v)).collect());
            obj.push(-c_j);
            recon.push(VarRecon::Mirrored { col, offset: b.upper });
            objective_offset += c_j * b.upper;
            for &(r, v) in entries {
                rhs_shift[r as usize] += v * b.upper;
            }
        } else {
            // free: x = x+ - x-
            let pos = cols.len();
            cols.push(entries.clone());
            obj.push(c_j);
            let neg = cols.len();
            cols.push(entries.iter().map(|&(r, v)| (r, -v)).collect());
            obj.push(-c_j);
            recon.push(VarRecon::Split { pos, neg });
        }
    }

    let num_original_rows = lp.rows.len();
    let num_rows = num_original_rows + bound_rows.len();
    let mut rhs = Vec::with_capacity(num_rows);
    let mut senses = Vec::with_capacity(num_rows);
    let mut row_origin = Vec::with_capacity(num_rows);
    for (r, (_, sense, rho)) in lp.rows.iter().enumerate() {
        rhs.push(rho - rhs_shift[r]);
        senses.push(*sense);
        row_origin.push(RowOrigin::Constraint(r));
    }
    for &(col, ub) in &bound_rows {
        rhs.push(ub);
        senses.push(Sense::Le);
        row_origin.push(RowOrigin::UpperBound(col));
    }

    // Bound rows live at indices >= num_original_rows; add their entries.
    for (extra, &(col, _)) in bound_rows.iter().enumerate() {
        cols[col].push(((num_original_rows + extra) as u32, 1.0));
    }

    // Row scaling to unit max magnitude, then sign normalization to rhs >= 0.
    let mut max_abs = vec![0.0f64; num_rows];
    for col in &cols {
        for &(r, v) in col {
            let m = &mut max_abs[r as usize];
            *m = m.max(v.abs());
        }
    }
    let mut row_factor = vec![1.0; num_rows];
    for r in 0..num_rows {
        let scale = if max_abs[r] > 0.0 { 1.0 / max_abs[r] } else { 1.0 };
        let flip = if rhs[r] * scale < 0.0 { -1.0 } else { 1.0 };
        row_factor[r] = scale * flip;
        rhs[r] *= row_factor[r];
        if flip < 0.0 {
            senses[r] = match senses[r] {
                Sense::Le => Sense::Ge,
                Sense::Ge => Sense::Le,
                Sense::Eq => Sense::Eq,
            };
        }
    }
    for col in &mut cols {
        for (r, v) in col.iter_mut() {
            *v *= row_factor[*r as usize];
        }
        col.retain(|&(_, v)| v != 0.0);
        col.sort_by_key(|&(r, _)| r);
    }

    // Slack and surplus columns.
    let num_structural = cols.len();
    for (r, sense) in senses.iter().enumerate() {
        match sense {
            Sense::Le => {
                cols.push(vec![(r as u32, 1.0)]);
                obj.push(0.0);
            }
            Sense::Ge => {
                cols.push(vec![(r as u32, -1.0)]);
                obj.push(0.0);
            }
            Sense::Eq => {}
        }
    }

    Ok(StandardForm {
        num_structural,
        num_cols: cols.len(),
        num_rows,
        objective_offset,
        cols,
        obj,
        rhs,
        row_factor,
        row_origin,
        recon,
        num_original_rows,
    })
}

// ---------------------------------------------------------------------------
// Basis factorization: singleton elimination + dense LU bump
// ---------------------------------------------------------------------------

/// Dense LU with partial pivoting (row-major).
struct DenseLu {
    n: usize,
    lu: Vec<f64>,
    swaps: Vec<usize>,
}

impl DenseLu {
    fn factor(n: usize, mut a: Vec<f64>) -> Option<DenseLu> {
        let mut swaps = vec![0; n];
        for k in 0..n {
            let mut piv = k;
            let mut best = a[k * n + k].abs();
            for i in k + 1..n {
                let v = a[i * n + k].abs();
                if v > best {
                    best = v;
                    piv = i;
                }
            }
            if best < 1e-13 {
                return None;
            }
            swaps[k] = piv;
            if piv != k {
                for j in 0..n {
                    a.swap(k * n + j, piv * n + j);
                }
            }
            let pivot = a[k * n + k];
            for i in k + 1..n {
                let factor = a[i * n + k] / pivot;
                a[i * n + k] = factor;
                if factor != 0.0 {
                    let (head, tail) = a.split_at_mut((i) * n);
                    let row_k = &head[k * n + k + 1..k * n + n];
                    let row_i = &mut tail[k + 1..n];
                    for (vi, vk) in row_i.iter_mut().zip(row_k) {
                        *vi -= factor * vk;
                    }
                }
            }
        }
        Some(DenseLu { n, lu: a, swaps })
    }

    fn solve(&self, x: &mut [f64]) {
        let n = self.n;
        for k in 0..n {
            x.swap(k, self.swaps[k]);
        }
        for i in 1..n {
            let mut s = x[i];
            for j in 0..i {
                s -= self.lu[i * n + j] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..n {
                s -= self.lu[i * n + j] * x[j];
            }
            x[i] = s / self.lu[i * n + i];
        }
    }

    fn solve_transpose(&self, x: &mut [f64]) {
        let n = self.n;
        // U^T z = x (forward), then L^T w = z (backward), then undo swaps.
        for i in 0..n {
            let mut s = x[i];
            for j in 0..i {
                s -= self.lu[j * n + i] * x[j];
            }
            x[i] = s / self.lu[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..n {
                s -= self.lu[j * n + i] * x[j];
            }
            x[i] = s;
        }
        for k in (0..n).rev() {
            x.swap(k, self.swaps[k]);
        }
    }
}

/// Factorization of the basis matrix. Rows reachable through columns with a
/// single live nonzero are eliminated first (in LP bases most slack columns
/// qualify), leaving a small dense bump for the LU.
struct BasisFactor {
    m: usize,
    /// (row, basis position, pivot value) in elimination order.
    singles: Vec<(usize, usize, f64)>,
    bump_rows: Vec<usize>,
    bump_positions: Vec<usize>,
    row_to_bump: Vec<usize>,
    lu: Option<DenseLu>,
    /// Copies of the basic columns, position-aligned.
    columns: Vec<SparseCol>,
}

const NONE: usize = usize::MAX;

impl BasisFactor {
    fn factor(m: usize, columns: Vec<SparseCol>) -> std::result::Result<BasisFactor, ()> {
        debug_assert_eq!(columns.len(), m);
        let mut row_alive = vec![true; m];
        let mut col_alive = vec![true; m];
        let mut count: Vec<usize> = columns.iter().map(|c| c.len()).collect();
        let mut row_cols: Vec<Vec<u32>> = vec![Vec::new(); m];
        for (pos, col) in columns.iter().enumerate() {
            for &(r, _) in col {
                row_cols[r as usize].push(pos as u32);
            }
        }
        let mut queue: Vec<usize> = (0..m).filter(|&pos| count[pos] == 1).collect();
        let mut singles = Vec::new();
        while let Some(pos) = queue.pop() {
            if !col_alive[pos] || count[pos] != 1 {
                continue;
            }
            let mut live = NONE;
            let mut pivot = 0.0;
            for &(r, v) in &columns[pos] {
                if row_alive[r as usize] {
                    live = r as usize;
                    pivot = v;
                    break;
                }
            }
            if live == NONE || pivot.abs() < 1e-13 {
                // Count said one live entry but the value is unusable; leave
                // this column for the bump.
                if live == NONE {
                    return Err(());
                }
                continue;
            }
            singles.push((live, pos, pivot));
            col_alive[pos] = false;
            row_alive[live] = false;
            for &other in &row_cols[live] {
                let other = other as usize;
                if col_alive[other] {
                    count[other] -= 1;
                    if count[other] == 1 {
                        queue.push(other);
                    } else if count[other] == 0 {
                        return Err(());
                    }
                }
            }
        }

        let bump_rows: Vec<usize> = (0..m).filter(|&r| row_alive[r]).collect();
        let bump_positions: Vec<usize> = (0..m).filter(|&p| col_alive[p]).collect();
        if bump_rows.len() != bump_positions.len() {
            return Err(());
        }
        let mut row_to_bump = vec![NONE; m];
        for (i, &r) in bump_rows.iter().enumerate() {
            row_to_bump[r] = i;
        }
        let s = bump_rows.len();
        let lu = if s > 0 {
            let mut dense = vec![0.0; s * s];
            for (bc, &pos) in bump_positions.iter().enumerate() {
                for &(r, v) in &columns[pos] {
                    let br = row_to_bump[r as usize];
                    if br != NONE {
                        dense[br * s + bc] = v;
                    }
                }
            }
            match DenseLu::factor(s, dense) {
                Some(lu) => Some(lu),
                None => return Err(()),
            }
        } else {
            None
        };

        Ok(BasisFactor {
            m,
            singles,
            bump_rows,
            bump_positions,
            row_to_bump,
            lu,
            columns,
        })
    }

    /// Solves `B x = b`; the result is indexed by basis position (== row).
    fn ftran(&self, b: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; self.m];
        let mut res = b.to_vec();
        if let Some(lu) = &self.lu {
            let mut rhs: Vec<f64> = self.bump_rows.iter().map(|&r| res[r]).collect();
            lu.solve(&mut rhs);
            for (i, &pos) in self.bump_positions.iter().enumerate() {
                x[pos] = rhs[i];
                if rhs[i] != 0.0 {
                    for &(r, v) in &self.columns[pos] {
                        res[r as usize] -= v * rhs[i];
                    }
                }
            }
        }
        for &(row, pos, pivot) in self.singles.iter().rev() {
            let xv = res[row] / pivot;
            x[pos] = xv;
            if xv != 0.0 {
                for &(r, v) in &self.columns[pos] {
                    res[r as usize] -= v * xv;
                }
            }
        }
        x
    }

    /// Solves `B^T y = c` where `c` is indexed by basis position.
    fn btran(&self, c: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.m];
        let mut assigned = vec![false; self.m];
        for &(row, pos, pivot) in &self.singles {
            let mut s = c[pos];
            for &(r, v) in &self.columns[pos] {
                let r = r as usize;
                if r != row && assigned[r] {
                    s -= v * y[r];
                }
            }
            y[row] = s / pivot;
            assigned[row] = true;
        }
        if let Some(lu) = &self.lu {
            let s_dim = self.bump_rows.len();
            let mut rhs = vec![0.0; s_dim];
            for (bc, &pos) in self.bump_positions.iter().enumerate() {
                let mut s = c[pos];
                for &(r, v) in &self.columns[pos] {
                    let r = r as usize;
                    if self.row_to_bump[r] == NONE {
                        s -= v * y[r];
                    }
                }
                rhs[bc] = s;
            }
            lu.solve_transpose(&mut rhs);
            for (i, &r) in self.bump_rows.iter().enumerate() {
                y[r] = rhs[i];
            }
        }
        y
    }
}

// ---------------------------------------------------------------------------
// Simplex engine
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub tol: f64,
    /// Pivot cap; defaults to `ITER_CAP_FACTOR * (rows + cols)` when `None`.
    pub max_iterations: Option<usize>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol: DEFAULT_TOL,
            max_iterations: None,
        }
    }
}

struct Eta {
    row: usize,
    pivot: f64,
    entries: Vec<(u32, f64)>,
}

struct Simplex {
    m: usize,
    /// Current row -> canonical row (rows can be dropped as redundant).
    row_ids: Vec<usize>,
    cols: Vec<SparseCol>,
    col_alive: Vec<bool>,
    obj: Vec<f64>,
    rhs: Vec<f64>,
    basis: Vec<usize>,
    in_basis: Vec<bool>,
    x_b: Vec<f64>,
    factor: BasisFactor,
    etas: Vec<Eta>,
    pivots_since_refactor: usize,
    iterations: usize,
    max_iterations: usize,
    bland: bool,
    stall: usize,
    art_start: usize,
}

enum StepOutcome {
    Optimal,
    Unbounded,
    Pivoted,
}

impl Simplex {
    fn basis_columns(&self) -> Vec<SparseCol> {
        self.basis.iter().map(|&j| self.cols[j].clone()).collect()
    }

    fn refactor(&mut self) -> Result<()> {
        match BasisFactor::factor(self.m, self.basis_columns()) {
            Ok(f) => {
                self.factor = f;
                self.etas.clear();
                self.pivots_since_refactor = 0;
                self.x_b = self.ftran(&self.rhs.clone());
                Ok(())
            }
            Err(()) => Err(Error::Lp(LpFailure::SingularBasis)),
        }
    }

    fn ftran(&self, b: &[f64]) -> Vec<f64> {
        let mut v = self.factor.ftran(b);
        for eta in &self.etas {
            let t = v[eta.row] / eta.pivot;
            v[eta.row] = t;
            if t != 0.0 {
                for &(i, w) in &eta.entries {
                    v[i as usize] -= w * t;
                }
            }
        }
        v
    }

    fn btran_duals(&self, c_b: &[f64]) -> Vec<f64> {
        let mut u = c_b.to_vec();
        for eta in self.etas.iter().rev() {
            let mut s = u[eta.row];
            for &(i, w) in &eta.entries {
                s -= w * u[i as usize];
            }
            u[eta.row] = s / eta.pivot;
        }
        self.factor.btran(&u)
    }

    fn current_duals(&self) -> Vec<f64> {
        let c_b: Vec<f64> = self.basis.iter().map(|&j| self.obj[j]).collect();
        self.btran_duals(&c_b)
    }

    fn objective_value(&self) -> f64 {
        self.basis
            .iter()
            .zip(&self.x_b)
            .map(|(&j, &v)| self.obj[j] * v)
            .sum()
    }

    /// Reduced costs of all live nonbasic columns.
    fn reduced_costs(&self, duals: &[f64]) -> Vec<(usize, f64)> {
        let mut out = Vec::new();
        for (j, col) in self.cols.iter().enumerate() {
            if self.in_basis[j] || !self.col_alive[j] {
                continue;
            }
            let mut d = self.obj[j];
            for &(r, v) in col {
                d -= duals[r as usize] * v;
            }
            out.push((j, d));
        }
        out
    }

    fn step(&mut self, price_tol: f64) -> Result<StepOutcome> {
        let duals = self.current_duals();
        let reduced = self.reduced_costs(&duals);
        let entering = if self.bland {
            reduced
                .iter()
                .filter(|(_, d)| *d > price_tol)
                .map(|&(j, _)| j)
                .min()
        } else {
            reduced
                .iter()
                .filter(|(_, d)| *d > price_tol)
                .max_by(|a, b| a.1.total_cmp(&b.1))
                .map(|&(j, _)| j)
        };
        let Some(entering) = entering else {
            return Ok(StepOutcome::Optimal);
        };

        let mut dense_col = vec![0.0; self.m];
        for &(r, v) in &self.cols[entering] {
            dense_col[r as usize] = v;
        }
        let w = self.ftran(&dense_col);

        let pivot_tol = 1e-9;
        let mut leaving: Option<usize> = None;
        let mut best_ratio = f64::INFINITY;
        let mut best_w = 0.0;
        for r in 0..self.m {
            if w[r] > pivot_tol {
                let ratio = (self.x_b[r].max(0.0)) / w[r];
                let better = if self.bland {
                    match leaving {
                        None => true,
                        Some(cur) => {
                            ratio < best_ratio - 1e-12
                                || (ratio < best_ratio + 1e-12 && self.basis[r] < self.basis[cur])
                        }
                    }
                } else {
                    ratio < best_ratio - 1e-12
                        || (ratio < best_ratio + 1e-12 && w[r] > best_w)
                };
                if better {
                    leaving = Some(r);
                    best_ratio = ratio;
                    best_w = w[r];
                }
            }
        }
        let Some(leave_row) = leaving else {
            return Ok(StepOutcome::Unbounded);
        };

        let before = self.objective_value();
        let t = best_ratio;
        for r in 0..self.m {
            self.x_b[r] -= t * w[r];
            if self.x_b[r].abs() < 1e-12 {
                self.x_b[r] = 0.0;
            }
        }
        self.x_b[leave_row] = t;

        let leaving_col = self.basis[leave_row];
        self.in_basis[leaving_col] = false;
        self.in_basis[entering] = true;
        self.basis[leave_row] = entering;

        let entries: Vec<(u32, f64)> = w
            .iter()
            .enumerate()
            .filter(|&(r, &v)| r != leave_row && v.abs() > 1e-14)
            .map(|(r, &v)| (r as u32, v))
            .collect();
        self.etas.push(Eta {
            row: leave_row,
            pivot: w[leave_row],
            entries,
        });
        self.pivots_since_refactor += 1;
        self.iterations += 1;
        if self.pivots_since_refactor >= REFACTOR_INTERVAL {
            self.refactor()?;
        }

        let after = self.objective_value();
        if after - before <= 1e-12 * (1.0 + before.abs()) {
            self.stall += 1;
            if self.stall >= STALL_LIMIT {
                self.bland = true;
            }
        } else {
            self.stall = 0;
        }
        Ok(StepOutcome::Pivoted)
    }

    fn run(&mut self, price_tol: f64) -> Result<StepOutcome> {
        loop {
            if self.iterations >= self.max_iterations {
                return Err(Error::Lp(LpFailure::IterationLimit {
                    limit: self.max_iterations,
                    iterations: self.iterations,
                }));
            }
            match self.step(price_tol)? {
                StepOutcome::Pivoted => continue,
                other => return Ok(other),
            }
        }
    }
}

/// Solves `problem` with the default iteration cap. `tol` is the
/// feasibility/reduced-cost tolerance (use [`DEFAULT_TOL`]).
pub fn solve(problem: &LpProblem, tol: f64) -> Result<LpSolution> {
    solve_with(
        problem,
        &SolveOptions {
            tol,
            max_iterations: None,
        },
    )
}

pub fn solve_with(problem: &LpProblem, options: &SolveOptions) -> Result<LpSolution> {
    problem.validate()?;
    solve_sparse(&SparseLp::from_problem(problem), options)
}

pub(crate) fn solve_sparse(lp: &SparseLp, options: &SolveOptions) -> Result<LpSolution> {
    if options.tol <= 0.0 {
        return Err(Error::invalid("tolerance must be positive"));
    }
    let sf = standardize(lp)?;
    let m = sf.num_rows;
    let mut cols = sf.cols.clone();
    let mut obj = vec![0.0; sf.num_cols];

    // Initial basis: slack columns where usable, otherwise artificials with
    // phase-1 cost -1 (maximize the negated infeasibility).
    let mut basis = vec![NONE; m];
    for (j, col) in cols.iter().enumerate().skip(sf.num_structural) {
        if col.len() == 1 && col[0].1 > 0.0 {
            let r = col[0].0 as usize;
            if basis[r] == NONE {
                basis[r] = j;
            }
        }
    }
    let art_start = cols.len();
    let mut num_artificial = 0;
    for r in 0..m {
        if basis[r] == NONE {
            cols.push(vec![(r as u32, 1.0)]);
            obj.push(-1.0);
            basis[r] = art_start + num_artificial;
            num_artificial += 1;
        }
    }
    let total_cols = cols.len();
    let mut in_basis = vec![false; total_cols];
    for &j in &basis {
        in_basis[j] = true;
    }

    let max_iterations = options
        .max_iterations
        .unwrap_or(ITER_CAP_FACTOR * (m + total_cols));

    let factor = BasisFactor::factor(m, basis.iter().map(|&j| cols[j].clone()).collect())
        .map_err(|()| Error::Lp(LpFailure::SingularBasis))?;
    let x_b = factor.ftran(&sf.rhs);
    let mut simplex = Simplex {
        m,
        row_ids: (0..m).collect(),
        cols,
        col_alive: vec![true; total_cols],
        obj,
        rhs: sf.rhs.clone(),
        basis,
        in_basis,
        x_b,
        factor,
        etas: Vec::new(),
        pivots_since_refactor: 0,
        iterations: 0,
        max_iterations,
        bland: false,
        stall: 0,
        art_start,
    };

    let price_tol_phase1 = options.tol;
    if num_artificial > 0 {
        match simplex.run(price_tol_phase1)? {
            StepOutcome::Optimal => {}
            StepOutcome::Unbounded => {
                return Err(Error::Lp(LpFailure::Numerical(
                    "phase 1 reported an unbounded ray".into(),
                )));
            }
            StepOutcome::Pivoted => unreachable!(),
        }
        let infeasibility = -simplex.objective_value();
        let b_scale = 1.0 + simplex.rhs.iter().map(|v| v.abs()).fold(0.0, f64::max);
        if infeasibility > options.tol * b_scale * (m.max(1) as f64) {
            return Ok(LpSolution {
                status: LpStatus::Infeasible,
                x: None,
                objective_value: None,
                iterations: simplex.iterations,
                row_duals: None,
            });
        }
        drive_out_artificials(&mut simplex)?;
    }

    // Phase 2: restore the real objective, retire artificial columns.
    for j in 0..simplex.art_start {
        simplex.obj[j] = sf.obj[j];
    }
    for j in simplex.art_start..simplex.cols.len() {
        simplex.obj[j] = 0.0;
        if !simplex.in_basis[j] {
            simplex.col_alive[j] = false;
        }
    }
    simplex.bland = false;
    simplex.stall = 0;

    let c_scale = 1.0 + sf.obj.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let price_tol = options.tol * c_scale;
    let outcome = simplex.run(price_tol)?;

    match outcome {
        StepOutcome::Unbounded => Ok(LpSolution {
            status: LpStatus::Unbounded,
            x: None,
            objective_value: None,
            iterations: simplex.iterations,
            row_duals: None,
        }),
        StepOutcome::Optimal => {
            // Assemble the canonical point, map back, extract duals.
            let mut canonical = vec![0.0; sf.num_cols];
            for (r, &j) in simplex.basis.iter().enumerate() {
                if j < sf.num_cols {
                    canonical[j] = simplex.x_b[r].max(0.0);
                }
            }
            let x = sf.reconstruct(&canonical);
            let objective_value = sf.canonical_objective(&canonical);
            // Dropped redundant rows keep multiplier zero.
            let duals_current = simplex.current_duals();
            let mut duals_canonical = vec![0.0; sf.num_rows];
            for (cur, &orig) in simplex.row_ids.iter().enumerate() {
                duals_canonical[orig] = duals_current[cur];
            }
            let mut row_duals = vec![0.0; sf.num_original_rows];
            for (r, origin) in sf.row_origin.iter().enumerate() {
                if let RowOrigin::Constraint(i) = origin {
                    row_duals[*i] = duals_canonical[r] * sf.row_factor[r];
                }
            }
            Ok(LpSolution {
                status: LpStatus::Optimal,
                x: Some(x),
                objective_value: Some(objective_value),
                iterations: simplex.iterations,
                row_duals: Some(row_duals),
            })
        }
        StepOutcome::Pivoted => unreachable!(),
    }
}

/// Pivots zero-level artificial variables out of the basis; rows where no
/// structural pivot exists are linearly dependent and get dropped.
fn drive_out_artificials(simplex: &mut Simplex) -> Result<()> {
    let mut dependent_rows = Vec::new();
    for r in 0..simplex.m {
        if simplex.basis[r] < simplex.art_start {
            continue;
        }
        // Row r of B^{-1} A restricted to non-artificial nonbasic columns.
        let y = simplex.btran_duals(&{
            let mut c = vec![0.0; simplex.m];
            c[r] = 1.0;
            c
        });
        let mut pivot_col = NONE;
        for j in 0..simplex.art_start {
            if simplex.in_basis[j] || !simplex.col_alive[j] {
                continue;
            }
            let mut v = 0.0;
            for &(row, a) in &simplex.cols[j] {
                v += y[row as usize] * a;
            }
            if v.abs() > 1e-7 {
                pivot_col = j;
                break;
            }
        }
        if pivot_col == NONE {
            dependent_rows.push(r);
            continue;
        }
        let old = simplex.basis[r];
        simplex.in_basis[old] = false;
        simplex.in_basis[pivot_col] = true;
        simplex.basis[r] = pivot_col;
        simplex.refactor()?;
    }

    if !dependent_rows.is_empty() {
        let keep: Vec<bool> = {
            let mut k = vec![true; simplex.m];
            for &r in &dependent_rows {
                k[r] = false;
            }
            k
        };
        let mut new_index = vec![NONE; simplex.m];
        let mut next = 0;
        for r in 0..simplex.m {
            if keep[r] {
                new_index[r] = next;
                next += 1;
            }
        }
        for col in &mut simplex.cols {
            col.retain(|&(r, _)| keep[r as usize]);
            for (r, _) in col.iter_mut() {
                *r = new_index[*r as usize] as u32;
            }
        }
        let mut new_basis = Vec::with_capacity(next);
        let mut new_rhs = Vec::with_capacity(next);
        let mut new_ids = Vec::with_capacity(next);
        for r in 0..simplex.m {
            if keep[r] {
                new_basis.push(simplex.basis[r]);
                new_rhs.push(simplex.rhs[r]);
                new_ids.push(simplex.row_ids[r]);
            } else {
                simplex.in_basis[simplex.basis[r]] = false;
            }
        }
        simplex.m = next;
        simplex.basis = new_basis;
        simplex.rhs = new_rhs;
        simplex.row_ids = new_ids;
        simplex.refactor()?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn simple_problem() -> LpProblem {
        // maximize x1 s.t. x1 + x2 <= 1, x >= 0
        let mut p = LpProblem::new(vec![1.0, 0.0]);
        p.add_constraint(vec![1.0, 1.0], Sense::Le, 1.0);
        p
    }

    #[test]
    fn solves_textbook_instance() {
        let sol = solve(&simple_problem(), DEFAULT_TOL).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        let x = sol.x.unwrap();
        assert!((x[0] - 1.0).abs() < 1e-9);
        assert!(x[1].abs() < 1e-9);
        assert!((sol.objective_value.unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn detects_unbounded_free_variable() {
        let p = LpProblem::with_bounds(vec![1.0], vec![VarBounds::free()]);
        let sol = solve(&p, DEFAULT_TOL).unwrap();
        assert_eq!(sol.status, LpStatus::Unbounded);
    }

    #[test]
    fn detects_infeasible_rows() {
        let mut p = LpProblem::new(vec![1.0, 1.0]);
        p.add_constraint(vec![1.0, 1.0], Sense::Ge, 10.0);
        p.add_constraint(vec![1.0, 1.0], Sense::Le, 5.0);
        let sol = solve(&p, DEFAULT_TOL).unwrap();
        assert_eq!(sol.status, LpStatus::Infeasible);
    }

    #[test]
    fn handles_equality_and_negative_rhs() {
        // maximize x1 + x2 s.t. x1 - x2 = -1, x1 + x2 <= 3, x >= 0
        let mut p = LpProblem::new(vec![1.0, 1.0]);
        p.add_constraint(vec![1.0, -1.0], Sense::Eq, -1.0);
        p.add_constraint(vec![1.0, 1.0], Sense::Le, 3.0);
        let sol = solve(&p, DEFAULT_TOL).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        let x = sol.x.unwrap();
        assert!((x[1] - x[0] - 1.0).abs() < 1e-9);
        assert!((sol.objective_value.unwrap() - 3.0).abs() < 1e-9);
    }

    #[test]
    fn respects_two_sided_bounds() {
        // maximize x, 0.5 <= x <= 2. Also a mirrored-only variable.
        let p = LpProblem::with_bounds(vec![1.0], vec![VarBounds::range(0.5, 2.0)]);
        let sol = solve(&p, DEFAULT_TOL).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.x.unwrap()[0] - 2.0).abs() < 1e-9);

        let p = LpProblem::with_bounds(
            vec![1.0],
            vec![VarBounds {
                lower: f64::NEG_INFINITY,
                upper: 4.0,
            }],
        );
        let sol = solve(&p, DEFAULT_TOL).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.x.unwrap()[0] - 4.0).abs() < 1e-9);
    }

    #[test]
    fn standard_form_examples() {
        // One free variable splits into a nonnegative pair.
        let p = LpProblem::with_bounds(vec![1.0], vec![VarBounds::free()]);
        let sf = to_standard_form(&p).unwrap();
        assert_eq!(sf.num_structural, 2);
        let rebuilt = sf.reconstruct(&[3.0, 1.25]);
        assert_eq!(rebuilt, vec![1.75]);

        // One <= row gains exactly one slack; equality rows gain none.
        let mut p = LpProblem::new(vec![1.0, 1.0]);
        p.add_constraint(vec![1.0, 2.0], Sense::Le, 4.0);
        p.add_constraint(vec![1.0, -1.0], Sense::Eq, 1.0);
        let sf = to_standard_form(&p).unwrap();
        assert_eq!(sf.num_rows, 2);
        assert_eq!(sf.num_cols - sf.num_structural, 1);
    }

    #[test]
    fn standard_form_round_trip_preserves_feasibility() {
        let mut p = LpProblem::with_bounds(
            vec![1.0, -2.0, 0.5],
            vec![
                VarBounds::free(),
                VarBounds::range(-1.0, 5.0),
                VarBounds::nonnegative(),
            ],
        );
        p.add_constraint(vec![1.0, 1.0, 1.0], Sense::Le, 4.0);
        p.add_constraint(vec![2.0, -1.0, 0.0], Sense::Ge, -3.0);
        p.add_constraint(vec![0.0, 1.0, -1.0], Sense::Eq, 0.5);
        let sol = solve(&p, DEFAULT_TOL).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        let report = verify_solution(&p, &sol.x.unwrap(), 1e-7).unwrap();
        assert!(report.feasible, "violation {}", report.max_violation);
        assert!((report.objective - sol.objective_value.unwrap()).abs() < 1e-7);
    }

    #[test]
    fn verify_reports_raw_violations() {
        let mut p = LpProblem::new(vec![1.0]);
        p.add_constraint(vec![1.0], Sense::Le, 1.0);
        let ok = verify_solution(&p, &[1.0], DEFAULT_TOL).unwrap();
        assert!(ok.feasible);
        assert!(ok.max_violation <= DEFAULT_TOL);

        let bad = verify_solution(&p, &[2.0], DEFAULT_TOL).unwrap();
        assert!(!bad.feasible);
        assert!((bad.max_violation - 1.0).abs() < 1e-12);
    }

    #[test]
    fn objective_scaling_leaves_solution_unchanged() {
        let mut p = LpProblem::new(vec![3.0, 2.0]);
        p.add_constraint(vec![1.0, 1.0], Sense::Le, 4.0);
        p.add_constraint(vec![1.0, 3.0], Sense::Le, 6.0);
        let base = solve(&p, DEFAULT_TOL).unwrap();
        let mut scaled = p.clone();
        for c in &mut scaled.objective {
            *c *= 137.0;
        }
        let s = solve(&scaled, DEFAULT_TOL).unwrap();
        assert_eq!(base.status, s.status);
        let xb = base.x.unwrap();
        let xs = s.x.unwrap();
        for (a, b) in xb.iter().zip(&xs) {
            assert!((a - b).abs() < 1e-9);
        }
        assert!(
            (s.objective_value.unwrap() - 137.0 * base.objective_value.unwrap()).abs()
                < 1e-6
        );
    }

    #[test]
    fn duals_satisfy_strong_duality() {
        let mut p = LpProblem::new(vec![3.0, 5.0]);
        p.add_constraint(vec![1.0, 0.0], Sense::Le, 4.0);
        p.add_constraint(vec![0.0, 2.0], Sense::Le, 12.0);
        p.add_constraint(vec![3.0, 2.0], Sense::Le, 18.0);
        let sol = solve(&p, DEFAULT_TOL).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        let duals = sol.row_duals.unwrap();
        // Known optimum (2, 6) with value 36, duals (0, 3/2, 1).
        let dual_obj: f64 = duals
            .iter()
            .zip(p.constraints.iter())
            .map(|(y, c)| y * c.rhs)
            .sum();
        assert!((dual_obj - sol.objective_value.unwrap()).abs() < 1e-7);
        assert!(duals.iter().all(|&y| y >= -1e-9));
    }

    #[test]
    fn degenerate_instances_terminate() {
        // Classic cycling-prone instance (Beale); Bland fallback must finish.
        let mut p = LpProblem::new(vec![0.75, -150.0, 0.02, -6.0]);
        p.add_constraint(vec![0.25, -60.0, -0.04, 9.0], Sense::Le, 0.0);
        p.add_constraint(vec![0.5, -90.0, -0.02, 3.0], Sense::Le, 0.0);
        p.add_constraint(vec![0.0, 0.0, 1.0, 0.0], Sense::Le, 1.0);
        let sol = solve(&p, DEFAULT_TOL).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.objective_value.unwrap() - 0.05).abs() < 1e-8);
    }

    #[test]
    fn iteration_cap_is_a_distinct_failure() {
        let mut p = LpProblem::new(vec![1.0, 1.0, 1.0]);
        p.add_constraint(vec![1.0, 1.0, 1.0], Sense::Le, 1.0);
        let err = solve_with(
            &p,
            &SolveOptions {
                tol: DEFAULT_TOL,
                max_iterations: Some(0),
            },
        )
        .unwrap_err();
        assert!(matches!(
            err,
            Error::Lp(LpFailure::IterationLimit { .. })
        ));
    }

    #[test]
    fn dump_is_parseable_text() {
        let mut p = LpProblem::new(vec![1.0, -2.0]);
        p.add_constraint(vec![1.0, 1.0], Sense::Le, 1.0);
        let text = p.dump();
        assert!(text.starts_with("max: 1 x0 - 2 x1\n"));
        assert!(text.contains("1 x0 + 1 x1 <= 1"));
    }

    #[test]
    fn redundant_equality_rows_are_dropped() {
        // Second row is the first times two: rank-deficient but feasible.
        let mut p = LpProblem::new(vec![1.0, 1.0]);
        p.add_constraint(vec![1.0, 1.0], Sense::Eq, 1.0);
        p.add_constraint(vec![2.0, 2.0], Sense::Eq, 2.0);
        let sol = solve(&p, DEFAULT_TOL).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.objective_value.unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn no_constraints_bounded_by_variable_bounds() {
        let p = LpProblem::new(vec![-1.0, -1.0]);
        let sol = solve(&p, DEFAULT_TOL).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!(sol.objective_value.unwrap().abs() < 1e-12);
    }
}
