//! Minimal dense linear algebra: matrix-vector products and a rank-revealing
//! least-squares solve. Everything here is desk-scale (n <= 1e4, p <= 100);
//! no blocking or sparsity.

use crate::error::{Error, Result};

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::invalid("DenseMatrix requires rows >= 1 and cols >= 1"));
        }
        match rows.checked_mul(cols) {
            Some(expected) if expected == data.len() => {}
            Some(expected) => {
                return Err(Error::dim("DenseMatrix::from_vec", expected, data.len()))
            }
            None => return Err(Error::invalid("rows * cols overflows")),
        }
        if !data.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("DenseMatrix entries"));
        }
        Ok(DenseMatrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::invalid("DenseMatrix requires at least one row"));
        }
        let cols = rows[0].len();
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(Error::dim("DenseMatrix::from_rows", cols, r.len()));
            }
            data.extend_from_slice(r);
        }
        Self::from_vec(rows.len(), cols, data)
    }

    pub fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        DenseMatrix {
            rows: n,
            cols: n,
            data,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    /// Standard matrix-vector product `A v`.
    pub fn matvec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.cols {
            return Err(Error::dim("matvec", self.cols, v.len()));
        }
        Ok((0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect())
    }

    /// `A^T v`, used by residual checks.
    pub fn matvec_transpose(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.rows {
            return Err(Error::dim("matvec_transpose", self.rows, v.len()));
        }
        let mut out = vec![0.0; self.cols];
        for i in 0..self.rows {
            let vi = v[i];
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o += a * vi;
            }
        }
        Ok(out)
    }
}

/// Relative threshold on the pivoted R diagonal that decides numerical rank.
const RANK_THRESHOLD: f64 = 1e-12;

/// Householder reflector `H = I - tau v v^T` with `v[0] = 1` implied; stored
/// over an explicit index set so the same code serves the left (QR) and right
/// (R12 annihilation) passes.
struct Reflector {
    tau: f64,
    // v values for indices[1..]; v at indices[0] is 1.
    indices: Vec<usize>,
    v_tail: Vec<f64>,
}

impl Reflector {
    /// Builds the reflector sending `x` (gathered over `indices`) to a
    /// multiple of the first coordinate. Returns the resulting diagonal value.
    fn from_vector(x: &[f64], indices: Vec<usize>) -> (Self, f64) {
        let sigma = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if sigma == 0.0 {
            return (
                Reflector {
                    tau: 0.0,
                    v_tail: vec![0.0; indices.len() - 1],
                    indices,
                },
                0.0,
            );
        }
        let alpha = x[0];
        let beta = if alpha >= 0.0 { -sigma } else { sigma };
        let denom = alpha - beta;
        let v_tail: Vec<f64> = x[1..].iter().map(|&xi| xi / denom).collect();
        let tau = (beta - alpha) / beta;
        (
            Reflector {
                tau,
                indices,
                v_tail,
            },
            beta,
        )
    }

    /// Applies `H` to a full-length vector in place.
    fn apply(&self, u: &mut [f64]) {
        if self.tau == 0.0 {
            return;
        }
        let mut dot = u[self.indices[0]];
        for (idx, v) in self.indices[1..].iter().zip(&self.v_tail) {
            dot += u[*idx] * v;
        }
        let s = self.tau * dot;
        u[self.indices[0]] -= s;
        for (idx, v) in self.indices[1..].iter().zip(&self.v_tail) {
            u[*idx] -= s * v;
        }
    }
}

/// Least-squares minimizer of `||A x - b||_2` by column-pivoted Householder
/// QR. Rank is decided by the pivoted diagonal against
/// `RANK_THRESHOLD * |r_11|`; in the rank-deficient case the returned vector
/// is the minimum-norm minimizer (the trailing block of R is annihilated by
/// reflections from the right before the triangular solve).
pub fn least_squares(a: &DenseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    let m = a.rows();
    let q = a.cols();
    if b.len() != m {
        return Err(Error::dim("least_squares rhs", m, b.len()));
    }

    // Working copy of A in column-major order for cheap column ops.
    let mut r = vec![0.0; m * q];
    for i in 0..m {
        for j in 0..q {
            r[j * m + i] = a.get(i, j);
        }
    }
    let mut qtb = b.to_vec();
    let mut perm: Vec<usize> = (0..q).collect();
    let steps = m.min(q);
    let mut diag = vec![0.0; steps];
    let mut rank = 0;

    for t in 0..steps {
        // Exact column norms below row t; q is small so recomputation is fine.
        let mut best = t;
        let mut best_norm = -1.0;
        for j in t..q {
            let norm: f64 = r[j * m + t..(j + 1) * m].iter().map(|v| v * v).sum();
            if norm > best_norm {
                best_norm = norm;
                best = j;
            }
        }
        if best != t {
            perm.swap(t, best);
            for i in 0..m {
                r.swap(t * m + i, best * m + i);
            }
        }

        let x: Vec<f64> = r[t * m + t..(t + 1) * m].to_vec();
        let (h, beta) = Reflector::from_vector(&x, (t..m).collect());
        r[t * m + t] = beta;
        for v in &mut r[t * m + t + 1..(t + 1) * m] {
            *v = 0.0;
        }
        for j in t + 1..q {
            h.apply(&mut r[j * m..(j + 1) * m]);
        }
        h.apply(&mut qtb);
        diag[t] = beta;
    }

    let scale = diag.first().map(|d| d.abs()).unwrap_or(0.0);
    for &d in &diag {
        if d.abs() > RANK_THRESHOLD * scale && d != 0.0 {
            rank += 1;
        } else {
            break;
        }
    }

    if rank == 0 {
        return Ok(vec![0.0; q]);
    }

    // R (rank x q) in row-major, permuted coordinates.
    let mut rr = vec![0.0; rank * q];
    for i in 0..rank {
        for j in i..q {
            rr[i * q + j] = r[j * m + i];
        }
    }

    // Annihilate the trailing block R[:, rank..] from the right, bottom row
    // first so earlier rows keep their zeros.
    let mut right: Vec<Reflector> = Vec::new();
    if rank < q {
        for i in (0..rank).rev() {
            let mut x = Vec::with_capacity(1 + q - rank);
            let mut indices = Vec::with_capacity(1 + q - rank);
            x.push(rr[i * q + i]);
            indices.push(i);
            for j in rank..q {
                x.push(rr[i * q + j]);
                indices.push(j);
            }
            let (h, beta) = Reflector::from_vector(&x, indices);
            rr[i * q + i] = beta;
            for j in rank..q {
                rr[i * q + j] = 0.0;
            }
            for row in 0..i {
                let mut full = vec![0.0; q];
                full.copy_from_slice(&rr[row * q..(row + 1) * q]);
                h.apply(&mut full);
                rr[row * q..(row + 1) * q].copy_from_slice(&full);
            }
            right.push(h);
        }
    }

    // Back-substitution on the leading triangle.
    let mut u = vec![0.0; q];
    for i in (0..rank).rev() {
        let mut s = qtb[i];
        for j in i + 1..rank {
            s -= rr[i * q + j] * u[j];
        }
        u[i] = s / rr[i * q + i];
    }

    // Undo the right reflections (applied in reverse construction order) and
    // the column permutation.
    for h in right.iter().rev() {
        h.apply(&mut u);
    }
    let mut x = vec![0.0; q];
    for (pos, &orig) in perm.iter().enumerate() {
        x[orig] = u[pos];
    }
    Ok(x)
}
