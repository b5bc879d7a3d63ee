//! Dense kernels behind the factorisation primitives.

use super::{GradError, Tensor};

/// Pivot magnitude below which a matrix is treated as singular.
pub const SINGULAR_PIVOT: f64 = 1e-12;

const EXPM_TERMS: usize = 16;
const EXPM_SCALED_NORM: f64 = 0.5;

/// Lower Cholesky factor of a square matrix. Only the lower triangle of
/// `a` is read.
pub fn cholesky(a: &Tensor) -> Result<Tensor, GradError> {
    if !a.is_square() {
        return Err(GradError::shape("cholesky", "input must be square", a.shape(), None));
    }
    let n = a.rows();
    let mut l = Tensor::zeros(n, n);
    for j in 0..n {
        let mut diag = a[(j, j)];
        for k in 0..j {
            diag -= l[(j, k)] * l[(j, k)];
        }
        if !(diag > 0.0) || !diag.is_finite() {
            return Err(GradError::NotPositiveDefinite { pivot: j });
        }
        let ljj = diag.sqrt();
        l[(j, j)] = ljj;
        for i in j + 1..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / ljj;
        }
    }
    Ok(l)
}

/// Inverse by Gauss-Jordan elimination with partial pivoting.
pub fn inverse(a: &Tensor) -> Result<Tensor, GradError> {
    if !a.is_square() {
        return Err(GradError::shape("mat_inverse", "input must be square", a.shape(), None));
    }
    let n = a.rows();
    let mut work = a.clone();
    let mut inv = Tensor::identity(n);
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&r, &s| work[(r, col)].abs().total_cmp(&work[(s, col)].abs()))
            .unwrap_or(col);
        let pivot = work[(pivot_row, col)];
        if pivot.abs() < SINGULAR_PIVOT || !pivot.is_finite() {
            return Err(GradError::SingularMatrix { column: col });
        }
        if pivot_row != col {
            swap_rows(&mut work, pivot_row, col);
            swap_rows(&mut inv, pivot_row, col);
        }
        let scale = 1.0 / pivot;
        for j in 0..n {
            work[(col, j)] *= scale;
            inv[(col, j)] *= scale;
        }
        for r in 0..n {
            if r == col {
                continue;
            }
            let factor = work[(r, col)];
            if factor == 0.0 {
                continue;
            }
            for j in 0..n {
                work[(r, j)] -= factor * work[(col, j)];
                inv[(r, j)] -= factor * inv[(col, j)];
            }
        }
    }
    Ok(inv)
}

fn swap_rows(t: &mut Tensor, a: usize, b: usize) {
    let cols = t.cols();
    let data = t.data_mut();
    for j in 0..cols {
        data.swap(a * cols + j, b * cols + j);
    }
}

/// Inverse of a lower-triangular matrix by forward substitution.
pub fn lower_triangular_inverse(l: &Tensor) -> Result<Tensor, GradError> {
    let n = l.rows();
    let mut inv = Tensor::zeros(n, n);
    for j in 0..n {
        for i in j..n {
            let mut s = if i == j { 1.0 } else { 0.0 };
            for k in j..i {
                s -= l[(i, k)] * inv[(k, j)];
            }
            let d = l[(i, i)];
            if d.abs() < SINGULAR_PIVOT {
                return Err(GradError::SingularMatrix { column: i });
            }
            inv[(i, j)] = s / d;
        }
    }
    Ok(inv)
}

/// Matrix exponential by scaling and squaring a truncated Taylor series.
pub fn expm(a: &Tensor) -> Result<Tensor, GradError> {
    if !a.is_square() {
        return Err(GradError::shape("trace_expm", "input must be square", a.shape(), None));
    }
    let n = a.rows();
    let norm = inf_norm(a);
    if !norm.is_finite() {
        return Err(GradError::NonFiniteValue { op: "trace_expm" });
    }
    let mut squarings = 0u32;
    while norm / 2f64.powi(squarings as i32) > EXPM_SCALED_NORM {
        squarings += 1;
    }
    let scaled = a.scale(1.0 / 2f64.powi(squarings as i32));

    let mut result = Tensor::identity(n);
    let mut term = Tensor::identity(n);
    for k in 1..=EXPM_TERMS {
        term = term.matmul(&scaled).scale(1.0 / k as f64);
        result.add_assign(&term);
    }
    for _ in 0..squarings {
        result = result.matmul(&result);
    }
    Ok(result)
}

fn inf_norm(a: &Tensor) -> f64 {
    (0..a.rows())
        .map(|i| a.row(i).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}
