//! Ground-truth linear SEMs with correlated Gaussian noise, and datasets
//! drawn from them.
//!
//! Rows follow `x = e (I - B)^{-1}` with `e ~ N(0, Σ)`, so the population
//! covariance is `(I - B)^{-T} Σ (I - B)^{-1}`.

use crate::admg::Admg;
use crate::gradeng::{self, GradError, Tensor};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::fmt::Write;
use thiserror::Error;

/// Directed weights on `±[0.5, 2.0]`.
pub const EDGE_WEIGHT_RANGE: (f64, f64) = (0.5, 2.0);
/// Noise variances on `[0.7, 1.2]`.
pub const NOISE_VARIANCE_RANGE: (f64, f64) = (0.7, 1.2);
/// Noise covariances on `±[0.4, 0.7]`.
pub const NOISE_COVARIANCE_RANGE: (f64, f64) = (0.4, 0.7);
/// Smallest eigenvalue accepted for a sampled `Σ`.
pub const MIN_NOISE_EIGENVALUE: f64 = 0.05;
pub const MAX_PD_REJECTIONS: usize = 1000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("directed part of the ground truth is cyclic")]
    CyclicGraph,
    #[error("no positive definite noise covariance after {0} draws")]
    PdRejectionLimit(usize),
    #[error("sample count must be at least 1")]
    EmptyDataset,
    #[error(transparent)]
    Numeric(#[from] GradError),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CsvError {
    #[error("empty CSV input")]
    Empty,
    #[error("row {row}, column {col}: {message}")]
    Syntax { row: usize, col: usize, message: String },
    #[error("row {row}: expected {expected} fields, found {found}")]
    RaggedRow { row: usize, expected: usize, found: usize },
    #[error("no data rows")]
    NoRows,
}

/// Uniform draw on `[-hi, -lo] ∪ [lo, hi]`.
pub fn signed_uniform<R: Rng + ?Sized>(rng: &mut R, (lo, hi): (f64, f64)) -> f64 {
    let magnitude = rng.gen_range(lo..=hi);
    if rng.gen_bool(0.5) {
        magnitude
    } else {
        -magnitude
    }
}

/// Weighted parameters of a linear SEM.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightedSem {
    /// Directed weights, `b[i][j]` for `i -> j`.
    #[serde(rename = "B")]
    pub b: Vec<Vec<f64>>,
    /// Noise covariance.
    #[serde(rename = "Sigma")]
    pub sigma: Vec<Vec<f64>>,
}

impl WeightedSem {
    pub fn d(&self) -> usize {
        self.b.len()
    }

    pub fn b_tensor(&self) -> Tensor {
        Tensor::from_rows(&self.b)
    }

    pub fn sigma_tensor(&self) -> Tensor {
        Tensor::from_rows(&self.sigma)
    }

    /// `(I - B)^{-T} Σ (I - B)^{-1}`.
    pub fn implied_covariance(&self) -> Result<Tensor, GradError> {
        let d = self.d();
        let i_minus_b = Tensor::identity(d).zip_map(&self.b_tensor(), |a, b| a - b);
        let m = gradeng::inverse(&i_minus_b)?;
        Ok(m.t_matmul(&self.sigma_tensor()).matmul(&m))
    }
}

/// Draws weights on the support of `g`: directed weights in row-major edge
/// order, then the whole noise covariance, redrawn until its smallest
/// eigenvalue exceeds [`MIN_NOISE_EIGENVALUE`].
pub fn sample_ground_truth(g: &Admg, seed: u64) -> Result<WeightedSem, SimError> {
    if !g.is_acyclic() {
        return Err(SimError::CyclicGraph);
    }
    let d = g.d();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = vec![vec![0.0; d]; d];
    for (i, j) in g.directed_edges() {
        b[i][j] = signed_uniform(&mut rng, EDGE_WEIGHT_RANGE);
    }
    for _ in 0..MAX_PD_REJECTIONS {
        let sigma = sample_noise_covariance(g, &mut rng);
        if min_eigenvalue_exceeds(&sigma, MIN_NOISE_EIGENVALUE) {
            return Ok(WeightedSem { b, sigma });
        }
    }
    Err(SimError::PdRejectionLimit(MAX_PD_REJECTIONS))
}

fn sample_noise_covariance<R: Rng + ?Sized>(g: &Admg, rng: &mut R) -> Vec<Vec<f64>> {
    let d = g.d();
    let mut sigma = vec![vec![0.0; d]; d];
    for (i, row) in sigma.iter_mut().enumerate() {
        row[i] = rng.gen_range(NOISE_VARIANCE_RANGE.0..=NOISE_VARIANCE_RANGE.1);
    }
    for (i, j) in g.bidirected_edges() {
        let v = signed_uniform(rng, NOISE_COVARIANCE_RANGE);
        sigma[i][j] = v;
        sigma[j][i] = v;
    }
    sigma
}

/// `λ_min(S) > floor` iff `S - floor·I` admits a Cholesky factor.
fn min_eigenvalue_exceeds(s: &[Vec<f64>], floor: f64) -> bool {
    let shifted = Tensor::from_fn(s.len(), s.len(), |i, j| s[i][j] - if i == j { floor } else { 0.0 });
    gradeng::cholesky(&shifted).is_ok()
}

/// An `N x d` matrix of observations, one sample per row.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    values: Tensor,
}

impl Dataset {
    pub fn new(values: Tensor) -> Result<Self, SimError> {
        if values.rows() == 0 {
            return Err(SimError::EmptyDataset);
        }
        if !values.all_finite() {
            return Err(SimError::Numeric(GradError::NonFiniteValue { op: "dataset" }));
        }
        Ok(Self { values })
    }

    pub fn n(&self) -> usize {
        self.values.rows()
    }

    pub fn d(&self) -> usize {
        self.values.cols()
    }

    pub fn values(&self) -> &Tensor {
        &self.values
    }

    /// Rows selected by `indices`, in that order.
    pub fn select_rows(&self, indices: &[usize]) -> Tensor {
        let d = self.d();
        let mut data = Vec::with_capacity(indices.len() * d);
        for &i in indices {
            data.extend_from_slice(self.values.row(i));
        }
        Tensor::from_vec(indices.len(), d, data)
    }

    /// Sample covariance with the `1/N` normalisation.
    pub fn covariance(&self) -> Tensor {
        let (n, d) = self.values.shape();
        let means: Vec<f64> = (0..d)
            .map(|j| (0..n).map(|i| self.values[(i, j)]).sum::<f64>() / n as f64)
            .collect();
        let centered = Tensor::from_fn(n, d, |i, j| self.values[(i, j)] - means[j]);
        centered.t_matmul(&centered).scale(1.0 / n as f64)
    }
}

/// Draws `n` rows `x = z Lᵀ (I - B)^{-1}` with `z ~ N(0, I)` and
/// `L = chol(Σ)`.
pub fn simulate(sem: &WeightedSem, n: usize, seed: u64) -> Result<Dataset, SimError> {
    if n == 0 {
        return Err(SimError::EmptyDataset);
    }
    let d = sem.d();
    let l = gradeng::cholesky(&sem.sigma_tensor())?;
    let i_minus_b = Tensor::identity(d).zip_map(&sem.b_tensor(), |a, b| a - b);
    let mix = l.transpose().matmul(&gradeng::inverse(&i_minus_b)?);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let z = Tensor::from_fn(n, d, |_, _| rng.sample(StandardNormal));
    Dataset::new(z.matmul(&mix))
}

pub fn write_csv(ds: &Dataset) -> String {
    let d = ds.d();
    let mut out = (0..d).map(|j| format!("x{j}")).collect::<Vec<_>>().join(",");
    out.push('\n');
    for i in 0..ds.n() {
        for (j, v) in ds.values.row(i).iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            // Display for f64 is the shortest string that parses back exactly.
            write!(out, "{v}").unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn read_csv(text: &str) -> Result<Dataset, CsvError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or(CsvError::Empty)?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    for (j, name) in cols.iter().enumerate() {
        if *name != format!("x{j}") {
            return Err(CsvError::Syntax {
                row: 1,
                col: j + 1,
                message: format!("expected header `x{j}`, found `{name}`"),
            });
        }
    }
    let d = cols.len();
    let mut data = Vec::new();
    let mut n = 0;
    for (idx, line) in lines {
        let row = idx + 1;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != d {
            return Err(CsvError::RaggedRow {
                row,
                expected: d,
                found: fields.len(),
            });
        }
        for (j, f) in fields.iter().enumerate() {
            let v: f64 = f.trim().parse().map_err(|_| CsvError::Syntax {
                row,
                col: j + 1,
                message: format!("invalid number `{}`", f.trim()),
            })?;
            if !v.is_finite() {
                return Err(CsvError::Syntax {
                    row,
                    col: j + 1,
                    message: "non-finite value".into(),
                });
            }
            data.push(v);
        }
        n += 1;
    }
    if n == 0 {
        return Err(CsvError::NoRows);
    }
    Ok(Dataset {
        values: Tensor::from_vec(n, d, data),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn case_a() -> Admg {
        Admg::from_edges(4, &[(2, 1), (2, 3), (0, 3), (3, 1)], &[(0, 1)]).unwrap()
    }

    #[test]
    fn empty_graph_draws_diagonal_noise() {
        let sem = sample_ground_truth(&Admg::empty(3), 4).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(sem.b[i][j], 0.0);
                if i == j {
                    assert!((0.7..=1.2).contains(&sem.sigma[i][i]));
                } else {
                    assert_eq!(sem.sigma[i][j], 0.0);
                }
            }
        }
    }

    #[test]
    fn case_a_support_and_ranges() {
        let g = case_a();
        for seed in 0..50 {
            let sem = sample_ground_truth(&g, seed).unwrap();
            for i in 0..4 {
                for j in 0..4 {
                    let b = sem.b[i][j].abs();
                    if g.has_directed(i, j) {
                        assert!((0.5..=2.0).contains(&b));
                    } else {
                        assert_eq!(b, 0.0);
                    }
                    let s = sem.sigma[i][j];
                    assert_eq!(s, sem.sigma[j][i]);
                    if i == j {
                        assert!((0.7..=1.2).contains(&s));
                    } else if g.has_bidirected(i, j) {
                        assert!((0.4..=0.7).contains(&s.abs()));
                    } else {
                        assert_eq!(s, 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn signed_uniform_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let n = 10_000;
        let draws: Vec<f64> = (0..n).map(|_| signed_uniform(&mut rng, EDGE_WEIGHT_RANGE)).collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let abs_mean = draws.iter().map(|v| v.abs()).sum::<f64>() / n as f64;
        // E|w| = 1.25 and sd(w) ≈ 1.35, so the mean's sd is ≈ 0.0135.
        assert!(mean.abs() < 0.05, "mean {mean}");
        assert!((abs_mean - 1.25).abs() < 0.02, "abs mean {abs_mean}");
    }

    #[test]
    fn cyclic_ground_truth_rejected() {
        let g = Admg::from_edges(2, &[(0, 1), (1, 0)], &[]).unwrap();
        assert_eq!(sample_ground_truth(&g, 0), Err(SimError::CyclicGraph));
    }

    #[test]
    fn over_dense_confounding_hits_rejection_limit() {
        // Equal-sign covariances near 0.7 on a complete graph of 12 vertices
        // cannot all be positive definite; with random signs the draw almost
        // never is.
        let d = 12;
        let pairs: Vec<(usize, usize)> = (0..d).flat_map(|i| (i + 1..d).map(move |j| (i, j))).collect();
        let g = Admg::from_edges(d, &[], &pairs).unwrap();
        assert_eq!(sample_ground_truth(&g, 1), Err(SimError::PdRejectionLimit(MAX_PD_REJECTIONS)));
    }

    #[test]
    fn seeds_are_deterministic() {
        let sem = sample_ground_truth(&case_a(), 17).unwrap();
        assert_eq!(sem, sample_ground_truth(&case_a(), 17).unwrap());
        let a = simulate(&sem, 50, 3).unwrap();
        let b = simulate(&sem, 50, 3).unwrap();
        assert!(a.values().data().iter().zip(b.values().data()).all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    #[test]
    fn standard_normal_rows() {
        let sem = WeightedSem {
            b: vec![vec![0.0; 3]; 3],
            sigma: Tensor::identity(3).to_rows(),
        };
        let ds = simulate(&sem, 100_000, 2).unwrap();
        assert!(ds.covariance().max_abs_diff(&Tensor::identity(3)) < 0.05);
    }

    #[test]
    fn two_variable_closed_form() {
        let b = 0.8;
        let sem = WeightedSem {
            b: vec![vec![0.0, b], vec![0.0, 0.0]],
            sigma: Tensor::identity(2).to_rows(),
        };
        let expected = Tensor::from_rows(&[[1.0, b], [b, 1.0 + b * b]]);
        assert!(sem.implied_covariance().unwrap().max_abs_diff(&expected) < 1e-12);
        let ds = simulate(&sem, 100_000, 5).unwrap();
        assert!(ds.covariance().max_abs_diff(&expected) < 0.05);
    }

    #[test]
    fn zero_rows_rejected() {
        let sem = sample_ground_truth(&case_a(), 0).unwrap();
        assert_eq!(simulate(&sem, 0, 0), Err(SimError::EmptyDataset));
    }

    #[test]
    fn csv_tiny_and_round_trip() {
        let ds = Dataset::new(Tensor::zeros(1, 1)).unwrap();
        assert_eq!(write_csv(&ds), "x0\n0\n");
        let sem = sample_ground_truth(&case_a(), 9).unwrap();
        let ds = simulate(&sem, 100, 9).unwrap();
        let back = read_csv(&write_csv(&ds)).unwrap();
        assert!(back.values().max_abs_diff(ds.values()) < 1e-12);
    }

    #[test]
    fn csv_errors() {
        assert_eq!(
            read_csv("x0,x1,x2,x3\n1,2,3\n"),
            Err(CsvError::RaggedRow { row: 2, expected: 4, found: 3 })
        );
        assert!(matches!(read_csv("x0,x1\n1,abc\n"), Err(CsvError::Syntax { row: 2, col: 2, .. })));
        assert!(matches!(read_csv("a,b\n1,2\n"), Err(CsvError::Syntax { row: 1, col: 1, .. })));
        assert!(matches!(read_csv("x0\nNaN\n"), Err(CsvError::Syntax { .. })));
        assert_eq!(read_csv(""), Err(CsvError::Empty));
        assert_eq!(read_csv("x0\n"), Err(CsvError::NoRows));
    }
}
