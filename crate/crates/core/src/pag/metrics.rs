//! Structural Hamming distance and F1 scores between PAGs.

use super::{Mark, Pag};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MetricError {
    #[error("graphs have different vertex counts ({est} vs {truth})")]
    DimensionMismatch { est: usize, truth: usize },
}

/// The three PAG scores, in the field order of the metrics JSON.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub arrowhead_f1: f64,
    pub shd: usize,
    pub skeleton_f1: f64,
}

impl Metrics {
    pub fn compute(est: &Pag, truth: &Pag) -> Result<Self, MetricError> {
        Ok(Self {
            arrowhead_f1: arrowhead_f1(est, truth)?,
            shd: shd(est, truth)?,
            skeleton_f1: skeleton_f1(est, truth)?,
        })
    }
}

fn check(est: &Pag, truth: &Pag) -> Result<usize, MetricError> {
    if est.d() != truth.d() {
        return Err(MetricError::DimensionMismatch {
            est: est.d(),
            truth: truth.d(),
        });
    }
    Ok(est.d())
}

fn f1(tp: usize, fp: usize, fn_: usize) -> f64 {
    if tp + fp + fn_ == 0 {
        return 1.0;
    }
    2.0 * tp as f64 / (2 * tp + fp + fn_) as f64
}

/// One unit per vertex pair whose adjacency or end marks differ.
pub fn shd(est: &Pag, truth: &Pag) -> Result<usize, MetricError> {
    let d = check(est, truth)?;
    let mut total = 0;
    for i in 0..d {
        for j in i + 1..d {
            let e = (est.mark(j, i), est.mark(i, j));
            let t = (truth.mark(j, i), truth.mark(i, j));
            if e != t {
                total += 1;
            }
        }
    }
    Ok(total)
}

/// F1 over unordered adjacent pairs.
pub fn skeleton_f1(est: &Pag, truth: &Pag) -> Result<f64, MetricError> {
    let d = check(est, truth)?;
    let (mut tp, mut fp, mut fn_) = (0, 0, 0);
    for i in 0..d {
        for j in i + 1..d {
            match (est.adjacent(i, j), truth.adjacent(i, j)) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fn_ += 1,
                (false, false) => {}
            }
        }
    }
    Ok(f1(tp, fp, fn_))
}

/// F1 over ordered positions `(i, j)` carrying an arrowhead at `j`.
pub fn arrowhead_f1(est: &Pag, truth: &Pag) -> Result<f64, MetricError> {
    let d = check(est, truth)?;
    let (mut tp, mut fp, mut fn_) = (0, 0, 0);
    for i in 0..d {
        for j in 0..d {
            match (est.mark(i, j) == Mark::Arrow, truth.mark(i, j) == Mark::Arrow) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fn_ += 1,
                (false, false) => {}
            }
        }
    }
    Ok(f1(tp, fp, fn_))
}
