//! A small reverse-mode differentiation engine over dense `f64` matrices.
//!
//! Only the primitives needed by the generator, the discriminator and the
//! acyclicity penalty are provided. Values are recorded on a [`Tape`] in
//! creation order and differentiated with a single reverse sweep.

mod linalg;
mod tape;
mod tensor;

pub use linalg::{cholesky, expm, inverse, SINGULAR_PIVOT};
pub use tape::{Gradients, PrimitiveKind, Tape, Var};
pub use tensor::Tensor;

use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GradError {
    #[error("{op}: {detail} (shapes {lhs:?} / {rhs:?})")]
    ShapeMismatch {
        op: &'static str,
        detail: &'static str,
        lhs: (usize, usize),
        rhs: Option<(usize, usize)>,
    },
    #[error("{op}: expected {expected} inputs, got {got}")]
    ArityMismatch {
        op: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("matrix is not positive definite (pivot {pivot})")]
    NotPositiveDefinite { pivot: usize },
    #[error("matrix is singular (pivot below threshold in column {column})")]
    SingularMatrix { column: usize },
    #[error("{op} produced a non-finite value")]
    NonFiniteValue { op: &'static str },
    #[error("loss must be a 1x1 tensor, got {shape:?}")]
    LossNotScalar { shape: (usize, usize) },
    #[error("backward called on an empty tape")]
    TapeEmpty,
    #[error("variable {0} is not on this tape")]
    UnknownVar(usize),
    #[error("temperature must be positive, got {0}")]
    NonPositiveTemperature(f64),
}

impl GradError {
    pub(crate) fn shape(
        op: &'static str,
        detail: &'static str,
        lhs: (usize, usize),
        rhs: Option<(usize, usize)>,
    ) -> Self {
        Self::ShapeMismatch { op, detail, lhs, rhs }
    }
}

/// Clamp applied to uniforms before the double log.
pub const GUMBEL_UNIFORM_CLAMP: f64 = 1e-12;

/// One Gumbel(0, 1) draw as `-ln(-ln u)`.
pub fn gumbel<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let u: f64 = rng.gen();
    let u = u.clamp(GUMBEL_UNIFORM_CLAMP, 1.0 - GUMBEL_UNIFORM_CLAMP);
    -(-u.ln()).ln()
}

/// A `rows x cols` tensor of independent Gumbel(0, 1) draws.
pub fn gumbel_tensor<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> Tensor {
    Tensor::from_fn(rows, cols, |_, _| gumbel(rng))
}

/// Second coordinate of `softmax([g0, logit + g1] / tau)`.
///
/// For two categories this is `sigmoid((logit + g1 - g0) / tau)`.
pub fn binary_concrete_sample(logit: f64, tau: f64, g0: f64, g1: f64) -> Result<f64, GradError> {
    if !(tau > 0.0) {
        return Err(GradError::NonPositiveTemperature(tau));
    }
    let z = (logit + g1 - g0) / tau;
    Ok(if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    })
}

#[cfg(test)]
mod tests;
