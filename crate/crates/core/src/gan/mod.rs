//! Differentiable generator and MLP discriminator.
//!
//! The generator samples relaxed masks `(S̃_B, S̃_Σ)` from its logits, masks a
//! fresh prior weight draw `(B′, Σ′)` and pushes standard-normal noise
//! through the resulting linear SEM.

mod discriminator;
mod generator;
mod prior;

pub use discriminator::{
    discriminator_forward, discriminator_loss, generator_adv_loss, DiscriminatorParams,
    DiscriminatorVars, HIDDEN_WIDTH, LEAKY_SLOPE, PROB_CLAMP,
};
pub(crate) use generator::tensor_rows;
pub use generator::{
    generate_batch, generate_with_noise, sample_structures, BatchNoise, GeneratedBatch,
    GeneratorParams, GeneratorVars, StructureNoise, JITTER_DOUBLINGS, JITTER_START,
    MAX_COVARIANCE_REDRAWS,
};
pub use prior::WeightPrior;

use crate::gradeng::GradError;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GanError {
    #[error("noise covariance stayed indefinite after jitter and redraws")]
    CholeskyFailureAfterJitter,
    #[error(transparent)]
    Grad(#[from] GradError),
}
