//! Adversarial structure learning for linear structural equation models
//! with unmeasured confounding.
//!
//! A generator samples relaxed directed and bidirected adjacency matrices
//! from learnable logits, draws weights from a fixed prior and produces
//! data through the linear SEM; a discriminator tells generated samples from
//! observed ones. The learned logits are thresholded into an ADMG, which is
//! scored against a ground truth through oracle-FCI PAGs.

pub mod gradeng;
pub mod admg;
pub mod pag;
pub mod simulator;
pub mod gan;
pub mod trainer;
pub mod cli;
