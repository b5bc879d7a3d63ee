use crate::gradeng::Tensor;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OptimError {
    #[error("gradient for parameter {param} contains a non-finite value")]
    NonFiniteGradient { param: usize },
    #[error("parameter {param} has shape {param_shape:?} but its gradient has {grad_shape:?}")]
    ShapeMismatch {
        param: usize,
        param_shape: (usize, usize),
        grad_shape: (usize, usize),
    },
    #[error("optimizer expected {expected} parameters, got {got}")]
    ParamCount { expected: usize, got: usize },
}

/// One optimizer instance owns the state for a fixed, ordered parameter list.
pub trait Optimizer {
    fn name(&self) -> &'static str;
    fn step(&mut self, params: &mut [&mut Tensor], grads: &[Tensor]) -> Result<(), OptimError>;
}

/// Names accepted by [`optimizer_by_name`].
pub const OPTIMIZERS: [&str; 2] = ["adam", "sgd"];

pub fn optimizer_by_name(name: &str, lr: f64) -> Option<Box<dyn Optimizer>> {
    match name {
        "adam" => Some(Box::new(Adam::new(lr))),
        "sgd" => Some(Box::new(Sgd { lr })),
        _ => None,
    }
}

fn check(params: &[&mut Tensor], grads: &[Tensor]) -> Result<(), OptimError> {
    if params.len() != grads.len() {
        return Err(OptimError::ParamCount {
            expected: params.len(),
            got: grads.len(),
        });
    }
    for (idx, (p, g)) in params.iter().zip(grads).enumerate() {
        if p.shape() != g.shape() {
            return Err(OptimError::ShapeMismatch {
                param: idx,
                param_shape: p.shape(),
                grad_shape: g.shape(),
            });
        }
        if !g.all_finite() {
            return Err(OptimError::NonFiniteGradient { param: idx });
        }
    }
    Ok(())
}

/// `p -= lr * g`.
#[derive(Clone, Debug)]
pub struct Sgd {
    pub lr: f64,
}

impl Optimizer for Sgd {
    fn name(&self) -> &'static str {
        "sgd"
    }

    fn step(&mut self, params: &mut [&mut Tensor], grads: &[Tensor]) -> Result<(), OptimError> {
        check(params, grads)?;
        for (p, g) in params.iter_mut().zip(grads) {
            for (pv, gv) in p.data_mut().iter_mut().zip(g.data()) {
                *pv -= self.lr * gv;
            }
        }
        Ok(())
    }
}

/// Adaptive moments without bias correction:
/// `m = β1 m + (1-β1) g`, `v = β2 v + (1-β2) g²`, `p -= lr m / (√v + eps)`.
#[derive(Clone, Debug)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    moments: Vec<(Tensor, Tensor)>,
}

impl Adam {
    pub const BETA1: f64 = 0.5;
    pub const BETA2: f64 = 0.9;
    pub const EPS: f64 = 1e-8;

    pub fn new(lr: f64) -> Self {
        Self {
            lr,
            beta1: Self::BETA1,
            beta2: Self::BETA2,
            eps: Self::EPS,
            moments: Vec::new(),
        }
    }
}

impl Optimizer for Adam {
    fn name(&self) -> &'static str {
        "adam"
    }

    fn step(&mut self, params: &mut [&mut Tensor], grads: &[Tensor]) -> Result<(), OptimError> {
        check(params, grads)?;
        if self.moments.is_empty() {
            self.moments = grads
                .iter()
                .map(|g| (Tensor::zeros(g.rows(), g.cols()), Tensor::zeros(g.rows(), g.cols())))
                .collect();
        } else if self.moments.len() != grads.len() {
            return Err(OptimError::ParamCount {
                expected: self.moments.len(),
                got: grads.len(),
            });
        }
        let (b1, b2, lr, eps) = (self.beta1, self.beta2, self.lr, self.eps);
        for ((p, g), (m, v)) in params.iter_mut().zip(grads).zip(&mut self.moments) {
            let iter = p
                .data_mut()
                .iter_mut()
                .zip(g.data())
                .zip(m.data_mut().iter_mut().zip(v.data_mut().iter_mut()));
            for ((pv, &gv), (mv, vv)) in iter {
                *mv = b1 * *mv + (1.0 - b1) * gv;
                *vv = b2 * *vv + (1.0 - b2) * gv * gv;
                *pv -= lr * *mv / (vv.sqrt() + eps);
            }
        }
        Ok(())
    }
}
