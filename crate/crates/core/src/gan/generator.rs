use super::{GanError, WeightPrior};
use crate::gradeng::{gumbel_tensor, GradError, Tape, Tensor, Var};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// First jitter added to a non-positive-definite `Σ*`.
pub const JITTER_START: f64 = 1e-3;
/// Number of doublings tried before the covariance draw is abandoned.
pub const JITTER_DOUBLINGS: usize = 10;
/// Covariance redraws tried after jitter fails.
pub const MAX_COVARIANCE_REDRAWS: usize = 1000;

/// Learnable edge logits. Only the strict upper triangle of `a_sigma` is used.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorParams {
    #[serde(with = "tensor_rows")]
    pub a_b: Tensor,
    #[serde(with = "tensor_rows")]
    pub a_sigma: Tensor,
}

impl GeneratorParams {
    pub fn zeros(d: usize) -> Self {
        Self {
            a_b: Tensor::zeros(d, d),
            a_sigma: Tensor::zeros(d, d),
        }
    }

    pub fn d(&self) -> usize {
        self.a_b.rows()
    }

    pub fn register(&self, tape: &mut Tape, trainable: bool) -> GeneratorVars {
        let (a_b, a_sigma) = if trainable {
            (tape.leaf(self.a_b.clone()), tape.leaf(self.a_sigma.clone()))
        } else {
            (tape.constant(self.a_b.clone()), tape.constant(self.a_sigma.clone()))
        };
        GeneratorVars { a_b, a_sigma }
    }
}

pub(crate) mod tensor_rows {
    use crate::gradeng::Tensor;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(t: &Tensor, s: S) -> Result<S::Ok, S::Error> {
        t.to_rows().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Tensor, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(serde::de::Error::custom("ragged matrix"));
        }
        Ok(Tensor::from_rows(&rows))
    }
}

#[derive(Clone, Copy, Debug)]
pub struct GeneratorVars {
    pub a_b: Var,
    pub a_sigma: Var,
}

/// Gumbel pairs for both relaxed adjacency matrices. The bidirected pair is
/// symmetric so the mirrored sample is exactly symmetric.
#[derive(Clone, Debug)]
pub struct StructureNoise {
    pub g0_b: Tensor,
    pub g1_b: Tensor,
    pub g0_sigma: Tensor,
    pub g1_sigma: Tensor,
}

impl StructureNoise {
    pub fn draw<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Self {
        let g0_b = gumbel_tensor(rng, d, d);
        let g1_b = gumbel_tensor(rng, d, d);
        let g0_sigma = symmetrize_upper(&gumbel_tensor(rng, d, d));
        let g1_sigma = symmetrize_upper(&gumbel_tensor(rng, d, d));
        Self {
            g0_b,
            g1_b,
            g0_sigma,
            g1_sigma,
        }
    }
}

fn symmetrize_upper(t: &Tensor) -> Tensor {
    Tensor::from_fn(t.rows(), t.cols(), |i, j| if i <= j { t[(i, j)] } else { t[(j, i)] })
}

/// Every random input of one generator call.
#[derive(Clone, Debug)]
pub struct BatchNoise {
    pub structure: StructureNoise,
    pub b_prime: Tensor,
    pub variances: Tensor,
    pub covariances: Tensor,
}

impl BatchNoise {
    pub fn draw<R: Rng + ?Sized>(rng: &mut R, prior: &WeightPrior, d: usize) -> Self {
        let structure = StructureNoise::draw(rng, d);
        let b_prime = prior.sample_directed(rng, d);
        let variances = prior.sample_variances(rng, d);
        let covariances = prior.sample_covariances(rng, d);
        Self {
            structure,
            b_prime,
            variances,
            covariances,
        }
    }
}

fn off_diagonal_mask(d: usize) -> Tensor {
    Tensor::from_fn(d, d, |i, j| if i == j { 0.0 } else { 1.0 })
}

fn strict_upper_mask(d: usize) -> Tensor {
    Tensor::from_fn(d, d, |i, j| if i < j { 1.0 } else { 0.0 })
}

/// Relaxed `(S̃_B, S̃_Σ)` with zero diagonals; `S̃_Σ` is built from the
/// upper triangle of the logits and mirrored.
pub fn sample_structures(
    tape: &mut Tape,
    vars: GeneratorVars,
    tau: f64,
    noise: &StructureNoise,
) -> Result<(Var, Var), GradError> {
    if !(tau > 0.0) {
        return Err(GradError::NonPositiveTemperature(tau));
    }
    let d = tape.value(vars.a_b).rows();
    let off = tape.constant(off_diagonal_mask(d));

    let g0 = tape.constant(noise.g0_b.clone());
    let g1 = tape.constant(noise.g1_b.clone());
    let soft_b = tape.binary_concrete(vars.a_b, g0, g1, tau)?;
    let s_b = tape.hadamard(soft_b, off)?;

    let upper = tape.constant(strict_upper_mask(d));
    let a_upper = tape.hadamard(vars.a_sigma, upper)?;
    let a_lower = tape.transpose(a_upper)?;
    let a_sym = tape.add(a_upper, a_lower)?;
    let g0 = tape.constant(noise.g0_sigma.clone());
    let g1 = tape.constant(noise.g1_sigma.clone());
    let soft_sigma = tape.binary_concrete(a_sym, g0, g1, tau)?;
    let s_sigma = tape.hadamard(soft_sigma, off)?;
    Ok((s_b, s_sigma))
}

/// Result of one generator call.
#[derive(Clone, Copy, Debug)]
pub struct GeneratedBatch {
    pub x_fake: Var,
    pub s_b: Var,
    pub s_sigma: Var,
    /// Jitter additions needed before `Σ*` factorised.
    pub jitter_events: usize,
}

/// Masks the prior draw, factorises `Σ*` and maps `z` through the SEM:
/// `X = Z L*ᵀ (I - B*)^{-1}`.
///
/// Fails with [`GanError::CholeskyFailureAfterJitter`] when `Σ*` stays
/// indefinite after every jitter doubling.
pub fn generate_with_noise(
    tape: &mut Tape,
    z: Var,
    vars: GeneratorVars,
    tau: f64,
    noise: &BatchNoise,
) -> Result<GeneratedBatch, GanError> {
    let d = tape.value(vars.a_b).rows();
    if tape.value(z).cols() != d {
        return Err(GanError::Grad(GradError::ShapeMismatch {
            op: "generate_batch",
            detail: "noise columns must equal the variable count",
            lhs: tape.value(z).shape(),
            rhs: Some((d, d)),
        }));
    }
    let (s_b, s_sigma) = sample_structures(tape, vars, tau, &noise.structure)?;

    let b_prime = tape.constant(noise.b_prime.clone());
    let b_star = tape.hadamard(s_b, b_prime)?;
    let cov = tape.constant(noise.covariances.clone());
    let masked_cov = tape.hadamard(s_sigma, cov)?;
    let variances = tape.constant(noise.variances.clone());
    let sigma_star = tape.add(variances, masked_cov)?;

    let (l, jitter_events) = jittered_cholesky(tape, sigma_star, d)?;

    let eye = tape.constant(Tensor::identity(d));
    let i_minus_b = tape.sub(eye, b_star)?;
    let inv = tape.inverse(i_minus_b)?;
    let l_t = tape.transpose(l)?;
    let mix = tape.matmul(l_t, inv)?;
    let x_fake = tape.matmul(z, mix)?;
    Ok(GeneratedBatch {
        x_fake,
        s_b,
        s_sigma,
        jitter_events,
    })
}

fn jittered_cholesky(tape: &mut Tape, sigma: Var, d: usize) -> Result<(Var, usize), GanError> {
    match tape.cholesky(sigma) {
        Ok(l) => return Ok((l, 0)),
        Err(GradError::NotPositiveDefinite { .. }) => {}
        Err(e) => return Err(e.into()),
    }
    let mut c = JITTER_START;
    for attempt in 1..=JITTER_DOUBLINGS {
        let jitter = tape.constant(Tensor::identity(d).scale(c));
        let shifted = tape.add(sigma, jitter)?;
        match tape.cholesky(shifted) {
            Ok(l) => return Ok((l, attempt)),
            Err(GradError::NotPositiveDefinite { .. }) => c *= 2.0,
            Err(e) => return Err(e.into()),
        }
    }
    Err(GanError::CholeskyFailureAfterJitter)
}

/// Draws fresh noise and generates; when `Σ*` cannot be factorised even with
/// jitter, the covariance part of the prior draw is redrawn.
pub fn generate_batch<R: Rng + ?Sized>(
    tape: &mut Tape,
    z: Var,
    vars: GeneratorVars,
    tau: f64,
    prior: &WeightPrior,
    rng: &mut R,
) -> Result<(GeneratedBatch, usize), GanError> {
    let d = tape.value(vars.a_b).rows();
    let mut noise = BatchNoise::draw(rng, prior, d);
    for redraws in 0..=MAX_COVARIANCE_REDRAWS {
        match generate_with_noise(tape, z, vars, tau, &noise) {
            Err(GanError::CholeskyFailureAfterJitter) => {
                noise.variances = prior.sample_variances(rng, d);
                noise.covariances = prior.sample_covariances(rng, d);
            }
            other => return other.map(|b| (b, redraws)),
        }
    }
    Err(GanError::CholeskyFailureAfterJitter)
}
