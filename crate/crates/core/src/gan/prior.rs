use crate::gradeng::Tensor;
use crate::simulator::{
    signed_uniform, EDGE_WEIGHT_RANGE, NOISE_COVARIANCE_RANGE, NOISE_VARIANCE_RANGE,
};
use rand::Rng;

/// Fixed prior over SEM weights given a structure.
///
/// Draws fill every admissible position; the relaxed structure masks them.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeightPrior {
    /// Magnitudes of directed weights; signs are symmetric.
    pub directed: (f64, f64),
    pub variance: (f64, f64),
    /// Magnitudes of noise covariances; signs are symmetric.
    pub covariance: (f64, f64),
}

impl Default for WeightPrior {
    fn default() -> Self {
        Self {
            directed: EDGE_WEIGHT_RANGE,
            variance: NOISE_VARIANCE_RANGE,
            covariance: NOISE_COVARIANCE_RANGE,
        }
    }
}

impl WeightPrior {
    /// Directed weights for every off-diagonal position, zero diagonal.
    pub fn sample_directed<R: Rng + ?Sized>(&self, rng: &mut R, d: usize) -> Tensor {
        Tensor::from_fn(d, d, |i, j| {
            if i == j {
                0.0
            } else {
                signed_uniform(rng, self.directed)
            }
        })
    }

    /// Diagonal variances as a diagonal matrix.
    pub fn sample_variances<R: Rng + ?Sized>(&self, rng: &mut R, d: usize) -> Tensor {
        let mut t = Tensor::zeros(d, d);
        for i in 0..d {
            t[(i, i)] = rng.gen_range(self.variance.0..=self.variance.1);
        }
        t
    }

    /// Symmetric off-diagonal covariances with a zero diagonal.
    pub fn sample_covariances<R: Rng + ?Sized>(&self, rng: &mut R, d: usize) -> Tensor {
        let mut t = Tensor::zeros(d, d);
        for i in 0..d {
            for j in i + 1..d {
                let v = signed_uniform(rng, self.covariance);
                t[(i, j)] = v;
                t[(j, i)] = v;
            }
        }
        t
    }
}
