use crate::gradeng::{GradError, Tape, Tensor, Var};
use rand::Rng;

pub const HIDDEN_WIDTH: usize = 64;
pub const LEAKY_SLOPE: f64 = 0.2;
/// Probabilities are clamped to `[PROB_CLAMP, 1 - PROB_CLAMP]` before logs.
pub const PROB_CLAMP: f64 = 1e-7;

/// MLP `d -> 64 -> 64 -> 1`. Weights are stored `fan_in x fan_out`,
/// biases as `1 x fan_out` rows.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscriminatorParams {
    pub layers: Vec<(Tensor, Tensor)>,
}

impl DiscriminatorParams {
    /// Uniform weights on `±1/sqrt(fan_in)`, zero biases.
    pub fn init<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Self {
        let widths = [d, HIDDEN_WIDTH, HIDDEN_WIDTH, 1];
        let layers = widths
            .windows(2)
            .map(|w| {
                let bound = 1.0 / (w[0] as f64).sqrt();
                let weight = Tensor::from_fn(w[0], w[1], |_, _| rng.gen_range(-bound..=bound));
                (weight, Tensor::zeros(1, w[1]))
            })
            .collect();
        Self { layers }
    }

    /// All-zero parameters with the standard shapes.
    pub fn zeros(d: usize) -> Self {
        let widths = [d, HIDDEN_WIDTH, HIDDEN_WIDTH, 1];
        let layers = widths
            .windows(2)
            .map(|w| (Tensor::zeros(w[0], w[1]), Tensor::zeros(1, w[1])))
            .collect();
        Self { layers }
    }

    pub fn d(&self) -> usize {
        self.layers[0].0.rows()
    }

    pub fn all_finite(&self) -> bool {
        self.layers.iter().all(|(w, b)| w.all_finite() && b.all_finite())
    }

    pub fn register(&self, tape: &mut Tape, trainable: bool) -> DiscriminatorVars {
        let mut put = |t: &Tensor| {
            if trainable {
                tape.leaf(t.clone())
            } else {
                tape.constant(t.clone())
            }
        };
        let layers = self.layers.iter().map(|(w, b)| (put(w), put(b))).collect();
        DiscriminatorVars { layers }
    }
}

#[derive(Clone, Debug)]
pub struct DiscriminatorVars {
    pub layers: Vec<(Var, Var)>,
}

impl DiscriminatorVars {
    /// Weight and bias variables in layer order.
    pub fn flat(&self) -> Vec<Var> {
        self.layers.iter().flat_map(|&(w, b)| [w, b]).collect()
    }
}

/// Row-wise probabilities `k x 1`, clamped.
pub fn discriminator_forward(tape: &mut Tape, vars: &DiscriminatorVars, x: Var) -> Result<Var, GradError> {
    let k = tape.value(x).rows();
    let ones = tape.constant(Tensor::full(k, 1, 1.0));
    let mut h = x;
    let last = vars.layers.len() - 1;
    for (idx, &(w, b)) in vars.layers.iter().enumerate() {
        let lin = tape.matmul(h, w)?;
        let bias = tape.matmul(ones, b)?;
        let pre = tape.add(lin, bias)?;
        h = if idx == last { tape.sigmoid(pre)? } else { tape.leaky_relu(pre, LEAKY_SLOPE)? };
    }
    tape.clamp(h, PROB_CLAMP, 1.0 - PROB_CLAMP)
}

/// `-mean log D(real) - mean log(1 - D(fake))`.
pub fn discriminator_loss(tape: &mut Tape, d_real: Var, d_fake: Var) -> Result<Var, GradError> {
    let log_real = tape.log(d_real)?;
    let real_term = tape.mean(log_real)?;
    let (r, c) = tape.value(d_fake).shape();
    let ones = tape.constant(Tensor::full(r, c, 1.0));
    let not_fake = tape.sub(ones, d_fake)?;
    let log_fake = tape.log(not_fake)?;
    let fake_term = tape.mean(log_fake)?;
    let sum = tape.add(real_term, fake_term)?;
    tape.scale(sum, -1.0)
}

/// Non-saturating generator loss `-mean log D(fake)`.
pub fn generator_adv_loss(tape: &mut Tape, d_fake: Var) -> Result<Var, GradError> {
    let log_fake = tape.log(d_fake)?;
    let m = tape.mean(log_fake)?;
    tape.scale(m, -1.0)
}
