//! The alternating training loop, temperature annealing and final structure
//! extraction.
//!
//! Each batch first updates the generator logits on
//! `L_G = -mean log D(fake) + λ h(S̃_B)`, then regenerates fakes from the same
//! noise `Z` with fresh structure and weight draws and updates the
//! discriminator. Optimizers and temperature schedules are looked up by name.

mod anneal;
mod artifacts;
mod config;
mod extract;
mod optim;

pub use anneal::{schedule_by_name, AnnealSchedule, Exponential, Linear, SCHEDULES};
pub use artifacts::{read_logits, write_history_csv, write_logits, write_run_dir, ArtifactError};
pub use config::{ConfigError, TrainConfig, CONFIG_KEYS};
pub use extract::{edge_probabilities, extract_structure, hard_penalty, Extraction};
pub use optim::{optimizer_by_name, Adam, OptimError, Optimizer, Sgd, OPTIMIZERS};

use crate::admg::acyclicity_penalty;
use crate::gan::{
    discriminator_forward, discriminator_loss, generate_batch, generator_adv_loss,
    DiscriminatorParams, GanError, GeneratorParams, WeightPrior,
};
use crate::gradeng::{GradError, Tape, Tensor};
use crate::simulator::Dataset;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StepError {
    #[error(transparent)]
    Gan(#[from] GanError),
    #[error(transparent)]
    Optim(#[from] OptimError),
}

impl From<GradError> for StepError {
    fn from(e: GradError) -> Self {
        Self::Gan(GanError::Grad(e))
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrainError {
    #[error("invalid training data: {0}")]
    InvalidData(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("epoch {epoch}, batch {batch}: {source}")]
    Step {
        epoch: usize,
        batch: usize,
        #[source]
        source: StepError,
    },
}

/// Statistics of one completed epoch. Losses and penalty are batch means.
#[derive(Clone, Debug, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub l_g: f64,
    pub l_d: f64,
    /// `h(S̃_B)` of the relaxed samples.
    pub penalty: f64,
    pub tau: f64,
    pub jitter_events: usize,
    /// `h` of the thresholded logits at epoch end.
    pub hard_penalty: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainHistory {
    pub records: Vec<EpochRecord>,
}

impl TrainHistory {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum TrainEvent<'a> {
    GeneratorStep { epoch: usize, batch: usize, loss: f64 },
    DiscriminatorStep { epoch: usize, batch: usize, loss: f64 },
    EpochEnd(&'a EpochRecord),
}

pub trait TrainObserver {
    fn observe(&mut self, event: &TrainEvent<'_>);
}

impl TrainObserver for () {
    fn observe(&mut self, _: &TrainEvent<'_>) {}
}

impl<F: FnMut(&TrainEvent<'_>)> TrainObserver for F {
    fn observe(&mut self, event: &TrainEvent<'_>) {
        self(event)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainOutcome {
    pub generator: GeneratorParams,
    pub discriminator: DiscriminatorParams,
    pub history: TrainHistory,
}

struct StepStats {
    loss: f64,
    penalty: f64,
    jitter: usize,
}

struct Trainer<'a> {
    cfg: &'a TrainConfig,
    prior: WeightPrior,
    generator: GeneratorParams,
    discriminator: DiscriminatorParams,
    opt_g: Box<dyn Optimizer>,
    opt_d: Box<dyn Optimizer>,
    rng: ChaCha8Rng,
}

impl Trainer<'_> {
    fn generator_step(&mut self, z: &Tensor, tau: f64) -> Result<StepStats, StepError> {
        let mut tape = Tape::new();
        let gvars = self.generator.register(&mut tape, true);
        let dvars = self.discriminator.register(&mut tape, false);
        let zv = tape.constant(z.clone());
        let (fake, redraws) = generate_batch(&mut tape, zv, gvars, tau, &self.prior, &mut self.rng)?;
        let d_fake = discriminator_forward(&mut tape, &dvars, fake.x_fake)?;
        let adv = generator_adv_loss(&mut tape, d_fake)?;
        let h = acyclicity_penalty(&mut tape, fake.s_b)?;
        let weighted = tape.scale(h, self.cfg.lambda_acyc)?;
        let loss = tape.add(adv, weighted)?;
        let grads = tape.backward(loss)?;
        let g = [grads.get(gvars.a_b), grads.get(gvars.a_sigma)];
        let GeneratorParams { a_b, a_sigma } = &mut self.generator;
        self.opt_g.step(&mut [a_b, a_sigma], &g)?;
        Ok(StepStats {
            loss: tape.value(loss).item(),
            penalty: tape.value(h).item(),
            jitter: fake.jitter_events + redraws,
        })
    }

    fn discriminator_step(&mut self, real: Tensor, z: Tensor, tau: f64) -> Result<StepStats, StepError> {
        let mut tape = Tape::new();
        let gvars = self.generator.register(&mut tape, false);
        let dvars = self.discriminator.register(&mut tape, true);
        let zv = tape.constant(z);
        let (fake, redraws) = generate_batch(&mut tape, zv, gvars, tau, &self.prior, &mut self.rng)?;
        let xr = tape.constant(real);
        let d_real = discriminator_forward(&mut tape, &dvars, xr)?;
        let d_fake = discriminator_forward(&mut tape, &dvars, fake.x_fake)?;
        let loss = discriminator_loss(&mut tape, d_real, d_fake)?;
        let grads = tape.backward(loss)?;
        let g: Vec<Tensor> = dvars.flat().into_iter().map(|v| grads.get(v)).collect();
        let mut params: Vec<&mut Tensor> = self
            .discriminator
            .layers
            .iter_mut()
            .flat_map(|(w, b)| [w, b])
            .collect();
        self.opt_d.step(&mut params, &g)?;
        Ok(StepStats {
            loss: tape.value(loss).item(),
            penalty: 0.0,
            jitter: fake.jitter_events + redraws,
        })
    }
}

/// Runs the full adversarial loop. Deterministic given `data` and `cfg`.
pub fn train(data: &Dataset, cfg: &TrainConfig) -> Result<TrainOutcome, TrainError> {
    train_observed(data, cfg, &mut ())
}

pub fn train_observed(
    data: &Dataset,
    cfg: &TrainConfig,
    observer: &mut dyn TrainObserver,
) -> Result<TrainOutcome, TrainError> {
    cfg.validate()?;
    let (n, d) = (data.n(), data.d());
    if d < 2 {
        return Err(TrainError::InvalidData(format!("need at least 2 variables, got {d}")));
    }
    if n < cfg.batch_size {
        return Err(TrainError::InvalidData(format!(
            "{n} samples is fewer than the batch size {}",
            cfg.batch_size
        )));
    }
    let schedule = schedule_by_name(&cfg.anneal).expect("validated schedule");
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let discriminator = DiscriminatorParams::init(&mut rng, d);
    let mut trainer = Trainer {
        cfg,
        prior: WeightPrior::default(),
        generator: GeneratorParams::zeros(d),
        discriminator,
        opt_g: optimizer_by_name(&cfg.optimizer, cfg.lr_g).expect("validated optimizer"),
        opt_d: optimizer_by_name(&cfg.optimizer, cfg.lr_d).expect("validated optimizer"),
        rng,
    };

    let k = cfg.batch_size;
    let mut order: Vec<usize> = (0..n).collect();
    let mut history = TrainHistory::default();
    for epoch in 0..cfg.epochs {
        let tau = schedule.tau(epoch, cfg.epochs, cfg.tau_start, cfg.tau_end);
        order.shuffle(&mut trainer.rng);
        let (mut sum_g, mut sum_d, mut sum_h, mut jitter, mut batches) = (0.0, 0.0, 0.0, 0, 0);
        for (batch, idx) in order.chunks_exact(k).enumerate() {
            let wrap = |source| TrainError::Step { epoch, batch, source };
            let real = data.select_rows(idx);
            let z = Tensor::from_fn(k, d, |_, _| trainer.rng.sample(StandardNormal));

            let g = trainer.generator_step(&z, tau).map_err(wrap)?;
            observer.observe(&TrainEvent::GeneratorStep { epoch, batch, loss: g.loss });
            let dstep = trainer.discriminator_step(real, z, tau).map_err(wrap)?;
            observer.observe(&TrainEvent::DiscriminatorStep { epoch, batch, loss: dstep.loss });

            sum_g += g.loss;
            sum_d += dstep.loss;
            sum_h += g.penalty;
            jitter += g.jitter + dstep.jitter;
            batches += 1;
        }
        let m = batches as f64;
        let record = EpochRecord {
            epoch,
            l_g: sum_g / m,
            l_d: sum_d / m,
            penalty: sum_h / m,
            tau,
            jitter_events: jitter,
            hard_penalty: hard_penalty(&trainer.generator, cfg.delta),
        };
        observer.observe(&TrainEvent::EpochEnd(&record));
        history.records.push(record);
    }
    Ok(TrainOutcome {
        generator: trainer.generator,
        discriminator: trainer.discriminator,
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_data(n: usize, seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Dataset::new(Tensor::from_fn(n, 3, |_, _| rng.sample(StandardNormal))).unwrap()
    }

    fn quick(epochs: usize, k: usize) -> TrainConfig {
        TrainConfig {
            epochs,
            batch_size: k,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn one_epoch_one_batch_accounting() {
        let data = small_data(16, 1);
        let mut events = Vec::new();
        let mut obs = |e: &TrainEvent<'_>| {
            events.push(match e {
                TrainEvent::GeneratorStep { .. } => "G",
                TrainEvent::DiscriminatorStep { .. } => "D",
                TrainEvent::EpochEnd(_) => "E",
            })
        };
        let out = train_observed(&data, &quick(1, 16), &mut obs).unwrap();
        assert_eq!(events, ["G", "D", "E"]);
        assert_eq!(out.history.len(), 1);
        assert_eq!(out.history.records[0].tau, 1.0);
    }

    #[test]
    fn penalty_enters_loss_linearly() {
        let data = small_data(16, 2);
        let first_loss = |lambda: f64| {
            let mut cfg = quick(1, 16);
            cfg.lambda_acyc = lambda;
            let mut loss = None;
            let mut obs = |e: &TrainEvent<'_>| {
                if let TrainEvent::GeneratorStep { loss: l, .. } = e {
                    loss = Some(*l);
                }
            };
            let out = train_observed(&data, &cfg, &mut obs).unwrap();
            (loss.unwrap(), out.history.records[0].penalty)
        };
        let (adv, h) = first_loss(0.0);
        let (full, h_again) = first_loss(100.0);
        assert_eq!(h, h_again);
        assert!(h > 0.0);
        assert!((full - (adv + 100.0 * h)).abs() < 1e-9);
    }

    #[test]
    fn deterministic_history() {
        let data = small_data(40, 3);
        let cfg = quick(3, 8);
        let a = train(&data, &cfg).unwrap();
        let b = train(&data, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_small_inputs() {
        let data = small_data(10, 4);
        assert!(matches!(train(&data, &quick(1, 11)), Err(TrainError::InvalidData(_))));
        let one = Dataset::new(Tensor::zeros(5, 1)).unwrap();
        assert!(matches!(train(&one, &quick(1, 5)), Err(TrainError::InvalidData(_))));
    }
}
