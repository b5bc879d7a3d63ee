/// Temperature as a function of the epoch index.
pub trait AnnealSchedule {
    fn name(&self) -> &'static str;
    /// Temperature at `epoch` of `epochs`; equals `start` at 0 and `end` at
    /// `epochs - 1`.
    fn tau(&self, epoch: usize, epochs: usize, start: f64, end: f64) -> f64;
}

pub const SCHEDULES: [&str; 2] = ["exponential", "linear"];

pub fn schedule_by_name(name: &str) -> Option<Box<dyn AnnealSchedule>> {
    match name {
        "exponential" => Some(Box::new(Exponential)),
        "linear" => Some(Box::new(Linear)),
        _ => None,
    }
}

fn progress(epoch: usize, epochs: usize) -> f64 {
    if epochs <= 1 {
        0.0
    } else {
        epoch as f64 / (epochs - 1) as f64
    }
}

/// `start * (end / start)^(t / (T - 1))`.
#[derive(Clone, Copy, Debug, Default)]
pub struct Exponential;

impl AnnealSchedule for Exponential {
    fn name(&self) -> &'static str {
        "exponential"
    }

    fn tau(&self, epoch: usize, epochs: usize, start: f64, end: f64) -> f64 {
        let t = progress(epoch, epochs);
        if t == 1.0 {
            return end;
        }
        start * (end / start).powf(t)
    }
}

/// `start + (end - start) * t / (T - 1)`.
#[derive(Clone, Copy, Debug, Default)]
pub struct Linear;

impl AnnealSchedule for Linear {
    fn name(&self) -> &'static str {
        "linear"
    }

    fn tau(&self, epoch: usize, epochs: usize, start: f64, end: f64) -> f64 {
        start + (end - start) * progress(epoch, epochs)
    }
}
