//! Tape recording and the reverse sweep.

use super::linalg;
use super::{GradError, Tensor};

/// Handle to a value recorded on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

/// The primitive operations the engine can differentiate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PrimitiveKind {
    MatMul,
    Add,
    Sub,
    HadamardProduct,
    ScalarScale(f64),
    Sigmoid,
    LeakyReLU(f64),
    Log,
    MatInverse,
    /// Lower Cholesky factor; reads the lower triangle of its input.
    Cholesky,
    /// `tr(exp(A))` as a 1x1 tensor.
    TraceExpm,
    MeanReduce,
    /// Inputs `[logits, g0, g1]`; output `sigmoid((logits + g1 - g0) / tau)`.
    BinaryConcrete(f64),
    Transpose,
    Clamp(f64, f64),
}

impl PrimitiveKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::MatMul => "matmul",
            Self::Add => "add",
            Self::Sub => "sub",
            Self::HadamardProduct => "hadamard",
            Self::ScalarScale(_) => "scalar_scale",
            Self::Sigmoid => "sigmoid",
            Self::LeakyReLU(_) => "leaky_relu",
            Self::Log => "log",
            Self::MatInverse => "mat_inverse",
            Self::Cholesky => "cholesky",
            Self::TraceExpm => "trace_expm",
            Self::MeanReduce => "mean",
            Self::BinaryConcrete(_) => "binary_concrete",
            Self::Transpose => "transpose",
            Self::Clamp(..) => "clamp",
        }
    }

    fn arity(&self) -> usize {
        match self {
            Self::MatMul | Self::Add | Self::Sub | Self::HadamardProduct => 2,
            Self::BinaryConcrete(_) => 3,
            _ => 1,
        }
    }
}

struct Record {
    kind: Option<PrimitiveKind>,
    inputs: Vec<Var>,
    value: Tensor,
    /// Extra forward state needed by the backward rule (e.g. `exp(A)`).
    saved: Option<Tensor>,
    requires_grad: bool,
}

/// An append-only record of primitive applications.
///
/// Records are stored in creation order, so every input precedes its
/// consumer and a single reverse scan is a valid backward schedule.
#[derive(Default)]
pub struct Tape {
    records: Vec<Record>,
}

/// Gradients of a scalar loss with respect to every recorded value.
pub struct Gradients {
    shapes: Vec<(usize, usize)>,
    grads: Vec<Option<Tensor>>,
}

impl Gradients {
    /// Gradient for `var`; zero when `var` does not influence the loss.
    pub fn get(&self, var: Var) -> Tensor {
        match self.grads.get(var.0) {
            Some(Some(g)) => g.clone(),
            _ => {
                let (r, c) = self.shapes.get(var.0).copied().unwrap_or((0, 0));
                Tensor::zeros(r, c)
            }
        }
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Records a trainable leaf.
    pub fn leaf(&mut self, value: Tensor) -> Var {
        self.push_leaf(value, true)
    }

    /// Records a constant leaf (no gradient flows into it).
    pub fn constant(&mut self, value: Tensor) -> Var {
        self.push_leaf(value, false)
    }

    fn push_leaf(&mut self, value: Tensor, requires_grad: bool) -> Var {
        self.records.push(Record {
            kind: None,
            inputs: Vec::new(),
            value,
            saved: None,
            requires_grad,
        });
        Var(self.records.len() - 1)
    }

    pub fn value(&self, var: Var) -> &Tensor {
        &self.records[var.0].value
    }

    pub fn requires_grad(&self, var: Var) -> bool {
        self.records[var.0].requires_grad
    }

    /// Applies `kind` to `inputs` and records the step.
    pub fn forward(&mut self, kind: PrimitiveKind, inputs: &[Var]) -> Result<Var, GradError> {
        let op = kind.name();
        if inputs.len() != kind.arity() {
            return Err(GradError::ArityMismatch {
                op,
                expected: kind.arity(),
                got: inputs.len(),
            });
        }
        if let Some(bad) = inputs.iter().find(|v| v.0 >= self.records.len()) {
            return Err(GradError::UnknownVar(bad.0));
        }
        let (value, saved) = {
            let vals: Vec<&Tensor> = inputs.iter().map(|v| &self.records[v.0].value).collect();
            forward_rule(kind, &vals)?
        };
        if !value.all_finite() {
            return Err(GradError::NonFiniteValue { op });
        }
        let requires_grad = inputs.iter().any(|v| self.records[v.0].requires_grad);
        self.records.push(Record {
            kind: Some(kind),
            inputs: inputs.to_vec(),
            value,
            saved,
            requires_grad,
        });
        Ok(Var(self.records.len() - 1))
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var, GradError> {
        self.forward(PrimitiveKind::MatMul, &[a, b])
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var, GradError> {
        self.forward(PrimitiveKind::Add, &[a, b])
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var, GradError> {
        self.forward(PrimitiveKind::Sub, &[a, b])
    }

    pub fn hadamard(&mut self, a: Var, b: Var) -> Result<Var, GradError> {
        self.forward(PrimitiveKind::HadamardProduct, &[a, b])
    }

    pub fn scale(&mut self, a: Var, s: f64) -> Result<Var, GradError> {
        self.forward(PrimitiveKind::ScalarScale(s), &[a])
    }

    pub fn sigmoid(&mut self, a: Var) -> Result<Var, GradError> {
        self.forward(PrimitiveKind::Sigmoid, &[a])
    }

    pub fn leaky_relu(&mut self, a: Var, slope: f64) -> Result<Var, GradError> {
        self.forward(PrimitiveKind::LeakyReLU(slope), &[a])
    }

    pub fn log(&mut self, a: Var) -> Result<Var, GradError> {
        self.forward(PrimitiveKind::Log, &[a])
    }

    pub fn inverse(&mut self, a: Var) -> Result<Var, GradError> {
        self.forward(PrimitiveKind::MatInverse, &[a])
    }

    pub fn cholesky(&mut self, a: Var) -> Result<Var, GradError> {
        self.forward(PrimitiveKind::Cholesky, &[a])
    }

    pub fn trace_expm(&mut self, a: Var) -> Result<Var, GradError> {
        self.forward(PrimitiveKind::TraceExpm, &[a])
    }

    pub fn mean(&mut self, a: Var) -> Result<Var, GradError> {
        self.forward(PrimitiveKind::MeanReduce, &[a])
    }

    pub fn binary_concrete(
        &mut self,
        logits: Var,
        g0: Var,
        g1: Var,
        tau: f64,
    ) -> Result<Var, GradError> {
        self.forward(PrimitiveKind::BinaryConcrete(tau), &[logits, g0, g1])
    }

    pub fn transpose(&mut self, a: Var) -> Result<Var, GradError> {
        self.forward(PrimitiveKind::Transpose, &[a])
    }

    pub fn clamp(&mut self, a: Var, lo: f64, hi: f64) -> Result<Var, GradError> {
        self.forward(PrimitiveKind::Clamp(lo, hi), &[a])
    }

    /// Reverse sweep from a scalar `loss`.
    pub fn backward(&self, loss: Var) -> Result<Gradients, GradError> {
        if self.records.is_empty() {
            return Err(GradError::TapeEmpty);
        }
        let loss_rec = self
            .records
            .get(loss.0)
            .ok_or(GradError::UnknownVar(loss.0))?;
        if loss_rec.value.shape() != (1, 1) {
            return Err(GradError::LossNotScalar {
                shape: loss_rec.value.shape(),
            });
        }

        let mut grads: Vec<Option<Tensor>> = (0..self.records.len()).map(|_| None).collect();
        grads[loss.0] = Some(Tensor::scalar(1.0));

        for idx in (0..=loss.0).rev() {
            let rec = &self.records[idx];
            let Some(kind) = rec.kind else { continue };
            if !rec.requires_grad {
                continue;
            }
            let Some(upstream) = grads[idx].take() else { continue };
            let input_vals: Vec<&Tensor> =
                rec.inputs.iter().map(|v| &self.records[v.0].value).collect();
            let wanted: Vec<bool> = rec
                .inputs
                .iter()
                .map(|v| self.records[v.0].requires_grad)
                .collect();
            let input_grads = backward_rule(
                kind,
                &input_vals,
                &rec.value,
                rec.saved.as_ref(),
                &upstream,
                &wanted,
            )?;
            for ((var, want), g) in rec.inputs.iter().zip(&wanted).zip(input_grads) {
                if !want {
                    continue;
                }
                let Some(g) = g else { continue };
                match &mut grads[var.0] {
                    Some(acc) => acc.add_assign(&g),
                    slot @ None => *slot = Some(g),
                }
            }
            // Leaves keep their gradient; intermediates are dropped above.
            grads[idx] = None;
        }

        Ok(Gradients {
            shapes: self.records.iter().map(|r| r.value.shape()).collect(),
            grads,
        })
    }
}

fn same_shape(op: &'static str, a: &Tensor, b: &Tensor) -> Result<(), GradError> {
    if a.shape() != b.shape() {
        return Err(GradError::shape(op, "operands must have equal shapes", a.shape(), Some(b.shape())));
    }
    Ok(())
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn forward_rule(
    kind: PrimitiveKind,
    x: &[&Tensor],
) -> Result<(Tensor, Option<Tensor>), GradError> {
    use PrimitiveKind::*;
    let op = kind.name();
    Ok(match kind {
        MatMul => {
            if x[0].cols() != x[1].rows() {
                return Err(GradError::shape(op, "inner dimensions differ", x[0].shape(), Some(x[1].shape())));
            }
            (x[0].matmul(x[1]), None)
        }
        Add => {
            same_shape(op, x[0], x[1])?;
            (x[0].zip_map(x[1], |a, b| a + b), None)
        }
        Sub => {
            same_shape(op, x[0], x[1])?;
            (x[0].zip_map(x[1], |a, b| a - b), None)
        }
        HadamardProduct => {
            same_shape(op, x[0], x[1])?;
            (x[0].zip_map(x[1], |a, b| a * b), None)
        }
        ScalarScale(s) => (x[0].scale(s), None),
        Sigmoid => (x[0].map(sigmoid), None),
        LeakyReLU(slope) => (x[0].map(|v| if v > 0.0 { v } else { slope * v }), None),
        Log => {
            if x[0].data().iter().any(|&v| v <= 0.0) {
                return Err(GradError::NonFiniteValue { op });
            }
            (x[0].map(f64::ln), None)
        }
        MatInverse => (linalg::inverse(x[0])?, None),
        Cholesky => (linalg::cholesky(x[0])?, None),
        TraceExpm => {
            let e = linalg::expm(x[0])?;
            (Tensor::scalar(e.trace()), Some(e))
        }
        MeanReduce => {
            if x[0].is_empty() {
                return Err(GradError::shape(op, "cannot average an empty tensor", x[0].shape(), None));
            }
            (Tensor::scalar(x[0].sum() / x[0].len() as f64), None)
        }
        BinaryConcrete(tau) => {
            if !(tau > 0.0) {
                return Err(GradError::NonPositiveTemperature(tau));
            }
            same_shape(op, x[0], x[1])?;
            same_shape(op, x[0], x[2])?;
            let data = x[0]
                .data()
                .iter()
                .zip(x[1].data())
                .zip(x[2].data())
                .map(|((&a, &g0), &g1)| sigmoid((a + g1 - g0) / tau))
                .collect();
            (Tensor::from_vec(x[0].rows(), x[0].cols(), data), None)
        }
        Transpose => (x[0].transpose(), None),
        Clamp(lo, hi) => (x[0].map(|v| v.clamp(lo, hi)), None),
    })
}

fn backward_rule(
    kind: PrimitiveKind,
    x: &[&Tensor],
    out: &Tensor,
    saved: Option<&Tensor>,
    up: &Tensor,
    wanted: &[bool],
) -> Result<Vec<Option<Tensor>>, GradError> {
    use PrimitiveKind::*;
    let want = |i: usize| wanted[i];
    Ok(match kind {
        MatMul => vec![
            want(0).then(|| up.matmul_t(x[1])),
            want(1).then(|| x[0].t_matmul(up)),
        ],
        Add => vec![want(0).then(|| up.clone()), want(1).then(|| up.clone())],
        Sub => vec![want(0).then(|| up.clone()), want(1).then(|| up.scale(-1.0))],
        HadamardProduct => vec![
            want(0).then(|| up.zip_map(x[1], |g, b| g * b)),
            want(1).then(|| up.zip_map(x[0], |g, a| g * a)),
        ],
        ScalarScale(s) => vec![Some(up.scale(s))],
        Sigmoid => vec![Some(up.zip_map(out, |g, y| g * y * (1.0 - y)))],
        LeakyReLU(slope) => vec![Some(up.zip_map(x[0], |g, v| if v > 0.0 { g } else { g * slope }))],
        Log => vec![Some(up.zip_map(x[0], |g, v| g / v))],
        MatInverse => {
            // d(A^-1) = -Y dA Y  =>  grad_A = -Yᵀ G Yᵀ
            let yt_g = out.t_matmul(up);
            vec![Some(yt_g.matmul_t(out).scale(-1.0))]
        }
        Cholesky => vec![Some(cholesky_backward(out, up)?)],
        TraceExpm => {
            let e = saved.expect("trace_expm saves exp(A)");
            vec![Some(e.transpose().scale(up.item()))]
        }
        MeanReduce => {
            let n = x[0].len() as f64;
            vec![Some(Tensor::full(x[0].rows(), x[0].cols(), up.item() / n))]
        }
        BinaryConcrete(tau) => {
            let local = up.zip_map(out, |g, y| g * y * (1.0 - y) / tau);
            vec![
                want(0).then(|| local.clone()),
                want(1).then(|| local.scale(-1.0)),
                want(2).then(|| local.clone()),
            ]
        }
        Transpose => vec![Some(up.transpose())],
        Clamp(lo, hi) => vec![Some(up.zip_map(x[0], |g, v| if v >= lo && v <= hi { g } else { 0.0 }))],
    })
}

/// Vector-Jacobian product of the lower Cholesky factor.
///
/// With `P = Φ(Lᵀ Ḡ)` (lower triangle, halved diagonal) the symmetric
/// gradient is `sym(L⁻ᵀ P L⁻¹)`. The forward reads only the lower triangle,
/// so strictly-lower entries receive both symmetric halves.
fn cholesky_backward(l: &Tensor, up: &Tensor) -> Result<Tensor, GradError> {
    let n = l.rows();
    let mut p = l.t_matmul(up);
    for i in 0..n {
        for j in 0..n {
            if j > i {
                p[(i, j)] = 0.0;
            } else if j == i {
                p[(i, j)] *= 0.5;
            }
        }
    }
    let l_inv = linalg::lower_triangular_inverse(l)?;
    let s = l_inv.t_matmul(&p).matmul(&l_inv);
    let mut g = Tensor::zeros(n, n);
    for i in 0..n {
        g[(i, i)] = s[(i, i)];
        for j in 0..i {
            g[(i, j)] = s[(i, j)] + s[(j, i)];
        }
    }
    Ok(g)
}
