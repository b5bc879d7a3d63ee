#![allow(dead_code)]

use fgan_cd::admg::{acyclicity_penalty, Admg};
use fgan_cd::gan::{
    discriminator_forward, discriminator_loss, generate_with_noise, generator_adv_loss, BatchNoise,
    DiscriminatorParams, GeneratorParams, WeightPrior,
};
use fgan_cd::gradeng::{PrimitiveKind, Tape, Tensor, Var};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub const FD_STEP: f64 = 1e-4;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Tensor {
    Tensor::from_fn(r, c, |_, _| rng.sample(StandardNormal))
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-2)
}

/// Largest relative error between `analytic` and central differences of `f`
/// over every entry of every input.
pub fn fd_max_rel_err(f: &dyn Fn(&[Tensor]) -> f64, inputs: &[Tensor], analytic: &[Tensor]) -> f64 {
    let mut worst: f64 = 0.0;
    for (k, x) in inputs.iter().enumerate() {
        for idx in 0..x.len() {
            let mut plus = inputs.to_vec();
            plus[k].data_mut()[idx] += FD_STEP;
            let mut minus = inputs.to_vec();
            minus[k].data_mut()[idx] -= FD_STEP;
            let numeric = (f(&plus) - f(&minus)) / (2.0 * FD_STEP);
            worst = worst.max(rel_err(analytic[k].data()[idx], numeric));
        }
    }
    worst
}

/// Builds `mean(prim(inputs) ∘ R)` and returns its value and input gradients.
fn projected(kind: PrimitiveKind, inputs: &[Tensor], proj: &Tensor) -> (f64, Vec<Tensor>) {
    let mut tape = Tape::new();
    let vars: Vec<Var> = inputs.iter().map(|x| tape.leaf(x.clone())).collect();
    let out = tape.forward(kind, &vars).expect("forward");
    let r = tape.constant(proj.clone());
    let weighted = tape.hadamard(out, r).expect("projection shape");
    let loss = tape.mean(weighted).unwrap();
    let grads = tape.backward(loss).unwrap();
    (tape.value(loss).item(), vars.iter().map(|&v| grads.get(v)).collect())
}

fn away_from(t: Tensor, kink: f64, margin: f64) -> Tensor {
    t.map(|v| if (v - kink).abs() < margin { kink + margin.copysign(v - kink) } else { v })
}

/// Random inputs of one primitive instance and the output shape.
fn instance(kind: PrimitiveKind, rng: &mut ChaCha8Rng) -> (Vec<Tensor>, (usize, usize)) {
    use PrimitiveKind::*;
    let (r, c) = (rng.gen_range(1..=4), rng.gen_range(1..=4));
    let n = rng.gen_range(2..=5);
    match kind {
        MatMul => {
            let k = rng.gen_range(1..=4);
            (vec![normal(rng, r, k), normal(rng, k, c)], (r, c))
        }
        Add | Sub | HadamardProduct => (vec![normal(rng, r, c), normal(rng, r, c)], (r, c)),
        ScalarScale(_) | Sigmoid | MeanReduce => {
            let shape = if matches!(kind, MeanReduce) { (1, 1) } else { (r, c) };
            (vec![normal(rng, r, c)], shape)
        }
        LeakyReLU(_) => (vec![away_from(normal(rng, r, c), 0.0, 1e-2)], (r, c)),
        Clamp(lo, hi) => {
            let x = away_from(away_from(normal(rng, r, c), lo, 1e-2), hi, 1e-2);
            (vec![x], (r, c))
        }
        Log => (vec![normal(rng, r, c).map(|v| v.abs() + 0.2)], (r, c)),
        MatInverse => {
            let a = Tensor::identity(n).zip_map(&normal(rng, n, n), |i, v| i * 2.0 + 0.3 * v);
            (vec![a], (n, n))
        }
        Cholesky => {
            let m = normal(rng, n, n);
            let spd = m.matmul_t(&m).zip_map(&Tensor::identity(n), |a, i| a + i);
            (vec![spd], (n, n))
        }
        TraceExpm => (vec![normal(rng, n, n).scale(0.5)], (1, 1)),
        BinaryConcrete(_) => (vec![normal(rng, r, c), normal(rng, r, c), normal(rng, r, c)], (r, c)),
        Transpose => (vec![normal(rng, r, c)], (c, r)),
    }
}

pub fn all_primitives() -> Vec<PrimitiveKind> {
    use PrimitiveKind::*;
    vec![
        MatMul,
        Add,
        Sub,
        HadamardProduct,
        ScalarScale(-1.7),
        Sigmoid,
        LeakyReLU(0.2),
        Log,
        MatInverse,
        Cholesky,
        TraceExpm,
        MeanReduce,
        BinaryConcrete(0.7),
        Transpose,
        Clamp(-0.5, 0.8),
    ]
}

/// Worst relative error of `kind` over `instances` random inputs.
pub fn primitive_fd_error(kind: PrimitiveKind, instances: usize, seed: u64) -> f64 {
    let mut rng = rng(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..instances {
        let (inputs, (r, c)) = instance(kind, &mut rng);
        let proj = normal(&mut rng, r, c);
        let (_, analytic) = projected(kind, &inputs, &proj);
        let f = |xs: &[Tensor]| projected(kind, xs, &proj).0;
        worst = worst.max(fd_max_rel_err(&f, &inputs, &analytic));
    }
    worst
}

fn disc_tensors(p: &DiscriminatorParams) -> Vec<Tensor> {
    p.layers.iter().flat_map(|(w, b)| [w.clone(), b.clone()]).collect()
}

fn disc_from(ts: &[Tensor]) -> DiscriminatorParams {
    DiscriminatorParams {
        layers: ts.chunks(2).map(|c| (c[0].clone(), c[1].clone())).collect(),
    }
}

/// Hidden pre-activations closer than this to zero make central differences
/// straddle the LeakyReLU kink.
pub const KINK_MARGIN: f64 = 1e-3;

/// True when every hidden pre-activation of `x` is at least `margin` from 0.
pub fn clear_of_kinks(p: &DiscriminatorParams, x: &Tensor, margin: f64) -> bool {
    let mut h = x.clone();
    for (w, b) in &p.layers[..p.layers.len() - 1] {
        let lin = h.matmul(w);
        let pre = Tensor::from_fn(lin.rows(), lin.cols(), |i, j| lin[(i, j)] + b[(0, j)]);
        if pre.data().iter().any(|v| v.abs() < margin) {
            return false;
        }
        h = pre.map(|v| if v > 0.0 { v } else { 0.2 * v });
    }
    true
}

/// Worst relative error of both adversarial losses with respect to every
/// discriminator weight.
pub fn loss_fd_error(instances: usize, seed: u64) -> f64 {
    let mut rng = rng(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..instances {
        let d = rng.gen_range(2..=4);
        let k = rng.gen_range(1..=3);
        let (params, real, fake) = loop {
            let mut params = DiscriminatorParams::init(&mut rng, d);
            for (_, b) in &mut params.layers {
                *b = normal(&mut rng, 1, b.cols()).scale(0.1);
            }
            let real = normal(&mut rng, k, d);
            let fake = normal(&mut rng, k, d);
            if clear_of_kinks(&params, &real, KINK_MARGIN) && clear_of_kinks(&params, &fake, KINK_MARGIN) {
                break (params, real, fake);
            }
        };
        let eval = |ts: &[Tensor], which: usize| -> (f64, Vec<Tensor>) {
            let mut tape = Tape::new();
            let vars = disc_from(ts).register(&mut tape, true);
            let xf = tape.constant(fake.clone());
            let pf = discriminator_forward(&mut tape, &vars, xf).unwrap();
            let loss = if which == 0 {
                let xr = tape.constant(real.clone());
                let pr = discriminator_forward(&mut tape, &vars, xr).unwrap();
                discriminator_loss(&mut tape, pr, pf).unwrap()
            } else {
                generator_adv_loss(&mut tape, pf).unwrap()
            };
            let grads = tape.backward(loss).unwrap();
            (tape.value(loss).item(), vars.flat().iter().map(|&v| grads.get(v)).collect())
        };
        let inputs = disc_tensors(&params);
        for which in 0..2 {
            let (_, analytic) = eval(&inputs, which);
            let f = |xs: &[Tensor]| eval(xs, which).0;
            worst = worst.max(fd_max_rel_err(&f, &inputs, &analytic));
        }
    }
    worst
}

/// Worst relative error of `L_G = -mean log D(G(Z)) + λ h(S̃_B)` with respect
/// to both logit matrices, all noise frozen.
pub fn generator_path_fd_error(instances: usize, seed: u64) -> f64 {
    let mut rng = rng(seed);
    let prior = WeightPrior::default();
    let mut worst: f64 = 0.0;
    for _ in 0..instances {
        let d = rng.gen_range(2..=4);
        let k = rng.gen_range(2..=6);
        let tau = rng.gen_range(0.3..1.0);
        let logits = vec![normal(&mut rng, d, d), normal(&mut rng, d, d)];
        let noise = BatchNoise::draw(&mut rng, &prior, d);
        let z = normal(&mut rng, k, d);
        let disc = DiscriminatorParams::init(&mut rng, d);
        let eval = |ts: &[Tensor]| -> (f64, Vec<Tensor>) {
            let params = GeneratorParams {
                a_b: ts[0].clone(),
                a_sigma: ts[1].clone(),
            };
            let mut tape = Tape::new();
            let gv = params.register(&mut tape, true);
            let dv = disc.register(&mut tape, false);
            let zv = tape.constant(z.clone());
            let out = generate_with_noise(&mut tape, zv, gv, tau, &noise).unwrap();
            let pf = discriminator_forward(&mut tape, &dv, out.x_fake).unwrap();
            let adv = generator_adv_loss(&mut tape, pf).unwrap();
            let h = acyclicity_penalty(&mut tape, out.s_b).unwrap();
            let wh = tape.scale(h, 10.0).unwrap();
            let loss = tape.add(adv, wh).unwrap();
            let grads = tape.backward(loss).unwrap();
            (tape.value(loss).item(), vec![grads.get(gv.a_b), grads.get(gv.a_sigma)])
        };
        let (_, analytic) = eval(&logits);
        let f = |xs: &[Tensor]| eval(xs).0;
        worst = worst.max(fd_max_rel_err(&f, &logits, &analytic));
    }
    worst
}

/// Random ADMG: a DAG over a shuffled order plus independent bidirected edges.
pub fn random_admg(rng: &mut ChaCha8Rng, d: usize, p_dir: f64, p_bi: f64) -> Admg {
    let mut order: Vec<usize> = (0..d).collect();
    order.shuffle(rng);
    let mut g = Admg::empty(d);
    for a in 0..d {
        for b in a + 1..d {
            if rng.gen_bool(p_dir) {
                g.add_directed(order[a], order[b]).unwrap();
            }
            if rng.gen_bool(p_bi) {
                g.add_bidirected(order[a], order[b]).unwrap();
            }
        }
    }
    g
}

#[derive(Clone, Copy)]
enum Step {
    /// `from -> to`
    Forward,
    /// `from <- to`
    Backward,
    Bidirected,
}

fn ancestors_of(g: &Admg, z: &[usize]) -> Vec<bool> {
    let mut anc = vec![false; g.d()];
    let mut stack: Vec<usize> = z.to_vec();
    while let Some(v) = stack.pop() {
        if std::mem::replace(&mut anc[v], true) {
            continue;
        }
        stack.extend((0..g.d()).filter(|&u| g.has_directed(u, v)));
    }
    anc
}

/// m-separation by enumerating every simple mixed path from `i` to `j`.
pub fn brute_m_separated(g: &Admg, i: usize, j: usize, z: &[usize]) -> bool {
    let anc = ancestors_of(g, z);
    let in_z = |v: usize| z.contains(&v);
    let mut visited = vec![false; g.d()];
    visited[i] = true;
    let mut steps = Vec::new();
    let mut nodes = vec![i];
    !connected(g, j, &anc, &in_z, &mut visited, &mut nodes, &mut steps)
}

fn arrow_into_last(step: Step) -> bool {
    matches!(step, Step::Forward | Step::Bidirected)
}

fn arrow_into_first(step: Step) -> bool {
    matches!(step, Step::Backward | Step::Bidirected)
}

fn connected(
    g: &Admg,
    target: usize,
    anc: &[bool],
    in_z: &dyn Fn(usize) -> bool,
    visited: &mut Vec<bool>,
    nodes: &mut Vec<usize>,
    steps: &mut Vec<Step>,
) -> bool {
    let cur = *nodes.last().unwrap();
    for next in 0..g.d() {
        if visited[next] {
            continue;
        }
        let mut options = Vec::new();
        if g.has_directed(cur, next) {
            options.push(Step::Forward);
        }
        if g.has_directed(next, cur) {
            options.push(Step::Backward);
        }
        if g.has_bidirected(cur, next) {
            options.push(Step::Bidirected);
        }
        for step in options {
            if let Some(&prev) = steps.last() {
                let collider = arrow_into_last(prev) && arrow_into_first(step);
                let open = if collider { anc[cur] } else { !in_z(cur) };
                if !open {
                    continue;
                }
            }
            if next == target {
                return true;
            }
            visited[next] = true;
            nodes.push(next);
            steps.push(step);
            let found = connected(g, target, anc, in_z, visited, nodes, steps);
            steps.pop();
            nodes.pop();
            visited[next] = false;
            if found {
                return true;
            }
        }
    }
    false
}

/// Every subset of `items` as a sorted vector.
pub fn subsets(items: &[usize]) -> Vec<Vec<usize>> {
    (0..1usize << items.len())
        .map(|mask| {
            items
                .iter()
                .enumerate()
                .filter(|(b, _)| mask >> b & 1 == 1)
                .map(|(_, &v)| v)
                .collect()
        })
        .collect()
}

/// Kolmogorov-Smirnov statistic of `samples` against U(0, 1).
pub fn ks_uniform(samples: &mut [f64]) -> f64 {
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    samples
        .iter()
        .enumerate()
        .map(|(k, &x)| {
            let lo = k as f64 / n;
            let hi = (k + 1) as f64 / n;
            (x - lo).abs().max((hi - x).abs())
        })
        .fold(0.0, f64::max)
}

/// Kahn-free cycle check by repeated source removal.
pub fn brute_is_acyclic(adj: &[Vec<bool>]) -> bool {
    let n = adj.len();
    let mut alive = vec![true; n];
    for _ in 0..n {
        let Some(v) = (0..n).find(|&v| alive[v] && (0..n).all(|u| !alive[u] || !adj[u][v])) else {
            return false;
        };
        alive[v] = false;
    }
    true
}

pub fn binary_tensor(adj: &[Vec<bool>]) -> Tensor {
    let n = adj.len();
    Tensor::from_fn(n, n, |i, j| if adj[i][j] { 1.0 } else { 0.0 })
}
