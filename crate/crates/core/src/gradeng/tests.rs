use super::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn series_trace_expm(a: &Tensor, terms: usize) -> f64 {
    let n = a.rows();
    let mut power = Tensor::identity(n);
    let mut total = n as f64;
    let mut fact = 1.0;
    for k in 1..=terms {
        power = power.matmul(a);
        fact *= k as f64;
        total += power.trace() / fact;
    }
    total
}

#[test]
fn matmul_by_identity() {
    let mut tape = Tape::new();
    let a = tape.constant(Tensor::from_rows(&[[1.0, 2.0], [3.0, 4.0]]));
    let i = tape.constant(Tensor::identity(2));
    let c = tape.matmul(a, i).unwrap();
    assert_eq!(tape.value(c), &Tensor::from_rows(&[[1.0, 2.0], [3.0, 4.0]]));
}

#[test]
fn matmul_shape_mismatch() {
    let mut tape = Tape::new();
    let a = tape.constant(Tensor::zeros(2, 3));
    let b = tape.constant(Tensor::zeros(2, 3));
    assert!(matches!(tape.matmul(a, b), Err(GradError::ShapeMismatch { .. })));
    assert!(matches!(
        tape.forward(PrimitiveKind::Add, &[a]),
        Err(GradError::ArityMismatch { .. })
    ));
}

#[test]
fn cholesky_identity() {
    let mut tape = Tape::new();
    for d in 1..5 {
        let a = tape.constant(Tensor::identity(d));
        let l = tape.cholesky(a).unwrap();
        assert_eq!(tape.value(l), &Tensor::identity(d));
    }
}

#[test]
fn trace_expm_zero_and_swap() {
    let mut tape = Tape::new();
    let z = tape.constant(Tensor::zeros(4, 4));
    let t = tape.trace_expm(z).unwrap();
    assert_eq!(tape.value(t).item(), 4.0);

    let swap = Tensor::from_rows(&[[0.0, 1.0], [1.0, 0.0]]);
    let oracle = series_trace_expm(&swap, 30);
    assert!((oracle - 2.0 * 1f64.cosh()).abs() < 1e-14);
    let s = tape.constant(swap);
    let t = tape.trace_expm(s).unwrap();
    assert!((tape.value(t).item() - oracle).abs() < 1e-12);
    assert!((tape.value(t).item() - 3.08616).abs() < 1e-5);
}

#[test]
fn trace_expm_matches_series_on_random_inputs() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for d in 1..=6 {
        for _ in 0..10 {
            let a = Tensor::from_fn(d, d, |_, _| rng.gen_range(-2.0..2.0));
            let e = expm(&a).unwrap();
            // 30 terms do not converge once the spectral radius nears 12.
            let oracle = series_trace_expm(&a, 80);
            assert!((e.trace() - oracle).abs() < 1e-8, "d={d} {} vs {oracle}", e.trace());
        }
    }
}

#[test]
fn inverse_of_i_minus_b() {
    let mut tape = Tape::new();
    let i = tape.constant(Tensor::identity(2));
    let b = tape.constant(Tensor::from_rows(&[[0.0, 0.5], [0.0, 0.0]]));
    let m = tape.sub(i, b).unwrap();
    let y = tape.inverse(m).unwrap();
    assert!(tape
        .value(y)
        .max_abs_diff(&Tensor::from_rows(&[[1.0, 0.5], [0.0, 1.0]]))
        < 1e-15);
}

#[test]
fn log_of_nonpositive_is_error() {
    let mut tape = Tape::new();
    let x = tape.constant(Tensor::from_rows(&[[1.0, 0.0]]));
    assert!(matches!(tape.log(x), Err(GradError::NonFiniteValue { op: "log" })));
}

#[test]
fn mean_sigmoid_gradient_at_zero() {
    let mut tape = Tape::new();
    let x = tape.leaf(Tensor::zeros(1, 3));
    let s = tape.sigmoid(x).unwrap();
    let loss = tape.mean(s).unwrap();
    let grads = tape.backward(loss).unwrap();
    let g = grads.get(x);
    for &v in g.data() {
        assert!((v - 1.0 / 12.0).abs() < 1e-15);
    }
    // central differences
    let f = |t: &Tensor| t.data().iter().map(|&v| 1.0 / (1.0 + (-v).exp())).sum::<f64>() / 3.0;
    let h = 1e-4;
    for k in 0..3 {
        let mut p = Tensor::zeros(1, 3);
        p.data_mut()[k] = h;
        let mut m = Tensor::zeros(1, 3);
        m.data_mut()[k] = -h;
        let fd = (f(&p) - f(&m)) / (2.0 * h);
        assert!((fd - g.data()[k]).abs() < 1e-9);
    }
}

#[test]
fn penalty_gradient_vanishes_at_zero() {
    let mut tape = Tape::new();
    let w = tape.leaf(Tensor::zeros(3, 3));
    let sq = tape.hadamard(w, w).unwrap();
    let t = tape.trace_expm(sq).unwrap();
    let g = tape.backward(t).unwrap();
    assert_eq!(g.get(w), Tensor::zeros(3, 3));
}

#[test]
fn unrelated_leaf_gets_zero_gradient() {
    let mut tape = Tape::new();
    let x = tape.leaf(Tensor::from_rows(&[[1.0, 2.0]]));
    let unused = tape.leaf(Tensor::from_rows(&[[5.0], [6.0]]));
    let loss = tape.mean(x).unwrap();
    let g = tape.backward(loss).unwrap();
    assert_eq!(g.get(unused), Tensor::zeros(2, 1));
    assert_eq!(g.get(x), Tensor::from_rows(&[[0.5, 0.5]]));
}

#[test]
fn backward_errors() {
    let foreign = Tape::new().constant(Tensor::scalar(1.0));
    assert!(matches!(Tape::new().backward(foreign), Err(GradError::TapeEmpty)));
    let mut tape = Tape::new();
    let x = tape.leaf(Tensor::zeros(2, 2));
    let y = tape.sigmoid(x).unwrap();
    assert!(matches!(tape.backward(y), Err(GradError::LossNotScalar { shape: (2, 2) })));
}

#[test]
fn binary_concrete_limits() {
    for &a in &[0.3, 2.0, -0.3, -2.0] {
        let v = binary_concrete_sample(a, 1e-4, 0.7, 0.7).unwrap();
        if a > 0.0 {
            assert!(v > 1.0 - 1e-12);
        } else {
            assert!(v < 1e-12);
        }
    }
    assert!(matches!(
        binary_concrete_sample(0.0, 0.0, 0.0, 0.0),
        Err(GradError::NonPositiveTemperature(_))
    ));
    assert!(binary_concrete_sample(0.0, -1.0, 0.0, 0.0).is_err());
}

#[test]
fn binary_concrete_saturates_for_large_logit() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let n = 100_000;
    let hits = (0..n)
        .filter(|_| {
            let g0 = gumbel(&mut rng);
            let g1 = gumbel(&mut rng);
            binary_concrete_sample(10.0, 0.1, g0, g1).unwrap() > 0.99
        })
        .count();
    assert!(hits as f64 / n as f64 >= 0.99, "frequency {}", hits as f64 / n as f64);
}

#[test]
fn binary_concrete_primitive_matches_scalar() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let logits = Tensor::from_fn(3, 3, |_, _| rng.gen_range(-3.0..3.0));
    let g0 = gumbel_tensor(&mut rng, 3, 3);
    let g1 = gumbel_tensor(&mut rng, 3, 3);
    let mut tape = Tape::new();
    let (l, a, b) = (tape.leaf(logits.clone()), tape.constant(g0.clone()), tape.constant(g1.clone()));
    let s = tape.binary_concrete(l, a, b, 0.5).unwrap();
    for k in 0..9 {
        let want = binary_concrete_sample(logits.data()[k], 0.5, g0.data()[k], g1.data()[k]).unwrap();
        assert_eq!(tape.value(s).data()[k], want);
    }
}

#[test]
fn gumbel_draws_are_finite_and_centered() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let n = 200_000;
    let mean = (0..n).map(|_| gumbel(&mut rng)).sum::<f64>() / n as f64;
    // Euler-Mascheroni constant
    assert!((mean - 0.5772156649).abs() < 0.01);
}

#[test]
fn replaying_is_bit_identical() {
    let run = || {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let mut tape = Tape::new();
        let logits = tape.leaf(Tensor::from_fn(3, 3, |_, _| rng.gen_range(-1.0..1.0)));
        let g0 = tape.constant(gumbel_tensor(&mut rng, 3, 3));
        let g1 = tape.constant(gumbel_tensor(&mut rng, 3, 3));
        let s = tape.binary_concrete(logits, g0, g1, 0.7).unwrap();
        let sq = tape.hadamard(s, s).unwrap();
        let t = tape.trace_expm(sq).unwrap();
        tape.backward(t).unwrap().get(logits)
    };
    let a = run();
    let b = run();
    assert!(a.data().iter().zip(b.data()).all(|(x, y)| x.to_bits() == y.to_bits()));
}
