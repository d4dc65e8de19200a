use mixae::numerics::{
    affine_backward, affine_forward, affine_param_grads, grad_check, softmax_backward, softmax_forward, Activation,
    GradCheckConfig, GradCheckReport, LayerParams, SeededRng, Tensor,
};
use mixae::Scalar;
use proptest::prelude::*;

fn random<T: Scalar>(rng: &mut SeededRng, rows: usize, cols: usize) -> Tensor<T> {
    Tensor::new(vec![rows, cols], (0..rows * cols).map(|_| rng.normal()).collect()).unwrap()
}

/// Reduced in f64 so that only the primitive itself runs at `T` precision.
fn dot<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>) -> f64 {
    a.data().iter().zip(b.data()).map(|(&u, &v)| u.as_f64() * v.as_f64()).sum()
}

/// Every primitive checked at one random point, each through the scalar
/// probe `Σ c ⊙ primitive(·)`.
fn primitive_reports<T: Scalar>(seed: u64, cfg: GradCheckConfig) -> Vec<(&'static str, GradCheckReport)> {
    let mut rng = SeededRng::new(seed);
    let (b, fan_in, fan_out) = (3, 4, 5);
    let params = LayerParams::<T>::glorot(fan_in, fan_out, &mut rng);
    let x: Tensor<T> = random(&mut rng, b, fan_in);
    let c: Tensor<T> = random(&mut rng, b, fan_out);
    let mut out = Vec::new();

    let rep = grad_check(
        |x: &Tensor<T>| Ok(dot(&affine_forward(x, &params)?, &c)),
        |x: &Tensor<T>| Ok(affine_backward(&c, x, &params)?.0),
        &x,
        cfg,
    )
    .unwrap();
    out.push(("affine/input", rep));

    let with_weight = |w: &Tensor<T>| LayerParams::new(w.clone(), params.bias.clone()).unwrap();
    let rep = grad_check(
        |w: &Tensor<T>| Ok(dot(&affine_forward(&x, &with_weight(w))?, &c)),
        |w: &Tensor<T>| Ok(affine_param_grads(&c, &x, &with_weight(w))?.weight),
        &params.weight,
        cfg,
    )
    .unwrap();
    out.push(("affine/weight", rep));

    let bias: Tensor<T> = Tensor::vector((0..fan_out).map(|_| rng.normal()).collect());
    let with_bias = |v: &Tensor<T>| LayerParams::new(params.weight.clone(), v.clone()).unwrap();
    let rep = grad_check(
        |v: &Tensor<T>| Ok(dot(&affine_forward(&x, &with_bias(v))?, &c)),
        |v: &Tensor<T>| Ok(affine_param_grads(&c, &x, &with_bias(v))?.bias),
        &bias,
        cfg,
    )
    .unwrap();
    out.push(("affine/bias", rep));

    // Keep relu inputs off the kink.
    let pre: Tensor<T> = random::<T>(&mut rng, b, fan_out).map(|v| if v.abs() < T::of(0.05) { v + T::of(0.1) } else { v });
    for (name, act) in [
        ("linear", Activation::Linear),
        ("relu", Activation::Relu),
        ("tanh", Activation::Tanh),
        ("sigmoid", Activation::Sigmoid),
    ] {
        let rep = grad_check(
            |x: &Tensor<T>| Ok(dot(&act.forward(x), &c)),
            |x: &Tensor<T>| act.backward(&act.forward(x), &c),
            &pre,
            cfg,
        )
        .unwrap();
        out.push((name, rep));
    }

    let logits: Tensor<T> = random(&mut rng, b, fan_out);
    let rep = grad_check(
        |l: &Tensor<T>| Ok(dot(&softmax_forward(l)?, &c)),
        |l: &Tensor<T>| softmax_backward(&softmax_forward(l)?, &c),
        &logits,
        cfg,
    )
    .unwrap();
    out.push(("softmax", rep));
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn primitives_pass_gradcheck_f64(seed in any::<u64>()) {
        for (name, rep) in primitive_reports::<f64>(seed, GradCheckConfig::new(1e-6)) {
            prop_assert!(rep.passed, "{name}: {}", rep.max_relative_error);
        }
    }

    /// At f32 a 1e-4 step leaves differences at the rounding floor (ε/h ≈ 1e-3),
    /// so the step sits near ε^(1/3) instead.
    #[test]
    fn primitives_pass_gradcheck_f32(seed in any::<u64>()) {
        let cfg = GradCheckConfig::new(1e-3).with_step(1e-2).with_floor(1e-2);
        for (name, rep) in primitive_reports::<f32>(seed, cfg) {
            prop_assert!(rep.passed, "{name}: {}", rep.max_relative_error);
        }
    }

    #[test]
    fn softmax_rows_on_simplex(
        rows in 1usize..6,
        cols in 1usize..8,
        scale in prop_oneof![Just(1.0f64), Just(30.0), Just(1e3)],
        seed in any::<u64>(),
    ) {
        let mut rng = SeededRng::new(seed);
        let logits = random::<f64>(&mut rng, rows, cols).map(|v| v * scale);
        let p = softmax_forward(&logits).unwrap();
        for r in p.row_iter() {
            let s: f64 = r.iter().sum();
            prop_assert!((s - 1.0).abs() < 1e-6);
            prop_assert!(r.iter().all(|&v| (0.0..=1.0).contains(&v)));
        }
        let l32 = Tensor::new(logits.shape().to_vec(), logits.data().iter().map(|&v| v as f32).collect()).unwrap();
        let p32 = softmax_forward(&l32).unwrap();
        for r in p32.row_iter() {
            let s: f64 = r.iter().map(|&v| v as f64).sum();
            prop_assert!((s - 1.0).abs() < 1e-6);
            prop_assert!(r.iter().all(|&v| (0.0..=1.0).contains(&v)));
        }
    }

    #[test]
    fn affine_batch_equals_rowwise(rows in 1usize..20, fan_in in 1usize..12, fan_out in 1usize..12, seed in any::<u64>()) {
        let mut rng = SeededRng::new(seed);
        let params = LayerParams::<f64>::glorot(fan_in, fan_out, &mut rng);
        let x: Tensor<f64> = random(&mut rng, rows, fan_in);
        let batch = affine_forward(&x, &params).unwrap();
        for i in 0..rows {
            let single = affine_forward(&x.select_rows(&[i]), &params).unwrap();
            prop_assert_eq!(single.row(0), batch.row(i));
        }
    }
}

