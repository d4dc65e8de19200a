mod common;

use common::{batch, tiny_config};
use mixae::model::{read_checkpoint, write_checkpoint, Mixae, ModelConfig};
use mixae::numerics::{Activation, SeededRng, Tensor};
use mixae::objective::{total_loss, LossWeights, ObjectiveInputs, ObjectiveOptions, ReconstructionKind};
use proptest::prelude::*;

fn objective(model: &Mixae<f64>, x: &Tensor<f64>) -> f64 {
    let out = model.infer(x).unwrap();
    let inputs = ObjectiveInputs {
        x,
        reconstructions: &out.reconstructions,
        assignments: &out.assignments,
    };
    total_loss(inputs, model.config().reconstruction_loss, LossWeights::new(0.8, 1.7).unwrap(), ObjectiveOptions::default())
        .unwrap()
        .0
        .total
}

/// Relabels the stacks so that new stack `j` is old stack `perm[j]`, moving
/// the matching MAN input block and output unit along with it.
fn permuted(model: &Mixae<f64>, perm: &[usize]) -> Mixae<f64> {
    let cfg = model.config().clone();
    let d = cfg.latent_dim;
    let mut params = model.params().clone();
    let old = model.params();
    for (j, &src) in perm.iter().enumerate() {
        params.autoencoders[j] = old.autoencoders[src].clone();
    }
    let first = &old.man[0].weight;
    let w = &mut params.man[0].weight;
    for r in 0..first.rows() {
        for (j, &src) in perm.iter().enumerate() {
            for c in 0..d {
                w.set(r, j * d + c, first.get(r, src * d + c));
            }
        }
    }
    let last = old.man.len() - 1;
    let (lw, lb) = (&old.man[last].weight, &old.man[last].bias);
    for (j, &src) in perm.iter().enumerate() {
        for c in 0..lw.cols() {
            params.man[last].weight.set(j, c, lw.get(src, c));
        }
        params.man[last].bias.data_mut()[j] = lb.data()[src];
    }
    Mixae::from_parts(cfg, params).unwrap()
}

fn activation() -> impl Strategy<Value = Activation> {
    prop_oneof![Just(Activation::Relu), Just(Activation::Tanh), Just(Activation::Sigmoid)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn assignments_on_simplex(
        k in 2usize..6,
        extra in 1usize..8,
        d in 1usize..4,
        act in activation(),
        scale in prop_oneof![Just(1.0f64), Just(50.0)],
        seed in any::<u64>(),
    ) {
        let n = d + extra;
        let cfg = ModelConfig { activation: act, ..tiny_config(n, d, k, ReconstructionKind::Mse) };
        let model = Mixae::<f64>::new(cfg, seed).unwrap();
        let x = batch(7, n, seed ^ 1, false).map(|v| v * scale);
        let p = model.infer(&x).unwrap().assignments;
        prop_assert_eq!(p.shape(), &[7, k]);
        for r in p.row_iter() {
            prop_assert!((r.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!(r.iter().all(|&v| (0.0..=1.0).contains(&v)));
        }
    }

    #[test]
    fn stack_permutation_is_equivariant(k in 2usize..5, seed in any::<u64>()) {
        let model = Mixae::<f64>::new(tiny_config(5, 2, k, ReconstructionKind::Mse), seed).unwrap();
        let perm = SeededRng::new(seed).derive(7).permutation(k);
        let other = permuted(&model, &perm);
        let x = batch(6, 5, seed ^ 3, false);
        let p = model.infer(&x).unwrap().assignments;
        let q = other.infer(&x).unwrap().assignments;
        for i in 0..6 {
            for (j, &src) in perm.iter().enumerate() {
                prop_assert!((q.get(i, j) - p.get(i, src)).abs() < 1e-12);
            }
        }
        prop_assert!((objective(&model, &x) - objective(&other, &x)).abs() < 1e-10);
    }

    #[test]
    fn checkpoint_roundtrip_is_bit_exact(k in 2usize..5, extra in 1usize..8, d in 1usize..4, seed in any::<u64>(), epoch in proptest::option::of(any::<u64>())) {
        let model = Mixae::<f64>::new(tiny_config(d + extra, d, k, ReconstructionKind::Bce), seed).unwrap();
        let bytes = write_checkpoint(&model, epoch).unwrap();
        let back = read_checkpoint::<f64>(&bytes).unwrap();
        prop_assert_eq!(back.epoch, epoch);
        prop_assert_eq!(back.model.config(), model.config());
        let bits = |m: &Mixae<f64>| m.params().flatten().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        prop_assert_eq!(bits(&back.model), bits(&model));
    }
}
