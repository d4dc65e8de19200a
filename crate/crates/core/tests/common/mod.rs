#![allow(dead_code)]

use mixae::model::{Mixae, ModelConfig};
use mixae::numerics::{grad_check, Activation, GradCheckConfig, GradCheckReport, SeededRng, Tensor};
use mixae::objective::{total_loss, LossWeights, ObjectiveInputs, ObjectiveOptions, ReconstructionKind};

pub fn tiny_config(n: usize, d: usize, k: usize, kind: ReconstructionKind) -> ModelConfig {
    ModelConfig {
        encoder_hidden: vec![5, 3],
        man_hidden: vec![4],
        activation: Activation::Tanh,
        reconstruction_loss: kind,
        ..ModelConfig::new(n, d, k)
    }
}

pub fn batch(rows: usize, cols: usize, seed: u64, unit: bool) -> Tensor<f64> {
    let mut rng = SeededRng::new(seed);
    let data = (0..rows * cols)
        .map(|_| if unit { rng.uniform(0.05, 0.95) } else { rng.normal() })
        .collect();
    Tensor::new(vec![rows, cols], data).unwrap()
}

/// Finite-difference check of the full objective with respect to every
/// parameter of the model.
pub fn full_objective_check(
    model: &Mixae<f64>,
    x: &Tensor<f64>,
    weights: LossWeights,
    options: ObjectiveOptions,
    cfg: GradCheckConfig,
) -> GradCheckReport {
    let kind = model.config().reconstruction_loss;
    let point = Tensor::vector(model.params().flatten());
    let with = |flat: &Tensor<f64>| {
        let mut m = model.clone();
        m.params_mut().assign_flat(flat.data()).unwrap();
        m
    };
    let f = |flat: &Tensor<f64>| {
        let m = with(flat);
        let out = m.infer(x)?;
        let inputs = ObjectiveInputs {
            x,
            reconstructions: &out.reconstructions,
            assignments: &out.assignments,
        };
        Ok(total_loss(inputs, kind, weights, options)?.0.total)
    };
    let g = |flat: &Tensor<f64>| {
        let m = with(flat);
        let out = m.forward(x)?;
        let inputs = ObjectiveInputs {
            x,
            reconstructions: &out.reconstructions,
            assignments: &out.assignments,
        };
        let grads = total_loss(inputs, kind, weights, options)?.1;
        Ok(Tensor::vector(m.backward(&out, &grads)?.flatten()))
    };
    grad_check(f, g, &point, cfg).unwrap()
}

/// Best matched count over every injective cluster → label map, by
/// enumerating permutations of the zero-padded square problem.
pub fn brute_force_hits(pred: &[usize], truth: &[usize], k_pred: usize, k_true: usize) -> usize {
    let m = k_pred.max(k_true);
    let mut counts = vec![vec![0usize; m]; m];
    for (&p, &t) in pred.iter().zip(truth) {
        counts[p][t] += 1;
    }
    let mut perm: Vec<usize> = (0..m).collect();
    let mut best = 0;
    permute(&mut perm, 0, &mut |sigma| {
        best = best.max((0..m).map(|c| counts[c][sigma[c]]).sum());
    });
    best
}

fn permute(v: &mut [usize], at: usize, visit: &mut impl FnMut(&[usize])) {
    if at == v.len() {
        visit(v);
        return;
    }
    for i in at..v.len() {
        v.swap(at, i);
        permute(v, at + 1, visit);
        v.swap(at, i);
    }
}
