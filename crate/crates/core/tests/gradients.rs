mod common;

use common::{batch, full_objective_check, tiny_config};
use mixae::model::Mixae;
use mixae::numerics::GradCheckConfig;
use mixae::objective::{LossWeights, ObjectiveOptions, ReconstructionKind};

#[test]
fn full_objective_mse() {
    for seed in 0..3 {
        let model = Mixae::<f64>::new(tiny_config(6, 2, 2, ReconstructionKind::Mse), seed).unwrap();
        let x = batch(4, 6, 100 + seed, false);
        let rep = full_objective_check(
            &model,
            &x,
            LossWeights::new(0.7, 1.3).unwrap(),
            ObjectiveOptions::default(),
            GradCheckConfig::new(1e-5),
        );
        assert!(rep.passed, "seed {seed}: {rep:?}");
    }
}

#[test]
fn full_objective_bce_three_autoencoders() {
    let model = Mixae::<f64>::new(tiny_config(5, 2, 3, ReconstructionKind::Bce), 7).unwrap();
    let x = batch(6, 5, 8, true);
    let rep = full_objective_check(
        &model,
        &x,
        LossWeights::new(2.0, 0.5).unwrap(),
        ObjectiveOptions::default(),
        GradCheckConfig::new(1e-5),
    );
    assert!(rep.passed, "{rep:?}");
}

#[test]
fn detached_assignments_drop_the_reconstruction_path() {
    // With α = β = 0 and the switch on, the assignment network gets no gradient.
    let model = Mixae::<f64>::new(tiny_config(6, 2, 2, ReconstructionKind::Mse), 3).unwrap();
    let x = batch(4, 6, 9, false);
    let options = ObjectiveOptions {
        detach_assignments_from_reconstruction: true,
    };
    let out = model.forward(&x).unwrap();
    let inputs = mixae::objective::ObjectiveInputs {
        x: &x,
        reconstructions: &out.reconstructions,
        assignments: &out.assignments,
    };
    let grads = mixae::objective::total_loss(inputs, ReconstructionKind::Mse, LossWeights::new(0.0, 0.0).unwrap(), options)
        .unwrap()
        .1;
    let g = model.backward(&out, &grads).unwrap();
    for layer in &g.man {
        assert!(layer.weight.data().iter().all(|&v| v == 0.0));
        assert!(layer.bias.data().iter().all(|&v| v == 0.0));
    }
}
