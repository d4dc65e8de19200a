//! End-to-end acceptance checks. Runs without the libtest harness so that
//! every criterion prints its own PASS/FAIL line; exits non-zero if any
//! criterion fails.

mod common;

use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use common::{batch, brute_force_hits, full_objective_check, tiny_config};
use mixae::data::{generate_synthetic, load_idx, SampleCounts, SyntheticKind, SyntheticSpec};
use mixae::eval::{accuracy, entropy_report, kmeans_baseline, one_hot, KMeansConfig};
use mixae::model::{Mixae, ModelConfig};
use mixae::numerics::{GradCheckConfig, SeededRng};
use mixae::objective::{batch_entropy, entropy, LossWeights, ObjectiveOptions, ReconstructionKind};
use mixae::training::{train, write_epoch_log_csv, NoObserver, TrainConfig};
use mixae::{evaluate, Dataset, EvalReport, Normalization, Scalar};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

// Gaussian blobs: 3 × 1000 points in 10 dimensions.

fn blobs() -> Dataset<f64> {
    let spec = SyntheticSpec {
        kind: SyntheticKind::GaussianBlobs,
        clusters: 3,
        samples_per_cluster: SampleCounts::Uniform(1000),
        ambient_dim: 10,
        noise: 1.0,
        seed: 1,
        separation: None,
    };
    let mut ds = generate_synthetic(&spec).unwrap();
    ds.normalize(Normalization::ZScore);
    ds
}

fn blob_model(k: usize) -> ModelConfig {
    ModelConfig {
        encoder_hidden: vec![64, 32],
        reconstruction_loss: ReconstructionKind::Mse,
        ..ModelConfig::new(10, 2, k)
    }
}

struct Run {
    log_csv: Vec<u8>,
    report: EvalReport,
    elapsed: Duration,
}

fn train_run<T: Scalar>(ds: &Dataset<T>, model: ModelConfig, cfg: &TrainConfig) -> Run {
    let started = Instant::now();
    let mut m = Mixae::<T>::new(model, cfg.seed).unwrap();
    let out = train(&mut m, ds.features_view(), cfg, &mut NoObserver).unwrap();
    let mut log_csv = Vec::new();
    write_epoch_log_csv(&mut log_csv, &out.logs).unwrap();
    let report = evaluate(&m, ds).unwrap();
    Run {
        log_csv,
        report,
        elapsed: started.elapsed(),
    }
}

fn blob_config(seed: u64, epochs: usize, fixed_beta: Option<f64>) -> TrainConfig {
    let mut cfg = TrainConfig {
        epochs,
        batch_size: 128,
        seed,
        ..Default::default()
    };
    cfg.schedule.fixed_beta = fixed_beta;
    cfg
}

fn blob_run_c4() -> &'static Run {
    static RUN: OnceLock<Run> = OnceLock::new();
    RUN.get_or_init(|| train_run(&blobs(), blob_model(3), &blob_config(0, 50, None)))
}

fn largest_share(r: &EvalReport) -> f64 {
    *r.cluster_sizes.iter().max().unwrap() as f64 / r.samples as f64
}

fn c1_gradient_fidelity() -> Verdict {
    let started = Instant::now();
    let model = Mixae::<f64>::new(tiny_config(6, 2, 2, ReconstructionKind::Mse), 11).unwrap();
    let x = batch(4, 6, 12, false);
    let rep = full_objective_check(
        &model,
        &x,
        LossWeights::new(0.9, 1.1).unwrap(),
        ObjectiveOptions::default(),
        GradCheckConfig::new(1e-5),
    );
    let secs = started.elapsed().as_secs_f64();
    verdict(
        rep.max_relative_error < 1e-5 && secs < 10.0,
        format!(
            "max relative error {:.2e} over {} parameters (< 1e-5), {secs:.2}s (< 10s)",
            rep.max_relative_error,
            rep.analytic.len()
        ),
    )
}

fn c2_metric_oracle() -> Verdict {
    let started = Instant::now();
    let mut rng = SeededRng::new(2024);
    let mut mismatches = 0;
    for _ in 0..200 {
        let k_true = 2 + rng.below(5);
        let k_pred = 2 + rng.below(5);
        let n = 1 + rng.below(100);
        let truth: Vec<usize> = (0..n).map(|_| rng.below(k_true)).collect();
        let pred: Vec<usize> = (0..n).map(|_| rng.below(k_pred)).collect();
        let acc = accuracy(&pred, &truth, k_pred, k_true).unwrap().0;
        if acc != brute_force_hits(&pred, &truth, k_pred, k_true) as f64 / n as f64 {
            mismatches += 1;
        }
    }
    let secs = started.elapsed().as_secs_f64();
    verdict(
        mismatches == 0 && secs < 5.0,
        format!("{mismatches} mismatches in 200 instances (exact), {secs:.3}s (< 5s)"),
    )
}

fn c3_entropy_arithmetic() -> Verdict {
    let uniform = |k: usize| entropy(&vec![1.0 / k as f64; k]);
    let mut ok = true;
    let mut parts = Vec::new();
    for (k, want, reported) in [(10, 2.303, &[2.30, 2.31][..]), (4, 1.386, &[1.39][..]), (6, 1.792, &[1.79][..])] {
        let v = uniform(k);
        let rounded = (v * 1000.0).round() / 1000.0;
        let reported_ok = reported.iter().any(|p| (v - p).abs() <= 0.01);
        ok &= rounded == want && reported_ok;
        parts.push(format!("ln {k} = {rounded:.3}"));
    }
    // Reuters-like imbalance: 41% / 30% / 20% / 9% as one-hot assignments.
    let labels: Vec<usize> = [41, 30, 20, 9]
        .iter()
        .enumerate()
        .flat_map(|(c, &n)| std::iter::repeat_n(c, n))
        .collect();
    let p = one_hot(&labels, 4).unwrap();
    let be = batch_entropy(&p).unwrap();
    let (be_report, _) = entropy_report(&p).unwrap();
    ok &= (be - 1.26).abs() <= 0.02 && (be - be_report).abs() < 1e-12;
    parts.push(format!("BE(0.41, 0.30, 0.20, 0.09) = {be:.4} (1.26 +/- 0.02)"));
    verdict(ok, parts.join(", "))
}

fn c4_blobs_end_to_end() -> Verdict {
    let run = blob_run_c4();
    let acc = run.report.acc.unwrap();
    let be = run.report.batch_entropy_global;
    let secs = run.elapsed.as_secs_f64();
    verdict(
        acc >= 0.90 && (be - 3f64.ln()).abs() <= 0.05 && secs < 120.0,
        format!("ACC {acc:.4} (>= 0.90), BE {be:.4} (ln 3 +/- 0.05), {secs:.1}s (< 120s)"),
    )
}

/// Three bowed, mutually crossing sides of a triangle, lifted to 10 dimensions.
fn curves() -> Dataset<f64> {
    let spec = SyntheticSpec {
        kind: SyntheticKind::Curves,
        clusters: 3,
        samples_per_cluster: SampleCounts::Uniform(1000),
        ambient_dim: 10,
        noise: 0.05,
        seed: 1,
        separation: None,
    };
    let mut ds = generate_synthetic(&spec).unwrap();
    ds.normalize(Normalization::ZScore);
    ds
}

fn c5_curves() -> Verdict {
    let started = Instant::now();
    let ds = curves();
    let (_, km) = kmeans_baseline(&ds, 3, 0, KMeansConfig::default()).unwrap();
    let km = km.unwrap();
    let model = ModelConfig {
        encoder_hidden: vec![64, 32],
        reconstruction_loss: ReconstructionKind::Mse,
        ..ModelConfig::new(10, 1, 3)
    };
    let run = train_run(&ds, model, &blob_config(0, 50, None));
    let acc = run.report.acc.unwrap();
    let secs = started.elapsed().as_secs_f64();
    verdict(
        km <= 0.75 && acc >= km + 0.10 && secs < 300.0,
        format!("K-means ACC {km:.4} (<= 0.75), MIXAE ACC {acc:.4} (>= K-means + 0.10), {secs:.1}s (< 300s)"),
    )
}

fn c6_mnist() -> Verdict {
    let started = Instant::now();
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/mnist10k");
    let ds: Dataset<f32> = load_idx(&root.join("images-idx3-ubyte.gz"), &root.join("labels-idx1-ubyte.gz")).unwrap();
    let (_, km) = kmeans_baseline(&ds, 10, 0, KMeansConfig::default()).unwrap();
    let km = km.unwrap();
    let model = ModelConfig::new(784, 8, 10);
    let cfg = TrainConfig {
        epochs: 100,
        ..Default::default()
    };
    let run = train_run(&ds, model, &cfg);
    let acc = run.report.acc.unwrap();
    let se = run.report.mean_sample_entropy;
    let be = run.report.batch_entropy_global;
    let mins = started.elapsed().as_secs_f64() / 60.0;
    verdict(
        acc >= km + 0.10 && se < 0.3 && (be - 10f64.ln()).abs() <= 0.1 && mins <= 30.0,
        format!(
            "K-means ACC {km:.4}, MIXAE ACC {acc:.4} (>= K-means + 0.10), SE {se:.4} (< 0.3), BE {be:.4} (ln 10 +/- 0.1), {mins:.1} min (<= 30)"
        ),
    )
}

fn c7_collapse() -> Verdict {
    let ds = blobs();
    let mut without = Vec::new();
    let mut with = Vec::new();
    for seed in 0..5 {
        without.push(largest_share(&train_run(&ds, blob_model(3), &blob_config(seed, 50, Some(0.0))).report));
        with.push(largest_share(&train_run(&ds, blob_model(3), &blob_config(seed, 50, None)).report));
    }
    let fmt = |v: &[f64]| v.iter().map(|s| format!("{s:.2}")).collect::<Vec<_>>().join(" ");
    verdict(
        without.iter().any(|&s| s > 0.9) && with.iter().all(|&s| s <= 0.9),
        format!(
            "largest cluster share with beta = 0: [{}] (some > 0.90); scheduled beta: [{}] (all <= 0.90)",
            fmt(&without),
            fmt(&with)
        ),
    )
}

fn c8_determinism() -> Verdict {
    let first = blob_run_c4();
    let second = train_run(&blobs(), blob_model(3), &blob_config(0, 50, None));
    let same = first.log_csv == second.log_csv;
    verdict(
        same,
        format!("two seeded runs: epoch logs of {} bytes, byte-identical: {same}", first.log_csv.len()),
    )
}

fn c9_varying_k() -> Verdict {
    let run = train_run(&blobs(), blob_model(6), &blob_config(0, 50, None));
    let r = &run.report;
    let (acc, purity) = (r.acc.unwrap(), r.purity.unwrap());
    let diag: Vec<f64> = (0..6).map(|i| r.covariance[i][i]).collect();
    let (lo, hi) = diag.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let uneven = hi > 0.0 && (hi - lo) / hi >= 0.25;
    verdict(
        purity >= acc && purity >= 0.90 && uneven,
        format!(
            "purity {purity:.4} (>= ACC {acc:.4}, >= 0.90), cluster sizes {:?}, covariance diagonal spread {:.2} (>= 0.25)",
            r.cluster_sizes,
            if hi > 0.0 { (hi - lo) / hi } else { 0.0 }
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Verdict); 9] = [
        ("1 gradient fidelity", c1_gradient_fidelity),
        ("2 metric oracle", c2_metric_oracle),
        ("3 entropy arithmetic", c3_entropy_arithmetic),
        ("4 synthetic blobs end-to-end", c4_blobs_end_to_end),
        ("5 nonlinear-manifold advantage", c5_curves),
        ("6 MNIST desk-scale", c6_mnist),
        ("7 collapse prevention", c7_collapse),
        ("8 determinism", c8_determinism),
        ("9 varying K", c9_varying_k),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, check) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let v = panic::catch_unwind(AssertUnwindSafe(check))
            .unwrap_or_else(|e| {
                let msg = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                verdict(false, format!("panicked: {msg}"))
            });
        println!("{} criterion {name}: {}", if v.pass { "PASS" } else { "FAIL" }, v.detail);
        if !v.pass {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("acceptance: {failed} criterion(s) failed");
        std::process::exit(1);
    }
    println!("acceptance: all criteria passed");
}
