use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use mixae::eval::{accuracy, export_latents, kmeans_baseline, EvalReport, KMeansConfig};
use mixae::model::{load_checkpoint, save_checkpoint};
use mixae::training::{
    train, CheckpointReason, EpochLog, TrainObserver, TrainStatus, EPOCH_LOG_HEADER,
};
use mixae::data::{generate_synthetic, write_csv, SyntheticSpec};
use mixae::{evaluate, Dataset, Mixae, Scalar};

use crate::config::{output_dir, read_toml, DataConfig, Precision, RunConfig};
use crate::error::CliError;

pub struct TrainArgs {
    pub config: PathBuf,
    pub seed: Option<u64>,
    pub epochs: Option<usize>,
    pub k: Option<usize>,
    pub out: Option<PathBuf>,
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn write_file(path: &Path, body: &str) -> Result<(), CliError> {
    fs::write(path, body).map_err(|e| CliError::io(path, e))
}

struct RunObserver<'a, T> {
    dataset: &'a Dataset<T>,
    monitor: bool,
    checkpoints: PathBuf,
    log: BufWriter<fs::File>,
    log_path: PathBuf,
}

impl<T: Scalar> TrainObserver<T> for RunObserver<'_, T> {
    fn monitor(&mut self, model: &Mixae<T>) -> mixae::Result<Option<f64>> {
        if !self.monitor || self.dataset.labels().is_none() {
            return Ok(None);
        }
        Ok(evaluate(model, self.dataset)?.acc)
    }

    fn on_epoch(&mut self, log: &EpochLog, _model: &Mixae<T>) -> mixae::Result<()> {
        let io = |e| mixae::Error::io(&self.log_path, e);
        writeln!(self.log, "{}", log.csv_row()).map_err(io)?;
        self.log.flush().map_err(io)?;
        eprintln!(
            "epoch {:>4}  recon {:.5}  se {:.4}  be {:.4}  alpha {:.3}  beta {:.3}{}",
            log.epoch,
            log.reconstruction,
            log.sample_entropy,
            log.batch_entropy,
            log.alpha,
            log.beta,
            log.acc.map(|a| format!("  acc {a:.4}")).unwrap_or_default()
        );
        Ok(())
    }

    fn on_checkpoint(&mut self, model: &Mixae<T>, epoch: usize, reason: CheckpointReason) -> mixae::Result<()> {
        let name = match reason {
            CheckpointReason::Periodic => format!("epoch-{:04}.ckpt", epoch + 1),
            CheckpointReason::BestAccuracy => "best.ckpt".to_string(),
        };
        save_checkpoint(model, Some(epoch as u64 + 1), &self.checkpoints.join(name))
    }
}

pub fn cmd_train(args: &TrainArgs) -> Result<PathBuf, CliError> {
    let mut cfg = RunConfig::from_file(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.train.seed = seed;
    }
    if let Some(epochs) = args.epochs {
        cfg.train.epochs = epochs;
    }
    if let Some(k) = args.k {
        cfg.model.num_autoencoders = k;
    }
    cfg.validate()?;
    let name = args
        .config
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "run".into());
    let out = output_dir(args.out.as_deref(), cfg.output_dir.as_deref(), &name);
    cfg.output_dir = Some(out.clone());
    match cfg.precision {
        Precision::F32 => run_training::<f32>(&cfg, &out)?,
        Precision::F64 => run_training::<f64>(&cfg, &out)?,
    }
    Ok(out)
}

fn run_training<T: Scalar>(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let dataset: Dataset<T> = cfg.data.load()?;
    let model_cfg = cfg.model.resolve(dataset.dim());
    model_cfg
        .validate()
        .map_err(|e| CliError::Config(format!("model: {e}")))?;
    if cfg.train.batch_size > dataset.len() {
        return Err(CliError::Config(format!(
            "train.batch_size {} exceeds the {} samples available",
            cfg.train.batch_size,
            dataset.len()
        )));
    }
    let checkpoints = out.join("checkpoints");
    create_dir(&checkpoints)?;
    write_file(&out.join("config.toml"), &cfg.to_toml())?;

    let log_path = out.join("epochs.csv");
    let file = fs::File::create(&log_path).map_err(|e| CliError::io(&log_path, e))?;
    let mut log = BufWriter::new(file);
    writeln!(log, "{EPOCH_LOG_HEADER}").map_err(|e| CliError::io(&log_path, e))?;

    let mut model = Mixae::<T>::new(model_cfg, cfg.train.seed)?;
    let mut observer = RunObserver {
        dataset: &dataset,
        monitor: cfg.eval.monitor_accuracy,
        checkpoints: checkpoints.clone(),
        log,
        log_path,
    };
    let outcome = train(&mut model, dataset.features_view(), &cfg.train, &mut observer)?;
    let epochs_done = outcome.logs.len() as u64;
    save_checkpoint(&model, Some(epochs_done), &out.join("final.ckpt"))?;
    if let TrainStatus::Diverged { epoch, detail } = outcome.status {
        return Err(CliError::Diverged { epoch, detail });
    }

    if cfg.eval.final_report {
        let report = evaluate(&model, &dataset)?;
        report.write_files(&out.join("eval"))?;
        eprint!("{}", report.summary());
    }
    if cfg.eval.export_latents {
        export_latents(&model, &dataset, &out.join("latents.csv"))?;
    }
    if cfg.eval.kmeans_baseline {
        write_baseline(&dataset, cfg.model.num_autoencoders, cfg.train.seed, &out.join("baseline"))?;
    }
    Ok(())
}

/// `--data` accepts a TOML file with a `[data]` table (a run config or a
/// saved `config.toml`), a `.csv` table, or an IDX image file paired with
/// `--labels`.
pub struct DataArgs {
    pub data: PathBuf,
    pub labels: Option<PathBuf>,
    pub label_column: Option<mixae::data::LabelColumn>,
    pub normalization: Option<mixae::Normalization>,
}

#[derive(serde::Deserialize)]
struct DataOnly {
    data: DataConfig,
}

impl DataArgs {
    pub fn resolve(&self) -> Result<DataConfig, CliError> {
        use crate::config::DataSource;
        let ext = self.data.extension().and_then(|e| e.to_str()).unwrap_or("");
        let mut cfg = if ext.eq_ignore_ascii_case("toml") {
            let text = fs::read_to_string(&self.data).map_err(|e| CliError::io(&self.data, e))?;
            let value: toml::Table = toml::from_str(&text)
                .map_err(|e| CliError::Config(format!("{}: {}", self.data.display(), e.message().trim())))?;
            let only: DataOnly = value
                .try_into()
                .map_err(|e: toml::de::Error| CliError::Config(format!("{}: {}", self.data.display(), e.message().trim())))?;
            let mut c = only.data;
            if let Some(base) = self.data.parent() {
                c.rebase(base);
            }
            c
        } else if ext.eq_ignore_ascii_case("csv") {
            DataConfig {
                source: DataSource::Csv {
                    path: self.data.clone(),
                    label: self.label_column.clone().unwrap_or_default(),
                },
                normalization: mixae::Normalization::None,
            }
        } else {
            let labels = self
                .labels
                .clone()
                .ok_or_else(|| CliError::Config("IDX image data needs --labels".into()))?;
            DataConfig {
                source: DataSource::Idx {
                    images: self.data.clone(),
                    labels,
                },
                normalization: mixae::Normalization::None,
            }
        };
        if let Some(n) = self.normalization {
            cfg.normalization = n;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

pub fn cmd_eval(checkpoint: &Path, data: &DataArgs, out: &Path) -> Result<EvalReport, CliError> {
    let data = data.resolve()?;
    if !checkpoint.is_file() {
        return Err(CliError::Config(format!("no such checkpoint `{}`", checkpoint.display())));
    }
    let ckpt = load_checkpoint::<f64>(checkpoint)?;
    let dataset: Dataset<f64> = data.load()?;
    if dataset.dim() != ckpt.model.config().input_dim {
        return Err(CliError::Config(format!(
            "data has {} features but the checkpoint expects {}",
            dataset.dim(),
            ckpt.model.config().input_dim
        )));
    }
    let report = evaluate(&ckpt.model, &dataset)?;
    report.write_files(out)?;
    export_latents(&ckpt.model, &dataset, &out.join("latents.csv"))?;
    Ok(report)
}

pub fn cmd_generate(spec: &Path, out: &Path) -> Result<(), CliError> {
    let spec: SyntheticSpec = read_toml(spec)?;
    spec.validate().map_err(|e| CliError::Config(e.to_string()))?;
    let dataset = generate_synthetic::<f64>(&spec)?;
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    write_csv(&dataset, out)?;
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct BaselineReport {
    pub k: usize,
    pub samples: usize,
    pub acc: Option<f64>,
    pub inertia: f64,
    pub iterations: usize,
    pub cluster_sizes: Vec<usize>,
    pub matching: Option<Vec<Option<usize>>>,
}

fn write_baseline<T: Scalar>(dataset: &Dataset<T>, k: usize, seed: u64, out: &Path) -> Result<BaselineReport, CliError> {
    let (result, acc) = kmeans_baseline(dataset, k, seed, KMeansConfig::default())
        .map_err(|e| match e {
            mixae::Error::Config(m) => CliError::Config(m),
            other => other.into(),
        })?;
    let mut sizes = vec![0; k];
    for &c in &result.labels {
        sizes[c] += 1;
    }
    let matching = match dataset.labels() {
        Some(l) => Some(accuracy(&result.labels, l, k, dataset.class_count)?.1),
        None => None,
    };
    let report = BaselineReport {
        k,
        samples: dataset.len(),
        acc,
        inertia: result.inertia,
        iterations: result.iterations,
        cluster_sizes: sizes,
        matching,
    };
    create_dir(out)?;
    write_file(
        &out.join("baseline.json"),
        &serde_json::to_string_pretty(&report).expect("report serializes"),
    )?;
    let mut labels = String::from("pred");
    if dataset.labels().is_some() {
        labels.push_str(",truth");
    }
    labels.push('\n');
    for (i, c) in result.labels.iter().enumerate() {
        labels.push_str(&c.to_string());
        if let Some(l) = dataset.labels() {
            labels.push(',');
            labels.push_str(&l[i].to_string());
        }
        labels.push('\n');
    }
    write_file(&out.join("baseline_labels.csv"), &labels)?;
    Ok(report)
}

pub fn cmd_baseline(data: &DataArgs, k: usize, seed: u64, out: &Path) -> Result<BaselineReport, CliError> {
    let data = data.resolve()?;
    let dataset: Dataset<f64> = data.load()?;
    write_baseline(&dataset, k, seed, out)
}
