use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use mixae::data::{generate_synthetic, load_csv, load_idx, LabelColumn, SyntheticSpec};
use mixae::numerics::Activation;
use mixae::objective::ReconstructionKind;
use mixae::training::TrainConfig;
use mixae::{Dataset, ModelConfig, Normalization, Scalar};

use crate::error::CliError;

pub const OUTPUT_ROOT_ENV: &str = "MIXAE_OUTPUT_ROOT";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    F32,
    #[default]
    F64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "lowercase")]
pub enum DataSource {
    Synthetic { spec: SyntheticSpec },
    Idx { images: PathBuf, labels: PathBuf },
    Csv {
        path: PathBuf,
        #[serde(default)]
        label: LabelColumn,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataConfig {
    #[serde(flatten)]
    pub source: DataSource,
    #[serde(default)]
    pub normalization: Normalization,
}

impl DataConfig {
    /// Relative paths are taken relative to `base`.
    pub fn rebase(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        match &mut self.source {
            DataSource::Synthetic { .. } => {}
            DataSource::Idx { images, labels } => {
                fix(images);
                fix(labels);
            }
            DataSource::Csv { path, .. } => fix(path),
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let exists = |p: &Path, what: &str| {
            if p.is_file() {
                Ok(())
            } else {
                Err(CliError::Config(format!("data.{what}: no such file `{}`", p.display())))
            }
        };
        match &self.source {
            DataSource::Synthetic { spec } => spec.validate().map_err(|e| CliError::Config(format!("data.spec: {e}"))),
            DataSource::Idx { images, labels } => {
                exists(images, "images")?;
                exists(labels, "labels")
            }
            DataSource::Csv { path, .. } => exists(path, "path"),
        }
    }

    pub fn load<T: Scalar>(&self) -> Result<Dataset<T>, CliError> {
        let mut ds = match &self.source {
            DataSource::Synthetic { spec } => generate_synthetic(spec)?,
            DataSource::Idx { images, labels } => load_idx(images, labels)?,
            DataSource::Csv { path, label } => load_csv(path, label, Normalization::None)?,
        };
        ds.normalize(self.normalization);
        Ok(ds)
    }
}

/// Model section of a run config; the input width comes from the data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub latent_dim: usize,
    pub num_autoencoders: usize,
    #[serde(default)]
    pub encoder_hidden: Option<Vec<usize>>,
    #[serde(default)]
    pub man_hidden: Option<Vec<usize>>,
    #[serde(default)]
    pub activation: Option<Activation>,
    #[serde(default)]
    pub reconstruction_loss: Option<ReconstructionKind>,
}

impl ModelSection {
    pub fn resolve(&self, input_dim: usize) -> ModelConfig {
        let base = ModelConfig::new(input_dim, self.latent_dim, self.num_autoencoders);
        ModelConfig {
            encoder_hidden: self.encoder_hidden.clone().unwrap_or(base.encoder_hidden.clone()),
            man_hidden: self.man_hidden.clone().unwrap_or(base.man_hidden.clone()),
            activation: self.activation.unwrap_or(base.activation),
            reconstruction_loss: self.reconstruction_loss.unwrap_or(base.reconstruction_loss),
            ..base
        }
    }
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalToggles {
    /// Score ACC on the labels after every epoch and keep a best-ACC
    /// checkpoint. Labels never reach the optimizer.
    #[serde(default)]
    pub monitor_accuracy: bool,
    #[serde(default = "yes")]
    pub final_report: bool,
    #[serde(default = "yes")]
    pub export_latents: bool,
    #[serde(default)]
    pub kmeans_baseline: bool,
}

impl Default for EvalToggles {
    fn default() -> Self {
        EvalToggles {
            monitor_accuracy: false,
            final_report: true,
            export_latents: true,
            kmeans_baseline: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub precision: Precision,
    pub data: DataConfig,
    pub model: ModelSection,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub eval: EvalToggles,
}

pub fn read_toml<C: for<'de> Deserialize<'de>>(path: &Path) -> Result<C, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {}", path.display(), e.message().trim())))
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let mut cfg: RunConfig = read_toml(path)?;
        if let Some(base) = path.parent() {
            cfg.data.rebase(base);
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.data.validate()?;
        self.train.validate().map_err(|e| CliError::Config(format!("train: {e}")))?;
        if self.model.num_autoencoders < 2 || self.model.latent_dim == 0 {
            return Err(CliError::Config(
                "model: num_autoencoders must be >= 2 and latent_dim positive".into(),
            ));
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }
}

/// `--out` if given, else the config's `output_dir`, else
/// `$MIXAE_OUTPUT_ROOT/<name>` (or `runs/<name>`).
pub fn output_dir(explicit: Option<&Path>, configured: Option<&Path>, name: &str) -> PathBuf {
    if let Some(p) = explicit.or(configured) {
        return p.to_path_buf();
    }
    let root = std::env::var_os(OUTPUT_ROOT_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("runs"));
    root.join(name)
}
