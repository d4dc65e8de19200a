//! Datasets: IDX and CSV ingestion, synthetic union-of-manifold generators,
//! feature normalization and deterministic minibatching.

mod idx;
mod synthetic;
mod table;

pub use idx::{load_idx, parse_idx_images, parse_idx_labels, IDX_IMAGES_MAGIC, IDX_LABELS_MAGIC};
pub use synthetic::{generate_synthetic, SampleCounts, SyntheticKind, SyntheticSpec};
pub use table::{load_csv, write_csv, LabelColumn};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{SeededRng, Tensor};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T> {
    features: Tensor<T>,
    labels: Option<Vec<usize>>,
    pub name: String,
    /// Number of distinct label values; 0 when unlabeled.
    pub class_count: usize,
}

impl<T: Scalar> Dataset<T> {
    pub fn new(name: impl Into<String>, features: Tensor<T>, labels: Option<Vec<usize>>) -> Result<Self> {
        features.ensure_matrix("Dataset::new")?;
        if !features.is_finite() {
            return Err(Error::Input("feature matrix contains non-finite values".into()));
        }
        let class_count = match &labels {
            Some(l) => {
                if l.len() != features.rows() {
                    return Err(Error::dim("Dataset::new", &[l.len()], features.shape()));
                }
                l.iter().max().map_or(0, |m| m + 1)
            }
            None => 0,
        };
        Ok(Dataset {
            features,
            labels,
            name: name.into(),
            class_count,
        })
    }

    /// Like [`Dataset::new`] with an explicit class count that every label
    /// must stay below.
    pub fn with_class_count(mut self, class_count: usize) -> Result<Self> {
        if let Some(l) = &self.labels {
            if let Some(bad) = l.iter().find(|&&v| v >= class_count) {
                return Err(Error::Config(format!("label {bad} outside [0, {class_count})")));
            }
        }
        self.class_count = class_count;
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.features.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }

    pub fn features(&self) -> &Tensor<T> {
        &self.features
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    /// The only handle training accepts; it cannot reach the labels.
    pub fn features_view(&self) -> FeatureView<'_, T> {
        FeatureView(&self.features)
    }

    pub fn normalize(&mut self, kind: Normalization) {
        normalize(&mut self.features, kind);
    }

    /// Rows `indices` in that order, labels carried along.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        if let Some(&bad) = indices.iter().find(|&&i| i >= self.len()) {
            return Err(Error::Input(format!("subset index {bad} out of range for {} samples", self.len())));
        }
        let labels = self.labels.as_ref().map(|l| indices.iter().map(|&i| l[i]).collect());
        Ok(Dataset {
            features: self.features.select_rows(indices),
            labels,
            name: self.name.clone(),
            class_count: self.class_count,
        })
    }

    /// Counts of each label value.
    pub fn label_histogram(&self) -> Option<Vec<usize>> {
        self.labels.as_ref().map(|l| {
            let mut h = vec![0; self.class_count];
            for &v in l {
                h[v] += 1;
            }
            h
        })
    }
}

/// Borrowed, label-free view of a feature matrix.
#[derive(Debug, Clone, Copy)]
pub struct FeatureView<'a, T>(&'a Tensor<T>);

impl<'a, T: Scalar> FeatureView<'a, T> {
    pub fn new(features: &'a Tensor<T>) -> Self {
        FeatureView(features)
    }

    pub fn features(&self) -> &'a Tensor<T> {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Normalization {
    #[default]
    None,
    /// Per feature to [0, 1]; constant features become 0.
    MinMax,
    /// Per feature to zero mean, unit (population) standard deviation;
    /// constant features become 0.
    ZScore,
}

impl std::str::FromStr for Normalization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "none" => Ok(Normalization::None),
            "minmax" => Ok(Normalization::MinMax),
            "zscore" => Ok(Normalization::ZScore),
            other => Err(Error::Config(format!("unknown normalization `{other}`"))),
        }
    }
}

pub fn normalize<T: Scalar>(features: &mut Tensor<T>, kind: Normalization) {
    let (rows, cols) = (features.rows(), features.cols());
    let data = features.data_mut();
    for j in 0..cols {
        let col = || (0..rows).map(|i| i * cols + j);
        match kind {
            Normalization::None => return,
            Normalization::MinMax => {
                let (lo, hi) = col().fold((T::infinity(), T::neg_infinity()), |(lo, hi), k| {
                    (lo.min(data[k]), hi.max(data[k]))
                });
                let span = hi - lo;
                for k in col() {
                    data[k] = if span > T::zero() { (data[k] - lo) / span } else { T::zero() };
                }
            }
            Normalization::ZScore => {
                // two passes in f64 keep the moments accurate for f32 data
                let mean = col().map(|k| data[k].as_f64()).sum::<f64>() / rows as f64;
                let var = col().map(|k| (data[k].as_f64() - mean).powi(2)).sum::<f64>() / rows as f64;
                let sd = var.sqrt();
                for k in col() {
                    data[k] = if sd > 0.0 { T::of((data[k].as_f64() - mean) / sd) } else { T::zero() };
                }
            }
        }
    }
}

/// Index batches for one epoch: a permutation keyed by `(seed, epoch)`,
/// cut into full batches; the remainder is dropped.
pub fn minibatches(n: usize, batch_size: usize, seed: u64, epoch: usize) -> Result<Vec<Vec<usize>>> {
    if batch_size == 0 || batch_size > n {
        return Err(Error::Config(format!("batch size {batch_size} must lie in [1, {n}]")));
    }
    let mut rng = SeededRng::new(seed).derive(0xBA7C_0000 + epoch as u64);
    let perm = rng.permutation(n);
    Ok(perm.chunks_exact(batch_size).map(|c| c.to_vec()).collect())
}
