//! Clustering diagnostics: matched accuracy, purity, entropy statistics,
//! assignment covariance, a K-means baseline, and report/latent export.

mod hungarian;
mod kmeans;

pub use hungarian::{max_benefit_assignment, min_cost_assignment};
pub use kmeans::{kmeans, KMeansConfig, KMeansResult};

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::model::Mixae;
use crate::numerics::Tensor;
use crate::scalar::Scalar;

/// Row-wise argmax; exact ties go to the lowest index.
pub fn hard_assign<T: Scalar>(p: &Tensor<T>) -> Vec<usize> {
    p.row_iter()
        .map(|row| {
            let mut best = 0;
            for (k, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = k;
                }
            }
            best
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContingencyTable {
    /// `counts[c][l]`: samples in predicted cluster `c` with true label `l`.
    pub counts: Vec<Vec<usize>>,
    pub total: usize,
}

impl ContingencyTable {
    pub fn new(pred: &[usize], truth: &[usize], k_pred: usize, k_true: usize) -> Result<Self> {
        if pred.len() != truth.len() {
            return Err(Error::dim("ContingencyTable::new", &[pred.len()], &[truth.len()]));
        }
        let mut counts = vec![vec![0; k_true]; k_pred];
        for (&c, &l) in pred.iter().zip(truth) {
            if c >= k_pred || l >= k_true {
                return Err(Error::Input(format!(
                    "pair ({c}, {l}) outside a {k_pred}x{k_true} table"
                )));
            }
            counts[c][l] += 1;
        }
        Ok(ContingencyTable {
            counts,
            total: pred.len(),
        })
    }

    pub fn k_pred(&self) -> usize {
        self.counts.len()
    }

    pub fn k_true(&self) -> usize {
        self.counts.first().map_or(0, Vec::len)
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        self.counts.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("cluster");
        for l in 0..self.k_true() {
            let _ = write!(s, ",label_{l}");
        }
        s.push('\n');
        for (c, row) in self.counts.iter().enumerate() {
            let _ = write!(s, "{c}");
            for v in row {
                let _ = write!(s, ",{v}");
            }
            s.push('\n');
        }
        s
    }
}

/// Best label agreement over injective cluster→label maps. Returns the
/// accuracy and, per cluster, the matched label (`None` for clusters left
/// unmatched when `k_pred > k_true`).
pub fn accuracy(pred: &[usize], truth: &[usize], k_pred: usize, k_true: usize) -> Result<(f64, Vec<Option<usize>>)> {
    if pred.is_empty() {
        return Err(Error::Usage("accuracy of an empty assignment".into()));
    }
    let table = ContingencyTable::new(pred, truth, k_pred, k_true)?;
    Ok(matched_accuracy(&table))
}

fn matched_accuracy(table: &ContingencyTable) -> (f64, Vec<Option<usize>>) {
    let benefit: Vec<Vec<i64>> = table
        .counts
        .iter()
        .map(|r| r.iter().map(|&v| v as i64).collect())
        .collect();
    let matching = max_benefit_assignment(&benefit, table.k_true());
    let hits: usize = matching
        .iter()
        .enumerate()
        .filter_map(|(c, m)| m.map(|l| table.counts[c][l]))
        .sum();
    (hits as f64 / table.total as f64, matching)
}

/// Fraction of samples carrying their cluster's majority label.
pub fn purity(pred: &[usize], truth: &[usize]) -> Result<f64> {
    if pred.is_empty() {
        return Err(Error::Usage("purity of an empty assignment".into()));
    }
    let k_pred = pred.iter().max().map_or(0, |m| m + 1);
    let k_true = truth.iter().max().map_or(0, |m| m + 1);
    Ok(table_purity(&ContingencyTable::new(pred, truth, k_pred, k_true)?))
}

fn table_purity(table: &ContingencyTable) -> f64 {
    let majority: usize = table
        .counts
        .iter()
        .map(|r| r.iter().copied().max().unwrap_or(0))
        .sum();
    majority as f64 / table.total as f64
}

fn entropy_f64(v: impl Iterator<Item = f64>) -> f64 {
    -v.filter(|&x| x > 0.0).map(|x| x * x.ln()).sum::<f64>()
}

/// `(batch entropy of the mean assignment, mean per-sample entropy)`.
pub fn entropy_report<T: Scalar>(p: &Tensor<T>) -> Result<(f64, f64)> {
    p.ensure_matrix("entropy_report")?;
    let n = p.rows() as f64;
    let k = p.cols();
    let mut mean = vec![0.0; k];
    let mut se = 0.0;
    for row in p.row_iter() {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v.as_f64();
        }
        se += entropy_f64(row.iter().map(|v| v.as_f64()));
    }
    let be = entropy_f64(mean.iter().map(|m| m / n));
    Ok((be, se / n))
}

/// `(1/N) Σ p pᵀ − p̄ p̄ᵀ` over the rows of `p`.
pub fn assignment_covariance<T: Scalar>(p: &Tensor<T>) -> Result<Vec<Vec<f64>>> {
    p.ensure_matrix("assignment_covariance")?;
    let (n, k) = (p.rows() as f64, p.cols());
    let mut second = vec![vec![0.0; k]; k];
    let mut mean = vec![0.0; k];
    for row in p.row_iter() {
        for a in 0..k {
            let pa = row[a].as_f64();
            mean[a] += pa;
            for b in 0..k {
                second[a][b] += pa * row[b].as_f64();
            }
        }
    }
    for m in &mut mean {
        *m /= n;
    }
    Ok((0..k)
        .map(|a| (0..k).map(|b| second[a][b] / n - mean[a] * mean[b]).collect())
        .collect())
}

/// One-hot rows for `labels`, for the ground-truth covariance.
pub fn one_hot(labels: &[usize], classes: usize) -> Result<Tensor<f64>> {
    let mut t = Tensor::zeros(&[labels.len(), classes]);
    for (i, &l) in labels.iter().enumerate() {
        if l >= classes {
            return Err(Error::Input(format!("label {l} outside [0, {classes})")));
        }
        t.set(i, l, 1.0);
    }
    Ok(t)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub samples: usize,
    pub k_pred: usize,
    pub k_true: Option<usize>,
    pub acc: Option<f64>,
    pub purity: Option<f64>,
    /// Per cluster, the matched label.
    pub matching: Option<Vec<Option<usize>>>,
    pub batch_entropy_global: f64,
    pub mean_sample_entropy: f64,
    pub max_batch_entropy: f64,
    pub cluster_sizes: Vec<usize>,
    pub covariance: Vec<Vec<f64>>,
    pub true_covariance: Option<Vec<Vec<f64>>>,
    pub contingency: Option<ContingencyTable>,
}

impl EvalReport {
    /// Builds the report from dataset-wide assignments and optional labels.
    pub fn from_assignments<T: Scalar>(p: &Tensor<T>, truth: Option<(&[usize], usize)>) -> Result<Self> {
        p.ensure_matrix("EvalReport")?;
        if p.rows() == 0 {
            return Err(Error::Usage("evaluation of an empty dataset".into()));
        }
        let k_pred = p.cols();
        let pred = hard_assign(p);
        let (be, se) = entropy_report(p)?;
        let mut cluster_sizes = vec![0; k_pred];
        for &c in &pred {
            cluster_sizes[c] += 1;
        }
        let mut report = EvalReport {
            samples: p.rows(),
            k_pred,
            k_true: None,
            acc: None,
            purity: None,
            matching: None,
            batch_entropy_global: be,
            mean_sample_entropy: se,
            max_batch_entropy: (k_pred as f64).ln(),
            cluster_sizes,
            covariance: assignment_covariance(p)?,
            true_covariance: None,
            contingency: None,
        };
        if let Some((labels, k_true)) = truth {
            let table = ContingencyTable::new(&pred, labels, k_pred, k_true)?;
            let (acc, matching) = matched_accuracy(&table);
            report.k_true = Some(k_true);
            report.acc = Some(acc);
            report.purity = Some(table_purity(&table));
            report.matching = Some(matching);
            report.true_covariance = Some(assignment_covariance(&one_hot(labels, k_true)?)?);
            report.contingency = Some(table);
        }
        Ok(report)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "samples: {}", self.samples);
        let _ = writeln!(s, "clusters: {}", self.k_pred);
        if let Some(k) = self.k_true {
            let _ = writeln!(s, "classes: {k}");
        }
        if let Some(acc) = self.acc {
            let _ = writeln!(s, "acc: {acc:.4}");
        }
        if let Some(p) = self.purity {
            let _ = writeln!(s, "purity: {p:.4}");
        }
        let _ = writeln!(
            s,
            "batch entropy: {:.4} (max {:.4})",
            self.batch_entropy_global, self.max_batch_entropy
        );
        let _ = writeln!(s, "mean sample entropy: {:.4}", self.mean_sample_entropy);
        let _ = writeln!(s, "cluster sizes: {:?}", self.cluster_sizes);
        s
    }

    /// Writes `report.json`, `summary.txt`, `covariance.csv` and, with
    /// labels, `true_covariance.csv` and `confusion.csv` into `dir`.
    pub fn write_files(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let put = |name: &str, body: &str| {
            let path = dir.join(name);
            fs::write(&path, body).map_err(|e| Error::io(&path, e))
        };
        put("report.json", &self.to_json())?;
        put("summary.txt", &self.summary())?;
        put("covariance.csv", &matrix_csv(&self.covariance))?;
        if let Some(t) = &self.true_covariance {
            put("true_covariance.csv", &matrix_csv(t))?;
        }
        if let Some(c) = &self.contingency {
            put("confusion.csv", &c.to_csv())?;
        }
        Ok(())
    }
}

pub fn matrix_csv(m: &[Vec<f64>]) -> String {
    let mut s = String::new();
    for row in m {
        let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    s
}

const EVAL_CHUNK: usize = 1024;

/// Assignments `[N × K]` and concatenated latents `[N × dK]` for a whole
/// feature matrix, computed in chunks.
pub fn infer_all<T: Scalar>(model: &Mixae<T>, features: &Tensor<T>) -> Result<(Tensor<T>, Tensor<T>)> {
    features.ensure_matrix("infer_all")?;
    let n = features.rows();
    let k = model.config().num_autoencoders;
    let dk = model.config().latent_dim * k;
    let mut p = Vec::with_capacity(n * k);
    let mut z = Vec::with_capacity(n * dk);
    let mut start = 0;
    while start < n {
        let end = (start + EVAL_CHUNK).min(n);
        let idx: Vec<usize> = (start..end).collect();
        let out = model.infer(&features.select_rows(&idx))?;
        p.extend_from_slice(out.assignments.data());
        z.extend_from_slice(out.latent_concat.data());
        start = end;
    }
    Ok((Tensor::matrix(n, k, p)?, Tensor::matrix(n, dk, z)?))
}

/// Runs the model over `dataset` and scores the hard assignments.
pub fn evaluate<T: Scalar>(model: &Mixae<T>, dataset: &Dataset<T>) -> Result<EvalReport> {
    let (p, _) = infer_all(model, dataset.features())?;
    if !p.is_finite() {
        return Err(Error::Numerical {
            term: "assignments",
            detail: "non-finite assignment probabilities".into(),
        });
    }
    EvalReport::from_assignments(&p, dataset.labels().map(|l| (l, dataset.class_count)))
}

/// CSV with one row per sample: the `dK` latent values, the predicted
/// cluster and, for labeled data, the true label.
pub fn export_latents<T: Scalar>(model: &Mixae<T>, dataset: &Dataset<T>, path: &Path) -> Result<()> {
    let (p, z) = infer_all(model, dataset.features())?;
    let pred = hard_assign(&p);
    let (d, k) = (model.config().latent_dim, model.config().num_autoencoders);
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    let mut header: Vec<String> = (0..k).flat_map(|a| (0..d).map(move |j| format!("z{a}_{j}"))).collect();
    header.push("pred".into());
    if dataset.labels().is_some() {
        header.push("truth".into());
    }
    let io = |e| Error::io(path, e);
    writeln!(w, "{}", header.join(",")).map_err(io)?;
    for (i, row) in z.row_iter().enumerate() {
        let mut cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        cells.push(pred[i].to_string());
        if let Some(l) = dataset.labels() {
            cells.push(l[i].to_string());
        }
        writeln!(w, "{}", cells.join(",")).map_err(io)?;
    }
    w.flush().map_err(io)
}

/// K-means on the same features, with matched accuracy when labels exist.
pub fn kmeans_baseline<T: Scalar>(
    dataset: &Dataset<T>,
    k: usize,
    seed: u64,
    cfg: KMeansConfig,
) -> Result<(KMeansResult, Option<f64>)> {
    let result = kmeans(dataset.features(), k, seed, cfg)?;
    let acc = match dataset.labels() {
        Some(l) => Some(accuracy(&result.labels, l, k, dataset.class_count)?.0),
        None => None,
    };
    Ok((result, acc))
}
