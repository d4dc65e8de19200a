//! Labeled toy datasets where each class lives near its own low-dimensional
//! manifold: Gaussian blobs (0-D), noisy curves (1-D) and swiss-roll
//! sheets (2-D), embedded into an ambient space of configurable dimension.

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::numerics::{SeededRng, Tensor};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SyntheticKind {
    GaussianBlobs,
    Curves,
    SwissRollMix,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SampleCounts {
    Uniform(usize),
    PerCluster(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub kind: SyntheticKind,
    pub clusters: usize,
    pub samples_per_cluster: SampleCounts,
    pub ambient_dim: usize,
    pub noise: f64,
    pub seed: u64,
    /// Blobs: half-width of the box centers are drawn from (default 10).
    /// Curves: outward bow of each side, relative to its length (default 0.15).
    /// Swiss rolls: distance of each roll from the origin (default 3).
    #[serde(default)]
    pub separation: Option<f64>,
}

impl SyntheticSpec {
    pub fn counts(&self) -> Vec<usize> {
        match &self.samples_per_cluster {
            SampleCounts::Uniform(n) => vec![*n; self.clusters],
            SampleCounts::PerCluster(v) => v.clone(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.clusters == 0 || self.ambient_dim == 0 {
            return Err(Error::Config("clusters and ambient_dim must be positive".into()));
        }
        let counts = self.counts();
        if counts.len() != self.clusters || counts.iter().any(|&c| c == 0) {
            return Err(Error::Config(format!(
                "samples_per_cluster must give {} positive counts",
                self.clusters
            )));
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return Err(Error::Config("noise must be finite and non-negative".into()));
        }
        if self.kind == SyntheticKind::Curves && self.ambient_dim < 2 {
            return Err(Error::Config("curves need ambient_dim >= 2".into()));
        }
        if self.kind == SyntheticKind::SwissRollMix && self.ambient_dim < 3 {
            return Err(Error::Config("swiss rolls need ambient_dim >= 3".into()));
        }
        Ok(())
    }
}

/// Random `dim × k` matrix with N(0, 1/k) entries.
fn random_map(rng: &mut SeededRng, dim: usize, k: usize) -> Vec<Vec<f64>> {
    let s = 1.0 / (k as f64).sqrt();
    (0..dim).map(|_| (0..k).map(|_| rng.normal::<f64>() * s).collect()).collect()
}

fn apply(map: &[Vec<f64>], u: &[f64]) -> Vec<f64> {
    map.iter().map(|row| row.iter().zip(u).map(|(a, b)| a * b).sum()).collect()
}

/// Generates a deterministic labeled dataset; samples are grouped by class.
pub fn generate_synthetic<T: Scalar>(spec: &SyntheticSpec) -> Result<Dataset<T>> {
    spec.validate()?;
    let root = SeededRng::new(spec.seed);
    let counts = spec.counts();
    let dim = spec.ambient_dim;
    let mut geometry = root.derive(1);
    let mut noise = root.derive(2);
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(counts.iter().sum());
    let mut labels = Vec::with_capacity(rows.capacity());

    match spec.kind {
        SyntheticKind::GaussianBlobs => {
            let half = spec.separation.unwrap_or(10.0);
            let centers: Vec<Vec<f64>> = (0..spec.clusters)
                .map(|_| (0..dim).map(|_| geometry.uniform(-half, half)).collect())
                .collect();
            for (c, &n) in counts.iter().enumerate() {
                for _ in 0..n {
                    rows.push(centers[c].iter().map(|&m| m + spec.noise * noise.normal::<f64>()).collect());
                    labels.push(c);
                }
            }
        }
        SyntheticKind::Curves => {
            // Bowed sides of a regular polygon in a random plane, extended
            // past the corners so neighbours cross, then bent elementwise.
            let bend = spec.separation.unwrap_or(0.15);
            let k = spec.clusters.max(3) as f64;
            let lift = random_map(&mut geometry, dim, 2);
            let corner = |j: usize| {
                let a = std::f64::consts::TAU * j as f64 / k;
                [a.cos(), a.sin()]
            };
            for (c, &n) in counts.iter().enumerate() {
                let (p, q) = (corner(c), corner(c + 1));
                let (dx, dy) = (q[0] - p[0], q[1] - p[1]);
                let len = (dx * dx + dy * dy).sqrt();
                let normal = [dy / len, -dx / len];
                for _ in 0..n {
                    let s: f64 = geometry.uniform(-0.5, 1.5);
                    let h = bend * len * (std::f64::consts::PI * s).sin();
                    let u = [p[0] + s * dx + h * normal[0], p[1] + s * dy + h * normal[1]];
                    let x = apply(&lift, &u).into_iter().map(|v| v + 0.5 * (2.0 * v).tanh());
                    rows.push(x.map(|v| v + spec.noise * noise.normal::<f64>()).collect());
                    labels.push(c);
                }
            }
        }
        SyntheticKind::SwissRollMix => {
            let offset = spec.separation.unwrap_or(3.0);
            let lift = random_map(&mut geometry, dim, 3);
            for (c, &n) in counts.iter().enumerate() {
                let rot = random_map(&mut geometry, 3, 3);
                let dir: Vec<f64> = (0..3).map(|_| geometry.normal::<f64>()).collect();
                let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-12);
                let shift: Vec<f64> = dir.iter().map(|v| offset * v / norm).collect();
                for _ in 0..n {
                    let t: f64 = geometry.uniform(1.5 * std::f64::consts::PI, 4.5 * std::f64::consts::PI);
                    let h: f64 = geometry.uniform(-1.0, 1.0);
                    let base = [t * t.cos() / 10.0, h, t * t.sin() / 10.0];
                    let p: Vec<f64> = apply(&rot, &base).iter().zip(&shift).map(|(a, b)| a + b).collect();
                    rows.push(apply(&lift, &p).into_iter().map(|v| v + spec.noise * noise.normal::<f64>()).collect());
                    labels.push(c);
                }
            }
        }
    }
    let name = match spec.kind {
        SyntheticKind::GaussianBlobs => "gaussian_blobs",
        SyntheticKind::Curves => "curves",
        SyntheticKind::SwissRollMix => "swiss_roll_mix",
    };
    Dataset::new(name, Tensor::from_f64_rows(&rows)?, Some(labels))?.with_class_count(spec.clusters)
}
