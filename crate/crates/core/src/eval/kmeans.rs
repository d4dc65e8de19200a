use crate::error::{Error, Result};
use crate::numerics::{SeededRng, Tensor};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    pub labels: Vec<usize>,
    /// `k` rows of `dim` coordinates.
    pub centroids: Vec<Vec<f64>>,
    pub inertia: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KMeansConfig {
    pub restarts: usize,
    pub max_iterations: usize,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        KMeansConfig {
            restarts: 10,
            max_iterations: 300,
        }
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(point: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, mu) in centroids.iter().enumerate() {
        let d = sq_dist(point, mu);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn plus_plus(points: &[Vec<f64>], k: usize, rng: &mut SeededRng) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut centroids = vec![points[rng.below(n)].clone()];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut r = rng.uniform(0.0, total);
            let mut idx = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                if r < w {
                    idx = i;
                    break;
                }
                r -= w;
            }
            idx
        } else {
            rng.below(n)
        };
        centroids.push(points[pick].clone());
        for (p, d) in points.iter().zip(d2.iter_mut()) {
            *d = d.min(sq_dist(p, &centroids[centroids.len() - 1]));
        }
    }
    centroids
}

fn lloyd(points: &[Vec<f64>], mut centroids: Vec<Vec<f64>>, max_iterations: usize) -> KMeansResult {
    let (n, k, dim) = (points.len(), centroids.len(), points[0].len());
    let mut labels = vec![usize::MAX; n];
    let mut dists = vec![0.0; n];
    let mut iterations = 0;
    while iterations < max_iterations {
        iterations += 1;
        let mut changed = false;
        for (i, p) in points.iter().enumerate() {
            let (c, d) = nearest(p, &centroids);
            dists[i] = d;
            if labels[i] != c {
                labels[i] = c;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &c) in points.iter().zip(&labels) {
            counts[c] += 1;
            for (s, v) in sums[c].iter_mut().zip(p) {
                *s += v;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                centroids[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            } else {
                // re-seed an empty cluster at the point worst served by its centroid
                let far = (0..n)
                    .max_by(|&a, &b| dists[a].total_cmp(&dists[b]).then(b.cmp(&a)))
                    .expect("non-empty");
                centroids[c] = points[far].clone();
                dists[far] = 0.0;
            }
        }
    }
    let inertia = points.iter().zip(&labels).map(|(p, &c)| sq_dist(p, &centroids[c])).sum();
    KMeansResult {
        labels,
        centroids,
        inertia,
        iterations,
    }
}

/// Lloyd's algorithm from k-means++ seeds; the run with the lowest inertia
/// over `cfg.restarts` restarts wins.
pub fn kmeans<T: Scalar>(features: &Tensor<T>, k: usize, seed: u64, cfg: KMeansConfig) -> Result<KMeansResult> {
    features.ensure_matrix("kmeans")?;
    let n = features.rows();
    if k == 0 || k > n {
        return Err(Error::Config(format!("k-means needs 1 <= K <= N, got K={k}, N={n}")));
    }
    if cfg.restarts == 0 || cfg.max_iterations == 0 {
        return Err(Error::Config("k-means restarts and max_iterations must be positive".into()));
    }
    let points: Vec<Vec<f64>> = features.row_iter().map(|r| r.iter().map(|v| v.as_f64()).collect()).collect();
    let root = SeededRng::new(seed);
    let mut best: Option<KMeansResult> = None;
    for r in 0..cfg.restarts {
        let mut rng = root.derive(r as u64);
        let run = lloyd(&points, plus_plus(&points, k, &mut rng), cfg.max_iterations);
        if best.as_ref().is_none_or(|b| run.inertia < b.inertia) {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one restart"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_cluster_is_all_zero() {
        let x = Tensor::<f64>::from_rows(&[[0.0, 1.0], [2.0, 3.0], [4.0, 4.0]]).unwrap();
        let r = kmeans(&x, 1, 0, KMeansConfig::default()).unwrap();
        assert_eq!(r.labels, vec![0, 0, 0]);
        assert_eq!(r.centroids[0], vec![2.0, 8.0 / 3.0]);
    }

    #[test]
    fn separates_obvious_groups() {
        let x = Tensor::<f64>::from_rows(&[[0.0], [0.1], [10.0], [10.2], [0.05]]).unwrap();
        let r = kmeans(&x, 2, 3, KMeansConfig::default()).unwrap();
        assert_eq!(r.labels[0], r.labels[1]);
        assert_eq!(r.labels[0], r.labels[4]);
        assert_eq!(r.labels[2], r.labels[3]);
        assert_ne!(r.labels[0], r.labels[2]);
    }

    #[test]
    fn bad_k() {
        let x = Tensor::<f64>::zeros(&[2, 2]);
        assert!(kmeans(&x, 3, 0, KMeansConfig::default()).is_err());
        assert!(kmeans(&x, 0, 0, KMeansConfig::default()).is_err());
    }

    #[test]
    fn identical_points_do_not_panic() {
        let x = Tensor::<f64>::zeros(&[5, 2]);
        let r = kmeans(&x, 3, 1, KMeansConfig::default()).unwrap();
        assert_eq!(r.inertia, 0.0);
    }
}
