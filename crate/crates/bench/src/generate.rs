//! Synthetic stand-ins for the benchmark datasets.

use partial_reinit::hmm::ObsSeq;
use partial_reinit::kmeans::PointSet;
use partial_reinit::kmedoids::DissimilarityMatrix;
use partial_reinit::rbm::gen_training_data;
use partial_reinit::rng::seeded;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{BenchError, Result};
use crate::formats::Dataset;

fn default_dim() -> usize {
    2
}

fn default_extent() -> f64 {
    65_536.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DatasetSpec {
    /// `n` points split evenly over `centers` isotropic Gaussian clusters
    /// whose centres are uniform in `[0, extent]^dim`.
    GaussianClusters {
        n: usize,
        centers: usize,
        #[serde(default = "default_dim")]
        dim: usize,
        spread: f64,
        #[serde(default = "default_extent")]
        extent: f64,
    },
    /// Independent fair bits.
    Bitstring { length: usize },
    /// Noisy copies of the four RBM training patterns.
    RbmPatterns { n_visible: usize, n_samples: usize, noise: f64 },
    /// Squared Euclidean distances between Gaussian-cluster points.
    Dissimilarity {
        n: usize,
        clusters: usize,
        #[serde(default = "default_dim")]
        dim: usize,
        spread: f64,
        #[serde(default = "default_extent")]
        extent: f64,
    },
}

fn gaussian_clusters<R: Rng + ?Sized>(
    n: usize,
    centers: usize,
    dim: usize,
    spread: f64,
    extent: f64,
    rng: &mut R,
) -> Result<Vec<Vec<f64>>> {
    if n == 0 || centers == 0 || dim == 0 {
        return Err(BenchError::Config("cluster sizes must be positive".into()));
    }
    if !(spread >= 0.0) || !spread.is_finite() || !(extent > 0.0) || !extent.is_finite() {
        return Err(BenchError::Config(format!(
            "spread {spread} and extent {extent} must be finite, with extent positive"
        )));
    }
    let mus: Vec<Vec<f64>> =
        (0..centers).map(|_| (0..dim).map(|_| rng.random::<f64>() * extent).collect()).collect();
    Ok((0..n)
        .map(|i| {
            mus[i % centers]
                .iter()
                .map(|&m| if spread == 0.0 { m } else { m + spread * rng.sample::<f64, _>(StandardNormal) })
                .collect()
        })
        .collect())
}

/// Deterministic in `(spec, seed)`.
pub fn generate_dataset(spec: &DatasetSpec, seed: u64) -> Result<Dataset> {
    let mut rng = seeded(seed);
    Ok(match *spec {
        DatasetSpec::GaussianClusters { n, centers, dim, spread, extent } => {
            let rows = gaussian_clusters(n, centers, dim, spread, extent, &mut rng)?;
            Dataset::Points(PointSet::from_rows(&rows)?)
        }
        DatasetSpec::Bitstring { length } => {
            if length == 0 {
                return Err(BenchError::Config("bit string length must be positive".into()));
            }
            let bits = (0..length).map(|_| usize::from(rng.random::<bool>())).collect();
            Dataset::Bitstring(ObsSeq::new(bits, 2)?)
        }
        DatasetSpec::RbmPatterns { n_visible, n_samples, noise } => {
            Dataset::RbmData(gen_training_data(n_visible, n_samples, noise, &mut rng)?)
        }
        DatasetSpec::Dissimilarity { n, clusters, dim, spread, extent } => {
            let rows = gaussian_clusters(n, clusters, dim, spread, extent, &mut rng)?;
            Dataset::Dissimilarity(DissimilarityMatrix::squared_euclidean(&rows)?)
        }
    })
}
