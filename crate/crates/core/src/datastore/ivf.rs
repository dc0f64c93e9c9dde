//! Inverted-file coarse quantizer: Lloyd k-means centroids, one posting
//! list per centroid.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{squared_l2, Ranked, TopK};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IvfConfig {
    pub n_clusters: usize,
    /// Clusters scanned per query by default.
    pub n_probe: usize,
    pub iterations: usize,
    pub seed: u64,
}

impl Default for IvfConfig {
    fn default() -> Self {
        IvfConfig {
            n_clusters: 64,
            n_probe: 8,
            iterations: 12,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IvfIndex {
    dim: usize,
    centroids: Vec<f32>,
    lists: Vec<Vec<u32>>,
    n_probe: usize,
}

fn nearest_centroid(centroids: &[f32], dim: usize, x: &[f32]) -> usize {
    let mut best = Ranked {
        dist: f32::INFINITY,
        index: 0,
    };
    for (c, centroid) in centroids.chunks_exact(dim).enumerate() {
        let r = Ranked {
            dist: squared_l2(x, centroid),
            index: c,
        };
        if r < best {
            best = r;
        }
    }
    best.index
}

impl IvfIndex {
    /// Clusters `keys` (row-major, `dim` wide). Every entry lands in the
    /// list of its nearest final centroid.
    pub fn build(keys: &[f32], dim: usize, config: &IvfConfig) -> Result<Self> {
        if config.n_clusters == 0 || config.n_probe == 0 {
            return Err(Error::InvalidConfig(
                "n_clusters and n_probe must be positive".into(),
            ));
        }
        if dim == 0 {
            return Err(Error::InvalidState("store has dimension 0".into()));
        }
        let n = keys.len() / dim;
        let nc = config.n_clusters.min(n);
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut centroids = Vec::with_capacity(nc * dim);
        let mut seeds = sample(&mut rng, n, nc).into_vec();
        seeds.sort_unstable();
        for i in seeds {
            centroids.extend_from_slice(&keys[i * dim..(i + 1) * dim]);
        }

        let mut assign = vec![0usize; n];
        for _ in 0..config.iterations {
            for (i, x) in keys.chunks_exact(dim).enumerate() {
                assign[i] = nearest_centroid(&centroids, dim, x);
            }
            let mut sums = vec![0f64; nc * dim];
            let mut counts = vec![0usize; nc];
            for (i, x) in keys.chunks_exact(dim).enumerate() {
                let c = assign[i];
                counts[c] += 1;
                for (s, &v) in sums[c * dim..(c + 1) * dim].iter_mut().zip(x) {
                    *s += v as f64;
                }
            }
            for c in 0..nc {
                // empty clusters keep their previous centroid
                if counts[c] > 0 {
                    for d in 0..dim {
                        centroids[c * dim + d] = (sums[c * dim + d] / counts[c] as f64) as f32;
                    }
                }
            }
        }

        let mut lists = vec![Vec::new(); nc];
        for (i, x) in keys.chunks_exact(dim).enumerate() {
            lists[nearest_centroid(&centroids, dim, x)].push(i as u32);
        }
        Ok(IvfIndex {
            dim,
            centroids,
            lists,
            n_probe: config.n_probe,
        })
    }

    pub fn n_clusters(&self) -> usize {
        self.lists.len()
    }

    pub fn default_probe(&self) -> usize {
        self.n_probe
    }

    pub fn list(&self, cluster: usize) -> &[u32] {
        &self.lists[cluster]
    }

    /// The `n_probe` clusters whose centroids are nearest `query`, ties by
    /// lower cluster id.
    pub fn probe(&self, query: &[f32], n_probe: usize) -> Vec<usize> {
        let mut top = TopK::new(n_probe.max(1));
        for (c, centroid) in self.centroids.chunks_exact(self.dim).enumerate() {
            top.push(Ranked {
                dist: squared_l2(query, centroid),
                index: c,
            });
        }
        top.into_sorted().into_iter().map(|r| r.index).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partitions_every_entry_once() {
        let keys: Vec<f32> = (0..200).map(|i| (i % 17) as f32 * 0.3).collect();
        let idx = IvfIndex::build(&keys, 2, &IvfConfig {
            n_clusters: 8,
            ..Default::default()
        })
        .unwrap();
        let mut all: Vec<u32> = (0..idx.n_clusters()).flat_map(|c| idx.list(c).to_vec()).collect();
        all.sort_unstable();
        assert_eq!(all, (0..100).collect::<Vec<u32>>());
    }

    #[test]
    fn fewer_entries_than_clusters() {
        let keys = [0.0f32, 1.0, 2.0];
        let idx = IvfIndex::build(&keys, 1, &IvfConfig::default()).unwrap();
        assert_eq!(idx.n_clusters(), 3);
        assert_eq!(idx.probe(&[2.1], 1), vec![2]);
    }

    #[test]
    fn rejects_zero_clusters() {
        let cfg = IvfConfig {
            n_clusters: 0,
            ..Default::default()
        };
        assert!(IvfIndex::build(&[0.0], 1, &cfg).is_err());
    }
}
