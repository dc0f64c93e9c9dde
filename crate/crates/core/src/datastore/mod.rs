//! Key-value store of teacher-forced decoder states over the training
//! pairs, with exact and inverted-file approximate k-nearest-neighbor
//! search under squared L2 distance.

mod io;
mod ivf;

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::corpus::{SentencePair, TokenId, Vocab, EOS};
use crate::error::{Error, Result};
use crate::seq2seq::Seq2Seq;

pub use io::{CONTEXT_MAGIC, STORE_MAGIC};
pub use ivf::{IvfConfig, IvfIndex};

/// What a stored key points at: the next token and where it came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Value {
    pub token: TokenId,
    pub pair_id: u32,
    /// Target position of `token` in the pair (its length for EOS).
    pub position: u16,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Neighbor {
    /// Row of the entry in the store.
    pub index: usize,
    pub key: Vec<f32>,
    pub value: Value,
    pub squared_distance: f32,
}

/// Up to `k` neighbors, ascending by distance, ties by lower entry index.
pub type NeighborSet = Vec<Neighbor>;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SearchMode {
    #[default]
    Exact,
    Approximate,
}

/// Squared Euclidean distance, accumulated in double precision over four
/// interleaved lanes and rounded once to `f32`.
pub fn squared_l2(a: &[f32], b: &[f32]) -> f32 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0f64; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        for l in 0..4 {
            let d = a[c * 4 + l] as f64 - b[c * 4 + l] as f64;
            acc[l] += d * d;
        }
    }
    for i in chunks * 4..a.len() {
        let d = a[i] as f64 - b[i] as f64;
        acc[i % 4] += d * d;
    }
    ((acc[0] + acc[1]) + (acc[2] + acc[3])) as f32
}

/// [`squared_l2`] unless a partial sum already exceeds `bound`, in which
/// case `None`. When it returns a value, the value is bit-identical to
/// [`squared_l2`]: the lanes accumulate in the same order.
pub(crate) fn squared_l2_bounded(a: &[f32], b: &[f32], bound: f32) -> Option<f32> {
    let bound = bound as f64;
    let mut acc = [0f64; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        for l in 0..4 {
            let d = a[c * 4 + l] as f64 - b[c * 4 + l] as f64;
            acc[l] += d * d;
        }
        // terms are non-negative, so partial sums bound the total from below
        if c % 2 == 1 && (acc[0] + acc[1]) + (acc[2] + acc[3]) > bound {
            return None;
        }
    }
    for i in chunks * 4..a.len() {
        let d = a[i] as f64 - b[i] as f64;
        acc[i % 4] += d * d;
    }
    Some(((acc[0] + acc[1]) + (acc[2] + acc[3])) as f32)
}

/// `(distance, index)` under the store's total order.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct Ranked {
    pub dist: f32,
    pub index: usize,
}

impl Eq for Ranked {}

impl Ord for Ranked {
    fn cmp(&self, other: &Self) -> Ordering {
        self.dist
            .total_cmp(&other.dist)
            .then(self.index.cmp(&other.index))
    }
}

impl PartialOrd for Ranked {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Keeps the `k` smallest items pushed.
pub(crate) struct TopK {
    k: usize,
    heap: BinaryHeap<Ranked>,
}

impl TopK {
    pub fn new(k: usize) -> Self {
        TopK {
            k,
            heap: BinaryHeap::with_capacity(k + 1),
        }
    }

    pub fn push(&mut self, r: Ranked) {
        if self.heap.len() < self.k {
            self.heap.push(r);
        } else if let Some(worst) = self.heap.peek() {
            if r < *worst {
                self.heap.pop();
                self.heap.push(r);
            }
        }
    }

    /// Distance a new item must not exceed to enter; entries scanned in
    /// ascending index order lose ties, so anything beyond it is rejected.
    pub fn bound(&self) -> f32 {
        match self.heap.peek() {
            Some(worst) if self.heap.len() == self.k => worst.dist,
            _ => f32::INFINITY,
        }
    }

    pub fn into_sorted(self) -> Vec<Ranked> {
        self.heap.into_sorted_vec()
    }
}

#[derive(Clone, Debug, Default)]
pub struct Datastore {
    dim: usize,
    keys: Vec<f32>,
    values: Vec<Value>,
    index: Option<IvfIndex>,
}

impl PartialEq for Datastore {
    /// Entries only; the search index is derived state.
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.keys == other.keys && self.values == other.values
    }
}

impl Datastore {
    pub fn new(dim: usize) -> Self {
        Datastore {
            dim,
            ..Default::default()
        }
    }

    /// Keys from `model` teacher-forced over `pairs`: one entry per target
    /// token plus one for EOS, in pair order.
    pub fn build(model: &Seq2Seq, vocab: &Vocab, pairs: &[SentencePair]) -> Result<Self> {
        let mut store = Datastore::new(model.hidden_dim());
        store.append(model, vocab, pairs)?;
        Ok(store)
    }

    /// Adds the entries for `pairs`. The model's hidden size must match the
    /// store dimension. Drops any search index.
    pub fn append(&mut self, model: &Seq2Seq, vocab: &Vocab, pairs: &[SentencePair]) -> Result<()> {
        if model.hidden_dim() != self.dim {
            return Err(Error::InvalidState(format!(
                "model hidden size {} does not match store dimension {}",
                model.hidden_dim(),
                self.dim
            )));
        }
        self.index = None;
        for p in pairs {
            let src = vocab.encode_words(&p.src);
            let tgt = vocab.encode_words(&p.tgt);
            let states = model.teacher_forced_states(src.ids(), tgt.ids())?;
            for (i, state) in states.into_iter().enumerate() {
                let token = tgt.ids().get(i).copied().unwrap_or(EOS);
                self.push(
                    &state.vector,
                    Value {
                        token,
                        pair_id: p.pair_id,
                        position: i as u16,
                    },
                )?;
            }
        }
        Ok(())
    }

    pub fn push(&mut self, key: &[f32], value: Value) -> Result<()> {
        if key.len() != self.dim {
            return Err(Error::InvalidState(format!(
                "key of dimension {} pushed into store of dimension {}",
                key.len(),
                self.dim
            )));
        }
        self.index = None;
        self.keys.extend_from_slice(key);
        self.values.push(value);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn key(&self, index: usize) -> &[f32] {
        &self.keys[index * self.dim..(index + 1) * self.dim]
    }

    pub fn value(&self, index: usize) -> Value {
        self.values[index]
    }

    pub fn values(&self) -> &[Value] {
        &self.values
    }

    pub fn index(&self) -> Option<&IvfIndex> {
        self.index.as_ref()
    }

    fn check_query(&self, query: &[f32], k: usize) -> Result<()> {
        if k == 0 {
            return Err(Error::InvalidInput("k must be at least 1".into()));
        }
        if query.len() != self.dim {
            return Err(Error::DimMismatch {
                expected: self.dim,
                found: query.len(),
            });
        }
        Ok(())
    }

    fn neighbors(&self, ranked: Vec<Ranked>) -> NeighborSet {
        ranked
            .into_iter()
            .map(|r| Neighbor {
                index: r.index,
                key: self.key(r.index).to_vec(),
                value: self.values[r.index],
                squared_distance: r.dist,
            })
            .collect()
    }

    /// The `min(k, len)` entries nearest to `query` by full scan.
    pub fn knn_exact(&self, query: &[f32], k: usize) -> Result<NeighborSet> {
        self.check_query(query, k)?;
        let mut top = TopK::new(k);
        for (index, key) in self.keys.chunks_exact(self.dim.max(1)).enumerate() {
            if let Some(dist) = squared_l2_bounded(query, key, top.bound()) {
                top.push(Ranked { dist, index });
            }
        }
        Ok(self.neighbors(top.into_sorted()))
    }

    /// Learns the coarse quantizer used by [`Datastore::knn_approx`].
    pub fn build_index(&mut self, config: &IvfConfig) -> Result<()> {
        self.index = Some(IvfIndex::build(&self.keys, self.dim, config)?);
        Ok(())
    }

    /// Nearest entries among the `n_probe` clusters closest to `query`,
    /// ranked by true distance.
    pub fn knn_approx(&self, query: &[f32], k: usize, n_probe: usize) -> Result<NeighborSet> {
        self.check_query(query, k)?;
        let index = self
            .index
            .as_ref()
            .ok_or_else(|| Error::InvalidState("approximate index not built".into()))?;
        let mut top = TopK::new(k);
        for c in index.probe(query, n_probe) {
            for &i in index.list(c) {
                let i = i as usize;
                top.push(Ranked {
                    dist: squared_l2(query, self.key(i)),
                    index: i,
                });
            }
        }
        Ok(self.neighbors(top.into_sorted()))
    }

    /// Exact or approximate search; approximate uses the index's default
    /// probe count.
    pub fn search(&self, query: &[f32], k: usize, mode: SearchMode) -> Result<NeighborSet> {
        match mode {
            SearchMode::Exact => self.knn_exact(query, k),
            SearchMode::Approximate => {
                let n_probe = self
                    .index
                    .as_ref()
                    .map(|i| i.default_probe())
                    .ok_or_else(|| Error::InvalidState("approximate index not built".into()))?;
                self.knn_approx(query, k, n_probe)
            }
        }
    }
}
