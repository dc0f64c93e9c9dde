use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{SentencePair, TokenId, Vocab};
use crate::error::{Error, Result};

use super::graph::{backward, forward};
use super::params::{Dims, Params, MAX_POSITIONS};

/// A sentence pair as vocabulary ids.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EncodedPair {
    pub src: Vec<TokenId>,
    pub tgt: Vec<TokenId>,
}

impl EncodedPair {
    pub fn from_pair(pair: &SentencePair, vocab: &Vocab) -> Self {
        EncodedPair {
            src: vocab.encode_words(&pair.src).0,
            tgt: vocab.encode_words(&pair.tgt).0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub emb_dim: usize,
    pub hidden_dim: usize,
    pub epochs: usize,
    pub seed: u64,
    pub learning_rate: f32,
    pub batch_size: usize,
    /// Global gradient norm clip.
    pub clip_norm: f32,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            emb_dim: 32,
            hidden_dim: 64,
            epochs: 20,
            seed: 1,
            learning_rate: 3e-3,
            batch_size: 16,
            clip_norm: 5.0,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// Mean per-token cross-entropy over each epoch.
    pub epoch_losses: Vec<f64>,
}

struct Adam {
    m: Params<f32>,
    v: Params<f32>,
    t: i32,
    lr: f32,
}

impl Adam {
    const BETA1: f32 = 0.9;
    const BETA2: f32 = 0.999;
    const EPS: f32 = 1e-8;

    fn new(dims: Dims, lr: f32) -> Self {
        Adam {
            m: Params::zeros(dims),
            v: Params::zeros(dims),
            t: 0,
            lr,
        }
    }

    fn step(&mut self, params: &mut Params<f32>, grad: &Params<f32>) {
        self.t += 1;
        let c1 = 1.0 - Self::BETA1.powi(self.t);
        let c2 = 1.0 - Self::BETA2.powi(self.t);
        let lr = self.lr;
        for (((w, g), m), v) in params
            .tensors_mut()
            .into_iter()
            .zip(grad.tensors())
            .zip(self.m.tensors_mut())
            .zip(self.v.tensors_mut())
        {
            for i in 0..w.len() {
                m[i] = Self::BETA1 * m[i] + (1.0 - Self::BETA1) * g[i];
                v[i] = Self::BETA2 * v[i] + (1.0 - Self::BETA2) * g[i] * g[i];
                let mh = m[i] / c1;
                let vh = v[i] / c2;
                w[i] -= lr * mh / (vh.sqrt() + Self::EPS);
            }
        }
    }
}

fn clip(grad: &mut Params<f32>, max_norm: f32) {
    let sq: f64 = grad
        .tensors()
        .iter()
        .flat_map(|t| t.iter())
        .map(|&g| (g as f64) * (g as f64))
        .sum();
    let norm = sq.sqrt() as f32;
    if norm > max_norm {
        let s = max_norm / norm;
        for t in grad.tensors_mut() {
            t.iter_mut().for_each(|g| *g *= s);
        }
    }
}

fn validate(pairs: &[EncodedPair], vocab_size: usize) -> Result<()> {
    if pairs.is_empty() {
        return Err(Error::InvalidInput("training corpus is empty".into()));
    }
    for (i, p) in pairs.iter().enumerate() {
        if p.src.is_empty() || p.tgt.is_empty() {
            return Err(Error::InvalidInput(format!("pair {i} has an empty side")));
        }
        if p.src.len() + 2 > MAX_POSITIONS || p.tgt.len() + 1 > MAX_POSITIONS {
            return Err(Error::InvalidInput(format!("pair {i} is too long")));
        }
        if p.src.iter().chain(&p.tgt).any(|&t| t as usize >= vocab_size) {
            return Err(Error::InvalidInput(format!("pair {i} has out-of-vocabulary ids")));
        }
    }
    Ok(())
}

/// Minibatch Adam on teacher-forced cross-entropy. Single-threaded and
/// fully determined by `(pairs, vocab_size, config)`.
pub fn train(
    pairs: &[EncodedPair],
    vocab_size: usize,
    config: &TrainConfig,
) -> Result<(Params<f32>, TrainReport)> {
    validate(pairs, vocab_size)?;
    if config.batch_size == 0 || !(config.learning_rate > 0.0) {
        return Err(Error::InvalidConfig(
            "batch_size and learning_rate must be positive".into(),
        ));
    }
    let dims = Dims::new(vocab_size, config.emb_dim, config.hidden_dim);
    let mut params = Params::<f32>::init(dims, config.seed);
    let mut report = TrainReport::default();
    let mut adam = Adam::new(dims, config.learning_rate);
    let mut grad = Params::<f32>::zeros(dims);
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x5eed_0f_0a11);

    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0f64;
        let mut tokens = 0usize;
        for batch in order.chunks(config.batch_size) {
            grad.fill_zero();
            let n_tok: usize = batch.iter().map(|&i| pairs[i].tgt.len() + 1).sum();
            let scale = 1.0 / n_tok as f32;
            for &i in batch {
                let f = forward(&params, &pairs[i].src, &pairs[i].tgt);
                total += f.loss() as f64;
                backward(&params, &f, scale, &mut grad);
            }
            tokens += n_tok;
            if !total.is_finite() {
                return Err(Error::TrainingDiverged { epoch });
            }
            clip(&mut grad, config.clip_norm);
            adam.step(&mut params, &grad);
        }
        let mean = total / tokens as f64;
        if !mean.is_finite() || !params.is_finite() {
            return Err(Error::TrainingDiverged { epoch });
        }
        report.epoch_losses.push(mean);
    }
    Ok((params, report))
}

/// Builds the vocabulary over both sides of `pairs` and trains on them.
pub fn fit(pairs: &[SentencePair], config: &TrainConfig) -> Result<(Vocab, Params<f32>, TrainReport)> {
    let vocab = Vocab::build(pairs.iter().flat_map(|p| [&p.src, &p.tgt]));
    let encoded: Vec<EncodedPair> = pairs.iter().map(|p| EncodedPair::from_pair(p, &vocab)).collect();
    let (params, report) = train(&encoded, vocab.len(), config)?;
    Ok((vocab, params, report))
}

/// Fraction of teacher-forced steps (EOS included) whose argmax is the
/// gold token.
pub fn teacher_forced_accuracy(params: &Params<f32>, pairs: &[EncodedPair]) -> f64 {
    let (mut hit, mut all) = (0usize, 0usize);
    for p in pairs {
        let f = forward(params, &p.src, &p.tgt);
        hit += f.correct_steps();
        all += f.steps();
    }
    if all == 0 {
        0.0
    } else {
        hit as f64 / all as f64
    }
}
