//! Attention encoder-decoder exposing, per decode step, the hidden state
//! used as datastore key/query and the vanilla next-token distribution.
//!
//! Encoder: each framed source position reads a window of three token
//! embeddings plus a position vector through one `tanh` layer. Decoder:
//! a query built from the last two prefix tokens and the step position
//! attends (bilinear) over the encoder states; query and context feed the
//! final hidden layer, whose output is the [`DecoderState`]. The vanilla
//! distribution is `softmax(W_out . state + b_out)`.

mod checkpoint;
pub mod gradcheck;
mod graph;
mod params;
mod train;

use ndarray::{s, Array1, Array2};

use crate::corpus::{TokenId, BOS};
use crate::error::{Error, Result};

pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint, CHECKPOINT_MAGIC};
pub use params::{Dims, Params, Real, MAX_POSITIONS};
pub use train::{fit, teacher_forced_accuracy, train, EncodedPair, TrainConfig, TrainReport};

/// Context vectors for one framed source sentence.
#[derive(Clone, Debug, PartialEq)]
pub struct EncoderMemory {
    /// `(N + 2) x H` encoder states.
    pub states: Array2<f32>,
    /// `states . W_attn^T`, the attention keys.
    keys: Array2<f32>,
}

impl EncoderMemory {
    pub fn len(&self) -> usize {
        self.states.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.states.nrows() == 0
    }
}

/// Final decoder hidden layer output at one step.
#[derive(Clone, Debug, PartialEq)]
pub struct DecoderState {
    pub vector: Vec<f32>,
    pub step: usize,
}

/// Probability vector over the vocabulary.
#[derive(Clone, Debug, PartialEq)]
pub struct TokenDistribution {
    pub probs: Vec<f64>,
}

impl TokenDistribution {
    /// Softmax of `logits`, computed in double precision.
    pub fn from_logits(logits: &[f32]) -> Self {
        let m = logits.iter().fold(f32::NEG_INFINITY, |m, &x| m.max(x)) as f64;
        let mut probs: Vec<f64> = logits.iter().map(|&x| (x as f64 - m).exp()).collect();
        let z: f64 = probs.iter().sum();
        probs.iter_mut().for_each(|p| *p /= z);
        TokenDistribution { probs }
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn sum(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// Highest-probability token, lowest id on ties.
    pub fn argmax(&self) -> TokenId {
        let mut best = 0;
        for (i, &p) in self.probs.iter().enumerate() {
            if p > self.probs[best] {
                best = i;
            }
        }
        best as TokenId
    }
}

/// A trained encoder-decoder in single precision.
#[derive(Clone, Debug, PartialEq)]
pub struct Seq2Seq {
    params: Params<f32>,
}

impl Seq2Seq {
    pub fn new(params: Params<f32>) -> Self {
        Seq2Seq { params }
    }

    pub fn params(&self) -> &Params<f32> {
        &self.params
    }

    pub fn dims(&self) -> Dims {
        self.params.dims
    }

    /// Datastore key dimension.
    pub fn hidden_dim(&self) -> usize {
        self.params.dims.hidden
    }

    pub fn encode(&self, src: &[TokenId]) -> Result<EncoderMemory> {
        if src.is_empty() {
            return Err(Error::InvalidInput("empty source sentence".into()));
        }
        if src.len() + 2 > MAX_POSITIONS {
            return Err(Error::InvalidInput(format!(
                "source of {} tokens exceeds the {} supported",
                src.len(),
                MAX_POSITIONS - 2
            )));
        }
        let p = &self.params;
        self.check_ids(src)?;
        let framed = graph::frame_source(src);
        let e = p.dims.emb;
        let mut x_in = Array2::<f32>::zeros((framed.len(), 3 * e));
        for j in 0..framed.len() {
            for (k, t) in graph::source_window(&framed, j).into_iter().enumerate() {
                x_in.slice_mut(s![j, k * e..(k + 1) * e])
                    .assign(&p.embed.row(t as usize));
            }
        }
        let mut states = x_in.dot(&p.w_enc.t());
        for (j, mut row) in states.rows_mut().into_iter().enumerate() {
            row += &p.b_enc;
            row += &p.pos_src.row(j);
        }
        graph::tanh_inplace(&mut states);
        let keys = states.dot(&p.w_attn.t());
        Ok(EncoderMemory { states, keys })
    }

    fn check_ids(&self, ids: &[TokenId]) -> Result<()> {
        let v = self.params.dims.vocab;
        match ids.iter().find(|&&t| t as usize >= v) {
            Some(t) => Err(Error::InvalidInput(format!(
                "token id {t} outside vocabulary of {v}"
            ))),
            None => Ok(()),
        }
    }

    fn check_prefix(&self, prefix: &[TokenId]) -> Result<()> {
        if prefix.first() != Some(&BOS) {
            return Err(Error::InvalidInput("decoder prefix must start with BOS".into()));
        }
        if prefix.len() > MAX_POSITIONS {
            return Err(Error::InvalidInput(format!(
                "decoder prefix longer than {MAX_POSITIONS}"
            )));
        }
        self.check_ids(prefix)
    }

    /// Hidden state `h(x, prefix)` for predicting the token after `prefix`.
    /// This is the single code path for datastore keys and queries.
    pub fn decoder_state(&self, memory: &EncoderMemory, prefix: &[TokenId]) -> Result<DecoderState> {
        self.check_prefix(prefix)?;
        let p = &self.params;
        let e = p.dims.emb;
        let h = p.dims.hidden;
        let step = prefix.len() - 1;
        let mut q_in = Array1::<f32>::zeros(2 * e);
        for (k, t) in graph::query_tokens(prefix, step).into_iter().enumerate() {
            q_in.slice_mut(s![k * e..(k + 1) * e])
                .assign(&p.embed.row(t as usize));
        }
        let mut query = p.w_query.dot(&q_in);
        query += &p.b_query;
        query += &p.pos_tgt.row(step);
        query.mapv_inplace(f32::tanh);

        let mut attn = memory.keys.dot(&query);
        let m = attn.fold(f32::NEG_INFINITY, |m, &x| m.max(x));
        attn.mapv_inplace(|x| (x - m).exp());
        let z = attn.sum();
        attn.mapv_inplace(|x| x / z);
        let ctx = memory.states.t().dot(&attn);

        let mut h_in = Array1::<f32>::zeros(2 * h);
        h_in.slice_mut(s![..h]).assign(&query);
        h_in.slice_mut(s![h..]).assign(&ctx);
        let mut hidden = p.w_hidden.dot(&h_in);
        hidden += &p.b_hidden;
        hidden.mapv_inplace(f32::tanh);
        Ok(DecoderState {
            vector: hidden.to_vec(),
            step,
        })
    }

    /// Vanilla next-token distribution from a decoder state.
    pub fn output_distribution(&self, state: &DecoderState) -> TokenDistribution {
        let p = &self.params;
        let h = Array1::from(state.vector.clone());
        let mut logits = p.w_out.dot(&h);
        logits += &p.b_out;
        TokenDistribution::from_logits(logits.as_slice().unwrap())
    }

    /// One decoder step: the state and `softmax(W_out . state + b_out)`.
    pub fn decode_step(
        &self,
        memory: &EncoderMemory,
        prefix: &[TokenId],
    ) -> Result<(DecoderState, TokenDistribution)> {
        let state = self.decoder_state(memory, prefix)?;
        let dist = self.output_distribution(&state);
        Ok((state, dist))
    }

    /// Teacher-forced states over `[BOS, tgt..]`: one per target token plus
    /// the EOS step, `tgt.len() + 1` in total.
    pub fn teacher_forced_states(&self, src: &[TokenId], tgt: &[TokenId]) -> Result<Vec<DecoderState>> {
        let memory = self.encode(src)?;
        let mut prefix = Vec::with_capacity(tgt.len() + 1);
        prefix.push(BOS);
        prefix.extend_from_slice(tgt);
        if prefix.len() > MAX_POSITIONS {
            return Err(Error::InvalidInput(format!(
                "target of {} tokens exceeds the {} supported",
                tgt.len(),
                MAX_POSITIONS - 1
            )));
        }
        (1..=prefix.len())
            .map(|n| self.decoder_state(&memory, &prefix[..n]))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::EOS;

    fn model() -> Seq2Seq {
        Seq2Seq::new(Params::init(Dims::new(30, 6, 10), 42))
    }

    #[test]
    fn memory_has_framed_length() {
        let m = model().encode(&[4, 5, 6, 7, 8]).unwrap();
        assert_eq!(m.states.dim(), (7, 10));
    }

    #[test]
    fn encode_is_deterministic_and_input_sensitive() {
        let s = model();
        let a = s.encode(&[4, 5, 6]).unwrap();
        assert_eq!(a, s.encode(&[4, 5, 6]).unwrap());
        assert_ne!(a, s.encode(&[4, 9, 6]).unwrap());
    }

    #[test]
    fn encode_rejects_empty_and_out_of_range() {
        let s = model();
        assert!(matches!(s.encode(&[]), Err(Error::InvalidInput(_))));
        assert!(s.encode(&[99]).is_err());
        assert!(s.encode(&vec![4; MAX_POSITIONS]).is_err());
    }

    #[test]
    fn step_distribution_normalizes() {
        let s = model();
        let m = s.encode(&[4, 5]).unwrap();
        let (state, dist) = s.decode_step(&m, &[BOS, 4]).unwrap();
        assert_eq!(state.step, 1);
        assert_eq!(state.vector.len(), 10);
        assert!((dist.sum() - 1.0).abs() < 1e-9);
        assert!(dist.probs.iter().all(|&p| p >= 0.0));
    }

    #[test]
    fn prefix_must_start_with_bos() {
        let s = model();
        let m = s.encode(&[4]).unwrap();
        assert!(matches!(
            s.decode_step(&m, &[4]),
            Err(Error::InvalidInput(_))
        ));
        assert!(s.decode_step(&m, &[]).is_err());
    }

    #[test]
    fn zero_model_is_uniform() {
        let s = Seq2Seq::new(Params::zeros(Dims::new(25, 4, 8)));
        let m = s.encode(&[4, 5]).unwrap();
        let (_, dist) = s.decode_step(&m, &[BOS]).unwrap();
        for p in dist.probs {
            assert!((p - 1.0 / 25.0).abs() < 1e-12);
        }
    }

    #[test]
    fn teacher_forcing_yields_one_state_per_target_plus_eos() {
        let s = model();
        let states = s.teacher_forced_states(&[4, 5], &[4, 6, 5]).unwrap();
        assert_eq!(states.len(), 4);
        let m = s.encode(&[4, 5]).unwrap();
        let (again, _) = s.decode_step(&m, &[BOS, 4, 6]).unwrap();
        assert_eq!(states[2], again);
    }

    #[test]
    fn batched_and_stepwise_passes_agree() {
        let s = model();
        let f = graph::forward(s.params(), &[4, 5, 6], &[4, 7, 6]);
        let m = s.encode(&[4, 5, 6]).unwrap();
        let prefix = [BOS, 4, 7, 6];
        for i in 0..4 {
            let (_, dist) = s.decode_step(&m, &prefix[..=i]).unwrap();
            for (a, &b) in dist.probs.iter().zip(f.probs.row(i)) {
                assert!((a - b as f64).abs() < 1e-5);
            }
        }
        assert_eq!(*f.targets.last().unwrap(), EOS);
    }
}
