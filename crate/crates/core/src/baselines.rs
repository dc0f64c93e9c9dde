//! Example retrieval that ignores the correction model's decoder states:
//! surface matching on edit signatures, and nearest contextual token
//! embeddings of the corrected sentence.
//!
//! Neither retriever looks at how a correction was produced, only at the
//! edit or the output sentence.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::align::{Edit, EditSignature};
use crate::corpus::{Corpus, Example, SentencePair, TokenId, Vocab, EOS};
use crate::datastore::{Datastore, Value};
use crate::error::{Error, Result};
use crate::seq2seq::Seq2Seq;

/// Gold edit signatures to the pairs containing them, in corpus order.
#[derive(Clone, Debug, Default)]
pub struct EditIndex {
    map: BTreeMap<EditSignature, Vec<u32>>,
}

impl EditIndex {
    pub fn build(pairs: &[SentencePair]) -> Self {
        let mut map: BTreeMap<EditSignature, Vec<u32>> = BTreeMap::new();
        for p in pairs {
            for e in &p.gold_edits {
                let ids = map.entry(e.signature()).or_default();
                if ids.last() != Some(&p.pair_id) {
                    ids.push(p.pair_id);
                }
            }
        }
        EditIndex { map }
    }

    pub fn get(&self, signature: &EditSignature) -> &[u32] {
        self.map.get(signature).map_or(&[], Vec::as_slice)
    }

    /// Number of distinct signatures.
    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

/// A training pair whose gold edits include `edit`'s signature, chosen
/// uniformly by `rng_seed`; `None` when the signature was never seen.
/// Surface matches carry distance 0.
pub fn token_retrieve(edit: &Edit, index: &EditIndex, corpus: &Corpus, rng_seed: u64) -> Result<Option<Example>> {
    let sig = edit.signature();
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let Some(&pair_id) = index.get(&sig).choose(&mut rng) else {
        return Ok(None);
    };
    let pair = corpus.resolve(pair_id)?;
    let gold = pair
        .gold_edits
        .iter()
        .find(|e| e.signature() == sig)
        .ok_or(Error::CorpusResolution(pair_id))?;
    Ok(Some(Example::anchored(pair, gold.anchor_position(), 0.0)))
}

/// Context-sensitive token vectors for a sentence.
pub trait ContextualEncoder {
    fn dim(&self) -> usize;

    /// `sentence.len() + 1` vectors: one per token, then one for the end
    /// of the sentence.
    fn embed(&self, sentence: &[TokenId]) -> Result<Vec<Vec<f32>>>;
}

/// The default encoder: the correction model's own encoder layer run over
/// the target sentence. Its decoder is never consulted.
impl ContextualEncoder for Seq2Seq {
    fn dim(&self) -> usize {
        self.hidden_dim()
    }

    fn embed(&self, sentence: &[TokenId]) -> Result<Vec<Vec<f32>>> {
        let memory = self.encode(sentence)?;
        // framed rows are [BOS, tokens.., EOS]; skip BOS
        debug_assert_eq!(memory.len(), sentence.len() + 2);
        Ok((1..memory.len()).map(|r| memory.states.row(r).to_vec()).collect())
    }
}

/// Contextual keys for every target token (and sentence end) of `pairs`,
/// laid out like the decoder-state store.
pub fn build_context_store<E: ContextualEncoder + ?Sized>(
    encoder: &E,
    vocab: &Vocab,
    pairs: &[SentencePair],
) -> Result<Datastore> {
    let mut store = Datastore::new(encoder.dim());
    for p in pairs {
        let tgt = vocab.encode_words(&p.tgt);
        for (i, key) in encoder.embed(tgt.ids())?.into_iter().enumerate() {
            let token = tgt.ids().get(i).copied().unwrap_or(EOS);
            store.push(
                &key,
                Value {
                    token,
                    pair_id: p.pair_id,
                    position: i as u16,
                },
            )?;
        }
    }
    Ok(store)
}

/// The training pair whose contextual key is nearest to the embedding of
/// `output[position]` (the sentence end when `position == output.len()`).
pub fn embed_retrieve<E: ContextualEncoder + ?Sized>(
    encoder: &E,
    output: &[TokenId],
    position: usize,
    store: &Datastore,
    corpus: &Corpus,
    k: usize,
) -> Result<Option<Example>> {
    if store.is_empty() {
        return Ok(None);
    }
    if position > output.len() {
        return Err(Error::InvalidInput(format!(
            "position {position} past sentence of {} tokens",
            output.len()
        )));
    }
    let vectors = encoder.embed(output)?;
    let neighbors = store.knn_exact(&vectors[position], k)?;
    match neighbors.first() {
        Some(n) => {
            let pair = corpus.resolve(n.value.pair_id)?;
            Ok(Some(Example::anchored(
                pair,
                n.value.position as usize,
                n.squared_distance,
            )))
        }
        None => Ok(None),
    }
}
