//! Loaded artifacts bundled for correction with examples from any of the
//! three retrieval methods.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::align::{Edit, WordLists};
use crate::baselines::{build_context_store, embed_retrieve, token_retrieve, EditIndex};
use crate::corpus::{Corpus, Example, SentencePair, Vocab};
use crate::datastore::Datastore;
use crate::error::{Error, Result};
use crate::knn_decode::{self, output_words, present, vanilla_beam, CorrectionResult, DecodeConfig};
use crate::seq2seq::Seq2Seq;

/// Where a presented example comes from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Neighbors retrieved while decoding.
    #[default]
    Eb,
    /// A training pair with the same edit.
    Token,
    /// Nearest contextual embedding of the corrected token.
    Embed,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Eb, Method::Token, Method::Embed];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Eb => "eb",
            Method::Token => "token",
            Method::Embed => "embed",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown method {s:?}")))
    }
}

/// Stable identifier of a sentence: the first 16 hex digits of its
/// SHA-256.
pub fn sentence_id(text: &str) -> String {
    let digest = Sha256::digest(text.as_bytes());
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

fn sentence_seed(text: &str) -> u64 {
    let digest = Sha256::digest(text.as_bytes());
    u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
}

#[derive(Clone, Debug)]
pub struct Correction {
    pub src: Vec<String>,
    pub output: Vec<String>,
    /// Edits from `src` to `output`, left to right, each with its example.
    pub edits: Vec<(Edit, Option<Example>)>,
    pub result: CorrectionResult,
}

pub struct Engine {
    pub model: Seq2Seq,
    pub vocab: Vocab,
    pub store: Datastore,
    pub corpus: Corpus,
    pub lists: WordLists,
    pub edit_index: EditIndex,
    pub context_store: Datastore,
}

impl Engine {
    /// Checks that the store matches the model and resolves against the
    /// corpus, then builds both baseline indexes over the corpus.
    pub fn new(model: Seq2Seq, vocab: Vocab, store: Datastore, corpus: Corpus, lists: WordLists) -> Result<Self> {
        if model.dims().vocab != vocab.len() {
            return Err(Error::DimMismatch {
                expected: vocab.len(),
                found: model.dims().vocab,
            });
        }
        if store.dim() != model.hidden_dim() {
            return Err(Error::DimMismatch {
                expected: model.hidden_dim(),
                found: store.dim(),
            });
        }
        for v in store.values() {
            let pair = corpus.resolve(v.pair_id)?;
            if v.position as usize > pair.tgt.len() {
                return Err(Error::InvalidState(format!(
                    "entry position {} past target of pair {}",
                    v.position, v.pair_id
                )));
            }
        }
        let edit_index = EditIndex::build(corpus.pairs());
        let context_store = build_context_store(&model, &vocab, corpus.pairs())?;
        Ok(Engine {
            model,
            vocab,
            store,
            corpus,
            lists,
            edit_index,
            context_store,
        })
    }

    /// Decodes `src` with example-based decoding and attaches examples from
    /// `method` to each edit.
    pub fn correct(&self, src: &[String], method: Method, config: &DecodeConfig) -> Result<Correction> {
        let ids = self.vocab.encode_words(src);
        let result = knn_decode::correct(&self.model, &self.store, &self.corpus, ids.ids(), config)?;
        let output = output_words(&result, src, &self.vocab);
        let edits = match method {
            Method::Eb => present(&result, src, &self.vocab, &self.lists),
            _ => {
                let bare = crate::align::extract_edits(src, &output, &self.lists);
                self.baseline_examples(method, &src.join(" "), &output, bare, config.k)?
            }
        };
        Ok(Correction {
            src: src.to_vec(),
            output,
            edits,
            result,
        })
    }

    /// Examples for fixed edits of `output` from one of the baselines.
    /// `text` seeds the token baseline's choice.
    pub fn baseline_examples(
        &self,
        method: Method,
        text: &str,
        output: &[String],
        edits: Vec<Edit>,
        k: usize,
    ) -> Result<Vec<(Edit, Option<Example>)>> {
        let seed = sentence_seed(text);
        let out_ids = self.vocab.encode_words(output);
        edits
            .into_iter()
            .enumerate()
            .map(|(i, e)| {
                let ex = match method {
                    Method::Token => token_retrieve(
                        &e,
                        &self.edit_index,
                        &self.corpus,
                        seed.wrapping_add(i as u64),
                    )?,
                    Method::Embed if out_ids.is_empty() => None,
                    Method::Embed => embed_retrieve(
                        &self.model,
                        out_ids.ids(),
                        e.anchor_position(),
                        &self.context_store,
                        &self.corpus,
                        k,
                    )?,
                    Method::Eb => {
                        return Err(Error::InvalidInput(
                            "decoding examples come from correct()".into(),
                        ))
                    }
                };
                Ok((e, ex))
            })
            .collect()
    }

    /// Output words of plain beam search without retrieval.
    pub fn vanilla(&self, src: &[String], config: &DecodeConfig) -> Result<Vec<String>> {
        Ok(self.vanilla_correction(src, config)?.output)
    }

    /// Plain beam search; every edit comes without an example.
    pub fn vanilla_correction(&self, src: &[String], config: &DecodeConfig) -> Result<Correction> {
        config.validate()?;
        let ids = self.vocab.encode_words(src);
        let result = vanilla_beam(&self.model, ids.ids(), config.beam_width, config.max_len)?;
        let output = output_words(&result, src, &self.vocab);
        let edits = crate::align::extract_edits(src, &output, &self.lists)
            .into_iter()
            .map(|e| (e, None))
            .collect();
        Ok(Correction {
            src: src.to_vec(),
            output,
            edits,
            result,
        })
    }

    /// Adds `pairs` to the datastore and the example corpus. Their ids must
    /// be new to the corpus.
    pub fn with_planted(self, pairs: &[SentencePair]) -> Result<Engine> {
        let Engine {
            model,
            vocab,
            mut store,
            mut corpus,
            lists,
            ..
        } = self;
        corpus.extend(pairs.iter().cloned())?;
        store.append(&model, &vocab, pairs)?;
        Engine::new(model, vocab, store, corpus, lists)
    }
}
