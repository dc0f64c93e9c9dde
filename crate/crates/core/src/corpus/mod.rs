//! Synthetic incorrect/correct sentence pairs with gold edits.

mod example;
mod generate;
pub mod grammar;
mod vocab;

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::align::{self, Edit, EditOp, Span};
use crate::error::{Error, Result};

pub use example::Example;
pub use generate::{generate_corpus, CorruptionRules, RuleConfig};
pub use vocab::{split_words, TokenId, TokenSeq, Vocab, BOS, EOS, PAD, UNK};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum ErrorType {
    Det,
    Prep,
    Punct,
    Spell,
    Verb,
    Noun,
    Adj,
    Other,
}

impl ErrorType {
    pub const ALL: [ErrorType; 8] = [
        ErrorType::Det,
        ErrorType::Prep,
        ErrorType::Punct,
        ErrorType::Spell,
        ErrorType::Verb,
        ErrorType::Noun,
        ErrorType::Adj,
        ErrorType::Other,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ErrorType::Det => "DET",
            ErrorType::Prep => "PREP",
            ErrorType::Punct => "PUNCT",
            ErrorType::Spell => "SPELL",
            ErrorType::Verb => "VERB",
            ErrorType::Noun => "NOUN",
            ErrorType::Adj => "ADJ",
            ErrorType::Other => "OTHER",
        }
    }
}

impl fmt::Display for ErrorType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ErrorType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ErrorType::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown error type {s:?}")))
    }
}

/// An incorrect sentence (`src`) and its correction (`tgt`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SentencePair {
    pub pair_id: u32,
    pub src: Vec<String>,
    pub tgt: Vec<String>,
    pub gold_edits: Vec<Edit>,
}

impl SentencePair {
    pub fn is_identical(&self) -> bool {
        self.src == self.tgt
    }

    /// The gold edit a retrieved example anchored at target position `pos`
    /// illustrates. Edits with a non-empty target span take precedence
    /// over a deletion at the same position.
    pub fn edit_covering(&self, pos: usize) -> Option<&Edit> {
        self.gold_edits
            .iter()
            .find(|e| !e.tgt_span.is_empty() && e.tgt_span.contains(pos))
            .or_else(|| self.gold_edits.iter().find(|e| e.covers_target(pos)))
    }
}

/// Keeps the pairs whose source and target differ, in order.
pub fn filter_identical(pairs: Vec<SentencePair>) -> Vec<SentencePair> {
    pairs.into_iter().filter(|p| !p.is_identical()).collect()
}

#[derive(Serialize, Deserialize)]
struct EditRecord {
    src_span: Span,
    tgt_span: Span,
    #[serde(rename = "type")]
    error_type: ErrorType,
}

#[derive(Serialize, Deserialize)]
struct PairRecord {
    pair_id: u32,
    src: String,
    tgt: String,
    edits: Vec<EditRecord>,
}

impl PairRecord {
    fn from_pair(p: &SentencePair) -> Self {
        PairRecord {
            pair_id: p.pair_id,
            src: p.src.join(" "),
            tgt: p.tgt.join(" "),
            edits: p
                .gold_edits
                .iter()
                .map(|e| EditRecord {
                    src_span: e.src_span,
                    tgt_span: e.tgt_span,
                    error_type: e.error_type,
                })
                .collect(),
        }
    }

    fn into_pair(self, line: usize) -> Result<SentencePair> {
        let src = split_words(&self.src);
        let tgt = split_words(&self.tgt);
        let bad = |reason: String| Error::Malformed { line, reason };
        let mut gold_edits = Vec::with_capacity(self.edits.len());
        for r in self.edits {
            if r.src_span.lo > r.src_span.hi
                || r.src_span.hi > src.len()
                || r.tgt_span.lo > r.tgt_span.hi
                || r.tgt_span.hi > tgt.len()
            {
                return Err(bad(format!(
                    "edit span out of range: {:?} {:?}",
                    r.src_span, r.tgt_span
                )));
            }
            let op = match (r.src_span.is_empty(), r.tgt_span.is_empty()) {
                (true, true) => return Err(bad("edit with two empty spans".into())),
                (true, false) => EditOp::Insert,
                (false, true) => EditOp::Delete,
                (false, false) => EditOp::Substitute,
            };
            gold_edits.push(Edit {
                src_span: r.src_span,
                tgt_span: r.tgt_span,
                op,
                src_tokens: src[r.src_span.lo..r.src_span.hi].to_vec(),
                tgt_tokens: tgt[r.tgt_span.lo..r.tgt_span.hi].to_vec(),
                error_type: r.error_type,
            });
        }
        if align::apply_edits(&src, &gold_edits) != tgt {
            return Err(bad("gold edits do not turn src into tgt".into()));
        }
        Ok(SentencePair {
            pair_id: self.pair_id,
            src,
            tgt,
            gold_edits,
        })
    }
}

/// Sentence pairs addressable by `pair_id`.
#[derive(Clone, Debug, Default)]
pub struct Corpus {
    pairs: Vec<SentencePair>,
    by_id: HashMap<u32, usize>,
}

impl Corpus {
    pub fn new(pairs: Vec<SentencePair>) -> Result<Self> {
        let mut by_id = HashMap::with_capacity(pairs.len());
        for (i, p) in pairs.iter().enumerate() {
            if by_id.insert(p.pair_id, i).is_some() {
                return Err(Error::InvalidInput(format!(
                    "duplicate pair id {}",
                    p.pair_id
                )));
            }
        }
        Ok(Corpus { pairs, by_id })
    }

    pub fn pairs(&self) -> &[SentencePair] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn get(&self, pair_id: u32) -> Option<&SentencePair> {
        self.by_id.get(&pair_id).map(|&i| &self.pairs[i])
    }

    pub fn resolve(&self, pair_id: u32) -> Result<&SentencePair> {
        self.get(pair_id).ok_or(Error::CorpusResolution(pair_id))
    }

    /// Appends pairs, e.g. held-out items planted into a datastore corpus.
    pub fn extend(&mut self, pairs: impl IntoIterator<Item = SentencePair>) -> Result<()> {
        for p in pairs {
            if self.by_id.contains_key(&p.pair_id) {
                return Err(Error::InvalidInput(format!(
                    "duplicate pair id {}",
                    p.pair_id
                )));
            }
            self.by_id.insert(p.pair_id, self.pairs.len());
            self.pairs.push(p);
        }
        Ok(())
    }

    pub fn max_pair_id(&self) -> Option<u32> {
        self.pairs.iter().map(|p| p.pair_id).max()
    }

    pub fn write_to<W: Write>(&self, w: W) -> Result<()> {
        write_pairs(&self.pairs, w)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_to(fs::File::create(path)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Corpus::new(read_pairs(BufReader::new(fs::File::open(path)?))?)
    }
}

/// Train, dev and test pairs from one generated stream, in that order.
/// Pair ids are unique across the three splits.
#[derive(Clone, Debug)]
pub struct Splits {
    pub train: Vec<SentencePair>,
    pub dev: Vec<SentencePair>,
    pub test: Vec<SentencePair>,
}

/// Samples clean sentences from the bundled grammar with `text_seed`,
/// corrupts them with `rng_seed`, and cuts the first
/// `n_train + n_dev + n_test` pairs.
pub fn synthetic_splits(
    n_train: usize,
    n_dev: usize,
    n_test: usize,
    text_seed: u64,
    rng_seed: u64,
    rules: &CorruptionRules,
) -> Result<Splits> {
    let need = n_train + n_dev + n_test;
    if need == 0 {
        return Err(Error::InvalidInput("no pairs requested".into()));
    }
    let mut sampled = need + need / 4 + 64;
    let pairs = loop {
        let text = grammar::SentenceGrammar::new(text_seed).sample(sampled);
        let pairs = generate_corpus(&text, rng_seed, rules)?;
        if pairs.len() >= need {
            break pairs;
        }
        if sampled > 8 * need + 1024 {
            return Err(Error::InvalidConfig(format!(
                "rules produced {} pairs from {sampled} sentences, {need} needed",
                pairs.len()
            )));
        }
        sampled *= 2;
    };
    let mut it = pairs.into_iter();
    let train = it.by_ref().take(n_train).collect();
    let dev = it.by_ref().take(n_dev).collect();
    let test = it.take(n_test).collect();
    Ok(Splits { train, dev, test })
}

/// Writes one JSON record per line.
pub fn write_pairs<W: Write>(pairs: &[SentencePair], w: W) -> Result<()> {
    let mut w = BufWriter::new(w);
    for p in pairs {
        serde_json::to_writer(&mut w, &PairRecord::from_pair(p))?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_pairs<R: BufRead>(r: R) -> Result<Vec<SentencePair>> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: PairRecord = serde_json::from_str(&line).map_err(|e| Error::Malformed {
            line: i + 1,
            reason: e.to_string(),
        })?;
        out.push(rec.into_pair(i + 1)?);
    }
    Ok(out)
}
