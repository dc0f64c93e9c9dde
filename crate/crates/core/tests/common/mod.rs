#![allow(dead_code)]

use std::sync::OnceLock;

use ebgec::align::{extract_edits, WordLists};
use ebgec::corpus::{synthetic_splits, Corpus, CorruptionRules, SentencePair, Splits, Vocab};
use ebgec::datastore::Datastore;
use ebgec::engine::Engine;
use ebgec::seq2seq::{fit, Params, Seq2Seq, TrainConfig};

pub struct Tiny {
    pub splits: Splits,
    pub vocab: Vocab,
    pub params: Params<f32>,
}

/// 400 pairs, 4 epochs: weak but fast, shared by every test of a binary.
pub fn tiny() -> &'static Tiny {
    static CELL: OnceLock<Tiny> = OnceLock::new();
    CELL.get_or_init(|| {
        let splits = synthetic_splits(400, 20, 20, 3, 5, &CorruptionRules::default()).unwrap();
        let config = TrainConfig {
            epochs: 4,
            ..Default::default()
        };
        let (vocab, params, _) = fit(&splits.train, &config).unwrap();
        Tiny { splits, vocab, params }
    })
}

pub fn engine() -> Engine {
    let t = tiny();
    let model = Seq2Seq::new(t.params.clone());
    let store = Datastore::build(&model, &t.vocab, &t.splits.train).unwrap();
    let corpus = Corpus::new(t.splits.train.clone()).unwrap();
    Engine::new(model, t.vocab.clone(), store, corpus, WordLists::default()).unwrap()
}

pub fn words(s: &str) -> Vec<String> {
    s.split_whitespace().map(String::from).collect()
}

/// A pair with a fresh id; `gold` false leaves its edits out of the token
/// baseline's index.
pub fn pair(engine: &Engine, src: &str, tgt: &str, gold: bool) -> SentencePair {
    let (src, tgt) = (words(src), words(tgt));
    SentencePair {
        pair_id: engine.corpus.max_pair_id().map_or(0, |m| m + 1),
        gold_edits: if gold {
            extract_edits(&src, &tgt, &engine.lists)
        } else {
            Vec::new()
        },
        src,
        tgt,
    }
}

pub const DEMO_SRC: &str = "They have tremendous problem .";
pub const DEMO_TGT: &str = "They have a tremendous problem .";
