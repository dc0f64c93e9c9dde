//! Small end-to-end setup shared by the examples: a few hundred generated
//! pairs and a model trained for a handful of epochs. Quality is far below
//! the default setup but every stage runs in seconds.
#![allow(dead_code)]

use ebgec::align::WordLists;
use ebgec::corpus::{synthetic_splits, Corpus, CorruptionRules, SentencePair, Splits};
use ebgec::datastore::Datastore;
use ebgec::engine::Engine;
use ebgec::seq2seq::{fit, Seq2Seq, TrainConfig};

pub const TRAIN: usize = 3000;
pub const EPOCHS: usize = 15;

pub fn splits() -> Splits {
    synthetic_splits(TRAIN, 100, 100, 7, 11, &CorruptionRules::default()).expect("generator")
}

pub fn engine_from(train: &[SentencePair]) -> Engine {
    let config = TrainConfig {
        epochs: EPOCHS,
        ..Default::default()
    };
    let (vocab, params, report) = fit(train, &config).expect("training");
    eprintln!(
        "trained {} epochs on {} pairs, final loss {:.3}",
        EPOCHS,
        train.len(),
        report.epoch_losses.last().unwrap()
    );
    let model = Seq2Seq::new(params);
    let store = Datastore::build(&model, &vocab, train).expect("datastore");
    let corpus = Corpus::new(train.to_vec()).expect("corpus");
    Engine::new(model, vocab, store, corpus, WordLists::default()).expect("engine")
}

pub fn engine() -> (Engine, Splits) {
    let s = splits();
    (engine_from(&s.train), s)
}

pub fn words(s: &str) -> Vec<String> {
    s.split_whitespace().map(String::from).collect()
}
