//! Corrects a sentence and presents, for each edit, the training pair whose
//! decoder state supported the emitted token.
//!
//! The demo pair "They have tremendous problem ." / "They have a tremendous
//! problem ." is planted in the datastore so its own example is retrieved.

#[path = "common/mod.rs"]
mod common;

use ebgec::align::{extract_edits, WordLists};
use ebgec::corpus::SentencePair;
use ebgec::engine::Method;
use ebgec::knn_decode::DecodeConfig;

fn main() -> ebgec::Result<()> {
    let (engine, splits) = common::engine();
    let src = common::words("They have tremendous problem .");
    let tgt = common::words("They have a tremendous problem .");
    let demo = SentencePair {
        pair_id: engine.corpus.max_pair_id().unwrap_or(0) + 1,
        gold_edits: extract_edits(&src, &tgt, &WordLists::default()),
        src: src.clone(),
        tgt,
    };
    let engine = engine.with_planted(&[demo])?;
    let config = DecodeConfig::default();

    let mut inputs = vec![src];
    inputs.extend(splits.test.iter().take(3).map(|p| p.src.clone()));
    for words in &inputs {
        let c = engine.correct(words, Method::Eb, &config)?;
        println!("input:     {}", words.join(" "));
        println!("corrected: {}", c.output.join(" "));
        for (e, ex) in &c.edits {
            println!("  [{}] {:?} -> {:?}", e.error_type.as_str(), e.src_tokens, e.tgt_tokens);
            match ex {
                Some(ex) => println!(
                    "      example (distance {:.2}): {}  =>  {}",
                    ex.squared_distance,
                    ex.src.join(" "),
                    ex.tgt.join(" ")
                ),
                None => println!("      no example"),
            }
        }
        println!();
    }
    Ok(())
}
