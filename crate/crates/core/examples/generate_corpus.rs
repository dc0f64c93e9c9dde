//! Generates corrupted/clean sentence pairs and shows their gold edits.
//!
//! `cargo run --example generate_corpus -- [n]`

use ebgec::corpus::{synthetic_splits, CorruptionRules, ErrorType};
use std::collections::BTreeMap;

fn main() -> ebgec::Result<()> {
    let n: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(2000);
    let splits = synthetic_splits(n, 0, 0, 7, 11, &CorruptionRules::default())?;
    for p in splits.train.iter().take(6) {
        println!("src: {}\ntgt: {}", p.src.join(" "), p.tgt.join(" "));
        for e in &p.gold_edits {
            println!("     {:<5} {:?} -> {:?}", e.error_type.as_str(), e.src_tokens, e.tgt_tokens);
        }
    }
    let mut by_type: BTreeMap<ErrorType, usize> = BTreeMap::new();
    for e in splits.train.iter().flat_map(|p| &p.gold_edits) {
        *by_type.entry(e.error_type).or_default() += 1;
    }
    println!("\n{} pairs; gold edits by type:", splits.train.len());
    for (t, c) in by_type {
        println!("  {:<5} {c}", t.as_str());
    }
    Ok(())
}
