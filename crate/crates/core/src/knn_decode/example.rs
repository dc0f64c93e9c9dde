use crate::align::{extract_edits, gestalt_align, Edit, WordLists};
use crate::corpus::{Corpus, Vocab, UNK};
use crate::error::Result;

use super::beam::{CorrectionResult, StepRecord};

pub use crate::corpus::Example;

/// The nearest neighbor whose value token is the emitted token, resolved
/// against `corpus`. `None` when no neighbor agrees with the token or the
/// nearest agreeing one lies beyond `threshold`.
pub fn choose_example(step: &StepRecord, corpus: &Corpus, threshold: Option<f32>) -> Result<Option<Example>> {
    let Some(n) = step.neighbors.iter().find(|n| n.value.token == step.token) else {
        return Ok(None);
    };
    if matches!(threshold, Some(t) if n.squared_distance > t) {
        return Ok(None);
    }
    let pair = corpus.resolve(n.value.pair_id)?;
    Ok(Some(Example::anchored(
        pair,
        n.value.position as usize,
        n.squared_distance,
    )))
}

/// Output words with copied unknown tokens restored to the source words
/// they stand for.
pub fn output_words(result: &CorrectionResult, src: &[String], vocab: &Vocab) -> Vec<String> {
    let src_ids = vocab.encode_words(src);
    let out = result.tokens();
    let mut words = vocab.words(out);
    for b in gestalt_align(src_ids.ids(), out) {
        for i in 0..b.len {
            if out[b.b + i] == UNK {
                words[b.b + i] = src[b.a + i].clone();
            }
        }
    }
    words
}

/// The edits turning `src` into the corrected output, left to right, each
/// with the example chosen at its anchor step.
pub fn present(
    result: &CorrectionResult,
    src: &[String],
    vocab: &Vocab,
    lists: &WordLists,
) -> Vec<(Edit, Option<Example>)> {
    let out = output_words(result, src, vocab);
    extract_edits(src, &out, lists)
        .into_iter()
        .map(|e| {
            let ex = result
                .per_step
                .get(e.anchor_position())
                .and_then(|s| s.example.clone());
            (e, ex)
        })
        .collect()
}
