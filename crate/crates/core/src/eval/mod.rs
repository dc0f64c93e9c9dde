//! Edit-level F0.5, a source-aware GLEU, the interpolation sweep, edit and
//! error-type agreement between corrections and their examples, and
//! usefulness rates from learner feedback.

mod gleu;
mod matching;
mod usefulness;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::align::{extract_edits, Edit, EditOp, Span, WordLists};
use crate::corpus::SentencePair;
use crate::engine::{Engine, Method};
use crate::error::{Error, Result};
use crate::knn_decode::DecodeConfig;

pub use gleu::gleu_lite;
pub use matching::{collect_examples, match_method, matching_analysis, MatchReport, MethodMatch};
pub use usefulness::{
    comparison_sheet, parse_reference, read_decision_log, usefulness_counts, usefulness_score, DecisionRecord,
    REFERENCE_USEFULNESS,
};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EditScore {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub precision: f64,
    pub recall: f64,
    pub f_half: f64,
}

impl EditScore {
    /// A ratio whose denominator is zero is 1 when the other error count is
    /// also zero and 0 otherwise, so empty hypothesis against empty gold
    /// scores 1 and any unmatched edit drives its side to 0.
    pub fn from_counts(tp: usize, fp: usize, fn_: usize) -> Self {
        let ratio = |num: usize, den: usize, other: usize| {
            if den == 0 {
                if other == 0 {
                    1.0
                } else {
                    0.0
                }
            } else {
                num as f64 / den as f64
            }
        };
        let precision = ratio(tp, tp + fp, fn_);
        let recall = ratio(tp, tp + fn_, fp);
        let f_half = if precision + recall == 0.0 {
            0.0
        } else {
            1.25 * precision * recall / (0.25 * precision + recall)
        };
        EditScore {
            tp,
            fp,
            fn_,
            precision,
            recall,
            f_half,
        }
    }
}

type EditKey<'a> = (Span, &'a [String], EditOp);

fn key(e: &Edit) -> EditKey<'_> {
    (e.src_span, &e.tgt_tokens, e.op)
}

/// Counts an edit as correct iff its source span, target tokens and
/// operation all equal those of a not-yet-matched gold edit of the same
/// sentence.
pub fn score_edits(hyp: &[Vec<Edit>], gold: &[Vec<Edit>]) -> Result<EditScore> {
    if hyp.len() != gold.len() {
        return Err(Error::InvalidInput(format!(
            "{} hypothesis sentences against {} gold",
            hyp.len(),
            gold.len()
        )));
    }
    let (mut tp, mut fp, mut fn_) = (0, 0, 0);
    for (h, g) in hyp.iter().zip(gold) {
        let mut pool: HashMap<EditKey, usize> = HashMap::new();
        for e in g {
            *pool.entry(key(e)).or_default() += 1;
        }
        for e in h {
            match pool.get_mut(&key(e)) {
                Some(n) if *n > 0 => {
                    *n -= 1;
                    tp += 1;
                }
                _ => fp += 1,
            }
        }
        fn_ += pool.values().sum::<usize>();
    }
    Ok(EditScore::from_counts(tp, fp, fn_))
}

/// Edit-level score of `outputs` against the targets of `pairs`; both
/// sides are re-extracted with the same aligner.
pub fn score_outputs(lists: &WordLists, pairs: &[SentencePair], outputs: &[Vec<String>]) -> Result<EditScore> {
    if pairs.len() != outputs.len() {
        return Err(Error::InvalidInput(format!(
            "{} outputs for {} pairs",
            outputs.len(),
            pairs.len()
        )));
    }
    let mut hyp = Vec::with_capacity(pairs.len());
    let mut gold = Vec::with_capacity(pairs.len());
    for (p, out) in pairs.iter().zip(outputs) {
        hyp.push(extract_edits(&p.src, out, lists));
        gold.push(extract_edits(&p.src, &p.tgt, lists));
    }
    score_edits(&hyp, &gold)
}

/// Sentence GLEU averaged over `pairs`, one reference each.
pub fn mean_gleu(pairs: &[SentencePair], outputs: &[Vec<String>]) -> Result<f64> {
    if pairs.is_empty() || pairs.len() != outputs.len() {
        return Err(Error::InvalidInput(format!(
            "{} outputs for {} pairs",
            outputs.len(),
            pairs.len()
        )));
    }
    let mut total = 0.0;
    for (p, out) in pairs.iter().zip(outputs) {
        total += gleu_lite(&p.src, out, std::slice::from_ref(&p.tgt), 4)?;
    }
    Ok(total / pairs.len() as f64)
}

/// Example-based decoding output for every source.
pub fn decode_outputs(engine: &Engine, pairs: &[SentencePair], config: &DecodeConfig) -> Result<Vec<Vec<String>>> {
    pairs
        .iter()
        .map(|p| engine.correct(&p.src, Method::Eb, config).map(|c| c.output))
        .collect()
}

pub fn vanilla_outputs(engine: &Engine, pairs: &[SentencePair], config: &DecodeConfig) -> Result<Vec<Vec<String>>> {
    pairs.iter().map(|p| engine.vanilla(&p.src, config)).collect()
}

/// Corrects every source with example-based decoding and scores against
/// the targets.
pub fn evaluate(engine: &Engine, pairs: &[SentencePair], config: &DecodeConfig) -> Result<EditScore> {
    score_outputs(&engine.lists, pairs, &decode_outputs(engine, pairs, config)?)
}

/// As [`evaluate`] with plain beam search.
pub fn evaluate_vanilla(engine: &Engine, pairs: &[SentencePair], config: &DecodeConfig) -> Result<EditScore> {
    score_outputs(&engine.lists, pairs, &vanilla_outputs(engine, pairs, config)?)
}

/// Interpolation values swept by default.
pub const DEFAULT_GRID: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub lambda: f64,
    pub score: EditScore,
}

/// One full evaluation per interpolation value, in grid order.
pub fn sweep_lambda(
    engine: &Engine,
    dev: &[SentencePair],
    config: &DecodeConfig,
    grid: &[f64],
) -> Result<Vec<SweepRow>> {
    grid.iter()
        .map(|&lambda| {
            Ok(SweepRow {
                lambda,
                score: evaluate(engine, dev, &config.with_lambda(lambda))?,
            })
        })
        .collect()
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("lambda,tp,fp,fn,precision,recall,f_half\n");
    for r in rows {
        let s = &r.score;
        out.push_str(&format!(
            "{},{},{},{},{:.6},{:.6},{:.6}\n",
            r.lambda, s.tp, s.fp, s.fn_, s.precision, s.recall, s.f_half
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn words(s: &str) -> Vec<String> {
        s.split(' ').map(String::from).collect()
    }

    fn edits(src: &str, tgt: &str) -> Vec<Edit> {
        extract_edits(&words(src), &words(tgt), &WordLists::default())
    }

    #[test]
    fn perfect_hypothesis() {
        let g = vec![edits("I saw cat .", "I saw a cat .")];
        let s = score_edits(&g, &g).unwrap();
        assert_eq!((s.precision, s.recall, s.f_half), (1.0, 1.0, 1.0));
    }

    #[test]
    fn silent_hypothesis_scores_zero() {
        let g = vec![edits("I saw cat .", "I saw a cat .")];
        let s = score_edits(&[vec![]], &g).unwrap();
        assert_eq!((s.tp, s.fp, s.fn_), (0, 0, 1));
        assert_eq!((s.precision, s.recall, s.f_half), (0.0, 0.0, 0.0));
    }

    #[test]
    fn one_of_each() {
        let s = EditScore::from_counts(1, 1, 1);
        assert_eq!((s.precision, s.recall), (0.5, 0.5));
        assert!((s.f_half - 0.5).abs() < 1e-12);
    }

    #[test]
    fn both_empty_is_perfect_and_spurious_edits_are_not() {
        let s = EditScore::from_counts(0, 0, 0);
        assert_eq!((s.precision, s.recall, s.f_half), (1.0, 1.0, 1.0));
        let s = EditScore::from_counts(0, 2, 0);
        assert_eq!((s.precision, s.recall, s.f_half), (0.0, 0.0, 0.0));
    }

    #[test]
    fn without_misses_f_half_is_precision_weighted() {
        let s = EditScore::from_counts(3, 1, 0);
        assert_eq!(s.recall, 1.0);
        assert!((s.f_half - 1.25 * 0.75 / (0.25 * 0.75 + 1.0)).abs() < 1e-12);
    }

    #[test]
    fn wrong_tokens_at_right_span_do_not_count() {
        let g = vec![edits("I saw cat .", "I saw a cat .")];
        let h = vec![edits("I saw cat .", "I saw the cat .")];
        let s = score_edits(&h, &g).unwrap();
        assert_eq!((s.tp, s.fp, s.fn_), (0, 1, 1));
        assert!(score_edits(&h, &[]).is_err());
    }

    #[test]
    fn sweep_csv_has_one_row_per_value() {
        let rows: Vec<SweepRow> = DEFAULT_GRID
            .iter()
            .map(|&lambda| SweepRow {
                lambda,
                score: EditScore::from_counts(1, 0, 0),
            })
            .collect();
        let csv = sweep_csv(&rows);
        assert_eq!(csv.lines().count(), 6);
        assert!(csv.lines().nth(2).unwrap().starts_with("0.25,"));
    }
}
