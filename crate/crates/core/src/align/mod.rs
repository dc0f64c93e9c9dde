//! Token alignment and edit extraction.
//!
//! Alignment is Ratcliff/Obershelp ("gestalt") matching over token
//! sequences: find the longest common contiguous block, then recurse on the
//! unmatched stretches to its left and right. Gaps between consecutive
//! matching blocks become [`Edit`]s.

mod classify;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::corpus::ErrorType;

pub use classify::{classify_error, WordLists};

/// A maximal run of equal tokens: `a[a..a + len] == b[b..b + len]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MatchBlock {
    pub a: usize,
    pub b: usize,
    pub len: usize,
}

/// Half-open token range `[lo, hi)`, serialized as a two-element array.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "[usize; 2]", into = "[usize; 2]")]
pub struct Span {
    pub lo: usize,
    pub hi: usize,
}

impl Span {
    pub fn new(lo: usize, hi: usize) -> Self {
        debug_assert!(lo <= hi);
        Span { lo, hi }
    }

    pub fn len(&self) -> usize {
        self.hi - self.lo
    }

    pub fn is_empty(&self) -> bool {
        self.lo == self.hi
    }

    pub fn contains(&self, pos: usize) -> bool {
        self.lo <= pos && pos < self.hi
    }
}

impl From<[usize; 2]> for Span {
    fn from([lo, hi]: [usize; 2]) -> Self {
        Span { lo, hi }
    }
}

impl From<Span> for [usize; 2] {
    fn from(s: Span) -> Self {
        [s.lo, s.hi]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EditOp {
    Insert,
    Delete,
    Substitute,
}

impl EditOp {
    fn from_spans(src: Span, tgt: Span) -> Option<Self> {
        match (src.is_empty(), tgt.is_empty()) {
            (true, true) => None,
            (true, false) => Some(EditOp::Insert),
            (false, true) => Some(EditOp::Delete),
            (false, false) => Some(EditOp::Substitute),
        }
    }
}

/// One aligned change between a source and a target sentence.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edit {
    pub src_span: Span,
    pub tgt_span: Span,
    pub op: EditOp,
    pub src_tokens: Vec<String>,
    pub tgt_tokens: Vec<String>,
    pub error_type: ErrorType,
}

/// The part of an edit that identifies the correction itself, independent
/// of where it sits in a sentence.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EditSignature {
    pub op: EditOp,
    pub src_tokens: Vec<String>,
    pub tgt_tokens: Vec<String>,
}

impl Edit {
    /// Builds an edit from spans over `src`/`tgt`, typing it with `lists`.
    /// Returns `None` when both spans are empty.
    pub fn from_spans(
        src: &[String],
        tgt: &[String],
        src_span: Span,
        tgt_span: Span,
        lists: &WordLists,
    ) -> Option<Edit> {
        let op = EditOp::from_spans(src_span, tgt_span)?;
        let mut edit = Edit {
            src_span,
            tgt_span,
            op,
            src_tokens: src[src_span.lo..src_span.hi].to_vec(),
            tgt_tokens: tgt[tgt_span.lo..tgt_span.hi].to_vec(),
            error_type: ErrorType::Other,
        };
        edit.error_type = classify_error(&edit, lists);
        Some(edit)
    }

    pub fn signature(&self) -> EditSignature {
        EditSignature {
            op: self.op,
            src_tokens: self.src_tokens.clone(),
            tgt_tokens: self.tgt_tokens.clone(),
        }
    }

    /// Target position an example for this edit is anchored on: the first
    /// token of the target span. For deletions this is the token that
    /// follows the removed material (EOS when at the end).
    pub fn anchor_position(&self) -> usize {
        self.tgt_span.lo
    }

    /// Whether this edit is the one a retrieved example at target position
    /// `pos` illustrates.
    pub fn covers_target(&self, pos: usize) -> bool {
        if self.tgt_span.is_empty() {
            self.tgt_span.lo == pos
        } else {
            self.tgt_span.contains(pos)
        }
    }
}

impl fmt::Display for Edit {
    /// `src/tgt` notation, with an empty side shown as `_`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let side = |toks: &[String]| {
            if toks.is_empty() {
                "_".to_string()
            } else {
                toks.join(" ")
            }
        };
        write!(f, "{}/{}", side(&self.src_tokens), side(&self.tgt_tokens))
    }
}

/// Longest common contiguous block of `a[alo..ahi]` and `b[blo..bhi]`.
/// Among blocks of equal length the earliest in `a`, then in `b`, wins.
fn longest_block<T: PartialEq>(
    a: &[T],
    b: &[T],
    (alo, ahi): (usize, usize),
    (blo, bhi): (usize, usize),
) -> MatchBlock {
    let mut best = MatchBlock { a: alo, b: blo, len: 0 };
    // cur[j + 1]: length of the common run ending at a[i], b[blo + j]
    let width = bhi - blo;
    let mut prev = vec![0usize; width + 1];
    let mut cur = vec![0usize; width + 1];
    for i in alo..ahi {
        for j in 0..width {
            cur[j + 1] = if a[i] == b[blo + j] { prev[j] + 1 } else { 0 };
            let len = cur[j + 1];
            if len > 0 {
                let (sa, sb) = (i + 1 - len, blo + j + 1 - len);
                if len > best.len || (len == best.len && (sa, sb) < (best.a, best.b)) {
                    best = MatchBlock { a: sa, b: sb, len };
                }
            }
        }
        std::mem::swap(&mut prev, &mut cur);
        cur[0] = 0;
    }
    best
}

/// Ratcliff/Obershelp matching blocks of `a` against `b`, ordered and
/// non-overlapping in both sequences.
pub fn gestalt_align<T: PartialEq>(a: &[T], b: &[T]) -> Vec<MatchBlock> {
    let mut blocks = Vec::new();
    let mut stack = vec![(0, a.len(), 0, b.len())];
    while let Some((alo, ahi, blo, bhi)) = stack.pop() {
        if alo >= ahi || blo >= bhi {
            continue;
        }
        let m = longest_block(a, b, (alo, ahi), (blo, bhi));
        if m.len == 0 {
            continue;
        }
        blocks.push(m);
        // right pushed first so the left side is processed next; order is
        // restored by the sort below either way
        stack.push((m.a + m.len, ahi, m.b + m.len, bhi));
        stack.push((alo, m.a, blo, m.b));
    }
    blocks.sort_by_key(|m| m.a);
    blocks
}

/// `2 * matched / (len(a) + len(b))`; two empty sequences are identical.
pub fn similarity(blocks: &[MatchBlock], len_a: usize, len_b: usize) -> f64 {
    if len_a + len_b == 0 {
        return 1.0;
    }
    let matched: usize = blocks.iter().map(|m| m.len).sum();
    2.0 * matched as f64 / (len_a + len_b) as f64
}

/// Edits turning `src` into `tgt`, one per gap between matching blocks.
pub fn extract_edits(src: &[String], tgt: &[String], lists: &WordLists) -> Vec<Edit> {
    let mut blocks = gestalt_align(src, tgt);
    blocks.push(MatchBlock {
        a: src.len(),
        b: tgt.len(),
        len: 0,
    });
    let (mut ia, mut ib) = (0, 0);
    let mut edits = Vec::new();
    for m in blocks {
        let src_span = Span::new(ia, m.a);
        let tgt_span = Span::new(ib, m.b);
        if let Some(e) = Edit::from_spans(src, tgt, src_span, tgt_span, lists) {
            edits.push(e);
        }
        ia = m.a + m.len;
        ib = m.b + m.len;
    }
    edits
}

/// Replays `edits` (ordered, non-overlapping source spans) on `src`.
pub fn apply_edits<'a, I>(src: &[String], edits: I) -> Vec<String>
where
    I: IntoIterator<Item = &'a Edit>,
{
    let mut out = Vec::with_capacity(src.len() + 4);
    let mut cursor = 0;
    for e in edits {
        out.extend_from_slice(&src[cursor..e.src_span.lo]);
        out.extend(e.tgt_tokens.iter().cloned());
        cursor = e.src_span.hi;
    }
    out.extend_from_slice(&src[cursor..]);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_string).collect()
    }

    #[test]
    fn identical_sequences_form_one_block() {
        let a = toks("x y z");
        let blocks = gestalt_align(&a, &a);
        assert_eq!(blocks, vec![MatchBlock { a: 0, b: 0, len: 3 }]);
        assert_eq!(similarity(&blocks, 3, 3), 1.0);
    }

    #[test]
    fn disjoint_sequences_have_no_blocks() {
        let blocks = gestalt_align(&toks("x"), &toks("y"));
        assert!(blocks.is_empty());
        assert_eq!(similarity(&blocks, 1, 1), 0.0);
    }

    #[test]
    fn missing_article_splits_into_two_blocks() {
        let a = toks("They have tremendous problem .");
        let b = toks("They have a tremendous problem .");
        let blocks = gestalt_align(&a, &b);
        assert_eq!(
            blocks,
            vec![
                MatchBlock { a: 0, b: 0, len: 2 },
                MatchBlock { a: 2, b: 3, len: 3 },
            ]
        );
        let sim = similarity(&blocks, a.len(), b.len());
        assert!((sim - 10.0 / 11.0).abs() < 1e-12);
    }

    #[test]
    fn ties_prefer_earliest_in_a_then_b() {
        // "p" occurs twice in each; all single-token blocks tie
        let blocks = gestalt_align(&toks("p q p"), &toks("p r p"));
        assert_eq!(blocks[0], MatchBlock { a: 0, b: 0, len: 1 });
        assert_eq!(blocks[1], MatchBlock { a: 2, b: 2, len: 1 });
        let blocks = gestalt_align(&toks("p"), &toks("q p p"));
        assert_eq!(blocks, vec![MatchBlock { a: 0, b: 1, len: 1 }]);
    }

    #[test]
    fn missing_article_is_one_det_insert() {
        let lists = WordLists::default();
        let src = toks("They have tremendous problem .");
        let tgt = toks("They have a tremendous problem .");
        let edits = extract_edits(&src, &tgt, &lists);
        assert_eq!(edits.len(), 1);
        let e = &edits[0];
        assert_eq!(e.op, EditOp::Insert);
        assert_eq!(e.src_span, Span::new(2, 2));
        assert_eq!(e.tgt_span, Span::new(2, 3));
        assert_eq!(e.tgt_tokens, toks("a"));
        assert_eq!(e.error_type, ErrorType::Det);
        assert_eq!(e.to_string(), "_/a");
        assert_eq!(apply_edits(&src, &edits), tgt);
    }

    #[test]
    fn identical_sentences_have_no_edits() {
        let s = toks("We like the garden .");
        assert!(extract_edits(&s, &s, &WordLists::default()).is_empty());
    }

    #[test]
    fn delete_and_substitute_ops() {
        let lists = WordLists::default();
        let src = toks("She go to in school .");
        let tgt = toks("She goes to school .");
        let edits = extract_edits(&src, &tgt, &lists);
        assert_eq!(edits.len(), 2);
        assert_eq!(edits[0].op, EditOp::Substitute);
        assert_eq!(edits[1].op, EditOp::Delete);
        assert_eq!(edits[1].tgt_span, Span::new(3, 3));
        assert!(edits[1].covers_target(3));
        assert_eq!(apply_edits(&src, &edits), tgt);
    }

    #[test]
    fn empty_sides() {
        let lists = WordLists::default();
        let t = toks("a b");
        let ins = extract_edits(&[], &t, &lists);
        assert_eq!(ins.len(), 1);
        assert_eq!(ins[0].op, EditOp::Insert);
        let del = extract_edits(&t, &[], &lists);
        assert_eq!(del[0].op, EditOp::Delete);
        assert!(extract_edits(&[], &[], &lists).is_empty());
    }

    #[test]
    fn span_serializes_as_pair() {
        let s = Span::new(2, 3);
        assert_eq!(serde_json::to_string(&s).unwrap(), "[2,3]");
        let back: Span = serde_json::from_str("[4,4]").unwrap();
        assert!(back.is_empty());
    }
}
