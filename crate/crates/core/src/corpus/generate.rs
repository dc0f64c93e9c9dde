use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::align::{Edit, EditOp, Span};
use crate::error::{Error, Result};

use super::grammar::{ADJECTIVES, NOUNS, PREPOSITIONS, VERBS};
use super::{split_words, ErrorType, SentencePair};

/// One corruption family. `weight` is its relative firing rate among the
/// sites eligible in a sentence; a zero weight never fires.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RuleConfig {
    pub enabled: bool,
    pub weight: f64,
}

impl RuleConfig {
    pub fn on(weight: f64) -> Self {
        RuleConfig {
            enabled: true,
            weight,
        }
    }

    pub fn off() -> Self {
        RuleConfig {
            enabled: false,
            weight: 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorruptionRules {
    /// Article drop or swap.
    pub det: RuleConfig,
    pub prep: RuleConfig,
    /// Comma or sentence-final period drop.
    pub punct: RuleConfig,
    /// Character noise on nouns and adjectives.
    pub spell: RuleConfig,
    pub verb: RuleConfig,
    /// Errors per sentence are drawn uniformly from this inclusive range.
    pub min_errors: usize,
    pub max_errors: usize,
}

impl Default for CorruptionRules {
    fn default() -> Self {
        CorruptionRules {
            det: RuleConfig::on(3.0),
            prep: RuleConfig::on(2.0),
            punct: RuleConfig::on(1.0),
            spell: RuleConfig::on(1.0),
            verb: RuleConfig::on(1.5),
            min_errors: 1,
            max_errors: 2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Rule {
    Det,
    Prep,
    Punct,
    Spell,
    Verb,
}

impl Rule {
    fn error_type(self) -> ErrorType {
        match self {
            Rule::Det => ErrorType::Det,
            Rule::Prep => ErrorType::Prep,
            Rule::Punct => ErrorType::Punct,
            Rule::Spell => ErrorType::Spell,
            Rule::Verb => ErrorType::Verb,
        }
    }
}

impl CorruptionRules {
    fn active(&self) -> Vec<(Rule, f64)> {
        [
            (Rule::Det, self.det),
            (Rule::Prep, self.prep),
            (Rule::Punct, self.punct),
            (Rule::Spell, self.spell),
            (Rule::Verb, self.verb),
        ]
        .into_iter()
        .filter(|(_, c)| c.enabled)
        .map(|(r, c)| (r, c.weight))
        .collect()
    }

    fn validate(&self) -> Result<()> {
        if self.active().is_empty() {
            return Err(Error::InvalidConfig("all corruption rules are disabled".into()));
        }
        for (_, w) in self.active() {
            if !(w >= 0.0 && w.is_finite()) {
                return Err(Error::InvalidConfig(format!("rule weight {w} must be >= 0")));
            }
        }
        if self.min_errors > self.max_errors {
            return Err(Error::InvalidConfig(format!(
                "min_errors {} > max_errors {}",
                self.min_errors, self.max_errors
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Op {
    Keep,
    Drop,
    Replace(String),
}

fn eligible(rule: Rule, tokens: &[String], pos: usize) -> bool {
    let t = tokens[pos].as_str();
    match rule {
        Rule::Det => matches!(t.to_lowercase().as_str(), "a" | "an" | "the"),
        Rule::Prep => PREPOSITIONS.contains(&t),
        Rule::Punct => t == "," || (t == "." && pos + 1 == tokens.len()),
        Rule::Spell => {
            t.len() >= 4 && (NOUNS.contains(&t) || ADJECTIVES.contains(&t)) && !spelling_variants(t).is_empty()
        }
        Rule::Verb => VERBS
            .iter()
            .any(|(b, s, p)| t == *b || t == *s || t == *p),
    }
}

fn match_case(template: &str, w: &str) -> String {
    if template.chars().next().is_some_and(char::is_uppercase) {
        let mut c = w.chars();
        c.next()
            .map(|f| f.to_uppercase().chain(c).collect())
            .unwrap_or_default()
    } else {
        w.to_string()
    }
}

/// Deterministic misspellings of `w`: swap of its second and third
/// letters, loss of its second-to-last letter, doubling of its second
/// letter. The first and last letters are always kept.
fn spelling_variants(w: &str) -> Vec<String> {
    let c: Vec<char> = w.chars().collect();
    let n = c.len();
    let mut out = Vec::new();
    if n >= 4 {
        let mut s = c.clone();
        s.swap(1, 2);
        out.push(s.into_iter().collect::<String>());
        let mut d = c.clone();
        d.remove(n - 2);
        out.push(d.into_iter().collect());
        let mut e = c.clone();
        e.insert(1, c[1]);
        out.push(e.into_iter().collect());
    }
    out.retain(|v| v != w);
    out.dedup();
    out
}

fn corrupt(rule: Rule, tok: &str, rng: &mut ChaCha8Rng) -> Op {
    match rule {
        Rule::Det => {
            if rng.gen_bool(0.5) {
                return Op::Drop;
            }
            let lower = tok.to_lowercase();
            let others: Vec<&str> = ["a", "an", "the"]
                .into_iter()
                .filter(|a| *a != lower)
                .collect();
            Op::Replace(match_case(tok, others.choose(rng).unwrap()))
        }
        Rule::Prep => {
            let others: Vec<&&str> = PREPOSITIONS.iter().filter(|p| **p != tok).collect();
            Op::Replace(others.choose(rng).unwrap().to_string())
        }
        Rule::Punct => Op::Drop,
        Rule::Spell => Op::Replace(spelling_variants(tok).choose(rng).unwrap().clone()),
        Rule::Verb => {
            let (base, third, _) = *VERBS
                .iter()
                .find(|(b, s, p)| tok == *b || tok == *s || tok == *p)
                .unwrap();
            let w = if tok == base {
                third
            } else if tok == third {
                base
            } else if rng.gen_bool(0.5) {
                base
            } else {
                third
            };
            Op::Replace(w.to_string())
        }
    }
}

/// Corrupts one clean sentence. Corrupted positions are never adjacent so
/// each one surfaces as its own edit.
fn corrupt_sentence(
    clean: &[String],
    rules: &CorruptionRules,
    rng: &mut ChaCha8Rng,
) -> Option<(Vec<String>, Vec<Edit>)> {
    let active = rules.active();
    let n_errors = rng.gen_range(rules.min_errors..=rules.max_errors);
    let mut ops = vec![Op::Keep; clean.len()];
    let mut fired = Vec::new();
    for _ in 0..n_errors {
        let free = |p: usize, ops: &[Op]| {
            ops[p] == Op::Keep
                && (p == 0 || ops[p - 1] == Op::Keep)
                && (p + 1 >= ops.len() || ops[p + 1] == Op::Keep)
        };
        let sites: Vec<(Rule, usize, f64)> = (0..clean.len())
            .filter(|&p| free(p, &ops))
            .flat_map(|p| {
                active
                    .iter()
                    .filter(move |(r, w)| *w > 0.0 && eligible(*r, clean, p))
                    .map(move |&(r, w)| (r, p, w))
            })
            .collect();
        if sites.is_empty() {
            break;
        }
        let dist = WeightedIndex::new(sites.iter().map(|s| s.2)).ok()?;
        let (rule, pos, _) = sites[dist.sample(rng)];
        ops[pos] = corrupt(rule, &clean[pos], rng);
        fired.push((pos, rule));
    }
    if fired.is_empty() {
        return None;
    }
    let mut src = Vec::with_capacity(clean.len());
    let mut edits = Vec::new();
    for (p, op) in ops.iter().enumerate() {
        let s = src.len();
        let rule = fired.iter().find(|(q, _)| *q == p).map(|(_, r)| *r);
        match op {
            Op::Keep => src.push(clean[p].clone()),
            Op::Drop => edits.push(Edit {
                src_span: Span::new(s, s),
                tgt_span: Span::new(p, p + 1),
                op: EditOp::Insert,
                src_tokens: vec![],
                tgt_tokens: vec![clean[p].clone()],
                error_type: rule.unwrap().error_type(),
            }),
            Op::Replace(w) => {
                src.push(w.clone());
                edits.push(Edit {
                    src_span: Span::new(s, s + 1),
                    tgt_span: Span::new(p, p + 1),
                    op: EditOp::Substitute,
                    src_tokens: vec![w.clone()],
                    tgt_tokens: vec![clean[p].clone()],
                    error_type: rule.unwrap().error_type(),
                })
            }
        }
    }
    if src.is_empty() || src == clean {
        return None;
    }
    Some((src, edits))
}

/// Corrupts each clean sentence of `seed_text` and keeps the pairs where at
/// least one rule fired. Sentence `i` draws its randomness from stream `i`
/// of a generator seeded with `rng_seed`, so the output depends only on the
/// inputs. Pair ids are assigned consecutively from 0.
pub fn generate_corpus(
    seed_text: &[String],
    rng_seed: u64,
    rules: &CorruptionRules,
) -> Result<Vec<SentencePair>> {
    if seed_text.is_empty() {
        return Err(Error::InvalidInput("seed text is empty".into()));
    }
    rules.validate()?;
    let mut pairs = Vec::new();
    for (i, line) in seed_text.iter().enumerate() {
        let clean = split_words(line);
        if clean.is_empty() {
            continue;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
        rng.set_stream(i as u64);
        if let Some((src, gold_edits)) = corrupt_sentence(&clean, rules, &mut rng) {
            pairs.push(SentencePair {
                pair_id: pairs.len() as u32,
                src,
                tgt: clean,
                gold_edits,
            });
        }
    }
    Ok(pairs)
}
