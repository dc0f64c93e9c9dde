use serde::{Deserialize, Serialize};

use crate::align::Edit;
use crate::corpus::{Example, SentencePair};
use crate::engine::{Engine, Method};
use crate::error::Result;
use crate::knn_decode::DecodeConfig;

/// Agreement between a method's presented examples and the edits they
/// illustrate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodMatch {
    pub method: String,
    pub edits: usize,
    pub with_example: usize,
    pub edit_matches: usize,
    pub type_matches: usize,
    /// Over all edits; edits without an example count as misses.
    pub edit_match_pct: f64,
    pub type_match_pct: f64,
    /// Over edits that received an example.
    pub edit_match_pct_found: f64,
    pub type_match_pct_found: f64,
}

fn pct(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        100.0 * num as f64 / den as f64
    }
}

/// An edit matches when the example's anchor edit has the same operation
/// and tokens; its type matches when the error types agree.
pub fn match_method(method: &str, items: &[(Edit, Option<Example>)]) -> MethodMatch {
    let (mut with_example, mut edit_matches, mut type_matches) = (0, 0, 0);
    for (edit, ex) in items {
        let Some(ex) = ex else { continue };
        with_example += 1;
        if let Some(anchor) = &ex.anchor_edit {
            if anchor.signature() == edit.signature() {
                edit_matches += 1;
            }
            if anchor.error_type == edit.error_type {
                type_matches += 1;
            }
        }
    }
    let edits = items.len();
    MethodMatch {
        method: method.to_string(),
        edits,
        with_example,
        edit_matches,
        type_matches,
        edit_match_pct: pct(edit_matches, edits),
        type_match_pct: pct(type_matches, edits),
        edit_match_pct_found: pct(edit_matches, with_example),
        type_match_pct_found: pct(type_matches, with_example),
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MatchReport {
    pub methods: Vec<MethodMatch>,
}

impl MatchReport {
    pub fn get(&self, method: &str) -> Option<&MethodMatch> {
        self.methods.iter().find(|m| m.method == method)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "method,edits,with_example,edit_matches,type_matches,edit_match_pct,type_match_pct,edit_match_pct_found,type_match_pct_found\n",
        );
        for m in &self.methods {
            out.push_str(&format!(
                "{},{},{},{},{},{:.2},{:.2},{:.2},{:.2}\n",
                m.method,
                m.edits,
                m.with_example,
                m.edit_matches,
                m.type_matches,
                m.edit_match_pct,
                m.type_match_pct,
                m.edit_match_pct_found,
                m.type_match_pct_found
            ));
        }
        out
    }

    pub fn summary(&self) -> String {
        let mut out = String::new();
        for m in &self.methods {
            out.push_str(&format!(
                "{:<6} edits {:>5}  with example {:>5}  edit match {:>6.2}% ({:>6.2}% of found)  type match {:>6.2}% ({:>6.2}% of found)\n",
                m.method,
                m.edits,
                m.with_example,
                m.edit_match_pct,
                m.edit_match_pct_found,
                m.type_match_pct,
                m.type_match_pct_found
            ));
        }
        out
    }
}

pub fn matching_analysis(per_method: &[(String, Vec<(Edit, Option<Example>)>)]) -> MatchReport {
    MatchReport {
        methods: per_method
            .iter()
            .map(|(name, items)| match_method(name, items))
            .collect(),
    }
}

/// Decodes each source once, then attaches examples to the same output
/// edits from every method.
pub fn collect_examples(
    engine: &Engine,
    pairs: &[SentencePair],
    config: &DecodeConfig,
) -> Result<Vec<(String, Vec<(Edit, Option<Example>)>)>> {
    let mut per_method: Vec<(String, Vec<(Edit, Option<Example>)>)> = Method::ALL
        .iter()
        .map(|m| (m.to_string(), Vec::new()))
        .collect();
    for p in pairs {
        let c = engine.correct(&p.src, Method::Eb, config)?;
        let edits: Vec<Edit> = c.edits.iter().map(|(e, _)| e.clone()).collect();
        let text = p.src.join(" ");
        per_method[0].1.extend(c.edits);
        for (slot, method) in [(1, Method::Token), (2, Method::Embed)] {
            let items = engine.baseline_examples(method, &text, &c.output, edits.clone(), config.k)?;
            per_method[slot].1.extend(items);
        }
    }
    Ok(per_method)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::align::{extract_edits, WordLists};

    fn w(s: &str) -> Vec<String> {
        s.split(' ').map(String::from).collect()
    }

    fn planted() -> Vec<(Edit, Option<Example>)> {
        let lists = WordLists::default();
        let (src, tgt) = (w("They have tremendous problem ."), w("They have a tremendous problem ."));
        let edit = extract_edits(&src, &tgt, &lists).remove(0);
        let pair = SentencePair {
            pair_id: 0,
            src,
            tgt,
            gold_edits: vec![edit.clone()],
        };
        vec![(edit.clone(), Some(Example::anchored(&pair, edit.anchor_position(), 0.0)))]
    }

    #[test]
    fn self_examples_match_fully() {
        let m = match_method("eb", &planted());
        assert_eq!((m.edit_match_pct, m.type_match_pct), (100.0, 100.0));
    }

    #[test]
    fn missing_examples_match_nothing() {
        let items: Vec<_> = planted().into_iter().map(|(e, _)| (e, None)).collect();
        let m = match_method("token", &items);
        assert_eq!((m.edit_match_pct, m.type_match_pct, m.with_example), (0.0, 0.0, 0));
        assert_eq!(m.edit_match_pct_found, 0.0);
    }

    #[test]
    fn report_renders_every_method() {
        let r = matching_analysis(&[("eb".into(), planted()), ("embed".into(), vec![])]);
        assert_eq!(r.to_csv().lines().count(), 3);
        assert!(r.summary().contains("embed"));
        assert_eq!(r.get("embed").unwrap().edits, 0);
    }
}
