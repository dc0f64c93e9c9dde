use std::collections::HashSet;
use std::fs;
use std::path::Path;

use crate::corpus::ErrorType;
use crate::error::Result;

use super::{Edit, EditOp};

const DETERMINERS: &str = include_str!("../../data/determiners.txt");
const PREPOSITIONS: &str = include_str!("../../data/prepositions.txt");
const PUNCTUATION: &str = include_str!("../../data/punctuation.txt");

/// Irregular verb paradigms; any two distinct members of a row are forms
/// of the same verb.
const IRREGULAR_VERBS: &[&[&str]] = &[
    &["be", "am", "is", "are", "was", "were", "been", "being"],
    &["have", "has", "had", "having"],
    &["do", "does", "did", "done", "doing"],
    &["go", "goes", "went", "gone", "going"],
    &["see", "sees", "saw", "seen", "seeing"],
    &["find", "finds", "found", "finding"],
    &["make", "makes", "made", "making"],
    &["take", "takes", "took", "taken", "taking"],
    &["buy", "buys", "bought", "buying"],
    &["write", "writes", "wrote", "written", "writing"],
    &["read", "reads", "reading"],
    &["bring", "brings", "brought", "bringing"],
    &["build", "builds", "built", "building"],
];

/// Closed-class word lists driving the heuristic error typer.
#[derive(Clone, Debug)]
pub struct WordLists {
    pub determiners: HashSet<String>,
    pub prepositions: HashSet<String>,
    pub punctuation: HashSet<String>,
}

fn parse_list(text: &str) -> HashSet<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_string)
        .collect()
}

impl Default for WordLists {
    /// The lists shipped in `data/`.
    fn default() -> Self {
        WordLists {
            determiners: parse_list(DETERMINERS),
            prepositions: parse_list(PREPOSITIONS),
            punctuation: parse_list(PUNCTUATION),
        }
    }
}

impl WordLists {
    /// Loads `determiners.txt`, `prepositions.txt` and `punctuation.txt`
    /// from `dir`, one token per line.
    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let read = |name: &str| -> Result<HashSet<String>> {
            Ok(parse_list(&fs::read_to_string(dir.join(name))?))
        };
        Ok(WordLists {
            determiners: read("determiners.txt")?,
            prepositions: read("prepositions.txt")?,
            punctuation: read("punctuation.txt")?,
        })
    }

    pub fn is_determiner(&self, tok: &str) -> bool {
        self.determiners.contains(&tok.to_lowercase())
    }

    pub fn is_preposition(&self, tok: &str) -> bool {
        self.prepositions.contains(&tok.to_lowercase())
    }

    pub fn is_punctuation(&self, tok: &str) -> bool {
        self.punctuation.contains(tok)
            || (!tok.is_empty() && tok.chars().all(|c| c.is_ascii_punctuation()))
    }
}

/// Candidate lemmas of an inflected regular verb form.
fn regular_lemmas(w: &str) -> Vec<String> {
    let mut out = vec![w.to_string()];
    let mut strip = |suffix: &str, add: &str| {
        if let Some(stem) = w.strip_suffix(suffix) {
            if stem.len() >= 2 {
                out.push(format!("{stem}{add}"));
            }
        }
    };
    strip("s", "");
    strip("es", "");
    strip("ies", "y");
    strip("ed", "");
    strip("d", "");
    strip("ied", "y");
    strip("ing", "");
    strip("ing", "e");
    out
}

fn is_verb_form_pair(a: &str, b: &str) -> bool {
    let (a, b) = (a.to_lowercase(), b.to_lowercase());
    if a == b || !a.chars().all(char::is_alphabetic) || !b.chars().all(char::is_alphabetic) {
        return false;
    }
    if IRREGULAR_VERBS
        .iter()
        .any(|row| row.contains(&a.as_str()) && row.contains(&b.as_str()))
    {
        return true;
    }
    let la = regular_lemmas(&a);
    let lb = regular_lemmas(&b);
    la.iter().any(|x| lb.contains(x))
}

/// Heuristic error type of an edit.
///
/// Rules are tried in order: determiner class, preposition class,
/// punctuation, verb inflection, near-miss spelling, and `OTHER`.
pub fn classify_error(edit: &Edit, lists: &WordLists) -> ErrorType {
    let all: Vec<&str> = edit
        .src_tokens
        .iter()
        .chain(&edit.tgt_tokens)
        .map(String::as_str)
        .collect();
    if all.is_empty() {
        return ErrorType::Other;
    }
    if all.iter().all(|t| lists.is_determiner(t)) {
        return ErrorType::Det;
    }
    if all.iter().all(|t| lists.is_preposition(t)) {
        return ErrorType::Prep;
    }
    if all.iter().all(|t| lists.is_punctuation(t)) {
        return ErrorType::Punct;
    }
    if edit.op == EditOp::Substitute && edit.src_tokens.len() == 1 && edit.tgt_tokens.len() == 1 {
        let (s, t) = (&edit.src_tokens[0], &edit.tgt_tokens[0]);
        if is_verb_form_pair(s, t) {
            return ErrorType::Verb;
        }
        let same_first = s.chars().next().map(|c| c.to_ascii_lowercase())
            == t.chars().next().map(|c| c.to_ascii_lowercase());
        if same_first && strsim::levenshtein(s, t) <= 2 {
            return ErrorType::Spell;
        }
    }
    ErrorType::Other
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::align::Span;

    fn edit(src: &[&str], tgt: &[&str]) -> Edit {
        let op = match (src.is_empty(), tgt.is_empty()) {
            (true, _) => EditOp::Insert,
            (_, true) => EditOp::Delete,
            _ => EditOp::Substitute,
        };
        Edit {
            src_span: Span::new(0, src.len()),
            tgt_span: Span::new(0, tgt.len()),
            op,
            src_tokens: src.iter().map(|s| s.to_string()).collect(),
            tgt_tokens: tgt.iter().map(|s| s.to_string()).collect(),
            error_type: ErrorType::Other,
        }
    }

    #[test]
    fn closed_class_rules() {
        let l = WordLists::default();
        assert_eq!(classify_error(&edit(&[], &["a"]), &l), ErrorType::Det);
        assert_eq!(classify_error(&edit(&["The"], &["A"]), &l), ErrorType::Det);
        assert_eq!(classify_error(&edit(&["in"], &["at"]), &l), ErrorType::Prep);
        assert_eq!(classify_error(&edit(&[], &[","]), &l), ErrorType::Punct);
        assert_eq!(classify_error(&edit(&["."], &[]), &l), ErrorType::Punct);
    }

    #[test]
    fn open_class_rules() {
        let l = WordLists::default();
        assert_eq!(classify_error(&edit(&["have"], &["has"]), &l), ErrorType::Verb);
        assert_eq!(classify_error(&edit(&["walk"], &["walked"]), &l), ErrorType::Verb);
        assert_eq!(classify_error(&edit(&["carrys"], &["carries"]), &l), ErrorType::Verb);
        assert_eq!(
            classify_error(&edit(&["probelm"], &["problem"]), &l),
            ErrorType::Spell
        );
        assert_eq!(classify_error(&edit(&["house"], &["car"]), &l), ErrorType::Other);
        assert_eq!(
            classify_error(&edit(&["a", "house"], &["the", "car"]), &l),
            ErrorType::Other
        );
    }

    #[test]
    fn loads_lists_from_disk() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("determiners.txt"), "a\nthe\n").unwrap();
        std::fs::write(dir.path().join("prepositions.txt"), "in\n").unwrap();
        std::fs::write(dir.path().join("punctuation.txt"), ",\n").unwrap();
        let l = WordLists::load(dir.path()).unwrap();
        assert_eq!(l.determiners.len(), 2);
        assert!(l.is_preposition("In"));
        assert!(!l.is_determiner("this"));
    }

    #[test]
    fn shipped_lists_are_pinned() {
        let l = WordLists::default();
        for w in ["a", "an", "the", "this", "my", "their"] {
            assert!(l.is_determiner(w), "{w}");
        }
        for w in ["in", "on", "at", "from", "to", "for", "with", "about"] {
            assert!(l.is_preposition(w), "{w}");
        }
        for w in [".", ",", "!", "?"] {
            assert!(l.is_punctuation(w), "{w}");
        }
    }
}
