use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};

pub type TokenId = u32;

pub const PAD: TokenId = 0;
pub const BOS: TokenId = 1;
pub const EOS: TokenId = 2;
pub const UNK: TokenId = 3;

const RESERVED: [&str; 4] = ["<pad>", "<s>", "</s>", "<unk>"];

/// Sequence of vocabulary ids.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct TokenSeq(pub Vec<TokenId>);

impl TokenSeq {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn ids(&self) -> &[TokenId] {
        &self.0
    }
}

impl From<Vec<TokenId>> for TokenSeq {
    fn from(v: Vec<TokenId>) -> Self {
        TokenSeq(v)
    }
}

/// Closed word-level vocabulary. Ids 0..4 are PAD, BOS, EOS and UNK.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocab {
    tokens: Vec<String>,
    index: HashMap<String, TokenId>,
}

impl Vocab {
    /// Builds a vocabulary from token streams, ordered by descending
    /// frequency and then lexicographically.
    pub fn build<'a, I, S>(sentences: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: IntoIterator<Item = &'a String>,
    {
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for s in sentences {
            for t in s {
                if !RESERVED.contains(&t.as_str()) {
                    *counts.entry(t.as_str()).or_default() += 1;
                }
            }
        }
        let mut by_freq: Vec<(&str, usize)> = counts.into_iter().collect();
        by_freq.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
        Self::from_tokens(by_freq.into_iter().map(|(t, _)| t.to_string()))
    }

    /// Vocabulary over `words` in the given order, after the reserved ids.
    pub fn from_tokens<I: IntoIterator<Item = String>>(words: I) -> Self {
        let mut tokens: Vec<String> = RESERVED.iter().map(|s| s.to_string()).collect();
        let mut index: HashMap<String, TokenId> = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as TokenId))
            .collect();
        for w in words {
            if !index.contains_key(&w) {
                index.insert(w.clone(), tokens.len() as TokenId);
                tokens.push(w);
            }
        }
        Vocab { tokens, index }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.len() == RESERVED.len()
    }

    /// Id of a surface token. Reserved symbols and unknown words map to UNK.
    pub fn id(&self, word: &str) -> TokenId {
        match self.index.get(word) {
            Some(&id) if id > UNK => id,
            _ => UNK,
        }
    }

    pub fn token(&self, id: TokenId) -> &str {
        self.tokens
            .get(id as usize)
            .map(String::as_str)
            .unwrap_or(RESERVED[UNK as usize])
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn encode_words(&self, words: &[String]) -> TokenSeq {
        TokenSeq(words.iter().map(|w| self.id(w)).collect())
    }

    /// Whitespace tokenization into vocabulary ids.
    pub fn tokenize(&self, text: &str) -> TokenSeq {
        TokenSeq(text.split_whitespace().map(|w| self.id(w)).collect())
    }

    /// Surface words for `ids`, dropping PAD/BOS/EOS.
    pub fn words(&self, ids: &[TokenId]) -> Vec<String> {
        ids.iter()
            .filter(|&&id| id != PAD && id != BOS && id != EOS)
            .map(|&id| self.token(id).to_string())
            .collect()
    }

    pub fn detokenize(&self, ids: &[TokenId]) -> String {
        self.words(ids).join(" ")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(fs::File::create(path)?);
        for t in &self.tokens {
            writeln!(w, "{t}")?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let r = BufReader::new(fs::File::open(path)?);
        let mut lines = Vec::new();
        for line in r.lines() {
            lines.push(line?);
        }
        if lines.len() < RESERVED.len() || lines[..RESERVED.len()] != RESERVED {
            return Err(Error::Malformed {
                line: 1,
                reason: "vocabulary must start with the reserved tokens".into(),
            });
        }
        let words = lines.split_off(RESERVED.len());
        let vocab = Vocab::from_tokens(words);
        Ok(vocab)
    }
}

/// Splits surface text into word tokens.
pub fn split_words(text: &str) -> Vec<String> {
    text.split_whitespace().map(str::to_string).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vocab() -> Vocab {
        let s = split_words("They have a problem . They have a book .");
        Vocab::build([&s])
    }

    #[test]
    fn reserved_ids_come_first() {
        let v = vocab();
        assert_eq!(&v.tokens()[..4], &["<pad>", "<s>", "</s>", "<unk>"]);
        // most frequent first, ties lexicographic
        assert_eq!(v.token(4), ".");
    }

    #[test]
    fn tokenize_sentence() {
        let v = vocab();
        let ids = v.tokenize("They have a problem .");
        assert_eq!(ids.len(), 5);
        assert!(ids.ids().iter().all(|&i| i > UNK));
        assert_eq!(v.detokenize(ids.ids()), "They have a problem .");
    }

    #[test]
    fn empty_and_unknown() {
        let v = vocab();
        assert!(v.tokenize("").is_empty());
        let ids = v.tokenize("They have a zebra .");
        assert_eq!(ids.ids()[3], UNK);
        assert_eq!(v.tokenize("<s> </s> <pad>").ids(), &[UNK, UNK, UNK]);
    }

    #[test]
    fn round_trips_every_entry() {
        let v = vocab();
        for (i, t) in v.tokens().iter().enumerate().skip(4) {
            assert_eq!(v.id(t) as usize, i);
            assert_eq!(v.token(i as TokenId), t);
        }
    }

    #[test]
    fn file_round_trip() {
        let v = vocab();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("vocab.txt");
        v.save(&p).unwrap();
        assert_eq!(Vocab::load(&p).unwrap(), v);
        std::fs::write(&p, "a\nb\n").unwrap();
        assert!(matches!(Vocab::load(&p), Err(Error::Malformed { .. })));
    }
}
