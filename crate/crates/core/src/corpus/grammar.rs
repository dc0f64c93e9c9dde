//! A small template grammar producing clean English sentences, used as
//! seed text for the corruption rules.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// (base, third person singular, past)
pub const VERBS: &[(&str, &str, &str)] = &[
    ("have", "has", "had"),
    ("need", "needs", "needed"),
    ("see", "sees", "saw"),
    ("find", "finds", "found"),
    ("want", "wants", "wanted"),
    ("like", "likes", "liked"),
    ("make", "makes", "made"),
    ("take", "takes", "took"),
    ("buy", "buys", "bought"),
    ("use", "uses", "used"),
    ("visit", "visits", "visited"),
    ("watch", "watches", "watched"),
    ("love", "loves", "loved"),
    ("open", "opens", "opened"),
    ("carry", "carries", "carried"),
    ("solve", "solves", "solved"),
    ("describe", "describes", "described"),
    ("explain", "explains", "explained"),
    ("bring", "brings", "brought"),
    ("write", "writes", "wrote"),
];

pub const NOUNS: &[&str] = &[
    "problem", "book", "house", "car", "idea", "question", "answer", "letter", "friend",
    "teacher", "student", "computer", "garden", "window", "apple", "umbrella", "orange",
    "picture", "story", "song", "bicycle", "camera", "ticket", "message", "lesson", "plan",
    "job", "decision", "mistake", "meeting", "office", "school", "city", "village", "river",
    "mountain", "dog", "cat", "present", "solution", "essay", "exam", "island", "engine",
];

pub const ADJECTIVES: &[&str] = &[
    "tremendous", "big", "small", "new", "old", "good", "bad", "interesting", "important",
    "difficult", "easy", "beautiful", "expensive", "cheap", "long", "short", "strange",
    "simple", "serious", "useful", "early", "excellent", "ugly", "honest",
];

pub const PREPOSITIONS: &[&str] = &[
    "in", "on", "at", "from", "to", "for", "with", "about", "near", "after", "before", "during",
];

const PLACES: &[&str] = &[
    "morning", "office", "school", "city", "village", "river", "park", "station", "library",
    "market", "weekend", "evening", "kitchen", "hospital",
];

const OPENERS: &[&[&str]] = &[
    &["However", ","],
    &["Yesterday", ","],
    &["Today", ","],
    &["In", "the", "morning", ","],
    &["After", "the", "meeting", ","],
    &["Unfortunately", ","],
];

const CONJUNCTIONS: &[&str] = &["and", "but", "so"];

/// Subject pronoun and whether it takes the third person singular.
const PRONOUNS: &[(&str, bool)] = &[
    ("I", false),
    ("You", false),
    ("We", false),
    ("They", false),
    ("He", true),
    ("She", true),
    ("It", true),
    ("This", true),
];

const POSSESSIVES: &[&str] = &["my", "his", "her", "our", "their"];

/// Whether `w` takes "an".
pub fn starts_with_vowel(w: &str) -> bool {
    match w {
        "useful" | "university" | "uniform" => false,
        "honest" | "hour" => true,
        _ => matches!(w.chars().next(), Some('a' | 'e' | 'i' | 'o' | 'u')),
    }
}

fn capitalize(w: &str) -> String {
    let mut c = w.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

/// Seeded sampler of clean sentences.
pub struct SentenceGrammar {
    rng: ChaCha8Rng,
}

impl SentenceGrammar {
    pub fn new(seed: u64) -> Self {
        SentenceGrammar {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// `n` clean sentences as space-separated text.
    pub fn sample(&mut self, n: usize) -> Vec<String> {
        (0..n).map(|_| self.sentence().join(" ")).collect()
    }

    fn pick<T: Copy>(&mut self, xs: &[T]) -> T {
        *xs.choose(&mut self.rng).expect("non-empty word list")
    }

    fn noun_phrase(&mut self, out: &mut Vec<String>) {
        let noun = self.pick(NOUNS);
        let adj = if self.rng.gen_bool(0.5) {
            Some(self.pick(ADJECTIVES))
        } else {
            None
        };
        let first = adj.unwrap_or(noun);
        let det = match self.rng.gen_range(0..10) {
            0..=4 => {
                if starts_with_vowel(first) {
                    "an"
                } else {
                    "a"
                }
            }
            5..=8 => "the",
            _ => self.pick(POSSESSIVES),
        };
        out.push(det.to_string());
        if let Some(a) = adj {
            out.push(a.to_string());
        }
        out.push(noun.to_string());
    }

    fn clause(&mut self, out: &mut Vec<String>, sentence_initial: bool) {
        let (subject, singular) = if self.rng.gen_bool(0.7) {
            self.pick(PRONOUNS)
        } else {
            ("", true)
        };
        if subject.is_empty() {
            let noun = self.pick(NOUNS);
            let det = if sentence_initial { "The" } else { "the" };
            out.push(det.to_string());
            out.push(noun.to_string());
        } else if sentence_initial || subject == "I" {
            out.push(subject.to_string());
        } else {
            out.push(subject.to_lowercase());
        }
        let (base, third, past) = self.pick(VERBS);
        let verb = if self.rng.gen_bool(0.3) {
            past
        } else if singular {
            third
        } else {
            base
        };
        out.push(verb.to_string());
        self.noun_phrase(out);
        if self.rng.gen_bool(0.4) {
            out.push(self.pick(PREPOSITIONS).to_string());
            out.push("the".to_string());
            out.push(self.pick(PLACES).to_string());
        }
    }

    /// One clean sentence as tokens.
    pub fn sentence(&mut self) -> Vec<String> {
        let mut out = Vec::with_capacity(16);
        let opener = self.rng.gen_bool(0.2);
        if opener {
            let o = self.pick(OPENERS);
            out.extend(o.iter().map(|s| s.to_string()));
        }
        self.clause(&mut out, !opener);
        if self.rng.gen_bool(0.2) {
            out.push(",".to_string());
            out.push(self.pick(CONJUNCTIONS).to_string());
            self.clause(&mut out, false);
        }
        out.push(".".to_string());
        if let Some(first) = out.first_mut() {
            *first = capitalize(first);
        }
        out
    }
}
