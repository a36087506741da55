//! Deterministic rule-based caption to scene-graph extraction.
//!
//! A caption is split into words and punctuation breaks. Each word position
//! is matched longest-first against the phrase dictionaries (concepts,
//! attributes, verb relations, preposition relations), comparing words by
//! their lemma candidates. Stopwords never start a phrase; unknown words are
//! skipped. The chunk stream then yields:
//!
//! * `(noun)` for every concept chunk,
//! * `(noun, attr)` for attribute chunks directly before a noun,
//! * `(noun, verb, noun)` for `NOUN VERB [ATTR..] NOUN`,
//! * `(noun, prep, noun)` for `NOUN PREP [ATTR..] NOUN`, unless the left noun
//!   is already the object of a verb relation (ambiguous attachment, skipped).
//!
//! Punctuation breaks every pattern, so a phrase never spans a comma.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::concept::{ConceptTuple, SceneGraph};
use crate::error::{Error, Result};

const SHIPPED_STOPWORDS: &str = include_str!("../data/stopwords.txt");
const SHIPPED_LEMMAS: &str = include_str!("../data/lemmas.tsv");
const SHIPPED_CONCEPTS: &str = include_str!("../data/concepts.txt");
const SHIPPED_PATTERNS: &str = include_str!("../data/patterns.txt");

/// What a dictionary phrase contributes to the scene graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum PhraseKind {
    Concept,
    Attribute,
    Verb,
    Preposition,
}

impl PhraseKind {
    fn rule_name(self) -> &'static str {
        match self {
            PhraseKind::Concept => "concept",
            PhraseKind::Attribute => "attr",
            PhraseKind::Verb => "verb",
            PhraseKind::Preposition => "prep",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Phrase {
    words: Vec<String>,
    kind: PhraseKind,
}

/// Stopwords, lemma exceptions and phrase dictionaries for [`extract_tuples`].
#[derive(Debug, Clone, Default)]
pub struct ExtractorConfig {
    stopwords: BTreeSet<String>,
    lemmas: BTreeMap<String, String>,
    // keyed by first word, longest phrase first
    phrases: BTreeMap<String, Vec<Phrase>>,
}

impl ExtractorConfig {
    pub fn new() -> Self {
        Self::default()
    }

    /// The rule set shipped with the crate.
    pub fn shipped() -> Self {
        Self::from_sources(
            SHIPPED_STOPWORDS,
            SHIPPED_LEMMAS,
            SHIPPED_CONCEPTS,
            SHIPPED_PATTERNS,
        )
        .expect("shipped extractor config parses")
    }

    /// Builds a config from the text of its four files: stopwords (one per
    /// line), lemma exceptions (`word<TAB>lemma`), concept dictionary (one
    /// entry per line) and pattern rules (`attr|verb|prep <phrase>`).
    ///
    /// Blank lines and `#` comments are ignored in all four.
    pub fn from_sources(
        stopwords: &str,
        lemmas: &str,
        concepts: &str,
        patterns: &str,
    ) -> Result<Self> {
        let mut cfg = Self::new();
        for (_, line) in content_lines(stopwords) {
            cfg.add_stopword(line);
        }
        for (n, line) in content_lines(lemmas) {
            let (word, lemma) = line.split_once('\t').ok_or_else(|| Error::Parse {
                line: n,
                message: "expected word<TAB>lemma".to_string(),
            })?;
            cfg.add_lemma(word, lemma);
        }
        for (_, line) in content_lines(concepts) {
            cfg.add_phrase(PhraseKind::Concept, line);
        }
        for (n, line) in content_lines(patterns) {
            let (kind, phrase) =
                line.split_once(char::is_whitespace)
                    .ok_or_else(|| Error::Parse {
                        line: n,
                        message: format!("expected <kind> <phrase>, got {line:?}"),
                    })?;
            let kind = match kind {
                "attr" => PhraseKind::Attribute,
                "verb" => PhraseKind::Verb,
                "prep" => PhraseKind::Preposition,
                other => {
                    return Err(Error::Parse {
                        line: n,
                        message: format!("unknown rule kind {other:?}"),
                    })
                }
            };
            if !cfg.add_phrase(kind, phrase) {
                return Err(Error::Parse {
                    line: n,
                    message: "rule has an empty phrase".to_string(),
                });
            }
        }
        Ok(cfg)
    }

    pub fn add_stopword(&mut self, word: &str) {
        for w in split_words(word) {
            self.stopwords.insert(w);
        }
    }

    /// Registers a lemma exception. Applies to phrases added afterwards.
    pub fn add_lemma(&mut self, word: &str, lemma: &str) {
        let word = word.trim().to_lowercase();
        let lemma = lemma.trim().to_lowercase();
        if !word.is_empty() && !lemma.is_empty() {
            self.lemmas.insert(word, lemma);
        }
    }

    /// Adds a dictionary phrase, normalizing it the same way caption words
    /// are. Returns false if the phrase has no words.
    pub fn add_phrase(&mut self, kind: PhraseKind, phrase: &str) -> bool {
        let words: Vec<String> = split_words(phrase)
            .into_iter()
            .map(|w| self.lemmas.get(&w).cloned().unwrap_or(w))
            .collect();
        let Some(first) = words.first().cloned() else {
            return false;
        };
        let entry = Phrase { words, kind };
        let bucket = self.phrases.entry(first).or_default();
        if !bucket.contains(&entry) {
            bucket.push(entry);
            bucket.sort_by(|a, b| b.words.len().cmp(&a.words.len()).then(a.kind.cmp(&b.kind)));
        }
        true
    }

    /// Concept dictionary entries in sorted order, words joined by spaces.
    pub fn concepts(&self) -> Vec<String> {
        self.phrases_of(PhraseKind::Concept)
    }

    pub fn phrases_of(&self, kind: PhraseKind) -> Vec<String> {
        let mut out: Vec<String> = self
            .phrases
            .values()
            .flatten()
            .filter(|p| p.kind == kind)
            .map(|p| p.words.join(" "))
            .collect();
        out.sort();
        out
    }

    pub fn is_stopword(&self, word: &str) -> bool {
        self.stopwords.contains(word)
    }

    /// Renders the pattern rules back into the rule-file grammar.
    pub fn pattern_rules(&self) -> Vec<String> {
        [
            PhraseKind::Attribute,
            PhraseKind::Verb,
            PhraseKind::Preposition,
        ]
        .into_iter()
        .flat_map(|k| {
            self.phrases_of(k)
                .into_iter()
                .map(move |p| format!("{} {p}", k.rule_name()))
        })
        .collect()
    }

    /// Lemma candidates for a lowercase word, most specific first.
    ///
    /// An exception-table entry overrides everything. Otherwise the surface
    /// form comes first, followed by suffix-stripped forms for plural
    /// `-s`/`-es`/`-ies`, `-ing` and `-ed`.
    pub fn lemma_candidates(&self, word: &str) -> Vec<String> {
        if let Some(lemma) = self.lemmas.get(word) {
            return alloc::vec![lemma.clone()];
        }
        let mut out = alloc::vec![word.to_string()];
        let mut push = |s: String| {
            if s.chars().count() >= 2 && !out.contains(&s) {
                out.push(s);
            }
        };
        if let Some(stem) = word.strip_suffix("ies") {
            push(format!("{stem}y"));
        }
        if let Some(stem) = word.strip_suffix("es") {
            push(stem.to_string());
        }
        if !word.ends_with("ss") {
            if let Some(stem) = word.strip_suffix('s') {
                push(stem.to_string());
            }
        }
        if let Some(stem) = word.strip_suffix("ing") {
            push(stem.to_string());
            push(format!("{stem}e"));
        }
        if let Some(stem) = word.strip_suffix("ed") {
            push(stem.to_string());
            push(format!("{stem}e"));
        }
        out
    }

    fn match_at(&self, words: &[Token], start: usize) -> Option<(&Phrase, usize)> {
        let Token::Word(first) = &words[start] else {
            return None;
        };
        if self.stopwords.contains(first) {
            return None;
        }
        let mut best: Option<&Phrase> = None;
        for cand in self.lemma_candidates(first) {
            let Some(bucket) = self.phrases.get(&cand) else {
                continue;
            };
            for phrase in bucket {
                if best.is_some_and(|b| {
                    (b.words.len(), core::cmp::Reverse(b.kind))
                        >= (phrase.words.len(), core::cmp::Reverse(phrase.kind))
                }) {
                    continue;
                }
                if self.phrase_matches(phrase, &words[start..]) {
                    best = Some(phrase);
                }
            }
        }
        best.map(|p| (p, p.words.len()))
    }

    fn phrase_matches(&self, phrase: &Phrase, words: &[Token]) -> bool {
        if words.len() < phrase.words.len() {
            return false;
        }
        phrase
            .words
            .iter()
            .zip(words)
            .skip(1)
            .all(|(want, tok)| match tok {
                Token::Word(w) => self.lemma_candidates(w).iter().any(|c| c == want),
                Token::Break => false,
            })
    }
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
        .map(|(i, l)| (i, l.trim()))
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Token {
    Word(String),
    Break,
}

fn is_word_joiner(c: char) -> bool {
    matches!(c, '-' | '\'' | '\u{2019}' | '_')
}

fn tokenize_with_breaks(text: &str) -> Vec<Token> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let flush = |cur: &mut String, out: &mut Vec<Token>| {
        if !cur.is_empty() {
            out.push(Token::Word(core::mem::take(cur)));
        }
    };
    for c in text.chars().flat_map(char::to_lowercase) {
        if c.is_alphanumeric() {
            cur.push(c);
        } else if c.is_whitespace() || is_word_joiner(c) {
            flush(&mut cur, &mut out);
        } else {
            flush(&mut cur, &mut out);
            if out.last().is_some_and(|t| *t != Token::Break) {
                out.push(Token::Break);
            }
        }
    }
    flush(&mut cur, &mut out);
    out
}

fn split_words(text: &str) -> Vec<String> {
    tokenize_with_breaks(text)
        .into_iter()
        .filter_map(|t| match t {
            Token::Word(w) => Some(w),
            Token::Break => None,
        })
        .collect()
}

#[derive(Debug)]
enum Chunk {
    Phrase(PhraseKind, String),
    Break,
}

fn chunk(caption: &str, cfg: &ExtractorConfig) -> Vec<Chunk> {
    let tokens = tokenize_with_breaks(caption);
    let mut chunks = Vec::new();
    let mut i = 0;
    while i < tokens.len() {
        if tokens[i] == Token::Break {
            chunks.push(Chunk::Break);
            i += 1;
            continue;
        }
        match cfg.match_at(&tokens, i) {
            Some((phrase, len)) => {
                chunks.push(Chunk::Phrase(phrase.kind, phrase.words.join(" ")));
                i += len;
            }
            None => i += 1,
        }
    }
    chunks
}

/// Extracts a scene graph from caption text. The returned graph has an empty
/// image id.
pub fn extract_tuples(caption: &str, cfg: &ExtractorConfig) -> SceneGraph {
    let chunks = chunk(caption, cfg);
    let mut graph = SceneGraph::new("");
    let mut add = |slots: &[&str]| {
        if let Ok(t) = ConceptTuple::new(slots.iter().copied()) {
            graph.insert(t);
        }
    };
    let noun_at = |j: usize| match chunks.get(j) {
        Some(Chunk::Phrase(PhraseKind::Concept, n)) => Some(n.as_str()),
        _ => None,
    };
    // next concept after `j`, stepping over attribute chunks only
    let next_noun = |j: usize| {
        let mut k = j + 1;
        while let Some(Chunk::Phrase(PhraseKind::Attribute, _)) = chunks.get(k) {
            k += 1;
        }
        noun_at(k).map(|n| (k, n))
    };

    let mut verb_objects = BTreeSet::new();
    for (j, c) in chunks.iter().enumerate() {
        let Chunk::Phrase(kind, text) = c else {
            continue;
        };
        match kind {
            PhraseKind::Concept => add(&[text]),
            PhraseKind::Attribute => {
                if let Some((_, noun)) = next_noun(j) {
                    add(&[noun, text]);
                }
            }
            PhraseKind::Verb | PhraseKind::Preposition => {
                let Some(subject) = j.checked_sub(1).and_then(noun_at) else {
                    continue;
                };
                if *kind == PhraseKind::Preposition && verb_objects.contains(&(j - 1)) {
                    continue;
                }
                if let Some((k, object)) = next_noun(j) {
                    if *kind == PhraseKind::Verb {
                        verb_objects.insert(k);
                    }
                    add(&[subject, text, object]);
                }
            }
        }
    }
    graph
}

/// [`extract_tuples`] with the image id set.
pub fn extract_graph(image_id: &str, caption: &str, cfg: &ExtractorConfig) -> SceneGraph {
    let mut g = extract_tuples(caption, cfg);
    g.image_id = image_id.to_string();
    g
}
