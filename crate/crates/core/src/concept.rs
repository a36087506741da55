//! Concept tuples, scene graphs, the corpus document-frequency index and the
//! synonym lexicon.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::text::normalize_phrase;

/// Separator between slots in a canonical key. Stripped from slot text.
pub const KEY_SEPARATOR: char = '|';

/// A visual concept: an object, an (object, attribute) pair or a
/// (subject, relation, object) triple.
///
/// Slots are lowercase, trimmed, whitespace-collapsed and never contain
/// [`KEY_SEPARATOR`]. Two tuples are equal iff their canonical keys are.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ConceptTuple {
    slots: Vec<String>,
}

impl ConceptTuple {
    pub fn new<I, S>(slots: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let slots = slots
            .into_iter()
            .map(|s| normalize_slot(s.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        if !(1..=3).contains(&slots.len()) {
            return Err(Error::Arity(slots.len()));
        }
        Ok(Self { slots })
    }

    pub fn object(name: &str) -> Result<Self> {
        Self::new([name])
    }

    pub fn attribute(object: &str, attribute: &str) -> Result<Self> {
        Self::new([object, attribute])
    }

    pub fn relation(subject: &str, relation: &str, object: &str) -> Result<Self> {
        Self::new([subject, relation, object])
    }

    pub fn slots(&self) -> &[String] {
        &self.slots
    }

    pub fn arity(&self) -> usize {
        self.slots.len()
    }

    pub fn key(&self) -> String {
        canonical_key(self)
    }

    /// The object tuples this tuple implies: the object of an attribute pair,
    /// or both ends of a relation.
    pub fn implied_objects(&self) -> impl Iterator<Item = ConceptTuple> + '_ {
        let picks: &[usize] = match self.slots.len() {
            2 => &[0],
            3 => &[0, 2],
            _ => &[],
        };
        picks.iter().map(move |&i| ConceptTuple {
            slots: alloc::vec![self.slots[i].clone()],
        })
    }
}

impl fmt::Display for ConceptTuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, s) in self.slots.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            f.write_str(s)?;
        }
        f.write_str(")")
    }
}

fn normalize_slot(raw: &str) -> Result<String> {
    let stripped: String = raw.chars().filter(|&c| c != KEY_SEPARATOR).collect();
    let slot = normalize_phrase(&stripped);
    if slot.is_empty() {
        return Err(Error::EmptySlot);
    }
    Ok(slot)
}

/// Joins the slots with [`KEY_SEPARATOR`]. Injective because slots never
/// contain the separator.
pub fn canonical_key(tuple: &ConceptTuple) -> String {
    let mut key = String::new();
    for (i, slot) in tuple.slots.iter().enumerate() {
        if i > 0 {
            key.push(KEY_SEPARATOR);
        }
        key.push_str(slot);
    }
    key
}

/// The deduplicated concept set of one image (or one caption).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SceneGraph {
    pub image_id: String,
    tuples: BTreeSet<ConceptTuple>,
}

impl SceneGraph {
    pub fn new(image_id: impl Into<String>) -> Self {
        Self {
            image_id: image_id.into(),
            tuples: BTreeSet::new(),
        }
    }

    pub fn from_tuples(
        image_id: impl Into<String>,
        tuples: impl IntoIterator<Item = ConceptTuple>,
    ) -> Self {
        Self {
            image_id: image_id.into(),
            tuples: tuples.into_iter().collect(),
        }
    }

    /// Returns false if an equal tuple was already present.
    pub fn insert(&mut self, tuple: ConceptTuple) -> bool {
        self.tuples.insert(tuple)
    }

    /// Set union with another graph's tuples, keeping this graph's id.
    pub fn merge(&mut self, other: &SceneGraph) {
        self.tuples.extend(other.tuples.iter().cloned());
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    pub fn contains(&self, tuple: &ConceptTuple) -> bool {
        self.tuples.contains(tuple)
    }

    /// Tuples in canonical-key order.
    pub fn iter(&self) -> impl Iterator<Item = &ConceptTuple> {
        self.tuples.iter()
    }

    pub fn tuples(&self) -> &BTreeSet<ConceptTuple> {
        &self.tuples
    }

    /// Names of the arity-1 tuples.
    pub fn objects(&self) -> impl Iterator<Item = &str> {
        self.tuples
            .iter()
            .filter(|t| t.arity() == 1)
            .map(|t| t.slots[0].as_str())
    }
}

/// Concept document frequencies over a reference image corpus.
///
/// `df(key)` is the number of images whose (merged) scene graph contains a
/// tuple with that canonical key. Keys with zero frequency are absent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusIndex {
    num_images: usize,
    df: BTreeMap<String, usize>,
}

impl CorpusIndex {
    /// Builds an index from precomputed counts, checking
    /// `num_images >= 1` and `0 < df <= num_images`.
    pub fn from_counts(num_images: usize, df: BTreeMap<String, usize>) -> Result<Self> {
        if num_images == 0 {
            return Err(Error::EmptyCorpus);
        }
        if let Some((key, &count)) = df.iter().find(|(_, &c)| c == 0 || c > num_images) {
            return Err(Error::InvalidIndex(format!(
                "df({key:?}) = {count} not in 1..={num_images}"
            )));
        }
        Ok(Self { num_images, df })
    }

    pub fn num_images(&self) -> usize {
        self.num_images
    }

    pub fn df(&self, key: &str) -> usize {
        self.df.get(key).copied().unwrap_or(0)
    }

    /// `(key, df)` pairs in key order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, usize)> {
        self.df.iter().map(|(k, &v)| (k.as_str(), v))
    }

    pub fn len(&self) -> usize {
        self.df.len()
    }

    pub fn is_empty(&self) -> bool {
        self.df.is_empty()
    }
}

/// Incremental index construction, one image at a time.
#[derive(Debug, Default)]
pub struct IndexBuilder {
    seen: BTreeSet<String>,
    df: BTreeMap<String, usize>,
}

impl IndexBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Counts each distinct key of `graph` once for its image.
    pub fn add(&mut self, graph: &SceneGraph) -> Result<()> {
        if !self.seen.insert(graph.image_id.clone()) {
            return Err(Error::DuplicateImage(graph.image_id.clone()));
        }
        for tuple in graph.iter() {
            *self.df.entry(tuple.key()).or_insert(0) += 1;
        }
        Ok(())
    }

    pub fn num_images(&self) -> usize {
        self.seen.len()
    }

    pub fn finish(self) -> Result<CorpusIndex> {
        CorpusIndex::from_counts(self.seen.len(), self.df)
    }
}

/// Builds a [`CorpusIndex`] over a collection of per-image scene graphs.
pub fn build_index<'a>(graphs: impl IntoIterator<Item = &'a SceneGraph>) -> Result<CorpusIndex> {
    let mut builder = IndexBuilder::new();
    for g in graphs {
        builder.add(g)?;
    }
    builder.finish()
}

/// Lemma to synset-id map. Two lemmas synonym-match iff they are equal or
/// their synset sets intersect.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SynonymLexicon {
    synsets: BTreeMap<String, BTreeSet<String>>,
}

const DEFAULT_LEXICON: &str = include_str!("../data/synonyms.tsv");

impl SynonymLexicon {
    pub fn new() -> Self {
        Self::default()
    }

    /// The small curated lexicon shipped with the crate.
    pub fn shipped() -> Self {
        Self::parse(DEFAULT_LEXICON).expect("shipped lexicon parses")
    }

    /// Parses `lemma<TAB>synset[,synset...]` lines. Blank lines and lines
    /// starting with `#` are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lex = Self::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (lemma, ids) = line.split_once('\t').ok_or_else(|| Error::Parse {
                line: i + 1,
                message: "expected lemma<TAB>synset ids".to_string(),
            })?;
            let mut any = false;
            for id in ids.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                lex.insert(lemma, id);
                any = true;
            }
            if !any || normalize_phrase(lemma).is_empty() {
                return Err(Error::Parse {
                    line: i + 1,
                    message: format!("no lemma or synset ids in {line:?}"),
                });
            }
        }
        Ok(lex)
    }

    pub fn insert(&mut self, lemma: &str, synset: &str) {
        self.synsets
            .entry(normalize_phrase(lemma))
            .or_default()
            .insert(synset.to_string());
    }

    pub fn synsets(&self, lemma: &str) -> Option<&BTreeSet<String>> {
        self.synsets.get(lemma)
    }

    pub fn synonyms_match(&self, a: &str, b: &str) -> bool {
        if a == b {
            return true;
        }
        match (self.synsets.get(a), self.synsets.get(b)) {
            (Some(sa), Some(sb)) => !sa.is_disjoint(sb),
            _ => false,
        }
    }

    pub fn len(&self) -> usize {
        self.synsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.synsets.is_empty()
    }

    /// `(lemma, synsets)` in lemma order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, &BTreeSet<String>)> {
        self.synsets.iter().map(|(k, v)| (k.as_str(), v))
    }
}
