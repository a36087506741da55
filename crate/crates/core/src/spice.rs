//! Tuple matching, SPICE and the CHAIRs hallucination rate.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::concept::{ConceptTuple, SceneGraph, SynonymLexicon};
use crate::error::{Error, Result};

/// A maximum matching between predicted and reference tuples.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchResult {
    pub pairs: Vec<(ConceptTuple, ConceptTuple)>,
    pub num_predicted: usize,
    pub num_reference: usize,
}

impl MatchResult {
    pub fn matched(&self) -> usize {
        self.pairs.len()
    }
}

/// Two tuples match iff they have the same arity and every aligned slot
/// pair synonym-matches. Slots are compared in order only.
pub fn tuples_match(a: &ConceptTuple, b: &ConceptTuple, lex: &SynonymLexicon) -> bool {
    a.arity() == b.arity()
        && a.slots()
            .iter()
            .zip(b.slots())
            .all(|(x, y)| lex.synonyms_match(x, y))
}

/// Maximum bipartite matching over a boolean adjacency matrix
/// (`adj[i][j]`: left `i` may pair with right `j`). Returns, for each right
/// vertex, its matched left vertex.
pub fn max_bipartite_matching(adj: &[Vec<bool>], num_right: usize) -> Vec<Option<usize>> {
    fn augment(
        u: usize,
        adj: &[Vec<bool>],
        seen: &mut [bool],
        owner: &mut [Option<usize>],
    ) -> bool {
        for v in 0..owner.len() {
            if !adj[u][v] || seen[v] {
                continue;
            }
            seen[v] = true;
            if owner[v].is_none_or(|w| augment(w, adj, seen, owner)) {
                owner[v] = Some(u);
                return true;
            }
        }
        false
    }

    let mut owner = vec![None; num_right];
    for u in 0..adj.len() {
        let mut seen = vec![false; num_right];
        augment(u, adj, &mut seen, &mut owner);
    }
    owner
}

/// Pairs predicted with reference tuples under synonym matching, maximizing
/// the number of pairs.
pub fn match_tuples(
    predicted: &SceneGraph,
    reference: &SceneGraph,
    lex: &SynonymLexicon,
) -> MatchResult {
    let p: Vec<&ConceptTuple> = predicted.iter().collect();
    let g: Vec<&ConceptTuple> = reference.iter().collect();
    let adj: Vec<Vec<bool>> = p
        .iter()
        .map(|a| g.iter().map(|b| tuples_match(a, b, lex)).collect())
        .collect();
    let owner = max_bipartite_matching(&adj, g.len());
    let mut pairs: Vec<(ConceptTuple, ConceptTuple)> = owner
        .iter()
        .enumerate()
        .filter_map(|(j, o)| o.map(|i| (p[i].clone(), g[j].clone())))
        .collect();
    pairs.sort();
    MatchResult {
        pairs,
        num_predicted: p.len(),
        num_reference: g.len(),
    }
}

/// Precision, recall and their harmonic mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpiceScore {
    pub precision: f64,
    pub recall: f64,
    pub spice: f64,
}

impl SpiceScore {
    pub fn from_counts(matched: usize, num_predicted: usize, num_reference: usize) -> Self {
        let precision = ratio(matched, num_predicted);
        let recall = ratio(matched, num_reference);
        Self {
            precision,
            recall,
            spice: harmonic_mean(precision, recall),
        }
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// `2ab / (a + b)`, zero when either side is zero.
pub fn harmonic_mean(a: f64, b: f64) -> f64 {
    if a <= 0.0 || b <= 0.0 {
        0.0
    } else {
        2.0 / (1.0 / a + 1.0 / b)
    }
}

pub fn spice(predicted: &SceneGraph, reference: &SceneGraph, lex: &SynonymLexicon) -> SpiceScore {
    let m = match_tuples(predicted, reference, lex);
    SpiceScore::from_counts(m.matched(), m.num_predicted, m.num_reference)
}

/// Mentioned objects that synonym-match none of the image's objects.
pub fn hallucinated_objects<'a>(
    mentioned: &'a [String],
    present: &[String],
    lex: &SynonymLexicon,
) -> Vec<&'a str> {
    mentioned
        .iter()
        .filter(|m| !present.iter().any(|g| lex.synonyms_match(m, g)))
        .map(String::as_str)
        .collect()
}

/// Fraction of captions mentioning at least one object absent (under
/// synonym matching) from their image's ground-truth objects.
///
/// Captions without object mentions count in the denominator but never
/// hallucinate. An empty caption map gives 0.
pub fn chairs(
    captions: &BTreeMap<String, Vec<String>>,
    gt_objects: &BTreeMap<String, Vec<String>>,
    lex: &SynonymLexicon,
) -> Result<f64> {
    let mut bad = 0usize;
    for (image_id, mentioned) in captions {
        let present = gt_objects
            .get(image_id)
            .ok_or_else(|| Error::MissingImage(image_id.clone()))?;
        if !hallucinated_objects(mentioned, present, lex).is_empty() {
            bad += 1;
        }
    }
    Ok(ratio(bad, captions.len()))
}

/// Object mentions of an extracted caption graph: its arity-1 tuples that
/// appear in `vocabulary`, in key order.
pub fn object_mentions(graph: &SceneGraph, vocabulary: &BTreeSet<String>) -> Vec<String> {
    graph
        .objects()
        .filter(|o| vocabulary.contains(*o))
        .map(String::from)
        .collect()
}
