//! Concept uniqueness and the SPICE-U metric.
//!
//! `Un(p)` is the fraction of corpus images that do not contain `p`. The
//! uniqueness of a prediction set `P` against references `G` is the sum of
//! `Un` over `P`, min-max normalized over every same-size set drawn from
//! `P ∪ G`. SPICE-U is the harmonic mean of SPICE and that normalized score.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use crate::concept::{ConceptTuple, CorpusIndex, SceneGraph, SynonymLexicon};
use crate::spice::{harmonic_mean, spice, tuples_match};

/// A source of per-concept uniqueness values in `[0, 1]`.
pub trait Uniqueness {
    fn un(&self, tuple: &ConceptTuple) -> f64;
}

impl Uniqueness for CorpusIndex {
    fn un(&self, tuple: &ConceptTuple) -> f64 {
        un(self, tuple)
    }
}

/// Fixed uniqueness values keyed by canonical key. Missing keys are 1.
impl Uniqueness for BTreeMap<String, f64> {
    fn un(&self, tuple: &ConceptTuple) -> f64 {
        self.get(&tuple.key()).copied().unwrap_or(1.0)
    }
}

/// `(num_images - df) / num_images`; concepts absent from the index get 1.
pub fn un(index: &CorpusIndex, tuple: &ConceptTuple) -> f64 {
    let n = index.num_images();
    let df = index.df(&tuple.key()).min(n);
    (n - df) as f64 / n as f64
}

/// How the alternative-set pool `P ∪ G` is formed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum PoolMode {
    /// Union by canonical key.
    #[default]
    Exact,
    /// Reference tuples that synonym-match some predicted tuple are dropped
    /// from the pool, so a predicted concept and its synonym count once.
    SynonymCollapsed,
}

/// The pieces of the normalized uniqueness computation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniquenessReport {
    /// Sum of `Un` over the predicted concepts.
    pub un_p: f64,
    /// Smallest `Un` sum over same-size alternatives.
    pub min_alt: f64,
    /// Largest `Un` sum over same-size alternatives.
    pub max_alt: f64,
    pub uniq: f64,
}

/// Sums in ascending order so equal multisets give bit-identical sums.
fn canonical_sum(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    values.iter().sum()
}

/// Normalized uniqueness of `predicted` against `reference`.
///
/// The extremes over all size-`|P|` subsets of the pool are the sums of the
/// `|P|` smallest and largest pool values. When they coincide (for instance
/// `P = G`) no strictly better alternative exists and `uniq` is 1. An empty
/// prediction has `uniq` 0.
pub fn uniqueness<U: Uniqueness + ?Sized>(
    predicted: &SceneGraph,
    reference: &SceneGraph,
    source: &U,
    pool_mode: PoolMode,
    lex: &SynonymLexicon,
) -> UniquenessReport {
    let n = predicted.len();
    if n == 0 {
        return UniquenessReport {
            un_p: 0.0,
            min_alt: 0.0,
            max_alt: 0.0,
            uniq: 0.0,
        };
    }
    let mut pool: BTreeSet<&ConceptTuple> = predicted.iter().collect();
    for g in reference.iter() {
        let collapsed = pool_mode == PoolMode::SynonymCollapsed
            && predicted.iter().any(|p| tuples_match(p, g, lex));
        if !collapsed {
            pool.insert(g);
        }
    }

    let mut pool_un: Vec<f64> = pool.iter().map(|t| source.un(t)).collect();
    pool_un.sort_by(f64::total_cmp);
    let mut low = pool_un[..n].to_vec();
    let mut high = pool_un[pool_un.len() - n..].to_vec();
    let min_alt = canonical_sum(&mut low);
    let max_alt = canonical_sum(&mut high);
    let mut own: Vec<f64> = predicted.iter().map(|t| source.un(t)).collect();
    let un_p = canonical_sum(&mut own);

    let uniq = if max_alt <= min_alt {
        1.0
    } else {
        ((un_p - min_alt) / (max_alt - min_alt)).clamp(0.0, 1.0)
    };
    UniquenessReport {
        un_p,
        min_alt,
        max_alt,
        uniq,
    }
}

/// [`uniqueness`] with the exact pool, returning only the score.
pub fn uniq<U: Uniqueness + ?Sized>(
    predicted: &SceneGraph,
    reference: &SceneGraph,
    source: &U,
) -> f64 {
    uniqueness(
        predicted,
        reference,
        source,
        PoolMode::Exact,
        &SynonymLexicon::new(),
    )
    .uniq
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpiceUScore {
    pub precision: f64,
    pub recall: f64,
    pub spice: f64,
    pub uniq: f64,
    pub spice_u: f64,
    pub uniqueness: UniquenessReport,
}

/// SPICE, uniqueness and their harmonic mean. Zero whenever SPICE or
/// uniqueness is zero, including empty predictions.
pub fn spice_u<U: Uniqueness + ?Sized>(
    predicted: &SceneGraph,
    reference: &SceneGraph,
    source: &U,
    lex: &SynonymLexicon,
    pool_mode: PoolMode,
) -> SpiceUScore {
    let s = spice(predicted, reference, lex);
    let report = uniqueness(predicted, reference, source, pool_mode, lex);
    SpiceUScore {
        precision: s.precision,
        recall: s.recall,
        spice: s.spice,
        uniq: report.uniq,
        spice_u: harmonic_mean(s.spice, report.uniq),
        uniqueness: report,
    }
}
