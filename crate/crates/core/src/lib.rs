//! Uniqueness-aware caption evaluation and mutual-information re-ranking.
//!
//! This crate holds the pure algorithms and is `no_std` (it needs `alloc`).
//! File formats, directory loading and the command line live in the
//! `spiceu` crate.
//!
//! The pieces, bottom-up:
//!
//! * [`concept`]: concept tuples, scene graphs, the corpus document-frequency
//!   index and the synonym lexicon.
//! * [`extract`]: a deterministic rule-based caption to scene-graph extractor.
//! * [`spice`]: maximum bipartite tuple matching, SPICE and CHAIRs.
//! * [`uniqueness`]: per-concept uniqueness, set uniqueness normalized over
//!   same-size alternatives, and SPICE-U.
//! * [`lm`]: unigram and external per-token language models and their
//!   log-linear interpolation.
//! * [`rerank`]: MMI re-ranking of beam candidates, distractor analysis and
//!   hyperparameter grid search.
//! * [`harness`]: template captions, pairwise human-judgement accuracy,
//!   Pearson correlation and geometric-mean aggregation.
#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod concept;
mod error;
pub mod extract;
pub mod harness;
pub mod lm;
pub mod rerank;
pub mod spice;
pub mod text;
pub mod uniqueness;

pub use concept::{
    canonical_key, ConceptTuple, CorpusIndex, IndexBuilder, SceneGraph, SynonymLexicon,
};
pub use error::{Error, Result};
pub use extract::{extract_tuples, ExtractorConfig};
pub use harness::{geo_mean, pairwise_accuracy, pearson, template_caption};
pub use lm::{interpolate_logprob, train_unigram, TokenLogProbs, UnigramLm};
pub use rerank::{
    distractor_analysis, grid_search, rerank, Candidate, CandidateSet, LmKind, RerankConfig,
};
pub use spice::{chairs, match_tuples, spice, MatchResult, SpiceScore};
pub use uniqueness::{
    spice_u, un, uniq, uniqueness, PoolMode, SpiceUScore, Uniqueness, UniquenessReport,
};
