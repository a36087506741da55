//! Independent oracles and random instance generators shared by the
//! property and acceptance suites.
#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use spiceu_core::{ConceptTuple, CorpusIndex, SceneGraph, SynonymLexicon};

/// Images in generated indexes. A power of two keeps every `Un` value and
/// every sum of up to 12 of them exact in f64.
pub const DYADIC_IMAGES: usize = 1024;

pub fn obj(name: &str) -> ConceptTuple {
    ConceptTuple::object(name).unwrap()
}

pub fn graph(id: &str, names: &[String]) -> SceneGraph {
    SceneGraph::from_tuples(id, names.iter().map(|n| obj(n)))
}

/// A random uniqueness instance over a pool of at most `max_pool` concepts.
pub struct UniqInstance {
    pub predicted: Vec<String>,
    pub reference: Vec<String>,
    pub index: CorpusIndex,
}

pub fn random_uniq_instance<R: Rng>(rng: &mut R, max_pool: usize) -> UniqInstance {
    let pool_size = rng.gen_range(1..=max_pool);
    let names: Vec<String> = (0..pool_size).map(|i| format!("c{i}")).collect();
    // every pool concept lands in P, G or both
    let mut predicted = Vec::new();
    let mut reference = Vec::new();
    for n in &names {
        match rng.gen_range(0..3) {
            0 => predicted.push(n.clone()),
            1 => reference.push(n.clone()),
            _ => {
                predicted.push(n.clone());
                reference.push(n.clone());
            }
        }
    }
    if predicted.is_empty() {
        predicted.push(reference.pop().unwrap());
    }
    let mut df = BTreeMap::new();
    for n in &names {
        // few distinct values so ties show up
        let count = if rng.gen_bool(0.3) {
            [0, 256, 512, 1024][rng.gen_range(0..4)]
        } else {
            rng.gen_range(0..=DYADIC_IMAGES)
        };
        if count > 0 {
            df.insert(n.clone(), count);
        }
    }
    predicted.shuffle(rng);
    reference.shuffle(rng);
    UniqInstance {
        predicted,
        reference,
        index: CorpusIndex::from_counts(DYADIC_IMAGES, df).unwrap(),
    }
}

fn oracle_un(index: &CorpusIndex, name: &str) -> f64 {
    let n = index.num_images() as f64;
    (n - index.df(name) as f64) / n
}

/// Normalized uniqueness by enumerating every same-size subset of the pool.
pub fn brute_force_uniq(predicted: &[String], reference: &[String], index: &CorpusIndex) -> f64 {
    let mut pool: Vec<&String> = predicted.iter().chain(reference).collect();
    pool.sort();
    pool.dedup();
    let size = predicted.len();
    let values: Vec<f64> = pool.iter().map(|n| oracle_un(index, n)).collect();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for mask in 0u32..(1 << values.len()) {
        if mask.count_ones() as usize != size {
            continue;
        }
        let s: f64 = (0..values.len())
            .filter(|i| mask & (1 << i) != 0)
            .map(|i| values[i])
            .sum();
        lo = lo.min(s);
        hi = hi.max(s);
    }
    let own: f64 = predicted.iter().map(|n| oracle_un(index, n)).sum();
    if hi == lo {
        1.0
    } else {
        (own - lo) / (hi - lo)
    }
}

/// A random bipartite synonym relation between `|P|` and `|G|` distinct
/// lemmas: each allowed pair gets its own private synset id.
pub struct MatchInstance {
    pub predicted: SceneGraph,
    pub reference: SceneGraph,
    pub lexicon: SynonymLexicon,
    pub allowed: Vec<Vec<bool>>,
}

pub fn random_match_instance<R: Rng>(rng: &mut R, max_side: usize) -> MatchInstance {
    let np = rng.gen_range(0..=max_side);
    let ng = rng.gen_range(0..=max_side);
    let density = rng.gen_range(0.1..0.7);
    let mut lexicon = SynonymLexicon::new();
    let mut allowed = vec![vec![false; ng]; np];
    for (i, row) in allowed.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            if rng.gen_bool(density) {
                *cell = true;
                let id = format!("s{i}_{j}");
                lexicon.insert(&format!("p{i}"), &id);
                lexicon.insert(&format!("g{j}"), &id);
            }
        }
    }
    let pn: Vec<String> = (0..np).map(|i| format!("p{i}")).collect();
    let gn: Vec<String> = (0..ng).map(|j| format!("g{j}")).collect();
    MatchInstance {
        predicted: graph("p", &pn),
        reference: graph("g", &gn),
        lexicon,
        allowed,
    }
}

/// Largest matching by trying every assignment of left vertices.
pub fn brute_force_matching(allowed: &[Vec<bool>]) -> usize {
    fn go(i: usize, allowed: &[Vec<bool>], used: &mut Vec<bool>) -> usize {
        if i == allowed.len() {
            return 0;
        }
        let mut best = go(i + 1, allowed, used);
        for j in 0..used.len() {
            if allowed[i][j] && !used[j] {
                used[j] = true;
                best = best.max(1 + go(i + 1, allowed, used));
                used[j] = false;
            }
        }
        best
    }
    let cols = allowed.first().map_or(0, Vec::len);
    go(0, allowed, &mut vec![false; cols])
}
