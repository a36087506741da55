//! Maximum-mutual-information re-ranking of beam candidates, the
//! distractor-preference analysis and the re-ranking hyperparameter search.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::lm::{interpolate_logprob, TokenLogProbs, UnigramLm};

/// One beam candidate.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub tokens: Vec<String>,
    /// `log P(s | I)` under the captioning model.
    pub logp_cond: f64,
    /// External LM log-probabilities, one per token plus EOS.
    pub token_logps: Option<TokenLogProbs>,
}

impl Candidate {
    pub fn new(tokens: Vec<String>, logp_cond: f64, token_logps: Option<Vec<f64>>) -> Result<Self> {
        if !(logp_cond.is_finite() && logp_cond <= 0.0) {
            return Err(Error::InvalidValue(format!(
                "conditional log-prob {logp_cond} must be finite and <= 0"
            )));
        }
        let token_logps = token_logps
            .map(|v| TokenLogProbs::new(tokens.len(), v))
            .transpose()?;
        Ok(Self {
            tokens,
            logp_cond,
            token_logps,
        })
    }

    pub fn text(&self) -> String {
        self.tokens.join(" ")
    }
}

/// An image's beam candidates in beam rank order.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateSet {
    pub image_id: String,
    candidates: Vec<Candidate>,
}

impl CandidateSet {
    pub fn new(image_id: impl Into<String>, candidates: Vec<Candidate>) -> Result<Self> {
        let image_id = image_id.into();
        if candidates.is_empty() {
            return Err(Error::EmptyCandidates(image_id));
        }
        Ok(Self {
            image_id,
            candidates,
        })
    }

    pub fn candidates(&self) -> &[Candidate] {
        &self.candidates
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }
}

/// Which language model supplies `log P(s)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LmKind {
    Unigram,
    External,
    /// Log-linear mix, `alpha` on the unigram side.
    Interpolated {
        alpha: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RerankConfig {
    /// Weight of the LM term.
    pub lambda: f64,
    pub lm: LmKind,
    /// Divide `log P(s)` by the number of scored events (tokens + EOS).
    pub length_normalize: bool,
}

impl RerankConfig {
    pub fn new(lambda: f64, lm: LmKind) -> Result<Self> {
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(Error::InvalidValue(format!(
                "lambda {lambda} must be finite and >= 0"
            )));
        }
        if let LmKind::Interpolated { alpha } = lm {
            if !(0.0..=1.0).contains(&alpha) {
                return Err(Error::InvalidValue(format!("alpha {alpha} outside [0, 1]")));
            }
        }
        Ok(Self {
            lambda,
            lm,
            length_normalize: false,
        })
    }

    pub fn length_normalized(mut self, on: bool) -> Self {
        self.length_normalize = on;
        self
    }

    pub fn needs_unigram(&self) -> bool {
        !matches!(self.lm, LmKind::External)
    }

    pub fn needs_external(&self) -> bool {
        !matches!(self.lm, LmKind::Unigram)
    }
}

/// `log P(s)` of one candidate under the configured LM.
pub fn candidate_lm_logprob(
    candidate: &Candidate,
    index: usize,
    image_id: &str,
    unigram: Option<&UnigramLm>,
    cfg: &RerankConfig,
) -> Result<f64> {
    let unigram_model = || {
        unigram.ok_or_else(|| {
            Error::InvalidValue("a unigram model is required for this LM".to_string())
        })
    };
    let external = || {
        candidate
            .token_logps
            .as_ref()
            .ok_or_else(|| Error::MissingTokenLogProbs {
                image_id: image_id.to_string(),
                candidate: index,
            })
    };
    let total = match cfg.lm {
        LmKind::Unigram => unigram_model()?.sentence_logprob(&candidate.tokens)?,
        LmKind::External => external()?.sentence_logprob(),
        LmKind::Interpolated { alpha } => {
            let ext = external()?;
            let uni = unigram_model()?.token_logprobs(&candidate.tokens)?;
            interpolate_logprob(&uni, ext.as_slice(), alpha)?.sentence
        }
    };
    Ok(if cfg.length_normalize {
        total / (candidate.tokens.len() + 1) as f64
    } else {
        total
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RerankOutcome {
    pub selected: usize,
    pub scores: Vec<f64>,
    pub lm_logprobs: Vec<f64>,
}

/// Scores `cond - lambda * lm` per candidate and returns the argmax, ties
/// going to the earliest candidate.
pub fn select(cond: &[f64], lm: &[f64], lambda: f64) -> (usize, Vec<f64>) {
    let scores: Vec<f64> = cond.iter().zip(lm).map(|(c, l)| c - lambda * l).collect();
    let mut best = 0;
    for (i, s) in scores.iter().enumerate().skip(1) {
        if *s > scores[best] {
            best = i;
        }
    }
    (best, scores)
}

/// Picks the candidate maximizing `log P(s|I) - lambda * log P(s)`.
pub fn rerank(
    set: &CandidateSet,
    unigram: Option<&UnigramLm>,
    cfg: &RerankConfig,
) -> Result<RerankOutcome> {
    let lm_logprobs = set
        .candidates
        .iter()
        .enumerate()
        .map(|(i, c)| candidate_lm_logprob(c, i, &set.image_id, unigram, cfg))
        .collect::<Result<Vec<_>>>()?;
    let cond: Vec<f64> = set.candidates.iter().map(|c| c.logp_cond).collect();
    let (selected, scores) = select(&cond, &lm_logprobs, cfg.lambda);
    Ok(RerankOutcome {
        selected,
        scores,
        lm_logprobs,
    })
}

/// A sentence's total log-likelihood and its token count (EOS excluded).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SentenceLikelihood {
    pub total: f64,
    pub num_tokens: usize,
}

impl SentenceLikelihood {
    pub fn new(total: f64, num_tokens: usize) -> Self {
        Self { total, num_tokens }
    }

    pub fn value(&self, cmp: Comparator) -> f64 {
        match cmp {
            Comparator::Total => self.total,
            Comparator::MeanPerToken => self.total / (self.num_tokens + 1) as f64,
        }
    }
}

/// How distractor and ground-truth likelihoods are compared.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Comparator {
    #[default]
    Total,
    /// Total divided by tokens + EOS.
    MeanPerToken,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistractorReport {
    pub fraction: f64,
    /// Per image, in id order: whether some flagged distractor beat some
    /// ground-truth caption.
    pub per_image: Vec<(String, bool)>,
}

/// Fraction of images where some flagged distractor `d` and some
/// ground-truth caption `g` have `P(d|I) > P(g|I)`.
///
/// Images without flagged distractors stay in the denominator.
pub fn distractor_analysis(
    ground_truth: &BTreeMap<String, Vec<SentenceLikelihood>>,
    distractors: &BTreeMap<String, Vec<(usize, SentenceLikelihood)>>,
    flags: &BTreeMap<String, BTreeSet<usize>>,
    cmp: Comparator,
) -> Result<DistractorReport> {
    let mut per_image = Vec::with_capacity(ground_truth.len());
    let mut hits = 0usize;
    for (image_id, gts) in ground_truth {
        let worst_gt = gts
            .iter()
            .map(|g| g.value(cmp))
            .min_by(f64::total_cmp)
            .ok_or_else(|| {
                Error::InvalidValue(format!(
                    "image {image_id:?} has no ground-truth likelihoods"
                ))
            })?;
        let flagged = flags.get(image_id);
        let hit = distractors.get(image_id).is_some_and(|ds| {
            ds.iter()
                .filter(|(id, _)| flagged.is_some_and(|f| f.contains(id)))
                .any(|(_, d)| d.value(cmp) > worst_gt)
        });
        hits += usize::from(hit);
        per_image.push((image_id.clone(), hit));
    }
    let fraction = if per_image.is_empty() {
        0.0
    } else {
        hits as f64 / per_image.len() as f64
    };
    Ok(DistractorReport {
        fraction,
        per_image,
    })
}

/// `steps + 1` evenly spaced points on `[0, 1]`, computed as `i / steps`.
pub fn unit_grid(steps: usize) -> Vec<f64> {
    if steps == 0 {
        return alloc::vec![0.0];
    }
    (0..=steps).map(|i| i as f64 / steps as f64).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub lambda: f64,
    pub alpha: f64,
    pub score: f64,
}

/// Best of already-evaluated grid points: highest score, ties to smaller
/// lambda then smaller alpha. NaN scores rank below everything.
pub fn best_grid_point(points: &[GridPoint]) -> Option<GridPoint> {
    let key = |p: &GridPoint| {
        if p.score.is_nan() {
            f64::NEG_INFINITY
        } else {
            p.score
        }
    };
    points.iter().copied().reduce(|best, p| {
        let (kb, kp) = (key(&best), key(&p));
        let better = kp > kb
            || (kp == kb
                && (p.lambda, p.alpha).partial_cmp(&(best.lambda, best.alpha))
                    == Some(core::cmp::Ordering::Less));
        if better {
            p
        } else {
            best
        }
    })
}

/// Exhaustively evaluates `aggregate(lambda, alpha)` over the grid and
/// returns the best point together with every evaluated point.
pub fn grid_search<F>(
    lambdas: &[f64],
    alphas: &[f64],
    mut aggregate: F,
) -> Result<(GridPoint, Vec<GridPoint>)>
where
    F: FnMut(f64, f64) -> f64,
{
    if lambdas.is_empty() || alphas.is_empty() {
        return Err(Error::InvalidValue(
            "grid search needs non-empty grids".to_string(),
        ));
    }
    let mut points = Vec::with_capacity(lambdas.len() * alphas.len());
    for &lambda in lambdas {
        for &alpha in alphas {
            points.push(GridPoint {
                lambda,
                alpha,
                score: aggregate(lambda, alpha),
            });
        }
    }
    let best = best_grid_point(&points).expect("grid is non-empty");
    Ok((best, points))
}
