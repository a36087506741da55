//! Sentence language models: an add-k unigram model, externally supplied
//! per-token log-probabilities and their log-linear interpolation.
//!
//! Every sentence ends with one [`EOS`] token and there is no start token, so
//! a sentence of `n` tokens is scored over `n + 1` events.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::{Error, Result};
pub use crate::text::EOS;

/// Unigram model with add-`k` smoothing and one unknown-token slot:
/// `P(w) = (count(w) + k) / (total + k * (|V| + 1))`, `|V|` counting EOS.
#[derive(Debug, Clone, PartialEq)]
pub struct UnigramLm {
    counts: BTreeMap<String, u64>,
    total: u64,
    k: f64,
}

pub fn train_unigram<S: AsRef<str>>(captions: &[Vec<S>], k: f64) -> Result<UnigramLm> {
    UnigramLm::train(captions.iter().map(|c| c.iter().map(AsRef::as_ref)), k)
}

impl UnigramLm {
    /// Counts tokens over `captions`, each extended by one EOS.
    pub fn train<'a, C, T>(captions: C, k: f64) -> Result<Self>
    where
        C: IntoIterator<Item = T>,
        T: IntoIterator<Item = &'a str>,
    {
        if !(k.is_finite() && k >= 0.0) {
            return Err(Error::InvalidValue(format!(
                "smoothing constant {k} must be finite and >= 0"
            )));
        }
        let mut counts: BTreeMap<String, u64> = BTreeMap::new();
        let mut total = 0u64;
        let mut sentences = 0u64;
        for caption in captions {
            sentences += 1;
            for tok in caption {
                *counts.entry(tok.to_string()).or_insert(0) += 1;
                total += 1;
            }
        }
        if sentences == 0 {
            return Err(Error::EmptyCorpus);
        }
        *counts.entry(EOS.to_string()).or_insert(0) += sentences;
        total += sentences;
        Ok(Self { counts, total, k })
    }

    pub fn smoothing(&self) -> f64 {
        self.k
    }

    /// Distinct tokens seen in training, EOS included.
    pub fn vocab_size(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn count(&self, token: &str) -> u64 {
        self.counts.get(token).copied().unwrap_or(0)
    }

    fn denominator(&self) -> f64 {
        self.total as f64 + self.k * (self.counts.len() + 1) as f64
    }

    pub fn prob(&self, token: &str) -> f64 {
        (self.count(token) as f64 + self.k) / self.denominator()
    }

    /// Probability mass of the single unknown-token slot.
    pub fn unknown_prob(&self) -> f64 {
        self.k / self.denominator()
    }

    /// Vocabulary tokens with their probabilities, in token order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.counts.keys().map(|t| (t.as_str(), self.prob(t)))
    }

    pub fn logprob(&self, token: &str) -> Result<f64> {
        let p = self.prob(token);
        if p <= 0.0 {
            return Err(Error::ZeroProbability(token.to_string()));
        }
        Ok(libm::log(p))
    }

    /// Per-token log-probabilities of `tokens` followed by EOS.
    pub fn token_logprobs<S: AsRef<str>>(&self, tokens: &[S]) -> Result<Vec<f64>> {
        tokens
            .iter()
            .map(|t| t.as_ref())
            .chain(core::iter::once(EOS))
            .map(|t| self.logprob(t))
            .collect()
    }

    pub fn sentence_logprob<S: AsRef<str>>(&self, tokens: &[S]) -> Result<f64> {
        Ok(self.token_logprobs(tokens)?.iter().sum())
    }
}

/// Per-token log-probabilities from an external model, one per token plus
/// one for EOS. Every entry is finite and `<= 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenLogProbs(Vec<f64>);

impl TokenLogProbs {
    pub fn new(num_tokens: usize, logps: Vec<f64>) -> Result<Self> {
        if logps.len() != num_tokens + 1 {
            return Err(Error::Alignment {
                expected: num_tokens + 1,
                found: logps.len(),
            });
        }
        if let Some(bad) = logps.iter().find(|v| !(v.is_finite() && **v <= 0.0)) {
            return Err(Error::InvalidValue(format!(
                "token log-prob {bad} must be finite and <= 0"
            )));
        }
        Ok(Self(logps))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn num_tokens(&self) -> usize {
        self.0.len() - 1
    }

    pub fn sentence_logprob(&self) -> f64 {
        self.0.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Interpolated {
    pub per_token: Vec<f64>,
    pub sentence: f64,
}

/// Log-linear interpolation `alpha * log P_uni + (1 - alpha) * log P_ext`,
/// per token and unnormalized.
pub fn interpolate_logprob(unigram: &[f64], external: &[f64], alpha: f64) -> Result<Interpolated> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidValue(format!("alpha {alpha} outside [0, 1]")));
    }
    if unigram.len() != external.len() {
        return Err(Error::Alignment {
            expected: unigram.len(),
            found: external.len(),
        });
    }
    let per_token: Vec<f64> = unigram
        .iter()
        .zip(external)
        .map(|(u, e)| alpha * u + (1.0 - alpha) * e)
        .collect();
    let sentence = per_token.iter().sum();
    Ok(Interpolated {
        per_token,
        sentence,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use alloc::vec::Vec;

    fn corpus(lines: &[&str]) -> Vec<Vec<String>> {
        lines.iter().map(|l| crate::text::tokenize(l)).collect()
    }

    #[test]
    fn counts_with_eos() {
        let lm = train_unigram(&corpus(&["a cat", "a dog"]), 0.0).unwrap();
        assert_eq!(lm.count("a"), 2);
        assert_eq!(lm.count(EOS), 2);
        assert_eq!(lm.total(), 6);
        assert_eq!(lm.vocab_size(), 4);
        assert!((lm.prob("a") - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn add_one_unknown() {
        let lm = train_unigram(&corpus(&["a cat", "a dog"]), 1.0).unwrap();
        assert!((lm.unknown_prob() - 1.0 / 11.0).abs() < 1e-15);
        assert!((lm.prob("a") - 3.0 / 11.0).abs() < 1e-15);
    }

    #[test]
    fn single_token_corpus() {
        let lm = train_unigram(&corpus(&["a"]), 0.0).unwrap();
        assert_eq!(lm.prob("a"), 0.5);
        assert_eq!(lm.prob(EOS), 0.5);
    }

    #[test]
    fn sentence_scores() {
        let lm = train_unigram(&corpus(&["a cat", "a dog"]), 0.0).unwrap();
        let s = lm.sentence_logprob(&["a", "cat"]).unwrap();
        let expected = libm::log(1.0 / 3.0) + libm::log(1.0 / 6.0) + libm::log(1.0 / 3.0);
        assert!((s - expected).abs() < 1e-12);
        let empty: [&str; 0] = [];
        assert!((lm.sentence_logprob(&empty).unwrap() - libm::log(1.0 / 3.0)).abs() < 1e-12);
        assert_eq!(
            lm.sentence_logprob(&["a", "zebra"]),
            Err(Error::ZeroProbability("zebra".to_string()))
        );
    }

    #[test]
    fn training_errors() {
        let none: Vec<Vec<String>> = vec![];
        assert_eq!(train_unigram(&none, 1.0), Err(Error::EmptyCorpus));
        assert!(matches!(
            train_unigram(&corpus(&["a"]), -1.0),
            Err(Error::InvalidValue(_))
        ));
    }

    #[test]
    fn table_sum_and_alignment() {
        let t = TokenLogProbs::new(2, vec![-1.0, -2.0, -0.5]).unwrap();
        assert_eq!(t.sentence_logprob(), -3.5);
        assert_eq!(
            TokenLogProbs::new(3, vec![-1.0, -2.0, -0.5]),
            Err(Error::Alignment {
                expected: 4,
                found: 3
            })
        );
        assert!(TokenLogProbs::new(0, vec![0.5]).is_err());
    }

    #[test]
    fn interpolation() {
        let u = [-1.0, -3.0];
        let e = [-2.0, -1.0];
        assert_eq!(
            interpolate_logprob(&u, &e, 1.0).unwrap().per_token,
            u.to_vec()
        );
        assert_eq!(
            interpolate_logprob(&u, &e, 0.0).unwrap().per_token,
            e.to_vec()
        );
        let half = interpolate_logprob(&u, &e, 0.5).unwrap();
        assert_eq!(half.per_token, vec![-1.5, -2.0]);
        assert_eq!(half.sentence, -3.5);
        assert!(matches!(
            interpolate_logprob(&u, &e[..1], 0.5),
            Err(Error::Alignment { .. })
        ));
        assert!(matches!(
            interpolate_logprob(&u, &e, 1.5),
            Err(Error::InvalidValue(_))
        ));
    }
}
