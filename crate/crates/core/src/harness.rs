//! Evaluation protocols: the template captioner baseline, agreement with
//! pairwise human judgements, Pearson correlation and the geometric-mean
//! aggregate over metrics.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::error::{Error, Result};
use crate::text::normalize_phrase;

#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub class: String,
    pub score: f64,
}

impl Detection {
    pub fn new(class: impl Into<String>, score: f64) -> Self {
        Self {
            class: class.into(),
            score,
        }
    }
}

/// The `top_n` most frequent classes, ties broken by name.
pub fn top_classes(class_freq: &BTreeMap<String, u64>, top_n: usize) -> Vec<String> {
    let mut ranked: Vec<(&String, u64)> = class_freq.iter().map(|(c, &f)| (c, f)).collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    ranked
        .into_iter()
        .take(top_n)
        .map(|(c, _)| normalize_phrase(c))
        .collect()
}

/// Joins names as `a`, `a and b`, `a, b and c`.
fn join_list(names: &[String]) -> String {
    match names {
        [] => String::new(),
        [one] => one.clone(),
        [init @ .., last] => format!("{} and {last}", init.join(", ")),
    }
}

/// Builds "There is a ..." from detections scoring at least `threshold`
/// whose class is among the `top_n` most frequent. Classes keep their first
/// detection order and appear once. Returns `None` when nothing survives.
pub fn template_caption(
    detections: &[Detection],
    class_freq: &BTreeMap<String, u64>,
    top_n: usize,
    threshold: f64,
) -> Result<Option<String>> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::InvalidValue(format!(
            "threshold {threshold} outside [0, 1]"
        )));
    }
    let known: BTreeMap<String, u64> = class_freq
        .iter()
        .map(|(c, &f)| (normalize_phrase(c), f))
        .collect();
    if let Some(d) = detections
        .iter()
        .find(|d| !known.contains_key(&normalize_phrase(&d.class)))
    {
        return Err(Error::UnknownClass(d.class.clone()));
    }
    let allowed = top_classes(&known, top_n);
    let mut kept: Vec<String> = Vec::new();
    for d in detections {
        let class = normalize_phrase(&d.class);
        if d.score >= threshold && allowed.contains(&class) && !kept.contains(&class) {
            kept.push(class);
        }
    }
    if kept.is_empty() {
        return Ok(None);
    }
    Ok(Some(format!("There is a {}", join_list(&kept))))
}

/// Pair category of a judgement: human-correct, human-incorrect,
/// human-model, model-model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Category {
    HC,
    HI,
    HM,
    MM,
}

impl Category {
    pub const ALL: [Category; 4] = [Category::HC, Category::HI, Category::HM, Category::MM];

    pub fn as_str(self) -> &'static str {
        match self {
            Category::HC => "HC",
            Category::HI => "HI",
            Category::HM => "HM",
            Category::MM => "MM",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Category {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "HC" => Ok(Category::HC),
            "HI" => Ok(Category::HI),
            "HM" => Ok(Category::HM),
            "MM" => Ok(Category::MM),
            other => Err(Error::InvalidValue(format!(
                "unknown judgement category {other:?}"
            ))),
        }
    }
}

/// Human votes on which of two captions better matches the references.
#[derive(Debug, Clone, PartialEq)]
pub struct JudgementRecord {
    pub image_id: String,
    pub caption_b: String,
    pub caption_c: String,
    pub votes_b: u32,
    pub votes_c: u32,
    pub category: Category,
    pub references: Vec<String>,
}

impl JudgementRecord {
    fn validate(&self) -> Result<()> {
        if self.references.is_empty() {
            return Err(Error::EmptyReferences(self.image_id.clone()));
        }
        if self.votes_b + self.votes_c == 0 {
            return Err(Error::InvalidValue(format!(
                "judgement for {:?} has no votes",
                self.image_id
            )));
        }
        Ok(())
    }

    /// Mean vote with +1 for b and -1 for c.
    pub fn mean_vote(&self) -> f64 {
        (self.votes_b as f64 - self.votes_c as f64) / (self.votes_b + self.votes_c) as f64
    }

    /// Captions ordered (favored, other), or `None` on a vote tie.
    pub fn favored(&self) -> Option<(&str, &str)> {
        match self.votes_b.cmp(&self.votes_c) {
            core::cmp::Ordering::Greater => Some((&self.caption_b, &self.caption_c)),
            core::cmp::Ordering::Less => Some((&self.caption_c, &self.caption_b)),
            core::cmp::Ordering::Equal => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CategoryAccuracy {
    pub agreements: usize,
    pub total: usize,
    /// Percent.
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AccuracyReport {
    pub per_category: BTreeMap<Category, CategoryAccuracy>,
    /// Unweighted mean of the non-empty category accuracies, in percent.
    pub all: f64,
    /// Records with tied votes, excluded from every accuracy.
    pub skipped_ties: usize,
}

/// Percentage of records where `metric(favored) >= metric(other)`.
pub fn pairwise_accuracy<F>(records: &[JudgementRecord], mut metric: F) -> Result<AccuracyReport>
where
    F: FnMut(&str, &[String]) -> f64,
{
    let mut tallies: BTreeMap<Category, (usize, usize)> = BTreeMap::new();
    let mut skipped_ties = 0;
    for r in records {
        r.validate()?;
        let Some((favored, other)) = r.favored() else {
            skipped_ties += 1;
            continue;
        };
        let agree = metric(favored, &r.references) >= metric(other, &r.references);
        let t = tallies.entry(r.category).or_insert((0, 0));
        t.0 += usize::from(agree);
        t.1 += 1;
    }
    let per_category: BTreeMap<Category, CategoryAccuracy> = tallies
        .into_iter()
        .map(|(c, (agreements, total))| {
            (
                c,
                CategoryAccuracy {
                    agreements,
                    total,
                    accuracy: 100.0 * agreements as f64 / total as f64,
                },
            )
        })
        .collect();
    let all = if per_category.is_empty() {
        0.0
    } else {
        per_category.values().map(|a| a.accuracy).sum::<f64>() / per_category.len() as f64
    };
    Ok(AccuracyReport {
        per_category,
        all,
        skipped_ties,
    })
}

/// Sample Pearson correlation coefficient.
pub fn pearson_correlation(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::Alignment {
            expected: xs.len(),
            found: ys.len(),
        });
    }
    if xs.len() < 2 {
        return Err(Error::DegenerateCorrelation);
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return Err(Error::DegenerateCorrelation);
    }
    Ok((sxy / libm::sqrt(sxx * syy)).clamp(-1.0, 1.0))
}

/// Correlation between each record's mean human vote and the metric's
/// score difference `metric(b) - metric(c)`. Records keep their ingested
/// b/c orientation and vote ties are included.
pub fn pearson<F>(records: &[JudgementRecord], mut metric: F) -> Result<f64>
where
    F: FnMut(&str, &[String]) -> f64,
{
    let mut votes = Vec::with_capacity(records.len());
    let mut diffs = Vec::with_capacity(records.len());
    for r in records {
        r.validate()?;
        votes.push(r.mean_vote());
        diffs.push(metric(&r.caption_b, &r.references) - metric(&r.caption_c, &r.references));
    }
    pearson_correlation(&votes, &diffs)
}

/// Geometric mean of named metric values. The value named `chair_key`, if
/// any, is inverted first since lower is better for it.
pub fn geo_mean<S: AsRef<str>>(values: &[(S, f64)], chair_key: Option<&str>) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::InvalidValue(
            "geometric mean of no values".to_string(),
        ));
    }
    let mut log_sum = 0.0;
    for (name, v) in values {
        let name = name.as_ref();
        if !(v.is_finite() && *v > 0.0) {
            return Err(Error::NonPositive(name.to_string()));
        }
        let v = if chair_key == Some(name) { 1.0 / v } else { *v };
        log_sum += libm::log(v);
    }
    Ok(libm::exp(log_sum / values.len() as f64))
}
