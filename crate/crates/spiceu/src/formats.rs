//! Line-oriented file formats. Record files hold one JSON object per line;
//! blank lines are skipped and every parse error carries its line number.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::marker::PhantomData;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use spiceu_core::harness::{Category, JudgementRecord};
use spiceu_core::text::normalize_phrase;
use spiceu_core::{
    extract_tuples, ConceptTuple, CorpusIndex, ExtractorConfig, SceneGraph, SynonymLexicon,
};

use crate::error::{Error, Result};

/// Opens `path` for reading, `-` meaning stdin.
pub fn open(path: &Path) -> Result<Box<dyn BufRead>> {
    if path.as_os_str() == "-" {
        return Ok(Box::new(BufReader::new(io::stdin())));
    }
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(Box::new(BufReader::new(f)))
}

/// Creates `path` for writing, `None` or `-` meaning stdout.
pub fn create(path: Option<&Path>) -> Result<Output> {
    let (inner, path): (Box<dyn Write>, PathBuf) = match path {
        Some(p) if p.as_os_str() != "-" => {
            let f = File::create(p).map_err(|e| Error::io(p, e))?;
            (Box::new(BufWriter::new(f)), p.to_path_buf())
        }
        _ => (
            Box::new(BufWriter::new(io::stdout())),
            PathBuf::from("<stdout>"),
        ),
    };
    Ok(Output { inner, path })
}

pub struct Output {
    inner: Box<dyn Write>,
    path: PathBuf,
}

impl Output {
    pub fn line(&mut self, text: &str) -> Result<()> {
        writeln!(self.inner, "{text}").map_err(|e| Error::io(&self.path, e))
    }

    pub fn record<T: Serialize>(&mut self, record: &T) -> Result<()> {
        let text = serde_json::to_string(record).map_err(|e| Error::file(&self.path, e))?;
        self.line(&text)
    }

    pub fn finish(mut self) -> Result<()> {
        self.inner.flush().map_err(|e| Error::io(&self.path, e))
    }
}

/// Streams `(line number, record)` pairs from a JSON-lines file.
pub struct Records<T> {
    path: PathBuf,
    lines: io::Lines<Box<dyn BufRead>>,
    line_no: usize,
    _record: PhantomData<T>,
}

impl<T> Records<T> {
    pub fn path(&self) -> &Path {
        &self.path
    }
}

pub fn records<T: DeserializeOwned>(path: &Path) -> Result<Records<T>> {
    Ok(Records {
        path: path.to_path_buf(),
        lines: open(path)?.lines(),
        line_no: 0,
        _record: PhantomData,
    })
}

impl<T: DeserializeOwned> Iterator for Records<T> {
    type Item = Result<(usize, T)>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let line = match self.lines.next()? {
                Ok(l) => l,
                Err(e) => return Some(Err(Error::io(&self.path, e))),
            };
            self.line_no += 1;
            if line.trim().is_empty() {
                continue;
            }
            return Some(
                serde_json::from_str(&line)
                    .map(|r| (self.line_no, r))
                    .map_err(|e| Error::line(&self.path, self.line_no, e)),
            );
        }
    }
}

/// Non-blank, non-comment lines of a text file with their line numbers.
pub fn text_lines(path: &Path) -> Result<Vec<(usize, String)>> {
    let mut out = Vec::new();
    for (i, line) in open(path)?.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        out.push((i + 1, line.to_string()));
    }
    Ok(out)
}

pub fn read_to_string(path: &Path) -> Result<String> {
    let mut text = String::new();
    open(path)?
        .read_to_string(&mut text)
        .map_err(|e| Error::io(path, e))?;
    Ok(text)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneGraphRecord {
    pub image_id: String,
    pub tuples: Vec<Vec<String>>,
}

impl SceneGraphRecord {
    pub fn from_graph(graph: &SceneGraph) -> Self {
        Self {
            image_id: graph.image_id.clone(),
            tuples: graph.iter().map(|t| t.slots().to_vec()).collect(),
        }
    }

    pub fn into_graph(self) -> spiceu_core::Result<SceneGraph> {
        let tuples = self
            .tuples
            .iter()
            .map(ConceptTuple::new)
            .collect::<spiceu_core::Result<Vec<_>>>()?;
        Ok(SceneGraph::from_tuples(self.image_id, tuples))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaptionRecord {
    pub image_id: String,
    pub caption: String,
}

/// A line holding either pre-parsed tuples or caption text.
#[derive(Debug, Clone, Deserialize)]
pub struct GraphOrCaption {
    pub image_id: String,
    #[serde(default)]
    pub tuples: Option<Vec<Vec<String>>>,
    #[serde(default)]
    pub caption: Option<String>,
}

impl GraphOrCaption {
    /// Whether the line held caption text (as opposed to tuples).
    pub fn is_caption(&self) -> bool {
        self.tuples.is_none()
    }

    pub fn into_graph(self, cfg: &ExtractorConfig) -> std::result::Result<SceneGraph, String> {
        match (self.tuples, self.caption) {
            (Some(tuples), None) => SceneGraphRecord {
                image_id: self.image_id,
                tuples,
            }
            .into_graph()
            .map_err(|e| e.to_string()),
            (None, Some(caption)) => {
                let mut g = extract_tuples(&caption, cfg);
                g.image_id = self.image_id;
                Ok(g)
            }
            (Some(_), Some(_)) => Err("record has both \"tuples\" and \"caption\"".to_string()),
            (None, None) => Err("record needs \"tuples\" or \"caption\"".to_string()),
        }
    }
}

/// Reads a scene-graph file into graphs in file order. Each image id may
/// appear once.
pub fn load_scene_graphs(path: &Path) -> Result<Vec<SceneGraph>> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for rec in records::<SceneGraphRecord>(path)? {
        let (line, rec) = rec?;
        if !seen.insert(rec.image_id.clone()) {
            return Err(Error::line(
                path,
                line,
                format!("duplicate image id {:?}", rec.image_id),
            ));
        }
        out.push(rec.into_graph().map_err(|e| Error::line(path, line, e))?);
    }
    Ok(out)
}

/// Reads reference annotations keyed by image. Caption lines sharing an id
/// are extracted and merged; a tuple line must be the only line for its id.
pub fn load_references(path: &Path, cfg: &ExtractorConfig) -> Result<BTreeMap<String, SceneGraph>> {
    let mut graphs: BTreeMap<String, (SceneGraph, bool)> = BTreeMap::new();
    for rec in records::<GraphOrCaption>(path)? {
        let (line, rec) = rec?;
        let from_caption = rec.is_caption();
        let id = rec.image_id.clone();
        let g = rec
            .into_graph(cfg)
            .map_err(|e| Error::line(path, line, e))?;
        match graphs.get_mut(&id) {
            None => {
                graphs.insert(id, (g, from_caption));
            }
            Some((existing, true)) if from_caption => existing.merge(&g),
            Some(_) => {
                return Err(Error::line(
                    path,
                    line,
                    format!("duplicate image id {id:?}"),
                ))
            }
        }
    }
    Ok(graphs.into_iter().map(|(k, (g, _))| (k, g)).collect())
}

/// Writes `num_images` on the first line, then `key<TAB>df` in key order.
pub fn write_index<W: Write>(index: &CorpusIndex, mut out: W) -> io::Result<()> {
    writeln!(out, "{}", index.num_images())?;
    for (key, df) in index.iter() {
        writeln!(out, "{key}\t{df}")?;
    }
    out.flush()
}

pub fn save_index(index: &CorpusIndex, path: &Path) -> Result<()> {
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    write_index(index, BufWriter::new(f)).map_err(|e| Error::io(path, e))
}

pub fn load_index(path: &Path) -> Result<CorpusIndex> {
    let mut lines = open(path)?.lines().enumerate();
    let num_images = loop {
        match lines.next() {
            None => return Err(Error::file(path, "missing num_images header")),
            Some((i, line)) => {
                let line = line.map_err(|e| Error::io(path, e))?;
                if line.trim().is_empty() {
                    continue;
                }
                break line.trim().parse::<usize>().map_err(|_| {
                    Error::line(path, i + 1, format!("expected image count, got {line:?}"))
                })?;
            }
        }
    };
    let mut df = BTreeMap::new();
    for (i, line) in lines {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed = line
            .split_once('\t')
            .and_then(|(k, v)| Some((k, v.trim().parse::<usize>().ok()?)));
        let Some((key, count)) = parsed else {
            return Err(Error::line(
                path,
                i + 1,
                format!("expected key<TAB>df, got {line:?}"),
            ));
        };
        if df.insert(key.to_string(), count).is_some() {
            return Err(Error::line(path, i + 1, format!("duplicate key {key:?}")));
        }
    }
    CorpusIndex::from_counts(num_images, df).map_err(|e| Error::in_file(path, e))
}

pub fn load_lexicon(path: &Path) -> Result<SynonymLexicon> {
    SynonymLexicon::parse(&read_to_string(path)?).map_err(|e| Error::in_file(path, e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectsRecord {
    pub image_id: String,
    pub objects: Vec<String>,
}

/// Ground-truth object lists keyed by image, names normalized.
pub fn load_objects(path: &Path) -> Result<BTreeMap<String, Vec<String>>> {
    let mut out = BTreeMap::new();
    for rec in records::<ObjectsRecord>(path)? {
        let (line, rec) = rec?;
        let objects = rec.objects.iter().map(|o| normalize_phrase(o)).collect();
        if out.insert(rec.image_id.clone(), objects).is_some() {
            return Err(Error::line(
                path,
                line,
                format!("duplicate image id {:?}", rec.image_id),
            ));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateEntry {
    pub tokens: Vec<String>,
    pub logp_cond: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub token_logps: Option<Vec<f64>>,
}

/// Beam candidates of one image in rank order. Also the layout of
/// likelihood files, where `logp_cond` holds each sentence's log-likelihood.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateRecord {
    pub image_id: String,
    pub candidates: Vec<CandidateEntry>,
}

/// External LM log-probabilities for one candidate: one entry per token
/// plus one for the end of sentence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenLogpRecord {
    pub image_id: String,
    pub candidate_index: usize,
    pub tokens: Vec<String>,
    pub token_logps: Vec<f64>,
}

pub type TokenLogpTable = BTreeMap<(String, usize), (usize, TokenLogpRecord)>;

/// Reads a token log-prob file, checking each record's length, keyed by
/// `(image_id, candidate_index)` with its line number.
pub fn load_token_logps(path: &Path) -> Result<TokenLogpTable> {
    let mut out = BTreeMap::new();
    for rec in records::<TokenLogpRecord>(path)? {
        let (line, rec) = rec?;
        spiceu_core::TokenLogProbs::new(rec.tokens.len(), rec.token_logps.clone())
            .map_err(|e| Error::line(path, line, e))?;
        let key = (rec.image_id.clone(), rec.candidate_index);
        if out.contains_key(&key) {
            return Err(Error::line(
                path,
                line,
                format!("duplicate record for image {:?} candidate {}", key.0, key.1),
            ));
        }
        out.insert(key, (line, rec));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JudgementLine {
    pub image_id: String,
    pub caption_b: String,
    pub caption_c: String,
    pub votes_b: u32,
    pub votes_c: u32,
    pub category: String,
    pub references: Vec<String>,
}

pub fn load_judgements(path: &Path) -> Result<Vec<JudgementRecord>> {
    let mut out = Vec::new();
    for rec in records::<JudgementLine>(path)? {
        let (line, rec) = rec?;
        let category: Category = rec
            .category
            .parse()
            .map_err(|e| Error::line(path, line, e))?;
        if rec.references.is_empty() {
            return Err(Error::line(path, line, "judgement has no references"));
        }
        if rec.votes_b + rec.votes_c == 0 {
            return Err(Error::line(path, line, "judgement has no votes"));
        }
        out.push(JudgementRecord {
            image_id: rec.image_id,
            caption_b: rec.caption_b,
            caption_c: rec.caption_c,
            votes_b: rec.votes_b,
            votes_c: rec.votes_c,
            category,
            references: rec.references,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionEntry {
    pub class: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionRecord {
    pub image_id: String,
    pub detections: Vec<DetectionEntry>,
}

/// Reads `class<TAB>count` lines.
pub fn load_class_freq(path: &Path) -> Result<BTreeMap<String, u64>> {
    let mut out = BTreeMap::new();
    for (line, text) in text_lines(path)? {
        let parsed = text
            .split_once('\t')
            .and_then(|(c, n)| Some((c, n.trim().parse::<u64>().ok()?)));
        let Some((class, count)) = parsed else {
            return Err(Error::line(
                path,
                line,
                format!("expected class<TAB>count, got {text:?}"),
            ));
        };
        if out.insert(class.to_string(), count).is_some() {
            return Err(Error::line(
                path,
                line,
                format!("duplicate class {class:?}"),
            ));
        }
    }
    Ok(out)
}

/// Reads `metric<TAB>value` lines in file order.
pub fn load_metric_values(path: &Path) -> Result<Vec<(String, f64)>> {
    let mut out: Vec<(String, f64)> = Vec::new();
    for (line, text) in text_lines(path)? {
        let parsed = text
            .split_once('\t')
            .and_then(|(m, v)| Some((m.trim(), v.trim().parse::<f64>().ok()?)));
        let Some((metric, value)) = parsed else {
            return Err(Error::line(
                path,
                line,
                format!("expected metric<TAB>value, got {text:?}"),
            ));
        };
        if out.iter().any(|(m, _)| m == metric) {
            return Err(Error::line(
                path,
                line,
                format!("duplicate metric {metric:?}"),
            ));
        }
        out.push((metric.to_string(), value));
    }
    Ok(out)
}

/// Per-image distractor ids that passed the hallucination filter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlagsRecord {
    pub image_id: String,
    pub flagged: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub image_id: String,
    pub precision: f64,
    pub recall: f64,
    pub spice: f64,
    pub uniq: f64,
    pub spice_u: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RerankRecord {
    pub image_id: String,
    pub selected: usize,
    pub caption: String,
    pub scores: Vec<f64>,
    /// `log P(s)` per candidate; absent when the LM was not consulted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lm_logprobs: Option<Vec<f64>>,
}

/// Rounds to `decimals` places the way `{:.N}` prints.
pub fn round_to(x: f64, decimals: usize) -> f64 {
    format!("{x:.decimals$}").parse().unwrap_or(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding_matches_display() {
        assert_eq!(round_to(2.0 / 3.0, 2), 0.67);
        assert_eq!(round_to(0.5137, 2), 0.51);
        assert_eq!(round_to(0.0, 2), 0.0);
    }

    #[test]
    fn graph_record_round_trip() {
        let rec = SceneGraphRecord {
            image_id: "img1".into(),
            tuples: vec![vec!["cat".into()], vec!["cat".into(), "black".into()]],
        };
        let g = rec.clone().into_graph().unwrap();
        assert_eq!(g.len(), 2);
        assert_eq!(SceneGraphRecord::from_graph(&g), rec);
    }

    #[test]
    fn graph_or_caption_needs_exactly_one() {
        let cfg = ExtractorConfig::shipped();
        let both: GraphOrCaption =
            serde_json::from_str(r#"{"image_id":"a","caption":"a cat","tuples":[["cat"]]}"#)
                .unwrap();
        assert!(both.into_graph(&cfg).is_err());
        let none: GraphOrCaption = serde_json::from_str(r#"{"image_id":"a"}"#).unwrap();
        assert!(none.into_graph(&cfg).is_err());
        let cap: GraphOrCaption =
            serde_json::from_str(r#"{"image_id":"a","caption":"a black cat"}"#).unwrap();
        let g = cap.into_graph(&cfg).unwrap();
        assert_eq!(g.image_id, "a");
        assert!(g.contains(&ConceptTuple::object("cat").unwrap()));
    }
}
