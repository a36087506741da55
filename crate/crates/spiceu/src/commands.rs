//! Subcommand implementations. Each returns the one-line summary printed
//! to stderr on success.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::Serialize;
use spiceu_core::harness::Category;
use spiceu_core::rerank::{best_grid_point, candidate_lm_logprob, select, GridPoint};
use spiceu_core::spice::{hallucinated_objects, object_mentions};
use spiceu_core::text::{normalize_phrase, tokenize};
use spiceu_core::{
    chairs, extract_tuples, geo_mean, pairwise_accuracy, pearson, rerank, spice, spice_u,
    template_caption, Candidate, CandidateSet, CorpusIndex, ExtractorConfig, IndexBuilder, LmKind,
    PoolMode, RerankConfig, SceneGraph, UnigramLm,
};

use crate::batch::Workers;
use crate::cli::*;
use crate::config::{extractor, lexicon};
use crate::error::{Error, Result};
use crate::formats::*;

const SHIPPED_DISTRACTORS: &str = include_str!("../data/distractors.txt");

pub fn run(cli: &Cli) -> Result<String> {
    let workers = Workers::new(cli.jobs)?;
    match &cli.command {
        Command::BuildIndex(a) => build_index(a),
        Command::Extract(a) => extract(a, &workers),
        Command::Score(a) => score(a, &workers),
        Command::Rerank(a) => rerank_cmd(a, &workers),
        Command::Distractor(a) => distractor(a),
        Command::TemplateCaption(a) => template(a, &workers),
        Command::Chair(a) => chair(a),
        Command::HumanCorr(a) => human_corr(a),
        Command::Aggregate(a) => aggregate(a),
        Command::GridSearch(a) => grid_search(a, &workers),
    }
}

fn warn_empty(path: &Path) {
    eprintln!("warning: {} has no records", path.display());
}

fn pool_mode(p: Pool) -> PoolMode {
    match p {
        Pool::Exact => PoolMode::Exact,
        Pool::Synonym => PoolMode::SynonymCollapsed,
    }
}

fn mean(sum: f64, n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

fn build_index(a: &BuildIndexArgs) -> Result<String> {
    let mut builder = IndexBuilder::new();
    let input = match (&a.graphs, &a.captions) {
        (Some(path), _) => {
            for rec in records::<SceneGraphRecord>(path)? {
                let (line, rec) = rec?;
                let g = rec.into_graph().map_err(|e| Error::line(path, line, e))?;
                builder.add(&g).map_err(|e| Error::line(path, line, e))?;
            }
            path
        }
        (None, Some(path)) => {
            let cfg = extractor(a.extractor.config.as_deref())?;
            let mut graphs: BTreeMap<String, SceneGraph> = BTreeMap::new();
            for rec in records::<CaptionRecord>(path)? {
                let (_, rec) = rec?;
                let g = extract_tuples(&rec.caption, &cfg);
                graphs
                    .entry(rec.image_id.clone())
                    .or_insert_with(|| SceneGraph::new(rec.image_id))
                    .merge(&g);
            }
            for g in graphs.values() {
                builder.add(g)?;
            }
            path
        }
        (None, None) => {
            return Err(Error::Usage(
                "build-index needs --graphs or --captions".into(),
            ))
        }
    };
    let index = builder.finish().map_err(|e| Error::in_file(input, e))?;
    save_index(&index, &a.out)?;
    Ok(format!(
        "indexed {} images, {} concepts -> {}",
        index.num_images(),
        index.len(),
        a.out.display()
    ))
}

fn extract(a: &ExtractArgs, workers: &Workers) -> Result<String> {
    let cfg = extractor(a.extractor.config.as_deref())?;
    let path = &a.captions;
    let mut out = create(a.out.as_deref())?;
    let mut tuples = 0usize;
    let n = if a.merge {
        let mut order: Vec<String> = Vec::new();
        let mut captions: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for rec in records::<CaptionRecord>(path)? {
            let (_, rec) = rec?;
            if !captions.contains_key(&rec.image_id) {
                order.push(rec.image_id.clone());
            }
            captions.entry(rec.image_id).or_default().push(rec.caption);
        }
        let graphs = workers.map(order, |id| {
            let mut g = SceneGraph::new(id.clone());
            for c in &captions[&id] {
                g.merge(&extract_tuples(c, &cfg));
            }
            g
        });
        for g in &graphs {
            tuples += g.len();
            out.record(&SceneGraphRecord::from_graph(g))?;
        }
        graphs.len()
    } else {
        workers.stream(
            records::<CaptionRecord>(path)?,
            |(_, rec)| {
                let mut g = extract_tuples(&rec.caption, &cfg);
                g.image_id = rec.image_id;
                Ok(g)
            },
            |g| {
                tuples += g.len();
                out.record(&SceneGraphRecord::from_graph(&g))
            },
        )?
    };
    out.finish()?;
    if n == 0 {
        warn_empty(path);
    }
    Ok(format!("extracted {tuples} tuples from {n} records"))
}

fn score(a: &ScoreArgs, workers: &Workers) -> Result<String> {
    let cfg = extractor(a.extractor.config.as_deref())?;
    let lex = lexicon(a.lexicon.lexicon.as_deref())?;
    let index = load_index(&a.index)?;
    let refs = load_references(&a.refs, &cfg)?;
    if refs.is_empty() {
        warn_empty(&a.refs);
    }
    let mode = pool_mode(a.pool);
    let pred = &a.pred;
    let mut out = create(a.out.as_deref())?;
    let (mut spice_sum, mut spice_u_sum) = (0.0, 0.0);
    let n = workers.stream(
        records::<GraphOrCaption>(pred)?,
        |(line, rec)| {
            let id = rec.image_id.clone();
            let g = rec
                .into_graph(&cfg)
                .map_err(|e| Error::line(pred, line, e))?;
            let r = refs.get(&id).ok_or_else(|| {
                Error::line(pred, line, format!("no references for image {id:?}"))
            })?;
            Ok((id, spice_u(&g, r, &index, &lex, mode)))
        },
        |(image_id, s)| {
            spice_sum += s.spice;
            spice_u_sum += s.spice_u;
            let d = a.decimals;
            out.record(&ScoreRecord {
                image_id,
                precision: round_to(s.precision, d),
                recall: round_to(s.recall, d),
                spice: round_to(s.spice, d),
                uniq: round_to(s.uniq, d),
                spice_u: round_to(s.spice_u, d),
            })
        },
    )?;
    out.finish()?;
    if n == 0 {
        warn_empty(pred);
    }
    Ok(format!(
        "scored {n} predictions: mean SPICE {:.4}, mean SPICE-U {:.4}",
        mean(spice_sum, n),
        mean(spice_u_sum, n)
    ))
}

/// The LM side of re-ranking, loaded once.
struct LmSetup {
    unigram: Option<UnigramLm>,
    table: Option<TokenLogpTable>,
}

fn lm_kind(lm: Lm, alpha: f64) -> LmKind {
    match lm {
        Lm::Unigram => LmKind::Unigram,
        Lm::External => LmKind::External,
        Lm::Interpolated => LmKind::Interpolated { alpha },
    }
}

/// Loads what the selected model needs. With `consulted` false the LM term
/// is never evaluated and no unigram model is trained.
fn lm_setup(o: &LmOpts, kind: LmKind, consulted: bool) -> Result<LmSetup> {
    let probe = RerankConfig::new(0.0, kind)?;
    let mut setup = LmSetup {
        unigram: None,
        table: None,
    };
    if consulted && probe.needs_unigram() {
        let path = o.lm_corpus.as_deref().ok_or_else(|| {
            Error::Usage("this --lm needs --lm-corpus to train the unigram model".into())
        })?;
        let mut corpus = Vec::new();
        for rec in records::<CaptionRecord>(path)? {
            corpus.push(tokenize(&rec?.1.caption));
        }
        setup.unigram = Some(
            UnigramLm::train(corpus.iter().map(|c| c.iter().map(String::as_str)), o.k)
                .map_err(|e| Error::in_file(path, e))?,
        );
    }
    if let Some(path) = &o.token_logps {
        setup.table = Some(load_token_logps(path)?);
    }
    Ok(setup)
}

/// Builds an image's candidate set, attaching external log-probs from the
/// token file where it has them.
fn candidate_set(
    path: &Path,
    line: usize,
    rec: CandidateRecord,
    table: Option<(&Path, &TokenLogpTable)>,
) -> Result<CandidateSet> {
    let id = rec.image_id;
    let count = rec.candidates.len();
    if let Some((tpath, table)) = table {
        let range = (id.clone(), count)..=(id.clone(), usize::MAX);
        if let Some((_, (tline, r))) = table.range(range).next() {
            return Err(Error::line(
                tpath,
                *tline,
                format!(
                    "candidate {} out of range for image {id:?} with {count} candidates",
                    r.candidate_index
                ),
            ));
        }
    }
    let mut candidates = Vec::with_capacity(count);
    for (i, c) in rec.candidates.into_iter().enumerate() {
        let mut logps = c.token_logps;
        if let Some((tpath, (tline, r))) =
            table.and_then(|(p, t)| Some((p, t.get(&(id.clone(), i))?)))
        {
            if logps.is_some() {
                return Err(Error::line(
                    tpath,
                    *tline,
                    format!("image {id:?} candidate {i} also carries inline token_logps"),
                ));
            }
            if r.tokens != c.tokens {
                return Err(Error::line(
                    tpath,
                    *tline,
                    format!("tokens differ from image {id:?} candidate {i}"),
                ));
            }
            logps = Some(r.token_logps.clone());
        }
        let cand = Candidate::new(c.tokens, c.logp_cond, logps)
            .map_err(|e| Error::line(path, line, format!("candidate {i}: {e}")))?;
        candidates.push(cand);
    }
    CandidateSet::new(id, candidates).map_err(|e| Error::line(path, line, e))
}

fn rerank_cmd(a: &RerankArgs, workers: &Workers) -> Result<String> {
    let o = &a.lm;
    let kind = lm_kind(o.lm, o.alpha);
    let cfg = RerankConfig::new(o.lambda, kind)?.length_normalized(o.length_normalize);
    let consulted = o.lambda != 0.0;
    let setup = lm_setup(o, kind, consulted)?;
    let path = &a.candidates;
    let table = o.token_logps.as_deref().zip(setup.table.as_ref());
    let mut out = create(a.out.as_deref())?;
    let mut changed = 0usize;
    let n = workers.stream(
        records::<CandidateRecord>(path)?,
        |(line, rec)| {
            let set = candidate_set(path, line, rec, table)?;
            let (selected, scores, lm_logprobs) = if consulted {
                let r = rerank(&set, setup.unigram.as_ref(), &cfg)
                    .map_err(|e| Error::line(path, line, e))?;
                (r.selected, r.scores, Some(r.lm_logprobs))
            } else {
                let cond: Vec<f64> = set.candidates().iter().map(|c| c.logp_cond).collect();
                let (selected, scores) = select(&cond, &vec![0.0; cond.len()], 0.0);
                (selected, scores, None)
            };
            Ok(RerankRecord {
                caption: set.candidates()[selected].text(),
                image_id: set.image_id,
                selected,
                scores,
                lm_logprobs,
            })
        },
        |rec| {
            changed += usize::from(rec.selected != 0);
            out.record(&rec)
        },
    )?;
    out.finish()?;
    if n == 0 {
        warn_empty(path);
    }
    Ok(format!(
        "reranked {n} images, {changed} moved off the beam top"
    ))
}

type Likelihoods = BTreeMap<String, Vec<spiceu_core::rerank::SentenceLikelihood>>;

fn load_likelihoods(path: &Path) -> Result<Likelihoods> {
    let mut out = BTreeMap::new();
    for rec in records::<CandidateRecord>(path)? {
        let (line, rec) = rec?;
        let mut v = Vec::with_capacity(rec.candidates.len());
        for c in &rec.candidates {
            if !c.logp_cond.is_finite() {
                return Err(Error::line(path, line, "log-likelihood must be finite"));
            }
            v.push(spiceu_core::rerank::SentenceLikelihood::new(
                c.logp_cond,
                c.tokens.len(),
            ));
        }
        if out.insert(rec.image_id.clone(), v).is_some() {
            return Err(Error::line(
                path,
                line,
                format!("duplicate image id {:?}", rec.image_id),
            ));
        }
    }
    Ok(out)
}

fn vocabulary(path: Option<&Path>, cfg: &ExtractorConfig) -> Result<BTreeSet<String>> {
    match path {
        None => Ok(cfg.concepts().into_iter().collect()),
        Some(p) => Ok(text_lines(p)?
            .into_iter()
            .map(|(_, l)| normalize_phrase(&l))
            .filter(|l| !l.is_empty())
            .collect()),
    }
}

#[derive(Serialize)]
struct DistractorRecord<'a> {
    image_id: &'a str,
    preferred: bool,
}

fn distractor(a: &DistractorArgs) -> Result<String> {
    let gt = load_likelihoods(&a.gt)?;
    let ds_raw = load_likelihoods(&a.distractors)?;
    if let Some(id) = ds_raw.keys().find(|id| !gt.contains_key(*id)) {
        return Err(Error::file(
            &a.distractors,
            format!("image {id:?} has no ground-truth likelihoods"),
        ));
    }
    let ds: BTreeMap<String, Vec<(usize, _)>> = ds_raw
        .into_iter()
        .map(|(k, v)| (k, v.into_iter().enumerate().collect()))
        .collect();
    let flags: BTreeMap<String, BTreeSet<usize>> = match (&a.flags, &a.objects) {
        (Some(path), _) => {
            let mut out = BTreeMap::new();
            for rec in records::<FlagsRecord>(path)? {
                let (line, rec) = rec?;
                if out
                    .insert(rec.image_id.clone(), rec.flagged.into_iter().collect())
                    .is_some()
                {
                    return Err(Error::line(
                        path,
                        line,
                        format!("duplicate image id {:?}", rec.image_id),
                    ));
                }
            }
            out
        }
        (None, Some(objects_path)) => {
            let cfg = extractor(a.extractor.config.as_deref())?;
            let lex = lexicon(a.lexicon.lexicon.as_deref())?;
            let vocab = vocabulary(a.vocab.as_deref(), &cfg)?;
            let sentences: Vec<String> = match &a.sentences {
                Some(p) => text_lines(p)?.into_iter().map(|(_, l)| l).collect(),
                None => SHIPPED_DISTRACTORS.lines().map(str::to_string).collect(),
            };
            let mentions: Vec<Vec<String>> = sentences
                .iter()
                .map(|s| object_mentions(&extract_tuples(s, &cfg), &vocab))
                .collect();
            let objects = load_objects(objects_path)?;
            let mut out = BTreeMap::new();
            for (id, entries) in &ds {
                let present = objects.get(id).ok_or_else(|| {
                    Error::file(objects_path, format!("no objects for image {id:?}"))
                })?;
                let mut flagged = BTreeSet::new();
                for (j, _) in entries {
                    let m = mentions.get(*j).ok_or_else(|| {
                        Error::file(
                            &a.distractors,
                            format!(
                                "image {id:?} has more entries than the {} distractor sentences",
                                sentences.len()
                            ),
                        )
                    })?;
                    if !hallucinated_objects(m, present, &lex).is_empty() {
                        flagged.insert(*j);
                    }
                }
                out.insert(id.clone(), flagged);
            }
            out
        }
        (None, None) => return Err(Error::Usage("distractor needs --flags or --objects".into())),
    };
    let cmp = match a.comparator {
        ComparatorArg::Total => spiceu_core::rerank::Comparator::Total,
        ComparatorArg::Mean => spiceu_core::rerank::Comparator::MeanPerToken,
    };
    let report = spiceu_core::distractor_analysis(&gt, &ds, &flags, cmp)?;
    let mut out = create(a.out.as_deref())?;
    for (image_id, preferred) in &report.per_image {
        out.record(&DistractorRecord {
            image_id,
            preferred: *preferred,
        })?;
    }
    out.finish()?;
    if gt.is_empty() {
        warn_empty(&a.gt);
    }
    let hits = report.per_image.iter().filter(|(_, h)| *h).count();
    Ok(format!(
        "distractor preferred on {hits}/{} images (fraction {:.4})",
        report.per_image.len(),
        report.fraction
    ))
}

#[derive(Serialize)]
struct TemplateRecord {
    image_id: String,
    caption: String,
    threshold: f64,
}

fn template(a: &TemplateArgs, workers: &Workers) -> Result<String> {
    if let Some(t) = a.threshold.iter().find(|t| !(0.0..=1.0).contains(*t)) {
        return Err(Error::Usage(format!("--threshold {t} outside [0, 1]")));
    }
    let freq = load_class_freq(&a.class_freq)?;
    let top_n = a.top_n.unwrap_or(usize::MAX);
    let path = &a.detections;
    let mut out = create(a.out.as_deref())?;
    let (mut written, mut empty) = (0usize, 0usize);
    let n = workers.stream(
        records::<DetectionRecord>(path)?,
        |(line, rec)| {
            let dets: Vec<_> = rec
                .detections
                .iter()
                .map(|d| spiceu_core::harness::Detection::new(d.class.clone(), d.score))
                .collect();
            a.threshold
                .iter()
                .map(|&t| {
                    let c = template_caption(&dets, &freq, top_n, t)
                        .map_err(|e| Error::line(path, line, e))?;
                    Ok((rec.image_id.clone(), t, c))
                })
                .collect::<Result<Vec<_>>>()
        },
        |rows| {
            for (image_id, threshold, caption) in rows {
                match caption {
                    Some(caption) => {
                        written += 1;
                        out.record(&TemplateRecord {
                            image_id,
                            caption,
                            threshold,
                        })?;
                    }
                    None => empty += 1,
                }
            }
            Ok(())
        },
    )?;
    out.finish()?;
    if n == 0 {
        warn_empty(path);
    }
    Ok(format!(
        "wrote {written} captions; {empty} with no surviving detection skipped"
    ))
}

#[derive(Serialize)]
struct ChairRecord {
    image_id: String,
    mentioned: Vec<String>,
    hallucinated: Vec<String>,
}

fn chair(a: &ChairArgs) -> Result<String> {
    let cfg = extractor(a.extractor.config.as_deref())?;
    let lex = lexicon(a.lexicon.lexicon.as_deref())?;
    let vocab = vocabulary(a.vocab.as_deref(), &cfg)?;
    let objects = load_objects(&a.objects)?;
    let path = &a.captions;
    let mut out = create(a.out.as_deref())?;
    let mut mentions: BTreeMap<String, Vec<String>> = BTreeMap::new();
    let mut bad = 0usize;
    for rec in records::<CaptionRecord>(path)? {
        let (line, rec) = rec?;
        if mentions.contains_key(&rec.image_id) {
            return Err(Error::line(
                path,
                line,
                format!("duplicate image id {:?}", rec.image_id),
            ));
        }
        let present = objects.get(&rec.image_id).ok_or_else(|| {
            Error::line(
                path,
                line,
                format!("no objects for image {:?}", rec.image_id),
            )
        })?;
        let mentioned = object_mentions(&extract_tuples(&rec.caption, &cfg), &vocab);
        let hallucinated: Vec<String> = hallucinated_objects(&mentioned, present, &lex)
            .into_iter()
            .map(String::from)
            .collect();
        bad += usize::from(!hallucinated.is_empty());
        out.record(&ChairRecord {
            image_id: rec.image_id.clone(),
            mentioned: mentioned.clone(),
            hallucinated,
        })?;
        mentions.insert(rec.image_id, mentioned);
    }
    out.finish()?;
    if mentions.is_empty() {
        warn_empty(path);
    }
    let rate = chairs(&mentions, &objects, &lex)?;
    Ok(format!(
        "CHAIRs {rate:.4} ({bad}/{} captions hallucinate)",
        mentions.len()
    ))
}

fn human_corr(a: &HumanCorrArgs) -> Result<String> {
    let cfg = extractor(a.extractor.config.as_deref())?;
    let lex = lexicon(a.lexicon.lexicon.as_deref())?;
    let index: Option<CorpusIndex> = a.index.as_deref().map(load_index).transpose()?;
    if a.metric == MetricArg::SpiceU && index.is_none() {
        return Err(Error::Usage("--metric spice-u needs --index".into()));
    }
    let records = load_judgements(&a.judgements)?;
    let mode = pool_mode(a.pool);
    let mut ref_cache: BTreeMap<Vec<String>, SceneGraph> = BTreeMap::new();
    let mut metric = |caption: &str, refs: &[String]| -> f64 {
        let g = ref_cache.entry(refs.to_vec()).or_insert_with(|| {
            let mut g = SceneGraph::new("");
            for r in refs {
                g.merge(&extract_tuples(r, &cfg));
            }
            g
        });
        let p = extract_tuples(caption, &cfg);
        match &index {
            Some(idx) if a.metric == MetricArg::SpiceU => spice_u(&p, g, idx, &lex, mode).spice_u,
            _ => spice(&p, g, &lex).spice,
        }
    };
    let acc = pairwise_accuracy(&records, &mut metric)?;
    let corr = pearson(&records, &mut metric);
    let mut out = create(a.out.as_deref())?;
    let d = a.decimals;
    for c in Category::ALL {
        if let Some(r) = acc.per_category.get(&c) {
            out.line(&format!("{c}\t{:.d$}", r.accuracy))?;
        }
    }
    if !acc.per_category.is_empty() {
        out.line(&format!("ALL\t{:.d$}", acc.all))?;
    }
    match &corr {
        Ok(r) => out.line(&format!("pearson\t{r:.d$}"))?,
        Err(e) if !records.is_empty() => eprintln!("warning: pearson undefined: {e}"),
        Err(_) => {}
    }
    out.finish()?;
    if records.is_empty() {
        warn_empty(&a.judgements);
    }
    Ok(format!(
        "{} judgements, {} vote ties skipped for accuracy, ALL {:.2}",
        records.len(),
        acc.skipped_ties,
        acc.all
    ))
}

fn aggregate(a: &AggregateArgs) -> Result<String> {
    let values = load_metric_values(&a.input)?;
    let mut out = create(a.out.as_deref())?;
    if values.is_empty() {
        out.finish()?;
        warn_empty(&a.input);
        return Ok("no metric values".into());
    }
    if let Some(key) = &a.invert {
        if !values.iter().any(|(m, _)| m == key) {
            return Err(Error::file(
                &a.input,
                format!("metric {key:?} to invert not found"),
            ));
        }
    }
    let g = geo_mean(&values, a.invert.as_deref()).map_err(|e| Error::file(&a.input, e))?;
    let d = a.decimals;
    for (m, v) in &values {
        out.line(&format!("{m}\t{v}"))?;
    }
    out.line(&format!("GeoMean\t{g:.d$}"))?;
    out.finish()?;
    Ok(format!("GeoMean {g:.d$} over {} metrics", values.len()))
}

/// Per-candidate metrics, fixed across the grid.
#[derive(Clone, Copy)]
struct CandidateMetrics {
    spice: f64,
    spice_u: f64,
    hallucinates: bool,
}

fn grid_search(a: &GridSearchArgs, workers: &Workers) -> Result<String> {
    let o = &a.lm;
    if a.steps == 0 {
        return Err(Error::Usage("--steps must be at least 1".into()));
    }
    let cfg = extractor(a.extractor.config.as_deref())?;
    let lex = lexicon(a.lexicon.lexicon.as_deref())?;
    let index = load_index(&a.index)?;
    let refs = load_references(&a.refs, &cfg)?;
    let objects = a.objects.as_deref().map(load_objects).transpose()?;
    let vocab = vocabulary(a.vocab.as_deref(), &cfg)?;
    let interpolated = o.lm == Lm::Interpolated;
    let path = &a.candidates;
    let mut raw = Vec::new();
    for rec in records::<CandidateRecord>(path)? {
        let (line, rec) = rec?;
        if !refs.contains_key(&rec.image_id) {
            return Err(Error::line(
                path,
                line,
                format!("no references for image {:?}", rec.image_id),
            ));
        }
        if let Some(objs) = &objects {
            if !objs.contains_key(&rec.image_id) {
                return Err(Error::line(
                    path,
                    line,
                    format!("no objects for image {:?}", rec.image_id),
                ));
            }
        }
        raw.push((line, rec));
    }
    let mut out = create(a.out.as_deref())?;
    if raw.is_empty() {
        out.finish()?;
        warn_empty(path);
        return Ok("no candidates to search over".into());
    }
    let setup = lm_setup(o, lm_kind(o.lm, 0.5), true)?;
    let table = o.token_logps.as_deref().zip(setup.table.as_ref());
    let sets = raw
        .into_iter()
        .map(|(line, rec)| Ok((line, candidate_set(path, line, rec, table)?)))
        .collect::<Result<Vec<_>>>()?;

    let metrics: Vec<Vec<CandidateMetrics>> = workers.map(sets.iter().collect(), |(_, set)| {
        let r = &refs[&set.image_id];
        set.candidates()
            .iter()
            .map(|c| {
                let g = extract_tuples(&c.text(), &cfg);
                let s = spice_u(&g, r, &index, &lex, PoolMode::Exact);
                let hallucinates = objects.as_ref().is_some_and(|objs| {
                    let m = object_mentions(&g, &vocab);
                    !hallucinated_objects(&m, &objs[&set.image_id], &lex).is_empty()
                });
                CandidateMetrics {
                    spice: s.spice,
                    spice_u: s.spice_u,
                    hallucinates,
                }
            })
            .collect()
    });

    let lambdas = spiceu_core::rerank::unit_grid(a.steps);
    let alphas = if interpolated {
        spiceu_core::rerank::unit_grid(a.steps)
    } else {
        vec![0.0]
    };
    // LM scores depend on alpha only
    let lm_by_alpha: Vec<Vec<Vec<f64>>> = alphas
        .iter()
        .map(|&alpha| {
            let rc =
                RerankConfig::new(0.0, lm_kind(o.lm, alpha))?.length_normalized(o.length_normalize);
            sets.iter()
                .map(|(line, set)| {
                    set.candidates()
                        .iter()
                        .enumerate()
                        .map(|(i, c)| {
                            candidate_lm_logprob(c, i, &set.image_id, setup.unigram.as_ref(), &rc)
                                .map_err(|e| Error::line(path, *line, e))
                        })
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;

    let grid: Vec<(usize, f64, f64)> = alphas
        .iter()
        .enumerate()
        .flat_map(|(ai, &alpha)| lambdas.iter().map(move |&lambda| (ai, lambda, alpha)))
        .collect();
    let n = sets.len();
    let points: Vec<GridPoint> = workers.map(grid, |(ai, lambda, alpha)| {
        let (mut s, mut su, mut bad) = (0.0, 0.0, 0usize);
        for (k, (_, set)) in sets.iter().enumerate() {
            let cond: Vec<f64> = set.candidates().iter().map(|c| c.logp_cond).collect();
            let (sel, _) = select(&cond, &lm_by_alpha[ai][k], lambda);
            let m = metrics[k][sel];
            s += m.spice;
            su += m.spice_u;
            bad += usize::from(m.hallucinates);
        }
        let mut values = vec![
            ("SPICE", 100.0 * s / n as f64),
            ("SPICE-U", 100.0 * su / n as f64),
        ];
        if objects.is_some() {
            values.push(("CHAIRs", 100.0 * bad as f64 / n as f64));
        }
        let score = geo_mean(&values, Some("CHAIRs")).unwrap_or(f64::NAN);
        GridPoint {
            lambda,
            alpha,
            score,
        }
    });
    let mut points = points;
    points.sort_by(|p, q| {
        (p.lambda, p.alpha)
            .partial_cmp(&(q.lambda, q.alpha))
            .unwrap()
    });
    for p in &points {
        let alpha = if interpolated {
            format!("{}", p.alpha)
        } else {
            "-".into()
        };
        out.line(&format!("{}\t{alpha}\t{:.4}", p.lambda, p.score))?;
    }
    out.finish()?;
    let undefined = points.iter().filter(|p| p.score.is_nan()).count();
    if undefined > 0 {
        eprintln!(
            "warning: geometric mean undefined at {undefined} grid points (a metric was zero)"
        );
    }
    let best = best_grid_point(&points).expect("grid is non-empty");
    let alpha = if interpolated {
        format!(" alpha={}", best.alpha)
    } else {
        String::new()
    };
    Ok(format!(
        "best lambda={}{alpha} geomean={:.4} over {} points, {n} images",
        best.lambda,
        best.score,
        points.len()
    ))
}
