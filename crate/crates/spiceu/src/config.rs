//! Loading extractor rule directories and lexicons, falling back to the
//! shipped defaults.

use std::path::Path;

use spiceu_core::{ExtractorConfig, SynonymLexicon};

use crate::error::{Error, Result};
use crate::formats::{load_lexicon, read_to_string};

pub const STOPWORDS_FILE: &str = "stopwords.txt";
pub const LEMMAS_FILE: &str = "lemmas.tsv";
pub const CONCEPTS_FILE: &str = "concepts.txt";
pub const PATTERNS_FILE: &str = "patterns.txt";

/// Reads an extractor directory holding `stopwords.txt`, `lemmas.tsv`,
/// `concepts.txt` and `patterns.txt`. All four must exist.
pub fn load_extractor_config(dir: &Path) -> Result<ExtractorConfig> {
    let read = |name: &str| {
        let path = dir.join(name);
        if !path.is_file() {
            return Err(Error::file(&path, "missing extractor config file"));
        }
        read_to_string(&path).map(|text| (path, text))
    };
    let (_, stopwords) = read(STOPWORDS_FILE)?;
    let (lemmas_path, lemmas) = read(LEMMAS_FILE)?;
    let (_, concepts) = read(CONCEPTS_FILE)?;
    let (patterns_path, patterns) = read(PATTERNS_FILE)?;
    // parse the two structured files alone first so errors name the right file
    ExtractorConfig::from_sources("", &lemmas, "", "")
        .map_err(|e| Error::in_file(&lemmas_path, e))?;
    ExtractorConfig::from_sources("", "", "", &patterns)
        .map_err(|e| Error::in_file(&patterns_path, e))?;
    Ok(ExtractorConfig::from_sources(
        &stopwords, &lemmas, &concepts, &patterns,
    )?)
}

pub fn extractor(dir: Option<&Path>) -> Result<ExtractorConfig> {
    dir.map_or_else(|| Ok(ExtractorConfig::shipped()), load_extractor_config)
}

pub fn lexicon(path: Option<&Path>) -> Result<SynonymLexicon> {
    path.map_or_else(|| Ok(SynonymLexicon::shipped()), load_lexicon)
}
