//! Shared text normalization.
//!
//! The caption tokenization contract is: lowercase, replace every character
//! that is neither alphanumeric nor whitespace with a space, split on
//! whitespace. Any external producer of per-token log-probabilities must use
//! the same rule, e.g. in Python
//! `"".join(c if c.isalnum() else " " for c in s.lower()).split()`.

use alloc::string::String;
use alloc::vec::Vec;

/// End-of-sentence token appended by the language models.
pub const EOS: &str = "</s>";

/// Splits a caption into lowercase alphanumeric tokens.
pub fn tokenize(text: &str) -> Vec<String> {
    let cleaned: String = text
        .chars()
        .flat_map(char::to_lowercase)
        .map(|c| if c.is_alphanumeric() { c } else { ' ' })
        .collect();
    cleaned.split_whitespace().map(String::from).collect()
}

/// Lowercases, trims and collapses internal whitespace.
pub fn normalize_phrase(text: &str) -> String {
    let lower = text.to_lowercase();
    let mut out = String::with_capacity(lower.len());
    for word in lower.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(word);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn tokenize_strips_punctuation() {
        assert_eq!(
            tokenize("A man's T-shirt, on a court."),
            vec!["a", "man", "s", "t", "shirt", "on", "a", "court"]
        );
        assert!(tokenize("  ,.;  ").is_empty());
    }

    #[test]
    fn normalize_collapses_whitespace() {
        assert_eq!(normalize_phrase("  Tennis \t Racquet "), "tennis racquet");
    }
}
