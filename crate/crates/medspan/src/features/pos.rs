//! Part-of-speech tagging interface.
//!
//! The feature extractor only needs a `tag` operation, so any tagger can
//! be plugged in. Two implementations ship here: a deterministic
//! rule-based fallback over a 7-tag coarse set, and a sidecar tagger that
//! serves precomputed tags loaded from a file.

use std::collections::HashMap;

/// A part-of-speech tagger. Output length must equal input length.
pub trait PosTagger {
    fn tag(&self, tokens: &[&str]) -> Vec<String>;
}

/// The coarse tagset used by [`FallbackPosTagger`].
pub const FALLBACK_TAGSET: [&str; 7] = ["NOUN", "VERB", "ADJ", "ADV", "NUM", "PUNCT", "OTHER"];

/// Deterministic suffix/regex rules: digits → NUM, punctuation → PUNCT,
/// `-ly` → ADV, `-ing`/`-ed` → VERB, `-ous`/`-al`/`-ive` → ADJ, default
/// NOUN.
#[derive(Debug, Clone, Copy, Default)]
pub struct FallbackPosTagger;

impl FallbackPosTagger {
    pub fn tag_one(token: &str) -> &'static str {
        if token.chars().any(|c| c.is_ascii_digit()) {
            return "NUM";
        }
        if !token.is_empty() && token.chars().all(|c| !c.is_alphanumeric()) {
            return "PUNCT";
        }
        let lower = token.to_lowercase();
        if lower.ends_with("ly") {
            "ADV"
        } else if lower.ends_with("ing") || lower.ends_with("ed") {
            "VERB"
        } else if lower.ends_with("ous") || lower.ends_with("al") || lower.ends_with("ive") {
            "ADJ"
        } else if token.chars().any(|c| c.is_alphanumeric()) {
            "NOUN"
        } else {
            "OTHER"
        }
    }
}

impl PosTagger for FallbackPosTagger {
    fn tag(&self, tokens: &[&str]) -> Vec<String> {
        tokens.iter().map(|t| Self::tag_one(t).to_string()).collect()
    }
}

/// Serves precomputed tags keyed by the sentence's token sequence. The
/// sidecar file holds one line per sentence: whitespace-separated tags
/// aligned to tokens. Sentences absent from the sidecar fall back to
/// [`FallbackPosTagger`].
#[derive(Debug, Clone, Default)]
pub struct SidecarPosTagger {
    by_sentence: HashMap<String, Vec<String>>,
}

impl SidecarPosTagger {
    pub fn new() -> SidecarPosTagger {
        SidecarPosTagger::default()
    }

    /// Registers the tags for one sentence. First registration wins when
    /// duplicate sentences occur.
    pub fn insert(&mut self, tokens: &[&str], tags: Vec<String>) {
        debug_assert_eq!(tokens.len(), tags.len());
        self.by_sentence.entry(tokens.join(" ")).or_insert(tags);
    }

    /// Aligns sidecar lines with a document's sentences. Errors when line
    /// counts or token counts disagree.
    pub fn add_document(
        &mut self,
        sentences: &[crate::corpus::Sentence],
        sidecar_text: &str,
    ) -> Result<(), String> {
        let lines: Vec<&str> = sidecar_text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .collect();
        if lines.len() != sentences.len() {
            return Err(format!(
                "sidecar has {} tag lines but document has {} sentences",
                lines.len(),
                sentences.len()
            ));
        }
        for (sentence, line) in sentences.iter().zip(lines) {
            let tags: Vec<String> = line.split_whitespace().map(str::to_string).collect();
            if tags.len() != sentence.len() {
                return Err(format!(
                    "line {}: {} tags for {} tokens",
                    sentence.line_index,
                    tags.len(),
                    sentence.len()
                ));
            }
            self.insert(&sentence.token_texts(), tags);
        }
        Ok(())
    }
}

impl PosTagger for SidecarPosTagger {
    fn tag(&self, tokens: &[&str]) -> Vec<String> {
        match self.by_sentence.get(&tokens.join(" ")) {
            Some(tags) => tags.clone(),
            None => FallbackPosTagger.tag(tokens),
        }
    }
}
