//! Phrase-to-attribute lexicon standing in for a licensed vocabulary.
//!
//! Entries map a normalized phrase (lowercased, single-spaced) to six
//! attribute lists: cui, lui, rel, sty, tty, abr. Lookup is greedy
//! longest-match left-to-right over token n-grams.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("lexicon line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("could not read lexicon file {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

/// The six attribute namespaces carried by a lexicon entry.
pub const ATTRIBUTE_NAMESPACES: [&str; 6] = [
    "umls-cui", "umls-lui", "umls-rel", "umls-sty", "umls-tty", "umls-abr",
];

/// Attribute lists for one phrase. Lists may be empty.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LexiconEntry {
    pub cui: Vec<String>,
    pub lui: Vec<String>,
    pub rel: Vec<String>,
    pub sty: Vec<String>,
    pub tty: Vec<String>,
    pub abr: Vec<String>,
}

impl LexiconEntry {
    /// Pairs each attribute namespace with its values.
    pub fn attributes(&self) -> [(&'static str, &[String]); 6] {
        [
            ("umls-cui", &self.cui),
            ("umls-lui", &self.lui),
            ("umls-rel", &self.rel),
            ("umls-sty", &self.sty),
            ("umls-tty", &self.tty),
            ("umls-abr", &self.abr),
        ]
    }

    fn list_mut(&mut self, key: &str) -> Option<&mut Vec<String>> {
        match key {
            "cui" => Some(&mut self.cui),
            "lui" => Some(&mut self.lui),
            "rel" => Some(&mut self.rel),
            "sty" => Some(&mut self.sty),
            "tty" => Some(&mut self.tty),
            "abr" => Some(&mut self.abr),
            _ => None,
        }
    }
}

/// Immutable phrase dictionary.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lexicon {
    entries: BTreeMap<String, LexiconEntry>,
    max_phrase_len: usize,
}

impl Lexicon {
    pub fn new() -> Lexicon {
        Lexicon::default()
    }

    /// Inserts a phrase; it is normalized to lowercase single-spaced form.
    pub fn insert(&mut self, phrase: &str, entry: LexiconEntry) {
        let normalized = normalize_phrase(phrase);
        if normalized.is_empty() {
            return;
        }
        let len = normalized.split(' ').count();
        self.max_phrase_len = self.max_phrase_len.max(len);
        self.entries.insert(normalized, entry);
    }

    pub fn get(&self, normalized_phrase: &str) -> Option<&LexiconEntry> {
        self.entries.get(normalized_phrase)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Token count of the longest phrase.
    pub fn max_phrase_len(&self) -> usize {
        self.max_phrase_len
    }

    /// Parses the tab-separated lexicon format, one entry per line:
    ///
    /// ```text
    /// phrase<TAB>cui=C1,C2;lui=L1;rel=;sty=S1;tty=;abr=
    /// ```
    ///
    /// Blank lines and `#` comments are skipped. Attribute keys may appear
    /// in any order and may be omitted; omitted or empty keys yield empty
    /// lists.
    pub fn parse(text: &str) -> Result<Lexicon, LexiconError> {
        let mut lexicon = Lexicon::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim_end();
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let (phrase, attrs) = line.split_once('\t').ok_or_else(|| LexiconError::Parse {
                line: line_no,
                msg: "expected `phrase<TAB>attributes`".to_string(),
            })?;
            if phrase.trim().is_empty() {
                return Err(LexiconError::Parse {
                    line: line_no,
                    msg: "empty phrase".to_string(),
                });
            }
            let mut entry = LexiconEntry::default();
            for field in attrs.split(';') {
                let field = field.trim();
                if field.is_empty() {
                    continue;
                }
                let (key, value) = field.split_once('=').ok_or_else(|| LexiconError::Parse {
                    line: line_no,
                    msg: format!("attribute `{field}` is not of the form key=values"),
                })?;
                let list = entry.list_mut(key).ok_or_else(|| LexiconError::Parse {
                    line: line_no,
                    msg: format!("unknown attribute key `{key}`"),
                })?;
                list.extend(
                    value
                        .split(',')
                        .map(str::trim)
                        .filter(|v| !v.is_empty())
                        .map(str::to_string),
                );
            }
            lexicon.insert(phrase, entry);
        }
        Ok(lexicon)
    }

    pub fn load(path: &Path) -> Result<Lexicon, LexiconError> {
        let text = fs::read_to_string(path).map_err(|source| LexiconError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Lexicon::parse(&text)
    }

    /// Greedy longest-match left-to-right over lowercased token n-grams.
    /// Every token inside a matched phrase receives a reference to that
    /// phrase's entry; unmatched tokens receive `None`.
    pub fn lookup<'a, S: AsRef<str>>(&'a self, tokens: &[S]) -> Vec<Option<&'a LexiconEntry>> {
        let lowered: Vec<String> = tokens
            .iter()
            .map(|t| t.as_ref().to_lowercase())
            .collect();
        let mut hits: Vec<Option<&LexiconEntry>> = vec![None; tokens.len()];
        if self.entries.is_empty() {
            return hits;
        }
        let mut i = 0;
        while i < lowered.len() {
            let longest = self.max_phrase_len.min(lowered.len() - i);
            let mut matched = 0;
            let mut entry = None;
            for n in (1..=longest).rev() {
                let candidate = lowered[i..i + n].join(" ");
                if let Some(e) = self.entries.get(&candidate) {
                    matched = n;
                    entry = Some(e);
                    break;
                }
            }
            if let Some(e) = entry {
                for slot in hits.iter_mut().skip(i).take(matched) {
                    *slot = Some(e);
                }
                i += matched;
            } else {
                i += 1;
            }
        }
        hits
    }
}

impl fmt::Display for Lexicon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "Lexicon({} entries, max phrase length {})",
            self.entries.len(),
            self.max_phrase_len
        )
    }
}

fn normalize_phrase(phrase: &str) -> String {
    phrase
        .split_whitespace()
        .map(|w| w.to_lowercase())
        .collect::<Vec<_>>()
        .join(" ")
}
