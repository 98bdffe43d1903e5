//! Per-token feature extraction for the linear-chain CRF.
//!
//! Each token receives binary indicator features across a closed set of
//! namespaces: its lowercased unigram, last two characters, word shapes,
//! part-of-speech, unit regex classes, bucketed length, the six lexicon
//! attribute namespaces, positional context unigrams (three to each side),
//! and a full copy of each immediate neighbor's word-level features under
//! a `prev1:`/`next1:` prefix.

mod lexicon;
mod pos;

pub use lexicon::{Lexicon, LexiconEntry, LexiconError, ATTRIBUTE_NAMESPACES};
pub use pos::{FallbackPosTagger, PosTagger, SidecarPosTagger, FALLBACK_TAGSET};

use std::collections::BTreeSet;
use std::fmt;
use std::sync::OnceLock;

use regex::Regex;

use crate::corpus::Sentence;

/// Sentence-boundary sentinels used by the context namespaces.
pub const BOS: &str = "<s>";
pub const EOS: &str = "</s>";

/// One binary indicator feature.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Feature {
    pub namespace: String,
    pub value: String,
}

impl Feature {
    pub fn new(namespace: impl Into<String>, value: impl Into<String>) -> Feature {
        Feature {
            namespace: namespace.into(),
            value: value.into(),
        }
    }

    /// The string key used to address this feature in a weight table.
    pub fn key(&self) -> String {
        format!("{}={}", self.namespace, self.value)
    }
}

impl fmt::Display for Feature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}={}", self.namespace, self.value)
    }
}

/// The deduplicated feature set of one token. Iteration order is sorted,
/// which keeps downstream training deterministic.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FeatureVector {
    feats: BTreeSet<Feature>,
}

impl FeatureVector {
    pub fn new() -> FeatureVector {
        FeatureVector::default()
    }

    pub fn insert(&mut self, namespace: impl Into<String>, value: impl Into<String>) {
        self.feats.insert(Feature::new(namespace, value));
    }

    pub fn contains(&self, namespace: &str, value: &str) -> bool {
        self.feats
            .iter()
            .any(|f| f.namespace == namespace && f.value == value)
    }

    pub fn len(&self) -> usize {
        self.feats.len()
    }

    pub fn is_empty(&self) -> bool {
        self.feats.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Feature> {
        self.feats.iter()
    }
}

impl<'a> IntoIterator for &'a FeatureVector {
    type Item = &'a Feature;
    type IntoIter = std::collections::btree_set::Iter<'a, Feature>;

    fn into_iter(self) -> Self::IntoIter {
        self.feats.iter()
    }
}

impl FromIterator<Feature> for FeatureVector {
    fn from_iter<I: IntoIterator<Item = Feature>>(iter: I) -> FeatureVector {
        FeatureVector {
            feats: iter.into_iter().collect(),
        }
    }
}

/// Maps a token to its shape strings: uppercase → `X`, lowercase → `x`,
/// digit → `d`, anything else → itself. The compressed variant collapses
/// runs of identical shape characters.
pub fn word_shape(token_text: &str) -> (String, String) {
    let full: String = token_text
        .chars()
        .map(|c| {
            if c.is_uppercase() {
                'X'
            } else if c.is_lowercase() {
                'x'
            } else if c.is_ascii_digit() {
                'd'
            } else {
                c
            }
        })
        .collect();
    let mut compressed = String::new();
    for c in full.chars() {
        if compressed.chars().last() != Some(c) {
            compressed.push(c);
        }
    }
    (full, compressed)
}

/// Clinical unit classes matched by [`unit_regex_features`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum UnitClass {
    Dosage,
    Percent,
    Temperature,
    BloodPressure,
    Time,
}

impl UnitClass {
    pub const ALL: [UnitClass; 5] = [
        UnitClass::Dosage,
        UnitClass::Percent,
        UnitClass::Temperature,
        UnitClass::BloodPressure,
        UnitClass::Time,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            UnitClass::Dosage => "dosage",
            UnitClass::Percent => "percent",
            UnitClass::Temperature => "temperature",
            UnitClass::BloodPressure => "blood-pressure",
            UnitClass::Time => "time",
        }
    }

    fn pattern(&self) -> &'static str {
        match self {
            UnitClass::Dosage => r"(?i)^\d+(\.\d+)?(mg|mcg|g|ml)$",
            UnitClass::Percent => r"^\d+(\.\d+)?%$",
            UnitClass::Temperature => r"(?i)^\d+\.\d*°?[fc]$",
            UnitClass::BloodPressure => r"^\d+/\d+$",
            UnitClass::Time => r"^\d+:\d+$",
        }
    }
}

impl fmt::Display for UnitClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

fn unit_regexes() -> &'static [(UnitClass, Regex); 5] {
    static REGEXES: OnceLock<[(UnitClass, Regex); 5]> = OnceLock::new();
    REGEXES.get_or_init(|| {
        UnitClass::ALL
            .map(|class| (class, Regex::new(class.pattern()).expect("static pattern")))
    })
}

/// Returns the subset of unit classes whose pattern matches the whole
/// token, case-insensitively.
pub fn unit_regex_features(token_text: &str) -> BTreeSet<UnitClass> {
    unit_regexes()
        .iter()
        .filter(|(_, re)| re.is_match(token_text))
        .map(|(class, _)| *class)
        .collect()
}

/// Token length bucketed at 6+.
pub fn length_bucket(token_text: &str) -> &'static str {
    match token_text.chars().count() {
        1 => "1",
        2 => "2",
        3 => "3",
        4 => "4",
        5 => "5",
        _ => "6+",
    }
}

/// Extracts the full feature set for every token of a sentence.
pub fn extract_features(
    sentence: &Sentence,
    lexicon: &Lexicon,
    pos_tagger: &dyn PosTagger,
) -> Vec<FeatureVector> {
    let texts = sentence.token_texts();
    let pos_tags = pos_tagger.tag(&texts);
    debug_assert_eq!(pos_tags.len(), texts.len());
    let lexicon_hits = lexicon.lookup(&texts);

    // Word-level features first; the context pass copies from them.
    let word_level: Vec<FeatureVector> = texts
        .iter()
        .enumerate()
        .map(|(i, text)| word_level_features(text, &pos_tags[i], lexicon_hits[i]))
        .collect();

    let lowered: Vec<String> = texts.iter().map(|t| t.to_lowercase()).collect();
    let n = texts.len();

    word_level
        .iter()
        .enumerate()
        .map(|(i, own)| {
            let mut fv = own.clone();
            for dist in 1..=3usize {
                let prev = i
                    .checked_sub(dist)
                    .map(|j| lowered[j].as_str())
                    .unwrap_or(BOS);
                fv.insert(format!("prev3-{dist}"), prev);
                let next = if i + dist < n { lowered[i + dist].as_str() } else { EOS };
                fv.insert(format!("next3-{dist}"), next);
            }
            if i == 0 {
                fv.insert("prev1:boundary", BOS);
            } else {
                for f in &word_level[i - 1] {
                    fv.insert(format!("prev1:{}", f.namespace), f.value.clone());
                }
            }
            if i + 1 == n {
                fv.insert("next1:boundary", EOS);
            } else {
                for f in &word_level[i + 1] {
                    fv.insert(format!("next1:{}", f.namespace), f.value.clone());
                }
            }
            fv
        })
        .collect()
}

fn word_level_features(text: &str, pos: &str, lexicon_hit: Option<&LexiconEntry>) -> FeatureVector {
    let mut fv = FeatureVector::new();
    let lower = text.to_lowercase();

    fv.insert("unigram", lower.as_str());

    let chars: Vec<char> = lower.chars().collect();
    let last2: String = chars[chars.len().saturating_sub(2)..].iter().collect();
    fv.insert("last2", last2);

    let (full, compressed) = word_shape(text);
    fv.insert("shape-full", full);
    fv.insert("shape-compressed", compressed);

    fv.insert("pos", pos);

    for unit in unit_regex_features(text) {
        fv.insert("unit", unit.as_str());
    }

    fv.insert("len", length_bucket(text));

    if let Some(entry) = lexicon_hit {
        for (namespace, values) in entry.attributes() {
            for value in values {
                fv.insert(namespace, value.as_str());
            }
        }
    }
    fv
}
