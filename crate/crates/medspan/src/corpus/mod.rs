//! Text units, concept annotations, and the IOB tag alphabet.
//!
//! A note is a plain-text file; one physical line is one sentence. Concept
//! annotations address tokens by `(line, token)` coordinates, with lines
//! counted from 1 (blank lines included) and tokens counted from 0 within
//! their line.

mod con_format;
mod iob;
mod synthetic;
mod tokenize;

pub use con_format::{parse_concept_file, write_concept_file};
pub use iob::{iob_to_spans, spans_to_iob};
pub use synthetic::{generate_synthetic_corpus, SyntheticGrammar, TemplatePart};
pub use tokenize::tokenize;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("invalid UTF-8 at byte offset {offset}")]
    Encoding { offset: usize },
    #[error("line {line}: {msg}")]
    ConParse { line: usize, msg: String },
    #[error("span {span} lies outside line {line} ({len} tokens)")]
    SpanOutOfBounds { span: String, line: usize, len: usize },
    #[error("overlapping spans at line {line}: {a} and {b}")]
    OverlappingSpans { line: usize, a: String, b: String },
    #[error("span on line {span_line} applied to sentence on line {sentence_line}")]
    LineMismatch { span_line: usize, sentence_line: usize },
    #[error("tag sequence length {tags} does not match sentence length {tokens}")]
    LengthMismatch { tags: usize, tokens: usize },
    #[error("synthetic grammar: {0}")]
    Grammar(String),
}

/// The three concept classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ConceptLabel {
    Problem,
    Test,
    Treatment,
}

impl ConceptLabel {
    pub const ALL: [ConceptLabel; 3] = [
        ConceptLabel::Problem,
        ConceptLabel::Test,
        ConceptLabel::Treatment,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ConceptLabel::Problem => "problem",
            ConceptLabel::Test => "test",
            ConceptLabel::Treatment => "treatment",
        }
    }

    pub fn from_str(s: &str) -> Option<ConceptLabel> {
        match s {
            "problem" => Some(ConceptLabel::Problem),
            "test" => Some(ConceptLabel::Test),
            "treatment" => Some(ConceptLabel::Treatment),
            _ => None,
        }
    }
}

impl fmt::Display for ConceptLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One token of a sentence, anchored to its line by character offsets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub text: String,
    /// 1-based line number within the note.
    pub line_index: usize,
    /// 0-based position within the line.
    pub token_index: usize,
    /// 0-based character offsets into the raw line (end exclusive).
    pub char_start: usize,
    pub char_end: usize,
}

/// One non-blank line of a note.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub tokens: Vec<Token>,
    pub line_index: usize,
}

impl Sentence {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn token_texts(&self) -> Vec<&str> {
        self.tokens.iter().map(|t| t.text.as_str()).collect()
    }
}

/// A parsed note: raw lines plus one sentence per non-blank line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    pub sentences: Vec<Sentence>,
    pub raw_lines: Vec<String>,
}

impl Document {
    /// Parses note text. Every non-blank line becomes a sentence; blank
    /// lines still advance the 1-based line counter.
    pub fn from_text(doc_id: impl Into<String>, note_text: &str) -> Document {
        let raw_lines: Vec<String> = note_text.lines().map(|l| l.to_string()).collect();
        let sentences = raw_lines
            .iter()
            .enumerate()
            .filter_map(|(i, line)| {
                let tokens = tokenize_at_line(line, i + 1);
                if tokens.is_empty() {
                    None
                } else {
                    Some(Sentence {
                        tokens,
                        line_index: i + 1,
                    })
                }
            })
            .collect();
        Document {
            doc_id: doc_id.into(),
            sentences,
            raw_lines,
        }
    }

    /// Like [`Document::from_text`] but validates the encoding, reporting
    /// the byte offset of the first invalid sequence.
    pub fn from_bytes(doc_id: impl Into<String>, bytes: &[u8]) -> Result<Document, CorpusError> {
        let text = std::str::from_utf8(bytes).map_err(|e| CorpusError::Encoding {
            offset: e.valid_up_to(),
        })?;
        Ok(Document::from_text(doc_id, text))
    }

    pub fn sentence_at_line(&self, line_index: usize) -> Option<&Sentence> {
        self.sentences.iter().find(|s| s.line_index == line_index)
    }
}

/// Parses a note into a document. One sentence per non-blank line.
pub fn load_document(note_text: &str, doc_id: &str) -> Document {
    Document::from_text(doc_id, note_text)
}

pub(crate) fn tokenize_at_line(raw_line: &str, line_index: usize) -> Vec<Token> {
    let mut tokens = tokenize(raw_line);
    for (i, tok) in tokens.iter_mut().enumerate() {
        tok.line_index = line_index;
        tok.token_index = i;
    }
    tokens
}

/// A labeled contiguous token span on a single line.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ConceptSpan {
    pub label: ConceptLabel,
    /// 1-based line number.
    pub line_index: usize,
    /// 0-based inclusive token indices.
    pub start_token: usize,
    pub end_token: usize,
    /// Surface form of the span.
    pub text: String,
}

impl ConceptSpan {
    pub fn new(
        label: ConceptLabel,
        line_index: usize,
        start_token: usize,
        end_token: usize,
        text: impl Into<String>,
    ) -> ConceptSpan {
        ConceptSpan {
            label,
            line_index,
            start_token,
            end_token,
            text: text.into(),
        }
    }

    /// Number of tokens covered.
    pub fn len(&self) -> usize {
        self.end_token - self.start_token + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn overlaps(&self, other: &ConceptSpan) -> bool {
        self.line_index == other.line_index
            && self.start_token <= other.end_token
            && other.start_token <= self.end_token
    }

    /// `(line, start, end)` key used for sorting and exact matching.
    pub fn position(&self) -> (usize, usize, usize) {
        (self.line_index, self.start_token, self.end_token)
    }
}

impl fmt::Display for ConceptSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}:{}..{} ({})",
            self.line_index, self.start_token, self.end_token, self.label
        )
    }
}

/// The 7-label IOB alphabet: `O` plus B/I for each concept class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Tag {
    Outside,
    Begin(ConceptLabel),
    Inside(ConceptLabel),
}

/// Number of IOB labels.
pub const NUM_TAGS: usize = 7;

impl Tag {
    /// Fixed label order: O, B-problem, I-problem, B-test, I-test,
    /// B-treatment, I-treatment.
    pub const ALL: [Tag; NUM_TAGS] = [
        Tag::Outside,
        Tag::Begin(ConceptLabel::Problem),
        Tag::Inside(ConceptLabel::Problem),
        Tag::Begin(ConceptLabel::Test),
        Tag::Inside(ConceptLabel::Test),
        Tag::Begin(ConceptLabel::Treatment),
        Tag::Inside(ConceptLabel::Treatment),
    ];

    pub fn index(&self) -> usize {
        match self {
            Tag::Outside => 0,
            Tag::Begin(ConceptLabel::Problem) => 1,
            Tag::Inside(ConceptLabel::Problem) => 2,
            Tag::Begin(ConceptLabel::Test) => 3,
            Tag::Inside(ConceptLabel::Test) => 4,
            Tag::Begin(ConceptLabel::Treatment) => 5,
            Tag::Inside(ConceptLabel::Treatment) => 6,
        }
    }

    pub fn from_index(index: usize) -> Option<Tag> {
        Tag::ALL.get(index).copied()
    }

    pub fn label(&self) -> Option<ConceptLabel> {
        match self {
            Tag::Outside => None,
            Tag::Begin(l) | Tag::Inside(l) => Some(*l),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Tag::Outside => "O",
            Tag::Begin(ConceptLabel::Problem) => "B-problem",
            Tag::Inside(ConceptLabel::Problem) => "I-problem",
            Tag::Begin(ConceptLabel::Test) => "B-test",
            Tag::Inside(ConceptLabel::Test) => "I-test",
            Tag::Begin(ConceptLabel::Treatment) => "B-treatment",
            Tag::Inside(ConceptLabel::Treatment) => "I-treatment",
        }
    }

    pub fn from_str(s: &str) -> Option<Tag> {
        Tag::ALL.iter().copied().find(|t| t.as_str() == s)
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Per-token IOB labels for one sentence.
pub type TagSequence = Vec<Tag>;
