//! Clinical concept extraction: tagging problem, test, and treatment spans
//! in narrative notes.
//!
//! Two sequence models are provided behind one pipeline:
//!
//! * a feature-based linear-chain CRF over hand-engineered token features,
//! * a word+character BiLSTM-CRF with exact chain inference on top.
//!
//! Both predict per-token IOB tags over the 7-label alphabet
//! (`O`, `B-problem`, `I-problem`, `B-test`, `I-test`, `B-treatment`,
//! `I-treatment`) and decode them to labeled spans. See the `examples/`
//! directory for runnable walkthroughs of each capability, or the
//! `medspan` binary for the file-based train/predict/evaluate workflow.

pub mod cli;
pub mod corpus;
pub mod crf;
pub mod eval;
pub mod features;
pub mod model_io;
pub mod neural;

pub use corpus::{ConceptLabel, ConceptSpan, Document, Sentence, Tag, TagSequence, Token};
