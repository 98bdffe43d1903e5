//! Word + character BiLSTM tagger with the same chain output layer as
//! the feature-based model.
//!
//! Each token is represented by a word vector (optionally pre-trained)
//! concatenated with the final states of a character-level BiLSTM run
//! over its spelling; a word-level BiLSTM contextualizes the sequence
//! and a linear layer produces per-label emission scores that feed the
//! shared transition matrix. All arithmetic is 64-bit and every forward
//! and backward pass is written out by hand.

mod embeddings;
mod encoder;
mod lstm;
mod tensor;
mod training;

pub use embeddings::{load_word_embeddings, WordEmbeddings};
pub use encoder::{char_encode, EncoderDims, NeuralParams, UNKNOWN_ID};
pub use lstm::{LstmParams, LstmStepCache};
pub use tensor::Matrix;
pub use training::{
    neural_nll_and_gradient, predict_neural, train_neural, EmbeddingCoverage, NeuralEpochStats,
    NeuralSentence, NeuralTrainConfig, NeuralTrainLog,
};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Sentence, TagSequence};
use crate::crf::{viterbi_decode, CrfError, Lattice};

#[derive(Debug, Error)]
pub enum NeuralError {
    #[error("embeddings line {line}: {msg}")]
    EmbeddingParse { line: usize, msg: String },
    #[error("embedding width {found} does not match the configured word dimension {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("training corpus is empty")]
    EmptyCorpus,
    #[error("loss diverged at epoch {epoch}: {loss}")]
    Diverged { epoch: usize, loss: f64 },
    #[error(transparent)]
    Chain(#[from] CrfError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// The trained artifact of the neural path: vocabularies plus every
/// parameter tensor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmCrfModel {
    pub dims: EncoderDims,
    /// Lowercased word to embedding row; row 0 is reserved for unknowns.
    pub word_vocab: BTreeMap<String, usize>,
    /// Character to embedding row; row 0 is reserved for unknowns.
    pub char_vocab: BTreeMap<char, usize>,
    pub params: NeuralParams,
}

impl LstmCrfModel {
    /// Embedding row for a token, falling back to the unknown row. The
    /// word table is case-insensitive; case information still reaches
    /// the model through the character path.
    pub fn word_id(&self, token: &str) -> usize {
        self.word_vocab
            .get(&token.to_lowercase())
            .copied()
            .unwrap_or(UNKNOWN_ID)
    }

    /// Character-level representation of one word: the final forward and
    /// final backward states of the shared character BiLSTM, concatenated
    /// into a vector of length `2 * char_hidden`. Depends only on the
    /// word's spelling, never on sentence position.
    pub fn char_representation(&self, word: &str) -> Vec<f64> {
        let (_, fwd, bwd) = encoder::char_bilstm(&self.params, &self.char_vocab, word);
        let mut out = LstmStepCache::final_hidden(&fwd, self.dims.char_hidden);
        out.extend(LstmStepCache::final_hidden(&bwd, self.dims.char_hidden));
        out
    }

    /// Emission scores for a tokenized sentence (inference path, no
    /// dropout).
    pub fn lattice(&self, tokens: &[String]) -> Lattice {
        encoder::forward(self, tokens, None).0
    }

    /// Viterbi tagging of a tokenized sentence.
    pub fn decode_tokens(&self, tokens: &[String]) -> TagSequence {
        viterbi_decode(&self.lattice(tokens), &self.params.transitions)
    }

    pub fn decode(&self, sentence: &Sentence) -> TagSequence {
        let tokens: Vec<String> = sentence.tokens.iter().map(|t| t.text.clone()).collect();
        self.decode_tokens(&tokens)
    }
}

/// Emission lattice for a tokenized sentence; the deterministic
/// inference-time encoding.
pub fn encode_sentence(model: &LstmCrfModel, tokens: &[String]) -> Lattice {
    model.lattice(tokens)
}
