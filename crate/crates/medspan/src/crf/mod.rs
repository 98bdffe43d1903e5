//! Linear-chain CRF over the 7-label IOB alphabet.
//!
//! Emission scores come from binary indicator features weighted per label;
//! transition scores live in a `(7+2)²` matrix that also covers the
//! virtual START and STOP states. Inference (forward log-partition,
//! posterior marginals, Viterbi) is exact dynamic programming in log
//! space, 64-bit throughout.

mod inference;
mod training;

pub use inference::{
    forward_log_partition, posterior_marginals, score_sequence, viterbi_decode, EdgeMarginals,
    NodeMarginals,
};
pub use training::{
    lattice_nll_gradient, nll_and_gradient, train_crf, CrfEpochStats, CrfGradient,
    CrfTrainConfig, CrfTrainLog, LabeledSentence, LatticeGradient,
};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Tag, NUM_TAGS};
use crate::features::FeatureVector;

/// Index of the virtual START state in a [`TransitionMatrix`].
pub const START: usize = NUM_TAGS;
/// Index of the virtual STOP state in a [`TransitionMatrix`].
pub const STOP: usize = NUM_TAGS + 1;
/// Full state count: the 7 labels plus START and STOP.
pub const NUM_STATES: usize = NUM_TAGS + 2;

#[derive(Debug, Error)]
pub enum CrfError {
    #[error("tag sequence length {tags} does not match lattice length {lattice}")]
    LengthMismatch { tags: usize, lattice: usize },
    #[error("non-finite loss at epoch {epoch}: {loss}")]
    NonFiniteLoss { epoch: usize, loss: f64 },
    #[error("training corpus is empty")]
    EmptyCorpus,
}

/// Label-to-label transition weights including START/STOP. Rows are the
/// source state, columns the destination.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionMatrix {
    w: [[f64; NUM_STATES]; NUM_STATES],
}

impl Default for TransitionMatrix {
    fn default() -> Self {
        TransitionMatrix::zeros()
    }
}

impl TransitionMatrix {
    pub fn zeros() -> TransitionMatrix {
        TransitionMatrix {
            w: [[0.0; NUM_STATES]; NUM_STATES],
        }
    }

    #[inline]
    pub fn get(&self, from: usize, to: usize) -> f64 {
        self.w[from][to]
    }

    #[inline]
    pub fn set(&mut self, from: usize, to: usize, value: f64) {
        self.w[from][to] = value;
    }

    #[inline]
    pub fn add(&mut self, from: usize, to: usize, delta: f64) {
        self.w[from][to] += delta;
    }

    pub fn start_to(&self, tag: Tag) -> f64 {
        self.w[START][tag.index()]
    }

    pub fn to_stop(&self, tag: Tag) -> f64 {
        self.w[tag.index()][STOP]
    }

    pub fn between(&self, from: Tag, to: Tag) -> f64 {
        self.w[from.index()][to.index()]
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.w.iter_mut().flat_map(|row| row.iter_mut())
    }

    /// Row-major view of all 81 cells.
    pub fn as_flat(&self) -> &[f64] {
        self.w.as_flattened()
    }

    pub fn as_flat_mut(&mut self) -> &mut [f64] {
        self.w.as_flattened_mut()
    }

    pub fn iter(&self) -> impl Iterator<Item = &f64> {
        self.w.iter().flat_map(|row| row.iter())
    }

    pub fn is_finite(&self) -> bool {
        self.iter().all(|v| v.is_finite())
    }
}

/// Per-position emission scores for one sentence, T×7.
#[derive(Debug, Clone, PartialEq)]
pub struct Lattice {
    emissions: Vec<[f64; NUM_TAGS]>,
}

impl Lattice {
    /// Builds a lattice from raw emission rows. Requires at least one
    /// position.
    pub fn new(emissions: Vec<[f64; NUM_TAGS]>) -> Lattice {
        assert!(!emissions.is_empty(), "lattice requires T >= 1");
        Lattice { emissions }
    }

    pub fn len(&self) -> usize {
        self.emissions.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn score(&self, position: usize, tag_index: usize) -> f64 {
        self.emissions[position][tag_index]
    }

    pub fn rows(&self) -> &[[f64; NUM_TAGS]] {
        &self.emissions
    }
}

/// Feature weights plus transitions; the trained artifact of the
/// feature-based path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrfModel {
    /// Feature key (`namespace=value`) to per-label weight row, in the
    /// fixed label order of [`Tag::ALL`].
    pub emission_weights: BTreeMap<String, [f64; NUM_TAGS]>,
    pub transitions: TransitionMatrix,
    pub l2_lambda: f64,
}

impl CrfModel {
    pub fn new(l2_lambda: f64) -> CrfModel {
        CrfModel {
            emission_weights: BTreeMap::new(),
            transitions: TransitionMatrix::zeros(),
            l2_lambda,
        }
    }

    /// Emission rows for a sentence's feature vectors. Features absent
    /// from the weight table contribute nothing.
    pub fn lattice(&self, features: &[FeatureVector]) -> Lattice {
        let keys: Vec<Vec<String>> = features
            .iter()
            .map(|fv| fv.iter().map(|f| f.key()).collect())
            .collect();
        self.lattice_from_keys(&keys)
    }

    pub(crate) fn lattice_from_keys(&self, keys: &[Vec<String>]) -> Lattice {
        assert!(!keys.is_empty(), "lattice requires T >= 1");
        let emissions = keys
            .iter()
            .map(|token_keys| {
                let mut row = [0.0; NUM_TAGS];
                for key in token_keys {
                    if let Some(w) = self.emission_weights.get(key) {
                        for (acc, wy) in row.iter_mut().zip(w) {
                            *acc += wy;
                        }
                    }
                }
                row
            })
            .collect();
        Lattice::new(emissions)
    }

    /// Viterbi-decodes a sentence given its extracted features.
    pub fn decode(&self, features: &[FeatureVector]) -> Vec<Tag> {
        viterbi_decode(&self.lattice(features), &self.transitions)
    }
}
