//! Sentence encoder: a character-level BiLSTM summarizes each token's
//! spelling, the summary rides along with the token's word vector into
//! a word-level BiLSTM, and a linear layer turns each hidden state into
//! per-label emission scores.

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::NUM_TAGS;
use crate::crf::{Lattice, TransitionMatrix};

use super::lstm::{LstmParams, LstmStepCache};
use super::tensor::Matrix;
use super::LstmCrfModel;

/// Reserved row for unseen words and characters.
pub const UNKNOWN_ID: usize = 0;

/// Layer widths of the encoder.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncoderDims {
    /// Character embedding width.
    pub char_dim: usize,
    /// Hidden size of each character LSTM direction.
    pub char_hidden: usize,
    /// Word embedding width.
    pub word_dim: usize,
    /// Hidden size of each word LSTM direction.
    pub word_hidden: usize,
}

impl EncoderDims {
    /// Width of the per-token input to the word LSTM: word vector plus
    /// both character summary directions.
    pub fn concat_dim(&self) -> usize {
        self.word_dim + 2 * self.char_hidden
    }
}

/// Every trainable weight of the network, including the chain layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeuralParams {
    pub char_embeddings: Matrix,
    pub char_fwd: LstmParams,
    pub char_bwd: LstmParams,
    pub word_embeddings: Matrix,
    pub word_fwd: LstmParams,
    pub word_bwd: LstmParams,
    pub proj_w: Matrix,
    pub proj_b: Vec<f64>,
    pub transitions: TransitionMatrix,
}

impl NeuralParams {
    /// Fresh parameters: uniform [-0.1, 0.1) everywhere except word
    /// vectors, which use the wider [-0.25, 0.25) until pre-trained
    /// rows overwrite them, and transitions, which start at zero.
    pub fn init(
        dims: &EncoderDims,
        n_char_ids: usize,
        n_word_ids: usize,
        rng: &mut ChaCha8Rng,
    ) -> NeuralParams {
        let char_embeddings =
            Matrix::from_fn(n_char_ids, dims.char_dim, |_, _| rng.gen_range(-0.1..0.1));
        let char_fwd = LstmParams::init(dims.char_dim, dims.char_hidden, rng);
        let char_bwd = LstmParams::init(dims.char_dim, dims.char_hidden, rng);
        let word_embeddings =
            Matrix::from_fn(n_word_ids, dims.word_dim, |_, _| rng.gen_range(-0.25..0.25));
        let word_fwd = LstmParams::init(dims.concat_dim(), dims.word_hidden, rng);
        let word_bwd = LstmParams::init(dims.concat_dim(), dims.word_hidden, rng);
        let proj_w =
            Matrix::from_fn(NUM_TAGS, 2 * dims.word_hidden, |_, _| rng.gen_range(-0.1..0.1));
        let proj_b = (0..NUM_TAGS).map(|_| rng.gen_range(-0.1..0.1)).collect();
        NeuralParams {
            char_embeddings,
            char_fwd,
            char_bwd,
            word_embeddings,
            word_fwd,
            word_bwd,
            proj_w,
            proj_b,
            transitions: TransitionMatrix::zeros(),
        }
    }

    /// Zero tensors of the same shapes, used as gradient accumulators.
    pub fn zeros_like(&self) -> NeuralParams {
        NeuralParams {
            char_embeddings: Matrix::zeros(
                self.char_embeddings.rows(),
                self.char_embeddings.cols(),
            ),
            char_fwd: LstmParams::zeros(self.char_fwd.input_dim, self.char_fwd.hidden_dim),
            char_bwd: LstmParams::zeros(self.char_bwd.input_dim, self.char_bwd.hidden_dim),
            word_embeddings: Matrix::zeros(
                self.word_embeddings.rows(),
                self.word_embeddings.cols(),
            ),
            word_fwd: LstmParams::zeros(self.word_fwd.input_dim, self.word_fwd.hidden_dim),
            word_bwd: LstmParams::zeros(self.word_bwd.input_dim, self.word_bwd.hidden_dim),
            proj_w: Matrix::zeros(self.proj_w.rows(), self.proj_w.cols()),
            proj_b: vec![0.0; self.proj_b.len()],
            transitions: TransitionMatrix::zeros(),
        }
    }

    /// Named flat views over every parameter, in a fixed order shared
    /// with [`NeuralParams::param_groups_mut`]. The same order on a
    /// parameter set and its gradient twin lets callers zip them.
    pub fn param_groups(&self) -> Vec<(&'static str, &[f64])> {
        vec![
            ("char_embeddings", self.char_embeddings.data()),
            ("char_fwd.w", self.char_fwd.w.data()),
            ("char_fwd.u", self.char_fwd.u.data()),
            ("char_fwd.b", &self.char_fwd.b),
            ("char_bwd.w", self.char_bwd.w.data()),
            ("char_bwd.u", self.char_bwd.u.data()),
            ("char_bwd.b", &self.char_bwd.b),
            ("word_embeddings", self.word_embeddings.data()),
            ("word_fwd.w", self.word_fwd.w.data()),
            ("word_fwd.u", self.word_fwd.u.data()),
            ("word_fwd.b", &self.word_fwd.b),
            ("word_bwd.w", self.word_bwd.w.data()),
            ("word_bwd.u", self.word_bwd.u.data()),
            ("word_bwd.b", &self.word_bwd.b),
            ("proj_w", self.proj_w.data()),
            ("proj_b", &self.proj_b),
            ("transitions", self.transitions.as_flat()),
        ]
    }

    pub fn param_groups_mut(&mut self) -> Vec<(&'static str, &mut [f64])> {
        vec![
            ("char_embeddings", self.char_embeddings.data_mut()),
            ("char_fwd.w", self.char_fwd.w.data_mut()),
            ("char_fwd.u", self.char_fwd.u.data_mut()),
            ("char_fwd.b", &mut self.char_fwd.b),
            ("char_bwd.w", self.char_bwd.w.data_mut()),
            ("char_bwd.u", self.char_bwd.u.data_mut()),
            ("char_bwd.b", &mut self.char_bwd.b),
            ("word_embeddings", self.word_embeddings.data_mut()),
            ("word_fwd.w", self.word_fwd.w.data_mut()),
            ("word_fwd.u", self.word_fwd.u.data_mut()),
            ("word_fwd.b", &mut self.word_fwd.b),
            ("word_bwd.w", self.word_bwd.w.data_mut()),
            ("word_bwd.u", self.word_bwd.u.data_mut()),
            ("word_bwd.b", &mut self.word_bwd.b),
            ("proj_w", self.proj_w.data_mut()),
            ("proj_b", &mut self.proj_b),
            ("transitions", self.transitions.as_flat_mut()),
        ]
    }

    /// Euclidean norm over every parameter (or gradient) entry.
    pub fn global_norm(&self) -> f64 {
        self.param_groups()
            .iter()
            .flat_map(|(_, slice)| slice.iter())
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt()
    }

    pub fn scale(&mut self, factor: f64) {
        for (_, slice) in self.param_groups_mut() {
            for v in slice {
                *v *= factor;
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.param_groups()
            .iter()
            .flat_map(|(_, slice)| slice.iter())
            .all(|v| v.is_finite())
    }
}

/// Maps a token's characters to embedding rows; characters outside the
/// vocabulary share the reserved unknown row.
pub fn char_encode(word: &str, char_vocab: &BTreeMap<char, usize>) -> Vec<usize> {
    word.chars()
        .map(|c| char_vocab.get(&c).copied().unwrap_or(UNKNOWN_ID))
        .collect()
}

/// Runs the shared character BiLSTM over one word: ids, forward caches,
/// and backward caches (the latter over reversed characters).
pub(crate) fn char_bilstm(
    params: &NeuralParams,
    char_vocab: &BTreeMap<char, usize>,
    word: &str,
) -> (Vec<usize>, Vec<LstmStepCache>, Vec<LstmStepCache>) {
    let ids = char_encode(word, char_vocab);
    let char_xs: Vec<Vec<f64>> = ids
        .iter()
        .map(|&id| params.char_embeddings.row(id).to_vec())
        .collect();
    let fwd = params.char_fwd.run(&char_xs);
    let rev_xs: Vec<Vec<f64>> = char_xs.iter().rev().cloned().collect();
    let bwd = params.char_bwd.run(&rev_xs);
    (ids, fwd, bwd)
}

/// Everything the backward pass needs from one forward run.
pub(crate) struct SentenceCache {
    word_ids: Vec<usize>,
    char_ids: Vec<Vec<usize>>,
    char_fwd_caches: Vec<Vec<LstmStepCache>>,
    char_bwd_caches: Vec<Vec<LstmStepCache>>,
    /// Inverted-dropout multipliers per token and concat dimension:
    /// 0 for dropped entries, 1/(1−rate) for kept ones.
    dropout_scale: Option<Vec<Vec<f64>>>,
    word_fwd_caches: Vec<LstmStepCache>,
    /// Step k of the backward direction consumed token T−1−k.
    word_bwd_caches: Vec<LstmStepCache>,
    /// Concatenated [forward; backward] hidden state per token.
    hidden: Vec<Vec<f64>>,
}

/// Runs the encoder over one sentence. `dropout` carries the RNG and
/// rate during training; `None` is the deterministic inference path.
pub(crate) fn forward(
    model: &LstmCrfModel,
    tokens: &[String],
    mut dropout: Option<(&mut ChaCha8Rng, f64)>,
) -> (Lattice, SentenceCache) {
    assert!(!tokens.is_empty(), "encoder requires at least one token");
    let dims = &model.dims;
    let params = &model.params;
    let len = tokens.len();

    let mut word_ids = Vec::with_capacity(len);
    let mut char_ids = Vec::with_capacity(len);
    let mut char_fwd_caches = Vec::with_capacity(len);
    let mut char_bwd_caches = Vec::with_capacity(len);
    let mut dropout_scale: Option<Vec<Vec<f64>>> = None;
    let mut word_inputs: Vec<Vec<f64>> = Vec::with_capacity(len);

    for token in tokens {
        let word_id = model.word_id(token);
        let (ids, fwd, bwd) = char_bilstm(params, &model.char_vocab, token);

        let mut concat = Vec::with_capacity(dims.concat_dim());
        concat.extend_from_slice(params.word_embeddings.row(word_id));
        concat.extend(LstmStepCache::final_hidden(&fwd, dims.char_hidden));
        concat.extend(LstmStepCache::final_hidden(&bwd, dims.char_hidden));

        if let Some((rng, rate)) = dropout.as_mut() {
            let keep = 1.0 / (1.0 - *rate);
            let scale: Vec<f64> = concat
                .iter()
                .map(|_| if rng.gen::<f64>() < *rate { 0.0 } else { keep })
                .collect();
            for (x, s) in concat.iter_mut().zip(&scale) {
                *x *= s;
            }
            dropout_scale.get_or_insert_with(Vec::new).push(scale);
        }

        word_ids.push(word_id);
        char_ids.push(ids);
        char_fwd_caches.push(fwd);
        char_bwd_caches.push(bwd);
        word_inputs.push(concat);
    }

    let word_fwd_caches = params.word_fwd.run(&word_inputs);
    let rev_inputs: Vec<Vec<f64>> = word_inputs.iter().rev().cloned().collect();
    let word_bwd_caches = params.word_bwd.run(&rev_inputs);

    let mut hidden = Vec::with_capacity(len);
    let mut emissions = Vec::with_capacity(len);
    for t in 0..len {
        let mut state = Vec::with_capacity(2 * dims.word_hidden);
        state.extend_from_slice(&word_fwd_caches[t].h);
        state.extend_from_slice(&word_bwd_caches[len - 1 - t].h);

        let mut row_vec = params.proj_b.clone();
        params.proj_w.matvec_add(&state, &mut row_vec);
        let mut row = [0.0; NUM_TAGS];
        row.copy_from_slice(&row_vec);
        emissions.push(row);
        hidden.push(state);
    }

    (
        Lattice::new(emissions),
        SentenceCache {
            word_ids,
            char_ids,
            char_fwd_caches,
            char_bwd_caches,
            dropout_scale,
            word_fwd_caches,
            word_bwd_caches,
            hidden,
        },
    )
}

/// Backpropagates emission gradients through the encoder, accumulating
/// into `grads`. The chain-layer transition gradient is the caller's
/// business.
pub(crate) fn backward(
    model: &LstmCrfModel,
    cache: &SentenceCache,
    d_emissions: &[[f64; NUM_TAGS]],
    grads: &mut NeuralParams,
) {
    let dims = &model.dims;
    let params = &model.params;
    let len = cache.hidden.len();
    assert_eq!(d_emissions.len(), len);

    let h_w = dims.word_hidden;
    let mut fwd_dh = vec![vec![0.0; h_w]; len];
    let mut bwd_dh = vec![vec![0.0; h_w]; len];
    for t in 0..len {
        let de = &d_emissions[t];
        for (acc, d) in grads.proj_b.iter_mut().zip(de) {
            *acc += d;
        }
        grads.proj_w.add_outer(de, &cache.hidden[t]);
        let mut d_state = vec![0.0; 2 * h_w];
        params.proj_w.matvec_transpose_add(de, &mut d_state);
        fwd_dh[t].copy_from_slice(&d_state[..h_w]);
        // Token t was step len−1−t of the backward direction.
        bwd_dh[len - 1 - t].copy_from_slice(&d_state[h_w..]);
    }

    let d_fwd_inputs =
        params
            .word_fwd
            .backward_sequence(&cache.word_fwd_caches, &fwd_dh, &mut grads.word_fwd);
    let d_bwd_inputs =
        params
            .word_bwd
            .backward_sequence(&cache.word_bwd_caches, &bwd_dh, &mut grads.word_bwd);

    for t in 0..len {
        let mut d_input = d_fwd_inputs[t].clone();
        for (acc, d) in d_input.iter_mut().zip(&d_bwd_inputs[len - 1 - t]) {
            *acc += d;
        }
        if let Some(scales) = &cache.dropout_scale {
            for (d, s) in d_input.iter_mut().zip(&scales[t]) {
                *d *= s;
            }
        }

        let (d_word_vec, d_char_repr) = d_input.split_at(dims.word_dim);
        let row = grads.word_embeddings.row_mut(cache.word_ids[t]);
        for (acc, d) in row.iter_mut().zip(d_word_vec) {
            *acc += d;
        }

        let n_chars = cache.char_ids[t].len();
        if n_chars == 0 {
            continue;
        }
        let (d_fwd_final, d_bwd_final) = d_char_repr.split_at(dims.char_hidden);
        let mut fwd_dh_char = vec![vec![0.0; dims.char_hidden]; n_chars];
        fwd_dh_char[n_chars - 1].copy_from_slice(d_fwd_final);
        let mut bwd_dh_char = vec![vec![0.0; dims.char_hidden]; n_chars];
        bwd_dh_char[n_chars - 1].copy_from_slice(d_bwd_final);

        let d_char_fwd = params.char_fwd.backward_sequence(
            &cache.char_fwd_caches[t],
            &fwd_dh_char,
            &mut grads.char_fwd,
        );
        let d_char_bwd = params.char_bwd.backward_sequence(
            &cache.char_bwd_caches[t],
            &bwd_dh_char,
            &mut grads.char_bwd,
        );
        for c in 0..n_chars {
            let row = grads.char_embeddings.row_mut(cache.char_ids[t][c]);
            for (acc, d) in row.iter_mut().zip(&d_char_fwd[c]) {
                *acc += d;
            }
            // Character c was step n−1−c of the backward direction.
            for (acc, d) in row.iter_mut().zip(&d_char_bwd[n_chars - 1 - c]) {
                *acc += d;
            }
        }
    }
}
