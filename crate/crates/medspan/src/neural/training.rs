//! Training loop for the neural tagger: per-sentence stochastic
//! gradient descent with inverted dropout, global-norm gradient
//! clipping, and best-epoch selection on a held-out slice.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{ConceptSpan, CorpusError, Sentence, Tag, TagSequence};
use crate::crf::lattice_nll_gradient;

use super::encoder::{self, EncoderDims, NeuralParams};
use super::{LstmCrfModel, NeuralError, WordEmbeddings};

/// One training sentence: token texts plus gold tags.
pub type NeuralSentence = (Vec<String>, TagSequence);

/// Hyperparameters for [`train_neural`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeuralTrainConfig {
    pub dims: EncoderDims,
    pub epochs: usize,
    /// Initial step size; multiplied by `lr_decay` after each epoch.
    pub learning_rate: f64,
    pub lr_decay: f64,
    /// Gradients are rescaled whenever their global norm exceeds this;
    /// zero disables clipping.
    pub clip_norm: f64,
    /// Inverted-dropout rate on each token's concatenated word/char
    /// representation. Must lie in [0, 1).
    pub dropout: f64,
    /// Keep pre-trained word vectors fixed during training.
    pub freeze_embeddings: bool,
    /// Trailing fraction of the corpus held out to pick the best epoch.
    pub dev_fraction: f64,
    pub seed: u64,
}

impl Default for NeuralTrainConfig {
    fn default() -> Self {
        NeuralTrainConfig {
            dims: EncoderDims {
                char_dim: 25,
                char_hidden: 25,
                word_dim: 100,
                word_hidden: 100,
            },
            epochs: 30,
            learning_rate: 0.01,
            lr_decay: 0.95,
            clip_norm: 5.0,
            dropout: 0.5,
            freeze_embeddings: false,
            dev_fraction: 0.1,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NeuralEpochStats {
    pub epoch: usize,
    /// Mean sentence NLL over the training slice, measured as the
    /// epoch's updates run.
    pub train_loss: f64,
    /// Mean sentence NLL over the held-out slice, dropout disabled.
    pub dev_loss: Option<f64>,
    pub learning_rate: f64,
}

/// How many vocabulary words were covered by the pre-trained table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EmbeddingCoverage {
    pub matched: usize,
    pub vocabulary: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct NeuralTrainLog {
    pub epochs: Vec<NeuralEpochStats>,
    pub embedding_coverage: Option<EmbeddingCoverage>,
    /// Epoch whose parameters were kept, when a dev slice existed.
    pub best_epoch: Option<usize>,
}

/// NLL of one gold tagging and its gradient with respect to every
/// parameter, dropout disabled. The returned gradient mirrors the
/// parameter structure, group for group.
pub fn neural_nll_and_gradient(
    model: &LstmCrfModel,
    tokens: &[String],
    gold: &[Tag],
) -> Result<(f64, NeuralParams), NeuralError> {
    sentence_gradient(model, tokens, gold, None)
}

fn sentence_gradient(
    model: &LstmCrfModel,
    tokens: &[String],
    gold: &[Tag],
    dropout: Option<(&mut ChaCha8Rng, f64)>,
) -> Result<(f64, NeuralParams), NeuralError> {
    let (lattice, cache) = encoder::forward(model, tokens, dropout);
    let chain = lattice_nll_gradient(&lattice, &model.params.transitions, gold)?;
    let mut grads = model.params.zeros_like();
    encoder::backward(model, &cache, &chain.d_emissions, &mut grads);
    for (acc, d) in grads
        .transitions
        .as_flat_mut()
        .iter_mut()
        .zip(chain.d_transitions.as_flat())
    {
        *acc += d;
    }
    Ok((chain.nll, grads))
}

/// Viterbi-decodes a sentence and lifts the tagging back to concept
/// spans.
pub fn predict_neural(
    model: &LstmCrfModel,
    sentence: &Sentence,
) -> Result<Vec<ConceptSpan>, CorpusError> {
    let tags = model.decode(sentence);
    crate::corpus::iob_to_spans(&tags, sentence)
}

fn build_vocabularies(
    corpus: &[NeuralSentence],
) -> (BTreeMap<String, usize>, BTreeMap<char, usize>) {
    let mut words = BTreeSet::new();
    let mut chars = BTreeSet::new();
    for (tokens, _) in corpus {
        for token in tokens {
            words.insert(token.to_lowercase());
            chars.extend(token.chars());
        }
    }
    let word_vocab = words
        .into_iter()
        .enumerate()
        .map(|(i, w)| (w, i + 1))
        .collect();
    let char_vocab = chars
        .into_iter()
        .enumerate()
        .map(|(i, c)| (c, i + 1))
        .collect();
    (word_vocab, char_vocab)
}

fn validate(corpus: &[NeuralSentence], config: &NeuralTrainConfig) -> Result<(), NeuralError> {
    if corpus.is_empty() {
        return Err(NeuralError::EmptyCorpus);
    }
    if !(0.0..1.0).contains(&config.dropout) {
        return Err(NeuralError::InvalidConfig(format!(
            "dropout rate {} is outside [0, 1)",
            config.dropout
        )));
    }
    if !(0.0..1.0).contains(&config.dev_fraction) {
        return Err(NeuralError::InvalidConfig(format!(
            "dev fraction {} is outside [0, 1)",
            config.dev_fraction
        )));
    }
    if !(config.learning_rate > 0.0) {
        return Err(NeuralError::InvalidConfig(format!(
            "learning rate {} is not positive",
            config.learning_rate
        )));
    }
    for (idx, (tokens, tags)) in corpus.iter().enumerate() {
        if tokens.is_empty() {
            return Err(NeuralError::InvalidConfig(format!(
                "sentence {idx} has no tokens"
            )));
        }
        if tokens.len() != tags.len() {
            return Err(NeuralError::Chain(crate::crf::CrfError::LengthMismatch {
                tags: tags.len(),
                lattice: tokens.len(),
            }));
        }
    }
    Ok(())
}

/// Trains the tagger from scratch. Word vectors start from the
/// pre-trained table where available (uniform noise elsewhere), and the
/// parameters returned are those of the epoch with the lowest dev loss
/// when a dev slice exists, otherwise the final ones.
pub fn train_neural(
    corpus: &[NeuralSentence],
    embeddings: Option<&WordEmbeddings>,
    config: &NeuralTrainConfig,
) -> Result<(LstmCrfModel, NeuralTrainLog), NeuralError> {
    validate(corpus, config)?;
    if let Some(table) = embeddings {
        if table.dim() != config.dims.word_dim {
            return Err(NeuralError::DimensionMismatch {
                expected: config.dims.word_dim,
                found: table.dim(),
            });
        }
    }

    let (word_vocab, char_vocab) = build_vocabularies(corpus);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut params = NeuralParams::init(
        &config.dims,
        char_vocab.len() + 1,
        word_vocab.len() + 1,
        &mut rng,
    );

    let mut log = NeuralTrainLog::default();
    if let Some(table) = embeddings {
        let mut matched = 0;
        for (word, &id) in &word_vocab {
            if let Some(vector) = table.get(word) {
                params.word_embeddings.row_mut(id).copy_from_slice(vector);
                matched += 1;
            }
        }
        log.embedding_coverage = Some(EmbeddingCoverage {
            matched,
            vocabulary: word_vocab.len(),
        });
    }

    let mut model = LstmCrfModel {
        dims: config.dims,
        word_vocab,
        char_vocab,
        params,
    };

    let n_dev = if config.dev_fraction > 0.0 && corpus.len() >= 2 {
        ((corpus.len() as f64 * config.dev_fraction).ceil() as usize).min(corpus.len() - 1)
    } else {
        0
    };
    let (train_slice, dev_slice) = corpus.split_at(corpus.len() - n_dev);

    let mut best: Option<(f64, usize, NeuralParams)> = None;
    let mut indices: Vec<usize> = (0..train_slice.len()).collect();
    let mut learning_rate = config.learning_rate;

    for epoch in 0..config.epochs {
        indices.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for &i in &indices {
            let (tokens, gold) = &train_slice[i];
            let dropout = if config.dropout > 0.0 {
                Some((&mut rng, config.dropout))
            } else {
                None
            };
            let (nll, mut grads) = sentence_gradient(&model, tokens, gold, dropout)?;
            if !nll.is_finite() || nll > 1e6 {
                return Err(NeuralError::Diverged { epoch, loss: nll });
            }
            epoch_loss += nll;

            if config.clip_norm > 0.0 {
                let norm = grads.global_norm();
                if norm > config.clip_norm {
                    grads.scale(config.clip_norm / norm);
                }
            }
            for ((name, w), (_, g)) in model
                .params
                .param_groups_mut()
                .into_iter()
                .zip(grads.param_groups())
            {
                if config.freeze_embeddings && name == "word_embeddings" {
                    continue;
                }
                for (wv, gv) in w.iter_mut().zip(g) {
                    *wv -= learning_rate * gv;
                }
            }
        }
        let train_loss = epoch_loss / train_slice.len() as f64;
        if !train_loss.is_finite() {
            return Err(NeuralError::Diverged {
                epoch,
                loss: train_loss,
            });
        }

        let dev_loss = if dev_slice.is_empty() {
            None
        } else {
            let mut total = 0.0;
            for (tokens, gold) in dev_slice {
                let (lattice, _) = encoder::forward(&model, tokens, None);
                total +=
                    lattice_nll_gradient(&lattice, &model.params.transitions, gold)?.nll;
            }
            Some(total / dev_slice.len() as f64)
        };
        if let Some(loss) = dev_loss {
            if best.as_ref().map_or(true, |(b, _, _)| loss < *b) {
                best = Some((loss, epoch, model.params.clone()));
            }
        }

        log.epochs.push(NeuralEpochStats {
            epoch,
            train_loss,
            dev_loss,
            learning_rate,
        });
        learning_rate *= config.lr_decay;
    }

    if let Some((_, epoch, params)) = best {
        model.params = params;
        log.best_epoch = Some(epoch);
    }
    Ok((model, log))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Document;
    use crate::ConceptLabel;

    fn words(items: &[&str]) -> Vec<String> {
        items.iter().map(|s| (*s).to_string()).collect()
    }

    fn tiny_dims() -> EncoderDims {
        EncoderDims {
            char_dim: 3,
            char_hidden: 4,
            word_dim: 5,
            word_hidden: 6,
        }
    }

    fn tiny_model(seed: u64, corpus: &[NeuralSentence]) -> LstmCrfModel {
        let (word_vocab, char_vocab) = build_vocabularies(corpus);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dims = tiny_dims();
        let params =
            NeuralParams::init(&dims, char_vocab.len() + 1, word_vocab.len() + 1, &mut rng);
        LstmCrfModel {
            dims,
            word_vocab,
            char_vocab,
            params,
        }
    }

    fn fd_sentence() -> NeuralSentence {
        (
            words(&["BP", "120/80", "stable"]),
            vec![
                Tag::Begin(ConceptLabel::Test),
                Tag::Inside(ConceptLabel::Test),
                Tag::Outside,
            ],
        )
    }

    /// Central differences over every parameter of the full network,
    /// including embeddings, both LSTM stacks, the projection, and the
    /// transition matrix.
    #[test]
    fn finite_differences_confirm_the_full_backward_pass() {
        let sentence = fd_sentence();
        let model = tiny_model(17, std::slice::from_ref(&sentence));
        let (tokens, gold) = &sentence;
        let (_, grads) = neural_nll_and_gradient(&model, tokens, gold).unwrap();

        let eps = 1e-4;
        let group_count = model.params.param_groups().len();
        let mut checked = 0usize;
        for group_idx in 0..group_count {
            let entries = model.params.param_groups()[group_idx].1.len();
            for k in 0..entries {
                let mut plus = model.clone();
                plus.params.param_groups_mut()[group_idx].1[k] += eps;
                let mut minus = model.clone();
                minus.params.param_groups_mut()[group_idx].1[k] -= eps;
                let loss_plus = neural_nll_and_gradient(&plus, tokens, gold).unwrap().0;
                let loss_minus = neural_nll_and_gradient(&minus, tokens, gold).unwrap().0;
                let numeric = (loss_plus - loss_minus) / (2.0 * eps);
                let analytic = grads.param_groups()[group_idx].1[k];
                if analytic.abs() < 1e-6 && numeric.abs() < 1e-6 {
                    checked += 1;
                    continue;
                }
                let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs());
                let name = grads.param_groups()[group_idx].0;
                assert!(
                    rel < 1e-4,
                    "{name}[{k}]: analytic {analytic} vs numeric {numeric} (rel {rel})"
                );
                checked += 1;
            }
        }
        assert!(checked > 1000, "only {checked} parameters checked");
    }

    #[test]
    fn zero_rate_dropout_gradient_matches_the_plain_path() {
        let sentence = fd_sentence();
        let model = tiny_model(23, std::slice::from_ref(&sentence));
        let (tokens, gold) = &sentence;
        let (plain_loss, plain_grads) = neural_nll_and_gradient(&model, tokens, gold).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let (loss, grads) =
            sentence_gradient(&model, tokens, gold, Some((&mut rng, 0.0))).unwrap();
        assert_eq!(plain_loss, loss);
        assert_eq!(plain_grads, grads);
    }

    /// Six distinct sentences where each content word dictates its tag.
    fn separable_corpus() -> Vec<NeuralSentence> {
        let (o, bp, bt, br) = (
            Tag::Outside,
            Tag::Begin(ConceptLabel::Problem),
            Tag::Begin(ConceptLabel::Test),
            Tag::Begin(ConceptLabel::Treatment),
        );
        vec![
            (words(&["fever", "after", "aspirin"]), vec![bp, o, br]),
            (words(&["ecg", "showed", "fever"]), vec![bt, o, bp]),
            (words(&["aspirin", "for", "fever"]), vec![br, o, bp]),
            (words(&["ecg", "then", "aspirin"]), vec![bt, o, br]),
            (words(&["fever", "and", "chills"]), vec![bp, o, bp]),
            (words(&["chills", "after", "ecg"]), vec![bp, o, bt]),
        ]
    }

    fn fast_config() -> NeuralTrainConfig {
        NeuralTrainConfig {
            dims: EncoderDims {
                char_dim: 6,
                char_hidden: 6,
                word_dim: 8,
                word_hidden: 8,
            },
            epochs: 120,
            learning_rate: 0.3,
            lr_decay: 0.97,
            clip_norm: 5.0,
            dropout: 0.05,
            freeze_embeddings: false,
            dev_fraction: 0.0,
            seed: 3,
        }
    }

    #[test]
    fn training_fits_a_separable_corpus_and_predicts_spans() {
        let corpus = separable_corpus();
        let (model, log) = train_neural(&corpus, None, &fast_config()).unwrap();

        let first = log.epochs.first().unwrap().train_loss;
        let last = log.epochs.last().unwrap().train_loss;
        assert!(last < first * 0.5, "loss {first} -> {last}");
        for (tokens, gold) in &corpus {
            assert_eq!(&model.decode_tokens(tokens), gold, "{tokens:?}");
        }

        let document = Document::from_text("doc", "fever after aspirin");
        let spans = predict_neural(&model, &document.sentences[0]).unwrap();
        assert_eq!(spans.len(), 2);
        assert_eq!(spans[0].label, ConceptLabel::Problem);
        assert_eq!(spans[0].text, "fever");
        assert_eq!(spans[1].label, ConceptLabel::Treatment);
        assert_eq!(spans[1].text, "aspirin");
    }

    #[test]
    fn training_is_bitwise_deterministic() {
        let corpus = separable_corpus();
        let config = NeuralTrainConfig {
            epochs: 4,
            dev_fraction: 0.2,
            ..fast_config()
        };
        let (model_a, log_a) = train_neural(&corpus, None, &config).unwrap();
        let (model_b, log_b) = train_neural(&corpus, None, &config).unwrap();
        assert_eq!(model_a, model_b);
        assert_eq!(log_a, log_b);
    }

    #[test]
    fn returned_parameters_minimize_the_dev_loss() {
        let corpus = separable_corpus();
        let config = NeuralTrainConfig {
            epochs: 8,
            dev_fraction: 0.34,
            ..fast_config()
        };
        let (model, log) = train_neural(&corpus, None, &config).unwrap();
        let dev_losses: Vec<f64> = log.epochs.iter().map(|e| e.dev_loss.unwrap()).collect();
        let best = dev_losses.iter().cloned().fold(f64::INFINITY, f64::min);

        let n_dev = (corpus.len() as f64 * config.dev_fraction).ceil() as usize;
        let dev = &corpus[corpus.len() - n_dev..];
        let mut recomputed = 0.0;
        for (tokens, gold) in dev {
            recomputed += neural_nll_and_gradient(&model, tokens, gold).unwrap().0;
        }
        recomputed /= dev.len() as f64;
        assert!(
            (recomputed - best).abs() < 1e-12,
            "returned model scores {recomputed}, best recorded {best}"
        );
        assert_eq!(
            log.best_epoch,
            Some(
                dev_losses
                    .iter()
                    .position(|l| *l == best)
                    .unwrap()
            )
        );
    }

    #[test]
    fn pretrained_rows_survive_training_when_frozen() {
        let corpus = separable_corpus();
        let table = WordEmbeddings::parse(concat!(
            "fever 0.5 -0.5 0.25 0.0 0.1 0.2 -0.1 0.3\n",
            "aspirin -1.0 1.0 0.0 0.5 -0.5 0.25 0.75 -0.25\n"
        ))
        .unwrap();
        let config = NeuralTrainConfig {
            epochs: 5,
            freeze_embeddings: true,
            ..fast_config()
        };
        let (model, log) = train_neural(&corpus, Some(&table), &config).unwrap();
        assert_eq!(
            log.embedding_coverage,
            Some(EmbeddingCoverage {
                matched: 2,
                vocabulary: model.word_vocab.len()
            })
        );
        let fever_row = model
            .params
            .word_embeddings
            .row(model.word_vocab["fever"]);
        assert_eq!(fever_row, table.get("fever").unwrap());

        let thawed = NeuralTrainConfig {
            freeze_embeddings: false,
            ..config
        };
        let (model2, _) = train_neural(&corpus, Some(&table), &thawed).unwrap();
        let fever_row2 = model2
            .params
            .word_embeddings
            .row(model2.word_vocab["fever"]);
        assert_ne!(fever_row2, table.get("fever").unwrap());
    }

    #[test]
    fn embedding_width_mismatch_is_rejected() {
        let corpus = separable_corpus();
        let table = WordEmbeddings::parse("fever 1.0 2.0\n").unwrap();
        let err = train_neural(&corpus, Some(&table), &fast_config()).unwrap_err();
        assert!(
            matches!(err, NeuralError::DimensionMismatch { expected: 8, found: 2 }),
            "{err}"
        );
    }

    #[test]
    fn runaway_learning_rate_reports_divergence() {
        let corpus = separable_corpus();
        let config = NeuralTrainConfig {
            learning_rate: 1e15,
            clip_norm: 0.0,
            epochs: 6,
            ..fast_config()
        };
        let err = train_neural(&corpus, None, &config).unwrap_err();
        assert!(matches!(err, NeuralError::Diverged { .. }), "{err}");
    }

    #[test]
    fn invalid_dropout_rates_are_rejected() {
        let corpus = separable_corpus();
        for rate in [1.0, 1.5, -0.25, f64::NAN] {
            let config = NeuralTrainConfig {
                dropout: rate,
                ..fast_config()
            };
            let err = train_neural(&corpus, None, &config).unwrap_err();
            assert!(matches!(err, NeuralError::InvalidConfig(_)), "rate {rate}");
        }
    }

    #[test]
    fn empty_and_ragged_corpora_are_rejected() {
        assert!(matches!(
            train_neural(&[], None, &fast_config()).unwrap_err(),
            NeuralError::EmptyCorpus
        ));
        let mut corpus = separable_corpus();
        corpus[1].1.pop();
        assert!(matches!(
            train_neural(&corpus, None, &fast_config()).unwrap_err(),
            NeuralError::Chain(crate::crf::CrfError::LengthMismatch { .. })
        ));
        let mut corpus = separable_corpus();
        corpus[0].0.clear();
        corpus[0].1.clear();
        assert!(matches!(
            train_neural(&corpus, None, &fast_config()).unwrap_err(),
            NeuralError::InvalidConfig(_)
        ));
    }

    #[test]
    fn gradient_shapes_match_the_parameters() {
        let sentence = fd_sentence();
        let model = tiny_model(5, std::slice::from_ref(&sentence));
        let (tokens, gold) = &sentence;
        let (_, grads) = neural_nll_and_gradient(&model, tokens, gold).unwrap();
        for ((name, p), (_, g)) in model
            .params
            .param_groups()
            .iter()
            .zip(grads.param_groups().iter())
        {
            assert_eq!(p.len(), g.len(), "{name}");
        }
        assert_eq!(grads.param_groups().len(), 17);
    }
}
