//! Negative log-likelihood, its exact gradient, and mini-batch gradient
//! descent for the feature-based model.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Tag, TagSequence, NUM_TAGS};
use crate::features::FeatureVector;

use super::inference::{forward_log_partition, posterior_marginals, score_sequence};
use super::{CrfError, CrfModel, Lattice, TransitionMatrix, START, STOP};

/// One training sentence: per-token feature vectors plus gold tags.
pub type LabeledSentence = (Vec<FeatureVector>, TagSequence);

/// Gradient of the chain layer for a single sentence with the lattice
/// held fixed: expected minus empirical sufficient statistics.
pub struct LatticeGradient {
    /// Negative log-likelihood of the gold tagging.
    pub nll: f64,
    /// ∂nll/∂emission, T×7.
    pub d_emissions: Vec<[f64; NUM_TAGS]>,
    /// ∂nll/∂transition over the full 9×9 matrix.
    pub d_transitions: TransitionMatrix,
}

/// Computes `log Z − score(gold)` and its gradient with respect to every
/// emission cell and transition weight. This is the piece shared by the
/// feature-based trainer and the neural chain layer.
pub fn lattice_nll_gradient(
    lattice: &Lattice,
    transitions: &TransitionMatrix,
    gold: &[Tag],
) -> Result<LatticeGradient, CrfError> {
    let gold_score = score_sequence(lattice, transitions, gold)?;
    let log_z = forward_log_partition(lattice, transitions);
    let (nodes, edges) = posterior_marginals(lattice, transitions);
    let len = lattice.len();
    let node_first = nodes[0];
    let node_last = nodes[len - 1];

    let mut d_emissions = nodes;
    for (t, tag) in gold.iter().enumerate() {
        d_emissions[t][tag.index()] -= 1.0;
    }

    let mut d_transitions = TransitionMatrix::zeros();
    for (t, block) in edges.iter().enumerate() {
        for (i, row) in block.iter().enumerate() {
            for (j, p) in row.iter().enumerate() {
                d_transitions.add(i, j, *p);
            }
        }
        d_transitions.add(gold[t].index(), gold[t + 1].index(), -1.0);
    }
    // Every path leaves START exactly once and enters STOP exactly once,
    // so those expected counts are the endpoint node marginals.
    for y in 0..NUM_TAGS {
        d_transitions.add(START, y, node_first[y]);
        d_transitions.add(y, STOP, node_last[y]);
    }
    d_transitions.add(START, gold[0].index(), -1.0);
    d_transitions.add(gold[len - 1].index(), STOP, -1.0);

    Ok(LatticeGradient {
        nll: log_z - gold_score,
        d_emissions,
        d_transitions,
    })
}

/// Gradient of the regularized batch loss with respect to every weight
/// stored in a [`CrfModel`].
#[derive(Debug, Clone)]
pub struct CrfGradient {
    pub emissions: BTreeMap<String, [f64; NUM_TAGS]>,
    pub transitions: TransitionMatrix,
}

impl CrfGradient {
    /// Euclidean norm over all entries.
    pub fn global_norm(&self) -> f64 {
        let sq_emissions: f64 = self
            .emissions
            .values()
            .flat_map(|row| row.iter())
            .map(|g| g * g)
            .sum();
        let sq_transitions: f64 = self.transitions.iter().map(|g| g * g).sum();
        (sq_emissions + sq_transitions).sqrt()
    }
}

/// Data term of the batch loss: summed sentence NLLs plus a sparse
/// gradient touching only the features observed in the batch. The caller
/// supplies pre-rendered feature keys per token.
fn batch_data_gradient<'a, I>(
    model: &CrfModel,
    batch: I,
) -> Result<(f64, BTreeMap<String, [f64; NUM_TAGS]>, TransitionMatrix), CrfError>
where
    I: Iterator<Item = (&'a [Vec<String>], &'a [Tag])>,
{
    let mut loss = 0.0;
    let mut d_emissions: BTreeMap<String, [f64; NUM_TAGS]> = BTreeMap::new();
    let mut d_transitions = TransitionMatrix::zeros();
    for (keys, gold) in batch {
        let lattice = model.lattice_from_keys(keys);
        let grad = lattice_nll_gradient(&lattice, &model.transitions, gold)?;
        loss += grad.nll;
        for (token_keys, row) in keys.iter().zip(&grad.d_emissions) {
            for key in token_keys {
                if !model.emission_weights.contains_key(key) {
                    continue;
                }
                let acc = d_emissions.entry(key.clone()).or_insert([0.0; NUM_TAGS]);
                for (a, g) in acc.iter_mut().zip(row) {
                    *a += g;
                }
            }
        }
        for (acc, g) in d_transitions.iter_mut().zip(grad.d_transitions.iter()) {
            *acc += g;
        }
    }
    Ok((loss, d_emissions, d_transitions))
}

fn render_keys(features: &[FeatureVector]) -> Vec<Vec<String>> {
    features
        .iter()
        .map(|fv| fv.iter().map(|f| f.key()).collect())
        .collect()
}

/// Regularized batch loss and its dense gradient:
///
/// `loss = Σ_s (log Z_s − score_s(gold)) + (λ/2)·‖w‖²`
///
/// over all emission and transition weights stored in the model.
/// Features in the batch that the model does not know are ignored, the
/// same way lattice construction ignores them.
pub fn nll_and_gradient(
    model: &CrfModel,
    batch: &[LabeledSentence],
) -> Result<(f64, CrfGradient), CrfError> {
    let keyed: Vec<(Vec<Vec<String>>, &TagSequence)> = batch
        .iter()
        .map(|(features, tags)| (render_keys(features), tags))
        .collect();
    let (data_loss, sparse, d_trans_data) = batch_data_gradient(
        model,
        keyed.iter().map(|(k, t)| (k.as_slice(), t.as_slice())),
    )?;

    let lambda = model.l2_lambda;
    let mut sq_norm = 0.0;
    let mut emissions: BTreeMap<String, [f64; NUM_TAGS]> = BTreeMap::new();
    for (key, weights) in &model.emission_weights {
        let mut row = [0.0; NUM_TAGS];
        for (g, w) in row.iter_mut().zip(weights) {
            *g = lambda * w;
            sq_norm += w * w;
        }
        emissions.insert(key.clone(), row);
    }
    for (key, data_row) in sparse {
        let row = emissions
            .get_mut(&key)
            .expect("sparse gradient only touches known features");
        for (g, d) in row.iter_mut().zip(&data_row) {
            *g += d;
        }
    }
    let mut transitions = d_trans_data;
    for (g, w) in transitions.iter_mut().zip(model.transitions.iter()) {
        *g += lambda * w;
        sq_norm += w * w;
    }

    let loss = data_loss + 0.5 * lambda * sq_norm;
    Ok((loss, CrfGradient { emissions, transitions }))
}

/// Hyperparameters for [`train_crf`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrfTrainConfig {
    pub epochs: usize,
    /// Initial step size; multiplied by `lr_decay` after each epoch.
    pub learning_rate: f64,
    pub lr_decay: f64,
    pub l2_lambda: f64,
    pub batch_size: usize,
    /// Stop early once every batch gradient in an epoch has Euclidean
    /// norm below this value.
    pub grad_tolerance: f64,
    pub seed: u64,
}

impl Default for CrfTrainConfig {
    fn default() -> Self {
        CrfTrainConfig {
            epochs: 50,
            learning_rate: 0.1,
            lr_decay: 0.9,
            l2_lambda: 1e-4,
            batch_size: 8,
            grad_tolerance: 1e-8,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrfEpochStats {
    pub epoch: usize,
    /// Running sum of batch data losses plus the regularizer measured at
    /// the end of the epoch.
    pub loss: f64,
    /// Largest batch gradient norm seen during the epoch.
    pub grad_norm: f64,
    pub learning_rate: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CrfTrainLog {
    pub epochs: Vec<CrfEpochStats>,
}

impl CrfTrainLog {
    pub fn final_loss(&self) -> Option<f64> {
        self.epochs.last().map(|e| e.loss)
    }
}

/// Trains a feature-based model by mini-batch gradient descent. The
/// feature vocabulary is collected from the corpus up front; weights
/// start at zero, batches are reshuffled every epoch from a fixed seed,
/// and the run aborts with a diagnostic if the loss leaves the finite
/// range.
pub fn train_crf(
    corpus: &[LabeledSentence],
    config: &CrfTrainConfig,
) -> Result<(CrfModel, CrfTrainLog), CrfError> {
    if corpus.is_empty() {
        return Err(CrfError::EmptyCorpus);
    }
    assert!(config.batch_size >= 1, "batch_size must be at least 1");
    for (features, tags) in corpus {
        if features.len() != tags.len() {
            return Err(CrfError::LengthMismatch {
                tags: tags.len(),
                lattice: features.len(),
            });
        }
    }

    let keyed: Vec<Vec<Vec<String>>> = corpus
        .iter()
        .map(|(features, _)| render_keys(features))
        .collect();

    let mut model = CrfModel::new(config.l2_lambda);
    for sentence in &keyed {
        for token_keys in sentence {
            for key in token_keys {
                model
                    .emission_weights
                    .entry(key.clone())
                    .or_insert([0.0; NUM_TAGS]);
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut log = CrfTrainLog::default();
    let mut indices: Vec<usize> = (0..corpus.len()).collect();
    let mut learning_rate = config.learning_rate;

    for epoch in 0..config.epochs {
        indices.shuffle(&mut rng);
        let mut data_loss = 0.0;
        let mut max_grad_norm: f64 = 0.0;

        for batch_indices in indices.chunks(config.batch_size) {
            let (batch_loss, sparse, d_trans) = batch_data_gradient(
                &model,
                batch_indices
                    .iter()
                    .map(|&i| (keyed[i].as_slice(), corpus[i].1.as_slice())),
            )?;
            data_loss += batch_loss;

            let mut sq_norm: f64 = sparse
                .values()
                .flat_map(|row| row.iter())
                .map(|g| g * g)
                .sum();
            sq_norm += d_trans.iter().map(|g| g * g).sum::<f64>();
            max_grad_norm = max_grad_norm.max(sq_norm.sqrt());

            // Shrinking every weight by (1 − lr·λ) before the sparse
            // update is exactly one step against the regularized batch
            // gradient taken at the pre-update weights.
            let shrink = 1.0 - learning_rate * config.l2_lambda;
            for row in model.emission_weights.values_mut() {
                for w in row.iter_mut() {
                    *w *= shrink;
                }
            }
            for w in model.transitions.iter_mut() {
                *w *= shrink;
            }
            for (key, grad_row) in &sparse {
                let row = model
                    .emission_weights
                    .get_mut(key)
                    .expect("vocabulary collected up front");
                for (w, g) in row.iter_mut().zip(grad_row) {
                    *w -= learning_rate * g;
                }
            }
            for (w, g) in model.transitions.iter_mut().zip(d_trans.iter()) {
                *w -= learning_rate * g;
            }
        }

        let mut sq_norm = 0.0;
        for row in model.emission_weights.values() {
            for w in row {
                sq_norm += w * w;
            }
        }
        sq_norm += model.transitions.iter().map(|w| w * w).sum::<f64>();
        let loss = data_loss + 0.5 * config.l2_lambda * sq_norm;

        if !loss.is_finite() {
            return Err(CrfError::NonFiniteLoss { epoch, loss });
        }
        log.epochs.push(CrfEpochStats {
            epoch,
            loss,
            grad_norm: max_grad_norm,
            learning_rate,
        });
        learning_rate *= config.lr_decay;
        if max_grad_norm < config.grad_tolerance {
            break;
        }
    }

    Ok((model, log))
}

#[cfg(test)]
mod tests {
    use super::super::test_util::rng;
    use super::*;
    use crate::features::Feature;
    use rand::Rng;

    /// Sentence whose token `t` carries the single feature `u=w<t>`.
    fn indexed_sentence(words: usize, tags: &[Tag]) -> LabeledSentence {
        let features = (0..words)
            .map(|t| {
                [Feature::new("u", format!("w{t}"))]
                    .into_iter()
                    .collect::<FeatureVector>()
            })
            .collect();
        (features, tags.to_vec())
    }

    /// Builds a model whose vocabulary covers the batch, with every
    /// weight drawn from [-1, 1).
    fn random_model(batch: &[LabeledSentence], lambda: f64, seed: u64) -> CrfModel {
        let mut r = rng(seed);
        let mut model = CrfModel::new(lambda);
        for (features, _) in batch {
            for fv in features {
                for f in fv {
                    model.emission_weights.entry(f.key()).or_insert_with(|| {
                        let mut row = [0.0; NUM_TAGS];
                        for v in &mut row {
                            *v = r.gen_range(-1.0..1.0);
                        }
                        row
                    });
                }
            }
        }
        for w in model.transitions.iter_mut() {
            *w = r.gen_range(-1.0..1.0);
        }
        model
    }

    fn toy_batch() -> Vec<LabeledSentence> {
        vec![
            indexed_sentence(
                3,
                &[
                    Tag::Outside,
                    Tag::Begin(crate::ConceptLabel::Problem),
                    Tag::Inside(crate::ConceptLabel::Problem),
                ],
            ),
            indexed_sentence(
                4,
                &[
                    Tag::Begin(crate::ConceptLabel::Test),
                    Tag::Inside(crate::ConceptLabel::Test),
                    Tag::Outside,
                    Tag::Begin(crate::ConceptLabel::Treatment),
                ],
            ),
        ]
    }

    #[test]
    fn finite_differences_confirm_the_analytic_gradient() {
        let batch = toy_batch();
        let model = random_model(&batch, 0.01, 21);
        let (_, grad) = nll_and_gradient(&model, &batch).unwrap();
        let eps = 1e-5;
        let mut checked = 0usize;

        let keys: Vec<String> = model.emission_weights.keys().cloned().collect();
        for key in &keys {
            for y in 0..NUM_TAGS {
                let mut plus = model.clone();
                plus.emission_weights.get_mut(key).unwrap()[y] += eps;
                let mut minus = model.clone();
                minus.emission_weights.get_mut(key).unwrap()[y] -= eps;
                let numeric = (nll_and_gradient(&plus, &batch).unwrap().0
                    - nll_and_gradient(&minus, &batch).unwrap().0)
                    / (2.0 * eps);
                let analytic = grad.emissions[key][y];
                assert_close(analytic, numeric, &format!("emission {key}[{y}]"));
                checked += 1;
            }
        }
        for from in 0..super::super::NUM_STATES {
            for to in 0..super::super::NUM_STATES {
                let mut plus = model.clone();
                plus.transitions.add(from, to, eps);
                let mut minus = model.clone();
                minus.transitions.add(from, to, -eps);
                let numeric = (nll_and_gradient(&plus, &batch).unwrap().0
                    - nll_and_gradient(&minus, &batch).unwrap().0)
                    / (2.0 * eps);
                let analytic = grad.transitions.get(from, to);
                assert_close(analytic, numeric, &format!("transition {from}->{to}"));
                checked += 1;
            }
        }
        assert_eq!(checked, keys.len() * NUM_TAGS + 81);
    }

    fn assert_close(analytic: f64, numeric: f64, what: &str) {
        if analytic.abs() < 1e-8 && numeric.abs() < 1e-8 {
            return;
        }
        let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs());
        assert!(
            rel < 1e-6,
            "{what}: analytic {analytic} vs numeric {numeric} (rel {rel})"
        );
    }

    #[test]
    fn zero_weight_gradient_has_uniform_expectations() {
        let tags = [
            Tag::Begin(crate::ConceptLabel::Problem),
            Tag::Inside(crate::ConceptLabel::Problem),
            Tag::Outside,
        ];
        let sentence = indexed_sentence(3, &tags);
        let mut model = CrfModel::new(0.0);
        for (features, _) in std::slice::from_ref(&sentence) {
            for fv in features {
                for f in fv {
                    model.emission_weights.insert(f.key(), [0.0; NUM_TAGS]);
                }
            }
        }
        let batch = vec![sentence];
        let (loss, grad) = nll_and_gradient(&model, &batch).unwrap();

        // With all weights zero every path scores 0, so the NLL is
        // T·ln 7 and all expectations are uniform.
        assert!((loss - 3.0 * (7.0f64).ln()).abs() < 1e-12);
        for (t, tag) in tags.iter().enumerate() {
            let row = &grad.emissions[&format!("u=w{t}")];
            for y in 0..NUM_TAGS {
                let expected = 1.0 / 7.0 - if y == tag.index() { 1.0 } else { 0.0 };
                assert!((row[y] - expected).abs() < 1e-12, "u=w{t}[{y}]");
            }
        }
        for i in 0..NUM_TAGS {
            for j in 0..NUM_TAGS {
                let mut expected = 2.0 / 49.0;
                for t in 0..2 {
                    if tags[t].index() == i && tags[t + 1].index() == j {
                        expected -= 1.0;
                    }
                }
                assert!((grad.transitions.get(i, j) - expected).abs() < 1e-12);
            }
            let start_expected =
                1.0 / 7.0 - if tags[0].index() == i { 1.0 } else { 0.0 };
            assert!((grad.transitions.get(START, i) - start_expected).abs() < 1e-12);
            let stop_expected =
                1.0 / 7.0 - if tags[2].index() == i { 1.0 } else { 0.0 };
            assert!((grad.transitions.get(i, STOP) - stop_expected).abs() < 1e-12);
        }
    }

    #[test]
    fn loss_stays_nonnegative() {
        let batch = toy_batch();
        for seed in 0..5 {
            let model = random_model(&batch, 0.1, seed);
            let (loss, _) = nll_and_gradient(&model, &batch).unwrap();
            assert!(loss >= 0.0, "seed {seed}: loss {loss}");
        }
    }

    #[test]
    fn regularizer_reaches_weights_outside_the_batch() {
        let batch = toy_batch();
        let mut model = random_model(&batch, 0.5, 3);
        model.emission_weights.insert("u=unseen".into(), [2.0; NUM_TAGS]);
        let (_, grad) = nll_and_gradient(&model, &batch).unwrap();
        for g in &grad.emissions["u=unseen"] {
            assert!((g - 0.5 * 2.0).abs() < 1e-15);
        }
    }

    /// Twenty sentences over a vocabulary where each word determines its
    /// tag; linearly separable, so training must make quick progress.
    fn separable_corpus() -> Vec<LabeledSentence> {
        let tag_of = |w: usize| Tag::ALL[w % NUM_TAGS];
        (0..20)
            .map(|s| {
                let len = 3 + s % 4;
                let words: Vec<usize> = (0..len).map(|t| (s + 3 * t) % 14).collect();
                let features = words
                    .iter()
                    .map(|w| {
                        [Feature::new("u", format!("v{w}"))]
                            .into_iter()
                            .collect::<FeatureVector>()
                    })
                    .collect();
                let tags = words.iter().map(|&w| tag_of(w)).collect();
                (features, tags)
            })
            .collect()
    }

    #[test]
    fn loss_decreases_over_early_epochs() {
        let corpus = separable_corpus();
        let config = CrfTrainConfig {
            epochs: 5,
            batch_size: 4,
            ..CrfTrainConfig::default()
        };
        let (_, log) = train_crf(&corpus, &config).unwrap();
        assert_eq!(log.epochs.len(), 5);
        for pair in log.epochs.windows(2) {
            assert!(
                pair[1].loss < pair[0].loss,
                "epoch {} loss {} did not improve on {}",
                pair[1].epoch,
                pair[1].loss,
                pair[0].loss
            );
        }
    }

    #[test]
    fn training_fits_a_separable_corpus() {
        let corpus = separable_corpus();
        let config = CrfTrainConfig {
            epochs: 30,
            batch_size: 4,
            ..CrfTrainConfig::default()
        };
        let (model, _) = train_crf(&corpus, &config).unwrap();
        for (features, tags) in &corpus {
            assert_eq!(&model.decode(features), tags);
        }
    }

    #[test]
    fn heavy_regularization_crushes_the_weights() {
        let corpus = separable_corpus();
        let config = CrfTrainConfig {
            epochs: 10,
            l2_lambda: 1e6,
            learning_rate: 1e-7,
            ..CrfTrainConfig::default()
        };
        let (model, _) = train_crf(&corpus, &config).unwrap();
        for row in model.emission_weights.values() {
            for w in row {
                assert!(w.abs() < 1e-3, "weight {w} escaped the regularizer");
            }
        }
    }

    #[test]
    fn training_is_bitwise_deterministic() {
        let corpus = separable_corpus();
        let config = CrfTrainConfig {
            epochs: 8,
            seed: 42,
            ..CrfTrainConfig::default()
        };
        let (model_a, log_a) = train_crf(&corpus, &config).unwrap();
        let (model_b, log_b) = train_crf(&corpus, &config).unwrap();
        assert_eq!(model_a, model_b);
        assert_eq!(log_a, log_b);
    }

    #[test]
    fn different_seeds_shuffle_differently_but_both_converge() {
        let corpus = separable_corpus();
        let base = CrfTrainConfig {
            epochs: 12,
            ..CrfTrainConfig::default()
        };
        let (model_a, _) =
            train_crf(&corpus, &CrfTrainConfig { seed: 1, ..base.clone() }).unwrap();
        let (model_b, _) =
            train_crf(&corpus, &CrfTrainConfig { seed: 2, ..base }).unwrap();
        assert_ne!(model_a, model_b);
        for (features, tags) in &corpus {
            assert_eq!(&model_a.decode(features), tags);
            assert_eq!(&model_b.decode(features), tags);
        }
    }

    #[test]
    fn exploding_steps_abort_with_a_named_epoch() {
        let corpus = separable_corpus();
        let config = CrfTrainConfig {
            epochs: 5,
            learning_rate: 1e200,
            lr_decay: 1.0,
            ..CrfTrainConfig::default()
        };
        let err = train_crf(&corpus, &config).unwrap_err();
        assert!(matches!(err, CrfError::NonFiniteLoss { .. }), "{err}");
    }

    #[test]
    fn empty_corpus_is_rejected() {
        let err = train_crf(&[], &CrfTrainConfig::default()).unwrap_err();
        assert!(matches!(err, CrfError::EmptyCorpus));
    }

    #[test]
    fn mismatched_sentence_is_rejected() {
        let mut corpus = separable_corpus();
        corpus[0].1.pop();
        let err = train_crf(&corpus, &CrfTrainConfig::default()).unwrap_err();
        assert!(matches!(err, CrfError::LengthMismatch { .. }));
    }
}
