//! Verifies both models' analytic gradients against central finite
//! differences on tiny inputs — the standard diagnostic when touching
//! anything in the backward pass.
//!
//!     cargo run --example gradient_check

use medspan::corpus::{ConceptLabel, Tag, NUM_TAGS};
use medspan::crf::{nll_and_gradient, CrfModel, LabeledSentence};
use medspan::features::FeatureVector;
use medspan::neural::{neural_nll_and_gradient, EncoderDims, LstmCrfModel, NeuralParams};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Relative error above unit magnitude, absolute below — the usual
/// gradient-check denominator, tolerant of the ~1e-9 floating-point noise
/// a central difference carries.
fn check_err(fd: f64, analytic: f64) -> f64 {
    (fd - analytic).abs() / fd.abs().max(analytic.abs()).max(1.0)
}

fn main() {
    crf_check();
    neural_check();
}

fn crf_check() {
    let fv = |pairs: &[(&str, &str)]| {
        let mut v = FeatureVector::new();
        for (ns, val) in pairs {
            v.insert(*ns, *val);
        }
        v
    };
    let sentence: LabeledSentence = (
        vec![
            fv(&[("w", "fever"), ("bias", "1")]),
            fv(&[("w", "treated"), ("bias", "1")]),
        ],
        vec![Tag::Begin(ConceptLabel::Problem), Tag::Outside],
    );
    let corpus = vec![sentence];

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut model = CrfModel::new(0.01);
    for key in ["w=fever", "w=treated", "bias=1"] {
        let mut row = [0.0; NUM_TAGS];
        for cell in &mut row {
            *cell = rng.gen_range(-1.0..1.0);
        }
        model.emission_weights.insert(key.to_string(), row);
    }

    let (loss, grad) = nll_and_gradient(&model, &corpus).expect("finite loss");
    let eps = 1e-5;
    let mut worst = 0.0_f64;
    for key in ["w=fever", "w=treated", "bias=1"] {
        for tag in 0..NUM_TAGS {
            let mut plus = model.clone();
            plus.emission_weights.get_mut(key).unwrap()[tag] += eps;
            let mut minus = model.clone();
            minus.emission_weights.get_mut(key).unwrap()[tag] -= eps;
            let fd = (nll_and_gradient(&plus, &corpus).unwrap().0
                - nll_and_gradient(&minus, &corpus).unwrap().0)
                / (2.0 * eps);
            worst = worst.max(check_err(fd, grad.emissions[key][tag]));
        }
    }
    println!("linear model: loss {loss:.6}, max gradient error {worst:.3e}");
    assert!(worst < 1e-6);
}

fn neural_check() {
    let dims = EncoderDims {
        char_dim: 2,
        char_hidden: 3,
        word_dim: 4,
        word_hidden: 3,
    };
    let tokens: Vec<String> = ["bp", "stable"].iter().map(|s| s.to_string()).collect();
    let gold = vec![Tag::Begin(ConceptLabel::Test), Tag::Outside];

    let mut word_vocab = std::collections::BTreeMap::new();
    word_vocab.insert("bp".to_string(), 1);
    word_vocab.insert("stable".to_string(), 2);
    let mut char_vocab = std::collections::BTreeMap::new();
    for (i, c) in "abelpst".chars().enumerate() {
        char_vocab.insert(c, i + 1);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let params = NeuralParams::init(&dims, char_vocab.len() + 1, word_vocab.len() + 1, &mut rng);
    let mut model = LstmCrfModel {
        dims,
        word_vocab,
        char_vocab,
        params,
    };

    let (loss, grad) = neural_nll_and_gradient(&model, &tokens, &gold).expect("finite loss");
    let grads: Vec<(&str, Vec<f64>)> = grad
        .param_groups()
        .into_iter()
        .map(|(name, values)| (name, values.to_vec()))
        .collect();

    let eps = 1e-4;
    let mut worst = 0.0_f64;
    for (group_index, (name, analytic)) in grads.iter().enumerate() {
        for (i, &a) in analytic.iter().enumerate() {
            let original = model.params.param_groups()[group_index].1[i];
            model.params.param_groups_mut()[group_index].1[i] = original + eps;
            let plus = neural_nll_and_gradient(&model, &tokens, &gold).unwrap().0;
            model.params.param_groups_mut()[group_index].1[i] = original - eps;
            let minus = neural_nll_and_gradient(&model, &tokens, &gold).unwrap().0;
            model.params.param_groups_mut()[group_index].1[i] = original;
            let fd = (plus - minus) / (2.0 * eps);
            let err = check_err(fd, a);
            if err >= 1e-4 {
                println!("  suspicious component {name}[{i}]: fd {fd:.3e} vs {a:.3e}");
            }
            worst = worst.max(err);
        }
    }
    println!("neural model: loss {loss:.6}, max gradient error {worst:.3e}");
    assert!(worst < 1e-4);
}
