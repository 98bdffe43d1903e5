//! Trains the word+character recurrent model on synthetic notes with a
//! deliberately tiny configuration, then scores it on a held-out slice.
//! Word vectors start from random initialization here; pass a pre-trained
//! table through `train_neural` to seed them instead.
//!
//!     cargo run --example train_lstm

use medspan::corpus::{
    generate_synthetic_corpus, spans_to_iob, ConceptSpan, SyntheticGrammar,
};
use medspan::eval::{format_report, EvalAccumulator};
use medspan::neural::{
    predict_neural, train_neural, EncoderDims, NeuralSentence, NeuralTrainConfig,
};

fn main() {
    let grammar = SyntheticGrammar::default();
    let (documents, annotations) =
        generate_synthetic_corpus(7, 60, &grammar).expect("default grammar is well-formed");
    let (train_docs, test_docs) = documents.split_at(48);
    let (train_spans, test_spans) = annotations.split_at(48);

    let mut corpus: Vec<NeuralSentence> = Vec::new();
    for (doc, spans) in train_docs.iter().zip(train_spans) {
        for sentence in &doc.sentences {
            let line_spans: Vec<ConceptSpan> = spans
                .iter()
                .filter(|s| s.line_index == sentence.line_index)
                .cloned()
                .collect();
            let tags = spans_to_iob(sentence, &line_spans).expect("gold spans fit");
            let tokens: Vec<String> = sentence.tokens.iter().map(|t| t.text.clone()).collect();
            corpus.push((tokens, tags));
        }
    }

    let config = NeuralTrainConfig {
        dims: EncoderDims {
            char_dim: 8,
            char_hidden: 8,
            word_dim: 16,
            word_hidden: 16,
        },
        epochs: 10,
        learning_rate: 0.08,
        dropout: 0.1,
        dev_fraction: 0.1,
        ..NeuralTrainConfig::default()
    };
    let (model, log) = train_neural(&corpus, None, &config).expect("training converges");
    for stats in &log.epochs {
        match stats.dev_loss {
            Some(dev) => println!(
                "epoch {:>3}  train-loss {:.6}  dev-loss {:.6}  lr {:.6}",
                stats.epoch, stats.train_loss, dev, stats.learning_rate
            ),
            None => println!(
                "epoch {:>3}  train-loss {:.6}  lr {:.6}",
                stats.epoch, stats.train_loss, stats.learning_rate
            ),
        }
    }
    if let Some(best) = log.best_epoch {
        println!("kept parameters from epoch {best}");
    }
    println!(
        "\nvocabulary: {} words, {} characters",
        model.word_vocab.len(),
        model.char_vocab.len()
    );

    let mut scorer = EvalAccumulator::new();
    for (doc, gold) in test_docs.iter().zip(test_spans) {
        let mut predicted = Vec::new();
        for sentence in &doc.sentences {
            predicted.extend(predict_neural(&model, sentence).expect("decoded tags decode"));
        }
        scorer.add_document(gold, &predicted).expect("valid spans");
    }
    println!("\nheld-out scores ({} documents):", test_docs.len());
    println!("{}", format_report(&scorer.finish()));
}
