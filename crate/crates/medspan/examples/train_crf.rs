//! Trains the feature-based linear model on synthetic notes and scores it
//! on a held-out slice with exact span matching.
//!
//!     cargo run --example train_crf

use medspan::corpus::{
    generate_synthetic_corpus, iob_to_spans, spans_to_iob, ConceptSpan, Document,
    SyntheticGrammar,
};
use medspan::crf::{train_crf, CrfTrainConfig, LabeledSentence};
use medspan::eval::{format_report, EvalAccumulator};
use medspan::features::{extract_features, FallbackPosTagger, Lexicon};

fn main() {
    let grammar = SyntheticGrammar::default();
    let (documents, annotations) =
        generate_synthetic_corpus(7, 60, &grammar).expect("default grammar is well-formed");
    let (train_docs, test_docs) = documents.split_at(48);
    let (train_spans, test_spans) = annotations.split_at(48);

    let lexicon = Lexicon::new();
    let tagger = FallbackPosTagger;
    let mut corpus: Vec<LabeledSentence> = Vec::new();
    for (doc, spans) in train_docs.iter().zip(train_spans) {
        for sentence in &doc.sentences {
            let line_spans: Vec<ConceptSpan> = spans
                .iter()
                .filter(|s| s.line_index == sentence.line_index)
                .cloned()
                .collect();
            let tags = spans_to_iob(sentence, &line_spans).expect("gold spans fit");
            let features = extract_features(sentence, &lexicon, &tagger);
            corpus.push((features, tags));
        }
    }

    let config = CrfTrainConfig {
        epochs: 12,
        ..CrfTrainConfig::default()
    };
    let (model, log) = train_crf(&corpus, &config).expect("training converges");
    for stats in &log.epochs {
        println!(
            "epoch {:>3}  loss {:.6}  grad {:.6}  lr {:.6}",
            stats.epoch, stats.loss, stats.grad_norm, stats.learning_rate
        );
    }
    println!(
        "\n{} weighted features, {} training sentences",
        model.emission_weights.len(),
        corpus.len()
    );

    let mut scorer = EvalAccumulator::new();
    for (doc, gold) in test_docs.iter().zip(test_spans) {
        let predicted = predict_document(&model, &lexicon, doc);
        scorer.add_document(gold, &predicted).expect("valid spans");
    }
    println!("\nheld-out scores ({} documents):", test_docs.len());
    println!("{}", format_report(&scorer.finish()));
}

fn predict_document(
    model: &medspan::crf::CrfModel,
    lexicon: &Lexicon,
    doc: &Document,
) -> Vec<ConceptSpan> {
    let mut spans = Vec::new();
    for sentence in &doc.sentences {
        let features = extract_features(sentence, lexicon, &FallbackPosTagger);
        let tags = model.decode(&features);
        spans.extend(iob_to_spans(&tags, sentence).expect("decoded tags are well-formed"));
    }
    spans
}
