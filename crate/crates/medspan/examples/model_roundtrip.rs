//! Full artifact lifecycle: train a small model, save it as a versioned
//! JSON container, load it back, and tag unseen text with the restored
//! copy. Saving the reload again yields byte-identical output.
//!
//!     cargo run --example model_roundtrip

use medspan::corpus::{
    generate_synthetic_corpus, load_document, spans_to_iob, write_concept_file, ConceptSpan,
    SyntheticGrammar,
};
use medspan::crf::{train_crf, CrfTrainConfig, LabeledSentence};
use medspan::features::{extract_features, FallbackPosTagger, Lexicon};
use medspan::model_io::{encode_model, load_model, save_model, ModelFile, ModelPayload};

fn main() {
    let grammar = SyntheticGrammar::default();
    let (documents, annotations) =
        generate_synthetic_corpus(3, 40, &grammar).expect("default grammar is well-formed");

    let lexicon = Lexicon::new();
    let mut corpus: Vec<LabeledSentence> = Vec::new();
    for (doc, spans) in documents.iter().zip(&annotations) {
        for sentence in &doc.sentences {
            let line_spans: Vec<ConceptSpan> = spans
                .iter()
                .filter(|s| s.line_index == sentence.line_index)
                .cloned()
                .collect();
            let tags = spans_to_iob(sentence, &line_spans).expect("gold spans fit");
            corpus.push((
                extract_features(sentence, &lexicon, &FallbackPosTagger),
                tags,
            ));
        }
    }

    let config = CrfTrainConfig {
        epochs: 10,
        ..CrfTrainConfig::default()
    };
    let (model, _) = train_crf(&corpus, &config).expect("training converges");
    let file = ModelFile::new_crf(config, lexicon, model);

    let dir = tempfile::tempdir().expect("temp dir");
    let path = dir.path().join("demo.model.json");
    save_model(&path, &file).expect("model saves");
    println!(
        "saved {} ({} bytes)",
        path.display(),
        std::fs::metadata(&path).expect("saved file exists").len()
    );

    let restored = load_model(&path).expect("model loads");
    assert_eq!(
        encode_model(&restored).into_bytes(),
        encode_model(&file).into_bytes(),
        "serialization is stable"
    );
    println!("reloaded copy re-encodes byte-identically");

    let ModelPayload::Crf {
        model: crf,
        lexicon: restored_lexicon,
        ..
    } = restored.payload
    else {
        unreachable!("saved a crf payload");
    };

    let doc = load_document(
        "patient reports persistent migraines .\nstarted on lisinopril today .",
        "unseen",
    );
    let mut predicted = Vec::new();
    for sentence in &doc.sentences {
        let features = extract_features(sentence, &restored_lexicon, &FallbackPosTagger);
        let tags = crf.decode(&features);
        predicted.extend(
            medspan::corpus::iob_to_spans(&tags, sentence).expect("decoded tags are well-formed"),
        );
    }
    println!("\npredicted concepts for unseen text:");
    print!("{}", write_concept_file(&predicted));
}
