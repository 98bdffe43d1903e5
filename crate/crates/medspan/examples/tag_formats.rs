//! Round-trips one annotated sentence through the two interchange
//! formats: the IOB tag sequence used by the models and the line-oriented
//! concept file used on disk.
//!
//!     cargo run --example tag_formats

use medspan::corpus::{
    iob_to_spans, load_document, parse_concept_file, spans_to_iob, write_concept_file,
    ConceptLabel, ConceptSpan,
};

fn main() {
    let text = "Patient denies chest pain but reports shortness of breath .\n\
                An EKG was ordered and aspirin was given .";
    let doc = load_document(text, "demo");

    // Gold annotations, stated as token ranges on 1-based lines.
    let spans = vec![
        ConceptSpan::new(ConceptLabel::Problem, 1, 2, 3, "chest pain"),
        ConceptSpan::new(ConceptLabel::Problem, 1, 6, 8, "shortness of breath"),
        ConceptSpan::new(ConceptLabel::Test, 2, 1, 1, "EKG"),
        ConceptSpan::new(ConceptLabel::Treatment, 2, 5, 5, "aspirin"),
    ];

    for sentence in &doc.sentences {
        let line_spans: Vec<ConceptSpan> = spans
            .iter()
            .filter(|s| s.line_index == sentence.line_index)
            .cloned()
            .collect();
        let tags = spans_to_iob(sentence, &line_spans).expect("spans fit the sentence");

        println!("line {}:", sentence.line_index);
        for (token, tag) in sentence.tokens.iter().zip(&tags) {
            println!("  {:<12} {}", token.text, tag.as_str());
        }

        let decoded = iob_to_spans(&tags, sentence).expect("tags decode");
        assert_eq!(decoded, line_spans, "IOB encoding is lossless");
    }

    let con_text = write_concept_file(&spans);
    println!("\nconcept file:\n{con_text}");

    let reparsed = parse_concept_file(&con_text).expect("own output parses");
    assert_eq!(write_concept_file(&reparsed), con_text, "byte-stable");
    println!("round trip: {} spans preserved byte-for-byte", reparsed.len());
}
