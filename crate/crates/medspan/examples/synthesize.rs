//! Generates a small synthetic corpus of clinical notes with gold concept
//! annotations and prints the first document in both on-disk formats: the
//! raw note text and its concept file.
//!
//!     cargo run --example synthesize

use medspan::corpus::{generate_synthetic_corpus, write_concept_file, SyntheticGrammar};

fn main() {
    let grammar = SyntheticGrammar::default();
    let (documents, annotations) =
        generate_synthetic_corpus(42, 5, &grammar).expect("default grammar is well-formed");

    println!("generated {} documents\n", documents.len());
    let doc = &documents[0];
    let spans = &annotations[0];

    println!("--- {}.txt ---", doc.doc_id);
    for line in &doc.raw_lines {
        println!("{line}");
    }

    println!("--- {}.con ---", doc.doc_id);
    print!("{}", write_concept_file(spans));

    let total: usize = annotations.iter().map(Vec::len).sum();
    println!("--- totals ---");
    println!(
        "{} sentences, {} concept spans across the corpus",
        documents.iter().map(|d| d.sentences.len()).sum::<usize>(),
        total
    );
}
