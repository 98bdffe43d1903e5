//! Scores predicted concept spans against gold annotations with exact
//! matching (same line, token range, and label) and prints both report
//! styles: the aligned table and the machine-readable key/value form.
//!
//!     cargo run --example evaluate_spans

use medspan::corpus::{ConceptLabel, ConceptSpan};
use medspan::eval::{format_report, format_report_kv, EvalAccumulator};

fn main() {
    let gold = vec![
        ConceptSpan::new(ConceptLabel::Problem, 1, 2, 3, "chest pain"),
        ConceptSpan::new(ConceptLabel::Problem, 3, 0, 2, "shortness of breath"),
        ConceptSpan::new(ConceptLabel::Test, 4, 1, 1, "ekg"),
        ConceptSpan::new(ConceptLabel::Treatment, 5, 4, 4, "aspirin"),
    ];
    let predicted = vec![
        // Exact match.
        ConceptSpan::new(ConceptLabel::Problem, 1, 2, 3, "chest pain"),
        // Right tokens, wrong label: counts against both classes.
        ConceptSpan::new(ConceptLabel::Test, 3, 0, 2, "shortness of breath"),
        // Boundary off by one token: no credit under exact matching.
        ConceptSpan::new(ConceptLabel::Test, 4, 1, 2, "ekg results"),
        // Exact match.
        ConceptSpan::new(ConceptLabel::Treatment, 5, 4, 4, "aspirin"),
    ];

    // Documents are scored in isolation; the accumulator never matches
    // spans across document boundaries even at equal coordinates.
    let mut scorer = EvalAccumulator::new();
    scorer.add_document(&gold, &predicted).expect("valid spans");
    scorer
        .add_document(&[ConceptSpan::new(ConceptLabel::Test, 4, 1, 1, "ekg")], &[])
        .expect("valid spans");
    let report = scorer.finish();

    println!("{}", format_report(&report));
    println!();
    println!("{}", format_report_kv(&report));
}
