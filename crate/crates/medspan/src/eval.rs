//! Span-level scoring: a prediction counts only if its line, token
//! boundaries, and label all match a gold span exactly. Precision,
//! recall, and F1 are reported per class and micro-averaged, with
//! zero denominators scored as zero rather than NaN.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use crate::corpus::{ConceptLabel, ConceptSpan, CorpusError};

/// Exact-match tallies for one class (or the micro pool).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SpanCounts {
    pub matched: usize,
    pub predicted: usize,
    pub gold: usize,
}

impl SpanCounts {
    pub fn precision(&self) -> f64 {
        ratio(self.matched, self.predicted)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.matched, self.gold)
    }

    pub fn f1(&self) -> f64 {
        let (p, r) = (self.precision(), self.recall());
        if p + r == 0.0 {
            0.0
        } else {
            2.0 * p * r / (p + r)
        }
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Scores for one evaluation run. Every class appears in `per_class`
/// even when no spans of that class were seen.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvalReport {
    pub per_class: BTreeMap<ConceptLabel, SpanCounts>,
    pub micro: SpanCounts,
}

impl EvalReport {
    fn empty() -> EvalReport {
        let per_class = ConceptLabel::ALL
            .iter()
            .map(|label| (*label, SpanCounts::default()))
            .collect();
        EvalReport {
            per_class,
            micro: SpanCounts::default(),
        }
    }
}

/// Accumulates scores document by document, so that identical
/// coordinates in different documents can never match each other.
#[derive(Debug, Clone)]
pub struct EvalAccumulator {
    report: EvalReport,
}

impl Default for EvalAccumulator {
    fn default() -> Self {
        EvalAccumulator {
            report: EvalReport::empty(),
        }
    }
}

impl EvalAccumulator {
    pub fn new() -> EvalAccumulator {
        EvalAccumulator::default()
    }

    /// Tallies one document's gold and predicted spans. Either list
    /// containing internally overlapping spans is a data error.
    pub fn add_document(
        &mut self,
        gold: &[ConceptSpan],
        predicted: &[ConceptSpan],
    ) -> Result<(), CorpusError> {
        check_no_overlap(gold)?;
        check_no_overlap(predicted)?;

        let key =
            |s: &ConceptSpan| (s.line_index, s.start_token, s.end_token, s.label);
        let gold_keys: BTreeSet<_> = gold.iter().map(key).collect();

        for span in predicted {
            let counts = self
                .report
                .per_class
                .get_mut(&span.label)
                .expect("all labels pre-seeded");
            counts.predicted += 1;
            self.report.micro.predicted += 1;
            if gold_keys.contains(&key(span)) {
                counts.matched += 1;
                self.report.micro.matched += 1;
            }
        }
        for span in gold {
            let counts = self
                .report
                .per_class
                .get_mut(&span.label)
                .expect("all labels pre-seeded");
            counts.gold += 1;
            self.report.micro.gold += 1;
        }
        Ok(())
    }

    pub fn finish(self) -> EvalReport {
        self.report
    }
}

fn check_no_overlap(spans: &[ConceptSpan]) -> Result<(), CorpusError> {
    let mut sorted: Vec<&ConceptSpan> = spans.iter().collect();
    sorted.sort_by_key(|s| (s.line_index, s.start_token, s.end_token));
    for pair in sorted.windows(2) {
        if pair[0].overlaps(pair[1]) {
            return Err(CorpusError::OverlappingSpans {
                line: pair[0].line_index,
                a: pair[0].to_string(),
                b: pair[1].to_string(),
            });
        }
    }
    Ok(())
}

/// Scores a single document's predictions against its gold spans.
pub fn evaluate(
    gold: &[ConceptSpan],
    predicted: &[ConceptSpan],
) -> Result<EvalReport, CorpusError> {
    let mut acc = EvalAccumulator::new();
    acc.add_document(gold, predicted)?;
    Ok(acc.finish())
}

/// Fixed-width table of per-class and micro scores, three decimals per
/// cell. Classes with no gold or predicted spans are omitted; the micro
/// row always appears.
pub fn format_report(report: &EvalReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{:<12}  {:>5}  {:>5}  {:>5}", "class", "p", "r", "f1");
    for (label, counts) in &report.per_class {
        if counts.gold + counts.predicted == 0 {
            continue;
        }
        let _ = writeln!(
            out,
            "{:<12}  {:>5.3}  {:>5.3}  {:>5.3}",
            label.as_str(),
            counts.precision(),
            counts.recall(),
            counts.f1()
        );
    }
    let _ = writeln!(
        out,
        "{:<12}  {:>5.3}  {:>5.3}  {:>5.3}",
        "micro",
        report.micro.precision(),
        report.micro.recall(),
        report.micro.f1()
    );
    out
}

/// Machine-readable `key = value` lines for every metric, six decimals,
/// in deterministic key order.
pub fn format_report_kv(report: &EvalReport) -> String {
    let mut out = String::new();
    for (label, counts) in &report.per_class {
        let name = label.as_str();
        let _ = writeln!(out, "{name}.precision = {:.6}", counts.precision());
        let _ = writeln!(out, "{name}.recall = {:.6}", counts.recall());
        let _ = writeln!(out, "{name}.f1 = {:.6}", counts.f1());
    }
    let _ = writeln!(out, "micro.precision = {:.6}", report.micro.precision());
    let _ = writeln!(out, "micro.recall = {:.6}", report.micro.recall());
    let _ = writeln!(out, "micro.f1 = {:.6}", report.micro.f1());
    let _ = writeln!(out, "micro.gold_spans = {}", report.micro.gold);
    let _ = writeln!(out, "micro.predicted_spans = {}", report.micro.predicted);
    out
}
