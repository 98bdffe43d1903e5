//! Converting between concept spans and IOB tag sequences.

use super::{ConceptSpan, CorpusError, Sentence, Tag, TagSequence};

/// Encodes spans as IOB tags over one sentence: the first token of a span
/// gets `B-label`, the rest `I-label`, everything else `O`.
///
/// Spans must lie on the sentence's line, fit within its token count, and
/// not overlap.
pub fn spans_to_iob(sentence: &Sentence, spans: &[ConceptSpan]) -> Result<TagSequence, CorpusError> {
    let n = sentence.len();
    let mut tags = vec![Tag::Outside; n];
    let mut sorted: Vec<&ConceptSpan> = spans.iter().collect();
    sorted.sort_by_key(|s| s.position());

    for pair in sorted.windows(2) {
        if pair[0].overlaps(pair[1]) {
            return Err(CorpusError::OverlappingSpans {
                line: pair[0].line_index,
                a: pair[0].to_string(),
                b: pair[1].to_string(),
            });
        }
    }

    for span in sorted {
        if span.line_index != sentence.line_index {
            return Err(CorpusError::LineMismatch {
                span_line: span.line_index,
                sentence_line: sentence.line_index,
            });
        }
        if span.end_token >= n {
            return Err(CorpusError::SpanOutOfBounds {
                span: span.to_string(),
                line: sentence.line_index,
                len: n,
            });
        }
        tags[span.start_token] = Tag::Begin(span.label);
        for t in span.start_token + 1..=span.end_token {
            tags[t] = Tag::Inside(span.label);
        }
    }
    Ok(tags)
}

/// Decodes an IOB tag sequence back to spans. Total over the 7-label
/// alphabet: an `I-X` with no preceding `B-X`/`I-X` of the same type is
/// repaired as if it were `B-X` (the usual CoNLL convention). Span surface
/// text is the covered token texts joined with single spaces.
pub fn iob_to_spans(tags: &[Tag], sentence: &Sentence) -> Result<Vec<ConceptSpan>, CorpusError> {
    if tags.len() != sentence.len() {
        return Err(CorpusError::LengthMismatch {
            tags: tags.len(),
            tokens: sentence.len(),
        });
    }
    let mut spans = Vec::new();
    let mut open: Option<(usize, super::ConceptLabel)> = None;

    for (t, tag) in tags.iter().enumerate() {
        let starts_new = match tag {
            Tag::Outside => false,
            Tag::Begin(_) => true,
            Tag::Inside(label) => match open {
                Some((_, open_label)) => open_label != *label,
                None => true, // orphan I-X, repaired as B-X
            },
        };
        if starts_new || tag.label().is_none() {
            if let Some((start, label)) = open.take() {
                spans.push(make_span(sentence, label, start, t - 1));
            }
        }
        if starts_new {
            open = Some((t, tag.label().expect("B/I tags carry a label")));
        }
    }
    if let Some((start, label)) = open {
        spans.push(make_span(sentence, label, start, tags.len() - 1));
    }
    Ok(spans)
}

fn make_span(
    sentence: &Sentence,
    label: super::ConceptLabel,
    start: usize,
    end: usize,
) -> ConceptSpan {
    let text = sentence.tokens[start..=end]
        .iter()
        .map(|t| t.text.as_str())
        .collect::<Vec<_>>()
        .join(" ");
    ConceptSpan::new(label, sentence.line_index, start, end, text)
}
