//! The `.con` annotation format.
//!
//! One record per line:
//!
//! ```text
//! c="chest pain" 4:2 4:3||t="problem"
//! ```
//!
//! Lines are 1-based, token offsets 0-based inclusive. Concept text is
//! stored lowercased on write.

use super::{ConceptLabel, ConceptSpan, CorpusError};

/// Parses a `.con` file body. Blank lines are skipped.
pub fn parse_concept_file(con_text: &str) -> Result<Vec<ConceptSpan>, CorpusError> {
    let mut spans = Vec::new();
    for (i, raw) in con_text.lines().enumerate() {
        let line_no = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        spans.push(parse_record(raw, line_no)?);
    }
    Ok(spans)
}

fn parse_record(raw: &str, line_no: usize) -> Result<ConceptSpan, CorpusError> {
    let err = |msg: &str| CorpusError::ConParse {
        line: line_no,
        msg: msg.to_string(),
    };

    let (lhs, rhs) = raw
        .rsplit_once("||t=\"")
        .ok_or_else(|| err("missing `||t=\"` separator"))?;
    let type_name = rhs
        .strip_suffix('"')
        .ok_or_else(|| err("type field not closed with `\"`"))?;
    let label = ConceptLabel::from_str(type_name)
        .ok_or_else(|| err(&format!("unknown concept type `{type_name}`")))?;

    let body = lhs
        .strip_prefix("c=\"")
        .ok_or_else(|| err("record must start with `c=\"`"))?;
    // The concept text ends at the last `" ` before the offsets, which
    // tolerates embedded quotes in the surface form.
    let (text, offsets) = body
        .rsplit_once("\" ")
        .ok_or_else(|| err("text field not closed with `\" `"))?;

    let mut parts = offsets.split_whitespace();
    let start = parts.next().ok_or_else(|| err("missing start offset"))?;
    let end = parts.next().ok_or_else(|| err("missing end offset"))?;
    if parts.next().is_some() {
        return Err(err("trailing content after offsets"));
    }
    let (start_line, start_token) = parse_offset(start, line_no)?;
    let (end_line, end_token) = parse_offset(end, line_no)?;

    if start_line != end_line {
        return Err(err(&format!(
            "span crosses lines ({start_line} to {end_line})"
        )));
    }
    if start_line == 0 {
        return Err(err("line numbers are 1-based; got 0"));
    }
    if start_token > end_token {
        return Err(err(&format!(
            "start token {start_token} is after end token {end_token}"
        )));
    }

    Ok(ConceptSpan {
        label,
        line_index: start_line,
        start_token,
        end_token,
        text: text.to_string(),
    })
}

fn parse_offset(s: &str, line_no: usize) -> Result<(usize, usize), CorpusError> {
    let err = |msg: String| CorpusError::ConParse {
        line: line_no,
        msg,
    };
    let (line, token) = s
        .split_once(':')
        .ok_or_else(|| err(format!("offset `{s}` is not of the form line:token")))?;
    let line = line
        .parse::<usize>()
        .map_err(|_| err(format!("bad line number `{line}`")))?;
    let token = token
        .parse::<usize>()
        .map_err(|_| err(format!("bad token index `{token}`")))?;
    Ok((line, token))
}

/// Serializes spans to `.con` format: sorted by `(line, start)`, concept
/// text lowercased, LF line endings. The output parses back to the same
/// spans via [`parse_concept_file`].
pub fn write_concept_file(spans: &[ConceptSpan]) -> String {
    let mut sorted: Vec<&ConceptSpan> = spans.iter().collect();
    sorted.sort_by_key(|s| s.position());
    let mut out = String::new();
    for span in sorted {
        out.push_str(&format!(
            "c=\"{}\" {}:{} {}:{}||t=\"{}\"\n",
            span.text.to_lowercase(),
            span.line_index,
            span.start_token,
            span.line_index,
            span.end_token,
            span.label
        ));
    }
    out
}
