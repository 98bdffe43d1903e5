//! Whitespace tokenizer with peripheral punctuation splitting.

use super::Token;

/// Splits a line into tokens.
///
/// Rule: split on whitespace, then peel leading and trailing punctuation
/// characters off each chunk as single-character tokens. Internal
/// punctuation stays attached, so decimals (`98.6`), fractions (`120/80`)
/// and hyphenations (`x-ray`) survive as one token. A chunk with no
/// alphanumeric character at all becomes one token per character.
///
/// Character offsets are 0-based positions into the raw line, counted in
/// Unicode scalar values. Line and token indices are filled with
/// placeholder values (line 1, running token index); callers tokenizing a
/// whole document overwrite them.
pub fn tokenize(raw_line: &str) -> Vec<Token> {
    debug_assert!(!raw_line.contains('\n'));
    let chars: Vec<char> = raw_line.chars().collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        if chars[i].is_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        while i < chars.len() && !chars[i].is_whitespace() {
            i += 1;
        }
        split_chunk(&chars, start, i, &mut tokens);
    }
    for (index, tok) in tokens.iter_mut().enumerate() {
        tok.token_index = index;
    }
    tokens
}

fn split_chunk(chars: &[char], start: usize, end: usize, out: &mut Vec<Token>) {
    let core_start = (start..end).find(|&i| chars[i].is_alphanumeric());
    let core_end = (start..end).rev().find(|&i| chars[i].is_alphanumeric());
    match (core_start, core_end) {
        (Some(cs), Some(ce)) => {
            for i in start..cs {
                out.push(single_char_token(chars[i], i));
            }
            out.push(Token {
                text: chars[cs..=ce].iter().collect(),
                line_index: 1,
                token_index: 0,
                char_start: cs,
                char_end: ce + 1,
            });
            for i in ce + 1..end {
                out.push(single_char_token(chars[i], i));
            }
        }
        _ => {
            // all punctuation
            for i in start..end {
                out.push(single_char_token(chars[i], i));
            }
        }
    }
}

fn single_char_token(c: char, at: usize) -> Token {
    Token {
        text: c.to_string(),
        line_index: 1,
        token_index: 0,
        char_start: at,
        char_end: at + 1,
    }
}
