//! Pre-trained word vectors in the plain text format: one word per
//! line followed by its values, whitespace separated. Keys are
//! lowercased on load and the first occurrence of a word wins.

use std::collections::BTreeMap;
use std::path::Path;

use super::NeuralError;

#[derive(Debug, Clone, PartialEq)]
pub struct WordEmbeddings {
    dim: usize,
    vectors: BTreeMap<String, Vec<f64>>,
}

impl WordEmbeddings {
    /// Parses embedding text. The first line fixes the dimension; any
    /// later line with a different width is an error naming its
    /// 1-based line number.
    pub fn parse(text: &str) -> Result<WordEmbeddings, NeuralError> {
        let mut dim = None;
        let mut vectors = BTreeMap::new();
        for (idx, line) in text.lines().enumerate() {
            let line_no = idx + 1;
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let word = parts
                .next()
                .expect("non-blank line has at least one field")
                .to_lowercase();
            let values: Vec<f64> = parts
                .map(|field| {
                    field.parse::<f64>().map_err(|_| NeuralError::EmbeddingParse {
                        line: line_no,
                        msg: format!("cannot parse '{field}' as a number"),
                    })
                })
                .collect::<Result<_, _>>()?;
            if values.is_empty() {
                return Err(NeuralError::EmbeddingParse {
                    line: line_no,
                    msg: "line has a word but no vector values".into(),
                });
            }
            match dim {
                None => dim = Some(values.len()),
                Some(d) if d != values.len() => {
                    return Err(NeuralError::EmbeddingParse {
                        line: line_no,
                        msg: format!("expected {d} values, found {}", values.len()),
                    });
                }
                Some(_) => {}
            }
            vectors.entry(word).or_insert(values);
        }
        let dim = dim.ok_or(NeuralError::EmbeddingParse {
            line: 0,
            msg: "file contains no vectors".into(),
        })?;
        Ok(WordEmbeddings { dim, vectors })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Case-insensitive lookup.
    pub fn get(&self, word: &str) -> Option<&[f64]> {
        self.vectors.get(&word.to_lowercase()).map(Vec::as_slice)
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.vectors.keys().map(String::as_str)
    }
}

/// Reads an embedding table from disk.
pub fn load_word_embeddings(path: &Path) -> Result<WordEmbeddings, NeuralError> {
    let text = std::fs::read_to_string(path)?;
    WordEmbeddings::parse(&text)
}
