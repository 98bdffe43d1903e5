//! Seeded synthetic note generator.
//!
//! Builds notes from carrier templates with labeled phrase slots, so that
//! training and evaluation can run with no external data. Output is fully
//! determined by the seed.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{ConceptLabel, ConceptSpan, CorpusError, Document, Sentence, Token};

/// One piece of a carrier template: literal words or a labeled slot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TemplatePart {
    Words(String),
    Slot(ConceptLabel),
}

/// Phrase pools plus carrier templates.
///
/// Templates are written as plain strings with `{problem}`, `{test}` and
/// `{treatment}` slot markers; phrase pool entries are space-separated
/// token sequences. All words must survive [`super::tokenize`] unchanged
/// (no leading or trailing punctuation glued to a word).
#[derive(Debug, Clone)]
pub struct SyntheticGrammar {
    pub problems: Vec<String>,
    pub tests: Vec<String>,
    pub treatments: Vec<String>,
    pub templates: Vec<Vec<TemplatePart>>,
    /// Inclusive range of sentences per document.
    pub sentences_per_doc: (usize, usize),
    /// Probability of inserting a blank line between sentences.
    pub blank_line_prob: f64,
}

impl SyntheticGrammar {
    /// Parses `{label}` markers out of a template string.
    pub fn parse_template(template: &str) -> Vec<TemplatePart> {
        let mut parts = Vec::new();
        let mut rest = template;
        while let Some(open) = rest.find('{') {
            let (lit, tail) = rest.split_at(open);
            if !lit.trim().is_empty() {
                parts.push(TemplatePart::Words(lit.trim().to_string()));
            }
            let close = tail.find('}').expect("unclosed slot marker in template");
            let name = &tail[1..close];
            let label = ConceptLabel::from_str(name)
                .unwrap_or_else(|| panic!("unknown slot label `{name}` in template"));
            parts.push(TemplatePart::Slot(label));
            rest = &tail[close + 1..];
        }
        if !rest.trim().is_empty() {
            parts.push(TemplatePart::Words(rest.trim().to_string()));
        }
        parts
    }

    fn pool(&self, label: ConceptLabel) -> &[String] {
        match label {
            ConceptLabel::Problem => &self.problems,
            ConceptLabel::Test => &self.tests,
            ConceptLabel::Treatment => &self.treatments,
        }
    }

    fn validate(&self) -> Result<(), CorpusError> {
        for label in ConceptLabel::ALL {
            if self.pool(label).is_empty() {
                return Err(CorpusError::Grammar(format!(
                    "empty phrase pool for `{label}`"
                )));
            }
        }
        if self.templates.is_empty() {
            return Err(CorpusError::Grammar("no carrier templates".to_string()));
        }
        Ok(())
    }
}

impl Default for SyntheticGrammar {
    fn default() -> Self {
        let strs = |v: &[&str]| v.iter().map(|s| s.to_string()).collect::<Vec<_>>();
        SyntheticGrammar {
            problems: strs(&[
                "chest pain",
                "shortness of breath",
                "nausea",
                "headache",
                "hypertension",
                "diabetes mellitus",
                "atrial fibrillation",
                "pneumonia",
                "anemia",
                "fever",
                "dizziness",
                "back pain",
                "fatigue",
                "copd",
                "asthma",
                "sepsis",
                "cellulitis",
                "rash",
                "constipation",
                "dyspnea",
                "leg edema",
                "dry cough",
                "vomiting",
                "abdominal pain",
                "hyperlipidemia",
                "coronary artery disease",
                "heart failure",
                "gerd",
                "depression",
                "anxiety",
                "renal failure",
                "hypothyroidism",
            ]),
            tests: strs(&[
                "ekg",
                "chest x-ray",
                "cbc",
                "bmp",
                "troponin",
                "echocardiogram",
                "ct scan",
                "mri",
                "urinalysis",
                "blood cultures",
                "lipid panel",
                "a1c",
                "tsh",
                "abg",
                "lactate",
                "colonoscopy",
                "stress test",
                "d-dimer",
                "lumbar puncture",
                "bnp",
                "inr",
                "cxr",
                "renal ultrasound",
                "skin biopsy",
                "esr",
                "glucose level",
                "creatinine",
                "potassium level",
                "wbc count",
                "crp",
                "iron studies",
                "swallow study",
            ]),
            treatments: strs(&[
                "aspirin",
                "lisinopril",
                "metoprolol",
                "insulin",
                "heparin drip",
                "warfarin",
                "albuterol",
                "prednisone",
                "iv antibiotics",
                "ibuprofen",
                "acetaminophen",
                "furosemide",
                "atorvastatin",
                "metformin",
                "oxygen therapy",
                "iv fluids",
                "physical therapy",
                "dialysis",
                "chemotherapy",
                "cabg",
                "stent placement",
                "appendectomy",
                "vancomycin",
                "ceftriaxone",
                "morphine",
                "ondansetron",
                "pantoprazole",
                "amlodipine",
                "gabapentin",
                "levothyroxine",
                "incentive spirometry",
                "wound care",
            ]),
            templates: [
                "pt presents with {problem} .",
                "pt denies {problem} or {problem} .",
                "history of {problem} and {problem} .",
                "{test} was ordered to rule out {problem} .",
                "{test} came back unremarkable .",
                "started on {treatment} for {problem} .",
                "continue {treatment} twice daily .",
                "{test} showed no acute findings .",
                "pt tolerated {treatment} well .",
                "plan : repeat {test} in the morning .",
                "discharged home on {treatment} .",
                "will hold {treatment} until {test} results return .",
                "vitals stable with bp 120/80 and temp 98.6f .",
                "{problem} improved after {treatment} .",
                "follow up {test} scheduled next week .",
            ]
            .iter()
            .map(|t| SyntheticGrammar::parse_template(t))
            .collect(),
            sentences_per_doc: (4, 8),
            blank_line_prob: 0.15,
        }
    }
}

/// Generates `n_documents` deterministic documents plus aligned gold spans.
pub fn generate_synthetic_corpus(
    seed: u64,
    n_documents: usize,
    grammar: &SyntheticGrammar,
) -> Result<(Vec<Document>, Vec<Vec<ConceptSpan>>), CorpusError> {
    if n_documents == 0 {
        return Err(CorpusError::Grammar(
            "n_documents must be positive".to_string(),
        ));
    }
    grammar.validate()?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut documents = Vec::with_capacity(n_documents);
    let mut gold = Vec::with_capacity(n_documents);

    for d in 0..n_documents {
        let doc_id = format!("synth-{:04}", d + 1);
        let (lo, hi) = grammar.sentences_per_doc;
        let n_sentences = rng.gen_range(lo..=hi.max(lo));

        let mut raw_lines = Vec::new();
        let mut sentences = Vec::new();
        let mut spans = Vec::new();

        for s in 0..n_sentences {
            if s > 0 && rng.gen_bool(grammar.blank_line_prob) {
                raw_lines.push(String::new());
            }
            let line_index = raw_lines.len() + 1;
            let template = grammar
                .templates
                .choose(&mut rng)
                .expect("templates validated non-empty");

            let mut words: Vec<String> = Vec::new();
            for part in template {
                match part {
                    TemplatePart::Words(lit) => {
                        words.extend(lit.split_whitespace().map(|w| w.to_string()));
                    }
                    TemplatePart::Slot(label) => {
                        let phrase = grammar
                            .pool(*label)
                            .choose(&mut rng)
                            .expect("pools validated non-empty");
                        let phrase_words: Vec<&str> = phrase.split_whitespace().collect();
                        let start = words.len();
                        words.extend(phrase_words.iter().map(|w| w.to_string()));
                        spans.push(ConceptSpan::new(
                            *label,
                            line_index,
                            start,
                            words.len() - 1,
                            phrase.clone(),
                        ));
                    }
                }
            }

            let line = words.join(" ");
            let sentence = build_sentence(&words, line_index);
            debug_assert_eq!(
                super::tokenize(&line).len(),
                sentence.tokens.len(),
                "grammar words must be tokenization-stable"
            );
            raw_lines.push(line);
            sentences.push(sentence);
        }

        documents.push(Document {
            doc_id,
            sentences,
            raw_lines,
        });
        gold.push(spans);
    }

    Ok((documents, gold))
}

fn build_sentence(words: &[String], line_index: usize) -> Sentence {
    let mut tokens = Vec::with_capacity(words.len());
    let mut cursor = 0;
    for (i, w) in words.iter().enumerate() {
        let len = w.chars().count();
        tokens.push(Token {
            text: w.clone(),
            line_index,
            token_index: i,
            char_start: cursor,
            char_end: cursor + len,
        });
        cursor += len + 1; // single space separator
    }
    Sentence { tokens, line_index }
}
