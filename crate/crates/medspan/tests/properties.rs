//! Randomized laws of the core data paths: tag/span conversions, the
//! concept-file format, the tokenizer, chain inference, scoring, feature
//! extraction, and the neural encoder's public surface.

use std::collections::BTreeSet;

use proptest::prelude::*;

use medspan::corpus::{
    iob_to_spans, load_document, parse_concept_file, spans_to_iob, tokenize, write_concept_file,
    ConceptLabel, ConceptSpan, Sentence, Tag, Token, NUM_TAGS,
};
use medspan::crf::{
    forward_log_partition, posterior_marginals, score_sequence, viterbi_decode, Lattice,
    TransitionMatrix,
};
use medspan::eval::evaluate;
use medspan::features::{extract_features, word_shape, FallbackPosTagger, Lexicon};
use medspan::neural::{EncoderDims, LstmCrfModel, NeuralParams};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

const WORDS: [&str; 12] = [
    "fever", "cough", "ekg", "aspirin", "stable", "pain", "labs", "bp", "renal", "insulin",
    "x-ray", "102.4",
];

fn build_sentence(line_index: usize, word_idxs: &[usize]) -> Sentence {
    let mut tokens = Vec::with_capacity(word_idxs.len());
    let mut cursor = 0;
    for (i, &w) in word_idxs.iter().enumerate() {
        let text = WORDS[w % WORDS.len()];
        tokens.push(Token {
            text: text.to_string(),
            line_index,
            token_index: i,
            char_start: cursor,
            char_end: cursor + text.len(),
        });
        cursor += text.len() + 1;
    }
    Sentence { tokens, line_index }
}

/// Walks a sentence left to right, opening a non-overlapping span whenever
/// the plan says so. Surface text is the covered tokens joined by spaces,
/// matching what span decoding produces.
fn spans_from_plan(sentence: &Sentence, plan: &[(bool, usize, usize)]) -> Vec<ConceptSpan> {
    let mut spans = Vec::new();
    let mut t = 0;
    let mut k = 0;
    while t < sentence.len() {
        let (take, span_len, label_idx) = plan[k % plan.len()];
        k += 1;
        if take {
            let len = span_len.clamp(1, sentence.len() - t).min(3);
            let label = ConceptLabel::ALL[label_idx % 3];
            let text = sentence.tokens[t..t + len]
                .iter()
                .map(|tok| tok.text.as_str())
                .collect::<Vec<_>>()
                .join(" ");
            spans.push(ConceptSpan::new(label, sentence.line_index, t, t + len - 1, text));
            t += len;
        } else {
            t += 1;
        }
    }
    spans
}

fn plan_strategy() -> impl Strategy<Value = Vec<(bool, usize, usize)>> {
    proptest::collection::vec((any::<bool>(), 1usize..=3, 0usize..3), 12)
}

fn sentence_strategy() -> impl Strategy<Value = Sentence> {
    (1usize..=8, proptest::collection::vec(0usize..WORDS.len(), 1..=10))
        .prop_map(|(line, idxs)| build_sentence(line, &idxs))
}

fn sentence_and_spans() -> impl Strategy<Value = (Sentence, Vec<ConceptSpan>)> {
    (sentence_strategy(), plan_strategy()).prop_map(|(sentence, plan)| {
        let spans = spans_from_plan(&sentence, &plan);
        (sentence, spans)
    })
}

/// Several sentences on distinct lines with their spans pooled, as a whole
/// annotated document would carry them.
fn document_spans() -> impl Strategy<Value = Vec<ConceptSpan>> {
    proptest::collection::vec(
        (proptest::collection::vec(0usize..WORDS.len(), 1..=10), plan_strategy()),
        1..=5,
    )
    .prop_map(|lines| {
        let mut spans = Vec::new();
        for (i, (idxs, plan)) in lines.iter().enumerate() {
            let sentence = build_sentence(i + 1, idxs);
            spans.extend(spans_from_plan(&sentence, plan));
        }
        spans
    })
}

proptest! {
    #[test]
    fn iob_encoding_round_trips_spans((sentence, spans) in sentence_and_spans()) {
        let tags = spans_to_iob(&sentence, &spans).unwrap();
        prop_assert_eq!(tags.len(), sentence.len());
        let decoded = iob_to_spans(&tags, &sentence).unwrap();
        prop_assert_eq!(decoded, spans);
    }

    #[test]
    fn concept_files_round_trip(spans in document_spans()) {
        let text = write_concept_file(&spans);
        let parsed = parse_concept_file(&text).unwrap();
        prop_assert_eq!(write_concept_file(&parsed).into_bytes(), text.into_bytes());
        let mut expected = spans;
        expected.sort_by_key(|s| s.position());
        prop_assert_eq!(parsed, expected);
    }

    #[test]
    fn any_tag_sequence_decodes_to_valid_spans(
        line in 1usize..=8,
        cells in proptest::collection::vec((0usize..WORDS.len(), 0usize..NUM_TAGS), 1..=10),
    ) {
        let idxs: Vec<usize> = cells.iter().map(|c| c.0).collect();
        let sentence = build_sentence(line, &idxs);
        let tags: Vec<Tag> = cells
            .iter()
            .map(|c| Tag::from_index(c.1).unwrap())
            .collect();

        let spans = iob_to_spans(&tags, &sentence).unwrap();
        for pair in spans.windows(2) {
            prop_assert!(!pair[0].overlaps(&pair[1]));
            prop_assert!(pair[0].position() < pair[1].position());
        }
        let mut covered = BTreeSet::new();
        for span in &spans {
            prop_assert_eq!(span.line_index, sentence.line_index);
            prop_assert!(span.start_token <= span.end_token);
            prop_assert!(span.end_token < sentence.len());
            covered.extend(span.start_token..=span.end_token);
        }
        let tagged: BTreeSet<usize> = (0..tags.len())
            .filter(|&t| tags[t] != Tag::Outside)
            .collect();
        prop_assert_eq!(covered, tagged);

        // Decoding is a projection: re-encoding the decoded spans and
        // decoding again is a fixed point.
        let reencoded = spans_to_iob(&sentence, &spans).unwrap();
        prop_assert_eq!(iob_to_spans(&reencoded, &sentence).unwrap(), spans);
    }

    #[test]
    fn tokenization_is_idempotent(line in r"[ a-zA-Z0-9.,;:()/%+-]{0,40}") {
        let first: Vec<String> = tokenize(&line).into_iter().map(|t| t.text).collect();
        let rejoined = first.join(" ");
        let second: Vec<String> = tokenize(&rejoined).into_iter().map(|t| t.text).collect();
        prop_assert_eq!(first, second);
    }

    #[test]
    fn documents_index_sentences_by_line(text in r"[ a-zA-Z0-9.,;:()/%+-]{0,30}(\n[ a-zA-Z0-9.,;:()/%+-]{0,30}){0,6}") {
        let doc = load_document(&text, "prop");
        let mut last_line = 0;
        for sentence in &doc.sentences {
            prop_assert!(!sentence.is_empty());
            prop_assert!(sentence.line_index > last_line);
            last_line = sentence.line_index;
            prop_assert_eq!(doc.sentence_at_line(sentence.line_index), Some(sentence));
            for (i, tok) in sentence.tokens.iter().enumerate() {
                prop_assert_eq!(tok.line_index, sentence.line_index);
                prop_assert_eq!(tok.token_index, i);
            }
        }
    }
}

fn lattice_strategy() -> impl Strategy<Value = (Lattice, TransitionMatrix)> {
    (
        proptest::collection::vec(
            proptest::collection::vec(-3.0f64..3.0, NUM_TAGS),
            1..=6,
        ),
        proptest::collection::vec(-2.0f64..2.0, (NUM_TAGS + 2) * (NUM_TAGS + 2)),
    )
        .prop_map(|(rows, flat)| {
            let emissions = rows
                .into_iter()
                .map(|row| {
                    let mut cells = [0.0; NUM_TAGS];
                    cells.copy_from_slice(&row);
                    cells
                })
                .collect();
            let mut transitions = TransitionMatrix::zeros();
            for from in 0..NUM_TAGS + 2 {
                for to in 0..NUM_TAGS + 2 {
                    transitions.set(from, to, flat[from * (NUM_TAGS + 2) + to]);
                }
            }
            (Lattice::new(emissions), transitions)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn node_marginals_are_distributions_consistent_with_edges(
        (lattice, transitions) in lattice_strategy(),
    ) {
        let (nodes, edges) = posterior_marginals(&lattice, &transitions);
        let len = lattice.len();
        prop_assert_eq!(nodes.len(), len);
        prop_assert_eq!(edges.len(), len.saturating_sub(1));

        for row in &nodes {
            for &p in row {
                prop_assert!((-1e-12..=1.0 + 1e-12).contains(&p));
            }
            let total: f64 = row.iter().sum();
            prop_assert!((total - 1.0).abs() < 1e-9, "node row sums to {total}");
        }
        for block in &edges {
            let total: f64 = block.iter().flatten().sum();
            prop_assert!((total - 1.0).abs() < 1e-9, "edge block sums to {total}");
        }
        // A node agrees with both adjacent edge blocks: summing the
        // outgoing rows or the incoming columns reproduces it.
        for t in 0..len.saturating_sub(1) {
            for i in 0..NUM_TAGS {
                let row_sum: f64 = edges[t][i].iter().sum();
                prop_assert!((nodes[t][i] - row_sum).abs() < 1e-9);
                let col_sum: f64 = edges[t].iter().map(|row| row[i]).sum();
                prop_assert!((nodes[t + 1][i] - col_sum).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn viterbi_dominates_sampled_paths(
        (lattice, transitions) in lattice_strategy(),
        raw_paths in proptest::collection::vec(
            proptest::collection::vec(0usize..NUM_TAGS, 6),
            5,
        ),
    ) {
        let best = viterbi_decode(&lattice, &transitions);
        prop_assert_eq!(best.len(), lattice.len());
        let best_score = score_sequence(&lattice, &transitions, &best).unwrap();
        let log_z = forward_log_partition(&lattice, &transitions);
        prop_assert!(best_score <= log_z + 1e-9, "max path cannot beat the partition");
        for raw in raw_paths {
            let path: Vec<Tag> = raw[..lattice.len()]
                .iter()
                .map(|&i| Tag::from_index(i).unwrap())
                .collect();
            let score = score_sequence(&lattice, &transitions, &path).unwrap();
            prop_assert!(score <= best_score + 1e-12);
        }
    }

    #[test]
    fn emission_shift_moves_log_partition_and_nothing_else(
        (lattice, transitions) in lattice_strategy(),
        shift in -4.0f64..4.0,
        raw_pos in any::<usize>(),
    ) {
        let t = raw_pos % lattice.len();
        let shifted_rows: Vec<[f64; NUM_TAGS]> = lattice
            .rows()
            .iter()
            .enumerate()
            .map(|(pos, row)| {
                let mut out = *row;
                if pos == t {
                    for cell in &mut out {
                        *cell += shift;
                    }
                }
                out
            })
            .collect();
        let shifted = Lattice::new(shifted_rows);

        // Every path gains exactly `shift`, so the partition does too,
        // the argmax is untouched, and the posteriors cancel it out.
        let log_z = forward_log_partition(&lattice, &transitions);
        let log_z_shifted = forward_log_partition(&shifted, &transitions);
        prop_assert!((log_z_shifted - (log_z + shift)).abs() < 1e-9);

        prop_assert_eq!(
            viterbi_decode(&lattice, &transitions),
            viterbi_decode(&shifted, &transitions)
        );

        let (nodes, _) = posterior_marginals(&lattice, &transitions);
        let (nodes_shifted, _) = posterior_marginals(&shifted, &transitions);
        for (a, b) in nodes.iter().zip(&nodes_shifted) {
            for (x, y) in a.iter().zip(b) {
                prop_assert!((x - y).abs() < 1e-9);
            }
        }
    }
}

fn brute_force_matched(gold: &[ConceptSpan], predicted: &[ConceptSpan]) -> usize {
    let mut used = vec![false; predicted.len()];
    let mut matched = 0;
    for g in gold {
        for (i, p) in predicted.iter().enumerate() {
            if !used[i] && p.label == g.label && p.position() == g.position() {
                used[i] = true;
                matched += 1;
                break;
            }
        }
    }
    matched
}

proptest! {
    #[test]
    fn scoring_a_span_set_against_itself_is_perfect(spans in document_spans()) {
        let report = evaluate(&spans, &spans).unwrap();
        prop_assert_eq!(report.micro.matched, spans.len());
        prop_assert_eq!(report.micro.gold, spans.len());
        prop_assert_eq!(report.micro.predicted, spans.len());
        if !spans.is_empty() {
            prop_assert_eq!(report.micro.precision(), 1.0);
            prop_assert_eq!(report.micro.recall(), 1.0);
            prop_assert_eq!(report.micro.f1(), 1.0);
        }
    }

    #[test]
    fn dropping_a_correct_prediction_lowers_recall_only(
        spans in document_spans().prop_filter("needs a span", |s| !s.is_empty()),
        pick in any::<usize>(),
    ) {
        let mut predicted = spans.clone();
        predicted.remove(pick % spans.len());
        let report = evaluate(&spans, &predicted).unwrap();
        prop_assert_eq!(report.micro.matched, spans.len() - 1);
        prop_assert!(report.micro.recall() < 1.0);
        if !predicted.is_empty() {
            prop_assert_eq!(report.micro.precision(), 1.0);
        }
    }

    #[test]
    fn micro_counts_agree_with_pairwise_matching(
        gold in document_spans(),
        predicted in document_spans(),
    ) {
        let report = evaluate(&gold, &predicted).unwrap();
        prop_assert_eq!(report.micro.matched, brute_force_matched(&gold, &predicted));
        prop_assert_eq!(report.micro.gold, gold.len());
        prop_assert_eq!(report.micro.predicted, predicted.len());

        let class_matched: usize = report.per_class.values().map(|c| c.matched).sum();
        let class_gold: usize = report.per_class.values().map(|c| c.gold).sum();
        let class_predicted: usize = report.per_class.values().map(|c| c.predicted).sum();
        prop_assert_eq!(class_matched, report.micro.matched);
        prop_assert_eq!(class_gold, report.micro.gold);
        prop_assert_eq!(class_predicted, report.micro.predicted);
    }
}

fn sample_lexicon() -> Lexicon {
    Lexicon::parse(
        "fever\tcui=C0015967;lui=L0015967;rel=;sty=sign-symptom;tty=;abr=\n\
         aspirin\tcui=C0004057;lui=L0004057;rel=;sty=pharmacologic;tty=;abr=asa\n\
         ekg\tcui=C1623258;lui=L1623258;rel=;sty=diagnostic-procedure;tty=;abr=\n",
    )
    .unwrap()
}

/// A token's own (context-free) features: everything not copied from a
/// neighbor and not a positional word indicator.
fn word_level_set(fv: &medspan::features::FeatureVector) -> BTreeSet<(String, String)> {
    fv.iter()
        .filter(|f| !f.namespace.starts_with("prev") && !f.namespace.starts_with("next"))
        .map(|f| (f.namespace.clone(), f.value.clone()))
        .collect()
}

fn stripped_context(
    fv: &medspan::features::FeatureVector,
    prefix: &str,
) -> BTreeSet<(String, String)> {
    fv.iter()
        .filter_map(|f| {
            f.namespace
                .strip_prefix(prefix)
                .map(|ns| (ns.to_string(), f.value.clone()))
        })
        .collect()
}

proptest! {
    #[test]
    fn neighbor_context_features_mirror_the_neighbor(sentence in sentence_strategy()) {
        let lexicon = sample_lexicon();
        let fvs = extract_features(&sentence, &lexicon, &FallbackPosTagger);
        prop_assert_eq!(fvs.len(), sentence.len());
        for i in 0..fvs.len() {
            if i > 0 {
                prop_assert_eq!(
                    stripped_context(&fvs[i], "prev1:"),
                    word_level_set(&fvs[i - 1])
                );
            }
            if i + 1 < fvs.len() {
                prop_assert_eq!(
                    stripped_context(&fvs[i], "next1:"),
                    word_level_set(&fvs[i + 1])
                );
            }
        }
    }

    #[test]
    fn feature_counts_stay_bounded_and_deterministic(sentence in sentence_strategy()) {
        let lexicon = sample_lexicon();
        let fvs = extract_features(&sentence, &lexicon, &FallbackPosTagger);
        for fv in &fvs {
            prop_assert!(!fv.is_empty());
            prop_assert!(fv.len() <= 80, "token carries {} features", fv.len());
        }
        let again = extract_features(&sentence, &lexicon, &FallbackPosTagger);
        prop_assert_eq!(fvs, again);
    }

    #[test]
    fn features_depend_only_on_a_local_window(
        core in proptest::collection::vec(0usize..WORDS.len(), 7),
        wrap_a in (proptest::collection::vec(0usize..WORDS.len(), 0..=4),
                   proptest::collection::vec(0usize..WORDS.len(), 0..=4)),
        wrap_b in (proptest::collection::vec(0usize..WORDS.len(), 0..=4),
                   proptest::collection::vec(0usize..WORDS.len(), 0..=4)),
    ) {
        let lexicon = sample_lexicon();
        let build = |prefix: &[usize], suffix: &[usize], line: usize| {
            let mut idxs = prefix.to_vec();
            idxs.extend_from_slice(&core);
            idxs.extend_from_slice(suffix);
            build_sentence(line, &idxs)
        };
        let sent_a = build(&wrap_a.0, &wrap_a.1, 1);
        let sent_b = build(&wrap_b.0, &wrap_b.1, 5);
        let fvs_a = extract_features(&sent_a, &lexicon, &FallbackPosTagger);
        let fvs_b = extract_features(&sent_b, &lexicon, &FallbackPosTagger);
        // The center of the shared 7-token core sees the same 3-token
        // neighborhood on both sides in either sentence.
        prop_assert_eq!(&fvs_a[wrap_a.0.len() + 3], &fvs_b[wrap_b.0.len() + 3]);
    }

    #[test]
    fn compressed_shapes_never_repeat_adjacent_characters(text in ".{0,12}") {
        let (full, compressed) = word_shape(&text);
        prop_assert_eq!(full.chars().count(), text.chars().count());
        let chars: Vec<char> = compressed.chars().collect();
        for pair in chars.windows(2) {
            prop_assert_ne!(pair[0], pair[1], "compressed shape {:?}", compressed);
        }
        // Compression only drops repeats: decompressing cannot be checked
        // directly, but the compressed string must be a subsequence.
        let mut rest = full.chars().peekable();
        for c in &chars {
            loop {
                match rest.next() {
                    Some(f) if f == *c => break,
                    Some(_) => continue,
                    None => prop_assert!(false, "{compressed:?} not a subsequence of {full:?}"),
                }
            }
        }
    }
}

fn tiny_neural_model(dims: EncoderDims, seed: u64) -> LstmCrfModel {
    let mut word_vocab = std::collections::BTreeMap::new();
    for (i, w) in WORDS.iter().enumerate() {
        word_vocab.insert(w.to_lowercase(), i + 1);
    }
    let mut char_vocab = std::collections::BTreeMap::new();
    let mut next = 1;
    for w in WORDS {
        for c in w.chars() {
            char_vocab.entry(c).or_insert_with(|| {
                let id = next;
                next += 1;
                id
            });
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let params = NeuralParams::init(&dims, char_vocab.len() + 1, word_vocab.len() + 1, &mut rng);
    LstmCrfModel {
        dims,
        word_vocab,
        char_vocab,
        params,
    }
}

fn dims_strategy() -> impl Strategy<Value = EncoderDims> {
    (1usize..=3, 1usize..=3, 1usize..=4, 1usize..=4).prop_map(
        |(char_dim, char_hidden, word_dim, word_hidden)| EncoderDims {
            char_dim,
            char_hidden,
            word_dim,
            word_hidden,
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn encoder_emits_one_finite_row_per_token(
        dims in dims_strategy(),
        seed in any::<u64>(),
        idxs in proptest::collection::vec(0usize..WORDS.len(), 1..=5),
    ) {
        let model = tiny_neural_model(dims, seed);
        let tokens: Vec<String> = idxs.iter().map(|&i| WORDS[i].to_string()).collect();
        let lattice = model.lattice(&tokens);
        prop_assert_eq!(lattice.len(), tokens.len());
        for row in lattice.rows() {
            prop_assert!(row.iter().all(|v| v.is_finite()));
        }
        prop_assert_eq!(model.decode_tokens(&tokens).len(), tokens.len());
        // Inference is a pure function of the spelling sequence.
        let again = model.lattice(&tokens);
        prop_assert_eq!(lattice.rows(), again.rows());
    }

    #[test]
    fn char_representations_have_fixed_width_and_blind_unknowns(
        dims in dims_strategy(),
        seed in any::<u64>(),
        word_idx in 0usize..WORDS.len(),
        unknown_len in 1usize..=6,
    ) {
        let model = tiny_neural_model(dims, seed);
        let repr = model.char_representation(WORDS[word_idx]);
        prop_assert_eq!(repr.len(), 2 * model.dims.char_hidden);
        prop_assert!(repr.iter().all(|v| v.is_finite()));

        // Characters outside the vocabulary all share the reserved row,
        // so equal-length unknown spellings are indistinguishable.
        let a: String = std::iter::repeat('@').take(unknown_len).collect();
        let b: String = std::iter::repeat('#').take(unknown_len).collect();
        prop_assert!(!model.char_vocab.contains_key(&'@'));
        prop_assert!(!model.char_vocab.contains_key(&'#'));
        prop_assert_eq!(model.char_representation(&a), model.char_representation(&b));
    }
}
