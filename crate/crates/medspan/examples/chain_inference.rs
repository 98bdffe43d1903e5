//! Exact inference on a tiny hand-built emission lattice: the log
//! partition function, the most likely tag path with its score, and the
//! per-position posterior marginals.
//!
//!     cargo run --example chain_inference

use medspan::corpus::{Tag, NUM_TAGS};
use medspan::crf::{
    forward_log_partition, posterior_marginals, score_sequence, viterbi_decode, Lattice,
    TransitionMatrix, START, STOP,
};

fn main() {
    // Three tokens ("fever", "was", "treated"): the first looks like a
    // problem, the last like a treatment, the middle like neither.
    let mut rows = vec![[0.0; NUM_TAGS]; 3];
    rows[0][Tag::Begin(medspan::corpus::ConceptLabel::Problem).index()] = 2.0;
    rows[2][Tag::Begin(medspan::corpus::ConceptLabel::Treatment).index()] = 1.5;
    rows[1][Tag::Outside.index()] = 1.0;
    let lattice = Lattice::new(rows);

    let mut transitions = TransitionMatrix::zeros();
    // Reward entering a span from outside and discourage label switches.
    let b_problem = Tag::Begin(medspan::corpus::ConceptLabel::Problem).index();
    let i_problem = Tag::Inside(medspan::corpus::ConceptLabel::Problem).index();
    transitions.set(Tag::Outside.index(), b_problem, 0.5);
    transitions.set(b_problem, i_problem, 0.8);
    transitions.set(START, Tag::Outside.index(), 0.2);
    transitions.set(Tag::Outside.index(), STOP, 0.2);

    let log_z = forward_log_partition(&lattice, &transitions);
    println!("log partition = {log_z:.6}");

    let path = viterbi_decode(&lattice, &transitions);
    let score = score_sequence(&lattice, &transitions, &path).expect("path scores");
    let names: Vec<&str> = path.iter().map(Tag::as_str).collect();
    println!("best path     = {} (score {score:.6})", names.join(" "));
    println!("p(best path)  = {:.6}", (score - log_z).exp());

    let (nodes, edges) = posterior_marginals(&lattice, &transitions);
    println!("\nposterior marginals (rows sum to 1):");
    print!("{:>4}", "pos");
    for tag in Tag::ALL {
        print!("  {:>12}", tag.as_str());
    }
    println!();
    for (t, row) in nodes.iter().enumerate() {
        print!("{t:>4}");
        for p in row {
            print!("  {p:>12.6}");
        }
        println!();
    }

    // The marginals are mutually consistent: each node distribution is
    // the row (or column) sum of the adjacent edge block.
    for (t, block) in edges.iter().enumerate() {
        for i in 0..NUM_TAGS {
            let row_sum: f64 = block[i].iter().sum();
            assert!((nodes[t][i] - row_sum).abs() < 1e-12);
        }
    }
    println!("\nnode/edge consistency verified on every position");
}
