//! Exact inference on a linear-chain lattice: sequence scoring, the
//! log-partition function, posterior marginals, and Viterbi decoding.

use crate::corpus::{Tag, NUM_TAGS};

use super::{CrfError, Lattice, TransitionMatrix, START, STOP};

/// Posterior probability of each label at each position, T×7.
pub type NodeMarginals = Vec<[f64; NUM_TAGS]>;
/// Posterior probability of each label pair on each edge, (T−1)×7×7.
pub type EdgeMarginals = Vec<[[f64; NUM_TAGS]; NUM_TAGS]>;

/// log(Σ exp(x_i)) computed against the running maximum so that large
/// magnitudes cannot overflow.
fn log_sum_exp(xs: &[f64; NUM_TAGS]) -> f64 {
    let max = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let sum: f64 = xs.iter().map(|x| (x - max).exp()).sum();
    max + sum.ln()
}

/// Unnormalized log-score of one tagging: START transition, per-position
/// emissions, label-to-label transitions, STOP transition.
pub fn score_sequence(
    lattice: &Lattice,
    transitions: &TransitionMatrix,
    tags: &[Tag],
) -> Result<f64, CrfError> {
    if tags.len() != lattice.len() {
        return Err(CrfError::LengthMismatch {
            tags: tags.len(),
            lattice: lattice.len(),
        });
    }
    let mut score = transitions.get(START, tags[0].index());
    for (t, tag) in tags.iter().enumerate() {
        score += lattice.score(t, tag.index());
        if t + 1 < tags.len() {
            score += transitions.get(tag.index(), tags[t + 1].index());
        }
    }
    score += transitions.get(tags[tags.len() - 1].index(), STOP);
    Ok(score)
}

/// Forward recursion; element `[t][y]` is the log-sum of all partial
/// paths ending in label `y` at position `t` (emissions included).
fn forward_table(lattice: &Lattice, transitions: &TransitionMatrix) -> Vec<[f64; NUM_TAGS]> {
    let len = lattice.len();
    let mut alpha = vec![[0.0; NUM_TAGS]; len];
    for y in 0..NUM_TAGS {
        alpha[0][y] = transitions.get(START, y) + lattice.score(0, y);
    }
    for t in 1..len {
        for y in 0..NUM_TAGS {
            let mut terms = [0.0; NUM_TAGS];
            for (prev, term) in terms.iter_mut().enumerate() {
                *term = alpha[t - 1][prev] + transitions.get(prev, y);
            }
            alpha[t][y] = log_sum_exp(&terms) + lattice.score(t, y);
        }
    }
    alpha
}

/// Backward recursion; element `[t][y]` is the log-sum of all path
/// suffixes that start from label `y` at position `t` (the emission at
/// `t` itself excluded, the STOP transition included).
fn backward_table(lattice: &Lattice, transitions: &TransitionMatrix) -> Vec<[f64; NUM_TAGS]> {
    let len = lattice.len();
    let mut beta = vec![[0.0; NUM_TAGS]; len];
    for y in 0..NUM_TAGS {
        beta[len - 1][y] = transitions.get(y, STOP);
    }
    for t in (0..len - 1).rev() {
        for y in 0..NUM_TAGS {
            let mut terms = [0.0; NUM_TAGS];
            for (next, term) in terms.iter_mut().enumerate() {
                *term = transitions.get(y, next) + lattice.score(t + 1, next) + beta[t + 1][next];
            }
            beta[t][y] = log_sum_exp(&terms);
        }
    }
    beta
}

/// Log of the partition function: the log-sum over all 7^T taggings of
/// their exponentiated scores.
pub fn forward_log_partition(lattice: &Lattice, transitions: &TransitionMatrix) -> f64 {
    let alpha = forward_table(lattice, transitions);
    let last = alpha.last().unwrap();
    let mut terms = [0.0; NUM_TAGS];
    for (y, term) in terms.iter_mut().enumerate() {
        *term = last[y] + transitions.get(y, STOP);
    }
    log_sum_exp(&terms)
}

/// Forward-backward posteriors. Each edge block is normalized to sum to
/// one, and node marginals are then obtained by summing the adjacent
/// edge block over the other endpoint, so the two views agree exactly:
/// `node[t][i] == Σ_j edge[t][i][j]` bit for bit.
pub fn posterior_marginals(
    lattice: &Lattice,
    transitions: &TransitionMatrix,
) -> (NodeMarginals, EdgeMarginals) {
    let len = lattice.len();
    let alpha = forward_table(lattice, transitions);
    let beta = backward_table(lattice, transitions);
    let log_z = forward_log_partition(lattice, transitions);

    let mut edges: EdgeMarginals = Vec::with_capacity(len.saturating_sub(1));
    for t in 0..len.saturating_sub(1) {
        let mut block = [[0.0; NUM_TAGS]; NUM_TAGS];
        let mut total = 0.0;
        for (i, row) in block.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = (alpha[t][i]
                    + transitions.get(i, j)
                    + lattice.score(t + 1, j)
                    + beta[t + 1][j]
                    - log_z)
                    .exp();
                total += *cell;
            }
        }
        for row in &mut block {
            for cell in row {
                *cell /= total;
            }
        }
        edges.push(block);
    }

    let mut nodes: NodeMarginals = vec![[0.0; NUM_TAGS]; len];
    if len == 1 {
        let mut total = 0.0;
        for y in 0..NUM_TAGS {
            nodes[0][y] = (alpha[0][y] + beta[0][y] - log_z).exp();
            total += nodes[0][y];
        }
        for cell in &mut nodes[0] {
            *cell /= total;
        }
    } else {
        for t in 0..len - 1 {
            for i in 0..NUM_TAGS {
                nodes[t][i] = edges[t][i].iter().sum();
            }
        }
        for j in 0..NUM_TAGS {
            nodes[len - 1][j] = edges[len - 2].iter().map(|row| row[j]).sum();
        }
    }
    (nodes, edges)
}

/// Highest-scoring tagging. Among ties the sequence with the lower label
/// index at the latest differing position wins, which falls out of
/// scanning candidates in index order and replacing only on a strict
/// improvement.
pub fn viterbi_decode(lattice: &Lattice, transitions: &TransitionMatrix) -> Vec<Tag> {
    let len = lattice.len();
    let mut delta = vec![[0.0; NUM_TAGS]; len];
    let mut back = vec![[0usize; NUM_TAGS]; len];
    for y in 0..NUM_TAGS {
        delta[0][y] = transitions.get(START, y) + lattice.score(0, y);
    }
    for t in 1..len {
        for y in 0..NUM_TAGS {
            let mut best_prev = 0;
            let mut best = delta[t - 1][0] + transitions.get(0, y);
            for prev in 1..NUM_TAGS {
                let cand = delta[t - 1][prev] + transitions.get(prev, y);
                if cand > best {
                    best = cand;
                    best_prev = prev;
                }
            }
            delta[t][y] = best + lattice.score(t, y);
            back[t][y] = best_prev;
        }
    }

    let mut best_last = 0;
    let mut best = delta[len - 1][0] + transitions.get(0, STOP);
    for y in 1..NUM_TAGS {
        let cand = delta[len - 1][y] + transitions.get(y, STOP);
        if cand > best {
            best = cand;
            best_last = y;
        }
    }

    let mut path = vec![0usize; len];
    path[len - 1] = best_last;
    for t in (1..len).rev() {
        path[t - 1] = back[t][path[t]];
    }
    path.into_iter().map(|y| Tag::ALL[y]).collect()
}
