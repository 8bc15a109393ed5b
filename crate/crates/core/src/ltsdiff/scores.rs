use std::collections::BTreeSet;

use crate::automata::{union_alphabet, Nfa, StateId};
use crate::par;

use super::DiffParams;

/// Dense similarity scores for every `(state of A, state of B)` pair.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreTable {
    rows: usize,
    cols: usize,
    scores: Vec<f64>,
}

impl ScoreTable {
    pub fn new(rows: usize, cols: usize, scores: Vec<f64>) -> Self {
        assert_eq!(scores.len(), rows * cols);
        ScoreTable { rows, cols, scores }
    }

    pub fn uniform(rows: usize, cols: usize, value: f64) -> Self {
        ScoreTable::new(rows, cols, vec![value; rows * cols])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, p: StateId, q: StateId) -> f64 {
        self.scores[p * self.cols + q]
    }

    pub fn row(&self, p: StateId) -> &[f64] {
        &self.scores[p * self.cols..(p + 1) * self.cols]
    }

    pub fn transpose(&self) -> ScoreTable {
        let mut scores = vec![0.0; self.scores.len()];
        for p in 0..self.rows {
            for q in 0..self.cols {
                scores[q * self.rows + p] = self.get(p, q);
            }
        }
        ScoreTable::new(self.cols, self.rows, scores)
    }

    pub fn max_abs_diff(&self, other: &ScoreTable) -> f64 {
        self.scores
            .iter()
            .zip(&other.scores)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }
}

/// Per-state neighborhoods with events mapped into a shared alphabet.
struct Neighborhood {
    out_labels: Vec<Vec<usize>>,
    in_labels: Vec<Vec<usize>>,
    // [state][event] -> targets / sources
    succ: Vec<Vec<Vec<StateId>>>,
    pred: Vec<Vec<Vec<StateId>>>,
}

impl Neighborhood {
    fn new(m: &Nfa, alphabet: &[crate::Event]) -> Self {
        let k = alphabet.len();
        let map: Vec<usize> = m
            .alphabet()
            .iter()
            .map(|e| alphabet.binary_search(e).unwrap())
            .collect();
        let n = m.num_states();
        let mut succ = vec![vec![Vec::new(); k]; n];
        let mut pred = vec![vec![Vec::new(); k]; n];
        for t in m.transitions() {
            succ[t.source][map[t.event]].push(t.target);
            pred[t.target][map[t.event]].push(t.source);
        }
        let labels = |table: &Vec<Vec<Vec<StateId>>>| -> Vec<Vec<usize>> {
            table
                .iter()
                .map(|row| (0..k).filter(|&e| !row[e].is_empty()).collect())
                .collect()
        };
        Neighborhood {
            out_labels: labels(&succ),
            in_labels: labels(&pred),
            succ,
            pred,
        }
    }
}

fn shared(x: &[usize], y: &[usize]) -> Vec<usize> {
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::new();
    while i < x.len() && j < y.len() {
        match x[i].cmp(&y[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push(x[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out
}

/// Jaccard index of two sorted label sets, with `jaccard(∅, ∅) = 1`.
pub(crate) fn jaccard(x: &[usize], y: &[usize]) -> f64 {
    if x.is_empty() && y.is_empty() {
        return 1.0;
    }
    let common = shared(x, y).len();
    common as f64 / (x.len() + y.len() - common) as f64
}

fn local_table(na: &Neighborhood, nb: &Neighborhood) -> ScoreTable {
    let rows = na.out_labels.len();
    let cols = nb.out_labels.len();
    let mut scores = Vec::with_capacity(rows * cols);
    for p in 0..rows {
        for q in 0..cols {
            scores.push(
                0.5 * (jaccard(&na.out_labels[p], &nb.out_labels[q])
                    + jaccard(&na.in_labels[p], &nb.in_labels[q])),
            );
        }
    }
    ScoreTable::new(rows, cols, scores)
}

/// Local similarity: the mean of the Jaccard indices of outgoing and incoming
/// event labels.
pub fn local_scores(a: &Nfa, b: &Nfa) -> ScoreTable {
    let alphabet = union_alphabet(a.alphabet(), b.alphabet());
    local_table(&Neighborhood::new(a, &alphabet), &Neighborhood::new(b, &alphabet))
}

/// Result of the global score fixed point, with its convergence trace.
#[derive(Debug, Clone)]
pub struct GlobalScores {
    pub table: ScoreTable,
    /// Max-norm change of each iteration, in order.
    pub deltas: Vec<f64>,
}

/// Averages, over shared events, the best score among event-neighbor pairs.
fn neighbor_average(
    labels_a: &[usize],
    labels_b: &[usize],
    next_a: &[Vec<StateId>],
    next_b: &[Vec<StateId>],
    scores: &ScoreTable,
) -> Option<f64> {
    let events = shared(labels_a, labels_b);
    if events.is_empty() {
        return None;
    }
    let total: f64 = events
        .iter()
        .map(|&e| {
            let mut best = 0.0f64;
            for &p in &next_a[e] {
                for &q in &next_b[e] {
                    best = best.max(scores.get(p, q));
                }
            }
            best
        })
        .sum();
    Some(total / events.len() as f64)
}

/// Global similarity: local scores propagated through neighbor pairs, with
/// context `n` steps away weighted by `attenuation^n`.
pub fn global_scores(a: &Nfa, b: &Nfa, params: &DiffParams) -> ScoreTable {
    global_scores_traced(a, b, params).table
}

pub fn global_scores_traced(a: &Nfa, b: &Nfa, params: &DiffParams) -> GlobalScores {
    let alphabet = union_alphabet(a.alphabet(), b.alphabet());
    let na = Neighborhood::new(a, &alphabet);
    let nb = Neighborhood::new(b, &alphabet);
    let local = local_table(&na, &nb);
    let (rows, cols) = (local.rows(), local.cols());
    let k = params.attenuation;
    let mut current = local.clone();
    let mut deltas = Vec::new();
    for _ in 0..params.max_iterations {
        let rows_out: Vec<Vec<f64>> = par::map_range(rows, |p| {
            (0..cols)
                .map(|q| {
                    let s0 = local.get(p, q);
                    let succ = neighbor_average(
                        &na.out_labels[p],
                        &nb.out_labels[q],
                        &na.succ[p],
                        &nb.succ[q],
                        &current,
                    )
                    .unwrap_or(s0);
                    let pred = neighbor_average(
                        &na.in_labels[p],
                        &nb.in_labels[q],
                        &na.pred[p],
                        &nb.pred[q],
                        &current,
                    )
                    .unwrap_or(s0);
                    (1.0 - k) * s0 + k * 0.5 * (succ + pred)
                })
                .collect()
        });
        let next = ScoreTable::new(rows, cols, rows_out.into_iter().flatten().collect());
        let delta = next.max_abs_diff(&current);
        deltas.push(delta);
        current = next;
        if delta <= params.convergence_epsilon {
            break;
        }
    }
    GlobalScores {
        table: current,
        deltas,
    }
}

/// Pairs reachable from `(p, q)` by one shared event, forwards and backwards.
pub(crate) fn neighbor_pairs(a: &Nfa, b: &Nfa) -> impl Fn(StateId, StateId) -> BTreeSet<(StateId, StateId)> {
    let alphabet = union_alphabet(a.alphabet(), b.alphabet());
    let na = Neighborhood::new(a, &alphabet);
    let nb = Neighborhood::new(b, &alphabet);
    move |p, q| {
        let mut out = BTreeSet::new();
        for e in shared(&na.out_labels[p], &nb.out_labels[q]) {
            for &x in &na.succ[p][e] {
                for &y in &nb.succ[q][e] {
                    out.insert((x, y));
                }
            }
        }
        for e in shared(&na.in_labels[p], &nb.in_labels[q]) {
            for &x in &na.pred[p][e] {
                for &y in &nb.pred[q][e] {
                    out.insert((x, y));
                }
            }
        }
        out
    }
}
