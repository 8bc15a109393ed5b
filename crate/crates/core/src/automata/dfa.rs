use std::collections::{HashMap, VecDeque};

use super::{union_alphabet, Event, Nfa, StateId};

/// A complete DFA with state 0 as its initial state.
#[derive(Debug, Clone)]
pub(crate) struct Dfa {
    pub(crate) alphabet: Vec<Event>,
    pub(crate) delta: Vec<Vec<StateId>>,
    pub(crate) accepting: Vec<bool>,
}

impl Dfa {
    pub(crate) fn to_nfa(&self, prefix: &str) -> Nfa {
        let width = digits(self.delta.len());
        let names = (0..self.delta.len())
            .map(|i| format!("{prefix}{i:0width$}"))
            .collect();
        let transitions = self
            .delta
            .iter()
            .enumerate()
            .flat_map(|(s, row)| row.iter().enumerate().map(move |(e, &t)| (s, e, t)));
        let accepting = self
            .accepting
            .iter()
            .enumerate()
            .filter(|(_, &a)| a)
            .map(|(s, _)| s);
        Nfa::from_parts(names, self.alphabet.clone(), transitions, [0], accepting)
    }

    pub(crate) fn complement(mut self) -> Dfa {
        for a in &mut self.accepting {
            *a = !*a;
        }
        self
    }
}

fn digits(n: usize) -> usize {
    n.saturating_sub(1).to_string().len()
}

/// Subset construction over `alphabet`, which must contain `m.alphabet()`.
///
/// Only subsets reachable from the initial subset are built. The empty subset
/// plays the role of the completion sink.
pub(crate) fn subset_construction(m: &Nfa, alphabet: &[Event]) -> Dfa {
    let k = alphabet.len();
    let to_global: Vec<usize> = m
        .alphabet()
        .iter()
        .map(|e| alphabet.binary_search(e).expect("alphabet must cover the machine"))
        .collect();
    let mut succ: Vec<Vec<Vec<StateId>>> = vec![vec![Vec::new(); k]; m.num_states()];
    for t in m.transitions() {
        succ[t.source][to_global[t.event]].push(t.target);
    }

    let start: Vec<StateId> = m.initial().to_vec();
    let mut index: HashMap<Vec<StateId>, usize> = HashMap::new();
    let mut subsets = vec![start.clone()];
    index.insert(start, 0);
    let mut delta: Vec<Vec<StateId>> = Vec::new();
    let mut queue = VecDeque::from([0usize]);
    let mut mark = vec![false; m.num_states()];
    while let Some(i) = queue.pop_front() {
        let mut row = Vec::with_capacity(k);
        for e in 0..k {
            let mut next = Vec::new();
            for &s in &subsets[i] {
                for &t in &succ[s][e] {
                    if !mark[t] {
                        mark[t] = true;
                        next.push(t);
                    }
                }
            }
            for &t in &next {
                mark[t] = false;
            }
            next.sort_unstable();
            let id = match index.get(&next) {
                Some(&id) => id,
                None => {
                    let id = subsets.len();
                    index.insert(next.clone(), id);
                    subsets.push(next);
                    queue.push_back(id);
                    id
                }
            };
            row.push(id);
        }
        // FIFO order with sequential ids: rows are produced in id order.
        debug_assert_eq!(delta.len(), i);
        delta.push(row);
    }
    let accepting = subsets
        .iter()
        .map(|set| set.iter().any(|&s| m.is_accepting(s)))
        .collect();
    Dfa {
        alphabet: alphabet.to_vec(),
        delta,
        accepting,
    }
}

/// Determinizes `machine` over its own alphabet.
///
/// The result is complete; states are named `d0, d1, ...` in breadth-first
/// discovery order.
pub fn determinize(machine: &Nfa) -> Nfa {
    subset_construction(machine, machine.alphabet()).to_nfa("d")
}

/// A complete, minimal DFA in canonical form.
///
/// State 0 is initial and states are numbered breadth-first, following events
/// in sorted order. Two values are equal iff they describe the same language
/// over the same alphabet.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CanonicalDfa {
    alphabet: Vec<Event>,
    delta: Vec<Vec<StateId>>,
    accepting: Vec<bool>,
    sink: Option<StateId>,
}

impl CanonicalDfa {
    pub fn num_states(&self) -> usize {
        self.delta.len()
    }

    pub fn alphabet(&self) -> &[Event] {
        &self.alphabet
    }

    pub fn initial(&self) -> StateId {
        0
    }

    pub fn successor(&self, state: StateId, event: usize) -> StateId {
        self.delta[state][event]
    }

    pub fn is_accepting(&self, state: StateId) -> bool {
        self.accepting[state]
    }

    /// The unique non-accepting state that loops on every event, if any.
    pub fn sink(&self) -> Option<StateId> {
        self.sink
    }

    pub fn is_empty_language(&self) -> bool {
        !self.accepting.iter().any(|&a| a)
    }

    /// Number of transitions once the sink and its incoming edges are dropped.
    pub fn trimmed_transition_count(&self) -> usize {
        self.delta
            .iter()
            .enumerate()
            .filter(|(s, _)| Some(*s) != self.sink)
            .map(|(_, row)| row.iter().filter(|&&t| Some(t) != self.sink).count())
            .sum()
    }

    /// The trimmed machine: the sink and every transition into it removed.
    ///
    /// States are named `q0, q1, ...` (zero-padded) in canonical order. An
    /// empty language yields a machine without states over the same alphabet.
    pub fn to_nfa(&self) -> Nfa {
        let keep: Vec<StateId> = (0..self.num_states())
            .filter(|&s| Some(s) != self.sink)
            .collect();
        let mut renumber = vec![usize::MAX; self.num_states()];
        for (i, &s) in keep.iter().enumerate() {
            renumber[s] = i;
        }
        let width = digits(keep.len());
        let names = (0..keep.len()).map(|i| format!("q{i:0width$}")).collect();
        let mut transitions = Vec::new();
        for &s in &keep {
            for (e, &t) in self.delta[s].iter().enumerate() {
                if Some(t) != self.sink {
                    transitions.push((renumber[s], e, renumber[t]));
                }
            }
        }
        let initial = if keep.is_empty() { vec![] } else { vec![0] };
        let accepting = keep
            .iter()
            .filter(|&&s| self.accepting[s])
            .map(|&s| renumber[s])
            .collect::<Vec<_>>();
        Nfa::from_parts(names, self.alphabet.clone(), transitions, initial, accepting)
    }

    /// Language inclusion between canonical DFAs over the same alphabet.
    pub fn is_subset_of(&self, other: &CanonicalDfa) -> bool {
        assert_eq!(self.alphabet, other.alphabet, "alphabets must be aligned");
        let n = other.num_states();
        let mut seen = vec![false; self.num_states() * n];
        let mut queue = VecDeque::from([(0usize, 0usize)]);
        seen[0] = true;
        while let Some((p, q)) = queue.pop_front() {
            if self.accepting[p] && !other.accepting[q] {
                return false;
            }
            for e in 0..self.alphabet.len() {
                let next = (self.delta[p][e], other.delta[q][e]);
                let idx = next.0 * n + next.1;
                if !seen[idx] {
                    seen[idx] = true;
                    queue.push_back(next);
                }
            }
        }
        true
    }
}

/// Minimizes `machine` over its own alphabet.
pub fn minimize(machine: &Nfa) -> CanonicalDfa {
    minimize_over(machine, machine.alphabet())
}

/// Minimizes `machine` over `machine.alphabet() ∪ alphabet`.
pub fn minimize_over(machine: &Nfa, alphabet: &[Event]) -> CanonicalDfa {
    let alphabet = union_alphabet(machine.alphabet(), alphabet);
    let dfa = subset_construction(machine, &alphabet);
    canonicalize(&dfa)
}

/// Moore partition refinement followed by breadth-first renumbering.
pub(crate) fn canonicalize(dfa: &Dfa) -> CanonicalDfa {
    let n = dfa.delta.len();
    let k = dfa.alphabet.len();
    let mut class: Vec<usize> = dfa.accepting.iter().map(|&a| a as usize).collect();
    let mut count = {
        let mut c = class.clone();
        c.sort_unstable();
        c.dedup();
        c.len()
    };
    loop {
        let mut ids: HashMap<(usize, Vec<usize>), usize> = HashMap::new();
        let mut next = Vec::with_capacity(n);
        for s in 0..n {
            let sig = (class[s], dfa.delta[s].iter().map(|&t| class[t]).collect());
            let len = ids.len();
            next.push(*ids.entry(sig).or_insert(len));
        }
        let new_count = ids.len();
        class = next;
        if new_count == count {
            break;
        }
        count = new_count;
    }

    let mut representative = vec![usize::MAX; count];
    for s in (0..n).rev() {
        representative[class[s]] = s;
    }
    let mut order = vec![usize::MAX; count];
    let mut delta = Vec::with_capacity(count);
    let mut accepting = Vec::with_capacity(count);
    let mut queue = VecDeque::from([class[0]]);
    order[class[0]] = 0;
    let mut discovered = 1;
    let mut bfs = Vec::with_capacity(count);
    while let Some(c) = queue.pop_front() {
        bfs.push(c);
        let rep = representative[c];
        for e in 0..k {
            let t = class[dfa.delta[rep][e]];
            if order[t] == usize::MAX {
                order[t] = discovered;
                discovered += 1;
                queue.push_back(t);
            }
        }
    }
    for &c in &bfs {
        let rep = representative[c];
        delta.push((0..k).map(|e| order[class[dfa.delta[rep][e]]]).collect::<Vec<_>>());
        accepting.push(dfa.accepting[rep]);
    }
    let sink = (0..delta.len())
        .find(|&s| !accepting[s] && delta[s].iter().all(|&t| t == s));
    CanonicalDfa {
        alphabet: dfa.alphabet.clone(),
        delta,
        accepting,
        sink,
    }
}
