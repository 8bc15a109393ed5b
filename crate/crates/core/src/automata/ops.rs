use std::collections::{BTreeSet, HashMap, VecDeque};

use super::dfa::subset_construction;
use super::{minimize_over, union_alphabet, Event, Nfa, NfaError, StateId, Trace};

/// Default guard for [`bounded_language`].
pub const BOUNDED_LANGUAGE_CAP: usize = 1_000_000;

fn epsilon_free_step(
    succ: &[Vec<(usize, StateId)>],
    current: &BTreeSet<StateId>,
    event: usize,
) -> BTreeSet<StateId> {
    current
        .iter()
        .flat_map(|&s| succ[s].iter().filter(move |(e, _)| *e == event).map(|(_, t)| *t))
        .collect()
}

/// Whether some run over `trace` starts in an initial state and ends in an
/// accepting one. Events outside the alphabet have no transitions.
pub fn accepts(machine: &Nfa, trace: &Trace) -> bool {
    let succ = machine.successors();
    let mut current: BTreeSet<StateId> = machine.initial().iter().copied().collect();
    for event in trace.events() {
        let Some(e) = machine.event_id(event) else {
            return false;
        };
        current = epsilon_free_step(&succ, &current, e);
        if current.is_empty() {
            return false;
        }
    }
    current.iter().any(|&s| machine.is_accepting(s))
}

fn reachable(machine: &Nfa) -> Vec<bool> {
    let succ = machine.successors();
    let mut seen = vec![false; machine.num_states()];
    let mut stack: Vec<StateId> = machine.initial().to_vec();
    for &s in &stack {
        seen[s] = true;
    }
    while let Some(s) = stack.pop() {
        for &(_, t) in &succ[s] {
            if !seen[t] {
                seen[t] = true;
                stack.push(t);
            }
        }
    }
    seen
}

/// `B(A)`: true iff the language of `machine` is non-empty.
pub fn has_behavior(machine: &Nfa) -> bool {
    let seen = reachable(machine);
    machine.accepting().iter().any(|&s| seen[s])
}

/// Disjoint union; state names are prefixed with `l.` and `r.`.
pub fn union(a: &Nfa, b: &Nfa) -> Nfa {
    let alphabet = union_alphabet(a.alphabet(), b.alphabet());
    let offset = a.num_states();
    let names = a
        .states()
        .iter()
        .map(|s| format!("l.{s}"))
        .chain(b.states().iter().map(|s| format!("r.{s}")))
        .collect();
    let map_a: Vec<usize> = a.alphabet().iter().map(|e| alphabet.binary_search(e).unwrap()).collect();
    let map_b: Vec<usize> = b.alphabet().iter().map(|e| alphabet.binary_search(e).unwrap()).collect();
    let transitions = a
        .transitions()
        .iter()
        .map(|t| (t.source, map_a[t.event], t.target))
        .chain(
            b.transitions()
                .iter()
                .map(|t| (t.source + offset, map_b[t.event], t.target + offset)),
        )
        .collect::<Vec<_>>();
    let initial = a
        .initial()
        .iter()
        .copied()
        .chain(b.initial().iter().map(|s| s + offset))
        .collect::<Vec<_>>();
    let accepting = a
        .accepting()
        .iter()
        .copied()
        .chain(b.accepting().iter().map(|s| s + offset))
        .collect::<Vec<_>>();
    Nfa::from_parts(names, alphabet, transitions, initial, accepting)
}

/// Synchronous product over the union alphabet, restricted to reachable pairs.
pub fn intersection(a: &Nfa, b: &Nfa) -> Nfa {
    let alphabet = union_alphabet(a.alphabet(), b.alphabet());
    let k = alphabet.len();
    let table = |m: &Nfa| {
        let map: Vec<usize> = m.alphabet().iter().map(|e| alphabet.binary_search(e).unwrap()).collect();
        let mut succ = vec![vec![Vec::new(); k]; m.num_states()];
        for t in m.transitions() {
            succ[t.source][map[t.event]].push(t.target);
        }
        succ
    };
    let succ_a = table(a);
    let succ_b = table(b);

    let mut index: HashMap<(StateId, StateId), usize> = HashMap::new();
    let mut pairs = Vec::new();
    let mut queue = VecDeque::new();
    for &p in a.initial() {
        for &q in b.initial() {
            index.insert((p, q), pairs.len());
            pairs.push((p, q));
            queue.push_back((p, q));
        }
    }
    let mut transitions = Vec::new();
    while let Some((p, q)) = queue.pop_front() {
        let from = index[&(p, q)];
        for e in 0..k {
            for &p2 in &succ_a[p][e] {
                for &q2 in &succ_b[q][e] {
                    let to = *index.entry((p2, q2)).or_insert_with(|| {
                        pairs.push((p2, q2));
                        queue.push_back((p2, q2));
                        pairs.len() - 1
                    });
                    transitions.push((from, e, to));
                }
            }
        }
    }
    let width = pairs.len().saturating_sub(1).to_string().len();
    let names = (0..pairs.len()).map(|i| format!("p{i:0width$}")).collect();
    let initial = 0..a.initial().len() * b.initial().len();
    let accepting = pairs
        .iter()
        .enumerate()
        .filter(|(_, (p, q))| a.is_accepting(*p) && b.is_accepting(*q))
        .map(|(i, _)| i)
        .collect::<Vec<_>>();
    Nfa::from_parts(names, alphabet, transitions, initial, accepting)
}

/// `L(a) = L(b)`, decided over the union of both alphabets.
pub fn language_equivalent(a: &Nfa, b: &Nfa) -> bool {
    let alphabet = union_alphabet(a.alphabet(), b.alphabet());
    minimize_over(a, &alphabet) == minimize_over(b, &alphabet)
}

/// `L(a) ⊆ L(b)` over the union alphabet: `a ∩ ¬det(b)` must have no behavior.
pub fn language_included(a: &Nfa, b: &Nfa) -> bool {
    let alphabet = union_alphabet(a.alphabet(), b.alphabet());
    let complement = subset_construction(b, &alphabet).complement().to_nfa("c");
    !has_behavior(&intersection(a, &complement))
}

/// Renames every event in `hidden` to ε and eliminates the ε-transitions.
///
/// A state becomes accepting when an accepting state lies in its ε-closure;
/// visible transitions are taken from every state in the closure. Hidden
/// events disappear from the alphabet.
pub fn hide_events(machine: &Nfa, hidden: &BTreeSet<Event>) -> Nfa {
    if !machine.alphabet().iter().any(|e| hidden.contains(e)) {
        return machine.clone();
    }
    let is_hidden: Vec<bool> = machine.alphabet().iter().map(|e| hidden.contains(e)).collect();
    let visible: Vec<Event> = machine
        .alphabet()
        .iter()
        .filter(|e| !hidden.contains(*e))
        .cloned()
        .collect();
    let remap: Vec<usize> = machine
        .alphabet()
        .iter()
        .map(|e| visible.binary_search(e).unwrap_or(usize::MAX))
        .collect();

    let n = machine.num_states();
    let mut eps = vec![Vec::new(); n];
    for t in machine.transitions() {
        if is_hidden[t.event] {
            eps[t.source].push(t.target);
        }
    }
    let closure: Vec<Vec<StateId>> = (0..n)
        .map(|s| {
            let mut seen = vec![false; n];
            seen[s] = true;
            let mut stack = vec![s];
            let mut out = Vec::new();
            while let Some(x) = stack.pop() {
                out.push(x);
                for &y in &eps[x] {
                    if !seen[y] {
                        seen[y] = true;
                        stack.push(y);
                    }
                }
            }
            out
        })
        .collect();

    let succ = machine.successors();
    let mut transitions = Vec::new();
    let mut accepting = Vec::new();
    for s in 0..n {
        for &c in &closure[s] {
            if machine.is_accepting(c) {
                accepting.push(s);
            }
            for &(e, t) in &succ[c] {
                if !is_hidden[e] {
                    transitions.push((s, remap[e], t));
                }
            }
        }
    }
    Nfa::from_parts(
        machine.states().to_vec(),
        visible,
        transitions,
        machine.initial().iter().copied(),
        accepting,
    )
}

/// All accepted traces of length at most `max_len`, with the default cap.
pub fn bounded_language(machine: &Nfa, max_len: usize) -> Result<BTreeSet<Trace>, NfaError> {
    bounded_language_with_cap(machine, max_len, BOUNDED_LANGUAGE_CAP)
}

/// Exhaustive enumeration of accepted traces of length at most `max_len`.
///
/// Explores the tree of trace prefixes, pruning prefixes with no live run.
/// Fails once more than `cap` prefixes would have to be visited.
/// States from which an accepting state is reachable.
fn coreachable(machine: &Nfa) -> Vec<bool> {
    let pred = machine.predecessors();
    let mut live = vec![false; machine.num_states()];
    let mut stack: Vec<StateId> = machine.accepting().to_vec();
    for &s in &stack {
        live[s] = true;
    }
    while let Some(s) = stack.pop() {
        for &(_, p) in &pred[s] {
            if !live[p] {
                live[p] = true;
                stack.push(p);
            }
        }
    }
    live
}

pub fn bounded_language_with_cap(
    machine: &Nfa,
    max_len: usize,
    cap: usize,
) -> Result<BTreeSet<Trace>, NfaError> {
    let succ = machine.successors();
    let live = coreachable(machine);
    let mut out = BTreeSet::new();
    let start: BTreeSet<StateId> = machine.initial().iter().copied().filter(|&s| live[s]).collect();
    if start.is_empty() {
        return Ok(out);
    }
    let mut visited = 0usize;
    let mut stack: Vec<(Vec<usize>, BTreeSet<StateId>)> = vec![(Vec::new(), start)];
    while let Some((prefix, current)) = stack.pop() {
        visited += 1;
        if visited > cap {
            return Err(NfaError::TraceCapExceeded { cap });
        }
        if current.iter().any(|&s| machine.is_accepting(s)) {
            out.insert(prefix.iter().map(|&e| machine.event(e).clone()).collect());
        }
        if prefix.len() == max_len {
            continue;
        }
        for e in 0..machine.alphabet().len() {
            let mut next = epsilon_free_step(&succ, &current, e);
            next.retain(|&s| live[s]);
            if !next.is_empty() {
                let mut p = prefix.clone();
                p.push(e);
                stack.push((p, next));
            }
        }
    }
    Ok(out)
}
