//! Test-side oracles and generators. Nothing here calls the library's
//! language algorithms; the oracles work directly on transition lists.
#![allow(dead_code)]

pub mod checks;

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::path::PathBuf;

use behavdiff::ingest::{load_workspace, HidingConfig};
use behavdiff::{Nfa, Workspace};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Word = Vec<String>;

pub fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests").join("data")
}

pub fn running_example() -> Workspace {
    load_workspace(&data_dir().join("running_example"), &HidingConfig::default()).unwrap()
}

pub fn word(s: &str) -> Word {
    s.split_whitespace().map(String::from).collect()
}

// ---------------------------------------------------------------------------
// Generators

const EVENTS: [&str; 4] = ["a", "b", "c", "d"];

/// Builds a machine from index-based parts; names are `s0..`, events from `EVENTS`.
pub fn machine(
    n: usize,
    n_events: usize,
    transitions: &[(usize, usize, usize)],
    initial: &[usize],
    accepting: &[usize],
) -> Nfa {
    let mut b = Nfa::builder();
    for e in &EVENTS[..n_events] {
        b.add_event(e.parse().unwrap());
    }
    for s in 0..n {
        b.add_state(format!("s{s}"), initial.contains(&s), accepting.contains(&s));
    }
    for &(p, e, q) in transitions {
        b.add_transition(format!("s{p}"), EVENTS[e].parse().unwrap(), format!("s{q}"));
    }
    b.build().unwrap()
}

/// Random machine with at most `max_states` states, at most two outgoing
/// transitions per state and events drawn from the first `n_events` letters.
pub fn random_nfa(rng: &mut impl Rng, max_states: usize, n_events: usize) -> Nfa {
    let n = if rng.gen_bool(0.05) { 0 } else { rng.gen_range(1..=max_states) };
    let mut transitions = Vec::new();
    let (mut initial, mut accepting) = (Vec::new(), Vec::new());
    for s in 0..n {
        // A spine `s -> s+1` keeps most states reachable.
        let spine = s + 1 < n && rng.gen_bool(0.7);
        if spine {
            transitions.push((s, rng.gen_range(0..n_events), s + 1));
        }
        for _ in 0..rng.gen_range(0..=2 - usize::from(spine)) {
            transitions.push((s, rng.gen_range(0..n_events), rng.gen_range(0..n)));
        }
        if s == 0 || rng.gen_bool(0.15) {
            initial.push(s);
        }
        if rng.gen_bool(0.4) {
            accepting.push(s);
        }
    }
    machine(n, n_events, &transitions, &initial, &accepting)
}

/// Same language, different structure: a state is split into two copies
/// sharing its outgoing transitions, and an unreachable state is added.
pub fn equivalent_variant(rng: &mut impl Rng, m: &Nfa) -> Nfa {
    let mut b = Nfa::builder();
    for e in m.alphabet() {
        b.add_event(e.clone());
    }
    for (i, s) in m.states().iter().enumerate() {
        b.add_state(format!("v{s}"), m.is_initial(i), m.is_accepting(i));
    }
    if m.num_states() == 0 {
        return b.build().unwrap();
    }
    let split = rng.gen_range(0..m.num_states());
    // Originals all gain a `v` prefix, so `w...` and `z` never collide.
    let copy = format!("w{}", m.state_name(split));
    b.add_state(copy.clone(), false, m.is_accepting(split));
    b.add_state("z", false, true);
    for t in m.transitions() {
        let src = format!("v{}", m.state_name(t.source));
        let e = m.event(t.event).clone();
        let dst = if t.target == split && rng.gen_bool(0.5) {
            copy.clone()
        } else {
            format!("v{}", m.state_name(t.target))
        };
        b.add_transition(src, e.clone(), dst);
        if t.source == split {
            b.add_transition(copy.clone(), e.clone(), format!("v{}", m.state_name(t.target)));
        }
    }
    if let Some(e) = m.alphabet().first() {
        b.add_transition("z", e.clone(), "z");
    }
    b.build().unwrap()
}

/// A machine whose language contains the input's: one more accepting state
/// or one more transition.
pub fn superset_variant(rng: &mut impl Rng, m: &Nfa) -> Nfa {
    if m.num_states() == 0 || m.alphabet().is_empty() {
        return m.clone();
    }
    // Inputs come from `random_nfa`: state `i` is `s{i}` and the alphabet is a prefix of `EVENTS`.
    let n = m.num_states();
    let k = m.alphabet().len();
    let mut transitions: Vec<_> = m.transitions().iter().map(|t| (t.source, t.event, t.target)).collect();
    let initial: Vec<usize> = m.initial().to_vec();
    let mut accepting: Vec<usize> = m.accepting().to_vec();
    if rng.gen_bool(0.5) {
        accepting.push(rng.gen_range(0..n));
    } else {
        transitions.push((rng.gen_range(0..n), rng.gen_range(0..k), rng.gen_range(0..n)));
    }
    machine(n, k, &transitions, &initial, &accepting)
}

/// A pair for equivalence/inclusion testing, mixing unrelated, equivalent and
/// included pairs. Both machines have at most 8 states and the joint
/// alphabet has at most 4 letters.
pub fn random_pair(rng: &mut impl Rng) -> (Nfa, Nfa) {
    let k = rng.gen_range(1..=4);
    let case = rng.gen_range(0..4);
    // An equivalent variant adds two states.
    let a = random_nfa(rng, if case == 1 { 6 } else { 8 }, k);
    match case {
        0 => {
            let k = rng.gen_range(1..=4);
            (a, random_nfa(rng, 8, k))
        }
        1 => {
            let b = equivalent_variant(rng, &a);
            (a, b)
        }
        2 => {
            let b = superset_variant(rng, &a);
            if rng.gen_bool(0.5) {
                (a, b)
            } else {
                (b, a)
            }
        }
        _ => (random_nfa(rng, 4, 2), random_nfa(rng, 4, 2)),
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random workspace: up to `sets` model sets over up to `entities` entities,
/// some models missing, machines of at most `max_states` states.
pub fn random_workspace(rng: &mut impl Rng, sets: usize, entities: usize, max_states: usize) -> Workspace {
    let n_sets = rng.gen_range(1..=sets);
    let n_entities = rng.gen_range(1..=entities);
    let pool: Vec<Vec<Nfa>> = (0..n_entities)
        .map(|_| (0..3).map(|_| random_nfa(rng, max_states, 2)).collect())
        .collect();
    let mut partial = Vec::new();
    for s in 0..n_sets {
        let mut models = BTreeMap::new();
        for (e, choices) in pool.iter().enumerate() {
            if rng.gen_bool(0.85) {
                let m = choices[rng.gen_range(0..3)].clone();
                models.insert(behavdiff::EntityId::new(format!("E{e}")).unwrap(), m);
            }
        }
        partial.push((format!("S{s}"), models));
    }
    Workspace::from_partial(partial).unwrap()
}

prop_compose! {
    /// Shrinkable machine strategy; at most two outgoing transitions per state.
    pub fn arb_nfa(max_states: usize, max_events: usize)
        (n in 0..=max_states, k in 1..=max_events)
        (out in proptest::collection::vec(proptest::collection::vec((0..k, 0..n.max(1)), 0..=2), n),
         initial in proptest::collection::vec(any::<bool>(), n),
         accepting in proptest::collection::vec(any::<bool>(), n),
         k in Just(k))
        -> Nfa
    {
        let n = out.len();
        let transitions: Vec<_> = out
            .iter()
            .enumerate()
            .flat_map(|(s, ts)| ts.iter().map(move |&(e, t)| (s, e, t)))
            .collect();
        let pick = |bits: &[bool]| bits.iter().enumerate().filter(|(_, b)| **b).map(|(i, _)| i).collect::<Vec<_>>();
        machine(n, k, &transitions, &pick(&initial), &pick(&accepting))
    }
}

// ---------------------------------------------------------------------------
// Oracles

fn step(m: &Nfa, set: &BTreeSet<usize>, event: &str) -> BTreeSet<usize> {
    m.transitions()
        .iter()
        .filter(|t| set.contains(&t.source) && m.event(t.event).as_str() == event)
        .map(|t| t.target)
        .collect()
}

fn initial_set(m: &Nfa) -> BTreeSet<usize> {
    m.initial().iter().copied().collect()
}

fn accepts_set(m: &Nfa, set: &BTreeSet<usize>) -> bool {
    set.iter().any(|&s| m.is_accepting(s))
}

/// Direct simulation.
pub fn sim_accepts(m: &Nfa, w: &[String]) -> bool {
    let mut cur = initial_set(m);
    for e in w {
        cur = step(m, &cur, e);
    }
    accepts_set(m, &cur)
}

pub fn alphabet_union(a: &Nfa, b: &Nfa) -> Vec<String> {
    a.alphabet()
        .iter()
        .chain(b.alphabet())
        .map(|e| e.as_str().to_string())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect()
}

/// Every accepted word of length at most `n`, by depth-first enumeration.
pub fn enumerate_language(m: &Nfa, n: usize) -> BTreeSet<Word> {
    enumerate_language_capped(m, n, usize::MAX).expect("uncapped")
}

/// Like [`enumerate_language`], giving up after visiting `cap` live prefixes.
pub fn enumerate_language_capped(m: &Nfa, n: usize, cap: usize) -> Option<BTreeSet<Word>> {
    let mut visited = 0usize;
    let alphabet: Vec<String> = m.alphabet().iter().map(|e| e.as_str().to_string()).collect();
    let mut out = BTreeSet::new();
    let mut stack = vec![(Vec::new(), initial_set(m))];
    while let Some((w, set)) = stack.pop() {
        if set.is_empty() {
            continue;
        }
        visited += 1;
        if visited > cap {
            return None;
        }
        if accepts_set(m, &set) {
            out.insert(w.clone());
        }
        if w.len() == n {
            continue;
        }
        for e in &alphabet {
            let mut next = w.clone();
            next.push(e.clone());
            stack.push((next, step(m, &set, e)));
        }
    }
    Some(out)
}

pub fn to_words(traces: &BTreeSet<behavdiff::Trace>) -> BTreeSet<Word> {
    traces
        .iter()
        .map(|t| t.events().iter().map(|e| e.as_str().to_string()).collect())
        .collect()
}

/// Bitmask form of a machine over a fixed alphabet.
struct Masks {
    init: u64,
    acc: u64,
    delta: Vec<Vec<u64>>,
}

fn masks(m: &Nfa, alphabet: &[String]) -> Masks {
    assert!(m.num_states() <= 64);
    let mut delta = vec![vec![0u64; alphabet.len()]; m.num_states()];
    for t in m.transitions() {
        let e = alphabet.iter().position(|x| x == m.event(t.event).as_str()).unwrap();
        delta[t.source][e] |= 1 << t.target;
    }
    let bits = |ids: &[usize]| ids.iter().fold(0u64, |acc, &s| acc | 1 << s);
    Masks {
        init: bits(m.initial()),
        acc: bits(m.accepting()),
        delta,
    }
}

fn mask_step(m: &Masks, set: u64, e: usize) -> u64 {
    let mut out = 0;
    let mut rest = set;
    while rest != 0 {
        let s = rest.trailing_zeros() as usize;
        out |= m.delta[s][e];
        rest &= rest - 1;
    }
    out
}

/// Words of length at most the bound accepted by one machine but not the other.
#[derive(Debug, Default)]
pub struct Separation {
    pub a_not_b: Option<Word>,
    pub b_not_a: Option<Word>,
    /// Live prefixes visited.
    pub visited: u64,
}

/// Walks every word of length at most `n` over the joint alphabet that is a
/// live prefix of `a` or `b`, comparing acceptance word by word. Stops early
/// once both kinds of separating word are found.
pub fn brute_force_separation(a: &Nfa, b: &Nfa, n: usize) -> Separation {
    let alphabet = alphabet_union(a, b);
    let (ma, mb) = (masks(a, &alphabet), masks(b, &alphabet));
    let mut out = Separation::default();
    let mut word = Vec::new();
    fn walk(
        ma: &Masks,
        mb: &Masks,
        alphabet: &[String],
        (sa, sb): (u64, u64),
        left: usize,
        word: &mut Vec<usize>,
        out: &mut Separation,
    ) {
        if (sa == 0 && sb == 0) || (out.a_not_b.is_some() && out.b_not_a.is_some()) {
            return;
        }
        out.visited += 1;
        let (in_a, in_b) = (sa & ma.acc != 0, sb & mb.acc != 0);
        let render = |w: &[usize]| w.iter().map(|&e| alphabet[e].clone()).collect::<Word>();
        if in_a && !in_b && out.a_not_b.is_none() {
            out.a_not_b = Some(render(word));
        }
        if in_b && !in_a && out.b_not_a.is_none() {
            out.b_not_a = Some(render(word));
        }
        if left == 0 {
            return;
        }
        for e in 0..alphabet.len() {
            word.push(e);
            walk(ma, mb, alphabet, (mask_step(ma, sa, e), mask_step(mb, sb, e)), left - 1, word, out);
            word.pop();
        }
    }
    walk(&ma, &mb, &alphabet, (ma.init, mb.init), n, &mut word, &mut out);
    out
}

/// The pair-of-subsets automaton of `a` and `b` over their joint alphabet.
struct PairDfa {
    alphabet: Vec<String>,
    states: Vec<(BTreeSet<usize>, BTreeSet<usize>)>,
    delta: Vec<Vec<usize>>,
    /// Shortest word reaching each state.
    words: Vec<Word>,
}

fn pair_dfa(a: &Nfa, b: &Nfa) -> PairDfa {
    let alphabet = alphabet_union(a, b);
    let start = (initial_set(a), initial_set(b));
    let mut index = HashMap::from([(start.clone(), 0)]);
    let mut states = vec![start];
    let mut words = vec![Vec::new()];
    let mut delta = Vec::new();
    let mut queue = VecDeque::from([0]);
    while let Some(i) = queue.pop_front() {
        let mut row = Vec::new();
        for e in &alphabet {
            let next = (step(a, &states[i].0, e), step(b, &states[i].1, e));
            let j = *index.entry(next.clone()).or_insert_with(|| {
                states.push(next);
                let mut w = words[i].clone();
                w.push(e.clone());
                words.push(w);
                queue.push_back(states.len() - 1);
                states.len() - 1
            });
            row.push(j);
        }
        delta.push(row);
    }
    PairDfa {
        alphabet,
        states,
        delta,
        words,
    }
}

/// Number of states of the minimized pair automaton, with states labeled by
/// their (accepts in a, accepts in b) combination. Any word separating the
/// languages has length below this bound.
pub fn minimized_product_size(a: &Nfa, b: &Nfa) -> usize {
    let p = pair_dfa(a, b);
    let label = |i: usize| (accepts_set(a, &p.states[i].0), accepts_set(b, &p.states[i].1));
    let mut class: Vec<usize> = {
        let mut ids = HashMap::new();
        (0..p.states.len())
            .map(|i| {
                let n = ids.len();
                *ids.entry(label(i)).or_insert(n)
            })
            .collect()
    };
    loop {
        let mut ids = HashMap::new();
        let next: Vec<usize> = (0..p.states.len())
            .map(|i| {
                let sig = (class[i], p.delta[i].iter().map(|&j| class[j]).collect::<Vec<_>>());
                let n = ids.len();
                *ids.entry(sig).or_insert(n)
            })
            .collect();
        let done = ids.len() == class.iter().collect::<BTreeSet<_>>().len();
        class = next;
        if done {
            return ids.len();
        }
    }
}

/// A shortest word in L(a) \ L(b), if any.
pub fn separating_word(a: &Nfa, b: &Nfa) -> Option<Word> {
    let p = pair_dfa(a, b);
    let _ = &p.alphabet;
    (0..p.states.len())
        .filter(|&i| accepts_set(a, &p.states[i].0) && !accepts_set(b, &p.states[i].1))
        .map(|i| p.words[i].clone())
        .min_by_key(|w| w.len())
}

pub fn oracle_included(a: &Nfa, b: &Nfa) -> bool {
    separating_word(a, b).is_none()
}

pub fn oracle_equivalent(a: &Nfa, b: &Nfa) -> bool {
    oracle_included(a, b) && oracle_included(b, a)
}

/// Membership with `hidden` events treated as silent moves.
pub fn hidden_accepts(m: &Nfa, hidden: &BTreeSet<String>, w: &[String]) -> bool {
    let closure = |set: BTreeSet<usize>| {
        let mut out = set.clone();
        let mut stack: Vec<usize> = set.into_iter().collect();
        while let Some(s) = stack.pop() {
            for t in m.transitions() {
                if t.source == s && hidden.contains(m.event(t.event).as_str()) && out.insert(t.target) {
                    stack.push(t.target);
                }
            }
        }
        out
    };
    let mut cur = closure(initial_set(m));
    for e in w {
        cur = closure(step(m, &cur, e));
    }
    accepts_set(m, &cur)
}

/// Every word of length at most `n` over the visible events accepted when
/// `hidden` events are silent.
pub fn enumerate_hidden_language(m: &Nfa, hidden: &BTreeSet<String>, n: usize) -> BTreeSet<Word> {
    let closure = |set: BTreeSet<usize>| {
        let mut out = set.clone();
        let mut stack: Vec<usize> = set.into_iter().collect();
        while let Some(s) = stack.pop() {
            for t in m.transitions() {
                if t.source == s && hidden.contains(m.event(t.event).as_str()) && out.insert(t.target) {
                    stack.push(t.target);
                }
            }
        }
        out
    };
    let visible: Vec<String> = m
        .alphabet()
        .iter()
        .map(|e| e.as_str().to_string())
        .filter(|e| !hidden.contains(e))
        .collect();
    let mut out = BTreeSet::new();
    let mut stack = vec![(Vec::new(), closure(initial_set(m)))];
    while let Some((w, set)) = stack.pop() {
        if set.is_empty() {
            continue;
        }
        if accepts_set(m, &set) {
            out.insert(w.clone());
        }
        if w.len() == n {
            continue;
        }
        for e in &visible {
            let mut next = w.clone();
            next.push(e.clone());
            stack.push((next, closure(step(m, &set, e))));
        }
    }
    out
}

/// All words over `alphabet` of length at most `n`.
pub fn all_words(alphabet: &[String], n: usize) -> Vec<Word> {
    let mut out = vec![Vec::new()];
    let mut frontier = vec![Vec::new()];
    for _ in 0..n {
        let mut next = Vec::new();
        for w in &frontier {
            for e in alphabet {
                let mut v: Word = w.clone();
                v.push(e.clone());
                next.push(v);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

// ---------------------------------------------------------------------------
// DOT grammar

/// Checks the DOT subset used by the report module: one `digraph`, node and
/// edge statements, attribute lists, `a=b` statements. Returns the declared
/// node ids and the edges.
pub fn parse_dot(text: &str) -> Result<(Vec<String>, Vec<(String, String, BTreeMap<String, String>)>), String> {
    let tokens = tokenize(text)?;
    let mut p = DotParser { tokens, pos: 0 };
    p.expect_keyword("digraph")?;
    if !p.peek_is("{") {
        p.id()?;
    }
    p.expect("{")?;
    let mut nodes = Vec::new();
    let mut edges = Vec::new();
    while !p.peek_is("}") {
        let first = p.id()?;
        if p.peek_is("->") {
            p.pos += 1;
            let second = p.id()?;
            let attrs = p.attrs()?;
            edges.push((first, second, attrs));
        } else if p.peek_is("=") {
            p.pos += 1;
            p.id()?;
        } else {
            p.attrs()?;
            if !matches!(first.as_str(), "node" | "edge" | "graph") {
                nodes.push(first);
            }
        }
        if p.peek_is(";") {
            p.pos += 1;
        }
    }
    p.expect("}")?;
    if p.pos != p.tokens.len() {
        return Err("trailing tokens".into());
    }
    for (a, b, _) in &edges {
        if !nodes.contains(a) || !nodes.contains(b) {
            return Err(format!("edge {a} -> {b} uses an undeclared node"));
        }
    }
    Ok((nodes, edges))
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Punct(&'static str),
    Id(String),
}

fn tokenize(text: &str) -> Result<Vec<Tok>, String> {
    let chars: Vec<char> = text.chars().collect();
    let mut i = 0;
    let mut out = Vec::new();
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c == '-' && chars.get(i + 1) == Some(&'>') {
            out.push(Tok::Punct("->"));
            i += 2;
        } else if let Some(p) = ["{", "}", "[", "]", ";", ",", "="].iter().find(|p| p.starts_with(c)) {
            out.push(Tok::Punct(p));
            i += 1;
        } else if c == '"' {
            let mut s = String::new();
            i += 1;
            loop {
                match chars.get(i) {
                    None => return Err("unterminated string".into()),
                    Some('"') => break,
                    Some('\\') => {
                        s.push('\\');
                        s.push(*chars.get(i + 1).ok_or("dangling escape")?);
                        i += 2;
                    }
                    Some(&ch) => {
                        s.push(ch);
                        i += 1;
                    }
                }
            }
            i += 1;
            out.push(Tok::Id(s));
        } else if c.is_ascii_alphanumeric() || c == '_' || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_' || chars[i] == '.') {
                i += 1;
            }
            let s: String = chars[start..i].iter().collect();
            let numeral = s.chars().all(|c| c.is_ascii_digit() || c == '.');
            let ident = !s.starts_with(|c: char| c.is_ascii_digit()) && !s.contains('.');
            if !numeral && !ident {
                return Err(format!("bad identifier {s}"));
            }
            out.push(Tok::Id(s));
        } else {
            return Err(format!("unexpected character {c:?}"));
        }
    }
    Ok(out)
}

struct DotParser {
    tokens: Vec<Tok>,
    pos: usize,
}

impl DotParser {
    fn peek_is(&self, p: &str) -> bool {
        matches!(self.tokens.get(self.pos), Some(Tok::Punct(q)) if *q == p)
    }

    fn expect(&mut self, p: &str) -> Result<(), String> {
        if self.peek_is(p) {
            self.pos += 1;
            Ok(())
        } else {
            Err(format!("expected {p} at token {}", self.pos))
        }
    }

    fn expect_keyword(&mut self, k: &str) -> Result<(), String> {
        match self.tokens.get(self.pos) {
            Some(Tok::Id(s)) if s == k => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(format!("expected {k}")),
        }
    }

    fn id(&mut self) -> Result<String, String> {
        match self.tokens.get(self.pos) {
            Some(Tok::Id(s)) => {
                self.pos += 1;
                Ok(s.clone())
            }
            other => Err(format!("expected identifier, found {other:?}")),
        }
    }

    fn attrs(&mut self) -> Result<BTreeMap<String, String>, String> {
        let mut out = BTreeMap::new();
        if !self.peek_is("[") {
            return Ok(out);
        }
        self.pos += 1;
        while !self.peek_is("]") {
            let k = self.id()?;
            self.expect("=")?;
            let v = self.id()?;
            out.insert(k, v);
            if self.peek_is(",") || self.peek_is(";") {
                self.pos += 1;
            }
        }
        self.pos += 1;
        Ok(out)
    }
}
