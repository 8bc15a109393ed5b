//! Finite automata over named events and the language-level algorithms on them.
//!
//! Every [`Nfa`] is immutable once built. States and events are kept sorted by
//! name, so two machines compare equal with `==` exactly when they are
//! structurally identical (same state names, same transitions, same flags).

mod dfa;
mod ops;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use dfa::{determinize, minimize, minimize_over, CanonicalDfa};
pub use ops::{
    accepts, bounded_language, bounded_language_with_cap, has_behavior, hide_events,
    intersection, language_equivalent, language_included, union, BOUNDED_LANGUAGE_CAP,
};

/// Index of a state inside an [`Nfa`].
pub type StateId = usize;
/// Index of an event inside an [`Nfa`]'s alphabet.
pub type EventId = usize;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NfaError {
    #[error("invalid name {0:?}: names must be non-empty and contain no whitespace or control characters")]
    InvalidName(String),
    #[error("undeclared state {0:?}")]
    UndeclaredState(String),
    #[error("duplicate declaration of state {0:?}")]
    DuplicateState(String),
    #[error("bounded language enumeration exceeded the cap of {cap} traces")]
    TraceCapExceeded { cap: usize },
}

pub(crate) fn valid_name(name: &str) -> bool {
    !name.is_empty() && !name.chars().any(|c| c.is_whitespace() || c.is_control())
}

/// An observable event such as the start or end of a function call.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Event(String);

impl Event {
    pub fn new(name: impl Into<String>) -> Result<Self, NfaError> {
        let name = name.into();
        if valid_name(&name) {
            Ok(Event(name))
        } else {
            Err(NfaError::InvalidName(name))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for Event {
    type Error = NfaError;
    fn try_from(value: String) -> Result<Self, Self::Error> {
        Event::new(value)
    }
}

impl From<Event> for String {
    fn from(value: Event) -> Self {
        value.0
    }
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl FromStr for Event {
    type Err = NfaError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Event::new(s)
    }
}

/// A single finite execution: an ordered, possibly empty, sequence of events.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Trace(Vec<Event>);

impl Trace {
    pub fn new(events: Vec<Event>) -> Self {
        Trace(events)
    }

    pub fn empty() -> Self {
        Trace(Vec::new())
    }

    pub fn events(&self) -> &[Event] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl From<Vec<Event>> for Trace {
    fn from(events: Vec<Event>) -> Self {
        Trace(events)
    }
}

impl FromIterator<Event> for Trace {
    fn from_iter<I: IntoIterator<Item = Event>>(iter: I) -> Self {
        Trace(iter.into_iter().collect())
    }
}

/// Whitespace-separated event names; the empty string is the empty trace.
impl FromStr for Trace {
    type Err = NfaError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.split_whitespace().map(Event::new).collect()
    }
}

impl fmt::Display for Trace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            f.write_str(e.as_str())?;
        }
        Ok(())
    }
}

/// A transition `(source, event, target)` by index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Transition {
    pub source: StateId,
    pub event: EventId,
    pub target: StateId,
}

/// A nondeterministic finite automaton `(S, Σ, Δ, I, F)`.
///
/// The empty machine (no states, no events) is a valid value and accepts
/// nothing.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Nfa {
    states: Vec<String>,
    alphabet: Vec<Event>,
    transitions: Vec<Transition>,
    initial: Vec<StateId>,
    accepting: Vec<StateId>,
}

impl Nfa {
    /// The machine `(∅, ∅, ∅, ∅, ∅)`.
    pub fn empty() -> Self {
        Nfa::default()
    }

    pub fn builder() -> NfaBuilder {
        NfaBuilder::default()
    }

    /// Assembles a machine from index-based parts, renaming nothing.
    ///
    /// State names must be unique and valid; indices must be in range. States
    /// and events are re-sorted by name and all index sets are deduplicated.
    pub(crate) fn from_parts(
        states: Vec<String>,
        alphabet: Vec<Event>,
        transitions: impl IntoIterator<Item = (StateId, EventId, StateId)>,
        initial: impl IntoIterator<Item = StateId>,
        accepting: impl IntoIterator<Item = StateId>,
    ) -> Nfa {
        let mut state_order: Vec<StateId> = (0..states.len()).collect();
        state_order.sort_by(|&x, &y| states[x].cmp(&states[y]));
        let mut state_map = vec![0; states.len()];
        for (new, &old) in state_order.iter().enumerate() {
            state_map[old] = new;
        }
        let mut event_order: Vec<EventId> = (0..alphabet.len()).collect();
        event_order.sort_by(|&x, &y| alphabet[x].cmp(&alphabet[y]));
        let mut event_map = vec![0; alphabet.len()];
        for (new, &old) in event_order.iter().enumerate() {
            event_map[old] = new;
        }
        debug_assert!(
            event_order.windows(2).all(|w| alphabet[w[0]] != alphabet[w[1]]),
            "duplicate events"
        );

        let mut transitions: Vec<Transition> = transitions
            .into_iter()
            .map(|(s, e, t)| Transition {
                source: state_map[s],
                event: event_map[e],
                target: state_map[t],
            })
            .collect();
        transitions.sort_unstable();
        transitions.dedup();
        let remap = |ids: &mut dyn Iterator<Item = StateId>| -> Vec<StateId> {
            let set: BTreeSet<StateId> = ids.map(|s| state_map[s]).collect();
            set.into_iter().collect()
        };
        let initial = remap(&mut initial.into_iter());
        let accepting = remap(&mut accepting.into_iter());
        let states = state_order.iter().map(|&i| states[i].clone()).collect();
        let alphabet = event_order.iter().map(|&i| alphabet[i].clone()).collect();
        Nfa {
            states,
            alphabet,
            transitions,
            initial,
            accepting,
        }
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn state_name(&self, id: StateId) -> &str {
        &self.states[id]
    }

    pub fn state_id(&self, name: &str) -> Option<StateId> {
        self.states
            .binary_search_by(|s| s.as_str().cmp(name))
            .ok()
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn alphabet(&self) -> &[Event] {
        &self.alphabet
    }

    pub fn event(&self, id: EventId) -> &Event {
        &self.alphabet[id]
    }

    pub fn event_id(&self, event: &Event) -> Option<EventId> {
        self.alphabet.binary_search(event).ok()
    }

    /// Transitions sorted by `(source, event, target)`.
    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn num_transitions(&self) -> usize {
        self.transitions.len()
    }

    pub fn initial(&self) -> &[StateId] {
        &self.initial
    }

    pub fn accepting(&self) -> &[StateId] {
        &self.accepting
    }

    pub fn is_initial(&self, s: StateId) -> bool {
        self.initial.binary_search(&s).is_ok()
    }

    pub fn is_accepting(&self, s: StateId) -> bool {
        self.accepting.binary_search(&s).is_ok()
    }

    /// True for the machine with no states and no events.
    pub fn is_empty_machine(&self) -> bool {
        self.states.is_empty() && self.alphabet.is_empty()
    }

    /// Outgoing `(event, target)` pairs per state.
    pub fn successors(&self) -> Vec<Vec<(EventId, StateId)>> {
        let mut out = vec![Vec::new(); self.states.len()];
        for t in &self.transitions {
            out[t.source].push((t.event, t.target));
        }
        out
    }

    /// Incoming `(event, source)` pairs per state.
    pub fn predecessors(&self) -> Vec<Vec<(EventId, StateId)>> {
        let mut inc = vec![Vec::new(); self.states.len()];
        for t in &self.transitions {
            inc[t.target].push((t.event, t.source));
        }
        for v in &mut inc {
            v.sort_unstable();
        }
        inc
    }

    /// The same machine over `alphabet ∪ extra`.
    pub fn with_alphabet(&self, extra: &[Event]) -> Nfa {
        let union: BTreeSet<&Event> = self.alphabet.iter().chain(extra).collect();
        if union.len() == self.alphabet.len() {
            return self.clone();
        }
        let alphabet: Vec<Event> = union.into_iter().cloned().collect();
        let transitions = self
            .transitions
            .iter()
            .map(|t| {
                let e = alphabet.binary_search(&self.alphabet[t.event]).unwrap();
                (t.source, e, t.target)
            })
            .collect::<Vec<_>>();
        Nfa::from_parts(
            self.states.clone(),
            alphabet,
            transitions,
            self.initial.iter().copied(),
            self.accepting.iter().copied(),
        )
    }
}

/// Sorted union of two alphabets.
pub(crate) fn union_alphabet(a: &[Event], b: &[Event]) -> Vec<Event> {
    let set: BTreeSet<&Event> = a.iter().chain(b).collect();
    set.into_iter().cloned().collect()
}

/// Name-based construction of an [`Nfa`] with invariant checking.
#[derive(Debug, Default, Clone)]
pub struct NfaBuilder {
    states: BTreeMap<String, (bool, bool)>,
    alphabet: BTreeSet<Event>,
    transitions: Vec<(String, Event, String)>,
    duplicate: Option<String>,
}

impl NfaBuilder {
    pub fn state(mut self, name: impl Into<String>, initial: bool, accepting: bool) -> Self {
        self.add_state(name, initial, accepting);
        self
    }

    pub fn add_state(&mut self, name: impl Into<String>, initial: bool, accepting: bool) {
        let name = name.into();
        match self.states.entry(name) {
            std::collections::btree_map::Entry::Occupied(e) => {
                self.duplicate.get_or_insert(e.key().clone());
            }
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert((initial, accepting));
            }
        }
    }

    pub fn event(mut self, event: Event) -> Self {
        self.alphabet.insert(event);
        self
    }

    pub fn add_event(&mut self, event: Event) {
        self.alphabet.insert(event);
    }

    pub fn transition(mut self, source: impl Into<String>, event: &str, target: impl Into<String>) -> Self {
        // Invalid event names surface from `build`.
        self.transitions
            .push((source.into(), Event(event.to_string()), target.into()));
        self
    }

    pub fn add_transition(&mut self, source: impl Into<String>, event: Event, target: impl Into<String>) {
        self.transitions.push((source.into(), event, target.into()));
    }

    pub fn build(self) -> Result<Nfa, NfaError> {
        if let Some(dup) = self.duplicate {
            return Err(NfaError::DuplicateState(dup));
        }
        for name in self.states.keys() {
            if !valid_name(name) {
                return Err(NfaError::InvalidName(name.clone()));
            }
        }
        let mut alphabet = self.alphabet;
        for (_, e, _) in &self.transitions {
            if !valid_name(e.as_str()) {
                return Err(NfaError::InvalidName(e.as_str().to_string()));
            }
            alphabet.insert(e.clone());
        }
        let alphabet: Vec<Event> = alphabet.into_iter().collect();
        let names: Vec<String> = self.states.keys().cloned().collect();
        let lookup = |n: &str| {
            names
                .binary_search_by(|s| s.as_str().cmp(n))
                .map_err(|_| NfaError::UndeclaredState(n.to_string()))
        };
        let mut transitions = Vec::with_capacity(self.transitions.len());
        for (s, e, t) in &self.transitions {
            let s = lookup(s)?;
            let t = lookup(t)?;
            let e = alphabet.binary_search(e).unwrap();
            transitions.push((s, e, t));
        }
        let initial = self
            .states
            .values()
            .enumerate()
            .filter(|(_, f)| f.0)
            .map(|(i, _)| i)
            .collect::<Vec<_>>();
        let accepting = self
            .states
            .values()
            .enumerate()
            .filter(|(_, f)| f.1)
            .map(|(i, _)| i)
            .collect::<Vec<_>>();
        Ok(Nfa::from_parts(names, alphabet, transitions, initial, accepting))
    }
}
