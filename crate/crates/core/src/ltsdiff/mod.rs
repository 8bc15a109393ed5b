//! Structural comparison of two state machines.
//!
//! The procedure has three steps: score every pair of states for similarity,
//! match states starting from high-confidence landmark pairs, and turn the
//! matching into a [`DiffMachine`] whose states and transitions are annotated
//! as unchanged, added or removed. Neither machine needs to be deterministic,
//! minimal, or free of unreachable states.

mod scores;

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::automata::{Event, Nfa, StateId};

pub use scores::{global_scores, global_scores_traced, local_scores, GlobalScores, ScoreTable};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DiffError {
    #[error("invalid diff parameter: {0}")]
    InvalidParams(String),
    #[error("matching is not injective: state {0:?} is matched twice")]
    NotInjective(String),
    #[error("matching refers to a state index {0} that does not exist")]
    UnknownState(StateId),
}

/// Tuning knobs of the structural comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiffParams {
    /// Weight of neighboring context relative to a pair's own local score.
    pub attenuation: f64,
    pub convergence_epsilon: f64,
    pub max_iterations: usize,
    /// Fraction of the smaller state count considered for landmarks.
    pub landmark_fraction: f64,
    /// How much better than its competitors a landmark pair must score.
    pub landmark_ratio: f64,
}

impl Default for DiffParams {
    fn default() -> Self {
        DiffParams {
            attenuation: 0.5,
            convergence_epsilon: 1e-9,
            max_iterations: 1000,
            landmark_fraction: 0.25,
            landmark_ratio: 1.5,
        }
    }
}

impl DiffParams {
    // Comparisons are negated so that NaN fails them.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<(), DiffError> {
        let bad = |msg: String| Err(DiffError::InvalidParams(msg));
        if !(self.attenuation > 0.0 && self.attenuation < 1.0) {
            return bad(format!("attenuation must be in (0,1), got {}", self.attenuation));
        }
        if !(self.convergence_epsilon >= 0.0) {
            return bad(format!(
                "convergence epsilon must be non-negative, got {}",
                self.convergence_epsilon
            ));
        }
        if self.max_iterations < 1 {
            return bad("max iterations must be at least 1".into());
        }
        if !(self.landmark_fraction > 0.0 && self.landmark_fraction <= 1.0) {
            return bad(format!(
                "landmark fraction must be in (0,1], got {}",
                self.landmark_fraction
            ));
        }
        if !(self.landmark_ratio >= 1.0) {
            return bad(format!("landmark ratio must be at least 1, got {}", self.landmark_ratio));
        }
        Ok(())
    }
}

/// An injective set of `(state of A, state of B)` pairs.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Matching {
    pairs: BTreeSet<(StateId, StateId)>,
}

impl Matching {
    pub fn new(pairs: impl IntoIterator<Item = (StateId, StateId)>) -> Result<Self, DiffError> {
        let pairs: BTreeSet<_> = pairs.into_iter().collect();
        let mut left = BTreeSet::new();
        let mut right = BTreeSet::new();
        for &(p, q) in &pairs {
            if !left.insert(p) {
                return Err(DiffError::NotInjective(format!("A#{p}")));
            }
            if !right.insert(q) {
                return Err(DiffError::NotInjective(format!("B#{q}")));
            }
        }
        Ok(Matching { pairs })
    }

    pub fn pairs(&self) -> &BTreeSet<(StateId, StateId)> {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn contains(&self, p: StateId, q: StateId) -> bool {
        self.pairs.contains(&(p, q))
    }
}

/// Descending score, then ascending `(a, b)`; state ids follow name order.
fn by_score(x: &(f64, StateId, StateId), y: &(f64, StateId, StateId)) -> Ordering {
    y.0.total_cmp(&x.0).then((x.1, x.2).cmp(&(y.1, y.2)))
}

/// Picks landmark pairs that clearly dominate their row and column.
///
/// Falls back to the pair of smallest-named initial states when no pair
/// qualifies, or to nothing when either machine lacks initial states.
pub fn select_landmarks(scores: &ScoreTable, a: &Nfa, b: &Nfa, params: &DiffParams) -> Matching {
    let (rows, cols) = (a.num_states(), b.num_states());
    debug_assert_eq!((rows, cols), (scores.rows(), scores.cols()));
    if rows == 0 || cols == 0 {
        return Matching::default();
    }
    let mut ranked: Vec<(f64, StateId, StateId)> = (0..rows)
        .flat_map(|p| (0..cols).map(move |q| (p, q)))
        .map(|(p, q)| (scores.get(p, q), p, q))
        .collect();
    ranked.sort_by(by_score);
    let top = ((params.landmark_fraction * rows.min(cols) as f64).ceil() as usize).max(1);

    let dominates = |s: f64, p: StateId, q: StateId| {
        s > 0.0
            && (0..cols).all(|y| y == q || s >= params.landmark_ratio * scores.get(p, y))
            && (0..rows).all(|x| x == p || s >= params.landmark_ratio * scores.get(x, q))
    };
    let mut used_a = BTreeSet::new();
    let mut used_b = BTreeSet::new();
    let mut pairs = Vec::new();
    for &(s, p, q) in ranked.iter().take(top) {
        if dominates(s, p, q) && !used_a.contains(&p) && !used_b.contains(&q) {
            used_a.insert(p);
            used_b.insert(q);
            pairs.push((p, q));
        }
    }
    if pairs.is_empty() {
        if let (Some(&p), Some(&q)) = (a.initial().first(), b.initial().first()) {
            pairs.push((p, q));
        }
    }
    Matching::new(pairs).expect("greedy selection is injective")
}

/// Grows `landmarks` into a full matching.
///
/// Neighbors of matched pairs (linked by a shared event in either direction)
/// are preferred; once none is available the best remaining positive-scoring
/// pair anywhere is taken. Conflicting pairs are never added.
pub fn compute_matching(a: &Nfa, b: &Nfa, scores: &ScoreTable, landmarks: &Matching) -> Matching {
    let neighbors = scores::neighbor_pairs(a, b);
    let mut matched_a = vec![false; a.num_states()];
    let mut matched_b = vec![false; b.num_states()];
    let mut pairs: BTreeSet<(StateId, StateId)> = BTreeSet::new();
    for &(p, q) in landmarks.pairs() {
        matched_a[p] = true;
        matched_b[q] = true;
        pairs.insert((p, q));
    }
    let best = |candidates: &mut dyn Iterator<Item = (StateId, StateId)>| {
        candidates
            .map(|(p, q)| (scores.get(p, q), p, q))
            .min_by(by_score)
    };
    loop {
        let pool = pairs
            .iter()
            .flat_map(|&(p, q)| neighbors(p, q))
            .filter(|&(x, y)| !matched_a[x] && !matched_b[y]);
        let next = best(&mut pool.into_iter()).or_else(|| {
            let mut all = (0..a.num_states())
                .filter(|&p| !matched_a[p])
                .flat_map(|p| (0..b.num_states()).map(move |q| (p, q)))
                .filter(|&(p, q)| !matched_b[q] && scores.get(p, q) > 0.0);
            best(&mut all)
        });
        match next {
            Some((_, p, q)) => {
                matched_a[p] = true;
                matched_b[q] = true;
                pairs.insert((p, q));
            }
            None => break,
        }
    }
    Matching { pairs }
}

/// Difference annotation of a diff-machine element.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Annotation {
    Unchanged,
    Removed,
    Added,
}

impl Annotation {
    pub fn as_str(self) -> &'static str {
        match self {
            Annotation::Unchanged => "unchanged",
            Annotation::Removed => "removed",
            Annotation::Added => "added",
        }
    }

    fn from_sides(in_a: bool, in_b: bool) -> Option<Annotation> {
        match (in_a, in_b) {
            (true, true) => Some(Annotation::Unchanged),
            (true, false) => Some(Annotation::Removed),
            (false, true) => Some(Annotation::Added),
            (false, false) => None,
        }
    }

    fn in_source(self) -> bool {
        self != Annotation::Added
    }

    fn in_target(self) -> bool {
        self != Annotation::Removed
    }
}

impl fmt::Display for Annotation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiffState {
    pub annotation: Annotation,
    /// Name of the originating state in the source machine, if any.
    pub source: Option<String>,
    /// Name of the originating state in the target machine, if any.
    pub target: Option<String>,
    /// Initial-state membership; `None` when initial on neither side.
    pub initial: Option<Annotation>,
    pub accepting: Option<Annotation>,
}

impl DiffState {
    /// A display name: the source name, or the target name for added states.
    pub fn name(&self) -> &str {
        self.source
            .as_deref()
            .or(self.target.as_deref())
            .unwrap_or_default()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DiffTransition {
    pub source: usize,
    pub event: Event,
    pub target: usize,
    pub annotation: Annotation,
}

/// A state machine annotated with differences between a source and a target.
///
/// States are ordered unchanged (by source name), then removed (by source
/// name), then added (by target name).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiffMachine {
    pub states: Vec<DiffState>,
    pub transitions: Vec<DiffTransition>,
    pub source_alphabet: Vec<Event>,
    pub target_alphabet: Vec<Event>,
}

/// Counts of annotated elements in a [`DiffMachine`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiffStats {
    pub added_transitions: usize,
    pub removed_transitions: usize,
    pub added_states: usize,
    pub removed_states: usize,
}

impl fmt::Display for DiffStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "added={} removed={} added_states={} removed_states={}",
            self.added_transitions, self.removed_transitions, self.added_states, self.removed_states
        )
    }
}

impl DiffMachine {
    pub fn stats(&self) -> DiffStats {
        diff_stats(self)
    }

    fn project(&self, keep: fn(Annotation) -> bool, source_side: bool) -> Nfa {
        let mut builder = Nfa::builder();
        let side_name = |s: &DiffState| {
            if source_side {
                s.source.clone()
            } else {
                s.target.clone()
            }
        };
        let alphabet = if source_side {
            &self.source_alphabet
        } else {
            &self.target_alphabet
        };
        for e in alphabet {
            builder.add_event(e.clone());
        }
        for s in &self.states {
            if keep(s.annotation) {
                let name = side_name(s).expect("kept state has a name on this side");
                builder.add_state(
                    name,
                    s.initial.is_some_and(keep),
                    s.accepting.is_some_and(keep),
                );
            }
        }
        for t in &self.transitions {
            if keep(t.annotation) {
                let src = side_name(&self.states[t.source]).expect("endpoint on this side");
                let dst = side_name(&self.states[t.target]).expect("endpoint on this side");
                builder.add_transition(src, t.event.clone(), dst);
            }
        }
        builder.build().expect("projection of a well-formed diff")
    }

    /// The unchanged and removed elements, named as in the source machine.
    pub fn project_source(&self) -> Nfa {
        self.project(Annotation::in_source, true)
    }

    /// The unchanged and added elements, named as in the target machine.
    pub fn project_target(&self) -> Nfa {
        self.project(Annotation::in_target, false)
    }
}

/// Builds the annotated diff machine for a given matching.
pub fn build_diff(a: &Nfa, b: &Nfa, matching: &Matching) -> Result<DiffMachine, DiffError> {
    let mut partner_of_a: Vec<Option<StateId>> = vec![None; a.num_states()];
    let mut partner_of_b: Vec<Option<StateId>> = vec![None; b.num_states()];
    for &(p, q) in matching.pairs() {
        if p >= a.num_states() {
            return Err(DiffError::UnknownState(p));
        }
        if q >= b.num_states() {
            return Err(DiffError::UnknownState(q));
        }
        if partner_of_a[p].replace(q).is_some() {
            return Err(DiffError::NotInjective(a.state_name(p).to_string()));
        }
        if partner_of_b[q].replace(p).is_some() {
            return Err(DiffError::NotInjective(b.state_name(q).to_string()));
        }
    }

    let mut states = Vec::new();
    let mut diff_of_a = vec![usize::MAX; a.num_states()];
    let mut diff_of_b = vec![usize::MAX; b.num_states()];
    for &(p, q) in matching.pairs() {
        diff_of_a[p] = states.len();
        diff_of_b[q] = states.len();
        states.push(DiffState {
            annotation: Annotation::Unchanged,
            source: Some(a.state_name(p).to_string()),
            target: Some(b.state_name(q).to_string()),
            initial: Annotation::from_sides(a.is_initial(p), b.is_initial(q)),
            accepting: Annotation::from_sides(a.is_accepting(p), b.is_accepting(q)),
        });
    }
    for p in (0..a.num_states()).filter(|&p| partner_of_a[p].is_none()) {
        diff_of_a[p] = states.len();
        states.push(DiffState {
            annotation: Annotation::Removed,
            source: Some(a.state_name(p).to_string()),
            target: None,
            initial: Annotation::from_sides(a.is_initial(p), false),
            accepting: Annotation::from_sides(a.is_accepting(p), false),
        });
    }
    for q in (0..b.num_states()).filter(|&q| partner_of_b[q].is_none()) {
        diff_of_b[q] = states.len();
        states.push(DiffState {
            annotation: Annotation::Added,
            source: None,
            target: Some(b.state_name(q).to_string()),
            initial: Annotation::from_sides(false, b.is_initial(q)),
            accepting: Annotation::from_sides(false, b.is_accepting(q)),
        });
    }

    let b_transitions: BTreeSet<(StateId, &Event, StateId)> = b
        .transitions()
        .iter()
        .map(|t| (t.source, b.event(t.event), t.target))
        .collect();
    let mut used_b = BTreeSet::new();
    let mut transitions = Vec::new();
    for t in a.transitions() {
        let event = a.event(t.event);
        let counterpart = match (partner_of_a[t.source], partner_of_a[t.target]) {
            (Some(q), Some(q2)) if b_transitions.contains(&(q, event, q2)) => Some((q, event, q2)),
            _ => None,
        };
        let annotation = match counterpart {
            Some(key) => {
                used_b.insert(key);
                Annotation::Unchanged
            }
            None => Annotation::Removed,
        };
        transitions.push(DiffTransition {
            source: diff_of_a[t.source],
            event: event.clone(),
            target: diff_of_a[t.target],
            annotation,
        });
    }
    for &(q, event, q2) in &b_transitions {
        if !used_b.contains(&(q, event, q2)) {
            transitions.push(DiffTransition {
                source: diff_of_b[q],
                event: event.clone(),
                target: diff_of_b[q2],
                annotation: Annotation::Added,
            });
        }
    }
    transitions.sort();

    Ok(DiffMachine {
        states,
        transitions,
        source_alphabet: a.alphabet().to_vec(),
        target_alphabet: b.alphabet().to_vec(),
    })
}

/// Full structural diff from `a` (source) to `b` (target).
pub fn diff(a: &Nfa, b: &Nfa, params: &DiffParams) -> DiffMachine {
    let scores = global_scores(a, b, params);
    let landmarks = select_landmarks(&scores, a, b, params);
    let matching = compute_matching(a, b, &scores, &landmarks);
    build_diff(a, b, &matching).expect("computed matching is injective")
}

pub fn diff_stats(d: &DiffMachine) -> DiffStats {
    let mut stats = DiffStats::default();
    for s in &d.states {
        match s.annotation {
            Annotation::Added => stats.added_states += 1,
            Annotation::Removed => stats.removed_states += 1,
            Annotation::Unchanged => {}
        }
    }
    for t in &d.transitions {
        match t.annotation {
            Annotation::Added => stats.added_transitions += 1,
            Annotation::Removed => stats.removed_transitions += 1,
            Annotation::Unchanged => {}
        }
    }
    stats
}
