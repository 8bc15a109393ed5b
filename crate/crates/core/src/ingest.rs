//! File formats: `.nfa` machines, execution logs and workspace directories.
//!
//! The `.nfa` format is line based:
//!
//! ```text
//! # comment
//! nfa v1
//! alphabet a b c
//! state s1 initial accepting
//! state s2
//! trans s1 a s2
//! ```
//!
//! `#` starts a comment, blank lines are ignored and tokens may be separated
//! by any whitespace. The `alphabet` directive is optional; events used by
//! transitions are always part of the alphabet. States may be referenced
//! before they are declared.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::automata::{hide_events, valid_name, Event, Nfa, NfaBuilder, Trace};
use crate::model_sets::{EntityId, ModelSetError, Workspace};
use crate::par;

pub const NFA_HEADER: &str = "nfa v1";
pub const NFA_EXTENSION: &str = "nfa";

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: undeclared state {state}")]
    UndeclaredState { line: usize, state: String },
    #[error("line {line}: duplicate declaration of state {state}")]
    DuplicateState { line: usize, state: String },
    #[error("{}: {source}", path.display())]
    InFile {
        path: PathBuf,
        #[source]
        source: Box<IngestError>,
    },
    #[error("cannot read {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{} error(s):\n{}", .0.len(), .0.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("\n"))]
    Multiple(Vec<IngestError>),
    #[error("no model sets found in {}", .0.display())]
    NoModelSets(PathBuf),
    #[error("invalid hiding pattern {0:?}: only literal characters and `*` are allowed")]
    InvalidPattern(String),
    #[error(transparent)]
    ModelSet(#[from] ModelSetError),
}

impl IngestError {
    fn syntax(line: usize, message: impl Into<String>) -> Self {
        IngestError::Syntax {
            line,
            message: message.into(),
        }
    }

    fn in_file(self, path: &Path) -> Self {
        IngestError::InFile {
            path: path.to_path_buf(),
            source: Box::new(self),
        }
    }
}

/// Parses the `.nfa` text format.
pub fn parse_nfa(text: &str) -> Result<Nfa, IngestError> {
    let mut header_seen = false;
    let mut builder = NfaBuilder::default();
    let mut declared: BTreeMap<String, usize> = BTreeMap::new();
    let mut references: Vec<(usize, String)> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or_default();
        let tokens: Vec<&str> = content.split_whitespace().collect();
        if tokens.is_empty() {
            continue;
        }
        if !header_seen {
            if tokens != ["nfa", "v1"] {
                return Err(IngestError::syntax(line, format!("expected header `{NFA_HEADER}`")));
            }
            header_seen = true;
            continue;
        }
        match tokens[0] {
            "state" => {
                let name = *tokens
                    .get(1)
                    .ok_or_else(|| IngestError::syntax(line, "`state` needs a name"))?;
                let (mut initial, mut accepting) = (false, false);
                for flag in &tokens[2..] {
                    let slot = match *flag {
                        "initial" => &mut initial,
                        "accepting" => &mut accepting,
                        other => {
                            return Err(IngestError::syntax(line, format!("unknown state flag `{other}`")))
                        }
                    };
                    if *slot {
                        return Err(IngestError::syntax(line, format!("repeated state flag `{flag}`")));
                    }
                    *slot = true;
                }
                if !valid_name(name) {
                    return Err(IngestError::syntax(line, format!("invalid state name `{name}`")));
                }
                if declared.insert(name.to_string(), line).is_some() {
                    return Err(IngestError::DuplicateState {
                        line,
                        state: name.to_string(),
                    });
                }
                builder.add_state(name, initial, accepting);
            }
            "trans" => {
                let [_, src, event, dst] = tokens[..] else {
                    return Err(IngestError::syntax(line, "expected `trans <source> <event> <target>`"));
                };
                let event = Event::new(event).map_err(|e| IngestError::syntax(line, e.to_string()))?;
                references.push((line, src.to_string()));
                references.push((line, dst.to_string()));
                builder.add_transition(src, event, dst);
            }
            "alphabet" => {
                for name in &tokens[1..] {
                    let event = Event::new(*name).map_err(|e| IngestError::syntax(line, e.to_string()))?;
                    builder.add_event(event);
                }
            }
            other => {
                return Err(IngestError::syntax(line, format!("unknown directive `{other}`")));
            }
        }
    }
    if !header_seen {
        return Err(IngestError::syntax(1, format!("missing header `{NFA_HEADER}`")));
    }
    if let Some((line, state)) = references.into_iter().find(|(_, s)| !declared.contains_key(s)) {
        return Err(IngestError::UndeclaredState { line, state });
    }
    builder
        .build()
        .map_err(|e| IngestError::syntax(0, e.to_string()))
}

/// Canonical serialization: sorted states and transitions, single spaces.
pub fn write_nfa(machine: &Nfa) -> String {
    let mut out = String::from(NFA_HEADER);
    out.push('\n');
    if !machine.alphabet().is_empty() {
        out.push_str("alphabet");
        for e in machine.alphabet() {
            out.push(' ');
            out.push_str(e.as_str());
        }
        out.push('\n');
    }
    for (id, name) in machine.states().iter().enumerate() {
        out.push_str("state ");
        out.push_str(name);
        if machine.is_initial(id) {
            out.push_str(" initial");
        }
        if machine.is_accepting(id) {
            out.push_str(" accepting");
        }
        out.push('\n');
    }
    for t in machine.transitions() {
        let _ = writeln!(
            out,
            "trans {} {} {}",
            machine.state_name(t.source),
            machine.event(t.event),
            machine.state_name(t.target)
        );
    }
    out
}

/// One trace per line, whitespace-separated events; an empty line is the
/// empty trace.
pub fn parse_log(text: &str) -> Result<Vec<Trace>, IngestError> {
    text.lines()
        .enumerate()
        .map(|(i, line)| {
            line.parse::<Trace>()
                .map_err(|e| IngestError::syntax(i + 1, e.to_string()))
        })
        .collect()
}

/// The prefix-tree acceptor of `traces`: a tree-shaped DFA accepting exactly
/// the given traces. An empty list yields the empty machine.
pub fn build_pta(traces: &[Trace]) -> Nfa {
    if traces.is_empty() {
        return Nfa::empty();
    }
    struct Node {
        children: BTreeMap<Event, usize>,
        accepting: bool,
    }
    let mut nodes = vec![Node {
        children: BTreeMap::new(),
        accepting: false,
    }];
    for trace in traces {
        let mut at = 0;
        for e in trace.events() {
            at = match nodes[at].children.get(e) {
                Some(&c) => c,
                None => {
                    nodes.push(Node {
                        children: BTreeMap::new(),
                        accepting: false,
                    });
                    let c = nodes.len() - 1;
                    nodes[at].children.insert(e.clone(), c);
                    c
                }
            };
        }
        nodes[at].accepting = true;
    }
    // Number nodes breadth-first over sorted events.
    let mut order = vec![0];
    let mut i = 0;
    while i < order.len() {
        order.extend(nodes[order[i]].children.values().copied());
        i += 1;
    }
    let width = (nodes.len() - 1).to_string().len();
    let mut builder = NfaBuilder::default();
    let name = |pos: usize| format!("n{pos:0width$}");
    let mut position = vec![0; nodes.len()];
    for (pos, &n) in order.iter().enumerate() {
        position[n] = pos;
    }
    for (pos, &n) in order.iter().enumerate() {
        builder.add_state(name(pos), pos == 0, nodes[n].accepting);
    }
    for &n in &order {
        for (e, &c) in &nodes[n].children {
            builder.add_transition(name(position[n]), e.clone(), name(position[c]));
        }
    }
    builder.build().expect("prefix tree is well formed")
}

/// Event-name glob patterns whose events are hidden at load time.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct HidingConfig {
    patterns: Vec<String>,
}

impl HidingConfig {
    pub fn new(patterns: impl IntoIterator<Item = impl Into<String>>) -> Result<Self, IngestError> {
        let patterns: Vec<String> = patterns.into_iter().map(Into::into).collect();
        for p in &patterns {
            let bad = p.is_empty()
                || p.chars()
                    .any(|c| c.is_whitespace() || c.is_control() || matches!(c, '?' | '[' | ']'));
            if bad {
                return Err(IngestError::InvalidPattern(p.clone()));
            }
        }
        Ok(HidingConfig { patterns })
    }

    pub fn patterns(&self) -> &[String] {
        &self.patterns
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    pub fn matches(&self, event: &Event) -> bool {
        self.patterns.iter().any(|p| glob_match(p, event.as_str()))
    }

    /// Hides every matching event of `machine`.
    pub fn apply(&self, machine: &Nfa) -> Nfa {
        let hidden: BTreeSet<Event> = machine
            .alphabet()
            .iter()
            .filter(|e| self.matches(e))
            .cloned()
            .collect();
        hide_events(machine, &hidden)
    }
}

fn glob_match(pattern: &str, text: &str) -> bool {
    let parts: Vec<&str> = pattern.split('*').collect();
    if parts.len() == 1 {
        return pattern == text;
    }
    let (first, last) = (parts[0], parts[parts.len() - 1]);
    if text.len() < first.len() + last.len() || !text.starts_with(first) || !text.ends_with(last) {
        return false;
    }
    let mut rest = &text[first.len()..text.len() - last.len()];
    for part in &parts[1..parts.len() - 1] {
        match rest.find(part) {
            Some(i) => rest = &rest[i + part.len()..],
            None => return false,
        }
    }
    true
}

/// Reads and parses one `.nfa` file, attaching the path to any error.
pub fn read_nfa(path: &Path) -> Result<Nfa, IngestError> {
    let text = fs::read_to_string(path).map_err(|source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_nfa(&text).map_err(|e| e.in_file(path))
}

fn sorted_entries(dir: &Path) -> Result<Vec<(String, PathBuf, bool)>, IngestError> {
    let io_err = |source| IngestError::Io {
        path: dir.to_path_buf(),
        source,
    };
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(io_err)? {
        let entry = entry.map_err(io_err)?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if name.starts_with('.') {
            continue;
        }
        let is_dir = entry.file_type().map_err(io_err)?.is_dir();
        out.push((name, entry.path(), is_dir));
    }
    out.sort();
    Ok(out)
}

/// Loads `<root>/<model-set>/<entity>.nfa` into a workspace.
///
/// Model sets and entities are ordered by name. Entities missing from a model
/// set get the empty machine. Hiding is applied to every machine right after
/// parsing; parse errors from all files are reported together.
pub fn load_workspace(root: &Path, hiding: &HidingConfig) -> Result<Workspace, IngestError> {
    let mut files = Vec::new();
    let mut set_names = Vec::new();
    for (set_name, set_path, is_dir) in sorted_entries(root)? {
        if !is_dir {
            continue;
        }
        set_names.push(set_name.clone());
        for (file_name, path, is_dir) in sorted_entries(&set_path)? {
            let Some(stem) = file_name.strip_suffix(&format!(".{NFA_EXTENSION}")) else {
                continue;
            };
            if !is_dir {
                files.push((set_name.clone(), stem.to_string(), path));
            }
        }
    }
    if set_names.is_empty() {
        return Err(IngestError::NoModelSets(root.to_path_buf()));
    }

    let parsed = par::map(&files, |(_, entity, path)| -> Result<(EntityId, Nfa), IngestError> {
        let entity = EntityId::new(entity.clone()).map_err(|e| IngestError::from(e).in_file(path))?;
        let machine = read_nfa(path)?;
        let machine = if hiding.is_empty() {
            machine
        } else {
            hiding.apply(&machine)
        };
        Ok((entity, machine))
    });

    let mut errors = Vec::new();
    let mut sets: BTreeMap<String, BTreeMap<EntityId, Nfa>> =
        set_names.iter().map(|n| (n.clone(), BTreeMap::new())).collect();
    for ((set, _, _), result) in files.iter().zip(parsed) {
        match result {
            Ok((entity, machine)) => {
                sets.get_mut(set).unwrap().insert(entity, machine);
            }
            Err(e) => errors.push(e),
        }
    }
    match errors.len() {
        0 => {}
        1 => return Err(errors.pop().unwrap()),
        _ => return Err(IngestError::Multiple(errors)),
    }
    let ordered = set_names
        .into_iter()
        .map(|n| {
            let models = sets.remove(&n).unwrap();
            (n, models)
        })
        .collect();
    Ok(Workspace::from_partial(ordered)?)
}
