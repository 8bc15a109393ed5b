//! JSON, CSV and DOT renderings of level results.
//!
//! Every rendering is a pure function of its input. JSON objects use sorted
//! keys, so parsing a report and serializing it again reproduces it byte for
//! byte. The JSON layout is described in `docs/report-format.md`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::automata::Nfa;
use crate::levels::{DiffMatrix, EdgeLabel, Lattice, NodeKind, VariantPartition};
use crate::ltsdiff::{Annotation, DiffMachine, DiffParams};
use crate::model_sets::ModelSet;

/// Token written for models without behavior.
pub const ABSENT: &str = "absent";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunMetadata {
    pub tool: String,
    pub version: String,
    pub input: String,
    pub levels: Vec<u8>,
    pub params: DiffParams,
    pub hidden: Vec<String>,
    pub node_cap: usize,
}

impl RunMetadata {
    pub fn new(input: impl Into<String>, levels: Vec<u8>, params: DiffParams, hidden: Vec<String>, node_cap: usize) -> Self {
        RunMetadata {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            input: input.into(),
            levels,
            params,
            hidden,
            node_cap,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Level6Diff {
    pub entity: String,
    pub from: String,
    pub to: String,
    pub diff: DiffMachine,
}

/// Everything one `compare` run produced.
#[derive(Debug, Clone)]
pub struct ReportBundle {
    pub metadata: RunMetadata,
    pub model_sets: Vec<String>,
    pub entities: Vec<String>,
    pub level1: Option<VariantPartition>,
    pub level2: Option<Lattice<ModelSet>>,
    pub level3: Option<DiffMatrix>,
    pub level4: Option<Vec<VariantPartition>>,
    pub level5: BTreeMap<String, Lattice<Nfa>>,
    pub level6: Vec<Level6Diff>,
}

fn partition_json(p: &VariantPartition) -> Value {
    let mut variants = Map::new();
    let mut heat = Map::new();
    for (i, name) in p.members.iter().enumerate() {
        variants.insert(name.clone(), p.label_of(i).map_or(Value::Null, |l| json!(l)));
        heat.insert(name.clone(), p.heat_of(i).map_or(Value::Null, |h| json!(h)));
    }
    let classes: Map<String, Value> = p
        .classes
        .iter()
        .map(|c| {
            let members: Vec<&str> = c.members.iter().map(|&m| p.members[m].as_str()).collect();
            (c.label.clone(), json!(members))
        })
        .collect();
    json!({ "variants": variants, "classes": classes, "heat": heat })
}

fn lattice_json<P>(lattice: &Lattice<P>) -> Value {
    let label = |i: usize| lattice.nodes[i].label.as_str();
    let nodes: Vec<Value> = lattice
        .nodes
        .iter()
        .map(|n| {
            json!({
                "label": n.label,
                "kind": n.kind,
                "members": n.members,
                "measure": n.measure,
                "derivation": n.derivation,
            })
        })
        .collect();
    let edges: Vec<Value> = lattice
        .edges
        .iter()
        .map(|e| {
            let mut obj = json!({ "lower": label(e.lower), "upper": label(e.upper) });
            let extra = serde_json::to_value(e.label).expect("edge labels serialize");
            if let (Value::Object(o), Value::Object(x)) = (&mut obj, extra) {
                o.extend(x);
            }
            obj
        })
        .collect();
    json!({ "nodes": nodes, "edges": edges })
}

fn matrix_json(m: &DiffMatrix) -> Value {
    let n = m.size();
    let values: Vec<Vec<Option<usize>>> = (0..n).map(|i| (0..n).map(|j| m.get(i, j)).collect()).collect();
    let heat: Vec<Vec<Option<u8>>> = (0..n).map(|i| (0..n).map(|j| m.heat(i, j)).collect()).collect();
    json!({ "model_sets": m.model_sets, "values": values, "heat": heat, "max": m.max() })
}

fn diff_json(d: &Level6Diff) -> Value {
    json!({
        "entity": d.entity,
        "from": d.from,
        "to": d.to,
        "stats": d.diff.stats(),
        "states": d.diff.states,
        "transitions": d.diff.transitions,
    })
}

/// The report as a JSON value with sorted object keys.
pub fn to_json_value(bundle: &ReportBundle) -> Value {
    let mut root = Map::new();
    root.insert("metadata".into(), serde_json::to_value(&bundle.metadata).expect("metadata serializes"));
    root.insert("model_sets".into(), json!(bundle.model_sets));
    root.insert("entities".into(), json!(bundle.entities));
    if let Some(p) = &bundle.level1 {
        root.insert("level1".into(), partition_json(p));
    }
    if let Some(l) = &bundle.level2 {
        root.insert("level2".into(), lattice_json(l));
    }
    if let Some(m) = &bundle.level3 {
        root.insert("level3".into(), matrix_json(m));
    }
    if let Some(parts) = &bundle.level4 {
        let table: Map<String, Value> = bundle
            .entities
            .iter()
            .zip(parts)
            .map(|(e, p)| (e.clone(), partition_json(p)))
            .collect();
        root.insert("level4".into(), Value::Object(table));
    }
    if !bundle.level5.is_empty() {
        let lattices: Map<String, Value> = bundle
            .level5
            .iter()
            .map(|(e, l)| (e.clone(), lattice_json(l)))
            .collect();
        root.insert("level5".into(), Value::Object(lattices));
    }
    if !bundle.level6.is_empty() {
        root.insert("level6".into(), bundle.level6.iter().map(diff_json).collect());
    }
    Value::Object(root)
}

/// Pretty-printed JSON with a trailing newline.
pub fn to_json(bundle: &ReportBundle) -> String {
    json_text(&to_json_value(bundle))
}

/// Serializes any JSON value the way [`to_json`] does.
pub fn json_text(value: &Value) -> String {
    let mut out = serde_json::to_string_pretty(value).expect("values serialize");
    out.push('\n');
    out
}

fn csv_text(rows: Vec<Vec<String>>) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    for row in rows {
        w.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input")
}

/// Level-3 matrix: `=` on the diagonal, upper triangle filled, lower empty.
pub fn matrix_to_csv(m: &DiffMatrix) -> String {
    let n = m.size();
    let mut rows = vec![std::iter::once(String::new()).chain(m.model_sets.iter().cloned()).collect()];
    for i in 0..n {
        let mut row = vec![m.model_sets[i].clone()];
        for j in 0..n {
            row.push(match i.cmp(&j) {
                std::cmp::Ordering::Equal => "=".to_string(),
                std::cmp::Ordering::Greater => String::new(),
                std::cmp::Ordering::Less => m.get(i, j).unwrap().to_string(),
            });
        }
        rows.push(row);
    }
    csv_text(rows)
}

/// Level-4 table: one row per entity, one column per model set.
pub fn table_to_csv(entities: &[String], partitions: &[VariantPartition]) -> String {
    let members = partitions.first().map(|p| p.members.clone()).unwrap_or_default();
    let mut rows = vec![std::iter::once(String::new()).chain(members).collect()];
    for (e, p) in entities.iter().zip(partitions) {
        let mut row = vec![e.clone()];
        row.extend((0..p.members.len()).map(|i| p.label_of(i).unwrap_or(ABSENT).to_string()));
        rows.push(row);
    }
    csv_text(rows)
}

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

pub fn color(a: Annotation) -> &'static str {
    match a {
        Annotation::Unchanged => "black",
        Annotation::Added => "green",
        Annotation::Removed => "red",
    }
}

/// Hasse diagram, bottom to top.
pub fn lattice_to_dot<P>(name: &str, lattice: &Lattice<P>) -> String {
    let mut out = format!("digraph {} {{\n  rankdir=BT;\n", quote(name));
    for (i, n) in lattice.nodes.iter().enumerate() {
        let shape = match n.kind {
            NodeKind::Observed => "ellipse",
            NodeKind::Computed => "diamond",
        };
        let _ = writeln!(
            out,
            "  n{i} [label={}, shape={shape}, measure={}];",
            quote(&format!("{}\n{}", n.label, n.measure)),
            n.measure
        );
    }
    for e in &lattice.edges {
        let label = match e.label {
            EdgeLabel::Entities(c) => format!("changed={} newly_present={}", c.changed, c.newly_present),
            EdgeLabel::Transitions { added, removed } => format!("added={added} removed={removed}"),
        };
        let _ = writeln!(out, "  n{} -> n{} [label={}];", e.lower, e.upper, quote(&label));
    }
    out.push_str("}\n");
    out
}

/// Diff machine with `color` and `diff` attributes on every state and transition.
pub fn diff_to_dot(name: &str, d: &DiffMachine) -> String {
    let mut out = format!("digraph {} {{\n  rankdir=LR;\n", quote(name));
    for (i, s) in d.states.iter().enumerate() {
        let shape = if s.accepting.is_some() { "doublecircle" } else { "circle" };
        let mut attrs = format!(
            "label={}, shape={shape}, color={}, diff={}",
            quote(s.name()),
            color(s.annotation),
            s.annotation
        );
        if let Some(a) = s.accepting {
            let _ = write!(attrs, ", accepting={a}");
        }
        let _ = writeln!(out, "  s{i} [{attrs}];");
    }
    for (i, s) in d.states.iter().enumerate() {
        if let Some(a) = s.initial {
            let _ = writeln!(out, "  init{i} [shape=point, label=\"\"];");
            let _ = writeln!(out, "  init{i} -> s{i} [color={}, initial={a}];", color(a));
        }
    }
    for t in &d.transitions {
        let _ = writeln!(
            out,
            "  s{} -> s{} [label={}, color={}, diff={}];",
            t.source,
            t.target,
            quote(t.event.as_str()),
            color(t.annotation),
            t.annotation
        );
    }
    out.push_str("}\n");
    out
}
