//! The six comparison levels.
//!
//! Levels 1-3 work on whole model sets, levels 4-6 on the models of single
//! entities. Languages are compared through canonical minimal DFAs built over
//! the union of all alphabets seen at an entity, so equal languages always get
//! identical keys.

mod lattice;

use std::collections::{BTreeMap, HashMap};

use serde::Serialize;
use thiserror::Error;

use crate::automata::{self, minimize_over, union_alphabet, CanonicalDfa, Event, Nfa};
use crate::ltsdiff::{self, DiffMachine, DiffParams};
use crate::model_sets::{diff_entity_counts, EntityId, ModelSet, Workspace};
use crate::par;

pub use lattice::{Derivation, EdgeLabel, Lattice, LatticeEdge, LatticeNode, NodeKind};
use lattice::{close, cover_relation, LatticeAlgebra};

/// Default cap on lattice nodes before closure is aborted.
pub const DEFAULT_NODE_CAP: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LevelError {
    #[error("unknown entity {0}")]
    UnknownEntity(String),
    #[error("unknown variant {variant} for entity {entity}")]
    UnknownVariant { entity: String, variant: String },
    #[error("lattice closure exceeded the node cap of {cap}")]
    NodeCapExceeded { cap: usize },
}

/// Variant letters: `A..Z`, then `AA, AB, ...`.
pub fn variant_label(mut index: usize) -> String {
    let mut out = Vec::new();
    loop {
        out.push(b'A' + (index % 26) as u8);
        if index < 26 {
            break;
        }
        index = index / 26 - 1;
    }
    out.reverse();
    String::from_utf8(out).unwrap()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Scope {
    ModelSets,
    Entity(EntityId),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VariantClass {
    pub label: String,
    /// Indices into the partition's member list; the first is the representative.
    pub members: Vec<usize>,
}

/// A partition of model sets (or of one entity's models) into variants.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VariantPartition {
    pub scope: Scope,
    /// Model-set names, in workspace order.
    pub members: Vec<String>,
    pub classes: Vec<VariantClass>,
    /// Class of each member; `None` marks a model without behavior.
    pub assignment: Vec<Option<usize>>,
}

impl VariantPartition {
    fn from_keys<K: Eq + std::hash::Hash>(
        scope: Scope,
        members: Vec<String>,
        keys: &[Option<K>],
    ) -> Self {
        let mut classes: Vec<VariantClass> = Vec::new();
        let mut seen: HashMap<&K, usize> = HashMap::new();
        let mut assignment = Vec::with_capacity(keys.len());
        for (i, key) in keys.iter().enumerate() {
            let Some(key) = key else {
                assignment.push(None);
                continue;
            };
            let class = *seen.entry(key).or_insert_with(|| {
                classes.push(VariantClass {
                    label: variant_label(classes.len()),
                    members: Vec::new(),
                });
                classes.len() - 1
            });
            classes[class].members.push(i);
            assignment.push(Some(class));
        }
        VariantPartition {
            scope,
            members,
            classes,
            assignment,
        }
    }

    /// Label of a member: its variant letter, or `None` when absent.
    pub fn label_of(&self, member: usize) -> Option<&str> {
        self.assignment[member].map(|c| self.classes[c].label.as_str())
    }

    pub fn label_of_name(&self, name: &str) -> Option<&str> {
        let i = self.members.iter().position(|m| m == name)?;
        self.label_of(i)
    }

    pub fn class(&self, label: &str) -> Option<&VariantClass> {
        self.classes.iter().find(|c| c.label == label)
    }

    /// Heat class 0-4 of a member's variant, by variant index.
    pub fn heat_of(&self, member: usize) -> Option<u8> {
        let c = self.assignment[member]?;
        Some(heat(c, self.classes.len().saturating_sub(1)))
    }
}

/// `value / max` quantized to 0..=4; zero stays 0 and `max` maps to 4.
pub fn heat(value: usize, max: usize) -> u8 {
    if max == 0 || value == 0 {
        0
    } else {
        ((4 * value).div_ceil(max)).min(4) as u8
    }
}

/// Canonical DFAs of every model at one entity, over the entity's alphabet.
#[derive(Debug, Clone)]
struct EntityKeys {
    keys: Vec<CanonicalDfa>,
}

fn entity_alphabet<'a>(models: impl IntoIterator<Item = &'a Nfa>) -> Vec<Event> {
    models
        .into_iter()
        .fold(Vec::new(), |acc, m| union_alphabet(&acc, m.alphabet()))
}

fn entity_keys(ws: &Workspace) -> Vec<EntityKeys> {
    par::map(ws.entities(), |e| {
        let column = ws.column(e);
        let alphabet = entity_alphabet(column.iter().copied());
        let keys = column.iter().map(|m| minimize_over(m, &alphabet)).collect();
        EntityKeys { keys }
    })
}

fn model_set_names(ws: &Workspace) -> Vec<String> {
    ws.model_sets().iter().map(|s| s.name().to_string()).collect()
}

/// Level 1: model sets grouped by entity-wise language equivalence.
pub fn level1(ws: &Workspace) -> VariantPartition {
    let per_entity = entity_keys(ws);
    let keys: Vec<Option<Vec<&CanonicalDfa>>> = (0..ws.model_sets().len())
        .map(|s| Some(per_entity.iter().map(|e| &e.keys[s]).collect()))
        .collect();
    VariantPartition::from_keys(Scope::ModelSets, model_set_names(ws), &keys)
}

/// Level 4: per entity, models grouped by language; empty languages are absent.
pub fn level4(ws: &Workspace) -> Vec<VariantPartition> {
    let names = model_set_names(ws);
    let per_entity = entity_keys(ws);
    ws.entities()
        .iter()
        .zip(per_entity)
        .map(|(e, ek)| {
            let keys: Vec<Option<&CanonicalDfa>> = ek
                .keys
                .iter()
                .map(|k| (!k.is_empty_language()).then_some(k))
                .collect();
            VariantPartition::from_keys(Scope::Entity(e.clone()), names.clone(), &keys)
        })
        .collect()
}

/// Level 3: number of entities with different behavior, per pair of model sets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DiffMatrix {
    pub model_sets: Vec<String>,
    /// `values[i][j - i - 1]` holds the cell `(i, j)` for `i < j`.
    values: Vec<Vec<usize>>,
}

impl DiffMatrix {
    pub fn size(&self) -> usize {
        self.model_sets.len()
    }

    /// Cell value for `i != j` (symmetric); `None` on the diagonal.
    pub fn get(&self, i: usize, j: usize) -> Option<usize> {
        match i.cmp(&j) {
            std::cmp::Ordering::Equal => None,
            std::cmp::Ordering::Less => Some(self.values[i][j - i - 1]),
            std::cmp::Ordering::Greater => Some(self.values[j][i - j - 1]),
        }
    }

    pub fn max(&self) -> usize {
        self.values.iter().flatten().copied().max().unwrap_or(0)
    }

    pub fn heat(&self, i: usize, j: usize) -> Option<u8> {
        self.get(i, j).map(|v| heat(v, self.max()))
    }
}

pub fn level3(ws: &Workspace) -> DiffMatrix {
    let per_entity = entity_keys(ws);
    let n = ws.model_sets().len();
    let values = par::map_range(n, |i| {
        (i + 1..n)
            .map(|j| per_entity.iter().filter(|e| e.keys[i] != e.keys[j]).count())
            .collect()
    });
    DiffMatrix {
        model_sets: model_set_names(ws),
        values,
    }
}

struct ModelSetAlgebra {
    alphabets: Vec<Vec<Event>>,
}

impl LatticeAlgebra for ModelSetAlgebra {
    type Item = Vec<Nfa>;
    type Key = Vec<CanonicalDfa>;

    fn key(&self, item: &Vec<Nfa>) -> Vec<CanonicalDfa> {
        item.iter()
            .zip(&self.alphabets)
            .map(|(m, a)| minimize_over(m, a))
            .collect()
    }

    fn payload_of(&self, key: &Vec<CanonicalDfa>) -> Vec<Nfa> {
        key.iter().map(CanonicalDfa::to_nfa).collect()
    }

    fn join(&self, x: &Vec<Nfa>, y: &Vec<Nfa>) -> Vec<Nfa> {
        x.iter().zip(y).map(|(a, b)| automata::union(a, b)).collect()
    }

    fn meet(&self, x: &Vec<Nfa>, y: &Vec<Nfa>) -> Vec<Nfa> {
        x.iter().zip(y).map(|(a, b)| automata::intersection(a, b)).collect()
    }

    fn leq(&self, x: &Vec<CanonicalDfa>, y: &Vec<CanonicalDfa>) -> bool {
        x.iter().zip(y).all(|(a, b)| a.is_subset_of(b))
    }
}

fn label_sequence(observed: Vec<String>) -> impl FnMut(usize) -> String {
    let start = observed.len();
    move |i| {
        if i < start {
            observed[i].clone()
        } else {
            variant_label(i)
        }
    }
}

/// Level 2: model-set variants completed into a lattice.
///
/// Node measures count entities with behavior; edges carry changed and
/// newly present entity counts.
pub fn level2(
    ws: &Workspace,
    partition: &VariantPartition,
    node_cap: usize,
) -> Result<Lattice<ModelSet>, LevelError> {
    let algebra = ModelSetAlgebra {
        alphabets: ws
            .entities()
            .iter()
            .map(|e| entity_alphabet(ws.column(e)))
            .collect(),
    };
    let observed: Vec<Vec<Nfa>> = partition
        .classes
        .iter()
        .map(|c| {
            let rep = &ws.model_sets()[c.members[0]];
            rep.models().values().cloned().collect()
        })
        .collect();
    let labels = partition.classes.iter().map(|c| c.label.clone()).collect();
    let (closure, names) = close(&algebra, observed, &mut label_sequence(labels), node_cap)?;

    let payloads: Vec<ModelSet> = closure
        .items
        .into_iter()
        .zip(&names)
        .map(|(models, name)| {
            ModelSet::from_models(
                name.clone(),
                ws.entities().iter().cloned().zip(models).collect::<BTreeMap<_, _>>(),
            )
        })
        .collect();
    let nodes = names
        .iter()
        .enumerate()
        .map(|(i, name)| node(i, name, partition, &closure.derivations, payloads[i].behavior_count()))
        .collect();
    let edges = par::map(&cover_relation(&algebra, &closure.keys), |&(l, u)| LatticeEdge {
        lower: l,
        upper: u,
        label: EdgeLabel::Entities(
            diff_entity_counts(&payloads[l], &payloads[u]).expect("same entity set"),
        ),
    });
    Ok(Lattice {
        nodes,
        payloads,
        edges,
    })
}

fn node(
    i: usize,
    name: &str,
    partition: &VariantPartition,
    derivations: &[Option<Derivation>],
    measure: usize,
) -> LatticeNode {
    let observed = partition.classes.get(i);
    LatticeNode {
        label: name.to_string(),
        kind: if observed.is_some() {
            NodeKind::Observed
        } else {
            NodeKind::Computed
        },
        members: observed
            .map(|c| c.members.iter().map(|&m| partition.members[m].clone()).collect())
            .unwrap_or_default(),
        measure,
        derivation: derivations[i].clone(),
    }
}

struct ModelAlgebra {
    alphabet: Vec<Event>,
}

impl LatticeAlgebra for ModelAlgebra {
    type Item = Nfa;
    type Key = CanonicalDfa;

    fn key(&self, item: &Nfa) -> CanonicalDfa {
        minimize_over(item, &self.alphabet)
    }

    fn payload_of(&self, key: &CanonicalDfa) -> Nfa {
        key.to_nfa()
    }

    fn join(&self, x: &Nfa, y: &Nfa) -> Nfa {
        automata::union(x, y)
    }

    fn meet(&self, x: &Nfa, y: &Nfa) -> Nfa {
        automata::intersection(x, y)
    }

    fn leq(&self, x: &CanonicalDfa, y: &CanonicalDfa) -> bool {
        x.is_subset_of(y)
    }
}

fn find_entity<'a>(ws: &'a Workspace, entity: &str) -> Result<&'a EntityId, LevelError> {
    ws.entity(entity)
        .ok_or_else(|| LevelError::UnknownEntity(entity.to_string()))
}

/// Level 5: one entity's variants completed into a lattice.
///
/// Absent models are not observed nodes. Node measures count transitions of
/// the representative; edges carry added and removed transition counts of the
/// structural diff from lower to upper.
pub fn level5(
    ws: &Workspace,
    entity: &str,
    params: &DiffParams,
    node_cap: usize,
) -> Result<Lattice<Nfa>, LevelError> {
    let entity = find_entity(ws, entity)?;
    let partitions = level4(ws);
    let idx = ws.entities().iter().position(|e| e == entity).unwrap();
    level5_from(ws, &partitions[idx], params, node_cap)
}

/// Level 5 for an entity-scope partition already computed by [`level4`].
pub fn level5_from(
    ws: &Workspace,
    partition: &VariantPartition,
    params: &DiffParams,
    node_cap: usize,
) -> Result<Lattice<Nfa>, LevelError> {
    let Scope::Entity(entity) = &partition.scope else {
        panic!("level 5 needs an entity-scope partition");
    };
    let column = ws.column(entity);
    let algebra = ModelAlgebra {
        alphabet: entity_alphabet(column.iter().copied()),
    };
    let observed: Vec<Nfa> = partition
        .classes
        .iter()
        .map(|c| column[c.members[0]].clone())
        .collect();
    let labels = partition.classes.iter().map(|c| c.label.clone()).collect();
    let (closure, names) = close(&algebra, observed, &mut label_sequence(labels), node_cap)?;
    let nodes = names
        .iter()
        .enumerate()
        .map(|(i, name)| {
            node(i, name, partition, &closure.derivations, closure.items[i].num_transitions())
        })
        .collect();
    let payloads = closure.items;
    let edges = par::map(&cover_relation(&algebra, &closure.keys), |&(l, u)| {
        let stats = ltsdiff::diff(&payloads[l], &payloads[u], params).stats();
        LatticeEdge {
            lower: l,
            upper: u,
            label: EdgeLabel::Transitions {
                added: stats.added_transitions,
                removed: stats.removed_transitions,
            },
        }
    });
    Ok(Lattice {
        nodes,
        payloads,
        edges,
    })
}

/// Level 6: structural diff between two variants of one entity.
pub fn level6(
    ws: &Workspace,
    entity: &str,
    from: &str,
    to: &str,
    params: &DiffParams,
    node_cap: usize,
) -> Result<DiffMachine, LevelError> {
    let lattice = level5(ws, entity, params, node_cap)?;
    level6_in(&lattice, entity, from, to, params)
}

/// Level 6 against an existing level-5 lattice.
pub fn level6_in(
    lattice: &Lattice<Nfa>,
    entity: &str,
    from: &str,
    to: &str,
    params: &DiffParams,
) -> Result<DiffMachine, LevelError> {
    let lookup = |v: &str| {
        lattice.payload(v).ok_or_else(|| LevelError::UnknownVariant {
            entity: entity.to_string(),
            variant: v.to_string(),
        })
    };
    Ok(ltsdiff::diff(lookup(from)?, lookup(to)?, params))
}
