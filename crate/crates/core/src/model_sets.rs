//! Entities, model sets and their lifted language relations.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::automata::{self, has_behavior, language_equivalent, language_included, Nfa};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelSetError {
    #[error("invalid entity name {0:?}")]
    InvalidEntity(String),
    #[error("entity {entity} is not part of the entity set of model set {model_set}")]
    UnknownEntity { model_set: String, entity: String },
    #[error("model sets {0} and {1} are defined over different entity sets")]
    EntityMismatch(String, String),
    #[error("duplicate model set name {0}")]
    DuplicateModelSet(String),
    #[error("no model sets found")]
    NoModelSets,
}

/// A behavioral entity such as a function or component.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct EntityId(String);

impl EntityId {
    /// Entity names double as file names, so path separators are rejected.
    pub fn new(name: impl Into<String>) -> Result<Self, ModelSetError> {
        let name = name.into();
        let ok = !name.is_empty()
            && name != "."
            && name != ".."
            && !name.chars().any(|c| c == '/' || c == '\\' || c.is_control());
        if ok {
            Ok(EntityId(name))
        } else {
            Err(ModelSetError::InvalidEntity(name))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for EntityId {
    type Error = ModelSetError;
    fn try_from(value: String) -> Result<Self, Self::Error> {
        EntityId::new(value)
    }
}

impl From<EntityId> for String {
    fn from(value: EntityId) -> Self {
        value.0
    }
}

impl fmt::Display for EntityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A total mapping from entities to models.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelSet {
    name: String,
    models: BTreeMap<EntityId, Nfa>,
}

impl ModelSet {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn models(&self) -> &BTreeMap<EntityId, Nfa> {
        &self.models
    }

    pub fn model(&self, entity: &EntityId) -> Option<&Nfa> {
        self.models.get(entity)
    }

    pub fn entities(&self) -> impl Iterator<Item = &EntityId> {
        self.models.keys()
    }

    pub(crate) fn from_models(name: impl Into<String>, models: BTreeMap<EntityId, Nfa>) -> Self {
        ModelSet {
            name: name.into(),
            models,
        }
    }

    /// Number of entities whose model has behavior.
    pub fn behavior_count(&self) -> usize {
        self.models.values().filter(|m| has_behavior(m)).count()
    }
}

/// Makes `partial` total over `entities`, binding the empty machine to every
/// unmapped entity.
pub fn complete_mapping(
    name: impl Into<String>,
    partial: BTreeMap<EntityId, Nfa>,
    entities: &BTreeSet<EntityId>,
) -> Result<ModelSet, ModelSetError> {
    let name = name.into();
    if let Some(extra) = partial.keys().find(|e| !entities.contains(*e)) {
        return Err(ModelSetError::UnknownEntity {
            model_set: name,
            entity: extra.to_string(),
        });
    }
    let mut models = partial;
    for e in entities {
        models.entry(e.clone()).or_insert_with(Nfa::empty);
    }
    Ok(ModelSet { name, models })
}

fn check_same_entities(s1: &ModelSet, s2: &ModelSet) -> Result<(), ModelSetError> {
    if s1.models.keys().eq(s2.models.keys()) {
        Ok(())
    } else {
        Err(ModelSetError::EntityMismatch(s1.name.clone(), s2.name.clone()))
    }
}

fn pairwise<'a>(s1: &'a ModelSet, s2: &'a ModelSet) -> impl Iterator<Item = (&'a Nfa, &'a Nfa)> {
    s1.models.values().zip(s2.models.values())
}

/// `s1 =_L s2`: every entity's models are language-equivalent.
pub fn model_set_equivalent(s1: &ModelSet, s2: &ModelSet) -> Result<bool, ModelSetError> {
    check_same_entities(s1, s2)?;
    Ok(pairwise(s1, s2).all(|(a, b)| language_equivalent(a, b)))
}

/// `s1 ≤_L s2`: inclusion holds entity-wise.
pub fn model_set_included(s1: &ModelSet, s2: &ModelSet) -> Result<bool, ModelSetError> {
    check_same_entities(s1, s2)?;
    Ok(pairwise(s1, s2).all(|(a, b)| language_included(a, b)))
}

fn combine(
    s1: &ModelSet,
    s2: &ModelSet,
    op: fn(&Nfa, &Nfa) -> Nfa,
    sep: &str,
) -> Result<ModelSet, ModelSetError> {
    check_same_entities(s1, s2)?;
    let models = s1
        .models
        .iter()
        .zip(s2.models.values())
        .map(|((e, a), b)| (e.clone(), op(a, b)))
        .collect();
    Ok(ModelSet {
        name: format!("({}{sep}{})", s1.name, s2.name),
        models,
    })
}

/// Entity-wise union: the supremum of two model sets.
pub fn model_set_union(s1: &ModelSet, s2: &ModelSet) -> Result<ModelSet, ModelSetError> {
    combine(s1, s2, automata::union, "|")
}

/// Entity-wise intersection: the infimum of two model sets.
pub fn model_set_intersection(s1: &ModelSet, s2: &ModelSet) -> Result<ModelSet, ModelSetError> {
    combine(s1, s2, automata::intersection, "&")
}

/// Entity counts labeling an inclusion edge between model sets.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityCounts {
    /// Entities with behavior on both sides but different languages.
    pub changed: usize,
    /// Entities with behavior only on the second side.
    pub newly_present: usize,
}

pub fn diff_entity_counts(s1: &ModelSet, s2: &ModelSet) -> Result<EntityCounts, ModelSetError> {
    check_same_entities(s1, s2)?;
    let mut counts = EntityCounts::default();
    for (a, b) in pairwise(s1, s2) {
        match (has_behavior(a), has_behavior(b)) {
            (true, true) if !language_equivalent(a, b) => counts.changed += 1,
            (false, true) => counts.newly_present += 1,
            _ => {}
        }
    }
    Ok(counts)
}

/// All model sets under comparison, total over a shared entity set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Workspace {
    entities: Vec<EntityId>,
    model_sets: Vec<ModelSet>,
}

impl Workspace {
    /// Completes every partial mapping against the union of all entity names.
    /// Model-set order is kept as given.
    pub fn from_partial(
        sets: Vec<(String, BTreeMap<EntityId, Nfa>)>,
    ) -> Result<Workspace, ModelSetError> {
        if sets.is_empty() {
            return Err(ModelSetError::NoModelSets);
        }
        let entities: BTreeSet<EntityId> = sets.iter().flat_map(|(_, m)| m.keys().cloned()).collect();
        let mut names = BTreeSet::new();
        let mut model_sets = Vec::with_capacity(sets.len());
        for (name, partial) in sets {
            if !names.insert(name.clone()) {
                return Err(ModelSetError::DuplicateModelSet(name));
            }
            model_sets.push(complete_mapping(name, partial, &entities)?);
        }
        Ok(Workspace {
            entities: entities.into_iter().collect(),
            model_sets,
        })
    }

    pub fn entities(&self) -> &[EntityId] {
        &self.entities
    }

    pub fn model_sets(&self) -> &[ModelSet] {
        &self.model_sets
    }

    pub fn model_set(&self, name: &str) -> Option<&ModelSet> {
        self.model_sets.iter().find(|s| s.name == name)
    }

    pub fn entity(&self, name: &str) -> Option<&EntityId> {
        self.entities.iter().find(|e| e.as_str() == name)
    }

    /// The models of one entity, in model-set order.
    pub fn column(&self, entity: &EntityId) -> Vec<&Nfa> {
        self.model_sets
            .iter()
            .map(|s| s.models.get(entity).expect("model sets are total"))
            .collect()
    }
}
