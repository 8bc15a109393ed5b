use std::collections::HashMap;
use std::hash::Hash;

use serde::Serialize;

use crate::model_sets::EntityCounts;
use crate::par;

use super::LevelError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Observed,
    Computed,
}

/// How a computed node was first produced.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Derivation {
    pub op: &'static str,
    pub left: String,
    pub right: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LatticeNode {
    pub label: String,
    pub kind: NodeKind,
    /// Members of an observed variant (model-set names); empty when computed.
    pub members: Vec<String>,
    /// Behavior count (model-set scope) or transition count (entity scope).
    pub measure: usize,
    pub derivation: Option<Derivation>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(untagged)]
pub enum EdgeLabel {
    Entities(EntityCounts),
    Transitions { added: usize, removed: usize },
}

/// A cover edge: `lower` is strictly included in `upper` with nothing between.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LatticeEdge {
    pub lower: usize,
    pub upper: usize,
    pub label: EdgeLabel,
}

/// Variants closed under union and intersection, with their Hasse diagram.
#[derive(Debug, Clone)]
pub struct Lattice<P> {
    pub nodes: Vec<LatticeNode>,
    pub payloads: Vec<P>,
    pub edges: Vec<LatticeEdge>,
}

impl<P> Lattice<P> {
    pub fn node_index(&self, label: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n.label == label)
    }

    pub fn payload(&self, label: &str) -> Option<&P> {
        self.node_index(label).map(|i| &self.payloads[i])
    }

    pub fn observed_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.kind == NodeKind::Observed).count()
    }

    pub fn computed_count(&self) -> usize {
        self.nodes.len() - self.observed_count()
    }

    pub fn has_edge(&self, lower: &str, upper: &str) -> bool {
        match (self.node_index(lower), self.node_index(upper)) {
            (Some(l), Some(u)) => self.edges.iter().any(|e| e.lower == l && e.upper == u),
            _ => false,
        }
    }

    pub fn edge(&self, lower: &str, upper: &str) -> Option<&LatticeEdge> {
        let (l, u) = (self.node_index(lower)?, self.node_index(upper)?);
        self.edges.iter().find(|e| e.lower == l && e.upper == u)
    }
}

/// Element operations needed to complete a set of variants into a lattice.
pub(crate) trait LatticeAlgebra: Sync {
    type Item: Send + Sync;
    type Key: Eq + Hash + Clone + Send + Sync;

    fn key(&self, item: &Self::Item) -> Self::Key;
    /// Canonical payload for a computed node, built from its key.
    fn payload_of(&self, key: &Self::Key) -> Self::Item;
    fn join(&self, x: &Self::Item, y: &Self::Item) -> Self::Item;
    fn meet(&self, x: &Self::Item, y: &Self::Item) -> Self::Item;
    fn leq(&self, x: &Self::Key, y: &Self::Key) -> bool;
}

pub(crate) struct Closure<T, K> {
    pub items: Vec<T>,
    pub keys: Vec<K>,
    pub derivations: Vec<Option<Derivation>>,
}

/// Closes `observed` under pairwise join and meet until no new key appears.
///
/// Pairs are visited as `(0,1), (0,2), (1,2), (0,3), ...`, join before meet,
/// so new elements take part in later pairs and the result order is fixed.
pub(crate) fn close<A: LatticeAlgebra>(
    algebra: &A,
    observed: Vec<A::Item>,
    labels: &mut dyn FnMut(usize) -> String,
    node_cap: usize,
) -> Result<(Closure<A::Item, A::Key>, Vec<String>), LevelError> {
    let mut keys: Vec<A::Key> = par::map(&observed, |x| algebra.key(x));
    let mut index: HashMap<A::Key, usize> = HashMap::new();
    for (i, k) in keys.iter().enumerate() {
        index.entry(k.clone()).or_insert(i);
    }
    let mut names: Vec<String> = (0..observed.len()).map(&mut *labels).collect();
    let mut items = observed;
    let mut derivations = vec![None; items.len()];
    if items.len() > node_cap {
        return Err(LevelError::NodeCapExceeded { cap: node_cap });
    }
    let mut j = 1;
    while j < items.len() {
        for i in 0..j {
            let candidates = [
                ("union", algebra.join(&items[i], &items[j])),
                ("intersection", algebra.meet(&items[i], &items[j])),
            ];
            for (op, item) in candidates {
                let key = algebra.key(&item);
                if index.contains_key(&key) {
                    continue;
                }
                if items.len() == node_cap {
                    return Err(LevelError::NodeCapExceeded { cap: node_cap });
                }
                index.insert(key.clone(), items.len());
                names.push(labels(items.len()));
                derivations.push(Some(Derivation {
                    op,
                    left: names[i].clone(),
                    right: names[j].clone(),
                }));
                items.push(algebra.payload_of(&key));
                keys.push(key);
            }
        }
        j += 1;
    }
    Ok((
        Closure {
            items,
            keys,
            derivations,
        },
        names,
    ))
}

/// Transitive reduction of the inclusion order among pairwise distinct keys.
pub(crate) fn cover_relation<A: LatticeAlgebra>(algebra: &A, keys: &[A::Key]) -> Vec<(usize, usize)> {
    let n = keys.len();
    let leq: Vec<Vec<bool>> = par::map_range(n, |i| {
        (0..n).map(|j| i == j || algebra.leq(&keys[i], &keys[j])).collect()
    });
    let mut edges = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i == j || !leq[i][j] {
                continue;
            }
            let covered = (0..n).any(|k| k != i && k != j && leq[i][k] && leq[k][j]);
            if !covered {
                edges.push((i, j));
            }
        }
    }
    edges
}
