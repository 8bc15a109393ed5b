//! Structural checks shared by the property suites and the acceptance run.
//! Each returns `Err` with a description of the first violation.

use std::collections::BTreeSet;

use behavdiff::levels::{level1, level2, level3, level4, level5_from, EdgeLabel, Lattice, Scope, DEFAULT_NODE_CAP};
use behavdiff::ltsdiff::{Annotation, DiffMachine, DiffParams};
use behavdiff::model_sets::{diff_entity_counts, model_set_intersection, model_set_union};
use behavdiff::{automata, ModelSet, Nfa, Workspace};

use super::{oracle_equivalent, oracle_included};

type Triple = (String, String, String);

/// The elements of `d` present on one side, mapped back through their
/// provenance names, must be exactly machine `m`.
pub fn diff_side(d: &DiffMachine, m: &Nfa, source_side: bool) -> Result<(), String> {
    let keep = |a: Annotation| if source_side { a != Annotation::Added } else { a != Annotation::Removed };
    let name = |i: usize| {
        let s = &d.states[i];
        if source_side { s.source.clone() } else { s.target.clone() }
    };
    let mut states = Vec::new();
    for (i, s) in d.states.iter().enumerate() {
        if !keep(s.annotation) {
            continue;
        }
        let n = name(i).ok_or("kept state without provenance")?;
        let id = m.state_id(&n).ok_or(format!("unknown state {n}"))?;
        if m.is_initial(id) != s.initial.is_some_and(keep) {
            return Err(format!("initial flag of {n}"));
        }
        if m.is_accepting(id) != s.accepting.is_some_and(keep) {
            return Err(format!("accepting flag of {n}"));
        }
        states.push(n);
    }
    let unique: BTreeSet<_> = states.iter().collect();
    if unique.len() != states.len() || states.len() != m.num_states() {
        return Err("state correspondence is not a bijection".into());
    }
    let mut kept: Vec<Triple> = Vec::new();
    for t in d.transitions.iter().filter(|t| keep(t.annotation)) {
        let (Some(p), Some(q)) = (name(t.source), name(t.target)) else {
            return Err("kept transition with a foreign endpoint".into());
        };
        kept.push((p, t.event.to_string(), q));
    }
    kept.sort();
    let mut expected: Vec<Triple> = m
        .transitions()
        .iter()
        .map(|t| (m.state_name(t.source).to_string(), m.event(t.event).to_string(), m.state_name(t.target).to_string()))
        .collect();
    expected.sort();
    if kept != expected {
        return Err(format!("transitions differ: {kept:?} vs {expected:?}"));
    }
    Ok(())
}

pub fn is_identity(d: &DiffMachine) -> bool {
    d.states.iter().all(|s| {
        s.annotation == Annotation::Unchanged
            && s.initial.is_none_or(|a| a == Annotation::Unchanged)
            && s.accepting.is_none_or(|a| a == Annotation::Unchanged)
    }) && d.transitions.iter().all(|t| t.annotation == Annotation::Unchanged)
}

pub fn set_leq(x: &ModelSet, y: &ModelSet) -> bool {
    x.models().iter().all(|(e, m)| oracle_included(m, y.model(e).unwrap()))
}

/// Soundness and completeness of a Hasse diagram against an order oracle.
pub fn cover<P>(lattice: &Lattice<P>, leq: impl Fn(&P, &P) -> bool) -> Result<(), String> {
    let n = lattice.nodes.len();
    let p = &lattice.payloads;
    let lt = |i: usize, j: usize| leq(&p[i], &p[j]) && !leq(&p[j], &p[i]);
    for i in 0..n {
        for j in 0..n {
            if i != j && leq(&p[i], &p[j]) && leq(&p[j], &p[i]) {
                return Err(format!("nodes {i} and {j} are equivalent"));
            }
        }
    }
    for e in &lattice.edges {
        if !lt(e.lower, e.upper) {
            return Err(format!("edge {} -> {} is not a strict inclusion", e.lower, e.upper));
        }
        if (0..n).any(|z| lt(e.lower, z) && lt(z, e.upper)) {
            return Err(format!("edge {} -> {} skips a node", e.lower, e.upper));
        }
    }
    // Every strict inclusion is a path of edges.
    let mut reach = vec![vec![false; n]; n];
    for e in &lattice.edges {
        reach[e.lower][e.upper] = true;
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if reach[i][k] && reach[k][j] {
                    reach[i][j] = true;
                }
            }
        }
    }
    for i in 0..n {
        for j in 0..n {
            if i != j && lt(i, j) && !reach[i][j] {
                return Err(format!("inclusion {i} < {j} missing from the diagram"));
            }
        }
    }
    Ok(())
}

/// Every pairwise join and meet is equivalent to some node.
pub fn closed<P>(lattice: &Lattice<P>, leq: impl Fn(&P, &P) -> bool, ops: impl Fn(&P, &P) -> (P, P)) -> Result<(), String> {
    let p = &lattice.payloads;
    for i in 0..p.len() {
        for j in 0..i {
            let (join, meet) = ops(&p[i], &p[j]);
            for x in [join, meet] {
                if !p.iter().any(|y| leq(&x, y) && leq(y, &x)) {
                    return Err(format!("closure misses an operation on nodes {j}, {i}"));
                }
            }
        }
    }
    Ok(())
}

/// Lattice soundness plus level 1/3/4 cross-consistency for a workspace.
pub fn workspace(ws: &Workspace) -> Result<(), String> {
    let l1 = level1(ws);
    let l3 = level3(ws);
    let l4 = level4(ws);
    let n = ws.model_sets().len();

    for i in 0..n {
        for j in 0..n {
            // Absent counts as a label of its own.
            let differing = l4.iter().filter(|p| p.label_of(i) != p.label_of(j)).count();
            let cell = l3.get(i, j);
            if i == j {
                if cell.is_some() {
                    return Err("diagonal cell".into());
                }
            } else if cell != Some(differing) {
                return Err(format!("level 3 cell ({i},{j}) = {cell:?}, level 4 says {differing}"));
            }
            if (l1.assignment[i] == l1.assignment[j]) != (differing == 0) {
                return Err(format!("level 1 and level 4 disagree on ({i},{j})"));
            }
        }
    }
    for p in &l4 {
        let Scope::Entity(e) = &p.scope else { unreachable!() };
        let column = ws.column(e);
        for i in 0..n {
            if p.label_of(i).is_none() != oracle_included(column[i], &Nfa::empty()) {
                return Err("absent cell does not match an empty language".into());
            }
            for j in 0..n {
                let both = p.assignment[i].is_some() && p.assignment[j].is_some();
                if both && (p.assignment[i] == p.assignment[j]) != oracle_equivalent(column[i], column[j]) {
                    return Err("level 4 letters disagree with the equivalence oracle".into());
                }
            }
        }
    }

    let l2 = level2(ws, &l1, DEFAULT_NODE_CAP).map_err(|e| e.to_string())?;
    cover(&l2, set_leq)?;
    closed(&l2, set_leq, |x, y| (model_set_union(x, y).unwrap(), model_set_intersection(x, y).unwrap()))?;
    for e in &l2.edges {
        let expected = diff_entity_counts(&l2.payloads[e.lower], &l2.payloads[e.upper]).unwrap();
        if e.label != EdgeLabel::Entities(expected) {
            return Err("level 2 edge label".into());
        }
    }
    for p in &l4 {
        let l5 = level5_from(ws, p, &DiffParams::default(), DEFAULT_NODE_CAP).map_err(|e| e.to_string())?;
        cover(&l5, oracle_included)?;
        closed(&l5, oracle_included, |x, y| (automata::union(x, y), automata::intersection(x, y)))?;
        if l5.observed_count() != p.classes.len() {
            return Err("observed level 5 nodes differ from level 4 variants".into());
        }
    }
    Ok(())
}

fn unique_match(n: usize, hit: impl Fn(usize) -> bool, what: &str) -> Result<usize, String> {
    let hits: Vec<usize> = (0..n).filter(|&i| hit(i)).collect();
    match hits[..] {
        [i] => Ok(i),
        _ => Err(format!("{what}: {} matching nodes", hits.len())),
    }
}

fn edge_set<P>(lattice: &Lattice<P>) -> BTreeSet<(usize, usize)> {
    lattice.edges.iter().map(|e| (e.lower, e.upper)).collect()
}

/// The running example's level-2 lattice: nodes identified by what they
/// denote (observed variants and their pairwise unions and intersections),
/// not by the letters given to computed nodes.
pub fn level2_shape(lattice: &Lattice<ModelSet>) -> Result<(), String> {
    if lattice.nodes.len() != 9 || lattice.observed_count() != 3 {
        return Err(format!("{} nodes, {} observed", lattice.nodes.len(), lattice.observed_count()));
    }
    let obs = |l: &str| lattice.payload(l).cloned().ok_or(format!("no variant {l}"));
    let (a, b, c) = (obs("A")?, obs("B")?, obs("C")?);
    let named: Vec<(&str, ModelSet)> = vec![
        ("A", a.clone()),
        ("B", b.clone()),
        ("C", c.clone()),
        ("A|B", model_set_union(&a, &b).unwrap()),
        ("A&B", model_set_intersection(&a, &b).unwrap()),
        ("A|C", model_set_union(&a, &c).unwrap()),
        ("A&C", model_set_intersection(&a, &c).unwrap()),
        ("B|C", model_set_union(&b, &c).unwrap()),
        ("B&C", model_set_intersection(&b, &c).unwrap()),
    ];
    let mut index = Vec::new();
    for (name, target) in &named {
        let i = unique_match(
            lattice.nodes.len(),
            |i| target.models().iter().all(|(e, m)| oracle_equivalent(m, lattice.payloads[i].model(e).unwrap())),
            name,
        )?;
        index.push((*name, i));
    }
    if index.iter().map(|(_, i)| i).collect::<BTreeSet<_>>().len() != 9 {
        return Err("denotations do not cover all nodes".into());
    }
    let at = |n: &str| index.iter().find(|(m, _)| *m == n).unwrap().1;
    let measures: Vec<usize> = index.iter().map(|(_, i)| lattice.nodes[*i].measure).collect();
    if measures != [4, 4, 3, 4, 4, 4, 3, 4, 3] {
        return Err(format!("behavior counts {measures:?}"));
    }
    let expected: BTreeSet<(usize, usize)> = [
        ("A&C", "A&B"),
        ("A&C", "B&C"),
        ("A&B", "A"),
        ("A&B", "B"),
        ("B&C", "B"),
        ("B&C", "C"),
        ("A", "A|B"),
        ("B", "A|B"),
        ("B", "B|C"),
        ("C", "B|C"),
        ("A|B", "A|C"),
        ("B|C", "A|C"),
    ]
    .iter()
    .map(|(l, u)| (at(l), at(u)))
    .collect();
    if edge_set(lattice) != expected {
        return Err("cover relation differs".into());
    }
    let label = |l: &str, u: &str| {
        let e = lattice.edges.iter().find(|e| e.lower == at(l) && e.upper == at(u)).unwrap();
        match e.label {
            EdgeLabel::Entities(c) => (c.changed, c.newly_present),
            _ => unreachable!(),
        }
    };
    if label("C", "B|C").1 != 1 {
        return Err(format!("C -> B|C newly present {}", label("C", "B|C").1));
    }
    if label("A", "A|B").0 != 2 {
        return Err(format!("A -> A|B changed {}", label("A", "A|B").0));
    }
    Ok(())
}

/// The running example's level-5 lattice for entity E2.
pub fn level5_shape(lattice: &Lattice<Nfa>) -> Result<(), String> {
    if (lattice.observed_count(), lattice.computed_count()) != (3, 3) {
        return Err(format!("{} nodes", lattice.nodes.len()));
    }
    let find = |m: &Nfa, what: &str| unique_match(lattice.nodes.len(), |i| oracle_equivalent(m, &lattice.payloads[i]), what);
    let p = |l: &str| lattice.payload(l).cloned().ok_or(format!("no variant {l}"));
    let (a, b, c) = (p("A")?, p("B")?, p("C")?);
    let eps = find(&behavdiff::ingest::parse_nfa("nfa v1\nstate s initial accepting\n").unwrap(), "empty trace")?;
    let ab = find(&automata::union(&a, &b), "A|B")?;
    let ac = find(&automata::union(&a, &c), "A|C")?;
    if find(&automata::intersection(&a, &b), "A&B")? != eps || find(&automata::intersection(&a, &c), "A&C")? != eps {
        return Err("intersections are not the empty trace".into());
    }
    let (ia, ib, ic) = (find(&a, "A")?, find(&b, "B")?, find(&c, "C")?);
    let expected: BTreeSet<(usize, usize)> =
        [(eps, ia), (eps, ib), (ia, ab), (ib, ab), (ib, ic), (ab, ac), (ic, ac)].into_iter().collect();
    if edge_set(lattice) != expected {
        return Err("cover relation differs".into());
    }
    if (lattice.nodes[ia].measure, lattice.nodes[ic].measure) != (3, 5) {
        return Err("transition counts".into());
    }
    Ok(())
}
