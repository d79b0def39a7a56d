//! Language-level constructions on p-graphs: state-determined expansion,
//! union and tensor product.
//!
//! Derived vertex ids are canonical serializations of their provenance:
//! `{a,b}` for a subset, `i:v` for the `i`-th operand of a union and
//! `(a,b)` for a product pair. The structured provenance is kept alongside
//! each result so callers never have to parse ids back.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::graph::{Kind, Label, PGraph, VertexId};

pub fn subset_id(members: &BTreeSet<VertexId>) -> VertexId {
    let inner: Vec<&str> = members.iter().map(VertexId::as_str).collect();
    VertexId::new(format!("{{{}}}", inner.join(",")))
}

pub fn pair_id(left: &VertexId, right: &VertexId) -> VertexId {
    VertexId::new(format!("({left},{right})"))
}

/// Output of [`to_state_determined`].
#[derive(Debug, Clone)]
pub struct Determinized {
    pub graph: PGraph,
    members: BTreeMap<VertexId, BTreeSet<VertexId>>,
    mixed_kind: BTreeSet<VertexId>,
}

impl Determinized {
    /// The original vertices a subset vertex stands for.
    pub fn members(&self, id: &str) -> Option<&BTreeSet<VertexId>> {
        self.members.get(id)
    }

    pub fn subsets(&self) -> impl Iterator<Item = (&VertexId, &BTreeSet<VertexId>)> + '_ {
        self.members.iter()
    }

    /// Subset vertices whose members are not all of one kind. Such a vertex
    /// takes the kind of its first member and may carry labels of both kinds.
    pub fn mixed_kind(&self) -> &BTreeSet<VertexId> {
        &self.mixed_kind
    }
}

/// Powerset expansion from the initial set. Only reachable subsets appear;
/// on each label the successor of `S` is the union of the members'
/// successors, omitted when empty.
pub fn to_state_determined(g: &PGraph) -> Determinized {
    let mut out = PGraph::new();
    let mut members = BTreeMap::new();
    let mut mixed_kind = BTreeSet::new();
    if g.initial().is_empty() {
        return Determinized {
            graph: out,
            members,
            mixed_kind,
        };
    }

    let mut queue = VecDeque::new();
    let start = g.initial().clone();
    let start_id = subset_id(&start);
    members.insert(start_id.clone(), start.clone());
    out.mark_initial(start_id);
    queue.push_back(start);

    while let Some(subset) = queue.pop_front() {
        let id = subset_id(&subset);
        let kinds: BTreeSet<Kind> = subset.iter().filter_map(|v| g.kind(v.as_str())).collect();
        let kind = subset
            .iter()
            .find_map(|v| g.kind(v.as_str()))
            .unwrap_or(Kind::Action);
        if kinds.len() > 1 {
            mixed_kind.insert(id.clone());
        }
        out.add_vertex(id.clone(), kind);

        let labels: BTreeSet<&Label> = subset
            .iter()
            .flat_map(|v| g.out_labels(v.as_str()))
            .collect();
        for label in labels {
            let target = g.step(&subset, label);
            if target.is_empty() {
                continue;
            }
            let target_id = subset_id(&target);
            if !members.contains_key(&target_id) {
                members.insert(target_id.clone(), target.clone());
                queue.push_back(target);
            }
            out.add_edge(id.clone(), target_id, [label.clone()]);
        }
    }

    Determinized {
        graph: out,
        members,
        mixed_kind,
    }
}

/// Disjoint union of any number of graphs; vertex `v` of the `i`-th operand
/// becomes `i:v`.
pub fn union_all<'a>(graphs: impl IntoIterator<Item = &'a PGraph>) -> PGraph {
    let mut out = PGraph::new();
    for (i, g) in graphs.into_iter().enumerate() {
        let ns = |v: &VertexId| VertexId::new(format!("{i}:{v}"));
        for (v, kind) in g.vertices() {
            out.add_vertex(ns(v), kind);
        }
        for v in g.initial() {
            out.mark_initial(ns(v));
        }
        for (src, dst, labels) in g.edges() {
            out.add_edge(ns(src), ns(dst), labels.iter().cloned());
        }
    }
    out
}

pub fn union(a: &PGraph, b: &PGraph) -> PGraph {
    union_all([a, b])
}

/// Output of [`product`].
#[derive(Debug, Clone)]
pub struct Product {
    pub graph: PGraph,
    pairs: BTreeMap<VertexId, (VertexId, VertexId)>,
    kind_clashes: BTreeSet<VertexId>,
}

impl Product {
    pub fn pair(&self, id: &str) -> Option<&(VertexId, VertexId)> {
        self.pairs.get(id)
    }

    pub fn left(&self, id: &str) -> Option<&VertexId> {
        self.pairs.get(id).map(|(l, _)| l)
    }

    pub fn right(&self, id: &str) -> Option<&VertexId> {
        self.pairs.get(id).map(|(_, r)| r)
    }

    /// Reachable pairs whose components have different kinds. Such a pair
    /// takes the kind of its left component and still follows every label
    /// both components share.
    pub fn kind_clashes(&self) -> &BTreeSet<VertexId> {
        &self.kind_clashes
    }
}

/// Tensor product restricted to pairs reachable from `initial(a) × initial(b)`.
/// Its language is the intersection of the operands' languages.
pub fn product(a: &PGraph, b: &PGraph) -> Product {
    let mut out = PGraph::new();
    let mut pairs = BTreeMap::new();
    let mut kind_clashes = BTreeSet::new();
    let mut queue = VecDeque::new();

    let mut visit = |va: &VertexId,
                     vb: &VertexId,
                     out: &mut PGraph,
                     queue: &mut VecDeque<(VertexId, VertexId)>|
     -> VertexId {
        let id = pair_id(va, vb);
        if !pairs.contains_key(&id) {
            pairs.insert(id.clone(), (va.clone(), vb.clone()));
            let kind = a
                .kind(va.as_str())
                .or(b.kind(vb.as_str()))
                .unwrap_or(Kind::Action);
            out.add_vertex(id.clone(), kind);
            queue.push_back((va.clone(), vb.clone()));
        }
        id
    };

    for ia in a.initial() {
        for ib in b.initial() {
            let id = visit(ia, ib, &mut out, &mut queue);
            out.mark_initial(id);
        }
    }

    while let Some((va, vb)) = queue.pop_front() {
        let id = pair_id(&va, &vb);
        if a.kind(va.as_str()) != b.kind(vb.as_str()) {
            kind_clashes.insert(id.clone());
        }
        for (da, la) in a.out_edges(va.as_str()) {
            for (db, lb) in b.out_edges(vb.as_str()) {
                let common: Vec<Label> = la.intersection(lb).cloned().collect();
                if common.is_empty() {
                    continue;
                }
                let target = visit(da, db, &mut out, &mut queue);
                out.add_edge(id.clone(), target, common);
            }
        }
    }

    Product {
        graph: out,
        pairs,
        kind_clashes,
    }
}
