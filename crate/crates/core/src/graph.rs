//! The p-graph data model.
//!
//! A p-graph is a labeled transition structure whose vertices are either
//! action vertices (the robot picks a label) or observation vertices (the
//! world emits a label). Every out-edge of a vertex carries labels of that
//! vertex's kind. The language of a p-graph is the prefix-closed set of
//! label sequences spelled by paths that start at an initial vertex; the
//! empty execution belongs to every graph with a nonempty initial set.

use std::borrow::Borrow;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::Deref;

use serde::{Deserialize, Serialize};

/// Whether a vertex (or label) belongs to the robot or to the world.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Action,
    Observation,
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Kind::Action => f.write_str("action"),
            Kind::Observation => f.write_str("observation"),
        }
    }
}

/// An action or observation label. Two labels with the same name but
/// different kinds are distinct; [`PGraph::validate`] rejects graphs that
/// use one name for both.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Label {
    kind: Kind,
    name: String,
}

impl Label {
    pub fn new(kind: Kind, name: impl Into<String>) -> Self {
        Self {
            kind,
            name: name.into(),
        }
    }

    pub fn action(name: impl Into<String>) -> Self {
        Self::new(Kind::Action, name)
    }

    pub fn observation(name: impl Into<String>) -> Self {
        Self::new(Kind::Observation, name)
    }

    pub fn kind(&self) -> Kind {
        self.kind
    }

    pub fn name(&self) -> &str {
        &self.name
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VertexId(String);

impl VertexId {
    pub fn new(id: impl Into<String>) -> Self {
        Self(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl From<&str> for VertexId {
    fn from(s: &str) -> Self {
        Self(s.to_owned())
    }
}

impl From<String> for VertexId {
    fn from(s: String) -> Self {
        Self(s)
    }
}

impl From<&VertexId> for VertexId {
    fn from(v: &VertexId) -> Self {
        v.clone()
    }
}

impl Borrow<str> for VertexId {
    fn borrow(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A finite action-observation sequence. May be empty.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Execution(Vec<Label>);

impl Execution {
    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn push(&mut self, label: Label) {
        self.0.push(label);
    }

    /// A copy of `self` extended by one label.
    pub fn extended(&self, label: Label) -> Self {
        let mut next = self.clone();
        next.0.push(label);
        next
    }

    pub fn is_prefix_of(&self, other: &Execution) -> bool {
        other.0.starts_with(&self.0)
    }

    pub fn into_vec(self) -> Vec<Label> {
        self.0
    }
}

impl Deref for Execution {
    type Target = [Label];

    fn deref(&self) -> &[Label] {
        &self.0
    }
}

impl From<Vec<Label>> for Execution {
    fn from(labels: Vec<Label>) -> Self {
        Self(labels)
    }
}

impl FromIterator<Label> for Execution {
    fn from_iter<I: IntoIterator<Item = Label>>(iter: I) -> Self {
        Self(iter.into_iter().collect())
    }
}

impl fmt::Display for Execution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("ε");
        }
        for (i, label) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("·")?;
            }
            write!(f, "{label}")?;
        }
        Ok(())
    }
}

/// A structural problem found by [`PGraph::validate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Finding {
    EmptyInitial,
    UnknownInitial(VertexId),
    DanglingEdge {
        src: VertexId,
        dst: VertexId,
    },
    EmptyLabelSet {
        src: VertexId,
        dst: VertexId,
    },
    KindMismatch {
        src: VertexId,
        dst: VertexId,
        label: Label,
    },
    /// The same label name is used both as an action and as an observation.
    LabelKindClash(String),
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Finding::EmptyInitial => f.write_str("empty initial set"),
            Finding::UnknownInitial(v) => write!(f, "initial vertex `{v}` is not a vertex"),
            Finding::DanglingEdge { src, dst } => {
                write!(f, "edge `{src}` -> `{dst}` has an endpoint that is not a vertex")
            }
            Finding::EmptyLabelSet { src, dst } => {
                write!(f, "edge `{src}` -> `{dst}` carries no labels")
            }
            Finding::KindMismatch { src, dst, label } => write!(
                f,
                "edge `{src}` -> `{dst}` carries {} label `{label}` out of a vertex of the other kind",
                label.kind()
            ),
            Finding::LabelKindClash(name) => {
                write!(f, "label `{name}` is used both as an action and as an observation")
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.findings.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.findings.is_empty() {
            return f.write_str("well-formed");
        }
        for (i, finding) in self.findings.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{finding}")?;
        }
        Ok(())
    }
}

/// A procrustean graph.
///
/// Parallel edges between the same pair of vertices are merged into a single
/// edge whose label set is the union; this does not change the language.
/// The structure may be assembled in a malformed state; call
/// [`PGraph::validate`] before relying on the invariants.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PGraph {
    vertices: BTreeMap<VertexId, Kind>,
    initial: BTreeSet<VertexId>,
    edges: BTreeMap<VertexId, BTreeMap<VertexId, BTreeSet<Label>>>,
}

impl PGraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Compact constructor for hand-written graphs. Edge labels take the
    /// kind of their source vertex (action if the source is unknown).
    pub fn from_parts(
        vertices: &[(&str, Kind)],
        initial: &[&str],
        edges: &[(&str, &str, &[&str])],
    ) -> Self {
        let mut g = Self::new();
        for (id, kind) in vertices {
            g.add_vertex(*id, *kind);
        }
        for id in initial {
            g.mark_initial(*id);
        }
        for (src, dst, names) in edges {
            let kind = g.kind(src).unwrap_or(Kind::Action);
            g.add_edge(*src, *dst, names.iter().map(|n| Label::new(kind, *n)));
        }
        g
    }

    /// Adds a vertex, or changes the kind of an existing one.
    pub fn add_vertex(&mut self, id: impl Into<VertexId>, kind: Kind) {
        self.vertices.insert(id.into(), kind);
    }

    pub fn mark_initial(&mut self, id: impl Into<VertexId>) {
        self.initial.insert(id.into());
    }

    pub fn add_edge(
        &mut self,
        src: impl Into<VertexId>,
        dst: impl Into<VertexId>,
        labels: impl IntoIterator<Item = Label>,
    ) {
        self.edges
            .entry(src.into())
            .or_default()
            .entry(dst.into())
            .or_default()
            .extend(labels);
    }

    pub fn kind(&self, id: &str) -> Option<Kind> {
        self.vertices.get(id).copied()
    }

    pub fn contains(&self, id: &str) -> bool {
        self.vertices.contains_key(id)
    }

    pub fn vertices(&self) -> impl Iterator<Item = (&VertexId, Kind)> + '_ {
        self.vertices.iter().map(|(v, k)| (v, *k))
    }

    pub fn vertex_ids(&self) -> impl Iterator<Item = &VertexId> + '_ {
        self.vertices.keys()
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn initial(&self) -> &BTreeSet<VertexId> {
        &self.initial
    }

    /// Every edge as `(src, dst, labels)`, ordered by endpoints.
    pub fn edges(&self) -> impl Iterator<Item = (&VertexId, &VertexId, &BTreeSet<Label>)> + '_ {
        self.edges
            .iter()
            .flat_map(|(src, out)| out.iter().map(move |(dst, labels)| (src, dst, labels)))
    }

    pub fn edge_count(&self) -> usize {
        self.edges.values().map(BTreeMap::len).sum()
    }

    pub fn out_edges<'a>(
        &'a self,
        id: &str,
    ) -> impl Iterator<Item = (&'a VertexId, &'a BTreeSet<Label>)> + 'a {
        self.edges.get(id).into_iter().flat_map(|out| out.iter())
    }

    /// Labels available on the out-edges of `id`.
    pub fn out_labels(&self, id: &str) -> BTreeSet<&Label> {
        self.out_edges(id).flat_map(|(_, labels)| labels).collect()
    }

    pub fn successors<'a>(
        &'a self,
        id: &str,
        label: &'a Label,
    ) -> impl Iterator<Item = &'a VertexId> + 'a {
        self.out_edges(id)
            .filter(move |(_, labels)| labels.contains(label))
            .map(|(dst, _)| dst)
    }

    /// Vertices with an edge into `id`.
    pub fn in_neighbors(&self, id: &str) -> BTreeSet<&VertexId> {
        self.edges
            .iter()
            .filter(|(_, out)| out.contains_key(id))
            .map(|(src, _)| src)
            .collect()
    }

    /// All labels used on edges.
    pub fn labels(&self) -> BTreeSet<&Label> {
        self.edges().flat_map(|(_, _, labels)| labels).collect()
    }

    /// The set of vertices reached from every member of `from` on `label`.
    pub fn step(&self, from: &BTreeSet<VertexId>, label: &Label) -> BTreeSet<VertexId> {
        from.iter()
            .flat_map(|v| self.successors(v.as_str(), label))
            .cloned()
            .collect()
    }

    pub fn validate(&self) -> ValidationReport {
        let mut findings = Vec::new();
        if self.initial.is_empty() {
            findings.push(Finding::EmptyInitial);
        }
        for v in &self.initial {
            if !self.vertices.contains_key(v) {
                findings.push(Finding::UnknownInitial(v.clone()));
            }
        }
        let mut kinds_by_name: BTreeMap<&str, BTreeSet<Kind>> = BTreeMap::new();
        for (src, dst, labels) in self.edges() {
            if !self.vertices.contains_key(src) || !self.vertices.contains_key(dst) {
                findings.push(Finding::DanglingEdge {
                    src: src.clone(),
                    dst: dst.clone(),
                });
            }
            if labels.is_empty() {
                findings.push(Finding::EmptyLabelSet {
                    src: src.clone(),
                    dst: dst.clone(),
                });
            }
            let src_kind = self.vertices.get(src).copied();
            for label in labels {
                kinds_by_name
                    .entry(label.name())
                    .or_default()
                    .insert(label.kind());
                if src_kind.is_some_and(|k| k != label.kind()) {
                    findings.push(Finding::KindMismatch {
                        src: src.clone(),
                        dst: dst.clone(),
                        label: label.clone(),
                    });
                }
            }
        }
        for (name, kinds) in kinds_by_name {
            if kinds.len() > 1 {
                findings.push(Finding::LabelKindClash(name.to_owned()));
            }
        }
        ValidationReport { findings }
    }

    /// True iff there is exactly one initial vertex and no vertex has two
    /// out-edges sharing a label.
    pub fn is_state_determined(&self) -> bool {
        if self.initial.len() != 1 {
            return false;
        }
        self.edges.values().all(|out| {
            let mut seen = BTreeSet::new();
            out.values().flatten().all(|label| seen.insert(label))
        })
    }

    /// Vertices reached from the initial set along paths labeled exactly `s`.
    /// Empty iff `s` is not in the language.
    pub fn reached_vertices(&self, s: &[Label]) -> BTreeSet<VertexId> {
        let mut current = self.initial.clone();
        for label in s {
            if current.is_empty() {
                break;
            }
            current = self.step(&current, label);
        }
        current
    }

    pub fn accepts(&self, s: &[Label]) -> bool {
        !self.reached_vertices(s).is_empty()
    }

    /// Every execution of length at most `k`.
    pub fn language_upto(&self, k: usize) -> BTreeSet<Execution> {
        let mut language = BTreeSet::new();
        if self.initial.is_empty() {
            return language;
        }
        // Each frontier entry is an execution together with the vertices it
        // reaches, so every execution is produced exactly once.
        let mut frontier = vec![(Execution::empty(), self.initial.clone())];
        for depth in 0..=k {
            let mut next = Vec::new();
            for (s, reached) in frontier {
                if depth < k {
                    let labels: BTreeSet<&Label> = reached
                        .iter()
                        .flat_map(|v| self.out_labels(v.as_str()))
                        .collect();
                    for label in labels {
                        let after = self.step(&reached, label);
                        if !after.is_empty() {
                            next.push((s.extended(label.clone()), after));
                        }
                    }
                }
                language.insert(s);
            }
            frontier = next;
        }
        language
    }

    /// Vertices reachable from the initial set, ignoring labels.
    pub fn reachable(&self) -> BTreeSet<VertexId> {
        let mut seen: BTreeSet<VertexId> = self.initial.clone();
        let mut stack: Vec<VertexId> = seen.iter().cloned().collect();
        while let Some(v) = stack.pop() {
            for (dst, _) in self.out_edges(v.as_str()) {
                if seen.insert(dst.clone()) {
                    stack.push(dst.clone());
                }
            }
        }
        seen
    }

    /// The subgraph induced by `keep`. Initial vertices outside `keep` are
    /// dropped.
    pub fn induced(&self, keep: &BTreeSet<VertexId>) -> PGraph {
        let mut g = PGraph::new();
        for (v, kind) in self.vertices() {
            if keep.contains(v) {
                g.add_vertex(v.clone(), kind);
            }
        }
        for v in self.initial.intersection(keep) {
            g.mark_initial(v.clone());
        }
        for (src, dst, labels) in self.edges() {
            if keep.contains(src) && keep.contains(dst) {
                g.add_edge(src.clone(), dst.clone(), labels.iter().cloned());
            }
        }
        g
    }
}
