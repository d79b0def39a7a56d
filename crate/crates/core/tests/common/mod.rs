//! Shared fixtures, seeded generators and brute-force oracles.
//!
//! The oracles avoid the library's own traversal code: they simulate label
//! by label over plain adjacency maps built here.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use pgraph::labelmap::LabelMap;
use pgraph::observer::BSet;
use pgraph::planning::PlanningProblem;
use pgraph::scenario::Scenario;
use pgraph::{Execution, Kind, Label, PGraph, VertexId};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const FIXTURES: [&str; 4] = ["f1.json", "f2.json", "f2prime.json", "wheelchair.json"];

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
}

pub fn fixture(name: &str) -> Scenario {
    Scenario::load(fixture_path(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn problem_of(name: &str) -> PlanningProblem {
    fixture(name).problem().unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

const ACTIONS: [&str; 3] = ["u1", "u2", "u3"];
const OBSERVATIONS: [&str; 3] = ["y1", "y2", "y3"];

/// A state-determined world with at most `max_vertices` vertices whose
/// edges alternate between action and observation vertices, together with a
/// nonempty goal set.
pub fn random_world(seed: u64, max_vertices: usize) -> PlanningProblem {
    let mut r = rng(seed);
    let n = r.gen_range(2..=max_vertices);
    let kinds: Vec<Kind> = (0..n)
        .map(|i| {
            if i == 0 || r.gen_bool(0.5) {
                Kind::Action
            } else {
                Kind::Observation
            }
        })
        .collect();
    let mut g = PGraph::new();
    for (i, k) in kinds.iter().enumerate() {
        g.add_vertex(format!("w{i}"), *k);
    }
    g.mark_initial("w0");
    for (i, k) in kinds.iter().enumerate() {
        let targets: Vec<usize> = (0..n).filter(|j| kinds[*j] != *k).collect();
        if targets.is_empty() {
            continue;
        }
        let alphabet = match k {
            Kind::Action => ACTIONS,
            Kind::Observation => OBSERVATIONS,
        };
        let degree = r.gen_range(0..=2);
        let names: Vec<&str> = alphabet.choose_multiple(&mut r, degree).copied().collect();
        for name in names {
            let j = *targets.choose(&mut r).unwrap();
            g.add_edge(format!("w{i}"), format!("w{j}"), [Label::new(*k, name)]);
        }
    }
    let mut goals: BTreeSet<VertexId> = (0..n)
        .filter(|_| r.gen_bool(0.25))
        .map(|i| VertexId::from(format!("w{i}")))
        .collect();
    if goals.is_empty() {
        goals.insert(format!("w{}", r.gen_range(0..n)).into());
    }
    PlanningProblem::new(g, goals).expect("generator builds state-determined worlds")
}

/// An arbitrary p-graph: possibly nondeterministic, several initial
/// vertices, self-loops and cycles. Labels take the kind of their source.
pub fn random_pgraph(
    seed: u64,
    max_vertices: usize,
    actions: &[&str],
    observations: &[&str],
) -> PGraph {
    let mut r = rng(seed);
    let n = r.gen_range(1..=max_vertices);
    let mut g = PGraph::new();
    let kinds: Vec<Kind> = (0..n)
        .map(|_| {
            if r.gen_bool(0.5) {
                Kind::Action
            } else {
                Kind::Observation
            }
        })
        .collect();
    for (i, k) in kinds.iter().enumerate() {
        g.add_vertex(format!("v{i}"), *k);
    }
    g.mark_initial("v0");
    for i in 1..n {
        if r.gen_bool(0.2) {
            g.mark_initial(format!("v{i}"));
        }
    }
    for (i, k) in kinds.iter().enumerate() {
        let alphabet = match k {
            Kind::Action => actions,
            Kind::Observation => observations,
        };
        for _ in 0..r.gen_range(0..=3) {
            let j = r.gen_range(0..n);
            let name = alphabet.choose(&mut r).unwrap();
            g.add_edge(format!("v{i}"), format!("v{j}"), [Label::new(*k, *name)]);
        }
    }
    g
}

/// A label map onto a smaller image space, conflating some labels.
pub fn random_labelmap(seed: u64, g: &PGraph) -> LabelMap {
    let mut r = rng(seed);
    let entries: Vec<(Label, String)> = g
        .labels()
        .into_iter()
        .map(|l| {
            let prefix = match l.kind() {
                Kind::Action => "xa",
                Kind::Observation => "xo",
            };
            (l.clone(), format!("{prefix}{}", r.gen_range(0..2)))
        })
        .collect();
    LabelMap::new(entries, false).unwrap()
}

/// A filter over the image space of `h`.
pub fn random_filter(seed: u64, h: &LabelMap, max_vertices: usize) -> PGraph {
    let images: Vec<Label> = h.image_space().into_iter().collect();
    let actions: Vec<&str> = images
        .iter()
        .filter(|l| l.kind() == Kind::Action)
        .map(|l| l.name())
        .collect();
    let observations: Vec<&str> = images
        .iter()
        .filter(|l| l.kind() == Kind::Observation)
        .map(|l| l.name())
        .collect();
    let mut r = rng(seed);
    let n = r.gen_range(1..=max_vertices);
    let mut g = PGraph::new();
    for i in 0..n {
        let k = if r.gen_bool(0.5) {
            Kind::Action
        } else {
            Kind::Observation
        };
        g.add_vertex(format!("i{i}"), k);
    }
    g.mark_initial("i0");
    for i in 0..n {
        for (kind, names) in [(Kind::Action, &actions), (Kind::Observation, &observations)] {
            for name in names.iter() {
                // About half the images are handled at each vertex, a
                // quarter of those nondeterministically.
                if r.gen_bool(0.5) {
                    let targets = if r.gen_bool(0.25) { 2 } else { 1 };
                    for _ in 0..targets {
                        let j = r.gen_range(0..n);
                        g.add_edge(format!("i{i}"), format!("i{j}"), [Label::new(kind, *name)]);
                    }
                }
            }
        }
    }
    g
}

// ---------------------------------------------------------------------------
// Oracles

/// Plain adjacency: (src, label) -> targets.
pub fn adjacency(g: &PGraph) -> BTreeMap<(String, Label), Vec<String>> {
    let mut adj: BTreeMap<(String, Label), Vec<String>> = BTreeMap::new();
    for (src, dst, labels) in g.edges() {
        for l in labels {
            adj.entry((src.to_string(), l.clone()))
                .or_default()
                .push(dst.to_string());
        }
    }
    adj
}

/// Every label sequence of at most `k` labels that some path from an
/// initial vertex carries, by depth-first search over label sequences with
/// the set of vertices each prefix can be in.
pub fn language_oracle(g: &PGraph, k: usize) -> BTreeSet<Execution> {
    let adj = adjacency(g);
    let mut by_source: BTreeMap<&str, BTreeSet<&Label>> = BTreeMap::new();
    for (src, label) in adj.keys() {
        by_source.entry(src.as_str()).or_default().insert(label);
    }
    fn walk(
        adj: &BTreeMap<(String, Label), Vec<String>>,
        by_source: &BTreeMap<&str, BTreeSet<&Label>>,
        at: &BTreeSet<String>,
        path: &mut Vec<Label>,
        k: usize,
        out: &mut BTreeSet<Execution>,
    ) {
        out.insert(Execution::from(path.clone()));
        if path.len() == k {
            return;
        }
        let labels: BTreeSet<&Label> = at
            .iter()
            .flat_map(|v| by_source.get(v.as_str()).into_iter().flatten().copied())
            .collect();
        for l in labels {
            let next: BTreeSet<String> = at
                .iter()
                .flat_map(|v| {
                    adj.get(&(v.clone(), l.clone()))
                        .into_iter()
                        .flatten()
                        .cloned()
                })
                .collect();
            path.push(l.clone());
            walk(adj, by_source, &next, path, k, out);
            path.pop();
        }
    }
    let start: BTreeSet<String> = g
        .initial()
        .iter()
        .filter(|v| g.contains(v.as_str()))
        .map(|v| v.to_string())
        .collect();
    let mut out = BTreeSet::new();
    if !start.is_empty() {
        walk(&adj, &by_source, &start, &mut Vec::new(), k, &mut out);
    }
    out
}

/// Label-by-label simulation over plain adjacency.
pub struct Sim {
    adj: BTreeMap<(String, Label), Vec<String>>,
    initial: BTreeSet<String>,
}

impl Sim {
    pub fn new(g: &PGraph) -> Self {
        Self {
            adj: adjacency(g),
            initial: g.initial().iter().map(|v| v.to_string()).collect(),
        }
    }

    pub fn reached(&self, s: &[Label]) -> BTreeSet<String> {
        let mut current = self.initial.clone();
        for l in s {
            current = current
                .iter()
                .flat_map(|v| {
                    self.adj
                        .get(&(v.clone(), l.clone()))
                        .cloned()
                        .unwrap_or_default()
                })
                .collect();
        }
        current
    }
}

/// Vertices reached by `s`.
pub fn reached_oracle(g: &PGraph, s: &[Label]) -> BTreeSet<String> {
    Sim::new(g).reached(s)
}

pub fn image_oracle(h: &LabelMap, s: &[Label]) -> Vec<Label> {
    let table: BTreeMap<&Label, &str> = h.entries().collect();
    s.iter().map(|l| Label::new(l.kind(), table[l])).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleMode {
    Exact,
    Member,
}

/// World states compatible with arriving at `b`: enumerate every execution
/// of the world up to `k` labels, keep those the divulged graph also
/// generates and whose image reaches exactly `b` (or some member of `b`),
/// and collect the world vertices they reach.
pub fn estimate_oracle(
    world: &PGraph,
    h: &LabelMap,
    filter: &PGraph,
    divulged: &PGraph,
    b: &BSet,
    mode: OracleMode,
    k: usize,
) -> BTreeSet<String> {
    let target: BTreeSet<String> = b.members().iter().map(|v| v.to_string()).collect();
    let (w, f, d) = (Sim::new(world), Sim::new(filter), Sim::new(divulged));
    let mut out = BTreeSet::new();
    for s in language_oracle(world, k) {
        if d.reached(&s).is_empty() {
            continue;
        }
        let reached = f.reached(&image_oracle(h, &s));
        let hit = match mode {
            OracleMode::Exact => reached == target,
            OracleMode::Member => !reached.is_disjoint(&target),
        };
        if hit {
            out.extend(w.reached(&s));
        }
    }
    out
}

/// Filter sets reached exactly by the image of some execution in
/// L(W) ∩ L(D) up to `k` labels.
pub fn realized_oracle(
    world: &PGraph,
    h: &LabelMap,
    filter: &PGraph,
    divulged: &PGraph,
    k: usize,
) -> BTreeSet<BTreeSet<String>> {
    let (f, d) = (Sim::new(filter), Sim::new(divulged));
    language_oracle(world, k)
        .into_iter()
        .filter(|s| !d.reached(s).is_empty())
        .map(|s| f.reached(&image_oracle(h, &s)))
        .filter(|r| !r.is_empty())
        .collect()
}

pub fn to_strings(set: &BTreeSet<VertexId>) -> BTreeSet<String> {
    set.iter().map(|v| v.to_string()).collect()
}
