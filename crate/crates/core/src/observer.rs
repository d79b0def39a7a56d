//! The observer's side: which filter states a disclosed stream can reach,
//! and which world states are compatible with reaching them.
//!
//! Estimates come from the tensor product of the world, the divulged plan
//! and the filter lifted back onto world labels. A product vertex
//! `(w, (d, i))` is reached by exactly the executions that reach `w` in the
//! world, `d` in the divulged plan and `i` in the lifted filter, so the world
//! components of the vertices tagged with a filter set `B` are the world
//! states the observer cannot rule out after a stream arriving at `B`.
//!
//! Two readings of "arriving at `B`" are supported. [`Mode::Exact`]
//! determinizes the lifted filter first, so a product vertex carries the
//! full set of filter states its executions reach and must equal `B`.
//! [`Mode::Member`] keeps the filter as is and accepts any product vertex
//! whose filter state lies in `B`. On deterministic filters the two agree.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use thiserror::Error;

use crate::closure::{plan_closure, ClosureError, ClosureOptions};
use crate::graph::{Execution, Label, PGraph, VertexId};
use crate::labelmap::{LabelMap, LabelMapError};
use crate::ops::{product, to_state_determined, union_all, Determinized, Product};
use crate::planning::{Plan, PlanningProblem};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ObserverError {
    #[error("a plan set must contain at least one plan")]
    EmptyPlanSet,
    #[error(transparent)]
    Closure(#[from] ClosureError),
    #[error(transparent)]
    LabelMap(#[from] LabelMapError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Observer {
    /// Filter over the image space of the label map.
    pub filter: PGraph,
    /// The divulged plan, over world labels.
    pub divulged: PGraph,
}

/// A set of filter states that some disclosed stream reaches exactly.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BSet(BTreeSet<VertexId>);

impl BSet {
    pub fn new(members: impl IntoIterator<Item = VertexId>) -> Self {
        Self(members.into_iter().collect())
    }

    pub fn members(&self) -> &BTreeSet<VertexId> {
        &self.0
    }
}

impl fmt::Display for BSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let inner: Vec<&str> = self.0.iter().map(VertexId::as_str).collect();
        write!(f, "{{{}}}", inner.join(", "))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Estimate {
    pub b: BSet,
    pub world_states: BTreeSet<VertexId>,
    /// A shortest execution that leads the observer to `b` while the world
    /// is in the given state.
    pub witnesses: BTreeMap<VertexId, Execution>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    #[default]
    Exact,
    Member,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Exact => "exact",
            Mode::Member => "member",
        })
    }
}

/// How far to explore the product graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Reach {
    /// Full graph reachability.
    #[default]
    Unbounded,
    /// Only executions of at most this many labels.
    Depth(usize),
}

/// What the observer knows about the robot's plan in advance.
#[derive(Debug, Clone)]
pub enum DivulgenceCase {
    /// Case I: the executed plan itself.
    ExactPlan(Plan),
    /// Case II: the executed plan hidden among finitely many.
    PlanSet(Vec<Plan>),
    /// Case III: only that the robot runs some solving plan.
    SomePlan(PlanningProblem),
    /// Case IV: nothing beyond the world.
    WorldOnly(PGraph),
}

pub fn divulged_from_case(case: &DivulgenceCase) -> Result<PGraph, ObserverError> {
    divulged_from_case_with(case, ClosureOptions::default())
}

pub fn divulged_from_case_with(
    case: &DivulgenceCase,
    options: ClosureOptions,
) -> Result<PGraph, ObserverError> {
    Ok(match case {
        DivulgenceCase::ExactPlan(plan) => plan.graph().clone(),
        DivulgenceCase::PlanSet(plans) => {
            if plans.is_empty() {
                return Err(ObserverError::EmptyPlanSet);
            }
            union_all(plans.iter().map(Plan::graph))
        }
        DivulgenceCase::SomePlan(problem) => plan_closure(problem, options)?.pstar,
        DivulgenceCase::WorldOnly(world) => world.clone(),
    })
}

/// Filter-state sets reached exactly by some image stream of at most `k`
/// labels: the vertices of the determinized filter within `k` steps.
pub fn exact_reaching_sets(filter: &PGraph, k: usize) -> BTreeSet<BSet> {
    let det = to_state_determined(filter);
    let mut out = BTreeSet::new();
    let mut seen = BTreeSet::new();
    let mut queue: VecDeque<(&VertexId, usize)> =
        det.graph.initial().iter().map(|v| (v, 0)).collect();
    while let Some((v, depth)) = queue.pop_front() {
        if !seen.insert(v) {
            continue;
        }
        if let Some(members) = det.members(v.as_str()) {
            out.insert(BSet(members.clone()));
        }
        if depth < k {
            for (dst, _) in det.graph.out_edges(v.as_str()) {
                queue.push_back((dst, depth + 1));
            }
        }
    }
    out
}

/// Breadth-first exploration of a product graph recording a shortest
/// execution to every reached vertex.
fn explore(g: &PGraph, reach: Reach) -> BTreeMap<VertexId, Execution> {
    let mut found: BTreeMap<VertexId, Execution> = BTreeMap::new();
    let mut queue = VecDeque::new();
    for v in g.initial() {
        found.insert(v.clone(), Execution::empty());
        queue.push_back(v.clone());
    }
    while let Some(v) = queue.pop_front() {
        let s = found[&v].clone();
        if let Reach::Depth(k) = reach {
            if s.len() >= k {
                continue;
            }
        }
        for (dst, labels) in g.out_edges(v.as_str()) {
            if found.contains_key(dst) {
                continue;
            }
            let label: &Label = labels.iter().next().expect("edges carry labels");
            found.insert(dst.clone(), s.extended(label.clone()));
            queue.push_back(dst.clone());
        }
    }
    found
}

/// A reached vertex of `W × (D × F)` split into its world part and the
/// `(D × F)` remainder.
struct Tagged {
    world: VertexId,
    rest: VertexId,
    witness: Execution,
}

fn tag(outer: &Product, reached: BTreeMap<VertexId, Execution>) -> Vec<Tagged> {
    reached
        .into_iter()
        .filter_map(|(v, witness)| {
            let (world, rest) = outer.pair(v.as_str())?.clone();
            Some(Tagged {
                world,
                rest,
                witness,
            })
        })
        .collect()
}

/// Precomputed products for one `(W, h, I, D)` combination.
pub struct Estimator {
    det_filter: Determinized,
    exact: Vec<(BSet, VertexId, Execution)>,
    member: Vec<(VertexId, VertexId, Execution)>,
}

impl Estimator {
    pub fn new(
        world: &PGraph,
        h: &LabelMap,
        observer: &Observer,
        reach: Reach,
    ) -> Result<Self, ObserverError> {
        let lifted = h.preimage_graph(&observer.filter, false)?;
        let det_filter = to_state_determined(&lifted);

        let inner = product(&observer.divulged, &det_filter.graph);
        let outer = product(world, &inner.graph);
        let exact = tag(&outer, explore(&outer.graph, reach))
            .into_iter()
            .filter_map(|t| {
                let subset = inner.right(t.rest.as_str())?;
                let members = det_filter.members(subset.as_str())?;
                Some((BSet(members.clone()), t.world, t.witness))
            })
            .collect();

        let inner = product(&observer.divulged, &lifted);
        let outer = product(world, &inner.graph);
        let member = tag(&outer, explore(&outer.graph, reach))
            .into_iter()
            .filter_map(|t| {
                let filter_vertex = inner.right(t.rest.as_str())?.clone();
                Some((filter_vertex, t.world, t.witness))
            })
            .collect();

        Ok(Self {
            det_filter,
            exact,
            member,
        })
    }

    /// Filter sets reached by at least one execution in L(W) ∩ L(D).
    pub fn realized(&self) -> BTreeSet<BSet> {
        self.exact.iter().map(|(b, _, _)| b.clone()).collect()
    }

    pub fn estimate(&self, b: &BSet, mode: Mode) -> Estimate {
        let mut witnesses: BTreeMap<VertexId, Execution> = BTreeMap::new();
        let mut record = |w: &VertexId, s: &Execution| {
            let slot = witnesses.entry(w.clone()).or_insert_with(|| s.clone());
            if (s.len(), s) < (slot.len(), &*slot) {
                *slot = s.clone();
            }
        };
        match mode {
            Mode::Exact => {
                for (reached, w, s) in &self.exact {
                    if reached == b {
                        record(w, s);
                    }
                }
            }
            Mode::Member => {
                for (i, w, s) in &self.member {
                    if b.0.contains(i) {
                        record(w, s);
                    }
                }
            }
        }
        Estimate {
            b: b.clone(),
            world_states: witnesses.keys().cloned().collect(),
            witnesses,
        }
    }

    /// One estimate per realized filter set, plus (with `include_vacuous`)
    /// an empty estimate for every other set the filter can reach.
    pub fn all(&self, mode: Mode, include_vacuous: bool) -> Vec<Estimate> {
        let mut bsets = self.realized();
        if include_vacuous {
            bsets.extend(
                self.det_filter
                    .subsets()
                    .map(|(_, members)| BSet(members.clone())),
            );
        }
        let realized = self.realized();
        bsets
            .iter()
            .map(|b| {
                if realized.contains(b) {
                    self.estimate(b, mode)
                } else {
                    Estimate {
                        b: b.clone(),
                        world_states: BTreeSet::new(),
                        witnesses: BTreeMap::new(),
                    }
                }
            })
            .collect()
    }
}

pub fn estimate_world_states(
    world: &PGraph,
    h: &LabelMap,
    observer: &Observer,
    b: &BSet,
    mode: Mode,
    reach: Reach,
) -> Result<Estimate, ObserverError> {
    Ok(Estimator::new(world, h, observer, reach)?.estimate(b, mode))
}

pub fn all_estimates(
    world: &PGraph,
    h: &LabelMap,
    observer: &Observer,
    mode: Mode,
    reach: Reach,
) -> Result<Vec<Estimate>, ObserverError> {
    Ok(Estimator::new(world, h, observer, reach)?.all(mode, false))
}
