//! The plan closure: the subgraph of the state-determined world made of the
//! vertices that lie on some solving plan.
//!
//! Vertices are colored by a worklist fixpoint. Goals start green, non-goal
//! leaves start red, everything else gray:
//!
//! * an action vertex turns green when one of its actions reaches a green
//!   vertex (that action is recorded in the completion policy), and red when
//!   every action reaches a red vertex;
//! * an observation vertex turns green when every observation reaches a
//!   green vertex, and red when some observation reaches a red vertex.
//!
//! Vertices still gray at the fixpoint cannot be driven to the goal in a
//! bounded number of steps and are left out of the closure.
//!
//! The module also holds the constructions used to cross-check the closure:
//! [`synthesize_plan`] turns any closure execution into a solving plan, and
//! [`enumerate_solving_plans`] lists solving plans by brute force without
//! looking at the coloring at all.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::graph::{Execution, Kind, Label, PGraph, VertexId};
use crate::ops::to_state_determined;
use crate::planning::{solves, Plan, PlanningError, PlanningProblem};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ClosureError {
    #[error("state-determined vertex `{0}` mixes action and observation vertices")]
    MixedKindSubset(VertexId),
    #[error("execution {0} is not in the plan closure")]
    SkeletonNotInClosure(Execution),
    #[error("plan enumeration would exceed the budget of {limit} plans")]
    BudgetExceeded { limit: usize },
    #[error(transparent)]
    Planning(#[from] PlanningError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Color {
    Green,
    Red,
    Gray,
}

impl fmt::Display for Color {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Color::Green => "green",
            Color::Red => "red",
            Color::Gray => "gray",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ClosureOptions {
    /// When set, a green successor that is the initial vertex does not by
    /// itself justify coloring its predecessor green.
    pub initial_proviso: bool,
}

#[derive(Debug, Clone)]
pub struct ClosureResult {
    /// The state-determined world the coloring runs on.
    pub wprime: PGraph,
    pub goals_prime: BTreeSet<VertexId>,
    pub coloring: BTreeMap<VertexId, Color>,
    /// Completion policy: one progress-making action per green, non-goal
    /// action vertex.
    pub pi: BTreeMap<VertexId, Label>,
    /// The green-induced subgraph. Its initial set is empty when no solving
    /// plan exists.
    pub pstar: PGraph,
    pub options: ClosureOptions,
    members: BTreeMap<VertexId, BTreeSet<VertexId>>,
}

impl ClosureResult {
    pub fn no_solving_plan(&self) -> bool {
        self.pstar.initial().is_empty()
    }

    pub fn color(&self, v: &str) -> Option<Color> {
        self.coloring.get(v).copied()
    }

    /// World vertices a vertex of the state-determined world stands for.
    pub fn members(&self, v: &str) -> Option<&BTreeSet<VertexId>> {
        self.members.get(v)
    }

    /// The state-determined vertex standing for exactly `{world_vertex}`.
    pub fn vertex_of(&self, world_vertex: &str) -> Option<&VertexId> {
        self.members
            .iter()
            .find(|(_, m)| m.len() == 1 && m.contains(world_vertex))
            .map(|(v, _)| v)
    }

    pub fn green(&self) -> impl Iterator<Item = &VertexId> + '_ {
        self.coloring
            .iter()
            .filter(|(_, c)| **c == Color::Green)
            .map(|(v, _)| v)
    }

    /// The closure viewed as a plan, terminating at its goal vertices.
    pub fn pstar_plan(&self) -> Result<Plan, PlanningError> {
        let terminals = self
            .goals_prime
            .iter()
            .filter(|v| self.pstar.contains(v.as_str()))
            .cloned()
            .collect();
        Plan::new(self.pstar.clone(), terminals)
    }

    /// Worst-case number of steps the policy-follower needs from `v` to reach
    /// a goal while staying on green vertices, or `None` if it cannot.
    pub fn pi_follower_depth(&self, v: &str) -> Option<usize> {
        let mut memo = BTreeMap::new();
        self.follower_depth(v, &mut memo, &mut BTreeSet::new())
    }

    fn follower_depth<'a>(
        &'a self,
        v: &'a str,
        memo: &mut BTreeMap<&'a str, Option<usize>>,
        active: &mut BTreeSet<&'a str>,
    ) -> Option<usize> {
        if let Some(known) = memo.get(v) {
            return *known;
        }
        if self.color(v) != Some(Color::Green) || !active.insert(v) {
            return None;
        }
        let depth = if self.goals_prime.contains(v) {
            Some(0)
        } else {
            match self.wprime.kind(v) {
                Some(Kind::Action) => self.pi.get(v).and_then(|a| {
                    self.wprime
                        .successors(v, a)
                        .map(|next| self.follower_depth(next.as_str(), memo, active))
                        .max()
                        .flatten()
                        .map(|d| d + 1)
                }),
                Some(Kind::Observation) => {
                    let mut worst = Some(0);
                    let mut any = false;
                    for (next, _) in self.wprime.out_edges(v) {
                        any = true;
                        worst = match (worst, self.follower_depth(next.as_str(), memo, active)) {
                            (Some(a), Some(b)) => Some(a.max(b + 1)),
                            _ => None,
                        };
                    }
                    worst.filter(|_| any)
                }
                None => None,
            }
        };
        active.remove(v);
        memo.insert(v, depth);
        depth
    }
}

/// Colors the state-determined world and extracts the closure.
pub fn plan_closure(
    problem: &PlanningProblem,
    options: ClosureOptions,
) -> Result<ClosureResult, ClosureError> {
    let det = to_state_determined(problem.world());
    if let Some(v) = det.mixed_kind().iter().next() {
        return Err(ClosureError::MixedKindSubset(v.clone()));
    }
    let members: BTreeMap<VertexId, BTreeSet<VertexId>> =
        det.subsets().map(|(v, m)| (v.clone(), m.clone())).collect();
    let wprime = det.graph;
    let goals_prime: BTreeSet<VertexId> = members
        .iter()
        .filter(|(_, m)| m.iter().all(|w| problem.is_goal(w.as_str())))
        .map(|(v, _)| v.clone())
        .collect();

    let mut coloring: BTreeMap<VertexId, Color> = BTreeMap::new();
    for v in wprime.vertex_ids() {
        let color = if goals_prime.contains(v) {
            Color::Green
        } else if wprime.out_edges(v.as_str()).all(|(dst, _)| dst == v) {
            Color::Red
        } else {
            Color::Gray
        };
        coloring.insert(v.clone(), color);
    }

    let mut queue: VecDeque<VertexId> = VecDeque::new();
    let enqueue_preds =
        |v: &str, coloring: &BTreeMap<VertexId, Color>, queue: &mut VecDeque<VertexId>| {
            for pred in wprime.in_neighbors(v) {
                if coloring[pred] == Color::Gray {
                    queue.push_back(pred.clone());
                }
            }
        };
    let decided: Vec<VertexId> = coloring
        .iter()
        .filter(|(_, c)| **c != Color::Gray)
        .map(|(v, _)| v.clone())
        .collect();
    for v in &decided {
        enqueue_preds(v.as_str(), &coloring, &mut queue);
    }

    let mut pi = BTreeMap::new();
    let initial = wprime.initial();
    while let Some(v) = queue.pop_front() {
        if coloring[&v] != Color::Gray {
            continue;
        }
        let counts_as_green = |dst: &VertexId| {
            coloring[dst] == Color::Green && !(options.initial_proviso && initial.contains(dst))
        };
        let succ: Vec<(&VertexId, &BTreeSet<Label>)> = wprime.out_edges(v.as_str()).collect();
        let new_color = match wprime.kind(v.as_str()) {
            Some(Kind::Observation) => {
                if succ.iter().any(|(dst, _)| coloring[*dst] == Color::Red) {
                    Some(Color::Red)
                } else if succ.iter().all(|(dst, _)| counts_as_green(dst)) {
                    Some(Color::Green)
                } else {
                    None
                }
            }
            Some(Kind::Action) => {
                let progress = succ
                    .iter()
                    .filter(|(dst, _)| counts_as_green(dst))
                    .flat_map(|(_, labels)| labels.iter())
                    .min();
                if let Some(action) = progress {
                    pi.insert(v.clone(), action.clone());
                    Some(Color::Green)
                } else if succ.iter().all(|(dst, _)| coloring[*dst] == Color::Red) {
                    Some(Color::Red)
                } else {
                    None
                }
            }
            None => None,
        };
        if let Some(color) = new_color {
            coloring.insert(v.clone(), color);
            enqueue_preds(v.as_str(), &coloring, &mut queue);
        }
    }

    let green: BTreeSet<VertexId> = coloring
        .iter()
        .filter(|(_, c)| **c == Color::Green)
        .map(|(v, _)| v.clone())
        .collect();
    let pstar = wprime.induced(&green);

    Ok(ClosureResult {
        wprime,
        goals_prime,
        coloring,
        pi,
        pstar,
        options,
        members,
    })
}

/// Builds a plan that follows `s` through the closure and falls back on the
/// completion policy whenever the world leaves the skeleton or `s` runs out.
///
/// Skeleton vertices are named `s0, s1, ...`; policy vertices are named
/// `pi:` followed by the closure vertex they track.
pub fn synthesize_plan(s: &[Label], closure: &ClosureResult) -> Result<Plan, ClosureError> {
    let skeleton_err = || ClosureError::SkeletonNotInClosure(s.iter().cloned().collect());
    let pstar = &closure.pstar;
    let mut path: Vec<VertexId> = vec![pstar
        .initial()
        .iter()
        .next()
        .ok_or_else(skeleton_err)?
        .clone()];
    for label in s {
        let cur = path.last().expect("path is never empty");
        let next = pstar
            .successors(cur.as_str(), label)
            .next()
            .ok_or_else(skeleton_err)?;
        path.push(next.clone());
    }

    let wprime = &closure.wprime;
    let policy_id = |v: &VertexId| VertexId::new(format!("pi:{v}"));
    let mut graph = PGraph::new();
    let mut policy_entries: Vec<VertexId> = Vec::new();

    let n = s.len();
    let node = |i: usize| {
        if i == n {
            policy_id(&path[n])
        } else {
            VertexId::new(format!("s{i}"))
        }
    };
    policy_entries.push(path[n].clone());
    for i in 0..n {
        let v = &path[i];
        let kind = wprime.kind(v.as_str()).unwrap_or(Kind::Action);
        graph.add_vertex(node(i), kind);
        graph.add_edge(node(i), node(i + 1), [s[i].clone()]);
        if kind == Kind::Observation {
            for (dst, labels) in wprime.out_edges(v.as_str()) {
                for label in labels.iter().filter(|l| **l != s[i]) {
                    graph.add_edge(node(i), policy_id(dst), [label.clone()]);
                    policy_entries.push(dst.clone());
                }
            }
        }
    }
    graph.mark_initial(node(0));

    // Expand the policy region from every entry point.
    let mut terminals = BTreeSet::new();
    let mut seen = BTreeSet::new();
    let mut queue: VecDeque<VertexId> = policy_entries.into_iter().collect();
    while let Some(v) = queue.pop_front() {
        if !seen.insert(v.clone()) {
            continue;
        }
        let id = policy_id(&v);
        let kind = wprime.kind(v.as_str()).unwrap_or(Kind::Action);
        graph.add_vertex(id.clone(), kind);
        if closure.goals_prime.contains(&v) {
            terminals.insert(id);
            continue;
        }
        match kind {
            Kind::Action => {
                if let Some(action) = closure.pi.get(&v) {
                    for dst in wprime.successors(v.as_str(), action) {
                        graph.add_edge(id.clone(), policy_id(dst), [action.clone()]);
                        queue.push_back(dst.clone());
                    }
                }
            }
            Kind::Observation => {
                for (dst, labels) in wprime.out_edges(v.as_str()) {
                    graph.add_edge(id.clone(), policy_id(dst), labels.iter().cloned());
                    queue.push_back(dst.clone());
                }
            }
        }
    }

    Ok(Plan::new(graph, terminals)?)
}

/// Limits for [`enumerate_solving_plans`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnumerationLimits {
    /// Plans with more vertices are skipped.
    pub max_plan_vertices: usize,
    /// Executions are distinguished up to this depth.
    pub depth: usize,
    /// Refuse to enumerate more candidate plans than this.
    pub budget: usize,
}

impl EnumerationLimits {
    pub fn new(max_plan_vertices: usize, depth: usize) -> Self {
        Self {
            max_plan_vertices,
            depth,
            budget: 200_000,
        }
    }
}

/// Tree-shaped strategy over world vertices, cut at the enumeration depth.
#[derive(Debug, Clone)]
enum Strategy {
    Terminate,
    /// Hand over to the canonical finishing strategy.
    Finish,
    Act(Label, VertexId, Box<Strategy>),
    Observe(Vec<(Label, VertexId, Strategy)>),
}

/// Bounded game solver over the world, independent of the closure coloring.
struct Game<'a> {
    problem: &'a PlanningProblem,
    /// `rank[v]` is the least number of steps within which the robot can
    /// force the goal from `v`.
    rank: BTreeMap<&'a VertexId, usize>,
}

impl<'a> Game<'a> {
    fn solve(problem: &'a PlanningProblem) -> Self {
        let world = problem.world();
        let n = world.vertex_count();
        let mut rank: BTreeMap<&VertexId, usize> = BTreeMap::new();
        for (v, _) in world.vertices() {
            if problem.is_goal(v.as_str()) {
                rank.insert(v, 0);
            }
        }
        for round in 1..=n {
            let mut won = Vec::new();
            for (v, kind) in world.vertices() {
                if rank.contains_key(v) {
                    continue;
                }
                let succ: Vec<&VertexId> = world.out_edges(v.as_str()).map(|(d, _)| d).collect();
                let ranked = |d: &&VertexId| rank.get(*d).is_some_and(|r| *r < round);
                let wins = match kind {
                    Kind::Action => succ.iter().any(ranked),
                    Kind::Observation => !succ.is_empty() && succ.iter().all(ranked),
                };
                if wins {
                    won.push(v);
                }
            }
            for v in won {
                rank.insert(v, round);
            }
        }
        Self { problem, rank }
    }

    fn winning(&self, v: &VertexId) -> bool {
        self.rank.contains_key(v)
    }

    /// All strategies from `v` with `left` steps before the cut.
    fn strategies(&self, v: &VertexId, left: usize, budget: usize) -> Result<Vec<Strategy>, usize> {
        let world = self.problem.world();
        let mut options = Vec::new();
        if self.problem.is_goal(v.as_str()) {
            options.push(Strategy::Terminate);
        }
        if left == 0 {
            if self.winning(v) && !self.problem.is_goal(v.as_str()) {
                options.push(Strategy::Finish);
            }
            return Ok(options);
        }
        match world.kind(v.as_str()) {
            Some(Kind::Action) => {
                for (dst, labels) in world.out_edges(v.as_str()) {
                    for label in labels {
                        for sub in self.strategies(dst, left - 1, budget)? {
                            options.push(Strategy::Act(label.clone(), dst.clone(), Box::new(sub)));
                            if options.len() > budget {
                                return Err(budget);
                            }
                        }
                    }
                }
            }
            Some(Kind::Observation) => {
                let mut branches: Vec<(Label, VertexId, Vec<Strategy>)> = Vec::new();
                for (dst, labels) in world.out_edges(v.as_str()) {
                    let subs = self.strategies(dst, left - 1, budget)?;
                    for label in labels {
                        branches.push((label.clone(), dst.clone(), subs.clone()));
                    }
                }
                if !branches.is_empty() && branches.iter().all(|(_, _, subs)| !subs.is_empty()) {
                    let total: usize = branches
                        .iter()
                        .try_fold(1usize, |acc, (_, _, subs)| acc.checked_mul(subs.len()))
                        .unwrap_or(usize::MAX);
                    if total.saturating_add(options.len()) > budget {
                        return Err(budget);
                    }
                    let mut combos: Vec<Vec<(Label, VertexId, Strategy)>> = vec![Vec::new()];
                    for (label, dst, subs) in &branches {
                        let mut grown = Vec::with_capacity(combos.len() * subs.len());
                        for combo in &combos {
                            for sub in subs {
                                let mut next = combo.clone();
                                next.push((label.clone(), dst.clone(), sub.clone()));
                                grown.push(next);
                            }
                        }
                        combos = grown;
                    }
                    options.extend(combos.into_iter().map(Strategy::Observe));
                }
            }
            None => {}
        }
        Ok(options)
    }

    /// Materializes a strategy as a plan. Finishing strategies share one
    /// vertex per `(world vertex, rank)`.
    fn to_plan(&self, root: &VertexId, strategy: &Strategy) -> Result<Plan, PlanningError> {
        let mut graph = PGraph::new();
        let mut terminals = BTreeSet::new();
        let mut counter = 0usize;
        let id = self.emit(root, strategy, &mut graph, &mut terminals, &mut counter);
        graph.mark_initial(id);
        Plan::new(graph, terminals)
    }

    fn emit(
        &self,
        v: &VertexId,
        strategy: &Strategy,
        graph: &mut PGraph,
        terminals: &mut BTreeSet<VertexId>,
        counter: &mut usize,
    ) -> VertexId {
        let world = self.problem.world();
        let kind = world.kind(v.as_str()).unwrap_or(Kind::Action);
        match strategy {
            Strategy::Finish => return self.emit_finish(v, graph, terminals),
            Strategy::Terminate => {
                let id = VertexId::new(format!("t{counter}:{v}"));
                *counter += 1;
                graph.add_vertex(id.clone(), kind);
                terminals.insert(id.clone());
                return id;
            }
            _ => {}
        }
        let id = VertexId::new(format!("t{counter}:{v}"));
        *counter += 1;
        graph.add_vertex(id.clone(), kind);
        match strategy {
            Strategy::Act(label, dst, sub) => {
                let child = self.emit(dst, sub, graph, terminals, counter);
                graph.add_edge(id.clone(), child, [label.clone()]);
            }
            Strategy::Observe(branches) => {
                for (label, dst, sub) in branches {
                    let child = self.emit(dst, sub, graph, terminals, counter);
                    graph.add_edge(id.clone(), child, [label.clone()]);
                }
            }
            Strategy::Finish | Strategy::Terminate => unreachable!(),
        }
        id
    }

    fn emit_finish(
        &self,
        v: &VertexId,
        graph: &mut PGraph,
        terminals: &mut BTreeSet<VertexId>,
    ) -> VertexId {
        let world = self.problem.world();
        let rank = self.rank[v];
        let id = VertexId::new(format!("f{rank}:{v}"));
        if graph.contains(id.as_str()) {
            return id;
        }
        let kind = world.kind(v.as_str()).unwrap_or(Kind::Action);
        graph.add_vertex(id.clone(), kind);
        if rank == 0 {
            terminals.insert(id.clone());
            return id;
        }
        let better = |d: &VertexId| self.rank.get(d).is_some_and(|r| *r < rank);
        match kind {
            Kind::Action => {
                let choice = world
                    .out_edges(v.as_str())
                    .filter(|(d, _)| better(d))
                    .flat_map(|(d, labels)| labels.iter().map(move |l| (l, d)))
                    .min();
                if let Some((label, dst)) = choice {
                    let child = self.emit_finish(dst, graph, terminals);
                    graph.add_edge(id.clone(), child, [label.clone()]);
                }
            }
            Kind::Observation => {
                for (dst, labels) in world.out_edges(v.as_str()) {
                    let child = self.emit_finish(dst, graph, terminals);
                    graph.add_edge(id.clone(), child, labels.iter().cloned());
                }
            }
        }
        id
    }
}

/// Brute-force list of solving plans: every tree-shaped strategy up to
/// `limits.depth` steps (terminating at goals or branching on every world
/// observation), completed past the cut by a shortest finishing strategy
/// and filtered by [`solves`]. Any solving plan generates, up to that depth,
/// the same executions as one of the listed plans.
pub fn enumerate_solving_plans(
    problem: &PlanningProblem,
    limits: EnumerationLimits,
) -> Result<Vec<Plan>, ClosureError> {
    let game = Game::solve(problem);
    let Some(root) = problem.world().initial().iter().next() else {
        return Ok(Vec::new());
    };
    let strategies = game
        .strategies(root, limits.depth, limits.budget)
        .map_err(|limit| ClosureError::BudgetExceeded { limit })?;
    let mut plans = Vec::new();
    for strategy in &strategies {
        let plan = game.to_plan(root, strategy)?;
        if plan.graph().vertex_count() > limits.max_plan_vertices {
            continue;
        }
        if solves(&plan, problem).solves {
            plans.push(plan);
        }
    }
    Ok(plans)
}

/// Outcome of comparing the closure against the enumerated plans.
#[derive(Debug, Clone, Default)]
pub struct Lemma1Report {
    pub depth: usize,
    pub plans_enumerated: usize,
    /// Closure executions no enumerated plan generates.
    pub closure_only: Vec<Execution>,
    /// Plan executions missing from the closure.
    pub plans_only: Vec<Execution>,
    /// Maximal closure executions whose synthesized plan fails to solve the
    /// problem or to generate the execution.
    pub synthesis_failures: Vec<Execution>,
}

impl Lemma1Report {
    pub fn holds(&self) -> bool {
        self.closure_only.is_empty()
            && self.plans_only.is_empty()
            && self.synthesis_failures.is_empty()
    }
}

/// Checks that the closure's language equals the union of the languages of
/// all solving plans, up to `depth`, and that every maximal closure
/// execution is witnessed by [`synthesize_plan`].
pub fn lemma1_check(
    problem: &PlanningProblem,
    depth: usize,
    options: ClosureOptions,
) -> Result<Lemma1Report, ClosureError> {
    let closure = plan_closure(problem, options)?;
    let closure_language = closure.pstar.language_upto(depth);
    let max_vertices = usize::MAX;
    let plans = enumerate_solving_plans(problem, EnumerationLimits::new(max_vertices, depth))?;
    let mut plan_language = BTreeSet::new();
    for plan in &plans {
        plan_language.extend(plan.graph().language_upto(depth));
    }

    let mut synthesis_failures = Vec::new();
    for s in maximal(&closure_language) {
        let ok = synthesize_plan(s, &closure)
            .map(|plan| solves(&plan, problem).solves && plan.graph().accepts(s))
            .unwrap_or(false);
        if !ok {
            synthesis_failures.push(s.clone());
        }
    }

    Ok(Lemma1Report {
        depth,
        plans_enumerated: plans.len(),
        closure_only: closure_language
            .difference(&plan_language)
            .cloned()
            .collect(),
        plans_only: plan_language
            .difference(&closure_language)
            .cloned()
            .collect(),
        synthesis_failures,
    })
}

/// Executions that are not a proper prefix of another member.
pub fn maximal(language: &BTreeSet<Execution>) -> impl Iterator<Item = &Execution> + '_ {
    language.iter().filter(move |s| {
        !language
            .range::<Execution, _>((std::ops::Bound::Excluded(*s), std::ops::Bound::Unbounded))
            .next()
            .is_some_and(|next| s.is_prefix_of(next))
    })
}
