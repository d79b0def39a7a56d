//! Planning problems, plans, the `solves` relation and a seeded simulator.
//!
//! A plan is executed jointly with the world: at an action vertex the plan
//! offers actions which the world must enable, at an observation vertex the
//! world emits an observation which the plan must be ready for. Entering a
//! terminal plan vertex stops execution, and it must do so in the goal
//! region after finitely many steps whatever the world emits.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::graph::{Execution, Kind, Label, PGraph, ValidationReport, VertexId};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PlanningError {
    #[error("malformed graph: {0}")]
    Malformed(ValidationReport),
    #[error("world graph is not state-determined")]
    NotStateDetermined,
    #[error("planning problem has no goal vertices")]
    NoGoals,
    #[error("`{0}` is not a vertex of the graph")]
    UnknownVertex(VertexId),
}

/// A state-determined world together with its goal region.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlanningProblem {
    world: PGraph,
    goals: BTreeSet<VertexId>,
}

impl PlanningProblem {
    pub fn new(world: PGraph, goals: BTreeSet<VertexId>) -> Result<Self, PlanningError> {
        let report = world.validate();
        if !report.is_ok() {
            return Err(PlanningError::Malformed(report));
        }
        if !world.is_state_determined() {
            return Err(PlanningError::NotStateDetermined);
        }
        if goals.is_empty() {
            return Err(PlanningError::NoGoals);
        }
        if let Some(v) = goals.iter().find(|v| !world.contains(v.as_str())) {
            return Err(PlanningError::UnknownVertex(v.clone()));
        }
        Ok(Self { world, goals })
    }

    pub fn world(&self) -> &PGraph {
        &self.world
    }

    pub fn goals(&self) -> &BTreeSet<VertexId> {
        &self.goals
    }

    pub fn is_goal(&self, v: &str) -> bool {
        self.goals.contains(v)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Plan {
    graph: PGraph,
    terminals: BTreeSet<VertexId>,
}

impl Plan {
    pub fn new(graph: PGraph, terminals: BTreeSet<VertexId>) -> Result<Self, PlanningError> {
        let report = graph.validate();
        if !report.is_ok() {
            return Err(PlanningError::Malformed(report));
        }
        if let Some(v) = terminals.iter().find(|v| !graph.contains(v.as_str())) {
            return Err(PlanningError::UnknownVertex(v.clone()));
        }
        Ok(Self { graph, terminals })
    }

    pub fn graph(&self) -> &PGraph {
        &self.graph
    }

    pub fn terminals(&self) -> &BTreeSet<VertexId> {
        &self.terminals
    }

    pub fn is_terminal(&self, v: &str) -> bool {
        self.terminals.contains(v)
    }
}

/// The clauses of the `solves` relation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Clause {
    /// (a) every action the plan offers is enabled in the world.
    EnabledActions,
    /// (b) every observation the world can emit has a plan transition.
    HandledObservations,
    /// (c) termination happens only in the goal region.
    GoalTermination,
    /// (d) every joint run terminates after finitely many steps.
    FiniteTermination,
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let text = match self {
            Clause::EnabledActions => "(a) offered action not enabled in the world",
            Clause::HandledObservations => "(b) world observation not handled by the plan",
            Clause::GoalTermination => "(c) termination outside the goal region",
            Clause::FiniteTermination => "(d) termination not forced in finitely many steps",
        };
        f.write_str(text)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnosis {
    pub clause: Clause,
    /// Joint `(plan vertex, world vertex)` states from an initial pair to the
    /// offending one.
    pub path: Vec<(VertexId, VertexId)>,
    pub execution: Execution,
    pub detail: String,
}

impl fmt::Display for Diagnosis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} after {}: {}",
            self.clause, self.execution, self.detail
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolveReport {
    pub solves: bool,
    pub diagnosis: Option<Diagnosis>,
}

type Pair = (VertexId, VertexId);

/// What happens at one joint state.
enum Expansion {
    Terminal,
    Moves(Vec<(Label, Pair)>),
    Violation(Clause, String),
}

fn expand(plan: &Plan, problem: &PlanningProblem, (p, w): &Pair) -> Expansion {
    let world = problem.world();
    if plan.is_terminal(p.as_str()) {
        if problem.is_goal(w.as_str()) {
            return Expansion::Terminal;
        }
        return Expansion::Violation(
            Clause::GoalTermination,
            format!("plan terminates at `{p}` while the world is at non-goal `{w}`"),
        );
    }
    let mut moves = Vec::new();
    match plan.graph().kind(p.as_str()) {
        Some(Kind::Action) => {
            for action in plan.graph().out_labels(p.as_str()) {
                let world_next: Vec<&VertexId> = world.successors(w.as_str(), action).collect();
                if world_next.is_empty() {
                    return Expansion::Violation(
                        Clause::EnabledActions,
                        format!("action `{action}` offered at `{p}` is not enabled at `{w}`"),
                    );
                }
                for pn in plan.graph().successors(p.as_str(), action) {
                    for wn in &world_next {
                        moves.push((action.clone(), (pn.clone(), (*wn).clone())));
                    }
                }
            }
        }
        Some(Kind::Observation) => {
            let emitted = world
                .out_labels(w.as_str())
                .into_iter()
                .filter(|l| l.kind() == Kind::Observation);
            for obs in emitted {
                let plan_next: Vec<&VertexId> = plan.graph().successors(p.as_str(), obs).collect();
                if plan_next.is_empty() {
                    return Expansion::Violation(
                        Clause::HandledObservations,
                        format!("world can emit `{obs}` at `{w}` but plan vertex `{p}` has no transition for it"),
                    );
                }
                for wn in world.successors(w.as_str(), obs) {
                    for pn in &plan_next {
                        moves.push((obs.clone(), ((*pn).clone(), wn.clone())));
                    }
                }
            }
        }
        None => {}
    }
    if moves.is_empty() {
        return Expansion::Violation(
            Clause::FiniteTermination,
            format!("joint state (`{p}`, `{w}`) is stuck without terminating"),
        );
    }
    Expansion::Moves(moves)
}

fn witness(parents: &BTreeMap<Pair, Option<(Pair, Label)>>, end: &Pair) -> (Vec<Pair>, Execution) {
    let mut path = vec![end.clone()];
    let mut labels = Vec::new();
    let mut cur = end.clone();
    while let Some(Some((prev, label))) = parents.get(&cur) {
        labels.push(label.clone());
        path.push(prev.clone());
        cur = prev.clone();
    }
    path.reverse();
    labels.reverse();
    (path, labels.into())
}

/// Decides whether `plan` solves `problem`, naming the first violated clause
/// (in breadth-first order over joint states) with a shortest witness.
pub fn solves(plan: &Plan, problem: &PlanningProblem) -> SolveReport {
    let world = problem.world();
    let mut parents: BTreeMap<Pair, Option<(Pair, Label)>> = BTreeMap::new();
    let mut queue = VecDeque::new();
    for p in plan.graph().initial() {
        for w in world.initial() {
            let pair = (p.clone(), w.clone());
            if parents.insert(pair.clone(), None).is_none() {
                queue.push_back(pair);
            }
        }
    }

    let mut successors: BTreeMap<Pair, Vec<Pair>> = BTreeMap::new();
    while let Some(pair) = queue.pop_front() {
        match expand(plan, problem, &pair) {
            Expansion::Terminal => {}
            Expansion::Violation(clause, detail) => {
                let (path, execution) = witness(&parents, &pair);
                return SolveReport {
                    solves: false,
                    diagnosis: Some(Diagnosis {
                        clause,
                        path,
                        execution,
                        detail,
                    }),
                };
            }
            Expansion::Moves(moves) => {
                let mut next = Vec::with_capacity(moves.len());
                for (label, target) in moves {
                    if !parents.contains_key(&target) {
                        parents.insert(target.clone(), Some((pair.clone(), label)));
                        queue.push_back(target.clone());
                    }
                    next.push(target);
                }
                successors.insert(pair, next);
            }
        }
    }

    // Every joint state is now either terminal-in-goal or has moves; the
    // remaining failure mode is a cycle through non-terminal states.
    if let Some(on_cycle) = find_cycle(&successors) {
        let (path, execution) = witness(&parents, &on_cycle);
        return SolveReport {
            solves: false,
            diagnosis: Some(Diagnosis {
                clause: Clause::FiniteTermination,
                path,
                execution,
                detail: format!(
                    "joint state (`{}`, `{}`) lies on a cycle the world can keep the plan in",
                    on_cycle.0, on_cycle.1
                ),
            }),
        };
    }

    SolveReport {
        solves: true,
        diagnosis: None,
    }
}

/// Some state on a cycle of the (non-terminal) successor relation.
fn find_cycle(successors: &BTreeMap<Pair, Vec<Pair>>) -> Option<Pair> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        Open,
        Done,
    }
    let mut marks: BTreeMap<&Pair, Mark> = BTreeMap::new();
    for root in successors.keys() {
        if marks.contains_key(root) {
            continue;
        }
        let mut stack: Vec<(&Pair, usize)> = vec![(root, 0)];
        marks.insert(root, Mark::Open);
        while let Some((node, idx)) = stack.pop() {
            let next = successors.get(node).map(Vec::as_slice).unwrap_or(&[]);
            if idx < next.len() {
                stack.push((node, idx + 1));
                let child = &next[idx];
                match marks.get(child) {
                    Some(Mark::Open) => return Some(child.clone()),
                    Some(Mark::Done) => {}
                    None => {
                        marks.insert(child, Mark::Open);
                        stack.push((child, 0));
                    }
                }
            } else {
                marks.insert(node, Mark::Done);
            }
        }
    }
    None
}

/// L(plan) ⊆ L(divulged), compared up to depth `k`.
pub fn check_divulgence_superset(divulged: &PGraph, plan: &Plan, k: usize) -> bool {
    plan.graph()
        .language_upto(k)
        .is_subset(&divulged.language_upto(k))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Adversary {
    /// Observations drawn uniformly from the seeded generator.
    #[default]
    UniformRandom,
    /// Observations steering towards the nearest violation of `solves`,
    /// found by breadth-first search from the current joint state.
    Minimizing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    TerminatedAtGoal,
    TerminatedOffGoal,
    Blocked,
    StepLimit,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let text = match self {
            Outcome::TerminatedAtGoal => "terminated at goal",
            Outcome::TerminatedOffGoal => "terminated off goal",
            Outcome::Blocked => "blocked",
            Outcome::StepLimit => "step limit",
        };
        f.write_str(text)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Step {
    pub plan_vertex: VertexId,
    pub world_vertex: VertexId,
    pub label: Label,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    pub steps: Vec<Step>,
    pub outcome: Outcome,
}

impl Trace {
    pub fn execution(&self) -> Execution {
        self.steps.iter().map(|s| s.label.clone()).collect()
    }
}

/// The single move the simulator makes at an action vertex: the smallest
/// offered action, first plan and world successors.
fn action_move(plan: &Plan, world: &PGraph, p: &VertexId, w: &VertexId) -> Option<(Label, Pair)> {
    let action = plan
        .graph()
        .out_labels(p.as_str())
        .into_iter()
        .next()?
        .clone();
    let pn = plan.graph().successors(p.as_str(), &action).next()?.clone();
    let wn = world.successors(w.as_str(), &action).next()?.clone();
    Some((action, (pn, wn)))
}

fn emittable(world: &PGraph, w: &VertexId) -> Vec<Label> {
    world
        .out_labels(w.as_str())
        .into_iter()
        .filter(|l| l.kind() == Kind::Observation)
        .cloned()
        .collect()
}

/// First observation of a shortest route from `start` to a joint state that
/// blocks or terminates off goal, under the simulator's action choices.
fn minimizing_choice(plan: &Plan, problem: &PlanningProblem, start: &Pair) -> Option<Label> {
    let world = problem.world();
    let mut seen = BTreeSet::from([start.clone()]);
    let mut queue: VecDeque<(Pair, Option<Label>)> = VecDeque::from([(start.clone(), None)]);
    while let Some(((p, w), via)) = queue.pop_front() {
        if plan.is_terminal(p.as_str()) {
            if !problem.is_goal(w.as_str()) {
                return via;
            }
            continue;
        }
        match plan.graph().kind(p.as_str()) {
            Some(Kind::Action) => match action_move(plan, world, &p, &w) {
                Some((_, next)) => {
                    if seen.insert(next.clone()) {
                        queue.push_back((next, via));
                    }
                }
                None => return via,
            },
            Some(Kind::Observation) => {
                let options = emittable(world, &w);
                if options.is_empty() {
                    return via;
                }
                for obs in options {
                    let via = via.clone().or_else(|| Some(obs.clone()));
                    let pn = plan.graph().successors(p.as_str(), &obs).next().cloned();
                    let wn = world.successors(w.as_str(), &obs).next().cloned();
                    let (Some(pn), Some(wn)) = (pn, wn) else {
                        return via;
                    };
                    let next = (pn, wn);
                    if seen.insert(next.clone()) {
                        queue.push_back((next, via));
                    }
                }
            }
            None => return via,
        }
    }
    None
}

/// Runs `plan` against the world for at most `max_steps` labels.
pub fn simulate(
    plan: &Plan,
    problem: &PlanningProblem,
    seed: u64,
    max_steps: usize,
    adversary: Adversary,
) -> Trace {
    let world = problem.world();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut steps = Vec::new();
    let (Some(mut p), Some(mut w)) = (
        plan.graph().initial().iter().next().cloned(),
        world.initial().iter().next().cloned(),
    ) else {
        return Trace {
            steps,
            outcome: Outcome::Blocked,
        };
    };

    let outcome = loop {
        if plan.is_terminal(p.as_str()) {
            break if problem.is_goal(w.as_str()) {
                Outcome::TerminatedAtGoal
            } else {
                Outcome::TerminatedOffGoal
            };
        }
        if steps.len() >= max_steps {
            break Outcome::StepLimit;
        }
        match plan.graph().kind(p.as_str()) {
            Some(Kind::Action) => {
                let Some((action, (pn, wn))) = action_move(plan, world, &p, &w) else {
                    break Outcome::Blocked;
                };
                steps.push(Step {
                    plan_vertex: p.clone(),
                    world_vertex: w.clone(),
                    label: action,
                });
                p = pn;
                w = wn;
            }
            Some(Kind::Observation) => {
                let options = emittable(world, &w);
                if options.is_empty() {
                    break Outcome::Blocked;
                }
                let obs = match adversary {
                    Adversary::UniformRandom => options[rng.gen_range(0..options.len())].clone(),
                    Adversary::Minimizing => {
                        minimizing_choice(plan, problem, &(p.clone(), w.clone()))
                            .unwrap_or_else(|| options[0].clone())
                    }
                };
                steps.push(Step {
                    plan_vertex: p.clone(),
                    world_vertex: w.clone(),
                    label: obs.clone(),
                });
                let Some(wn) = world.successors(w.as_str(), &obs).next().cloned() else {
                    break Outcome::Blocked;
                };
                let Some(pn) = plan.graph().successors(p.as_str(), &obs).next().cloned() else {
                    break Outcome::Blocked;
                };
                p = pn;
                w = wn;
            }
            None => break Outcome::Blocked,
        }
    };
    Trace { steps, outcome }
}
