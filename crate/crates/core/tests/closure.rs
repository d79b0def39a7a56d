//! Plan closure, synthesis, enumeration and simulation on fixtures and
//! random worlds.

mod common;

use std::collections::BTreeSet;

use common::*;
use pgraph::closure::{
    enumerate_solving_plans, plan_closure, synthesize_plan, ClosureOptions, Color,
    EnumerationLimits,
};
use pgraph::planning::{check_divulgence_superset, simulate, solves, Adversary, Outcome};
use pgraph::{Kind, Label, PGraph};
use proptest::prelude::*;

const DEPTH: usize = 6;

#[test]
fn fixtures_without_solving_plans() {
    for file in ["f1.json", "f2.json"] {
        let problem = problem_of(file);
        let c = plan_closure(&problem, ClosureOptions::default()).unwrap();
        assert!(c.no_solving_plan(), "{file}");
        assert!(c.pstar.language_upto(4).is_empty(), "{file}");
        let plans =
            enumerate_solving_plans(&problem, EnumerationLimits::new(usize::MAX, DEPTH)).unwrap();
        assert!(plans.is_empty(), "{file}");
    }
}

#[test]
fn f2_loop_is_gray_not_red() {
    let c = plan_closure(&problem_of("f2.json"), ClosureOptions::default()).unwrap();
    assert_eq!(c.color("{a0}"), Some(Color::Gray));
    assert_eq!(c.color("{o0}"), Some(Color::Gray));
    assert_eq!(c.color("{g}"), Some(Color::Green));
}

#[test]
fn f2_prime_closure_is_the_whole_world() {
    let problem = problem_of("f2prime.json");
    let c = plan_closure(&problem, ClosureOptions::default()).unwrap();
    assert!(c.coloring.values().all(|col| *col == Color::Green));
    assert_eq!(
        language_oracle(&c.pstar, 8),
        language_oracle(problem.world(), 8)
    );
    assert!(solves(&c.pstar_plan().unwrap(), &problem).solves);
}

#[test]
fn scenario_plans_solve_their_worlds() {
    for file in ["f2prime.json", "wheelchair.json"] {
        let s = fixture(file);
        let report = solves(s.plan().unwrap(), &s.problem().unwrap());
        assert!(report.solves, "{file}: {:?}", report.diagnosis);
    }
}

#[test]
fn wheelchair_decoy_is_in_the_closure() {
    let s = fixture("wheelchair.json");
    let c = plan_closure(&s.problem().unwrap(), ClosureOptions::default()).unwrap();
    for plan in
        std::iter::once(s.plan().unwrap()).chain(s.divulgence.as_ref().unwrap().decoys.iter())
    {
        assert!(check_divulgence_superset(&c.pstar, plan, 8));
    }
}

#[test]
fn goal_at_the_start_needs_no_steps() {
    let world = PGraph::from_parts(
        &[("g", Kind::Action), ("o", Kind::Observation)],
        &["g"],
        &[("g", "o", &["u1"])],
    );
    let problem =
        pgraph::planning::PlanningProblem::new(world, BTreeSet::from(["g".into()])).unwrap();
    let c = plan_closure(&problem, ClosureOptions::default()).unwrap();
    assert_eq!(c.color("{g}"), Some(Color::Green));
    assert_eq!(c.pi_follower_depth("{g}"), Some(0));
    let plan = synthesize_plan(&[], &c).unwrap();
    assert!(solves(&plan, &problem).solves);
    let trace = simulate(&plan, &problem, 0, 10, Adversary::UniformRandom);
    assert_eq!(trace.outcome, Outcome::TerminatedAtGoal);
    assert!(trace.steps.is_empty());
}

#[test]
fn synthesized_plan_follows_the_skeleton() {
    let problem = problem_of("f2prime.json");
    let c = plan_closure(&problem, ClosureOptions::default()).unwrap();
    let s = [
        Label::action("u1"),
        Label::observation("y2"),
        Label::action("u2"),
    ];
    let plan = synthesize_plan(&s, &c).unwrap();
    assert!(plan.graph().accepts(&s));
    assert!(solves(&plan, &problem).solves);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn closure_is_a_subgraph_of_the_determinized_world(seed in any::<u64>()) {
        let problem = random_world(seed, 7);
        let c = plan_closure(&problem, ClosureOptions::default()).unwrap();
        for (src, dst, labels) in c.pstar.edges() {
            for l in labels {
                prop_assert!(c.wprime.successors(src.as_str(), l).any(|d| d == dst));
            }
        }
        for v in c.pstar.vertex_ids() {
            prop_assert_eq!(c.color(v.as_str()), Some(Color::Green));
        }
    }

    #[test]
    fn closure_is_empty_exactly_when_no_plan_solves(seed in any::<u64>()) {
        let problem = random_world(seed, 7);
        let c = plan_closure(&problem, ClosureOptions::default()).unwrap();
        let plans = enumerate_solving_plans(&problem, EnumerationLimits::new(usize::MAX, DEPTH)).unwrap();
        prop_assert_eq!(c.no_solving_plan(), plans.is_empty());
    }

    #[test]
    fn every_solving_plan_stays_inside_the_closure(seed in any::<u64>()) {
        let problem = random_world(seed, 7);
        let c = plan_closure(&problem, ClosureOptions::default()).unwrap();
        let closure_language = c.pstar.language_upto(DEPTH);
        for plan in enumerate_solving_plans(&problem, EnumerationLimits::new(usize::MAX, DEPTH)).unwrap() {
            prop_assert!(plan.graph().language_upto(DEPTH).is_subset(&closure_language));
            prop_assert!(check_divulgence_superset(&c.pstar, &plan, DEPTH));
        }
    }

    #[test]
    fn policy_follower_solves_and_always_reaches_a_goal(seed in any::<u64>(), run in any::<u64>()) {
        let problem = random_world(seed, 8);
        let c = plan_closure(&problem, ClosureOptions::default()).unwrap();
        prop_assume!(!c.no_solving_plan());
        let plan = synthesize_plan(&[], &c).unwrap();
        prop_assert!(solves(&plan, &problem).solves);
        let root = c.pstar.initial().iter().next().unwrap();
        let bound = c.pi_follower_depth(root.as_str()).unwrap();
        prop_assert!(bound <= c.wprime.vertex_count());
        for adversary in [Adversary::UniformRandom, Adversary::Minimizing] {
            let trace = simulate(&plan, &problem, run, 1000, adversary);
            prop_assert_eq!(trace.outcome, Outcome::TerminatedAtGoal);
            prop_assert!(trace.steps.len() <= bound);
            prop_assert_eq!(&trace, &simulate(&plan, &problem, run, 1000, adversary));
        }
    }

    #[test]
    fn coloring_is_a_fixpoint(seed in any::<u64>()) {
        let problem = random_world(seed, 8);
        let c = plan_closure(&problem, ClosureOptions::default()).unwrap();
        for (v, color) in &c.coloring {
            if *color != Color::Green || c.goals_prime.contains(v) {
                continue;
            }
            match c.wprime.kind(v.as_str()).unwrap() {
                Kind::Action => {
                    let action = &c.pi[v];
                    prop_assert!(c
                        .wprime
                        .successors(v.as_str(), action)
                        .all(|d| c.color(d.as_str()) == Some(Color::Green)));
                }
                Kind::Observation => {
                    let labels = c.wprime.out_labels(v.as_str());
                    prop_assert!(!labels.is_empty());
                    for l in labels {
                        prop_assert!(c
                            .wprime
                            .successors(v.as_str(), l)
                            .all(|d| c.color(d.as_str()) == Some(Color::Green)));
                    }
                }
            }
        }
    }
}
