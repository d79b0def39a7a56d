//! World-state estimates under the four divulgence cases.

mod common;

use std::collections::BTreeSet;

use common::*;
use pgraph::closure::{plan_closure, ClosureOptions};
use pgraph::labelmap::LabelMap;
use pgraph::observer::{BSet, Estimator, Mode, Observer, Reach};
use pgraph::ops::to_state_determined;
use pgraph::scenario::CaseTag;
use pgraph::{Kind, PGraph, VertexId};
use proptest::prelude::*;

const DEPTH: usize = 8;

/// One vertex looping on every label of `g`: its language is everything.
fn universal(g: &PGraph) -> PGraph {
    let mut u = PGraph::new();
    u.add_vertex("*", Kind::Action);
    u.mark_initial("*");
    u.add_edge("*", "*", g.labels().into_iter().cloned());
    u
}

fn estimates(
    world: &PGraph,
    h: &LabelMap,
    filter: &PGraph,
    divulged: &PGraph,
    mode: Mode,
) -> Vec<(BSet, BTreeSet<VertexId>)> {
    let observer = Observer {
        filter: filter.clone(),
        divulged: divulged.clone(),
    };
    Estimator::new(world, h, &observer, Reach::Unbounded)
        .unwrap()
        .all(mode, false)
        .into_iter()
        .map(|e| (e.b, e.world_states))
        .collect()
}

#[test]
fn wheelchair_plan_pinpoints_the_occupied_bathroom() {
    let s = fixture("wheelchair.json");
    let world = s.problem().unwrap().world().clone();
    let h = s.labelmap().unwrap();
    let b = BSet::new(["i2".into()]);
    let narrow = Estimator::new(
        &world,
        h,
        &s.observer(CaseTag::I, ClosureOptions::default()).unwrap(),
        Reach::Unbounded,
    )
    .unwrap()
    .estimate(&b, Mode::Exact);
    let wide = Estimator::new(
        &world,
        h,
        &s.observer(CaseTag::IV, ClosureOptions::default()).unwrap(),
        Reach::Unbounded,
    )
    .unwrap()
    .estimate(&b, Mode::Exact);
    assert_eq!(narrow.world_states, BTreeSet::from(["M_occ".into()]));
    assert!(narrow.world_states.is_subset(&wide.world_states));
    assert!(wide.world_states.len() > 1);
}

#[test]
fn witnesses_lead_to_their_states() {
    let s = fixture("wheelchair.json");
    let world = s.problem().unwrap().world().clone();
    let h = s.labelmap().unwrap();
    for tag in CaseTag::ALL {
        let observer = s.observer(tag, ClosureOptions::default()).unwrap();
        let est = Estimator::new(&world, h, &observer, Reach::Unbounded).unwrap();
        for e in est.all(Mode::Exact, false) {
            for (w, witness) in &e.witnesses {
                let labels = witness.clone().into_vec();
                assert!(reached_oracle(&world, &labels).contains(w.as_str()));
                assert!(!reached_oracle(&observer.divulged, &labels).is_empty());
                let reached = reached_oracle(&observer.filter, &image_oracle(h, &labels));
                assert_eq!(reached, to_strings(e.b.members()));
            }
        }
    }
}

#[test]
fn bounded_reach_only_shrinks_estimates() {
    let s = fixture("wheelchair.json");
    let world = s.problem().unwrap().world().clone();
    let h = s.labelmap().unwrap();
    let observer = s.observer(CaseTag::IV, ClosureOptions::default()).unwrap();
    let full = Estimator::new(&world, h, &observer, Reach::Unbounded).unwrap();
    let short = Estimator::new(&world, h, &observer, Reach::Depth(2)).unwrap();
    assert!(short.realized().is_subset(&full.realized()));
    for b in short.realized() {
        let (a, z) = (
            short.estimate(&b, Mode::Exact),
            full.estimate(&b, Mode::Exact),
        );
        assert!(a.world_states.is_subset(&z.world_states));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn estimates_match_the_oracle(seed in any::<u64>()) {
        let problem = random_world(seed, 6);
        let world = problem.world();
        let h = random_labelmap(seed, world);
        let filter = random_filter(seed, &h, 3);
        let observer = Observer { filter: filter.clone(), divulged: world.clone() };
        let est = Estimator::new(world, &h, &observer, Reach::Depth(DEPTH)).unwrap();
        let realized: BTreeSet<BTreeSet<String>> = est.realized().iter().map(|b| to_strings(b.members())).collect();
        prop_assert_eq!(&realized, &realized_oracle(world, &h, &filter, world, DEPTH));
        for b in est.realized() {
            for (mode, oracle) in [(Mode::Exact, OracleMode::Exact), (Mode::Member, OracleMode::Member)] {
                prop_assert_eq!(
                    to_strings(&est.estimate(&b, mode).world_states),
                    estimate_oracle(world, &h, &filter, world, &b, oracle, DEPTH)
                );
            }
        }
    }

    #[test]
    fn shrinking_the_divulged_plan_shrinks_estimates(seed in any::<u64>()) {
        let problem = random_world(seed, 7);
        let world = problem.world();
        let c = plan_closure(&problem, ClosureOptions::default()).unwrap();
        prop_assume!(!c.no_solving_plan());
        let h = random_labelmap(seed, world);
        let filter = random_filter(seed, &h, 4);
        let wide = estimates(world, &h, &filter, world, Mode::Exact);
        for (b, states) in estimates(world, &h, &filter, &c.pstar, Mode::Exact) {
            let (_, outer) = wide.iter().find(|(wb, _)| *wb == b).expect("realized under the world");
            prop_assert!(states.is_subset(outer));
        }
    }

    #[test]
    fn divulging_only_the_world_adds_nothing(seed in any::<u64>()) {
        let problem = random_world(seed, 7);
        let world = problem.world();
        let h = random_labelmap(seed, world);
        let filter = random_filter(seed, &h, 4);
        for mode in [Mode::Exact, Mode::Member] {
            prop_assert_eq!(
                estimates(world, &h, &filter, world, mode),
                estimates(world, &h, &filter, &universal(world), mode)
            );
        }
    }

    #[test]
    fn modes_agree_on_deterministic_filters(seed in any::<u64>()) {
        let problem = random_world(seed, 7);
        let world = problem.world();
        let h = random_labelmap(seed, world);
        let filter = to_state_determined(&random_filter(seed, &h, 4)).graph;
        let observer = Observer { filter, divulged: world.clone() };
        let est = Estimator::new(world, &h, &observer, Reach::Unbounded).unwrap();
        for b in est.realized() {
            prop_assert_eq!(b.members().len(), 1);
            prop_assert_eq!(est.estimate(&b, Mode::Exact).world_states, est.estimate(&b, Mode::Member).world_states);
        }
    }
}
