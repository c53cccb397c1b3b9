//! Campaign tracker, scheduling and docking invariants.

use gatewright_core::campaign::{
    advance, schedule_strategy, BoxLadder, BoxStep, CandidateRecord, CandidateSource, Constraint,
    Direction, DockingParams, GlobalTargetTracker, Objective, Phase, RoundRecord, Rules, Verdict,
    BOX_FLOOR,
};
use proptest::prelude::*;
use std::collections::BTreeMap;

fn objective(direction: Direction) -> Objective {
    Objective {
        metric: "score".into(),
        direction,
        threshold: -2.0,
        baseline: Some(-6.0),
    }
}

fn constraints() -> Vec<Constraint> {
    vec![Constraint::at_least("sim", 0.4)]
}

fn candidate(i: usize, score: f64, sim: f64, obj: &Objective) -> CandidateRecord {
    CandidateRecord::assess(
        &format!("c{i}"),
        BTreeMap::from([("score".to_string(), score), ("sim".to_string(), sim)]),
        CandidateSource::Generator,
        &constraints(),
        obj,
    )
}

fn rounds_strategy() -> impl Strategy<Value = Vec<Vec<(i32, u8)>>> {
    // (score in tenths, similarity in hundredths)
    proptest::collection::vec(
        proptest::collection::vec((-100i32..-40, 0u8..100), 0..5),
        1..12,
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn tracker_invariants_hold_over_random_campaigns(rounds in rounds_strategy(), minimize in any::<bool>()) {
        let dir = if minimize { Direction::Minimize } else { Direction::Maximize };
        let obj = objective(dir);
        let mut tracker = GlobalTargetTracker::new(obj.clone(), 3, 12);
        let mut history: Vec<RoundRecord> = Vec::new();
        let mut serial = 0;
        for (idx, cands) in rounds.iter().enumerate() {
            let cands: Vec<CandidateRecord> = cands
                .iter()
                .map(|(s, q)| {
                    serial += 1;
                    candidate(serial, *s as f64 / 10.0, *q as f64 / 100.0, &obj)
                })
                .collect();
            for c in &cands {
                let sim_ok = c.metrics["sim"] >= 0.4;
                prop_assert_eq!(c.qualifying, sim_ok);
                prop_assert_eq!(c.target_met, sim_ok && obj.meets_target(c.metrics["score"]));
            }
            let prev = history.iter().rev().find_map(|r| r.best.as_ref());
            let round = RoundRecord::new(idx as u32 + 1, None, cands.clone(), &obj, prev);
            // best is optimal among qualifying candidates
            match &round.best {
                Some(b) => {
                    prop_assert!(b.qualifying);
                    for c in cands.iter().filter(|c| c.qualifying) {
                        prop_assert!(!obj.better(c.metrics["score"], b.metrics["score"]));
                    }
                }
                None => prop_assert!(cands.iter().all(|c| !c.qualifying)),
            }
            prop_assert_eq!(round.strategy, schedule_strategy(round.index));

            let before = tracker.clone();
            let step = advance(&tracker, &history, &round, &Rules::default()).unwrap();
            let t = &step.tracker;
            prop_assert!(t.target_met_count >= before.target_met_count);
            let improved = match (&round.best, &before.best_ever) {
                (Some(b), Some(p)) => obj.better(b.metrics["score"], p.metrics["score"]),
                (Some(_), None) => true,
                _ => false,
            };
            if improved {
                prop_assert_eq!(t.stagnation, 0);
            } else {
                prop_assert_eq!(t.stagnation, before.stagnation + 1);
            }
            prop_assert_eq!(step.failure, step.verdict.is_stop() && t.target_met_count < t.required);
            if t.target_met_count >= t.required {
                prop_assert_eq!(step.verdict, Verdict::StopSuccess);
            }
            tracker = step.tracker;
            history.push(round);
            if step.verdict.is_stop() {
                break;
            }
        }
    }

    #[test]
    fn skipped_round_index_is_rejected(gap in 2u32..6) {
        let obj = objective(Direction::Minimize);
        let tracker = GlobalTargetTracker::new(obj.clone(), 2, 15);
        let round = RoundRecord::new(gap, None, vec![candidate(1, -7.0, 0.5, &obj)], &obj, None);
        prop_assert!(advance(&tracker, &[], &round, &Rules::default()).is_err());
    }

    #[test]
    fn strategy_bands_follow_the_schedule(index in 0u32..40) {
        let s = schedule_strategy(index);
        let (phase, sim, batch) = match index {
            0..=2 => (Phase::Exploration, (0.4, 0.5), (30, 50)),
            3 | 4 => (Phase::Targeted, (0.6, 0.7), (10, 20)),
            _ => (Phase::Convergence, (0.8, 1.0), (5, 10)),
        };
        prop_assert_eq!(s.phase, phase);
        prop_assert_eq!(s.similarity_band, sim);
        prop_assert_eq!(s.batch_size_band, batch);
    }

    #[test]
    fn locked_docking_params_refuse_mutation(edge in 25.0f64..60.0, c in -50.0f64..50.0) {
        let p = DockingParams::new([c + 0.5, 1.0, 2.0], [edge; 3], "vina").lock().unwrap();
        let mut q = p.clone();
        prop_assert!(q.set_center([0.1, 0.2, 0.3]).is_err());
        prop_assert!(q.set_box([edge + 1.0; 3]).is_err());
        prop_assert!(q.clone().lock().is_err());
        prop_assert!(p.verify_round(&q).is_ok());
        let drifted = DockingParams::new([c + 0.5, 1.0, 2.0 + 1e-9], [edge; 3], "vina");
        prop_assert!(p.verify_round(&drifted).is_err());
    }

    #[test]
    fn small_boxes_cannot_be_locked(edge in 0.0f64..BOX_FLOOR) {
        let p = DockingParams::new([1.0, 1.0, 1.0], [30.0, edge, 30.0], "vina");
        prop_assert!(p.lock().is_err());
        prop_assert!(BoxLadder::starting_at(edge).is_err());
    }

    #[test]
    fn ladder_edges_never_drop_below_the_floor(start in 25.0f64..55.0) {
        let (mut ladder, first) = BoxLadder::starting_at(start).unwrap();
        prop_assert_eq!(first, BoxStep::Use(start));
        let mut last = start;
        loop {
            match ladder.next_box_size() {
                BoxStep::Use(e) => {
                    prop_assert!(e >= BOX_FLOOR && e > last);
                    last = e;
                }
                BoxStep::SwitchMethod => break,
            }
        }
        prop_assert_eq!(ladder.next_box_size(), BoxStep::SwitchMethod);
    }
}
