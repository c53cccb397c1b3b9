mod common;

use common::*;
use gatewright_core::gate::*;
use gatewright_core::toollink::{
    ArgKind, Category, Client, FileArtifact, InProcess, ToolDescriptor, ToolResponse, DOCKING_UNIT,
    PROBABILITY_UNIT,
};
use proptest::prelude::*;
use serde_json::json;
use std::collections::BTreeMap;
use std::sync::Arc;

#[test]
fn recovery_run_passes_every_gate() {
    let (out, _dir) = run_script(&recovery_script(20), ensemble_server(7, 20));
    assert_eq!(out.result, Ok(()), "{}", out.log.render());
    assert!(out.all_gates_passed());
    assert_eq!(out.phase, Phase::Done);
    let log = out.log.render();
    assert!(log.contains("\"code\":\"unknown_tool\""));
    assert!(log.contains("\"nearest\":\"run_goca_pipeline\""));
    assert!(log.contains("LIST {\"count\":74}"));
    assert!(log.contains("MAPPING_GATE"));
    let table = out.integrity.unwrap();
    assert_eq!(table.rows.len(), 2);
    assert!(table.all_match());
    let report = out.report.unwrap();
    assert!(report.contains("pdb_models(ensemble.pdb) = 20; claimed 20"));
    assert!(report.contains("compactness"));
}

#[test]
fn fabricated_count_blocks_the_report() {
    let (out, _dir) = run_script(&recovery_script(25), ensemble_server(7, 20));
    assert!(matches!(
        out.result,
        Err(GateError::CheckpointFailed {
            kind: CheckpointKind::C,
            ..
        })
    ));
    assert!(out.report.is_none());
    let table = out.integrity.unwrap();
    let bad: Vec<_> = table.mismatches().collect();
    assert_eq!(bad.len(), 1);
    assert_eq!(
        (bad[0].claimed.as_str(), bad[0].actual.as_str()),
        ("25", "20")
    );
    assert!(out
        .log
        .render()
        .contains("\"mismatches\":[\"n_structures\"]"));
}

#[test]
fn missing_download_blocks_the_next_call() {
    let script = format!(
        "{PLAN_LINES}list\ncall run_goca_pipeline {{\"pdb_id\": \"1M17\"}}\ncall extract_frames {{\"path\": \"x\"}}\nadvance\n"
    );
    let (out, _dir) = run_script(&script, ensemble_server(7, 20));
    match &out.result {
        Err(GateError::Blocked(paths)) => {
            // the category C log file does not block
            assert_eq!(paths.len(), 1);
            assert!(paths[0].ends_with("/ensemble.pdb"));
        }
        other => panic!("{other:?}"),
    }
    // the second call never reached the server
    assert_eq!(out.log.of_kind("CALL").count(), 1);
}

#[test]
fn category_c_files_never_block() {
    let script = format!(
        "{PLAN_LINES}call run_goca_pipeline {{\"pdb_id\": \"1M17\"}}\nfetch $last\nadvance\n"
    );
    let server = ensemble_server(7, 20);
    let (out, _dir) = run_script(&script, server);
    assert_eq!(out.result, Ok(()));
    // without the descriptor every file counts as category A
    let script =
        format!("{PLAN_LINES}call run_goca_pipeline {{\"pdb_id\": \"1M17\"}}\nlist\nadvance\n");
    let (out, _dir) = run_script(&script, ensemble_server(7, 20));
    assert!(matches!(out.result, Err(GateError::Blocked(_))));
}

#[test]
fn empty_script_is_plan_incomplete() {
    let (out, _dir) = run_script("", ensemble_server(1, 20));
    match out.result {
        Err(GateError::PlanIncomplete(missing)) => assert_eq!(missing.len(), 6),
        other => panic!("{other:?}"),
    }
    assert_eq!(out.phase, Phase::Plan);
}

#[test]
fn tool_call_before_plan_is_premature() {
    let (out, _dir) = run_script(
        "plan task_type screening\ncall calc_qed {\"input\": \"C\"}\n",
        ensemble_server(1, 20),
    );
    assert_eq!(out.result, Err(GateError::PrematureToolCall("call".into())));
    assert_eq!(out.log.of_kind("CALL").count(), 0);
}

#[test]
fn run_phase0_alone() {
    let mut p = ScriptedPlanner::parse(PLAN_LINES).unwrap();
    let plan = run_phase0("t", &[], &mut p).unwrap();
    assert!(plan.is_ready());
    assert!(plan.mapping_gate_armed());
    let mut p = ScriptedPlanner::parse("plan task_type design\nplan mapping none\n").unwrap();
    assert!(
        matches!(run_phase0("t", &[], &mut p), Err(GateError::PlanIncomplete(m)) if m.len() == 4)
    );
}

#[test]
fn skill_names_are_rejected_at_dispatch() {
    let script =
        format!("{PLAN_LINES}call run-goca-pipeline {{}}\n?err:naming_violation abort renamed\n");
    let (out, _dir) = run_script(&script, ensemble_server(1, 20));
    assert_eq!(out.result, Err(GateError::Aborted("renamed".into())));
    assert!(out.log.render().contains("naming_violation"));
}

#[test]
fn failed_checkpoint_a_taints_claims() {
    // a fixture forces a positive docking score
    let server = gatewright_core::toollink::MockServer::new(registry74(), 3).with_fixtures(vec![
        gatewright_core::toollink::Fixture {
            tool_name: "mock_docking".into(),
            arg_digest: "*".into(),
            key: "score".into(),
            value: "1.2".into(),
        },
    ]);
    let script = format!(
        "{PLAN_LINES}list\ncall mock_docking {{\"smiles\": \"CCO\"}}\nfetch $last\nclaim s tool 1.2 resp:1 score\nadvance\n"
    );
    let (out, _dir) = run_script(&script, server);
    assert!(matches!(
        out.result,
        Err(GateError::CheckpointFailed {
            kind: CheckpointKind::C,
            ..
        })
    ));
    let a = out
        .checkpoints
        .iter()
        .find(|c| c.kind == CheckpointKind::A)
        .unwrap();
    assert_eq!(a.rules(), vec![checkpoint::RULE_SCORE_SIGN]);
}

#[test]
fn literature_claims_carry_the_label() {
    let script = format!(
        "{PLAN_LINES}claim ki lit 0.4 authors=Stamos J, Sliwkowski MX, Eigenbrot C;year=2002;doi=10.1074/jbc.M207135200\n\
         claim ki2 lit 0.4 authors=Stamos J;year=2002\nadvance\n"
    );
    let (out, _dir) = run_script(&script, ensemble_server(1, 20));
    // the second claim lacks a DOI and is rejected, which fails C
    assert!(matches!(
        out.result,
        Err(GateError::CheckpointFailed { .. })
    ));
    assert_eq!(out.claims.len(), 1);
    assert_eq!(out.claims[0].label.as_deref(), Some(LITERATURE_LABEL));
    assert!(out.log.render().contains("incomplete_citation"));
}

#[test]
fn funnel_tiers_enter_the_integrity_table() {
    let dir = tempfile::tempdir().unwrap();
    let hits = dir.path().join("tier1.csv");
    let mut csv = String::from("smiles,score\n");
    for i in 0..65 {
        csv.push_str(&format!("C{i},-7.0\n"));
    }
    std::fs::write(&hits, csv).unwrap();
    let script = format!(
        "{PLAN_LINES}funnel 1 100 65 {} csv_rows\nadvance\n",
        hits.display()
    );
    let (out, _d) = run_script(&script, ensemble_server(1, 20));
    assert_eq!(out.result, Ok(()));
    assert!(out.funnel.records()[0].verified);
    let script = format!(
        "{PLAN_LINES}funnel 1 100 70 {} csv_rows\nadvance\n",
        hits.display()
    );
    let (out, _d) = run_script(&script, ensemble_server(1, 20));
    assert!(matches!(
        out.result,
        Err(GateError::CheckpointFailed { .. })
    ));
    assert_eq!(out.funnel.records()[0].actual_out(), 65);
    let script = format!("{PLAN_LINES}funnel 2 100 65 {} csv_rows\n", hits.display());
    let (out, _d) = run_script(&script, ensemble_server(1, 20));
    assert_eq!(
        out.result,
        Err(GateError::TierOrderViolation {
            tier: 2,
            expected: 1
        })
    );
}

#[test]
fn run_log_replays_identically() {
    let (a, _d1) = run_script(&recovery_script(20), ensemble_server(11, 20));
    let (b, _d2) = run_script(&recovery_script(20), ensemble_server(11, 20));
    assert_eq!(a.log.render(), b.log.render());
    assert_eq!(RunLog::parse(&a.log.render()).unwrap(), a.log);
    let (c, _d3) = run_script(&recovery_script(20), ensemble_server(12, 20));
    // a different seed changes file paths but not gate outcomes
    let gates = |o: &RunOutcome| {
        o.log
            .records()
            .iter()
            .filter(|r| r.kind.starts_with("CHECKPOINT"))
            .map(|r| r.payload.clone())
            .collect::<Vec<_>>()
    };
    assert_eq!(gates(&a), gates(&c));
}

#[test]
fn runs_over_tcp() {
    let server = Arc::new(ensemble_server(5, 20));
    let (addr, _h) = gatewright_core::toollink::transport::spawn(server).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let transport = gatewright_core::toollink::LineTransport::connect(&addr.to_string()).unwrap();
    let mut client = Client::new(transport, dir.path());
    let mut planner = ScriptedPlanner::parse(&recovery_script(20)).unwrap();
    let out = drive(&mut planner, &mut client, &[], &engine_config());
    assert!(out.all_gates_passed());
    let (local, _d) = run_script(&recovery_script(20), ensemble_server(5, 20));
    assert_eq!(out.log.render(), local.log.render());
}

fn docking_descriptor() -> ToolDescriptor {
    ToolDescriptor::new("mock_docking")
        .arg("smiles", ArgKind::Text, true)
        .output("score", Some(DOCKING_UNIT), -12.0, -4.0)
        .output("prob_herg", Some(PROBABILITY_UNIT), 0.0, 1.0)
        .file("pose.pdbqt", Category::A)
}

fn planner_action() -> impl Strategy<Value = String> {
    prop_oneof![
        Just("plan task_type screening".to_string()),
        Just("plan constraints hard=a;soft=b".to_string()),
        Just("plan path dock".to_string()),
        Just("plan files none".to_string()),
        Just("plan mapping none".to_string()),
        Just("plan compute score".to_string()),
        Just("call calc_qed {\"input\": \"C\"}".to_string()),
        Just("list".to_string()),
        Just("fetch $last".to_string()),
        Just("retry {\"input\": \"N\"}".to_string()),
        Just("advance".to_string()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn no_dispatch_before_plan_ready(lines in proptest::collection::vec(planner_action(), 0..14)) {
        let (out, _d) = run_script(&lines.join("\n"), ensemble_server(1, 20));
        let records = out.log.records();
        let ready = records.iter().position(|r| r.kind == "PLAN_READY");
        for (i, r) in records.iter().enumerate() {
            if matches!(r.kind.as_str(), "CALL" | "LIST" | "FETCH" | "AUTH") {
                prop_assert!(ready.is_some_and(|p| p < i));
            }
        }
    }

    #[test]
    fn checkpoint_a_rejects_bad_scores_and_probabilities(score in -50.0f64..50.0, prob in -2.0f64..3.0) {
        let mut r = ToolResponse::ok("mock_docking");
        r.values.insert("score".into(), json!(score));
        r.values.insert("prob_herg".into(), json!(prob));
        let rep = checkpoint_a(&r, Some(&docking_descriptor()), &[], &BTreeMap::new());
        let rules = rep.rules();
        prop_assert_eq!(rules.contains(&checkpoint::RULE_SCORE_SIGN), score >= 0.0);
        prop_assert_eq!(rules.contains(&checkpoint::RULE_PROBABILITY), !(0.0..=1.0).contains(&prob));
        // probability-named keys are checked without a unit tag
        let mut r2 = ToolResponse::ok("other_tool");
        r2.values.insert("ames_probability".into(), json!(prob));
        let rep2 = checkpoint_a(&r2, None, &[], &BTreeMap::new());
        prop_assert_eq!(rep2.passed(), (0.0..=1.0).contains(&prob));
    }

    #[test]
    fn unfetched_category_a_always_fails(n_files in 1usize..4, fetched_mask in 0u8..16) {
        let mut r = ToolResponse::ok("mock_docking");
        r.values.insert("score".into(), json!(-8.0));
        let mut arts = Vec::new();
        for i in 0..n_files {
            let path = format!("/scp/mock_docking/abc/f{i}.pdbqt");
            r.file_paths.push(path.clone());
            let mut a = FileArtifact::pending(&path, Category::A);
            if fetched_mask & (1 << i) != 0 {
                a.fetched = true;
                a.local_size_bytes = 8;
            }
            arts.push(a);
        }
        let all = (0..n_files).all(|i| fetched_mask & (1 << i) != 0);
        prop_assert_eq!(checkpoint_a(&r, None, &arts, &BTreeMap::new()).passed(), all);
    }

    #[test]
    fn count_gate_is_idempotent(n in 1usize..40, claimed in 0u64..40) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("e.pdb");
        std::fs::write(&path, ensemble_pdb(n)).unwrap();
        let a = count_gate(claimed, &path, &CounterKind::PdbModels).unwrap();
        let b = count_gate(claimed, &path, &CounterKind::PdbModels).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(a.actual, n as u64);
        prop_assert_eq!(a.passed, claimed == n as u64);
    }
}

#[test]
fn inprocess_client_is_usable_directly() {
    let server = Arc::new(ensemble_server(2, 20));
    let dir = tempfile::tempdir().unwrap();
    let mut c = Client::new(InProcess::new(server), dir.path());
    c.authenticate("a", "b").unwrap();
    assert_eq!(c.list_tools().unwrap().len(), 74);
}
