//! Shared fixtures for the integration tests.
#![allow(dead_code)]

use gatewright_core::gate::{drive, EngineConfig, RunOutcome, ScriptedPlanner};
use gatewright_core::toollink::{Client, Fixture, InProcess, MockServer, Registry};
use std::path::{Path, PathBuf};
use std::sync::Arc;

pub fn fixture_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

pub fn fixture_text(name: &str) -> String {
    std::fs::read_to_string(fixture_path(name)).unwrap()
}

pub fn registry74() -> Registry {
    Registry::from_toml(&fixture_text("tools74.toml")).unwrap()
}

/// A multi-model PDB with `n` models of one residue each.
pub fn ensemble_pdb(n: usize) -> String {
    let mut s = String::new();
    for i in 1..=n {
        s.push_str(&format!(
            "MODEL     {i:>4}\nATOM      1  N   MET A 769      1.000   2.000   3.000  1.00  0.00           N\nENDMDL\n"
        ));
    }
    s.push_str("END\n");
    s
}

/// Mock server over the 74-tool registry. The ensemble tool returns
/// `models` structures and a mean radius of gyration of 21.4.
pub fn ensemble_server(seed: u64, models: usize) -> MockServer {
    let fx = |key: &str, value: String| Fixture {
        tool_name: "run_goca_pipeline".into(),
        arg_digest: "*".into(),
        key: key.into(),
        value,
    };
    MockServer::new(registry74(), seed).with_fixtures(vec![
        fx("mean_rg", "21.4".into()),
        fx("file:ensemble.pdb", ensemble_pdb(models)),
    ])
}

pub const PLAN_LINES: &str = "\
plan task_type structural
plan constraints hard=pdb:1M17,n_structures=20;soft=none
plan path run_goca_pipeline,extract_frames
plan files run_goca_pipeline:ensemble.pdb
plan mapping pdb:A->uniprot
plan compute n_structures,mean_rg
";

/// Wrong tool name, recovery through the tool list, then the gated report.
pub fn recovery_script(claimed_structures: u64) -> String {
    format!(
        "{PLAN_LINES}\
call goca_pipeline {{\"pdb_id\": \"1M17\", \"n_structures\": 20}}
?err:unknown_tool list
?err:unknown_tool call $nearest {{\"pdb_id\": \"1M17\", \"n_structures\": 20}}
?ok fetch $last
claim n_structures count {claimed_structures} $fetched:ensemble.pdb pdb_models
claim mean_rg tool 21.4 resp:1 mean_rg
claim compactness interp \"compact ensemble\" mean radius of gyration below 22 angstrom
advance
"
    )
}

pub fn engine_config() -> EngineConfig {
    EngineConfig {
        task: "generate a 20-structure ensemble for 1M17".into(),
        client_id: "tester".into(),
        license: "lic-1".into(),
        ..EngineConfig::default()
    }
}

/// Drives `script` against a fresh in-process server.
pub fn run_script(script: &str, server: MockServer) -> (RunOutcome, tempfile::TempDir) {
    let dir = tempfile::tempdir().unwrap();
    let mut client = Client::new(InProcess::new(Arc::new(server)), dir.path());
    let mut planner = ScriptedPlanner::parse(script).unwrap();
    let out = drive(&mut planner, &mut client, &[], &engine_config());
    (out, dir)
}
