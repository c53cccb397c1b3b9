//! End-to-end tests of the `gatewright` binary.

use std::io::{BufRead, BufReader};
use std::path::PathBuf;
use std::process::{Child, Command, Output, Stdio};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gatewright"))
}

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

fn core_fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../core/tests/fixtures")
        .join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn s(p: &PathBuf) -> &str {
    p.to_str().unwrap()
}

/// A mock server child process, killed on drop.
struct Server {
    child: Child,
    addr: String,
}

impl Server {
    fn start(extra: &[&str]) -> Server {
        let mut child = bin()
            .args(["serve-mock", "--registry", s(&core_fixture("tools74.toml"))])
            .args([
                "--fixtures",
                s(&fixture("mock_fixtures.csv")),
                "--seed",
                "7",
            ])
            .args(extra)
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .unwrap();
        let mut line = String::new();
        BufReader::new(child.stdout.take().unwrap())
            .read_line(&mut line)
            .unwrap();
        let addr = line
            .trim()
            .strip_prefix("LISTENING ")
            .expect("listening line")
            .to_string();
        Server { child, addr }
    }
}

impl Drop for Server {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

fn run_planner(server: &Server, planner: &str, extra: &[&str]) -> Output {
    let skills = fixture("skills");
    let planner = fixture(planner);
    bin()
        .args(["run", "--skills", s(&skills), "--planner", s(&planner)])
        .args(["--server", &server.addr, "--task", "ensemble for 1M17"])
        .args(extra)
        .output()
        .unwrap()
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    let o = run(&["frobnicate"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn missing_required_flag_is_a_usage_error() {
    assert_eq!(
        run(&["map-residues", "--query", "pdb:769"]).status.code(),
        Some(2)
    );
}

#[test]
fn help_exits_zero() {
    let o = run(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("serve-mock"));
}

#[test]
fn domain_errors_exit_one() {
    let o = run(&["bench", "stats", "wilson", "--k", "5", "--n", "3"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));
    let o = run(&[
        "map-residues",
        "--pdb",
        "/nonexistent/x.pdb",
        "--query",
        "pdb:1",
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn qed_ceiling_with_locked_aromatic_rings() {
    let o = run(&["qed-ceiling", "--locked", "AROM=0.257"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "0.846");
}

#[test]
fn map_residues_both_directions() {
    let pdb = core_fixture("1m17_excerpt.pdb");
    let o = run(&[
        "map-residues",
        "--pdb",
        s(&pdb),
        "--query",
        "pdb:769, Met793",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(
        stdout(&o),
        "query,from_scheme,from_number,to_scheme,to_number,residue_code\n\
         pdb:769,pdb:A,769,uniprot,793,MET\n\
         Met793,uniprot,793,pdb:A,769,MET\n"
    );
}

#[test]
fn map_residues_offset_strategy_agrees_with_dbref() {
    let pdb = core_fixture("1m17_excerpt.pdb");
    let a = run(&[
        "map-residues",
        "--pdb",
        s(&pdb),
        "--query",
        "pdb:763,pdb:775",
    ]);
    let b = run(&[
        "map-residues",
        "--pdb",
        s(&pdb),
        "--strategy",
        "offset",
        "--offset",
        "24",
        "--query",
        "pdb:763,pdb:775",
    ]);
    assert_eq!(b.status.code(), Some(0));
    assert_eq!(stdout(&a), stdout(&b));
}

#[test]
fn validate_skills_reports_violations() {
    let ok = run(&["validate-skills", "--dir", s(&fixture("skills"))]);
    assert_eq!(ok.status.code(), Some(0));
    assert_eq!(stdout(&ok), "L1 2\nL2 1\nL3 1\n");
    let bad = run(&["validate-skills", "--dir", s(&fixture("skills_bad"))]);
    assert_eq!(bad.status.code(), Some(1));
    let text = stdout(&bad);
    for rule in [
        "l3_singleton",
        "principle_range",
        "tool_name_grammar",
        "unknown_consumer",
    ] {
        assert!(text.contains(rule), "{rule} missing from {text}");
    }
}

#[test]
fn bench_score_affinity_accuracy() {
    let o = run(&[
        "bench",
        "score",
        "--kind",
        "affinity_pair",
        "--truth",
        s(&fixture("affinity_truth.csv")),
        "--predictions",
        s(&fixture("affinity_pred.csv")),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("n_items,37\naccuracy,0.8108\n"));
}

#[test]
fn bench_stats_friedman_ranks() {
    let o = run(&[
        "bench",
        "stats",
        "friedman",
        "--matrix",
        s(&fixture("friedman_matrix.csv")),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("chi2,35.3543\n"));
    assert!(text.contains("average_rank:gated_agent_cc,1.5000\n"));
}

#[test]
fn bench_stats_fisher_and_wilson() {
    let o = run(&[
        "bench", "stats", "fisher", "--k1", "30", "--n1", "37", "--k2", "19", "--n2", "37",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(
        stdout(&o),
        "metric,value\nodds_ratio,4.0602\np_value,0.0132\n"
    );
    let o = run(&["bench", "stats", "wilson", "--k", "30", "--n", "37"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("lower,0.6580"), "{text}");
    assert!(text.contains("upper,0.9052"), "{text}");
}

#[test]
fn bench_stats_effect_size_and_adjustment() {
    let o = run(&[
        "bench", "stats", "cohens-h", "--p1", "0.811", "--p2", "0.514",
    ]);
    assert_eq!(stdout(&o), "metric,value\nh,0.6433\n");
    // Benjamini-Hochberg by hand: 0.01*4, min(0.03*2, 0.04*4/3), 0.04*4/3, 0.5.
    let o = run(&["bench", "stats", "adjust", "--p", "0.01,0.04,0.03,0.5"]);
    assert_eq!(
        stdout(&o),
        "metric,value\nadjusted:1,0.0400\nadjusted:2,0.0533\nadjusted:3,0.0533\nadjusted:4,0.5000\n"
    );
    // Complete separation of 3 vs 3: exact two-sided p = 2/20.
    let o = run(&[
        "bench",
        "stats",
        "mann-whitney",
        "--a",
        "1,2,3",
        "--b",
        "4,5,6",
    ]);
    assert_eq!(stdout(&o), "metric,value\nu,0.0000\np_value,0.1000\n");
}

#[test]
fn report_writes_both_files() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "report",
        "--config",
        s(&fixture("campaign_q3.toml")),
        "--rounds",
        s(&fixture("rounds_q3.csv")),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "SUCCESS, rounds=6");
    let log = std::fs::read_to_string(dir.path().join("run_log.md")).unwrap();
    let report = std::fs::read_to_string(dir.path().join("final_report.md")).unwrap();
    assert!(log.contains("## Round 6"));
    assert!(report.trim_end().ends_with("SUCCESS, rounds=6"));
}

#[test]
fn serve_and_run_recovery_over_tcp() {
    let server = Server::start(&[]);
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("final_report.md");
    let o = run_planner(
        &server,
        "planner_recovery.txt",
        &[
            "--workflow",
            "ensemble-workflow",
            "--report",
            report.to_str().unwrap(),
        ],
    );
    let text = stdout(&o);
    assert_eq!(o.status.code(), Some(0), "{text}");
    assert!(text.contains("READ {\"skill\":\"operating-discipline\",\"tier\":\"L3\"}"));
    assert!(text.contains("LIST {\"count\":74}"));
    assert!(text.trim_end().ends_with("RESULT PASS"));
    let report = std::fs::read_to_string(report).unwrap();
    assert!(report.contains("## Data integrity verification"));
    assert!(report.contains("| n_structures | 20 |"));
}

#[test]
fn fabricated_count_fails_over_tcp() {
    let server = Server::start(&[]);
    let o = run_planner(&server, "planner_fabricated.txt", &[]);
    assert_eq!(o.status.code(), Some(1));
    let text = stdout(&o);
    assert!(text.contains("\"mismatches\":[\"n_structures\"]"));
    assert!(text.trim_end().ends_with("RESULT FAIL checkpoint_failed"));
    assert!(!text.contains(" REPORT "));
}

#[test]
fn wrong_license_is_rejected() {
    let server = Server::start(&["--license", "secret"]);
    let o = run_planner(&server, "planner_recovery.txt", &["--license", "guess"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(
        stdout(&o).trim_end().ends_with("RESULT FAIL auth_rejected"),
        "{}",
        stdout(&o)
    );
}

#[test]
fn run_output_is_byte_stable() {
    let a = Server::start(&[]);
    let b = Server::start(&[]);
    let first = stdout(&run_planner(&a, "planner_recovery.txt", &[]));
    let second = stdout(&run_planner(&b, "planner_recovery.txt", &[]));
    let third = stdout(&run_planner(&a, "planner_recovery.txt", &[]));
    assert_eq!(first, second);
    assert_eq!(first, third);
}
