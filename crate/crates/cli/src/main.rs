//! `gatewright` command line.
//!
//! Exit status: 0 on success, 1 on a domain error or failed gate, 2 on a
//! usage error. Structured output goes to stdout, diagnostics to stderr.
//! Fixed precision: scores 1 decimal, probabilities 3, statistics 4.

use clap::{Args, Parser, Subcommand, ValueEnum};
use gatewright_core::bench::files::{read_predictions, read_truth};
use gatewright_core::bench::qed::parse_locked;
use gatewright_core::bench::{
    adjust_pvalues, cohens_h, evaluate_benchmark, fisher_exact, friedman, mann_whitney,
    qed_ceiling, wilson_ci, Adjustment, QedWeights, Sidedness, TaskKind,
};
use gatewright_core::campaign::{
    read_rounds_csv, render_final_report, render_run_log, CampaignConfig, CampaignRun,
};
use gatewright_core::gate::{drive, EngineConfig, ScriptedPlanner};
use gatewright_core::residue::{
    build_mapping, lookup, parse_query, AlignmentParams, Direction, MappingInput, NumberedSequence,
    NumberingScheme, SchemeTag,
};
use gatewright_core::skills::{
    load_dir, resolve_reading_order, validate_library, SkillDocument, Tier,
};
use gatewright_core::toollink::{
    transport, AccessState, Client, FailurePlan, Fixture, LineTransport, MockServer, Registry,
};
use std::collections::BTreeMap;
use std::fmt::Display;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

#[derive(Parser)]
#[command(
    name = "gatewright",
    version,
    about = "Gated tool workflows, residue mapping, campaigns and benchmark statistics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a skill library directory.
    ValidateSkills {
        #[arg(long)]
        dir: PathBuf,
    },
    /// Serve the deterministic mock tool server over TCP.
    ServeMock(ServeArgs),
    /// Drive a scripted planner through the gated phases.
    Run(RunArgs),
    /// Translate residue numbers between numbering schemes.
    MapResidues(MapArgs),
    /// Benchmark metrics and statistics.
    Bench {
        #[command(subcommand)]
        command: BenchCommand,
    },
    /// Upper bound on QED with some desirabilities locked.
    QedCeiling {
        /// Locked components, e.g. `AROM=0.257`.
        #[arg(long, default_value = "")]
        locked: String,
        /// Desirability assumed for every unlocked component.
        #[arg(long, default_value_t = 1.0)]
        assumed: f64,
    },
    /// Replay a campaign and write run_log.md and final_report.md.
    Report {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        rounds: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long)]
    registry: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    fixtures: Option<PathBuf>,
    #[arg(long)]
    failures: Option<PathBuf>,
    /// Accepted license key; repeat for several. Without any, access is open.
    #[arg(long = "license")]
    licenses: Vec<String>,
    #[arg(long, default_value_t = 60.0)]
    window_seconds: f64,
    #[arg(long, default_value_t = 600)]
    max_requests: u32,
    #[arg(long, default_value = "127.0.0.1:0")]
    bind: String,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    skills: PathBuf,
    #[arg(long)]
    planner: PathBuf,
    #[arg(long)]
    server: String,
    /// Workflow whose reading order is used; all documents by tier otherwise.
    #[arg(long)]
    workflow: Option<String>,
    #[arg(long, default_value = "")]
    task: String,
    #[arg(long, default_value = "gatewright")]
    client: String,
    #[arg(long, default_value = "open")]
    license: String,
    /// Where fetched files are written; a temporary directory by default.
    #[arg(long)]
    download_dir: Option<PathBuf>,
    /// Minimum value for an output key, `key=value`; repeatable.
    #[arg(long = "threshold", value_parser = parse_threshold)]
    thresholds: Vec<(String, f64)>,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum MapStrategy {
    Dbref,
    Offset,
    Align,
}

#[derive(Args)]
struct MapArgs {
    #[arg(long)]
    pdb: PathBuf,
    #[arg(long, default_value = "A")]
    chain: char,
    #[arg(long, value_enum, default_value = "dbref")]
    strategy: MapStrategy,
    /// UniProt minus PDB author number, for the offset strategy.
    #[arg(long, allow_hyphen_values = true)]
    offset: Option<i64>,
    /// Reference sequence file (plain or FASTA), for the align strategy.
    #[arg(long)]
    reference: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    reference_start: i64,
    /// Comma-separated queries such as `pdb:769, Met793`.
    #[arg(long)]
    query: String,
}

#[derive(Subcommand)]
enum BenchCommand {
    /// Score predictions against truth for one task kind.
    Score {
        #[arg(long)]
        kind: String,
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        predictions: PathBuf,
    },
    /// Statistical tests.
    Stats {
        #[command(subcommand)]
        test: StatsCommand,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Sided {
    TwoSided,
    Less,
    Greater,
}

#[derive(Clone, Copy, ValueEnum)]
enum AdjustMethod {
    Bh,
    Bonferroni,
}

#[derive(Subcommand)]
enum StatsCommand {
    Fisher {
        #[arg(long)]
        k1: u64,
        #[arg(long)]
        n1: u64,
        #[arg(long)]
        k2: u64,
        #[arg(long)]
        n2: u64,
    },
    Wilson {
        #[arg(long)]
        k: u64,
        #[arg(long)]
        n: u64,
        #[arg(long, default_value_t = 0.95)]
        confidence: f64,
    },
    CohensH {
        #[arg(long)]
        p1: f64,
        #[arg(long)]
        p2: f64,
    },
    /// Matrix CSV: header `method,task...`, one row per method, larger is better.
    Friedman {
        #[arg(long)]
        matrix: PathBuf,
    },
    MannWhitney {
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        a: Vec<f64>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        b: Vec<f64>,
        #[arg(long, value_enum, default_value = "two-sided")]
        sided: Sided,
    },
    Adjust {
        #[arg(long, value_delimiter = ',')]
        p: Vec<f64>,
        #[arg(long, value_enum, default_value = "bh")]
        method: AdjustMethod,
    },
}

fn parse_threshold(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or("expected key=value")?;
    let v: f64 = v.trim().parse().map_err(|_| format!("not a number: {v}"))?;
    Ok((k.trim().to_string(), v))
}

type CliResult = Result<ExitCode, String>;

fn err(e: impl Display) -> String {
    e.to_string()
}

fn read(path: &Path) -> Result<String, String> {
    fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn stat(x: f64) -> String {
    format!("{x:.4}")
}

fn validate_skills(dir: &Path) -> CliResult {
    let docs = load_dir(dir).map_err(err)?;
    let report = validate_library(&docs);
    print!("{}", report.render());
    Ok(if report.is_valid() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn serve_mock(a: ServeArgs) -> CliResult {
    let registry = Registry::from_toml(&read(&a.registry)?).map_err(err)?;
    let mut server = MockServer::new(registry, a.seed);
    if let Some(p) = &a.fixtures {
        server = server.with_fixtures(Fixture::read_csv(read(p)?.as_bytes()).map_err(err)?);
    }
    if let Some(p) = &a.failures {
        server = server.with_failure_plan(FailurePlan::read_csv(read(p)?.as_bytes()).map_err(err)?);
    }
    if !a.licenses.is_empty() {
        server = server.with_access(AccessState::new(
            a.licenses,
            a.window_seconds,
            a.max_requests,
        )?);
    }
    let listener =
        std::net::TcpListener::bind(&a.bind).map_err(|e| format!("bind {}: {e}", a.bind))?;
    let addr = listener.local_addr().map_err(err)?;
    println!("LISTENING {addr}");
    std::io::stdout().flush().map_err(err)?;
    transport::serve(listener, Arc::new(server)).map_err(err)?;
    Ok(ExitCode::SUCCESS)
}

fn reading_order<'a>(
    docs: &'a [SkillDocument],
    workflow: Option<&str>,
) -> Result<Vec<&'a SkillDocument>, String> {
    match workflow {
        Some(w) => resolve_reading_order(docs, w).map_err(err),
        None => {
            let mut all: Vec<&SkillDocument> = docs.iter().collect();
            all.sort_by_key(|d| match d.tier {
                Tier::L3 => 0,
                Tier::L2 => 1,
                Tier::L1 => 2,
            });
            Ok(all)
        }
    }
}

fn run(a: RunArgs) -> CliResult {
    let docs = load_dir(&a.skills).map_err(err)?;
    let report = validate_library(&docs);
    if !report.is_valid() {
        eprint!("{}", report.render());
        return Err("skill library is invalid".into());
    }
    let order = reading_order(&docs, a.workflow.as_deref())?;
    let mut planner = ScriptedPlanner::parse(&read(&a.planner)?).map_err(err)?;
    let transport =
        LineTransport::connect(&a.server).map_err(|e| format!("connect {}: {e}", a.server))?;
    let download_dir = a
        .download_dir
        .clone()
        .unwrap_or_else(|| std::env::temp_dir().join(format!("gatewright-{}", std::process::id())));
    let mut client = Client::new(transport, &download_dir);
    let config = EngineConfig {
        task: a.task,
        client_id: a.client,
        license: a.license,
        registry: None,
        confidence_thresholds: a.thresholds.into_iter().collect::<BTreeMap<_, _>>(),
    };
    let outcome = drive(&mut planner, &mut client, &order, &config);
    if a.download_dir.is_none() {
        let _ = fs::remove_dir_all(&download_dir);
    }
    print!("{}", outcome.log.render());
    if let (Some(path), Some(text)) = (&a.report, &outcome.report) {
        fs::write(path, text).map_err(|e| format!("{}: {e}", path.display()))?;
    }
    match &outcome.result {
        Ok(()) => {
            println!("RESULT PASS");
            Ok(ExitCode::SUCCESS)
        }
        Err(e) => {
            println!("RESULT FAIL {}", e.code());
            eprintln!("error: {e}");
            Ok(ExitCode::from(1))
        }
    }
}

fn read_reference(text: &str) -> String {
    text.lines()
        .filter(|l| !l.starts_with('>'))
        .flat_map(|l| l.chars())
        .filter(|c| c.is_ascii_alphabetic())
        .map(|c| c.to_ascii_uppercase())
        .collect()
}

fn map_residues(a: MapArgs) -> CliResult {
    let pdb = read(&a.pdb)?;
    let input = match a.strategy {
        MapStrategy::Dbref => MappingInput::Dbref {
            pdb_text: &pdb,
            chain: a.chain,
        },
        MapStrategy::Offset => MappingInput::Arithmetic {
            offset: a
                .offset
                .ok_or("--offset is required for the offset strategy")?,
            residues: gatewright_core::residue::extract_residues(&pdb, a.chain).map_err(err)?,
            scheme_from: NumberingScheme::pdb(a.chain),
            scheme_to: NumberingScheme::uniprot(),
        },
        MapStrategy::Align => {
            let path = a
                .reference
                .as_ref()
                .ok_or("--reference is required for the align strategy")?;
            let (seq, numbers) =
                gatewright_core::residue::extract_sequence(&pdb, a.chain).map_err(err)?;
            MappingInput::Alignment {
                from: NumberedSequence::new(&seq, numbers).map_err(err)?,
                to: NumberedSequence::consecutive(&read_reference(&read(path)?), a.reference_start),
                params: AlignmentParams::default(),
                scheme_from: NumberingScheme::pdb(a.chain),
                scheme_to: NumberingScheme::uniprot(),
            }
        }
    };
    let table = build_mapping(&input).map_err(err)?;
    let queries = parse_query(&a.query).map_err(err)?;
    println!("query,from_scheme,from_number,to_scheme,to_number,residue_code");
    for q in &queries {
        let direction = match q.tag {
            SchemeTag::Bare => Direction::Reverse,
            SchemeTag::Pdb | SchemeTag::Tool => Direction::Forward,
        };
        let hit = lookup(&table, q, direction, NumberingScheme::uniprot()).map_err(err)?;
        let from = match direction {
            Direction::Forward => table.scheme_from,
            Direction::Reverse => table.scheme_to,
        };
        println!(
            "{q},{from},{},{},{},{}",
            q.number, hit.scheme, hit.number, hit.residue_code
        );
    }
    Ok(ExitCode::SUCCESS)
}

fn bench_score(kind: &str, truth: &Path, predictions: &Path) -> CliResult {
    let kind: TaskKind = kind.parse().map_err(err)?;
    let items = read_truth(kind, read(truth)?.as_bytes()).map_err(err)?;
    let preds = read_predictions(&items, read(predictions)?.as_bytes()).map_err(err)?;
    let r = evaluate_benchmark(&items, &preds).map_err(err)?;
    println!("metric,value");
    println!("kind,{}", r.kind);
    println!("n_items,{}", r.n_items);
    for (name, v) in [
        ("accuracy", r.accuracy),
        ("f1", r.f1),
        ("hits_at_3", r.hits_at_3),
        ("delta", r.delta),
        ("success_rate", r.success_rate),
    ] {
        if let Some(v) = v {
            println!("{name},{}", stat(v));
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn read_matrix(text: &str) -> Result<(Vec<String>, Vec<Vec<f64>>), String> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    lines.next().ok_or("matrix file is empty")?;
    let mut names = Vec::new();
    let mut rows = Vec::new();
    for line in lines {
        let mut cells = line.split(',').map(str::trim);
        names.push(cells.next().unwrap_or_default().to_string());
        let row = cells
            .map(|c| c.parse::<f64>().map_err(|_| format!("not a number: {c:?}")))
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    Ok((names, rows))
}

fn stats(test: StatsCommand) -> CliResult {
    let mut out = vec!["metric,value".to_string()];
    match test {
        StatsCommand::Fisher { k1, n1, k2, n2 } => {
            let r = fisher_exact(k1, n1, k2, n2).map_err(err)?;
            out.push(format!("odds_ratio,{}", stat(r.statistic)));
            out.push(format!("p_value,{}", stat(r.p_value)));
        }
        StatsCommand::Wilson { k, n, confidence } => {
            let (lo, hi) = wilson_ci(k, n, confidence).map_err(err)?;
            out.push(format!("proportion,{}", stat(k as f64 / n as f64)));
            out.push(format!("lower,{}", stat(lo)));
            out.push(format!("upper,{}", stat(hi)));
        }
        StatsCommand::CohensH { p1, p2 } => {
            out.push(format!("h,{}", stat(cohens_h(p1, p2).map_err(err)?)))
        }
        StatsCommand::Friedman { matrix } => {
            let (names, values) = read_matrix(&read(&matrix)?)?;
            let r = friedman(&values).map_err(err)?;
            out.push(format!("chi2,{}", stat(r.result.statistic)));
            out.push(format!("p_value,{}", stat(r.result.p_value)));
            for (name, rank) in names.iter().zip(&r.average_ranks) {
                out.push(format!("average_rank:{name},{}", stat(*rank)));
            }
        }
        StatsCommand::MannWhitney { a, b, sided } => {
            let sided = match sided {
                Sided::TwoSided => Sidedness::TwoSided,
                Sided::Less => Sidedness::Less,
                Sided::Greater => Sidedness::Greater,
            };
            let r = mann_whitney(&a, &b, sided).map_err(err)?;
            out.push(format!("u,{}", stat(r.statistic)));
            out.push(format!("p_value,{}", stat(r.p_value)));
        }
        StatsCommand::Adjust { p, method } => {
            let method = match method {
                AdjustMethod::Bh => Adjustment::BenjaminiHochberg,
                AdjustMethod::Bonferroni => Adjustment::Bonferroni,
            };
            for (i, q) in adjust_pvalues(&p, method)
                .map_err(err)?
                .into_iter()
                .enumerate()
            {
                out.push(format!("adjusted:{},{}", i + 1, stat(q)));
            }
        }
    }
    println!("{}", out.join("\n"));
    Ok(ExitCode::SUCCESS)
}

fn report(config: &Path, rounds: &Path, out: &Path) -> CliResult {
    let cfg = CampaignConfig::from_toml(&read(config)?).map_err(err)?;
    let rounds = read_rounds_csv(read(rounds)?.as_bytes(), &cfg).map_err(err)?;
    let run = CampaignRun::replay(&cfg, rounds).map_err(err)?;
    fs::create_dir_all(out).map_err(|e| format!("{}: {e}", out.display()))?;
    for (name, text) in [
        ("run_log.md", render_run_log(&run)),
        ("final_report.md", render_final_report(&run)),
    ] {
        let path = out.join(name);
        fs::write(&path, text).map_err(|e| format!("{}: {e}", path.display()))?;
    }
    println!("{}", run.conclusion());
    Ok(ExitCode::SUCCESS)
}

fn dispatch(cli: Cli) -> CliResult {
    match cli.command {
        Command::ValidateSkills { dir } => validate_skills(&dir),
        Command::ServeMock(a) => serve_mock(a),
        Command::Run(a) => run(a),
        Command::MapResidues(a) => map_residues(a),
        Command::Bench {
            command:
                BenchCommand::Score {
                    kind,
                    truth,
                    predictions,
                },
        } => bench_score(&kind, &truth, &predictions),
        Command::Bench {
            command: BenchCommand::Stats { test },
        } => stats(test),
        Command::QedCeiling { locked, assumed } => {
            let locked = parse_locked(&locked).map_err(err)?;
            let v = qed_ceiling(&locked, assumed, &QedWeights::standard()).map_err(err)?;
            println!("{v:.3}");
            Ok(ExitCode::SUCCESS)
        }
        Command::Report {
            config,
            rounds,
            out,
        } => report(&config, &rounds, &out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
