//! Batch front end: proofs, invariant checks, attack replays and model
//! generation.
//!
//! Exit codes: 0 secure or all invariants hold, 2 vulnerable or an invariant
//! fails, 3 needs classification, 4 inconclusive, 1 usage or input error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use upec_ssc::check::{check_invariant, CheckOutcome, Checker, QueryHook};
use upec_ssc::cnf::ClauseSet;
use upec_ssc::config::ProofConfig;
use upec_ssc::demo::{replay_attack_demo, Scenario};
use upec_ssc::miter::SignalConstraint;
use upec_ssc::models::{generate_soc, SocParams, Variant};
use upec_ssc::procedure::{run_ssc_unrolled_with, run_ssc_with, Verdict, VerdictStatus};
use upec_ssc::vcd::{write_counterexample, write_traces};
use upec_ssc::Netlist;

const EXIT_ERROR: u8 = 1;
const EXIT_FAILS: u8 = 2;

#[derive(Parser)]
#[command(name = "upec-ssc", version, about = "Formal detection of SoC timing side channels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the verification procedure on a model.
    Check(CheckArgs),
    /// Prove every configured invariant by consecution.
    Invariants(InvariantArgs),
    /// Replay an attack scenario in the concrete simulator.
    Demo(DemoArgs),
    /// Write a toy SoC bundle (netlist, config, scenarios, docs).
    Generate(GenerateArgs),
}

#[derive(Args)]
struct ModelArgs {
    /// Model directory holding one `*.nl` netlist and `config.json`, or a
    /// netlist file.
    model: PathBuf,
    /// Proof configuration; defaults to `config.json` next to the netlist.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Conflict budget per solver call.
    #[arg(long, env = "UPEC_SSC_BUDGET")]
    budget: Option<u64>,
    /// Print a JSON report on stdout instead of text.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct CheckArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Use the unrolled procedure.
    #[arg(long)]
    unrolled: bool,
    /// Upper bound on the unrolling depth.
    #[arg(long)]
    max_k: Option<u32>,
    /// Write every solver query as DIMACS into this directory.
    #[arg(long)]
    dimacs_dir: Option<PathBuf>,
    /// Write a VCD file per counterexample into this directory.
    #[arg(long)]
    trace_dir: Option<PathBuf>,
    /// Apply victim constraints over the whole unrolled window.
    #[arg(long)]
    victim_full_window: bool,
}

#[derive(Args)]
struct InvariantArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Write a VCD file per failing invariant into this directory.
    #[arg(long)]
    trace_dir: Option<PathBuf>,
}

#[derive(Args)]
struct DemoArgs {
    /// Model directory with a `scenarios/` subdirectory.
    model: PathBuf,
    /// Scenario name under `scenarios/`, or a path to a scenario file.
    #[arg(long)]
    scenario: Option<String>,
    /// Victim access counts to replay; deltas are reported against the first.
    #[arg(long, value_delimiter = ',', default_value = "0")]
    victim_accesses: Vec<u32>,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct GenerateArgs {
    /// `vulnerable`, `hwpe`, `fixed` or `all`.
    variant: String,
    /// Output directory; `all` writes one subdirectory per variant.
    out: PathBuf,
    #[arg(long, default_value_t = SocParams::default().addr_bits)]
    addr_bits: u32,
    #[arg(long, default_value_t = SocParams::default().data_bits)]
    data_bits: u32,
    #[arg(long, default_value_t = SocParams::default().pattern_bits)]
    pattern_bits: u32,
    #[arg(long, default_value_t = SocParams::default().len_bits)]
    len_bits: u32,
    #[arg(long, default_value_t = SocParams::default().timer_bits)]
    timer_bits: u32,
}

type CliResult<T> = Result<T, String>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Check(a) => cmd_check(a),
        Command::Invariants(a) => cmd_invariants(a),
        Command::Demo(a) => cmd_demo(a),
        Command::Generate(a) => cmd_generate(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}

struct Model {
    netlist_path: PathBuf,
    config_path: PathBuf,
    netlist: Netlist,
    config: ProofConfig,
}

fn find_netlist(dir: &Path) -> CliResult<PathBuf> {
    let mut found: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| format!("{}: {e}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "nl"))
        .collect();
    found.sort();
    match found.len() {
        1 => Ok(found.remove(0)),
        0 => Err(format!("{}: no *.nl netlist", dir.display())),
        _ => Err(format!("{}: several *.nl netlists", dir.display())),
    }
}

fn load_model(a: &ModelArgs) -> CliResult<Model> {
    let netlist_path = if a.model.is_dir() { find_netlist(&a.model)? } else { a.model.clone() };
    let config_path = a
        .config
        .clone()
        .unwrap_or_else(|| netlist_path.with_file_name("config.json"));
    let read = |p: &Path| fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()));
    let netlist = Netlist::parse(&read(&netlist_path)?).map_err(|e| format!("{}: {e}", netlist_path.display()))?;
    let mut config =
        ProofConfig::from_json(&read(&config_path)?).map_err(|e| format!("{}: {e}", config_path.display()))?;
    for w in config.validate(&netlist).map_err(|e| format!("{}: {e}", config_path.display()))? {
        eprintln!("warning: {w}");
    }
    if let Some(b) = a.budget {
        config.solver.conflict_budget = b;
    }
    Ok(Model {
        netlist_path,
        config_path,
        netlist,
        config,
    })
}

fn create_dir(d: &Path) -> CliResult<()> {
    fs::create_dir_all(d).map_err(|e| format!("{}: {e}", d.display()))
}

fn path_string(p: &Path) -> String {
    p.to_string_lossy().into_owned()
}

/// Writes DIMACS files and counterexample waveforms as queries are solved.
struct Export<'a> {
    netlist: &'a Netlist,
    dimacs_dir: Option<PathBuf>,
    trace_dir: Option<PathBuf>,
    dimacs_files: Vec<String>,
    trace_files: Vec<String>,
    error: Option<String>,
}

impl Export<'_> {
    fn write(&mut self, path: PathBuf, write: impl FnOnce(&mut fs::File) -> Result<(), String>) -> Option<String> {
        if self.error.is_some() {
            return None;
        }
        let r = fs::File::create(&path)
            .map_err(|e| e.to_string())
            .and_then(|mut f| write(&mut f));
        match r {
            Ok(()) => Some(path_string(&path)),
            Err(e) => {
                self.error = Some(format!("{}: {e}", path.display()));
                None
            }
        }
    }
}

impl QueryHook for Export<'_> {
    fn on_query(&mut self, label: &str, clauses: &ClauseSet) {
        if let Some(dir) = self.dimacs_dir.clone() {
            let text = clauses.export_dimacs(&[]);
            let path = dir.join(format!("{label}.cnf"));
            if let Some(p) = self.write(path, |f| std::io::Write::write_all(f, text.as_bytes()).map_err(|e| e.to_string())) {
                self.dimacs_files.push(p);
            }
        }
    }

    fn on_outcome(&mut self, label: &str, outcome: &CheckOutcome) {
        let (Some(dir), Some(cex)) = (self.trace_dir.clone(), outcome.counterexample()) else {
            return;
        };
        let n = self.netlist;
        let path = dir.join(format!("{label}.vcd"));
        if let Some(p) = self.write(path, |f| write_counterexample(n, cex, f).map_err(|e| e.to_string())) {
            self.trace_files.push(p);
        }
    }
}

fn verdict_json(m: &Model, v: &Verdict) -> Value {
    let n = &m.netlist;
    let cex = v.evidence.as_ref().map(|c| {
        let arrays: serde_json::Map<String, Value> = c
            .array_diffs
            .iter()
            .map(|(id, idx)| (n.name_of(*id).unwrap_or_default().to_string(), json!(idx)))
            .collect();
        json!({
            "failing_cycle": c.failing_cycle,
            "horizon": c.horizon(),
            "diff_set": c.diff_set.names(n),
            "array_diffs": arrays,
        })
    });
    json!({
        "verdict": v.status.as_str(),
        "exit_code": v.status.exit_code(),
        "final_k": v.final_k,
        "iterations": v.iterations,
        "final_set": v.final_set.as_ref().map(|s| s.names(n)),
        "unclassified": v.unclassified,
        "counterexample": cex,
        "exhausted_budget": v.exhausted_budget,
    })
}

fn print_iterations(v: &Verdict) {
    for r in &v.iterations {
        let sizes: Vec<String> = r.set_sizes.iter().map(ToString::to_string).collect();
        let result = match (r.holds, r.failing_cycle) {
            (Some(true), _) => "holds".to_string(),
            (Some(false), Some(c)) => format!("fails at cycle {c}, diff {{{}}}", r.diff_set.join(", ")),
            (Some(false), None) => "fails".to_string(),
            (None, _) => "no result".to_string(),
        };
        let action = serde_json::to_value(r.action).expect("action serialises");
        println!(
            "iteration {} [{} k={} |S|={}]: {result} -> {}",
            r.iteration,
            serde_json::to_value(r.phase).expect("phase serialises").as_str().unwrap_or_default(),
            r.k,
            sizes.join("/"),
            action.as_str().unwrap_or_default().replace('_', " ")
        );
    }
}

fn cmd_check(a: CheckArgs) -> CliResult<u8> {
    let mut m = load_model(&a.model)?;
    if let Some(k) = a.max_k {
        if k == 0 {
            return Err("--max-k must be at least 1".into());
        }
        m.config.max_k = k;
    }
    m.config.victim_full_window |= a.victim_full_window;
    for d in a.dimacs_dir.iter().chain(&a.trace_dir) {
        create_dir(d)?;
    }
    let mut export = Export {
        netlist: &m.netlist,
        dimacs_dir: a.dimacs_dir.clone(),
        trace_dir: a.trace_dir.clone(),
        dimacs_files: Vec::new(),
        trace_files: Vec::new(),
        error: None,
    };
    let start = Instant::now();
    let verdict = {
        let mut checker = Checker::new(&m.netlist, &m.config)
            .map_err(|e| e.to_string())?
            .with_hook(&mut export);
        if a.unrolled {
            run_ssc_unrolled_with(&mut checker)
        } else {
            run_ssc_with(&mut checker)
        }
        .map_err(|e| e.to_string())?
    };
    let elapsed = start.elapsed();
    if let Some(e) = export.error {
        return Err(e);
    }
    let code = verdict.status.exit_code() as u8;
    if a.model.json {
        let mut report = verdict_json(&m, &verdict);
        let obj = report.as_object_mut().expect("object");
        obj.insert("command".into(), json!("check"));
        obj.insert("procedure".into(), json!(if a.unrolled { "unrolled" } else { "fixpoint" }));
        obj.insert("netlist".into(), json!(path_string(&m.netlist_path)));
        obj.insert("config".into(), json!(path_string(&m.config_path)));
        obj.insert("conflict_budget".into(), json!(m.config.solver.conflict_budget));
        obj.insert("trace_files".into(), json!(export.trace_files));
        obj.insert("dimacs_files".into(), json!(export.dimacs_files));
        obj.insert(
            "timing".into(),
            json!({
                "wall_time_ms": elapsed.as_secs_f64() * 1e3,
                "iteration_ms": verdict.iterations.iter().map(|r| r.wall_time.as_secs_f64() * 1e3).collect::<Vec<_>>(),
            }),
        );
        println!("{}", serde_json::to_string_pretty(&report).expect("report serialises"));
        return Ok(code);
    }
    println!("netlist: {}", m.netlist_path.display());
    println!("procedure: {}", if a.unrolled { "unrolled" } else { "fixpoint" });
    print_iterations(&verdict);
    println!("verdict: {}", verdict.status.as_str());
    match verdict.status {
        VerdictStatus::Secure => {
            let set = verdict.final_set.as_ref().map(|s| s.names(&m.netlist)).unwrap_or_default();
            println!("inductive set ({}): {}", set.len(), set.join(", "));
        }
        VerdictStatus::Vulnerable => {
            let last = verdict.iterations.last().expect("a verdict follows an iteration");
            println!("persistent divergence: {}", last.persistent.join(", "));
            if let Some(c) = &verdict.evidence {
                println!("failing cycle: {} of {}", c.failing_cycle, c.horizon());
            }
        }
        VerdictStatus::NeedsClassification => println!("unclassified: {}", verdict.unclassified.join(", ")),
        VerdictStatus::Inconclusive => {
            println!("solver budget exhausted: {}", verdict.exhausted_budget.unwrap_or_default())
        }
    }
    for f in &export.trace_files {
        println!("trace: {f}");
    }
    if !export.dimacs_files.is_empty() {
        println!("dimacs: {} files", export.dimacs_files.len());
    }
    println!("time: {:.3} s", elapsed.as_secs_f64());
    Ok(code)
}

fn describe(c: &SignalConstraint) -> String {
    let cmp = serde_json::to_value(c.cmp).expect("cmp serialises");
    format!("{} {} {}", c.signal, cmp.as_str().unwrap_or_default(), c.value)
}

fn cmd_invariants(a: InvariantArgs) -> CliResult<u8> {
    let m = load_model(&a.model)?;
    if let Some(d) = &a.trace_dir {
        create_dir(d)?;
    }
    // each invariant is an independent query
    let outcomes: Vec<Result<CheckOutcome, String>> = std::thread::scope(|s| {
        let handles: Vec<_> = m
            .config
            .invariants
            .iter()
            .map(|inv| s.spawn(|| check_invariant(&m.netlist, inv, &m.config).map_err(|e| e.to_string())))
            .collect();
        handles.into_iter().map(|h| h.join().expect("invariant worker")).collect()
    });
    let mut results = Vec::new();
    let mut failed = false;
    for (i, (inv, outcome)) in m.config.invariants.iter().zip(outcomes).enumerate() {
        let outcome = outcome?;
        let mut trace_file = None;
        if let (Some(dir), Some(trace)) = (&a.trace_dir, outcome.trace()) {
            let path = dir.join(format!("invariant_{i}.vcd"));
            let f = fs::File::create(&path).map_err(|e| format!("{}: {e}", path.display()))?;
            write_traces(&m.netlist, &[("inst1", trace)], f).map_err(|e| e.to_string())?;
            trace_file = Some(path_string(&path));
        }
        failed |= !outcome.holds();
        results.push((describe(inv), outcome, trace_file));
    }
    let code = if failed { EXIT_FAILS } else { 0 };
    if a.model.json {
        let list: Vec<Value> = results
            .iter()
            .map(|(d, o, t)| json!({"invariant": d, "holds": o.holds(), "conflicts": o.stats.conflicts, "trace_file": t}))
            .collect();
        let report = json!({
            "command": "invariants",
            "netlist": path_string(&m.netlist_path),
            "config": path_string(&m.config_path),
            "checked": results.len(),
            "results": list,
            "exit_code": code,
        });
        println!("{}", serde_json::to_string_pretty(&report).expect("report serialises"));
        return Ok(code);
    }
    for (d, o, t) in &results {
        println!("invariant {d}: {}", if o.holds() { "holds" } else { "fails" });
        if let Some(t) = t {
            println!("  trace: {t}");
        }
    }
    println!("{} invariants checked", results.len());
    Ok(code)
}

fn load_scenario(model: &Path, name: Option<&str>) -> CliResult<Scenario> {
    let path = match name {
        Some(n) if Path::new(n).is_file() => PathBuf::from(n),
        Some(n) => model.join("scenarios").join(format!("{n}.json")),
        None => {
            let dir = model.join("scenarios");
            let mut all: Vec<PathBuf> = fs::read_dir(&dir)
                .map_err(|e| format!("{}: {e}", dir.display()))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "json"))
                .collect();
            all.sort();
            match all.len() {
                1 => all.remove(0),
                0 => return Err(format!("{}: no scenarios", dir.display())),
                _ => return Err(format!("{}: several scenarios, pick one with --scenario", dir.display())),
            }
        }
    };
    let text = fs::read_to_string(&path).map_err(|_| format!("unknown scenario `{}`", path.display()))?;
    Scenario::from_json(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn cmd_demo(a: DemoArgs) -> CliResult<u8> {
    let netlist_path = if a.model.is_dir() { find_netlist(&a.model)? } else { a.model.clone() };
    let dir = netlist_path.parent().map(Path::to_path_buf).unwrap_or_default();
    let text = fs::read_to_string(&netlist_path).map_err(|e| format!("{}: {e}", netlist_path.display()))?;
    let n = Netlist::parse(&text).map_err(|e| format!("{}: {e}", netlist_path.display()))?;
    let scenario = load_scenario(&dir, a.scenario.as_deref())?;
    let reports = a
        .victim_accesses
        .iter()
        .map(|&v| replay_attack_demo(&n, &scenario, v))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    let base = reports[0].observation;
    if a.json {
        let runs: Vec<Value> = reports
            .iter()
            .map(|r| json!({"victim_accesses": r.victim_accesses, "observation": r.observation, "delta": r.observation as i64 - base as i64}))
            .collect();
        let report = json!({
            "command": "demo",
            "scenario": scenario.name,
            "observe": scenario.observe,
            "observed_at": scenario.cycles,
            "runs": runs,
        });
        println!("{}", serde_json::to_string_pretty(&report).expect("report serialises"));
        return Ok(0);
    }
    println!("scenario: {}", scenario.name);
    if !scenario.description.is_empty() {
        println!("{}", scenario.description);
    }
    for r in &reports {
        println!(
            "victim accesses {}: observation {} at cycle {}",
            r.victim_accesses, r.observation, r.observed_at
        );
    }
    for r in &reports[1..] {
        println!(
            "delta v={} vs v={}: {}",
            r.victim_accesses,
            reports[0].victim_accesses,
            r.observation.abs_diff(base)
        );
    }
    Ok(0)
}

fn cmd_generate(a: GenerateArgs) -> CliResult<u8> {
    let params = SocParams {
        addr_bits: a.addr_bits,
        data_bits: a.data_bits,
        pattern_bits: a.pattern_bits,
        len_bits: a.len_bits,
        timer_bits: a.timer_bits,
    };
    let targets: Vec<(Variant, PathBuf)> = if a.variant == "all" {
        Variant::ALL.iter().map(|&v| (v, a.out.join(v.as_str()))).collect()
    } else {
        vec![(a.variant.parse::<Variant>().map_err(|e| e.to_string())?, a.out.clone())]
    };
    for (v, dir) in targets {
        let bundle = generate_soc(v, &params).map_err(|e| e.to_string())?;
        bundle.write_to(&dir).map_err(|e| format!("{}: {e}", dir.display()))?;
        println!("{v}: {}", dir.display());
    }
    Ok(0)
}
