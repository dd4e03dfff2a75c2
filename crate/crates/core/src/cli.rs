//! Command-line driver: manifest-based validation, composition,
//! verification, and synthesis, plus scenario compilation, the 3SAT
//! reduction, and DOT export. Output is deterministic for identical
//! inputs; `--format json` switches reports to structured output.
//!
//! Exit codes: 0 success or all checks passed, 1 requirement failure or
//! UNSAT, 2 usage or parse error, 3 budget or node-cap exhaustion.

use crate::automata::Automaton;
use crate::compose::{compose_all, Product};
use crate::manifest::Manifest;
use crate::reduction::{clause_environment, proposition_process, Cnf, CnfOutcome};
use crate::scenarios::ScenarioSet;
use crate::search::{solve, Instance, SearchConfig, SearchResult};
use crate::symbolic::{solve_symbolic, SymbolicConfig, SymbolicResult};
use crate::verify::{verify_all, Report, Trace};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;
use std::path::{Path, PathBuf};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_RESOURCE: i32 = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Engine {
    Explicit,
    Bdd,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SatEngine {
    Brute,
    Explicit,
    Bdd,
}

#[derive(Parser, Debug)]
#[command(name = "protosynth", version, about = "Protocol automaton completion")]
pub struct Cli {
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Seed for randomized candidate orders (engines default to a stable
    /// deterministic order).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Accepted for interface stability; the driver is single-threaded.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Structural and interface checks over a manifest's components.
    Validate { manifest: PathBuf },
    /// Compose all components and report (or export) the reachable product.
    Compose {
        manifest: PathBuf,
        /// Emit the product as DOT instead of a summary.
        #[arg(long)]
        dot: bool,
    },
    /// Run the manifest's requirement profile over the composition.
    Verify { manifest: PathBuf },
    /// Complete the manifest's process components.
    Synthesize {
        manifest: PathBuf,
        #[arg(long, value_enum, default_value_t = Engine::Bdd)]
        engine: Engine,
        /// Explicit-engine node budget (overrides the manifest).
        #[arg(long)]
        budget: Option<u64>,
        /// BDD-engine node cap (overrides the manifest).
        #[arg(long)]
        node_cap: Option<usize>,
        /// Directory for the delta and completed automaton files.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compile a scenario file into per-process automaton skeletons.
    ScenarioCompile {
        file: PathBuf,
        /// Directory for the emitted .aut files (default: alongside input).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Translate a DIMACS CNF into a completion instance on disk.
    SatReduce {
        cnf: PathBuf,
        /// Directory for the automata and manifest (default: alongside input).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Decide a DIMACS CNF via the completion reduction (or brute force).
    SatSolve {
        cnf: PathBuf,
        #[arg(long, value_enum, default_value_t = SatEngine::Bdd)]
        engine: SatEngine,
    },
    /// Render automaton files as DOT.
    ExportDot { files: Vec<PathBuf> },
}

pub fn run(cli: &Cli) -> i32 {
    match &cli.command {
        Command::Validate { manifest } => cmd_validate(manifest, cli.format),
        Command::Compose { manifest, dot } => cmd_compose(manifest, *dot, cli.format),
        Command::Verify { manifest } => cmd_verify(manifest, cli.format),
        Command::Synthesize {
            manifest,
            engine,
            budget,
            node_cap,
            out,
        } => cmd_synthesize(manifest, *engine, *budget, *node_cap, out.as_deref(), cli.format),
        Command::ScenarioCompile { file, out } => cmd_scenario_compile(file, out.as_deref()),
        Command::SatReduce { cnf, out } => cmd_sat_reduce(cnf, out.as_deref()),
        Command::SatSolve { cnf, engine } => cmd_sat_solve(cnf, *engine, cli.format),
        Command::ExportDot { files } => cmd_export_dot(files),
    }
}

fn load_manifest(path: &Path) -> Result<Manifest, i32> {
    Manifest::load(path).map_err(|e| {
        eprintln!("error: {e}");
        EXIT_USAGE
    })
}

fn cmd_validate(path: &Path, format: Format) -> i32 {
    let man = match load_manifest(path) {
        Ok(m) => m,
        Err(c) => return c,
    };
    let mut diagnostics: Vec<String> = Vec::new();
    for c in &man.components {
        for v in c.automaton.validate() {
            diagnostics.push(format!("{}: {v}", c.name));
        }
        if matches!(c.role, crate::manifest::Role::Process) && !c.automaton.is_deterministic() {
            diagnostics.push(format!("{}: process automaton is nondeterministic", c.name));
        }
    }
    if let Err(e) = Product::new(man.automata()) {
        diagnostics.push(format!("composition: {e}"));
    }
    match format {
        Format::Json => println!(
            "{}",
            json!({ "clean": diagnostics.is_empty(), "diagnostics": diagnostics })
        ),
        Format::Text => {
            for d in &diagnostics {
                println!("{d}");
            }
            println!(
                "{}: {}",
                path.display(),
                if diagnostics.is_empty() { "clean" } else { "invalid" }
            );
        }
    }
    if diagnostics.is_empty() {
        EXIT_OK
    } else {
        EXIT_FAIL
    }
}

fn compose_manifest(man: &Manifest) -> Result<Product, i32> {
    compose_all(&man.automata()).map_err(|e| {
        eprintln!("error: {e}");
        EXIT_USAGE
    })
}

fn cmd_compose(path: &Path, dot: bool, format: Format) -> i32 {
    let man = match load_manifest(path) {
        Ok(m) => m,
        Err(c) => return c,
    };
    let product = match compose_manifest(&man) {
        Ok(p) => p,
        Err(c) => return c,
    };
    if dot {
        let a = product.to_automaton("product");
        print!("{}", a.to_dot(&[]));
        return EXIT_OK;
    }
    let ex = product.explore();
    let n_edges: usize = ex.edges.iter().map(Vec::len).sum();
    match format {
        Format::Json => println!(
            "{}",
            json!({
                "components": man.components.len(),
                "states": ex.n_states(),
                "edges": n_edges,
                "closed": product.is_closed(),
            })
        ),
        Format::Text => println!(
            "product: {} components, {} reachable states, {} edges, closed: {}",
            man.components.len(),
            ex.n_states(),
            n_edges,
            product.is_closed()
        ),
    }
    EXIT_OK
}

fn trace_events(t: &Trace) -> Vec<String> {
    t.events.iter().map(|e| e.name().to_string()).collect()
}

fn render_report(report: &Report, format: Format) {
    let verdicts: Vec<(&str, Option<Vec<String>>)> = vec![
        ("deadlock-freedom", report.deadlock.as_ref().map(trace_events)),
        ("safety", report.safety.as_ref().map(trace_events)),
        ("liveness", report.liveness.as_ref().map(trace_events)),
        (
            "nonblockingness",
            report.blocking.as_ref().map(|b| {
                let mut v = trace_events(&b.trace);
                v.push(format!("[{} blocked on {}]", b.component, b.event));
                v
            }),
        ),
    ];
    match format {
        Format::Json => {
            let checks: Vec<_> = verdicts
                .iter()
                .map(|(name, witness)| {
                    json!({
                        "requirement": name,
                        "verdict": if witness.is_none() { "pass" } else { "fail" },
                        "witness": witness,
                    })
                })
                .collect();
            println!(
                "{}",
                json!({ "states": report.n_states, "passed": report.passed(), "checks": checks })
            );
        }
        Format::Text => {
            println!("explored {} product states", report.n_states);
            for (name, witness) in &verdicts {
                match witness {
                    None => println!("{name}: pass"),
                    Some(w) => println!("{name}: FAIL ({})", w.join(" ")),
                }
            }
        }
    }
}

fn cmd_verify(path: &Path, format: Format) -> i32 {
    let man = match load_manifest(path) {
        Ok(m) => m,
        Err(c) => return c,
    };
    let product = match compose_manifest(&man) {
        Ok(p) => p,
        Err(c) => return c,
    };
    let report = verify_all(&product, &man.profile);
    render_report(&report, format);
    if report.passed() {
        EXIT_OK
    } else {
        EXIT_FAIL
    }
}

/// Writes the completion delta (one `trans` line per added transition,
/// prefixed with the owning component) and the completed automata.
fn write_completion(
    dir: &Path,
    instance: &Instance,
    man: &Manifest,
    added: &[(usize, crate::automata::Transition)],
) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut delta = String::new();
    for &(c, t) in added {
        let a = &instance.components[c];
        delta.push_str(&format!(
            "trans {} {} {} {}\n",
            man.components[c].name,
            a.state_name(t.src),
            t.event,
            a.state_name(t.dst)
        ));
    }
    std::fs::write(dir.join("completion.delta"), delta)?;
    for (i, a) in instance.completed(added).iter().enumerate() {
        if instance.targets.contains(&i) {
            std::fs::write(dir.join(format!("{}.aut", man.components[i].name)), a.emit())?;
        }
    }
    Ok(())
}

fn cmd_synthesize(
    path: &Path,
    engine: Engine,
    budget: Option<u64>,
    node_cap: Option<usize>,
    out: Option<&Path>,
    format: Format,
) -> i32 {
    let man = match load_manifest(path) {
        Ok(m) => m,
        Err(c) => return c,
    };
    let instance = match man.instance() {
        Ok(i) => i,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    let started = std::time::Instant::now();
    let (outcome, summary) = match engine {
        Engine::Explicit => {
            let config = SearchConfig {
                budget: budget.unwrap_or(man.engine.budget),
            };
            match solve(&instance, &config) {
                SearchResult::Solution(added, stats) => {
                    (Some(added), json!({ "nodes_explored": stats.nodes }))
                }
                SearchResult::Unsat(stats) => (None, json!({ "nodes_explored": stats.nodes })),
                SearchResult::BudgetExhausted(stats) => {
                    eprintln!("budget exhausted after {} nodes", stats.nodes);
                    return EXIT_RESOURCE;
                }
            }
        }
        Engine::Bdd => {
            let config = SymbolicConfig {
                node_cap: node_cap.unwrap_or(man.engine.node_cap),
                ..SymbolicConfig::default()
            };
            match solve_symbolic(&instance, &config) {
                SymbolicResult::Solution(added, stats) => (
                    Some(added),
                    json!({ "bdd_vars": stats.n_vars, "bdd_nodes": stats.n_nodes,
                            "candidates_tried": stats.candidates_tried }),
                ),
                SymbolicResult::Unsat(stats) => (
                    None,
                    json!({ "bdd_vars": stats.n_vars, "bdd_nodes": stats.n_nodes }),
                ),
                SymbolicResult::ResourceExhausted(_) => {
                    eprintln!("node cap or retry limit exhausted");
                    return EXIT_RESOURCE;
                }
            }
        }
    };
    let wall_ms = started.elapsed().as_millis() as u64;
    match outcome {
        None => {
            match format {
                Format::Json => println!(
                    "{}",
                    json!({ "result": "unsat", "wall_ms": wall_ms, "summary": summary })
                ),
                Format::Text => println!("no completion exists"),
            }
            EXIT_FAIL
        }
        Some(added) => {
            // Re-verify the completed composition before reporting success.
            let comps = instance.completed(&added);
            let verified = compose_all(&comps)
                .map(|p| verify_all(&p, &instance.profile).passed())
                .unwrap_or(false);
            if !verified {
                eprintln!("internal error: completion failed re-verification");
                return EXIT_FAIL;
            }
            if let Some(dir) = out {
                if let Err(e) = write_completion(dir, &instance, &man, &added) {
                    eprintln!("error: cannot write completion: {e}");
                    return EXIT_USAGE;
                }
            }
            let lines: Vec<String> = added
                .iter()
                .map(|&(c, t)| {
                    let a = &instance.components[c];
                    format!(
                        "{} {} {} {}",
                        man.components[c].name,
                        a.state_name(t.src),
                        t.event,
                        a.state_name(t.dst)
                    )
                })
                .collect();
            match format {
                Format::Json => println!(
                    "{}",
                    json!({ "result": "solution", "added": lines, "added_count": lines.len(),
                            "wall_ms": wall_ms, "summary": summary })
                ),
                Format::Text => {
                    println!("completion found: {} transitions added", lines.len());
                    for l in &lines {
                        println!("  {l}");
                    }
                }
            }
            EXIT_OK
        }
    }
}

fn cmd_scenario_compile(file: &Path, out: Option<&Path>) -> i32 {
    let text = match std::fs::read_to_string(file) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", file.display());
            return EXIT_USAGE;
        }
    };
    let set = match ScenarioSet::parse(&text) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {}: {e}", file.display());
            return EXIT_USAGE;
        }
    };
    let procs = match set.compile() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {}: {e}", file.display());
            return EXIT_FAIL;
        }
    };
    let dir = out
        .map(Path::to_path_buf)
        .unwrap_or_else(|| file.parent().unwrap_or(Path::new(".")).to_path_buf());
    if let Err(e) = std::fs::create_dir_all(&dir) {
        eprintln!("error: cannot create {}: {e}", dir.display());
        return EXIT_USAGE;
    }
    for (name, a) in &procs {
        let p = dir.join(format!("{name}.aut"));
        if let Err(e) = std::fs::write(&p, a.emit()) {
            eprintln!("error: cannot write {}: {e}", p.display());
            return EXIT_USAGE;
        }
        println!("{name}: {} states -> {}", a.n_states(), p.display());
    }
    EXIT_OK
}

fn load_cnf(path: &Path) -> Result<Cnf, i32> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        eprintln!("error: cannot read {}: {e}", path.display());
        EXIT_USAGE
    })?;
    Cnf::parse_dimacs(&text).map_err(|e| {
        eprintln!("error: {}: {e}", path.display());
        EXIT_USAGE
    })
}

fn cmd_sat_reduce(path: &Path, out: Option<&Path>) -> i32 {
    let cnf = match load_cnf(path) {
        Ok(c) => c,
        Err(c) => return c,
    };
    let dir = out
        .map(Path::to_path_buf)
        .unwrap_or_else(|| path.parent().unwrap_or(Path::new(".")).to_path_buf());
    if let Err(e) = std::fs::create_dir_all(&dir) {
        eprintln!("error: cannot create {}: {e}", dir.display());
        return EXIT_USAGE;
    }
    let p = proposition_process(cnf.n_vars);
    let env = clause_environment(&cnf);
    let manifest = "\
[[component]]
name = \"proposition\"
role = \"process\"
file = \"proposition.aut\"

[[component]]
name = \"clauses\"
role = \"environment\"
file = \"clauses.aut\"

[profile]
deadlock = true
safety = false
liveness = false
nonblocking = \"none\"
";
    let files = [
        ("proposition.aut", p.emit()),
        ("clauses.aut", env.emit()),
        ("instance.toml", manifest.to_string()),
    ];
    for (name, text) in files {
        let f = dir.join(name);
        if let Err(e) = std::fs::write(&f, text) {
            eprintln!("error: cannot write {}: {e}", f.display());
            return EXIT_USAGE;
        }
        println!("{}", f.display());
    }
    EXIT_OK
}

fn cmd_sat_solve(path: &Path, engine: SatEngine, format: Format) -> i32 {
    let cnf = match load_cnf(path) {
        Ok(c) => c,
        Err(c) => return c,
    };
    let outcome = match engine {
        SatEngine::Brute => match cnf.brute_force() {
            Some(a) => CnfOutcome::Sat(a),
            None => CnfOutcome::Unsat,
        },
        SatEngine::Explicit => {
            crate::reduction::solve_cnf_explicit(&cnf, &SearchConfig::default())
        }
        SatEngine::Bdd => {
            crate::reduction::solve_cnf_symbolic(&cnf, &SymbolicConfig::default())
        }
    };
    match outcome {
        CnfOutcome::Sat(model) => {
            let lits: Vec<i64> = model
                .iter()
                .enumerate()
                .map(|(i, &v)| if v { i as i64 + 1 } else { -(i as i64 + 1) })
                .collect();
            match format {
                Format::Json => println!("{}", json!({ "result": "sat", "model": lits })),
                Format::Text => {
                    println!("s SATISFIABLE");
                    let strs: Vec<String> = lits.iter().map(i64::to_string).collect();
                    println!("v {} 0", strs.join(" "));
                }
            }
            EXIT_OK
        }
        CnfOutcome::Unsat => {
            match format {
                Format::Json => println!("{}", json!({ "result": "unsat" })),
                Format::Text => println!("s UNSATISFIABLE"),
            }
            EXIT_FAIL
        }
        CnfOutcome::BudgetExhausted => {
            eprintln!("budget exhausted");
            EXIT_RESOURCE
        }
    }
}

fn cmd_export_dot(files: &[PathBuf]) -> i32 {
    for f in files {
        let text = match std::fs::read_to_string(f) {
            Ok(t) => t,
            Err(e) => {
                eprintln!("error: cannot read {}: {e}", f.display());
                return EXIT_USAGE;
            }
        };
        match Automaton::parse(&text) {
            Ok(a) => print!("{}", a.to_dot(&[])),
            Err(e) => {
                eprintln!("error: {}: {e}", f.display());
                return EXIT_USAGE;
            }
        }
    }
    EXIT_OK
}
