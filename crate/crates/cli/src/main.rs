//! `lrec`: evaluate formulas, build and solve path-systems instances, play
//! and replay games, and run the verification suites.
//!
//! Exit codes: 0 success or true, 1 false or negative, 2 usage or input
//! error, 3 budget exceeded.

mod interactive;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use num_bigint::BigInt;
use rand::{Rng, SeedableRng};

use lrec_core::batch::ExecMode;
use lrec_core::eval::{chi_hat, eval_formula_with, quotient, Assignment, Budget, EvalError, SemiGraph, SemiGraphFile};
use lrec_core::game::transcript::{replay, Transcript};
use lrec_core::game::{run_match, Duplicator, GameConfig, GameError, Spoiler};
use lrec_core::logic::{free_vars, iteration_degree, parse_formula, rank, Formula, Sort, Var, Vocabulary};
use lrec_core::psp::{expected_positivity, generate_instance, solve_direct, solve_via_lfp, ChildRule, TreeGroupSpec};
use lrec_core::strategy::{duplicator_by_name, spoiler_by_name, FormulaSpoiler, DUPLICATORS, SPOILERS};
use lrec_core::structure::Structure;
use lrec_core::verify::{run_suite, VerifyOptions, SUITES};

const DEFAULT_SEED: u64 = 0;

#[derive(Parser)]
#[command(name = "lrec", version, about = "LREC= workbench: evaluation, path-systems instances and games")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a formula on a structure; prints true or false.
    Eval(EvalArgs),
    /// Generate a path-systems instance over a tree crossed with Z_p.
    PspGen(PspGenArgs),
    /// Decide a path-systems instance with the direct and the LFP solver.
    PspSolve(PspSolveArgs),
    /// Print the rank and iteration degree of a formula.
    Rank(RankArgs),
    /// Print the quotient of a semi-graph.
    Quotient(GraphArgs),
    /// Evaluate χ on the quotient of a semi-graph.
    Chi(ChiArgs),
    /// Play one match and write its transcript.
    GameRun(GameRunArgs),
    /// Re-execute a transcript and check every state hash.
    GameReplay(ReplayArgs),
    /// Play Spoiler yourself against a built-in Duplicator.
    GameInteractive(InteractiveArgs),
    /// Run a seeded property suite and print a JSON summary.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct BudgetArgs {
    /// Largest semi-graph materialized during evaluation.
    #[arg(long)]
    max_nodes: Option<usize>,
    /// Largest number of edge and similarity pairs per semi-graph.
    #[arg(long)]
    max_pairs: Option<usize>,
}

impl BudgetArgs {
    fn budget(&self) -> Budget {
        let d = Budget::default();
        Budget {
            max_nodes: self.max_nodes.unwrap_or(d.max_nodes),
            max_pairs: self.max_pairs.unwrap_or(d.max_pairs),
        }
    }
}

#[derive(Args)]
struct EvalArgs {
    /// Structure JSON file.
    #[arg(long, short = 's')]
    structure: PathBuf,
    /// Formula text, or @path to read it from a file.
    #[arg(long, short = 'f')]
    formula: String,
    /// Free-variable bindings `x=a3` or `%m=2`.
    #[arg(long = "bind", value_name = "VAR=VALUE")]
    bindings: Vec<String>,
    #[command(flatten)]
    budget: BudgetArgs,
}

#[derive(Args)]
struct PspGenArgs {
    /// Spec JSON file; overrides the other shape flags.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Tree height.
    #[arg(long, default_value_t = 2)]
    h: u32,
    /// Prime modulus.
    #[arg(long, default_value_t = 3)]
    p: u64,
    /// Leaf residues, comma separated; random when absent.
    #[arg(long, value_delimiter = ',')]
    sigma: Option<Vec<u64>>,
    /// Target residue; random when absent.
    #[arg(long)]
    t: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Write the structure here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the spec JSON here.
    #[arg(long)]
    spec_out: Option<PathBuf>,
}

#[derive(Args)]
struct PspSolveArgs {
    #[arg(long, short = 's')]
    structure: PathBuf,
}

#[derive(Args)]
struct RankArgs {
    #[arg(long, short = 'f')]
    formula: String,
    /// Structure whose vocabulary the formula uses; the path-systems
    /// vocabulary when absent.
    #[arg(long, short = 's')]
    structure: Option<PathBuf>,
}

#[derive(Args)]
struct GraphArgs {
    /// Semi-graph JSON file with relations E, SIM and C.
    #[arg(long, short = 'g')]
    graph: PathBuf,
}

#[derive(Args)]
struct ChiArgs {
    #[command(flatten)]
    graph: GraphArgs,
    /// Start vertex name.
    #[arg(long)]
    node: String,
    /// Counter value ℓ; any integer.
    #[arg(long, allow_hyphen_values = true)]
    counter: String,
}

#[derive(Args)]
struct MatchArgs {
    #[arg(short = 'A', long = "a")]
    a: PathBuf,
    #[arg(short = 'B', long = "b")]
    b: PathBuf,
    /// Pebble bound, constants included.
    #[arg(long)]
    k: usize,
    /// Iteration degree bound.
    #[arg(long, default_value_t = 0)]
    q: usize,
    /// One of identity, matching, paper.
    #[arg(long, default_value = "paper")]
    duplicator: String,
    #[arg(long)]
    seed: Option<u64>,
    /// Write the JSONL transcript here.
    #[arg(long)]
    transcript: Option<PathBuf>,
    #[command(flatten)]
    budget: BudgetArgs,
}

#[derive(Args)]
struct GameRunArgs {
    #[command(flatten)]
    game: MatchArgs,
    /// random, greedy, or formula:<text> (text may be @path).
    #[arg(long, default_value = "random")]
    spoiler: String,
}

#[derive(Args)]
struct ReplayArgs {
    #[arg(long)]
    transcript: PathBuf,
}

#[derive(Args)]
struct InteractiveArgs {
    #[command(flatten)]
    game: MatchArgs,
}

#[derive(Args)]
struct VerifyArgs {
    /// One of core, chi, quotient, psp, treecomb, game, strategy.
    suite: String,
    #[arg(long)]
    seed: Option<u64>,
    /// Run cases on the calling thread only.
    #[arg(long)]
    sequential: bool,
    /// Generate path-systems instances that allow u = v in R.
    #[arg(long)]
    mutate_psp: bool,
}

/// Failure classes with their exit codes.
enum Failure {
    Input(anyhow::Error),
    Budget(String),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        if let Some(ev) = e.downcast_ref::<EvalError>() {
            if ev.is_budget() {
                return Failure::Budget(ev.to_string());
            }
        }
        if let Some(g) = e.downcast_ref::<GameError>() {
            if g.is_budget() {
                return Failure::Budget(g.to_string());
            }
        }
        Failure::Input(e)
    }
}

type CmdResult = Result<bool, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Eval(a) => cmd_eval(a),
        Command::PspGen(a) => cmd_psp_gen(a),
        Command::PspSolve(a) => cmd_psp_solve(a),
        Command::Rank(a) => cmd_rank(a),
        Command::Quotient(a) => cmd_quotient(a),
        Command::Chi(a) => cmd_chi(a),
        Command::GameRun(a) => cmd_game_run(a),
        Command::GameReplay(a) => cmd_game_replay(a),
        Command::GameInteractive(a) => cmd_game_interactive(a),
        Command::Verify(a) => cmd_verify(a),
    };
    match result {
        Ok(true) => ExitCode::from(0),
        Ok(false) => ExitCode::from(1),
        Err(Failure::Input(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Budget(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}

fn read(path: &Path) -> anyhow::Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_structure(path: &Path) -> anyhow::Result<Structure> {
    Structure::from_json(&read(path)?).map_err(|e| anyhow!("{}: {e}", path.display()))
}

/// Inline text, or the contents of the file after `@`.
fn text_arg(arg: &str) -> anyhow::Result<String> {
    match arg.strip_prefix('@') {
        Some(path) => Ok(read(Path::new(path))?.trim().to_string()),
        None => Ok(arg.to_string()),
    }
}

fn load_formula(arg: &str, vocab: &Vocabulary) -> anyhow::Result<Formula> {
    let text = text_arg(arg)?;
    parse_formula(&text, vocab).map_err(|e| anyhow!("formula at offset {}: {}", e.pos, e.msg))
}

fn seed_or_default(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(|| {
        eprintln!("seed: {DEFAULT_SEED}");
        DEFAULT_SEED
    })
}

fn write_out(path: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn cmd_eval(args: EvalArgs) -> CmdResult {
    let s = load_structure(&args.structure)?;
    let phi = load_formula(&args.formula, &Vocabulary::of(&s))?;
    let mut env = Assignment::new();
    for b in &args.bindings {
        let (name, value) = b.split_once('=').ok_or_else(|| anyhow!("binding {b:?} is not VAR=VALUE"))?;
        let var = match name.strip_prefix('%') {
            Some(n) => Var::num(n),
            None => Var::elem(name),
        };
        let value = match var.sort {
            Sort::Num => s.parse_value(&format!("#{}", value.trim_start_matches('#'))),
            Sort::Elem => s.parse_value(value),
        }
        .map_err(|e| anyhow!("binding {b:?}: {e}"))?;
        env.insert(var, value);
    }
    for v in free_vars(&phi) {
        if !env.contains_key(&v) {
            return Err(anyhow!("free variable {v} has no --bind").into());
        }
    }
    let holds = eval_formula_with(&phi, &s, &env, args.budget.budget()).map_err(anyhow::Error::from)?;
    println!("{holds}");
    Ok(holds)
}

fn cmd_psp_gen(args: PspGenArgs) -> CmdResult {
    let spec = match &args.spec {
        Some(path) => TreeGroupSpec::from_json(&read(path)?).map_err(|e| anyhow!("{}: {e}", path.display()))?,
        None => {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed_or_default(args.seed));
            let p = args.p.max(1);
            let sigma = args
                .sigma
                .clone()
                .unwrap_or_else(|| (0..1usize << args.h.min(24)).map(|_| rng.gen_range(0..p)).collect());
            let t = args.t.unwrap_or_else(|| rng.gen_range(0..p));
            TreeGroupSpec::new(args.h, args.p, sigma, t)
        }
    };
    let inst = generate_instance(&spec).map_err(|e| anyhow!("{e}"))?;
    if let Some(path) = &args.spec_out {
        fs::write(path, spec.to_json()).with_context(|| format!("writing {}", path.display()))?;
    }
    write_out(args.out.as_deref(), &inst.to_json())?;
    eprintln!(
        "{} elements, {}",
        inst.size(),
        if expected_positivity(&spec) { "positive" } else { "negative" }
    );
    Ok(true)
}

fn cmd_psp_solve(args: PspSolveArgs) -> CmdResult {
    let s = load_structure(&args.structure)?;
    if s.relation("R").map(|r| r.arity()) != Some(3) || s.relation("S").map(|r| r.arity()) != Some(1) || s.constant("t").is_none() {
        return Err(anyhow!("structure is not over the path-systems vocabulary R/3, S/1, t").into());
    }
    let direct = solve_direct(&s);
    let lfp = solve_via_lfp(&s);
    if direct != lfp {
        return Err(anyhow!("solvers disagree: direct {direct}, lfp {lfp}").into());
    }
    println!("{}", if direct { "positive" } else { "negative" });
    Ok(direct)
}

fn cmd_rank(args: RankArgs) -> CmdResult {
    let vocab = match &args.structure {
        Some(p) => Vocabulary::of(&load_structure(p)?),
        None => Vocabulary::psp(),
    };
    let phi = load_formula(&args.formula, &vocab)?;
    println!("rank {} degree {}", rank(&phi), iteration_degree(&phi));
    Ok(true)
}

fn load_graph(args: &GraphArgs) -> anyhow::Result<(SemiGraph, Vec<String>)> {
    let text = read(&args.graph)?;
    let file: SemiGraphFile = serde_json::from_str(&text).with_context(|| args.graph.display().to_string())?;
    let g = SemiGraph::from_file(&file).map_err(|e| anyhow!("{}: {e}", args.graph.display()))?;
    Ok((g, file.universe))
}

fn cmd_quotient(args: GraphArgs) -> CmdResult {
    let (g, names) = load_graph(&args)?;
    let q = quotient(&g);
    let classes: Vec<Vec<&str>> = q
        .classes
        .iter()
        .map(|c| c.iter().map(|&v| names[v as usize].as_str()).collect())
        .collect();
    let edges: Vec<(u32, u32)> = q.graph.edges().collect();
    let labels: Vec<Vec<u64>> = (0..q.graph.len()).map(|c| q.graph.label(c).iter().copied().collect()).collect();
    let out = serde_json::json!({ "classes": classes, "edges": edges, "labels": labels });
    println!("{}", serde_json::to_string_pretty(&out).expect("json"));
    Ok(true)
}

fn cmd_chi(args: ChiArgs) -> CmdResult {
    let (g, names) = load_graph(&args.graph)?;
    let u = names
        .iter()
        .position(|n| *n == args.node)
        .ok_or_else(|| anyhow!("unknown vertex {:?}", args.node))?;
    let l: BigInt = args.counter.parse().map_err(|_| anyhow!("counter {:?} is not an integer", args.counter))?;
    let holds = chi_hat(&g, u, &l);
    println!("{holds}");
    Ok(holds)
}

fn match_config(args: &MatchArgs) -> anyhow::Result<GameConfig> {
    let a = load_structure(&args.a)?;
    let b = load_structure(&args.b)?;
    Ok(GameConfig::new(a, b, args.k, args.q)?.with_budget(args.budget.budget()))
}

fn duplicator(args: &MatchArgs, seed: u64, cfg: &GameConfig) -> anyhow::Result<Box<dyn Duplicator>> {
    duplicator_by_name(&args.duplicator, seed, cfg)
        .ok_or_else(|| anyhow!("unknown duplicator {:?}; expected one of {}", args.duplicator, DUPLICATORS.join(", ")))
}

fn finish_match(outcome: &lrec_core::game::Outcome, transcript: &Transcript, path: Option<&Path>) -> anyhow::Result<()> {
    if let Some(p) = path {
        fs::write(p, transcript.to_jsonl()).with_context(|| format!("writing {}", p.display()))?;
    }
    println!("winner: {} ({})", outcome.winner, outcome.reason);
    Ok(())
}

fn cmd_game_run(args: GameRunArgs) -> CmdResult {
    let seed = seed_or_default(args.game.seed);
    let cfg = match_config(&args.game)?;
    let mut spoiler: Box<dyn Spoiler> = match args.spoiler.strip_prefix("formula:") {
        Some(text) => Box::new(FormulaSpoiler::new(load_formula(text, &Vocabulary::of(&cfg.a))?, seed)),
        None => spoiler_by_name(&args.spoiler, seed).ok_or_else(|| {
            anyhow!("unknown spoiler {:?}; expected one of {}, formula:<text>", args.spoiler, SPOILERS.join(", "))
        })?,
    };
    let mut dup = duplicator(&args.game, seed, &cfg)?;
    let r = run_match(&cfg, spoiler.as_mut(), dup.as_mut(), seed).map_err(anyhow::Error::from)?;
    finish_match(&r.outcome, &r.transcript, args.game.transcript.as_deref())?;
    Ok(true)
}

fn cmd_game_replay(args: ReplayArgs) -> CmdResult {
    let tr = Transcript::from_jsonl(&read(&args.transcript)?).map_err(anyhow::Error::from)?;
    let factory = |name: &str, seed: u64, cfg: &GameConfig| duplicator_by_name(name, seed, cfg);
    let report = replay(&tr, &factory).map_err(anyhow::Error::from)?;
    if let Some(m) = &report.mismatch {
        println!("hash mismatch: {m}");
        return Ok(false);
    }
    if report.outcome != tr.outcome {
        println!("outcome mismatch: recorded {:?}, replayed {:?}", tr.outcome, report.outcome);
        return Ok(false);
    }
    let outcome = report.outcome.as_ref().map(|o| format!("{} ({})", o.winner, o.reason)).unwrap_or_else(|| "none".into());
    println!("replay ok: {} lines, winner: {outcome}", report.lines_compared);
    Ok(true)
}

fn cmd_game_interactive(args: InteractiveArgs) -> CmdResult {
    let seed = seed_or_default(args.game.seed);
    let cfg = match_config(&args.game)?;
    let mut dup = duplicator(&args.game, seed, &cfg)?;
    let stdin = io::stdin();
    let mut human = interactive::HumanSpoiler::new(stdin.lock(), io::stdout(), &cfg);
    let r = run_match(&cfg, &mut human, dup.as_mut(), seed).map_err(anyhow::Error::from)?;
    let mut out = io::stdout();
    writeln!(out, "=== {} wins: {} ===", r.outcome.winner, r.outcome.reason).map_err(anyhow::Error::from)?;
    if let Some(p) = &args.game.transcript {
        fs::write(p, r.transcript.to_jsonl()).with_context(|| format!("writing {}", p.display()))?;
    }
    Ok(true)
}

fn cmd_verify(args: VerifyArgs) -> CmdResult {
    if !SUITES.contains(&args.suite.as_str()) {
        return Err(anyhow!("unknown suite {:?}; expected one of {}", args.suite, SUITES.join(", ")).into());
    }
    let opts = VerifyOptions {
        seed: seed_or_default(args.seed),
        mode: if args.sequential { ExecMode::Sequential } else { ExecMode::Parallel },
        psp_rule: if args.mutate_psp { ChildRule::AllowEqual } else { ChildRule::Distinct },
    };
    let report = run_suite(&args.suite, &opts).map_err(anyhow::Error::from)?;
    println!("{}", report.to_json());
    Ok(report.passed)
}
