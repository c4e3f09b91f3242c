use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use axf::eval::{Evaluator, Strategy, Universe};
use axf::logic::{derived_names, negative_occurrences, AxiomProgram};
use axf::syntax::{parse_program_named, parse_state_named, print_program, Diagnostics};
use axf::transform::{
    compute_metrics, eliminate_negative_occurrences, merge_to_single_stratum, Mutation, SizeMetrics, TransformError,
    TransformOptions,
};
use axf::verify::{Check, Mode, VerificationPlan, VerificationReport, Verifier, VerifyError};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

const EXIT_COUNTEREXAMPLE: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_INTERNAL: u8 = 3;

#[derive(Parser)]
#[command(name = "axf", version, about = "Evaluate and transform stratified axiom programs")]
struct Cli {
    /// Machine-readable JSON on stdout
    #[arg(long, global = true)]
    json: bool,
    /// Suppress progress and summaries on stderr
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a program and print it in normal form
    Parse { file: PathBuf },
    /// Extend a basic state and print the true derived atoms
    Eval(EvalArgs),
    /// Eliminate negative occurrences of derived predicates
    Transform(TransformArgs),
    /// Check the transformation against brute-force oracles
    Verify(VerifyArgs),
    /// Size metrics per stratum
    Stats { file: PathBuf },
}

#[derive(Args)]
struct EvalArgs {
    file: PathBuf,
    /// Basic state file
    #[arg(long)]
    state: PathBuf,
    /// Also print the stage of every derived atom per stratum
    #[arg(long)]
    stages: bool,
    /// Include basic atoms in the output
    #[arg(long)]
    all: bool,
    #[arg(long, value_enum, default_value_t = StrategyArg::Sequential)]
    strategy: StrategyArg,
    /// Seed for the shuffled strategy
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    Sequential,
    Staged,
    Shuffled,
}

#[derive(Args)]
struct TransformArgs {
    file: PathBuf,
    /// Output file (stdout when absent)
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Merge all strata into one afterwards
    #[arg(long)]
    merge: bool,
    /// Share common subformulas through auxiliary predicates
    #[arg(long)]
    optimize_aux: bool,
    /// Collapse double negations
    #[arg(long)]
    simplify: bool,
    /// Write the transformation report as JSON
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long, hide = true)]
    mutate: Option<Mutation>,
}

#[derive(Args)]
struct VerifyArgs {
    file: PathBuf,
    /// Transformed program to check (default: transform FILE)
    #[arg(long)]
    transformed: Option<PathBuf>,
    /// Universe sizes, comma separated
    #[arg(long, value_delimiter = ',', default_values_t = vec![1, 2, 3])]
    universe: Vec<usize>,
    /// Enumerate every basic state
    #[arg(long, conflicts_with = "samples")]
    exhaustive: bool,
    /// Number of sampled basic states
    #[arg(long, requires = "seed")]
    samples: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// `all` or a comma separated subset of theorem1, theorem2,
    /// equivalence, merge_equivalence, polarity_lint, aux_equivalence
    #[arg(long, default_value = "all")]
    checks: String,
    #[arg(long, hide = true)]
    mutate: Option<Mutation>,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Failure { code: EXIT_INPUT, message: message.into() }
    }

    fn internal(message: impl Into<String>) -> Self {
        Failure { code: EXIT_INTERNAL, message: message.into() }
    }
}

impl From<Diagnostics> for Failure {
    fn from(d: Diagnostics) -> Self {
        Failure::input(d.to_string().trim_end())
    }
}

impl From<TransformError> for Failure {
    fn from(e: TransformError) -> Self {
        match e {
            TransformError::NotStratified(_) | TransformError::NegativeOccurrences(_) => Failure::input(e.to_string()),
            _ => Failure::internal(e.to_string()),
        }
    }
}

impl From<VerifyError> for Failure {
    fn from(e: VerifyError) -> Self {
        match e {
            VerifyError::Eval(_) | VerifyError::Transform(TransformError::NoProgress(_)) => {
                Failure::internal(e.to_string())
            }
            _ => Failure::input(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = std::env::var("AXF_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        // Only fails if a pool exists already, which cannot happen here.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            if cli.json {
                println!("{}", json!({ "error": f.message, "exit_code": f.code }));
            }
            eprintln!("{}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: &Cli) -> Result<u8, Failure> {
    match &cli.command {
        Command::Parse { file } => cmd_parse(cli, file),
        Command::Eval(args) => cmd_eval(cli, args),
        Command::Transform(args) => cmd_transform(cli, args),
        Command::Verify(args) => cmd_verify(cli, args),
        Command::Stats { file } => cmd_stats(cli, file),
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn load(path: &Path) -> Result<AxiomProgram, Failure> {
    Ok(parse_program_named(&read(path)?, Some(&path.display().to_string()))?)
}

fn to_json<T: serde::Serialize + ?Sized>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("serializable")
}

fn cmd_parse(cli: &Cli, file: &Path) -> Result<u8, Failure> {
    let program = load(file)?;
    if cli.json {
        println!("{}", to_json(&program));
    } else {
        print!("{}", print_program(&program));
    }
    Ok(0)
}

fn cmd_eval(cli: &Cli, args: &EvalArgs) -> Result<u8, Failure> {
    let program = load(&args.file)?;
    let state = parse_state_named(&read(&args.state)?, &program, Some(&args.state.display().to_string()))?;
    let universe = Universe::new(program.objects().to_vec()).map_err(|e| Failure::input(e.to_string()))?;
    let evaluator = Evaluator::new(&program, &universe).map_err(|e| Failure::input(e.to_string()))?;
    let strategy = match (args.stages, args.strategy) {
        (true, _) | (_, StrategyArg::Staged) => Strategy::Staged,
        (_, StrategyArg::Sequential) => Strategy::Sequential,
        (_, StrategyArg::Shuffled) => Strategy::Shuffled(args.seed),
    };
    let (extended, tables) = evaluator.extend_with(&state, strategy).map_err(|e| Failure::internal(e.to_string()))?;
    let names: Vec<&str> = program
        .signature()
        .iter()
        .filter(|p| args.all || p.is_derived())
        .map(|p| p.name.as_str())
        .collect();
    let atoms = extended.true_atoms_of(names);

    if cli.json {
        let mut out = json!({ "atoms": atoms.iter().map(|a| a.to_string()).collect::<Vec<_>>() });
        if args.stages {
            out["stages"] = tables
                .iter()
                .map(|t| {
                    json!({
                        "stratum": t.stratum + 1,
                        "f": t.fixpoint,
                        "entries": t.entries().iter().map(|(a, s)| json!({ "atom": a.to_string(), "stage": s })).collect::<Vec<_>>(),
                    })
                })
                .collect();
        }
        println!("{}", to_json(&out));
        return Ok(0);
    }
    let mut out = String::new();
    for a in &atoms {
        writeln!(out, "{a}").unwrap();
    }
    if args.stages {
        for t in &tables {
            writeln!(out, "\nstratum {}", t.stratum + 1).unwrap();
            for (a, s) in t.entries() {
                writeln!(out, "{a}: {s}").unwrap();
            }
            writeln!(out, "f: {}", t.fixpoint).unwrap();
        }
    }
    print!("{out}");
    Ok(0)
}

fn lint(program: &AxiomProgram) -> Result<(), Failure> {
    let negatives = negative_occurrences(program, &derived_names(program));
    if negatives.is_empty() {
        return Ok(());
    }
    let list: Vec<String> = negatives.iter().map(|o| format!("  {o}")).collect();
    Err(Failure::internal(format!("internal error: output still has negative derived occurrences\n{}", list.join("\n"))))
}

fn cmd_transform(cli: &Cli, args: &TransformArgs) -> Result<u8, Failure> {
    let program = load(&args.file)?;
    let opts = TransformOptions { optimize_aux: args.optimize_aux, simplify: args.simplify, mutation: args.mutate };
    let (mut out, report) = eliminate_negative_occurrences(&program, opts)?;
    lint(&out)?;
    if args.merge {
        out = merge_to_single_stratum(&out)?;
    }
    let text = print_program(&out);
    if let Some(path) = &args.report {
        fs::write(path, to_json(&report)).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    }
    match &args.output {
        Some(path) => fs::write(path, &text).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?,
        None if cli.json => println!("{}", to_json(&json!({ "program": out, "report": report }))),
        None => print!("{text}"),
    }
    if !cli.quiet {
        eprintln!(
            "{} replacements, {} stage families, Q {} -> {}",
            report.replacements.len(),
            report.families.len(),
            report.metrics_before.total,
            compute_metrics(&out).total
        );
    }
    Ok(0)
}

fn cmd_verify(cli: &Cli, args: &VerifyArgs) -> Result<u8, Failure> {
    let original = load(&args.file)?;
    let transformed = match (&args.transformed, args.mutate) {
        (Some(path), _) => Some(load(path)?),
        (None, Some(m)) => Some(
            eliminate_negative_occurrences(&original, TransformOptions { mutation: Some(m), ..Default::default() })?.0,
        ),
        (None, None) => None,
    };
    let mode = match (args.exhaustive, args.samples, args.seed) {
        (_, Some(count), Some(seed)) => Mode::Sampled { count, seed },
        _ => Mode::Exhaustive,
    };
    let plan = VerificationPlan { universe_sizes: args.universe.clone(), mode, checks: Check::parse_list(&args.checks)? };
    let reports = Verifier::new(&original, transformed.as_ref())?.run(&plan)?;
    let failed = reports.iter().any(|r| !r.ok());

    if cli.json {
        println!("{}", to_json(&reports));
    } else {
        for r in &reports {
            println!("{}", report_line(r));
        }
    }
    Ok(if failed { EXIT_COUNTEREXAMPLE } else { 0 })
}

fn report_line(r: &VerificationReport) -> String {
    let mut line = match r.universe_size {
        Some(n) => format!("{:<18} n={} states={:<8} {}", r.check.name(), n, r.states_tested, r.result),
        None => format!("{:<18} {:<19} {}", r.check.name(), "", r.result),
    };
    if let Some(cx) = &r.counterexample {
        write!(line, "\n  {cx}").unwrap();
    }
    for v in &r.violations {
        write!(line, "\n  {v}").unwrap();
    }
    line
}

fn cmd_stats(cli: &Cli, file: &Path) -> Result<u8, Failure> {
    let program = load(file)?;
    let metrics = compute_metrics(&program);
    if cli.json {
        println!("{}", to_json(&metrics));
    } else {
        print!("{}", stats_table(&metrics));
    }
    Ok(0)
}

fn stats_table(metrics: &SizeMetrics) -> String {
    let mut out = String::new();
    writeln!(out, "{:>7} {:>5} {:>3} {:>4} {:>5} {:>7} {:>6}", "stratum", "m", "r", "R", "o", "q", "stage").unwrap();
    for (i, s) in metrics.strata.iter().enumerate() {
        writeln!(out, "{:>7} {:>5} {:>3} {:>4} {:>5} {:>7} {:>6}", i + 1, s.m, s.r, s.r_sum, s.o, s.q, s.stage_predicates)
            .unwrap();
    }
    writeln!(out, "Q = {} (signature {})", metrics.total, metrics.signature_size).unwrap();
    out
}
