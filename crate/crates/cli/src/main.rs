//! `mfnas` command-line front end.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::Value;

use mfnas_core::cost_model::{model_cost, p_min};
use mfnas_core::evaluators::Evaluator;
use mfnas_core::harness::{compare_strategies, oracle_best, run_with_evaluator, Comparison};
use mfnas_core::report::{read_log, write_log, write_report, write_summary};
use mfnas_core::{
    m_alpha, netscore, s_prime, Error, EvaluatorConfig, Genotype, NetScoreParams, RunConfig,
    SpaceSpec, StrategyKind,
};

const DEFAULT_OUT: &str = "mfnas-out";

#[derive(Parser, Debug)]
#[command(name = "mfnas", version, about = "M-factor architecture search over ResNet kernel choices")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one search and write trials.jsonl and summary.json
    Run(RunArgs),
    /// Run several strategies over a range of seeds
    Compare(CompareArgs),
    /// Score an accuracy/size pair
    Score(ScoreArgs),
    /// Print parameter and MAC counts for a genotype
    Cost(CostArgs),
    /// Print the search-space size
    Enumerate(EnumerateArgs),
    /// Brute-force the best architecture under a cheap evaluator
    Oracle(OracleArgs),
    /// Turn a trial log into CSV (and optional SVG) report files
    Report(ReportArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum EvaluatorKind {
    Surrogate,
    Table,
    External,
}

/// Options shared by every command that builds a run configuration.
#[derive(Args, Debug, Default)]
struct ConfigArgs {
    /// JSON run configuration; flags override its values
    #[arg(long, value_name = "JSON")]
    config: Option<PathBuf>,
    /// Search strategy
    #[arg(long, value_parser = parse_strategy)]
    strategy: Option<StrategyKind>,
    #[arg(long)]
    trials: Option<usize>,
    /// Random seed [env: MFNAS_SEED, used when neither flag nor config sets it]
    #[arg(long)]
    seed: Option<u64>,
    /// Accuracy/size weight of the weighted M-factor
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, value_enum)]
    evaluator: Option<EvaluatorKind>,
    /// arch_id,accuracy CSV for the table evaluator
    #[arg(long, value_name = "CSV")]
    table: Option<PathBuf>,
    /// Command line of an mfnas-eval/1 evaluator process
    #[arg(long, value_name = "COMMAND LINE")]
    eval_cmd: Option<String>,
    /// Per-request timeout for the external evaluator
    #[arg(long, value_name = "SECS")]
    eval_timeout: Option<f64>,
    /// Parameter budget; larger architectures score zero
    #[arg(long)]
    max_params: Option<u64>,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[command(flatten)]
    cfg: ConfigArgs,
    /// Output directory
    #[arg(long, default_value = DEFAULT_OUT)]
    out: PathBuf,
    /// Record measured evaluation time (logs are then no longer reproducible)
    #[arg(long)]
    timing: bool,
}

#[derive(Args, Debug)]
struct CompareArgs {
    #[command(flatten)]
    cfg: ConfigArgs,
    /// Comma-separated strategies [default: all]
    #[arg(long, value_delimiter = ',', value_parser = parse_strategy)]
    strategies: Vec<StrategyKind>,
    /// Number of seeds, counting up from the base seed
    #[arg(long, default_value_t = 20)]
    seeds: u64,
    /// Worker threads
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Write comparison.json here
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ScoreArgs {
    #[arg(long)]
    accuracy: f64,
    /// Parameter count (or give --genotype)
    #[arg(long, conflicts_with = "genotype", required_unless_present = "genotype")]
    params: Option<u64>,
    #[arg(long)]
    genotype: Option<String>,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    /// Also print NetScore
    #[arg(long)]
    netscore: bool,
    /// MAC count for NetScore when scoring by --params
    #[arg(long, conflicts_with = "genotype")]
    macs: Option<u64>,
    /// Space configuration JSON (uses its "space" field)
    #[arg(long, value_name = "JSON")]
    config: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CostArgs {
    genotype: String,
    #[arg(long, value_name = "JSON")]
    config: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EnumerateArgs {
    /// Stream arch_id,params rows instead of the count
    #[arg(long)]
    rows: bool,
    #[arg(long, value_name = "JSON")]
    config: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct OracleArgs {
    #[command(flatten)]
    cfg: ConfigArgs,
}

#[derive(Args, Debug)]
struct ReportArgs {
    /// trials.jsonl written by `run`
    log: PathBuf,
    /// Output directory [default: the log's directory]
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also draw best_so_far.svg
    #[arg(long)]
    svg: bool,
}

fn parse_strategy(s: &str) -> Result<StrategyKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Failure with an exit code: 1 for evaluator and I/O failures, 2 for bad
/// configuration or input.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn config(message: impl Into<String>) -> Self {
        Failure { code: 2, message: message.into() }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Trial { source, .. } => exit_code(source),
        _ if e.is_evaluator_failure() => 1,
        Error::Io(_)
        | Error::Json(_)
        | Error::Csv(_)
        | Error::MalformedLog { .. }
        | Error::EmptyRun
        | Error::InsufficientData { .. } => 1,
        _ => 2,
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure { code: exit_code(&e), message: e.to_string() }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e).into()
    }
}

type CliResult<T = ()> = Result<T, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version print to stdout and exit 0; usage errors exit 2.
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Score(a) => cmd_score(a),
        Command::Cost(a) => cmd_cost(a),
        Command::Enumerate(a) => cmd_enumerate(a),
        Command::Oracle(a) => cmd_oracle(a),
        Command::Report(a) => cmd_report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("mfnas: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn read_config_value(path: &Path) -> CliResult<Value> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::config(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| Failure::config(format!("config {} is not JSON: {e}", path.display())))
}

fn parse_config(value: Value, path: &Path) -> CliResult<RunConfig> {
    serde_json::from_value(value)
        .map_err(|e| Failure::config(format!("config {}: {e}", path.display())))
}

fn env_seed() -> CliResult<Option<u64>> {
    match std::env::var("MFNAS_SEED") {
        Ok(s) => s
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Failure::config(format!("MFNAS_SEED must be an unsigned integer, got {s:?}"))),
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(e) => Err(Failure::config(format!("MFNAS_SEED: {e}"))),
    }
}

/// Config file values, then flags on top. The seed falls back to MFNAS_SEED
/// only when neither the flag nor the file sets it.
fn build_config(a: &ConfigArgs) -> CliResult<RunConfig> {
    let (mut cfg, file_seed) = match &a.config {
        Some(path) => {
            let value = read_config_value(path)?;
            let has_seed = value.get("seed").is_some();
            (parse_config(value, path)?, has_seed)
        }
        None => (RunConfig::default(), false),
    };
    if let Some(s) = a.strategy {
        cfg.strategy = s;
    }
    if let Some(t) = a.trials {
        cfg.trials = t;
    }
    if let Some(alpha) = a.alpha {
        cfg.alpha = alpha;
    }
    if let Some(p) = a.max_params {
        cfg.max_params = Some(p);
    }
    match (a.seed, file_seed, env_seed()?) {
        (Some(s), _, _) => cfg.seed = s,
        (None, false, Some(s)) => cfg.seed = s,
        _ => {}
    }

    let kind = a.evaluator.or(if a.eval_cmd.is_some() {
        Some(EvaluatorKind::External)
    } else if a.table.is_some() {
        Some(EvaluatorKind::Table)
    } else {
        None
    });
    match kind {
        None => {}
        Some(EvaluatorKind::Surrogate) => {
            if !matches!(cfg.evaluator, EvaluatorConfig::Surrogate { .. }) {
                cfg.evaluator = EvaluatorConfig::default();
            }
        }
        Some(EvaluatorKind::Table) => {
            let path = match (&a.table, &cfg.evaluator) {
                (Some(p), _) => p.clone(),
                (None, EvaluatorConfig::Table { path }) => path.clone(),
                _ => return Err(Failure::config("--evaluator table needs --table <csv>")),
            };
            cfg.evaluator = EvaluatorConfig::Table { path };
        }
        Some(EvaluatorKind::External) => {
            let (command, timeout_secs) = match (&a.eval_cmd, &cfg.evaluator) {
                (Some(line), EvaluatorConfig::External { timeout_secs, .. }) => {
                    (split_command(line)?, *timeout_secs)
                }
                (Some(line), _) => (split_command(line)?, 300.0),
                (None, EvaluatorConfig::External { command, timeout_secs }) => {
                    (command.clone(), *timeout_secs)
                }
                _ => {
                    return Err(Failure::config(
                        "--evaluator external needs --eval-cmd or an external evaluator in --config",
                    ))
                }
            };
            cfg.evaluator = EvaluatorConfig::External { command, timeout_secs };
        }
    }
    if let Some(t) = a.eval_timeout {
        match &mut cfg.evaluator {
            EvaluatorConfig::External { timeout_secs, .. } => *timeout_secs = t,
            _ => return Err(Failure::config("--eval-timeout only applies to the external evaluator")),
        }
    }
    if let EvaluatorConfig::External { command, .. } = &cfg.evaluator {
        if command.is_empty() {
            return Err(Failure::config("external evaluator command is empty"));
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn split_command(line: &str) -> CliResult<Vec<String>> {
    match shlex::split(line) {
        Some(argv) if !argv.is_empty() => Ok(argv),
        _ => Err(Failure::config(format!("cannot parse --eval-cmd {line:?}"))),
    }
}

fn build_evaluator(cfg: &RunConfig) -> CliResult<Box<dyn Evaluator + Send>> {
    cfg.evaluator.build(&cfg.space).map_err(|e| match &e {
        // Unreadable or malformed tables are input errors.
        Error::Io(_) | Error::Csv(_) => Failure::config(e.to_string()),
        _ => e.into(),
    })
}

fn cmd_run(a: RunArgs) -> CliResult {
    let mut cfg = build_config(&a.cfg)?;
    cfg.record_timing |= a.timing;
    let mut evaluator = build_evaluator(&cfg)?;
    fs::create_dir_all(&a.out)?;
    let log_path = a.out.join("trials.jsonl");
    match run_with_evaluator(&cfg, &mut *evaluator) {
        Ok(summary) => {
            write_log(&log_path, &summary.trial_log)?;
            write_summary(a.out.join("summary.json"), &summary)?;
            println!("{}", serde_json::to_string(&summary.best).map_err(Error::from)?);
            Ok(())
        }
        Err(Error::Trial { trial, partial_log, source }) => {
            // Keep what was measured before the failure.
            write_log(&log_path, &partial_log)?;
            Err(Failure {
                code: exit_code(&source),
                message: format!(
                    "trial {trial}: {source} ({} completed trials written to {})",
                    partial_log.len(),
                    log_path.display()
                ),
            })
        }
        Err(e) => Err(e.into()),
    }
}

fn cmd_compare(a: CompareArgs) -> CliResult {
    let base = build_config(&a.cfg)?;
    if a.seeds == 0 {
        return Err(Failure::config("--seeds must be at least 1"));
    }
    if a.jobs == 0 {
        return Err(Failure::config("--jobs must be at least 1"));
    }
    let strategies = if a.strategies.is_empty() {
        StrategyKind::ALL.to_vec()
    } else {
        a.strategies.clone()
    };
    let cfgs: Vec<RunConfig> = strategies
        .iter()
        .map(|&strategy| RunConfig { strategy, ..base.clone() })
        .collect();
    let seeds: Vec<u64> = (0..a.seeds).map(|i| base.seed.wrapping_add(i)).collect();
    let cmp = compare_strategies(&cfgs, &seeds, a.jobs)?;
    print_comparison(&cmp);
    if let Some(dir) = &a.out {
        fs::create_dir_all(dir)?;
        let mut text = serde_json::to_string_pretty(&cmp).map_err(Error::from)?;
        text.push('\n');
        fs::write(dir.join("comparison.json"), text)?;
    }
    let failed: usize = cmp
        .rows
        .iter()
        .flat_map(|r| &r.per_seed)
        .filter(|o| o.result.is_err())
        .count();
    if failed > 0 {
        return Err(Failure {
            code: 1,
            message: format!("{failed} of {} runs failed", seeds.len() * cfgs.len()),
        });
    }
    Ok(())
}

fn print_comparison(cmp: &Comparison) {
    println!("strategy\tmedian_best_m\tbest_m\tbest_genotype\tbest_params\tfailed");
    for row in &cmp.rows {
        let failed = row.per_seed.iter().filter(|o| o.result.is_err()).count();
        for o in &row.per_seed {
            if let Err(msg) = &o.result {
                eprintln!("{} seed {}: {msg}", row.strategy, o.seed);
            }
        }
        let median = row.median_best_m.map(|m| m.to_string()).unwrap_or_else(|| "-".into());
        match &row.best {
            Some(b) => println!(
                "{}\t{median}\t{}\t{}\t{}\t{failed}",
                row.strategy, b.m_value, b.genotype, b.params
            ),
            None => println!("{}\t{median}\t-\t-\t-\t{failed}", row.strategy),
        }
    }
}

fn space_from(config: &Option<PathBuf>) -> CliResult<SpaceSpec> {
    let space = match config {
        Some(path) => parse_config(read_config_value(path)?, path)?.space,
        None => SpaceSpec::default(),
    };
    space.validate()?;
    Ok(space)
}

fn cmd_score(a: ScoreArgs) -> CliResult {
    let space = space_from(&a.config)?;
    let pm = p_min(&space)?;
    let (params, macs) = match (&a.genotype, a.params) {
        (Some(text), _) => {
            let g = space.parse_genotype(text)?;
            let cost = model_cost(&g, &space)?;
            (cost.params, Some(cost.macs))
        }
        (None, Some(p)) => (p, a.macs),
        (None, None) => unreachable!("clap requires --params or --genotype"),
    };
    let sp = s_prime(params, pm)?;
    let m = m_alpha(a.accuracy, sp, a.alpha)?;
    println!("p_min {pm}");
    println!("params {params}");
    println!("s_prime {sp}");
    println!("m_value {m}");
    if a.netscore {
        let macs = macs.ok_or_else(|| Failure::config("--netscore with --params needs --macs"))?;
        let ns = netscore(a.accuracy, params, macs, &NetScoreParams::default())?;
        println!("netscore {ns}");
    }
    Ok(())
}

fn cmd_cost(a: CostArgs) -> CliResult {
    let space = space_from(&a.config)?;
    let g: Genotype = space.parse_genotype(&a.genotype)?;
    let cost = model_cost(&g, &space)?;
    println!("params {}", cost.params);
    println!("macs {}", cost.macs);
    Ok(())
}

fn cmd_enumerate(a: EnumerateArgs) -> CliResult {
    use std::io::Write;
    let space = space_from(&a.config)?;
    if !a.rows {
        println!("{}", space.size());
        return Ok(());
    }
    let stdout = std::io::stdout();
    let mut out = std::io::BufWriter::new(stdout.lock());
    writeln!(out, "arch_id,params")?;
    for (id, g) in space.enumerate().enumerate() {
        writeln!(out, "{id},{}", model_cost(&g, &space)?.params)?;
    }
    out.flush()?;
    Ok(())
}

fn cmd_oracle(a: OracleArgs) -> CliResult {
    let cfg = build_config(&a.cfg)?;
    if matches!(cfg.evaluator, EvaluatorConfig::External { .. }) {
        return Err(Error::RefusedExpensiveOracle.into());
    }
    let mut evaluator = build_evaluator(&cfg)?;
    let best = oracle_best(&cfg.space, &mut *evaluator, cfg.alpha)?;
    println!("{}", serde_json::to_string(&best).map_err(Error::from)?);
    Ok(())
}

fn cmd_report(a: ReportArgs) -> CliResult {
    let log = read_log(&a.log)?;
    if log.is_empty() {
        return Err(Error::EmptyRun.into());
    }
    let out = match a.out {
        Some(dir) => dir,
        None => a
            .log
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_else(|| PathBuf::from(".")),
    };
    for path in write_report(&log, &out, a.svg)? {
        println!("{}", path.display());
    }
    Ok(())
}
