//! `brix`: generate, index, query and benchmark CSV breach corpora.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "brix",
    version,
    about = "Record retrieval over very large CSV breach corpora"
)]
struct Cli {
    /// More progress output on standard error (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    /// Only print results and errors.
    #[arg(short, long, global = true, conflicts_with = "verbose")]
    quiet: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a seeded synthetic corpus with probe rows planted at the quartiles.
    Generate(GenerateArgs),
    /// Build the row-offset index and any requested key indexes.
    Index(IndexArgs),
    /// Look records up by row number, key or raw substring.
    Query(QueryArgs),
    /// Time every strategy on the quartile probes of a generated corpus.
    Bench(BenchArgs),
    /// Extrapolate memory and time for a full corpus from a sample.
    Estimate(EstimateArgs),
    /// Print index headers and whether they still match their corpus.
    Inspect(InspectArgs),
}

#[derive(Debug, Args)]
struct CorpusArgs {
    /// CSV corpus.
    corpus: PathBuf,

    /// Field delimiter (a single ASCII character).
    #[arg(long, default_value = ",", value_parser = parse_ascii)]
    delimiter: u8,

    /// Treat the first line as data rather than a header.
    #[arg(long)]
    no_header: bool,

    /// Where indexes live [default: <corpus>.brix.d]
    #[arg(long, env = "BRIX_INDEX_DIR")]
    index_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GenerateArgs {
    #[arg(long)]
    rows: u64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = brix::datagen::DEFAULT_COLUMNS)]
    columns: usize,
    #[arg(long, default_value_t = brix::datagen::DEFAULT_EMAIL_COLUMN)]
    email_column: usize,
    #[arg(long, default_value_t = brix::datagen::DEFAULT_PHONE_COLUMN)]
    phone_column: usize,
    /// Skip the quartile probe rows.
    #[arg(long)]
    no_plants: bool,
}

#[derive(Debug, Args)]
struct IndexArgs {
    #[command(flatten)]
    corpus: CorpusArgs,

    /// Key index to build, as KIND:COLUMN (kinds: email, phone, integer, verbatim).
    #[arg(long = "key", value_name = "KIND:COLUMN", value_parser = parse_key_spec)]
    keys: Vec<(brix::KeyKind, usize)>,

    /// Rebuild indexes that already exist, including stale ones.
    #[arg(long)]
    rebuild: bool,

    /// Memory budget for sorting key entries, in MiB.
    #[arg(long, default_value_t = 512)]
    sort_memory_mb: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum StrategyArg {
    Auto,
    LineScan,
    FieldScan,
    ChunkedScan,
    Index,
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("target").required(true).args(["row", "email", "phone", "pattern", "value"]))]
struct QueryArgs {
    #[command(flatten)]
    corpus: CorpusArgs,

    /// Data row number (1-based).
    #[arg(long)]
    row: Option<u64>,
    #[arg(long)]
    email: Option<String>,
    #[arg(long)]
    phone: Option<String>,
    /// Raw substring, matched anywhere in a line.
    #[arg(long)]
    pattern: Option<String>,
    /// Key of the kind given by --kind.
    #[arg(long, requires = "kind")]
    value: Option<String>,
    /// Key kind for --value.
    #[arg(long, value_parser = parse_key_kind)]
    kind: Option<brix::KeyKind>,

    /// Key column [default: 5 for --email, 7 for --phone].
    #[arg(long)]
    column: Option<usize>,

    #[arg(long, value_enum, default_value_t = StrategyArg::Auto)]
    strategy: StrategyArg,

    #[arg(long, default_value_t = brix::planner::DEFAULT_CHUNK_ROWS)]
    chunk_rows: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ProbeArg {
    Row,
    Email,
    Phone,
    Integer,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[command(flatten)]
    corpus: CorpusArgs,

    #[arg(long, value_enum, default_value_t = ProbeArg::Email)]
    probe: ProbeArg,

    /// Comma-separated strategies [default: every one that applies].
    #[arg(long, value_delimiter = ',', value_parser = parse_strategy)]
    strategies: Vec<brix::Strategy>,

    #[arg(long, default_value_t = 3)]
    repetitions: usize,

    #[arg(long, default_value_t = 1)]
    warmup: usize,

    /// Scan to the end of the file even after a match.
    #[arg(long)]
    no_early_exit: bool,

    #[arg(long, default_value_t = brix::planner::DEFAULT_CHUNK_ROWS)]
    chunk_rows: usize,

    /// Emit the JSON report instead of markdown tables.
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("source").required(true).args(["corpus", "sample_size"]))]
struct EstimateArgs {
    /// Corpus to sample from.
    corpus: Option<PathBuf>,

    /// Bytes of the corpus to process [default: 10% of the file].
    #[arg(long, requires = "corpus")]
    sample_bytes: Option<u64>,

    /// Size to extrapolate to, in bytes [default: the corpus size].
    #[arg(long, requires = "corpus")]
    target_bytes: Option<u64>,

    #[arg(long, default_value_t = brix::datagen::DEFAULT_EMAIL_COLUMN, requires = "corpus")]
    column: usize,

    #[arg(long, default_value_t = brix::planner::DEFAULT_CHUNK_ROWS, requires = "corpus")]
    chunk_rows: usize,

    #[arg(long, default_value = ",", value_parser = parse_ascii)]
    delimiter: u8,

    #[arg(long)]
    no_header: bool,

    /// Measured sample size (any unit; must match --target-size).
    #[arg(long, requires_all = ["sample_mem", "sample_time", "target_size"], conflicts_with = "corpus")]
    sample_size: Option<f64>,
    /// Measured peak memory for the sample, in MB.
    #[arg(long, conflicts_with = "corpus")]
    sample_mem: Option<f64>,
    /// Measured processing time for the sample, in seconds.
    #[arg(long, conflicts_with = "corpus")]
    sample_time: Option<f64>,
    /// Size to extrapolate to, in the unit of --sample-size.
    #[arg(long, conflicts_with = "corpus")]
    target_size: Option<f64>,

    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct InspectArgs {
    /// Index files, index directories or corpora (whose index directory is
    /// inspected).
    #[arg(required = true)]
    paths: Vec<PathBuf>,

    #[arg(long, env = "BRIX_INDEX_DIR")]
    index_dir: Option<PathBuf>,

    #[arg(long)]
    json: bool,
}

fn parse_ascii(s: &str) -> Result<u8, String> {
    match s.as_bytes() {
        [b] if b.is_ascii() => Ok(*b),
        _ => Err(format!("expected a single ASCII character, got `{s}`")),
    }
}

fn parse_key_kind(s: &str) -> Result<brix::KeyKind, String> {
    s.parse().map_err(|e: brix::Error| e.to_string())
}

fn parse_strategy(s: &str) -> Result<brix::Strategy, String> {
    s.parse().map_err(|e: brix::Error| e.to_string())
}

fn parse_key_spec(s: &str) -> Result<(brix::KeyKind, usize), String> {
    let (kind, column) = s
        .split_once(':')
        .ok_or_else(|| format!("expected KIND:COLUMN, got `{s}`"))?;
    let column = column
        .parse()
        .map_err(|_| format!("`{column}` is not a column number"))?;
    Ok((parse_key_kind(kind)?, column))
}

/// Misuse detected after argument parsing; exits with status 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

/// The error chain on one line, skipping causes already spelled out by the
/// message above them.
fn one_line(e: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in e.chain() {
        let text = cause.to_string();
        if !out.contains(&text) {
            if !out.is_empty() {
                out.push_str(": ");
            }
            out.push_str(&text);
        }
    }
    out.replace('\n', " ")
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    let verbosity = if cli.quiet { 0 } else { 1 + cli.verbose };
    let out = commands::Output::new(verbosity);
    let result = match cli.command {
        Command::Generate(a) => commands::generate(a, &out),
        Command::Index(a) => commands::index(a, &out),
        Command::Query(a) => commands::query(a, &out),
        Command::Bench(a) => commands::bench(a, &out),
        Command::Estimate(a) => commands::estimate(a, &out),
        Command::Inspect(a) => commands::inspect(a, &out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let (code, status) = if e.downcast_ref::<UsageError>().is_some() {
                ("usage", 2)
            } else if let Some(err) = e.downcast_ref::<brix::Error>() {
                (err.code(), 1)
            } else if e.downcast_ref::<std::io::Error>().is_some() {
                ("io", 1)
            } else {
                ("error", 1)
            };
            eprintln!("ERROR {code}: {}", one_line(&e));
            ExitCode::from(status)
        }
    }
}
