use std::fmt::Display;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use brix::bench::{make_plan, render_report, run, ProbeKind, ReportFormat};
use brix::csv_engine::format_row;
use brix::datagen::{generate_dataset, GenSpec, PlantManifest};
use brix::estimator::{
    bytes_to_mb, estimate as estimate_profile, extrapolate, mb_to_gb, profile_sample, SampleScan,
};
use brix::index_store::{
    build_key_index, build_row_offset_index, default_index_dir, key_index_file, read_header,
    row_index_file, BuildOptions, IndexHeader, IndexSet, INDEX_EXTENSION, MAGIC,
};
use brix::planner::{plan, run_strategy, ExecOptions, Query, StrategyChoice};
use brix::scan_search::{line_scan, LineScanMode};
use brix::{
    fingerprint_dataset, normalize_email, normalize_phone, CsvDialect, DatasetDescriptor, Error,
    KeyKind, NormalizedKey, RawRecord, Strategy,
};
use serde_json::json;

use crate::{
    BenchArgs, CorpusArgs, EstimateArgs, GenerateArgs, IndexArgs, InspectArgs, ProbeArg, QueryArgs,
    StrategyArg, UsageError,
};

const LOWER_BOUND_NOTE: &str =
    "linear extrapolation: treat these figures as a lower bound for the full corpus";

/// Diagnostics on standard error, filtered by verbosity.
pub struct Output {
    verbosity: u8,
}

impl Output {
    pub fn new(verbosity: u8) -> Self {
        Output { verbosity }
    }

    fn info(&self, msg: impl Display) {
        if self.verbosity >= 1 {
            eprintln!("{msg}");
        }
    }

    fn debug(&self, msg: impl Display) {
        if self.verbosity >= 2 {
            eprintln!("{msg}");
        }
    }

    fn warn(&self, msg: impl Display) {
        if self.verbosity >= 1 {
            eprintln!("warning: {msg}");
        }
    }
}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn dialect(delimiter: u8, no_header: bool) -> CsvDialect {
    CsvDialect {
        delimiter,
        ..CsvDialect::default()
    }
    .with_header(!no_header)
}

impl CorpusArgs {
    fn dialect(&self) -> CsvDialect {
        dialect(self.delimiter, self.no_header)
    }

    fn index_dir(&self) -> PathBuf {
        self.index_dir
            .clone()
            .unwrap_or_else(|| default_index_dir(&self.corpus))
    }

    /// Describes the corpus, taking the row count from a fresh row-offset
    /// index when there is one instead of counting rows.
    fn open(&self, out: &Output) -> Result<DatasetDescriptor> {
        let path = &self.corpus;
        if !path.is_file() {
            return Err(Error::Io(io::Error::new(
                io::ErrorKind::NotFound,
                format!("{}: no such corpus file", path.display()),
            ))
            .into());
        }
        let rows = row_index_file(&self.index_dir());
        if let Ok(header) = read_header(&rows) {
            if header.fingerprint == fingerprint_dataset(path)? {
                out.debug(format_args!(
                    "row count {} from {}",
                    header.entry_count,
                    rows.display()
                ));
                return Ok(DatasetDescriptor::with_row_count(
                    path,
                    self.dialect(),
                    header.entry_count,
                )?);
            }
        }
        out.debug("counting rows");
        Ok(DatasetDescriptor::open(path, self.dialect())?)
    }
}

pub fn generate(args: GenerateArgs, out: &Output) -> Result<()> {
    let mut spec = GenSpec::new(args.rows, args.seed).with_columns(
        args.columns,
        args.email_column,
        args.phone_column,
    );
    if !args.no_plants {
        spec = spec.with_quartile_plants()?;
    }
    spec.validate()?;
    let dataset = generate_dataset(&spec, &args.out)
        .with_context(|| format!("writing {}", args.out.display()))?;
    let manifest = PlantManifest::path_for(&args.out);
    PlantManifest::from(&spec).write(&manifest)?;
    out.info(format_args!(
        "wrote {} rows ({} bytes) to {}, plants in {}",
        dataset.row_count,
        dataset.size_bytes,
        args.out.display(),
        manifest.display()
    ));
    Ok(())
}

enum Existing {
    Missing,
    Fresh(IndexHeader),
    Stale,
}

fn existing(path: &Path, dataset: &DatasetDescriptor) -> Result<Existing> {
    if !path.exists() {
        return Ok(Existing::Missing);
    }
    let header = read_header(path)?;
    Ok(if header.fingerprint == dataset.fingerprint {
        Existing::Fresh(header)
    } else {
        Existing::Stale
    })
}

pub fn index(args: IndexArgs, out: &Output) -> Result<()> {
    let dataset = args.corpus.open(out)?;
    let dir = args.corpus.index_dir();
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let options = BuildOptions {
        memory_budget: args.sort_memory_mb.max(1) * 1024 * 1024,
        ..BuildOptions::default()
    };

    let mut targets = vec![(row_index_file(&dir), None)];
    for &(kind, column) in &args.keys {
        targets.push((key_index_file(&dir, kind, column), Some((kind, column))));
    }
    for (path, key) in targets {
        if !args.rebuild {
            match existing(&path, &dataset)? {
                Existing::Fresh(header) => {
                    out.info(format_args!(
                        "{}: up to date ({} entries)",
                        path.display(),
                        header.entry_count
                    ));
                    continue;
                }
                Existing::Stale => {
                    out.info("pass --rebuild to replace stale indexes");
                    return Err(Error::StaleIndex { path }.into());
                }
                Existing::Missing => {}
            }
        }
        let report = match key {
            None => build_row_offset_index(&dataset, &path)?,
            Some((kind, column)) => build_key_index(&dataset, column, kind, &path, &options)?,
        };
        out.info(format_args!(
            "{}: {} entries ({} rows scanned, {} malformed, {} without a key)",
            report.path.display(),
            report.entries,
            report.rows_scanned,
            report.malformed_rows,
            report.skipped_rows
        ));
    }
    Ok(())
}

/// Loads every index for the corpus, warning about the ones that failed
/// validation and returning them for callers that must not fall back.
fn load_indexes(
    corpus: &CorpusArgs,
    dataset: &DatasetDescriptor,
    out: &Output,
) -> Result<(IndexSet, Vec<Error>)> {
    let (set, problems) = IndexSet::open_dir(&corpus.index_dir(), dataset)?;
    let errors = problems.into_iter().map(|(_, e)| e).collect::<Vec<_>>();
    for e in &errors {
        out.debug(format_args!("ignoring index: {e}"));
    }
    Ok((set, errors))
}

fn key_query(args: &QueryArgs) -> Result<Option<Query>> {
    let key = |kind: KeyKind, raw: &str| -> Result<NormalizedKey> {
        let key = match kind {
            KeyKind::Email => normalize_email(raw),
            KeyKind::Phone => normalize_phone(raw),
            _ => kind.normalize(raw).unwrap_or(NormalizedKey {
                kind,
                value: String::new(),
            }),
        };
        if key.is_empty() {
            return Err(usage(format!("`{raw}` is not a usable {kind} key")));
        }
        Ok(key)
    };
    let (kind, raw, default_column) = if let Some(e) = &args.email {
        (KeyKind::Email, e, brix::datagen::DEFAULT_EMAIL_COLUMN)
    } else if let Some(p) = &args.phone {
        (KeyKind::Phone, p, brix::datagen::DEFAULT_PHONE_COLUMN)
    } else if let (Some(v), Some(kind)) = (&args.value, args.kind) {
        let column = args.column.ok_or_else(|| usage("--value needs --column"))?;
        (kind, v, column)
    } else {
        return Ok(None);
    };
    let column = args.column.unwrap_or(default_column);
    Ok(Some(Query::by_key(column, key(kind, raw)?)))
}

fn print_records<'a>(
    records: impl Iterator<Item = &'a RawRecord>,
    dialect: &CsvDialect,
) -> Result<usize> {
    let stdout = io::stdout();
    let mut w = io::BufWriter::new(stdout.lock());
    let mut n = 0;
    for record in records {
        writeln!(w, "{}", format_row(&record.fields, dialect))?;
        n += 1;
    }
    w.flush()?;
    Ok(n)
}

pub fn query(args: QueryArgs, out: &Output) -> Result<()> {
    let dataset = args.corpus.open(out)?;
    let dialect = dataset.dialect;

    if let Some(pattern) = &args.pattern {
        if !matches!(args.strategy, StrategyArg::Auto | StrategyArg::LineScan) {
            return Err(usage("--pattern only supports --strategy line-scan"));
        }
        if pattern.is_empty() {
            return Err(usage("--pattern must not be empty"));
        }
        let outcome = line_scan(
            &dataset.path,
            &dialect,
            pattern.as_bytes(),
            LineScanMode::All,
        )?;
        let n = print_records(outcome.matches.iter().map(|m| &m.record), &dialect)?;
        out.debug(format_args!(
            "line-scan: {n} matches, {} bytes in {:.4} s",
            outcome.bytes_scanned,
            outcome.elapsed.as_secs_f64()
        ));
        return Ok(());
    }

    let query = match (args.row, key_query(&args)?) {
        (Some(0), _) => return Err(usage("row numbers start at 1")),
        (Some(row), _) => Query::by_row(row)?,
        (None, Some(q)) => q,
        (None, None) => return Err(usage("nothing to look up")),
    };
    let choice = match args.strategy {
        StrategyArg::Auto => StrategyChoice::Auto,
        StrategyArg::LineScan => StrategyChoice::LineScan,
        StrategyArg::FieldScan => StrategyChoice::FieldScan,
        StrategyArg::ChunkedScan => StrategyChoice::ChunkedScan,
        StrategyArg::Index => StrategyChoice::Index,
    };
    let query = query.with_strategy(choice);
    if args.chunk_rows == 0 {
        return Err(usage("--chunk-rows must be at least 1"));
    }

    let (indexes, problems) = load_indexes(&args.corpus, &dataset, out)?;
    let strategy = match plan(&query, &indexes) {
        Ok(s) => s,
        Err(e) if choice == StrategyChoice::Index => {
            return Err(problems.into_iter().next().unwrap_or(e).into());
        }
        Err(e) => return Err(e.into()),
    };
    if choice == StrategyChoice::Auto && strategy != Strategy::IndexLookup {
        for e in &problems {
            out.warn(format_args!("{e}; falling back to a scan"));
        }
    }
    let options = ExecOptions {
        chunk_rows: args.chunk_rows,
        early_exit: false,
    };
    let result = run_strategy(strategy, &query.target, &dataset, &indexes, &options)?;
    let n = print_records(result.records(), &dialect)?;
    out.debug(format_args!(
        "{}: {n} matches, {} bytes in {:.4} s",
        result.strategy,
        result.bytes_scanned,
        result.elapsed.as_secs_f64()
    ));
    Ok(())
}

fn default_strategies(kind: ProbeKind, indexes: &IndexSet, column: usize) -> Vec<Strategy> {
    let mut strategies = Vec::new();
    let indexed = indexes.rows.is_some()
        && match kind {
            ProbeKind::Row => true,
            ProbeKind::Email => indexes.key_index(column, KeyKind::Email).is_some(),
            ProbeKind::Phone => indexes.key_index(column, KeyKind::Phone).is_some(),
            ProbeKind::Integer => indexes.key_index(column, KeyKind::Integer).is_some(),
        };
    if indexed {
        strategies.push(Strategy::IndexLookup);
    }
    strategies.push(Strategy::ChunkedScan);
    if kind == ProbeKind::Email {
        strategies.push(Strategy::LineScanAll);
    }
    strategies.push(Strategy::FieldScan);
    strategies
}

pub fn bench(args: BenchArgs, out: &Output) -> Result<()> {
    if args.chunk_rows == 0 {
        return Err(usage("--chunk-rows must be at least 1"));
    }
    let dataset = args.corpus.open(out)?;
    let manifest_path = PlantManifest::path_for(&dataset.path);
    let manifest = PlantManifest::read(&manifest_path)
        .with_context(|| format!("reading plant manifest {}", manifest_path.display()))?;
    let (indexes, problems) = load_indexes(&args.corpus, &dataset, out)?;
    for e in &problems {
        out.warn(format_args!("{e}; index lookups will not use it"));
    }
    let kind = match args.probe {
        ProbeArg::Row => ProbeKind::Row,
        ProbeArg::Email => ProbeKind::Email,
        ProbeArg::Phone => ProbeKind::Phone,
        ProbeArg::Integer => ProbeKind::Integer,
    };
    let column = match kind {
        ProbeKind::Email => manifest.email_column,
        _ => manifest.phone_column,
    };
    let strategies = if args.strategies.is_empty() {
        default_strategies(kind, &indexes, column)
    } else {
        args.strategies.clone()
    };
    let plan = make_plan(&dataset, &manifest, &strategies, kind)?
        .with_repetitions(args.repetitions, args.warmup)
        .map_err(|e| usage(e.to_string()))?
        .with_options(ExecOptions {
            chunk_rows: args.chunk_rows,
            early_exit: !args.no_early_exit,
        });
    out.info(format_args!(
        "benchmarking {} strategies x {} probes x {} repetitions",
        plan.strategies.len(),
        plan.probes.len(),
        plan.repetitions
    ));
    let report = run(&plan, &indexes)?;
    let format = if args.json {
        ReportFormat::Json
    } else {
        ReportFormat::Markdown
    };
    let text = render_report(&report, format);
    let mut stdout = io::stdout().lock();
    stdout.write_all(text.as_bytes())?;
    if !text.ends_with('\n') {
        stdout.write_all(b"\n")?;
    }
    Ok(())
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if !v.is_finite() || v < 0.0 {
        return Err(usage(format!("{name} must be a non-negative number")));
    }
    Ok(v)
}

pub fn estimate(args: EstimateArgs, out: &Output) -> Result<()> {
    let Some(corpus) = &args.corpus else {
        let (Some(size), Some(mem), Some(time), Some(target)) = (
            args.sample_size,
            args.sample_mem,
            args.sample_time,
            args.target_size,
        ) else {
            return Err(usage(
                "--sample-size, --sample-mem, --sample-time and --target-size go together",
            ));
        };
        let size = positive("--sample-size", size)?;
        let target = positive("--target-size", target)?;
        let mem_mb = extrapolate(positive("--sample-mem", mem)?, size, target)?;
        let time_s = extrapolate(positive("--sample-time", time)?, size, target)?;
        if args.json {
            let doc = json!({
                "sample": { "size": size, "mem_mb": mem, "time_s": time },
                "target_size": target,
                "est_mem_mb": mem_mb,
                "est_mem_gb": mb_to_gb(mem_mb),
                "est_time_s": time_s,
                "model": "linear",
                "note": LOWER_BOUND_NOTE,
            });
            println!("{}", serde_json::to_string_pretty(&doc)?);
        } else {
            println!(
                "estimated memory: {mem_mb:.2} MB ({:.2} GB)",
                mb_to_gb(mem_mb)
            );
            println!("estimated time: {time_s:.2} s");
            out.info(format_args!("note: {LOWER_BOUND_NOTE}"));
        }
        return Ok(());
    };

    if args.chunk_rows == 0 {
        return Err(usage("--chunk-rows must be at least 1"));
    }
    let size = std::fs::metadata(corpus)
        .with_context(|| format!("reading {}", corpus.display()))?
        .len();
    let sample_bytes = args.sample_bytes.unwrap_or((size / 10).max(1));
    let target = args.target_bytes.unwrap_or(size);
    let dialect = dialect(args.delimiter, args.no_header);
    let scan = SampleScan::absent_email(args.column, args.chunk_rows);
    out.debug(format_args!("sampling {sample_bytes} of {size} bytes"));
    let profile = profile_sample(corpus, &dialect, sample_bytes, &scan)?;
    let est = estimate_profile(&profile, target)?;
    if args.json {
        let doc = json!({
            "sample": profile,
            "estimate": est,
            "note": LOWER_BOUND_NOTE,
        });
        println!("{}", serde_json::to_string_pretty(&doc)?);
    } else {
        println!(
            "sample: {} bytes, peak buffer {:.2} MB, {:.4} s",
            profile.sample_size_bytes,
            bytes_to_mb(profile.sample_mem_bytes as f64),
            profile.sample_time
        );
        let mem_mb = bytes_to_mb(est.est_mem_bytes);
        println!(
            "estimate for {} bytes: memory {mem_mb:.2} MB ({:.2} GB), time {:.2} s",
            est.target_size_bytes,
            mb_to_gb(mem_mb),
            est.est_time
        );
        out.info(format_args!("note: {LOWER_BOUND_NOTE}"));
    }
    Ok(())
}

fn is_index_file(path: &Path) -> Result<bool> {
    let mut magic = [0u8; 4];
    let mut file =
        std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut read = 0;
    while read < magic.len() {
        match file.read(&mut magic[read..])? {
            0 => break,
            n => read += n,
        }
    }
    Ok(read == magic.len() && magic == MAGIC)
}

fn index_files_in(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .with_context(|| format!("listing {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == INDEX_EXTENSION))
        .collect();
    paths.sort();
    Ok(paths)
}

/// The corpus an index directory named `<corpus>.brix.d` belongs to.
fn corpus_of_dir(dir: &Path) -> Option<PathBuf> {
    let name = dir.file_name()?.to_str()?;
    let stem = name.strip_suffix(".brix.d")?;
    Some(dir.with_file_name(stem))
}

fn freshness(header: &IndexHeader, corpus: Option<&Path>) -> Result<&'static str> {
    Ok(match corpus {
        Some(c) if c.is_file() => {
            if fingerprint_dataset(c)? == header.fingerprint {
                "fresh"
            } else {
                "stale"
            }
        }
        _ => "unknown",
    })
}

pub fn inspect(args: InspectArgs, out: &Output) -> Result<()> {
    let mut found: Vec<(PathBuf, Option<PathBuf>)> = Vec::new();
    for path in &args.paths {
        if path.is_dir() {
            let corpus = corpus_of_dir(path);
            found.extend(
                index_files_in(path)?
                    .into_iter()
                    .map(|p| (p, corpus.clone())),
            );
        } else if is_index_file(path)? {
            let corpus = path.parent().and_then(corpus_of_dir);
            found.push((path.clone(), corpus));
        } else {
            let dir = args
                .index_dir
                .clone()
                .unwrap_or_else(|| default_index_dir(path));
            if !dir.is_dir() {
                out.warn(format_args!(
                    "{}: no index directory at {}",
                    path.display(),
                    dir.display()
                ));
                continue;
            }
            found.extend(
                index_files_in(&dir)?
                    .into_iter()
                    .map(|p| (p, Some(path.clone()))),
            );
        }
    }

    let mut entries = Vec::with_capacity(found.len());
    for (path, corpus) in found {
        let header = read_header(&path)?;
        let status = freshness(&header, corpus.as_deref())?;
        entries.push((path, corpus, header, status));
    }

    if args.json {
        let doc: Vec<_> = entries
            .iter()
            .map(|(path, corpus, header, status)| {
                json!({
                    "path": path,
                    "corpus": corpus,
                    "header": header,
                    "status": status,
                })
            })
            .collect();
        println!("{}", serde_json::to_string_pretty(&doc)?);
        return Ok(());
    }
    let mut stdout = io::stdout().lock();
    for (path, corpus, header, status) in &entries {
        writeln!(stdout, "{}", path.display())?;
        match header.key_kind {
            Some(kind) => writeln!(stdout, "  kind: key ({kind}, column {})", header.column)?,
            None => writeln!(stdout, "  kind: row offsets")?,
        }
        writeln!(stdout, "  version: {}", header.version)?;
        writeln!(stdout, "  entries: {}", header.entry_count)?;
        let fp = &header.fingerprint;
        writeln!(
            stdout,
            "  source: {} bytes, mtime {}, head sha256 {}",
            fp.size_bytes,
            fp.modified_time,
            fp.digest_hex()
        )?;
        if let Some(c) = corpus {
            writeln!(stdout, "  corpus: {}", c.display())?;
        }
        writeln!(stdout, "  status: {status}")?;
    }
    Ok(())
}
