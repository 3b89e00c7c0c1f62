//! Query front door: picks a strategy for a query and runs it, timing only
//! the execution (indexes are opened beforehand and not charged).

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::csv_engine::parse_into;
use crate::csv_engine::FieldBuf;
use crate::csv_engine::{read_chunks, LineReader, RecordReader};
use crate::error::{Error, Result};
use crate::index_store::IndexSet;
use crate::model::{DatasetDescriptor, NormalizedKey, RawRecord};
use crate::scan_search::{
    chunked_scan, field_scan, line_scan_exact, LineScanMode, MatchResult, ScanOutcome, Strategy,
};

pub const DEFAULT_CHUNK_ROWS: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    ByRow(u64),
    ByKey { column: usize, key: NormalizedKey },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyChoice {
    #[default]
    Auto,
    LineScan,
    FieldScan,
    ChunkedScan,
    Index,
}

impl std::str::FromStr for StrategyChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "auto" => StrategyChoice::Auto,
            "line-scan" | "line_scan" => StrategyChoice::LineScan,
            "field-scan" | "field_scan" => StrategyChoice::FieldScan,
            "chunked-scan" | "chunked_scan" => StrategyChoice::ChunkedScan,
            "index" => StrategyChoice::Index,
            other => {
                return Err(Error::InvalidArgument(format!(
                    "unknown strategy `{other}`"
                )))
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Query {
    pub target: Target,
    pub strategy_override: StrategyChoice,
}

impl Query {
    pub fn by_row(row_number: u64) -> Result<Self> {
        if row_number == 0 {
            return Err(Error::InvalidArgument("row numbers start at 1".into()));
        }
        Ok(Query {
            target: Target::ByRow(row_number),
            strategy_override: StrategyChoice::Auto,
        })
    }

    pub fn by_key(column: usize, key: NormalizedKey) -> Self {
        Query {
            target: Target::ByKey { column, key },
            strategy_override: StrategyChoice::Auto,
        }
    }

    pub fn with_strategy(mut self, choice: StrategyChoice) -> Self {
        self.strategy_override = choice;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueryResult {
    /// Ordered by row number.
    pub matches: Vec<MatchResult>,
    pub strategy: Strategy,
    pub elapsed: Duration,
    pub bytes_scanned: u64,
}

impl QueryResult {
    pub fn row_numbers(&self) -> Vec<u64> {
        self.matches.iter().map(|m| m.record.row_number).collect()
    }

    pub fn records(&self) -> impl Iterator<Item = &RawRecord> {
        self.matches.iter().map(|m| &m.record)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExecOptions {
    pub chunk_rows: usize,
    /// Stop key scans at the first match. Off for [`execute`], which must
    /// return every match; the benchmark harness turns it on to expose
    /// position-dependent cost.
    pub early_exit: bool,
}

impl Default for ExecOptions {
    fn default() -> Self {
        ExecOptions {
            chunk_rows: DEFAULT_CHUNK_ROWS,
            early_exit: false,
        }
    }
}

fn unavailable(msg: &str) -> Error {
    Error::StrategyUnavailable(msg.to_owned())
}

/// Chooses the strategy for `query` given the indexes at hand.
///
/// Index lookups by key need both the matching key index and the row-offset
/// index (the latter turns matched offsets back into row numbers).
pub fn plan(query: &Query, indexes: &IndexSet) -> Result<Strategy> {
    match &query.target {
        Target::ByKey { column, key } => {
            let indexed = indexes.rows.is_some() && indexes.key_index(*column, key.kind).is_some();
            match query.strategy_override {
                StrategyChoice::Auto if indexed => Ok(Strategy::IndexLookup),
                StrategyChoice::Auto => Ok(Strategy::FieldScan),
                StrategyChoice::LineScan => Ok(Strategy::LineScanAll),
                StrategyChoice::FieldScan => Ok(Strategy::FieldScan),
                StrategyChoice::ChunkedScan => Ok(Strategy::ChunkedScan),
                StrategyChoice::Index if indexed => Ok(Strategy::IndexLookup),
                StrategyChoice::Index => Err(unavailable(&format!(
                    "index lookup needs a {} key index on column {column} and a row-offset index",
                    key.kind
                ))),
            }
        }
        Target::ByRow(_) => match query.strategy_override {
            StrategyChoice::Auto if indexes.rows.is_some() => Ok(Strategy::IndexLookup),
            StrategyChoice::Auto | StrategyChoice::FieldScan => Ok(Strategy::FieldScan),
            StrategyChoice::ChunkedScan => Ok(Strategy::ChunkedScan),
            StrategyChoice::Index if indexes.rows.is_some() => Ok(Strategy::IndexLookup),
            StrategyChoice::Index => Err(unavailable("positional lookup needs a row-offset index")),
            StrategyChoice::LineScan => Err(unavailable(
                "a substring scan cannot address rows by number",
            )),
        },
    }
}

/// Plans and runs `query`, returning every match.
pub fn execute(
    query: &Query,
    dataset: &DatasetDescriptor,
    indexes: &IndexSet,
) -> Result<QueryResult> {
    let strategy = plan(query, indexes)?;
    run_strategy(
        strategy,
        &query.target,
        dataset,
        indexes,
        &ExecOptions::default(),
    )
}

/// Runs one specific strategy, bypassing planning.
pub fn run_strategy(
    strategy: Strategy,
    target: &Target,
    dataset: &DatasetDescriptor,
    indexes: &IndexSet,
    options: &ExecOptions,
) -> Result<QueryResult> {
    let started = Instant::now();
    let (mut matches, bytes_scanned) = match target {
        Target::ByKey { column, key } => by_key(strategy, *column, key, dataset, indexes, options)?,
        Target::ByRow(row) => by_row(strategy, *row, dataset, indexes, options)?,
    };
    let elapsed = started.elapsed();
    matches.sort_by_key(|m| m.record.row_number);
    Ok(QueryResult {
        matches,
        strategy,
        elapsed,
        bytes_scanned,
    })
}

fn from_scan(outcome: ScanOutcome) -> (Vec<MatchResult>, u64) {
    (outcome.matches, outcome.bytes_scanned)
}

fn by_key(
    strategy: Strategy,
    column: usize,
    key: &NormalizedKey,
    dataset: &DatasetDescriptor,
    indexes: &IndexSet,
    options: &ExecOptions,
) -> Result<(Vec<MatchResult>, u64)> {
    let (path, dialect) = (&dataset.path, &dataset.dialect);
    match strategy {
        Strategy::LineScanAll => Ok(from_scan(line_scan_exact(
            path,
            dialect,
            column,
            key,
            LineScanMode::All,
        )?)),
        Strategy::LineScanFirst => Ok(from_scan(line_scan_exact(
            path,
            dialect,
            column,
            key,
            LineScanMode::First,
        )?)),
        Strategy::FieldScan => Ok(from_scan(field_scan(
            path,
            dialect,
            column,
            key,
            options.early_exit,
        )?)),
        Strategy::ChunkedScan => Ok(from_scan(chunked_scan(
            path,
            dialect,
            column,
            key,
            options.chunk_rows,
        )?)),
        Strategy::IndexLookup => {
            let (Some(rows), Some(keys)) = (&indexes.rows, indexes.key_index(column, key.kind))
            else {
                return Err(unavailable("index lookup needs key and row-offset indexes"));
            };
            let records = RecordReader::open(path, dialect)?;
            let index_bytes_before = keys.index_reads() * 16 + rows.index_reads() * 8;
            let mut matches = Vec::new();
            for offset in keys.lookup_key(key, &records)? {
                let mut record = records.record_at(offset)?;
                record.row_number =
                    rows.row_number_of(offset)?
                        .ok_or_else(|| Error::CorruptIndex {
                            path: rows.path().to_path_buf(),
                            reason: format!(
                                "offset {offset} from the key index is not a row start"
                            ),
                        })?;
                matches.push(MatchResult {
                    record,
                    matched_column: Some(column),
                    strategy: Strategy::IndexLookup,
                });
                if options.early_exit {
                    break;
                }
            }
            let index_bytes = keys.index_reads() * 16 + rows.index_reads() * 8 - index_bytes_before;
            Ok((matches, records.bytes_read() + index_bytes))
        }
    }
}

fn by_row(
    strategy: Strategy,
    row: u64,
    dataset: &DatasetDescriptor,
    indexes: &IndexSet,
    options: &ExecOptions,
) -> Result<(Vec<MatchResult>, u64)> {
    let (path, dialect) = (&dataset.path, &dataset.dialect);
    let found = |record: RawRecord| MatchResult {
        record,
        matched_column: None,
        strategy,
    };
    match strategy {
        Strategy::IndexLookup => {
            let rows = indexes
                .rows
                .as_ref()
                .ok_or_else(|| unavailable("positional lookup needs a row-offset index"))?;
            let offset = match rows.lookup_row(row) {
                Ok(o) => o,
                Err(Error::OutOfRange { .. }) => return Ok((Vec::new(), 8)),
                Err(e) => return Err(e),
            };
            let records = RecordReader::open(path, dialect)?;
            let mut record = records.record_at(offset)?;
            record.row_number = row;
            Ok((vec![found(record)], 8 + records.bytes_read()))
        }
        Strategy::FieldScan => {
            let mut reader = LineReader::open(path, dialect)?;
            let mut fields = FieldBuf::new();
            while let Some(line) = reader.next_line()? {
                if line.row_number != row {
                    continue;
                }
                let offset = line.byte_offset;
                parse_into(line.bytes, dialect, &mut fields).map_err(|d| d.at(offset))?;
                let record = RawRecord {
                    row_number: row,
                    byte_offset: offset,
                    fields: fields.to_strings(),
                };
                return Ok((vec![found(record)], reader.bytes_consumed()));
            }
            Ok((Vec::new(), reader.bytes_consumed()))
        }
        Strategy::ChunkedScan => {
            let mut chunks = read_chunks(path, dialect, options.chunk_rows)?;
            for chunk in chunks.by_ref() {
                let chunk = chunk?;
                let first = chunk.first_row_number;
                if row >= first && row < first + chunk.len() as u64 {
                    let record = chunk.record((row - first) as usize)?;
                    return Ok((vec![found(record)], chunks.bytes_consumed()));
                }
            }
            Ok((Vec::new(), chunks.bytes_consumed()))
        }
        Strategy::LineScanAll | Strategy::LineScanFirst => Err(unavailable(
            "a substring scan cannot address rows by number",
        )),
    }
}
