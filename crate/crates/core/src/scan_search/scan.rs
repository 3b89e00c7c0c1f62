use std::path::Path;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::boyer_moore::Matcher;
use crate::csv_engine::{parse_into, read_chunks, FieldBuf, LineReader};
use crate::error::{Error, Result};
use crate::model::{parse_u64, CsvDialect, KeyKind, NormalizedKey, RawRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    LineScanAll,
    LineScanFirst,
    FieldScan,
    ChunkedScan,
    IndexLookup,
}

impl Strategy {
    pub const ALL: [Strategy; 5] = [
        Strategy::LineScanAll,
        Strategy::LineScanFirst,
        Strategy::FieldScan,
        Strategy::ChunkedScan,
        Strategy::IndexLookup,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::LineScanAll => "line_scan_all",
            Strategy::LineScanFirst => "line_scan_first",
            Strategy::FieldScan => "field_scan",
            Strategy::ChunkedScan => "chunked_scan",
            Strategy::IndexLookup => "index_lookup",
        }
    }
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.replace('-', "_");
        Strategy::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown strategy `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LineScanMode {
    First,
    All,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchResult {
    pub record: RawRecord,
    pub matched_column: Option<usize>,
    pub strategy: Strategy,
}

/// Matches plus the cost of finding them. Cost is a property of the whole
/// scan (an empty result still scanned bytes), so it lives here rather than
/// on each match.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScanOutcome {
    pub matches: Vec<MatchResult>,
    pub elapsed: Duration,
    pub bytes_scanned: u64,
    pub rows_scanned: u64,
    pub malformed_rows: u64,
    /// Rows whose target field did not parse under the integer kind.
    pub unparsable_fields: u64,
}

impl ScanOutcome {
    pub fn row_numbers(&self) -> Vec<u64> {
        self.matches.iter().map(|m| m.record.row_number).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum FieldCheck {
    Match,
    Miss,
    Unparsable,
}

/// Equality test of a raw field against a normalized key.
#[derive(Debug, Clone)]
pub(crate) enum KeyTest {
    Text(NormalizedKey),
    Integer(u64),
}

impl KeyTest {
    pub(crate) fn new(key: &NormalizedKey) -> Result<Self> {
        match key.kind {
            KeyKind::Integer => parse_u64(key.value.as_bytes())
                .map(KeyTest::Integer)
                .ok_or_else(|| {
                    Error::InvalidArgument(format!("`{}` is not an integer key", key.value))
                }),
            _ => Ok(KeyTest::Text(key.clone())),
        }
    }

    /// Row-engine comparison: normalizes the field exactly as the key was
    /// normalized, then compares. Text kinds build a normalized string per
    /// row; integers are parsed in place.
    pub(crate) fn check(&self, field: &[u8]) -> FieldCheck {
        match self {
            KeyTest::Integer(want) => match parse_u64(trim_ws(field)) {
                Some(n) if n == *want => FieldCheck::Match,
                Some(_) => FieldCheck::Miss,
                None => FieldCheck::Unparsable,
            },
            KeyTest::Text(key) => match key.kind.normalize_bytes(field) {
                Some(norm) if norm.value == key.value => FieldCheck::Match,
                _ => FieldCheck::Miss,
            },
        }
    }

    /// Same answer as [`KeyTest::check`] without allocating for ASCII
    /// fields; anything else defers to `check`.
    pub(crate) fn check_columnar(&self, field: &[u8]) -> FieldCheck {
        let KeyTest::Text(key) = self else {
            return self.check(field);
        };
        if !field.is_ascii() {
            return self.check(field);
        }
        let want = key.value.as_bytes();
        let hit = match key.kind {
            KeyKind::Email => {
                let field = trim_ws(field);
                field.len() == want.len()
                    && field
                        .iter()
                        .zip(want)
                        .all(|(f, w)| f.to_ascii_lowercase() == *w)
            }
            KeyKind::Phone => field.iter().filter(|b| b.is_ascii_digit()).eq(want.iter()),
            KeyKind::Verbatim => field == want,
            KeyKind::Integer => unreachable!("integer keys use KeyTest::Integer"),
        };
        if hit {
            FieldCheck::Match
        } else {
            FieldCheck::Miss
        }
    }
}

/// ASCII part of `char::is_whitespace`, so byte-level trimming agrees with
/// `str::trim` on ASCII input.
fn is_ws(b: u8) -> bool {
    matches!(b, b' ' | b'\t'..=b'\r')
}

fn trim_ws(mut bytes: &[u8]) -> &[u8] {
    while let [first, rest @ ..] = bytes {
        if !is_ws(*first) {
            break;
        }
        bytes = rest;
    }
    while let [rest @ .., last] = bytes {
        if !is_ws(*last) {
            break;
        }
        bytes = rest;
    }
    bytes
}

/// grep analogue: reports every data line containing `pattern` as a raw
/// substring. Case-sensitive and field-blind. `All` always reads the whole
/// file; `First` stops at the first hit.
pub fn line_scan(
    path: &Path,
    dialect: &CsvDialect,
    pattern: &[u8],
    mode: LineScanMode,
) -> Result<ScanOutcome> {
    line_scan_impl(path, dialect, pattern, mode, None)
}

/// [`line_scan`] whose hits must also carry `key` in `column`: the raw
/// substring test prefilters, the field comparison decides. Rows whose field
/// differs from the key only by case or formatting are not found, since
/// they do not contain the normalized key bytes.
pub fn line_scan_exact(
    path: &Path,
    dialect: &CsvDialect,
    column: usize,
    key: &NormalizedKey,
    mode: LineScanMode,
) -> Result<ScanOutcome> {
    if key.is_empty() {
        return Ok(ScanOutcome::default());
    }
    let test = KeyTest::new(key)?;
    line_scan_impl(
        path,
        dialect,
        key.value.as_bytes(),
        mode,
        Some((column, &test)),
    )
}

fn line_scan_impl(
    path: &Path,
    dialect: &CsvDialect,
    pattern: &[u8],
    mode: LineScanMode,
    exact: Option<(usize, &KeyTest)>,
) -> Result<ScanOutcome> {
    let started = Instant::now();
    let matcher = Matcher::new(pattern)?;
    let strategy = match mode {
        LineScanMode::All => Strategy::LineScanAll,
        LineScanMode::First => Strategy::LineScanFirst,
    };
    let mut reader = LineReader::open(path, dialect)?;
    let mut out = ScanOutcome::default();
    let mut fields = FieldBuf::new();
    while let Some(line) = reader.next_line()? {
        if line.row_number == 0 {
            continue;
        }
        out.rows_scanned += 1;
        if !matcher.is_match(line.bytes) {
            continue;
        }
        if parse_into(line.bytes, dialect, &mut fields).is_err() {
            out.malformed_rows += 1;
            continue;
        }
        if let Some((column, test)) = exact {
            let hit = fields.get(column).map(|f| test.check(f));
            if hit != Some(FieldCheck::Match) {
                continue;
            }
        }
        out.matches.push(MatchResult {
            record: RawRecord {
                row_number: line.row_number,
                byte_offset: line.byte_offset,
                fields: fields.to_strings(),
            },
            matched_column: exact.map(|(c, _)| c),
            strategy,
        });
        if mode == LineScanMode::First {
            break;
        }
    }
    out.bytes_scanned = reader.bytes_consumed();
    out.elapsed = started.elapsed();
    Ok(out)
}

/// Unindexed table-scan analogue: fully parses each row, normalizes the
/// target field and compares it with `key`. With `early_exit` the scan stops
/// at the first match, so its cost tracks the match position.
pub fn field_scan(
    path: &Path,
    dialect: &CsvDialect,
    column: usize,
    key: &NormalizedKey,
    early_exit: bool,
) -> Result<ScanOutcome> {
    let started = Instant::now();
    let mut out = ScanOutcome::default();
    if key.is_empty() {
        out.elapsed = started.elapsed();
        return Ok(out);
    }
    let test = KeyTest::new(key)?;
    let mut reader = LineReader::open(path, dialect)?;
    let mut fields = FieldBuf::new();
    while let Some(line) = reader.next_line()? {
        if line.row_number == 0 {
            continue;
        }
        out.rows_scanned += 1;
        if parse_into(line.bytes, dialect, &mut fields).is_err() {
            out.malformed_rows += 1;
            continue;
        }
        let Some(field) = fields.get(column) else {
            continue;
        };
        match test.check(field) {
            FieldCheck::Miss => continue,
            FieldCheck::Unparsable => {
                out.unparsable_fields += 1;
                continue;
            }
            FieldCheck::Match => {}
        }
        out.matches.push(MatchResult {
            record: RawRecord {
                row_number: line.row_number,
                byte_offset: line.byte_offset,
                fields: fields.to_strings(),
            },
            matched_column: Some(column),
            strategy: Strategy::FieldScan,
        });
        if early_exit {
            break;
        }
    }
    out.bytes_scanned = reader.bytes_consumed();
    out.elapsed = started.elapsed();
    Ok(out)
}

/// Dataframe analogue: streams `chunk_rows`-row batches, projects only the
/// target column and compares it; whole records are decoded for matches
/// only. Returns the same rows as `field_scan` without early exit.
pub fn chunked_scan(
    path: &Path,
    dialect: &CsvDialect,
    column: usize,
    key: &NormalizedKey,
    chunk_rows: usize,
) -> Result<ScanOutcome> {
    chunked_scan_with(path, dialect, column, key, chunk_rows, None).map(|(o, _)| o)
}

/// Extra figures from a chunked scan, for memory instrumentation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ChunkStats {
    pub chunks: u64,
    pub peak_buffered_records: u64,
    pub peak_buffered_bytes: u64,
}

/// [`chunked_scan`] with an optional byte limit (the scan stops after the
/// line crossing it) and buffer statistics.
pub fn chunked_scan_with(
    path: &Path,
    dialect: &CsvDialect,
    column: usize,
    key: &NormalizedKey,
    chunk_rows: usize,
    byte_limit: Option<u64>,
) -> Result<(ScanOutcome, ChunkStats)> {
    let started = Instant::now();
    let mut out = ScanOutcome::default();
    if key.is_empty() {
        out.elapsed = started.elapsed();
        return Ok((out, ChunkStats::default()));
    }
    let test = KeyTest::new(key)?;
    let mut chunks = read_chunks(path, dialect, chunk_rows)?.with_projection(column);
    if let Some(limit) = byte_limit {
        chunks = chunks.with_byte_limit(limit);
    }
    let gauge = chunks.gauge();
    let mut scratch = FieldBuf::new();
    for chunk in chunks.by_ref() {
        let chunk = chunk?;
        out.rows_scanned += chunk.len() as u64;
        for i in 0..chunk.len() {
            let field = match chunk.project(i, column, &mut scratch) {
                Ok(Some(f)) => f,
                Ok(None) => continue,
                Err(_) => {
                    out.malformed_rows += 1;
                    continue;
                }
            };
            match test.check_columnar(&field) {
                FieldCheck::Miss => continue,
                FieldCheck::Unparsable => {
                    out.unparsable_fields += 1;
                    continue;
                }
                FieldCheck::Match => {}
            }
            out.matches.push(MatchResult {
                record: chunk.record(i)?,
                matched_column: Some(column),
                strategy: Strategy::ChunkedScan,
            });
        }
    }
    out.bytes_scanned = chunks.bytes_consumed();
    out.elapsed = started.elapsed();
    let stats = ChunkStats {
        chunks: chunks.chunks_read(),
        peak_buffered_records: gauge.peak_records(),
        peak_buffered_bytes: gauge.peak_bytes(),
    };
    Ok((out, stats))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trim_matches_str_trim_on_ascii() {
        for b in 0u8..128 {
            let s = [b, b'x', b];
            let text = std::str::from_utf8(&s).unwrap();
            assert_eq!(trim_ws(&s), text.trim().as_bytes(), "byte {b}");
        }
    }

    #[test]
    fn columnar_check_agrees_with_row_check() {
        let cases: &[(&NormalizedKey, &[u8])] = &[
            (&crate::model::normalize_email("a@b.c"), b" A@B.C\t"),
            (&crate::model::normalize_email("a@b.c"), b"a@b.cd"),
            (&crate::model::normalize_phone("123"), b"(1) 2-3"),
            (&crate::model::normalize_phone("123"), b"1234"),
        ];
        for (key, field) in cases {
            let t = KeyTest::new(key).unwrap();
            assert_eq!(
                t.check(field),
                t.check_columnar(field),
                "{key} vs {field:?}"
            );
        }
    }

    #[test]
    fn integer_test_counts_unparsable() {
        let key = crate::model::normalize_integer("42").unwrap();
        let t = KeyTest::new(&key).unwrap();
        assert_eq!(t.check(b" 042 "), FieldCheck::Match);
        assert_eq!(t.check(b"43"), FieldCheck::Miss);
        assert_eq!(t.check(b"x42"), FieldCheck::Unparsable);
    }

    #[test]
    fn strategy_names_parse() {
        for s in Strategy::ALL {
            assert_eq!(s.name().parse::<Strategy>().unwrap(), s);
        }
        assert_eq!(
            "field-scan".parse::<Strategy>().unwrap(),
            Strategy::FieldScan
        );
    }
}
