//! Quartile-probe benchmarks: one present key planted at each quarter of
//! the corpus plus one absent key, run against every requested strategy.

mod report;

use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

pub use report::{render_report, BenchReport, Cell, Environment, ReportFormat, StrategyAverage};

use crate::datagen::{quartile_rows, Plant, PlantManifest, ABSENT_EMAIL, ABSENT_PHONE};
use crate::error::{Error, Result};
use crate::index_store::IndexSet;
use crate::model::{DatasetDescriptor, KeyKind};
use crate::planner::{run_strategy, ExecOptions, Query, QueryResult, Target};
use crate::scan_search::Strategy;

pub const INVALID_LABEL: &str = "invalid";

/// What the probes look up.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeKind {
    Row,
    Email,
    Phone,
    /// The phone column compared as integers.
    Integer,
}

impl ProbeKind {
    pub fn name(self) -> &'static str {
        match self {
            ProbeKind::Row => "row",
            ProbeKind::Email => "email",
            ProbeKind::Phone => "phone",
            ProbeKind::Integer => "integer",
        }
    }
}

impl std::fmt::Display for ProbeKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ProbeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "row" => ProbeKind::Row,
            "email" => ProbeKind::Email,
            "phone" => ProbeKind::Phone,
            "integer" => ProbeKind::Integer,
            other => {
                return Err(Error::InvalidArgument(format!(
                    "unknown probe kind `{other}`"
                )))
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Probe {
    pub label: String,
    pub query: Query,
    /// `None` for the absent probe.
    pub expected_row: Option<u64>,
}

#[derive(Debug, Clone)]
pub struct BenchPlan {
    pub dataset: DatasetDescriptor,
    pub probe_kind: ProbeKind,
    pub strategies: Vec<Strategy>,
    pub probes: Vec<Probe>,
    pub repetitions: usize,
    pub warmup: usize,
    pub options: ExecOptions,
}

impl BenchPlan {
    pub fn with_repetitions(mut self, repetitions: usize, warmup: usize) -> Result<Self> {
        if repetitions == 0 {
            return Err(Error::InvalidArgument(
                "at least one repetition is required".into(),
            ));
        }
        self.repetitions = repetitions;
        self.warmup = warmup;
        Ok(self)
    }

    pub fn with_options(mut self, options: ExecOptions) -> Self {
        self.options = options;
        self
    }
}

fn key_for(kind: ProbeKind, column: usize, raw: &str) -> Result<Query> {
    let key_kind = match kind {
        ProbeKind::Email => KeyKind::Email,
        ProbeKind::Phone => KeyKind::Phone,
        ProbeKind::Integer => KeyKind::Integer,
        ProbeKind::Row => unreachable!("row probes have no key"),
    };
    let key = key_kind
        .normalize(raw)
        .ok_or_else(|| Error::InvalidArgument(format!("`{raw}` is not a valid {key_kind} key")))?;
    Ok(Query::by_key(column, key))
}

/// Builds the probe set: Q1..Q4 from the planted rows, then the absent probe.
///
/// Defaults to 3 repetitions after 1 warmup and early-exit scans.
pub fn make_plan(
    dataset: &DatasetDescriptor,
    manifest: &PlantManifest,
    strategies: &[Strategy],
    kind: ProbeKind,
) -> Result<BenchPlan> {
    let quartiles = quartile_rows(dataset.row_count)?;
    let mut probes = Vec::with_capacity(5);
    for (i, row) in quartiles.into_iter().enumerate() {
        let plant: &Plant = manifest
            .planted
            .iter()
            .find(|p| p.row == row)
            .ok_or_else(|| Error::MissingPlants(format!("no plant at quartile row {row}")))?;
        let query = match kind {
            ProbeKind::Row => Query::by_row(row)?,
            ProbeKind::Email => key_for(kind, manifest.email_column, &plant.email)?,
            ProbeKind::Phone | ProbeKind::Integer => {
                key_for(kind, manifest.phone_column, &plant.phone)?
            }
        };
        probes.push(Probe {
            label: format!("q{}", i + 1),
            query,
            expected_row: Some(row),
        });
    }
    let absent = match kind {
        ProbeKind::Row => Query {
            target: Target::ByRow(dataset.row_count + 1),
            strategy_override: Default::default(),
        },
        ProbeKind::Email => key_for(kind, manifest.email_column, ABSENT_EMAIL)?,
        ProbeKind::Phone | ProbeKind::Integer => {
            key_for(kind, manifest.phone_column, ABSENT_PHONE)?
        }
    };
    probes.push(Probe {
        label: INVALID_LABEL.to_owned(),
        query: absent,
        expected_row: None,
    });
    Ok(BenchPlan {
        dataset: dataset.clone(),
        probe_kind: kind,
        strategies: strategies.to_vec(),
        probes,
        repetitions: 3,
        warmup: 1,
        options: ExecOptions {
            early_exit: true,
            ..ExecOptions::default()
        },
    })
}

/// Source of monotonic timestamps; swapped for a scripted clock in tests.
pub trait Clock {
    fn now(&mut self) -> Duration;
}

pub struct MonotonicClock(Instant);

impl MonotonicClock {
    pub fn new() -> Self {
        MonotonicClock(Instant::now())
    }
}

impl Default for MonotonicClock {
    fn default() -> Self {
        Self::new()
    }
}

impl Clock for MonotonicClock {
    fn now(&mut self) -> Duration {
        self.0.elapsed()
    }
}

// Cells must never overlap: concurrent scans would share disk and cache
// bandwidth and distort each other's timings.
static SEQUENTIAL: Mutex<()> = Mutex::new(());

pub fn run(plan: &BenchPlan, indexes: &IndexSet) -> Result<BenchReport> {
    run_with_clock(plan, indexes, &mut MonotonicClock::new())
}

pub fn run_with_clock(
    plan: &BenchPlan,
    indexes: &IndexSet,
    clock: &mut dyn Clock,
) -> Result<BenchReport> {
    if plan.repetitions == 0 {
        return Err(Error::InvalidArgument(
            "at least one repetition is required".into(),
        ));
    }
    let _turn = SEQUENTIAL.lock().unwrap_or_else(|e| e.into_inner());

    let mut cells = Vec::with_capacity(plan.strategies.len() * plan.probes.len());
    for &strategy in &plan.strategies {
        for probe in &plan.probes {
            for _ in 0..plan.warmup {
                let result = run_strategy(
                    strategy,
                    &probe.query.target,
                    &plan.dataset,
                    indexes,
                    &plan.options,
                )?;
                verify(strategy, probe, &result)?;
            }
            let mut samples = Vec::with_capacity(plan.repetitions);
            let mut last = None;
            for _ in 0..plan.repetitions {
                let start = clock.now();
                let result = run_strategy(
                    strategy,
                    &probe.query.target,
                    &plan.dataset,
                    indexes,
                    &plan.options,
                )?;
                let stop = clock.now();
                verify(strategy, probe, &result)?;
                samples.push(stop.saturating_sub(start).as_secs_f64());
                last = Some(result);
            }
            let last = last.expect("repetitions >= 1");
            cells.push(Cell {
                strategy,
                probe_label: probe.label.clone(),
                elapsed_s: median(&samples),
                matches: last.matches.len() as u64,
                bytes_scanned: last.bytes_scanned,
                samples_s: samples,
            });
        }
    }
    Ok(BenchReport::new(
        plan.probe_kind,
        plan.strategies.clone(),
        plan.probes.iter().map(|p| p.label.clone()).collect(),
        cells,
        Environment::capture(plan),
    ))
}

fn verify(strategy: Strategy, probe: &Probe, result: &QueryResult) -> Result<()> {
    let rows = result.row_numbers();
    let expected: Vec<u64> = probe.expected_row.into_iter().collect();
    if rows == expected {
        return Ok(());
    }
    Err(Error::CorrectnessFailure(format!(
        "{strategy} on probe {}: expected rows {expected:?}, got {rows:?}",
        probe.label
    )))
}

/// Middle sample, or the mean of the two middle samples.
pub fn median(samples: &[f64]) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mid = sorted.len() / 2;
    if sorted.len() % 2 == 1 {
        sorted[mid]
    } else {
        (sorted[mid - 1] + sorted[mid]) / 2.0
    }
}

/// `kind:value` for key probes, `row:N` for positional ones.
pub(crate) fn probe_key(query: &Query) -> String {
    match &query.target {
        Target::ByKey { key, .. } => key.to_string(),
        Target::ByRow(row) => format!("row:{row}"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_of_odd_and_even() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 3.0, 2.0]), 2.5);
        assert_eq!(median(&[7.5]), 7.5);
    }

    #[test]
    fn probe_kind_round_trip() {
        for kind in [
            ProbeKind::Row,
            ProbeKind::Email,
            ProbeKind::Phone,
            ProbeKind::Integer,
        ] {
            assert_eq!(kind.name().parse::<ProbeKind>().unwrap(), kind);
        }
    }
}
