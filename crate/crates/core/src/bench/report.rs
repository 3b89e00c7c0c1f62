use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{probe_key, BenchPlan, ProbeKind};
use crate::scan_search::Strategy;

/// One (strategy, probe) measurement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub strategy: Strategy,
    pub probe_label: String,
    /// Median of `samples_s`.
    pub elapsed_s: f64,
    pub matches: u64,
    pub bytes_scanned: u64,
    pub samples_s: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyAverage {
    pub strategy: Strategy,
    pub avg_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub os: String,
    pub arch: String,
    pub cpus: usize,
    pub engine_version: String,
    pub corpus_path: String,
    pub corpus_bytes: u64,
    pub corpus_rows: u64,
    pub corpus_columns: usize,
    pub probe_keys: Vec<String>,
    pub repetitions: usize,
    pub warmup: usize,
    pub chunk_rows: usize,
    pub early_exit: bool,
}

impl Environment {
    pub fn capture(plan: &BenchPlan) -> Self {
        Environment {
            os: std::env::consts::OS.to_owned(),
            arch: std::env::consts::ARCH.to_owned(),
            cpus: std::thread::available_parallelism().map_or(1, |n| n.get()),
            engine_version: env!("CARGO_PKG_VERSION").to_owned(),
            corpus_path: plan.dataset.path.display().to_string(),
            corpus_bytes: plan.dataset.size_bytes,
            corpus_rows: plan.dataset.row_count,
            corpus_columns: plan.dataset.column_count,
            probe_keys: plan
                .probes
                .iter()
                .map(|p| format!("{}={}", p.label, probe_key(&p.query)))
                .collect(),
            repetitions: plan.repetitions,
            warmup: plan.warmup,
            chunk_rows: plan.options.chunk_rows,
            early_exit: plan.options.early_exit,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub probe_kind: ProbeKind,
    pub strategies: Vec<Strategy>,
    pub probes: Vec<String>,
    pub cells: Vec<Cell>,
    pub per_strategy_avg: Vec<StrategyAverage>,
    pub environment: Environment,
}

impl BenchReport {
    /// Assembles a report, deriving each strategy's average from its cells.
    pub fn new(
        probe_kind: ProbeKind,
        strategies: Vec<Strategy>,
        probes: Vec<String>,
        cells: Vec<Cell>,
        environment: Environment,
    ) -> Self {
        let per_strategy_avg = strategies
            .iter()
            .map(|&strategy| {
                let times: Vec<f64> = cells
                    .iter()
                    .filter(|c| c.strategy == strategy)
                    .map(|c| c.elapsed_s)
                    .collect();
                let avg_s = if times.is_empty() {
                    0.0
                } else {
                    times.iter().sum::<f64>() / times.len() as f64
                };
                StrategyAverage { strategy, avg_s }
            })
            .collect();
        BenchReport {
            probe_kind,
            strategies,
            probes,
            cells,
            per_strategy_avg,
            environment,
        }
    }

    pub fn cell(&self, strategy: Strategy, probe_label: &str) -> Option<&Cell> {
        self.cells
            .iter()
            .find(|c| c.strategy == strategy && c.probe_label == probe_label)
    }

    pub fn avg(&self, strategy: Strategy) -> Option<f64> {
        self.per_strategy_avg
            .iter()
            .find(|a| a.strategy == strategy)
            .map(|a| a.avg_s)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Markdown,
}

pub fn render_report(report: &BenchReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => report.to_json() + "\n",
        ReportFormat::Markdown => markdown(report),
    }
}

fn secs(s: f64) -> String {
    format!("{s:.4}")
}

fn markdown(report: &BenchReport) -> String {
    let env = &report.environment;
    let kind = report.probe_kind;
    let mut out = String::new();
    let _ = writeln!(out, "# Lookup benchmark ({kind} probes)\n");
    let _ = writeln!(out, "| Setting | Value |");
    let _ = writeln!(out, "|---|---|");
    let rows: [(&str, String); 12] = [
        ("os", format!("{} ({})", env.os, env.arch)),
        ("cpus", env.cpus.to_string()),
        ("engine", env.engine_version.clone()),
        ("corpus", env.corpus_path.clone()),
        ("corpus bytes", env.corpus_bytes.to_string()),
        ("corpus rows", env.corpus_rows.to_string()),
        ("corpus columns", env.corpus_columns.to_string()),
        ("probes", env.probe_keys.join(", ")),
        ("repetitions", env.repetitions.to_string()),
        ("warmup", env.warmup.to_string()),
        ("chunk rows", env.chunk_rows.to_string()),
        ("early exit", env.early_exit.to_string()),
    ];
    for (name, value) in rows {
        let _ = writeln!(out, "| {name} | {value} |");
    }

    let _ = writeln!(
        out,
        "\n## Time taken to find record using {kind} (seconds)\n"
    );
    let mut header = String::from("| Probe |");
    let mut rule = String::from("|---|");
    for s in &report.strategies {
        let _ = write!(header, " {s} |");
        rule.push_str("---:|");
    }
    let _ = writeln!(out, "{header}\n{rule}");
    for label in &report.probes {
        let mut line = format!("| {label} |");
        for &s in &report.strategies {
            let cell = report.cell(s, label);
            let _ = write!(
                line,
                " {} |",
                cell.map_or_else(
                    || "-".to_owned(),
                    |c| format!("{} ({})", secs(c.elapsed_s), c.matches)
                )
            );
        }
        let _ = writeln!(out, "{line}");
    }
    let mut line = String::from("| Average Time |");
    for avg in &report.per_strategy_avg {
        let _ = write!(line, " {} |", secs(avg.avg_s));
    }
    let _ = writeln!(out, "{line}");

    let _ = writeln!(
        out,
        "\n## Overall benchmark for finding records using {kind}\n"
    );
    let _ = writeln!(out, "| Strategy | Average Time (s) |");
    let _ = writeln!(out, "|---|---:|");
    for avg in &report.per_strategy_avg {
        let _ = writeln!(out, "| {} | {} |", avg.strategy, secs(avg.avg_s));
    }
    out
}
