#![allow(dead_code)]

use std::path::{Path, PathBuf};

use brix::datagen::{generate_dataset, GenSpec, Plant};
use brix::{CsvDialect, DatasetDescriptor};

pub fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

pub fn generated(dir: &Path, rows: u64, seed: u64, plants: Vec<Plant>) -> DatasetDescriptor {
    let spec = GenSpec::new(rows, seed).with_plants(plants);
    generate_dataset(&spec, &dir.join(format!("corpus-{rows}-{seed}.csv"))).unwrap()
}

pub fn plant(row: u64, email: &str, phone: &str) -> Plant {
    Plant {
        row,
        email: email.to_owned(),
        phone: phone.to_owned(),
    }
}

/// Data rows of an unquoted LF file as (row number, byte offset, fields),
/// read with nothing but `str::split`.
pub fn naive_rows(path: &Path) -> Vec<(u64, u64, Vec<String>)> {
    let text = std::fs::read_to_string(path).unwrap();
    let mut out = Vec::new();
    let mut offset = 0u64;
    for (i, line) in text.split_inclusive('\n').enumerate() {
        if i > 0 {
            let fields = line
                .trim_end_matches('\n')
                .split(',')
                .map(str::to_owned)
                .collect();
            out.push((i as u64, offset, fields));
        }
        offset += line.len() as u64;
    }
    out
}

/// Rows whose `column` equals `value` once both sides are normalized with
/// `normalize`.
pub fn naive_find(
    path: &Path,
    column: usize,
    value: &str,
    normalize: impl Fn(&str) -> String,
) -> Vec<u64> {
    let want = normalize(value);
    naive_rows(path)
        .into_iter()
        .filter(|(_, _, f)| {
            f.get(column)
                .is_some_and(|v| !want.is_empty() && normalize(v) == want)
        })
        .map(|(row, _, _)| row)
        .collect()
}

pub fn no_header() -> CsvDialect {
    CsvDialect::default().with_header(false)
}
