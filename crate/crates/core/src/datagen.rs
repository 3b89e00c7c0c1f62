//! Deterministic synthetic breach-corpus generator.
//!
//! Every byte of output is a pure function of [`GenSpec`]: the same spec
//! always produces the same file. Filler values come from a SplitMix64
//! sequence seeded with `spec.seed`, consumed in row-major order.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand_core::{Rng, SeedableRng};
use rand_xoshiro::SplitMix64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{CsvDialect, DatasetDescriptor};

pub const DEFAULT_COLUMNS: usize = 59;
pub const DEFAULT_EMAIL_COLUMN: usize = 5;
pub const DEFAULT_PHONE_COLUMN: usize = 7;

/// Shaped like a planted probe email, in a domain no generated or planted
/// email ever uses.
pub const ABSENT_EMAIL: &str = "probe0000000.q0@absent.invalid";
/// Longer than any generated (10-digit) or planted (11-digit) phone.
pub const ABSENT_PHONE: &str = "99999999999999";

const DOMAINS: [&str; 6] = [
    "gmail.test",
    "yahoo.test",
    "hotmail.test",
    "outlook.test",
    "corp.example",
    "mail.example",
];
const ALNUM: &[u8; 62] = b"0123456789ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz";
const LOWER: &[u8; 26] = b"abcdefghijklmnopqrstuvwxyz";

/// A record whose email and phone are written verbatim at a fixed row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Plant {
    pub row: u64,
    pub email: String,
    pub phone: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenSpec {
    pub rows: u64,
    pub columns: usize,
    pub seed: u64,
    pub email_column: usize,
    pub phone_column: usize,
    /// Strictly increasing by row.
    pub planted: Vec<Plant>,
    /// Inclusive length range of filler tokens.
    pub filler_len: (usize, usize),
}

impl GenSpec {
    pub fn new(rows: u64, seed: u64) -> Self {
        GenSpec {
            rows,
            columns: DEFAULT_COLUMNS,
            seed,
            email_column: DEFAULT_EMAIL_COLUMN,
            phone_column: DEFAULT_PHONE_COLUMN,
            planted: Vec::new(),
            filler_len: (2, 10),
        }
    }

    pub fn with_columns(
        mut self,
        columns: usize,
        email_column: usize,
        phone_column: usize,
    ) -> Self {
        self.columns = columns;
        self.email_column = email_column;
        self.phone_column = phone_column;
        self
    }

    pub fn with_plants(mut self, planted: Vec<Plant>) -> Self {
        self.planted = planted;
        self
    }

    /// Plants one probe record at each quartile row (see [`quartile_rows`]).
    pub fn with_quartile_plants(self) -> Result<Self> {
        let plants = quartile_plants(self.rows)?;
        Ok(self.with_plants(plants))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidSpec(msg));
        if self.columns == 0 {
            return bad("columns must be at least 1".into());
        }
        if self.email_column == self.phone_column {
            return bad("email_column and phone_column must differ".into());
        }
        if self.email_column >= self.columns || self.phone_column >= self.columns {
            return bad(format!(
                "key columns must be below the column count ({})",
                self.columns
            ));
        }
        let (lo, hi) = self.filler_len;
        if lo == 0 || lo > hi {
            return bad(format!("invalid filler length range {lo}..={hi}"));
        }
        let mut prev = 0;
        for p in &self.planted {
            if p.row == 0 || p.row > self.rows {
                return bad(format!("planted row {} outside 1..={}", p.row, self.rows));
            }
            if p.row <= prev {
                return bad("planted rows must be strictly increasing".into());
            }
            prev = p.row;
            for value in [&p.email, &p.phone] {
                if value
                    .bytes()
                    .any(|b| matches!(b, b',' | b'"' | b'\n' | b'\r'))
                {
                    return bad(format!("planted value {value:?} would need quoting"));
                }
            }
        }
        Ok(())
    }
}

/// Rows of the four quartile probes: ⌈N/4⌉, ⌈N/2⌉, ⌈3N/4⌉ and N.
pub fn quartile_rows(row_count: u64) -> Result<[u64; 4]> {
    if row_count < 4 {
        return Err(Error::InvalidArgument(format!(
            "quartile probes need at least 4 rows, got {row_count}"
        )));
    }
    let n = u128::from(row_count);
    let q = |k: u128| (k * n).div_ceil(4) as u64;
    Ok([q(1), q(2), q(3), row_count])
}

/// Probe records for the quartile rows. Their emails use a domain the
/// generator never emits and their phones are 11 digits (generated phones
/// have 10), so each is unique in the corpus.
pub fn quartile_plants(row_count: u64) -> Result<Vec<Plant>> {
    Ok(quartile_rows(row_count)?
        .iter()
        .enumerate()
        .map(|(i, &row)| Plant {
            row,
            email: format!("probe{}.q{}@plant.example", row, i + 1),
            phone: format!("1900000000{}", i + 1),
        })
        .collect())
}

struct Filler {
    rng: SplitMix64,
    len_lo: u64,
    len_span: u64,
}

impl Filler {
    fn token(&mut self, out: &mut Vec<u8>) {
        let mut word = self.rng.next_u64();
        let len = self.len_lo + word % self.len_span;
        word = self.rng.next_u64();
        let mut left = 10;
        for _ in 0..len {
            if left == 0 {
                word = self.rng.next_u64();
                left = 10;
            }
            out.push(ALNUM[(word % 62) as usize]);
            word /= 62;
            left -= 1;
        }
    }

    fn email(&mut self, row: u64, out: &mut Vec<u8>) {
        let mut word = self.rng.next_u64();
        let len = 4 + word % 6;
        word /= 6;
        let domain = DOMAINS[(word % DOMAINS.len() as u64) as usize];
        word = self.rng.next_u64();
        for _ in 0..len {
            out.push(LOWER[(word % 26) as usize]);
            word /= 26;
        }
        write!(out, ".{row}@{domain}").expect("writing to a Vec cannot fail");
    }

    fn phone(&mut self, out: &mut Vec<u8>) {
        let mut word = self.rng.next_u64();
        out.push(b'2' + (word % 8) as u8);
        word /= 8;
        for _ in 0..9 {
            out.push(b'0' + (word % 10) as u8);
            word /= 10;
        }
    }
}

/// Writes the corpus described by `spec` to `out_path`: one header line and
/// `spec.rows` data rows, LF-terminated, never quoted.
pub fn generate_dataset(spec: &GenSpec, out_path: &Path) -> Result<DatasetDescriptor> {
    spec.validate()?;
    let (lo, hi) = spec.filler_len;
    let mut filler = Filler {
        rng: SplitMix64::seed_from_u64(spec.seed),
        len_lo: lo as u64,
        len_span: (hi - lo + 1) as u64,
    };
    let mut out = BufWriter::with_capacity(1 << 20, File::create(out_path)?);

    let header: Vec<String> = (0..spec.columns)
        .map(|c| match c {
            c if c == spec.email_column => "email".to_owned(),
            c if c == spec.phone_column => "phone".to_owned(),
            c => format!("f{c}"),
        })
        .collect();
    out.write_all(header.join(",").as_bytes())?;
    out.write_all(b"\n")?;

    let mut plants = spec.planted.iter().peekable();
    let mut line = Vec::with_capacity(1024);
    for row in 1..=spec.rows {
        line.clear();
        let plant = plants.next_if(|p| p.row == row);
        for col in 0..spec.columns {
            if col > 0 {
                line.push(b',');
            }
            // Random draws happen for planted rows too so that plants never
            // shift the filler of later rows.
            if col == spec.email_column {
                let start = line.len();
                filler.email(row, &mut line);
                if let Some(p) = plant {
                    line.truncate(start);
                    line.extend_from_slice(p.email.as_bytes());
                }
            } else if col == spec.phone_column {
                let start = line.len();
                filler.phone(&mut line);
                if let Some(p) = plant {
                    line.truncate(start);
                    line.extend_from_slice(p.phone.as_bytes());
                }
            } else {
                filler.token(&mut line);
            }
        }
        line.push(b'\n');
        out.write_all(&line)?;
    }
    out.into_inner().map_err(|e| e.into_error())?.sync_all()?;

    DatasetDescriptor::with_row_count(out_path, CsvDialect::default(), spec.rows)
}

/// Sidecar describing a generated corpus and where its probes were planted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlantManifest {
    pub rows: u64,
    pub columns: usize,
    pub seed: u64,
    pub email_column: usize,
    pub phone_column: usize,
    pub planted: Vec<Plant>,
}

impl From<&GenSpec> for PlantManifest {
    fn from(spec: &GenSpec) -> Self {
        PlantManifest {
            rows: spec.rows,
            columns: spec.columns,
            seed: spec.seed,
            email_column: spec.email_column,
            phone_column: spec.phone_column,
            planted: spec.planted.clone(),
        }
    }
}

impl PlantManifest {
    /// `<corpus>.plants.json`
    pub fn path_for(corpus: &Path) -> PathBuf {
        let mut name = corpus.as_os_str().to_owned();
        name.push(".plants.json");
        PathBuf::from(name)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)
            .map_err(|e| Error::InvalidArgument(e.to_string()))?;
        std::fs::write(path, text + "\n")?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text)
            .map_err(|e| Error::InvalidArgument(format!("{}: {e}", path.display())))
    }
}
