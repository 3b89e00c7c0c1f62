//! Budgeted sort of `(hash, offset)` pairs. Entries accumulate in memory
//! up to the budget, then spill as sorted runs to anonymous temp files; runs
//! are combined by repeated two-way merges.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

pub type Entry = (u64, u64);

const ENTRY_BYTES: usize = 16;
const IO_BUFFER: usize = 1 << 16;

pub const DEFAULT_MEMORY_BUDGET: usize = 512 * 1024 * 1024;

struct Run {
    file: File,
    len: u64,
}

pub struct ExternalSorter {
    buf: Vec<Entry>,
    capacity: usize,
    spill_dir: PathBuf,
    runs: Vec<Run>,
    total: u64,
}

impl ExternalSorter {
    pub fn new(memory_budget: usize, spill_dir: &Path) -> Self {
        let capacity = (memory_budget / ENTRY_BYTES).max(2);
        ExternalSorter {
            buf: Vec::with_capacity(capacity.min(1 << 20)),
            capacity,
            spill_dir: spill_dir.to_path_buf(),
            runs: Vec::new(),
            total: 0,
        }
    }

    pub fn len(&self) -> u64 {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    pub fn runs_spilled(&self) -> usize {
        self.runs.len()
    }

    pub fn push(&mut self, entry: Entry) -> io::Result<()> {
        self.buf.push(entry);
        self.total += 1;
        if self.buf.len() >= self.capacity {
            self.spill()?;
        }
        Ok(())
    }

    fn spill(&mut self) -> io::Result<()> {
        self.buf.sort_unstable();
        let mut w = BufWriter::with_capacity(IO_BUFFER, tempfile::tempfile_in(&self.spill_dir)?);
        for e in &self.buf {
            write_entry(&mut w, *e)?;
        }
        let len = self.buf.len() as u64;
        self.buf.clear();
        self.runs.push(Run {
            file: w.into_inner().map_err(|e| e.into_error())?,
            len,
        });
        Ok(())
    }

    /// Writes every entry in ascending order to `out`.
    pub fn finish<W: Write>(mut self, out: &mut W) -> io::Result<u64> {
        if self.runs.is_empty() {
            self.buf.sort_unstable();
            for e in &self.buf {
                write_entry(out, *e)?;
            }
            return Ok(self.total);
        }
        if !self.buf.is_empty() {
            self.spill()?;
        }
        let mut runs = std::mem::take(&mut self.runs);
        while runs.len() > 2 {
            let mut next = Vec::with_capacity(runs.len().div_ceil(2));
            let mut it = runs.into_iter();
            while let Some(a) = it.next() {
                match it.next() {
                    Some(b) => {
                        let file = tempfile::tempfile_in(&self.spill_dir)?;
                        let mut w = BufWriter::with_capacity(IO_BUFFER, file);
                        let len = merge_two(a, b, &mut w)?;
                        next.push(Run {
                            file: w.into_inner().map_err(|e| e.into_error())?,
                            len,
                        });
                    }
                    None => next.push(a),
                }
            }
            runs = next;
        }
        let mut it = runs.into_iter();
        let a = it.next().expect("at least one run");
        match it.next() {
            Some(b) => merge_two(a, b, out)?,
            None => copy_run(a, out)?,
        };
        Ok(self.total)
    }
}

fn write_entry<W: Write>(w: &mut W, (hash, offset): Entry) -> io::Result<()> {
    let mut bytes = [0u8; ENTRY_BYTES];
    bytes[..8].copy_from_slice(&hash.to_le_bytes());
    bytes[8..].copy_from_slice(&offset.to_le_bytes());
    w.write_all(&bytes)
}

struct RunReader {
    inner: BufReader<File>,
    left: u64,
}

impl RunReader {
    fn new(mut run: Run) -> io::Result<Self> {
        run.file.seek(SeekFrom::Start(0))?;
        Ok(RunReader {
            inner: BufReader::with_capacity(IO_BUFFER, run.file),
            left: run.len,
        })
    }

    fn next(&mut self) -> io::Result<Option<Entry>> {
        if self.left == 0 {
            return Ok(None);
        }
        let mut bytes = [0u8; ENTRY_BYTES];
        self.inner.read_exact(&mut bytes)?;
        self.left -= 1;
        Ok(Some((
            u64::from_le_bytes(bytes[..8].try_into().unwrap()),
            u64::from_le_bytes(bytes[8..].try_into().unwrap()),
        )))
    }
}

fn merge_two<W: Write>(a: Run, b: Run, out: &mut W) -> io::Result<u64> {
    let mut a = RunReader::new(a)?;
    let mut b = RunReader::new(b)?;
    let (mut x, mut y) = (a.next()?, b.next()?);
    let mut n = 0;
    loop {
        let take_a = match (x, y) {
            (None, None) => return Ok(n),
            (Some(_), None) => true,
            (None, Some(_)) => false,
            (Some(p), Some(q)) => p <= q,
        };
        if take_a {
            write_entry(out, x.unwrap())?;
            x = a.next()?;
        } else {
            write_entry(out, y.unwrap())?;
            y = b.next()?;
        }
        n += 1;
    }
}

fn copy_run<W: Write>(run: Run, out: &mut W) -> io::Result<u64> {
    let mut r = RunReader::new(run)?;
    let mut n = 0;
    while let Some(e) = r.next()? {
        write_entry(out, e)?;
        n += 1;
    }
    Ok(n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sorted_via(entries: &[Entry], budget: usize) -> (Vec<Entry>, usize) {
        let dir = tempfile::tempdir().unwrap();
        let mut s = ExternalSorter::new(budget, dir.path());
        for &e in entries {
            s.push(e).unwrap();
        }
        let spilled = s.runs_spilled();
        let mut out = Vec::new();
        assert_eq!(s.finish(&mut out).unwrap(), entries.len() as u64);
        let decoded = out
            .chunks_exact(16)
            .map(|c| {
                (
                    u64::from_le_bytes(c[..8].try_into().unwrap()),
                    u64::from_le_bytes(c[8..].try_into().unwrap()),
                )
            })
            .collect();
        (decoded, spilled)
    }

    #[test]
    fn spills_when_over_budget() {
        let entries: Vec<Entry> = (0..1000u64).map(|i| (i * 7919 % 1013, i)).collect();
        let (out, spilled) = sorted_via(&entries, 16 * 64);
        assert!(spilled >= 15);
        let mut expected = entries.clone();
        expected.sort_unstable();
        assert_eq!(out, expected);
    }

    #[test]
    fn empty_input() {
        assert!(sorted_via(&[], 1024).0.is_empty());
    }

    proptest! {
        #[test]
        fn matches_in_memory_sort(
            entries in proptest::collection::vec((0u64..50, any::<u64>()), 0..300),
            budget_entries in 2usize..40,
        ) {
            let (out, _) = sorted_via(&entries, budget_entries * 16);
            let mut expected = entries.clone();
            expected.sort_unstable();
            prop_assert_eq!(out, expected);
        }
    }
}
