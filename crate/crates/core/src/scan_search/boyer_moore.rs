//! Boyer–Moore substring search with both the bad-character and the strong
//! good-suffix rule.

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct Matcher {
    pattern: Vec<u8>,
    /// Last index of each byte in the pattern, -1 if absent.
    bad_char: [isize; 256],
    /// `good_suffix[j]`: shift after a mismatch at pattern position `j - 1`,
    /// i.e. once `pattern[j..]` has matched. `good_suffix[0]` is the shift
    /// after a full match.
    good_suffix: Vec<usize>,
}

impl Matcher {
    pub fn new(pattern: impl Into<Vec<u8>>) -> Result<Self> {
        let pattern = pattern.into();
        if pattern.is_empty() {
            return Err(Error::InvalidArgument(
                "search pattern must not be empty".into(),
            ));
        }
        let mut bad_char = [-1isize; 256];
        for (i, &b) in pattern.iter().enumerate() {
            bad_char[b as usize] = i as isize;
        }
        let good_suffix = good_suffix_table(&pattern);
        Ok(Matcher {
            pattern,
            bad_char,
            good_suffix,
        })
    }

    pub fn pattern(&self) -> &[u8] {
        &self.pattern
    }

    pub fn bad_char_table(&self) -> &[isize; 256] {
        &self.bad_char
    }

    pub fn good_suffix_table(&self) -> &[usize] {
        &self.good_suffix
    }

    /// Smallest offset at which the pattern occurs in `haystack`.
    pub fn find(&self, haystack: &[u8]) -> Option<usize> {
        let m = self.pattern.len();
        let n = haystack.len();
        if m > n {
            return None;
        }
        let pat = &self.pattern[..];
        let mut s = 0;
        while s <= n - m {
            let window = &haystack[s..s + m];
            let mut j = m;
            while j > 0 && pat[j - 1] == window[j - 1] {
                j -= 1;
            }
            if j == 0 {
                return Some(s);
            }
            let bad = (j - 1) as isize - self.bad_char[window[j - 1] as usize];
            s += self.good_suffix[j].max(bad.max(1) as usize);
        }
        None
    }

    pub fn is_match(&self, haystack: &[u8]) -> bool {
        self.find(haystack).is_some()
    }
}

/// Free-function form of [`Matcher::find`].
pub fn bm_find(matcher: &Matcher, haystack: &[u8]) -> Option<usize> {
    matcher.find(haystack)
}

/// Strong good-suffix shifts via the border-position construction.
fn good_suffix_table(pat: &[u8]) -> Vec<usize> {
    let m = pat.len();
    let mut shift = vec![0usize; m + 1];
    let mut border = vec![0usize; m + 1];

    // Case 1: the matched suffix reoccurs in the pattern preceded by a
    // different byte.
    let mut i = m;
    let mut j = m + 1;
    border[i] = j;
    while i > 0 {
        while j <= m && pat[i - 1] != pat[j - 1] {
            if shift[j] == 0 {
                shift[j] = j - i;
            }
            j = border[j];
        }
        i -= 1;
        j -= 1;
        border[i] = j;
    }

    // Case 2: only a prefix of the pattern matches a suffix of the match.
    let mut j = border[0];
    for (i, slot) in shift.iter_mut().enumerate() {
        if *slot == 0 {
            *slot = j;
        }
        if i == j {
            j = border[j];
        }
    }
    shift
}
