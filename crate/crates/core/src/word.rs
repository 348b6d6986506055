//! Finite words over a signed alphabet.
//!
//! A [`Letter`] names an oriented embedded arc; its inverse is the same arc
//! traversed backwards. Letter ids print as `a`, `b`, …, `z`, `aa`, `ab`, …
//! and a trailing prime marks the inverse, so `a b b' c` is the word
//! `a b b⁻¹ c`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Letter {
    pub arc: u32,
    pub inverse: bool,
}

impl Letter {
    pub const fn new(arc: u32) -> Self {
        Self { arc, inverse: false }
    }

    pub const fn inv(self) -> Self {
        Self {
            arc: self.arc,
            inverse: !self.inverse,
        }
    }

    /// `+1` for the arc's fixed orientation, `−1` for its reverse.
    pub const fn sign(self) -> i8 {
        if self.inverse {
            -1
        } else {
            1
        }
    }

    pub fn cancels(self, other: Letter) -> bool {
        self.arc == other.arc && self.inverse != other.inverse
    }
}

/// Bijective base-26 name: 0 → `a`, 25 → `z`, 26 → `aa`.
pub fn arc_name(mut id: u32) -> String {
    let mut bytes = Vec::new();
    loop {
        bytes.push(b'a' + (id % 26) as u8);
        if id < 26 {
            break;
        }
        id = id / 26 - 1;
    }
    bytes.reverse();
    String::from_utf8(bytes).expect("ascii")
}

pub fn parse_arc_name(name: &str) -> Result<u32> {
    if name.is_empty() || !name.bytes().all(|b| b.is_ascii_lowercase()) {
        return Err(Error::Parse(format!("invalid letter `{name}`")));
    }
    let mut id: u64 = 0;
    for b in name.bytes() {
        id = id * 26 + u64::from(b - b'a') + 1;
        if id > u64::from(u32::MAX) + 1 {
            return Err(Error::Parse(format!("letter `{name}` out of range")));
        }
    }
    Ok((id - 1) as u32)
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", arc_name(self.arc))?;
        if self.inverse {
            write!(f, "'")?;
        }
        Ok(())
    }
}

impl FromStr for Letter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, inverse) = match s.strip_suffix('\'') {
            Some(n) => (n, true),
            None => (s, false),
        };
        Ok(Self {
            arc: parse_arc_name(name)?,
            inverse,
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Word {
    pub letters: Vec<Letter>,
}

impl Word {
    pub fn new(letters: Vec<Letter>) -> Self {
        Self { letters }
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    /// Free-group normal form, by a single stack pass.
    pub fn reduce(&self) -> Word {
        let mut stack: Vec<Letter> = Vec::with_capacity(self.letters.len());
        for &l in &self.letters {
            match stack.last() {
                Some(&top) if top.cancels(l) => {
                    stack.pop();
                }
                _ => stack.push(l),
            }
        }
        Word::new(stack)
    }

    pub fn is_reduced(&self) -> bool {
        self.letters.windows(2).all(|w| !w[0].cancels(w[1]))
    }

    /// The word reduces to the empty word.
    pub fn is_whisker(&self) -> bool {
        self.reduce().is_empty()
    }

    /// The word differs from its reduced form.
    pub fn has_whiskers(&self) -> bool {
        !self.is_reduced()
    }

    /// A well-nested pairing of every letter with an inverse, if one exists.
    pub fn nesting_pairing(&self) -> Option<Pairing> {
        let n = self.letters.len();
        let mut partner = vec![usize::MAX; n];
        let mut stack: Vec<usize> = Vec::new();
        for (j, &l) in self.letters.iter().enumerate() {
            match stack.last() {
                Some(&i) if self.letters[i].cancels(l) => {
                    stack.pop();
                    partner[i] = j;
                    partner[j] = i;
                }
                _ => stack.push(j),
            }
        }
        stack.is_empty().then_some(Pairing { partner })
    }

    /// Whether the subword on the indices in `keep` is a whisker.
    pub fn truncation_reducible(&self, keep: &[usize]) -> Result<bool> {
        let mut idx = keep.to_vec();
        idx.sort_unstable();
        idx.dedup();
        if let Some(&bad) = idx.iter().find(|&&i| i >= self.letters.len()) {
            return Err(Error::Inconsistent(format!(
                "index {bad} outside word of length {}",
                self.letters.len()
            )));
        }
        Ok(Word::new(idx.iter().map(|&i| self.letters[i]).collect()).is_whisker())
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut letters = self.letters.clone();
        letters.extend_from_slice(&other.letters);
        Word::new(letters)
    }

    pub fn inverse(&self) -> Word {
        Word::new(self.letters.iter().rev().map(|l| l.inv()).collect())
    }

    /// Both word-level equivalence tests: equal normal forms, and
    /// `self · other⁻¹` being a whisker.
    pub fn equivalence_routes(&self, other: &Word) -> (bool, bool) {
        (
            self.reduce() == other.reduce(),
            self.concat(&other.inverse()).is_whisker(),
        )
    }

    /// Equivalence of loops at the word level.
    ///
    /// Panics if the two routes of [`Word::equivalence_routes`] disagree,
    /// which would be a bug in reduction.
    pub fn equivalent(&self, other: &Word) -> bool {
        let (a, b) = self.equivalence_routes(other);
        assert_eq!(a, b, "word equivalence routes disagree on {self} / {other}");
        a
    }

    /// Maximal runs `[start, end)` that are whiskers and are matched by the
    /// stack reduction: every index inside a run is cancelled within it.
    /// The letters outside the runs form the reduced word.
    pub fn whisker_runs(&self) -> Vec<(usize, usize)> {
        let n = self.letters.len();
        let mut cancelled_with = vec![usize::MAX; n];
        let mut stack: Vec<usize> = Vec::new();
        for j in 0..n {
            match stack.last() {
                Some(&i) if self.letters[i].cancels(self.letters[j]) => {
                    stack.pop();
                    cancelled_with[i] = j;
                    cancelled_with[j] = i;
                }
                _ => stack.push(j),
            }
        }
        let mut runs = Vec::new();
        let mut i = 0;
        while i < n {
            if cancelled_with[i] == usize::MAX {
                i += 1;
                continue;
            }
            let start = i;
            // Cancelled indices come in well-nested blocks; hop over them.
            while i < n && cancelled_with[i] != usize::MAX {
                i = cancelled_with[i] + 1;
            }
            runs.push((start, i));
        }
        runs
    }

    /// Rename arcs to `0, 1, …` in order of first appearance and make the
    /// first occurrence of every arc positive. Two words that agree up to arc
    /// renaming and a per-arc orientation flip have equal canonical forms.
    pub fn canonical(&self) -> Word {
        let mut map: Vec<(u32, u32, bool)> = Vec::new();
        let mut out = Vec::with_capacity(self.letters.len());
        for &l in &self.letters {
            let (id, flip) = match map.iter().find(|m| m.0 == l.arc) {
                Some(&(_, id, flip)) => (id, flip),
                None => {
                    let id = map.len() as u32;
                    map.push((l.arc, id, l.inverse));
                    (id, l.inverse)
                }
            };
            out.push(Letter {
                arc: id,
                inverse: l.inverse != flip,
            });
        }
        Word::new(out)
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, l) in self.letters.iter().enumerate() {
            if k > 0 {
                write!(f, " ")?;
            }
            write!(f, "{l}")?;
        }
        Ok(())
    }
}

impl FromStr for Word {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.split_whitespace()
            .map(Letter::from_str)
            .collect::<Result<Vec<_>>>()
            .map(Word::new)
    }
}

impl From<Vec<Letter>> for Word {
    fn from(letters: Vec<Letter>) -> Self {
        Word::new(letters)
    }
}

/// A non-crossing matching of letter positions with their inverses.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pairing {
    partner: Vec<usize>,
}

impl Pairing {
    /// Validate an explicit list of matches against `word`.
    pub fn from_matches(word: &Word, matches: &[(usize, usize)]) -> Result<Self> {
        let n = word.len();
        let mut partner = vec![usize::MAX; n];
        for &(i, j) in matches {
            if i >= j || j >= n {
                return Err(Error::Inconsistent(format!("bad match ({i}, {j})")));
            }
            if partner[i] != usize::MAX || partner[j] != usize::MAX {
                return Err(Error::Inconsistent(format!("index matched twice in ({i}, {j})")));
            }
            if !word.letters[i].cancels(word.letters[j]) {
                return Err(Error::Inconsistent(format!(
                    "letters at {i} and {j} are not inverse"
                )));
            }
            partner[i] = j;
            partner[j] = i;
        }
        if partner.contains(&usize::MAX) {
            return Err(Error::Inconsistent("some letter is unmatched".into()));
        }
        let p = Self { partner };
        if !p.is_non_crossing() {
            return Err(Error::Inconsistent("pairing crosses".into()));
        }
        Ok(p)
    }

    pub fn len(&self) -> usize {
        self.partner.len()
    }

    pub fn is_empty(&self) -> bool {
        self.partner.is_empty()
    }

    pub fn partner(&self, i: usize) -> usize {
        self.partner[i]
    }

    /// Matches `(i, j)` with `i < j`, ordered by `i`.
    pub fn matches(&self) -> Vec<(usize, usize)> {
        self.partner
            .iter()
            .enumerate()
            .filter(|(i, j)| i < j)
            .map(|(i, &j)| (i, j))
            .collect()
    }

    fn is_non_crossing(&self) -> bool {
        let mut stack = Vec::new();
        for (i, &j) in self.partner.iter().enumerate() {
            if i < j {
                stack.push(j);
            } else if stack.pop() != Some(i) {
                return false;
            }
        }
        stack.is_empty()
    }

    /// Whether `keep` is a union of matched pairs.
    pub fn is_closed(&self, keep: &[usize]) -> bool {
        let set: std::collections::BTreeSet<usize> = keep.iter().copied().collect();
        set.iter()
            .all(|&i| i < self.partner.len() && set.contains(&self.partner[i]))
    }
}
