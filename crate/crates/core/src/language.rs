//! Language slices `A^{=n}`: a membership oracle plus a lexicographic
//! enumerator for the strings of one length.
//!
//! Slices are named by a spec string:
//!
//! * `explicit:<path>`: a text file with one `0`/`1` string per line.
//! * `hamming:<n>:<w>`: all strings of length `n` with exactly `w` ones.
//! * `dfa:<n>:<path>`: strings of length `n` accepted by the automaton in
//!   `<path>` (format described on [`Dfa::parse`]).

use std::fmt;
use std::fs;
use std::path::Path;
use std::sync::{Arc, OnceLock};

use crate::error::{Error, Result};
use crate::gf2::BitString;

/// Default largest `n` for which `{0,1}^n` may be swept exhaustively.
pub const DEFAULT_SCAN_CAP: usize = 24;

pub type MembershipFn = Arc<dyn Fn(&BitString) -> bool + Send + Sync>;

/// A deterministic finite automaton over `{0,1}`. Missing transitions reject.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dfa {
    start: usize,
    accepting: Vec<bool>,
    transitions: Vec<[Option<usize>; 2]>,
}

impl Dfa {
    pub fn new(
        states: usize,
        start: usize,
        accepting: &[usize],
        transitions: &[(usize, u8, usize)],
    ) -> Result<Self> {
        let bad = |m: String| Error::Ingest(format!("automaton: {m}"));
        if states == 0 || start >= states {
            return Err(bad(format!("start state {start} outside {states} states")));
        }
        let mut acc = vec![false; states];
        for &a in accepting {
            *acc.get_mut(a).ok_or_else(|| bad(format!("accepting state {a} undefined")))? = true;
        }
        let mut table = vec![[None; 2]; states];
        for &(from, sym, to) in transitions {
            if from >= states || to >= states || sym > 1 {
                return Err(bad(format!("bad transition {from} {sym} {to}")));
            }
            let slot = &mut table[from][sym as usize];
            if slot.is_some() {
                return Err(bad(format!("duplicate transition from {from} on {sym}")));
            }
            *slot = Some(to);
        }
        Ok(Dfa {
            start,
            accepting: acc,
            transitions: table,
        })
    }

    /// Parses the text format:
    ///
    /// ```text
    /// # comment
    /// states 2
    /// start 0
    /// accept 1
    /// 0 0 0      # from-state symbol to-state
    /// 0 1 1
    /// 1 0 0
    /// 1 1 1
    /// ```
    ///
    /// `states`, `start` and `accept` must each appear once; `accept` may
    /// list zero or more states. Every other non-blank line is a transition.
    pub fn parse(text: &str) -> Result<Self> {
        let bad = |line: usize, m: &str| Error::Ingest(format!("automaton line {line}: {m}"));
        let mut states = None;
        let mut start = None;
        let mut accepting: Option<Vec<usize>> = None;
        let mut transitions = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let head = parts.next().unwrap_or_default();
            let nums = |parts: std::str::SplitWhitespace<'_>| {
                parts
                    .map(|p| p.parse::<usize>().map_err(|_| bad(i + 1, "expected an integer")))
                    .collect::<Result<Vec<_>>>()
            };
            match head {
                "states" | "start" | "accept" => {
                    let vals = nums(parts)?;
                    let one = || match vals.as_slice() {
                        [v] => Ok(*v),
                        _ => Err(bad(i + 1, "expected exactly one value")),
                    };
                    let dup = match head {
                        "states" => states.replace(one()?).is_some(),
                        "start" => start.replace(one()?).is_some(),
                        _ => accepting.replace(vals.clone()).is_some(),
                    };
                    if dup {
                        return Err(bad(i + 1, &format!("repeated '{head}'")));
                    }
                }
                _ => {
                    let vals = nums(line.split_whitespace())?;
                    match vals.as_slice() {
                        [from, sym @ (0 | 1), to] => transitions.push((*from, *sym as u8, *to)),
                        _ => return Err(bad(i + 1, "expected '<from> <0|1> <to>'")),
                    }
                }
            }
        }
        let states = states.ok_or_else(|| Error::Ingest("automaton: missing 'states'".into()))?;
        let start = start.ok_or_else(|| Error::Ingest("automaton: missing 'start'".into()))?;
        let accepting =
            accepting.ok_or_else(|| Error::Ingest("automaton: missing 'accept'".into()))?;
        Self::new(states, start, &accepting, &transitions)
    }

    pub fn accepts(&self, x: &BitString) -> bool {
        let mut s = self.start;
        for b in x.iter() {
            match self.transitions[s][b as usize] {
                Some(t) => s = t,
                None => return false,
            }
        }
        self.accepting[s]
    }

    /// `table[r][s]`: some word of length `r` leads from `s` to acceptance.
    fn viability(&self, n: usize) -> Vec<Vec<bool>> {
        let mut table = vec![self.accepting.clone()];
        for r in 1..=n {
            let prev = &table[r - 1];
            let row = self
                .transitions
                .iter()
                .map(|t| t.iter().flatten().any(|&to| prev[to]))
                .collect();
            table.push(row);
        }
        table
    }
}

#[derive(Clone)]
enum Source {
    Explicit(Vec<BitString>),
    Hamming(usize),
    Dfa(Dfa, Arc<Vec<Vec<bool>>>),
    Predicate(MembershipFn),
}

/// The strings of length `n` in a language.
#[derive(Clone)]
pub struct LanguageSlice {
    n: usize,
    spec: String,
    source: Source,
    scan_cap: usize,
    members: OnceLock<Arc<Vec<BitString>>>,
}

impl fmt::Debug for LanguageSlice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LanguageSlice")
            .field("n", &self.n)
            .field("spec", &self.spec)
            .finish_non_exhaustive()
    }
}

impl LanguageSlice {
    fn with_source(n: usize, spec: String, source: Source) -> Result<Self> {
        if n == 0 {
            return Err(Error::Config("string length n must be at least 1".into()));
        }
        Ok(LanguageSlice {
            n,
            spec,
            source,
            scan_cap: DEFAULT_SCAN_CAP,
            members: OnceLock::new(),
        })
    }

    /// An explicit member list. Order is irrelevant; duplicates and
    /// wrong-length strings are rejected.
    pub fn explicit(n: usize, spec: impl Into<String>, mut members: Vec<BitString>) -> Result<Self> {
        if let Some(bad) = members.iter().find(|m| m.len() != n) {
            return Err(Error::Ingest(format!("member {bad} does not have length {n}")));
        }
        members.sort();
        if let Some(w) = members.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Ingest(format!("duplicate member {}", w[0])));
        }
        Self::with_source(n, spec.into(), Source::Explicit(members))
    }

    /// Parses an explicit-set file body. Blank lines are ignored.
    pub fn parse_explicit(text: &str, spec: impl Into<String>) -> Result<Self> {
        let members = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .enumerate()
            .map(|(i, l)| {
                l.parse::<BitString>()
                    .map_err(|e| Error::Ingest(format!("entry {}: {e}", i + 1)))
            })
            .collect::<Result<Vec<_>>>()?;
        let Some(first) = members.first() else {
            return Err(Error::Ingest("explicit set is empty; its length cannot be inferred".into()));
        };
        let n = first.len();
        Self::explicit(n, spec, members)
    }

    pub fn hamming(n: usize, weight: usize) -> Result<Self> {
        Self::with_source(n, format!("hamming:{n}:{weight}"), Source::Hamming(weight))
    }

    pub fn dfa(n: usize, spec: impl Into<String>, dfa: Dfa) -> Result<Self> {
        let table = Arc::new(dfa.viability(n));
        Self::with_source(n, spec.into(), Source::Dfa(dfa, table))
    }

    /// A slice backed only by a membership predicate; enumeration scans
    /// `{0,1}^n` and is refused above the scan cap.
    pub fn predicate(n: usize, spec: impl Into<String>, f: MembershipFn) -> Result<Self> {
        Self::with_source(n, spec.into(), Source::Predicate(f))
    }

    /// Loads a slice from its spec string (see the module docs).
    pub fn from_spec(spec: &str) -> Result<Self> {
        let bad = || Error::Config(format!("unrecognized language spec {spec:?}"));
        let (kind, rest) = spec.split_once(':').ok_or_else(bad)?;
        match kind {
            "explicit" => {
                let text = read_text(rest)?;
                Self::parse_explicit(&text, spec)
            }
            "hamming" => {
                let (n, w) = rest.split_once(':').ok_or_else(bad)?;
                let n = n.parse().map_err(|_| bad())?;
                let w = w.parse().map_err(|_| bad())?;
                Self::hamming(n, w)
            }
            "dfa" => {
                let (n, path) = rest.split_once(':').ok_or_else(bad)?;
                let n = n.parse().map_err(|_| bad())?;
                let dfa = Dfa::parse(&read_text(path)?)?;
                Self::dfa(n, spec, dfa)
            }
            _ => Err(bad()),
        }
    }

    pub fn with_scan_cap(mut self, cap: usize) -> Self {
        self.scan_cap = cap;
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn spec(&self) -> &str {
        &self.spec
    }

    pub fn scan_cap(&self) -> usize {
        self.scan_cap
    }

    pub fn member(&self, x: &BitString) -> Result<bool> {
        if x.len() != self.n {
            return Err(Error::dim(format!(
                "string of length {} queried against a slice of length {}",
                x.len(),
                self.n
            )));
        }
        Ok(self.contains(x))
    }

    /// Membership without the length check.
    pub(crate) fn contains(&self, x: &BitString) -> bool {
        match &self.source {
            Source::Explicit(m) => m.binary_search(x).is_ok(),
            Source::Hamming(w) => x.count_ones() == *w,
            Source::Dfa(d, _) => d.accepts(x),
            Source::Predicate(f) => f(x),
        }
    }

    pub fn can_enumerate(&self) -> bool {
        !matches!(self.source, Source::Predicate(_)) || self.n <= self.scan_cap.min(63)
    }

    /// Streams the members in lexicographic order.
    pub fn enumerate_members(&self) -> Result<Box<dyn Iterator<Item = BitString> + Send + '_>> {
        let n = self.n;
        Ok(match &self.source {
            Source::Explicit(m) => Box::new(m.iter().cloned()),
            Source::Hamming(w) => {
                let w = *w;
                Box::new(LexWalk::new(n, 0usize, move |ones, bit, rest| {
                    let ones = ones + bit as usize;
                    (ones <= w && ones + rest >= w).then_some(ones)
                }))
            }
            Source::Dfa(d, table) => Box::new(LexWalk::new(n, d.start, move |s, bit, rest| {
                d.transitions[*s][bit as usize].filter(|&t| table[rest][t])
            })),
            Source::Predicate(f) => {
                if !self.can_enumerate() {
                    return Err(Error::EnumerationUnsupported(format!(
                        "predicate slice with n = {n} exceeds the scan cap {}",
                        self.scan_cap
                    )));
                }
                Box::new(
                    (0..1u64 << n)
                        .map(move |i| BitString::from_lex_index(n, i).expect("n <= 63"))
                        .filter(move |x| f(x)),
                )
            }
        })
    }

    /// All members, materialized once and shared.
    pub fn members(&self) -> Result<Arc<Vec<BitString>>> {
        if let Some(m) = self.members.get() {
            return Ok(m.clone());
        }
        let list = Arc::new(self.enumerate_members()?.collect::<Vec<_>>());
        Ok(self.members.get_or_init(|| list).clone())
    }

    /// `|A^{=n}|`, saturating at `u64::MAX` for hamming slices too large to count.
    pub fn cardinality(&self) -> Result<u64> {
        match &self.source {
            Source::Hamming(w) => Ok(binomial(self.n as u64, *w as u64)),
            Source::Explicit(m) => Ok(m.len() as u64),
            _ => Ok(self.members()?.len() as u64),
        }
    }

    /// `ceil(log2 |A^{=n}|)`, checked against the digest width limit `k+1 <= n`.
    pub fn choose_k(&self) -> Result<usize> {
        let k = ceil_log2(self.cardinality()?)?;
        if k + 1 > self.n {
            return Err(Error::DigestTooWide { digest_bits: k + 1, n: self.n });
        }
        Ok(k)
    }

    /// True when `|A^{=n}| > 2^n / n^2`, the density above which the
    /// compressor's running time guarantee no longer applies.
    pub fn exceeds_density_hint(&self) -> Result<bool> {
        let size = self.cardinality()? as f64;
        let n = self.n as f64;
        Ok(size > 2f64.powf(n) / (n * n))
    }
}

/// `ceil(log2 size)`; `EmptyLanguage` for zero.
pub fn ceil_log2(size: u64) -> Result<usize> {
    match size {
        0 => Err(Error::EmptyLanguage),
        1 => Ok(0),
        s => Ok((64 - (s - 1).leading_zeros()) as usize),
    }
}

fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    acc as u64
}

fn read_text(path: &str) -> Result<String> {
    fs::read_to_string(Path::new(path))
        .map_err(|e| Error::Ingest(format!("cannot read {path:?}: {e}")))
}

/// Depth-first walk of `{0,1}^n`, 0 before 1, pruned by `step`, which maps
/// `(state, bit, positions left after this one)` to the next state or
/// `None` when no completion can succeed. Complete paths are yielded.
struct LexWalk<S, F> {
    n: usize,
    bits: BitString,
    stack: Vec<(S, u8)>,
    step: F,
}

impl<S, F> LexWalk<S, F>
where
    F: Fn(&S, bool, usize) -> Option<S>,
{
    fn new(n: usize, start: S, step: F) -> Self {
        LexWalk {
            n,
            bits: BitString::zeros(n).expect("n >= 1"),
            stack: vec![(start, 0)],
            step,
        }
    }
}

impl<S, F> Iterator for LexWalk<S, F>
where
    F: Fn(&S, bool, usize) -> Option<S>,
{
    type Item = BitString;

    fn next(&mut self) -> Option<BitString> {
        loop {
            let depth = self.stack.len().checked_sub(1)?;
            let top = self.stack.last_mut().expect("stack is non-empty");
            if depth == self.n {
                self.stack.pop();
                return Some(self.bits.clone());
            }
            if top.1 > 1 {
                self.stack.pop();
                continue;
            }
            let bit = top.1 == 1;
            top.1 += 1;
            if let Some(next) = (self.step)(&top.0, bit, self.n - depth - 1) {
                self.bits.set(depth, bit);
                self.stack.push((next, 0));
            }
        }
    }
}
