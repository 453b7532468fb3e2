//! k-cover-free set families and the Dyachkov–Rykov lower bound.
//!
//! A family is k-cover-free when no member is contained in the union of k
//! other members. Families are read from text: a header line `M N`, then N
//! lines each holding one subset of `[1, M]` as space-separated integers (a
//! blank line is the empty set).

use rayon::prelude::*;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SetFamily {
    ground_size: usize,
    members: Vec<Vec<usize>>,
    masks: Vec<Vec<u64>>,
}

impl SetFamily {
    /// Members are subsets of `[1, ground_size]`; they are sorted and
    /// deduplicated internally and must be pairwise distinct.
    pub fn new(ground_size: usize, members: Vec<Vec<usize>>) -> Result<Self> {
        let words = ground_size.div_ceil(64).max(1);
        let mut sets = Vec::with_capacity(members.len());
        let mut masks = Vec::with_capacity(members.len());
        for (i, mut m) in members.into_iter().enumerate() {
            m.sort_unstable();
            m.dedup();
            let mut mask = vec![0u64; words];
            for &e in &m {
                if e == 0 || e > ground_size {
                    return Err(Error::Ingest(format!(
                        "set {} has element {e} outside [1, {ground_size}]",
                        i + 1
                    )));
                }
                mask[(e - 1) / 64] |= 1 << ((e - 1) % 64);
            }
            if let Some(j) = masks.iter().position(|other| *other == mask) {
                return Err(Error::Ingest(format!("sets {} and {} are equal", j + 1, i + 1)));
            }
            sets.push(m);
            masks.push(mask);
        }
        Ok(SetFamily {
            ground_size,
            members: sets,
            masks,
        })
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::Ingest("empty family file".into()))?;
        let nums: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| Error::Ingest(format!("bad header {header:?}"))))
            .collect::<Result<_>>()?;
        let [m, n] = nums[..] else {
            return Err(Error::Ingest(format!("header {header:?} is not 'M N'")));
        };
        let mut members = Vec::with_capacity(n);
        for i in 0..n {
            let line = lines.next().unwrap_or("");
            let set = line
                .split_whitespace()
                .map(|t| {
                    t.parse::<usize>()
                        .map_err(|_| Error::Ingest(format!("set {}: bad element {t:?}", i + 1)))
                })
                .collect::<Result<Vec<_>>>()?;
            members.push(set);
        }
        if lines.any(|l| !l.trim().is_empty()) {
            return Err(Error::Ingest(format!("more than {n} sets in family file")));
        }
        Self::new(m, members)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.ground_size, self.members.len());
        for m in &self.members {
            let line: Vec<String> = m.iter().map(usize::to_string).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn ground_size(&self) -> usize {
        self.ground_size
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn members(&self) -> &[Vec<usize>] {
        &self.members
    }

    fn check_k(&self, k: usize) -> Result<()> {
        if k == 0 || k >= self.len() {
            return Err(Error::Config(format!(
                "k = {k} outside [1, N-1] for a family of {} sets",
                self.len()
            )));
        }
        Ok(())
    }
}

/// A member contained in the union of `k` others (indices are 0-based).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoverViolation {
    pub covered: usize,
    pub coverers: Vec<usize>,
}

/// Decides cover-freeness by a bounded set-cover search per member: branch
/// on the lowest uncovered element of `F_0` over the sets containing it.
pub fn is_k_cover_free(f: &SetFamily, k: usize) -> Result<bool> {
    f.check_k(k)?;
    Ok((0..f.len()).into_par_iter().all(|i| !coverable(f, i, k)))
}

fn coverable(f: &SetFamily, target: usize, k: usize) -> bool {
    fn search(f: &SetFamily, target: usize, uncovered: &[u64], budget: usize) -> bool {
        let Some((w, bits)) = uncovered.iter().enumerate().find(|(_, &b)| b != 0) else {
            return true;
        };
        if budget == 0 {
            return false;
        }
        let bit = 1u64 << bits.trailing_zeros();
        (0..f.len())
            .filter(|&j| j != target && f.masks[j][w] & bit != 0)
            .any(|j| {
                let rest: Vec<u64> = uncovered.iter().zip(&f.masks[j]).map(|(u, m)| u & !m).collect();
                search(f, target, &rest, budget - 1)
            })
    }
    // fewer than k coverers can always be padded with arbitrary others
    search(f, target, &f.masks[target], k)
}

/// The lexicographically first `(covered, coverers)` violation, by direct
/// enumeration of all k-subsets of the other members.
pub fn find_cover_violation(f: &SetFamily, k: usize) -> Result<Option<CoverViolation>> {
    f.check_k(k)?;
    Ok((0..f.len()).into_par_iter().find_map_first(|i| {
        let others: Vec<usize> = (0..f.len()).filter(|&j| j != i).collect();
        let mut combo: Vec<usize> = (0..k).collect();
        let mut union = vec![0u64; f.masks[i].len()];
        loop {
            union.fill(0);
            for &c in &combo {
                for (u, m) in union.iter_mut().zip(&f.masks[others[c]]) {
                    *u |= m;
                }
            }
            if f.masks[i].iter().zip(&union).all(|(s, u)| s & !u == 0) {
                return Some(CoverViolation {
                    covered: i,
                    coverers: combo.iter().map(|&c| others[c]).collect(),
                });
            }
            if !next_combination(&mut combo, others.len()) {
                return None;
            }
        }
    }))
}

/// Advances `combo` to the next k-subset of `[0, n)` in lexicographic order.
fn next_combination(combo: &mut [usize], n: usize) -> bool {
    let k = combo.len();
    let Some(i) = (0..k).rev().find(|&i| combo[i] < n - k + i) else {
        return false;
    };
    combo[i] += 1;
    for j in i + 1..k {
        combo[j] = combo[j - 1] + 1;
    }
    true
}

/// `k^2 log2 N / (2 log2 k + c)`, the least ground size of a k-cover-free
/// family of N sets when `k <= N^(1/3)`, for the theorem's constant `c`.
pub fn dr_lower_bound(num_sets: u64, k: u64, c: f64) -> Result<f64> {
    if num_sets < 2 || k < 2 || c.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) || !c.is_finite() {
        return Err(Error::Config(format!(
            "bound needs N >= 2, k >= 2, c > 0 (got N = {num_sets}, k = {k}, c = {c})"
        )));
    }
    let k = k as f64;
    Ok(k * k * (num_sets as f64).log2() / (2.0 * k.log2() + c))
}

/// Whether `k <= N^(1/3)`, the range in which the bound is claimed.
pub fn dr_hypothesis_holds(num_sets: u64, k: u64) -> bool {
    (k as u128).pow(3) <= num_sets as u128
}

/// Smallest `c` for which a ground size of `m` meets the bound:
/// `c = k^2 log2 N / m - 2 log2 k` (may be negative).
pub fn minimal_dr_constant(num_sets: u64, k: u64, m: usize) -> f64 {
    let k = k as f64;
    k * k * (num_sets as f64).log2() / m as f64 - 2.0 * k.log2()
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundReport {
    pub num_sets: usize,
    pub ground_size: usize,
    pub k: usize,
    pub c: f64,
    pub violation: Option<CoverViolation>,
    pub hypothesis_holds: bool,
    /// Present when the family is cover-free and the bound is defined (`k >= 2`).
    pub bound: Option<f64>,
    /// `M - bound`.
    pub margin: Option<f64>,
    pub minimal_c: Option<f64>,
}

impl BoundReport {
    pub fn cover_free(&self) -> bool {
        self.violation.is_none()
    }

    /// `Some(M >= bound)` when the family is cover-free and `k <= N^(1/3)`.
    pub fn satisfied(&self) -> Option<bool> {
        if !self.hypothesis_holds {
            return None;
        }
        self.margin.map(|m| m >= 0.0)
    }
}

/// Checks a family against the bound. Non-cover-free families stop at the
/// violation witness.
pub fn check_family_against_bound(f: &SetFamily, k: usize, c: f64) -> Result<BoundReport> {
    let violation = find_cover_violation(f, k)?;
    let n = f.len() as u64;
    let mut report = BoundReport {
        num_sets: f.len(),
        ground_size: f.ground_size(),
        k,
        c,
        violation,
        hypothesis_holds: dr_hypothesis_holds(n, k as u64),
        bound: None,
        margin: None,
        minimal_c: None,
    };
    if report.cover_free() && k >= 2 {
        let bound = dr_lower_bound(n, k as u64, c)?;
        report.bound = Some(bound);
        report.margin = Some(f.ground_size() as f64 - bound);
        report.minimal_c = Some(minimal_dr_constant(n, k as u64, f.ground_size()));
    }
    Ok(report)
}
