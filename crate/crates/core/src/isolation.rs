//! Isolation predicates over a language slice, Monte Carlo estimates of how
//! often random tuples satisfy them, and the search for covering seeds.
//!
//! A hash `h` isolates `x` when no other member shares `h(x)`. A tuple
//! satisfies `T` when every member is isolated by some tuple member, and
//! `T~` when it additionally has only full-rank (`k+1`) members.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::expander::{self, Seed, SeedSpace};
use crate::gf2::{BitString, Gf2Matrix, HashTuple};
use crate::language::LanguageSlice;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Variant {
    /// Every member isolated by some tuple member.
    T,
    /// `T` plus every tuple member of full rank.
    TTilde,
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "T" => Ok(Variant::T),
            "Ttilde" | "T~" => Ok(Variant::TTilde),
            _ => Err(Error::Config(format!("unknown variant {s:?}; expected T or Ttilde"))),
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::T => "T",
            Variant::TTilde => "Ttilde",
        })
    }
}

/// `flags[j]` is true when `members[j]` has a digest under `h` that no other
/// member shares. Digests are bucketed by sorting.
pub(crate) fn isolation_flags(h: &Gf2Matrix, members: &[BitString]) -> Vec<bool> {
    fn mark<K: Ord>(mut keyed: Vec<(K, usize)>, flags: &mut [bool]) {
        keyed.sort_unstable();
        let mut i = 0;
        while i < keyed.len() {
            let mut j = i + 1;
            while j < keyed.len() && keyed[j].0 == keyed[i].0 {
                j += 1;
            }
            if j == i + 1 {
                flags[keyed[i].1] = true;
            }
            i = j;
        }
    }
    let mut flags = vec![false; members.len()];
    if h.rows() <= 64 {
        let keyed = members.iter().enumerate().map(|(j, x)| (h.matvec_word(x), j)).collect();
        mark(keyed, &mut flags);
    } else {
        let keyed = members
            .iter()
            .enumerate()
            .map(|(j, x)| (h.matvec(x).expect("shape checked"), j))
            .collect();
        mark(keyed, &mut flags);
    }
    flags
}

fn check_tuple(t: &HashTuple, lang: &LanguageSlice) -> Result<()> {
    if t.input_bits() != lang.n() {
        return Err(Error::dim(format!(
            "tuple hashes strings of length {}, language has length {}",
            t.input_bits(),
            lang.n()
        )));
    }
    Ok(())
}

fn require_member(x: &BitString, lang: &LanguageSlice) -> Result<()> {
    if !lang.member(x)? {
        return Err(Error::NotInLanguage(format!("{x} is not in {}", lang.spec())));
    }
    Ok(())
}

/// Whether `h` separates `x` from every other member of the slice.
pub fn isolates(h: &Gf2Matrix, x: &BitString, lang: &LanguageSlice) -> Result<bool> {
    require_member(x, lang)?;
    if h.cols() != lang.n() {
        return Err(Error::dim("hash width differs from the language length"));
    }
    let members = lang.members()?;
    Ok(isolates_among(h, x, &members))
}

pub(crate) fn isolates_among(h: &Gf2Matrix, x: &BitString, members: &[BitString]) -> bool {
    if h.rows() <= 64 {
        let d = h.matvec_word(x);
        members.iter().all(|y| y == x || h.matvec_word(y) != d)
    } else {
        let d = h.matvec(x).expect("shape checked");
        members.iter().all(|y| y == x || h.matvec(y).expect("shape checked") != d)
    }
}

/// Predicate `T`: every member is isolated by at least one tuple member.
pub fn covers_all(t: &HashTuple, lang: &LanguageSlice) -> Result<bool> {
    check_tuple(t, lang)?;
    Ok(covers_members(t, &lang.members()?))
}

/// Predicate `T~`: `T` and every tuple member has rank `k+1`.
pub fn covers_all_fullrank(t: &HashTuple, lang: &LanguageSlice) -> Result<bool> {
    check_tuple(t, lang)?;
    Ok(all_full_rank(t) && covers_members(t, &lang.members()?))
}

pub fn satisfies(t: &HashTuple, lang: &LanguageSlice, variant: Variant) -> Result<bool> {
    match variant {
        Variant::T => covers_all(t, lang),
        Variant::TTilde => covers_all_fullrank(t, lang),
    }
}

fn all_full_rank(t: &HashTuple) -> bool {
    t.matrices().iter().all(Gf2Matrix::is_full_row_rank)
}

fn covers_members(t: &HashTuple, members: &[BitString]) -> bool {
    let mut covered = vec![false; members.len()];
    let mut left = members.len();
    for h in t.matrices() {
        if left == 0 {
            break;
        }
        for (c, iso) in covered.iter_mut().zip(isolation_flags(h, members)) {
            if iso && !*c {
                *c = true;
                left -= 1;
            }
        }
    }
    left == 0
}

fn satisfies_members(t: &HashTuple, members: &[BitString], variant: Variant) -> bool {
    (variant == Variant::T || all_full_rank(t)) && covers_members(t, members)
}

/// Monte Carlo estimate of `Prob[predicate]` over uniformly random tuples.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoverageEstimate {
    pub trials: u64,
    pub successes: u64,
    pub estimate: f64,
    /// Binomial standard error `sqrt(p(1-p)/trials)`.
    pub stderr: f64,
    /// Whether `2^k >= |A|`, the regime where the 1/2 and 1/3 lower bounds hold.
    pub bound_applies: bool,
}

impl CoverageEstimate {
    pub fn from_counts(successes: u64, trials: u64) -> Self {
        let p = successes as f64 / trials as f64;
        CoverageEstimate {
            trials,
            successes,
            estimate: p,
            stderr: (p * (1.0 - p) / trials as f64).sqrt(),
            bound_applies: true,
        }
    }
}

/// Draws `trials` tuples, trial `t` from the sub-stream
/// [`expander::trial_state`]`(mc_seed, t)`, and counts those satisfying
/// `variant`. The count does not depend on the number of worker threads.
pub fn estimate_coverage_probability(
    lang: &LanguageSlice,
    k: usize,
    variant: Variant,
    trials: u64,
    mc_seed: Seed,
) -> Result<CoverageEstimate> {
    if trials == 0 {
        return Err(Error::Config("trials must be positive".into()));
    }
    let n = lang.n();
    expander::tuple_from_state(0, n, k)?;
    let members = lang.members()?;
    let successes: u64 = (0..trials)
        .into_par_iter()
        .map(|t| {
            let tuple = expander::tuple_from_state(expander::trial_state(mc_seed, t), n, k)
                .expect("shape checked");
            satisfies_members(&tuple, &members, variant) as u64
        })
        .sum();
    let mut est = CoverageEstimate::from_counts(successes, trials);
    est.bound_applies = k >= 64 || (1u64 << k) >= members.len() as u64;
    Ok(est)
}

/// The smallest seed whose expanded tuple satisfies `variant`.
pub fn find_covering_seed(
    lang: &LanguageSlice,
    k: usize,
    variant: Variant,
    space: SeedSpace,
) -> Result<(Seed, HashTuple)> {
    let n = lang.n();
    expander::expand(Seed(0), n, k)?;
    let members = lang.members()?;
    (0..space.size())
        .into_par_iter()
        .find_map_first(|s| {
            let t = expander::expand(Seed(s), n, k).expect("shape checked");
            satisfies_members(&t, &members, variant).then_some((Seed(s), t))
        })
        .ok_or(Error::SeedSpaceExhausted { space: space.size() })
}
