//! Distinguishing descriptors. One seed per `(language, k)` yields a tuple
//! in which every member is isolated by some hash; the descriptor of `x` is
//! `(k, seed, i, h_i(x))` in the record layout of the codec.
//!
//! A descriptor accepts `v` iff `v` is a member and `h_i(v)` equals the
//! stored digest. The membership conjunct is the oracle query; with it the
//! descriptor accepts exactly one string of `{0,1}^n`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rayon::prelude::*;

use crate::codec::{compressed_bits, CompressedRecord};
use crate::error::{Error, Result};
use crate::expander::{self, Seed, SeedSpace};
use crate::gf2::{BitString, HashTuple};
use crate::isolation::{find_covering_seed, isolates_among, Variant};
use crate::language::LanguageSlice;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
struct CacheKey {
    spec: String,
    n: usize,
    k: usize,
    space: SeedSpace,
}

type Slot = Arc<OnceLock<Result<(Seed, Arc<HashTuple>)>>>;

/// Builds descriptors, caching the covering tuple per `(spec, n, k, space)`.
/// The first search for a key runs once; concurrent callers wait for it.
#[derive(Default)]
pub struct DescriptorBuilder {
    cache: Mutex<HashMap<CacheKey, Slot>>,
}

impl DescriptorBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// The smallest seed whose tuple satisfies `T` for the whole slice.
    pub fn covering_tuple(
        &self,
        lang: &LanguageSlice,
        k: usize,
        space: SeedSpace,
    ) -> Result<(Seed, Arc<HashTuple>)> {
        let key = CacheKey {
            spec: lang.spec().to_owned(),
            n: lang.n(),
            k,
            space,
        };
        let slot = self.cache.lock().expect("cache poisoned").entry(key).or_default().clone();
        let cached = slot.get_or_init(|| {
            find_covering_seed(lang, k, Variant::T, space)
                .map(|(s, t)| (s, Arc::new(t)))
        });
        cached.clone()
    }

    /// Descriptor `(k, s, i, h_i(x))` with the shared seed and the smallest
    /// isolating index.
    pub fn build(
        &self,
        x: &BitString,
        lang: &LanguageSlice,
        k: usize,
        space: SeedSpace,
    ) -> Result<CompressedRecord> {
        if !lang.member(x)? {
            return Err(Error::NotInLanguage(format!("{x} is not in {}", lang.spec())));
        }
        let (seed, tuple) = self.covering_tuple(lang, k, space)?;
        let members = lang.members()?;
        let (i, h) = tuple
            .matrices()
            .iter()
            .enumerate()
            .find(|(_, h)| isolates_among(h, x, &members))
            .expect("covering tuple isolates every member");
        CompressedRecord::new(lang.n(), k, seed, (i + 1) as u16, h.matvec(x)?)
    }
}

/// One-off descriptor construction without a shared cache.
pub fn build_descriptor(
    x: &BitString,
    lang: &LanguageSlice,
    k: usize,
    space: SeedSpace,
) -> Result<CompressedRecord> {
    DescriptorBuilder::new().build(x, lang, k, space)
}

/// Runs a descriptor against candidate `v`.
pub fn run_descriptor(p: &CompressedRecord, v: &BitString, lang: &LanguageSlice) -> Result<bool> {
    p.validate()?;
    if v.len() != p.n || lang.n() != p.n {
        return Err(Error::dim(format!(
            "candidate of length {} for a descriptor of length {}",
            v.len(),
            p.n
        )));
    }
    let t = expander::expand(p.seed, p.n, p.k)?;
    Ok(accepts(p, &t, v, lang))
}

fn accepts(p: &CompressedRecord, t: &HashTuple, v: &BitString, lang: &LanguageSlice) -> bool {
    let h = t.member(p.index as usize).expect("index validated");
    lang.contains(v) && h.matvec(v).expect("length checked") == p.digest
}

/// Number of strings the descriptor accepts. Sweeps the members, or all of
/// `{0,1}^n` when `full_sweep` is set (allowed up to the scan cap).
pub fn count_accepted(p: &CompressedRecord, lang: &LanguageSlice, full_sweep: bool) -> Result<u64> {
    p.validate()?;
    if lang.n() != p.n {
        return Err(Error::dim("descriptor and language lengths differ"));
    }
    let t = expander::expand(p.seed, p.n, p.k)?;
    let n = p.n;
    if full_sweep {
        if n > lang.scan_cap().min(63) {
            return Err(Error::EnumerationUnsupported(format!(
                "full sweep of length {n} exceeds the scan cap {}",
                lang.scan_cap()
            )));
        }
        Ok((0..1u64 << n)
            .into_par_iter()
            .filter(|&i| {
                let v = BitString::from_lex_index(n, i).expect("n <= 63");
                accepts(p, &t, &v, lang)
            })
            .count() as u64)
    } else {
        let members = lang.members()?;
        Ok(members.par_iter().filter(|v| accepts(p, &t, v, lang)).count() as u64)
    }
}

/// True iff exactly one string is accepted.
pub fn verify_unique(p: &CompressedRecord, lang: &LanguageSlice, full_sweep: bool) -> Result<bool> {
    Ok(count_accepted(p, lang, full_sweep)? == 1)
}

/// Payload size, identical to the codec's record size.
pub fn descriptor_bits(p: &CompressedRecord) -> usize {
    compressed_bits(p)
}
