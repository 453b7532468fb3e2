//! Per-string compression against a language slice.
//!
//! `encode` searches, for one member `x`, the smallest seed whose expanded
//! tuple holds a full-rank hash isolating `x`, and emits `(n, k, seed, i,
//! h_i(x))`. `decode` rebuilds `h_i`, walks the affine preimage of the digest
//! and returns the single candidate that is a member. Because `h_i` has rank
//! `k+1` the walk visits exactly `2^(n-k-1)` strings.

pub mod archive;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::expander::{self, Seed, SeedSpace};
use crate::gf2::BitString;
use crate::isolation::{isolates_among, isolation_flags};
use crate::language::LanguageSlice;

pub use archive::{read_archive, write_archive, Archive};

/// Fixed per-record overhead: a 64-bit seed field and a 16-bit index field.
/// It stands in for the logarithmic term of the length bound.
pub const RECORD_OVERHEAD_BITS: usize = 80;

/// `(n, k, seed, index, digest)`: a compressed string, and equally a
/// distinguishing program for it.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CompressedRecord {
    pub n: usize,
    pub k: usize,
    pub seed: Seed,
    /// 1-based position of the isolating hash in the tuple.
    pub index: u16,
    pub digest: BitString,
}

impl CompressedRecord {
    pub fn new(n: usize, k: usize, seed: Seed, index: u16, digest: BitString) -> Result<Self> {
        let r = CompressedRecord {
            n,
            k,
            seed,
            index,
            digest,
        };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k + 1 > self.n {
            return Err(Error::DigestTooWide {
                digest_bits: self.k + 1,
                n: self.n,
            });
        }
        if self.index == 0 || self.index as usize > self.k + 1 {
            return Err(Error::dim(format!(
                "index {} outside [1, {}]",
                self.index,
                self.k + 1
            )));
        }
        if self.digest.len() != self.k + 1 {
            return Err(Error::dim(format!(
                "digest has {} bits, expected {}",
                self.digest.len(),
                self.k + 1
            )));
        }
        Ok(())
    }
}

/// Payload size in bits: `(k+1) + 80`.
pub fn compressed_bits(r: &CompressedRecord) -> usize {
    r.k + 1 + RECORD_OVERHEAD_BITS
}

fn check_k(lang: &LanguageSlice, k: usize) -> Result<()> {
    if k + 1 > lang.n() {
        return Err(Error::DigestTooWide {
            digest_bits: k + 1,
            n: lang.n(),
        });
    }
    if k + 1 > u16::MAX as usize {
        return Err(Error::Config(format!("k = {k} does not fit the 16-bit index field")));
    }
    Ok(())
}

/// Compresses `x`, taking the smallest qualifying seed and then the
/// smallest qualifying index.
pub fn encode(
    x: &BitString,
    lang: &LanguageSlice,
    k: usize,
    space: SeedSpace,
) -> Result<CompressedRecord> {
    check_k(lang, k)?;
    if !lang.member(x)? {
        return Err(Error::NotInLanguage(format!("{x} is not in {}", lang.spec())));
    }
    let members = lang.members()?;
    let n = lang.n();
    for s in 0..space.size() {
        let t = expander::expand(Seed(s), n, k)?;
        for (i, h) in t.matrices().iter().enumerate() {
            if h.is_full_row_rank() && isolates_among(h, x, &members) {
                return CompressedRecord::new(n, k, Seed(s), (i + 1) as u16, h.matvec(x)?);
            }
        }
    }
    Err(Error::SeedSpaceExhausted { space: space.size() })
}

/// Compresses many members at once. The result equals calling [`encode`]
/// on each string; seeds are swept once and digests are bucketed per seed.
pub fn encode_many(
    xs: &[BitString],
    lang: &LanguageSlice,
    k: usize,
    space: SeedSpace,
) -> Result<Vec<CompressedRecord>> {
    check_k(lang, k)?;
    let members = lang.members()?;
    let mut pending = Vec::with_capacity(xs.len());
    for (slot, x) in xs.iter().enumerate() {
        if x.len() != lang.n() {
            return Err(Error::dim(format!(
                "string of length {} for a slice of length {}",
                x.len(),
                lang.n()
            )));
        }
        match members.binary_search(x) {
            Ok(pos) => pending.push((slot, pos)),
            Err(_) => return Err(Error::NotInLanguage(format!("{x} is not in {}", lang.spec()))),
        }
    }
    let n = lang.n();
    let mut out: Vec<Option<CompressedRecord>> = vec![None; xs.len()];
    for s in 0..space.size() {
        if pending.is_empty() {
            break;
        }
        let t = expander::expand(Seed(s), n, k)?;
        let flags: Vec<Option<Vec<bool>>> = t
            .matrices()
            .par_iter()
            .map(|h| h.is_full_row_rank().then(|| isolation_flags(h, &members)))
            .collect();
        let mut still = Vec::new();
        for (slot, pos) in pending {
            let hit = flags
                .iter()
                .position(|f| f.as_ref().is_some_and(|f| f[pos]));
            match hit {
                Some(i) => {
                    let digest = t.matrices()[i].matvec(&xs[slot])?;
                    out[slot] = Some(CompressedRecord::new(n, k, Seed(s), (i + 1) as u16, digest)?);
                }
                None => still.push((slot, pos)),
            }
        }
        pending = still;
    }
    if !pending.is_empty() {
        return Err(Error::SeedSpaceExhausted { space: space.size() });
    }
    Ok(out.into_iter().map(|r| r.expect("all slots filled")).collect())
}

/// Result of a decode with its work counter.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Decoded {
    pub value: BitString,
    /// Candidates drawn from the preimage walk.
    pub examined: u64,
}

pub fn decode(r: &CompressedRecord, lang: &LanguageSlice) -> Result<BitString> {
    decode_counted(r, lang).map(|d| d.value)
}

/// Decodes and reports how many preimage candidates were examined.
pub fn decode_counted(r: &CompressedRecord, lang: &LanguageSlice) -> Result<Decoded> {
    r.validate()?;
    if lang.n() != r.n {
        return Err(Error::dim(format!(
            "record of length {} against a slice of length {}",
            r.n,
            lang.n()
        )));
    }
    let t = expander::expand(r.seed, r.n, r.k)?;
    let h = t.member(r.index as usize).expect("index validated");
    let mut found = None;
    let mut survivors = 0u64;
    let mut examined = 0u64;
    for candidate in h.enumerate_preimages(&r.digest)? {
        examined += 1;
        if lang.contains(&candidate) {
            survivors += 1;
            found.get_or_insert(candidate);
        }
    }
    match (survivors, found) {
        (1, Some(value)) => Ok(Decoded { value, examined }),
        (0, _) => Err(Error::CorruptRecord),
        (survivors, _) => Err(Error::AmbiguousRecord { survivors }),
    }
}

/// Decodes records independently, in parallel, preserving order.
pub fn decode_many(records: &[CompressedRecord], lang: &LanguageSlice) -> Result<Vec<Decoded>> {
    records.par_iter().map(|r| decode_counted(r, lang)).collect()
}
