//! Deterministic expansion of a short seed into a tuple of hash matrices.
//!
//! The bit stream is splitmix64. For seed `s` and shape `(n, k)` the state
//! starts at `s * GOLDEN ^ (n << 32) ^ k`; each step adds `GOLDEN` and
//! emits the mixed state. The `k+1` matrices, each `(k+1) x n`, are filled
//! matrix by matrix, row-major, taking bits least significant first from
//! consecutive words. Bits run on across row and matrix boundaries.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::gf2::{Gf2Matrix, HashTuple};

pub const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// The splitmix64 generator over a raw state.
#[derive(Clone, Debug)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn from_state(state: u64) -> Self {
        SplitMix64 { state }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN);
        mix64(self.state)
    }
}

/// A seed value. The enclosing [`SeedSpace`] bounds it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Seed(pub u64);

impl fmt::Display for Seed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Seeds range over `[0, 2^bits)`, `bits <= 32`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SeedSpace {
    bits: u32,
}

impl SeedSpace {
    pub const MAX_BITS: u32 = 32;

    pub fn with_bits(bits: u32) -> Result<Self> {
        if bits > Self::MAX_BITS {
            return Err(Error::Config(format!(
                "seed space 2^{bits} exceeds 2^{}",
                Self::MAX_BITS
            )));
        }
        Ok(SeedSpace { bits })
    }

    pub fn bits(self) -> u32 {
        self.bits
    }

    pub fn size(self) -> u64 {
        1u64 << self.bits
    }

    pub fn contains(self, seed: Seed) -> bool {
        seed.0 < self.size()
    }

    pub fn check(self, seed: Seed) -> Result<Seed> {
        if self.contains(seed) {
            Ok(seed)
        } else {
            Err(Error::Config(format!("seed {seed} outside [0, {})", self.size())))
        }
    }
}

impl Default for SeedSpace {
    fn default() -> Self {
        SeedSpace { bits: 16 }
    }
}

impl FromStr for SeedSpace {
    type Err = Error;

    /// Accepts `2^B` or a plain power of two.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("seed space {s:?} is not 2^B or a power of two"));
        let s = s.trim();
        if let Some(exp) = s.strip_prefix("2^") {
            return Self::with_bits(exp.parse().map_err(|_| bad())?);
        }
        let v: u64 = s.parse().map_err(|_| bad())?;
        if !v.is_power_of_two() {
            return Err(bad());
        }
        Self::with_bits(v.trailing_zeros())
    }
}

impl fmt::Display for SeedSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "2^{}", self.bits)
    }
}

/// Initial stream state for `(seed, n, k)`.
pub fn initial_state(seed: Seed, n: usize, k: usize) -> u64 {
    seed.0.wrapping_mul(GOLDEN) ^ ((n as u64) << 32) ^ k as u64
}

fn check_shape(n: usize, k: usize) -> Result<()> {
    if k + 1 > n {
        return Err(Error::DigestTooWide { digest_bits: k + 1, n });
    }
    Ok(())
}

/// Fills a hash tuple of shape `(n, k)` from an arbitrary splitmix state.
pub fn tuple_from_state(state: u64, n: usize, k: usize) -> Result<HashTuple> {
    check_shape(n, k)?;
    let rows = k + 1;
    let mut rng = SplitMix64::from_state(state);
    let mut word = 0u64;
    let mut left = 0u32;
    let mut matrices = Vec::with_capacity(rows);
    for _ in 0..rows {
        let mut m = Gf2Matrix::zeros(rows, n)?;
        for e in 0..rows * n {
            if left == 0 {
                word = rng.next_u64();
                left = 64;
            }
            m.set_flat(e, word & 1 == 1);
            word >>= 1;
            left -= 1;
        }
        matrices.push(m);
    }
    HashTuple::new(matrices)
}

/// Expands `seed` into `k+1` matrices of shape `(k+1) x n`.
pub fn expand(seed: Seed, n: usize, k: usize) -> Result<HashTuple> {
    tuple_from_state(initial_state(seed, n, k), n, k)
}

/// Independent sub-stream state for Monte Carlo trial `trial` under `mc_seed`.
/// It is output number `trial + 1` of the splitmix stream started at `mc_seed`,
/// so each trial is reachable without replaying earlier ones.
pub fn trial_state(mc_seed: Seed, trial: u64) -> u64 {
    mix64(mc_seed.0.wrapping_add(trial.wrapping_add(1).wrapping_mul(GOLDEN)))
}
