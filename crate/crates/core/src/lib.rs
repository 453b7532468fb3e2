//! Compression of language members by GF(2) linear-hash isolation.
//!
//! For a slice `A^{=n}` with `k = ceil(log2 |A^{=n}|)`, every member `x` is
//! written as `(k, seed, i, h_i(x))`: a short seed expands to `k+1` random
//! `(k+1) x n` matrices over GF(2), and `h_i` is one that separates `x` from
//! every other member. The payload is `k + 81` bits. Decoding rebuilds `h_i`
//! and searches its preimage of the digest for the one member.
//!
//! * [`gf2`]: bit strings, matrices, rank and affine preimages.
//! * [`language`]: membership oracles and enumerators for `A^{=n}`.
//! * [`expander`]: the deterministic seed-to-matrices stream.
//! * [`isolation`]: the covering predicates, Monte Carlo estimates and seed search.
//! * [`codec`]: per-string compressor, decompressor and the ILC1 archive.
//! * [`distinguisher`]: descriptors that accept exactly one member.
//! * [`coverfree`]: k-cover-free families and the Dyachkov–Rykov bound.
//! * [`cli`]: the `ilc` command line.

pub mod cli;
pub mod codec;
pub mod coverfree;
pub mod distinguisher;
pub mod error;
pub mod expander;
pub mod gf2;
pub mod isolation;
pub mod language;

pub use codec::{compressed_bits, decode, encode, CompressedRecord};
pub use error::{Error, Result};
pub use expander::{Seed, SeedSpace};
pub use gf2::{BitString, Gf2Matrix, HashTuple};
pub use isolation::Variant;
pub use language::LanguageSlice;
