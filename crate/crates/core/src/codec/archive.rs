//! The ILC1 archive format. All integers are little-endian.
//!
//! ```text
//! magic    "ILC1"            4 bytes
//! version  0x01              1 byte
//! n                          u16
//! k                          u16
//! spec_len                   u16
//! spec                       spec_len bytes of UTF-8
//! count                      u32
//! count x {
//!     seed                   u64
//!     index (1-based)        u16
//!     digest                 ceil((k+1)/8) bytes, digest bit 0 = LSB of byte 0
//! }
//! ```

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::expander::Seed;
use crate::gf2::BitString;

use super::CompressedRecord;

pub const MAGIC: &[u8; 4] = b"ILC1";
pub const VERSION: u8 = 0x01;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Archive {
    pub n: usize,
    pub k: usize,
    pub lang_spec: String,
    pub records: Vec<CompressedRecord>,
}

impl Archive {
    pub fn new(n: usize, k: usize, lang_spec: impl Into<String>, records: Vec<CompressedRecord>) -> Self {
        Archive {
            n,
            k,
            lang_spec: lang_spec.into(),
            records,
        }
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        write_archive(&mut out, self)?;
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut cur = Cursor { buf: bytes, pos: 0 };
        let a = parse(&mut cur)?;
        if cur.pos != bytes.len() {
            return Err(Error::Format(format!(
                "{} trailing bytes after the last record",
                bytes.len() - cur.pos
            )));
        }
        Ok(a)
    }
}

fn field<T: TryFrom<usize>>(v: usize, what: &str) -> Result<T> {
    T::try_from(v).map_err(|_| Error::Format(format!("{what} = {v} does not fit its field")))
}

pub fn write_archive<W: Write>(mut sink: W, archive: &Archive) -> Result<()> {
    let Archive { n, k, lang_spec, records } = archive;
    if k + 1 > *n {
        return Err(Error::DigestTooWide { digest_bits: k + 1, n: *n });
    }
    for r in records {
        r.validate()?;
        if r.n != *n || r.k != *k {
            return Err(Error::Format(format!(
                "record with (n, k) = ({}, {}) in an archive for ({n}, {k})",
                r.n, r.k
            )));
        }
    }
    let mut buf = Vec::with_capacity(16 + lang_spec.len() + records.len() * (10 + k / 8 + 1));
    buf.extend_from_slice(MAGIC);
    buf.push(VERSION);
    buf.extend_from_slice(&field::<u16>(*n, "n")?.to_le_bytes());
    buf.extend_from_slice(&field::<u16>(*k, "k")?.to_le_bytes());
    buf.extend_from_slice(&field::<u16>(lang_spec.len(), "spec length")?.to_le_bytes());
    buf.extend_from_slice(lang_spec.as_bytes());
    buf.extend_from_slice(&field::<u32>(records.len(), "record count")?.to_le_bytes());
    for r in records {
        buf.extend_from_slice(&r.seed.0.to_le_bytes());
        buf.extend_from_slice(&r.index.to_le_bytes());
        buf.extend_from_slice(&r.digest.to_bytes());
    }
    sink.write_all(&buf)?;
    Ok(())
}

pub fn read_archive<R: Read>(mut source: R) -> Result<Archive> {
    let mut bytes = Vec::new();
    source.read_to_end(&mut bytes)?;
    Archive::from_bytes(&bytes)
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, len: usize, what: &str) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(len).filter(|&e| e <= self.buf.len()).ok_or_else(|| {
            Error::Format(format!("truncated archive while reading {what} at byte {}", self.pos))
        })?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn array<const N: usize>(&mut self, what: &str) -> Result<[u8; N]> {
        Ok(self.take(N, what)?.try_into().expect("length matches"))
    }
}

fn parse(cur: &mut Cursor<'_>) -> Result<Archive> {
    if cur.take(4, "magic")? != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let version = cur.array::<1>("version")?[0];
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let n = u16::from_le_bytes(cur.array("n")?) as usize;
    let k = u16::from_le_bytes(cur.array("k")?) as usize;
    if n == 0 || k + 1 > n {
        return Err(Error::Format(format!("invalid shape n = {n}, k = {k}")));
    }
    let spec_len = u16::from_le_bytes(cur.array("spec length")?) as usize;
    let lang_spec = std::str::from_utf8(cur.take(spec_len, "language spec")?)
        .map_err(|_| Error::Format("language spec is not UTF-8".into()))?
        .to_owned();
    let count = u32::from_le_bytes(cur.array("record count")?) as usize;
    let digest_bytes = (k + 1).div_ceil(8);
    let remaining = cur.buf.len() - cur.pos;
    if count.saturating_mul(10 + digest_bytes) > remaining {
        return Err(Error::Format(format!(
            "truncated archive: {count} records need more than {remaining} bytes"
        )));
    }
    let mut records = Vec::with_capacity(count);
    for i in 0..count {
        let seed = Seed(u64::from_le_bytes(cur.array("seed")?));
        let index = u16::from_le_bytes(cur.array("index")?);
        let digest = BitString::from_bytes(k + 1, cur.take(digest_bytes, "digest")?)
            .map_err(|e| Error::Format(format!("record {i}: {e}")))?;
        let r = CompressedRecord::new(n, k, seed, index, digest)
            .map_err(|e| Error::Format(format!("record {i}: {e}")))?;
        records.push(r);
    }
    Ok(Archive { n, k, lang_spec, records })
}
