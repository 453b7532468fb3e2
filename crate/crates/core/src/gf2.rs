//! Bit-packed linear algebra over GF(2).
//!
//! Bit position `p` of a logical string lives in word `p / 64`, bit `p % 64`
//! (least significant first). Serialized to bytes this is byte `p / 8`,
//! bit `p % 8`. Position 0 is the leftmost character of the written form,
//! so `"100"` has only bit 0 set.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

const WORD: usize = 64;

#[inline]
fn words_for(bits: usize) -> usize {
    bits.div_ceil(WORD)
}

#[inline]
fn tail_mask(bits: usize) -> u64 {
    match bits % WORD {
        0 => u64::MAX,
        r => (1u64 << r) - 1,
    }
}

#[inline]
fn parity_of_and(a: &[u64], b: &[u64]) -> bool {
    let mut acc = 0u64;
    for (x, y) in a.iter().zip(b) {
        acc ^= x & y;
    }
    acc.count_ones() & 1 == 1
}

/// A fixed-length binary string.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitString {
    len: usize,
    words: Vec<u64>,
}

impl BitString {
    pub fn zeros(len: usize) -> Result<Self> {
        if len == 0 {
            return Err(Error::dim("bit strings must have length at least 1"));
        }
        Ok(BitString {
            len,
            words: vec![0; words_for(len)],
        })
    }

    pub fn from_bits(bits: &[bool]) -> Result<Self> {
        let mut s = Self::zeros(bits.len())?;
        for (p, &b) in bits.iter().enumerate() {
            s.set(p, b);
        }
        Ok(s)
    }

    /// Builds the string whose rank in lexicographic order of `{0,1}^len`
    /// is `index`; position 0 carries the most significant bit.
    pub fn from_lex_index(len: usize, index: u64) -> Result<Self> {
        if len > 64 || (len < 64 && index >> len != 0) {
            return Err(Error::dim(format!(
                "index {index} does not fit a string of length {len}"
            )));
        }
        let mut s = Self::zeros(len)?;
        s.words[0] = index.reverse_bits() >> (WORD - len);
        Ok(s)
    }

    /// Inverse of [`BitString::from_lex_index`]; `None` for strings longer than 64.
    pub fn lex_index(&self) -> Option<u64> {
        if self.len > 64 {
            return None;
        }
        Some(self.words[0].reverse_bits() >> (WORD - self.len))
    }

    /// Packs the bits LSB-first into `ceil(len/8)` bytes.
    pub fn to_bytes(&self) -> Vec<u8> {
        let nbytes = self.len.div_ceil(8);
        let mut out = Vec::with_capacity(nbytes);
        for b in 0..nbytes {
            out.push((self.words[b / 8] >> ((b % 8) * 8)) as u8);
        }
        out
    }

    pub fn from_bytes(len: usize, bytes: &[u8]) -> Result<Self> {
        let mut s = Self::zeros(len)?;
        if bytes.len() != len.div_ceil(8) {
            return Err(Error::dim(format!(
                "{} bytes cannot hold exactly {len} bits",
                bytes.len()
            )));
        }
        for (b, &byte) in bytes.iter().enumerate() {
            s.words[b / 8] |= (byte as u64) << ((b % 8) * 8);
        }
        if s.words[s.words.len() - 1] & !tail_mask(len) != 0 {
            return Err(Error::dim("padding bits beyond the string length are set"));
        }
        Ok(s)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    /// Always false; bit strings have at least one position.
    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    #[inline]
    pub fn get(&self, p: usize) -> bool {
        assert!(p < self.len, "bit {p} out of range for length {}", self.len);
        self.words[p / WORD] >> (p % WORD) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, p: usize, value: bool) {
        assert!(p < self.len, "bit {p} out of range for length {}", self.len);
        let mask = 1u64 << (p % WORD);
        if value {
            self.words[p / WORD] |= mask;
        } else {
            self.words[p / WORD] &= !mask;
        }
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn xor(&self, other: &BitString) -> Result<BitString> {
        if self.len != other.len {
            return Err(Error::dim(format!(
                "cannot xor strings of length {} and {}",
                self.len, other.len
            )));
        }
        let mut out = self.clone();
        out.xor_words(&other.words);
        Ok(out)
    }

    #[inline]
    fn xor_words(&mut self, other: &[u64]) {
        for (a, b) in self.words.iter_mut().zip(other) {
            *a ^= b;
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |p| self.get(p))
    }
}

impl Ord for BitString {
    /// Shorter strings first, then lexicographic with position 0 most significant.
    fn cmp(&self, other: &Self) -> Ordering {
        self.len.cmp(&other.len).then_with(|| {
            for (a, b) in self.words.iter().zip(&other.words) {
                if a != b {
                    return a.reverse_bits().cmp(&b.reverse_bits());
                }
            }
            Ordering::Equal
        })
    }
}

impl PartialOrd for BitString {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: String = self.iter().map(|b| if b { '1' } else { '0' }).collect();
        f.write_str(&s)
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitString({self})")
    }
}

impl FromStr for BitString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bits = s
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::dim(format!("invalid bit character {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_bits(&bits)
    }
}

/// A dense `rows x cols` matrix over GF(2), one linear hash `h(x) = Hx`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Gf2Matrix {
    rows: usize,
    cols: usize,
    stride: usize,
    data: Vec<u64>,
}

impl Gf2Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::dim(format!("matrix shape {rows}x{cols} is empty")));
        }
        let stride = words_for(cols);
        Ok(Gf2Matrix {
            rows,
            cols,
            stride,
            data: vec![0; rows * stride],
        })
    }

    pub fn from_rows(rows: &[BitString]) -> Result<Self> {
        let cols = rows.first().map_or(0, BitString::len);
        let mut m = Self::zeros(rows.len(), cols)?;
        for (r, row) in rows.iter().enumerate() {
            if row.len() != cols {
                return Err(Error::dim("rows have different lengths"));
            }
            m.row_mut(r).copy_from_slice(row.words());
        }
        Ok(m)
    }

    /// Parses rows written as `0`/`1` strings, e.g. `["110", "011"]`.
    pub fn parse_rows<S: AsRef<str>>(rows: &[S]) -> Result<Self> {
        let rows = rows
            .iter()
            .map(|r| r.as_ref().parse())
            .collect::<Result<Vec<BitString>>>()?;
        Self::from_rows(&rows)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[u64] {
        &self.data[r * self.stride..(r + 1) * self.stride]
    }

    fn row_mut(&mut self, r: usize) -> &mut [u64] {
        &mut self.data[r * self.stride..(r + 1) * self.stride]
    }

    pub fn row_bits(&self, r: usize) -> BitString {
        BitString {
            len: self.cols,
            words: self.row(r).to_vec(),
        }
    }

    pub fn get(&self, r: usize, c: usize) -> bool {
        assert!(r < self.rows && c < self.cols);
        self.data[r * self.stride + c / WORD] >> (c % WORD) & 1 == 1
    }

    pub fn set(&mut self, r: usize, c: usize, value: bool) {
        assert!(r < self.rows && c < self.cols);
        let mask = 1u64 << (c % WORD);
        let w = &mut self.data[r * self.stride + c / WORD];
        if value {
            *w |= mask;
        } else {
            *w &= !mask;
        }
    }

    /// Sets entry `index` of the row-major flattening.
    pub(crate) fn set_flat(&mut self, index: usize, value: bool) {
        self.set(index / self.cols, index % self.cols, value)
    }

    fn check_input(&self, x: &BitString) -> Result<()> {
        if x.len() != self.cols {
            return Err(Error::dim(format!(
                "input of length {} for a matrix with {} columns",
                x.len(),
                self.cols
            )));
        }
        Ok(())
    }

    pub fn matvec(&self, x: &BitString) -> Result<BitString> {
        self.check_input(x)?;
        let mut out = BitString::zeros(self.rows)?;
        for r in 0..self.rows {
            if parity_of_and(self.row(r), x.words()) {
                out.words[r / WORD] |= 1 << (r % WORD);
            }
        }
        Ok(out)
    }

    /// Digest packed into one word (bit `r` = row `r`). Requires `rows <= 64`
    /// and a correctly sized input; callers check both.
    #[inline]
    pub(crate) fn matvec_word(&self, x: &BitString) -> u64 {
        debug_assert!(self.rows <= WORD && x.len() == self.cols);
        let mut out = 0u64;
        for r in 0..self.rows {
            out |= (parity_of_and(self.row(r), x.words()) as u64) << r;
        }
        out
    }

    pub fn rank(&self) -> usize {
        let mut work = self.data.clone();
        let mut rank = 0;
        for c in 0..self.cols {
            if rank == self.rows {
                break;
            }
            let (wi, mask) = (c / WORD, 1u64 << (c % WORD));
            let Some(p) = (rank..self.rows).find(|&r| work[r * self.stride + wi] & mask != 0)
            else {
                continue;
            };
            swap_rows(&mut work, self.stride, rank, p);
            for r in rank + 1..self.rows {
                if work[r * self.stride + wi] & mask != 0 {
                    xor_rows(&mut work, self.stride, r, rank);
                }
            }
            rank += 1;
        }
        rank
    }

    pub fn is_full_row_rank(&self) -> bool {
        self.rows <= self.cols && self.rank() == self.rows
    }

    /// Solves `Hx = y`. On success returns the particular solution with all
    /// free coordinates zero and one kernel basis vector per free column, in
    /// increasing column order. Pivots are taken leftmost-first.
    pub fn solve_affine(&self, y: &BitString) -> Result<Option<AffineSolution>> {
        if y.len() != self.rows {
            return Err(Error::dim(format!(
                "target of length {} for a matrix with {} rows",
                y.len(),
                self.rows
            )));
        }
        let mut work = self.data.clone();
        let mut rhs: Vec<bool> = y.iter().collect();
        let mut pivots: Vec<usize> = Vec::new();
        for c in 0..self.cols {
            let rank = pivots.len();
            if rank == self.rows {
                break;
            }
            let (wi, mask) = (c / WORD, 1u64 << (c % WORD));
            let Some(p) = (rank..self.rows).find(|&r| work[r * self.stride + wi] & mask != 0)
            else {
                continue;
            };
            swap_rows(&mut work, self.stride, rank, p);
            rhs.swap(rank, p);
            for r in 0..self.rows {
                if r != rank && work[r * self.stride + wi] & mask != 0 {
                    xor_rows(&mut work, self.stride, r, rank);
                    rhs[r] ^= rhs[rank];
                }
            }
            pivots.push(c);
        }
        let rank = pivots.len();
        if rhs[rank..].iter().any(|&b| b) {
            return Ok(None);
        }

        let mut particular = BitString::zeros(self.cols)?;
        for (i, &pc) in pivots.iter().enumerate() {
            particular.set(pc, rhs[i]);
        }
        let mut is_pivot = vec![false; self.cols];
        for &pc in &pivots {
            is_pivot[pc] = true;
        }
        let mut basis = Vec::with_capacity(self.cols - rank);
        for f in (0..self.cols).filter(|&c| !is_pivot[c]) {
            let mut v = BitString::zeros(self.cols)?;
            v.set(f, true);
            let (wi, mask) = (f / WORD, 1u64 << (f % WORD));
            for (i, &pc) in pivots.iter().enumerate() {
                if work[i * self.stride + wi] & mask != 0 {
                    v.set(pc, true);
                }
            }
            basis.push(v);
        }
        Ok(Some(AffineSolution { particular, basis }))
    }

    /// Streams the solution set of `Hx = y` in canonical order (see
    /// [`AffineSolution::iter`]). Empty when the system is inconsistent.
    pub fn enumerate_preimages(&self, y: &BitString) -> Result<Preimages> {
        match self.solve_affine(y)? {
            Some(sol) => sol.into_iter(),
            None => Ok(Preimages::empty()),
        }
    }
}

fn swap_rows(work: &mut [u64], stride: usize, a: usize, b: usize) {
    if a != b {
        for w in 0..stride {
            work.swap(a * stride + w, b * stride + w);
        }
    }
}

fn xor_rows(work: &mut [u64], stride: usize, dst: usize, src: usize) {
    for w in 0..stride {
        let v = work[src * stride + w];
        work[dst * stride + w] ^= v;
    }
}

impl fmt::Debug for Gf2Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<String> = (0..self.rows).map(|r| self.row_bits(r).to_string()).collect();
        write!(f, "Gf2Matrix[{}]", rows.join(","))
    }
}

/// An affine subspace `particular + span(basis)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AffineSolution {
    pub particular: BitString,
    pub basis: Vec<BitString>,
}

impl AffineSolution {
    /// Number of points, `None` if it exceeds `u64`.
    pub fn count(&self) -> Option<u64> {
        1u64.checked_shl(self.basis.len() as u32)
            .filter(|_| self.basis.len() < 64)
    }

    /// Walks the points by increasing coefficient value `c`, where the
    /// first basis vector (lowest free column) is the most significant bit
    /// of `c`. For coordinate projections this is lexicographic order.
    pub fn iter(&self) -> Result<Preimages> {
        self.clone().into_iter()
    }

    fn into_iter(self) -> Result<Preimages> {
        let dim = self.basis.len();
        if dim >= 64 {
            return Err(Error::EnumerationUnsupported(format!(
                "affine space of dimension {dim} is too large to walk"
            )));
        }
        // prefix[t] = xor of the basis vectors driven by coefficient bits 0..=t
        let mut prefix = Vec::with_capacity(dim);
        let mut acc = BitString::zeros(self.particular.len())?;
        for v in self.basis.iter().rev() {
            acc.xor_words(v.words());
            prefix.push(acc.clone());
        }
        Ok(Preimages {
            current: Some(self.particular),
            prefix,
            next_coeff: 0,
            total: 1u64 << dim,
        })
    }
}

/// Iterator over an affine solution set; see [`AffineSolution::iter`].
#[derive(Clone, Debug)]
pub struct Preimages {
    current: Option<BitString>,
    prefix: Vec<BitString>,
    next_coeff: u64,
    total: u64,
}

impl Preimages {
    fn empty() -> Self {
        Preimages {
            current: None,
            prefix: Vec::new(),
            next_coeff: 0,
            total: 0,
        }
    }

    /// Total number of points in the walk.
    pub fn total(&self) -> u64 {
        self.total
    }
}

impl Iterator for Preimages {
    type Item = BitString;

    fn next(&mut self) -> Option<BitString> {
        if self.next_coeff >= self.total {
            return None;
        }
        let cur = self.current.as_mut()?;
        if self.next_coeff > 0 {
            let flipped = self.next_coeff.trailing_zeros() as usize;
            cur.xor_words(self.prefix[flipped].words());
        }
        self.next_coeff += 1;
        Some(cur.clone())
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = (self.total - self.next_coeff) as usize;
        (left, Some(left))
    }
}

/// An ordered tuple of `k+1` hash matrices, each `(k+1) x n`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct HashTuple {
    members: Vec<Gf2Matrix>,
}

impl HashTuple {
    pub fn new(members: Vec<Gf2Matrix>) -> Result<Self> {
        let Some(first) = members.first() else {
            return Err(Error::dim("hash tuple is empty"));
        };
        let (rows, cols) = (first.rows(), first.cols());
        if members.iter().any(|m| m.rows() != rows || m.cols() != cols) {
            return Err(Error::dim("hash tuple members differ in shape"));
        }
        if members.len() != rows {
            return Err(Error::dim(format!(
                "tuple has {} members but digests have {rows} bits",
                members.len()
            )));
        }
        Ok(HashTuple { members })
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Digest width `k + 1`.
    pub fn digest_bits(&self) -> usize {
        self.members[0].rows()
    }

    /// Input length `n`.
    pub fn input_bits(&self) -> usize {
        self.members[0].cols()
    }

    pub fn matrices(&self) -> &[Gf2Matrix] {
        &self.members
    }

    /// Member `i` using the 1-based indexing of records.
    pub fn member(&self, i: usize) -> Option<&Gf2Matrix> {
        i.checked_sub(1).and_then(|i| self.members.get(i))
    }
}
