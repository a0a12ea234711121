//! Exact linear algebra over the prime field F_p.
//!
//! Everything downstream (Margolis homology, spectral sequence pages, minimal
//! resolutions) reduces to rank/kernel/solve questions over F_p, so this module
//! keeps those primitives small, deterministic and exact. Matrices are dense:
//! bit-packed rows at p = 2, one byte per entry at odd primes. A sparse triplet
//! builder is provided for assembling differentials.
//!
//! Pivoting is deterministic (first nonzero column, first nonzero row), so
//! `solve` and everything built on it is reproducible run to run.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LinalgError {
    #[error("{context}: expected length {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("modulus mismatch: {0} vs {1}")]
    ModulusMismatch(u32, u32),
    #[error("{0} is not a prime in the supported range 2..=251")]
    InvalidPrime(u32),
    #[error("inconsistent subquotient: a boundary vector is not in the span of the cycles")]
    BoundaryNotInCycles,
}

fn is_prime(p: u32) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= p {
        if p.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// A validated prime modulus. This is the shared arithmetic context: scalars
/// are plain `u32` values in `[0, p)` and all reductions go through here.
///
/// Primes are capped at 251 so that matrix entries fit in a byte.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Prime(u32);

impl Prime {
    pub fn new(p: u32) -> Result<Prime, LinalgError> {
        if p > 251 || !is_prime(p) {
            return Err(LinalgError::InvalidPrime(p));
        }
        Ok(Prime(p))
    }

    #[inline]
    pub fn get(self) -> u32 {
        self.0
    }

    #[inline]
    pub fn add(self, a: u32, b: u32) -> u32 {
        let s = a + b;
        if s >= self.0 {
            s - self.0
        } else {
            s
        }
    }

    #[inline]
    pub fn sub(self, a: u32, b: u32) -> u32 {
        if a >= b {
            a - b
        } else {
            a + self.0 - b
        }
    }

    #[inline]
    pub fn mul(self, a: u32, b: u32) -> u32 {
        a * b % self.0
    }

    #[inline]
    pub fn neg(self, a: u32) -> u32 {
        if a == 0 {
            0
        } else {
            self.0 - a
        }
    }

    /// Multiplicative inverse of a nonzero scalar, via Fermat.
    pub fn inv(self, a: u32) -> u32 {
        assert!(!a.is_multiple_of(self.0), "inverse of zero mod {}", self.0);
        let mut base = a % self.0;
        let mut exp = self.0 - 2;
        let mut acc = 1u32;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            exp >>= 1;
        }
        acc
    }

    /// Canonical representative in `[0, p)` of an arbitrary integer.
    #[inline]
    pub fn reduce(self, v: i64) -> u32 {
        v.rem_euclid(self.0 as i64) as u32
    }

    /// `(-1)^k` as an element of F_p.
    #[inline]
    pub fn sign(self, k: u32) -> u32 {
        if k.is_multiple_of(2) {
            1
        } else {
            self.neg(1)
        }
    }
}

/// A dense vector over F_p. One byte per entry regardless of p; vectors are
/// small and cold compared to matrices, so uniformity wins here.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FpVector {
    p: Prime,
    entries: Vec<u8>,
}

impl FpVector {
    pub fn zero(p: Prime, len: usize) -> FpVector {
        FpVector {
            p,
            entries: vec![0; len],
        }
    }

    pub fn from_entries(p: Prime, entries: &[u32]) -> FpVector {
        FpVector {
            p,
            entries: entries.iter().map(|&e| (e % p.get()) as u8).collect(),
        }
    }

    #[inline]
    pub fn prime(&self) -> Prime {
        self.p
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    #[inline]
    pub fn entry(&self, i: usize) -> u32 {
        self.entries[i] as u32
    }

    #[inline]
    pub fn set_entry(&mut self, i: usize, v: u32) {
        self.entries[i] = (v % self.p.get()) as u8;
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|&e| e == 0)
    }

    pub fn first_nonzero(&self) -> Option<usize> {
        self.entries.iter().position(|&e| e != 0)
    }

    pub fn iter(&self) -> impl Iterator<Item = u32> + '_ {
        self.entries.iter().map(|&e| e as u32)
    }

    pub fn iter_nonzero(&self) -> impl Iterator<Item = (usize, u32)> + '_ {
        self.entries
            .iter()
            .enumerate()
            .filter(|(_, &e)| e != 0)
            .map(|(i, &e)| (i, e as u32))
    }

    /// `self += c * other`.
    pub fn add_scaled(&mut self, other: &FpVector, c: u32) {
        assert_eq!(self.entries.len(), other.entries.len());
        let p = self.p;
        for (a, &b) in self.entries.iter_mut().zip(&other.entries) {
            *a = p.add(*a as u32, p.mul(c, b as u32)) as u8;
        }
    }

    pub fn scale(&mut self, c: u32) {
        let p = self.p;
        for a in self.entries.iter_mut() {
            *a = p.mul(*a as u32, c) as u8;
        }
    }
}

impl fmt::Display for FpVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, e) in self.entries.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, ")")
    }
}

/// Row storage backends. Gaussian elimination is written once against this
/// interface; the p = 2 backend packs 64 entries per word and does whole-word
/// XOR in `axpy`.
trait RowStore {
    fn rows(&self) -> usize;
    fn cols(&self) -> usize;
    fn get(&self, r: usize, c: usize) -> u32;
    fn set(&mut self, r: usize, c: usize, v: u32);
    fn swap_rows(&mut self, a: usize, b: usize);
    fn scale_row(&mut self, r: usize, by: u32, p: Prime);
    /// `row[dst] += factor * row[src]`.
    fn axpy(&mut self, dst: usize, src: usize, factor: u32, p: Prime);
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct BitRows {
    rows: usize,
    cols: usize,
    words_per_row: usize,
    words: Vec<u64>,
}

impl BitRows {
    fn zero(rows: usize, cols: usize) -> BitRows {
        let words_per_row = cols.div_ceil(64);
        BitRows {
            rows,
            cols,
            words_per_row,
            words: vec![0; rows * words_per_row],
        }
    }
}

impl RowStore for BitRows {
    fn rows(&self) -> usize {
        self.rows
    }
    fn cols(&self) -> usize {
        self.cols
    }
    fn get(&self, r: usize, c: usize) -> u32 {
        let w = self.words[r * self.words_per_row + c / 64];
        ((w >> (c % 64)) & 1) as u32
    }
    fn set(&mut self, r: usize, c: usize, v: u32) {
        let w = &mut self.words[r * self.words_per_row + c / 64];
        if v & 1 == 1 {
            *w |= 1 << (c % 64);
        } else {
            *w &= !(1 << (c % 64));
        }
    }
    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        let wpr = self.words_per_row;
        for k in 0..wpr {
            self.words.swap(a * wpr + k, b * wpr + k);
        }
    }
    fn scale_row(&mut self, _r: usize, _by: u32, _p: Prime) {
        // the only nonzero scalar is 1
    }
    fn axpy(&mut self, dst: usize, src: usize, factor: u32, _p: Prime) {
        if factor & 1 == 0 {
            return;
        }
        let wpr = self.words_per_row;
        let (d, s) = (dst * wpr, src * wpr);
        for k in 0..wpr {
            let v = self.words[s + k];
            self.words[d + k] ^= v;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct ByteRows {
    rows: usize,
    cols: usize,
    data: Vec<u8>,
}

impl ByteRows {
    fn zero(rows: usize, cols: usize) -> ByteRows {
        ByteRows {
            rows,
            cols,
            data: vec![0; rows * cols],
        }
    }
}

impl RowStore for ByteRows {
    fn rows(&self) -> usize {
        self.rows
    }
    fn cols(&self) -> usize {
        self.cols
    }
    fn get(&self, r: usize, c: usize) -> u32 {
        self.data[r * self.cols + c] as u32
    }
    fn set(&mut self, r: usize, c: usize, v: u32) {
        self.data[r * self.cols + c] = v as u8;
    }
    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        let cols = self.cols;
        for k in 0..cols {
            self.data.swap(a * cols + k, b * cols + k);
        }
    }
    fn scale_row(&mut self, r: usize, by: u32, p: Prime) {
        if by == 1 {
            return;
        }
        let cols = self.cols;
        for k in 0..cols {
            let e = &mut self.data[r * cols + k];
            *e = p.mul(*e as u32, by) as u8;
        }
    }
    fn axpy(&mut self, dst: usize, src: usize, factor: u32, p: Prime) {
        if factor == 0 {
            return;
        }
        let cols = self.cols;
        for k in 0..cols {
            let s = self.data[src * cols + k] as u32;
            let d = &mut self.data[dst * cols + k];
            *d = p.add(*d as u32, p.mul(factor, s)) as u8;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Storage {
    Bits(BitRows),
    Bytes(ByteRows),
}

/// Reduce to reduced row-echelon form in place. Returns the pivot columns in
/// strictly increasing order.
fn row_reduce<S: RowStore>(s: &mut S, p: Prime) -> Vec<usize> {
    let rows = s.rows();
    let cols = s.cols();
    let mut pivots = Vec::new();
    let mut pr = 0;
    for col in 0..cols {
        if pr == rows {
            break;
        }
        let Some(r) = (pr..rows).find(|&r| s.get(r, col) != 0) else {
            continue;
        };
        s.swap_rows(r, pr);
        let lead = s.get(pr, col);
        s.scale_row(pr, p.inv(lead), p);
        for r2 in 0..rows {
            if r2 == pr {
                continue;
            }
            let f = s.get(r2, col);
            if f != 0 {
                s.axpy(r2, pr, p.neg(f), p);
            }
        }
        pivots.push(col);
        pr += 1;
    }
    pivots
}

/// A dense matrix over F_p with exact arithmetic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FpMatrix {
    p: Prime,
    rows: usize,
    cols: usize,
    storage: Storage,
}

impl FpMatrix {
    pub fn zero(p: Prime, rows: usize, cols: usize) -> FpMatrix {
        let storage = if p.get() == 2 {
            Storage::Bits(BitRows::zero(rows, cols))
        } else {
            Storage::Bytes(ByteRows::zero(rows, cols))
        };
        FpMatrix {
            p,
            rows,
            cols,
            storage,
        }
    }

    pub fn identity(p: Prime, n: usize) -> FpMatrix {
        let mut m = FpMatrix::zero(p, n, n);
        for i in 0..n {
            m.set(i, i, 1);
        }
        m
    }

    pub fn from_rows(p: Prime, rows: &[Vec<u32>]) -> FpMatrix {
        let cols = rows.first().map_or(0, Vec::len);
        let mut m = FpMatrix::zero(p, rows.len(), cols);
        for (r, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), cols, "ragged rows");
            for (c, &v) in row.iter().enumerate() {
                m.set(r, c, v % p.get());
            }
        }
        m
    }

    /// Assemble from sparse `(row, col, value)` triplets; duplicates accumulate.
    pub fn from_triplets(
        p: Prime,
        rows: usize,
        cols: usize,
        triplets: &[(usize, usize, u32)],
    ) -> FpMatrix {
        let mut m = FpMatrix::zero(p, rows, cols);
        for &(r, c, v) in triplets {
            let cur = m.get(r, c);
            m.set(r, c, p.add(cur, v % p.get()));
        }
        m
    }

    pub fn from_vector_rows(p: Prime, cols: usize, rows: &[FpVector]) -> FpMatrix {
        let mut m = FpMatrix::zero(p, rows.len(), cols);
        for (r, v) in rows.iter().enumerate() {
            assert_eq!(v.len(), cols);
            for (c, e) in v.iter_nonzero() {
                m.set(r, c, e);
            }
        }
        m
    }

    #[inline]
    pub fn prime(&self) -> Prime {
        self.p
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> u32 {
        match &self.storage {
            Storage::Bits(s) => s.get(r, c),
            Storage::Bytes(s) => s.get(r, c),
        }
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: u32) {
        let v = v % self.p.get();
        match &mut self.storage {
            Storage::Bits(s) => s.set(r, c, v),
            Storage::Bytes(s) => s.set(r, c, v),
        }
    }

    pub fn row(&self, r: usize) -> FpVector {
        let mut v = FpVector::zero(self.p, self.cols);
        for c in 0..self.cols {
            v.set_entry(c, self.get(r, c));
        }
        v
    }

    pub fn mul_vector(&self, x: &FpVector) -> Result<FpVector, LinalgError> {
        if x.len() != self.cols {
            return Err(LinalgError::DimensionMismatch {
                context: "matrix-vector product",
                expected: self.cols,
                got: x.len(),
            });
        }
        let mut out = FpVector::zero(self.p, self.rows);
        for r in 0..self.rows {
            let mut acc = 0u32;
            for (c, xv) in x.iter_nonzero() {
                acc = self.p.add(acc, self.p.mul(self.get(r, c), xv));
            }
            out.set_entry(r, acc);
        }
        Ok(out)
    }

    /// Reduced row-echelon form and the pivot columns, leaving `self` intact.
    pub fn rref(&self) -> (FpMatrix, Vec<usize>) {
        let mut m = self.clone();
        let pivots = match &mut m.storage {
            Storage::Bits(s) => row_reduce(s, self.p),
            Storage::Bytes(s) => row_reduce(s, self.p),
        };
        (m, pivots)
    }

    pub fn rank(&self) -> usize {
        self.rref().1.len()
    }

    /// A basis of `ker(self)`, one vector per free column, in increasing free
    /// column order. Each vector has a 1 in its free coordinate.
    pub fn kernel_basis(&self) -> Vec<FpVector> {
        let (r, pivots) = self.rref();
        let pivot_set: Vec<Option<usize>> = {
            let mut v = vec![None; self.cols];
            for (row, &col) in pivots.iter().enumerate() {
                v[col] = Some(row);
            }
            v
        };
        let mut basis = Vec::new();
        for (free, pivot) in pivot_set.iter().enumerate() {
            if pivot.is_some() {
                continue;
            }
            let mut v = FpVector::zero(self.p, self.cols);
            v.set_entry(free, 1);
            for (row, &col) in pivots.iter().enumerate() {
                let e = r.get(row, free);
                if e != 0 {
                    v.set_entry(col, self.p.neg(e));
                }
            }
            basis.push(v);
        }
        basis
    }

    /// Solve `self * x = b`. Returns the solution with zeros in all non-pivot
    /// coordinates, or `None` when the system is inconsistent. A length
    /// mismatch on `b` is a contract violation, distinct from unsolvability.
    pub fn solve(&self, b: &FpVector) -> Result<Option<FpVector>, LinalgError> {
        if b.len() != self.rows {
            return Err(LinalgError::DimensionMismatch {
                context: "solve rhs",
                expected: self.rows,
                got: b.len(),
            });
        }
        // Augment with b as an extra column and reduce.
        let mut aug = FpMatrix::zero(self.p, self.rows, self.cols + 1);
        for r in 0..self.rows {
            for c in 0..self.cols {
                let v = self.get(r, c);
                if v != 0 {
                    aug.set(r, c, v);
                }
            }
            aug.set(r, self.cols, b.entry(r));
        }
        let (red, pivots) = aug.rref();
        if pivots.last() == Some(&self.cols) {
            return Ok(None);
        }
        let mut x = FpVector::zero(self.p, self.cols);
        for (row, &col) in pivots.iter().enumerate() {
            x.set_entry(col, red.get(row, self.cols));
        }
        Ok(Some(x))
    }
}

impl fmt::Display for FpMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "[{}x{} mod {}]", self.rows, self.cols, self.p.get())?;
        for r in 0..self.rows {
            write!(f, "  ")?;
            for c in 0..self.cols {
                write!(f, "{:>3}", self.get(r, c))?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// An incrementally built row space kept in reduced echelon form. This is the
/// workhorse for span ranks, subquotient dimensions and deterministic
/// representative extraction.
#[derive(Debug, Clone)]
pub struct RowSpace {
    p: Prime,
    cols: usize,
    rows: Vec<FpVector>,
    pivots: Vec<usize>,
}

impl RowSpace {
    pub fn new(p: Prime, cols: usize) -> RowSpace {
        RowSpace {
            p,
            cols,
            rows: Vec::new(),
            pivots: Vec::new(),
        }
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Residue of `v` after reduction against the stored rows.
    pub fn reduce(&self, v: &FpVector) -> FpVector {
        assert_eq!(v.len(), self.cols);
        let mut r = v.clone();
        for (row, &pc) in self.rows.iter().zip(&self.pivots) {
            let c = r.entry(pc);
            if c != 0 {
                r.add_scaled(row, self.p.neg(c));
            }
        }
        r
    }

    pub fn contains(&self, v: &FpVector) -> bool {
        self.reduce(v).is_zero()
    }

    /// Insert `v`; if independent of the current span, returns the normalized
    /// residue that was added (leading coefficient 1).
    pub fn insert(&mut self, v: &FpVector) -> Option<FpVector> {
        let mut r = self.reduce(v);
        let pc = r.first_nonzero()?;
        r.scale(self.p.inv(r.entry(pc)));
        // keep the basis fully reduced
        for row in self.rows.iter_mut() {
            let c = row.entry(pc);
            if c != 0 {
                row.add_scaled(&r, self.p.neg(c));
            }
        }
        let at = self
            .pivots
            .iter()
            .position(|&q| q > pc)
            .unwrap_or(self.pivots.len());
        self.pivots.insert(at, pc);
        self.rows.insert(at, r.clone());
        Some(r)
    }

    pub fn basis(&self) -> &[FpVector] {
        &self.rows
    }
}

/// `dim span(cycles) - dim span(boundaries)`, with a consistency check that
/// every boundary lies in the span of the cycles (a broken differential
/// otherwise).
pub fn subquotient_dim(
    p: Prime,
    cols: usize,
    cycles: &[FpVector],
    boundaries: &[FpVector],
) -> Result<usize, LinalgError> {
    let mut cyc = RowSpace::new(p, cols);
    for v in cycles {
        cyc.insert(v);
    }
    let mut bnd = RowSpace::new(p, cols);
    for v in boundaries {
        if !cyc.contains(v) {
            return Err(LinalgError::BoundaryNotInCycles);
        }
        bnd.insert(v);
    }
    Ok(cyc.rank() - bnd.rank())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(v: u32) -> Prime {
        Prime::new(v).unwrap()
    }

    #[test]
    fn prime_validation() {
        assert!(Prime::new(2).is_ok());
        assert!(Prime::new(251).is_ok());
        assert!(Prime::new(1).is_err());
        assert!(Prime::new(4).is_err());
        assert!(Prime::new(257).is_err());
    }

    #[test]
    fn scalar_arithmetic() {
        let f5 = p(5);
        assert_eq!(f5.add(3, 4), 2);
        assert_eq!(f5.sub(1, 3), 3);
        assert_eq!(f5.mul(3, 4), 2);
        assert_eq!(f5.inv(3), 2);
        assert_eq!(f5.neg(0), 0);
        assert_eq!(f5.reduce(-7), 3);
    }

    #[test]
    fn rref_empty_and_identity() {
        let (r, piv) = FpMatrix::zero(p(3), 0, 0).rref();
        assert_eq!(r.rows(), 0);
        assert!(piv.is_empty());

        let id = FpMatrix::identity(p(5), 3);
        let (r, piv) = id.rref();
        assert_eq!(r, id);
        assert_eq!(piv, vec![0, 1, 2]);
    }

    #[test]
    fn rref_dependent_rows_mod_3() {
        // second row is twice the first mod 3
        let m = FpMatrix::from_rows(p(3), &[vec![1, 2], vec![2, 4]]);
        let (r, piv) = m.rref();
        assert_eq!(piv, vec![0]);
        assert_eq!(r.get(0, 0), 1);
        assert_eq!(r.get(0, 1), 2);
        assert_eq!(r.get(1, 0), 0);
        assert_eq!(r.get(1, 1), 0);
    }

    #[test]
    fn kernel_zero_map_and_injective() {
        let z = FpMatrix::zero(p(5), 2, 3);
        assert_eq!(z.kernel_basis().len(), 3);

        let id = FpMatrix::identity(p(2), 4);
        assert!(id.kernel_basis().is_empty());
    }

    #[test]
    fn kernel_sum_mod_2() {
        // [[1,1]] over F_2: kernel spanned by (1,1)
        let m = FpMatrix::from_rows(p(2), &[vec![1, 1]]);
        let k = m.kernel_basis();
        assert_eq!(k.len(), 1);
        assert_eq!(k[0], FpVector::from_entries(p(2), &[1, 1]));
    }

    #[test]
    fn solve_identity_unsolvable_and_pivot_convention() {
        let f3 = p(3);
        let id = FpMatrix::identity(f3, 2);
        let b = FpVector::from_entries(f3, &[2, 1]);
        assert_eq!(id.solve(&b).unwrap().unwrap(), b);

        let zero = FpMatrix::from_rows(f3, &[vec![0]]);
        let one = FpVector::from_entries(f3, &[1]);
        assert_eq!(zero.solve(&one).unwrap(), None);

        // [[1,1]] x = (1) over F_2: pivot-coordinate solution (1,0)
        let m = FpMatrix::from_rows(p(2), &[vec![1, 1]]);
        let b = FpVector::from_entries(p(2), &[1]);
        let x = m.solve(&b).unwrap().unwrap();
        assert_eq!(x, FpVector::from_entries(p(2), &[1, 0]));

        // length mismatch is an error, not "no solution"
        let bad = FpVector::from_entries(p(2), &[1, 0]);
        assert!(m.solve(&bad).is_err());
    }

    #[test]
    fn subquotient_dims() {
        let f3 = p(3);
        let e = |v: &[u32]| FpVector::from_entries(f3, v);
        let cycles = [e(&[1, 0, 0]), e(&[0, 1, 0])];
        assert_eq!(subquotient_dim(f3, 3, &cycles, &[]).unwrap(), 2);
        assert_eq!(subquotient_dim(f3, 3, &cycles, &cycles).unwrap(), 0);

        // cycles of dim 3 with a 1-dimensional boundary space inside
        let cycles = [e(&[1, 0, 0]), e(&[0, 1, 0]), e(&[0, 0, 1])];
        let boundaries = [e(&[1, 2, 1])];
        assert_eq!(subquotient_dim(f3, 3, &cycles, &boundaries).unwrap(), 2);

        // a boundary outside the span of the cycles is a consistency error
        let cycles = [e(&[1, 0, 0])];
        let boundaries = [e(&[0, 1, 0])];
        assert_eq!(
            subquotient_dim(f3, 3, &cycles, &boundaries),
            Err(LinalgError::BoundaryNotInCycles)
        );
    }

    fn arb_matrix(pv: u32) -> impl Strategy<Value = FpMatrix> {
        (1usize..7, 1usize..7).prop_flat_map(move |(r, c)| {
            proptest::collection::vec(0u32..pv, r * c).prop_map(move |data| {
                let rows: Vec<Vec<u32>> = data.chunks(c).map(|ch| ch.to_vec()).collect();
                FpMatrix::from_rows(Prime::new(pv).unwrap(), &rows)
            })
        })
    }

    proptest! {
        #[test]
        fn rank_nullity_and_kernel(pv in prop::sample::select(vec![2u32, 3, 5]), m in (1usize..7, 1usize..7).prop_flat_map(|(r, c)| {
            proptest::collection::vec(0u32..256, r * c).prop_map(move |data| (r, c, data))
        })) {
            let (r, c, data) = m;
            let prime = Prime::new(pv).unwrap();
            let rows: Vec<Vec<u32>> = data.chunks(c).map(|ch| ch.iter().map(|&v| v % pv).collect()).collect();
            let m = FpMatrix::from_rows(prime, &rows);
            let rank = m.rank();
            let kernel = m.kernel_basis();
            prop_assert_eq!(rank + kernel.len(), c);
            prop_assert!(rank <= r.min(c));
            for v in &kernel {
                prop_assert!(m.mul_vector(v).unwrap().is_zero());
            }
        }

        #[test]
        fn rref_is_idempotent(pv in prop::sample::select(vec![2u32, 3, 5])) {
            use proptest::strategy::ValueTree;
            let strat = arb_matrix(pv);
            let mut runner = proptest::test_runner::TestRunner::deterministic();
            for _ in 0..16 {
                let m = strat.new_tree(&mut runner).unwrap().current();
                let (r1, piv1) = m.rref();
                let (r2, piv2) = r1.rref();
                prop_assert_eq!(&r1, &r2);
                prop_assert_eq!(piv1, piv2);
            }
        }

        #[test]
        fn solve_recovers_image_points(pv in prop::sample::select(vec![2u32, 3, 5]), seed in proptest::collection::vec(0u32..256, 36 + 6)) {
            let prime = Prime::new(pv).unwrap();
            let rows: Vec<Vec<u32>> = seed[..36].chunks(6).map(|ch| ch.iter().map(|&v| v % pv).collect()).collect();
            let m = FpMatrix::from_rows(prime, &rows);
            let x = FpVector::from_entries(prime, &seed[36..].iter().map(|&v| v % pv).collect::<Vec<_>>());
            let b = m.mul_vector(&x).unwrap();
            let x2 = m.solve(&b).unwrap().expect("image point must be solvable");
            prop_assert_eq!(m.mul_vector(&x2).unwrap(), b);
        }
    }

    #[test]
    fn bit_packed_rows_across_word_boundaries() {
        // p = 2 with more than 64 columns exercises multi-word rows
        let f2 = p(2);
        let mut state = 0x2545F4914F6CDD1Du64;
        let mut next = || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            state
        };
        let (rows, cols) = (90, 150);
        let data: Vec<Vec<u32>> = (0..rows)
            .map(|_| (0..cols).map(|_| (next() & 1) as u32).collect())
            .collect();
        let m = FpMatrix::from_rows(f2, &data);
        let rank = m.rank();
        let kernel = m.kernel_basis();
        assert_eq!(rank + kernel.len(), cols);
        for v in &kernel {
            assert!(m.mul_vector(v).unwrap().is_zero());
        }
        let (r1, piv1) = m.rref();
        let (r2, piv2) = r1.rref();
        assert_eq!((r1, piv1), (r2.clone(), piv2));
        let x = FpVector::from_entries(
            f2,
            &(0..cols).map(|_| (next() & 1) as u32).collect::<Vec<_>>(),
        );
        let b = m.mul_vector(&x).unwrap();
        let x2 = m.solve(&b).unwrap().unwrap();
        assert_eq!(m.mul_vector(&x2).unwrap(), b);
    }

    #[test]
    fn row_space_reduction() {
        let f5 = p(5);
        let mut rs = RowSpace::new(f5, 3);
        assert!(rs.insert(&FpVector::from_entries(f5, &[0, 2, 1])).is_some());
        assert!(rs.insert(&FpVector::from_entries(f5, &[0, 4, 2])).is_none());
        assert!(rs.insert(&FpVector::from_entries(f5, &[1, 1, 1])).is_some());
        assert_eq!(rs.rank(), 2);
        assert!(rs.contains(&FpVector::from_entries(f5, &[2, 2, 2])));
        assert!(!rs.contains(&FpVector::from_entries(f5, &[0, 0, 1])));
    }
}
