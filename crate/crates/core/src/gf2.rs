//! Dense GF(2) vectors and matrices with bit-packed rows.
//!
//! Rows are stored as `u64` words so that elimination and syndrome
//! evaluation work a word at a time. A reduced row echelon form can be
//! computed once and reused for repeated rowspace queries.

use std::fmt;

use thiserror::Error;

const WORD: usize = 64;

#[inline]
fn words_for(bits: usize) -> usize {
    bits.div_ceil(WORD)
}

/// Errors raised by GF(2) operations.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Gf2Error {
    #[error("{op}: dimension mismatch, expected {expected}, found {found}")]
    Shape {
        op: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("{what} must have at least one {dim}")]
    Empty {
        what: &'static str,
        dim: &'static str,
    },
    #[error("entry {value} at position {index} is not a bit")]
    NotABit { index: usize, value: u8 },
    #[error("rows have differing lengths ({first} and {other})")]
    Ragged { first: usize, other: usize },
}

fn check(op: &'static str, expected: usize, found: usize) -> Result<(), Gf2Error> {
    if expected == found {
        Ok(())
    } else {
        Err(Gf2Error::Shape {
            op,
            expected,
            found,
        })
    }
}

/// A binary vector of fixed length.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitVector {
    len: usize,
    words: Vec<u64>,
}

impl BitVector {
    /// All-zero vector.
    ///
    /// # Panics
    /// Panics if `len == 0`.
    pub fn zeros(len: usize) -> Self {
        assert!(len > 0, "BitVector length must be at least 1");
        Self {
            len,
            words: vec![0; words_for(len)],
        }
    }

    /// Build from a slice of 0/1 values.
    pub fn from_bits(bits: &[u8]) -> Result<Self, Gf2Error> {
        if bits.is_empty() {
            return Err(Gf2Error::Empty {
                what: "vector",
                dim: "entry",
            });
        }
        let mut v = Self::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            match b {
                0 => {}
                1 => v.set(i, true),
                value => return Err(Gf2Error::NotABit { index: i, value }),
            }
        }
        Ok(v)
    }

    /// Vector with ones exactly at `positions`.
    ///
    /// # Panics
    /// Panics if a position is out of range or `len == 0`.
    pub fn from_support(len: usize, positions: impl IntoIterator<Item = usize>) -> Self {
        let mut v = Self::zeros(len);
        for p in positions {
            v.set(p, true);
        }
        v
    }

    /// Unit vector `e_j`.
    pub fn unit(len: usize, j: usize) -> Self {
        Self::from_support(len, [j])
    }

    pub fn len(&self) -> usize {
        self.len
    }

    /// Always false; vectors have at least one entry.
    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        (self.words[i / WORD] >> (i % WORD)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        let mask = 1u64 << (i % WORD);
        if value {
            self.words[i / WORD] |= mask;
        } else {
            self.words[i / WORD] &= !mask;
        }
    }

    #[inline]
    pub fn flip(&mut self, i: usize) {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        self.words[i / WORD] ^= 1u64 << (i % WORD);
    }

    /// Hamming weight.
    pub fn weight(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// In-place XOR.
    pub fn xor_assign(&mut self, other: &BitVector) -> Result<(), Gf2Error> {
        check("xor", self.len, other.len)?;
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
        Ok(())
    }

    /// XOR of two vectors of equal length.
    pub fn xor(&self, other: &BitVector) -> Result<BitVector, Gf2Error> {
        let mut out = self.clone();
        out.xor_assign(other)?;
        Ok(out)
    }

    /// Parity of the overlap with `other`.
    pub fn dot(&self, other: &BitVector) -> Result<bool, Gf2Error> {
        check("dot", self.len, other.len)?;
        Ok(parity_of_and(&self.words, &other.words))
    }

    /// Indices of the nonzero entries in increasing order.
    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    None
                } else {
                    let t = w.trailing_zeros() as usize;
                    w &= w - 1;
                    Some(wi * WORD + t)
                }
            })
        })
    }

    /// Entries as a vector of 0/1 bytes.
    pub fn to_bits(&self) -> Vec<u8> {
        (0..self.len).map(|i| self.get(i) as u8).collect()
    }

    pub(crate) fn words(&self) -> &[u64] {
        &self.words
    }
}

impl fmt::Debug for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitVector(")?;
        for i in 0..self.len {
            write!(f, "{}", self.get(i) as u8)?;
        }
        write!(f, ")")
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

/// A dense binary matrix stored row-major with bit-packed rows.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    stride: usize,
    data: Vec<u64>,
}

impl BitMatrix {
    /// All-zero matrix.
    ///
    /// # Panics
    /// Panics if either dimension is zero.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(
            rows > 0 && cols > 0,
            "BitMatrix dimensions must be positive"
        );
        let stride = words_for(cols);
        Self {
            rows,
            cols,
            stride,
            data: vec![0; rows * stride],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, true);
        }
        m
    }

    /// Build from dense 0/1 rows.
    pub fn from_rows<R: AsRef<[u8]>>(rows: &[R]) -> Result<Self, Gf2Error> {
        let first = rows.first().ok_or(Gf2Error::Empty {
            what: "matrix",
            dim: "row",
        })?;
        let cols = first.as_ref().len();
        if cols == 0 {
            return Err(Gf2Error::Empty {
                what: "matrix",
                dim: "column",
            });
        }
        let mut m = Self::zeros(rows.len(), cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Gf2Error::Ragged {
                    first: cols,
                    other: r.len(),
                });
            }
            for (j, &b) in r.iter().enumerate() {
                match b {
                    0 => {}
                    1 => m.set(i, j, true),
                    value => {
                        return Err(Gf2Error::NotABit {
                            index: i * cols + j,
                            value,
                        })
                    }
                }
            }
        }
        Ok(m)
    }

    /// Stack vectors of equal length as rows.
    pub fn from_vectors(rows: &[BitVector]) -> Result<Self, Gf2Error> {
        let first = rows.first().ok_or(Gf2Error::Empty {
            what: "matrix",
            dim: "row",
        })?;
        let mut m = Self::zeros(rows.len(), first.len());
        for (i, r) in rows.iter().enumerate() {
            check("from_vectors", first.len(), r.len())?;
            m.row_words_mut(i).copy_from_slice(r.words());
        }
        Ok(m)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> bool {
        assert!(
            i < self.rows && j < self.cols,
            "index ({i},{j}) out of range"
        );
        (self.data[i * self.stride + j / WORD] >> (j % WORD)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: bool) {
        assert!(
            i < self.rows && j < self.cols,
            "index ({i},{j}) out of range"
        );
        let w = &mut self.data[i * self.stride + j / WORD];
        let mask = 1u64 << (j % WORD);
        if value {
            *w |= mask;
        } else {
            *w &= !mask;
        }
    }

    #[inline]
    pub(crate) fn row_words(&self, i: usize) -> &[u64] {
        &self.data[i * self.stride..(i + 1) * self.stride]
    }

    #[inline]
    fn row_words_mut(&mut self, i: usize) -> &mut [u64] {
        &mut self.data[i * self.stride..(i + 1) * self.stride]
    }

    /// Copy of row `i`.
    pub fn row(&self, i: usize) -> BitVector {
        BitVector {
            len: self.cols,
            words: self.row_words(i).to_vec(),
        }
    }

    /// Copy of column `j`.
    pub fn col(&self, j: usize) -> BitVector {
        let mut v = BitVector::zeros(self.rows);
        for i in 0..self.rows {
            if self.get(i, j) {
                v.set(i, true);
            }
        }
        v
    }

    /// Column indices of the ones in row `i`.
    pub fn row_support(&self, i: usize) -> Vec<usize> {
        BitVector {
            len: self.cols,
            words: self.row_words(i).to_vec(),
        }
        .ones()
        .collect()
    }

    pub fn count_ones(&self) -> usize {
        self.data.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&w| w == 0)
    }

    pub fn transpose(&self) -> BitMatrix {
        let mut t = BitMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in self.row(i).ones() {
                t.set(j, i, true);
            }
        }
        t
    }

    /// Matrix product over GF(2).
    pub fn mat_mul(&self, other: &BitMatrix) -> Result<BitMatrix, Gf2Error> {
        check("mat_mul", self.cols, other.rows)?;
        let mut out = BitMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in self.row(i).ones() {
                let src = other.row_words(k).to_vec();
                for (d, s) in out.row_words_mut(i).iter_mut().zip(&src) {
                    *d ^= s;
                }
            }
        }
        Ok(out)
    }

    /// Entrywise sum over GF(2).
    pub fn add(&self, other: &BitMatrix) -> Result<BitMatrix, Gf2Error> {
        check("add (rows)", self.rows, other.rows)?;
        check("add (cols)", self.cols, other.cols)?;
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(&other.data) {
            *a ^= b;
        }
        Ok(out)
    }

    /// Horizontal concatenation `[self other]`.
    pub fn hstack(&self, other: &BitMatrix) -> Result<BitMatrix, Gf2Error> {
        check("hstack", self.rows, other.rows)?;
        let mut out = BitMatrix::zeros(self.rows, self.cols + other.cols);
        for i in 0..self.rows {
            for j in self.row(i).ones() {
                out.set(i, j, true);
            }
            for j in other.row(i).ones() {
                out.set(i, self.cols + j, true);
            }
        }
        Ok(out)
    }

    /// Syndrome `h · e` of a vector against the rows of this matrix.
    pub fn syndrome(&self, e: &BitVector) -> Result<BitVector, Gf2Error> {
        syndrome(e, self)
    }

    /// Reduced row echelon form of the row space.
    pub fn echelon(&self) -> Echelon {
        Echelon::new(self)
    }

    /// Rank over GF(2).
    pub fn rank(&self) -> usize {
        self.echelon().rank()
    }

    /// Whether `v` is a GF(2) combination of the rows.
    pub fn in_rowspace(&self, v: &BitVector) -> Result<bool, Gf2Error> {
        self.echelon().contains(v)
    }
}

impl fmt::Debug for BitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "BitMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                write!(f, "{}", self.get(i, j) as u8)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// Syndrome `s_c = <e, h_c>` for every row `h_c` of `h`.
pub fn syndrome(e: &BitVector, h: &BitMatrix) -> Result<BitVector, Gf2Error> {
    check("syndrome", h.cols, e.len)?;
    let mut s = BitVector::zeros(h.rows);
    for c in 0..h.rows {
        if parity_of_and(h.row_words(c), e.words()) {
            s.set(c, true);
        }
    }
    Ok(s)
}

/// Rank over GF(2).
pub fn rank(m: &BitMatrix) -> usize {
    m.rank()
}

/// Whether `v` lies in the row space of `m`.
pub fn in_rowspace(v: &BitVector, m: &BitMatrix) -> Result<bool, Gf2Error> {
    m.in_rowspace(v)
}

/// Matrix product over GF(2).
pub fn mat_mul(a: &BitMatrix, b: &BitMatrix) -> Result<BitMatrix, Gf2Error> {
    a.mat_mul(b)
}

/// Reduced row echelon form of a matrix's row space.
///
/// Each stored row has a leading one at its pivot column and zeros at every
/// other pivot column, so reducing a vector takes one pass over the pivots.
#[derive(Clone, Debug)]
pub struct Echelon {
    cols: usize,
    stride: usize,
    rows: Vec<Vec<u64>>,
    pivots: Vec<usize>,
}

impl Echelon {
    pub fn new(m: &BitMatrix) -> Self {
        let stride = m.stride;
        let mut work: Vec<Vec<u64>> = (0..m.rows).map(|i| m.row_words(i).to_vec()).collect();
        let mut pivots = Vec::new();
        let mut top = 0;
        for col in 0..m.cols {
            if top == work.len() {
                break;
            }
            let (w, b) = (col / WORD, 1u64 << (col % WORD));
            let Some(p) = (top..work.len()).find(|&r| work[r][w] & b != 0) else {
                continue;
            };
            work.swap(top, p);
            let pivot_row = work[top].clone();
            for (r, row) in work.iter_mut().enumerate() {
                if r != top && row[w] & b != 0 {
                    for (x, y) in row.iter_mut().zip(&pivot_row) {
                        *x ^= y;
                    }
                }
            }
            pivots.push(col);
            top += 1;
        }
        work.truncate(top);
        Self {
            cols: m.cols,
            stride,
            rows: work,
            pivots,
        }
    }

    pub fn rank(&self) -> usize {
        self.pivots.len()
    }

    pub fn pivots(&self) -> &[usize] {
        &self.pivots
    }

    /// Residual of `v` after eliminating every pivot column.
    pub fn reduce(&self, v: &BitVector) -> Result<BitVector, Gf2Error> {
        check("reduce", self.cols, v.len())?;
        let mut words = v.words().to_vec();
        debug_assert_eq!(words.len(), self.stride);
        for (row, &col) in self.rows.iter().zip(&self.pivots) {
            if (words[col / WORD] >> (col % WORD)) & 1 == 1 {
                for (x, y) in words.iter_mut().zip(row) {
                    *x ^= y;
                }
            }
        }
        Ok(BitVector {
            len: self.cols,
            words,
        })
    }

    /// Row-space membership.
    pub fn contains(&self, v: &BitVector) -> Result<bool, Gf2Error> {
        Ok(self.reduce(v)?.is_zero())
    }

    /// Basis of the row space as vectors.
    pub fn basis(&self) -> Vec<BitVector> {
        self.rows
            .iter()
            .map(|w| BitVector {
                len: self.cols,
                words: w.clone(),
            })
            .collect()
    }
}

/// Basis of the right kernel `{x : m x = 0}`.
pub fn kernel_basis(m: &BitMatrix) -> Vec<BitVector> {
    let ech = m.echelon();
    let pivot_set: Vec<bool> = {
        let mut s = vec![false; m.cols()];
        for &p in ech.pivots() {
            s[p] = true;
        }
        s
    };
    let basis = ech.basis();
    (0..m.cols())
        .filter(|&j| !pivot_set[j])
        .map(|free| {
            let mut x = BitVector::unit(m.cols(), free);
            for (row, &p) in basis.iter().zip(ech.pivots()) {
                if row.get(free) {
                    x.set(p, true);
                }
            }
            x
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shift3() -> BitMatrix {
        BitMatrix::from_rows(&[[0u8, 1, 0], [0, 0, 1], [1, 0, 0]]).unwrap()
    }

    #[test]
    fn identity_product() {
        let i3 = BitMatrix::identity(3);
        assert_eq!(i3.mat_mul(&i3).unwrap(), i3);
    }

    #[test]
    fn product_with_zero() {
        let a = BitMatrix::from_rows(&[[1u8, 1, 0], [0, 1, 1]]).unwrap();
        let z = BitMatrix::zeros(3, 4);
        assert!(a.mat_mul(&z).unwrap().is_zero());
    }

    #[test]
    fn shift_squared() {
        let s = shift3();
        let expected = BitMatrix::from_rows(&[[0u8, 0, 1], [1, 0, 0], [0, 1, 0]]).unwrap();
        assert_eq!(s.mat_mul(&s).unwrap(), expected);
    }

    #[test]
    fn product_shape_mismatch() {
        let a = BitMatrix::zeros(2, 3);
        assert!(matches!(a.mat_mul(&a), Err(Gf2Error::Shape { .. })));
    }

    #[test]
    fn ranks() {
        assert_eq!(BitMatrix::identity(4).rank(), 4);
        assert_eq!(BitMatrix::zeros(3, 5).rank(), 0);
        let m = BitMatrix::from_rows(&[[1u8, 1, 0], [0, 1, 1], [1, 0, 1]]).unwrap();
        assert_eq!(m.rank(), 2);
    }

    #[test]
    fn rowspace_small() {
        let m = BitMatrix::from_rows(&[
            [1u8, 1, 0, 0, 0, 0],
            [0, 1, 1, 0, 0, 0],
            [0, 0, 0, 1, 1, 0],
            [0, 0, 0, 0, 1, 1],
        ])
        .unwrap();
        assert!(m.in_rowspace(&BitVector::zeros(6)).unwrap());
        assert!(m.in_rowspace(&m.row(0)).unwrap());
        // every combination of these rows has even weight
        for j in 0..6 {
            assert!(!m.in_rowspace(&BitVector::unit(6, j)).unwrap());
        }
        assert!(matches!(
            m.in_rowspace(&BitVector::zeros(5)),
            Err(Gf2Error::Shape { .. })
        ));
    }

    #[test]
    fn syndrome_of_unit_is_column() {
        let h = BitMatrix::from_rows(&[[1u8, 1, 0, 1], [0, 1, 1, 0]]).unwrap();
        for j in 0..4 {
            assert_eq!(h.syndrome(&BitVector::unit(4, j)).unwrap(), h.col(j));
        }
        assert!(h.syndrome(&BitVector::zeros(4)).unwrap().is_zero());
    }

    #[test]
    fn wide_rows_cross_word_boundaries() {
        let mut m = BitMatrix::zeros(3, 130);
        m.set(0, 0, true);
        m.set(0, 129, true);
        m.set(1, 64, true);
        m.set(2, 129, true);
        m.set(2, 64, true);
        assert_eq!(m.rank(), 3);
        let v = BitVector::from_support(130, [0, 64]);
        assert!(m.in_rowspace(&v).unwrap());
        assert_eq!(m.transpose().transpose(), m);
    }

    #[test]
    fn kernel_is_annihilated() {
        let m = BitMatrix::from_rows(&[[1u8, 1, 0, 1, 0], [0, 1, 1, 0, 1]]).unwrap();
        let k = kernel_basis(&m);
        assert_eq!(k.len(), 3);
        for x in &k {
            assert!(m.syndrome(x).unwrap().is_zero());
        }
    }

    #[test]
    fn bad_inputs() {
        assert!(BitVector::from_bits(&[]).is_err());
        assert!(BitVector::from_bits(&[0, 2]).is_err());
        assert!(BitMatrix::from_rows(&[vec![1u8, 0], vec![1]]).is_err());
        let empty: [[u8; 2]; 0] = [];
        assert!(BitMatrix::from_rows(&empty).is_err());
    }
}
