//! Exact linear algebra over F2 on bit-packed rows.
//!
//! A matrix is stored row-major, 64 coordinates per word, little-endian
//! within each word. All operations keep the padding bits beyond the
//! logical length at zero, so word-wise comparisons and popcounts are
//! exact.

use std::fmt;

use rand::Rng;

/// A vector over F2, packed 64 bits per word.
///
/// Invariant: bits at positions `>= len` are zero.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitVec {
    len: usize,
    words: Vec<u64>,
}

impl BitVec {
    pub fn zeros(len: usize) -> Self {
        Self {
            len,
            words: vec![0; len.div_ceil(64)],
        }
    }

    pub fn from_bits(bits: &[bool]) -> Self {
        let mut v = Self::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            if b {
                v.set(i, true);
            }
        }
        v
    }

    /// Builds a vector of length `len` with ones exactly at `ones`.
    pub fn from_ones(len: usize, ones: &[usize]) -> Self {
        let mut v = Self::zeros(len);
        for &i in ones {
            v.set(i, true);
        }
        v
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, i: usize) -> bool {
        assert!(
            i < self.len,
            "bit index {i} out of range (len={})",
            self.len
        );
        (self.words[i / 64] >> (i % 64)) & 1 == 1
    }

    pub fn set(&mut self, i: usize, value: bool) {
        assert!(
            i < self.len,
            "bit index {i} out of range (len={})",
            self.len
        );
        let mask = 1u64 << (i % 64);
        if value {
            self.words[i / 64] |= mask;
        } else {
            self.words[i / 64] &= !mask;
        }
    }

    pub fn flip(&mut self, i: usize) {
        assert!(
            i < self.len,
            "bit index {i} out of range (len={})",
            self.len
        );
        self.words[i / 64] ^= 1u64 << (i % 64);
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn xor_assign(&mut self, other: &Self) {
        assert_eq!(self.len, other.len, "length mismatch in xor_assign");
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    /// XOR starting at a word offset; words before `word_from` of `other`
    /// are known zero by the caller (elimination below a pivot).
    fn xor_assign_from(&mut self, other: &Self, word_from: usize) {
        for (a, b) in self.words[word_from..]
            .iter_mut()
            .zip(&other.words[word_from..])
        {
            *a ^= b;
        }
    }

    /// Parity of the AND with `other` (the F2 inner product).
    pub fn dot(&self, other: &Self) -> bool {
        assert_eq!(self.len, other.len, "length mismatch in dot");
        let mut acc = 0u64;
        for (a, b) in self.words.iter().zip(&other.words) {
            acc ^= a & b;
        }
        acc.count_ones() % 2 == 1
    }

    /// Indices of set bits, ascending.
    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let b = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(wi * 64 + b)
            })
        })
    }

    /// Index of the first set bit at or after `from`, if any.
    pub fn first_one_from(&self, from: usize) -> Option<usize> {
        if from >= self.len {
            return None;
        }
        let mut wi = from / 64;
        let mut w = self.words[wi] & (!0u64 << (from % 64));
        loop {
            if w != 0 {
                return Some(wi * 64 + w.trailing_zeros() as usize);
            }
            wi += 1;
            if wi == self.words.len() {
                return None;
            }
            w = self.words[wi];
        }
    }

    /// Renders the vector as a `0`/`1` string, coordinate 0 first.
    pub fn to_bit_string(&self) -> String {
        (0..self.len)
            .map(|i| if self.get(i) { '1' } else { '0' })
            .collect()
    }

    pub fn from_bit_string(s: &str) -> Result<Self, ParseError> {
        let mut v = Self::zeros(s.len());
        for (i, c) in s.chars().enumerate() {
            match c {
                '0' => {}
                '1' => v.set(i, true),
                _ => return Err(ParseError::Format(format!("invalid bit character {c:?}"))),
            }
        }
        Ok(v)
    }
}

impl fmt::Debug for BitVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitVec({}; ones=", self.len)?;
        f.debug_list().entries(self.ones()).finish()?;
        write!(f, ")")
    }
}

/// A dense m-by-n matrix over F2 stored as bit-packed rows.
#[derive(Clone, PartialEq, Eq)]
pub struct BitMatrix {
    n_rows: usize,
    n_cols: usize,
    rows: Vec<BitVec>,
}

impl BitMatrix {
    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Self {
            n_rows,
            n_cols,
            rows: (0..n_rows).map(|_| BitVec::zeros(n_cols)).collect(),
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, true);
        }
        m
    }

    /// Builds a matrix from rows; every row must have length `n_cols`.
    pub fn from_rows(n_cols: usize, rows: Vec<BitVec>) -> Self {
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(r.len(), n_cols, "row {i} has wrong length");
        }
        Self {
            n_rows: rows.len(),
            n_cols,
            rows,
        }
    }

    /// Convenience constructor from 0/1 literals, one slice per row.
    pub fn from_dense(rows: &[&[u8]]) -> Self {
        let n_cols = rows.first().map_or(0, |r| r.len());
        let built = rows
            .iter()
            .map(|r| BitVec::from_bits(&r.iter().map(|&b| b != 0).collect::<Vec<_>>()))
            .collect();
        Self::from_rows(n_cols, built)
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn row(&self, i: usize) -> &BitVec {
        &self.rows[i]
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.rows[i].get(j)
    }

    pub fn set(&mut self, i: usize, j: usize, value: bool) {
        self.rows[i].set(j, value);
    }

    pub fn push_row(&mut self, row: BitVec) {
        assert_eq!(row.len(), self.n_cols, "pushed row has wrong length");
        self.rows.push(row);
        self.n_rows += 1;
    }

    pub fn transpose(&self) -> BitMatrix {
        let mut t = BitMatrix::zeros(self.n_cols, self.n_rows);
        for i in 0..self.n_rows {
            for j in self.rows[i].ones() {
                t.set(j, i, true);
            }
        }
        t
    }

    /// Matrix-vector product `A x` over F2.
    pub fn mul_vec(&self, x: &BitVec) -> BitVec {
        assert_eq!(x.len(), self.n_cols, "vector length mismatch in mul_vec");
        let mut y = BitVec::zeros(self.n_rows);
        for (i, row) in self.rows.iter().enumerate() {
            if row.dot(x) {
                y.set(i, true);
            }
        }
        y
    }

    /// The minor of `self` on the given (sorted, in-range) rows and columns.
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> BitMatrix {
        let mut m = BitMatrix::zeros(rows.len(), cols.len());
        for (ri, &r) in rows.iter().enumerate() {
            for (ci, &c) in cols.iter().enumerate() {
                if self.get(r, c) {
                    m.set(ri, ci, true);
                }
            }
        }
        m
    }

    /// Copy of `self` without the rows listed in `skip` (sorted ascending).
    pub fn drop_rows(&self, skip: &[usize]) -> BitMatrix {
        let mut rows = Vec::with_capacity(self.n_rows.saturating_sub(skip.len()));
        let mut k = 0;
        for i in 0..self.n_rows {
            if k < skip.len() && skip[k] == i {
                k += 1;
            } else {
                rows.push(self.rows[i].clone());
            }
        }
        BitMatrix::from_rows(self.n_cols, rows)
    }

    /// Total number of nonzero entries.
    pub fn count_ones(&self) -> usize {
        self.rows.iter().map(BitVec::count_ones).sum()
    }

    /// Row reduction: rank, nullity, pivot columns and a kernel basis.
    ///
    /// The kernel basis is normalised deterministically: free columns are
    /// taken in increasing order and the basis vector for free column `c`
    /// has a one at `c` and zeros at every other free column.
    pub fn rank_profile(&self) -> RankProfile {
        let mut m = self.clone();
        let mut pivot_cols = Vec::new();
        let mut pivot_rows = Vec::new();
        let mut r = 0usize;
        for col in 0..m.n_cols {
            let word = col / 64;
            // find a pivot at or below row r
            let Some(p) = (r..m.n_rows).find(|&i| m.rows[i].get(col)) else {
                continue;
            };
            m.rows.swap(r, p);
            let (head, tail) = m.rows.split_at_mut(r + 1);
            let pivot = &head[r];
            for row in tail.iter_mut() {
                if row.get(col) {
                    row.xor_assign_from(pivot, word);
                }
            }
            pivot_cols.push(col);
            pivot_rows.push(r);
            r += 1;
            if r == m.n_rows {
                break;
            }
        }
        // backward pass: clear pivot columns above each pivot row
        for k in (0..pivot_cols.len()).rev() {
            let col = pivot_cols[k];
            let word = col / 64;
            let (head, tail) = m.rows.split_at_mut(k);
            let pivot = &tail[0];
            for row in head.iter_mut() {
                if row.get(col) {
                    row.xor_assign_from(pivot, word);
                }
            }
        }
        let rank = pivot_cols.len();
        let mut is_pivot = vec![false; m.n_cols];
        for &c in &pivot_cols {
            is_pivot[c] = true;
        }
        let free_cols: Vec<usize> = (0..m.n_cols).filter(|&c| !is_pivot[c]).collect();
        let mut kernel_basis = Vec::with_capacity(free_cols.len());
        for &f in &free_cols {
            let mut b = BitVec::zeros(m.n_cols);
            b.set(f, true);
            for (k, &p) in pivot_cols.iter().enumerate() {
                if m.rows[k].get(f) {
                    b.set(p, true);
                }
            }
            kernel_basis.push(b);
        }
        RankProfile {
            rank,
            nullity: m.n_cols - rank,
            pivot_cols,
            kernel_basis,
        }
    }
}

impl fmt::Debug for BitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "BitMatrix({}x{})", self.n_rows, self.n_cols)?;
        for row in &self.rows {
            writeln!(f, "  {}", row.to_bit_string())?;
        }
        Ok(())
    }
}

/// Rank data of a matrix together with a normalised kernel basis.
#[derive(Clone, Debug)]
pub struct RankProfile {
    pub rank: usize,
    pub nullity: usize,
    pub pivot_cols: Vec<usize>,
    pub kernel_basis: Vec<BitVec>,
}

impl RankProfile {
    /// Coordinates that are zero in every kernel vector, sorted ascending.
    ///
    /// Since the kernel is spanned by the basis, a coordinate is frozen
    /// exactly when every basis vector vanishes there.
    pub fn frozen_set(&self, n_cols: usize) -> Vec<usize> {
        let mut touched = vec![false; n_cols];
        for b in &self.kernel_basis {
            for i in b.ones() {
                touched[i] = true;
            }
        }
        (0..n_cols).filter(|&i| !touched[i]).collect()
    }

    /// A uniformly random element of the kernel: a uniform F2 combination
    /// of the basis vectors. With nullity zero this is the zero vector.
    pub fn sample_kernel_one<R: Rng>(&self, n_cols: usize, rng: &mut R) -> BitVec {
        let mut x = BitVec::zeros(n_cols);
        for b in &self.kernel_basis {
            if rng.gen::<bool>() {
                x.xor_assign(b);
            }
        }
        x
    }

    /// Draws `count` independent uniform kernel vectors.
    pub fn sample_kernel<R: Rng>(&self, n_cols: usize, count: usize, rng: &mut R) -> Vec<BitVec> {
        (0..count)
            .map(|_| self.sample_kernel_one(n_cols, rng))
            .collect()
    }

    /// Enumerates the whole kernel in Gray-code order (one basis XOR per
    /// step); only sensible when `nullity <= 20`.
    pub fn enumerate_kernel(&self, n_cols: usize) -> Vec<BitVec> {
        assert!(self.nullity <= 20, "kernel too large to enumerate");
        let size = 1usize << self.nullity;
        let mut out = Vec::with_capacity(size);
        let mut x = BitVec::zeros(n_cols);
        out.push(x.clone());
        for i in 1..size {
            let k = i.trailing_zeros() as usize;
            x.xor_assign(&self.kernel_basis[k]);
            out.push(x.clone());
        }
        out
    }
}

/// Frozen coordinates of `a`: zero in every kernel vector.
pub fn frozen_set(a: &BitMatrix, profile: &RankProfile) -> Vec<usize> {
    profile.frozen_set(a.n_cols())
}

/// Error for the sparse text format.
#[derive(Debug)]
pub enum ParseError {
    Io(std::io::Error),
    Format(String),
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseError::Io(e) => write!(f, "io error: {e}"),
            ParseError::Format(msg) => write!(f, "format error: {msg}"),
        }
    }
}

impl std::error::Error for ParseError {}

impl From<std::io::Error> for ParseError {
    fn from(e: std::io::Error) -> Self {
        ParseError::Io(e)
    }
}

/// Writes the sparse text format: header `m n`, then one `i j` line per
/// nonzero entry, sorted lexicographically.
pub fn write_sparse(m: &BitMatrix) -> String {
    let mut out = format!("{} {}\n", m.n_rows(), m.n_cols());
    for i in 0..m.n_rows() {
        for j in m.row(i).ones() {
            out.push_str(&format!("{i} {j}\n"));
        }
    }
    out
}

/// Parses the sparse text format into a matrix. Duplicate entries are
/// rejected (a 0/1 matrix has no multiplicities).
pub fn read_sparse(text: &str) -> Result<BitMatrix, ParseError> {
    let entries = parse_entries(text)?;
    let (m, n, pairs) = entries;
    let mut mat = BitMatrix::zeros(m, n);
    for (i, j) in pairs {
        if mat.get(i, j) {
            return Err(ParseError::Format(format!("duplicate entry {i} {j}")));
        }
        mat.set(i, j, true);
    }
    Ok(mat)
}

/// Shared entry parser; multiplicities are allowed and returned as
/// repeated pairs (used by the Tanner-graph reader).
pub(crate) fn parse_entries(text: &str) -> Result<(usize, usize, Vec<(usize, usize)>), ParseError> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| ParseError::Format("empty input".into()))?;
    let mut hp = header.split_whitespace();
    let m: usize = hp
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| ParseError::Format("bad header".into()))?;
    let n: usize = hp
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| ParseError::Format("bad header".into()))?;
    if hp.next().is_some() {
        return Err(ParseError::Format("trailing tokens in header".into()));
    }
    let mut pairs = Vec::new();
    for line in lines {
        let mut it = line.split_whitespace();
        let i: usize = it
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| ParseError::Format(format!("bad entry line {line:?}")))?;
        let j: usize = it
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| ParseError::Format(format!("bad entry line {line:?}")))?;
        if it.next().is_some() {
            return Err(ParseError::Format(format!("trailing tokens in {line:?}")));
        }
        if i >= m || j >= n {
            return Err(ParseError::Format(format!("entry {i} {j} out of range")));
        }
        pairs.push((i, j));
    }
    Ok((m, n, pairs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Brute-force frozen set by enumerating the whole kernel.
    fn frozen_by_enumeration(a: &BitMatrix) -> Vec<usize> {
        let p = a.rank_profile();
        let kernel = p.enumerate_kernel(a.n_cols());
        (0..a.n_cols())
            .filter(|&i| kernel.iter().all(|x| !x.get(i)))
            .collect()
    }

    fn random_matrix(rng: &mut ChaCha8Rng, m: usize, n: usize, p: f64) -> BitMatrix {
        let mut a = BitMatrix::zeros(m, n);
        for i in 0..m {
            for j in 0..n {
                if rng.gen::<f64>() < p {
                    a.set(i, j, true);
                }
            }
        }
        a
    }

    #[test]
    fn rank_identity() {
        let p = BitMatrix::identity(3).rank_profile();
        assert_eq!(p.rank, 3);
        assert_eq!(p.nullity, 0);
        assert!(p.kernel_basis.is_empty());
        assert_eq!(p.pivot_cols, vec![0, 1, 2]);
    }

    #[test]
    fn rank_zero_matrix() {
        let p = BitMatrix::zeros(3, 3).rank_profile();
        assert_eq!(p.rank, 0);
        assert_eq!(p.nullity, 3);
        // unit vectors, free columns ascending
        for (k, b) in p.kernel_basis.iter().enumerate() {
            assert_eq!(b.ones().collect::<Vec<_>>(), vec![k]);
        }
    }

    #[test]
    fn rank_repeated_row() {
        // oracle: enumerate all 4 vectors of F2^2 against [[1,1],[1,1]]
        let a = BitMatrix::from_dense(&[&[1, 1], &[1, 1]]);
        let mut kernel = Vec::new();
        for mask in 0..4u8 {
            let x = BitVec::from_bits(&[mask & 1 == 1, mask & 2 == 2]);
            if a.mul_vec(&x).is_zero() {
                kernel.push(x);
            }
        }
        assert_eq!(kernel.len(), 2); // {00, 11}
        let p = a.rank_profile();
        assert_eq!((p.rank, p.nullity), (1, 1));
        assert_eq!(p.kernel_basis.len(), 1);
        assert_eq!(p.kernel_basis[0].ones().collect::<Vec<_>>(), vec![0, 1]);
    }

    #[test]
    fn frozen_examples() {
        let id = BitMatrix::identity(3);
        assert_eq!(frozen_set(&id, &id.rank_profile()), vec![0, 1, 2]);

        let z = BitMatrix::zeros(2, 2);
        assert!(frozen_set(&z, &z.rank_profile()).is_empty());

        let a = BitMatrix::from_dense(&[&[1, 0], &[0, 0]]);
        assert_eq!(frozen_set(&a, &a.rank_profile()), vec![0]);
        assert_eq!(frozen_by_enumeration(&a), vec![0]);
    }

    #[test]
    fn empty_matrices() {
        let a = BitMatrix::zeros(0, 4);
        let p = a.rank_profile();
        assert_eq!((p.rank, p.nullity), (0, 4));
        assert!(frozen_set(&a, &p).is_empty());

        let b = BitMatrix::zeros(3, 0);
        let q = b.rank_profile();
        assert_eq!((q.rank, q.nullity), (0, 0));
    }

    #[test]
    fn transpose_examples() {
        let id = BitMatrix::identity(4);
        assert_eq!(id.transpose(), id);
        let z = BitMatrix::zeros(2, 3);
        assert_eq!(z.transpose(), BitMatrix::zeros(3, 2));
        let r = BitMatrix::from_dense(&[&[1, 1, 0]]);
        let t = r.transpose();
        assert_eq!((t.n_rows(), t.n_cols()), (3, 1));
        assert!(t.get(0, 0) && t.get(1, 0) && !t.get(2, 0));
        assert_eq!(t.transpose(), r);
    }

    #[test]
    fn rank_equals_transpose_rank_on_randoms() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for trial in 0..1000 {
            let m = 1 + (trial % 12);
            let n = 1 + (trial % 9);
            let a = random_matrix(&mut rng, m, n, 0.3);
            assert_eq!(a.rank_profile().rank, a.transpose().rank_profile().rank);
        }
    }

    #[test]
    fn kernel_basis_vectors_lie_in_kernel() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..300 {
            let a = random_matrix(&mut rng, 10, 14, 0.25);
            let p = a.rank_profile();
            assert_eq!(p.rank + p.nullity, a.n_cols());
            for b in &p.kernel_basis {
                assert!(a.mul_vec(b).is_zero());
            }
            // reduced over free columns: each basis vector hits exactly
            // its own free column
            let mut is_pivot = vec![false; a.n_cols()];
            for &c in &p.pivot_cols {
                is_pivot[c] = true;
            }
            let free: Vec<usize> = (0..a.n_cols()).filter(|&c| !is_pivot[c]).collect();
            for (k, b) in p.kernel_basis.iter().enumerate() {
                for (fi, &f) in free.iter().enumerate() {
                    assert_eq!(b.get(f), fi == k);
                }
            }
        }
    }

    #[test]
    fn frozen_matches_enumeration_and_marginals_are_half() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..200 {
            let a = random_matrix(&mut rng, 8, 10, 0.25);
            let p = a.rank_profile();
            if p.nullity > 20 {
                continue;
            }
            let frozen = frozen_set(&a, &p);
            assert_eq!(frozen, frozen_by_enumeration(&a));
            let kernel = p.enumerate_kernel(a.n_cols());
            for i in 0..a.n_cols() {
                let ones = kernel.iter().filter(|x| x.get(i)).count();
                if frozen.binary_search(&i).is_ok() {
                    assert_eq!(ones, 0);
                } else {
                    assert_eq!(2 * ones, kernel.len(), "marginal at {i} not 1/2");
                }
            }
        }
    }

    #[test]
    fn sampled_kernel_vectors_satisfy_system() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let a = random_matrix(&mut rng, 30, 40, 0.1);
        let p = a.rank_profile();
        for x in p.sample_kernel(a.n_cols(), 50, &mut rng) {
            assert!(a.mul_vec(&x).is_zero());
        }
    }

    #[test]
    fn sample_kernel_identity_is_zero() {
        let a = BitMatrix::identity(5);
        let p = a.rank_profile();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for x in p.sample_kernel(5, 20, &mut rng) {
            assert!(x.is_zero());
        }
    }

    #[test]
    fn sample_kernel_single_constraint_frequency() {
        // [[1,1]]: kernel {00, 11}; empirical frequency of 11 within a
        // 4-sigma binomial band around 1/2
        let a = BitMatrix::from_dense(&[&[1, 1]]);
        let p = a.rank_profile();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let n = 10_000;
        let ones = p
            .sample_kernel(2, n, &mut rng)
            .iter()
            .filter(|x| x.get(0) && x.get(1))
            .count();
        let freq = ones as f64 / n as f64;
        assert!((freq - 0.5).abs() <= 0.02, "freq={freq}");
    }

    #[test]
    fn sample_kernel_zero_1x1_uniform() {
        let a = BitMatrix::zeros(1, 1);
        let p = a.rank_profile();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let n = 10_000;
        let ones = p
            .sample_kernel(1, n, &mut rng)
            .iter()
            .filter(|x| x.get(0))
            .count();
        assert!((ones as f64 / n as f64 - 0.5).abs() <= 0.02);
    }

    #[test]
    fn sparse_format_round_trip() {
        let a = BitMatrix::from_dense(&[&[0, 1, 0], &[1, 0, 1]]);
        let text = write_sparse(&a);
        assert_eq!(text, "2 3\n0 1\n1 0\n1 2\n");
        assert_eq!(read_sparse(&text).unwrap(), a);
        assert!(read_sparse("2 3\n0 1\n0 1\n").is_err()); // duplicate
        assert!(read_sparse("2 3\n5 0\n").is_err()); // out of range
    }

    #[test]
    fn bit_string_round_trip() {
        let v = BitVec::from_ones(70, &[0, 63, 64, 69]);
        let s = v.to_bit_string();
        assert_eq!(BitVec::from_bit_string(&s).unwrap(), v);
    }

    #[test]
    fn word_boundary_ops() {
        let mut v = BitVec::zeros(130);
        v.set(63, true);
        v.set(64, true);
        v.set(129, true);
        assert_eq!(v.count_ones(), 3);
        assert_eq!(v.ones().collect::<Vec<_>>(), vec![63, 64, 129]);
        assert_eq!(v.first_one_from(64), Some(64));
        assert_eq!(v.first_one_from(65), Some(129));
        v.flip(64);
        assert_eq!(v.count_ones(), 2);
    }
}
