use super::bits::{self, BitMatrix};
use super::field::{Field, Gf};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LinalgError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("right-hand side is not in the image")]
    NoSolution,
}

/// Partition of a coordinate range into consecutive blocks (one block per face).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Blocks {
    offsets: Vec<usize>,
    owner: Vec<u32>,
}

impl Blocks {
    pub fn new(sizes: impl IntoIterator<Item = usize>) -> Self {
        let mut offsets = vec![0];
        let mut owner = Vec::new();
        for (b, s) in sizes.into_iter().enumerate() {
            offsets.push(offsets.last().unwrap() + s);
            owner.extend(std::iter::repeat(b as u32).take(s));
        }
        Blocks { offsets, owner }
    }

    pub fn uniform(count: usize, size: usize) -> Self {
        Self::new(std::iter::repeat(size).take(count))
    }

    pub fn count(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn total(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn range(&self, b: usize) -> std::ops::Range<usize> {
        self.offsets[b]..self.offsets[b + 1]
    }

    pub fn size(&self, b: usize) -> usize {
        self.offsets[b + 1] - self.offsets[b]
    }

    #[inline]
    pub fn owner(&self, coord: usize) -> usize {
        self.owner[coord] as usize
    }

    pub fn weight(&self, v: &[Gf]) -> usize {
        (0..self.count()).filter(|&b| v[self.range(b)].iter().any(|&x| x != 0)).count()
    }

    pub fn support(&self, v: &[Gf]) -> Vec<usize> {
        (0..self.count()).filter(|&b| v[self.range(b)].iter().any(|&x| x != 0)).collect()
    }
}

/// Sparse vector over GF(2^e); entries sorted by index, no stored zeros.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct FieldVector {
    len: usize,
    idx: Vec<u32>,
    val: Vec<Gf>,
}

impl FieldVector {
    pub fn zeros(len: usize) -> Self {
        FieldVector { len, idx: Vec::new(), val: Vec::new() }
    }

    pub fn from_dense(v: &[Gf]) -> Self {
        let mut out = Self::zeros(v.len());
        for (i, &x) in v.iter().enumerate() {
            if x != 0 {
                out.idx.push(i as u32);
                out.val.push(x);
            }
        }
        out
    }

    pub fn from_entries(len: usize, mut entries: Vec<(usize, Gf)>) -> Self {
        entries.sort_by_key(|e| e.0);
        let mut out = Self::zeros(len);
        for (i, x) in entries {
            assert!(i < len, "index {i} out of bounds {len}");
            if out.idx.last() == Some(&(i as u32)) {
                *out.val.last_mut().unwrap() ^= x;
                if *out.val.last().unwrap() == 0 {
                    out.idx.pop();
                    out.val.pop();
                }
            } else if x != 0 {
                out.idx.push(i as u32);
                out.val.push(x);
            }
        }
        out
    }

    pub fn to_dense(&self) -> Vec<Gf> {
        let mut v = vec![0; self.len];
        for (i, x) in self.entries() {
            v[i] = x;
        }
        v
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn is_zero(&self) -> bool {
        self.idx.is_empty()
    }

    pub fn weight(&self) -> usize {
        self.idx.len()
    }

    pub fn block_weight(&self, blocks: &Blocks) -> usize {
        let mut last = usize::MAX;
        let mut w = 0;
        for &i in &self.idx {
            let b = blocks.owner(i as usize);
            if b != last {
                w += 1;
                last = b;
            }
        }
        w
    }

    pub fn get(&self, i: usize) -> Gf {
        self.idx.binary_search(&(i as u32)).map(|p| self.val[p]).unwrap_or(0)
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, Gf)> + '_ {
        self.idx.iter().map(|&i| i as usize).zip(self.val.iter().copied())
    }

    pub fn add(&self, other: &FieldVector) -> FieldVector {
        assert_eq!(self.len, other.len);
        let mut d = self.to_dense();
        for (i, x) in other.entries() {
            d[i] ^= x;
        }
        Self::from_dense(&d)
    }
}

/// Sparse matrix over GF(2^e) in compressed row form; no stored zeros.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FieldMatrix {
    rows: usize,
    cols: usize,
    ptr: Vec<usize>,
    idx: Vec<u32>,
    val: Vec<Gf>,
}

impl FieldMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        FieldMatrix { rows, cols, ptr: vec![0; rows + 1], idx: Vec::new(), val: Vec::new() }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_triplets(n, n, (0..n).map(|i| (i, i, 1)))
    }

    /// Builds from (row, col, value) triplets; duplicates are summed.
    pub fn from_triplets(rows: usize, cols: usize, triplets: impl IntoIterator<Item = (usize, usize, Gf)>) -> Self {
        let mut t: Vec<(usize, usize, Gf)> = triplets.into_iter().collect();
        t.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut m = Self::zeros(rows, cols);
        let mut k = 0;
        for r in 0..rows {
            while k < t.len() && t[k].0 == r {
                let c = t[k].1;
                assert!(c < cols, "column {c} out of bounds {cols}");
                let mut v = 0;
                while k < t.len() && t[k].0 == r && t[k].1 == c {
                    v ^= t[k].2;
                    k += 1;
                }
                if v != 0 {
                    m.idx.push(c as u32);
                    m.val.push(v);
                }
            }
            m.ptr[r + 1] = m.idx.len();
        }
        assert_eq!(k, t.len(), "row index out of bounds");
        m
    }

    pub fn from_rows(rows: &[Vec<Gf>]) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        Self::from_dense_rows(rows.len(), cols, rows)
    }

    pub fn from_dense_rows(nrows: usize, cols: usize, rows: &[Vec<Gf>]) -> Self {
        assert!(rows.iter().all(|r| r.len() == cols));
        Self::from_triplets(
            nrows,
            cols,
            rows.iter().enumerate().flat_map(|(r, row)| row.iter().enumerate().map(move |(c, &v)| (r, c, v))),
        )
    }

    /// Builds from already sorted, zero-free rows.
    pub fn from_sorted_rows(cols: usize, rows: Vec<Vec<(u32, Gf)>>) -> Self {
        let mut m = Self::zeros(rows.len(), cols);
        for (r, row) in rows.into_iter().enumerate() {
            for (c, v) in row {
                debug_assert!(v != 0 && (c as usize) < cols);
                m.idx.push(c);
                m.val.push(v);
            }
            m.ptr[r + 1] = m.idx.len();
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.idx.len()
    }

    pub fn is_zero(&self) -> bool {
        self.idx.is_empty()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, Gf)> + '_ {
        let s = self.ptr[r]..self.ptr[r + 1];
        self.idx[s.clone()].iter().map(|&c| c as usize).zip(self.val[s].iter().copied())
    }

    pub fn row_nnz(&self, r: usize) -> usize {
        self.ptr[r + 1] - self.ptr[r]
    }

    pub fn get(&self, r: usize, c: usize) -> Gf {
        let s = self.ptr[r]..self.ptr[r + 1];
        self.idx[s.clone()].binary_search(&(c as u32)).map(|p| self.val[s.start + p]).unwrap_or(0)
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, Gf)> + '_ {
        (0..self.rows).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }

    pub fn transpose(&self) -> FieldMatrix {
        let mut counts = vec![0usize; self.cols + 1];
        for &c in &self.idx {
            counts[c as usize + 1] += 1;
        }
        for i in 0..self.cols {
            counts[i + 1] += counts[i];
        }
        let ptr = counts.clone();
        let mut idx = vec![0u32; self.nnz()];
        let mut val = vec![0; self.nnz()];
        let mut next = counts;
        for r in 0..self.rows {
            for (c, v) in self.row(r) {
                let p = next[c];
                idx[p] = r as u32;
                val[p] = v;
                next[c] += 1;
            }
        }
        FieldMatrix { rows: self.cols, cols: self.rows, ptr, idx, val }
    }

    pub fn mul(&self, f: &Field, other: &FieldMatrix) -> FieldMatrix {
        assert_eq!(self.cols, other.rows, "inner dimensions");
        let mut acc = vec![0 as Gf; other.cols];
        let mut touched: Vec<u32> = Vec::new();
        let mut mark = vec![false; other.cols];
        let mut out = FieldMatrix::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for (k, a) in self.row(r) {
                for (c, b) in other.row(k) {
                    if !mark[c] {
                        mark[c] = true;
                        touched.push(c as u32);
                    }
                    acc[c] ^= f.mul(a, b);
                }
            }
            touched.sort_unstable();
            for &c in &touched {
                let c = c as usize;
                if acc[c] != 0 {
                    out.idx.push(c as u32);
                    out.val.push(acc[c]);
                }
                acc[c] = 0;
                mark[c] = false;
            }
            touched.clear();
            out.ptr[r + 1] = out.idx.len();
        }
        out
    }

    pub fn add(&self, other: &FieldMatrix) -> FieldMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self::from_triplets(self.rows, self.cols, self.triplets().chain(other.triplets()))
    }

    pub fn mul_vec(&self, f: &Field, x: &[Gf]) -> Vec<Gf> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows).map(|r| self.row(r).fold(0, |acc, (c, v)| acc ^ f.mul(v, x[c]))).collect()
    }

    /// Computes `Mᵀ y` without materializing the transpose.
    pub fn tmul_vec(&self, f: &Field, y: &[Gf]) -> Vec<Gf> {
        assert_eq!(y.len(), self.rows);
        let mut out = vec![0; self.cols];
        for (r, &yr) in y.iter().enumerate() {
            if yr != 0 {
                for (c, v) in self.row(r) {
                    out[c] ^= f.mul(v, yr);
                }
            }
        }
        out
    }

    pub fn apply(&self, f: &Field, x: &FieldVector) -> FieldVector {
        FieldVector::from_dense(&self.mul_vec(f, &x.to_dense()))
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut d = DenseMatrix::zeros(self.rows, self.cols);
        for (r, c, v) in self.triplets() {
            d.set(r, c, v);
        }
        d
    }

    pub fn select_columns(&self, cols: &[usize]) -> FieldMatrix {
        let mut pos = vec![usize::MAX; self.cols];
        for (i, &c) in cols.iter().enumerate() {
            pos[c] = i;
        }
        Self::from_triplets(
            self.rows,
            cols.len(),
            self.triplets().filter(|&(_, c, _)| pos[c] != usize::MAX).map(|(r, c, v)| (r, pos[c], v)),
        )
    }

    pub fn select_rows(&self, rows: &[usize]) -> FieldMatrix {
        Self::from_sorted_rows(
            self.cols,
            rows.iter().map(|&r| self.row(r).map(|(c, v)| (c as u32, v)).collect()).collect(),
        )
    }

    pub fn row_weights(&self) -> Vec<usize> {
        (0..self.rows).map(|r| self.row_nnz(r)).collect()
    }

    pub fn col_weights(&self) -> Vec<usize> {
        let mut w = vec![0; self.cols];
        for &c in &self.idx {
            w[c as usize] += 1;
        }
        w
    }
}

/// Row-major dense matrix used as the elimination workspace.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Gf>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix { rows, cols, data: vec![0; rows * cols] }
    }

    pub fn from_row_vecs(cols: usize, rows: &[Vec<Gf>]) -> Self {
        let mut d = Self::zeros(rows.len(), cols);
        for (r, row) in rows.iter().enumerate() {
            d.row_mut(r).copy_from_slice(row);
        }
        d
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> Gf {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: Gf) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[Gf] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [Gf] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn to_sparse(&self) -> FieldMatrix {
        FieldMatrix::from_triplets(
            self.rows,
            self.cols,
            (0..self.rows).flat_map(|r| (0..self.cols).map(move |c| (r, c))).map(|(r, c)| (r, c, self.get(r, c))),
        )
    }

    fn to_bits(&self) -> BitMatrix {
        let mut b = BitMatrix::zeros(self.rows, self.cols);
        for r in 0..self.rows {
            for c in 0..self.cols {
                if self.get(r, c) != 0 {
                    b.toggle(r, c);
                }
            }
        }
        b
    }

    fn assign_bits(&mut self, b: &BitMatrix) {
        for r in 0..self.rows {
            let row = b.row(r);
            for c in 0..self.cols {
                self.data[r * self.cols + c] = bits::bit(row, c) as Gf;
            }
        }
    }

    /// In-place reduced row echelon form pivoting on columns `< limit`; returns pivot columns.
    pub fn rref_upto(&mut self, f: &Field, limit: usize) -> Vec<usize> {
        if f.order() == 2 {
            let mut b = self.to_bits();
            let p = b.rref_upto(limit);
            self.assign_bits(&b);
            return p;
        }
        let cols = self.cols;
        let mut pivots = Vec::new();
        let mut r = 0;
        let mut tmp = vec![0 as Gf; cols];
        for c in 0..limit {
            if r == self.rows {
                break;
            }
            let Some(p) = (r..self.rows).find(|&i| self.get(i, c) != 0) else { continue };
            if p != r {
                for j in 0..cols {
                    self.data.swap(r * cols + j, p * cols + j);
                }
            }
            let inv = f.inv(self.get(r, c));
            f.scale(self.row_mut(r), inv);
            tmp.copy_from_slice(self.row(r));
            for i in 0..self.rows {
                let x = self.get(i, c);
                if i != r && x != 0 {
                    f.axpy(&mut self.data[i * cols..(i + 1) * cols], x, &tmp);
                }
            }
            pivots.push(c);
            r += 1;
        }
        pivots
    }

    pub fn rref(&mut self, f: &Field) -> Vec<usize> {
        let l = self.cols;
        self.rref_upto(f, l)
    }

    pub fn rank(&self, f: &Field) -> usize {
        if f.order() == 2 {
            return self.to_bits().rank();
        }
        self.clone().rref(f).len()
    }

    pub fn kernel_basis(&self, f: &Field) -> Vec<Vec<Gf>> {
        let mut m = self.clone();
        let pivots = m.rref(f);
        let mut is_pivot = vec![false; self.cols];
        for &p in &pivots {
            is_pivot[p] = true;
        }
        (0..self.cols)
            .filter(|&c| !is_pivot[c])
            .map(|fc| {
                let mut v = vec![0; self.cols];
                v[fc] = 1;
                for (i, &pc) in pivots.iter().enumerate() {
                    v[pc] = m.get(i, fc);
                }
                v
            })
            .collect()
    }

    pub fn mul_vec(&self, f: &Field, x: &[Gf]) -> Vec<Gf> {
        (0..self.rows).map(|r| f.dot(self.row(r), x)).collect()
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut t = DenseMatrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.set(c, r, self.get(r, c));
            }
        }
        t
    }
}

pub fn rank(f: &Field, m: &FieldMatrix) -> usize {
    // eliminate along the shorter side
    if m.rows() > m.cols() {
        m.transpose().to_dense().rank(f)
    } else {
        m.to_dense().rank(f)
    }
}

pub fn kernel_basis(f: &Field, m: &FieldMatrix) -> Vec<FieldVector> {
    m.to_dense().kernel_basis(f).iter().map(|v| FieldVector::from_dense(v)).collect()
}

pub fn kernel_basis_dense(f: &Field, m: &FieldMatrix) -> Vec<Vec<Gf>> {
    m.to_dense().kernel_basis(f)
}

/// Returns some x with Mx = b; free variables are set to zero.
pub fn solve_linear(f: &Field, m: &FieldMatrix, b: &FieldVector) -> Result<FieldVector, LinalgError> {
    if b.len() != m.rows() {
        return Err(LinalgError::DimensionMismatch { expected: m.rows(), got: b.len() });
    }
    if b.is_zero() {
        return Ok(FieldVector::zeros(m.cols()));
    }
    Solver::new(f, m).solve(f, &b.to_dense()).map(|x| FieldVector::from_dense(&x))
}

/// Pre-factored solver for repeated right-hand sides with the same matrix.
#[derive(Clone, Debug)]
pub struct Solver {
    rows: usize,
    cols: usize,
    pivots: Vec<usize>,
    /// transform T with T·M = R (reduced echelon form), stored row-major
    transform: DenseMatrix,
}

impl Solver {
    pub fn new(f: &Field, m: &FieldMatrix) -> Self {
        let (rows, cols) = (m.rows(), m.cols());
        let mut aug = DenseMatrix::zeros(rows, cols + rows);
        for (r, c, v) in m.triplets() {
            aug.set(r, c, v);
        }
        for r in 0..rows {
            aug.set(r, cols + r, 1);
        }
        let pivots = aug.rref_upto(f, cols);
        let mut transform = DenseMatrix::zeros(rows, rows);
        for r in 0..rows {
            transform.row_mut(r).copy_from_slice(&aug.row(r)[cols..]);
        }
        Solver { rows, cols, pivots, transform }
    }

    pub fn rank(&self) -> usize {
        self.pivots.len()
    }

    pub fn pivots(&self) -> &[usize] {
        &self.pivots
    }

    pub fn solve(&self, f: &Field, b: &[Gf]) -> Result<Vec<Gf>, LinalgError> {
        if b.len() != self.rows {
            return Err(LinalgError::DimensionMismatch { expected: self.rows, got: b.len() });
        }
        let mut x = vec![0; self.cols];
        if b.iter().all(|&v| v == 0) {
            return Ok(x);
        }
        let c = self.transform.mul_vec(f, b);
        if c[self.rank()..].iter().any(|&v| v != 0) {
            return Err(LinalgError::NoSolution);
        }
        for (i, &p) in self.pivots.iter().enumerate() {
            x[p] = c[i];
        }
        Ok(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two_solve() {
        let f = Field::new(1).unwrap();
        let m = FieldMatrix::from_rows(&[vec![1, 1], vec![0, 1]]);
        let x = solve_linear(&f, &m, &FieldVector::from_dense(&[1, 1])).unwrap();
        assert_eq!(x.to_dense(), vec![0, 1]);
        let z = FieldMatrix::from_rows(&[vec![0, 0]]);
        assert_eq!(solve_linear(&f, &z, &FieldVector::from_dense(&[1])), Err(LinalgError::NoSolution));
        assert!(matches!(
            solve_linear(&f, &z, &FieldVector::from_dense(&[1, 0])),
            Err(LinalgError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn from_triplets_cancels_duplicates() {
        let m = FieldMatrix::from_triplets(2, 2, [(0, 0, 3), (0, 0, 3), (1, 1, 2)]);
        assert_eq!(m.nnz(), 1);
        assert_eq!(m.get(1, 1), 2);
    }
}
