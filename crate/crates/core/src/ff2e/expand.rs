use std::collections::HashMap;

use super::bits::{self, BitMatrix};
use super::field::{Field, Gf};
use super::matrix::FieldMatrix;

/// Sparse binary matrix (row-compressed pattern).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinaryMatrix {
    rows: usize,
    cols: usize,
    ptr: Vec<usize>,
    idx: Vec<u32>,
}

impl BinaryMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        BinaryMatrix { rows, cols, ptr: vec![0; rows + 1], idx: Vec::new() }
    }

    /// Builds from (row, col) pairs; a pair listed twice cancels.
    pub fn from_entries(rows: usize, cols: usize, entries: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut e: Vec<(usize, usize)> = entries.into_iter().collect();
        e.sort_unstable();
        let mut m = Self::zeros(rows, cols);
        let mut k = 0;
        for r in 0..rows {
            while k < e.len() && e[k].0 == r {
                let c = e[k].1;
                assert!(c < cols, "column {c} out of bounds {cols}");
                let mut n = 0;
                while k < e.len() && e[k] == (r, c) {
                    n += 1;
                    k += 1;
                }
                if n % 2 == 1 {
                    m.idx.push(c as u32);
                }
            }
            m.ptr[r + 1] = m.idx.len();
        }
        assert_eq!(k, e.len(), "row index out of bounds");
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

    pub fn row(&self, r: usize) -> impl Iterator<Item = usize> + '_ {
        self.idx[self.ptr[r]..self.ptr[r + 1]].iter().map(|&c| c as usize)
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.rows).flat_map(move |r| self.row(r).map(move |c| (r, c)))
    }

    pub fn transpose(&self) -> BinaryMatrix {
        Self::from_entries(self.cols, self.rows, self.entries().map(|(r, c)| (c, r)))
    }

    pub fn mul(&self, other: &BinaryMatrix) -> BinaryMatrix {
        assert_eq!(self.cols, other.rows);
        let mut out = Vec::new();
        let mut acc = vec![false; other.cols];
        let mut touched = Vec::new();
        for r in 0..self.rows {
            for k in self.row(r) {
                for c in other.row(k) {
                    if !acc[c] {
                        touched.push(c);
                    }
                    acc[c] = !acc[c];
                }
            }
            for &c in &touched {
                if acc[c] {
                    out.push((r, c));
                    acc[c] = false;
                }
            }
            touched.clear();
        }
        Self::from_entries(self.rows, other.cols, out)
    }

    pub fn is_zero(&self) -> bool {
        self.idx.is_empty()
    }

    pub fn to_bits(&self) -> BitMatrix {
        let mut b = BitMatrix::zeros(self.rows, self.cols);
        for (r, c) in self.entries() {
            b.toggle(r, c);
        }
        b
    }

    pub fn to_field_matrix(&self) -> FieldMatrix {
        FieldMatrix::from_triplets(self.rows, self.cols, self.entries().map(|(r, c)| (r, c, 1)))
    }

    pub fn rank(&self) -> usize {
        if self.rows > self.cols {
            self.transpose().to_bits().rank()
        } else {
            self.to_bits().rank()
        }
    }

    /// Product with a packed bit vector.
    pub fn mul_bits(&self, x: &[u64]) -> Vec<u64> {
        let mut out = vec![0u64; bits::words(self.rows)];
        for r in 0..self.rows {
            if self.row(r).filter(|&c| bits::bit(x, c)).count() % 2 == 1 {
                bits::flip(&mut out, r);
            }
        }
        out
    }

    pub fn row_weights(&self) -> Vec<usize> {
        (0..self.rows).map(|r| self.ptr[r + 1] - self.ptr[r]).collect()
    }

    pub fn col_weights(&self) -> Vec<usize> {
        let mut w = vec![0; self.cols];
        for &c in &self.idx {
            w[c as usize] += 1;
        }
        w
    }
}

/// Column masks of multiplication-by-α in `basis`: entry j has bit i set iff
/// coordinate i of α·b_j is one.
fn mult_matrix(f: &Field, alpha: Gf, basis: &[Gf], coords: &dyn Fn(Gf) -> u32) -> Vec<u32> {
    basis.iter().map(|&b| coords(f.mul(alpha, b))).collect()
}

fn expand_with(m: &FieldMatrix, f: &Field, basis: &[Gf], coords: &dyn Fn(Gf) -> u32) -> BinaryMatrix {
    let e = basis.len();
    let mut cache: HashMap<Gf, Vec<u32>> = HashMap::new();
    let mut entries = Vec::with_capacity(m.nnz() * e);
    for (r, c, a) in m.triplets() {
        let cols = cache.entry(a).or_insert_with(|| mult_matrix(f, a, basis, coords));
        for (j, &mask) in cols.iter().enumerate() {
            for i in 0..e {
                if mask >> i & 1 == 1 {
                    entries.push((r * e + i, c * e + j));
                }
            }
        }
    }
    BinaryMatrix::from_entries(m.rows() * e, m.cols() * e, entries)
}

/// Replaces each entry α by the e×e binary matrix of multiplication by α in the
/// self-dual basis. Entry (i, j) of that block is Tr(α·b_i·b_j), so the block is
/// symmetric and expansion commutes with transposition.
pub fn f2_expand(m: &FieldMatrix, f: &Field) -> BinaryMatrix {
    let basis = f.selfdual_basis().to_vec();
    expand_with(m, f, &basis, &|x| f.coords(x))
}

/// Expansion in an arbitrary GF(2)-basis of the field. Only the self-dual basis
/// makes expansion commute with transposition.
pub fn f2_expand_in_basis(m: &FieldMatrix, f: &Field, basis: &[Gf]) -> BinaryMatrix {
    let e = f.degree() as usize;
    assert_eq!(basis.len(), e);
    // invert the basis matrix over GF(2): column j of B is basis[j]
    let mut aug = BitMatrix::zeros(e, 2 * e);
    for (j, &b) in basis.iter().enumerate() {
        for i in 0..e {
            if b >> i & 1 == 1 {
                aug.toggle(i, j);
            }
        }
    }
    for i in 0..e {
        aug.toggle(i, e + i);
    }
    let piv = aug.rref_upto(e);
    assert_eq!(piv.len(), e, "not a basis");
    let inv: Vec<u32> = (0..e)
        .map(|i| (0..e).fold(0u32, |acc, k| acc | (aug.get(i, e + k) as u32) << k))
        .collect();
    let coords = move |x: Gf| -> u32 {
        (0..e).fold(0u32, |acc, i| acc | (((inv[i] & x as u32).count_ones() & 1) << i))
    };
    expand_with(m, f, basis, &coords)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn omega_block_has_order_three() {
        let f = Field::new(2).unwrap();
        let w = FieldMatrix::from_rows(&[vec![2]]);
        let b = f2_expand(&w, &f);
        let id = BinaryMatrix::from_entries(2, 2, [(0, 0), (1, 1)]);
        assert_ne!(b, id);
        assert_eq!(b.mul(&b).mul(&b), id);
    }

    #[test]
    fn polynomial_basis_breaks_transpose() {
        let f = Field::new(3).unwrap();
        let m = FieldMatrix::from_rows(&[vec![2, 1], vec![3, 0]]);
        let pb = [1, 2, 4];
        assert_ne!(f2_expand_in_basis(&m.transpose(), &f, &pb), f2_expand_in_basis(&m, &f, &pb).transpose());
        assert_eq!(f2_expand(&m.transpose(), &f), f2_expand(&m, &f).transpose());
    }
}
