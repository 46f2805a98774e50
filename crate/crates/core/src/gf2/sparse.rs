use std::collections::BTreeSet;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{BitVector, Gf2Error};

/// Sparse binary matrix with both row-major and column-major adjacency.
///
/// Entries are stored once in CSR order; the CSC view keeps, for each
/// column entry, the position of the same entry in the CSR arrays so that
/// per-edge message buffers can be shared between the two views.
#[derive(Clone, PartialEq, Eq)]
pub struct SparseBitMatrix {
    n_rows: usize,
    n_cols: usize,
    row_ptr: Vec<usize>,
    row_cols: Vec<usize>,
    col_ptr: Vec<usize>,
    col_rows: Vec<usize>,
    col_edges: Vec<usize>,
}

impl SparseBitMatrix {
    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Self::from_sorted_rows(n_rows, n_cols, vec![Vec::new(); n_rows])
    }

    pub fn identity(n: usize) -> Self {
        Self::from_sorted_rows(n, n, (0..n).map(|i| vec![i]).collect())
    }

    /// Builds from a list of (row, col) coordinates. Duplicates are rejected.
    pub fn from_coords(
        n_rows: usize,
        n_cols: usize,
        coords: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self, Gf2Error> {
        let mut rows: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n_rows];
        for (r, c) in coords {
            if r >= n_rows || c >= n_cols {
                return Err(Gf2Error::OutOfRange {
                    row: r,
                    col: c,
                    n_rows,
                    n_cols,
                });
            }
            if !rows[r].insert(c) {
                return Err(Gf2Error::DuplicateEntry { row: r, col: c });
            }
        }
        Ok(Self::from_sorted_rows(
            n_rows,
            n_cols,
            rows.into_iter().map(|s| s.into_iter().collect()).collect(),
        ))
    }

    /// Builds from per-row column lists (any order, no duplicates).
    pub fn from_rows(n_cols: usize, rows: Vec<Vec<usize>>) -> Result<Self, Gf2Error> {
        let n_rows = rows.len();
        Self::from_coords(
            n_rows,
            n_cols,
            rows.into_iter()
                .enumerate()
                .flat_map(|(r, cols)| cols.into_iter().map(move |c| (r, c))),
        )
    }

    /// Builds from per-column row lists (any order, no duplicates).
    pub fn from_cols(n_rows: usize, cols: Vec<Vec<usize>>) -> Result<Self, Gf2Error> {
        let n_cols = cols.len();
        Self::from_coords(
            n_rows,
            n_cols,
            cols.into_iter()
                .enumerate()
                .flat_map(|(c, rows)| rows.into_iter().map(move |r| (r, c))),
        )
    }

    /// Rows must already be sorted, deduplicated and in range.
    fn from_sorted_rows(n_rows: usize, n_cols: usize, rows: Vec<Vec<usize>>) -> Self {
        let mut row_ptr = Vec::with_capacity(n_rows + 1);
        let mut row_cols = Vec::new();
        row_ptr.push(0);
        for r in &rows {
            row_cols.extend_from_slice(r);
            row_ptr.push(row_cols.len());
        }

        let mut col_counts = vec![0usize; n_cols + 1];
        for &c in &row_cols {
            col_counts[c + 1] += 1;
        }
        for c in 0..n_cols {
            col_counts[c + 1] += col_counts[c];
        }
        let col_ptr = col_counts;
        let mut fill = col_ptr.clone();
        let nnz = row_cols.len();
        let mut col_rows = vec![0; nnz];
        let mut col_edges = vec![0; nnz];
        for r in 0..n_rows {
            for e in row_ptr[r]..row_ptr[r + 1] {
                let c = row_cols[e];
                col_rows[fill[c]] = r;
                col_edges[fill[c]] = e;
                fill[c] += 1;
            }
        }
        Self {
            n_rows,
            n_cols,
            row_ptr,
            row_cols,
            col_ptr,
            col_rows,
            col_edges,
        }
    }

    #[inline]
    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    #[inline]
    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    #[inline]
    pub fn nnz(&self) -> usize {
        self.row_cols.len()
    }

    /// Sorted column indices of row `r`.
    #[inline]
    pub fn row(&self, r: usize) -> &[usize] {
        &self.row_cols[self.row_ptr[r]..self.row_ptr[r + 1]]
    }

    /// Sorted row indices of column `c`.
    #[inline]
    pub fn col(&self, c: usize) -> &[usize] {
        &self.col_rows[self.col_ptr[c]..self.col_ptr[c + 1]]
    }

    /// CSR edge ids of the entries of column `c`, aligned with [`Self::col`].
    #[inline]
    pub fn col_edge_ids(&self, c: usize) -> &[usize] {
        &self.col_edges[self.col_ptr[c]..self.col_ptr[c + 1]]
    }

    /// Range of CSR edge ids belonging to row `r`.
    #[inline]
    pub fn row_edge_range(&self, r: usize) -> std::ops::Range<usize> {
        self.row_ptr[r]..self.row_ptr[r + 1]
    }

    pub fn get(&self, r: usize, c: usize) -> bool {
        self.row(r).binary_search(&c).is_ok()
    }

    pub fn coords(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n_rows).flat_map(move |r| self.row(r).iter().map(move |&c| (r, c)))
    }

    pub fn transpose(&self) -> Self {
        let rows = (0..self.n_cols).map(|c| self.col(c).to_vec()).collect();
        Self::from_sorted_rows(self.n_cols, self.n_rows, rows)
    }

    /// Matrix-vector product over GF(2).
    pub fn mul_vec(&self, v: &BitVector) -> Result<BitVector, Gf2Error> {
        if v.len() != self.n_cols {
            return Err(Gf2Error::DimensionMismatch {
                expected: self.n_cols,
                found: v.len(),
            });
        }
        let mut out = BitVector::zeros(self.n_rows);
        for c in v.ones() {
            for &r in self.col(c) {
                out.toggle(r);
            }
        }
        Ok(out)
    }

    /// Product `self * other` over GF(2).
    pub fn mul(&self, other: &SparseBitMatrix) -> Result<SparseBitMatrix, Gf2Error> {
        if self.n_cols != other.n_rows {
            return Err(Gf2Error::DimensionMismatch {
                expected: self.n_cols,
                found: other.n_rows,
            });
        }
        let mut rows = Vec::with_capacity(self.n_rows);
        let mut acc = BitVector::zeros(other.n_cols);
        for r in 0..self.n_rows {
            acc.clear();
            for &k in self.row(r) {
                for &c in other.row(k) {
                    acc.toggle(c);
                }
            }
            rows.push(acc.ones().collect());
        }
        Ok(Self::from_sorted_rows(self.n_rows, other.n_cols, rows))
    }

    pub fn is_zero(&self) -> bool {
        self.nnz() == 0
    }

    /// Horizontal concatenation `[self | other]`.
    pub fn hstack(&self, other: &SparseBitMatrix) -> Result<SparseBitMatrix, Gf2Error> {
        if self.n_rows != other.n_rows {
            return Err(Gf2Error::DimensionMismatch {
                expected: self.n_rows,
                found: other.n_rows,
            });
        }
        let rows = (0..self.n_rows)
            .map(|r| {
                let mut row = self.row(r).to_vec();
                row.extend(other.row(r).iter().map(|&c| c + self.n_cols));
                row
            })
            .collect();
        Ok(Self::from_sorted_rows(
            self.n_rows,
            self.n_cols + other.n_cols,
            rows,
        ))
    }

    /// Vertical concatenation.
    pub fn vstack(&self, other: &SparseBitMatrix) -> Result<SparseBitMatrix, Gf2Error> {
        if self.n_cols != other.n_cols {
            return Err(Gf2Error::DimensionMismatch {
                expected: self.n_cols,
                found: other.n_cols,
            });
        }
        let rows = (0..self.n_rows)
            .map(|r| self.row(r).to_vec())
            .chain((0..other.n_rows).map(|r| other.row(r).to_vec()))
            .collect();
        Ok(Self::from_sorted_rows(
            self.n_rows + other.n_rows,
            self.n_cols,
            rows,
        ))
    }

    /// Submatrix on the given rows and columns, re-indexed in the given order.
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> SparseBitMatrix {
        let mut col_map = vec![usize::MAX; self.n_cols];
        for (new, &c) in cols.iter().enumerate() {
            col_map[c] = new;
        }
        let out_rows = rows
            .iter()
            .map(|&r| {
                let mut row: Vec<usize> = self
                    .row(r)
                    .iter()
                    .filter_map(|&c| (col_map[c] != usize::MAX).then_some(col_map[c]))
                    .collect();
                row.sort_unstable();
                row
            })
            .collect();
        Self::from_sorted_rows(rows.len(), cols.len(), out_rows)
    }

    pub fn row_vector(&self, r: usize) -> BitVector {
        BitVector::from_indices(self.n_cols, self.row(r).iter().copied())
    }

    pub fn col_vector(&self, c: usize) -> BitVector {
        BitVector::from_indices(self.n_rows, self.col(c).iter().copied())
    }
}

impl std::fmt::Debug for SparseBitMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "SparseBitMatrix {}x{} nnz={}", self.n_rows, self.n_cols, self.nnz())?;
        if self.n_rows <= 32 && self.n_cols <= 64 {
            for r in 0..self.n_rows {
                let line: String = (0..self.n_cols)
                    .map(|c| if self.get(r, c) { '1' } else { '.' })
                    .collect();
                writeln!(f, "  {line}")?;
            }
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct SparseRepr {
    n_rows: usize,
    n_cols: usize,
    rows: Vec<Vec<usize>>,
}

impl Serialize for SparseBitMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        SparseRepr {
            n_rows: self.n_rows,
            n_cols: self.n_cols,
            rows: (0..self.n_rows).map(|r| self.row(r).to_vec()).collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for SparseBitMatrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let repr = SparseRepr::deserialize(deserializer)?;
        if repr.rows.len() != repr.n_rows {
            return Err(serde::de::Error::custom(format!(
                "expected {} rows, found {}",
                repr.n_rows,
                repr.rows.len()
            )));
        }
        SparseBitMatrix::from_rows(repr.n_cols, repr.rows).map_err(serde::de::Error::custom)
    }
}
