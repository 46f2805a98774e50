use super::{BitVector, Gf2Error, SparseBitMatrix};

/// Incrementally built basis of a column space over GF(2).
///
/// Columns are offered one at a time; a column becomes a pivot iff it is
/// independent of the pivots accepted before it, so insertion order is the
/// pivot priority. Every basis vector remembers which pivot columns it is
/// the sum of, which is what lets [`ColumnBasis::solve`] back-substitute an
/// arbitrary right-hand side.
#[derive(Clone, Debug, Default)]
pub struct ColumnBasis {
    n_rows: usize,
    vecs: Vec<Vec<u64>>,
    pivot_rows: Vec<usize>,
    combos: Vec<Vec<u64>>,
    pivot_cols: Vec<usize>,
}

fn words_for(bits: usize) -> usize {
    bits.div_ceil(64).max(1)
}

#[inline]
fn bit(words: &[u64], i: usize) -> bool {
    words.get(i >> 6).is_some_and(|w| w >> (i & 63) & 1 == 1)
}

#[inline]
fn xor_into(dst: &mut Vec<u64>, src: &[u64]) {
    if dst.len() < src.len() {
        dst.resize(src.len(), 0);
    }
    for (d, s) in dst.iter_mut().zip(src) {
        *d ^= s;
    }
}

impl ColumnBasis {
    pub fn new(n_rows: usize) -> Self {
        Self {
            n_rows,
            ..Default::default()
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn rank(&self) -> usize {
        self.vecs.len()
    }

    /// Caller-supplied ids of the accepted pivot columns, in acceptance order.
    pub fn pivot_cols(&self) -> &[usize] {
        &self.pivot_cols
    }

    /// Enlarges the row dimension; existing columns are zero on new rows.
    pub fn grow_rows(&mut self, n_rows: usize) {
        if n_rows > self.n_rows {
            self.n_rows = n_rows;
        }
    }

    fn pack(&self, rows: &[usize]) -> Vec<u64> {
        let mut v = vec![0u64; words_for(self.n_rows)];
        for &r in rows {
            assert!(r < self.n_rows, "row {r} out of range {}", self.n_rows);
            v[r >> 6] ^= 1u64 << (r & 63);
        }
        v
    }

    /// Reduces `x` against the basis, returning the combination used.
    fn reduce(&self, x: &mut Vec<u64>) -> Vec<u64> {
        let mut combo = vec![0u64; words_for(self.rank())];
        for j in 0..self.vecs.len() {
            if bit(x, self.pivot_rows[j]) {
                xor_into(x, &self.vecs[j]);
                xor_into(&mut combo, &self.combos[j]);
            }
        }
        combo
    }

    /// Offers column `col_id` with support `rows`. Returns true if it was
    /// accepted as a new pivot.
    pub fn insert(&mut self, col_id: usize, rows: &[usize]) -> bool {
        let mut x = self.pack(rows);
        let mut combo = self.reduce(&mut x);
        let Some(pivot_row) = first_set(&x) else {
            return false;
        };
        let j = self.vecs.len();
        if combo.len() < words_for(j + 1) {
            combo.resize(words_for(j + 1), 0);
        }
        combo[j >> 6] ^= 1u64 << (j & 63);
        self.vecs.push(x);
        self.pivot_rows.push(pivot_row);
        self.combos.push(combo);
        self.pivot_cols.push(col_id);
        true
    }

    /// True if `rows` (as a target vector) lies in the span.
    pub fn contains(&self, rows: &[usize]) -> bool {
        let mut x = self.pack(rows);
        self.reduce(&mut x);
        first_set(&x).is_none()
    }

    /// Expresses the target as a sum of pivot columns. Returns the ids of
    /// the pivot columns used, or `None` when the target is outside the span.
    pub fn solve(&self, rows: &[usize]) -> Option<Vec<usize>> {
        let mut x = self.pack(rows);
        let combo = self.reduce(&mut x);
        if first_set(&x).is_some() {
            return None;
        }
        Some(
            (0..self.rank())
                .filter(|&j| bit(&combo, j))
                .map(|j| self.pivot_cols[j])
                .collect(),
        )
    }
}

fn first_set(words: &[u64]) -> Option<usize> {
    words
        .iter()
        .enumerate()
        .find(|(_, &w)| w != 0)
        .map(|(i, w)| i * 64 + w.trailing_zeros() as usize)
}

/// Result of Gaussian elimination with a caller-chosen column priority.
#[derive(Clone, Debug)]
pub struct Elimination {
    n_cols: usize,
    basis: ColumnBasis,
}

impl Elimination {
    /// Pivot columns in the order they were chosen.
    pub fn pivots(&self) -> &[usize] {
        self.basis.pivot_cols()
    }

    pub fn rank(&self) -> usize {
        self.basis.rank()
    }

    /// Back-substitutes `s`, returning a solution supported on pivot columns.
    pub fn solve(&self, s: &BitVector) -> Result<Option<BitVector>, Gf2Error> {
        if s.len() != self.basis.n_rows() {
            return Err(Gf2Error::DimensionMismatch {
                expected: self.basis.n_rows(),
                found: s.len(),
            });
        }
        let rows: Vec<usize> = s.ones().collect();
        Ok(self
            .basis
            .solve(&rows)
            .map(|cols| BitVector::from_indices(self.n_cols, cols)))
    }
}

/// Gaussian elimination taking columns greedily in `column_order`.
pub fn eliminate(m: &SparseBitMatrix, column_order: &[usize]) -> Result<Elimination, Gf2Error> {
    let mut seen = vec![false; m.n_cols()];
    let mut basis = ColumnBasis::new(m.n_rows());
    for &c in column_order {
        if c >= m.n_cols() || std::mem::replace(&mut seen[c], true) {
            return Err(Gf2Error::InvalidColumnOrder { col: c });
        }
        basis.insert(c, m.col(c));
    }
    Ok(Elimination {
        n_cols: m.n_cols(),
        basis,
    })
}

/// GF(2) rank.
pub fn rank(m: &SparseBitMatrix) -> usize {
    // Eliminate along the shorter dimension.
    if m.n_rows() < m.n_cols() {
        let t = m.transpose();
        let order: Vec<usize> = (0..t.n_cols()).collect();
        eliminate(&t, &order).map(|e| e.rank()).unwrap_or(0)
    } else {
        let order: Vec<usize> = (0..m.n_cols()).collect();
        eliminate(m, &order).map(|e| e.rank()).unwrap_or(0)
    }
}

/// Some `e` with `m * e == s`, or `None` if `s` is outside the column space.
pub fn solve(m: &SparseBitMatrix, s: &BitVector) -> Result<Option<BitVector>, Gf2Error> {
    if s.len() != m.n_rows() {
        return Err(Gf2Error::DimensionMismatch {
            expected: m.n_rows(),
            found: s.len(),
        });
    }
    let order: Vec<usize> = (0..m.n_cols()).collect();
    eliminate(m, &order)?.solve(s)
}

/// Basis of the right kernel `{x : m x = 0}`, one vector per free column.
pub fn kernel_basis(m: &SparseBitMatrix) -> Vec<BitVector> {
    let order: Vec<usize> = (0..m.n_cols()).collect();
    let elim = eliminate(m, &order).expect("natural order is valid");
    let mut is_pivot = vec![false; m.n_cols()];
    for &p in elim.pivots() {
        is_pivot[p] = true;
    }
    (0..m.n_cols())
        .filter(|&c| !is_pivot[c])
        .map(|c| {
            let target = m.col_vector(c);
            let mut x = elim
                .solve(&target)
                .expect("dimensions match")
                .expect("free column lies in pivot span");
            x.toggle(c);
            x
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat(rows: &[&[u8]]) -> SparseBitMatrix {
        let n_cols = rows.first().map_or(0, |r| r.len());
        SparseBitMatrix::from_coords(
            rows.len(),
            n_cols,
            rows.iter().enumerate().flat_map(|(r, row)| {
                row.iter()
                    .enumerate()
                    .filter(|(_, &v)| v == 1)
                    .map(move |(c, _)| (r, c))
            }),
        )
        .unwrap()
    }

    #[test]
    fn identity_rank_and_pivots() {
        let m = SparseBitMatrix::identity(3);
        assert_eq!(rank(&m), 3);
        let e = eliminate(&m, &[0, 1, 2]).unwrap();
        assert_eq!(e.pivots(), &[0, 1, 2]);
    }

    #[test]
    fn zero_matrix_rank() {
        assert_eq!(rank(&SparseBitMatrix::zeros(4, 6)), 0);
    }

    #[test]
    fn solve_identity() {
        let s = BitVector::from_bools(&[true, false, true]);
        let e = solve(&SparseBitMatrix::identity(3), &s).unwrap().unwrap();
        assert_eq!(e, s);
    }

    #[test]
    fn solve_zero_matrix_has_no_solution() {
        let s = BitVector::from_bools(&[true, false]);
        assert_eq!(solve(&SparseBitMatrix::zeros(2, 2), &s).unwrap(), None);
    }

    #[test]
    fn solve_upper_triangular() {
        // Enumerating e over {00,01,10,11}: only e=(0,1) gives (1,1).
        let m = mat(&[&[1, 1], &[0, 1]]);
        let s = BitVector::from_bools(&[true, true]);
        let e = solve(&m, &s).unwrap().unwrap();
        assert_eq!(e, BitVector::from_bools(&[false, true]));
    }

    #[test]
    fn repeated_column_never_pivots_twice() {
        let m = mat(&[&[1, 0, 1], &[1, 1, 1]]);
        let e = eliminate(&m, &[0, 2, 1]).unwrap();
        assert_eq!(e.pivots(), &[0, 1]);
        let e = eliminate(&m, &[2, 0, 1]).unwrap();
        assert_eq!(e.pivots(), &[2, 1]);
    }

    #[test]
    fn dimension_mismatch_is_error() {
        assert!(solve(&SparseBitMatrix::identity(3), &BitVector::zeros(2)).is_err());
    }

    #[test]
    fn invalid_order_rejected() {
        let m = SparseBitMatrix::identity(3);
        assert!(eliminate(&m, &[0, 0]).is_err());
        assert!(eliminate(&m, &[3]).is_err());
    }

    #[test]
    fn kernel_vectors_are_in_kernel() {
        let m = mat(&[&[1, 1, 0, 1], &[0, 1, 1, 1]]);
        let k = kernel_basis(&m);
        assert_eq!(k.len(), 2);
        for v in k {
            assert!(m.mul_vec(&v).unwrap().is_zero());
        }
    }

    #[test]
    fn basis_grows_rows() {
        let mut b = ColumnBasis::new(2);
        assert!(b.insert(0, &[0, 1]));
        b.grow_rows(4);
        assert!(b.insert(1, &[3]));
        assert!(b.contains(&[0, 1, 3]));
        assert!(!b.contains(&[2]));
        assert_eq!(b.solve(&[0, 1, 3]).unwrap(), vec![0, 1]);
    }
}
