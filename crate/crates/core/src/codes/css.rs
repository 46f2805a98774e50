use serde::{Deserialize, Serialize};

use super::CodeError;
use crate::gf2::{kernel_basis, rank, BitVector, ColumnBasis, SparseBitMatrix};

/// Geometry of a toric code, used to place checks on the torus.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToricLayout {
    pub d: usize,
}

impl ToricLayout {
    /// Torus coordinate (row, col) of check `index` (vertex or plaquette).
    pub fn check_coord(&self, index: usize) -> (usize, usize) {
        (index / self.d, index % self.d)
    }

    /// Manhattan distance with periodic wraparound.
    pub fn distance(&self, a: usize, b: usize) -> usize {
        let (ar, ac) = self.check_coord(a);
        let (br, bc) = self.check_coord(b);
        let wrap = |x: usize, y: usize| {
            let diff = x.abs_diff(y);
            diff.min(self.d - diff)
        };
        wrap(ar, br) + wrap(ac, bc)
    }
}

/// A CSS stabilizer code with a chosen basis of logical operators.
#[derive(Clone, Debug)]
pub struct CssCode {
    pub n: usize,
    /// X-type checks; they detect Z errors.
    pub hx: SparseBitMatrix,
    /// Z-type checks; they detect X errors.
    pub hz: SparseBitMatrix,
    /// Supports of X logicals (in ker Hz, independent of rows of Hx).
    pub logical_x: Vec<BitVector>,
    /// Supports of Z logicals (in ker Hx, independent of rows of Hz).
    pub logical_z: Vec<BitVector>,
    pub k: usize,
    /// Declared distance. Not verified.
    pub d: usize,
    pub toric: Option<ToricLayout>,
}

impl CssCode {
    /// Builds a code from its check matrices, computing `k` and a logical basis.
    pub fn from_checks(hx: SparseBitMatrix, hz: SparseBitMatrix, d: usize) -> Result<Self, CodeError> {
        if hx.n_cols() != hz.n_cols() {
            return Err(CodeError::Invalid(format!(
                "Hx has {} columns but Hz has {}",
                hx.n_cols(),
                hz.n_cols()
            )));
        }
        if !hx.mul(&hz.transpose())?.is_zero() {
            return Err(CodeError::Invalid("X and Z checks do not commute".into()));
        }
        let n = hx.n_cols();
        let logical_z = logical_basis(&hx, &hz);
        let logical_x = logical_basis(&hz, &hx);
        let k = n - rank(&hx) - rank(&hz);
        debug_assert_eq!(logical_z.len(), k);
        debug_assert_eq!(logical_x.len(), k);
        Ok(Self {
            n,
            hx,
            hz,
            logical_x,
            logical_z,
            k,
            d,
            toric: None,
        })
    }

    /// Re-checks the CSS and logical-operator invariants.
    pub fn verify(&self) -> Result<(), CodeError> {
        if !self.hx.mul(&self.hz.transpose())?.is_zero() {
            return Err(CodeError::Invalid("X and Z checks do not commute".into()));
        }
        if self.k != self.n - rank(&self.hx) - rank(&self.hz) {
            return Err(CodeError::Invalid("k does not match check ranks".into()));
        }
        for (name, logicals, commuting, stabilizers) in [
            ("Z", &self.logical_z, &self.hx, &self.hz),
            ("X", &self.logical_x, &self.hz, &self.hx),
        ] {
            if logicals.len() != self.k {
                return Err(CodeError::Invalid(format!(
                    "{} {name} logicals for k = {}",
                    logicals.len(),
                    self.k
                )));
            }
            for l in logicals {
                if !commuting.mul_vec(l)?.is_zero() {
                    return Err(CodeError::Invalid(format!("{name} logical fails a check")));
                }
            }
            let mut basis = ColumnBasis::new(self.n);
            for r in 0..stabilizers.n_rows() {
                basis.insert(usize::MAX, stabilizers.row(r));
            }
            for l in logicals {
                let support: Vec<usize> = l.ones().collect();
                if !basis.insert(usize::MAX, &support) {
                    return Err(CodeError::Invalid(format!(
                        "{name} logicals are dependent on checks"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Vectors in ker(`commuting`) that are independent modulo the row space of
/// `stabilizers`, one per logical qubit.
fn logical_basis(commuting: &SparseBitMatrix, stabilizers: &SparseBitMatrix) -> Vec<BitVector> {
    let n = commuting.n_cols();
    let mut basis = ColumnBasis::new(n);
    for r in 0..stabilizers.n_rows() {
        basis.insert(usize::MAX, stabilizers.row(r));
    }
    kernel_basis(commuting)
        .into_iter()
        .filter(|v| {
            let support: Vec<usize> = v.ones().collect();
            basis.insert(usize::MAX, &support)
        })
        .collect()
}

/// Toric code on a `d x d` torus: qubits on edges, vertex X checks,
/// plaquette Z checks.
pub fn build_toric(d: usize) -> Result<CssCode, CodeError> {
    if d < 3 {
        return Err(CodeError::Invalid(format!("toric distance must be >= 3, got {d}")));
    }
    let h = |i: usize, j: usize| (i % d) * d + (j % d);
    let v = |i: usize, j: usize| d * d + (i % d) * d + (j % d);
    let n = 2 * d * d;

    let mut vertex = Vec::with_capacity(d * d);
    let mut plaquette = Vec::with_capacity(d * d);
    for i in 0..d {
        for j in 0..d {
            vertex.push(vec![h(i, j), h(i, j + d - 1), v(i, j), v(i + d - 1, j)]);
            plaquette.push(vec![h(i, j), h(i + 1, j), v(i, j), v(i, j + 1)]);
        }
    }
    let hx = SparseBitMatrix::from_rows(n, vertex)?;
    let hz = SparseBitMatrix::from_rows(n, plaquette)?;

    // Z logicals run along primal cycles, X logicals along dual cycles;
    // pair j of each anticommutes.
    let logical_z = vec![
        BitVector::from_indices(n, (0..d).map(|j| h(0, j))),
        BitVector::from_indices(n, (0..d).map(|i| v(i, 0))),
    ];
    let logical_x = vec![
        BitVector::from_indices(n, (0..d).map(|i| h(i, 0))),
        BitVector::from_indices(n, (0..d).map(|j| v(0, j))),
    ];
    let k = n - rank(&hx) - rank(&hz);
    Ok(CssCode {
        n,
        hx,
        hz,
        logical_x,
        logical_z,
        k,
        d,
        toric: Some(ToricLayout { d }),
    })
}

/// Monomial `x^a y^b` in the group algebra of `Z_l x Z_m`.
pub type Monomial = (usize, usize);

fn circulant_sum(l: usize, m: usize, terms: &[Monomial]) -> Vec<Vec<usize>> {
    (0..l * m)
        .map(|row| {
            let (i, j) = (row / m, row % m);
            let mut cols = BitVector::zeros(l * m);
            for &(a, b) in terms {
                cols.toggle(((i + a) % l) * m + (j + b) % m);
            }
            cols.ones().collect()
        })
        .collect()
}

/// Bivariate bicycle code with `Hx = [A | B]`, `Hz = [B^T | A^T]`.
pub fn build_bb(
    l: usize,
    m: usize,
    a_terms: &[Monomial],
    b_terms: &[Monomial],
    d: usize,
) -> Result<CssCode, CodeError> {
    if l < 2 || m < 2 {
        return Err(CodeError::Invalid(format!("l and m must be >= 2, got {l}, {m}")));
    }
    if a_terms.is_empty() || b_terms.is_empty() {
        return Err(CodeError::Invalid("polynomial term lists must be nonempty".into()));
    }
    let size = l * m;
    let a = SparseBitMatrix::from_rows(size, circulant_sum(l, m, a_terms))?;
    let b = SparseBitMatrix::from_rows(size, circulant_sum(l, m, b_terms))?;
    let hx = a.hstack(&b)?;
    let hz = b.transpose().hstack(&a.transpose())?;
    CssCode::from_checks(hx, hz, d)
}

/// The [[72, 12, 6]] gross-code sibling: `A = x^3 + y + y^2`, `B = y^3 + x + x^2`.
pub fn bb72() -> CssCode {
    build_bb(6, 6, &[(3, 0), (0, 1), (0, 2)], &[(0, 3), (1, 0), (2, 0)], 6)
        .expect("fixed parameters are valid")
}

/// Classical repetition code of length `n` as a CSS code with no X checks.
pub fn build_repetition(n: usize) -> Result<CssCode, CodeError> {
    if n < 2 {
        return Err(CodeError::Invalid(format!("repetition length must be >= 2, got {n}")));
    }
    let hz = SparseBitMatrix::from_rows(n, (0..n - 1).map(|i| vec![i, i + 1]).collect())?;
    CssCode::from_checks(SparseBitMatrix::zeros(0, n), hz, n)
}
