//! Symmetric-matrix analysis: Cholesky factorization with strict pivot
//! checks, log-determinants, Schur complements, spectral norms, and extreme
//! eigenvalues. Every other module builds on these.

use nalgebra::DMatrix;

use crate::{Error, Result};

/// Square matrix that is symmetric by construction.
///
/// Inputs are symmetrized as `(M + Mᵀ)/2` so that mirrored entries compare
/// equal exactly; empirical covariances accumulate asymmetry at round-off
/// level and downstream factorizations rely on clean symmetry.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    m: DMatrix<f64>,
}

impl SymMatrix {
    pub fn new(m: DMatrix<f64>) -> Self {
        assert_eq!(m.nrows(), m.ncols(), "SymMatrix requires a square matrix");
        let sym = (&m + m.transpose()) * 0.5;
        SymMatrix { m: sym }
    }

    pub fn from_fn(dim: usize, f: impl FnMut(usize, usize) -> f64) -> Self {
        Self::new(DMatrix::from_fn(dim, dim, f))
    }

    pub fn identity(dim: usize) -> Self {
        SymMatrix {
            m: DMatrix::identity(dim, dim),
        }
    }

    pub fn zeros(dim: usize) -> Self {
        SymMatrix {
            m: DMatrix::zeros(dim, dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.m[(i, j)]
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.m
    }

    /// Principal submatrix on the given coordinates, in the given order.
    pub fn submatrix(&self, idx: &[usize]) -> Result<SymMatrix> {
        check_selection(idx, self.dim())?;
        let m = DMatrix::from_fn(idx.len(), idx.len(), |r, c| self.m[(idx[r], idx[c])]);
        // A principal submatrix of an exactly symmetric matrix is exactly
        // symmetric, so skip the symmetrizing constructor.
        Ok(SymMatrix { m })
    }
}

/// Validates a coordinate selection: every index in range, no repeats.
pub(crate) fn check_selection(idx: &[usize], dim: usize) -> Result<()> {
    let mut seen = vec![false; dim];
    for &i in idx {
        if i >= dim {
            return Err(Error::BadIndex { index: i, dim });
        }
        if seen[i] {
            return Err(Error::DuplicateIndex { index: i });
        }
        seen[i] = true;
    }
    Ok(())
}

/// Symmetric matrix with a 2×2 block structure: leading block `A` of size
/// `split`, coupling `B`, trailing block `C`.
#[derive(Debug, Clone)]
pub struct BlockedSym {
    base: SymMatrix,
    split: usize,
}

impl BlockedSym {
    pub fn new(base: SymMatrix, split: usize) -> Result<Self> {
        if split == 0 || split >= base.dim() {
            return Err(Error::InvalidParameter(format!(
                "block split {split} must lie strictly inside dimension {}",
                base.dim()
            )));
        }
        Ok(BlockedSym { base, split })
    }

    pub fn base(&self) -> &SymMatrix {
        &self.base
    }

    pub fn split(&self) -> usize {
        self.split
    }
}

/// Lower-triangular Cholesky factor, stored row-major so the inner dot
/// products of the factorization and the solves run over contiguous memory.
#[derive(Debug, Clone)]
pub struct Cholesky {
    n: usize,
    l: Vec<f64>,
}

impl Cholesky {
    /// Factors `S = L·Lᵀ`. The pivot test is strict: any pivot ≤ 0 aborts
    /// with the offending index, and no regularization is applied.
    pub fn factor(s: &SymMatrix) -> Result<Self> {
        let n = s.dim();
        let a = s.as_matrix();
        let mut l = vec![0.0f64; n * n];
        for i in 0..n {
            for j in 0..=i {
                let dot = dot(&l[i * n..i * n + j], &l[j * n..j * n + j]);
                let v = a[(i, j)] - dot;
                if i == j {
                    if v <= 0.0 {
                        return Err(Error::NotPositiveDefinite { index: i, pivot: v });
                    }
                    l[i * n + i] = v.sqrt();
                } else {
                    l[i * n + j] = v / l[j * n + j];
                }
            }
        }
        Ok(Cholesky { n, l })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// log det(S) = 2·Σ log L(i,i); evaluated in the log domain so large
    /// blocks cannot overflow the determinant.
    pub fn logdet(&self) -> f64 {
        (0..self.n).map(|i| self.l[i * self.n + i].ln()).sum::<f64>() * 2.0
    }

    /// Solves `L·X = B` by forward substitution.
    pub fn forward_solve(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        assert_eq!(b.nrows(), self.n);
        let n = self.n;
        let mut x = b.clone_owned();
        for c in 0..x.ncols() {
            for i in 0..n {
                let mut v = x[(i, c)];
                for k in 0..i {
                    v -= self.l[i * n + k] * x[(k, c)];
                }
                x[(i, c)] = v / self.l[i * n + i];
            }
        }
        x
    }

    /// Solves `S·X = B` via the two triangular solves.
    pub fn solve(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        let n = self.n;
        let mut x = self.forward_solve(b);
        for c in 0..x.ncols() {
            for i in (0..n).rev() {
                let mut v = x[(i, c)];
                for k in i + 1..n {
                    v -= self.l[k * n + i] * x[(k, c)];
                }
                x[(i, c)] = v / self.l[i * n + i];
            }
        }
        x
    }

    pub fn lower(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| if j <= i { self.l[i * self.n + j] } else { 0.0 })
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// log det(S) through the Cholesky pivots (natural logarithm).
pub fn cholesky_logdet(s: &SymMatrix) -> Result<f64> {
    Ok(Cholesky::factor(s)?.logdet())
}

/// Schur complement `C − B·A⁻¹·Bᵀ` of the leading block in a 2×2 blocked
/// symmetric matrix.
///
/// Computed as `C − XᵀX` with `X = L⁻¹Bᵀ` from the Cholesky factor of `A`,
/// so the result is symmetric by construction. If the whole matrix satisfies
/// `M ⪰ cI` with `c > 0`, the complement satisfies the same lower bound.
pub fn schur_complement(m: &BlockedSym) -> Result<SymMatrix> {
    let k = m.split();
    let n = m.base().dim();
    let base = m.base().as_matrix();
    let a = SymMatrix {
        m: base.view((0, 0), (k, k)).into_owned(),
    };
    let chol = Cholesky::factor(&a)?;
    let bt = base.view((0, k), (k, n - k)).into_owned();
    let x = chol.forward_solve(&bt);
    let c = base.view((k, k), (n - k, n - k)).into_owned();
    Ok(SymMatrix::new(c - x.transpose() * x))
}

/// Largest singular value (‖M‖₂).
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    assert!(m.nrows() > 0 && m.ncols() > 0, "spectral norm of an empty matrix");
    m.clone_owned().svd(false, false).singular_values.max()
}

/// Extreme eigenvalues (λ_min, λ_max) of a symmetric matrix.
pub fn eig_bounds(s: &SymMatrix) -> (f64, f64) {
    let ev = s.as_matrix().symmetric_eigenvalues();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in ev.iter() {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    (lo, hi)
}
