//! Hermitian kernels: eigendecomposition, loaded solves and trace helpers.

use nalgebra::{Cholesky, SymmetricEigen};

use crate::{CMat, CVec, Error, Result, C64};

/// Relative diagonal loading used when a caller does not pick one.
pub const DEFAULT_LOADING_RATIO: f64 = 1e-3;
pub const EIG_MAX_ITER: usize = 10_000;

/// Square complex matrix checked to be Hermitian, with an optional diagonal
/// loading that [`HermitianMatrix::loaded`] and [`HermitianMatrix::solve`] apply.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix {
    values: CMat,
    loading: f64,
}

impl HermitianMatrix {
    /// Accepts `a` if ‖A − Aᴴ‖ ≤ 1e-10·‖A‖_F and stores its Hermitian part.
    pub fn new(a: CMat) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::Dimension {
                expected: a.nrows(),
                got: a.ncols(),
            });
        }
        let skew = (&a - a.adjoint()).norm();
        if skew > 1e-10 * a.norm().max(f64::MIN_POSITIVE) {
            return Err(Error::Numerical(format!(
                "matrix is not Hermitian (‖A − Aᴴ‖ = {skew:e})"
            )));
        }
        let values = (&a + a.adjoint()) * C64::from(0.5);
        Ok(Self {
            values,
            loading: 0.0,
        })
    }

    /// Sample covariance (1/K) Σ z zᴴ of the given snapshots.
    pub fn from_snapshots<'a, I>(dim: usize, snapshots: I) -> Result<Self>
    where
        I: IntoIterator<Item = nalgebra::DVectorView<'a, C64>>,
    {
        let mut acc = CMat::zeros(dim, dim);
        let mut count = 0usize;
        for z in snapshots {
            if z.len() != dim {
                return Err(Error::Dimension {
                    expected: dim,
                    got: z.len(),
                });
            }
            acc.ger(C64::from(1.0), &z, &z.conjugate(), C64::from(1.0));
            count += 1;
        }
        if count == 0 {
            return Err(Error::Numerical("no snapshots".into()));
        }
        Self::new(acc / C64::from(count as f64))
    }

    pub fn with_loading(mut self, epsilon: f64) -> Self {
        self.loading = epsilon;
        self
    }

    /// Applies ε = 1e-3 · tr(A)/dim.
    pub fn with_default_loading(self) -> Self {
        let eps = default_loading(&self.values);
        self.with_loading(eps)
    }

    pub fn values(&self) -> &CMat {
        &self.values
    }

    pub fn loading(&self) -> f64 {
        self.loading
    }

    pub fn dim(&self) -> usize {
        self.values.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.values.trace().re
    }

    /// A + εI.
    pub fn loaded(&self) -> CMat {
        let mut a = self.values.clone();
        for i in 0..a.nrows() {
            a[(i, i)] += C64::from(self.loading);
        }
        a
    }

    /// (A + εI)⁻¹ b with the stored loading.
    pub fn solve(&self, b: &CVec) -> Result<CVec> {
        solve_loaded(self, b, self.loading)
    }

    /// Congruence D A Dᴴ with D = diag(d); loading is kept.
    pub fn scaled(&self, d: &CVec) -> Self {
        let n = self.dim();
        let values = CMat::from_fn(n, n, |i, j| d[i] * self.values[(i, j)] * d[j].conj());
        Self {
            values,
            loading: self.loading,
        }
    }
}

/// 1e-3 · tr(A)/dim.
pub fn default_loading(a: &CMat) -> f64 {
    DEFAULT_LOADING_RATIO * a.trace().re / a.nrows() as f64
}

/// Eigenpairs of the loaded matrix, eigenvalues descending.
///
/// Each eigenvector is rotated so that its first component of magnitude
/// above 1e-12 is real and positive, which makes the output deterministic.
pub fn eig_hermitian(a: &HermitianMatrix) -> Result<(Vec<f64>, CMat)> {
    let m = a.loaded();
    let n = m.nrows();
    let eig = SymmetricEigen::try_new(m.clone(), f64::EPSILON, EIG_MAX_ITER)
        .ok_or_else(|| Error::Numerical("Hermitian eigensolver did not converge".into()))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = CMat::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        let mut v = eig.eigenvectors.column(i).into_owned();
        if let Some(lead) = v.iter().find(|x| x.norm() > 1e-12).copied() {
            v *= lead.conj() / lead.norm();
        }
        vectors.set_column(col, &v);
    }
    let recon = &vectors
        * CMat::from_diagonal(&CVec::from_iterator(
            n,
            values.iter().map(|&x| C64::from(x)),
        ))
        * vectors.adjoint();
    let resid = (&recon - &m).norm();
    if resid > 1e-8 * m.norm().max(1.0) {
        return Err(Error::Numerical(format!(
            "eigendecomposition residual {resid:e}"
        )));
    }
    Ok((values, vectors))
}

/// (A + εI)⁻¹ b through a Cholesky factorization, LU as a fallback.
/// Uses the raw matrix of `a`; its stored loading is ignored.
pub fn solve_loaded(a: &HermitianMatrix, b: &CVec, epsilon: f64) -> Result<CVec> {
    if epsilon < 0.0 {
        return Err(Error::Domain("loading must be non-negative".into()));
    }
    if b.len() != a.dim() {
        return Err(Error::Dimension {
            expected: a.dim(),
            got: b.len(),
        });
    }
    let mut m = a.values.clone();
    for i in 0..m.nrows() {
        m[(i, i)] += C64::from(epsilon);
    }
    let x = match Cholesky::new(m.clone()) {
        Some(ch) => ch.solve(b),
        None => m
            .clone()
            .lu()
            .solve(b)
            .ok_or_else(|| Error::Numerical("matrix is singular even with loading".into()))?,
    };
    let resid = (&m * &x - b).norm();
    if !(resid <= 1e-8 * b.norm().max(f64::MIN_POSITIVE)) {
        return Err(Error::Numerical(format!(
            "solve residual {resid:e} too large"
        )));
    }
    Ok(x)
}

/// Σ 1/ϱ_k.
pub fn trace_inverse_sum(eigenvalues: &[f64]) -> f64 {
    eigenvalues.iter().map(|x| 1.0 / x).sum()
}
