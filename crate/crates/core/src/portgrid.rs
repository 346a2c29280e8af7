//! Planar fluid-antenna port geometry and the spatial correlation between
//! ports.
//!
//! Port indices are 1-based at this API. Sizes are in wavelengths, so the
//! carrier wavelength never appears explicitly.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg;
use crate::specfun::spherical_bessel_j0;

/// Eigenvalue floor applied when repairing an indefinite correlation matrix.
pub const EIGEN_FLOOR: f64 = 1e-10;

/// How a 1-D port index is laid out over the 2-D grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum IndexOrder {
    #[default]
    RowMajor,
    ColumnMajor,
}

/// `n1 x n2` ports spread uniformly over a `w1 x w2` (wavelengths) aperture.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PortGrid {
    n1: usize,
    n2: usize,
    w1: f64,
    w2: f64,
}

impl PortGrid {
    pub fn new(n1: usize, n2: usize, w1: f64, w2: f64) -> Result<Self> {
        if n1 == 0 || n2 == 0 {
            return Err(Error::InvalidGrid("port counts must be positive"));
        }
        if !(w1.is_finite() && w2.is_finite() && w1 >= 0.0 && w2 >= 0.0) {
            return Err(Error::InvalidGrid("apertures must be finite and non-negative"));
        }
        Ok(Self { n1, n2, w1, w2 })
    }

    /// Square grid of `side x side` ports over a `w x w` aperture.
    pub fn square(side: usize, w: f64) -> Result<Self> {
        Self::new(side, side, w, w)
    }

    /// The single fixed antenna.
    pub fn single() -> Self {
        Self { n1: 1, n2: 1, w1: 0.0, w2: 0.0 }
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn n2(&self) -> usize {
        self.n2
    }

    pub fn w1(&self) -> f64 {
        self.w1
    }

    pub fn w2(&self) -> f64 {
        self.w2
    }

    pub fn ports(&self) -> usize {
        self.n1 * self.n2
    }

    /// Row-major `k -> (k1, k2)`.
    pub fn map_index(&self, k: usize) -> Result<(usize, usize)> {
        self.map_index_with(IndexOrder::RowMajor, k)
    }

    pub fn map_index_inverse(&self, k1: usize, k2: usize) -> Result<usize> {
        self.map_index_inverse_with(IndexOrder::RowMajor, k1, k2)
    }

    pub fn map_index_with(&self, order: IndexOrder, k: usize) -> Result<(usize, usize)> {
        let n = self.ports();
        if k == 0 || k > n {
            return Err(Error::IndexOutOfRange { index: k, ports: n });
        }
        let z = k - 1;
        Ok(match order {
            IndexOrder::RowMajor => (z / self.n2 + 1, z % self.n2 + 1),
            IndexOrder::ColumnMajor => (z % self.n1 + 1, z / self.n1 + 1),
        })
    }

    pub fn map_index_inverse_with(&self, order: IndexOrder, k1: usize, k2: usize) -> Result<usize> {
        if k1 == 0 || k1 > self.n1 {
            return Err(Error::IndexOutOfRange { index: k1, ports: self.n1 });
        }
        if k2 == 0 || k2 > self.n2 {
            return Err(Error::IndexOutOfRange { index: k2, ports: self.n2 });
        }
        Ok(match order {
            IndexOrder::RowMajor => (k1 - 1) * self.n2 + k2,
            IndexOrder::ColumnMajor => (k2 - 1) * self.n1 + k1,
        })
    }

    /// Correlation `j0(2 pi d)` between ports `k` and `m`, where `d` is their
    /// separation in wavelengths. A singleton dimension contributes no
    /// offset.
    pub fn port_correlation(&self, k: usize, m: usize) -> Result<f64> {
        let a = self.map_index(k)?;
        let b = self.map_index(m)?;
        Ok(self.offset_correlation(a, b))
    }

    fn offset_correlation(&self, a: (usize, usize), b: (usize, usize)) -> f64 {
        let axis = |i: usize, j: usize, n: usize, w: f64| {
            if n == 1 {
                0.0
            } else {
                (i as f64 - j as f64) / (n - 1) as f64 * w
            }
        };
        let d1 = axis(a.0, b.0, self.n1, self.w1);
        let d2 = axis(a.1, b.1, self.n2, self.w2);
        spherical_bessel_j0(2.0 * PI * libm::sqrt(d1 * d1 + d2 * d2))
    }

    /// Repaired and factorized `N x N` port correlation matrix (row-major
    /// port order).
    pub fn correlation_matrix(&self) -> Result<CorrelationMatrix> {
        self.correlation_matrix_with(IndexOrder::RowMajor)
    }

    pub fn correlation_matrix_with(&self, order: IndexOrder) -> Result<CorrelationMatrix> {
        let n = self.ports();
        let coords: Vec<(usize, usize)> = (1..=n)
            .map(|k| self.map_index_with(order, k))
            .collect::<Result<_>>()?;
        let mut entries = vec![0.0; n * n];
        for i in 0..n {
            entries[i * n + i] = 1.0;
            for j in (i + 1)..n {
                let rho = self.offset_correlation(coords[i], coords[j]);
                entries[i * n + j] = rho;
                entries[j * n + i] = rho;
            }
        }
        CorrelationMatrix::from_symmetric(n, entries)
    }
}

/// Symmetric unit-diagonal correlation matrix, repaired to be positive
/// definite, with its lower Cholesky factor.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    dim: usize,
    entries: Vec<f64>,
    factor: Vec<f64>,
    repair_shift: f64,
}

impl CorrelationMatrix {
    pub fn identity(dim: usize) -> Result<Self> {
        let mut entries = vec![0.0; dim * dim];
        for i in 0..dim {
            entries[i * dim + i] = 1.0;
        }
        Self::from_symmetric(dim, entries)
    }

    /// Validates a row-major correlation matrix, then repairs and factors it.
    pub fn from_entries(dim: usize, mut entries: Vec<f64>) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch { expected: dim * dim, got: entries.len() });
        }
        for i in 0..dim {
            if (entries[i * dim + i] - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidMatrix("diagonal must be 1"));
            }
            entries[i * dim + i] = 1.0;
            for j in (i + 1)..dim {
                let a = entries[i * dim + j];
                let b = entries[j * dim + i];
                if !a.is_finite() || !b.is_finite() {
                    return Err(Error::InvalidMatrix("entries must be finite"));
                }
                if (a - b).abs() > 1e-12 {
                    return Err(Error::InvalidMatrix("matrix must be symmetric"));
                }
                if a.abs() > 1.0 + 1e-12 {
                    return Err(Error::InvalidMatrix("entries must lie in [-1, 1]"));
                }
                let s = 0.5 * (a + b);
                entries[i * dim + j] = s;
                entries[j * dim + i] = s;
            }
        }
        Self::from_symmetric(dim, entries)
    }

    fn from_symmetric(dim: usize, entries: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidMatrix("dimension must be positive"));
        }
        let (entries, repair_shift) = repair(entries, dim);
        let factor = linalg::cholesky(&entries, dim)?;
        Ok(Self { dim, entries, factor, repair_shift })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Repaired entries, row-major.
    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    /// 0-based entry access.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.dim + j]
    }

    /// Lower Cholesky factor, row-major.
    pub fn cholesky_factor(&self) -> &[f64] {
        &self.factor
    }

    /// Largest amount by which an eigenvalue was raised during repair
    /// (0 when the matrix was already safely positive definite).
    pub fn repair_shift(&self) -> f64 {
        self.repair_shift
    }

    /// Relative Frobenius error of `L L^T` against the repaired entries.
    pub fn factor_residual(&self) -> f64 {
        let n = self.dim;
        let l = &self.factor;
        let mut diff = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                let s: f64 = (0..=i.min(j)).map(|k| l[i * n + k] * l[j * n + k]).sum();
                diff[i * n + j] = s - self.entries[i * n + j];
            }
        }
        linalg::frobenius(&diff) / linalg::frobenius(&self.entries)
    }

    /// Principal submatrix on the given 0-based indices.
    pub fn submatrix(&self, idx: &[usize]) -> Vec<f64> {
        let m = idx.len();
        let mut out = vec![0.0; m * m];
        for (a, &i) in idx.iter().enumerate() {
            for (b, &j) in idx.iter().enumerate() {
                out[a * m + b] = self.get(i, j);
            }
        }
        out
    }
}

// Eigenvalue clipping followed by rescaling back to unit diagonal.
fn repair(entries: Vec<f64>, n: usize) -> (Vec<f64>, f64) {
    if n == 1 {
        return (entries, 0.0);
    }
    let (vals, vecs) = linalg::symmetric_eigen(&entries, n);
    let shift = vals
        .iter()
        .filter(|&&v| v < EIGEN_FLOOR)
        .map(|&v| EIGEN_FLOOR - v)
        .fold(0.0, f64::max);
    if shift == 0.0 {
        return (entries, 0.0);
    }
    let clipped: Vec<f64> = vals.iter().map(|&v| v.max(EIGEN_FLOOR)).collect();
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let s: f64 = (0..n).map(|k| vecs[i * n + k] * clipped[k] * vecs[j * n + k]).sum();
            out[i * n + j] = s;
            out[j * n + i] = s;
        }
    }
    let d: Vec<f64> = (0..n).map(|i| libm::sqrt(out[i * n + i])).collect();
    for i in 0..n {
        for j in 0..n {
            out[i * n + j] /= d[i] * d[j];
        }
        out[i * n + i] = 1.0;
    }
    (out, shift)
}
