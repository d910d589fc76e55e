use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::{hypot, sqrt};

const JACOBI_TOL: f64 = 1e-13;
const JACOBI_MAX_SWEEPS: usize = 64;

/// Dense real symmetric `d x d` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    dim: usize,
    entries: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(dim: usize) -> Self {
        SymMatrix { dim, entries: vec![0.0; dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        Self::diag(&vec![1.0; dim])
    }

    pub fn diag(diagonal: &[f64]) -> Self {
        let dim = diagonal.len();
        let mut m = Self::zeros(dim);
        for (i, &v) in diagonal.iter().enumerate() {
            m.entries[i * dim + i] = v;
        }
        m
    }

    /// Builds a matrix from row-major entries, rejecting any asymmetry.
    pub fn from_rows(dim: usize, entries: Vec<f64>) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch { expected: dim * dim, found: entries.len() });
        }
        for i in 0..dim {
            for j in (i + 1)..dim {
                if entries[i * dim + j] != entries[j * dim + i] {
                    return Err(Error::NotSymmetric { row: i, col: j });
                }
            }
        }
        Ok(SymMatrix { dim, entries })
    }

    /// Builds a matrix from the upper triangle, mirroring it below the diagonal.
    pub fn from_upper(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in i..dim {
                let v = f(i, j);
                m.entries[i * dim + j] = v;
                m.entries[j * dim + i] = v;
            }
        }
        m
    }

    /// `scale * v v^T`.
    pub fn outer(v: &[f64], scale: f64) -> Self {
        Self::from_upper(v.len(), |i, j| scale * v[i] * v[j])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.dim + j]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn scaled(&self, t: f64) -> Self {
        SymMatrix { dim: self.dim, entries: self.entries.iter().map(|x| x * t).collect() }
    }

    pub fn neg(&self) -> Self {
        self.scaled(-1.0)
    }

    pub fn add(&self, other: &SymMatrix) -> Result<Self> {
        self.check_dim(other.dim)?;
        let entries = self.entries.iter().zip(&other.entries).map(|(a, b)| a + b).collect();
        Ok(SymMatrix { dim: self.dim, entries })
    }

    pub fn sub(&self, other: &SymMatrix) -> Result<Self> {
        self.add(&other.neg())
    }

    /// Adds `scale * v v^T` in place.
    pub fn add_outer(&mut self, v: &[f64], scale: f64) {
        for i in 0..self.dim {
            for j in 0..self.dim {
                self.entries[i * self.dim + j] += scale * v[i] * v[j];
            }
        }
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    /// `tr(self * other)` for symmetric arguments.
    pub fn trace_product(&self, other: &SymMatrix) -> Result<f64> {
        self.check_dim(other.dim)?;
        Ok(self.entries.iter().zip(&other.entries).map(|(a, b)| a * b).sum())
    }

    /// `x . M x`.
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        let d = self.dim;
        let mut acc = 0.0;
        for i in 0..d {
            let mut row = 0.0;
            for j in 0..d {
                row += self.entries[i * d + j] * x[j];
            }
            acc += x[i] * row;
        }
        acc
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        sqrt(self.entries.iter().map(|x| x * x).sum())
    }

    pub(crate) fn check_dim(&self, dim: usize) -> Result<()> {
        if self.dim != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: self.dim });
        }
        Ok(())
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        self.eigen().0
    }

    /// Eigenvalues (ascending) and the matching orthonormal eigenvectors,
    /// stored as columns of a row-major `d x d` array.
    ///
    /// Cyclic Jacobi rotations until the off-diagonal mass drops below
    /// `1e-13 * |M|`.
    pub fn eigen(&self) -> (Vec<f64>, Vec<f64>) {
        let d = self.dim;
        let mut a = self.entries.clone();
        let mut v = vec![0.0; d * d];
        for i in 0..d {
            v[i * d + i] = 1.0;
        }
        let scale = self.norm();
        if scale > 0.0 {
            for _ in 0..JACOBI_MAX_SWEEPS {
                let off: f64 = (0..d)
                    .flat_map(|i| (0..d).filter(move |&j| j != i).map(move |j| (i, j)))
                    .map(|(i, j)| a[i * d + j] * a[i * d + j])
                    .sum();
                if sqrt(off) <= JACOBI_TOL * scale {
                    break;
                }
                for p in 0..d {
                    for q in (p + 1)..d {
                        let apq = a[p * d + q];
                        if apq == 0.0 {
                            continue;
                        }
                        let theta = (a[q * d + q] - a[p * d + p]) / (2.0 * apq);
                        let t = theta.signum() / (theta.abs() + hypot(theta, 1.0));
                        let t = if theta == 0.0 { 1.0 } else { t };
                        let c = 1.0 / hypot(t, 1.0);
                        let s = t * c;
                        for k in 0..d {
                            let akp = a[k * d + p];
                            let akq = a[k * d + q];
                            a[k * d + p] = c * akp - s * akq;
                            a[k * d + q] = s * akp + c * akq;
                        }
                        for k in 0..d {
                            let apk = a[p * d + k];
                            let aqk = a[q * d + k];
                            a[p * d + k] = c * apk - s * aqk;
                            a[q * d + k] = s * apk + c * aqk;
                        }
                        for k in 0..d {
                            let vkp = v[k * d + p];
                            let vkq = v[k * d + q];
                            v[k * d + p] = c * vkp - s * vkq;
                            v[k * d + q] = s * vkp + c * vkq;
                        }
                    }
                }
            }
        }
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&i, &j| a[i * d + i].total_cmp(&a[j * d + j]));
        let values = order.iter().map(|&i| a[i * d + i]).collect();
        let mut vectors = vec![0.0; d * d];
        for (col, &src) in order.iter().enumerate() {
            for k in 0..d {
                vectors[k * d + col] = v[k * d + src];
            }
        }
        (values, vectors)
    }
}
