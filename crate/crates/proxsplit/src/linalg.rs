//! Dense symmetric matrices and the small amount of linear algebra the
//! solvers need: matrix-vector products, symmetric eigenvalues (cyclic
//! Jacobi), and Householder QR orthonormalization.
//!
//! Everything is generic over the scalar and written for the moderate
//! dimensions of this problem family (n up to a few hundred).

use crate::error::{Error, Result};
use crate::scalar::{s, Scalar};

/// Dense symmetric matrix, full row-major storage.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix<S> {
    dim: usize,
    data: Vec<S>,
}

impl<S: Scalar> SymMatrix<S> {
    /// Builds a symmetric matrix from row-major entries, enforcing symmetry
    /// up to `1e-12` relative to the largest entry.
    pub fn from_rows(dim: usize, data: Vec<S>) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                got: data.len(),
            });
        }
        let m = SymMatrix { dim, data };
        let scale = m
            .data
            .iter()
            .fold(S::zero(), |acc, &v| acc.max(v.abs()))
            .max(S::one());
        if m.asymmetry() > s::<S>(1e-12) * scale {
            return Err(Error::invalid("matrix is not symmetric"));
        }
        Ok(m)
    }

    pub fn zeros(dim: usize) -> Self {
        SymMatrix {
            dim,
            data: vec![S::zero(); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = S::one();
        }
        m
    }

    /// 1x1 matrix holding a single value.
    pub fn scalar(value: S) -> Self {
        SymMatrix {
            dim: 1,
            data: vec![value],
        }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> S {
        self.data[i * self.dim + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: S) {
        self.data[i * self.dim + j] = v;
    }

    pub fn rows(&self) -> impl Iterator<Item = &[S]> {
        self.data.chunks(self.dim.max(1))
    }

    /// Max-norm of `M - M'`; zero for exactly symmetric storage.
    pub fn asymmetry(&self) -> S {
        let n = self.dim;
        let mut worst = S::zero();
        for i in 0..n {
            for j in (i + 1)..n {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }

    /// `out = M x`.
    pub fn matvec(&self, x: &[S], out: &mut [S]) {
        let n = self.dim;
        debug_assert_eq!(x.len(), n);
        debug_assert_eq!(out.len(), n);
        for (i, o) in out.iter_mut().enumerate() {
            let row = &self.data[i * n..(i + 1) * n];
            let mut acc = S::zero();
            for (a, b) in row.iter().zip(x) {
                acc += *a * *b;
            }
            *o = acc;
        }
    }

    /// Quadratic form `x' M x`.
    pub fn quad_form(&self, x: &[S]) -> S {
        let n = self.dim;
        debug_assert_eq!(x.len(), n);
        let mut acc = S::zero();
        for i in 0..n {
            let row = &self.data[i * n..(i + 1) * n];
            let mut rowdot = S::zero();
            for (a, b) in row.iter().zip(x) {
                rowdot += *a * *b;
            }
            acc += x[i] * rowdot;
        }
        acc
    }

    /// Adds `alpha * other` into `self` (dimensions must match).
    pub fn add_scaled(&mut self, other: &SymMatrix<S>, alpha: S) {
        assert_eq!(self.dim, other.dim);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += alpha * *b;
        }
    }

    /// All eigenvalues, ascending, via cyclic Jacobi sweeps. The matrix is
    /// symmetric by construction so this is robust and accurate.
    pub fn eigenvalues(&self) -> Vec<S> {
        let n = self.dim;
        if n == 0 {
            return Vec::new();
        }
        if n == 1 {
            return vec![self.data[0]];
        }
        let mut a = self.data.clone();
        // Symmetrize the working copy so rotations see exact symmetry.
        for i in 0..n {
            for j in (i + 1)..n {
                let v = (a[i * n + j] + a[j * n + i]) * s::<S>(0.5);
                a[i * n + j] = v;
                a[j * n + i] = v;
            }
        }
        let frob = a
            .iter()
            .map(|&v| v * v)
            .sum::<S>()
            .sqrt()
            .max(S::min_positive_value());
        let tol = S::epsilon() * frob;
        let max_sweeps = 64;
        for _ in 0..max_sweeps {
            let mut off = S::zero();
            for i in 0..n {
                for j in (i + 1)..n {
                    off += a[i * n + j] * a[i * n + j];
                }
            }
            if off.sqrt() <= tol {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = a[p * n + q];
                    if apq.abs() <= tol * s::<S>(1e-3) {
                        continue;
                    }
                    let app = a[p * n + p];
                    let aqq = a[q * n + q];
                    let theta = (aqq - app) / (s::<S>(2.0) * apq);
                    // Stable tangent of the rotation angle.
                    let t = {
                        let sign = if theta >= S::zero() {
                            S::one()
                        } else {
                            -S::one()
                        };
                        sign / (theta.abs() + (S::one() + theta * theta).sqrt())
                    };
                    let c = S::one() / (S::one() + t * t).sqrt();
                    let sn = t * c;
                    for k in 0..n {
                        let akp = a[k * n + p];
                        let akq = a[k * n + q];
                        a[k * n + p] = c * akp - sn * akq;
                        a[k * n + q] = sn * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = a[p * n + k];
                        let aqk = a[q * n + k];
                        a[p * n + k] = c * apk - sn * aqk;
                        a[q * n + k] = sn * apk + c * aqk;
                    }
                }
            }
        }
        let mut eigs: Vec<S> = (0..n).map(|i| a[i * n + i]).collect();
        eigs.sort_by(|x, y| x.partial_cmp(y).expect("eigenvalues must be finite"));
        eigs
    }

    pub fn min_eigenvalue(&self) -> S {
        self.eigenvalues()
            .first()
            .copied()
            .unwrap_or_else(S::zero)
    }

    /// Spectral norm = largest absolute eigenvalue.
    pub fn spectral_norm(&self) -> S {
        self.eigenvalues()
            .iter()
            .fold(S::zero(), |acc, &v| acc.max(v.abs()))
    }
}

/// Orthonormalizes a square row-major matrix via Householder QR and returns
/// Q with the sign convention `diag(R) >= 0`, which pins the result uniquely
/// for a full-rank input regardless of the backend.
pub fn orthonormalize<S: Scalar>(dim: usize, a: &[S]) -> Result<Vec<S>> {
    if a.len() != dim * dim {
        return Err(Error::DimensionMismatch {
            expected: dim * dim,
            got: a.len(),
        });
    }
    let n = dim;
    let mut r = a.to_vec();
    // Q accumulated as the product of reflectors applied to the identity.
    let mut q: Vec<S> = vec![S::zero(); n * n];
    for i in 0..n {
        q[i * n + i] = S::one();
    }
    let mut v = vec![S::zero(); n];
    for k in 0..n {
        // Householder vector for column k of the trailing block.
        let mut norm = S::zero();
        for i in k..n {
            let x = r[i * n + k];
            norm += x * x;
        }
        let norm = norm.sqrt();
        if norm == S::zero() {
            continue;
        }
        let alpha = if r[k * n + k] >= S::zero() {
            -norm
        } else {
            norm
        };
        let mut vnorm2 = S::zero();
        for i in k..n {
            let mut x = r[i * n + k];
            if i == k {
                x -= alpha;
            }
            v[i] = x;
            vnorm2 += x * x;
        }
        if vnorm2 == S::zero() {
            continue;
        }
        let beta = s::<S>(2.0) / vnorm2;
        // R <- (I - beta v v') R
        for j in k..n {
            let mut dot = S::zero();
            for i in k..n {
                dot += v[i] * r[i * n + j];
            }
            let f = beta * dot;
            for i in k..n {
                r[i * n + j] -= f * v[i];
            }
        }
        // Q <- Q (I - beta v v')
        for row in 0..n {
            let mut dot = S::zero();
            for i in k..n {
                dot += q[row * n + i] * v[i];
            }
            let f = beta * dot;
            for i in k..n {
                q[row * n + i] -= f * v[i];
            }
        }
    }
    // Sign fix: force diag(R) >= 0 by flipping the matching column of Q.
    for k in 0..n {
        if r[k * n + k] < S::zero() {
            for row in 0..n {
                q[row * n + k] = -q[row * n + k];
            }
        }
    }
    Ok(q)
}

/// Assembles `Q diag(d) Q'` and symmetrizes the result exactly.
pub fn from_orthonormal_eigen<S: Scalar>(dim: usize, q: &[S], d: &[S]) -> SymMatrix<S> {
    assert_eq!(q.len(), dim * dim);
    assert_eq!(d.len(), dim);
    let n = dim;
    let mut m = vec![S::zero(); n * n];
    for i in 0..n {
        for j in i..n {
            let mut acc = S::zero();
            for k in 0..n {
                acc += q[i * n + k] * d[k] * q[j * n + k];
            }
            m[i * n + j] = acc;
            m[j * n + i] = acc;
        }
    }
    SymMatrix { dim: n, data: m }
}
