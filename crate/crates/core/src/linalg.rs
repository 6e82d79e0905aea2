//! Dense linear algebra on small square complex matrices and tall real
//! matrices, generic over the scalar type.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex;
use num_traits::{One, Zero};

use crate::scalar::Scalar;

/// Square complex matrix, row-major.
#[derive(Clone, PartialEq)]
pub struct CMatrix<T> {
    dim: usize,
    data: Vec<Complex<T>>,
}

impl<T: Scalar> CMatrix<T> {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![Complex::zero(); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = Complex::one();
        }
        m
    }

    pub fn from_diag(diag: &[Complex<T>]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    pub fn from_real_diag(diag: &[T]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = Complex::new(d, T::zero());
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> Complex<T>) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for r in 0..dim {
            for c in 0..dim {
                data.push(f(r, c));
            }
        }
        Self { dim, data }
    }

    /// Builds from nested rows; panics if the rows are not square.
    pub fn from_rows(rows: &[Vec<Complex<T>>]) -> Self {
        let dim = rows.len();
        assert!(rows.iter().all(|r| r.len() == dim), "rows must form a square matrix");
        Self {
            dim,
            data: rows.iter().flatten().copied().collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[Complex<T>] {
        &self.data
    }

    pub fn diag(&self) -> Vec<Complex<T>> {
        (0..self.dim).map(|i| self[(i, i)]).collect()
    }

    pub fn real_diag(&self) -> Vec<T> {
        (0..self.dim).map(|i| self[(i, i)].re).collect()
    }

    pub fn adjoint(&self) -> Self {
        let n = self.dim;
        Self::from_fn(n, |r, c| self.data[c * n + r].conj())
    }

    pub fn transpose(&self) -> Self {
        let n = self.dim;
        Self::from_fn(n, |r, c| self.data[c * n + r])
    }

    /// Matrix product; zero entries of `self` are skipped so products with a
    /// sparse left factor (permutations, single-spin embeddings) cost O(nnz·n).
    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.dim, rhs.dim, "matmul dimension mismatch");
        let n = self.dim;
        let mut out = vec![Complex::zero(); n * n];
        for i in 0..n {
            let row = &mut out[i * n..(i + 1) * n];
            for k in 0..n {
                let a = self.data[i * n + k];
                if a.re == T::zero() && a.im == T::zero() {
                    continue;
                }
                let b = &rhs.data[k * n..(k + 1) * n];
                for (o, &bv) in row.iter_mut().zip(b) {
                    *o += a * bv;
                }
            }
        }
        Self { dim: n, data: out }
    }

    /// `U · self · U^dagger`, computed as `(U (U self)^dagger)^dagger` so both
    /// products keep `U` on the left.
    pub fn conjugate_by(&self, u: &Self) -> Self {
        u.matmul(&u.matmul(self).adjoint()).adjoint()
    }

    pub fn scale(&self, s: Complex<T>) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|&x| x * s).collect(),
        }
    }

    pub fn scale_real(&self, s: T) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|&x| x * s).collect(),
        }
    }

    pub fn map(&self, f: impl Fn(usize, usize, Complex<T>) -> Complex<T>) -> Self {
        let n = self.dim;
        Self::from_fn(n, |r, c| f(r, c, self.data[r * n + c]))
    }

    pub fn trace(&self) -> Complex<T> {
        (0..self.dim).fold(Complex::zero(), |acc, i| acc + self[(i, i)])
    }

    /// `Tr(self^dagger · other)` without forming the product.
    pub fn inner(&self, other: &Self) -> Complex<T> {
        assert_eq!(self.dim, other.dim);
        self.data
            .iter()
            .zip(&other.data)
            .fold(Complex::zero(), |acc, (a, b)| acc + a.conj() * b)
    }

    pub fn frobenius_norm(&self) -> T {
        self.data
            .iter()
            .fold(T::zero(), |acc, z| acc + z.norm_sqr())
            .sqrt()
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |acc, z| acc.max(z.norm()))
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        assert_eq!(self.dim, other.dim);
        self.data
            .iter()
            .zip(&other.data)
            .fold(T::zero(), |acc, (a, b)| acc.max((a - b).norm()))
    }

    pub fn hermiticity_defect(&self) -> T {
        let n = self.dim;
        let mut worst = T::zero();
        for r in 0..n {
            for c in r..n {
                let d = (self.data[r * n + c] - self.data[c * n + r].conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    pub fn hermitian_part(&self) -> Self {
        let half = T::lit(0.5);
        let n = self.dim;
        Self::from_fn(n, |r, c| (self.data[r * n + c] + self.data[c * n + r].conj()) * half)
    }

    pub fn unitarity_defect(&self) -> T {
        let prod = self.adjoint().matmul(self);
        prod.sub(&Self::identity(self.dim)).frobenius_norm()
    }

    pub fn is_diagonal(&self) -> bool {
        let n = self.dim;
        (0..n).all(|r| (0..n).all(|c| r == c || self.data[r * n + c].is_zero()))
    }

    /// Kronecker product `self ⊗ rhs`; the left factor owns the high bits.
    pub fn kron(&self, rhs: &Self) -> Self {
        let (a, b) = (self.dim, rhs.dim);
        Self::from_fn(a * b, |r, c| self[(r / b, c / b)] * rhs[(r % b, c % b)])
    }

    /// `min over phi of ||e^{i phi} self - target||_F`.
    pub fn phase_distance(&self, target: &Self) -> T {
        let overlap = self.inner(target);
        let mag = overlap.norm();
        let phase = if mag > T::zero() {
            overlap / mag
        } else {
            Complex::one()
        };
        self.scale(phase).sub(target).frobenius_norm()
    }

    /// `exp(-i · h · t)` for Hermitian `h`.
    pub fn propagator(h: &Self, t: T) -> Self {
        if h.is_diagonal() {
            let diag: Vec<_> = h
                .diag()
                .into_iter()
                .map(|e| Complex::new(T::zero(), -e.re * t).exp())
                .collect();
            return Self::from_diag(&diag);
        }
        h.scale(Complex::new(T::zero(), -t)).expm()
    }

    /// Matrix exponential by scaling and squaring with a Taylor core.
    pub fn expm(&self) -> Self {
        let n = self.dim;
        let norm1 = (0..n)
            .map(|c| (0..n).fold(T::zero(), |acc, r| acc + self[(r, c)].norm()))
            .fold(T::zero(), T::max);
        let mut squarings = 0;
        let mut s = T::one();
        let half = T::lit(0.5);
        while norm1 * s > half {
            s *= half;
            squarings += 1;
        }
        let a = self.scale_real(s);
        let mut result = Self::identity(n);
        let mut term = Self::identity(n);
        for k in 1..=30 {
            term = term.matmul(&a).scale_real(T::one() / T::lit(k as f64));
            result = result.add(&term);
            if term.max_abs() <= T::epsilon() * T::lit(1e-2) {
                break;
            }
        }
        for _ in 0..squarings {
            result = result.matmul(&result);
        }
        result
    }

    pub fn add(&self, rhs: &Self) -> Self {
        assert_eq!(self.dim, rhs.dim);
        Self {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        assert_eq!(self.dim, rhs.dim);
        Self {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn cast<U: Scalar>(&self) -> CMatrix<U> {
        CMatrix {
            dim: self.dim,
            data: self
                .data
                .iter()
                .map(|z| Complex::new(U::lit(z.re.as_f64()), U::lit(z.im.as_f64())))
                .collect(),
        }
    }
}

impl<T: Scalar> Index<(usize, usize)> for CMatrix<T> {
    type Output = Complex<T>;

    fn index(&self, (r, c): (usize, usize)) -> &Complex<T> {
        &self.data[r * self.dim + c]
    }
}

impl<T: Scalar> IndexMut<(usize, usize)> for CMatrix<T> {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex<T> {
        &mut self.data[r * self.dim + c]
    }
}

impl<T: Scalar> Add for &CMatrix<T> {
    type Output = CMatrix<T>;
    fn add(self, rhs: Self) -> CMatrix<T> {
        CMatrix::add(self, rhs)
    }
}

impl<T: Scalar> Sub for &CMatrix<T> {
    type Output = CMatrix<T>;
    fn sub(self, rhs: Self) -> CMatrix<T> {
        CMatrix::sub(self, rhs)
    }
}

impl<T: Scalar> Mul for &CMatrix<T> {
    type Output = CMatrix<T>;
    fn mul(self, rhs: Self) -> CMatrix<T> {
        self.matmul(rhs)
    }
}

impl<T: Scalar> Neg for &CMatrix<T> {
    type Output = CMatrix<T>;
    fn neg(self) -> CMatrix<T> {
        self.scale_real(-T::one())
    }
}

impl<T: fmt::Debug> fmt::Debug for CMatrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMatrix({}x{})", self.dim, self.dim)?;
        for r in 0..self.dim {
            let row: Vec<String> = (0..self.dim)
                .map(|c| {
                    let z = &self.data[r * self.dim + c];
                    format!("{:?}{:+?}i", z.re, z.im)
                })
                .collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        Ok(())
    }
}

/// Dense real matrix with arbitrary shape, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct RealMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> RealMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    /// Assembles a matrix from its columns; all columns must share a length.
    pub fn from_columns(columns: &[Vec<T>]) -> Self {
        let cols = columns.len();
        let rows = columns.first().map_or(0, Vec::len);
        let mut m = Self::zeros(rows, cols);
        for (c, col) in columns.iter().enumerate() {
            assert_eq!(col.len(), rows, "ragged columns");
            for (r, &v) in col.iter().enumerate() {
                m.data[r * cols + c] = v;
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> T {
        self.data[r * self.cols + c]
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|r| {
                self.data[r * self.cols..(r + 1) * self.cols]
                    .iter()
                    .zip(x)
                    .fold(T::zero(), |acc, (&a, &b)| acc + a * b)
            })
            .collect()
    }

    pub fn drop_rows(&self, keep: impl Fn(usize) -> bool) -> Self {
        let kept: Vec<usize> = (0..self.rows).filter(|&r| keep(r)).collect();
        let mut data = Vec::with_capacity(kept.len() * self.cols);
        for r in &kept {
            data.extend_from_slice(&self.data[r * self.cols..(r + 1) * self.cols]);
        }
        Self {
            rows: kept.len(),
            cols: self.cols,
            data,
        }
    }
}

/// Thin singular value decomposition `A = U diag(s) V^T` of a tall matrix.
#[derive(Debug, Clone)]
pub struct Svd<T> {
    /// Left singular vectors as columns (`rows × cols`), zero where `s` vanishes.
    pub u: Vec<Vec<T>>,
    pub singular_values: Vec<T>,
    /// Right singular vectors, one per singular value.
    pub v: Vec<Vec<T>>,
}

impl<T: Scalar> Svd<T> {
    /// One-sided Jacobi SVD. Requires `rows >= cols`.
    pub fn new(a: &RealMatrix<T>) -> Self {
        let (m, n) = (a.rows, a.cols);
        assert!(m >= n, "one-sided Jacobi needs a tall matrix");
        let mut w: Vec<Vec<T>> = (0..n).map(|c| (0..m).map(|r| a.get(r, c)).collect()).collect();
        let mut v: Vec<Vec<T>> = (0..n)
            .map(|c| (0..n).map(|r| if r == c { T::one() } else { T::zero() }).collect())
            .collect();
        let eps = T::epsilon();
        for _sweep in 0..60 {
            let mut rotated = false;
            for p in 0..n {
                for q in p + 1..n {
                    let (alpha, beta, gamma) = {
                        let (wp, wq) = (&w[p], &w[q]);
                        wp.iter().zip(wq).fold(
                            (T::zero(), T::zero(), T::zero()),
                            |(a, b, g), (&x, &y)| (a + x * x, b + y * y, g + x * y),
                        )
                    };
                    if gamma.abs() <= eps * (alpha * beta).sqrt() || gamma == T::zero() {
                        continue;
                    }
                    rotated = true;
                    let zeta = (beta - alpha) / (T::lit(2.0) * gamma);
                    let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                    let c = T::one() / (T::one() + t * t).sqrt();
                    let s = c * t;
                    rotate_pair(&mut w, p, q, c, s);
                    rotate_pair(&mut v, p, q, c, s);
                }
            }
            if !rotated {
                break;
            }
        }
        let singular_values: Vec<T> = w
            .iter()
            .map(|col| col.iter().fold(T::zero(), |acc, &x| acc + x * x).sqrt())
            .collect();
        let u = w
            .into_iter()
            .zip(&singular_values)
            .map(|(col, &s)| {
                if s > T::zero() {
                    col.into_iter().map(|x| x / s).collect()
                } else {
                    col
                }
            })
            .collect();
        Self {
            u,
            singular_values,
            v,
        }
    }

    pub fn max_singular_value(&self) -> T {
        self.singular_values.iter().copied().fold(T::zero(), T::max)
    }

    pub fn cutoff(&self) -> T {
        self.max_singular_value() * T::rank_tol()
    }

    pub fn rank(&self) -> usize {
        let cut = self.cutoff();
        self.singular_values.iter().filter(|&&s| s > cut).count()
    }

    /// Right singular vectors spanning the numerical null space.
    pub fn null_space(&self) -> Vec<&[T]> {
        let cut = self.cutoff();
        self.singular_values
            .iter()
            .zip(&self.v)
            .filter(|(&s, _)| s <= cut)
            .map(|(_, v)| v.as_slice())
            .collect()
    }

    /// Minimum-norm least-squares solution of `A x = b`.
    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.v.len();
        let cut = self.cutoff();
        let mut x = vec![T::zero(); n];
        for ((u, v), &s) in self.u.iter().zip(&self.v).zip(&self.singular_values) {
            if s <= cut {
                continue;
            }
            let coef = u.iter().zip(b).fold(T::zero(), |acc, (&a, &bv)| acc + a * bv) / s;
            for (xi, &vi) in x.iter_mut().zip(v) {
                *xi += coef * vi;
            }
        }
        x
    }
}

fn rotate_pair<T: Scalar>(cols: &mut [Vec<T>], p: usize, q: usize, c: T, s: T) {
    let (left, right) = cols.split_at_mut(q);
    let (cp, cq) = (&mut left[p], &mut right[0]);
    for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
        let (xp, yq) = (*x, *y);
        *x = c * xp - s * yq;
        *y = s * xp + c * yq;
    }
}
