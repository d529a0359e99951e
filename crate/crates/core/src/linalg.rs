//! Dense complex matrices and an LU solver with partial pivoting.
//!
//! Matrix dimensions in this crate stay small (port counts, not sweep sizes),
//! so a straightforward row-major implementation is sufficient and keeps the
//! pivot-based singularity contract explicit: a factorization is rejected when
//! its smallest pivot magnitude drops below [`PIVOT_RTOL`] times the largest.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::C;

/// Relative pivot threshold below which a factorization is treated as singular.
pub const PIVOT_RTOL: f64 = 1e-12;

/// Dense row-major complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<C<T>>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![C::new(T::zero(), T::zero()); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C::new(T::one(), T::zero());
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C<T>) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds from nested rows; all rows must share one length.
    pub fn from_rows(rows: &[Vec<C<T>>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::DimensionMismatch("ragged row lengths".into()));
        }
        Ok(Self {
            rows: r,
            cols: c,
            data: rows.concat(),
        })
    }

    /// Column vector from a slice.
    pub fn column(entries: &[C<T>]) -> Self {
        Self {
            rows: entries.len(),
            cols: 1,
            data: entries.to_vec(),
        }
    }

    /// Row vector from a slice.
    pub fn row(entries: &[C<T>]) -> Self {
        Self {
            rows: 1,
            cols: entries.len(),
            data: entries.to_vec(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[C<T>] {
        &self.data
    }

    /// Plain (unconjugated) transpose. The model never conjugates.
    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn scale(&self, factor: C<T>) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * factor).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    /// `self + z * I`; requires a square matrix.
    pub fn add_scaled_identity(&self, z: C<T>) -> Result<Self> {
        if !self.is_square() {
            return Err(Error::DimensionMismatch(
                "add_scaled_identity requires a square matrix".into(),
            ));
        }
        let mut out = self.clone();
        for i in 0..self.rows {
            out[(i, i)] = out[(i, i)] + z;
        }
        Ok(out)
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "matmul: {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == C::new(T::zero(), T::zero()) {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] = out[(i, j)] + a * other[(k, j)];
                }
            }
        }
        Ok(out)
    }

    /// Frobenius norm: sqrt of the sum of squared entry magnitudes.
    pub fn frobenius(&self) -> T {
        let mut acc = T::zero();
        for z in &self.data {
            acc = acc + z.norm_sqr();
        }
        acc.sqrt()
    }

    /// Euclidean norm of row `i`.
    pub fn row_norm(&self, i: usize) -> T {
        let mut acc = T::zero();
        for j in 0..self.cols {
            acc = acc + self[(i, j)].norm_sqr();
        }
        acc.sqrt()
    }

    /// Largest entry magnitude.
    pub fn max_abs(&self) -> T {
        self.data
            .iter()
            .map(|z| z.norm())
            .fold(T::zero(), |a, b| a.max(b))
    }

    /// LU factorization with partial pivoting.
    pub fn lu(&self, context: &str) -> Result<Lu<T>> {
        Lu::factor(self, context)
    }

    /// Solves `self * X = rhs` through a fresh LU factorization.
    pub fn solve(&self, rhs: &Self, context: &str) -> Result<Self> {
        self.lu(context)?.solve(rhs)
    }

    fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(())
    }
}

impl<T: Scalar> std::ops::Index<(usize, usize)> for Matrix<T> {
    type Output = C<T>;

    fn index(&self, (i, j): (usize, usize)) -> &C<T> {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl<T: Scalar> std::ops::IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C<T> {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

/// LU factors of a square matrix, with the pivot magnitudes retained so the
/// conditioning contract can be reported on failure.
#[derive(Debug, Clone)]
pub struct Lu<T> {
    factors: Matrix<T>,
    perm: Vec<usize>,
    min_pivot: T,
    max_pivot: T,
}

impl<T: Scalar> Lu<T> {
    pub fn factor(a: &Matrix<T>, context: &str) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "{context}: LU of a {}x{} matrix",
                a.rows, a.cols
            )));
        }
        let n = a.rows;
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            // Pivot on the largest remaining magnitude in column k.
            let mut p = k;
            let mut best = lu[(k, k)].norm_sqr();
            for i in (k + 1)..n {
                let mag = lu[(i, k)].norm_sqr();
                if mag > best {
                    best = mag;
                    p = i;
                }
            }
            if p != k {
                for j in 0..n {
                    let tmp = lu[(k, j)];
                    lu[(k, j)] = lu[(p, j)];
                    lu[(p, j)] = tmp;
                }
                perm.swap(k, p);
            }
            let pivot = lu[(k, k)];
            if pivot.norm_sqr() > T::zero() {
                for i in (k + 1)..n {
                    let factor = lu[(i, k)] / pivot;
                    lu[(i, k)] = factor;
                    for j in (k + 1)..n {
                        let sub = factor * lu[(k, j)];
                        lu[(i, j)] = lu[(i, j)] - sub;
                    }
                }
            }
        }
        let mut min_pivot = T::infinity();
        let mut max_pivot = T::zero();
        for k in 0..n {
            let mag = lu[(k, k)].norm();
            min_pivot = min_pivot.min(mag);
            max_pivot = max_pivot.max(mag);
        }
        if n == 0 {
            min_pivot = T::one();
            max_pivot = T::one();
        }
        let fac = Self {
            factors: lu,
            perm,
            min_pivot,
            max_pivot,
        };
        if fac.is_singular() {
            return Err(Error::IllConditioned {
                context: context.to_string(),
                pivot_ratio: fac.pivot_ratio().as_f64(),
                condition_estimate: fac.condition_estimate().as_f64(),
            });
        }
        Ok(fac)
    }

    /// Smallest pivot magnitude over the largest.
    pub fn pivot_ratio(&self) -> T {
        if self.max_pivot == T::zero() {
            T::zero()
        } else {
            self.min_pivot / self.max_pivot
        }
    }

    /// Cheap condition estimate from the pivot magnitudes (max/min).
    pub fn condition_estimate(&self) -> T {
        if self.min_pivot == T::zero() {
            T::infinity()
        } else {
            self.max_pivot / self.min_pivot
        }
    }

    fn is_singular(&self) -> bool {
        self.max_pivot == T::zero() || self.min_pivot < T::lit(PIVOT_RTOL) * self.max_pivot
    }

    /// Solves `A * X = rhs` for each column of `rhs`.
    pub fn solve(&self, rhs: &Matrix<T>) -> Result<Matrix<T>> {
        let n = self.factors.rows;
        if rhs.rows != n {
            return Err(Error::DimensionMismatch(format!(
                "solve: {n} rows expected, rhs has {}",
                rhs.rows
            )));
        }
        let mut x = Matrix::zeros(n, rhs.cols);
        for c in 0..rhs.cols {
            // Forward substitution on the permuted right-hand side.
            let mut y = vec![C::new(T::zero(), T::zero()); n];
            for i in 0..n {
                let mut acc = rhs[(self.perm[i], c)];
                for (j, yj) in y.iter().enumerate().take(i) {
                    acc = acc - self.factors[(i, j)] * *yj;
                }
                y[i] = acc;
            }
            // Back substitution.
            for i in (0..n).rev() {
                let mut acc = y[i];
                for j in (i + 1)..n {
                    acc = acc - self.factors[(i, j)] * x[(j, c)];
                }
                x[(i, c)] = acc / self.factors[(i, i)];
            }
        }
        Ok(x)
    }

    /// Inverse via `solve` against the identity.
    pub fn inverse(&self) -> Result<Matrix<T>> {
        self.solve(&Matrix::identity(self.factors.rows))
    }
}

/// Euclidean norm of a complex slice.
pub fn vector_norm<T: Scalar>(v: &[C<T>]) -> T {
    let mut acc = T::zero();
    for z in v {
        acc = acc + z.norm_sqr();
    }
    acc.sqrt()
}

/// Relative Frobenius distance `‖a − b‖_F / ‖b‖_F` (absolute when `b = 0`).
pub fn relative_frobenius_distance<T: Scalar>(a: &Matrix<T>, b: &Matrix<T>) -> Result<T> {
    let diff = a.sub(b)?.frobenius();
    let scale = b.frobenius();
    Ok(if scale == T::zero() {
        diff
    } else {
        diff / scale
    })
}

/// Compensated (Kahan) accumulator for long positive sums.
#[derive(Debug, Clone, Copy)]
pub struct KahanSum<T> {
    sum: T,
    carry: T,
}

impl<T: Scalar> KahanSum<T> {
    pub fn new() -> Self {
        Self {
            sum: T::zero(),
            carry: T::zero(),
        }
    }

    pub fn add(&mut self, term: T) {
        let y = term - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn value(&self) -> T {
        self.sum
    }
}

impl<T: Scalar> Default for KahanSum<T> {
    fn default() -> Self {
        Self::new()
    }
}
