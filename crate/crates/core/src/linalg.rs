//! Small dense linear algebra: the rate models never exceed a few dozen states.

use crate::num::Real;

/// Row-major square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Real> Matrix<T> {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![T::zero(); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_rows<const N: usize>(rows: [[T; N]; N]) -> Self {
        Self {
            n: N,
            data: rows.iter().flatten().copied().collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Max-row-sum norm.
    pub fn norm_inf(&self) -> T {
        (0..self.n)
            .map(|i| {
                self.data[i * self.n..(i + 1) * self.n]
                    .iter()
                    .fold(T::zero(), |s, x| s + x.abs())
            })
            .fold(T::zero(), T::max)
    }

    pub fn scaled(&self, s: T) -> Self {
        Self {
            n: self.n,
            data: self.data.iter().map(|&x| x * s).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            n: self.n,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| a + b).collect(),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == T::zero() {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * other.data[k * n + j];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        (0..self.n)
            .map(|i| {
                self.data[i * self.n..(i + 1) * self.n]
                    .iter()
                    .zip(v)
                    .fold(T::zero(), |s, (&a, &x)| s + a * x)
            })
            .collect()
    }

    /// Solves `self · x = b` by Gaussian elimination with partial pivoting.
    /// Returns `None` when a pivot falls below `tol` times the matrix scale.
    pub fn solve(&self, b: &[T], tol: T) -> Option<Vec<T>> {
        let n = self.n;
        let mut a = self.data.clone();
        let mut x = b.to_vec();
        let scale = self.norm_inf().max(T::min_positive_value());
        for col in 0..n {
            let (piv, pmag) = (col..n)
                .map(|r| (r, a[r * n + col].abs()))
                .fold((col, T::zero()), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pmag <= tol * scale {
                return None;
            }
            if piv != col {
                for j in 0..n {
                    a.swap(col * n + j, piv * n + j);
                }
                x.swap(col, piv);
            }
            let p = a[col * n + col];
            for r in col + 1..n {
                let f = a[r * n + col] / p;
                if f == T::zero() {
                    continue;
                }
                for j in col..n {
                    let v = a[col * n + j];
                    a[r * n + j] -= f * v;
                }
                let v = x[col];
                x[r] -= f * v;
            }
        }
        for col in (0..n).rev() {
            let mut s = x[col];
            for j in col + 1..n {
                s -= a[col * n + j] * x[j];
            }
            x[col] = s / a[col * n + col];
        }
        Some(x)
    }

    /// Numerical rank via row echelon reduction with relative tolerance.
    pub fn rank(&self, tol: T) -> usize {
        let n = self.n;
        let mut a = self.data.clone();
        let scale = self.norm_inf().max(T::min_positive_value());
        let mut rank = 0;
        for col in 0..n {
            if rank == n {
                break;
            }
            let (piv, pmag) = (rank..n)
                .map(|r| (r, a[r * n + col].abs()))
                .fold((rank, T::zero()), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pmag <= tol * scale {
                continue;
            }
            for j in 0..n {
                a.swap(rank * n + j, piv * n + j);
            }
            let p = a[rank * n + col];
            for r in rank + 1..n {
                let f = a[r * n + col] / p;
                for j in col..n {
                    let v = a[rank * n + j];
                    a[r * n + j] -= f * v;
                }
            }
            rank += 1;
        }
        rank
    }

    /// Matrix exponential by scaling and squaring of a truncated Taylor series.
    pub fn expm(&self) -> Self {
        self.expm_inner(false)
    }

    /// Exponential of a generator whose columns sum to zero. The result is
    /// column-stochastic; column sums are reset to one after every squaring,
    /// which removes the only rounding mode that doubles per squaring.
    pub fn expm_generator(&self) -> Self {
        self.expm_inner(true)
    }

    fn expm_inner(&self, stochastic: bool) -> Self {
        let half = T::lit(0.5);
        let norm = self.norm_inf();
        let mut squarings = 0u32;
        let mut s = T::one();
        while norm * s > half {
            s *= half;
            squarings += 1;
        }
        let a = self.scaled(s);
        let mut term = Self::identity(self.n);
        let mut sum = Self::identity(self.n);
        // ‖A‖ ≤ 1/2: the k = 20 term is below 1e-25.
        for k in 1..=20 {
            term = term.mul(&a).scaled(T::one() / T::from_usize_lossy(k));
            sum = sum.add(&term);
        }
        if stochastic {
            sum.normalize_columns();
        }
        for _ in 0..squarings {
            sum = sum.mul(&sum);
            if stochastic {
                sum.normalize_columns();
            }
        }
        sum
    }

    fn normalize_columns(&mut self) {
        let n = self.n;
        for j in 0..n {
            let total = (0..n).fold(T::zero(), |s, i| s + self.data[i * n + j]);
            for i in 0..n {
                self.data[i * n + j] /= total;
            }
        }
    }
}

impl<T> std::ops::Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.n + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.n + j]
    }
}
