//! Cholesky factorization of symmetric positive definite band matrices.

use crate::error::{Error, Result};
use crate::real::Real;

/// Lower band of an SPD matrix. Entry `(i, i - k)` lives at `data[i * (bw + 1) + k]`
/// for `k ≤ bw`.
#[derive(Debug, Clone)]
pub struct BandMatrix<T> {
    n: usize,
    bw: usize,
    data: Vec<T>,
}

impl<T: Real> BandMatrix<T> {
    pub fn zeros(n: usize, bw: usize) -> Self {
        Self { n, bw, data: vec![T::zero(); n * (bw + 1)] }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    /// Entry `(i, j)` of the full symmetric matrix.
    pub fn get(&self, i: usize, j: usize) -> T {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        let k = i - j;
        if k > self.bw {
            T::zero()
        } else {
            self.data[i * (self.bw + 1) + k]
        }
    }

    /// Adds `v` to entry `(i, j)` with `j ≤ i` (and implicitly its mirror).
    pub fn add(&mut self, i: usize, j: usize, v: T) {
        debug_assert!(j <= i && i - j <= self.bw);
        self.data[i * (self.bw + 1) + (i - j)] = self.data[i * (self.bw + 1) + (i - j)] + v;
    }

    #[allow(clippy::needless_range_loop)]
    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        let mut y = vec![T::zero(); self.n];
        for i in 0..self.n {
            let row = &self.data[i * (self.bw + 1)..(i + 1) * (self.bw + 1)];
            y[i] = y[i] + row[0] * x[i];
            for k in 1..=self.bw.min(i) {
                let j = i - k;
                y[i] = y[i] + row[k] * x[j];
                y[j] = y[j] + row[k] * x[i];
            }
        }
        y
    }

    pub fn cholesky(&self) -> Result<BandCholesky<T>> {
        let (n, bw) = (self.n, self.bw);
        let w = bw + 1;
        let mut l = self.data.clone();
        for i in 0..n {
            let kmax = bw.min(i);
            // Off-diagonals of row i, from the farthest column inward.
            for k in (1..=kmax).rev() {
                let j = i - k;
                let mut s = l[i * w + k];
                // Σ_{m < j} L[i, m] L[j, m], restricted to the overlapping band.
                let lo = i.saturating_sub(bw).max(j.saturating_sub(bw));
                for m in lo..j {
                    s = s - l[i * w + (i - m)] * l[j * w + (j - m)];
                }
                l[i * w + k] = s / l[j * w];
            }
            let mut d = l[i * w];
            for k in 1..=kmax {
                d = d - l[i * w + k].powi(2);
            }
            if !(d > T::zero()) {
                return Err(Error::Model(format!("band matrix not positive definite at row {i}")));
            }
            l[i * w] = d.sqrt();
        }
        Ok(BandCholesky { n, bw, l })
    }
}

#[derive(Debug, Clone)]
pub struct BandCholesky<T> {
    n: usize,
    bw: usize,
    l: Vec<T>,
}

impl<T: Real> BandCholesky<T> {
    /// Solves `L Lᵀ x = b` in place.
    pub fn solve_in_place(&self, b: &mut [T]) {
        let w = self.bw + 1;
        for i in 0..self.n {
            let mut s = b[i];
            for k in 1..=self.bw.min(i) {
                s = s - self.l[i * w + k] * b[i - k];
            }
            b[i] = s / self.l[i * w];
        }
        for i in (0..self.n).rev() {
            let mut s = b[i];
            for k in 1..=self.bw.min(self.n - 1 - i) {
                s = s - self.l[(i + k) * w + k] * b[i + k];
            }
            b[i] = s / self.l[i * w];
        }
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}
