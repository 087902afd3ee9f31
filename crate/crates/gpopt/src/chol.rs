//! Growable Cholesky factorization in packed row storage.
//!
//! Supports one-shot factorization with an escalating diagonal jitter ladder
//! and O(n^2) single-row extension, which is what the sequential posterior
//! update needs.

use crate::error::{Error, Result};

/// Lower-triangular factor `L` with `L L^T = A` stored as packed rows.
#[derive(Debug, Clone, PartialEq)]
pub struct LowerTriangular {
    n: usize,
    data: Vec<f64>,
}

impl LowerTriangular {
    pub fn empty() -> Self {
        LowerTriangular { n: 0, data: Vec::new() }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    fn row(&self, i: usize) -> &[f64] {
        let start = i * (i + 1) / 2;
        &self.data[start..start + i + 1]
    }

    #[inline]
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        debug_assert!(j <= i);
        self.data[i * (i + 1) / 2 + j]
    }

    #[inline]
    pub fn diag(&self, i: usize) -> f64 {
        self.entry(i, i)
    }

    /// Plain Cholesky of the matrix given entrywise; `None` on a
    /// non-positive pivot.
    pub fn factor(n: usize, a: impl Fn(usize, usize) -> f64) -> Option<Self> {
        let mut l = LowerTriangular { n: 0, data: Vec::with_capacity(n * (n + 1) / 2) };
        let mut col = Vec::with_capacity(n);
        for i in 0..n {
            col.clear();
            col.extend((0..i).map(|j| a(i, j)));
            l.extend(&col, a(i, i))?;
        }
        Some(l)
    }

    /// Factor `A + jitter I`, escalating the jitter by x10 from `base_jitter`
    /// up to `max_jitter` until the factorization succeeds.
    ///
    /// Returns the factor and the jitter that was actually applied.
    pub fn factor_with_jitter(
        n: usize,
        a: impl Fn(usize, usize) -> f64,
        initial_jitter: f64,
        base_jitter: f64,
        max_jitter: f64,
    ) -> Result<(Self, f64)> {
        let mut jitter = initial_jitter;
        loop {
            let j = jitter;
            if let Some(l) = Self::factor(n, |r, c| if r == c { a(r, c) + j } else { a(r, c) }) {
                return Ok((l, jitter));
            }
            jitter = if jitter == 0.0 { base_jitter } else { jitter * 10.0 };
            if jitter > max_jitter {
                let max_diag = (0..n).map(|i| a(i, i)).fold(0.0f64, f64::max);
                return Err(Error::Numerical(format!(
                    "factorization failed for {n}x{n} Gram matrix after jitter escalation to \
                     {max_jitter:.1e}; condition estimate >= {:.1e}",
                    max_diag / max_jitter
                )));
            }
        }
    }

    /// Appends one row given the off-diagonal covariances against the
    /// existing rows and the diagonal value. `None` on breakdown (the caller
    /// should refactorize with more jitter).
    pub fn extend(&mut self, off_diag: &[f64], diag: f64) -> Option<f64> {
        debug_assert_eq!(off_diag.len(), self.n);
        let mut w = off_diag.to_vec();
        self.solve_forward_in_place(&mut w);
        let pivot2 = diag - w.iter().map(|v| v * v).sum::<f64>();
        if !(pivot2 > diag.abs() * 1e-15) || !pivot2.is_finite() {
            return None;
        }
        let pivot = pivot2.sqrt();
        self.data.extend_from_slice(&w);
        self.data.push(pivot);
        self.n += 1;
        Some(pivot)
    }

    /// Appends a row whose entries are already known.
    pub(crate) fn push_row(&mut self, off_diag: &[f64], pivot: f64) {
        debug_assert_eq!(off_diag.len(), self.n);
        self.data.extend_from_slice(off_diag);
        self.data.push(pivot);
        self.n += 1;
    }

    /// Solves `L z = b` in place.
    pub fn solve_forward_in_place(&self, b: &mut [f64]) {
        debug_assert!(b.len() <= self.n);
        for i in 0..b.len() {
            let row = self.row(i);
            let dot: f64 = row[..i].iter().zip(b[..i].iter()).map(|(l, z)| l * z).sum();
            b[i] = (b[i] - dot) / row[i];
        }
    }

    /// Solves `L^T w = b` in place.
    pub fn solve_backward_in_place(&self, b: &mut [f64]) {
        let n = b.len();
        debug_assert_eq!(n, self.n);
        for i in (0..n).rev() {
            let mut v = b[i];
            for r in i + 1..n {
                v -= self.entry(r, i) * b[r];
            }
            b[i] = v / self.diag(i);
        }
    }

    /// Solves `L L^T x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_forward_in_place(&mut x);
        self.solve_backward_in_place(&mut x);
        x
    }

    /// `sum_i ln L_ii`, i.e. half the log-determinant of `A`.
    pub fn half_log_det(&self) -> f64 {
        (0..self.n).map(|i| self.diag(i).ln()).sum()
    }

    /// Reconstructs `A_ij = sum_k L_ik L_jk` (test support).
    pub fn reconstruct(&self, i: usize, j: usize) -> f64 {
        let (hi, lo) = if i >= j { (i, j) } else { (j, i) };
        let rh = self.row(hi);
        let rl = self.row(lo);
        rh[..=lo].iter().zip(rl.iter()).map(|(a, b)| a * b).sum()
    }
}
