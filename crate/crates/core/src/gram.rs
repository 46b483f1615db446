//! Dense symmetric kernel-matrix cache with incremental append and ordered
//! row/column removal.
//!
//! Rows are stored with a fixed stride so that appending a sample writes one
//! row and one column in place, and removing samples compacts without
//! re-evaluating any kernel entry.

use alloc::vec;
use alloc::vec::Vec;

#[derive(Debug, Clone)]
pub(crate) struct SymMatrix {
    n: usize,
    stride: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    /// Empty matrix able to hold up to `cap` rows before re-layout.
    pub fn with_capacity(cap: usize) -> Self {
        let stride = cap.max(1);
        Self {
            n: 0,
            stride,
            data: vec![0.0; stride * stride],
        }
    }

    /// Builds a full n×n symmetric matrix from `f(i, j)`, evaluating only the
    /// upper triangle.
    pub fn build<F: FnMut(usize, usize) -> f64>(n: usize, mut f: F) -> Self {
        let stride = n.max(1);
        let mut data = vec![0.0; stride * stride];
        for i in 0..n {
            for j in i..n {
                let v = f(i, j);
                data[i * stride + j] = v;
                data[j * stride + i] = v;
            }
        }
        Self { n, stride, data }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        debug_assert!(i < self.n);
        &self.data[i * self.stride..i * self.stride + self.n]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        debug_assert!(i < self.n && j < self.n);
        self.data[i * self.stride + j]
    }

    /// Appends one row/column; `row` holds the new sample's kernel values
    /// against the existing rows followed by its self-similarity, so
    /// `row.len() == n + 1`.
    pub fn push(&mut self, row: &[f64]) {
        assert_eq!(row.len(), self.n + 1);
        if self.n == self.stride {
            self.grow(self.stride * 2 + 1);
        }
        let n = self.n;
        for (j, v) in row.iter().enumerate().take(n) {
            self.data[n * self.stride + j] = *v;
            self.data[j * self.stride + n] = *v;
        }
        self.data[n * self.stride + n] = row[n];
        self.n += 1;
    }

    fn grow(&mut self, new_stride: usize) {
        let mut data = vec![0.0; new_stride * new_stride];
        for i in 0..self.n {
            let src = i * self.stride;
            let dst = i * new_stride;
            data[dst..dst + self.n].copy_from_slice(&self.data[src..src + self.n]);
        }
        self.stride = new_stride;
        self.data = data;
    }

    /// Removes the given rows and columns, preserving the order of the rest.
    /// Indices must be sorted ascending and unique.
    pub fn remove_rows(&mut self, sorted: &[usize]) {
        if sorted.is_empty() {
            return;
        }
        debug_assert!(sorted.windows(2).all(|w| w[0] < w[1]));
        debug_assert!(*sorted.last().unwrap() < self.n);
        let mut keep = Vec::with_capacity(self.n - sorted.len());
        let mut del = sorted.iter().peekable();
        for i in 0..self.n {
            if del.peek() == Some(&&i) {
                del.next();
            } else {
                keep.push(i);
            }
        }
        for (ni, &oi) in keep.iter().enumerate() {
            for (nj, &oj) in keep.iter().enumerate() {
                self.data[ni * self.stride + nj] = self.data[oi * self.stride + oj];
            }
        }
        self.n = keep.len();
    }

    pub fn clear(&mut self) {
        self.n = 0;
    }
}
