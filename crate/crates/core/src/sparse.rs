//! Compressed sparse row storage for the (symmetric) stiffness matrices.

use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix<T> {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<T>,
    diag_pos: Vec<Option<usize>>,
}

impl<T: Real> CsrMatrix<T> {
    /// Square matrix from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, T)>) -> Self {
        triplets.sort_by_key(|t| (t.0, t.1));
        let mut row_ptr = vec![0usize; n + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values: Vec<T> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            assert!(r < n && c < n, "triplet ({r}, {c}) outside {n}x{n}");
            if last == Some((r, c)) {
                *values.last_mut().expect("previous entry") += v;
            } else {
                col_idx.push(c);
                values.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        let diag_pos = (0..n)
            .map(|i| (row_ptr[i]..row_ptr[i + 1]).find(|&k| col_idx[k] == i))
            .collect();
        Self {
            n,
            row_ptr,
            col_idx,
            values,
            diag_pos,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }

    pub fn diag(&self, i: usize) -> T {
        self.diag_pos[i].map_or_else(T::zero, |k| self.values[k])
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.row(i)
            .find(|&(c, _)| c == j)
            .map_or_else(T::zero, |(_, v)| v)
    }

    /// `y = A x`.
    pub fn matvec_into(&self, x: &[T], y: &mut [T]) {
        for (i, yi) in y.iter_mut().enumerate().take(self.n) {
            let mut acc = T::zero();
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            *yi = acc;
        }
    }

    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        let mut y = vec![T::zero(); self.n];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn is_symmetric(&self, rel_tol: T) -> bool {
        (0..self.n).all(|i| {
            self.row(i).all(|(j, v)| {
                let w = self.get(j, i);
                (v - w).abs() <= rel_tol * v.abs().max(w.abs())
            })
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicates_are_summed_and_rows_sorted() {
        let m = CsrMatrix::from_triplets(
            3,
            vec![
                (0, 0, 1.0),
                (2, 1, -1.0),
                (0, 0, 2.0),
                (1, 2, -1.0),
                (0, 1, 4.0),
            ],
        );
        assert_eq!(m.diag(0), 3.0);
        assert_eq!(m.get(0, 1), 4.0);
        assert_eq!(m.diag(1), 0.0);
        assert_eq!(m.nnz(), 4);
        assert_eq!(m.matvec(&[1.0, 1.0, 1.0]), vec![7.0, -1.0, -1.0]);
        assert!(!m.is_symmetric(1e-12));
    }
}
