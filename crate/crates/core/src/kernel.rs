//! Sparse row-stochastic matrices (CSR), generic over the weight type.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scalar::{weight_sum, CompensatedSum, Scalar, Weight};

#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix<W> {
    size: usize,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<W>,
}

impl<W: Weight> TransitionMatrix<W> {
    /// Builds from per-row `(column, weight)` lists. Duplicate columns are
    /// summed; zero weights are kept out.
    pub fn from_rows(size: usize, rows: Vec<Vec<(usize, W)>>) -> Result<Self> {
        if rows.len() != size {
            return Err(Error::SizeMismatch {
                left: rows.len(),
                right: size,
            });
        }
        let mut row_ptr = Vec::with_capacity(size + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|e| e.0);
            let mut last: Option<usize> = None;
            for (c, w) in row {
                if c >= size {
                    return Err(Error::OutOfRange(format!(
                        "column {c} in {size}x{size} matrix"
                    )));
                }
                if last == Some(c) {
                    let v = vals.last_mut().expect("previous entry");
                    *v = *v + w;
                } else {
                    cols.push(c as u32);
                    vals.push(w);
                    last = Some(c);
                }
            }
            row_ptr.push(cols.len());
        }
        let mut m = TransitionMatrix {
            size,
            row_ptr,
            cols,
            vals,
        };
        m.drop_zeros();
        Ok(m)
    }

    /// Dense constructor, mostly for small hand-built kernels.
    pub fn from_dense(rows: Vec<Vec<W>>) -> Result<Self> {
        let size = rows.len();
        let sparse = rows
            .into_iter()
            .map(|r| {
                if r.len() != size {
                    return Err(Error::SizeMismatch {
                        left: r.len(),
                        right: size,
                    });
                }
                Ok(r.into_iter()
                    .enumerate()
                    .filter(|(_, w)| *w != W::zero())
                    .collect())
            })
            .collect::<Result<Vec<_>>>()?;
        TransitionMatrix::from_rows(size, sparse)
    }

    fn drop_zeros(&mut self) {
        let mut row_ptr = vec![0];
        let mut cols = Vec::with_capacity(self.cols.len());
        let mut vals = Vec::with_capacity(self.vals.len());
        for i in 0..self.size {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                if self.vals[k] != W::zero() {
                    cols.push(self.cols[k]);
                    vals.push(self.vals[k]);
                }
            }
            row_ptr.push(cols.len());
        }
        self.row_ptr = row_ptr;
        self.cols = cols;
        self.vals = vals;
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, W)> + '_ {
        (self.row_ptr[i]..self.row_ptr[i + 1]).map(move |k| (self.cols[k] as usize, self.vals[k]))
    }

    pub fn get(&self, i: usize, j: usize) -> W {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.cols[range.clone()].binary_search(&(j as u32)) {
            Ok(k) => self.vals[range.start + k],
            Err(_) => W::zero(),
        }
    }

    pub fn to_dense(&self) -> Vec<Vec<W>> {
        (0..self.size)
            .map(|i| {
                let mut r = vec![W::zero(); self.size];
                for (j, w) in self.row(i) {
                    r[j] = w;
                }
                r
            })
            .collect()
    }

    pub fn transpose(&self) -> Self {
        let mut rows: Vec<Vec<(usize, W)>> = vec![Vec::new(); self.size];
        for i in 0..self.size {
            for (j, w) in self.row(i) {
                rows[j].push((i, w));
            }
        }
        TransitionMatrix::from_rows(self.size, rows).expect("shape preserved")
    }

    pub fn row_sums(&self) -> Vec<W> {
        (0..self.size)
            .map(|i| weight_sum(self.row(i).map(|e| e.1)))
            .collect()
    }

    pub fn col_sums(&self) -> Vec<W> {
        self.transpose().row_sums()
    }

    pub fn is_stochastic(&self, tol: f64) -> bool {
        self.vals.iter().all(|&w| w >= W::zero())
            && self
                .row_sums()
                .into_iter()
                .all(|s| s.abs_diff(W::one()).as_f64() <= tol)
    }

    pub fn is_doubly_stochastic(&self, tol: f64) -> bool {
        self.is_stochastic(tol) && self.transpose().is_stochastic(tol)
    }

    /// Largest entrywise difference, over the union of both sparsity patterns.
    pub fn max_abs_diff(&self, other: &Self) -> Result<W> {
        if self.size != other.size {
            return Err(Error::SizeMismatch {
                left: self.size,
                right: other.size,
            });
        }
        let mut worst = W::zero();
        for i in 0..self.size {
            for (j, w) in self.row(i) {
                let d = w.abs_diff(other.get(i, j));
                if d > worst {
                    worst = d;
                }
            }
            for (j, w) in other.row(i) {
                let d = w.abs_diff(self.get(i, j));
                if d > worst {
                    worst = d;
                }
            }
        }
        Ok(worst)
    }

    /// Row vector times matrix: `out[j] = Σ_i dist[i] K[i][j]`.
    pub fn apply(&self, dist: &[W]) -> Result<Vec<W>> {
        if dist.len() != self.size {
            return Err(Error::SizeMismatch {
                left: dist.len(),
                right: self.size,
            });
        }
        let mut out = vec![W::zero(); self.size];
        for (i, &p) in dist.iter().enumerate() {
            if p == W::zero() {
                continue;
            }
            for (j, w) in self.row(i) {
                out[j] = out[j] + p * w;
            }
        }
        Ok(out)
    }

    /// Matrix product `self · other`.
    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.size != other.size {
            return Err(Error::SizeMismatch {
                left: self.size,
                right: other.size,
            });
        }
        let rows = (0..self.size)
            .into_par_iter()
            .map(|i| {
                let mut acc = vec![W::zero(); self.size];
                let mut touched = Vec::new();
                for (k, a) in self.row(i) {
                    for (j, b) in other.row(k) {
                        if acc[j] == W::zero() {
                            touched.push(j);
                        }
                        acc[j] = acc[j] + a * b;
                    }
                }
                touched.sort_unstable();
                touched.dedup();
                touched.into_iter().map(|j| (j, acc[j])).collect()
            })
            .collect();
        TransitionMatrix::from_rows(self.size, rows)
    }
}

/// Pull-style propagator for floating-point distributions: each target
/// state is one compensated sum in a fixed order, so results do not depend
/// on the thread count.
#[derive(Debug, Clone)]
pub struct Propagator<S> {
    transpose: TransitionMatrix<S>,
}

impl<S: Scalar> Propagator<S> {
    pub fn new(kernel: &TransitionMatrix<S>) -> Self {
        Propagator {
            transpose: kernel.transpose(),
        }
    }

    pub fn size(&self) -> usize {
        self.transpose.size
    }

    pub fn step(&self, dist: &[S]) -> Result<Vec<S>> {
        if dist.len() != self.transpose.size {
            return Err(Error::SizeMismatch {
                left: dist.len(),
                right: self.transpose.size,
            });
        }
        Ok((0..self.transpose.size)
            .into_par_iter()
            .map(|j| {
                let mut acc = CompensatedSum::new();
                for (i, w) in self.transpose.row(j) {
                    acc.add(dist[i] * w);
                }
                acc.total()
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;

    fn two_state() -> TransitionMatrix<f64> {
        TransitionMatrix::from_dense(vec![vec![0.9, 0.1], vec![0.4, 0.6]]).unwrap()
    }

    #[test]
    fn sums_and_transpose() {
        let k = two_state();
        assert!(k.is_stochastic(1e-12));
        assert!(!k.is_doubly_stochastic(1e-12));
        assert_eq!(k.transpose().get(0, 1), 0.4);
        assert_eq!(k.transpose().transpose(), k);
    }

    #[test]
    fn apply_and_propagator_agree() {
        let k = two_state();
        let p = vec![0.3, 0.7];
        let a = k.apply(&p).unwrap();
        let b = Propagator::new(&k).step(&p).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-15);
        }
        assert!((a[0] - (0.3 * 0.9 + 0.7 * 0.4)).abs() < 1e-15);
    }

    #[test]
    fn matmul_matches_dense() {
        let k = two_state();
        let k2 = k.matmul(&k).unwrap();
        assert!((k2.get(0, 0) - (0.81 + 0.04)).abs() < 1e-15);
        assert!(k2.is_stochastic(1e-12));
    }

    #[test]
    fn rational_kernel_is_exact() {
        let third = Rational::ratio(1, 3);
        let k = TransitionMatrix::from_dense(vec![
            vec![third, third, third],
            vec![third, third, third],
            vec![third, third, third],
        ])
        .unwrap();
        assert!(k.is_doubly_stochastic(0.0));
        assert_eq!(k.matmul(&k).unwrap(), k);
    }

    #[test]
    fn duplicates_merge_and_zeros_drop() {
        let k = TransitionMatrix::from_rows(
            2,
            vec![vec![(1, 0.5), (1, 0.5), (0, 0.0)], vec![(0, 1.0)]],
        )
        .unwrap();
        assert_eq!(k.nnz(), 2);
        assert_eq!(k.get(0, 1), 1.0);
        assert!(TransitionMatrix::<f64>::from_rows(2, vec![vec![(2, 1.0)], vec![]]).is_err());
    }
}
