use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};

/// Dense row-major `n × p` matrix of finite observations.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    values: Vec<f64>,
    n: usize,
    p: usize,
}

impl DataMatrix {
    /// Wraps row-major `values`. Requires `n ≥ 2`, `p ≥ 1` and finite entries.
    pub fn new(values: Vec<f64>, n: usize, p: usize) -> Result<Self> {
        if n < 2 {
            return Err(invalid("a data matrix needs at least 2 observations"));
        }
        if p < 1 {
            return Err(invalid("a data matrix needs at least 1 feature"));
        }
        if values.len() != n * p {
            return Err(Error::DimensionMismatch {
                expected: n * p,
                found: values.len(),
            });
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(invalid(alloc::format!(
                "non-finite value at row {}, column {}",
                pos / p,
                pos % p
            )));
        }
        Ok(Self { values, n, p })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let p = rows.first().map_or(0, |r| r.as_ref().len());
        let mut values = Vec::with_capacity(rows.len() * p);
        for row in rows {
            let row = row.as_ref();
            if row.len() != p {
                return Err(Error::DimensionMismatch {
                    expected: p,
                    found: row.len(),
                });
            }
            values.extend_from_slice(row);
        }
        Self::new(values, rows.len(), p)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn p(&self) -> usize {
        self.p
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.p..(i + 1) * self.p]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.values.chunks_exact(self.p)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Sub-matrix of the given rows, in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> Result<Self> {
        let mut values = Vec::with_capacity(indices.len() * self.p);
        for &i in indices {
            if i >= self.n {
                return Err(invalid(alloc::format!("row index {i} out of range")));
            }
            values.extend_from_slice(self.row(i));
        }
        Self::new(values, indices.len(), self.p)
    }

    pub fn column_means(&self) -> Vec<f64> {
        let mut means = alloc::vec![0.0; self.p];
        for row in self.rows() {
            for (m, v) in means.iter_mut().zip(row) {
                *m += v;
            }
        }
        let n = self.n as f64;
        means.iter_mut().for_each(|m| *m /= n);
        means
    }

    /// Per-column sample variances (divisor `n − 1`).
    pub fn column_variances(&self) -> Vec<f64> {
        let means = self.column_means();
        let mut vars = alloc::vec![0.0; self.p];
        for row in self.rows() {
            for ((v, x), m) in vars.iter_mut().zip(row).zip(&means) {
                *v += (x - m) * (x - m);
            }
        }
        let denom = (self.n - 1) as f64;
        vars.iter_mut().for_each(|v| *v /= denom);
        vars
    }

    /// Trace of the sample covariance matrix.
    pub fn total_variance(&self) -> f64 {
        self.column_variances().iter().sum()
    }

    /// Number of distinct rows (bitwise comparison).
    pub fn distinct_rows(&self) -> usize {
        let mut order: Vec<usize> = (0..self.n).collect();
        order.sort_unstable_by(|&a, &b| cmp_rows(self.row(a), self.row(b)));
        1 + order
            .windows(2)
            .filter(|w| cmp_rows(self.row(w[0]), self.row(w[1])) != core::cmp::Ordering::Equal)
            .count()
    }
}

pub(crate) fn cmp_rows(a: &[f64], b: &[f64]) -> core::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            core::cmp::Ordering::Equal => continue,
            other => return other,
        }
    }
    core::cmp::Ordering::Equal
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_shapes_and_values() {
        assert!(DataMatrix::new(vec![1.0], 1, 1).is_err());
        assert!(DataMatrix::new(vec![1.0, 2.0, 3.0], 2, 2).is_err());
        assert!(DataMatrix::new(vec![1.0, f64::NAN], 2, 1).is_err());
        assert!(DataMatrix::new(vec![1.0, f64::INFINITY], 2, 1).is_err());
        assert!(DataMatrix::new(vec![1.0, 2.0], 2, 1).is_ok());
    }

    #[test]
    fn distinct_rows_counts_duplicates_once() {
        let d = DataMatrix::from_rows(&[[0.0, 1.0], [0.0, 1.0], [1.0, 0.0]]).unwrap();
        assert_eq!(d.distinct_rows(), 2);
    }

    #[test]
    fn column_variance_uses_n_minus_one() {
        let d = DataMatrix::from_rows(&[[0.0], [2.0]]).unwrap();
        assert_eq!(d.column_means(), vec![1.0]);
        assert_eq!(d.column_variances(), vec![2.0]);
    }
}
