use super::dense::DMat;
use crate::scalar::Field;

/// Compressed sparse row matrix with sorted, duplicate-free column indices.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix<S> {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<S>,
}

impl<S: Field> CsrMatrix<S> {
    /// Assembles from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(nrows: usize, ncols: usize, mut triplets: Vec<(usize, usize, S)>) -> Self {
        triplets.sort_by_key(|a| (a.0, a.1));
        let mut indptr = vec![0; nrows + 1];
        let mut indices = Vec::with_capacity(triplets.len());
        let mut values: Vec<S> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            assert!(r < nrows && c < ncols, "triplet ({r},{c}) out of bounds");
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                indices.push(c);
                values.push(v);
                indptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..nrows {
            indptr[r + 1] += indptr[r];
        }
        CsrMatrix { nrows, ncols, indptr, indices, values }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Column indices and values of row `r`.
    pub fn row(&self, r: usize) -> (&[usize], &[S]) {
        let (a, b) = (self.indptr[r], self.indptr[r + 1]);
        (&self.indices[a..b], &self.values[a..b])
    }

    /// Stored entry `(r, c)`, zero when absent.
    pub fn get(&self, r: usize, c: usize) -> S {
        let (cols, vals) = self.row(r);
        cols.binary_search(&c).map_or(S::zero(), |k| vals[k])
    }

    /// Iterates stored entries in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, S)> + '_ {
        (0..self.nrows).flat_map(move |r| {
            let (cols, vals) = self.row(r);
            cols.iter().zip(vals).map(move |(&c, &v)| (r, c, v))
        })
    }

    pub fn matvec_into(&self, x: &[S], y: &mut [S]) {
        assert_eq!(x.len(), self.ncols);
        assert_eq!(y.len(), self.nrows);
        for (r, yr) in y.iter_mut().enumerate() {
            let (cols, vals) = self.row(r);
            let mut acc = S::zero();
            for (&c, &v) in cols.iter().zip(vals) {
                acc += v * x[c];
            }
            *yr = acc;
        }
    }

    pub fn matvec(&self, x: &[S]) -> Vec<S> {
        let mut y = vec![S::zero(); self.nrows];
        self.matvec_into(x, &mut y);
        y
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let t = self.iter().map(|(r, c, v)| (c, r, v.conj())).collect();
        Self::from_triplets(self.ncols, self.nrows, t)
    }

    /// Sparse product `self * other`.
    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.ncols, other.nrows);
        let mut t = Vec::new();
        for r in 0..self.nrows {
            let (cols, vals) = self.row(r);
            for (&k, &a) in cols.iter().zip(vals) {
                let (ocols, ovals) = other.row(k);
                for (&c, &b) in ocols.iter().zip(ovals) {
                    t.push((r, c, a * b));
                }
            }
        }
        Self::from_triplets(self.nrows, other.ncols, t)
    }

    /// `self + shift * I`.
    pub fn shifted(&self, shift: S) -> Self {
        assert_eq!(self.nrows, self.ncols);
        let mut t: Vec<_> = self.iter().collect();
        t.extend((0..self.nrows).map(|i| (i, i, shift)));
        Self::from_triplets(self.nrows, self.ncols, t)
    }

    /// Largest modulus of the entrywise difference with `other`.
    pub fn max_abs_diff(&self, other: &Self) -> S::Real {
        let mut t: Vec<_> = self.iter().collect();
        t.extend(other.iter().map(|(r, c, v)| (r, c, -v)));
        let d = Self::from_triplets(self.nrows, self.ncols, t);
        d.values.iter().fold(S::Real::default(), |m, v| if v.modulus() > m { v.modulus() } else { m })
    }

    /// Largest modulus of `A - Aᴴ`.
    pub fn hermitian_defect(&self) -> S::Real {
        self.max_abs_diff(&self.adjoint())
    }

    pub fn diagonal(&self) -> Vec<S> {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).collect()
    }

    /// Lower bound on the spectrum of a Hermitian matrix from Gershgorin discs.
    pub fn gershgorin_lower(&self) -> S::Real {
        (0..self.nrows)
            .map(|r| {
                let (cols, vals) = self.row(r);
                let mut off = S::Real::default();
                let mut diag = S::Real::default();
                for (&c, &v) in cols.iter().zip(vals) {
                    if c == r {
                        diag = v.re();
                    } else {
                        off += v.modulus();
                    }
                }
                diag - off
            })
            .fold(None, |m: Option<S::Real>, x| Some(m.map_or(x, |m| if x < m { x } else { m })))
            .unwrap_or_default()
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> S::Real {
        (0..self.nrows)
            .map(|r| self.row(r).1.iter().map(|v| v.modulus()).sum::<S::Real>())
            .fold(S::Real::default(), |m, x| if x > m { x } else { m })
    }

    pub fn to_dense(&self) -> DMat<S> {
        let mut m = DMat::zeros(self.nrows, self.ncols);
        for (r, c, v) in self.iter() {
            m[(r, c)] += v;
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplets_sum_duplicates() {
        let m = CsrMatrix::from_triplets(2, 2, vec![(0, 0, 1.0), (1, 0, 2.0), (0, 0, 3.0)]);
        assert_eq!(m.get(0, 0), 4.0);
        assert_eq!(m.get(1, 0), 2.0);
        assert_eq!(m.get(1, 1), 0.0);
        assert_eq!(m.nnz(), 2);
        assert_eq!(m.matvec(&[1.0, 1.0]), vec![4.0, 2.0]);
        let t = m.adjoint();
        assert_eq!(t.get(0, 1), 2.0);
        assert_eq!(m.matmul(&t).to_dense(), m.to_dense().matmul(&t.to_dense()));
    }
}
