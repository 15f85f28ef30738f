//! Envelope (skyline) Cholesky factorization with reverse Cuthill–McKee ordering.

use num_traits::{Float, Zero};
use std::collections::VecDeque;

use super::{CsrMatrix, LinalgError};
use crate::scalar::{Field, Real};

/// `P A Pᵀ = L Lᴴ` for a Hermitian positive definite sparse `A`.
#[derive(Clone, Debug)]
pub struct EnvelopeCholesky<S: Field> {
    /// `perm[new] = old`.
    perm: Vec<usize>,
    first: Vec<usize>,
    offsets: Vec<usize>,
    data: Vec<S>,
}

/// Reverse Cuthill–McKee ordering of the symmetric sparsity pattern; returns `perm[new] = old`.
pub(crate) fn reverse_cuthill_mckee<S: Field>(a: &CsrMatrix<S>) -> Vec<usize> {
    let n = a.nrows();
    let adj: Vec<Vec<usize>> = (0..n)
        .map(|r| a.row(r).0.iter().copied().filter(|&c| c != r).collect())
        .collect();
    let degree: Vec<usize> = adj.iter().map(Vec::len).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let bfs_levels = |start: usize, mark: &mut Vec<usize>, stamp: usize| -> (usize, usize) {
        // returns (eccentricity, a farthest vertex of minimal degree)
        let mut queue = VecDeque::from([(start, 0usize)]);
        mark[start] = stamp;
        let mut far = (0, start);
        while let Some((v, d)) = queue.pop_front() {
            if d > far.0 || (d == far.0 && degree[v] < degree[far.1]) {
                far = (d, v);
            }
            for &w in &adj[v] {
                if mark[w] != stamp {
                    mark[w] = stamp;
                    queue.push_back((w, d + 1));
                }
            }
        }
        far
    };
    let mut mark = vec![usize::MAX; n];
    let mut stamp = 0;
    for root in 0..n {
        if visited[root] {
            continue;
        }
        // pseudo-peripheral start vertex
        let mut start = root;
        stamp += 1;
        let mut ecc = bfs_levels(start, &mut mark, stamp).0;
        loop {
            stamp += 1;
            let (_, cand) = bfs_levels(start, &mut mark, stamp);
            stamp += 1;
            let (e, _) = bfs_levels(cand, &mut mark, stamp);
            if e > ecc {
                ecc = e;
                start = cand;
            } else {
                break;
            }
        }
        let mut queue = VecDeque::from([start]);
        visited[start] = true;
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut nb: Vec<usize> = adj[v].iter().copied().filter(|&w| !visited[w]).collect();
            nb.sort_by_key(|&w| (degree[w], w));
            nb.dedup();
            for w in nb {
                if !visited[w] {
                    visited[w] = true;
                    queue.push_back(w);
                }
            }
        }
    }
    order.reverse();
    order
}

impl<S: Field> EnvelopeCholesky<S> {
    pub fn factor(a: &CsrMatrix<S>) -> Result<Self, LinalgError> {
        let n = a.nrows();
        if n != a.ncols() {
            return Err(LinalgError::Dimension(format!("{}x{} is not square", n, a.ncols())));
        }
        let perm = reverse_cuthill_mckee(a);
        let mut inv = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let mut first: Vec<usize> = (0..n).collect();
        for (r, c, _) in a.iter() {
            let (i, j) = (inv[r], inv[c]);
            if j < i && j < first[i] {
                first[i] = j;
            }
        }
        let mut offsets = Vec::with_capacity(n + 1);
        let mut total = 0;
        for i in 0..n {
            offsets.push(total);
            total += i - first[i] + 1;
        }
        offsets.push(total);
        let mut data = vec![S::zero(); total];
        for (r, c, v) in a.iter() {
            let (i, j) = (inv[r], inv[c]);
            if j <= i {
                data[offsets[i] + j - first[i]] += v;
            }
        }
        for i in 0..n {
            let fi = first[i];
            for j in fi..i {
                let fj = first[j];
                let k0 = fi.max(fj);
                let (head, tail) = data.split_at_mut(offsets[i]);
                let li = &tail[..i - fi + 1];
                let lj = &head[offsets[j]..offsets[j] + j - fj + 1];
                let mut s = li[j - fi];
                for k in k0..j {
                    s -= li[k - fi] * lj[k - fj].conj();
                }
                let djj = lj[j - fj].re();
                tail[j - fi] = s.scale(djj.recip());
            }
            let row = &data[offsets[i]..offsets[i + 1]];
            let mut d = row[i - fi].re();
            for v in &row[..i - fi] {
                d -= v.abs_sqr();
            }
            if !(d > S::Real::zero()) {
                return Err(LinalgError::NotPositiveDefinite { index: i, pivot: d.as_f64() });
            }
            data[offsets[i] + i - fi] = S::from_real(d.sqrt());
        }
        Ok(EnvelopeCholesky { perm, first, offsets, data })
    }

    pub fn dim(&self) -> usize {
        self.perm.len()
    }

    /// Number of stored factor entries.
    pub fn envelope_size(&self) -> usize {
        self.data.len()
    }

    pub fn solve(&self, b: &[S]) -> Vec<S> {
        let n = self.dim();
        assert_eq!(b.len(), n);
        let mut y: Vec<S> = self.perm.iter().map(|&old| b[old]).collect();
        for i in 0..n {
            let fi = self.first[i];
            let row = &self.data[self.offsets[i]..self.offsets[i + 1]];
            let mut s = y[i];
            for (k, &l) in (fi..i).zip(row) {
                s -= l * y[k];
            }
            y[i] = s.scale(row[i - fi].re().recip());
        }
        for i in (0..n).rev() {
            let fi = self.first[i];
            let row = &self.data[self.offsets[i]..self.offsets[i + 1]];
            let xi = y[i].scale(row[i - fi].re().recip());
            y[i] = xi;
            for (k, &l) in (fi..i).zip(row) {
                y[k] -= l.conj() * xi;
            }
        }
        let mut x = vec![S::zero(); n];
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = y[new];
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn solves_shifted_cycle_laplacian() {
        let n = 12;
        let w = Complex64::from_polar(1.0, 0.7);
        let mut t = Vec::new();
        for i in 0..n {
            let j = (i + 1) % n;
            t.push((i, i, Complex64::new(2.5, 0.0)));
            t.push((j, i, -w));
            t.push((i, j, -w.conj()));
        }
        let a = CsrMatrix::from_triplets(n, n, t);
        let f = EnvelopeCholesky::factor(&a).unwrap();
        let b: Vec<Complex64> = (0..n).map(|i| Complex64::new(i as f64, 1.0 - i as f64)).collect();
        let x = f.solve(&b);
        let r = a.matvec(&x);
        for (ri, bi) in r.iter().zip(&b) {
            assert!((ri - bi).norm() < 1e-12);
        }
    }

    #[test]
    fn rejects_indefinite() {
        let a = CsrMatrix::from_triplets(2, 2, vec![(0, 0, 1.0), (0, 1, 2.0), (1, 0, 2.0), (1, 1, 1.0)]);
        assert!(matches!(EnvelopeCholesky::factor(&a), Err(LinalgError::NotPositiveDefinite { .. })));
    }

    #[test]
    fn rcm_is_permutation() {
        let a = CsrMatrix::from_triplets(4, 4, vec![(0, 3, 1.0), (3, 0, 1.0), (1, 1, 1.0), (2, 2, 1.0)]);
        let mut p = reverse_cuthill_mckee(&a);
        p.sort();
        assert_eq!(p, vec![0, 1, 2, 3]);
    }
}
