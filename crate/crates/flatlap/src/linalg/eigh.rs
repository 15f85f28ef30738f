//! Dense Hermitian eigensolver: Householder reduction to real tridiagonal form
//! followed by implicit QL iterations.

use num_traits::{Float, One, Zero};
use super::dense::DMat;
use crate::scalar::{norm, Field, Real};

/// Eigenvalues in ascending order with the matching orthonormal eigenvectors as columns.
#[derive(Clone, Debug)]
pub struct HermitianEigen<S: Field> {
    pub values: Vec<S::Real>,
    pub vectors: DMat<S>,
}

struct Tridiagonal<S: Field> {
    diag: Vec<S::Real>,
    sub: Vec<S::Real>,
    phases: Vec<S>,
    reflectors: Vec<(usize, Vec<S>)>,
}

fn tridiagonalize<S: Field>(a: &DMat<S>) -> Tridiagonal<S> {
    let n = a.rows();
    assert_eq!(n, a.cols(), "eigen decomposition of a non-square matrix");
    let two = S::Real::lit(2.0);
    let mut m = a.clone();
    let mut reflectors = Vec::new();
    for k in 0..n.saturating_sub(2) {
        let s = k + 1;
        let x: Vec<S> = (s..n).map(|i| m[(i, k)]).collect();
        let tail = norm(&x[1..]);
        if tail == S::Real::zero() {
            continue;
        }
        let xnorm = norm(&x);
        let x0 = x[0];
        let ax0 = x0.modulus();
        let phase = if ax0 == S::Real::zero() { S::one() } else { x0.scale(ax0.recip()) };
        let alpha = -phase.scale(xnorm);
        let mut w = x;
        w[0] -= alpha;
        let wn = norm(&w).recip();
        for wi in w.iter_mut() {
            *wi = wi.scale(wn);
        }
        let len = n - s;
        let mut p = vec![S::zero(); len];
        for (i, pi) in p.iter_mut().enumerate() {
            let row = &m.row(s + i)[s..];
            *pi = row.iter().zip(&w).map(|(&a, &b)| a * b).sum();
        }
        let kk: S = w.iter().zip(&p).map(|(&wi, &pi)| wi.conj() * pi).sum();
        let kk = kk.re();
        let q: Vec<S> = p.iter().zip(&w).map(|(&pi, &wi)| pi - wi.scale(kk)).collect();
        for i in 0..len {
            let wi2 = w[i].scale(two);
            let qi2 = q[i].scale(two);
            for j in 0..len {
                let upd = wi2 * q[j].conj() + qi2 * w[j].conj();
                m[(s + i, s + j)] -= upd;
            }
        }
        m[(s, k)] = alpha;
        m[(k, s)] = alpha.conj();
        for i in s + 1..n {
            m[(i, k)] = S::zero();
            m[(k, i)] = S::zero();
        }
        reflectors.push((s, w));
    }
    let diag: Vec<S::Real> = (0..n).map(|i| m[(i, i)].re()).collect();
    let mut sub = Vec::with_capacity(n.saturating_sub(1));
    let mut phases = vec![S::one(); n];
    for i in 0..n.saturating_sub(1) {
        let e = m[(i + 1, i)];
        let ae = e.modulus();
        sub.push(ae);
        phases[i + 1] = if ae == S::Real::zero() { S::one() } else { phases[i] * e.scale(ae.recip()) };
    }
    Tridiagonal { diag, sub, phases, reflectors }
}

fn hypot<T: Real>(a: T, b: T) -> T {
    a.hypot(b)
}

/// Implicit QL on a real symmetric tridiagonal matrix. When `z` is given (row-major,
/// initially the identity), row `j` ends up holding eigenvector `j`.
fn tql2<T: Real>(d: &mut [T], sub: &[T], mut z: Option<&mut Vec<T>>) {
    let n = d.len();
    if n == 0 {
        return;
    }
    let mut e = vec![T::zero(); n];
    e[..n - 1].copy_from_slice(sub);
    let eps = T::epsilon();
    let mut f = T::zero();
    let mut tst1 = T::zero();
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            loop {
                let g = d[l];
                let mut p = (d[l + 1] - g) / (T::lit(2.0) * e[l]);
                let mut r = hypot(p, T::one());
                if p < T::zero() {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di -= h;
                }
                f += h;
                p = d[m];
                let mut c = T::one();
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = T::zero();
                let mut s2 = T::zero();
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    h = c * p;
                    r = hypot(p, e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    if let Some(z) = z.as_deref_mut() {
                        let (lo, hi) = z.split_at_mut((i + 1) * n);
                        let zi = &mut lo[i * n..];
                        let zi1 = &mut hi[..n];
                        for (a, b) in zi.iter_mut().zip(zi1.iter_mut()) {
                            let hb = *b;
                            *b = s * *a + c * hb;
                            *a = c * *a - s * hb;
                        }
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = T::zero();
    }
}

fn ascending_order<T: Real>(d: &[T]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..d.len()).collect();
    idx.sort_by(|&a, &b| d[a].partial_cmp(&d[b]).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b)));
    idx
}

/// All eigenvalues of a Hermitian matrix, ascending.
pub fn eigvalsh<S: Field>(a: &DMat<S>) -> Vec<S::Real> {
    let t = tridiagonalize(a);
    let mut d = t.diag;
    tql2(&mut d, &t.sub, None);
    let order = ascending_order(&d);
    order.into_iter().map(|i| d[i]).collect()
}

/// The `count` smallest eigenpairs of a Hermitian matrix.
pub fn eigh<S: Field>(a: &DMat<S>, count: usize) -> HermitianEigen<S> {
    let n = a.rows();
    let count = count.min(n);
    let t = tridiagonalize(a);
    let mut d = t.diag;
    let mut z = vec![S::Real::zero(); n * n];
    for i in 0..n {
        z[i * n + i] = S::Real::one();
    }
    tql2(&mut d, &t.sub, Some(&mut z));
    let order = ascending_order(&d);
    let two = S::Real::lit(2.0);
    let mut vectors = DMat::zeros(n, count);
    let mut values = Vec::with_capacity(count);
    for (col, &j) in order.iter().take(count).enumerate() {
        values.push(d[j]);
        let mut y: Vec<S> = (0..n).map(|i| t.phases[i] * S::from_real(z[j * n + i])).collect();
        for (start, w) in t.reflectors.iter().rev() {
            let seg = &mut y[*start..];
            let c: S = w.iter().zip(seg.iter()).map(|(&wi, &yi)| wi.conj() * yi).sum();
            let c = c.scale(two);
            for (yi, &wi) in seg.iter_mut().zip(w) {
                *yi -= wi * c;
            }
        }
        for (i, yi) in y.into_iter().enumerate() {
            vectors[(i, col)] = yi;
        }
    }
    HermitianEigen { values, vectors }
}
