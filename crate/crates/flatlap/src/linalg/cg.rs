use num_traits::{Float, Zero};
use super::{CsrMatrix, LinalgError};
use crate::scalar::{axpy, dot, norm, Field, Real};

#[derive(Clone, Debug, PartialEq)]
pub struct CgReport<T> {
    pub iterations: usize,
    pub residual: T,
}

/// Jacobi-preconditioned conjugate gradients for Hermitian positive definite `a`.
/// Stops when `‖b − a x‖ ≤ tol · ‖b‖`.
pub fn conjugate_gradient<S: Field>(
    a: &CsrMatrix<S>,
    b: &[S],
    tol: S::Real,
    max_iter: usize,
) -> Result<(Vec<S>, CgReport<S::Real>), LinalgError> {
    let n = b.len();
    let inv_diag: Vec<S::Real> = a.diagonal().iter().map(|d| d.re().recip()).collect();
    let mut x = vec![S::zero(); n];
    let mut r = b.to_vec();
    let bnorm = norm(b);
    if bnorm == S::Real::zero() {
        return Ok((x, CgReport { iterations: 0, residual: S::Real::zero() }));
    }
    let mut z: Vec<S> = r.iter().zip(&inv_diag).map(|(&ri, &d)| ri.scale(d)).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![S::zero(); n];
    for it in 0..max_iter {
        let res = norm(&r);
        if res <= tol * bnorm {
            return Ok((x, CgReport { iterations: it, residual: res }));
        }
        a.matvec_into(&p, &mut ap);
        let alpha = rz / dot(&ap, &p);
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &ap, &mut r);
        for ((zi, &ri), &d) in z.iter_mut().zip(&r).zip(&inv_diag) {
            *zi = ri.scale(d);
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for (pi, &zi) in p.iter_mut().zip(&z) {
            *pi = zi + beta * *pi;
        }
    }
    let res = norm(&r);
    if res <= tol * bnorm {
        Ok((x, CgReport { iterations: max_iter, residual: res }))
    } else {
        Err(LinalgError::NoConvergence { iterations: max_iter, residual: res.as_f64() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_dirichlet_path() {
        let n = 50;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        let a = CsrMatrix::from_triplets(n, n, t);
        let b = vec![1.0; n];
        let (x, rep) = conjugate_gradient(&a, &b, 1e-13, 1000).unwrap();
        assert!(rep.iterations <= n + 1);
        let r = a.matvec(&x);
        assert!(r.iter().zip(&b).all(|(p, q)| (p - q).abs() < 1e-10));
    }
}
