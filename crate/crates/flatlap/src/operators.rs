//! Gradient, divergence and bundle Laplacian of a discretization graph.

use std::io::{self, Write};

use num_complex::Complex;
use thiserror::Error;

use crate::discretize::DiscretizationGraph;
use crate::linalg::{CsrMatrix, DMat};
use crate::scalar::{dot, Real};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OperatorError {
    #[error("Rayleigh quotient of the zero section")]
    ZeroSection,
    #[error("section has length {got}, operator dimension is {expected}")]
    Dimension { expected: usize, got: usize },
}

/// Hermitian sparse operator acting on flattened sections (vertex-major, fiber-minor).
#[derive(Clone, Debug)]
pub struct SparseHermitianOperator<T: Real> {
    matrix: CsrMatrix<Complex<T>>,
    rank: usize,
    hermitian_defect: T,
}

impl<T: Real> SparseHermitianOperator<T> {
    /// Wraps a matrix, recording its Hermitian defect.
    pub fn new(matrix: CsrMatrix<Complex<T>>, rank: usize) -> Self {
        let hermitian_defect = matrix.hermitian_defect();
        SparseHermitianOperator { matrix, rank, hermitian_defect }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn matrix(&self) -> &CsrMatrix<Complex<T>> {
        &self.matrix
    }

    /// Largest entry modulus of `A − Aᴴ`, measured at assembly.
    pub fn hermitian_defect(&self) -> T {
        self.hermitian_defect
    }

    pub fn apply(&self, f: &[Complex<T>]) -> Vec<Complex<T>> {
        self.matrix.matvec(f)
    }

    pub fn to_dense(&self) -> DMat<Complex<T>> {
        self.matrix.to_dense()
    }

    /// `⟨A f, f⟩ / ⟨f, f⟩` (real part; the imaginary part vanishes up to rounding).
    pub fn rayleigh(&self, f: &[Complex<T>]) -> Result<T, OperatorError> {
        if f.len() != self.dim() {
            return Err(OperatorError::Dimension { expected: self.dim(), got: f.len() });
        }
        let ff = dot(f, f).re;
        if ff == T::zero() {
            return Err(OperatorError::ZeroSection);
        }
        Ok(dot(&self.apply(f), f).re / ff)
    }

    /// Coordinate dump `row,col,re,im`.
    pub fn write_coo<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "row,col,re,im")?;
        for (r, c, v) in self.matrix.iter() {
            writeln!(w, "{},{},{:.12e},{:.12e}", r, c, v.re.as_f64(), v.im.as_f64())?;
        }
        Ok(())
    }
}

fn push_block<T: Real>(t: &mut Vec<(usize, usize, Complex<T>)>, r0: usize, c0: usize, m: &DMat<Complex<T>>, sign: T) {
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            let v = m[(i, j)];
            if v != Complex::new(T::zero(), T::zero()) {
                t.push((r0 + i, c0 + j, v * sign));
            }
        }
    }
}

fn push_identity<T: Real>(t: &mut Vec<(usize, usize, Complex<T>)>, r0: usize, c0: usize, r: usize, sign: T) {
    for i in 0..r {
        t.push((r0 + i, c0 + i, Complex::new(sign, T::zero())));
    }
}

/// `(Δf)(v) = Σ_{edges at v} (f(v) − φ_{v'→v} f(v'))`, parallel edges counted with multiplicity.
pub fn assemble_laplacian<T: Real>(g: &DiscretizationGraph<T>) -> SparseHermitianOperator<T> {
    let r = g.rank();
    let mut t = Vec::with_capacity(g.edges().len() * 4 * r * r);
    for (k, e) in g.edges().iter().enumerate() {
        let u = g.transport(k);
        let (tb, hb) = (e.tail * r, e.head * r);
        push_identity(&mut t, hb, hb, r, T::one());
        push_block(&mut t, hb, tb, u, -T::one());
        push_identity(&mut t, tb, tb, r, T::one());
        push_block(&mut t, tb, hb, &u.adjoint(), -T::one());
    }
    let d = g.dim();
    SparseHermitianOperator::new(CsrMatrix::from_triplets(d, d, t), r)
}

/// `(∇f)(e) = f(t(e)) − φ_{h(e)→t(e)} f(h(e))`, with the edge fiber identified with the tail fiber.
pub fn gradient<T: Real>(g: &DiscretizationGraph<T>) -> CsrMatrix<Complex<T>> {
    let r = g.rank();
    let mut t = Vec::new();
    for (k, e) in g.edges().iter().enumerate() {
        let u = g.transport(k);
        let row = k * r;
        push_identity(&mut t, row, e.tail * r, r, T::one());
        push_block(&mut t, row, e.head * r, &u.adjoint(), -T::one());
    }
    CsrMatrix::from_triplets(g.edges().len() * r, g.dim(), t)
}

/// L²-adjoint of [`gradient`].
pub fn divergence<T: Real>(g: &DiscretizationGraph<T>) -> CsrMatrix<Complex<T>> {
    gradient(g).adjoint()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundle::FlatUnitaryBundle;
    use crate::discretize::build_graph;
    use crate::linalg::{eigvalsh, CsrMatrix};
    use crate::surface::{catalog, Isometry, Seam, Side, SideRef, SquareTiledSurface};
    use std::f64::consts::PI;

    #[test]
    fn path_of_three() {
        let s = SquareTiledSurface::new(
            3,
            vec![
                Seam { a: SideRef::new(0, Side::E), b: SideRef::new(1, Side::W), iso: Isometry::Translation },
                Seam { a: SideRef::new(1, Side::E), b: SideRef::new(2, Side::W), iso: Isometry::Translation },
            ],
        )
        .unwrap();
        let g = build_graph(&s, &FlatUnitaryBundle::<f64>::trivial(&s, 1), 1).unwrap();
        let a = assemble_laplacian(&g).to_dense();
        let expect = [[1.0, -1.0, 0.0], [-1.0, 2.0, -1.0], [0.0, -1.0, 1.0]];
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(a[(i, j)], Complex::new(expect[i][j], 0.0));
            }
        }
    }

    #[test]
    fn twisted_torus_fourier() {
        let n = 5;
        let (alpha, beta) = (0.6, 2.1);
        let (s, b) = FlatUnitaryBundle::torus_twist(1, 1, alpha, beta);
        let g = build_graph(&s, &b, n).unwrap();
        let vals = eigvalsh(&assemble_laplacian(&g).to_dense());
        let mut expect: Vec<f64> = (0..n)
            .flat_map(|p| {
                (0..n).map(move |q| {
                    4.0 - 2.0 * (2.0 * PI * (p as f64 + alpha / (2.0 * PI)) / n as f64).cos()
                        - 2.0 * (2.0 * PI * (q as f64 + beta / (2.0 * PI)) / n as f64).cos()
                })
            })
            .collect();
        expect.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (x, y) in vals.iter().zip(&expect) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn constants_in_kernel_and_rayleigh() {
        let s = catalog::pillowcase();
        let g = build_graph(&s, &FlatUnitaryBundle::<f64>::trivial(&s, 1), 3).unwrap();
        let op = assemble_laplacian(&g);
        let one = vec![Complex::new(1.0, 0.0); g.dim()];
        assert!(op.apply(&one).iter().all(|z| z.norm() < 1e-15));
        assert_eq!(op.rayleigh(&one).unwrap(), 0.0);
        assert_eq!(op.rayleigh(&vec![Complex::new(0.0, 0.0); g.dim()]), Err(OperatorError::ZeroSection));
    }

    #[test]
    fn top_mode_on_even_torus() {
        let n = 6;
        let s = catalog::torus(1, 1);
        let g = build_graph(&s, &FlatUnitaryBundle::<f64>::trivial(&s, 1), n).unwrap();
        let op = assemble_laplacian(&g);
        let f: Vec<Complex<f64>> = (0..g.num_vertices())
            .map(|v| {
                let (_, i, j) = g.cell(v);
                Complex::new(if (i + j) % 2 == 0 { 1.0 } else { -1.0 }, 0.0)
            })
            .collect();
        assert!((op.rayleigh(&f).unwrap() - 8.0).abs() < 1e-12);
    }

    #[test]
    fn laplacian_is_div_grad() {
        let s = catalog::l_shape();
        let g = build_graph(&s, &FlatUnitaryBundle::<f64>::trivial(&s, 2), 2).unwrap();
        let lap = assemble_laplacian(&g);
        let dd: CsrMatrix<Complex<f64>> = divergence(&g).matmul(&gradient(&g));
        assert!(lap.matrix().max_abs_diff(&dd) <= 1e-13);
        assert!(lap.hermitian_defect() <= 1e-13);
    }

    #[test]
    fn coo_dump() {
        let s = catalog::torus(1, 1);
        let g = build_graph(&s, &FlatUnitaryBundle::<f64>::trivial(&s, 1), 2).unwrap();
        let mut buf = Vec::new();
        assemble_laplacian(&g).write_coo(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("row,col,re,im\n"));
        assert!(text.contains("0,0,4.000000000000e0,0.000000000000e0"));
    }
}
