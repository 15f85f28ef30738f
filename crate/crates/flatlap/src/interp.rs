//! Restriction of continuum sections to the cell graph, averaging around singular points,
//! and the piecewise-linear extension `L_n` with exact energy and pairing integrals.

use std::io::{self, Write};
use std::sync::Arc;

use num_complex::Complex;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::bundle::{CMat, FlatUnitaryBundle};
use crate::discretize::{build_graph, DiscretizationGraph};
use crate::linalg::{eigh, DMat};
use crate::operators::{assemble_laplacian, SparseHermitianOperator};
use crate::scalar::{dot, Field, Real};
use crate::spectral::{lowest_eigenpairs_with, EigenOptions, ReferenceSpectrum, SpectralError};
use crate::surface::{Corner, Side, SquareTiledSurface};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InterpError {
    #[error("averaging around singular points needs n >= 2 (got n = {0})")]
    TooCoarse(usize),
    #[error("fields live on different cell decompositions")]
    MismatchedDecompositions,
    #[error("section has length {got}, expected {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("evaluator returned {got} components, expected rank {expected}")]
    EvaluatorRank { expected: usize, got: usize },
    #[error("surface cannot be developed by translations")]
    NotDevelopable,
    #[error("eigenvalue group {0} is not available in the reference spectrum")]
    UnknownGroup(usize),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

/// Discrete section: fibers of all vertices, vertex-major.
pub type Section<T> = Vec<Complex<T>>;

/// Which part of the decomposition a piece belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Region {
    /// Dual face of a singular point: the field is constant there.
    Singular(usize),
    /// Dual face of a regular boundary point: linear along the boundary.
    BoundaryStrip,
    /// Half of an interior dual square: affine.
    Interior,
}

#[derive(Clone, Debug)]
struct Node<T: Real> {
    vertex: usize,
    pos: (T, T),
    /// Transport from the node's fiber into the piece's fiber.
    transport: Option<CMat<T>>,
}

#[derive(Clone, Debug)]
struct Piece<T: Real> {
    square: usize,
    cell: usize,
    region: Region,
    tri: [(T, T); 3],
    nodes: Vec<Node<T>>,
}

/// Partition of the surface into triangles, each carrying the recipe that turns vertex values
/// into an affine field. Pieces are ordered by cell, then cell corner (SW, SE, NE, NW),
/// then the half of the quarter square adjacent to the corner's exit side first.
#[derive(Clone, Debug)]
pub struct CellDecomposition<T: Real> {
    n: usize,
    rank: usize,
    num_vertices: usize,
    pieces: Vec<Piece<T>>,
}

fn add<T: Real>(p: (T, T), d: (i64, i64), s: T) -> (T, T) {
    (p.0 + T::lit(d.0 as f64) * s, p.1 + T::lit(d.1 as f64) * s)
}

impl<T: Real> CellDecomposition<T> {
    pub fn new(g: &DiscretizationGraph<T>) -> Result<Self, InterpError> {
        let n = g.n();
        if n < 2 && !g.singular_points().is_empty() {
            return Err(InterpError::TooCoarse(n));
        }
        let h = T::count(n).recip();
        let half = h * T::lit(0.5);
        let lattice = g.lattice();
        let step = |v: usize, side: Side| -> (usize, CMat<T>) {
            let nb = g.neighbor(v, side).expect("glued side");
            // transport from the neighbour into v's fiber
            (nb.vertex, g.oriented_transport(nb.edge, nb.from_tail).adjoint())
        };
        let mut pieces = Vec::with_capacity(g.num_vertices() * 8);
        for v in 0..g.num_vertices() {
            let (square, x, y) = g.embed(v);
            let pc = (x, y);
            for corner in Corner::ALL {
                let q = lattice.cycle_of(v, corner);
                let cycle = &lattice.vertex_cycles()[q];
                let ex = corner.exit_side();
                let en = corner.enter_side();
                let qpt = add(add(pc, ex.outward(), half), en.outward(), half);
                let tri_exit = [pc, add(pc, ex.outward(), half), qpt];
                let tri_enter = [pc, qpt, add(pc, en.outward(), half)];
                let me = Node { vertex: v, pos: pc, transport: None };
                let (region, n_exit, n_enter): (Region, Vec<Node<T>>, Vec<Node<T>>) = if let Some(p) = g.singular_at(q) {
                    (Region::Singular(p), vec![me.clone()], vec![me])
                } else if cycle.boundary {
                    let side = if g.neighbor(v, ex).is_some() { ex } else { en };
                    let (w, t) = step(v, side);
                    let other = Node { vertex: w, pos: add(pc, side.outward(), h), transport: Some(t) };
                    (Region::BoundaryStrip, vec![me.clone(), other.clone()], vec![me, other])
                } else {
                    let k = cycle.corners.iter().position(|&(c, k)| c == v && k == corner).expect("corner in cycle");
                    let m = cycle.corners.len();
                    let min_pos = (0..m).min_by_key(|&i| cycle.corners[i].0).unwrap();
                    let on_diag = (k + m - min_pos).is_multiple_of(2);
                    let (nx, tx) = step(v, ex);
                    let (np, tp) = step(v, en);
                    let next = Node { vertex: nx, pos: add(pc, ex.outward(), h), transport: Some(tx.clone()) };
                    let prev = Node { vertex: np, pos: add(pc, en.outward(), h), transport: Some(tp) };
                    if on_diag {
                        let (ok, nk) = cycle.corners[(k + 1) % m];
                        let (o, to) = step(ok, nk.exit_side());
                        let opp = Node {
                            vertex: o,
                            pos: add(add(pc, ex.outward(), h), en.outward(), h),
                            transport: Some(tx.matmul(&to)),
                        };
                        (Region::Interior, vec![me.clone(), next, opp.clone()], vec![me, prev, opp])
                    } else {
                        (Region::Interior, vec![me.clone(), next.clone(), prev.clone()], vec![me, next, prev])
                    }
                };
                pieces.push(Piece { square, cell: v, region, tri: tri_exit, nodes: n_exit });
                pieces.push(Piece { square, cell: v, region, tri: tri_enter, nodes: n_enter });
            }
        }
        Ok(CellDecomposition { n, rank: g.rank(), num_vertices: g.num_vertices(), pieces })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_pieces(&self) -> usize {
        self.pieces.len()
    }

    pub fn region(&self, piece: usize) -> Region {
        self.pieces[piece].region
    }

    /// Total area of the pieces (equals the number of squares).
    pub fn area(&self) -> T {
        self.pieces.iter().map(|p| tri_area(&p.tri)).sum()
    }

    fn locate(&self, v: usize, x: T, y: T) -> usize {
        let (i, j) = (v % self.n, (v % (self.n * self.n)) / self.n);
        let two_n = T::count(2 * self.n);
        let cx = T::count(2 * i + 1) / two_n;
        let cy = T::count(2 * j + 1) / two_n;
        let (dx, dy) = (x - cx, y - cy);
        let corner = match (dx >= T::zero(), dy >= T::zero()) {
            (false, false) => Corner::SW,
            (true, false) => Corner::SE,
            (true, true) => Corner::NE,
            (false, true) => Corner::NW,
        };
        let along = |s: Side| {
            let (a, b) = s.outward();
            (dx * T::lit(a as f64) + dy * T::lit(b as f64)).abs()
        };
        let t = if along(corner.exit_side()) >= along(corner.enter_side()) { 0 } else { 1 };
        v * 8 + corner.index() * 2 + t
    }
}

fn tri_area<T: Real>(t: &[(T, T); 3]) -> T {
    ((t[1].0 - t[0].0) * (t[2].1 - t[0].1) - (t[2].0 - t[0].0) * (t[1].1 - t[0].1)).abs() * T::lit(0.5)
}

/// Affine field on one piece: value at the piece's first triangle vertex and gradient.
#[derive(Clone, Debug)]
struct Affine<T: Real> {
    origin: (T, T),
    value: Vec<Complex<T>>,
    gx: Vec<Complex<T>>,
    gy: Vec<Complex<T>>,
}

impl<T: Real> Affine<T> {
    fn at(&self, p: (T, T)) -> Vec<Complex<T>> {
        let (dx, dy) = (p.0 - self.origin.0, p.1 - self.origin.1);
        (0..self.value.len()).map(|c| self.value[c] + self.gx[c].scale(dx) + self.gy[c].scale(dy)).collect()
    }
}

/// Piecewise-linear section over a [`CellDecomposition`].
#[derive(Clone, Debug)]
pub struct PiecewiseLinearField<T: Real> {
    decomposition: Arc<CellDecomposition<T>>,
    pieces: Vec<Affine<T>>,
}

/// Builds `L_n` fields on a fixed discretization.
#[derive(Clone, Debug)]
pub struct Linearizer<T: Real> {
    decomposition: Arc<CellDecomposition<T>>,
    averaging: Averaging<T>,
}

/// Transport data for averaging over each `V_n(P)`.
#[derive(Clone, Debug)]
struct Averaging<T: Real> {
    rank: usize,
    /// Per singular point: cells and transports from the first cell's fiber into each cell's fiber.
    groups: Vec<Vec<(usize, CMat<T>)>>,
}

impl<T: Real> Averaging<T> {
    fn new(g: &DiscretizationGraph<T>) -> Result<Self, InterpError> {
        if g.n() < 2 && !g.singular_points().is_empty() {
            return Err(InterpError::TooCoarse(g.n()));
        }
        let lattice = g.lattice();
        let groups = g
            .singular_points()
            .iter()
            .map(|p| {
                let corners = &lattice.vertex_cycles()[p.lattice_point].corners;
                let mut acc: CMat<T> = DMat::identity(g.rank());
                let mut out = vec![(corners[0].0, acc.clone())];
                for w in corners.windows(2) {
                    let (c, k) = w[0];
                    let nb = g.neighbor(c, k.exit_side()).expect("cycle step crosses a glued side");
                    debug_assert_eq!(nb.vertex, w[1].0);
                    acc = g.oriented_transport(nb.edge, nb.from_tail).matmul(&acc);
                    out.push((w[1].0, acc.clone()));
                }
                out
            })
            .collect();
        Ok(Averaging { rank: g.rank(), groups })
    }

    fn apply(&self, f: &[Complex<T>]) -> Section<T> {
        let r = self.rank;
        let mut out = f.to_vec();
        for group in &self.groups {
            let mut mean = vec![Complex::new(T::zero(), T::zero()); r];
            for (v, t) in group {
                let back = t.adjoint().matvec(&f[v * r..(v + 1) * r]);
                for (m, b) in mean.iter_mut().zip(back) {
                    *m += b;
                }
            }
            let inv = T::count(group.len()).recip();
            for m in mean.iter_mut() {
                *m = m.scale(inv);
            }
            for (v, t) in group {
                out[v * r..(v + 1) * r].copy_from_slice(&t.matvec(&mean));
            }
        }
        out
    }
}

fn check_len<T: Real>(g_dim: usize, f: &[Complex<T>]) -> Result<(), InterpError> {
    if f.len() == g_dim {
        Ok(())
    } else {
        Err(InterpError::Dimension { expected: g_dim, got: f.len() })
    }
}

/// `R_n f`: evaluates `f(square, x, y)` (fiber in the square's frame) at every cell centre.
pub fn restrict<T: Real, F>(f: F, g: &DiscretizationGraph<T>) -> Result<Section<T>, InterpError>
where
    F: Fn(usize, T, T) -> Vec<Complex<T>>,
{
    let mut out = Vec::with_capacity(g.dim());
    for v in 0..g.num_vertices() {
        let (s, x, y) = g.embed(v);
        let val = f(s, x, y);
        if val.len() != g.rank() {
            return Err(InterpError::EvaluatorRank { expected: g.rank(), got: val.len() });
        }
        out.extend(val);
    }
    Ok(out)
}

/// `f^avg`: replaces the values on every `V_n(P)` by their transported mean.
pub fn average<T: Real>(f: &[Complex<T>], g: &DiscretizationGraph<T>) -> Result<Section<T>, InterpError> {
    check_len(g.dim(), f)?;
    Ok(Averaging::new(g)?.apply(f))
}

impl<T: Real> Linearizer<T> {
    pub fn new(g: &DiscretizationGraph<T>) -> Result<Self, InterpError> {
        Ok(Linearizer { decomposition: Arc::new(CellDecomposition::new(g)?), averaging: Averaging::new(g)? })
    }

    pub fn decomposition(&self) -> &CellDecomposition<T> {
        &self.decomposition
    }

    /// `L_n(f) = L_n(f^avg)`.
    pub fn linearize(&self, f: &[Complex<T>]) -> Result<PiecewiseLinearField<T>, InterpError> {
        let d = &self.decomposition;
        check_len(d.num_vertices * d.rank, f)?;
        let f = self.averaging.apply(f);
        let r = d.rank;
        let zero = Complex::new(T::zero(), T::zero());
        let pieces = d
            .pieces
            .par_iter()
            .map(|p| {
                let vals: Vec<Vec<Complex<T>>> = p
                    .nodes
                    .iter()
                    .map(|nd| {
                        let raw = &f[nd.vertex * r..(nd.vertex + 1) * r];
                        match &nd.transport {
                            None => raw.to_vec(),
                            Some(t) => t.matvec(raw),
                        }
                    })
                    .collect();
                let p0 = p.nodes[0].pos;
                let (gx, gy) = match p.nodes.len() {
                    1 => (vec![zero; r], vec![zero; r]),
                    2 => {
                        let (ex, ey) = (p.nodes[1].pos.0 - p0.0, p.nodes[1].pos.1 - p0.1);
                        let l2 = ex * ex + ey * ey;
                        let diff: Vec<Complex<T>> = (0..r).map(|c| (vals[1][c] - vals[0][c]).scale(l2.recip())).collect();
                        (diff.iter().map(|d| d.scale(ex)).collect(), diff.iter().map(|d| d.scale(ey)).collect())
                    }
                    _ => {
                        let (ax, ay) = (p.nodes[1].pos.0 - p0.0, p.nodes[1].pos.1 - p0.1);
                        let (bx, by) = (p.nodes[2].pos.0 - p0.0, p.nodes[2].pos.1 - p0.1);
                        let det = ax * by - ay * bx;
                        let mut gx = Vec::with_capacity(r);
                        let mut gy = Vec::with_capacity(r);
                        for c in 0..r {
                            let da = vals[1][c] - vals[0][c];
                            let db = vals[2][c] - vals[0][c];
                            gx.push((da.scale(by) - db.scale(ay)).scale(det.recip()));
                            gy.push((db.scale(ax) - da.scale(bx)).scale(det.recip()));
                        }
                        (gx, gy)
                    }
                };
                let base = Affine { origin: p0, value: vals[0].clone(), gx, gy };
                let origin = p.tri[0];
                Affine { origin, value: base.at(origin), gx: base.gx, gy: base.gy }
            })
            .collect();
        Ok(PiecewiseLinearField { decomposition: self.decomposition.clone(), pieces })
    }
}

/// Convenience wrapper building the decomposition on the fly.
pub fn linearize<T: Real>(f: &[Complex<T>], g: &DiscretizationGraph<T>) -> Result<PiecewiseLinearField<T>, InterpError> {
    Linearizer::new(g)?.linearize(f)
}

/// Symmetric 6-point degree-4 rule on the reference triangle: (barycentric a, b, c; weight).
const QUAD6: [(f64, f64, f64); 2] = [
    (0.445_948_490_915_965, 0.108_103_018_168_070, 0.223_381_589_678_011),
    (0.091_576_213_509_771, 0.816_847_572_980_459, 0.109_951_743_655_322),
];

fn quad_points<T: Real>(t: &[(T, T); 3]) -> Vec<((T, T), T)> {
    let mut out = Vec::with_capacity(6);
    for &(a, b, w) in &QUAD6 {
        let (a, b, w) = (T::lit(a), T::lit(b), T::lit(w));
        for perm in [(b, a, a), (a, b, a), (a, a, b)] {
            let x = t[0].0 * perm.0 + t[1].0 * perm.1 + t[2].0 * perm.2;
            let y = t[0].1 * perm.0 + t[1].1 * perm.1 + t[2].1 * perm.2;
            out.push(((x, y), w));
        }
    }
    out
}

impl<T: Real> PiecewiseLinearField<T> {
    pub fn decomposition(&self) -> &CellDecomposition<T> {
        &self.decomposition
    }

    fn same_decomposition(&self, other: &Self) -> Result<(), InterpError> {
        let (a, b) = (&self.decomposition, &other.decomposition);
        if Arc::ptr_eq(a, b) || (a.n == b.n && a.pieces.len() == b.pieces.len() && a.rank == b.rank) {
            Ok(())
        } else {
            Err(InterpError::MismatchedDecompositions)
        }
    }

    /// Value at chart point `(x, y)` of `square`, in that square's frame.
    pub fn evaluate(&self, square: usize, x: T, y: T) -> Vec<Complex<T>> {
        let d = &self.decomposition;
        let n = d.n;
        let clampi = |t: T| -> usize { (t * T::count(n)).floor().max(T::zero()).to_usize().unwrap_or(0).min(n - 1) };
        let v = square * n * n + clampi(y) * n + clampi(x);
        self.pieces[d.locate(v, x, y)].at((x, y))
    }

    /// Value on a specific piece (used to test continuity across piece boundaries).
    pub fn evaluate_on_piece(&self, piece: usize, x: T, y: T) -> Vec<Complex<T>> {
        self.pieces[piece].at((x, y))
    }

    /// Cell whose fiber frame the piece uses.
    pub fn piece_cell(&self, piece: usize) -> usize {
        self.decomposition.pieces[piece].cell
    }

    /// Triangle vertices and square of a piece.
    pub fn piece_geometry(&self, piece: usize) -> (usize, [(T, T); 3]) {
        let p = &self.decomposition.pieces[piece];
        (p.square, p.tri)
    }

    /// `∫ ⟨∇u, ∇v⟩`, exact per piece.
    pub fn dirichlet_energy(&self, other: &Self) -> Result<Complex<T>, InterpError> {
        self.same_decomposition(other)?;
        Ok(self
            .decomposition
            .pieces
            .iter()
            .zip(self.pieces.iter().zip(&other.pieces))
            .map(|(p, (u, v))| (dot(&u.gx, &v.gx) + dot(&u.gy, &v.gy)).scale(tri_area(&p.tri)))
            .sum())
    }

    /// `∫ φ ⟨u, v⟩`: closed form when `weight` is `None`, 6-point rule otherwise.
    pub fn l2_pairing(&self, other: &Self, weight: Option<&(dyn Fn(usize, T, T) -> T + Sync)>) -> Result<Complex<T>, InterpError> {
        self.same_decomposition(other)?;
        let d = &self.decomposition;
        let total: Complex<T> = d
            .pieces
            .par_iter()
            .zip(self.pieces.par_iter().zip(other.pieces.par_iter()))
            .map(|(p, (u, v))| {
                let area = tri_area(&p.tri);
                match weight {
                    None => {
                        let uv: Vec<Vec<Complex<T>>> = p.tri.iter().map(|&q| u.at(q)).collect();
                        let vv: Vec<Vec<Complex<T>>> = p.tri.iter().map(|&q| v.at(q)).collect();
                        let mut s = Complex::new(T::zero(), T::zero());
                        for c in 0..uv[0].len() {
                            let su: Complex<T> = uv.iter().map(|x| x[c]).sum();
                            let sv: Complex<T> = vv.iter().map(|x| x[c]).sum();
                            let diag: Complex<T> = uv.iter().zip(&vv).map(|(a, b)| a[c] * b[c].conj()).sum();
                            s += diag + su * sv.conj();
                        }
                        s.scale(area / T::lit(12.0))
                    }
                    Some(w) => quad_points(&p.tri)
                        .into_iter()
                        .map(|(q, wq)| dot(&u.at(q), &v.at(q)).scale(wq * w(p.square, q.0, q.1)))
                        .sum::<Complex<T>>()
                        .scale(area),
                }
            })
            .collect::<Vec<_>>()
            .into_iter()
            .sum();
        Ok(total)
    }

    /// `∫ |u − F|²` by the 6-point rule, `F(square, x, y)` given in the square's frame.
    pub fn l2_distance_sqr<F>(&self, f: F) -> T
    where
        F: Fn(usize, T, T) -> Vec<Complex<T>> + Sync,
    {
        let d = &self.decomposition;
        d.pieces
            .par_iter()
            .zip(self.pieces.par_iter())
            .map(|(p, u)| {
                quad_points(&p.tri)
                    .into_iter()
                    .map(|(q, wq)| {
                        let a = u.at(q);
                        let b = f(p.square, q.0, q.1);
                        a.iter().zip(&b).map(|(x, y)| (*x - *y).norm_sqr()).sum::<T>() * wq
                    })
                    .sum::<T>()
                    * tri_area(&p.tri)
            })
            .collect::<Vec<T>>()
            .into_iter()
            .sum()
    }

    /// CSV `square,x,y,re_1,im_1,…` sampled at the given chart points.
    pub fn write_samples<W: Write>(&self, points: &[(usize, T, T)], mut w: W) -> io::Result<()> {
        write!(w, "square,x,y")?;
        for c in 1..=self.decomposition.rank {
            write!(w, ",re_{c},im_{c}")?;
        }
        writeln!(w)?;
        for &(s, x, y) in points {
            write!(w, "{},{:.12e},{:.12e}", s, x.as_f64(), y.as_f64())?;
            for z in self.evaluate(s, x, y) {
                write!(w, ",{:.12e},{:.12e}", z.re.as_f64(), z.im.as_f64())?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

/// Convenience forms of the field integrals.
pub fn dirichlet_energy<T: Real>(u: &PiecewiseLinearField<T>, v: &PiecewiseLinearField<T>) -> Result<Complex<T>, InterpError> {
    u.dirichlet_energy(v)
}

pub fn l2_pairing<T: Real>(
    u: &PiecewiseLinearField<T>,
    v: &PiecewiseLinearField<T>,
    weight: Option<&(dyn Fn(usize, T, T) -> T + Sync)>,
) -> Result<Complex<T>, InterpError> {
    u.l2_pairing(v, weight)
}

/// Vertex classes for consistency residuals.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum VertexClass {
    Interior,
    Edge,
    CornerAdjacent,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConsistencyReport {
    pub n: usize,
    pub interior: f64,
    pub edge: f64,
    pub corner_adjacent: f64,
    /// Maximum over vertices with a missing neighbour (edge and corner cells of the boundary).
    pub boundary_adjacent: f64,
    pub max: f64,
    pub per_vertex: Vec<(usize, VertexClass, f64)>,
}

/// `|n² (Δ R_n f)(v) − (−Δ_Ψ f)(v)|` per vertex, maximized per class.
pub fn consistency_residual<T: Real, F, L>(
    f: F,
    neg_laplacian: L,
    g: &DiscretizationGraph<T>,
    op: &SparseHermitianOperator<T>,
) -> Result<ConsistencyReport, InterpError>
where
    F: Fn(usize, T, T) -> Vec<Complex<T>>,
    L: Fn(usize, T, T) -> Vec<Complex<T>>,
{
    let rf = restrict(&f, g)?;
    let lf = restrict(&neg_laplacian, g)?;
    let applied = op.apply(&rf);
    let n2 = T::count(g.n() * g.n());
    let r = g.rank();
    let mut rep = ConsistencyReport {
        n: g.n(),
        interior: 0.0,
        edge: 0.0,
        corner_adjacent: 0.0,
        boundary_adjacent: 0.0,
        max: 0.0,
        per_vertex: Vec::with_capacity(g.num_vertices()),
    };
    for v in 0..g.num_vertices() {
        let res = (0..r)
            .map(|c| (applied[v * r + c].scale(n2) - lf[v * r + c]).norm_sqr())
            .sum::<T>()
            .sqrt()
            .as_f64();
        let class = if g.is_cone_neighbor(v) {
            VertexClass::CornerAdjacent
        } else if g.degree(v) < 4 {
            VertexClass::Edge
        } else {
            VertexClass::Interior
        };
        let slot = match class {
            VertexClass::Interior => &mut rep.interior,
            VertexClass::Edge => &mut rep.edge,
            VertexClass::CornerAdjacent => &mut rep.corner_adjacent,
        };
        *slot = slot.max(res);
        if g.degree(v) < 4 {
            rep.boundary_adjacent = rep.boundary_adjacent.max(res);
        }
        rep.max = rep.max.max(res);
        rep.per_vertex.push((v, class, res));
    }
    Ok(rep)
}

/// Continuum reference eigenfunction expressed in per-square frames.
pub struct ReferenceField<'a> {
    spectrum: &'a ReferenceSpectrum,
    layout: Vec<((i64, i64), Complex<f64>)>,
}

impl<'a> ReferenceField<'a> {
    /// Uses the translation development of a rank-one bundle to place squares and frames.
    pub fn new<T: Real>(spectrum: &'a ReferenceSpectrum, surface: &SquareTiledSurface, bundle: &FlatUnitaryBundle<T>) -> Result<Self, InterpError> {
        if bundle.rank() != 1 {
            return Err(InterpError::EvaluatorRank { expected: 1, got: bundle.rank() });
        }
        let dev = bundle.develop(surface).ok_or(InterpError::NotDevelopable)?;
        let layout = dev
            .into_iter()
            .map(|(o, f)| (o, Complex::new(f[(0, 0)].re.as_f64(), f[(0, 0)].im.as_f64())))
            .collect();
        Ok(ReferenceField { spectrum, layout })
    }

    /// Mode `i` (0-based, with multiplicity) at a chart point.
    pub fn value(&self, i: usize, square: usize, x: f64, y: f64) -> Complex<f64> {
        let ((ox, oy), frame) = self.layout[square];
        frame * self.spectrum.eigenfunction(&self.spectrum.modes[i], ox as f64 + x, oy as f64 + y)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct EigvecRow {
    pub n: usize,
    /// Largest `‖L_n(π R_n f_j) − f_j‖` over the group.
    pub projection_error: f64,
    /// Largest column error after optimal unitary alignment of the discrete eigenvectors.
    pub aligned_error: f64,
    pub separated: bool,
    pub flagged: bool,
}

fn to_t<T: Real>(z: Complex<f64>) -> Complex<T> {
    Complex::new(T::lit(z.re), T::lit(z.im))
}

/// Unitary polar factor `M (MᴴM)^{-1/2}`.
fn polar_factor(m: &DMat<Complex<f64>>) -> DMat<Complex<f64>> {
    let mhm = m.adjoint().matmul(m);
    let k = mhm.rows();
    let e = eigh(&mhm, k);
    let d = DMat::from_fn(k, k, |i, j| if i == j { Complex::new(e.values[i].max(1e-300).sqrt().recip(), 0.0) } else { Complex::new(0.0, 0.0) });
    m.matmul(&e.vectors.matmul(&d).matmul(&e.vectors.adjoint()))
}

/// Convergence of the discrete eigenspace of reference group `group` (1-based).
pub fn eigenvector_convergence<T: Real>(
    surface: &SquareTiledSurface,
    bundle: &FlatUnitaryBundle<T>,
    reference: &ReferenceSpectrum,
    group: usize,
    ns: &[usize],
    opts: &EigenOptions<T>,
) -> Result<Vec<EigvecRow>, InterpError> {
    let groups = reference.groups();
    if group == 0 || group >= groups.len() {
        // the last group may be truncated, so it cannot be used for separation checks
        return Err(InterpError::UnknownGroup(group));
    }
    let (start, mult) = groups[group - 1];
    let lam = reference.value(start);
    let lo_gap = if start > 0 { lam - reference.value(start - 1) } else { f64::INFINITY };
    let hi_gap = reference.value(start + mult) - lam;
    let window = 0.5 * lo_gap.min(hi_gap);
    let field = ReferenceField::new(reference, surface, bundle)?;
    let field = &field;
    let k = start + mult + 1;
    let rows = ns
        .par_iter()
        .map(|&n| -> Result<EigvecRow, InterpError> {
            let g = build_graph(surface, bundle, n).map_err(SpectralError::from)?;
            let op = assemble_laplacian(&g);
            let o = EigenOptions { k, ..opts.clone() };
            let pairs = match lowest_eigenpairs_with(op.matrix(), &o) {
                Ok(p) => p,
                Err(_) => {
                    return Ok(EigvecRow { n, projection_error: f64::NAN, aligned_error: f64::NAN, separated: false, flagged: true })
                }
            };
            let n2 = (n * n) as f64;
            let resc: Vec<f64> = pairs.values.iter().map(|v| v.as_f64() * n2).collect();
            let inside = (start..start + mult).all(|i| (resc[i] - lam).abs() < window);
            let outside = (start == 0 || (resc[start - 1] - lam).abs() >= window) && (resc[start + mult] - lam).abs() >= window;
            let separated = inside && outside;
            let lin = Linearizer::new(&g)?;
            let xs: Vec<&Vec<Complex<T>>> = (start..start + mult).map(|i| &pairs.vectors[i]).collect();
            let target = |j: usize| move |s: usize, x: T, y: T| vec![to_t::<T>(field.value(start + j, s, x.as_f64(), y.as_f64()))];
            let mut projection_error = 0.0f64;
            let mut overlaps = DMat::zeros(mult, mult);
            for j in 0..mult {
                let rf = restrict(target(j), &g)?;
                let mut proj = vec![Complex::new(T::zero(), T::zero()); g.dim()];
                for x in &xs {
                    let c = dot(&rf, x);
                    for (p, &xi) in proj.iter_mut().zip(x.iter()) {
                        *p += c * xi;
                    }
                }
                let u = lin.linearize(&proj)?;
                projection_error = projection_error.max(u.l2_distance_sqr(target(j)).as_f64().sqrt());
                for (l, x) in xs.iter().enumerate() {
                    // ⟨f_j, L_n(n x_l)⟩ approximated through the restriction: exact alignment
                    // is computed from the linearized fields below.
                    let scaled: Vec<Complex<T>> = x.iter().map(|z| z.scale(T::count(n))).collect();
                    let ul = lin.linearize(&scaled)?;
                    let m = ul.pairing_with(target(j));
                    overlaps[(l, j)] = Complex::new(m.re.as_f64(), m.im.as_f64());
                }
            }
            let w = polar_factor(&overlaps);
            let mut aligned_error = 0.0f64;
            for j in 0..mult {
                let mut y = vec![Complex::new(T::zero(), T::zero()); g.dim()];
                for (l, x) in xs.iter().enumerate() {
                    let c = to_t::<T>(w[(l, j)]).scale(T::count(n));
                    for (yi, &xi) in y.iter_mut().zip(x.iter()) {
                        *yi += c * xi;
                    }
                }
                let u = lin.linearize(&y)?;
                aligned_error = aligned_error.max(u.l2_distance_sqr(target(j)).as_f64().sqrt());
            }
            Ok(EigvecRow { n, projection_error, aligned_error, separated, flagged: !separated })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(rows)
}

impl<T: Real> PiecewiseLinearField<T> {
    /// `∫ ⟨F, u⟩ = ∫ Σ_c F_c conj(u_c)` by the 6-point rule.
    fn pairing_with<F>(&self, f: F) -> Complex<T>
    where
        F: Fn(usize, T, T) -> Vec<Complex<T>> + Sync,
    {
        let d = &self.decomposition;
        d.pieces
            .par_iter()
            .zip(self.pieces.par_iter())
            .map(|(p, u)| {
                quad_points(&p.tri)
                    .into_iter()
                    .map(|(q, wq)| dot(&f(p.square, q.0, q.1), &u.at(q)).scale(wq))
                    .sum::<Complex<T>>()
                    .scale(tri_area(&p.tri))
            })
            .collect::<Vec<_>>()
            .into_iter()
            .sum()
    }
}
