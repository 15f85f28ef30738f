//! The nearest-neighbour cell graph of the `n`-fold subdivided surface, with edge transports.

use std::io::{self, Write};

use thiserror::Error;

use crate::bundle::{validate_cone_monodromy, BundleError, CMat, FlatUnitaryBundle};
use crate::linalg::DMat;
use crate::scalar::Real;
use crate::surface::{Corner, Isometry, Seam, Side, SideRef, SquareTiledSurface, SurfaceError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiscretizeError {
    #[error("subdivision parameter must be positive")]
    ZeroSubdivision,
    #[error("bundle does not match the surface: {0}")]
    Bundle(#[from] BundleError),
    #[error("refined surface is invalid: {0}")]
    Surface(#[from] SurfaceError),
    #[error("cone neighbour sets need n >= 2 (got n = {0})")]
    TooCoarse(usize),
    #[error("unknown singular point {0}")]
    UnknownSingularPoint(usize),
}

/// Graph edge. The transport maps the tail fiber to the head fiber: the identity for
/// edges inside a square, the seam matrix for edges crossing a seam.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Edge {
    pub tail: usize,
    pub head: usize,
    pub seam: Option<usize>,
}

/// A singular point of the surface together with its incident cells `V_n(P)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SingularPoint {
    /// Vertex cycle id on the original surface.
    pub cycle: usize,
    /// Angle in units of π/2.
    pub angle_units: usize,
    pub boundary: bool,
    /// Incident cells in counterclockwise order.
    pub cells: Vec<usize>,
    /// Vertex cycle id on the subdivided surface.
    pub lattice_point: usize,
}

/// Neighbour across a cell side.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Neighbor {
    pub vertex: usize,
    pub edge: usize,
    /// Whether the starting cell is the edge's tail.
    pub from_tail: bool,
    /// Side of the neighbour cell that is crossed.
    pub entry_side: Side,
}

#[derive(Clone, Debug)]
pub struct DiscretizationGraph<T: Real> {
    n: usize,
    num_squares: usize,
    rank: usize,
    edges: Vec<Edge>,
    identity: CMat<T>,
    transports: Vec<CMat<T>>,
    lattice: SquareTiledSurface,
    side_edge: Vec<[Option<(usize, bool)>; 4]>,
    singular: Vec<SingularPoint>,
    singular_of_lattice: Vec<Option<usize>>,
}

/// Cell position on side `d` at parameter `t` (x for N/S, y for E/W).
fn side_cell(n: usize, d: Side, t: usize) -> (usize, usize) {
    match d {
        Side::S => (t, 0),
        Side::N => (t, n - 1),
        Side::W => (0, t),
        Side::E => (n - 1, t),
    }
}

fn corner_cell(n: usize, c: Corner) -> (usize, usize) {
    let (sx, sy) = c.offset();
    ((n - 1) * sx as usize, (n - 1) * sy as usize)
}

pub fn build_graph<T: Real>(
    surface: &SquareTiledSurface,
    bundle: &FlatUnitaryBundle<T>,
    n: usize,
) -> Result<DiscretizationGraph<T>, DiscretizeError> {
    if n == 0 {
        return Err(DiscretizeError::ZeroSubdivision);
    }
    validate_cone_monodromy(surface, bundle)?;
    let nn = n * n;
    let vid = |s: usize, i: usize, j: usize| s * nn + j * n + i;
    let mut seams = Vec::new();
    let mut origin = Vec::new();
    for s in 0..surface.num_squares() {
        for j in 0..n {
            for i in 0..n {
                if i + 1 < n {
                    seams.push(Seam {
                        a: SideRef::new(vid(s, i, j), Side::E),
                        b: SideRef::new(vid(s, i + 1, j), Side::W),
                        iso: Isometry::Translation,
                    });
                    origin.push(None);
                }
                if j + 1 < n {
                    seams.push(Seam {
                        a: SideRef::new(vid(s, i, j), Side::N),
                        b: SideRef::new(vid(s, i, j + 1), Side::S),
                        iso: Isometry::Translation,
                    });
                    origin.push(None);
                }
            }
        }
    }
    for (id, seam) in surface.seams().iter().enumerate() {
        for t in 0..n {
            let t2 = match seam.iso {
                Isometry::Translation => t,
                Isometry::HalfTurn => n - 1 - t,
            };
            let (ia, ja) = side_cell(n, seam.a.side, t);
            let (ib, jb) = side_cell(n, seam.b.side, t2);
            seams.push(Seam {
                a: SideRef::new(vid(seam.a.square, ia, ja), seam.a.side),
                b: SideRef::new(vid(seam.b.square, ib, jb), seam.b.side),
                iso: seam.iso,
            });
            origin.push(Some(id));
        }
    }
    let edges: Vec<Edge> = seams
        .iter()
        .zip(&origin)
        .map(|(s, &o)| Edge { tail: s.a.square, head: s.b.square, seam: o })
        .collect();
    let num_vertices = surface.num_squares() * nn;
    let mut side_edge = vec![[None; 4]; num_vertices];
    for (e, s) in seams.iter().enumerate() {
        side_edge[s.a.square][s.a.side.index()] = Some((e, true));
        side_edge[s.b.square][s.b.side.index()] = Some((e, false));
    }
    let lattice = SquareTiledSurface::new(num_vertices, seams)?;
    let mut singular = Vec::new();
    let mut singular_of_lattice = vec![None; lattice.vertex_cycles().len()];
    for &cycle in surface.singular_points() {
        let vc = &surface.vertex_cycles()[cycle];
        let (sq, corner) = vc.corners[0];
        let (i, j) = corner_cell(n, corner);
        let lp = lattice.cycle_of(vid(sq, i, j), corner);
        let cells = lattice.vertex_cycles()[lp].corners.iter().map(|&(c, _)| c).collect();
        singular_of_lattice[lp] = Some(singular.len());
        singular.push(SingularPoint {
            cycle,
            angle_units: vc.angle_units(),
            boundary: vc.boundary,
            cells,
            lattice_point: lp,
        });
    }
    Ok(DiscretizationGraph {
        n,
        num_squares: surface.num_squares(),
        rank: bundle.rank(),
        edges,
        identity: DMat::identity(bundle.rank()),
        transports: bundle.transports().to_vec(),
        lattice,
        side_edge,
        singular,
        singular_of_lattice,
    })
}

impl<T: Real> DiscretizationGraph<T> {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn num_squares(&self) -> usize {
        self.num_squares
    }

    pub fn num_vertices(&self) -> usize {
        self.num_squares * self.n * self.n
    }

    /// Length of a flattened section: `|V| · r`.
    pub fn dim(&self) -> usize {
        self.num_vertices() * self.rank
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Tail-to-head transport of edge `e`.
    pub fn transport(&self, e: usize) -> &CMat<T> {
        match self.edges[e].seam {
            None => &self.identity,
            Some(s) => &self.transports[s],
        }
    }

    /// Whether edge `e` carries a non-identity transport slot (crosses a seam).
    pub fn crosses_seam(&self, e: usize) -> bool {
        self.edges[e].seam.is_some()
    }

    /// Transport from `v`'s fiber into the fiber across the edge, oriented by `from_tail`.
    pub fn oriented_transport(&self, e: usize, from_tail: bool) -> CMat<T> {
        if from_tail {
            self.transport(e).clone()
        } else {
            self.transport(e).adjoint()
        }
    }

    /// `(square, i, j)` of a vertex.
    pub fn cell(&self, v: usize) -> (usize, usize, usize) {
        let nn = self.n * self.n;
        (v / nn, v % self.n, (v % nn) / self.n)
    }

    pub fn vertex(&self, square: usize, i: usize, j: usize) -> usize {
        square * self.n * self.n + j * self.n + i
    }

    /// Cell centre in its square's chart.
    pub fn embed(&self, v: usize) -> (usize, T, T) {
        let (s, i, j) = self.cell(v);
        let two_n = T::count(2 * self.n);
        (s, T::count(2 * i + 1) / two_n, T::count(2 * j + 1) / two_n)
    }

    /// Neighbour across a side of cell `v`, if that side is not free.
    pub fn neighbor(&self, v: usize, side: Side) -> Option<Neighbor> {
        let (edge, from_tail) = self.side_edge[v][side.index()]?;
        let g = self.lattice.gluing(v, side)?;
        Some(Neighbor { vertex: g.other.square, edge, from_tail, entry_side: g.other.side })
    }

    /// Degree counting multiplicity (a self-loop counts twice).
    pub fn degree(&self, v: usize) -> usize {
        self.side_edge[v].iter().flatten().count()
    }

    /// The subdivided surface: its squares are the cells, its vertex cycles the lattice points.
    pub fn lattice(&self) -> &SquareTiledSurface {
        &self.lattice
    }

    pub fn singular_points(&self) -> &[SingularPoint] {
        &self.singular
    }

    /// Singular point sitting at a lattice point, if any.
    pub fn singular_at(&self, lattice_point: usize) -> Option<usize> {
        self.singular_of_lattice[lattice_point]
    }

    /// `V_n(P)`: the cells incident to singular point `p`.
    pub fn cone_neighbors(&self, p: usize) -> Result<&[usize], DiscretizeError> {
        if self.n < 2 {
            return Err(DiscretizeError::TooCoarse(self.n));
        }
        self.singular.get(p).map(|s| s.cells.as_slice()).ok_or(DiscretizeError::UnknownSingularPoint(p))
    }

    /// Whether `v` belongs to some `V_n(P)`.
    pub fn is_cone_neighbor(&self, v: usize) -> bool {
        let (s, i, j) = self.cell(v);
        Corner::ALL.iter().any(|&c| {
            let (sx, sy) = c.offset();
            let at_corner = i == (self.n - 1) * sx as usize && j == (self.n - 1) * sy as usize;
            at_corner && self.singular_of_lattice[self.lattice.cycle_of(self.vertex(s, i, j), c)].is_some()
        })
    }

    /// Number of unordered vertex pairs joined by two parallel edges.
    pub fn doubled_edge_count(&self) -> usize {
        let mut pairs: Vec<(usize, usize)> = self
            .edges
            .iter()
            .filter(|e| e.tail != e.head)
            .map(|e| (e.tail.min(e.head), e.tail.max(e.head)))
            .collect();
        pairs.sort_unstable();
        let mut count = 0;
        let mut k = 0;
        while k < pairs.len() {
            let mut m = k + 1;
            while m < pairs.len() && pairs[m] == pairs[k] {
                m += 1;
            }
            if m - k >= 2 {
                count += 1;
            }
            k = m;
        }
        count
    }

    pub fn is_connected(&self) -> bool {
        let nv = self.num_vertices();
        let mut parent: Vec<usize> = (0..nv).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for e in &self.edges {
            let (a, b) = (find(&mut parent, e.tail), find(&mut parent, e.head));
            parent[a] = b;
        }
        let root = find(&mut parent, 0);
        (0..nv).all(|v| find(&mut parent, v) == root)
    }

    /// Edge list CSV `tail,head,seam_id,transport entries (re,im row-major)`; internal edges have seam id -1.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        write!(w, "tail,head,seam_id")?;
        for a in 0..self.rank {
            for b in 0..self.rank {
                write!(w, ",re_{a}{b},im_{a}{b}")?;
            }
        }
        writeln!(w)?;
        for (k, e) in self.edges.iter().enumerate() {
            let seam = e.seam.map_or(-1, |s| s as i64);
            write!(w, "{},{},{}", e.tail, e.head, seam)?;
            for z in self.transport(k).as_slice() {
                write!(w, ",{:.12e},{:.12e}", z.re.as_f64(), z.im.as_f64())?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}
