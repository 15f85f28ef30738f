//! Brute-force check that the determinant of a rank-one connection Laplacian equals the
//! monodromy-weighted sum over cycle-rooted spanning forests.

use std::fmt::Write as _;

use num_complex::Complex;
use rand::Rng;
use thiserror::Error;

use crate::linalg::DMat;
use crate::scalar::{cis, Real};
use crate::surface::keyed_lines;

/// Largest vertex count accepted by the exhaustive enumeration.
pub const MAX_VERTICES: usize = 10;
/// Largest edge count accepted by the exhaustive enumeration.
pub const MAX_EDGES: usize = 12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CrsfError {
    #[error("line {line}: {msg}")]
    Malformed { line: usize, msg: String },
    #[error("graph has {0} vertices, at most {MAX_VERTICES} are supported")]
    TooManyVertices(usize),
    #[error("graph has {0} edges, at most {MAX_EDGES} are supported")]
    TooManyEdges(usize),
    #[error("edge {edge} references vertex {vertex} outside 0..{count}")]
    BadVertex { edge: usize, vertex: usize, count: usize },
    #[error("edge {edge} weight has modulus {modulus}, expected 1")]
    NotUnitary { edge: usize, modulus: f64 },
}

/// Edge `tail → head`; the weight transports the tail fiber to the head fiber.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeightedEdge<T> {
    pub tail: usize,
    pub head: usize,
    pub weight: Complex<T>,
}

/// Small multigraph with unit-modulus edge weights (self-loops and parallel edges allowed).
#[derive(Clone, Debug, PartialEq)]
pub struct TinyConnectionGraph<T> {
    num_vertices: usize,
    edges: Vec<WeightedEdge<T>>,
}

impl<T: Real> TinyConnectionGraph<T> {
    pub fn new(num_vertices: usize, edges: Vec<WeightedEdge<T>>) -> Result<Self, CrsfError> {
        if num_vertices > MAX_VERTICES {
            return Err(CrsfError::TooManyVertices(num_vertices));
        }
        if edges.len() > MAX_EDGES {
            return Err(CrsfError::TooManyEdges(edges.len()));
        }
        for (i, e) in edges.iter().enumerate() {
            for v in [e.tail, e.head] {
                if v >= num_vertices {
                    return Err(CrsfError::BadVertex { edge: i, vertex: v, count: num_vertices });
                }
            }
            let m = e.weight.norm();
            if (m - T::one()).abs() > T::lit(1e-12) {
                return Err(CrsfError::NotUnitary { edge: i, modulus: m.as_f64() });
            }
        }
        Ok(TinyConnectionGraph { num_vertices, edges })
    }

    /// Edges given as `(tail, head, phase)`.
    pub fn from_phases(num_vertices: usize, edges: &[(usize, usize, T)]) -> Result<Self, CrsfError> {
        Self::new(num_vertices, edges.iter().map(|&(tail, head, t)| WeightedEdge { tail, head, weight: cis(t) }).collect())
    }

    /// Uniformly random graph with the given size and phases in `[0, 2π)`.
    pub fn random<R: Rng>(rng: &mut R, num_vertices: usize, num_edges: usize) -> Result<Self, CrsfError> {
        let edges: Vec<(usize, usize, T)> = (0..num_edges)
            .map(|_| {
                let t = rng.gen_range(0..num_vertices);
                let h = rng.gen_range(0..num_vertices);
                (t, h, T::lit(rng.gen_range(0.0..std::f64::consts::TAU)))
            })
            .collect();
        Self::from_phases(num_vertices, &edges)
    }

    pub fn num_vertices(&self) -> usize {
        self.num_vertices
    }

    pub fn edges(&self) -> &[WeightedEdge<T>] {
        &self.edges
    }

    /// Hermitian Laplacian: per edge `(h,h) += 1, (t,t) += 1, (h,t) −= w, (t,h) −= w̄`.
    pub fn laplacian(&self) -> DMat<Complex<T>> {
        let n = self.num_vertices;
        let mut m = DMat::zeros(n, n);
        let one = Complex::new(T::one(), T::zero());
        for e in &self.edges {
            m[(e.head, e.head)] += one;
            m[(e.tail, e.tail)] += one;
            m[(e.head, e.tail)] -= e.weight;
            m[(e.tail, e.head)] -= e.weight.conj();
        }
        m
    }

    /// Gauge transform: multiplies the fiber at `v` by `e^{iθ}`.
    pub fn gauge(&self, v: usize, theta: T) -> Self {
        let g = cis::<T>(theta);
        let edges = self
            .edges
            .iter()
            .map(|e| {
                let mut w = e.weight;
                if e.head == v {
                    w *= g;
                }
                if e.tail == v {
                    w *= g.conj();
                }
                WeightedEdge { weight: w, ..*e }
            })
            .collect();
        TinyConnectionGraph { num_vertices: self.num_vertices, edges }
    }

    /// Text form: `vertices: N` then `edge: tail head phase` per edge.
    pub fn to_text(&self) -> String {
        let mut s = format!("vertices: {}\n", self.num_vertices);
        for e in &self.edges {
            let _ = writeln!(s, "edge: {} {} {:.17e}", e.tail, e.head, e.weight.arg().as_f64());
        }
        s
    }
}

pub fn parse_graph<T: Real>(text: &str) -> Result<TinyConnectionGraph<T>, CrsfError> {
    let mut vertices = None;
    let mut edges = Vec::new();
    for (line, key, value) in keyed_lines(text) {
        let bad = |msg: &str| CrsfError::Malformed { line, msg: msg.to_string() };
        match key {
            "vertices" => vertices = Some(value.parse::<usize>().map_err(|_| bad("vertex count must be an integer"))?),
            "edge" => {
                let toks: Vec<&str> = value.split_whitespace().collect();
                if toks.len() != 3 {
                    return Err(bad("expected `edge: tail head phase`"));
                }
                let t = toks[0].parse::<usize>().map_err(|_| bad("bad tail"))?;
                let h = toks[1].parse::<usize>().map_err(|_| bad("bad head"))?;
                let p = toks[2].parse::<f64>().map_err(|_| bad("bad phase"))?;
                edges.push((t, h, T::lit(p)));
            }
            _ => return Err(bad(&format!("unknown key `{key}`"))),
        }
    }
    let n = vertices.ok_or(CrsfError::Malformed { line: 0, msg: "missing `vertices:`".into() })?;
    TinyConnectionGraph::from_phases(n, &edges)
}

/// Determinant of the Laplacian (real for Hermitian matrices; the imaginary part is dropped).
pub fn determinant<T: Real>(g: &TinyConnectionGraph<T>) -> T {
    determinant_complex(g).re
}

pub fn determinant_complex<T: Real>(g: &TinyConnectionGraph<T>) -> Complex<T> {
    if g.num_vertices == 0 {
        return Complex::new(T::one(), T::zero());
    }
    g.laplacian().determinant()
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Monodromy of the unique cycle of a unicyclic edge set, traversed in some direction.
fn cycle_monodromy<T: Real>(num_vertices: usize, edges: &[WeightedEdge<T>]) -> Vec<Complex<T>> {
    let mut alive = vec![true; edges.len()];
    let mut deg = vec![0usize; num_vertices];
    for e in edges {
        deg[e.tail] += 1;
        deg[e.head] += 1;
    }
    // strip leaves until only cycles remain
    loop {
        let mut changed = false;
        for (i, e) in edges.iter().enumerate() {
            if alive[i] && e.tail != e.head && (deg[e.tail] == 1 || deg[e.head] == 1) {
                alive[i] = false;
                deg[e.tail] -= 1;
                deg[e.head] -= 1;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let mut out = Vec::new();
    let mut used = vec![false; edges.len()];
    for start in 0..edges.len() {
        if !alive[start] || used[start] {
            continue;
        }
        used[start] = true;
        let origin = edges[start].tail;
        let mut w = edges[start].weight;
        let mut at = edges[start].head;
        while at != origin {
            let (i, e) = edges
                .iter()
                .enumerate()
                .find(|(i, e)| alive[*i] && !used[*i] && (e.tail == at || e.head == at))
                .expect("cycle continues");
            used[i] = true;
            if e.tail == at {
                w *= e.weight;
                at = e.head;
            } else {
                w *= e.weight.conj();
                at = e.tail;
            }
        }
        out.push(w);
    }
    out
}

/// Whether the edge subset is a cycle-rooted spanning forest: every component has as many
/// edges as vertices.
fn is_crsf<T>(num_vertices: usize, edges: &[&WeightedEdge<T>]) -> bool {
    let mut parent: Vec<usize> = (0..num_vertices).collect();
    for e in edges {
        let (a, b) = (find(&mut parent, e.tail), find(&mut parent, e.head));
        parent[a] = b;
    }
    let mut verts = vec![0usize; num_vertices];
    let mut edge_count = vec![0usize; num_vertices];
    for v in 0..num_vertices {
        let r = find(&mut parent, v);
        verts[r] += 1;
    }
    for e in edges {
        let r = find(&mut parent, e.tail);
        edge_count[r] += 1;
    }
    (0..num_vertices).all(|r| verts[r] == edge_count[r])
}

/// `Σ_F Π_{γ ∈ F} (2 − w(γ) − w(γ)⁻¹)` over cycle-rooted spanning forests, by enumeration.
pub fn crsf_sum<T: Real>(g: &TinyConnectionGraph<T>) -> T {
    let n = g.num_vertices;
    let m = g.edges.len();
    let mut total = T::zero();
    for mask in 0u32..(1u32 << m) {
        if mask.count_ones() as usize != n {
            continue;
        }
        let subset: Vec<&WeightedEdge<T>> = (0..m).filter(|i| mask >> i & 1 == 1).map(|i| &g.edges[i]).collect();
        if !is_crsf(n, &subset) {
            continue;
        }
        let owned: Vec<WeightedEdge<T>> = subset.into_iter().copied().collect();
        let weight = cycle_monodromy(n, &owned)
            .into_iter()
            .map(|w| T::lit(2.0) - T::lit(2.0) * w.re)
            .fold(T::one(), |a, b| a * b);
        total += weight;
    }
    total
}

/// Number of cycle-rooted spanning forests (unweighted).
pub fn crsf_count<T: Real>(g: &TinyConnectionGraph<T>) -> usize {
    let n = g.num_vertices;
    let m = g.edges.len();
    (0u32..(1u32 << m))
        .filter(|mask| mask.count_ones() as usize == n)
        .filter(|mask| {
            let subset: Vec<&WeightedEdge<T>> = (0..m).filter(|i| mask >> i & 1 == 1).map(|i| &g.edges[i]).collect();
            is_crsf(n, &subset)
        })
        .count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn triangle_trivial() {
        let g = TinyConnectionGraph::<f64>::from_phases(3, &[(0, 1, 0.0), (1, 2, 0.0), (2, 0, 0.0)]).unwrap();
        assert!(determinant(&g).abs() < 1e-12);
        assert!(crsf_sum(&g).abs() < 1e-12);
        assert_eq!(crsf_count(&g), 1);
    }

    #[test]
    fn self_loop() {
        let th: f64 = 0.7;
        let g = TinyConnectionGraph::from_phases(1, &[(0, 0, th)]).unwrap();
        let expect = 2.0 - 2.0 * th.cos();
        assert!((g.laplacian()[(0, 0)].re - expect).abs() < 1e-14);
        assert!((determinant(&g) - expect).abs() < 1e-12);
        assert!((crsf_sum(&g) - expect).abs() < 1e-12);
    }

    #[test]
    fn cycles_with_monodromy() {
        for len in [3usize, 4] {
            let th: f64 = 1.1;
            let edges: Vec<(usize, usize, f64)> = (0..len).map(|i| (i, (i + 1) % len, if i == 0 { th } else { 0.0 })).collect();
            let g = TinyConnectionGraph::from_phases(len, &edges).unwrap();
            let expect = 2.0 - 2.0 * th.cos();
            assert!((determinant(&g) - expect).abs() < 1e-9);
            assert!((crsf_sum(&g) - expect).abs() < 1e-9);
        }
    }

    #[test]
    fn parallel_edges_and_reversed_orientation() {
        // two parallel edges form a 2-cycle; reversing one edge conjugates its weight
        let g = TinyConnectionGraph::from_phases(2, &[(0, 1, 0.3), (1, 0, 0.5), (0, 0, PI / 3.0)]).unwrap();
        assert!((determinant(&g) - crsf_sum(&g)).abs() < 1e-9);
        let text = g.to_text();
        let back: TinyConnectionGraph<f64> = parse_graph(&text).unwrap();
        assert!((determinant(&back) - determinant(&g)).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(parse_graph::<f64>("vertices: 2\nedge: 0 5 0.1"), Err(CrsfError::BadVertex { .. })));
        assert!(matches!(parse_graph::<f64>("edge: 0 1 0.1"), Err(CrsfError::Malformed { .. })));
        let w = WeightedEdge { tail: 0, head: 0, weight: Complex::new(2.0, 0.0) };
        assert!(matches!(TinyConnectionGraph::new(1, vec![w]), Err(CrsfError::NotUnitary { .. })));
    }
}
