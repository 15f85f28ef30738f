//! Lattice potential theory: Dirichlet Green functions on balls of ℤ² and quasi-balls of the
//! half plane ℕ×ℤ, the explicit corner flow, the quadratic distance barrier and Harnack-type
//! diagnostics of discrete eigenvectors.

use std::collections::{HashMap, VecDeque};
use std::io::{self, Write};

use num_complex::Complex;
use num_traits::Num;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::bundle::FlatUnitaryBundle;
use crate::discretize::{build_graph, DiscretizationGraph};
use crate::linalg::{conjugate_gradient, CsrMatrix, LinalgError};
use crate::operators::{assemble_laplacian, gradient};
use crate::scalar::{dot, Real};
use crate::spectral::{lowest_eigenpairs_with, EigenOptions, SpectralError};
use crate::surface::{Side, SquareTiledSurface};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PotentialError {
    #[error("radius must be positive")]
    BadRadius,
    #[error("iteration stopped after {iterations} sweeps with residual {residual:e}")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("fit window contains no lattice points")]
    EmptyWindow,
    #[error("asymptotic fit needs radius >= 64 (got {0})")]
    RadiusTooSmall(usize),
    #[error("point ({0}, {1}) is not in the half plane")]
    OutsideHalfPlane(i64, i64),
    #[error("singular point {0} does not exist")]
    UnknownSingularPoint(usize),
    #[error("barrier needs n >= 2")]
    TooCoarse,
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

pub type LatticePoint = (i64, i64);

/// Support of a lattice function.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum LatticeDomain {
    /// `{z ∈ ℤ² : |z| ≤ radius}`.
    Ball { radius: usize },
    /// `{z ∈ ℕ×ℤ : |z − P|²·|z − P̄|² ≤ r4}` under `(a, b) ↦ b + i(a + ½)`.
    QuasiBall { center: LatticePoint, r4: u128 },
}

impl LatticeDomain {
    pub fn contains(&self, z: LatticePoint) -> bool {
        match *self {
            LatticeDomain::Ball { radius } => {
                let r = radius as i128;
                (z.0 as i128).pow(2) + (z.1 as i128).pow(2) <= r * r
            }
            LatticeDomain::QuasiBall { center, r4 } => z.0 >= 0 && quasi_product(center, z) <= r4,
        }
    }

    /// Lattice neighbours in the ambient graph (ℤ² or ℕ×ℤ).
    pub fn ambient_neighbors(&self, z: LatticePoint) -> Vec<LatticePoint> {
        let all = [(z.0 + 1, z.1), (z.0 - 1, z.1), (z.0, z.1 + 1), (z.0, z.1 - 1)];
        match self {
            LatticeDomain::Ball { .. } => all.to_vec(),
            LatticeDomain::QuasiBall { .. } => all.into_iter().filter(|p| p.0 >= 0).collect(),
        }
    }

    fn points(&self) -> Vec<LatticePoint> {
        let mut pts = Vec::new();
        match *self {
            LatticeDomain::Ball { radius } => {
                let r = radius as i64;
                for a in -r..=r {
                    for b in -r..=r {
                        if self.contains((a, b)) {
                            pts.push((a, b));
                        }
                    }
                }
            }
            LatticeDomain::QuasiBall { center, .. } => {
                // flood fill from the centre; quasi-balls are star-shaped around P
                let mut seen = std::collections::HashSet::new();
                let mut queue = VecDeque::from([center]);
                seen.insert(center);
                while let Some(z) = queue.pop_front() {
                    pts.push(z);
                    for w in self.ambient_neighbors(z) {
                        if self.contains(w) && seen.insert(w) {
                            queue.push_back(w);
                        }
                    }
                }
                pts.sort_unstable();
            }
        }
        pts
    }
}

/// `|z − P|²·|z − P̄|²` in exact integer arithmetic, with `P̄` the reflection `a ↦ −1 − a`.
pub fn quasi_product(p: LatticePoint, z: LatticePoint) -> u128 {
    let db = (z.1 - p.1) as i128;
    let near = (z.0 - p.0) as i128;
    let far = (z.0 + p.0 + 1) as i128;
    ((near * near + db * db) * (far * far + db * db)) as u128
}

/// Real function on a finite set of lattice points, zero elsewhere.
#[derive(Clone, Debug)]
pub struct LatticeFunction<T> {
    pub domain: LatticeDomain,
    points: Vec<LatticePoint>,
    values: Vec<T>,
    index: HashMap<LatticePoint, usize>,
    /// Largest `|ΔG − δ|` over the support.
    pub residual: f64,
    pub iterations: usize,
}

impl<T: Real> LatticeFunction<T> {
    fn new(domain: LatticeDomain, points: Vec<LatticePoint>, values: Vec<T>) -> Self {
        let index = points.iter().enumerate().map(|(i, &p)| (p, i)).collect();
        LatticeFunction { domain, points, values, index, residual: 0.0, iterations: 0 }
    }

    pub fn get(&self, z: LatticePoint) -> T {
        self.index.get(&z).map_or(T::zero(), |&i| self.values[i])
    }

    pub fn points(&self) -> &[LatticePoint] {
        &self.points
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `(ΔG)(z) = Σ_w (G(z) − G(w))` over ambient neighbours.
    pub fn laplacian_at(&self, z: LatticePoint) -> T {
        let g = self.get(z);
        self.domain.ambient_neighbors(z).into_iter().map(|w| g - self.get(w)).sum()
    }

    /// Point of largest value (first in point order on ties).
    pub fn argmax(&self) -> LatticePoint {
        let mut best = 0;
        for i in 1..self.values.len() {
            if self.values[i] > self.values[best] {
                best = i;
            }
        }
        self.points[best]
    }

    /// Support points with a neighbour outside the support.
    pub fn inner_boundary(&self) -> Vec<LatticePoint> {
        self.points
            .iter()
            .copied()
            .filter(|&z| self.domain.ambient_neighbors(z).into_iter().any(|w| !self.index.contains_key(&w)))
            .collect()
    }

    /// CSV `a,b,value`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "a,b,value")?;
        for (p, v) in self.points.iter().zip(&self.values) {
            writeln!(w, "{},{},{:.12e}", p.0, p.1, v.as_f64())?;
        }
        Ok(())
    }
}

fn dirichlet_green<T: Real>(domain: LatticeDomain, source: LatticePoint) -> Result<LatticeFunction<T>, PotentialError> {
    let points = domain.points();
    let index: HashMap<LatticePoint, usize> = points.iter().enumerate().map(|(i, &p)| (p, i)).collect();
    let mut triplets = Vec::with_capacity(points.len() * 5);
    for (i, &z) in points.iter().enumerate() {
        let nb = domain.ambient_neighbors(z);
        triplets.push((i, i, T::count(nb.len())));
        for w in nb {
            if let Some(&j) = index.get(&w) {
                triplets.push((i, j, -T::one()));
            }
        }
    }
    let a = CsrMatrix::from_triplets(points.len(), points.len(), triplets);
    let mut rhs = vec![T::zero(); points.len()];
    rhs[index[&source]] = T::one();
    let tol = T::epsilon().max(T::lit(1e-15)) * T::lit(10.0);
    let (x, report) = conjugate_gradient(&a, &rhs, tol, 20 * points.len() + 100)?;
    let mut f = LatticeFunction::new(domain, points, x);
    f.iterations = report.iterations;
    f.residual = residual(&f, source);
    Ok(f)
}

fn residual<T: Real>(f: &LatticeFunction<T>, source: LatticePoint) -> f64 {
    f.points
        .iter()
        .map(|&z| {
            let d = if z == source { T::one() } else { T::zero() };
            (f.laplacian_at(z) - d).abs().as_f64()
        })
        .fold(0.0, f64::max)
}

/// Green function of the ball `B(n, 0)` in ℤ² with zero values outside: `ΔG = δ₀` on the ball.
pub fn green_ball<T: Real>(n: usize) -> Result<LatticeFunction<T>, PotentialError> {
    if n == 0 {
        return Err(PotentialError::BadRadius);
    }
    dirichlet_green(LatticeDomain::Ball { radius: n }, (0, 0))
}

/// The same function obtained by the monotone averaging iteration `G ← (δ₀ + Σ_w G(w)) / 4`
/// started from zero. Slow; meant for small radii.
pub fn green_ball_iterative<T: Real>(n: usize, tol: f64, max_sweeps: usize) -> Result<LatticeFunction<T>, PotentialError> {
    if n == 0 {
        return Err(PotentialError::BadRadius);
    }
    let domain = LatticeDomain::Ball { radius: n };
    let points = domain.points();
    let mut f = LatticeFunction::new(domain, points.clone(), vec![T::zero(); points.len()]);
    for sweep in 1..=max_sweeps {
        let next: Vec<T> = points
            .iter()
            .map(|&z| {
                let d = if z == (0, 0) { T::one() } else { T::zero() };
                (d + domain.ambient_neighbors(z).into_iter().map(|w| f.get(w)).sum::<T>()) / T::lit(4.0)
            })
            .collect();
        f.values = next;
        f.residual = residual(&f, (0, 0));
        f.iterations = sweep;
        if f.residual <= tol {
            return Ok(f);
        }
    }
    Err(PotentialError::NoConvergence { iterations: max_sweeps, residual: f.residual })
}

/// Fit of `G(z) − G(0) + log|z| / 2π ≈ c` on the annulus `n/4 ≤ |z| ≤ n/2`.
#[derive(Clone, Debug, Serialize)]
pub struct AsymptoticFit {
    pub n: usize,
    pub constant: f64,
    /// Largest deviation from the constant over the annulus.
    pub deviation: f64,
    /// Largest deviation over the outer half of the annulus, for the decay check.
    pub outer_deviation: f64,
    /// `|G(r, 0) − G(r/√2, r/√2)|` style comparison: axis point versus nearest diagonal point.
    pub axis_vs_diagonal: f64,
    pub points: usize,
}

/// Fits the additive constant of the full-plane Green function from ball values.
/// Differences against `G(0)` cancel the ball-dependent constant.
pub fn fullplane_asymptotic_check(n: usize) -> Result<AsymptoticFit, PotentialError> {
    if n < 64 {
        return Err(PotentialError::RadiusTooSmall(n));
    }
    let g = green_ball::<f64>(n)?;
    let g0 = g.get((0, 0));
    let (lo, hi) = (n as f64 / 4.0, n as f64 / 2.0);
    let samples: Vec<(f64, f64)> = g
        .points()
        .iter()
        .filter_map(|&(a, b)| {
            let r = ((a * a + b * b) as f64).sqrt();
            (r >= lo && r <= hi).then(|| (r, g.get((a, b)) - g0 + r.ln() / (2.0 * std::f64::consts::PI)))
        })
        .collect();
    if samples.is_empty() {
        return Err(PotentialError::EmptyWindow);
    }
    let constant = samples.iter().map(|s| s.1).sum::<f64>() / samples.len() as f64;
    let deviation = samples.iter().map(|s| (s.1 - constant).abs()).fold(0.0, f64::max);
    let mid = 0.5 * (lo + hi);
    let outer_deviation = samples.iter().filter(|s| s.0 >= mid).map(|s| (s.1 - constant).abs()).fold(0.0, f64::max);
    let k = (n / 3) as i64;
    let d = ((k as f64) / std::f64::consts::SQRT_2).round() as i64;
    let axis_vs_diagonal = ((g.get((k, 0)) + ((k * k) as f64).sqrt().ln() / (2.0 * std::f64::consts::PI))
        - (g.get((d, d)) + ((2 * d * d) as f64).sqrt().ln() / (2.0 * std::f64::consts::PI)))
        .abs();
    Ok(AsymptoticFit { n, constant, deviation, outer_deviation, axis_vs_diagonal, points: samples.len() })
}

/// Green function of the quasi-ball `QB(r, P)` in ℕ×ℤ (row 0 has no downward edge).
pub fn green_halfplane<T: Real>(p: LatticePoint, r: f64) -> Result<LatticeFunction<T>, PotentialError> {
    if !(r > 0.0) {
        return Err(PotentialError::BadRadius);
    }
    green_halfplane_quartic(p, r.powi(4).floor() as u128)
}

/// As [`green_halfplane`], with the squared-squared radius `r⁴` given exactly.
pub fn green_halfplane_quartic<T: Real>(p: LatticePoint, r4: u128) -> Result<LatticeFunction<T>, PotentialError> {
    if p.0 < 0 {
        return Err(PotentialError::OutsideHalfPlane(p.0, p.1));
    }
    // P itself always belongs: |P − P|² = 0
    dirichlet_green(LatticeDomain::QuasiBall { center: p, r4 }, p)
}

/// Antisymmetric flow on the lattice edges of the quadrant, stored on east and north edges
/// with tail `(a, b)`, `a + b < n`.
#[derive(Clone, Debug)]
pub struct LatticeFlow<T> {
    n: usize,
    east: Vec<T>,
    north: Vec<T>,
}

fn tri_index(a: usize, b: usize) -> usize {
    let s = a + b;
    s * (s + 1) / 2 + b
}

fn from_count<T: Num + Clone>(k: usize) -> T {
    let two = T::one() + T::one();
    let mut out = T::zero();
    let mut bit = T::one();
    let mut k = k;
    while k > 0 {
        if k & 1 == 1 {
            out = out + bit.clone();
        }
        bit = bit * two.clone();
        k >>= 1;
    }
    out
}

/// The corner flow `E^n` carrying unit mass from the origin to the diagonal `a + b = n`:
/// `E((a,b),(a+1,b)) = (a+1)(1/(a+b+1) − 1/(a+b+2))` and
/// `E((a,b),(a,b+1)) = 1/(a+b+2) − a(1/(a+b+1) − 1/(a+b+2))` for `a + b ≤ n − 1`.
pub fn corner_flow<T: Num + Clone>(n: usize) -> LatticeFlow<T> {
    let size = n * (n + 1) / 2;
    let mut east = Vec::with_capacity(size);
    let mut north = Vec::with_capacity(size);
    for s in 0..n {
        let inv1 = T::one() / from_count::<T>(s + 1);
        let inv2 = T::one() / from_count::<T>(s + 2);
        let step = inv1 - inv2.clone();
        for b in 0..=s {
            let a = s - b;
            east.push(from_count::<T>(a + 1) * step.clone());
            north.push(inv2.clone() - from_count::<T>(a) * step.clone());
        }
    }
    LatticeFlow { n, east, north }
}

impl<T: Num + Clone> LatticeFlow<T> {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Flow along the directed edge `from → to`; zero off the support or for non-edges.
    pub fn value(&self, from: LatticePoint, to: LatticePoint) -> T {
        let (da, db) = (to.0 - from.0, to.1 - from.1);
        let forward = |p: LatticePoint, east: bool| -> T {
            if p.0 < 0 || p.1 < 0 || (p.0 + p.1) as usize >= self.n {
                return T::zero();
            }
            let i = tri_index(p.0 as usize, p.1 as usize);
            if east {
                self.east[i].clone()
            } else {
                self.north[i].clone()
            }
        };
        match (da, db) {
            (1, 0) => forward(from, true),
            (-1, 0) => T::zero() - forward(to, true),
            (0, 1) => forward(from, false),
            (0, -1) => T::zero() - forward(to, false),
            _ => T::zero(),
        }
    }

    /// Net inflow `Σ_w E(w → q)`.
    pub fn divergence(&self, q: LatticePoint) -> T {
        [(1, 0), (-1, 0), (0, 1), (0, -1)]
            .into_iter()
            .map(|(da, db)| self.value((q.0 + da, q.1 + db), q))
            .fold(T::zero(), |acc, x| acc + x)
    }

    /// `Σ_e E(e)²` over undirected edges.
    pub fn energy(&self) -> T {
        self.east
            .iter()
            .chain(&self.north)
            .fold(T::zero(), |acc, x| acc + x.clone() * x.clone())
    }

    /// The expected divergence: −1 at the origin, `1/(n+1)` on the diagonal `a + b = n`.
    pub fn expected_divergence(&self, q: LatticePoint) -> T {
        if q == (0, 0) {
            T::zero() - T::one()
        } else if q.0 >= 0 && q.1 >= 0 && (q.0 + q.1) as usize == self.n {
            T::one() / from_count::<T>(self.n + 1)
        } else {
            T::zero()
        }
    }

    /// Largest deviation of the divergence from [`Self::expected_divergence`] on the square
    /// `[−1, n+1]²`, which contains every point touched by the flow.
    pub fn divergence_defect(&self) -> T
    where
        T: PartialOrd,
    {
        let m = self.n as i64 + 1;
        let mut worst = T::zero();
        for a in -1..=m {
            for b in -1..=m {
                let d = self.divergence((a, b)) - self.expected_divergence((a, b));
                let d = if d < T::zero() { T::zero() - d } else { d };
                if d > worst {
                    worst = d;
                }
            }
        }
        worst
    }

    /// CSV `a,b,east,north` over the support.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()>
    where
        T: std::fmt::LowerExp,
    {
        writeln!(w, "a,b,east,north")?;
        for s in 0..self.n {
            for b in 0..=s {
                let i = tri_index(s - b, b);
                writeln!(w, "{},{},{:.12e},{:.12e}", s - b, b, self.east[i], self.north[i])?;
            }
        }
        Ok(())
    }
}

/// `2 Σ_{i=1}^n 1/i`.
pub fn flow_energy_bound(n: usize) -> f64 {
    2.0 * (1..=n).map(|i| 1.0 / i as f64).sum::<f64>()
}

/// Graph distances (in the cell graph) from a set of vertices.
pub fn graph_distances<T: Real>(g: &DiscretizationGraph<T>, sources: &[usize]) -> Vec<Option<u64>> {
    let mut dist = vec![None; g.num_vertices()];
    let mut queue = VecDeque::new();
    for &s in sources {
        if dist[s].is_none() {
            dist[s] = Some(0);
            queue.push_back(s);
        }
    }
    while let Some(v) = queue.pop_front() {
        let d = dist[v].unwrap();
        for side in Side::ALL {
            if let Some(nb) = g.neighbor(v, side) {
                if dist[nb.vertex].is_none() {
                    dist[nb.vertex] = Some(d + 1);
                    queue.push_back(nb.vertex);
                }
            }
        }
    }
    dist
}

#[derive(Clone, Debug, Serialize)]
pub struct BarrierViolation {
    pub vertex: usize,
    pub distance: u64,
    pub laplacian: i64,
}

#[derive(Clone, Debug, Serialize)]
pub struct BarrierReport {
    pub n: usize,
    pub point: usize,
    /// `h_P(Q) = dist(Q, V_n(P))²` for every vertex.
    pub barrier: Vec<i64>,
    /// Full-degree vertices checked, with `dist ≤ n`.
    pub checked: usize,
    /// Largest `Δh` over the checked vertices.
    pub max_laplacian: i64,
    /// Violations of `Δh ≤ −1` at full-degree vertices with `dist ≤ n − 1`.
    pub interior_violations: Vec<BarrierViolation>,
    /// Violations at full-degree vertices with `dist = n`.
    pub sphere_violations: Vec<BarrierViolation>,
}

impl BarrierReport {
    pub fn holds_on_ball(&self) -> bool {
        self.interior_violations.is_empty() && self.sphere_violations.is_empty()
    }
}

/// The quadratic distance barrier of singular point `p`, checked in exact integer arithmetic.
pub fn convex_barrier<T: Real>(g: &DiscretizationGraph<T>, p: usize) -> Result<BarrierReport, PotentialError> {
    if g.n() < 2 {
        return Err(PotentialError::TooCoarse);
    }
    let sources = g.cone_neighbors(p).map_err(|_| PotentialError::UnknownSingularPoint(p))?.to_vec();
    let dist = graph_distances(g, &sources);
    let h: Vec<i64> = dist.iter().map(|d| d.map_or(i64::MAX, |d| (d * d) as i64)).collect();
    let n = g.n() as u64;
    let mut rep = BarrierReport {
        n: g.n(),
        point: p,
        barrier: h.clone(),
        checked: 0,
        max_laplacian: i64::MIN,
        interior_violations: Vec::new(),
        sphere_violations: Vec::new(),
    };
    for v in 0..g.num_vertices() {
        let Some(d) = dist[v] else { continue };
        if d > n || g.degree(v) < 4 {
            continue;
        }
        let lap: i64 = Side::ALL
            .iter()
            .filter_map(|&s| g.neighbor(v, s))
            .map(|nb| h[v] - h[nb.vertex])
            .sum();
        rep.checked += 1;
        rep.max_laplacian = rep.max_laplacian.max(lap);
        if lap > -1 {
            let viol = BarrierViolation { vertex: v, distance: d, laplacian: lap };
            if d < n {
                rep.interior_violations.push(viol);
            } else {
                rep.sphere_violations.push(viol);
            }
        }
    }
    Ok(rep)
}

#[derive(Clone, Debug, Serialize)]
pub struct HarnackRow {
    pub n: usize,
    pub eigenvalue: f64,
    pub max_edge_gap: f64,
    pub sup_over_sqrt_log: f64,
    pub interior_sup: f64,
    pub sup: f64,
}

/// Which discrete eigenvector to examine.
pub enum HarnackTarget<'a> {
    /// The eigenvector with this index (0-based, ascending eigenvalues).
    Index(usize),
    /// Projection of the restricted evaluator onto the eigenspace cluster containing `index`.
    Projected { index: usize, field: &'a (dyn Fn(usize, f64, f64) -> Vec<Complex<f64>> + Sync) },
}

impl HarnackTarget<'_> {
    fn index(&self) -> usize {
        match self {
            HarnackTarget::Index(i) => *i,
            HarnackTarget::Projected { index, .. } => *index,
        }
    }
}

/// Edge gaps, sup norm and interior sup of an eigenvector normalized to `‖f‖² = n²`.
/// The interior set keeps vertices at graph distance at least `c·n` from every `V_n(P)`.
pub fn harnack_diagnostics(
    surface: &SquareTiledSurface,
    bundle: &FlatUnitaryBundle<f64>,
    target: &HarnackTarget<'_>,
    ns: &[usize],
    c: f64,
    opts: &EigenOptions<f64>,
) -> Result<Vec<HarnackRow>, PotentialError> {
    ns.par_iter()
        .map(|&n| {
            let g = build_graph(surface, bundle, n).map_err(SpectralError::from)?;
            let op = assemble_laplacian(&g);
            let idx = target.index();
            let o = EigenOptions { k: idx + 6, ..opts.clone() };
            let pairs = lowest_eigenpairs_with(op.matrix(), &o)?;
            let lam = pairs.values[idx];
            let mut f = match target {
                HarnackTarget::Index(_) => pairs.vectors[idx].clone(),
                HarnackTarget::Projected { field, .. } => {
                    let rf = crate::interp::restrict(field, &g).map_err(|_| PotentialError::BadRadius)?;
                    let tol = 1e-6 * lam.abs().max(1e-12);
                    let mut out = vec![Complex::new(0.0, 0.0); g.dim()];
                    for (j, v) in pairs.values.iter().enumerate() {
                        if (v - lam).abs() <= tol {
                            let x = &pairs.vectors[j];
                            let coef = dot(&rf, x);
                            for (o, &xi) in out.iter_mut().zip(x.iter()) {
                                *o += coef * xi;
                            }
                        }
                    }
                    out
                }
            };
            let nrm = dot(&f, &f).re.sqrt();
            let scale = n as f64 / nrm;
            for z in f.iter_mut() {
                *z *= scale;
            }
            let grad = gradient(&g).matvec(&f);
            let r = g.rank();
            let max_edge_gap = (0..g.edges().len())
                .map(|e| grad[e * r..(e + 1) * r].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
                .fold(0.0, f64::max);
            let vnorm = |v: usize| f[v * r..(v + 1) * r].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            let sup = (0..g.num_vertices()).map(vnorm).fold(0.0, f64::max);
            let sources: Vec<usize> = g.singular_points().iter().flat_map(|p| p.cells.iter().copied()).collect();
            let dist = graph_distances(&g, &sources);
            let cut = c * n as f64;
            let interior_sup = (0..g.num_vertices())
                .filter(|&v| sources.is_empty() || dist[v].is_some_and(|d| d as f64 >= cut))
                .map(vnorm)
                .fold(0.0, f64::max);
            Ok(HarnackRow {
                n,
                eigenvalue: lam * (n * n) as f64,
                max_edge_gap,
                sup_over_sqrt_log: sup / (n as f64).ln().sqrt(),
                interior_sup,
                sup,
            })
        })
        .collect()
}
