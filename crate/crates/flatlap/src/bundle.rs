//! Flat unitary vector bundles in per-square trivializations: one unitary matrix per seam.

use num_complex::Complex;
use thiserror::Error;

use crate::linalg::DMat;
use crate::scalar::{cis, Real};
use crate::surface::{catalog, keyed_lines, Isometry, Side, SquareTiledSurface};

/// Complex dense matrix.
pub type CMat<T> = DMat<Complex<T>>;

/// Tolerance for unitarity and monodromy checks: `1e-12` in double precision,
/// scaled to the working epsilon otherwise.
pub fn check_tolerance<T: Real>() -> T {
    T::lit(1e-12).max(T::epsilon() * T::lit(1e3))
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BundleError {
    #[error("line {line}: {msg}")]
    Malformed { line: usize, msg: String },
    #[error("bundle has {got} transports but the surface has {expected} seams")]
    SeamCount { expected: usize, got: usize },
    #[error("unknown seam id {0}")]
    UnknownSeam(usize),
    #[error("transport of seam {seam} is {rows}x{cols}, expected rank {rank}")]
    RankMismatch { seam: usize, rows: usize, cols: usize, rank: usize },
    #[error("transport of seam {seam} is not unitary (defect {defect:e})")]
    NotUnitary { seam: usize, defect: f64 },
    #[error("nontrivial monodromy around vertex cycles {0:?}")]
    Monodromy(Vec<MonodromyViolation>),
    #[error("path crosses the free side ({square},{side})")]
    FreeSide { square: usize, side: Side },
    #[error("path is not contiguous at step {0}")]
    Discontiguous(usize),
    #[error("path is not closed")]
    NotClosed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonodromyViolation {
    pub cycle: usize,
    pub defect: f64,
}

/// Leaving `square` through `side`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Crossing {
    pub square: usize,
    pub side: Side,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FlatUnitaryBundle<T: Real> {
    rank: usize,
    transports: Vec<CMat<T>>,
}

impl<T: Real> FlatUnitaryBundle<T> {
    /// Identity transport on every seam.
    pub fn trivial(surface: &SquareTiledSurface, rank: usize) -> Self {
        FlatUnitaryBundle { rank, transports: vec![DMat::identity(rank); surface.seams().len()] }
    }

    /// Builds and fully validates a bundle (shape, unitarity, monodromy at every interior vertex).
    pub fn new(surface: &SquareTiledSurface, rank: usize, transports: Vec<CMat<T>>) -> Result<Self, BundleError> {
        let b = FlatUnitaryBundle { rank, transports };
        b.check_shape(surface)?;
        validate_cone_monodromy(surface, &b)?;
        Ok(b)
    }

    /// Rank-one bundle on [`catalog::torus`] with monodromy `e^{iα}` around the horizontal
    /// generator and `e^{iβ}` around the vertical one.
    pub fn torus_twist(a: usize, b: usize, alpha: T, beta: T) -> (SquareTiledSurface, Self) {
        let s = catalog::torus(a, b);
        let mut bundle = Self::trivial(&s, 1);
        let (h, v) = catalog::torus_wrap_seams(a, b);
        for id in h {
            bundle.transports[id] = DMat::from_row_major(1, 1, vec![cis(alpha)]);
        }
        for id in v {
            bundle.transports[id] = DMat::from_row_major(1, 1, vec![cis(beta)]);
        }
        (s, bundle)
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn transports(&self) -> &[CMat<T>] {
        &self.transports
    }

    pub fn transport(&self, seam: usize) -> Result<&CMat<T>, BundleError> {
        self.transports.get(seam).ok_or(BundleError::UnknownSeam(seam))
    }

    /// Replaces one seam transport without validation (used to build counterexamples).
    pub fn set_transport_unchecked(&mut self, seam: usize, u: CMat<T>) {
        self.transports[seam] = u;
    }

    fn check_shape(&self, surface: &SquareTiledSurface) -> Result<(), BundleError> {
        if self.transports.len() != surface.seams().len() {
            return Err(BundleError::SeamCount { expected: surface.seams().len(), got: self.transports.len() });
        }
        let tol = check_tolerance::<T>();
        for (seam, u) in self.transports.iter().enumerate() {
            if u.rows() != self.rank || u.cols() != self.rank {
                return Err(BundleError::RankMismatch { seam, rows: u.rows(), cols: u.cols(), rank: self.rank });
            }
            let defect = u.unitarity_defect();
            if !(defect <= tol) {
                return Err(BundleError::NotUnitary { seam, defect: defect.as_f64() });
            }
        }
        Ok(())
    }

    /// Transport from `square`'s frame into the frame of the square across `side`.
    pub fn across(&self, surface: &SquareTiledSurface, square: usize, side: Side) -> Result<CMat<T>, BundleError> {
        let g = surface.gluing(square, side).ok_or(BundleError::FreeSide { square, side })?;
        let u = self.transport(g.seam)?;
        Ok(if g.from_a { u.clone() } else { u.adjoint() })
    }

    /// Ordered product of the transports met along a closed path of crossings.
    pub fn monodromy(&self, surface: &SquareTiledSurface, path: &[Crossing]) -> Result<CMat<T>, BundleError> {
        let mut m = DMat::identity(self.rank);
        let Some(first) = path.first() else {
            return Ok(m);
        };
        let mut at = first.square;
        for (k, c) in path.iter().enumerate() {
            if c.square != at {
                return Err(BundleError::Discontiguous(k));
            }
            m = self.across(surface, c.square, c.side)?.matmul(&m);
            at = surface.gluing(c.square, c.side).map(|g| g.other.square).unwrap_or(at);
        }
        if at != first.square {
            return Err(BundleError::NotClosed);
        }
        Ok(m)
    }

    /// Monodromy of a counterclockwise loop around an interior vertex cycle.
    pub fn vertex_monodromy(&self, surface: &SquareTiledSurface, cycle: usize) -> Result<CMat<T>, BundleError> {
        let path: Vec<Crossing> = surface.vertex_cycles()[cycle]
            .corners
            .iter()
            .map(|&(square, corner)| Crossing { square, side: corner.exit_side() })
            .collect();
        self.monodromy(surface, &path)
    }

    /// Places squares in a common chart by following translation seams from square 0 and
    /// records, per square, the transport from square 0's frame into that square's frame.
    /// Returns `None` when some square is only reachable through half-turn seams.
    pub fn develop(&self, surface: &SquareTiledSurface) -> Option<Vec<((i64, i64), CMat<T>)>> {
        let mut out: Vec<Option<((i64, i64), CMat<T>)>> = vec![None; surface.num_squares()];
        out[0] = Some(((0, 0), DMat::identity(self.rank)));
        let mut queue = std::collections::VecDeque::from([0usize]);
        while let Some(s) = queue.pop_front() {
            let ((x, y), frame) = out[s].clone().unwrap();
            for d in Side::ALL {
                let Some(g) = surface.gluing(s, d) else { continue };
                if g.iso != Isometry::Translation || out[g.other.square].is_some() {
                    continue;
                }
                let t = self.across(surface, s, d).ok()?;
                let (dx, dy) = d.outward();
                out[g.other.square] = Some(((x + dx, y + dy), t.matmul(&frame)));
                queue.push_back(g.other.square);
            }
        }
        out.into_iter().collect()
    }

    /// Serializes the bundle block of the text format.
    pub fn to_text(&self) -> String {
        let mut out = format!("rank: {}\n", self.rank);
        for (id, u) in self.transports.iter().enumerate() {
            if u.sub(&DMat::identity(self.rank)).max_abs() == T::zero() {
                continue;
            }
            out.push_str(&format!("transport: {id}"));
            for z in u.as_slice() {
                out.push_str(&format!(" {:e}{:+e}i", z.re.as_f64(), z.im.as_f64()));
            }
            out.push('\n');
        }
        out
    }
}

/// Checks shape, unitarity and trivial monodromy around every interior vertex cycle
/// (cone points and regular points alike).
pub fn validate_cone_monodromy<T: Real>(surface: &SquareTiledSurface, b: &FlatUnitaryBundle<T>) -> Result<(), BundleError> {
    b.check_shape(surface)?;
    let tol = check_tolerance::<T>();
    let id = DMat::identity(b.rank);
    let mut violations = Vec::new();
    for (cycle, vc) in surface.vertex_cycles().iter().enumerate() {
        if vc.boundary {
            continue;
        }
        let m = b.vertex_monodromy(surface, cycle)?;
        let defect = m.sub(&id).max_abs();
        if !(defect <= tol) {
            violations.push(MonodromyViolation { cycle, defect: defect.as_f64() });
        }
    }
    if violations.is_empty() {
        Ok(())
    } else {
        Err(BundleError::Monodromy(violations))
    }
}

/// Parses `a+bi`, `a`, `bi`, `-i` style complex literals.
pub fn parse_complex(tok: &str) -> Option<Complex<f64>> {
    let t = tok.trim();
    if let Some(body) = t.strip_suffix(['i', 'j']) {
        let bytes = body.as_bytes();
        let split = (1..bytes.len())
            .rev()
            .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
        let (re, im) = match split {
            Some(k) => (body[..k].parse::<f64>().ok()?, &body[k..]),
            None => (0.0, body),
        };
        let im = match im {
            "" | "+" => 1.0,
            "-" => -1.0,
            s => s.parse::<f64>().ok()?,
        };
        Some(Complex::new(re, im))
    } else {
        t.parse::<f64>().ok().map(|r| Complex::new(r, 0.0))
    }
}

/// Parses the bundle block (`rank`, `transport`) of a surface document. Seams without a
/// `transport` line carry the identity; an absent `rank` means the trivial line bundle.
pub fn parse_bundle<T: Real>(text: &str, surface: &SquareTiledSurface) -> Result<FlatUnitaryBundle<T>, BundleError> {
    let mut rank = None;
    let mut entries: Vec<(usize, usize, Vec<Complex<f64>>)> = Vec::new();
    for (line, key, value) in keyed_lines(text) {
        let bad = |msg: String| BundleError::Malformed { line, msg };
        match key {
            "rank" => {
                let r: usize = value.parse().map_err(|e| bad(format!("bad rank `{value}`: {e}")))?;
                if r == 0 {
                    return Err(bad("rank must be positive".into()));
                }
                rank = Some(r);
            }
            "transport" => {
                let mut toks = value.split(|c: char| c.is_whitespace() || c == ',').filter(|t| !t.is_empty());
                let id_tok = toks.next().ok_or_else(|| bad("missing seam id".into()))?;
                let id: usize = id_tok.parse().map_err(|e| bad(format!("bad seam id `{id_tok}`: {e}")))?;
                let vals = toks
                    .map(|t| parse_complex(t).ok_or_else(|| bad(format!("bad complex entry `{t}`"))))
                    .collect::<Result<Vec<_>, _>>()?;
                entries.push((line, id, vals));
            }
            _ => {}
        }
    }
    let rank = rank.unwrap_or(1);
    let mut transports: Vec<CMat<T>> = vec![DMat::identity(rank); surface.seams().len()];
    let mut seen = vec![false; surface.seams().len()];
    for (line, id, vals) in entries {
        if id >= transports.len() {
            return Err(BundleError::UnknownSeam(id));
        }
        if seen[id] {
            return Err(BundleError::Malformed { line, msg: format!("seam {id} has two transports") });
        }
        seen[id] = true;
        if vals.len() != rank * rank {
            return Err(BundleError::Malformed {
                line,
                msg: format!("expected {} entries for rank {rank}, found {}", rank * rank, vals.len()),
            });
        }
        let data = vals.iter().map(|z| Complex::new(T::lit(z.re), T::lit(z.im))).collect();
        transports[id] = DMat::from_row_major(rank, rank, data);
    }
    FlatUnitaryBundle::new(surface, rank, transports)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::{catalog, parse_surface};
    use std::f64::consts::PI;

    #[test]
    fn complex_literals() {
        assert_eq!(parse_complex("1"), Some(Complex::new(1.0, 0.0)));
        assert_eq!(parse_complex("-0.5+2i"), Some(Complex::new(-0.5, 2.0)));
        assert_eq!(parse_complex("1e-3-2.5e1i"), Some(Complex::new(1e-3, -25.0)));
        assert_eq!(parse_complex("-i"), Some(Complex::new(0.0, -1.0)));
        assert_eq!(parse_complex("3i"), Some(Complex::new(0.0, 3.0)));
        assert_eq!(parse_complex("x"), None);
    }

    #[test]
    fn torus_generator_monodromy() {
        let (s, b) = FlatUnitaryBundle::torus_twist(1, 1, 0.3f64, 1.1);
        let m = b.monodromy(&s, &[Crossing { square: 0, side: Side::E }]).unwrap();
        assert!((m[(0, 0)] - cis(0.3)).norm() < 1e-15);
        let m = b.monodromy(&s, &[Crossing { square: 0, side: Side::S }]).unwrap();
        assert!((m[(0, 0)] - cis(-1.1)).norm() < 1e-15);
        assert!(validate_cone_monodromy(&s, &b).is_ok());
    }

    #[test]
    fn homotopic_loops_agree() {
        let (s, b) = FlatUnitaryBundle::torus_twist(2, 2, 0.7f64, -0.4);
        let low = [Crossing { square: 0, side: Side::E }, Crossing { square: 1, side: Side::E }];
        let high = [
            Crossing { square: 0, side: Side::N },
            Crossing { square: 2, side: Side::E },
            Crossing { square: 3, side: Side::E },
            Crossing { square: 2, side: Side::S },
        ];
        let a = b.monodromy(&s, &low).unwrap();
        let c = b.monodromy(&s, &high).unwrap();
        assert!(a.sub(&c).max_abs() < 1e-14);
    }

    #[test]
    fn broken_pillowcase_is_rejected() {
        let s = catalog::pillowcase();
        let mut b = FlatUnitaryBundle::<f64>::trivial(&s, 1);
        b.set_transport_unchecked(2, DMat::from_row_major(1, 1, vec![cis(PI / 3.0)]));
        match validate_cone_monodromy(&s, &b) {
            Err(BundleError::Monodromy(v)) => assert!(!v.is_empty()),
            other => panic!("expected violation, got {other:?}"),
        }
        assert!(validate_cone_monodromy(&s, &FlatUnitaryBundle::<f64>::trivial(&s, 2)).is_ok());
    }

    #[test]
    fn parse_and_round_trip() {
        let text = "squares: 1\nglue: (0,E) (0,W) translation\nglue: (0,N) (0,S) translation\nrank: 1\ntransport: 0 0+1i\n";
        let s = parse_surface(text).unwrap();
        let b = parse_bundle::<f64>(text, &s).unwrap();
        assert_eq!(b.transport(0).unwrap()[(0, 0)], Complex::new(0.0, 1.0));
        let again = format!("{}{}", s.to_text(), b.to_text());
        let s2 = parse_surface(&again).unwrap();
        assert_eq!(s2, s);
        assert_eq!(parse_bundle::<f64>(&again, &s2).unwrap(), b);
    }

    #[test]
    fn rejects_non_unitary_and_bad_rank() {
        let s = catalog::torus(1, 1);
        let text = "transport: 0 2";
        assert!(matches!(parse_bundle::<f64>(text, &s), Err(BundleError::NotUnitary { seam: 0, .. })));
        assert!(matches!(parse_bundle::<f64>("rank: 2\ntransport: 0 1 0 0", &s), Err(BundleError::Malformed { .. })));
        assert!(matches!(parse_bundle::<f64>("transport: 9 1", &s), Err(BundleError::UnknownSeam(9))));
    }

    #[test]
    fn develop_torus_frames() {
        let (s, b) = FlatUnitaryBundle::torus_twist(2, 1, 0.5f64, 0.0);
        let dev = b.develop(&s).unwrap();
        assert_eq!(dev[0].0, (0, 0));
        assert_eq!(dev[1].0, (1, 0));
        assert!((dev[1].1[(0, 0)] - Complex::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn path_and_reverse_is_identity() {
        let (s, b) = FlatUnitaryBundle::torus_twist(1, 1, 0.9f64, 0.2);
        let m = b
            .monodromy(&s, &[Crossing { square: 0, side: Side::E }, Crossing { square: 0, side: Side::W }])
            .unwrap();
        assert!(m.sub(&DMat::identity(1)).max_abs() < 1e-15);
    }
}
