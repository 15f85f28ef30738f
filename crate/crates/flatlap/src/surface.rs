//! Square-tiled half-translation surfaces given as gluing data on unit squares.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    N,
    E,
    S,
    W,
}

impl Side {
    pub const ALL: [Side; 4] = [Side::N, Side::E, Side::S, Side::W];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn opposite(self) -> Side {
        match self {
            Side::N => Side::S,
            Side::S => Side::N,
            Side::E => Side::W,
            Side::W => Side::E,
        }
    }

    /// Outward unit normal in the square chart.
    pub fn outward(self) -> (i64, i64) {
        match self {
            Side::N => (0, 1),
            Side::E => (1, 0),
            Side::S => (0, -1),
            Side::W => (-1, 0),
        }
    }

    /// Corner at parameter `t ∈ {0, 1}` along the side (x for N/S, y for E/W).
    fn corner_at(self, t: bool) -> Corner {
        match (self, t) {
            (Side::S, false) | (Side::W, false) => Corner::SW,
            (Side::S, true) | (Side::E, false) => Corner::SE,
            (Side::N, true) | (Side::E, true) => Corner::NE,
            (Side::N, false) | (Side::W, true) => Corner::NW,
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = match self {
            Side::N => "N",
            Side::E => "E",
            Side::S => "S",
            Side::W => "W",
        };
        f.write_str(c)
    }
}

impl FromStr for Side {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_uppercase().as_str() {
            "N" => Ok(Side::N),
            "E" => Ok(Side::E),
            "S" => Ok(Side::S),
            "W" => Ok(Side::W),
            other => Err(format!("unknown side `{other}`")),
        }
    }
}

/// Corner of a unit square.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Corner {
    SW,
    SE,
    NE,
    NW,
}

impl Corner {
    pub const ALL: [Corner; 4] = [Corner::SW, Corner::SE, Corner::NE, Corner::NW];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Side crossed when turning counterclockwise around the corner point.
    pub fn exit_side(self) -> Side {
        match self {
            Corner::SW => Side::W,
            Corner::SE => Side::S,
            Corner::NE => Side::E,
            Corner::NW => Side::N,
        }
    }

    /// Side through which a counterclockwise turn enters the square.
    pub fn enter_side(self) -> Side {
        match self {
            Corner::SW => Side::S,
            Corner::SE => Side::E,
            Corner::NE => Side::N,
            Corner::NW => Side::W,
        }
    }

    /// Position along `side` (false = start, true = end) of this corner.
    fn param_on(self, side: Side) -> bool {
        match side {
            Side::N | Side::S => matches!(self, Corner::SE | Corner::NE),
            Side::E | Side::W => matches!(self, Corner::NE | Corner::NW),
        }
    }

    /// Unit offsets `(sx, sy) ∈ {0,1}²` of the corner in the square.
    pub fn offset(self) -> (u8, u8) {
        match self {
            Corner::SW => (0, 0),
            Corner::SE => (1, 0),
            Corner::NE => (1, 1),
            Corner::NW => (0, 1),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Isometry {
    /// Chart change `z ↦ z + c`.
    Translation,
    /// Chart change `z ↦ −z + c`.
    HalfTurn,
}

impl fmt::Display for Isometry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Isometry::Translation => "translation",
            Isometry::HalfTurn => "halfturn",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SideRef {
    pub square: usize,
    pub side: Side,
}

impl SideRef {
    pub fn new(square: usize, side: Side) -> Self {
        SideRef { square, side }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Seam {
    pub a: SideRef,
    pub b: SideRef,
    pub iso: Isometry,
}

/// Where a directed side is glued: the opposite side, the seam id, and whether this side is the seam's `a` side.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Gluing {
    pub other: SideRef,
    pub seam: usize,
    pub from_a: bool,
    pub iso: Isometry,
}

/// One identification class of square corners.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VertexCycle {
    /// Corners in counterclockwise order; for boundary cycles the first corner has a free enter side.
    pub corners: Vec<(usize, Corner)>,
    pub boundary: bool,
}

impl VertexCycle {
    /// Angle in units of π/2.
    pub fn angle_units(&self) -> usize {
        self.corners.len()
    }

    pub fn angle(&self) -> f64 {
        self.corners.len() as f64 * std::f64::consts::FRAC_PI_2
    }

    /// Cone point (interior, angle ≠ 2π) or boundary corner (angle ≠ π).
    pub fn is_singular(&self) -> bool {
        if self.boundary {
            self.corners.len() != 2
        } else {
            self.corners.len() != 4
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SurfaceError {
    #[error("line {line}: {msg}")]
    Malformed { line: usize, msg: String },
    #[error("the surface needs at least one square")]
    NoSquares,
    #[error("side ({square},{side}) is glued more than once")]
    SideGluedTwice { square: usize, side: Side },
    #[error("side ({square},{side}) is glued to itself")]
    SelfGluedSide { square: usize, side: Side },
    #[error("square index {index} out of range (surface has {count} squares)")]
    DanglingSquare { index: usize, count: usize },
    #[error("{iso} gluing cannot pair side {a} with side {b}")]
    IncompatibleSides { a: Side, b: Side, iso: Isometry },
    #[error("interior vertex cycle through ({square},{corner:?}) has angle {units}·π/2, not a multiple of π")]
    OddConeAngle { square: usize, corner: Corner, units: usize },
}

/// Validated square-tiled surface with derived vertex data.
#[derive(Clone, Debug, PartialEq)]
pub struct SquareTiledSurface {
    num_squares: usize,
    seams: Vec<Seam>,
    gluing: Vec<[Option<Gluing>; 4]>,
    cycles: Vec<VertexCycle>,
    corner_cycle: Vec<[usize; 4]>,
    singular: Vec<usize>,
}

impl SquareTiledSurface {
    pub fn new(num_squares: usize, seams: Vec<Seam>) -> Result<Self, SurfaceError> {
        if num_squares == 0 {
            return Err(SurfaceError::NoSquares);
        }
        let mut gluing: Vec<[Option<Gluing>; 4]> = vec![[None; 4]; num_squares];
        for (id, seam) in seams.iter().enumerate() {
            for r in [seam.a, seam.b] {
                if r.square >= num_squares {
                    return Err(SurfaceError::DanglingSquare { index: r.square, count: num_squares });
                }
            }
            if seam.a == seam.b {
                return Err(SurfaceError::SelfGluedSide { square: seam.a.square, side: seam.a.side });
            }
            let ok = match seam.iso {
                Isometry::Translation => seam.b.side == seam.a.side.opposite(),
                Isometry::HalfTurn => seam.b.side == seam.a.side,
            };
            if !ok {
                return Err(SurfaceError::IncompatibleSides { a: seam.a.side, b: seam.b.side, iso: seam.iso });
            }
            for (this, other, from_a) in [(seam.a, seam.b, true), (seam.b, seam.a, false)] {
                let slot = &mut gluing[this.square][this.side.index()];
                if slot.is_some() {
                    return Err(SurfaceError::SideGluedTwice { square: this.square, side: this.side });
                }
                *slot = Some(Gluing { other, seam: id, from_a, iso: seam.iso });
            }
        }
        let mut surface = SquareTiledSurface {
            num_squares,
            seams,
            gluing,
            cycles: Vec::new(),
            corner_cycle: vec![[usize::MAX; 4]; num_squares],
            singular: Vec::new(),
        };
        surface.build_cycles()?;
        Ok(surface)
    }

    /// Corner reached by crossing `side` of `square` at the endpoint `corner`.
    fn across(&self, square: usize, side: Side, corner: Corner) -> Option<(usize, Corner)> {
        let g = self.gluing[square][side.index()]?;
        let t = corner.param_on(side);
        let t2 = match g.iso {
            Isometry::Translation => t,
            Isometry::HalfTurn => !t,
        };
        Some((g.other.square, g.other.side.corner_at(t2)))
    }

    fn build_cycles(&mut self) -> Result<(), SurfaceError> {
        for sq in 0..self.num_squares {
            for c in Corner::ALL {
                if self.corner_cycle[sq][c.index()] != usize::MAX {
                    continue;
                }
                let id = self.cycles.len();
                let mut forward = vec![(sq, c)];
                let mut boundary = false;
                let (mut s, mut k) = (sq, c);
                loop {
                    match self.across(s, k.exit_side(), k) {
                        None => {
                            boundary = true;
                            break;
                        }
                        Some(next) => {
                            debug_assert_eq!(
                                self.gluing[next.0][next.1.enter_side().index()].map(|g| g.other),
                                Some(SideRef::new(s, k.exit_side()))
                            );
                            if next == (sq, c) {
                                break;
                            }
                            forward.push(next);
                            (s, k) = next;
                        }
                    }
                }
                let corners = if boundary {
                    let mut backward = Vec::new();
                    let (mut s, mut k) = (sq, c);
                    while let Some(prev) = self.across(s, k.enter_side(), k) {
                        backward.push(prev);
                        (s, k) = prev;
                    }
                    backward.reverse();
                    backward.extend(forward);
                    backward
                } else {
                    forward
                };
                for &(s, k) in &corners {
                    self.corner_cycle[s][k.index()] = id;
                }
                let cycle = VertexCycle { corners, boundary };
                if !boundary && cycle.corners.len() % 2 == 1 {
                    return Err(SurfaceError::OddConeAngle { square: sq, corner: c, units: cycle.corners.len() });
                }
                if cycle.is_singular() {
                    self.singular.push(id);
                }
                self.cycles.push(cycle);
            }
        }
        Ok(())
    }

    pub fn num_squares(&self) -> usize {
        self.num_squares
    }

    /// Total area (each square has area one).
    pub fn area(&self) -> usize {
        self.num_squares
    }

    pub fn seams(&self) -> &[Seam] {
        &self.seams
    }

    pub fn gluing(&self, square: usize, side: Side) -> Option<Gluing> {
        self.gluing[square][side.index()]
    }

    /// Sides that belong to no seam.
    pub fn free_sides(&self) -> Vec<SideRef> {
        (0..self.num_squares)
            .flat_map(|s| Side::ALL.into_iter().map(move |d| SideRef::new(s, d)))
            .filter(|r| self.gluing[r.square][r.side.index()].is_none())
            .collect()
    }

    pub fn is_closed(&self) -> bool {
        self.gluing.iter().all(|g| g.iter().all(Option::is_some))
    }

    /// All corner identification classes.
    pub fn vertex_cycles(&self) -> &[VertexCycle] {
        &self.cycles
    }

    /// Cycle id containing a given corner.
    pub fn cycle_of(&self, square: usize, corner: Corner) -> usize {
        self.corner_cycle[square][corner.index()]
    }

    /// Cycle ids of the singular points (cone points and boundary corners), in discovery order.
    pub fn singular_points(&self) -> &[usize] {
        &self.singular
    }

    pub fn cone_points(&self) -> Vec<usize> {
        self.singular.iter().copied().filter(|&c| !self.cycles[c].boundary).collect()
    }

    pub fn boundary_corners(&self) -> Vec<usize> {
        self.singular.iter().copied().filter(|&c| self.cycles[c].boundary).collect()
    }

    /// `V − E + F` of the square complex.
    pub fn euler_characteristic(&self) -> i64 {
        let v = self.cycles.len() as i64;
        let e = (self.seams.len() + self.free_sides().len()) as i64;
        v - e + self.num_squares as i64
    }

    /// Curvature sum `Σ_interior (4 − c) + Σ_boundary (2 − c)` in units of π/2; equals `4χ`.
    pub fn curvature_units(&self) -> i64 {
        self.cycles
            .iter()
            .map(|c| if c.boundary { 2 - c.corners.len() as i64 } else { 4 - c.corners.len() as i64 })
            .sum()
    }

    /// Exact Gauss–Bonnet check.
    pub fn gauss_bonnet_holds(&self) -> bool {
        self.curvature_units() == 4 * self.euler_characteristic()
    }

    pub fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.num_squares];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(s) = stack.pop() {
            for g in self.gluing[s].iter().flatten() {
                if !seen[g.other.square] {
                    seen[g.other.square] = true;
                    stack.push(g.other.square);
                }
            }
        }
        seen.into_iter().all(|b| b)
    }

    /// Places squares in a common planar chart by following translation seams from square 0.
    /// Returns `None` when a half-turn seam is needed to reach some square.
    pub fn develop(&self) -> Option<Vec<(i64, i64)>> {
        let mut pos: Vec<Option<(i64, i64)>> = vec![None; self.num_squares];
        pos[0] = Some((0, 0));
        let mut stack = vec![0];
        while let Some(s) = stack.pop() {
            let (x, y) = pos[s].unwrap();
            for d in Side::ALL {
                if let Some(g) = self.gluing[s][d.index()] {
                    if g.iso != Isometry::Translation || pos[g.other.square].is_some() {
                        continue;
                    }
                    let (dx, dy) = d.outward();
                    pos[g.other.square] = Some((x + dx, y + dy));
                    stack.push(g.other.square);
                }
            }
        }
        pos.into_iter().collect()
    }

    /// Serializes to the text format read by [`parse_surface`].
    pub fn to_text(&self) -> String {
        let mut out = format!("squares: {}\n", self.num_squares);
        for s in &self.seams {
            out.push_str(&format!(
                "glue: ({},{}) ({},{}) {}\n",
                s.a.square, s.a.side, s.b.square, s.b.side, s.iso
            ));
        }
        out
    }
}

fn parse_side_ref(tok: &str, line: usize) -> Result<SideRef, SurfaceError> {
    let bad = |msg: String| SurfaceError::Malformed { line, msg };
    let inner = tok
        .strip_prefix('(')
        .and_then(|t| t.strip_suffix(')'))
        .ok_or_else(|| bad(format!("expected `(square,side)`, found `{tok}`")))?;
    let (sq, side) = inner.split_once(',').ok_or_else(|| bad(format!("expected `(square,side)`, found `{tok}`")))?;
    let square = sq.trim().parse::<usize>().map_err(|e| bad(format!("bad square index `{sq}`: {e}")))?;
    let side = side.parse::<Side>().map_err(bad)?;
    Ok(SideRef { square, side })
}

/// Strips comments and splits `key: value` lines; yields `(line number, key, value)`.
pub(crate) fn keyed_lines(text: &str) -> impl Iterator<Item = (usize, &str, &str)> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            return None;
        }
        match line.split_once(':') {
            Some((k, v)) => Some((i + 1, k.trim(), v.trim())),
            None => Some((i + 1, "", line)),
        }
    })
}

fn parse_glue(value: &str, line: usize) -> Result<Seam, SurfaceError> {
    let bad = |msg: String| SurfaceError::Malformed { line, msg };
    let compact: String = value.split_whitespace().collect::<Vec<_>>().join(" ");
    let mut refs = Vec::new();
    let mut rest = compact.as_str();
    for _ in 0..2 {
        let open = rest.find('(').ok_or_else(|| bad("expected two `(square,side)` references".into()))?;
        let close = rest.find(')').ok_or_else(|| bad("unbalanced parenthesis".into()))?;
        if !rest[..open].trim().is_empty() || close < open {
            return Err(bad(format!("unexpected text in `{value}`")));
        }
        let tok: String = rest[open..=close].chars().filter(|c| !c.is_whitespace()).collect();
        refs.push(parse_side_ref(&tok, line)?);
        rest = &rest[close + 1..];
    }
    let iso = match rest.trim().to_ascii_lowercase().replace(['-', '_'], "").as_str() {
        "translation" => Isometry::Translation,
        "halfturn" => Isometry::HalfTurn,
        other => return Err(bad(format!("unknown isometry `{other}`"))),
    };
    Ok(Seam { a: refs[0], b: refs[1], iso })
}

/// Parses a surface description; bundle keys (`rank`, `transport`) are accepted and ignored here.
pub fn parse_surface(text: &str) -> Result<SquareTiledSurface, SurfaceError> {
    let mut squares: Option<usize> = None;
    let mut seams = Vec::new();
    for (line, key, value) in keyed_lines(text) {
        match key {
            "squares" => {
                if squares.is_some() {
                    return Err(SurfaceError::Malformed { line, msg: "duplicate `squares`".into() });
                }
                squares = Some(value.parse().map_err(|e| SurfaceError::Malformed {
                    line,
                    msg: format!("bad square count `{value}`: {e}"),
                })?);
            }
            "glue" => seams.push(parse_glue(value, line)?),
            "rank" | "transport" => {}
            other => {
                return Err(SurfaceError::Malformed { line, msg: format!("unknown key `{other}`") });
            }
        }
    }
    let n = squares.ok_or(SurfaceError::Malformed { line: 0, msg: "missing `squares`".into() })?;
    SquareTiledSurface::new(n, seams)
}

/// Standard surfaces used throughout the test-suite and the command-line tool.
pub mod catalog {
    use super::{Isometry, Seam, Side, SideRef, SquareTiledSurface};

    fn seam(a: (usize, Side), b: (usize, Side), iso: Isometry) -> Seam {
        Seam { a: SideRef::new(a.0, a.1), b: SideRef::new(b.0, b.1), iso }
    }

    fn grid_seams(a: usize, b: usize) -> Vec<Seam> {
        let idx = |x: usize, y: usize| y * a + x;
        let mut seams = Vec::new();
        for y in 0..b {
            for x in 0..a {
                if x + 1 < a {
                    seams.push(seam((idx(x, y), Side::E), (idx(x + 1, y), Side::W), Isometry::Translation));
                }
                if y + 1 < b {
                    seams.push(seam((idx(x, y), Side::N), (idx(x, y + 1), Side::S), Isometry::Translation));
                }
            }
        }
        seams
    }

    /// `a × b` rectangle of unit squares; square `(x, y)` has index `y·a + x`.
    pub fn rectangle(a: usize, b: usize) -> SquareTiledSurface {
        SquareTiledSurface::new(a * b, grid_seams(a, b)).expect("rectangle is valid")
    }

    /// `a × b` flat torus. The horizontal wrap seams are listed first (one per row),
    /// then the vertical ones (one per column), after the interior seams.
    pub fn torus(a: usize, b: usize) -> SquareTiledSurface {
        let idx = |x: usize, y: usize| y * a + x;
        let mut seams = grid_seams(a, b);
        for y in 0..b {
            seams.push(seam((idx(a - 1, y), Side::E), (idx(0, y), Side::W), Isometry::Translation));
        }
        for x in 0..a {
            seams.push(seam((idx(x, b - 1), Side::N), (idx(x, 0), Side::S), Isometry::Translation));
        }
        SquareTiledSurface::new(a * b, seams).expect("torus is valid")
    }

    /// Seam ids of the horizontal and vertical wrap seams of [`torus`].
    pub fn torus_wrap_seams(a: usize, b: usize) -> (Vec<usize>, Vec<usize>) {
        let interior = (a - 1) * b + a * (b - 1);
        ((interior..interior + b).collect(), (interior + b..interior + b + a).collect())
    }

    /// Three squares: 0 at the origin, 1 to its east, 2 to its north.
    pub fn l_shape() -> SquareTiledSurface {
        SquareTiledSurface::new(
            3,
            vec![
                seam((0, Side::E), (1, Side::W), Isometry::Translation),
                seam((0, Side::N), (2, Side::S), Isometry::Translation),
            ],
        )
        .expect("L-shape is valid")
    }

    /// Two squares forming a sphere with four cone points of angle π.
    pub fn pillowcase() -> SquareTiledSurface {
        SquareTiledSurface::new(
            2,
            vec![
                seam((0, Side::E), (1, Side::W), Isometry::Translation),
                seam((1, Side::E), (0, Side::W), Isometry::Translation),
                seam((0, Side::N), (1, Side::N), Isometry::HalfTurn),
                seam((0, Side::S), (1, Side::S), Isometry::HalfTurn),
            ],
        )
        .expect("pillowcase is valid")
    }

    /// Genus-two origami on eight squares with a single cone point of angle 6π:
    /// one horizontal cylinder of length eight, squares 6 and 7 swapped vertically.
    pub fn genus_two_origami() -> SquareTiledSurface {
        let up = [0, 1, 2, 3, 4, 5, 7, 6];
        let mut seams = Vec::new();
        for i in 0..8 {
            seams.push(seam((i, Side::E), ((i + 1) % 8, Side::W), Isometry::Translation));
        }
        for (i, &u) in up.iter().enumerate() {
            seams.push(seam((i, Side::N), (u, Side::S), Isometry::Translation));
        }
        SquareTiledSurface::new(8, seams).expect("origami is valid")
    }
}
