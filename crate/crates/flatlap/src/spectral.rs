//! Lowest eigenpairs of assembled operators, reference spectra, convergence studies and
//! Richardson extrapolation.

use std::cmp::Ordering;

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::bundle::FlatUnitaryBundle;
use crate::discretize::{build_graph, DiscretizeError};
use crate::linalg::{eigh, CsrMatrix, DMat, EnvelopeCholesky, LinalgError};
use crate::operators::{assemble_laplacian, SparseHermitianOperator};
use crate::scalar::{dot, norm, Field, Real};
use crate::surface::SquareTiledSurface;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("requested {k} eigenpairs of a {dim}-dimensional operator")]
    TooMany { k: usize, dim: usize },
    #[error("tolerance must be positive")]
    BadTolerance,
    #[error("eigensolver did not converge after {iterations} restarts (worst residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("linear algebra failure: {0}")]
    Linalg(#[from] LinalgError),
    #[error("discretization failed: {0}")]
    Discretize(#[from] DiscretizeError),
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),
    #[error("unsupported reference model: {0}")]
    UnsupportedModel(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Dense,
    Iterative,
}

#[derive(Clone, Debug)]
pub struct EigenOptions<T> {
    pub k: usize,
    pub tol: T,
    /// Operators of at most this dimension are diagonalized densely.
    pub dense_threshold: usize,
    pub seed: u64,
    pub max_restarts: usize,
}

impl<T: Real> EigenOptions<T> {
    pub fn new(k: usize, tol: T) -> Self {
        EigenOptions { k, tol, dense_threshold: 2000, seed: 42, max_restarts: 60 }
    }
}

/// Eigenpairs in ascending order; vectors have unit norm and a fixed phase.
#[derive(Clone, Debug)]
pub struct Eigenpairs<T: Real> {
    pub values: Vec<T>,
    pub vectors: Vec<Vec<Complex<T>>>,
    pub residuals: Vec<T>,
    pub solver: SolverKind,
    pub iterations: usize,
}

/// Rotates the first coordinate of non-negligible modulus onto the positive real axis.
pub fn normalize_phase<T: Real>(v: &mut [Complex<T>]) {
    let max = v.iter().map(|z| z.norm()).fold(T::zero(), T::max);
    let cut = max * T::lit(1e-8);
    if let Some(z) = v.iter().find(|z| z.norm() > cut).copied() {
        let ph = z.conj() / z.norm();
        for x in v.iter_mut() {
            *x *= ph;
        }
    }
}

fn fingerprint_cmp<T: Real>(a: &[Complex<T>], b: &[Complex<T>]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        let o = x.re.partial_cmp(&y.re).unwrap_or(Ordering::Equal).then(x.im.partial_cmp(&y.im).unwrap_or(Ordering::Equal));
        if o != Ordering::Equal {
            return o;
        }
    }
    Ordering::Equal
}

fn residual<T: Real>(a: &CsrMatrix<Complex<T>>, x: &[Complex<T>], lambda: T) -> T {
    let ax = a.matvec(x);
    let r: Vec<Complex<T>> = ax.iter().zip(x).map(|(&p, &q)| p - q * lambda).collect();
    norm(&r) / norm(x)
}

/// Sorts ascending, breaking near-ties (clusters) by the phase-normalized vector fingerprint.
fn finalize<T: Real>(mut pairs: Vec<(T, Vec<Complex<T>>)>, a: &CsrMatrix<Complex<T>>, solver: SolverKind, iterations: usize) -> Eigenpairs<T> {
    for (_, v) in pairs.iter_mut() {
        let nv = norm(v).recip();
        for z in v.iter_mut() {
            *z = z.scale(nv);
        }
        normalize_phase(v);
    }
    pairs.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap_or(Ordering::Equal));
    let tie = T::lit(1e-10);
    let mut start = 0;
    while start < pairs.len() {
        let mut end = start + 1;
        while end < pairs.len() && pairs[end].0 - pairs[end - 1].0 <= tie * T::one().max(pairs[end].0.abs()) {
            end += 1;
        }
        pairs[start..end].sort_by(|x, y| fingerprint_cmp(&x.1, &y.1));
        start = end;
    }
    let residuals = pairs.iter().map(|(l, v)| residual(a, v, *l)).collect();
    let (values, vectors) = pairs.into_iter().unzip();
    Eigenpairs { values, vectors, residuals, solver, iterations }
}

/// The `k` smallest eigenpairs with default options (seed 42, dense below dimension 2000).
pub fn lowest_eigenpairs<T: Real>(op: &SparseHermitianOperator<T>, k: usize, tol: T) -> Result<Eigenpairs<T>, SpectralError> {
    lowest_eigenpairs_with(op.matrix(), &EigenOptions::new(k, tol))
}

pub fn lowest_eigenpairs_with<T: Real>(a: &CsrMatrix<Complex<T>>, opts: &EigenOptions<T>) -> Result<Eigenpairs<T>, SpectralError> {
    let dim = a.nrows();
    if opts.k > dim {
        return Err(SpectralError::TooMany { k: opts.k, dim });
    }
    if !(opts.tol > T::zero()) {
        return Err(SpectralError::BadTolerance);
    }
    if opts.k == 0 {
        return Ok(Eigenpairs { values: vec![], vectors: vec![], residuals: vec![], solver: SolverKind::Dense, iterations: 0 });
    }
    if dim <= opts.dense_threshold {
        let eig = eigh(&a.to_dense(), opts.k);
        let pairs = (0..opts.k).map(|j| (eig.values[j], eig.vectors.column(j))).collect();
        let out = finalize(pairs, a, SolverKind::Dense, 1);
        let worst = out.residuals.iter().copied().fold(T::zero(), T::max);
        if !(worst <= opts.tol) {
            return Err(SpectralError::NoConvergence { iterations: 1, residual: worst.as_f64() });
        }
        return Ok(out);
    }
    block_krylov(a, opts)
}

fn random_vector<T: Real>(rng: &mut ChaCha8Rng, n: usize) -> Vec<Complex<T>> {
    (0..n).map(|_| Complex::new(T::lit(rng.gen_range(-1.0..1.0)), T::lit(rng.gen_range(-1.0..1.0)))).collect()
}

/// Orthogonalizes `w` against `basis` (two passes) and normalizes; `None` if it collapses.
fn orthonormalize_against<T: Real>(basis: &[Vec<Complex<T>>], mut w: Vec<Complex<T>>) -> Option<Vec<Complex<T>>> {
    let before = norm(&w);
    if before == T::zero() {
        return None;
    }
    for _ in 0..2 {
        let coeffs: Vec<Complex<T>> = basis.par_iter().map(|v| dot(&w, v)).collect();
        for (v, c) in basis.iter().zip(coeffs) {
            for (wi, &vi) in w.iter_mut().zip(v) {
                *wi -= c * vi;
            }
        }
    }
    let after = norm(&w);
    if after <= before * T::lit(1e-10) || after == T::zero() {
        return None;
    }
    let s = after.recip();
    Some(w.into_iter().map(|z| z.scale(s)).collect())
}

/// Shift-and-invert block Krylov iteration with full reorthogonalization and Rayleigh–Ritz
/// extraction on the original operator.
fn block_krylov<T: Real>(a: &CsrMatrix<Complex<T>>, opts: &EigenOptions<T>) -> Result<Eigenpairs<T>, SpectralError> {
    let n = a.nrows();
    let k = opts.k;
    let block = (k + 3).max(6).min(n);
    let steps = 8;
    let scale = a.norm_inf().max(T::one());
    let shift = (-a.gershgorin_lower()).max(T::zero()) + T::epsilon().sqrt() * scale;
    let factor = EnvelopeCholesky::factor(&a.shifted(Complex::new(shift, T::zero())))?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut start: Vec<Vec<Complex<T>>> = (0..block).map(|_| random_vector(&mut rng, n)).collect();
    let mut worst = T::infinity();
    for restart in 0..opts.max_restarts {
        let mut basis: Vec<Vec<Complex<T>>> = Vec::new();
        let mut current: Vec<Vec<Complex<T>>> = Vec::new();
        for w in start.drain(..) {
            if let Some(v) = orthonormalize_against(&basis_and(&basis, &current), w) {
                current.push(v);
            }
        }
        for step in 0..steps {
            basis.append(&mut current);
            if basis.len() >= n || step + 1 == steps {
                break;
            }
            let last = &basis[basis.len() - block.min(basis.len())..];
            let images: Vec<Vec<Complex<T>>> = last.par_iter().map(|v| factor.solve(v)).collect();
            for w in images {
                let cand = orthonormalize_against(&basis_and(&basis, &current), w)
                    .or_else(|| orthonormalize_against(&basis_and(&basis, &current), random_vector(&mut rng, n)));
                if let Some(v) = cand {
                    current.push(v);
                }
            }
            if current.is_empty() {
                break;
            }
        }
        let m = basis.len();
        let images: Vec<Vec<Complex<T>>> = basis.par_iter().map(|v| a.matvec(v)).collect();
        let mut h = DMat::zeros(m, m);
        for i in 0..m {
            for j in 0..=i {
                let hij = dot(&images[j], &basis[i]);
                let hji = dot(&images[i], &basis[j]);
                let v = (hij + hji.conj()).scale(T::lit(0.5));
                h[(i, j)] = v;
                h[(j, i)] = v.conj();
            }
        }
        let want = block.min(m);
        let eig = eigh(&h, want);
        let mut ritz = Vec::with_capacity(want);
        let mut res = Vec::with_capacity(want);
        for j in 0..want {
            let mut x = vec![Complex::new(T::zero(), T::zero()); n];
            let mut ax = x.clone();
            for i in 0..m {
                let c = eig.vectors[(i, j)];
                for (xi, &bi) in x.iter_mut().zip(&basis[i]) {
                    *xi += c * bi;
                }
                for (yi, &ai) in ax.iter_mut().zip(&images[i]) {
                    *yi += c * ai;
                }
            }
            let theta = eig.values[j];
            let r: Vec<Complex<T>> = ax.iter().zip(&x).map(|(&p, &q)| p - q * theta).collect();
            res.push(norm(&r) / norm(&x));
            ritz.push((theta, x));
        }
        worst = res[..k].iter().copied().fold(T::zero(), T::max);
        if worst <= opts.tol * T::lit(0.5) || (m >= n && worst <= opts.tol) {
            ritz.truncate(k);
            let out = finalize(ritz, a, SolverKind::Iterative, restart + 1);
            let final_worst = out.residuals.iter().copied().fold(T::zero(), T::max);
            if final_worst <= opts.tol {
                return Ok(out);
            }
            return Err(SpectralError::NoConvergence { iterations: restart + 1, residual: final_worst.as_f64() });
        }
        start = ritz.into_iter().map(|(_, x)| x).collect();
    }
    Err(SpectralError::NoConvergence { iterations: opts.max_restarts, residual: worst.as_f64() })
}

fn basis_and<T: Clone>(a: &[T], b: &[T]) -> Vec<T> {
    let mut v = a.to_vec();
    v.extend_from_slice(b);
    v
}

/// Rescaled spectrum `n² λ` of one discretization.
#[derive(Clone, Debug, Serialize)]
pub struct SpectralReport {
    pub n: usize,
    pub k: usize,
    pub rescaled_eigs: Vec<f64>,
    pub residual_norms: Vec<f64>,
    pub solver: SolverKind,
    pub iterations: usize,
    pub tolerance: f64,
}

/// Eigenpairs of `Δ` on the `n`-th discretization together with the rescaled report.
pub fn spectrum<T: Real>(
    surface: &SquareTiledSurface,
    bundle: &FlatUnitaryBundle<T>,
    n: usize,
    opts: &EigenOptions<T>,
) -> Result<(SpectralReport, Eigenpairs<T>), SpectralError> {
    let g = build_graph(surface, bundle, n)?;
    let op = assemble_laplacian(&g);
    let pairs = lowest_eigenpairs_with(op.matrix(), opts)?;
    let n2 = T::count(n * n);
    let report = SpectralReport {
        n,
        k: opts.k,
        rescaled_eigs: pairs.values.iter().map(|&l| (l * n2).as_f64()).collect(),
        residual_norms: pairs.residuals.iter().map(|r| r.as_f64()).collect(),
        solver: pairs.solver,
        iterations: pairs.iterations,
        tolerance: opts.tol.as_f64(),
    };
    Ok((report, pairs))
}

/// Analytically solvable continuum models.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum ReferenceModel {
    /// Neumann Laplacian on an `a × b` rectangle.
    Rectangle { a: f64, b: f64 },
    /// Flat `a × b` torus with a rank-one bundle of monodromies `e^{iα}`, `e^{iβ}`.
    Torus { a: f64, b: f64, alpha: f64, beta: f64 },
}

impl std::str::FromStr for ReferenceModel {
    type Err = SpectralError;

    /// `rectangle:a,b` or `torus:a,b,alpha,beta`.
    fn from_str(s: &str) -> Result<Self, SpectralError> {
        let bad = || SpectralError::UnsupportedModel(s.to_string());
        let (kind, args) = s.split_once(':').ok_or_else(bad)?;
        let nums = args.split(',').map(|t| t.trim().parse::<f64>()).collect::<Result<Vec<_>, _>>().map_err(|_| bad())?;
        let model = match (kind.trim(), nums.as_slice()) {
            ("rectangle", &[a, b]) => ReferenceModel::Rectangle { a, b },
            ("torus", &[a, b]) => ReferenceModel::Torus { a, b, alpha: 0.0, beta: 0.0 },
            ("torus", &[a, b, alpha, beta]) => ReferenceModel::Torus { a, b, alpha, beta },
            _ => return Err(bad()),
        };
        model.check()?;
        Ok(model)
    }
}

impl ReferenceModel {
    fn check(&self) -> Result<(), SpectralError> {
        let tau = 2.0 * std::f64::consts::PI;
        let ok = match *self {
            ReferenceModel::Rectangle { a, b } => a > 0.0 && b > 0.0,
            ReferenceModel::Torus { a, b, alpha, beta } => {
                a > 0.0 && b > 0.0 && (0.0..tau).contains(&alpha) && (0.0..tau).contains(&beta)
            }
        };
        if ok {
            Ok(())
        } else {
            Err(SpectralError::UnsupportedModel(format!("{self:?}")))
        }
    }
}

/// One continuum eigenfunction: indices `(p, q)` and its eigenvalue.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Mode {
    pub p: i64,
    pub q: i64,
    pub value: f64,
}

/// The lowest `k` continuum eigenvalues of a reference model, with multiplicity.
#[derive(Clone, Debug, Serialize)]
pub struct ReferenceSpectrum {
    pub model: ReferenceModel,
    pub modes: Vec<Mode>,
}

impl ReferenceSpectrum {
    pub fn values(&self) -> Vec<f64> {
        self.modes.iter().map(|m| m.value).collect()
    }

    /// Groups of equal eigenvalues as `(first index, multiplicity)`, 0-based.
    pub fn groups(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        let mut start = 0;
        while start < self.modes.len() {
            let v = self.modes[start].value;
            let mut end = start + 1;
            while end < self.modes.len() && (self.modes[end].value - v).abs() <= 1e-9 * v.abs().max(1.0) {
                end += 1;
            }
            out.push((start, end - start));
            start = end;
        }
        out
    }

    /// Value of mode `m` at global chart position `(x, y)`, normalized in L².
    pub fn eigenfunction(&self, m: &Mode, x: f64, y: f64) -> Complex<f64> {
        use std::f64::consts::PI;
        match self.model {
            ReferenceModel::Rectangle { a, b } => {
                let ep = if m.p == 0 { 1.0 } else { 2.0 };
                let eq = if m.q == 0 { 1.0 } else { 2.0 };
                let c = (ep * eq / (a * b)).sqrt();
                Complex::new(c * (m.p as f64 * PI * x / a).cos() * (m.q as f64 * PI * y / b).cos(), 0.0)
            }
            ReferenceModel::Torus { a, b, alpha, beta } => {
                let kx = (2.0 * PI * m.p as f64 - alpha) / a;
                let ky = (2.0 * PI * m.q as f64 - beta) / b;
                Complex::from_polar(1.0 / (a * b).sqrt(), kx * x + ky * y)
            }
        }
    }

    /// Continuum Laplacian `−Δ` of the eigenfunction equals `value ·` eigenfunction.
    pub fn value(&self, i: usize) -> f64 {
        self.modes[i].value
    }
}

fn mode_value(model: &ReferenceModel, p: i64, q: i64) -> f64 {
    use std::f64::consts::PI;
    match *model {
        ReferenceModel::Rectangle { a, b } => PI * PI * ((p * p) as f64 / (a * a) + (q * q) as f64 / (b * b)),
        ReferenceModel::Torus { a, b, alpha, beta } => {
            let x = p as f64 - alpha / (2.0 * PI);
            let y = q as f64 - beta / (2.0 * PI);
            4.0 * PI * PI * (x * x / (a * a) + y * y / (b * b))
        }
    }
}

/// First `k` eigenvalues with multiplicity, sorted (ties by `(p, q)`).
pub fn reference_spectrum(model: ReferenceModel, k: usize) -> Result<ReferenceSpectrum, SpectralError> {
    model.check()?;
    let (a, b, torus) = match model {
        ReferenceModel::Rectangle { a, b } => (a, b, false),
        ReferenceModel::Torus { a, b, .. } => (a, b, true),
    };
    let unit = if torus { 2.0 * std::f64::consts::PI } else { std::f64::consts::PI };
    let mut bound = unit * unit / (a * a).max(b * b);
    loop {
        let pmax = (a * bound.sqrt() / unit).ceil() as i64 + 1;
        let qmax = (b * bound.sqrt() / unit).ceil() as i64 + 1;
        let lo = |m: i64| if torus { -m } else { 0 };
        let mut modes: Vec<Mode> = (lo(pmax)..=pmax)
            .flat_map(|p| (lo(qmax)..=qmax).map(move |q| (p, q)))
            .map(|(p, q)| Mode { p, q, value: mode_value(&model, p, q) })
            .filter(|m| m.value <= bound)
            .collect();
        if modes.len() >= k {
            modes.sort_by(|x, y| x.value.partial_cmp(&y.value).unwrap().then((x.p, x.q).cmp(&(y.p, y.q))));
            modes.truncate(k);
            return Ok(ReferenceSpectrum { model, modes });
        }
        bound *= 2.0;
    }
}

/// Result of a Richardson fit `λ^n ≈ λ + c n^{−p}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Extrapolation {
    pub value: f64,
    pub order: f64,
    pub coefficient: f64,
    pub residual: f64,
    pub uncertainty: f64,
}

fn fit_fixed_order(points: &[(f64, f64)], p: f64) -> Option<(f64, f64, f64)> {
    let m = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|&(n, _)| n.powf(-p)).collect();
    let sx: f64 = xs.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sy: f64 = points.iter().map(|&(_, y)| y).sum();
    let sxy: f64 = xs.iter().zip(points).map(|(x, &(_, y))| x * y).sum();
    let det = m * sxx - sx * sx;
    if !(det.abs() > 1e-300) {
        return None;
    }
    let c = (m * sxy - sx * sy) / det;
    let lam = (sy - c * sx) / m;
    let res = xs.iter().zip(points).map(|(x, &(_, y))| (y - lam - c * x).powi(2)).sum::<f64>().sqrt();
    Some((lam, c, res))
}

fn fit_free_order(points: &[(f64, f64)], guess: f64) -> Option<(f64, f64, f64, f64)> {
    let f = |p: f64| fit_fixed_order(points, p).map_or(f64::INFINITY, |r| r.2);
    // coarse scan for a bracket, then golden section
    let grid: Vec<f64> = (0..=120).map(|i| 0.25 + 0.05 * i as f64).collect();
    let mut best = guess.clamp(0.25, 6.25);
    let mut bestv = f(best);
    for &p in &grid {
        let v = f(p);
        if v < bestv {
            best = p;
            bestv = v;
        }
    }
    let (mut lo, mut hi) = ((best - 0.05).max(0.2), best + 0.05);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..200 {
        if hi - lo < 1e-15 * hi.max(1.0) {
            break;
        }
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        }
    }
    let p = 0.5 * (lo + hi);
    fit_fixed_order(points, p).map(|(l, c, r)| (l, c, r, p))
}

/// Least-squares Richardson extrapolation with a free order (searched near `order_guess`).
/// With three points the fit is exact; the uncertainty compares against the fit without the
/// coarsest point (or against the fixed-order fit when only three points are available).
pub fn richardson_extrapolate(values: &[(usize, f64)], order_guess: f64) -> Result<Extrapolation, SpectralError> {
    if values.len() < 3 {
        return Err(SpectralError::DegenerateFit(format!("need at least 3 points, got {}", values.len())));
    }
    let pts: Vec<(f64, f64)> = values.iter().map(|&(n, l)| (n as f64, l)).collect();
    if pts.iter().any(|p| !p.1.is_finite() || p.0 <= 0.0) {
        return Err(SpectralError::DegenerateFit("non-finite data".into()));
    }
    let (value, coefficient, residual, order) =
        fit_free_order(&pts, order_guess).ok_or_else(|| SpectralError::DegenerateFit("singular system".into()))?;
    let mut sorted = pts.clone();
    sorted.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let alt = if sorted.len() >= 4 {
        fit_free_order(&sorted[1..], order).map(|r| r.0)
    } else {
        fit_fixed_order(&sorted[1..], order_guess).map(|r| r.0)
    };
    let uncertainty = alt.map_or(f64::INFINITY, |v| (v - value).abs()).max(residual);
    if !value.is_finite() {
        return Err(SpectralError::DegenerateFit("non-finite extrapolation".into()));
    }
    Ok(Extrapolation { value, order, coefficient, residual, uncertainty })
}

/// One row of a convergence table (`i` is 1-based).
#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceRow {
    pub n: usize,
    pub i: usize,
    pub lambda_n: f64,
    pub lambda_ref: f64,
    pub abs_err: f64,
    pub order: Option<f64>,
    pub flagged: bool,
}

/// Rescaled eigenvalues for every `n` (computed in parallel), compared with the reference
/// spectrum when given, otherwise with per-index Richardson extrapolations.
pub fn convergence_table<T: Real>(
    surface: &SquareTiledSurface,
    bundle: &FlatUnitaryBundle<T>,
    k: usize,
    ns: &[usize],
    reference: Option<&ReferenceSpectrum>,
    opts: &EigenOptions<T>,
) -> Vec<ConvergenceRow> {
    let opts = EigenOptions { k, ..opts.clone() };
    let spectra: Vec<Option<Vec<f64>>> = ns
        .par_iter()
        .map(|&n| spectrum(surface, bundle, n, &opts).ok().map(|(r, _)| r.rescaled_eigs))
        .collect();
    let mut rows = Vec::new();
    for i in 0..k {
        let refv = match reference {
            Some(r) if i < r.modes.len() => r.modes[i].value,
            Some(_) => f64::NAN,
            None => {
                let pts: Vec<(usize, f64)> =
                    ns.iter().zip(&spectra).filter_map(|(&n, s)| s.as_ref().map(|s| (n, s[i]))).collect();
                richardson_extrapolate(&pts, 2.0).map_or(f64::NAN, |e| e.value)
            }
        };
        let mut prev: Option<(usize, f64)> = None;
        for (&n, s) in ns.iter().zip(&spectra) {
            let (lambda_n, flagged) = match s {
                Some(s) => (s[i], false),
                None => (f64::NAN, true),
            };
            let abs_err = (lambda_n - refv).abs();
            let order = prev.and_then(|(pn, pe)| {
                let o = (pe / abs_err).ln() / (n as f64 / pn as f64).ln();
                o.is_finite().then_some(o)
            });
            rows.push(ConvergenceRow { n, i: i + 1, lambda_n, lambda_ref: refv, abs_err, order, flagged });
            prev = Some((n, abs_err));
        }
    }
    rows.sort_by_key(|r| (r.n, r.i));
    rows
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretize::build_graph;
    use crate::linalg::eigvalsh;
    use crate::surface::catalog;
    use std::f64::consts::PI;

    #[test]
    fn dense_torus_kernel() {
        let s = catalog::torus(1, 1);
        let g = build_graph(&s, &FlatUnitaryBundle::<f64>::trivial(&s, 1), 8).unwrap();
        let op = assemble_laplacian(&g);
        let e = lowest_eigenpairs(&op, 1, 1e-10).unwrap();
        assert!(e.values[0].abs() < 1e-12);
        assert!(e.residuals[0] <= 1e-10);
        assert_eq!(e.solver, SolverKind::Dense);
    }

    #[test]
    fn iterative_matches_dense() {
        let s = catalog::l_shape();
        let n = 8;
        let g = build_graph(&s, &FlatUnitaryBundle::<f64>::trivial(&s, 1), n).unwrap();
        let op = assemble_laplacian(&g);
        let dense = eigvalsh(&op.to_dense());
        let mut opts = EigenOptions::new(7, 1e-10);
        opts.dense_threshold = 0;
        let it = lowest_eigenpairs_with(op.matrix(), &opts).unwrap();
        assert_eq!(it.solver, SolverKind::Iterative);
        for (a, b) in it.values.iter().zip(&dense) {
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
        assert!(it.residuals.iter().all(|&r| r <= 1e-10));
    }

    #[test]
    fn iterative_handles_multiplicity() {
        let (s, b) = FlatUnitaryBundle::torus_twist(1, 1, 0.0f64, 0.0);
        let g = build_graph(&s, &b, 12).unwrap();
        let op = assemble_laplacian(&g);
        let mut opts = EigenOptions::new(9, 1e-10);
        opts.dense_threshold = 0;
        let it = lowest_eigenpairs_with(op.matrix(), &opts).unwrap();
        let dense = eigvalsh(&op.to_dense());
        for (a, b) in it.values.iter().zip(&dense) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn reference_examples() {
        let r = reference_spectrum(ReferenceModel::Rectangle { a: 1.0, b: 1.0 }, 4).unwrap();
        let expect = [0.0, PI * PI, PI * PI, 2.0 * PI * PI];
        for (x, y) in r.values().iter().zip(expect) {
            assert!((x - y).abs() < 1e-12);
        }
        assert_eq!(r.groups(), vec![(0, 1), (1, 2), (3, 1)]);
        let t = reference_spectrum(ReferenceModel::Torus { a: 1.0, b: 1.0, alpha: 0.0, beta: 0.0 }, 5).unwrap();
        assert_eq!(t.values()[0], 0.0);
        assert!(t.values()[1..].iter().all(|&v| (v - 4.0 * PI * PI).abs() < 1e-12));
        let m = reference_spectrum(ReferenceModel::Torus { a: 1.0, b: 1.0, alpha: PI, beta: 0.0 }, 2).unwrap();
        assert!(m.values().iter().all(|&v| (v - PI * PI).abs() < 1e-12));
        assert!("torus:1,1,7,0".parse::<ReferenceModel>().is_err());
        assert_eq!("rectangle:2,1".parse::<ReferenceModel>().unwrap(), ReferenceModel::Rectangle { a: 2.0, b: 1.0 });
    }

    #[test]
    fn richardson_exact_model() {
        let data: Vec<(usize, f64)> = [8, 16, 32, 64].iter().map(|&n| (n, 1.5 + 3.0 / (n * n) as f64)).collect();
        let e = richardson_extrapolate(&data, 1.7).unwrap();
        assert!((e.value - 1.5).abs() < 1e-10, "{e:?}");
        assert!((e.order - 2.0).abs() < 1e-6);
        assert!(richardson_extrapolate(&data[..2], 2.0).is_err());
    }

    #[test]
    fn tied_eigenvectors_are_deterministic() {
        let s = catalog::torus(1, 1);
        let g = build_graph(&s, &FlatUnitaryBundle::<f64>::trivial(&s, 1), 6).unwrap();
        let op = assemble_laplacian(&g);
        let a = lowest_eigenpairs(&op, 5, 1e-10).unwrap();
        let b = lowest_eigenpairs(&op, 5, 1e-10).unwrap();
        assert_eq!(a.values, b.values);
        assert_eq!(a.vectors, b.vectors);
    }
}
