//! Acceptance criteria 1–12. Each test prints one `criterion N: PASS|FAIL` line.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::time::Instant;

use flatlap::bundle::FlatUnitaryBundle;
use flatlap::cli::load_surface;
use flatlap::crsf::{crsf_sum, determinant, TinyConnectionGraph};
use flatlap::discretize::build_graph;
use flatlap::interp::{average, consistency_residual, eigenvector_convergence, restrict, Linearizer};
use flatlap::linalg::eigvalsh;
use flatlap::operators::{assemble_laplacian, divergence, gradient};
use flatlap::potential::{
    corner_flow, convex_barrier, flow_energy_bound, fullplane_asymptotic_check, green_ball, green_halfplane_quartic,
    harnack_diagnostics, quasi_product, HarnackTarget, LatticeDomain,
};
use flatlap::scalar::dot;
use flatlap::spectral::{convergence_table, reference_spectrum, EigenOptions, ReferenceModel};
use flatlap::surface::{catalog, SquareTiledSurface};
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

fn verdict(id: &str, pass: bool, detail: &str) {
    println!("criterion {id}: {} ({detail})", if pass { "PASS" } else { "FAIL" });
}

fn trivial(s: &SquareTiledSurface, r: usize) -> FlatUnitaryBundle<f64> {
    FlatUnitaryBundle::trivial(s, r)
}

fn surface_files() -> Vec<PathBuf> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("surfaces");
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
    files.sort();
    files
}

fn strictly_decreasing(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[1] < w[0])
}

#[test]
fn criterion_01_rectangle_eigenvalue_convergence() {
    let start = Instant::now();
    let s = catalog::rectangle(2, 1);
    let ns = [8, 16, 32, 64];
    let reference = reference_spectrum(ReferenceModel::Rectangle { a: 2.0, b: 1.0 }, 6).unwrap();
    let rows = convergence_table(&s, &trivial(&s, 1), 6, &ns, Some(&reference), &EigenOptions::new(6, 1e-10));
    let elapsed = start.elapsed().as_secs_f64();
    let mut ok = rows.iter().all(|r| !r.flagged);
    let mut detail = String::new();
    for i in 1..=6 {
        let errs: Vec<f64> = rows.iter().filter(|r| r.i == i).map(|r| r.abs_err).collect();
        let exact = reference.value(i - 1);
        if exact == 0.0 {
            ok &= errs.iter().all(|&e| e < 1e-8);
            continue;
        }
        let rel = errs[3] / exact;
        ok &= strictly_decreasing(&errs) && rel <= 0.01;
        detail += &format!("i={i} rel={rel:.2e} ");
        if (2..=4).contains(&i) {
            let order = (errs[2] / errs[3]).log2();
            ok &= order >= 1.5;
            detail += &format!("order={order:.2} ");
        }
    }
    ok &= elapsed < 60.0;
    detail += &format!("time={elapsed:.1}s");
    verdict("1", ok, &detail);
    assert!(ok, "{detail}");
}

#[test]
fn criterion_02_twisted_torus() {
    let (s, b) = FlatUnitaryBundle::<f64>::torus_twist(1, 1, PI, 0.0);
    let ns = [8, 16, 32, 64];
    let rows = convergence_table(&s, &b, 2, &ns, None, &EigenOptions::new(2, 1e-10));
    let lam1: Vec<f64> = ns.iter().map(|&n| rows.iter().find(|r| r.n == n && r.i == 1).unwrap().lambda_n).collect();
    let target = 4.0 * PI * PI * 0.25;
    let rel = (lam1[3] - target).abs() / target;
    let gap = lam1.iter().all(|&l| l >= PI * PI / 2.0);
    let ok = rel <= 0.01 && gap;
    let detail = format!("lambda_1 at n=64 = {:.6}, rel err {rel:.2e}, min lambda_1 = {:.4}", lam1[3], lam1.iter().cloned().fold(f64::MAX, f64::min));
    verdict("2", ok, &detail);
    assert!(ok, "{detail}");
}

#[test]
fn criterion_03_eigenvector_convergence() {
    let s = catalog::rectangle(1, 1);
    let reference = reference_spectrum(ReferenceModel::Rectangle { a: 1.0, b: 1.0 }, 8).unwrap();
    let rows = eigenvector_convergence(&s, &trivial(&s, 1), &reference, 2, &[8, 16, 32, 64], &EigenOptions::new(4, 1e-10)).unwrap();
    let errs: Vec<f64> = rows.iter().map(|r| r.aligned_error).collect();
    let ok = errs[3] <= 5e-2 && strictly_decreasing(&errs) && rows.iter().all(|r| r.separated);
    let detail = format!("errors [{}]", errs.iter().map(|e| format!("{e:.3e}")).collect::<Vec<_>>().join(", "));
    verdict("3", ok, &detail);
    assert!(ok, "{detail}");
}

#[test]
fn criterion_04_energy_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut worst = 0.0f64;
    for s in [catalog::torus(1, 1), catalog::l_shape(), catalog::pillowcase()] {
        let b = trivial(&s, 1);
        for n in [4, 8] {
            let g = build_graph(&s, &b, n).unwrap();
            let lin = Linearizer::new(&g).unwrap();
            let grad = gradient(&g);
            for _ in 0..20 {
                let mut rand_section = || -> Vec<Complex<f64>> {
                    (0..g.dim()).map(|_| Complex::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect()
                };
                let f = average(&rand_section(), &g).unwrap();
                let h = average(&rand_section(), &g).unwrap();
                let (lf, lh) = (lin.linearize(&f).unwrap(), lin.linearize(&h).unwrap());
                let e_lin = lf.dirichlet_energy(&lh).unwrap();
                let e_dis = dot(&grad.matvec(&f), &grad.matvec(&h));
                let scale = 1.0 + dot(&grad.matvec(&f), &grad.matvec(&f)).re + dot(&grad.matvec(&h), &grad.matvec(&h)).re;
                worst = worst.max((e_lin - e_dis).norm() / scale);
            }
        }
    }
    let ok = worst <= 1e-12;
    verdict("4", ok, &format!("max scaled defect {worst:.2e}"));
    assert!(ok);
}

#[test]
fn criterion_05_operator_algebra() {
    let mut cases: Vec<(String, SquareTiledSurface, FlatUnitaryBundle<f64>)> = Vec::new();
    for path in surface_files() {
        let (s, b) = load_surface(&path).unwrap();
        let name = path.file_stem().unwrap().to_string_lossy().to_string();
        if b.rank() == 1 {
            cases.push((format!("{name}/rank2"), s.clone(), trivial(&s, 2)));
        }
        cases.push((name, s, b));
    }
    let mut ok = true;
    let mut detail = String::new();
    for (name, s, b) in &cases {
        let trivial_bundle = b.transports().iter().all(|u| u.sub(&flatlap::linalg::DMat::identity(b.rank())).max_abs() == 0.0);
        for n in [3, 4] {
            let g = build_graph(s, b, n).unwrap();
            let op = assemble_laplacian(&g);
            let factored = divergence(&g).matmul(&gradient(&g));
            let fact = op.matrix().max_abs_diff(&factored);
            let herm = op.hermitian_defect();
            let eigs = eigvalsh(&op.to_dense());
            let r = b.rank();
            let in_range = eigs.iter().all(|&l| l >= -1e-10 && l <= 8.0 * r as f64 + 1e-10);
            let kernel = eigs.iter().filter(|&&l| l.abs() < 1e-9).count();
            let kernel_ok = !(s.is_closed() && trivial_bundle) || kernel == r;
            let good = fact <= 1e-13 && herm <= 1e-13 && in_range && kernel_ok;
            if !good {
                detail += &format!("{name} n={n}: fact={fact:.1e} herm={herm:.1e} range={in_range} kernel={kernel}; ");
            }
            ok &= good;
        }
    }
    if ok {
        detail = format!("{} surface/bundle cases at n = 3, 4", cases.len());
    }
    verdict("5", ok, &detail);
    assert!(ok, "{detail}");
}

#[test]
fn criterion_06_finite_difference_consistency() {
    let s = catalog::rectangle(1, 1);
    let b = trivial(&s, 1);
    let f = |_: usize, x: f64, y: f64| vec![Complex::new((PI * x).cos() * (PI * y).cos(), 0.0)];
    let lf = |_: usize, x: f64, y: f64| vec![Complex::new(2.0 * PI * PI * (PI * x).cos() * (PI * y).cos(), 0.0)];
    let mut reps = Vec::new();
    for n in [8, 16, 32, 64] {
        let g = build_graph(&s, &b, n).unwrap();
        reps.push(consistency_residual(f, lf, &g, &assemble_laplacian(&g)).unwrap());
    }
    let (r32, r64) = (&reps[2], &reps[3]);
    let boundary_ratio = r64.boundary_adjacent / r32.boundary_adjacent;
    let interior_ratio = r64.interior / r32.interior;
    let c_over_n = reps.iter().map(|r| r.max * r.n as f64).fold(0.0, f64::max);
    let ok = (0.4..=0.6).contains(&boundary_ratio) && (0.2..=0.3).contains(&interior_ratio);
    let detail = format!(
        "boundary-adjacent ratio {boundary_ratio:.4} (residual {:.3e} -> {:.3e}), interior ratio {interior_ratio:.4}, max n*residual {c_over_n:.3}",
        r32.boundary_adjacent, r64.boundary_adjacent
    );
    verdict("6", ok, &detail);
    assert!(ok, "{detail}");
}

#[test]
fn criterion_07_corner_flow() {
    let n = 1024;
    let f = corner_flow::<f64>(n);
    let defect = f.divergence_defect();
    let energy = f.energy();
    let bound = flow_energy_bound(n);
    let ok = defect <= 1e-12 && energy <= bound;
    verdict("7", ok, &format!("divergence defect {defect:.2e}, energy {energy:.4} <= {bound:.4}"));
    assert!(ok);
}

#[test]
fn criterion_08_barrier() {
    let mut ok = true;
    let mut detail = String::new();
    for (name, s) in [("l_shape", catalog::l_shape()), ("pillowcase", catalog::pillowcase())] {
        let g = build_graph(&s, &trivial(&s, 1), 16).unwrap();
        for p in 0..g.singular_points().len() {
            let rep = convex_barrier(&g, p).unwrap();
            ok &= rep.holds_on_ball();
            detail += &format!(
                "{name} P{p}: checked {} max {} interior violations {} sphere violations {}; ",
                rep.checked,
                rep.max_laplacian,
                rep.interior_violations.len(),
                rep.sphere_violations.len()
            );
        }
    }
    verdict("8", ok, &detail);
    assert!(ok, "{detail}");
}

#[test]
fn criterion_09a_green_ball_residual_and_maximum() {
    let mut ok = true;
    let mut detail = String::new();
    for n in [16, 64, 128] {
        let g = green_ball::<f64>(n).unwrap();
        let g0 = g.get((0, 0));
        let strict_max = g.points().iter().all(|&z| z == (0, 0) || g.get(z) < g0);
        let good = g.residual <= 1e-10 && g.argmax() == (0, 0) && strict_max && g.values().iter().all(|&v| v >= 0.0);
        ok &= good;
        detail += &format!("n={n} residual {:.1e}; ", g.residual);
    }
    verdict("9a", ok, &detail);
    assert!(ok, "{detail}");
}

#[test]
fn criterion_09b_green_sphere_ratio() {
    let sphere_max = |n: usize| {
        let g = green_ball::<f64>(n).unwrap();
        g.inner_boundary().iter().map(|&z| g.get(z)).fold(0.0, f64::max)
    };
    let ratios: Vec<f64> = [16, 32].iter().map(|&n| sphere_max(2 * n) / sphere_max(n)).collect();
    let ok = ratios.iter().all(|r| (0.35..=0.65).contains(r));
    verdict("9b", ok, &format!("ratios {ratios:.4?}"));
    assert!(ok);
}

#[test]
fn criterion_09c_green_additive_constant() {
    let fit = fullplane_asymptotic_check(128).unwrap();
    let target = -EULER_GAMMA / (2.0 * PI);
    let ok = (fit.constant - target).abs() <= 1e-2;
    let detail = format!(
        "fitted {:.6} vs target {target:.6} (deviation over annulus {:.1e}; -(2γ+3ln2)/(4π) = {:.6})",
        fit.constant,
        fit.deviation,
        -(2.0 * EULER_GAMMA + 3.0 * 2f64.ln()) / (4.0 * PI)
    );
    verdict("9c", ok, &detail);
    assert!(ok, "{detail}");
}

#[test]
fn criterion_09d_halfplane_matches_ball() {
    let m = 16usize;
    let p = (10_000i64, 0i64);
    let ball = LatticeDomain::Ball { radius: m };
    let r = m as i64 + 2;
    let mut inside_max = 0u128;
    let mut outside_min = u128::MAX;
    for a in -r..=r {
        for b in -r..=r {
            let q = quasi_product(p, (p.0 + a, p.1 + b));
            if ball.contains((a, b)) {
                inside_max = inside_max.max(q);
            } else {
                outside_min = outside_min.min(q);
            }
        }
    }
    assert!(inside_max < outside_min, "no quasi-ball coincides with the translated ball");
    let half = green_halfplane_quartic::<f64>(p, inside_max).unwrap();
    let g = green_ball::<f64>(m).unwrap();
    let same_support = half.len() == g.len() && g.points().iter().all(|&(a, b)| half.domain.contains((p.0 + a, p.1 + b)));
    let diff = g.points().iter().map(|&(a, b)| (g.get((a, b)) - half.get((p.0 + a, p.1 + b))).abs()).fold(0.0, f64::max);
    let ok = same_support && diff <= 1e-8 && half.residual <= 1e-10;
    verdict("9d", ok, &format!("P={p:?}, r^4={inside_max}, {} points, max difference {diff:.2e}", half.len()));
    assert!(ok);
}

#[test]
fn criterion_10_harnack() {
    let ns = [8, 16, 32, 64];
    let opts = EigenOptions::new(1, 1e-10);
    let s = catalog::torus(1, 1);
    let mode = |_: usize, x: f64, _: f64| vec![Complex::new((2.0 * PI * x).cos(), 0.0)];
    let torus = harnack_diagnostics(&s, &trivial(&s, 1), &HarnackTarget::Projected { index: 1, field: &mode }, &ns, 0.25, &opts).unwrap();
    let l = catalog::l_shape();
    let lshape = harnack_diagnostics(&l, &trivial(&l, 1), &HarnackTarget::Index(1), &ns, 0.25, &opts).unwrap();
    let tg: Vec<f64> = torus.iter().map(|r| r.max_edge_gap).collect();
    let lg: Vec<f64> = lshape.iter().map(|r| r.max_edge_gap).collect();
    // ‖f‖² = n² gives the continuum amplitude √2 for cos(2πx)
    let worst = torus
        .iter()
        .map(|r| {
            let pred = 2.0 * (PI / r.n as f64).sin() * 2f64.sqrt();
            (r.max_edge_gap - pred).abs() / pred
        })
        .fold(0.0, f64::max);
    let ok = strictly_decreasing(&tg) && strictly_decreasing(&lg) && worst <= 0.1;
    verdict("10", ok, &format!("torus gaps {tg:.4?} (max rel. deviation {worst:.1e}), L-shape gaps {lg:.4?}"));
    assert!(ok);
}

#[test]
fn criterion_11_forman_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut failures = 0;
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let v = rng.gen_range(1..=7);
        let e = rng.gen_range(0..=12);
        let g = TinyConnectionGraph::<f64>::random(&mut rng, v, e).unwrap();
        let d = (determinant(&g) - crsf_sum(&g)).abs();
        worst = worst.max(d);
        if d > 1e-9 {
            failures += 1;
        }
    }
    let ok = failures == 0;
    verdict("11", ok, &format!("200 graphs, {failures} failures, max |det - sum| {worst:.1e}"));
    assert!(ok);
}

#[test]
fn criterion_12_structural_censuses() {
    let mut ok = true;
    let pillow = catalog::pillowcase();
    let mut doubled = Vec::new();
    for n in [2, 3, 4, 8, 16] {
        let g = build_graph(&pillow, &trivial(&pillow, 1), n).unwrap();
        let cones = g.singular_points();
        ok &= cones.len() == 4 && cones.iter().all(|c| c.angle_units == 2 && !c.boundary);
        doubled.push(g.doubled_edge_count());
    }
    ok &= doubled.iter().all(|&d| d == 4);
    let l = catalog::l_shape();
    let mut reflex = Vec::new();
    for n in [2, 4, 8] {
        let g = build_graph(&l, &trivial(&l, 1), n).unwrap();
        let p = g.singular_points().iter().position(|p| p.angle_units == 3).unwrap();
        reflex.push(g.cone_neighbors(p).unwrap().len());
    }
    ok &= reflex.iter().all(|&c| c == 3);
    let files = surface_files();
    let gb = files.iter().all(|f| load_surface(f).unwrap().0.gauss_bonnet_holds());
    ok &= gb;
    // the degree sum check also holds on each subdivision
    let sub_gb = files.iter().all(|f| {
        let (s, b) = load_surface(f).unwrap();
        build_graph(&s, &b, 3).unwrap().lattice().gauss_bonnet_holds()
    });
    ok &= sub_gb;
    let _ = restrict(|_, _, _| vec![Complex::new(1.0, 0.0)], &build_graph(&l, &trivial(&l, 1), 2).unwrap()).unwrap();
    verdict(
        "12",
        ok,
        &format!("pillowcase doubled edges {doubled:?}, L-shape |V_n(reflex)| {reflex:?}, Gauss-Bonnet on {} files: {gb}", files.len()),
    );
    assert!(ok);
}
