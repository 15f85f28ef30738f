use std::f64::consts::PI;

use flatlap::bundle::FlatUnitaryBundle;
use flatlap::crsf::{crsf_sum, determinant, TinyConnectionGraph};
use flatlap::discretize::build_graph;
use flatlap::interp::{average, Linearizer};
use flatlap::linalg::{eigvalsh, DMat};
use flatlap::operators::{assemble_laplacian, divergence, gradient};
use flatlap::potential::corner_flow;
use flatlap::scalar::{cis, dot};
use flatlap::spectral::{lowest_eigenpairs, EigenOptions};
use flatlap::surface::{catalog, parse_surface, Isometry, Seam, Side, SideRef, SquareTiledSurface};
use num_complex::Complex;
use num_rational::Ratio;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Origami from two permutations: `(i,E) ~ (r(i),W)` and `(i,N) ~ (u(i),S)`.
fn origami(r: &[usize], u: &[usize]) -> Result<SquareTiledSurface, flatlap::SurfaceError> {
    let mut seams = Vec::new();
    for (i, &j) in r.iter().enumerate() {
        seams.push(Seam { a: SideRef::new(i, Side::E), b: SideRef::new(j, Side::W), iso: Isometry::Translation });
    }
    for (i, &j) in u.iter().enumerate() {
        seams.push(Seam { a: SideRef::new(i, Side::N), b: SideRef::new(j, Side::S), iso: Isometry::Translation });
    }
    SquareTiledSurface::new(r.len(), seams)
}

fn permutation(len: usize) -> impl Strategy<Value = Vec<usize>> {
    Just((0..len).collect::<Vec<usize>>()).prop_shuffle()
}

fn origami_strategy() -> impl Strategy<Value = (Vec<usize>, Vec<usize>)> {
    (1usize..=5).prop_flat_map(|n| (permutation(n), permutation(n)))
}

fn random_section(seed: u64, len: usize) -> Vec<Complex<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len).map(|_| Complex::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 32, .. ProptestConfig::default() })]

    #[test]
    fn origami_gauss_bonnet((r, u) in origami_strategy()) {
        let s = origami(&r, &u).unwrap();
        prop_assert!(s.gauss_bonnet_holds());
        prop_assert!(s.is_closed());
        let cone_excess: i64 = s.vertex_cycles().iter().map(|c| c.angle_units() as i64 / 4 - 1).sum();
        prop_assert_eq!(cone_excess, -s.euler_characteristic());
        let back = parse_surface(&s.to_text()).unwrap();
        prop_assert_eq!(back.to_text(), s.to_text());
    }

    #[test]
    fn gauge_transform_preserves_spectrum((r, u) in origami_strategy(), seed in any::<u64>()) {
        let s = origami(&r, &u).unwrap();
        prop_assume!(s.is_connected());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let phases: Vec<f64> = (0..s.num_squares()).map(|_| rng.gen_range(0.0..2.0 * PI)).collect();
        let transports = s
            .seams()
            .iter()
            .map(|seam| DMat::from_row_major(1, 1, vec![cis(phases[seam.b.square] - phases[seam.a.square])]))
            .collect();
        let gauged = FlatUnitaryBundle::new(&s, 1, transports).unwrap();
        let n = 2;
        let a: Vec<f64> = eigvalsh(&assemble_laplacian(&build_graph(&s, &gauged, n).unwrap()).to_dense());
        let b: Vec<f64> = eigvalsh(&assemble_laplacian(&build_graph(&s, &FlatUnitaryBundle::<f64>::trivial(&s, 1), n).unwrap()).to_dense());
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn twisted_torus_operator_algebra(alpha in 0.0..2.0 * PI, beta in 0.0..2.0 * PI, n in 2usize..7, seed in any::<u64>()) {
        let (s, b) = FlatUnitaryBundle::<f64>::torus_twist(2, 1, alpha, beta);
        let g = build_graph(&s, &b, n).unwrap();
        let op = assemble_laplacian(&g);
        prop_assert!(op.hermitian_defect() <= 1e-14);
        prop_assert!(op.matrix().max_abs_diff(&divergence(&g).matmul(&gradient(&g))) <= 1e-13);
        let f = random_section(seed, g.dim());
        prop_assert!(op.rayleigh(&f).unwrap() >= -1e-12);
    }

    #[test]
    fn averaging_idempotent_and_energy_identity(which in 0usize..3, n in 2usize..7, seed in any::<u64>()) {
        let (s, b) = match which {
            0 => (catalog::l_shape(), FlatUnitaryBundle::trivial(&catalog::l_shape(), 2)),
            1 => (catalog::pillowcase(), FlatUnitaryBundle::trivial(&catalog::pillowcase(), 1)),
            _ => FlatUnitaryBundle::torus_twist(1, 2, 1.3, 0.4),
        };
        let g = build_graph(&s, &b, n).unwrap();
        let f = average(&random_section(seed, g.dim()), &g).unwrap();
        let h = average(&random_section(seed ^ 0x5555, g.dim()), &g).unwrap();
        prop_assert_eq!(average(&f, &g).unwrap(), f.clone());
        let lin = Linearizer::new(&g).unwrap();
        let e = lin.linearize(&f).unwrap().dirichlet_energy(&lin.linearize(&h).unwrap()).unwrap();
        let grad = gradient(&g);
        let d = dot(&grad.matvec(&f), &grad.matvec(&h));
        prop_assert!((e - d).norm() <= 1e-12 * (1.0 + e.norm()));
    }

    #[test]
    fn forman_identity_and_gauge(v in 1usize..=6, e in 0usize..=10, seed in any::<u64>(), theta in 0.0..2.0 * PI) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = TinyConnectionGraph::<f64>::random(&mut rng, v, e).unwrap();
        let d = determinant(&g);
        prop_assert!((d - crsf_sum(&g)).abs() <= 1e-9);
        let h = g.gauge(rng.gen_range(0..v), theta);
        prop_assert!((determinant(&h) - d).abs() <= 1e-9);
        prop_assert!((crsf_sum(&h) - d).abs() <= 1e-9);
    }

    #[test]
    fn flow_divergence_exact(n in 1usize..40) {
        let f = corner_flow::<Ratio<i64>>(n);
        prop_assert_eq!(f.divergence_defect(), Ratio::from_integer(0));
        for a in 0..n as i64 {
            let b = n as i64 - 1 - a;
            prop_assert_eq!(f.value((a, b), (a + 1, b)), -f.value((a + 1, b), (a, b)));
        }
    }
}

#[test]
fn single_precision_matches_double() {
    let s = catalog::l_shape();
    let g32 = build_graph(&s, &FlatUnitaryBundle::<f32>::trivial(&s, 1), 6).unwrap();
    let g64 = build_graph(&s, &FlatUnitaryBundle::<f64>::trivial(&s, 1), 6).unwrap();
    let e32 = lowest_eigenpairs(&assemble_laplacian(&g32), 4, 1e-4).unwrap();
    let e64 = lowest_eigenpairs(&assemble_laplacian(&g64), 4, 1e-10).unwrap();
    for (a, b) in e32.values.iter().zip(&e64.values) {
        assert!((*a as f64 - b).abs() < 1e-4, "{a} vs {b}");
    }
    let f: Vec<Complex<f32>> = (0..g32.dim()).map(|i| Complex::new((i as f32 * 0.37).sin(), (i as f32 * 0.11).cos())).collect();
    let f = average(&f, &g32).unwrap();
    let lin = Linearizer::new(&g32).unwrap();
    let u = lin.linearize(&f).unwrap();
    let e = u.dirichlet_energy(&u).unwrap();
    let gf = gradient(&g32).matvec(&f);
    let d = dot(&gf, &gf);
    assert!((e - d).norm() <= 1e-4 * (1.0 + e.norm()));
    let _ = EigenOptions::<f32>::new(1, 1e-4);
}
