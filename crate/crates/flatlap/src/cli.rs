//! Command-line front end: parses flags and an optional TOML config, runs one experiment and
//! writes `<command>.csv` plus a `<command>.json` sidecar into the output directory.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bundle::{parse_bundle, FlatUnitaryBundle};
use crate::crsf::{crsf_sum, determinant, parse_graph, TinyConnectionGraph};
use crate::discretize::build_graph;
use crate::interp::{average, consistency_residual, eigenvector_convergence, Linearizer, ReferenceField};
use crate::operators::{assemble_laplacian, gradient};
use crate::potential::{
    convex_barrier, corner_flow, flow_energy_bound, fullplane_asymptotic_check, green_ball, green_halfplane,
    harnack_diagnostics, HarnackTarget,
};
use crate::scalar::dot;
use crate::spectral::{convergence_table, reference_spectrum, spectrum, EigenOptions, ReferenceModel};
use crate::surface::{parse_surface, SquareTiledSurface};

/// Version string in `git describe` style.
pub const VERSION: &str = match option_env!("FLATLAP_GIT_DESCRIBE") {
    Some(v) => v,
    None => concat!("v", env!("CARGO_PKG_VERSION")),
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Validate,
    Spectrum,
    Converge,
    Eigvec,
    InterpCheck,
    Consistency,
    Harnack,
    Green,
    Flow,
    Barrier,
    CrsfCheck,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Validate => "validate",
            Command::Spectrum => "spectrum",
            Command::Converge => "converge",
            Command::Eigvec => "eigvec",
            Command::InterpCheck => "interp-check",
            Command::Consistency => "consistency",
            Command::Harnack => "harnack",
            Command::Green => "green",
            Command::Flow => "flow",
            Command::Barrier => "barrier",
            Command::CrsfCheck => "crsf-check",
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "flatlap", version = VERSION, about = "Discrete bundle Laplacians on square-tiled surfaces")]
pub struct Cli {
    #[arg(value_enum)]
    pub command: Command,
    /// Surface file (gluings plus optional bundle transports).
    #[arg(long)]
    pub surface: Option<PathBuf>,
    /// Comma-separated subdivision schedule, strictly increasing.
    #[arg(long, value_delimiter = ',')]
    pub ns: Option<Vec<usize>>,
    /// Single subdivision / flow size.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads (default: hardware parallelism).
    #[arg(long)]
    pub jobs: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Analytic model, `rectangle:a,b` or `torus:a,b[,alpha,beta]`.
    #[arg(long)]
    pub reference: Option<String>,
    /// Eigenvalue group (1-based) or eigenvector index (0-based), depending on the command.
    #[arg(long)]
    pub index: Option<usize>,
    /// Singular point id (barrier) or lattice point `a,b` (green).
    #[arg(long)]
    pub point: Option<String>,
    #[arg(long)]
    pub radius: Option<f64>,
    /// Number of random trials.
    #[arg(long)]
    pub count: Option<usize>,
    /// Graph file for `crsf-check`.
    #[arg(long)]
    pub graph: Option<PathBuf>,
    /// TOML file with any of the long flag names as keys.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// Values read from a TOML config file; every key is optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub surface: Option<PathBuf>,
    pub ns: Option<Vec<usize>>,
    pub n: Option<usize>,
    pub k: Option<usize>,
    pub tol: Option<f64>,
    pub out: Option<PathBuf>,
    pub jobs: Option<usize>,
    pub seed: Option<u64>,
    pub reference: Option<String>,
    pub index: Option<usize>,
    pub point: Option<String>,
    pub radius: Option<f64>,
    pub count: Option<usize>,
    pub graph: Option<PathBuf>,
}

/// Fully resolved configuration (flags over config file over defaults).
#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    pub command: Command,
    pub surface: Option<PathBuf>,
    pub ns: Vec<usize>,
    pub n: Option<usize>,
    pub k: usize,
    pub tol: f64,
    pub out: PathBuf,
    pub jobs: Option<usize>,
    pub seed: u64,
    pub reference: Option<String>,
    pub index: Option<usize>,
    pub point: Option<String>,
    pub radius: Option<f64>,
    pub count: usize,
    pub graph: Option<PathBuf>,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("solver failed: {0}")]
    Solver(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Solver(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

fn validation(e: impl std::fmt::Display) -> CliError {
    CliError::Validation(e.to_string())
}

fn solver(e: impl std::fmt::Display) -> CliError {
    CliError::Solver(e.to_string())
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

impl RunConfig {
    pub fn resolve(cli: Cli) -> Result<Self, CliError> {
        let file = match &cli.config {
            Some(p) => {
                let text = fs::read_to_string(p).map_err(|e| io_err(p, e))?;
                toml::from_str::<FileConfig>(&text).map_err(|e| validation(format!("{}: {e}", p.display())))?
            }
            None => FileConfig::default(),
        };
        let cfg = RunConfig {
            command: cli.command,
            surface: cli.surface.or(file.surface),
            ns: cli.ns.or(file.ns).unwrap_or_else(|| vec![8, 16, 32, 64]),
            n: cli.n.or(file.n),
            k: cli.k.or(file.k).unwrap_or(6),
            tol: cli.tol.or(file.tol).unwrap_or(1e-10),
            out: cli.out.or(file.out).unwrap_or_else(|| PathBuf::from("out")),
            jobs: cli.jobs.or(file.jobs),
            seed: cli.seed.or(file.seed).unwrap_or(42),
            reference: cli.reference.or(file.reference),
            index: cli.index.or(file.index),
            point: cli.point.or(file.point),
            radius: cli.radius.or(file.radius),
            count: cli.count.or(file.count).unwrap_or(200),
            graph: cli.graph.or(file.graph),
        };
        cfg.check()?;
        Ok(cfg)
    }

    fn check(&self) -> Result<(), CliError> {
        if self.ns.is_empty() || self.ns.windows(2).any(|w| w[0] >= w[1]) || self.ns[0] == 0 {
            return Err(validation("--ns must be a strictly increasing list of positive integers"));
        }
        if self.k == 0 {
            return Err(validation("--k must be at least 1"));
        }
        if !(self.tol > 0.0) {
            return Err(validation("--tol must be positive"));
        }
        Ok(())
    }

    fn opts(&self) -> EigenOptions<f64> {
        EigenOptions { seed: self.seed, ..EigenOptions::new(self.k, self.tol) }
    }

    fn reference_model(&self) -> Result<Option<ReferenceModel>, CliError> {
        self.reference.as_deref().map(|r| r.parse::<ReferenceModel>().map_err(validation)).transpose()
    }

    fn load(&self) -> Result<(SquareTiledSurface, FlatUnitaryBundle<f64>), CliError> {
        let path = self.surface.as_ref().ok_or_else(|| validation("--surface is required for this command"))?;
        load_surface(path)
    }
}

/// Reads a surface file together with its bundle.
pub fn load_surface(path: &Path) -> Result<(SquareTiledSurface, FlatUnitaryBundle<f64>), CliError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let surface = parse_surface(&text).map_err(validation)?;
    let bundle = parse_bundle(&text, &surface).map_err(validation)?;
    Ok((surface, bundle))
}

/// Output of one command: CSV body and a JSON summary.
pub struct Report {
    pub csv: String,
    pub summary: serde_json::Value,
    /// One-line human summary printed to stdout.
    pub headline: String,
}

fn e12(x: f64) -> String {
    format!("{x:.12e}")
}

/// Runs the configured command and writes its artifacts.
pub fn run(cfg: &RunConfig) -> Result<Report, CliError> {
    let report = match cfg.jobs {
        Some(j) => rayon::ThreadPoolBuilder::new()
            .num_threads(j.max(1))
            .build()
            .map_err(|e| CliError::Io(e.to_string()))?
            .install(|| dispatch(cfg))?,
        None => dispatch(cfg)?,
    };
    write_artifacts(cfg, &report)?;
    Ok(report)
}

fn write_artifacts(cfg: &RunConfig, report: &Report) -> Result<(), CliError> {
    fs::create_dir_all(&cfg.out).map_err(|e| io_err(&cfg.out, e))?;
    let name = cfg.command.name();
    let csv = cfg.out.join(format!("{name}.csv"));
    fs::write(&csv, &report.csv).map_err(|e| io_err(&csv, e))?;
    let sidecar = serde_json::json!({
        "command": name,
        "version": VERSION,
        "config": cfg,
        "summary": report.summary,
    });
    let json = cfg.out.join(format!("{name}.json"));
    let text = serde_json::to_string_pretty(&sidecar).map_err(|e| CliError::Io(e.to_string()))?;
    fs::write(&json, text + "\n").map_err(|e| io_err(&json, e))
}

fn dispatch(cfg: &RunConfig) -> Result<Report, CliError> {
    match cfg.command {
        Command::Validate => cmd_validate(cfg),
        Command::Spectrum => cmd_spectrum(cfg),
        Command::Converge => cmd_converge(cfg),
        Command::Eigvec => cmd_eigvec(cfg),
        Command::InterpCheck => cmd_interp_check(cfg),
        Command::Consistency => cmd_consistency(cfg),
        Command::Harnack => cmd_harnack(cfg),
        Command::Green => cmd_green(cfg),
        Command::Flow => cmd_flow(cfg),
        Command::Barrier => cmd_barrier(cfg),
        Command::CrsfCheck => cmd_crsf(cfg),
    }
}

fn cmd_validate(cfg: &RunConfig) -> Result<Report, CliError> {
    let (s, b) = cfg.load()?;
    let cones = s.cone_points().len();
    let chi = s.euler_characteristic();
    let mut csv = String::from("cycle,angle_units,boundary,singular\n");
    for (i, c) in s.vertex_cycles().iter().enumerate() {
        let _ = writeln!(csv, "{i},{},{},{}", c.angle_units(), c.boundary, c.is_singular());
    }
    let summary = serde_json::json!({
        "squares": s.num_squares(),
        "closed": s.is_closed(),
        "connected": s.is_connected(),
        "euler_characteristic": chi,
        "cone_points": cones,
        "singular_points": s.singular_points().len(),
        "curvature_units": s.curvature_units(),
        "gauss_bonnet": s.gauss_bonnet_holds(),
        "rank": b.rank(),
    });
    if !s.gauss_bonnet_holds() {
        return Err(validation("Gauss-Bonnet count failed"));
    }
    Ok(Report { csv, summary, headline: format!("{cones} cone points, χ={chi}") })
}

fn cmd_spectrum(cfg: &RunConfig) -> Result<Report, CliError> {
    let (s, b) = cfg.load()?;
    let n = cfg.n.unwrap_or(cfg.ns[0]);
    let (rep, _) = spectrum(&s, &b, n, &cfg.opts()).map_err(solver)?;
    let mut csv = String::from("n,i,lambda_n,residual\n");
    for (i, (l, r)) in rep.rescaled_eigs.iter().zip(&rep.residual_norms).enumerate() {
        let _ = writeln!(csv, "{n},{},{},{}", i + 1, e12(*l), e12(*r));
    }
    let headline = format!("n={n}: {} eigenvalues via {:?} solver", rep.k, rep.solver);
    Ok(Report { csv, summary: serde_json::to_value(&rep).unwrap_or_default(), headline })
}

fn cmd_converge(cfg: &RunConfig) -> Result<Report, CliError> {
    let (s, b) = cfg.load()?;
    let reference = cfg.reference_model()?.map(|m| reference_spectrum(m, cfg.k)).transpose().map_err(validation)?;
    let rows = convergence_table(&s, &b, cfg.k, &cfg.ns, reference.as_ref(), &cfg.opts());
    if rows.iter().all(|r| r.flagged) {
        return Err(solver("eigensolver failed for every n"));
    }
    let mut csv = String::from("n,i,lambda_n,lambda_ref,abs_err,order,flagged\n");
    for r in &rows {
        let order = r.order.map(e12).unwrap_or_default();
        let _ = writeln!(csv, "{},{},{},{},{},{},{}", r.n, r.i, e12(r.lambda_n), e12(r.lambda_ref), e12(r.abs_err), order, r.flagged);
    }
    let last = *cfg.ns.last().unwrap();
    let worst = rows.iter().filter(|r| r.n == last).map(|r| r.abs_err).fold(0.0, f64::max);
    Ok(Report {
        csv,
        summary: serde_json::json!({ "rows": rows.len(), "max_abs_err_at_finest": worst }),
        headline: format!("max |λ_n − λ| at n={last}: {worst:.3e}"),
    })
}

fn cmd_eigvec(cfg: &RunConfig) -> Result<Report, CliError> {
    let (s, b) = cfg.load()?;
    let model = cfg.reference_model()?.ok_or_else(|| validation("--reference is required for eigvec"))?;
    let group = cfg.index.unwrap_or(2);
    let reference = reference_spectrum(model, cfg.k.max(group + 8)).map_err(validation)?;
    let rows = eigenvector_convergence(&s, &b, &reference, group, &cfg.ns, &cfg.opts()).map_err(solver)?;
    let mut csv = String::from("n,projection_error,aligned_error,separated,flagged\n");
    for r in &rows {
        let _ = writeln!(csv, "{},{},{},{},{}", r.n, e12(r.projection_error), e12(r.aligned_error), r.separated, r.flagged);
    }
    let last = rows.last().map_or(f64::NAN, |r| r.aligned_error);
    Ok(Report {
        csv,
        summary: serde_json::json!({ "group": group, "rows": rows }),
        headline: format!("group {group}: aligned error {last:.3e} at n={}", cfg.ns.last().unwrap()),
    })
}

fn cmd_interp_check(cfg: &RunConfig) -> Result<Report, CliError> {
    let (s, b) = cfg.load()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let trials = cfg.count.min(50).max(1);
    let mut csv = String::from("n,trial,energy_linearized,energy_discrete,defect,pairing_ratio\n");
    let mut worst = 0.0f64;
    for &n in &cfg.ns {
        let g = build_graph(&s, &b, n).map_err(validation)?;
        let lin = Linearizer::new(&g).map_err(validation)?;
        let grad = gradient(&g);
        for t in 0..trials {
            let mut rand_section = || -> Vec<Complex<f64>> {
                (0..g.dim()).map(|_| Complex::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect()
            };
            let f = average(&rand_section(), &g).map_err(validation)?;
            let h = average(&rand_section(), &g).map_err(validation)?;
            let (lf, lh) = (lin.linearize(&f).map_err(validation)?, lin.linearize(&h).map_err(validation)?);
            let e_lin = lf.dirichlet_energy(&lh).map_err(validation)?;
            let e_dis = dot(&grad.matvec(&f), &grad.matvec(&h));
            let defect = (e_lin - e_dis).norm()
                / (1.0 + lf.dirichlet_energy(&lf).map_err(validation)?.norm() + lh.dirichlet_energy(&lh).map_err(validation)?.norm());
            let pair = lf.l2_pairing(&lf, None).map_err(validation)?.re;
            let ratio = pair / (dot(&f, &f).re / (n * n) as f64);
            worst = worst.max(defect);
            let _ = writeln!(csv, "{n},{t},{},{},{},{}", e12(e_lin.re), e12(e_dis.re), e12(defect), e12(ratio));
        }
    }
    Ok(Report {
        csv,
        summary: serde_json::json!({ "trials_per_n": trials, "max_relative_defect": worst }),
        headline: format!("energy identity defect ≤ {worst:.3e}"),
    })
}

fn cmd_consistency(cfg: &RunConfig) -> Result<Report, CliError> {
    let (s, b) = cfg.load()?;
    let model = cfg.reference_model()?.ok_or_else(|| validation("--reference is required for consistency"))?;
    let mode = cfg.index.unwrap_or(1);
    let reference = reference_spectrum(model, mode + 1).map_err(validation)?;
    let field = ReferenceField::new(&reference, &s, &b).map_err(validation)?;
    let lam = reference.value(mode);
    let mut csv = String::from("n,interior,edge,corner_adjacent,boundary_adjacent\n");
    for &n in &cfg.ns {
        let g = build_graph(&s, &b, n).map_err(validation)?;
        let op = assemble_laplacian(&g);
        let rep = consistency_residual(
            |sq, x, y| vec![field.value(mode, sq, x, y)],
            |sq, x, y| vec![field.value(mode, sq, x, y) * lam],
            &g,
            &op,
        )
        .map_err(validation)?;
        let _ = writeln!(csv, "{n},{},{},{},{}", e12(rep.interior), e12(rep.edge), e12(rep.corner_adjacent), e12(rep.boundary_adjacent));
    }
    Ok(Report { csv, summary: serde_json::json!({ "mode": mode, "eigenvalue": lam }), headline: format!("mode {mode}, λ = {lam:.6}") })
}

fn cmd_harnack(cfg: &RunConfig) -> Result<Report, CliError> {
    let (s, b) = cfg.load()?;
    let index = cfg.index.unwrap_or(1);
    let model = cfg.reference_model()?;
    let reference = model.map(|m| reference_spectrum(m, index + 1)).transpose().map_err(validation)?;
    let field = match &reference {
        Some(r) => Some(ReferenceField::new(r, &s, &b).map_err(validation)?),
        None => None,
    };
    let eval = |sq: usize, x: f64, y: f64| vec![field.as_ref().map_or(Complex::new(0.0, 0.0), |f| f.value(index, sq, x, y))];
    let target = match field {
        Some(_) => HarnackTarget::Projected { index, field: &eval },
        None => HarnackTarget::Index(index),
    };
    let rows = harnack_diagnostics(&s, &b, &target, &cfg.ns, 0.25, &cfg.opts()).map_err(solver)?;
    let mut csv = String::from("n,eigenvalue,max_edge_gap,sup_over_sqrt_log,interior_sup\n");
    for r in &rows {
        let _ = writeln!(csv, "{},{},{},{},{}", r.n, e12(r.eigenvalue), e12(r.max_edge_gap), e12(r.sup_over_sqrt_log), e12(r.interior_sup));
    }
    Ok(Report { csv, summary: serde_json::json!({ "index": index, "rows": rows }), headline: format!("{} rows", rows.len()) })
}

fn parse_point(p: &str) -> Result<(i64, i64), CliError> {
    let bad = || validation(format!("bad lattice point `{p}`, expected `a,b`"));
    let (a, b) = p.split_once(',').ok_or_else(bad)?;
    Ok((a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?))
}

fn cmd_green(cfg: &RunConfig) -> Result<Report, CliError> {
    let radius = cfg.radius.unwrap_or(64.0);
    let (g, extra) = match &cfg.point {
        Some(p) => {
            let p = parse_point(p)?;
            (green_halfplane::<f64>(p, radius).map_err(solver)?, serde_json::json!({ "domain": "half-plane", "point": p }))
        }
        None => {
            let n = radius.round() as usize;
            let g = green_ball::<f64>(n).map_err(solver)?;
            let sphere = g.inner_boundary().iter().map(|&z| g.get(z)).fold(0.0, f64::max);
            let fit = if n >= 64 { fullplane_asymptotic_check(n).ok() } else { None };
            (g, serde_json::json!({ "domain": "ball", "sphere_max": sphere, "asymptotic_fit": fit }))
        }
    };
    let mut csv = Vec::new();
    g.write_csv(&mut csv).map_err(|e| CliError::Io(e.to_string()))?;
    let summary = serde_json::json!({
        "points": g.len(),
        "residual": g.residual,
        "argmax": g.argmax(),
        "iterations": g.iterations,
        "details": extra,
    });
    Ok(Report {
        csv: String::from_utf8(csv).unwrap_or_default(),
        summary,
        headline: format!("{} points, residual {:.3e}", g.len(), g.residual),
    })
}

fn cmd_flow(cfg: &RunConfig) -> Result<Report, CliError> {
    let n = cfg.n.unwrap_or(1024);
    let f = corner_flow::<f64>(n);
    let defect = f.divergence_defect();
    let energy = f.energy();
    let bound = flow_energy_bound(n);
    let csv = format!("n,divergence_defect,energy,energy_bound\n{n},{},{},{}\n", e12(defect), e12(energy), e12(bound));
    Ok(Report {
        csv,
        summary: serde_json::json!({ "n": n, "divergence_defect": defect, "energy": energy, "energy_bound": bound, "norm": energy.sqrt() }),
        headline: format!("divergence defect {defect:.3e}, ‖E‖² = {energy:.6} ≤ {bound:.6}"),
    })
}

fn cmd_barrier(cfg: &RunConfig) -> Result<Report, CliError> {
    let (s, b) = cfg.load()?;
    let n = cfg.n.unwrap_or(16);
    let g = build_graph(&s, &b, n).map_err(validation)?;
    let points: Vec<usize> = match &cfg.point {
        Some(p) => vec![p.trim().parse().map_err(|_| validation(format!("bad singular point id `{p}`")))?],
        None => (0..g.singular_points().len()).collect(),
    };
    let mut csv = String::from("point,angle_units,checked,max_laplacian,interior_violations,sphere_violations\n");
    let mut total = 0;
    for p in points {
        let rep = convex_barrier(&g, p).map_err(validation)?;
        total += rep.interior_violations.len() + rep.sphere_violations.len();
        let _ = writeln!(
            csv,
            "{p},{},{},{},{},{}",
            g.singular_points()[p].angle_units,
            rep.checked,
            rep.max_laplacian,
            rep.interior_violations.len(),
            rep.sphere_violations.len()
        );
    }
    Ok(Report { csv, summary: serde_json::json!({ "n": n, "violations": total }), headline: format!("{total} barrier violations") })
}

fn cmd_crsf(cfg: &RunConfig) -> Result<Report, CliError> {
    let graphs: Vec<TinyConnectionGraph<f64>> = match &cfg.graph {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| io_err(p, e))?;
            vec![parse_graph(&text).map_err(validation)?]
        }
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            (0..cfg.count)
                .map(|_| {
                    let v = rng.gen_range(1..=7);
                    let e = rng.gen_range(0..=12);
                    TinyConnectionGraph::random(&mut rng, v, e).map_err(validation)
                })
                .collect::<Result<_, _>>()?
        }
    };
    let mut csv = String::from("trial,vertices,edges,determinant,crsf_sum,abs_diff\n");
    let mut failures = 0;
    for (t, g) in graphs.iter().enumerate() {
        let (d, c) = (determinant(g), crsf_sum(g));
        if (d - c).abs() > 1e-9 {
            failures += 1;
        }
        let _ = writeln!(csv, "{t},{},{},{},{},{}", g.num_vertices(), g.edges().len(), e12(d), e12(c), e12((d - c).abs()));
    }
    if failures > 0 {
        return Err(validation(format!("{failures} graphs violate det = CRSF sum")));
    }
    Ok(Report {
        csv,
        summary: serde_json::json!({ "graphs": graphs.len(), "failures": failures }),
        headline: format!("{} graphs, 0 failures", graphs.len()),
    })
}

/// Binary entry point; returns the process exit code.
pub fn main_with_args<I, A>(args: I) -> i32
where
    I: IntoIterator<Item = A>,
    A: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let result = RunConfig::resolve(cli).and_then(|cfg| run(&cfg));
    match result {
        Ok(r) => {
            println!("{}", r.headline);
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
