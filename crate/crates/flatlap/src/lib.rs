//! Discrete Laplacians of flat unitary bundles on square-tiled (half-)translation surfaces,
//! their spectral convergence, piecewise-linear interpolation and lattice potential theory.
//!
//! The numerical core is generic over the real scalar type; the aliases below fix `f64`.

pub mod linalg;
pub mod scalar;
pub mod surface;
pub mod bundle;
pub mod discretize;
pub mod operators;
pub mod spectral;
pub mod interp;
pub mod potential;
pub mod crsf;
pub mod cli;

pub use surface::{SquareTiledSurface, SurfaceError};

/// Flat unitary bundle with `f64` transports.
pub type Bundle = bundle::FlatUnitaryBundle<f64>;
/// Cell graph of the `n`-th subdivision with `f64` transports.
pub type Graph = discretize::DiscretizationGraph<f64>;
/// Sparse bundle Laplacian over `f64`.
pub type Operator = operators::SparseHermitianOperator<f64>;
/// Piecewise-linear field over `f64`.
pub type Field = interp::PiecewiseLinearField<f64>;
/// Lattice Green function over `f64`.
pub type Green = potential::LatticeFunction<f64>;
/// Rank-one test graph over `f64`.
pub type ConnectionGraph = crsf::TinyConnectionGraph<f64>;
/// Complex `f64` fiber value.
pub type C64 = num_complex::Complex<f64>;
