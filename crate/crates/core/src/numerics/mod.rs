//! Quadrature grids, the radial eigensolver and root bracketing.

pub mod eigen;
pub mod grid;
pub mod roots;

pub use eigen::{
    adaptive_cutoff, solve_radial_energy, solve_radial_ground, tridiagonal_ground_energy,
    ConvergenceTrace, EigenOptions, RadialEigenpair, RadialPotential, RadialProfile,
};
pub use grid::{
    build_radial_grid, integrate_radial, AngularRule, GridScheme, RadialGrid, SampledRadialFunction,
};
pub use roots::bisect_root;
