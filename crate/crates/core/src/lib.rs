//! Gaussian rough paths on uniform grids: sampling, level-2 lifts, controlled
//! integrands, rough and discrete Skorohod integrals, and the correction terms
//! relating them.

pub mod chaos;
pub mod cli;
pub mod controlled;
pub mod covariance;
pub mod error;
pub mod exec;
pub mod grid;
pub mod quadrature;
pub mod roughlift;
pub mod simulate;
pub mod stats;
pub mod stochastic;
pub mod variation;

pub use covariance::{rho_of, CovarianceGrid, CovarianceKind, CovarianceModel};
pub use error::{Error, Result};
pub use exec::Exec;
pub use grid::{GridFunction1D, GridFunction2D, IndexRect, UniformGrid};
