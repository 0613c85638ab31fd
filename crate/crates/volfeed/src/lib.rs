//! Simulation and estimation toolkit for a two-parameter stochastic
//! feedback volatility model.
//!
//! Daily log returns follow `r_t = mu + sigma_t * xi_t` where the local
//! variance `sigma_t^2` is driven by a gamma feedback recursion with
//! equilibrium variance `sigma0^2` and feedback strength `B`. The crate
//! covers path simulation, the underlying Poisson-rate-estimation
//! mechanism, parameter recovery from daily price series, and the
//! statistical comparison against gamma/lognormal/inverse-gamma and
//! GARCH(1,1) alternatives.

pub mod error;
pub mod estimation;
pub mod interface;
pub mod mechanism;
pub mod model;
pub mod opt;
pub mod par;
pub mod sampling;
pub mod stats;

pub use error::{Error, Result};
pub use model::{ModelParams, NormalizedSeries, PathSample};
pub use sampling::RngState;
