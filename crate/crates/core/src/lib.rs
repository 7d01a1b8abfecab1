//! Weighted k-means clustering.
//!
//! * [`ptas`]: best-of search over weighted D²-sampling candidates with a
//!   `(1 + eps)` guarantee for the paper-scale constants.
//! * [`baselines`]: weighted k-means++ seeding and Lloyd descent.
//! * [`oracle`]: exact optimum for small instances and Monte-Carlo checks of
//!   the sampling lemmas.
//! * [`sensor`]: coverage of a convex region by `k` sensors through grid
//!   discretization.

pub mod baselines;
pub mod csv_io;
pub mod error;
pub mod fixtures;
pub mod oracle;
pub mod points;
pub mod ptas;
pub mod sampling;
pub mod sensor;
pub mod verify;

pub use error::{Error, Result};
pub use points::{
    weighted_cost, CenterSet, ClusteringResult, RunMeta, WeightedPoint, WeightedPointSet,
};
