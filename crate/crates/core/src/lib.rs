//! Sequential monitoring of high-dimensional covariance structure.
//!
//! The crate tracks linear spectral statistics of the sequential sample
//! covariance matrix `B_{n,t} = (1/n) sum_{i <= floor(nt)} y_i y_i^T` over a
//! time grid, evaluates the limiting Gaussian laws of the centered and
//! scaled statistic processes, estimates sup-statistic critical values by
//! Monte Carlo, and runs sphericity monitoring tests plus a level/power
//! simulation harness on top.
//!
//! Module map:
//! - [`model`]: dimensions, time grids, symmetry classes
//! - [`datagen`]: covariance scenarios and Gaussian observation streams
//! - [`seqcov`]: streaming engine for `tr(B^k)` and `log|B|`
//! - [`mp`]: Marčenko–Pastur fixed points, supports and moment centerings
//! - [`limits`]: limiting Gaussian laws, closed forms and contour engines
//! - [`gp`]: Gaussian-process path sampling and critical values
//! - [`monitor`]: test-statistic trajectories and decisions
//! - [`harness`]: Monte Carlo level/power experiments

pub mod datagen;
pub mod error;
pub mod exec;
pub mod gp;
pub mod harness;
pub mod limits;
pub mod model;
pub mod monitor;
pub mod mp;
pub mod seqcov;

pub use error::{Error, Result};
pub use model::{Dimensions, SymmetryClass, TimeGrid};
