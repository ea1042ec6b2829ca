//! Slow-fast rough differential equations driven by mixed fractional
//! Brownian motion.
//!
//! The crate is organised bottom-up:
//!
//! * [`drivers`] samples fBm / Brownian paths and represents Cameron–Martin
//!   controls through the Volterra kernel of fBm.
//! * [`lift`] builds level-2 rough paths (mixed lifts, control lifts,
//!   translations, dilations) and measures them in Hölder norms.
//! * [`rde`] solves rough differential equations with a third-order one-step
//!   scheme and exposes the controlled-path structure of the solution.
//! * [`slowfast`] integrates the two-scale system, estimates invariant
//!   measures of the frozen fast dynamics and runs averaging experiments.
//! * [`ldp`] computes the large-deviation rate function by optimal control
//!   and checks it against importance-sampled Monte Carlo.
//!
//! ```
//! use roughflow::{grid::{HurstParam, TimeGrid}, drivers::sample_fbm};
//!
//! let grid = TimeGrid::new(1.0, 256).unwrap();
//! let hurst = HurstParam::new(0.4).unwrap();
//! let path = sample_fbm(&grid, &hurst, 1, 7).unwrap();
//! assert_eq!(path.at(0), &[0.0]);
//! ```

pub mod drivers;
pub mod error;
pub mod grid;
pub mod io;
pub mod ldp;
pub mod lift;
pub mod par;
pub mod rde;
pub mod rng;
pub mod slowfast;
pub mod stats;

pub use error::{Error, Result};
pub use grid::{HurstParam, Path, TimeGrid};
