//! Gaussian drivers and the Cameron–Martin space.

mod bm;
mod control;
mod fbm;
mod mixed;
pub mod toeplitz;
pub mod volterra;

pub use bm::sample_bm;
pub use control::{cm_norm, cm_to_path, CameronMartinControl, ControlPaths};
pub use fbm::{fgn_autocovariance, sample_fbm, sample_fbm_raw, FbmSampler};
pub use mixed::{sample_mixed, MixedDriverPath, MixedSampler};
pub use volterra::VolterraKernel;
