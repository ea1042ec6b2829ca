//! Slow-fast systems: the two-scale integrator, frozen fast dynamics and
//! invariant measures, effective dynamics and averaging experiments.

mod effective;
mod experiment;
mod integrate;
mod invariant;
mod model;

pub use effective::{integrate_effective, DriftTable, EffectiveDrift, TABLE_MARGIN};
pub(crate) use effective::rk4_jacobian;
pub use experiment::{
    auxiliary_gap_experiment, averaging_experiment, fast_energy, ExperimentSetup, TrendRow, AUX_GAP, FAST_ENERGY, HOLDER_SQ,
    SUP_ERROR, SUP_ERROR_BOUNDED,
};
pub use integrate::{
    auxiliary_fast, default_block, default_micro_steps, integrate_slowfast, micro_noise, ScaleParams, SlowFastPath,
    DEFAULT_EPS_RATIO,
};
pub use invariant::{
    autocovariance_decay_rate, averaged_drift, estimate_invariant_measure, frozen_fast, DriftEstimate, DriftSource,
    InvariantMeasureEstimate, InvariantSettings, DEFAULT_MICRO_H,
};
pub use model::{
    check_assumptions, AssumptionReport, BistableOu, BuiltinModel, GaussianMeasure, LinearOu, ModelConstants, ModelDims,
    SlowFastModel, DEFAULT_CHECK_BOX,
};
pub(crate) use experiment::rows_from;
