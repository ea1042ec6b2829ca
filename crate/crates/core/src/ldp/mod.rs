//! Large-deviation rate function: skeleton optimal control, tube
//! probabilities by plain and importance-sampled Monte Carlo, and the
//! weak-convergence probe of the controlled system.

mod lbfgs;
mod probe;
mod problem;
mod weak;

pub use probe::{mc_probability, Estimator, LdpProbe, ProbeRow, MIN_MC};
pub use problem::{objective_and_gradient, rate_along_path, skeleton, solve_rate, OptimizerSettings, RateProblem, RateResult, Target};
pub use weak::{weak_convergence_probe, WeakConvergenceReport, WEAK_PROXY};
