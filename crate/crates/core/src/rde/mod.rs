//! Rough differential equations `dY = f(Y) dt + σ(Y) dΞ`.

mod probe;
mod solver;
mod vector_field;

pub use probe::{controlled_distance, lipschitz_probe, solution_distance, LipschitzReport};
pub use solver::{solve_rde, ControlledPath, DIVERGENCE_CAP};
pub(crate) use solver::{davie_update, guard};
pub use vector_field::{check_bounds, fd_jacobian_sigma, FieldBounds, FnField, VectorField, FD_STEP};
pub(crate) use vector_field::uniform_point;
