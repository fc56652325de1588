//! Pipe discretization and assembly of the linear water-quality model.

mod assembly;
mod discretization;
pub mod export;
mod lax_wendroff;
mod reaction;
mod simulate;

pub use assembly::{
    assemble_schedule, assemble_system, dependence_order, spmv_add, AssemblyOptions, Component,
    StateSpaceSystem,
};
pub use discretization::{
    compute_time_step, fit_step, max_stable_step, Discretization, Entity, StateIndexMap,
};
pub use lax_wendroff::lw_coefficients;
pub use reaction::{pipe_reaction_constant, ReactionFold};
pub use simulate::{simulate, steps_in, Trajectory};
