//! Model-predictive booster control on the incremental (augmented) model.

mod augmented;
mod constraints;
mod controller;
mod counts;
mod lumping;
mod prediction;
mod qp;
mod weights;

pub use augmented::{select_columns, AugmentedSystem, OutputMap};
pub use constraints::{accumulation, bound_constraints, BoundSet, Inequalities};
pub use controller::{
    horizon_problem, ControllerSettings, HorizonProblem, MpcController, SolveMode,
};
pub use counts::{count_from_sizes, count_variables, VariableCount};
pub use lumping::lump_schedule;
pub use prediction::PredictionOperator;
pub use qp::{DualActiveSet, QpSolution, QpSolver};
pub use weights::CostWeights;
