//! Budgeted Levenberg-Marquardt optimization with a learned damping controller.
//!
//! The classic method blends Gauss-Newton and gradient descent through a
//! damping parameter `λ`, lowering it after an improving step and raising it
//! otherwise. Here a contextual action table may take over that decision:
//! after every evaluation it picks one of seven moves (raise, lower or keep
//! `λ`, each while accepting or rejecting the new point, or jump back to the
//! best point seen) from the remaining budget and the last two outcomes.

mod controller;
mod problems;
mod solver;

pub use controller::{
    adaptive_lm, asrl, evaluate_controller, fresh_controller, mimic_controller, train_controller, AsrlEntry,
    ControllerFile, ControllerTable, LambdaAction, LmContext, Optimizer,
};
pub use problems::{benchmark_functions, Benchmark, ResidualProblem};
pub use solver::{lm_step, solve_linear, standard_lm, Damping, LmConfig, LmRun};
