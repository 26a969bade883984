//! Mixed-integer program for lifting lines to 3D, and the solver behind it.

mod bnb;
pub mod cuts;
mod lp_format;
mod model;
mod reconstruct;
pub mod simplex;

pub use bnb::{solve, solve_relaxation, to_lp, BranchAndBound, Solution, SolveStatus, SolverBackend};
pub use lp_format::{kind_counts, to_lp_string, write_lp};
pub use model::{
    build_model, EdgeRow, LineRow, LinearConstraint, MilpModel, ModelLayout, ModelParams, Sense, VarId, VarKind,
    Variable,
};
pub use reconstruct::{extract_reconstruction, EdgeDecision, Line3D, Reconstruction};
