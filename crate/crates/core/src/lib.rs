//! Two-phase rehabilitation scheduling: assign patients to physiotherapists
//! (the board), then place every session in time and space (the agenda).

pub mod agenda_solver;
pub mod bench;
pub mod board_solver;
pub mod builder;
pub mod error;
pub mod feas;
pub mod generator;
pub mod model;
pub mod oracle;
pub mod solve;

pub use agenda_solver::{
    candidate_space_size, compute_prune_tables, solve_agenda, solve_agenda_with, PruneTables,
    Variant,
};
pub use board_solver::{solve_board, solve_board_with};
pub use error::{Error, Result};
pub use feas::{
    agenda_cost, board_cost, check_agenda, check_board, AgendaSolution, BoardSolution, Rule,
    SessionPlacement, Violation,
};
pub use model::{validate_instance, CostVector, Instance, ValidationIssue};
pub use solve::{Mode, Outcome, SolveConfig, SolveHooks, SolveReport, TracePoint};
