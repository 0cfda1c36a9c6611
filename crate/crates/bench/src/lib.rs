//! Inputs shared by the criterion benches.

use rehab_core::generator::{generate, preset};
use rehab_core::{solve_board, BoardSolution, Instance, SolveConfig};

/// A nervi-preset instance with the given counts.
pub fn nervi(patients: u32, operators: u32, seed: u64) -> Instance {
    generate(&preset("nervi").expect("built-in preset").with_counts(patients, operators, seed))
        .expect("preset parameters are valid")
}

/// An instance together with a board found under a fixed effort cap.
pub fn with_board(patients: u32, operators: u32, seed: u64) -> (Instance, BoardSolution) {
    let inst = nervi(patients, operators, seed);
    let cfg = SolveConfig {
        node_limit: Some(50_000),
        ..SolveConfig::anytime(30.0, seed)
    };
    let board = solve_board(&inst, &cfg)
        .expect("valid instance")
        .best
        .expect("the board always has a solution");
    (inst, board)
}
