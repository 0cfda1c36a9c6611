use rehab_core::generator::{tiny_agenda_case, tiny_board_instance};
use rehab_core::oracle::{oracle_agenda, oracle_board, OracleLimits};
use rehab_core::{solve_agenda, solve_board, Outcome, SolveConfig, Variant};

#[test]
fn board_matches_oracle() {
    let limits = OracleLimits::default();
    for seed in 0..200 {
        let inst = tiny_board_instance(seed);
        let want = oracle_board(&inst, &limits).unwrap();
        let got = solve_board(&inst, &SolveConfig::exact(10.0)).unwrap();
        assert_eq!(got.outcome, Outcome::OptimumFound, "seed {seed}");
        assert_eq!(got.cost.as_ref(), Some(&want.cost), "seed {seed}");
        assert_eq!(got.best.as_ref(), Some(&want.solution), "seed {seed}");
    }
}

#[test]
fn agenda_matches_oracle() {
    let limits = OracleLimits::default();
    let mut bad = Vec::new();
    for seed in 0..200 {
        let (inst, board) = tiny_agenda_case(seed, false);
        let want = oracle_agenda(&inst, &board, &limits).unwrap();
        for v in Variant::ALL {
            let got = solve_agenda(&inst, &board, &SolveConfig::exact(10.0), v).unwrap();
            let ok = match &want {
                Some(w) => got.outcome == Outcome::OptimumFound && got.cost.as_ref() == Some(&w.cost),
                None => got.outcome == Outcome::Unsatisfiable,
            };
            if !ok {
                bad.push(format!("seed {seed} {v}: oracle {:?} solver {:?} {:?}", want.as_ref().map(|w| &w.cost), got.outcome, got.cost));
            }
        }
    }
    assert!(bad.is_empty(), "{}", bad.join("\n"));
}
