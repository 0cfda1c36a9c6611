mod common;

use common::{all_rules, fixture, flagged, mutate, Candidate};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rehab_core::{agenda_cost, board_cost, validate_instance, CostVector, Rule};

#[test]
fn fixture_is_valid_and_feasible() {
    let f = fixture();
    assert_eq!(validate_instance(&f.inst), vec![]);
    assert!(flagged(&f, &Candidate::Board(f.board.clone())).is_empty());
    assert!(flagged(&f, &Candidate::Agenda(f.agenda.clone())).is_empty());
    // Empty preference lists weigh 1 per patient.
    assert_eq!(board_cost(&f.inst, &f.board).unwrap(), CostVector(vec![9, 1, 0]));
    assert_eq!(agenda_cost(&f.inst, &f.board, &f.agenda).unwrap(), CostVector::zeros(6));
}

#[test]
fn every_rule_has_a_mutation_family() {
    let f = fixture();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for tag in all_rules() {
        let (c, expect) = mutate(&f, tag, &mut rng);
        assert!(expect.contains(&tag));
        assert_eq!(flagged(&f, &c), expect, "{tag}");
    }
}

#[test]
fn cost_is_refused_for_infeasible_candidates() {
    let f = fixture();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (c, _) = mutate(&f, Rule::A5, &mut rng);
    let Candidate::Agenda(a) = c else { unreachable!() };
    assert!(agenda_cost(&f.inst, &f.board, &a).is_err());
    let (c, _) = mutate(&f, Rule::B3, &mut rng);
    let Candidate::Board(b) = c else { unreachable!() };
    assert!(board_cost(&f.inst, &b).is_err());
}

proptest! {
    #[test]
    fn mutations_break_exactly_their_rules(seed in any::<u64>(), which in 0usize..18) {
        let f = fixture();
        let tag = all_rules().nth(which).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (c, expect) = mutate(&f, tag, &mut rng);
        prop_assert_eq!(flagged(&f, &c), expect);
    }
}
