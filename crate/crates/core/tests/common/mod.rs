//! A hand-built reference instance with a feasible board and agenda, plus one
//! family of random mutations per rule tag. Every mutation of a family breaks
//! exactly the rules listed with it.

#![allow(dead_code)]

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;
use rehab_core::builder::{two_period_grid, InstanceBuilder};
use rehab_core::feas::rule_set;
use rehab_core::model::{
    LocationId, Needs, OperatorId, Optionality, PatientId, PatientType, PayStatus, SessionId,
    SessionKind, SlotRef, TypeValue, Window,
};
use rehab_core::{check_agenda, check_board, AgendaSolution, BoardSolution, Instance, Rule, SessionPlacement};

pub struct Fixture {
    pub inst: Instance,
    pub board: BoardSolution,
    pub agenda: AgendaSolution,
}

pub fn special_type() -> PatientType {
    PatientType::new(TypeValue::Orthopaedic, Needs::Lifter, PayStatus::Payer)
}

/// Operators 1 and 2 carry the schedule; 3 has a tight contract and 4 is
/// qualified only for orthopaedic patients. Macro 1 holds a gym (1) and two
/// rooms (2, 3); macro 2 a small gym (4); macro 3 a single room (5).
pub fn fixture() -> Fixture {
    let mut b = InstanceBuilder::new(two_period_grid(24));
    b.operator(1, &[(0, 0, 24), (1, 0, 24)]).max_patients = Some(5);
    b.operator(2, &[(0, 0, 24), (1, 0, 24)])
        .type_limits
        .insert(special_type(), 1);
    b.operator(3, &[(0, 0, 24)]).total_time = Some(5);
    b.operator(4, &[(0, 0, 24), (1, 0, 24)]).qualifications = [TypeValue::Orthopaedic].into_iter().collect();

    b.location(1, 6, 1);
    b.location(2, 1, 1);
    b.location(3, 1, 1);
    b.location(4, 2, 2);
    b.location(5, 1, 3);

    let ind = SessionKind::Individual;
    let sup = SessionKind::Supervised;
    b.patient(1, 2);
    b.session(1, ind, 2, 4, 3); // s1
    b.patient(2, 3).forbidden = vec![Window::new(0, 8, 10), Window::new(1, 16, 20)];
    b.session(2, ind, 3, 4, 3); // s2
    b.patient(3, 2).ptype = special_type();
    b.session(3, ind, 2, 3, 2).forced_time = Some(SlotRef { period: 0, slot: 2 }); // s3
    b.patient(4, 2);
    b.session(4, ind, 2, 3, 2); // s4
    b.patient(5, 6);
    b.session(5, ind, 3, 4, 1); // s5
    b.session(5, sup, 2, 2, 1).optionality = Optionality::Optional; // s6
    b.patient(6, 2).ptype = special_type();
    b.session(6, ind, 2, 3, 2); // s7, never scheduled
    b.patient(7, 2);
    b.session(7, sup, 2, 2, 3); // s8
    b.patient(8, 2);
    b.session(8, sup, 2, 2, 1); // s9
    b.patient(9, 2);
    b.session(9, sup, 2, 2, 1); // s10
    let inst = b.build();

    let board: BoardSolution = [(1, 1), (2, 1), (3, 2), (4, 2), (5, 1), (6, -1), (7, 1), (8, 2), (9, 1)]
        .into_iter()
        .map(|(p, o)| (PatientId(p), OperatorId(o)))
        .collect();
    let agenda: AgendaSolution = [
        (1, 0, 0, 4, 5),
        (2, 0, 4, 4, 5),
        (3, 0, 2, 3, 4),
        (4, 0, 6, 3, 4),
        (5, 1, 0, 4, 1),
        (6, 0, 10, 2, 1),
        (8, 1, 4, 2, 5),
        (9, 1, 10, 2, 2),
        (10, 1, 10, 2, 3),
    ]
    .into_iter()
    .map(|(s, period, start, length, loc)| place(s, period, start, length, loc))
    .collect();
    Fixture { inst, board, agenda }
}

pub fn place(session: u32, period: u32, start: u32, length: u32, location: u32) -> SessionPlacement {
    SessionPlacement {
        session: SessionId(session),
        period,
        start,
        length,
        before: 0,
        after: 0,
        location: LocationId(location),
    }
}

pub enum Candidate {
    Board(BoardSolution),
    Agenda(AgendaSolution),
}

fn at(a: &mut AgendaSolution, s: u32) -> &mut SessionPlacement {
    a.placements.get_mut(&SessionId(s)).expect("placed in the fixture")
}

/// A random mutation of the fixture that should break exactly the returned rules.
pub fn mutate<R: Rng>(f: &Fixture, tag: Rule, rng: &mut R) -> (Candidate, BTreeSet<Rule>) {
    let mut board = f.board.clone();
    let mut a = f.agenda.clone();
    let mut expect = BTreeSet::from([tag]);
    let mv = |board: &mut BoardSolution, p: u32, o: i32| {
        board.assignment.insert(PatientId(p), OperatorId(o));
    };
    match tag {
        Rule::B1 => {
            let mut ps: Vec<u32> = (1..=9).collect();
            ps.shuffle(rng);
            for p in &ps[..rng.gen_range(1..=9)] {
                board.assignment.remove(&PatientId(*p));
            }
            return (Candidate::Board(board), expect);
        }
        Rule::B2 => {
            mv(&mut board, 5, 3);
            for p in [1, 2, 7, 9] {
                if rng.gen_bool(0.5) {
                    mv(&mut board, p, 3);
                }
            }
            return (Candidate::Board(board), expect);
        }
        Rule::B3 => {
            let p = *[3, 4, 6, 8].choose(rng).unwrap();
            mv(&mut board, p, 1);
            return (Candidate::Board(board), expect);
        }
        Rule::B4 => {
            mv(&mut board, 6, 2);
            if rng.gen_bool(0.5) {
                mv(&mut board, 1, 2);
            }
            return (Candidate::Board(board), expect);
        }
        Rule::B5 => {
            mv(&mut board, *[1, 2, 5, 7, 9].choose(rng).unwrap(), 4);
            for p in [4, 8] {
                if rng.gen_bool(0.5) {
                    mv(&mut board, p, 4);
                }
            }
            if rng.gen_bool(0.5) {
                mv(&mut board, 3, 4);
            }
            return (Candidate::Board(board), expect);
        }
        Rule::A1 => {
            if rng.gen_bool(0.5) {
                let loc = rng.gen_range(1..=5);
                let start = rng.gen_range(0..=20);
                a.insert(place(7, rng.gen_range(0..=1), start, rng.gen_range(1..=4), loc));
            } else {
                let s = rng.gen_range(1..=5);
                a.placements.remove(&SessionId(s));
                expect.insert(Rule::A9);
            }
        }
        Rule::A2 => {
            let start = rng.gen_range(0..=6);
            *at(&mut a, 4) = place(4, 1, start, rng.gen_range(4..=10 - start), 4);
        }
        Rule::A3 => {
            let (period, loc) = (rng.gen_range(0..=1), rng.gen_range(1..=3));
            let start = if period == 0 { rng.gen_range(5..=21) } else { rng.gen_range(0..=7) };
            *at(&mut a, 4) = place(4, period, start, 3, loc);
        }
        Rule::A4 => {
            if rng.gen_bool(0.5) {
                let s3 = at(&mut a, 3);
                s3.before = rng.gen_range(3..=8);
                s3.after = rng.gen_range(0..=1);
            } else {
                let s4 = at(&mut a, 4);
                s4.start = 21;
                s4.after = rng.gen_range(1..=3);
            }
        }
        Rule::A5 => at(&mut a, 4).start = rng.gen_range(0..=4),
        Rule::A6 => {
            let start = *[0, 1, 2, 6, 7, 8, 12, 16, 20, 22].choose(rng).unwrap();
            *at(&mut a, 6) = place(6, 1, start, 2, 1);
        }
        Rule::A7 => {
            let s1 = at(&mut a, 1);
            s1.length = 2;
            s1.start = *[0, 1, 2, 8].choose(rng).unwrap();
        }
        Rule::A8 => at(&mut a, 6).start = rng.gen_range(0..=7),
        Rule::A9 => {
            if rng.gen_bool(0.5) {
                a.placements.remove(&SessionId(6));
            } else {
                at(&mut a, 5).length = 3;
            }
        }
        Rule::A10 => *at(&mut a, 8) = place(8, 0, rng.gen_range(0..=7), 2, 5),
        Rule::A11 => {
            if rng.gen_bool(0.5) {
                at(&mut a, 2).after = rng.gen_range(1..=2);
            } else {
                *at(&mut a, 2) = place(2, 1, rng.gen_range(13..=19), 4, 5);
            }
        }
        Rule::A12 => {
            let s9 = rng.gen_range(0..=2u32);
            let s10 = (s9 + rng.gen_range(0..=1)).min(2);
            *at(&mut a, 9) = place(9, 1, s9, 2, 1);
            *at(&mut a, 10) = place(10, 1, s10, 2, 1);
        }
        Rule::A13 => {
            *at(&mut a, 3) = if rng.gen_bool(0.5) {
                place(3, 0, rng.gen_range(0..=1), 3, 4)
            } else {
                place(3, 1, rng.gen_range(0..=7), 3, 4)
            };
        }
    }
    (Candidate::Agenda(a), expect)
}

/// Rules flagged for a candidate by the checker.
pub fn flagged(f: &Fixture, c: &Candidate) -> BTreeSet<Rule> {
    let v = match c {
        Candidate::Board(b) => check_board(&f.inst, b).unwrap(),
        Candidate::Agenda(a) => check_agenda(&f.inst, &f.board, a).unwrap(),
    };
    rule_set(&v)
}

pub fn all_rules() -> impl Iterator<Item = Rule> {
    Rule::BOARD.into_iter().chain(Rule::AGENDA)
}

/// Starts removed by the prune tables at which some placement of the session
/// passes every single-session rule. Exhaustive over length, extensions and
/// location; those rules do not depend on other sessions, so an empty result
/// means no feasible agenda uses a removed start.
pub fn pruned_start_counterexamples(inst: &Instance, board: &BoardSolution) -> Vec<String> {
    use rehab_core::compute_prune_tables;
    use rehab_core::feas::session_operator;
    const UNARY: [Rule; 5] = [Rule::A2, Rule::A3, Rule::A4, Rule::A11, Rule::A13];
    let tables = compute_prune_tables(inst, board).unwrap();
    let mut bad = Vec::new();
    for spec in &inst.sessions {
        let Some(op) = session_operator(inst, board, spec).unwrap() else { continue };
        let allowed = &tables.allowed_starts[&spec.id];
        for shift in &inst.operator(op).unwrap().shifts {
            let slots = inst.grid.slots(shift.period).unwrap();
            for t in shift.start..shift.end {
                if allowed.contains(&(shift.period, t)) {
                    continue;
                }
                for length in 1..=slots {
                    for before in 0..=t {
                        for after in 0..=slots.saturating_sub(t + length) {
                            for loc in &inst.locations {
                                let p = SessionPlacement {
                                    session: spec.id,
                                    period: shift.period,
                                    start: t,
                                    length,
                                    before,
                                    after,
                                    location: loc.id,
                                };
                                let sol: AgendaSolution = [p].into_iter().collect();
                                let v = check_agenda(inst, board, &sol).unwrap();
                                if !v.iter().any(|x| UNARY.contains(&x.rule)) {
                                    bad.push(format!("{p:?}"));
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    bad
}
