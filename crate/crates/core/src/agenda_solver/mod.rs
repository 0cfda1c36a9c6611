//! Session timing and location (the agenda), built on a fixed board.

mod exact;
mod lns;
mod local;
mod problem;
mod prune;
mod state;

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feas::{check_agenda, AgendaSolution, BoardSolution};
use crate::model::{validate_instance, CostVector, Instance};
use crate::solve::{Budget, Mode, Outcome, SolveConfig, SolveHooks, SolveReport, Trace};

pub use prune::{candidate_space_size, compute_prune_tables, PruneTables};

use exact::Exact;
use local::Local;
use problem::Problem;

/// Which start and extension domains the agenda search explores.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Every shift slot as a start; extensions bounded only by the shift.
    Basic,
    /// Pruned starts, extended length capped at the ideal length.
    #[default]
    Optimized,
}

impl Variant {
    pub const ALL: [Variant; 2] = [Variant::Basic, Variant::Optimized];
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Basic => "basic",
            Variant::Optimized => "optimized",
        })
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "basic" => Ok(Variant::Basic),
            "optimized" => Ok(Variant::Optimized),
            _ => Err(format!("unknown variant {s:?} (expected basic or optimized)")),
        }
    }
}

/// Node allowance of the first complete search in anytime mode.
const FIRST_EXACT_CAP: u64 = 20_000;

pub fn solve_agenda(
    inst: &Instance,
    board: &BoardSolution,
    cfg: &SolveConfig,
    variant: Variant,
) -> Result<SolveReport<AgendaSolution>> {
    solve_agenda_with(inst, board, cfg, variant, &SolveHooks::default())
}

pub fn solve_agenda_with(
    inst: &Instance,
    board: &BoardSolution,
    cfg: &SolveConfig,
    variant: Variant,
    hooks: &SolveHooks,
) -> Result<SolveReport<AgendaSolution>> {
    cfg.validate().map_err(Error::InvalidParams)?;
    let issues = validate_instance(inst);
    if !issues.is_empty() {
        return Err(Error::InvalidInstance(issues));
    }
    let mut budget = Budget::new(cfg, hooks);
    let mut trace = Trace::new(hooks, cfg.emit_improvements, "agenda");
    let prob = Problem::new(inst, board, variant)?;

    if has_unplaceable_mandatory(&prob) {
        return Ok(SolveReport {
            outcome: Outcome::Unsatisfiable,
            best: None,
            cost: None,
            wall_time: budget.elapsed(),
            trace: Vec::new(),
            nodes: budget.nodes,
        });
    }

    let mut best = None;
    let mut local = Local::new(&prob);
    local.greedy(&mut budget);
    local.record(&budget, &mut trace, &mut best);
    let mut complete = false;
    if cfg.mode == Mode::Anytime {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        local.run(&mut rng, &mut budget, &mut trace, &mut best);
        // Alternate neighbourhood search with complete searches of growing effort.
        let stale = 40 + 4 * prob.sessions.len() as u64;
        let mut cap = FIRST_EXACT_CAP;
        while budget.stopped().is_none() {
            lns::improve(&prob, &mut rng, &mut budget, &mut trace, &mut best, stale);
            if budget.stopped().is_some() {
                break;
            }
            budget.set_cap(Some(cap));
            let mut bb = Exact::new(&prob, best.take());
            complete = bb.run(&mut budget, &mut trace);
            best = bb.best;
            budget.set_cap(None);
            if complete {
                break;
            }
            cap *= 2;
        }
    } else if budget.stopped().is_none() {
        let mut bb = Exact::new(&prob, best.take());
        complete = bb.run(&mut budget, &mut trace);
        best = bb.best;
    }

    let outcome = match (&best, complete) {
        (Some(_), true) => Outcome::OptimumFound,
        (None, true) => Outcome::Unsatisfiable,
        (Some(_), false) => Outcome::Satisfiable,
        (None, false) => Outcome::Unknown,
    };
    let (solution, cost) = match best {
        Some((plc, cost)) => (Some(prob.to_solution(&plc)), Some(CostVector(cost.to_vec()))),
        None => (None, None),
    };
    if let Some(sol) = &solution {
        debug_assert!(
            check_agenda(inst, board, sol).map(|v| v.is_empty()).unwrap_or(false),
            "agenda search produced an infeasible solution: {:?}",
            check_agenda(inst, board, sol)
        );
    }
    Ok(SolveReport {
        outcome,
        best: solution,
        cost,
        wall_time: budget.elapsed(),
        trace: trace.into_points(),
        nodes: budget.nodes,
    })
}

/// A mandatory session with no start that fits its shift, forced time and
/// forbidden windows makes the agenda infeasible outright.
fn has_unplaceable_mandatory(prob: &Problem) -> bool {
    prob.sessions.iter().enumerate().any(|(s, ss)| {
        !ss.optional
            && !(0..prob.n_periods as u32).any(|p| {
                let Some((st, end)) = ss.shifts[p as usize] else { return false };
                (st..end).any(|t| {
                    prob.allowed_time(s, p, t) && ss.forced.is_none_or(|f| f == (p, t))
                })
            })
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builder::{single_period_grid, two_period_grid, InstanceBuilder};
    use crate::feas::agenda_cost;
    use crate::model::{
        OperatorId, Optionality, PatientId, Priority, SessionId, SessionKind, SessionPreference,
        SlotRef, Window,
    };

    fn board_of(pairs: &[(u32, i32)]) -> BoardSolution {
        pairs.iter().map(|&(p, o)| (PatientId(p), OperatorId(o))).collect()
    }

    fn exact() -> SolveConfig {
        SolveConfig::exact(10.0)
    }

    fn solved(inst: &Instance, board: &BoardSolution, variant: Variant) -> SolveReport<AgendaSolution> {
        let r = solve_agenda(inst, board, &exact(), variant).unwrap();
        if let Some(sol) = &r.best {
            assert!(check_agenda(inst, board, sol).unwrap().is_empty());
            assert_eq!(&agenda_cost(inst, board, sol).unwrap(), r.cost.as_ref().unwrap());
        }
        r
    }

    #[test]
    fn single_session_at_ideal_length() {
        let mut b = InstanceBuilder::new(single_period_grid(24));
        b.operator(1, &[(0, 0, 24)]);
        b.location(1, 1, 1);
        b.patient(1, 4);
        b.session(1, SessionKind::Individual, 3, 4, 1);
        let inst = b.build();
        let board = board_of(&[(1, 1)]);
        for v in Variant::ALL {
            let r = solved(&inst, &board, v);
            assert_eq!(r.outcome, Outcome::OptimumFound);
            assert_eq!(r.cost.unwrap().0, vec![0; 6]);
            assert_eq!(r.best.unwrap().get(SessionId(1)).unwrap().length, 4);
        }
    }

    #[test]
    fn two_sessions_share_a_short_shift_fairly() {
        let mut b = InstanceBuilder::new(single_period_grid(8));
        b.operator(1, &[(0, 0, 8)]);
        b.location(1, 1, 1);
        for p in 1..=2 {
            b.patient(p, 4);
            b.session(p, SessionKind::Individual, 4, 6, 1);
        }
        let inst = b.build();
        let board = board_of(&[(1, 1), (2, 1)]);
        let r = solved(&inst, &board, Variant::Optimized);
        assert_eq!(r.outcome, Outcome::OptimumFound);
        let sol = r.best.unwrap();
        assert_eq!(sol.get(SessionId(1)).unwrap().length, 4);
        assert_eq!(sol.get(SessionId(2)).unwrap().length, 4);
        assert_eq!(r.cost.unwrap().0[0], 4);
    }

    #[test]
    fn ten_slot_split_is_even() {
        let mut b = InstanceBuilder::new(single_period_grid(10));
        b.operator(1, &[(0, 0, 10)]);
        b.location(1, 1, 1);
        for p in 1..=2 {
            b.patient(p, 4);
            b.session(p, SessionKind::Individual, 4, 6, 1);
        }
        let inst = b.build();
        let board = board_of(&[(1, 1), (2, 1)]);
        let sol = solved(&inst, &board, Variant::Optimized).best.unwrap();
        assert_eq!(sol.get(SessionId(1)).unwrap().length, 5);
        assert_eq!(sol.get(SessionId(2)).unwrap().length, 5);
    }

    #[test]
    fn high_priority_preference_sets_start() {
        let mut b = InstanceBuilder::new(single_period_grid(24));
        b.operator(1, &[(0, 0, 24)]);
        b.location(1, 1, 1);
        b.patient(1, 4);
        b.session(1, SessionKind::Individual, 4, 4, 1).preference = Some(SessionPreference {
            period: 0,
            start: 3,
            priority: Priority::High,
        });
        let inst = b.build();
        let board = board_of(&[(1, 1)]);
        let r = solved(&inst, &board, Variant::Optimized);
        assert_eq!(r.cost.unwrap().0, vec![0; 6]);
        assert_eq!(r.best.unwrap().get(SessionId(1)).unwrap().start, 3);
    }

    #[test]
    fn forbidden_window_makes_mandatory_session_unsatisfiable() {
        let mut b = InstanceBuilder::new(single_period_grid(12));
        b.operator(1, &[(0, 0, 12)]);
        b.location(1, 1, 1);
        b.patient(1, 4).forbidden = vec![Window::new(0, 2, 10)];
        b.session(1, SessionKind::Individual, 4, 4, 1);
        let inst = b.build();
        let r = solve_agenda(&inst, &board_of(&[(1, 1)]), &exact(), Variant::Optimized).unwrap();
        assert_eq!(r.outcome, Outcome::Unsatisfiable);
        assert!(r.best.is_none());
    }

    #[test]
    fn optional_session_dropped_when_it_cannot_fit() {
        let mut b = InstanceBuilder::new(single_period_grid(6));
        b.operator(1, &[(0, 0, 6)]).total_time = Some(12);
        b.location(1, 1, 1);
        b.patient(1, 4);
        b.session(1, SessionKind::Individual, 4, 4, 1);
        b.patient(2, 0);
        b.session(2, SessionKind::Individual, 4, 4, 1).optionality = Optionality::Optional;
        let inst = b.build();
        let r = solved(&inst, &board_of(&[(1, 1), (2, 1)]), Variant::Optimized);
        assert_eq!(r.outcome, Outcome::OptimumFound);
        assert_eq!(r.cost.unwrap().0, vec![0, 0, 0, 1, 0, 0]);
    }

    #[test]
    fn forced_time_is_respected_in_both_variants() {
        let mut b = InstanceBuilder::new(two_period_grid(12));
        b.operator(1, &[(0, 0, 12), (1, 0, 12)]);
        b.location(1, 1, 1);
        b.patient(1, 3);
        b.session(1, SessionKind::Individual, 3, 3, 1).forced_time = Some(SlotRef { period: 1, slot: 7 });
        let inst = b.build();
        for v in Variant::ALL {
            let sol = solved(&inst, &board_of(&[(1, 1)]), v).best.unwrap();
            let p = sol.get(SessionId(1)).unwrap();
            assert_eq!((p.period, p.start), (1, 7));
        }
    }

    #[test]
    fn anytime_is_reproducible_under_node_limit() {
        let mut b = InstanceBuilder::new(two_period_grid(12));
        b.operator(1, &[(0, 0, 12), (1, 0, 12)]);
        b.location(1, 2, 1);
        for p in 1..=4 {
            b.patient(p, 3);
            b.session(p, SessionKind::Individual, 3, 5, 1);
        }
        let inst = b.build();
        let board = board_of(&[(1, 1), (2, 1), (3, 1), (4, 1)]);
        let cfg = SolveConfig {
            node_limit: Some(20_000),
            ..SolveConfig::anytime(10.0, 7)
        };
        let a = solve_agenda(&inst, &board, &cfg, Variant::Optimized).unwrap();
        let b2 = solve_agenda(&inst, &board, &cfg, Variant::Optimized).unwrap();
        assert_eq!(a.best, b2.best);
        assert_eq!(a.cost, b2.cost);
        let costs: Vec<_> = a.trace.iter().map(|t| t.cost.clone()).collect();
        assert!(costs.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn variant_names_round_trip() {
        for v in Variant::ALL {
            assert_eq!(v.to_string().parse::<Variant>().unwrap(), v);
        }
        assert!("fast".parse::<Variant>().is_err());
    }
}
