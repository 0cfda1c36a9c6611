//! Patient → operator assignment (the board).

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::feas::{check_board, BoardSolution, BOARD_LEVELS};
use crate::model::{validate_instance, CostVector, Instance, MacroId, OperatorId, PatientType};
use crate::solve::{add, sub, Budget, Mode, Outcome, SolveConfig, SolveHooks, SolveReport, Trace};

type Cost = [u64; BOARD_LEVELS];

pub fn solve_board(inst: &Instance, cfg: &SolveConfig) -> Result<SolveReport<BoardSolution>> {
    solve_board_with(inst, cfg, &SolveHooks::default())
}

pub fn solve_board_with(
    inst: &Instance,
    cfg: &SolveConfig,
    hooks: &SolveHooks,
) -> Result<SolveReport<BoardSolution>> {
    cfg.validate().map_err(Error::InvalidParams)?;
    let issues = validate_instance(inst);
    if !issues.is_empty() {
        return Err(Error::InvalidInstance(issues));
    }
    let mut budget = Budget::new(cfg, hooks);
    let mut trace = Trace::new(hooks, cfg.emit_improvements, "board");
    let prob = Problem::new(inst);

    let mut state = State::new(&prob);
    greedy(&prob, &mut state);
    let mut best = state.assign.clone();
    let mut best_cost = prob.total_cost(&best);
    trace.offer(budget.elapsed(), &CostVector(best_cost.to_vec()));

    if cfg.mode == Mode::Anytime {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        local_search(&prob, &mut state, &mut rng, &mut budget, &mut trace);
        best = state.assign.clone();
        best_cost = prob.total_cost(&best);
    }

    let mut proven = false;
    if budget.stopped().is_none() {
        let mut bb = BranchAndBound::new(&prob, best.clone(), best_cost);
        let complete = bb.run(&mut budget, &mut trace);
        best = bb.best;
        best_cost = bb.best_cost;
        proven = complete;
        if proven && cfg.mode == Mode::Exact {
            if let Some(canon) = canonical(&prob, best_cost, &mut budget) {
                best = canon;
            }
        }
    }

    let solution = prob.to_solution(&best);
    debug_assert!(check_board(inst, &solution).map(|v| v.is_empty()).unwrap_or(false));
    let report = SolveReport {
        outcome: if proven {
            Outcome::OptimumFound
        } else {
            Outcome::Satisfiable
        },
        best: Some(solution),
        cost: Some(CostVector(best_cost.to_vec())),
        wall_time: budget.elapsed(),
        trace: trace.into_points(),
        nodes: budget.nodes,
    };
    Ok(report)
}

struct Pat {
    type_idx: usize,
    daily: u32,
    /// (macro index, session minimum) per session.
    sessions: Vec<(usize, u32)>,
    /// Distinct macro indices the patient has sessions in.
    macros: Vec<usize>,
}

struct Op {
    total_time: Option<u32>,
    max_patients: Option<u32>,
    /// Limit per patient-type index.
    type_limit: Vec<Option<u32>>,
}

struct Problem<'a> {
    inst: &'a Instance,
    pats: Vec<Pat>,
    ops: Vec<Op>,
    n_macros: usize,
    n_types: usize,
    /// `cost[p][o]`.
    cost: Vec<Vec<Cost>>,
    /// Statically admissible operators per patient, cheapest first.
    admissible: Vec<Vec<usize>>,
    fict: usize,
}

impl<'a> Problem<'a> {
    fn new(inst: &'a Instance) -> Self {
        let mut types: Vec<PatientType> = inst.patients.iter().map(|p| p.ptype).collect();
        types.sort();
        types.dedup();
        let type_idx: HashMap<PatientType, usize> =
            types.iter().enumerate().map(|(i, t)| (*t, i)).collect();
        let mut macros: Vec<MacroId> = inst.sessions.iter().map(|s| s.macro_location).collect();
        macros.sort();
        macros.dedup();
        let macro_idx: HashMap<MacroId, usize> =
            macros.iter().enumerate().map(|(i, m)| (*m, i)).collect();

        let pats: Vec<Pat> = inst
            .patients
            .iter()
            .map(|p| {
                let sessions: Vec<(usize, u32)> = p
                    .sessions
                    .iter()
                    .filter_map(|sid| inst.session(*sid))
                    .map(|s| (macro_idx[&s.macro_location], s.min_length))
                    .collect();
                let mut ms: Vec<usize> = sessions.iter().map(|s| s.0).collect();
                ms.sort_unstable();
                ms.dedup();
                Pat {
                    type_idx: type_idx[&p.ptype],
                    daily: p.min_daily_length,
                    sessions,
                    macros: ms,
                }
            })
            .collect();
        let ops: Vec<Op> = inst
            .operators
            .iter()
            .map(|o| Op {
                total_time: if o.id.is_fictitious() { None } else { o.total_time },
                max_patients: if o.id.is_fictitious() { None } else { o.max_patients },
                type_limit: types
                    .iter()
                    .map(|t| {
                        if o.id.is_fictitious() {
                            None
                        } else {
                            o.type_limits.get(t).copied()
                        }
                    })
                    .collect(),
            })
            .collect();
        let fict = inst
            .operators
            .iter()
            .position(|o| o.id.is_fictitious())
            .expect("validated instance has the fictitious operator");

        let mut cost = Vec::with_capacity(inst.patients.len());
        let mut admissible = Vec::with_capacity(inst.patients.len());
        for (pi, p) in inst.patients.iter().enumerate() {
            let row: Vec<Cost> = inst
                .operators
                .iter()
                .map(|o| {
                    [
                        p.preference_weight(o.id) as u64,
                        o.id.is_fictitious() as u64,
                        p.history_weight(o.id) as u64,
                    ]
                })
                .collect();
            let lb_work = pats[pi]
                .sessions
                .iter()
                .map(|s| s.1.min(pats[pi].daily))
                .max()
                .unwrap_or(0);
            let mut adm: Vec<usize> = (0..inst.operators.len())
                .filter(|&oi| {
                    let o = &inst.operators[oi];
                    let op = &ops[oi];
                    o.is_qualified(&p.ptype)
                        && op.max_patients.is_none_or(|m| m >= 1)
                        && op.type_limit[pats[pi].type_idx].is_none_or(|m| m >= 1)
                        && op.total_time.is_none_or(|t| t >= lb_work)
                })
                .collect();
            adm.sort_by_key(|&oi| (row[oi], inst.operators[oi].id));
            cost.push(row);
            admissible.push(adm);
        }
        Self {
            inst,
            pats,
            ops,
            n_macros: macros.len(),
            n_types: types.len(),
            cost,
            admissible,
            fict,
        }
    }

    fn n(&self) -> usize {
        self.pats.len()
    }

    fn total_cost(&self, assign: &[usize]) -> Cost {
        assign
            .iter()
            .enumerate()
            .fold([0; BOARD_LEVELS], |acc, (p, &o)| add(acc, self.cost[p][o]))
    }

    fn op_id(&self, o: usize) -> OperatorId {
        self.inst.operators[o].id
    }

    fn to_solution(&self, assign: &[usize]) -> BoardSolution {
        self.inst
            .patients
            .iter()
            .zip(assign)
            .map(|(p, &o)| (p.id, self.op_id(o)))
            .collect()
    }
}

const UNASSIGNED: usize = usize::MAX;

/// Per-operator bookkeeping for incremental feasibility.
struct State {
    assign: Vec<usize>,
    members: Vec<Vec<usize>>,
    type_count: Vec<Vec<u32>>,
    macro_count: Vec<Vec<u32>>,
}

impl State {
    fn new(prob: &Problem) -> Self {
        let m = prob.ops.len();
        Self {
            assign: vec![UNASSIGNED; prob.n()],
            members: vec![Vec::new(); m],
            type_count: vec![vec![0; prob.n_types]; m],
            macro_count: vec![vec![0; prob.n_macros]; m],
        }
    }

    fn add(&mut self, prob: &Problem, p: usize, o: usize) {
        self.assign[p] = o;
        self.members[o].push(p);
        self.type_count[o][prob.pats[p].type_idx] += 1;
        for &m in &prob.pats[p].macros {
            self.macro_count[o][m] += 1;
        }
    }

    fn remove(&mut self, prob: &Problem, p: usize) {
        let o = self.assign[p];
        self.assign[p] = UNASSIGNED;
        let pos = self.members[o].iter().position(|&q| q == p).expect("member");
        self.members[o].swap_remove(pos);
        self.type_count[o][prob.pats[p].type_idx] -= 1;
        for &m in &prob.pats[p].macros {
            self.macro_count[o][m] -= 1;
        }
    }

    /// Count and type limits allow one more patient `p` on `o`.
    fn room_for(&self, prob: &Problem, p: usize, o: usize) -> bool {
        let op = &prob.ops[o];
        let t = prob.pats[p].type_idx;
        op.max_patients.is_none_or(|m| (self.members[o].len() as u32) < m)
            && op.type_limit[t].is_none_or(|m| self.type_count[o][t] < m)
    }

    fn patient_charge(&self, prob: &Problem, o: usize, p: usize) -> u32 {
        let pat = &prob.pats[p];
        let mut vals: Vec<u32> = pat
            .sessions
            .iter()
            .map(|&(m, smin)| {
                if self.macro_count[o][m] >= 2 {
                    smin
                } else {
                    pat.daily
                }
            })
            .collect();
        vals.sort_unstable();
        vals.dedup();
        vals.iter().sum()
    }

    fn workload(&self, prob: &Problem, o: usize) -> u32 {
        self.members[o]
            .iter()
            .map(|&p| self.patient_charge(prob, o, p))
            .sum()
    }

    fn workload_ok(&self, prob: &Problem, o: usize) -> bool {
        prob.ops[o]
            .total_time
            .is_none_or(|t| self.workload(prob, o) <= t)
    }

    /// Lower bound on the final workload of `o` when more patients may still join.
    fn workload_lb(&self, prob: &Problem, o: usize) -> u32 {
        let mut total = 0;
        for &p in &self.members[o] {
            let pat = &prob.pats[p];
            let mut fixed: Vec<u32> = Vec::new();
            let mut open = 0;
            for &(m, smin) in &pat.sessions {
                if self.macro_count[o][m] >= 2 {
                    fixed.push(smin);
                } else {
                    open = open.max(smin.min(pat.daily));
                }
            }
            fixed.sort_unstable();
            fixed.dedup();
            total += fixed.iter().sum::<u32>().max(open);
        }
        total
    }

    fn workload_lb_ok(&self, prob: &Problem, o: usize) -> bool {
        prob.ops[o]
            .total_time
            .is_none_or(|t| self.workload_lb(prob, o) <= t)
    }
}

/// Cheapest admissible operator first, with the fictitious one as fallback.
fn greedy(prob: &Problem, state: &mut State) {
    let mut order: Vec<usize> = (0..prob.n()).collect();
    order.sort_by_key(|&p| (prob.admissible[p].len(), p));
    for p in order {
        let mut placed = false;
        for &o in &prob.admissible[p] {
            if !state.room_for(prob, p, o) {
                continue;
            }
            state.add(prob, p, o);
            if state.workload_ok(prob, o) {
                placed = true;
                break;
            }
            state.remove(prob, p);
        }
        if !placed {
            state.add(prob, p, prob.fict);
        }
    }
}

fn local_search(
    prob: &Problem,
    state: &mut State,
    rng: &mut ChaCha8Rng,
    budget: &mut Budget,
    trace: &mut Trace,
) {
    let n = prob.n();
    if n == 0 {
        return;
    }
    let stale_limit = 2_000.max(100 * n as u64);
    let mut stale = 0u64;
    let mut cost = prob.total_cost(&state.assign);
    while stale < stale_limit && !budget.tick() {
        stale += 1;
        let p = rng.gen_range(0..n);
        let from = state.assign[p];
        if rng.gen_bool(0.5) {
            let Some(&to) = prob.admissible[p].choose(rng) else { continue };
            if to == from {
                continue;
            }
            let delta_new = add(sub(cost, prob.cost[p][from]), prob.cost[p][to]);
            if delta_new >= cost || !state.room_for(prob, p, to) {
                continue;
            }
            state.remove(prob, p);
            state.add(prob, p, to);
            if state.workload_ok(prob, to) && state.workload_ok(prob, from) {
                cost = delta_new;
                stale = 0;
                trace.offer(budget.elapsed(), &CostVector(cost.to_vec()));
            } else {
                state.remove(prob, p);
                state.add(prob, p, from);
            }
        } else {
            let q = rng.gen_range(0..n);
            let other = state.assign[q];
            if other == from
                || !prob.admissible[p].contains(&other)
                || !prob.admissible[q].contains(&from)
            {
                continue;
            }
            let swapped = add(
                add(sub(sub(cost, prob.cost[p][from]), prob.cost[q][other]), prob.cost[p][other]),
                prob.cost[q][from],
            );
            if swapped >= cost {
                continue;
            }
            state.remove(prob, p);
            state.remove(prob, q);
            if !state.room_for(prob, p, other) || !state.room_for(prob, q, from) {
                state.add(prob, p, from);
                state.add(prob, q, other);
                continue;
            }
            state.add(prob, p, other);
            state.add(prob, q, from);
            if state.workload_ok(prob, from) && state.workload_ok(prob, other) {
                cost = swapped;
                stale = 0;
                trace.offer(budget.elapsed(), &CostVector(cost.to_vec()));
            } else {
                state.remove(prob, p);
                state.remove(prob, q);
                state.add(prob, p, from);
                state.add(prob, q, other);
            }
        }
    }
}

/// Depth-first branch and bound over patients.
struct BranchAndBound<'p, 'a> {
    prob: &'p Problem<'a>,
    order: Vec<usize>,
    state: State,
    best: Vec<usize>,
    best_cost: Cost,
}

impl<'p, 'a> BranchAndBound<'p, 'a> {
    fn new(prob: &'p Problem<'a>, incumbent: Vec<usize>, incumbent_cost: Cost) -> Self {
        let mut order: Vec<usize> = (0..prob.n()).collect();
        order.sort_by_key(|&p| (prob.admissible[p].len(), p));
        Self {
            prob,
            order,
            state: State::new(prob),
            best: incumbent,
            best_cost: incumbent_cost,
        }
    }

    /// Returns `true` when the search space was exhausted.
    fn run(&mut self, budget: &mut Budget, trace: &mut Trace) -> bool {
        self.dfs(0, [0; BOARD_LEVELS], budget, trace);
        budget.stopped().is_none()
    }

    fn dfs(&mut self, depth: usize, cost: Cost, budget: &mut Budget, trace: &mut Trace) {
        if budget.tick() {
            return;
        }
        let prob = self.prob;
        if depth == self.order.len() {
            if cost < self.best_cost && (0..prob.ops.len()).all(|o| self.state.workload_ok(prob, o)) {
                self.best_cost = cost;
                self.best = self.state.assign.clone();
                trace.offer(budget.elapsed(), &CostVector(cost.to_vec()));
            }
            return;
        }
        let rest = remaining_bound(prob, &self.state, &self.order[depth + 1..]);
        let p = self.order[depth];
        for &o in &prob.admissible[p] {
            let next = add(cost, prob.cost[p][o]);
            if add(next, rest) >= self.best_cost {
                break;
            }
            if !self.state.room_for(prob, p, o) {
                continue;
            }
            self.state.add(prob, p, o);
            if self.state.workload_lb_ok(prob, o) {
                self.dfs(depth + 1, next, budget, trace);
            }
            self.state.remove(prob, p);
            if budget.stopped().is_some() {
                return;
            }
        }
    }
}

/// Sum over `rest` of the cheapest operator that still has room.
fn remaining_bound(prob: &Problem, state: &State, rest: &[usize]) -> Cost {
    let mut lb = [0; BOARD_LEVELS];
    for &q in rest {
        let c = prob.admissible[q]
            .iter()
            .find(|&&o| state.room_for(prob, q, o))
            .map(|&o| prob.cost[q][o])
            .unwrap_or(prob.cost[q][prob.fict]);
        lb = add(lb, c);
    }
    lb
}

/// Among assignments of cost `target`, the one that is smallest when read as
/// a list of operator ids in patient order.
fn canonical(prob: &Problem, target: Cost, budget: &mut Budget) -> Option<Vec<usize>> {
    let mut by_id: Vec<Vec<usize>> = prob.admissible.clone();
    for list in &mut by_id {
        list.sort_by_key(|&o| prob.op_id(o));
    }
    let mut order: Vec<usize> = (0..prob.n()).collect();
    order.sort_by_key(|&p| prob.inst.patients[p].id);
    let mut state = State::new(prob);
    fn go(
        prob: &Problem,
        by_id: &[Vec<usize>],
        order: &[usize],
        depth: usize,
        cost: Cost,
        target: Cost,
        state: &mut State,
        budget: &mut Budget,
    ) -> bool {
        if budget.tick() {
            return false;
        }
        if depth == order.len() {
            return cost == target && (0..prob.ops.len()).all(|o| state.workload_ok(prob, o));
        }
        let rest = remaining_bound(prob, state, &order[depth + 1..]);
        let p = order[depth];
        for &o in &by_id[p] {
            let next = add(cost, prob.cost[p][o]);
            if add(next, rest) > target || !state.room_for(prob, p, o) {
                continue;
            }
            state.add(prob, p, o);
            if state.workload_lb_ok(prob, o)
                && go(prob, by_id, order, depth + 1, next, target, state, budget)
            {
                return true;
            }
            state.remove(prob, p);
            if budget.stopped().is_some() {
                return false;
            }
        }
        false
    }
    go(prob, &by_id, &order, 0, [0; BOARD_LEVELS], target, &mut state, budget)
        .then(|| state.assign.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builder::{single_period_grid, InstanceBuilder};
    use crate::feas::board_cost;
    use crate::model::{Needs, PayStatus, PatientId, Preference, SessionKind, TypeValue};

    fn two_patients() -> InstanceBuilder {
        let mut b = InstanceBuilder::new(single_period_grid(24));
        b.operator(1, &[(0, 0, 24)]);
        b.operator(2, &[(0, 0, 24)]);
        b.location(1, 1, 1);
        for p in 1..=2 {
            b.patient(p, 4);
            b.session(p, SessionKind::Individual, 4, 4, 1);
        }
        b
    }

    #[test]
    fn single_patient_goes_to_its_operator() {
        let mut b = InstanceBuilder::new(single_period_grid(24));
        b.operator(1, &[(0, 0, 24)]);
        b.location(1, 1, 1);
        b.patient(1, 4);
        b.session(1, SessionKind::Individual, 4, 4, 1);
        b.patient_mut(1).preferred_operators = vec![Preference { operator: OperatorId(1), weight: 0 }];
        let inst = b.build();
        let r = solve_board(&inst, &SolveConfig::exact(5.0)).unwrap();
        assert_eq!(r.outcome, Outcome::OptimumFound);
        assert_eq!(r.cost.unwrap().0, vec![0, 0, 0]);
        assert_eq!(r.best.unwrap().operator_of(PatientId(1)), Some(OperatorId(1)));
    }

    #[test]
    fn unqualified_patient_falls_to_fictitious() {
        let mut b = two_patients();
        b.patient_mut(2).ptype = PatientType::new(TypeValue::Orthopaedic, Needs::Lifter, PayStatus::Payer);
        for o in [1, 2] {
            b.operator_mut(o).qualifications = [TypeValue::Neurologic].into_iter().collect();
        }
        let inst = b.build();
        let r = solve_board(&inst, &SolveConfig::exact(5.0)).unwrap();
        assert_eq!(r.outcome, Outcome::OptimumFound);
        let best = r.best.unwrap();
        assert_eq!(best.operator_of(PatientId(2)), Some(OperatorId::FICTITIOUS));
        assert_eq!(r.cost.unwrap().0[1], 1);
        assert_eq!(board_cost(&inst, &best).unwrap().0[1], 1);
    }

    #[test]
    fn workload_limit_splits_patients() {
        let mut b = two_patients();
        for o in [1, 2] {
            b.operator_mut(o).total_time = Some(4);
        }
        for p in [1, 2] {
            b.patient_mut(p).preferred_operators = vec![Preference { operator: OperatorId(1), weight: 0 }];
        }
        let inst = b.build();
        let r = solve_board(&inst, &SolveConfig::exact(5.0)).unwrap();
        assert_eq!(r.outcome, Outcome::OptimumFound);
        let best = r.best.unwrap();
        // Sharing one room charges each session minimum: 4 + 4 > 4.
        assert_ne!(best.operator_of(PatientId(1)), best.operator_of(PatientId(2)));
        assert_eq!(best.operator_of(PatientId(1)), Some(OperatorId(1)));
        assert_eq!(r.cost.unwrap().0, vec![2, 0, 0]);
    }

    #[test]
    fn anytime_trace_strictly_decreases() {
        let mut b = two_patients();
        for p in 3..=6 {
            b.patient(p, 3);
            b.session(p, SessionKind::Individual, 3, 4, 1);
        }
        b.operator_mut(1).max_patients = Some(3);
        let inst = b.build();
        let r = solve_board(&inst, &SolveConfig::anytime(2.0, 7)).unwrap();
        assert!(r.trace.windows(2).all(|w| w[1].cost < w[0].cost));
        assert_eq!(r.trace.last().map(|t| &t.cost), r.cost.as_ref());
        assert!(check_board(&inst, r.best.as_ref().unwrap()).unwrap().is_empty());
    }

    #[test]
    fn invalid_instance_is_rejected() {
        let mut inst = two_patients().build();
        inst.operators.retain(|o| !o.id.is_fictitious());
        assert!(matches!(
            solve_board(&inst, &SolveConfig::exact(1.0)),
            Err(Error::InvalidInstance(_))
        ));
    }
}
