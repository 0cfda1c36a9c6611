//! Depth-first branch and bound. Individual parts and locations are fixed
//! first; supervised extensions are chosen afterwards for complete
//! assignments that beat the incumbent, since they do not affect the cost.

use crate::feas::{placement_cost, unscheduled_cost};
use crate::model::CostVector;
use crate::solve::{add, sub, Budget, Trace};

use super::problem::{Core, Cost, Plc, Problem};
use super::state::State;

pub(crate) struct Exact<'p, 'a> {
    prob: &'p Problem<'a>,
    order: Vec<usize>,
    state: State,
    decided: Vec<bool>,
    /// Index of the cheapest core that still fits, per undecided session.
    first_fit: Vec<usize>,
    /// Upper bound on extended time still reachable per patient.
    pot: Vec<u32>,
    /// Undecided sessions per macro-location.
    pending: Vec<u32>,
    core_pot: Vec<u32>,
    neighbours: Vec<Vec<usize>>,
    /// Cost of the sessions outside the search.
    base: Cost,
    pub best: Option<(Vec<Option<Plc>>, Cost)>,
}

impl<'p, 'a> Exact<'p, 'a> {
    /// Search over every session.
    pub fn new(prob: &'p Problem<'a>, incumbent: Option<(Vec<Option<Plc>>, Cost)>) -> Self {
        let all: Vec<usize> = (0..prob.sessions.len()).collect();
        let fixed = vec![None; prob.sessions.len()];
        Self::around(prob, &fixed, &all, incumbent)
    }

    /// Search over the `free` sessions only; the others keep their
    /// placements in `fixed`.
    pub fn around(
        prob: &'p Problem<'a>,
        fixed: &[Option<Plc>],
        free: &[usize],
        incumbent: Option<(Vec<Option<Plc>>, Cost)>,
    ) -> Self {
        let n = prob.sessions.len();
        let mut is_free = vec![false; n];
        for &s in free {
            is_free[s] = true;
        }
        let mut order = free.to_vec();
        order.sort_by_key(|&s| (prob.sessions[s].n_starts, s));
        let mut state = State::new(prob);
        let mut pot = vec![0; prob.pats.len()];
        let mut pending = vec![0; prob.macros.len()];
        let mut base = [0; 6];
        for (s, ss) in prob.sessions.iter().enumerate() {
            if is_free[s] {
                pot[ss.pat] += ss.potential;
                pending[ss.mac] += 1;
                continue;
            }
            match fixed[s] {
                Some(p) => {
                    state.place(prob, s, p);
                    pot[ss.pat] += p.ext_len();
                    base = add(base, placement_cost(ss.spec, p.period, p.start, p.len));
                }
                None => base = add(base, unscheduled_cost(ss.spec)),
            }
        }
        let neighbours = (0..n)
            .map(|s| {
                if !is_free[s] {
                    return Vec::new();
                }
                let a = &prob.sessions[s];
                free.iter()
                    .copied()
                    .filter(|&q| q != s)
                    .filter(|&q| {
                        let b = &prob.sessions[q];
                        b.op == a.op || b.pat == a.pat
                    })
                    .collect()
            })
            .collect();
        Self {
            prob,
            order,
            state,
            decided: is_free.iter().map(|f| !f).collect(),
            first_fit: vec![0; n],
            pot,
            pending,
            core_pot: vec![0; n],
            neighbours,
            base,
            best: incumbent,
        }
    }

    /// Runs to completion or until the budget interrupts it; returns `true`
    /// when the search space was exhausted.
    pub fn run(&mut self, budget: &mut Budget, trace: &mut Trace) -> bool {
        let prob = self.prob;
        if (0..prob.pats.len()).any(|p| self.pot[p] < prob.pats[p].daily) {
            return !budget.interrupted();
        }
        let mut lb = [0; 6];
        for i in 0..self.order.len() {
            let s = self.order[i];
            match self.scan_first_fit(s, 0) {
                Some(c) => {
                    self.first_fit[s] = c;
                    lb = add(lb, prob.sessions[s].cores[c].cost);
                }
                None => return !budget.interrupted(),
            }
        }
        self.dfs(0, self.base, lb, budget, trace);
        !budget.interrupted()
    }

    fn beats_best(&self, c: Cost) -> bool {
        self.best.as_ref().is_none_or(|(_, b)| c < *b)
    }

    /// First core at or after `from` with some location it fits in at zero extension.
    fn scan_first_fit(&self, s: usize, from: usize) -> Option<usize> {
        let ss = &self.prob.sessions[s];
        (from..ss.cores.len()).find(|&i| {
            let c = &ss.cores[i];
            c.is_skip()
                || ss.locs.iter().any(|&loc| {
                    self.state.fits(self.prob, s, &zero_ext(c, loc))
                })
        })
    }

    fn dfs(&mut self, depth: usize, cost: Cost, lb_sum: Cost, budget: &mut Budget, trace: &mut Trace) {
        if budget.tick() {
            return;
        }
        let prob = self.prob;
        if depth == self.order.len() {
            self.extensions(cost, budget, trace);
            return;
        }
        let s = self.order[depth];
        let ss = &prob.sessions[s];
        let own_lb = ss.cores[self.first_fit[s]].cost;
        let rest = sub(lb_sum, own_lb);
        self.decided[s] = true;
        self.pending[ss.mac] -= 1;
        let pat = ss.pat;
        let daily = prob.pats[pat].daily;

        for ci in self.first_fit[s]..ss.cores.len() {
            let core = ss.cores[ci];
            let next = add(cost, core.cost);
            if !self.beats_best(add(next, rest)) {
                break;
            }
            if core.is_skip() {
                self.pot[pat] -= ss.potential;
                if self.pot[pat] >= daily {
                    self.descend(s, depth, next, rest, budget, trace);
                }
                self.pot[pat] += ss.potential;
                if budget.interrupted() {
                    break;
                }
                continue;
            }
            let cp = prob.max_ext_len(s, &core);
            let mut seen_sigs: Vec<usize> = Vec::new();
            for &loc in &ss.locs {
                if self.state.loc_used[loc] == 0 {
                    let sig = prob.locs[loc].signature;
                    if seen_sigs.contains(&sig) {
                        continue;
                    }
                    seen_sigs.push(sig);
                }
                if budget.tick() {
                    break;
                }
                let p = zero_ext(&core, loc);
                if !self.state.fits(prob, s, &p) {
                    continue;
                }
                let pot_after = self.pot[pat] - ss.potential + cp;
                if pot_after < daily {
                    continue;
                }
                self.state.place(prob, s, p);
                if self.state.empty_location_bound_ok(prob, &p, self.pending[ss.mac]) {
                    self.pot[pat] = pot_after;
                    self.core_pot[s] = cp;
                    self.descend(s, depth, next, rest, budget, trace);
                    self.pot[pat] = pot_after + ss.potential - cp;
                }
                self.state.remove(prob, s);
            }
            if budget.interrupted() {
                break;
            }
        }
        self.pending[ss.mac] += 1;
        self.decided[s] = false;
    }

    /// Refreshes the cheapest-fitting core of undecided neighbours of `s`,
    /// then recurses if the tightened bound still beats the incumbent.
    fn descend(
        &mut self,
        s: usize,
        depth: usize,
        next: Cost,
        rest: Cost,
        budget: &mut Budget,
        trace: &mut Trace,
    ) {
        let prob = self.prob;
        let mut undo: Vec<(usize, usize)> = Vec::new();
        let mut lb = rest;
        let mut dead = false;
        for i in 0..self.neighbours[s].len() {
            let q = self.neighbours[s][i];
            if self.decided[q] {
                continue;
            }
            let old = self.first_fit[q];
            match self.scan_first_fit(q, old) {
                Some(new) if new != old => {
                    let cores = &prob.sessions[q].cores;
                    lb = add(sub(lb, cores[old].cost), cores[new].cost);
                    undo.push((q, old));
                    self.first_fit[q] = new;
                }
                Some(_) => {}
                None => {
                    dead = true;
                    break;
                }
            }
        }
        if !dead && self.beats_best(add(next, lb)) {
            self.dfs(depth + 1, next, lb, budget, trace);
        }
        for (q, old) in undo {
            self.first_fit[q] = old;
        }
    }

    /// Looks for extensions completing the current core assignment.
    fn extensions(&mut self, cost: Cost, budget: &mut Budget, trace: &mut Trace) {
        let prob = self.prob;
        let list: Vec<usize> = self
            .order
            .iter()
            .copied()
            .filter(|&s| self.state.plc[s].is_some())
            .collect();
        let mut extra = vec![0u32; prob.pats.len()];
        let mut pending = vec![0u32; prob.macros.len()];
        for &s in &list {
            let ss = &prob.sessions[s];
            let len = self.state.plc[s].expect("placed").len;
            extra[ss.pat] += self.core_pot[s] - len;
            pending[ss.mac] += 1;
        }
        if (0..prob.pats.len()).any(|p| self.state.pat_ext[p] + extra[p] < prob.pats[p].daily) {
            return;
        }
        if self.extend(0, &list, &mut extra, &mut pending, budget) {
            self.best = Some((self.state.plc.clone(), cost));
            trace.offer(budget.elapsed(), &CostVector(cost.to_vec()));
            // Restore zero extensions so phase one can keep backtracking.
            for &s in &list {
                let p = self.state.remove(prob, s);
                self.state.place(prob, s, p.with_ext(0, 0));
            }
        }
    }

    fn extend(
        &mut self,
        i: usize,
        list: &[usize],
        extra: &mut [u32],
        pending: &mut [u32],
        budget: &mut Budget,
    ) -> bool {
        let prob = self.prob;
        if i == list.len() {
            return self.state.balanced_everywhere(prob)
                && (0..prob.pats.len()).all(|p| self.state.pat_ext[p] >= prob.pats[p].daily);
        }
        let s = list[i];
        let ss = &prob.sessions[s];
        let base = self.state.remove(prob, s);
        let core = Core {
            period: base.period,
            start: base.start,
            len: base.len,
            cost: [0; 6],
        };
        let gain = self.core_pot[s] - base.len;
        extra[ss.pat] -= gain;
        pending[ss.mac] -= 1;
        let daily = prob.pats[ss.pat].daily;
        let mut found = false;
        for (lb, la) in prob.ext_options(s, &core) {
            if budget.tick() {
                break;
            }
            let p = base.with_ext(lb, la);
            if self.state.pat_ext[ss.pat] + p.ext_len() + extra[ss.pat] < daily {
                continue;
            }
            if !self.state.fits(prob, s, &p) {
                continue;
            }
            self.state.place(prob, s, p);
            if self.state.balance_bound_ok(prob, &p, pending[ss.mac])
                && self.extend(i + 1, list, extra, pending, budget)
            {
                found = true;
                break;
            }
            self.state.remove(prob, s);
        }
        extra[ss.pat] += gain;
        pending[ss.mac] += 1;
        if !found {
            self.state.place(prob, s, base);
        }
        found
    }
}

pub(crate) fn zero_ext(core: &Core, loc: usize) -> Plc {
    Plc {
        period: core.period,
        start: core.start,
        len: core.len,
        lb: 0,
        la: 0,
        loc,
    }
}
