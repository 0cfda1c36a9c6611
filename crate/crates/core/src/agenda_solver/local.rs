//! Greedy construction and seeded local search over complete placements.
//! Unplaced mandatory sessions and unmet daily minimums are carried as
//! penalties ranked above the cost, so the search can start infeasible.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::feas::{placement_cost, unscheduled_cost};
use crate::model::CostVector;
use crate::solve::{add, sub, Budget, Trace};

use super::exact::zero_ext;
use super::problem::{Core, Cost, Plc, Problem};
use super::state::State;
use super::Variant;

/// (unplaced mandatory sessions, missing daily slots, cost).
type Objective = (u32, u32, Cost);

/// Extension pairs tried per core and location when inserting.
const EXT_TRIES: usize = 48;

#[derive(Clone)]
pub(crate) struct Local<'p, 'a> {
    prob: &'p Problem<'a>,
    pub state: State,
    cost: Cost,
    unplaced: u32,
    deficit: u32,
}

impl<'p, 'a> Local<'p, 'a> {
    pub fn new(prob: &'p Problem<'a>) -> Self {
        let mut cost = [0; 6];
        let mut unplaced = 0;
        for s in &prob.sessions {
            cost = add(cost, unscheduled_cost(s.spec));
            unplaced += !s.optional as u32;
        }
        Self {
            prob,
            state: State::new(prob),
            cost,
            unplaced,
            deficit: prob.pats.iter().map(|p| p.daily).sum(),
        }
    }

    pub fn objective(&self) -> Objective {
        (self.unplaced, self.deficit, self.cost)
    }

    pub fn is_feasible(&self) -> bool {
        self.unplaced == 0 && self.deficit == 0
    }

    fn session_cost(&self, s: usize, p: Option<&Plc>) -> Cost {
        let spec = self.prob.sessions[s].spec;
        match p {
            Some(p) => placement_cost(spec, p.period, p.start, p.len),
            None => unscheduled_cost(spec),
        }
    }

    fn pat_deficit(&self, pat: usize) -> u32 {
        self.prob.pats[pat].daily.saturating_sub(self.state.pat_ext[pat])
    }

    /// Whether `p` lies inside the variant's search domain.
    fn in_domain(&self, s: usize, p: &Plc) -> bool {
        let prob = self.prob;
        match prob.variant {
            Variant::Basic => true,
            Variant::Optimized => {
                let ss = &prob.sessions[s];
                prob.allowed_time(s, p.period, p.start)
                    && ss.forced.is_none_or(|f| f == (p.period, p.start))
                    && p.ext_len() <= ss.ideal
                    && (p.lb == 0 || prob.allowed_time(s, p.period, p.ext_start()))
            }
        }
    }

    /// Replaces the placements of the listed sessions. With `strict`, the
    /// change is kept only if it lowers the objective.
    fn apply(&mut self, changes: &[(usize, Option<Plc>)], strict: bool) -> bool {
        let prob = self.prob;
        let before = self.objective();
        let olds: Vec<(usize, Option<Plc>)> =
            changes.iter().map(|&(s, _)| (s, self.state.plc[s])).collect();
        let mut pats: Vec<usize> = changes.iter().map(|&(s, _)| prob.sessions[s].pat).collect();
        pats.sort_unstable();
        pats.dedup();
        let deficit_before: u32 = pats.iter().map(|&p| self.pat_deficit(p)).sum();

        for &(s, old) in &olds {
            if old.is_some() {
                self.state.remove(prob, s);
            }
        }
        let mut placed = Vec::new();
        let mut ok = true;
        for &(s, new) in changes {
            if let Some(p) = new {
                if self.state.plc[s].is_some() || !self.in_domain(s, &p) || !self.state.fits(prob, s, &p) {
                    ok = false;
                    break;
                }
                self.state.place(prob, s, p);
                placed.push(s);
            }
        }
        if ok {
            ok = olds.iter().chain(changes).all(|(_, p)| {
                p.is_none_or(|p| {
                    let mac = prob.locs[p.loc].mac;
                    self.state.balanced(prob, mac, p.period, p.ext_start(), p.ext_end(), 0)
                })
            });
        }
        if ok {
            let mut cost = self.cost;
            let mut unplaced = self.unplaced;
            for (&(s, old), &(_, new)) in olds.iter().zip(changes) {
                cost = add(sub(cost, self.session_cost(s, old.as_ref())), self.session_cost(s, new.as_ref()));
                if !prob.sessions[s].optional {
                    unplaced = unplaced + old.is_some() as u32 - new.is_some() as u32;
                }
            }
            let deficit_after: u32 = pats.iter().map(|&p| self.pat_deficit(p)).sum();
            let deficit = self.deficit - deficit_before + deficit_after;
            if !strict || (unplaced, deficit, cost) < before {
                self.cost = cost;
                self.unplaced = unplaced;
                self.deficit = deficit;
                return true;
            }
        }
        for s in placed {
            self.state.remove(prob, s);
        }
        for &(s, old) in &olds {
            if let Some(p) = old {
                self.state.place(prob, s, p);
            }
        }
        false
    }

    /// Extension pairs for a core, ordered to cover the patient's shortfall first.
    fn ext_candidates(&self, s: usize, core: &Core) -> Vec<(u32, u32)> {
        let ss = &self.prob.sessions[s];
        let own = self.state.plc[s].map(|p| p.ext_len()).unwrap_or(0);
        let reserved = self.state.pat_ext[ss.pat] - own;
        let want = self.prob.pats[ss.pat].daily.saturating_sub(reserved + core.len);
        let all = self.prob.ext_options(s, core);
        let (mut enough, mut short): (Vec<_>, Vec<_>) =
            all.into_iter().partition(|&(lb, la)| lb + la >= want);
        short.reverse();
        enough.truncate(EXT_TRIES);
        short.truncate(EXT_TRIES);
        enough.extend(short);
        enough
    }

    /// Moves `s` to the cheapest placement that is accepted, trying at most
    /// `limit` placements.
    fn reinsert(&mut self, s: usize, strict: bool, limit: usize, budget: &mut Budget) -> bool {
        let prob = self.prob;
        let ss = &prob.sessions[s];
        let mut tries = 0;
        for core in &ss.cores {
            if core.is_skip() {
                if self.state.plc[s].is_none() {
                    return false;
                }
                return self.apply(&[(s, None)], strict);
            }
            let mut seen_sigs: Vec<usize> = Vec::new();
            for &loc in &ss.locs {
                if self.state.loc_used[loc] == 0 {
                    let sig = prob.locs[loc].signature;
                    if seen_sigs.contains(&sig) {
                        continue;
                    }
                    seen_sigs.push(sig);
                }
                if !self.fits_ignoring_self(s, &zero_ext(core, loc)) {
                    tries += 1;
                    if tries >= limit || budget.tick() {
                        return false;
                    }
                    continue;
                }
                for (lb, la) in self.ext_candidates(s, core) {
                    let p = zero_ext(core, loc).with_ext(lb, la);
                    if self.apply(&[(s, Some(p))], strict) {
                        return true;
                    }
                    tries += 1;
                    if tries >= limit || budget.tick() {
                        return false;
                    }
                }
            }
        }
        false
    }

    fn fits_ignoring_self(&mut self, s: usize, p: &Plc) -> bool {
        match self.state.plc[s] {
            None => self.state.fits(self.prob, s, p),
            Some(old) => {
                self.state.remove(self.prob, s);
                let ok = self.state.fits(self.prob, s, p);
                self.state.place(self.prob, s, old);
                ok
            }
        }
    }

    /// Mandatory sessions first, tightest start domains first.
    pub fn greedy(&mut self, budget: &mut Budget) {
        let prob = self.prob;
        let mut order: Vec<usize> = (0..prob.sessions.len()).collect();
        order.sort_by_key(|&s| (prob.sessions[s].optional, prob.sessions[s].n_starts, s));
        for s in order {
            if budget.check_now() {
                return;
            }
            self.reinsert(s, false, usize::MAX, budget);
        }
        self.repair_deficits(budget);
    }

    /// Grows extensions of sessions whose patients are short of their daily minimum.
    fn repair_deficits(&mut self, budget: &mut Budget) {
        let prob = self.prob;
        for pat in 0..prob.pats.len() {
            for &s in &prob.pats[pat].sessions {
                if self.pat_deficit(pat) == 0 || budget.tick() {
                    break;
                }
                let Some(p) = self.state.plc[s] else { continue };
                let core = Core {
                    period: p.period,
                    start: p.start,
                    len: p.len,
                    cost: [0; 6],
                };
                for (lb, la) in self.ext_candidates(s, &core) {
                    if lb + la <= p.lb + p.la {
                        continue;
                    }
                    if self.apply(&[(s, Some(p.with_ext(lb, la)))], true) {
                        break;
                    }
                }
            }
        }
    }

    /// One random neighbourhood move under strict acceptance.
    pub fn step(&mut self, rng: &mut ChaCha8Rng, budget: &mut Budget) -> bool {
        let prob = self.prob;
        let n = prob.sessions.len();
        if n == 0 {
            return false;
        }
        if self.unplaced > 0 && rng.gen_bool(0.5) {
            let missing: Vec<usize> = (0..n)
                .filter(|&s| !prob.sessions[s].optional && self.state.plc[s].is_none())
                .collect();
            let s = *missing.choose(rng).expect("unplaced > 0");
            return self.reinsert(s, true, 64, budget) || self.kick(s, rng, budget);
        }
        let s = rng.gen_range(0..n);
        let ss = &prob.sessions[s];
        let Some(p) = self.state.plc[s] else {
            return self.reinsert(s, true, 64, budget);
        };
        match rng.gen_range(0..7) {
            0 => self.reinsert(s, true, 64, budget),
            1 => {
                let d = rng.gen_range(1..=3);
                let start = if rng.gen_bool(0.5) { p.start + d } else { p.start.saturating_sub(d) };
                let st = ss.shifts[p.period as usize].map(|x| x.0).unwrap_or(0);
                if start < st {
                    return false;
                }
                let lb = p.lb.min(start - st);
                self.apply(&[(s, Some(Plc { start, lb, ..p }))], true)
            }
            2 => {
                let len = if rng.gen_bool(0.5) { p.len + 1 } else { p.len.saturating_sub(1) };
                self.apply(&[(s, Some(Plc { len, ..p }))], true)
            }
            3 => {
                let loc = *ss.locs.choose(rng).expect("macro has locations");
                self.apply(&[(s, Some(Plc { loc, ..p }))], true)
            }
            4 => {
                if ss.optional {
                    self.apply(&[(s, None)], true)
                } else {
                    false
                }
            }
            5 => {
                if prob.n_periods < 2 {
                    return false;
                }
                let other = (p.period + rng.gen_range(1..prob.n_periods as u32)) % prob.n_periods as u32;
                let cores: Vec<Core> = ss.cores.iter().filter(|c| !c.is_skip() && c.period == other).copied().collect();
                for core in cores.iter().take(24) {
                    let q = zero_ext(core, p.loc).with_ext(0, p.lb + p.la);
                    if self.apply(&[(s, Some(q))], true) || self.apply(&[(s, Some(zero_ext(core, p.loc)))], true) {
                        return true;
                    }
                }
                false
            }
            _ => {
                let (lb, la) = match rng.gen_range(0..6) {
                    0 if p.la > 0 => (p.lb + 1, p.la - 1),
                    1 if p.lb > 0 => (p.lb - 1, p.la + 1),
                    2 => (p.lb + 1, p.la),
                    3 => (p.lb, p.la + 1),
                    4 if p.lb > 0 => (p.lb - 1, p.la),
                    5 if p.la > 0 => (p.lb, p.la - 1),
                    _ => return false,
                };
                if lb > p.start {
                    return false;
                }
                self.apply(&[(s, Some(p.with_ext(lb, la)))], true)
            }
        }
    }

    /// Places `s` at one of its cheapest cores by evicting whatever blocks it,
    /// then reinserts the evicted sessions; kept only if the objective drops.
    fn kick(&mut self, s: usize, rng: &mut ChaCha8Rng, budget: &mut Budget) -> bool {
        let prob = self.prob;
        let ss = &prob.sessions[s];
        let candidates: Vec<Core> = ss.cores.iter().filter(|c| !c.is_skip()).take(16).copied().collect();
        let Some(core) = candidates.choose(rng).copied() else { return false };
        let loc = *ss.locs.choose(rng).expect("macro has locations");
        let target = zero_ext(&core, loc);
        if !self.in_domain(s, &target) {
            return false;
        }
        let snapshot = self.clone();
        let before = self.objective();
        let evicted: Vec<usize> = (0..prob.sessions.len())
            .filter(|&o| o != s)
            .filter(|&o| {
                self.state.plc[o].is_some_and(|q| {
                    let os = &prob.sessions[o];
                    q.period == target.period
                        && (os.pat == ss.pat
                            || ((os.op == ss.op || q.loc == target.loc)
                                && q.ext_start() < target.ext_end()
                                && target.ext_start() < q.ext_end()))
                })
            })
            .collect();
        for &o in &evicted {
            self.apply(&[(o, None)], false);
        }
        if !self.apply(&[(s, Some(target))], false) {
            *self = snapshot;
            return false;
        }
        for &o in &evicted {
            self.reinsert(o, false, 256, budget);
        }
        self.repair_deficits(budget);
        if self.objective() < before {
            true
        } else {
            *self = snapshot;
            false
        }
    }

    pub fn run(&mut self, rng: &mut ChaCha8Rng, budget: &mut Budget, trace: &mut Trace, best: &mut Option<(Vec<Option<Plc>>, Cost)>) {
        let limit = 2_000.max(200 * self.prob.sessions.len() as u64);
        let mut stale = 0;
        self.record(budget, trace, best);
        while stale < limit && !budget.tick() {
            if self.step(rng, budget) {
                stale = 0;
                self.record(budget, trace, best);
            } else {
                stale += 1;
            }
        }
    }

    pub fn record(&self, budget: &Budget, trace: &mut Trace, best: &mut Option<(Vec<Option<Plc>>, Cost)>) {
        if !self.is_feasible() || best.as_ref().is_some_and(|(_, c)| self.cost >= *c) {
            return;
        }
        debug_assert!(self.state.balanced_everywhere(self.prob));
        *best = Some((self.state.plc.clone(), self.cost));
        trace.offer(budget.elapsed(), &CostVector(self.cost.to_vec()));
    }
}
