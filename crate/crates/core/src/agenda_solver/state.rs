//! Incremental occupancy bookkeeping shared by the constructive, local and
//! exact searches.

use crate::feas::unfair_reduction;

use super::problem::{Plc, Problem};

const NO_LOC: u32 = u32::MAX;

#[derive(Clone)]
pub(crate) struct State {
    ms: usize,
    np: usize,
    /// Individual-part occupancy per operator slot.
    op_ind: Vec<u16>,
    /// Location an operator is in per slot, with the number of sessions there.
    op_loc: Vec<(u32, u16)>,
    loc_cnt: Vec<u16>,
    /// Sessions per location and period.
    loc_period_used: Vec<u32>,
    /// Sessions per location over the whole day.
    pub loc_used: Vec<u32>,
    pat_period: Vec<u8>,
    pub pat_ext: Vec<u32>,
    op_individual: Vec<Vec<usize>>,
    pub plc: Vec<Option<Plc>>,
}

impl State {
    pub fn new(prob: &Problem) -> Self {
        let ms = prob.max_slots;
        let np = prob.n_periods;
        Self {
            ms,
            np,
            op_ind: vec![0; prob.n_ops * np * ms],
            op_loc: vec![(NO_LOC, 0); prob.n_ops * np * ms],
            loc_cnt: vec![0; prob.locs.len() * np * ms],
            loc_period_used: vec![0; prob.locs.len() * np],
            loc_used: vec![0; prob.locs.len()],
            pat_period: vec![0; prob.pats.len() * np],
            pat_ext: vec![0; prob.pats.len()],
            op_individual: vec![Vec::new(); prob.n_ops],
            plc: vec![None; prob.sessions.len()],
        }
    }

    #[inline]
    fn slot(&self, entity: usize, period: u32, t: u32) -> usize {
        (entity * self.np + period as usize) * self.ms + t as usize
    }

    pub fn loc_count(&self, loc: usize, period: u32, t: u32) -> u16 {
        self.loc_cnt[self.slot(loc, period, t)]
    }

    pub fn loc_period_used(&self, loc: usize, period: u32) -> u32 {
        self.loc_period_used[loc * self.np + period as usize]
    }

    /// Every hard rule that can be judged from this placement and the
    /// sessions already placed, except location balance and daily minimum.
    pub fn fits(&self, prob: &Problem, s: usize, p: &Plc) -> bool {
        let ss = &prob.sessions[s];
        if ss.forced.is_some_and(|f| f != (p.period, p.start)) {
            return false;
        }
        let Some((st, end)) = ss.shifts[p.period as usize] else { return false };
        if p.start < st || p.start + p.len > end || p.len < ss.min || p.len > ss.ideal {
            return false;
        }
        if p.lb > p.start - st || p.ext_end() > end {
            return false;
        }
        if ss
            .forbidden
            .iter()
            .any(|&(per, a, b)| per == p.period && a < p.ext_end() && p.ext_start() < b)
        {
            return false;
        }
        if self.pat_period[ss.pat * self.np + p.period as usize] > 0 {
            return false;
        }
        if ss.individual {
            let base = self.slot(ss.op, p.period, 0);
            if self.op_ind[base + p.start as usize..base + (p.start + p.len) as usize]
                .iter()
                .any(|&n| n > 0)
            {
                return false;
            }
        }
        let base = self.slot(ss.op, p.period, 0);
        if self.op_loc[base + p.ext_start() as usize..base + p.ext_end() as usize]
            .iter()
            .any(|&(l, _)| l != NO_LOC && l as usize != p.loc)
        {
            return false;
        }
        let loc = &prob.locs[p.loc];
        if let Some(cap) = loc.cap {
            let base = self.slot(p.loc, p.period, 0);
            let open = &loc.open[p.period as usize];
            for t in p.ext_start()..p.ext_end() {
                if open[t as usize] && self.loc_cnt[base + t as usize] >= cap {
                    return false;
                }
            }
        }
        if ss.individual {
            let me = (ss.min, ss.ideal, p.len);
            for &o in &self.op_individual[ss.op] {
                let q = self.plc[o].expect("listed sessions are placed");
                if q.period != p.period || q.loc != p.loc {
                    continue;
                }
                let os = &prob.sessions[o];
                let other = (os.min, os.ideal, q.len);
                if unfair_reduction(me, other) || unfair_reduction(other, me) {
                    return false;
                }
            }
        }
        true
    }

    pub fn place(&mut self, prob: &Problem, s: usize, p: Plc) {
        debug_assert!(self.plc[s].is_none());
        let ss = &prob.sessions[s];
        if ss.individual {
            let base = self.slot(ss.op, p.period, 0);
            for t in p.start..p.start + p.len {
                self.op_ind[base + t as usize] += 1;
            }
            self.op_individual[ss.op].push(s);
        }
        let ob = self.slot(ss.op, p.period, 0);
        let lbase = self.slot(p.loc, p.period, 0);
        for t in p.ext_start()..p.ext_end() {
            let e = &mut self.op_loc[ob + t as usize];
            e.0 = p.loc as u32;
            e.1 += 1;
            self.loc_cnt[lbase + t as usize] += 1;
        }
        self.loc_period_used[p.loc * self.np + p.period as usize] += 1;
        self.loc_used[p.loc] += 1;
        self.pat_period[ss.pat * self.np + p.period as usize] += 1;
        self.pat_ext[ss.pat] += p.ext_len();
        self.plc[s] = Some(p);
    }

    pub fn remove(&mut self, prob: &Problem, s: usize) -> Plc {
        let p = self.plc[s].take().expect("removing an unplaced session");
        let ss = &prob.sessions[s];
        if ss.individual {
            let base = self.slot(ss.op, p.period, 0);
            for t in p.start..p.start + p.len {
                self.op_ind[base + t as usize] -= 1;
            }
            let list = &mut self.op_individual[ss.op];
            let pos = list.iter().position(|&o| o == s).expect("listed");
            list.swap_remove(pos);
        }
        let ob = self.slot(ss.op, p.period, 0);
        let lbase = self.slot(p.loc, p.period, 0);
        for t in p.ext_start()..p.ext_end() {
            let e = &mut self.op_loc[ob + t as usize];
            e.1 -= 1;
            if e.1 == 0 {
                e.0 = NO_LOC;
            }
            self.loc_cnt[lbase + t as usize] -= 1;
        }
        self.loc_period_used[p.loc * self.np + p.period as usize] -= 1;
        self.loc_used[p.loc] -= 1;
        self.pat_period[ss.pat * self.np + p.period as usize] -= 1;
        self.pat_ext[ss.pat] -= p.ext_len();
        p
    }

    /// Largest count minus smallest count over the macro-location at one slot.
    fn spread(&self, prob: &Problem, mac: usize, period: u32, t: u32) -> (u16, u16) {
        let mut hi = 0;
        let mut lo = u16::MAX;
        for &l in &prob.macros[mac] {
            let n = self.loc_count(l, period, t);
            hi = hi.max(n);
            lo = lo.min(n);
        }
        (hi, lo)
    }

    /// Location balance over `[a, b)` of one period, allowing `slack` extra.
    pub fn balanced(&self, prob: &Problem, mac: usize, period: u32, a: u32, b: u32, slack: u32) -> bool {
        if prob.macros[mac].len() < 2 {
            return true;
        }
        (a..b).all(|t| {
            let (hi, lo) = self.spread(prob, mac, period, t);
            (hi as u32) <= lo as u32 + 2 + slack
        })
    }

    pub fn balanced_everywhere(&self, prob: &Problem) -> bool {
        (0..prob.macros.len()).all(|m| {
            (0..prob.n_periods as u32).all(|p| {
                let slots = prob.inst.grid.slots(p).unwrap_or(0);
                self.balanced(prob, m, p, 0, slots, 0)
            })
        })
    }

    /// Location balance after placing `p` when `pending` sessions of its
    /// macro-location may still be added (each lifts the least-used
    /// location by at most one). Only `p.loc` grew, so only its lead matters.
    pub fn balance_bound_ok(&self, prob: &Problem, p: &Plc, pending: u32) -> bool {
        let mac = prob.locs[p.loc].mac;
        if prob.macros[mac].len() < 2 {
            return true;
        }
        (p.ext_start()..p.ext_end()).all(|t| {
            let (_, lo) = self.spread(prob, mac, p.period, t);
            self.loc_count(p.loc, p.period, t) as u32 <= lo as u32 + 2 + pending
        })
    }

    /// Weaker balance test usable while extensions are still open: a
    /// location with no session in the period stays empty unless one of the
    /// `pending` unplaced sessions lands there.
    pub fn empty_location_bound_ok(&self, prob: &Problem, p: &Plc, pending: u32) -> bool {
        let mac = prob.locs[p.loc].mac;
        if prob.macros[mac].len() < 2 {
            return true;
        }
        let empty_exists = prob.macros[mac]
            .iter()
            .any(|&l| self.loc_period_used(l, p.period) == 0);
        !empty_exists
            || (p.ext_start()..p.ext_end())
                .all(|t| self.loc_count(p.loc, p.period, t) as u32 <= 2 + pending)
    }
}
