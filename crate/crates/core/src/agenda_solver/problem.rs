//! Flattened, index-based view of an instance for the agenda search.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::feas::{
    check_board, placement_cost, session_operator, unscheduled_cost, AgendaSolution, BoardSolution,
    SessionPlacement, AGENDA_LEVELS,
};
use crate::model::{Instance, LocationSpec, OperatorId, PatientId, SessionSpec};

use super::prune::{allowed_times, forbidden_start_ranges};
use super::Variant;

pub(crate) type Cost = [u64; AGENDA_LEVELS];

/// A session placement with locations by index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Plc {
    pub period: u32,
    pub start: u32,
    pub len: u32,
    pub lb: u32,
    pub la: u32,
    pub loc: usize,
}

impl Plc {
    pub fn ext_start(&self) -> u32 {
        self.start - self.lb
    }

    pub fn ext_end(&self) -> u32 {
        self.start + self.len + self.la
    }

    pub fn ext_len(&self) -> u32 {
        self.len + self.lb + self.la
    }

    pub fn with_ext(self, lb: u32, la: u32) -> Self {
        Self { lb, la, ..self }
    }
}

/// Period, start and individual length, or "leave unscheduled" when `len == 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Core {
    pub period: u32,
    pub start: u32,
    pub len: u32,
    pub cost: Cost,
}

impl Core {
    pub fn is_skip(&self) -> bool {
        self.len == 0
    }
}

pub(crate) struct Sess<'a> {
    pub spec: &'a SessionSpec,
    pub op: usize,
    pub pat: usize,
    pub mac: usize,
    pub locs: Vec<usize>,
    /// Operator shift `[start, end)` per period.
    pub shifts: Vec<Option<(u32, u32)>>,
    /// Patient forbidden windows as `(period, start, end)`.
    pub forbidden: Vec<(u32, u32, u32)>,
    pub ranges: Vec<(u32, u32, u32)>,
    pub min: u32,
    pub ideal: u32,
    pub optional: bool,
    pub individual: bool,
    pub forced: Option<(u32, u32)>,
    /// Cheapest first; contains a skip core for optional sessions.
    pub cores: Vec<Core>,
    pub n_starts: usize,
    /// Upper bound on the extended length over all cores.
    pub potential: u32,
}

pub(crate) struct Pat {
    pub daily: u32,
    pub sessions: Vec<usize>,
}

pub(crate) struct Loc {
    pub cap: Option<u16>,
    /// Per period, per slot: whether the capacity applies.
    pub open: Vec<Vec<bool>>,
    pub mac: usize,
    /// Locations with equal signature are interchangeable while unused.
    pub signature: usize,
}

pub(crate) struct Problem<'a> {
    pub inst: &'a Instance,
    pub variant: Variant,
    pub sessions: Vec<Sess<'a>>,
    pub pats: Vec<Pat>,
    pub locs: Vec<Loc>,
    pub macros: Vec<Vec<usize>>,
    pub n_ops: usize,
    pub n_periods: usize,
    pub max_slots: usize,
}

impl<'a> Problem<'a> {
    pub fn new(inst: &'a Instance, board: &BoardSolution, variant: Variant) -> Result<Self> {
        let board_issues = check_board(inst, board)?;
        if !board_issues.is_empty() {
            return Err(Error::InvalidParams(format!(
                "board violates {} hard constraint(s), first: {}",
                board_issues.len(),
                board_issues[0]
            )));
        }
        let n_periods = inst.grid.periods.len();
        let max_slots = inst.grid.max_slots() as usize;

        let mut mac_idx = HashMap::new();
        let mut macros: Vec<Vec<usize>> = Vec::new();
        let mut sig_idx: HashMap<(usize, i32, Vec<(u32, u32, u32)>), usize> = HashMap::new();
        let mut locs = Vec::new();
        for (li, l) in inst.locations.iter().enumerate() {
            let m = *mac_idx.entry(l.macro_location).or_insert_with(|| {
                macros.push(Vec::new());
                macros.len() - 1
            });
            macros[m].push(li);
            let open_key: Vec<_> = l.open.iter().map(|w| (w.period, w.start, w.end)).collect();
            let n = sig_idx.len();
            let signature = *sig_idx.entry((m, l.capacity, open_key)).or_insert(n);
            locs.push(loc_info(inst, l, m, signature, n_periods, max_slots));
        }

        let mut op_idx: HashMap<OperatorId, usize> = HashMap::new();
        let mut pat_idx: HashMap<PatientId, usize> = HashMap::new();
        let mut pats: Vec<Pat> = Vec::new();
        let mut sessions = Vec::new();
        for spec in &inst.sessions {
            let Some(op) = session_operator(inst, board, spec)? else { continue };
            let n_ops = op_idx.len();
            let oi = *op_idx.entry(op).or_insert(n_ops);
            let patient = inst.patient(spec.patient).expect("validated instance");
            let pi = *pat_idx.entry(spec.patient).or_insert_with(|| {
                pats.push(Pat {
                    daily: patient.min_daily_length,
                    sessions: Vec::new(),
                });
                pats.len() - 1
            });
            pats[pi].sessions.push(sessions.len());
            let operator = inst.operator(op).expect("resolved");
            let mut shifts = vec![None; n_periods];
            for w in &operator.shifts {
                if let Some(slot) = shifts.get_mut(w.period as usize) {
                    *slot = Some((w.start, w.end));
                }
            }
            let mac = *mac_idx
                .get(&spec.macro_location)
                .ok_or_else(|| Error::Structural(format!("no location in macro-location {}", spec.macro_location)))?;
            let mut s = Sess {
                spec,
                op: oi,
                pat: pi,
                mac,
                locs: macros[mac].clone(),
                shifts,
                forbidden: patient.forbidden.iter().map(|w| (w.period, w.start, w.end)).collect(),
                ranges: forbidden_start_ranges(spec, &patient.forbidden),
                min: spec.min_length,
                ideal: spec.ideal_length,
                optional: spec.is_optional(),
                individual: spec.is_individual(),
                forced: spec.forced_time.map(|f| (f.period, f.slot)),
                cores: Vec::new(),
                n_starts: 0,
                potential: 0,
            };
            build_domain(&mut s, variant, &operator.shifts);
            sessions.push(s);
        }
        let mut prob = Self {
            inst,
            variant,
            sessions,
            pats,
            locs,
            macros,
            n_ops: op_idx.len(),
            n_periods,
            max_slots,
        };
        restrict_periods(&mut prob);
        finish_potentials(&mut prob);
        Ok(prob)
    }

    pub fn to_solution(&self, plc: &[Option<Plc>]) -> AgendaSolution {
        plc.iter()
            .enumerate()
            .filter_map(|(s, p)| p.map(|p| (s, p)))
            .map(|(s, p)| SessionPlacement {
                session: self.sessions[s].spec.id,
                period: p.period,
                start: p.start,
                length: p.len,
                before: p.lb,
                after: p.la,
                location: self.inst.locations[p.loc].id,
            })
            .collect()
    }

    /// Whether a supervised slot before or after the individual part may sit at `t`.
    fn ext_slot_clear(&self, s: usize, period: u32, t: u32) -> bool {
        !self.sessions[s]
            .forbidden
            .iter()
            .any(|&(p, a, b)| p == period && a <= t && t < b)
    }

    /// Extension pairs for a core under the variant's bounds, smallest first.
    pub fn ext_options(&self, s: usize, core: &Core) -> Vec<(u32, u32)> {
        let ss = &self.sessions[s];
        let Some((st, end)) = ss.shifts[core.period as usize] else { return Vec::new() };
        let max_lb = core.start - st;
        let max_la = end - core.start - core.len;
        let mut out = Vec::new();
        match self.variant {
            Variant::Basic => {
                for lb in 0..=max_lb {
                    for la in 0..=max_la {
                        out.push((lb, la));
                    }
                }
            }
            Variant::Optimized => {
                let room = ss.ideal - core.len;
                for lb in 0..=max_lb.min(room) {
                    if lb > 0 && !self.allowed_time(s, core.period, core.start - lb) {
                        continue;
                    }
                    for la in 0..=max_la.min(room - lb) {
                        out.push((lb, la));
                    }
                }
            }
        }
        out.sort_by_key(|&(lb, la)| (lb + la, lb));
        out
    }

    /// Largest extended length reachable from a core without touching a
    /// forbidden window or leaving the shift.
    pub fn max_ext_len(&self, s: usize, core: &Core) -> u32 {
        if core.is_skip() {
            return 0;
        }
        let ss = &self.sessions[s];
        let Some((st, end)) = ss.shifts[core.period as usize] else { return 0 };
        let cap = match self.variant {
            Variant::Basic => u32::MAX,
            Variant::Optimized => ss.ideal - core.len,
        };
        let mut lb = 0;
        while lb < cap && core.start - lb > st {
            let t = core.start - lb - 1;
            if !self.ext_slot_clear(s, core.period, t)
                || (self.variant == Variant::Optimized && !self.allowed_time(s, core.period, t))
            {
                break;
            }
            lb += 1;
        }
        let mut la = 0;
        while la < cap && core.start + core.len + la < end {
            if !self.ext_slot_clear(s, core.period, core.start + core.len + la) {
                break;
            }
            la += 1;
        }
        core.len + (lb.saturating_add(la)).min(cap)
    }

    /// Start times that pass the shift-end and forbidden-range pruning,
    /// ignoring forced times.
    pub fn allowed_time(&self, s: usize, period: u32, t: u32) -> bool {
        let ss = &self.sessions[s];
        let Some((st, end)) = ss.shifts[period as usize] else { return false };
        st <= t
            && t + ss.min <= end
            && !ss.ranges.iter().any(|&(p, a, b)| p == period && a <= t && t < b)
    }
}

fn loc_info(
    inst: &Instance,
    l: &LocationSpec,
    mac: usize,
    signature: usize,
    n_periods: usize,
    max_slots: usize,
) -> Loc {
    let mut open = vec![vec![false; max_slots]; n_periods];
    for w in &l.open {
        let slots = inst.grid.slots(w.period).unwrap_or(0) as usize;
        if let Some(row) = open.get_mut(w.period as usize) {
            for t in w.start as usize..(w.end as usize).min(slots) {
                row[t] = true;
            }
        }
    }
    Loc {
        cap: (l.capacity > 0).then(|| l.capacity.min(u16::MAX as i32) as u16),
        open,
        mac,
        signature,
    }
}

fn build_domain(s: &mut Sess, variant: Variant, shifts: &[crate::model::Window]) {
    let mut starts: Vec<(u32, u32)> = Vec::new();
    for sh in shifts {
        match variant {
            Variant::Basic => starts.extend((sh.start..sh.end).map(|t| (sh.period, t))),
            Variant::Optimized => starts.extend(
                allowed_times(s.spec, sh, &s.ranges)
                    .filter(|&(p, t)| s.forced.is_none_or(|f| f == (p, t))),
            ),
        }
    }
    s.n_starts = starts.len();
    let mut cores = Vec::new();
    for (p, t) in starts {
        let end = s.shifts[p as usize].map(|sh| sh.1).unwrap_or(0);
        if t + s.min > end {
            continue;
        }
        for len in s.min..=s.ideal.min(end - t) {
            cores.push(Core {
                period: p,
                start: t,
                len,
                cost: placement_cost(s.spec, p, t, len),
            });
        }
    }
    if s.optional {
        cores.push(Core {
            period: 0,
            start: 0,
            len: 0,
            cost: unscheduled_cost(s.spec),
        });
    }
    cores.sort_by_key(|c| (c.cost, c.is_skip(), c.period, c.start, std::cmp::Reverse(c.len)));
    s.cores = cores;
}

/// A patient has at most one session per period, so a session loses a
/// period when giving it that period leaves the patient's mandatory
/// sessions without distinct periods.
fn restrict_periods(prob: &mut Problem) {
    for pat in 0..prob.pats.len() {
        let list = prob.pats[pat].sessions.clone();
        if list.len() < 2 {
            continue;
        }
        let usable: Vec<Vec<u32>> = list
            .iter()
            .map(|&s| {
                let mut ps: Vec<u32> = prob.sessions[s]
                    .cores
                    .iter()
                    .filter(|c| !c.is_skip() && unary_core_ok(prob, s, c))
                    .map(|c| c.period)
                    .collect();
                ps.sort_unstable();
                ps.dedup();
                ps
            })
            .collect();
        for (i, &s) in list.iter().enumerate() {
            let others: Vec<&[u32]> = list
                .iter()
                .enumerate()
                .filter(|&(j, &q)| j != i && !prob.sessions[q].optional)
                .map(|(j, _)| usable[j].as_slice())
                .collect();
            let keep: Vec<u32> = usable[i]
                .iter()
                .copied()
                .filter(|&p| distinct_periods(&others, &mut vec![p]))
                .collect();
            if keep.len() < usable[i].len() {
                prob.sessions[s].cores.retain(|c| c.is_skip() || keep.contains(&c.period));
            }
        }
    }
}

fn distinct_periods(sets: &[&[u32]], used: &mut Vec<u32>) -> bool {
    let Some((first, rest)) = sets.split_first() else { return true };
    first.iter().any(|&p| {
        if used.contains(&p) {
            return false;
        }
        used.push(p);
        let ok = distinct_periods(rest, used);
        used.pop();
        ok
    })
}

fn finish_potentials(prob: &mut Problem) {
    let pots: Vec<u32> = (0..prob.sessions.len())
        .map(|s| {
            prob.sessions[s]
                .cores
                .iter()
                .filter(|c| !c.is_skip() && unary_core_ok(prob, s, c))
                .map(|c| prob.max_ext_len(s, c))
                .max()
                .unwrap_or(0)
        })
        .collect();
    for (s, p) in pots.into_iter().enumerate() {
        prob.sessions[s].potential = p;
    }
}

/// Forced time and forbidden windows for the individual part alone.
pub(crate) fn unary_core_ok(prob: &Problem, s: usize, c: &Core) -> bool {
    let ss = &prob.sessions[s];
    if ss.forced.is_some_and(|f| f != (c.period, c.start)) {
        return false;
    }
    !ss.forbidden
        .iter()
        .any(|&(p, a, b)| p == c.period && a < c.start + c.len && c.start < b)
}
