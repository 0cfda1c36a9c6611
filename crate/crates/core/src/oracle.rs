//! Exhaustive reference solvers for tiny instances. They share only the
//! checker and cost functions with the real solvers, never search logic.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feas::{
    board_cost, check_agenda, check_board, placement_cost, session_operator, unscheduled_cost,
    AgendaSolution, BoardSolution, Rule, SessionPlacement, AGENDA_LEVELS,
};
use crate::model::{validate_instance, CostVector, Instance, OperatorId, SessionSpec};
use crate::solve::add;

/// Size limits beyond which the oracles refuse to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleLimits {
    pub max_patients: usize,
    /// Real operators; the fictitious one is not counted.
    pub max_operators: usize,
    pub max_sessions: usize,
    pub max_slots_per_period: u32,
}

impl Default for OracleLimits {
    fn default() -> Self {
        Self {
            max_patients: 5,
            max_operators: 3,
            max_sessions: 3,
            max_slots_per_period: 12,
        }
    }
}

/// Optimal cost and the first optimal solution in enumeration order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleAnswer<S> {
    pub cost: CostVector,
    pub solution: S,
}

impl OracleLimits {
    fn check(&self, inst: &Instance, agenda: bool) -> Result<()> {
        let ops = inst.real_operators().count();
        let mut over = Vec::new();
        if inst.patients.len() > self.max_patients {
            over.push(format!("{} patients > {}", inst.patients.len(), self.max_patients));
        }
        if ops > self.max_operators {
            over.push(format!("{ops} operators > {}", self.max_operators));
        }
        if agenda {
            if inst.sessions.len() > self.max_sessions {
                over.push(format!("{} sessions > {}", inst.sessions.len(), self.max_sessions));
            }
            let slots = inst.grid.max_slots();
            if slots > self.max_slots_per_period {
                over.push(format!("{slots} slots per period > {}", self.max_slots_per_period));
            }
        }
        if over.is_empty() {
            Ok(())
        } else {
            Err(Error::LimitsExceeded(over.join("; ")))
        }
    }
}

fn validated(inst: &Instance) -> Result<()> {
    let issues = validate_instance(inst);
    if issues.is_empty() {
        Ok(())
    } else {
        Err(Error::InvalidInstance(issues))
    }
}

/// Tries every operator for every patient. Operators are taken in id order
/// and patients in instance order, so the answer is the lexicographically
/// smallest optimal operator vector.
pub fn oracle_board(inst: &Instance, limits: &OracleLimits) -> Result<OracleAnswer<BoardSolution>> {
    limits.check(inst, false)?;
    validated(inst)?;
    let mut ops: Vec<OperatorId> = inst.operators.iter().map(|o| o.id).collect();
    ops.sort();
    let mut patients: Vec<_> = inst.patients.iter().map(|p| p.id).collect();
    patients.sort();
    let n = patients.len();
    let mut digits = vec![0usize; n];
    let mut best: Option<OracleAnswer<BoardSolution>> = None;
    loop {
        let sol: BoardSolution = patients.iter().zip(&digits).map(|(p, &d)| (*p, ops[d])).collect();
        if check_board(inst, &sol)?.is_empty() {
            let cost = board_cost(inst, &sol)?;
            if best.as_ref().is_none_or(|b| cost < b.cost) {
                best = Some(OracleAnswer { cost, solution: sol });
            }
        }
        // Odometer increment, last patient fastest.
        let mut i = n;
        loop {
            if i == 0 {
                return best.ok_or_else(|| Error::Structural("no feasible board".into()));
            }
            i -= 1;
            digits[i] += 1;
            if digits[i] < ops.len() {
                break;
            }
            digits[i] = 0;
        }
    }
}

type Cost = [u64; AGENDA_LEVELS];

/// Rules decided by one placement on its own.
const UNARY: [Rule; 5] = [Rule::A2, Rule::A3, Rule::A4, Rule::A11, Rule::A13];
/// Rules whose violations survive adding sessions or growing extensions.
const MONOTONE: [Rule; 5] = [Rule::A5, Rule::A6, Rule::A7, Rule::A8, Rule::A10];

/// One way to schedule a session, or to leave it out (`place == None`).
#[derive(Clone)]
struct Choice {
    place: Option<SessionPlacement>,
    cost: Cost,
    /// Extension pairs that pass the unary rules, in enumeration order.
    exts: Vec<(u32, u32)>,
    max_ext_len: u32,
}

struct Agenda<'a> {
    inst: &'a Instance,
    board: &'a BoardSolution,
    specs: Vec<&'a SessionSpec>,
    choices: Vec<Vec<Choice>>,
    /// `compat[i][j][a][b]` for sessions `i < j`.
    compat: Vec<Vec<Vec<Vec<bool>>>>,
    daily: BTreeMap<crate::model::PatientId, u32>,
}

fn has_any(v: &[crate::feas::Violation], rules: &[Rule]) -> bool {
    v.iter().any(|x| rules.contains(&x.rule))
}

/// Enumerates every `(period, start, length, before, after, location)` tuple
/// on the grid and every scheduled/unscheduled choice for optional
/// sessions; `check_agenda` is the only feasibility test.
pub fn oracle_agenda(
    inst: &Instance,
    board: &BoardSolution,
    limits: &OracleLimits,
) -> Result<Option<OracleAnswer<AgendaSolution>>> {
    limits.check(inst, true)?;
    validated(inst)?;
    let issues = check_board(inst, board)?;
    if !issues.is_empty() {
        return Err(Error::InvalidParams(format!("board violates hard constraints: {}", issues[0])));
    }
    let mut specs = Vec::new();
    for s in &inst.sessions {
        if session_operator(inst, board, s)?.is_some() {
            specs.push(s);
        }
    }
    specs.sort_by_key(|s| s.id);
    let mut daily = BTreeMap::new();
    for s in &specs {
        let p = inst.patient(s.patient).expect("validated");
        daily.insert(p.id, p.min_daily_length);
    }

    let mut choices = Vec::new();
    for spec in &specs {
        choices.push(session_choices(inst, board, spec)?);
    }
    let n = specs.len();
    let mut compat = vec![vec![Vec::new(); n]; n];
    for i in 0..n {
        for j in i + 1..n {
            compat[i][j] = choices[i]
                .iter()
                .map(|a| {
                    choices[j]
                        .iter()
                        .map(|b| match (a.place, b.place) {
                            (Some(pa), Some(pb)) => {
                                let sol: AgendaSolution = [pa, pb].into_iter().collect();
                                check_agenda(inst, board, &sol).map(|v| !has_any(&v, &MONOTONE))
                            }
                            _ => Ok(true),
                        })
                        .collect::<Result<Vec<bool>>>()
                })
                .collect::<Result<_>>()?;
        }
    }
    let search = Agenda {
        inst,
        board,
        specs,
        choices,
        compat,
        daily,
    };

    // First pass finds the optimal cost with the cheapest choices tried first,
    // the second returns the first optimum in plain enumeration order.
    let orders: Vec<Vec<usize>> = search
        .choices
        .iter()
        .map(|c| {
            let mut idx: Vec<usize> = (0..c.len()).collect();
            idx.sort_by_key(|&k| c[k].cost);
            idx
        })
        .collect();
    let mut best: Option<Cost> = None;
    let mut pick = vec![0; n];
    let mut cap = None;
    search.enumerate_capped(0, [0; AGENDA_LEVELS], &orders, &mut pick, &mut cap, &mut |cost, _| {
        best = Some(cost);
        Visit::Tighten
    })?;
    let Some(optimum) = best else { return Ok(None) };

    let natural: Vec<Vec<usize>> = search.choices.iter().map(|c| (0..c.len()).collect()).collect();
    let mut found = None;
    let mut cap = Some(add(optimum, unit_last()));
    let mut pick = vec![0; n];
    search.enumerate_capped(0, [0; AGENDA_LEVELS], &natural, &mut pick, &mut cap, &mut |cost, sol| {
        if cost == optimum {
            found = Some(sol);
            Visit::Stop
        } else {
            Visit::Continue
        }
    })?;
    let solution = found.expect("optimum seen in the first pass is reachable");
    Ok(Some(OracleAnswer {
        cost: CostVector(optimum.to_vec()),
        solution,
    }))
}

/// Smallest positive cost, so `optimum + unit` admits exactly the costs `<= optimum`.
fn unit_last() -> Cost {
    let mut c = [0; AGENDA_LEVELS];
    c[AGENDA_LEVELS - 1] = 1;
    c
}

enum Visit {
    /// Keep going, only strictly cheaper completions from now on.
    Tighten,
    Continue,
    Stop,
}

fn session_choices(inst: &Instance, board: &BoardSolution, spec: &SessionSpec) -> Result<Vec<Choice>> {
    let mut out = Vec::new();
    for period in &inst.grid.periods {
        let slots = inst.grid.slots(period.index).unwrap_or(0);
        for start in 0..slots {
            for length in spec.min_length..=spec.ideal_length {
                if length == 0 || start + length > slots {
                    continue;
                }
                for loc in &inst.locations {
                    let core = SessionPlacement {
                        session: spec.id,
                        period: period.index,
                        start,
                        length,
                        before: 0,
                        after: 0,
                        location: loc.id,
                    };
                    // Extensions only widen the interval, so a core failing
                    // the unary rules bare fails them with any extension.
                    let bare: AgendaSolution = std::iter::once(core).collect();
                    if has_any(&check_agenda(inst, board, &bare)?, &UNARY) {
                        continue;
                    }
                    let mut exts = Vec::new();
                    for before in 0..=start {
                        for after in 0..=slots - start - length {
                            let p = SessionPlacement {
                                session: spec.id,
                                period: period.index,
                                start,
                                length,
                                before,
                                after,
                                location: loc.id,
                            };
                            let sol: AgendaSolution = std::iter::once(p).collect();
                            if !has_any(&check_agenda(inst, board, &sol)?, &UNARY) {
                                exts.push((before, after));
                            }
                        }
                    }
                    if exts.is_empty() {
                        continue;
                    }
                    let max_ext_len = exts.iter().map(|&(b, a)| b + a + length).max().unwrap_or(0);
                    out.push(Choice {
                        place: Some(core),
                        cost: placement_cost(spec, period.index, start, length),
                        exts,
                        max_ext_len,
                    });
                }
            }
        }
    }
    if spec.is_optional() {
        out.push(Choice {
            place: None,
            cost: unscheduled_cost(spec),
            exts: Vec::new(),
            max_ext_len: 0,
        });
    }
    Ok(out)
}

impl Agenda<'_> {
    /// Depth-first enumeration; completions must cost less than `cap`.
    /// Returns `true` once a visitor asked to stop.
    fn enumerate_capped(
        &self,
        depth: usize,
        cost: Cost,
        orders: &[Vec<usize>],
        pick: &mut [usize],
        cap: &mut Option<Cost>,
        visit: &mut dyn FnMut(Cost, AgendaSolution) -> Visit,
    ) -> Result<bool> {
        let n = self.specs.len();
        if depth == n {
            let Some(sol) = self.complete(pick)? else { return Ok(false) };
            return Ok(match visit(cost, sol) {
                Visit::Tighten => {
                    *cap = Some(cost);
                    false
                }
                Visit::Continue => false,
                Visit::Stop => true,
            });
        }
        let rest: Cost = (depth + 1..n).fold([0; AGENDA_LEVELS], |acc, i| {
            add(acc, self.choices[i].iter().map(|c| c.cost).min().unwrap_or([0; AGENDA_LEVELS]))
        });
        for &k in &orders[depth] {
            let c = &self.choices[depth][k];
            let next = add(cost, c.cost);
            if cap.is_some_and(|cap| add(next, rest) >= cap) {
                continue;
            }
            if !(0..depth).all(|i| self.compat[i][depth][pick[i]][k]) {
                continue;
            }
            pick[depth] = k;
            if self.enumerate_capped(depth + 1, next, orders, pick, cap, visit)? {
                return Ok(true);
            }
        }
        Ok(false)
    }

    /// Searches extension pairs for a full choice of cores; returns the first
    /// feasible agenda found.
    fn complete(&self, pick: &[usize]) -> Result<Option<AgendaSolution>> {
        let chosen: Vec<&Choice> = pick.iter().enumerate().map(|(i, &k)| &self.choices[i][k]).collect();
        let mut reach: BTreeMap<_, u32> = BTreeMap::new();
        for (i, c) in chosen.iter().enumerate() {
            *reach.entry(self.specs[i].patient).or_default() += c.max_ext_len;
        }
        if self.daily.iter().any(|(p, d)| reach.get(p).copied().unwrap_or(0) < *d) {
            return Ok(None);
        }
        let base: Vec<Option<SessionPlacement>> = chosen.iter().map(|c| c.place).collect();
        let zero: AgendaSolution = base.iter().flatten().copied().collect();
        if has_any(&check_agenda(self.inst, self.board, &zero)?, &MONOTONE) {
            return Ok(None);
        }
        let mut current = base.clone();
        self.extend(0, &chosen, &mut current)
    }

    fn extend(
        &self,
        i: usize,
        chosen: &[&Choice],
        current: &mut Vec<Option<SessionPlacement>>,
    ) -> Result<Option<AgendaSolution>> {
        let sol: AgendaSolution = current.iter().flatten().copied().collect();
        let v = check_agenda(self.inst, self.board, &sol)?;
        if i == chosen.len() {
            return Ok(v.is_empty().then_some(sol));
        }
        if has_any(&v, &MONOTONE) {
            return Ok(None);
        }
        let Some(base) = chosen[i].place else {
            return self.extend(i + 1, chosen, current);
        };
        for &(before, after) in &chosen[i].exts {
            current[i] = Some(SessionPlacement { before, after, ..base });
            if let Some(sol) = self.extend(i + 1, chosen, current)? {
                current[i] = Some(base);
                return Ok(Some(sol));
            }
        }
        current[i] = Some(base);
        Ok(None)
    }
}
