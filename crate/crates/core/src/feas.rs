//! Feasibility checking and lexicographic cost evaluation for boards and
//! agendas. Everything else in the crate defers to these functions for what a
//! legal schedule is; they are written for clarity, not speed.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::model::{
    CostVector, Instance, LocationId, OperatorId, PatientId, Priority, SessionId, SessionSpec,
};

pub const BOARD_LEVELS: usize = 3;
pub const AGENDA_LEVELS: usize = 6;

/// Total patient → operator map.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BoardSolution {
    pub assignment: BTreeMap<PatientId, OperatorId>,
}

impl BoardSolution {
    pub fn operator_of(&self, patient: PatientId) -> Option<OperatorId> {
        self.assignment.get(&patient).copied()
    }

    pub fn patients_of(&self, op: OperatorId) -> impl Iterator<Item = PatientId> + '_ {
        self.assignment
            .iter()
            .filter(move |(_, o)| **o == op)
            .map(|(p, _)| *p)
    }
}

impl FromIterator<(PatientId, OperatorId)> for BoardSolution {
    fn from_iter<I: IntoIterator<Item = (PatientId, OperatorId)>>(iter: I) -> Self {
        Self {
            assignment: iter.into_iter().collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SessionPlacement {
    pub session: SessionId,
    pub period: u32,
    pub start: u32,
    /// Individual (one-on-one) part.
    pub length: u32,
    /// Supervised slots before the individual part.
    pub before: u32,
    /// Supervised slots after the individual part.
    pub after: u32,
    pub location: LocationId,
}

impl SessionPlacement {
    pub fn ext_start(&self) -> i64 {
        self.start as i64 - self.before as i64
    }

    pub fn ext_length(&self) -> u32 {
        self.length + self.before + self.after
    }

    pub fn ext_end(&self) -> i64 {
        self.ext_start() + self.ext_length() as i64
    }

    fn covers_ext(&self, period: u32, slot: u32) -> bool {
        self.period == period && self.ext_start() <= slot as i64 && (slot as i64) < self.ext_end()
    }
}

/// Placements of the scheduled sessions. Serialized as an array of placements.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct AgendaSolution {
    pub placements: BTreeMap<SessionId, SessionPlacement>,
}

impl AgendaSolution {
    pub fn insert(&mut self, p: SessionPlacement) {
        self.placements.insert(p.session, p);
    }

    pub fn get(&self, id: SessionId) -> Option<&SessionPlacement> {
        self.placements.get(&id)
    }

    pub fn len(&self) -> usize {
        self.placements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.placements.is_empty()
    }
}

impl FromIterator<SessionPlacement> for AgendaSolution {
    fn from_iter<I: IntoIterator<Item = SessionPlacement>>(iter: I) -> Self {
        let mut a = AgendaSolution::default();
        for p in iter {
            a.insert(p);
        }
        a
    }
}

impl Serialize for AgendaSolution {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(self.placements.values())
    }
}

impl<'de> Deserialize<'de> for AgendaSolution {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let list = Vec::<SessionPlacement>::deserialize(d)?;
        let mut a = AgendaSolution::default();
        for p in list {
            if a.placements.insert(p.session, p).is_some() {
                return Err(serde::de::Error::custom(format!(
                    "session {} placed more than once",
                    p.session
                )));
            }
        }
        Ok(a)
    }
}

/// Closed catalog of hard-constraint rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Rule {
    /// Every patient assigned exactly once.
    B1,
    /// Operator workload within contract time.
    B2,
    /// Operator patient count within maximum.
    B3,
    /// Per-type patient counts within limits.
    B4,
    /// Operator qualified for the patient's type.
    B5,
    /// Mandatory sessions scheduled; nothing scheduled for unassigned patients.
    A1,
    /// Individual part inside the operator's shift, length within bounds.
    A2,
    /// Location inside the session's macro-location.
    A3,
    /// Supervised extensions inside the operator's shift.
    A4,
    /// Individual parts of one operator do not overlap.
    A5,
    /// At most one session per patient and period.
    A6,
    /// Fair distribution of length reductions.
    A7,
    /// An operator is never in two locations at once.
    A8,
    /// Patient minimum daily time reserved.
    A9,
    /// Location capacity.
    A10,
    /// Patient forbidden windows.
    A11,
    /// Balanced usage of locations inside a macro-location.
    A12,
    /// Forced start time honoured.
    A13,
}

impl Rule {
    pub const BOARD: [Rule; 5] = [Rule::B1, Rule::B2, Rule::B3, Rule::B4, Rule::B5];
    pub const AGENDA: [Rule; 13] = [
        Rule::A1,
        Rule::A2,
        Rule::A3,
        Rule::A4,
        Rule::A5,
        Rule::A6,
        Rule::A7,
        Rule::A8,
        Rule::A9,
        Rule::A10,
        Rule::A11,
        Rule::A12,
        Rule::A13,
    ];
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub rule: Rule,
    pub entities: Vec<String>,
    pub detail: String,
}

impl Violation {
    fn new(rule: Rule, entities: Vec<String>, detail: impl Into<String>) -> Self {
        Self {
            rule,
            entities,
            detail: detail.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {} ({})", self.rule, self.detail, self.entities.join(", "))
    }
}

/// Distinct rule tags present in `violations`.
pub fn rule_set(violations: &[Violation]) -> BTreeSet<Rule> {
    violations.iter().map(|v| v.rule).collect()
}

fn p_ent(id: PatientId) -> String {
    format!("patient {id}")
}

fn o_ent(id: OperatorId) -> String {
    format!("operator {id}")
}

fn s_ent(id: SessionId) -> String {
    format!("session {id}")
}

fn l_ent(id: LocationId) -> String {
    format!("location {id}")
}

/// Contract time consumed by each real operator under `sol`.
///
/// A patient's sessions are charged at the session minimum when at least two
/// of the operator's patients have a session in that location, and at the
/// patient's daily minimum otherwise. Charges are collected as a set of
/// `(value, patient)` pairs, so equal charges of one patient count once.
pub fn operator_workload(inst: &Instance, sol: &BoardSolution) -> BTreeMap<OperatorId, u32> {
    let mut out = BTreeMap::new();
    for op in inst.real_operators() {
        let assigned: Vec<PatientId> = sol.patients_of(op.id).collect();
        let mut charges: BTreeSet<(u32, PatientId)> = BTreeSet::new();
        for &pid in &assigned {
            let Some(p) = inst.patient(pid) else { continue };
            for sid in &p.sessions {
                let Some(s) = inst.session(*sid) else { continue };
                let sharing = assigned
                    .iter()
                    .filter(|q| {
                        inst.patient(**q).is_some_and(|q| {
                            q.sessions.iter().any(|qs| {
                                inst.session(*qs)
                                    .is_some_and(|qs| qs.macro_location == s.macro_location)
                            })
                        })
                    })
                    .count();
                let value = if sharing < 2 {
                    p.min_daily_length
                } else {
                    s.min_length
                };
                charges.insert((value, pid));
            }
        }
        out.insert(op.id, charges.iter().map(|(v, _)| v).sum());
    }
    out
}

/// Hard-constraint violations of a board.
pub fn check_board(inst: &Instance, sol: &BoardSolution) -> Result<Vec<Violation>> {
    for (pid, oid) in &sol.assignment {
        if inst.patient(*pid).is_none() {
            return Err(Error::Structural(format!("unknown patient {pid}")));
        }
        if inst.operator(*oid).is_none() {
            return Err(Error::Structural(format!("unknown operator {oid}")));
        }
    }
    let mut v = Vec::new();
    for p in &inst.patients {
        if !sol.assignment.contains_key(&p.id) {
            v.push(Violation::new(Rule::B1, vec![p_ent(p.id)], "patient not assigned"));
        }
    }

    let workload = operator_workload(inst, sol);
    for op in inst.real_operators() {
        let assigned: Vec<&crate::model::Patient> = sol
            .patients_of(op.id)
            .filter_map(|pid| inst.patient(pid))
            .collect();
        if let Some(limit) = op.total_time {
            let used = workload[&op.id];
            if used > limit {
                v.push(Violation::new(
                    Rule::B2,
                    vec![o_ent(op.id)],
                    format!("workload {used} exceeds contract {limit}"),
                ));
            }
        }
        if let Some(max) = op.max_patients {
            if assigned.len() as u32 > max {
                v.push(Violation::new(
                    Rule::B3,
                    vec![o_ent(op.id)],
                    format!("{} patients exceed maximum {max}", assigned.len()),
                ));
            }
        }
        for (ptype, limit) in &op.type_limits {
            let n = assigned.iter().filter(|p| p.ptype == *ptype).count() as u32;
            if n > *limit {
                v.push(Violation::new(
                    Rule::B4,
                    vec![o_ent(op.id)],
                    format!("{n} patients of type {ptype} exceed limit {limit}"),
                ));
            }
        }
        for p in &assigned {
            if !op.is_qualified(&p.ptype) {
                v.push(Violation::new(
                    Rule::B5,
                    vec![o_ent(op.id), p_ent(p.id)],
                    format!("operator not qualified for {}", p.ptype),
                ));
            }
        }
    }
    Ok(v)
}

/// Board cost: `[preference weights, patients on the fictitious operator, history weights]`.
pub fn board_cost(inst: &Instance, sol: &BoardSolution) -> Result<CostVector> {
    let v = check_board(inst, sol)?;
    if !v.is_empty() {
        return Err(Error::CostUndefined(v.len()));
    }
    let mut levels = [0u64; BOARD_LEVELS];
    for (pid, oid) in &sol.assignment {
        let p = inst.patient(*pid).expect("checked above");
        levels[0] += p.preference_weight(*oid) as u64;
        levels[1] += oid.is_fictitious() as u64;
        levels[2] += p.history_weight(*oid) as u64;
    }
    Ok(CostVector(levels.to_vec()))
}

/// Cost contribution of one scheduled session, levels 6 down to 1.
pub fn placement_cost(spec: &SessionSpec, period: u32, start: u32, length: u32) -> [u64; 6] {
    let mut c = [0u64; AGENDA_LEVELS];
    c[0] = length.abs_diff(spec.ideal_length) as u64;
    if let (true, Some(pref)) = (spec.is_individual(), spec.preference) {
        let (period_level, start_level) = match pref.priority {
            Priority::High => (1, 2),
            Priority::Low if spec.is_optional() => (4, 5),
            Priority::Low => return c,
        };
        c[period_level] = period.abs_diff(pref.period) as u64;
        if period == pref.period {
            c[start_level] = start.abs_diff(pref.start) as u64;
        }
    }
    c
}

/// Cost contribution of a session left out of the agenda.
pub fn unscheduled_cost(spec: &SessionSpec) -> [u64; 6] {
    let mut c = [0u64; AGENDA_LEVELS];
    if spec.is_optional() {
        c[3] = 1;
    }
    c
}

/// Whether `session` takes part in the agenda: its patient is assigned to a real operator.
pub fn session_operator(
    inst: &Instance,
    board: &BoardSolution,
    spec: &SessionSpec,
) -> Result<Option<OperatorId>> {
    let op = board
        .operator_of(spec.patient)
        .ok_or_else(|| Error::Structural(format!("board has no entry for patient {}", spec.patient)))?;
    if inst.operator(op).is_none() {
        return Err(Error::Structural(format!("unknown operator {op}")));
    }
    Ok((!op.is_fictitious()).then_some(op))
}

struct Placed<'a> {
    p: &'a SessionPlacement,
    spec: &'a SessionSpec,
    op: OperatorId,
}

fn ind_overlap(a: &SessionPlacement, b: &SessionPlacement) -> bool {
    a.period == b.period && a.start < b.start + b.length && b.start < a.start + a.length
}

fn ext_overlap(a: &SessionPlacement, b: &SessionPlacement) -> bool {
    a.period == b.period && a.ext_start() < b.ext_end() && b.ext_start() < a.ext_end()
}

/// The three fair-reduction patterns for an ordered pair of individual sessions
/// sharing operator, location and period.
pub fn unfair_reduction(
    (min1, ideal1, len1): (u32, u32, u32),
    (min2, ideal2, len2): (u32, u32, u32),
) -> bool {
    let (min1, ideal1, len1) = (min1 as i64, ideal1 as i64, len1 as i64);
    let (min2, ideal2, len2) = (min2 as i64, ideal2 as i64, len2 as i64);
    let slack1 = ideal1 - len1;
    let slack2 = ideal2 - len2;
    let absorbable = slack1 <= ideal2 - min2 && slack2 <= ideal1 - min1;
    (absorbable && (slack1 - slack2).abs() > 1)
        || (slack1 > ideal2 - min2 && len2 > min2)
        || (absorbable && ideal2 < ideal1 && slack1 < slack2)
}

/// Hard-constraint violations of an agenda, given the board it was built on.
pub fn check_agenda(
    inst: &Instance,
    board: &BoardSolution,
    sol: &AgendaSolution,
) -> Result<Vec<Violation>> {
    let mut v = Vec::new();
    let mut placed: Vec<Placed> = Vec::new();

    for (sid, p) in &sol.placements {
        if *sid != p.session {
            return Err(Error::Structural(format!("placement keyed {sid} describes session {}", p.session)));
        }
        let spec = inst
            .session(*sid)
            .ok_or_else(|| Error::Structural(format!("unknown session {sid}")))?;
        if inst.location(p.location).is_none() {
            return Err(Error::Structural(format!("unknown location {}", p.location)));
        }
        match session_operator(inst, board, spec)? {
            Some(op) => placed.push(Placed { p, spec, op }),
            None => v.push(Violation::new(
                Rule::A1,
                vec![s_ent(*sid), p_ent(spec.patient)],
                "session scheduled for a patient on the fictitious operator",
            )),
        }
    }

    // A1
    for spec in &inst.sessions {
        if spec.is_optional() || sol.placements.contains_key(&spec.id) {
            continue;
        }
        if session_operator(inst, board, spec)?.is_some() {
            v.push(Violation::new(Rule::A1, vec![s_ent(spec.id)], "mandatory session not scheduled"));
        }
    }

    // Unary rules.
    for Placed { p, spec, op } in &placed {
        let operator = inst.operator(*op).expect("resolved");
        let ents = vec![s_ent(p.session)];
        match operator.shift(p.period) {
            None => v.push(Violation::new(
                Rule::A2,
                vec![s_ent(p.session), o_ent(*op)],
                format!("operator has no shift in period {}", p.period),
            )),
            Some(shift) => {
                if p.start < shift.start || p.start + p.length > shift.end {
                    v.push(Violation::new(
                        Rule::A2,
                        vec![s_ent(p.session), o_ent(*op)],
                        format!(
                            "individual part [{}, {}) outside shift [{}, {})",
                            p.start,
                            p.start + p.length,
                            shift.start,
                            shift.end
                        ),
                    ));
                }
                let room_before = p.start as i64 - shift.start as i64;
                let room_after = shift.end as i64 - p.start as i64 - p.length as i64;
                if p.before as i64 > room_before || p.after as i64 > room_after {
                    v.push(Violation::new(
                        Rule::A4,
                        ents.clone(),
                        format!("extensions {}+{} leave the shift", p.before, p.after),
                    ));
                }
            }
        }
        if p.length < spec.min_length || p.length > spec.ideal_length {
            v.push(Violation::new(
                Rule::A2,
                ents.clone(),
                format!(
                    "length {} outside [{}, {}]",
                    p.length, spec.min_length, spec.ideal_length
                ),
            ));
        }
        let loc = inst.location(p.location).expect("checked above");
        if loc.macro_location != spec.macro_location {
            v.push(Violation::new(
                Rule::A3,
                vec![s_ent(p.session), l_ent(p.location)],
                format!(
                    "location in macro-location {}, session requires {}",
                    loc.macro_location, spec.macro_location
                ),
            ));
        }
        let patient = inst
            .patient(spec.patient)
            .ok_or_else(|| Error::Structural(format!("unknown patient {}", spec.patient)))?;
        for w in &patient.forbidden {
            if p.ext_start() < 0 {
                // Already an A4 violation; overlap test below needs a valid start.
                continue;
            }
            if w.overlaps(p.period, p.ext_start() as u32, p.ext_length()) {
                v.push(Violation::new(
                    Rule::A11,
                    vec![s_ent(p.session), p_ent(patient.id)],
                    format!(
                        "extended interval [{}, {}) meets forbidden [{}, {}) in period {}",
                        p.ext_start(),
                        p.ext_end(),
                        w.start,
                        w.end,
                        w.period
                    ),
                ));
            }
        }
        if let Some(f) = spec.forced_time {
            if f.period != p.period || f.slot != p.start {
                v.push(Violation::new(
                    Rule::A13,
                    ents.clone(),
                    format!("forced at ({}, {}), placed at ({}, {})", f.period, f.slot, p.period, p.start),
                ));
            }
        }
    }

    // Pairwise rules.
    for (i, a) in placed.iter().enumerate() {
        for b in &placed[i + 1..] {
            let ents = vec![s_ent(a.p.session), s_ent(b.p.session)];
            if a.op == b.op
                && a.spec.is_individual()
                && b.spec.is_individual()
                && ind_overlap(a.p, b.p)
            {
                v.push(Violation::new(Rule::A5, ents.clone(), "individual parts overlap"));
            }
            if a.spec.patient == b.spec.patient && a.p.period == b.p.period {
                v.push(Violation::new(Rule::A6, ents.clone(), "two sessions of one patient in one period"));
            }
            if a.op == b.op
                && a.spec.is_individual()
                && b.spec.is_individual()
                && a.p.location == b.p.location
                && a.p.period == b.p.period
            {
                let ta = (a.spec.min_length, a.spec.ideal_length, a.p.length);
                let tb = (b.spec.min_length, b.spec.ideal_length, b.p.length);
                if unfair_reduction(ta, tb) || unfair_reduction(tb, ta) {
                    v.push(Violation::new(Rule::A7, ents.clone(), "length reductions not shared fairly"));
                }
            }
            if a.op == b.op && a.p.location != b.p.location && ext_overlap(a.p, b.p) {
                v.push(Violation::new(
                    Rule::A8,
                    ents.clone(),
                    format!("operator {} in two locations at once", a.op),
                ));
            }
        }
    }

    // A9
    let mut reserved: HashMap<PatientId, u32> = HashMap::new();
    for pl in &placed {
        *reserved.entry(pl.spec.patient).or_default() += pl.p.ext_length();
    }
    for patient in &inst.patients {
        let assigned_real = board.operator_of(patient.id).is_some_and(|o| !o.is_fictitious());
        if !assigned_real {
            continue;
        }
        let got = reserved.get(&patient.id).copied().unwrap_or(0);
        if got < patient.min_daily_length {
            v.push(Violation::new(
                Rule::A9,
                vec![p_ent(patient.id)],
                format!("{got} slots reserved, minimum {}", patient.min_daily_length),
            ));
        }
    }

    // A10
    for loc in &inst.locations {
        if loc.capacity <= 0 {
            continue;
        }
        for w in &loc.open {
            for t in w.start..w.end {
                let n = placed
                    .iter()
                    .filter(|pl| pl.p.location == loc.id && pl.p.covers_ext(w.period, t))
                    .count();
                if n as i64 > loc.capacity as i64 {
                    v.push(Violation::new(
                        Rule::A10,
                        vec![l_ent(loc.id)],
                        format!("{n} sessions at ({}, {t}), capacity {}", w.period, loc.capacity),
                    ));
                }
            }
        }
    }

    // A12
    let mut macros: BTreeMap<_, Vec<LocationId>> = BTreeMap::new();
    for loc in &inst.locations {
        macros.entry(loc.macro_location).or_default().push(loc.id);
    }
    for (mac, locs) in &macros {
        if locs.len() < 2 {
            continue;
        }
        for period in &inst.grid.periods {
            let slots = inst.grid.slots(period.index).unwrap_or(0);
            for t in 0..slots {
                let counts: Vec<(LocationId, usize)> = locs
                    .iter()
                    .map(|l| {
                        let n = placed
                            .iter()
                            .filter(|pl| pl.p.location == *l && pl.p.covers_ext(period.index, t))
                            .count();
                        (*l, n)
                    })
                    .collect();
                let hi = counts.iter().max_by_key(|(_, n)| *n).expect("non-empty");
                let lo = counts.iter().min_by_key(|(_, n)| *n).expect("non-empty");
                if hi.1 > lo.1 + 2 {
                    v.push(Violation::new(
                        Rule::A12,
                        vec![l_ent(hi.0), l_ent(lo.0)],
                        format!(
                            "macro-location {mac} at ({}, {t}): {} vs {} sessions",
                            period.index, hi.1, lo.1
                        ),
                    ));
                }
            }
        }
    }

    Ok(v)
}

/// Agenda cost, levels 6 down to 1.
pub fn agenda_cost(inst: &Instance, board: &BoardSolution, sol: &AgendaSolution) -> Result<CostVector> {
    let v = check_agenda(inst, board, sol)?;
    if !v.is_empty() {
        return Err(Error::CostUndefined(v.len()));
    }
    let mut cost = CostVector::zeros(AGENDA_LEVELS);
    for spec in &inst.sessions {
        if session_operator(inst, board, spec)?.is_none() {
            continue;
        }
        match sol.get(spec.id) {
            Some(p) => cost.add_assign(&placement_cost(spec, p.period, p.start, p.length)),
            None => cost.add_assign(&unscheduled_cost(spec)),
        }
    }
    Ok(cost)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builder::{single_period_grid, InstanceBuilder};
    use crate::model::{Optionality, SessionKind, SessionPreference};

    fn spec(min: u32, ideal: u32) -> SessionSpec {
        let mut b = InstanceBuilder::new(single_period_grid(24));
        b.patient(1, min);
        b.session(1, SessionKind::Individual, min, ideal, 1).clone()
    }

    #[test]
    fn fair_reduction_patterns() {
        // Equal slack, or slack differing by one, is fair.
        assert!(!unfair_reduction((4, 6, 5), (4, 6, 5)));
        assert!(!unfair_reduction((4, 6, 5), (4, 6, 6)));
        // 6/4 cut on one side while the other could absorb it.
        assert!(unfair_reduction((4, 6, 4), (4, 6, 6)));
        // Slack beyond what the partner could give, partner above its minimum.
        assert!(unfair_reduction((2, 4, 2), (3, 4, 4)));
        assert!(!unfair_reduction((2, 4, 2), (3, 4, 3)));
        // The longer session must not keep more of its ideal.
        assert!(unfair_reduction((3, 5, 5), (3, 4, 3)) || unfair_reduction((3, 4, 3), (3, 5, 5)));
    }

    #[test]
    fn placement_cost_levels() {
        let mut s = spec(4, 6);
        assert_eq!(placement_cost(&s, 0, 3, 5), [1, 0, 0, 0, 0, 0]);
        s.preference = Some(SessionPreference { period: 1, start: 2, priority: Priority::High });
        assert_eq!(placement_cost(&s, 0, 3, 6), [0, 1, 0, 0, 0, 0]);
        assert_eq!(placement_cost(&s, 1, 5, 6), [0, 0, 3, 0, 0, 0]);
        // Low priority counts only for optional sessions.
        s.preference = Some(SessionPreference { period: 1, start: 2, priority: Priority::Low });
        assert_eq!(placement_cost(&s, 0, 3, 6), [0; 6]);
        s.optionality = Optionality::Optional;
        assert_eq!(placement_cost(&s, 0, 3, 6), [0, 0, 0, 0, 1, 0]);
        assert_eq!(placement_cost(&s, 1, 0, 6), [0, 0, 0, 0, 0, 2]);
        assert_eq!(unscheduled_cost(&s), [0, 0, 0, 1, 0, 0]);
        s.kind = SessionKind::Supervised;
        assert_eq!(placement_cost(&s, 0, 3, 6), [0; 6]);
    }

    #[test]
    fn workload_charges_daily_minimum_unless_location_shared() {
        let mut b = InstanceBuilder::new(single_period_grid(24));
        b.operator(1, &[(0, 0, 24)]);
        b.location(1, 2, 1);
        b.location(2, 2, 2);
        b.patient(1, 5);
        b.session(1, SessionKind::Individual, 3, 5, 1);
        b.patient(2, 4);
        b.session(2, SessionKind::Individual, 2, 4, 1);
        b.patient(3, 6);
        b.session(3, SessionKind::Individual, 4, 6, 2);
        let inst = b.build();
        let board: BoardSolution = [(1, 1), (2, 1), (3, 1)]
            .into_iter()
            .map(|(p, o)| (PatientId(p), OperatorId(o)))
            .collect();
        assert_eq!(operator_workload(&inst, &board)[&OperatorId(1)], 3 + 2 + 6);
        let alone: BoardSolution = [(1, 1), (2, -1), (3, -1)]
            .into_iter()
            .map(|(p, o)| (PatientId(p), OperatorId(o)))
            .collect();
        assert_eq!(operator_workload(&inst, &alone)[&OperatorId(1)], 5);
    }

    #[test]
    fn unknown_entities_are_structural_errors() {
        let mut b = InstanceBuilder::new(single_period_grid(24));
        b.operator(1, &[(0, 0, 24)]);
        b.location(1, 1, 1);
        b.patient(1, 2);
        b.session(1, SessionKind::Individual, 2, 3, 1);
        let inst = b.build();
        let board: BoardSolution = [(PatientId(1), OperatorId(9))].into_iter().collect();
        assert!(matches!(check_board(&inst, &board), Err(Error::Structural(_))));
        let board: BoardSolution = [(PatientId(1), OperatorId(1))].into_iter().collect();
        let mut agenda = AgendaSolution::default();
        agenda.insert(SessionPlacement {
            session: SessionId(1),
            period: 0,
            start: 0,
            length: 3,
            before: 0,
            after: 0,
            location: LocationId(7),
        });
        assert!(matches!(check_agenda(&inst, &board, &agenda), Err(Error::Structural(_))));
    }
}
