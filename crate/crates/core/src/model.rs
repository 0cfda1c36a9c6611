//! Domain types for the two scheduling phases.
//!
//! Time is discrete: each period (morning, afternoon, ...) is cut into slots of
//! `slot_minutes` and every slot number in the model is relative to the start
//! of its period. Windows are half-open `[start, end)`.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

macro_rules! id_type {
    ($(#[$meta:meta])* $name:ident, $inner:ty) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub $inner);

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                self.0.fmt(f)
            }
        }
    };
}

id_type!(PatientId, u32);
id_type!(
    /// Operator identifier; `-1` is reserved for the fictitious catch-all operator.
    OperatorId,
    i32
);
id_type!(SessionId, u32);
id_type!(LocationId, u32);
id_type!(MacroId, u32);

impl OperatorId {
    pub const FICTITIOUS: OperatorId = OperatorId(-1);

    pub fn is_fictitious(self) -> bool {
        self == Self::FICTITIOUS
    }
}

/// Wall-clock time of day, serialized as `"HH:MM"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct WallClock {
    minutes: u32,
}

impl WallClock {
    pub fn new(hours: u32, minutes: u32) -> Option<Self> {
        (hours < 24 && minutes < 60).then_some(Self {
            minutes: hours * 60 + minutes,
        })
    }

    pub fn from_minutes(minutes: u32) -> Option<Self> {
        (minutes < 24 * 60).then_some(Self { minutes })
    }

    pub fn minutes(self) -> u32 {
        self.minutes
    }
}

impl fmt::Display for WallClock {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:02}:{:02}", self.minutes / 60, self.minutes % 60)
    }
}

impl FromStr for WallClock {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (h, m) = s
            .split_once(':')
            .ok_or_else(|| format!("expected HH:MM, got `{s}`"))?;
        let h: u32 = h.parse().map_err(|_| format!("bad hour in `{s}`"))?;
        let m: u32 = m.parse().map_err(|_| format!("bad minute in `{s}`"))?;
        WallClock::new(h, m).ok_or_else(|| format!("time out of range: `{s}`"))
    }
}

impl Serialize for WallClock {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for WallClock {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeriodSpec {
    pub index: u32,
    pub start: WallClock,
    pub end: WallClock,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub slot_minutes: u32,
    pub periods: Vec<PeriodSpec>,
}

impl Default for TimeGrid {
    /// 10-minute slots; morning 08:00-12:00 and afternoon 13:30-16:00.
    fn default() -> Self {
        Self {
            slot_minutes: 10,
            periods: vec![
                PeriodSpec {
                    index: 0,
                    start: WallClock::new(8, 0).unwrap(),
                    end: WallClock::new(12, 0).unwrap(),
                },
                PeriodSpec {
                    index: 1,
                    start: WallClock::new(13, 30).unwrap(),
                    end: WallClock::new(16, 0).unwrap(),
                },
            ],
        }
    }
}

impl TimeGrid {
    pub fn period(&self, period: u32) -> Option<&PeriodSpec> {
        self.periods.iter().find(|p| p.index == period)
    }

    /// Number of slots in `period`, or `None` for an unknown period.
    pub fn slots(&self, period: u32) -> Option<u32> {
        let p = self.period(period)?;
        if self.slot_minutes == 0 || p.end <= p.start {
            return None;
        }
        Some((p.end.minutes() - p.start.minutes()) / self.slot_minutes)
    }

    pub fn max_slots(&self) -> u32 {
        self.periods
            .iter()
            .filter_map(|p| self.slots(p.index))
            .max()
            .unwrap_or(0)
    }

    /// Wall-clock time at which `slot` of `period` begins. `slot` may equal the
    /// slot count, which yields the period end.
    pub fn slot_to_clock(&self, period: u32, slot: u32) -> Option<WallClock> {
        let n = self.slots(period)?;
        if slot > n {
            return None;
        }
        let p = self.period(period)?;
        WallClock::from_minutes(p.start.minutes() + slot * self.slot_minutes)
    }

    /// Inverse of [`TimeGrid::slot_to_clock`]; `None` if `clock` is off-grid.
    pub fn clock_to_slot(&self, period: u32, clock: WallClock) -> Option<u32> {
        let p = self.period(period)?;
        let n = self.slots(period)?;
        let offset = clock.minutes().checked_sub(p.start.minutes())?;
        if offset % self.slot_minutes != 0 {
            return None;
        }
        let slot = offset / self.slot_minutes;
        (slot <= n).then_some(slot)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TypeValue {
    Neurologic,
    Orthopaedic,
    CovidPositive,
    CovidNegative,
    Outpatient,
}

impl TypeValue {
    pub const ALL: [TypeValue; 5] = [
        TypeValue::Neurologic,
        TypeValue::Orthopaedic,
        TypeValue::CovidPositive,
        TypeValue::CovidNegative,
        TypeValue::Outpatient,
    ];

    fn as_str(self) -> &'static str {
        match self {
            TypeValue::Neurologic => "neurologic",
            TypeValue::Orthopaedic => "orthopaedic",
            TypeValue::CovidPositive => "covid_positive",
            TypeValue::CovidNegative => "covid_negative",
            TypeValue::Outpatient => "outpatient",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Needs {
    Lifter,
    Nolifter,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PayStatus {
    Payer,
    Free,
}

/// Patient type in `value-needs-status` form, e.g. `neurologic-lifter-payer`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PatientType {
    pub value: TypeValue,
    pub needs: Needs,
    pub status: PayStatus,
}

impl PatientType {
    pub fn new(value: TypeValue, needs: Needs, status: PayStatus) -> Self {
        Self {
            value,
            needs,
            status,
        }
    }
}

impl fmt::Display for PatientType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let needs = match self.needs {
            Needs::Lifter => "lifter",
            Needs::Nolifter => "nolifter",
        };
        let status = match self.status {
            PayStatus::Payer => "payer",
            PayStatus::Free => "free",
        };
        write!(f, "{}-{}-{}", self.value.as_str(), needs, status)
    }
}

impl FromStr for PatientType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut parts = s.split('-');
        let (Some(v), Some(n), Some(st), None) =
            (parts.next(), parts.next(), parts.next(), parts.next())
        else {
            return Err(format!("expected value-needs-status, got `{s}`"));
        };
        let value = TypeValue::ALL
            .into_iter()
            .find(|t| t.as_str() == v)
            .ok_or_else(|| format!("unknown type value `{v}`"))?;
        let needs = match n {
            "lifter" => Needs::Lifter,
            "nolifter" => Needs::Nolifter,
            _ => return Err(format!("unknown needs `{n}`")),
        };
        let status = match st {
            "payer" => PayStatus::Payer,
            "free" => PayStatus::Free,
            _ => return Err(format!("unknown status `{st}`")),
        };
        Ok(Self::new(value, needs, status))
    }
}

impl Serialize for PatientType {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PatientType {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Half-open slot window `[start, end)` inside one period.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Window {
    pub period: u32,
    pub start: u32,
    pub end: u32,
}

impl Window {
    pub fn new(period: u32, start: u32, end: u32) -> Self {
        Self { period, start, end }
    }

    pub fn len(&self) -> u32 {
        self.end.saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    pub fn contains(&self, slot: u32) -> bool {
        self.start <= slot && slot < self.end
    }

    /// Whether `[start, start + len)` in the same period intersects this window.
    pub fn overlaps(&self, period: u32, start: u32, len: u32) -> bool {
        self.period == period && self.start < start + len && start < self.end
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Preference {
    pub operator: OperatorId,
    pub weight: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Patient {
    pub id: PatientId,
    pub ptype: PatientType,
    /// Minimum cumulative treatment time over the day, in slots.
    pub min_daily_length: u32,
    #[serde(default)]
    pub forbidden: Vec<Window>,
    #[serde(default)]
    pub preferred_operators: Vec<Preference>,
    #[serde(default)]
    pub history_preferences: Vec<Preference>,
    pub sessions: Vec<SessionId>,
}

impl Patient {
    /// Preference penalty for treatment by `op`. Listed operators carry their
    /// weight; any operator missing from the list, the fictitious one
    /// included, ranks after the whole list.
    pub fn preference_weight(&self, op: OperatorId) -> u32 {
        self.preferred_operators
            .iter()
            .find(|p| p.operator == op)
            .map(|p| p.weight)
            .unwrap_or(self.preferred_operators.len() as u32 + 1)
    }

    pub fn history_weight(&self, op: OperatorId) -> u32 {
        self.history_preferences
            .iter()
            .find(|p| p.operator == op)
            .map(|p| p.weight)
            .unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Operator {
    pub id: OperatorId,
    /// Contract time in slots; `None` is unbounded.
    #[serde(default)]
    pub total_time: Option<u32>,
    #[serde(default)]
    pub max_patients: Option<u32>,
    #[serde(default)]
    pub type_limits: BTreeMap<PatientType, u32>,
    #[serde(default)]
    pub shifts: Vec<Window>,
    #[serde(default)]
    pub qualifications: BTreeSet<TypeValue>,
}

impl Operator {
    pub fn fictitious() -> Self {
        Self {
            id: OperatorId::FICTITIOUS,
            total_time: None,
            max_patients: None,
            type_limits: BTreeMap::new(),
            shifts: Vec::new(),
            qualifications: BTreeSet::new(),
        }
    }

    pub fn shift(&self, period: u32) -> Option<&Window> {
        self.shifts.iter().find(|s| s.period == period)
    }

    pub fn is_qualified(&self, ptype: &PatientType) -> bool {
        self.id.is_fictitious() || self.qualifications.contains(&ptype.value)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LocationSpec {
    pub id: LocationId,
    /// Concurrent sessions allowed; zero or negative means unconstrained.
    pub capacity: i32,
    #[serde(default)]
    pub open: Vec<Window>,
    pub macro_location: MacroId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionKind {
    Individual,
    Supervised,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Optionality {
    Mandatory,
    Optional,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Priority {
    High,
    Low,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SlotRef {
    pub period: u32,
    pub slot: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SessionPreference {
    pub period: u32,
    pub start: u32,
    pub priority: Priority,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionSpec {
    pub id: SessionId,
    pub patient: PatientId,
    pub kind: SessionKind,
    pub min_length: u32,
    pub ideal_length: u32,
    pub optionality: Optionality,
    pub macro_location: MacroId,
    #[serde(default)]
    pub forced_time: Option<SlotRef>,
    #[serde(default)]
    pub preference: Option<SessionPreference>,
}

impl SessionSpec {
    pub fn is_optional(&self) -> bool {
        self.optionality == Optionality::Optional
    }

    pub fn is_individual(&self) -> bool {
        self.kind == SessionKind::Individual
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Instance {
    pub grid: TimeGrid,
    pub patients: Vec<Patient>,
    pub operators: Vec<Operator>,
    pub locations: Vec<LocationSpec>,
    pub sessions: Vec<SessionSpec>,
}

impl Instance {
    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn real_operators(&self) -> impl Iterator<Item = &Operator> {
        self.operators.iter().filter(|o| !o.id.is_fictitious())
    }

    pub fn patient(&self, id: PatientId) -> Option<&Patient> {
        self.patients.iter().find(|p| p.id == id)
    }

    pub fn operator(&self, id: OperatorId) -> Option<&Operator> {
        self.operators.iter().find(|o| o.id == id)
    }

    pub fn session(&self, id: SessionId) -> Option<&SessionSpec> {
        self.sessions.iter().find(|s| s.id == id)
    }

    pub fn location(&self, id: LocationId) -> Option<&LocationSpec> {
        self.locations.iter().find(|l| l.id == id)
    }

    pub fn index(&self) -> InstanceIndex {
        InstanceIndex::new(self)
    }
}

/// Id → position maps for an [`Instance`], for callers doing many lookups.
#[derive(Debug, Clone, Default)]
pub struct InstanceIndex {
    pub patients: HashMap<PatientId, usize>,
    pub operators: HashMap<OperatorId, usize>,
    pub sessions: HashMap<SessionId, usize>,
    pub locations: HashMap<LocationId, usize>,
    /// Locations of each macro-location, in instance order.
    pub macro_members: BTreeMap<MacroId, Vec<usize>>,
}

impl InstanceIndex {
    pub fn new(inst: &Instance) -> Self {
        let mut macro_members: BTreeMap<MacroId, Vec<usize>> = BTreeMap::new();
        for (i, l) in inst.locations.iter().enumerate() {
            macro_members.entry(l.macro_location).or_default().push(i);
        }
        Self {
            patients: inst.patients.iter().enumerate().map(|(i, p)| (p.id, i)).collect(),
            operators: inst.operators.iter().enumerate().map(|(i, o)| (o.id, i)).collect(),
            sessions: inst.sessions.iter().enumerate().map(|(i, s)| (s.id, i)).collect(),
            locations: inst.locations.iter().enumerate().map(|(i, l)| (l.id, i)).collect(),
            macro_members,
        }
    }
}

/// Lexicographic cost, highest-priority level first.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CostVector(pub Vec<u64>);

impl CostVector {
    pub fn zeros(levels: usize) -> Self {
        Self(vec![0; levels])
    }

    pub fn levels(&self) -> &[u64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn add_assign(&mut self, other: &[u64]) {
        for (a, b) in self.0.iter_mut().zip(other) {
            *a += b;
        }
    }
}

impl fmt::Display for CostVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, ")")
    }
}

impl From<Vec<u64>> for CostVector {
    fn from(v: Vec<u64>) -> Self {
        Self(v)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationIssue {
    pub entity: String,
    pub issue: String,
}

impl ValidationIssue {
    fn new(entity: impl Into<String>, issue: impl Into<String>) -> Self {
        Self {
            entity: entity.into(),
            issue: issue.into(),
        }
    }
}

impl fmt::Display for ValidationIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.entity, self.issue)
    }
}

fn check_window(
    grid: &TimeGrid,
    entity: &str,
    what: &str,
    w: &Window,
    issues: &mut Vec<ValidationIssue>,
) {
    match grid.slots(w.period) {
        None => issues.push(ValidationIssue::new(
            entity,
            format!("{what} refers to unknown period {}", w.period),
        )),
        Some(n) => {
            if w.start >= w.end {
                issues.push(ValidationIssue::new(
                    entity,
                    format!("{what} [{}, {}) is empty", w.start, w.end),
                ));
            } else if w.end > n {
                issues.push(ValidationIssue::new(
                    entity,
                    format!("{what} [{}, {}) exceeds period {} ({n} slots)", w.start, w.end, w.period),
                ));
            }
        }
    }
}

fn duplicates<T: Eq + std::hash::Hash + Copy + fmt::Display>(
    ids: impl Iterator<Item = T>,
    kind: &str,
    issues: &mut Vec<ValidationIssue>,
) {
    let mut seen = HashSet::new();
    for id in ids {
        if !seen.insert(id) {
            issues.push(ValidationIssue::new(format!("{kind} {id}"), "duplicate id"));
        }
    }
}

/// Checks every structural invariant of `inst`; an empty list means valid.
pub fn validate_instance(inst: &Instance) -> Vec<ValidationIssue> {
    let mut issues = Vec::new();
    let grid = &inst.grid;

    if grid.slot_minutes == 0 {
        issues.push(ValidationIssue::new("grid", "slot_minutes must be positive"));
    }
    let mut prev_end: Option<WallClock> = None;
    for (i, p) in grid.periods.iter().enumerate() {
        let entity = format!("period {}", p.index);
        if p.index as usize != i {
            issues.push(ValidationIssue::new(&entity, "period indices must be 0-based and contiguous"));
        }
        if p.end <= p.start {
            issues.push(ValidationIssue::new(&entity, "period end must follow its start"));
        } else if grid.slot_minutes > 0 && (p.end.minutes() - p.start.minutes()) % grid.slot_minutes != 0 {
            issues.push(ValidationIssue::new(&entity, "period span is not a multiple of slot_minutes"));
        }
        if prev_end.is_some_and(|e| p.start < e) {
            issues.push(ValidationIssue::new(&entity, "periods must be chronological and disjoint"));
        }
        prev_end = Some(p.end);
    }
    let n_periods = grid.periods.len();

    duplicates(inst.patients.iter().map(|p| p.id), "patient", &mut issues);
    duplicates(inst.operators.iter().map(|o| o.id), "operator", &mut issues);
    duplicates(inst.locations.iter().map(|l| l.id), "location", &mut issues);
    duplicates(inst.sessions.iter().map(|s| s.id), "session", &mut issues);

    let patients: HashMap<PatientId, &Patient> = inst.patients.iter().map(|p| (p.id, p)).collect();
    let operators: HashSet<OperatorId> = inst.operators.iter().map(|o| o.id).collect();
    let macros: HashSet<MacroId> = inst.locations.iter().map(|l| l.macro_location).collect();

    match inst.operators.iter().filter(|o| o.id.is_fictitious()).count() {
        0 => issues.push(ValidationIssue::new("operator -1", "missing fictitious operator")),
        1 => {}
        _ => {} // reported as duplicate id
    }

    for op in &inst.operators {
        let entity = format!("operator {}", op.id);
        if op.id.is_fictitious() {
            if op.total_time.is_some() || op.max_patients.is_some() || !op.type_limits.is_empty() {
                issues.push(ValidationIssue::new(&entity, "fictitious operator must be unbounded"));
            }
            continue;
        }
        if op.id.0 < 0 {
            issues.push(ValidationIssue::new(&entity, "negative ids are reserved"));
        }
        let mut periods = HashSet::new();
        for s in &op.shifts {
            check_window(grid, &entity, "shift", s, &mut issues);
            if !periods.insert(s.period) {
                issues.push(ValidationIssue::new(&entity, format!("more than one shift in period {}", s.period)));
            }
        }
    }

    for p in &inst.patients {
        let entity = format!("patient {}", p.id);
        for w in &p.forbidden {
            check_window(grid, &entity, "forbidden window", w, &mut issues);
        }
        for pref in p.preferred_operators.iter().chain(&p.history_preferences) {
            if !operators.contains(&pref.operator) {
                issues.push(ValidationIssue::new(&entity, format!("preference for unknown operator {}", pref.operator)));
            }
        }
        if p.preferred_operators.windows(2).any(|w| w[0].weight > w[1].weight) {
            issues.push(ValidationIssue::new(&entity, "preferred operators not ordered by weight"));
        }
        if p.sessions.is_empty() || p.sessions.len() > n_periods {
            issues.push(ValidationIssue::new(
                &entity,
                format!("has {} sessions, expected 1..={n_periods}", p.sessions.len()),
            ));
        }
        for sid in &p.sessions {
            match inst.session(*sid) {
                None => issues.push(ValidationIssue::new(&entity, format!("unknown session {sid}"))),
                Some(s) if s.patient != p.id => issues.push(ValidationIssue::new(
                    &entity,
                    format!("session {sid} belongs to patient {}", s.patient),
                )),
                Some(_) => {}
            }
        }
    }

    for l in &inst.locations {
        let entity = format!("location {}", l.id);
        for w in &l.open {
            check_window(grid, &entity, "open window", w, &mut issues);
        }
    }

    for s in &inst.sessions {
        let entity = format!("session {}", s.id);
        match patients.get(&s.patient) {
            None => issues.push(ValidationIssue::new(&entity, format!("unknown patient {}", s.patient))),
            Some(p) if !p.sessions.contains(&s.id) => {
                issues.push(ValidationIssue::new(&entity, "not listed by its patient"))
            }
            Some(_) => {}
        }
        if s.min_length == 0 {
            issues.push(ValidationIssue::new(&entity, "min_length must be positive"));
        }
        if s.min_length > s.ideal_length {
            issues.push(ValidationIssue::new(&entity, "min exceeds ideal"));
        }
        if !macros.contains(&s.macro_location) {
            issues.push(ValidationIssue::new(
                &entity,
                format!("macro-location {} has no locations", s.macro_location),
            ));
        }
        if let Some(f) = s.forced_time {
            if grid.slots(f.period).is_none_or(|n| f.slot >= n) {
                issues.push(ValidationIssue::new(&entity, "forced time outside the grid"));
            }
        }
        if let Some(pref) = s.preference {
            if grid.slots(pref.period).is_none_or(|n| pref.start >= n) {
                issues.push(ValidationIssue::new(&entity, "preferred start outside the grid"));
            }
        }
    }

    issues
}

/// Patients per real operator.
pub fn density(inst: &Instance) -> Result<f64> {
    let ops = inst.real_operators().count();
    if ops == 0 {
        return Err(Error::NoOperators);
    }
    Ok(inst.patients.len() as f64 / ops as f64)
}

/// Mean number of qualifications over real operators.
pub fn avg_qualifications(inst: &Instance) -> Result<f64> {
    let ops: Vec<_> = inst.real_operators().collect();
    if ops.is_empty() {
        return Err(Error::NoOperators);
    }
    let total: usize = ops.iter().map(|o| o.qualifications.len()).sum();
    Ok(total as f64 / ops.len() as f64)
}
