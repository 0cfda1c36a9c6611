//! Seeded synthetic instances shaped like the two reference institutes.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::builder::{two_period_grid, InstanceBuilder};
use crate::error::{Error, Result};
use crate::feas::BoardSolution;
use crate::model::{
    Instance, LocationId, LocationSpec, MacroId, Needs, Operator, OperatorId, Optionality, Patient,
    PatientId, PatientType, PayStatus, Preference, Priority, SessionId, SessionKind,
    SessionPreference, SessionSpec, SlotRef, TimeGrid, TypeValue, Window,
};

/// Inclusive integer range sampled uniformly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct UniformRange {
    pub lo: u32,
    pub hi: u32,
}

impl UniformRange {
    pub fn new(lo: u32, hi: u32) -> Self {
        Self { lo, hi }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> u32 {
        rng.gen_range(self.lo..=self.hi)
    }
}

/// Relative weights of the three shift patterns.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShiftMix {
    pub morning: f64,
    pub afternoon: f64,
    pub both: f64,
}

impl Default for ShiftMix {
    fn default() -> Self {
        Self {
            morning: 1.0,
            afternoon: 1.0,
            both: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenParams {
    pub n_patients: u32,
    pub n_operators: u32,
    pub n_floors: u32,
    pub n_gyms: u32,
    /// Probability that a session is individual rather than supervised.
    pub pct_individual: f64,
    pub shift_length_dist: ShiftMix,
    /// Ideal session length in slots.
    pub ideal_length_dist: UniformRange,
    /// Slots cut from the ideal length to get the minimum length.
    pub min_length_dist: UniformRange,
    /// Lower clamp for minimum lengths.
    pub min_length_floor: u32,
    /// Probability that a patient has a forbidden window.
    pub forbidden_rate: f64,
    /// Probability of an operator preference list and, separately, of a
    /// preferred session time.
    pub preference_rate: f64,
    /// Probability that a patient's second session is optional; first
    /// sessions are always mandatory.
    pub optional_rate: f64,
    /// Probability of a second session in the other period.
    pub second_session_rate: f64,
    pub outpatient_rate: f64,
    pub lifter_rate: f64,
    pub payer_rate: f64,
    /// Probability of a continuity-of-care entry.
    pub history_rate: f64,
    /// Probability that an operator lacks one qualification.
    pub qualification_gap_rate: f64,
    /// Contracted working time as a fraction of the shift span.
    pub workload_ratio: f64,
    pub gym_capacity: i32,
    pub grid: TimeGrid,
    pub seed: u64,
}

impl Default for GenParams {
    fn default() -> Self {
        Self {
            n_patients: 37,
            n_operators: 9,
            n_floors: 1,
            n_gyms: 1,
            pct_individual: 0.7,
            shift_length_dist: ShiftMix::default(),
            ideal_length_dist: UniformRange::new(3, 9),
            min_length_dist: UniformRange::new(0, 3),
            min_length_floor: 2,
            forbidden_rate: 0.2,
            preference_rate: 0.3,
            optional_rate: 1.0,
            second_session_rate: 0.5,
            outpatient_rate: 0.2,
            lifter_rate: 0.3,
            payer_rate: 0.5,
            history_rate: 0.2,
            qualification_gap_rate: 0.1,
            workload_ratio: 0.8,
            gym_capacity: 6,
            grid: TimeGrid::default(),
            seed: 0,
        }
    }
}

impl GenParams {
    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        for (name, p) in [
            ("pct_individual", self.pct_individual),
            ("forbidden_rate", self.forbidden_rate),
            ("preference_rate", self.preference_rate),
            ("optional_rate", self.optional_rate),
            ("second_session_rate", self.second_session_rate),
            ("outpatient_rate", self.outpatient_rate),
            ("lifter_rate", self.lifter_rate),
            ("payer_rate", self.payer_rate),
            ("history_rate", self.history_rate),
            ("qualification_gap_rate", self.qualification_gap_rate),
            ("workload_ratio", self.workload_ratio),
        ] {
            if !(0.0..=1.0).contains(&p) {
                bad.push(format!("{name} = {p} is not a probability"));
            }
        }
        for (name, n) in [
            ("n_patients", self.n_patients),
            ("n_operators", self.n_operators),
            ("n_floors", self.n_floors),
            ("n_gyms", self.n_gyms),
        ] {
            if n == 0 {
                bad.push(format!("{name} must be positive"));
            }
        }
        let mix = self.shift_length_dist;
        if [mix.morning, mix.afternoon, mix.both].iter().any(|w| *w < 0.0 || !w.is_finite())
            || mix.morning + mix.afternoon + mix.both <= 0.0
        {
            bad.push("shift_length_dist weights must be non-negative with a positive sum".into());
        }
        let ideal = self.ideal_length_dist;
        if ideal.lo > ideal.hi || self.min_length_dist.lo > self.min_length_dist.hi {
            bad.push("empty length range".into());
        }
        if self.min_length_floor == 0 {
            bad.push("min_length_floor must be positive".into());
        }
        if self.min_length_floor > ideal.lo {
            bad.push(format!(
                "minimum length floor {} exceeds the smallest ideal length {}",
                self.min_length_floor, ideal.lo
            ));
        }
        if self.grid.periods.len() != 2 {
            bad.push("the generator expects a morning and an afternoon period".into());
        }
        let shortest = self.grid.periods.iter().filter_map(|p| self.grid.slots(p.index)).min().unwrap_or(0);
        if ideal.hi > shortest {
            bad.push(format!("ideal lengths up to {} do not fit a {shortest}-slot period", ideal.hi));
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidParams(bad.join("; ")))
        }
    }
}

pub fn generate(params: &GenParams) -> Result<Instance> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let grid = params.grid.clone();
    let slots = [grid.slots(0).unwrap_or(0), grid.slots(1).unwrap_or(0)];

    let mut operators = vec![Operator::fictitious()];
    let mix = params.shift_length_dist;
    let total = mix.morning + mix.afternoon + mix.both;
    for i in 0..params.n_operators {
        let r = rng.gen::<f64>() * total;
        let periods: &[u32] = if r < mix.morning {
            &[0]
        } else if r < mix.morning + mix.afternoon {
            &[1]
        } else {
            &[0, 1]
        };
        let shifts: Vec<Window> = periods.iter().map(|&p| Window::new(p, 0, slots[p as usize])).collect();
        let mut qualifications: BTreeSet<TypeValue> = TypeValue::ALL.into_iter().collect();
        if rng.gen_bool(params.qualification_gap_rate) {
            let drop = *[TypeValue::Orthopaedic, TypeValue::Outpatient].choose(&mut rng).expect("non-empty");
            qualifications.remove(&drop);
        }
        operators.push(Operator {
            id: OperatorId(i as i32 + 1),
            total_time: Some((shifts.iter().map(Window::len).sum::<u32>() as f64 * params.workload_ratio) as u32),
            max_patients: None,
            type_limits: BTreeMap::new(),
            shifts,
            qualifications,
        });
    }

    let mut locations = Vec::new();
    let mut gym_floors = Vec::new();
    for g in 0..params.n_gyms {
        let floor = g % params.n_floors;
        gym_floors.push(floor);
        locations.push(LocationSpec {
            id: LocationId(g + 1),
            capacity: params.gym_capacity,
            open: full_open(&grid),
            macro_location: MacroId(floor + 1),
        });
    }

    let mut patients = Vec::new();
    let mut sessions = Vec::new();
    let op_ids: Vec<OperatorId> = (1..=params.n_operators as i32).map(OperatorId).collect();
    for i in 0..params.n_patients {
        let pid = PatientId(i + 1);
        let outpatient = rng.gen_bool(params.outpatient_rate);
        let value = if outpatient {
            TypeValue::Outpatient
        } else if rng.gen_bool(0.5) {
            TypeValue::Neurologic
        } else {
            TypeValue::Orthopaedic
        };
        let needs = if rng.gen_bool(params.lifter_rate) { Needs::Lifter } else { Needs::Nolifter };
        let status = if rng.gen_bool(params.payer_rate) { PayStatus::Payer } else { PayStatus::Free };
        let floor = if outpatient {
            gym_floors[i as usize % gym_floors.len()]
        } else {
            let floor = i % params.n_floors;
            locations.push(LocationSpec {
                id: LocationId(1000 + i + 1),
                capacity: 1,
                open: full_open(&grid),
                macro_location: MacroId(floor + 1),
            });
            floor
        };

        let mut periods = vec![rng.gen_range(0..2u32)];
        if rng.gen_bool(params.second_session_rate) {
            periods.push(1 - periods[0]);
        }
        let mut ids = Vec::new();
        let mut daily = 0;
        for (k, &period) in periods.iter().enumerate() {
            let sid = SessionId(sessions.len() as u32 + 1);
            let ideal = params.ideal_length_dist.sample(&mut rng).min(slots[period as usize]);
            let cut = params.min_length_dist.sample(&mut rng);
            let min = ideal.saturating_sub(cut).max(params.min_length_floor).min(ideal);
            let kind = if rng.gen_bool(params.pct_individual) {
                SessionKind::Individual
            } else {
                SessionKind::Supervised
            };
            let optional = k > 0 && rng.gen_bool(params.optional_rate);
            let preference = rng.gen_bool(params.preference_rate).then(|| SessionPreference {
                period,
                start: rng.gen_range(0..=slots[period as usize] - ideal),
                priority: if rng.gen_bool(0.5) { Priority::High } else { Priority::Low },
            });
            if !optional {
                daily += min;
            }
            ids.push(sid);
            sessions.push(SessionSpec {
                id: sid,
                patient: pid,
                kind,
                min_length: min,
                ideal_length: ideal,
                optionality: if optional { Optionality::Optional } else { Optionality::Mandatory },
                macro_location: MacroId(floor + 1),
                forced_time: None,
                preference,
            });
        }

        let mut forbidden = Vec::new();
        if rng.gen_bool(params.forbidden_rate) {
            let period = rng.gen_range(0..2u32);
            let n = slots[period as usize];
            let len = rng.gen_range(2..=6u32).min(n);
            let start = rng.gen_range(0..=n - len);
            forbidden.push(Window::new(period, start, start + len));
        }
        let mut preferred_operators = Vec::new();
        if rng.gen_bool(params.preference_rate) {
            let k = rng.gen_range(1..=2usize).min(op_ids.len());
            for (w, op) in op_ids.choose_multiple(&mut rng, k).enumerate() {
                preferred_operators.push(Preference {
                    operator: *op,
                    weight: w as u32,
                });
            }
        }
        let mut history_preferences = Vec::new();
        if rng.gen_bool(params.history_rate) {
            history_preferences.push(Preference {
                operator: *op_ids.choose(&mut rng).expect("n_operators > 0"),
                weight: rng.gen_range(1..=3),
            });
        }
        patients.push(Patient {
            id: pid,
            ptype: PatientType::new(value, needs, status),
            min_daily_length: daily,
            forbidden,
            preferred_operators,
            history_preferences,
            sessions: ids,
        });
    }

    Ok(Instance {
        grid,
        patients,
        operators,
        locations,
        sessions,
    })
}

fn full_open(grid: &TimeGrid) -> Vec<Window> {
    grid.periods
        .iter()
        .map(|p| Window::new(p.index, 0, grid.slots(p.index).unwrap_or(0)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PresetName {
    Nervi,
    CastelGoffredo,
}

impl FromStr for PresetName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nervi" => Ok(PresetName::Nervi),
            "castel_goffredo" => Ok(PresetName::CastelGoffredo),
            _ => Err(Error::UnknownPreset(s.to_string())),
        }
    }
}

impl fmt::Display for PresetName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PresetName::Nervi => "nervi",
            PresetName::CastelGoffredo => "castel_goffredo",
        })
    }
}

/// Size envelope of one institute plus the remaining generation parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Preset {
    pub name: PresetName,
    pub operators: UniformRange,
    pub patients: UniformRange,
    /// Patients per operator, inclusive bounds.
    pub density: (f64, f64),
    pub base: GenParams,
}

pub fn preset(name: &str) -> Result<Preset> {
    let name: PresetName = name.parse()?;
    let (operators, patients, density, floors, gyms) = match name {
        PresetName::Nervi => ((9, 18), (37, 67), (2.4, 5.2), 1, 1),
        PresetName::CastelGoffredo => ((11, 17), (51, 78), (3.5, 6.4), 2, 3),
    };
    Ok(Preset {
        name,
        operators: UniformRange::new(operators.0, operators.1),
        patients: UniformRange::new(patients.0, patients.1),
        density,
        base: GenParams {
            n_patients: patients.0,
            n_operators: operators.0,
            n_floors: floors,
            n_gyms: gyms,
            ..GenParams::default()
        },
    })
}

impl Preset {
    /// Draws operator and patient counts inside the envelope (density
    /// included) and returns the full parameter set for `seed`.
    pub fn sample(&self, seed: u64) -> GenParams {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_0f_1a57);
        let ops = self.operators.sample(&mut rng);
        let lo = self.patients.lo.max((self.density.0 * ops as f64).ceil() as u32);
        let hi = self.patients.hi.min((self.density.1 * ops as f64).floor() as u32);
        let patients = if lo <= hi { rng.gen_range(lo..=hi) } else { self.patients.lo };
        GenParams {
            n_patients: patients,
            n_operators: ops,
            seed,
            ..self.base.clone()
        }
    }

    /// Base parameters with explicit counts.
    pub fn with_counts(&self, patients: u32, operators: u32, seed: u64) -> GenParams {
        GenParams {
            n_patients: patients,
            n_operators: operators,
            seed,
            ..self.base.clone()
        }
    }
}

/// Random instance within the default oracle limits for board checks:
/// up to 5 patients and 3 operators with tight contracts and limits.
pub fn tiny_board_instance(seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = InstanceBuilder::new(two_period_grid(12));
    let n_ops = rng.gen_range(1..=3);
    let n_pats = rng.gen_range(1..=5u32);
    for o in 1..=n_ops {
        let shifts: Vec<(u32, u32, u32)> = match rng.gen_range(0..3) {
            0 => vec![(0, 0, 12)],
            1 => vec![(1, 0, 12)],
            _ => vec![(0, 0, 12), (1, 0, 12)],
        };
        let op = b.operator(o, &shifts);
        op.total_time = Some(rng.gen_range(4..=24));
        if rng.gen_bool(0.3) {
            op.max_patients = Some(rng.gen_range(1..=3));
        }
        if rng.gen_bool(0.3) {
            op.qualifications.remove(&TypeValue::Orthopaedic);
        }
        if rng.gen_bool(0.2) {
            let t = PatientType::new(TypeValue::Neurologic, Needs::Nolifter, PayStatus::Free);
            op.type_limits.insert(t, rng.gen_range(0..=2));
        }
    }
    for m in 1..=2 {
        b.location(m, 2, m);
    }
    for p in 1..=n_pats {
        let value = if rng.gen_bool(0.5) { TypeValue::Neurologic } else { TypeValue::Orthopaedic };
        let mac = rng.gen_range(1..=2);
        let ideal = rng.gen_range(2..=5);
        let min = rng.gen_range(1..=ideal);
        let n_sessions = rng.gen_range(1..=2);
        b.patient(p, 0);
        let mut daily = 0;
        for _ in 0..n_sessions {
            b.session(p, SessionKind::Individual, min, ideal, mac);
            daily += min;
        }
        let pat = b.patient_mut(p);
        pat.ptype = PatientType::new(value, Needs::Nolifter, PayStatus::Free);
        pat.min_daily_length = daily + rng.gen_range(0..=2);
        let mut ops: Vec<i32> = (1..=n_ops).collect();
        ops.shuffle(&mut rng);
        let k = rng.gen_range(0..=ops.len());
        pat.preferred_operators = ops[..k]
            .iter()
            .enumerate()
            .map(|(w, &o)| Preference {
                operator: OperatorId(o),
                weight: w as u32,
            })
            .collect();
        if rng.gen_bool(0.3) {
            pat.history_preferences = vec![Preference {
                operator: OperatorId(rng.gen_range(1..=n_ops)),
                weight: rng.gen_range(1..=2),
            }];
        }
    }
    b.build()
}

/// Random agenda case within the default oracle limits (at most 3
/// sessions, 12 slots per period) with a board that satisfies every hard
/// board rule. Unless `exceed_ideal` is set, each patient's daily minimum
/// stays within the ideal lengths of their mandatory sessions.
pub fn tiny_agenda_case(seed: u64, exceed_ideal: bool) -> (Instance, BoardSolution) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let slots = rng.gen_range(6..=12);
    let mut b = InstanceBuilder::new(two_period_grid(slots));
    let n_ops = rng.gen_range(1..=2);
    for o in 1..=n_ops {
        let mut shifts = Vec::new();
        for p in 0..2 {
            if rng.gen_bool(0.8) || (p == 1 && shifts.is_empty()) {
                let st = if rng.gen_bool(0.3) { rng.gen_range(0..=2) } else { 0 };
                let end = if rng.gen_bool(0.3) { slots - rng.gen_range(0..=2) } else { slots };
                shifts.push((p, st, end));
            }
        }
        b.operator(o, &shifts).total_time = None;
    }
    let n_macros = rng.gen_range(1..=2);
    let n_locs = rng.gen_range(n_macros..=3);
    for l in 1..=n_locs {
        let mac = if l <= n_macros { l } else { rng.gen_range(1..=n_macros) };
        let cap = [0, 1, 1, 2][rng.gen_range(0..4)];
        b.location(l, cap, mac);
    }
    let n_sessions = rng.gen_range(1..=3u32);
    let n_pats = rng.gen_range(1..=n_sessions);
    let mut board = Vec::new();
    let mut per_patient = vec![0u32; n_pats as usize];
    for s in 0..n_sessions {
        let p = if s < n_pats { s } else { rng.gen_range(0..n_pats) };
        if per_patient[p as usize] == 2 {
            continue;
        }
        per_patient[p as usize] += 1;
        let pid = p + 1;
        if per_patient[p as usize] == 1 {
            b.patient(pid, 0);
            let op = if rng.gen_bool(0.1) { OperatorId::FICTITIOUS } else { OperatorId(rng.gen_range(1..=n_ops)) };
            board.push((PatientId(pid), op));
        }
        let ideal = rng.gen_range(2..=5.min(slots));
        let min = rng.gen_range(ideal.saturating_sub(2).max(1)..=ideal);
        let kind = if rng.gen_bool(0.75) { SessionKind::Individual } else { SessionKind::Supervised };
        let mac = rng.gen_range(1..=n_macros);
        let sess = b.session(pid, kind, min, ideal, mac);
        if rng.gen_bool(0.25) {
            sess.optionality = Optionality::Optional;
        }
        if rng.gen_bool(0.4) {
            sess.preference = Some(SessionPreference {
                period: rng.gen_range(0..2),
                start: rng.gen_range(0..slots),
                priority: if rng.gen_bool(0.5) { Priority::High } else { Priority::Low },
            });
        }
        if rng.gen_bool(0.1) {
            sess.forced_time = Some(SlotRef {
                period: rng.gen_range(0..2),
                slot: rng.gen_range(0..slots),
            });
        }
    }
    let inst = b.instance().clone();
    for pat in &inst.patients {
        let mandatory: Vec<&SessionSpec> = pat
            .sessions
            .iter()
            .filter_map(|s| inst.session(*s))
            .filter(|s| !s.is_optional())
            .collect();
        let min_sum: u32 = mandatory.iter().map(|s| s.min_length).sum();
        let slack: u32 = mandatory.iter().map(|s| s.ideal_length - s.min_length).sum();
        let mut extra = if rng.gen_bool(0.4) { rng.gen_range(0..=3) } else { 0 };
        if !exceed_ideal {
            extra = extra.min(slack);
        }
        let forbidden = rng.gen_bool(0.3).then(|| {
            let period = rng.gen_range(0..2);
            let len = rng.gen_range(1..=3);
            let start = rng.gen_range(0..=slots - len);
            Window::new(period, start, start + len)
        });
        let p = b.patient_mut(pat.id.0);
        p.min_daily_length = min_sum + extra;
        p.forbidden = forbidden.into_iter().collect();
    }
    (b.build(), board.into_iter().collect())
}
