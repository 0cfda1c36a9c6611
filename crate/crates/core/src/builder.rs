//! Programmatic construction of small instances (tests, generator, examples).

use std::collections::{BTreeMap, BTreeSet};

use crate::model::{
    Instance, LocationId, LocationSpec, MacroId, Needs, Operator, OperatorId, Optionality,
    Patient, PatientId, PatientType, PayStatus, SessionId, SessionKind, SessionSpec, TimeGrid,
    TypeValue, Window,
};

pub struct InstanceBuilder {
    inst: Instance,
    next_session: u32,
}

impl Default for InstanceBuilder {
    fn default() -> Self {
        Self::new(TimeGrid::default())
    }
}

impl InstanceBuilder {
    /// Starts an instance holding only the fictitious operator.
    pub fn new(grid: TimeGrid) -> Self {
        Self {
            inst: Instance {
                grid,
                patients: Vec::new(),
                operators: vec![Operator::fictitious()],
                locations: Vec::new(),
                sessions: Vec::new(),
            },
            next_session: 1,
        }
    }

    /// Adds a real operator qualified for every type, with the given
    /// `(period, start, end)` shifts and contract time equal to their length.
    pub fn operator(&mut self, id: i32, shifts: &[(u32, u32, u32)]) -> &mut Operator {
        let shifts: Vec<Window> = shifts.iter().map(|&(p, s, e)| Window::new(p, s, e)).collect();
        self.inst.operators.push(Operator {
            id: OperatorId(id),
            total_time: Some(shifts.iter().map(Window::len).sum()),
            max_patients: None,
            type_limits: BTreeMap::new(),
            shifts,
            qualifications: TypeValue::ALL.into_iter().collect::<BTreeSet<_>>(),
        });
        self.inst.operators.last_mut().unwrap()
    }

    /// Adds a location open for the whole of every period.
    pub fn location(&mut self, id: u32, capacity: i32, macro_location: u32) -> &mut LocationSpec {
        let open = self
            .inst
            .grid
            .periods
            .iter()
            .map(|p| Window::new(p.index, 0, self.inst.grid.slots(p.index).unwrap_or(0)))
            .collect();
        self.inst.locations.push(LocationSpec {
            id: LocationId(id),
            capacity,
            open,
            macro_location: MacroId(macro_location),
        });
        self.inst.locations.last_mut().unwrap()
    }

    pub fn patient(&mut self, id: u32, min_daily_length: u32) -> &mut Patient {
        self.inst.patients.push(Patient {
            id: PatientId(id),
            ptype: PatientType::new(TypeValue::Neurologic, Needs::Nolifter, PayStatus::Free),
            min_daily_length,
            forbidden: Vec::new(),
            preferred_operators: Vec::new(),
            history_preferences: Vec::new(),
            sessions: Vec::new(),
        });
        self.inst.patients.last_mut().unwrap()
    }

    /// Adds a mandatory session for an existing patient and returns it for tweaking.
    pub fn session(
        &mut self,
        patient: u32,
        kind: SessionKind,
        min_length: u32,
        ideal_length: u32,
        macro_location: u32,
    ) -> &mut SessionSpec {
        let id = SessionId(self.next_session);
        self.next_session += 1;
        let p = self
            .inst
            .patients
            .iter_mut()
            .find(|p| p.id == PatientId(patient))
            .expect("session for an unknown patient");
        p.sessions.push(id);
        self.inst.sessions.push(SessionSpec {
            id,
            patient: PatientId(patient),
            kind,
            min_length,
            ideal_length,
            optionality: Optionality::Mandatory,
            macro_location: MacroId(macro_location),
            forced_time: None,
            preference: None,
        });
        self.inst.sessions.last_mut().unwrap()
    }

    pub fn patient_mut(&mut self, id: u32) -> &mut Patient {
        self.inst
            .patients
            .iter_mut()
            .find(|p| p.id == PatientId(id))
            .expect("unknown patient")
    }

    pub fn operator_mut(&mut self, id: i32) -> &mut Operator {
        self.inst
            .operators
            .iter_mut()
            .find(|o| o.id == OperatorId(id))
            .expect("unknown operator")
    }

    pub fn session_mut(&mut self, id: u32) -> &mut SessionSpec {
        self.inst
            .sessions
            .iter_mut()
            .find(|s| s.id == SessionId(id))
            .expect("unknown session")
    }

    pub fn instance(&self) -> &Instance {
        &self.inst
    }

    pub fn build(self) -> Instance {
        self.inst
    }
}

/// A grid with a single period of `slots` slots starting at 08:00.
pub fn single_period_grid(slots: u32) -> TimeGrid {
    use crate::model::{PeriodSpec, WallClock};
    TimeGrid {
        slot_minutes: 10,
        periods: vec![PeriodSpec {
            index: 0,
            start: WallClock::new(8, 0).unwrap(),
            end: WallClock::from_minutes(8 * 60 + slots * 10).unwrap(),
        }],
    }
}

/// Two periods of `slots` slots each (08:00 and 14:00).
pub fn two_period_grid(slots: u32) -> TimeGrid {
    use crate::model::{PeriodSpec, WallClock};
    TimeGrid {
        slot_minutes: 10,
        periods: vec![
            PeriodSpec {
                index: 0,
                start: WallClock::new(8, 0).unwrap(),
                end: WallClock::from_minutes(8 * 60 + slots * 10).unwrap(),
            },
            PeriodSpec {
                index: 1,
                start: WallClock::new(14, 0).unwrap(),
                end: WallClock::from_minutes(14 * 60 + slots * 10).unwrap(),
            },
        ],
    }
}
