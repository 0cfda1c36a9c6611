use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::feas::{session_operator, BoardSolution};
use crate::model::{Instance, SessionId, SessionSpec, Window};

use super::Variant;

/// Start-time and extension restrictions derived from shifts, forbidden
/// windows and forced times, for every session taking part in the agenda.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PruneTables {
    /// `(period, slot)` pairs a session may start at.
    pub allowed_starts: BTreeMap<SessionId, BTreeSet<(u32, u32)>>,
    /// Maximum supervised extension on either side.
    pub extension_bound: BTreeMap<SessionId, u32>,
    /// `(period, first blocked start, end)`: starts in `[first, end)` would
    /// run the individual part into a forbidden window.
    pub forbidden_start_ranges: BTreeMap<SessionId, Vec<(u32, u32, u32)>>,
}

pub fn compute_prune_tables(inst: &Instance, board: &BoardSolution) -> Result<PruneTables> {
    let mut t = PruneTables::default();
    for spec in &inst.sessions {
        let Some(op) = session_operator(inst, board, spec)? else { continue };
        let operator = inst.operator(op).expect("resolved by session_operator");
        let patient = inst.patient(spec.patient).expect("validated instance");
        let ranges = forbidden_start_ranges(spec, &patient.forbidden);
        let starts = operator
            .shifts
            .iter()
            .flat_map(|sh| allowed_times(spec, sh, &ranges))
            .filter(|&(p, s)| spec.forced_time.is_none_or(|f| f.period == p && f.slot == s))
            .collect();
        t.allowed_starts.insert(spec.id, starts);
        t.extension_bound.insert(spec.id, spec.ideal_length - spec.min_length);
        t.forbidden_start_ranges.insert(spec.id, ranges);
    }
    Ok(t)
}

pub(crate) fn forbidden_start_ranges(spec: &SessionSpec, forbidden: &[Window]) -> Vec<(u32, u32, u32)> {
    forbidden
        .iter()
        .filter(|w| !w.is_empty())
        .map(|w| {
            let first = (w.start + 1).saturating_sub(spec.min_length);
            (w.period, first, w.end)
        })
        .collect()
}

/// Shift slots leaving room for the minimum length and clear of forbidden
/// ranges; forced times are not applied here.
pub(crate) fn allowed_times<'a>(
    spec: &'a SessionSpec,
    shift: &'a Window,
    ranges: &'a [(u32, u32, u32)],
) -> impl Iterator<Item = (u32, u32)> + 'a {
    (shift.start..shift.end)
        .filter(move |&t| t + spec.min_length <= shift.end)
        .filter(move |&t| {
            !ranges
                .iter()
                .any(|&(p, a, b)| p == shift.period && a <= t && t < b)
        })
        .map(move |t| (shift.period, t))
}

/// Number of `(LB, LA)` pairs with `LB + LA <= bound`.
fn extension_choices(bound: u32) -> u64 {
    let b = bound as u64;
    (b + 1) * (b + 2) / 2
}

/// Size of the start × extension candidate space each variant searches.
pub fn candidate_space_size(inst: &Instance, board: &BoardSolution, variant: Variant) -> Result<u64> {
    let tables = compute_prune_tables(inst, board)?;
    let mut total = 0u64;
    for spec in &inst.sessions {
        let Some(op) = session_operator(inst, board, spec)? else { continue };
        let starts = match variant {
            Variant::Optimized => tables.allowed_starts[&spec.id].len() as u64,
            Variant::Basic => inst
                .operator(op)
                .expect("resolved")
                .shifts
                .iter()
                .map(|s| s.len() as u64)
                .sum(),
        };
        total += starts * extension_choices(tables.extension_bound[&spec.id]);
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builder::{single_period_grid, InstanceBuilder};
    use crate::model::{OperatorId, PatientId, SessionKind, SlotRef};

    fn one_session(min: u32, ideal: u32) -> (InstanceBuilder, BoardSolution) {
        let mut b = InstanceBuilder::new(single_period_grid(24));
        b.operator(1, &[(0, 0, 24)]);
        b.location(1, 1, 1);
        b.patient(1, min);
        b.session(1, SessionKind::Individual, min, ideal, 1);
        let board = [(PatientId(1), OperatorId(1))].into_iter().collect();
        (b, board)
    }

    #[test]
    fn starts_stop_short_of_shift_end() {
        let (b, board) = one_session(4, 4);
        let t = compute_prune_tables(&b.build(), &board).unwrap();
        let starts: Vec<u32> = t.allowed_starts[&SessionId(1)].iter().map(|s| s.1).collect();
        assert_eq!(starts, (0..=20).collect::<Vec<_>>());
        assert_eq!(t.extension_bound[&SessionId(1)], 0);
    }

    #[test]
    fn forbidden_window_blocks_earlier_starts() {
        let (mut b, board) = one_session(3, 5);
        b.patient_mut(1).forbidden = vec![Window::new(0, 10, 14)];
        let t = compute_prune_tables(&b.build(), &board).unwrap();
        let starts = &t.allowed_starts[&SessionId(1)];
        for s in 8..14 {
            assert!(!starts.contains(&(0, s)), "start {s} should be blocked");
        }
        assert!(starts.contains(&(0, 7)) && starts.contains(&(0, 14)));
        assert_eq!(t.forbidden_start_ranges[&SessionId(1)], vec![(0, 8, 14)]);
        assert_eq!(t.extension_bound[&SessionId(1)], 2);
    }

    #[test]
    fn candidate_space_boundary_arithmetic() {
        let (mut b, board) = one_session(4, 4);
        let inst = b.instance().clone();
        assert_eq!(candidate_space_size(&inst, &board, Variant::Basic).unwrap(), 24);
        assert_eq!(candidate_space_size(&inst, &board, Variant::Optimized).unwrap(), 21);

        b.session_mut(1).forced_time = Some(SlotRef { period: 0, slot: 5 });
        let inst = b.build();
        let t = compute_prune_tables(&inst, &board).unwrap();
        assert_eq!(t.allowed_starts[&SessionId(1)].len(), 1);
        assert_eq!(candidate_space_size(&inst, &board, Variant::Optimized).unwrap(), 1);
    }

    #[test]
    fn fictitious_patients_have_no_tables() {
        let (b, _) = one_session(4, 4);
        let board = [(PatientId(1), OperatorId::FICTITIOUS)].into_iter().collect();
        let t = compute_prune_tables(&b.build(), &board).unwrap();
        assert!(t.allowed_starts.is_empty());
    }
}
