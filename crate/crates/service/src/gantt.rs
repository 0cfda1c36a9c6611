//! Per-operator timeline view of an agenda.

use std::collections::BTreeMap;

use rehab_core::feas::session_operator;
use rehab_core::model::{LocationId, OperatorId, PatientId, SessionId, SessionKind};
use rehab_core::{AgendaSolution, BoardSolution, Instance, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentKind {
    Individual,
    Supervised,
}

/// Half-open slot range `[start, end)` within a period.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub kind: SegmentKind,
    pub start: u32,
    pub end: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub session: SessionId,
    pub patient: PatientId,
    pub location: LocationId,
    pub period: u32,
    pub segments: Vec<Segment>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OperatorLane {
    pub operator: OperatorId,
    pub blocks: Vec<Block>,
}

/// Blocks grouped by operator, ordered by period and extended start. The
/// segments of a block exactly cover its extended interval: supervised
/// extensions on either side of the core, which is individual for
/// one-on-one sessions and supervised otherwise.
pub fn project(inst: &Instance, board: &BoardSolution, agenda: &AgendaSolution) -> Result<Vec<OperatorLane>> {
    let mut lanes: BTreeMap<OperatorId, Vec<Block>> = BTreeMap::new();
    for p in agenda.placements.values() {
        let Some(spec) = inst.session(p.session) else { continue };
        let Some(op) = session_operator(inst, board, spec)? else { continue };
        let core = match spec.kind {
            SessionKind::Individual => SegmentKind::Individual,
            SessionKind::Supervised => SegmentKind::Supervised,
        };
        let ext_start = p.start.saturating_sub(p.before);
        let segments = [
            (SegmentKind::Supervised, ext_start, p.start),
            (core, p.start, p.start + p.length),
            (SegmentKind::Supervised, p.start + p.length, p.start + p.length + p.after),
        ]
        .into_iter()
        .filter(|(_, s, e)| s < e)
        .map(|(kind, start, end)| Segment { kind, start, end })
        .collect();
        lanes.entry(op).or_default().push(Block {
            session: p.session,
            patient: spec.patient,
            location: p.location,
            period: p.period,
            segments,
        });
    }
    Ok(lanes
        .into_iter()
        .map(|(operator, mut blocks)| {
            blocks.sort_by_key(|b| (b.period, b.segments.first().map(|s| s.start), b.session));
            OperatorLane { operator, blocks }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rehab_core::builder::{single_period_grid, InstanceBuilder};
    use rehab_core::SessionPlacement;

    #[test]
    fn segments_cover_extended_interval() {
        let mut b = InstanceBuilder::new(single_period_grid(24));
        b.operator(1, &[(0, 0, 24)]);
        b.location(1, 2, 1);
        b.patient(1, 6);
        b.session(1, SessionKind::Individual, 3, 4, 1);
        b.patient(2, 2);
        b.session(2, SessionKind::Supervised, 2, 2, 1);
        let inst = b.build();
        let board: BoardSolution = [(PatientId(1), OperatorId(1)), (PatientId(2), OperatorId(1))]
            .into_iter()
            .collect();
        let agenda: AgendaSolution = [
            SessionPlacement {
                session: SessionId(1),
                period: 0,
                start: 6,
                length: 4,
                before: 1,
                after: 1,
                location: LocationId(1),
            },
            SessionPlacement {
                session: SessionId(2),
                period: 0,
                start: 2,
                length: 2,
                before: 0,
                after: 0,
                location: LocationId(1),
            },
        ]
        .into_iter()
        .collect();
        let lanes = project(&inst, &board, &agenda).unwrap();
        assert_eq!(lanes.len(), 1);
        let blocks = &lanes[0].blocks;
        assert_eq!(blocks[0].session, SessionId(2));
        assert_eq!(
            blocks[0].segments,
            vec![Segment { kind: SegmentKind::Supervised, start: 2, end: 4 }]
        );
        assert_eq!(
            blocks[1].segments,
            vec![
                Segment { kind: SegmentKind::Supervised, start: 5, end: 6 },
                Segment { kind: SegmentKind::Individual, start: 6, end: 10 },
                Segment { kind: SegmentKind::Supervised, start: 10, end: 11 },
            ]
        );
    }
}
