use rehab_core::bench::{run_grid, GridSpec, StepRange, CHECKPOINT_FILE, CSV_FILE, JSON_FILE};
use rehab_core::{Mode, Outcome, Variant};

fn tiny_spec() -> GridSpec {
    GridSpec {
        reps: 2,
        cutoff: 10.0,
        node_limit: Some(200_000),
        ..GridSpec::new(StepRange::new(3, 4, 1), StepRange::new(2, 2, 1))
    }
}

#[test]
fn trivial_cell_is_solved_to_optimality() {
    let spec = GridSpec {
        reps: 1,
        mode: Mode::Exact,
        ..GridSpec::new(StepRange::new(2, 2, 1), StepRange::new(1, 1, 1))
    };
    let report = run_grid(&spec, None).unwrap();
    assert_eq!(report.cells.len(), 1);
    let cell = &report.cells[0];
    assert_eq!(cell.board.mode_outcome, Outcome::OptimumFound);
    for v in Variant::ALL {
        assert_eq!(cell.agenda[&v.to_string()].mode_outcome, Outcome::OptimumFound);
    }
    assert!(!cell.past_board_transition);
}

#[test]
fn outputs_are_written_and_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let spec = tiny_spec();
    let ra = run_grid(&spec, Some(a.path())).unwrap();
    run_grid(&spec, Some(b.path())).unwrap();
    for f in [CSV_FILE, JSON_FILE, CHECKPOINT_FILE] {
        assert!(a.path().join(f).exists(), "{f} missing");
    }
    let strip = |dir: &std::path::Path| -> Vec<String> {
        let text = std::fs::read_to_string(dir.join(CSV_FILE)).unwrap();
        let mut rows = text.lines().map(|l| l.split(',').map(str::to_string).collect::<Vec<_>>());
        let header = rows.next().unwrap();
        let keep: Vec<usize> = (0..header.len()).filter(|&i| !header[i].ends_with("_time")).collect();
        text.lines()
            .map(|l| {
                let cols: Vec<&str> = l.split(',').collect();
                keep.iter().map(|&i| cols[i]).collect::<Vec<_>>().join(",")
            })
            .collect()
    };
    assert_eq!(strip(a.path()), strip(b.path()));
    assert_eq!(strip(a.path()).len(), 1 + ra.cells.len());
    assert!(ra.cells.iter().all(|c| c.candidate_space_ratio.is_some_and(|r| r <= 1.0)));
}

#[test]
fn resumes_from_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let spec = tiny_spec();
    let first = run_grid(&spec, Some(dir.path())).unwrap();
    // A resumed run reuses every finished cell, timing included.
    let again = run_grid(&spec, Some(dir.path())).unwrap();
    assert_eq!(first, again);

    let other = GridSpec { seed_base: 99, ..spec };
    assert!(run_grid(&other, Some(dir.path())).is_err());
}
