//! Grid sweeps over instance sizes: each cell generates a few instances,
//! solves the board and then the agenda under every requested variant, and
//! reports the modal outcome.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::agenda_solver::{candidate_space_size, solve_agenda, Variant};
use crate::board_solver::solve_board;
use crate::error::{Error, Result};
use crate::generator::{generate, preset};
use crate::model::CostVector;
use crate::solve::{Mode, Outcome, SolveConfig, SolveReport, DEFAULT_CUTOFF};

/// Patients per operator above which board proofs start to time out.
pub const BOARD_TRANSITION_DENSITY: f64 = 2.4;

pub const CHECKPOINT_FILE: &str = "checkpoint.json";
pub const CSV_FILE: &str = "grid.csv";
pub const JSON_FILE: &str = "grid.json";

/// Inclusive integer range walked with a fixed step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepRange {
    pub start: u32,
    pub end: u32,
    #[serde(default = "one")]
    pub step: u32,
}

fn one() -> u32 {
    1
}

impl StepRange {
    pub fn new(start: u32, end: u32, step: u32) -> Self {
        Self { start, end, step }
    }

    pub fn values(&self) -> Vec<u32> {
        (self.start..=self.end).step_by(self.step.max(1) as usize).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub patients: StepRange,
    pub operators: StepRange,
    #[serde(default = "default_reps")]
    pub reps: u32,
    /// Seconds per solve.
    #[serde(default = "default_cutoff")]
    pub cutoff: f64,
    #[serde(default = "default_mode")]
    pub mode: Mode,
    #[serde(default = "default_variants")]
    pub variants: Vec<Variant>,
    #[serde(default)]
    pub seed_base: u64,
    #[serde(default = "default_preset")]
    pub preset: String,
    /// Cells solved in parallel.
    #[serde(default = "one_usize")]
    pub workers: usize,
    /// Effort cap per solve; makes the whole grid reproducible.
    #[serde(default)]
    pub node_limit: Option<u64>,
}

fn default_reps() -> u32 {
    5
}
fn default_cutoff() -> f64 {
    DEFAULT_CUTOFF
}
fn default_mode() -> Mode {
    Mode::Anytime
}
fn default_variants() -> Vec<Variant> {
    Variant::ALL.to_vec()
}
fn default_preset() -> String {
    "nervi".into()
}
fn one_usize() -> usize {
    1
}

impl GridSpec {
    pub fn new(patients: StepRange, operators: StepRange) -> Self {
        Self {
            patients,
            operators,
            reps: default_reps(),
            cutoff: default_cutoff(),
            mode: default_mode(),
            variants: default_variants(),
            seed_base: 0,
            preset: default_preset(),
            workers: 1,
            node_limit: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        if self.reps == 0 {
            bad.push("reps must be at least 1".to_string());
        }
        for (name, r) in [("patients", self.patients), ("operators", self.operators)] {
            if r.start > r.end || r.step == 0 {
                bad.push(format!("{name} range {}..={} step {} is empty", r.start, r.end, r.step));
            }
        }
        if self.operators.start == 0 {
            bad.push("operator counts must be positive".into());
        }
        if self.variants.is_empty() {
            bad.push("at least one variant is required".into());
        }
        if self.workers == 0 {
            bad.push("workers must be at least 1".into());
        }
        if let Err(e) = self.solve_config(0).validate() {
            bad.push(e);
        }
        if bad.is_empty() {
            preset(&self.preset).map(|_| ())
        } else {
            Err(Error::InvalidParams(bad.join("; ")))
        }
    }

    fn solve_config(&self, seed: u64) -> SolveConfig {
        SolveConfig {
            mode: self.mode,
            cutoff: self.cutoff,
            seed,
            emit_improvements: false,
            node_limit: self.node_limit,
        }
    }

    fn cells(&self) -> Vec<(u32, u32)> {
        let mut out = Vec::new();
        for o in self.operators.values() {
            for p in self.patients.values() {
                out.push((p, o));
            }
        }
        out
    }
}

/// Seed of one replicate in one cell.
pub fn instance_seed(seed_base: u64, patients: u32, operators: u32, rep: u32) -> u64 {
    seed_base ^ ((patients as u64) << 32) ^ ((operators as u64) << 16) ^ rep as u64
}

/// One solve, reduced to what the tables need.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub outcome: Outcome,
    pub cost: Option<CostVector>,
    pub wall_time: f64,
    pub last_improvement: Option<f64>,
}

impl<S> From<&SolveReport<S>> for RunResult {
    fn from(r: &SolveReport<S>) -> Self {
        Self {
            outcome: r.outcome,
            cost: r.cost.clone(),
            wall_time: r.wall_time,
            last_improvement: r.last_improvement(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantRun {
    pub variant: Variant,
    pub result: RunResult,
    pub candidate_space: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Replicate {
    pub rep: u32,
    pub seed: u64,
    pub board: RunResult,
    pub agenda: Vec<VariantRun>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellStats {
    pub outcomes: Vec<Outcome>,
    pub mode_outcome: Outcome,
    pub mean_wall_time: f64,
    pub mean_last_improvement: Option<f64>,
}

impl CellStats {
    fn of<'r>(results: impl Iterator<Item = &'r RunResult>) -> Self {
        let results: Vec<&RunResult> = results.collect();
        let outcomes: Vec<Outcome> = results.iter().map(|r| r.outcome).collect();
        let n = results.len().max(1) as f64;
        Self {
            mode_outcome: modal_outcome(&outcomes),
            mean_wall_time: results.iter().map(|r| r.wall_time).sum::<f64>() / n,
            mean_last_improvement: mean(results.iter().filter_map(|r| r.last_improvement)),
            outcomes,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub n_patients: u32,
    pub n_operators: u32,
    pub density: f64,
    /// Whether the density is at or past the board transition line.
    pub past_board_transition: bool,
    pub board: CellStats,
    pub agenda: BTreeMap<String, CellStats>,
    /// Mean of optimized over basic candidate-space size.
    pub candidate_space_ratio: Option<f64>,
    pub replicates: Vec<Replicate>,
}

/// Most frequent outcome; ties go to the worse one.
pub fn modal_outcome(outcomes: &[Outcome]) -> Outcome {
    let mut counts = [0usize; 4];
    for o in outcomes {
        counts[o.severity() as usize] += 1;
    }
    Outcome::ALL
        .into_iter()
        .max_by_key(|o| (counts[o.severity() as usize], o.severity()))
        .expect("non-empty")
}

/// Largest patient count with an optimal modal outcome, per operator count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Frontier {
    pub variant: Variant,
    pub rows: Vec<FrontierRow>,
    /// Mean over rows, counting a row with no optimal cell as zero.
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontierRow {
    pub n_operators: u32,
    pub last_optimal_patients: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeTable {
    pub runs: usize,
    pub pct_optimum: f64,
    pub pct_satisfiable: f64,
    pub pct_unknown: f64,
    pub pct_unsatisfiable: f64,
    /// Mean wall time of runs that proved optimality.
    pub mean_time_to_optimum: Option<f64>,
    /// Mean time of the last improvement over runs left satisfiable.
    pub mean_last_improvement: Option<f64>,
}

pub fn summarize(results: &[RunResult]) -> Result<OutcomeTable> {
    if results.is_empty() {
        return Err(Error::InvalidParams("no results to summarize".into()));
    }
    let n = results.len() as f64;
    let pct = |o: Outcome| 100.0 * results.iter().filter(|r| r.outcome == o).count() as f64 / n;
    Ok(OutcomeTable {
        runs: results.len(),
        pct_optimum: pct(Outcome::OptimumFound),
        pct_satisfiable: pct(Outcome::Satisfiable),
        pct_unknown: pct(Outcome::Unknown),
        pct_unsatisfiable: pct(Outcome::Unsatisfiable),
        mean_time_to_optimum: mean(
            results.iter().filter(|r| r.outcome == Outcome::OptimumFound).map(|r| r.wall_time),
        ),
        mean_last_improvement: mean(
            results
                .iter()
                .filter(|r| r.outcome == Outcome::Satisfiable)
                .filter_map(|r| r.last_improvement),
        ),
    })
}

fn mean(xs: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| sum / n as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridReport {
    pub spec: GridSpec,
    pub cells: Vec<GridCell>,
    pub board_summary: OutcomeTable,
    pub agenda_summary: BTreeMap<String, OutcomeTable>,
    pub frontiers: Vec<Frontier>,
}

impl GridReport {
    pub fn frontier(&self, variant: Variant) -> Option<&Frontier> {
        self.frontiers.iter().find(|f| f.variant == variant)
    }
}

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    spec: GridSpec,
    cells: Vec<GridCell>,
}

/// Runs every cell of the grid. With `out_dir`, finished cells are
/// checkpointed there as they complete, a previous checkpoint for the same
/// spec is resumed, and the CSV and JSON reports are written at the end.
pub fn run_grid(spec: &GridSpec, out_dir: Option<&Path>) -> Result<GridReport> {
    spec.validate()?;
    let mut done: Vec<GridCell> = Vec::new();
    if let Some(dir) = out_dir {
        fs::create_dir_all(dir)?;
        let path = dir.join(CHECKPOINT_FILE);
        if path.exists() {
            let cp: Checkpoint = serde_json::from_slice(&fs::read(&path)?)?;
            if cp.spec != *spec {
                return Err(Error::InvalidParams(format!(
                    "{} was written for a different grid spec",
                    path.display()
                )));
            }
            done = cp.cells;
        }
    }
    let todo: Vec<(u32, u32)> = spec
        .cells()
        .into_iter()
        .filter(|&(p, o)| !done.iter().any(|c| c.n_patients == p && c.n_operators == o))
        .collect();

    let shared = Mutex::new(done);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.workers)
        .build()
        .map_err(|e| Error::InvalidParams(e.to_string()))?;
    pool.install(|| {
        todo.par_iter().try_for_each(|&(p, o)| -> Result<()> {
            let cell = run_cell(spec, p, o)?;
            let mut cells = shared.lock().expect("no poisoned lock");
            cells.push(cell);
            if let Some(dir) = out_dir {
                write_atomic(
                    &dir.join(CHECKPOINT_FILE),
                    &serde_json::to_vec(&Checkpoint {
                        spec: spec.clone(),
                        cells: cells.clone(),
                    })?,
                )?;
            }
            Ok(())
        })
    })?;
    let mut cells = shared.into_inner().expect("no poisoned lock");
    cells.sort_by_key(|c| (c.n_operators, c.n_patients));

    let report = build_report(spec, cells)?;
    if let Some(dir) = out_dir {
        write_atomic(&dir.join(JSON_FILE), &serde_json::to_vec_pretty(&report)?)?;
        write_atomic(&dir.join(CSV_FILE), &to_csv(&report)?)?;
    }
    Ok(report)
}

fn run_cell(spec: &GridSpec, patients: u32, operators: u32) -> Result<GridCell> {
    let pre = preset(&spec.preset)?;
    let mut replicates = Vec::new();
    for rep in 0..spec.reps {
        let seed = instance_seed(spec.seed_base, patients, operators, rep);
        let inst = generate(&pre.with_counts(patients, operators, seed))?;
        let cfg = spec.solve_config(seed);
        let board_report = solve_board(&inst, &cfg)?;
        let mut agenda = Vec::new();
        for &variant in &spec.variants {
            let (result, candidate_space) = match &board_report.best {
                Some(board) => (
                    RunResult::from(&solve_agenda(&inst, board, &cfg, variant)?),
                    candidate_space_size(&inst, board, variant)?,
                ),
                None => (
                    RunResult {
                        outcome: Outcome::Unknown,
                        cost: None,
                        wall_time: 0.0,
                        last_improvement: None,
                    },
                    0,
                ),
            };
            agenda.push(VariantRun {
                variant,
                result,
                candidate_space,
            });
        }
        replicates.push(Replicate {
            rep,
            seed,
            board: RunResult::from(&board_report),
            agenda,
        });
    }
    log::info!("cell patients={patients} operators={operators} done");

    let density = patients as f64 / operators as f64;
    let agenda = spec
        .variants
        .iter()
        .map(|&v| {
            let runs = replicates
                .iter()
                .flat_map(|r| r.agenda.iter().filter(move |a| a.variant == v).map(|a| &a.result));
            (v.to_string(), CellStats::of(runs))
        })
        .collect();
    let ratios = replicates.iter().filter_map(|r| {
        let size = |v| r.agenda.iter().find(|a| a.variant == v).map(|a| a.candidate_space);
        match (size(Variant::Optimized), size(Variant::Basic)) {
            (Some(opt), Some(basic)) if basic > 0 => Some(opt as f64 / basic as f64),
            _ => None,
        }
    });
    Ok(GridCell {
        n_patients: patients,
        n_operators: operators,
        density,
        past_board_transition: density >= BOARD_TRANSITION_DENSITY,
        board: CellStats::of(replicates.iter().map(|r| &r.board)),
        agenda,
        candidate_space_ratio: mean(ratios),
        replicates,
    })
}

fn build_report(spec: &GridSpec, cells: Vec<GridCell>) -> Result<GridReport> {
    let board_runs: Vec<RunResult> = cells
        .iter()
        .flat_map(|c| c.replicates.iter().map(|r| r.board.clone()))
        .collect();
    let mut agenda_summary = BTreeMap::new();
    let mut frontiers = Vec::new();
    for &v in &spec.variants {
        let runs: Vec<RunResult> = cells
            .iter()
            .flat_map(|c| c.replicates.iter())
            .flat_map(|r| r.agenda.iter().filter(|a| a.variant == v).map(|a| a.result.clone()))
            .collect();
        agenda_summary.insert(v.to_string(), summarize(&runs)?);
        frontiers.push(frontier(spec, &cells, v));
    }
    Ok(GridReport {
        spec: spec.clone(),
        board_summary: summarize(&board_runs)?,
        agenda_summary,
        frontiers,
        cells,
    })
}

fn frontier(spec: &GridSpec, cells: &[GridCell], variant: Variant) -> Frontier {
    let key = variant.to_string();
    let rows: Vec<FrontierRow> = spec
        .operators
        .values()
        .into_iter()
        .map(|o| FrontierRow {
            n_operators: o,
            last_optimal_patients: cells
                .iter()
                .filter(|c| c.n_operators == o)
                .filter(|c| c.agenda.get(&key).is_some_and(|s| s.mode_outcome == Outcome::OptimumFound))
                .map(|c| c.n_patients)
                .max(),
        })
        .collect();
    let mean = rows.iter().map(|r| r.last_optimal_patients.unwrap_or(0) as f64).sum::<f64>()
        / rows.len().max(1) as f64;
    Frontier { variant, rows, mean }
}

/// Columns ending in `_time` are the only ones that vary between identical runs.
fn to_csv(report: &GridReport) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec![
        "patients".to_string(),
        "operators".into(),
        "density".into(),
        "past_board_transition".into(),
        "board_mode".into(),
        "board_outcomes".into(),
        "board_mean_time".into(),
    ];
    for v in &report.spec.variants {
        header.push(format!("{v}_mode"));
        header.push(format!("{v}_outcomes"));
        header.push(format!("{v}_mean_time"));
        header.push(format!("{v}_mean_last_improvement_time"));
    }
    header.push("candidate_space_ratio".into());
    w.write_record(&header).map_err(csv_err)?;
    for c in &report.cells {
        let mut row = vec![
            c.n_patients.to_string(),
            c.n_operators.to_string(),
            format!("{:.3}", c.density),
            c.past_board_transition.to_string(),
            c.board.mode_outcome.to_string(),
            joined(&c.board.outcomes),
            format!("{:.3}", c.board.mean_wall_time),
        ];
        for v in &report.spec.variants {
            let s = &c.agenda[&v.to_string()];
            row.push(s.mode_outcome.to_string());
            row.push(joined(&s.outcomes));
            row.push(format!("{:.3}", s.mean_wall_time));
            row.push(s.mean_last_improvement.map(|t| format!("{t:.3}")).unwrap_or_default());
        }
        row.push(c.candidate_space_ratio.map(|r| format!("{r:.4}")).unwrap_or_default());
        w.write_record(&row).map_err(csv_err)?;
    }
    w.into_inner().map_err(|e| Error::InvalidParams(e.to_string()))
}

fn joined(outcomes: &[Outcome]) -> String {
    outcomes.iter().map(|o| o.to_string()).collect::<Vec<_>>().join(" ")
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp = PathBuf::from(path);
    tmp.set_extension("tmp");
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}
