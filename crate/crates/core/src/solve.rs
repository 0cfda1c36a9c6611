//! Configuration, reports and budget control shared by both solvers.

use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::model::CostVector;

/// Experiment cutoff in seconds.
pub const DEFAULT_CUTOFF: f64 = 30.0;
/// Cutoff used in daily production runs.
pub const PRODUCTION_CUTOFF: f64 = 300.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Exact,
    Anytime,
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "exact" => Ok(Mode::Exact),
            "anytime" => Ok(Mode::Anytime),
            _ => Err(format!("unknown mode `{s}` (expected exact|anytime)")),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Exact => "exact",
            Mode::Anytime => "anytime",
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveConfig {
    pub mode: Mode,
    /// Wall-clock budget in seconds.
    pub cutoff: f64,
    pub seed: u64,
    /// Log every improving solution as it is found.
    #[serde(default)]
    pub emit_improvements: bool,
    /// Optional cap on search effort (nodes / moves). When set, runs that
    /// stop on this cap rather than the clock are reproducible bit for bit.
    #[serde(default)]
    pub node_limit: Option<u64>,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Exact,
            cutoff: DEFAULT_CUTOFF,
            seed: 0,
            emit_improvements: false,
            node_limit: None,
        }
    }
}

impl SolveConfig {
    pub fn exact(cutoff: f64) -> Self {
        Self {
            mode: Mode::Exact,
            cutoff,
            ..Self::default()
        }
    }

    pub fn anytime(cutoff: f64, seed: u64) -> Self {
        Self {
            mode: Mode::Anytime,
            cutoff,
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.cutoff > 0.0) || !self.cutoff.is_finite() {
            return Err(format!("cutoff must be a positive number of seconds, got {}", self.cutoff));
        }
        Ok(())
    }
}

/// Result classification of a solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Outcome {
    OptimumFound,
    Satisfiable,
    Unknown,
    Unsatisfiable,
}

impl Outcome {
    pub const ALL: [Outcome; 4] = [
        Outcome::OptimumFound,
        Outcome::Satisfiable,
        Outcome::Unknown,
        Outcome::Unsatisfiable,
    ];

    /// Rank used to break ties toward the worse outcome.
    pub fn severity(self) -> u8 {
        match self {
            Outcome::OptimumFound => 0,
            Outcome::Satisfiable => 1,
            Outcome::Unknown => 2,
            Outcome::Unsatisfiable => 3,
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    /// Seconds since the solve started.
    pub time: f64,
    pub cost: CostVector,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveReport<S> {
    pub outcome: Outcome,
    pub best: Option<S>,
    pub cost: Option<CostVector>,
    pub wall_time: f64,
    pub trace: Vec<TracePoint>,
    /// Search nodes (exact) plus local-search moves evaluated.
    pub nodes: u64,
}

impl<S> SolveReport<S> {
    /// Time of the last improving solution, if any.
    pub fn last_improvement(&self) -> Option<f64> {
        self.trace.last().map(|t| t.time)
    }
}

pub type ProgressFn = dyn Fn(f64, &CostVector) + Send + Sync;

/// Out-of-band control of a running solve.
#[derive(Clone, Default)]
pub struct SolveHooks {
    /// Set to `true` to stop the solve at its next budget check.
    pub cancel: Option<Arc<AtomicBool>>,
    /// Called with every improving cost.
    pub on_improvement: Option<Arc<ProgressFn>>,
}

impl fmt::Debug for SolveHooks {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SolveHooks")
            .field("cancel", &self.cancel)
            .field("on_improvement", &self.on_improvement.is_some())
            .finish()
    }
}

/// Why a search stopped early.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Stop {
    Deadline,
    Cancelled,
    NodeLimit,
}

/// Deadline, cancellation and effort accounting. The clock is read every
/// `CLOCK_EVERY` ticks, which keeps checks well under 10 ms apart.
pub(crate) struct Budget {
    start: Instant,
    deadline: Instant,
    cancel: Option<Arc<AtomicBool>>,
    node_limit: Option<u64>,
    pub nodes: u64,
    stopped: Option<Stop>,
    /// Soft node limit for a sub-search; reaching it does not stop the solve.
    cap: Option<u64>,
}

const CLOCK_EVERY: u64 = 64;

impl Budget {
    pub fn new(cfg: &SolveConfig, hooks: &SolveHooks) -> Self {
        let start = Instant::now();
        Self {
            start,
            deadline: start + Duration::from_secs_f64(cfg.cutoff),
            cancel: hooks.cancel.clone(),
            node_limit: cfg.node_limit,
            nodes: 0,
            stopped: None,
            cap: None,
        }
    }

    pub fn elapsed(&self) -> f64 {
        self.start.elapsed().as_secs_f64()
    }

    pub fn stopped(&self) -> Option<Stop> {
        self.stopped
    }

    /// Limits the work of the next sub-search to `nodes` more ticks.
    pub fn set_cap(&mut self, nodes: Option<u64>) {
        self.cap = nodes.map(|n| self.nodes + n);
    }

    /// Stopped, or the current sub-search used up its allowance.
    pub fn interrupted(&self) -> bool {
        self.stopped.is_some() || self.cap.is_some_and(|c| self.nodes >= c)
    }

    /// Counts one unit of work; returns `true` when the search must stop.
    #[inline]
    pub fn tick(&mut self) -> bool {
        if self.interrupted() {
            return true;
        }
        self.nodes += 1;
        if self.node_limit.is_some_and(|l| self.nodes >= l) {
            self.stopped = Some(Stop::NodeLimit);
            return true;
        }
        if self.nodes % CLOCK_EVERY == 0 {
            return self.check_now();
        }
        false
    }

    /// Reads the clock and cancellation flag immediately.
    pub fn check_now(&mut self) -> bool {
        if self.stopped.is_some() {
            return true;
        }
        if self.cancel.as_ref().is_some_and(|c| c.load(Ordering::Relaxed)) {
            self.stopped = Some(Stop::Cancelled);
        } else if Instant::now() >= self.deadline {
            self.stopped = Some(Stop::Deadline);
        }
        self.stopped.is_some()
    }
}

/// Strictly decreasing record of improving costs.
pub(crate) struct Trace<'h> {
    points: Vec<TracePoint>,
    hooks: &'h SolveHooks,
    log: bool,
    label: &'static str,
}

impl<'h> Trace<'h> {
    pub fn new(hooks: &'h SolveHooks, log: bool, label: &'static str) -> Self {
        Self {
            points: Vec::new(),
            hooks,
            log,
            label,
        }
    }

    pub fn best(&self) -> Option<&CostVector> {
        self.points.last().map(|p| &p.cost)
    }

    /// Records `cost` if it strictly improves on the last entry.
    pub fn offer(&mut self, time: f64, cost: &CostVector) -> bool {
        if self.best().is_some_and(|b| cost >= b) {
            return false;
        }
        if self.log {
            log::info!("{} improvement at {time:.3}s: {cost}", self.label);
        }
        if let Some(f) = &self.hooks.on_improvement {
            f(time, cost);
        }
        self.points.push(TracePoint {
            time,
            cost: cost.clone(),
        });
        true
    }

    pub fn into_points(self) -> Vec<TracePoint> {
        self.points
    }
}

/// Adds two cost arrays level by level.
#[inline]
pub(crate) fn add<const N: usize>(a: [u64; N], b: [u64; N]) -> [u64; N] {
    let mut out = a;
    for i in 0..N {
        out[i] += b[i];
    }
    out
}

#[inline]
pub(crate) fn sub<const N: usize>(a: [u64; N], b: [u64; N]) -> [u64; N] {
    let mut out = a;
    for i in 0..N {
        out[i] -= b[i];
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn budget_honours_node_limit_and_cancel() {
        let cfg = SolveConfig {
            node_limit: Some(10),
            ..SolveConfig::default()
        };
        let mut b = Budget::new(&cfg, &SolveHooks::default());
        let ticks = (0..100).take_while(|_| !b.tick()).count();
        assert_eq!(ticks, 9);
        assert_eq!(b.stopped(), Some(Stop::NodeLimit));

        let flag = Arc::new(AtomicBool::new(true));
        let hooks = SolveHooks {
            cancel: Some(flag),
            on_improvement: None,
        };
        let mut b = Budget::new(&SolveConfig::default(), &hooks);
        assert!(b.check_now());
        assert_eq!(b.stopped(), Some(Stop::Cancelled));
    }

    #[test]
    fn trace_only_keeps_strict_improvements() {
        let hooks = SolveHooks::default();
        let mut t = Trace::new(&hooks, false, "test");
        assert!(t.offer(0.0, &CostVector(vec![3, 0])));
        assert!(!t.offer(0.1, &CostVector(vec![3, 0])));
        assert!(!t.offer(0.2, &CostVector(vec![4, 0])));
        assert!(t.offer(0.3, &CostVector(vec![2, 9])));
        assert_eq!(t.into_points().len(), 2);
    }

    #[test]
    fn config_rejects_bad_cutoff() {
        assert!(SolveConfig::exact(0.0).validate().is_err());
        assert!(SolveConfig::exact(f64::NAN).validate().is_err());
        assert!(SolveConfig::exact(5.0).validate().is_ok());
        assert_eq!("anytime".parse::<Mode>().unwrap(), Mode::Anytime);
    }
}
