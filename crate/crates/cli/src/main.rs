use std::fs;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rehab_core::bench::{run_grid, GridSpec};
use rehab_core::feas::rule_set;
use rehab_core::generator::{generate, preset, GenParams};
use rehab_core::oracle::{oracle_agenda, oracle_board, OracleLimits};
use rehab_core::{
    agenda_cost, board_cost, check_agenda, check_board, solve_agenda, solve_board, AgendaSolution,
    BoardSolution, Instance, Mode, SolveConfig, SolveReport, Variant,
};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Two-phase rehabilitation scheduling: assign patients to operators, then
/// place every session in time and space.
#[derive(Parser)]
#[command(name = "rehab", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a synthetic instance.
    Gen {
        #[arg(long, conflicts_with = "params", required_unless_present = "params")]
        preset: Option<String>,
        /// Generator parameters as JSON.
        #[arg(long)]
        params: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Assign every patient to an operator.
    SolveBoard {
        #[arg(long)]
        instance: PathBuf,
        #[command(flatten)]
        solve: SolveArgs,
    },
    /// Schedule the sessions of a solved board.
    SolveAgenda {
        #[arg(long)]
        instance: PathBuf,
        /// A board, or a board solve report.
        #[arg(long)]
        board: PathBuf,
        #[arg(long, default_value = "optimized")]
        variant: Variant,
        #[command(flatten)]
        solve: SolveArgs,
    },
    /// List the hard-constraint violations and the cost of a solution.
    Check {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        board: PathBuf,
        #[arg(long)]
        agenda: Option<PathBuf>,
    },
    /// Solve a tiny instance by exhaustive enumeration.
    Oracle {
        #[arg(long)]
        instance: PathBuf,
        /// Solve the agenda of this board instead of the board.
        #[arg(long)]
        board: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Benchmark sweeps.
    Bench {
        #[command(subcommand)]
        cmd: BenchCmd,
    },
    /// Run the HTTP service.
    Serve {
        #[arg(long, env = "REHAB_LISTEN", default_value = "127.0.0.1:8080")]
        listen: SocketAddr,
        #[arg(long, env = "REHAB_DATA_DIR", default_value = "rehab-data")]
        data_dir: PathBuf,
        #[arg(long, env = "REHAB_CUTOFF", default_value_t = 30.0)]
        cutoff: f64,
        #[arg(long, env = "REHAB_WORKERS", default_value_t = 1)]
        workers: usize,
    },
}

#[derive(Subcommand)]
enum BenchCmd {
    /// Sweep patient and operator counts; resumable from the output directory.
    Grid {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
}

#[derive(Args)]
struct SolveArgs {
    /// Wall-clock budget in seconds.
    #[arg(long, default_value_t = 30.0)]
    cutoff: f64,
    #[arg(long, default_value = "anytime")]
    mode: Mode,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Deterministic effort cap.
    #[arg(long)]
    node_limit: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl SolveArgs {
    fn config(&self) -> SolveConfig {
        SolveConfig {
            mode: self.mode,
            cutoff: self.cutoff,
            seed: self.seed,
            emit_improvements: true,
            node_limit: self.node_limit,
        }
    }
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn write_json<T: Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match out {
        Some(path) => fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display())),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

/// Accepts a bare solution or a solve report carrying one.
fn read_solution<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let value: serde_json::Value = read_json(path)?;
    if let Some(best) = value.get("best").filter(|_| value.get("outcome").is_some()) {
        if best.is_null() {
            bail!("{} is a report without a solution", path.display());
        }
        return Ok(serde_json::from_value(best.clone())?);
    }
    Ok(serde_json::from_value(value)?)
}

fn summarize<S>(report: &SolveReport<S>) {
    let cost = report
        .cost
        .as_ref()
        .map(|c| format!("{:?}", c.0))
        .unwrap_or_else(|| "-".into());
    eprintln!(
        "{} cost {cost} in {:.2}s ({} nodes, {} improvements)",
        report.outcome,
        report.wall_time,
        report.nodes,
        report.trace.len()
    );
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.cmd {
        Cmd::Gen { preset: name, params, seed, out } => {
            let params = match (name, params) {
                (Some(name), _) => preset(&name)?.sample(seed),
                (None, Some(path)) => GenParams { seed, ..read_json(&path)? },
                (None, None) => unreachable!("clap requires one of them"),
            };
            write_json(&generate(&params)?, out.as_deref())?;
        }
        Cmd::SolveBoard { instance, solve } => {
            let inst: Instance = read_json(&instance)?;
            let report = solve_board(&inst, &solve.config())?;
            summarize(&report);
            write_json(&report, solve.out.as_deref())?;
        }
        Cmd::SolveAgenda { instance, board, variant, solve } => {
            let inst: Instance = read_json(&instance)?;
            let board: BoardSolution = read_solution(&board)?;
            let report = solve_agenda(&inst, &board, &solve.config(), variant)?;
            summarize(&report);
            write_json(&report, solve.out.as_deref())?;
        }
        Cmd::Check { instance, board, agenda } => {
            let inst: Instance = read_json(&instance)?;
            let board: BoardSolution = read_solution(&board)?;
            let mut violations = check_board(&inst, &board)?;
            let agenda: Option<AgendaSolution> = agenda.as_deref().map(read_solution).transpose()?;
            if let Some(a) = &agenda {
                violations.extend(check_agenda(&inst, &board, a)?);
            }
            for v in &violations {
                println!("{v}");
            }
            if !violations.is_empty() {
                let tags: Vec<String> = rule_set(&violations).iter().map(|r| r.to_string()).collect();
                eprintln!("{} violation(s): {}", violations.len(), tags.join(" "));
                return Ok(ExitCode::FAILURE);
            }
            println!("board cost {:?}", board_cost(&inst, &board)?.0);
            if let Some(a) = &agenda {
                println!("agenda cost {:?}", agenda_cost(&inst, &board, a)?.0);
            }
        }
        Cmd::Oracle { instance, board, out } => {
            let inst: Instance = read_json(&instance)?;
            let limits = OracleLimits::default();
            match board {
                None => write_json(&oracle_board(&inst, &limits)?, out.as_deref())?,
                Some(path) => {
                    let board: BoardSolution = read_solution(&path)?;
                    match oracle_agenda(&inst, &board, &limits)? {
                        Some(answer) => write_json(&answer, out.as_deref())?,
                        None => {
                            eprintln!("no feasible agenda");
                            write_json(&serde_json::Value::Null, out.as_deref())?;
                        }
                    }
                }
            }
        }
        Cmd::Bench { cmd: BenchCmd::Grid { spec, out_dir } } => {
            let spec: GridSpec = read_json(&spec)?;
            let report = run_grid(&spec, Some(&out_dir))?;
            for f in &report.frontiers {
                eprintln!("{} frontier mean {:.2}", f.variant, f.mean);
            }
            eprintln!("wrote {}", out_dir.display());
        }
        Cmd::Serve { listen, data_dir, cutoff, workers } => {
            let cfg = rehab_service::Config { listen, data_dir, default_cutoff: cutoff, workers };
            tokio::runtime::Runtime::new()?.block_on(rehab_service::serve(cfg))?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
