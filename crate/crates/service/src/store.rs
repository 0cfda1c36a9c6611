//! Workspaces, their solve jobs and the JSON-file persistence behind them.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::AtomicBool;
use std::sync::{Arc, Mutex, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use rehab_core::agenda_solver::Variant;
use rehab_core::{AgendaSolution, BoardSolution, CostVector, Instance, Outcome};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Board,
    Agenda,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JobState {
    Queued,
    Running,
    Done,
    Cancelled,
}

impl JobState {
    pub fn is_active(self) -> bool {
        matches!(self, JobState::Queued | JobState::Running)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobStatus {
    pub id: u64,
    pub phase: Phase,
    pub state: JobState,
    /// Cost of the latest improving solution.
    pub progress: Option<CostVector>,
    /// Unix time in seconds.
    pub started_at: f64,
    #[serde(default)]
    pub outcome: Option<Outcome>,
    #[serde(default)]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Workspace {
    pub id: String,
    pub instance: Instance,
    pub board: Option<BoardSolution>,
    /// The board was edited by hand after the last solve.
    #[serde(default)]
    pub board_dirty: bool,
    pub agenda: Option<AgendaSolution>,
    #[serde(default)]
    pub agenda_variant: Option<Variant>,
    pub job: Option<JobStatus>,
}

impl Workspace {
    pub fn active_job(&self) -> Option<&JobStatus> {
        self.job.as_ref().filter(|j| j.state.is_active())
    }
}

/// In-memory side of a workspace: the persisted record plus the handles of
/// its running job.
pub struct Entry {
    pub ws: Workspace,
    pub cancel: Arc<AtomicBool>,
    pub progress: Arc<Mutex<Option<CostVector>>>,
}

impl Entry {
    fn new(ws: Workspace) -> Self {
        Self {
            ws,
            cancel: Arc::new(AtomicBool::new(false)),
            progress: Arc::new(Mutex::new(None)),
        }
    }

    /// The persisted record with the live progress snapshot filled in.
    pub fn snapshot(&self) -> Workspace {
        let mut ws = self.ws.clone();
        if let Some(job) = ws.job.as_mut().filter(|j| j.state == JobState::Running) {
            job.progress = self.progress.lock().unwrap().clone();
        }
        ws
    }
}

pub type Shared = Arc<Mutex<Entry>>;

pub struct Store {
    dir: PathBuf,
    entries: RwLock<BTreeMap<String, Shared>>,
    next_id: Mutex<u64>,
    next_job: Mutex<u64>,
}

pub fn now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

impl Store {
    /// Opens `dir`, creating it if needed, and loads every workspace file in
    /// it. Jobs that were active when the files were written are reported as
    /// cancelled; the files themselves are left untouched.
    pub fn open(dir: impl Into<PathBuf>) -> std::io::Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        let mut entries = BTreeMap::new();
        let mut max_id = 0;
        let mut max_job = 0;
        for item in fs::read_dir(&dir)? {
            let path = item?.path();
            if path.extension().is_none_or(|e| e != "json") {
                continue;
            }
            let bytes = fs::read(&path)?;
            let mut ws: Workspace = serde_json::from_slice(&bytes)
                .map_err(|e| std::io::Error::other(format!("{}: {e}", path.display())))?;
            if let Ok(n) = ws.id.parse::<u64>() {
                max_id = max_id.max(n);
            }
            if let Some(job) = ws.job.as_mut() {
                max_job = max_job.max(job.id);
                if job.state.is_active() {
                    job.state = JobState::Cancelled;
                }
            }
            entries.insert(ws.id.clone(), Arc::new(Mutex::new(Entry::new(ws))));
        }
        Ok(Self {
            dir,
            entries: RwLock::new(entries),
            next_id: Mutex::new(max_id + 1),
            next_job: Mutex::new(max_job + 1),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn ids(&self) -> Vec<String> {
        self.entries.read().unwrap().keys().cloned().collect()
    }

    pub fn get(&self, id: &str) -> Option<Shared> {
        self.entries.read().unwrap().get(id).cloned()
    }

    pub fn create(&self, instance: Instance) -> std::io::Result<String> {
        let id = {
            let mut next = self.next_id.lock().unwrap();
            let id = next.to_string();
            *next += 1;
            id
        };
        let ws = Workspace {
            id: id.clone(),
            instance,
            board: None,
            board_dirty: false,
            agenda: None,
            agenda_variant: None,
            job: None,
        };
        self.save(&ws)?;
        self.entries
            .write()
            .unwrap()
            .insert(id.clone(), Arc::new(Mutex::new(Entry::new(ws))));
        Ok(id)
    }

    pub fn next_job_id(&self) -> u64 {
        let mut next = self.next_job.lock().unwrap();
        let id = *next;
        *next += 1;
        id
    }

    fn path(&self, id: &str) -> PathBuf {
        self.dir.join(format!("{id}.json"))
    }

    /// Writes the workspace through a temporary file so readers never see a
    /// partial record.
    pub fn save(&self, ws: &Workspace) -> std::io::Result<()> {
        let bytes = serde_json::to_vec_pretty(ws).map_err(std::io::Error::other)?;
        let tmp = self.dir.join(format!(".{}.json.tmp", ws.id));
        let mut f = fs::File::create(&tmp)?;
        f.write_all(&bytes)?;
        f.sync_all()?;
        fs::rename(tmp, self.path(&ws.id))
    }
}
