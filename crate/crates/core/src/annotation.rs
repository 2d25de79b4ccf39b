//! Blinded pairwise preference annotation: task queues, hidden left/right
//! assignment, and a durable vote log.
//!
//! A store directory holds `tasks.json` (the item set), `assignments.json`
//! (which system each annotator saw on the left) and `votes.jsonl` (one
//! accepted vote per line, already mapped back to system labels).

use std::collections::{BTreeMap, HashSet};
use std::fs::{File, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::agreement::{
    krippendorff_nominal, preference_summary, AgreementReport, Choice, PreferenceSummary, RatingMatrix, Vote,
};

pub const TASKS_FILE: &str = "tasks.json";
pub const ASSIGNMENTS_FILE: &str = "assignments.json";
pub const VOTES_FILE: &str = "votes.jsonl";

#[derive(Debug, Error)]
pub enum AnnotationError {
    #[error("unknown annotator {0}")]
    UnknownAnnotator(String),
    #[error("item {item_id} is not in the queue of annotator {annotator}")]
    UnknownItem { annotator: String, item_id: String },
    #[error("annotator {annotator} already voted on item {item_id}")]
    AlreadyVoted { annotator: String, item_id: String },
    #[error("invalid task set: {0}")]
    InvalidTasks(String),
    #[error("store {path}: {message}")]
    Corrupt { path: PathBuf, message: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskItem {
    pub item_id: String,
    pub source_text: String,
    pub system_a_text: String,
    pub system_b_text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskSet {
    /// Seed for the per-(item, annotator) left/right draw.
    pub seed: u64,
    pub annotators: Vec<String>,
    pub items: Vec<TaskItem>,
    /// Per-annotator item lists. Absent: everyone rates every item.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub queues: Option<BTreeMap<String, Vec<String>>>,
    /// Names of the systems behind SYSTEM_A and SYSTEM_B. Kept server side.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub systems: BTreeMap<String, String>,
}

impl TaskSet {
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, AnnotationError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let tasks: TaskSet = serde_json::from_str(&text).map_err(|e| AnnotationError::Corrupt {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        tasks.validate()?;
        Ok(tasks)
    }

    pub fn validate(&self) -> Result<(), AnnotationError> {
        let mut ids = HashSet::new();
        for item in &self.items {
            if !ids.insert(item.item_id.as_str()) {
                return Err(AnnotationError::InvalidTasks(format!(
                    "duplicate item {}",
                    item.item_id
                )));
            }
        }
        let mut people = HashSet::new();
        for a in &self.annotators {
            if !people.insert(a.as_str()) {
                return Err(AnnotationError::InvalidTasks(format!("duplicate annotator {a}")));
            }
        }
        if let Some(queues) = &self.queues {
            for (annotator, queue) in queues {
                if !people.contains(annotator.as_str()) {
                    return Err(AnnotationError::InvalidTasks(format!(
                        "queue for unlisted annotator {annotator}"
                    )));
                }
                if let Some(missing) = queue.iter().find(|id| !ids.contains(id.as_str())) {
                    return Err(AnnotationError::InvalidTasks(format!(
                        "queue of {annotator} names unknown item {missing}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Item ids for an annotator, in presentation order.
    pub fn queue(&self, annotator: &str) -> Option<Vec<&str>> {
        if !self.annotators.iter().any(|a| a == annotator) {
            return None;
        }
        Some(match self.queues.as_ref().and_then(|q| q.get(annotator)) {
            Some(queue) => queue.iter().map(String::as_str).collect(),
            None if self.queues.is_some() => Vec::new(),
            None => self.items.iter().map(|i| i.item_id.as_str()).collect(),
        })
    }

    fn item(&self, item_id: &str) -> Option<&TaskItem> {
        self.items.iter().find(|i| i.item_id == item_id)
    }
}

/// Which system was shown on the left.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Assignment {
    SystemALeft,
    SystemBLeft,
}

impl Assignment {
    /// Deterministic per (seed, item, annotator).
    pub fn draw(seed: u64, item_id: &str, annotator: &str) -> Self {
        let mut hasher = Sha256::new();
        hasher.update(seed.to_le_bytes());
        hasher.update(item_id.as_bytes());
        hasher.update([0]);
        hasher.update(annotator.as_bytes());
        if hasher.finalize()[0] & 1 == 0 {
            Assignment::SystemALeft
        } else {
            Assignment::SystemBLeft
        }
    }

    pub fn resolve(self, side: SideChoice) -> Choice {
        let left_is_a = self == Assignment::SystemALeft;
        match (side, left_is_a) {
            (SideChoice::Same, _) => Choice::Same,
            (SideChoice::Left, true) | (SideChoice::Right, false) => Choice::SystemA,
            (SideChoice::Left, false) | (SideChoice::Right, true) => Choice::SystemB,
        }
    }
}

/// A vote as the annotator sees it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SideChoice {
    Left,
    Right,
    Same,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Progress {
    pub done: usize,
    pub total: usize,
}

/// What the annotation client receives; carries no system identity.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskView {
    pub item_id: String,
    pub source_text: String,
    pub left_text: String,
    pub right_text: String,
    pub progress: Progress,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationSummary {
    pub total_votes: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preferences: Option<PreferenceSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub agreement: Option<AgreementReport>,
    /// Alpha is not informative: no pairable ratings, or a single category.
    pub alpha_degenerate: bool,
    pub progress: BTreeMap<String, Progress>,
}

struct State {
    votes: Vec<Vote>,
    voted: HashSet<(String, String)>,
    assignments: BTreeMap<String, BTreeMap<String, Assignment>>,
    log: File,
}

pub struct AnnotationStore {
    dir: PathBuf,
    tasks: TaskSet,
    state: Mutex<State>,
}

fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(tmp, path)
}

fn corrupt(path: &Path, message: impl Into<String>) -> AnnotationError {
    AnnotationError::Corrupt {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

/// Reads the vote log, dropping a torn final line left by a crash.
fn replay_votes(path: &Path) -> Result<Vec<Vote>, AnnotationError> {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(e.into()),
    };
    let mut votes = Vec::new();
    let complete = text.ends_with('\n');
    let lines: Vec<&str> = text.lines().collect();
    for (i, line) in lines.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<Vote>(line) {
            Ok(v) => votes.push(v),
            Err(_) if i + 1 == lines.len() && !complete => {
                log::warn!("dropping incomplete last line of {}", path.display());
                let keep = text.len() - line.len();
                OpenOptions::new().write(true).open(path)?.set_len(keep as u64)?;
            }
            Err(e) => return Err(corrupt(path, format!("line {}: {e}", i + 1))),
        }
    }
    Ok(votes)
}

impl AnnotationStore {
    /// Opens a store, creating it from `tasks` if it is new. An existing
    /// store keeps its task set; passing a different one is an error.
    pub fn open(dir: impl Into<PathBuf>, tasks: Option<TaskSet>) -> Result<Self, AnnotationError> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir)?;
        let tasks_path = dir.join(TASKS_FILE);
        let stored = if tasks_path.exists() {
            Some(TaskSet::from_file(&tasks_path)?)
        } else {
            None
        };
        let tasks = match (stored, tasks) {
            (Some(s), Some(t)) if s != t => {
                return Err(corrupt(&tasks_path, "store already holds a different task set"));
            }
            (Some(s), _) => s,
            (None, Some(t)) => {
                t.validate()?;
                write_atomic(&tasks_path, &serde_json::to_vec_pretty(&t).expect("plain data"))?;
                t
            }
            (None, None) => return Err(corrupt(&tasks_path, "no task set")),
        };

        let assignments_path = dir.join(ASSIGNMENTS_FILE);
        let assignments = match std::fs::read(&assignments_path) {
            Ok(bytes) => serde_json::from_slice(&bytes).map_err(|e| corrupt(&assignments_path, e.to_string()))?,
            Err(e) if e.kind() == io::ErrorKind::NotFound => BTreeMap::new(),
            Err(e) => return Err(e.into()),
        };

        let votes_path = dir.join(VOTES_FILE);
        let votes = replay_votes(&votes_path)?;
        let voted = votes
            .iter()
            .map(|v| (v.annotator_id.clone(), v.item_id.clone()))
            .collect();
        let log = OpenOptions::new().create(true).append(true).open(&votes_path)?;
        Ok(Self {
            dir,
            tasks,
            state: Mutex::new(State {
                votes,
                voted,
                assignments,
                log,
            }),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn tasks(&self) -> &TaskSet {
        &self.tasks
    }

    fn queue(&self, annotator: &str) -> Result<Vec<&str>, AnnotationError> {
        self.tasks
            .queue(annotator)
            .ok_or_else(|| AnnotationError::UnknownAnnotator(annotator.to_string()))
    }

    fn assignment(&self, state: &mut State, annotator: &str, item_id: &str) -> Result<Assignment, AnnotationError> {
        if let Some(a) = state.assignments.get(annotator).and_then(|m| m.get(item_id)) {
            return Ok(*a);
        }
        let a = Assignment::draw(self.tasks.seed, item_id, annotator);
        state
            .assignments
            .entry(annotator.to_string())
            .or_default()
            .insert(item_id.to_string(), a);
        let bytes = serde_json::to_vec_pretty(&state.assignments).expect("plain data");
        write_atomic(&self.dir.join(ASSIGNMENTS_FILE), &bytes)?;
        Ok(a)
    }

    /// The annotator's first item without a vote, or `None` when done.
    pub fn next_task(&self, annotator: &str) -> Result<Option<TaskView>, AnnotationError> {
        let queue = self.queue(annotator)?;
        let mut state = self.state.lock().unwrap();
        let done = queue
            .iter()
            .filter(|id| state.voted.contains(&(annotator.to_string(), id.to_string())))
            .count();
        let Some(next) = queue
            .iter()
            .find(|id| !state.voted.contains(&(annotator.to_string(), id.to_string())))
        else {
            return Ok(None);
        };
        let item = self.tasks.item(next).expect("queues validated");
        let assignment = self.assignment(&mut state, annotator, next)?;
        let (left, right) = match assignment {
            Assignment::SystemALeft => (&item.system_a_text, &item.system_b_text),
            Assignment::SystemBLeft => (&item.system_b_text, &item.system_a_text),
        };
        Ok(Some(TaskView {
            item_id: item.item_id.clone(),
            source_text: item.source_text.clone(),
            left_text: left.clone(),
            right_text: right.clone(),
            progress: Progress {
                done,
                total: queue.len(),
            },
        }))
    }

    /// Records a vote, mapped through the hidden assignment. The log line is
    /// synced before the vote is acknowledged.
    pub fn submit_vote(&self, annotator: &str, item_id: &str, side: SideChoice) -> Result<Vote, AnnotationError> {
        let queue = self.queue(annotator)?;
        if !queue.contains(&item_id) {
            return Err(AnnotationError::UnknownItem {
                annotator: annotator.to_string(),
                item_id: item_id.to_string(),
            });
        }
        let mut state = self.state.lock().unwrap();
        let key = (annotator.to_string(), item_id.to_string());
        if state.voted.contains(&key) {
            return Err(AnnotationError::AlreadyVoted {
                annotator: annotator.to_string(),
                item_id: item_id.to_string(),
            });
        }
        let assignment = self.assignment(&mut state, annotator, item_id)?;
        let vote = Vote::new(item_id, annotator, assignment.resolve(side));
        let mut line = serde_json::to_string(&vote).expect("plain record");
        line.push('\n');
        state.log.write_all(line.as_bytes())?;
        state.log.sync_data()?;
        state.voted.insert(key);
        state.votes.push(vote.clone());
        Ok(vote)
    }

    pub fn votes(&self) -> Vec<Vote> {
        self.state.lock().unwrap().votes.clone()
    }

    pub fn progress(&self) -> BTreeMap<String, Progress> {
        let state = self.state.lock().unwrap();
        self.tasks
            .annotators
            .iter()
            .map(|a| {
                let queue = self.tasks.queue(a).unwrap_or_default();
                let done = queue
                    .iter()
                    .filter(|id| state.voted.contains(&(a.clone(), id.to_string())))
                    .count();
                (
                    a.clone(),
                    Progress {
                        done,
                        total: queue.len(),
                    },
                )
            })
            .collect()
    }

    pub fn summary(&self) -> AnnotationSummary {
        let votes = self.votes();
        let progress = self.progress();
        if votes.is_empty() {
            return AnnotationSummary {
                total_votes: 0,
                preferences: None,
                agreement: None,
                alpha_degenerate: true,
                progress,
            };
        }
        let preferences = preference_summary(&votes).ok();
        let agreement = RatingMatrix::from_votes(&votes)
            .ok()
            .and_then(|m| krippendorff_nominal(&m).ok());
        AnnotationSummary {
            total_votes: votes.len(),
            preferences,
            alpha_degenerate: agreement.as_ref().is_none_or(|a| a.degenerate),
            agreement,
            progress,
        }
    }
}
