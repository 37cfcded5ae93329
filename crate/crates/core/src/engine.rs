//! Multi-session registry with per-session serialization and optional
//! on-disk event logs.

use std::collections::HashMap;
use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use chrono::{DateTime, Utc};
use parking_lot::{Mutex, RwLock};

use crate::matcher::{Intention, Matchers};
use crate::session::{
    derive_seed, Event, IterationRecord, Session, SessionConfig, SessionError, SessionState,
};
use crate::token::{ConceptDictionary, Grid, TokenCombination};

pub trait Clock: Send + Sync {
    fn now(&self) -> DateTime<Utc>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> DateTime<Utc> {
        Utc::now()
    }
}

/// Always returns the same instant; for reproducible logs.
#[derive(Debug, Clone, Copy)]
pub struct FixedClock(pub DateTime<Utc>);

impl Clock for FixedClock {
    fn now(&self) -> DateTime<Utc> {
        self.0
    }
}

/// One `<session_id>.ndjson` file per session.
#[derive(Debug, Clone)]
pub struct LogStore {
    dir: PathBuf,
    fsync: bool,
}

impl LogStore {
    pub fn open(dir: impl Into<PathBuf>, fsync: bool) -> Result<Self, SessionError> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(io_err)?;
        Ok(LogStore { dir, fsync })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_for(&self, id: &str) -> PathBuf {
        self.dir.join(format!("{id}.ndjson"))
    }

    pub fn append(&self, id: &str, events: &[Event]) -> Result<(), SessionError> {
        let mut buf = String::new();
        for e in events {
            buf.push_str(&e.to_line());
            buf.push('\n');
        }
        let mut f = OpenOptions::new()
            .create(true)
            .append(true)
            .open(self.path_for(id))
            .map_err(io_err)?;
        f.write_all(buf.as_bytes()).map_err(io_err)?;
        if self.fsync {
            f.sync_data().map_err(io_err)?;
        }
        Ok(())
    }

    /// Replays every log in the directory.
    pub fn load_all(&self) -> Result<Vec<Session>, SessionError> {
        let mut paths: Vec<_> = fs::read_dir(&self.dir)
            .map_err(io_err)?
            .filter_map(Result::ok)
            .map(|e| e.path())
            .filter(|p| p.extension().is_some_and(|x| x == "ndjson"))
            .collect();
        paths.sort();
        paths
            .iter()
            .map(|p| Session::replay(&fs::read_to_string(p).map_err(io_err)?))
            .collect()
    }

    /// Overwrites the log for `session` with its full event list.
    pub fn write_session(&self, session: &Session) -> Result<(), SessionError> {
        let mut f = File::create(self.path_for(session.id())).map_err(io_err)?;
        f.write_all(session.log().as_bytes()).map_err(io_err)?;
        if self.fsync {
            f.sync_data().map_err(io_err)?;
        }
        Ok(())
    }
}

fn io_err(e: std::io::Error) -> SessionError {
    SessionError::Io(e.to_string())
}

struct Entry {
    session: Session,
    demo_requests: u64,
}

const ON_DEMAND_STREAM: u64 = 0x0D;

pub struct Engine {
    dict: ConceptDictionary,
    matchers: Matchers,
    sessions: RwLock<HashMap<String, Arc<Mutex<Entry>>>>,
    store: Option<LogStore>,
    clock: Arc<dyn Clock>,
}

impl Engine {
    pub fn new(matchers: Matchers) -> Self {
        Engine {
            dict: ConceptDictionary::standard(),
            matchers,
            sessions: RwLock::new(HashMap::new()),
            store: None,
            clock: Arc::new(SystemClock),
        }
    }

    pub fn with_clock(mut self, clock: Arc<dyn Clock>) -> Self {
        self.clock = clock;
        self
    }

    /// Persists to `store`, first restoring any sessions already logged there.
    pub fn with_store(mut self, store: LogStore) -> Result<Self, SessionError> {
        {
            let mut map = self.sessions.write();
            for session in store.load_all()? {
                map.insert(
                    session.id().to_string(),
                    Arc::new(Mutex::new(Entry {
                        session,
                        demo_requests: 0,
                    })),
                );
            }
        }
        self.store = Some(store);
        Ok(self)
    }

    pub fn dictionary(&self) -> &ConceptDictionary {
        &self.dict
    }

    pub fn create_session(&self, config: SessionConfig) -> Result<SessionState, SessionError> {
        self.create_session_with_id(uuid::Uuid::new_v4().to_string(), config)
    }

    pub fn create_session_with_id(
        &self,
        id: impl Into<String>,
        config: SessionConfig,
    ) -> Result<SessionState, SessionError> {
        let id = id.into();
        if id.is_empty()
            || !id
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
        {
            return Err(SessionError::InvalidConfig(format!(
                "bad session id `{id}`"
            )));
        }
        let session = Session::create(id.clone(), config, self.clock.now())?;
        let mut map = self.sessions.write();
        if map.contains_key(&id) {
            return Err(SessionError::AlreadyExists(id));
        }
        if let Some(store) = &self.store {
            store.append(&id, session.events())?;
        }
        let state = session.state().clone();
        map.insert(
            id,
            Arc::new(Mutex::new(Entry {
                session,
                demo_requests: 0,
            })),
        );
        Ok(state)
    }

    fn entry(&self, id: &str) -> Result<Arc<Mutex<Entry>>, SessionError> {
        self.sessions
            .read()
            .get(id)
            .cloned()
            .ok_or_else(|| SessionError::NotFound(id.to_string()))
    }

    /// Runs one teaching iteration. Submissions to the same session are
    /// serialized; a failed submission leaves the session untouched.
    pub fn submit_iteration(
        &self,
        id: &str,
        combo: TokenCombination,
        intention: Intention,
    ) -> Result<IterationRecord, SessionError> {
        let entry = self.entry(id)?;
        let mut guard = entry.lock();
        let mut next = guard.session.clone();
        let before = next.events().len();
        let record = next
            .submit(combo, intention, &self.matchers, self.clock.now())?
            .clone();
        if let Some(store) = &self.store {
            store.append(id, &next.events()[before..])?;
        }
        guard.session = next;
        Ok(record)
    }

    pub fn session(&self, id: &str) -> Result<SessionState, SessionError> {
        Ok(self.entry(id)?.lock().session.state().clone())
    }

    pub fn log(&self, id: &str) -> Result<String, SessionError> {
        Ok(self.entry(id)?.lock().session.log())
    }

    pub fn with_session<R>(
        &self,
        id: &str,
        f: impl FnOnce(&Session) -> R,
    ) -> Result<R, SessionError> {
        Ok(f(&self.entry(id)?.lock().session))
    }

    /// A fresh demonstration of the robot's current knowledge; each call
    /// draws a new seed.
    pub fn demonstration(&self, id: &str) -> Result<Grid, SessionError> {
        let entry = self.entry(id)?;
        let mut guard = entry.lock();
        guard.demo_requests += 1;
        let state = guard.session.state();
        let seed = derive_seed(state.config.seed ^ ON_DEMAND_STREAM, guard.demo_requests);
        Ok(state.robot.demonstrate_with_seed(seed))
    }

    pub fn session_ids(&self) -> Vec<String> {
        let mut ids: Vec<_> = self.sessions.read().keys().cloned().collect();
        ids.sort();
        ids
    }
}
