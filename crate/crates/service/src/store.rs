//! File-backed session store: one JSON file per session in a data
//! directory, rewritten through a temporary file and a rename after every
//! operation.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use crate::error::ServiceError;
use crate::session::{Session, SessionFile};

pub type SessionHandle = Arc<Mutex<Session>>;

#[derive(Debug)]
pub struct Store {
    dir: PathBuf,
    sessions: RwLock<HashMap<String, SessionHandle>>,
}

fn storage<E: std::fmt::Display>(context: &str) -> impl FnOnce(E) -> ServiceError + '_ {
    move |e| ServiceError::Storage(format!("{context}: {e}"))
}

impl Store {
    /// Opens `dir`, creating it if needed, and loads every session file in it.
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self, ServiceError> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(storage("creating data directory"))?;
        let mut sessions = HashMap::new();
        for entry in fs::read_dir(&dir).map_err(storage("listing data directory"))? {
            let path = entry.map_err(storage("listing data directory"))?.path();
            if path.extension().and_then(|e| e.to_str()) != Some("json") {
                continue;
            }
            let session = load(&path)?;
            sessions.insert(session.id().to_string(), Arc::new(Mutex::new(session)));
        }
        Ok(Store { dir, sessions: RwLock::new(sessions) })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn insert(&self, session: Session) -> Result<SessionHandle, ServiceError> {
        self.persist(&session)?;
        let handle = Arc::new(Mutex::new(session));
        let id = handle.lock().unwrap_or_else(|e| e.into_inner()).id().to_string();
        self.sessions.write().unwrap_or_else(|e| e.into_inner()).insert(id, handle.clone());
        Ok(handle)
    }

    pub fn get(&self, id: &str) -> Result<SessionHandle, ServiceError> {
        self.sessions
            .read()
            .unwrap_or_else(|e| e.into_inner())
            .get(id)
            .cloned()
            .ok_or_else(|| ServiceError::NotFound(format!("session {id}")))
    }

    pub fn ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = self.sessions.read().unwrap_or_else(|e| e.into_inner()).keys().cloned().collect();
        ids.sort();
        ids
    }

    pub fn persist(&self, session: &Session) -> Result<(), ServiceError> {
        let bytes = serde_json::to_vec_pretty(&SessionFile::from_session(session)).map_err(storage("encoding session"))?;
        let target = self.dir.join(format!("{}.json", session.id()));
        let tmp = self.dir.join(format!(".{}.json.tmp", session.id()));
        fs::write(&tmp, bytes).map_err(storage("writing session"))?;
        fs::rename(&tmp, &target).map_err(storage("replacing session file"))?;
        Ok(())
    }
}

fn load(path: &Path) -> Result<Session, ServiceError> {
    let bytes = fs::read(path).map_err(|e| ServiceError::Storage(format!("{}: {e}", path.display())))?;
    let file: SessionFile =
        serde_json::from_slice(&bytes).map_err(|e| ServiceError::Storage(format!("{}: {e}", path.display())))?;
    file.into_session()
}
