//! Shared state behind the HTTP service.

use std::path::PathBuf;
use std::sync::{Arc, Mutex, MutexGuard, OnceLock, RwLock, TryLockError};
use std::time::{SystemTime, UNIX_EPOCH};

use conceptkd_core::distillation::StudentEnsemble;
use conceptkd_core::tsne::{project_concepts, Projection2D};
use conceptkd_core::tuning::{commit, ProvenanceEntry};

use crate::api::{self, ApiError, ApiResult, TuneRequest, TuneResponse};
use crate::config::WorkbenchConfig;
use crate::dataset::Dataset;
use crate::error::Result;
use crate::store::ensemble::save_ensemble;
use crate::store::provenance::{append_entry, provenance_path, read_entries};

pub struct SessionState {
    pub dataset: Dataset,
    pub config: WorkbenchConfig,
    ensemble: RwLock<Arc<StudentEnsemble>>,
    /// Where tuned ensembles are saved; `None` keeps everything in memory.
    ensemble_path: Option<PathBuf>,
    /// One slot per class; held for the duration of a tuning job.
    jobs: Vec<Mutex<()>>,
    provenance: Mutex<Vec<ProvenanceEntry>>,
    projection: OnceLock<std::result::Result<Projection2D, ApiError>>,
}

/// Held while a class is being tuned.
pub struct JobGuard<'a>(#[allow(dead_code)] MutexGuard<'a, ()>);

impl SessionState {
    pub fn new(dataset: Dataset, ensemble: StudentEnsemble, config: WorkbenchConfig) -> Result<Self> {
        dataset.check_ensemble(&ensemble)?;
        let jobs = (0..ensemble.len()).map(|_| Mutex::new(())).collect();
        Ok(SessionState {
            dataset,
            config,
            ensemble: RwLock::new(Arc::new(ensemble)),
            ensemble_path: None,
            jobs,
            provenance: Mutex::new(Vec::new()),
            projection: OnceLock::new(),
        })
    }

    /// Persists tuned ensembles to `path` and provenance to the log beside
    /// it, loading any entries already logged.
    pub fn with_persistence(mut self, path: PathBuf) -> Result<Self> {
        *self.provenance.get_mut().unwrap() = read_entries(&provenance_path(&path))?;
        self.ensemble_path = Some(path);
        Ok(self)
    }

    /// Current ensemble. Tuning replaces the whole `Arc`, so a snapshot never
    /// changes underneath its holder.
    pub fn ensemble(&self) -> Arc<StudentEnsemble> {
        self.ensemble.read().unwrap().clone()
    }

    pub fn provenance(&self, class: &str) -> ApiResult<Vec<ProvenanceEntry>> {
        self.class_index(class)?;
        Ok(self.provenance.lock().unwrap().iter().filter(|e| e.class_name == class).cloned().collect())
    }

    pub fn projection(&self) -> ApiResult<&Projection2D> {
        self.projection
            .get_or_init(|| {
                let params = self.config.projection_params(self.dataset.corpus.len());
                project_concepts(&self.dataset.corpus, &params).map_err(ApiError::from)
            })
            .as_ref()
            .map_err(Clone::clone)
    }

    fn class_index(&self, class: &str) -> ApiResult<usize> {
        self.dataset
            .class_names()
            .iter()
            .position(|c| c == class)
            .ok_or_else(|| ApiError::NotFound(format!("unknown class '{class}'")))
    }

    /// Claims the tuning slot of `class`, failing with [`ApiError::Busy`] if
    /// a job already holds it.
    pub fn begin_job(&self, class: &str) -> ApiResult<JobGuard<'_>> {
        let j = self.class_index(class)?;
        match self.jobs[j].try_lock() {
            Ok(g) => Ok(JobGuard(g)),
            Err(TryLockError::WouldBlock) => Err(ApiError::Busy(class.into())),
            Err(TryLockError::Poisoned(p)) => Ok(JobGuard(p.into_inner())),
        }
    }

    pub fn tune(&self, class: &str, request: &TuneRequest) -> ApiResult<TuneResponse> {
        let _job = self.begin_job(class)?;
        let snapshot = self.ensemble();
        let sequence = self.provenance(class)?.len() + 1;
        let now = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
        let outcome = api::run_session(
            &self.dataset,
            &snapshot,
            &self.config,
            class,
            request,
            &api::entry_id(class, sequence),
            now,
        )?;

        let mut slot = self.ensemble.write().unwrap();
        // Other classes may have been tuned meanwhile; only this class's
        // student and history are replaced.
        let mut next = (**slot).clone();
        let entry = commit(&mut next, outcome);
        if let Some(path) = &self.ensemble_path {
            save_ensemble(path, &next)?;
            append_entry(&provenance_path(path), &entry)?;
        }
        self.provenance.lock().unwrap().push(entry.clone());
        let j = next.class_index(class)?;
        let evaluation = api::evaluate(&self.dataset, &next, &self.config, j)?;
        let fingerprint = next.fingerprint();
        *slot = Arc::new(next);
        Ok(TuneResponse { fingerprint, class: class.into(), evaluation, entry })
    }
}
