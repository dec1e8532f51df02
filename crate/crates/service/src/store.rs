//! On-disk model store.
//!
//! Layout of a store directory:
//!
//! ```text
//! ground_truth.json    the active ground truth, re-serialized
//! index.json           ordered model records with cached confusion counts
//! models/<id>.json     each imported document, byte for byte
//! ```
//!
//! Raw scores are only read at import time. After that every metric matrix
//! is derived from the cached counts, so reopening a store never re-parses
//! model documents.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use circles_core::ingest::{
    parse_ground_truth, parse_model_output, peek_class_count, validate_bundle, GroundTruthTable,
    IngestError, ValidationReport,
};
use circles_core::layout::{build_scene, LayoutError, LayoutScene, ViewConfig};
use circles_core::metrics::{
    confusion_all, ClassDetailEntry, ConfusionCounts, MetricId, MetricMatrix, MetricsError,
};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

const GROUND_TRUTH_FILE: &str = "ground_truth.json";
const INDEX_FILE: &str = "index.json";
const MODELS_DIR: &str = "models";

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("no ground truth loaded")]
    NoGroundTruth,
    #[error("no models imported")]
    NoModels,
    #[error("model declares {actual} classes, ground truth has {expected}")]
    ClassCountMismatch { expected: usize, actual: i64 },
    #[error("model {name:?} does not match the ground truth: {report}")]
    NotAdmissible { name: String, report: ValidationReport },
    #[error("a different model named {0:?} is already imported")]
    DuplicateName(String),
    #[error("unknown model id {0:?}")]
    UnknownModel(String),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Layout(#[from] LayoutError),
    #[error("store {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("store index {path} is corrupt: {message}")]
    Corrupt { path: PathBuf, message: String },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> StoreError + '_ {
    move |source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelRecord {
    pub model_id: String,
    pub model_name: String,
    pub import_order: usize,
    pub sample_count: usize,
    /// Correct top-1 predictions over all samples.
    pub micro_accuracy: f64,
    pub counts: Vec<ConfusionCounts>,
}

/// A record without its per-class counts, as listed by the API.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub id: String,
    pub name: String,
    pub import_order: usize,
    pub sample_count: usize,
    pub micro_accuracy: f64,
}

impl From<&ModelRecord> for ModelSummary {
    fn from(r: &ModelRecord) -> Self {
        Self {
            id: r.model_id.clone(),
            name: r.model_name.clone(),
            import_order: r.import_order,
            sample_count: r.sample_count,
            micro_accuracy: r.micro_accuracy,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct Index {
    records: Vec<ModelRecord>,
}

/// Content hash of a JSON document: SHA-256 over its compact form with
/// object keys sorted, so whitespace and key order do not change identity.
pub fn canonical_id(document: &[u8]) -> Result<String, StoreError> {
    let value: serde_json::Value = serde_json::from_slice(document)
        .map_err(|e| IngestError::Malformed(e.to_string()))?;
    let canonical = serde_json::to_vec(&value).expect("json value serializes");
    Ok(hex::encode(Sha256::digest(&canonical)))
}

pub struct Store {
    dir: PathBuf,
    ground_truth: Option<GroundTruthTable>,
    records: Vec<ModelRecord>,
    matrices: BTreeMap<MetricId, Arc<MetricMatrix>>,
}

impl Store {
    /// Opens `dir`, creating it when absent.
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let dir = dir.into();
        fs::create_dir_all(dir.join(MODELS_DIR)).map_err(io_err(&dir))?;
        let gt_path = dir.join(GROUND_TRUTH_FILE);
        let ground_truth = match fs::read(&gt_path) {
            Ok(bytes) => Some(parse_ground_truth(&bytes)?),
            Err(e) if e.kind() == io::ErrorKind::NotFound => None,
            Err(e) => return Err(io_err(&gt_path)(e)),
        };
        let index_path = dir.join(INDEX_FILE);
        let records = match fs::read(&index_path) {
            Ok(bytes) => {
                let index: Index =
                    serde_json::from_slice(&bytes).map_err(|e| StoreError::Corrupt {
                        path: index_path.clone(),
                        message: e.to_string(),
                    })?;
                index.records
            }
            Err(e) if e.kind() == io::ErrorKind::NotFound => Vec::new(),
            Err(e) => return Err(io_err(&index_path)(e)),
        };
        if let Some(gt) = &ground_truth {
            if let Some(bad) = records.iter().find(|r| r.counts.len() != gt.class_count()) {
                return Err(StoreError::Corrupt {
                    path: index_path,
                    message: format!("record {} has {} classes", bad.model_id, bad.counts.len()),
                });
            }
        } else if !records.is_empty() {
            return Err(StoreError::Corrupt {
                path: index_path,
                message: "model records without ground truth".into(),
            });
        }
        let mut store = Self {
            dir,
            ground_truth,
            records,
            matrices: BTreeMap::new(),
        };
        store.rebuild_matrices();
        Ok(store)
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn ground_truth(&self) -> Option<&GroundTruthTable> {
        self.ground_truth.as_ref()
    }

    pub fn records(&self) -> &[ModelRecord] {
        &self.records
    }

    pub fn summaries(&self) -> Vec<ModelSummary> {
        self.records.iter().map(ModelSummary::from).collect()
    }

    /// Replaces the ground truth. A different table drops every model;
    /// re-sending the current one keeps them.
    pub fn set_ground_truth(&mut self, document: &[u8]) -> Result<&GroundTruthTable, StoreError> {
        let gt = parse_ground_truth(document)?;
        if self.ground_truth.as_ref() != Some(&gt) {
            for r in std::mem::take(&mut self.records) {
                let path = self.model_path(&r.model_id);
                if let Err(e) = fs::remove_file(&path) {
                    if e.kind() != io::ErrorKind::NotFound {
                        return Err(io_err(&path)(e));
                    }
                }
            }
            write_atomic(&self.dir.join(GROUND_TRUTH_FILE), gt.to_json().as_bytes())?;
            self.ground_truth = Some(gt);
            self.save_index()?;
            self.rebuild_matrices();
        }
        Ok(self.ground_truth.as_ref().expect("just set"))
    }

    /// Imports a model document. Returns the record and whether it was
    /// newly added; re-importing identical content returns the existing one.
    pub fn import_model(&mut self, document: &[u8]) -> Result<(ModelRecord, bool), StoreError> {
        let gt = self.ground_truth.as_ref().ok_or(StoreError::NoGroundTruth)?;
        let model_id = canonical_id(document)?;
        if let Some(existing) = self.records.iter().find(|r| r.model_id == model_id) {
            return Ok((existing.clone(), false));
        }
        let declared = peek_class_count(document)?;
        if declared != gt.class_count() as i64 {
            return Err(StoreError::ClassCountMismatch {
                expected: gt.class_count(),
                actual: declared,
            });
        }
        let model = parse_model_output(document, gt.class_count())?;
        let report = validate_bundle(gt, &model);
        if !report.is_admissible() {
            return Err(StoreError::NotAdmissible {
                name: model.model_name().to_string(),
                report,
            });
        }
        if self.records.iter().any(|r| r.model_name == model.model_name()) {
            return Err(StoreError::DuplicateName(model.model_name().to_string()));
        }
        let counts = confusion_all(gt, &model)?;
        let correct: u64 = counts.iter().map(|c| c.tp).sum();
        let record = ModelRecord {
            model_id,
            model_name: model.model_name().to_string(),
            import_order: self.records.len(),
            sample_count: gt.len(),
            micro_accuracy: if gt.is_empty() {
                0.0
            } else {
                correct as f64 / gt.len() as f64
            },
            counts,
        };
        write_atomic(&self.model_path(&record.model_id), document)?;
        self.records.push(record.clone());
        self.save_index()?;
        self.rebuild_matrices();
        Ok((record, true))
    }

    pub fn delete_model(&mut self, model_id: &str) -> Result<(), StoreError> {
        let pos = self
            .records
            .iter()
            .position(|r| r.model_id == model_id)
            .ok_or_else(|| StoreError::UnknownModel(model_id.to_string()))?;
        self.records.remove(pos);
        for (i, r) in self.records.iter_mut().enumerate() {
            r.import_order = i;
        }
        self.save_index()?;
        let path = self.model_path(model_id);
        fs::remove_file(&path).or_else(|e| {
            if e.kind() == io::ErrorKind::NotFound {
                Ok(())
            } else {
                Err(io_err(&path)(e))
            }
        })?;
        self.rebuild_matrices();
        Ok(())
    }

    /// Original bytes of an imported model document.
    pub fn model_document(&self, model_id: &str) -> Result<Vec<u8>, StoreError> {
        if !self.records.iter().any(|r| r.model_id == model_id) {
            return Err(StoreError::UnknownModel(model_id.to_string()));
        }
        let path = self.model_path(model_id);
        fs::read(&path).map_err(io_err(&path))
    }

    pub fn metric_matrix(&self, metric: MetricId) -> Result<Arc<MetricMatrix>, StoreError> {
        if self.ground_truth.is_none() {
            return Err(StoreError::NoGroundTruth);
        }
        Ok(Arc::clone(&self.matrices[&metric]))
    }

    pub fn layout(&self, metric: MetricId, config: &ViewConfig) -> Result<LayoutScene, StoreError> {
        let matrix = self.metric_matrix(metric)?;
        if matrix.is_empty() {
            return Err(StoreError::NoModels);
        }
        Ok(build_scene(&matrix, config)?)
    }

    pub fn class_detail(
        &self,
        metric: MetricId,
        class: usize,
    ) -> Result<Vec<ClassDetailEntry>, StoreError> {
        Ok(self.metric_matrix(metric)?.class_detail(class)?)
    }

    fn model_path(&self, model_id: &str) -> PathBuf {
        self.dir.join(MODELS_DIR).join(format!("{model_id}.json"))
    }

    fn save_index(&self) -> Result<(), StoreError> {
        let index = Index {
            records: self.records.clone(),
        };
        let bytes = serde_json::to_vec(&index).expect("index serializes");
        write_atomic(&self.dir.join(INDEX_FILE), &bytes)
    }

    fn rebuild_matrices(&mut self) {
        self.matrices.clear();
        let Some(gt) = &self.ground_truth else { return };
        let names: Vec<String> = self.records.iter().map(|r| r.model_name.clone()).collect();
        let counts: Vec<&[ConfusionCounts]> =
            self.records.iter().map(|r| r.counts.as_slice()).collect();
        for metric in MetricId::ALL {
            let matrix = MetricMatrix::from_counts(metric, names.clone(), gt.class_count(), &counts)
                .expect("one name per record");
            self.matrices.insert(metric, Arc::new(matrix));
        }
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), StoreError> {
    let tmp = path.with_extension("json.tmp");
    fs::write(&tmp, bytes).map_err(io_err(&tmp))?;
    fs::rename(&tmp, path).map_err(io_err(path))
}
