//! Ground-truth and model-output documents.
//!
//! Both document kinds are JSON. A ground-truth file fixes the sample set and
//! the class count `N`; every model file must then score exactly those
//! samples over the same `N` classes, either densely (`scores`) or as a sparse
//! `top_k` list where absent classes score zero.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Dense rows whose sum strays further than this from 1 get a warning.
pub const SUM_WARNING_TOLERANCE: f64 = 1e-3;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("malformed document: {0}")]
    Malformed(String),
    #[error("class_count must be positive")]
    ZeroClassCount,
    #[error("expected class count must be at least 2, got {0}")]
    ClassCountTooSmall(usize),
    #[error("empty sample id")]
    EmptySampleId,
    #[error("duplicate sample id {0:?}")]
    DuplicateSampleId(String),
    #[error("sample {id:?}: label {label} out of range for {class_count} classes")]
    LabelOutOfRange { id: String, label: i64, class_count: usize },
    #[error("class_names has {actual} entries, expected {expected}")]
    ClassNamesLength { expected: usize, actual: usize },
    #[error("model declares class_count {actual}, expected {expected}")]
    ClassCountMismatch { expected: usize, actual: usize },
    #[error("sample {id:?}: dense row has {actual} scores, expected {expected}")]
    RowLength { id: String, expected: usize, actual: usize },
    #[error("sample {id:?}: score {score} is negative or not finite")]
    BadScore { id: String, score: f64 },
    #[error("sample {id:?}: sparse class {class} out of range for {class_count} classes")]
    SparseClassOutOfRange { id: String, class: i64, class_count: usize },
    #[error("sample {id:?}: sparse class {class} listed twice")]
    DuplicateSparseClass { id: String, class: usize },
    #[error("synthetic generation needs positive counts (models={models}, classes={classes}, samples={samples})")]
    ZeroCount { models: usize, classes: usize, samples: usize },
    #[error("skill {0} is not in [0, 1]")]
    BadSkill(f64),
    #[error("expected {expected} skill values, got {actual}")]
    SkillCount { expected: usize, actual: usize },
    #[error("model {name:?} is not admissible: {report}")]
    NotAdmissible { name: String, report: ValidationReport },
    #[error("duplicate model name {0:?}")]
    DuplicateModelName(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sample {
    pub id: String,
    pub true_class: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundTruthTable {
    class_count: usize,
    samples: Vec<Sample>,
    class_names: Option<Vec<String>>,
}

impl GroundTruthTable {
    pub fn new(
        class_count: usize,
        samples: Vec<Sample>,
        class_names: Option<Vec<String>>,
    ) -> Result<Self, IngestError> {
        if class_count == 0 {
            return Err(IngestError::ZeroClassCount);
        }
        if let Some(names) = &class_names {
            if names.len() != class_count {
                return Err(IngestError::ClassNamesLength {
                    expected: class_count,
                    actual: names.len(),
                });
            }
        }
        let mut seen = HashSet::with_capacity(samples.len());
        for s in &samples {
            if s.id.is_empty() {
                return Err(IngestError::EmptySampleId);
            }
            if s.true_class >= class_count {
                return Err(IngestError::LabelOutOfRange {
                    id: s.id.clone(),
                    label: s.true_class as i64,
                    class_count,
                });
            }
            if !seen.insert(s.id.as_str()) {
                return Err(IngestError::DuplicateSampleId(s.id.clone()));
            }
        }
        Ok(Self {
            class_count,
            samples,
            class_names,
        })
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn class_names(&self) -> Option<&[String]> {
        self.class_names.as_deref()
    }

    pub fn to_json(&self) -> String {
        let doc = GroundTruthDoc {
            class_count: self.class_count as i64,
            class_names: self.class_names.clone(),
            samples: self
                .samples
                .iter()
                .map(|s| SampleDoc {
                    id: s.id.clone(),
                    label: s.true_class as i64,
                })
                .collect(),
        };
        serde_json::to_string(&doc).expect("ground truth serializes")
    }
}

/// Scores for one sample.
#[derive(Debug, Clone, PartialEq)]
pub enum Scores {
    Dense(Vec<f64>),
    /// `(class, score)` pairs with distinct classes; unlisted classes score 0.
    Sparse(Vec<(usize, f64)>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRow {
    pub id: String,
    pub scores: Scores,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelPredictions {
    model_name: String,
    class_count: usize,
    rows: Vec<PredictionRow>,
    warnings: Vec<String>,
}

impl ModelPredictions {
    pub fn new(
        model_name: impl Into<String>,
        class_count: usize,
        rows: Vec<PredictionRow>,
    ) -> Result<Self, IngestError> {
        if class_count < 2 {
            return Err(IngestError::ClassCountTooSmall(class_count));
        }
        let mut warnings = Vec::new();
        let mut seen = HashSet::with_capacity(rows.len());
        for row in &rows {
            if row.id.is_empty() {
                return Err(IngestError::EmptySampleId);
            }
            if !seen.insert(row.id.as_str()) {
                return Err(IngestError::DuplicateSampleId(row.id.clone()));
            }
            if let Some(w) = check_row(row, class_count)? {
                warnings.push(w);
            }
        }
        Ok(Self {
            model_name: model_name.into(),
            class_count,
            rows,
            warnings,
        })
    }

    pub fn model_name(&self) -> &str {
        &self.model_name
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn rows(&self) -> &[PredictionRow] {
        &self.rows
    }

    /// Dense rows whose scores do not sum to 1 (within 1e-3).
    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn to_json(&self) -> String {
        let doc = ModelDoc {
            model_name: self.model_name.clone(),
            class_count: self.class_count as i64,
            predictions: self
                .rows
                .iter()
                .map(|r| match &r.scores {
                    Scores::Dense(s) => RowDoc::Dense {
                        id: r.id.clone(),
                        scores: s.clone(),
                    },
                    Scores::Sparse(pairs) => RowDoc::Sparse {
                        id: r.id.clone(),
                        top_k: pairs.iter().map(|&(c, s)| (c as i64, s)).collect(),
                    },
                })
                .collect(),
        };
        serde_json::to_string(&doc).expect("model output serializes")
    }
}

fn check_row(row: &PredictionRow, class_count: usize) -> Result<Option<String>, IngestError> {
    let bad_score = |score: f64| IngestError::BadScore {
        id: row.id.clone(),
        score,
    };
    match &row.scores {
        Scores::Dense(scores) => {
            if scores.len() != class_count {
                return Err(IngestError::RowLength {
                    id: row.id.clone(),
                    expected: class_count,
                    actual: scores.len(),
                });
            }
            if let Some(&s) = scores.iter().find(|s| !s.is_finite() || **s < 0.0) {
                return Err(bad_score(s));
            }
            let sum: f64 = scores.iter().sum();
            if (sum - 1.0).abs() > SUM_WARNING_TOLERANCE {
                return Ok(Some(format!(
                    "sample {:?}: scores sum to {sum}, not 1",
                    row.id
                )));
            }
        }
        Scores::Sparse(pairs) => {
            let mut seen = HashSet::with_capacity(pairs.len());
            for &(class, score) in pairs {
                if class >= class_count {
                    return Err(IngestError::SparseClassOutOfRange {
                        id: row.id.clone(),
                        class: class as i64,
                        class_count,
                    });
                }
                if !score.is_finite() || score < 0.0 {
                    return Err(bad_score(score));
                }
                if !seen.insert(class) {
                    return Err(IngestError::DuplicateSparseClass {
                        id: row.id.clone(),
                        class,
                    });
                }
            }
        }
    }
    Ok(None)
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SampleDoc {
    id: String,
    label: i64,
}

#[derive(Serialize, Deserialize)]
struct GroundTruthDoc {
    class_count: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    class_names: Option<Vec<String>>,
    samples: Vec<SampleDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum RowDoc {
    Dense { id: String, scores: Vec<f64> },
    Sparse { id: String, top_k: Vec<(i64, f64)> },
}

#[derive(Serialize, Deserialize)]
struct ModelDoc {
    model_name: String,
    class_count: i64,
    predictions: Vec<RowDoc>,
}

fn malformed(e: impl std::fmt::Display) -> IngestError {
    IngestError::Malformed(e.to_string())
}

pub fn parse_ground_truth(document: &[u8]) -> Result<GroundTruthTable, IngestError> {
    let doc: GroundTruthDoc = serde_json::from_slice(document).map_err(malformed)?;
    if doc.class_count <= 0 {
        return Err(IngestError::ZeroClassCount);
    }
    let class_count = doc.class_count as usize;
    let samples = doc
        .samples
        .into_iter()
        .map(|s| {
            if s.label < 0 || s.label as u64 >= class_count as u64 {
                Err(IngestError::LabelOutOfRange {
                    id: s.id,
                    label: s.label,
                    class_count,
                })
            } else {
                Ok(Sample {
                    id: s.id,
                    true_class: s.label as usize,
                })
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    GroundTruthTable::new(class_count, samples, doc.class_names)
}

/// Parses a model-output document scored over `expected_n` classes.
pub fn parse_model_output(
    document: &[u8],
    expected_n: usize,
) -> Result<ModelPredictions, IngestError> {
    if expected_n < 2 {
        return Err(IngestError::ClassCountTooSmall(expected_n));
    }
    let doc: ModelDoc = serde_json::from_slice(document).map_err(malformed)?;
    if doc.class_count < 0 || doc.class_count as u64 != expected_n as u64 {
        return Err(IngestError::ClassCountMismatch {
            expected: expected_n,
            actual: doc.class_count.max(0) as usize,
        });
    }
    let rows = doc
        .predictions
        .into_iter()
        .map(|row| match row {
            RowDoc::Dense { id, scores } => Ok(PredictionRow {
                id,
                scores: Scores::Dense(scores),
            }),
            RowDoc::Sparse { id, top_k } => {
                let pairs = top_k
                    .into_iter()
                    .map(|(class, score)| {
                        if class < 0 || class as u64 >= expected_n as u64 {
                            Err(IngestError::SparseClassOutOfRange {
                                id: id.clone(),
                                class,
                                class_count: expected_n,
                            })
                        } else {
                            Ok((class as usize, score))
                        }
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(PredictionRow {
                    id,
                    scores: Scores::Sparse(pairs),
                })
            }
        })
        .collect::<Result<Vec<_>, IngestError>>()?;
    ModelPredictions::new(doc.model_name, expected_n, rows)
}

/// Reads only the declared `class_count` of a model document, for callers
/// that want to report a mismatch before full validation.
pub fn peek_class_count(document: &[u8]) -> Result<i64, IngestError> {
    #[derive(Deserialize)]
    struct Header {
        class_count: i64,
    }
    let header: Header = serde_json::from_slice(document).map_err(malformed)?;
    Ok(header.class_count)
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    /// In ground truth but not scored by the model, in ground-truth order.
    pub missing: Vec<String>,
    /// Scored by the model but unknown to the ground truth, in model order.
    pub extra: Vec<String>,
    /// `(expected, actual)` when the class counts differ.
    pub class_count_mismatch: Option<(usize, usize)>,
}

impl ValidationReport {
    pub fn is_admissible(&self) -> bool {
        self.missing.is_empty() && self.extra.is_empty() && self.class_count_mismatch.is_none()
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.is_admissible() {
            return write!(f, "admissible");
        }
        let mut parts = Vec::new();
        if let Some((expected, actual)) = self.class_count_mismatch {
            parts.push(format!("class count {actual}, expected {expected}"));
        }
        if !self.missing.is_empty() {
            parts.push(format!("{} missing sample(s) (first {:?})", self.missing.len(), self.missing[0]));
        }
        if !self.extra.is_empty() {
            parts.push(format!("{} extra sample(s) (first {:?})", self.extra.len(), self.extra[0]));
        }
        write!(f, "{}", parts.join("; "))
    }
}

pub fn validate_bundle(gt: &GroundTruthTable, model: &ModelPredictions) -> ValidationReport {
    let model_ids: HashSet<&str> = model.rows.iter().map(|r| r.id.as_str()).collect();
    let gt_ids: HashSet<&str> = gt.samples.iter().map(|s| s.id.as_str()).collect();
    ValidationReport {
        missing: gt
            .samples
            .iter()
            .filter(|s| !model_ids.contains(s.id.as_str()))
            .map(|s| s.id.clone())
            .collect(),
        extra: model
            .rows
            .iter()
            .filter(|r| !gt_ids.contains(r.id.as_str()))
            .map(|r| r.id.clone())
            .collect(),
        class_count_mismatch: (gt.class_count != model.class_count)
            .then_some((gt.class_count, model.class_count)),
    }
}

/// Ground truth plus admissible models in import order.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetBundle {
    ground_truth: GroundTruthTable,
    models: Vec<ModelPredictions>,
}

impl DatasetBundle {
    pub fn new(
        ground_truth: GroundTruthTable,
        models: Vec<ModelPredictions>,
    ) -> Result<Self, IngestError> {
        let mut names = HashSet::new();
        for m in &models {
            let report = validate_bundle(&ground_truth, m);
            if !report.is_admissible() {
                return Err(IngestError::NotAdmissible {
                    name: m.model_name.clone(),
                    report,
                });
            }
            if !names.insert(m.model_name.as_str()) {
                return Err(IngestError::DuplicateModelName(m.model_name.clone()));
            }
        }
        Ok(Self {
            ground_truth,
            models,
        })
    }

    pub fn ground_truth(&self) -> &GroundTruthTable {
        &self.ground_truth
    }

    pub fn models(&self) -> &[ModelPredictions] {
        &self.models
    }

    pub fn class_count(&self) -> usize {
        self.ground_truth.class_count
    }
}

/// How synthetic rows are written.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScoreLayout {
    /// All `N` scores.
    Dense,
    /// The chosen class plus up to `k - 1` distractors.
    TopK(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub models: usize,
    pub classes: usize,
    pub samples: usize,
    pub seed: u64,
    /// One top-1 hit probability per model.
    pub skills: Vec<f64>,
    pub layout: ScoreLayout,
}

impl SyntheticConfig {
    pub fn uniform(models: usize, classes: usize, samples: usize, seed: u64, skill: f64) -> Self {
        Self {
            models,
            classes,
            samples,
            seed,
            skills: vec![skill; models],
            layout: ScoreLayout::TopK(5),
        }
    }
}

/// Mass placed on the class a synthetic model picks as its top-1.
pub const SYNTHETIC_TOP_MASS: f64 = 0.7;

/// Deterministic fixture bundle: samples are assigned round-robin to classes
/// and each model hits the true class with its skill probability, otherwise
/// it picks a uniformly random wrong class.
pub fn generate_synthetic(cfg: &SyntheticConfig) -> Result<DatasetBundle, IngestError> {
    if cfg.models == 0 || cfg.classes == 0 || cfg.samples == 0 {
        return Err(IngestError::ZeroCount {
            models: cfg.models,
            classes: cfg.classes,
            samples: cfg.samples,
        });
    }
    if cfg.skills.len() != cfg.models {
        return Err(IngestError::SkillCount {
            expected: cfg.models,
            actual: cfg.skills.len(),
        });
    }
    if let Some(&s) = cfg.skills.iter().find(|s| !(0.0..=1.0).contains(*s)) {
        return Err(IngestError::BadSkill(s));
    }
    let n = cfg.classes;
    let width = cfg.samples.to_string().len();
    let samples: Vec<Sample> = (0..cfg.samples)
        .map(|i| Sample {
            id: format!("s{i:0width$}"),
            true_class: i % n,
        })
        .collect();
    let ground_truth = GroundTruthTable::new(n, samples, None)?;

    let name_width = cfg.models.to_string().len().max(2);
    let mut models = Vec::with_capacity(cfg.models);
    for (m, &skill) in cfg.skills.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(m as u64);
        let rows = ground_truth
            .samples()
            .iter()
            .map(|s| {
                let chosen = if n == 1 || rng.gen_bool(skill) {
                    s.true_class
                } else {
                    let r = rng.gen_range(0..n - 1);
                    if r >= s.true_class {
                        r + 1
                    } else {
                        r
                    }
                };
                PredictionRow {
                    id: s.id.clone(),
                    scores: synthetic_scores(&mut rng, n, chosen, cfg.layout),
                }
            })
            .collect();
        // class_count 1 cannot form a valid model document; keep the raw rows.
        let model = if n >= 2 {
            ModelPredictions::new(format!("model_{m:0name_width$}"), n, rows)?
        } else {
            ModelPredictions {
                model_name: format!("model_{m:0name_width$}"),
                class_count: n,
                rows,
                warnings: Vec::new(),
            }
        };
        models.push(model);
    }
    DatasetBundle::new(ground_truth, models)
}

fn synthetic_scores(rng: &mut ChaCha8Rng, n: usize, chosen: usize, layout: ScoreLayout) -> Scores {
    let rest = 1.0 - SYNTHETIC_TOP_MASS;
    match layout {
        ScoreLayout::Dense => {
            let other = if n > 1 { rest / (n - 1) as f64 } else { 0.0 };
            let mut scores = vec![other; n];
            scores[chosen] = if n > 1 { SYNTHETIC_TOP_MASS } else { 1.0 };
            Scores::Dense(scores)
        }
        ScoreLayout::TopK(k) => {
            let k = k.clamp(1, n);
            let mut pairs = Vec::with_capacity(k);
            pairs.push((chosen, SYNTHETIC_TOP_MASS));
            let mut used = HashSet::with_capacity(k);
            used.insert(chosen);
            let share = rest / (k.max(2) - 1) as f64;
            while pairs.len() < k {
                let c = rng.gen_range(0..n);
                if used.insert(c) {
                    pairs.push((c, share));
                }
            }
            Scores::Sparse(pairs)
        }
    }
}
