//! Per-class one-vs-rest confusion counts and the seven class-level metrics.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{
    validate_bundle, DatasetBundle, GroundTruthTable, ModelPredictions, Scores, ValidationReport,
};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("model {name:?} is not admissible: {report}")]
    NotAdmissible { name: String, report: ValidationReport },
    #[error("class {class} out of range for {class_count} classes")]
    ClassOutOfRange { class: usize, class_count: usize },
    #[error("unknown metric {0:?}; valid metrics: {names}", names = MetricId::names().join(", "))]
    UnknownMetric(String),
    #[error("counts for {models} model(s) but {names} name(s)")]
    ShapeMismatch { models: usize, names: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricId {
    Accuracy,
    Precision,
    Recall,
    F1,
    Specificity,
    FalsePositiveRate,
    FalseNegativeRate,
}

impl MetricId {
    pub const ALL: [MetricId; 7] = [
        MetricId::Accuracy,
        MetricId::Precision,
        MetricId::Recall,
        MetricId::F1,
        MetricId::Specificity,
        MetricId::FalsePositiveRate,
        MetricId::FalseNegativeRate,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MetricId::Accuracy => "accuracy",
            MetricId::Precision => "precision",
            MetricId::Recall => "recall",
            MetricId::F1 => "f1",
            MetricId::Specificity => "specificity",
            MetricId::FalsePositiveRate => "false_positive_rate",
            MetricId::FalseNegativeRate => "false_negative_rate",
        }
    }

    pub fn names() -> Vec<&'static str> {
        Self::ALL.iter().map(|m| m.as_str()).collect()
    }
}

impl fmt::Display for MetricId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MetricId {
    type Err = MetricsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| MetricsError::UnknownMetric(s.to_string()))
    }
}

/// One-vs-rest counts for a single class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    /// Samples whose true label is this class.
    pub fn support(&self) -> u64 {
        self.tp + self.fn_
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricValue {
    pub value: f64,
    /// The defining ratio had a zero denominator; `value` is 0.
    pub degenerate: bool,
}

/// Arg-max class of a row; ties go to the lowest index and an empty sparse
/// row resolves to class 0.
pub fn top1(scores: &Scores) -> usize {
    match scores {
        Scores::Dense(s) => {
            let mut best = 0;
            for (i, &v) in s.iter().enumerate().skip(1) {
                if v > s[best] {
                    best = i;
                }
            }
            best
        }
        Scores::Sparse(pairs) => {
            let mut best: Option<(usize, f64)> = None;
            for &(c, v) in pairs {
                best = match best {
                    Some((bc, bv)) if bv > v || (bv == v && bc < c) => Some((bc, bv)),
                    _ => Some((c, v)),
                };
            }
            // A zero maximum means every class scores 0, so class 0 wins.
            match best {
                Some((c, v)) if v > 0.0 => c,
                _ => 0,
            }
        }
    }
}

/// Top-1 prediction for each ground-truth sample, in ground-truth order.
pub fn predicted_classes(
    gt: &GroundTruthTable,
    model: &ModelPredictions,
) -> Result<Vec<usize>, MetricsError> {
    let report = validate_bundle(gt, model);
    if !report.is_admissible() {
        return Err(MetricsError::NotAdmissible {
            name: model.model_name().to_string(),
            report,
        });
    }
    let by_id: HashMap<&str, &Scores> = model
        .rows()
        .iter()
        .map(|r| (r.id.as_str(), &r.scores))
        .collect();
    Ok(gt
        .samples()
        .iter()
        .map(|s| top1(by_id[s.id.as_str()]))
        .collect())
}

/// Single pass over `(truth, prediction)` pairs.
pub fn confusion_from_labels(
    truths: impl IntoIterator<Item = usize>,
    predictions: impl IntoIterator<Item = usize>,
    class_count: usize,
) -> Vec<ConfusionCounts> {
    let mut counts = vec![ConfusionCounts::default(); class_count];
    let mut total = 0u64;
    for (t, p) in truths.into_iter().zip(predictions) {
        total += 1;
        if t == p {
            counts[t].tp += 1;
        } else {
            counts[t].fn_ += 1;
            counts[p].fp += 1;
        }
    }
    for c in &mut counts {
        c.tn = total - c.tp - c.fp - c.fn_;
    }
    counts
}

pub fn confusion_all(
    gt: &GroundTruthTable,
    model: &ModelPredictions,
) -> Result<Vec<ConfusionCounts>, MetricsError> {
    let predictions = predicted_classes(gt, model)?;
    Ok(confusion_from_labels(
        gt.samples().iter().map(|s| s.true_class),
        predictions,
        gt.class_count(),
    ))
}

fn ratio(num: u64, den: u64) -> MetricValue {
    if den == 0 {
        MetricValue {
            value: 0.0,
            degenerate: true,
        }
    } else {
        MetricValue {
            value: num as f64 / den as f64,
            degenerate: false,
        }
    }
}

pub fn metric_from_counts(metric: MetricId, c: &ConfusionCounts) -> MetricValue {
    match metric {
        MetricId::Accuracy => ratio(c.tp + c.tn, c.total()),
        MetricId::Precision => ratio(c.tp, c.tp + c.fp),
        MetricId::Recall => ratio(c.tp, c.tp + c.fn_),
        // P + R = 0 exactly when tp = 0. Otherwise 2PR/(P+R) reduces to
        // 2tp/(2tp+fp+fn), and the integer form keeps f1 between precision
        // and recall after rounding.
        MetricId::F1 if c.tp == 0 => ratio(0, 0),
        MetricId::F1 => ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn_),
        MetricId::Specificity => ratio(c.tn, c.tn + c.fp),
        MetricId::FalsePositiveRate => ratio(c.fp, c.fp + c.tn),
        MetricId::FalseNegativeRate => ratio(c.fn_, c.fn_ + c.tp),
    }
}

/// Metric values indexed `[model][class]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricMatrix {
    pub metric: MetricId,
    pub model_names: Vec<String>,
    pub class_count: usize,
    pub values: Vec<Vec<f64>>,
    pub degenerate: Vec<Vec<bool>>,
}

impl MetricMatrix {
    /// Builds a matrix from per-model counts already in hand.
    pub fn from_counts(
        metric: MetricId,
        model_names: Vec<String>,
        class_count: usize,
        counts: &[&[ConfusionCounts]],
    ) -> Result<Self, MetricsError> {
        if counts.len() != model_names.len() {
            return Err(MetricsError::ShapeMismatch {
                models: counts.len(),
                names: model_names.len(),
            });
        }
        let mut values = Vec::with_capacity(counts.len());
        let mut degenerate = Vec::with_capacity(counts.len());
        for per_class in counts {
            let (v, d): (Vec<f64>, Vec<bool>) = per_class
                .iter()
                .map(|c| {
                    let mv = metric_from_counts(metric, c);
                    (mv.value, mv.degenerate)
                })
                .unzip();
            values.push(v);
            degenerate.push(d);
        }
        Ok(Self {
            metric,
            model_names,
            class_count,
            values,
            degenerate,
        })
    }

    pub fn model_count(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn class_detail(&self, class: usize) -> Result<Vec<ClassDetailEntry>, MetricsError> {
        if class >= self.class_count {
            return Err(MetricsError::ClassOutOfRange {
                class,
                class_count: self.class_count,
            });
        }
        Ok(self
            .model_names
            .iter()
            .enumerate()
            .map(|(m, name)| ClassDetailEntry {
                model: name.clone(),
                value: self.values[m][class],
                degenerate: self.degenerate[m][class],
            })
            .collect())
    }

    /// `{"metric", "models", "n", "values", "degenerate"}`.
    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Doc<'a> {
            metric: MetricId,
            models: &'a [String],
            n: usize,
            values: &'a [Vec<f64>],
            degenerate: &'a [Vec<bool>],
        }
        serde_json::to_string(&Doc {
            metric: self.metric,
            models: &self.model_names,
            n: self.class_count,
            values: &self.values,
            degenerate: &self.degenerate,
        })
        .expect("matrix serializes")
    }

    /// CSV with header `model,class,value,degenerate`, values to 12
    /// significant digits.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["model", "class", "value", "degenerate"])
            .expect("in-memory write");
        for (m, name) in self.model_names.iter().enumerate() {
            for c in 0..self.class_count {
                w.write_record([
                    name.as_str(),
                    &c.to_string(),
                    &format_significant(self.values[m][c], 12),
                    if self.degenerate[m][c] { "true" } else { "false" },
                ])
                .expect("in-memory write");
            }
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassDetailEntry {
    pub model: String,
    pub value: f64,
    pub degenerate: bool,
}

/// Per-model confusion counts for every model of a bundle.
pub fn bundle_counts(bundle: &DatasetBundle) -> Result<Vec<Vec<ConfusionCounts>>, MetricsError> {
    bundle
        .models()
        .iter()
        .map(|m| confusion_all(bundle.ground_truth(), m))
        .collect()
}

fn model_names(bundle: &DatasetBundle) -> Vec<String> {
    bundle
        .models()
        .iter()
        .map(|m| m.model_name().to_string())
        .collect()
}

pub fn compute_metric_matrix(
    metric: MetricId,
    bundle: &DatasetBundle,
) -> Result<MetricMatrix, MetricsError> {
    let counts = bundle_counts(bundle)?;
    let refs: Vec<&[ConfusionCounts]> = counts.iter().map(Vec::as_slice).collect();
    MetricMatrix::from_counts(metric, model_names(bundle), bundle.class_count(), &refs)
}

/// All seven matrices, counting each model once.
pub fn compute_all_matrices(bundle: &DatasetBundle) -> Result<Vec<MetricMatrix>, MetricsError> {
    let counts = bundle_counts(bundle)?;
    let refs: Vec<&[ConfusionCounts]> = counts.iter().map(Vec::as_slice).collect();
    let names = model_names(bundle);
    MetricId::ALL
        .iter()
        .map(|&metric| MetricMatrix::from_counts(metric, names.clone(), bundle.class_count(), &refs))
        .collect()
}

pub fn class_detail(
    metric: MetricId,
    class: usize,
    bundle: &DatasetBundle,
) -> Result<Vec<ClassDetailEntry>, MetricsError> {
    if class >= bundle.class_count() {
        return Err(MetricsError::ClassOutOfRange {
            class,
            class_count: bundle.class_count(),
        });
    }
    compute_metric_matrix(metric, bundle)?.class_detail(class)
}

/// `printf("%.{digits}g")`.
pub fn format_significant(value: f64, digits: usize) -> String {
    if value == 0.0 {
        return "0".to_string();
    }
    if !value.is_finite() {
        return value.to_string();
    }
    let precision = digits.max(1) - 1;
    let sci = format!("{value:.precision$e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= digits as i32 {
        let mantissa = trim_fraction(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (precision as i32 - exp).max(0) as usize;
        trim_fraction(&format!("{value:.decimals$}")).to_string()
    }
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}
