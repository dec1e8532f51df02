//! Inter-model comparison of many-class classifiers: ingestion of prediction
//! files, per-class evaluation metrics, concentric radial layout and SVG
//! export.

pub mod ingest;
pub mod layout;
pub mod metrics;
pub mod svg;

pub use ingest::{
    generate_synthetic, parse_ground_truth, parse_model_output, validate_bundle, DatasetBundle,
    GroundTruthTable, ModelPredictions, ScoreLayout, Scores, SyntheticConfig, ValidationReport,
};
pub use layout::{build_bar_scene, build_line_scene, build_scene, LayoutScene, Mode, ViewConfig};
pub use metrics::{
    compute_all_matrices, compute_metric_matrix, confusion_all, metric_from_counts,
    ConfusionCounts, MetricId, MetricMatrix,
};
pub use svg::{render_svg, SvgStyle};
