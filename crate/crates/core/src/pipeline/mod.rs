//! End-to-end orchestration over a model bundle directory.
//!
//! Stages communicate only through files in the bundle:
//! `extract` writes grids, PCA models, reference banks and HMM features,
//! `train` writes classifiers and training-set scores, `fuse` writes the
//! ensemble weights and `eval` writes the report.

mod bundle;
mod config;
mod report;
mod stages;
mod synthetic;

pub use bundle::{
    bank_file, features_file, grids_file, json_bytes, jsonl_bytes, pca_file, scores_file, svm_file, Bundle, Manifest,
    CONFIG, DATASET, FUSE_LOG, MANIFEST, REPORT_JSON, REPORT_TEXT, SPLIT, WEIGHTS,
};
pub use config::{DescriptorConfig, PathsConfig, PipelineConfig, SplitConfig, ALLOWED_GRIDS};
pub use report::{ColumnScores, EvaluationReport, COMBINE};
pub use stages::{
    best_grids, eval, extract, fuse, predict, run_all, sweep, sweep_csv, train, Channel, DatasetIndex, FeatureRecord,
    GridRecord, ImageInfo, Prediction, RunOutcome, Scored, SweepRow, TrainSummary, TrainedModels,
};
pub use synthetic::{grating_dataset, write_dataset, GratingSpec};
